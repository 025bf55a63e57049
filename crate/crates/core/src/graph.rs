//! k-NN adjacency, Parzen-window density, and normalized-cut scoring.

use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::{squared_distance, Scalar};

/// Lower bound applied to the kernel width when every arc has (near) zero length.
pub const SIGMA_FLOOR: f64 = 1e-12;
/// Offset in the cut similarity `1 / (d + ε)`.
pub const CUT_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("k = {k} is out of range for {n} points (need 1 <= k < n)")]
    KOutOfRange { k: usize, n: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch { index: usize, expected: usize, found: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("labeling covers {found} nodes, graph has {expected}")]
    LabelLength { expected: usize, found: usize },
    #[error("cluster id {0} has no members")]
    EmptyCluster(usize),
    #[error("arc ({from}, {to}) has no reverse arc of equal length")]
    Asymmetric { from: usize, to: usize },
    #[error("node {0} has no arcs")]
    Isolated(usize),
}

/// Checks that every point has the same dimension and finite coordinates.
pub fn validate_points<T: Scalar>(points: &[Vec<T>]) -> Result<usize, GraphError> {
    let dim = points.first().map_or(0, Vec::len);
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(GraphError::DimensionMismatch { index, expected: dim, found: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(GraphError::NonFinite { index });
        }
    }
    Ok(dim)
}

/// Sorted nearest-neighbor lists for every point, up to `k_max` entries each.
/// Ordered by ascending `(distance, index)`; a point is never its own neighbor.
#[derive(Debug, Clone)]
pub struct NeighborTable<T> {
    lists: Vec<Vec<(usize, T)>>,
    k_max: usize,
}

impl<T: Scalar> NeighborTable<T> {
    pub fn build(points: &[Vec<T>], k_max: usize) -> Result<Self, GraphError> {
        let n = points.len();
        if k_max < 1 || k_max >= n {
            return Err(GraphError::KOutOfRange { k: k_max, n });
        }
        validate_points(points)?;
        let lists = (0..n)
            .into_par_iter()
            .map(|s| {
                let mut cand: Vec<(T, usize)> = (0..n)
                    .filter(|&t| t != s)
                    .map(|t| (squared_distance(&points[s], &points[t]), t))
                    .collect();
                let by_key = |a: &(T, usize), b: &(T, usize)| {
                    a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1))
                };
                if k_max < cand.len() {
                    cand.select_nth_unstable_by(k_max - 1, by_key);
                    cand.truncate(k_max);
                }
                cand.sort_unstable_by(by_key);
                cand.into_iter().map(|(d2, t)| (t, d2.sqrt())).collect()
            })
            .collect();
        Ok(Self { lists, k_max })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// The `k` nearest neighbors of `s`.
    pub fn nearest(&self, s: usize, k: usize) -> &[(usize, T)] {
        &self.lists[s][..k.min(self.lists[s].len())]
    }

    /// The symmetric closure of the `k`-NN relation, with density populated.
    pub fn graph(&self, k: usize) -> Result<KnnGraph<T>, GraphError> {
        let n = self.lists.len();
        if k < 1 || k > self.k_max {
            return Err(GraphError::KOutOfRange { k, n });
        }
        let mut reverse: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (s, list) in self.lists.iter().enumerate() {
            for &(t, d) in &list[..k] {
                reverse[t].push((s, d));
            }
        }
        let mut mark = vec![usize::MAX; n];
        let arcs = reverse
            .into_iter()
            .enumerate()
            .map(|(s, rev)| {
                let mut out: Vec<(usize, T)> = self.lists[s][..k].to_vec();
                for &(t, _) in &out {
                    mark[t] = s;
                }
                out.extend(rev.into_iter().filter(|&(t, _)| mark[t] != s));
                out
            })
            .collect();
        Ok(KnnGraph::assemble(k, arcs))
    }
}

/// Symmetrically closed k-NN graph with per-node density.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph<T> {
    k: usize,
    arcs: Vec<Vec<(usize, T)>>,
    d_f: T,
    sigma: T,
    rho: Vec<T>,
}

impl<T: Scalar> KnnGraph<T> {
    fn assemble(k: usize, arcs: Vec<Vec<(usize, T)>>) -> Self {
        let d_f = arcs
            .iter()
            .flatten()
            .map(|&(_, d)| d)
            .fold(T::zero(), T::max);
        let sigma = kernel_width(d_f);
        let mut g = Self { k, arcs, d_f, sigma, rho: Vec::new() };
        g.rho = compute_pdf(&g);
        g
    }

    /// Builds a graph from explicit arc lists. Every arc must have a reverse
    /// arc of identical length and every node at least one arc (a lone node
    /// is allowed and gets the kernel peak as its density).
    pub fn from_arcs(k: usize, arcs: Vec<Vec<(usize, T)>>) -> Result<Self, GraphError> {
        for (s, list) in arcs.iter().enumerate() {
            if list.is_empty() && arcs.len() > 1 {
                return Err(GraphError::Isolated(s));
            }
            for &(t, d) in list {
                let back = arcs.get(t).and_then(|l| l.iter().find(|&&(u, _)| u == s));
                if back.is_none_or(|&(_, e)| e != d) {
                    return Err(GraphError::Asymmetric { from: s, to: t });
                }
            }
        }
        Ok(Self::assemble(k, arcs))
    }

    /// Replaces the density values; used to pin specific plateaus in tests.
    #[cfg(test)]
    pub(crate) fn with_density(mut self, rho: Vec<T>) -> Self {
        assert_eq!(rho.len(), self.arcs.len());
        self.rho = rho;
        self
    }

    pub fn n(&self) -> usize {
        self.arcs.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Arcs leaving `s` as `(target, distance)`.
    pub fn arcs(&self, s: usize) -> &[(usize, T)] {
        &self.arcs[s]
    }

    pub fn neighbors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs[s].iter().map(|&(t, _)| t)
    }

    /// Longest arc length.
    pub fn d_f(&self) -> T {
        self.d_f
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.iter().map(Vec::len).sum()
    }
}

/// `σ = d_f / 3`, floored at [`SIGMA_FLOOR`] when `d_f` is below it.
pub fn kernel_width<T: Scalar>(d_f: T) -> T {
    let floor = T::lit(SIGMA_FLOOR);
    if d_f < floor {
        floor
    } else {
        d_f / T::lit(3.0)
    }
}

/// Closure of the `k`-NN relation over `points` under Euclidean distance.
pub fn build_knn_graph<T: Scalar>(points: &[Vec<T>], k: usize) -> Result<KnnGraph<T>, GraphError> {
    NeighborTable::build(points, k)?.graph(k)
}

/// Gaussian Parzen density over each node's adjacency:
/// `ρ(s) = Σ_t exp(−d²/2σ²) / (√(2πσ²) · |A(s)|)`.
pub fn compute_pdf<T: Scalar>(g: &KnnGraph<T>) -> Vec<T> {
    let two_var = T::lit(2.0) * g.sigma * g.sigma;
    let norm = (T::lit(std::f64::consts::PI) * two_var).sqrt();
    g.arcs
        .iter()
        .map(|list| {
            if list.is_empty() {
                return T::one() / norm;
            }
            let sum: T = list.iter().map(|&(_, d)| (-(d * d) / two_var).exp()).sum();
            sum / (norm * T::from_usize_lossy(list.len()))
        })
        .collect()
}

/// Cluster assignment with every id in `[0, c)` used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    labels: Vec<usize>,
    c: usize,
}

impl ClusterLabeling {
    pub fn new(labels: Vec<usize>) -> Result<Self, GraphError> {
        let c = labels.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; c];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(id) = seen.iter().position(|&s| !s) {
            return Err(GraphError::EmptyCluster(id));
        }
        Ok(Self { labels, c })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn cluster_count(&self) -> usize {
        self.c
    }
}

/// Shi–Malik normalized cut with similarity `1 / (d + ε)`, [`CUT_EPS`].
pub fn normalized_cut<T: Scalar>(g: &KnnGraph<T>, l: &ClusterLabeling) -> Result<T, GraphError> {
    normalized_cut_with_eps(g, l, T::lit(CUT_EPS))
}

/// [`normalized_cut`] with an explicit similarity offset `eps`.
pub fn normalized_cut_with_eps<T: Scalar>(g: &KnnGraph<T>, l: &ClusterLabeling, eps: T) -> Result<T, GraphError> {
    if l.labels.len() != g.n() {
        return Err(GraphError::LabelLength { expected: g.n(), found: l.labels.len() });
    }
    let mut cut = vec![T::zero(); l.c];
    let mut assoc = vec![T::zero(); l.c];
    for (s, list) in g.arcs.iter().enumerate() {
        let c = l.labels[s];
        for &(t, d) in list {
            let w = T::one() / (d + eps);
            if l.labels[t] == c {
                assoc[c] = assoc[c] + w;
            } else {
                cut[c] = cut[c] + w;
            }
        }
    }
    Ok(cut
        .iter()
        .zip(&assoc)
        .map(|(&c, &a)| if c + a > T::zero() { c / (c + a) } else { T::zero() })
        .sum())
}
