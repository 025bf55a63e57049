//! Unsupervised optimum-path forest clustering, best-k selection by normalized
//! cut, and the seeded k-means baseline.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{normalized_cut, validate_points, ClusterLabeling, GraphError, KnnGraph, NeighborTable};
use crate::scalar::{squared_distance, Ordered, Scalar};

/// Handicap used when no adjacent pair has differing density.
pub const DELTA_FALLBACK: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("k_max = {k_max} is out of range for {n} points (need 1 <= k_max <= n - 1)")]
    KMaxOutOfRange { k_max: usize, n: usize },
    #[error("k = {k} is out of range for {n} points (need 1 <= k <= n)")]
    KOutOfRange { k: usize, n: usize },
    #[error("deadline reached after evaluating k = 1..={completed}")]
    DeadlineExceeded { completed: usize },
}

/// Optimum-path forest: one tree per prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest<T> {
    /// `None` exactly for prototypes.
    pub predecessor: Vec<Option<usize>>,
    pub cost: Vec<T>,
    pub cluster_label: Vec<usize>,
    /// Roots, indexed by cluster label (discovery order).
    pub prototypes: Vec<usize>,
    pub k_used: usize,
}

impl<T: Scalar> Forest<T> {
    pub fn n(&self) -> usize {
        self.cost.len()
    }

    pub fn cluster_count(&self) -> usize {
        self.prototypes.len()
    }

    /// Prototype indices in ascending order.
    pub fn sorted_prototypes(&self) -> Vec<usize> {
        let mut p = self.prototypes.clone();
        p.sort_unstable();
        p
    }

    pub fn labeling(&self) -> ClusterLabeling {
        ClusterLabeling::new(self.cluster_label.clone()).expect("every tree has a root")
    }

    /// Root reached by following predecessors from `t`, or `None` on a cycle.
    pub fn root_of(&self, mut t: usize) -> Option<usize> {
        for _ in 0..=self.n() {
            match self.predecessor[t] {
                None => return Some(t),
                Some(p) => t = p,
            }
        }
        None
    }
}

/// Smallest non-zero density gap across an arc, or [`DELTA_FALLBACK`] on a
/// pure plateau.
pub fn compute_delta<T: Scalar>(g: &KnnGraph<T>) -> T {
    let rho = g.rho();
    let mut delta = T::infinity();
    for s in 0..g.n() {
        for t in g.neighbors(s) {
            let gap = (rho[t] - rho[s]).abs();
            if gap > T::zero() && gap < delta {
                delta = gap;
            }
        }
    }
    if delta.is_finite() {
        delta
    } else {
        T::lit(DELTA_FALLBACK)
    }
}

/// Maximizes the path value `min(handicapped root density, densities along the path)`
/// over the graph with a max-priority propagation. Equal values leave the
/// queue in ascending node index.
pub fn cluster_with_k<T: Scalar>(g: &KnnGraph<T>) -> Forest<T> {
    let n = g.n();
    let rho = g.rho();
    let delta = compute_delta(g);

    let mut cost: Vec<T> = rho.iter().map(|&r| r - delta).collect();
    let mut predecessor = vec![None; n];
    let mut label = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut prototypes = Vec::new();

    let mut heap: BinaryHeap<(Ordered<T>, Reverse<usize>)> =
        cost.iter().enumerate().map(|(t, &c)| (Ordered(c), Reverse(t))).collect();

    while let Some((Ordered(value), Reverse(s))) = heap.pop() {
        if done[s] || value != cost[s] {
            continue;
        }
        done[s] = true;
        if predecessor[s].is_none() {
            cost[s] = rho[s];
            label[s] = prototypes.len();
            prototypes.push(s);
        }
        for t in g.neighbors(s) {
            if done[t] {
                continue;
            }
            let offer = cost[s].min(rho[t]);
            if offer > cost[t] {
                cost[t] = offer;
                predecessor[t] = Some(s);
                label[t] = label[s];
                heap.push((Ordered(offer), Reverse(t)));
            }
        }
    }

    Forest { predecessor, cost, cluster_label: label, prototypes, k_used: g.k() }
}

/// Score of one candidate adjacency size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub clusters: usize,
    pub ncut: f64,
}

/// All candidate scores plus the selected forest.
#[derive(Debug, Clone)]
pub struct KSweep<T> {
    pub scores: Vec<KScore>,
    pub forest: Forest<T>,
}

/// Limits for [`sweep_k`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SweepOptions {
    /// Abort with [`ClusterError::DeadlineExceeded`] once this instant passes.
    pub deadline: Option<Instant>,
}

/// Strict preference between two candidates: multi-cluster beats single-cluster,
/// then lower Ncut, then smaller k.
fn better(a: &KScore, b: &KScore) -> bool {
    let (am, bm) = (a.clusters > 1, b.clusters > 1);
    if am != bm {
        return am;
    }
    match a.ncut.partial_cmp(&b.ncut) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Greater) => false,
        _ => a.k < b.k,
    }
}

// Concurrent graphs are bounded by this many arcs.
const ARC_BUDGET: usize = 24_000_000;

/// Clusters with every `k` in `[1, k_max]` and keeps the forest of minimal
/// normalized cut. Single-cluster outcomes only win when every `k` yields one
/// cluster; ties go to the smaller `k`.
pub fn sweep_k<T: Scalar>(points: &[Vec<T>], k_max: usize, opts: SweepOptions) -> Result<KSweep<T>, ClusterError> {
    let n = points.len();
    if k_max < 1 || k_max >= n {
        return Err(ClusterError::KMaxOutOfRange { k_max, n });
    }
    let table = NeighborTable::build(points, k_max)?;
    let threads = rayon::current_num_threads().max(1);

    let mut scores = Vec::with_capacity(k_max);
    let mut best: Option<(KScore, Forest<T>)> = None;
    let mut k = 1;
    while k <= k_max {
        if let Some(deadline) = opts.deadline {
            if Instant::now() >= deadline {
                return Err(ClusterError::DeadlineExceeded { completed: k - 1 });
            }
        }
        let per_graph = 2 * n * k;
        let width = (ARC_BUDGET / per_graph.max(1)).clamp(1, threads);
        let hi = (k + width - 1).min(k_max);
        let batch: Vec<(KScore, Forest<T>)> = (k..=hi)
            .into_par_iter()
            .map(|kk| -> Result<_, ClusterError> {
                let g = table.graph(kk)?;
                let forest = cluster_with_k(&g);
                let ncut = normalized_cut(&g, &forest.labeling())?.as_f64();
                Ok((KScore { k: kk, clusters: forest.cluster_count(), ncut }, forest))
            })
            .collect::<Result<_, _>>()?;
        for (score, forest) in batch {
            scores.push(score);
            if best.as_ref().is_none_or(|(b, _)| better(&score, b)) {
                best = Some((score, forest));
            }
        }
        k = hi + 1;
    }
    let (_, forest) = best.expect("k_max >= 1");
    Ok(KSweep { scores, forest })
}

/// Best-k optimum-path forest clustering over `[1, k_max]`.
pub fn cluster_best_k<T: Scalar>(points: &[Vec<T>], k_max: usize) -> Result<Forest<T>, ClusterError> {
    Ok(sweep_k(points, k_max, SweepOptions::default())?.forest)
}

/// Lloyd k-means result.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel<T> {
    pub centroids: Vec<Vec<T>>,
    pub inertia: T,
    pub iterations_run: usize,
    /// Final assignment of each input point.
    pub labels: Vec<usize>,
    /// Inertia after the initial assignment and after every iteration.
    pub inertia_history: Vec<T>,
}

fn nearest<T: Scalar>(x: &[T], centroids: &[Vec<T>]) -> (usize, T) {
    let mut best = (0, T::infinity());
    for (j, c) in centroids.iter().enumerate() {
        let d = squared_distance(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Nearest-centroid assignment, then every empty cluster takes over the point
/// farthest from its centroid among clusters with at least two members.
fn assign<T: Scalar>(points: &[Vec<T>], centroids: &mut [Vec<T>]) -> (Vec<usize>, T) {
    let (mut labels, mut dists): (Vec<usize>, Vec<T>) =
        points.par_iter().map(|p| nearest(p, centroids)).unzip();
    let mut sizes = vec![0usize; centroids.len()];
    for &l in &labels {
        sizes[l] += 1;
    }
    while let Some(empty) = sizes.iter().position(|&s| s == 0) {
        let donor = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(j) if dists[j] >= dists[i] => Some(j),
                _ => Some(i),
            })
            .expect("k <= n leaves a cluster with two members");
        sizes[labels[donor]] -= 1;
        sizes[empty] += 1;
        labels[donor] = empty;
        dists[donor] = T::zero();
        centroids[empty] = points[donor].clone();
    }
    let inertia = dists.iter().copied().sum();
    (labels, inertia)
}

/// Seeded farthest-point initialization: a random first center, then
/// repeatedly the point farthest from all chosen centers (lowest index on ties).
fn spread_init<T: Scalar>(points: &[Vec<T>], k: usize, seed: u64) -> Vec<Vec<T>> {
    let n = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut chosen = vec![false; n];
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut min_d: Vec<T> = points.iter().map(|p| squared_distance(p, &points[first])).collect();
    while centroids.len() < k {
        let next = (0..n)
            .filter(|&i| !chosen[i])
            .fold(None, |acc: Option<usize>, i| match acc {
                Some(j) if min_d[j] >= min_d[i] => Some(j),
                _ => Some(i),
            })
            .expect("k <= n");
        chosen[next] = true;
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, &points[next]);
            if d < min_d[i] {
                min_d[i] = d;
            }
        }
        centroids.push(points[next].clone());
    }
    centroids
}

/// Lloyd iterations from [`spread_init`] until the assignment stops changing
/// or `max_iter` updates have run.
pub fn kmeans_cluster<T: Scalar>(
    points: &[Vec<T>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<KMeansModel<T>, ClusterError> {
    let n = points.len();
    if k < 1 || k > n {
        return Err(ClusterError::KOutOfRange { k, n });
    }
    let dim = validate_points(points)?;
    let mut centroids = spread_init(points, k, seed);
    let (mut labels, mut inertia) = assign(points, &mut centroids);
    let mut history = vec![inertia];
    let mut iterations_run = 0;

    for it in 1..=max_iter {
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, &x) in sums[l].iter_mut().zip(p) {
                *s = *s + x;
            }
        }
        for ((c, s), &m) in centroids.iter_mut().zip(sums).zip(&counts) {
            let m = T::from_usize_lossy(m);
            *c = s.into_iter().map(|x| x / m).collect();
        }
        let (next, next_inertia) = assign(points, &mut centroids);
        iterations_run = it;
        inertia = next_inertia;
        history.push(inertia);
        if next == labels {
            break;
        }
        labels = next;
    }

    Ok(KMeansModel { centroids, inertia, iterations_run, labels, inertia_history: history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_knn_graph;
    use rand_distr::{Distribution, Normal};

    fn path_graph(rho: Vec<f64>) -> KnnGraph<f64> {
        let n = rho.len();
        let mut arcs = vec![Vec::new(); n];
        for i in 0..n - 1 {
            arcs[i].push((i + 1, 1.0));
            arcs[i + 1].push((i, 1.0));
        }
        KnnGraph::from_arcs(1, arcs).unwrap().with_density(rho)
    }

    pub(crate) fn two_blobs(seed: u64, per_blob: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.5).unwrap();
        let mut pts = Vec::new();
        for &c in &[0.0, 10.0] {
            for _ in 0..per_blob {
                pts.push(vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)]);
            }
        }
        pts
    }

    #[test]
    fn delta_examples() {
        let g = path_graph(vec![0.2, 0.2, 0.5, 0.9]);
        assert!((compute_delta(&g) - 0.3).abs() < 1e-15);
        let g = path_graph(vec![0.1, 0.4]);
        assert!((compute_delta(&g) - 0.3).abs() < 1e-15);
        let g = path_graph(vec![0.7; 5]);
        assert_eq!(compute_delta(&g), DELTA_FALLBACK);
    }

    #[test]
    fn plateau_is_one_cluster_rooted_at_lowest_index() {
        let f = cluster_with_k(&path_graph(vec![0.7; 5]));
        assert_eq!(f.prototypes, vec![0]);
        assert!(f.cluster_label.iter().all(|&l| l == 0));
    }

    #[test]
    fn singleton_forest() {
        let g = KnnGraph::<f64>::from_arcs(1, vec![vec![]]).unwrap();
        let f = cluster_with_k(&g);
        assert_eq!(f.cluster_count(), 1);
        assert_eq!(f.prototypes, vec![0]);
        assert_eq!(f.cost, g.rho().to_vec());
    }

    #[test]
    fn forest_structure() {
        let pts = two_blobs(5, 30);
        for k in 1..8 {
            let g = build_knn_graph(&pts, k).unwrap();
            let f = cluster_with_k(&g);
            let roots: Vec<usize> = (0..f.n()).filter(|&t| f.predecessor[t].is_none()).collect();
            assert_eq!(f.sorted_prototypes(), roots);
            for t in 0..f.n() {
                let r = f.root_of(t).expect("acyclic");
                assert_eq!(f.cluster_label[t], f.cluster_label[r]);
                match f.predecessor[t] {
                    None => assert_eq!(f.cost[t], g.rho()[t]),
                    Some(p) => assert_eq!(f.cost[t], f.cost[p].min(g.rho()[t])),
                }
            }
            for &r in &f.prototypes {
                for t in g.neighbors(r) {
                    if f.cluster_label[t] == f.cluster_label[r] {
                        assert!(g.rho()[r] >= f.cost[t]);
                    }
                }
            }
        }
    }

    /// Two squares of side 1 with a centre point each, 10 apart: one density
    /// peak (the centre) per blob.
    pub(crate) fn two_stars() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for c in [0.0, 10.0] {
            pts.push(vec![c, c]);
            for (dx, dy) in [(-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5)] {
                pts.push(vec![c + dx, c + dy]);
            }
        }
        pts
    }

    fn straddles(labels: &[usize], split: usize) -> bool {
        labels[..split].iter().any(|l| labels[split..].contains(l))
    }

    #[test]
    fn two_stars_k3() {
        let g = build_knn_graph(&two_stars(), 3).unwrap();
        let f = cluster_with_k(&g);
        assert_eq!(f.cluster_count(), 2);
        assert_eq!(f.sorted_prototypes(), vec![0, 5]);
        assert!(!straddles(&f.cluster_label, 5));
    }

    #[test]
    fn two_blobs_k3_never_straddle() {
        for seed in 0..50 {
            let pts = two_blobs(seed, 10);
            let g = build_knn_graph(&pts, 3).unwrap();
            let f = cluster_with_k(&g);
            assert!(f.cluster_count() >= 2);
            assert!(!straddles(&f.cluster_label, 10), "seed {seed}");
        }
    }

    #[test]
    fn best_k_selects_argmin() {
        let pts = two_blobs(42, 10);
        let sweep = sweep_k(&pts, 5, SweepOptions::default()).unwrap();
        assert!(!straddles(&sweep.forest.cluster_label, 10));
        // Re-score every k directly.
        let mut best: Option<(f64, usize)> = None;
        for k in 1..=5 {
            let g = build_knn_graph(&pts, k).unwrap();
            let f = cluster_with_k(&g);
            let nc = normalized_cut(&g, &f.labeling()).unwrap();
            assert_eq!(sweep.scores[k - 1].ncut, nc);
            if f.cluster_count() > 1 && best.is_none_or(|(b, _)| nc < b) {
                best = Some((nc, k));
            }
        }
        assert_eq!(sweep.forest.k_used, best.unwrap().1);
    }

    #[test]
    fn best_k_prefers_component_partition() {
        let f = cluster_best_k(&two_stars(), 4).unwrap();
        assert_eq!(f.cluster_count(), 2);
        // Whenever some k reaches the blob partition, the winner also has a zero cut.
        for seed in 0..30 {
            let pts = two_blobs(seed, 10);
            let sweep = sweep_k(&pts, 5, SweepOptions::default()).unwrap();
            if sweep.scores.iter().any(|s| s.clusters == 2) {
                assert_eq!(sweep.scores[sweep.forest.k_used - 1].ncut, 0.0, "seed {seed}");
            }
        }
    }

    #[test]
    fn best_k_forced_choice_and_range() {
        let pts = vec![vec![0.0f64], vec![1.0]];
        let f = cluster_best_k(&pts, 1).unwrap();
        assert_eq!(f.k_used, 1);
        assert_eq!(cluster_best_k(&pts, 2).unwrap_err(), ClusterError::KMaxOutOfRange { k_max: 2, n: 2 });
        assert_eq!(cluster_best_k(&pts, 0).unwrap_err(), ClusterError::KMaxOutOfRange { k_max: 0, n: 2 });
    }

    #[test]
    fn best_k_duplicated_dataset() {
        let pts = two_blobs(42, 10);
        let doubled: Vec<Vec<f64>> = pts.iter().flat_map(|p| [p.clone(), p.clone()]).collect();
        let b = cluster_best_k(&doubled, 5).unwrap();
        for i in 0..pts.len() {
            assert_eq!(b.cluster_label[2 * i], b.cluster_label[2 * i + 1]);
        }
        assert!(!straddles(&b.cluster_label, 20));
    }

    #[test]
    fn best_k_rescale_invariant() {
        let pts = two_blobs(9, 15);
        let scaled: Vec<Vec<f64>> = pts.iter().map(|p| p.iter().map(|x| x * 8.0).collect()).collect();
        let a = cluster_best_k(&pts, 6).unwrap();
        let b = cluster_best_k(&scaled, 6).unwrap();
        assert_eq!(a.k_used, b.k_used);
        assert_eq!(a.cluster_label, b.cluster_label);
    }

    #[test]
    fn deadline_aborts() {
        let pts = two_blobs(1, 20);
        let opts = SweepOptions { deadline: Some(Instant::now()) };
        assert!(matches!(sweep_k(&pts, 5, opts), Err(ClusterError::DeadlineExceeded { completed: 0 })));
    }

    #[test]
    fn kmeans_k_equals_n() {
        let pts = two_blobs(3, 4);
        let m = kmeans_cluster(&pts, pts.len(), 1, 300).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut got = m.centroids.clone();
        let mut want = pts.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn kmeans_two_blobs() {
        let pts = two_blobs(8, 50);
        let m = kmeans_cluster(&pts, 2, 77, 300).unwrap();
        let mean = |s: &[Vec<f64>]| {
            let n = s.len() as f64;
            vec![s.iter().map(|p| p[0]).sum::<f64>() / n, s.iter().map(|p| p[1]).sum::<f64>() / n]
        };
        let means = [mean(&pts[..50]), mean(&pts[50..])];
        for bm in &means {
            let close = m.centroids.iter().any(|c| squared_distance(c, bm).sqrt() < 0.5);
            assert!(close, "no centroid near {bm:?}: {:?}", m.centroids);
        }
        for w in m.inertia_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        assert_eq!(m, kmeans_cluster(&pts, 2, 77, 300).unwrap());
    }

    #[test]
    fn kmeans_never_empty() {
        let pts = vec![vec![1.0f64, 1.0]; 6];
        let m = kmeans_cluster(&pts, 3, 0, 10).unwrap();
        for c in 0..3 {
            assert!(m.labels.contains(&c));
        }
        assert_eq!(kmeans_cluster(&pts, 7, 0, 10).unwrap_err(), ClusterError::KOutOfRange { k: 7, n: 6 });
    }

    #[test]
    fn single_precision_forest() {
        let pts: Vec<Vec<f32>> = two_stars().into_iter().map(|p| p.into_iter().map(|x| x as f32).collect()).collect();
        let f = cluster_best_k(&pts, 4).unwrap();
        assert_eq!(f.cluster_count(), 2);
        let g = build_knn_graph(&pts, 3).unwrap();
        assert_eq!(cluster_with_k(&g).sorted_prototypes(), vec![0, 5]);
    }
}
