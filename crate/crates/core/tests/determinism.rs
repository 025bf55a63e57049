use opf_forge::eval::holdout_experiment;
use opf_forge::{generate_synthetic_cohort, Dataset, DictionaryConfig, LayerSchedule, PipelineConfig, Signal32, Signal64, SynthParams};

fn small_config() -> PipelineConfig {
    PipelineConfig {
        dictionary: DictionaryConfig::Hopf { schedule: LayerSchedule::new(2, 20, vec![0.5]).unwrap() },
        n_runs: 4,
        seed: 11,
        ..Default::default()
    }
}

#[test]
fn report_is_independent_of_thread_count() {
    let mut p = SynthParams::separable(4, 5);
    p.duration_s = 3.0;
    let signals: Vec<Signal64> = generate_synthetic_cohort(&p).unwrap();
    let cfg = small_config();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| holdout_experiment(&Dataset::Signals(&signals), &cfg).unwrap().to_json())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(4));
}

#[test]
fn single_precision_pipeline_runs() {
    let mut p = SynthParams::separable(4, 2);
    p.duration_s = 3.0;
    let signals: Vec<Signal32> = generate_synthetic_cohort(&p).unwrap();
    let r = holdout_experiment(&Dataset::Signals(&signals), &small_config()).unwrap();
    assert_eq!(r.accuracies.len(), 4);
    assert!(r.accuracies.iter().all(|a| (0.0..=1.0).contains(a)));
}
