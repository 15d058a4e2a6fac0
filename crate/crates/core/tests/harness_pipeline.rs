use bcsep::harness::output::trials_csv;
use bcsep::harness::run::{run_trial, trial_batch, trial_seed};
use bcsep::harness::{preset, run_experiment, ExperimentSpec, Method, PRESET_NAMES};
use bcsep::Execution;

fn small(name: &str) -> ExperimentSpec {
    let (_, mut spec) = preset(name).unwrap().remove(0);
    spec.experiment.trials = 3;
    spec.experiment.snr_sweep = vec![4.0, 16.0];
    spec.experiment.seed = 77;
    spec
}

#[test]
fn aggregate_covers_every_snr_and_method() {
    let spec = small("psa-bpsk");
    let out = run_experiment(&spec, Execution::Sequential).unwrap();
    assert_eq!(out.table.len(), spec.experiment.snr_sweep.len() * spec.methods().len());
    for &snr in &spec.experiment.snr_sweep {
        for m in spec.methods() {
            let row = out.row(snr, m).unwrap();
            assert_eq!(row.trials, 3);
        }
    }
    assert_eq!(out.records.len(), 2 * 3 * Method::ALL.len());
}

#[test]
fn methods_share_one_realization_per_trial() {
    let spec = small("pja-correlated");
    let records = run_trial(&spec, 16.0, 1, Execution::Sequential);
    let seed = trial_seed(spec.experiment.seed, 1);
    assert!(records.iter().all(|r| r.seed == seed && r.trial == 1 && r.snr_db == 16.0));
    // The same draw is reused at every SNR; only the scaling differs.
    let a = trial_batch(&spec, 4.0, seed).unwrap();
    let b = trial_batch(&spec, 16.0, seed).unwrap();
    assert_eq!(a.truth, b.truth);
    assert!((a.noise() - b.noise()).norm() < 1e-9 * a.noise().norm());
}

#[test]
fn master_seed_determines_every_record() {
    let spec = small("pja-nonstationary");
    let a = run_experiment(&spec, Execution::Parallel).unwrap();
    let b = run_experiment(&spec, Execution::Sequential).unwrap();
    assert_eq!(trials_csv(&a.records, false), trials_csv(&b.records, false));
    let mut other = spec.clone();
    other.experiment.seed += 1;
    let c = run_experiment(&other, Execution::Sequential).unwrap();
    assert_ne!(trials_csv(&a.records, false), trials_csv(&c.records, false));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in PRESET_NAMES {
        for (stem, spec) in preset(name).unwrap() {
            let path = dir.path().join(format!("{stem}.toml"));
            std::fs::write(&path, spec.to_toml_string()).unwrap();
            assert_eq!(ExperimentSpec::from_path(&path).unwrap(), spec);
        }
    }
}

#[test]
fn bad_configs_are_rejected() {
    let mut spec = small("psa-bpsk");
    spec.grid.m2 = 20;
    assert!(spec.validate().unwrap_err().is_config());
    assert!(ExperimentSpec::from_toml_str("[scenario]\nantennas = 'many'").is_err());
}
