//! End-to-end separation, reference methods and Monte Carlo sweeps.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::{AlphaSetting, EpsilonRule, EpsilonSetting, ExperimentSpec, Method};
use crate::cfdeconv::{self, DeconvOptions, SupportSet};
use crate::coversep::{self, DirectionCluster};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::ica;
use crate::metrics::{self, DB_CAP};
use crate::quantgrid::{self, QuantGrid};
use crate::scenario::{self, ObservationBatch, ScenarioConfig};
use crate::subspace::{self, SubspaceBasis};

/// Output of the full separation pipeline with its intermediate products.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    /// Estimated unit channel directions (M-vectors), heaviest cluster first.
    pub directions: Vec<DVector<Complex64>>,
    /// The selected subspace vectors they were reconstructed from.
    pub subspace_vectors: Vec<Vec<Complex64>>,
    pub clusters: Vec<DirectionCluster>,
    /// Indices into `clusters` of the selected directions.
    pub chosen: Vec<usize>,
    pub support: SupportSet,
    pub grid: QuantGrid,
    pub clamped_fraction: f64,
}

/// Number of distinct noiseless projected points the scenario can produce.
pub fn expected_alphabet_size(scenario: &ScenarioConfig) -> Result<usize> {
    let law = scenario.attack.compile(scenario.legit_users, scenario.malicious_users)?;
    Ok((0..law.malicious_users()).fold(1usize << scenario.legit_users, |acc, k| {
        acc.saturating_mul(law.support_size(k))
    }))
}

/// Support threshold for `spec` given the deconvolved pmf.
pub fn epsilon_for(spec: &ExperimentSpec, pmf: &quantgrid::QuantizedPmf) -> Result<f64> {
    match spec.separation.epsilon {
        EpsilonSetting::Fixed(e) => Ok(e),
        EpsilonSetting::Rule(EpsilonRule::Alphabet) => {
            Ok(0.25 / expected_alphabet_size(&spec.scenario)? as f64)
        }
        EpsilonSetting::Rule(EpsilonRule::LargestGap) => cfdeconv::largest_gap_threshold(pmf)
            .ok_or(Error::EmptySupport { epsilon: f64::NAN }),
    }
}

fn grids_for(spec: &ExperimentSpec, z: &DMatrix<Complex64>) -> Result<(QuantGrid, QuantGrid)> {
    let alpha = match spec.grid.alpha {
        AlphaSetting::Fixed(a) => a,
        AlphaSetting::Rule(_) => quantgrid::auto_alpha(z, spec.grid.m2, spec.grid.alpha_scale),
    };
    Ok((
        quantgrid::build_grid(alpha, spec.grid.m1)?,
        quantgrid::build_grid(alpha, spec.grid.m2)?,
    ))
}

/// Separation from already projected data.
pub fn separate_projected(
    basis: &SubspaceBasis,
    z: &DMatrix<Complex64>,
    sigma2: f64,
    antennas: usize,
    spec: &ExperimentSpec,
    exec: Execution,
) -> Result<SeparationResult> {
    let k = basis.dim();
    let (grid1, grid2) = grids_for(spec, z)?;
    let pmf = quantgrid::empirical_pmf(z, &grid1)?;
    let opts = DeconvOptions {
        amp_cap: spec.separation.amp_cap,
        cell_budget: spec.separation.cell_budget,
        exec,
    };
    let deconv = cfdeconv::deconvolve(&pmf, &grid2, sigma2, antennas, &opts)?;
    let epsilon = epsilon_for(spec, &deconv.pmf)?;
    let support = cfdeconv::essential_support(&deconv.pmf, epsilon)?;
    let sep = coversep::separate_support(&support, k, &spec.separation.cover_options())?;
    let selected: Vec<DVector<Complex64>> =
        sep.selected.iter().map(|v| DVector::from_column_slice(v)).collect();
    let directions = subspace::reconstruct_directions(basis, &selected)?;
    Ok(SeparationResult {
        directions,
        subspace_vectors: sep.selected,
        clusters: sep.clusters,
        chosen: sep.chosen,
        support,
        grid: grid2,
        clamped_fraction: deconv.clamped_fraction,
    })
}

/// Runs the whole blind separation pipeline on one batch.
pub fn run_bcs(batch: &ObservationBatch, spec: &ExperimentSpec) -> Result<SeparationResult> {
    run_bcs_with(batch, spec, Execution::Parallel)
}

pub fn run_bcs_with(batch: &ObservationBatch, spec: &ExperimentSpec, exec: Execution) -> Result<SeparationResult> {
    let cfg = &batch.config;
    let basis = subspace::estimate_signal_subspace(&batch.y, cfg.users())?;
    let z = subspace::project(&batch.y, &basis, cfg.antennas)?.z;
    separate_projected(&basis, &z, cfg.noise_variance, cfg.antennas, spec, exec)
}

/// Per-trial record of one method at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub method: Method,
    /// Absent when the method failed on this trial.
    pub worst_case_dlpr_db: Option<f64>,
    pub per_user_dlpr_db: Vec<f64>,
    pub separation_failed: bool,
    pub failure: Option<String>,
    pub wall_time_ms: f64,
}

/// Summary of one `(snr, method)` cell of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub snr_db: f64,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub mean_dlpr_db: Option<f64>,
    pub std_dlpr_db: Option<f64>,
    pub mean_wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub records: Vec<TrialRecord>,
    pub table: Vec<AggregateRow>,
}

impl ExperimentOutcome {
    pub fn row(&self, snr_db: f64, method: Method) -> Option<&AggregateRow> {
        self.table.iter().find(|r| r.snr_db == snr_db && r.method == method)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trial `trial` under `master`. The same trial index reuses its
/// channel, symbol and noise draws at every SNR of a sweep.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    splitmix64(master ^ splitmix64(trial as u64))
}

/// Draws the observation batch of one trial.
pub fn trial_batch(spec: &ExperimentSpec, snr_db: f64, seed: u64) -> Result<ObservationBatch> {
    let mut cfg = spec.scenario.clone();
    cfg.snr_db = snr_db;
    cfg.rng_seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let channels = scenario::generate_channels(&cfg, &mut rng)?;
    scenario::synthesize_observations(&channels, &cfg.attack, &cfg, &mut rng)
}

fn perfect_dlpr(batch: &ObservationBatch) -> Result<Vec<f64>> {
    let h = &batch.truth.h;
    (0..h.ncols())
        .map(|j| {
            let d = h.column(j).normalize();
            metrics::dlpr_for_direction(h, &batch.truth.g, &d, j)
        })
        .collect()
}

/// Runs every configured method on one shared realization.
pub fn run_trial(spec: &ExperimentSpec, snr_db: f64, trial: usize, exec: Execution) -> Vec<TrialRecord> {
    let seed = trial_seed(spec.experiment.seed, trial);
    let methods = spec.methods();
    let record = |method: Method, outcome: std::result::Result<Vec<f64>, String>, started: Instant| {
        let wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(per_user) => {
                let worst = per_user.iter().copied().fold(f64::INFINITY, f64::min);
                TrialRecord {
                    trial,
                    seed,
                    snr_db,
                    method,
                    worst_case_dlpr_db: Some(metrics::to_db(worst, DB_CAP)),
                    per_user_dlpr_db: per_user.iter().map(|&v| metrics::to_db(v, DB_CAP)).collect(),
                    separation_failed: false,
                    failure: None,
                    wall_time_ms,
                }
            }
            Err(e) => TrialRecord {
                trial,
                seed,
                snr_db,
                method,
                worst_case_dlpr_db: None,
                per_user_dlpr_db: Vec::new(),
                separation_failed: true,
                failure: Some(e),
                wall_time_ms,
            },
        }
    };

    let batch = match trial_batch(spec, snr_db, seed) {
        Ok(b) => b,
        Err(e) => {
            let msg = e.to_string();
            return methods
                .iter()
                .map(|&m| record(m, Err(msg.clone()), Instant::now()))
                .collect();
        }
    };
    let cfg = &batch.config;
    let started = Instant::now();
    let projection = subspace::estimate_signal_subspace(&batch.y, cfg.users())
        .and_then(|basis| {
            let z = subspace::project(&batch.y, &basis, cfg.antennas)?.z;
            Ok((basis, z))
        })
        .map_err(|e| e.to_string());
    let shared_ms = started.elapsed();

    methods
        .iter()
        .map(|&method| {
            let started = Instant::now().checked_sub(shared_ms).unwrap_or_else(Instant::now);
            let (basis, z) = match (&projection, method) {
                (_, Method::Perfect) => {
                    let started = Instant::now();
                    return record(method, perfect_dlpr(&batch).map_err(|e| e.to_string()), started);
                }
                (Err(e), _) => return record(method, Err(e.clone()), started),
                (Ok((basis, z)), _) => (basis, z),
            };
            let directions = if method == Method::Bcs {
                separate_projected(basis, z, cfg.noise_variance, cfg.antennas, spec, exec)
                    .map(|sep| sep.directions)
            } else {
                ica::ica_separate(z, basis.dim(), &spec.ica.config(seed))
                    .and_then(|out| subspace::reconstruct_directions(basis, &out.directions))
            };
            let outcome = directions
                .and_then(|d| metrics::dlpr_report(&batch.truth.h, &batch.truth.g, &d))
                .map(|r| r.per_user)
                .map_err(|e| e.to_string());
            record(method, outcome, started)
        })
        .collect()
}

/// Runs the full sweep. Trials are spread over the rayon pool when `exec`
/// is parallel; each trial itself runs sequentially.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let snrs = &spec.experiment.snr_sweep;
    let trials = spec.experiment.trials;
    let per_trial = exec::map_range(exec, snrs.len() * trials, |i| {
        run_trial(spec, snrs[i / trials], i % trials, Execution::Sequential)
    });
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let table = aggregate(spec, &records);
    Ok(ExperimentOutcome { records, table })
}

/// Mean and sample standard deviation of the successful trials per
/// `(snr, method)`, in sweep order.
pub fn aggregate(spec: &ExperimentSpec, records: &[TrialRecord]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for &snr in &spec.experiment.snr_sweep {
        for method in spec.methods() {
            let cell: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.snr_db == snr && r.method == method)
                .collect();
            let values: Vec<f64> = cell.iter().filter_map(|r| r.worst_case_dlpr_db).collect();
            let n = values.len();
            let mean = (n > 0).then(|| values.iter().sum::<f64>() / n as f64);
            let std = mean.map(|m| {
                if n < 2 {
                    0.0
                } else {
                    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                }
            });
            let mean_wall_ms = if cell.is_empty() {
                0.0
            } else {
                cell.iter().map(|r| r.wall_time_ms).sum::<f64>() / cell.len() as f64
            };
            rows.push(AggregateRow {
                snr_db: snr,
                method,
                trials: cell.len(),
                failures: cell.len() - n,
                mean_dlpr_db: mean,
                std_dlpr_db: std,
                mean_wall_ms,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::spec::{AlphaRule, GridSpec, SeparationSpec, SweepSpec};
    use crate::scenario::AttackProfile;

    fn small_spec(methods: Vec<Method>) -> ExperimentSpec {
        ExperimentSpec {
            scenario: ScenarioConfig::new(16, 1, 1, 200, 16.0, AttackProfile::PsaBpsk),
            grid: GridSpec {
                alpha: AlphaSetting::Rule(AlphaRule::Auto),
                alpha_scale: 1.2,
                m1: 16,
                m2: 16,
            },
            separation: SeparationSpec::default(),
            ica: Default::default(),
            experiment: SweepSpec {
                snr_sweep: vec![16.0],
                trials: 3,
                methods,
                seed: 11,
                output: None,
                report_timing: false,
            },
        }
    }

    #[test]
    fn noiseless_bcs_recovers_both_directions() {
        let mut spec = small_spec(vec![Method::Bcs]);
        spec.scenario.noise_variance = 0.0;
        spec.scenario.observations = 100;
        spec.grid.m1 = 32;
        spec.grid.m2 = 32;
        let batch = trial_batch(&spec, 10.0, 3).unwrap();
        let sep = run_bcs(&batch, &spec).unwrap();
        let truth = [batch.truth.h.column(0).normalize(), batch.truth.g.column(0).normalize()];
        let a = metrics::align_directions(&sep.directions, &truth).unwrap();
        assert!(a.scores.iter().all(|&s| s > 0.999), "{:?}", a.scores);
    }

    #[test]
    fn perfect_only_matches_direct_substitution() {
        let spec = small_spec(vec![Method::Perfect]);
        let out = run_experiment(&spec, Execution::Sequential).unwrap();
        for r in &out.records {
            let batch = trial_batch(&spec, r.snr_db, r.seed).unwrap();
            let h = &batch.truth.h;
            let d = h.column(0).normalize();
            let v = metrics::dlpr_for_direction(h, &batch.truth.g, &d, 0).unwrap();
            assert_eq!(r.worst_case_dlpr_db, Some(metrics::to_db(v, DB_CAP)));
        }
    }

    #[test]
    fn budget_overflow_is_reported() {
        let mut spec = small_spec(vec![Method::Bcs]);
        spec.scenario.legit_users = 2;
        spec.grid.m1 = 64;
        spec.grid.m2 = 64;
        spec.scenario.antennas = 64;
        let batch = trial_batch(&spec, 16.0, 5).unwrap();
        let err = run_bcs(&batch, &spec).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        assert!(err.to_string().contains("lower the level count"));
    }

    #[test]
    fn sweep_is_deterministic_and_complete() {
        let spec = small_spec(vec![Method::Bcs, Method::Ica, Method::Perfect]);
        let a = run_experiment(&spec, Execution::Parallel).unwrap();
        let b = run_experiment(&spec, Execution::Sequential).unwrap();
        let strip = |o: &ExperimentOutcome| {
            o.records
                .iter()
                .map(|r| (r.trial, r.method, r.worst_case_dlpr_db))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.table.len(), 3);
        assert!(a.table.iter().all(|r| r.trials == 3));
    }
}
