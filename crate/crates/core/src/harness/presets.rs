//! Built-in experiments shipped with the `demo` subcommand.

use crate::scenario::{AttackProfile, ScenarioConfig};

use super::spec::{
    AlphaRule, AlphaSetting, ExperimentSpec, GridSpec, IcaSpec, Method, SeparationSpec, SweepSpec,
};

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 3] = ["psa-bpsk", "pja-correlated", "pja-nonstationary"];

const SNR_SWEEP: [f64; 5] = [0.0, 4.0, 8.0, 12.0, 16.0];

fn build(
    legit: usize,
    malicious: usize,
    observations: usize,
    m: usize,
    attack: AttackProfile,
) -> ExperimentSpec {
    ExperimentSpec {
        scenario: ScenarioConfig::new(64, legit, malicious, observations, 0.0, attack),
        grid: GridSpec {
            alpha: AlphaSetting::Rule(AlphaRule::Auto),
            alpha_scale: 1.2,
            m1: m,
            m2: m,
        },
        separation: SeparationSpec::default(),
        ica: IcaSpec::default(),
        experiment: SweepSpec {
            snr_sweep: SNR_SWEEP.to_vec(),
            trials: 200,
            methods: Method::ALL.to_vec(),
            seed: 0,
            output: None,
            report_timing: false,
        },
    }
}

/// The experiments of a preset. Most presets hold one experiment; the
/// non-stationary attack runs a small and a large user population.
pub fn preset(name: &str) -> Option<Vec<(String, ExperimentSpec)>> {
    let list = match name {
        "psa-bpsk" => vec![(
            "psa-bpsk".to_string(),
            build(2, 1, 300, 16, AttackProfile::PsaBpsk),
        )],
        "pja-correlated" => vec![(
            "pja-correlated".to_string(),
            build(2, 1, 800, 16, AttackProfile::PjaCorrelatedPam),
        )],
        "pja-nonstationary" => vec![
            (
                "pja-nonstationary-1x1".to_string(),
                build(1, 1, 800, 32, AttackProfile::PjaNonstationaryPam),
            ),
            (
                "pja-nonstationary-2x2".to_string(),
                build(2, 2, 800, 8, AttackProfile::PjaNonstationaryPam),
            ),
        ],
        _ => return None,
    };
    Some(list)
}
