//! Experiment description and its TOML configuration format.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cfdeconv::{DEFAULT_AMP_CAP, DEFAULT_CELL_BUDGET};
use crate::coversep::{CoverOptions, Representative, SeedOrder, Weighting};
use crate::error::{Error, Result};
use crate::ica::{IcaConfig, Nonlinearity, SourceModel};
use crate::scenario::ScenarioConfig;

/// Mass threshold of the essential support unless configured otherwise.
pub const DEFAULT_EPSILON: f64 = 0.002;

/// Separation method evaluated by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bcs,
    Ica,
    Perfect,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Bcs, Method::Ica, Method::Perfect];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bcs => "bcs",
            Method::Ica => "ica",
            Method::Perfect => "perfect",
        }
    }
}

/// Grid half-width rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSetting {
    Fixed(f64),
    Rule(AlphaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaRule {
    /// `alpha_scale` times the largest projected coordinate.
    Auto,
}

/// Support threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsilonSetting {
    Fixed(f64),
    Rule(EpsilonRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonRule {
    /// A quarter of the mass of a uniformly used alphabet of the expected size.
    Alphabet,
    /// Halfway across the largest drop of the sorted mass curve.
    LargestGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_alpha")]
    pub alpha: AlphaSetting,
    #[serde(default = "default_alpha_scale")]
    pub alpha_scale: f64,
    pub m1: usize,
    pub m2: usize,
}

fn default_alpha() -> AlphaSetting {
    AlphaSetting::Rule(AlphaRule::Auto)
}

fn default_alpha_scale() -> f64 {
    1.2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedOrderSetting {
    Enumeration,
    CoverMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RepresentativeSetting {
    Seed,
    MemberMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingSetting {
    Mass,
    Cardinality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSpec {
    #[serde(default = "default_epsilon")]
    pub epsilon: EpsilonSetting,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_amp_cap")]
    pub amp_cap: f64,
    #[serde(default = "default_cell_budget")]
    pub cell_budget: u64,
    #[serde(default = "default_seed_order")]
    pub seed_order: SeedOrderSetting,
    #[serde(default = "default_representative")]
    pub representative: RepresentativeSetting,
    #[serde(default = "default_weighting")]
    pub weighting: WeightingSetting,
}

fn default_epsilon() -> EpsilonSetting {
    EpsilonSetting::Fixed(DEFAULT_EPSILON)
}
fn default_gamma() -> f64 {
    0.05
}
fn default_amp_cap() -> f64 {
    DEFAULT_AMP_CAP
}
fn default_cell_budget() -> u64 {
    DEFAULT_CELL_BUDGET
}
fn default_seed_order() -> SeedOrderSetting {
    SeedOrderSetting::Enumeration
}
fn default_representative() -> RepresentativeSetting {
    RepresentativeSetting::MemberMean
}
fn default_weighting() -> WeightingSetting {
    WeightingSetting::Mass
}

impl Default for SeparationSpec {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            gamma: default_gamma(),
            amp_cap: default_amp_cap(),
            cell_budget: default_cell_budget(),
            seed_order: default_seed_order(),
            representative: default_representative(),
            weighting: default_weighting(),
        }
    }
}

impl SeparationSpec {
    pub fn cover_options(&self) -> CoverOptions {
        CoverOptions {
            gamma: self.gamma,
            seed_order: match self.seed_order {
                SeedOrderSetting::Enumeration => SeedOrder::Enumeration,
                SeedOrderSetting::CoverMass => SeedOrder::CoverMass,
            },
            representative: match self.representative {
                RepresentativeSetting::Seed => Representative::Seed,
                RepresentativeSetting::MemberMean => Representative::MemberMean,
            },
            weighting: match self.weighting {
                WeightingSetting::Mass => Weighting::Mass,
                WeightingSetting::Cardinality => Weighting::Cardinality,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlinearitySetting {
    Kurtosis,
    LogCoshMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceModelSetting {
    Circular,
    Noncircular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IcaSpec {
    #[serde(default = "default_ica_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_ica_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_nonlinearity")]
    pub nonlinearity: NonlinearitySetting,
    #[serde(default = "default_source_model")]
    pub source_model: SourceModelSetting,
}

fn default_ica_iterations() -> usize {
    200
}
fn default_ica_tolerance() -> f64 {
    1e-6
}
fn default_nonlinearity() -> NonlinearitySetting {
    NonlinearitySetting::Kurtosis
}
fn default_source_model() -> SourceModelSetting {
    SourceModelSetting::Noncircular
}

impl Default for IcaSpec {
    fn default() -> Self {
        Self {
            max_iterations: default_ica_iterations(),
            tolerance: default_ica_tolerance(),
            nonlinearity: default_nonlinearity(),
            source_model: default_source_model(),
        }
    }
}

impl IcaSpec {
    pub fn config(&self, rng_seed: u64) -> IcaConfig {
        IcaConfig {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            nonlinearity: match self.nonlinearity {
                NonlinearitySetting::Kurtosis => Nonlinearity::Kurtosis,
                NonlinearitySetting::LogCoshMagnitude => Nonlinearity::LogCoshMagnitude,
            },
            source_model: match self.source_model {
                SourceModelSetting::Circular => SourceModel::Circular,
                SourceModelSetting::Noncircular => SourceModel::Noncircular,
            },
            rng_seed,
        }
    }
}

/// Monte Carlo sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub snr_sweep: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    /// Directory for CSV and plot output.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Fill the `mean_wall_ms` column. Timings vary between runs, so the
    /// column is left empty by default to keep reruns byte-identical.
    #[serde(default)]
    pub report_timing: bool,
}

fn default_trials() -> usize {
    200
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

/// Everything needed to run and reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub separation: SeparationSpec,
    #[serde(default)]
    pub ica: IcaSpec,
    pub experiment: SweepSpec,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    pub fn users(&self) -> usize {
        self.scenario.users()
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        let g = &self.grid;
        if g.m1 < 2 || g.m2 < 2 {
            return Err(Error::Config("m1 and m2 must be at least 2".into()));
        }
        if !(g.m2 - 1).is_multiple_of(g.m1 - 1) {
            return Err(Error::Config(format!(
                "(m2 - 1) / (m1 - 1) must be an integer; got m1 = {}, m2 = {}",
                g.m1, g.m2
            )));
        }
        match g.alpha {
            AlphaSetting::Fixed(a) if !(a > 0.0 && a.is_finite()) => {
                return Err(Error::Config(format!("alpha must be positive, got {a}")));
            }
            _ => {}
        }
        if !(g.alpha_scale > 0.0 && g.alpha_scale.is_finite()) {
            return Err(Error::Config("alpha_scale must be positive".into()));
        }
        let cells = ((g.m2 - 1) as u128).saturating_pow(2 * self.users() as u32);
        if cells > self.separation.cell_budget as u128 {
            return Err(Error::BudgetExceeded {
                cells,
                budget: self.separation.cell_budget,
            });
        }
        let s = &self.separation;
        if let EpsilonSetting::Fixed(e) = s.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Config(format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        if !(0.0..1.0).contains(&s.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1), got {}", s.gamma)));
        }
        if !(s.amp_cap >= 1.0) {
            return Err(Error::Config(format!("amp_cap must be at least 1, got {}", s.amp_cap)));
        }
        if self.ica.max_iterations == 0 || !(self.ica.tolerance > 0.0) {
            return Err(Error::Config("ICA needs max_iterations >= 1 and tolerance > 0".into()));
        }
        let e = &self.experiment;
        if e.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if e.snr_sweep.is_empty() || e.snr_sweep.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("snr_sweep must be a nonempty list of finite values".into()));
        }
        if e.methods.is_empty() {
            return Err(Error::Config("methods must name at least one method".into()));
        }
        if e.methods.contains(&Method::Ica) && self.scenario.observations <= 10 * self.users() {
            return Err(Error::Config(format!(
                "ICA needs more than {} observations",
                10 * self.users()
            )));
        }
        Ok(())
    }

    /// Non-fatal remarks, including the asymptotic sample and grid couplings
    /// under which deconvolution is consistent.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = self.scenario.warnings();
        let dims = 2 * self.users() as i32;
        let cells = (self.grid.m2 as f64).powi(dims);
        if (self.scenario.observations as f64) < cells {
            out.push(format!(
                "observations ({}) are far below m2^(2K) = {cells:.3e}; the deconvolved pmf is noisy",
                self.scenario.observations
            ));
        }
        if (self.grid.m2 as f64) < (self.grid.m1 as f64).powi(3) {
            out.push(format!(
                "m2 = {} is below m1^3 = {}; the grid refinement is coarser than the consistency regime",
                self.grid.m2,
                self.grid.m1.pow(3)
            ));
        }
        out
    }

    /// Methods in canonical order without duplicates.
    pub fn methods(&self) -> Vec<Method> {
        let mut m = self.experiment.methods.clone();
        m.sort();
        m.dedup();
        m
    }
}
