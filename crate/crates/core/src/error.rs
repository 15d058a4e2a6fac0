use thiserror::Error;

/// Errors surfaced by the separation pipeline and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("channel matrix [H, G] stayed rank deficient after {attempts} draws")]
    DegenerateChannel { attempts: usize },

    #[error("attack profile {profile} cannot drive {malicious_users} malicious user(s)")]
    ProfileMismatch {
        profile: &'static str,
        malicious_users: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("observation matrix has fewer than {rank} active sources (sigma_K / sigma_1 = {ratio:e})")]
    RankDeficient { rank: usize, ratio: f64 },

    #[error("vector norm is below 1e-12")]
    ZeroVector,

    #[error("channel vector has zero norm")]
    ZeroChannel,

    #[error("input contains no observations")]
    EmptyInput,

    #[error(
        "dense transform needs {cells} cells but the budget is {budget}; \
         lower the level count m2 or the number of users"
    )]
    BudgetExceeded { cells: u128, budget: u64 },

    #[error(
        "noise characteristic function falls below 1/amp_cap on {fraction:.3} of the \
         frequency grid; deconvolution is ill-posed at this grid and noise level"
    )]
    NoiseTooLarge { fraction: f64 },

    #[error("no lattice point has mass above epsilon = {epsilon}")]
    EmptySupport { epsilon: f64 },

    #[error("need at least 2 support points, found {found}")]
    TooFewPoints { found: usize },

    #[error("found {found} direction clusters, need {needed}")]
    TooFewClusters { found: usize, needed: usize },

    #[error("need more than {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error is a user-facing configuration problem rather than a
    /// runtime failure of a trial.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::ProfileMismatch { .. } | Error::BudgetExceeded { .. }
        )
    }
}
