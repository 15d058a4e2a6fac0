//! Channel, symbol and observation generation for the uplink attack model.
//!
//! Legitimate users (LUs) send equiprobable BPSK symbols at power `P_s`; each
//! malicious user (MU) draws from an [`AttackProfile`] whose law may depend on
//! the LU symbols of the same instant and on the parity of the instant.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_CHANNEL_DRAWS: usize = 10;
const PMF_SUM_TOL: f64 = 1e-12;

/// Parameters of one simulated uplink scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub antennas: usize,
    pub legit_users: usize,
    pub malicious_users: usize,
    pub observations: usize,
    /// Total noise variance per complex entry.
    #[serde(default = "one")]
    pub noise_variance: f64,
    #[serde(default)]
    pub snr_db: f64,
    #[serde(default)]
    pub path_loss_legit: Option<Vec<f64>>,
    #[serde(default)]
    pub path_loss_malicious: Option<Vec<f64>>,
    /// MU mean symbol energy relative to `P_s`.
    #[serde(default = "one")]
    pub mu_power_ratio: f64,
    pub attack: AttackProfile,
    #[serde(default)]
    pub rng_seed: u64,
}

fn one() -> f64 {
    1.0
}

impl ScenarioConfig {
    /// A scenario with unit path loss, unit noise variance and equal MU power.
    pub fn new(
        antennas: usize,
        legit_users: usize,
        malicious_users: usize,
        observations: usize,
        snr_db: f64,
        attack: AttackProfile,
    ) -> Self {
        Self {
            antennas,
            legit_users,
            malicious_users,
            observations,
            noise_variance: 1.0,
            snr_db,
            path_loss_legit: None,
            path_loss_malicious: None,
            mu_power_ratio: 1.0,
            attack,
            rng_seed: 0,
        }
    }

    pub fn users(&self) -> usize {
        self.legit_users + self.malicious_users
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users();
        if self.legit_users == 0 || self.malicious_users == 0 {
            return Err(Error::Config("legit_users and malicious_users must be positive".into()));
        }
        if self.antennas <= k {
            return Err(Error::Config(format!(
                "antennas ({}) must exceed the total user count ({k})",
                self.antennas
            )));
        }
        if self.observations < k {
            return Err(Error::Config(format!(
                "observations ({}) must be at least the total user count ({k})",
                self.observations
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Config("noise_variance must be finite and non-negative".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if !(self.mu_power_ratio > 0.0 && self.mu_power_ratio.is_finite()) {
            return Err(Error::Config("mu_power_ratio must be positive".into()));
        }
        check_path_loss("path_loss_legit", &self.path_loss_legit, self.legit_users)?;
        check_path_loss("path_loss_malicious", &self.path_loss_malicious, self.malicious_users)?;
        self.attack.compile(self.legit_users, self.malicious_users)?;
        Ok(())
    }

    /// Non-fatal observations about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.antennas < 4 * self.users() {
            out.push(format!(
                "antennas ({}) is below 4x the user count ({}); the large-array regime is weak",
                self.antennas,
                self.users()
            ));
        }
        out
    }

    /// LU symbol power `P_s = sigma^2 * 10^(snr/10)`; a noiseless scenario
    /// uses unit reference variance.
    pub fn signal_power(&self) -> f64 {
        let reference = if self.noise_variance > 0.0 { self.noise_variance } else { 1.0 };
        reference * 10f64.powf(self.snr_db / 10.0)
    }

    fn legit_gain(&self, j: usize) -> f64 {
        self.path_loss_legit.as_ref().map_or(1.0, |b| b[j])
    }

    fn malicious_gain(&self, k: usize) -> f64 {
        self.path_loss_malicious.as_ref().map_or(1.0, |b| b[k])
    }
}

fn check_path_loss(name: &str, values: &Option<Vec<f64>>, expected: usize) -> Result<()> {
    if let Some(v) = values {
        if v.len() != expected {
            return Err(Error::Config(format!("{name} needs {expected} entries, got {}", v.len())));
        }
        if v.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(Error::Config(format!("{name} entries must be positive")));
        }
    }
    Ok(())
}

/// Symbol law of the malicious users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackProfile {
    /// Spoofing: every MU sends i.i.d. equiprobable BPSK like the LUs.
    PsaBpsk,
    /// Jamming with 4-PAM whose law follows the first LU's symbol (single MU).
    PjaCorrelatedPam,
    /// Jamming with 4-PAM whose law alternates between odd and even instants.
    PjaNonstationaryPam,
    Custom(CustomProfile),
}

/// User-supplied MU law, one entry per MU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProfile {
    pub users: Vec<CustomUser>,
}

/// Alphabet and conditional pmfs of one MU.
///
/// `odd` and `even` are indexed `[lu_pattern][symbol]`, where bit `l` of
/// `lu_pattern` is set when LU `l` sends the positive symbol. A table with a
/// single row applies to every pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomUser {
    /// Symbol values as `[re, im]` pairs.
    pub alphabet: Vec<[f64; 2]>,
    pub odd: Vec<Vec<f64>>,
    pub even: Vec<Vec<f64>>,
}

impl AttackProfile {
    pub fn name(&self) -> &'static str {
        match self {
            AttackProfile::PsaBpsk => "psa-bpsk",
            AttackProfile::PjaCorrelatedPam => "pja-correlated-pam",
            AttackProfile::PjaNonstationaryPam => "pja-nonstationary-pam",
            AttackProfile::Custom(_) => "custom",
        }
    }

    /// Resolves the profile into explicit per-MU tables for the given user counts.
    pub fn compile(&self, legit_users: usize, malicious_users: usize) -> Result<SymbolLaw> {
        let patterns = 1usize
            .checked_shl(legit_users as u32)
            .filter(|_| legit_users < 20)
            .ok_or_else(|| Error::Config("too many legitimate users for a symbol law".into()))?;
        let real = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        let users = match self {
            AttackProfile::PsaBpsk => {
                let table = vec![vec![0.5, 0.5]; patterns];
                (0..malicious_users)
                    .map(|_| UserLaw {
                        alphabet: real(&[1.0, -1.0]),
                        pmf: [table.clone(), table.clone()],
                    })
                    .collect()
            }
            AttackProfile::PjaCorrelatedPam => {
                if malicious_users != 1 {
                    return Err(Error::ProfileMismatch {
                        profile: self.name(),
                        malicious_users,
                    });
                }
                // Alphabet order: +3, -1, +1, -3.
                let table: Vec<Vec<f64>> = (0..patterns)
                    .map(|p| {
                        if p & 1 == 1 {
                            vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]
                        } else {
                            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0]
                        }
                    })
                    .collect();
                vec![UserLaw {
                    alphabet: real(&[3.0, -1.0, 1.0, -3.0]),
                    pmf: [table.clone(), table],
                }]
            }
            AttackProfile::PjaNonstationaryPam => {
                // Alphabet order: +3, +1, -1.
                let odd = vec![vec![1.0 / 3.0, 0.0, 2.0 / 3.0]; patterns];
                let even = vec![vec![0.0, 2.0 / 3.0, 1.0 / 3.0]; patterns];
                (0..malicious_users)
                    .map(|_| UserLaw {
                        alphabet: real(&[3.0, 1.0, -1.0]),
                        pmf: [odd.clone(), even.clone()],
                    })
                    .collect()
            }
            AttackProfile::Custom(custom) => {
                if custom.users.len() != malicious_users {
                    return Err(Error::ProfileMismatch {
                        profile: self.name(),
                        malicious_users,
                    });
                }
                custom
                    .users
                    .iter()
                    .map(|u| {
                        let alphabet: Vec<Complex64> =
                            u.alphabet.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                        let expand = |rows: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
                            match rows.len() {
                                1 => Ok(vec![rows[0].clone(); patterns]),
                                n if n == patterns => Ok(rows.clone()),
                                n => Err(Error::Config(format!(
                                    "custom pmf table has {n} rows; expected 1 or {patterns}"
                                ))),
                            }
                        };
                        Ok(UserLaw {
                            alphabet,
                            pmf: [expand(&u.odd)?, expand(&u.even)?],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let law = SymbolLaw {
            legit_users,
            users,
        };
        law.check()?;
        Ok(law)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct UserLaw {
    alphabet: Vec<Complex64>,
    /// `[parity][lu_pattern][symbol]`, parity 0 for odd instants.
    pmf: [Vec<Vec<f64>>; 2],
}

/// Explicit MU symbol law for a fixed number of LUs and MUs.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolLaw {
    legit_users: usize,
    users: Vec<UserLaw>,
}

impl SymbolLaw {
    pub fn malicious_users(&self) -> usize {
        self.users.len()
    }

    /// Raw (unscaled) alphabet of MU `k`.
    pub fn alphabet(&self, k: usize) -> &[Complex64] {
        &self.users[k].alphabet
    }

    /// Number of symbols MU `k` sends with positive probability at some instant.
    pub fn support_size(&self, k: usize) -> usize {
        let u = &self.users[k];
        (0..u.alphabet.len())
            .filter(|&s| u.pmf.iter().flatten().any(|row| row[s] > 0.0))
            .count()
    }

    /// Long-run mean raw symbol energy of MU `k`, averaging over parities and
    /// over equiprobable LU patterns.
    pub fn mean_energy(&self, k: usize) -> f64 {
        let u = &self.users[k];
        let mut total = 0.0;
        let mut count = 0usize;
        for parity in &u.pmf {
            for row in parity {
                total += row
                    .iter()
                    .zip(&u.alphabet)
                    .map(|(p, b)| p * b.norm_sqr())
                    .sum::<f64>();
                count += 1;
            }
        }
        total / count as f64
    }

    /// Probability of symbol `s` of MU `k` at a 1-based instant given the LU pattern.
    pub fn probability(&self, k: usize, instant: usize, pattern: usize, s: usize) -> f64 {
        self.users[k].pmf[parity(instant)][pattern][s]
    }

    fn check(&self) -> Result<()> {
        for (k, u) in self.users.iter().enumerate() {
            if u.alphabet.is_empty() {
                return Err(Error::Config(format!("MU {k} has an empty alphabet")));
            }
            if u.alphabet.iter().any(|b| !(b.re.is_finite() && b.im.is_finite())) {
                return Err(Error::Config(format!("MU {k} alphabet has non-finite values")));
            }
            for (parity, rows) in u.pmf.iter().enumerate() {
                let mut ever_positive = vec![false; u.alphabet.len()];
                for row in rows {
                    if row.len() != u.alphabet.len() {
                        return Err(Error::Config(format!(
                            "MU {k} pmf row has {} entries for {} symbols",
                            row.len(),
                            u.alphabet.len()
                        )));
                    }
                    if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                        return Err(Error::Config(format!("MU {k} pmf has a negative entry")));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > PMF_SUM_TOL {
                        return Err(Error::Config(format!("MU {k} pmf row sums to {sum}")));
                    }
                    for (flag, p) in ever_positive.iter_mut().zip(row) {
                        *flag |= *p > 0.0;
                    }
                }
                // A symbol used at this parity must stay possible under every LU pattern,
                // otherwise the LU symbols would rule it out deterministically.
                for row in rows {
                    for (s, p) in row.iter().enumerate() {
                        if ever_positive[s] && *p == 0.0 {
                            return Err(Error::Config(format!(
                                "MU {k} symbol {s} is impossible under some LU pattern at {} instants",
                                if parity == 0 { "odd" } else { "even" }
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn parity(instant: usize) -> usize {
    usize::from(instant % 2 == 0)
}

fn lu_pattern(lu_symbols: &[Complex64]) -> usize {
    lu_symbols
        .iter()
        .enumerate()
        .fold(0, |acc, (l, a)| if a.re > 0.0 { acc | (1 << l) } else { acc })
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Draws the raw MU symbols of one instant (1-based `instant_index`).
///
/// `lu_symbols` are the LU symbols already drawn for the same instant; only
/// their signs matter.
pub fn draw_symbols<R: Rng + ?Sized>(
    law: &SymbolLaw,
    instant_index: usize,
    lu_symbols: &[Complex64],
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if lu_symbols.len() != law.legit_users {
        return Err(Error::ShapeMismatch(format!(
            "symbol law expects {} LU symbols, got {}",
            law.legit_users,
            lu_symbols.len()
        )));
    }
    let pattern = lu_pattern(lu_symbols);
    let par = parity(instant_index);
    Ok(law
        .users
        .iter()
        .map(|u| u.alphabet[sample_index(&u.pmf[par][pattern], rng)])
        .collect())
}

/// One draw of standard circular-symmetric complex Gaussian, `E|x|^2 = 1`.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel matrices of the LUs (`h`, M x N_L) and MUs (`g`, M x N_M).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h: DMatrix<Complex64>,
    pub g: DMatrix<Complex64>,
}

impl ChannelSet {
    /// `[H, G]` as one M x K matrix.
    pub fn stacked(&self) -> DMatrix<Complex64> {
        let m = self.h.nrows();
        let mut out = DMatrix::zeros(m, self.h.ncols() + self.g.ncols());
        out.columns_mut(0, self.h.ncols()).copy_from(&self.h);
        out.columns_mut(self.h.ncols(), self.g.ncols()).copy_from(&self.g);
        out
    }

    fn well_conditioned(&self) -> bool {
        let sv = self.stacked().singular_values();
        let max = sv.max();
        let min = sv.min();
        max > 0.0 && min > 1e-9 * max
    }
}

/// Draws i.i.d. CSCG(0, 1) channels scaled by the path-loss factors.
pub fn generate_channels<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ChannelSet> {
    config.validate()?;
    let m = config.antennas;
    for _ in 0..MAX_CHANNEL_DRAWS {
        let mut h = DMatrix::from_fn(m, config.legit_users, |_, _| cscg(rng));
        let mut g = DMatrix::from_fn(m, config.malicious_users, |_, _| cscg(rng));
        for j in 0..config.legit_users {
            h.column_mut(j).scale_mut(config.legit_gain(j).sqrt());
        }
        for k in 0..config.malicious_users {
            g.column_mut(k).scale_mut(config.malicious_gain(k).sqrt());
        }
        let set = ChannelSet { h, g };
        if set.well_conditioned() {
            return Ok(set);
        }
    }
    Err(Error::DegenerateChannel {
        attempts: MAX_CHANNEL_DRAWS,
    })
}

/// Received matrix together with everything needed to score a separation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBatch {
    pub y: DMatrix<Complex64>,
    pub truth: ChannelSet,
    /// LU symbols, N_L x n.
    pub a: DMatrix<Complex64>,
    /// MU symbols, N_M x n.
    pub b: DMatrix<Complex64>,
    pub config: ScenarioConfig,
}

impl ObservationBatch {
    /// `Y - HA - GB`.
    pub fn noise(&self) -> DMatrix<Complex64> {
        &self.y - &self.truth.h * &self.a - &self.truth.g * &self.b
    }
}

/// Draws symbols and noise and forms `Y = HA + GB + W`.
///
/// Random draws are consumed in a fixed order (per instant: LU symbols, then
/// MU symbols; then the noise matrix column by column), and the noise is drawn
/// at unit variance before scaling, so the same generator state produces the
/// same realization shape at every SNR.
pub fn synthesize_observations<R: Rng + ?Sized>(
    channels: &ChannelSet,
    profile: &AttackProfile,
    config: &ScenarioConfig,
    rng: &mut R,
) -> Result<ObservationBatch> {
    config.validate()?;
    let (m, nl, nm, n) = (
        config.antennas,
        config.legit_users,
        config.malicious_users,
        config.observations,
    );
    if channels.h.shape() != (m, nl) || channels.g.shape() != (m, nm) {
        return Err(Error::ShapeMismatch("channel set does not match the scenario".into()));
    }
    let law = profile.compile(nl, nm)?;
    let ps = config.signal_power();
    let lu_amp = ps.sqrt();
    let mu_amp: Vec<f64> = (0..nm)
        .map(|k| (ps * config.mu_power_ratio / law.mean_energy(k)).sqrt())
        .collect();

    let mut a = DMatrix::zeros(nl, n);
    let mut b = DMatrix::zeros(nm, n);
    let mut lu = vec![Complex64::new(0.0, 0.0); nl];
    for i in 0..n {
        for s in lu.iter_mut() {
            *s = Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0);
        }
        let mu = draw_symbols(&law, i + 1, &lu, rng)?;
        for (l, s) in lu.iter().enumerate() {
            a[(l, i)] = s * lu_amp;
        }
        for (k, s) in mu.iter().enumerate() {
            b[(k, i)] = s * mu_amp[k];
        }
    }

    let sigma = config.noise_variance.sqrt();
    let w = DMatrix::from_fn(m, n, |_, _| cscg(rng) * sigma);
    let y = &channels.h * &a + &channels.g * &b + w;
    Ok(ObservationBatch {
        y,
        truth: channels.clone(),
        a,
        b,
        config: config.clone(),
    })
}
