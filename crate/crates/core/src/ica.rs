//! Fixed-point complex ICA baseline.
//!
//! Deflationary FastICA for complex sources. The default update carries the
//! pseudo-covariance term, so real-valued constellations such as BPSK and
//! PAM embedded in complex mixtures are handled; the circular update is
//! available for comparison.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scenario::cscg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Nonlinearity {
    /// `G(u) = u^2 / 2` on `u = |y|^2`.
    #[default]
    Kurtosis,
    /// `G(u) = log cosh(sqrt(u))`.
    LogCoshMagnitude,
}

impl Nonlinearity {
    /// `(G'(u), G''(u))`.
    fn derivatives(self, u: f64) -> (f64, f64) {
        match self {
            Nonlinearity::Kurtosis => (u, 1.0),
            Nonlinearity::LogCoshMagnitude => {
                if u < 1e-4 {
                    (0.5 - u / 6.0 + u * u / 15.0, -1.0 / 6.0 + 2.0 * u / 15.0)
                } else {
                    let s = u.sqrt();
                    let t = s.tanh();
                    let sech2 = 1.0 - t * t;
                    (t / (2.0 * s), (s * sech2 - t) / (4.0 * s * s * s))
                }
            }
        }
    }
}

/// Which source model the fixed-point update assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SourceModel {
    /// Circular sources: the classic complex update without the
    /// pseudo-covariance term. It locks onto wrong directions for
    /// real-valued constellations.
    Circular,
    /// Sources with nonzero pseudo-covariance, such as BPSK or PAM.
    #[default]
    Noncircular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub nonlinearity: Nonlinearity,
    pub source_model: SourceModel,
    pub rng_seed: u64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-6,
            nonlinearity: Nonlinearity::Kurtosis,
            source_model: SourceModel::Noncircular,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaResult {
    /// Estimated mixing columns in subspace coordinates, unit norm.
    pub directions: Vec<DVector<Complex64>>,
    /// Separating vectors in the whitened domain, orthonormal.
    pub whitened: Vec<DVector<Complex64>>,
    /// False when some component hit `max_iterations`; its last iterate is kept.
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates `k` mixing directions from the K x n data `z`.
pub fn ica_separate(z: &DMatrix<Complex64>, k: usize, config: &IcaConfig) -> Result<IcaResult> {
    if config.max_iterations == 0 || !(config.tolerance > 0.0) {
        return Err(Error::Config("ICA needs max_iterations >= 1 and tolerance > 0".into()));
    }
    let (dim, n) = z.shape();
    if dim != k {
        return Err(Error::ShapeMismatch(format!("data has {dim} rows, expected {k}")));
    }
    if n <= 10 * k {
        return Err(Error::TooFewSamples { needed: 10 * k, got: n });
    }
    if k == 1 {
        let one = DVector::from_element(1, Complex64::new(1.0, 0.0));
        return Ok(IcaResult {
            directions: vec![one.clone()],
            whitened: vec![one],
            converged: true,
            iterations: 0,
        });
    }

    let mean: Vec<Complex64> = (0..k).map(|r| z.row(r).sum() / n as f64).collect();
    let centered = DMatrix::from_fn(k, n, |r, c| z[(r, c)] - mean[r]);
    let cov = (&centered * centered.adjoint()).unscale(n as f64);
    let eig = cov.symmetric_eigen();
    let top = eig.eigenvalues.max();
    if !(eig.eigenvalues.min() > 1e-12 * top) {
        return Err(Error::RankDeficient {
            rank: k,
            ratio: eig.eigenvalues.min() / top,
        });
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(v.powf(-0.5), 0.0)));
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| Complex64::new(v.sqrt(), 0.0)));
    let whiten = &inv_sqrt * eig.eigenvectors.adjoint();
    let dewhiten = &eig.eigenvectors * &sqrt;
    let x = &whiten * &centered;
    let pseudo = (&x * x.transpose()).unscale(n as f64);

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut found: Vec<DVector<Complex64>> = Vec::with_capacity(k);
    let mut converged = true;
    let mut iterations = 0;
    for _ in 0..k {
        let mut w = DVector::from_fn(k, |_, _| cscg(&mut rng));
        deflate(&mut w, &found);
        let mut done = false;
        for _ in 0..config.max_iterations {
            iterations += 1;
            let mut next = update(&w, &x, &pseudo, config);
            deflate(&mut next, &found);
            let change = 1.0 - w.dotc(&next).norm();
            w = next;
            if change.abs() < config.tolerance {
                done = true;
                break;
            }
        }
        converged &= done;
        found.push(w);
    }

    let directions = found.iter().map(|w| (&dewhiten * w).normalize()).collect();
    Ok(IcaResult {
        directions,
        whitened: found,
        converged,
        iterations,
    })
}

fn update(
    w: &DVector<Complex64>,
    x: &DMatrix<Complex64>,
    pseudo: &DMatrix<Complex64>,
    config: &IcaConfig,
) -> DVector<Complex64> {
    let nl = config.nonlinearity;
    let (k, n) = x.shape();
    let mut first = DVector::<Complex64>::zeros(k);
    let mut scalar = 0.0;
    let mut conj_term = Complex64::default();
    for xi in x.column_iter() {
        let y = w.dotc(&xi);
        let u = y.norm_sqr();
        let (g, dg) = nl.derivatives(u);
        let yc = y.conj();
        first.axpy(yc * g, &xi, Complex64::new(1.0, 0.0));
        scalar += g + u * dg;
        conj_term += yc * yc * dg;
    }
    let inv_n = 1.0 / n as f64;
    let mut next = first.unscale(n as f64);
    next -= w.scale(scalar * inv_n);
    if config.source_model == SourceModel::Noncircular {
        next -= pseudo * w.conjugate() * (conj_term * inv_n);
    }
    next
}

fn deflate(w: &mut DVector<Complex64>, found: &[DVector<Complex64>]) {
    for q in found {
        let proj = q.dotc(w);
        w.axpy(-proj, q, Complex64::new(1.0, 0.0));
    }
    let norm = w.norm();
    if norm > 0.0 {
        w.unscale_mut(norm);
    }
}
