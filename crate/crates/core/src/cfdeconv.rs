//! Characteristic-function deconvolution of quantized empirical pmfs.
//!
//! The pmf of the noisy projections is embedded on the fine grid, transformed
//! with a dense real FFT, divided by the Gaussian noise characteristic
//! function and transformed back. The noiseless alphabet estimate is then the
//! set of lattice points whose recovered mass exceeds a threshold.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::fftn::RealFftN;
use crate::quantgrid::{decode, encode, QuantGrid, QuantizedPmf};

pub const DEFAULT_AMP_CAP: f64 = 1e6;
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 24;
const PRUNE_BELOW: f64 = 1e-12;

/// Frequencies `2 pi k / ((m2 - 1) delta2)`, `k = 0..m2-1`, on every axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    grid: QuantGrid,
    dims: usize,
}

impl FrequencyGrid {
    pub fn new(grid2: QuantGrid, dims: usize) -> Self {
        Self { grid: grid2, dims }
    }

    pub fn grid(&self) -> &QuantGrid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Frequencies per axis, `m2 - 1`.
    pub fn len(&self) -> usize {
        self.grid.m() - 1
    }

    /// Total number of frequency points, if it fits in `u128`.
    pub fn cells(&self) -> u128 {
        (self.len() as u128).saturating_pow(self.dims as u32)
    }

    fn step(&self) -> f64 {
        2.0 * PI / (self.len() as f64 * self.grid.delta())
    }

    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.frequency(k)).collect()
    }

    /// Representative of `frequency(k)` closest to zero among its aliases.
    pub fn principal(&self, k: usize) -> f64 {
        let l = self.len();
        if 2 * k <= l {
            self.frequency(k)
        } else {
            -((l - k) as f64) * self.step()
        }
    }
}

/// Characteristic function of the projected noise, `exp(-sigma2 |omega|^2 / (4M))`.
pub fn noise_cf(sigma2: f64, antennas: usize, omega: &[f64]) -> f64 {
    let norm2: f64 = omega.iter().map(|w| w * w).sum();
    (-(sigma2 / (4.0 * antennas as f64)) * norm2).exp()
}

/// Dense complex values on the full frequency grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CfArray {
    pub len: usize,
    pub dims: usize,
    pub values: Vec<Complex64>,
}

impl CfArray {
    pub fn at(&self, k: &[usize]) -> Complex64 {
        let idx = k.iter().fold(0usize, |acc, &v| acc * self.len + v);
        self.values[idx]
    }
}

fn check_budget(freqs: &FrequencyGrid, budget: u64) -> Result<usize> {
    let cells = freqs.cells();
    if cells > budget as u128 {
        return Err(Error::BudgetExceeded { cells, budget });
    }
    Ok(cells as usize)
}

/// Linear positions of the masses of `pmf` on the fine lattice of side
/// `m2 - 1`. The top level aliases onto index zero.
fn embed(pmf: &QuantizedPmf, freqs: &FrequencyGrid, budget: u64) -> Result<Vec<(usize, f64)>> {
    if pmf.dims() != freqs.dims() {
        return Err(Error::ShapeMismatch(format!(
            "pmf has {} dimensions, frequency grid has {}",
            pmf.dims(),
            freqs.dims()
        )));
    }
    let ratio = freqs.grid().refinement(pmf.grid())?;
    check_budget(freqs, budget)?;
    let l = freqs.len();
    Ok(pmf
        .iter()
        .map(|(idx, mass)| (idx.iter().fold(0usize, |acc, &j| acc * l + (j * ratio) % l), mass))
        .collect())
}

/// `sum_u mass(u) exp(-i u . omega)` at every point of the frequency grid.
pub fn forward_cf(
    pmf: &QuantizedPmf,
    freqs: &FrequencyGrid,
    cell_budget: u64,
    exec: Execution,
) -> Result<CfArray> {
    let points = embed(pmf, freqs, cell_budget)?;
    let (l, d) = (freqs.len(), freqs.dims());
    let plan = RealFftN::new(l, d, exec);
    let half_spec = plan.forward_sparse(&points);
    let half = plan.half_len();
    let alpha = freqs.grid().alpha();
    let omega = freqs.frequencies();

    let cells = l.pow(d as u32);
    let values = exec::map_range(exec, cells, |i| {
        let mut k = vec![0usize; d];
        let mut rest = i;
        for slot in k.iter_mut().rev() {
            *slot = rest % l;
            rest /= l;
        }
        let last = k[d - 1];
        let dft = if last < half {
            half_spec[k[..d - 1].iter().fold(0, |acc, &v| acc * l + v) * half + last]
        } else {
            let mirrored = k[..d - 1].iter().fold(0, |acc, &v| acc * l + (l - v) % l);
            half_spec[mirrored * half + (l - last)].conj()
        };
        let shift: f64 = k.iter().map(|&v| omega[v]).sum::<f64>() * alpha;
        dft * Complex64::from_polar(1.0, shift)
    });
    Ok(CfArray { len: l, dims: d, values })
}

/// Tuning of [`deconvolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconvOptions {
    /// Upper bound on the noise amplification `1 / noise_cf`.
    pub amp_cap: f64,
    /// Largest admissible dense lattice, in cells.
    pub cell_budget: u64,
    pub exec: Execution,
}

impl Default for DeconvOptions {
    fn default() -> Self {
        Self {
            amp_cap: DEFAULT_AMP_CAP,
            cell_budget: DEFAULT_CELL_BUDGET,
            exec: Execution::default(),
        }
    }
}

/// Output of [`deconvolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct Deconvolution {
    pub pmf: QuantizedPmf,
    /// Share of frequencies whose amplification hit `amp_cap`.
    pub clamped_fraction: f64,
}

/// Estimates the noiseless pmf on `grid2` from the noisy pmf `pmf_z` on grid 1.
///
/// The division uses each frequency's alias nearest zero, which is the
/// frequency at which a band-limited reading of the lattice pmf samples the
/// noise law.
pub fn deconvolve(
    pmf_z: &QuantizedPmf,
    grid2: &QuantGrid,
    sigma2: f64,
    antennas: usize,
    opts: &DeconvOptions,
) -> Result<Deconvolution> {
    if !(opts.amp_cap >= 1.0) {
        return Err(Error::Config(format!("amp_cap must be at least 1, got {}", opts.amp_cap)));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) || antennas == 0 {
        return Err(Error::Config("noise variance must be non-negative and antennas positive".into()));
    }
    let freqs = FrequencyGrid::new(*grid2, pmf_z.dims());
    let points = embed(pmf_z, &freqs, opts.cell_budget)?;
    let (l, d) = (freqs.len(), freqs.dims());
    let plan = RealFftN::new(l, d, opts.exec);
    let half = plan.half_len();
    let c = sigma2 / (4.0 * antennas as f64);
    let sq: Vec<f64> = (0..l).map(|k| freqs.principal(k).powi(2)).collect();
    let log_cap = opts.amp_cap.ln();
    let prefix_of = |line: usize| {
        let mut rest = line;
        let mut s = 0.0;
        for _ in 0..d - 1 {
            s += sq[rest % l];
            rest /= l;
        }
        s
    };
    let multiplicity = |h: usize| if h == 0 || 2 * h == l { 1 } else { 2 };

    let clamped_fraction = if c > 0.0 {
        let lines = plan.spectrum_len() / half;
        let counts = exec::map_range(opts.exec, lines, |line| {
            let p = prefix_of(line);
            (0..half)
                .filter(|&h| c * (p + sq[h]) > log_cap)
                .map(multiplicity)
                .sum::<u64>()
        });
        counts.iter().sum::<u64>() as f64 / freqs.cells() as f64
    } else {
        0.0
    };
    if clamped_fraction > 0.5 {
        return Err(Error::NoiseTooLarge {
            fraction: clamped_fraction,
        });
    }

    let mut spec = plan.forward_sparse(&points);
    if c > 0.0 {
        let last_axis: Vec<f64> = sq[..half].iter().map(|&q| (c * q).exp()).collect();
        let sq_max = sq[..half].iter().copied().fold(0.0, f64::max);
        exec::for_each_chunk(opts.exec, &mut spec, half, |line, chunk| {
            let p = prefix_of(line);
            if c * (p + sq_max) <= log_cap {
                let base = (c * p).exp();
                for (v, &f) in chunk.iter_mut().zip(&last_axis) {
                    *v *= base * f;
                }
            } else {
                for (h, v) in chunk.iter_mut().enumerate() {
                    *v *= (c * (p + sq[h])).min(log_cap).exp();
                }
            }
        });
    }
    let m2 = grid2.m();
    let pieces = plan.inverse_chunks(spec, |start, values| {
        let mut digits = vec![0usize; d];
        let mut kept = Vec::new();
        for (i, &v) in values.iter().enumerate() {
            if v > PRUNE_BELOW {
                let mut rest = start + i;
                for slot in digits.iter_mut().rev() {
                    *slot = rest % l;
                    rest /= l;
                }
                kept.push((encode(&digits, m2), v));
            }
        }
        kept
    });
    let entries: Vec<(u64, f64)> = pieces.into_iter().flatten().collect();
    let total: f64 = entries.iter().map(|e| e.1).sum();
    if !(total > 0.0) {
        return Err(Error::EmptySupport { epsilon: PRUNE_BELOW });
    }
    let pmf = QuantizedPmf::from_linear(*grid2, d, entries).normalized();
    Ok(Deconvolution {
        pmf,
        clamped_fraction,
    })
}

/// One retained lattice point.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub index: Vec<usize>,
    pub value: Vec<Complex64>,
    pub mass: f64,
}

/// Estimated noiseless alphabet, heaviest points first.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    pub points: Vec<SupportPoint>,
    pub epsilon: f64,
}

impl SupportSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mass).collect()
    }
}

/// Keeps the lattice points with mass strictly above `epsilon`.
pub fn essential_support(pmf_hat: &QuantizedPmf, epsilon: f64) -> Result<SupportSet> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let (m, dims) = (pmf_hat.grid().m(), pmf_hat.dims());
    let mut points: Vec<SupportPoint> = pmf_hat
        .linear()
        .iter()
        .filter(|e| e.1 > epsilon)
        .map(|&(key, mass)| {
            let index = decode(key, m, dims);
            SupportPoint {
                value: pmf_hat.value_at(&index),
                index,
                mass,
            }
        })
        .collect();
    if points.is_empty() {
        return Err(Error::EmptySupport { epsilon });
    }
    // `iter` yields increasing lattice order, so a stable sort breaks ties by index.
    points.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    Ok(SupportSet { points, epsilon })
}

/// Threshold halfway across the largest drop of the sorted mass curve.
pub fn largest_gap_threshold(pmf: &QuantizedPmf) -> Option<f64> {
    let mut masses: Vec<f64> = pmf.linear().iter().map(|e| e.1).collect();
    masses.sort_by(|a, b| b.total_cmp(a));
    masses.push(0.0);
    masses
        .windows(2)
        .max_by(|a, b| (a[0] - a[1]).total_cmp(&(b[0] - b[1])))
        .map(|w| 0.5 * (w[0] + w[1]))
        .filter(|t| *t > 0.0 && *t < 1.0)
}
