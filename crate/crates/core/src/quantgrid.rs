//! Uniform quantization lattice and sparse empirical pmfs over it.
//!
//! A K-dimensional complex vector lives on a `2K`-dimensional real lattice,
//! ordered as the K real parts followed by the K imaginary parts.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Levels `-alpha = u_0 < u_1 < ... < u_{m-1} = alpha` with spacing `delta`.
///
/// Level `j` owns the right-closed cell `(u_{j-1}, u_j]`; the end cells extend
/// to infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantGrid {
    alpha: f64,
    delta: f64,
    levels: usize,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Builds the grid with `m` levels on `[-alpha, alpha]`.
pub fn build_grid(alpha: f64, m: usize) -> Result<QuantGrid> {
    QuantGrid::new(alpha, m)
}

impl QuantGrid {
    pub fn new(alpha: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("grid needs at least 2 levels, got {m}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("grid half-width must be positive, got {alpha}")));
        }
        Ok(Self {
            alpha,
            delta: 2.0 * alpha / (m - 1) as f64,
            levels: m,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m(&self) -> usize {
        self.levels
    }

    /// Level value `u_j`. Computed from integers so that refined grids share
    /// bit-identical values at common levels.
    pub fn level(&self, j: usize) -> f64 {
        let span = (self.levels - 1) as i64;
        let num = 2 * j as i64 - span;
        let g = gcd(num.unsigned_abs(), span as u64) as i64;
        self.alpha * (num / g) as f64 / (span / g) as f64
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.levels).map(|j| self.level(j)).collect()
    }

    /// Index of the cell containing `v`.
    pub fn index_of(&self, v: f64) -> usize {
        let top = self.levels - 1;
        if v.is_nan() {
            return 0;
        }
        let guess = ((v + self.alpha) / self.delta).ceil();
        let mut j = if guess <= 0.0 {
            0
        } else if guess >= top as f64 {
            top
        } else {
            guess as usize
        };
        while j > 0 && v <= self.level(j - 1) {
            j -= 1;
        }
        while j < top && v > self.level(j) {
            j += 1;
        }
        j
    }

    /// Whether `self` refines `coarse`: same half-width and an integer level ratio.
    pub fn refines(&self, coarse: &QuantGrid) -> bool {
        self.alpha == coarse.alpha && (self.levels - 1).is_multiple_of(coarse.levels - 1)
    }

    /// Level ratio `(m2 - 1) / (m1 - 1)` when `self` refines `coarse`.
    pub fn refinement(&self, coarse: &QuantGrid) -> Result<usize> {
        if !self.refines(coarse) {
            return Err(Error::Config(format!(
                "grid with m2 = {} (alpha {}) does not refine m1 = {} (alpha {})",
                self.levels, self.alpha, coarse.levels, coarse.alpha
            )));
        }
        Ok((self.levels - 1) / (coarse.levels - 1))
    }
}

/// Half-width for the given projected data: the spec'd `scale * max |Re|,|Im|`,
/// raised when needed so all data stays at or below `alpha - delta2`.
pub fn auto_alpha(z: &DMatrix<Complex64>, m2: usize, scale: f64) -> f64 {
    let max_abs = z.iter().fold(0.0f64, |acc, v| acc.max(v.re.abs()).max(v.im.abs()));
    if max_abs == 0.0 || !max_abs.is_finite() {
        return 1.0;
    }
    let keep_top_free = if m2 > 3 {
        (m2 - 1) as f64 / (m2 - 3) as f64
    } else {
        1.0
    };
    max_abs * scale.max(keep_top_free * (1.0 + 1e-9))
}

/// Lattice index of a complex vector: real parts first, then imaginary parts.
pub fn quantize_vector(z: &[Complex64], grid: &QuantGrid) -> Vec<usize> {
    z.iter()
        .map(|v| grid.index_of(v.re))
        .chain(z.iter().map(|v| grid.index_of(v.im)))
        .collect()
}

/// Sparse pmf over a `dims`-dimensional lattice, stored as
/// `(linear index, mass)` pairs sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPmf {
    grid: QuantGrid,
    dims: usize,
    entries: Vec<(u64, f64)>,
}

fn lattice_cells(m: usize, dims: usize) -> Option<u64> {
    (m as u64).checked_pow(dims as u32)
}

impl QuantizedPmf {
    /// Builds a pmf from `(index tuple, mass)` pairs, merging duplicates.
    /// Masses are used as given.
    pub fn from_points(grid: QuantGrid, dims: usize, points: &[(Vec<usize>, f64)]) -> Result<Self> {
        Self::check_dims(&grid, dims)?;
        let mut entries = Vec::with_capacity(points.len());
        for (idx, mass) in points {
            if idx.len() != dims || idx.iter().any(|&j| j >= grid.m()) {
                return Err(Error::ShapeMismatch(format!(
                    "lattice index {idx:?} outside a {dims}-dimensional grid with {} levels",
                    grid.m()
                )));
            }
            entries.push((encode(idx, grid.m()), *mass));
        }
        Ok(Self::from_linear(grid, dims, entries))
    }

    pub(crate) fn from_linear(grid: QuantGrid, dims: usize, mut entries: Vec<(u64, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (k, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += v,
                _ => merged.push((k, v)),
            }
        }
        Self {
            grid,
            dims,
            entries: merged,
        }
    }

    fn check_dims(grid: &QuantGrid, dims: usize) -> Result<()> {
        if dims == 0 || lattice_cells(grid.m(), dims).is_none() {
            return Err(Error::Config(format!(
                "a {dims}-dimensional lattice with {} levels cannot be indexed",
                grid.m()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &QuantGrid {
        &self.grid
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Number of occupied cells.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn mass_at(&self, idx: &[usize]) -> f64 {
        if idx.len() != self.dims || idx.iter().any(|&j| j >= self.grid.m()) {
            return 0.0;
        }
        let key = encode(idx, self.grid.m());
        self.entries
            .binary_search_by_key(&key, |e| e.0)
            .map_or(0.0, |i| self.entries[i].1)
    }

    /// Occupied cells as `(index tuple, mass)` in increasing linear order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.entries
            .iter()
            .map(|&(k, v)| (decode(k, self.grid.m(), self.dims), v))
    }

    pub(crate) fn linear(&self) -> &[(u64, f64)] {
        &self.entries
    }

    /// Complex K-vector at a lattice index (`dims` must be even).
    pub fn value_at(&self, idx: &[usize]) -> Vec<Complex64> {
        let k = self.dims / 2;
        (0..k)
            .map(|t| Complex64::new(self.grid.level(idx[t]), self.grid.level(idx[k + t])))
            .collect()
    }

    /// Scales masses to sum to one.
    pub fn normalized(mut self) -> Self {
        let total = self.total_mass();
        if total > 0.0 {
            for e in &mut self.entries {
                e.1 /= total;
            }
        }
        self
    }
}

pub(crate) fn encode(idx: &[usize], m: usize) -> u64 {
    idx.iter().fold(0u64, |acc, &j| acc * m as u64 + j as u64)
}

pub(crate) fn decode(mut key: u64, m: usize, dims: usize) -> Vec<usize> {
    let mut out = vec![0; dims];
    for slot in out.iter_mut().rev() {
        *slot = (key % m as u64) as usize;
        key /= m as u64;
    }
    out
}

/// Empirical pmf of the quantized columns of `z` (K x n).
pub fn empirical_pmf(z: &DMatrix<Complex64>, grid: &QuantGrid) -> Result<QuantizedPmf> {
    let n = z.ncols();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let dims = 2 * z.nrows();
    QuantizedPmf::check_dims(grid, dims)?;
    let mut keys: Vec<u64> = z
        .column_iter()
        .map(|col| encode(&quantize_vector(col.as_slice(), grid), grid.m()))
        .collect();
    keys.sort_unstable();
    let mut entries: Vec<(u64, f64)> = Vec::new();
    let mut start = 0;
    while start < keys.len() {
        let end = start + keys[start..].iter().take_while(|&&k| k == keys[start]).count();
        entries.push((keys[start], (end - start) as f64 / n as f64));
        start = end;
    }
    Ok(QuantizedPmf {
        grid: *grid,
        dims,
        entries,
    })
}
