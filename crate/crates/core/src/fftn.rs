//! Dense multi-dimensional real FFT on a hypercube of side `len`.
//!
//! Arrays are row-major with the last axis contiguous. The forward transform
//! keeps only the non-negative half of the last frequency axis, so a
//! spectrum has shape `[len; dims - 1] x (len / 2 + 1)`.
//!
//! The other axes are transformed in place, a few adjacent columns at a
//! time: each group is gathered into a small contiguous buffer, transformed
//! and written back.

use std::sync::Arc;

use num_complex::Complex64;
use realfft::{RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::exec::{self, Execution};

const LINES_TARGET: usize = 8192;
const COLUMN_GROUP: usize = 32;

pub struct RealFftN {
    len: usize,
    dims: usize,
    exec: Execution,
    r2c: Arc<dyn RealToComplex<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RealFftN {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFftN")
            .field("len", &self.len)
            .field("dims", &self.dims)
            .field("exec", &self.exec)
            .finish()
    }
}

impl RealFftN {
    pub fn new(len: usize, dims: usize, exec: Execution) -> Self {
        assert!(len >= 1 && dims >= 1, "transform needs a positive side and rank");
        let mut real = RealFftPlanner::<f64>::new();
        let mut complex = FftPlanner::<f64>::new();
        Self {
            len,
            dims,
            exec,
            r2c: real.plan_fft_forward(len),
            fwd: complex.plan_fft_forward(len),
            inv: complex.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn half_len(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn real_len(&self) -> usize {
        self.len.pow(self.dims as u32)
    }

    pub fn spectrum_len(&self) -> usize {
        self.len.pow(self.dims as u32 - 1) * self.half_len()
    }

    /// Unnormalized forward transform, kernel `exp(-2 pi i k x / len)`.
    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.real_len(), "input does not match the transform shape");
        let (len, half) = (self.len, self.half_len());
        let mut spec = vec![Complex64::default(); self.spectrum_len()];
        let batch = (LINES_TARGET / len).max(1);
        exec::for_each_chunk(self.exec, &mut spec, half * batch, |ci, chunk| {
            let mut line = vec![0.0; len];
            let mut scratch = self.r2c.make_scratch_vec();
            for (li, out) in chunk.chunks_mut(half).enumerate() {
                let g = ci * batch + li;
                let src = &input[g * len..(g + 1) * len];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                line.copy_from_slice(src);
                self.r2c
                    .process_with_scratch(&mut line, out, &mut scratch)
                    .expect("buffer lengths match the plan");
            }
        });
        for axis in (0..self.dims - 1).rev() {
            self.axis_pass(&mut spec, axis, &self.fwd);
        }
        spec
    }

    /// [`forward`](Self::forward) of an array given as `(linear index, value)`
    /// pairs, all other cells zero. Repeated indices add up.
    pub fn forward_sparse(&self, points: &[(usize, f64)]) -> Vec<Complex64> {
        let (len, half) = (self.len, self.half_len());
        let mut spec = vec![Complex64::default(); self.spectrum_len()];
        let twiddle: Vec<Complex64> = (0..len)
            .map(|t| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * t as f64 / len as f64))
            .collect();
        for &(index, value) in points {
            assert!(index < self.real_len(), "point outside the transform shape");
            let (line, x) = (index / len, index % len);
            for (h, out) in spec[line * half..(line + 1) * half].iter_mut().enumerate() {
                *out += twiddle[(h * x) % len] * value;
            }
        }
        for axis in (0..self.dims - 1).rev() {
            self.axis_pass(&mut spec, axis, &self.fwd);
        }
        spec
    }

    /// Inverse of [`forward`](Self::forward), including the `1 / len^dims` factor.
    pub fn inverse(&self, spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse_chunks(spectrum, |_, chunk| chunk.to_vec())
            .into_iter()
            .flatten()
            .collect()
    }

    /// Inverse transform handed to `visit` one block of consecutive cells at
    /// a time, so the dense result never has to exist as a whole. `visit`
    /// receives the linear index of the block's first cell.
    pub fn inverse_chunks<T, F>(&self, mut spectrum: Vec<Complex64>, visit: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize, &[f64]) -> T + Sync + Send,
    {
        assert_eq!(spectrum.len(), self.spectrum_len(), "spectrum does not match the transform shape");
        let (len, half) = (self.len, self.half_len());
        for axis in 0..self.dims - 1 {
            self.axis_pass(&mut spectrum, axis, &self.inv);
        }
        let scale = 1.0 / self.real_len() as f64;
        let batch = (LINES_TARGET / len).max(1);
        let total_lines = self.real_len() / len;
        let even = len % 2 == 0;
        let spectrum = &spectrum;
        // The last axis goes through a batched complex transform of the
        // Hermitian-extended lines, which beats one real call per line.
        exec::map_range(self.exec, total_lines.div_ceil(batch), |ci| {
            let first = ci * batch;
            let lines = batch.min(total_lines - first);
            let mut buf = vec![Complex64::default(); lines * len];
            let mut scratch = vec![Complex64::default(); self.inv.get_inplace_scratch_len()];
            for li in 0..lines {
                let g = first + li;
                let src = &spectrum[g * half..(g + 1) * half];
                let dst = &mut buf[li * len..(li + 1) * len];
                dst[..half].copy_from_slice(src);
                // Exact Hermitian symmetry makes these real; drop round-off.
                dst[0].im = 0.0;
                if even {
                    dst[half - 1].im = 0.0;
                }
                for k in half..len {
                    dst[k] = src[len - k].conj();
                }
            }
            self.inv.process_with_scratch(&mut buf, &mut scratch);
            let real: Vec<f64> = buf.iter().map(|v| v.re * scale).collect();
            visit(first * len, &real)
        })
    }

    /// Complex transform along `axis` (one of the first `dims - 1` axes).
    fn axis_pass(&self, data: &mut [Complex64], axis: usize, plan: &Arc<dyn Fft<f64>>) {
        let len = self.len;
        let stride = self.len.pow((self.dims - 2 - axis) as u32) * self.half_len();
        let group = COLUMN_GROUP.min(stride);
        let mut work: Vec<Vec<&mut [Complex64]>> = Vec::new();
        for slab in data.chunks_mut(len * stride) {
            let first = work.len();
            work.extend((0..stride.div_ceil(group)).map(|_| Vec::with_capacity(len)));
            for row in slab.chunks_mut(stride) {
                for (g, piece) in row.chunks_mut(group).enumerate() {
                    work[first + g].push(piece);
                }
            }
        }
        exec::for_each_owned(self.exec, work, |mut rows| {
            if rows.iter().all(|piece| piece.iter().all(|v| v.re == 0.0 && v.im == 0.0)) {
                return;
            }
            let width = rows[0].len();
            let mut buf = vec![Complex64::default(); width * len];
            let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
            for (r, piece) in rows.iter().enumerate() {
                for (c, v) in piece.iter().enumerate() {
                    buf[c * len + r] = *v;
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (r, piece) in rows.iter_mut().enumerate() {
                for (c, v) in piece.iter_mut().enumerate() {
                    *v = buf[c * len + r];
                }
            }
        });
    }
}
