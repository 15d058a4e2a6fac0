//! Signal-subspace estimation, projection and direction reconstruction.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Leading left singular vectors of the observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    /// M x K with orthonormal columns.
    pub basis: DMatrix<Complex64>,
    /// The K leading singular values, descending.
    pub singular_values: Vec<f64>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthogonal projector `S S^H`.
    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.basis * self.basis.adjoint()
    }
}

/// Observations expressed in subspace coordinates, K x n.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedData {
    pub z: DMatrix<Complex64>,
}

/// Returns the `k` leading left singular vectors of `y`.
pub fn estimate_signal_subspace(y: &DMatrix<Complex64>, k: usize) -> Result<SubspaceBasis> {
    let (m, n) = y.shape();
    if k == 0 || k > m || k > n {
        return Err(Error::ShapeMismatch(format!(
            "cannot extract {k} singular vectors from a {m}x{n} matrix"
        )));
    }
    let svd = y.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let order = &order[..k];

    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = singular_values[0];
    let ratio = if top > 0.0 { singular_values[k - 1] / top } else { 0.0 };
    if ratio < 1e-12 {
        return Err(Error::RankDeficient { rank: k, ratio });
    }
    let basis = DMatrix::from_fn(m, k, |r, c| u[(r, order[c])]);
    Ok(SubspaceBasis {
        basis,
        singular_values,
    })
}

/// `Z = S^H Y / sqrt(M)`.
pub fn project(y: &DMatrix<Complex64>, basis: &SubspaceBasis, antennas: usize) -> Result<ProjectedData> {
    if y.nrows() != basis.basis.nrows() || antennas != y.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "Y has {} rows, basis has {}, antennas = {antennas}",
            y.nrows(),
            basis.basis.nrows()
        )));
    }
    let scale = 1.0 / (antennas as f64).sqrt();
    let z = (basis.basis.adjoint() * y).map(|v| v * scale);
    Ok(ProjectedData { z })
}

/// Maps subspace coordinates back to unit M-vectors: `sqrt(M) S d / |.|`.
pub fn reconstruct_directions(
    basis: &SubspaceBasis,
    selected: &[DVector<Complex64>],
) -> Result<Vec<DVector<Complex64>>> {
    selected
        .iter()
        .map(|d| {
            if d.len() != basis.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "selected vector has length {}, subspace has dimension {}",
                    d.len(),
                    basis.dim()
                )));
            }
            if d.norm() < 1e-12 {
                return Err(Error::ZeroVector);
            }
            // The sqrt(M) factor cancels under normalization.
            let v = &basis.basis * d;
            let norm = v.norm();
            if norm < 1e-12 {
                return Err(Error::ZeroVector);
            }
            Ok(v.unscale(norm))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::cscg;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| cscg(&mut r))
    }

    #[test]
    fn basis_is_orthonormal_and_sorted() {
        let y = random(12, 40, 1);
        let s = estimate_signal_subspace(&y, 4).unwrap();
        let gram = s.basis.adjoint() * &s.basis;
        assert!((gram - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-10);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn noiseless_rank_k_subspace_is_exact() {
        let hg = random(10, 3, 2);
        let x = random(3, 30, 3);
        let s = estimate_signal_subspace(&(&hg * &x), 3).unwrap();
        let residual = &hg - s.projector() * &hg;
        assert!(residual.norm() < 1e-9 * hg.norm());
    }

    #[test]
    fn identity_matrix_gives_unit_singular_values() {
        let y = DMatrix::<Complex64>::identity(5, 5);
        let s = estimate_signal_subspace(&y, 2).unwrap();
        assert!(s.singular_values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn rank_deficiency_detected() {
        let y = random(8, 1, 4) * random(1, 20, 5);
        assert!(matches!(
            estimate_signal_subspace(&y, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn projection_identities() {
        let m = 9;
        let y = random(m, 25, 6);
        let s = estimate_signal_subspace(&y, 3).unwrap();
        let sqrt_m = (m as f64).sqrt();

        let y_basis = s.basis.map(|v| v * sqrt_m);
        let z = project(&y_basis, &s, m).unwrap().z;
        assert!((z - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-12);

        let z0 = project(&DMatrix::zeros(m, 4), &s, m).unwrap().z;
        assert!(z0.iter().all(|v| v.norm() == 0.0));

        let z = project(&y, &s, m).unwrap().z;
        let lifted = (&s.basis * z).map(|v| v * sqrt_m);
        assert!((lifted - s.projector() * &y).norm() < 1e-10);
        assert!(project(&y, &s, m + 1).is_err());
    }

    #[test]
    fn reconstruction_recovers_in_span_vectors() {
        let m = 16;
        let y = random(m, 50, 7);
        let s = estimate_signal_subspace(&y, 3).unwrap();
        let h = &s.basis * random(3, 1, 8).column(0);
        let sel = s.basis.adjoint() * &h / Complex64::new((m as f64).sqrt(), 0.0);
        let d = reconstruct_directions(&s, &[sel]).unwrap();
        let cos = (h.adjoint() * &d[0])[(0, 0)].norm() / h.norm();
        assert!(cos > 1.0 - 1e-10);

        let e1 = DVector::from_fn(3, |i, _| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0));
        let d = reconstruct_directions(&s, &[e1]).unwrap();
        assert!((&d[0] - s.basis.column(0)).norm() < 1e-12);
        assert!(matches!(
            reconstruct_directions(&s, &[DVector::zeros(3)]),
            Err(Error::ZeroVector)
        ));
    }
}
