//! Directed-to-leakage power ratio (DLPR) and direction-matching diagnostics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::cvec;
use crate::error::{Error, Result};

/// Default magnitude cap applied when converting to decibels.
pub const DB_CAP: f64 = 100.0;

/// Denominators below this are treated as zero leakage.
const ZERO_LEAKAGE: f64 = 1e-15;

/// `|h^H d|^2 / |h|^2`, the power of `d` along `h`.
pub fn projector_power(h: &[Complex64], d: &[Complex64]) -> Result<f64> {
    if h.len() != d.len() {
        return Err(Error::ShapeMismatch(format!("|h| = {} but |d| = {}", h.len(), d.len())));
    }
    let hh: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    if hh == 0.0 {
        return Err(Error::ZeroChannel);
    }
    Ok(cvec::dot(h, d).norm_sqr() / hh)
}

fn column(m: &DMatrix<Complex64>, i: usize) -> &[Complex64] {
    let rows = m.nrows();
    &m.as_slice()[i * rows..(i + 1) * rows]
}

/// DLPR of beamformer `d` toward LU `j` (0-based): power along `h_j` over the
/// power along every other user's channel. Zero leakage gives `+inf`.
pub fn dlpr_for_direction(
    h: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    d: &DVector<Complex64>,
    j: usize,
) -> Result<f64> {
    let m = d.len();
    if h.nrows() != m || g.nrows() != m {
        return Err(Error::ShapeMismatch(format!(
            "channels have {} and {} rows, beamformer has {m}",
            h.nrows(),
            g.nrows()
        )));
    }
    if j >= h.ncols() {
        return Err(Error::ShapeMismatch(format!("user {j} out of range for {} LUs", h.ncols())));
    }
    let d = d.as_slice();
    let direct = projector_power(column(h, j), d)?;
    let mut leakage = 0.0;
    for l in (0..h.ncols()).filter(|&l| l != j) {
        leakage += projector_power(column(h, l), d)?;
    }
    for k in 0..g.ncols() {
        leakage += projector_power(column(g, k), d)?;
    }
    Ok(if leakage < ZERO_LEAKAGE { f64::INFINITY } else { direct / leakage })
}

/// `10 log10(x)` limited to `[-cap, cap]`; `+inf` maps to `cap`.
pub fn to_db(linear: f64, cap: f64) -> f64 {
    if linear <= 0.0 {
        return -cap;
    }
    (10.0 * linear.log10()).clamp(-cap, cap)
}

/// Per-user best DLPR over a set of candidate beamformers.
#[derive(Debug, Clone, PartialEq)]
pub struct DlprReport {
    pub per_user: Vec<f64>,
    pub worst_case: f64,
    pub per_user_db: Vec<f64>,
    pub worst_case_db: f64,
}

/// For each LU, the best DLPR among `estimated`; the worst case is the
/// minimum over LUs.
pub fn dlpr_report(
    h: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    estimated: &[DVector<Complex64>],
) -> Result<DlprReport> {
    dlpr_report_capped(h, g, estimated, DB_CAP)
}

pub fn dlpr_report_capped(
    h: &DMatrix<Complex64>,
    g: &DMatrix<Complex64>,
    estimated: &[DVector<Complex64>],
    cap: f64,
) -> Result<DlprReport> {
    if estimated.is_empty() {
        return Err(Error::EmptyInput);
    }
    let per_user = (0..h.ncols())
        .map(|j| {
            estimated.iter().try_fold(f64::NEG_INFINITY, |best, d| {
                Ok(best.max(dlpr_for_direction(h, g, d, j)?))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst_case = per_user.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DlprReport {
        per_user_db: per_user.iter().map(|&v| to_db(v, cap)).collect(),
        worst_case_db: to_db(worst_case, cap),
        per_user,
        worst_case,
    })
}

/// Matching of estimated to true directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    /// `permutation[i]` is the truth column matched to estimate `i`.
    pub permutation: Vec<usize>,
    /// `|cosine|` of each matched pair, indexed like the estimates.
    pub scores: Vec<f64>,
}

/// Greedy matching by descending `|cosine|`.
pub fn align_directions(estimated: &[DVector<Complex64>], truth: &[DVector<Complex64>]) -> Result<Alignment> {
    let k = estimated.len();
    if truth.len() != k {
        return Err(Error::ShapeMismatch(format!("{k} estimates but {} true directions", truth.len())));
    }
    let cos: Vec<Vec<f64>> = estimated
        .iter()
        .map(|e| truth.iter().map(|t| cvec::abs_cosine(e.as_slice(), t.as_slice())).collect())
        .collect();
    let mut permutation = vec![usize::MAX; k];
    let mut scores = vec![0.0; k];
    let mut used = vec![false; k];
    for _ in 0..k {
        let mut best = (usize::MAX, usize::MAX, f64::NEG_INFINITY);
        for (i, row) in cos.iter().enumerate() {
            if permutation[i] != usize::MAX {
                continue;
            }
            for (t, &c) in row.iter().enumerate() {
                if !used[t] && c > best.2 {
                    best = (i, t, c);
                }
            }
        }
        permutation[best.0] = best.1;
        scores[best.0] = best.2;
        used[best.1] = true;
    }
    Ok(Alignment { permutation, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn col(v: &[Complex64]) -> DMatrix<Complex64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn projector_examples() {
        let h = [c(3.0, 4.0), c(0.0, 0.0)];
        let unit: Vec<Complex64> = h.iter().map(|v| v / 5.0).collect();
        assert!((projector_power(&h, &unit).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(projector_power(&h, &[c(0.0, 0.0), c(1.0, 0.0)]).unwrap(), 0.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let p = projector_power(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(s, 0.0), c(s, 0.0)]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(matches!(projector_power(&[c(0.0, 0.0)], &[c(1.0, 0.0)]), Err(Error::ZeroChannel)));
    }

    #[test]
    fn dlpr_examples() {
        let h = col(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let g = col(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let d = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(dlpr_for_direction(&h, &g, &d, 0).unwrap(), f64::INFINITY);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let d = DVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]);
        assert!((dlpr_for_direction(&h, &g, &d, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(dlpr_for_direction(&h, &g, &d, 1).is_err());
    }

    #[test]
    fn db_conversion() {
        assert_eq!(to_db(f64::INFINITY, 100.0), 100.0);
        assert_eq!(to_db(0.0, 100.0), -100.0);
        assert!((to_db(10.0, 100.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn report_with_perfect_and_leaking_beams() {
        let h = DMatrix::from_column_slice(3, 2, &[
            c(1.0, 0.0), c(0.2, 0.1), c(0.0, 0.3),
            c(0.1, 0.0), c(1.0, -0.2), c(0.4, 0.0),
        ]);
        let g = col(&[c(0.3, 0.3), c(-0.2, 0.0), c(1.0, 0.0)]);
        let g_unit = DVector::from_column_slice(g.as_slice()).normalize();
        let r = dlpr_report(&h, &g, &[g_unit.clone(), g_unit]).unwrap();
        assert!(r.per_user.iter().all(|&v| v < 0.2));
        assert_eq!(r.worst_case, r.per_user.iter().copied().fold(f64::INFINITY, f64::min));

        let beams: Vec<DVector<Complex64>> =
            (0..2).map(|j| DVector::from_column_slice(h.column(j).as_slice()).normalize()).collect();
        let r = dlpr_report(&h, &g, &beams).unwrap();
        for j in 0..2 {
            assert_eq!(r.per_user[j], dlpr_for_direction(&h, &g, &beams[j], j).unwrap());
        }
    }

    #[test]
    fn alignment_undoes_permutation_and_phase() {
        let truth: Vec<DVector<Complex64>> = vec![
            DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            DVector::from_vec(vec![c(0.0, 0.0), c(0.6, 0.8), c(0.0, 0.0)]),
            DVector::from_vec(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)]),
        ];
        let rot = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let est = vec![truth[2].map(|v| v * rot), truth[0].map(|v| v * rot), truth[1].clone()];
        let a = align_directions(&est, &truth).unwrap();
        assert_eq!(a.permutation, vec![2, 0, 1]);
        assert!(a.scores.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }
}
