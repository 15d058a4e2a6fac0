//! Small helpers over complex slices.

use num_complex::Complex64;

/// Hermitian inner product `a^H b`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `|a^H b| / (|a| |b|)`; zero if either vector vanishes.
pub fn abs_cosine(a: &[Complex64], b: &[Complex64]) -> f64 {
    let den = norm(a) * norm(b);
    if den == 0.0 {
        0.0
    } else {
        dot(a, b).norm() / den
    }
}

pub fn normalized(a: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = norm(a);
    (n >= 1e-12).then(|| a.iter().map(|x| x / n).collect())
}
