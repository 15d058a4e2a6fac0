//! Exact-alphabet separation check on synthetic generator sets.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::coversep;
use crate::cvec;
use crate::error::{Error, Result};
use crate::scenario::cscg;

/// Coefficient alphabet shared by every generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleAlphabet {
    Bpsk,
    Qpsk,
    Pam4,
}

impl OracleAlphabet {
    pub const ALL: [OracleAlphabet; 3] = [OracleAlphabet::Bpsk, OracleAlphabet::Qpsk, OracleAlphabet::Pam4];

    pub fn name(self) -> &'static str {
        match self {
            OracleAlphabet::Bpsk => "bpsk",
            OracleAlphabet::Qpsk => "qpsk",
            OracleAlphabet::Pam4 => "4-pam",
        }
    }

    pub fn symbols(self) -> Vec<Complex64> {
        let r = |x: f64| Complex64::new(x, 0.0);
        match self {
            OracleAlphabet::Bpsk => vec![r(1.0), r(-1.0)],
            OracleAlphabet::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex64::new(s, s),
                    Complex64::new(-s, s),
                    Complex64::new(-s, -s),
                    Complex64::new(s, -s),
                ]
            }
            OracleAlphabet::Pam4 => vec![r(-3.0), r(-1.0), r(1.0), r(3.0)],
        }
    }
}

/// Every combination `sum_k c_k g_k` with each `c_k` drawn from `symbols`.
pub fn alphabet_points(generators: &[Vec<Complex64>], symbols: &[Complex64]) -> Vec<Vec<Complex64>> {
    let dim = generators.first().map_or(0, Vec::len);
    let mut points = vec![vec![Complex64::default(); dim]];
    for g in generators {
        points = points
            .iter()
            .flat_map(|p| {
                symbols.iter().map(move |&c| p.iter().zip(g).map(|(a, b)| a + c * b).collect())
            })
            .collect();
    }
    points
}

/// `k` CSCG generator vectors in `C^k`.
pub fn random_generators(k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Complex64>> {
    (0..k).map(|_| (0..k).map(|_| cscg(rng)).collect()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub k: usize,
    pub alphabet: OracleAlphabet,
    pub instances: usize,
    /// Instances where every generator was matched with `|cos| >= 1 - 1e-9`.
    pub recovered: usize,
    pub min_cosine: f64,
}

/// Best `|cos|` of each generator against the estimates, matched greedily.
pub fn matched_cosines(estimates: &[Vec<Complex64>], generators: &[Vec<Complex64>]) -> Vec<f64> {
    let mut used = vec![false; estimates.len()];
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in generators.iter().enumerate() {
        for (ei, e) in estimates.iter().enumerate() {
            pairs.push((cvec::abs_cosine(e, g), gi, ei));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = vec![0.0; generators.len()];
    let mut done = vec![false; generators.len()];
    for (c, gi, ei) in pairs {
        if !done[gi] && !used[ei] {
            best[gi] = c;
            done[gi] = true;
            used[ei] = true;
        }
    }
    best
}

/// Runs [`coversep::separate_exact`] on `instances` random generator sets.
pub fn run_oracle(k: usize, alphabet: OracleAlphabet, instances: usize, seed: u64) -> Result<OracleReport> {
    if k == 0 || instances == 0 {
        return Err(Error::Config("oracle needs k >= 1 and at least one instance".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = alphabet.symbols();
    let mut recovered = 0;
    let mut min_cosine = f64::INFINITY;
    for _ in 0..instances {
        let generators = random_generators(k, &mut rng);
        let points = alphabet_points(&generators, &symbols);
        let estimates = coversep::separate_exact(&points, k)?;
        let cos = matched_cosines(&estimates, &generators);
        let worst = cos.iter().copied().fold(f64::INFINITY, f64::min);
        min_cosine = min_cosine.min(worst);
        if worst >= 1.0 - 1e-9 {
            recovered += 1;
        }
    }
    Ok(OracleReport {
        k,
        alphabet,
        instances,
        recovered,
        min_cosine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_count_is_product_of_alphabets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_generators(3, &mut rng);
        assert_eq!(alphabet_points(&g, &OracleAlphabet::Pam4.symbols()).len(), 64);
        assert_eq!(alphabet_points(&g[..1], &OracleAlphabet::Bpsk.symbols()).len(), 2);
    }

    #[test]
    fn small_oracle_run_recovers_everything() {
        for a in OracleAlphabet::ALL {
            let r = run_oracle(2, a, 5, 3).unwrap();
            assert_eq!(r.recovered, 5, "{}", a.name());
        }
    }
}
