//! Channel-direction extraction from an estimated alphabet via the cover
//! property of pairwise differences.
//!
//! Differences between alphabet points that only disagree in one user's
//! symbol are parallel (up to phase) to that user's subspace vector, and such
//! a direction touches every alphabet point. Differences mixing several users
//! touch strictly fewer points. Clustering the differences by direction and
//! ranking clusters by the mass they cover therefore singles out the K user
//! directions.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::cfdeconv::SupportSet;
use crate::cvec;
use crate::error::{Error, Result};

/// Floating-point allowance on top of the configured tolerance, so exactly
/// parallel vectors still match at `gamma = 0`.
const ALIGN_SLACK: f64 = 1e-12;

/// `values[from] - values[to]` with its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Difference {
    pub vector: Vec<Complex64>,
    pub from: usize,
    pub to: usize,
}

/// Group of differences sharing a direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionCluster {
    /// Canonical unit vector.
    pub representative: Vec<Complex64>,
    /// Indices into the difference list.
    pub members: Vec<usize>,
    /// Support-point indices touched by the members, ascending.
    pub covered: Vec<usize>,
    pub weight: f64,
}

/// Order in which differences are offered as cluster seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedOrder {
    /// Pair enumeration order, `(0,1), (0,2), ..., (1,2), ...`.
    #[default]
    Enumeration,
    /// Descending mass covered by each difference's own tolerance neighbourhood.
    CoverMass,
}

/// How a cluster's direction is summarized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representative {
    /// The seeding difference.
    Seed,
    /// Sum of the members after phase-aligning each to the seed.
    #[default]
    MemberMean,
    /// Like `MemberMean`, with each member scaled by the product of its
    /// endpoint masses.
    MassMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Total pmf mass of the covered points.
    #[default]
    Mass,
    /// Number of covered points.
    Cardinality,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverOptions {
    pub gamma: f64,
    pub seed_order: SeedOrder,
    pub representative: Representative,
    pub weighting: Weighting,
}

impl Default for CoverOptions {
    fn default() -> Self {
        Self {
            gamma: 0.05,
            seed_order: SeedOrder::default(),
            representative: Representative::default(),
            weighting: Weighting::default(),
        }
    }
}

/// Result of [`separate_support`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoverSeparation {
    /// Selected unit K-vectors, heaviest cluster first.
    pub selected: Vec<Vec<Complex64>>,
    /// Indices of the selected clusters.
    pub chosen: Vec<usize>,
    pub clusters: Vec<DirectionCluster>,
    pub differences: Vec<Difference>,
}

/// All `v_i - v_j` with `i < j`.
pub fn pairwise_differences(support: &SupportSet) -> Result<Vec<Difference>> {
    let values: Vec<&[Complex64]> = support.points.iter().map(|p| p.value.as_slice()).collect();
    differences_of(&values)
}

fn differences_of(values: &[&[Complex64]]) -> Result<Vec<Difference>> {
    if values.len() < 2 {
        return Err(Error::TooFewPoints { found: values.len() });
    }
    let mut out = Vec::with_capacity(values.len() * (values.len() - 1) / 2);
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let vector = values[i].iter().zip(values[j]).map(|(a, b)| a - b).collect();
            out.push(Difference { vector, from: i, to: j });
        }
    }
    Ok(out)
}

/// Rotates `d` so its largest-magnitude entry is real and positive.
pub fn canonicalize_sign(d: &[Complex64]) -> Result<Vec<Complex64>> {
    let max = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if cvec::norm(d) < 1e-12 {
        return Err(Error::ZeroVector);
    }
    // Near-ties resolve to the first entry so round-off cannot flip the choice.
    let pivot = d
        .iter()
        .position(|v| v.norm() >= max * (1.0 - 1e-9))
        .expect("a nonzero vector has a maximal entry");
    let phase = d[pivot].conj() / d[pivot].norm();
    Ok(d.iter().map(|v| v * phase).collect())
}

fn unit(d: &[Complex64]) -> Result<Vec<Complex64>> {
    cvec::normalized(&canonicalize_sign(d)?).ok_or(Error::ZeroVector)
}

fn aligned(u: &[Complex64], r: &[Complex64], gamma: f64) -> bool {
    1.0 - cvec::dot(u, r).norm() <= gamma + ALIGN_SLACK
}

/// Greedy direction clustering in the given order: the first unassigned
/// difference seeds a cluster that absorbs every remaining difference within
/// tolerance `gamma` up to a phase.
pub fn cluster_by_direction(diffs: &[Difference], gamma: f64) -> Result<Vec<DirectionCluster>> {
    let order: Vec<usize> = (0..diffs.len()).collect();
    cluster_in_order(diffs, &order, gamma)
}

fn cluster_in_order(diffs: &[Difference], order: &[usize], gamma: f64) -> Result<Vec<DirectionCluster>> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Config(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    let units = diffs
        .iter()
        .map(|d| unit(&d.vector))
        .collect::<Result<Vec<_>>>()?;
    let mut assigned = vec![false; diffs.len()];
    let mut clusters = Vec::new();
    for &seed in order {
        if assigned[seed] {
            continue;
        }
        let mut members = Vec::new();
        for &t in order {
            if !assigned[t] && aligned(&units[t], &units[seed], gamma) {
                assigned[t] = true;
                members.push(t);
            }
        }
        clusters.push(DirectionCluster {
            representative: units[seed].clone(),
            members,
            covered: Vec::new(),
            weight: 0.0,
        });
    }
    Ok(clusters)
}

/// Fills in the covered points and the mass-based weight of `cluster`.
pub fn collect_covered(masses: &[f64], diffs: &[Difference], cluster: &DirectionCluster) -> DirectionCluster {
    let mut covered: Vec<usize> = cluster
        .members
        .iter()
        .flat_map(|&t| [diffs[t].from, diffs[t].to])
        .collect();
    covered.sort_unstable();
    covered.dedup();
    let weight = covered.iter().map(|&i| masses[i]).sum();
    DirectionCluster {
        covered,
        weight,
        ..cluster.clone()
    }
}

fn lexicographic(a: &[Complex64], b: &[Complex64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Indices of the `k` heaviest clusters; ties go to more members, then to
/// the lexicographically smaller representative.
pub fn select_directions(clusters: &[DirectionCluster], k: usize) -> Result<Vec<usize>> {
    if clusters.len() < k {
        return Err(Error::TooFewClusters {
            found: clusters.len(),
            needed: k,
        });
    }
    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (&clusters[a], &clusters[b]);
        cb.weight
            .total_cmp(&ca.weight)
            .then(cb.members.len().cmp(&ca.members.len()))
            .then_with(|| lexicographic(&ca.representative, &cb.representative))
    });
    order.truncate(k);
    Ok(order)
}

/// For each difference, the mass of points touched by all differences
/// aligned with it.
fn cover_scores(units: &[Vec<Complex64>], diffs: &[Difference], masses: &[f64], gamma: f64) -> Vec<f64> {
    let mut touched = vec![false; masses.len()];
    let mut list = Vec::new();
    units
        .iter()
        .map(|u| {
            for (t, v) in units.iter().enumerate() {
                if aligned(v, u, gamma) {
                    for p in [diffs[t].from, diffs[t].to] {
                        if !touched[p] {
                            touched[p] = true;
                            list.push(p);
                        }
                    }
                }
            }
            let score = list.iter().map(|&p| masses[p]).sum();
            for p in list.drain(..) {
                touched[p] = false;
            }
            score
        })
        .collect()
}

fn member_mean(diffs: &[Difference], cluster: &DirectionCluster, masses: Option<&[f64]>) -> Result<Vec<Complex64>> {
    let seed = &cluster.representative;
    let mut acc = vec![Complex64::default(); seed.len()];
    for &t in &cluster.members {
        let d = &diffs[t];
        let c = cvec::dot(&d.vector, seed);
        let phase = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
        let scale = masses.map_or(1.0, |m| m[d.from] * m[d.to]);
        for (a, x) in acc.iter_mut().zip(&d.vector) {
            *a += x * phase * scale;
        }
    }
    unit(&acc)
}

fn separate_values(
    values: &[&[Complex64]],
    masses: &[f64],
    k: usize,
    opts: &CoverOptions,
) -> Result<CoverSeparation> {
    let differences = differences_of(values)?;
    let order: Vec<usize> = match opts.seed_order {
        SeedOrder::Enumeration => (0..differences.len()).collect(),
        SeedOrder::CoverMass => {
            let units = differences
                .iter()
                .map(|d| unit(&d.vector))
                .collect::<Result<Vec<_>>>()?;
            let scores = cover_scores(&units, &differences, masses, opts.gamma);
            let mut order: Vec<usize> = (0..differences.len()).collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
            order
        }
    };
    let weights: Vec<f64> = match opts.weighting {
        Weighting::Mass => masses.to_vec(),
        Weighting::Cardinality => vec![1.0; masses.len()],
    };
    let mut clusters: Vec<DirectionCluster> = cluster_in_order(&differences, &order, opts.gamma)?
        .iter()
        .map(|c| collect_covered(&weights, &differences, c))
        .collect();
    let member_masses = match opts.representative {
        Representative::Seed => None,
        Representative::MemberMean => Some(None),
        Representative::MassMean => Some(Some(masses)),
    };
    if let Some(m) = member_masses {
        for c in &mut clusters {
            c.representative = member_mean(&differences, c, m)?;
        }
    }
    let chosen = select_directions(&clusters, k)?;
    let selected = chosen.iter().map(|&i| clusters[i].representative.clone()).collect();
    Ok(CoverSeparation {
        selected,
        chosen,
        clusters,
        differences,
    })
}

/// Direction extraction from an estimated support set.
pub fn separate_support(support: &SupportSet, k: usize, opts: &CoverOptions) -> Result<CoverSeparation> {
    let values: Vec<&[Complex64]> = support.points.iter().map(|p| p.value.as_slice()).collect();
    separate_values(&values, &support.masses(), k, opts)
}

/// Direction extraction from an exact noiseless alphabet: exact alignment,
/// enumeration-order seeding and point-count weights.
pub fn separate_exact(alphabet: &[Vec<Complex64>], k: usize) -> Result<Vec<Vec<Complex64>>> {
    let values: Vec<&[Complex64]> = alphabet.iter().map(Vec::as_slice).collect();
    let opts = CoverOptions {
        gamma: 0.0,
        seed_order: SeedOrder::Enumeration,
        representative: Representative::Seed,
        weighting: Weighting::Cardinality,
    };
    Ok(separate_values(&values, &vec![1.0; alphabet.len()], k, &opts)?.selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfdeconv::SupportPoint;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Alphabet `{±z1 ± z2}` in the order A: z1+z2, B: -z1+z2, C: z1-z2, D: -z1-z2.
    fn bpsk_pair(z1: &[Complex64], z2: &[Complex64]) -> Vec<Vec<Complex64>> {
        let comb = |a: f64, b: f64| z1.iter().zip(z2).map(|(x, y)| x * a + y * b).collect();
        vec![comb(1.0, 1.0), comb(-1.0, 1.0), comb(1.0, -1.0), comb(-1.0, -1.0)]
    }

    fn support_of(values: Vec<Vec<Complex64>>) -> SupportSet {
        let mass = 1.0 / values.len() as f64;
        SupportSet {
            points: values
                .into_iter()
                .map(|value| SupportPoint {
                    index: Vec::new(),
                    value,
                    mass,
                })
                .collect(),
            epsilon: 0.0,
        }
    }

    #[test]
    fn differences_count_and_content() {
        let z1 = [c(1.0, 0.2), c(0.3, -0.5)];
        let z2 = [c(-0.4, 0.1), c(0.9, 0.7)];
        let s = support_of(bpsk_pair(&z1, &z2));
        let d = pairwise_differences(&s).unwrap();
        assert_eq!(d.len(), 6);
        let twice = |z: &[Complex64]| z.iter().map(|v| v * 2.0).collect::<Vec<_>>();
        let count = |target: &[Complex64]| {
            d.iter()
                .filter(|x| x.vector.iter().zip(target).all(|(a, b)| (a - b).norm() < 1e-12))
                .count()
        };
        assert_eq!(count(&twice(&z1)), 2);
        assert_eq!(count(&twice(&z2)), 2);
        assert!(matches!(
            pairwise_differences(&support_of(vec![vec![c(1.0, 0.0)]])),
            Err(Error::TooFewPoints { found: 1 })
        ));
    }

    #[test]
    fn canonicalization() {
        assert_eq!(canonicalize_sign(&[c(-1.0, 0.0), c(0.0, 0.0)]).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let r = canonicalize_sign(&[c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!((r[0] - c(1.0, 0.0)).norm() < 1e-15 && r[1].norm() == 0.0);
        let d = [c(0.3, -0.2), c(-1.1, 0.4), c(0.5, 0.5)];
        let base = canonicalize_sign(&d).unwrap();
        for theta in [0.1, 1.7, -2.9, 3.1] {
            let rot: Vec<Complex64> = d.iter().map(|v| v * Complex64::from_polar(1.0, theta)).collect();
            let out = canonicalize_sign(&rot).unwrap();
            for (a, b) in out.iter().zip(&base) {
                assert!((a - b).norm() < 1e-12);
            }
        }
        assert!(matches!(canonicalize_sign(&[c(0.0, 0.0)]), Err(Error::ZeroVector)));
    }

    #[test]
    fn exact_bpsk_clusters_and_weights() {
        let z1 = [c(1.0, 0.5), c(-0.2, 0.3)];
        let z2 = [c(0.1, -0.7), c(0.8, 0.2)];
        let alphabet = bpsk_pair(&z1, &z2);
        let s = support_of(alphabet.clone());
        let diffs = pairwise_differences(&s).unwrap();
        let clusters = cluster_by_direction(&diffs, 0.0).unwrap();
        let mut sizes: Vec<usize> = clusters.iter().map(|c| c.members.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![2, 2, 1, 1]);

        let masses = s.masses();
        let full: Vec<DirectionCluster> =
            clusters.iter().map(|c| collect_covered(&masses, &diffs, c)).collect();
        let mut weights: Vec<f64> = full.iter().map(|c| c.weight).collect();
        weights.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(weights, vec![1.0, 1.0, 0.5, 0.5]);
        for cl in &full {
            if cl.members.len() == 2 {
                assert_eq!(cl.covered, vec![0, 1, 2, 3]);
            } else {
                assert_eq!(cl.covered.len(), 2);
            }
        }

        let chosen = select_directions(&full, 2).unwrap();
        for &i in &chosen {
            assert_eq!(full[i].members.len(), 2);
        }
        let exact = separate_exact(&alphabet, 2).unwrap();
        let best = |z: &[Complex64]| exact.iter().map(|d| cvec::abs_cosine(d, z)).fold(0.0, f64::max);
        assert!(best(&z1) > 1.0 - 1e-12 && best(&z2) > 1.0 - 1e-12);
    }

    #[test]
    fn single_difference_and_scaling() {
        let s = support_of(vec![vec![c(1.0, 0.0)], vec![c(-1.0, 0.0)]]);
        let diffs = pairwise_differences(&s).unwrap();
        assert_eq!(cluster_by_direction(&diffs, 0.0).unwrap().len(), 1);

        let v = vec![c(0.3, 0.1), c(-0.7, 0.2)];
        let diffs = vec![
            Difference { vector: v.clone(), from: 0, to: 1 },
            Difference { vector: v.iter().map(|x| x * 3.0).collect(), from: 1, to: 2 },
        ];
        assert_eq!(cluster_by_direction(&diffs, 1e-6).unwrap().len(), 1);
    }

    #[test]
    fn scalar_alphabet() {
        let a = c(0.6, -0.8);
        let out = separate_exact(&[vec![-a], vec![a]], 1).unwrap();
        assert!((out[0][0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn selection_requires_enough_clusters() {
        assert!(matches!(
            select_directions(&[], 1),
            Err(Error::TooFewClusters { found: 0, needed: 1 })
        ));
    }

    #[test]
    fn practical_options_agree_on_exact_alphabet() {
        let z1 = [c(1.0, 0.5), c(-0.2, 0.3)];
        let z2 = [c(0.1, -0.7), c(0.8, 0.2)];
        let s = support_of(bpsk_pair(&z1, &z2));
        for representative in [Representative::Seed, Representative::MemberMean] {
            for seed_order in [SeedOrder::Enumeration, SeedOrder::CoverMass] {
                let opts = CoverOptions {
                    gamma: 0.01,
                    seed_order,
                    representative,
                    weighting: Weighting::Mass,
                };
                let sep = separate_support(&s, 2, &opts).unwrap();
                let best = |z: &[Complex64]| {
                    sep.selected.iter().map(|d| cvec::abs_cosine(d, z)).fold(0.0, f64::max)
                };
                assert!(best(&z1) > 1.0 - 1e-12 && best(&z2) > 1.0 - 1e-12);
            }
        }
    }
}
