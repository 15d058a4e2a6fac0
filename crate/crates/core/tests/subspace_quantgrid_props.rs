use bcsep::quantgrid::{build_grid, empirical_pmf, quantize_vector};
use bcsep::scenario::cscg;
use bcsep::subspace::{estimate_signal_subspace, project, reconstruct_directions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| cscg(&mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projector_is_idempotent(seed in any::<u64>(), m in 3usize..12, k in 1usize..3) {
        let y = random_matrix(m, 20, seed);
        let p = estimate_signal_subspace(&y, k).unwrap().projector();
        prop_assert!((&p * &p - &p).norm() < 1e-10);
    }

    #[test]
    fn projection_does_not_add_energy(seed in any::<u64>(), m in 3usize..12, k in 1usize..3) {
        let y = random_matrix(m, 20, seed);
        let s = estimate_signal_subspace(&y, k).unwrap();
        prop_assert!((s.basis.adjoint() * &y).norm() <= y.norm() * (1.0 + 1e-12));
        // Z carries the 1/sqrt(M) scale on top.
        let z = project(&y, &s, m).unwrap().z;
        prop_assert!(z.norm() <= y.norm() / (m as f64).sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn global_phase_only_rotates_directions(seed in any::<u64>(), theta in 0.0f64..std::f64::consts::TAU) {
        let y = random_matrix(6, 30, seed);
        let rotated = y.map(|v| v * Complex64::from_polar(1.0, theta));
        let (sa, sb) = (estimate_signal_subspace(&y, 2).unwrap(), estimate_signal_subspace(&rotated, 2).unwrap());
        prop_assert!((sa.projector() - sb.projector()).norm() < 1e-10);
        let v = sa.projector() * random_matrix(6, 1, seed ^ 1).column(0);
        let a = reconstruct_directions(&sa, &[sa.basis.adjoint() * &v]).unwrap();
        let b = reconstruct_directions(&sb, &[sb.basis.adjoint() * &v]).unwrap();
        prop_assert!(((a[0].dotc(&b[0])).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_levels_quantize_to_themselves(alpha in 0.1f64..10.0, m in 2usize..80, pick in any::<prop::sample::Index>()) {
        let g = build_grid(alpha, m).unwrap();
        let j = pick.index(m);
        prop_assert_eq!(g.index_of(g.level(j)), j);
    }

    #[test]
    fn refined_grid_contains_coarse_levels(alpha in 0.1f64..10.0, m1 in 2usize..20, r in 1usize..6) {
        let coarse = build_grid(alpha, m1).unwrap();
        let fine = build_grid(alpha, (m1 - 1) * r + 1).unwrap();
        prop_assert!(fine.refines(&coarse));
        for j in 0..m1 {
            prop_assert_eq!(fine.level(j * r), coarse.level(j));
        }
    }

    #[test]
    fn empirical_pmf_has_unit_mass(seed in any::<u64>(), k in 1usize..3, n in 1usize..300, m in 2usize..12) {
        let z = random_matrix(k, n, seed);
        let g = build_grid(1.5, m).unwrap();
        let pmf = empirical_pmf(&z, &g).unwrap();
        prop_assert!((pmf.total_mass() - 1.0).abs() < 1e-9);
        prop_assert_eq!(pmf.dims(), 2 * k);
        let first: Vec<Complex64> = z.column(0).iter().copied().collect();
        prop_assert!(pmf.mass_at(&quantize_vector(&first, &g)) >= 1.0 / n as f64 - 1e-12);
    }
}

#[test]
fn out_of_range_values_clamp_to_end_cells() {
    let g = build_grid(2.0, 5).unwrap();
    assert_eq!(quantize_vector(&[Complex64::new(0.3, -2.5)], &g), vec![3, 0]);
    assert_eq!(quantize_vector(&[Complex64::new(-1.0, 0.0)], &g), vec![1, 2]);
    assert_eq!(quantize_vector(&[Complex64::new(100.0, 100.0)], &g), vec![4, 4]);
}
