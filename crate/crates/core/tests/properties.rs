use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use spreadwidth::eigen::symmetric_eigen;
use spreadwidth::integrals::{build_model_space, ritz_unitary, transform_integral, IntegralKind};
use spreadwidth::metrics::{min_half_window, ms_deviation_parts, shell_strength_function, spreading_width};
use spreadwidth::spacing::unfold;
use spreadwidth::{diagonalize, hamiltonian, FockBasis, FockState, ModelParameters};

fn symmetric(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
        let m = DMatrix::from_vec(n, n, v);
        (&m + m.transpose()) * 0.5
    })
}

fn unit_vector(n: usize) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-1.0f64..1.0, n)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let v = DVector::from_vec(v);
            let n = v.norm();
            v / n
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deviation_is_shift_invariant(a in symmetric(6), psi in unit_vector(6), c in -5.0f64..5.0) {
        let shifted = &a + DMatrix::identity(6, 6) * c;
        let d0 = ms_deviation_parts(&a, None, &psi).unwrap();
        let d1 = ms_deviation_parts(&shifted, None, &psi).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-8);
    }

    #[test]
    fn deviation_vanishes_on_eigenstates(a in symmetric(7)) {
        let (_, vecs) = symmetric_eigen(&a).unwrap();
        for i in 0..7 {
            let psi = vecs.column(i).into_owned();
            prop_assert!(ms_deviation_parts(&a, None, &psi).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn eigen_decomposition_is_orthonormal(a in symmetric(9)) {
        let (ev, vecs) = symmetric_eigen(&a).unwrap();
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        let gram = vecs.transpose() * &vecs - DMatrix::identity(9, 9);
        prop_assert!(gram.amax() < 1e-12);
    }

    #[test]
    fn unfolding_is_affine_invariant(
        gaps in proptest::collection::vec(0.01f64..2.0, 30..60),
        scale in 0.1f64..50.0,
        shift in -100.0f64..100.0,
    ) {
        let mut e = vec![0.0];
        for g in &gaps {
            e.push(e.last().unwrap() + g);
        }
        let mapped: Vec<f64> = e.iter().map(|x| scale * x + shift).collect();
        let a = unfold(&e, 5).unwrap();
        let b = unfold(&mapped, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }

    #[test]
    fn half_window_shrinks_when_mass_concentrates(
        energies in proptest::collection::vec(0.0f64..10.0, 2..20),
        k in 0usize..20,
    ) {
        let mut e = energies;
        e.sort_by(f64::total_cmp);
        let k = k % e.len();
        let pts: Vec<(f64, f64)> = e.iter().enumerate()
            .map(|(i, &x)| (x, if i == k { 1.0 } else { 0.0 }))
            .collect();
        prop_assert_eq!(min_half_window(&pts).unwrap(), 0.0);
    }

    #[test]
    fn transformed_integrals_have_integer_spectrum(lambda in 0.0f64..0.15, kp in 0usize..6) {
        let h = hamiltonian(&ModelParameters::new(lambda, 8).unwrap());
        let ms = build_model_space(&h, kp, 1e-3).unwrap();
        let u = ritz_unitary(&ms).unwrap();
        let j = transform_integral(&u, IntegralKind::N);
        let ev = j.matrix.eigenvalues().unwrap();
        for x in ev {
            prop_assert!((x - x.round()).abs() < 1e-9);
        }
    }
}

#[test]
fn shell_width_is_basis_invariant_inside_shell() {
    // Rotating the basis inside each shell leaves the shell-averaged
    // strength function, and hence its width, unchanged.
    let params = ModelParameters::new(0.1, 10).unwrap();
    let h = hamiltonian(&params);
    let s = diagonalize(&h).unwrap();
    let basis = FockBasis::new(10);
    let mut rotated = s.vectors().clone();
    let theta: f64 = 0.7;
    for shell in 1..=10 {
        let r = basis.shell_range(shell);
        let (i, j) = (r.start, r.start + 1);
        for col in 0..rotated.ncols() {
            let (a, b) = (rotated[(i, col)], rotated[(j, col)]);
            rotated[(i, col)] = theta.cos() * a - theta.sin() * b;
            rotated[(j, col)] = theta.sin() * a + theta.cos() * b;
        }
    }
    for shell in 0..=10 {
        let r = basis.shell_range(shell);
        let w = 1.0 / r.len() as f64;
        let pts: Vec<(f64, f64)> = (0..s.dim())
            .map(|k| (s.energy(k), r.clone().map(|a| rotated[(a, k)].powi(2)).sum::<f64>() * w))
            .collect();
        let reference = spreading_width(&shell_strength_function(&s, shell).unwrap()).unwrap();
        assert!((min_half_window(&pts).unwrap() - reference).abs() < 1e-9, "shell {shell}");
    }
    assert_eq!(basis.state(0), FockState::VACUUM);
}
