mod common;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spreadwidth::eigen::symmetric_eigen;
use spreadwidth::metrics::{min_half_window, ms_deviation_parts};
use spreadwidth::operators::{h0_matrix, number_operators, v_matrix};
use spreadwidth::spacing::{spacing_distance, Block, SpacingSample};
use spreadwidth::{diagonalize, hamiltonian, FockBasis, ModelParameters};

#[test]
fn gauss_hermite_integrates_moments() {
    let (x, w) = common::gauss_hermite(20);
    let pi = std::f64::consts::PI;
    let m0: f64 = w.iter().sum();
    let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
    assert!((m0 - pi.sqrt()).abs() < 1e-13);
    assert!((m2 - pi.sqrt() / 2.0).abs() < 1e-13);
    assert!((m4 - 3.0 * pi.sqrt() / 4.0).abs() < 1e-13);
}

#[test]
fn cubic_potential_matches_quadrature() {
    let lambda = 0.37;
    let basis = FockBasis::new(6);
    let v = v_matrix(&basis, lambda);
    let mut worst: f64 = 0.0;
    for (i, a) in basis.states().iter().enumerate() {
        for (j, b) in basis.states().iter().enumerate() {
            let q = common::matrix_element(
                (a.n1, a.n2),
                (b.n1, b.n2),
                |x, y| lambda * (x * x * y - y * y * y / 3.0),
                24,
            );
            worst = worst.max((v.get(i, j) - q).abs());
        }
    }
    assert!(worst <= 1e-10, "max deviation {worst:e}");
}

#[test]
fn oscillator_and_number_operators_match_quadrature() {
    let basis = FockBasis::new(5);
    let h0 = h0_matrix(&basis);
    let (n1, _, _) = number_operators(&basis);
    for (i, a) in basis.states().iter().enumerate() {
        // ⟨a|q1²|a⟩ = n1 + 1/2
        let q = common::matrix_element((a.n1, a.n2), (a.n1, a.n2), |x, _| x * x, 16);
        assert!((q - (n1.get(i, i) + 0.5)).abs() < 1e-12);
        assert!((h0.get(i, i) - (a.n1 + a.n2 + 1) as f64).abs() < 1e-15);
    }
}

#[test]
fn eigenvalues_match_reference_solver() {
    let h = hamiltonian(&ModelParameters::new(0.1, 14).unwrap());
    let ours = diagonalize(&h).unwrap();
    let reference = SymmetricEigen::new(h.entries().clone());
    let mut theirs: Vec<f64> = reference.eigenvalues.iter().copied().collect();
    theirs.sort_by(f64::total_cmp);
    for (a, b) in ours.energies().iter().zip(&theirs) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn random_symmetric_matrices_match_reference_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2usize, 3, 7, 20, 41] {
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        a = &a + a.transpose();
        let (ev, vecs) = symmetric_eigen(&a).unwrap();
        let mut reference: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(&reference) {
            assert!((x - y).abs() < 1e-12 * n as f64);
        }
        let residual = (&a * &vecs - &vecs * DMatrix::from_diagonal(&DVector::from_vec(ev))).amax();
        assert!(residual < 1e-12 * n as f64);
    }
}

fn random_strength(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let n = rng.random_range(1..40);
    let mut e = 0.0;
    let raw: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            e += rng.random_range(0.0..1.0);
            let p: f64 = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..1.0) };
            (e, p)
        })
        .collect();
    let total: f64 = raw.iter().map(|p| p.1).sum();
    if total == 0.0 {
        return vec![(0.0, 1.0)];
    }
    raw.into_iter().map(|(e, p)| (e, p / total)).collect()
}

#[test]
fn two_pointer_scan_equals_exhaustive_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let pts = random_strength(&mut rng);
        let fast = min_half_window(&pts).unwrap();
        let slow = common::exhaustive_half_window(&pts).unwrap();
        assert_eq!(fast, slow, "{pts:?}");
    }
}

fn sample(inverse_cdf: fn(f64) -> f64, seed: u64) -> SpacingSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpacingSample {
        block: Block::A,
        spacings: (0..5000).map(|_| inverse_cdf(rng.random::<f64>())).collect(),
    }
}

#[test]
fn exponential_spacings_are_poisson() {
    let d = spacing_distance(&sample(common::poisson_inverse_cdf, 5)).unwrap();
    assert!(d.d_poisson < d.d_wigner, "{d:?}");
    assert!(d.d_poisson < 0.1);
}

#[test]
fn surmise_spacings_are_wigner() {
    let d = spacing_distance(&sample(common::wigner_inverse_cdf, 6)).unwrap();
    assert!(d.d_wigner < d.d_poisson, "{d:?}");
    assert!(d.d_wigner < 0.1);
}

#[test]
fn picket_fence_distances_match_analytic_masses() {
    let s = SpacingSample {
        block: Block::C,
        spacings: vec![1.0; 50],
    };
    let d = spacing_distance(&s).unwrap();
    // Whole sample in [1, 1.25): L1 = (mass on [0,4] − m) + (1 − m).
    let pi = std::f64::consts::PI;
    let p_cdf = |x: f64| 1.0 - (-x).exp();
    let w_cdf = |x: f64| 1.0 - (-pi * x * x / 4.0).exp();
    let expect = |cdf: &dyn Fn(f64) -> f64| {
        let m = cdf(1.25) - cdf(1.0);
        (cdf(4.0) - m) + (1.0 - m)
    };
    assert!((d.d_poisson - expect(&p_cdf)).abs() < 1e-12);
    assert!((d.d_wigner - expect(&w_cdf)).abs() < 1e-12);
    assert!(d.d_wigner < d.d_poisson);
}

#[test]
fn deviation_of_diagonal_operator_in_superposition() {
    // A = diag(0, 2) in (1,1)/√2: ⟨A⟩ = 1, ΔA = 1.
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0]));
    let psi = DVector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
    assert!((ms_deviation_parts(&a, None, &psi).unwrap() - 1.0).abs() < 1e-15);
}
