//! Oracles that share no code with the library.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Hermite nodes and weights for `∫ e^{−x²} f(x) dx` (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Oscillator eigenfunctions without their Gaussian: `ψ_n(x) = h_n(x) e^{−x²/2}`.
pub fn hermite_polys(nmax: usize, x: f64) -> Vec<f64> {
    let mut h = vec![0.0; nmax + 1];
    h[0] = std::f64::consts::PI.powf(-0.25);
    if nmax >= 1 {
        h[1] = 2f64.sqrt() * x * h[0];
    }
    for n in 1..nmax {
        let nf = n as f64;
        h[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
    }
    h
}

/// `⟨m1 m2| f(x, y) |n1 n2⟩` for polynomial `f` by a tensor Gauss–Hermite rule.
pub fn matrix_element(
    m: (usize, usize),
    n: (usize, usize),
    f: impl Fn(f64, f64) -> f64,
    points: usize,
) -> f64 {
    let (x, w) = gauss_hermite(points);
    let nmax = m.0.max(m.1).max(n.0).max(n.1);
    let h: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_polys(nmax, xi)).collect();
    let mut sum = 0.0;
    for i in 0..points {
        for j in 0..points {
            sum += w[i] * w[j] * h[i][m.0] * h[j][m.1] * f(x[i], x[j]) * h[i][n.0] * h[j][n.1];
        }
    }
    sum
}

/// Smallest `E_j − E_i` over all windows `i..=j` carrying at least half of
/// the probability, by direct enumeration.
pub fn exhaustive_half_window(points: &[(f64, f64)]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..points.len() {
        let mut mass = 0.0;
        for j in i..points.len() {
            mass += points[j].1;
            if mass >= 0.5 - 1e-12 {
                let w = points[j].0 - points[i].0;
                best = Some(best.map_or(w, |b: f64| b.min(w)));
                break;
            }
        }
    }
    best
}

pub fn poisson_inverse_cdf(u: f64) -> f64 {
    -(1.0 - u).ln()
}

pub fn wigner_inverse_cdf(u: f64) -> f64 {
    (-4.0 * (1.0 - u).ln() / std::f64::consts::PI).sqrt()
}
