//! Dense real symmetric eigensolver and the [`Spectrum`] it produces.
//!
//! Householder reduction to tridiagonal form followed by the implicit-shift
//! QL iteration, accumulating the orthogonal transforms. The result is then
//! put in a canonical form so that identical input always yields identical
//! output:
//!
//! * eigenvalues ascending, ties kept in solver order;
//! * inside a degenerate cluster (consecutive gaps below
//!   [`DEGENERACY_GAP`]) the vectors are rebuilt by Gram-Schmidt on the
//!   cluster projections of the unit vectors `e_0, e_1, …` in index order;
//! * every vector has its dominant entry positive.

use std::io::Write;

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::basis::FockBasis;
use crate::error::{Error, Result};
use crate::format::num;
use crate::operators::{MatrixKind, OperatorMatrix};

pub const DEGENERACY_GAP: f64 = 1e-9;

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

#[derive(Clone, Debug)]
pub struct Spectrum {
    basis: FockBasis,
    energies: Vec<f64>,
    /// Column `i` holds the coefficients `c_i^α` of eigenvector `i`.
    vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.energies[i]
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVectorView<'_, f64> {
        self.vectors.column(i)
    }

    /// `c_i^α`: amplitude of basis state `alpha` in eigenvector `i`.
    pub fn coefficient(&self, i: usize, alpha: usize) -> f64 {
        self.vectors[(alpha, i)]
    }

    /// `max_i ‖A v_i − E_i v_i‖₂`.
    pub fn max_residual(&self, matrix: &DMatrix<f64>) -> f64 {
        let av = matrix * &self.vectors;
        (0..self.dim())
            .map(|i| (av.column(i) - self.vectors.column(i) * self.energies[i]).norm())
            .fold(0.0, f64::max)
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim();
        (self.vectors.transpose() * &self.vectors - DMatrix::<f64>::identity(d, d)).amax()
    }

    /// CSV with header `index,energy`.
    pub fn write_energies_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,energy")?;
        for (i, e) in self.energies.iter().enumerate() {
            writeln!(w, "{i},{}", num(*e))?;
        }
        Ok(())
    }

    /// Text triplets `i,alpha,c` with header, zero coefficients skipped.
    pub fn write_coefficients_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,alpha,c")?;
        for i in 0..self.dim() {
            for alpha in 0..self.dim() {
                let c = self.coefficient(i, alpha);
                if c != 0.0 {
                    writeln!(w, "{i},{alpha},{}", num(c))?;
                }
            }
        }
        Ok(())
    }
}

/// Full eigendecomposition of a symmetric operator matrix.
pub fn diagonalize(matrix: &OperatorMatrix) -> Result<Spectrum> {
    if matrix.kind() != MatrixKind::Symmetric {
        return Err(Error::InvalidParameter(
            "diagonalize needs a real symmetric matrix".into(),
        ));
    }
    let (energies, vectors) = symmetric_eigen(matrix.entries())?;
    Ok(Spectrum {
        basis: matrix.basis().clone(),
        energies,
        vectors,
    })
}

/// Ritz diagonalization of the block spanned by shells `0..=p_shells`.
/// The returned coefficients run over the P-space states only.
pub fn subspace_solve(matrix: &OperatorMatrix, p_shells: usize) -> Result<Spectrum> {
    diagonalize(&matrix.shell_block(p_shells)?)
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a symmetric matrix,
/// in the canonical form described in the module docs.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    check_symmetric(a)?;
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }

    // Row-major working copy; z[i][k] becomes component k of vector i.
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    let mut z = transpose(&v);
    drop(v);
    ql_implicit(&mut d, &mut e, &mut z)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let energies: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, col)] = z[i][k];
        }
    }

    canonicalize_clusters(&energies, &mut vectors);
    for col in 0..n {
        fix_sign(vectors.column_mut(col));
    }
    Ok((energies, vectors))
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    let scale = a.amax().max(1.0);
    for i in 0..n {
        for j in 0..=i {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            if !x.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if !y.is_finite() {
                return Err(Error::NonFinite { row: j, col: i });
            }
            let dev = (x - y).abs();
            if dev > 1e-12 * scale {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    deviation: dev,
                });
            }
        }
    }
    Ok(())
}

fn transpose(v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| v[j][i]).collect()).collect()
}

/// Householder reduction of the symmetric matrix in `v` to tridiagonal form.
/// On return `d` holds the diagonal, `e[1..]` the sub-diagonal, and `v` the
/// accumulated orthogonal transform (eigenvector matrix of the reduction).
// Index loops mirror the textbook Householder recurrence.
#[allow(clippy::needless_range_loop)]
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in j + 1..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL on the tridiagonal `(d, e)`; rotations are applied to
/// the rows of `z` (row `i` = vector `i`).
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS_PER_EIGENVALUE {
                    return Err(Error::NoConvergence {
                        index: l,
                        iterations: MAX_SWEEPS_PER_EIGENVALUE,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = z.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn canonicalize_clusters(energies: &[f64], vectors: &mut DMatrix<f64>) {
    let n = energies.len();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < DEGENERACY_GAP {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let rebuilt = index_ordered_basis(&block);
            vectors.columns_mut(start, end - start).copy_from(&rebuilt);
        }
        start = end;
    }
}

/// Orthonormal basis of span(block) built from the projections of the unit
/// vectors in index order.
fn index_ordered_basis(block: &DMatrix<f64>) -> DMatrix<f64> {
    const ACCEPT: f64 = 1e-3;
    let (n, r) = block.shape();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(r);
    let residual = |k: usize, out: &[DVector<f64>]| {
        let mut x: DVector<f64> = block * block.row(k).transpose();
        for o in out {
            let c = o.dot(&x);
            x.axpy(-c, o, 1.0);
        }
        x
    };
    for k in 0..n {
        if out.len() == r {
            break;
        }
        let x = residual(k, &out);
        let norm = x.norm();
        if norm > ACCEPT {
            out.push(x / norm);
        }
    }
    // Only reachable for very large clusters in very large bases.
    while out.len() < r {
        let (best, x) = (0..n)
            .map(|k| {
                let x = residual(k, &out);
                (x.norm(), x)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("non-empty basis");
        out.push(x / best);
    }
    DMatrix::from_columns(&out)
}

fn fix_sign(mut col: nalgebra::DVectorViewMut<'_, f64>) {
    let max = col.amax();
    if max == 0.0 {
        return;
    }
    let lead = col
        .iter()
        .find(|x| x.abs() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(0.0);
    if lead < 0.0 {
        col.neg_mut();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{hamiltonian, ModelParameters};
    use approx::assert_abs_diff_eq;

    fn spectrum_of(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
        symmetric_eigen(&a).unwrap()
    }

    #[test]
    fn two_by_two_swap() {
        let (e, v) = spectrum_of(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 1.0, epsilon = 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[(0, 0)], s, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(1, 0)], -s, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(0, 1)], s, epsilon = 1e-15);
        assert_abs_diff_eq!(v[(1, 1)], s, epsilon = 1e-15);
    }

    #[test]
    fn one_by_one_and_empty() {
        let (e, v) = spectrum_of(DMatrix::from_element(1, 1, -3.5));
        assert_eq!(e, vec![-3.5]);
        assert_eq!(v[(0, 0)], 1.0);
        let (e, _) = spectrum_of(DMatrix::zeros(0, 0));
        assert!(e.is_empty());
    }

    #[test]
    fn oscillator_shells() {
        let h = hamiltonian(&ModelParameters::new(0.0, 5).unwrap());
        let s = diagonalize(&h).unwrap();
        let mut expected = Vec::new();
        for shell in 0..=5 {
            expected.extend(std::iter::repeat_n(shell as f64 + 1.0, shell + 1));
        }
        for (e, x) in s.energies().iter().zip(&expected) {
            assert_abs_diff_eq!(e, x, epsilon = 1e-12);
        }
        // Exact degeneracy: canonical vectors are the unit vectors themselves.
        assert_abs_diff_eq!(s.vectors().clone(), DMatrix::identity(21, 21), epsilon = 1e-12);
    }

    #[test]
    fn rejects_asymmetric_and_nonfinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigen(&a), Err(Error::NotSymmetric { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(matches!(symmetric_eigen(&b), Err(Error::NonFinite { .. })));
        let l = crate::operators::angular_momentum_matrix(&FockBasis::new(2));
        assert!(diagonalize(&l).is_err());
    }

    #[test]
    fn invariants_on_hamiltonian() {
        let h = hamiltonian(&ModelParameters::new(0.1, 14).unwrap());
        let s = diagonalize(&h).unwrap();
        assert!(s.energies().windows(2).all(|w| w[0] <= w[1]));
        assert!(s.orthonormality_error() <= 1e-10);
        assert!(s.max_residual(h.entries()) <= 1e-8 * h.frobenius_norm());
        let trace = h.entries().trace();
        let sum: f64 = s.energies().iter().sum();
        assert!((sum - trace).abs() <= 1e-8 * trace.abs());
    }

    #[test]
    fn deterministic() {
        let h = hamiltonian(&ModelParameters::new(0.1, 10).unwrap());
        let a = diagonalize(&h).unwrap();
        let b = diagonalize(&h).unwrap();
        assert_eq!(a.energies(), b.energies());
        assert_eq!(a.vectors(), b.vectors());
    }

    #[test]
    fn subspace_solve_blocks() {
        let h = hamiltonian(&ModelParameters::new(0.1, 8).unwrap());
        let full = diagonalize(&h).unwrap();
        let same = subspace_solve(&h, 8).unwrap();
        assert_eq!(full.energies(), same.energies());

        let tiny = subspace_solve(&h, 1).unwrap();
        assert_eq!(tiny.dim(), 3);
        assert_eq!(tiny.basis().max_shell(), 1);
        assert!(subspace_solve(&h, 9).is_err());
    }

    #[test]
    fn cauchy_interlacing() {
        let h = hamiltonian(&ModelParameters::new(0.2, 9).unwrap());
        let full = diagonalize(&h).unwrap();
        let block = subspace_solve(&h, 6).unwrap();
        let (n, m) = (full.dim(), block.dim());
        for j in 0..m {
            assert!(full.energy(j) <= block.energy(j) + 1e-10);
            assert!(block.energy(j) <= full.energy(j + n - m) + 1e-10);
        }
    }

    #[test]
    fn csv_outputs() {
        let s = diagonalize(&hamiltonian(&ModelParameters::new(0.0, 1).unwrap())).unwrap();
        let mut buf = Vec::new();
        s.write_energies_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,energy\n0,1.0000000000000000e0\n"));
        let mut buf = Vec::new();
        s.write_coefficients_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }
}
