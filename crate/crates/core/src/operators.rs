//! Operator matrices in the truncated Fock basis and the Hénon-Heiles
//! Hamiltonian `H = H0 + λ (q1² q2 − q2³/3)` in units ħ = ω = m = 1.
//!
//! Every matrix here is the projection `P A P` of the operator onto the
//! working basis. Products that pass through intermediate states (the cubic
//! potential, the angular momentum) are formed in an enlarged basis and
//! then cut back, so their elements on the working basis are exact.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::basis::{FockBasis, Mode};
use crate::error::{Error, Result};
use crate::format::num;

/// How the stored real matrix relates to the operator it represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixKind {
    /// Real symmetric; the operator is the matrix itself.
    Symmetric,
    /// The operator is `i` times the stored real antisymmetric matrix.
    ImaginaryAntisymmetric,
    /// Real with no symmetry (ladder operators, products of them).
    General,
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: FockBasis,
    entries: DMatrix<f64>,
    kind: MatrixKind,
}

impl OperatorMatrix {
    pub fn new(basis: FockBasis, entries: DMatrix<f64>, kind: MatrixKind) -> Result<Self> {
        let dim = basis.dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(OperatorMatrix {
            basis,
            entries,
            kind,
        })
    }

    pub(crate) fn from_parts(basis: FockBasis, entries: DMatrix<f64>, kind: MatrixKind) -> Self {
        debug_assert_eq!(entries.nrows(), basis.dim());
        OperatorMatrix {
            basis,
            entries,
            kind,
        }
    }

    pub fn zeros(basis: &FockBasis) -> Self {
        let d = basis.dim();
        Self::from_parts(basis.clone(), DMatrix::zeros(d, d), MatrixKind::Symmetric)
    }

    pub fn identity(basis: &FockBasis) -> Self {
        let d = basis.dim();
        Self::from_parts(basis.clone(), DMatrix::identity(d, d), MatrixKind::Symmetric)
    }

    pub fn diagonal(basis: &FockBasis, f: impl Fn(crate::basis::FockState) -> f64) -> Self {
        let diag = DVector::from_iterator(basis.dim(), basis.states().iter().map(|&s| f(s)));
        Self::from_parts(
            basis.clone(),
            DMatrix::from_diagonal(&diag),
            MatrixKind::Symmetric,
        )
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn is_symmetric(&self) -> bool {
        self.kind == MatrixKind::Symmetric
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[(row, col)]
    }

    /// Leading block on the shells `0..=max_shell`.
    pub fn shell_block(&self, max_shell: usize) -> Result<OperatorMatrix> {
        if max_shell > self.basis.max_shell() {
            return Err(Error::InvalidParameter(format!(
                "block cutoff {max_shell} exceeds basis cutoff {}",
                self.basis.max_shell()
            )));
        }
        let sub = FockBasis::new(max_shell);
        let d = sub.dim();
        let entries = self.entries.view((0, 0), (d, d)).into_owned();
        Ok(Self::from_parts(sub, entries, self.kind))
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.entries *= factor;
        self
    }

    /// Largest `|A B − B A|` entry over the stored real matrices.
    pub fn commutator_max(&self, other: &OperatorMatrix) -> f64 {
        commutator_max(&self.entries, &other.entries)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm()
    }

    /// Plain-text dump: a `dim D` header, then `i j value` for every
    /// non-zero entry in row-major order.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dim {}", self.dim())?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let v = self.entries[(i, j)];
                if v != 0.0 {
                    writeln!(w, "{i} {j} {}", num(v))?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn commutator_max(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b - b * a).amax()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParameters {
    pub lambda: f64,
    pub max_shell: usize,
}

impl ModelParameters {
    pub fn new(lambda: f64, max_shell: usize) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        Ok(ModelParameters { lambda, max_shell })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Raise,
    Lower,
}

/// Real matrix of `a_k` (`Lower`) or `a_k†` (`Raise`) in the truncated basis.
/// Transitions that would leave the basis are dropped.
pub fn ladder_matrix(basis: &FockBasis, mode: Mode, ladder: Ladder) -> OperatorMatrix {
    let lower = lowering_entries(basis, mode);
    let entries = match ladder {
        Ladder::Lower => lower,
        Ladder::Raise => lower.transpose(),
    };
    OperatorMatrix::from_parts(basis.clone(), entries, MatrixKind::General)
}

pub(crate) fn lowering_entries(basis: &FockBasis, mode: Mode) -> DMatrix<f64> {
    let d = basis.dim();
    let mut a = DMatrix::zeros(d, d);
    for (col, &s) in basis.states().iter().enumerate() {
        let n = s.occupation(mode);
        if n == 0 {
            continue;
        }
        let lowered = match mode {
            Mode::One => crate::basis::FockState::new(s.n1 - 1, s.n2),
            Mode::Two => crate::basis::FockState::new(s.n1, s.n2 - 1),
        };
        let row = basis.index_of(lowered).expect("lowered state stays in basis");
        a[(row, col)] = (n as f64).sqrt();
    }
    a
}

/// Diagonal `n1`, `n2` and `N = n1 + n2`.
pub fn number_operators(basis: &FockBasis) -> (OperatorMatrix, OperatorMatrix, OperatorMatrix) {
    (
        OperatorMatrix::diagonal(basis, |s| s.n1 as f64),
        OperatorMatrix::diagonal(basis, |s| s.n2 as f64),
        OperatorMatrix::diagonal(basis, |s| s.shell() as f64),
    )
}

/// `l = i (a1 a2† − a1† a2)`, stored as the real antisymmetric `L` with
/// `l = i L`. With this sign `l |1,0⟩ = i |0,1⟩`.
pub fn angular_momentum_matrix(basis: &FockBasis) -> OperatorMatrix {
    let big = basis.enlarged(1);
    let a1 = lowering_entries(&big, Mode::One);
    let a2 = lowering_entries(&big, Mode::Two);
    let full = &a1 * a2.transpose() - a1.transpose() * &a2;
    let d = basis.dim();
    let block = full.view((0, 0), (d, d)).into_owned();
    let entries = (&block - block.transpose()) * 0.5;
    OperatorMatrix::from_parts(basis.clone(), entries, MatrixKind::ImaginaryAntisymmetric)
}

/// Diagonal `n1 + n2 + 1`.
pub fn h0_matrix(basis: &FockBasis) -> OperatorMatrix {
    OperatorMatrix::diagonal(basis, |s| s.shell() as f64 + 1.0)
}

/// `Π = (−1)^{n1}`, the reflection `q1 → −q1`.
pub fn parity_matrix(basis: &FockBasis) -> OperatorMatrix {
    OperatorMatrix::diagonal(basis, |s| s.parity())
}

/// `λ (q1² q2 − q2³/3)` with `q_k = (a_k + a_k†)/√2`.
pub fn v_matrix(basis: &FockBasis, lambda: f64) -> OperatorMatrix {
    // V moves at most three quanta, so three extra shells keep every
    // intermediate state of the products inside the enlarged basis.
    let big = basis.enlarged(3);
    let position = |mode| {
        let a = lowering_entries(&big, mode);
        (&a + a.transpose()) * std::f64::consts::FRAC_1_SQRT_2
    };
    let q1 = position(Mode::One);
    let q2 = position(Mode::Two);
    let q2_sq = &q2 * &q2;
    let full = (&q1 * &q1) * &q2 - (&q2_sq * &q2) / 3.0;

    let d = basis.dim();
    let block = full.view((0, 0), (d, d)).into_owned();
    // (W + Wᵀ)/2 is bitwise symmetric since float addition commutes.
    let entries = (&block + block.transpose()) * (0.5 * lambda);
    OperatorMatrix::from_parts(basis.clone(), entries, MatrixKind::Symmetric)
}

pub fn hamiltonian(params: &ModelParameters) -> OperatorMatrix {
    let basis = FockBasis::new(params.max_shell);
    let h0 = h0_matrix(&basis);
    let v = v_matrix(&basis, params.lambda);
    OperatorMatrix::from_parts(basis, h0.entries + v.entries, MatrixKind::Symmetric)
}
