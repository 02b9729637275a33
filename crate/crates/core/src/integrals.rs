//! Approximate integrals of motion from a partial diagonalization.
//!
//! The Hamiltonian is diagonalized inside the P-space (shells `0..=K_p`).
//! Ritz vectors whose residual with respect to the full Hamiltonian stays
//! below ε form the S-space. Pairing the energy-ordered Ritz vectors with
//! the P-space basis states defines a unitary `U` on P (identity on Q), and
//! the transformed integrals `J' = U J U†` commute exactly with the
//! integrable Hamiltonian `H_s = Σ_{S} E_δ |ψ_δ⟩⟨ψ_δ|`.
//!
//! `l` is not diagonal in the Cartesian Fock basis; on P it is carried by the
//! circular basis paired index-for-index with the Cartesian one,
//! `(n₊, n₋) = (n1, n2)`, so the label of position α is `m = n1 − n2`. On Q
//! `J'_l` is the original `l`. Integrals are stored as the Hermitian pair
//! `R + i L` with `R` symmetric and `L` antisymmetric.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{FockBasis, FockState};
use crate::eigen::{diagonalize, subspace_solve, Spectrum};
use crate::error::{Error, Result};
use crate::format::num;
use crate::operators::{angular_momentum_matrix, MatrixKind, OperatorMatrix};
use crate::spacing::{classify_symmetry, Block, SymmetryLabel, DEFAULT_DEGENERACY_TOLERANCE};

pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

/// Relative tolerance for commutators, measured against `‖A‖_F ‖B‖_F`.
pub const COMMUTATOR_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IntegralKind {
    N1,
    N2,
    N,
    L,
}

impl IntegralKind {
    pub fn parse(s: &str) -> Result<IntegralKind> {
        match s {
            "n1" => Ok(IntegralKind::N1),
            "n2" => Ok(IntegralKind::N2),
            "N" => Ok(IntegralKind::N),
            "l" => Ok(IntegralKind::L),
            other => Err(Error::InvalidParameter(format!(
                "unknown integral {other:?} (expected n1, n2, N or l)"
            ))),
        }
    }

    /// Eigenvalue of the integral carried by basis position `s`.
    pub fn label(self, s: FockState) -> f64 {
        match self {
            IntegralKind::N1 => s.n1 as f64,
            IntegralKind::N2 => s.n2 as f64,
            IntegralKind::N => s.shell() as f64,
            IntegralKind::L => s.n1 as f64 - s.n2 as f64,
        }
    }

    /// `l` commutes with `N` but not with `n1`, `n2`.
    pub fn commutes_with(self, other: IntegralKind) -> bool {
        use IntegralKind::*;
        !matches!((self, other), (L, N1 | N2) | (N1 | N2, L))
    }

    /// The untransformed operator as a Hermitian pair.
    pub fn operator(self, basis: &FockBasis) -> HermitianPair {
        match self {
            IntegralKind::L => HermitianPair {
                real: DMatrix::zeros(basis.dim(), basis.dim()),
                imag: Some(angular_momentum_matrix(basis).into_entries()),
            },
            kind => HermitianPair {
                real: DMatrix::from_diagonal(&DVector::from_iterator(
                    basis.dim(),
                    basis.states().iter().map(|&s| kind.label(s)),
                )),
                imag: None,
            },
        }
    }
}

impl fmt::Display for IntegralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntegralKind::N1 => "n1",
            IntegralKind::N2 => "n2",
            IntegralKind::N => "N",
            IntegralKind::L => "l",
        })
    }
}

/// `R + i L`; `imag = None` means a real symmetric operator.
#[derive(Clone, Debug)]
pub struct HermitianPair {
    pub real: DMatrix<f64>,
    pub imag: Option<DMatrix<f64>>,
}

impl HermitianPair {
    pub fn dim(&self) -> usize {
        self.real.nrows()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let im = self.imag.as_ref().map_or(0.0, |l| l.norm_squared());
        (self.real.norm_squared() + im).sqrt()
    }

    /// `‖[self, other]‖_max` over real and imaginary parts.
    pub fn commutator_max(&self, other: &HermitianPair) -> f64 {
        let zero = || DMatrix::zeros(self.dim(), self.dim());
        let (ra, rb) = (&self.real, &other.real);
        let la = self.imag.clone().unwrap_or_else(zero);
        let lb = other.imag.clone().unwrap_or_else(zero);
        // [Ra + iLa, Rb + iLb] = [Ra,Rb] − [La,Lb] + i([Ra,Lb] + [La,Rb])
        let re = (ra * rb - rb * ra) - (&la * &lb - &lb * &la);
        let im = (ra * &lb - &lb * ra) + (&la * rb - rb * &la);
        re.amax().max(im.amax())
    }

    /// Real `2D × 2D` form `[[R, −L], [L, R]]`, whose spectrum is that of
    /// `R + i L` with every eigenvalue doubled.
    pub fn real_embedding(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        m.view_mut((0, 0), (d, d)).copy_from(&self.real);
        m.view_mut((d, d), (d, d)).copy_from(&self.real);
        if let Some(l) = &self.imag {
            m.view_mut((d, 0), (d, d)).copy_from(l);
            m.view_mut((0, d), (d, d)).copy_from(&(-l));
        }
        m
    }

    /// Eigenvalues, ascending, each listed once.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        match &self.imag {
            None => Ok(crate::eigen::symmetric_eigen(&self.real)?.0),
            Some(_) => {
                let all = crate::eigen::symmetric_eigen(&self.real_embedding())?.0;
                Ok(all.into_iter().step_by(2).collect())
            }
        }
    }

    /// ΔA in each column of `states` at once.
    pub fn deviations(&self, states: &DMatrix<f64>) -> Vec<f64> {
        let applied = &self.real * states;
        let applied_im = self.imag.as_ref().map(|l| l * states);
        (0..states.ncols())
            .map(|i| {
                let v = states.column(i);
                let a = applied.column(i);
                let mean = v.dot(&a);
                let mut var = (a - v * mean).norm_squared();
                if let Some(li) = &applied_im {
                    var += li.column(i).norm_squared();
                }
                var.sqrt()
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct ModelSpace {
    parent: FockBasis,
    p_shells: usize,
    ritz: Spectrum,
    residuals: Vec<f64>,
    s_indices: Vec<usize>,
    threshold: f64,
}

impl ModelSpace {
    pub fn parent(&self) -> &FockBasis {
        &self.parent
    }

    pub fn p_shells(&self) -> usize {
        self.p_shells
    }

    pub fn dim_p(&self) -> usize {
        self.ritz.dim()
    }

    pub fn dim_s(&self) -> usize {
        self.s_indices.len()
    }

    /// Ritz spectrum; coefficients run over the P-space states.
    pub fn ritz(&self) -> &Spectrum {
        &self.ritz
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Accepted Ritz indices, ascending in energy.
    pub fn s_indices(&self) -> &[usize] {
        &self.s_indices
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Largest accepted residual; `None` when S is empty.
    pub fn epsilon(&self) -> Option<f64> {
        self.s_indices
            .iter()
            .map(|&i| self.residuals[i])
            .fold(None, |m, r| Some(m.map_or(r, |m: f64| m.max(r))))
    }

    /// Ritz vector `i` padded with zeros on Q.
    pub fn embedded(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.parent.dim());
        v.rows_mut(0, self.dim_p()).copy_from(&self.ritz.vector(i));
        v
    }

    pub fn s_energy_range(&self) -> Option<(f64, f64)> {
        let first = *self.s_indices.first()?;
        let last = *self.s_indices.last()?;
        Some((self.ritz.energy(first), self.ritz.energy(last)))
    }
}

/// Diagonalizes `H` in shells `0..=p_shells` and keeps the Ritz vectors with
/// `‖Hψ − Eψ‖ ≤ epsilon`, the residual taken with the parent `H`. An empty
/// S-space is a valid outcome.
pub fn build_model_space(h: &OperatorMatrix, p_shells: usize, epsilon: f64) -> Result<ModelSpace> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "residual threshold must be positive, got {epsilon}"
        )));
    }
    let ritz = subspace_solve(h, p_shells)?;
    let dp = ritz.dim();
    let hp = h.entries().columns(0, dp) * ritz.vectors();
    let residuals: Vec<f64> = (0..dp)
        .map(|i| {
            let mut r = hp.column(i).clone_owned();
            let e = ritz.energy(i);
            for (k, c) in ritz.vector(i).iter().enumerate() {
                r[k] -= e * c;
            }
            r.norm()
        })
        .collect();
    let s_indices = (0..dp).filter(|&i| residuals[i] <= epsilon).collect();
    Ok(ModelSpace {
        parent: h.basis().clone(),
        p_shells,
        ritz,
        residuals,
        s_indices,
        threshold: epsilon,
    })
}

/// The unitary on P whose rows are the Ritz vectors; row α is paired with
/// basis state α.
#[derive(Clone, Debug)]
pub struct UnitaryTransform {
    parent: FockBasis,
    matrix: DMatrix<f64>,
}

impl UnitaryTransform {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim_p(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim_p();
        (&self.matrix * self.matrix.transpose() - DMatrix::identity(n, n)).amax()
    }

    /// `U` on the parent space (identity on Q).
    pub fn full_matrix(&self) -> DMatrix<f64> {
        let d = self.parent.dim();
        let mut m = DMatrix::identity(d, d);
        m.view_mut((0, 0), (self.dim_p(), self.dim_p())).copy_from(&self.matrix);
        m
    }
}

/// Requires a non-empty S-space.
pub fn build_unitary(ms: &ModelSpace) -> Result<UnitaryTransform> {
    if ms.dim_s() == 0 {
        return Err(Error::Empty("S-space"));
    }
    ritz_unitary(ms)
}

/// As [`build_unitary`] but also for an empty S-space: the pairing of Ritz
/// vectors with basis states does not depend on which of them are accepted.
pub fn ritz_unitary(ms: &ModelSpace) -> Result<UnitaryTransform> {
    let u = UnitaryTransform {
        parent: ms.parent.clone(),
        matrix: ms.ritz.vectors().transpose(),
    };
    let err = u.orthogonality_error();
    if err > ORTHOGONALITY_TOLERANCE {
        return Err(Error::RankDeficient(err));
    }
    Ok(u)
}

/// `H_s = Σ_{δ∈S} E_δ |ψ_δ⟩⟨ψ_δ|` on the parent basis.
pub fn integrable_hamiltonian(ms: &ModelSpace) -> OperatorMatrix {
    let d = ms.parent.dim();
    let dp = ms.dim_p();
    let mut block = DMatrix::zeros(dp, dp);
    for &i in &ms.s_indices {
        let v = ms.ritz.vector(i);
        block.ger(ms.ritz.energy(i), &v, &v, 1.0);
    }
    let mut full = DMatrix::zeros(d, d);
    full.view_mut((0, 0), (dp, dp)).copy_from(&block);
    let full = (&full + full.transpose()) * 0.5;
    OperatorMatrix::from_parts(ms.parent.clone(), full, MatrixKind::Symmetric)
}

#[derive(Clone, Debug)]
pub struct ApproxIntegral {
    pub kind: IntegralKind,
    pub p_shells: usize,
    pub matrix: HermitianPair,
}

/// `J' = U J U†`: on P the Ritz vectors carry the labels of their paired
/// basis states, on Q the matrix is the untransformed `J`.
pub fn transform_integral(u: &UnitaryTransform, kind: IntegralKind) -> ApproxIntegral {
    let dp = u.dim_p();
    let mut matrix = kind.operator(&u.parent);
    let labels = DVector::from_iterator(dp, u.parent.states()[..dp].iter().map(|&s| kind.label(s)));
    let mut scaled = u.matrix.clone();
    for (mut row, &l) in scaled.row_iter_mut().zip(labels.iter()) {
        row *= l;
    }
    let block = u.matrix.transpose() * scaled;
    let block = (&block + block.transpose()) * 0.5;
    matrix.real.view_mut((0, 0), (dp, dp)).copy_from(&block);
    if let Some(l) = matrix.imag.as_mut() {
        l.view_mut((0, 0), (dp, dp)).fill(0.0);
    }
    ApproxIntegral {
        kind,
        p_shells: u.dim_p(),
        matrix,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct NormBoundReport {
    pub trials: usize,
    pub max_norm: f64,
    pub bound: f64,
}

impl NormBoundReport {
    pub fn holds(&self) -> bool {
        self.max_norm <= self.bound
    }
}

/// `max ‖(H − H_s) χ‖` over random normalized χ in the S-space, against
/// `ε √dim S` with ε the largest accepted residual.
pub fn norm_bound_check(
    h: &OperatorMatrix,
    ms: &ModelSpace,
    trials: usize,
    seed: u64,
) -> Result<NormBoundReport> {
    let eps = ms.epsilon().ok_or(Error::Empty("S-space"))?;
    let diff = h.entries() - integrable_hamiltonian(ms).entries();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis: Vec<DVector<f64>> = ms.s_indices.iter().map(|&i| ms.embedded(i)).collect();
    let mut max_norm: f64 = 0.0;
    for _ in 0..trials {
        let a: Vec<f64> = (0..basis.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut chi = DVector::zeros(ms.parent.dim());
        for (ai, v) in a.iter().zip(&basis) {
            chi.axpy(ai / scale, v, 1.0);
        }
        max_norm = max_norm.max((&diff * chi).norm());
    }
    Ok(NormBoundReport {
        trials,
        max_norm,
        bound: eps * (ms.dim_s() as f64).sqrt(),
    })
}

/// Largest commutator of `H_s` with the integrals and of the integrals
/// with each other, each relative to the product of Frobenius norms. Pairs
/// whose untransformed versions do not commute are skipped.
#[derive(Clone, Debug)]
pub struct CommutationReport {
    pub with_hs: Vec<(IntegralKind, f64)>,
    pub mutual: Vec<(IntegralKind, IntegralKind, f64)>,
}

impl CommutationReport {
    pub fn max(&self) -> f64 {
        self.with_hs
            .iter()
            .map(|c| c.1)
            .chain(self.mutual.iter().map(|c| c.2))
            .fold(0.0, f64::max)
    }
}

fn relative_commutator(a: &HermitianPair, b: &HermitianPair) -> f64 {
    let scale = a.frobenius_norm() * b.frobenius_norm();
    if scale == 0.0 {
        0.0
    } else {
        a.commutator_max(b) / scale
    }
}

pub fn commutation_report(hs: &OperatorMatrix, integrals: &[ApproxIntegral]) -> CommutationReport {
    let hs = HermitianPair {
        real: hs.entries().clone(),
        imag: None,
    };
    let with_hs = integrals
        .iter()
        .map(|j| (j.kind, relative_commutator(&hs, &j.matrix)))
        .collect();
    let mut mutual = Vec::new();
    for (i, a) in integrals.iter().enumerate() {
        for b in integrals[i + 1..].iter().filter(|b| a.kind.commutes_with(b.kind)) {
            mutual.push((a.kind, b.kind, relative_commutator(&a.matrix, &b.matrix)));
        }
    }
    CommutationReport { with_hs, mutual }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Reference energy inside the S-space energy range.
    InS,
    /// Reference energy above the unperturbed ceiling `K_p + 1` of P.
    OutS,
    /// Neither; excluded from both averages.
    Edge,
}

impl fmt::Display for Membership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Membership::InS => "true",
            Membership::OutS => "false",
            Membership::Edge => "edge",
        })
    }
}

pub fn membership(ms: &ModelSpace, energy: f64) -> Membership {
    if let Some((lo, hi)) = ms.s_energy_range() {
        let tol = ms.threshold;
        if energy >= lo - tol && energy <= hi + tol {
            return Membership::InS;
        }
    }
    if ms.p_shells < ms.parent.max_shell() && energy > ms.p_shells as f64 + 1.0 {
        Membership::OutS
    } else {
        Membership::Edge
    }
}

#[derive(Clone, Debug)]
pub struct StudyOptions {
    pub p_sizes: Vec<usize>,
    pub integrals: Vec<IntegralKind>,
    pub epsilon: f64,
}

/// ΔJ' of one integral at one `K_p` in every reference eigenstate.
#[derive(Clone, Debug)]
pub struct IntegralSeries {
    pub kind: IntegralKind,
    pub delta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct StudyPoint {
    pub p_shells: usize,
    pub dim_p: usize,
    pub dim_s: usize,
    pub epsilon: Option<f64>,
    pub membership: Vec<Membership>,
    pub series: Vec<IntegralSeries>,
}

#[derive(Clone, Debug)]
pub struct DeltaJStudy {
    pub reference: Spectrum,
    pub labels: Vec<SymmetryLabel>,
    /// ΔJ of the untransformed integrals.
    pub baseline: Vec<IntegralSeries>,
    pub points: Vec<StudyPoint>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl DeltaJStudy {
    fn series(list: &[IntegralSeries], kind: IntegralKind) -> Option<&[f64]> {
        list.iter().find(|s| s.kind == kind).map(|s| s.delta.as_slice())
    }

    pub fn baseline_for(&self, kind: IntegralKind) -> Option<&[f64]> {
        Self::series(&self.baseline, kind)
    }

    /// In-S reference states of the largest model space: the common set on
    /// which the `K_p` values are compared.
    pub fn common_set(&self) -> Vec<usize> {
        match self.points.iter().max_by_key(|p| p.p_shells) {
            Some(p) => (0..p.membership.len())
                .filter(|&i| p.membership[i] == Membership::InS)
                .collect(),
            None => Vec::new(),
        }
    }

    /// `(K_p, ⟨ΔJ'⟩ on the common set)` in the order of `p_sizes`.
    pub fn common_trend(&self, kind: IntegralKind) -> Vec<(usize, Option<f64>)> {
        let set = self.common_set();
        self.points
            .iter()
            .map(|p| {
                let d = Self::series(&p.series, kind);
                (p.p_shells, d.and_then(|d| mean(set.iter().map(|&i| d[i]))))
            })
            .collect()
    }

    pub fn class_average(&self, point: &StudyPoint, kind: IntegralKind, class: Membership) -> Option<f64> {
        let d = Self::series(&point.series, kind)?;
        mean((0..d.len()).filter(|&i| point.membership[i] == class).map(|i| d[i]))
    }

    pub fn class_baseline(&self, point: &StudyPoint, kind: IntegralKind, class: Membership) -> Option<f64> {
        let d = self.baseline_for(kind)?;
        mean((0..d.len()).filter(|&i| point.membership[i] == class).map(|i| d[i]))
    }

    /// `|ΔJ' − ΔJ| / max(ΔJ, 0.1)` for each out-of-S state.
    pub fn out_of_s_changes(&self, point: &StudyPoint, kind: IntegralKind) -> Vec<f64> {
        let (Some(d), Some(b)) = (Self::series(&point.series, kind), self.baseline_for(kind)) else {
            return Vec::new();
        };
        (0..d.len())
            .filter(|&i| point.membership[i] == Membership::OutS)
            .map(|i| (d[i] - b[i]).abs() / b[i].max(0.1))
            .collect()
    }
}

/// ΔJ' for every reference eigenstate of `h`, for each model-space size.
pub fn delta_jprime_study(h: &OperatorMatrix, opts: &StudyOptions) -> Result<DeltaJStudy> {
    let reference = diagonalize(h)?;
    let labels = classify_symmetry(&reference, DEFAULT_DEGENERACY_TOLERANCE);
    let basis = h.basis();
    let baseline = opts
        .integrals
        .iter()
        .map(|&kind| IntegralSeries {
            kind,
            delta: kind.operator(basis).deviations(reference.vectors()),
        })
        .collect();
    let point = |&kp: &usize| -> Result<StudyPoint> {
        let ms = build_model_space(h, kp, opts.epsilon)?;
        let u = ritz_unitary(&ms)?;
        let series = opts
            .integrals
            .iter()
            .map(|&kind| IntegralSeries {
                kind,
                delta: transform_integral(&u, kind)
                    .matrix
                    .deviations(reference.vectors()),
            })
            .collect();
        let membership = reference
            .energies()
            .iter()
            .map(|&e| membership(&ms, e))
            .collect();
        Ok(StudyPoint {
            p_shells: kp,
            dim_p: ms.dim_p(),
            dim_s: ms.dim_s(),
            epsilon: ms.epsilon(),
            membership,
            series,
        })
    };
    #[cfg(feature = "parallel")]
    let points = {
        use rayon::prelude::*;
        opts.p_sizes.par_iter().map(point).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let points = opts.p_sizes.iter().map(point).collect::<Result<Vec<_>>>()?;
    Ok(DeltaJStudy {
        reference,
        labels,
        baseline,
        points,
    })
}

pub const STUDY_HEADER: &str =
    "kp_shells,integral,symmetry_block,energy_bin,delta_jprime_avg,in_s_space";

/// One row per (K_p, integral, block, unit energy bin, class) with members,
/// plus `all`/`all` rows holding the global average of each class. Model
/// spaces without in-S states get a row with an empty average.
pub fn write_study_csv<W: Write>(study: &DeltaJStudy, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{STUDY_HEADER}")?;
    let energies = study.reference.energies();
    let max_bin = energies.iter().fold(0.0f64, |m, e| m.max(*e)).floor() as usize;
    for p in &study.points {
        for s in &p.series {
            for class in [Membership::InS, Membership::OutS] {
                let members = |i: &usize| p.membership[*i] == class;
                let all = mean((0..s.delta.len()).filter(members).map(|i| s.delta[i]));
                match all {
                    Some(avg) => writeln!(
                        w,
                        "{},{},all,all,{},{class}",
                        p.p_shells,
                        s.kind,
                        num(avg)
                    )?,
                    None => {
                        writeln!(w, "{},{},all,all,,{class}", p.p_shells, s.kind)?;
                        continue;
                    }
                }
                for block in Block::ALL {
                    for bin in 0..=max_bin {
                        let avg = mean(
                            (0..s.delta.len())
                                .filter(members)
                                .filter(|&i| {
                                    study.labels[i].block == block
                                        && energies[i].floor() as usize == bin
                                })
                                .map(|i| s.delta[i]),
                        );
                        if let Some(avg) = avg {
                            writeln!(
                                w,
                                "{},{},{block},{bin},{},{class}",
                                p.p_shells,
                                s.kind,
                                num(avg)
                            )?;
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks that `J'` and `J` have the same spectrum.
pub fn spectrum_preserved(j: &ApproxIntegral, basis: &FockBasis, tol: f64) -> Result<f64> {
    let a = j.matrix.eigenvalues()?;
    let b = j.kind.operator(basis).eigenvalues()?;
    let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if dev > tol {
        return Err(Error::IllConditioned(format!(
            "spectrum of {} changed by {dev:e}",
            j.kind
        )));
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{hamiltonian, ModelParameters};

    fn h(lambda: f64, max_shell: usize) -> OperatorMatrix {
        hamiltonian(&ModelParameters::new(lambda, max_shell).unwrap())
    }

    #[test]
    fn labels() {
        let s = FockState::new(3, 1);
        assert_eq!(IntegralKind::N.label(s), 4.0);
        assert_eq!(IntegralKind::L.label(s), 2.0);
        assert_eq!(IntegralKind::N2.label(s), 1.0);
        assert!(IntegralKind::parse("x").is_err());
    }

    #[test]
    fn trivial_model_space_leaves_integrals_unchanged() {
        let h = h(0.1, 8);
        let ms = build_model_space(&h, 0, 1.0).unwrap();
        assert_eq!(ms.dim_p(), 1);
        let u = ritz_unitary(&ms).unwrap();
        for kind in [IntegralKind::N, IntegralKind::L, IntegralKind::N1] {
            let j = transform_integral(&u, kind);
            let orig = kind.operator(h.basis());
            assert_eq!(j.matrix.real, orig.real);
            assert_eq!(j.matrix.imag, orig.imag);
        }
    }

    #[test]
    fn unperturbed_model_space_accepts_everything() {
        let h = h(0.0, 6);
        let ms = build_model_space(&h, 3, 1e-12).unwrap();
        assert_eq!(ms.dim_s(), ms.dim_p());
        assert_eq!(ms.epsilon(), Some(0.0));
    }

    #[test]
    fn empty_s_space_is_not_an_error() {
        let ms = build_model_space(&h(0.1, 10), 1, 1e-8).unwrap();
        assert_eq!(ms.dim_s(), 0);
        assert!(matches!(build_unitary(&ms), Err(Error::Empty(_))));
        assert!(ritz_unitary(&ms).is_ok());
    }

    #[test]
    fn threshold_validated() {
        assert!(build_model_space(&h(0.1, 5), 2, 0.0).is_err());
        assert!(build_model_space(&h(0.1, 5), 2, f64::NAN).is_err());
        assert!(build_model_space(&h(0.1, 5), 9, 1e-3).is_err());
    }

    #[test]
    fn hs_commutes_with_integrals() {
        let h = h(0.1, 16);
        let ms = build_model_space(&h, 10, 1e-3).unwrap();
        assert!(ms.dim_s() > 0);
        let u = build_unitary(&ms).unwrap();
        assert!(u.orthogonality_error() < ORTHOGONALITY_TOLERANCE);
        let hs = integrable_hamiltonian(&ms);
        // l commutes with N but not with n1, n2.
        for set in [
            [IntegralKind::N, IntegralKind::L].as_slice(),
            &[IntegralKind::N1, IntegralKind::N2, IntegralKind::N],
        ] {
            let js: Vec<_> = set.iter().map(|&k| transform_integral(&u, k)).collect();
            let report = commutation_report(&hs, &js);
            assert!(report.max() < COMMUTATOR_TOLERANCE, "{report:?}");
            for j in &js {
                spectrum_preserved(j, h.basis(), 1e-9).unwrap();
            }
        }
    }

    #[test]
    fn embedding_doubles_spectrum() {
        let b = FockBasis::new(3);
        let l = IntegralKind::L.operator(&b);
        let ev = l.eigenvalues().unwrap();
        let mut expected: Vec<f64> = b.states().iter().map(|&s| IntegralKind::L.label(s)).collect();
        expected.sort_by(f64::total_cmp);
        for (a, e) in ev.iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_bound() {
        let h = h(0.1, 16);
        let ms = build_model_space(&h, 10, 1e-3).unwrap();
        let r = norm_bound_check(&h, &ms, 50, 7).unwrap();
        assert!(r.holds(), "{r:?}");
    }
}
