//! Oscillator projectors and basis transition operators built from ladder
//! words, with exhaustive numerical checks of their algebra.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::basis::{FockBasis, FockState, Mode};
use crate::error::{Error, Result};
use crate::format::num;
use crate::integrals::{build_model_space, integrable_hamiltonian};
use crate::operators::{hamiltonian, lowering_entries, Ladder, MatrixKind, ModelParameters, OperatorMatrix};

pub const PROJECTOR_TOLERANCE: f64 = 1e-12;
pub const TRANSITION_TOLERANCE: f64 = 1e-10;

/// `sin(πx)`, exactly zero at integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round(); // r ∈ [−1, 1]
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    let (sign, r) = if r < 0.0 { (-1.0, -r) } else { (1.0, r) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (std::f64::consts::PI * r).sin()
}

/// `sin(πx)/(πx)` with the limit value 1 at `x = 0`.
pub fn sinc_pi(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        sin_pi(x) / (std::f64::consts::PI * x)
    }
}

/// Ladder matrices of one basis. `corrupted` perturbs a single lowering
/// element so that checks built on top of it must fail.
#[derive(Clone, Debug)]
pub struct LadderSet {
    basis: FockBasis,
    lower: [DMatrix<f64>; 2],
}

impl LadderSet {
    pub fn new(basis: &FockBasis) -> LadderSet {
        LadderSet {
            basis: basis.clone(),
            lower: [
                lowering_entries(basis, Mode::One),
                lowering_entries(basis, Mode::Two),
            ],
        }
    }

    /// Test hook: scales `⟨0,0|a1|1,0⟩` by `1 + delta`.
    pub fn corrupted(basis: &FockBasis, delta: f64) -> LadderSet {
        let mut set = LadderSet::new(basis);
        if let Some(j) = basis.index_of(FockState::new(1, 0)) {
            set.lower[0][(0, j)] *= 1.0 + delta;
        }
        set
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn matrix(&self, mode: Mode, ladder: Ladder) -> DMatrix<f64> {
        let m = match mode {
            Mode::One => &self.lower[0],
            Mode::Two => &self.lower[1],
        };
        match ladder {
            Ladder::Lower => m.clone(),
            Ladder::Raise => m.transpose(),
        }
    }
}

/// Coefficient times an ordered product of ladder operators; the first
/// factor is leftmost.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderWord {
    pub coefficient: f64,
    pub factors: Vec<(Mode, Ladder)>,
}

impl LadderWord {
    pub fn identity() -> LadderWord {
        LadderWord {
            coefficient: 1.0,
            factors: Vec::new(),
        }
    }

    /// `self · other`.
    pub fn then(&self, other: &LadderWord) -> LadderWord {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        LadderWord {
            coefficient: self.coefficient * other.coefficient,
            factors,
        }
    }

    pub fn evaluate(&self, ladders: &LadderSet) -> DMatrix<f64> {
        let d = ladders.basis.dim();
        let mut m = DMatrix::identity(d, d) * self.coefficient;
        for &(mode, ladder) in &self.factors {
            m *= ladders.matrix(mode, ladder);
        }
        m
    }

    /// Highest shell visited when the word acts on `state`, right to left;
    /// `None` if a lowering annihilates it on the way.
    pub fn max_shell_on(&self, state: FockState) -> Option<usize> {
        let mut s = state;
        let mut top = s.shell();
        for &(mode, ladder) in self.factors.iter().rev() {
            let (n1, n2) = (s.n1 as isize, s.n2 as isize);
            let step = if ladder == Ladder::Raise { 1 } else { -1 };
            let (n1, n2) = match mode {
                Mode::One => (n1 + step, n2),
                Mode::Two => (n1, n2 + step),
            };
            if n1 < 0 || n2 < 0 {
                return None;
            }
            s = FockState::new(n1 as usize, n2 as usize);
            top = top.max(s.shell());
        }
        Some(top)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn repeated(mode: Mode, ladder: Ladder, n: usize) -> impl Iterator<Item = (Mode, Ladder)> {
    std::iter::repeat_n((mode, ladder), n)
}

/// `S†_μ = (a1†)^{n1} (a2†)^{n2} / √(n1! n2!)`.
pub fn state_builder(mu: FockState) -> LadderWord {
    LadderWord {
        coefficient: 1.0 / (factorial(mu.n1) * factorial(mu.n2)).sqrt(),
        factors: repeated(Mode::One, Ladder::Raise, mu.n1)
            .chain(repeated(Mode::Two, Ladder::Raise, mu.n2))
            .collect(),
    }
}

/// `S_ν = (a1)^{n1} (a2)^{n2} / √(n1! n2!)`, the adjoint of [`state_builder`].
pub fn state_annihilator(nu: FockState) -> LadderWord {
    LadderWord {
        coefficient: 1.0 / (factorial(nu.n1) * factorial(nu.n2)).sqrt(),
        factors: repeated(Mode::One, Ladder::Lower, nu.n1)
            .chain(repeated(Mode::Two, Ladder::Lower, nu.n2))
            .collect(),
    }
}

/// Diagonal `sinc(π(m − n))` with `m` the occupation of `mode`.
pub fn sinc_projector(basis: &FockBasis, mode: Mode, n: usize) -> OperatorMatrix {
    OperatorMatrix::diagonal(basis, |s| {
        sinc_pi(s.occupation(mode) as f64 - n as f64)
    })
}

/// `P_{n1 n2} = P_{n1}^{(1)} P_{n2}^{(2)}`.
pub fn shell_projector(basis: &FockBasis, n1: usize, n2: usize) -> OperatorMatrix {
    let p1 = sinc_projector(basis, Mode::One, n1);
    let p2 = sinc_projector(basis, Mode::Two, n2);
    OperatorMatrix::from_parts(basis.clone(), p1.entries() * p2.entries(), MatrixKind::Symmetric)
}

/// `φ_μ φ_ν* = S†_μ S_ν P_ν`.
pub fn transition_operator(basis: &FockBasis, mu: FockState, nu: FockState) -> Result<OperatorMatrix> {
    transition_operator_with(&LadderSet::new(basis), mu, nu)
}

pub fn transition_operator_with(
    ladders: &LadderSet,
    mu: FockState,
    nu: FockState,
) -> Result<OperatorMatrix> {
    let basis = &ladders.basis;
    for s in [mu, nu] {
        if s.shell() > basis.max_shell() {
            return Err(Error::Truncation {
                needed: s.shell(),
                max_shell: basis.max_shell(),
            });
        }
    }
    let word = state_builder(mu).then(&state_annihilator(nu));
    let top = word.max_shell_on(nu).expect("S_ν reaches the vacuum from ν");
    assert!(top <= mu.shell().max(nu.shell()));
    if top > basis.max_shell() {
        return Err(Error::Truncation {
            needed: top,
            max_shell: basis.max_shell(),
        });
    }
    let m = word.evaluate(ladders) * shell_projector(basis, nu.n1, nu.n2).entries();
    Ok(OperatorMatrix::from_parts(basis.clone(), m, MatrixKind::General))
}

/// Discrete U(1) average `(1/M) Σ_k e^{−inx_k} e^{i m x_k}` on `M`
/// equispaced points, compared with the sinc projector. Returns the largest
/// deviation (imaginary parts included).
pub fn haar_projector_check(basis: &FockBasis, mode: Mode, n: usize, points: usize) -> Result<f64> {
    let max_occ = basis.max_shell();
    if points <= max_occ {
        return Err(Error::Insufficient(format!(
            "{points} quadrature points for occupations up to {max_occ}; need more than {max_occ}"
        )));
    }
    let sinc = sinc_projector(basis, mode, n);
    let m_pts = points as f64;
    let mut dev: f64 = 0.0;
    for (i, s) in basis.states().iter().enumerate() {
        let k = s.occupation(mode) as f64 - n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for p in 0..points {
            let x = 2.0 * std::f64::consts::PI * p as f64 / m_pts;
            re += (k * x).cos();
            im += (k * x).sin();
        }
        dev = dev
            .max((re / m_pts - sinc.get(i, i)).abs())
            .max((im / m_pts).abs());
    }
    Ok(dev)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub identity: &'static str,
    pub name: String,
    pub max_abs_deviation: f64,
    pub tolerance: f64,
    /// Number of individual cases folded into this line.
    pub cases: usize,
}

impl IdentityCheck {
    pub fn pass(&self) -> bool {
        self.max_abs_deviation <= self.tolerance
    }
}

pub const IDENTITY_HEADER: &str = "identity,name,max_abs_deviation,pass";

pub fn write_identity_report<W: Write>(checks: &[IdentityCheck], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{IDENTITY_HEADER}")?;
    for c in checks {
        writeln!(w, "{},{},{},{}", c.identity, c.name, num(c.max_abs_deviation), c.pass())?;
    }
    Ok(())
}

fn dev(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

fn elementary(d: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    m[(i, j)] = 1.0;
    m
}

/// Non-zero entries keyed by row.
type Sparse = Vec<(usize, usize, f64)>;

fn sparse(m: &DMatrix<f64>) -> Sparse {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != 0.0 {
                out.push((i, j, m[(i, j)]));
            }
        }
    }
    out
}

/// Every projector and transition-operator identity on `ladders`' basis.
pub fn projector_identities(ladders: &LadderSet) -> Result<Vec<IdentityCheck>> {
    let basis = ladders.basis();
    let d = basis.dim();
    let ms = basis.max_shell();
    let eye = DMatrix::<f64>::identity(d, d);
    let mut checks = Vec::new();
    let mut push = |identity, name: &str, deviation: f64, tolerance, cases| {
        checks.push(IdentityCheck {
            identity,
            name: name.to_string(),
            max_abs_deviation: deviation,
            tolerance,
            cases,
        })
    };

    for mode in [Mode::One, Mode::Two] {
        let tag = match mode {
            Mode::One => "mode1",
            Mode::Two => "mode2",
        };
        let ps: Vec<DMatrix<f64>> = (0..=ms)
            .map(|n| sinc_projector(basis, mode, n).into_entries())
            .collect();
        let (mut exact, mut idem, mut sym, mut orth) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        let mut sum = DMatrix::zeros(d, d);
        for (n, p) in ps.iter().enumerate() {
            for (i, s) in basis.states().iter().enumerate() {
                let want = if s.occupation(mode) == n { 1.0 } else { 0.0 };
                exact = exact.max((p[(i, i)] - want).abs());
            }
            idem = idem.max(dev(&(p * p), p));
            sym = sym.max(dev(&(p.transpose() * p), p));
            for q in &ps[n + 1..] {
                orth = orth.max((p * q).amax());
            }
            sum += p;
        }
        let cases = ps.len();
        push("sinc_projector", &format!("{tag}_exact_0_1_diagonal"), exact, 0.0, cases);
        push("sinc_projector", &format!("{tag}_idempotent"), idem, PROJECTOR_TOLERANCE, cases);
        push("sinc_projector", &format!("{tag}_self_adjoint"), sym, PROJECTOR_TOLERANCE, cases);
        push("sinc_projector", &format!("{tag}_orthogonal"), orth, PROJECTOR_TOLERANCE, cases * (cases - 1) / 2);
        push("sinc_projector", &format!("{tag}_complete"), dev(&sum, &eye), PROJECTOR_TOLERANCE, cases);

        let mut haar: f64 = 0.0;
        for n in 0..=ms {
            haar = haar.max(haar_projector_check(basis, mode, n, ms + 2)?);
        }
        push("haar_projector", &format!("{tag}_matches_sinc"), haar, PROJECTOR_TOLERANCE, ms + 1);
    }

    let (mut elem, mut trace) = (0.0f64, 0.0f64);
    let mut sum = DMatrix::zeros(d, d);
    for (i, s) in basis.states().iter().enumerate() {
        let p = shell_projector(basis, s.n1, s.n2).into_entries();
        elem = elem.max(dev(&p, &elementary(d, i, i)));
        trace = trace.max((p.trace() - 1.0).abs());
        sum += p;
    }
    push("shell_projector", "elementary_diagonal", elem, PROJECTOR_TOLERANCE, d);
    push("shell_projector", "unit_trace", trace, PROJECTOR_TOLERANCE, d);
    push("shell_projector", "complete", dev(&sum, &eye), PROJECTOR_TOLERANCE, d);

    let mut vacuum = DVector::zeros(d);
    vacuum[0] = 1.0;
    let mut built: f64 = 0.0;
    for (i, &s) in basis.states().iter().enumerate() {
        let v = state_builder(s).evaluate(ladders) * &vacuum;
        let mut want = DVector::zeros(d);
        want[i] = 1.0;
        built = built.max((v - want).amax());
    }
    push("state_builder", "vacuum_to_basis_state", built, TRANSITION_TOLERANCE, d);

    let mut ops: Vec<Sparse> = Vec::with_capacity(d * d);
    let mut elem: f64 = 0.0;
    for (i, &mu) in basis.states().iter().enumerate() {
        for (j, &nu) in basis.states().iter().enumerate() {
            let t = transition_operator_with(ladders, mu, nu)?.into_entries();
            elem = elem.max(dev(&t, &elementary(d, i, j)));
            ops.push(sparse(&t));
        }
    }
    push("transition_operator", "elementary_matrix", elem, TRANSITION_TOLERANCE, d * d);

    // (φ_μφ_ν*)(φ_σφ_τ*) = δ_νσ φ_μφ_τ*, on sparse products.
    let mut comp: f64 = 0.0;
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    for mu in 0..d {
        for nu in 0..d {
            let a = &ops[mu * d + nu];
            for sigma in 0..d {
                for tau in 0..d {
                    let b = &ops[sigma * d + tau];
                    acc.clear();
                    for &(r, k, x) in a {
                        for &(k2, c, y) in b {
                            if k == k2 {
                                *acc.entry((r, c)).or_insert(0.0) += x * y;
                            }
                        }
                    }
                    let want = |r: usize, c: usize| {
                        if nu == sigma && r == mu && c == tau {
                            1.0
                        } else {
                            0.0
                        }
                    };
                    for (&(r, c), &v) in &acc {
                        comp = comp.max((v - want(r, c)).abs());
                    }
                    if nu == sigma && !acc.contains_key(&(mu, tau)) {
                        comp = comp.max(1.0);
                    }
                }
            }
        }
    }
    push("transition_operator", "composition", comp, TRANSITION_TOLERANCE, d.pow(4));

    let hs = hs_cross_check(ladders)?;
    push("transition_operator", "integrable_hamiltonian", hs, TRANSITION_TOLERANCE, 1);

    Ok(checks)
}

/// `H_s` assembled as `Σ_δ E_δ Σ_{μν} c_μδ c_νδ φ_μφ_ν*` against the
/// outer-product construction, for λ = 0.1 on the ladder set's basis with
/// the P-space two shells below the top.
pub fn hs_cross_check(ladders: &LadderSet) -> Result<f64> {
    let basis = ladders.basis();
    let kp = basis.max_shell().saturating_sub(2);
    let h = hamiltonian(&ModelParameters::new(0.1, basis.max_shell())?);
    let ms = build_model_space(&h, kp, 0.2)?;
    if ms.dim_s() == 0 {
        return Err(Error::Empty("S-space for the H_s cross-check"));
    }
    let d = basis.dim();
    let dp = ms.dim_p();
    let mut assembled = DMatrix::zeros(d, d);
    let mut coeff = DMatrix::zeros(dp, dp);
    for &delta in ms.s_indices() {
        let v = ms.ritz().vector(delta);
        coeff.ger(ms.ritz().energy(delta), &v, &v, 1.0);
    }
    for mu in 0..dp {
        for nu in 0..dp {
            if coeff[(mu, nu)] != 0.0 {
                let t = transition_operator_with(ladders, basis.state(mu), basis.state(nu))?;
                assembled += t.entries() * coeff[(mu, nu)];
            }
        }
    }
    Ok(dev(&assembled, integrable_hamiltonian(&ms).entries()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_exact_at_integers() {
        assert_eq!(sinc_pi(0.0), 1.0);
        for k in 1..40 {
            assert_eq!(sinc_pi(k as f64), 0.0);
            assert_eq!(sinc_pi(-(k as f64)), 0.0);
        }
        assert!((sinc_pi(0.5) - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!((sinc_pi(-1.5) + 2.0 / (3.0 * std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn state_builder_words() {
        assert_eq!(state_builder(FockState::VACUUM), LadderWord::identity());
        let b = FockBasis::new(4);
        let ladders = LadderSet::new(&b);
        let m = state_builder(FockState::new(2, 1)).evaluate(&ladders);
        let target = b.index_of(FockState::new(2, 1)).unwrap();
        for i in 0..b.dim() {
            let want = if i == target { 1.0 } else { 0.0 };
            assert!((m[(i, 0)] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sinc_projector_entries() {
        let b = FockBasis::new(5);
        let p = sinc_projector(&b, Mode::One, 0);
        for (i, s) in b.states().iter().enumerate() {
            assert_eq!(p.get(i, i), if s.n1 == 0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn transition_example() {
        let b = FockBasis::new(3);
        let t = transition_operator(&b, FockState::new(1, 0), FockState::new(0, 1)).unwrap();
        let i = b.index_of(FockState::new(1, 0)).unwrap();
        let j = b.index_of(FockState::new(0, 1)).unwrap();
        assert!((t.entries() - elementary(b.dim(), i, j)).amax() < 1e-12);
        assert!(matches!(
            transition_operator(&b, FockState::new(4, 0), FockState::VACUUM),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn haar_needs_points() {
        let b = FockBasis::new(6);
        assert!(haar_projector_check(&b, Mode::One, 0, 1).is_err());
        assert!(haar_projector_check(&b, Mode::Two, 3, 8).unwrap() <= 1e-12);
    }

    #[test]
    fn all_identities_hold_small() {
        let checks = projector_identities(&LadderSet::new(&FockBasis::new(3))).unwrap();
        for c in &checks {
            assert!(c.pass(), "{c:?}");
        }
    }

    #[test]
    fn corruption_is_detected() {
        let b = FockBasis::new(3);
        let checks = projector_identities(&LadderSet::corrupted(&b, 1e-3)).unwrap();
        assert!(checks.iter().any(|c| !c.pass()));
    }
}
