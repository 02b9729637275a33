//! Chaoticity diagnostics: strength functions, spreading widths, the
//! chaoticity parameter κ = Γ/D₀, the fragmentation ΔA of an operator, and
//! the projection onto the shell (model) space.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::basis::{FockBasis, FockState};
use crate::eigen::{diagonalize, Spectrum};
use crate::error::{Error, Result};
use crate::format::{num, opt_num};
use crate::operators::{hamiltonian, number_operators, MatrixKind, ModelParameters, OperatorMatrix};

/// Slack on the 0.5 probability threshold of a spreading window.
pub const WINDOW_TOLERANCE: f64 = 1e-12;

/// Tolerance on `|ψ|² = 1` for state-based diagnostics.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Classical dissociation energy of the scaled Hénon-Heiles potential.
pub const SCALED_DISSOCIATION: f64 = 1.0 / 6.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StrengthSource {
    State(FockState),
    /// Average over all basis states of a shell.
    Shell(usize),
}

/// Distribution `P(E_i)` of a basis state (or shell average) over the
/// eigenstates, ordered by ascending energy.
#[derive(Clone, Debug)]
pub struct StrengthFunction {
    pub source: StrengthSource,
    pub points: Vec<(f64, f64)>,
}

impl StrengthFunction {
    pub fn total(&self) -> f64 {
        self.points.iter().map(|p| p.1).sum()
    }

    /// Mean energy `Σ P E`.
    pub fn centroid(&self) -> f64 {
        self.points.iter().map(|&(e, p)| e * p).sum()
    }
}

pub fn strength_function(spectrum: &Spectrum, alpha: FockState) -> Result<StrengthFunction> {
    let row = spectrum.basis().require_index(alpha)?;
    let points = (0..spectrum.dim())
        .map(|i| (spectrum.energy(i), spectrum.coefficient(i, row).powi(2)))
        .collect();
    Ok(StrengthFunction {
        source: StrengthSource::State(alpha),
        points,
    })
}

/// `P̄(E_i) = Σ_{α ∈ shell} |c_i^α|² / (N + 1)`. Unlike per-state widths, the
/// width of this distribution does not depend on the choice of basis inside
/// the shell.
pub fn shell_strength_function(spectrum: &Spectrum, shell: usize) -> Result<StrengthFunction> {
    let basis = spectrum.basis();
    if shell > basis.max_shell() {
        return Err(Error::InvalidParameter(format!(
            "shell {shell} outside basis (max {})",
            basis.max_shell()
        )));
    }
    let range = basis.shell_range(shell);
    let weight = 1.0 / range.len() as f64;
    let vectors = spectrum.vectors();
    let points = (0..spectrum.dim())
        .map(|i| {
            let p: f64 = range.clone().map(|a| vectors[(a, i)].powi(2)).sum();
            (spectrum.energy(i), p * weight)
        })
        .collect();
    Ok(StrengthFunction {
        source: StrengthSource::Shell(shell),
        points,
    })
}

/// Minimal width `E_r − E_l` of a contiguous energy window holding at least
/// half of the probability.
pub fn spreading_width(sf: &StrengthFunction) -> Result<f64> {
    min_half_window(&sf.points)
}

/// Two-pointer scan over `(energy, probability)` pairs sorted by energy.
pub fn min_half_window(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty("strength function"));
    }
    let target = 0.5 - WINDOW_TOLERANCE;
    let mut prefix = Vec::with_capacity(points.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for p in points {
        acc += p.1;
        prefix.push(acc);
    }

    let mut best = f64::INFINITY;
    let mut left = 0;
    for right in 0..points.len() {
        while left < right && prefix[right + 1] - prefix[left + 1] >= target {
            left += 1;
        }
        if prefix[right + 1] - prefix[left] >= target {
            best = best.min(points[right].0 - points[left].0);
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Insufficient(format!(
            "total probability {acc} never reaches 0.5"
        )))
    }
}

/// κ = Γ / D₀.
pub fn kappa(gamma_spr: f64, d0: f64) -> Result<f64> {
    if d0 <= 0.0 || !d0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "level spacing D0 must be positive, got {d0}"
        )));
    }
    Ok(gamma_spr / d0)
}

/// Arithmetic mean of per-basis-state values over the states of one shell.
pub fn shell_average(values: &[f64], basis: &FockBasis, shell: usize) -> Result<f64> {
    if values.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: values.len(),
        });
    }
    if shell > basis.max_shell() {
        return Err(Error::InvalidParameter(format!(
            "shell {shell} outside basis (max {})",
            basis.max_shell()
        )));
    }
    let range = basis.shell_range(shell);
    let n = range.len() as f64;
    Ok(values[range].iter().sum::<f64>() / n)
}

/// Root-mean-square deviation `ΔA = ‖(A − ⟨A⟩) ψ‖` of an operator in a real
/// normalized state.
pub fn ms_deviation(op: &OperatorMatrix, state: &DVector<f64>) -> Result<f64> {
    match op.kind() {
        MatrixKind::Symmetric => ms_deviation_parts(op.entries(), None, state),
        MatrixKind::ImaginaryAntisymmetric => {
            let zero = DMatrix::zeros(op.dim(), op.dim());
            ms_deviation_parts(&zero, Some(op.entries()), state)
        }
        MatrixKind::General => Err(Error::InvalidParameter(
            "ΔA needs a Hermitian operator".into(),
        )),
    }
}

/// ΔA for the Hermitian operator `R + i L` (`R` symmetric, `L`
/// antisymmetric) in a real state ψ. Then `⟨A⟩ = ψᵀRψ` and
/// `‖(A − ⟨A⟩)ψ‖² = ‖(R − ⟨A⟩)ψ‖² + ‖Lψ‖²`.
pub fn ms_deviation_parts(
    real: &DMatrix<f64>,
    imag: Option<&DMatrix<f64>>,
    state: &DVector<f64>,
) -> Result<f64> {
    if real.nrows() != state.len() {
        return Err(Error::DimensionMismatch {
            expected: real.nrows(),
            found: state.len(),
        });
    }
    let norm_sq = state.norm_squared();
    if (norm_sq - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(norm_sq));
    }
    let applied = real * state;
    let mean = state.dot(&applied);
    let mut var = (applied - state * mean).norm_squared();
    if let Some(l) = imag {
        var += (l * state).norm_squared();
    }
    Ok(var.sqrt())
}

/// `ΔA / gap`; below one the operator is an approximate integral in that state.
pub fn fragmentation_ratio(delta_a: f64, eigen_gap: f64) -> Result<f64> {
    if eigen_gap <= 0.0 || !eigen_gap.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue gap must be positive, got {eigen_gap}"
        )));
    }
    Ok(delta_a / eigen_gap)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub ps: f64,
    /// `2 (1 − ps)`; equals 1 exactly at the `ps = 0.5` existence boundary.
    pub pr: f64,
}

impl Projection {
    fn from_ps(ps: f64) -> Self {
        let ps = ps.clamp(0.0, 1.0);
        Projection {
            ps,
            pr: 2.0 * (1.0 - ps),
        }
    }
}

/// Weight of a state on the basis indices in `indices`.
pub fn hose_taylor_projection(state: &DVector<f64>, indices: &[usize]) -> Result<Projection> {
    if indices.is_empty() {
        return Err(Error::Empty("model-space index set"));
    }
    let mut ps = 0.0;
    for &i in indices {
        if i >= state.len() {
            return Err(Error::InvalidParameter(format!(
                "index {i} outside state of length {}",
                state.len()
            )));
        }
        ps += state[i] * state[i];
    }
    Ok(Projection::from_ps(ps))
}

/// Shell carrying the largest total probability of `state` (lowest shell on
/// ties) together with that probability.
pub fn dominant_shell(basis: &FockBasis, state: &DVector<f64>) -> (usize, Projection) {
    let mut best = (0, f64::NEG_INFINITY);
    for shell in 0..=basis.max_shell() {
        let p: f64 = basis.shell_range(shell).map(|i| state[i] * state[i]).sum();
        if p > best.1 {
            best = (shell, p);
        }
    }
    (best.0, Projection::from_ps(best.1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Number of uniform energy bins on `[0, eps_max]`.
    pub bins: usize,
    pub eps_max: f64,
    /// Unperturbed level spacing.
    pub d0: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            bins: 20,
            eps_max: SCALED_DISSOCIATION,
            d0: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Shell(usize),
    Bin(usize),
}

/// One output line of a sweep: either a shell average or an energy bin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub lambda: f64,
    pub kind: RowKind,
    /// Scaled energy `λ² E` (shell centroid or bin centre).
    pub epsilon: f64,
    pub gamma_spr: Option<f64>,
    pub kappa: Option<f64>,
    pub delta_n_ratio: Option<f64>,
    pub ps: Option<f64>,
    pub pr: Option<f64>,
}

pub const METRICS_HEADER: &str = "epsilon,shell,kappa,delta_N_ratio,pr,ps,gamma_spr";

/// Per-eigenstate diagnostics used by the sweep.
#[derive(Clone, Copy, Debug)]
pub struct StateMetrics {
    pub energy: f64,
    pub delta_n: f64,
    pub shell: usize,
    pub projection: Projection,
}

pub fn state_metrics(spectrum: &Spectrum) -> Result<Vec<StateMetrics>> {
    let (_, _, n_op) = number_operators(spectrum.basis());
    (0..spectrum.dim())
        .map(|i| {
            let psi = spectrum.vector(i).into_owned();
            let delta_n = ms_deviation(&n_op, &psi)?;
            let (shell, projection) = dominant_shell(spectrum.basis(), &psi);
            Ok(StateMetrics {
                energy: spectrum.energy(i),
                delta_n,
                shell,
                projection,
            })
        })
        .collect()
}

/// Sweep rows for one Hamiltonian: shell rows first (ascending
/// shell), then non-empty energy bins (ascending ε).
pub fn metrics_for(
    params: &ModelParameters,
    h: &OperatorMatrix,
    spectrum: &Spectrum,
    opts: &SweepOptions,
) -> Result<Vec<MetricsRow>> {
    if opts.bins == 0 || opts.eps_max <= 0.0 {
        return Err(Error::InvalidParameter(
            "sweep needs at least one bin and a positive eps_max".into(),
        ));
    }
    let lambda = params.lambda;
    let scale = lambda * lambda;
    let basis = spectrum.basis();
    let states = state_metrics(spectrum)?;
    let gap = 1.0;

    let mut rows = Vec::new();
    for shell in 0..=basis.max_shell() {
        let sf = shell_strength_function(spectrum, shell)?;
        let gamma = spreading_width(&sf)?;
        let range = basis.shell_range(shell);
        let centroid = range.clone().map(|a| h.get(a, a)).sum::<f64>() / range.len() as f64;
        let members: Vec<&StateMetrics> = states.iter().filter(|s| s.shell == shell).collect();
        let (dn, ps) = averages(&members, gap)?;
        rows.push(MetricsRow {
            lambda,
            kind: RowKind::Shell(shell),
            epsilon: scale * centroid,
            gamma_spr: Some(gamma),
            kappa: Some(kappa(gamma, opts.d0)?),
            delta_n_ratio: dn,
            ps,
            pr: ps.map(|p| 2.0 * (1.0 - p)),
        });
    }

    let width = opts.eps_max / opts.bins as f64;
    for bin in 0..opts.bins {
        let lo = bin as f64 * width;
        let hi = lo + width;
        let last = bin + 1 == opts.bins;
        let members: Vec<&StateMetrics> = states
            .iter()
            .filter(|s| {
                let eps = scale * s.energy;
                eps >= lo && (eps < hi || (last && eps <= opts.eps_max))
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let (dn, ps) = averages(&members, gap)?;
        rows.push(MetricsRow {
            lambda,
            kind: RowKind::Bin(bin),
            epsilon: lo + 0.5 * width,
            gamma_spr: None,
            kappa: None,
            delta_n_ratio: dn,
            ps,
            pr: ps.map(|p| 2.0 * (1.0 - p)),
        });
    }
    Ok(rows)
}

fn averages(members: &[&StateMetrics], gap: f64) -> Result<(Option<f64>, Option<f64>)> {
    if members.is_empty() {
        return Ok((None, None));
    }
    let n = members.len() as f64;
    let mut dn = 0.0;
    let mut ps = 0.0;
    for m in members {
        dn += fragmentation_ratio(m.delta_n, gap)?;
        ps += m.projection.ps;
    }
    Ok((Some(dn / n), Some(ps / n)))
}

/// Runs [`metrics_for`] over a parameter grid, grid order preserved.
pub fn sweep_metrics(grid: &[ModelParameters], opts: &SweepOptions) -> Result<Vec<MetricsRow>> {
    if grid.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    let run = |p: &ModelParameters| -> Result<Vec<MetricsRow>> {
        let h = hamiltonian(p);
        let spectrum = diagonalize(&h)?;
        metrics_for(p, &h, &spectrum, opts)
    };
    #[cfg(feature = "parallel")]
    let per_point: Vec<Result<Vec<MetricsRow>>> = {
        use rayon::prelude::*;
        grid.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_point: Vec<Result<Vec<MetricsRow>>> = grid.iter().map(run).collect();

    let mut rows = Vec::new();
    for r in per_point {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        let shell = match r.kind {
            RowKind::Shell(s) => s.to_string(),
            RowKind::Bin(_) => String::new(),
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            num(r.epsilon),
            shell,
            opt_num(r.kappa),
            opt_num(r.delta_n_ratio),
            opt_num(r.pr),
            opt_num(r.ps),
            opt_num(r.gamma_spr)
        )?;
    }
    Ok(())
}

/// First point where a series, ordered by ε, reaches `threshold`; linear
/// interpolation between the bracketing points.
pub fn first_crossing(series: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let k = series.iter().position(|&(_, v)| v >= threshold)?;
    if k == 0 {
        return Some(series[0].0);
    }
    let (x0, y0) = series[k - 1];
    let (x1, y1) = series[k];
    Some(x0 + (threshold - y0) * (x1 - x0) / (y1 - y0))
}

/// Threshold crossings of the three destruction criteria.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossings {
    pub kappa: Option<f64>,
    pub delta_n: Option<f64>,
    pub pr: Option<f64>,
}

impl Crossings {
    /// Crossings of κ = 1 (shell rows), ΔN/gap = 1 and Pr = 1 (bin rows)
    /// for the rows of a single λ.
    pub fn from_rows(rows: &[MetricsRow]) -> Crossings {
        let shell_series: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| matches!(r.kind, RowKind::Shell(_)))
            .filter_map(|r| Some((r.epsilon, r.kappa?)))
            .collect();
        let bins: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| matches!(r.kind, RowKind::Bin(_)))
            .collect();
        let dn: Vec<(f64, f64)> = bins
            .iter()
            .filter_map(|r| Some((r.epsilon, r.delta_n_ratio?)))
            .collect();
        let pr: Vec<(f64, f64)> = bins.iter().filter_map(|r| Some((r.epsilon, r.pr?))).collect();
        Crossings {
            kappa: first_crossing(&shell_series, 1.0),
            delta_n: first_crossing(&dn, 1.0),
            pr: first_crossing(&pr, 1.0),
        }
    }

    pub fn all(&self) -> Option<[f64; 3]> {
        Some([self.kappa?, self.delta_n?, self.pr?])
    }

    /// Largest pairwise `|a − b| / max(a, b)`.
    pub fn max_pairwise_spread(&self) -> Option<f64> {
        let v = self.all()?;
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                worst = worst.max((v[i] - v[j]).abs() / v[i].max(v[j]));
            }
        }
        Some(worst)
    }
}
