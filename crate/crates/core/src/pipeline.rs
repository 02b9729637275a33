//! End-to-end runs behind the command-line subcommands. Every command
//! writes its CSV files and the resolved configuration into `output_dir`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::basis::FockBasis;
use crate::config::{RunConfig, RESOLVED_CONFIG_FILE};
use crate::eigen::{diagonalize, Spectrum};
use crate::error::{Error, Result};
use crate::format::{num, opt_num};
use crate::integrals::{
    build_model_space, commutation_report, delta_jprime_study, integrable_hamiltonian,
    norm_bound_check, ritz_unitary, spectrum_preserved, transform_integral, write_study_csv,
    DeltaJStudy, IntegralKind, StudyOptions, COMMUTATOR_TOLERANCE, ORTHOGONALITY_TOLERANCE,
};
use crate::metrics::{metrics_for, write_metrics_csv, Crossings, MetricsRow, SweepOptions};
use crate::operators::{hamiltonian, ModelParameters, OperatorMatrix};
use crate::projectors::{projector_identities, write_identity_report, IdentityCheck, LadderSet};
use crate::spacing::{
    classify_symmetry, window_statistics, write_histogram_csv, write_spacing_csv,
    BlockStatistics, SymmetryLabel, DEFAULT_DEGENERACY_TOLERANCE,
};

/// Tolerance for `J'` keeping the spectrum of `J`.
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_with(
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<PathBuf> {
    let mut w = create(&path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn prepare(config: &RunConfig) -> Result<PathBuf> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(RESOLVED_CONFIG_FILE);
    std::fs::write(&path, config.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Hamiltonian, spectrum and symmetry labels shared by the stages.
pub struct Solved {
    pub params: ModelParameters,
    pub h: OperatorMatrix,
    pub spectrum: Spectrum,
    pub labels: Vec<SymmetryLabel>,
}

impl Solved {
    pub fn new(config: &RunConfig) -> Result<Solved> {
        let params = ModelParameters::new(config.lambda, config.max_shell)?;
        let h = hamiltonian(&params);
        let spectrum = diagonalize(&h)?;
        let labels = classify_symmetry(&spectrum, DEFAULT_DEGENERACY_TOLERANCE);
        Ok(Solved {
            params,
            h,
            spectrum,
            labels,
        })
    }
}

pub const SPECTRUM_HEADER: &str = "index,energy,symmetry_block,parity";

fn solve_stage(config: &RunConfig, solved: &Solved) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    let mut files = vec![write_with(dir.join("spectrum.csv"), |w| {
        writeln!(w, "{SPECTRUM_HEADER}")?;
        for (i, (e, l)) in solved.spectrum.energies().iter().zip(&solved.labels).enumerate() {
            let parity = if l.parity > 0.0 { 1 } else { -1 };
            writeln!(w, "{i},{},{},{parity}", num(*e), l.block)?;
        }
        Ok(())
    })?];
    if config.dump_coefficients {
        files.push(write_with(dir.join("coefficients.csv"), |w| {
            solved.spectrum.write_coefficients_csv(w)
        })?);
    }
    Ok(files)
}

pub fn cmd_solve(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let cfg = prepare(config)?;
    let mut files = solve_stage(config, &Solved::new(config)?)?;
    files.push(cfg);
    Ok(files)
}

fn sweep_options(config: &RunConfig) -> SweepOptions {
    SweepOptions {
        bins: config.bins,
        ..SweepOptions::default()
    }
}

fn metrics_stage(config: &RunConfig, solved: &Solved) -> Result<(Vec<MetricsRow>, PathBuf)> {
    let rows = metrics_for(&solved.params, &solved.h, &solved.spectrum, &sweep_options(config))?;
    let path = write_with(config.output_dir.join("metrics.csv"), |w| {
        write_metrics_csv(&rows, w)
    })?;
    Ok((rows, path))
}

pub fn cmd_metrics(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let cfg = prepare(config)?;
    let (_, path) = metrics_stage(config, &Solved::new(config)?)?;
    Ok(vec![path, cfg])
}

fn failures(checks: &[IdentityCheck]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| !c.pass())
        .map(|c| format!("{}/{} ({:e})", c.identity, c.name, c.max_abs_deviation))
        .collect()
}

/// U orthogonality, `[H_s, J']`, mutual commutation, spectrum preservation
/// and the norm bound for every model-space size.
pub fn integral_identities(config: &RunConfig, h: &OperatorMatrix) -> Result<Vec<IdentityCheck>> {
    let mut checks = Vec::new();
    for &kp in &config.p_sizes {
        let ms = build_model_space(h, kp, config.epsilon)?;
        let u = ritz_unitary(&ms)?;
        let tag = |name: &str| format!("kp={kp}_{name}");
        checks.push(IdentityCheck {
            identity: "unitary",
            name: tag("orthogonality"),
            max_abs_deviation: u.orthogonality_error(),
            tolerance: ORTHOGONALITY_TOLERANCE,
            cases: 1,
        });
        let js: Vec<_> = config
            .integrals
            .iter()
            .map(|&k| transform_integral(&u, k))
            .collect();
        let hs = integrable_hamiltonian(&ms);
        let report = commutation_report(&hs, &js);
        for (kind, dev) in &report.with_hs {
            checks.push(IdentityCheck {
                identity: "commutator_hs",
                name: tag(&kind.to_string()),
                max_abs_deviation: *dev,
                tolerance: COMMUTATOR_TOLERANCE,
                cases: 1,
            });
        }
        for (a, b, dev) in &report.mutual {
            checks.push(IdentityCheck {
                identity: "commutator_mutual",
                name: tag(&format!("{a}_{b}")),
                max_abs_deviation: *dev,
                tolerance: COMMUTATOR_TOLERANCE,
                cases: 1,
            });
        }
        for j in &js {
            let dev = spectrum_preserved(j, h.basis(), f64::INFINITY)?;
            checks.push(IdentityCheck {
                identity: "spectrum_preserved",
                name: tag(&j.kind.to_string()),
                max_abs_deviation: dev,
                tolerance: SPECTRUM_TOLERANCE,
                cases: 1,
            });
        }
        // No S-space, no bound to check: the study records the empty cell.
        if ms.dim_s() > 0 {
            let r = norm_bound_check(h, &ms, config.norm_trials, config.seed)?;
            checks.push(IdentityCheck {
                identity: "norm_bound",
                name: tag("residual"),
                max_abs_deviation: r.max_norm,
                tolerance: r.bound,
                cases: r.trials,
            });
        }
    }
    Ok(checks)
}

fn study_options(config: &RunConfig) -> StudyOptions {
    StudyOptions {
        p_sizes: config.p_sizes.clone(),
        integrals: config.integrals.clone(),
        epsilon: config.epsilon,
    }
}

fn integrals_stage(
    config: &RunConfig,
    solved: &Solved,
) -> Result<(DeltaJStudy, Vec<IdentityCheck>, Vec<PathBuf>)> {
    config.validate_model_spaces()?;
    let study = delta_jprime_study(&solved.h, &study_options(config))?;
    let checks = integral_identities(config, &solved.h)?;
    let dir = &config.output_dir;
    let files = vec![
        write_with(dir.join("integrals.csv"), |w| write_study_csv(&study, w))?,
        write_with(dir.join("integral_identities.csv"), |w| {
            write_identity_report(&checks, w)
        })?,
    ];
    Ok((study, checks, files))
}

pub fn cmd_integrals(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let cfg = prepare(config)?;
    let (_, checks, mut files) = integrals_stage(config, &Solved::new(config)?)?;
    files.push(cfg);
    let failed = failures(&checks);
    if !failed.is_empty() {
        return Err(Error::IdentityFailure(failed.join("; ")));
    }
    Ok(files)
}

pub struct SpacingResult {
    pub regular: Vec<BlockStatistics>,
    pub chaotic: Vec<BlockStatistics>,
}

fn spacing_stage(config: &RunConfig, solved: &Solved) -> Result<(SpacingResult, Vec<PathBuf>)> {
    let stats = |(lo, hi): (f64, f64)| {
        window_statistics(
            &solved.spectrum,
            &solved.labels,
            config.lambda,
            lo,
            hi,
            config.fit_degree,
        )
    };
    let result = SpacingResult {
        regular: stats(config.regular_window),
        chaotic: stats(config.chaotic_window),
    };
    let dir = &config.output_dir;
    let mut files = Vec::new();
    for (name, s) in [("regular", &result.regular), ("chaotic", &result.chaotic)] {
        files.push(write_with(dir.join(format!("spacing_{name}.csv")), |w| {
            write_spacing_csv(s, w)
        })?);
        files.push(write_with(dir.join(format!("histogram_{name}.csv")), |w| {
            write_histogram_csv(s, w)
        })?);
    }
    Ok((result, files))
}

pub fn cmd_spacing(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let cfg = prepare(config)?;
    let (_, mut files) = spacing_stage(config, &Solved::new(config)?)?;
    files.push(cfg);
    Ok(files)
}

fn projector_stage(config: &RunConfig, ladders: &LadderSet) -> Result<(Vec<IdentityCheck>, PathBuf)> {
    let checks = projector_identities(ladders)?;
    let path = write_with(config.output_dir.join("projector_identities.csv"), |w| {
        write_identity_report(&checks, w)
    })?;
    Ok((checks, path))
}

/// `corrupt_ladder` is a test hook that perturbs one ladder matrix element.
pub fn cmd_projector_check(config: &RunConfig, corrupt_ladder: Option<f64>) -> Result<Vec<PathBuf>> {
    let cfg = prepare(config)?;
    let basis = FockBasis::new(config.projector_max_shell);
    let ladders = match corrupt_ladder {
        Some(delta) => LadderSet::corrupted(&basis, delta),
        None => LadderSet::new(&basis),
    };
    let (checks, path) = projector_stage(config, &ladders)?;
    let failed = failures(&checks);
    if !failed.is_empty() {
        return Err(Error::IdentityFailure(failed.join("; ")));
    }
    Ok(vec![path, cfg])
}

/// One line of the reproduction summary.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryCheck {
    pub check: String,
    pub measured: Option<f64>,
    pub threshold: String,
    pub pass: bool,
}

pub const SUMMARY_HEADER: &str = "check,measured,threshold,pass";

pub const CROSSING_WINDOW: (f64, f64) = (0.06, 0.16);
pub const CROSSING_SPREAD: f64 = 0.35;
pub const MONOTONE_SLACK: f64 = 0.05;
pub const LOW_STATE_LIMIT: f64 = 0.05;
pub const OUT_OF_S_LIMIT: f64 = 0.3;

pub fn onset_checks(rows: &[MetricsRow]) -> Vec<SummaryCheck> {
    let c = Crossings::from_rows(rows);
    let (lo, hi) = CROSSING_WINDOW;
    let window = format!("[{lo},{hi}]");
    let mut out: Vec<SummaryCheck> = [
        ("onset_crossing_kappa", c.kappa),
        ("onset_crossing_delta_n", c.delta_n),
        ("onset_crossing_pr", c.pr),
    ]
    .into_iter()
    .map(|(name, x)| SummaryCheck {
        check: name.into(),
        measured: x,
        threshold: window.clone(),
        pass: x.is_some_and(|x| (lo..=hi).contains(&x)),
    })
    .collect();
    let spread = c.max_pairwise_spread();
    out.push(SummaryCheck {
        check: "onset_co_crossing_spread".into(),
        measured: spread,
        threshold: format!("<={CROSSING_SPREAD}"),
        pass: spread.is_some_and(|s| s <= CROSSING_SPREAD),
    });
    out
}

/// Largest relative increase of consecutive common-set averages.
pub fn worst_increase(trend: &[(usize, Option<f64>)]) -> Option<f64> {
    let v: Option<Vec<f64>> = trend.iter().map(|t| t.1).collect();
    let v = v?;
    Some(
        v.windows(2)
            .map(|w| (w[1] - w[0]) / w[0])
            .fold(f64::NEG_INFINITY, f64::max),
    )
}

pub fn jprime_checks(study: &DeltaJStudy, integrals: &[IntegralKind]) -> Vec<SummaryCheck> {
    let mut out = Vec::new();
    for &kind in integrals {
        let trend = study.common_trend(kind);
        let inc = if trend.len() < 2 { None } else { worst_increase(&trend) };
        out.push(SummaryCheck {
            check: format!("jprime_non_increasing_{kind}"),
            measured: inc,
            threshold: format!("<={MONOTONE_SLACK}"),
            pass: inc.is_some_and(|x| x <= MONOTONE_SLACK),
        });
        let last = trend.last().and_then(|t| t.1);
        out.push(SummaryCheck {
            check: format!("jprime_low_state_average_{kind}"),
            measured: last,
            threshold: format!("<{LOW_STATE_LIMIT}"),
            pass: last.is_some_and(|x| x < LOW_STATE_LIMIT),
        });
        let per_point: Vec<f64> = study
            .points
            .iter()
            .filter_map(|p| {
                let c = study.out_of_s_changes(p, kind);
                (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64)
            })
            .collect();
        let worst = per_point.iter().copied().reduce(f64::max);
        out.push(SummaryCheck {
            check: format!("jprime_out_of_s_relative_change_{kind}"),
            measured: worst,
            threshold: format!("<{OUT_OF_S_LIMIT}"),
            pass: worst.is_some_and(|x| x < OUT_OF_S_LIMIT),
        });
    }
    out
}

/// `d_wigner − d_poisson`: negative means closer to Wigner.
pub fn spacing_checks(result: &SpacingResult) -> Vec<SummaryCheck> {
    let mut out = Vec::new();
    for (window, stats, wigner) in [
        ("regular", &result.regular, false),
        ("chaotic", &result.chaotic, true),
    ] {
        for s in stats {
            let diff = s.outcome.as_ref().ok().map(|(_, d)| d.d_wigner - d.d_poisson);
            out.push(SummaryCheck {
                check: format!("spacing_{window}_{}_dwigner_minus_dpoisson", s.block),
                measured: diff,
                threshold: if wigner { "<0".into() } else { ">0".into() },
                pass: diff.is_some_and(|d| if wigner { d < 0.0 } else { d > 0.0 }),
            });
        }
    }
    out
}

fn identity_summary(name: &str, checks: &[IdentityCheck]) -> SummaryCheck {
    let failed = checks.iter().filter(|c| !c.pass()).count();
    SummaryCheck {
        check: format!("{name}_failures"),
        measured: Some(failed as f64),
        threshold: "0".into(),
        pass: failed == 0,
    }
}

pub fn write_summary<W: Write>(checks: &[SummaryCheck], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SUMMARY_HEADER}")?;
    for c in checks {
        writeln!(w, "{},{},{},{}", c.check, opt_num(c.measured), c.threshold, c.pass)?;
    }
    Ok(())
}

pub struct Reproduction {
    pub files: Vec<PathBuf>,
    pub summary: Vec<SummaryCheck>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// solve → metrics → integrals → spacing → projector identities, then a
/// summary of every check. Failing checks are reported, not fatal.
pub fn cmd_reproduce(config: &RunConfig) -> Result<Reproduction> {
    let cfg = prepare(config)?;
    let solved = stage("solve", Solved::new(config))?;
    let mut files = stage("solve", solve_stage(config, &solved))?;
    let (rows, path) = stage("metrics", metrics_stage(config, &solved))?;
    files.push(path);
    let (study, integral_checks, paths) = stage("integrals", integrals_stage(config, &solved))?;
    files.extend(paths);
    let (spacing, paths) = stage("spacing", spacing_stage(config, &solved))?;
    files.extend(paths);
    let ladders = LadderSet::new(&FockBasis::new(config.projector_max_shell));
    let (projector_checks, path) = stage("projector-check", projector_stage(config, &ladders))?;
    files.push(path);

    let mut summary = onset_checks(&rows);
    summary.extend(jprime_checks(&study, &config.integrals));
    summary.extend(spacing_checks(&spacing));
    summary.push(identity_summary("integral_identities", &integral_checks));
    summary.push(identity_summary("projector_identities", &projector_checks));
    files.push(write_with(config.output_dir.join("summary.csv"), |w| {
        write_summary(&summary, w)
    })?);
    files.push(cfg);
    Ok(Reproduction { files, summary })
}
