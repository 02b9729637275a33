//! Symmetry bookkeeping and nearest-neighbour level-spacing statistics.
//!
//! Eigenstates are sorted into four blocks from the reflection parity
//! `Π = (−1)^{n1}` and degeneracy pairing: non-degenerate even states are
//! `A`, non-degenerate odd states `B`, and each degenerate pair supplies one
//! `C` (even member) and one `D` (odd member). This reproduces the four-block
//! split of the C3v-symmetric Hamiltonian without building the 2π/3 rotation
//! in the Fock basis; it is a labelling, not an identification with the
//! irreducible representations A1/A2/E.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::eigen::Spectrum;
use crate::error::{Error, Result};
use crate::format::num;

pub const DEFAULT_DEGENERACY_TOLERANCE: f64 = 1e-6;

/// Minimum `|⟨Π⟩|` for a state to count as having definite parity.
pub const PARITY_THRESHOLD: f64 = 0.99;

pub const HISTOGRAM_BIN: f64 = 0.25;
pub const HISTOGRAM_MAX: f64 = 4.0;
pub const MIN_SPACINGS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    A,
    B,
    C,
    D,
}

impl Block {
    pub const ALL: [Block; 4] = [Block::A, Block::B, Block::C, Block::D];

    pub fn parse(s: &str) -> Result<Block> {
        match s {
            "A" => Ok(Block::A),
            "B" => Ok(Block::B),
            "C" => Ok(Block::C),
            "D" => Ok(Block::D),
            other => Err(Error::InvalidParameter(format!(
                "symmetry block must be one of A, B, C, D; got {other:?}"
            ))),
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Block::A => "A",
            Block::B => "B",
            Block::C => "C",
            Block::D => "D",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelIssue {
    /// `|⟨Π⟩| ≤ 0.99`.
    AmbiguousParity,
    /// Degenerate with a state of the same parity, or left over in a
    /// cluster with more members of one parity than the other.
    UnpairedDegeneracy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetryLabel {
    pub block: Block,
    /// `⟨ψ|Π|ψ⟩`.
    pub parity: f64,
    pub partner: Option<usize>,
    pub issue: Option<LabelIssue>,
}

pub fn parity_expectation(spectrum: &Spectrum, i: usize) -> f64 {
    let v = spectrum.vector(i);
    spectrum
        .basis()
        .states()
        .iter()
        .zip(v.iter())
        .map(|(s, c)| s.parity() * c * c)
        .sum()
}

pub fn classify_symmetry(spectrum: &Spectrum, tol_degeneracy: f64) -> Vec<SymmetryLabel> {
    let n = spectrum.dim();
    let parity: Vec<f64> = (0..n).map(|i| parity_expectation(spectrum, i)).collect();
    let single = |i: usize, issue: Option<LabelIssue>| SymmetryLabel {
        block: if parity[i] > 0.0 { Block::A } else { Block::B },
        parity: parity[i],
        partner: None,
        issue: if parity[i].abs() <= PARITY_THRESHOLD {
            Some(LabelIssue::AmbiguousParity)
        } else {
            issue
        },
    };

    let mut labels: Vec<Option<SymmetryLabel>> = vec![None; n];
    let energies = spectrum.energies();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] <= tol_degeneracy {
            end += 1;
        }
        if end - start == 1 {
            labels[start] = Some(single(start, None));
        } else {
            let even: Vec<usize> = (start..end).filter(|&i| parity[i] > 0.0).collect();
            let odd: Vec<usize> = (start..end).filter(|&i| parity[i] <= 0.0).collect();
            for (&e, &o) in even.iter().zip(&odd) {
                labels[e] = Some(SymmetryLabel {
                    block: Block::C,
                    parity: parity[e],
                    partner: Some(o),
                    issue: (parity[e].abs() <= PARITY_THRESHOLD)
                        .then_some(LabelIssue::AmbiguousParity),
                });
                labels[o] = Some(SymmetryLabel {
                    block: Block::D,
                    parity: parity[o],
                    partner: Some(e),
                    issue: (parity[o].abs() <= PARITY_THRESHOLD)
                        .then_some(LabelIssue::AmbiguousParity),
                });
            }
            let paired = even.len().min(odd.len());
            for &i in even[paired..].iter().chain(&odd[paired..]) {
                labels[i] = Some(single(i, Some(LabelIssue::UnpairedDegeneracy)));
            }
        }
        start = end;
    }
    labels.into_iter().map(|l| l.expect("every state labelled")).collect()
}

/// Maps levels onto the polynomial fit of their counting staircase, which
/// gives unit mean spacing. The fit runs in standardized energy
/// `(E − mean)/std`, so the result is invariant under affine maps of the
/// input.
pub fn unfold(energies: &[f64], fit_degree: usize) -> Result<Vec<f64>> {
    if energies.len() < MIN_SPACINGS {
        return Err(Error::Insufficient(format!(
            "unfolding needs at least {MIN_SPACINGS} levels, got {}",
            energies.len()
        )));
    }
    if !(3..=9).contains(&fit_degree) {
        return Err(Error::InvalidParameter(format!(
            "fit degree must be in 3..=9, got {fit_degree}"
        )));
    }
    if energies.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("levels must be ascending".into()));
    }
    let n = energies.len();
    let mean = energies.iter().sum::<f64>() / n as f64;
    let std = (energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if std == 0.0 {
        return Err(Error::IllConditioned("all levels coincide".into()));
    }
    let x: Vec<f64> = energies.iter().map(|e| (e - mean) / std).collect();

    let cols = fit_degree + 1;
    let design = DMatrix::from_fn(n, cols, |i, k| x[i].powi(k as i32));
    let staircase = DVector::from_fn(n, |i, _| i as f64 + 0.5);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= smax * 1e-12 {
        return Err(Error::IllConditioned(format!(
            "design matrix condition number {:e}",
            smax / smin
        )));
    }
    let coef = svd
        .solve(&staircase, 0.0)
        .map_err(|e| Error::IllConditioned(e.to_string()))?;

    let unfolded: Vec<f64> = x
        .iter()
        .map(|&xi| coef.iter().rev().fold(0.0, |acc, c| acc * xi + c))
        .collect();
    Ok(unfolded)
}

/// Nearest-neighbour spacings of one symmetry block.
#[derive(Clone, Debug)]
pub struct SpacingSample {
    pub block: Block,
    pub spacings: Vec<f64>,
}

impl SpacingSample {
    /// Unfolds the levels of a single block. Levels from several blocks are
    /// refused: superposing independent sequences hides level repulsion.
    pub fn from_levels(levels: &[(f64, Block)], fit_degree: usize) -> Result<SpacingSample> {
        let block = levels
            .first()
            .map(|l| l.1)
            .ok_or(Error::Empty("level sequence"))?;
        if let Some(other) = levels.iter().find(|l| l.1 != block) {
            return Err(Error::InvalidParameter(format!(
                "mixed symmetry blocks ({block} and {}) in one spacing sample",
                other.1
            )));
        }
        let energies: Vec<f64> = levels.iter().map(|l| l.0).collect();
        let unfolded = unfold(&energies, fit_degree)?;
        let spacings: Vec<f64> = unfolded.windows(2).map(|w| w[1] - w[0]).collect();
        if let Some(s) = spacings.iter().find(|s| **s < 0.0) {
            return Err(Error::IllConditioned(format!(
                "staircase fit is not monotone (spacing {s})"
            )));
        }
        Ok(SpacingSample { block, spacings })
    }

    pub fn mean(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.spacings.len() as f64
    }

    /// Counts in the bins `[k·0.25, (k+1)·0.25)` on `[0, 4)`.
    pub fn histogram(&self) -> Vec<usize> {
        histogram(&self.spacings)
    }
}

fn bin_count() -> usize {
    (HISTOGRAM_MAX / HISTOGRAM_BIN).round() as usize
}

pub fn histogram(spacings: &[f64]) -> Vec<usize> {
    let mut counts = vec![0; bin_count()];
    for &s in spacings {
        if (0.0..HISTOGRAM_MAX).contains(&s) {
            counts[(s / HISTOGRAM_BIN) as usize] += 1;
        }
    }
    counts
}

fn poisson_cdf(s: f64) -> f64 {
    1.0 - (-s).exp()
}

fn wigner_cdf(s: f64) -> f64 {
    1.0 - (-std::f64::consts::PI * s * s / 4.0).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacingDistance {
    pub d_poisson: f64,
    pub d_wigner: f64,
}

impl SpacingDistance {
    pub fn closer_to_wigner(&self) -> bool {
        self.d_wigner < self.d_poisson
    }
}

/// L1 distance between the normalized spacing histogram and the exact
/// per-bin masses of the Poisson and Wigner-surmise densities.
pub fn spacing_distance(sample: &SpacingSample) -> Result<SpacingDistance> {
    if sample.spacings.len() < MIN_SPACINGS {
        return Err(Error::Insufficient(format!(
            "need at least {MIN_SPACINGS} spacings, got {}",
            sample.spacings.len()
        )));
    }
    let n = sample.spacings.len() as f64;
    let mut d_poisson = 0.0;
    let mut d_wigner = 0.0;
    for (k, &count) in sample.histogram().iter().enumerate() {
        let lo = k as f64 * HISTOGRAM_BIN;
        let hi = lo + HISTOGRAM_BIN;
        let h = count as f64 / n;
        d_poisson += (h - (poisson_cdf(hi) - poisson_cdf(lo))).abs();
        d_wigner += (h - (wigner_cdf(hi) - wigner_cdf(lo))).abs();
    }
    Ok(SpacingDistance {
        d_poisson,
        d_wigner,
    })
}

/// Result for one block inside one energy window.
#[derive(Clone, Debug)]
pub struct BlockStatistics {
    pub block: Block,
    pub n_levels: usize,
    pub outcome: std::result::Result<(SpacingSample, SpacingDistance), String>,
}

pub const SPACING_HEADER: &str = "block,n_levels,mean_spacing,d_poisson,d_wigner";
pub const HISTOGRAM_HEADER: &str = "block,bin_left,count";

/// Per-block statistics for the levels whose scaled energy `λ² E` lies in
/// `[eps_lo, eps_hi)`. Blocks with too few levels carry the error message.
pub fn window_statistics(
    spectrum: &Spectrum,
    labels: &[SymmetryLabel],
    lambda: f64,
    eps_lo: f64,
    eps_hi: f64,
    fit_degree: usize,
) -> Vec<BlockStatistics> {
    let scale = lambda * lambda;
    Block::ALL
        .iter()
        .map(|&block| {
            let levels: Vec<(f64, Block)> = spectrum
                .energies()
                .iter()
                .zip(labels)
                .filter(|(e, l)| {
                    let eps = scale * **e;
                    l.block == block && eps >= eps_lo && eps < eps_hi
                })
                .map(|(e, _)| (*e, block))
                .collect();
            let n_levels = levels.len();
            let outcome = if levels.is_empty() {
                Err(format!("no {block} levels in window"))
            } else {
                SpacingSample::from_levels(&levels, fit_degree)
                    .and_then(|s| spacing_distance(&s).map(|d| (s, d)))
                    .map_err(|e| e.to_string())
            };
            BlockStatistics {
                block,
                n_levels,
                outcome,
            }
        })
        .collect()
}

pub fn write_spacing_csv<W: Write>(stats: &[BlockStatistics], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SPACING_HEADER}")?;
    for s in stats {
        match &s.outcome {
            Ok((sample, d)) => writeln!(
                w,
                "{},{},{},{},{}",
                s.block,
                s.n_levels,
                num(sample.mean()),
                num(d.d_poisson),
                num(d.d_wigner)
            )?,
            Err(_) => writeln!(w, "{},{},,,", s.block, s.n_levels)?,
        }
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(stats: &[BlockStatistics], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HISTOGRAM_HEADER}")?;
    for s in stats {
        if let Ok((sample, _)) = &s.outcome {
            for (k, count) in sample.histogram().iter().enumerate() {
                writeln!(w, "{},{},{count}", s.block, num(k as f64 * HISTOGRAM_BIN))?;
            }
        }
    }
    Ok(())
}
