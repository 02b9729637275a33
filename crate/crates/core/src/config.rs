//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Every key has a
//! default; unknown keys and malformed values are rejected. The resolved
//! configuration is written next to the outputs in the same format, so it
//! can be fed back in to repeat a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrals::IntegralKind;

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub lambda: f64,
    pub max_shell: usize,
    pub p_sizes: Vec<usize>,
    pub epsilon: f64,
    pub integrals: Vec<IntegralKind>,
    pub bins: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Scaled-energy windows `[lo, hi)` for the spacing statistics.
    pub regular_window: (f64, f64),
    pub chaotic_window: (f64, f64),
    pub fit_degree: usize,
    pub projector_max_shell: usize,
    /// Random S-space vectors per model space in the norm-bound check.
    pub norm_trials: usize,
    pub dump_coefficients: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lambda: 0.1,
            max_shell: 30,
            p_sizes: vec![1, 10, 15, 20],
            epsilon: 1e-3,
            integrals: vec![IntegralKind::N, IntegralKind::L],
            bins: 20,
            seed: 1,
            output_dir: PathBuf::from("out"),
            regular_window: (0.0, 0.05),
            chaotic_window: (0.15, f64::INFINITY),
            fit_degree: 5,
            projector_max_shell: 6,
            norm_trials: 100,
            dump_coefficients: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "max_shell",
    "p_sizes",
    "epsilon",
    "integrals",
    "bins",
    "seed",
    "output_dir",
    "regular_window",
    "chaotic_window",
    "fit_degree",
    "projector_max_shell",
    "norm_trials",
    "dump_coefficients",
];

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} = {value:?}: {why}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e| bad(key, value, e))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|v| parse_num(key, v))
        .collect()
}

fn parse_window(key: &str, value: &str) -> Result<(f64, f64)> {
    match parse_list::<f64>(key, value)?.as_slice() {
        &[lo, hi] => Ok((lo, hi)),
        _ => Err(bad(key, value, "expected two numbers `lo,hi`")),
    }
}

fn fmt_window(w: (f64, f64)) -> String {
    format!("{},{}", w.0, w.1)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "lambda" => self.lambda = parse_num(&key, value)?,
            "max_shell" => self.max_shell = parse_num(&key, value)?,
            "p_sizes" => self.p_sizes = parse_list(&key, value)?,
            "epsilon" => self.epsilon = parse_num(&key, value)?,
            "integrals" => {
                self.integrals = value
                    .split(',')
                    .map(|v| IntegralKind::parse(v.trim()).map_err(|e| bad(&key, value, e)))
                    .collect::<Result<_>>()?
            }
            "bins" => self.bins = parse_num(&key, value)?,
            "seed" => self.seed = parse_num(&key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "regular_window" => self.regular_window = parse_window(&key, value)?,
            "chaotic_window" => self.chaotic_window = parse_window(&key, value)?,
            "fit_degree" => self.fit_degree = parse_num(&key, value)?,
            "projector_max_shell" => self.projector_max_shell = parse_num(&key, value)?,
            "norm_trials" => self.norm_trials = parse_num(&key, value)?,
            "dump_coefficients" => self.dump_coefficients = parse_num(&key, value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown key {key:?} (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies the lines of a config file on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_text(&text)
    }

    /// Field-by-field validation. `p_sizes` against `max_shell` is checked
    /// by [`RunConfig::validate_model_spaces`], since only the integrals
    /// stage uses it.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !self.lambda.is_finite() {
            return fail(format!("lambda must be finite, got {}", self.lambda));
        }
        if !(1..=60).contains(&self.max_shell) {
            return fail(format!("max_shell must be in 1..=60, got {}", self.max_shell));
        }
        if self.p_sizes.is_empty() {
            return fail("p_sizes is empty".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.integrals.is_empty() {
            return fail("integrals is empty".into());
        }
        if self.bins == 0 {
            return fail("bins must be at least 1".into());
        }
        if self.output_dir.as_os_str().is_empty() {
            return fail("output_dir is empty".into());
        }
        for (name, (lo, hi)) in [
            ("regular_window", self.regular_window),
            ("chaotic_window", self.chaotic_window),
        ] {
            if lo.is_nan() || hi.is_nan() || lo < 0.0 || hi <= lo {
                return fail(format!("{name} must satisfy 0 <= lo < hi, got {lo},{hi}"));
            }
        }
        if !(3..=9).contains(&self.fit_degree) {
            return fail(format!("fit_degree must be in 3..=9, got {}", self.fit_degree));
        }
        if !(1..=8).contains(&self.projector_max_shell) {
            return fail(format!(
                "projector_max_shell must be in 1..=8, got {}",
                self.projector_max_shell
            ));
        }
        if self.norm_trials == 0 {
            return fail("norm_trials must be at least 1".into());
        }
        Ok(())
    }

    pub fn validate_model_spaces(&self) -> Result<()> {
        match self.p_sizes.iter().find(|&&p| p > self.max_shell) {
            Some(p) => Err(Error::Config(format!(
                "p_sizes entry {p} exceeds max_shell {}",
                self.max_shell
            ))),
            None => Ok(()),
        }
    }

    /// The configuration in the input format, every key spelled out.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| {
            v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        };
        let integrals = self
            .integrals
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",");
        let mut s = String::new();
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "max_shell = {}", self.max_shell);
        let _ = writeln!(s, "p_sizes = {}", list(&self.p_sizes));
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "integrals = {integrals}");
        let _ = writeln!(s, "bins = {}", self.bins);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "regular_window = {}", fmt_window(self.regular_window));
        let _ = writeln!(s, "chaotic_window = {}", fmt_window(self.chaotic_window));
        let _ = writeln!(s, "fit_degree = {}", self.fit_degree);
        let _ = writeln!(s, "projector_max_shell = {}", self.projector_max_shell);
        let _ = writeln!(s, "norm_trials = {}", self.norm_trials);
        let _ = writeln!(s, "dump_coefficients = {}", self.dump_coefficients);
        s
    }
}
