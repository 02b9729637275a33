use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spreadwidth::pipeline;
use spreadwidth::{Error, RunConfig};

/// Hénon–Heiles spectra, chaoticity measures and approximate integrals.
///
/// Settings come from the defaults, then `--config FILE`, then the
/// individual `--key value` overrides. Exit codes: 0 success, 1 invalid
/// input, 2 numerical identity failure, 3 I/O error.
#[derive(Parser)]
#[command(name = "spreadwidth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum with symmetry blocks.
    Solve(Overrides),
    /// Spreading width, ΔN and Hose–Taylor projections vs scaled energy.
    Metrics(Overrides),
    /// ΔJ' study over model-space sizes plus the identity report.
    Integrals(Overrides),
    /// Level-spacing statistics in the regular and chaotic windows.
    Spacing(Overrides),
    /// Projector and transition-operator identities.
    ProjectorCheck {
        #[command(flatten)]
        overrides: Overrides,
        /// Test hook: scale one ladder matrix element by 1 + DELTA.
        #[arg(long, hide = true, value_name = "DELTA")]
        corrupt_ladder: Option<f64>,
    },
    /// Every stage end to end, with a summary of all checks.
    Reproduce(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// key = value file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    max_shell: Option<String>,
    /// Comma-separated model-space sizes in shells.
    #[arg(long)]
    p_sizes: Option<String>,
    /// Residual threshold for the S-space.
    #[arg(long)]
    epsilon: Option<String>,
    /// Comma-separated subset of n1, n2, N, l.
    #[arg(long)]
    integrals: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// `lo,hi` in scaled energy.
    #[arg(long)]
    regular_window: Option<String>,
    /// `lo,hi` in scaled energy.
    #[arg(long)]
    chaotic_window: Option<String>,
    #[arg(long)]
    fit_degree: Option<String>,
    #[arg(long)]
    projector_max_shell: Option<String>,
    #[arg(long)]
    norm_trials: Option<String>,
    #[arg(long)]
    dump_coefficients: Option<String>,
}

impl Overrides {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config = RunConfig::load(path)?;
        }
        let pairs = [
            ("lambda", &self.lambda),
            ("max_shell", &self.max_shell),
            ("p_sizes", &self.p_sizes),
            ("epsilon", &self.epsilon),
            ("integrals", &self.integrals),
            ("bins", &self.bins),
            ("seed", &self.seed),
            ("output_dir", &self.output_dir),
            ("regular_window", &self.regular_window),
            ("chaotic_window", &self.chaotic_window),
            ("fit_degree", &self.fit_degree),
            ("projector_max_shell", &self.projector_max_shell),
            ("norm_trials", &self.norm_trials),
            ("dump_coefficients", &self.dump_coefficients),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                config.set(key, v)?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("SPREADWIDTH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("SPREADWIDTH_THREADS = {v:?}: expected a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(command: Command) -> Result<(), Error> {
    init_threads()?;
    match command {
        Command::Solve(o) => print_files(&pipeline::cmd_solve(&o.resolve()?)?),
        Command::Metrics(o) => print_files(&pipeline::cmd_metrics(&o.resolve()?)?),
        Command::Integrals(o) => print_files(&pipeline::cmd_integrals(&o.resolve()?)?),
        Command::Spacing(o) => print_files(&pipeline::cmd_spacing(&o.resolve()?)?),
        Command::ProjectorCheck {
            overrides,
            corrupt_ladder,
        } => print_files(&pipeline::cmd_projector_check(
            &overrides.resolve()?,
            corrupt_ladder,
        )?),
        Command::Reproduce(o) => {
            let r = pipeline::cmd_reproduce(&o.resolve()?)?;
            print_files(&r.files);
            for c in &r.summary {
                let measured = c.measured.map_or("-".to_string(), |m| format!("{m:.4e}"));
                let flag = if c.pass { "PASS" } else { "FAIL" };
                println!("{flag} {:<48} {measured:>12}  {}", c.check, c.threshold);
            }
            let failed = r.summary.iter().filter(|c| !c.pass).count();
            println!("{failed} of {} checks failed", r.summary.len());
            let identities = r
                .summary
                .iter()
                .filter(|c| c.check.ends_with("identities_failures") && !c.pass)
                .count();
            if identities > 0 {
                return Err(Error::IdentityFailure(
                    "see integral_identities.csv and projector_identities.csv".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
