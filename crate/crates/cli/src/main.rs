use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscbath::coefficients::cp_threshold;
use serde_json::json;

mod config;
mod presets;
mod simulate;

use config::{CliError, CliResult, Overrides, RunConfig, MODEL_KEYS};

#[derive(Parser)]
#[command(name = "oscbath", version, about = "Master-equation and exact-bath simulations of two coupled oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Named parameter set, e.g. fig4 or fig10b.
    #[arg(long)]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a field, e.g. --set g=0.1 or --set grid.count=101. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Comma-separated scheme list: exact, redfield, cp_redfield, cg_redfield[(s)], global, local, mixture.
    #[arg(long)]
    schemes: Option<String>,
    /// Time grid as start:stop:count[:lin|log].
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    lamb_shift: Option<Switch>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> CliResult<RunConfig> {
        RunConfig::load(&Overrides {
            preset: self.preset.clone(),
            config: self.config.clone(),
            set: self.set.clone(),
            schemes: self.schemes.clone(),
            grid: self.grid.clone(),
            lamb_shift: self.lamb_shift.map(|s| matches!(s, Switch::On)),
            out: self.out.clone(),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the selected schemes and write one CSV per scheme plus summary.json.
    Run(ConfigArgs),
    /// Write F²(t) of the master-equation schemes against a reference scheme.
    Fidelity {
        #[command(flatten)]
        args: ConfigArgs,
        /// Reference scheme (default: exact).
        #[arg(long)]
        reference: Option<String>,
    },
    /// Repeat a run over values of one model parameter.
    Sweep {
        #[command(flatten)]
        args: ConfigArgs,
        /// Model parameter to vary.
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
    /// Print the complete-positivity threshold of S₊₋ as JSON.
    Threshold(ConfigArgs),
    /// Check the moment equations against truncated density-matrix propagation.
    Verify(ConfigArgs),
}

fn parse_values(raw: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::Config(format!("sweep: bad value `{s}`"))))
        .collect()
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let dir = cfg.out_dir();
            let files = simulate::run(&cfg, &dir)?;
            println!("wrote {} files to {}", files.len(), dir.display());
        }
        Command::Fidelity { args, reference } => {
            let mut cfg = args.load()?;
            if let Some(r) = reference {
                cfg.reference = r;
            }
            let path = simulate::fidelity(&cfg, &cfg.out_dir())?;
            println!("wrote {}", path.display());
        }
        Command::Sweep { args, axis, values } => {
            if !MODEL_KEYS.contains(&axis.as_str()) {
                return Err(CliError::Config(format!(
                    "sweep: unknown axis `{axis}` (one of {})",
                    MODEL_KEYS.join(", ")
                )));
            }
            let cfg = args.load()?;
            cfg.validate()?;
            let values = parse_values(&values)?;
            let dir = cfg.out_dir();
            let failed = simulate::sweep(&cfg, &axis, &values, &dir)?;
            println!("wrote {} runs to {}", values.len(), dir.display());
            if failed > 0 {
                return Err(CliError::Run(format!("{failed} of {} sweep runs failed; see index.json", values.len())));
            }
        }
        Command::Threshold(args) => {
            let cfg = args.load()?;
            let p = cfg.params()?;
            let t = cp_threshold(&p).map_err(|e| CliError::Run(e.to_string()))?;
            let out = json!({
                "n0": p.mean_occupation(),
                "beta": p.beta,
                "g": p.g,
                "cp_threshold": t.bound,
                "cp_threshold_per_mode": t.raw,
            });
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
        }
        Command::Verify(args) => {
            let cfg = args.load()?;
            let setup = simulate::Setup::new(&cfg)?;
            let report = simulate::verify(&setup, &cfg.scheme_specs()?)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            if !report.passed {
                return Err(CliError::Run("moment equations deviate from the density-matrix oracle".into()));
            }
        }
    }
    Ok(())
}

/// Re-runs the process with OpenBLAS pinned to the Haswell kernels when the
/// auto-selected kernels fail the self-check (seen with OpenBLAS 0.3.20 on Cooper Lake).
fn rerun_with_safe_blas() -> Option<ExitCode> {
    const VAR: &str = "OPENBLAS_CORETYPE";
    #[cfg(target_arch = "x86_64")]
    let capable = std::is_x86_feature_detected!("avx2");
    #[cfg(not(target_arch = "x86_64"))]
    let capable = false;
    if oscbath::check_blas().is_ok() || std::env::var_os(VAR).is_some() || !capable {
        return None;
    }
    log::warn!("BLAS self-check failed; restarting with {VAR}=Haswell");
    let exe = std::env::current_exe().ok()?;
    let status = std::process::Command::new(exe).args(std::env::args_os().skip(1)).env(VAR, "Haswell").status().ok()?;
    Some(ExitCode::from(status.code().unwrap_or(1) as u8))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Some(code) = rerun_with_safe_blas() {
        return code;
    }
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
