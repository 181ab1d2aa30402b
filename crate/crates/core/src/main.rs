use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use floquet_dress::commands::{self, Overrides, SelftestOptions};
use floquet_dress::config::Normalized;
use floquet_dress::error::{Error, Result};
use floquet_dress::output::Csv;
use floquet_dress::selftest::seed_from_env;

#[derive(Parser)]
#[command(name = "floquet-dress", version, about = "RF-dressed adiabatic potentials and dressed-state spectroscopy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in configuration (paper_fig1b, paper_fig4).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory (defaults to the configured output_dir).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps; results do not depend on it.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Photon-number truncation |ΔN| ≤ K.
    #[arg(long, value_name = "K")]
    dn_max: Option<i32>,
    /// Relative line-weight floor.
    #[arg(long, value_name = "X")]
    weight_floor: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Full and RWA adiabatic potentials along a line.
    Potential(Common),
    /// Dressed level diagram along a line.
    Levels(Common),
    /// Spectroscopy resonance map over RF currents.
    Scan(Common),
    /// Fit wire amplitudes to a resonance dataset.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV with columns I_RF_mA, nu_kHz, sigma_kHz, branch.
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
    },
    /// Oracle-equivalence and invariant suites.
    Selftest {
        #[command(flatten)]
        common: Common,
        /// Randomized cases per suite.
        #[arg(long, default_value_t = 40)]
        cases: usize,
        #[arg(long, hide = true)]
        flip_counter_rotating: bool,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { dn_max: self.dn_max, weight_floor: self.weight_floor }
    }

    fn load(&self) -> Result<Normalized> {
        commands::load_config(self.config.as_deref(), self.preset.as_deref(), self.overrides())
    }

    fn out_dir(&self, cfg: &Normalized) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output_dir))
    }

    fn init_pool(&self) -> Result<()> {
        if let Some(n) = self.jobs {
            if n == 0 {
                return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        }
        Ok(())
    }
}

fn emit(csv: &Csv, dir: &Path, name: &str) -> Result<()> {
    let path = dir.join(name);
    csv.write(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Potential(c) => {
            c.init_pool()?;
            let cfg = c.load()?;
            emit(&commands::run_potential(&cfg)?, &c.out_dir(&cfg), "potential.csv")
        }
        Command::Levels(c) => {
            c.init_pool()?;
            let cfg = c.load()?;
            emit(&commands::run_levels(&cfg)?, &c.out_dir(&cfg), "levels.csv")
        }
        Command::Scan(c) => {
            c.init_pool()?;
            let cfg = c.load()?;
            emit(&commands::run_scan(&cfg)?, &c.out_dir(&cfg), "scan.csv")
        }
        Command::Fit { common: c, data } => {
            c.init_pool()?;
            let cfg = c.load()?;
            let text = std::fs::read_to_string(&data).map_err(|e| Error::Io(format!("{}: {e}", data.display())))?;
            let dataset = commands::read_dataset(&text)?;
            let (csv, result) = commands::run_fit(&cfg, &dataset)?;
            emit(&csv, &c.out_dir(&cfg), "fit_report.csv")?;
            if !result.converged {
                return Err(Error::FitNonConvergence { iterations: result.iterations });
            }
            Ok(())
        }
        Command::Selftest { common: c, cases, flip_counter_rotating } => {
            c.init_pool()?;
            let cfg = if c.config.is_some() || c.preset.is_some() { Some(c.load()?) } else { None };
            let options = SelftestOptions { cases, seed: seed_from_env(), flip_counter_rotating };
            let reports = commands::run_selftest(cfg.as_ref(), options)?;
            let mut failed = 0;
            for r in &reports {
                println!("{}", r.summary());
                for f in &r.failures {
                    println!("  failure: {f}");
                }
                if !r.passed() {
                    failed += 1;
                }
            }
            if failed > 0 {
                return Err(Error::NumericFailure { message: format!("{failed} suite(s) failed"), residual: failed as f64 });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{report}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
