//! `dnls`: heteroclinic standing waves of the defocussing discrete NLS
//! equation by constrained gradient descent.
//!
//! Exit codes: 0 when every run converged, 2 when a run finished without
//! reaching its residual tolerance, 1 on any configuration or domain error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dnls_cli::commands::{self, CliError, Outcome, SweepKind};
use dnls_cli::config::RunConfig;
use dnls_cli::presets;

#[derive(Parser)]
#[command(
    name = "dnls",
    version,
    about = "Dark standing waves of the defocussing discrete NLS equation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every run; each maps onto a config-file key, and flags
/// override the file.
#[derive(Args)]
struct Common {
    /// Config file of key = value lines (later keys win; flags override).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in potential name or an F-table file path.
    #[arg(long)]
    potential: Option<String>,
    /// Site placement: onsite | intersite.
    #[arg(long)]
    setting: Option<String>,
    /// Truncation half-width.
    #[arg(long)]
    n: Option<String>,
    /// Coupling.
    #[arg(long)]
    beta: Option<String>,
    /// Flow step, or "auto" for 80% of the stability threshold.
    #[arg(long)]
    tau: Option<String>,
    /// Iteration budget.
    #[arg(long)]
    steps: Option<String>,
    /// Residual tolerance.
    #[arg(long)]
    tol: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    /// Builds the run configuration: defaults, then the config file, then
    /// flags, all funnelled through the same key = value validation.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            cfg.apply_file(&text)?;
        }
        let flags: [(&str, &Option<String>); 8] = [
            ("potential", &self.potential),
            ("setting", &self.setting),
            ("n", &self.n),
            ("beta", &self.beta),
            ("tau", &self.tau),
            ("steps", &self.steps),
            ("tol", &self.tol),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(value) = value {
                cfg.apply_kv(key, value)?;
            }
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the lattice energy and write the profile artifact set.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Run a named preset batch instead of a single solve.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Solve a family over half-widths (n-list) or couplings (beta-list).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated strictly increasing half-widths.
        #[arg(long, value_name = "LIST")]
        n_list: Option<String>,
        /// Comma-separated couplings (mutually exclusive with --n-list).
        #[arg(long, value_name = "LIST")]
        beta_list: Option<String>,
    },
    /// Solve on scaled lattices and compare to the continuum heteroclinic.
    Continuum {
        #[command(flatten)]
        common: Common,
        /// Comma-separated lattice spacings.
        #[arg(long, value_name = "LIST")]
        eps_list: Option<String>,
        /// Comparison window half-width in the scaled variable.
        #[arg(long)]
        window: Option<String>,
        /// Use a named continuum preset's parameters.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Decay-rate and plateau reports for a stored profile document.
    Analyze {
        /// Path to a profile.json written by `solve`.
        profile: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the full lattice dynamics from a stored profile document.
    Evolve {
        /// Path to a profile.json written by `solve`.
        profile: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Integration horizon.
        #[arg(long)]
        t_final: Option<String>,
        /// Integrator step.
        #[arg(long)]
        dt: Option<String>,
    },
    /// List the built-in presets.
    Presets,
}

fn find_preset(name: &str) -> Result<&'static presets::Preset, CliError> {
    presets::find(name).ok_or_else(|| {
        let names: Vec<_> = presets::all().iter().map(|p| p.name).collect();
        CliError::Usage(format!(
            "unknown preset {name:?}; available: {}",
            names.join(", ")
        ))
    })
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Solve { common, preset } => {
            let cfg = common.resolve()?;
            match preset {
                Some(name) => commands::cmd_solve_preset(find_preset(&name)?, &cfg),
                None => commands::cmd_solve(&cfg),
            }
        }
        Command::Sweep {
            common,
            n_list,
            beta_list,
        } => {
            let mut cfg = common.resolve()?;
            if n_list.is_some() && beta_list.is_some() {
                return Err(CliError::Usage(
                    "--n-list and --beta-list are mutually exclusive".into(),
                ));
            }
            let kind = if let Some(list) = beta_list {
                cfg.apply_kv("beta-list", &list)?;
                SweepKind::Coupling
            } else {
                if let Some(list) = n_list {
                    cfg.apply_kv("n-list", &list)?;
                }
                SweepKind::HalfWidth
            };
            commands::cmd_sweep(&cfg, kind)
        }
        Command::Continuum {
            common,
            eps_list,
            window,
            preset,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(name) = preset {
                commands::apply_continuum_preset(find_preset(&name)?, &mut cfg)?;
            }
            if let Some(list) = eps_list {
                cfg.apply_kv("eps-list", &list)?;
            }
            if let Some(window) = window {
                cfg.apply_kv("window", &window)?;
            }
            commands::cmd_continuum(&cfg)
        }
        Command::Analyze { profile, common } => {
            let cfg = common.resolve()?;
            commands::cmd_analyze(&profile, &cfg)
        }
        Command::Evolve {
            profile,
            common,
            t_final,
            dt,
        } => {
            let mut cfg = common.resolve()?;
            if let Some(t) = t_final {
                cfg.apply_kv("t-final", &t)?;
            }
            if let Some(dt) = dt {
                cfg.apply_kv("dt", &dt)?;
            }
            commands::cmd_evolve(&profile, &cfg)
        }
        Command::Presets => {
            commands::cmd_presets();
            Ok(Outcome::Converged)
        }
    }
}

fn main() -> ExitCode {
    // Usage errors exit 1 like every other error; clap's default of 2 would
    // collide with the not-converged code. Help and version stay successful.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = u8::from(e.use_stderr());
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Converged) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => {
            eprintln!("dnls: finished without reaching the residual tolerance");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("dnls: error: {e}");
            ExitCode::FAILURE
        }
    }
}
