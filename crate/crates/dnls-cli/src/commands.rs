//! Subcommand implementations. Each returns an [`Outcome`] that maps onto the
//! process exit code: 0 when every run converged, 2 when a run completed but
//! missed its residual tolerance, and (via `Err`) 1 on configuration or
//! domain errors.

use std::fs;
use std::path::Path;

use dnls::continuum::EPS_WINDOW_MARGIN;
use dnls::{
    analyze_tail, builtin, energy_bound_check, eps_solve, evolve_with_samples, kappa_sequence,
    limit_profile, minimize, normalize, plateau_diagnostics, residual_sup, AnalysisError,
    ContinuumError, DynamicsError, EpsRun, FTable, FlowConfig, LatticeError, MinimizeError,
    MinimizeResult, NormalizedPotential, PotentialError, Profile, ProfileDocument,
};
use dnls::{default_u_grid, format_sci, profile_csv};
use serde_json::json;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::pool;
use crate::presets::{Preset, PresetSpec};

/// How a completed command ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Every run reached its residual tolerance (exit 0).
    Converged,
    /// At least one run exhausted its step budget (exit 2).
    NotConverged,
}

impl Outcome {
    fn and(self, other: Outcome) -> Outcome {
        if self == Outcome::Converged && other == Outcome::Converged {
            Outcome::Converged
        } else {
            Outcome::NotConverged
        }
    }

    fn from_converged(converged: bool) -> Outcome {
        if converged {
            Outcome::Converged
        } else {
            Outcome::NotConverged
        }
    }
}

/// Anything a subcommand can fail with; all variants exit 1.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration entry.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Bad potential definition.
    #[error("potential: {0}")]
    Potential(#[from] PotentialError),
    /// Inadmissible profile data.
    #[error("profile: {0}")]
    Lattice(#[from] LatticeError),
    /// Flow failure (non-finite values).
    #[error("minimize: {0}")]
    Minimize(#[from] MinimizeError),
    /// Tail or plateau analysis failure.
    #[error("analyze: {0}")]
    Analysis(#[from] AnalysisError),
    /// Continuum-limit failure (hypotheses, quadrature, window).
    #[error("continuum: {0}")]
    Continuum(#[from] ContinuumError),
    /// Time integration failure.
    #[error("evolve: {0}")]
    Dynamics(#[from] DynamicsError),
    /// Malformed stored profile document.
    #[error("profile document: {0}")]
    Document(#[from] dnls::IoError),
    /// Filesystem failure.
    #[error("io: {0}")]
    File(#[from] std::io::Error),
    /// Wrong invocation.
    #[error("{0}")]
    Usage(String),
}

/// Resolves a potential argument: built-in names win, otherwise the value is
/// read as an F-table file.
pub fn resolve_potential(spec: &str) -> Result<NormalizedPotential, CliError> {
    match builtin(spec) {
        Ok(ps) => Ok(normalize(&ps)?),
        Err(builtin_err) => {
            if Path::new(spec).is_file() {
                let text = fs::read_to_string(spec)?;
                Ok(normalize(&FTable::parse(&text)?.into_spec()?)?)
            } else {
                Err(CliError::Usage(format!(
                    "potential {spec:?} is not a built-in ({builtin_err}) and no such file exists"
                )))
            }
        }
    }
}

fn flow_config(cfg: &RunConfig, np: &NormalizedPotential, beta: f64) -> FlowConfig {
    let base = match cfg.tau {
        Some(tau) => FlowConfig::with_tau(tau),
        None => FlowConfig::auto(np, beta),
    };
    FlowConfig {
        max_steps: cfg.max_steps,
        residual_tol: cfg.residual_tol,
        ..base
    }
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, content)?;
    Ok(())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_text(path, &text)
}

fn trace_csv(result: &MinimizeResult) -> String {
    let mut out = String::from("step,energy,residual\n");
    for (k, (e, r)) in result
        .energy_trace
        .iter()
        .zip(&result.residual_trace)
        .enumerate()
    {
        out.push_str(&format!("{k},{},{}\n", format_sci(*e), format_sci(*r)));
    }
    out
}

fn psi_csv(np: &NormalizedPotential) -> Result<String, CliError> {
    let mut out = String::from("eta,psi,f,f_prime\n");
    for k in 0..=400 {
        let eta = -1.0 + 0.005 * k as f64;
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_sci(eta),
            format_sci(np.psi_nonlinearity(eta)?),
            format_sci(np.eval_f(eta)?),
            format_sci(np.eval_f_prime(eta)?),
        ));
    }
    Ok(out)
}

fn tail_report(p: &Profile, np: &NormalizedPotential, beta: f64) -> serde_json::Value {
    match analyze_tail(p, np, beta, None) {
        Ok(est) => json!({
            "delta": est.delta,
            "lambda_exact": est.lambda_exact,
            "kappa_inf": est.kappa_inf,
            "lambda_fit": est.lambda_fit,
            "fit_window": est.fit_window.map(|(a, b)| vec![a, b]),
            "max_kappa_deviation": est.max_kappa_deviation,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn plateau_report(
    p: &Profile,
    np: &NormalizedPotential,
) -> Result<Option<serde_json::Value>, CliError> {
    match plateau_diagnostics(p, np, 1e-3, 3) {
        Ok(report) => Ok(Some(json!({
            "candidates": report.candidates,
            "plateaus": report
                .plateaus
                .iter()
                .map(|pl| {
                    json!({
                        "height": pl.height,
                        "start_j": pl.start_j,
                        "run_length": pl.run_length,
                        "max_abs_error": pl.max_abs_error,
                    })
                })
                .collect::<Vec<_>>(),
        }))),
        Err(AnalysisError::NoPlateauCandidates) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Writes the artifact set of one solved profile into `dir`.
fn write_solve_artifacts(
    dir: &Path,
    np: &NormalizedPotential,
    beta: f64,
    result: &MinimizeResult,
) -> Result<(), CliError> {
    let doc = ProfileDocument::new(&result.profile, beta, result.energy, result.residual);
    write_text(&dir.join("profile.json"), &doc.to_json())?;
    write_text(&dir.join("profile.csv"), &profile_csv(&result.profile, 2))?;
    write_text(&dir.join("trace.csv"), &trace_csv(result))?;
    write_text(&dir.join("psi.csv"), &psi_csv(np)?)?;
    write_json(
        &dir.join("tail.json"),
        &tail_report(&result.profile, np, beta),
    )?;
    if let Some(report) = plateau_report(&result.profile, np)? {
        write_json(&dir.join("plateau.json"), &report)?;
    }
    Ok(())
}

/// One minimization with the full artifact set.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let np = resolve_potential(&cfg.potential)?;
    let flow = flow_config(cfg, &np, cfg.beta);
    let result = minimize(cfg.setting, cfg.n, &np, cfg.beta, &flow)?;
    write_solve_artifacts(&cfg.output_dir, &np, cfg.beta, &result)?;
    println!(
        "solve: setting={} n={} beta={} converged={} steps={} residual={:.3e} energy={:.12} -> {}",
        cfg.setting,
        cfg.n,
        cfg.beta,
        result.converged,
        result.steps_taken,
        result.residual,
        result.energy.total,
        cfg.output_dir.display()
    );
    Ok(Outcome::from_converged(result.converged))
}

/// A preset batch of solves, fanned over the worker pool.
pub fn cmd_solve_preset(preset: &Preset, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let PresetSpec::Solve { potential, runs } = preset.spec else {
        return Err(CliError::Usage(format!(
            "preset {:?} is a continuum sweep; run `dnls continuum --preset {}`",
            preset.name, preset.name
        )));
    };
    let np = resolve_potential(potential)?;
    let results = pool::run_ordered(runs, pool::default_workers(runs.len()), |run| {
        let flow = FlowConfig {
            tau: run.tau,
            max_steps: run.max_steps,
            residual_tol: cfg.residual_tol,
            ..FlowConfig::default()
        };
        minimize(run.setting, run.n, &np, run.beta, &flow)
    });
    let base = cfg.output_dir.join(preset.name);
    let mut outcome = Outcome::Converged;
    let mut summary = Vec::new();
    for (run, result) in runs.iter().zip(results) {
        let result = result?;
        let dir = base.join(run.tag);
        write_solve_artifacts(&dir, &np, run.beta, &result)?;
        outcome = outcome.and(Outcome::from_converged(result.converged));
        summary.push(json!({
            "tag": run.tag,
            "setting": run.setting.to_string(),
            "n": run.n,
            "beta": run.beta,
            "tau": run.tau,
            "max_steps": run.max_steps,
            "converged": result.converged,
            "steps_taken": result.steps_taken,
            "residual": result.residual,
            "energy_total": result.energy.total,
            "dir": run.tag,
        }));
        println!(
            "solve[{}]: converged={} steps={} residual={:.3e} energy={:.12}",
            run.tag, result.converged, result.steps_taken, result.residual, result.energy.total
        );
    }
    write_json(
        &base.join("summary.json"),
        &json!({
            "preset": preset.name,
            "note": preset.summary,
            "potential": potential,
            "runs": summary,
        }),
    )?;
    println!("preset {}: artifacts in {}", preset.name, base.display());
    Ok(outcome)
}

/// Copies a continuum preset's parameters into the run configuration.
pub fn apply_continuum_preset(preset: &Preset, cfg: &mut RunConfig) -> Result<(), CliError> {
    let PresetSpec::Continuum {
        potential,
        setting,
        beta,
        window,
        eps_list,
    } = preset.spec
    else {
        return Err(CliError::Usage(format!(
            "preset {:?} is a solve batch; run `dnls solve --preset {}`",
            preset.name, preset.name
        )));
    };
    cfg.potential = potential.to_string();
    cfg.setting = setting;
    cfg.beta = beta;
    cfg.window = window;
    cfg.eps_list = eps_list.to_vec();
    Ok(())
}

/// Which family a sweep walks.
#[derive(Clone, Copy, Debug)]
pub enum SweepKind {
    /// Increasing truncation half-widths from `n-list`.
    HalfWidth,
    /// Couplings from `beta-list`.
    Coupling,
}

/// A family of solves over `n` or `beta`, with a table and per-run profiles.
pub fn cmd_sweep(cfg: &RunConfig, kind: SweepKind) -> Result<Outcome, CliError> {
    let np = resolve_potential(&cfg.potential)?;
    let jobs: Vec<(usize, f64)> = match kind {
        SweepKind::HalfWidth => cfg.n_list.iter().map(|&n| (n, cfg.beta)).collect(),
        SweepKind::Coupling => cfg.beta_list.iter().map(|&b| (cfg.n, b)).collect(),
    };
    let results = pool::run_ordered(&jobs, pool::default_workers(jobs.len()), |&(n, beta)| {
        let flow = flow_config(cfg, &np, beta);
        minimize(cfg.setting, n, &np, beta, &flow)
    });
    let (table_name, label) = match kind {
        SweepKind::HalfWidth => ("nsweep.csv", "n"),
        SweepKind::Coupling => ("betasweep.csv", "beta"),
    };
    let mut table = format!("{label},energy,residual,steps,converged\n");
    let mut outcome = Outcome::Converged;
    let mut energies = Vec::new();
    for (idx, (&(n, beta), result)) in jobs.iter().zip(results).enumerate() {
        let result = result?;
        let key = match kind {
            SweepKind::HalfWidth => n.to_string(),
            SweepKind::Coupling => format_sci(beta),
        };
        table.push_str(&format!(
            "{key},{},{},{},{}\n",
            format_sci(result.energy.total),
            format_sci(result.residual),
            result.steps_taken,
            result.converged
        ));
        let name = match kind {
            SweepKind::HalfWidth => format!("profile_n{n}.json"),
            SweepKind::Coupling => format!("profile_{idx:03}.json"),
        };
        let doc = ProfileDocument::new(&result.profile, beta, result.energy, result.residual);
        write_text(&cfg.output_dir.join("profiles").join(name), &doc.to_json())?;
        outcome = outcome.and(Outcome::from_converged(result.converged));
        energies.push(result.energy.total);
    }
    write_text(&cfg.output_dir.join(table_name), &table)?;
    println!(
        "sweep over {label}: {} runs, energies {:?} -> {}",
        jobs.len(),
        energies,
        cfg.output_dir.display()
    );
    Ok(outcome)
}

/// Scaled-lattice sweep against the continuum heteroclinic, with overlays.
pub fn cmd_continuum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let np = resolve_potential(&cfg.potential)?;
    let limit = limit_profile(&np, cfg.beta, &default_u_grid())?;
    let mut limit_table = String::from("xi,u\n");
    for (xi, u) in limit.xi_grid().iter().zip(limit.u_values()) {
        limit_table.push_str(&format!("{},{}\n", format_sci(*xi), format_sci(*u)));
    }
    write_text(&cfg.output_dir.join("limit.csv"), &limit_table)?;

    let jobs: Vec<f64> = cfg.eps_list.clone();
    let results = pool::run_ordered(&jobs, pool::default_workers(jobs.len()), |&eps| {
        let n = ((cfg.window + EPS_WINDOW_MARGIN + 0.5) / eps).ceil() as usize;
        let lattice_beta = cfg.beta / (eps * eps);
        let flow = flow_config(cfg, &np, lattice_beta);
        eps_solve(
            &np,
            cfg.beta,
            eps,
            n,
            cfg.setting,
            &flow,
            cfg.window,
            &limit,
        )
    });
    let mut outcome = Outcome::Converged;
    let mut summary = Vec::new();
    for (idx, (eps, result)) in jobs.iter().zip(results).enumerate() {
        let run: EpsRun = result?;
        let mut overlay = String::from("xi,u_lattice,u_limit,error\n");
        for (k, &u) in run.profile.values().iter().enumerate() {
            let xi = eps * run.profile.position(k);
            let u_limit = limit.eval(xi);
            overlay.push_str(&format!(
                "{},{},{},{}\n",
                format_sci(xi),
                format_sci(u),
                format_sci(u_limit),
                format_sci(u - u_limit),
            ));
        }
        write_text(
            &cfg.output_dir.join(format!("overlay_{idx:02}.csv")),
            &overlay,
        )?;
        let bound = energy_bound_check(&run, &np, cfg.beta)?;
        let residual = residual_sup(&run.profile, &np, run.lattice_beta)?;
        outcome = outcome.and(Outcome::from_converged(run.converged));
        summary.push(json!({
            "eps": eps,
            "n": run.profile.n(),
            "lattice_beta": run.lattice_beta,
            "converged": run.converged,
            "residual": residual,
            "sup_error_on_window": run.sup_error_on_window,
            "window_half_width": run.window_half_width,
            "f_part": bound.f_part,
            "d_eps_part": bound.d_eps_part,
            "total": bound.total,
            "competitor_total": bound.competitor_total,
            "within_bound": bound.within_bound,
        }));
        println!(
            "continuum[eps={eps}]: n={} converged={} sup error {:.4e}",
            run.profile.n(),
            run.converged,
            run.sup_error_on_window
        );
    }
    write_json(
        &cfg.output_dir.join("continuum.json"),
        &json!({
            "potential": cfg.potential,
            "setting": cfg.setting.to_string(),
            "beta": cfg.beta,
            "window": cfg.window,
            "quadrature_tol": limit.quadrature_tol(),
            "tail_rate": limit.tail_rate(),
            "runs": summary,
        }),
    )?;
    println!("continuum sweep -> {}", cfg.output_dir.display());
    Ok(outcome)
}

fn load_profile(path: &Path) -> Result<(ProfileDocument, Profile), CliError> {
    let text = fs::read_to_string(path)?;
    let doc = ProfileDocument::parse(&text)?;
    let profile = doc.to_profile()?;
    Ok((doc, profile))
}

/// Decay and plateau reports for a stored profile document.
pub fn cmd_analyze(profile_path: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (doc, profile) = load_profile(profile_path)?;
    let np = resolve_potential(&cfg.potential)?;
    let est = analyze_tail(&profile, &np, doc.beta, None)?;
    write_json(
        &cfg.output_dir.join("decay.json"),
        &json!({
            "source": profile_path.display().to_string(),
            "beta": doc.beta,
            "delta": est.delta,
            "lambda_exact": est.lambda_exact,
            "kappa_inf": est.kappa_inf,
            "lambda_fit": est.lambda_fit,
            "fit_window": est.fit_window.map(|(a, b)| vec![a, b]),
            "max_kappa_deviation": est.max_kappa_deviation,
        }),
    )?;
    let kappas = kappa_sequence(&profile)?;
    let mut table = String::from("k,kappa\n");
    for (k, kappa) in kappas.iter().enumerate() {
        table.push_str(&format!("{k},{}\n", format_sci(*kappa)));
    }
    write_text(&cfg.output_dir.join("kappa.csv"), &table)?;
    if let Some(report) = plateau_report(&profile, &np)? {
        write_json(&cfg.output_dir.join("plateau.json"), &report)?;
    }
    println!(
        "analyze: lambda_fit={:?} (exact {:.6}) -> {}",
        est.lambda_fit,
        est.lambda_exact,
        cfg.output_dir.display()
    );
    Ok(Outcome::Converged)
}

/// Integrates the full dynamics from a stored profile document.
pub fn cmd_evolve(profile_path: &Path, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (doc, profile) = load_profile(profile_path)?;
    let np = resolve_potential(&cfg.potential)?;
    let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
    let stride = (steps / 1000).max(1);
    let (state, report, samples) =
        evolve_with_samples(&profile, &np, doc.beta, cfg.t_final, cfg.dt, stride)?;
    let mut series = String::from("t,max_amp_deviation,phase_error,h_window,n_window\n");
    for s in &samples {
        series.push_str(&format!(
            "{},{},{},{},{}\n",
            format_sci(s.t),
            format_sci(s.max_amp_deviation),
            format_sci(s.phase_error),
            format_sci(s.h_window),
            format_sci(s.n_window),
        ));
    }
    write_text(&cfg.output_dir.join("evolution.csv"), &series)?;
    write_json(
        &cfg.output_dir.join("evolve.json"),
        &json!({
            "source": profile_path.display().to_string(),
            "beta": doc.beta,
            "t_final": state.time(),
            "dt": cfg.dt,
            "sigma": state.sigma(),
            "report": serde_json::to_value(report).expect("report serializes"),
        }),
    )?;
    println!(
        "evolve: t={} amp dev {:.3e} phase {:.3e} drifts {:.3e}/{:.3e} -> {}",
        state.time(),
        report.max_amp_deviation,
        report.phase_error,
        report.h_drift,
        report.n_drift,
        cfg.output_dir.display()
    );
    Ok(Outcome::Converged)
}

/// Prints the preset listing.
pub fn cmd_presets() {
    for p in crate::presets::all() {
        println!("{}: {}", p.name, p.summary);
        match p.spec {
            PresetSpec::Solve { potential, runs } => {
                for run in runs {
                    println!(
                        "  {} setting={} n={} beta={} tau={} steps={}",
                        run.tag, run.setting, run.n, run.beta, run.tau, run.max_steps
                    );
                }
                println!("  potential={potential}");
            }
            PresetSpec::Continuum {
                potential,
                setting,
                beta,
                window,
                eps_list,
            } => {
                println!(
                    "  potential={potential} setting={setting} beta={beta} window={window} \
                     eps={eps_list:?}"
                );
            }
        }
    }
}
