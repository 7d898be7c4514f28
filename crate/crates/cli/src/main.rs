//! Experiment harness: load a config, run one of the four experiment
//! kinds, write traces/reports, and signal certificate outcomes through
//! the exit status (0 ok, 1 error, 2 certificate/criterion failure).

mod config;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use nalgebra::DVector;
use snake_core::*;

use config::{build_contour, load_config, ExperimentConfig, Kind};

#[derive(Parser)]
#[command(name = "snake", about = "Active contour experiment runner")]
struct Args {
    /// Experiment config file
    config: PathBuf,
    /// Output directory (overrides the config's `out` key)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write overlay.svg and field.pgm
    #[arg(long)]
    render: bool,
    /// Fail (exit 1) on soft warnings such as skipped certificate samples
    #[arg(long)]
    strict: bool,
}

/// Exit 2: the run completed but a certificate or stopping criterion was
/// not met; the written report carries the detail.
struct Outcome {
    ok: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(Outcome { ok: true }) => ExitCode::SUCCESS,
        Ok(Outcome { ok: false }) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &Args) -> Result<Outcome> {
    let cfg = load_config(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let render = args.render || cfg.render;
    match cfg.kind {
        Kind::Evolve => run_evolve(&cfg, &out_dir, render, args.strict),
        Kind::Certify => run_certify(&cfg, &out_dir, args.strict),
        Kind::Modal => run_modal(&cfg, &out_dir),
        Kind::Capture => run_capture(&cfg, &out_dir, render, args.strict),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn stiffness_for(contour: &Contour, params: &SnakeParams) -> Result<StiffnessSet> {
    Ok(StiffnessSet::build(
        contour.points().len(),
        contour.topology(),
        params,
    )?)
}

fn run_evolve(cfg: &ExperimentConfig, dir: &Path, render: bool, strict: bool) -> Result<Outcome> {
    let contour0 = build_contour(cfg.contour.as_ref().unwrap())?;
    let stiffness = stiffness_for(&contour0, &cfg.params)?;
    let stop = cfg.stop.unwrap();
    let v0 = DVector::zeros(2 * contour0.free_count());
    let out = evolve(&contour0, &v0, &cfg.field, &stiffness, &cfg.params, &stop)
        .map_err(SnakeError::from)?;
    write(&dir.join("trace.csv"), &out.trace.to_csv())?;
    write(&dir.join("final_contour.csv"), &out.contour.to_csv())?;
    let met = out.stop_reason == StopReason::Criterion;
    let system = assemble_system(&stiffness, &cfg.params)?;
    let cond = condition_diagnostics(&system, &stiffness)?;
    let residual = equilibrium_residual(&out.contour, &cfg.field, &stiffness)?;
    let report = format!(
        "criterion={}\niterations={}\nequilibrium_residual={}\nkappa_bound={}\nlambda_max_bound={}\n",
        if met { "met" } else { "unmet" },
        out.trace.records.len() - 1,
        residual,
        cond.kappa_bound,
        cond.lambda_max_bound
    );
    write(&dir.join("evolve_report.txt"), &report)?;
    if render {
        render::render_overlay(
            &cfg.field,
            &[("initial contour", &contour0), ("final contour", &out.contour)],
            dir,
        )?;
    }
    if strict && !met {
        anyhow::bail!("stopping criterion not met within max_iter");
    }
    Ok(Outcome { ok: met })
}

fn run_certify(cfg: &ExperimentConfig, dir: &Path, strict: bool) -> Result<Outcome> {
    let region = cfg.region.as_ref().unwrap();
    let step = default_grid_step(&cfg.field, region);
    let report = certify(
        &cfg.field,
        region,
        cfg.params.omega1,
        cfg.params.omega2,
        step,
        16,
    )?;
    let csv = format!("{}\n{}\n", ConvexityReport::csv_header(), report.to_csv_row());
    write(&dir.join("convexity_report.csv"), &csv)?;
    write(&dir.join("convexity_report.txt"), &report.to_kv_block())?;
    if strict && report.skipped_samples > 0 {
        anyhow::bail!(
            "{} region samples were degenerate or out of domain",
            report.skipped_samples
        );
    }
    Ok(Outcome { ok: report.holds })
}

fn run_modal(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let contour = build_contour(cfg.contour.as_ref().unwrap())?;
    let stiffness = stiffness_for(&contour, &cfg.params)?;
    let hessian = hessian_ep(&contour, &cfg.field, &stiffness)?;
    let spectrum = generalized_modes(&hessian, stiffness.m0())?
        .with_rates(cfg.params.mu, cfg.params.gamma)?;
    let classification = classify_equilibrium(&spectrum, NON_HYPERBOLIC_TOL)?;
    let residual = equilibrium_residual(&contour, &cfg.field, &stiffness)?;
    write(&dir.join("modes.csv"), &spectrum.to_csv())?;
    let txt = format!(
        "{}equilibrium_residual={}\n",
        classification.summary_kv(),
        residual
    );
    write(&dir.join("classification.txt"), &txt)?;
    Ok(Outcome { ok: true })
}

fn run_capture(cfg: &ExperimentConfig, dir: &Path, render: bool, strict: bool) -> Result<Outcome> {
    let contour = build_contour(cfg.contour.as_ref().unwrap())?;
    let stiffness = stiffness_for(&contour, &cfg.params)?;
    let region = cfg.region.as_ref().unwrap();
    let stop = cfg.stop.unwrap();
    let v0 = DVector::zeros(2 * contour.free_count());
    let cert = capture_certificate(&contour, &v0, &cfg.field, &stiffness, &cfg.params, region)?;
    let verification = verify_capture(
        &contour,
        &v0,
        &cfg.field,
        &stiffness,
        &cfg.params,
        region,
        &stop,
    )?;
    write(&dir.join("trace.csv"), &verification.trace.to_csv())?;
    let report = format!(
        "holds={}\nh0={}\nboundary_min={}\nmargin={}\nboundary_min_kind=estimate (single-point-exit)\nnever_exited={}\n",
        cert.holds, cert.h0, cert.boundary_min, cert.margin, verification.never_exited
    );
    write(&dir.join("capture_report.txt"), &report)?;
    if render {
        render::render_overlay(&cfg.field, &[("initial contour", &contour)], dir)?;
    }
    if strict {
        if let Some(err) = verification.failure {
            return Err(err).context("capture verification run failed");
        }
    }
    Ok(Outcome {
        ok: cert.holds && verification.never_exited,
    })
}
