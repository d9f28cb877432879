use std::path::Path;

use anyhow::{Context, Result};
use rcm_core::export::{self, Metadata};
use rcm_core::render::{render_svg, RenderOptions};
use rcm_core::{
    build, components, decay_fit, estimate_beta_c, event_b_r, explore_complex, osss_check, sample, theta_sweep,
    up_graph, window_for_radius, Complex, Realization, RunConfig, Setup,
};
use serde::Serialize;

use crate::Command;

pub fn run(command: &Command, config: &RunConfig) -> Result<String> {
    let meta = Metadata::new(config.master_seed, config.hash()?);
    let out = config.out.as_path();
    match command {
        Command::Build => cmd_build(config, &meta, out),
        Command::Render { scale } => cmd_render(config, out, *scale),
        Command::Explore => cmd_explore(config, &meta, out),
        Command::Sweep => cmd_sweep(config, &meta, out),
        Command::Betac => cmd_betac(config, &meta, out),
        Command::Decay => cmd_decay(config, &meta, out),
        Command::Osss => cmd_osss(config, &meta, out),
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    let path = out.join(name);
    export::write_atomic(&path, contents.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

/// The single realization used by `build`, `render` and `explore`.
fn realization(config: &RunConfig) -> Result<(Realization, Complex)> {
    let grid = config.model().grid()?;
    let window = window_for_radius(config.radii[0], grid, config.family.cutoff)?;
    let real = sample(config.master_seed, config.betas[0], &window, &config.marks, true)?;
    let complex = build(&real, &config.family)?;
    Ok((real, complex))
}

fn cmd_build(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<String> {
    let (real, complex) = realization(config)?;
    write(out, "complex.json", &export::complex_document(meta, &complex)?)?;
    write(out, "points.csv", &export::points_csv(&real))?;
    let comps = components(&up_graph(&complex, config.q)?);
    write(out, "components.csv", &export::histogram_csv(&comps))?;
    Ok(format!(
        "build: {} vertices, face counts {:?}, {} components in G_{}",
        complex.vertices.len(),
        complex.face_counts(),
        comps.count(),
        config.q
    ))
}

fn cmd_render(config: &RunConfig, out: &Path, scale: f64) -> Result<String> {
    let (_, complex) = realization(config)?;
    let r = config.radii[0];
    let s = config.spheres(r)[0];
    let trace = explore_complex(&complex, config.q, r, s)?;
    let svg = render_svg(&complex, Some(&trace), &RenderOptions { r, s, scale })?;
    write(out, "render.svg", &svg)?;
    Ok(format!("render: {} bytes to {}", svg.len(), out.join("render.svg").display()))
}

#[derive(Serialize)]
struct ExploreOutput<'a> {
    trace: &'a rcm_core::ExplorationTrace,
    event_b_r: bool,
}

fn cmd_explore(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<String> {
    let (_, complex) = realization(config)?;
    let r = config.radii[0];
    let s = config.spheres(r)[0];
    let trace = explore_complex(&complex, config.q, r, s)?;
    let direct = event_b_r(&complex, config.q, r)?.occurred;
    let doc = ExploreOutput {
        trace: &trace,
        event_b_r: direct,
    };
    write(out, "trace.json", &export::to_json(meta, &doc)?)?;
    Ok(format!(
        "explore: decision {}, direct check {}, revealed {} + {} cubes",
        trace.decision,
        direct,
        trace.initial.len(),
        trace.revealed.len()
    ))
}

fn cmd_sweep(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<String> {
    let sweep = theta_sweep(&config.model(), &[config.q], &config.betas, &config.radii, config.n, config.master_seed)?;
    write(out, "sweep.csv", &export::sweep_csv(&sweep))?;
    write(out, "sweep.json", &export::to_json(meta, &sweep)?)?;
    Ok(format!("sweep: {} cells, n = {} each", sweep.cells.len(), sweep.n))
}

fn cmd_betac(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<String> {
    let est = estimate_beta_c(&config.model(), config.q, &config.critical(), config.master_seed)?;
    write(out, "betac.csv", &export::sweep_csv(&est.sweep))?;
    write(out, "betac.json", &export::to_json(meta, &est)?)?;
    Ok(format!(
        "betac: crossing {:.4} [{:.4}, {:.4}], bisection {:.4} [{:.4}, {:.4}], agree {}",
        est.crossing.beta_c_hat,
        est.crossing.ci_lo,
        est.crossing.ci_hi,
        est.bisection.beta_c_hat,
        est.bisection.ci_lo,
        est.bisection.ci_hi,
        est.methods_agree()
    ))
}

#[derive(Serialize)]
struct Fits {
    fits: Vec<rcm_core::DecayFit>,
}

fn cmd_decay(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<String> {
    let model = config.model();
    let fits = config
        .betas
        .iter()
        .map(|&beta| decay_fit(&model, config.q, beta, &config.radii, config.n, config.master_seed))
        .collect::<rcm_core::Result<Vec<_>>>()?;
    let summary: Vec<String> = fits
        .iter()
        .map(|f| match (f.decay_rate, f.fit) {
            (Some(c), Some(fit)) => format!("beta {}: c = {c:.4}, R^2 = {:.4}", f.beta, fit.r_squared),
            _ => format!("beta {}: degenerate", f.beta),
        })
        .collect();
    write(out, "decay.json", &export::to_json(meta, &Fits { fits })?)?;
    Ok(format!("decay: {}", summary.join("; ")))
}

#[derive(Serialize)]
struct Reports {
    reports: Vec<rcm_core::OsssReport>,
}

fn cmd_osss(config: &RunConfig, meta: &Metadata, out: &Path) -> Result<String> {
    let r = config.radii[0];
    let s_values = config.spheres(r);
    let mut reports = Vec::new();
    for &beta in &config.betas {
        let setup = Setup {
            family: &config.family,
            law: &config.marks,
            dim: config.dim,
            beta,
            q: config.q,
            r,
        };
        for &s in &s_values {
            reports.push(osss_check(&setup, s, config.n, config.master_seed)?);
        }
    }
    let summary: Vec<String> = reports
        .iter()
        .map(|x| format!("beta {} s {}: lhs {:.4} rhs {:.4} margin {:.4}", x.beta, x.s, x.lhs, x.rhs, x.margin))
        .collect();
    write(out, "osss.json", &export::to_json(meta, &Reports { reports })?)?;
    Ok(format!("osss: {}", summary.join("; ")))
}
