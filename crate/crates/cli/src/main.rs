//! `fdlbm`: linear analysis, benchmark flows and table reproduction.
//!
//! Exit status: 0 success, 2 invalid configuration, 3 numerical failure
//! (instability, failed fit, mode contamination), 4 internal error.

mod config;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use config::{ConfigError, RunConfig};
use fdlbm::experiments::reproduce::{reproduce_with, ReproduceOptions};
use fdlbm::experiments::shear_wave::predicted_gamma;
use fdlbm::experiments::{run_poiseuille, run_shear_wave, run_stokes_disk};
use fdlbm::report::{num, Csv};
use fdlbm::vonneumann::{along, dispersion_modes, effective_viscosity_curve, CurveOptions, LinearKernel};
use fdlbm::{SchemeKind, StencilKind, Target, WallRule};
use output::Outputs;

/// Environment variable that fixes the number of worker threads.
const THREADS_VAR: &str = "FDLBM_THREADS";

#[derive(Debug, Parser)]
#[command(name = "fdlbm", version, about = "D2Q9 lattice Boltzmann workbench")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues at one wave number, or dispersion and viscosity curves.
    Analyze {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// Wave-vector direction in degrees.
        #[arg(long)]
        phi: Option<f64>,
        /// Mean flow speed along the wave vector.
        #[arg(long)]
        speed: Option<f64>,
        /// Report the eigenvalues of H(k) at this wave number only.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Decay of an advected transverse wave on a periodic grid.
    ShearWave {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        speed: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Decay of a Stokes eigenmode in a disk.
    StokesDisk {
        #[command(flatten)]
        scheme: SchemeArgs,
        /// `singlet-<l>` or `doublet-<m>`.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Force-driven channel flow and the apparent wall position.
    Poiseuille {
        #[command(flatten)]
        scheme: SchemeArgs,
        #[arg(long)]
        xi: Option<f64>,
        #[arg(long, value_parser = parse_wall_rule)]
        wall_rule: Option<WallRule>,
    },
    /// Reproduce tables and figure data.
    Tables {
        /// Comma-separated targets, or `all`.
        #[arg(long, value_delimiter = ',', value_parser = parse_target)]
        which: Vec<Vec<Target>>,
        #[arg(long)]
        shear_steps: Option<usize>,
        #[arg(long)]
        stokes_steps: Option<usize>,
    },
    /// Run the invariant checks.
    Selftest,
}

#[derive(Debug, Args)]
struct SchemeArgs {
    /// mrt, bgk, acm or fd-lbm.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    nu: Option<f64>,
    /// 3, 5 or 9.
    #[arg(long, value_parser = parse_stencil)]
    stencil: Option<StencilKind>,
    #[arg(long)]
    s_q: Option<f64>,
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    s.parse().map_err(|e: fdlbm::Error| e.to_string())
}

fn parse_stencil(s: &str) -> Result<StencilKind, String> {
    s.parse().map_err(|e: fdlbm::Error| e.to_string())
}

fn parse_target(s: &str) -> Result<Vec<Target>, String> {
    if s == "all" {
        return Ok(Target::ALL.to_vec());
    }
    s.parse().map(|t| vec![t]).map_err(|e: fdlbm::Error| e.to_string())
}

fn parse_wall_rule(s: &str) -> Result<WallRule, String> {
    match s {
        "bounce-back" => Ok(WallRule::BounceBack),
        "interpolated" => Ok(WallRule::Interpolated),
        _ => Err(format!("unknown wall rule {s:?}")),
    }
}

impl SchemeArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let s = &mut cfg.scheme;
        if let Some(k) = self.scheme {
            s.kind = k;
        }
        if let Some(nu) = self.nu {
            s.nu = nu;
        }
        if let Some(st) = self.stencil {
            s.stencil = st;
        }
        if self.s_q.is_some() {
            s.s_q = self.s_q;
        }
    }
}

/// Resolve the configuration: file, then flags.
fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    match &cli.command {
        Command::Analyze { scheme, phi, speed, k, k_max, delta } => {
            scheme.apply(&mut cfg);
            let a = &mut cfg.analyze;
            a.phi_deg = phi.unwrap_or(a.phi_deg);
            a.speed = speed.unwrap_or(a.speed);
            a.k = k.or(a.k);
            a.k_max = k_max.unwrap_or(a.k_max);
            a.delta = delta.unwrap_or(a.delta);
        }
        Command::ShearWave { scheme, n, speed, steps } => {
            scheme.apply(&mut cfg);
            let s = &mut cfg.shear_wave;
            s.n = n.or(s.n);
            s.speed = speed.or(s.speed);
            s.steps = steps.or(s.steps);
        }
        Command::StokesDisk { scheme, mode, steps } => {
            scheme.apply(&mut cfg);
            let s = &mut cfg.stokes_disk;
            if mode.is_some() {
                s.mode = mode.clone();
            }
            s.steps = steps.or(s.steps);
        }
        Command::Poiseuille { scheme, xi, wall_rule } => {
            scheme.apply(&mut cfg);
            let s = &mut cfg.poiseuille;
            s.xi = xi.or(s.xi);
            s.wall_rule = wall_rule.or(s.wall_rule);
        }
        Command::Tables { which, shear_steps, stokes_steps } => {
            let t = &mut cfg.tables;
            if !which.is_empty() {
                t.which = which.concat();
                t.which.dedup();
            }
            t.shear_steps = shear_steps.unwrap_or(t.shear_steps);
            t.stokes_steps = stokes_steps.unwrap_or(t.stokes_steps);
        }
        Command::Selftest => {}
    }
    Ok(cfg)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Analyze { .. } => "analyze",
        Command::ShearWave { .. } => "shear-wave",
        Command::StokesDisk { .. } => "stokes-disk",
        Command::Poiseuille { .. } => "poiseuille",
        Command::Tables { .. } => "tables",
        Command::Selftest => "selftest",
    }
}

fn analyze(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let scheme = cfg.scheme.build()?;
    let a = &cfg.analyze;
    let phi = a.phi_deg.to_radians();
    let velocity = along(phi, a.speed);
    out.resolved("scheme", &scheme)?;
    out.derived("phi_rad", phi);
    out.derived("velocity", vec![velocity[0], velocity[1]]);

    if let Some(k) = a.k {
        let kernel = LinearKernel::build(&scheme, velocity, 1.0, a.delta)?;
        let mut z = kernel.matrix(k * phi.cos(), k * phi.sin()).eigenvalues()?;
        z.sort_by(|p, q| (p - 1.0).norm().total_cmp(&(q - 1.0).norm()));
        let unit = z.iter().filter(|z| (*z - 1.0).norm() < 1e-8).count();
        let mut csv = Csv::new(["index", "re_z", "im_z", "modulus", "re_gamma", "im_gamma"]);
        for (i, z) in z.iter().enumerate() {
            let g = -z.ln();
            csv.push([i.to_string(), num(z.re), num(z.im), num(z.norm()), num(g.re), num(g.im)]);
        }
        println!("eigenvalues of H(k) at k = {k}, phi = {} deg ({}):", a.phi_deg, scheme.label());
        for z in &z {
            println!("  {:+.9} {:+.9}i  |z| = {:.9}", z.re, z.im, z.norm());
        }
        println!("eigenvalue 1 multiplicity: {unit}");
        out.derived("unit_eigenvalue_multiplicity", unit as i64);
        out.csv("eigenvalues", &csv, &[("k".into(), k.to_string()), ("delta".into(), a.delta.to_string())]);
        return Ok(());
    }

    let ks: Vec<f64> = (1..=a.samples).map(|i| a.k_max * i as f64 / a.samples as f64).collect();
    let disp = dispersion_modes(&scheme, velocity, phi, &ks)?;
    if let Some((k, m)) = disp.first_unstable() {
        out.derived("first_unstable_k", k);
        out.derived("first_unstable_modulus", m);
        println!("growing mode: |z| = {m:.9} at k = {k:.6}");
    }
    let opts = CurveOptions {
        velocity,
        k_max: a.k_max,
        fit_k_max: a.fit_k_max,
        fit_samples: a.fit_samples,
        table_samples: a.samples,
    };
    let curve = effective_viscosity_curve(&scheme, phi, &opts)?;
    let f = curve.fit;
    println!("nu0 = {:.9e}  nu2 = {:.9e}  nu4 = {:.9e}  c_s = {:.9e}  sound damping = {:.9e}", f.nu0, f.nu2, f.nu4, f.c_s, f.gamma_s);
    out.derived("nu0", f.nu0);
    out.derived("nu2", f.nu2);
    out.derived("nu4", f.nu4);
    out.derived("c_s", f.c_s);
    out.derived("sound_damping", f.gamma_s);
    out.derived("fit_residual", f.residual);
    out.derived("fit_points", f.fit_points as i64);
    let params = vec![("phi_deg".into(), a.phi_deg.to_string()), ("speed".into(), a.speed.to_string())];
    out.csv("dispersion", &disp.to_csv(), &params);
    out.csv("viscosity", &curve.to_csv(), &params);
    Ok(())
}

fn shear_wave(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let spec = cfg.shear_wave_spec()?;
    let run = run_shear_wave(&spec)?;
    let g = predicted_gamma(&spec)?;
    out.resolved("shear_wave", &spec)?;
    out.derived("k", run.k);
    out.derived("gamma", run.gamma());
    out.derived("omega", run.omega);
    out.derived("gamma_dispersion", g.re);
    out.derived("omega_dispersion", g.im);
    out.derived("fit_window", vec![run.fit.window.0 as i64, run.fit.window.1 as i64]);
    println!("Gamma = {:.9e} (dispersion {:.9e}), Gamma/k^2 = {:.9e}", run.gamma(), g.re, run.viscosity());
    let mut csv = Csv::new(["step", "correlation", "modulus", "phase"]);
    for s in &run.samples {
        csv.push([s.step.to_string(), num(s.correlation), num(s.modulus), num(s.phase)]);
    }
    out.csv("shear_wave", &csv, &[]);
    Ok(())
}

fn stokes_disk(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let spec = cfg.stokes_spec()?;
    let run = run_stokes_disk(&spec)?;
    out.resolved("stokes_disk", &spec)?;
    out.derived("root", run.root);
    out.derived("gamma_theory", run.theory);
    out.derived("gamma_measured", run.measured);
    out.derived("relative_error", run.relative_error);
    out.derived("purity", run.purity);
    println!(
        "{}: Gamma = {:.9e}, theory {:.9e}, relative error {:+.6e}",
        spec.mode.label(),
        run.measured,
        run.theory,
        run.relative_error
    );
    let mut csv = Csv::new(["step", "projection"]);
    for (step, p) in &run.projection {
        csv.push([step.to_string(), num(*p)]);
    }
    out.csv("stokes_disk", &csv, &[]);
    Ok(())
}

fn poiseuille(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let spec = cfg.poiseuille_spec()?;
    let run = run_poiseuille(&spec)?;
    out.resolved("poiseuille", &spec)?;
    out.derived("xi_measured", run.xi_measured);
    out.derived("xi_bottom", run.xi_bottom);
    out.derived("xi_top", run.xi_top);
    out.derived("u_max", run.u_max);
    out.derived("profile_residual", run.residual);
    out.derived("steps", run.steps as i64);
    println!("xi = {}: measured {:.9} after {} steps", spec.xi, run.xi_measured, run.steps);
    let mut csv = Csv::new(["y", "u_x"]);
    for (y, u) in &run.profile {
        csv.push([num(*y), num(*u)]);
    }
    out.csv("poiseuille", &csv, &[]);
    Ok(())
}

fn tables(cfg: &RunConfig, out: &mut Outputs) -> anyhow::Result<()> {
    let t = &cfg.tables;
    let opts = ReproduceOptions {
        shear_steps: t.shear_steps,
        stokes_steps: t.stokes_steps,
        curve_simulation: t.curve_simulation,
    };
    for target in &t.which {
        for artifact in reproduce_with(*target, &opts)? {
            println!("{}: {} rows", artifact.name, artifact.csv.len());
            out.csv(&artifact.name, &artifact.csv, &artifact.parameters);
        }
    }
    Ok(())
}

fn selftest(out: &mut Outputs) -> anyhow::Result<bool> {
    let checks = selftest::run()?;
    for c in &checks {
        println!("[{}] {}: {:.3e} (limit {:.0e})", if c.passed() { "PASS" } else { "FAIL" }, c.name, c.value, c.limit);
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    out.derived("failed", failed as i64);
    out.csv("selftest", &selftest::to_csv(&checks), &[]);
    Ok(failed == 0)
}

/// A numerical check failed; outputs were still written.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "one or more self-test checks failed")
    }
}

impl std::error::Error for ChecksFailed {}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let cfg = resolve(cli)?;
    let mut out = Outputs::default();
    let mut checks_ok = true;
    match &cli.command {
        Command::Analyze { .. } => analyze(&cfg, &mut out)?,
        Command::ShearWave { .. } => shear_wave(&cfg, &mut out)?,
        Command::StokesDisk { .. } => stokes_disk(&cfg, &mut out)?,
        Command::Poiseuille { .. } => poiseuille(&cfg, &mut out)?,
        Command::Tables { .. } => tables(&cfg, &mut out)?,
        Command::Selftest => checks_ok = selftest(&mut out)?,
    }
    let written = out.commit(&cfg.output.dir, command_name(&cli.command), &cfg).context("writing outputs")?;
    for path in written {
        println!("wrote {}", path.display());
    }
    if checks_ok {
        Ok(())
    } else {
        Err(ChecksFailed.into())
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if err.downcast_ref::<ChecksFailed>().is_some() {
        return 3;
    }
    match err.downcast_ref::<fdlbm::Error>() {
        Some(e) if e.is_numerical() => 3,
        Some(_) => 2,
        None => 4,
    }
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value.parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError(format!("{THREADS_VAR}={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().map_err(anyhow::Error::from).and_then(|_| execute(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
