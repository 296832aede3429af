//! Command-line front end for the narrownet compiler toolkit.
//!
//! Exit codes: 0 on success, 1 when a demo misses its accuracy budget,
//! 2 on usage errors (bad flags, unreadable files, malformed targets).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use narrownet::verify::{lp_error, lp_error_grid, sup_error, sweep_to_csv};
use narrownet::{builtin_registry, Registry};

use narrownet_cli::demos;
use narrownet_cli::format::{network_from_str, network_to_string, shallow_nets_from_str};
use narrownet_cli::parse::{parse_domain, parse_polynomials, parse_sweep};
use narrownet_cli::pipeline::{self, CompileSpec, ModeKind};

#[derive(Parser)]
#[command(
    name = "narrownet",
    version,
    about = "Compile shallow sums and polynomials into deep, narrow networks, \
             then measure how close the result stays to its target."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compile a target into a deep narrow network and print its audit.
    Compile(CompileArgs),
    /// Measure a compiled network against a target oracle.
    Verify(VerifyArgs),
    /// Run a named end-to-end scenario and report pass/fail.
    Demo {
        /// One of: register, square, poly-sigma, poly-rho, pathological,
        /// relu-lp.
        name: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Emulate a bundle of shallow nets exactly, one unit per stage.
    Register,
    /// Square-model compiler for polynomial targets.
    #[value(alias = "square-model")]
    Square,
    /// Square model lowered through paired probes of a smooth activation.
    PolySigma,
    /// Square model lowered through curvature probes of a smooth
    /// activation.
    PolyRho,
    /// Shallow-net emulation carried by the wavy activation's flat spots.
    Pathological,
    /// Relu emulation clamped to vanish outside a window.
    ReluLp,
}

impl From<ModeArg> for ModeKind {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Register => ModeKind::Register,
            ModeArg::Square => ModeKind::Square,
            ModeArg::PolySigma => ModeKind::PolySigma,
            ModeArg::PolyRho => ModeKind::PolyRho,
            ModeArg::Pathological => ModeKind::Pathological,
            ModeArg::ReluLp => ModeKind::ReluLp,
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    /// Polynomial text like "x1^2 + x1; 2*x1^3 - x1" (square family) or a
    /// shallow-net JSON file (register family).
    #[arg(long, allow_hyphen_values = true)]
    target: String,

    /// Which compile pipeline to run.
    #[arg(long, value_enum)]
    mode: ModeArg,

    /// Activation key for the lowering passes (see the built-in registry).
    #[arg(long)]
    activation: Option<String>,

    /// Input box as "l1,u1;l2,u2;..." — required by the square family.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,

    /// Emulation step for lowered identities; omit for exact identities.
    #[arg(long = "h")]
    h: Option<f64>,

    /// Refresh skew for the square model; omit for the tuned default.
    #[arg(long = "s")]
    s: Option<f64>,

    /// Newton stages in the reciprocal gadget.
    #[arg(long, default_value_t = 6)]
    recip_stages: usize,

    /// Identity emulation amplitude for the wavy activation.
    #[arg(long = "A")]
    big_a: Option<f64>,

    /// Identity shift for the relu cutoff's carries.
    #[arg(long = "N")]
    big_n: Option<f64>,

    /// Per-axis grid density for internal rescaling and range scans.
    #[arg(long)]
    grid: Option<usize>,

    /// Seed recorded with the run; compilation itself is deterministic.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Write the compiled network here as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Compiled network file to measure.
    net: PathBuf,

    /// Truth to compare against: a network file, a shallow-net JSON file,
    /// or polynomial text.
    #[arg(long, allow_hyphen_values = true)]
    target: String,

    /// Comparison box as "l1,u1;l2,u2;...".
    #[arg(long, allow_hyphen_values = true)]
    domain: String,

    /// Also report the L^p gap at this exponent.
    #[arg(long = "p")]
    p: Option<f64>,

    /// Points per axis for grid measurements; defaults to 101 up to two
    /// inputs and 21 above that.
    #[arg(long)]
    grid: Option<usize>,

    /// Estimate the L^p gap from this many random samples instead of the
    /// grid quadrature.
    #[arg(long)]
    samples: Option<usize>,

    /// Seed for sampled measurements.
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Sweep a parameter, e.g. "grid=11,21,41", and report sup per value.
    #[arg(long)]
    sweep: Option<String>,

    /// Write the sweep as CSV ("param,error" rows); needs --sweep.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Restore the default SIGPIPE disposition so piping into `head` ends
    // the process quietly instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    let reg = builtin_registry();
    match cli.cmd {
        Cmd::Compile(args) => cmd_compile(&args, &reg).map(|()| ExitCode::SUCCESS),
        Cmd::Verify(args) => cmd_verify(&args, &reg).map(|()| ExitCode::SUCCESS),
        Cmd::Demo { name } => {
            let passed = demos::run(&name)?;
            Ok(if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn cmd_compile(args: &CompileArgs, reg: &Registry) -> Result<()> {
    let spec = CompileSpec {
        mode: args.mode.into(),
        target: args.target.clone(),
        activation: args.activation.clone(),
        domain: args.domain.as_deref().map(parse_domain).transpose()?,
        h: args.h,
        skew: args.s,
        recip_stages: args.recip_stages,
        big_a: args.big_a,
        big_n: args.big_n,
        grid: args.grid,
    };
    let net = pipeline::compile(&spec, reg)?;

    // The file lands before any chatter so a closed stdout pipe can never
    // cost the caller the artifact.
    if let Some(path) = &args.out {
        let text = network_to_string(&net);
        fs::write(path, text).with_context(|| format!("writing '{}'", path.display()))?;
    }

    let audit = net.audit();
    println!("width {}", audit.width);
    println!("depth {}", audit.depth);
    let census_line = audit
        .totals()
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!("census {census_line}");
    if let Some(path) = &args.out {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Builds the truth oracle for `verify`: a network file, a shallow-net
/// bundle, or polynomial text, tried in that order.
fn target_oracle<'r>(
    target: &str,
    n_vars: usize,
    reg: &'r Registry,
) -> Result<Box<dyn FnMut(&[f64]) -> Vec<f64> + 'r>> {
    if Path::new(target).exists() {
        let text = fs::read_to_string(target).with_context(|| format!("reading '{target}'"))?;
        let probe = vec![0.0; n_vars];
        if let Ok(file) = serde_json::from_str::<narrownet_cli::format::NetworkFile>(&text) {
            let net = narrownet_cli::format::file_to_network(&file)?;
            if net.input_dim() != n_vars {
                bail!(
                    "target network takes {} inputs but the measured network takes {n_vars}",
                    net.input_dim()
                );
            }
            net.evaluate(&probe, reg)
                .context("the target network cannot be evaluated")?;
            return Ok(Box::new(move |x: &[f64]| net.evaluate(x, reg).unwrap()));
        }
        let nets = shallow_nets_from_str(&text)
            .context("target file is neither a network nor a shallow-net bundle")?;
        if nets[0].input_dim != n_vars {
            bail!(
                "target nets take {} inputs but the measured network takes {n_vars}",
                nets[0].input_dim
            );
        }
        for n in &nets {
            n.evaluate(&probe, reg)
                .context("a target net cannot be evaluated")?;
        }
        return Ok(Box::new(move |x: &[f64]| {
            nets.iter().map(|n| n.evaluate(x, reg).unwrap()).collect()
        }));
    }
    let polys = parse_polynomials(target, n_vars)?;
    Ok(Box::new(move |x: &[f64]| {
        polys.iter().map(|p| p.evaluate(x).unwrap()).collect()
    }))
}

fn cmd_verify(args: &VerifyArgs, reg: &Registry) -> Result<()> {
    let text = fs::read_to_string(&args.net)
        .with_context(|| format!("reading '{}'", args.net.display()))?;
    let net = network_from_str(&text)?;
    let domain = parse_domain(&args.domain)?;
    if domain.dim() != net.input_dim() {
        bail!(
            "--domain has {} dimensions but the network takes {} inputs",
            domain.dim(),
            net.input_dim()
        );
    }
    if args.csv.is_some() && args.sweep.is_none() {
        bail!("--csv needs --sweep");
    }

    let default_grid = if net.input_dim() <= 2 { 101 } else { 21 };
    let grid = args.grid.unwrap_or(default_grid);
    let n_vars = net.input_dim();

    // Probe once so bad activation keys surface as usage errors, not
    // panics inside the measurement closures.
    let center: Vec<f64> = (0..n_vars)
        .map(|k| 0.5 * (domain.lower[k] + domain.upper[k]))
        .collect();
    net.evaluate(&center, reg)
        .context("the network cannot be evaluated")?;

    let mut truth = target_oracle(&args.target, n_vars, reg)?;
    let mut approx = |x: &[f64]| net.evaluate(x, reg).unwrap();

    let sup = sup_error(&mut truth, &mut approx, &domain, grid)?;
    println!("sup {sup:e}");

    if let Some(p) = args.p {
        let lp = match args.samples {
            Some(samples) => lp_error(&mut truth, &mut approx, &domain, p, samples, args.seed)?,
            None => lp_error_grid(&mut truth, &mut approx, &domain, p, grid)?,
        };
        println!("l{p} {lp:e}");
    }

    if let Some(sweep) = &args.sweep {
        let (param, values) = parse_sweep(sweep)?;
        if param != "grid" {
            bail!("only 'grid' can be swept, got '{param}'");
        }
        let mut table = Vec::with_capacity(values.len());
        for v in &values {
            let per_dim = *v as usize;
            if per_dim < 2 || (*v - per_dim as f64).abs() > 0.0 {
                bail!("grid sweep values must be whole numbers of at least 2, got {v}");
            }
            let e = sup_error(&mut truth, &mut approx, &domain, per_dim)?;
            println!("grid {per_dim} sup {e:e}");
            table.push((*v, e));
        }
        if let Some(path) = &args.csv {
            fs::write(path, sweep_to_csv(&table))
                .with_context(|| format!("writing '{}'", path.display()))?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
