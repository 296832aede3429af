//! Compile pipelines behind `narrownet compile`, one per mode.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use narrownet::compile::{
    compile_register, compile_relu_lp, compile_square, layer_expand, lower_identities,
    lower_identities_pathological, lower_square_rho, lower_square_sigma, rescale, CutoffSpec,
    Mode, SquareOptions,
};
use narrownet::math::for_each_grid_point;
use narrownet::{DomainBox, Network, Registry};

use crate::format::shallow_nets_from_str;
use crate::parse::parse_polynomials;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    Register,
    Square,
    PolySigma,
    PolyRho,
    Pathological,
    ReluLp,
}

/// Everything `compile` needs after flag parsing.
#[derive(Debug, Clone)]
pub struct CompileSpec {
    pub mode: ModeKind,
    /// A shallow-net file path (register family) or polynomial text
    /// (square family).
    pub target: String,
    pub activation: Option<String>,
    pub domain: Option<DomainBox>,
    pub h: Option<f64>,
    pub skew: Option<f64>,
    pub recip_stages: usize,
    /// Identity emulation amplitude for the wavy activation.
    pub big_a: Option<f64>,
    /// Identity shift for the relu compiler's carries.
    pub big_n: Option<f64>,
    /// Per-axis grid density for the internal rescaling and range scans.
    pub grid: Option<usize>,
}

/// Per-neuron rescaling tuned for the paired-probe pass; see the demo of
/// the same name for the measured sweep.
const SIGMA_SKEW: f64 = 1.0 / 4096.0;
const SIGMA_TAU: f64 = 1.0 / 65_536.0;
/// The curvature probe keeps the exact-identity operating point and eats
/// the identity error through a square pre-pass at this step.
const RHO_TAU: f64 = 1.0 / 4096.0;
const RHO_IDENTITY_STEP: f64 = 1e-4;
const RESCALE_GRID: usize = 33;

fn read_target_nets(target: &str) -> Result<Vec<narrownet::compile::ShallowNet>> {
    if !Path::new(target).exists() {
        bail!("target '{target}' is not a file; this mode needs a shallow-net file");
    }
    let text = fs::read_to_string(target).with_context(|| format!("reading '{target}'"))?;
    shallow_nets_from_str(&text)
}

fn require_domain(spec: &CompileSpec) -> Result<&DomainBox> {
    spec.domain
        .as_ref()
        .context("this mode needs --domain")
}

fn require_activation<'r>(
    spec: &CompileSpec,
    reg: &'r Registry,
) -> Result<&'r narrownet::ActivationSpec> {
    let key = spec
        .activation
        .as_deref()
        .context("this mode needs --activation")?;
    reg.get(key).context("unknown activation")
}

fn square_targets(spec: &CompileSpec, domain: &DomainBox) -> Result<Vec<narrownet::poly::Polynomial>> {
    if Path::new(&spec.target).exists() {
        bail!("this mode takes the target as polynomial text, not a file");
    }
    parse_polynomials(&spec.target, domain.dim())
}

fn square_options(spec: &CompileSpec, base: SquareOptions) -> SquareOptions {
    SquareOptions {
        skew: spec.skew.unwrap_or(base.skew),
        ..base
    }
}

/// Compiles the exact-identity square-model net every polynomial lowering
/// pipeline starts from.
fn square_ideal(
    spec: &CompileSpec,
    base: SquareOptions,
    reg: &Registry,
) -> Result<(Network, DomainBox)> {
    let domain = require_domain(spec)?.clone();
    let targets = square_targets(spec, &domain)?;
    let opts = square_options(spec, base);
    let net = compile_square(
        &targets,
        &domain,
        spec.recip_stages,
        Mode::IdealIdentity,
        &opts,
        reg,
    )?;
    Ok((net, domain))
}

pub fn compile(spec: &CompileSpec, reg: &Registry) -> Result<Network> {
    if let Some(key) = spec.activation.as_deref() {
        reg.get(key).context("unknown activation")?;
    }
    match spec.mode {
        ModeKind::Register => {
            let nets = read_target_nets(&spec.target)?;
            let mode = match spec.h {
                Some(h) => Mode::Lowered(h),
                None => Mode::IdealIdentity,
            };
            Ok(compile_register(&nets, mode, reg)?)
        }
        ModeKind::Square => {
            let domain = require_domain(spec)?.clone();
            let targets = square_targets(spec, &domain)?;
            let (mode, base) = match spec.h {
                Some(h) => (Mode::Lowered(h), SquareOptions::for_lowered()),
                None => (Mode::IdealIdentity, SquareOptions::default()),
            };
            let opts = square_options(spec, base);
            Ok(compile_square(
                &targets,
                &domain,
                spec.recip_stages,
                mode,
                &opts,
                reg,
            )?)
        }
        ModeKind::PolySigma => {
            let act = require_activation(spec, reg)?;
            let base = SquareOptions {
                skew: SIGMA_SKEW,
                margin: 0.3,
                ..SquareOptions::default()
            };
            let (ideal, domain) = square_ideal(spec, base, reg)?;
            let scaled = rescale(&ideal, &domain, spec.grid.unwrap_or(RESCALE_GRID), SIGMA_TAU, reg)?;
            let expanded = layer_expand(&scaled)?;
            Ok(lower_square_sigma(&expanded, act, spec.h.unwrap_or(1e-3))?)
        }
        ModeKind::PolyRho => {
            let act = require_activation(spec, reg)?;
            let square = reg.get("square")?;
            let (ideal, domain) = square_ideal(spec, SquareOptions::for_lowered(), reg)?;
            let scaled = rescale(&ideal, &domain, spec.grid.unwrap_or(RESCALE_GRID), RHO_TAU, reg)?;
            let squared = lower_identities(&scaled, square, RHO_IDENTITY_STEP)?;
            Ok(lower_square_rho(&squared, act, spec.h.unwrap_or(1e-15))?)
        }
        ModeKind::Pathological => {
            let nets = read_target_nets(&spec.target)?;
            let ideal = compile_register(&nets, Mode::IdealIdentity, reg)?;
            let amplitude = spec
                .big_a
                .unwrap_or(2.0 * std::f64::consts::PI * 25.0);
            Ok(lower_identities_pathological(
                &ideal,
                spec.h.unwrap_or(1e-3),
                amplitude,
            )?)
        }
        ModeKind::ReluLp => {
            let nets = read_target_nets(&spec.target)?;
            let inner = require_domain(spec)?.clone();
            let compiled = compile_register(&nets, Mode::IdealIdentity, reg)?;
            let outer = inflate(&inner, 0.05)?;
            let (lo, hi) = output_range(&compiled, &inner, spec.grid.unwrap_or(RESCALE_GRID), reg)?;
            let floor = lo.min(0.0) - 1.0;
            let ceiling = hi.max(0.0) + 1.0;
            let shift = spec
                .big_n
                .unwrap_or_else(|| 5.0f64.max(floor.abs() + 1.0).max(ceiling + 1.0));
            Ok(compile_relu_lp(
                &compiled,
                &inner,
                &outer,
                &CutoffSpec {
                    floor,
                    ceiling,
                    shift,
                },
            )?)
        }
    }
}

/// Grows each side by `frac` of that dimension's length.
fn inflate(domain: &DomainBox, frac: f64) -> Result<DomainBox> {
    let mut lower = Vec::with_capacity(domain.dim());
    let mut upper = Vec::with_capacity(domain.dim());
    for k in 0..domain.dim() {
        let pad = frac * (domain.upper[k] - domain.lower[k]);
        lower.push(domain.lower[k] - pad);
        upper.push(domain.upper[k] + pad);
    }
    Ok(DomainBox::new(lower, upper)?)
}

/// Coarse output range over a grid, for picking clamp levels that the
/// compiled function never reaches inside the window.
fn output_range(
    net: &Network,
    domain: &DomainBox,
    per_dim: usize,
    reg: &Registry,
) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut failure = None;
    for_each_grid_point(&domain.lower, &domain.upper, per_dim, |x| {
        if failure.is_some() {
            return;
        }
        match net.evaluate(x, reg) {
            Ok(out) => {
                for v in out {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((lo, hi))
}
