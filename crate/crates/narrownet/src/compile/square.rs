//! Polynomial compiler over the square activation at width n + m + 1.
//!
//! Inputs are first remapped affinely into [1 + margin, 2 - margin] per
//! coordinate, so every wire value is a valid argument for the staged
//! reciprocal. Wires follow the register layout [y_1 .. y_n, comp,
//! out_1 .. out_m]. Outputs 2..m accumulate their rewritten polynomials
//! through plain multiplication chains; output 1 is built by the nested
//! scheme that walks its terms from the top, dividing and multiplying by
//! each monomial through in-place reciprocal refreshes of the input wires.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::act::Registry;
use crate::compile::build::NetworkBuilder;
use crate::compile::lower::lower_identities;
use crate::compile::rescale::rescale;
use crate::compile::Mode;
use crate::error::Error;
use crate::net::{ActivationTag, Network};
use crate::net::Box as DomainBox;
use crate::poly::Polynomial;
use crate::Result;

/// Left-to-right multiplication order for one monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPlan {
    /// Variable the chain starts from.
    pub start: usize,
    /// Variables multiplied in, one squaring layer each.
    pub mults: Vec<usize>,
}

/// Plans `prod_k x_k^(e_k)` as start * mults, using degree - 1 products.
pub fn plan_monomial_chain(exps: &[u32]) -> Result<ChainPlan> {
    let mut factors = Vec::new();
    for (k, &e) in exps.iter().enumerate() {
        for _ in 0..e {
            factors.push(k);
        }
    }
    match factors.len() {
        0 => Err(Error::Precondition(
            "a constant term has no multiplication chain".to_string(),
        )),
        1 => Ok(ChainPlan {
            start: factors[0],
            mults: Vec::new(),
        }),
        d => {
            let start = factors[d - 2];
            let mut mults = vec![factors[d - 1]];
            for i in (0..d - 2).rev() {
                mults.push(factors[i]);
            }
            Ok(ChainPlan { start, mults })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquareOptions {
    /// Skew of the fused square-and-multiply blocks inside refreshes.
    pub skew: f64,
    /// Distance of the remapped inputs from the ends of (1, 2).
    pub margin: f64,
    /// Magnitude target for the pre-lowering rescale pass.
    pub rescale_tau: f64,
    /// Grid points per axis when probing magnitudes for the rescale.
    pub rescale_grid: usize,
}

impl Default for SquareOptions {
    fn default() -> Self {
        Self {
            // 2^-26: small enough that the skew residual sits well below
            // any realistic tolerance when the arithmetic is exact.
            skew: 1.0 / 67_108_864.0,
            margin: 0.15,
            // 2^-13.
            rescale_tau: 1.0 / 8192.0,
            rescale_grid: 33,
        }
    }
}

impl SquareOptions {
    /// Operating point tuned for lowered evaluation. A refresh divides the
    /// noise of one probe pair by 2 * skew, so the tiny default skew that is
    /// ideal for exact arithmetic amplifies probe noise catastrophically
    /// once every identity is finite-difference approximated. A larger
    /// skew trades a visible skew residual against that amplification; the
    /// wider margin keeps the refresh inputs away from the ends of (1, 2)
    /// where the residual compounds fastest.
    pub fn for_lowered() -> Self {
        Self {
            // 2^-15: near the minimum of skew_residual + noise / skew.
            skew: 1.0 / 32_768.0,
            margin: 0.3,
            // 2^-12.
            rescale_tau: 1.0 / 4096.0,
            rescale_grid: 33,
        }
    }
}

fn square_tag() -> ActivationTag {
    ActivationTag::named("square")
}

/// target *= wire(factor), one squaring layer plus a folded combine.
fn mult_into(
    b: &mut NetworkBuilder,
    target: usize,
    scratch: usize,
    factor: usize,
) -> Result<()> {
    b.set_wires(&[
        (target, &[(target, 1.0), (factor, 1.0)], 0.0),
        (scratch, &[(target, 1.0), (factor, -1.0)], 0.0),
    ])?;
    b.emit_with(&[(target, square_tag()), (scratch, square_tag())])?;
    b.set_wire(target, &[(target, 0.25), (scratch, -0.25)], 0.0)
}

/// target = monomial(plan) over the current in-wire values.
fn chain_into(b: &mut NetworkBuilder, target: usize, scratch: usize, plan: &ChainPlan) -> Result<()> {
    b.set_wire(target, &[(plan.start, 1.0)], 0.0)?;
    for &f in &plan.mults {
        mult_into(b, target, scratch, f)?;
    }
    Ok(())
}

/// In-place reciprocal of one wire: wire <- (2 - wire) * prod (1 + eta_i),
/// eta running on the helper wire. 1 + 2 * stages layers; the final divide
/// of each stage folds into the next emitted layer.
fn refresh_wire(
    b: &mut NetworkBuilder,
    wire: usize,
    helper: usize,
    stages: usize,
    s: f64,
) -> Result<()> {
    b.set_wire(helper, &[(wire, -1.0)], 1.0)?;
    b.set_wire(wire, &[(wire, -1.0)], 2.0)?;
    b.emit_with(&[(helper, square_tag())])?;
    let c = 1.0 / (2.0 * s);
    for _ in 0..stages {
        // zeta1 = (eta + s zeta + 1)^2 on the wire; helper keeps eta.
        b.set_wire(wire, &[(helper, 1.0), (wire, s)], 1.0)?;
        b.emit_with(&[(wire, square_tag())])?;
        // zeta2 = zeta1 - 2 eta - 1 reads eta before the helper squares it.
        b.set_wire(wire, &[(wire, 1.0), (helper, -2.0)], -1.0)?;
        b.emit_with(&[(helper, square_tag())])?;
        // zeta3 = (zeta2 - eta^2) / (2 s), folded.
        b.set_wire(wire, &[(wire, c), (helper, -c)], 0.0)?;
    }
    Ok(())
}

pub fn compile_square(
    targets: &[Polynomial],
    domain: &DomainBox,
    recip_stages: usize,
    mode: Mode,
    opts: &SquareOptions,
    reg: &Registry,
) -> Result<Network> {
    let m = targets.len();
    if m == 0 {
        return Err(Error::Precondition(
            "square compilation needs at least one target".to_string(),
        ));
    }
    let n = domain.dim();
    for t in targets {
        if t.n_vars() != n {
            return Err(Error::Dimension(
                "target variable count does not match the domain".to_string(),
            ));
        }
    }
    if !(opts.margin > 0.0 && opts.margin < 0.5) {
        return Err(Error::Precondition(
            "remap margin must lie in (0, 1/2)".to_string(),
        ));
    }
    if opts.skew == 0.0 || !opts.skew.is_finite() {
        return Err(Error::Precondition(
            "refresh skew must be nonzero and finite".to_string(),
        ));
    }

    // Affine remap of each coordinate onto [1 + margin, 2 - margin].
    let mut scale = vec![0.0; n];
    let mut offset = vec![0.0; n];
    let mut inv_scale = vec![0.0; n];
    let mut inv_offset = vec![0.0; n];
    for k in 0..n {
        scale[k] = (1.0 - 2.0 * opts.margin) / (domain.upper[k] - domain.lower[k]);
        offset[k] = (1.0 + opts.margin) - scale[k] * domain.lower[k];
        inv_scale[k] = 1.0 / scale[k];
        inv_offset[k] = -offset[k] / scale[k];
    }
    let rewritten: Vec<Polynomial> = targets
        .iter()
        .map(|t| t.substitute_affine(&inv_scale, &inv_offset))
        .collect::<Result<Vec<_>>>()?;

    let comp = n;
    let out = |i: usize| n + 1 + i;
    let mut b = NetworkBuilder::new(n, n + m + 1)?;
    for k in 0..n {
        b.set_wire(k, &[(k, scale[k])], offset[k])?;
    }

    let mut out_bias = vec![0.0; m];

    // Outputs 2..m: plain chain-and-accumulate, comp as the chain target
    // and the first output wire as squaring scratch.
    for i in 1..m {
        for term in rewritten[i].terms() {
            match term.degree() {
                0 => out_bias[i] += term.coeff,
                1 => {
                    let var = term.exps.iter().position(|&e| e > 0).unwrap();
                    b.set_wire(out(i), &[(out(i), 1.0), (var, term.coeff)], 0.0)?;
                }
                _ => {
                    let plan = plan_monomial_chain(&term.exps)?;
                    chain_into(&mut b, comp, out(0), &plan)?;
                    b.set_wire(out(i), &[(out(i), 1.0), (comp, term.coeff)], 0.0)?;
                }
            }
        }
    }

    // Output 1: nested walk from the top term. The running value acc lives
    // on the first output wire and satisfies, after handling term j,
    // acc = gamma_j + (c_{j+1} / c_j) acc_prev, so c_1 * acc is the target.
    let terms = rewritten[0].terms();
    let mut lead = 1.0;
    match terms.len() {
        0 => {}
        1 => {
            let term = &terms[0];
            match term.degree() {
                0 => out_bias[0] += term.coeff,
                1 => {
                    let var = term.exps.iter().position(|&e| e > 0).unwrap();
                    b.set_wire(out(0), &[(var, term.coeff)], 0.0)?;
                }
                _ => {
                    let plan = plan_monomial_chain(&term.exps)?;
                    chain_into(&mut b, out(0), comp, &plan)?;
                    b.set_wire(out(0), &[(out(0), term.coeff)], 0.0)?;
                }
            }
        }
        mm => {
            let top = &terms[mm - 1];
            let plan = plan_monomial_chain(&top.exps)?;
            chain_into(&mut b, out(0), comp, &plan)?;
            for j in (0..mm - 1).rev() {
                let ratio = terms[j + 1].coeff / terms[j].coeff;
                let theta = &terms[j].exps;
                if theta.iter().all(|&e| e == 0) {
                    // Empty monomial: the division and multiplication are
                    // empty products, so only the affine step remains.
                    b.set_wire(out(0), &[(out(0), ratio)], 1.0)?;
                    continue;
                }
                for k in 0..n {
                    refresh_wire(&mut b, k, comp, recip_stages, opts.skew)?;
                }
                for (k, &e) in theta.iter().enumerate() {
                    for _ in 0..e {
                        mult_into(&mut b, out(0), comp, k)?;
                    }
                }
                b.set_wire(out(0), &[(out(0), ratio)], 1.0)?;
                for k in 0..n {
                    refresh_wire(&mut b, k, comp, recip_stages, opts.skew)?;
                }
                for (k, &e) in theta.iter().enumerate() {
                    for _ in 0..e {
                        mult_into(&mut b, out(0), comp, k)?;
                    }
                }
            }
            lead = terms[0].coeff;
        }
    }

    let mut readout_terms: Vec<[(usize, f64); 1]> = Vec::with_capacity(m);
    readout_terms.push([(out(0), lead)]);
    for i in 1..m {
        readout_terms.push([(out(i), 1.0)]);
    }
    let readout: Vec<(&[(usize, f64)], f64)> = readout_terms
        .iter()
        .zip(out_bias.iter())
        .map(|(t, &bias)| (t.as_slice(), bias))
        .collect();
    let ideal = b.finish(&readout)?;

    match mode {
        Mode::IdealIdentity => Ok(ideal),
        Mode::Lowered(h) => {
            let scaled = rescale(&ideal, domain, opts.rescale_grid, opts.rescale_tau, reg)?;
            lower_identities(&scaled, reg.get("square")?, h)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::builtin_registry;
    use crate::math::{abs, for_each_grid_point, linspace};
    use crate::poly::Polynomial;

    fn poly(n: usize, terms: &[(f64, &[u32])]) -> Polynomial {
        Polynomial::new(
            n,
            terms
                .iter()
                .map(|(c, e)| crate::poly::Term {
                    coeff: *c,
                    exps: e.to_vec(),
                })
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn chain_plans() {
        let p = plan_monomial_chain(&[2, 1, 1]).unwrap();
        assert_eq!(p.start, 1);
        assert_eq!(p.mults, vec![2, 0, 0]);
        let p = plan_monomial_chain(&[1]).unwrap();
        assert_eq!(p.start, 0);
        assert!(p.mults.is_empty());
        let p = plan_monomial_chain(&[3]).unwrap();
        assert_eq!(p.start, 0);
        assert_eq!(p.mults, vec![0, 0]);
        assert!(plan_monomial_chain(&[0, 0]).is_err());
    }

    #[test]
    fn affine_targets_fold_to_zero_depth() {
        let reg = builtin_registry();
        let dom = DomainBox::interval(1.2, 1.8).unwrap();
        let target = poly(1, &[(1.0, &[1])]);
        let net = compile_square(
            &[target.clone()],
            &dom,
            4,
            Mode::IdealIdentity,
            &SquareOptions::default(),
            &reg,
        )
        .unwrap();
        assert_eq!(net.audit().depth, 0);
        for x in linspace(1.2, 1.8, 31) {
            let got = net.evaluate(&[x], &reg).unwrap()[0];
            assert!(abs(got - x) < 1e-12, "x={x} got={got}");
        }
    }

    #[test]
    fn quadratic_single_target_shape_and_accuracy() {
        let reg = builtin_registry();
        let dom = DomainBox::interval(1.2, 1.8).unwrap();
        let target = poly(1, &[(1.0, &[2]), (1.0, &[1])]);
        let stages = 6;
        let net = compile_square(
            &[target.clone()],
            &dom,
            stages,
            Mode::IdealIdentity,
            &SquareOptions::default(),
            &reg,
        )
        .unwrap();
        let audit = net.audit();
        assert_eq!(audit.width, 3);
        // gamma chain (1) + one refreshed iteration (2 * (2 stages + 1) + 2).
        assert_eq!(audit.depth, 1 + 2 * (2 * stages + 1) + 2);
        let mut worst = 0.0f64;
        for x in linspace(1.2, 1.8, 101) {
            let got = net.evaluate(&[x], &reg).unwrap()[0];
            worst = worst.max(abs(got - target.evaluate(&[x]).unwrap()));
        }
        assert!(worst < 1e-5, "worst {worst}");
    }

    #[test]
    fn two_targets_two_variables() {
        let reg = builtin_registry();
        let dom = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let lead = poly(2, &[(1.0, &[1, 1]), (1.0, &[0, 0])]);
        let second = poly(2, &[(1.0, &[1, 0]), (1.0, &[0, 1]), (-0.5, &[2, 0])]);
        let net = compile_square(
            &[lead.clone(), second.clone()],
            &dom,
            6,
            Mode::IdealIdentity,
            &SquareOptions::default(),
            &reg,
        )
        .unwrap();
        assert_eq!(net.audit().width, 5);
        let mut worst = 0.0f64;
        for_each_grid_point(&[0.0, 0.0], &[1.0, 1.0], 21, |x| {
            let got = net.evaluate(x, &reg).unwrap();
            worst = worst.max(abs(got[0] - lead.evaluate(x).unwrap()));
            worst = worst.max(abs(got[1] - second.evaluate(x).unwrap()));
        });
        assert!(worst < 3e-4, "worst {worst}");
    }

    #[test]
    fn lowered_mode_is_all_square_and_close() {
        let reg = builtin_registry();
        let dom = DomainBox::interval(1.2, 1.8).unwrap();
        let target = poly(1, &[(1.0, &[2]), (1.0, &[1])]);
        let net = compile_square(
            &[target.clone()],
            &dom,
            6,
            Mode::Lowered(1e-4),
            &SquareOptions::for_lowered(),
            &reg,
        )
        .unwrap();
        for layer in net.layers() {
            for tag in &layer.activations {
                assert_eq!(tag.name(), "square");
            }
        }
        let mut worst = 0.0f64;
        for x in linspace(1.2, 1.8, 101) {
            let got = net.evaluate(&[x], &reg).unwrap()[0];
            worst = worst.max(abs(got - target.evaluate(&[x]).unwrap()));
        }
        assert!(worst < 2e-3, "worst {worst}");
    }

    #[test]
    fn compilation_is_deterministic() {
        let reg = builtin_registry();
        let dom = DomainBox::interval(1.2, 1.8).unwrap();
        let target = poly(1, &[(2.0, &[3]), (-1.0, &[1])]);
        let mk = || {
            compile_square(
                &[target.clone()],
                &dom,
                3,
                Mode::Lowered(1e-3),
                &SquareOptions::default(),
                &reg,
            )
            .unwrap()
        };
        assert_eq!(mk(), mk());
    }

    #[test]
    fn rejects_bad_requests() {
        let reg = builtin_registry();
        let dom = DomainBox::interval(0.0, 1.0).unwrap();
        let target = poly(1, &[(1.0, &[1])]);
        assert!(compile_square(
            &[],
            &dom,
            2,
            Mode::IdealIdentity,
            &SquareOptions::default(),
            &reg
        )
        .is_err());
        let wrong_vars = poly(2, &[(1.0, &[1, 0])]);
        assert!(compile_square(
            &[wrong_vars],
            &dom,
            2,
            Mode::IdealIdentity,
            &SquareOptions::default(),
            &reg
        )
        .is_err());
        let bad = SquareOptions {
            margin: 0.7,
            ..SquareOptions::default()
        };
        assert!(
            compile_square(&[target.clone()], &dom, 2, Mode::IdealIdentity, &bad, &reg).is_err()
        );
        let bad = SquareOptions {
            skew: 0.0,
            ..SquareOptions::default()
        };
        assert!(compile_square(&[target], &dom, 2, Mode::IdealIdentity, &bad, &reg).is_err());
    }
}
