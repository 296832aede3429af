//! Cutoff stage for relu networks in the register layout.
//!
//! Takes an ideal register-layout network (input wires carried unchanged,
//! outputs accumulated on the trailing wires), multiplies a trapezoid bump
//! that is 1 on the inner box and exactly 0 outside the outer box into every
//! output, and lowers the remaining identity wires through shifted relus.
//! Each output becomes min(max(g_i, floor * U), ceiling * U), which keeps
//! g_i wherever the bump is 1 and collapses to exact zero outside.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::compile::build::NetworkBuilder;
use crate::compile::lower::lower_identities_relu;
use crate::error::Error;
use crate::net::Box as DomainBox;
use crate::net::{ActivationTag, Network};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    /// Lower clamp level, must be negative.
    pub floor: f64,
    /// Upper clamp level, must be positive.
    pub ceiling: f64,
    /// Shift used when lowering identity wires, must exceed both clamp
    /// magnitudes so every carried value stays in the linear region.
    pub shift: f64,
}

fn relu_tag() -> ActivationTag {
    ActivationTag::named("relu")
}

pub fn compile_relu_lp(
    net: &Network,
    inner: &DomainBox,
    outer: &DomainBox,
    cutoff: &CutoffSpec,
) -> Result<Network> {
    let n = net.input_dim();
    let m = net.output_dim();
    let width = n + m + 1;
    if inner.dim() != n || outer.dim() != n {
        return Err(Error::Dimension(
            "cutoff boxes must match the network input dimension".to_string(),
        ));
    }
    let layout_ok = net
        .layers()
        .iter()
        .all(|l| l.width() == width && l.affine.in_dim() <= width);
    if net.layers().iter().next().map(|l| l.affine.in_dim()) != Some(n) && !net.layers().is_empty()
    {
        return Err(Error::Dimension(
            "expected a register-layout network over its own inputs".to_string(),
        ));
    }
    if !layout_ok || net.readout().in_dim() != width {
        return Err(Error::Dimension(
            "expected the register wire layout [inputs, scratch, outputs]".to_string(),
        ));
    }
    for layer in net.layers() {
        for tag in &layer.activations {
            let name = tag.name();
            if name != "relu" && name != "id" {
                return Err(Error::UnsupportedActivation(name.to_string()));
            }
        }
    }
    for d in 0..n {
        if !(outer.lower[d] < inner.lower[d] && inner.upper[d] < outer.upper[d]) {
            return Err(Error::Precondition(
                "the inner box must sit strictly inside the outer box".to_string(),
            ));
        }
    }
    if !(cutoff.floor < 0.0 && cutoff.ceiling > 0.0) {
        return Err(Error::Precondition(
            "cutoff needs floor < 0 < ceiling".to_string(),
        ));
    }
    let needed = cutoff.ceiling.max(-cutoff.floor);
    if !(cutoff.shift.is_finite() && cutoff.shift > needed) {
        return Err(Error::Precondition(
            "identity shift must exceed both clamp magnitudes".to_string(),
        ));
    }

    let comp = n;
    let out = |i: usize| n + 1 + i;
    let mut b = NetworkBuilder::new(n, width)?;

    // Replay the register network layer by layer. The rows of one layer
    // must be staged simultaneously: a sequential walk would let later
    // rows compose the earlier rows' fresh assignments.
    for layer in net.layers() {
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::with_capacity(width);
        for w in 0..width {
            let (row, bias) = layer.affine.row(w);
            let terms: Vec<(usize, f64)> = row
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(k, &c)| (k, c))
                .collect();
            rows.push((terms, bias));
        }
        let staged: Vec<(usize, &[(usize, f64)], f64)> = rows
            .iter()
            .enumerate()
            .map(|(w, (terms, bias))| (w, terms.as_slice(), *bias))
            .collect();
        b.set_wires(&staged)?;
        b.emit(layer.activations.clone())?;
    }
    // Fold the readout onto the output wires.
    let mut readout_rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    let mut readout_bias = Vec::with_capacity(m);
    for i in 0..m {
        let (row, bias) = net.readout().row(i);
        readout_rows.push(
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(k, &c)| (k, c))
                .collect(),
        );
        readout_bias.push(bias);
    }
    let updates: Vec<(usize, &[(usize, f64)], f64)> = readout_rows
        .iter()
        .enumerate()
        .map(|(i, row)| (out(i), row.as_slice(), readout_bias[i]))
        .collect();
    b.set_wires(&updates)?;

    // Per-coordinate trapezoid on (comp, in-wire), folded back onto the
    // in-wire: 1 on [inner.lower, inner.upper], 0 outside the outer box.
    for d in 0..n {
        let up = 1.0 / (inner.lower[d] - outer.lower[d]);
        let down = 1.0 / (outer.upper[d] - inner.upper[d]);
        b.set_wires(&[
            (comp, &[(d, up)], -up * outer.lower[d]),
            (d, &[(d, down)], -down * inner.upper[d]),
        ])?;
        b.emit_with(&[(comp, relu_tag()), (d, relu_tag())])?;
        b.set_wires(&[(comp, &[(comp, -1.0)], 1.0), (d, &[(d, -1.0)], 1.0)])?;
        b.emit_with(&[(comp, relu_tag()), (d, relu_tag())])?;
        b.set_wire(d, &[(d, 1.0), (comp, -1.0)], 0.0)?;
    }
    // Combine the per-coordinate bumps through min onto wire 0.
    for d in 1..n {
        b.set_wires(&[(comp, &[(0, 1.0), (d, -1.0)], 0.0), (0, &[(0, 1.0)], 0.0)])?;
        b.emit_with(&[(comp, relu_tag()), (0, relu_tag())])?;
        b.set_wire(0, &[(0, 1.0), (comp, -1.0)], 0.0)?;
    }

    // Clamp each output between floor * U and ceiling * U.
    let c_lo = cutoff.floor;
    let c_hi = cutoff.ceiling;
    for i in 0..m {
        b.set_wire(comp, &[(out(i), 1.0), (0, -c_lo)], 0.0)?;
        b.emit_with(&[(comp, relu_tag())])?;
        b.set_wire(comp, &[(0, c_hi - c_lo), (comp, -1.0)], 0.0)?;
        b.emit_with(&[(comp, relu_tag())])?;
        b.set_wire(out(i), &[(0, c_hi), (comp, -1.0)], 0.0)?;
    }

    let readout: Vec<([(usize, f64); 1], f64)> =
        (0..m).map(|i| ([(out(i), 1.0)], 0.0)).collect();
    let rows: Vec<(&[(usize, f64)], f64)> = readout
        .iter()
        .map(|(t, bias)| (t.as_slice(), *bias))
        .collect();
    let ideal = b.finish(&rows)?;
    lower_identities_relu(&ideal, cutoff.shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::builtin_registry;
    use crate::compile::register::compile_register;
    use crate::compile::shallow::{ShallowNet, Unit};
    use crate::compile::Mode;
    use crate::math::{abs, linspace};
    use alloc::vec;

    fn triangle() -> ShallowNet {
        ShallowNet {
            key: "relu".to_string(),
            input_dim: 1,
            units: vec![
                Unit {
                    weights: vec![1.0],
                    bias: 1.0,
                    coeff: 1.0,
                },
                Unit {
                    weights: vec![1.0],
                    bias: 0.0,
                    coeff: -2.0,
                },
                Unit {
                    weights: vec![1.0],
                    bias: -1.0,
                    coeff: 1.0,
                },
            ],
            out_bias: 0.0,
        }
    }

    fn triangle_truth(x: f64) -> f64 {
        (1.0 - abs(x)).max(0.0)
    }

    fn cut_triangle() -> Network {
        let reg = builtin_registry();
        let ideal = compile_register(&[triangle()], Mode::IdealIdentity, &reg).unwrap();
        compile_relu_lp(
            &ideal,
            &DomainBox::interval(-1.0, 1.0).unwrap(),
            &DomainBox::interval(-1.1, 1.1).unwrap(),
            &CutoffSpec {
                floor: -1.0,
                ceiling: 2.0,
                shift: 10.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn triangle_shape_and_tags() {
        let net = cut_triangle();
        let audit = net.audit();
        assert_eq!(audit.width, 3);
        assert_eq!(audit.depth, 7);
        for layer in net.layers() {
            for tag in &layer.activations {
                assert_eq!(tag.name(), "relu");
            }
        }
    }

    #[test]
    fn exactly_zero_outside_the_outer_box() {
        let reg = builtin_registry();
        let net = cut_triangle();
        for &x in &[
            -7.3, -2.0, -1.5, -1.1000000001, 1.1000000001, 1.25, 3.0, 40.0,
        ] {
            let got = net.evaluate(&[x], &reg).unwrap()[0];
            assert_eq!(got, 0.0, "x={x}");
        }
    }

    #[test]
    fn matches_the_triangle_inside_the_inner_box() {
        let reg = builtin_registry();
        let net = cut_triangle();
        let mut worst = 0.0f64;
        for x in linspace(-1.0, 1.0, 201) {
            let got = net.evaluate(&[x], &reg).unwrap()[0];
            worst = worst.max(abs(got - triangle_truth(x)));
        }
        assert!(worst < 1e-12, "worst {worst}");
    }

    #[test]
    fn clamps_against_the_bump_in_two_dimensions() {
        let reg = builtin_registry();
        let flat = ShallowNet {
            key: "relu".to_string(),
            input_dim: 2,
            units: vec![Unit {
                weights: vec![1.0, 1.0],
                bias: 0.0,
                coeff: 0.0,
            }],
            out_bias: 5.0,
        };
        let ideal = compile_register(&[flat], Mode::IdealIdentity, &reg).unwrap();
        let net = compile_relu_lp(
            &ideal,
            &DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
            &DomainBox::new(vec![-1.2, -1.2], vec![1.2, 1.2]).unwrap(),
            &CutoffSpec {
                floor: -1.0,
                ceiling: 6.0,
                shift: 12.0,
            },
        )
        .unwrap();
        let eval = |x: &[f64]| net.evaluate(x, &reg).unwrap()[0];
        assert!(abs(eval(&[0.0, 0.0]) - 5.0) < 1e-12);
        // On the ramp the value collapses to ceiling * U.
        assert!(abs(eval(&[1.15, 0.0]) - 1.5) < 1e-12);
        assert!(abs(eval(&[1.1, 1.1]) - 3.0) < 1e-12);
        assert_eq!(eval(&[1.3, 0.0]), 0.0);
        assert_eq!(eval(&[-1.25, 0.4]), 0.0);
        assert_eq!(eval(&[0.3, 5.0]), 0.0);
    }

    #[test]
    fn rejects_bad_requests() {
        let reg = builtin_registry();
        let ideal = compile_register(&[triangle()], Mode::IdealIdentity, &reg).unwrap();
        let inner = DomainBox::interval(-1.0, 1.0).unwrap();
        let outer = DomainBox::interval(-1.1, 1.1).unwrap();
        let good = CutoffSpec {
            floor: -1.0,
            ceiling: 2.0,
            shift: 10.0,
        };
        // Inner box not strictly inside the outer one.
        assert!(compile_relu_lp(&ideal, &outer, &inner, &good).is_err());
        // Floor must be negative.
        assert!(compile_relu_lp(
            &ideal,
            &inner,
            &outer,
            &CutoffSpec {
                floor: 0.0,
                ..good
            }
        )
        .is_err());
        // Shift must clear the clamp magnitudes.
        assert!(compile_relu_lp(
            &ideal,
            &inner,
            &outer,
            &CutoffSpec { shift: 1.5, ..good }
        )
        .is_err());
        // Wrong activation family.
        let tanh_net = ShallowNet {
            key: "tanh".to_string(),
            ..triangle()
        };
        let tanh_ideal = compile_register(&[tanh_net], Mode::IdealIdentity, &reg).unwrap();
        assert!(compile_relu_lp(&tanh_ideal, &inner, &outer, &good).is_err());
    }
}
