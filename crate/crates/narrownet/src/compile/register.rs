//! Deep width-(n+m+1) realization of a family of shallow nets.
//!
//! Wires are laid out as `[in_1 .. in_n, comp, out_1 .. out_m]`. One layer
//! per hidden unit: the comp wire evaluates the unit, and its weighted
//! contribution rides into the next layer's affine (or the readout for the
//! last unit), so depth is exactly the total number of units.

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::act::Registry;
use crate::compile::build::NetworkBuilder;
use crate::compile::lower::lower_identities;
use crate::compile::shallow::ShallowNet;
use crate::compile::Mode;
use crate::error::Error;
use crate::net::{ActivationTag, Network};
use crate::Result;

pub fn compile_register(nets: &[ShallowNet], mode: Mode, reg: &Registry) -> Result<Network> {
    if nets.is_empty() {
        return Err(Error::Precondition(
            "register compilation needs at least one shallow net".to_string(),
        ));
    }
    let n = nets[0].input_dim;
    let key = &nets[0].key;
    for net in nets {
        if net.input_dim != n {
            return Err(Error::Dimension(
                "all shallow nets must share one input dimension".to_string(),
            ));
        }
        if &net.key != key {
            return Err(Error::Precondition(
                "all shallow nets must share one activation".to_string(),
            ));
        }
    }
    let spec = reg.get(key)?;

    let m = nets.len();
    let comp = n;
    let out = |i: usize| n + 1 + i;
    let mut b = NetworkBuilder::new(n, n + m + 1)?;
    for (i, net) in nets.iter().enumerate() {
        for unit in &net.units {
            let terms: Vec<(usize, f64)> = unit
                .weights
                .iter()
                .enumerate()
                .map(|(k, &w)| (k, w))
                .collect();
            b.set_wire(comp, &terms, unit.bias)?;
            b.emit_with(&[(comp, ActivationTag::named(key))])?;
            b.set_wire(out(i), &[(out(i), 1.0), (comp, unit.coeff)], 0.0)?;
        }
    }
    let readout_terms: Vec<[(usize, f64); 1]> = (0..m).map(|i| [(out(i), 1.0)]).collect();
    let readout: Vec<(&[(usize, f64)], f64)> = readout_terms
        .iter()
        .zip(nets.iter())
        .map(|(t, net)| (t.as_slice(), net.out_bias))
        .collect();
    let ideal = b.finish(&readout)?;
    match mode {
        Mode::IdealIdentity => Ok(ideal),
        Mode::Lowered(h) => lower_identities(&ideal, spec, h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::builtin_registry;
    use crate::compile::shallow::Unit;
    use crate::math::{abs, for_each_grid_point};

    fn tanh_pair() -> Vec<ShallowNet> {
        let mk = |units: Vec<(Vec<f64>, f64, f64)>, out_bias: f64| ShallowNet {
            key: "tanh".to_string(),
            input_dim: 2,
            units: units
                .into_iter()
                .map(|(weights, bias, coeff)| Unit {
                    weights,
                    bias,
                    coeff,
                })
                .collect(),
            out_bias,
        };
        vec![
            mk(
                vec![
                    (vec![1.0, -0.5], 0.2, 0.8),
                    (vec![-0.3, 1.1], -0.4, -1.2),
                    (vec![0.6, 0.6], 0.0, 0.5),
                    (vec![-1.0, 0.2], 0.7, 0.9),
                ],
                0.1,
            ),
            mk(
                vec![
                    (vec![0.4, 0.9], -0.1, 1.5),
                    (vec![1.2, -0.8], 0.3, -0.7),
                    (vec![-0.5, -0.5], 0.5, 0.4),
                ],
                -0.25,
            ),
        ]
    }

    #[test]
    fn reproduces_the_shallow_pair_exactly() {
        let reg = builtin_registry();
        let nets = tanh_pair();
        let deep = compile_register(&nets, Mode::IdealIdentity, &reg).unwrap();
        let audit = deep.audit();
        assert_eq!(audit.width, 2 + 2 + 1);
        assert_eq!(audit.depth, 4 + 3);
        let mut worst = 0.0f64;
        for_each_grid_point(&[-1.0, -1.0], &[1.0, 1.0], 21, |x| {
            let got = deep.evaluate(x, &reg).unwrap();
            for (i, net) in nets.iter().enumerate() {
                worst = worst.max(abs(got[i] - net.evaluate(x, &reg).unwrap()));
            }
        });
        assert!(worst < 1e-12, "worst {worst}");
    }

    #[test]
    fn lowering_stays_close_and_keeps_shape() {
        let reg = builtin_registry();
        let nets = tanh_pair();
        let ideal = compile_register(&nets, Mode::IdealIdentity, &reg).unwrap();
        let low = compile_register(&nets, Mode::Lowered(1e-3), &reg).unwrap();
        assert_eq!(low.audit().width, ideal.audit().width);
        assert_eq!(low.audit().depth, ideal.audit().depth);
        // Every neuron is now a tanh application.
        for layer in low.layers() {
            for tag in &layer.activations {
                assert_eq!(tag.name(), "tanh");
            }
        }
        let mut worst = 0.0f64;
        for_each_grid_point(&[-1.0, -1.0], &[1.0, 1.0], 11, |x| {
            let a = ideal.evaluate(x, &reg).unwrap();
            let b = low.evaluate(x, &reg).unwrap();
            for i in 0..a.len() {
                worst = worst.max(abs(a[i] - b[i]));
            }
        });
        assert!(worst < 1e-3, "worst {worst}");
    }

    #[test]
    fn single_net_and_unit_edge_cases() {
        let reg = builtin_registry();
        let net = ShallowNet {
            key: "sigmoid".to_string(),
            input_dim: 1,
            units: vec![Unit {
                weights: vec![2.0],
                bias: 0.5,
                coeff: 3.0,
            }],
            out_bias: -1.0,
        };
        let deep = compile_register(core::slice::from_ref(&net), Mode::IdealIdentity, &reg).unwrap();
        assert_eq!(deep.audit().width, 3);
        assert_eq!(deep.audit().depth, 1);
        let x = [0.7];
        assert!(
            abs(deep.evaluate(&x, &reg).unwrap()[0] - net.evaluate(&x, &reg).unwrap()) < 1e-15
        );
        assert!(compile_register(&[], Mode::IdealIdentity, &reg).is_err());
    }

    #[test]
    fn mixed_activations_are_refused() {
        let reg = builtin_registry();
        let mut nets = tanh_pair();
        nets[1].key = "sigmoid".to_string();
        assert!(compile_register(&nets, Mode::IdealIdentity, &reg).is_err());
    }
}
