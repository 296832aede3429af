//! Conjugates every neuron by a power-of-two scale so internal values stay
//! below a target magnitude before identity lowering.
//!
//! A neuron's pre-affine is divided by its scale and every consumer column
//! is multiplied back. Scales are powers of two (even powers for square
//! neurons, whose outputs scale by the square of the row factor), so the
//! products commute with rounding and the ideal semantics are preserved bit
//! for bit; only the finite-step lowering error changes.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::act::Registry;
use crate::error::Error;
use crate::math::for_each_grid_point;
use crate::net::{ActivationTag, AffineMap, Layer, Network};
use crate::net::Box as DomainBox;
use crate::Result;

fn is_square(tag: &ActivationTag) -> Result<bool> {
    match tag {
        ActivationTag::Identity => Ok(false),
        ActivationTag::Named(k) if k == "square" => Ok(true),
        ActivationTag::Named(k) => Err(Error::UnsupportedActivation(alloc::format!(
            "rescaling applies to square and identity neurons, found {k}"
        ))),
    }
}

pub fn rescale(
    net: &Network,
    domain: &DomainBox,
    per_dim: usize,
    tau: f64,
    reg: &Registry,
) -> Result<Network> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Precondition(
            "rescale target must be positive and finite".to_string(),
        ));
    }
    if domain.dim() != net.input_dim() {
        return Err(Error::Dimension(
            "rescale domain does not match the network input".to_string(),
        ));
    }
    for layer in net.layers() {
        for tag in &layer.activations {
            is_square(tag)?;
        }
    }

    // Per-neuron max |post-activation| over the probe grid.
    let mut maxima: Vec<Vec<f64>> = net
        .layers()
        .iter()
        .map(|l| vec![0.0; l.width()])
        .collect();
    let mut eval_err: Option<Error> = None;
    for_each_grid_point(&domain.lower, &domain.upper, per_dim, |x| {
        if eval_err.is_some() {
            return;
        }
        match net.evaluate_traced(x, reg) {
            Ok((trace, _)) => {
                for (lm, lv) in maxima.iter_mut().zip(trace.iter()) {
                    for (m, &v) in lm.iter_mut().zip(lv.iter()) {
                        *m = m.max(libm::fabs(v));
                    }
                }
            }
            Err(e) => eval_err = Some(e),
        }
    });
    if let Some(e) = eval_err {
        return Err(e);
    }

    // Scale of each column of the previous (already rescaled) output.
    let mut prev_scale = vec![1.0f64; net.input_dim()];
    let mut layers = Vec::with_capacity(net.layers().len());
    for (layer, layer_max) in net.layers().iter().zip(maxima.iter()) {
        let mut rows = Vec::with_capacity(layer.width());
        let mut next_scale = Vec::with_capacity(layer.width());
        for (j, &m) in layer_max.iter().enumerate() {
            let square = is_square(&layer.activations[j])?;
            let mut e: i32 = if m > 0.0 {
                libm::ceil(libm::log2(m / tau)) as i32
            } else {
                0
            };
            // Only ever scale values down. Scaling a tiny wire up to tau
            // would amplify the rounding noise its consumers later divide
            // back out, which matters wherever large coefficients follow.
            e = e.clamp(0, 1000);
            if square && e % 2 != 0 {
                e += 1;
            }
            let sigma = libm::exp2(e as f64);
            // Square outputs scale by the square of the row divisor.
            let divisor = if square {
                libm::exp2((e / 2) as f64)
            } else {
                sigma
            };
            let (row, bias) = layer.affine.row(j);
            let scaled: Vec<f64> = row
                .iter()
                .zip(prev_scale.iter())
                .map(|(c, s)| c * s / divisor)
                .collect();
            rows.push((scaled, bias / divisor));
            next_scale.push(sigma);
        }
        layers.push(Layer::new(
            AffineMap::from_rows(layer.affine.in_dim(), &rows)?,
            layer.activations.clone(),
        )?);
        prev_scale = next_scale;
    }

    let mut readout_rows = Vec::with_capacity(net.readout().out_dim());
    for r in 0..net.readout().out_dim() {
        let (row, bias) = net.readout().row(r);
        let scaled: Vec<f64> = row
            .iter()
            .zip(prev_scale.iter())
            .map(|(c, s)| c * s)
            .collect();
        readout_rows.push((scaled, bias));
    }
    Network::new(
        net.input_dim(),
        layers,
        AffineMap::from_rows(net.readout().in_dim(), &readout_rows)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::act::builtin_registry;
    use crate::compile::lower::lower_identities;
    use crate::math::{abs, linspace};

    /// Ideal net computing x^2 through a deliberately large intermediate:
    /// w1 = 5x, w1 = w1^2, readout w1 / 25.
    fn hot_net() -> Network {
        let id = ActivationTag::Identity;
        let sq = ActivationTag::named("square");
        let l1 = Layer::new(
            AffineMap::from_rows(1, &[(vec![1.0], 0.0), (vec![5.0], 0.0)]).unwrap(),
            vec![id.clone(), id.clone()],
        )
        .unwrap();
        let l2 = Layer::new(
            AffineMap::from_rows(2, &[(vec![1.0, 0.0], 0.0), (vec![0.0, 1.0], 0.0)]).unwrap(),
            vec![id, sq],
        )
        .unwrap();
        let readout = AffineMap::from_rows(2, &[(vec![0.0, 0.04], 0.0)]).unwrap();
        Network::new(1, vec![l1, l2], readout).unwrap()
    }

    #[test]
    fn ideal_semantics_are_bit_identical() {
        let reg = builtin_registry();
        let net = hot_net();
        let dom = DomainBox::interval(-1.0, 1.0).unwrap();
        let scaled = rescale(&net, &dom, 41, 0.0625, &reg).unwrap();
        for x in linspace(-1.0, 1.0, 101) {
            assert_eq!(
                net.evaluate(&[x], &reg).unwrap(),
                scaled.evaluate(&[x], &reg).unwrap()
            );
        }
        assert_eq!(scaled.audit().width, net.audit().width);
        assert_eq!(scaled.audit().depth, net.audit().depth);
    }

    #[test]
    fn internal_values_land_under_the_target() {
        let reg = builtin_registry();
        let net = hot_net();
        let dom = DomainBox::interval(-1.0, 1.0).unwrap();
        let tau = 0.0625;
        let scaled = rescale(&net, &dom, 41, tau, &reg).unwrap();
        let mut worst = 0.0f64;
        for x in linspace(-1.0, 1.0, 41) {
            let (trace, _) = scaled.evaluate_traced(&[x], &reg).unwrap();
            for layer in &trace {
                for &v in layer {
                    worst = worst.max(abs(v));
                }
            }
        }
        assert!(worst <= tau * 1.0000001, "worst {worst}");
    }

    #[test]
    fn rescaling_shrinks_lowering_error() {
        let reg = builtin_registry();
        let net = hot_net();
        let dom = DomainBox::interval(-1.0, 1.0).unwrap();
        let spec = reg.get("square").unwrap();
        let h = 1e-3;
        let raw = lower_identities(&net, spec, h).unwrap();
        let scaled = rescale(&net, &dom, 41, 2.0_f64.powi(-8), &reg).unwrap();
        let cool = lower_identities(&scaled, spec, h).unwrap();
        let mut err_raw = 0.0f64;
        let mut err_cool = 0.0f64;
        for x in linspace(-1.0, 1.0, 101) {
            let want = net.evaluate(&[x], &reg).unwrap()[0];
            err_raw = err_raw.max(abs(raw.evaluate(&[x], &reg).unwrap()[0] - want));
            err_cool = err_cool.max(abs(cool.evaluate(&[x], &reg).unwrap()[0] - want));
        }
        assert!(
            err_cool < err_raw / 10.0,
            "raw {err_raw} rescaled {err_cool}"
        );
    }

    #[test]
    fn refuses_foreign_activations() {
        let reg = builtin_registry();
        let l = Layer::new(
            AffineMap::from_rows(1, &[(vec![1.0], 0.0)]).unwrap(),
            vec![ActivationTag::named("tanh")],
        )
        .unwrap();
        let net = Network::new(1, vec![l], AffineMap::identity(1)).unwrap();
        let dom = DomainBox::interval(-1.0, 1.0).unwrap();
        assert!(rescale(&net, &dom, 11, 0.25, &reg).is_err());
    }
}
