//! Property tests over randomly generated networks.

use narrownet::compile::{layer_expand, rescale};
use narrownet::{builtin_registry, ActivationTag, AffineMap, DomainBox, Layer, Network};
use proptest::prelude::*;

/// A random network of square and identity neurons with bounded weights.
/// Dimensions chain so that each layer consumes the previous one's output.
fn arb_network() -> impl Strategy<Value = Network> {
    let dims = prop::collection::vec(1usize..4, 2..5);
    let seed = any::<u64>();
    (dims, seed).prop_map(|(dims, seed)| {
        // A tiny deterministic generator keeps the strategy shrinkable: the
        // whole net is a function of the dimension list and one seed.
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            // Map to [-2, 2).
            (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        let input_dim = dims[0];
        let mut layers = Vec::new();
        for w in dims.windows(2) {
            let (in_dim, out_dim) = (w[0], w[1]);
            let weights: Vec<f64> = (0..in_dim * out_dim).map(|_| next()).collect();
            let bias: Vec<f64> = (0..out_dim).map(|_| next()).collect();
            let tags: Vec<ActivationTag> = (0..out_dim)
                .map(|_| {
                    if next() > 0.0 {
                        ActivationTag::named("square")
                    } else {
                        ActivationTag::Identity
                    }
                })
                .collect();
            let affine = AffineMap::new(in_dim, out_dim, weights, bias).unwrap();
            layers.push(Layer::new(affine, tags).unwrap());
        }
        let out_dim = *dims.last().unwrap();
        let weights: Vec<f64> = (0..out_dim).map(|_| next()).collect();
        let readout = AffineMap::new(out_dim, 1, weights, vec![next()]).unwrap();
        Network::new(input_dim, layers, readout).unwrap()
    })
}

proptest! {
    /// Serializing layers into one activation apiece reroutes every value
    /// through identity rows, which must not change a single bit.
    #[test]
    fn layer_expansion_is_bit_exact(net in arb_network(), raw in prop::collection::vec(-1.0f64..1.0, 3)) {
        let reg = builtin_registry();
        let expanded = layer_expand(&net).unwrap();
        let x = &raw[..net.input_dim()];
        let a = net.evaluate(x, &reg).unwrap();
        let b = expanded.evaluate(x, &reg).unwrap();
        prop_assert_eq!(a, b);
        // Expansion does not change what the network computes with, either.
        let audit_a = net.audit().totals();
        let audit_b = expanded.audit().totals();
        prop_assert_eq!(audit_a.get("square"), audit_b.get("square"));
    }

    /// Wire rescaling multiplies rows and columns by powers of two that
    /// cancel along every path, so the function survives to near the last
    /// bit even though the carried values change by orders of magnitude.
    #[test]
    fn rescaling_preserves_the_function(net in arb_network(), raw in prop::collection::vec(-1.0f64..1.0, 3)) {
        let reg = builtin_registry();
        let dim = net.input_dim();
        let dom = DomainBox::new(vec![-1.0; dim], vec![1.0; dim]).unwrap();
        let scaled = rescale(&net, &dom, 9, 1.0 / 8192.0, &reg).unwrap();
        let x = &raw[..dim];
        let a = net.evaluate(x, &reg).unwrap()[0];
        let b = scaled.evaluate(x, &reg).unwrap()[0];
        let tol = 1e-12 * (1.0 + a.abs());
        prop_assert!((a - b).abs() <= tol, "{a} vs {b}");
    }
}
