//! Passes that replace ideal neurons with concrete activations.
//!
//! Each pass rewrites a neuron's pre-affine (conjugating by the activation's
//! local chart) and compensates in every consumer of that neuron: the next
//! layer's columns, or the readout. Consumers see a per-column linear
//! correction `value -> scale * value + shift`, folded into their own rows,
//! so no extra layers appear.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::act::ActivationSpec;
use crate::error::Error;
use crate::net::{ActivationTag, AffineMap, Layer, Network};
use crate::Result;

/// How consumers of one old column recover its value from new columns.
struct Adjust {
    cols: Vec<(usize, f64)>,
    shift: f64,
}

impl Adjust {
    fn id(col: usize) -> Self {
        Adjust {
            cols: vec![(col, 1.0)],
            shift: 0.0,
        }
    }
}

/// Rewrites each row of `affine` over the new column basis.
fn remap_rows(affine: &AffineMap, map: &[Adjust], new_in: usize) -> Vec<(Vec<f64>, f64)> {
    let mut out = Vec::with_capacity(affine.out_dim());
    for r in 0..affine.out_dim() {
        let (row, bias) = affine.row(r);
        let mut new_row = vec![0.0; new_in];
        let mut new_bias = bias;
        for (k, &c) in row.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for &(nc, sc) in &map[k].cols {
                new_row[nc] += c * sc;
            }
            new_bias += c * map[k].shift;
        }
        out.push((new_row, new_bias));
    }
    out
}

fn check_step(h: f64) -> Result<()> {
    if h == 0.0 || !h.is_finite() {
        return Err(Error::Precondition(
            "lowering needs a nonzero finite step".to_string(),
        ));
    }
    Ok(())
}

/// Core of the identity-replacement passes: every Identity neuron becomes
/// `rho(h * pre + alpha)` tagged `key`, and consumers apply
/// `scale * value + shift` to read the original quantity back.
fn lower_identities_impl(
    net: &Network,
    key: &str,
    h: f64,
    alpha: f64,
    scale: f64,
    shift: f64,
) -> Result<Network> {
    let mut map: Vec<Adjust> = (0..net.input_dim()).map(Adjust::id).collect();
    let mut new_in = net.input_dim();
    let mut layers = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let rows = remap_rows(&layer.affine, &map, new_in);
        let width = layer.width();
        let mut out_rows = Vec::with_capacity(width);
        let mut tags = Vec::with_capacity(width);
        let mut next = Vec::with_capacity(width);
        for (j, (row, bias)) in rows.into_iter().enumerate() {
            match &layer.activations[j] {
                ActivationTag::Identity => {
                    let scaled: Vec<f64> = row.iter().map(|c| h * c).collect();
                    out_rows.push((scaled, h * bias + alpha));
                    tags.push(ActivationTag::named(key));
                    next.push(Adjust {
                        cols: vec![(j, scale)],
                        shift,
                    });
                }
                tag => {
                    out_rows.push((row, bias));
                    tags.push(tag.clone());
                    next.push(Adjust::id(j));
                }
            }
        }
        layers.push(Layer::new(AffineMap::from_rows(new_in, &out_rows)?, tags)?);
        map = next;
        new_in = width;
    }
    let readout = remap_rows(net.readout(), &map, new_in);
    Network::new(
        net.input_dim(),
        layers,
        AffineMap::from_rows(new_in, &readout)?,
    )
}

/// Replaces every exact identity neuron with the one-neuron approximate
/// identity through `spec` at step `h`. Named neurons are untouched.
pub fn lower_identities(net: &Network, spec: &ActivationSpec, h: f64) -> Result<Network> {
    check_step(h)?;
    let a = spec.require_d1()?;
    let scale = 1.0 / (h * a.d1);
    lower_identities_impl(net, &spec.key, h, a.alpha, scale, -a.rho * scale)
}

/// Identity replacement through the bounded-oscillation activation: the
/// pre-affine lands at a multiple of two pi and no constant is subtracted,
/// since the oscillating tail is crushed by its own decay there.
pub fn lower_identities_pathological(net: &Network, h: f64, big_a: f64) -> Result<Network> {
    check_step(h)?;
    let turns = big_a / core::f64::consts::TAU;
    let rounded = libm::round(turns);
    if rounded < 0.0 || libm::fabs(turns - rounded) > 1e-9 {
        return Err(Error::Precondition(
            "offset must be a non-negative multiple of two pi".to_string(),
        ));
    }
    lower_identities_impl(net, "pathological", h, big_a, 1.0 / h, 0.0)
}

/// Identity replacement by `relu(pre + shift) - shift`, exact while every
/// carried value stays above `-shift`.
pub fn lower_identities_relu(net: &Network, shift: f64) -> Result<Network> {
    if !shift.is_finite() || shift <= 0.0 {
        return Err(Error::Precondition(
            "relu identity needs a positive finite shift".to_string(),
        ));
    }
    lower_identities_impl(net, "relu", 1.0, shift, 1.0, -shift)
}

/// Serializes each layer into width sub-layers, one activation apiece:
/// sub-layer 0 carries the affine and activates neuron 0, sub-layer i
/// activates coordinate i of the carried pre-activations. All-Identity
/// layers are left alone. Values are unchanged bit for bit.
pub fn layer_expand(net: &Network) -> Result<Network> {
    let mut layers = Vec::new();
    for layer in net.layers() {
        let all_id = layer
            .activations
            .iter()
            .all(|t| matches!(t, ActivationTag::Identity));
        if all_id {
            layers.push(layer.clone());
            continue;
        }
        let width = layer.width();
        for i in 0..width {
            let affine = if i == 0 {
                layer.affine.clone()
            } else {
                AffineMap::identity(width)
            };
            let mut tags = vec![ActivationTag::Identity; width];
            tags[i] = layer.activations[i].clone();
            layers.push(Layer::new(affine, tags)?);
        }
    }
    Network::new(net.input_dim(), layers, net.readout().clone())
}

fn classify(tag: &ActivationTag) -> Result<bool> {
    match tag {
        ActivationTag::Identity => Ok(false),
        ActivationTag::Named(k) if k == "square" => Ok(true),
        ActivationTag::Named(k) => Err(Error::UnsupportedActivation(alloc::format!(
            "square lowering applies to square and identity neurons, found {k}"
        ))),
    }
}

/// Replaces each square neuron by the two-neuron second difference of `spec`
/// at step `h` (and each identity neuron by the one-neuron approximate
/// identity), so the result uses only `spec`. Needs at most one square per
/// layer; run [`layer_expand`] first otherwise. Width grows by at most one.
pub fn lower_square_sigma(net: &Network, spec: &ActivationSpec, h: f64) -> Result<Network> {
    check_step(h)?;
    let a2 = spec.require_d2()?;
    let a1 = spec.require_d1()?;
    let w2 = 1.0 / (h * h * a2.d2);
    let i_scale = 1.0 / (h * a1.d1);
    let i_shift = -a1.rho * i_scale;

    let mut map: Vec<Adjust> = (0..net.input_dim()).map(Adjust::id).collect();
    let mut new_in = net.input_dim();
    let mut layers = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        let squares = layer
            .activations
            .iter()
            .map(classify)
            .collect::<Result<Vec<bool>>>()?;
        if squares.iter().filter(|&&s| s).count() > 1 {
            return Err(Error::Precondition(
                "a layer holds more than one square neuron; expand layers first".to_string(),
            ));
        }
        let rows = remap_rows(&layer.affine, &map, new_in);
        let mut out_rows = Vec::new();
        let mut tags = Vec::new();
        let mut next = Vec::new();
        let mut pos = 0usize;
        for (j, (row, bias)) in rows.into_iter().enumerate() {
            if squares[j] {
                let plus: Vec<f64> = row.iter().map(|c| h * c).collect();
                let minus: Vec<f64> = row.iter().map(|c| -h * c).collect();
                out_rows.push((plus, h * bias + a2.alpha));
                out_rows.push((minus, -h * bias + a2.alpha));
                tags.push(ActivationTag::named(&spec.key));
                tags.push(ActivationTag::named(&spec.key));
                next.push(Adjust {
                    cols: vec![(pos, w2), (pos + 1, w2)],
                    shift: -2.0 * a2.rho * w2,
                });
                pos += 2;
            } else {
                let scaled: Vec<f64> = row.iter().map(|c| h * c).collect();
                out_rows.push((scaled, h * bias + a1.alpha));
                tags.push(ActivationTag::named(&spec.key));
                next.push(Adjust {
                    cols: vec![(pos, i_scale)],
                    shift: i_shift,
                });
                pos += 1;
            }
        }
        layers.push(Layer::new(AffineMap::from_rows(new_in, &out_rows)?, tags)?);
        map = next;
        new_in = pos;
    }
    let readout = remap_rows(net.readout(), &map, new_in);
    Network::new(
        net.input_dim(),
        layers,
        AffineMap::from_rows(new_in, &readout)?,
    )
}

/// Replaces each square neuron by a single application of `spec` at a
/// critical point: `(rho(alpha + h pre) - rho(alpha)) * 2 / (h^2 rho''(alpha))`.
/// The net must be all-square (lower identities to squares first); width is
/// unchanged.
pub fn lower_square_rho(net: &Network, spec: &ActivationSpec, h: f64) -> Result<Network> {
    check_step(h)?;
    let a2 = spec.require_d2()?;
    if a2.d1 != 0.0 {
        return Err(Error::Precondition(
            "one-neuron square lowering needs rho'(alpha) = 0 at the probe point; \
             use the two-neuron second-difference lowering instead"
                .to_string(),
        ));
    }
    let w2 = 2.0 / (h * h * a2.d2);
    let mut map: Vec<Adjust> = (0..net.input_dim()).map(Adjust::id).collect();
    let mut new_in = net.input_dim();
    let mut layers = Vec::with_capacity(net.layers().len());
    for layer in net.layers() {
        for tag in &layer.activations {
            if !classify(tag)? {
                return Err(Error::Precondition(
                    "one-neuron square lowering needs an all-square net; \
                     lower identity neurons into squares first"
                        .to_string(),
                ));
            }
        }
        let rows = remap_rows(&layer.affine, &map, new_in);
        let width = layer.width();
        let mut out_rows = Vec::with_capacity(width);
        let mut next = Vec::with_capacity(width);
        for (j, (row, bias)) in rows.into_iter().enumerate() {
            let scaled: Vec<f64> = row.iter().map(|c| h * c).collect();
            out_rows.push((scaled, h * bias + a2.alpha));
            next.push(Adjust {
                cols: vec![(j, w2)],
                shift: -a2.rho * w2,
            });
        }
        let tags = vec![ActivationTag::named(&spec.key); width];
        layers.push(Layer::new(AffineMap::from_rows(new_in, &out_rows)?, tags)?);
        map = next;
        new_in = width;
    }
    let readout = remap_rows(net.readout(), &map, new_in);
    Network::new(
        net.input_dim(),
        layers,
        AffineMap::from_rows(new_in, &readout)?,
    )
}
