//! Network intermediate representation: affine layers with per-neuron
//! activation tags, evaluation, and structural audits.
//!
//! A network is a chain of hidden [`Layer`]s followed by a final affine
//! readout. Each hidden neuron applies its layer's affine map and then its
//! own activation tag; [`ActivationTag::Identity`] marks neurons of ideal
//! constructions that later lowering passes replace with realisable ones.
//! Pre- and post-affines of "enhanced" neurons are not separate IR nodes:
//! the pre-affine lives in the layer's map and the post-affine is folded
//! into the next layer (or the readout).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::act::Registry;
use crate::error::Error;
use crate::Result;

/// Dense affine map `x -> W x + b`, weights row-major `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl AffineMap {
    /// Builds a map from row-major weights and a bias vector.
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != in_dim * out_dim {
            return Err(Error::Dimension(format_msg(
                "weight count",
                weights.len(),
                in_dim * out_dim,
            )));
        }
        if bias.len() != out_dim {
            return Err(Error::Dimension(format_msg(
                "bias length",
                bias.len(),
                out_dim,
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite affine entry".to_string()));
        }
        Ok(AffineMap {
            in_dim,
            out_dim,
            weights,
            bias,
        })
    }

    /// Builds a map from explicit rows.
    pub fn from_rows(in_dim: usize, rows: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut weights = Vec::with_capacity(in_dim * rows.len());
        let mut bias = Vec::with_capacity(rows.len());
        for (w, b) in rows {
            if w.len() != in_dim {
                return Err(Error::Dimension(format_msg("row length", w.len(), in_dim)));
            }
            weights.extend_from_slice(w);
            bias.push(*b);
        }
        AffineMap::new(in_dim, rows.len(), weights, bias)
    }

    /// The identity map on `dim` coordinates.
    pub fn identity(dim: usize) -> Self {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        AffineMap {
            in_dim: dim,
            out_dim: dim,
            weights,
            bias: vec![0.0; dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Row `r` as `(weights, bias)`.
    pub fn row(&self, r: usize) -> (&[f64], f64) {
        (
            &self.weights[r * self.in_dim..(r + 1) * self.in_dim],
            self.bias[r],
        )
    }

    /// Raw row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Applies the map, writing into `out` (length `out_dim`).
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for r in 0..self.out_dim {
            let row = &self.weights[r * self.in_dim..(r + 1) * self.in_dim];
            let mut acc = self.bias[r];
            for (w, v) in row.iter().zip(x.iter()) {
                acc += w * v;
            }
            out[r] = acc;
        }
    }

    /// Applies the map to a fresh vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.apply_into(x, &mut out);
        out
    }
}

fn format_msg(what: &str, got: usize, want: usize) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    let _ = write!(s, "{what} is {got}, expected {want}");
    s
}

/// Per-neuron activation assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActivationTag {
    /// The exact identity; a placeholder for later lowering.
    Identity,
    /// A key into the activation registry.
    Named(String),
}

impl ActivationTag {
    /// The registry/serialisation name ("id" is reserved for the identity).
    pub fn name(&self) -> &str {
        match self {
            ActivationTag::Identity => "id",
            ActivationTag::Named(key) => key,
        }
    }

    /// Builds a tag from its serialised name.
    pub fn from_name(name: &str) -> Self {
        if name == "id" {
            ActivationTag::Identity
        } else {
            ActivationTag::Named(name.to_string())
        }
    }

    pub fn named(key: &str) -> Self {
        ActivationTag::Named(key.to_string())
    }
}

/// One hidden layer: an affine map plus one activation tag per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub affine: AffineMap,
    pub activations: Vec<ActivationTag>,
}

impl Layer {
    pub fn new(affine: AffineMap, activations: Vec<ActivationTag>) -> Result<Self> {
        if activations.len() != affine.out_dim() {
            return Err(Error::Dimension(format_msg(
                "activation count",
                activations.len(),
                affine.out_dim(),
            )));
        }
        Ok(Layer {
            affine,
            activations,
        })
    }

    pub fn width(&self) -> usize {
        self.affine.out_dim()
    }
}

/// Compact axis-aligned box, the domain of every approximation guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct Box {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Box {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension(format_msg(
                "box upper length",
                upper.len(),
                lower.len(),
            )));
        }
        for (l, u) in lower.iter().zip(upper.iter()) {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::Precondition(
                    "box requires finite lower < upper per axis".to_string(),
                ));
            }
        }
        Ok(Box { lower, upper })
    }

    /// 1-dimensional interval.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Box::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Product of side lengths.
    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(l, u)| u - l)
            .product()
    }

    /// True when `x` lies inside (inclusive).
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }
}

/// Structural audit of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct Audit {
    /// Maximum hidden layer size.
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
    /// Per-layer tag counts, by tag name.
    pub census: Vec<BTreeMap<String, usize>>,
}

impl Audit {
    /// Aggregated tag counts across layers.
    pub fn totals(&self) -> BTreeMap<String, usize> {
        let mut totals = BTreeMap::new();
        for layer in &self.census {
            for (k, v) in layer {
                *totals.entry(k.clone()).or_insert(0) += v;
            }
        }
        totals
    }
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "width {} depth {} census", self.width, self.depth)?;
        for (k, v) in self.totals() {
            write!(f, " {k}:{v}")?;
        }
        Ok(())
    }
}

/// A feedforward network: hidden layers plus a final affine readout.
///
/// Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_dim: usize,
    layers: Vec<Layer>,
    readout: AffineMap,
}

impl Network {
    /// Builds and validates a network (dimension chaining, readout fit).
    pub fn new(input_dim: usize, layers: Vec<Layer>, readout: AffineMap) -> Result<Self> {
        let mut cur = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.affine.in_dim() != cur {
                return Err(Error::Dimension(format_msg(
                    if i == 0 {
                        "first layer input"
                    } else {
                        "layer input"
                    },
                    layer.affine.in_dim(),
                    cur,
                )));
            }
            cur = layer.affine.out_dim();
        }
        if readout.in_dim() != cur {
            return Err(Error::Dimension(format_msg(
                "readout input",
                readout.in_dim(),
                cur,
            )));
        }
        Ok(Network {
            input_dim,
            layers,
            readout,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.readout.out_dim()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn readout(&self) -> &AffineMap {
        &self.readout
    }

    /// Checks every named tag against the registry.
    pub fn resolve_tags(&self, reg: &Registry) -> Result<()> {
        for layer in &self.layers {
            for tag in &layer.activations {
                if let ActivationTag::Named(key) = tag {
                    reg.get(key)?;
                }
            }
        }
        Ok(())
    }

    /// Evaluates the network at `x`.
    pub fn evaluate(&self, x: &[f64], reg: &Registry) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format_msg(
                "input length",
                x.len(),
                self.input_dim,
            )));
        }
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            next.resize(layer.width(), 0.0);
            layer.affine.apply_into(&cur, &mut next);
            for (v, tag) in next.iter_mut().zip(layer.activations.iter()) {
                if let ActivationTag::Named(key) = tag {
                    *v = reg.get(key)?.eval(*v);
                }
            }
            core::mem::swap(&mut cur, &mut next);
        }
        Ok(self.readout.apply(&cur))
    }

    /// Evaluates and records every hidden layer's post-activation values.
    /// Used by the rescaling pass and by debugging tools.
    pub fn evaluate_traced(&self, x: &[f64], reg: &Registry) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        if x.len() != self.input_dim {
            return Err(Error::Dimension(format_msg(
                "input length",
                x.len(),
                self.input_dim,
            )));
        }
        let mut trace = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.width()];
            layer.affine.apply_into(&cur, &mut next);
            for (v, tag) in next.iter_mut().zip(layer.activations.iter()) {
                if let ActivationTag::Named(key) = tag {
                    *v = reg.get(key)?.eval(*v);
                }
            }
            trace.push(next.clone());
            cur = next;
        }
        let out = self.readout.apply(&cur);
        Ok((trace, out))
    }

    /// Width, depth, and per-layer activation census.
    pub fn audit(&self) -> Audit {
        let width = self.layers.iter().map(Layer::width).max().unwrap_or(0);
        let census = self
            .layers
            .iter()
            .map(|layer| {
                let mut counts = BTreeMap::new();
                for tag in &layer.activations {
                    *counts.entry(tag.name().to_string()).or_insert(0) += 1;
                }
                counts
            })
            .collect();
        Audit {
            width,
            depth: self.layers.len(),
            census,
        }
    }
}
