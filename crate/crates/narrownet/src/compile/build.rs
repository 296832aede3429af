//! Incremental constructor for fixed-width networks.
//!
//! The builder maintains one *wire* per network column and a pending affine
//! update per wire, expressed over the last materialized layer. Wire edits
//! compose into the pending affine for free; `emit` materializes all pending
//! rows as one layer and resets the pending map to the identity. Updates
//! that are never followed by an `emit` fold into the readout, so trailing
//! affine work costs no depth.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::net::{ActivationTag, AffineMap, Layer, Network};
use crate::Result;

pub struct NetworkBuilder {
    input_dim: usize,
    width: usize,
    layers: Vec<Layer>,
    /// One (row, bias) per wire, over the last materialized output.
    pending: Vec<(Vec<f64>, f64)>,
    prev_dim: usize,
}

impl NetworkBuilder {
    /// Starts a builder with `width` wires; wires `0..input_dim` begin as
    /// the inputs and the rest as zero.
    pub fn new(input_dim: usize, width: usize) -> Result<Self> {
        if input_dim == 0 || width < input_dim {
            return Err(Error::Dimension(format!(
                "builder needs width >= input_dim >= 1, got width {width} and input {input_dim}"
            )));
        }
        let pending = (0..width)
            .map(|w| {
                let mut row = vec![0.0; input_dim];
                if w < input_dim {
                    row[w] = 1.0;
                }
                (row, 0.0)
            })
            .collect();
        Ok(Self {
            input_dim,
            width,
            layers: Vec::new(),
            pending,
            prev_dim: input_dim,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Layers materialized so far.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// The pending affine of one wire, over the last materialized output.
    pub fn pending_row(&self, wire: usize) -> (&[f64], f64) {
        let (row, bias) = &self.pending[wire];
        (row, *bias)
    }

    fn compose(&self, terms: &[(usize, f64)], bias: f64) -> Result<(Vec<f64>, f64)> {
        let mut row = vec![0.0; self.prev_dim];
        let mut b = bias;
        for &(src, c) in terms {
            if src >= self.width {
                return Err(Error::Dimension(format!(
                    "wire {src} out of range for width {}",
                    self.width
                )));
            }
            let (srow, sbias) = &self.pending[src];
            for (acc, v) in row.iter_mut().zip(srow.iter()) {
                *acc += c * v;
            }
            b += c * sbias;
        }
        Ok((row, b))
    }

    /// Replaces one wire with an affine combination of current wire values.
    /// Reading the wire being set refers to its old value.
    pub fn set_wire(&mut self, wire: usize, terms: &[(usize, f64)], bias: f64) -> Result<()> {
        if wire >= self.width {
            return Err(Error::Dimension(format!(
                "wire {wire} out of range for width {}",
                self.width
            )));
        }
        let composed = self.compose(terms, bias)?;
        self.pending[wire] = composed;
        Ok(())
    }

    /// Replaces several wires simultaneously: every right-hand side reads
    /// the values from before any of the updates.
    pub fn set_wires(&mut self, updates: &[(usize, &[(usize, f64)], f64)]) -> Result<()> {
        let mut staged = Vec::with_capacity(updates.len());
        for &(wire, terms, bias) in updates {
            if wire >= self.width {
                return Err(Error::Dimension(format!(
                    "wire {wire} out of range for width {}",
                    self.width
                )));
            }
            staged.push((wire, self.compose(terms, bias)?));
        }
        for (wire, composed) in staged {
            self.pending[wire] = composed;
        }
        Ok(())
    }

    /// Materializes the pending affines as one layer with the given tags.
    pub fn emit(&mut self, tags: Vec<ActivationTag>) -> Result<()> {
        let rows: Vec<(Vec<f64>, f64)> = self.pending.clone();
        let affine = AffineMap::from_rows(self.prev_dim, &rows)?;
        self.layers.push(Layer::new(affine, tags)?);
        self.pending = (0..self.width)
            .map(|w| {
                let mut row = vec![0.0; self.width];
                row[w] = 1.0;
                (row, 0.0)
            })
            .collect();
        self.prev_dim = self.width;
        Ok(())
    }

    /// Materializes a layer where the named wires get the given tags and
    /// every other wire passes through as an identity.
    pub fn emit_with(&mut self, tagged: &[(usize, ActivationTag)]) -> Result<()> {
        let mut tags = vec![ActivationTag::Identity; self.width];
        for (wire, tag) in tagged {
            if *wire >= self.width {
                return Err(Error::Dimension(format!(
                    "wire {wire} out of range for width {}",
                    self.width
                )));
            }
            tags[*wire] = tag.clone();
        }
        self.emit(tags)
    }

    /// Builds the network with a readout given as affine combinations of
    /// wire values; pending updates fold into it.
    pub fn finish(self, readout: &[(&[(usize, f64)], f64)]) -> Result<Network> {
        let mut rows = Vec::with_capacity(readout.len());
        for &(terms, bias) in readout {
            rows.push(self.compose(terms, bias)?);
        }
        let readout = AffineMap::from_rows(self.prev_dim, &rows)?;
        Network::new(self.input_dim, self.layers, readout)
    }
}
