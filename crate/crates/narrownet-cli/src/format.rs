//! JSON file formats. Numbers round-trip exactly because serde_json prints
//! the shortest decimal that recovers the same f64.

use anyhow::{bail, Context, Result};
use narrownet::compile::{ShallowNet, Unit};
use narrownet::{ActivationTag, AffineMap, Layer, Network};
use serde::{Deserialize, Serialize};

/// On-disk network: `input_dim`, hidden `layers`, affine `readout`. Weight
/// matrices are row-major, one inner array per neuron. The activation name
/// "id" is reserved for the exact identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub input_dim: usize,
    pub layers: Vec<LayerFile>,
    pub readout: ReadoutFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerFile {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activations: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReadoutFile {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

/// On-disk shallow net mirroring `ShallowNet`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShallowNetFile {
    pub key: String,
    pub input_dim: usize,
    pub units: Vec<UnitFile>,
    pub out_bias: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UnitFile {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub coeff: f64,
}

fn affine_to_rows(map: &AffineMap) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut weights = Vec::with_capacity(map.out_dim());
    let mut bias = Vec::with_capacity(map.out_dim());
    for r in 0..map.out_dim() {
        let (row, b) = map.row(r);
        weights.push(row.to_vec());
        bias.push(b);
    }
    (weights, bias)
}

fn rows_to_affine(weights: &[Vec<f64>], bias: &[f64], what: &str) -> Result<AffineMap> {
    if weights.is_empty() {
        bail!("{what} needs at least one row");
    }
    if weights.len() != bias.len() {
        bail!(
            "{what} has {} weight rows but {} bias entries",
            weights.len(),
            bias.len()
        );
    }
    let in_dim = weights[0].len();
    let rows: Vec<(Vec<f64>, f64)> = weights
        .iter()
        .zip(bias.iter())
        .map(|(w, b)| (w.clone(), *b))
        .collect();
    AffineMap::from_rows(in_dim, &rows).with_context(|| format!("bad {what}"))
}

pub fn network_to_file(net: &Network) -> NetworkFile {
    let layers = net
        .layers()
        .iter()
        .map(|layer| {
            let (weights, bias) = affine_to_rows(&layer.affine);
            LayerFile {
                weights,
                bias,
                activations: layer
                    .activations
                    .iter()
                    .map(|t| t.name().to_string())
                    .collect(),
            }
        })
        .collect();
    let (weights, bias) = affine_to_rows(net.readout());
    NetworkFile {
        input_dim: net.input_dim(),
        layers,
        readout: ReadoutFile { weights, bias },
    }
}

pub fn file_to_network(file: &NetworkFile) -> Result<Network> {
    let mut layers = Vec::with_capacity(file.layers.len());
    for (i, l) in file.layers.iter().enumerate() {
        let affine = rows_to_affine(&l.weights, &l.bias, &format!("layer {i}"))?;
        let tags: Vec<ActivationTag> = l
            .activations
            .iter()
            .map(|name| ActivationTag::from_name(name))
            .collect();
        layers.push(Layer::new(affine, tags).with_context(|| format!("bad layer {i}"))?);
    }
    let readout = rows_to_affine(&file.readout.weights, &file.readout.bias, "readout")?;
    Network::new(file.input_dim, layers, readout).context("layers do not chain")
}

pub fn network_to_string(net: &Network) -> String {
    let mut s = serde_json::to_string_pretty(&network_to_file(net)).expect("plain data");
    s.push('\n');
    s
}

pub fn network_from_str(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text).context("not a network file")?;
    file_to_network(&file)
}

pub fn shallow_to_file(net: &ShallowNet) -> ShallowNetFile {
    ShallowNetFile {
        key: net.key.clone(),
        input_dim: net.input_dim,
        units: net
            .units
            .iter()
            .map(|u| UnitFile {
                weights: u.weights.clone(),
                bias: u.bias,
                coeff: u.coeff,
            })
            .collect(),
        out_bias: net.out_bias,
    }
}

pub fn file_to_shallow(file: &ShallowNetFile) -> Result<ShallowNet> {
    for (i, u) in file.units.iter().enumerate() {
        if u.weights.len() != file.input_dim {
            bail!(
                "unit {i} has {} weights, expected {}",
                u.weights.len(),
                file.input_dim
            );
        }
    }
    Ok(ShallowNet {
        key: file.key.clone(),
        input_dim: file.input_dim,
        units: file
            .units
            .iter()
            .map(|u| Unit {
                weights: u.weights.clone(),
                bias: u.bias,
                coeff: u.coeff,
            })
            .collect(),
        out_bias: file.out_bias,
    })
}

/// Accepts either one shallow-net object or an array of them; the array
/// order fixes the output order of the compiled network.
pub fn shallow_nets_from_str(text: &str) -> Result<Vec<ShallowNet>> {
    let files: Vec<ShallowNetFile> = match serde_json::from_str::<Vec<ShallowNetFile>>(text) {
        Ok(v) => v,
        Err(_) => vec![serde_json::from_str(text).context("not a shallow-net file")?],
    };
    if files.is_empty() {
        bail!("shallow-net file holds an empty array");
    }
    let dim = files[0].input_dim;
    if files.iter().any(|f| f.input_dim != dim) {
        bail!("shallow nets in one file must share input_dim");
    }
    files.iter().map(file_to_shallow).collect()
}

pub fn shallow_nets_to_string(nets: &[ShallowNet]) -> String {
    let files: Vec<ShallowNetFile> = nets.iter().map(shallow_to_file).collect();
    let mut s = serde_json::to_string_pretty(&files).expect("plain data");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use narrownet::act::builtin_registry;
    use narrownet::gadgets::mult_gadget;

    #[test]
    fn network_round_trip_is_bit_exact() {
        let net = mult_gadget().as_network().unwrap();
        let text = network_to_string(&net);
        let back = network_from_str(&text).unwrap();
        assert_eq!(network_to_string(&back), text);
        let reg = builtin_registry();
        let a = net.evaluate(&[1.25, -3.5], &reg).unwrap();
        let b = back.evaluate(&[1.25, -3.5], &reg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shallow_round_trip_keeps_every_field() {
        let nets = vec![ShallowNet {
            key: "tanh".to_string(),
            input_dim: 2,
            units: vec![Unit {
                weights: vec![0.1, -0.2],
                bias: 0.3,
                coeff: -1.5,
            }],
            out_bias: 0.25,
        }];
        let text = shallow_nets_to_string(&nets);
        let back = shallow_nets_from_str(&text).unwrap();
        assert_eq!(back, nets);
    }

    #[test]
    fn single_object_and_array_both_parse() {
        let one = r#"{"key":"relu","input_dim":1,"units":[],"out_bias":0.0}"#;
        assert_eq!(shallow_nets_from_str(one).unwrap().len(), 1);
        let many = format!("[{one},{one}]");
        assert_eq!(shallow_nets_from_str(&many).unwrap().len(), 2);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(network_from_str("{}").is_err());
        assert!(shallow_nets_from_str("[]").is_err());
    }
}
