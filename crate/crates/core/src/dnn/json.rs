// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::activation::{Activation, ActivationKind};
use super::layer::Layer;
use super::network::Network;
use crate::error::{input, Error, Result};

/// Layers with more entries than this are written as `(row, col, value)` triplets.
pub const DENSE_LIMIT: usize = 65_536;

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    w: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    w_sparse: Option<Vec<(usize, usize, f64)>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    activation: ActivationKind,
    a: Option<f64>,
    widths: Vec<usize>,
    layers: Vec<LayerDoc>,
    clamp: Option<f64>,
}

impl Network {
    pub fn to_json(&self) -> String {
        let layers = self
            .layers()
            .iter()
            .map(|l| {
                if l.rows() * l.cols() <= DENSE_LIMIT {
                    LayerDoc { w: Some(l.dense()), w_sparse: None, b: l.bias().to_vec() }
                } else {
                    LayerDoc { w: None, w_sparse: Some(l.entries().collect()), b: l.bias().to_vec() }
                }
            })
            .collect();
        let doc = NetworkDoc {
            activation: self.activation().kind(),
            a: self.activation().shape(),
            widths: self.widths(),
            layers,
            clamp: self.clamp(),
        };
        serde_json::to_string(&doc).expect("network documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Network> {
        let doc: NetworkDoc =
            serde_json::from_str(text).map_err(|e| Error::Input(format!("network JSON: {e}")))?;
        if doc.widths.len() != doc.layers.len() + 1 {
            return input("widths must have one more entry than layers");
        }
        let act = Activation::new(doc.activation, doc.a)?;
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                let (cols, rows) = (doc.widths[k], doc.widths[k + 1]);
                if l.b.len() != rows {
                    return input(format!("layer {} bias length disagrees with widths", k + 1));
                }
                match (l.w, l.w_sparse) {
                    (Some(w), None) => {
                        if w.len() != rows {
                            return input(format!("layer {} has the wrong number of rows", k + 1));
                        }
                        Layer::from_dense(cols, &w, l.b)
                    }
                    (None, Some(trip)) => {
                        let mut rs = vec![Vec::new(); rows];
                        for (i, j, v) in trip {
                            if i >= rows {
                                return input(format!("layer {} row index out of range", k + 1));
                            }
                            rs[i].push((j, v));
                        }
                        Layer::from_sparse_rows(cols, rs, l.b)
                    }
                    _ => input(format!("layer {} needs exactly one of `w` or `w_sparse`", k + 1)),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(act, layers, doc.clamp)
    }
}
