// SPDX-License-Identifier: Apache-2.0

use crate::dnn::{Activation, ActivationKind, Layer, Network};
use crate::error::{input, Result};

/// Re-express a ReLU network with another piecewise-linear activation,
/// realizing the same function on all of `R^{d_x}`.
///
/// For LeakyReLU with slope `a`, each hidden unit `t` is split into the pair
/// `σ(t), σ(−t)` and the following layer reads
/// `relu(t) = (σ(t) + a·σ(−t)) / (1 − a²)`. Depth is unchanged and every
/// hidden width doubles exactly.
pub fn convert_relu_to_pwl(net: &Network, target: Activation) -> Result<Network> {
    if net.activation().kind() != ActivationKind::Relu {
        return input("conversion expects a ReLU network");
    }
    match target.kind() {
        ActivationKind::Relu => return Ok(net.clone()),
        ActivationKind::LeakyRelu => {}
        other => {
            return input(format!(
                "conversion targets must be piecewise linear (relu or leaky_relu), got {}",
                other.name()
            ))
        }
    }
    let a = target.shape().expect("leaky relu carries a slope");
    let denom = 1.0 - a * a;
    let last = net.layers().len() - 1;
    let mut layers = Vec::with_capacity(net.layers().len());
    for (k, l) in net.layers().iter().enumerate() {
        let split_input = k > 0;
        let split_output = k < last;
        let cols = if split_input { 2 * l.cols() } else { l.cols() };
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for i in 0..l.rows() {
            let row: Vec<(usize, f64)> = if split_input {
                l.row(i).flat_map(|(j, w)| [(2 * j, w / denom), (2 * j + 1, w * a / denom)]).collect()
            } else {
                l.row(i).collect()
            };
            if split_output {
                rows.push(row.clone());
                bias.push(l.bias()[i]);
                rows.push(row.into_iter().map(|(j, w)| (j, -w)).collect());
                bias.push(-l.bias()[i]);
            } else {
                rows.push(row);
                bias.push(l.bias()[i]);
            }
        }
        layers.push(Layer::from_sparse_rows(cols, rows, bias)?);
    }
    Network::new(target, layers, net.clamp())
}
