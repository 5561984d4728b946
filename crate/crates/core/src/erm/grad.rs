// SPDX-License-Identifier: Apache-2.0

use super::loss::Loss;
use crate::dnn::{Activation, Network};
use crate::error::{input, Result};
use crate::weakdep::Dataset;

/// Dense parameter view of a scalar-output network, laid out exactly as θ(h):
/// per layer the weight matrix column by column, then the bias.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseNet {
    pub activation: Activation,
    pub widths: Vec<usize>,
    pub params: Vec<f64>,
    pub clamp: Option<f64>,
    offsets: Vec<usize>,
}

/// Reusable per-sample buffers for forward/backward passes.
#[derive(Default)]
struct Work {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl DenseNet {
    pub fn new(activation: Activation, widths: Vec<usize>, params: Vec<f64>, clamp: Option<f64>) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return input("architecture needs at least two positive widths");
        }
        let mut offsets = Vec::with_capacity(widths.len());
        let mut off = 0;
        for w in widths.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        if params.len() != off {
            return input(format!("parameter vector has length {} (expected {off})", params.len()));
        }
        Ok(DenseNet { activation, widths, params, clamp, offsets })
    }

    pub fn from_network(net: &Network) -> Result<Self> {
        DenseNet::new(net.activation(), net.widths(), net.param_vector(), net.clamp())
    }

    pub fn to_network(&self) -> Result<Network> {
        Network::zeros(self.activation, &self.widths, self.clamp)?.with_param_vector(&self.params)
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn fan_in(&self, param: usize) -> usize {
        let layer = self.offsets.partition_point(|&o| o <= param) - 1;
        self.widths[layer]
    }

    fn layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Forward pass recording pre-activations; returns the clamped output and
    /// whether the clamp was active.
    fn forward_cached(&self, x: &[f64], w: &mut Work) -> (f64, bool) {
        let nl = self.layers();
        w.pre.resize(nl, Vec::new());
        w.post.resize(nl, Vec::new());
        for l in 0..nl {
            let (cols, rows) = (self.widths[l], self.widths[l + 1]);
            let off = self.offsets[l];
            let (wm, b) = self.params[off..off + rows * cols + rows].split_at(rows * cols);
            let mut z = std::mem::take(&mut w.pre[l]);
            z.clear();
            z.extend_from_slice(b);
            {
                let input: &[f64] = if l == 0 { x } else { &w.post[l - 1] };
                for (j, &a) in input.iter().enumerate() {
                    if a != 0.0 {
                        for (zi, wij) in z.iter_mut().zip(&wm[j * rows..(j + 1) * rows]) {
                            *zi += wij * a;
                        }
                    }
                }
            }
            let mut p = std::mem::take(&mut w.post[l]);
            p.clear();
            if l + 1 < nl {
                p.extend(z.iter().map(|&v| self.activation.eval(v)));
            } else {
                p.extend_from_slice(&z);
            }
            w.pre[l] = z;
            w.post[l] = p;
        }
        let out = w.post[nl - 1][0];
        match self.clamp {
            Some(f) if out.abs() > f => (out.signum() * f, true),
            _ => (out, false),
        }
    }

    /// Smallest `|pre-activation|` over hidden units at `x`; a distance
    /// proxy to the nearest activation kink.
    pub fn min_abs_preactivation(&self, x: &[f64]) -> f64 {
        let mut w = Work::default();
        self.forward_cached(x, &mut w);
        let hidden = w.pre.len() - 1;
        w.pre[..hidden].iter().flatten().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.forward_cached(x, &mut Work::default()).0
    }

    /// Accumulate `scale · ∂out/∂θ` into `grad`.
    fn backward(&self, x: &[f64], w: &mut Work, scale: f64, grad: &mut [f64]) {
        let nl = self.layers();
        w.delta.clear();
        w.delta.push(scale);
        for l in (0..nl).rev() {
            let (cols, rows) = (self.widths[l], self.widths[l + 1]);
            let off = self.offsets[l];
            let input: &[f64] = if l == 0 { x } else { &w.post[l - 1] };
            for (j, &a) in input.iter().enumerate() {
                if a != 0.0 {
                    for (g, d) in grad[off + j * rows..off + (j + 1) * rows].iter_mut().zip(&w.delta) {
                        *g += d * a;
                    }
                }
            }
            for (g, d) in grad[off + rows * cols..off + rows * cols + rows].iter_mut().zip(&w.delta) {
                *g += d;
            }
            if l == 0 {
                break;
            }
            let wm = &self.params[off..off + rows * cols];
            w.next.clear();
            for j in 0..cols {
                let s: f64 = wm[j * rows..(j + 1) * rows].iter().zip(&w.delta).map(|(a, b)| a * b).sum();
                w.next.push(s * self.activation.derivative(w.pre[l - 1][j]));
            }
            std::mem::swap(&mut w.delta, &mut w.next);
        }
    }

    pub fn risk(&self, data: &Dataset, loss: &Loss) -> f64 {
        let mut w = Work::default();
        let total: f64 = data.x.iter().zip(&data.y).map(|(x, &y)| loss.value(self.forward_cached(x, &mut w).0, y)).sum();
        total / data.len() as f64
    }

    /// Empirical risk and its gradient over the full batch.
    pub fn risk_and_grad(&self, data: &Dataset, loss: &Loss, grad: &mut Vec<f64>) -> f64 {
        grad.clear();
        grad.resize(self.params.len(), 0.0);
        let n = data.len() as f64;
        let mut w = Work::default();
        let mut total = 0.0;
        for (x, &y) in data.x.iter().zip(&data.y) {
            let (u, clamped) = self.forward_cached(x, &mut w);
            total += loss.value(u, y);
            let g = loss.deriv(u, y);
            if !clamped && g != 0.0 {
                self.backward(x, &mut w, g / n, grad);
            }
        }
        total / n
    }
}

pub fn empirical_risk(net: &Network, data: &Dataset, loss: &Loss) -> Result<f64> {
    if data.is_empty() {
        return input("empirical risk needs at least one sample");
    }
    if net.output_dim() != 1 || net.input_dim() != data.dim() {
        return input("network shape does not match the data");
    }
    let mut scratch = crate::dnn::Scratch::default();
    let total: f64 = data.x.iter().zip(&data.y).map(|(x, &y)| loss.value(net.eval1(x, &mut scratch), y)).sum();
    Ok(total / data.len() as f64)
}

/// Gradient of the empirical risk with respect to θ(h).
pub fn gradient(net: &Network, data: &Dataset, loss: &Loss) -> Result<Vec<f64>> {
    if data.is_empty() {
        return input("gradient needs at least one sample");
    }
    if net.output_dim() != 1 || net.input_dim() != data.dim() {
        return input("network shape does not match the data");
    }
    let dense = DenseNet::from_network(net)?;
    let mut g = Vec::new();
    dense.risk_and_grad(data, loss, &mut g);
    Ok(g)
}
