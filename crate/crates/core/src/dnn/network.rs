// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::layer::Layer;
use crate::error::{input, Result};

/// A feed-forward network `A_{L+1} ∘ σ ∘ A_L ∘ … ∘ σ ∘ A_1`, optionally
/// followed by coordinate-wise truncation to `[-F, F]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    activation: Activation,
    layers: Vec<Layer>,
    clamp: Option<f64>,
}

/// Size measurements of a network's parameter vector θ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub count: usize,
    pub sparsity: usize,
    pub max_abs: f64,
    pub depth: usize,
    pub width: usize,
}

/// Caps `(L, N, S, B, F)` of a constrained network class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassConstraints {
    #[serde(rename = "L")]
    pub depth: f64,
    #[serde(rename = "N")]
    pub width: f64,
    #[serde(rename = "S")]
    pub sparsity: f64,
    #[serde(rename = "B")]
    pub max_abs: f64,
    #[serde(rename = "F")]
    pub sup_norm: f64,
}

impl ClassConstraints {
    pub fn new(depth: f64, width: f64, sparsity: f64, max_abs: f64, sup_norm: f64) -> Result<Self> {
        let c = ClassConstraints { depth, width, sparsity, max_abs, sup_norm };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (tag, v) in [
            ("L", self.depth),
            ("N", self.width),
            ("S", self.sparsity),
            ("B", self.max_abs),
            ("F", self.sup_norm),
        ] {
            if !(v > 0.0) {
                return input(format!("class cap {tag} must be positive (got {v})"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub cap: &'static str,
    pub value: f64,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
    /// Largest output coordinate magnitude seen on the sample; the F check
    /// is only as strong as the sample.
    pub sampled_sup: f64,
}

impl Network {
    pub fn new(activation: Activation, layers: Vec<Layer>, clamp: Option<f64>) -> Result<Self> {
        if layers.is_empty() {
            return input("a network needs at least one affine layer");
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[1].cols() != pair[0].rows() {
                return input(format!(
                    "layer {} emits {} values but layer {} reads {}",
                    k + 1,
                    pair[0].rows(),
                    k + 2,
                    pair[1].cols()
                ));
            }
        }
        if layers.iter().any(|l| l.rows() == 0 || l.cols() == 0) {
            return input("all widths must be at least 1");
        }
        if let Some(f) = clamp {
            if !(f > 0.0) || f.is_nan() {
                return input(format!("output clamp must be positive (got {f})"));
            }
        }
        Ok(Network { activation, layers, clamp })
    }

    /// The network with every parameter zero.
    pub fn zeros(activation: Activation, widths: &[usize], clamp: Option<f64>) -> Result<Self> {
        if widths.len() < 2 {
            return input("widths must list at least input and output dimensions");
        }
        let layers = widths.windows(2).map(|w| Layer::zeros(w[1], w[0])).collect();
        Network::new(activation, layers, clamp)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn clamp(&self) -> Option<f64> {
        self.clamp
    }

    pub fn with_clamp(mut self, clamp: Option<f64>) -> Result<Self> {
        if let Some(f) = clamp {
            if !(f > 0.0) {
                return input(format!("output clamp must be positive (got {f})"));
            }
        }
        self.clamp = clamp;
        Ok(self)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].rows()
    }

    /// Number of hidden layers L.
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// `(p_0, …, p_{L+1})`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Layer::rows))
            .collect()
    }

    /// Largest hidden width; 0 for a pure affine map.
    pub fn width(&self) -> usize {
        self.layers[..self.depth()].iter().map(Layer::rows).max().unwrap_or(0)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return input(format!(
                "input has dimension {} but the network expects {}",
                x.len(),
                self.input_dim()
            ));
        }
        let mut out = vec![0.0; self.output_dim()];
        self.forward_into(x, &mut Scratch::default(), &mut out);
        Ok(out)
    }

    /// Allocation-free evaluation for hot loops; dimensions are the caller's
    /// responsibility.
    pub fn forward_into(&self, x: &[f64], scratch: &mut Scratch, out: &mut [f64]) {
        let last = self.layers.len() - 1;
        let (a, b) = (&mut scratch.a, &mut scratch.b);
        a.clear();
        a.extend_from_slice(x);
        for (k, layer) in self.layers.iter().enumerate() {
            if k == last {
                layer.apply(a, out);
            } else {
                b.resize(layer.rows(), 0.0);
                layer.apply(a, b);
                self.activation.apply_in_place(b);
                std::mem::swap(a, b);
            }
        }
        if let Some(f) = self.clamp {
            for o in out.iter_mut() {
                *o = o.clamp(-f, f);
            }
        }
    }

    /// Scalar-output convenience used by risk evaluation.
    pub fn eval1(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        let mut out = [0.0];
        self.forward_into(x, scratch, &mut out);
        out[0]
    }

    pub fn param_stats(&self) -> ParamStats {
        let count = self.layers.iter().map(|l| l.rows() * l.cols() + l.rows()).sum();
        let sparsity = self.layers.iter().map(|l| l.weight_nnz() + l.bias_nnz()).sum();
        let max_abs = self.layers.iter().map(Layer::max_abs).fold(0.0, f64::max);
        ParamStats { count, sparsity, max_abs, depth: self.depth(), width: self.width() }
    }

    /// θ(h): per layer, the weight matrix stacked column by column, then the bias.
    pub fn param_vector(&self) -> Vec<f64> {
        let mut theta = Vec::with_capacity(self.param_stats().count);
        for l in &self.layers {
            let w = l.dense();
            for j in 0..l.cols() {
                theta.extend(w.iter().map(|row| row[j]));
            }
            theta.extend_from_slice(l.bias());
        }
        theta
    }

    /// Inverse of [`Network::param_vector`] for this architecture.
    pub fn with_param_vector(&self, theta: &[f64]) -> Result<Network> {
        let count = self.param_stats().count;
        if theta.len() != count {
            return input(format!("parameter vector has length {} (expected {count})", theta.len()));
        }
        let mut off = 0;
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (r, c) = (l.rows(), l.cols());
            let mut rows = vec![Vec::new(); r];
            for j in 0..c {
                for (i, row) in rows.iter_mut().enumerate() {
                    let v = theta[off + j * r + i];
                    if v != 0.0 {
                        row.push((j, v));
                    }
                }
            }
            off += r * c;
            let bias = theta[off..off + r].to_vec();
            off += r;
            layers.push(Layer::from_sparse_rows(c, rows, bias)?);
        }
        Network::new(self.activation, layers, self.clamp)
    }

    pub fn check_membership(
        &self,
        c: &ClassConstraints,
        domain_sample: &[Vec<f64>],
    ) -> Result<MembershipReport> {
        if domain_sample.is_empty() {
            return input("membership check needs a nonempty domain sample");
        }
        let st = self.param_stats();
        let mut scratch = Scratch::default();
        let mut out = vec![0.0; self.output_dim()];
        let mut sup = 0.0_f64;
        for x in domain_sample {
            if x.len() != self.input_dim() {
                return input("domain sample point has the wrong dimension");
            }
            self.forward_into(x, &mut scratch, &mut out);
            sup = out.iter().fold(sup, |m, v| m.max(v.abs()));
        }
        let mut violations = Vec::new();
        for (cap, value, limit) in [
            ("L", st.depth as f64, c.depth),
            ("N", st.width as f64, c.width),
            ("S", st.sparsity as f64, c.sparsity),
            ("B", st.max_abs, c.max_abs),
            ("F", sup, c.sup_norm),
        ] {
            if !(value <= limit) {
                violations.push(Violation { cap, value, limit });
            }
        }
        Ok(MembershipReport { ok: violations.is_empty(), violations, sampled_sup: sup })
    }

    pub(crate) fn into_parts(self) -> (Activation, Vec<Layer>, Option<f64>) {
        (self.activation, self.layers, self.clamp)
    }
}

/// Reusable buffers for [`Network::forward_into`].
#[derive(Default, Clone, Debug)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}
