// SPDX-License-Identifier: Apache-2.0

//! Exact ReLU building blocks for realizing the grid interpolant.

use crate::dnn::{parallelize_many, select_inputs, then, Activation, Layer, Network};
use crate::error::{input, Result};

type Row = Vec<(usize, f64)>;

fn layer(cols: usize, rows: Vec<Row>, bias: Vec<f64>) -> Result<Layer> {
    Layer::from_sparse_rows(cols, rows, bias)
}

/// `(1 − 𝔐|x_j − z_j|)_+` on `R^d`, exactly, as a depth-2 ReLU network.
pub fn hat_network(d: usize, j: usize, z_j: f64, m: usize) -> Result<Network> {
    if j >= d {
        return input(format!("axis {j} out of range for dimension {d}"));
    }
    let mf = m as f64;
    let l1 = layer(d, vec![vec![(j, 1.0)], vec![(j, -1.0)]], vec![-z_j, z_j])?;
    let l2 = layer(2, vec![vec![(0, -mf), (1, -mf)]], vec![1.0])?;
    let l3 = layer(1, vec![vec![(0, 1.0)]], vec![0.0])?;
    Network::new(Activation::relu(), vec![l1, l2, l3], None)
}

/// Number of sawtooth compositions used for accuracy knob `m`.
pub fn sawtooth_count(m: u32) -> u32 {
    m.div_ceil(2).max(1)
}

/// `(a, b) ↦ ≈ ab` on `[0,1]²` with error at most `2^{-m-1}`.
///
/// Both `((a+b)/2)²` and `((a−b)/2)²` come from the same sawtooth
/// approximation `f(t) = t − Σ_i g_i(t)/4^i` of `t²`, so any input pair with
/// `a = 0` or `b = 0` is mapped to exactly zero.
pub fn mult_network(m: u32) -> Result<Network> {
    if m == 0 {
        return input("multiplication accuracy m must be at least 1");
    }
    Network::new(Activation::relu(), mult_layers(sawtooth_count(m))?, None)
}

fn mult_layers(sc: u32) -> Result<Vec<Layer>> {
    // hidden 1: S = (a+b)+, A = (a−b)+, Bm = (b−a)+
    let l1 = layer(
        2,
        vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, -1.0)], vec![(0, -1.0), (1, 1.0)]],
        vec![0.0; 3],
    )?;
    // hidden 2, per path p ∈ {0,1}: relu(t_p), relu(t_p − ½) with t_0 = S/2, t_1 = (A+Bm)/2
    let t_rows = [vec![(0, 0.5)], vec![(1, 0.5), (2, 0.5)]];
    let mut rows = Vec::new();
    let mut bias = Vec::new();
    for t in &t_rows {
        rows.push(t.clone());
        bias.push(0.0);
        rows.push(t.clone());
        bias.push(-0.5);
    }
    let mut layers = vec![l1, layer(3, rows, bias)?];
    // Track where each path keeps relu(g), relu(g − ½) and its running sum.
    let mut base = [0usize, 2];
    let mut acc: [Option<usize>; 2] = [None, None];
    let mut width = 4;
    for i in 1..sc {
        let scale = 0.25f64.powi(i as i32);
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        let mut next_base = [0; 2];
        let mut next_acc = [None; 2];
        for p in 0..2 {
            let g = vec![(base[p], 2.0), (base[p] + 1, -4.0)];
            next_base[p] = rows.len();
            rows.push(g.clone());
            bias.push(0.0);
            rows.push(g.clone());
            bias.push(-0.5);
            // running value t − Σ_{i' ≤ i} g_{i'}/4^{i'}; before the first update it is relu(t) = unit `base`
            let prev = acc[p].unwrap_or(base[p]);
            let mut a = vec![(prev, 1.0)];
            for &(c, w) in &g {
                if c == prev {
                    a[0].1 -= w * scale;
                } else {
                    a.push((c, -w * scale));
                }
            }
            next_acc[p] = Some(rows.len());
            rows.push(a);
            bias.push(0.0);
        }
        layers.push(layer(width, rows, bias)?);
        width = 6;
        base = next_base;
        acc = next_acc;
    }
    let scale = 0.25f64.powi(sc as i32);
    let mut out: Row = Vec::new();
    for (p, sign) in [(0usize, 1.0), (1usize, -1.0)] {
        let prev = acc[p].unwrap_or(base[p]);
        out.push((prev, sign));
        out.push((base[p], -sign * 2.0 * scale));
        out.push((base[p] + 1, sign * 4.0 * scale));
    }
    layers.push(layer(width, vec![out], vec![0.0])?);
    Ok(layers)
}

/// [`mult_network`] followed by truncation to `[0, 1]` through one more
/// hidden layer, so chained products keep their inputs in range.
pub fn mult01_network(m: u32) -> Result<Network> {
    let mut layers = mult_layers(sawtooth_count(m).max(1))?;
    let last = layers.pop().expect("mult layers are nonempty");
    let row: Row = last.row(0).collect();
    let cols = last.cols();
    layers.push(layer(cols, vec![row.clone(), row], vec![0.0, -1.0])?);
    layers.push(layer(2, vec![vec![(0, 1.0), (1, -1.0)]], vec![0.0])?);
    Network::new(Activation::relu(), layers, None)
}

/// Identity on nonnegative inputs through `depth` hidden single units.
pub fn passthrough_network(depth: usize) -> Result<Network> {
    let mut layers = Vec::with_capacity(depth + 1);
    for _ in 0..=depth {
        layers.push(layer(1, vec![vec![(0, 1.0)]], vec![0.0])?);
    }
    Network::new(Activation::relu(), layers, None)
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Op {
    Pass(usize),
    Mult(usize, usize),
}

/// Apply `ops` side by side to an `n_in`-vector of nonnegative signals.
pub(crate) fn stage(n_in: usize, ops: &[Op], mult: &Network, pass: &Network) -> Result<Network> {
    let relu = Activation::relu();
    let blocks = ops
        .iter()
        .map(|op| match *op {
            Op::Pass(i) => then(pass, &select_inputs(relu, n_in, &[i])?),
            Op::Mult(i, j) => then(mult, &select_inputs(relu, n_in, &[i, j])?),
        })
        .collect::<Result<Vec<_>>>()?;
    parallelize_many(&blocks.iter().collect::<Vec<_>>())
}

/// Shape parameters shared by every term of one approximant.
#[derive(Clone, Debug)]
pub(crate) struct TermPlan {
    pub d: usize,
    pub k: u32,
    pub m_grid: usize,
    pub betas: Vec<Vec<u32>>,
    pub mult: Network,
    pub pass: Network,
}

impl TermPlan {
    pub fn new(d: usize, k: u32, m_grid: usize, betas: Vec<Vec<u32>>, m_mult: u32) -> Result<Self> {
        let mult = mult01_network(m_mult)?;
        let pass = passthrough_network(mult.depth())?;
        Ok(TermPlan { d, k, m_grid, betas, mult, pass })
    }

    /// Half-width `r` of the window `t_j ∈ [−r, r]` mapped affinely onto `u_j ∈ [0, 1]`.
    pub fn radius(&self) -> f64 {
        3.0 / self.m_grid as f64
    }

    /// Coefficients of `Σ_β c_β t^β` rewritten in `u = (t + r)/(2r)`.
    pub fn reexpand(&self, c: &[f64]) -> Vec<f64> {
        let r = self.radius();
        let mut q = vec![0.0; self.betas.len()];
        for (gi, gamma) in self.betas.iter().enumerate() {
            for (bi, beta) in self.betas.iter().enumerate() {
                if c[bi] == 0.0 || beta.iter().zip(gamma).any(|(b, g)| g > b) {
                    continue;
                }
                let mut f = c[bi];
                for (&b, &g) in beta.iter().zip(gamma) {
                    f *= crate::approx::target::binomial(b as usize, g as usize) as f64
                        * (2.0 * r).powi(g as i32)
                        * (-r).powi((b - g) as i32);
                }
                q[gi] += f;
            }
        }
        q
    }

    /// Network computing `≈ Π_j hat_j(y) · Σ_β q_β u^β` for grid point `z`
    /// with expansion centre `zhat`.
    pub fn term(&self, z: &[f64], zhat: &[f64], q: &[f64]) -> Result<Network> {
        let (d, mf, r) = (self.d, self.m_grid as f64, self.radius());
        let with_u = self.k > 0;
        let mut rows = Vec::new();
        let mut bias = Vec::new();
        for j in 0..d {
            rows.push(vec![(j, 1.0)]);
            bias.push(-z[j]);
            rows.push(vec![(j, -1.0)]);
            bias.push(z[j]);
            if with_u {
                rows.push(vec![(j, 1.0)]);
                bias.push(r - zhat[j]);
                rows.push(vec![(j, 1.0)]);
                bias.push(-r - zhat[j]);
            }
        }
        let per = if with_u { 4 } else { 2 };
        let l1 = layer(d, rows, bias)?;
        let mut rows = Vec::new();
        for j in 0..d {
            rows.push(vec![(per * j, -mf), (per * j + 1, -mf)]);
        }
        if with_u {
            for j in 0..d {
                rows.push(vec![(4 * j + 2, 1.0 / (2.0 * r)), (4 * j + 3, -1.0 / (2.0 * r))]);
            }
        }
        let n2 = rows.len();
        let mut b2 = vec![1.0; d];
        b2.resize(n2, 0.0);
        let l2 = layer(per * d, rows, b2)?;
        let l3 = layer(n2, (0..n2).map(|i| vec![(i, 1.0)]).collect(), vec![0.0; n2])?;
        let mut net = Network::new(Activation::relu(), vec![l1, l2, l3], None)?;

        // Signals: hats 0..d, then u's d..2d. Fold hats into one product.
        let mut hat = 0usize;
        let mut n = n2;
        for j in 1..d {
            let mut ops = vec![Op::Mult(hat, j)];
            ops.extend((j + 1..d).map(Op::Pass));
            if with_u {
                ops.extend((d..2 * d).map(Op::Pass));
            }
            net = then(&stage(n, &ops, &self.mult, &self.pass)?, &net)?;
            n = ops.len();
            hat = 0;
        }
        // Now: [H, u_1..u_d] (or just [H]). Build v_β = H·u^β degree by degree.
        let u_at = |j: usize| 1 + j;
        let mut pos: Vec<Option<usize>> = vec![None; self.betas.len()];
        pos[0] = Some(hat);
        for deg in 1..=self.k {
            let mut ops: Vec<Op> = (0..n).map(Op::Pass).collect();
            for (bi, beta) in self.betas.iter().enumerate() {
                if crate::approx::target::degree(beta) != deg {
                    continue;
                }
                let j = beta.iter().rposition(|&b| b > 0).expect("positive degree");
                let mut lower = beta.clone();
                lower[j] -= 1;
                let li = self.betas.iter().position(|b| *b == lower).expect("lower index exists");
                pos[bi] = Some(ops.len());
                ops.push(Op::Mult(pos[li].expect("lower degree built first"), u_at(j)));
            }
            net = then(&stage(n, &ops, &self.mult, &self.pass)?, &net)?;
            n = ops.len();
        }
        let out: Row = pos
            .iter()
            .zip(q)
            .filter(|(_, &qv)| qv != 0.0)
            .map(|(p, &qv)| (p.expect("all monomials built"), qv))
            .collect();
        let head = Network::new(Activation::relu(), vec![layer(n, vec![out], vec![0.0])?], None)?;
        then(&head, &net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hat_network_examples() {
        let m = 8;
        let h = hat_network(2, 1, 0.5, m).unwrap();
        assert_eq!(h.depth(), 2);
        assert_eq!(h.forward(&[0.1, 0.5]).unwrap(), vec![1.0]);
        assert_eq!(h.forward(&[0.1, 0.5 + 1.0 / 8.0]).unwrap(), vec![0.0]);
        assert!((h.forward(&[0.0, 0.5 + 1.0 / 16.0]).unwrap()[0] - 0.5).abs() < 1e-15);
        for k in 0..=400 {
            let x = -1.0 + k as f64 / 200.0;
            let want = (1.0 - 8.0 * (x - 0.5f64).abs()).max(0.0);
            assert!((h.forward(&[0.0, x]).unwrap()[0] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn mult_network_meets_accuracy_on_grid() {
        for m in [1, 2, 3, 6, 9] {
            let net = mult_network(m).unwrap();
            assert_eq!(net.depth() as u32, sawtooth_count(m) + 1);
            let tol = 2f64.powi(-(m as i32));
            let mut worst = 0.0_f64;
            for i in 0..=200 {
                for j in 0..=200 {
                    let (a, b) = (i as f64 / 200.0, j as f64 / 200.0);
                    worst = worst.max((net.forward(&[a, b]).unwrap()[0] - a * b).abs());
                }
            }
            assert!(worst <= tol / 2.0, "m={m}: {worst}");
            assert_eq!(net.forward(&[0.0, 0.7]).unwrap()[0], 0.0);
            assert_eq!(net.forward(&[0.3, 0.0]).unwrap()[0], 0.0);
            assert!((net.forward(&[1.0, 1.0]).unwrap()[0] - 1.0).abs() <= tol);
        }
    }

    #[test]
    fn mult01_stays_in_unit_interval() {
        let net = mult01_network(4).unwrap();
        for i in 0..=50 {
            for j in 0..=50 {
                let v = net.forward(&[i as f64 / 50.0, j as f64 / 50.0]).unwrap()[0];
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
