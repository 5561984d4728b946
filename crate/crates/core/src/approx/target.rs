// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

pub type EvalFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// `(β, x) ↦ ∂^β h(x)` for every output coordinate.
pub type PartialFn = Arc<dyn Fn(&[u32], &[f64]) -> Vec<f64> + Send + Sync>;

pub const FD_STEP: f64 = 1e-4;

/// Axis-aligned compact box `Π_j [lo_j, hi_j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return input("box bounds must be nonempty and of equal length");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return input("box needs finite bounds with lo ≤ hi in every coordinate");
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        DomainBox::new(vec![lo; d], vec![hi; d])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// `sup_{x ∈ box} ‖x‖_max`.
    pub fn sup_norm(&self) -> f64 {
        self.lo.iter().chain(&self.hi).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    pub fn contains_box(&self, other: &DomainBox) -> bool {
        self.contains(&other.lo, 0.0) && self.contains(&other.hi, 0.0)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (a, b)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*a, *b);
        }
    }

    /// Tensor lattice with `per_axis` points per coordinate, endpoints included.
    pub fn lattice(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let per_axis = per_axis.max(1);
        let d = self.dim();
        let count = per_axis.pow(d as u32);
        (0..count)
            .map(|mut k| {
                let mut x = vec![0.0; d];
                for j in (0..d).rev() {
                    let i = k % per_axis;
                    k /= per_axis;
                    let t = if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
                    x[j] = self.lo[j] + t * (self.hi[j] - self.lo[j]);
                }
                x
            })
            .collect()
    }
}

/// A function `h: 𝒳 → R^{d_y}` with declared Hölder smoothness `s` and norm bound `K`.
#[derive(Clone)]
pub struct HolderTarget {
    pub name: String,
    pub d_x: usize,
    pub d_y: usize,
    pub s: f64,
    pub k_norm: f64,
    pub domain: DomainBox,
    eval: EvalFn,
    partial: Option<PartialFn>,
}

impl fmt::Debug for HolderTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HolderTarget")
            .field("name", &self.name)
            .field("d_x", &self.d_x)
            .field("d_y", &self.d_y)
            .field("s", &self.s)
            .field("k_norm", &self.k_norm)
            .field("domain", &self.domain)
            .field("closed_form_partials", &self.partial.is_some())
            .finish()
    }
}

impl HolderTarget {
    /// Partials may be omitted; they are then taken by nested central
    /// differences with step [`FD_STEP`], which limits accuracy.
    pub fn new(
        name: impl Into<String>,
        d_y: usize,
        s: f64,
        k_norm: f64,
        domain: DomainBox,
        eval: EvalFn,
        partial: Option<PartialFn>,
    ) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return input(format!("smoothness s must be positive (got {s})"));
        }
        if s.fract() == 0.0 {
            return input(format!(
                "integer smoothness s = {s} is not supported; pass a non-integer order such as {}",
                s - 0.5
            ));
        }
        if !(k_norm > 0.0) || !k_norm.is_finite() {
            return input(format!("Hölder norm bound K must be positive (got {k_norm})"));
        }
        if d_y == 0 {
            return input("output dimension must be at least 1");
        }
        Ok(HolderTarget { name: name.into(), d_x: domain.dim(), d_y, s, k_norm, domain, eval, partial })
    }

    /// `⌊s⌋`, the highest derivative order entering Taylor patches.
    pub fn order(&self) -> u32 {
        self.s.floor() as u32
    }

    pub fn has_closed_form_partials(&self) -> bool {
        self.partial.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        (self.eval)(x)
    }

    pub fn partial(&self, beta: &[u32], x: &[f64]) -> Vec<f64> {
        match &self.partial {
            Some(p) => p(beta, x),
            None => self.finite_difference(beta, x),
        }
    }

    fn finite_difference(&self, beta: &[u32], x: &[f64]) -> Vec<f64> {
        let Some(j) = beta.iter().position(|b| *b > 0) else {
            return self.eval(x);
        };
        let mut lower = beta.to_vec();
        lower[j] -= 1;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += FD_STEP;
        xm[j] -= FD_STEP;
        let fp = self.finite_difference(&lower, &xp);
        let fm = self.finite_difference(&lower, &xm);
        fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect()
    }

    /// Sampled Hölder norm over `probes`: sup of every partial up to order
    /// `⌊s⌋` plus the largest top-order Hölder quotient between probe pairs.
    /// A lower bound on the true norm, so `≤ K` is necessary but not sufficient.
    pub fn sampled_holder_norm(&self, probes: &[Vec<f64>]) -> f64 {
        let k = self.order();
        let r = self.s - k as f64;
        let mut total = 0.0;
        for beta in multi_indices(self.d_x, k) {
            let vals: Vec<Vec<f64>> = probes.iter().map(|x| self.partial(&beta, x)).collect();
            let sup = vals.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
            total += sup;
            if degree(&beta) == k {
                let mut q = 0.0_f64;
                for a in 0..probes.len() {
                    for b in a + 1..probes.len() {
                        let dist = probes[a]
                            .iter()
                            .zip(&probes[b])
                            .fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
                        if dist > 0.0 {
                            let diff = vals[a]
                                .iter()
                                .zip(&vals[b])
                                .fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
                            q = q.max(diff / dist.powf(r));
                        }
                    }
                }
                total += q;
            }
        }
        total
    }
}

pub fn degree(beta: &[u32]) -> u32 {
    beta.iter().sum()
}

pub fn factorial(beta: &[u32]) -> f64 {
    beta.iter().map(|&b| (1..=b).map(f64::from).product::<f64>()).product()
}

/// Every `β ∈ N_0^d` with `|β| ≤ max_order`, ordered by degree and then with
/// earlier coordinates carrying more weight (so `e_1` precedes `e_2`).
pub fn multi_indices(d: usize, max_order: u32) -> Vec<Vec<u32>> {
    fn fill(d: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for b in (0..=left).rev() {
            prefix.push(b);
            fill(d, left - b, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for deg in 0..=max_order {
        fill(d, deg, &mut Vec::new(), &mut out);
    }
    out
}

/// Number of multi-indices of order exactly `j` in `d` variables.
pub fn count_of_order(d: usize, j: u32) -> usize {
    binomial(j as usize + d - 1, d - 1)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
