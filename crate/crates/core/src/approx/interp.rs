// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::target::{degree, factorial, multi_indices, DomainBox, HolderTarget};
use crate::error::{input, Result};

const BOX_TOL: f64 = 1e-12;

/// The affine map `T(x) = x/R + shift·1` taking the domain into the unit cube.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rescale {
    pub r: f64,
    pub shift: f64,
}

impl Rescale {
    /// `R = max(1, 4‖𝒳‖)` and `shift = 1/2`, so `T(𝒳) ⊆ [1/4, 3/4]^d`.
    pub fn for_domain(domain: &DomainBox) -> Self {
        Rescale { r: (4.0 * domain.sup_norm()).max(1.0), shift: 0.5 }
    }

    pub fn identity() -> Self {
        Rescale { r: 1.0, shift: 0.0 }
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|v| v / self.r + self.shift).collect()
    }

    pub fn from_unit(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| (v - self.shift) * self.r).collect()
    }

    pub fn image(&self, domain: &DomainBox) -> DomainBox {
        DomainBox { lo: self.to_unit(&domain.lo), hi: self.to_unit(&domain.hi) }
    }
}

pub fn rescale_map(domain: &DomainBox) -> Rescale {
    Rescale::for_domain(domain)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub m: usize,
    pub d: usize,
}

impl GridSpec {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m < 4 {
            return input(format!("grid resolution must be at least 4 (got {m})"));
        }
        if d == 0 {
            return input("grid dimension must be positive");
        }
        Ok(GridSpec { m, d })
    }

    pub fn len(&self) -> usize {
        (self.m + 1).pow(self.d as u32)
    }
}

/// All points `(m_1, …, m_d)/𝔐` in lexicographic order.
pub fn build_grid(spec: GridSpec) -> Vec<Vec<f64>> {
    let side = spec.m + 1;
    (0..spec.len())
        .map(|mut k| {
            let mut z = vec![0.0; spec.d];
            for j in (0..spec.d).rev() {
                z[j] = (k % side) as f64 / spec.m as f64;
                k /= side;
            }
            z
        })
        .collect()
}

/// `Π_j (1 − 𝔐|x_j − z_j|)_+`.
pub fn hat_weight(x: &[f64], z: &[f64], m: usize) -> f64 {
    x.iter().zip(z).map(|(a, b)| (1.0 - m as f64 * (a - b).abs()).max(0.0)).product()
}

fn max_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs()))
}

/// Nearest point of `usable` to `z` in the max norm; ties go to the smaller
/// max norm and then to the lexicographically smaller point.
pub fn project_grid_point(z: &[f64], usable: &[Vec<f64>]) -> Result<Vec<f64>> {
    let tol = 1e-12;
    let mut best: Option<(&Vec<f64>, f64, f64)> = None;
    for u in usable {
        let (d, n) = (max_dist(z, u), u.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        let better = match best {
            None => true,
            Some((b, bd, bn)) => {
                if d < bd - tol {
                    true
                } else if d > bd + tol {
                    false
                } else if n < bn - tol {
                    true
                } else if n > bn + tol {
                    false
                } else {
                    u.partial_cmp(b) == Some(std::cmp::Ordering::Less)
                }
            }
        };
        if better {
            best = Some((u, d, n));
        }
    }
    best.map(|(u, _, _)| u.clone()).ok_or_else(|| crate::Error::Input("usable grid set is empty".into()))
}

/// Grid points inside a box, described by per-axis index ranges `[a_j, b_j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UsableBox {
    pub m: usize,
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl UsableBox {
    pub fn new(unit_box: &DomainBox, m: usize) -> Result<Self> {
        let mf = m as f64;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for (a, b) in unit_box.lo.iter().zip(&unit_box.hi) {
            let ia = ((a - BOX_TOL) * mf).ceil().max(0.0) as usize;
            let ib = ((b + BOX_TOL) * mf).floor().min(mf) as isize;
            if (ib as f64) < ia as f64 {
                return input(format!("no grid point of spacing 1/{m} lies in the domain"));
            }
            lo.push(ia);
            hi.push(ib as usize);
        }
        Ok(UsableBox { m, lo, hi })
    }

    pub fn count(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a + 1).product()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.count()).map(|k| self.point(&self.unflatten(k))).collect()
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| i as f64 / self.m as f64).collect()
    }

    /// Row-major position of a usable index inside the box.
    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.lo.iter().zip(&self.hi)).fold(0, |acc, (&i, (&a, &b))| acc * (b - a + 1) + (i - a))
    }

    pub fn unflatten(&self, mut k: usize) -> Vec<usize> {
        let d = self.lo.len();
        let mut idx = vec![0; d];
        for j in (0..d).rev() {
            let side = self.hi[j] - self.lo[j] + 1;
            idx[j] = self.lo[j] + k % side;
            k /= side;
        }
        idx
    }

    /// Closed-form [`project_grid_point`] for box-shaped usable sets.
    pub fn project(&self, idx: &[usize]) -> Vec<usize> {
        let dist = idx
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&m, (&a, &b))| a.saturating_sub(m).max(m.saturating_sub(b)))
            .max()
            .unwrap_or(0);
        idx.iter().zip(&self.lo).map(|(&m, &a)| a.max(m.saturating_sub(dist))).collect()
    }
}

/// Local polynomial `Σ_β c_β (y − ẑ)^β` attached to a grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaylorPatch {
    pub center: Vec<f64>,
    pub effective_center: Vec<f64>,
    /// `coeffs[b][o]` is `∂^β g_o(ẑ)/β!` for the `b`-th multi-index.
    pub coeffs: Vec<Vec<f64>>,
}

/// The local-Taylor interpolant `Pˢg(y) = Σ_z P_z g(y)·Π_j (1 − 𝔐|y_j − z_j|)_+`
/// of `g = h ∘ T⁻¹` on the unit cube.
#[derive(Clone, Debug)]
pub struct Interpolant {
    pub rescale: Rescale,
    pub m: usize,
    pub d: usize,
    pub d_y: usize,
    pub betas: Vec<Vec<u32>>,
    pub usable: UsableBox,
    /// Hölder norm bound of the rescaled function, `R^s K`.
    pub k_rescaled: f64,
    pub s: f64,
    coeffs: Vec<Vec<Vec<f64>>>,
}

impl Interpolant {
    /// Interpolate through the standard rescaling `T`.
    pub fn new(target: &HolderTarget, m: usize) -> Result<Self> {
        Self::with_rescale(target, m, Rescale::for_domain(&target.domain))
    }

    /// Interpolate in the target's own coordinates; the domain must lie in `[0,1]^d`.
    pub fn unit(target: &HolderTarget, m: usize) -> Result<Self> {
        if !DomainBox::cube(target.d_x, 0.0, 1.0)?.contains_box(&target.domain) {
            return input("unit-frame interpolation needs a domain inside the unit cube");
        }
        Self::with_rescale(target, m, Rescale::identity())
    }

    fn with_rescale(target: &HolderTarget, m: usize, rescale: Rescale) -> Result<Self> {
        GridSpec::new(m, target.d_x)?;
        let usable = UsableBox::new(&rescale.image(&target.domain), m)?;
        let betas = multi_indices(target.d_x, target.order());
        let coeffs = (0..usable.count())
            .map(|k| {
                let y = usable.point(&usable.unflatten(k));
                let x = rescale.from_unit(&y);
                betas
                    .iter()
                    .map(|b| {
                        let scale = rescale.r.powi(degree(b) as i32) / factorial(b);
                        target.partial(b, &x).into_iter().map(|v| v * scale).collect()
                    })
                    .collect()
            })
            .collect();
        Ok(Interpolant {
            rescale,
            m,
            d: target.d_x,
            d_y: target.d_y,
            betas,
            usable,
            k_rescaled: rescale.r.powf(target.s) * target.k_norm,
            s: target.s,
            coeffs,
        })
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec { m: self.m, d: self.d }
    }

    /// Patch attached to grid index `idx` (projected onto the usable set when outside).
    pub fn patch(&self, idx: &[usize]) -> TaylorPatch {
        let eff = self.usable.project(idx);
        TaylorPatch {
            center: self.usable.point(idx),
            effective_center: self.usable.point(&eff),
            coeffs: self.coeffs[self.usable.flatten(&eff)].clone(),
        }
    }

    pub(crate) fn coeffs_at(&self, eff: &[usize]) -> &[Vec<f64>] {
        &self.coeffs[self.usable.flatten(eff)]
    }

    fn eval_patch(&self, eff: &[usize], y: &[f64], out: &mut [f64], w: f64) {
        let c = self.coeffs_at(eff);
        let t: Vec<f64> = y.iter().zip(eff).map(|(v, &i)| v - i as f64 / self.m as f64).collect();
        for (beta, cb) in self.betas.iter().zip(c) {
            let mono: f64 = beta.iter().zip(&t).map(|(&b, tv)| tv.powi(b as i32)).product();
            for (o, cv) in out.iter_mut().zip(cb) {
                *o += w * cv * mono;
            }
        }
    }

    /// Evaluate at `y ∈ [0,1]^d` in rescaled coordinates, touching only the
    /// at most `2^d` grid points whose hats are nonzero at `y`.
    pub fn eval_unit(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.d {
            return input("point has the wrong dimension");
        }
        if y.iter().any(|v| !(-BOX_TOL..=1.0 + BOX_TOL).contains(v)) {
            return input("interpolant points must lie in the unit cube");
        }
        let mf = self.m as f64;
        let base: Vec<usize> = y.iter().map(|v| ((v * mf).floor().max(0.0) as usize).min(self.m)).collect();
        let mut out = vec![0.0; self.d_y];
        for corner in 0..(1usize << self.d) {
            let mut idx = Vec::with_capacity(self.d);
            let mut w = 1.0;
            for j in 0..self.d {
                let i = base[j] + (corner >> j & 1);
                if i > self.m {
                    w = 0.0;
                    break;
                }
                w *= (1.0 - mf * (y[j] - i as f64 / mf).abs()).max(0.0);
                idx.push(i);
            }
            if w > 0.0 {
                self.eval_patch(&self.usable.project(&idx), y, &mut out, w);
            }
        }
        Ok(out)
    }

    /// Evaluate at a point of the original domain.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval_unit(&self.rescale.to_unit(x))
    }

    /// `K·3^s·𝔐^{-s}` for the rescaled function.
    pub fn error_bound(&self) -> f64 {
        interpolant_error_bound(self.k_rescaled, self.s, self.m)
    }
}

pub fn interpolant_eval(target: &HolderTarget, m: usize, y: &[f64]) -> Result<Vec<f64>> {
    Interpolant::new(target, m)?.eval_unit(y)
}

pub fn interpolant_error_bound(k: f64, s: f64, m: usize) -> f64 {
    k * 3f64.powf(s) * (m as f64).powf(-s)
}

/// Smallest admissible `𝔐` whose interpolant bound is at most `budget`.
pub fn grid_for_budget(k_rescaled: f64, s: f64, budget: f64) -> usize {
    let raw = (3f64.powf(s) * k_rescaled / budget).powf(1.0 / s).ceil();
    (raw as usize).max(4)
}
