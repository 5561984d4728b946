// SPDX-License-Identifier: Apache-2.0

//! Built-in smooth targets with closed-form partials. Each target's norm
//! bound `K` is assembled from per-order derivative bounds `D_j`:
//! `K(s) = Σ_{j≤k} N_j D_j + N_k·max(2 D_k, d·D_{k+1})` with `k = ⌊s⌋` and
//! `N_j` the number of order-`j` multi-indices.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use super::target::{count_of_order, DomainBox, EvalFn, HolderTarget, PartialFn};
use crate::error::{input, Result};

pub const CORPUS_NAMES: [&str; 7] =
    ["sin1d", "bump1d", "abs15_1d", "sinprod2d", "gauss2d", "sin_half", "const1d"];

/// Smoothness order conventionally paired with each target.
pub fn default_s(name: &str) -> Option<f64> {
    match name {
        "sin1d" | "sinprod2d" | "sin_half" => Some(2.5),
        "bump1d" | "abs15_1d" | "gauss2d" | "const1d" => Some(1.5),
        _ => None,
    }
}

/// `∂^j` of `sin(ω x)` is `ω^j sin(ω x + jπ/2)`.
fn sin_deriv(omega: f64, j: u32, x: f64) -> f64 {
    omega.powi(j as i32) * (omega * x + j as f64 * PI / 2.0).sin()
}

/// `∂^j e^{-x²} = (-1)^j H_j(x) e^{-x²}` with physicists' Hermite `H_j`.
fn bump_deriv(j: u32, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * x);
    let hj = match j {
        0 => h0,
        _ => {
            for n in 1..j {
                let next = 2.0 * x * h1 - 2.0 * n as f64 * h0;
                h0 = h1;
                h1 = next;
            }
            h1
        }
    };
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    sign * hj * (-x * x).exp()
}

/// Upper bound of `sup_{[-1,1]} |f_j|` from a fine lattice sample, widened by
/// the lattice half-spacing times a bound on the next derivative.
fn lattice_sup(f: impl Fn(u32, f64) -> f64, j: u32) -> f64 {
    let n = 20_000;
    let h = 2.0 / n as f64;
    let sup = |order: u32| (0..=n).map(|i| f(order, -1.0 + i as f64 * h).abs()).fold(0.0, f64::max);
    sup(j) + 0.5 * h * 1.01 * (sup(j + 1) + 0.5 * h * sup(j + 2) * 1.01)
}

fn norm_from_bounds(d: usize, s: f64, bounds: impl Fn(u32) -> f64) -> f64 {
    let k = s.floor() as u32;
    let lower: f64 = (0..=k).map(|j| count_of_order(d, j) as f64 * bounds(j)).sum();
    lower + count_of_order(d, k) as f64 * (2.0 * bounds(k)).max(d as f64 * bounds(k + 1))
}

pub fn corpus_target(name: &str, s: f64) -> Result<HolderTarget> {
    if s.fract() == 0.0 {
        return input(format!("integer smoothness s = {s} is not supported; choose a non-integer order"));
    }
    if !(s > 0.0) {
        return input(format!("smoothness s must be positive (got {s})"));
    }
    let max_s = if name == "abs15_1d" { 1.5 } else { 6.5 };
    if s > max_s {
        return input(format!("target `{name}` supports s ≤ {max_s} (got {s})"));
    }
    let d1 = DomainBox::cube(1, -1.0, 1.0)?;
    let d2 = DomainBox::cube(2, -1.0, 1.0)?;
    let (dom, eval, partial, k_norm): (DomainBox, EvalFn, PartialFn, f64) = match name {
        "sin1d" | "sin_half" => {
            let amp = if name == "sin1d" { 1.0 } else { 0.5 };
            (
                d1,
                Arc::new(move |x| vec![amp * (PI * x[0]).sin()]),
                Arc::new(move |b, x| vec![amp * sin_deriv(PI, b[0], x[0])]),
                norm_from_bounds(1, s, |j| amp * PI.powi(j as i32)),
            )
        }
        "bump1d" => (
            d1,
            Arc::new(|x| vec![(-x[0] * x[0]).exp()]),
            Arc::new(|b, x| vec![bump_deriv(b[0], x[0])]),
            norm_from_bounds(1, s, |j| lattice_sup(bump_deriv, j)),
        ),
        "abs15_1d" => {
            let k_norm = if s < 1.0 {
                1.0 + 2.0_f64.max(1.5)
            } else {
                1.0 + 1.5 + 1.5 * SQRT_2 * 2f64.powf(1.5 - s)
            };
            (
                d1,
                Arc::new(|x| vec![x[0].abs().powf(1.5)]),
                Arc::new(|b, x| {
                    vec![match b[0] {
                        0 => x[0].abs().powf(1.5),
                        1 => 1.5 * x[0].abs().sqrt() * x[0].signum(),
                        _ => f64::NAN,
                    }]
                }),
                k_norm,
            )
        }
        "sinprod2d" => {
            let w = PI / 2.0;
            (
                d2,
                Arc::new(move |x| vec![(w * x[0]).sin() * (w * x[1]).cos()]),
                Arc::new(move |b, x| {
                    let cos_part = w.powi(b[1] as i32) * (w * x[1] + (b[1] as f64 + 1.0) * PI / 2.0).sin();
                    vec![sin_deriv(w, b[0], x[0]) * cos_part]
                }),
                norm_from_bounds(2, s, |j| w.powi(j as i32)),
            )
        }
        "gauss2d" => {
            let per_axis: Vec<f64> = (0..10).map(|j| lattice_sup(bump_deriv, j)).collect();
            let order_bound =
                move |j: u32| (0..=j).map(|a| per_axis[a as usize] * per_axis[(j - a) as usize]).fold(0.0, f64::max);
            (
                d2,
                Arc::new(|x| vec![(-x[0] * x[0] - x[1] * x[1]).exp()]),
                Arc::new(|b, x| vec![bump_deriv(b[0], x[0]) * bump_deriv(b[1], x[1])]),
                norm_from_bounds(2, s, order_bound),
            )
        }
        "const1d" => (
            d1,
            Arc::new(|_| vec![0.5]),
            Arc::new(|b, _| vec![if b[0] == 0 { 0.5 } else { 0.0 }]),
            0.5,
        ),
        other => {
            return input(format!("unknown target `{other}`; known targets: {}", CORPUS_NAMES.join(", ")))
        }
    };
    HolderTarget::new(name, 1, s, k_norm, dom, eval, Some(partial))
}

/// The five targets used for interpolation studies, each at its default order.
pub fn study_corpus() -> Vec<HolderTarget> {
    ["sin1d", "bump1d", "abs15_1d", "sinprod2d", "gauss2d"]
        .iter()
        .map(|n| corpus_target(n, default_s(n).expect("study targets have defaults")).expect("corpus builds"))
        .collect()
}
