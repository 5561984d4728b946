// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::approx::DomainBox;
use crate::dnn::ClassConstraints;
use crate::erm::Loss;
use crate::error::{input, Result};

/// Scale constants of the class schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseConstants {
    #[serde(rename = "L0")]
    pub l0: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    #[serde(rename = "S0")]
    pub s0: f64,
}

/// Class caps at sample size `n` for exponent `alpha` and ratio `d_x/s`:
/// `L = ⌈(L0/α) ln n⌉`, `N = ⌈N0 n^{r/α}⌉`, `S = ⌈(S0/α) n^{r/α} ln n⌉`,
/// `B = n^{4(r+1)/α}`.
pub fn class_schedule(n: usize, alpha: f64, dx_over_s: f64, base: &BaseConstants, f_n: f64) -> Result<ClassConstraints> {
    if n < 2 {
        return input(format!("class schedule needs n ≥ 2 (got {n})"));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let grow = nf.powf(dx_over_s / alpha);
    ClassConstraints::new(
        (base.l0 / alpha * ln).ceil(),
        (base.n0 * grow).ceil(),
        (base.s0 / alpha * grow * ln).ceil(),
        nf.powf(4.0 * (dx_over_s + 1.0) / alpha),
        f_n,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundIngredients {
    /// Sup of the loss over the `max(F, ‖𝒴‖)` box.
    pub m_tilde: f64,
    pub mn_cap: f64,
    pub gn_cap: f64,
}

pub const BALL_GRID: usize = 401;

/// `y_range = (lo, hi)` must be finite.
pub fn bound_ingredients(f: f64, loss: &Loss, x_box: &DomainBox, y_range: (f64, f64)) -> Result<BoundIngredients> {
    let (lo, hi) = y_range;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return input(format!("label range must be a bounded interval (got [{lo}, {hi}])"));
    }
    let y_norm = lo.abs().max(hi.abs());
    let rho = f.max(y_norm);
    let step = 2.0 * rho / (BALL_GRID - 1) as f64;
    let at = |i: usize| if i + 1 == BALL_GRID { rho } else { -rho + i as f64 * step };
    let mut m_tilde: f64 = 0.0;
    for i in 0..BALL_GRID {
        for j in 0..BALL_GRID {
            m_tilde = m_tilde.max(loss.value(at(i), at(j)));
        }
    }
    let mn_cap = (m_tilde + 2.0 * loss.k_ell * (x_box.sup_norm() + y_norm)).max(1.0);
    Ok(BoundIngredients { m_tilde, mn_cap, gn_cap: loss.k_ell })
}

/// `n² / (n·Ĉ₁ + ln n · n^{ν−1/4} (2M)^ν / Ĉ₁)`.
pub fn cn2(n: f64, cn1_hat: f64, mn: f64, nu: f64) -> Result<f64> {
    if !(cn1_hat > 0.0) || !(n > 1.0) {
        return input(format!("cn2 needs Ĉ₁ > 0 and n > 1 (got {cn1_hat}, {n})"));
    }
    Ok(n * n / (n * cn1_hat + n.ln() * n.powf(nu - 0.25) * (2.0 * mn).powf(nu) / cn1_hat))
}

/// Right-hand side of the excess-risk bound with `C₁ = 1`; a shape
/// reference only.
pub fn reference_bound(n: f64, mn_cap: f64, k_ell: f64, alpha: f64, eta: f64, cn2: f64) -> f64 {
    let first = (2.0 * mn_cap + k_ell) / n.powf(1.0 / alpha);
    let inner = (2.0 * n.ln() / eta).ln() / cn2;
    first + inner.max(0.0).sqrt()
}
