// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    Absolute,
    /// Smooth-L1 form: `r²/(2δ)` for `|r| ≤ δ`, else `|r| − δ/2`.
    Huber { delta: f64 },
    Hinge,
    Logistic,
    Squared,
}

impl LossKind {
    pub const NAMES: [&'static str; 5] = ["absolute", "huber", "hinge", "logistic", "squared"];

    /// Parse a bare kind name; Huber gets `δ = 1`.
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "absolute" => Ok(LossKind::Absolute),
            "huber" => Ok(LossKind::Huber { delta: 1.0 }),
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            other => input(format!("unknown loss `{other}`; expected one of {}", Self::NAMES.join(", "))),
        }
    }
}

/// A loss `ℓ(u, y)` with its Lipschitz constant on the working range
/// `[−F, F] × [−‖𝒴‖, ‖𝒴‖]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Loss {
    pub kind: LossKind,
    pub k_ell: f64,
}

impl Loss {
    /// `f_bound` is the output cap `F`, `y_bound` the label radius `‖𝒴‖`.
    pub fn new(kind: LossKind, f_bound: f64, y_bound: f64) -> Result<Self> {
        if let LossKind::Huber { delta } = kind {
            if !(delta > 0.0) {
                return input(format!("huber delta must be positive (got {delta})"));
            }
        }
        if !(f_bound > 0.0) || !(y_bound >= 0.0) || !f_bound.is_finite() || !y_bound.is_finite() {
            return input("loss working range needs finite F > 0 and ‖𝒴‖ ≥ 0");
        }
        let k_ell = match kind {
            LossKind::Absolute | LossKind::Huber { .. } => 1.0,
            // |∂ℓ/∂u| ≤ |y| and |∂ℓ/∂y| ≤ |u|
            LossKind::Hinge | LossKind::Logistic => 1f64.max(f_bound).max(y_bound),
            LossKind::Squared => 2.0 * (f_bound + y_bound),
        };
        Ok(Loss { kind, k_ell })
    }

    #[inline]
    pub fn value(&self, u: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Absolute => (u - y).abs(),
            LossKind::Huber { delta } => {
                let r = (u - y).abs();
                if r <= delta {
                    r * r / (2.0 * delta)
                } else {
                    r - delta / 2.0
                }
            }
            LossKind::Hinge => (1.0 - y * u).max(0.0),
            LossKind::Logistic => softplus(-y * u),
            LossKind::Squared => (u - y) * (u - y),
        }
    }

    /// `∂ℓ/∂u`, with the zero subgradient at kinks.
    #[inline]
    pub fn deriv(&self, u: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Absolute => sign0(u - y),
            LossKind::Huber { delta } => {
                let r = u - y;
                if r.abs() <= delta {
                    r / delta
                } else {
                    r.signum()
                }
            }
            LossKind::Hinge => {
                if y * u < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Logistic => -y * sigmoid(-y * u),
            LossKind::Squared => 2.0 * (u - y),
        }
    }
}

fn sign0(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn all(f: f64, y: f64) -> Vec<Loss> {
        [LossKind::Absolute, LossKind::Huber { delta: 0.5 }, LossKind::Hinge, LossKind::Logistic, LossKind::Squared]
            .into_iter()
            .map(|k| Loss::new(k, f, y).unwrap())
            .collect()
    }

    #[test]
    fn derivatives_match_differences_off_kinks() {
        for loss in all(2.0, 1.5) {
            for &(u, y) in &[(0.3, 1.0), (-1.2, -1.0), (1.7, 0.4), (-0.4, 1.0)] {
                let h = 1e-6;
                let fd = (loss.value(u + h, y) - loss.value(u - h, y)) / (2.0 * h);
                assert!((fd - loss.deriv(u, y)).abs() < 1e-6, "{:?} at {u},{y}", loss.kind);
            }
        }
    }

    #[test]
    fn lipschitz_constants_hold_on_working_range() {
        let mut rng = crate::seed::rng(1, "loss", &[]);
        for (f, yb) in [(1.0, 1.0), (2.0, 3.0)] {
            for loss in all(f, yb) {
                for _ in 0..10_000 {
                    let (u, v) = (rng.random_range(-f..=f), rng.random_range(-f..=f));
                    let (y, z) = (rng.random_range(-yb..=yb), rng.random_range(-yb..=yb));
                    let lhs = (loss.value(u, y) - loss.value(v, z)).abs();
                    assert!(lhs <= loss.k_ell * ((u - v).abs() + (y - z).abs()) * (1.0 + 1e-12) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn kink_conventions() {
        let abs = Loss::new(LossKind::Absolute, 1.0, 1.0).unwrap();
        assert_eq!(abs.deriv(0.5, 0.5), 0.0);
        let hinge = Loss::new(LossKind::Hinge, 1.0, 1.0).unwrap();
        assert_eq!(hinge.deriv(1.0, 1.0), 0.0);
        assert!(Loss::new(LossKind::Huber { delta: 0.0 }, 1.0, 1.0).is_err());
    }
}
