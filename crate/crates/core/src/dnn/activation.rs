// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    LeakyRelu,
    Elu,
    Isrlu,
    SignRelu,
    Sigmoid,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 6] = [
        ActivationKind::Relu,
        ActivationKind::LeakyRelu,
        ActivationKind::Elu,
        ActivationKind::Isrlu,
        ActivationKind::SignRelu,
        ActivationKind::Sigmoid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::LeakyRelu => "leaky_relu",
            ActivationKind::Elu => "elu",
            ActivationKind::Isrlu => "isrlu",
            ActivationKind::SignRelu => "sign_relu",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let normalized = name.to_ascii_lowercase().replace('-', "_");
        ActivationKind::ALL
            .into_iter()
            .find(|k| k.name() == normalized || k.name().replace('_', "") == normalized)
            .map_or_else(|| input(format!("unknown activation `{name}`")), Ok)
    }

    /// Whether the kind takes a shape parameter `a`.
    pub fn has_shape(self) -> bool {
        !matches!(self, ActivationKind::Relu | ActivationKind::Sigmoid)
    }
}

/// An element-wise activation σ together with its shape parameter.
///
/// Every kind is globally Lipschitz. All kinds except `Sigmoid` act as the
/// identity on the positive half-line, hence on the segment [1/4, 3/4].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Activation {
    kind: ActivationKind,
    a: f64,
}

impl Activation {
    pub fn relu() -> Self {
        Activation { kind: ActivationKind::Relu, a: 0.0 }
    }

    pub fn leaky_relu(a: f64) -> Result<Self> {
        Self::new(ActivationKind::LeakyRelu, Some(a))
    }

    /// Validates the shape parameter range: `a ∈ (0,1)` for LeakyReLU and
    /// SignReLU, `a > 0` for ELU and ISRLU, no parameter otherwise.
    pub fn new(kind: ActivationKind, a: Option<f64>) -> Result<Self> {
        if !kind.has_shape() {
            return Ok(Activation { kind, a: 0.0 });
        }
        let Some(a) = a else {
            return input(format!("activation `{}` requires a shape parameter a", kind.name()));
        };
        let ok = match kind {
            ActivationKind::LeakyRelu | ActivationKind::SignRelu => a > 0.0 && a < 1.0,
            _ => a > 0.0 && a.is_finite(),
        };
        if !ok {
            return input(format!("shape parameter a = {a} out of range for `{}`", kind.name()));
        }
        Ok(Activation { kind, a })
    }

    pub fn kind(&self) -> ActivationKind {
        self.kind
    }

    /// Shape parameter, `None` for kinds that have none.
    pub fn shape(&self) -> Option<f64> {
        self.kind.has_shape().then_some(self.a)
    }

    #[inline]
    pub fn eval(&self, z: f64) -> f64 {
        let a = self.a;
        match self.kind {
            ActivationKind::Relu => z.max(0.0),
            ActivationKind::LeakyRelu => z.max(a * z),
            ActivationKind::Elu => {
                if z > 0.0 {
                    z
                } else {
                    a * z.exp_m1()
                }
            }
            ActivationKind::Isrlu => {
                if z > 0.0 {
                    z
                } else {
                    z / (1.0 + a * z * z).sqrt()
                }
            }
            ActivationKind::SignRelu => {
                if z >= 0.0 {
                    z
                } else {
                    a * z / (1.0 - z)
                }
            }
            ActivationKind::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative, with the one-sided convention σ'(0) = left derivative for
    /// the kinked kinds (so ReLU'(0) = 0).
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        let a = self.a;
        match self.kind {
            ActivationKind::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            ActivationKind::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            ActivationKind::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    a * z.exp()
                }
            }
            ActivationKind::Isrlu => {
                if z > 0.0 {
                    1.0
                } else {
                    (1.0 + a * z * z).powf(-1.5)
                }
            }
            ActivationKind::SignRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    a / ((1.0 - z) * (1.0 - z))
                }
            }
            ActivationKind::Sigmoid => {
                let s = 1.0 / (1.0 + (-z).exp());
                s * (1.0 - s)
            }
        }
    }

    pub fn apply_in_place(&self, zs: &mut [f64]) {
        if self.kind == ActivationKind::Relu {
            for z in zs {
                *z = z.max(0.0);
            }
        } else {
            for z in zs {
                *z = self.eval(*z);
            }
        }
    }

    /// Global Lipschitz constant 𝒦_σ.
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            ActivationKind::Relu
            | ActivationKind::LeakyRelu
            | ActivationKind::Isrlu
            | ActivationKind::SignRelu => 1.0,
            ActivationKind::Elu => self.a.max(1.0),
            ActivationKind::Sigmoid => 0.25,
        }
    }

    /// Continuous piecewise linear with finitely many breakpoints.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self.kind, ActivationKind::Relu | ActivationKind::LeakyRelu)
    }

    /// Three times continuously differentiable somewhere with nonvanishing
    /// first and second derivatives there.
    pub fn is_locally_quadratic(&self) -> bool {
        !self.is_piecewise_linear()
    }

    /// σ(z) = z for every z in [1/4, 3/4]. False only for the sigmoid.
    pub fn fixes_unit_segment(&self) -> bool {
        self.kind != ActivationKind::Sigmoid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<Activation> {
        vec![
            Activation::relu(),
            Activation::new(ActivationKind::LeakyRelu, Some(0.1)).unwrap(),
            Activation::new(ActivationKind::Elu, Some(1.5)).unwrap(),
            Activation::new(ActivationKind::Isrlu, Some(2.0)).unwrap(),
            Activation::new(ActivationKind::SignRelu, Some(0.5)).unwrap(),
            Activation::new(ActivationKind::Sigmoid, None).unwrap(),
        ]
    }

    #[test]
    fn fixed_segment_is_exact() {
        for act in all() {
            for i in 0..=10 {
                let z = 0.25 + 0.05 * i as f64;
                if act.fixes_unit_segment() {
                    assert_eq!(act.eval(z), z, "{:?} at {z}", act.kind());
                } else {
                    assert_ne!(act.eval(z), z);
                }
            }
        }
    }

    #[test]
    fn lipschitz_constant_holds_on_samples() {
        use rand::Rng;
        let mut rng = crate::seed::rng(1, "act-lip", &[]);
        for act in all() {
            for _ in 0..5000 {
                let x: f64 = rng.random_range(-20.0..20.0);
                let y: f64 = rng.random_range(-20.0..20.0);
                let lhs = (act.eval(x) - act.eval(y)).abs();
                assert!(lhs <= act.lipschitz() * (x - y).abs() * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn taxonomy() {
        let kinds: Vec<bool> = all().iter().map(|a| a.is_piecewise_linear()).collect();
        assert_eq!(kinds, vec![true, true, false, false, false, false]);
    }

    #[test]
    fn derivative_matches_differences() {
        for act in all() {
            for &z in &[-2.0, -0.7, 0.3, 1.9] {
                let h = 1e-6;
                let fd = (act.eval(z + h) - act.eval(z - h)) / (2.0 * h);
                assert!((fd - act.derivative(z)).abs() < 1e-6, "{:?} at {z}", act.kind());
            }
        }
    }

    #[test]
    fn shape_ranges() {
        assert!(Activation::new(ActivationKind::LeakyRelu, Some(1.0)).is_err());
        assert!(Activation::new(ActivationKind::Elu, None).is_err());
        assert!(Activation::new(ActivationKind::SignRelu, Some(-0.1)).is_err());
        assert!(ActivationKind::parse("LeakyReLU").is_ok());
        assert!(ActivationKind::parse("swish").is_err());
    }
}
