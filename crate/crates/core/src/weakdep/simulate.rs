// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::seed;

pub const DEFAULT_BURN_IN: usize = 1000;

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Scalar recursions driving the inputs, with Gaussian innovations `e_t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum Process {
    /// `X_t = a X_{t−1} + σ e_t`
    #[serde(rename = "AR1", alias = "ar1")]
    Ar1 { a: f64, noise_sd: f64 },
    /// `X_t = e_t √(ω + α₁ X_{t−1}²)`
    #[serde(rename = "ARCH1", alias = "arch1")]
    Arch1 { omega: f64, alpha1: f64 },
    /// `X_t = a₊ max(X_{t−1}, 0) + a₋ min(X_{t−1}, 0) + σ e_t`
    #[serde(rename = "TAR1", alias = "tar1")]
    Tar1 { a_plus: f64, a_minus: f64, noise_sd: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    #[serde(flatten)]
    pub process: Process,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl ProcessSpec {
    pub fn ar1(a: f64, noise_sd: f64) -> Self {
        ProcessSpec { process: Process::Ar1 { a, noise_sd }, burn_in: DEFAULT_BURN_IN }
    }

    /// Every stationarity violation, so callers can report them together.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut sd = |name: &str, v: f64| {
            if !(v > 0.0) || !v.is_finite() {
                out.push(format!("{name} must be positive (got {v})"));
            }
        };
        match self.process {
            Process::Ar1 { a, noise_sd } => {
                sd("noise_sd", noise_sd);
                if !(a.abs() < 1.0) {
                    out.push(format!("AR1 stationarity requires |a| < 1 (got a = {a})"));
                }
            }
            Process::Arch1 { omega, alpha1 } => {
                sd("omega", omega);
                if !(0.0..1.0).contains(&alpha1) {
                    out.push(format!("ARCH1 stationarity requires 0 ≤ alpha1 < 1 (got {alpha1})"));
                }
            }
            Process::Tar1 { a_plus, a_minus, noise_sd } => {
                sd("noise_sd", noise_sd);
                if !(a_plus.abs() < 1.0 && a_minus.abs() < 1.0) {
                    out.push(format!(
                        "TAR1 stationarity requires |a_plus|, |a_minus| < 1 (got {a_plus}, {a_minus})"
                    ));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.problems().into_iter().next() {
            Some(p) => input(p),
            None => Ok(()),
        }
    }

    pub fn digest(&self) -> String {
        seed::sha256_hex(serde_json::to_string(self).expect("specs serialize").as_bytes())
    }

    fn step(&self, prev: f64, e: f64) -> f64 {
        match self.process {
            Process::Ar1 { a, noise_sd } => a * prev + noise_sd * e,
            Process::Arch1 { omega, alpha1 } => e * (omega + alpha1 * prev * prev).sqrt(),
            Process::Tar1 { a_plus, a_minus, noise_sd } => a_plus * prev.max(0.0) + a_minus * prev.min(0.0) + noise_sd * e,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub values: Vec<f64>,
    pub seed: u64,
    pub spec_digest: String,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `n` post-burn-in values. Innovations are drawn sequentially from one
/// stream, so a shorter path is always a prefix of a longer one.
pub fn simulate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<Trajectory> {
    simulate_with_label(spec, n, seed, "process")
}

pub(crate) fn simulate_with_label(spec: &ProcessSpec, n: usize, root: u64, label: &str) -> Result<Trajectory> {
    spec.validate()?;
    if n == 0 {
        return input("trajectory length must be at least 1");
    }
    let mut rng = seed::rng(root, label, &[]);
    let mut x = 0.0;
    for _ in 0..spec.burn_in {
        x = spec.step(x, rng.sample(StandardNormal));
    }
    let values = (0..n)
        .map(|_| {
            x = spec.step(x, rng.sample(StandardNormal));
            x
        })
        .collect();
    Ok(Trajectory { values, seed: root, spec_digest: spec.digest() })
}
