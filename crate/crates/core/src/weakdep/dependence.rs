// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::simulate::Trajectory;
use crate::error::{input, Error, Result};
use crate::exec::Exec;
use crate::stats::{ols, LineFit};

/// Bounded 1-Lipschitz test functions `g: R → R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFn {
    /// `clamp(z, −1, 1)`
    Clamp,
    Tanh,
    /// `clamp(z − shift, −1, 1)`
    ShiftedClamp { shift: f64 },
}

impl TestFn {
    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            TestFn::Clamp => z.clamp(-1.0, 1.0),
            TestFn::Tanh => z.tanh(),
            TestFn::ShiftedClamp { shift } => (z - shift).clamp(-1.0, 1.0),
        }
    }
}

pub fn default_dictionary() -> Vec<TestFn> {
    vec![
        TestFn::Clamp,
        TestFn::Tanh,
        TestFn::ShiftedClamp { shift: 0.5 },
        TestFn::ShiftedClamp { shift: -0.5 },
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    Geometric,
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FittedRate {
    pub model: DecayModel,
    /// Geometric: `ρ` in `c(r) ≈ C e^{−ρ r}`. Polynomial: `γ` in `c(r) ≈ C r^{−γ}`.
    pub exponent: f64,
    pub r2: f64,
}

/// Empirical covariance decay. Only finitely many test functions of single
/// coordinates are probed, so `cov_abs` bounds the dependence coefficient from below.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DependenceEstimate {
    pub lags: Vec<usize>,
    pub cov_abs: Vec<f64>,
    pub null_band: f64,
    /// Lags whose covariance clears the null band; only these enter the fits.
    pub fit_lags: Vec<usize>,
    pub geometric: Option<FittedRate>,
    pub polynomial: Option<FittedRate>,
    pub fitted_rate: Option<FittedRate>,
    /// Whether the decay is consistent with `ε(r) = O(r^{−γ})` for some `γ > 3`.
    pub gamma_gt_3: Option<bool>,
}

fn cov_at(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n
}

pub fn estimate_dependence(
    traj: &Trajectory,
    lags: &[usize],
    dictionary: &[TestFn],
    exec: Exec,
) -> Result<DependenceEstimate> {
    let n = traj.len();
    if lags.is_empty() || dictionary.is_empty() {
        return input("need at least one lag and one test function");
    }
    if lags.windows(2).any(|w| w[0] >= w[1]) || lags[0] == 0 {
        return input("lags must be positive and strictly increasing");
    }
    if lags[lags.len() - 1] * 10 >= n {
        return input(format!("largest lag must be below a tenth of the trajectory length ({n})"));
    }
    let first = traj.values[0];
    if traj.values.iter().all(|v| *v == first) {
        return Err(Error::Estimation("trajectory is constant; covariances are degenerate".into()));
    }
    let mapped: Vec<Vec<f64>> = dictionary.iter().map(|g| traj.values.iter().map(|&z| g.eval(z)).collect()).collect();
    let cov_abs = exec.map(lags, |&r| {
        let mut best = 0.0_f64;
        for g1 in &mapped {
            for g2 in &mapped {
                best = best.max(cov_at(&g1[..n - r], &g2[r..]).abs());
            }
        }
        best
    });
    let null_band = 3.0 / (n as f64).sqrt();
    let (fit_lags, fit_cov): (Vec<usize>, Vec<f64>) =
        lags.iter().zip(&cov_abs).filter(|(_, c)| **c > null_band).map(|(r, c)| (*r, *c)).unzip();
    let log_c: Vec<f64> = fit_cov.iter().map(|c| c.ln()).collect();
    let rate = |model, xs: Vec<f64>| -> Option<FittedRate> {
        if xs.len() < 2 {
            return None;
        }
        ols(&xs, &log_c).map(|LineFit { slope, r2, .. }| FittedRate { model, exponent: -slope, r2 })
    };
    let geometric = rate(DecayModel::Geometric, fit_lags.iter().map(|&r| r as f64).collect());
    let polynomial = rate(DecayModel::Polynomial, fit_lags.iter().map(|&r| (r as f64).ln()).collect());
    let fitted_rate = match (geometric, polynomial) {
        (Some(g), Some(p)) => Some(if p.r2 > g.r2 { p } else { g }),
        (g, p) => g.or(p),
    };
    let gamma_gt_3 = fitted_rate.map(|f| match f.model {
        DecayModel::Geometric => f.exponent > 0.0,
        DecayModel::Polynomial => f.exponent > 3.0,
    });
    Ok(DependenceEstimate {
        lags: lags.to_vec(),
        cov_abs,
        null_band,
        fit_lags,
        geometric,
        polynomial,
        fitted_rate,
        gamma_gt_3,
    })
}

/// Parse `"a:b"` (inclusive range) or a comma-separated list.
pub fn parse_lags(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Input(format!("cannot parse lags `{text}`; use `1:50` or `1,2,4`"));
    let lags: Vec<usize> = if let Some((a, b)) = text.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        text.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
    };
    if lags.is_empty() {
        return Err(bad());
    }
    Ok(lags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weakdep::{simulate, ProcessSpec};

    #[test]
    fn ar1_decay_rate() {
        let t = simulate(&ProcessSpec::ar1(0.5, 0.5), 100_000, 12).unwrap();
        let lags: Vec<usize> = (1..=8).collect();
        let est = estimate_dependence(&t, &lags, &default_dictionary(), Exec::Serial).unwrap();
        let g = est.geometric.unwrap();
        assert!((g.exponent / std::f64::consts::LN_2 - 1.0).abs() < 0.15, "{est:?}");
        assert_eq!(est.gamma_gt_3, Some(true));
    }

    #[test]
    fn iid_stays_in_null_band() {
        let t = simulate(&ProcessSpec::ar1(0.0, 1.0), 100_000, 13).unwrap();
        let lags: Vec<usize> = (1..=20).collect();
        let est = estimate_dependence(&t, &lags, &default_dictionary(), Exec::Serial).unwrap();
        assert!(est.cov_abs.iter().all(|c| *c < est.null_band), "{:?}", est.cov_abs);
    }

    #[test]
    fn degenerate_and_bad_lags() {
        let flat = Trajectory { values: vec![1.0; 1000], seed: 0, spec_digest: String::new() };
        assert!(matches!(
            estimate_dependence(&flat, &[1, 2], &default_dictionary(), Exec::Serial),
            Err(Error::Estimation(_))
        ));
        let t = simulate(&ProcessSpec::ar1(0.5, 1.0), 100, 0).unwrap();
        assert!(estimate_dependence(&t, &[1, 20], &default_dictionary(), Exec::Serial).is_err());
        assert!(estimate_dependence(&t, &[2, 1], &default_dictionary(), Exec::Serial).is_err());
    }

    #[test]
    fn lag_syntax() {
        assert_eq!(parse_lags("1:4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_lags("1, 3,9").unwrap(), vec![1, 3, 9]);
        assert!(parse_lags("x").is_err());
    }
}
