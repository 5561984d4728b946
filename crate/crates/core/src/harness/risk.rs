// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use crate::approx::HolderTarget;
use crate::dnn::{Network, Scratch};
use crate::erm::Loss;
use crate::error::{input, Result};
use crate::exec::Exec;
use crate::stats;
use crate::weakdep::{make_supervised_labeled, Dataset, SupervisedTask};

/// Batches used for the dependence-robust standard error.
pub const MC_BATCHES: usize = 50;
pub const MIN_MC_SAMPLES: usize = 1000;

/// Anything evaluable as a scalar predictor.
#[derive(Clone, Copy)]
pub enum Predictor<'a> {
    Net(&'a Network),
    Target(&'a HolderTarget),
    Constant(f64),
}

impl Predictor<'_> {
    fn eval(&self, x: &[f64], scratch: &mut Scratch) -> f64 {
        match self {
            Predictor::Net(n) => n.eval1(x, scratch),
            Predictor::Target(t) => t.eval(x)[0],
            Predictor::Constant(c) => *c,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_losses(losses: &[f64]) -> Self {
        McEstimate { mean: stats::mean(losses), se: stats::batch_means_se(losses, MC_BATCHES), samples: losses.len() }
    }
}

/// A fresh stationary evaluation sample; its streams are disjoint from the
/// ones [`crate::weakdep::make_supervised`] draws training data from.
pub fn mc_sample(task: &SupervisedTask, mc_samples: usize, seed: u64) -> Result<Dataset> {
    if mc_samples < MIN_MC_SAMPLES {
        return input(format!("mc_samples must be at least {MIN_MC_SAMPLES} (got {mc_samples})"));
    }
    make_supervised_labeled(task, mc_samples, seed, "mc-process", "mc-label")
}

/// Per-sample losses of `pred` on `data`.
pub fn losses(pred: Predictor<'_>, data: &Dataset, loss: &Loss, exec: Exec) -> Vec<f64> {
    exec.map_chunks(data.len(), 4096, |a, b| {
        let mut scratch = Scratch::default();
        (a..b).map(|i| loss.value(pred.eval(&data.x[i], &mut scratch), data.y[i])).collect::<Vec<_>>()
    })
    .concat()
}

pub fn mc_risk(pred: Predictor<'_>, task: &SupervisedTask, loss: &Loss, mc_samples: usize, seed: u64) -> Result<McEstimate> {
    let data = mc_sample(task, mc_samples, seed)?;
    Ok(McEstimate::from_losses(&losses(pred, &data, loss, Exec::default())))
}

/// Excess risk of `ĥ` split through a best-in-class proxy; all three risks
/// share one Monte-Carlo sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub excess: f64,
    pub est_error: f64,
    pub approx_error: f64,
    pub risk_hat: f64,
    pub risk_proxy: f64,
    pub risk_star: f64,
    /// Standard errors of the paired differences.
    pub excess_se: f64,
    pub approx_se: f64,
}

pub fn decompose_losses(hat: &[f64], proxy: &[f64], star: &[f64]) -> Decomposition {
    let (risk_hat, risk_proxy, risk_star) = (stats::mean(hat), stats::mean(proxy), stats::mean(star));
    let est_error = risk_hat - risk_proxy;
    let approx_error = risk_proxy - risk_star;
    Decomposition {
        excess: est_error + approx_error,
        est_error,
        approx_error,
        risk_hat,
        risk_proxy,
        risk_star,
        excess_se: paired_se(hat, star),
        approx_se: paired_se(proxy, star),
    }
}

pub fn paired_se(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    stats::batch_means_se(&d, MC_BATCHES)
}

pub fn excess_and_decomposition(
    model: &Network,
    proxy: &Network,
    task: &SupervisedTask,
    loss: &Loss,
    mc_samples: usize,
    seed: u64,
) -> Result<Decomposition> {
    let data = mc_sample(task, mc_samples, seed)?;
    let exec = Exec::default();
    Ok(decompose_losses(
        &losses(Predictor::Net(model), &data, loss, exec),
        &losses(Predictor::Net(proxy), &data, loss, exec),
        &losses(Predictor::Target(&task.target), &data, loss, exec),
    ))
}

/// Index of the lowest mean among per-sample loss vectors (first wins ties).
pub fn argmin_risk(loss_vectors: &[Vec<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in loss_vectors.iter().enumerate() {
        let m = stats::mean(l);
        if m.is_finite() && best.is_none_or(|(_, b)| m < b) {
            best = Some((i, m));
        }
    }
    best.map(|b| b.0)
}

/// Mean over replications of `(Σᵢ (ℓᵢ − R̄))² / n`, with `R̄` the pooled
/// mean loss across all replications.
pub fn estimate_cn1(
    model: &Network,
    task: &SupervisedTask,
    loss: &Loss,
    replications: usize,
    n: usize,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    if replications < 30 {
        return input(format!("estimate_cn1 needs at least 30 replications (got {replications})"));
    }
    if n == 0 {
        return input("estimate_cn1 needs n ≥ 1");
    }
    let per_rep: Vec<Result<Vec<f64>>> = exec.map_range(replications, |r| {
        let sub = crate::seed::derive_u64(seed, "cn1", &[r as u64]);
        let data = make_supervised_labeled(task, n, sub, "cn1-process", "cn1-label")?;
        Ok(losses(Predictor::Net(model), &data, loss, Exec::Serial))
    });
    let per_rep: Vec<Vec<f64>> = per_rep.into_iter().collect::<Result<_>>()?;
    let pooled = stats::mean(&per_rep.concat());
    let stat: Vec<f64> = per_rep
        .iter()
        .map(|l| {
            let s: f64 = l.iter().map(|v| v - pooled).sum();
            s * s / n as f64
        })
        .collect();
    Ok(stats::mean(&stat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{corpus_target, DomainBox};
    use crate::dnn::Activation;
    use crate::erm::LossKind;
    use crate::weakdep::ProcessSpec;
    use std::sync::Arc;

    fn zero_target() -> HolderTarget {
        let dom = DomainBox::cube(1, -1.0, 1.0).unwrap();
        HolderTarget::new("zero", 1, 1.5, 1.0, dom, Arc::new(|_| vec![0.0]), Some(Arc::new(|_, _| vec![0.0]))).unwrap()
    }

    fn abs_loss() -> Loss {
        Loss::new(LossKind::Absolute, 1.0, 7.0).unwrap()
    }

    #[test]
    fn perfect_predictor_has_zero_risk() {
        let task = SupervisedTask::new(
            ProcessSpec::ar1(0.5, 0.5),
            corpus_target("sin_half", 2.5).unwrap(),
            0.0,
            DomainBox::cube(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let r = mc_risk(Predictor::Target(&task.target), &task, &abs_loss(), 5000, 1).unwrap();
        assert_eq!(r.mean, 0.0);
        assert!(mc_risk(Predictor::Constant(0.0), &task, &abs_loss(), 10, 1).is_err());
    }

    #[test]
    fn absolute_normal_mean_and_se_scaling() {
        let task =
            SupervisedTask::new(ProcessSpec::ar1(0.5, 1.0), zero_target(), 1.0, DomainBox::cube(1, -1.0, 1.0).unwrap())
                .unwrap();
        let a = mc_risk(Predictor::Constant(0.0), &task, &abs_loss(), 100_000, 2).unwrap();
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((a.mean - expected).abs() <= 3.0 * a.se, "{} ± {}", a.mean, a.se);
        let b = mc_risk(Predictor::Constant(0.0), &task, &abs_loss(), 200_000, 2).unwrap();
        let ratio = b.se / a.se;
        assert!((ratio - 0.5f64.sqrt()).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn decomposition_is_additive() {
        let task = SupervisedTask::new(
            ProcessSpec::ar1(0.5, 0.5),
            corpus_target("sin_half", 2.5).unwrap(),
            0.2,
            DomainBox::cube(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let net = |b: f64| Network::zeros(Activation::relu(), &[1, 1], None).unwrap().with_param_vector(&[0.1, b]).unwrap();
        let d = excess_and_decomposition(&net(0.2), &net(0.05), &task, &abs_loss(), 4000, 3).unwrap();
        assert_eq!(d.excess, d.est_error + d.approx_error);
        let z = decompose_losses(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 2.0]);
        assert_eq!((z.excess, z.est_error, z.approx_error), (0.0, 0.0, 0.0));
    }

    #[test]
    fn cn1_examples() {
        let iid = SupervisedTask::new(ProcessSpec::ar1(0.0, 0.5), zero_target(), 0.0, DomainBox::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        let ident = Network::zeros(Activation::relu(), &[1, 1], None).unwrap().with_param_vector(&[1.0, 0.0]).unwrap();
        let sq = Loss::new(LossKind::Squared, 1.0, 1.0).unwrap();
        let c_iid = estimate_cn1(&ident, &iid, &sq, 400, 200, 4, Exec::default()).unwrap();
        let big = mc_sample(&iid, 200_000, 9).unwrap();
        let var = stats::variance(&losses(Predictor::Net(&ident), &big, &sq, Exec::default()));
        assert!((c_iid / var - 1.0).abs() < 0.2, "{c_iid} vs {var}");

        let ar = SupervisedTask::new(ProcessSpec::ar1(0.5, 0.5 * 0.75f64.sqrt()), zero_target(), 0.0, DomainBox::cube(1, -1.0, 1.0).unwrap())
            .unwrap();
        let c_ar = estimate_cn1(&ident, &ar, &sq, 400, 200, 4, Exec::default()).unwrap();
        assert!(c_ar >= c_iid, "{c_ar} < {c_iid}");

        let zero = Network::zeros(Activation::relu(), &[1, 1], None).unwrap();
        assert_eq!(estimate_cn1(&zero, &iid, &sq, 30, 50, 4, Exec::default()).unwrap(), 0.0);
        assert!(estimate_cn1(&zero, &iid, &sq, 29, 50, 4, Exec::default()).is_err());
    }
}
