// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::grad::DenseNet;
use super::loss::Loss;
use crate::dnn::{Activation, ActivationKind, ClassConstraints, MembershipReport, Network};
use crate::error::{input, Error, Result};
use crate::exec::Exec;
use crate::seed;
use crate::weakdep::Dataset;

/// Layer widths `(p_0, …, p_{L+1})` plus the activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activation: ActivationKind,
    /// LeakyReLU slope or ELU scale; ignored by fixed-shape activations.
    #[serde(default)]
    pub a: Option<f64>,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Self {
        Architecture { widths, activation: activation.kind(), a: activation.shape() }
    }

    pub fn activation(&self) -> Result<Activation> {
        Activation::new(self.activation, self.a)
    }

    pub fn depth(&self) -> usize {
        self.widths.len().saturating_sub(2)
    }

    pub fn width(&self) -> usize {
        let n = self.widths.len();
        if n <= 2 {
            0
        } else {
            self.widths[1..n - 1].iter().copied().max().unwrap_or(0)
        }
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

fn d_restarts() -> usize {
    8
}
fn d_epochs() -> usize {
    1000
}
fn d_step() -> f64 {
    0.05
}
fn d_factor() -> f64 {
    0.5
}
fn d_interval() -> usize {
    500
}
fn d_proj() -> usize {
    50
}
fn d_init() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    #[serde(default = "d_step")]
    pub step_size: f64,
    /// The step is multiplied by `decay_factor` every `decay_interval` epochs.
    #[serde(default = "d_factor")]
    pub decay_factor: f64,
    #[serde(default = "d_interval")]
    pub decay_interval: usize,
    #[serde(default = "d_proj")]
    pub projection_interval: usize,
    /// Multiplier on the `min(B, 1)/√fan-in` initialization radius.
    #[serde(default = "d_init")]
    pub init_scale: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            restarts: d_restarts(),
            epochs: d_epochs(),
            step_size: d_step(),
            decay_factor: d_factor(),
            decay_interval: d_interval(),
            projection_interval: d_proj(),
            init_scale: d_init(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return input("restarts must be at least 1");
        }
        if self.decay_interval == 0 || self.projection_interval == 0 {
            return input("decay_interval and projection_interval must be positive");
        }
        for (name, v) in [("step_size", self.step_size), ("decay_factor", self.decay_factor), ("init_scale", self.init_scale)] {
            if !(v > 0.0) || !v.is_finite() {
                return input(format!("{name} must be positive and finite (got {v})"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartSummary {
    pub index: usize,
    /// Risk of the projected initialization.
    pub init_risk: f64,
    pub best_risk: f64,
    pub candidates_evaluated: usize,
    pub abandoned: Option<String>,
}

#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub net: Network,
    pub empirical_risk: f64,
    pub restart_index: usize,
    pub constraint_report: MembershipReport,
    pub restarts: Vec<RestartSummary>,
    /// Best network of every restart that produced one, in restart order.
    pub candidates: Vec<Network>,
}

/// Clamp into `[−B, B]`, then keep the `⌊S⌋` largest magnitudes (earlier
/// index wins ties).
pub fn project_params(theta: &mut [f64], s: f64, b: f64) {
    for v in theta.iter_mut() {
        *v = v.clamp(-b, b);
    }
    let keep = if s.is_finite() { s.floor().max(0.0) as usize } else { usize::MAX };
    let nnz = theta.iter().filter(|v| **v != 0.0).count();
    if nnz <= keep {
        return;
    }
    let mut order: Vec<usize> = (0..theta.len()).filter(|&i| theta[i] != 0.0).collect();
    order.sort_by(|&i, &j| theta[j].abs().total_cmp(&theta[i].abs()).then(i.cmp(&j)));
    for &i in &order[keep..] {
        theta[i] = 0.0;
    }
}

pub fn project_constraints(net: &Network, s: f64, b: f64) -> Result<Network> {
    if !(s >= 1.0) || !(b > 0.0) {
        return input(format!("projection needs S ≥ 1 and B > 0 (got S = {s}, B = {b})"));
    }
    let mut theta = net.param_vector();
    project_params(&mut theta, s, b);
    net.with_param_vector(&theta)
}

struct RestartOutcome {
    summary: RestartSummary,
    best: Option<(f64, Vec<f64>)>,
}

fn run_restart(
    r: usize,
    template: &DenseNet,
    c: &ClassConstraints,
    data: &Dataset,
    loss: &Loss,
    cfg: &TrainConfig,
) -> RestartOutcome {
    let mut rng = seed::rng(cfg.seed, "train-restart", &[r as u64]);
    let mut net = template.clone();
    let base = c.max_abs.min(1.0) * cfg.init_scale;
    for k in 0..net.params.len() {
        let radius = base / (net.fan_in(k) as f64).sqrt();
        net.params[k] = rng.random_range(-radius..=radius);
    }
    project_params(&mut net.params, c.sparsity, c.max_abs);

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0;
    let mut init_risk = f64::NAN;
    let mut grad = Vec::new();
    let mut fresh = true;
    let mut consider = |risk: f64, params: &[f64], best: &mut Option<(f64, Vec<f64>)>| {
        evaluated += 1;
        if best.as_ref().is_none_or(|(b, _)| risk < *b) {
            *best = Some((risk, params.to_vec()));
        }
    };
    let abandon = |msg: String, best: Option<(f64, Vec<f64>)>, init_risk: f64, evaluated: usize| RestartOutcome {
        summary: RestartSummary {
            index: r,
            init_risk,
            best_risk: best.as_ref().map_or(f64::NAN, |b| b.0),
            candidates_evaluated: evaluated,
            abandoned: Some(msg),
        },
        best,
    };

    for t in 0..cfg.epochs {
        let risk = net.risk_and_grad(data, loss, &mut grad);
        if !risk.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return abandon(format!("non-finite loss at epoch {t}"), best, init_risk, evaluated);
        }
        if fresh {
            if t == 0 {
                init_risk = risk;
            }
            consider(risk, &net.params, &mut best);
        }
        let lr = cfg.step_size * cfg.decay_factor.powi((t / cfg.decay_interval) as i32);
        for (p, g) in net.params.iter_mut().zip(&grad) {
            *p -= lr * g;
        }
        fresh = (t + 1) % cfg.projection_interval == 0;
        if fresh {
            project_params(&mut net.params, c.sparsity, c.max_abs);
        }
    }
    project_params(&mut net.params, c.sparsity, c.max_abs);
    let last = net.risk(data, loss);
    if !last.is_finite() {
        return abandon("non-finite loss at the final projection".into(), best, init_risk, evaluated);
    }
    if cfg.epochs == 0 {
        init_risk = last;
    }
    consider(last, &net.params, &mut best);
    RestartOutcome {
        summary: RestartSummary {
            index: r,
            init_risk,
            best_risk: best.as_ref().map_or(f64::NAN, |b| b.0),
            candidates_evaluated: evaluated,
            abandoned: None,
        },
        best,
    }
}

/// Multi-restart projected full-batch gradient descent over the class
/// `constraints`; returns the lowest-risk candidate seen.
pub fn train_erm(
    constraints: &ClassConstraints,
    data: &Dataset,
    loss: &Loss,
    arch: &Architecture,
    cfg: &TrainConfig,
    exec: Exec,
) -> Result<TrainedModel> {
    constraints.validate()?;
    cfg.validate()?;
    if data.is_empty() {
        return input("training data is empty");
    }
    if arch.widths.len() < 2 || arch.widths[0] != data.dim() || *arch.widths.last().unwrap() != 1 {
        return input(format!("architecture {:?} does not map {}-dimensional inputs to scalars", arch.widths, data.dim()));
    }
    if arch.depth() as f64 > constraints.depth || arch.width() as f64 > constraints.width {
        return input(format!(
            "architecture depth {} / width {} exceeds the class caps L = {}, N = {}",
            arch.depth(),
            arch.width(),
            constraints.depth,
            constraints.width
        ));
    }
    if constraints.sparsity < 1.0 {
        return input("class sparsity cap must be at least 1 for training");
    }
    let act = arch.activation()?;
    let template =
        DenseNet::new(act, arch.widths.clone(), vec![0.0; arch.param_count()], Some(constraints.sup_norm))?;

    let outcomes = exec.map_range(cfg.restarts, |r| run_restart(r, &template, constraints, data, loss, cfg));
    if outcomes.iter().all(|o| o.summary.abandoned.is_some()) {
        let why: Vec<String> = outcomes.iter().filter_map(|o| o.summary.abandoned.clone()).collect();
        return Err(Error::Training(format!("all {} restarts abandoned: {}", cfg.restarts, why.join("; "))));
    }
    let mut winner: Option<(usize, f64, &Vec<f64>)> = None;
    for o in &outcomes {
        if let Some((risk, params)) = &o.best {
            if winner.is_none_or(|(_, b, _)| *risk < b) {
                winner = Some((o.summary.index, *risk, params));
            }
        }
    }
    let (restart_index, empirical_risk, params) =
        winner.ok_or_else(|| Error::Training("no finite candidate was evaluated".into()))?;
    let to_net = |p: &Vec<f64>| {
        let mut dense = template.clone();
        dense.params = p.clone();
        dense.to_network()
    };
    let net = to_net(params)?;
    let constraint_report = net.check_membership(constraints, &data.x)?;
    let candidates = outcomes.iter().filter_map(|o| o.best.as_ref()).map(|(_, p)| to_net(p)).collect::<Result<_>>()?;
    Ok(TrainedModel {
        net,
        empirical_risk,
        restart_index,
        constraint_report,
        restarts: outcomes.into_iter().map(|o| o.summary).collect(),
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erm::{empirical_risk, LossKind};
    use proptest::prelude::*;

    fn unit_net(theta: &[f64]) -> Network {
        Network::zeros(Activation::relu(), &[1, 1], None).unwrap().with_param_vector(&theta[..2]).unwrap()
    }

    #[test]
    fn projection_examples() {
        let mut a = [3.0, -0.5, 0.1];
        project_params(&mut a, 2.0, f64::INFINITY);
        assert_eq!(a, [3.0, -0.5, 0.0]);
        let mut b = [3.0, -0.5, 0.0];
        project_params(&mut b, 3.0, 1.0);
        assert_eq!(b, [1.0, -0.5, 0.0]);
        let mut tie = [0.5, -0.5, 0.5];
        project_params(&mut tie, 2.0, 1.0);
        assert_eq!(tie, [0.5, -0.5, 0.0]);
        let net = unit_net(&[0.3, -0.2]);
        assert_eq!(project_constraints(&net, 2.0, 1.0).unwrap(), net);
        assert!(project_constraints(&net, 0.5, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn projection_is_exact_and_idempotent(
            theta in prop::collection::vec(-5.0f64..5.0, 1..40),
            s in 1.0f64..30.0,
            b in 0.01f64..4.0,
        ) {
            let mut p = theta.clone();
            project_params(&mut p, s, b);
            prop_assert!(p.iter().filter(|v| **v != 0.0).count() <= s.floor() as usize);
            prop_assert!(p.iter().all(|v| v.abs() <= b));
            let mut q = p.clone();
            project_params(&mut q, s, b);
            prop_assert_eq!(p, q);
        }
    }

    fn grid(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect()
    }

    #[test]
    fn realizable_teacher_is_matched() {
        let teacher = Network::zeros(Activation::relu(), &[1, 2, 1], Some(2.0))
            .unwrap()
            .with_param_vector(&[1.0, -1.0, 0.0, 0.0, 0.5, 0.5, 0.0])
            .unwrap();
        let x = grid(64);
        let y: Vec<f64> = x.iter().map(|v| teacher.forward(v).unwrap()[0]).collect();
        let data = Dataset { x, y };
        let c = ClassConstraints::new(1.0, 2.0, 7.0, 1.0, 2.0).unwrap();
        let loss = Loss::new(LossKind::Squared, 2.0, 1.0).unwrap();
        let arch = Architecture::new(vec![1, 2, 1], Activation::relu());
        let cfg = TrainConfig { restarts: 10, epochs: 3000, step_size: 0.2, decay_interval: 1000, ..Default::default() };
        let m = train_erm(&c, &data, &loss, &arch, &cfg, Exec::Serial).unwrap();
        let reference = empirical_risk(&teacher, &data, &loss).unwrap();
        assert!(m.empirical_risk <= reference + 1e-3, "{} vs {reference}", m.empirical_risk);
        assert!(m.constraint_report.ok);
        assert!((empirical_risk(&m.net, &data, &loss).unwrap() - m.empirical_risk).abs() < 1e-12);
        for s in &m.restarts {
            assert!(m.empirical_risk <= s.init_risk && m.empirical_risk <= s.best_risk);
        }
    }

    #[test]
    fn constant_labels_reach_best_constant() {
        let x = grid(40);
        let data = Dataset { y: vec![0.3; x.len()], x };
        let c = ClassConstraints::new(1.0, 3.0, 10.0, 1.0, 1.0).unwrap();
        let loss = Loss::new(LossKind::Absolute, 1.0, 1.0).unwrap();
        let arch = Architecture::new(vec![1, 3, 1], Activation::relu());
        let cfg = TrainConfig { restarts: 4, epochs: 3000, decay_interval: 200, ..Default::default() };
        let m = train_erm(&c, &data, &loss, &arch, &cfg, Exec::Serial).unwrap();
        let brute = (0..=200)
            .map(|i| -1.0 + i as f64 / 100.0)
            .map(|v| data.y.iter().map(|y| (v - y).abs()).sum::<f64>() / data.len() as f64)
            .fold(f64::INFINITY, f64::min);
        assert!(m.empirical_risk <= brute + 1e-3, "{} vs {brute}", m.empirical_risk);
    }

    #[test]
    fn training_is_deterministic_across_exec() {
        let x = grid(20);
        let y: Vec<f64> = x.iter().map(|v| v[0].abs() * 0.5).collect();
        let data = Dataset { x, y };
        let c = ClassConstraints::new(2.0, 4.0, 12.0, 1.0, 1.0).unwrap();
        let loss = Loss::new(LossKind::Huber { delta: 0.1 }, 1.0, 1.0).unwrap();
        let arch = Architecture::new(vec![1, 4, 2, 1], Activation::leaky_relu(0.1).unwrap());
        let cfg = TrainConfig { restarts: 3, epochs: 200, projection_interval: 20, ..Default::default() };
        let a = train_erm(&c, &data, &loss, &arch, &cfg, Exec::Serial).unwrap();
        let b = train_erm(&c, &data, &loss, &arch, &cfg, Exec::Parallel).unwrap();
        assert_eq!(a.net.to_json(), b.net.to_json());
        assert_eq!(a.restart_index, b.restart_index);
        assert!(a.constraint_report.ok);
        assert!(a.net.param_stats().sparsity <= 12);
    }

    #[test]
    fn rejects_oversized_architecture() {
        let data = Dataset { x: grid(4), y: vec![0.0; 4] };
        let c = ClassConstraints::new(1.0, 2.0, 10.0, 1.0, 1.0).unwrap();
        let loss = Loss::new(LossKind::Absolute, 1.0, 1.0).unwrap();
        let arch = Architecture::new(vec![1, 3, 1], Activation::relu());
        assert!(train_erm(&c, &data, &loss, &arch, &TrainConfig::default(), Exec::Serial).is_err());
    }
}
