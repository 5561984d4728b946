// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::class::{bound_ingredients, class_schedule, cn2, reference_bound, BaseConstants, BoundIngredients};
use super::risk::{argmin_risk, decompose_losses, estimate_cn1, losses, mc_sample, paired_se, Predictor, MIN_MC_SAMPLES};
use crate::approx::{build_approximant, ApproxOptions, DomainBox};
use crate::dnn::{Activation, ActivationKind, ClassConstraints, Network};
use crate::erm::{train_erm, Architecture, Loss, LossKind, TrainConfig};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::seed;
use crate::stats;
use crate::weakdep::{make_supervised, ProcessSpec, SupervisedTask, TaskConfig};

fn d_mc() -> usize {
    100_000
}
fn d_hidden() -> usize {
    1
}
fn d_act() -> ActivationKind {
    ActivationKind::Relu
}
fn d_cn1() -> usize {
    30
}
fn d_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateExperimentConfig {
    pub task: TaskConfig,
    pub loss: LossKind,
    pub alpha: f64,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub eta: f64,
    pub nu: f64,
    #[serde(rename = "F_n")]
    pub f_n: f64,
    #[serde(default = "d_mc")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub base_constants: BaseConstants,
    #[serde(default)]
    pub train: TrainConfig,
    /// Hidden layers of the trained architecture, capped at `L_n`; every
    /// hidden layer has width `N_n`.
    #[serde(default = "d_hidden")]
    pub hidden_layers: usize,
    #[serde(default = "d_act")]
    pub activation: ActivationKind,
    #[serde(default)]
    pub a: Option<f64>,
    #[serde(default = "d_cn1")]
    pub cn1_replications: usize,
    /// Add the constructive approximant at `ε = n^{−1/α}` to the proxy pool.
    #[serde(default = "d_true")]
    pub constructive_proxy: bool,
}

impl RateExperimentConfig {
    /// AR(1) inputs with `a = 0.5`, `h*(x) = sin(πx)/2`, `s = 2.5`, absolute
    /// loss, `α = 3`, `n ∈ {2⁸, …, 2¹³}`, ten replications.
    pub fn canonical() -> Self {
        RateExperimentConfig {
            task: TaskConfig {
                process: ProcessSpec::ar1(0.5, 0.5),
                target: "sin_half".into(),
                s: 2.5,
                noise_sd: 0.1,
                clip_x: DomainBox::cube(1, -1.0, 1.0).expect("unit box"),
            },
            loss: LossKind::Absolute,
            alpha: 3.0,
            n_grid: (8..=13).map(|k| 1 << k).collect(),
            replications: 10,
            eta: 0.1,
            nu: 0.5,
            f_n: 1.0,
            mc_samples: d_mc(),
            seed: 20_240_601,
            base_constants: BaseConstants { l0: 1.0, n0: 4.0, s0: 3.0 },
            train: TrainConfig {
                restarts: 4,
                epochs: 1500,
                step_size: 0.2,
                decay_factor: 0.5,
                decay_interval: 300,
                projection_interval: 25,
                init_scale: 1.0,
                seed: 0,
            },
            hidden_layers: 1,
            activation: ActivationKind::Relu,
            a: None,
            cn1_replications: 30,
            constructive_proxy: true,
        }
    }

    pub fn dx_over_s(&self) -> f64 {
        self.task.clip_x.dim() as f64 / self.task.s
    }

    /// Every violated constraint, for all-at-once reporting.
    pub fn problems(&self) -> Vec<String> {
        let mut out: Vec<String> = self.task.process.problems();
        if !(self.task.s > 0.0) {
            out.push(format!("task.s must be positive (got {})", self.task.s));
        }
        if let Err(e) = self.task.build() {
            if out.is_empty() {
                out.push(e.to_string());
            }
        }
        let bar = 2.0 + self.dx_over_s();
        if !(self.alpha > bar) {
            out.push(format!("alpha = {} violates the rate hypothesis alpha > 2 + d_x/s = {bar}", self.alpha));
        }
        if self.n_grid.is_empty() {
            out.push("n_grid must be nonempty".into());
        }
        if self.n_grid.first().is_some_and(|&n| n < 2) {
            out.push("n_grid entries must be at least 2".into());
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            out.push("n_grid must be strictly increasing".into());
        }
        if self.replications == 0 {
            out.push("replications must be at least 1".into());
        }
        for (name, v) in [("eta", self.eta), ("nu", self.nu)] {
            if !(v > 0.0 && v < 1.0) {
                out.push(format!("{name} must lie in (0, 1) (got {v})"));
            }
        }
        if !(self.f_n > 0.0) || !self.f_n.is_finite() {
            out.push(format!("F_n must be positive (got {})", self.f_n));
        }
        if self.mc_samples < MIN_MC_SAMPLES {
            out.push(format!("mc_samples must be at least {MIN_MC_SAMPLES} (got {})", self.mc_samples));
        }
        let b = &self.base_constants;
        for (name, v) in [("L0", b.l0), ("N0", b.n0), ("S0", b.s0)] {
            if !(v > 0.0) || !v.is_finite() {
                out.push(format!("base_constants.{name} must be positive (got {v})"));
            }
        }
        if self.hidden_layers == 0 {
            out.push("hidden_layers must be at least 1".into());
        }
        if let Err(e) = Activation::new(self.activation, self.a) {
            out.push(e.to_string());
        }
        if self.cn1_replications < 30 {
            out.push(format!("cn1_replications must be at least 30 (got {})", self.cn1_replications));
        }
        if let Err(e) = self.train.validate() {
            out.push(e.to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Input(p.join("; ")))
        }
    }
}

pub fn theorem2_class(n: usize, cfg: &RateExperimentConfig) -> Result<ClassConstraints> {
    class_schedule(n, cfg.alpha, cfg.dx_over_s(), &cfg.base_constants, cfg.f_n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub n: usize,
    pub replication: usize,
    pub excess: f64,
    pub est_error: f64,
    pub approx_error: f64,
    pub excess_se: f64,
    /// `R(approximant) − R(h*)` on the same sample, when built.
    pub approx_constructive: Option<f64>,
    pub approx_constructive_se: Option<f64>,
    pub proxy_is_constructive: bool,
    pub train_risk: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerN {
    pub n: usize,
    pub class_params: ClassConstraints,
    pub architecture: Vec<usize>,
    pub excess_risk_median: f64,
    pub excess_risk_iqr: f64,
    pub est_error: f64,
    pub approx_error: f64,
    /// Largest Monte-Carlo standard error of the excess across cells.
    pub mc_se: f64,
    pub approx_bound: f64,
    /// Every cell has `approx_constructive ≤ approx_bound + 3·se`.
    pub approx_bound_ok: Option<bool>,
    pub approximant_size: Option<[f64; 4]>,
    pub cells_ok: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub estimator: &'static str,
    pub config: RateExperimentConfig,
    pub per_n: Vec<PerN>,
    pub cells: Vec<CellResult>,
    pub fitted_slope: Option<f64>,
    pub target_slope: f64,
    #[serde(rename = "Mn_cap")]
    pub mn_cap: f64,
    #[serde(rename = "Gn_cap")]
    pub gn_cap: f64,
    #[serde(rename = "M_tilde")]
    pub m_tilde: f64,
    pub k_ell: f64,
    #[serde(rename = "Cn1_hat")]
    pub cn1_hat: f64,
    #[serde(rename = "Cn2")]
    pub cn2: Vec<f64>,
    pub bound_eval: Vec<f64>,
    pub bound_label: &'static str,
    pub missing_cells: usize,
    pub total_cells: usize,
    /// Some MC standard error is at least 10% of the smallest fitted excess.
    pub under_resolved: bool,
    pub notes: Vec<String>,
}

impl RateReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Medians nonincreasing in `n` apart from at most `allowed` inversions.
    pub fn inversions(&self) -> usize {
        self.per_n.windows(2).filter(|w| w[1].excess_risk_median > w[0].excess_risk_median).count()
    }
}

fn sup_on_box(task: &SupervisedTask) -> f64 {
    let per_axis = match task.d_x() {
        1 => 4001,
        2 => 201,
        _ => 21,
    };
    task.clip_x.lattice(per_axis).iter().map(|x| task.target.eval(x)[0].abs()).fold(0.0, f64::max)
}

struct NPlan {
    class: ClassConstraints,
    arch: Architecture,
    approximant: Option<Network>,
    size: Option<[f64; 4]>,
}

pub fn rate_experiment(cfg: &RateExperimentConfig, exec: Exec) -> Result<RateReport> {
    cfg.validate()?;
    let task = cfg.task.build()?;
    let act = Activation::new(cfg.activation, cfg.a)?;
    let y_bound = task.label_bound(sup_on_box(&task));
    let loss = Loss::new(cfg.loss, cfg.f_n, y_bound)?;
    let BoundIngredients { m_tilde, mn_cap, gn_cap } = bound_ingredients(cfg.f_n, &loss, &task.clip_x, (-y_bound, y_bound))?;
    let mut notes = Vec::new();

    let plans: Vec<NPlan> = cfg
        .n_grid
        .iter()
        .map(|&n| {
            let class = theorem2_class(n, cfg)?;
            let hidden = cfg.hidden_layers.min(class.depth as usize).max(1);
            let mut widths = vec![task.d_x()];
            widths.extend(std::iter::repeat_n(class.width as usize, hidden));
            widths.push(1);
            let arch = Architecture::new(widths, act);
            let (approximant, size) = if cfg.constructive_proxy {
                let eps = (n as f64).powf(-1.0 / cfg.alpha);
                let opts = ApproxOptions { exec, ..Default::default() };
                let (net, cert) = build_approximant(&task.target, eps, act, &opts)?;
                let size = [cert.depth as f64, cert.width as f64, cert.sparsity as f64, cert.max_abs];
                (Some(net), Some(size))
            } else {
                (None, None)
            };
            Ok(NPlan { class, arch, approximant, size })
        })
        .collect::<Result<_>>()?;

    let reps = cfg.replications;
    let total = cfg.n_grid.len() * reps;
    let results: Vec<Result<(CellResult, Network)>> = exec.map_range(total, |job| {
        let (ni, rep) = (job / reps, job % reps);
        run_cell(cfg, &task, &loss, &plans[ni], cfg.n_grid[ni], rep)
    });

    let mut cells = Vec::new();
    let mut missing = 0;
    let last_n = *cfg.n_grid.last().expect("nonempty grid");
    let mut cn1_model: Option<(usize, Network)> = None;
    for r in results {
        match r {
            Ok((c, net)) => {
                if c.n == last_n && cn1_model.is_none() {
                    cn1_model = Some((c.replication, net));
                }
                cells.push(c)
            }
            Err(e) => {
                missing += 1;
                notes.push(format!("cell missing: {e}"));
            }
        }
    }
    if missing * 4 > total {
        return Err(Error::Experiment(format!("{missing} of {total} cells failed; coverage below 75%")));
    }
    if missing > 0 {
        notes.push(format!("coverage {}/{total} cells", total - missing));
    }

    let k_ell = loss.k_ell;
    let mut per_n = Vec::with_capacity(plans.len());
    for (ni, plan) in plans.iter().enumerate() {
        let n = cfg.n_grid[ni];
        let mine: Vec<&CellResult> = cells.iter().filter(|c| c.n == n).collect();
        let col = |f: fn(&CellResult) -> f64| mine.iter().map(|c| f(c)).collect::<Vec<f64>>();
        let excess = col(|c| c.excess);
        let approx_bound = k_ell * (n as f64).powf(-1.0 / cfg.alpha);
        let approx_bound_ok = cfg.constructive_proxy.then(|| {
            mine.iter().all(|c| match (c.approx_constructive, c.approx_constructive_se) {
                (Some(a), Some(se)) => a <= approx_bound + 3.0 * se,
                _ => false,
            })
        });
        per_n.push(PerN {
            n,
            class_params: plan.class,
            architecture: plan.arch.widths.clone(),
            excess_risk_median: stats::median(&excess),
            excess_risk_iqr: stats::iqr(&excess),
            est_error: stats::median(&col(|c| c.est_error)),
            approx_error: stats::median(&col(|c| c.approx_error)),
            mc_se: col(|c| c.excess_se).into_iter().fold(0.0, f64::max),
            approx_bound,
            approx_bound_ok,
            approximant_size: plan.size,
            cells_ok: mine.len(),
        });
    }

    let fit_pts: Vec<(f64, f64)> = per_n
        .iter()
        .filter(|p| p.excess_risk_median > 0.0)
        .map(|p| ((p.n as f64).ln(), p.excess_risk_median.ln()))
        .collect();
    if fit_pts.len() < per_n.len() {
        notes.push(format!("{} nonpositive medians excluded from the slope fit", per_n.len() - fit_pts.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = fit_pts.iter().copied().unzip();
    let fitted_slope = stats::ols(&xs, &ys).map(|f| f.slope);
    let smallest = per_n.iter().map(|p| p.excess_risk_median).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let worst_se = per_n.iter().map(|p| p.mc_se).fold(0.0, f64::max);
    let under_resolved = !(worst_se < 0.1 * smallest);
    if under_resolved {
        notes.push(format!("Monte-Carlo SE {worst_se:.3e} is not below 10% of the smallest median excess {smallest:.3e}"));
    }

    // Ĉ₁ for the first surviving model at the largest n.
    let (cn1_rep, model) = cn1_model.ok_or_else(|| Error::Experiment("no model at the largest n".into()))?;
    let cn1_seed = seed::derive_u64(cfg.seed, "cn1", &[last_n as u64, cn1_rep as u64]);
    let mut cn1_hat = estimate_cn1(&model, &task, &loss, cfg.cn1_replications, last_n, cn1_seed, exec)?;
    if !(cn1_hat > 0.0) {
        notes.push("Ĉ₁ estimate was zero; floored at 1e-12".into());
        cn1_hat = 1e-12;
    }
    let cn2s: Vec<f64> = cfg.n_grid.iter().map(|&n| cn2(n as f64, cn1_hat, mn_cap, cfg.nu)).collect::<Result<_>>()?;
    let bound_eval: Vec<f64> = cfg
        .n_grid
        .iter()
        .zip(&cn2s)
        .map(|(&n, &c2)| reference_bound(n as f64, mn_cap, k_ell, cfg.alpha, cfg.eta, c2))
        .collect();

    Ok(RateReport {
        estimator: "approximate-ERM (multi-restart projected gradient descent)",
        config: cfg.clone(),
        per_n,
        cells,
        fitted_slope,
        target_slope: -1.0 / cfg.alpha,
        mn_cap,
        gn_cap,
        m_tilde,
        k_ell,
        cn1_hat,
        cn2: cn2s,
        bound_eval,
        bound_label: "uncalibrated shape reference (C1 = 1)",
        missing_cells: missing,
        total_cells: total,
        under_resolved,
        notes,
    })
}

fn cell_seed(cfg: &RateExperimentConfig, n: usize, rep: usize) -> u64 {
    seed::derive_u64(cfg.seed, "cell", &[n as u64, rep as u64])
}

fn train_full(
    cfg: &RateExperimentConfig,
    task: &SupervisedTask,
    loss: &Loss,
    plan: &NPlan,
    n: usize,
    rep: usize,
) -> Result<(Network, Vec<Network>, f64)> {
    let sd = cell_seed(cfg, n, rep);
    let data = make_supervised(task, n, sd)?;
    let tcfg = TrainConfig { seed: seed::derive_u64(sd, "train", &[]), ..cfg.train.clone() };
    let m = train_erm(&plan.class, &data, loss, &plan.arch, &tcfg, Exec::Serial)?;
    Ok((m.net, m.candidates, m.empirical_risk))
}

fn run_cell(
    cfg: &RateExperimentConfig,
    task: &SupervisedTask,
    loss: &Loss,
    plan: &NPlan,
    n: usize,
    rep: usize,
) -> Result<(CellResult, Network)> {
    let (hat, candidates, train_risk) = train_full(cfg, task, loss, plan, n, rep)?;
    let mc = mc_sample(task, cfg.mc_samples, cell_seed(cfg, n, rep))?;
    let ls = |p: Predictor<'_>| losses(p, &mc, loss, Exec::Serial);
    let star = ls(Predictor::Target(&task.target));
    let hat_l = ls(Predictor::Net(&hat));
    let mut pool: Vec<Vec<f64>> = candidates.iter().map(|c| ls(Predictor::Net(c))).collect();
    pool.push(hat_l.clone());
    let constructive = plan.approximant.as_ref().map(|a| ls(Predictor::Net(a)));
    if let Some(c) = &constructive {
        pool.push(c.clone());
    }
    let best = argmin_risk(&pool).ok_or_else(|| Error::Experiment("no finite proxy risk".into()))?;
    let d = decompose_losses(&hat_l, &pool[best], &star);
    let cell = CellResult {
        n,
        replication: rep,
        excess: d.excess,
        est_error: d.est_error,
        approx_error: d.approx_error,
        excess_se: d.excess_se,
        approx_constructive: constructive.as_ref().map(|c| stats::mean(c) - d.risk_star),
        approx_constructive_se: constructive.as_ref().map(|c| paired_se(c, &star)),
        proxy_is_constructive: constructive.is_some() && best == pool.len() - 1,
        train_risk,
    };
    Ok((cell, hat))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RateExperimentConfig {
        let mut c = RateExperimentConfig::canonical();
        c.task.target = "const1d".into();
        c.task.s = 1.5;
        c.task.noise_sd = 0.0;
        c.n_grid = vec![64, 128];
        c.replications = 2;
        c.mc_samples = 2000;
        c.train.restarts = 2;
        c.train.epochs = 400;
        c.train.decay_interval = 100;
        c
    }

    #[test]
    fn realizable_task_has_tiny_excess() {
        let r = rate_experiment(&small(), Exec::Serial).unwrap();
        assert_eq!(r.per_n.len(), 2);
        for p in &r.per_n {
            assert!(p.excess_risk_median <= 1e-2, "{p:?}");
        }
        for c in &r.cells {
            assert_eq!(c.excess, c.est_error + c.approx_error);
            assert!(c.excess >= -2.0 * c.excess_se - 1e-15);
        }
        assert_eq!(r.total_cells, 4);
        assert!(r.bound_eval.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn reports_are_reproducible() {
        let a = rate_experiment(&small(), Exec::Serial).unwrap();
        let b = rate_experiment(&small(), Exec::Parallel).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let echoed: RateExperimentConfig = serde_json::from_str(&serde_json::to_string(&a.config).unwrap()).unwrap();
        assert_eq!(rate_experiment(&echoed, Exec::Serial).unwrap().to_json(), a.to_json());
    }

    #[test]
    fn config_problems_are_collected() {
        let mut c = RateExperimentConfig::canonical();
        assert!(c.problems().is_empty(), "{:?}", c.problems());
        c.alpha = 2.4;
        c.n_grid = vec![512, 256];
        c.eta = 1.5;
        let p = c.problems();
        assert_eq!(p.len(), 3, "{p:?}");
        assert!(p[0].contains("alpha > 2 + d_x/s"));
        assert!(rate_experiment(&c, Exec::Serial).is_err());
    }

    #[test]
    fn canonical_schedule_values() {
        let c = RateExperimentConfig::canonical();
        let k = theorem2_class(1024, &c).unwrap();
        assert_eq!(k.depth, (1024f64.ln() / 3.0).ceil());
        assert!((k.max_abs / 1024f64.powf(4.0 * 1.4 / 3.0) - 1.0).abs() < 1e-12);
    }
}
