// SPDX-License-Identifier: Apache-2.0

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::simulate::{simulate_with_label, ProcessSpec};
use crate::approx::{corpus_target, DomainBox, HolderTarget};
use crate::error::{input, Result};
use crate::seed;

/// Inputs `X_i` from a clamped (optionally lag-embedded) process path and
/// labels `Y_i = h*(X_i) + noise_sd·η_i`.
#[derive(Clone, Debug)]
pub struct SupervisedTask {
    pub process: ProcessSpec,
    pub target: HolderTarget,
    pub noise_sd: f64,
    pub clip_x: DomainBox,
}

/// Serializable description of a [`SupervisedTask`] naming a corpus target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    pub process: ProcessSpec,
    pub target: String,
    pub s: f64,
    pub noise_sd: f64,
    pub clip_x: DomainBox,
}

impl TaskConfig {
    pub fn build(&self) -> Result<SupervisedTask> {
        SupervisedTask::new(self.process.clone(), corpus_target(&self.target, self.s)?, self.noise_sd, self.clip_x.clone())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

impl SupervisedTask {
    pub fn new(process: ProcessSpec, target: HolderTarget, noise_sd: f64, clip_x: DomainBox) -> Result<Self> {
        process.validate()?;
        if !(noise_sd >= 0.0) {
            return input(format!("label noise_sd must be nonnegative (got {noise_sd})"));
        }
        if clip_x.dim() != target.d_x {
            return input(format!(
                "clip box has dimension {} but the target takes {} inputs",
                clip_x.dim(),
                target.d_x
            ));
        }
        if !target.domain.contains_box(&clip_x) {
            return input("the target's domain must contain the clip box");
        }
        Ok(SupervisedTask { process, target, noise_sd, clip_x })
    }

    /// Input dimension; values above 1 embed `(Z_t, Z_{t−1}, …)`.
    pub fn d_x(&self) -> usize {
        self.target.d_x
    }

    /// Bound on `|Y|` used where a compact label range is required: Gaussian
    /// label noise is truncated at six standard deviations.
    pub fn label_bound(&self, sup_h: f64) -> f64 {
        sup_h + 6.0 * self.noise_sd
    }
}

pub fn make_supervised(task: &SupervisedTask, n: usize, seed: u64) -> Result<Dataset> {
    make_supervised_labeled(task, n, seed, "process", "label")
}

pub(crate) fn make_supervised_labeled(
    task: &SupervisedTask,
    n: usize,
    root: u64,
    process_label: &str,
    label_label: &str,
) -> Result<Dataset> {
    if n == 0 {
        return input("sample size must be at least 1");
    }
    let d = task.d_x();
    let path = simulate_with_label(&task.process, n + d - 1, root, process_label)?;
    let mut noise = seed::rng(root, label_label, &[]);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut xi: Vec<f64> = (0..d).map(|l| path.values[i + d - 1 - l]).collect();
        task.clip_x.clamp(&mut xi);
        let eta: f64 = noise.sample(StandardNormal);
        y.push(task.target.eval(&xi)[0] + task.noise_sd * eta);
        x.push(xi);
    }
    Ok(Dataset { x, y })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn zero_target() -> HolderTarget {
        let dom = DomainBox::cube(1, -1.0, 1.0).unwrap();
        HolderTarget::new("zero", 1, 1.5, 1.0, dom, Arc::new(|_| vec![0.0]), Some(Arc::new(|_, _| vec![0.0]))).unwrap()
    }

    #[test]
    fn noiseless_labels_are_exact_and_inputs_clamped() {
        let task = SupervisedTask::new(
            ProcessSpec::ar1(0.9, 3.0),
            corpus_target("sin1d", 2.5).unwrap(),
            0.0,
            DomainBox::cube(1, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let data = make_supervised(&task, 5000, 3).unwrap();
        assert!(data.x.iter().all(|x| (-1.0..=1.0).contains(&x[0])));
        assert!(data.x.iter().any(|x| x[0] == 1.0));
        for (x, y) in data.x.iter().zip(&data.y) {
            assert_eq!(*y, task.target.eval(x)[0]);
        }
    }

    #[test]
    fn pure_noise_labels_center_on_zero() {
        let task =
            SupervisedTask::new(ProcessSpec::ar1(0.5, 1.0), zero_target(), 1.0, DomainBox::cube(1, -1.0, 1.0).unwrap())
                .unwrap();
        let data = make_supervised(&task, 100_000, 8).unwrap();
        assert!(crate::stats::mean(&data.y).abs() < 0.02);
    }

    #[test]
    fn embedding_uses_lagged_values() {
        let task = SupervisedTask::new(
            ProcessSpec::ar1(0.5, 0.2),
            corpus_target("gauss2d", 1.5).unwrap(),
            0.0,
            DomainBox::cube(2, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        let data = make_supervised(&task, 50, 1).unwrap();
        for w in data.x.windows(2) {
            assert_eq!(w[1][1], w[0][0]);
        }
    }

    #[test]
    fn clip_box_must_fit_target_domain() {
        let err = SupervisedTask::new(
            ProcessSpec::ar1(0.5, 1.0),
            zero_target(),
            0.0,
            DomainBox::cube(1, -2.0, 2.0).unwrap(),
        );
        assert!(err.is_err());
    }
}
