// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;

use super::convert::convert_relu_to_pwl;
use super::interp::{grid_for_budget, Interpolant, Rescale};
use super::relu::{sawtooth_count, TermPlan};
use super::target::HolderTarget;
use crate::dnn::{compose_affine_input, parallelize_many, then, Activation, Layer, Network};
use crate::error::{input, Error, Result};
use crate::exec::Exec;

/// Size ceilings and probing density for [`build_relu_approximant`].
#[derive(Clone, Debug)]
pub struct ApproxOptions {
    pub max_grid_points: usize,
    pub max_nonzeros: usize,
    /// Probe lattice points per axis; `None` picks a dimension-dependent default.
    pub probes_per_axis: Option<usize>,
    pub exec: Exec,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions { max_grid_points: 200_000, max_nonzeros: 10_000_000, probes_per_axis: None, exec: Exec::default() }
    }
}

fn default_probes(d: usize) -> usize {
    match d {
        1 => 20_001,
        2 => 300,
        3 => 40,
        _ => 8,
    }
}

/// Envelope constants, independent of ε, for the size budgets
/// `L₀ log₊(1/ε)`, `N₀ ε^{-d/s}`, `S₀ ε^{-d/s} log₊(1/ε)`, `B₀ ε^{-4(d/s+1)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BudgetConstants {
    pub l0: f64,
    pub n0: f64,
    pub s0: f64,
    pub b0: f64,
}

impl BudgetConstants {
    pub fn depth(&self, eps: f64) -> f64 {
        self.l0 * log_plus(eps)
    }
    pub fn width(&self, eps: f64, exponent: f64) -> f64 {
        self.n0 * eps.powf(-exponent)
    }
    pub fn sparsity(&self, eps: f64, exponent: f64) -> f64 {
        self.s0 * eps.powf(-exponent) * log_plus(eps)
    }
    pub fn max_abs(&self, eps: f64, exponent: f64) -> f64 {
        self.b0 * eps.powf(-4.0 * (exponent + 1.0))
    }
}

/// `max(1, ln(1/ε))`.
pub fn log_plus(eps: f64) -> f64 {
    (1.0 / eps).ln().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxCertificate {
    pub target: String,
    pub activation: String,
    pub s: f64,
    pub epsilon_requested: f64,
    pub sup_error_measured: f64,
    /// Largest gap between the network and the grid interpolant on the probes.
    pub realization_error_measured: f64,
    pub interpolant_bound: f64,
    pub probe_count: usize,
    pub depth: usize,
    pub width: usize,
    pub sparsity: usize,
    pub max_abs: f64,
    pub budget_depth: f64,
    pub budget_width: f64,
    pub budget_sparsity: f64,
    pub budget_max_abs: f64,
    pub constants: BudgetConstants,
    pub grid_m: usize,
    pub mult_m: u32,
    pub rescale_r: f64,
    pub terms: usize,
    pub pass: bool,
}

struct Plan {
    interp: Interpolant,
    lo: Vec<usize>,
    hi: Vec<usize>,
}

impl Plan {
    fn terms(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a + 1).product()
    }

    fn index(&self, mut k: usize) -> Vec<usize> {
        let d = self.lo.len();
        let mut idx = vec![0; d];
        for j in (0..d).rev() {
            let side = self.hi[j] - self.lo[j] + 1;
            idx[j] = self.lo[j] + k % side;
            k /= side;
        }
        idx
    }
}

fn plan(target: &HolderTarget, eps: f64, opts: &ApproxOptions) -> Result<Plan> {
    let rescale = Rescale::for_domain(&target.domain);
    let k_g = rescale.r.powf(target.s) * target.k_norm;
    let mut m = grid_for_budget(k_g, target.s, eps / 2.0);
    let unit = rescale.image(&target.domain);
    loop {
        let mf = m as f64;
        let lo: Vec<usize> = unit.lo.iter().map(|v| (v * mf).floor().max(0.0) as usize).collect();
        let hi: Vec<usize> = unit.hi.iter().map(|v| ((v * mf).ceil() as usize).min(m)).collect();
        let g: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as f64).product();
        if g > opts.max_grid_points as f64 {
            return Err(Error::Resource {
                ceiling: "max_grid_points",
                detail: format!("grid resolution {m} needs {g} terms, ceiling is {}", opts.max_grid_points),
            });
        }
        match Interpolant::new(target, m) {
            Ok(interp) => return Ok(Plan { interp, lo, hi }),
            Err(Error::Input(_)) => m += 1,
            Err(e) => return Err(e),
        }
    }
}

/// Certified sparse ReLU approximation of `target` to sup-norm accuracy `eps` on its domain.
pub fn build_relu_approximant(
    target: &HolderTarget,
    eps: f64,
    opts: &ApproxOptions,
) -> Result<(Network, ApproxCertificate)> {
    if !(eps > 0.0 && eps < 1.0) {
        return input(format!("accuracy ε must lie in (0, 1) (got {eps})"));
    }
    let p = plan(target, eps, opts)?;
    let ip = &p.interp;
    let (d, d_y, k) = (target.d_x, target.d_y, target.order());
    let relu = Activation::relu();

    // Probe plan only needs radius, betas and re-expansion here.
    let shape = TermPlan::new(d, k, ip.m, ip.betas.clone(), 1)?;
    let g = p.terms();
    let mut qs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(g);
    let mut effs = Vec::with_capacity(g);
    for t in 0..g {
        let eff = ip.usable.project(&p.index(t));
        let c = ip.coeffs_at(&eff);
        qs.push((0..d_y).map(|o| shape.reexpand(&c.iter().map(|cb| cb[o]).collect::<Vec<_>>())).collect());
        effs.push(eff);
    }
    let q_max = qs.iter().flatten().map(|q| q.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let chain = (d - 1) as u32 + k;
    let m_acc = ((2f64.powi(d as i32 + 1) * q_max.max(1e-300) / eps).log2().ceil().max(5.0)) as u32;
    let m_mult = m_acc + (chain.max(1) as f64).log2().ceil() as u32;

    let constant = constant_values(ip, &effs, d_y);
    let per_output: Vec<Network> = match &constant {
        Some(values) => values
            .iter()
            .map(|&c| {
                let l1 = Layer::zeros(1, d);
                let l2 = Layer::from_sparse_rows(1, vec![vec![]], vec![c])?;
                Network::new(relu, vec![l1, l2], None)
            })
            .collect::<Result<_>>()?,
        None => {
            let tp = TermPlan::new(d, k, ip.m, ip.betas.clone(), m_mult)?;
            let probe = tp.term(&ip.usable.point(&p.index(0)), &ip.usable.point(&effs[0]), &vec![1.0; ip.betas.len()])?;
            let est = probe.param_stats().sparsity as f64 * g as f64 * d_y as f64;
            if est > opts.max_nonzeros as f64 {
                return Err(Error::Resource {
                    ceiling: "max_nonzeros",
                    detail: format!("about {est:.0} nonzero parameters needed, ceiling is {}", opts.max_nonzeros),
                });
            }
            (0..d_y)
                .map(|o| {
                    let terms = opts.exec.map_range(g, |t| {
                        let z = ip.usable.point(&p.index(t));
                        tp.term(&z, &ip.usable.point(&effs[t]), &qs[t][o])
                    });
                    let terms = terms.into_iter().collect::<Result<Vec<_>>>()?;
                    let stacked = parallelize_many(&terms.iter().collect::<Vec<_>>())?;
                    let sum = Layer::from_sparse_rows(g, vec![(0..g).map(|j| (j, 1.0)).collect()], vec![0.0])?;
                    then(&Network::new(relu, vec![sum], None)?, &stacked)
                })
                .collect::<Result<_>>()?
        }
    };
    let core = parallelize_many(&per_output.iter().collect::<Vec<_>>())?;
    let diag: Vec<Vec<f64>> =
        (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 / ip.rescale.r } else { 0.0 }).collect()).collect();
    let net = compose_affine_input(&core, &diag, &vec![ip.rescale.shift; d])?;

    let constants = budget_constants(target, ip, q_max)?;
    let cert = certify(target, &net, ip, eps, constants, m_mult, g, opts)?;
    Ok((net, cert))
}

/// Patch values when every included patch is the same constant.
fn constant_values(ip: &Interpolant, effs: &[Vec<usize>], d_y: usize) -> Option<Vec<f64>> {
    let first = ip.coeffs_at(&effs[0]);
    let values: Vec<f64> = first[0].clone();
    for eff in effs {
        let c = ip.coeffs_at(eff);
        if c[0] != values || c[1..].iter().flatten().any(|v| *v != 0.0) {
            return None;
        }
    }
    (values.len() == d_y).then_some(values)
}

/// Closed-form envelope constants; term sizes are affine in the sawtooth
/// count and are read off two reference builds.
fn budget_constants(target: &HolderTarget, ip: &Interpolant, _q_max: f64) -> Result<BudgetConstants> {
    let (d, k, s) = (target.d_x, target.order(), target.s);
    let df = d as f64;
    let c = (2.0 * 3f64.powf(s) * ip.k_rescaled).powf(1.0 / s);
    let g0 = ((c + 4.0) / 2.0 + 3.0).powi(d as i32);
    let q_b = (2.25f64).powi(k as i32) * ip.k_rescaled;
    let chain = (d - 1) as u32 + k;
    let chain_bits = (chain.max(1) as f64).log2().ceil();
    let a_sc = (7.0 + df + q_b.log2().max(0.0) + chain_bits) / 2.0 + 1.0;
    let sigma0 = a_sc + 1.0 / (2.0 * std::f64::consts::LN_2);

    let sizes = |m_mult: u32| -> Result<(f64, f64, f64, f64)> {
        let tp = TermPlan::new(d, k, 64, ip.betas.clone(), m_mult)?;
        let z = vec![0.4375; d];
        let net = tp.term(&z, &vec![0.46875; d], &vec![1.0; ip.betas.len()])?;
        let st = net.param_stats();
        Ok((sawtooth_count(m_mult) as f64, st.depth as f64, st.width as f64, st.sparsity as f64))
    };
    let (sa, da, wa, na) = sizes(6)?;
    let (sb, db, wb, nb) = sizes(8)?;
    let dq = (db - da) / (sb - sa);
    let dp = da - dq * sa;
    let nq = (nb - na) / (sb - sa);
    let np = (na - nq * sa).max(0.0);
    let w_term = wa.max(wb);
    let d_y = target.d_y as f64;
    Ok(BudgetConstants {
        l0: 1.0 + dp.max(0.0) + dq * sigma0,
        n0: (d_y * g0 * w_term).max(df),
        s0: d_y * g0 * (np + nq * sigma0) + 2.0 * df,
        b0: (c + 4.0).max(q_b).max(4.0),
    })
}

#[allow(clippy::too_many_arguments)]
fn certify(
    target: &HolderTarget,
    net: &Network,
    ip: &Interpolant,
    eps: f64,
    constants: BudgetConstants,
    mult_m: u32,
    terms: usize,
    opts: &ApproxOptions,
) -> Result<ApproxCertificate> {
    let per_axis = opts.probes_per_axis.unwrap_or_else(|| default_probes(target.d_x));
    let probes = target.domain.lattice(per_axis);
    let (sup, real) = probe_errors(target, net, Some(ip), &probes, opts.exec);
    let st = net.param_stats();
    let exponent = target.d_x as f64 / target.s;
    let mut cert = ApproxCertificate {
        target: target.name.clone(),
        activation: net.activation().kind().name().to_string(),
        s: target.s,
        epsilon_requested: eps,
        sup_error_measured: sup,
        realization_error_measured: real,
        interpolant_bound: ip.error_bound(),
        probe_count: probes.len(),
        depth: st.depth,
        width: st.width,
        sparsity: st.sparsity,
        max_abs: st.max_abs,
        budget_depth: constants.depth(eps),
        budget_width: constants.width(eps, exponent),
        budget_sparsity: constants.sparsity(eps, exponent),
        budget_max_abs: constants.max_abs(eps, exponent),
        constants,
        grid_m: ip.m,
        mult_m,
        rescale_r: ip.rescale.r,
        terms,
        pass: false,
    };
    cert.pass = within_budget(&cert);
    Ok(cert)
}

fn within_budget(c: &ApproxCertificate) -> bool {
    c.sup_error_measured <= c.epsilon_requested
        && c.depth as f64 <= c.budget_depth
        && c.width as f64 <= c.budget_width
        && c.sparsity as f64 <= c.budget_sparsity
        && c.max_abs <= c.budget_max_abs
}

/// Max error against the target and, when given, against the interpolant.
pub fn probe_errors(
    target: &HolderTarget,
    net: &Network,
    ip: Option<&Interpolant>,
    probes: &[Vec<f64>],
    exec: Exec,
) -> (f64, f64) {
    let parts = exec.map_chunks(probes.len(), 512, |a, b| {
        let mut scratch = crate::dnn::Scratch::default();
        let mut out = vec![0.0; net.output_dim()];
        let (mut sup, mut real) = (0.0_f64, 0.0_f64);
        for x in &probes[a..b] {
            net.forward_into(x, &mut scratch, &mut out);
            let h = target.eval(x);
            for (o, v) in out.iter().zip(&h) {
                sup = sup.max((o - v).abs());
            }
            if let Some(ip) = ip {
                let p = ip.eval(x).expect("probes lie in the domain");
                for (o, v) in out.iter().zip(&p) {
                    real = real.max((o - v).abs());
                }
            }
        }
        (sup, real)
    });
    parts.into_iter().fold((0.0, 0.0), |(s, r), (a, b)| (s.max(a), r.max(b)))
}

/// Build for any supported activation: ReLU directly, LeakyReLU by exact
/// conversion. Locally quadratic kinds are rejected.
pub fn build_approximant(
    target: &HolderTarget,
    eps: f64,
    activation: Activation,
    opts: &ApproxOptions,
) -> Result<(Network, ApproxCertificate)> {
    if !activation.is_piecewise_linear() {
        return input(format!(
            "network realization is available for piecewise-linear activations only (got {})",
            activation.kind().name()
        ));
    }
    let (net, mut cert) = build_relu_approximant(target, eps, opts)?;
    if activation == Activation::relu() {
        return Ok((net, cert));
    }
    let conv = convert_relu_to_pwl(&net, activation)?;
    let a = activation.shape().unwrap_or(0.0);
    let probes = target.domain.lattice(opts.probes_per_axis.unwrap_or_else(|| default_probes(target.d_x)));
    let (sup, _) = probe_errors(target, &conv, None, &probes, opts.exec);
    let st = conv.param_stats();
    let exponent = target.d_x as f64 / target.s;
    let k = BudgetConstants {
        l0: cert.constants.l0,
        n0: 2.0 * cert.constants.n0,
        s0: 4.0 * cert.constants.s0,
        b0: cert.constants.b0 / (1.0 - a * a),
    };
    cert.activation = activation.kind().name().to_string();
    cert.sup_error_measured = sup;
    cert.realization_error_measured = cert.realization_error_measured.max(0.0);
    cert.depth = st.depth;
    cert.width = st.width;
    cert.sparsity = st.sparsity;
    cert.max_abs = st.max_abs;
    cert.constants = k;
    cert.budget_depth = k.depth(eps);
    cert.budget_width = k.width(eps, exponent);
    cert.budget_sparsity = k.sparsity(eps, exponent);
    cert.budget_max_abs = k.max_abs(eps, exponent);
    cert.pass = within_budget(&cert);
    Ok((conv, cert))
}
