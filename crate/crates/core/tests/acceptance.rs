// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use holonet::approx::{
    build_grid, build_relu_approximant, convert_relu_to_pwl, hat_weight, study_corpus, ApproxOptions,
    GridSpec, HolderTarget, Interpolant,
};
use holonet::dnn::{Activation, ClassConstraints, Network};
use holonet::erm::{empirical_risk, project_params, train_erm, Architecture, DenseNet, Loss, LossKind, TrainConfig};
use holonet::harness::{bound_ingredients, rate_experiment, RateExperimentConfig};
use holonet::weakdep::{default_dictionary, simulate, Dataset, ProcessSpec};
use holonet::{seed, stats, Exec};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn partition_of_unity() -> Check {
    let mut rng = seed::rng(1, "acceptance-pou", &[]);
    let mut worst: f64 = 0.0;
    for d in 1..=3 {
        for m in [4, 8] {
            let grid = build_grid(GridSpec::new(m, d).map_err(|e| e.to_string())?);
            for _ in 0..10_000 {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..=1.0)).collect();
                let total: f64 = grid.iter().map(|z| hat_weight(&x, z, m)).sum();
                worst = worst.max((total - 1.0).abs());
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max |Σ − 1| = {worst:e}"))?;
    Ok(format!("max |Σ − 1| = {worst:.1e}"))
}

fn dense_points(t: &HolderTarget) -> Vec<Vec<f64>> {
    match t.d_x {
        1 => t.domain.lattice(100_000),
        _ => t.domain.lattice(300),
    }
}

fn interpolant_bound() -> Check {
    let mut worst_slope_gap = f64::NEG_INFINITY;
    for t in study_corpus() {
        let pts = dense_points(&t);
        let mut logs = (Vec::new(), Vec::new());
        for m in [4usize, 8, 16, 32] {
            let p = Interpolant::new(&t, m).map_err(|e| e.to_string())?;
            let mut sup: f64 = 0.0;
            for x in &pts {
                let v = p.eval(x).map_err(|e| e.to_string())?;
                let h = t.eval(x);
                sup = v.iter().zip(&h).fold(sup, |a, (u, w)| a.max((u - w).abs()));
            }
            ensure(sup <= p.error_bound(), || format!("{} at 𝔐={m}: sup {sup:e} > bound {:e}", t.name, p.error_bound()))?;
            logs.0.push((m as f64).ln());
            logs.1.push(sup.max(1e-300).ln());
        }
        let fit = stats::ols(&logs.0, &logs.1).ok_or("slope fit failed")?;
        ensure(fit.slope <= -t.s + 0.2, || format!("{}: slope {:.3} > −s + 0.2 = {:.3}", t.name, fit.slope, -t.s + 0.2))?;
        worst_slope_gap = worst_slope_gap.max(fit.slope + t.s);
    }
    Ok(format!("all bounds hold; worst slope + s = {worst_slope_gap:.3}"))
}

fn d1_corpus() -> Vec<HolderTarget> {
    study_corpus().into_iter().filter(|t| t.d_x == 1).collect()
}

fn constructed() -> Result<Vec<(String, f64, Network, holonet::approx::ApproxCertificate)>, String> {
    let mut out = Vec::new();
    for t in d1_corpus() {
        for k in 2..=5 {
            let eps = 2f64.powi(-k);
            let (net, cert) = build_relu_approximant(&t, eps, &ApproxOptions::default()).map_err(|e| e.to_string())?;
            out.push((t.name.clone(), eps, net, cert));
        }
    }
    Ok(out)
}

fn construction(built: &[(String, f64, Network, holonet::approx::ApproxCertificate)]) -> Check {
    let mut detail = Vec::new();
    for t in d1_corpus() {
        let rows: Vec<_> = built.iter().filter(|b| b.0 == t.name).collect();
        let want = 2f64.powf(t.d_x as f64 / t.s);
        for r in &rows {
            ensure(r.3.sup_error_measured <= r.1, || format!("{} ε={}: sup {}", t.name, r.1, r.3.sup_error_measured))?;
        }
        let mut ratios = Vec::new();
        for w in rows.windows(2) {
            let ratio = w[1].3.width as f64 / w[0].3.width as f64;
            ensure((ratio / want - 1.0).abs() <= 0.25, || format!("{}: width ratio {ratio:.3} vs {want:.3}", t.name))?;
            ratios.push(format!("{ratio:.2}"));
        }
        let (d0, l0) = (rows[0].3.depth as f64, (1.0 / rows[0].1).log2());
        for r in &rows {
            let allowed = d0 * (1.0 / r.1).log2() / l0;
            ensure(r.3.depth as f64 <= allowed, || format!("{} ε={}: depth {} > {allowed}", t.name, r.1, r.3.depth))?;
        }
        detail.push(format!("{} ratios [{}] vs {want:.3}", t.name, ratios.join(" ")));
    }
    Ok(detail.join("; "))
}

fn conversion(built: &[(String, f64, Network, holonet::approx::ApproxCertificate)]) -> Check {
    let leaky = Activation::leaky_relu(0.1).map_err(|e| e.to_string())?;
    let mut rng = seed::rng(4, "acceptance-convert", &[]);
    let mut worst: f64 = 0.0;
    for (name, eps, net, _) in built {
        let conv = convert_relu_to_pwl(net, leaky).map_err(|e| e.to_string())?;
        let (s1, n1, l1) = (net.param_stats().sparsity, net.width(), net.depth());
        ensure(conv.width() == 2 * n1, || format!("{name} ε={eps}: width {} ≠ 2·{n1}", conv.width()))?;
        let s2 = conv.param_stats().sparsity;
        ensure(s2 <= 4 * s1 + 2 * l1 * n1 + 1, || format!("{name} ε={eps}: sparsity {s2} > 4·{s1}+2·{l1}·{n1}+1"))?;
        let dom = d1_corpus().into_iter().find(|t| &t.name == name).ok_or("unknown target")?.domain;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..dom.dim()).map(|j| rng.random_range(dom.lo[j]..=dom.hi[j])).collect();
            let a = net.forward(&x).map_err(|e| e.to_string())?;
            let b = conv.forward(&x).map_err(|e| e.to_string())?;
            worst = a.iter().zip(&b).fold(worst, |m, (u, v)| m.max((u - v).abs()));
        }
    }
    ensure(worst <= 1e-9, || format!("max output change {worst:e}"))?;
    Ok(format!("{} networks, max output change {worst:.1e}", built.len()))
}

fn near_loss_kink(kind: LossKind, u: f64, y: f64) -> bool {
    let r = u - y;
    match kind {
        LossKind::Absolute => r.abs() < 1e-3,
        LossKind::Huber { delta } => (r.abs() - delta).abs() < 1e-3,
        LossKind::Hinge => (1.0 - y * u).abs() < 1e-3,
        _ => false,
    }
}

fn gradient_check() -> Check {
    let mut rng = seed::rng(5, "acceptance-grad", &[]);
    let kinds = [LossKind::Absolute, LossKind::Huber { delta: 0.5 }, LossKind::Logistic, LossKind::Squared];
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let depth = rng.random_range(1..=3);
        let mut widths = vec![rng.random_range(1..=3)];
        widths.extend((0..depth).map(|_| rng.random_range(2..=8)));
        widths.push(1);
        let count: usize = widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let params: Vec<f64> = (0..count).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act = if trial % 2 == 0 { Activation::relu() } else { Activation::leaky_relu(0.1).unwrap() };
        let d_in = widths[0];
        let net = DenseNet::new(act, widths, params, None).map_err(|e| e.to_string())?;
        for kind in kinds {
            let loss = Loss::new(kind, 10.0, 2.0).map_err(|e| e.to_string())?;
            let mut data = Dataset::default();
            while data.len() < 8 {
                let x: Vec<f64> = (0..d_in).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.2..1.0);
                if net.min_abs_preactivation(&x) > 1e-3 && !near_loss_kink(kind, net.eval(&x), y) {
                    data.x.push(x);
                    data.y.push(y);
                }
            }
            let mut g = Vec::new();
            net.risk_and_grad(&data, &loss, &mut g);
            let h = 1e-6;
            for k in 0..net.param_count() {
                let (mut p, mut m) = (net.clone(), net.clone());
                p.params[k] += h;
                m.params[k] -= h;
                let fd = (p.risk(&data, &loss) - m.risk(&data, &loss)) / (2.0 * h);
                let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1.0);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-5, || format!("max relative error {worst:e}"))?;
    Ok(format!("80 net×loss pairs, max relative error {worst:.1e}"))
}

fn line_data(n: usize, f: impl Fn(f64) -> f64) -> Dataset {
    let x: Vec<Vec<f64>> = (0..n).map(|i| vec![-1.0 + 2.0 * i as f64 / (n - 1) as f64]).collect();
    let y = x.iter().map(|v| f(v[0])).collect();
    Dataset { x, y }
}

fn projection() -> Check {
    let mut rng = seed::rng(6, "acceptance-proj", &[]);
    for _ in 0..1000 {
        let len = rng.random_range(1..60);
        let theta: Vec<f64> = (0..len).map(|_| rng.random_range(-4.0..4.0)).collect();
        let (s, b) = (rng.random_range(1.0..40.0), rng.random_range(0.05..3.0));
        let mut p = theta.clone();
        project_params(&mut p, s, b);
        ensure(p.iter().filter(|v| **v != 0.0).count() <= s.floor() as usize, || "sparsity cap broken".into())?;
        ensure(p.iter().all(|v| v.abs() <= b), || "magnitude cap broken".into())?;
        let mut q = p.clone();
        project_params(&mut q, s, b);
        ensure(p == q, || "projection not idempotent".into())?;
    }
    let data = line_data(50, |x| 0.4 * x.abs() - 0.1);
    let loss = Loss::new(LossKind::Absolute, 1.0, 1.0).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (s_cap, b_cap) in [(4.0, 0.3), (7.5, 1.0), (20.0, 0.05)] {
        let c = ClassConstraints::new(2.0, 5.0, s_cap, b_cap, 1.0).map_err(|e| e.to_string())?;
        let arch = Architecture::new(vec![1, 5, 3, 1], Activation::relu());
        let cfg = TrainConfig { restarts: 3, epochs: 300, projection_interval: 30, ..Default::default() };
        let m = train_erm(&c, &data, &loss, &arch, &cfg, Exec::default()).map_err(|e| e.to_string())?;
        let st = m.net.param_stats();
        ensure(st.sparsity <= s_cap.floor() as usize && st.max_abs <= b_cap && m.constraint_report.ok, || {
            format!("S={s_cap}, B={b_cap}: got sparsity {} max_abs {}", st.sparsity, st.max_abs)
        })?;
        checked += 1;
    }
    Ok(format!("1000 random vectors idempotent; {checked} trained models inside caps"))
}

fn realizable_erm() -> Check {
    let teacher = Network::zeros(Activation::relu(), &[1, 3, 1], Some(1.0))
        .and_then(|n| n.with_param_vector(&[1.0, -1.0, 0.5, 0.0, 0.0, -0.25, 0.5, 0.5, -0.6, 0.0]))
        .map_err(|e| e.to_string())?;
    let x: Vec<Vec<f64>> = (0..128).map(|i| vec![-1.0 + 2.0 * i as f64 / 127.0]).collect();
    let y = x.iter().map(|v| teacher.forward(v).unwrap()[0]).collect();
    let data = Dataset { x, y };
    let c = ClassConstraints::new(1.0, 3.0, 10.0, 1.0, 1.0).map_err(|e| e.to_string())?;
    let loss = Loss::new(LossKind::Squared, 1.0, 1.0).map_err(|e| e.to_string())?;
    let arch = Architecture::new(vec![1, 3, 1], Activation::relu());
    let cfg = TrainConfig { restarts: 10, epochs: 4000, step_size: 0.2, decay_interval: 1000, ..Default::default() };
    let m = train_erm(&c, &data, &loss, &arch, &cfg, Exec::default()).map_err(|e| e.to_string())?;
    let reference = empirical_risk(&teacher, &data, &loss).map_err(|e| e.to_string())?;
    ensure(m.empirical_risk <= reference + 1e-3, || format!("R̂(ĥ) = {:e} vs teacher {reference:e}", m.empirical_risk))?;
    Ok(format!("R̂(ĥ) = {:.2e}, R̂(teacher) = {reference:.1e}", m.empirical_risk))
}

fn dependence() -> Check {
    let ar = simulate(&ProcessSpec::ar1(0.5, 1.0), 100_000, 8).map_err(|e| e.to_string())?;
    let lags: Vec<usize> = (1..=10).collect();
    let est = holonet::weakdep::estimate_dependence(&ar, &lags, &default_dictionary(), Exec::default()).map_err(|e| e.to_string())?;
    let g = est.geometric.ok_or("no geometric fit")?;
    ensure((g.exponent / LN_2 - 1.0).abs() <= 0.15, || format!("exponent {:.4} vs ln 2", g.exponent))?;
    let iid = simulate(&ProcessSpec::ar1(0.0, 1.0), 100_000, 9).map_err(|e| e.to_string())?;
    let lags: Vec<usize> = (1..=50).collect();
    let e2 = holonet::weakdep::estimate_dependence(&iid, &lags, &default_dictionary(), Exec::default()).map_err(|e| e.to_string())?;
    let above = e2.cov_abs.iter().filter(|c| **c >= e2.null_band).count();
    ensure(above == 0, || format!("i.i.d. control: {above} lags above the band"))?;
    Ok(format!("geometric exponent {:.4} (ln 2 = {LN_2:.4}); i.i.d. max cov {:.2e} < band {:.2e}", g.exponent,
        e2.cov_abs.iter().copied().fold(0.0, f64::max), e2.null_band))
}

fn rate() -> Check {
    let cfg = RateExperimentConfig::canonical();
    let r = rate_experiment(&cfg, Exec::default()).map_err(|e| e.to_string())?;
    let inv = r.inversions();
    ensure(inv <= 1, || format!("{inv} inversions in the median excess risk"))?;
    let slope = r.fitted_slope.ok_or("no slope fit")?;
    ensure(slope <= -0.15, || format!("fitted slope {slope:.3} > −0.15"))?;
    for p in &r.per_n {
        ensure(p.approx_bound_ok == Some(true), || format!("n={}: constructive approx error above K_ell·n^(−1/α) + 3 SE", p.n))?;
    }
    let meds: Vec<String> = r.per_n.iter().map(|p| format!("{:.2e}", p.excess_risk_median)).collect();
    Ok(format!("slope {slope:.3}, {inv} inversions, medians [{}]", meds.join(" ")))
}

fn random_net(rng: &mut impl Rng, f: f64) -> Network {
    let widths = [1, rng.random_range(1..=6), 1];
    let count = widths[1] * 3 + 1;
    let theta: Vec<f64> = (0..count).map(|_| rng.random_range(-2.0..2.0)).collect();
    Network::zeros(Activation::relu(), &widths, Some(f)).unwrap().with_param_vector(&theta).unwrap()
}

fn ingredients() -> Check {
    let x_box = holonet::approx::DomainBox::cube(1, -1.0, 1.0).map_err(|e| e.to_string())?;
    let grid = x_box.lattice(2001);
    let mut rng = seed::rng(10, "acceptance-ingredients", &[]);
    let (f, y_norm) = (1.0, 1.0);
    let mut worst_ratio: f64 = 0.0;
    for kind in [LossKind::Absolute, LossKind::Huber { delta: 0.4 }, LossKind::Hinge, LossKind::Logistic, LossKind::Squared] {
        let loss = Loss::new(kind, f, y_norm).map_err(|e| e.to_string())?;
        let b = bound_ingredients(f, &loss, &x_box, (-y_norm, y_norm)).map_err(|e| e.to_string())?;
        ensure(b.gn_cap == loss.k_ell, || "Gn_cap differs from K_ell".into())?;
        for _ in 0..1000 {
            let (h1, h2) = (random_net(&mut rng, f), random_net(&mut rng, f));
            let x = vec![rng.random_range(-1.0..=1.0)];
            let y = rng.random_range(-y_norm..=y_norm);
            let sup = grid.iter().chain([&x]).map(|p| (h1.forward(p).unwrap()[0] - h2.forward(p).unwrap()[0]).abs()).fold(0.0, f64::max);
            let (u1, u2) = (h1.forward(&x).unwrap()[0], h2.forward(&x).unwrap()[0]);
            if sup > 0.0 {
                let q = (loss.value(u1, y) - loss.value(u2, y)).abs() / sup;
                ensure(q <= b.gn_cap * (1.0 + 1e-9), || format!("{kind:?}: quotient {q} > {}", b.gn_cap))?;
                worst_ratio = worst_ratio.max(q / b.gn_cap);
            }
            ensure(loss.value(u1, y) <= b.mn_cap, || format!("{kind:?}: ℓ = {} > Mn_cap {}", loss.value(u1, y), b.mn_cap))?;
        }
    }
    Ok(format!("5 losses × 1000 pairs; worst quotient / K_ell = {worst_ratio:.3}"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, t: Instant, r: Check| {
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("criterion {id:>2} PASS  {name} ({secs:.1}s): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name} ({secs:.1}s): {msg}");
            }
        }
    };
    let t = Instant::now();
    report(1, "partition of unity", t, partition_of_unity());
    let t = Instant::now();
    report(2, "interpolant error bound", t, interpolant_bound());
    let t = Instant::now();
    let built = constructed();
    match &built {
        Ok(b) => report(3, "ReLU construction", t, construction(b)),
        Err(e) => report(3, "ReLU construction", t, Err(e.clone())),
    }
    let t = Instant::now();
    match &built {
        Ok(b) => report(4, "activation conversion", t, conversion(b)),
        Err(e) => report(4, "activation conversion", t, Err(e.clone())),
    }
    let t = Instant::now();
    report(5, "gradient check", t, gradient_check());
    let t = Instant::now();
    report(6, "constraint projection", t, projection());
    let t = Instant::now();
    report(7, "realizable ERM", t, realizable_erm());
    let t = Instant::now();
    report(8, "dependence estimation", t, dependence());
    let t = Instant::now();
    report(9, "rate experiment", t, rate());
    let t = Instant::now();
    report(10, "bound ingredients", t, ingredients());
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
