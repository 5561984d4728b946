// SPDX-License-Identifier: Apache-2.0

use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};

use holonet::approx::{build_approximant, corpus, corpus_target, ApproxOptions};
use holonet::dnn::{Activation, ActivationKind, ClassConstraints};
use holonet::erm::{train_erm, Architecture, Loss, LossKind, TrainConfig};
use holonet::harness::{rate_experiment, render_svg, write_csv, RateExperimentConfig};
use holonet::weakdep::{
    default_dictionary, estimate_dependence, make_supervised, parse_lags, simulate as simulate_process, Dataset,
    ProcessSpec, TaskConfig, Trajectory,
};
use holonet::Exec;

use crate::config::{load, validate_config, ConfigKind};
use crate::manifest::{digest, now, RunManifest};
use crate::{Failure, EXIT_FAILURE};

fn read(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read `{path}`: {e}")))
}

fn write(path: &str, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("cannot write `{path}`: {e}")))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn finish(subcommand: &str, config: Value, seed: Option<u64>, started: String, outputs: &[&str]) -> Result<(), Failure> {
    let m = RunManifest {
        subcommand: subcommand.into(),
        config_digest: digest(&config),
        config,
        seed,
        tool_version: holonet::TOOL_VERSION.into(),
        started,
        finished: now(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write(&RunManifest::path_for(outputs[0]), &pretty(&m))
}

fn csv_failure(path: &str) -> impl Fn(csv::Error) -> Failure + '_ {
    move |e| Failure::input(format!("csv error in `{path}`: {e}"))
}

#[derive(Args, Debug)]
pub struct ApproxArgs {
    #[arg(long)]
    target: String,
    /// Smoothness; defaults to the target's conventional order.
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value = "relu")]
    activation: String,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    out: String,
    #[arg(long)]
    cert: String,
    /// Probe lattice points per axis.
    #[arg(long)]
    probes: Option<usize>,
}

pub fn approx(a: ApproxArgs, exec: Exec) -> Result<(), Failure> {
    let started = now();
    let s = match a.s.or_else(|| corpus::default_s(&a.target)) {
        Some(s) => s,
        None => return Err(Failure::input(format!("unknown target `{}`; expected one of {:?}", a.target, corpus::CORPUS_NAMES))),
    };
    let target = corpus_target(&a.target, s)?;
    let act = Activation::new(ActivationKind::parse(&a.activation)?, a.a)?;
    let opts = ApproxOptions { probes_per_axis: a.probes, exec, ..Default::default() };
    let (net, cert) = build_approximant(&target, a.eps, act, &opts)?;
    write(&a.out, &net.to_json())?;
    write(&a.cert, &pretty(&cert))?;
    let config = json!({ "target": a.target, "s": s, "eps": a.eps, "activation": act.kind().name(), "a": act.shape(), "probes": a.probes });
    finish("approx", config, None, started, &[&a.out, &a.cert])?;
    println!(
        "certificate {}: sup error {:.3e} (eps {}), depth {}, width {}, sparsity {}",
        if cert.pass { "PASS" } else { "FAIL" },
        cert.sup_error_measured,
        a.eps,
        cert.depth,
        cert.width,
        cert.sparsity
    );
    if cert.pass {
        Ok(())
    } else {
        Err(Failure { code: EXIT_FAILURE, message: "certificate check failed".into() })
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Process spec, or a task config (with `target`) to also emit labels.
    #[arg(long)]
    spec: String,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: String,
}

pub fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let started = now();
    let text = read(&a.spec)?;
    let is_task = serde_json::from_str::<Value>(&text).ok().is_some_and(|v| v.get("target").is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = csv_failure(&a.out);
    let config = if is_task {
        let (cfg, v): (TaskConfig, Value) = load(ConfigKind::Task, &text)?;
        let data = make_supervised(&cfg.build()?, a.n, a.seed)?;
        let d = data.dim();
        let mut head = vec!["index".to_string()];
        if d == 1 {
            head.push("x".into());
        } else {
            head.extend((1..=d).map(|j| format!("x_{j}")));
        }
        head.push("y".into());
        w.write_record(&head).map_err(&err)?;
        for (i, (x, y)) in data.x.iter().zip(&data.y).enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(x.iter().map(f64::to_string));
            row.push(y.to_string());
            w.write_record(&row).map_err(&err)?;
        }
        v
    } else {
        let (spec, v): (ProcessSpec, Value) = load(ConfigKind::Simulate, &text)?;
        let traj = simulate_process(&spec, a.n, a.seed)?;
        w.write_record(["index", "x"]).map_err(&err)?;
        for (i, x) in traj.values.iter().enumerate() {
            w.write_record([i.to_string(), x.to_string()]).map_err(&err)?;
        }
        v
    };
    let bytes = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
    write(&a.out, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    finish("simulate", json!({ "spec": config, "n": a.n }), Some(a.seed), started, &[&a.out])
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn read_table(path: &str) -> Result<Table, Failure> {
    let err = csv_failure(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header: Vec<String> = r.headers().map_err(&err)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(&err)?;
        let row: Result<Vec<f64>, _> = rec.iter().map(|f| f.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|_| Failure::input(format!("`{path}` row {}: non-numeric field", line + 1)))?);
    }
    if rows.is_empty() {
        return Err(Failure::input(format!("`{path}` has no data rows")));
    }
    Ok(Table { header, rows })
}

fn column(t: &Table, names: &[&str]) -> Option<usize> {
    t.header.iter().position(|h| names.contains(&h.as_str()))
}

#[derive(Args, Debug)]
pub struct DepsArgs {
    #[arg(long)]
    traj: String,
    #[arg(long, default_value = "1:50")]
    lags: String,
    #[arg(long)]
    out: String,
    /// Optional JSON with the fitted decay models.
    #[arg(long)]
    report: Option<String>,
}

pub fn deps(a: DepsArgs, exec: Exec) -> Result<(), Failure> {
    let started = now();
    let t = read_table(&a.traj)?;
    let xc = column(&t, &["x", "x_1"]).ok_or_else(|| Failure::input(format!("`{}` has no `x` column", a.traj)))?;
    let values: Vec<f64> = t.rows.iter().map(|r| r[xc]).collect();
    let traj = Trajectory { values, seed: 0, spec_digest: holonet::seed::sha256_hex(read(&a.traj)?.as_bytes()) };
    let lags = parse_lags(&a.lags)?;
    let est = estimate_dependence(&traj, &lags, &default_dictionary(), exec)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = csv_failure(&a.out);
    w.write_record(["lag", "cov_abs", "null_band", "above_band"]).map_err(&err)?;
    for (lag, c) in est.lags.iter().zip(&est.cov_abs) {
        w.write_record([lag.to_string(), c.to_string(), est.null_band.to_string(), (*c > est.null_band).to_string()])
            .map_err(&err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
    write(&a.out, &String::from_utf8(bytes).expect("csv is utf-8"))?;
    let mut outputs = vec![a.out.as_str()];
    if let Some(r) = &a.report {
        write(r, &pretty(&est))?;
        outputs.push(r);
    }
    if let Some(f) = est.fitted_rate {
        println!("fitted {:?} decay, exponent {:.4}, r² {:.3}", f.model, f.exponent, f.r2);
    } else {
        println!("no lag cleared the null band {:.3e}", est.null_band);
    }
    finish("deps", json!({ "traj_digest": traj.spec_digest, "lags": lags }), None, started, &outputs)
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// CSV with `x` (or `x_1..x_d`) and `y` columns.
    #[arg(long)]
    data: String,
    #[arg(long)]
    class: String,
    #[arg(long)]
    arch: String,
    #[arg(long, default_value = "absolute")]
    loss: String,
    #[arg(long)]
    huber_delta: Option<f64>,
    /// Training config; every field has a default.
    #[arg(long)]
    cfg: Option<String>,
    #[arg(long)]
    out: String,
    #[arg(long)]
    report: String,
}

#[derive(Serialize)]
struct TrainReport<'a> {
    estimator: &'static str,
    loss: Loss,
    samples: usize,
    empirical_risk: f64,
    restart_index: usize,
    constraint_report: &'a holonet::dnn::MembershipReport,
    restarts: &'a [holonet::erm::RestartSummary],
}

pub fn train(a: TrainArgs, exec: Exec) -> Result<(), Failure> {
    let started = now();
    let mut errors = Vec::new();
    let class: Option<(ClassConstraints, Value)> = load(ConfigKind::Class, &read(&a.class)?).map_err(|e| errors.extend(e)).ok();
    let arch: Option<(Architecture, Value)> = load(ConfigKind::Arch, &read(&a.arch)?).map_err(|e| errors.extend(e)).ok();
    let cfg_text = match &a.cfg {
        Some(p) => read(p)?,
        None => "{}".into(),
    };
    let tcfg: Option<(TrainConfig, Value)> = load(ConfigKind::Train, &cfg_text).map_err(|e| errors.extend(e)).ok();
    let (Some((class, class_v)), Some((arch, arch_v)), Some((tcfg, tcfg_v))) = (class, arch, tcfg) else {
        return Err(errors.into());
    };

    let t = read_table(&a.data)?;
    let yc = column(&t, &["y"]).ok_or_else(|| Failure::input(format!("`{}` has no `y` column", a.data)))?;
    let xcols: Vec<usize> = (0..t.header.len()).filter(|&j| j != yc && t.header[j] != "index").collect();
    let data = Dataset {
        x: t.rows.iter().map(|r| xcols.iter().map(|&j| r[j]).collect()).collect(),
        y: t.rows.iter().map(|r| r[yc]).collect(),
    };
    let mut kind = LossKind::parse(&a.loss)?;
    if let (LossKind::Huber { .. }, Some(delta)) = (kind, a.huber_delta) {
        kind = LossKind::Huber { delta };
    }
    let y_bound = data.y.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let loss = Loss::new(kind, class.sup_norm, y_bound)?;
    let m = train_erm(&class, &data, &loss, &arch, &tcfg, exec)?;
    write(&a.out, &m.net.to_json())?;
    let report = TrainReport {
        estimator: "approximate-ERM (multi-restart projected gradient descent)",
        loss,
        samples: data.len(),
        empirical_risk: m.empirical_risk,
        restart_index: m.restart_index,
        constraint_report: &m.constraint_report,
        restarts: &m.restarts,
    };
    write(&a.report, &pretty(&report))?;
    println!("empirical risk {:.6e} (restart {}), constraints ok: {}", m.empirical_risk, m.restart_index, m.constraint_report.ok);
    let config = json!({
        "class": class_v, "arch": arch_v, "train": tcfg_v, "loss": loss.kind,
        "data_digest": holonet::seed::sha256_hex(read(&a.data)?.as_bytes()),
    });
    finish("train", config, Some(tcfg.seed), started, &[&a.out, &a.report])
}

#[derive(Args, Debug)]
pub struct RateArgs {
    #[arg(long)]
    cfg: String,
    #[arg(long)]
    out: String,
    #[arg(long)]
    csv: Option<String>,
    #[arg(long)]
    plot: Option<String>,
}

pub fn rate(a: RateArgs, exec: Exec) -> Result<(), Failure> {
    let started = now();
    let (cfg, v): (RateExperimentConfig, Value) = load(ConfigKind::Rate, &read(&a.cfg)?)?;
    let report = rate_experiment(&cfg, exec)?;
    write(&a.out, &(report.to_json() + "\n"))?;
    let mut outputs = vec![a.out.as_str()];
    if let Some(p) = &a.csv {
        let mut buf = Vec::new();
        write_csv(&report, &mut buf)?;
        write(p, &String::from_utf8(buf).expect("csv is utf-8"))?;
        outputs.push(p);
    }
    if let Some(p) = &a.plot {
        write(p, &render_svg(&report))?;
        outputs.push(p);
    }
    println!(
        "fitted slope {} (target {:.3}), {} of {} cells",
        report.fitted_slope.map_or("n/a".into(), |s| format!("{s:.3}")),
        report.target_slope,
        report.total_cells - report.missing_cells,
        report.total_cells
    );
    finish("rate", v, Some(cfg.seed), started, &outputs)
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// One of simulate, task, class, arch, train, rate.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    cfg: String,
}

pub fn validate(a: ValidateArgs) -> Result<(), Failure> {
    let kind = ConfigKind::parse(&a.kind).ok_or_else(|| Failure::input(format!("unknown config kind `{}`", a.kind)))?;
    let v = validate_config(kind, &read(&a.cfg)?)?;
    print!("{}", pretty(&v));
    Ok(())
}
