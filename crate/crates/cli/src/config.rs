// SPDX-License-Identifier: Apache-2.0

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use holonet::dnn::ClassConstraints;
use holonet::erm::{Architecture, TrainConfig};
use holonet::harness::RateExperimentConfig;
use holonet::weakdep::{ProcessSpec, TaskConfig};

/// The config file shapes the subcommands read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigKind {
    Simulate,
    Task,
    Class,
    Arch,
    Train,
    Rate,
}

impl ConfigKind {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "simulate" | "process" => ConfigKind::Simulate,
            "task" => ConfigKind::Task,
            "class" => ConfigKind::Class,
            "arch" => ConfigKind::Arch,
            "train" => ConfigKind::Train,
            "rate" => ConfigKind::Rate,
            _ => return None,
        })
    }
}

fn missing(obj: &Map<String, Value>, prefix: &str, keys: &[&str], out: &mut Vec<String>) {
    for k in keys {
        if !obj.contains_key(*k) {
            out.push(format!("missing field `{prefix}{k}`"));
        }
    }
}

fn process_missing(obj: &Map<String, Value>, prefix: &str, out: &mut Vec<String>) {
    let extra: &[&str] = match obj.get("variant").and_then(Value::as_str).map(str::to_ascii_uppercase).as_deref() {
        Some("AR1") => &["a", "noise_sd"],
        Some("ARCH1") => &["omega", "alpha1"],
        Some("TAR1") => &["a_plus", "a_minus", "noise_sd"],
        Some(other) => {
            out.push(format!("unknown `{prefix}variant` `{other}`; expected AR1, ARCH1 or TAR1"));
            &[]
        }
        None => &[],
    };
    missing(obj, prefix, &["variant"], out);
    missing(obj, prefix, extra, out);
}

fn nested<'a>(obj: &'a Map<String, Value>, key: &str, out: &mut Vec<String>) -> Option<&'a Map<String, Value>> {
    match obj.get(key) {
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            out.push(format!("field `{key}` must be an object"));
            None
        }
        None => None,
    }
}

fn task_missing(obj: &Map<String, Value>, prefix: &str, out: &mut Vec<String>) {
    missing(obj, prefix, &["process", "target", "s", "noise_sd", "clip_x"], out);
    if let Some(p) = nested(obj, "process", out) {
        process_missing(p, &format!("{prefix}process."), out);
    }
    if let Some(c) = nested(obj, "clip_x", out) {
        missing(c, &format!("{prefix}clip_x."), &["lo", "hi"], out);
    }
}

fn typed<T: DeserializeOwned + Serialize>(v: Value, problems: impl Fn(&T) -> Vec<String>) -> Result<Value, Vec<String>> {
    let parsed: T = serde_json::from_value(v).map_err(|e| vec![e.to_string()])?;
    let p = problems(&parsed);
    if !p.is_empty() {
        return Err(p);
    }
    Ok(serde_json::to_value(&parsed).expect("configs serialize"))
}

/// Schema-check `text` as a `kind` config: every missing field and every
/// cross-field violation is reported together; on success the normalized
/// config (defaults filled) is returned.
pub fn validate_config(kind: ConfigKind, text: &str) -> Result<Value, Vec<String>> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| vec![format!("malformed JSON: {e}")])?;
    let Value::Object(obj) = &mut v else {
        return Err(vec!["config must be a JSON object".into()]);
    };
    if kind == ConfigKind::Rate {
        if let Some(Value::String(s)) = obj.get("loss").cloned() {
            obj.insert("loss".into(), serde_json::json!({ "kind": s.to_ascii_lowercase() }));
        }
    }
    let mut out = Vec::new();
    match kind {
        ConfigKind::Simulate => process_missing(obj, "", &mut out),
        ConfigKind::Task => task_missing(obj, "", &mut out),
        ConfigKind::Class => missing(obj, "", &["L", "N", "S", "B", "F"], &mut out),
        ConfigKind::Arch => missing(obj, "", &["widths", "activation"], &mut out),
        ConfigKind::Train => {}
        ConfigKind::Rate => {
            missing(
                obj,
                "",
                &["task", "loss", "alpha", "n_grid", "replications", "eta", "nu", "F_n", "base_constants"],
                &mut out,
            );
            if let Some(t) = nested(obj, "task", &mut out) {
                task_missing(t, "task.", &mut out);
            }
            if let Some(b) = nested(obj, "base_constants", &mut out) {
                missing(b, "base_constants.", &["L0", "N0", "S0"], &mut out);
            }
        }
    }
    if !out.is_empty() {
        return Err(out);
    }
    match kind {
        ConfigKind::Simulate => typed::<ProcessSpec>(v, ProcessSpec::problems),
        ConfigKind::Task => typed::<TaskConfig>(v, |t| {
            let mut p = t.process.problems();
            if p.is_empty() {
                if let Err(e) = t.build() {
                    p.push(e.to_string());
                }
            }
            p
        }),
        ConfigKind::Class => typed::<ClassConstraints>(v, |c| c.validate().err().map(|e| e.to_string()).into_iter().collect()),
        ConfigKind::Arch => typed::<Architecture>(v, |a| {
            let mut p = Vec::new();
            if a.widths.len() < 2 || a.widths.contains(&0) {
                p.push("arch.widths needs at least two positive entries".into());
            }
            if let Err(e) = a.activation() {
                p.push(e.to_string());
            }
            p
        }),
        ConfigKind::Train => typed::<TrainConfig>(v, |c| c.validate().err().map(|e| e.to_string()).into_iter().collect()),
        ConfigKind::Rate => typed::<RateExperimentConfig>(v, RateExperimentConfig::problems),
    }
}

/// Parse an already validated config.
pub fn load<T: DeserializeOwned>(kind: ConfigKind, text: &str) -> Result<(T, Value), Vec<String>> {
    let v = validate_config(kind, text)?;
    let t = serde_json::from_value(v.clone()).map_err(|e| vec![e.to_string()])?;
    Ok((t, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_simulate_lists_missing_fields() {
        let e = validate_config(ConfigKind::Simulate, "{}").unwrap_err();
        assert_eq!(e, vec!["missing field `variant`".to_string()]);
        let e = validate_config(ConfigKind::Rate, "{}").unwrap_err();
        assert_eq!(e.len(), 9);
        let e = validate_config(ConfigKind::Simulate, r#"{"variant":"TAR1"}"#).unwrap_err();
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn stationarity_and_parse_errors() {
        let e = validate_config(ConfigKind::Simulate, r#"{"variant":"AR1","a":1.0,"noise_sd":1}"#).unwrap_err();
        assert!(e[0].contains("stationarity"), "{e:?}");
        let e = validate_config(ConfigKind::Simulate, "{\n  \"variant\": ").unwrap_err();
        assert_eq!(e.len(), 1);
        assert!(e[0].contains("line 2"), "{e:?}");
    }

    #[test]
    fn defaults_are_echoed() {
        let v = validate_config(ConfigKind::Simulate, r#"{"variant":"ar1","a":0.5,"noise_sd":1}"#).unwrap();
        assert_eq!(v["burn_in"], 1000);
        assert_eq!(v["variant"], "AR1");
        let t = validate_config(ConfigKind::Train, "{}").unwrap();
        assert_eq!(t["restarts"], 8);
    }

    #[test]
    fn rate_alpha_condition() {
        let mut cfg = serde_json::to_value(RateExperimentConfig::canonical()).unwrap();
        cfg["alpha"] = 2.2.into();
        cfg["loss"] = "absolute".into();
        let e = validate_config(ConfigKind::Rate, &cfg.to_string()).unwrap_err();
        assert!(e.iter().any(|m| m.contains("alpha > 2 + d_x/s")), "{e:?}");
    }
}
