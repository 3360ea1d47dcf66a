//! Keeps the shipped report.schema.json in lockstep with what run_experiment
//! actually writes: runs a vector and a matrix experiment, then walks the
//! emitted report.json with a small interpreter of the JSON Schema subset the
//! file uses ($ref, type, enum, required, properties, additionalProperties,
//! items, minItems, minimum, exclusiveMinimum, oneOf).

use extrack_core::environment::{EnvironmentKind, EnvironmentSpec};
use extrack_core::harness::{run_experiment, ExperimentConfig, LearnerParams, LearnerSpec};
use serde_json::Value;

fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../report.schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn resolve<'a>(root: &'a Value, schema: &'a Value) -> &'a Value {
    match schema.get("$ref").and_then(Value::as_str) {
        Some(r) => {
            let mut node = root;
            for seg in r.trim_start_matches("#/").split('/') {
                node = &node[seg];
            }
            node
        }
        None => schema,
    }
}

fn check(root: &Value, schema: &Value, value: &Value, at: &str, errors: &mut Vec<String>) {
    let schema = resolve(root, schema);

    if let Some(options) = schema.get("oneOf").and_then(Value::as_array) {
        let hits = options
            .iter()
            .filter(|opt| {
                let mut errs = Vec::new();
                check(root, opt, value, at, &mut errs);
                errs.is_empty()
            })
            .count();
        if hits != 1 {
            errors.push(format!(
                "{at}: matched {hits} of {} oneOf branches",
                options.len()
            ));
        }
        return;
    }

    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(value) {
            errors.push(format!("{at}: {value} not in enum"));
        }
        return;
    }

    if let Some(ty) = schema.get("type").and_then(Value::as_str) {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "boolean" => value.is_boolean(),
            "null" => value.is_null(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            other => {
                errors.push(format!("{at}: schema uses unsupported type '{other}'"));
                return;
            }
        };
        if !ok {
            errors.push(format!("{at}: expected {ty}, got {value}"));
            return;
        }
    }

    if let Some(min) = schema.get("minimum").and_then(Value::as_f64) {
        if value.as_f64().map_or(true, |v| v < min) {
            errors.push(format!("{at}: {value} below minimum {min}"));
        }
    }
    if let Some(min) = schema.get("exclusiveMinimum").and_then(Value::as_f64) {
        if value.as_f64().map_or(true, |v| v <= min) {
            errors.push(format!("{at}: {value} not strictly above {min}"));
        }
    }

    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
                if (arr.len() as u64) < min {
                    errors.push(format!("{at}: {} items, need at least {min}", arr.len()));
                }
            }
            for (i, item) in arr.iter().enumerate() {
                check(root, items, item, &format!("{at}/{i}"), errors);
            }
        }
    }

    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        if let Some(obj) = value.as_object() {
            if let Some(req) = schema.get("required").and_then(Value::as_array) {
                for r in req {
                    let key = r.as_str().unwrap();
                    if !obj.contains_key(key) {
                        errors.push(format!("{at}: missing required key '{key}'"));
                    }
                }
            }
            let reject_extra = schema.get("additionalProperties") == Some(&Value::Bool(false));
            for (key, val) in obj {
                match props.get(key) {
                    Some(sub) => check(root, sub, val, &format!("{at}/{key}"), errors),
                    None if reject_extra => {
                        errors.push(format!("{at}: unexpected key '{key}'"))
                    }
                    None => {}
                }
            }
        }
    }
}

fn validate(report: &Value) -> Vec<String> {
    let root = schema();
    let mut errors = Vec::new();
    check(&root, &root, report, "report", &mut errors);
    errors
}

fn spec(algorithm: &str, eta: Option<f64>, alpha: Option<f64>) -> LearnerSpec {
    LearnerSpec {
        algorithm: algorithm.into(),
        name: None,
        params: LearnerParams { eta, alpha },
    }
}

fn vector_report(dir: &std::path::Path) -> Value {
    let cfg = ExperimentConfig {
        environment: EnvironmentSpec {
            kind: EnvironmentKind::PiecewiseStationary,
            t: 60,
            k: 4,
            seed: 5,
            s_true: 2,
            noise: 0.1,
            drift_step: 0.02,
            leader_loss_mean: 0.05,
        },
        learners: vec![
            spec("clipped_omd", None, None),
            spec("pcs", None, None),
            spec("ocs", None, None),
            spec("ocs_plus", None, None),
            spec("mwu", Some(0.2), None),
            spec("fixed_share", Some(0.2), None),
            spec("projection_update", Some(0.2), None),
            // off the matched floor: exercises skipped_verification
            spec("projection_update", Some(0.2), Some(0.05)),
        ],
        s_for_regret: 2,
        output_dir: dir.to_path_buf(),
        verification: true,
        repetitions: 2,
    };
    let outcome = run_experiment(&cfg).unwrap();
    serde_json::from_str(&std::fs::read_to_string(&outcome.report_path).unwrap()).unwrap()
}

#[test]
fn vector_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let report = vector_report(dir.path());
    let errors = validate(&report);
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

#[test]
fn matrix_report_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        environment: EnvironmentSpec {
            kind: EnvironmentKind::MatrixPiecewise,
            t: 40,
            k: 3,
            seed: 9,
            s_true: 2,
            noise: 0.2,
            drift_step: 0.02,
            leader_loss_mean: 0.05,
        },
        learners: vec![spec("pcsp", None, None)],
        s_for_regret: 2,
        output_dir: dir.path().to_path_buf(),
        verification: true,
        repetitions: 1,
    };
    let outcome = run_experiment(&cfg).unwrap();
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(&outcome.report_path).unwrap()).unwrap();
    let errors = validate(&report);
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

/// The validator has to bite: tampered reports must fail.
#[test]
fn tampered_reports_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = vector_report(dir.path());

    let mut missing = good.clone();
    missing.as_object_mut().unwrap().remove("all_pass");
    assert!(!validate(&missing).is_empty(), "missing key accepted");

    let mut bad_kind = good.clone();
    bad_kind["environment"]["kind"] = Value::String("weather".into());
    assert!(!validate(&bad_kind).is_empty(), "bad enum accepted");

    let mut extra = good.clone();
    extra
        .as_object_mut()
        .unwrap()
        .insert("debug_notes".into(), Value::Bool(true));
    assert!(!validate(&extra).is_empty(), "extra key accepted");

    let mut wrong_type = good;
    wrong_type["repetitions"][0]["seed"] = Value::String("five".into());
    assert!(!validate(&wrong_type).is_empty(), "wrong type accepted");
}
