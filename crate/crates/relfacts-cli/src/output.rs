//! Deterministic report formatting.
//!
//! Numbers are rounded to 12 significant digits and printed via the shortest
//! round-trip representation of the rounded value, so identical runs are
//! byte-identical across platforms.

use serde_json::{Map, Value};

use relfacts_core::scenarios::{Report, ReportPayload};

/// Round to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float")
}

/// The canonical textual form of a number (12 significant digits, shortest
/// decimal). Non-finite values become "null".
pub fn fmt_num(x: f64) -> String {
    match serde_json::Number::from_f64(sig12(x)) {
        Some(n) => n.to_string(),
        None => "null".to_string(),
    }
}

/// Recursively round every float in a JSON value.
pub fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(sig12(f)) {
                        *value = Value::Number(rounded);
                    } else {
                        *value = Value::Null;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// The `run` command's single JSON object.
pub fn run_json(
    scenario: &str,
    parameters: &std::collections::BTreeMap<String, f64>,
    seed: u64,
    reports: &[Report],
) -> Value {
    let mut obj = Map::new();
    obj.insert("scenario".into(), Value::String(scenario.to_string()));
    obj.insert(
        "parameters".into(),
        serde_json::to_value(parameters).expect("parameter map"),
    );
    obj.insert("seed".into(), Value::Number(seed.into()));
    obj.insert(
        "reports".into(),
        serde_json::to_value(reports).expect("reports serialize"),
    );
    let mut value = Value::Object(obj);
    round_numbers(&mut value);
    value
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// One CSV table per report, each preceded by a `# report` comment line.
pub fn run_csv(reports: &[Report]) -> String {
    let mut out = String::new();
    for report in reports {
        out.push_str(&format!("# report {}\n", report.name));
        let (header, rows) = payload_table(&report.payload);
        out.push_str(&header.join(","));
        out.push('\n');
        for row in rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

fn payload_table(payload: &ReportPayload) -> (Vec<&'static str>, Vec<Vec<String>>) {
    match payload {
        ReportPayload::Conditional { probability } => (
            vec!["probability"],
            vec![vec![fmt_num(*probability)]],
        ),
        ReportPayload::Audit(a) => (
            vec![
                "lhs",
                "rhs",
                "deviation",
                "epsilon",
                "bound",
                "same_context",
                "partition_step",
            ],
            vec![vec![
                fmt_num(a.lhs),
                fmt_num(a.rhs),
                fmt_num(a.deviation),
                opt(a.epsilon),
                opt(a.bound),
                a.same_context.to_string(),
                a.partition_step.to_string(),
            ]],
        ),
        ReportPayload::Witness { lhs, rhs } => (
            vec!["lhs", "rhs"],
            vec![vec![fmt_num(*lhs), fmt_num(*rhs)]],
        ),
        ReportPayload::Epsilon(e) => {
            let header = vec!["epsilon", "pair_first", "pair_second", "overlap_sq"];
            let rows = if e.overlaps.is_empty() {
                vec![vec![fmt_num(e.epsilon), String::new(), String::new(), String::new()]]
            } else {
                e.overlaps
                    .iter()
                    .map(|p| {
                        vec![
                            fmt_num(e.epsilon),
                            p.first.clone(),
                            p.second.clone(),
                            fmt_num(p.overlap_sq),
                        ]
                    })
                    .collect()
            };
            (header, rows)
        }
        ReportPayload::Eta(e) => (
            vec!["eta", "dominant_label", "trace_distance", "sqrt_two_eta"],
            vec![vec![
                fmt_num(e.eta),
                e.dominant_label.clone(),
                fmt_num(e.trace_distance),
                fmt_num(e.sqrt_two_eta),
            ]],
        ),
        ReportPayload::Chsh(c) => {
            let header = vec![
                "a",
                "b",
                "quantum_e",
                "absoluteness_e",
                "quantum_chsh",
                "absoluteness_chsh",
            ];
            let pairs = [
                (c.angles[0], c.angles[2]),
                (c.angles[0], c.angles[3]),
                (c.angles[1], c.angles[2]),
                (c.angles[1], c.angles[3]),
            ];
            let rows = pairs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    vec![
                        fmt_num(*a),
                        fmt_num(*b),
                        fmt_num(c.quantum_correlators[k]),
                        fmt_num(c.absoluteness_correlators[k]),
                        fmt_num(c.quantum_chsh),
                        fmt_num(c.absoluteness_chsh),
                    ]
                })
                .collect();
            (header, rows)
        }
        ReportPayload::Agreement(a) => {
            let header = vec!["friend_value", "read_value", "joint_probability", "probability"];
            let rows = a
                .branches
                .iter()
                .map(|b| {
                    vec![
                        b.friend_value.clone(),
                        b.read_value.clone(),
                        fmt_num(b.joint_probability),
                        fmt_num(a.probability),
                    ]
                })
                .collect();
            (header, rows)
        }
        ReportPayload::Relational(r) => (
            vec![
                "blind_deviation",
                "blind_bound",
                "epsilon",
                "probing_deviation",
                "baseline_deviation",
            ],
            vec![vec![
                fmt_num(r.blind_deviation),
                fmt_num(r.blind_bound),
                fmt_num(r.epsilon),
                fmt_num(r.probing_deviation),
                fmt_num(r.baseline_deviation),
            ]],
        ),
    }
}
