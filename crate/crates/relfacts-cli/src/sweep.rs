//! Parameter sweeps over the built-in scenarios.

use std::collections::BTreeMap;

use relfacts_core::scenarios::{self, Report, ReportPayload};
use relfacts_core::spec::BuildOptions;
use relfacts_core::Error;

use crate::output::fmt_num;
use crate::CliError;

/// One sweep axis: a named parameter and its values, in order.
#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
    /// True when the axis came from an integer range (formats as integers).
    pub integer: bool,
}

/// Parse `name=start..stop` (inclusive integers) or `name=start..stop,count`
/// (inclusive linspace).
pub fn parse_axis(text: &str) -> Result<Axis, CliError> {
    let usage = |msg: &str| CliError::usage(format!("bad --axis `{text}`: {msg}"));
    let (name, range) = text.split_once('=').ok_or_else(|| usage("expected name=range"))?;
    let (span, count) = match range.split_once(',') {
        Some((span, count)) => {
            let count: usize = count
                .trim()
                .parse()
                .map_err(|_| usage("count must be an integer"))?;
            (span, Some(count))
        }
        None => (range, None),
    };
    let (start, stop) = span
        .split_once("..")
        .ok_or_else(|| usage("expected start..stop"))?;
    let start: f64 = start.trim().parse().map_err(|_| usage("bad start"))?;
    let stop: f64 = stop.trim().parse().map_err(|_| usage("bad stop"))?;
    let values: Vec<f64> = match count {
        Some(0) | Some(1) => return Err(usage("count must be at least 2")),
        Some(n) => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
        None => {
            if start.fract() != 0.0 || stop.fract() != 0.0 {
                return Err(usage("integer range needs integer endpoints (or add a count)"));
            }
            if stop < start {
                return Err(usage("empty range"));
            }
            ((start as i64)..=(stop as i64)).map(|k| k as f64).collect()
        }
    };
    if values.is_empty() {
        return Err(usage("empty axis"));
    }
    Ok(Axis {
        name: name.trim().to_string(),
        values,
        integer: count.is_none(),
    })
}

/// The metric columns a scenario contributes to sweep rows.
pub fn sweep_columns(scenario: &str) -> Result<Vec<&'static str>, CliError> {
    Ok(match scenario {
        "spin" => vec!["probability"],
        "wigners-friend" | "fr-structure" => vec!["lhs", "rhs", "deviation"],
        "pipeline" => vec!["epsilon", "bound", "deviation"],
        "ewfs-chsh" => vec!["quantum_chsh", "absoluteness_chsh"],
        other => {
            return Err(CliError::usage(format!(
                "sweep does not know scenario `{other}`"
            )))
        }
    })
}

fn find_audit(reports: &[Report]) -> Option<&relfacts_core::facts::StabilityReport> {
    reports.iter().find_map(|r| match &r.payload {
        ReportPayload::Audit(a) => Some(a),
        _ => None,
    })
}

/// Pull the scenario's metric values out of its executed reports.
pub fn extract_metrics(scenario: &str, reports: &[Report]) -> Result<Vec<f64>, CliError> {
    let missing = || CliError::numeric(format!("scenario `{scenario}` reports are incomplete"));
    Ok(match scenario {
        "spin" => {
            let p = reports
                .iter()
                .find_map(|r| match r.payload {
                    ReportPayload::Conditional { probability } => Some(probability),
                    _ => None,
                })
                .ok_or_else(missing)?;
            vec![p]
        }
        "wigners-friend" | "fr-structure" => {
            let a = find_audit(reports).ok_or_else(missing)?;
            vec![a.lhs, a.rhs, a.deviation]
        }
        "pipeline" => {
            let a = find_audit(reports).ok_or_else(missing)?;
            let eps = reports
                .iter()
                .find_map(|r| match &r.payload {
                    ReportPayload::Epsilon(e) => Some(e.epsilon),
                    _ => None,
                })
                .ok_or_else(missing)?;
            vec![eps, a.bound.unwrap_or(f64::NAN), a.deviation]
        }
        "ewfs-chsh" => {
            let c = reports
                .iter()
                .find_map(|r| match &r.payload {
                    ReportPayload::Chsh(c) => Some(c),
                    _ => None,
                })
                .ok_or_else(missing)?;
            vec![c.quantum_chsh, c.absoluteness_chsh]
        }
        other => {
            return Err(CliError::usage(format!(
                "sweep does not know scenario `{other}`"
            )))
        }
    })
}

/// A computed sweep row: the axis value plus the scenario metrics.
pub struct SweepOutcome {
    pub axis_value: f64,
    pub metrics: Vec<f64>,
}

/// Run the sweep, invoking `emit` after each row (streaming). Capacity
/// errors abort under `strict`, otherwise the row is skipped with a note on
/// stderr.
pub fn run_sweep(
    scenario: &str,
    axis: &Axis,
    base_params: &BTreeMap<String, f64>,
    options: &BuildOptions,
    strict: bool,
    mut emit: impl FnMut(&SweepOutcome),
) -> Result<(), CliError> {
    sweep_columns(scenario)?;
    for &value in &axis.values {
        let mut params = base_params.clone();
        params.insert(axis.name.clone(), value);
        let named = scenarios::by_name(scenario, &params).map_err(CliError::from)?;
        match scenarios::execute(&named, options) {
            Ok(reports) => {
                let metrics = extract_metrics(scenario, &reports)?;
                emit(&SweepOutcome {
                    axis_value: value,
                    metrics,
                });
            }
            Err(Error::Capacity { requested, cap, .. }) => {
                let msg = format!(
                    "capacity exceeded at {} = {}: dimension {requested} > cap {cap}",
                    axis.name,
                    fmt_num(value)
                );
                if strict {
                    return Err(CliError::capacity(msg));
                }
                eprintln!("relfacts: skipping ({msg})");
            }
            Err(e) => return Err(CliError::from(e)),
        }
    }
    Ok(())
}
