//! Browser bindings: three interactive views onto the simulator, each
//! returning a JSON string the page plots directly.
//!
//! The functions are plain Rust and run (and are tested) on native targets
//! too; `wasm-bindgen` only adds the JS export glue.

use wasm_bindgen::prelude::wasm_bindgen;

use relfacts_core::decoherence::{epsilon_sweep, EnvironmentModel, EnvironmentTemplate};
use relfacts_core::scenarios::{self, ReportPayload};
use relfacts_core::spec::BuildOptions;

/// Largest environment size the demo allows (keeps the state under the
/// default dimension cap and the page responsive).
const MAX_DEMO_ENV: u32 = 12;

fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        x
    } else {
        format!("{x:.11e}").parse().expect("formatted float")
    }
}

fn error_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

/// P(up along θ | up along z) over a θ grid in [0, 2π].
///
/// Returns `[{ "theta": .., "probability": .. }, ...]`.
#[wasm_bindgen]
pub fn spin_curve(points: u32) -> String {
    let points = points.clamp(2, 2048);
    let mut rows = Vec::with_capacity(points as usize);
    for k in 0..points {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / (points - 1) as f64;
        let named = scenarios::spin_measurement(theta);
        let reports = match scenarios::execute(&named, &BuildOptions::default()) {
            Ok(r) => r,
            Err(e) => return error_json(e),
        };
        let probability = reports
            .iter()
            .find_map(|r| match r.payload {
                ReportPayload::Conditional { probability } => Some(probability),
                _ => None,
            })
            .unwrap_or(f64::NAN);
        rows.push(serde_json::json!({
            "theta": round12(theta),
            "probability": round12(probability),
        }));
    }
    serde_json::Value::Array(rows).to_string()
}

/// ε, the interference bound, and the audited deviation for environment
/// sizes 0..=n_max at a fixed coupling angle.
///
/// Returns `[{ "n": .., "epsilon": .., "bound": .., "deviation": .. }, ...]`.
#[wasm_bindgen]
pub fn epsilon_curve(phi: f64, n_max: u32) -> String {
    if !phi.is_finite() {
        return error_json("phi must be finite");
    }
    let n_max = n_max.min(MAX_DEMO_ENV);
    let template = EnvironmentTemplate::default();
    let model = EnvironmentModel::fixed(0, phi);
    let ns: Vec<usize> = (0..=n_max as usize).collect();
    match epsilon_sweep(&template, &ns, &model) {
        Ok(rows) => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "n": r.n,
                        "epsilon": round12(r.epsilon),
                        "bound": round12(r.bound),
                        "deviation": round12(r.deviation),
                    })
                })
                .collect();
            serde_json::Value::Array(rows).to_string()
        }
        Err(e) => error_json(e),
    }
}

fn chsh_values(angles: [f64; 4]) -> Result<(f64, f64), relfacts_core::Error> {
    let named = scenarios::ewfs_chsh(angles);
    let reports = scenarios::execute(&named, &BuildOptions::default())?;
    let chsh = reports
        .iter()
        .find_map(|r| match &r.payload {
            ReportPayload::Chsh(c) => Some(c),
            _ => None,
        })
        .expect("ewfs scenario reports chsh");
    Ok((chsh.quantum_chsh, chsh.absoluteness_chsh))
}

/// Full CHSH report for one set of four angles: correlators and both CHSH
/// values (unitary semantics vs friends'-facts-are-absolute semantics).
#[wasm_bindgen]
pub fn chsh_report(a1: f64, a2: f64, b1: f64, b2: f64) -> String {
    let named = scenarios::ewfs_chsh([a1, a2, b1, b2]);
    let reports = match scenarios::execute(&named, &BuildOptions::default()) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    let chsh = reports.iter().find_map(|r| match &r.payload {
        ReportPayload::Chsh(c) => Some(c),
        _ => None,
    });
    match chsh {
        Some(c) => {
            let mut v = serde_json::to_value(c).expect("chsh serializes");
            round_numbers(&mut v);
            v.to_string()
        }
        None => error_json("missing chsh report"),
    }
}

/// Both CHSH values as every angle on side 2 is offset by δ ∈ [−π, π].
///
/// Returns `[{ "delta": .., "quantum": .., "absoluteness": .. }, ...]`.
#[wasm_bindgen]
pub fn chsh_offset_scan(a1: f64, a2: f64, b1: f64, b2: f64, points: u32) -> String {
    let points = points.clamp(2, 512);
    let mut rows = Vec::with_capacity(points as usize);
    for k in 0..points {
        let delta = -std::f64::consts::PI
            + 2.0 * std::f64::consts::PI * k as f64 / (points - 1) as f64;
        match chsh_values([a1, a2, b1 + delta, b2 + delta]) {
            Ok((quantum, absoluteness)) => rows.push(serde_json::json!({
                "delta": round12(delta),
                "quantum": round12(quantum),
                "absoluteness": round12(absoluteness),
            })),
            Err(e) => return error_json(e),
        }
    }
    serde_json::Value::Array(rows).to_string()
}

fn round_numbers(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round12(f)) {
                        *value = serde_json::Value::Number(rounded);
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_numbers),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spin_curve_matches_the_law() {
        let rows: serde_json::Value = serde_json::from_str(&spin_curve(33)).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 33);
        for row in rows {
            let theta = row["theta"].as_f64().unwrap();
            let p = row["probability"].as_f64().unwrap();
            assert!((p - (theta / 2.0).cos().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn epsilon_curve_decays_and_clamps() {
        let rows: serde_json::Value =
            serde_json::from_str(&epsilon_curve(std::f64::consts::FRAC_PI_4, 99)).unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), MAX_DEMO_ENV as usize + 1);
        for (n, row) in rows.iter().enumerate() {
            let eps = row["epsilon"].as_f64().unwrap();
            assert!((eps - 0.5f64.powi(n as i32)).abs() < 1e-10, "n = {n}");
            let dev = row["deviation"].as_f64().unwrap();
            let bound = row["bound"].as_f64().unwrap();
            assert!(dev <= bound + 1e-10);
        }
    }

    #[test]
    fn chsh_report_is_json_with_both_values() {
        let v: serde_json::Value = serde_json::from_str(&chsh_report(
            0.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_4,
            3.0 * std::f64::consts::FRAC_PI_4,
        ))
        .unwrap();
        assert!((v["quantum_chsh"].as_f64().unwrap() - 8f64.sqrt()).abs() < 1e-9);
        assert!(v["absoluteness_chsh"].as_f64().unwrap() <= 2.0 + 1e-9);
    }

    #[test]
    fn offset_scan_respects_both_bounds() {
        let rows: serde_json::Value = serde_json::from_str(&chsh_offset_scan(
            0.0,
            std::f64::consts::FRAC_PI_2,
            std::f64::consts::FRAC_PI_4,
            3.0 * std::f64::consts::FRAC_PI_4,
            65,
        ))
        .unwrap();
        let rows = rows.as_array().unwrap();
        assert_eq!(rows.len(), 65);
        let mut peak = 0.0f64;
        for row in rows {
            let q = row["quantum"].as_f64().unwrap();
            let a = row["absoluteness"].as_f64().unwrap();
            assert!(q <= 8f64.sqrt() + 1e-9);
            assert!(a <= 2.0 + 1e-9);
            peak = peak.max(q);
        }
        // δ = 0 sits on the grid (odd point count), so the peak is Tsirelson
        assert!((peak - 8f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn bad_inputs_surface_as_error_json() {
        let v: serde_json::Value = serde_json::from_str(&epsilon_curve(f64::NAN, 4)).unwrap();
        assert!(v["error"].is_string());
    }
}
