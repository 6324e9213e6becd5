//! End-to-end tests of the `relfacts` binary.

use std::process::{Command, Output};

fn relfacts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relfacts"))
        .args(args)
        .env_remove("RELFACTS_DIM_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).expect("json stdout")
}

#[test]
fn list_names_the_five_builtins() {
    let out = relfacts(&["list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["spin", "wigners-friend", "pipeline", "ewfs-chsh", "fr-structure"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn list_json_is_machine_readable() {
    let out = relfacts(&["list", "--json"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v.as_array().unwrap().len(), 5);
    assert_eq!(v[0]["name"], "spin");
    assert!(v[0]["parameters"][0]["default"].is_number());
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = relfacts(&["list", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_spin_reports_one_half_at_right_angle() {
    let out = relfacts(&["run", "spin", "--param", "theta=1.5707963267948966"]);
    assert!(out.status.success());
    let v = json(&out);
    let p = v["reports"][0]["probability"].as_f64().unwrap();
    assert!((p - 0.5).abs() < 1e-12);
}

#[test]
fn run_wigners_friend_reports_the_deviation() {
    let out = relfacts(&["run", "wigners-friend"]);
    assert!(out.status.success());
    let v = json(&out);
    let audit = &v["reports"][0];
    assert_eq!(audit["kind"], "audit");
    assert!((audit["deviation"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn run_ewfs_reports_both_semantics() {
    let out = relfacts(&["run", "ewfs-chsh"]);
    assert!(out.status.success());
    let v = json(&out);
    let chsh = &v["reports"][0];
    assert!((chsh["quantum_chsh"].as_f64().unwrap() - 8f64.sqrt()).abs() < 1e-9);
    assert!(chsh["absoluteness_chsh"].as_f64().unwrap() <= 2.0 + 1e-9);
}

#[test]
fn unknown_scenario_and_parameter_are_validation_errors() {
    let out = relfacts(&["run", "warp-drive"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    let v: serde_json::Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(v["error"]["code"], 3);

    let out = relfacts(&["run", "spin", "--param", "omega=2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn capacity_error_exits_four_and_env_cap_lifts_it() {
    let out = relfacts(&["run", "pipeline", "--param", "n_env=14"]);
    assert_eq!(out.status.code(), Some(4));

    let out = Command::new(env!("CARGO_BIN_EXE_relfacts"))
        .args(["run", "pipeline", "--param", "n_env=12", "--format", "csv"])
        .env("RELFACTS_DIM_CAP", "65536")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_pipeline_matches_the_closed_form() {
    let out = relfacts(&[
        "sweep",
        "pipeline",
        "--axis",
        "n_env=0..10",
        "--param",
        "phi=0.7853981633974483",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n_env,epsilon,bound,deviation");
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[0], n.to_string());
        let eps: f64 = cols[1].parse().unwrap();
        assert!((eps - 0.5f64.powi(n as i32)).abs() < 1e-12, "n={n}");
    }
}

#[test]
fn sweep_spin_traces_the_conditional_law() {
    let out = relfacts(&[
        "sweep",
        "spin",
        "--axis",
        "theta=0..3.1415926535897931,17",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 17);
    for row in rows {
        let theta = row["theta"].as_f64().unwrap();
        let p = row["probability"].as_f64().unwrap();
        assert!((p - (theta / 2.0).cos().powi(2)).abs() < 1e-10);
    }
    // monotone over [0, π]
    for pair in rows.windows(2) {
        assert!(pair[1]["probability"].as_f64() <= pair[0]["probability"].as_f64());
    }
}

#[test]
fn empty_axis_is_a_usage_error() {
    let out = relfacts(&["sweep", "pipeline", "--axis", "n_env=5..2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lenient_sweep_skips_capacity_rows() {
    let out = relfacts(&[
        "sweep",
        "pipeline",
        "--axis",
        "n_env=10..13",
        "--strict=false",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    // 11 fits the default cap exactly (2·2·2^11·2 = 16384); 12 and 13 do not
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("10,"));
    assert!(rows[1].starts_with("11,"));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("n_env = 12"));

    let strict = relfacts(&["sweep", "pipeline", "--axis", "n_env=10..13"]);
    assert_eq!(strict.status.code(), Some(4));
}

#[test]
fn run_output_is_byte_identical_across_invocations() {
    for args in [
        vec!["run", "ewfs-chsh"],
        vec!["run", "pipeline", "--format", "csv"],
        vec!["sweep", "spin", "--axis", "theta=0..3.0,7"],
    ] {
        let a = relfacts(&args);
        let b = relfacts(&args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "args {args:?}");
    }
}

#[test]
fn emit_config_round_trips_every_builtin() {
    let dir = std::env::temp_dir();
    for name in ["spin", "wigners-friend", "pipeline", "ewfs-chsh", "fr-structure"] {
        let path = dir.join(format!("relfacts_rt_{name}.toml"));
        let path_str = path.to_str().unwrap();
        let emitted = relfacts(&["run", name, "--emit-config", path_str]);
        assert!(emitted.status.success(), "{name}");

        let direct = json(&relfacts(&["run", name]));
        let from_file = json(&relfacts(&["run", "--config", path_str]));
        assert_eq!(
            direct["reports"], from_file["reports"],
            "reports differ for {name}"
        );
        std::fs::remove_file(path).ok();
    }
}

#[test]
fn config_with_explicit_matrix_honors_tolerance() {
    // a hand-rounded Hadamard: fails at 1e-10, passes with --tolerance 1e-4
    let config = r#"
initial = "zeros"

[[system]]
label = "S"
dim = 2

[[interaction]]
kind = "unitary"
label = "rough-hadamard"
targets = ["S"]
entries = [[0.70711, 0.0], [0.70711, 0.0], [0.70711, 0.0], [-0.70711, 0.0]]

[[report]]
kind = "eta"

[report.pointer]
targets = ["S"]
basis = "z"
"#;
    let path = std::env::temp_dir().join("relfacts_rough.toml");
    std::fs::write(&path, config).unwrap();
    let path_str = path.to_str().unwrap();

    let strict = relfacts(&["run", "--config", path_str]);
    assert_eq!(strict.status.code(), Some(3));

    let lenient = relfacts(&["run", "--config", path_str, "--tolerance", "1e-4"]);
    assert!(lenient.status.success());
    std::fs::remove_file(path).ok();
}

#[test]
fn output_file_flag_writes_the_report() {
    let path = std::env::temp_dir().join("relfacts_out.json");
    let path_str = path.to_str().unwrap();
    let out = relfacts(&["run", "spin", "--output", path_str]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(serde_json::from_str::<serde_json::Value>(&text).is_ok());
    std::fs::remove_file(path).ok();
}
