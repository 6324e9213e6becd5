//! `relfacts`: run relative-facts scenarios, audits, and sweeps.

mod output;
mod sweep;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relfacts_core::scenarios::{self, NamedScenario};
use relfacts_core::spec::{BuildOptions, ScenarioSpec};
use relfacts_core::Error;

use output::{fmt_num, round_numbers, run_csv, run_json};
use sweep::{parse_axis, run_sweep, sweep_columns};

/// Exit codes: 0 success, 2 usage, 3 validation, 4 capacity, 5 numeric.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(2, message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(3, message)
    }

    pub fn capacity(message: impl Into<String>) -> Self {
        Self::new(4, message)
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self::new(5, message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Capacity { .. } => 4,
            Error::Numeric(_) | Error::NoConvergence(_) => 5,
            _ => 3,
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "relfacts",
    version,
    about = "Relative-facts quantum scenario simulator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in scenarios, parameters, and defaults
    List {
        /// Emit the catalog as JSON
        #[arg(long)]
        json: bool,
    },
    /// Run a scenario's report plan
    Run(RunArgs),
    /// Sweep one numeric parameter and stream rows
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario name (see `relfacts list`)
    scenario: Option<String>,
    /// Run from a scenario config file instead
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Parameter override, repeatable: --param theta=1.5707963268
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write to a file instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized models (reserved; built-ins are deterministic)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Unitarity tolerance for matrices supplied in config files
    #[arg(long)]
    tolerance: Option<f64>,
    /// Write the scenario as a config file (to PATH, or stdout) and exit
    #[arg(long, value_name = "PATH")]
    emit_config: Option<Option<PathBuf>>,
}

#[derive(Args)]
struct SweepArgs {
    /// Built-in scenario name
    scenario: String,
    /// Axis: name=start..stop (integers) or name=start..stop,count
    #[arg(long)]
    axis: String,
    /// Fixed parameter, repeatable
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Abort on capacity errors (pass --strict=false to skip and continue)
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    strict: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": {"code": e.code, "message": e.message}})
            );
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List { json } => cmd_list(json),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_list(json: bool) -> Result<(), CliError> {
    let catalog = scenarios::catalog();
    if json {
        let mut v = serde_json::to_value(&catalog).expect("catalog serializes");
        round_numbers(&mut v);
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        return Ok(());
    }
    for schema in catalog {
        println!("{:<16} {}", schema.name, schema.description);
        for p in schema.parameters {
            println!(
                "    --param {}={:<22} {}",
                p.name,
                fmt_num(p.default),
                p.description
            );
        }
    }
    Ok(())
}

fn parse_params(items: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("bad --param `{item}`: expected KEY=VALUE")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("bad --param `{item}`: value is not a number")))?;
        if map.insert(key.trim().to_string(), value).is_some() {
            return Err(CliError::usage(format!("duplicate --param `{key}`")));
        }
    }
    Ok(map)
}

fn build_options(tolerance: Option<f64>) -> Result<BuildOptions, CliError> {
    let mut options = BuildOptions::default();
    if let Some(tol) = tolerance {
        if !(tol > 0.0) {
            return Err(CliError::usage("--tolerance must be positive"));
        }
        options.unitary_tol = tol;
    }
    if let Ok(cap) = std::env::var("RELFACTS_DIM_CAP") {
        let cap: usize = cap.trim().parse().map_err(|_| {
            CliError::validation(format!("RELFACTS_DIM_CAP=`{cap}` is not a dimension"))
        })?;
        options.dim_cap = Some(cap);
    }
    Ok(options)
}

fn write_out(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| CliError::numeric(format!("stdout: {e}")))
        }
    }
}

/// Resolve the scenario for `run`: a built-in by name or a config file.
fn resolve_scenario(args: &RunArgs) -> Result<(String, NamedScenario), CliError> {
    let params = parse_params(&args.params)?;
    if let Some(path) = &args.config {
        if !args.params.is_empty() {
            return Err(CliError::usage(
                "--param applies to built-in scenarios, not config files",
            ));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
        let spec: ScenarioSpec = toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("bad config {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "config".to_string());
        Ok((
            name.clone(),
            NamedScenario {
                name,
                description: format!("config file {}", path.display()),
                parameters: BTreeMap::new(),
                spec,
            },
        ))
    } else {
        let name = args
            .scenario
            .as_deref()
            .ok_or_else(|| CliError::usage("expected a scenario name or --config"))?;
        let named = scenarios::by_name(name, &params)?;
        Ok((name.to_string(), named))
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let options = build_options(args.tolerance)?;
    let (name, named) = resolve_scenario(&args)?;

    if let Some(target) = &args.emit_config {
        let text = toml::to_string_pretty(&named.spec)
            .map_err(|e| CliError::numeric(format!("config serialization: {e}")))?;
        return write_out(&target.clone(), &text);
    }

    let reports = scenarios::execute(&named, &options)?;
    let content = match args.format {
        Format::Json => {
            let value = run_json(&name, &named.parameters, args.seed, &reports);
            format!(
                "{}\n",
                serde_json::to_string_pretty(&value).expect("report json")
            )
        }
        Format::Csv => run_csv(&reports),
    };
    write_out(&args.output, &content)
}

/// Axis values from integer ranges print as integers.
fn fmt_axis(x: f64, integer: bool) -> String {
    if integer && x.fract() == 0.0 && x.abs() < 9e15 {
        format!("{}", x as i64)
    } else {
        fmt_num(x)
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let options = build_options(None)?;
    let axis = parse_axis(&args.axis)?;
    let params = parse_params(&args.params)?;
    let columns = sweep_columns(&args.scenario)?;

    match args.format {
        Format::Csv => {
            // streaming: header, then one line per row as it is computed
            let mut sink: Box<dyn std::io::Write> = match &args.output {
                Some(p) => Box::new(std::fs::File::create(p).map_err(|e| {
                    CliError::validation(format!("cannot write {}: {e}", p.display()))
                })?),
                None => Box::new(std::io::stdout()),
            };
            let mut header = vec![axis.name.clone()];
            header.extend(columns.iter().map(|c| c.to_string()));
            writeln!(sink, "{}", header.join(","))
                .map_err(|e| CliError::numeric(format!("write: {e}")))?;
            let mut io_error = None;
            run_sweep(
                &args.scenario,
                &axis,
                &params,
                &options,
                args.strict,
                |row| {
                    let mut line = vec![fmt_axis(row.axis_value, axis.integer)];
                    line.extend(row.metrics.iter().map(|m| fmt_num(*m)));
                    if let Err(e) = writeln!(sink, "{}", line.join(",")).and_then(|_| sink.flush())
                    {
                        io_error.get_or_insert(e);
                    }
                },
            )?;
            if let Some(e) = io_error {
                return Err(CliError::numeric(format!("write: {e}")));
            }
        }
        Format::Json => {
            // buffered: an error must never leave a partial JSON object behind
            let mut rows = Vec::new();
            run_sweep(
                &args.scenario,
                &axis,
                &params,
                &options,
                args.strict,
                |row| {
                    let mut obj = serde_json::Map::new();
                    let axis_value: serde_json::Value =
                        if axis.integer && row.axis_value.fract() == 0.0 {
                            serde_json::Value::from(row.axis_value as i64)
                        } else {
                            row.axis_value.into()
                        };
                    obj.insert(axis.name.clone(), axis_value);
                    for (c, m) in columns.iter().zip(&row.metrics) {
                        obj.insert(c.to_string(), (*m).into());
                    }
                    rows.push(serde_json::Value::Object(obj));
                },
            )?;
            let mut value = serde_json::json!({
                "scenario": args.scenario,
                "axis": axis.name,
                "parameters": params,
                "seed": args.seed,
                "rows": rows,
            });
            round_numbers(&mut value);
            let mut text = serde_json::to_string_pretty(&value).expect("sweep json");
            text.push('\n');
            write_out(&args.output, &text)?;
        }
    }
    Ok(())
}
