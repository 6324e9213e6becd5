//! The built-in named scenarios and report execution.
//!
//! Each builder returns a [`NamedScenario`]: a parameter map plus the
//! [`ScenarioSpec`] that realizes it. Every built-in can therefore be
//! exported as a config file and re-run from it through the same path.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::Serialize;

use crate::decoherence::{relational_check, EnvironmentModel, EnvironmentTemplate, RelationalReport};
use crate::error::{Error, Result};
use crate::facts::{
    chain_state, conditional_probability, evolve, evolve_to, quantum_logic_witness,
    total_probability_audit, RelativeFact, Scenario, StabilityReport,
};
use crate::spec::{
    BasisSpec, BuildOptions, BuiltScenario, ChshSide, FactRef, InitialSpec, InteractionSpec,
    ProbeSpec, ReportEntry, ScenarioSpec, SystemSpec, VariableSpec,
};
use crate::stability::{epsilon, eta_report, EpsilonReport, EtaReport};
use crate::system::{Role, SystemId};
use crate::tensor::{tensor_product, ComplexOperator};

/// A named, parameterized scenario and its report plan.
#[derive(Debug, Clone)]
pub struct NamedScenario {
    pub name: String,
    pub description: String,
    pub parameters: BTreeMap<String, f64>,
    pub spec: ScenarioSpec,
}

/// One executed report.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub name: String,
    #[serde(flatten)]
    pub payload: ReportPayload,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportPayload {
    Conditional { probability: f64 },
    Audit(StabilityReport),
    Witness { lhs: f64, rhs: f64 },
    Epsilon(EpsilonReport),
    Eta(EtaReport),
    Chsh(ChshReport),
    Agreement(AgreementReport),
    Relational(RelationalReport),
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshReport {
    pub angles: [f64; 4],
    /// E(a,b) for (a1,b1), (a1,b2), (a2,b1), (a2,b2), computed unitarily.
    pub quantum_correlators: [f64; 4],
    /// |E₁₁ − E₁₂ + E₂₁ + E₂₂| for the unitary correlators.
    pub quantum_chsh: f64,
    /// Same correlators computed by conditioning on the friends' facts.
    pub absoluteness_correlators: [f64; 4],
    pub absoluteness_chsh: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    /// P(the reader's value matches the friend's fact), summed over outcomes.
    pub probability: f64,
    pub branches: Vec<AgreementBranch>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementBranch {
    pub friend_value: String,
    pub read_value: String,
    pub joint_probability: f64,
}

/// Catalog entry describing a scenario's parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSchema {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParameterSchema>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterSchema {
    pub name: String,
    pub default: f64,
    pub description: String,
}

fn angle_variable(targets: &[&str], angle: f64) -> VariableSpec {
    VariableSpec {
        label: None,
        targets: targets.iter().map(|s| s.to_string()).collect(),
        basis: BasisSpec::Angle { angle },
    }
}

fn named_variable(targets: &[&str], basis: &str) -> VariableSpec {
    VariableSpec {
        label: None,
        targets: targets.iter().map(|s| s.to_string()).collect(),
        basis: BasisSpec::Named(basis.to_string()),
    }
}

fn system(label: &str, dim: usize, role: Role) -> SystemSpec {
    SystemSpec {
        label: label.to_string(),
        dim,
        role: Some(role),
    }
}

/// A single spin measured along z and then along an angle θ, each onto its
/// own pointer; reports the conditional probability of the second outcome.
pub fn spin_measurement(theta: f64) -> NamedScenario {
    let spec = ScenarioSpec {
        dim_cap: None,
        systems: vec![
            system("S", 2, Role::System),
            system("P1", 2, Role::Friend),
            system("P2", 2, Role::Friend),
        ],
        initial: InitialSpec::Preset("zeros".into()),
        interactions: vec![
            InteractionSpec::Premeasure {
                variable: angle_variable(&["S"], 0.0),
                pointer: "P1".into(),
            },
            InteractionSpec::Premeasure {
                variable: angle_variable(&["S"], theta),
                pointer: "P2".into(),
            },
        ],
        reports: vec![ReportEntry::Conditional {
            query: FactRef {
                step: 1,
                value: "up".into(),
            },
            given: vec![FactRef {
                step: 0,
                value: "up".into(),
            }],
        }],
    };
    NamedScenario {
        name: "spin".into(),
        description: "sequential spin measurements; P(up along θ | up along z)".into(),
        parameters: BTreeMap::from([("theta".to_string(), theta)]),
        spec,
    }
}

/// S prepared in cos α|0⟩ + sin α|1⟩, the friend premeasures z; the outside
/// observer's Bell question exhibits the total-probability failure.
pub fn wigners_friend(alpha: f64) -> NamedScenario {
    let spec = ScenarioSpec {
        dim_cap: None,
        systems: vec![system("S", 2, Role::System), system("F", 2, Role::Friend)],
        initial: InitialSpec::Amplitudes(vec![
            (alpha.cos(), 0.0),
            (0.0, 0.0),
            (alpha.sin(), 0.0),
            (0.0, 0.0),
        ]),
        interactions: vec![InteractionSpec::Premeasure {
            variable: angle_variable(&["S"], 0.0),
            pointer: "F".into(),
        }],
        reports: vec![
            ReportEntry::Audit {
                probe: ProbeSpec {
                    variable: named_variable(&["S", "F"], "bell"),
                    value: "phi+".into(),
                    context: "W".into(),
                    position: None,
                },
                partition_step: 0,
            },
            ReportEntry::Witness {
                probe: ProbeSpec {
                    variable: named_variable(&["S", "F"], "bell"),
                    value: "phi+".into(),
                    context: "W".into(),
                    position: None,
                },
                partition_step: 0,
            },
        ],
    };
    NamedScenario {
        name: "wigners-friend".into(),
        description: "the friend's measurement audited by an outside Bell probe".into(),
        parameters: BTreeMap::from([("alpha".to_string(), alpha)]),
        spec,
    }
}

/// The three-stage measurement: premeasure, environment couplings, pointer
/// readout by the observer's own pointer.
pub fn measurement_pipeline(n_env: usize, phi: f64) -> NamedScenario {
    let mut systems = vec![system("S", 2, Role::System), system("F", 2, Role::Friend)];
    for k in 0..n_env {
        systems.push(system(&format!("E{k}"), 2, Role::Environment));
    }
    systems.push(system("WP", 2, Role::Wigner));

    let mut interactions = vec![InteractionSpec::Premeasure {
        variable: angle_variable(&["S"], 0.0),
        pointer: "F".into(),
    }];
    for k in 0..n_env {
        interactions.push(InteractionSpec::Couple {
            pointer: named_variable(&["F"], "z"),
            environment: format!("E{k}"),
            angle: phi,
        });
    }
    interactions.push(InteractionSpec::Premeasure {
        variable: named_variable(&["F"], "z"),
        pointer: "WP".into(),
    });

    let pre_readout = 1 + n_env;
    let spec = ScenarioSpec {
        dim_cap: None,
        systems,
        initial: InitialSpec::Preset("plus".into()),
        interactions,
        reports: vec![
            ReportEntry::Epsilon {
                pointer: named_variable(&["S", "F"], "z"),
                position: Some(pre_readout),
            },
            ReportEntry::Audit {
                probe: ProbeSpec {
                    variable: named_variable(&["S", "F"], "bell"),
                    value: "phi+".into(),
                    context: "W".into(),
                    position: Some(pre_readout),
                },
                partition_step: 0,
            },
            ReportEntry::Agreement {
                friend_step: 0,
                read_step: pre_readout,
            },
            ReportEntry::Relational {
                n_env,
                phi,
                alpha: FRAC_PI_4,
            },
        ],
    };
    NamedScenario {
        name: "pipeline".into(),
        description: "three-stage measurement: premeasure, couplings, readout".into(),
        parameters: BTreeMap::from([
            ("n_env".to_string(), n_env as f64),
            ("phi".to_string(), phi),
        ]),
        spec,
    }
}

/// Two entangled friends, two superobservers with pointer-read and coherent
/// probe settings; reports quantum vs absoluteness CHSH.
pub fn ewfs_chsh(angles: [f64; 4]) -> NamedScenario {
    let spec = ScenarioSpec {
        dim_cap: None,
        systems: vec![
            system("S1", 2, Role::System),
            system("S2", 2, Role::System),
            system("F1", 2, Role::Friend),
            system("F2", 2, Role::Friend),
        ],
        initial: InitialSpec::Preset("singlet".into()),
        interactions: vec![
            InteractionSpec::Premeasure {
                variable: angle_variable(&["S1"], 0.0),
                pointer: "F1".into(),
            },
            InteractionSpec::Premeasure {
                variable: angle_variable(&["S2"], 0.0),
                pointer: "F2".into(),
            },
        ],
        reports: vec![ReportEntry::Chsh {
            side1: ChshSide {
                system: "S1".into(),
                pointer: "F1".into(),
                step: 0,
            },
            side2: ChshSide {
                system: "S2".into(),
                pointer: "F2".into(),
                step: 1,
            },
            angles,
        }],
    };
    NamedScenario {
        name: "ewfs-chsh".into(),
        description: "extended Wigner's-friend CHSH: unitary vs absoluteness semantics".into(),
        parameters: BTreeMap::from([
            ("a1".to_string(), angles[0]),
            ("a2".to_string(), angles[1]),
            ("b1".to_string(), angles[2]),
            ("b2".to_string(), angles[3]),
        ]),
        spec,
    }
}

/// The assumption-(C) failure pattern: the friend's fact can be certain, yet
/// de-labeling it mispredicts the coherent probe unless decoherence (or an
/// eigenstate preparation) intervenes.
pub fn frauchiger_renner_structure(alpha: f64, n_env: usize, phi: f64) -> NamedScenario {
    let mut systems = vec![system("S", 2, Role::System), system("F", 2, Role::Friend)];
    for k in 0..n_env {
        systems.push(system(&format!("E{k}"), 2, Role::Environment));
    }
    let dim = 1 << (2 + n_env);
    let mut amps = vec![(0.0, 0.0); dim];
    amps[0] = (alpha.cos(), 0.0);
    amps[dim / 2] = (alpha.sin(), 0.0);

    let mut interactions = vec![InteractionSpec::Premeasure {
        variable: angle_variable(&["S"], 0.0),
        pointer: "F".into(),
    }];
    for k in 0..n_env {
        interactions.push(InteractionSpec::Couple {
            pointer: named_variable(&["F"], "z"),
            environment: format!("E{k}"),
            angle: phi,
        });
    }
    let end = 1 + n_env;
    let spec = ScenarioSpec {
        dim_cap: None,
        systems,
        initial: InitialSpec::Amplitudes(amps),
        interactions,
        reports: vec![
            ReportEntry::Audit {
                probe: ProbeSpec {
                    variable: named_variable(&["S", "F"], "bell"),
                    value: "phi+".into(),
                    context: "W".into(),
                    position: Some(end),
                },
                partition_step: 0,
            },
            ReportEntry::Eta {
                pointer: named_variable(&["S", "F"], "z"),
                position: Some(end),
            },
            ReportEntry::Epsilon {
                pointer: named_variable(&["S", "F"], "z"),
                position: Some(end),
            },
        ],
    };
    NamedScenario {
        name: "fr-structure".into(),
        description: "naive de-labeled prediction vs the unitary one for a coherent probe".into(),
        parameters: BTreeMap::from([
            ("alpha".to_string(), alpha),
            ("n_env".to_string(), n_env as f64),
            ("phi".to_string(), phi),
        ]),
        spec,
    }
}

/// Parameter schemas and defaults for every built-in scenario.
pub fn catalog() -> Vec<ScenarioSchema> {
    let p = |name: &str, default: f64, description: &str| ParameterSchema {
        name: name.into(),
        default,
        description: description.into(),
    };
    vec![
        ScenarioSchema {
            name: "spin".into(),
            description: "sequential spin measurements; P(up along θ | up along z)".into(),
            parameters: vec![p("theta", FRAC_PI_2, "second measurement angle (radians)")],
        },
        ScenarioSchema {
            name: "wigners-friend".into(),
            description: "the friend's measurement audited by an outside Bell probe".into(),
            parameters: vec![p(
                "alpha",
                FRAC_PI_4,
                "preparation cos α|0⟩ + sin α|1⟩ (0 = eigenstate)",
            )],
        },
        ScenarioSchema {
            name: "pipeline".into(),
            description: "three-stage measurement: premeasure, couplings, readout".into(),
            parameters: vec![
                p("n_env", 5.0, "number of environment qubits"),
                p("phi", FRAC_PI_4, "coupling angle (radians)"),
            ],
        },
        ScenarioSchema {
            name: "ewfs-chsh".into(),
            description: "extended Wigner's-friend CHSH: unitary vs absoluteness semantics".into(),
            parameters: vec![
                p("a1", 0.0, "first setting, side 1 (radians)"),
                p("a2", FRAC_PI_2, "second setting, side 1 (radians)"),
                p("b1", FRAC_PI_4, "first setting, side 2 (radians)"),
                p("b2", 3.0 * FRAC_PI_4, "second setting, side 2 (radians)"),
            ],
        },
        ScenarioSchema {
            name: "fr-structure".into(),
            description: "naive de-labeled prediction vs the unitary one for a coherent probe"
                .into(),
            parameters: vec![
                p("alpha", FRAC_PI_4, "preparation cos α|0⟩ + sin α|1⟩"),
                p("n_env", 0.0, "number of environment qubits"),
                p("phi", FRAC_PI_4, "coupling angle (radians)"),
            ],
        },
    ]
}

fn param(
    params: &BTreeMap<String, f64>,
    schema: &ScenarioSchema,
    name: &str,
) -> f64 {
    params.get(name).copied().unwrap_or_else(|| {
        schema
            .parameters
            .iter()
            .find(|p| p.name == name)
            .expect("schema covers its own parameters")
            .default
    })
}

fn usize_param(value: f64, name: &str) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 {
        return Err(Error::validation(format!(
            "parameter `{name}` must be a non-negative integer, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Build a scenario by its CLI name, applying parameter overrides.
/// Unknown parameter keys are rejected.
pub fn by_name(name: &str, params: &BTreeMap<String, f64>) -> Result<NamedScenario> {
    let schema = catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::validation(format!("unknown scenario `{name}`")))?;
    for key in params.keys() {
        if !schema.parameters.iter().any(|p| &p.name == key) {
            return Err(Error::validation(format!(
                "unknown parameter `{key}` for scenario `{name}`"
            )));
        }
    }
    let g = |n: &str| param(params, &schema, n);
    Ok(match name {
        "spin" => spin_measurement(g("theta")),
        "wigners-friend" => wigners_friend(g("alpha")),
        "pipeline" => measurement_pipeline(usize_param(g("n_env"), "n_env")?, g("phi")),
        "ewfs-chsh" => ewfs_chsh([g("a1"), g("a2"), g("b1"), g("b2")]),
        "fr-structure" => frauchiger_renner_structure(
            g("alpha"),
            usize_param(g("n_env"), "n_env")?,
            g("phi"),
        ),
        _ => unreachable!("catalog checked"),
    })
}

/// Materialize and run a named scenario's full report plan.
pub fn execute(named: &NamedScenario, options: &BuildOptions) -> Result<Vec<Report>> {
    let built = named.spec.build(options)?;
    run_reports(&built)
}

/// Run every report entry of a built scenario, in order.
pub fn run_reports(built: &BuiltScenario) -> Result<Vec<Report>> {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    built
        .reports
        .iter()
        .map(|entry| {
            let payload = run_entry(&built.scenario, entry)?;
            let kind = payload_kind(&payload);
            let n = counts.entry(kind).or_insert(0);
            *n += 1;
            let name = if *n == 1 {
                kind.to_string()
            } else {
                format!("{kind}_{n}")
            };
            Ok(Report { name, payload })
        })
        .collect()
}

fn payload_kind(p: &ReportPayload) -> &'static str {
    match p {
        ReportPayload::Conditional { .. } => "conditional",
        ReportPayload::Audit(_) => "audit",
        ReportPayload::Witness { .. } => "witness",
        ReportPayload::Epsilon(_) => "epsilon",
        ReportPayload::Eta(_) => "eta",
        ReportPayload::Chsh(_) => "chsh",
        ReportPayload::Agreement(_) => "agreement",
        ReportPayload::Relational(_) => "relational",
    }
}

fn run_entry(scenario: &Scenario, entry: &ReportEntry) -> Result<ReportPayload> {
    match entry {
        ReportEntry::Conditional { query, given } => {
            let q = RelativeFact::new(query.step, query.value.clone());
            let conds: Vec<RelativeFact> = given
                .iter()
                .map(|f| RelativeFact::new(f.step, f.value.clone()))
                .collect();
            Ok(ReportPayload::Conditional {
                probability: conditional_probability(scenario, &q, &conds)?,
            })
        }
        ReportEntry::Audit {
            probe,
            partition_step,
        } => {
            let p = probe.build(scenario)?;
            Ok(ReportPayload::Audit(total_probability_audit(
                scenario,
                &p,
                *partition_step,
            )?))
        }
        ReportEntry::Witness {
            probe,
            partition_step,
        } => {
            let p = probe.build(scenario)?;
            let (lhs, rhs) = quantum_logic_witness(scenario, &p, *partition_step)?;
            Ok(ReportPayload::Witness { lhs, rhs })
        }
        ReportEntry::Epsilon { pointer, position } => {
            let state = evolve_to(scenario, position.unwrap_or(scenario.interactions().len()))?;
            let v = pointer.build(scenario.registry())?;
            Ok(ReportPayload::Epsilon(epsilon(&state, &v)?))
        }
        ReportEntry::Eta { pointer, position } => {
            let state = evolve_to(scenario, position.unwrap_or(scenario.interactions().len()))?;
            let v = pointer.build(scenario.registry())?;
            Ok(ReportPayload::Eta(eta_report(&state, &v)?))
        }
        ReportEntry::Chsh {
            side1,
            side2,
            angles,
        } => Ok(ReportPayload::Chsh(chsh_report(
            scenario, side1, side2, *angles,
        )?)),
        ReportEntry::Agreement {
            friend_step,
            read_step,
        } => Ok(ReportPayload::Agreement(agreement_report(
            scenario,
            *friend_step,
            *read_step,
        )?)),
        ReportEntry::Relational { n_env, phi, alpha } => {
            let template = EnvironmentTemplate {
                alpha: *alpha,
                dim_cap: scenario.registry().dim_cap(),
            };
            let model = EnvironmentModel::fixed(*n_env, *phi);
            Ok(ReportPayload::Relational(relational_check(
                &template, &model,
            )?))
        }
    }
}

/// Spin observable along an angle from z (in the x–z plane).
fn spin_observable(theta: f64) -> ComplexOperator {
    let (c, s) = (theta.cos(), theta.sin());
    ComplexOperator::from_pairs(2, &[(c, 0.0), (s, 0.0), (s, 0.0), (-c, 0.0)]).expect("2x2")
}

struct ChshContext {
    s1: SystemId,
    s2: SystemId,
    step1: usize,
    step2: usize,
}

fn chsh_context(scenario: &Scenario, side1: &ChshSide, side2: &ChshSide) -> Result<ChshContext> {
    let reg = scenario.registry();
    if side1.step >= side2.step {
        return Err(Error::validation("chsh sides must list steps in order"));
    }
    for side in [side1, side2] {
        let fact = scenario.fact_at(side.step)?;
        if scenario.registry().label(fact.context) != side.pointer {
            return Err(Error::validation(format!(
                "step {} does not establish a fact for pointer `{}`",
                side.step, side.pointer
            )));
        }
    }
    Ok(ChshContext {
        s1: reg.id(&side1.system)?,
        s2: reg.id(&side2.system)?,
        step1: side1.step,
        step2: side2.step,
    })
}

/// E(a,b) with full coherent access: undo both premeasurements unitarily,
/// then take the product-spin expectation on the systems.
fn quantum_correlator(scenario: &Scenario, ctx: &ChshContext, a: f64, b: f64) -> Result<f64> {
    let extended = scenario
        .clone()
        .then(scenario.interactions()[ctx.step1].inverse())
        .then(scenario.interactions()[ctx.step2].inverse());
    let state = evolve(&extended)?;
    let op = tensor_product(&spin_observable(a), &spin_observable(b))?;
    let e = state.expectation_local(&op, &[ctx.s1, ctx.s2])?;
    Ok(e.re.clamp(-1.0, 1.0))
}

/// E(a,b) under absoluteness semantics: condition on the friends' facts,
/// mix the collapsed branches, then probe each branch coherently.
fn absoluteness_correlator(scenario: &Scenario, ctx: &ChshContext, a: f64, b: f64) -> Result<f64> {
    let var1 = scenario.fact_at(ctx.step1)?.variable.clone();
    let var2 = scenario.fact_at(ctx.step2)?.variable.clone();
    let inv1 = scenario.interactions()[ctx.step1].inverse();
    let inv2 = scenario.interactions()[ctx.step2].inverse();
    let op = tensor_product(&spin_observable(a), &spin_observable(b))?;
    let mut acc = 0.0;
    for o1 in var1.outcomes() {
        for o2 in var2.outcomes() {
            let assignments = [
                RelativeFact::new(ctx.step1, o1.label()),
                RelativeFact::new(ctx.step2, o2.label()),
            ];
            let (p, state) = match chain_state(scenario, &assignments) {
                Ok(out) => out,
                Err(Error::ZeroBranch { .. }) => continue,
                Err(e) => return Err(e),
            };
            let state = state
                .apply_local(inv1.unitary(), inv1.targets())?
                .apply_local(inv2.unitary(), inv2.targets())?;
            let e = state.expectation_local(&op, &[ctx.s1, ctx.s2])?;
            acc += p * e.re;
        }
    }
    Ok(acc.clamp(-1.0, 1.0))
}

fn chsh_value(correlators: &[f64; 4]) -> f64 {
    (correlators[0] - correlators[1] + correlators[2] + correlators[3]).abs()
}

fn chsh_report(
    scenario: &Scenario,
    side1: &ChshSide,
    side2: &ChshSide,
    angles: [f64; 4],
) -> Result<ChshReport> {
    let ctx = chsh_context(scenario, side1, side2)?;
    let pairs = [
        (angles[0], angles[2]),
        (angles[0], angles[3]),
        (angles[1], angles[2]),
        (angles[1], angles[3]),
    ];
    let mut quantum = [0.0; 4];
    let mut absolute = [0.0; 4];
    for (k, (a, b)) in pairs.iter().enumerate() {
        quantum[k] = quantum_correlator(scenario, &ctx, *a, *b)?;
        absolute[k] = absoluteness_correlator(scenario, &ctx, *a, *b)?;
    }
    Ok(ChshReport {
        angles,
        quantum_correlators: quantum,
        quantum_chsh: chsh_value(&quantum),
        absoluteness_correlators: absolute,
        absoluteness_chsh: chsh_value(&absolute),
    })
}

/// P(reader's value = friend's fact), matching outcomes by index.
fn agreement_report(
    scenario: &Scenario,
    friend_step: usize,
    read_step: usize,
) -> Result<AgreementReport> {
    let friend_var = scenario.fact_at(friend_step)?.variable.clone();
    let read_var = scenario.fact_at(read_step)?.variable.clone();
    if read_var.n_outcomes() < friend_var.n_outcomes() {
        return Err(Error::validation(
            "reader variable has fewer outcomes than the friend's",
        ));
    }
    let mut branches = Vec::new();
    let mut total = 0.0;
    for (i, fo) in friend_var.outcomes().iter().enumerate() {
        let ro = &read_var.outcomes()[i];
        let joint = crate::facts::chain_probability(
            scenario,
            &[
                RelativeFact::new(friend_step, fo.label()),
                RelativeFact::new(read_step, ro.label()),
            ],
        )?;
        total += joint;
        branches.push(AgreementBranch {
            friend_value: fo.label().to_string(),
            read_value: ro.label().to_string(),
            joint_probability: joint,
        });
    }
    Ok(AgreementReport {
        probability: total,
        branches,
    })
}

/// Default angles: the CHSH-optimal set for the singlet.
pub fn default_chsh_angles() -> [f64; 4] {
    [0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4]
}
