//! Declarative scenario descriptions.
//!
//! A [`ScenarioSpec`] names systems, the initial state, the interaction list,
//! and a report plan. It is the single construction path for the built-in
//! scenarios and the on-disk config format, so exporting a built-in and
//! re-running it from the file exercises the same code.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::facts::{Probe, Scenario};
use crate::system::{
    controlled_coupling, premeasurement_unitary, Interaction, Role, SystemId, SystemRegistry,
    Variable,
};
use crate::tensor::{ComplexOperator, StateVector, DEFAULT_DIM_CAP, VALIDATION_TOL};

/// Options applied when materializing a spec.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Overrides the scenario description's own dim_cap (e.g. from RELFACTS_DIM_CAP).
    pub dim_cap: Option<usize>,
    /// Unitarity tolerance for matrices supplied as explicit entries.
    pub unitary_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            dim_cap: None,
            unitary_tol: VALIDATION_TOL,
        }
    }
}

/// A full scenario description: systems, initial state, interactions, reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_cap: Option<usize>,
    #[serde(rename = "system")]
    pub systems: Vec<SystemSpec>,
    pub initial: InitialSpec,
    #[serde(rename = "interaction", default)]
    pub interactions: Vec<InteractionSpec>,
    #[serde(rename = "report", default)]
    pub reports: Vec<ReportEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    pub label: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
}

/// Initial state: a named preset or explicit (re, im) amplitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    /// "zeros", "plus" (first qubit in |+⟩), "bell" (Φ⁺ on the first two
    /// qubits), or "singlet" (Ψ⁻ on the first two qubits); all other systems
    /// start in their lowest level.
    Preset(String),
    /// Row-major amplitudes over the composite space.
    Amplitudes(Vec<(f64, f64)>),
}

/// A variable given by targets and a basis choice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub targets: Vec<String>,
    pub basis: BasisSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisSpec {
    /// "z" (computational, any dims), "x" (qubit), or "bell" (two qubits).
    Named(String),
    /// Spin along an angle from the z-axis on a qubit; outcomes "up"/"down".
    Angle { angle: f64 },
    /// Explicit orthonormal vectors as (re, im) pairs.
    Explicit {
        labels: Vec<String>,
        vectors: Vec<Vec<(f64, f64)>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionSpec {
    /// Pointer-copy premeasurement of a variable onto a pointer system.
    Premeasure {
        variable: VariableSpec,
        pointer: String,
    },
    /// Controlled rotation of an environment qubit by the pointer value.
    Couple {
        pointer: VariableSpec,
        environment: String,
        angle: f64,
    },
    /// An explicit unitary with row-major (re, im) entries.
    Unitary {
        label: String,
        targets: Vec<String>,
        entries: Vec<(f64, f64)>,
    },
}

/// A projective question relative to a context, for audits and witnesses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub variable: VariableSpec,
    pub value: String,
    pub context: String,
    /// Chain position; defaults to after the last interaction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactRef {
    pub step: usize,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChshSide {
    pub system: String,
    pub pointer: String,
    pub step: usize,
}

/// One entry of a report plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportEntry {
    /// P(query | given) along the Lüders chain.
    Conditional { query: FactRef, given: Vec<FactRef> },
    /// Total-probability comparison of a probe against a partition step.
    Audit {
        probe: ProbeSpec,
        partition_step: usize,
    },
    /// The two sides of the quantum-logic comparison.
    Witness {
        probe: ProbeSpec,
        partition_step: usize,
    },
    /// ε of the state at a position with respect to a pointer PVM.
    Epsilon {
        pointer: VariableSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<usize>,
    },
    /// η and the reduced-state distance at a position.
    Eta {
        pointer: VariableSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        position: Option<usize>,
    },
    /// Quantum vs absoluteness CHSH over four angles.
    Chsh {
        side1: ChshSide,
        side2: ChshSide,
        angles: [f64; 4],
    },
    /// P(read value matches the friend's fact), summed over outcomes.
    Agreement { friend_step: usize, read_step: usize },
    /// Blind vs coupling-undoing audits of the standard environment template.
    Relational { n_env: usize, phi: f64, alpha: f64 },
}

/// A materialized spec: the scenario plus its report plan.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub scenario: Scenario,
    pub reports: Vec<ReportEntry>,
}

impl ScenarioSpec {
    pub fn build(&self, options: &BuildOptions) -> Result<BuiltScenario> {
        let cap = options.dim_cap.or(self.dim_cap).unwrap_or(DEFAULT_DIM_CAP);
        let mut registry = SystemRegistry::with_cap(cap);
        for s in &self.systems {
            registry.register(&s.label, s.dim, s.role)?;
        }
        let mut interactions = Vec::with_capacity(self.interactions.len());
        for spec in &self.interactions {
            interactions.push(build_interaction(&registry, spec, options)?);
        }
        let registry = Arc::new(registry);
        let initial = build_initial(&registry, &self.initial)?;
        let scenario = Scenario::new(registry, initial, interactions)?;
        Ok(BuiltScenario {
            scenario,
            reports: self.reports.clone(),
        })
    }
}

impl VariableSpec {
    pub fn build(&self, registry: &SystemRegistry) -> Result<Variable> {
        let targets = resolve_targets(registry, &self.targets)?;
        let label = self.label.clone().unwrap_or_else(|| {
            let basis = match &self.basis {
                BasisSpec::Named(n) => n.clone(),
                BasisSpec::Angle { angle } => format!("angle({angle:.6})"),
                BasisSpec::Explicit { .. } => "explicit".to_string(),
            };
            format!("{}[{}]", basis, self.targets.join(","))
        });
        match &self.basis {
            BasisSpec::Named(name) => match name.as_str() {
                "z" => Variable::computational(registry, &label, targets),
                "x" => {
                    let &[t] = &targets[..] else {
                        return Err(Error::validation("basis `x` takes one qubit target"));
                    };
                    Variable::spin_angle(registry, &label, t, std::f64::consts::FRAC_PI_2)
                }
                "bell" => {
                    let &[a, b] = &targets[..] else {
                        return Err(Error::validation("basis `bell` takes two qubit targets"));
                    };
                    Variable::bell(registry, &label, [a, b])
                }
                other => Err(Error::validation(format!("unknown basis `{other}`"))),
            },
            BasisSpec::Angle { angle } => {
                let &[t] = &targets[..] else {
                    return Err(Error::validation("an angle basis takes one qubit target"));
                };
                Variable::spin_angle(registry, &label, t, *angle)
            }
            BasisSpec::Explicit { labels, vectors } => {
                if labels.len() != vectors.len() {
                    return Err(Error::validation("labels and vectors count differ"));
                }
                let pairs = labels
                    .iter()
                    .cloned()
                    .zip(vectors.iter().map(|v| {
                        v.iter()
                            .map(|&(re, im)| Complex64::new(re, im))
                            .collect::<Vec<_>>()
                    }))
                    .collect();
                Variable::from_basis(registry, &label, targets, pairs)
            }
        }
    }
}

impl ProbeSpec {
    pub fn build(&self, scenario: &Scenario) -> Result<Probe> {
        let variable = self.variable.build(scenario.registry())?;
        Ok(Probe {
            variable,
            value: self.value.clone(),
            context: self.context.clone(),
            position: self.position.unwrap_or(scenario.interactions().len()),
        })
    }
}

fn resolve_targets(registry: &SystemRegistry, labels: &[String]) -> Result<Vec<SystemId>> {
    labels.iter().map(|l| registry.id(l)).collect()
}

fn build_interaction(
    registry: &SystemRegistry,
    spec: &InteractionSpec,
    options: &BuildOptions,
) -> Result<Interaction> {
    match spec {
        InteractionSpec::Premeasure { variable, pointer } => {
            let v = variable.build(registry)?;
            premeasurement_unitary(registry, &v, registry.id(pointer)?)
        }
        InteractionSpec::Couple {
            pointer,
            environment,
            angle,
        } => {
            let v = pointer.build(registry)?;
            controlled_coupling(registry, &v, registry.id(environment)?, *angle)
        }
        InteractionSpec::Unitary {
            label,
            targets,
            entries,
        } => {
            let targets = resolve_targets(registry, targets)?;
            let dim: usize = targets.iter().map(|t| registry.dim(*t)).product();
            let matrix = ComplexOperator::from_pairs(dim, entries)?;
            Interaction::unitary_with_tolerance(registry, label, targets, matrix, options.unitary_tol)
        }
    }
}

fn build_initial(registry: &Arc<SystemRegistry>, spec: &InitialSpec) -> Result<StateVector> {
    match spec {
        InitialSpec::Preset(name) => build_preset(registry, name),
        InitialSpec::Amplitudes(pairs) => {
            let amps = pairs
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect();
            StateVector::from_amplitudes(registry.clone(), amps)
        }
    }
}

fn build_preset(registry: &Arc<SystemRegistry>, name: &str) -> Result<StateVector> {
    let dim = registry.total_dim();
    let ids: Vec<SystemId> = registry.ids().collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match name {
        "zeros" => StateVector::basis(registry.clone(), &vec![0; ids.len()]),
        "plus" => {
            let first = *ids
                .first()
                .ok_or_else(|| Error::validation("preset needs at least one system"))?;
            if registry.dim(first) != 2 {
                return Err(Error::validation("preset `plus` needs a qubit first system"));
            }
            let mut amps = vec![Complex64::ZERO; dim];
            amps[0] = Complex64::new(h, 0.0);
            amps[registry.stride(first)] = Complex64::new(h, 0.0);
            StateVector::from_amplitudes(registry.clone(), amps)
        }
        "bell" | "singlet" => {
            if ids.len() < 2 || registry.dim(ids[0]) != 2 || registry.dim(ids[1]) != 2 {
                return Err(Error::validation(format!(
                    "preset `{name}` needs two qubit systems first"
                )));
            }
            let (s0, s1) = (registry.stride(ids[0]), registry.stride(ids[1]));
            let mut amps = vec![Complex64::ZERO; dim];
            if name == "bell" {
                amps[0] = Complex64::new(h, 0.0);
                amps[s0 + s1] = Complex64::new(h, 0.0);
            } else {
                amps[s1] = Complex64::new(h, 0.0);
                amps[s0] = Complex64::new(-h, 0.0);
            }
            StateVector::from_amplitudes(registry.clone(), amps)
        }
        other => Err(Error::validation(format!("unknown preset `{other}`"))),
    }
}
