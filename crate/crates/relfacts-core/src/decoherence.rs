//! Parameterized environment models and the sweeps that exhibit ε decay,
//! the decoherence-time proxy, and the relationality of decoherence.
//!
//! One controlled coupling is one time tick; "environment size n" stands in
//! for decoherence time throughout.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::facts::{total_probability_audit, Probe, Scenario};
use crate::random::{rng, uniform};
use crate::system::{
    controlled_coupling, premeasurement_unitary, Interaction, Role, SystemRegistry, Variable,
};
use crate::tensor::{StateVector, DEFAULT_DIM_CAP};

/// How coupling angles are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSpec {
    /// Every coupling uses the same angle.
    Fixed(f64),
    /// Angles drawn uniformly from [min, max), regenerated from the seed.
    SeededUniform { min: f64, max: f64 },
}

/// A reproducible environment: n coupling angles derived from a seed.
#[derive(Debug, Clone, Copy)]
pub struct EnvironmentModel {
    pub n_qubits: usize,
    pub spec: AngleSpec,
    pub seed: u64,
}

impl EnvironmentModel {
    pub fn fixed(n_qubits: usize, angle: f64) -> Self {
        Self {
            n_qubits,
            spec: AngleSpec::Fixed(angle),
            seed: 0,
        }
    }

    pub fn seeded_uniform(n_qubits: usize, min: f64, max: f64, seed: u64) -> Self {
        Self {
            n_qubits,
            spec: AngleSpec::SeededUniform { min, max },
            seed,
        }
    }

    /// Same angle law, different environment size.
    pub fn with_size(&self, n_qubits: usize) -> Self {
        Self { n_qubits, ..*self }
    }

    /// The coupling angles; identical seed gives identical angles.
    pub fn angles(&self) -> Vec<f64> {
        match self.spec {
            AngleSpec::Fixed(phi) => vec![phi; self.n_qubits],
            AngleSpec::SeededUniform { min, max } => {
                let mut r = rng(self.seed);
                (0..self.n_qubits).map(|_| uniform(&mut r, min, max)).collect()
            }
        }
    }
}

/// One row of an ε sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub epsilon: f64,
    pub bound: f64,
    pub deviation: f64,
}

/// The two-sided relationality comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RelationalReport {
    /// Deviation of the audit whose probe is blind to the environment.
    pub blind_deviation: f64,
    /// Interference bound for the blind audit.
    pub blind_bound: f64,
    /// ε at the blind probe's position.
    pub epsilon: f64,
    /// Deviation when the probe first undoes every coupling.
    pub probing_deviation: f64,
    /// Deviation of the environment-free (n = 0) scenario.
    pub baseline_deviation: f64,
}

/// The standard sweep template: a system prepared in cos α|0⟩ + sin α|1⟩,
/// a qubit pointer, and n environment qubits.
#[derive(Debug, Clone, Copy)]
pub struct EnvironmentTemplate {
    /// Preparation amplitude angle; π/4 is the balanced superposition.
    pub alpha: f64,
    pub dim_cap: usize,
}

impl Default for EnvironmentTemplate {
    fn default() -> Self {
        Self {
            alpha: std::f64::consts::FRAC_PI_4,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

impl EnvironmentTemplate {
    pub fn with_cap(dim_cap: usize) -> Self {
        Self {
            dim_cap,
            ..Self::default()
        }
    }

    /// S, F, and the model's environment qubits; premeasurement then one
    /// coupling per environment qubit.
    pub fn scenario(&self, model: &EnvironmentModel) -> Result<Scenario> {
        let n = model.n_qubits;
        let mut reg = SystemRegistry::with_cap(self.dim_cap);
        let s = reg.register("S", 2, Some(Role::System))?;
        let f = reg.register("F", 2, Some(Role::Friend))?;
        let mut envs = Vec::with_capacity(n);
        for k in 0..n {
            envs.push(reg.register(&format!("E{k}"), 2, Some(Role::Environment))?);
        }
        let z = Variable::spin_z(&reg, "Z", s)?;
        let pointer = Variable::computational(&reg, "ptr", vec![f])?;
        let mut interactions = vec![premeasurement_unitary(&reg, &z, f)?];
        for (e, angle) in envs.iter().zip(model.angles()) {
            interactions.push(controlled_coupling(&reg, &pointer, *e, angle)?);
        }
        let bell = Variable::bell(&reg, "bell", [s, f])?;
        let n_interactions = interactions.len();
        let reg = Arc::new(reg);
        let mut amps = vec![Complex64::ZERO; reg.total_dim()];
        amps[0] = Complex64::new(self.alpha.cos(), 0.0);
        amps[reg.stride(s)] = Complex64::new(self.alpha.sin(), 0.0);
        let initial = StateVector::from_amplitudes(reg.clone(), amps)?;
        let probe = Probe {
            variable: bell,
            value: "phi+".to_string(),
            context: "W".to_string(),
            position: n_interactions,
        };
        Ok(Scenario::new(reg, initial, interactions)?.with_final_probe(probe))
    }

    /// The reference probe: the maximally entangling Bell question on S–F,
    /// asked by an outside observer after the couplings.
    pub fn probe(&self, scenario: &Scenario) -> Result<Probe> {
        if let Some(p) = scenario.final_probe() {
            return Ok(p.clone());
        }
        let reg = scenario.registry();
        let s = reg.id("S")?;
        let f = reg.id("F")?;
        Ok(Probe {
            variable: Variable::bell(reg, "bell", [s, f])?,
            value: "phi+".to_string(),
            context: "W".to_string(),
            position: scenario.interactions().len(),
        })
    }
}

/// One controlled coupling per environment-role qubit in registry order.
pub fn build_environment(
    registry: &SystemRegistry,
    pointer_variable: &Variable,
    model: &EnvironmentModel,
) -> Result<Vec<Interaction>> {
    let envs = registry.with_role(Role::Environment);
    if envs.len() < model.n_qubits {
        return Err(Error::validation(format!(
            "registry has {} environment qubits, model needs {}",
            envs.len(),
            model.n_qubits
        )));
    }
    envs[..model.n_qubits]
        .iter()
        .zip(model.angles())
        .map(|(e, angle)| controlled_coupling(registry, pointer_variable, *e, angle))
        .collect()
}

fn audit_row(template: &EnvironmentTemplate, model: &EnvironmentModel) -> Result<SweepRow> {
    let scenario = template.scenario(model).map_err(|e| name_n(e, model.n_qubits))?;
    let probe = template.probe(&scenario)?;
    let report = total_probability_audit(&scenario, &probe, 0)?;
    Ok(SweepRow {
        n: model.n_qubits,
        epsilon: report.epsilon.unwrap_or(f64::NAN),
        bound: report.bound.unwrap_or(f64::NAN),
        deviation: report.deviation,
    })
}

fn name_n(e: Error, n: usize) -> Error {
    match e {
        Error::Capacity { requested, cap, .. } => {
            Error::capacity(requested, cap, format!("environment size n = {n}"))
        }
        other => other,
    }
}

/// Evolve, audit, and report (ε, bound, deviation) for each environment size.
/// Rows come out in ascending n.
pub fn epsilon_sweep(
    template: &EnvironmentTemplate,
    n_values: &[usize],
    model: &EnvironmentModel,
) -> Result<Vec<SweepRow>> {
    let mut ns: Vec<usize> = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    ns.iter()
        .map(|&n| audit_row(template, &model.with_size(n)))
        .collect()
}

/// ε of the fully evolved template state at environment size n, decomposed
/// over the joint S–F basis.
pub fn epsilon_at(template: &EnvironmentTemplate, model: &EnvironmentModel, n: usize) -> Result<f64> {
    let scenario = template.scenario(&model.with_size(n)).map_err(|e| name_n(e, n))?;
    let state = crate::facts::evolve(&scenario)?;
    let reg = scenario.registry();
    let lab = Variable::computational(reg, "lab", vec![reg.id("S")?, reg.id("F")?])?;
    Ok(crate::stability::epsilon(&state, &lab)?.epsilon)
}

/// Smallest environment size n with ε(n) < τ, by doubling then bisection on
/// actually-evolved scenarios (no closed form consulted).
pub fn decoherence_threshold(
    template: &EnvironmentTemplate,
    model: &EnvironmentModel,
    tau: f64,
) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::validation("threshold τ must lie in (0, 1)"));
    }
    if let AngleSpec::Fixed(phi) = model.spec {
        if phi.cos().abs() >= 1.0 - 1e-12 {
            return Err(Error::NoConvergence(
                "coupling angle leaves branch overlaps unchanged (ε non-decreasing)".into(),
            ));
        }
    }
    // largest n the cap admits: S·F·2^n ≤ cap
    let mut max_n = 0usize;
    while 4usize.saturating_mul(1 << (max_n + 1)) <= template.dim_cap {
        max_n += 1;
    }
    if max_n == 0 {
        return Err(Error::capacity(8, template.dim_cap, "threshold search"));
    }

    let mut lo = 0usize; // ε(0) = 1 ≥ τ always
    let mut hi = 1usize;
    let mut prev = 1.0f64;
    loop {
        let eps = epsilon_at(template, model, hi)?;
        if eps < tau {
            break;
        }
        if eps >= prev - 1e-15 {
            return Err(Error::NoConvergence(format!(
                "ε did not decrease between n = {lo} and n = {hi}"
            )));
        }
        prev = eps;
        lo = hi;
        if hi == max_n {
            return Err(Error::capacity(
                4 * (1 << (max_n + 1)),
                template.dim_cap,
                format!("ε({max_n}) = {eps:.3e} still ≥ τ = {tau:.3e}"),
            ));
        }
        hi = (hi * 2).min(max_n);
    }
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if epsilon_at(template, model, mid)? < tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Audit the same final state in two ways: a probe blind to the environment
/// and a probe that undoes every coupling first. The blind deviation obeys
/// the interference bound; the probing one recovers the environment-free
/// deviation.
pub fn relational_check(
    template: &EnvironmentTemplate,
    model: &EnvironmentModel,
) -> Result<RelationalReport> {
    let scenario = template.scenario(model).map_err(|e| name_n(e, model.n_qubits))?;
    let probe = template.probe(&scenario)?;
    let blind = total_probability_audit(&scenario, &probe, 0)?;

    let mut probing_scenario = scenario.clone();
    for interaction in scenario.interactions()[1..].iter().rev() {
        probing_scenario = probing_scenario.then(interaction.inverse());
    }
    let mut probing_probe = template.probe(&probing_scenario)?;
    probing_probe.position = probing_scenario.interactions().len();
    let probing = total_probability_audit(&probing_scenario, &probing_probe, 0)?;

    let baseline_scenario = template.scenario(&model.with_size(0))?;
    let baseline_probe = template.probe(&baseline_scenario)?;
    let baseline = total_probability_audit(&baseline_scenario, &baseline_probe, 0)?;

    Ok(RelationalReport {
        blind_deviation: blind.deviation,
        blind_bound: blind.bound.unwrap_or(f64::NAN),
        epsilon: blind.epsilon.unwrap_or(f64::NAN),
        probing_deviation: probing.deviation,
        baseline_deviation: baseline.deviation,
    })
}
