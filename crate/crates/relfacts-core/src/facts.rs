//! The probability engine for facts relative to a chosen context.
//!
//! Probabilities of facts are computed along Lüders chains: every interaction
//! evolves the state unitarily, and conditioning on a fact projects at that
//! fact's interaction. Facts relative to *different* contexts can still be
//! combined — the engine computes the total-probability comparison on demand
//! and reports the deviation rather than forbidding the question.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::stability::{branch_decompose, stability_bound, BranchDecomposition};
use crate::system::{FactTag, Interaction, SystemId, SystemRegistry, Variable};
use crate::tensor::{ComplexOperator, StateVector, TargetIndexer, ZERO_BRANCH_THRESHOLD};

/// Above this composite dimension, same-context audits fall back from the
/// dephased-density route to the chain-sum route.
const DENSITY_ROUTE_MAX: usize = 512;

/// An initial state plus an ordered list of interactions.
#[derive(Debug, Clone)]
pub struct Scenario {
    registry: Arc<SystemRegistry>,
    initial: StateVector,
    interactions: Vec<Interaction>,
    final_probe: Option<Probe>,
}

impl Scenario {
    pub fn new(
        registry: Arc<SystemRegistry>,
        initial: StateVector,
        interactions: Vec<Interaction>,
    ) -> Result<Self> {
        if initial.dim() != registry.total_dim() {
            return Err(Error::DimMismatch {
                expected: registry.total_dim(),
                actual: initial.dim(),
            });
        }
        for i in &interactions {
            for t in i.targets() {
                registry.check_id(*t)?;
            }
        }
        Ok(Self {
            registry,
            initial,
            interactions,
            final_probe: None,
        })
    }

    pub fn with_final_probe(mut self, probe: Probe) -> Self {
        self.final_probe = Some(probe);
        self
    }

    pub fn registry(&self) -> &Arc<SystemRegistry> {
        &self.registry
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn final_probe(&self) -> Option<&Probe> {
        self.final_probe.as_ref()
    }

    /// Append an interaction, returning the extended scenario. A stored
    /// final probe keeps its recorded position.
    pub fn then(mut self, interaction: Interaction) -> Self {
        self.interactions.push(interaction);
        self
    }

    /// The fact tag of the interaction at `step`.
    pub fn fact_at(&self, step: usize) -> Result<&FactTag> {
        self.interactions
            .get(step)
            .ok_or_else(|| Error::validation(format!("no interaction at step {step}")))?
            .fact()
            .ok_or_else(|| {
                Error::validation(format!("interaction at step {step} establishes no fact"))
            })
    }
}

/// A value assignment to the fact established at one interaction step.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeFact {
    /// Index of the fact-establishing interaction in the scenario.
    pub step: usize,
    /// Outcome label of the interaction's fact variable.
    pub value: String,
}

impl RelativeFact {
    pub fn new(step: usize, value: impl Into<String>) -> Self {
        Self {
            step,
            value: value.into(),
        }
    }
}

/// A projective question asked at a chain position, labeled with the context
/// it is relative to.
///
/// `position` counts interactions already applied: position k means the probe
/// acts on the state after interactions `0..k`. Position `interactions.len()`
/// probes the final state.
#[derive(Debug, Clone)]
pub struct Probe {
    pub variable: Variable,
    pub value: String,
    pub context: String,
    pub position: usize,
}

/// The outcome of one total-probability comparison.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
    /// Max squared overlap between distinct non-null branch environments,
    /// when the branch decomposition applies.
    pub epsilon: Option<f64>,
    /// √ε · Σ_{i≠j} |c_i||c_j|, when the branch decomposition applies and the
    /// probe does not touch the environment.
    pub bound: Option<f64>,
    pub same_context: bool,
    pub probe_variable: String,
    pub probe_value: String,
    pub probe_context: String,
    pub probe_position: usize,
    pub partition_step: usize,
    pub partition_variable: String,
    pub partition_context: String,
}

/// Apply every interaction in order, no projections anywhere.
pub fn evolve(scenario: &Scenario) -> Result<StateVector> {
    evolve_to(scenario, scenario.interactions.len())
}

/// Apply the first `position` interactions, no projections anywhere.
pub fn evolve_to(scenario: &Scenario, position: usize) -> Result<StateVector> {
    if position > scenario.interactions.len() {
        return Err(Error::validation(format!(
            "position {position} beyond the last interaction"
        )));
    }
    let mut state = scenario.initial.clone();
    for i in &scenario.interactions[..position] {
        state.apply_local_in_place(i.unitary(), i.targets())?;
    }
    Ok(state)
}

fn validate_assignments(scenario: &Scenario, assignments: &[RelativeFact]) -> Result<()> {
    for (i, a) in assignments.iter().enumerate() {
        let fact = scenario.fact_at(a.step)?;
        fact.variable.outcome_index(&a.value)?;
        if let Some(prev) = assignments[..i].last() {
            if a.step <= prev.step {
                return Err(Error::validation(
                    "assignments must be strictly ordered by step, one per interaction",
                ));
            }
        }
    }
    Ok(())
}

/// Walk the chain up to `position`, projecting at each assignment. Returns
/// `None` when a zero-probability branch is hit.
fn chain_walk(
    scenario: &Scenario,
    assignments: &[RelativeFact],
    position: usize,
) -> Result<Option<(f64, StateVector)>> {
    validate_assignments(scenario, assignments)?;
    if position > scenario.interactions.len() {
        return Err(Error::validation(format!(
            "position {position} beyond the last interaction"
        )));
    }
    if let Some(last) = assignments.last() {
        if last.step >= position {
            return Err(Error::validation(
                "assignments must lie before the probed position",
            ));
        }
    }
    let mut state = scenario.initial.clone();
    let mut probability = 1.0f64;
    let mut next = assignments.iter().peekable();
    for (step, interaction) in scenario.interactions[..position].iter().enumerate() {
        state.apply_local_in_place(interaction.unitary(), interaction.targets())?;
        if let Some(a) = next.peek() {
            if a.step == step {
                let fact = interaction.fact().expect("validated");
                let outcome = fact.variable.outcome(&a.value)?;
                match state.project_local(outcome.projector(), fact.variable.targets()) {
                    Ok((p, post)) => {
                        probability *= p;
                        state = post;
                    }
                    Err(Error::ZeroBranch { .. }) => return Ok(None),
                    Err(e) => return Err(e),
                }
                next.next();
            }
        }
    }
    Ok(Some((probability, state)))
}

/// Joint probability of an ordered list of relative facts, by the Lüders
/// chain. Zero-probability branches yield 0.
pub fn chain_probability(scenario: &Scenario, assignments: &[RelativeFact]) -> Result<f64> {
    match chain_walk(scenario, assignments, scenario.interactions.len())? {
        Some((p, _)) => Ok(p),
        None => Ok(0.0),
    }
}

/// Joint probability and the post-chain state. Errors on a zero branch.
pub fn chain_state(
    scenario: &Scenario,
    assignments: &[RelativeFact],
) -> Result<(f64, StateVector)> {
    match chain_walk(scenario, assignments, scenario.interactions.len())? {
        Some(out) => Ok(out),
        None => Err(Error::ZeroBranch { probability: 0.0 }),
    }
}

/// P(query | conditions) = P(query ∧ conditions) / P(conditions).
pub fn conditional_probability(
    scenario: &Scenario,
    query: &RelativeFact,
    conditions: &[RelativeFact],
) -> Result<f64> {
    let mut joint: Vec<RelativeFact> = conditions.to_vec();
    if conditions.iter().any(|c| c.step == query.step) {
        // conditioning on the queried interaction: identical assignment is
        // certain, a different one impossible
        let same = conditions
            .iter()
            .any(|c| c.step == query.step && c.value == query.value);
        let p_cond = chain_probability(scenario, conditions)?;
        if p_cond <= ZERO_BRANCH_THRESHOLD {
            return Err(Error::UndefinedConditional);
        }
        return Ok(if same { 1.0 } else { 0.0 });
    }
    joint.push(query.clone());
    joint.sort_by_key(|a| a.step);
    let p_cond = chain_probability(scenario, conditions)?;
    if p_cond <= ZERO_BRANCH_THRESHOLD {
        return Err(Error::UndefinedConditional);
    }
    let p_joint = chain_probability(scenario, &joint)?;
    Ok((p_joint / p_cond).clamp(0.0, 1.0))
}

fn probe_projector<'a>(probe: &'a Probe) -> Result<&'a ComplexOperator> {
    Ok(probe.variable.outcome(&probe.value)?.projector())
}

/// Probability of the probe with no projection anywhere before it.
pub fn probe_unprojected(scenario: &Scenario, probe: &Probe) -> Result<f64> {
    let state = evolve_to(scenario, probe.position)?;
    state.probability_local(probe_projector(probe)?, probe.variable.targets())
}

/// P(assignments ∧ probe): project along the chain, then apply the probe.
pub fn joint_probability(
    scenario: &Scenario,
    assignments: &[RelativeFact],
    probe: &Probe,
) -> Result<f64> {
    match chain_walk(scenario, assignments, probe.position)? {
        Some((p, state)) => {
            let q = state.probability_local(probe_projector(probe)?, probe.variable.targets())?;
            Ok(p * q)
        }
        None => Ok(0.0),
    }
}

/// The total-probability comparison for a probe against the facts established
/// at `partition_step`.
///
/// Cross-context (probe context ≠ partition context): lhs is the probe
/// probability with *no* projection at the partition step, rhs the chain sum
/// Σ_i P(probe ∧ a_i); their difference is the interference term. Same
/// context: lhs is computed with the partition dephased (an independent
/// density-matrix route), and the comparison is an identity up to rounding.
pub fn total_probability_audit(
    scenario: &Scenario,
    probe: &Probe,
    partition_step: usize,
) -> Result<StabilityReport> {
    let fact = scenario.fact_at(partition_step)?.clone();
    if probe.position <= partition_step {
        return Err(Error::validation(
            "probe must come after the partition step",
        ));
    }
    probe.variable.outcome_index(&probe.value)?;

    let same_context = probe.context == scenario.registry.label(fact.context);

    let rhs = {
        let mut acc = 0.0f64;
        for outcome in fact.variable.outcomes() {
            acc += joint_probability(
                scenario,
                &[RelativeFact::new(partition_step, outcome.label())],
                probe,
            )?;
        }
        acc
    };

    let lhs = if same_context {
        dephased_probability(scenario, probe, partition_step, &fact)?
    } else {
        probe_unprojected(scenario, probe)?
    };

    let (epsilon, bound) = audit_stability(scenario, probe, &fact, partition_step)?;

    Ok(StabilityReport {
        lhs,
        rhs,
        deviation: (lhs - rhs).abs(),
        epsilon,
        bound,
        same_context,
        probe_variable: probe.variable.label().to_string(),
        probe_value: probe.value.clone(),
        probe_context: probe.context.clone(),
        probe_position: probe.position,
        partition_step,
        partition_variable: fact.variable.label().to_string(),
        partition_context: scenario.registry.label(fact.context).to_string(),
    })
}

/// Both sides of the quantum-logic comparison P(b ∧ (a₁ ∨ a₂)) vs
/// P(b ∧ a₁) + P(b ∧ a₂). The partition must have exactly two outcomes.
pub fn quantum_logic_witness(
    scenario: &Scenario,
    probe: &Probe,
    partition_step: usize,
) -> Result<(f64, f64)> {
    let fact = scenario.fact_at(partition_step)?;
    if fact.variable.n_outcomes() != 2 {
        return Err(Error::validation(
            "the quantum-logic witness needs a two-outcome partition",
        ));
    }
    if probe.position <= partition_step {
        return Err(Error::validation(
            "probe must come after the partition step",
        ));
    }
    // a₁ ∨ a₂ is exhaustive, so the left side is the unprojected probability
    let lhs = probe_unprojected(scenario, probe)?;
    let mut rhs = 0.0;
    for outcome in fact.variable.outcomes() {
        rhs += joint_probability(
            scenario,
            &[RelativeFact::new(partition_step, outcome.label())],
            probe,
        )?;
    }
    Ok((lhs, rhs))
}

/// Same-context lhs by the dephased-density route: evolve to the partition,
/// replace ρ by Σ_i Π_i ρ Π_i, evolve the matrix on, take tr(P_b ρ).
fn dephased_probability(
    scenario: &Scenario,
    probe: &Probe,
    partition_step: usize,
    fact: &FactTag,
) -> Result<f64> {
    let dim = scenario.registry.total_dim();
    if dim > DENSITY_ROUTE_MAX {
        // chain-sum fallback for large spaces
        let mut acc = 0.0;
        for outcome in fact.variable.outcomes() {
            acc += joint_probability(
                scenario,
                &[RelativeFact::new(partition_step, outcome.label())],
                probe,
            )?;
        }
        return Ok(acc);
    }
    let state = evolve_to(scenario, partition_step + 1)?;
    let rho = state.to_density();
    let mut mat = rho.matrix().clone();

    // dephase in the partition decomposition
    let mut dephased = ComplexOperator::zeros(dim, dim);
    for outcome in fact.variable.outcomes() {
        let term = sandwich_local(
            &mat,
            outcome.projector(),
            fact.variable.targets(),
            &scenario.registry,
        )?;
        dephased = dephased.add(&term)?;
    }
    mat = dephased;

    for interaction in &scenario.interactions[partition_step + 1..probe.position] {
        mat = sandwich_local(
            &mat,
            interaction.unitary(),
            interaction.targets(),
            &scenario.registry,
        )?;
    }

    // tr(P_b ρ) with P_b local on the probe targets
    let pm = apply_local_to_columns(
        &mat,
        probe_projector(probe)?,
        probe.variable.targets(),
        &scenario.registry,
    )?;
    Ok(pm.trace().re.clamp(0.0, 1.0))
}

/// A ρ → M_loc ρ M_loc† update without materializing the embedded matrix.
fn sandwich_local(
    rho: &ComplexOperator,
    op: &ComplexOperator,
    targets: &[SystemId],
    registry: &SystemRegistry,
) -> Result<ComplexOperator> {
    let left = apply_local_to_columns(rho, op, targets, registry)?;
    // (M ρ) M† = (M (M ρ)†)†
    let right = apply_local_to_columns(&left.adjoint(), op, targets, registry)?;
    Ok(right.adjoint())
}

/// Apply a local operator to every column of a matrix (ρ → M_loc ρ).
fn apply_local_to_columns(
    rho: &ComplexOperator,
    op: &ComplexOperator,
    targets: &[SystemId],
    registry: &SystemRegistry,
) -> Result<ComplexOperator> {
    let dim = rho.rows();
    let indexer = TargetIndexer::new(registry, targets)?;
    let k = indexer.target_dim();
    if op.rows() != k || !op.is_square() {
        return Err(Error::DimMismatch {
            expected: k,
            actual: op.rows(),
        });
    }
    let offs = indexer.target_offsets().to_vec();
    let mut out = rho.clone();
    let mut x = vec![num_complex::Complex64::ZERO; k];
    for col in 0..dim {
        indexer.for_each_rest_base(|base| {
            for (m, off) in offs.iter().enumerate() {
                x[m] = out[(base + off, col)];
            }
            for (r, off) in offs.iter().enumerate() {
                let mut acc = num_complex::Complex64::ZERO;
                for (m, xv) in x.iter().enumerate() {
                    acc += op[(r, m)] * xv;
                }
                out[(base + off, col)] = acc;
            }
        });
    }
    Ok(out)
}

/// ε and the interference bound for an audit, when the branch decomposition
/// applies: the "lab" is the partition variable's targets plus its context
/// system, the environment is everything else. The bound is reported only
/// when it is a guarantee: the probe stays inside the lab and every
/// interaction between the partition and the probe commutes with the joint
/// pointer PVM (environment couplings do by construction).
fn audit_stability(
    scenario: &Scenario,
    probe: &Probe,
    fact: &FactTag,
    partition_step: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    if !fact.variable.is_rank_one() {
        return Ok((None, None));
    }
    let mut lab: Vec<SystemId> = fact.variable.targets().to_vec();
    if !lab.contains(&fact.context) {
        lab.push(fact.context);
    }
    let decomp = match audit_decomposition(scenario, probe.position, fact)? {
        Some(d) => d,
        None => return Ok((None, None)),
    };
    let eps = decomp.epsilon();
    let probe_in_lab = probe.variable.targets().iter().all(|t| lab.contains(t));
    let bound = if probe_in_lab
        && intermediates_preserve_branches(scenario, fact, &lab, partition_step + 1, probe.position)?
    {
        Some(stability_bound(&decomp))
    } else {
        // probing the environment (or scrambling the lab in between) voids
        // the premise behind the interference bound
        None
    };
    Ok((Some(eps), bound))
}

/// Sound sufficient condition for the interference bound: every interaction
/// strictly between the partition projection and the probe either avoids the
/// lab or commutes with all joint pointer projectors on the shared systems.
fn intermediates_preserve_branches(
    scenario: &Scenario,
    fact: &FactTag,
    lab: &[SystemId],
    from: usize,
    to: usize,
) -> Result<bool> {
    use num_complex::Complex64;
    let registry = &scenario.registry;
    let projector_family = |sys: SystemId| -> Option<Vec<ComplexOperator>> {
        if sys == fact.context {
            let d = registry.dim(sys);
            Some(
                (0..d)
                    .map(|m| {
                        let mut v = vec![Complex64::ZERO; d];
                        v[m] = Complex64::ONE;
                        ComplexOperator::projector_onto(&v)
                    })
                    .collect(),
            )
        } else if fact.variable.targets() == [sys] {
            Some(
                fact.variable
                    .outcomes()
                    .iter()
                    .map(|o| o.projector().clone())
                    .collect(),
            )
        } else {
            // multi-system partition bases do not factor per system
            None
        }
    };
    for interaction in &scenario.interactions[from..to] {
        let targets = interaction.targets();
        let overlap: Vec<SystemId> = targets
            .iter()
            .copied()
            .filter(|t| lab.contains(t))
            .collect();
        if overlap.is_empty() {
            continue;
        }
        let mut families = Vec::with_capacity(overlap.len());
        for sys in &overlap {
            match projector_family(*sys) {
                Some(f) => families.push((*sys, f)),
                None => return Ok(false),
            }
        }
        // every product of family projectors (identity off the overlap) must
        // commute with the interaction's local unitary
        let sizes: Vec<usize> = families.iter().map(|(_, f)| f.len()).collect();
        let combos: usize = sizes.iter().product();
        for mut combo in 0..combos {
            let mut choice = Vec::with_capacity(families.len());
            for size in sizes.iter().rev() {
                choice.push(combo % size);
                combo /= size;
            }
            choice.reverse();
            let mut p = ComplexOperator::identity(1);
            for t in targets {
                let factor = match families.iter().position(|(sys, _)| sys == t) {
                    Some(k) => families[k].1[choice[k]].clone(),
                    None => ComplexOperator::identity(registry.dim(*t)),
                };
                p = crate::tensor::tensor_product_with_cap(&p, &factor, usize::MAX)?;
            }
            let u = interaction.unitary();
            let up = u.mul(&p)?;
            let pu = p.mul(u)?;
            if up.sub(&pu)?.max_abs() > 1e-10 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Branch-decompose the pre-probe state over the joint rank-1 PVM
/// (partition eigenbasis ⊗ context computational basis).
fn audit_decomposition(
    scenario: &Scenario,
    position: usize,
    fact: &FactTag,
) -> Result<Option<BranchDecomposition>> {
    let registry = &scenario.registry;
    let mut targets = fact.variable.targets().to_vec();
    if targets.contains(&fact.context) {
        return Ok(None);
    }
    targets.push(fact.context);
    let d_ctx = registry.dim(fact.context);
    let mut vectors = Vec::new();
    for outcome in fact.variable.outcomes() {
        let v = outcome.basis_vector().expect("rank-1 checked");
        for m in 0..d_ctx {
            let mut e_m = vec![num_complex::Complex64::ZERO; d_ctx];
            e_m[m] = num_complex::Complex64::ONE;
            let joint = crate::tensor::kron_vectors(v, &e_m);
            vectors.push((format!("{}|{}", outcome.label(), m), joint));
        }
    }
    let joint_variable = Variable::from_basis(
        registry,
        &format!("{}·{}", fact.variable.label(), registry.label(fact.context)),
        targets,
        vectors,
    )?;
    let state = evolve_to(scenario, position)?;
    Ok(Some(branch_decompose(&state, &joint_variable)?))
}
