//! Named subsystems, projective variables, and interaction builders.
//!
//! A [`SystemRegistry`] fixes the tensor ordering once (registration order,
//! first system most significant). [`Variable`]s are complete projective
//! decompositions on a subset of systems. The two canonical interaction
//! builders are the pointer-copy premeasurement and the controlled
//! environment coupling.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{
    tensor_product_with_cap, ComplexOperator, DEFAULT_DIM_CAP, VALIDATION_TOL,
};

/// Handle to a registered system; valid only against its own registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemId(usize);

impl SystemId {
    pub fn index(self) -> usize {
        self.0
    }

    /// Construct from a raw index. Intended for tests and deserialization.
    pub fn from_raw(index: usize) -> Self {
        SystemId(index)
    }
}

/// Cast tags for the standard measurement story.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    /// The measured system.
    #[serde(rename = "S")]
    System,
    /// The friend / apparatus carrying the pointer variable.
    #[serde(rename = "F")]
    Friend,
    /// An environment degree of freedom.
    #[serde(rename = "E")]
    Environment,
    /// The outside observer.
    #[serde(rename = "W")]
    Wigner,
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S" => Ok(Role::System),
            "F" => Ok(Role::Friend),
            "E" => Ok(Role::Environment),
            "W" => Ok(Role::Wigner),
            other => Err(Error::validation(format!("unknown role tag `{other}`"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Role::System => "S",
            Role::Friend => "F",
            Role::Environment => "E",
            Role::Wigner => "W",
        };
        f.write_str(tag)
    }
}

#[derive(Debug, Clone)]
struct SystemEntry {
    label: String,
    dim: usize,
    role: Option<Role>,
}

/// Ordered collection of named finite-dimensional systems.
#[derive(Debug, Clone)]
pub struct SystemRegistry {
    systems: Vec<SystemEntry>,
    dim_cap: usize,
}

impl Default for SystemRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl SystemRegistry {
    pub fn new() -> Self {
        Self::with_cap(DEFAULT_DIM_CAP)
    }

    /// Registry with an explicit composite-dimension cap.
    pub fn with_cap(dim_cap: usize) -> Self {
        Self {
            systems: Vec::new(),
            dim_cap,
        }
    }

    /// Register a system; the tensor ordering is the registration order.
    pub fn register(&mut self, label: &str, dim: usize, role: Option<Role>) -> Result<SystemId> {
        if dim == 0 {
            return Err(Error::validation("system dimension must be ≥ 1"));
        }
        if self.systems.iter().any(|s| s.label == label) {
            return Err(Error::validation(format!("duplicate system label `{label}`")));
        }
        let new_total = self.total_dim().saturating_mul(dim);
        if new_total > self.dim_cap {
            return Err(Error::capacity(
                new_total,
                self.dim_cap,
                format!("registering `{label}`"),
            ));
        }
        self.systems.push(SystemEntry {
            label: label.to_string(),
            dim,
            role,
        });
        Ok(SystemId(self.systems.len() - 1))
    }

    pub fn len(&self) -> usize {
        self.systems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.systems.is_empty()
    }

    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    pub fn total_dim(&self) -> usize {
        self.systems.iter().map(|s| s.dim).product()
    }

    pub fn ids(&self) -> impl Iterator<Item = SystemId> + '_ {
        (0..self.systems.len()).map(SystemId)
    }

    pub fn id(&self, label: &str) -> Result<SystemId> {
        self.systems
            .iter()
            .position(|s| s.label == label)
            .map(SystemId)
            .ok_or_else(|| Error::UnknownSystem(label.to_string()))
    }

    pub fn check_id(&self, id: SystemId) -> Result<()> {
        if id.0 < self.systems.len() {
            Ok(())
        } else {
            Err(Error::UnknownSystem(format!("#{}", id.0)))
        }
    }

    pub fn label(&self, id: SystemId) -> &str {
        &self.systems[id.0].label
    }

    pub fn dim(&self, id: SystemId) -> usize {
        self.systems[id.0].dim
    }

    pub fn role(&self, id: SystemId) -> Option<Role> {
        self.systems[id.0].role
    }

    /// Stride of a system in the composite row-major index.
    pub fn stride(&self, id: SystemId) -> usize {
        self.systems[id.0 + 1..].iter().map(|s| s.dim).product()
    }

    /// Systems carrying a given role, in registry order.
    pub fn with_role(&self, role: Role) -> Vec<SystemId> {
        self.ids()
            .filter(|&id| self.role(id) == Some(role))
            .collect()
    }

    /// The given ids deduplicated and sorted into registry order.
    pub fn canonical_order(&self, ids: &[SystemId]) -> Result<Vec<SystemId>> {
        for (i, id) in ids.iter().enumerate() {
            self.check_id(*id)?;
            if ids[..i].contains(id) {
                return Err(Error::validation(format!(
                    "duplicate system `{}`",
                    self.label(*id)
                )));
            }
        }
        let mut sorted = ids.to_vec();
        sorted.sort_by_key(|id| id.0);
        Ok(sorted)
    }

    /// A fresh registry containing only the given systems, in the given order.
    pub fn sub_registry(&self, keep: &[SystemId]) -> Result<SystemRegistry> {
        let mut sub = SystemRegistry::with_cap(self.dim_cap);
        for id in keep {
            self.check_id(*id)?;
            let e = &self.systems[id.0];
            sub.register(&e.label, e.dim, e.role)?;
        }
        Ok(sub)
    }
}

/// One outcome of a variable: a label and its projector on the target subspace.
#[derive(Debug, Clone)]
pub struct Outcome {
    label: String,
    projector: ComplexOperator,
    basis_vector: Option<Vec<Complex64>>,
}

impl Outcome {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn projector(&self) -> &ComplexOperator {
        &self.projector
    }

    /// The defining unit vector for rank-1 outcomes built from a basis.
    pub fn basis_vector(&self) -> Option<&[Complex64]> {
        self.basis_vector.as_deref()
    }
}

/// A projective decomposition (PVM) on a subset of systems.
#[derive(Debug, Clone)]
pub struct Variable {
    label: String,
    targets: Vec<SystemId>,
    outcomes: Vec<Outcome>,
}

impl Variable {
    /// Build from explicit projectors; they must be mutually orthogonal and
    /// complete on the target subspace within 1e-10. Degenerate (rank > 1)
    /// projectors are allowed.
    pub fn new(
        registry: &SystemRegistry,
        label: &str,
        targets: Vec<SystemId>,
        outcomes: Vec<(String, ComplexOperator)>,
    ) -> Result<Self> {
        Self::with_vectors(
            registry,
            label,
            targets,
            outcomes.into_iter().map(|(l, p)| (l, p, None)).collect(),
        )
    }

    fn with_vectors(
        registry: &SystemRegistry,
        label: &str,
        targets: Vec<SystemId>,
        outcomes: Vec<(String, ComplexOperator, Option<Vec<Complex64>>)>,
    ) -> Result<Self> {
        let sub_dim = target_dim(registry, &targets)?;
        if outcomes.is_empty() {
            return Err(Error::validation("variable needs at least one outcome"));
        }
        let mut seen = Vec::new();
        for (l, p, _) in &outcomes {
            if seen.contains(&l) {
                return Err(Error::validation(format!("duplicate outcome label `{l}`")));
            }
            seen.push(l);
            if !p.is_square() || p.rows() != sub_dim {
                return Err(Error::DimMismatch {
                    expected: sub_dim,
                    actual: p.rows(),
                });
            }
            p.validate_projector(VALIDATION_TOL)?;
        }
        // mutual orthogonality and completeness
        let mut sum = ComplexOperator::zeros(sub_dim, sub_dim);
        for (i, (_, pi, _)) in outcomes.iter().enumerate() {
            sum = sum.add(pi)?;
            for (_, pj, _) in &outcomes[i + 1..] {
                if pi.mul(pj)?.max_abs() > VALIDATION_TOL {
                    return Err(Error::validation(format!(
                        "projectors of `{label}` are not mutually orthogonal"
                    )));
                }
            }
        }
        if sum.sub(&ComplexOperator::identity(sub_dim))?.max_abs() > VALIDATION_TOL {
            return Err(Error::validation(format!(
                "projectors of `{label}` do not sum to the identity"
            )));
        }
        Ok(Self {
            label: label.to_string(),
            targets,
            outcomes: outcomes
                .into_iter()
                .map(|(l, p, v)| Outcome {
                    label: l,
                    projector: p,
                    basis_vector: v,
                })
                .collect(),
        })
    }

    /// Build a rank-1 PVM from labeled orthonormal vectors spanning the
    /// target subspace.
    pub fn from_basis(
        registry: &SystemRegistry,
        label: &str,
        targets: Vec<SystemId>,
        vectors: Vec<(String, Vec<Complex64>)>,
    ) -> Result<Self> {
        let sub_dim = target_dim(registry, &targets)?;
        if vectors.len() != sub_dim {
            return Err(Error::validation(format!(
                "`{label}` needs {sub_dim} basis vectors, got {}",
                vectors.len()
            )));
        }
        for (i, (_, vi)) in vectors.iter().enumerate() {
            if vi.len() != sub_dim {
                return Err(Error::DimMismatch {
                    expected: sub_dim,
                    actual: vi.len(),
                });
            }
            for (j, (_, vj)) in vectors.iter().enumerate() {
                let dot = crate::tensor::inner_product(vi, vj);
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - Complex64::new(expect, 0.0)).norm() > VALIDATION_TOL {
                    return Err(Error::validation(format!(
                        "basis vectors of `{label}` are not orthonormal"
                    )));
                }
            }
        }
        let outcomes = vectors
            .into_iter()
            .map(|(l, v)| {
                let p = ComplexOperator::projector_onto(&v);
                (l, p, Some(v))
            })
            .collect();
        Self::with_vectors(registry, label, targets, outcomes)
    }

    /// Product computational basis over the targets.
    pub fn computational(registry: &SystemRegistry, label: &str, targets: Vec<SystemId>) -> Result<Self> {
        let dims: Vec<usize> = targets.iter().map(|t| registry.dim(*t)).collect();
        let sub_dim = target_dim(registry, &targets)?;
        let labels = basis_labels(&dims);
        let vectors = (0..sub_dim)
            .map(|i| {
                let mut v = vec![Complex64::ZERO; sub_dim];
                v[i] = Complex64::ONE;
                (labels[i].clone(), v)
            })
            .collect();
        Self::from_basis(registry, label, targets, vectors)
    }

    /// Spin along an angle θ from the z-axis (in the x–z plane) on a qubit.
    /// Outcome "up" is cos(θ/2)|0⟩ + sin(θ/2)|1⟩.
    pub fn spin_angle(
        registry: &SystemRegistry,
        label: &str,
        target: SystemId,
        theta: f64,
    ) -> Result<Self> {
        if registry.dim(target) != 2 {
            return Err(Error::validation("spin variables need a qubit target"));
        }
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let up = vec![Complex64::new(c, 0.0), Complex64::new(s, 0.0)];
        let down = vec![Complex64::new(-s, 0.0), Complex64::new(c, 0.0)];
        Self::from_basis(
            registry,
            label,
            vec![target],
            vec![("up".into(), up), ("down".into(), down)],
        )
    }

    /// The z spin variable on a qubit (outcomes "up", "down").
    pub fn spin_z(registry: &SystemRegistry, label: &str, target: SystemId) -> Result<Self> {
        Self::spin_angle(registry, label, target, 0.0)
    }

    /// The Bell basis on an ordered pair of qubits.
    pub fn bell(registry: &SystemRegistry, label: &str, targets: [SystemId; 2]) -> Result<Self> {
        for t in targets {
            if registry.dim(t) != 2 {
                return Err(Error::validation("bell variables need qubit targets"));
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::ZERO;
        let p = Complex64::new(h, 0.0);
        let m = Complex64::new(-h, 0.0);
        let vectors = vec![
            ("phi+".to_string(), vec![p, z, z, p]),
            ("phi-".to_string(), vec![p, z, z, m]),
            ("psi+".to_string(), vec![z, p, p, z]),
            ("psi-".to_string(), vec![z, p, m, z]),
        ];
        Self::from_basis(registry, label, targets.to_vec(), vectors)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn targets(&self) -> &[SystemId] {
        &self.targets
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn outcome_index(&self, value: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|o| o.label == value)
            .ok_or_else(|| {
                Error::validation(format!(
                    "variable `{}` has no outcome `{value}`",
                    self.label
                ))
            })
    }

    pub fn outcome(&self, value: &str) -> Result<&Outcome> {
        Ok(&self.outcomes[self.outcome_index(value)?])
    }

    /// True when every outcome carries a defining basis vector.
    pub fn is_rank_one(&self) -> bool {
        self.outcomes.iter().all(|o| o.basis_vector.is_some())
    }
}

/// A fact-establishing tag on an interaction.
#[derive(Debug, Clone)]
pub struct FactTag {
    /// The system for which this interaction establishes a relative fact.
    pub context: SystemId,
    /// The variable whose value becomes the fact.
    pub variable: Variable,
}

/// One step of a scenario: a unitary on some targets, optionally tagged as
/// establishing a relative fact for a context system.
#[derive(Debug, Clone)]
pub struct Interaction {
    label: String,
    targets: Vec<SystemId>,
    unitary: ComplexOperator,
    fact: Option<FactTag>,
}

impl Interaction {
    /// An untagged unitary interaction.
    pub fn unitary_on(
        registry: &SystemRegistry,
        label: &str,
        targets: Vec<SystemId>,
        unitary: ComplexOperator,
    ) -> Result<Self> {
        Self::unitary_with_tolerance(registry, label, targets, unitary, VALIDATION_TOL)
    }

    /// An untagged unitary interaction validated at a caller-chosen tolerance.
    pub fn unitary_with_tolerance(
        registry: &SystemRegistry,
        label: &str,
        targets: Vec<SystemId>,
        unitary: ComplexOperator,
        tol: f64,
    ) -> Result<Self> {
        let sub_dim = target_dim(registry, &targets)?;
        if !unitary.is_square() || unitary.rows() != sub_dim {
            return Err(Error::DimMismatch {
                expected: sub_dim,
                actual: unitary.rows(),
            });
        }
        unitary.validate_unitary(tol)?;
        Ok(Self {
            label: label.to_string(),
            targets,
            unitary,
            fact: None,
        })
    }

    /// Explicitly flag this interaction as establishing a fact.
    pub fn with_fact(mut self, context: SystemId, variable: Variable) -> Result<Self> {
        for t in variable.targets() {
            if !self.targets.contains(t) {
                return Err(Error::validation(
                    "fact variable targets must be a subset of the interaction targets",
                ));
            }
        }
        self.fact = Some(FactTag { context, variable });
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn targets(&self) -> &[SystemId] {
        &self.targets
    }

    pub fn unitary(&self) -> &ComplexOperator {
        &self.unitary
    }

    pub fn fact(&self) -> Option<&FactTag> {
        self.fact.as_ref()
    }

    /// The adjoint interaction. The fact tag is dropped: undoing a record is
    /// not establishing one.
    pub fn inverse(&self) -> Interaction {
        Interaction {
            label: format!("{}^-1", self.label),
            targets: self.targets.clone(),
            unitary: self.unitary.adjoint(),
            fact: None,
        }
    }
}

/// Pointer-copy premeasurement: U = Σ_i P_i ⊗ Shift^i on (variable targets, pointer).
///
/// With the pointer prepared in its "ready" state (basis index 0) this maps
/// |a_i⟩|ready⟩ → |a_i⟩|i⟩ without any collapse. The interaction is tagged
/// with fact context = pointer and fact variable = the measured variable.
pub fn premeasurement_unitary(
    registry: &SystemRegistry,
    variable: &Variable,
    pointer: SystemId,
) -> Result<Interaction> {
    registry.check_id(pointer)?;
    if variable.targets().contains(&pointer) {
        return Err(Error::validation(
            "pointer must be distinct from the measured targets",
        ));
    }
    let d_ptr = registry.dim(pointer);
    if d_ptr < variable.n_outcomes() {
        return Err(Error::validation(format!(
            "pointer `{}` (dim {d_ptr}) too small for {} outcomes",
            registry.label(pointer),
            variable.n_outcomes()
        )));
    }
    let sub_dim = target_dim(registry, variable.targets())?;
    let mut u = ComplexOperator::zeros(sub_dim * d_ptr, sub_dim * d_ptr);
    let shift = shift_matrix(d_ptr);
    let mut shift_pow = ComplexOperator::identity(d_ptr);
    for (i, outcome) in variable.outcomes().iter().enumerate() {
        if i > 0 {
            shift_pow = shift.mul(&shift_pow)?;
        }
        let term = tensor_product_with_cap(outcome.projector(), &shift_pow, registry.dim_cap())?;
        u = u.add(&term)?;
    }
    // Σ_i P_i ⊗ Shift^i is unitary whenever the P_i are complete, even with
    // spare pointer levels: U†U = Σ_i P_i ⊗ I.
    u.validate_unitary(VALIDATION_TOL)?;
    let mut targets = variable.targets().to_vec();
    targets.push(pointer);
    Ok(Interaction {
        label: format!(
            "premeasure[{} -> {}]",
            variable.label(),
            registry.label(pointer)
        ),
        targets,
        unitary: u,
        fact: Some(FactTag {
            context: pointer,
            variable: variable.clone(),
        }),
    })
}

/// Controlled environment coupling: conditioned on pointer outcome i, rotate
/// the environment qubit by i·φ in its real amplitude plane (outcome 0 leaves
/// it untouched). Commutes with the pointer PVM by construction; successive
/// couplings multiply branch overlaps by cos φ.
///
/// Tagged with fact context = the environment qubit: the coupling establishes
/// the pointer value as a fact relative to the environment.
pub fn controlled_coupling(
    registry: &SystemRegistry,
    pointer_variable: &Variable,
    environment: SystemId,
    angle: f64,
) -> Result<Interaction> {
    registry.check_id(environment)?;
    if registry.dim(environment) != 2 {
        return Err(Error::validation("environment system must be a qubit"));
    }
    if pointer_variable.targets().contains(&environment) {
        return Err(Error::validation(
            "environment must be distinct from the pointer targets",
        ));
    }
    let sub_dim = target_dim(registry, pointer_variable.targets())?;
    let mut u = ComplexOperator::zeros(sub_dim * 2, sub_dim * 2);
    for (i, outcome) in pointer_variable.outcomes().iter().enumerate() {
        let rot = real_rotation(i as f64 * angle);
        let term = tensor_product_with_cap(outcome.projector(), &rot, registry.dim_cap())?;
        u = u.add(&term)?;
    }
    u.validate_unitary(VALIDATION_TOL)?;
    let mut targets = pointer_variable.targets().to_vec();
    targets.push(environment);
    Ok(Interaction {
        label: format!(
            "couple[{} -> {}, {:.6}]",
            pointer_variable.label(),
            registry.label(environment),
            angle
        ),
        targets,
        unitary: u,
        fact: Some(FactTag {
            context: environment,
            variable: pointer_variable.clone(),
        }),
    })
}

/// Real rotation by `angle`: |0⟩ → cos·|0⟩ + sin·|1⟩, so ⟨0|R(α)|0⟩ = cos α.
pub fn real_rotation(angle: f64) -> ComplexOperator {
    let (c, s) = (angle.cos(), angle.sin());
    ComplexOperator::from_pairs(2, &[(c, 0.0), (-s, 0.0), (s, 0.0), (c, 0.0)]).expect("2x2")
}

/// Cyclic shift on a d-level system: |j⟩ → |j+1 mod d⟩.
pub fn shift_matrix(dim: usize) -> ComplexOperator {
    let mut m = ComplexOperator::zeros(dim, dim);
    for j in 0..dim {
        m[((j + 1) % dim, j)] = Complex64::ONE;
    }
    m
}

fn target_dim(registry: &SystemRegistry, targets: &[SystemId]) -> Result<usize> {
    if targets.is_empty() {
        return Err(Error::validation("target list must be nonempty"));
    }
    let mut dim = 1usize;
    for (i, t) in targets.iter().enumerate() {
        registry.check_id(*t)?;
        if targets[..i].contains(t) {
            return Err(Error::validation(format!(
                "duplicate target `{}`",
                registry.label(*t)
            )));
        }
        dim *= registry.dim(*t);
    }
    Ok(dim)
}

/// Outcome labels for a product computational basis.
fn basis_labels(dims: &[usize]) -> Vec<String> {
    let total: usize = dims.iter().product();
    let compact = dims.iter().all(|&d| d <= 10);
    (0..total)
        .map(|mut idx| {
            let mut parts = Vec::with_capacity(dims.len());
            for (j, _) in dims.iter().enumerate() {
                let block: usize = dims[j + 1..].iter().product();
                parts.push((idx / block.max(1)).to_string());
                idx %= block.max(1);
            }
            if compact {
                parts.concat()
            } else {
                parts.join(":")
            }
        })
        .collect()
}
