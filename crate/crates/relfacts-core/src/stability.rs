//! Branch decompositions and the quantitative stability measures.
//!
//! A joint state over (pointer targets, rest) is written as
//! Σ_i c_i |v_i⟩ ⊗ |ψ_i⟩ with the v_i a rank-1 pointer basis. ε is the
//! largest squared overlap between distinct non-null |ψ_i⟩; small ε means
//! the pointer's facts are stable for anyone blind to the rest. The η
//! criterion covers the decoherence-free limit where a single amplitude
//! dominates.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::Variable;
use crate::tensor::{
    inner_product, trace_distance, ComplexOperator, DensityMatrix, StateVector, TargetIndexer,
    NULL_BRANCH_THRESHOLD,
};

/// One branch of a decomposition.
#[derive(Debug, Clone)]
pub struct Branch {
    /// Outcome label of the pointer value this branch sits on.
    pub label: String,
    /// Complex amplitude; the phase convention (first nonzero component of
    /// the branch state made real positive) is absorbed here.
    pub amplitude: Complex64,
    /// Normalized state of the complement systems. `None` for null branches.
    pub env_state: Option<Vec<Complex64>>,
}

impl Branch {
    pub fn weight(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    pub fn is_null(&self) -> bool {
        self.env_state.is_none()
    }
}

/// A state decomposed over a rank-1 pointer PVM.
#[derive(Debug, Clone)]
pub struct BranchDecomposition {
    pointer: Variable,
    branches: Vec<Branch>,
    registry: std::sync::Arc<crate::system::SystemRegistry>,
}

impl BranchDecomposition {
    pub fn pointer(&self) -> &Variable {
        &self.pointer
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Indices of branches above the null threshold.
    pub fn non_null(&self) -> Vec<usize> {
        (0..self.branches.len())
            .filter(|&i| !self.branches[i].is_null())
            .collect()
    }

    /// Max squared overlap over distinct non-null branch pairs; 0 with fewer
    /// than two non-null branches.
    pub fn epsilon(&self) -> f64 {
        let live = self.non_null();
        let mut eps = 0.0f64;
        for (a, &i) in live.iter().enumerate() {
            for &j in &live[a + 1..] {
                let si = self.branches[i].env_state.as_ref().expect("non-null");
                let sj = self.branches[j].env_state.as_ref().expect("non-null");
                eps = eps.max(inner_product(si, sj).norm_sqr());
            }
        }
        eps.min(1.0)
    }

    /// Σ over ordered pairs i≠j of |c_i||c_j|, restricted to non-null branches.
    pub fn interference_sum(&self) -> f64 {
        let mags: Vec<f64> = self
            .non_null()
            .iter()
            .map(|&i| self.branches[i].amplitude.norm())
            .collect();
        let total: f64 = mags.iter().sum();
        let squares: f64 = mags.iter().map(|m| m * m).sum();
        total * total - squares
    }

    /// Rebuild Σ c_i |v_i⟩⊗|ψ_i⟩ for residual checks.
    pub fn reconstruct(&self) -> Result<StateVector> {
        let indexer = TargetIndexer::new(&self.registry, self.pointer.targets())?;
        let offs = indexer.target_offsets().to_vec();
        let mut amps = vec![Complex64::ZERO; self.registry.total_dim()];
        for (outcome, branch) in self.pointer.outcomes().iter().zip(&self.branches) {
            let env = match &branch.env_state {
                Some(e) => e,
                None => continue,
            };
            let v = outcome.basis_vector().expect("rank-1 pointer");
            let mut r = 0usize;
            indexer.for_each_rest_base(|base| {
                let factor = branch.amplitude * env[r];
                if factor != Complex64::ZERO {
                    for (t, off) in offs.iter().enumerate() {
                        amps[base + off] += factor * v[t];
                    }
                }
                r += 1;
            });
        }
        StateVector::from_amplitudes(self.registry.clone(), amps)
    }
}

/// ε with its witnessing pair and the full pairwise overlap table.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonReport {
    pub epsilon: f64,
    /// Outcome labels of the pair attaining the max, when one exists.
    pub argmax: Option<(String, String)>,
    /// |⟨ψ_i|ψ_j⟩|² for every non-null pair i < j.
    pub overlaps: Vec<PairOverlap>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOverlap {
    pub first: String,
    pub second: String,
    pub overlap_sq: f64,
}

/// The high-amplitude stability criterion.
#[derive(Debug, Clone, Serialize)]
pub struct EtaReport {
    /// 1 − max_i |c_i|.
    pub eta: f64,
    pub dominant_index: usize,
    pub dominant_label: String,
    /// Trace distance of the reduced pointer state to the dominant pointer
    /// projector; always ≤ √(2η).
    pub trace_distance: f64,
    pub sqrt_two_eta: f64,
}

/// Decompose a state over a rank-1 pointer PVM.
///
/// Amplitudes follow the deterministic phase convention: the first component
/// of each branch state with magnitude above threshold is made real positive,
/// the phase moving into c_i, so Σ c_i |v_i⟩⊗|ψ_i⟩ reproduces the input
/// exactly.
pub fn branch_decompose(state: &StateVector, pointer: &Variable) -> Result<BranchDecomposition> {
    if !pointer.is_rank_one() {
        return Err(Error::validation(
            "branch decomposition needs a rank-1 pointer PVM (a basis)",
        ));
    }
    let registry = state.registry().clone();
    let indexer = TargetIndexer::new(&registry, pointer.targets())?;
    let k = indexer.target_dim();
    let n_env = indexer.rest_count();
    let offs = indexer.target_offsets().to_vec();
    let amps = state.amplitudes();

    let n_out = pointer.n_outcomes();
    let mut conditionals = vec![vec![Complex64::ZERO; n_env]; n_out];
    let vectors: Vec<&[Complex64]> = pointer
        .outcomes()
        .iter()
        .map(|o| o.basis_vector().expect("rank-1 checked"))
        .collect();
    let mut r = 0usize;
    indexer.for_each_rest_base(|base| {
        for (t, off) in offs.iter().enumerate() {
            let a = amps[base + off];
            if a == Complex64::ZERO {
                continue;
            }
            for (i, v) in vectors.iter().enumerate() {
                let w = v[t].conj();
                if w != Complex64::ZERO {
                    conditionals[i][r] += w * a;
                }
            }
        }
        r += 1;
    });
    debug_assert_eq!(k, vectors[0].len());

    let mut branches = Vec::with_capacity(n_out);
    for (outcome, mut phi) in pointer.outcomes().iter().zip(conditionals.into_iter()) {
        let c_raw = crate::tensor::vec_norm(&phi);
        if c_raw <= NULL_BRANCH_THRESHOLD {
            branches.push(Branch {
                label: outcome.label().to_string(),
                amplitude: Complex64::ZERO,
                env_state: None,
            });
            continue;
        }
        let lead = phi
            .iter()
            .find(|z| z.norm() > c_raw * 1e-9)
            .copied()
            .unwrap_or(Complex64::ONE);
        let phase = lead / lead.norm();
        let inv = phase.conj() / c_raw;
        for z in &mut phi {
            *z *= inv;
        }
        branches.push(Branch {
            label: outcome.label().to_string(),
            amplitude: phase * c_raw,
            env_state: Some(phi),
        });
    }
    Ok(BranchDecomposition {
        pointer: pointer.clone(),
        branches,
        registry,
    })
}

/// The ε overlap measure of a state with respect to a pointer PVM.
pub fn epsilon(state: &StateVector, pointer: &Variable) -> Result<EpsilonReport> {
    let decomp = branch_decompose(state, pointer)?;
    Ok(epsilon_report(&decomp))
}

pub fn epsilon_report(decomp: &BranchDecomposition) -> EpsilonReport {
    let live = decomp.non_null();
    let mut overlaps = Vec::new();
    let mut best: Option<(f64, usize, usize)> = None;
    for (a, &i) in live.iter().enumerate() {
        for &j in &live[a + 1..] {
            let si = decomp.branches[i].env_state.as_ref().expect("non-null");
            let sj = decomp.branches[j].env_state.as_ref().expect("non-null");
            let o = inner_product(si, sj).norm_sqr().min(1.0);
            overlaps.push(PairOverlap {
                first: decomp.branches[i].label.clone(),
                second: decomp.branches[j].label.clone(),
                overlap_sq: o,
            });
            if best.map_or(true, |(b, _, _)| o > b) {
                best = Some((o, i, j));
            }
        }
    }
    EpsilonReport {
        epsilon: best.map_or(0.0, |(b, _, _)| b),
        argmax: best.map(|(_, i, j)| {
            (
                decomp.branches[i].label.clone(),
                decomp.branches[j].label.clone(),
            )
        }),
        overlaps,
    }
}

/// Reduced state of the pointer targets (everything else traced out).
pub fn reduced_pointer_state(state: &StateVector, pointer: &Variable) -> Result<DensityMatrix> {
    state.reduced_density(pointer.targets())
}

/// The interference bound √ε · Σ_{i≠j} |c_i||c_j|.
///
/// For any probe confined to the pointer side (projector matrix elements of
/// modulus ≤ 1), the total-probability deviation cannot exceed this.
pub fn stability_bound(decomp: &BranchDecomposition) -> f64 {
    decomp.epsilon().sqrt() * decomp.interference_sum()
}

/// η = 1 − max|c_i| and the trace distance of the reduced pointer state to
/// the dominant pointer projector.
pub fn eta_report(state: &StateVector, pointer: &Variable) -> Result<EtaReport> {
    let decomp = branch_decompose(state, pointer)?;
    let (dom_idx, dom_mag) = decomp
        .branches
        .iter()
        .enumerate()
        .map(|(i, b)| (i, b.amplitude.norm()))
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
        .ok_or_else(|| Error::validation("empty decomposition"))?;
    let eta = (1.0 - dom_mag).max(0.0);
    let rho = reduced_pointer_state(state, pointer)?;
    let v = pointer.outcomes()[dom_idx]
        .basis_vector()
        .expect("rank-1 checked");
    let sigma = DensityMatrix::from_operator_unchecked(
        rho.registry().clone(),
        ComplexOperator::projector_onto(v),
    );
    let distance = trace_distance(&rho, &sigma)?;
    Ok(EtaReport {
        eta,
        dominant_index: dom_idx,
        dominant_label: decomp.branches[dom_idx].label.clone(),
        trace_distance: distance,
        sqrt_two_eta: (2.0 * eta).sqrt(),
    })
}
