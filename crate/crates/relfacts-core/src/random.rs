//! Seeded random states, unitaries, and variables.
//!
//! Everything here is deterministic given the seed; there is no OS entropy
//! anywhere in the crate.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::system::{SystemId, SystemRegistry, Variable};
use crate::tensor::{ComplexOperator, StateVector};

/// The crate-standard seeded generator.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Haar-ish random unit state over the registry's composite space.
pub fn random_state(registry: Arc<SystemRegistry>, rng: &mut ChaCha8Rng) -> StateVector {
    let raw: Vec<Complex64> = (0..registry.total_dim()).map(|_| gaussian(rng)).collect();
    StateVector::from_amplitudes_normalized(registry, raw).expect("gaussian vector is nonzero")
}

/// Haar-ish random unitary via modified Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> ComplexOperator {
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| (0..dim).map(|_| gaussian(rng)).collect())
        .collect();
    for j in 0..dim {
        // orthogonalize twice for numerical safety
        for _ in 0..2 {
            for i in 0..j {
                let proj = crate::tensor::inner_product(&cols[i], &cols[j]);
                let qi = cols[i].clone();
                for (x, q) in cols[j].iter_mut().zip(&qi) {
                    *x -= proj * q;
                }
            }
        }
        let norm = crate::tensor::vec_norm(&cols[j]);
        for x in &mut cols[j] {
            *x /= norm;
        }
    }
    let mut m = ComplexOperator::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            m[(i, j)] = *v;
        }
    }
    m
}

/// A rank-1 variable whose basis is a random unitary's columns.
pub fn random_basis_variable(
    registry: &SystemRegistry,
    label: &str,
    targets: Vec<SystemId>,
    rng: &mut ChaCha8Rng,
) -> Result<Variable> {
    let dim: usize = targets.iter().map(|t| registry.dim(*t)).product();
    let u = random_unitary(dim, rng);
    let vectors = (0..dim)
        .map(|j| {
            let v: Vec<Complex64> = (0..dim).map(|i| u[(i, j)]).collect();
            (format!("v{j}"), v)
        })
        .collect();
    Variable::from_basis(registry, label, targets, vectors)
}

/// A random projector of the given rank from random orthonormal columns.
pub fn random_projector(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> ComplexOperator {
    assert!(rank <= dim);
    let u = random_unitary(dim, rng);
    let mut p = ComplexOperator::zeros(dim, dim);
    for j in 0..rank {
        for r in 0..dim {
            for c in 0..dim {
                p[(r, c)] += u[(r, j)] * u[(c, j)].conj();
            }
        }
    }
    p
}

/// Uniform sample in [min, max).
pub fn uniform(rng: &mut ChaCha8Rng, min: f64, max: f64) -> f64 {
    if max <= min {
        min
    } else {
        min + (max - min) * rng.random::<f64>()
    }
}
