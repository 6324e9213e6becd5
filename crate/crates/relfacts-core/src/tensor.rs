//! Dense complex linear algebra over labeled tensor factors.
//!
//! Everything is double-precision dense: operators are row-major matrices,
//! states are amplitude vectors over a [`SystemRegistry`]'s composite space.
//! The index convention is fixed once, here: the first registered system is
//! the most significant factor of the composite index (row-major multi-index).
//! All permutation logic lives in [`TargetIndexer`]; no other code is allowed
//! to do its own stride arithmetic.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::system::{SystemId, SystemRegistry};

/// Default cap on composite dimensions (states and materialized operators).
pub const DEFAULT_DIM_CAP: usize = 16_384;

/// Tolerance for structural validation (unitarity, projectors, norms, PVMs).
pub const VALIDATION_TOL: f64 = 1e-10;

/// Below this probability a Lüders update refuses to renormalize.
pub const ZERO_BRANCH_THRESHOLD: f64 = 1e-14;

/// Branch amplitudes at or below this are treated as null branches.
pub const NULL_BRANCH_THRESHOLD: f64 = 1e-12;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexOperator {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    /// Build from row-major complex entries.
    pub fn from_data(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Build a square matrix from row-major real/imaginary pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        let data = pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        Self::from_data(dim, dim, data)
    }

    /// A column vector (d×1), the vector form used by `tensor_product`.
    pub fn column_vector(entries: Vec<Complex64>) -> Self {
        let rows = entries.len();
        Self {
            rows,
            cols: 1,
            data: entries,
        }
    }

    /// Rank-1 projector |v⟩⟨v| from a unit vector.
    pub fn projector_onto(v: &[Complex64]) -> Self {
        let d = v.len();
        let mut m = Self::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = v[r] * v[c].conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimMismatch {
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimMismatch {
                expected: self.rows * self.cols,
                actual: rhs.rows * rhs.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::DimMismatch {
                expected: self.rows * self.cols,
                actual: rhs.rows * rhs.cols,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matvec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::DimMismatch {
                expected: self.cols,
                actual: x.len(),
            });
        }
        let mut y = vec![Complex64::ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = Complex64::ZERO;
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[r] = acc;
        }
        Ok(y)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// U†U = I within `tol` (max-abs entrywise).
    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let gram = self.adjoint().mul(self).expect("square");
        gram.max_abs_diff(&Self::identity(self.rows)) <= tol
    }

    /// P = P† and P² = P within `tol`.
    pub fn is_projector(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        if self.max_abs_diff(&self.adjoint()) > tol {
            return false;
        }
        let sq = self.mul(self).expect("square");
        sq.max_abs_diff(self) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn validate_unitary(&self, tol: f64) -> Result<()> {
        if self.is_unitary(tol) {
            Ok(())
        } else {
            Err(Error::validation("matrix is not unitary within tolerance"))
        }
    }

    pub fn validate_projector(&self, tol: f64) -> Result<()> {
        if self.is_projector(tol) {
            Ok(())
        } else {
            Err(Error::validation("matrix is not a projector within tolerance"))
        }
    }
}

impl std::ops::Index<(usize, usize)> for ComplexOperator {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexOperator {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Kronecker product with the default dimension cap.
///
/// Works for operators and for vectors represented as d×1 matrices; the
/// composite ordering is (a, b) with `a` most significant.
pub fn tensor_product(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    tensor_product_with_cap(a, b, DEFAULT_DIM_CAP)
}

/// Kronecker product against an explicit composite-dimension cap.
pub fn tensor_product_with_cap(
    a: &ComplexOperator,
    b: &ComplexOperator,
    cap: usize,
) -> Result<ComplexOperator> {
    let rows = a.rows.checked_mul(b.rows).unwrap_or(usize::MAX);
    let cols = a.cols.checked_mul(b.cols).unwrap_or(usize::MAX);
    if rows.max(cols) > cap {
        return Err(Error::capacity(rows.max(cols), cap, "tensor product"));
    }
    let mut out = ComplexOperator::zeros(rows, cols);
    for r1 in 0..a.rows {
        for c1 in 0..a.cols {
            let f = a[(r1, c1)];
            if f == Complex64::ZERO {
                continue;
            }
            for r2 in 0..b.rows {
                for c2 in 0..b.cols {
                    out[(r1 * b.rows + r2, c1 * b.cols + c2)] = f * b[(r2, c2)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of plain amplitude vectors.
pub fn kron_vectors(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

/// Precomputed index arithmetic for a subset of registry systems.
///
/// The target subspace is ordered as given (first listed target most
/// significant); the rest keeps registry order. This is the single place
/// where composite-index permutations are computed.
#[derive(Debug)]
pub struct TargetIndexer {
    /// Offsets of each target-subspace basis index into the full index.
    target_offsets: Vec<usize>,
    target_dim: usize,
    rest_dims: Vec<usize>,
    rest_strides: Vec<usize>,
    rest_count: usize,
}

impl TargetIndexer {
    pub fn new(registry: &SystemRegistry, targets: &[SystemId]) -> Result<Self> {
        for (i, t) in targets.iter().enumerate() {
            registry.check_id(*t)?;
            if targets[..i].contains(t) {
                return Err(Error::validation(format!(
                    "duplicate target system `{}`",
                    registry.label(*t)
                )));
            }
        }
        let target_dims: Vec<usize> = targets.iter().map(|t| registry.dim(*t)).collect();
        let target_dim: usize = target_dims.iter().product();

        // offsets of every target multi-index, target order most-significant-first
        let mut target_offsets = vec![0usize; target_dim.max(1)];
        for (m, off) in target_offsets.iter_mut().enumerate() {
            let mut rem = m;
            let mut acc = 0usize;
            for (j, t) in targets.iter().enumerate() {
                let block: usize = target_dims[j + 1..].iter().product();
                let idx = rem / block.max(1);
                rem %= block.max(1);
                acc += idx * registry.stride(*t);
            }
            *off = acc;
        }

        let mut rest_dims = Vec::new();
        let mut rest_strides = Vec::new();
        for id in registry.ids() {
            if !targets.contains(&id) {
                rest_dims.push(registry.dim(id));
                rest_strides.push(registry.stride(id));
            }
        }
        let rest_count = rest_dims.iter().product::<usize>().max(1);

        Ok(Self {
            target_offsets,
            target_dim,
            rest_dims,
            rest_strides,
            rest_count,
        })
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    pub fn rest_count(&self) -> usize {
        self.rest_count
    }

    pub fn target_offsets(&self) -> &[usize] {
        &self.target_offsets
    }

    /// Visit the base index of every configuration of the non-target systems.
    pub fn for_each_rest_base(&self, mut f: impl FnMut(usize)) {
        if self.rest_dims.is_empty() {
            f(0);
            return;
        }
        let n = self.rest_dims.len();
        let mut idx = vec![0usize; n];
        let mut base = 0usize;
        loop {
            f(base);
            // odometer increment, least significant system last
            let mut pos = n;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                idx[pos] += 1;
                base += self.rest_strides[pos];
                if idx[pos] < self.rest_dims[pos] {
                    break;
                }
                base -= idx[pos] * self.rest_strides[pos];
                idx[pos] = 0;
            }
        }
    }
}

/// Full-space operator acting as `op` on `targets` and identity elsewhere.
///
/// The registry ordering is respected: the permutation between the listed
/// target order and registry order is applied and undone internally.
pub fn embed(
    op: &ComplexOperator,
    targets: &[SystemId],
    registry: &SystemRegistry,
) -> Result<ComplexOperator> {
    let indexer = TargetIndexer::new(registry, targets)?;
    let k = indexer.target_dim();
    if !op.is_square() || op.rows() != k {
        return Err(Error::DimMismatch {
            expected: k,
            actual: op.rows(),
        });
    }
    let dim = registry.total_dim();
    if dim > registry.dim_cap() {
        return Err(Error::capacity(dim, registry.dim_cap(), "embed"));
    }
    let mut full = ComplexOperator::zeros(dim, dim);
    let offs = indexer.target_offsets();
    indexer.for_each_rest_base(|base| {
        for mr in 0..k {
            for mc in 0..k {
                let v = op[(mr, mc)];
                if v != Complex64::ZERO {
                    full[(base + offs[mr], base + offs[mc])] = v;
                }
            }
        }
    });
    Ok(full)
}

/// Unit-norm amplitude vector over a registry's composite space.
#[derive(Debug, Clone)]
pub struct StateVector {
    registry: Arc<SystemRegistry>,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state with the given level per system.
    pub fn basis(registry: Arc<SystemRegistry>, levels: &[usize]) -> Result<Self> {
        if levels.len() != registry.len() {
            return Err(Error::DimMismatch {
                expected: registry.len(),
                actual: levels.len(),
            });
        }
        let mut index = 0usize;
        for (id, &level) in registry.ids().zip(levels) {
            if level >= registry.dim(id) {
                return Err(Error::validation(format!(
                    "level {level} out of range for system `{}`",
                    registry.label(id)
                )));
            }
            index += level * registry.stride(id);
        }
        let mut amps = vec![Complex64::ZERO; registry.total_dim()];
        amps[index] = Complex64::ONE;
        Ok(Self { registry, amps })
    }

    /// Build from explicit amplitudes; the Euclidean norm must be 1 within 1e-10.
    pub fn from_amplitudes(registry: Arc<SystemRegistry>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != registry.total_dim() {
            return Err(Error::DimMismatch {
                expected: registry.total_dim(),
                actual: amps.len(),
            });
        }
        let norm = vec_norm(&amps);
        if (norm - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::validation(format!(
                "state norm {norm} differs from 1 beyond tolerance"
            )));
        }
        Ok(Self { registry, amps })
    }

    /// Build from arbitrary nonzero amplitudes, normalizing exactly.
    pub fn from_amplitudes_normalized(
        registry: Arc<SystemRegistry>,
        mut amps: Vec<Complex64>,
    ) -> Result<Self> {
        if amps.len() != registry.total_dim() {
            return Err(Error::DimMismatch {
                expected: registry.total_dim(),
                actual: amps.len(),
            });
        }
        let norm = vec_norm(&amps);
        if norm <= ZERO_BRANCH_THRESHOLD {
            return Err(Error::validation("cannot normalize a zero vector"));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { registry, amps })
    }

    pub fn registry(&self) -> &Arc<SystemRegistry> {
        &self.registry
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amps)
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(inner_product(&self.amps, &other.amps))
    }

    /// Apply a local operator on `targets`, identity elsewhere.
    pub fn apply_local(&self, op: &ComplexOperator, targets: &[SystemId]) -> Result<StateVector> {
        let mut out = self.clone();
        out.apply_local_in_place(op, targets)?;
        Ok(out)
    }

    pub(crate) fn apply_local_in_place(
        &mut self,
        op: &ComplexOperator,
        targets: &[SystemId],
    ) -> Result<()> {
        let indexer = TargetIndexer::new(&self.registry, targets)?;
        let k = indexer.target_dim();
        if !op.is_square() || op.rows() != k {
            return Err(Error::DimMismatch {
                expected: k,
                actual: op.rows(),
            });
        }
        let offs = indexer.target_offsets().to_vec();
        let mut x = vec![Complex64::ZERO; k];
        let amps = &mut self.amps;
        indexer.for_each_rest_base(|base| {
            for (m, off) in offs.iter().enumerate() {
                x[m] = amps[base + off];
            }
            for (r, off) in offs.iter().enumerate() {
                let mut acc = Complex64::ZERO;
                let row = &op.data[r * k..(r + 1) * k];
                for (a, b) in row.iter().zip(&x) {
                    acc += a * b;
                }
                amps[base + off] = acc;
            }
        });
        Ok(())
    }

    /// ⟨ψ| O_local |ψ⟩ for an operator acting on `targets`.
    pub fn expectation_local(&self, op: &ComplexOperator, targets: &[SystemId]) -> Result<Complex64> {
        let applied = self.apply_local(op, targets)?;
        self.inner(&applied)
    }

    /// Probability of a local projector; the real part clamped to [0, 1].
    pub fn probability_local(&self, projector: &ComplexOperator, targets: &[SystemId]) -> Result<f64> {
        let e = self.expectation_local(projector, targets)?;
        Ok(e.re.clamp(0.0, 1.0))
    }

    /// Lüders update with a local projector: (probability, renormalized post-state).
    pub fn project_local(
        &self,
        projector: &ComplexOperator,
        targets: &[SystemId],
    ) -> Result<(f64, StateVector)> {
        let mut post = self.apply_local(projector, targets)?;
        let norm = post.norm();
        let p = (norm * norm).clamp(0.0, 1.0);
        if p <= ZERO_BRANCH_THRESHOLD {
            return Err(Error::ZeroBranch { probability: p });
        }
        for a in &mut post.amps {
            *a /= norm;
        }
        Ok((p, post))
    }

    /// Pure-state density matrix |ψ⟩⟨ψ|.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.dim();
        let mut m = ComplexOperator::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = self.amps[r] * self.amps[c].conj();
            }
        }
        DensityMatrix {
            registry: self.registry.clone(),
            matrix: m,
        }
    }

    /// Reduced density matrix over `keep` (registry order), computed directly
    /// from the amplitudes without materializing the full |ψ⟩⟨ψ|.
    pub fn reduced_density(&self, keep: &[SystemId]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::validation("keep set must be nonempty"));
        }
        let keep = self.registry.canonical_order(keep)?;
        let indexer = TargetIndexer::new(&self.registry, &keep)?;
        let k = indexer.target_dim();
        let offs = indexer.target_offsets().to_vec();
        let mut m = ComplexOperator::zeros(k, k);
        let amps = &self.amps;
        indexer.for_each_rest_base(|base| {
            for (r, off_r) in offs.iter().enumerate() {
                let ar = amps[base + off_r];
                if ar == Complex64::ZERO {
                    continue;
                }
                for (c, off_c) in offs.iter().enumerate() {
                    m[(r, c)] += ar * amps[base + off_c].conj();
                }
            }
        });
        Ok(DensityMatrix {
            registry: Arc::new(self.registry.sub_registry(&keep)?),
            matrix: m,
        })
    }
}

/// Hermitian, PSD, unit-trace matrix over a registry's composite space.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    registry: Arc<SystemRegistry>,
    matrix: ComplexOperator,
}

impl DensityMatrix {
    /// Validating constructor: Hermitian and trace 1 within 1e-10,
    /// eigenvalues ≥ −1e-10.
    pub fn from_operator(registry: Arc<SystemRegistry>, matrix: ComplexOperator) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != registry.total_dim() {
            return Err(Error::DimMismatch {
                expected: registry.total_dim(),
                actual: matrix.rows(),
            });
        }
        if !matrix.is_hermitian(VALIDATION_TOL) {
            return Err(Error::validation("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > VALIDATION_TOL || tr.im.abs() > VALIDATION_TOL {
            return Err(Error::validation(format!(
                "density matrix trace {tr} differs from 1"
            )));
        }
        let eigs = hermitian_eigenvalues(&matrix)?;
        if eigs.iter().any(|&l| l < -VALIDATION_TOL) {
            return Err(Error::validation(
                "density matrix has a negative eigenvalue beyond tolerance",
            ));
        }
        Ok(Self { registry, matrix })
    }

    pub(crate) fn from_operator_unchecked(
        registry: Arc<SystemRegistry>,
        matrix: ComplexOperator,
    ) -> Self {
        debug_assert!(matrix.is_hermitian(1e-8));
        Self { registry, matrix }
    }

    pub fn registry(&self) -> &Arc<SystemRegistry> {
        &self.registry
    }

    pub fn matrix(&self) -> &ComplexOperator {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// ⟨v|ρ|v⟩ for a vector on the full space of this matrix.
    pub fn expectation_vector(&self, v: &[Complex64]) -> Result<f64> {
        let mv = self.matrix.matvec(v)?;
        Ok(inner_product(v, &mv).re)
    }

    /// Reduced matrix over the kept systems (registry order preserved).
    ///
    /// Trace and Hermiticity are preserved by construction.
    pub fn partial_trace(&self, keep: &[SystemId]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::validation("keep set must be nonempty"));
        }
        let keep = self.registry.canonical_order(keep)?;
        let indexer = TargetIndexer::new(&self.registry, &keep)?;
        let k = indexer.target_dim();
        let offs = indexer.target_offsets().to_vec();
        let mut m = ComplexOperator::zeros(k, k);
        indexer.for_each_rest_base(|base| {
            for (r, off_r) in offs.iter().enumerate() {
                for (c, off_c) in offs.iter().enumerate() {
                    m[(r, c)] += self.matrix[(base + off_r, base + off_c)];
                }
            }
        });
        Ok(DensityMatrix {
            registry: Arc::new(self.registry.sub_registry(&keep)?),
            matrix: m,
        })
    }
}

/// Born probability of a full-space projector: ⟨ψ|P|ψ⟩ clamped to [0, 1].
pub fn born_probability(state: &StateVector, projector: &ComplexOperator) -> Result<f64> {
    if !projector.is_square() || projector.rows() != state.dim() {
        return Err(Error::DimMismatch {
            expected: state.dim(),
            actual: projector.rows(),
        });
    }
    projector.validate_projector(VALIDATION_TOL)?;
    let pv = projector.matvec(state.amplitudes())?;
    let e = inner_product(state.amplitudes(), &pv);
    Ok(e.re.clamp(0.0, 1.0))
}

/// Lüders update with a full-space projector: (probability, post-state).
pub fn luders_update(
    state: &StateVector,
    projector: &ComplexOperator,
) -> Result<(f64, StateVector)> {
    luders_update_with_threshold(state, projector, ZERO_BRANCH_THRESHOLD)
}

/// Lüders update with an explicit zero-branch threshold.
pub fn luders_update_with_threshold(
    state: &StateVector,
    projector: &ComplexOperator,
    threshold: f64,
) -> Result<(f64, StateVector)> {
    if !projector.is_square() || projector.rows() != state.dim() {
        return Err(Error::DimMismatch {
            expected: state.dim(),
            actual: projector.rows(),
        });
    }
    projector.validate_projector(VALIDATION_TOL)?;
    let mut post = projector.matvec(state.amplitudes())?;
    let norm = vec_norm(&post);
    let p = (norm * norm).clamp(0.0, 1.0);
    if p <= threshold {
        return Err(Error::ZeroBranch { probability: p });
    }
    for a in &mut post {
        *a /= norm;
    }
    Ok((
        p,
        StateVector {
            registry: state.registry.clone(),
            amps: post,
        },
    ))
}

/// Trace distance ½‖ρ−σ‖₁ via the Hermitian eigenvalues of the difference.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    let diff = rho.matrix.sub(&sigma.matrix)?;
    let eigs = hermitian_eigenvalues(&diff)?;
    Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
}

/// Eigenvalues of a complex Hermitian matrix by cyclic Jacobi rotations.
///
/// Deterministic: fixed sweep order, fixed rotation convention. Returned
/// ascending.
pub fn hermitian_eigenvalues(m: &ComplexOperator) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::validation("eigenvalues need a square matrix"));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if !m.is_hermitian(1e-8) {
        return Err(Error::Numeric("matrix is not Hermitian".into()));
    }
    let mut a = m.clone();
    // symmetrize exactly so rounding in the input cannot bias rotations
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = 0.5 * (a[(r, c)] + a[(c, r)].conj());
            a[(r, c)] = avg;
            a[(c, r)] = avg.conj();
        }
        a[(r, r)] = Complex64::new(a[(r, r)].re, 0.0);
    }
    let scale = a.max_abs().max(1.0);
    let tol = 1e-14 * scale;
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= tol {
            let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
            eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
            return Ok(eigs);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / mag; // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // small root of t² − 2θt − 1 = 0, zeroing the (p,q) entry
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    -theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns: A ← A·U with U[p,p]=c, U[p,q]=−s·e^{iφ}, U[q,p]=s·e^{−iφ}, U[q,q]=c
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp + s * phase.conj() * akq;
                    a[(k, q)] = -s * phase * akp + c * akq;
                }
                // rows: A ← U†·A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk + s * phase * aqk;
                    a[(q, k)] = -s * phase.conj() * apk + c * aqk;
                }
                a[(p, q)] = Complex64::ZERO;
                a[(q, p)] = Complex64::ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    Err(Error::Numeric(
        "Jacobi eigensolver did not converge in 100 sweeps".into(),
    ))
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn inner_product(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::Role;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexOperator {
        ComplexOperator::from_pairs(2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)]).unwrap()
    }

    fn pauli_z() -> ComplexOperator {
        ComplexOperator::from_pairs(2, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)]).unwrap()
    }

    fn two_qubits() -> Arc<SystemRegistry> {
        let mut reg = SystemRegistry::new();
        reg.register("A", 2, Some(Role::System)).unwrap();
        reg.register("B", 2, Some(Role::Friend)).unwrap();
        Arc::new(reg)
    }

    fn bell_phi_plus(reg: Arc<SystemRegistry>) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(reg, vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
            .unwrap()
    }

    #[test]
    fn tensor_product_of_identities() {
        let i2 = ComplexOperator::identity(2);
        let out = tensor_product(&i2, &i2).unwrap();
        assert_eq!(out, ComplexOperator::identity(4));
    }

    #[test]
    fn tensor_product_of_basis_vectors() {
        let v0 = ComplexOperator::column_vector(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let v1 = ComplexOperator::column_vector(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let out = tensor_product(&v0, &v1).unwrap();
        assert_eq!(out.rows(), 4);
        assert_eq!(out.cols(), 1);
        let expect = [0.0, 1.0, 0.0, 0.0];
        for (i, e) in expect.iter().enumerate() {
            assert!((out[(i, 0)] - c(*e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_product_entry_matches_index_formula() {
        // brute-force oracle: (A⊗B)[i1·d+i2, j1·d+j2] = A[i1,j1]·B[i2,j2]
        let a = pauli_x();
        let b = pauli_z();
        let out = tensor_product(&a, &b).unwrap();
        for i1 in 0..2 {
            for i2 in 0..2 {
                for j1 in 0..2 {
                    for j2 in 0..2 {
                        let expect = a[(i1, j1)] * b[(i2, j2)];
                        assert!((out[(2 * i1 + i2, 2 * j1 + j2)] - expect).norm() < 1e-15);
                    }
                }
            }
        }
        // spot check: row 1, col 3
        assert!((out[(1, 3)] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn tensor_product_respects_cap() {
        let big = ComplexOperator::identity(200);
        let err = tensor_product_with_cap(&big, &big, 16_384).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn embed_applies_local_flip() {
        let reg = two_qubits();
        let b = reg.id("B").unwrap();
        let full = embed(&pauli_x(), &[b], &reg).unwrap();
        let s00 = StateVector::basis(reg.clone(), &[0, 0]).unwrap();
        let flipped = full.matvec(s00.amplitudes()).unwrap();
        // |00⟩ → |01⟩
        assert!((flipped[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(flipped[0].norm() < 1e-15 && flipped[2].norm() < 1e-15 && flipped[3].norm() < 1e-15);
    }

    #[test]
    fn embed_identity_is_global_identity() {
        let reg = two_qubits();
        let a = reg.id("A").unwrap();
        let full = embed(&ComplexOperator::identity(2), &[a], &reg).unwrap();
        assert_eq!(full, ComplexOperator::identity(4));
    }

    #[test]
    fn embed_target_order_matters_for_cnot() {
        // CNOT with control = first listed target
        let mut cnot = ComplexOperator::zeros(4, 4);
        cnot[(0, 0)] = c(1.0, 0.0);
        cnot[(1, 1)] = c(1.0, 0.0);
        cnot[(2, 3)] = c(1.0, 0.0);
        cnot[(3, 2)] = c(1.0, 0.0);
        let reg = two_qubits();
        let a = reg.id("A").unwrap();
        let b = reg.id("B").unwrap();
        let ab = embed(&cnot, &[a, b], &reg).unwrap();
        let ba = embed(&cnot, &[b, a], &reg).unwrap();

        // hand computation: |10⟩ = index 2; control A → flips B: |11⟩ = index 3
        let s10 = StateVector::basis(reg.clone(), &[1, 0]).unwrap();
        let out = ab.matvec(s10.amplitudes()).unwrap();
        assert!((out[3] - c(1.0, 0.0)).norm() < 1e-15);
        // control B on |10⟩: B = 0 → no flip
        let out = ba.matvec(s10.amplitudes()).unwrap();
        assert!((out[2] - c(1.0, 0.0)).norm() < 1e-15);

        // |01⟩ = index 1; control B → flips A: |11⟩
        let s01 = StateVector::basis(reg.clone(), &[0, 1]).unwrap();
        let out = ba.matvec(s01.amplitudes()).unwrap();
        assert!((out[3] - c(1.0, 0.0)).norm() < 1e-15);
        let out = ab.matvec(s01.amplitudes()).unwrap();
        assert!((out[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn embed_rejects_unknown_and_mismatched() {
        let reg = two_qubits();
        let a = reg.id("A").unwrap();
        assert!(embed(&ComplexOperator::identity(3), &[a], &reg).is_err());
        let bogus = SystemId::from_raw(7);
        assert!(embed(&ComplexOperator::identity(2), &[bogus], &reg).is_err());
    }

    #[test]
    fn apply_local_matches_embedded_matvec() {
        let reg = two_qubits();
        let b = reg.id("B").unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let had =
            ComplexOperator::from_pairs(2, &[(h, 0.0), (h, 0.0), (h, 0.0), (-h, 0.0)]).unwrap();
        let state = bell_phi_plus(reg.clone());
        let via_local = state.apply_local(&had, &[b]).unwrap();
        let full = embed(&had, &[b], &reg).unwrap();
        let via_full = full.matvec(state.amplitudes()).unwrap();
        for (x, y) in via_local.amplitudes().iter().zip(&via_full) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let reg = two_qubits();
        let rho = StateVector::basis(reg.clone(), &[0, 0]).unwrap().to_density();
        let a = reg.id("A").unwrap();
        let red = rho.partial_trace(&[a]).unwrap();
        assert!((red.matrix()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(red.matrix()[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let reg = two_qubits();
        let rho = bell_phi_plus(reg.clone()).to_density();
        let a = reg.id("A").unwrap();
        let red = rho.partial_trace(&[a]).unwrap();
        assert!((red.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((red.matrix()[(1, 1)].re - 0.5).abs() < 1e-12);
        assert!(red.matrix()[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_index_summation_oracle() {
        // random 2⊗3 state, oracle: ρ_keep[a,b] = Σ_k ψ[a,k]·conj(ψ[b,k])
        let mut reg = SystemRegistry::new();
        let a = reg.register("A", 2, None).unwrap();
        reg.register("B", 3, None).unwrap();
        let reg = Arc::new(reg);
        let raw: Vec<Complex64> = (0..6)
            .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.61).cos()))
            .collect();
        let state = StateVector::from_amplitudes_normalized(reg.clone(), raw).unwrap();
        let red = state.to_density().partial_trace(&[a]).unwrap();
        let psi = state.amplitudes();
        for r in 0..2 {
            for cc in 0..2 {
                let mut acc = Complex64::ZERO;
                for k in 0..3 {
                    acc += psi[r * 3 + k] * psi[cc * 3 + k].conj();
                }
                assert!((red.matrix()[(r, cc)] - acc).norm() < 1e-12);
            }
        }
        // and the state-based reduction agrees with the matrix-based one
        let red2 = state.reduced_density(&[a]).unwrap();
        for r in 0..2 {
            for cc in 0..2 {
                assert!((red.matrix()[(r, cc)] - red2.matrix()[(r, cc)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_rejects_empty_keep() {
        let reg = two_qubits();
        let rho = bell_phi_plus(reg).to_density();
        assert!(rho.partial_trace(&[]).is_err());
    }

    #[test]
    fn born_probability_identity_and_plus_state() {
        let mut reg = SystemRegistry::new();
        reg.register("S", 2, None).unwrap();
        let reg = Arc::new(reg);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            StateVector::from_amplitudes(reg.clone(), vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        assert!((born_probability(&plus, &ComplexOperator::identity(2)).unwrap() - 1.0).abs() < 1e-12);
        let p0 = ComplexOperator::projector_onto(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((born_probability(&plus, &p0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn born_probability_spin_angle_law() {
        // projector onto spin-θ up applied to spin-z up gives cos²(θ/2)
        let mut reg = SystemRegistry::new();
        reg.register("S", 2, None).unwrap();
        let reg = Arc::new(reg);
        let up = StateVector::basis(reg.clone(), &[0]).unwrap();
        for k in 0..16 {
            let theta = k as f64 * std::f64::consts::PI / 8.0;
            let v = [c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)];
            let p = ComplexOperator::projector_onto(&v);
            let got = born_probability(&up, &p).unwrap();
            let want = (theta / 2.0).cos().powi(2);
            assert!((got - want).abs() < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn born_probability_rejects_non_projector() {
        let mut reg = SystemRegistry::new();
        reg.register("S", 2, None).unwrap();
        let reg = Arc::new(reg);
        let up = StateVector::basis(reg, &[0]).unwrap();
        assert!(born_probability(&up, &pauli_x()).is_err());
    }

    #[test]
    fn luders_update_on_plus_state() {
        let mut reg = SystemRegistry::new();
        reg.register("S", 2, None).unwrap();
        let reg = Arc::new(reg);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(reg, vec![c(h, 0.0), c(h, 0.0)]).unwrap();
        let p0 = ComplexOperator::projector_onto(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let (p, post) = luders_update(&plus, &p0).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((post.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-12);
        // idempotence: repeating the projector gives probability 1
        let (p2, _) = luders_update(&post, &p0).unwrap();
        assert!((p2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn luders_update_on_bell_state() {
        let reg = two_qubits();
        let a = reg.id("A").unwrap();
        let bell = bell_phi_plus(reg.clone());
        let p0 = ComplexOperator::projector_onto(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let full = embed(&p0, &[a], &reg).unwrap();
        let (p, post) = luders_update(&bell, &full).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((post.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn luders_update_zero_branch_errors() {
        let mut reg = SystemRegistry::new();
        reg.register("S", 2, None).unwrap();
        let reg = Arc::new(reg);
        let up = StateVector::basis(reg, &[0]).unwrap();
        let p1 = ComplexOperator::projector_onto(&[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            luders_update(&up, &p1),
            Err(Error::ZeroBranch { .. })
        ));
    }

    #[test]
    fn trace_distance_basics() {
        let mut reg = SystemRegistry::new();
        reg.register("S", 2, None).unwrap();
        let reg = Arc::new(reg);
        let zero = StateVector::basis(reg.clone(), &[0]).unwrap().to_density();
        let one = StateVector::basis(reg.clone(), &[1]).unwrap().to_density();
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-12);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVector::from_amplitudes(reg, vec![c(h, 0.0), c(h, 0.0)])
            .unwrap()
            .to_density();
        // pure-state closed form √(1 − |⟨0|+⟩|²) = √(1/2)
        assert!((trace_distance(&zero, &plus).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eigenvalues_of_known_matrices() {
        let eigs = hermitian_eigenvalues(&pauli_x()).unwrap();
        assert!((eigs[0] + 1.0).abs() < 1e-12 && (eigs[1] - 1.0).abs() < 1e-12);

        // a 3×3 complex Hermitian check against trace and Frobenius identities
        let m = ComplexOperator::from_data(
            3,
            3,
            vec![
                c(2.0, 0.0), c(0.3, 0.4), c(0.0, -1.0),
                c(0.3, -0.4), c(-1.0, 0.0), c(0.5, 0.2),
                c(0.0, 1.0), c(0.5, -0.2), c(0.5, 0.0),
            ],
        )
        .unwrap();
        let eigs = hermitian_eigenvalues(&m).unwrap();
        let tr: f64 = eigs.iter().sum();
        assert!((tr - 1.5).abs() < 1e-10);
        let frob: f64 = m.data().iter().map(|z| z.norm_sqr()).sum();
        let sumsq: f64 = eigs.iter().map(|l| l * l).sum();
        assert!((frob - sumsq).abs() < 1e-9);
    }

    #[test]
    fn density_matrix_validation_rejects_bad_inputs() {
        let reg = {
            let mut r = SystemRegistry::new();
            r.register("S", 2, None).unwrap();
            Arc::new(r)
        };
        // not unit trace
        let m = ComplexOperator::identity(2);
        assert!(DensityMatrix::from_operator(reg.clone(), m).is_err());
        // not PSD
        let m = ComplexOperator::from_pairs(
            2,
            &[(1.5, 0.0), (0.0, 0.0), (0.0, 0.0), (-0.5, 0.0)],
        )
        .unwrap();
        assert!(DensityMatrix::from_operator(reg.clone(), m).is_err());
        // valid
        let m = ComplexOperator::from_pairs(2, &[(0.5, 0.0), (0.0, 0.0), (0.0, 0.0), (0.5, 0.0)])
            .unwrap();
        assert!(DensityMatrix::from_operator(reg, m).is_ok());
    }

    #[test]
    fn state_vector_norm_is_validated() {
        let reg = {
            let mut r = SystemRegistry::new();
            r.register("S", 2, None).unwrap();
            Arc::new(r)
        };
        let bad = StateVector::from_amplitudes(reg, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(bad.is_err());
    }
}
