//! Property tests for the engine invariants.

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use relfacts_core::decoherence::{EnvironmentModel, EnvironmentTemplate};
use relfacts_core::facts::{
    chain_probability, evolve, total_probability_audit, Probe, RelativeFact, Scenario,
};
use relfacts_core::random::{random_basis_variable, random_projector, random_state, random_unitary, rng};
use relfacts_core::scenarios;
use relfacts_core::spec::BuildOptions;
use relfacts_core::stability::{branch_decompose, epsilon, reduced_pointer_state, stability_bound};
use relfacts_core::system::{
    controlled_coupling, premeasurement_unitary, Interaction, Role, SystemRegistry, Variable,
};
use relfacts_core::tensor::{
    born_probability, embed, luders_update, tensor_product, trace_distance, ComplexOperator,
    DensityMatrix, StateVector,
};

fn random_operator(dim: usize, r: &mut rand_chacha::ChaCha8Rng) -> ComplexOperator {
    // random unitary scaled: bounded entries, exercises complex arithmetic
    random_unitary(dim, r)
}

fn random_density(registry: Arc<SystemRegistry>, r: &mut rand_chacha::ChaCha8Rng) -> DensityMatrix {
    // mixture of a few random pure states
    let dim = registry.total_dim();
    let mut m = ComplexOperator::zeros(dim, dim);
    let weights = [0.5, 0.3, 0.2];
    for w in weights {
        let psi = random_state(registry.clone(), r);
        let a = psi.amplitudes();
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] += Complex64::new(w, 0.0) * a[i] * a[j].conj();
            }
        }
    }
    DensityMatrix::from_operator(registry, m).expect("convex mixture of pure states")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// (A⊗B)(C⊗D) = (AC)⊗(BD) for random small operands.
    #[test]
    fn kron_mixed_product(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3) {
        let mut r = rng(seed);
        let a = random_operator(da, &mut r);
        let b = random_operator(db, &mut r);
        let c = random_operator(da, &mut r);
        let d = random_operator(db, &mut r);
        let lhs = tensor_product(&a, &b).unwrap().mul(&tensor_product(&c, &d).unwrap()).unwrap();
        let rhs = tensor_product(&a.mul(&c).unwrap(), &b.mul(&d).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12);
    }

    /// partial_trace(ρA ⊗ ρB, keep A) = ρA.
    #[test]
    fn partial_trace_inverts_tensor_product(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=4) {
        let mut r = rng(seed);
        let mut reg_a = SystemRegistry::new();
        reg_a.register("A", da, None).unwrap();
        let reg_a = Arc::new(reg_a);
        let mut reg_b = SystemRegistry::new();
        reg_b.register("B", db, None).unwrap();
        let reg_b = Arc::new(reg_b);
        let rho_a = random_density(reg_a, &mut r);
        let rho_b = random_density(reg_b, &mut r);

        let mut reg = SystemRegistry::new();
        let a = reg.register("A", da, None).unwrap();
        reg.register("B", db, None).unwrap();
        let reg = Arc::new(reg);
        let joint = DensityMatrix::from_operator(
            reg,
            tensor_product(rho_a.matrix(), rho_b.matrix()).unwrap(),
        )
        .unwrap();
        let reduced = joint.partial_trace(&[a]).unwrap();
        prop_assert!(reduced.matrix().sub(rho_a.matrix()).unwrap().max_abs() < 1e-12);
    }

    /// Born probabilities of a complete PVM sum to 1.
    #[test]
    fn pvm_probabilities_sum_to_one(seed in any::<u64>(), dim in 2usize..=5) {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        let s = reg.register("S", dim, None).unwrap();
        let var = random_basis_variable(&reg, "V", vec![s], &mut r).unwrap();
        let reg = Arc::new(reg);
        let psi = random_state(reg, &mut r);
        let total: f64 = var
            .outcomes()
            .iter()
            .map(|o| born_probability(&psi, o.projector()).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    /// A successful Lüders update returns a unit-norm state.
    #[test]
    fn luders_post_state_is_normalized(seed in any::<u64>(), dim in 2usize..=6, rank in 1usize..=3) {
        let mut r = rng(seed);
        let rank = rank.min(dim);
        let mut reg = SystemRegistry::new();
        reg.register("S", dim, None).unwrap();
        let reg = Arc::new(reg);
        let psi = random_state(reg, &mut r);
        let p = random_projector(dim, rank, &mut r);
        if let Ok((prob, post)) = luders_update(&psi, &p) {
            prop_assert!(prob > 0.0);
            prop_assert!((post.norm() - 1.0).abs() < 1e-10);
        }
    }

    /// Trace distance satisfies the triangle inequality.
    #[test]
    fn trace_distance_triangle(seed in any::<u64>(), dim in 2usize..=4) {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        reg.register("S", dim, None).unwrap();
        let reg = Arc::new(reg);
        let a = random_density(reg.clone(), &mut r);
        let b = random_density(reg.clone(), &mut r);
        let c = random_density(reg, &mut r);
        let ab = trace_distance(&a, &b).unwrap();
        let bc = trace_distance(&b, &c).unwrap();
        let ac = trace_distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - trace_distance(&b, &a).unwrap()).abs() < 1e-12);
    }

    /// ε stays in [0,1] and is invariant under a unitary acting on the
    /// environment factor of every branch.
    #[test]
    fn epsilon_range_and_env_unitary_invariance(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        let f = reg.register("F", 2, None).unwrap();
        let e = reg.register("E", 3, None).unwrap();
        let ptr = Variable::computational(&reg, "ptr", vec![f]).unwrap();
        let reg = Arc::new(reg);
        let psi = random_state(reg.clone(), &mut r);
        let rep = epsilon(&psi, &ptr).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&rep.epsilon));

        let u = random_unitary(3, &mut r);
        let rotated = psi.apply_local(&u, &[e]).unwrap();
        let rep2 = epsilon(&rotated, &ptr).unwrap();
        prop_assert!((rep.epsilon - rep2.epsilon).abs() < 1e-12);
    }

    /// Appending one more coupling never increases ε (angles in (0, π/2]).
    #[test]
    fn coupling_never_increases_epsilon(seed in any::<u64>(), n in 0usize..=3) {
        let mut r = rng(seed);
        let phi = relfacts_core::random::uniform(&mut r, 0.05, std::f64::consts::FRAC_PI_2);
        let template = EnvironmentTemplate::default();
        let model = EnvironmentModel::fixed(n, phi);
        let scenario = template.scenario(&model).unwrap();
        let lab = Variable::computational(
            scenario.registry(),
            "lab",
            vec![scenario.registry().id("S").unwrap(), scenario.registry().id("F").unwrap()],
        )
        .unwrap();
        let eps_n = epsilon(&evolve(&scenario).unwrap(), &lab).unwrap().epsilon;
        let bigger = template.scenario(&model.with_size(n + 1)).unwrap();
        let lab2 = Variable::computational(
            bigger.registry(),
            "lab",
            vec![bigger.registry().id("S").unwrap(), bigger.registry().id("F").unwrap()],
        )
        .unwrap();
        let eps_n1 = epsilon(&evolve(&bigger).unwrap(), &lab2).unwrap().epsilon;
        prop_assert!(eps_n1 <= eps_n + 1e-12);
    }

    /// Entrywise off-diagonal law |ρ_ij| ≤ |c_i||c_j|·√ε in the pointer basis.
    #[test]
    fn reduced_state_off_diagonal_law(seed in any::<u64>(), d_env in 2usize..=5) {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        let f = reg.register("F", 3, None).unwrap();
        reg.register("E", d_env, None).unwrap();
        let ptr = Variable::computational(&reg, "ptr", vec![f]).unwrap();
        let reg = Arc::new(reg);
        let psi = random_state(reg, &mut r);
        let decomp = branch_decompose(&psi, &ptr).unwrap();
        let eps = decomp.epsilon();
        let rho = reduced_pointer_state(&psi, &ptr).unwrap();
        let mags: Vec<f64> = decomp.branches().iter().map(|b| b.amplitude.norm()).collect();
        for i in 0..3 {
            // diagonal equals the branch weight
            prop_assert!((rho.matrix()[(i, i)].re - mags[i] * mags[i]).abs() < 1e-10);
            for j in 0..3 {
                if i != j {
                    prop_assert!(
                        rho.matrix()[(i, j)].norm() <= mags[i] * mags[j] * eps.sqrt() + 1e-10
                    );
                }
            }
        }
    }
}

/// Splitting a unitary step into two factors leaves chain probabilities alone.
#[test]
fn chain_probability_invariant_under_step_refinement() {
    for seed in 0..20u64 {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        let s = reg.register("S", 2, None).unwrap();
        let f = reg.register("F", 2, None).unwrap();
        let z = Variable::spin_z(&reg, "Z", s).unwrap();
        let pm = premeasurement_unitary(&reg, &z, f).unwrap();
        let u1 = random_unitary(2, &mut r);
        let u2 = random_unitary(2, &mut r);
        let u = u2.mul(&u1).unwrap();
        let whole = Interaction::unitary_on(&reg, "u", vec![s], u).unwrap();
        let part1 = Interaction::unitary_on(&reg, "u1", vec![s], u1).unwrap();
        let part2 = Interaction::unitary_on(&reg, "u2", vec![s], u2).unwrap();
        let reg = Arc::new(reg);
        let initial = random_state(reg.clone(), &mut r);

        let coarse = Scenario::new(reg.clone(), initial.clone(), vec![whole, pm.clone()]).unwrap();
        let fine = Scenario::new(reg, initial, vec![part1, part2, pm]).unwrap();
        for value in ["up", "down"] {
            let p1 = chain_probability(&coarse, &[RelativeFact::new(1, value)]).unwrap();
            let p2 = chain_probability(&fine, &[RelativeFact::new(2, value)]).unwrap();
            assert!((p1 - p2).abs() < 1e-12, "seed {seed}: {p1} vs {p2}");
        }
    }
}

/// The audit deviation is exactly the modulus of the interference cross
/// terms, checked against direct amplitude arithmetic on two-branch states.
#[test]
fn audit_deviation_equals_the_cross_term() {
    for seed in 0..25u64 {
        let mut r = rng(seed);
        // amplitudes and a couple of coupling angles
        let x: f64 = relfacts_core::random::uniform(&mut r, 0.1, 1.5);
        let (c0, c1) = (x.cos(), x.sin());
        let n_env = (seed % 3) as usize;
        let phi = relfacts_core::random::uniform(&mut r, 0.2, 1.3);

        let mut reg = SystemRegistry::new();
        let s = reg.register("S", 2, Some(Role::System)).unwrap();
        let f = reg.register("F", 2, Some(Role::Friend)).unwrap();
        let mut envs = Vec::new();
        for k in 0..n_env {
            envs.push(reg.register(&format!("E{k}"), 2, Some(Role::Environment)).unwrap());
        }
        let z = Variable::spin_z(&reg, "Z", s).unwrap();
        let ptr = Variable::computational(&reg, "ptr", vec![f]).unwrap();
        let mut interactions = vec![premeasurement_unitary(&reg, &z, f).unwrap()];
        for e in &envs {
            interactions.push(controlled_coupling(&reg, &ptr, *e, phi).unwrap());
        }
        let q = random_projector(4, 1 + (seed as usize % 3), &mut r);
        let probe_var = Variable::new(
            &reg,
            "Q",
            vec![s, f],
            vec![
                ("in".to_string(), q.clone()),
                (
                    "out".to_string(),
                    ComplexOperator::identity(4).sub(&q).unwrap(),
                ),
            ],
        )
        .unwrap();
        let reg = Arc::new(reg);
        let dim = reg.total_dim();
        let mut amps = vec![Complex64::ZERO; dim];
        amps[0] = Complex64::new(c0, 0.0);
        amps[reg.stride(s)] = Complex64::new(c1, 0.0);
        let initial = StateVector::from_amplitudes(reg.clone(), amps).unwrap();
        let scenario = Scenario::new(reg, initial, interactions).unwrap();
        let probe = Probe {
            variable: probe_var,
            value: "in".to_string(),
            context: "W".to_string(),
            position: scenario.interactions().len(),
        };
        let report = total_probability_audit(&scenario, &probe, 0).unwrap();

        // direct amplitude arithmetic: lab vectors |00⟩, |11⟩, env overlap cosⁿφ
        let q01 = q[(0, 3)];
        let env_overlap = phi.cos().powi(n_env as i32);
        let cross = 2.0 * (Complex64::new(c0, 0.0).conj() * Complex64::new(c1, 0.0) * q01
            * env_overlap)
            .re
            .abs();
        assert!(
            (report.deviation - cross).abs() < 1e-12,
            "seed {seed}: {} vs {cross}",
            report.deviation
        );
        assert!(report.deviation <= report.bound.unwrap() + 1e-10);
    }
}

/// Same-context audits are an identity: the dephased-density route and the
/// chain-sum route agree on randomized scenarios.
#[test]
fn same_context_audits_are_identities() {
    for seed in 0..30u64 {
        let (scenario, probe, step) = random_same_context_scenario(seed);
        let report = total_probability_audit(&scenario, &probe, step).unwrap();
        assert!(report.same_context);
        assert!(
            report.deviation < 1e-10,
            "seed {seed}: deviation {}",
            report.deviation
        );
    }
}

/// Random scenario with a random-basis premeasurement and surrounding random
/// unitaries; the probe shares the partition's context.
fn random_same_context_scenario(seed: u64) -> (Scenario, Probe, usize) {
    let mut r = rng(seed);
    let d_s = 2 + (seed % 3) as usize; // 2..=4
    let d_b = 2 + (seed % 2) as usize; // 2..=3
    let mut reg = SystemRegistry::new();
    let s = reg.register("A", d_s, None).unwrap();
    let b = reg.register("B", d_b, None).unwrap();
    let f = reg.register("F", d_s, None).unwrap();
    let var = random_basis_variable(&reg, "V", vec![s], &mut r).unwrap();
    let pre = Interaction::unitary_on(&reg, "pre", vec![s, b], random_unitary(d_s * d_b, &mut r))
        .unwrap();
    let pm = premeasurement_unitary(&reg, &var, f).unwrap();
    let post = Interaction::unitary_on(&reg, "post", vec![b, f], random_unitary(d_b * d_s, &mut r))
        .unwrap();
    let probe_var = random_basis_variable(&reg, "P", vec![s, b], &mut r).unwrap();
    let reg = Arc::new(reg);
    let initial = random_state(reg.clone(), &mut r);
    let scenario = Scenario::new(reg, initial, vec![pre, pm, post]).unwrap();
    let probe = Probe {
        variable: probe_var,
        value: "v0".to_string(),
        context: "F".to_string(),
        position: 3,
    };
    (scenario, probe, 1)
}

/// Cross-context deviations always respect the interference bound when the
/// probe stays inside the lab.
#[test]
fn audit_deviation_respects_the_bound_on_random_labs() {
    for seed in 100..160u64 {
        let mut r = rng(seed);
        let n_env = (seed % 4) as usize;
        let mut reg = SystemRegistry::new();
        let s = reg.register("S", 2, Some(Role::System)).unwrap();
        let f = reg.register("F", 2, Some(Role::Friend)).unwrap();
        let mut envs = Vec::new();
        for k in 0..n_env {
            envs.push(reg.register(&format!("E{k}"), 2, Some(Role::Environment)).unwrap());
        }
        let var = random_basis_variable(&reg, "V", vec![s], &mut r).unwrap();
        let ptr = Variable::computational(&reg, "ptr", vec![f]).unwrap();
        let mut interactions = vec![premeasurement_unitary(&reg, &var, f).unwrap()];
        for e in &envs {
            let phi = relfacts_core::random::uniform(&mut r, 0.0, std::f64::consts::PI);
            interactions.push(controlled_coupling(&reg, &ptr, *e, phi).unwrap());
        }
        let probe_var = random_basis_variable(&reg, "Q", vec![s, f], &mut r).unwrap();
        let reg = Arc::new(reg);
        let initial = random_state(reg.clone(), &mut r);
        let scenario = Scenario::new(reg, initial, interactions).unwrap();
        let probe = Probe {
            variable: probe_var,
            value: format!("v{}", seed % 4),
            context: "W".to_string(),
            position: scenario.interactions().len(),
        };
        let report = total_probability_audit(&scenario, &probe, 0).unwrap();
        let bound = report.bound.expect("lab probe");
        assert!(
            report.deviation <= bound + 1e-10,
            "seed {seed}: deviation {} > bound {bound}",
            report.deviation
        );
    }
}

/// Reconstruction inverts branch decomposition on random states.
#[test]
fn branch_reconstruction_matches_random_states() {
    for seed in 0..40u64 {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        let f = reg.register("F", 2 + (seed % 2) as usize, None).unwrap();
        reg.register("E", 4, None).unwrap();
        let ptr = Variable::computational(&reg, "ptr", vec![f]).unwrap();
        let reg = Arc::new(reg);
        let psi = random_state(reg, &mut r);
        let d = branch_decompose(&psi, &ptr).unwrap();
        let back = d.reconstruct().unwrap();
        for (x, y) in back.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((x - y).norm() < 1e-10, "seed {seed}");
        }
        assert!(stability_bound(&d) >= 0.0);
    }
}

/// The embedded-matrix route and the local-application route agree.
#[test]
fn embed_and_local_application_agree() {
    for seed in 0..15u64 {
        let mut r = rng(seed);
        let mut reg = SystemRegistry::new();
        reg.register("A", 2, None).unwrap();
        let b = reg.register("B", 3, None).unwrap();
        let c = reg.register("C", 2, None).unwrap();
        let u = random_unitary(6, &mut r);
        let reg = Arc::new(reg);
        let psi = random_state(reg.clone(), &mut r);
        // deliberately permuted target order (C before B)
        let targets = [c, b];
        let local = psi.apply_local(&u, &targets).unwrap();
        let full = embed(&u, &targets, &reg).unwrap();
        let direct = full.matvec(psi.amplitudes()).unwrap();
        for (x, y) in local.amplitudes().iter().zip(&direct) {
            assert!((x - y).norm() < 1e-12, "seed {seed}");
        }
    }
}

/// Built-in scenarios hold their qualitative guarantees over random angles.
#[test]
fn ewfs_bounds_hold_on_random_angles() {
    let root8 = 8f64.sqrt();
    for seed in 0..12u64 {
        let mut r = rng(seed);
        let angles = [
            relfacts_core::random::uniform(&mut r, 0.0, std::f64::consts::PI),
            relfacts_core::random::uniform(&mut r, 0.0, std::f64::consts::PI),
            relfacts_core::random::uniform(&mut r, 0.0, std::f64::consts::PI),
            relfacts_core::random::uniform(&mut r, 0.0, std::f64::consts::PI),
        ];
        let named = scenarios::ewfs_chsh(angles);
        let reports = scenarios::execute(&named, &BuildOptions::default()).unwrap();
        let chsh = reports
            .iter()
            .find_map(|rep| match &rep.payload {
                scenarios::ReportPayload::Chsh(c) => Some(c),
                _ => None,
            })
            .unwrap();
        assert!(chsh.quantum_chsh <= root8 + 1e-9, "seed {seed}");
        assert!(chsh.absoluteness_chsh <= 2.0 + 1e-9, "seed {seed}");
    }
}

/// Rotating the preparation of the friend's system sweeps the audit between
/// the eigenstate (no deviation) and balanced (maximal deviation) regimes.
#[test]
fn wigner_deviation_is_monotone_in_preparation_balance() {
    let mut last = -1.0f64;
    for k in 0..=8 {
        let alpha = k as f64 * std::f64::consts::FRAC_PI_4 / 8.0;
        let named = scenarios::wigners_friend(alpha);
        let reports = scenarios::execute(&named, &BuildOptions::default()).unwrap();
        let audit = reports
            .iter()
            .find_map(|rep| match &rep.payload {
                scenarios::ReportPayload::Audit(a) => Some(a),
                _ => None,
            })
            .unwrap();
        assert!(audit.deviation >= last - 1e-12);
        last = audit.deviation;
        let expected = (2.0 * alpha).sin() / 2.0;
        assert!((audit.deviation - expected).abs() < 1e-12);
    }
}
