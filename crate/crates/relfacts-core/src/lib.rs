//! Dense simulator for relative-fact and stable-fact quantum scenarios.
//!
//! The crate separates cleanly into:
//! - [`tensor`]: dense complex linear algebra over labeled tensor factors;
//! - [`system`]: registries of named systems, projective variables, and the
//!   premeasurement / environment-coupling interaction builders;
//! - [`facts`]: the probability engine — Lüders chains relative to a chosen
//!   context, total-probability audits, and the quantum-logic witness;
//! - [`stability`]: branch decompositions, the ε overlap measure, reduced
//!   pointer states, and the interference bound;
//! - [`decoherence`]: parameterized environment models and sweeps;
//! - [`scenarios`]: the five built-in named scenarios and their report plans;
//! - [`spec`]: a declarative scenario description that builds all of the above
//!   (the CLI's file format and the round-trip target for built-ins).
//!
//! ```
//! use std::sync::Arc;
//! use num_complex::Complex64;
//! use relfacts_core::facts::{total_probability_audit, Probe, Scenario};
//! use relfacts_core::system::{premeasurement_unitary, SystemRegistry, Variable};
//! use relfacts_core::tensor::StateVector;
//!
//! # fn main() -> relfacts_core::Result<()> {
//! let mut reg = SystemRegistry::new();
//! let s = reg.register("S", 2, None)?;
//! let f = reg.register("F", 2, None)?;
//! let z = Variable::spin_z(&reg, "Z", s)?;
//! let premeasure = premeasurement_unitary(&reg, &z, f)?;
//! let bell = Variable::bell(&reg, "bell", [s, f])?;
//! let reg = Arc::new(reg);
//!
//! let h = std::f64::consts::FRAC_1_SQRT_2;
//! let zero = Complex64::ZERO;
//! let plus = StateVector::from_amplitudes(
//!     reg.clone(),
//!     vec![Complex64::new(h, 0.0), zero, Complex64::new(h, 0.0), zero],
//! )?;
//! let scenario = Scenario::new(reg, plus, vec![premeasure])?;
//! let probe = Probe {
//!     variable: bell,
//!     value: "phi+".into(),
//!     context: "W".into(),
//!     position: 1,
//! };
//! let report = total_probability_audit(&scenario, &probe, 0)?;
//! assert!((report.lhs - 1.0).abs() < 1e-12); // unitary route
//! assert!((report.rhs - 0.5).abs() < 1e-12); // friend's-facts route
//! # Ok(())
//! # }
//! ```

pub mod decoherence;
pub mod error;
pub mod facts;
pub mod random;
pub mod scenarios;
pub mod spec;
pub mod stability;
pub mod system;
pub mod tensor;

pub use error::{Error, Result};
