//! Linear multistep methods (LMMs) repurposed for dynamics discovery.
//!
//! Classically, an LMM steps a known dynamics function forward in time to
//! produce the state. This crate works the inverse direction: given the state
//! sampled on an equidistant grid, it solves the LMM relation for the dynamics
//! values themselves. The two problems share truncation error but *not*
//! stability: discovery is governed by root conditions on the (reduced)
//! second characteristic polynomial, and schemes that are perfectly good time
//! integrators can amplify discovery errors exponentially.
//!
//! The crate provides:
//!
//! - [`schemes`]: exact rational coefficients for the Adams-Bashforth,
//!   Adams-Moulton, and BDF families at arbitrary step count up to 20;
//! - [`analysis`]: characteristic polynomials, complex root finding with
//!   multiplicities, graded root-condition classification
//!   (stable / marginally stable / weakly stable / unstable), truncation-error
//!   constants, and companion-matrix power norms;
//! - [`discovery`]: assembly and banded forward-substitution solve of the
//!   discovery linear system `B f_hat = h^-1 A x - g_hat`;
//! - [`reference`](mod@reference): ground-truth trajectories (fixed-step RK4 with a
//!   Richardson self-check) and exact dynamics for benchmark systems;
//! - [`experiments`]: mesh-refinement convergence studies and long-time
//!   fixed-mesh studies, with empirical order estimation;
//! - [`cli`]: the `lmm-discover` command-line front end.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --example generate_schemes
//! cargo run --example analyze_stability
//! cargo run --example discover_dynamics
//! cargo run --example convergence_study
//! cargo run --example longtime_study
//! ```

pub mod analysis;
pub mod cli;
pub mod discovery;
mod error;
pub mod experiments;
pub mod rational;
pub mod reference;
pub mod schemes;

pub use error::{Error, Result};
