//! Phase-damping (pure dephasing) dynamics solved two ways.
//!
//! The master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] − (λ̇(t)/2) [H, [H, ρ]]
//! ```
//!
//! is evolved exactly in the energy eigenbasis ([`engine::evolve_exact`]) and,
//! independently, as the average of random unitary evolutions
//! `exp(−iH·X_t)` where `X_t = t + ∫₀ᵗ σ(s) dB_s` is a Gaussian "phase time"
//! built from Brownian motion ([`engine::evolve_mc`]). With `λ(t) = ∫₀ᵗ σ²`
//! both routes agree in expectation.
//!
//! On top of the engine, [`observables`] implements damped two-plane-wave
//! interference and the linear entropy of a Gaussian packet, and
//! [`profiles`] classifies decoherence profiles into the four asymptotic
//! regimes (sub-Markovian, Markovian, super-Markovian type I and II).
//!
//! Monte Carlo work is deterministic: every path draws from its own
//! ChaCha stream keyed by a [`stochastic::SeedSpec`], and per-chunk partial
//! results are merged in index order, so results are bit-identical for any
//! number of worker threads. See [`exec`].

pub mod engine;
pub mod error;
pub mod exec;
pub mod numerics;
pub mod observables;
pub mod profiles;
pub mod stochastic;

pub use engine::{DensityMatrix, Hamiltonian, MatrixEstimate};
pub use error::{Error, Result};
pub use exec::{EstimateWithError, Exec, McConfig};
pub use profiles::{DecoherenceProfile, Regime, RegimeClass};
pub use stochastic::{PhaseSampler, SeedSpec, TimeGrid};
