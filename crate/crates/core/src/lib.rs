//! Delay-dependent stability certificates for discrete-time linear systems
//! with an interval time-varying delay,
//!
//! ```text
//! x(k+1) = A x(k) + A_d x(k − h(k)),   h₁ ≤ h(k) ≤ h₂.
//! ```
//!
//! - [`summation`]: Jensen summation inequalities and their refined lower bounds.
//! - [`lmi`]: the block matrices `Π(h)` and the coupled RCC block.
//! - [`sdp`]: feasibility problem, solver adapter and independent verification.
//! - [`analysis`]: search for the largest admissible `h₂`.
//! - [`simulate`]: trajectories, the augmented vector `ζ₀(k)` and the functional `V`.
//! - [`certificate`]: JSON certificates.

pub mod analysis;
pub mod certificate;
pub mod error;
pub mod lmi;
pub mod numeric;
pub mod sdp;
pub mod simulate;
pub mod summation;

pub use error::{Error, Result};
pub use lmi::{DelaySystem, LkfVariables, XStructure};
pub use sdp::{SolverStatus, StabilityCertificate};

/// Bundled example systems.
pub mod examples {
    use nalgebra::DMatrix;

    use crate::error::Result;
    use crate::lmi::DelaySystem;

    /// Two-state benchmark system used for the delay-bound tables.
    pub fn benchmark(h1: usize, h2: usize) -> Result<DelaySystem> {
        DelaySystem::new(
            DMatrix::from_row_slice(2, 2, &[0.8, 0.0, 0.05, 0.9]),
            DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, -0.2, -0.1]),
            h1,
            h2,
        )
    }

    /// Discretized two-body satellite (10 ms sampling).
    pub fn satellite_a() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, 0.01, 0.0, //
                0.0, 1.0, 0.0, 0.01, //
                -0.009, 0.009, 0.9996, 0.0004, //
                0.009, -0.009, 0.0004, 0.9996,
            ],
        )
    }

    pub fn satellite_b() -> DMatrix<f64> {
        DMatrix::from_row_slice(4, 1, &[0.0, 0.0, 0.01, 0.0])
    }

    /// Delayed state-feedback gain `u(k) = K x(k − h(k))`.
    pub fn satellite_gain() -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 4, &[0.1284, -0.1380, -0.3049, 0.0522])
    }

    /// Closed loop with `A_d = B K`.
    pub fn satellite(h1: usize, h2: usize) -> Result<DelaySystem> {
        DelaySystem::new(satellite_a(), satellite_b() * satellite_gain(), h1, h2)
    }
}
