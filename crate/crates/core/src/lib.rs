//! Joint transmit-beamforming and array-rotation optimization for ISAC
//! base stations with a mechanically rotatable uniform linear array.
//!
//! The library models a monostatic base station that serves `K` downlink
//! users and senses one point target with the same transmit frame. Rotating
//! the whole array by an angle `phi` shifts every propagation path's
//! effective spatial angle, which adds one scalar degree of freedom on top
//! of the beamforming vectors. The crate provides:
//!
//! * [`geometry`]: centered ULA element placement, steering vectors and
//!   their angular derivatives;
//! * [`channel`]: multipath user channels, the round-trip sensing channel,
//!   and seeded random scenario generation;
//! * [`metrics`]: SINR, sum-rate, the angle-estimation CRB (general and
//!   closed form), the sensing objective, beam patterns, and the rotation
//!   gain of a rotatable array;
//! * [`solver`]: the fractional-programming block-coordinate-descent inner
//!   solver with closed-form block updates, plus MRT/ZF/sensing-optimal
//!   baselines;
//! * [`optimizer`]: 1D exhaustive rotation search wrapping the inner
//!   solver, and the sensing-only closed-form rotation rule;
//! * [`harness`]: seeded Monte Carlo experiment drivers (weight-sweep
//!   tradeoff, beam-pattern study) with CSV/JSON persistence.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod solver;

pub use channel::{
    draw_scenario, PathComponent, Scenario, ScenarioDistribution, SensingTargetSpec,
};
pub use error::{Error, Result};
pub use geometry::{effective_angle, ArrayGeometry, EffectiveAngle, RotationRegion};
pub use metrics::{BeamformingSolution, Crb, RotationGain, WeightPair};
pub use optimizer::RotationSearchResult;
pub use solver::{BcdSolve, BcdState, InitScheme, SolverOptions};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;

/// Complex column vector (steering vectors, channels, beams).
pub type CVector = nalgebra::DVector<Complex>;

/// Complex dense matrix (channel and covariance matrices).
pub type CMatrix = nalgebra::DMatrix<Complex>;
