//! Scalar performance functionals: SINR, sum-rate, the angle-estimation
//! CRB in its general and closed forms, the equivalent sensing objective,
//! beam patterns, and the rotation gain of a rotatable array.
//!
//! The closed-form CRB exploits the centered ULA layout: the derivative
//! norm collapses to `(2 pi / lambda)^2 cos^2 * D^2 M (M+1) / (12 (M-1))`,
//! leaving `CRB = chi / (cos^2(theta~) * a_T^H W a_T)` with a geometry
//! constant `chi`. Both routes are implemented and must agree on every
//! non-degenerate input.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::geometry::{effective_angle, ArrayGeometry};
use crate::{CMatrix, CVector};

/// Denominator threshold below which the CRB is reported as degenerate
/// instead of silently overflowing.
pub const CRB_DEGENERACY_THRESHOLD: f64 = 1e-30;

/// Fixed-array correlation threshold below which the rotation gain is
/// reported as unbounded (the reference beam sits on a pattern null).
pub const ROTATION_GAIN_NULL_THRESHOLD: f64 = 1e-12;

/// Per-user transmit beams plus the derived transmit covariance
/// `W = sum_k w_k w_k^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    beams: Vec<CVector>,
    covariance: CMatrix,
}

impl BeamformingSolution {
    /// Wrap a beam set and derive its covariance. All beams must share one
    /// length and at least one beam is required.
    pub fn new(beams: Vec<CVector>) -> Self {
        assert!(!beams.is_empty(), "at least one beam required");
        let m = beams[0].len();
        let mut covariance = CMatrix::zeros(m, m);
        for w in &beams {
            assert_eq!(w.len(), m, "beam length mismatch");
            covariance += w * w.adjoint();
        }
        Self { beams, covariance }
    }

    pub fn beams(&self) -> &[CVector] {
        &self.beams
    }

    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn covariance(&self) -> &CMatrix {
        &self.covariance
    }

    /// Total transmit power `sum_k ||w_k||^2 = trace(W)`.
    pub fn total_power(&self) -> f64 {
        self.beams.iter().map(|w| w.norm_squared()).sum()
    }

    /// Quadratic form `a^H W a`, real by Hermitian symmetry and clamped at
    /// zero against rounding.
    pub fn quadratic_form(&self, a: &CVector) -> f64 {
        let wa = &self.covariance * a;
        a.dotc(&wa).re.max(0.0)
    }
}

/// Objective weights `(comm, sense)` with `comm + sense = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightPairRepr", into = "WeightPairRepr")]
pub struct WeightPair {
    comm_weight: f64,
    sense_weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightPairRepr {
    comm_weight: f64,
    sense_weight: f64,
}

impl TryFrom<WeightPairRepr> for WeightPair {
    type Error = Error;

    fn try_from(repr: WeightPairRepr) -> Result<Self> {
        WeightPair::new(repr.comm_weight, repr.sense_weight)
    }
}

impl From<WeightPair> for WeightPairRepr {
    fn from(w: WeightPair) -> Self {
        WeightPairRepr {
            comm_weight: w.comm_weight,
            sense_weight: w.sense_weight,
        }
    }
}

impl WeightPair {
    pub fn new(comm_weight: f64, sense_weight: f64) -> Result<Self> {
        let in_range = (0.0..=1.0).contains(&comm_weight) && (0.0..=1.0).contains(&sense_weight);
        if !in_range || (comm_weight + sense_weight - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidWeights {
                comm: comm_weight,
                sense: sense_weight,
            });
        }
        Ok(Self {
            comm_weight,
            sense_weight,
        })
    }

    /// Weight pair `(w1, 1 - w1)`.
    pub fn from_comm(comm_weight: f64) -> Result<Self> {
        Self::new(comm_weight, 1.0 - comm_weight)
    }

    pub fn comm_only() -> Self {
        Self {
            comm_weight: 1.0,
            sense_weight: 0.0,
        }
    }

    pub fn sense_only() -> Self {
        Self {
            comm_weight: 0.0,
            sense_weight: 1.0,
        }
    }

    pub fn comm(&self) -> f64 {
        self.comm_weight
    }

    pub fn sense(&self) -> f64 {
        self.sense_weight
    }
}

/// SINR of one user under the given beams and rotation.
pub fn sinr(scenario: &Scenario, beams: &[CVector], user_index: usize, rotation: f64) -> Result<f64> {
    let h = scenario.user_channel(user_index, rotation)?;
    let noise = scenario.noise_powers[user_index];
    Ok(sinr_from_channel(&h, beams, user_index, noise))
}

/// SINR from a precomputed channel vector.
pub fn sinr_from_channel(h: &CVector, beams: &[CVector], user_index: usize, noise_power: f64) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (i, w) in beams.iter().enumerate() {
        let coupling = h.dotc(w).norm_sqr();
        if i == user_index {
            signal = coupling;
        } else {
            interference += coupling;
        }
    }
    signal / (interference + noise_power)
}

/// Achievable sum-rate `sum_k log2(1 + SINR_k)` in bits/s/Hz.
pub fn sum_rate(scenario: &Scenario, beams: &[CVector], rotation: f64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..scenario.num_users() {
        total += (1.0 + sinr(scenario, beams, k, rotation)?).log2();
    }
    Ok(total)
}

/// CRB evaluation outcome. Degenerate inputs (broadside-orthogonal target
/// or zero illumination) are tagged instead of overflowing so sweeps can
/// plot the singularity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crb {
    Finite(f64),
    Degenerate,
}

impl Crb {
    pub fn value(self) -> Option<f64> {
        match self {
            Crb::Finite(v) => Some(v),
            Crb::Degenerate => None,
        }
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self, Crb::Degenerate)
    }

    /// Collapse to `f64`, mapping the degenerate tag to `+inf`.
    pub fn as_f64(self) -> f64 {
        match self {
            Crb::Finite(v) => v,
            Crb::Degenerate => f64::INFINITY,
        }
    }
}

/// CRB for target-angle estimation evaluated from geometry primitives:
/// `1 / (2 T SNR_s ||da_R||^2 (a_T^H W a_T))`.
pub fn crb_direct(solution: &BeamformingSolution, scenario: &Scenario, rotation: f64) -> Crb {
    let angle = effective_angle(scenario.target.nominal_angle, rotation);
    let a_t = scenario.tx_geometry.steering_vector(angle);
    let illumination = solution.quadratic_form(&a_t);
    // Degeneracy is decided on cos^2 * illumination in both CRB routes so
    // that their flags always agree.
    if angle.radians().cos().powi(2) * illumination < CRB_DEGENERACY_THRESHOLD {
        return Crb::Degenerate;
    }
    let da = scenario.rx_geometry.steering_derivative(angle);
    let denom = 2.0
        * scenario.snapshots as f64
        * scenario.target.sensing_snr
        * da.norm_squared()
        * illumination;
    Crb::Finite(1.0 / denom)
}

/// Geometry constant of the closed-form CRB:
/// `chi = 3 lambda^2 (M_r - 1) / (2 pi^2 T SNR_s M_r (M_r + 1) D_r^2)`.
pub fn crb_chi(rx_geometry: &ArrayGeometry, snapshots: usize, sensing_snr: f64) -> f64 {
    let m = rx_geometry.num_elements() as f64;
    let lambda = rx_geometry.wavelength();
    let aperture = rx_geometry.aperture();
    3.0 * lambda * lambda * (m - 1.0)
        / (2.0 * PI * PI * snapshots as f64 * sensing_snr * m * (m + 1.0) * aperture * aperture)
}

/// Closed-form CRB `chi / (cos^2(theta~) * a_T^H W a_T)`; agrees with
/// [`crb_direct`] on every non-degenerate input.
pub fn crb_closed(solution: &BeamformingSolution, scenario: &Scenario, rotation: f64) -> Crb {
    let angle = effective_angle(scenario.target.nominal_angle, rotation);
    let a_t = scenario.tx_geometry.steering_vector(angle);
    let illumination = solution.quadratic_form(&a_t);
    let cos_sq = angle.radians().cos().powi(2);
    let denom = cos_sq * illumination;
    if denom < CRB_DEGENERACY_THRESHOLD {
        Crb::Degenerate
    } else {
        let chi = crb_chi(
            &scenario.rx_geometry,
            scenario.snapshots,
            scenario.target.sensing_snr,
        );
        Crb::Finite(chi / denom)
    }
}

/// Sensing objective `f_s = cos^2(theta~) * a_T^H W a_T`; maximizing it is
/// equivalent to minimizing the closed-form CRB.
pub fn sensing_objective(solution: &BeamformingSolution, scenario: &Scenario, rotation: f64) -> f64 {
    let angle = effective_angle(scenario.target.nominal_angle, rotation);
    let a_t = scenario.tx_geometry.steering_vector(angle);
    angle.radians().cos().powi(2) * solution.quadratic_form(&a_t)
}

/// Transmit beam pattern over a grid of effective spatial angles,
/// normalized by the grid maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    /// Normalized gains in `[0, 1]`, one per grid angle (raw gains if the
    /// covariance was all-zero).
    pub gains: Vec<f64>,
    /// False when the covariance was all-zero and normalization was
    /// skipped.
    pub normalized: bool,
}

/// Evaluate `a_T^H(theta~) W a_T(theta~)` per grid angle and normalize by
/// the grid maximum so the peak is exactly one. Grid angles are effective
/// spatial angles (rotation already folded in by the caller).
pub fn beam_pattern(
    solution: &BeamformingSolution,
    tx_geometry: &ArrayGeometry,
    effective_angle_grid: &[f64],
) -> BeamPattern {
    assert!(!effective_angle_grid.is_empty(), "empty angle grid");
    let raw: Vec<f64> = effective_angle_grid
        .iter()
        .map(|&angle| solution.quadratic_form(&tx_geometry.steering_vector(effective_angle(angle, 0.0))))
        .collect();
    let max = raw.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return BeamPattern {
            gains: raw,
            normalized: false,
        };
    }
    BeamPattern {
        gains: raw.iter().map(|g| g / max).collect(),
        normalized: true,
    }
}

/// Rotation-gain evaluation outcome; the ratio genuinely diverges when the
/// fixed array sits on a correlation null.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationGain {
    Finite(f64),
    Unbounded,
}

impl RotationGain {
    pub fn value(self) -> Option<f64> {
        match self {
            RotationGain::Finite(v) => Some(v),
            RotationGain::Unbounded => None,
        }
    }
}

/// `|sin(m x) / sin(x)|` with its limit `m` at the removable singularity.
fn dirichlet_magnitude(x: f64, m: usize) -> f64 {
    let s = x.sin();
    if s.abs() < 1e-12 {
        m as f64
    } else {
        ((m as f64 * x).sin() / s).abs()
    }
}

/// Steering-vector correlation magnitude `|a^H(angle0) a(angle1)|` of a
/// centered ULA via the Dirichlet kernel.
pub fn steering_correlation(
    angle0: f64,
    angle1: f64,
    num_elements: usize,
    spacing_wavelengths: f64,
) -> f64 {
    let x = PI * spacing_wavelengths * (angle1.sin() - angle0.sin());
    dirichlet_magnitude(x, num_elements)
}

/// Rotation gain of a rotatable array for a two-path channel:
/// the steering correlation of the rotated pair over the fixed pair.
pub fn rotation_gain(
    theta0: f64,
    theta1: f64,
    rotation: f64,
    num_elements: usize,
    spacing_wavelengths: f64,
) -> RotationGain {
    let fixed = steering_correlation(theta0, theta1, num_elements, spacing_wavelengths);
    if fixed < ROTATION_GAIN_NULL_THRESHOLD {
        return RotationGain::Unbounded;
    }
    let rotated = steering_correlation(
        theta0 + rotation,
        theta1 + rotation,
        num_elements,
        spacing_wavelengths,
    );
    RotationGain::Finite(rotated / fixed)
}

/// Maximum rotation gain and the rotation achieving it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxRotationGain {
    pub gain: RotationGain,
    /// Rotation aligning the pair midpoint with an odd multiple of pi/2,
    /// which drives the rotated correlation to exactly `M`; the candidate
    /// of smallest magnitude is returned.
    pub rotation: f64,
}

/// Closed-form maximum of the rotation gain over an unconstrained
/// rotation. With `z1 = (theta0 - theta1)/2` and `z2 = (theta0 + theta1)/2`
/// the maximum is `M / |a^H(theta0) a(theta1)|`, achieved at any rotation
/// with `rotation + z2` an odd multiple of `pi/2`.
pub fn max_rotation_gain(
    theta0: f64,
    theta1: f64,
    num_elements: usize,
    spacing_wavelengths: f64,
) -> MaxRotationGain {
    let half_sum = 0.5 * (theta0 + theta1);
    let rotation = smallest_odd_half_pi_shift(half_sum);
    if theta0 == theta1 {
        // Both correlations equal M for every rotation.
        return MaxRotationGain {
            gain: RotationGain::Finite(1.0),
            rotation: 0.0,
        };
    }
    let fixed = steering_correlation(theta0, theta1, num_elements, spacing_wavelengths);
    if fixed < ROTATION_GAIN_NULL_THRESHOLD {
        return MaxRotationGain {
            gain: RotationGain::Unbounded,
            rotation,
        };
    }
    MaxRotationGain {
        gain: RotationGain::Finite(num_elements as f64 / fixed),
        rotation,
    }
}

/// Smallest-magnitude `phi` with `phi + z` an odd multiple of `pi/2`; ties
/// resolve to the positive candidate.
fn smallest_odd_half_pi_shift(z: f64) -> f64 {
    let ratio = z / (PI / 2.0);
    let below = 2.0 * ((ratio - 1.0) / 2.0).floor() + 1.0;
    let above = below + 2.0;
    let phi_below = below * PI / 2.0 - z;
    let phi_above = above * PI / 2.0 - z;
    if phi_above.abs() <= phi_below.abs() {
        phi_above
    } else {
        phi_below
    }
}

/// Equivalent spatial aperture of the receive array toward the target:
/// `D_r * cos(theta + phi)`.
pub fn equivalent_aperture(theta: f64, rotation: f64, receive_aperture: f64) -> f64 {
    receive_aperture * (theta + rotation).cos()
}
