//! Uniform-linear-array element placement, array rotation, and steering
//! vectors.
//!
//! Elements are centered on the array midpoint, so the offset of element
//! `m` (1-based) is `(m-1)*D/(M-1) - D/2` with aperture `D = (M-1)*d`.
//! Rotating the whole array by `phi` turns a nominal spatial angle `theta`
//! into the effective angle `theta + phi`; steering vectors are always
//! evaluated at effective angles.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CVector, Complex};

/// Effective spatial angle after array rotation (radians).
///
/// Stored as-is: no wrap-around into `(-pi, pi]` is applied, because the
/// admissible rotation regions and angle distributions used here never
/// wrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveAngle(pub f64);

impl EffectiveAngle {
    pub fn radians(self) -> f64 {
        self.0
    }
}

/// Effective spatial angle of a path: nominal angle plus array rotation.
pub fn effective_angle(nominal: f64, rotation: f64) -> EffectiveAngle {
    EffectiveAngle(nominal + rotation)
}

/// Centered element offsets along the array axis.
///
/// Offset `m` (1-based) is `(m-1)*D/(M-1) - D/2` with `D = (M-1)*spacing`,
/// which is an arithmetic progression from `-D/2` to `+D/2` symmetric about
/// zero. Rejects `num_elements < 2` since the aperture is then undefined.
pub fn element_offsets(num_elements: usize, spacing: f64) -> Result<Vec<f64>> {
    if num_elements < 2 {
        return Err(Error::TooFewElements(num_elements));
    }
    let aperture = (num_elements - 1) as f64 * spacing;
    Ok((0..num_elements)
        .map(|m| m as f64 * spacing - aperture / 2.0)
        .collect())
}

/// A uniform linear array that can be rotated as a whole.
///
/// Offsets are precomputed at construction; steering evaluation is a pure
/// function of the cached offsets. Serialization carries only the three
/// construction parameters and rebuilds the offsets on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArrayGeometryRepr", into = "ArrayGeometryRepr")]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing: f64,
    wavelength: f64,
    offsets: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayGeometryRepr {
    num_elements: usize,
    spacing: f64,
    wavelength: f64,
}

impl TryFrom<ArrayGeometryRepr> for ArrayGeometry {
    type Error = Error;

    fn try_from(repr: ArrayGeometryRepr) -> Result<Self> {
        ArrayGeometry::new(repr.num_elements, repr.spacing, repr.wavelength)
    }
}

impl From<ArrayGeometry> for ArrayGeometryRepr {
    fn from(geom: ArrayGeometry) -> Self {
        ArrayGeometryRepr {
            num_elements: geom.num_elements,
            spacing: geom.spacing,
            wavelength: geom.wavelength,
        }
    }
}

impl ArrayGeometry {
    /// Build an array of `num_elements` with the given element spacing and
    /// carrier wavelength (both in the same length unit).
    pub fn new(num_elements: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        if !(spacing > 0.0) || !(wavelength > 0.0) {
            return Err(Error::InvalidScenario(format!(
                "spacing and wavelength must be positive (got {spacing}, {wavelength})"
            )));
        }
        let offsets = element_offsets(num_elements, spacing)?;
        Ok(Self {
            num_elements,
            spacing,
            wavelength,
            offsets,
        })
    }

    /// Half-wavelength spaced array at unit wavelength, the default layout.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5, 1.0)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Signed element offsets from the array center, strictly increasing.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Aperture `D = (M-1)*spacing`.
    pub fn aperture(&self) -> f64 {
        (self.num_elements - 1) as f64 * self.spacing
    }

    /// Wavenumber `2*pi/lambda`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Steering vector at an effective angle: entry `m` is
    /// `exp(j*(2*pi/lambda)*d_m*sin(angle))`. Each entry has unit modulus,
    /// so the squared norm is exactly `M`.
    pub fn steering_vector(&self, angle: EffectiveAngle) -> CVector {
        let phase_scale = self.wavenumber() * angle.radians().sin();
        CVector::from_iterator(
            self.num_elements,
            self.offsets
                .iter()
                .map(|&d| Complex::from_polar(1.0, phase_scale * d)),
        )
    }

    /// Derivative of the steering vector with respect to the effective
    /// angle: entry `m` is `j*(2*pi/lambda)*cos(angle)*d_m` times the
    /// steering entry.
    pub fn steering_derivative(&self, angle: EffectiveAngle) -> CVector {
        let k = self.wavenumber();
        let (sin_a, cos_a) = angle.radians().sin_cos();
        let phase_scale = k * sin_a;
        CVector::from_iterator(
            self.num_elements,
            self.offsets.iter().map(|&d| {
                Complex::i() * (k * cos_a * d) * Complex::from_polar(1.0, phase_scale * d)
            }),
        )
    }

    /// Squared norm of the steering derivative in closed form:
    /// `(2*pi/lambda)^2 * cos^2(angle) * D^2 * M*(M+1) / (12*(M-1))`.
    ///
    /// Equals the direct summation `(2*pi/lambda)^2 cos^2 * sum_m d_m^2`
    /// for the centered layout and feeds the closed-form CRB.
    pub fn derivative_norm_squared(&self, angle: EffectiveAngle) -> f64 {
        let m = self.num_elements as f64;
        let k = self.wavenumber();
        let cos_a = angle.radians().cos();
        let d2 = self.aperture().powi(2);
        k * k * cos_a * cos_a * d2 * m * (m + 1.0) / (12.0 * (m - 1.0))
    }
}

/// Closed admissible interval for the array rotation angle (radians).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationRegion {
    pub min: f64,
    pub max: f64,
}

impl RotationRegion {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= max) {
            return Err(Error::InvalidScenario(format!(
                "rotation region must satisfy min <= max (got [{min}, {max}])"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, phi: f64) -> bool {
        self.min <= phi && phi <= self.max
    }

    pub fn clamp(&self, phi: f64) -> f64 {
        phi.clamp(self.min, self.max)
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    #[test]
    fn offsets_two_elements() {
        let offsets = element_offsets(2, 0.5).unwrap();
        assert_eq!(offsets, vec![-0.25, 0.25]);
    }

    #[test]
    fn offsets_sixteen_elements_arithmetic_progression() {
        let offsets = element_offsets(16, 0.5).unwrap();
        assert_eq!(offsets.len(), 16);
        assert_abs_diff_eq!(offsets[0], -3.75, epsilon = 1e-15);
        assert_abs_diff_eq!(offsets[15], 3.75, epsilon = 1e-15);
        for w in offsets.windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 0.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn offsets_odd_count_has_center_element_at_zero() {
        let offsets = element_offsets(3, 0.5).unwrap();
        assert_eq!(offsets, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn offsets_symmetric_about_zero() {
        for m in [2, 5, 16, 33] {
            let offsets = element_offsets(m, 0.5).unwrap();
            for i in 0..m {
                assert_abs_diff_eq!(offsets[i], -offsets[m - 1 - i], epsilon = 1e-15);
            }
            assert_abs_diff_eq!(
                offsets[m - 1] - offsets[0],
                (m - 1) as f64 * 0.5,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn offsets_reject_degenerate_array() {
        assert!(matches!(
            element_offsets(1, 0.5),
            Err(Error::TooFewElements(1))
        ));
        assert!(ArrayGeometry::half_wavelength(0).is_err());
    }

    #[test]
    fn effective_angle_sums() {
        assert_abs_diff_eq!(effective_angle(FRAC_PI_6, -FRAC_PI_6).radians(), 0.0);
        assert_abs_diff_eq!(effective_angle(0.0, 0.0).radians(), 0.0);
        assert_abs_diff_eq!(
            effective_angle(FRAC_PI_4, PI / 12.0).radians(),
            PI / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn steering_at_broadside_is_all_ones() {
        let geom = ArrayGeometry::half_wavelength(7).unwrap();
        let a = geom.steering_vector(EffectiveAngle(0.0));
        for entry in a.iter() {
            assert_abs_diff_eq!(entry.re, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(entry.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn steering_two_elements_endfire() {
        let geom = ArrayGeometry::half_wavelength(2).unwrap();
        let a = geom.steering_vector(EffectiveAngle(FRAC_PI_2));
        // offsets are -/+ lambda/4, so the phases are -/+ pi/2.
        assert_abs_diff_eq!(a[0].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[0].im, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].im, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn steering_norm_is_element_count() {
        let geom = ArrayGeometry::half_wavelength(16).unwrap();
        let a = geom.steering_vector(EffectiveAngle(FRAC_PI_6));
        for entry in a.iter() {
            assert_relative_eq!(entry.norm(), 1.0, max_relative = 1e-15);
        }
        assert_relative_eq!(a.norm_squared(), 16.0, max_relative = 1e-15);
    }

    #[test]
    fn derivative_vanishes_at_endfire() {
        let geom = ArrayGeometry::half_wavelength(9).unwrap();
        let da = geom.steering_derivative(EffectiveAngle(FRAC_PI_2));
        assert!(da.norm() < 1e-12);
    }

    #[test]
    fn derivative_two_elements_broadside() {
        let geom = ArrayGeometry::half_wavelength(2).unwrap();
        let da = geom.steering_derivative(EffectiveAngle(0.0));
        // j * 2*pi * (-/+0.25) * 1 = -/+ j*pi/2 for unit wavelength.
        assert_abs_diff_eq!(da[0].im, -FRAC_PI_2, epsilon = 1e-14);
        assert_abs_diff_eq!(da[1].im, FRAC_PI_2, epsilon = 1e-14);
        assert_abs_diff_eq!(da[0].re, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn derivative_norm_matches_direct_offset_sum() {
        for m in 2..=64 {
            let geom = ArrayGeometry::half_wavelength(m).unwrap();
            let angle = EffectiveAngle(0.3);
            let direct: f64 = {
                let k = geom.wavenumber();
                let c = angle.radians().cos();
                k * k * c * c * geom.offsets().iter().map(|d| d * d).sum::<f64>()
            };
            assert_relative_eq!(
                geom.derivative_norm_squared(angle),
                direct,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                geom.steering_derivative(angle).norm_squared(),
                direct,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let geom = ArrayGeometry::half_wavelength(16).unwrap();
        let theta = 0.3;
        let da = geom.steering_derivative(EffectiveAngle(theta));
        for h in [1e-3, 1e-4] {
            let plus = geom.steering_vector(EffectiveAngle(theta + h));
            let minus = geom.steering_vector(EffectiveAngle(theta - h));
            let fd = (plus - minus) / Complex::from(2.0 * h);
            let err = (fd - &da).norm();
            // Central difference is second order; the constant scales with
            // the third derivative, roughly (k*D/2)^3 * sqrt(M) / 6.
            assert!(err <= 5e3 * h * h, "h={h}: err={err}");
        }
    }

    #[test]
    fn steering_depends_only_on_angle_sum() {
        let geom = ArrayGeometry::half_wavelength(8).unwrap();
        let a = geom.steering_vector(effective_angle(0.4, 0.1));
        let b = geom.steering_vector(effective_angle(0.25, 0.25));
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn rotation_region_clamp_and_contains() {
        let region = RotationRegion::new(-FRAC_PI_6, FRAC_PI_6).unwrap();
        assert!(region.contains(0.0));
        assert!(!region.contains(1.0));
        assert_abs_diff_eq!(region.clamp(1.0), FRAC_PI_6);
        assert!(RotationRegion::new(1.0, -1.0).is_err());
    }
}
