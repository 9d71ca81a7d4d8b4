//! User multipath channels, the round-trip sensing channel, and seeded
//! random scenario generation.
//!
//! A scenario fixes everything the optimizer treats as given: both array
//! geometries, the per-user path sets, the sensing target, noise powers,
//! the snapshot count, the transmit power budget, and the admissible
//! rotation interval. Channels are regenerated for any candidate rotation
//! by shifting every path's effective angle.

use rand::distributions::Uniform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, TAU};

use crate::error::{Error, Result};
use crate::geometry::{effective_angle, ArrayGeometry, RotationRegion};
use crate::{CMatrix, CVector, Complex};

/// One propagation path of a user channel: complex gain and nominal angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PathComponentRepr", into = "PathComponentRepr")]
pub struct PathComponent {
    pub gain: Complex,
    pub nominal_angle: f64,
}

/// Wire format: `{gain_re, gain_im, angle_rad}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathComponentRepr {
    gain_re: f64,
    gain_im: f64,
    angle_rad: f64,
}

impl From<PathComponentRepr> for PathComponent {
    fn from(repr: PathComponentRepr) -> Self {
        PathComponent {
            gain: Complex::new(repr.gain_re, repr.gain_im),
            nominal_angle: repr.angle_rad,
        }
    }
}

impl From<PathComponent> for PathComponentRepr {
    fn from(path: PathComponent) -> Self {
        PathComponentRepr {
            gain_re: path.gain.re,
            gain_im: path.gain.im,
            angle_rad: path.nominal_angle,
        }
    }
}

/// Sensing target: nominal angle and round-trip SNR.
///
/// Only the ratio `|beta_s|^2 / sigma_s^2` enters the CRB, so the gain and
/// the sensing noise power are stored as that single linear ratio. Where a
/// concrete round-trip gain is required (the explicit channel matrix) the
/// sensing noise power is normalized to one and `beta_s = sqrt(snr)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingTargetSpec {
    #[serde(rename = "nominal_angle_rad")]
    pub nominal_angle: f64,
    /// Linear ratio, strictly positive.
    pub sensing_snr: f64,
}

/// A fully specified problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub tx_geometry: ArrayGeometry,
    pub rx_geometry: ArrayGeometry,
    /// Per-user path lists; entry 0 is the line-of-sight component.
    pub users: Vec<Vec<PathComponent>>,
    /// Per-user receiver noise powers (watts).
    pub noise_powers: Vec<f64>,
    pub target: SensingTargetSpec,
    /// Snapshots per transmission frame.
    pub snapshots: usize,
    /// Total transmit power budget (watts).
    pub power_budget: f64,
    pub rotation_region: RotationRegion,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_tx_antennas(&self) -> usize {
        self.tx_geometry.num_elements()
    }

    pub fn num_rx_antennas(&self) -> usize {
        self.rx_geometry.num_elements()
    }

    /// Check the structural invariants of the instance.
    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::InvalidScenario("no users".into()));
        }
        if self.noise_powers.len() != self.users.len() {
            return Err(Error::InvalidScenario(format!(
                "noise_powers has {} entries for {} users",
                self.noise_powers.len(),
                self.users.len()
            )));
        }
        for (k, paths) in self.users.iter().enumerate() {
            if paths.is_empty() {
                return Err(Error::InvalidScenario(format!("user {k} has no paths")));
            }
            if paths[0].gain.norm() == 0.0 {
                return Err(Error::InvalidScenario(format!(
                    "user {k} line-of-sight gain is zero"
                )));
            }
        }
        if self.noise_powers.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidScenario("noise powers must be positive".into()));
        }
        if !(self.target.sensing_snr > 0.0) {
            return Err(Error::InvalidScenario("sensing SNR must be positive".into()));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidScenario("snapshot count must be >= 1".into()));
        }
        if !(self.power_budget > 0.0) {
            return Err(Error::InvalidScenario("power budget must be positive".into()));
        }
        RotationRegion::new(self.rotation_region.min, self.rotation_region.max)?;
        Ok(())
    }

    /// Downlink channel of one user at the given array rotation:
    /// `h_k = sum_l conj(beta_{k,l}) * a(theta_{k,l} + phi)`, so that
    /// `h_k^H = sum_l beta_{k,l} * a^H`.
    ///
    /// The rotation may lie outside the admissible region; analysis code
    /// sweeps wider than the constraint.
    pub fn user_channel(&self, user_index: usize, rotation: f64) -> Result<CVector> {
        let paths = self
            .users
            .get(user_index)
            .ok_or(Error::UserIndexOutOfRange {
                index: user_index,
                num_users: self.users.len(),
            })?;
        let mut h = CVector::zeros(self.num_tx_antennas());
        for path in paths {
            let a = self
                .tx_geometry
                .steering_vector(effective_angle(path.nominal_angle, rotation));
            h += a * path.gain.conj();
        }
        Ok(h)
    }

    /// Round-trip sensing channel `beta_s * a_R(theta~) * a_T^H(theta~)`,
    /// an `M_r x M_t` rank-one matrix. The CRB is evaluated from steering
    /// vectors directly; this explicit form exists for inspection and
    /// tests.
    pub fn sensing_channel(&self, rotation: f64) -> CMatrix {
        let angle = effective_angle(self.target.nominal_angle, rotation);
        let a_r = self.rx_geometry.steering_vector(angle);
        let a_t = self.tx_geometry.steering_vector(angle);
        let beta_s = Complex::from(self.target.sensing_snr.sqrt());
        (a_r * a_t.adjoint()) * beta_s
    }
}

/// Random-scenario distribution; defaults reproduce the standard system
/// parameters (16x16 half-wavelength arrays, 4 users, 5 NLoS paths, 1 W,
/// 100 snapshots, angles uniform on (-pi/3, pi/3), rotation region
/// [-pi/6, pi/6], 0 dB per-path normalized gain, -10 dB sensing SNR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioDistribution {
    pub num_users: usize,
    /// NLoS paths per user; total paths per user is this plus one.
    pub num_nlos_paths: usize,
    pub num_tx_antennas: usize,
    pub num_rx_antennas: usize,
    pub snapshots: usize,
    pub power_budget: f64,
    /// Uniform range for the target nominal angle (radians).
    pub target_angle_range: [f64; 2],
    /// Uniform range for every user-path nominal angle (radians).
    pub path_angle_range: [f64; 2],
    /// Per-path normalized gain `|beta|^2 / sigma^2` in dB.
    pub path_gain_db: f64,
    /// Round-trip sensing SNR in dB.
    pub sensing_snr_db: f64,
    pub rotation_region: RotationRegion,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
    pub wavelength: f64,
}

impl Default for ScenarioDistribution {
    fn default() -> Self {
        Self {
            num_users: 4,
            num_nlos_paths: 5,
            num_tx_antennas: 16,
            num_rx_antennas: 16,
            snapshots: 100,
            power_budget: 1.0,
            target_angle_range: [-FRAC_PI_3, FRAC_PI_3],
            path_angle_range: [-FRAC_PI_3, FRAC_PI_3],
            path_gain_db: 0.0,
            sensing_snr_db: -10.0,
            rotation_region: RotationRegion {
                min: -FRAC_PI_6,
                max: FRAC_PI_6,
            },
            element_spacing: 0.5,
            wavelength: 1.0,
        }
    }
}

impl ScenarioDistribution {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::InvalidScenario("num_users must be >= 1".into()));
        }
        if self.num_tx_antennas < 2 || self.num_rx_antennas < 2 {
            return Err(Error::InvalidScenario(
                "arrays need at least 2 elements".into(),
            ));
        }
        if self.snapshots == 0 {
            return Err(Error::InvalidScenario("snapshots must be >= 1".into()));
        }
        if !(self.power_budget > 0.0) {
            return Err(Error::InvalidScenario("power_budget must be positive".into()));
        }
        for range in [self.target_angle_range, self.path_angle_range] {
            if !(range[0] <= range[1]) {
                return Err(Error::InvalidScenario(format!(
                    "angle range [{}, {}] is inverted",
                    range[0], range[1]
                )));
            }
        }
        if !(self.element_spacing > 0.0) || !(self.wavelength > 0.0) {
            return Err(Error::InvalidScenario(
                "element_spacing and wavelength must be positive".into(),
            ));
        }
        RotationRegion::new(self.rotation_region.min, self.rotation_region.max)?;
        Ok(())
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        return range[0];
    }
    rng.sample(Uniform::new(range[0], range[1]))
}

/// Draw a scenario from the distribution, deterministically in `seed`.
///
/// Stream splitting: draws use ChaCha8 with the given seed, stream 0 for
/// the target angle and stream `1 + k` for user `k`. Within a user stream
/// the order is fixed: LoS angle, LoS phase, then per NLoS path the angle
/// followed by the two Gaussian gain components. This keeps every user's
/// draw independent of the others, so scenarios are stable under any
/// evaluation order.
///
/// Gains follow the per-path normalized power `g = 10^(path_gain_db/10)`
/// relative to the (unit) user noise power: the LoS gain is `sqrt(g)` with
/// a uniform random phase, and each NLoS gain is circularly-symmetric
/// complex Gaussian with variance `g`.
pub fn draw_scenario(dist: &ScenarioDistribution, seed: u64) -> Result<Scenario> {
    dist.validate()?;
    let spacing = dist.element_spacing * dist.wavelength;
    let tx_geometry = ArrayGeometry::new(dist.num_tx_antennas, spacing, dist.wavelength)?;
    let rx_geometry = ArrayGeometry::new(dist.num_rx_antennas, spacing, dist.wavelength)?;

    let mut target_rng = ChaCha8Rng::seed_from_u64(seed);
    target_rng.set_stream(0);
    let target = SensingTargetSpec {
        nominal_angle: uniform_in(&mut target_rng, dist.target_angle_range),
        sensing_snr: 10f64.powf(dist.sensing_snr_db / 10.0),
    };

    let gain_power = 10f64.powf(dist.path_gain_db / 10.0);
    let los_amplitude = gain_power.sqrt();
    let nlos_component_sigma = (gain_power / 2.0).sqrt();

    let users = (0..dist.num_users)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + k as u64);
            let mut paths = Vec::with_capacity(1 + dist.num_nlos_paths);
            let los_angle = uniform_in(&mut rng, dist.path_angle_range);
            let los_phase = rng.sample(Uniform::new(0.0, TAU));
            paths.push(PathComponent {
                gain: Complex::from_polar(los_amplitude, los_phase),
                nominal_angle: los_angle,
            });
            for _ in 0..dist.num_nlos_paths {
                let angle = uniform_in(&mut rng, dist.path_angle_range);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                paths.push(PathComponent {
                    gain: Complex::new(re, im) * nlos_component_sigma,
                    nominal_angle: angle,
                });
            }
            paths
        })
        .collect();

    let scenario = Scenario {
        tx_geometry,
        rx_geometry,
        users,
        noise_powers: vec![1.0; dist.num_users],
        target,
        snapshots: dist.snapshots,
        power_budget: dist.power_budget,
        rotation_region: dist.rotation_region,
    };
    scenario.validate()?;
    Ok(scenario)
}
