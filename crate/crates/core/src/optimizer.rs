//! Outer-problem rotation optimization: 1D exhaustive search over the
//! admissible region wrapping the inner beamforming solver, plus the
//! closed-form rotation rule for the sensing-only case.

use rayon::prelude::*;

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::geometry::RotationRegion;
use crate::metrics::{BeamformingSolution, WeightPair};
use crate::solver::{fp_bcd_solve_warm, BcdSolve, SolverOptions};

/// One evaluated grid point; `objective` is `None` when the inner solve
/// failed there (the point is skipped in the argmax).
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePoint {
    pub rotation: f64,
    pub objective: Option<f64>,
    pub converged: bool,
}

/// Outcome of the exhaustive rotation search.
#[derive(Debug, Clone)]
pub struct RotationSearchResult {
    pub best_rotation: f64,
    pub best_objective: f64,
    pub best_solution: BeamformingSolution,
    /// Sum-rate and sensing objective at the best rotation.
    pub best_sum_rate: f64,
    pub best_sensing_objective: f64,
    /// Whether the inner solve converged at the best rotation.
    pub best_converged: bool,
    /// `(rotation, objective)` over the whole grid, in grid order.
    pub profile: Vec<ProfilePoint>,
}

/// Uniform inclusive grid over the rotation region with zero forced onto
/// the nearest interior point when the region contains it, so the
/// fixed-rotation baseline is an exact subset of the search.
pub fn rotation_grid(region: RotationRegion, grid_points: usize) -> Result<Vec<f64>> {
    if grid_points < 2 {
        return Err(Error::InvalidConfig(
            "grid_points must be at least 2".into(),
        ));
    }
    let span = region.width();
    let step = span / (grid_points - 1) as f64;
    let mut grid: Vec<f64> = (0..grid_points)
        .map(|i| {
            if i + 1 == grid_points {
                region.max
            } else {
                region.min + i as f64 * step
            }
        })
        .collect();
    if region.contains(0.0) {
        let nearest = grid
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        if nearest > 0 && nearest + 1 < grid_points {
            grid[nearest] = 0.0;
        }
    }
    Ok(grid)
}

/// Exhaustively search the rotation region, solving the inner beamforming
/// problem at every grid point, and return the argmax of the optimized
/// weighted objective `g(phi)`. Ties break toward the smaller rotation.
///
/// Sequential evaluation warm-starts each inner solve from the previous
/// grid point's beams, except at exactly zero rotation, which is always
/// solved from the cold start so that its value matches a standalone
/// fixed-rotation solve.
pub fn rotation_search(
    scenario: &Scenario,
    weights: WeightPair,
    options: &SolverOptions,
    grid_points: usize,
) -> Result<RotationSearchResult> {
    rotation_search_impl(scenario, weights, options, grid_points, false)
}

/// [`rotation_search`] with grid points evaluated concurrently. Warm
/// starting is disabled so the outcome is independent of evaluation order.
pub fn rotation_search_parallel(
    scenario: &Scenario,
    weights: WeightPair,
    options: &SolverOptions,
    grid_points: usize,
) -> Result<RotationSearchResult> {
    rotation_search_impl(scenario, weights, options, grid_points, true)
}

fn rotation_search_impl(
    scenario: &Scenario,
    weights: WeightPair,
    options: &SolverOptions,
    grid_points: usize,
    parallel: bool,
) -> Result<RotationSearchResult> {
    let grid = rotation_grid(scenario.rotation_region, grid_points)?;

    let solves: Vec<std::result::Result<BcdSolve, Error>> = if parallel {
        grid.par_iter()
            .map(|&phi| fp_bcd_solve_warm(scenario, phi, weights, options, None))
            .collect()
    } else {
        let mut out = Vec::with_capacity(grid.len());
        let mut warm: Option<Vec<crate::CVector>> = None;
        for &phi in &grid {
            let start = if phi == 0.0 { None } else { warm.as_deref() };
            let solve = fp_bcd_solve_warm(scenario, phi, weights, options, start);
            if let Ok(s) = &solve {
                warm = Some(s.solution.beams().to_vec());
            }
            out.push(solve);
        }
        out
    };

    let mut profile = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, BcdSolve)> = None;
    let mut last_error = None;
    for (i, (phi, solve)) in grid.iter().zip(solves).enumerate() {
        match solve {
            Ok(s) => {
                profile.push(ProfilePoint {
                    rotation: *phi,
                    objective: Some(s.objective),
                    converged: s.converged,
                });
                let better = match &best {
                    Some((_, b)) => s.objective > b.objective,
                    None => true,
                };
                if better {
                    best = Some((i, s));
                }
            }
            Err(e) => {
                log::warn!("inner solve failed at rotation {phi}: {e}");
                profile.push(ProfilePoint {
                    rotation: *phi,
                    objective: None,
                    converged: false,
                });
                last_error = Some(e);
            }
        }
    }

    let (best_index, best_solve) = match best {
        Some(b) => b,
        None => return Err(last_error.expect("empty grid is rejected above")),
    };
    Ok(RotationSearchResult {
        best_rotation: grid[best_index],
        best_objective: best_solve.objective,
        best_solution: best_solve.solution,
        best_sum_rate: best_solve.sum_rate,
        best_sensing_objective: best_solve.sensing_objective,
        best_converged: best_solve.converged,
        profile,
    })
}

/// Closed-form rotation for the sensing-only case: the admissible rotation
/// maximizing `cos^2(theta + phi)`. The unconstrained maximizers are
/// `phi = n*pi - theta`; if none lies in the region the optimum is at a
/// boundary. Ties break toward the smaller rotation.
pub fn sensing_only_rotation(theta: f64, region: RotationRegion) -> f64 {
    let mut candidates = vec![region.min, region.max];
    let n_lo = ((region.min + theta) / std::f64::consts::PI).ceil() as i64;
    let n_hi = ((region.max + theta) / std::f64::consts::PI).floor() as i64;
    for n in n_lo..=n_hi {
        candidates.push(n as f64 * std::f64::consts::PI - theta);
    }
    let objective = |phi: f64| (theta + phi).cos().powi(2);
    let mut best = candidates[0];
    let mut best_value = objective(best);
    for &phi in &candidates[1..] {
        let value = objective(phi);
        if value > best_value + 1e-15 || (value >= best_value - 1e-15 && phi < best) {
            best = phi;
            best_value = value;
        }
    }
    best
}

/// Full pipeline: exhaustive rotation search with the FP-BCD inner solver.
/// The cost is one inner solve per grid point, i.e. on the order of
/// `I1 * I2 * K * M_t^3` with `I1` grid points and `I2` BCD iterations.
pub fn joint_solve(
    scenario: &Scenario,
    weights: WeightPair,
    options: &SolverOptions,
    grid_points: usize,
) -> Result<RotationSearchResult> {
    rotation_search(scenario, weights, options, grid_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_scenario, PathComponent, ScenarioDistribution, SensingTargetSpec};
    use crate::geometry::ArrayGeometry;
    use crate::Complex;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, PI};

    fn small_dist() -> ScenarioDistribution {
        ScenarioDistribution {
            num_tx_antennas: 8,
            num_rx_antennas: 8,
            num_users: 2,
            num_nlos_paths: 2,
            ..ScenarioDistribution::default()
        }
    }

    #[test]
    fn grid_covers_endpoints_and_forces_zero() {
        let region = RotationRegion {
            min: -FRAC_PI_6,
            max: FRAC_PI_6,
        };
        let grid = rotation_grid(region, 61).unwrap();
        assert_eq!(grid.len(), 61);
        assert_abs_diff_eq!(grid[0], -FRAC_PI_6);
        assert_abs_diff_eq!(grid[60], FRAC_PI_6);
        assert!(grid.contains(&0.0));
        // Also with an even count, where zero is not naturally on the grid.
        let grid = rotation_grid(region, 60).unwrap();
        assert!(grid.contains(&0.0));
        assert!(rotation_grid(region, 1).is_err());
    }

    #[test]
    fn sensing_only_rotation_examples() {
        let region = RotationRegion {
            min: -FRAC_PI_6,
            max: FRAC_PI_6,
        };
        assert_abs_diff_eq!(sensing_only_rotation(FRAC_PI_6, region), -FRAC_PI_6);
        assert_abs_diff_eq!(sensing_only_rotation(FRAC_PI_4, region), -FRAC_PI_6);
        assert_abs_diff_eq!(sensing_only_rotation(0.0, region), 0.0);
    }

    #[test]
    fn sensing_only_rotation_matches_dense_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let theta = rng.gen_range(-1.5..1.5);
            let lo = rng.gen_range(-1.0..0.0);
            let hi = rng.gen_range(0.0..1.0);
            let region = RotationRegion { min: lo, max: hi };
            let closed = sensing_only_rotation(theta, region);
            let mut best = f64::NEG_INFINITY;
            for i in 0..=100_000 {
                let phi = lo + (hi - lo) * i as f64 / 100_000.0;
                best = best.max((theta + phi).cos().powi(2));
            }
            assert!(
                ((theta + closed).cos().powi(2) - best).abs() < 1e-10,
                "theta {theta} region [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn two_point_grid_returns_better_endpoint() {
        let sc = draw_scenario(&small_dist(), 3).unwrap();
        let weights = WeightPair::sense_only();
        let options = SolverOptions::default();
        let result = rotation_search(&sc, weights, &options, 2).unwrap();
        assert_eq!(result.profile.len(), 2);
        let objectives: Vec<f64> = result
            .profile
            .iter()
            .map(|p| p.objective.unwrap())
            .collect();
        let best = objectives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_abs_diff_eq!(result.best_objective, best);
    }

    #[test]
    fn sensing_only_search_matches_closed_form_rotation() {
        let mut sc = draw_scenario(&small_dist(), 11).unwrap();
        sc.target.nominal_angle = FRAC_PI_6;
        let options = SolverOptions::default();
        let result = rotation_search(&sc, WeightPair::sense_only(), &options, 61).unwrap();
        let closed = sensing_only_rotation(sc.target.nominal_angle, sc.rotation_region);
        let cell = sc.rotation_region.width() / 60.0;
        assert!(
            (result.best_rotation - closed).abs() <= cell + 1e-12,
            "search {} closed {}",
            result.best_rotation,
            closed
        );
    }

    #[test]
    fn argmax_dominates_zero_rotation_point() {
        let sc = draw_scenario(&small_dist(), 21).unwrap();
        let options = SolverOptions::default();
        for comm in [0.0, 0.5, 1.0] {
            let weights = WeightPair::from_comm(comm).unwrap();
            let result = rotation_search(&sc, weights, &options, 31).unwrap();
            let zero_value = result
                .profile
                .iter()
                .find(|p| p.rotation == 0.0)
                .and_then(|p| p.objective)
                .expect("zero on grid");
            assert!(result.best_objective >= zero_value - 1e-9);
            for p in &result.profile {
                if let Some(v) = p.objective {
                    assert!(result.best_objective >= v);
                }
            }
        }
    }

    #[test]
    fn single_los_path_rate_is_rotation_invariant() {
        // One user, one path: ||h|| is independent of rotation, so the
        // comm-only optimum matches the MRT closed form at every grid point.
        let mut sc = draw_scenario(
            &ScenarioDistribution {
                num_users: 1,
                num_nlos_paths: 0,
                num_tx_antennas: 8,
                num_rx_antennas: 8,
                ..ScenarioDistribution::default()
            },
            2,
        )
        .unwrap();
        sc.users[0][0].gain = Complex::new(1.0, 0.0);
        let options = SolverOptions::default();
        let result = joint_solve(&sc, WeightPair::comm_only(), &options, 11).unwrap();
        let expected = 9.0f64.log2();
        assert!((result.best_sum_rate - expected).abs() < 1e-6);
        for p in &result.profile {
            assert!((p.objective.unwrap() - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn two_path_comm_gain_from_rotation() {
        // Single user with two equal-gain paths: rotating the array can
        // re-cohere the paths, so the optimized rotation beats zero when
        // the closed-form optimum lies in the region.
        let sc = Scenario {
            tx_geometry: ArrayGeometry::half_wavelength(8).unwrap(),
            rx_geometry: ArrayGeometry::half_wavelength(8).unwrap(),
            users: vec![vec![
                PathComponent {
                    gain: Complex::new(1.0, 0.0),
                    nominal_angle: 0.35,
                },
                PathComponent {
                    gain: Complex::new(1.0, 0.0),
                    nominal_angle: 0.15,
                },
            ]],
            noise_powers: vec![1.0],
            target: SensingTargetSpec {
                nominal_angle: 0.0,
                sensing_snr: 0.1,
            },
            snapshots: 100,
            power_budget: 1.0,
            rotation_region: RotationRegion {
                min: -PI / 2.0,
                max: PI / 2.0,
            },
        };
        let options = SolverOptions::default();
        let result = rotation_search(&sc, WeightPair::comm_only(), &options, 181).unwrap();
        let zero_value = result
            .profile
            .iter()
            .find(|p| p.rotation == 0.0)
            .and_then(|p| p.objective)
            .unwrap();
        assert!(
            result.best_objective > zero_value + 1e-3,
            "best {} vs zero {}",
            result.best_objective,
            zero_value
        );
    }

    #[test]
    fn parallel_search_agrees_with_itself() {
        let sc = draw_scenario(&small_dist(), 31).unwrap();
        let options = SolverOptions::default();
        let weights = WeightPair::from_comm(0.5).unwrap();
        let a = rotation_search_parallel(&sc, weights, &options, 21).unwrap();
        let b = rotation_search_parallel(&sc, weights, &options, 21).unwrap();
        assert_eq!(a.best_rotation, b.best_rotation);
        assert_eq!(a.best_objective, b.best_objective);
        for (x, y) in a.profile.iter().zip(b.profile.iter()) {
            assert_eq!(x.objective, y.objective);
        }
    }
}
