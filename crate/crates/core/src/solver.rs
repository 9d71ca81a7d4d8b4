//! Inner-problem transmit beamforming: fractional-programming block
//! coordinate ascent with closed-form block updates, plus the closed-form
//! baselines (MRT, zero forcing, sensing-optimal covariance).
//!
//! For a fixed rotation the objective is
//! `comm_weight * sum_rate + sense_weight * f_s`. The sum-rate part is
//! handled with the Lagrangian-dual + quadratic transform: per user an
//! SINR auxiliary `alpha_k`, a complex rate auxiliary for the SINR ratio,
//! and a complex sensing auxiliary for the (non-fractional) illumination
//! term `|a_T^H w_k|^2`. Each auxiliary has a closed-form update, and the
//! beam update solves a Hermitian positive-definite system per user with a
//! bisected power multiplier.
//!
//! Rates are reported in bits; internally the rate terms of the surrogate
//! carry a `1/ln 2` factor so that the auxiliary updates stay exact
//! first-order optima and the surrogate is a true minorant of the weighted
//! objective (block ascent is then monotone by construction).

use std::f64::consts::LN_2;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::geometry::effective_angle;
use crate::metrics::{sinr_from_channel, BeamformingSolution, WeightPair};
use crate::{CMatrix, CVector, Complex};

/// Lower clamp for the SINR auxiliaries, keeping the surrogate finite in
/// degenerate zero-beam states.
const ALPHA_FLOOR: f64 = 1e-12;

/// Beam initialization for the block-coordinate solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// MRT toward each user with the power split equally.
    #[default]
    MrtEqualPower,
    /// Complex Gaussian beams scaled to the full power budget, drawn from
    /// `init_seed`.
    Random,
}

/// Inner-solver controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Cap on block-coordinate iterations.
    pub max_bcd_iters: usize,
    /// Relative change of the surrogate objective that counts as
    /// converged.
    pub rel_tolerance: f64,
    /// Relative power residual for the multiplier bisection.
    pub mu_tolerance: f64,
    /// Cap on multiplier bracketing plus bisection steps.
    pub mu_max_iters: usize,
    pub init_scheme: InitScheme,
    /// Seed for the random initialization scheme.
    pub init_seed: u64,
    /// Cold-start trajectories per solve: the configured initialization
    /// plus `restarts - 1` seeded random starts, keeping the best
    /// objective. Warm-started solves always run a single trajectory.
    pub restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_bcd_iters: 200,
            rel_tolerance: 1e-6,
            mu_tolerance: 1e-10,
            mu_max_iters: 200,
            init_scheme: InitScheme::MrtEqualPower,
            init_seed: 0,
            restarts: 4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_bcd_iters == 0 || self.mu_max_iters == 0 {
            return Err(Error::InvalidConfig(
                "options: iteration caps must be positive".into(),
            ));
        }
        if !(self.rel_tolerance > 0.0) || !(self.mu_tolerance > 0.0) {
            return Err(Error::InvalidConfig(
                "options: tolerances must be positive".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig(
                "options: restarts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The inner problem for one fixed rotation: user channels, target
/// steering, and weights, precomputed once.
#[derive(Debug, Clone)]
pub struct InnerProblem {
    pub channels: Vec<CVector>,
    pub noise_powers: Vec<f64>,
    /// Transmit steering vector toward the target's effective angle.
    pub target_steering: CVector,
    /// `cos^2` of the target's effective angle.
    pub cos_sq: f64,
    pub power_budget: f64,
    pub weights: WeightPair,
}

impl InnerProblem {
    pub fn new(scenario: &Scenario, rotation: f64, weights: WeightPair) -> Result<Self> {
        let channels = (0..scenario.num_users())
            .map(|k| scenario.user_channel(k, rotation))
            .collect::<Result<Vec<_>>>()?;
        let angle = effective_angle(scenario.target.nominal_angle, rotation);
        Ok(Self {
            channels,
            noise_powers: scenario.noise_powers.clone(),
            target_steering: scenario.tx_geometry.steering_vector(angle),
            cos_sq: angle.radians().cos().powi(2),
            power_budget: scenario.power_budget,
            weights,
        })
    }

    pub fn num_users(&self) -> usize {
        self.channels.len()
    }

    pub fn num_tx_antennas(&self) -> usize {
        self.target_steering.len()
    }

    /// Rate-term weight of the surrogate (`comm_weight / ln 2`), which
    /// keeps the bit-denominated objective and the natural-log dual
    /// identities consistent.
    fn rate_scale(&self) -> f64 {
        self.weights.comm() / LN_2
    }

    /// Sensing-term weight `sense_weight * cos^2(theta~)`.
    fn sense_scale(&self) -> f64 {
        self.weights.sense() * self.cos_sq
    }

    /// Sum-rate in bits at the given beams.
    pub fn sum_rate(&self, beams: &[CVector]) -> f64 {
        (0..self.num_users())
            .map(|k| {
                (1.0 + sinr_from_channel(&self.channels[k], beams, k, self.noise_powers[k])).log2()
            })
            .sum()
    }

    /// Sensing objective `cos^2(theta~) * sum_k |a_T^H w_k|^2`.
    pub fn sensing_objective(&self, beams: &[CVector]) -> f64 {
        self.cos_sq
            * beams
                .iter()
                .map(|w| self.target_steering.dotc(w).norm_sqr())
                .sum::<f64>()
    }

    /// Weighted objective `comm * sum_rate + sense * f_s`.
    pub fn objective(&self, beams: &[CVector]) -> f64 {
        self.weights.comm() * self.sum_rate(beams) + self.weights.sense() * self.sensing_objective(beams)
    }
}

/// Mutable state of the block-coordinate solver.
#[derive(Debug, Clone)]
pub struct BcdState {
    pub beams: Vec<CVector>,
    /// Per-user SINR auxiliaries.
    pub alpha: Vec<f64>,
    /// Quadratic-transform auxiliaries for the per-user rate ratios.
    pub rate_aux: Vec<Complex>,
    /// Quadratic-transform auxiliaries for the per-user illumination
    /// terms.
    pub sense_aux: Vec<Complex>,
    /// Surrogate objective after each full update cycle; non-decreasing.
    pub objective_trace: Vec<f64>,
}

impl BcdState {
    fn new(beams: Vec<CVector>) -> Self {
        let k = beams.len();
        Self {
            beams,
            alpha: vec![ALPHA_FLOOR; k],
            rate_aux: vec![Complex::new(0.0, 0.0); k],
            sense_aux: vec![Complex::new(0.0, 0.0); k],
            objective_trace: Vec::new(),
        }
    }

    pub fn total_power(&self) -> f64 {
        self.beams.iter().map(|w| w.norm_squared()).sum()
    }
}

/// `h_k^H w_i` couplings and the full per-user received powers
/// `D_k = sum_i |h_k^H w_i|^2 + noise_k`.
fn couplings(problem: &InnerProblem, beams: &[CVector]) -> (Vec<Vec<Complex>>, Vec<f64>) {
    let k = problem.num_users();
    let mut u = vec![vec![Complex::new(0.0, 0.0); k]; k];
    let mut denom = vec![0.0; k];
    for (row, h) in problem.channels.iter().enumerate() {
        let mut total = problem.noise_powers[row];
        for (col, w) in beams.iter().enumerate() {
            let c = h.dotc(w);
            total += c.norm_sqr();
            u[row][col] = c;
        }
        denom[row] = total;
    }
    (u, denom)
}

/// Set each SINR auxiliary to the user's current SINR (floored at a tiny
/// positive value for all-zero beams).
pub fn update_alpha(state: &mut BcdState, problem: &InnerProblem) {
    for k in 0..problem.num_users() {
        let gamma = sinr_from_channel(
            &problem.channels[k],
            &state.beams,
            k,
            problem.noise_powers[k],
        );
        state.alpha[k] = gamma.max(ALPHA_FLOOR);
    }
}

/// Closed-form rate-auxiliary update:
/// `sqrt(rate_scale * (1 + alpha_k)) * h_k^H w_k / D_k`.
pub fn update_rate_aux(state: &mut BcdState, problem: &InnerProblem) {
    let (u, denom) = couplings(problem, &state.beams);
    let scale = problem.rate_scale();
    for k in 0..problem.num_users() {
        state.rate_aux[k] = u[k][k] * ((scale * (1.0 + state.alpha[k])).sqrt() / denom[k]);
    }
}

/// Closed-form sensing-auxiliary update:
/// `sqrt(sense_scale) * a_T^H w_k`.
pub fn update_sense_aux(state: &mut BcdState, problem: &InnerProblem) {
    let scale = problem.sense_scale().sqrt();
    for k in 0..problem.num_users() {
        state.sense_aux[k] = problem.target_steering.dotc(&state.beams[k]) * scale;
    }
}

/// Closed-form beam update with the transmit power constraint.
///
/// Each beam solves `(mu I + sum_i |rate_aux_i|^2 h_i h_i^H) w_k =
/// h_eff_k`, where `h_eff_k` combines the user channel and the target
/// steering vector through the auxiliaries. The multiplier `mu >= 0` is
/// zero when the unconstrained solution fits the budget; otherwise it is
/// bracketed by doubling from one and bisected until the power residual is
/// within `mu_tolerance * P` (the total power is monotone decreasing in
/// `mu`). Returns the multiplier.
pub fn update_beams(
    state: &mut BcdState,
    problem: &InnerProblem,
    options: &SolverOptions,
) -> Result<f64> {
    let m = problem.num_tx_antennas();
    let num_users = problem.num_users();
    let rate_scale = problem.rate_scale();
    let sense_scale = problem.sense_scale().sqrt();

    let effective: Vec<CVector> = (0..num_users)
        .map(|k| {
            let mut h_eff = &problem.channels[k]
                * (state.rate_aux[k] * (rate_scale * (1.0 + state.alpha[k])).sqrt());
            h_eff += &problem.target_steering * (state.sense_aux[k] * sense_scale);
            h_eff
        })
        .collect();

    // Degenerate all-zero targets short-circuit to zero beams.
    if effective.iter().all(|h| h.norm_squared() < 1e-300) {
        for w in state.beams.iter_mut() {
            w.fill(Complex::new(0.0, 0.0));
        }
        return Ok(0.0);
    }

    let mut quad = CMatrix::zeros(m, m);
    for (aux, h) in state.rate_aux.iter().zip(problem.channels.iter()) {
        let weight = aux.norm_sqr();
        if weight > 0.0 {
            quad += h * h.adjoint() * Complex::from(weight);
        }
    }

    let budget = problem.power_budget;
    let solve_at = |mu: f64| -> Option<(Vec<CVector>, f64)> {
        let mut shifted = quad.clone();
        for i in 0..m {
            shifted[(i, i)] += Complex::from(mu);
        }
        let chol = Cholesky::new(shifted)?;
        let beams: Vec<CVector> = effective.iter().map(|h| chol.solve(h)).collect();
        let power = beams.iter().map(|w| w.norm_squared()).sum::<f64>();
        power.is_finite().then_some((beams, power))
    };

    // Complementary slackness: accept mu = 0 if the unconstrained solution
    // exists and fits the budget.
    if let Some((beams, power)) = solve_at(0.0) {
        if power <= budget {
            state.beams = beams;
            return Ok(0.0);
        }
    }

    let mut iterations = 0usize;
    let mut hi = 1.0;
    let (mut feasible_beams, mut feasible_power) = loop {
        iterations += 1;
        if iterations > options.mu_max_iters {
            return Err(Error::MultiplierSearch {
                iterations,
                residual: f64::INFINITY,
            });
        }
        if let Some((beams, power)) = solve_at(hi) {
            if power <= budget {
                break (beams, power);
            }
        }
        hi *= 2.0;
    };

    // Polish three decades below the contractual residual so the beam
    // update stays an argmax to well under the trace-monotonicity slack.
    let polished = options.mu_tolerance * 1e-3 * budget;
    let contractual = options.mu_tolerance * budget;
    let mut lo = 0.0;
    loop {
        if (budget - feasible_power).abs() <= polished {
            break;
        }
        // Interval collapse with slack power means the constraint is
        // inactive in the limit: keep the feasible iterate.
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        iterations += 1;
        if iterations > options.mu_max_iters {
            if (budget - feasible_power).abs() <= contractual {
                break;
            }
            return Err(Error::MultiplierSearch {
                iterations,
                residual: (budget - feasible_power).abs(),
            });
        }
        let mid = 0.5 * (lo + hi);
        match solve_at(mid) {
            Some((beams, power)) if power <= budget => {
                hi = mid;
                feasible_beams = beams;
                feasible_power = power;
            }
            _ => lo = mid,
        }
    }
    state.beams = feasible_beams;
    Ok(hi)
}

/// Surrogate objective of the block-coordinate solver at the current
/// state. With the auxiliaries at their closed-form optima this equals the
/// weighted objective `comm * sum_rate + sense * f_s` exactly.
pub fn transformed_objective(state: &BcdState, problem: &InnerProblem) -> f64 {
    let (u, denom) = couplings(problem, &state.beams);
    let rate_scale = problem.rate_scale();
    let sense_scale = problem.sense_scale();
    let mut total = 0.0;
    for k in 0..problem.num_users() {
        let alpha = state.alpha[k];
        total += rate_scale * ((1.0 + alpha).ln() - alpha);
        total += 2.0 * (rate_scale * (1.0 + alpha)).sqrt() * (state.rate_aux[k].conj() * u[k][k]).re;
        total -= state.rate_aux[k].norm_sqr() * denom[k];
        let illumination = problem.target_steering.dotc(&state.beams[k]);
        total += 2.0 * sense_scale.sqrt() * (state.sense_aux[k].conj() * illumination).re;
        total -= state.sense_aux[k].norm_sqr();
    }
    total
}

/// Result of one inner solve.
#[derive(Debug, Clone)]
pub struct BcdSolve {
    pub solution: BeamformingSolution,
    /// Weighted objective `comm * sum_rate + sense * f_s` at the returned
    /// beams.
    pub objective: f64,
    pub sum_rate: f64,
    pub sensing_objective: f64,
    pub state: BcdState,
    /// False when the iteration cap was hit before the relative tolerance;
    /// the best iterate is still returned.
    pub converged: bool,
    pub iterations: usize,
}

fn mrt_equal_power_beams(problem: &InnerProblem) -> Vec<CVector> {
    let k = problem.num_users();
    let m = problem.num_tx_antennas();
    let per_user = (problem.power_budget / k as f64).sqrt();
    problem
        .channels
        .iter()
        .map(|h| {
            let norm = h.norm();
            if norm < 1e-30 {
                CVector::zeros(m)
            } else {
                h * Complex::from(per_user / norm)
            }
        })
        .collect()
}

fn random_start_beams(problem: &InnerProblem, seed: u64) -> Vec<CVector> {
    use rand::prelude::*;
    let k = problem.num_users();
    let m = problem.num_tx_antennas();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut beams: Vec<CVector> = (0..k)
        .map(|_| {
            CVector::from_iterator(
                m,
                (0..m).map(|_| {
                    Complex::new(
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                    )
                }),
            )
        })
        .collect();
    let power: f64 = beams.iter().map(|w| w.norm_squared()).sum();
    let scale = Complex::from((problem.power_budget / power).sqrt());
    for w in beams.iter_mut() {
        *w *= scale;
    }
    beams
}

fn initial_beams(problem: &InnerProblem, options: &SolverOptions, trajectory: usize) -> Vec<CVector> {
    if trajectory > 0 {
        return random_start_beams(problem, options.init_seed.wrapping_add(trajectory as u64));
    }
    match options.init_scheme {
        InitScheme::MrtEqualPower => mrt_equal_power_beams(problem),
        InitScheme::Random => random_start_beams(problem, options.init_seed),
    }
}

/// Solve the inner beamforming problem at a fixed rotation by cycling the
/// closed-form block updates until the surrogate's relative change drops
/// below `rel_tolerance` or the iteration cap is reached.
///
/// Hitting the cap is not an error: ascent makes the final iterate usable,
/// so it is returned with `converged = false` and a warning log.
pub fn fp_bcd_solve(
    scenario: &Scenario,
    rotation: f64,
    weights: WeightPair,
    options: &SolverOptions,
) -> Result<BcdSolve> {
    fp_bcd_solve_warm(scenario, rotation, weights, options, None)
}

/// [`fp_bcd_solve`] with an optional warm-start beam set.
pub fn fp_bcd_solve_warm(
    scenario: &Scenario,
    rotation: f64,
    weights: WeightPair,
    options: &SolverOptions,
    warm_start: Option<&[CVector]>,
) -> Result<BcdSolve> {
    options.validate()?;
    let problem = InnerProblem::new(scenario, rotation, weights)?;
    solve_inner(&problem, options, warm_start)
}

/// Core solve over a prepared [`InnerProblem`]: one trajectory from a warm
/// start, otherwise the best of `options.restarts` cold trajectories.
pub fn solve_inner(
    problem: &InnerProblem,
    options: &SolverOptions,
    warm_start: Option<&[CVector]>,
) -> Result<BcdSolve> {
    if let Some(beams) = warm_start {
        assert_eq!(beams.len(), problem.num_users(), "warm start beam count");
        return run_trajectory(problem, options, beams.to_vec());
    }
    let mut best: Option<BcdSolve> = None;
    for trajectory in 0..options.restarts {
        let solve = run_trajectory(problem, options, initial_beams(problem, options, trajectory))?;
        if best.as_ref().is_none_or(|b| solve.objective > b.objective) {
            best = Some(solve);
        }
    }
    Ok(best.expect("restarts >= 1 is validated"))
}

fn run_trajectory(
    problem: &InnerProblem,
    options: &SolverOptions,
    beams: Vec<CVector>,
) -> Result<BcdSolve> {
    let mut state = BcdState::new(beams);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..options.max_bcd_iters {
        iterations += 1;
        update_alpha(&mut state, problem);
        update_rate_aux(&mut state, problem);
        update_sense_aux(&mut state, problem);
        update_beams(&mut state, problem, options)?;
        let value = transformed_objective(&state, problem);
        let done = state
            .objective_trace
            .last()
            .is_some_and(|prev| (value - prev).abs() <= options.rel_tolerance * value.abs().max(1.0));
        state.objective_trace.push(value);
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        let tail: Vec<f64> = state
            .objective_trace
            .iter()
            .rev()
            .take(2)
            .cloned()
            .collect();
        log::warn!(
            "BCD hit the {} iteration cap (last surrogate values {:?})",
            options.max_bcd_iters,
            tail
        );
    }
    let sum_rate = problem.sum_rate(&state.beams);
    let sensing_objective = problem.sensing_objective(&state.beams);
    let objective =
        problem.weights.comm() * sum_rate + problem.weights.sense() * sensing_objective;
    Ok(BcdSolve {
        solution: BeamformingSolution::new(state.beams.clone()),
        objective,
        sum_rate,
        sensing_objective,
        state,
        converged,
        iterations,
    })
}

/// Maximum-ratio transmission beam for one user: `sqrt(P) h / ||h||`.
pub fn mrt_beam(scenario: &Scenario, user_index: usize, rotation: f64, power: f64) -> Result<CVector> {
    let h = scenario.user_channel(user_index, rotation)?;
    let norm = h.norm();
    if norm < 1e-300 {
        return Err(Error::ZeroChannel);
    }
    Ok(&h * Complex::from(power.sqrt() / norm))
}

/// Zero-forcing beams: pseudo-inverse directions that null inter-user
/// interference, with the power budget split equally after normalization.
pub fn zf_beams(scenario: &Scenario, rotation: f64, power: f64) -> Result<Vec<CVector>> {
    let k = scenario.num_users();
    let m = scenario.num_tx_antennas();
    if k > m {
        return Err(Error::RankDeficientChannel);
    }
    let channels: Vec<CVector> = (0..k)
        .map(|i| scenario.user_channel(i, rotation))
        .collect::<Result<Vec<_>>>()?;
    // Stacked channel matrix with rows h_k^H.
    let stacked = CMatrix::from_fn(k, m, |row, col| channels[row][col].conj());
    let gram = &stacked * stacked.adjoint();
    let chol = Cholesky::new(gram).ok_or(Error::RankDeficientChannel)?;
    // Cancellation can leave a ~sqrt(eps)-scale pivot where the exact one
    // is zero; treat such pivots as rank deficiency rather than dividing
    // by them.
    let diag_min = (0..k).map(|i| chol.l_dirty()[(i, i)].re).fold(f64::INFINITY, f64::min);
    let diag_max = (0..k).map(|i| chol.l_dirty()[(i, i)].re).fold(0.0_f64, f64::max);
    if !(diag_min > 1e-7 * diag_max) {
        return Err(Error::RankDeficientChannel);
    }
    let inverse_gram = chol.inverse();
    let directions = stacked.adjoint() * inverse_gram;
    let per_user = (power / k as f64).sqrt();
    Ok((0..k)
        .map(|i| {
            let column: CVector = directions.column(i).into_owned();
            let norm = column.norm();
            column * Complex::from(per_user / norm)
        })
        .collect())
}

/// Sensing-optimal covariance `(P / M_t) a_T a_T^H`, realized as the
/// single beam `sqrt(P / M_t) a_T(theta~)`.
pub fn sensing_optimal_covariance(
    scenario: &Scenario,
    rotation: f64,
    power: f64,
) -> BeamformingSolution {
    let angle = effective_angle(scenario.target.nominal_angle, rotation);
    let a_t = scenario.tx_geometry.steering_vector(angle);
    let m = scenario.num_tx_antennas() as f64;
    BeamformingSolution::new(vec![&a_t * Complex::from((power / m).sqrt())])
}
