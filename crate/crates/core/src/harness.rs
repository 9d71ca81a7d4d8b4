//! Experiment orchestration: seeded Monte Carlo drivers for the
//! weight-sweep tradeoff study and the beam-pattern study, plus CSV/JSON
//! persistence.
//!
//! Every experiment is reproducible from `(config, seed)` alone.
//! Realization `i` draws its scenario from a seed derived as
//! `splitmix64(base_seed ^ (i + 1) * golden)`, so the realization set is
//! independent of how work is scheduled; aggregation is an ordered
//! reduction by realization index and therefore identical under any worker
//! count.

use std::f64::consts::FRAC_PI_3;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_scenario, Scenario, ScenarioDistribution};
use crate::error::{Error, Result};
use crate::metrics::{
    beam_pattern, crb_chi, crb_closed, sensing_objective, sum_rate, BeamformingSolution, Crb,
    WeightPair, CRB_DEGENERACY_THRESHOLD,
};
use crate::optimizer::{joint_solve, rotation_grid};
use crate::solver::{fp_bcd_solve, zf_beams, SolverOptions};

/// Benchmark schemes of the tradeoff study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Joint beamforming and rotation optimization.
    Proposed,
    /// Beamforming optimized at fixed zero rotation.
    BeamformingOnly,
    /// Rotation search with zero-forcing beams.
    RotationOnlyZf,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::BeamformingOnly => "beamforming-only",
            Scheme::RotationOnlyZf => "rotation-only-zf",
        }
    }
}

/// Experiment configuration; mirrors the JSON config file field-for-field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub distribution: ScenarioDistribution,
    pub schemes: Vec<Scheme>,
    pub weight_grid: Vec<WeightPair>,
    pub monte_carlo_runs: usize,
    pub seed: u64,
    /// Rotation-search grid resolution.
    pub grid_points: usize,
    pub output_path: PathBuf,
    pub options: SolverOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            distribution: ScenarioDistribution::default(),
            schemes: vec![
                Scheme::Proposed,
                Scheme::BeamformingOnly,
                Scheme::RotationOnlyZf,
            ],
            weight_grid: default_weight_grid(),
            monte_carlo_runs: 20,
            seed: 1,
            grid_points: 361,
            output_path: PathBuf::from("out/tradeoff.csv"),
            options: SolverOptions::default(),
        }
    }
}

/// Eleven pairs with the communication weight stepping 0, 0.1, ..., 1.
pub fn default_weight_grid() -> Vec<WeightPair> {
    (0..=10)
        .map(|i| WeightPair::from_comm(i as f64 / 10.0).expect("valid weight"))
        .collect()
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution.validate()?;
        self.options.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("schemes: must not be empty".into()));
        }
        if self.weight_grid.is_empty() {
            return Err(Error::InvalidConfig("weight_grid: must not be empty".into()));
        }
        if self.monte_carlo_runs == 0 {
            return Err(Error::InvalidConfig("monte_carlo_runs: must be >= 1".into()));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig("grid_points: must be >= 2".into()));
        }
        if self.schemes.contains(&Scheme::RotationOnlyZf)
            && self.distribution.num_users > self.distribution.num_tx_antennas
        {
            return Err(Error::InvalidConfig(
                "schemes: rotation-only-zf needs num_users <= num_tx_antennas".into(),
            ));
        }
        Ok(())
    }
}

/// Seed for realization `index`, derived from the base seed with a
/// splitmix64 finalizer so that realizations are decorrelated and
/// independent of scheduling.
pub fn realization_seed(base_seed: u64, index: usize) -> u64 {
    let mut z = base_seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("workers: {e}")))?;
    Ok(pool.install(job))
}

/// Generic Monte Carlo driver: draws `runs` seeded scenarios and maps a
/// job over them, returning the outputs ordered by realization index. The
/// result is identical for any `workers` value (0 uses the global pool).
pub fn run_monte_carlo<T, F>(
    dist: &ScenarioDistribution,
    seed: u64,
    runs: usize,
    workers: usize,
    job: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &Scenario) -> Result<T> + Sync + Send,
{
    let dist = dist.clone();
    with_pool(workers, move || {
        (0..runs)
            .into_par_iter()
            .map(|i| {
                let scenario = draw_scenario(&dist, realization_seed(seed, i))?;
                job(i, &scenario)
            })
            .collect::<Result<Vec<T>>>()
    })?
}

/// Mean and standard error of a metric sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Summarize a sample; `None` for an empty one. A single observation has
/// zero standard error by convention.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std_error = if values.len() < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    };
    Some(Summary {
        mean,
        std_error,
        count: values.len(),
    })
}

/// Aggregated row of the tradeoff study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRecord {
    pub scheme: Scheme,
    pub comm_weight: f64,
    pub mean_sum_rate: f64,
    /// Linear-domain CRB mean over non-degenerate realizations.
    pub mean_crb: Option<f64>,
    /// Mean of `log10(CRB)` over the same realizations.
    pub mean_log10_crb: Option<f64>,
    pub mean_rotation: f64,
    /// Realizations contributing to the CRB means.
    pub runs: usize,
    pub degenerate_runs: usize,
}

/// One scheme evaluation on one realization (the provenance snapshot rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub realization: usize,
    pub scenario_seed: u64,
    pub scheme: Scheme,
    pub comm_weight: f64,
    pub rotation: f64,
    pub objective: f64,
    pub sum_rate: f64,
    pub crb: Option<f64>,
    pub converged: bool,
}

/// Complete tradeoff output: resolved config, aggregated records, and the
/// per-realization rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffDocument {
    pub config: ExperimentConfig,
    pub records: Vec<TradeoffRecord>,
    pub realizations: Vec<RealizationRecord>,
}

struct CellOutcome {
    rotation: f64,
    objective: f64,
    sum_rate: f64,
    crb: Option<f64>,
    converged: bool,
}

fn evaluate_cells(config: &ExperimentConfig, scenario: &Scenario) -> Result<Vec<CellOutcome>> {
    let grid = rotation_grid(scenario.rotation_region, config.grid_points)?;
    let chi = crb_chi(
        &scenario.rx_geometry,
        scenario.snapshots,
        scenario.target.sensing_snr,
    );

    // Zero-forcing beams depend on the rotation but not on the weights, so
    // the per-rotation rate and sensing objective are shared across the
    // whole weight grid.
    let zf_profile: Option<Vec<(f64, f64)>> = if config.schemes.contains(&Scheme::RotationOnlyZf) {
        let mut profile = Vec::with_capacity(grid.len());
        for &phi in &grid {
            let beams = zf_beams(scenario, phi, scenario.power_budget)?;
            let rate = sum_rate(scenario, &beams, phi)?;
            let sensing =
                sensing_objective(&BeamformingSolution::new(beams), scenario, phi);
            profile.push((rate, sensing));
        }
        Some(profile)
    } else {
        None
    };

    let mut cells = Vec::with_capacity(config.weight_grid.len() * config.schemes.len());
    for &weights in &config.weight_grid {
        for &scheme in &config.schemes {
            let cell = match scheme {
                Scheme::Proposed => {
                    let result = joint_solve(scenario, weights, &config.options, config.grid_points)?;
                    let crb = crb_closed(&result.best_solution, scenario, result.best_rotation);
                    CellOutcome {
                        rotation: result.best_rotation,
                        objective: result.best_objective,
                        sum_rate: result.best_sum_rate,
                        crb: crb.value(),
                        converged: result.best_converged,
                    }
                }
                Scheme::BeamformingOnly => {
                    let solve = fp_bcd_solve(scenario, 0.0, weights, &config.options)?;
                    let crb = crb_closed(&solve.solution, scenario, 0.0);
                    CellOutcome {
                        rotation: 0.0,
                        objective: solve.objective,
                        sum_rate: solve.sum_rate,
                        crb: crb.value(),
                        converged: solve.converged,
                    }
                }
                Scheme::RotationOnlyZf => {
                    let profile = zf_profile.as_ref().expect("zf profile prepared above");
                    let mut best = 0usize;
                    let mut best_value = f64::NEG_INFINITY;
                    for (i, &(rate, sensing)) in profile.iter().enumerate() {
                        let value = weights.comm() * rate + weights.sense() * sensing;
                        if value > best_value {
                            best_value = value;
                            best = i;
                        }
                    }
                    let (rate, sensing) = profile[best];
                    let crb = if sensing < CRB_DEGENERACY_THRESHOLD {
                        Crb::Degenerate
                    } else {
                        Crb::Finite(chi / sensing)
                    };
                    CellOutcome {
                        rotation: grid[best],
                        objective: best_value,
                        sum_rate: rate,
                        crb: crb.value(),
                        converged: true,
                    }
                }
            };
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Run the weight-sweep tradeoff study: for every weight pair and scheme,
/// average sum-rate and CRB over seeded Monte Carlo realizations.
/// Realizations flagged degenerate (no finite CRB) are excluded from the
/// CRB means and counted.
pub fn run_tradeoff_sweep(config: &ExperimentConfig, workers: usize) -> Result<TradeoffDocument> {
    config.validate()?;
    let outcomes = run_monte_carlo(
        &config.distribution,
        config.seed,
        config.monte_carlo_runs,
        workers,
        |_, scenario| evaluate_cells(config, scenario),
    )?;

    let num_schemes = config.schemes.len();
    let mut records = Vec::new();
    let mut realizations = Vec::new();
    for (wi, &weights) in config.weight_grid.iter().enumerate() {
        for (si, &scheme) in config.schemes.iter().enumerate() {
            let index = wi * num_schemes + si;
            let mut rates = Vec::new();
            let mut rotations = Vec::new();
            let mut crbs = Vec::new();
            let mut degenerate = 0usize;
            for (r, cells) in outcomes.iter().enumerate() {
                let cell = &cells[index];
                realizations.push(RealizationRecord {
                    realization: r,
                    scenario_seed: realization_seed(config.seed, r),
                    scheme,
                    comm_weight: weights.comm(),
                    rotation: cell.rotation,
                    objective: cell.objective,
                    sum_rate: cell.sum_rate,
                    crb: cell.crb,
                    converged: cell.converged,
                });
                rates.push(cell.sum_rate);
                rotations.push(cell.rotation);
                match cell.crb {
                    Some(v) => crbs.push(v),
                    None => degenerate += 1,
                }
            }
            let crb_summary = summarize(&crbs);
            let log_crbs: Vec<f64> = crbs.iter().map(|v| v.log10()).collect();
            records.push(TradeoffRecord {
                scheme,
                comm_weight: weights.comm(),
                mean_sum_rate: summarize(&rates).expect("runs >= 1").mean,
                mean_crb: crb_summary.map(|s| s.mean),
                mean_log10_crb: summarize(&log_crbs).map(|s| s.mean),
                mean_rotation: summarize(&rotations).expect("runs >= 1").mean,
                runs: crbs.len(),
                degenerate_runs: degenerate,
            });
        }
    }
    Ok(TradeoffDocument {
        config: config.clone(),
        records,
        realizations,
    })
}

/// CSV row of the tradeoff output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCsvRow {
    pub scheme: String,
    pub omega1: f64,
    pub mean_sum_rate_bps_hz: f64,
    pub mean_crb_rad2: Option<f64>,
    pub mean_log10_crb: Option<f64>,
    pub mean_phi_rad: f64,
    pub runs: usize,
}

impl From<&TradeoffRecord> for TradeoffCsvRow {
    fn from(record: &TradeoffRecord) -> Self {
        TradeoffCsvRow {
            scheme: record.scheme.label().to_string(),
            omega1: record.comm_weight,
            mean_sum_rate_bps_hz: record.mean_sum_rate,
            mean_crb_rad2: record.mean_crb,
            mean_log10_crb: record.mean_log10_crb,
            mean_phi_rad: record.mean_rotation,
            runs: record.runs,
        }
    }
}

/// Create the parent directory of an output path if missing.
pub fn ensure_parent_dir(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

/// Sidecar path next to a CSV output (same stem, `.json`).
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Write the tradeoff CSV and its JSON sidecar (full per-realization
/// records plus the resolved config).
pub fn write_tradeoff_outputs(document: &TradeoffDocument, csv_path: &Path) -> Result<()> {
    ensure_parent_dir(csv_path)?;
    let mut writer = csv::Writer::from_path(csv_path)?;
    for record in &document.records {
        writer.serialize(TradeoffCsvRow::from(record))?;
    }
    writer.flush()?;
    let json = serde_json::to_string_pretty(document)?;
    std::fs::write(sidecar_path(csv_path), json)?;
    Ok(())
}

/// Read back a tradeoff CSV.
pub fn read_tradeoff_csv(path: &Path) -> Result<Vec<TradeoffCsvRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for row in reader.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// One solved case of the beam-pattern study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeampatternCase {
    pub label: String,
    pub comm_weight: f64,
    pub rotation: f64,
    pub objective: f64,
    /// Normalized gains over the study's angle grid.
    pub gains: Vec<f64>,
    /// False when the covariance was all-zero and the raw pattern is kept.
    pub normalized: bool,
    pub target_effective_angle: f64,
    pub user_los_effective_angles: Vec<f64>,
}

/// Beam-pattern study output: normalized transmit gain over effective
/// spatial angles for the sensing-only, communication-only, and joint
/// cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeampatternDocument {
    pub config: ExperimentConfig,
    pub seed: u64,
    /// Effective spatial angle grid (radians).
    pub angles: Vec<f64>,
    pub cases: Vec<BeampatternCase>,
}

/// Draw one scenario and solve the sensing-only, communication-only, and
/// joint cases, each with its own optimized rotation; emit normalized beam
/// patterns over effective angles in `[-pi/3, pi/3]`.
pub fn run_beampattern(
    config: &ExperimentConfig,
    joint_weights: WeightPair,
    seed: u64,
) -> Result<BeampatternDocument> {
    config.validate()?;
    let scenario = draw_scenario(&config.distribution, seed)?;
    let n = config.grid_points.max(2);
    let angles: Vec<f64> = (0..n)
        .map(|i| -FRAC_PI_3 + i as f64 * (2.0 * FRAC_PI_3) / (n - 1) as f64)
        .collect();

    let cases = [
        ("sensing_only", WeightPair::sense_only()),
        ("communication_only", WeightPair::comm_only()),
        ("joint", joint_weights),
    ]
    .into_iter()
    .map(|(label, weights)| {
        let result = joint_solve(&scenario, weights, &config.options, config.grid_points)?;
        let pattern = beam_pattern(&result.best_solution, &scenario.tx_geometry, &angles);
        Ok(BeampatternCase {
            label: label.to_string(),
            comm_weight: weights.comm(),
            rotation: result.best_rotation,
            objective: result.best_objective,
            gains: pattern.gains,
            normalized: pattern.normalized,
            target_effective_angle: scenario.target.nominal_angle + result.best_rotation,
            user_los_effective_angles: scenario
                .users
                .iter()
                .map(|paths| paths[0].nominal_angle + result.best_rotation)
                .collect(),
        })
    })
    .collect::<Result<Vec<_>>>()?;

    Ok(BeampatternDocument {
        config: config.clone(),
        seed,
        angles,
        cases,
    })
}

/// Write the beam-pattern CSV (angle column plus one gain column per case)
/// and its JSON sidecar.
pub fn write_beampattern_outputs(document: &BeampatternDocument, csv_path: &Path) -> Result<()> {
    ensure_parent_dir(csv_path)?;
    let mut writer = csv::WriterBuilder::new().from_path(csv_path)?;
    let mut header = vec!["angle_rad".to_string()];
    header.extend(document.cases.iter().map(|c| c.label.clone()));
    writer.write_record(&header)?;
    for (i, angle) in document.angles.iter().enumerate() {
        let mut row = vec![angle.to_string()];
        row.extend(document.cases.iter().map(|c| c.gains[i].to_string()));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    std::fs::write(
        sidecar_path(csv_path),
        serde_json::to_string_pretty(document)?,
    )?;
    Ok(())
}

/// Aggregate statistics of repeated joint solves at one weight pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloDocument {
    pub config: ExperimentConfig,
    pub comm_weight: f64,
    pub runs: usize,
    pub degenerate_runs: usize,
    pub objective: Summary,
    pub sum_rate: Summary,
    pub crb: Option<Summary>,
    pub log10_crb: Option<Summary>,
    pub rotation: Summary,
}

/// Monte Carlo study of the proposed scheme at a single weight pair.
pub fn run_joint_monte_carlo(
    config: &ExperimentConfig,
    weights: WeightPair,
    workers: usize,
) -> Result<MonteCarloDocument> {
    config.validate()?;
    let samples = run_monte_carlo(
        &config.distribution,
        config.seed,
        config.monte_carlo_runs,
        workers,
        |_, scenario| {
            let result = joint_solve(scenario, weights, &config.options, config.grid_points)?;
            let crb = crb_closed(&result.best_solution, scenario, result.best_rotation);
            Ok((
                result.best_objective,
                result.best_sum_rate,
                crb.value(),
                result.best_rotation,
            ))
        },
    )?;
    let objectives: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let rates: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let crbs: Vec<f64> = samples.iter().filter_map(|s| s.2).collect();
    let log_crbs: Vec<f64> = crbs.iter().map(|v| v.log10()).collect();
    let rotations: Vec<f64> = samples.iter().map(|s| s.3).collect();
    Ok(MonteCarloDocument {
        config: config.clone(),
        comm_weight: weights.comm(),
        runs: samples.len(),
        degenerate_runs: samples.len() - crbs.len(),
        objective: summarize(&objectives).expect("runs >= 1"),
        sum_rate: summarize(&rates).expect("runs >= 1"),
        crb: summarize(&crbs),
        log10_crb: summarize(&log_crbs),
        rotation: summarize(&rotations).expect("runs >= 1"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_config() -> ExperimentConfig {
        ExperimentConfig {
            distribution: ScenarioDistribution {
                num_users: 2,
                num_nlos_paths: 1,
                num_tx_antennas: 4,
                num_rx_antennas: 4,
                ..ScenarioDistribution::default()
            },
            weight_grid: vec![
                WeightPair::from_comm(0.0).unwrap(),
                WeightPair::from_comm(0.5).unwrap(),
                WeightPair::from_comm(1.0).unwrap(),
            ],
            monte_carlo_runs: 3,
            seed: 7,
            grid_points: 9,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn realization_seeds_are_distinct_and_stable() {
        let a = realization_seed(42, 0);
        let b = realization_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, realization_seed(42, 0));
        assert_ne!(realization_seed(43, 0), a);
    }

    #[test]
    fn monte_carlo_single_run_mean_is_sample() {
        let dist = ScenarioDistribution {
            num_tx_antennas: 2,
            num_rx_antennas: 2,
            num_users: 1,
            num_nlos_paths: 0,
            ..ScenarioDistribution::default()
        };
        let values =
            run_monte_carlo(&dist, 5, 1, 0, |_, sc| Ok(sc.target.nominal_angle)).unwrap();
        let summary = summarize(&values).unwrap();
        assert_eq!(summary.count, 1);
        assert_relative_eq!(summary.mean, values[0]);
        assert_eq!(summary.std_error, 0.0);
    }

    #[test]
    fn constant_metric_has_zero_standard_error() {
        let summary = summarize(&[2.5, 2.5, 2.5, 2.5]).unwrap();
        assert_relative_eq!(summary.mean, 2.5);
        assert_eq!(summary.std_error, 0.0);
    }

    #[test]
    fn monte_carlo_is_worker_count_invariant() {
        let dist = ScenarioDistribution {
            num_tx_antennas: 4,
            num_rx_antennas: 4,
            num_users: 2,
            num_nlos_paths: 1,
            ..ScenarioDistribution::default()
        };
        let job = |_: usize, sc: &Scenario| {
            Ok(sc.users[0][0].nominal_angle + sc.target.nominal_angle)
        };
        let serial = run_monte_carlo(&dist, 9, 8, 1, job).unwrap();
        let parallel = run_monte_carlo(&dist, 9, 8, 4, job).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn default_weight_grid_has_eleven_pairs() {
        let grid = default_weight_grid();
        assert_eq!(grid.len(), 11);
        assert_relative_eq!(grid[0].comm(), 0.0);
        assert_relative_eq!(grid[10].comm(), 1.0);
    }

    #[test]
    fn tradeoff_sweep_is_deterministic_and_worker_invariant() {
        let config = tiny_config();
        let a = run_tradeoff_sweep(&config, 1).unwrap();
        let b = run_tradeoff_sweep(&config, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 3 * 3);
        assert_eq!(a.realizations.len(), 3 * 3 * 3);
    }

    #[test]
    fn tradeoff_endpoint_dominance_per_realization() {
        let config = tiny_config();
        let doc = run_tradeoff_sweep(&config, 0).unwrap();
        for r in 0..config.monte_carlo_runs {
            let find = |scheme: Scheme, comm: f64| {
                doc.realizations
                    .iter()
                    .find(|rec| {
                        rec.realization == r && rec.scheme == scheme && rec.comm_weight == comm
                    })
                    .unwrap()
            };
            // Communication endpoint: proposed rate >= fixed-rotation rate.
            let proposed = find(Scheme::Proposed, 1.0);
            let fixed = find(Scheme::BeamformingOnly, 1.0);
            assert!(proposed.sum_rate >= fixed.sum_rate - 1e-9);
            // Sensing endpoint: proposed CRB <= fixed-rotation CRB.
            let proposed = find(Scheme::Proposed, 0.0);
            let fixed = find(Scheme::BeamformingOnly, 0.0);
            assert!(proposed.crb.unwrap() <= fixed.crb.unwrap() * (1.0 + 1e-9));
        }
    }

    #[test]
    fn outputs_round_trip() {
        let config = tiny_config();
        let doc = run_tradeoff_sweep(&config, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("tradeoff.csv");
        write_tradeoff_outputs(&doc, &csv_path).unwrap();

        let rows = read_tradeoffs(&csv_path);
        let expected: Vec<TradeoffCsvRow> =
            doc.records.iter().map(TradeoffCsvRow::from).collect();
        assert_eq!(rows, expected);

        let sidecar: TradeoffDocument = serde_json::from_str(
            &std::fs::read_to_string(sidecar_path(&csv_path)).unwrap(),
        )
        .unwrap();
        assert_eq!(sidecar, doc);

        // Byte-identical on re-write.
        let first = std::fs::read(&csv_path).unwrap();
        write_tradeoff_outputs(&doc, &csv_path).unwrap();
        assert_eq!(first, std::fs::read(&csv_path).unwrap());
    }

    fn read_tradeoffs(path: &Path) -> Vec<TradeoffCsvRow> {
        read_tradeoff_csv(path).unwrap()
    }

    #[test]
    fn beampattern_sensing_case_peaks_at_target() {
        let mut config = tiny_config();
        config.distribution.num_tx_antennas = 8;
        config.distribution.num_rx_antennas = 8;
        config.grid_points = 61;
        let doc = run_beampattern(&config, WeightPair::from_comm(0.5).unwrap(), 11).unwrap();
        assert_eq!(doc.cases.len(), 3);
        let sensing = &doc.cases[0];
        assert_eq!(sensing.label, "sensing_only");
        let (argmax, _) = sensing
            .gains
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let cell = doc.angles[1] - doc.angles[0];
        assert!(
            (doc.angles[argmax] - sensing.target_effective_angle).abs() <= cell + 1e-12,
            "peak {} target {}",
            doc.angles[argmax],
            sensing.target_effective_angle
        );

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("pattern.csv");
        write_beampattern_outputs(&doc, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert!(text.starts_with("angle_rad,sensing_only,communication_only,joint"));
        let sidecar: BeampatternDocument = serde_json::from_str(
            &std::fs::read_to_string(sidecar_path(&csv_path)).unwrap(),
        )
        .unwrap();
        assert_eq!(sidecar, doc);
    }

    #[test]
    fn joint_monte_carlo_document_is_deterministic() {
        let mut config = tiny_config();
        config.monte_carlo_runs = 2;
        let weights = WeightPair::from_comm(0.5).unwrap();
        let a = run_joint_monte_carlo(&config, weights, 1).unwrap();
        let b = run_joint_monte_carlo(&config, weights, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs, 2);
        assert_eq!(a.degenerate_runs, 0);
    }

    #[test]
    fn config_validation_reports_field_paths() {
        let mut config = tiny_config();
        config.weight_grid.clear();
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("weight_grid"));
        let text = r#"{ "unknown_field": 1 }"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
    }
}
