//! Monte Carlo benchmark of the two filters on a vehicle driving a circle
//! with odometry and position fixes.
//!
//! One repetition simulates a noisy ground-truth trajectory, feeds the same
//! inputs and fixes to a filter, and logs centre, bounds, containment and
//! update time per step. [`run_experiment`] averages the resulting
//! [`MetricsReport`]s over repetitions; [`compare`] runs both filters on the
//! same realizations.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::euclidean::{vehicle_step, EuclideanFilter, ZsmfState};
use crate::gain::GainStrategy;
use crate::group_zonotope::{GroupZonotope, Side, StateBounds};
use crate::invariant::{InnovationMode, InvariantFilter, SystemModel};
use crate::se2::{Se2Element, TangentVector};
use crate::zonotope::{IntervalBox, Zonotope};

/// Steps excluded from the containment rate while the initial error decays.
pub const DEFAULT_BURN_IN: usize = 200;
/// Tolerance of the per-step membership test.
pub const CONTAINMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Zsmf,
    Inzsmf,
}

impl FilterKind {
    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Zsmf => "zsmf",
            FilterKind::Inzsmf => "inzsmf",
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainKind {
    Poles,
    Fradius,
}

impl std::fmt::Display for GainKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GainKind::Poles => "poles",
            GainKind::Fradius => "fradius",
        })
    }
}

/// Everything needed to reproduce one experiment cell.
///
/// States are `[θ, x₁, x₂]`; the noise generators and the initial error
/// generator are diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub true_init: [f64; 3],
    pub est_init: [f64; 3],
    pub radius: f64,
    pub speed: f64,
    pub delta: f64,
    pub steps: usize,
    pub reps: usize,
    pub seed: u64,
    pub h_w: [f64; 3],
    pub h_v: [f64; 2],
    pub h0: [f64; 3],
    pub reduction_order: usize,
    pub filter: FilterKind,
    pub gain: GainKind,
    pub poles: Vec<f64>,
    pub side: Side,
    pub innovation: InnovationMode,
    pub burn_in: usize,
    pub track_containment: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            true_init: [FRAC_PI_2, 0.0, 0.0],
            est_init: [FRAC_PI_2, 0.0, 0.0],
            radius: 20.0,
            speed: 8.0,
            delta: 0.01,
            steps: 2000,
            reps: 5,
            seed: 0,
            h_w: [0.1, 0.1, 0.1],
            h_v: [1.0, 1.0],
            h0: [1.7, 5.2, 5.2],
            reduction_order: 30,
            filter: FilterKind::Inzsmf,
            gain: GainKind::Fradius,
            poles: vec![0.95, 0.98, 0.98],
            side: Side::Left,
            innovation: InnovationMode::Alternative,
            burn_in: DEFAULT_BURN_IN,
            track_containment: true,
        }
    }
}

/// Initial estimates `(θ̂₀, x̂₀⁽¹⁾, x̂₀⁽²⁾)` of the eight initial-error rows.
pub const TABLE1_INITS: [[f64; 3]; 8] = [
    [FRAC_PI_2, 0.0, 0.0],
    [FRAC_PI_4, 0.0, 0.0],
    [0.0, 0.0, 0.0],
    [FRAC_PI_2, 5.0, 5.0],
    [FRAC_PI_4, 5.0, 5.0],
    [0.0, 5.0, 5.0],
    [0.0, 5.0, -5.0],
    [0.0, -5.0, 5.0],
];

pub const PRESET_NAMES: [&str; 9] = [
    "table1-row1",
    "table1-row2",
    "table1-row3",
    "table1-row4",
    "table1-row5",
    "table1-row6",
    "table1-row7",
    "table1-row8",
    "table2",
];

impl ExperimentConfig {
    /// `table1-row1` … `table1-row8` use the F-radius gain; `table2` starts
    /// from `(0, 5, −5)` with poles `[0.95, 0.98, 0.98]`.
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self {
            name: name.to_string(),
            ..Self::default()
        };
        if name == "table2" {
            return Ok(Self {
                est_init: [0.0, 5.0, -5.0],
                gain: GainKind::Poles,
                ..base
            });
        }
        let row = name
            .strip_prefix("table1-row")
            .and_then(|r| r.parse::<usize>().ok())
            .filter(|r| (1..=8).contains(r))
            .ok_or_else(|| Error::InvalidConfig {
                field: "preset",
                reason: format!("unknown preset '{name}', expected one of {}", PRESET_NAMES.join(", ")),
            })?;
        Ok(Self {
            est_init: TABLE1_INITS[row - 1],
            ..base
        })
    }

    pub fn table1() -> Vec<Self> {
        PRESET_NAMES[..8]
            .iter()
            .map(|n| Self::preset(n).expect("built-in preset"))
            .collect()
    }

    /// Heading rate of the circular path, `v / r`.
    pub fn angular_rate(&self) -> f64 {
        self.speed / self.radius
    }

    pub fn input(&self) -> TangentVector {
        TangentVector::new(self.angular_rate(), self.speed, 0.0)
    }

    pub fn strategy(&self) -> Result<GainStrategy> {
        match self.gain {
            GainKind::Fradius => Ok(GainStrategy::FRadiusOptimal),
            GainKind::Poles => GainStrategy::real_poles(&self.poles),
        }
    }

    pub fn model(&self) -> Result<SystemModel> {
        Ok(SystemModel::vehicle(self.delta, diag(&self.h_w), diag(&self.h_v))?
            .with_innovation(self.innovation))
    }

    pub fn with_filter(&self, filter: FilterKind) -> Self {
        Self {
            filter,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: String| Err(Error::InvalidConfig { field, reason });
        if self.steps == 0 {
            return invalid("steps", "must be at least 1".into());
        }
        if self.reps == 0 {
            return invalid("reps", "must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return invalid("delta", format!("must be positive, got {}", self.delta));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return invalid("radius", format!("must be positive, got {}", self.radius));
        }
        if !self.speed.is_finite() {
            return invalid("speed", "must be finite".into());
        }
        if self.reduction_order <= 3 {
            return invalid(
                "reduction_order",
                format!("must exceed the state dimension 3, got {}", self.reduction_order),
            );
        }
        let finite_nonneg = |v: &[f64]| v.iter().all(|x| x.is_finite() && *x >= 0.0);
        if !finite_nonneg(&self.h_w) {
            return invalid("h_w", "entries must be finite and nonnegative".into());
        }
        if !finite_nonneg(&self.h_v) {
            return invalid("h_v", "entries must be finite and nonnegative".into());
        }
        if !finite_nonneg(&self.h0) {
            return invalid("h0", "entries must be finite and nonnegative".into());
        }
        if self.true_init.iter().chain(&self.est_init).any(|x| !x.is_finite()) {
            return invalid("init", "initial states must be finite".into());
        }
        if self.gain == GainKind::Poles {
            self.strategy().map_err(|e| Error::InvalidConfig {
                field: "poles",
                reason: e.to_string(),
            })?;
        }
        // The F-radius gain inverts C·P·Cᵀ + Q_v, which is singular without
        // measurement noise when the prior collapses.
        if self.gain == GainKind::Fradius && self.h_v.iter().any(|v| *v == 0.0) {
            return invalid("h_v", "the F-radius gain needs nonzero measurement bounds".into());
        }
        Ok(())
    }
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(v))
}

/// A simulated run: `states[k]` for `k = 0..=N`, `measurements[k]` of
/// `states[k]` for `k = 0..N`, and the noise that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector3<f64>>,
    pub measurements: Vec<Vector2<f64>>,
    pub process_noise: Vec<Vector3<f64>>,
    pub measurement_noise: Vec<Vector2<f64>>,
}

/// Euler-discretized vehicle with noise drawn uniformly on the generator
/// hypercubes of `H_w` and `H_v`.
pub fn simulate_truth(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Trajectory {
    let w_set = Zonotope::centered(diag(&config.h_w));
    let v_set = Zonotope::centered(diag(&config.h_v));
    let u = config.input();
    let n = config.steps;
    let mut states = Vec::with_capacity(n + 1);
    let mut measurements = Vec::with_capacity(n);
    let mut process_noise = Vec::with_capacity(n);
    let mut measurement_noise = Vec::with_capacity(n);
    let mut x = Vector3::from(config.true_init);
    states.push(x);
    for _ in 0..n {
        let v = v_set.sample(rng);
        let v = Vector2::new(v[0], v[1]);
        measurements.push(Vector2::new(x[1], x[2]) + v);
        measurement_noise.push(v);
        let w = w_set.sample(rng);
        let w = Vector3::new(w[0], w[1], w[2]);
        x = vehicle_step(&x, u, &w, config.delta);
        process_noise.push(w);
        states.push(x);
    }
    Trajectory {
        states,
        measurements,
        process_noise,
        measurement_noise,
    }
}

/// Seeded stream for one repetition; independent of the filter so that both
/// filters see the same realization.
pub fn repetition_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Per-step record of a filter run; `step` counts completed updates.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub truth: Vector3<f64>,
    pub estimate: Vector3<f64>,
    pub bounds: StateBounds,
    pub contained: Option<bool>,
    pub step_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub filter: FilterKind,
    pub records: Vec<StepRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse_theta: f64,
    pub rmse_x: f64,
    pub aar_theta: f64,
    pub aar_x: f64,
    pub art_seconds: f64,
    /// `NaN` when containment was not tracked.
    pub containment_rate: f64,
}

/// Percentage improvements of a candidate over a baseline report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub rmse_theta: f64,
    pub rmse_x: f64,
    pub aar_theta: f64,
    pub aar_x: f64,
    pub art_seconds: f64,
}

/// Relative reduction `(M₁ − M₂)/M₁` in percent, with `M₁` the baseline;
/// positive when the candidate is smaller.
pub fn improvement(baseline: f64, candidate: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::ZeroBaseline);
    }
    Ok((baseline - candidate) / baseline * 100.0)
}

impl Improvement {
    pub fn between(baseline: &MetricsReport, candidate: &MetricsReport) -> Result<Self> {
        Ok(Self {
            rmse_theta: improvement(baseline.rmse_theta, candidate.rmse_theta)?,
            rmse_x: improvement(baseline.rmse_x, candidate.rmse_x)?,
            aar_theta: improvement(baseline.aar_theta, candidate.aar_theta)?,
            aar_x: improvement(baseline.aar_x, candidate.aar_x)?,
            art_seconds: improvement(baseline.art_seconds, candidate.art_seconds)?,
        })
    }
}

/// Angle difference wrapped to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// `(RMSE(θ), RMSE(x))` over paired states, heading errors wrapped.
pub fn rmse_metrics(truth: &[Vector3<f64>], estimates: &[Vector3<f64>]) -> Result<(f64, f64)> {
    if truth.len() != estimates.len() {
        return Err(Error::LengthMismatch(truth.len(), estimates.len()));
    }
    if truth.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let n = truth.len() as f64;
    let (mut st, mut sx) = (0.0, 0.0);
    for (t, e) in truth.iter().zip(estimates) {
        st += wrap_angle(t[0] - e[0]).powi(2);
        sx += (t[1] - e[1]).powi(2) + (t[2] - e[2]).powi(2);
    }
    Ok(((st / n).sqrt(), (sx / n).sqrt()))
}

/// `(AAR(θ), AAR(x))`: mean heading width and mean position box area.
pub fn aar_metrics(bounds: &[StateBounds]) -> Result<(f64, f64)> {
    if bounds.is_empty() {
        return Err(Error::LengthMismatch(0, 0));
    }
    let n = bounds.len() as f64;
    let theta = bounds.iter().map(StateBounds::theta_width).sum::<f64>() / n;
    let area = bounds.iter().map(StateBounds::position_area).sum::<f64>() / n;
    Ok((theta, area))
}

impl RunLog {
    pub fn metrics(&self, burn_in: usize) -> Result<MetricsReport> {
        let truth: Vec<_> = self.records.iter().map(|r| r.truth).collect();
        let est: Vec<_> = self.records.iter().map(|r| r.estimate).collect();
        let (rmse_theta, rmse_x) = rmse_metrics(&truth, &est)?;
        let bounds: Vec<_> = self.records.iter().map(|r| r.bounds.clone()).collect();
        let (aar_theta, aar_x) = aar_metrics(&bounds)?;
        let art_seconds =
            self.records.iter().map(|r| r.step_time_s).sum::<f64>() / self.records.len() as f64;
        Ok(MetricsReport {
            rmse_theta,
            rmse_x,
            aar_theta,
            aar_x,
            art_seconds,
            containment_rate: containment_rate(&self.records, burn_in),
        })
    }
}

/// Fraction of tracked steps after `burn_in` whose true state was inside the
/// reported set; all tracked steps count when the run is shorter than the
/// burn-in. `NaN` if nothing was tracked.
pub fn containment_rate(records: &[StepRecord], burn_in: usize) -> f64 {
    let tail: Vec<bool> = records
        .iter()
        .filter(|r| r.step > burn_in)
        .filter_map(|r| r.contained)
        .collect();
    let flags = if tail.is_empty() {
        records.iter().filter_map(|r| r.contained).collect()
    } else {
        tail
    };
    if flags.is_empty() {
        return f64::NAN;
    }
    flags.iter().filter(|c| **c).count() as f64 / flags.len() as f64
}

fn state_vector(x: &Se2Element) -> Vector3<f64> {
    Vector3::new(x.theta, x.x[0], x.x[1])
}

/// Heading interval and position box of a right-invariant group zonotope,
/// using the first-order map `x ≈ x̂ + σ·J·x̂ + u`.
fn right_bounds(gz: &GroupZonotope) -> Result<StateBounds> {
    let c = &gz.center;
    let lever = DMatrix::from_row_slice(2, 3, &[-c.x[1], 1.0, 0.0, c.x[0], 0.0, 1.0]);
    let theta_radius: f64 = gz.generators.row(0).iter().map(|v| v.abs()).sum();
    let hull = Zonotope::new(DVector::from_column_slice(c.x.as_slice()), lever * &gz.generators)?
        .interval_hull();
    Ok(StateBounds {
        theta: (c.theta - theta_radius, c.theta + theta_radius),
        position: hull,
    })
}

/// Bounds reported for a group zonotope of either handedness.
pub fn group_bounds(gz: &GroupZonotope) -> Result<StateBounds> {
    match gz.side {
        Side::Left => gz.extract_bounds(),
        Side::Right => right_bounds(gz),
    }
}

/// Bounds of a Euclidean zonotope `⟨x̂, H⟩` over `[θ, x₁, x₂]`.
pub fn euclidean_bounds(state: &ZsmfState) -> StateBounds {
    let hull = state.zonotope().interval_hull();
    let position = IntervalBox::new(
        DVector::from_row_slice(&[hull.lower[1], hull.lower[2]]),
        DVector::from_row_slice(&[hull.upper[1], hull.upper[2]]),
    )
    .expect("hull bounds are ordered");
    StateBounds {
        theta: (hull.lower[0], hull.upper[0]),
        position,
    }
}

/// Runs the configured filter over a simulated trajectory.
pub fn run_filter(config: &ExperimentConfig, trajectory: &Trajectory) -> Result<RunLog> {
    let model = config.model()?;
    let strategy = config.strategy()?;
    let u = config.input();
    let h0 = diag(&config.h0);
    let mut records = Vec::with_capacity(config.steps);
    match config.filter {
        FilterKind::Inzsmf => {
            let mut filter = InvariantFilter::new(model, strategy, config.side);
            let [t, x1, x2] = config.est_init;
            let mut state = filter.initial_state(Se2Element::new(t, x1, x2), h0, config.reduction_order)?;
            for (k, y) in trajectory.measurements.iter().enumerate() {
                let start = Instant::now();
                state = filter.update(&state, u, y)?;
                let step_time_s = start.elapsed().as_secs_f64();
                let truth = trajectory.states[k + 1];
                let contained = if config.track_containment {
                    let x = Se2Element::new(truth[0], truth[1], truth[2]);
                    // A true state beyond the logarithm's branch is outside.
                    Some(state.estimate.contains_state(&x, CONTAINMENT_TOL).unwrap_or(false))
                } else {
                    None
                };
                records.push(StepRecord {
                    step: k + 1,
                    truth,
                    estimate: state_vector(state.center()),
                    bounds: group_bounds(&state.estimate)?,
                    contained,
                    step_time_s,
                });
            }
        }
        FilterKind::Zsmf => {
            let filter = EuclideanFilter::new(model, strategy);
            let mut state = ZsmfState::new(Vector3::from(config.est_init), h0, config.reduction_order)?;
            for (k, y) in trajectory.measurements.iter().enumerate() {
                let start = Instant::now();
                state = filter.update(&state, u, y)?;
                let step_time_s = start.elapsed().as_secs_f64();
                let truth = trajectory.states[k + 1];
                let contained = if config.track_containment {
                    let x = DVector::from_column_slice(truth.as_slice());
                    Some(state.zonotope().contains(&x, CONTAINMENT_TOL)?)
                } else {
                    None
                };
                records.push(StepRecord {
                    step: k + 1,
                    truth,
                    estimate: state.center,
                    bounds: euclidean_bounds(&state),
                    contained,
                    step_time_s,
                });
            }
        }
    }
    Ok(RunLog {
        filter: config.filter,
        records,
    })
}

/// Mean of each metric across repetitions.
pub fn mean_report(reports: &[MetricsReport]) -> MetricsReport {
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    MetricsReport {
        rmse_theta: mean(|r| r.rmse_theta),
        rmse_x: mean(|r| r.rmse_x),
        aar_theta: mean(|r| r.aar_theta),
        aar_x: mean(|r| r.aar_x),
        art_seconds: mean(|r| r.art_seconds),
        containment_rate: mean(|r| r.containment_rate),
    }
}

#[derive(Debug, Clone)]
pub struct Repetition {
    pub index: usize,
    pub trajectory: Trajectory,
    pub log: RunLog,
    pub report: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub repetitions: Vec<Repetition>,
    pub mean: MetricsReport,
}

/// All repetitions of one configuration, run in parallel.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let repetitions = (0..config.reps)
        .into_par_iter()
        .map(|index| {
            let trajectory = simulate_truth(config, &mut repetition_rng(config.seed, index));
            let log = run_filter(config, &trajectory)?;
            let report = log.metrics(config.burn_in)?;
            Ok(Repetition {
                index,
                trajectory,
                log,
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<_> = repetitions.iter().map(|r| r.report).collect();
    Ok(ExperimentResult {
        config: config.clone(),
        mean: mean_report(&reports),
        repetitions,
    })
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub baseline: ExperimentResult,
    pub candidate: ExperimentResult,
    pub improvement: Improvement,
}

/// Euclidean baseline against the invariant filter on identical noise
/// realizations.
pub fn compare(config: &ExperimentConfig) -> Result<Comparison> {
    let baseline = run_experiment(&config.with_filter(FilterKind::Zsmf))?;
    let candidate = run_experiment(&config.with_filter(FilterKind::Inzsmf))?;
    let improvement = Improvement::between(&baseline.mean, &candidate.mean)?;
    Ok(Comparison {
        baseline,
        candidate,
        improvement,
    })
}
