//! The exploration loop: a random start, a short constrained initialization
//! walk, then iterative train/predict/select/traverse/measure until the
//! sample budget is spent.
//!
//! Every random decision is drawn from counter-based streams derived from
//! the trial seed (see [`crate::stream`]), which makes a whole trial a pure
//! function of its config: same config, same record, bit for bit, on any
//! thread schedule.

use alloc::vec::Vec;
use core::fmt;

use crate::gp::{
    fit, train_hyperparameters, GpError, KernelHyperparams, OptimizerConfig, TrainingSet,
};
use crate::point::Point2;
use crate::policy::{self, Policy, PolicyError, SelectionContext};
use crate::stream::{mix, SeededStream};
use crate::surface::SurfaceGrid;

// Domain-separation salts for the per-trial streams. Init streams hang off
// the trial seed alone so that campaigns can share one initialization across
// policies; the policy-phase noise stream additionally mixes in the
// position of the policy in the campaign list.
const SALT_INIT_CHOICE: u64 = 0x0001;
const SALT_INIT_NOISE: u64 = 0x0002;
const SALT_POLICY_NOISE: u64 = 0x0003;

/// Salt for re-deriving per-policy trial seeds when a campaign runs with
/// shared starts disabled.
pub const SALT_UNSHARED_START: u64 = 0x0004;

/// Length and reach of the initialization walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitWalkConfig {
    /// Number of points measured before the policy takes over.
    pub count: usize,
    /// Walk reach per move, in grid steps.
    pub horizon_multiplier: u32,
}

impl Default for InitWalkConfig {
    fn default() -> Self {
        Self { count: 10, horizon_multiplier: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub policy: Policy,
    /// Total samples to take, initialization included.
    pub n_samples: usize,
    pub seed: u64,
    /// Position of this policy within a campaign's policy list; decorrelates
    /// the policy-phase noise streams of runs that share a seed (and with it
    /// an initialization). Zero for standalone trials.
    pub policy_stream_index: u32,
    pub optimizer: OptimizerConfig,
    pub init_hyperparams: KernelHyperparams,
    /// Start each step's training from the previous step's hyperparameters
    /// rather than from `init_hyperparams`.
    pub warm_start: bool,
    pub init_walk: InitWalkConfig,
}

impl TrialConfig {
    pub fn new(policy: Policy, n_samples: usize, seed: u64) -> Self {
        Self {
            policy,
            n_samples,
            seed,
            policy_stream_index: 0,
            optimizer: OptimizerConfig::default(),
            init_hyperparams: KernelHyperparams::default(),
            warm_start: true,
            init_walk: InitWalkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExplorerError {
    InvalidConfig(&'static str),
    Gp(GpError),
    Policy(PolicyError),
}

impl fmt::Display for ExplorerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExplorerError::InvalidConfig(what) => write!(f, "invalid trial config: {what}"),
            ExplorerError::Gp(e) => write!(f, "model failure: {e}"),
            ExplorerError::Policy(e) => write!(f, "selection failure: {e}"),
        }
    }
}

impl core::error::Error for ExplorerError {}

impl From<GpError> for ExplorerError {
    fn from(e: GpError) -> Self {
        ExplorerError::Gp(e)
    }
}

impl From<PolicyError> for ExplorerError {
    fn from(e: PolicyError) -> Self {
        ExplorerError::Policy(e)
    }
}

/// Complete story of one trial. All traces are index-aligned with
/// `waypoints` and have length `n_samples`; the first `init_walk.count`
/// entries of the model traces (RMSE, mean variance, hyperparameters) repeat
/// the value from the single post-initialization fit, while the movement
/// traces are per-move from the start.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    /// Where the agent was placed before any measuring; never itself
    /// measured unless the walk revisits it.
    pub start_index: usize,
    pub waypoints: Vec<usize>,
    pub observations: Vec<f64>,
    /// Global RMSE of the posterior mean against the noiseless target, from
    /// the model available when each sample was chosen.
    pub rmse_trace: Vec<f64>,
    /// Cumulative 3D traveled distance after each move, starting with the
    /// move from the start position.
    pub cum_distance_trace: Vec<f64>,
    /// Mean posterior variance over the whole grid per step.
    pub variance_trace: Vec<f64>,
    pub hyperparam_trace: Vec<KernelHyperparams>,
    /// Marks samples reached through the empty-horizon fallback (or an
    /// exhausted init-walk neighborhood) rather than the policy's own set.
    pub fallback_flags: Vec<bool>,
}

/// In-flight trial. Sequential by construction; concurrency lives above, at
/// the campaign level, where distinct trials share nothing mutable.
pub struct TrialState<'a> {
    grid: &'a SurfaceGrid,
    config: &'a TrialConfig,
    positions: Vec<Point2>,
    train: TrainingSet,
    unsampled: Vec<bool>,
    current: usize,
    cum_distance: f64,
    hyperparams: KernelHyperparams,
    policy_noise: SeededStream,
    record: TrialRecord,
}

impl<'a> TrialState<'a> {
    /// Places the agent uniformly at random, walks `init_walk.count` points
    /// (each drawn uniformly from the unsampled points within
    /// `horizon_multiplier` grid steps of the previous position, nearest
    /// unsampled if none), measures them, and trains a first model.
    pub fn initialize(
        grid: &'a SurfaceGrid,
        config: &'a TrialConfig,
    ) -> Result<Self, ExplorerError> {
        if config.n_samples > grid.len() {
            return Err(ExplorerError::InvalidConfig(
                "n_samples exceeds the number of grid points",
            ));
        }
        if config.init_walk.count == 0 {
            return Err(ExplorerError::InvalidConfig(
                "initialization walk needs at least one point",
            ));
        }
        // Equality is the degenerate init-only budget: walk, fit once, stop.
        if config.init_walk.count > config.n_samples {
            return Err(ExplorerError::InvalidConfig(
                "n_samples is smaller than the initialization walk",
            ));
        }

        let mut choice = SeededStream::new(mix(config.seed, SALT_INIT_CHOICE));
        let mut init_noise = SeededStream::new(mix(config.seed, SALT_INIT_NOISE));
        let policy_noise = SeededStream::new(mix(
            mix(config.seed, SALT_POLICY_NOISE),
            config.policy_stream_index as u64,
        ));

        let positions = grid.positions();
        let start_index = choice.uniform_index(grid.len());
        let mut state = Self {
            grid,
            config,
            positions,
            train: TrainingSet::default(),
            unsampled: alloc::vec![true; grid.len()],
            current: start_index,
            cum_distance: 0.0,
            hyperparams: config.init_hyperparams,
            policy_noise,
            record: TrialRecord {
                seed: config.seed,
                start_index,
                waypoints: Vec::with_capacity(config.n_samples),
                observations: Vec::with_capacity(config.n_samples),
                rmse_trace: Vec::with_capacity(config.n_samples),
                cum_distance_trace: Vec::with_capacity(config.n_samples),
                variance_trace: Vec::with_capacity(config.n_samples),
                hyperparam_trace: Vec::with_capacity(config.n_samples),
                fallback_flags: Vec::with_capacity(config.n_samples),
            },
        };

        let reach = config.init_walk.horizon_multiplier as f64 * grid.step()
            + policy::geometric_epsilon(grid.step());
        let reach_sq = reach * reach;
        for _ in 0..config.init_walk.count {
            let here = state.positions[state.current];
            let within: Vec<usize> = (0..grid.len())
                .filter(|&i| {
                    state.unsampled[i] && here.sq_distance(state.positions[i]) <= reach_sq
                })
                .collect();
            let (next, fallback) = if within.is_empty() {
                (state.nearest_unsampled(), true)
            } else {
                (within[choice.uniform_index(within.len())], false)
            };
            let y = state.grid.measure(next, &mut init_noise);
            state.visit(next, fallback, y);
        }

        state.hyperparams = train_hyperparameters(
            &state.train,
            &config.init_hyperparams,
            &config.optimizer,
        )?;
        let posterior = fit(&state.train, &state.hyperparams)?.predict(&state.positions);
        let rmse = state.rmse_of(&posterior.mean);
        let mean_var = mean(&posterior.variance);
        for _ in 0..config.init_walk.count {
            state.record.rmse_trace.push(rmse);
            state.record.variance_trace.push(mean_var);
            state.record.hyperparam_trace.push(state.hyperparams);
        }
        Ok(state)
    }

    fn nearest_unsampled(&self) -> usize {
        let here = self.positions[self.current];
        let mut best = usize::MAX;
        let mut best_sq = f64::INFINITY;
        for i in 0..self.unsampled.len() {
            if self.unsampled[i] {
                let sq = here.sq_distance(self.positions[i]);
                if sq < best_sq {
                    best_sq = sq;
                    best = i;
                }
            }
        }
        best
    }

    /// Moves to `next` with measured value `y` and appends the movement-side
    /// records.
    fn visit(&mut self, next: usize, fallback: bool, y: f64) {
        self.cum_distance += self.grid.traversal_distance(self.current, next);
        self.train.push(self.positions[next], y);
        self.unsampled[next] = false;
        self.current = next;
        self.record.waypoints.push(next);
        self.record.observations.push(y);
        self.record.cum_distance_trace.push(self.cum_distance);
        self.record.fallback_flags.push(fallback);
    }

    fn rmse_of(&self, posterior_mean: &[f64]) -> f64 {
        let target = self.grid.target();
        let sum_sq: f64 = posterior_mean
            .iter()
            .zip(target)
            .map(|(m, t)| (m - t) * (m - t))
            .sum();
        libm::sqrt(sum_sq / target.len() as f64)
    }

    pub fn samples_taken(&self) -> usize {
        self.record.waypoints.len()
    }

    pub fn is_done(&self) -> bool {
        self.samples_taken() >= self.config.n_samples
    }

    /// One policy step: retrain hyperparameters (warm-started per config),
    /// predict over the full grid, let the policy choose, then travel,
    /// measure, and record. The recorded RMSE and variance describe the
    /// posterior the choice was made from.
    pub fn step(&mut self) -> Result<(), ExplorerError> {
        assert!(!self.is_done(), "step past the sample budget");
        let warm = if self.config.warm_start {
            self.hyperparams
        } else {
            self.config.init_hyperparams
        };
        self.hyperparams = train_hyperparameters(&self.train, &warm, &self.config.optimizer)?;
        let posterior = fit(&self.train, &self.hyperparams)?.predict(&self.positions);
        let selection = policy::select(
            &self.config.policy,
            &SelectionContext {
                variances: &posterior.variance,
                positions: &self.positions,
                current: self.current,
                unsampled: &self.unsampled,
                step: self.grid.step(),
            },
        )?;
        let y = self.grid.measure(selection.index, &mut self.policy_noise);
        self.visit(selection.index, selection.fallback, y);
        self.record.rmse_trace.push(self.rmse_of(&posterior.mean));
        self.record.variance_trace.push(mean(&posterior.variance));
        self.record.hyperparam_trace.push(self.hyperparams);
        Ok(())
    }

    pub fn finish(self) -> TrialRecord {
        self.record
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Runs a complete trial: initialization walk, then policy steps up to
/// `config.n_samples` total samples.
pub fn run_trial(grid: &SurfaceGrid, config: &TrialConfig) -> Result<TrialRecord, ExplorerError> {
    let mut state = TrialState::initialize(grid, config)?;
    while !state.is_done() {
        state.step()?;
    }
    Ok(state.finish())
}

/// The sample budget told by the grid: one quarter of the grid points.
pub fn computed_sample_budget(grid: &SurfaceGrid) -> usize {
    grid.len() / 4
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_parabola;

    #[test]
    fn config_validation_catches_bad_budgets() {
        let grid = build_parabola(0.0);
        let mut config = TrialConfig::new(Policy::Conventional, 442, 1);
        assert!(matches!(
            TrialState::initialize(&grid, &config),
            Err(ExplorerError::InvalidConfig(_))
        ));
        config.n_samples = 9; // smaller than the walk length
        assert!(matches!(
            TrialState::initialize(&grid, &config),
            Err(ExplorerError::InvalidConfig(_))
        ));
        config.n_samples = 10; // equal: valid, init-only
        assert!(TrialState::initialize(&grid, &config).is_ok());
    }

    #[test]
    fn budget_equal_to_walk_length_means_zero_policy_steps() {
        let grid = build_parabola(0.0);
        let record = run_trial(&grid, &TrialConfig::new(Policy::Conventional, 10, 3)).unwrap();
        assert_eq!(record.rmse_trace.len(), 10);
        assert_eq!(record.waypoints.len(), 10);
    }

    #[test]
    fn initialization_measures_exactly_the_walk_length() {
        let grid = build_parabola(0.0);
        let config = TrialConfig::new(Policy::Conventional, 30, 7);
        let state = TrialState::initialize(&grid, &config).unwrap();
        assert_eq!(state.samples_taken(), 10);
        assert_eq!(state.train.len(), 10);
        assert_eq!(state.record.rmse_trace.len(), 10);
        // The single init fit is replicated across the first ten entries.
        assert!(state.record.rmse_trace.windows(2).all(|w| w[0] == w[1]));
        assert!(state.record.hyperparam_trace.windows(2).all(|w| w[0] == w[1]));
        // Movement entries are genuine per-move values.
        assert!(state
            .record
            .cum_distance_trace
            .windows(2)
            .all(|w| w[0] <= w[1]));
    }

    #[test]
    fn init_walk_respects_its_reach_unless_flagged() {
        let grid = build_parabola(0.0);
        for seed in 0..20 {
            let config = TrialConfig::new(Policy::Conventional, 30, seed);
            let state = TrialState::initialize(&grid, &config).unwrap();
            let reach = 3.0 * grid.step() + policy::geometric_epsilon(grid.step());
            let mut prev = state.record.start_index;
            for (k, &w) in state.record.waypoints.iter().enumerate() {
                let d = grid.position(prev).planar_distance(grid.position(w));
                if !state.record.fallback_flags[k] {
                    assert!(d <= reach, "seed {seed} walk move {k} of length {d}");
                }
                prev = w;
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_walk() {
        let grid = build_parabola(0.0);
        let config = TrialConfig::new(Policy::Conventional, 25, 99);
        let a = TrialState::initialize(&grid, &config).unwrap();
        let b = TrialState::initialize(&grid, &config).unwrap();
        assert_eq!(a.record.waypoints, b.record.waypoints);
        assert_eq!(a.record.observations, b.record.observations);
    }

    #[test]
    fn trial_of_budget_ten_plus_one_takes_one_policy_step() {
        let grid = build_parabola(0.0);
        let record = run_trial(&grid, &TrialConfig::new(Policy::Conventional, 11, 5)).unwrap();
        assert_eq!(record.waypoints.len(), 11);
        assert_eq!(record.rmse_trace.len(), 11);
        assert_eq!(record.cum_distance_trace.len(), 11);
        assert_eq!(record.variance_trace.len(), 11);
        assert_eq!(record.hyperparam_trace.len(), 11);
        assert_eq!(record.fallback_flags.len(), 11);
    }

    #[test]
    fn computed_budget_is_a_quarter_of_the_grid() {
        assert_eq!(computed_sample_budget(&build_parabola(0.0)), 110);
    }
}
