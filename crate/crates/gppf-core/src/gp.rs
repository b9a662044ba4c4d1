//! Exact Gaussian-process regression with an RBF kernel.
//!
//! The model is the textbook one: observations `y = f(x) + e` with
//! `e ~ N(0, noise_variance)` and `f` a zero-mean GP whose covariance is the
//! squared exponential. Inference goes through one Cholesky factorization of
//! the noisy Gram matrix per fit; hyperparameters are trained by Adam ascent
//! on the log marginal likelihood using analytic gradients in log space.
//!
//! Factorizations that fail (duplicate inputs, tiny noise, very long
//! lengthscales) are retried with a small diagonal jitter that doubles from
//! `1e-8 * mean(diag K)` up to a ceiling of `1e-2 * mean(diag K)`; only
//! exhausting the ladder is an error.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::point::Point2;

const LOG_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GpError {
    /// A hyperparameter was outside its domain.
    InvalidHyperparams(&'static str),
    /// Fit or likelihood evaluation on zero observations.
    EmptyTrainingSet,
    /// Input and observation counts differ.
    MismatchedLengths { inputs: usize, observations: usize },
    /// The noisy Gram matrix was not positive definite even at the jitter
    /// ceiling.
    FactorizationFailed { size: usize },
}

impl fmt::Display for GpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GpError::InvalidHyperparams(what) => write!(f, "invalid hyperparameters: {what}"),
            GpError::EmptyTrainingSet => write!(f, "training set is empty"),
            GpError::MismatchedLengths { inputs, observations } => write!(
                f,
                "training set has {inputs} inputs but {observations} observations"
            ),
            GpError::FactorizationFailed { size } => write!(
                f,
                "Cholesky factorization of the {size}x{size} Gram matrix failed at the jitter ceiling"
            ),
        }
    }
}

impl core::error::Error for GpError {}

/// RBF kernel hyperparameters, stored as natural logarithms so gradient
/// training is unconstrained.
///
/// A noise variance of exactly zero is allowed; it maps to `-inf` in log
/// space, where the noise gradient vanishes and training leaves it pinned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelHyperparams {
    log_lengthscale: f64,
    log_signal_variance: f64,
    log_noise_variance: f64,
}

impl KernelHyperparams {
    pub fn new(
        lengthscale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        if !(lengthscale > 0.0 && lengthscale.is_finite()) {
            return Err(GpError::InvalidHyperparams(
                "lengthscale must be positive and finite",
            ));
        }
        if !(signal_variance > 0.0 && signal_variance.is_finite()) {
            return Err(GpError::InvalidHyperparams(
                "signal variance must be positive and finite",
            ));
        }
        if !(noise_variance >= 0.0 && noise_variance.is_finite()) {
            return Err(GpError::InvalidHyperparams(
                "noise variance must be non-negative and finite",
            ));
        }
        Ok(Self {
            log_lengthscale: libm::log(lengthscale),
            log_signal_variance: libm::log(signal_variance),
            log_noise_variance: libm::log(noise_variance),
        })
    }

    /// Builds directly from log-space values, the trainer's native
    /// coordinates. No validation beyond excluding NaN: `-inf` components are
    /// meaningful (a pinned zero noise variance).
    pub fn from_log(log: [f64; 3]) -> Self {
        assert!(
            log.iter().all(|v| !v.is_nan()),
            "NaN log-hyperparameter"
        );
        Self {
            log_lengthscale: log[0],
            log_signal_variance: log[1],
            log_noise_variance: log[2],
        }
    }

    pub fn to_log(&self) -> [f64; 3] {
        [
            self.log_lengthscale,
            self.log_signal_variance,
            self.log_noise_variance,
        ]
    }

    pub fn lengthscale(&self) -> f64 {
        libm::exp(self.log_lengthscale)
    }

    pub fn signal_variance(&self) -> f64 {
        libm::exp(self.log_signal_variance)
    }

    pub fn noise_variance(&self) -> f64 {
        libm::exp(self.log_noise_variance)
    }
}

impl Default for KernelHyperparams {
    /// Lengthscale 1, signal variance 1, noise variance 0.01: the starting
    /// point every trial trains from.
    fn default() -> Self {
        Self::new(1.0, 1.0, 0.01).expect("default hyperparameters are valid")
    }
}

/// Squared-exponential covariance
/// `signal_variance * exp(-||a - b||^2 / (2 * lengthscale^2))`.
pub fn rbf_kernel(a: Point2, b: Point2, hp: &KernelHyperparams) -> f64 {
    let l = hp.lengthscale();
    hp.signal_variance() * libm::exp(-a.sq_distance(b) / (2.0 * l * l))
}

/// Dense noise-free kernel matrix; entry `(i, j)` is `rbf_kernel(points[i],
/// points[j])`. The diagonal is exactly the signal variance.
pub fn gram_matrix(points: &[Point2], hp: &KernelHyperparams) -> DMatrix<f64> {
    let sq = sq_distance_matrix(points);
    kernel_from_sq(&sq, hp)
}

fn sq_distance_matrix(points: &[Point2]) -> DMatrix<f64> {
    let n = points.len();
    let mut sq = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = points[i].sq_distance(points[j]);
            sq[(i, j)] = d;
            sq[(j, i)] = d;
        }
    }
    sq
}

fn kernel_from_sq(sq: &DMatrix<f64>, hp: &KernelHyperparams) -> DMatrix<f64> {
    let n = sq.nrows();
    let l = hp.lengthscale();
    let neg_inv_2l2 = -0.5 / (l * l);
    let sf2 = hp.signal_variance();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = sf2;
        for j in (i + 1)..n {
            let v = sf2 * libm::exp(sq[(i, j)] * neg_inv_2l2);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Observed inputs and responses, grown one sample at a time by the
/// exploration loop.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    inputs: Vec<Point2>,
    observations: Vec<f64>,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Point2>, observations: Vec<f64>) -> Result<Self, GpError> {
        if inputs.len() != observations.len() {
            return Err(GpError::MismatchedLengths {
                inputs: inputs.len(),
                observations: observations.len(),
            });
        }
        Ok(Self { inputs, observations })
    }

    pub fn push(&mut self, x: Point2, y: f64) {
        self.inputs.push(x);
        self.observations.push(y);
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Point2] {
        &self.inputs
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }
}

/// Largest pivot spread `max(diag L) / min(diag L)` a factorization may
/// have and still count as trustworthy. The squared ratio bounds the
/// condition number of `A` from below, so this gate keeps usable factors at
/// an estimated condition of 1e10 or better — beyond that, solves lose so
/// many digits that predictive variances turn to noise.
const MAX_PIVOT_RATIO: f64 = 1e5;

/// Jitter ladder: factor `k + (noise + jitter) I`, doubling jitter from
/// `1e-8 * mean(diag k)` to a ceiling of `1e-2 * mean(diag k)`. A
/// factorization that completes but fails the pivot-ratio gate counts as a
/// failure and climbs the ladder like any other; the ceiling always
/// satisfies the gate, so only a genuinely broken matrix errors. `floor`
/// short-circuits the climb for callers that already know a working level.
fn cholesky_with_jitter(
    k: &DMatrix<f64>,
    noise: f64,
    floor: f64,
) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64), GpError> {
    let n = k.nrows();
    let mean_diag = k.diagonal().mean();
    let ceiling = 1e-2 * mean_diag;
    let mut jitter = floor;
    loop {
        let mut a = k.clone();
        for i in 0..n {
            a[(i, i)] += noise + jitter;
        }
        if let Some(chol) = nalgebra::Cholesky::new(a) {
            let diag = chol.l_dirty().diagonal();
            let mut lo = f64::INFINITY;
            let mut hi = 0.0_f64;
            for &d in diag.iter() {
                lo = lo.min(d);
                hi = hi.max(d);
            }
            if hi <= lo * MAX_PIVOT_RATIO {
                return Ok((chol, jitter));
            }
        }
        jitter = if jitter == 0.0 {
            1e-8 * mean_diag
        } else {
            jitter * 2.0
        };
        if !(jitter <= ceiling) {
            return Err(GpError::FactorizationFailed { size: n });
        }
    }
}

/// A GP conditioned on a training set under fixed hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    train: TrainingSet,
    hyperparams: KernelHyperparams,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Factors the noisy Gram matrix and precomputes the representer weights
/// `alpha = (K + noise I)^-1 y`.
pub fn fit(train: &TrainingSet, hp: &KernelHyperparams) -> Result<FittedModel, GpError> {
    if train.is_empty() {
        return Err(GpError::EmptyTrainingSet);
    }
    let k = gram_matrix(train.inputs(), hp);
    let (chol, jitter) = cholesky_with_jitter(&k, hp.noise_variance(), 0.0)?;
    let y = DVector::from_column_slice(train.observations());
    let alpha = chol.solve(&y);
    Ok(FittedModel {
        train: train.clone(),
        hyperparams: *hp,
        chol_l: chol.unpack(),
        alpha,
        jitter,
    })
}

/// Posterior mean and variance at a batch of query points, index-aligned
/// with the query slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl FittedModel {
    pub fn hyperparams(&self) -> &KernelHyperparams {
        &self.hyperparams
    }

    pub fn training_set(&self) -> &TrainingSet {
        &self.train
    }

    /// Diagonal jitter that was needed to factor the Gram matrix; zero in
    /// the common case.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower Cholesky factor of `K + (noise + jitter) I`.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol_l
    }

    /// Exact posterior of the latent function at each query.
    ///
    /// Variance is the prior signal variance minus the explained part,
    /// clamped at zero. Round-off can push the difference slightly negative
    /// when the trained noise is tiny and the factor sits near the
    /// pivot-ratio gate; the allowance scales with the signal variance
    /// because the round-off does too, and sits orders of magnitude above
    /// what a gate-passing factor can produce. Anything below it means the
    /// factorization is inconsistent and panics instead of being masked.
    pub fn predict(&self, queries: &[Point2]) -> Posterior {
        let n = self.train.len();
        let m = queries.len();
        let kstar = DMatrix::from_fn(n, m, |i, j| {
            rbf_kernel(self.train.inputs()[i], queries[j], &self.hyperparams)
        });
        let mean: Vec<f64> = (0..m)
            .map(|j| kstar.column(j).dot(&self.alpha))
            .collect();
        let v = self
            .chol_l
            .solve_lower_triangular(&kstar)
            .expect("Cholesky factor has positive diagonal");
        let sf2 = self.hyperparams.signal_variance();
        let roundoff_floor = -1e-4 * sf2.max(1.0);
        let variance: Vec<f64> = (0..m)
            .map(|j| {
                let explained = v.column(j).norm_squared();
                let var = sf2 - explained;
                assert!(var >= roundoff_floor, "negative posterior variance {var}");
                var.max(0.0)
            })
            .collect();
        Posterior { mean, variance }
    }
}

/// Log marginal likelihood of the observations under the model, including
/// any jitter the factorization needed.
pub fn log_marginal_likelihood(
    train: &TrainingSet,
    hp: &KernelHyperparams,
) -> Result<f64, GpError> {
    if train.is_empty() {
        return Err(GpError::EmptyTrainingSet);
    }
    let k = gram_matrix(train.inputs(), hp);
    let (chol, _) = cholesky_with_jitter(&k, hp.noise_variance(), 0.0)?;
    let y = DVector::from_column_slice(train.observations());
    let alpha = chol.solve(&y);
    let n = train.len() as f64;
    let log_det_half: f64 = chol
        .l_dirty()
        .diagonal()
        .iter()
        .map(|d| libm::log(*d))
        .sum();
    Ok(-0.5 * y.dot(&alpha) - log_det_half - 0.5 * n * LOG_2PI)
}

/// Gradient of the log marginal likelihood with respect to the logs of the
/// three hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MllGradient {
    pub d_log_lengthscale: f64,
    pub d_log_signal_variance: f64,
    pub d_log_noise_variance: f64,
}

impl MllGradient {
    fn is_finite(&self) -> bool {
        self.d_log_lengthscale.is_finite()
            && self.d_log_signal_variance.is_finite()
            && self.d_log_noise_variance.is_finite()
    }
}

pub fn mll_gradient(train: &TrainingSet, hp: &KernelHyperparams) -> Result<MllGradient, GpError> {
    if train.is_empty() {
        return Err(GpError::EmptyTrainingSet);
    }
    let sq = sq_distance_matrix(train.inputs());
    mll_gradient_with_sq(train, hp, &sq)
}

/// Gradient core with the squared-distance matrix precomputed; the trainer
/// reuses one matrix across all iterations.
///
/// With `G = alpha alpha^T - A^-1` for `A = K + noise I`, the derivative for
/// parameter `t` is `tr(G dA/dt) / 2`. In log space `dK/dlog(l) = K .* sq / l^2`,
/// `dK/dlog(sf2) = K`, and `dA/dlog(noise) = noise I`.
fn mll_gradient_with_sq(
    train: &TrainingSet,
    hp: &KernelHyperparams,
    sq: &DMatrix<f64>,
) -> Result<MllGradient, GpError> {
    let n = train.len();
    let k = kernel_from_sq(sq, hp);
    let noise = hp.noise_variance();
    let (chol, _) = cholesky_with_jitter(&k, noise, 0.0)?;
    let y = DVector::from_column_slice(train.observations());
    let alpha = chol.solve(&y);
    let ainv = chol.inverse();

    let mut trace_l = 0.0;
    let mut trace_sf = 0.0;
    let mut trace_n = 0.0;
    for i in 0..n {
        let gii = alpha[i] * alpha[i] - ainv[(i, i)];
        trace_sf += gii * k[(i, i)];
        trace_n += gii;
        for j in (i + 1)..n {
            let gij = alpha[i] * alpha[j] - ainv[(i, j)];
            trace_l += 2.0 * gij * k[(i, j)] * sq[(i, j)];
            trace_sf += 2.0 * gij * k[(i, j)];
        }
    }
    let l = hp.lengthscale();
    Ok(MllGradient {
        d_log_lengthscale: 0.5 * trace_l / (l * l),
        d_log_signal_variance: 0.5 * trace_sf,
        d_log_noise_variance: 0.5 * noise * trace_n,
    })
}

/// Adam settings for hyperparameter training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub iterations: u32,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    /// 100 iterations at learning rate 0.1, the schedule every trial uses.
    fn default() -> Self {
        Self {
            iterations: 100,
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Runs exactly `config.iterations` Adam ascent steps on the log marginal
/// likelihood, starting from `init`, and returns the final iterate.
///
/// A step whose gradient cannot be evaluated (factorization dead even at the
/// jitter ceiling, or a non-finite gradient) leaves the iterate and moment
/// estimates unchanged; training is best-effort by design and never fails
/// past the initial validation.
pub fn train_hyperparameters(
    train: &TrainingSet,
    init: &KernelHyperparams,
    config: &OptimizerConfig,
) -> Result<KernelHyperparams, GpError> {
    if train.is_empty() {
        return Err(GpError::EmptyTrainingSet);
    }
    let sq = sq_distance_matrix(train.inputs());
    let mut theta = init.to_log();
    let mut m = [0.0_f64; 3];
    let mut v = [0.0_f64; 3];
    let mut beta1_t = 1.0;
    let mut beta2_t = 1.0;
    for _ in 0..config.iterations {
        beta1_t *= config.beta1;
        beta2_t *= config.beta2;
        let hp = KernelHyperparams::from_log(theta);
        let grad = match mll_gradient_with_sq(train, &hp, &sq) {
            Ok(g) if g.is_finite() => g,
            _ => continue,
        };
        let g = [
            grad.d_log_lengthscale,
            grad.d_log_signal_variance,
            grad.d_log_noise_variance,
        ];
        for i in 0..3 {
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
            let m_hat = m[i] / (1.0 - beta1_t);
            let v_hat = v[i] / (1.0 - beta2_t);
            theta[i] += config.learning_rate * m_hat / (libm::sqrt(v_hat) + config.epsilon);
        }
    }
    Ok(KernelHyperparams::from_log(theta))
}
