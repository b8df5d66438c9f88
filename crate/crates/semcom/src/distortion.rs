//! Distortion calculus: variance composition and AI-performance bounds.
//!
//! Data passes through a pipeline of independent zero-mean Gaussian
//! corruption stages (lossy semantic compression, the channel model, data
//! sampling). Variances of sequential stages add, per-user budgets sum the
//! three components, and multi-user budgets pool as a data-count-weighted
//! mean. Two bounds turn a total variance into a task-feasibility test: a
//! training-gap bound and an inference-gap bound via total variation.
//!
//! Unit convention: every public function takes *variances*. Where a formula
//! needs a standard deviation, the square root is taken internally. The only
//! exception is [`gradient_dissimilarity_bound`] whose inputs are norms, not
//! second moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Result};

const SQRT_2PI: f64 = 2.5066282746310002;

/// A single zero-mean Gaussian corruption stage, identified by its variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianDistortion {
    variance: f64,
}

impl GaussianDistortion {
    pub fn new(variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(invalid("variance", format!("must be finite and >= 0, got {variance}")));
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Per-user (or pooled) distortion budget split into its three sources.
///
/// `total_variance` is always the exact sum of the parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBudget {
    pub sem_variance: f64,
    pub model_variance: f64,
    pub data_variance: f64,
    pub total_variance: f64,
}

impl DistortionBudget {
    pub fn new(sem_variance: f64, model_variance: f64, data_variance: f64) -> Result<Self> {
        for (name, v) in [
            ("sem_variance", sem_variance),
            ("model_variance", model_variance),
            ("data_variance", data_variance),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            sem_variance,
            model_variance,
            data_variance,
            total_variance: sem_variance + model_variance + data_variance,
        })
    }

    /// Surrogate budget for a round in which no data arrives at all: the
    /// worst case for the downstream task, modeled as unbounded variance.
    pub fn unbounded() -> Self {
        Self {
            sem_variance: f64::INFINITY,
            model_variance: f64::INFINITY,
            data_variance: f64::INFINITY,
            total_variance: f64::INFINITY,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.total_variance.is_infinite()
    }
}

/// Smoothness/convexity constants of the downstream task plus the training
/// schedule knobs that enter the performance bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiTaskConstants {
    pub lipschitz_l: f64,
    pub convexity_mu: f64,
    pub learning_rate_eta: f64,
    pub decision_boundary_w: f64,
    pub posterior_confidence: f64,
    pub training_rounds_n: u32,
}

impl AiTaskConstants {
    pub fn new(
        lipschitz_l: f64,
        convexity_mu: f64,
        learning_rate_eta: f64,
        decision_boundary_w: f64,
        posterior_confidence: f64,
        training_rounds_n: u32,
    ) -> Result<Self> {
        if !(lipschitz_l > 0.0 && lipschitz_l.is_finite()) {
            return Err(invalid("lipschitz_l", "must be positive and finite"));
        }
        if !(convexity_mu > 0.0 && convexity_mu <= lipschitz_l) {
            return Err(invalid("convexity_mu", "must satisfy 0 < mu <= L"));
        }
        if !(learning_rate_eta > 0.0 && learning_rate_eta.is_finite()) {
            return Err(invalid("learning_rate_eta", "must be positive and finite"));
        }
        if !(decision_boundary_w > 0.0 && decision_boundary_w.is_finite()) {
            return Err(invalid("decision_boundary_w", "must be positive and finite"));
        }
        if !(0.0..=1.0).contains(&posterior_confidence) {
            return Err(invalid("posterior_confidence", "must lie in [0, 1]"));
        }
        if training_rounds_n == 0 {
            return Err(invalid("training_rounds_n", "must be positive"));
        }
        Ok(Self {
            lipschitz_l,
            convexity_mu,
            learning_rate_eta,
            decision_boundary_w,
            posterior_confidence,
            training_rounds_n,
        })
    }
}

fn check_variances(variances: &[f64]) -> Result<()> {
    for (i, v) in variances.iter().enumerate() {
        if !v.is_finite() || *v < 0.0 {
            return Err(invalid(
                "variances",
                format!("entry {i} must be finite and >= 0, got {v}"),
            ));
        }
    }
    Ok(())
}

/// Total variance of a chain of independent zero-mean Gaussian stages.
///
/// The empty chain is the identity transform and contributes nothing.
pub fn compose_sequential(variances: &[f64]) -> Result<f64> {
    check_variances(variances)?;
    Ok(variances.iter().sum())
}

/// Per-user budget from the three corruption sources.
pub fn total_semcom_distortion(sem: f64, model: f64, data: f64) -> Result<DistortionBudget> {
    DistortionBudget::new(sem, model, data)
}

/// Data-count-weighted mean variance of the pooled multi-user dataset.
pub fn pool_users(user_data_counts: &[u64], user_variances: &[f64]) -> Result<f64> {
    if user_data_counts.is_empty() {
        return Err(invalid("user_data_counts", "must be nonempty"));
    }
    if user_data_counts.len() != user_variances.len() {
        return Err(crate::Error::ShapeMismatch {
            context: "pool_users",
            expected: user_data_counts.len(),
            got: user_variances.len(),
        });
    }
    check_variances(user_variances)?;
    if user_data_counts.iter().any(|&d| d == 0) {
        return Err(invalid("user_data_counts", "entries must be positive"));
    }
    let total: u64 = user_data_counts.iter().sum();
    let weighted: f64 = user_data_counts
        .iter()
        .zip(user_variances)
        .map(|(&d, &v)| d as f64 * v)
        .sum();
    Ok(weighted / total as f64)
}

/// Upper bound on the training-loss gap after `N` rounds on data with total
/// distortion variance `total_variance`:
///
/// `N * (eta^2 * L / 2 - eta) * (L * sigma_tot)^2`
///
/// The coefficient is negative for `eta < 2/L`, in which case the bound is
/// non-positive and the corresponding constraint never binds; the value is
/// returned as written either way.
pub fn training_gap_bound(constants: &AiTaskConstants, total_variance: f64) -> Result<f64> {
    if !total_variance.is_finite() || total_variance < 0.0 {
        return Err(invalid("total_variance", "must be finite and >= 0"));
    }
    let eta = constants.learning_rate_eta;
    let l = constants.lipschitz_l;
    let coeff = eta * eta * l / 2.0 - eta;
    // (L * sigma)^2 == L^2 * variance, no square root needed.
    Ok(constants.training_rounds_n as f64 * coeff * l * l * total_variance)
}

/// Same bound without the round count: the per-round excess used as the
/// training-phase feasibility test.
pub fn training_gap_per_round(constants: &AiTaskConstants, total_variance: f64) -> Result<f64> {
    if !total_variance.is_finite() || total_variance < 0.0 {
        return Err(invalid("total_variance", "must be finite and >= 0"));
    }
    let eta = constants.learning_rate_eta;
    let l = constants.lipschitz_l;
    Ok((eta * eta * l / 2.0 - eta) * l * l * total_variance)
}

/// Upper bound on the squared norm of a gradient evaluated on distorted
/// data: `(|grad| + L * sigma)^2`. Inputs are norms, not variances.
pub fn gradient_dissimilarity_bound(grad_norm: f64, lipschitz_l: f64, sigma: f64) -> Result<f64> {
    if grad_norm < 0.0 || !grad_norm.is_finite() {
        return Err(invalid("grad_norm", "must be finite and >= 0"));
    }
    if lipschitz_l <= 0.0 {
        return Err(invalid("lipschitz_l", "must be positive"));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(invalid("sigma", "must be finite and >= 0"));
    }
    let s = grad_norm + lipschitz_l * sigma;
    Ok(s * s)
}

/// Total-variation bound between clean and distorted data distributions:
///
/// `1 / (sqrt(2*pi) * sigma) * exp(-(W / (2*sigma))^2)`
///
/// where `sigma = sqrt(variance)` and `W` is the decision boundary — the
/// per-component change beyond which the task-relevant interpretation flips.
pub fn tv_bound(decision_boundary_w: f64, variance: f64) -> Result<f64> {
    if decision_boundary_w < 0.0 || !decision_boundary_w.is_finite() {
        return Err(invalid("decision_boundary_w", "must be finite and >= 0"));
    }
    if variance <= 0.0 || !variance.is_finite() {
        return Err(invalid("variance", "must be positive and finite"));
    }
    let sigma = variance.sqrt();
    let z = decision_boundary_w / (2.0 * sigma);
    Ok((-z * z).exp() / (SQRT_2PI * sigma))
}

/// Upper bound on the inference-output probability drop caused by input
/// distortion: posterior confidence times the total-variation bound.
pub fn inference_gap_bound(
    posterior_confidence: f64,
    decision_boundary_w: f64,
    total_variance: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&posterior_confidence) {
        return Err(invalid("posterior_confidence", "must lie in [0, 1]"));
    }
    Ok(posterior_confidence * tv_bound(decision_boundary_w, total_variance)?)
}

/// Monte-Carlo cross-check for [`compose_sequential`]: empirical variance of
/// the sum of independent zero-mean Gaussian samples, one per stage.
///
/// Deterministic for a fixed seed (counter-based generator), so expected
/// values can be frozen into tests.
pub fn mc_convolution_oracle(variances: &[f64], sample_count: u32, seed: u64) -> Result<f64> {
    check_variances(variances)?;
    if sample_count == 0 {
        return Err(invalid("sample_count", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stages: Vec<Normal<f64>> = variances
        .iter()
        .map(|&v| Normal::new(0.0, v.sqrt()).expect("validated above"))
        .collect();

    let n = sample_count as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..sample_count {
        let total: f64 = stages.iter().map(|d| d.sample(&mut rng)).sum();
        sum += total;
        sum_sq += total * total;
    }
    let mean = sum / n;
    Ok((sum_sq / n - mean * mean).max(0.0))
}
