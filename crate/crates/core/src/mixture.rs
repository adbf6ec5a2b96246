//! Gaussian mixture target distributions.
//!
//! Everything is evaluated in log space: per-component terms are
//! `ln πᵢ + ln N(x|μᵢ,Σᵢ)` and the mixture log-density combines them with
//! [`log_sum_exp`], so densities stay usable far into the tails where the
//! linear-space sum would underflow to zero. Responsibilities are formed as
//! `exp(termᵢ − lse)`, never as ratios of raw densities.

use alloc::vec;
use alloc::vec::Vec;
// Resolves f64 math under no_std; std's inherent methods shadow it when
// std is anywhere in the crate graph, so the import can look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{quadratic_form, Matrix};

/// A target density known up to a constant, with gradient information.
///
/// Implementations must accept any `position` slice of length
/// [`dimension`](TargetDistribution::dimension); passing a slice of any other
/// length may panic. Samplers uphold this invariant internally.
pub trait TargetDistribution {
    fn dimension(&self) -> usize;

    /// Log density at `position`, up to an additive constant.
    /// `-inf` is a valid value (zero density); NaN signals divergence.
    fn log_density(&self, position: &[f64]) -> f64;

    /// Gradient of the log density, written into `grad`.
    fn grad_log_density(&self, position: &[f64], grad: &mut [f64]);

    /// Log density and gradient in one evaluation. Implementations that can
    /// share work between the two should override this.
    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        self.grad_log_density(position, grad);
        self.log_density(position)
    }
}

/// `ln Σᵢ exp(vᵢ)` without intermediate overflow or underflow.
///
/// Values are sorted descending (ties keep their input order) and folded from
/// the smallest up, so each step is `v + ln(1 + e^{acc − v})` with `v` at
/// least as large as everything already accumulated.
///
/// # Errors
/// [`Error::EmptyInput`] when `log_values` is empty. An input of all `-inf`
/// returns `-inf` (the log of an empty sum), which is not an error.
pub fn log_sum_exp(log_values: &[f64]) -> Result<f64> {
    if log_values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = log_values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = f64::NEG_INFINITY;
    for &v in sorted.iter().rev() {
        if v == f64::NEG_INFINITY {
            continue;
        }
        if acc == f64::NEG_INFINITY {
            acc = v;
        } else {
            acc = v + (acc - v).exp().ln_1p();
        }
    }
    Ok(acc)
}

/// One weighted multivariate normal component with cached factorizations.
#[derive(Debug, Clone)]
pub struct GaussianComponent {
    mean: Vec<f64>,
    covariance: Matrix,
    precision: Matrix,
    chol: Matrix,
    log_norm_const: f64,
}

impl GaussianComponent {
    /// Builds a component, caching the Cholesky factor, the precision matrix,
    /// and the log normalizing constant `-½·ln(|Σ|·(2π)^d)`.
    pub fn new(mean: Vec<f64>, covariance: Matrix) -> Result<Self> {
        if covariance.dim() != mean.len() {
            return Err(Error::DimensionMismatch { expected: mean.len(), got: covariance.dim() });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if !covariance.is_symmetric(1e-12) {
            return Err(Error::InvalidParameter("covariance must be symmetric"));
        }
        let chol = covariance.cholesky()?;
        let precision = Matrix::inverse_from_cholesky(&chol);
        let log_det = Matrix::log_det_from_cholesky(&chol);
        let d = mean.len() as f64;
        let log_norm_const = -0.5 * (log_det + d * (2.0 * core::f64::consts::PI).ln());
        Ok(GaussianComponent { mean, covariance, precision, chol, log_norm_const })
    }

    /// Isotropic component `N(mean, variance · I)`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter("variance must be positive"));
        }
        let cov = Matrix::identity(mean.len()).scaled(variance);
        GaussianComponent::new(mean, cov)
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn precision(&self) -> &Matrix {
        &self.precision
    }

    pub fn log_norm_const(&self) -> f64 {
        self.log_norm_const
    }

    /// `ln N(x|μ,Σ) = c − ½·(x−μ)ᵀ Σ⁻¹ (x−μ)` using the cached precision.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        let mut diff = vec![0.0; self.mean.len()];
        for (d, (xi, mi)) in diff.iter_mut().zip(x.iter().zip(&self.mean)) {
            *d = xi - mi;
        }
        self.log_norm_const - 0.5 * quadratic_form(&self.precision, &diff)
    }

    /// One draw `μ + L·z` with `z` standard normal.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mean.len();
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let mut out = self.mean.clone();
        for i in 0..d {
            for j in 0..=i {
                out[i] += self.chol.at(i, j) * z[j];
            }
        }
        out
    }
}

/// A weighted mixture of Gaussian components sharing one dimension.
///
/// Immutable after construction and safe to share across concurrent chains;
/// RNG state always lives with the caller.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    components: Vec<GaussianComponent>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    dimension: usize,
}

impl GaussianMixture {
    /// Builds a mixture. Weights must be non-negative with a positive sum and
    /// are normalized to sum to one; a zero weight is permitted as a
    /// degenerate edge (the component is simply never selected or counted).
    pub fn new(components: Vec<GaussianComponent>, weights: &[f64]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        let dimension = components[0].dimension();
        for c in &components {
            if c.dimension() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: c.dimension() });
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights);
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidWeights);
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(GaussianMixture { components, weights, log_weights, dimension })
    }

    /// The standard normal `N(0, I_d)` as a single-component mixture.
    pub fn standard_normal(dimension: usize) -> Self {
        let comp = GaussianComponent::isotropic(vec![0.0; dimension], 1.0)
            .expect("unit covariance is positive definite");
        GaussianMixture::new(vec![comp], &[1.0]).expect("single unit weight")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    /// Normalized weights (sum to one).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch { expected: self.dimension, got: x.len() });
        }
        Ok(())
    }

    /// Per-component log terms `ln πᵢ + ln N(x|μᵢ,Σᵢ)`.
    fn log_terms(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.log_density(x))
            .collect()
    }

    /// `ln Σᵢ πᵢ N(x|μᵢ,Σᵢ)` via [`log_sum_exp`] over per-component terms.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        log_sum_exp(&self.log_terms(x))
    }

    /// Gradient of the mixture log-density with respect to the position:
    /// `Σᵢ rᵢ · Σᵢ⁻¹ (μᵢ − x)` with responsibilities
    /// `rᵢ = exp(termᵢ − log_sum_exp(terms))`.
    pub fn grad_log_density(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.dimension];
        self.grad_log_density_into(x, &mut grad)?;
        Ok(grad)
    }

    fn grad_log_density_into(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check_dim(x)?;
        let terms = self.log_terms(x);
        let lse = log_sum_exp(&terms)?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut diff = vec![0.0; self.dimension];
        let mut pdiff = vec![0.0; self.dimension];
        for (c, term) in self.components.iter().zip(&terms) {
            let r = if lse == f64::NEG_INFINITY { 0.0 } else { (term - lse).exp() };
            if r == 0.0 {
                continue;
            }
            for (d, (mi, xi)) in diff.iter_mut().zip(c.mean.iter().zip(x)) {
                *d = mi - xi;
            }
            c.precision.mul_vec(&diff, &mut pdiff);
            for (g, p) in grad.iter_mut().zip(&pdiff) {
                *g += r * p;
            }
        }
        Ok(lse)
    }

    /// `n` i.i.d. draws: a component is selected by its weight, then sampled
    /// through its Cholesky factor. Bit-reproducible for a fixed RNG state.
    pub fn sample_direct<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let mut cum = 0.0;
                let mut idx = self.components.len() - 1;
                for (i, w) in self.weights.iter().enumerate() {
                    cum += w;
                    if u < cum {
                        idx = i;
                        break;
                    }
                }
                self.components[idx].sample(rng)
            })
            .collect()
    }
}

impl TargetDistribution for GaussianMixture {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn log_density(&self, position: &[f64]) -> f64 {
        GaussianMixture::log_density(self, position).expect("position dimension mismatch")
    }

    fn grad_log_density(&self, position: &[f64], grad: &mut [f64]) {
        self.grad_log_density_into(position, grad).expect("position dimension mismatch");
    }

    fn log_density_and_grad(&self, position: &[f64], grad: &mut [f64]) -> f64 {
        self.grad_log_density_into(position, grad).expect("position dimension mismatch")
    }
}
