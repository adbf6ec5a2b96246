//! Phase-space primitives: potential, kinetic, and total energy, plus the
//! leapfrog symplectic integrator.
//!
//! Divergence is never an error here: a non-finite density maps to infinite
//! potential energy, and a leapfrog step that leaves the finite range returns
//! a state whose [`PhasePoint::is_finite`] is false so tree building can
//! prune it.

use alloc::vec;
use alloc::vec::Vec;
// Resolves f64 math under no_std; std's inherent methods shadow it when
// std is anywhere in the crate graph, so the import can look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mixture::TargetDistribution;

/// A position/momentum pair `(q, p)` of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl PhasePoint {
    pub fn new(position: Vec<f64>, momentum: Vec<f64>) -> Self {
        assert_eq!(position.len(), momentum.len(), "position/momentum length mismatch");
        PhasePoint { position, momentum }
    }

    pub fn dimension(&self) -> usize {
        self.position.len()
    }

    /// False when any coordinate is NaN or infinite (a divergence marker).
    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.momentum).all(|v| v.is_finite())
    }
}

/// Diagonal mass matrix: kinetic energy is `Σᵢ pᵢ²/(2mᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSpec {
    diagonal: Vec<f64>,
}

impl MassSpec {
    pub fn new(diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::EmptyInput);
        }
        if diagonal.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParameter("masses must be strictly positive"));
        }
        Ok(MassSpec { diagonal })
    }

    pub fn identity(dimension: usize) -> Self {
        MassSpec { diagonal: vec![1.0; dimension] }
    }

    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Fresh momentum `p ~ N(0, M)`: componentwise `√mᵢ · zᵢ`.
    pub fn sample_momentum<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.diagonal
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m.sqrt() * z
            })
            .collect()
    }
}

/// `U(q) = -ln π(q)`. A NaN log-density maps to `+inf` (divergent, not an error).
pub fn potential_energy<T: TargetDistribution + ?Sized>(target: &T, q: &[f64]) -> f64 {
    let lp = target.log_density(q);
    if lp.is_nan() {
        f64::INFINITY
    } else {
        -lp
    }
}

/// `K(p) = Σᵢ pᵢ²/(2mᵢ)` for the diagonal mass matrix.
pub fn kinetic_energy(p: &[f64], mass: &MassSpec) -> f64 {
    debug_assert_eq!(p.len(), mass.dimension());
    p.iter().zip(mass.diagonal()).map(|(pi, mi)| pi * pi / (2.0 * mi)).sum()
}

/// `H(q, p) = U(q) + K(p)`.
pub fn hamiltonian<T: TargetDistribution + ?Sized>(
    target: &T,
    q: &[f64],
    p: &[f64],
    mass: &MassSpec,
) -> f64 {
    potential_energy(target, q) + kinetic_energy(p, mass)
}

/// One leapfrog step of size `eps` (its sign is the time direction):
///
/// ```text
/// p½ = p − (ε/2)·∇U(q)      q' = q + ε·p½/m      p' = p½ − (ε/2)·∇U(q')
/// ```
///
/// with `∇U = −∇ ln π`. Non-finite intermediates propagate into the returned
/// state rather than raising an error.
pub fn leapfrog_step<T: TargetDistribution + ?Sized>(
    target: &T,
    state: &PhasePoint,
    eps: f64,
    mass: &MassSpec,
) -> PhasePoint {
    let mut grad = vec![0.0; state.dimension()];
    target.grad_log_density(&state.position, &mut grad);
    let start = EvaluatedState {
        point: state.clone(),
        grad,
        log_density: 0.0, // unused by the stepper
    };
    leapfrog_evaluated(target, &start, eps, mass).point
}

/// A phase point together with its cached gradient and log-density, so that
/// consecutive leapfrog steps cost one combined evaluation each.
#[derive(Debug, Clone)]
pub(crate) struct EvaluatedState {
    pub point: PhasePoint,
    pub grad: Vec<f64>,
    pub log_density: f64,
}

impl EvaluatedState {
    pub fn evaluate<T: TargetDistribution + ?Sized>(
        target: &T,
        position: Vec<f64>,
        momentum: Vec<f64>,
    ) -> Self {
        let mut grad = vec![0.0; position.len()];
        let log_density = target.log_density_and_grad(&position, &mut grad);
        EvaluatedState { point: PhasePoint::new(position, momentum), grad, log_density }
    }

    pub fn hamiltonian(&self, mass: &MassSpec) -> f64 {
        let u = if self.log_density.is_nan() { f64::INFINITY } else { -self.log_density };
        u + kinetic_energy(&self.point.momentum, mass)
    }

    pub fn is_finite(&self) -> bool {
        self.point.is_finite()
    }
}

/// Leapfrog step reusing the cached gradient of the starting state. Produces
/// exactly the same trajectory as [`leapfrog_step`].
pub(crate) fn leapfrog_evaluated<T: TargetDistribution + ?Sized>(
    target: &T,
    state: &EvaluatedState,
    eps: f64,
    mass: &MassSpec,
) -> EvaluatedState {
    let d = state.point.dimension();
    let half = 0.5 * eps;
    // ∇U = −∇ ln π, so p½ = p + (ε/2)·∇ ln π.
    let p_half: Vec<f64> =
        (0..d).map(|i| state.point.momentum[i] + half * state.grad[i]).collect();
    let position: Vec<f64> = (0..d)
        .map(|i| state.point.position[i] + eps * p_half[i] / mass.diagonal()[i])
        .collect();
    let mut grad = vec![0.0; d];
    let log_density = if position.iter().all(|v| v.is_finite()) {
        target.log_density_and_grad(&position, &mut grad)
    } else {
        f64::NAN
    };
    let momentum: Vec<f64> = (0..d).map(|i| p_half[i] + half * grad[i]).collect();
    EvaluatedState { point: PhasePoint::new(position, momentum), grad, log_density }
}
