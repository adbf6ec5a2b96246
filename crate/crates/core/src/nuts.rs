//! The No-U-Turn Sampler: binary doubling trajectories, a log-space slice
//! threshold, bidirectional time evolution with U-turn termination, and
//! dual-averaging step-size adaptation.
//!
//! A draw works in three moves: resample momentum from `N(0, M)`, draw a
//! slice threshold `u` from `(0, e^{-H₀}]` (held in log space as
//! `log u = ln v − H₀` to dodge underflow), then repeatedly double the
//! trajectory in a random time direction until an endpoint pair turns back
//! on itself, a state diverges, or the depth cap is reached. The returned
//! position is uniform over slice-accepted trajectory points, maintained as
//! a progressive reservoir swap so the tree is never materialized.

use alloc::vec::Vec;
// Resolves f64 math under no_std; std's inherent methods shadow it when
// std is anywhere in the crate graph, so the import can look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dynamics::{
    hamiltonian, leapfrog_evaluated, EvaluatedState, MassSpec, PhasePoint,
};
use crate::error::{Error, Result};
use crate::mixture::TargetDistribution;
use crate::rng::{uniform_open01, ChainStreams};

/// Tuning knobs shared by NUTS and SpreadNUTS chains.
#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Leapfrog step size ε. `None` picks a starting value with
    /// [`find_reasonable_epsilon`] and adapts it by dual averaging for the
    /// first [`adapt_iterations`](SamplerConfig::adapt_iterations) draws.
    pub step_size: Option<f64>,
    /// Cap on doubling iterations per draw (at most `2^max_depth − 1` steps).
    pub max_depth: usize,
    /// A state with `H − H₀` above this is divergent and stops the tree.
    pub divergence_threshold: f64,
    /// Number of leading draws that update the dual-averaging adapter.
    pub adapt_iterations: usize,
    /// Target mean Metropolis acceptance statistic for adaptation.
    pub target_accept: f64,
    /// Master seed for the chain's random streams.
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            step_size: None,
            max_depth: 10,
            divergence_threshold: 1000.0,
            adapt_iterations: 500,
            target_accept: 0.8,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(eps) = self.step_size {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(Error::InvalidParameter("step_size must be positive and finite"));
            }
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be at least 1"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::InvalidParameter("divergence_threshold must be positive"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::InvalidParameter("target_accept must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Time direction of trajectory extension; the sign applied to ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

impl Direction {
    pub fn signed(self, step: f64) -> f64 {
        match self {
            Direction::Forward => step,
            Direction::Backward => -step,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<bool>() {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }
}

/// The slice variable in log space together with the energy at the start of
/// the draw (`log_u = ln v − H₀` with `v ~ Uniform(0, 1]`).
#[derive(Debug, Clone, Copy)]
pub struct SliceThreshold {
    pub log_u: f64,
    pub h0: f64,
}

impl SliceThreshold {
    pub fn draw<R: Rng + ?Sized>(h0: f64, rng: &mut R) -> Self {
        SliceThreshold { log_u: uniform_open01(rng).ln() - h0, h0 }
    }

    /// The log-space slice test `log u ≤ −H`. Non-finite `H` never accepts.
    pub fn accepts_energy(&self, h: f64) -> bool {
        h.is_finite() && self.log_u <= -h
    }
}

/// True (stop) iff the span between the endpoints is shrinking at either
/// end: `(q⁺ − q⁻)·p⁻ < 0` or `(q⁺ − q⁻)·p⁺ < 0`. A zero dot product
/// continues; only strictly negative motion stops.
pub fn u_turn_stop(q_minus: &[f64], q_plus: &[f64], p_minus: &[f64], p_plus: &[f64]) -> bool {
    let mut dot_minus = 0.0;
    let mut dot_plus = 0.0;
    for i in 0..q_minus.len() {
        let span = q_plus[i] - q_minus[i];
        dot_minus += span * p_minus[i];
        dot_plus += span * p_plus[i];
    }
    dot_minus < 0.0 || dot_plus < 0.0
}

/// The slice test at an explicit phase point: `log u ≤ −H(q, p)`.
pub fn slice_accepts<T: TargetDistribution + ?Sized>(
    log_u: f64,
    target: &T,
    q: &[f64],
    p: &[f64],
    mass: &MassSpec,
) -> bool {
    let h = hamiltonian(target, q, p, mass);
    h.is_finite() && log_u <= -h
}

/// Why a draw's trajectory stopped growing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// An endpoint pair turned back on itself.
    UTurn,
    /// A state exceeded the divergence threshold or left the finite range.
    Divergence,
    /// The doubling cap was reached.
    MaxDepth,
    /// The cumulative point budget was exhausted (SpreadNUTS only).
    PointBudget,
}

/// Summary of one tree build: endpoints, selection state, and counters.
#[derive(Debug, Clone)]
pub struct TreeSummary {
    /// Backward-in-time endpoint.
    pub minus: PhasePoint,
    /// Forward-in-time endpoint.
    pub plus: PhasePoint,
    /// Reservoir representative of the slice-accepted points (uniform).
    pub chosen: Option<Vec<f64>>,
    /// Slice-accepted positions, filled only when the builder was asked to
    /// collect exhaustively; otherwise empty and only `n_valid` counts them.
    pub candidates: Vec<Vec<f64>>,
    /// Number of slice-accepted points in the tree.
    pub n_valid: u64,
    /// No further extension of this tree is permitted.
    pub stopped: bool,
    /// Leapfrog states generated while building.
    pub n_states: u64,
    /// U-turn condition evaluations performed.
    pub uturn_checks: u64,
    /// Sum and count of per-state acceptance statistics `min(1, e^{H₀−H})`.
    pub accept_sum: f64,
    pub accept_count: u64,
}

/// Internal tree node carrying evaluated endpoints so extension reuses
/// cached gradients.
#[derive(Debug, Clone)]
pub(crate) struct SubTree {
    pub bwd: EvaluatedState,
    pub fwd: EvaluatedState,
    pub chosen: Option<Vec<f64>>,
    pub candidates: Vec<Vec<f64>>,
    pub n_valid: u64,
    pub stopped: bool,
    pub divergent: bool,
    pub n_states: u64,
    pub uturn_checks: u64,
    pub accept_sum: f64,
    pub accept_count: u64,
}

impl SubTree {
    pub(crate) fn into_summary(self) -> TreeSummary {
        TreeSummary {
            minus: self.bwd.point,
            plus: self.fwd.point,
            chosen: self.chosen,
            candidates: self.candidates,
            n_valid: self.n_valid,
            stopped: self.stopped,
            n_states: self.n_states,
            uturn_checks: self.uturn_checks,
            accept_sum: self.accept_sum,
            accept_count: self.accept_count,
        }
    }
}

/// Shared inputs of a tree build.
pub(crate) struct TreeBuildCtx<'a, T: ?Sized> {
    pub target: &'a T,
    pub mass: &'a MassSpec,
    pub step_size: f64,
    pub divergence_threshold: f64,
    pub slice: SliceThreshold,
    /// Materialize every slice-accepted position in `candidates` instead of
    /// only maintaining the reservoir representative.
    pub collect_all: bool,
}

/// One leapfrog step: the depth-0 tree.
pub(crate) fn build_leaf<T: TargetDistribution + ?Sized>(
    ctx: &TreeBuildCtx<'_, T>,
    from: &EvaluatedState,
    direction: Direction,
) -> SubTree {
    let state = leapfrog_evaluated(ctx.target, from, direction.signed(ctx.step_size), ctx.mass);
    let h = state.hamiltonian(ctx.mass);
    let ratio = (ctx.slice.h0 - h).exp();
    let alpha = if ratio.is_nan() { 0.0 } else { ratio.min(1.0) };
    let divergent =
        !state.is_finite() || !h.is_finite() || h - ctx.slice.h0 > ctx.divergence_threshold;
    let accepted = !divergent && ctx.slice.accepts_energy(h);
    let mut candidates = Vec::new();
    if accepted && ctx.collect_all {
        candidates.push(state.point.position.clone());
    }
    SubTree {
        chosen: accepted.then(|| state.point.position.clone()),
        candidates,
        n_valid: accepted as u64,
        stopped: divergent,
        divergent,
        n_states: 1,
        uturn_checks: 0,
        accept_sum: alpha,
        accept_count: 1,
        bwd: state.clone(),
        fwd: state,
    }
}

/// Uniform reservoir merge: keep the old representative with probability
/// `n_keep/(n_keep + n_new)`, otherwise take the new one.
pub(crate) fn reservoir_pick<R: Rng + ?Sized>(
    rng: &mut R,
    keep: Option<Vec<f64>>,
    n_keep: u64,
    new: Option<Vec<f64>>,
    n_new: u64,
) -> Option<Vec<f64>> {
    if n_new == 0 {
        return keep;
    }
    if n_keep == 0 {
        return new;
    }
    let p_new = n_new as f64 / (n_keep + n_new) as f64;
    if rng.random::<f64>() < p_new {
        new
    } else {
        keep
    }
}

/// Recursively builds a balanced binary tree of `2^depth` leapfrog states in
/// the given time direction, merging subtree summaries bottom-up. Every
/// internal merge checks the U-turn condition between the merged span's
/// endpoints; a stopped first half prunes the second half entirely.
pub(crate) fn build_binary_subtree<T: TargetDistribution + ?Sized, R: Rng + ?Sized>(
    ctx: &TreeBuildCtx<'_, T>,
    rng: &mut R,
    from: &EvaluatedState,
    direction: Direction,
    depth: usize,
) -> SubTree {
    if depth == 0 {
        return build_leaf(ctx, from, direction);
    }
    let first = build_binary_subtree(ctx, rng, from, direction, depth - 1);
    if first.stopped {
        return first;
    }
    let cont = match direction {
        Direction::Forward => first.fwd.clone(),
        Direction::Backward => first.bwd.clone(),
    };
    let second = build_binary_subtree(ctx, rng, &cont, direction, depth - 1);
    let (bwd, fwd) = match direction {
        Direction::Forward => (first.bwd, second.fwd),
        Direction::Backward => (second.bwd, first.fwd),
    };
    let n_valid = first.n_valid + second.n_valid;
    let chosen = reservoir_pick(rng, first.chosen, first.n_valid, second.chosen, second.n_valid);
    let mut candidates = first.candidates;
    candidates.extend(second.candidates);
    let mut uturn_checks = first.uturn_checks + second.uturn_checks;
    let stopped = second.stopped || {
        uturn_checks += 1;
        u_turn_stop(&bwd.point.position, &fwd.point.position, &bwd.point.momentum, &fwd.point.momentum)
    };
    SubTree {
        bwd,
        fwd,
        chosen,
        candidates,
        n_valid,
        stopped,
        divergent: first.divergent || second.divergent,
        n_states: first.n_states + second.n_states,
        uturn_checks,
        accept_sum: first.accept_sum + second.accept_sum,
        accept_count: first.accept_count + second.accept_count,
    }
}

/// Public wrapper over the recursive builder, starting from an explicit
/// phase point. `rng` drives only the within-tree reservoir swaps.
#[allow(clippy::too_many_arguments)]
pub fn build_tree_binary<T: TargetDistribution + ?Sized, R: Rng + ?Sized>(
    target: &T,
    state: &PhasePoint,
    slice: SliceThreshold,
    direction: Direction,
    depth: usize,
    config: &SamplerConfig,
    step_size: f64,
    mass: &MassSpec,
    rng: &mut R,
) -> TreeSummary {
    let from = EvaluatedState::evaluate(target, state.position.clone(), state.momentum.clone());
    let ctx = TreeBuildCtx {
        target,
        mass,
        step_size,
        divergence_threshold: config.divergence_threshold,
        slice,
        collect_all: false,
    };
    build_binary_subtree(&ctx, rng, &from, direction, depth).into_summary()
}

/// Diagnostics from one draw.
#[derive(Debug, Clone, Copy)]
pub struct DrawStats {
    /// Doubling (or k-ary) iterations performed.
    pub depth: usize,
    /// Leapfrog states generated.
    pub n_states: u64,
    /// Slice-accepted candidates (including the start point).
    pub n_valid: u64,
    pub divergent: bool,
    pub stop: StopReason,
    pub accept_sum: f64,
    pub accept_count: u64,
}

impl DrawStats {
    /// Mean acceptance statistic for the dual-averaging update.
    pub fn accept_stat(&self) -> f64 {
        if self.accept_count == 0 {
            0.0
        } else {
            self.accept_sum / self.accept_count as f64
        }
    }
}

/// One NUTS transition from `current` with a fixed step size.
///
/// Returns the next position (uniform over the trajectory's slice-accepted
/// points, the start included) and the draw diagnostics. A draw whose very
/// first state diverges returns `current` unchanged.
pub fn nuts_draw<T: TargetDistribution + ?Sized>(
    target: &T,
    current: &[f64],
    config: &SamplerConfig,
    step_size: f64,
    mass: &MassSpec,
    streams: &mut ChainStreams,
) -> (Vec<f64>, DrawStats) {
    let momentum = mass.sample_momentum(&mut streams.dynamics);
    let start = EvaluatedState::evaluate(target, current.to_vec(), momentum);
    let h0 = start.hamiltonian(mass);
    let mut stats = DrawStats {
        depth: 0,
        n_states: 0,
        n_valid: 0,
        divergent: false,
        stop: StopReason::MaxDepth,
        accept_sum: 0.0,
        accept_count: 0,
    };
    if !h0.is_finite() {
        stats.divergent = true;
        stats.stop = StopReason::Divergence;
        return (current.to_vec(), stats);
    }
    let slice = SliceThreshold::draw(h0, &mut streams.dynamics);
    let ctx = TreeBuildCtx {
        target,
        mass,
        step_size,
        divergence_threshold: config.divergence_threshold,
        slice,
        collect_all: false,
    };
    let mut minus = start.clone();
    let mut plus = start;
    let mut chosen = Some(current.to_vec());
    let mut n_valid = 1u64;
    for depth in 0..config.max_depth {
        let direction = Direction::random(&mut streams.dynamics);
        let sub = match direction {
            Direction::Forward => {
                build_binary_subtree(&ctx, &mut streams.selection, &plus, direction, depth)
            }
            Direction::Backward => {
                build_binary_subtree(&ctx, &mut streams.selection, &minus, direction, depth)
            }
        };
        match direction {
            Direction::Forward => plus = sub.fwd.clone(),
            Direction::Backward => minus = sub.bwd.clone(),
        }
        stats.depth = depth + 1;
        stats.n_states += sub.n_states;
        stats.accept_sum += sub.accept_sum;
        stats.accept_count += sub.accept_count;
        stats.divergent |= sub.divergent;
        if sub.stopped {
            // Candidates of a stopped subtree are not selectable.
            stats.stop = if sub.divergent { StopReason::Divergence } else { StopReason::UTurn };
            break;
        }
        chosen = reservoir_pick(&mut streams.selection, chosen, n_valid, sub.chosen, sub.n_valid);
        n_valid += sub.n_valid;
        if u_turn_stop(
            &minus.point.position,
            &plus.point.position,
            &minus.point.momentum,
            &plus.point.momentum,
        ) {
            stats.stop = StopReason::UTurn;
            break;
        }
    }
    stats.n_valid = n_valid;
    (chosen.unwrap_or_else(|| current.to_vec()), stats)
}

/// Result of the initial step-size search.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonSearch {
    pub epsilon: f64,
    /// The doubling/halving loop hit its 100-iteration cap; `epsilon` is the
    /// last value tried and should be treated with suspicion.
    pub capped: bool,
}

/// Finds a step size whose one-step acceptance ratio crosses ½, by doubling
/// or halving from ε = 1 with a fresh momentum draw.
pub fn find_reasonable_epsilon<T: TargetDistribution + ?Sized, R: Rng + ?Sized>(
    target: &T,
    q: &[f64],
    mass: &MassSpec,
    rng: &mut R,
) -> EpsilonSearch {
    let momentum = mass.sample_momentum(rng);
    let start = EvaluatedState::evaluate(target, q.to_vec(), momentum);
    let h0 = start.hamiltonian(mass);
    if !h0.is_finite() {
        return EpsilonSearch { epsilon: 1.0, capped: true };
    }
    let log_ratio = |eps: f64| {
        let h = leapfrog_evaluated(target, &start, eps, mass).hamiltonian(mass);
        if h.is_nan() {
            f64::NEG_INFINITY
        } else {
            h0 - h
        }
    };
    let mut eps = 1.0_f64;
    let mut lr = log_ratio(eps);
    let a: f64 = if lr > -core::f64::consts::LN_2 { 1.0 } else { -1.0 };
    let mut iterations = 0;
    while a * lr > -a * core::f64::consts::LN_2 {
        iterations += 1;
        if iterations > 100 {
            return EpsilonSearch { epsilon: eps, capped: true };
        }
        eps *= if a > 0.0 { 2.0 } else { 0.5 };
        lr = log_ratio(eps);
    }
    EpsilonSearch { epsilon: eps, capped: false }
}

/// Dual-averaging constants (gamma, t0, kappa).
pub const DUAL_AVERAGING_GAMMA: f64 = 0.05;
pub const DUAL_AVERAGING_T0: f64 = 10.0;
pub const DUAL_AVERAGING_KAPPA: f64 = 0.75;

/// Dual-averaging step-size adapter driving the mean acceptance statistic
/// toward `target_accept`. Call [`update`](DualAveraging::update) once per
/// burn-in draw; freeze to [`adapted`](DualAveraging::adapted) afterwards.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    m: u64,
    target_accept: f64,
}

impl DualAveraging {
    pub fn new(initial_step: f64, target_accept: f64) -> Self {
        DualAveraging {
            mu: (10.0 * initial_step).ln(),
            log_eps: initial_step.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            m: 0,
            target_accept,
        }
    }

    /// One update with this iteration's acceptance statistic; returns the
    /// step size for the next iteration.
    pub fn update(&mut self, accept_stat: f64) -> f64 {
        self.m += 1;
        let m = self.m as f64;
        let eta = 1.0 / (m + DUAL_AVERAGING_T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target_accept - accept_stat);
        self.log_eps = self.mu - m.sqrt() / DUAL_AVERAGING_GAMMA * self.h_bar;
        let w = m.powf(-DUAL_AVERAGING_KAPPA);
        self.log_eps_bar = w * self.log_eps + (1.0 - w) * self.log_eps_bar;
        self.current()
    }

    /// Step size in play right now.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Smoothed step size to freeze once adaptation ends.
    pub fn adapted(&self) -> f64 {
        self.log_eps_bar.exp()
    }
}

/// Per-chain step-size state: either pinned or adapting for a fixed number
/// of draws, then frozen at the dual-averaged value.
#[derive(Debug, Clone)]
pub(crate) struct StepSizeController {
    current: f64,
    adapter: Option<DualAveraging>,
    adapt_iterations: usize,
    observed: usize,
}

impl StepSizeController {
    pub fn fixed(step: f64) -> Self {
        StepSizeController { current: step, adapter: None, adapt_iterations: 0, observed: 0 }
    }

    pub fn adaptive(initial: f64, target_accept: f64, adapt_iterations: usize) -> Self {
        StepSizeController {
            current: initial,
            adapter: Some(DualAveraging::new(initial, target_accept)),
            adapt_iterations,
            observed: 0,
        }
    }

    pub fn current(&self) -> f64 {
        self.current
    }

    pub fn observe(&mut self, accept_stat: f64) {
        if let Some(adapter) = &mut self.adapter {
            if self.observed < self.adapt_iterations {
                self.current = adapter.update(accept_stat);
                self.observed += 1;
                if self.observed == self.adapt_iterations {
                    self.current = adapter.adapted();
                }
            }
        }
    }
}

/// A single NUTS Markov chain over a borrowed target.
///
/// Sequential by construction; run several instances with distinct seeds for
/// concurrent chains.
pub struct NutsChain<'a, T: TargetDistribution + ?Sized> {
    target: &'a T,
    config: SamplerConfig,
    mass: MassSpec,
    position: Vec<f64>,
    streams: ChainStreams,
    step: StepSizeController,
    last_stats: Option<DrawStats>,
}

impl<'a, T: TargetDistribution + ?Sized> NutsChain<'a, T> {
    pub fn new(target: &'a T, initial: Vec<f64>, config: SamplerConfig) -> Result<Self> {
        let mass = MassSpec::identity(target.dimension());
        Self::with_mass(target, initial, config, mass)
    }

    pub fn with_mass(
        target: &'a T,
        initial: Vec<f64>,
        config: SamplerConfig,
        mass: MassSpec,
    ) -> Result<Self> {
        config.validate()?;
        if initial.len() != target.dimension() {
            return Err(Error::DimensionMismatch {
                expected: target.dimension(),
                got: initial.len(),
            });
        }
        if mass.dimension() != initial.len() {
            return Err(Error::DimensionMismatch {
                expected: initial.len(),
                got: mass.dimension(),
            });
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mut streams = ChainStreams::from_seed(config.seed);
        let step = match config.step_size {
            Some(step) => StepSizeController::fixed(step),
            None => {
                let found =
                    find_reasonable_epsilon(target, &initial, &mass, &mut streams.dynamics);
                StepSizeController::adaptive(
                    found.epsilon,
                    config.target_accept,
                    config.adapt_iterations,
                )
            }
        };
        Ok(NutsChain { target, config, mass, position: initial, streams, step, last_stats: None })
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn step_size(&self) -> f64 {
        self.step.current()
    }

    pub fn last_stats(&self) -> Option<&DrawStats> {
        self.last_stats.as_ref()
    }

    /// One transition of the chain, including adaptation bookkeeping.
    pub fn step(&mut self) -> Vec<f64> {
        let (position, stats) = nuts_draw(
            self.target,
            &self.position,
            &self.config,
            self.step.current(),
            &self.mass,
            &mut self.streams,
        );
        self.step.observe(stats.accept_stat());
        self.last_stats = Some(stats);
        self.position = position.clone();
        position
    }

    /// Runs `n_samples` draws and returns those after the first `burn_in`.
    pub fn run(&mut self, n_samples: usize, burn_in: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(n_samples.saturating_sub(burn_in));
        for i in 0..n_samples {
            let position = self.step();
            if i >= burn_in {
                out.push(position);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::{GaussianComponent, GaussianMixture};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::vec;

    #[test]
    fn u_turn_aligned_motion_continues() {
        assert!(!u_turn_stop(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]));
    }

    #[test]
    fn u_turn_reversed_momentum_stops() {
        assert!(u_turn_stop(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], &[-1.0, 0.0]));
    }

    #[test]
    fn u_turn_zero_dot_is_boundary_continue() {
        // both dot products are exactly zero: perpendicular momenta continue.
        assert!(!u_turn_stop(&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]));
    }

    #[test]
    fn slice_boundary_is_inclusive() {
        let target = GaussianMixture::standard_normal(1);
        let mass = MassSpec::identity(1);
        let q = [0.4];
        let p = [0.9];
        let h = hamiltonian(&target, &q, &p, &mass);
        assert!(slice_accepts(-h, &target, &q, &p, &mass));
        assert!(!slice_accepts(-h + 0.1, &target, &q, &p, &mass));
    }

    #[test]
    fn slice_draw_always_accepts_initial_state() {
        let target = GaussianMixture::standard_normal(2);
        let mass = MassSpec::identity(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let q = [0.3, -1.0];
            let p = mass.sample_momentum(&mut rng);
            let h0 = hamiltonian(&target, &q, &p, &mass);
            let slice = SliceThreshold::draw(h0, &mut rng);
            assert!(slice.accepts_energy(h0));
        }
    }

    fn slice_for(target: &GaussianMixture, state: &PhasePoint, mass: &MassSpec) -> SliceThreshold {
        let h0 = hamiltonian(target, &state.position, &state.momentum, mass);
        // slice at the trajectory density itself: the start always passes
        SliceThreshold { log_u: -h0, h0 }
    }

    #[test]
    fn depth_zero_tree_is_one_step_with_coincident_endpoints() {
        let target = GaussianMixture::standard_normal(2);
        let mass = MassSpec::identity(2);
        let config = SamplerConfig::default();
        let state = PhasePoint::new(vec![0.1, 0.0], vec![0.5, -0.2]);
        let slice = slice_for(&target, &state, &mass);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = build_tree_binary(
            &target,
            &state,
            slice,
            Direction::Forward,
            0,
            &config,
            0.05,
            &mass,
            &mut rng,
        );
        assert_eq!(tree.n_states, 1);
        assert_eq!(tree.minus, tree.plus);
        assert!(!tree.stopped);
    }

    #[test]
    fn depth_three_tree_has_eight_states() {
        let target = GaussianMixture::standard_normal(2);
        let mass = MassSpec::identity(2);
        let config = SamplerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let momentum = mass.sample_momentum(&mut rng);
        let state = PhasePoint::new(vec![0.2, -0.1], momentum);
        let h0 = hamiltonian(&target, &state.position, &state.momentum, &mass);
        let slice = SliceThreshold::draw(h0, &mut rng);
        let tree = build_tree_binary(
            &target,
            &state,
            slice,
            Direction::Forward,
            3,
            &config,
            0.05,
            &mass,
            &mut rng,
        );
        assert_eq!(tree.n_states, 8);
        assert!(!tree.stopped);
        assert!(tree.n_valid >= 1);
        assert_ne!(tree.minus, tree.plus);
    }

    #[test]
    fn huge_step_size_diverges_immediately() {
        let target = GaussianMixture::standard_normal(1);
        let mass = MassSpec::identity(1);
        let config = SamplerConfig::default();
        let state = PhasePoint::new(vec![0.0], vec![1.0]);
        let slice = slice_for(&target, &state, &mass);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = build_tree_binary(
            &target,
            &state,
            slice,
            Direction::Forward,
            1,
            &config,
            100.0,
            &mass,
            &mut rng,
        );
        assert!(tree.stopped);
        assert_eq!(tree.n_valid, 0);
    }

    #[test]
    fn reservoir_is_uniform_over_seven_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut counts = [0u32; 7];
        let reps = 100_000;
        for _ in 0..reps {
            let mut chosen: Option<Vec<f64>> = None;
            let mut n = 0u64;
            for c in 0..7 {
                chosen = reservoir_pick(&mut rng, chosen, n, Some(vec![c as f64]), 1);
                n += 1;
            }
            counts[chosen.unwrap()[0] as usize] += 1;
        }
        for c in counts {
            let freq = c as f64 / reps as f64;
            assert!((freq - 1.0 / 7.0).abs() < 0.01, "frequency {freq}");
        }
    }

    #[test]
    fn find_reasonable_epsilon_on_standard_normal() {
        let target = GaussianMixture::standard_normal(1);
        let mass = MassSpec::identity(1);
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let found = find_reasonable_epsilon(&target, &[0.0], &mass, &mut rng);
            assert!(!found.capped);
            assert!(
                (0.0625..=16.0).contains(&found.epsilon),
                "epsilon {} out of sanity range",
                found.epsilon
            );
        }
    }

    #[test]
    fn find_reasonable_epsilon_shrinks_with_length_scale() {
        let wide = GaussianMixture::standard_normal(1);
        let narrow = {
            let c = GaussianComponent::isotropic(vec![0.0], 1e-6).unwrap();
            GaussianMixture::new(vec![c], &[1.0]).unwrap()
        };
        let mass = MassSpec::identity(1);
        let eps_wide =
            find_reasonable_epsilon(&wide, &[0.0], &mass, &mut ChaCha8Rng::seed_from_u64(8));
        let eps_narrow =
            find_reasonable_epsilon(&narrow, &[0.0], &mass, &mut ChaCha8Rng::seed_from_u64(8));
        assert!(eps_narrow.epsilon < eps_wide.epsilon);
    }

    #[test]
    fn find_reasonable_epsilon_is_deterministic() {
        let target = GaussianMixture::standard_normal(3);
        let mass = MassSpec::identity(3);
        let a = find_reasonable_epsilon(&target, &[0.1, 0.2, 0.3], &mass, &mut ChaCha8Rng::seed_from_u64(5));
        let b = find_reasonable_epsilon(&target, &[0.1, 0.2, 0.3], &mass, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.epsilon, b.epsilon);
    }

    #[test]
    fn dual_averaging_fixed_point_at_target() {
        let mut da = DualAveraging::new(0.5, 0.8);
        let mut history = std::vec::Vec::new();
        for _ in 0..300 {
            history.push(da.update(0.8).ln());
        }
        let tail = &history[200..];
        let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - tail.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread < 1e-3, "log step size still moving: {spread}");
    }

    #[test]
    fn dual_averaging_all_reject_shrinks_step() {
        // The first update is dominated by the exploratory mu = ln(10·eps0)
        // offset; the corrective direction shows from there on.
        let mut da = DualAveraging::new(1.0, 0.8);
        let mut prev = da.update(0.0);
        for _ in 0..50 {
            let eps = da.update(0.0);
            assert!(eps < prev, "step size must strictly decrease");
            prev = eps;
        }
        assert!(da.current() < 1.0);
    }

    #[test]
    fn dual_averaging_all_accept_grows_step() {
        let mut da = DualAveraging::new(1.0, 0.8);
        let mut prev = da.update(1.0);
        for _ in 0..50 {
            let eps = da.update(1.0);
            assert!(eps > prev, "step size must strictly increase");
            prev = eps;
        }
        assert!(da.current() > 1.0);
    }

    #[test]
    fn tiny_step_draw_stays_near_start() {
        let target = GaussianMixture::standard_normal(2);
        let mass = MassSpec::identity(2);
        let config = SamplerConfig { max_depth: 3, ..SamplerConfig::default() };
        let mut streams = ChainStreams::from_seed(21);
        let start = vec![0.5, -0.5];
        let (next, _) = nuts_draw(&target, &start, &config, 1e-4, &mass, &mut streams);
        let dist: f64 = next
            .iter()
            .zip(&start)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(dist < 0.5, "moved {dist} with a tiny step size");
    }

    #[test]
    fn zero_max_depth_returns_current() {
        let target = GaussianMixture::standard_normal(1);
        let mass = MassSpec::identity(1);
        let config = SamplerConfig { max_depth: 0, ..SamplerConfig::default() };
        let mut streams = ChainStreams::from_seed(3);
        let (next, stats) = nuts_draw(&target, &[0.7], &config, 0.5, &mass, &mut streams);
        assert_eq!(next, vec![0.7]);
        assert_eq!(stats.stop, StopReason::MaxDepth);
    }

    #[test]
    fn draws_are_bit_reproducible() {
        let target = GaussianMixture::standard_normal(2);
        let config = SamplerConfig { seed: 99, adapt_iterations: 50, ..SamplerConfig::default() };
        let mut a = NutsChain::new(&target, vec![0.0, 0.0], config.clone()).unwrap();
        let mut b = NutsChain::new(&target, vec![0.0, 0.0], config).unwrap();
        assert_eq!(a.run(120, 20), b.run(120, 20));
    }

    #[test]
    fn stop_reason_is_consistent_with_depth() {
        let target = GaussianMixture::standard_normal(2);
        let config = SamplerConfig { seed: 31, adapt_iterations: 20, ..SamplerConfig::default() };
        let mut chain = NutsChain::new(&target, vec![0.1, 0.1], config).unwrap();
        for _ in 0..100 {
            chain.step();
            let stats = chain.last_stats().unwrap();
            if stats.stop == StopReason::MaxDepth {
                assert_eq!(stats.depth, 10);
            }
        }
    }

    #[test]
    fn chain_moments_on_standard_normal_are_sane() {
        let target = GaussianMixture::standard_normal(1);
        let config = SamplerConfig { seed: 7, adapt_iterations: 200, ..SamplerConfig::default() };
        let mut chain = NutsChain::new(&target, vec![0.0], config).unwrap();
        let samples = chain.run(2200, 200);
        let n = samples.len() as f64;
        let mean: f64 = samples.iter().map(|s| s[0]).sum::<f64>() / n;
        let var: f64 = samples.iter().map(|s| (s[0] - mean) * (s[0] - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.15, "mean {mean}");
        assert!((0.75..=1.25).contains(&var), "variance {var}");
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let bad_eps = SamplerConfig { step_size: Some(0.0), ..SamplerConfig::default() };
        assert!(bad_eps.validate().is_err());
        let bad_depth = SamplerConfig { max_depth: 0, ..SamplerConfig::default() };
        assert!(bad_depth.validate().is_err());
        let bad_accept = SamplerConfig { target_accept: 1.0, ..SamplerConfig::default() };
        assert!(bad_accept.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }

    #[test]
    fn accept_stat_is_bounded() {
        let target = GaussianMixture::standard_normal(2);
        let config = SamplerConfig { seed: 12, ..SamplerConfig::default() };
        let mass = MassSpec::identity(2);
        let mut streams = ChainStreams::from_seed(12);
        let (_, stats) = nuts_draw(&target, &[0.0, 0.0], &config, 0.3, &mass, &mut streams);
        let stat = stats.accept_stat();
        assert!((0.0..=1.0).contains(&stat));
        assert!(stats.accept_count >= 1);
        assert_abs_diff_eq!(
            stats.accept_stat() * stats.accept_count as f64,
            stats.accept_sum,
            epsilon = 1e-12
        );
    }
}
