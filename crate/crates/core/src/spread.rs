//! SpreadNUTS: NUTS with moderate k-ary trajectory extension and
//! exploration-biased candidate selection.
//!
//! Iteration `k` of a draw appends `k^k` sequential leapfrog states instead
//! of doubling, and U-turn checks run only between the edge leaves of each
//! subtree of a conceptual depth-`k` full k-ary tree over those states —
//! `(k^k − 1)/(k − 1)` checks instead of the binary scheme's `k^k − 1` for
//! the same point budget. The returned sample is drawn from the collected
//! slice-accepted candidates with probability proportional to each
//! candidate's squared distance to its nearest previously accepted sample
//! (uniform on a cold start), and is then inserted into the spatial index.

use alloc::vec;
use alloc::vec::Vec;
// Resolves f64 math under no_std; std's inherent methods shadow it when
// std is anywhere in the crate graph, so the import can look unused.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::dynamics::{leapfrog_evaluated, EvaluatedState, MassSpec, PhasePoint};
use crate::error::{Error, Result};
use crate::mixture::TargetDistribution;
use crate::nuts::{
    build_binary_subtree, u_turn_stop, Direction, DrawStats, SamplerConfig, SliceThreshold,
    StepSizeController, StopReason, SubTree, TreeBuildCtx, TreeSummary,
};
use crate::rng::{weighted_choice, ChainStreams};
use crate::spatial::SpatialIndex;

/// Configuration for a SpreadNUTS chain.
#[derive(Debug, Clone)]
pub struct SpreadConfig {
    pub base: SamplerConfig,
    /// Cumulative cap on trajectory length per draw. `k^k` growth reaches
    /// 3125 points at k = 5, so an explicit budget replaces NUTS's depth cap;
    /// mid-iteration truncation keeps completed states and acts as a stop.
    pub max_total_points: u64,
    /// When false, the returned point is uniform over the candidates
    /// (ablation switch; the k-ary extension stays active).
    pub selection_bias_enabled: bool,
    /// Diagnostic mode: arity pinned to 2 with `2^(k−1)` points at iteration
    /// `k` built through the binary machinery (including its pruning and
    /// stopped-subtree exclusion), so trajectories reduce to baseline NUTS.
    pub force_binary: bool,
}

impl Default for SpreadConfig {
    fn default() -> Self {
        SpreadConfig {
            base: SamplerConfig::default(),
            max_total_points: 1024,
            selection_bias_enabled: true,
            force_binary: false,
        }
    }
}

impl SpreadConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.max_total_points < 1 {
            return Err(Error::InvalidParameter("max_total_points must be at least 1"));
        }
        Ok(())
    }
}

/// Points added at iteration `k`: exactly `k^k`.
pub fn kary_points(k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidParameter("iteration number must be at least 1"));
    }
    Ok((k as u64).checked_pow(k as u32).unwrap_or(u64::MAX))
}

/// U-turn checks for iteration `k`: the `(k^k − 1)/(k − 1)` internal nodes
/// of a full k-ary tree on `k^k` leaves. `k = 1` degenerates to a single
/// (trivial) check on the lone point.
pub fn kary_check_count(k: usize) -> u64 {
    if k <= 1 {
        return 1;
    }
    let points = (k as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    (points - 1) / (k as u64 - 1)
}

/// Per-iteration accounting of one draw's k-ary extensions.
#[derive(Debug, Clone, Copy)]
pub struct KaryTreeLevel {
    /// Iteration number `k` (1-based).
    pub iteration: usize,
    /// Tree arity, equal to the iteration number.
    pub arity: usize,
    /// States kept this iteration (`k^k` unless truncated).
    pub points_added: u64,
    /// U-turn evaluations performed inside this iteration's tree.
    pub uturn_checks: u64,
    pub stopped: bool,
    /// The point budget cut this iteration short.
    pub truncated: bool,
}

/// Generates up to `budget` of the iteration's `k^k` sequential states and
/// runs the relaxed edge-leaf U-turn checks over complete subtrees only
/// (partial subtrees are covered by their ancestors' span checks).
fn build_kary<T: TargetDistribution + ?Sized>(
    ctx: &TreeBuildCtx<'_, T>,
    from: &EvaluatedState,
    direction: Direction,
    k: usize,
    budget: u64,
) -> (SubTree, bool) {
    let full = kary_points(k).expect("k >= 1");
    let n_target = full.min(budget);
    let truncated = n_target < full;
    let eps = direction.signed(ctx.step_size);

    let mut states: Vec<EvaluatedState> = Vec::with_capacity(n_target as usize);
    let mut candidates = Vec::new();
    let mut divergent = false;
    let mut accept_sum = 0.0;
    let mut accept_count = 0u64;
    let mut cur = from.clone();
    for _ in 0..n_target {
        let next = leapfrog_evaluated(ctx.target, &cur, eps, ctx.mass);
        let h = next.hamiltonian(ctx.mass);
        let ratio = (ctx.slice.h0 - h).exp();
        accept_sum += if ratio.is_nan() { 0.0 } else { ratio.min(1.0) };
        accept_count += 1;
        if !next.is_finite() || !h.is_finite() || h - ctx.slice.h0 > ctx.divergence_threshold {
            divergent = true;
            if states.is_empty() {
                // Nothing survived; expose the divergent state as both
                // endpoints (the caller stops and never extends from them).
                let sub = SubTree {
                    bwd: next.clone(),
                    fwd: next,
                    chosen: None,
                    candidates,
                    n_valid: 0,
                    stopped: true,
                    divergent: true,
                    n_states: 0,
                    uturn_checks: 0,
                    accept_sum,
                    accept_count,
                };
                return (sub, truncated);
            }
            break;
        }
        if ctx.slice.accepts_energy(h) {
            candidates.push(next.point.position.clone());
        }
        states.push(next);
        cur = states.last().expect("just pushed").clone();
    }

    let n_states = states.len() as u64;
    // Edge-leaf checks: a node at depth d of the full k-ary tree spans
    // k^(k-d) consecutive leaves; only fully generated spans are checked.
    let mut uturn_checks = 0u64;
    let mut any_uturn = false;
    for node_depth in 0..k {
        let span = (k as u64).checked_pow((k - node_depth) as u32).unwrap_or(u64::MAX);
        let mut start = 0u64;
        while start + span <= n_states {
            let first = &states[start as usize];
            let last = &states[(start + span - 1) as usize];
            let (bwd, fwd) = match direction {
                Direction::Forward => (first, last),
                Direction::Backward => (last, first),
            };
            uturn_checks += 1;
            any_uturn |= u_turn_stop(
                &bwd.point.position,
                &fwd.point.position,
                &bwd.point.momentum,
                &fwd.point.momentum,
            );
            start += span;
        }
    }

    let (bwd, fwd) = match direction {
        Direction::Forward => (states[0].clone(), states[states.len() - 1].clone()),
        Direction::Backward => (states[states.len() - 1].clone(), states[0].clone()),
    };
    let n_valid = candidates.len() as u64;
    let sub = SubTree {
        bwd,
        fwd,
        chosen: None,
        candidates,
        n_valid,
        stopped: any_uturn || divergent,
        divergent,
        n_states,
        uturn_checks,
        accept_sum,
        accept_count,
    };
    (sub, truncated)
}

/// Public k-ary tree build from an explicit phase point, collecting every
/// slice-accepted candidate. Consumes no randomness.
pub fn build_tree_kary<T: TargetDistribution + ?Sized>(
    target: &T,
    state: &PhasePoint,
    slice: SliceThreshold,
    direction: Direction,
    k: usize,
    config: &SpreadConfig,
    step_size: f64,
    mass: &MassSpec,
) -> Result<TreeSummary> {
    if k == 0 {
        return Err(Error::InvalidParameter("iteration number must be at least 1"));
    }
    let from = EvaluatedState::evaluate(target, state.position.clone(), state.momentum.clone());
    let ctx = TreeBuildCtx {
        target,
        mass,
        step_size,
        divergence_threshold: config.base.divergence_threshold,
        slice,
        collect_all: true,
    };
    let (sub, _) = build_kary(&ctx, &from, direction, k, config.max_total_points);
    Ok(sub.into_summary())
}

/// Selection probabilities over trajectory candidates: `wᵢ = dᵢ / Σⱼ dⱼ`
/// with `dᵢ` the squared distance to the nearest stored sample. An empty
/// index (cold start) or all-zero distances fall back to uniform.
pub fn selection_weights(candidates: &[Vec<f64>], index: &SpatialIndex) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = candidates.len();
    let uniform = vec![1.0 / n as f64; n];
    if index.is_empty() {
        return Ok(uniform);
    }
    let mut dists = Vec::with_capacity(n);
    for c in candidates {
        dists.push(index.nearest_sq_distance(c)?);
    }
    let sum: f64 = dists.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Ok(uniform);
    }
    Ok(dists.into_iter().map(|d| d / sum).collect())
}

/// Full diagnostics of one SpreadNUTS draw.
#[derive(Debug, Clone)]
pub struct SpreadDrawOutcome {
    pub position: Vec<f64>,
    /// Per-iteration accounting, in order.
    pub levels: Vec<KaryTreeLevel>,
    /// Size of the candidate pool the selection was made from.
    pub n_candidates: usize,
    pub stats: DrawStats,
}

/// One SpreadNUTS transition: momentum and slice draws, iterated k-ary
/// extension in random directions until a stop, then weighted selection
/// from the collected candidates and insertion of the result into `index`.
///
/// The current position always joins the candidate pool (its own distance is
/// zero once stored, so the bias de-emphasizes it naturally). A draw whose
/// first energy evaluation is non-finite returns `current` without touching
/// the index.
pub fn spread_nuts_draw<T: TargetDistribution + ?Sized>(
    target: &T,
    current: &[f64],
    config: &SpreadConfig,
    step_size: f64,
    mass: &MassSpec,
    index: &mut SpatialIndex,
    streams: &mut ChainStreams,
) -> SpreadDrawOutcome {
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
        return SpreadDrawOutcome {
            position: current.to_vec(),
            levels: Vec::new(),
            n_candidates: 0,
            stats,
        };
    }
    let slice = SliceThreshold::draw(h0, &mut streams.dynamics);
    let ctx = TreeBuildCtx {
        target,
        mass,
        step_size,
        divergence_threshold: config.base.divergence_threshold,
        slice,
        collect_all: true,
    };
    let mut minus = start.clone();
    let mut plus = start;
    let mut pool: Vec<Vec<f64>> = vec![current.to_vec()];
    let mut levels = Vec::new();
    let mut total_points = 0u64;
    let mut iteration = 1usize;
    loop {
        if config.force_binary && iteration > config.base.max_depth {
            stats.stop = StopReason::MaxDepth;
            break;
        }
        let remaining = config.max_total_points.saturating_sub(total_points);
        if !config.force_binary && remaining == 0 {
            stats.stop = StopReason::PointBudget;
            break;
        }
        let direction = Direction::random(&mut streams.dynamics);
        let from = match direction {
            Direction::Forward => plus.clone(),
            Direction::Backward => minus.clone(),
        };
        let (sub, truncated) = if config.force_binary {
            let sub = build_binary_subtree(
                &ctx,
                &mut streams.selection,
                &from,
                direction,
                iteration - 1,
            );
            (sub, false)
        } else {
            build_kary(&ctx, &from, direction, iteration, remaining)
        };
        match direction {
            Direction::Forward => plus = sub.fwd.clone(),
            Direction::Backward => minus = sub.bwd.clone(),
        }
        stats.depth = iteration;
        stats.n_states += sub.n_states;
        stats.accept_sum += sub.accept_sum;
        stats.accept_count += sub.accept_count;
        stats.divergent |= sub.divergent;
        total_points += sub.n_states;
        levels.push(KaryTreeLevel {
            iteration,
            arity: if config.force_binary { 2 } else { iteration },
            points_added: sub.n_states,
            uturn_checks: sub.uturn_checks,
            stopped: sub.stopped,
            truncated,
        });
        // As in baseline NUTS, a stopped extension contributes no candidates:
        // its states overshot past a U-turn (or diverged) and selecting among
        // them measurably skews the stationary distribution.
        if sub.stopped {
            stats.stop = if sub.divergent { StopReason::Divergence } else { StopReason::UTurn };
            break;
        }
        pool.extend(sub.candidates);
        if truncated {
            stats.stop = StopReason::PointBudget;
            break;
        }
        if u_turn_stop(
            &minus.point.position,
            &plus.point.position,
            &minus.point.momentum,
            &plus.point.momentum,
        ) {
            stats.stop = StopReason::UTurn;
            break;
        }
        iteration += 1;
    }
    stats.n_valid = pool.len() as u64;
    let pick = if config.selection_bias_enabled {
        let weights = selection_weights(&pool, index).expect("pool holds the start point");
        weighted_choice(&mut streams.selection, &weights)
    } else {
        streams.selection.random_range(0..pool.len())
    };
    let n_candidates = pool.len();
    let position = pool.swap_remove(pick);
    index.insert(&position).expect("candidate positions are finite");
    SpreadDrawOutcome { position, levels, n_candidates, stats }
}

/// A single SpreadNUTS Markov chain owning its exploration index.
///
/// Burn-in draws populate the index like any other draw; discarding them
/// from reported samples is the caller's concern.
pub struct SpreadChain<'a, T: TargetDistribution + ?Sized> {
    target: &'a T,
    config: SpreadConfig,
    mass: MassSpec,
    position: Vec<f64>,
    streams: ChainStreams,
    step: StepSizeController,
    index: SpatialIndex,
    last_outcome: Option<SpreadDrawOutcome>,
}

impl<'a, T: TargetDistribution + ?Sized> SpreadChain<'a, T> {
    pub fn new(target: &'a T, initial: Vec<f64>, config: SpreadConfig) -> Result<Self> {
        config.validate()?;
        if initial.len() != target.dimension() {
            return Err(Error::DimensionMismatch {
                expected: target.dimension(),
                got: initial.len(),
            });
        }
        if initial.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let mass = MassSpec::identity(initial.len());
        let mut streams = ChainStreams::from_seed(config.base.seed);
        let step = match config.base.step_size {
            Some(step) => StepSizeController::fixed(step),
            None => {
                let found = crate::nuts::find_reasonable_epsilon(
                    target,
                    &initial,
                    &mass,
                    &mut streams.dynamics,
                );
                StepSizeController::adaptive(
                    found.epsilon,
                    config.base.target_accept,
                    config.base.adapt_iterations,
                )
            }
        };
        let index = SpatialIndex::new(initial.len());
        Ok(SpreadChain {
            target,
            config,
            mass,
            position: initial,
            streams,
            step,
            index,
            last_outcome: None,
        })
    }

    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn step_size(&self) -> f64 {
        self.step.current()
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn last_outcome(&self) -> Option<&SpreadDrawOutcome> {
        self.last_outcome.as_ref()
    }

    /// One transition of the chain, including adaptation bookkeeping.
    pub fn step(&mut self) -> Vec<f64> {
        let outcome = spread_nuts_draw(
            self.target,
            &self.position,
            &self.config,
            self.step.current(),
            &self.mass,
            &mut self.index,
            &mut self.streams,
        );
        self.step.observe(outcome.stats.accept_stat());
        self.position = outcome.position.clone();
        let position = outcome.position.clone();
        self.last_outcome = Some(outcome);
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
