//! Cost, gradient, and the constrained discrete learning step.
//!
//! One iteration moves the stacked weights by the raw gradient of the
//! weighted quadratic cost and then repairs any edge-constraint violations
//! with non-positive Lagrange multipliers, so no measurement transits beyond
//! the edge of its linear region within a step. Boundary ties are resolved
//! by the three transition cases (move off the edge when possible, otherwise
//! keep the constraint active and slide).

use std::collections::VecDeque;

use crate::constraints::{
    self, active_set, build_edge_constraints, constrain_to_feasible, stack_weights,
    ActiveSet, ConstraintSpec, SolveOutcome, StackedLayout,
};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{ActivationPattern, Network};
use crate::numerics::{dot, singular_values, DenseMatrix};
use crate::scalar::{lit, Real};
use crate::topology::TopologyEvent;

/// How the per-iteration gain on the base step weights is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Constant gain `alpha_scale` (the default policy).
    Fixed,
    /// Gain certified from the measurement-space Gram spectrum of the
    /// current region. With `accelerate`, a Chebyshev gain cycle over the
    /// certified eigenvalue interval replaces the stationary gain once
    /// topology adaptation has settled.
    Auto { accelerate: bool },
}

#[derive(Debug, Clone)]
pub struct TrainerConfig<T> {
    pub alpha_scale: T,
    pub step_mode: StepMode,
    pub max_iters: usize,
    pub cost_tol: T,
    pub grad_tol: T,
    pub eps_active: T,
    pub eps_feasible: T,
    pub seed: u64,
}

impl<T: Real> Default for TrainerConfig<T> {
    fn default() -> Self {
        Self {
            alpha_scale: T::one(),
            step_mode: StepMode::Fixed,
            max_iters: 1000,
            cost_tol: lit(1e-9),
            grad_tol: lit(1e-10),
            eps_active: lit(constraints::EPS_ACTIVE),
            eps_feasible: lit(constraints::EPS_FEASIBLE),
            seed: 0,
        }
    }
}

/// One row of the cost trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub iter: usize,
    pub cost: T,
    pub basic_neurons: usize,
    pub active_constraints: usize,
}

/// Assignment hint consumed by the next step: at exact ties between
/// `original` and `copy` inside `neuron`, measurements with `mask` set go to
/// the copy, the rest to the original. Used once after a duplication so the
/// pair can separate along a feasible half-space split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitHint {
    pub neuron: usize,
    pub original: usize,
    pub copy: usize,
    pub mask: Vec<bool>,
}

#[derive(Debug, Clone, Default)]
struct StepScheduler<T> {
    interval_sig: u64,
    interval: Option<(T, T)>,
    cheb: Vec<T>,
    cheb_pos: usize,
    growth_done: bool,
}

/// Mutable training state: the network plus iteration bookkeeping.
#[derive(Debug, Clone)]
pub struct TrainState<T: Real> {
    pub net: Network<T>,
    pub iter: usize,
    pub cost_trace: Vec<TraceRow<T>>,
    pub active_history: VecDeque<ActiveSet>,
    pub pending_hint: Option<SplitHint>,
    scheduler: StepScheduler<T>,
}

impl<T: Real> TrainState<T> {
    pub fn new(net: Network<T>) -> Self {
        Self {
            net,
            iter: 0,
            cost_trace: Vec::new(),
            active_history: VecDeque::with_capacity(8),
            pending_hint: None,
            scheduler: StepScheduler::default(),
        }
    }

    /// Invalidate cached step-schedule state after a topology change.
    pub fn invalidate_schedule(&mut self) {
        self.scheduler.interval_sig = 0;
        self.scheduler.interval = None;
        self.scheduler.cheb.clear();
        self.scheduler.cheb_pos = 0;
    }
}

/// Diagnostics of a single constrained step.
#[derive(Debug, Clone)]
pub struct StepReport<T> {
    /// Fraction of the gradient step kept after infeasibility halvings.
    pub eta: T,
    /// Gain applied on top of the base step weights this iteration.
    pub scale: T,
    pub grad_inf_norm: T,
    pub multipliers: Vec<(usize, T)>,
    pub active_set: ActiveSet,
    pub constraint_count: usize,
    pub max_violation_after: T,
    pub max_lambda: T,
    pub complementarity_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    CostTolerance,
    GradientTolerance,
    MaxIterations,
}

/// Aggregated result of a training run.
#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub stop: StopReason,
    pub iterations: usize,
    pub final_cost: T,
    pub events: Vec<(usize, TopologyEvent)>,
    /// Worst post-step edge-constraint value seen across the run.
    pub max_violation: T,
    /// Largest multiplier seen (must stay <= 0).
    pub max_lambda: T,
    /// Steps on which some nonzero multiplier was not complementary.
    pub complementarity_violations: usize,
}

// ---------------------------------------------------------------------------
// Cost and gradient
// ---------------------------------------------------------------------------

/// Base (unscaled) step weights: the per-measurement override when present,
/// otherwise `1 / (sqrt(M*J) * |x_m|)`, which keeps the trace of the
/// measurement-space Gram at 1 and hence certifies non-expansion.
pub fn resolve_alphas<T: Real>(net: &Network<T>, dataset: &Dataset<T>) -> Vec<T> {
    let mj = lit::<T>((dataset.len() * net.neuron_count()) as f64);
    let scale = T::one() / mj.sqrt();
    dataset
        .measurements()
        .iter()
        .map(|m| m.alpha.unwrap_or_else(|| scale / m.x.norm()))
        .collect()
}

/// Residuals `y_hat(x_m) - y_m` in dataset order.
pub fn residuals<T: Real>(net: &Network<T>, dataset: &Dataset<T>) -> Result<Vec<T>> {
    dataset
        .measurements()
        .iter()
        .map(|m| Ok(net.evaluate(&m.x)? - m.y))
        .collect()
}

/// Weighted quadratic cost `V = 1/2 sum_m alpha_m^2 (y_hat - y)^2`, summed in
/// dataset order.
pub fn cost<T: Real>(net: &Network<T>, dataset: &Dataset<T>, alphas: &[T]) -> Result<T> {
    let mut v = T::zero();
    for (m, &a) in dataset.measurements().iter().zip(alphas.iter()) {
        let r = net.evaluate(&m.x)? - m.y;
        v += a * a * r * r;
    }
    Ok(v * lit::<T>(0.5))
}

/// Unweighted sum of squared residuals.
pub fn sse<T: Real>(net: &Network<T>, dataset: &Dataset<T>) -> Result<T> {
    let mut s = T::zero();
    for m in dataset.measurements() {
        let r = net.evaluate(&m.x)? - m.y;
        s += r * r;
    }
    Ok(s)
}

/// Weighted cost with the neuron-count factor removed from the policy
/// weights (`alpha_m = 1 / (sqrt(M) |x_m|)`, overrides untouched), so that
/// topology auditions can compare networks with different neuron counts
/// under the same objective the trainer actually descends.
pub fn audition_cost<T: Real>(net: &Network<T>, dataset: &Dataset<T>) -> Result<T> {
    let m_count = lit::<T>(dataset.len() as f64);
    let scale = T::one() / m_count.sqrt();
    let mut v = T::zero();
    for m in dataset.measurements() {
        let a = m.alpha.unwrap_or_else(|| scale / m.x.norm());
        let r = net.evaluate(&m.x)? - m.y;
        v += a * a * r * r;
    }
    Ok(v * lit::<T>(0.5))
}

/// Stacked gradient of the cost: block `(j, k*)` accumulates
/// `x_m * alpha_m^2 * residual_m` over the measurements activating it.
pub fn gradient<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    patterns: &[ActivationPattern],
    alphas: &[T],
    layout: &StackedLayout,
) -> Result<Vec<T>> {
    let resid = residuals(net, dataset)?;
    let mut g = vec![T::zero(); layout.total()];
    for (m, meas) in dataset.measurements().iter().enumerate() {
        let w = alphas[m] * alphas[m] * resid[m];
        if w == T::zero() {
            continue;
        }
        let x = meas.x.values();
        for j in 0..net.neuron_count() {
            let k = patterns[m].0[j];
            let range = layout.block(j, k);
            for (i, xi) in x.iter().enumerate() {
                g[range.start + i] = g[range.start + i] + *xi * w;
            }
        }
    }
    Ok(g)
}

// ---------------------------------------------------------------------------
// Boundary-transition handling
// ---------------------------------------------------------------------------

/// Basic-neuron outputs per neuron: entry `[m * K_j + k]`.
fn basic_outputs<T: Real>(net: &Network<T>, dataset: &Dataset<T>) -> Vec<Vec<T>> {
    net.neurons()
        .iter()
        .map(|n| {
            let mut z = Vec::with_capacity(dataset.len() * n.basic_count());
            for m in dataset.measurements() {
                for b in &n.basics {
                    z.push(b.output(&m.x));
                }
            }
            z
        })
        .collect()
}

/// Resolves activation patterns at edge ties per the boundary-transition
/// cases: a candidate that steps strictly off the edge is preferred (largest
/// post-step separation margin, then lowest index); when every candidate
/// steps back toward the edge the lowest index is kept and the constraint
/// machinery holds the iterate on the edge. A pending split hint overrides
/// the choice once for the duplicated pair it names.
pub fn resolve_patterns<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    alphas: &[T],
    eps_active: T,
    hint: Option<&SplitHint>,
) -> Result<Vec<ActivationPattern>> {
    let m_count = dataset.len();
    let mut patterns: Vec<ActivationPattern> = dataset
        .measurements()
        .iter()
        .map(|m| net.activation_pattern(&m.x))
        .collect::<Result<_>>()?;
    let resid = residuals(net, dataset)?;
    let z = basic_outputs(net, dataset);

    for (j, neuron) in net.neurons().iter().enumerate() {
        let k_count = neuron.basic_count();
        if k_count < 2 {
            continue;
        }
        let s = neuron.kind.constraint_sign::<T>();
        let zj = &z[j];
        for m in 0..m_count {
            let k_star = patterns[m].0[j];
            let base = zj[m * k_count + k_star];
            let ties: Vec<usize> = (0..k_count)
                .filter(|&k| (zj[m * k_count + k] - base).abs() <= eps_active)
                .collect();
            if ties.len() < 2 {
                continue;
            }
            if let Some(h) = hint {
                if h.neuron == j && ties.contains(&h.original) && ties.contains(&h.copy) {
                    patterns[m].0[j] = if h.mask[m] { h.copy } else { h.original };
                    continue;
                }
            }
            // candidate gradients only touch neuron j's blocks
            let mut chosen = None;
            let mut best_margin = T::zero();
            for &c in &ties {
                // gradient of neuron j with measurement m assigned to c
                let mut gj = vec![T::zero(); k_count * net.augmented_dim()];
                for (mm, meas) in dataset.measurements().iter().enumerate() {
                    let k = if mm == m { c } else { patterns[mm].0[j] };
                    let w = alphas[mm] * alphas[mm] * resid[mm];
                    let x = meas.x.values();
                    let off = k * net.augmented_dim();
                    for (i, xi) in x.iter().enumerate() {
                        gj[off + i] = gj[off + i] + *xi * w;
                    }
                }
                // post-step outputs of the tied basics at x_m
                let x = dataset.measurements()[m].x.values();
                let znew = |k: usize| -> T {
                    let off = k * net.augmented_dim();
                    zj[m * k_count + k] - dot(x, &gj[off..off + net.augmented_dim()])
                };
                let zc = znew(c);
                let mut margin = T::infinity();
                for &k in &ties {
                    if k != c {
                        margin = margin.min(-s * (zc - znew(k)));
                    }
                }
                if margin > eps_active && margin > best_margin * (T::one() + lit::<T>(1e-12)) {
                    chosen = Some(c);
                    best_margin = margin;
                }
            }
            patterns[m].0[j] = chosen.unwrap_or_else(|| *ties.iter().min().unwrap());
        }
    }
    Ok(patterns)
}

// ---------------------------------------------------------------------------
// Certified step gain
// ---------------------------------------------------------------------------

const CHEB_CYCLE: usize = 16;
const AUTO_THETA: f64 = 0.98;
/// Full eigen solves for the gain interval are only done up to this many
/// measurements; larger problems use a power-iteration bound.
const FULL_SPECTRUM_LIMIT: usize = 96;

fn pattern_signature(patterns: &[ActivationPattern]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for p in patterns {
        for &k in &p.0 {
            h ^= k as u64 + 1;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0xff;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Measurement-space Gram matrix `C_nm = alpha_n alpha_m sum_j
/// [k*_j(n) == k*_j(m)] x_n^T x_m` for the base step weights.
pub fn measurement_gram<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    patterns: &[ActivationPattern],
    alphas: &[T],
) -> DenseMatrix<T> {
    let m_count = dataset.len();
    let mut c = DenseMatrix::zeros(m_count, m_count);
    for n in 0..m_count {
        for m in n..m_count {
            let mut agree = 0usize;
            for j in 0..net.neuron_count() {
                if patterns[n].0[j] == patterns[m].0[j] {
                    agree += 1;
                }
            }
            if agree > 0 {
                let xx = dot(
                    dataset.measurements()[n].x.values(),
                    dataset.measurements()[m].x.values(),
                );
                let v = alphas[n] * alphas[m] * lit::<T>(agree as f64) * xx;
                c[(n, m)] = v;
                c[(m, n)] = v;
            }
        }
    }
    c
}

/// Certified eigenvalue interval (smallest nonzero, largest) of the
/// measurement Gram. For large measurement counts only the upper end is
/// computed (power iteration) and the lower end is reported as zero.
fn gram_interval<T: Real>(c: &DenseMatrix<T>) -> (T, T) {
    let m = c.rows();
    if m <= FULL_SPECTRUM_LIMIT {
        let sv = singular_values(c); // C is PSD, so these are its eigenvalues
        let mu_max = sv.first().copied().unwrap_or_else(T::zero);
        let floor = lit::<T>(1e-8) * mu_max;
        let mu_min = sv
            .iter()
            .rev()
            .find(|&&v| v > floor)
            .copied()
            .unwrap_or(mu_max);
        (mu_min, mu_max)
    } else {
        // power iteration for the top eigenvalue
        let mut v = vec![T::one(); m];
        let mut norm = lit::<T>((m as f64).sqrt());
        for x in &mut v {
            *x = *x / norm;
        }
        let mut mu = T::zero();
        for _ in 0..60 {
            let mut w = vec![T::zero(); m];
            for i in 0..m {
                let mut acc = T::zero();
                for k in 0..m {
                    acc += c[(i, k)] * v[k];
                }
                w[i] = acc;
            }
            norm = dot(&w, &w).sqrt();
            if norm == T::zero() {
                break;
            }
            for x in &mut w {
                *x = *x / norm;
            }
            mu = norm;
            v = w;
        }
        (T::zero(), mu)
    }
}

/// Lebedev–Finogenov (bit-reversal) ordering keeps intermediate Chebyshev
/// products from blowing up.
fn bit_reversed(n: usize) -> Vec<usize> {
    let bits = n.trailing_zeros();
    (0..n)
        .map(|i| {
            let mut r = 0usize;
            for b in 0..bits {
                if i & (1 << b) != 0 {
                    r |= 1 << (bits - 1 - b);
                }
            }
            r
        })
        .collect()
}

fn chebyshev_gains<T: Real>(mu_min: T, mu_max: T) -> Vec<T> {
    let n = CHEB_CYCLE;
    bit_reversed(n)
        .into_iter()
        .map(|i| {
            let angle = std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n as f64);
            let node = (mu_max + mu_min) * lit::<T>(0.5)
                + (mu_max - mu_min) * lit::<T>(0.5) * lit::<T>(angle.cos());
            (T::one() / node).sqrt()
        })
        .collect()
}

fn step_scale<T: Real>(
    state: &mut TrainState<T>,
    dataset: &Dataset<T>,
    config: &TrainerConfig<T>,
    alphas_base: &[T],
    patterns: &[ActivationPattern],
) -> T {
    match config.step_mode {
        StepMode::Fixed => config.alpha_scale,
        StepMode::Auto { accelerate } => {
            let sig = pattern_signature(patterns);
            let sched = &mut state.scheduler;
            if sched.interval.is_none() || sched.interval_sig != sig {
                let c = measurement_gram(&state.net, dataset, patterns, alphas_base);
                sched.interval = Some(gram_interval(&c));
                sched.interval_sig = sig;
                sched.cheb.clear();
                sched.cheb_pos = 0;
            }
            let (mu_min, mu_max) = sched.interval.expect("interval cached above");
            if mu_max <= T::zero() {
                return config.alpha_scale;
            }
            if accelerate && sched.growth_done {
                if sched.cheb.is_empty() || sched.cheb_pos >= sched.cheb.len() {
                    sched.cheb = chebyshev_gains(mu_min.max(lit(1e-12)), mu_max);
                    sched.cheb_pos = 0;
                }
                let s = sched.cheb[sched.cheb_pos];
                sched.cheb_pos += 1;
                s
            } else {
                (lit::<T>(2.0 * AUTO_THETA) / (mu_max + mu_min)).sqrt()
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The constrained step and the training loop
// ---------------------------------------------------------------------------

/// One iteration of the constrained learning law. Returns the step
/// diagnostics; on LP infeasibility the gradient step is halved up to
/// `MAX_HALVINGS` times before a constraint conflict is reported.
pub fn constrained_step<T: Real>(
    state: &mut TrainState<T>,
    dataset: &Dataset<T>,
    config: &TrainerConfig<T>,
) -> Result<StepReport<T>> {
    let alphas_base = resolve_alphas(&state.net, dataset);
    let base_patterns: Vec<ActivationPattern> = dataset
        .measurements()
        .iter()
        .map(|m| state.net.activation_pattern(&m.x))
        .collect::<Result<_>>()?;
    let scale = step_scale(state, dataset, config, &alphas_base, &base_patterns);
    let alphas: Vec<T> = alphas_base.iter().map(|&a| a * scale).collect();

    let hint = state.pending_hint.take();
    let patterns = resolve_patterns(
        &state.net,
        dataset,
        &alphas,
        config.eps_active,
        hint.as_ref(),
    )?;

    let layout = StackedLayout::of(&state.net);
    let grad = gradient(&state.net, dataset, &patterns, &alphas, &layout)?;
    let grad_inf = grad.iter().fold(T::zero(), |acc, g| acc.max(g.abs()));
    let constraints = build_edge_constraints(&state.net, dataset, &patterns);
    let w0 = stack_weights(&state.net);

    let mut eta = T::one();
    for _halving in 0..=constraints::MAX_HALVINGS {
        let f: Vec<T> = w0
            .iter()
            .zip(grad.iter())
            .map(|(&w, &g)| w - eta * g)
            .collect();
        match constrain_to_feasible(&f, &constraints, &layout, dataset, config.eps_feasible) {
            SolveOutcome::Infeasible => {
                eta = eta * lit::<T>(0.5);
            }
            SolveOutcome::Solved(sol) => {
                let w_new =
                    constraints::apply_multipliers(&f, &sol, &constraints, &layout, dataset);
                let max_violation = constraints
                    .iter()
                    .map(|c| c.value(&w_new, &layout, dataset))
                    .fold(T::neg_infinity(), |a, b| a.max(b))
                    .max(T::zero());
                let active = active_set(&w_new, &constraints, &layout, dataset, config.eps_active);
                let max_lambda = sol
                    .lambdas
                    .iter()
                    .map(|&(_, l)| l)
                    .fold(T::neg_infinity(), |a, b| a.max(b));
                let mut comp_violations = 0;
                for &(idx, lambda) in &sol.lambdas {
                    if lambda < -config.eps_feasible {
                        let v = constraints[idx].value(&w_new, &layout, dataset);
                        if v.abs() > config.eps_feasible {
                            comp_violations += 1;
                        }
                    }
                }
                constraints::set_stacked_weights(&mut state.net, &w_new);
                state.iter += 1;
                if state.active_history.len() == 8 {
                    state.active_history.pop_front();
                }
                state.active_history.push_back(active.clone());
                return Ok(StepReport {
                    eta,
                    scale,
                    grad_inf_norm: grad_inf,
                    multipliers: sol.lambdas,
                    active_set: active,
                    constraint_count: constraints.len(),
                    max_violation_after: max_violation,
                    max_lambda: if max_lambda.is_finite() {
                        max_lambda
                    } else {
                        T::zero()
                    },
                    complementarity_violations: comp_violations,
                });
            }
        }
    }
    Err(Error::ConstraintConflict {
        halvings: constraints::MAX_HALVINGS,
    })
}

/// Context handed to topology hooks each iteration.
pub struct HookContext<'a, T: Real> {
    pub dataset: &'a Dataset<T>,
    pub config: &'a TrainerConfig<T>,
    pub iter: usize,
    pub cost: T,
    pub residuals: &'a [T],
    pub patterns: &'a [ActivationPattern],
    pub alphas_base: &'a [T],
}

/// What a hook invocation did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HookSignal {
    NotTriggered,
    /// A topology event fired but found nothing worth inserting.
    NoInsertionNeeded,
    /// The network was mutated.
    Mutated,
}

pub struct HookOutcome<T> {
    pub signal: HookSignal,
    pub events: Vec<TopologyEvent>,
    pub split_hint: Option<SplitHint>,
    _marker: std::marker::PhantomData<T>,
}

impl<T> HookOutcome<T> {
    pub fn new(signal: HookSignal, events: Vec<TopologyEvent>, split_hint: Option<SplitHint>) -> Self {
        Self {
            signal,
            events,
            split_hint,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn not_triggered() -> Self {
        Self::new(HookSignal::NotTriggered, Vec::new(), None)
    }
}

/// Topology adaptation interface invoked by `train`.
pub trait TrainHooks<T: Real> {
    fn on_iteration(&mut self, _net: &mut Network<T>, _ctx: &HookContext<T>) -> HookOutcome<T> {
        HookOutcome::not_triggered()
    }

    fn on_finish(&mut self, _net: &mut Network<T>, _ctx: &HookContext<T>) -> Vec<TopologyEvent> {
        Vec::new()
    }
}

/// No-op hooks.
pub struct NoHooks;

impl<T: Real> TrainHooks<T> for NoHooks {}

/// Runs constrained steps until the cost or gradient tolerance is met or
/// `max_iters` steps were taken. Hooks run before each step and may mutate
/// the topology; the final report aggregates the multiplier audits.
pub fn train<T: Real, H: TrainHooks<T>>(
    state: &mut TrainState<T>,
    dataset: &Dataset<T>,
    config: &TrainerConfig<T>,
    hooks: &mut H,
) -> Result<TrainReport<T>> {
    // At a zero-gradient equilibrium with V above tolerance the topology
    // hooks still need plateau/period events to fire, so the gradient stop
    // is deferred until the hooks report nothing left to insert (or a grace
    // period passes, for hook-less runs).
    const GRAD_STOP_GRACE: usize = 256;

    let start_iter = state.iter;
    let mut events: Vec<(usize, TopologyEvent)> = Vec::new();
    let mut max_violation = T::zero();
    let mut max_lambda = T::neg_infinity();
    let mut comp_violations = 0usize;
    let mut last_active = 0usize;
    let mut grad_quiet = 0usize;
    let mut hooks_exhausted = false;

    let stop = loop {
        let alphas_base = resolve_alphas(&state.net, dataset);
        let v = cost(&state.net, dataset, &alphas_base)?;
        state.cost_trace.push(TraceRow {
            iter: state.iter,
            cost: v,
            basic_neurons: state.net.basic_count(),
            active_constraints: last_active,
        });
        if v <= config.cost_tol {
            break StopReason::CostTolerance;
        }
        if state.iter - start_iter >= config.max_iters {
            break StopReason::MaxIterations;
        }

        let resid = residuals(&state.net, dataset)?;
        let patterns: Vec<ActivationPattern> = dataset
            .measurements()
            .iter()
            .map(|m| state.net.activation_pattern(&m.x))
            .collect::<Result<_>>()?;
        let ctx = HookContext {
            dataset,
            config,
            iter: state.iter,
            cost: v,
            residuals: &resid,
            patterns: &patterns,
            alphas_base: &alphas_base,
        };
        let outcome = hooks.on_iteration(&mut state.net, &ctx);
        match outcome.signal {
            HookSignal::Mutated => {
                state.invalidate_schedule();
                state.scheduler.growth_done = false;
                state.pending_hint = outcome.split_hint;
                hooks_exhausted = false;
                for e in outcome.events {
                    events.push((state.iter, e));
                }
            }
            HookSignal::NoInsertionNeeded => {
                state.scheduler.growth_done = true;
                hooks_exhausted = true;
                for e in outcome.events {
                    events.push((state.iter, e));
                }
            }
            HookSignal::NotTriggered => {}
        }

        let step = constrained_step(state, dataset, config)?;
        last_active = step.active_set.0.len();
        max_violation = max_violation.max(step.max_violation_after);
        max_lambda = max_lambda.max(step.max_lambda);
        comp_violations += step.complementarity_violations;
        if step.grad_inf_norm <= config.grad_tol {
            grad_quiet += 1;
            if hooks_exhausted || grad_quiet >= GRAD_STOP_GRACE {
                break StopReason::GradientTolerance;
            }
        } else {
            grad_quiet = 0;
        }
    };

    // final cleanup hook (e.g. pruning now-inactive structure)
    {
        let alphas_base = resolve_alphas(&state.net, dataset);
        let v = cost(&state.net, dataset, &alphas_base)?;
        let resid = residuals(&state.net, dataset)?;
        let patterns: Vec<ActivationPattern> = dataset
            .measurements()
            .iter()
            .map(|m| state.net.activation_pattern(&m.x))
            .collect::<Result<_>>()?;
        let ctx = HookContext {
            dataset,
            config,
            iter: state.iter,
            cost: v,
            residuals: &resid,
            patterns: &patterns,
            alphas_base: &alphas_base,
        };
        for e in hooks.on_finish(&mut state.net, &ctx) {
            events.push((state.iter, e));
        }
    }

    let alphas_base = resolve_alphas(&state.net, dataset);
    let final_cost = cost(&state.net, dataset, &alphas_base)?;
    Ok(TrainReport {
        stop,
        iterations: state.iter - start_iter,
        final_cost,
        events,
        max_violation,
        max_lambda: if max_lambda.is_finite() {
            max_lambda
        } else {
            T::zero()
        },
        complementarity_violations: comp_violations,
    })
}

/// Runs `steps` constrained steps on a network without hooks; the optional
/// split hint applies to the first step. Used by topology auditions.
pub fn run_steps<T: Real>(
    net: &mut Network<T>,
    dataset: &Dataset<T>,
    config: &TrainerConfig<T>,
    steps: usize,
    hint: Option<SplitHint>,
) -> Result<()> {
    let mut state = TrainState::new(net.clone());
    state.pending_hint = hint;
    // auditions probe the settled regime, so treat growth as done
    state.scheduler.growth_done = true;
    for _ in 0..steps {
        constrained_step(&mut state, dataset, config)?;
    }
    *net = state.net;
    Ok(())
}

/// Per-constraint post-step feasibility audit for an arbitrary network
/// state; used by tests and the certification command.
pub fn max_constraint_violation<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    eps_active: T,
) -> Result<T> {
    let patterns = resolve_patterns(
        net,
        dataset,
        &resolve_alphas(net, dataset),
        eps_active,
        None,
    )?;
    let constraints = build_edge_constraints(net, dataset, &patterns);
    let layout = StackedLayout::of(net);
    let w = stack_weights(net);
    Ok(constraints
        .iter()
        .map(|c: &ConstraintSpec<T>| c.value(&w, &layout, dataset))
        .fold(T::zero(), |a, b| a.max(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Measurement;
    use crate::model::{AugmentedInput, BasicNeuron, Neuron, NeuronKind};

    fn one_point(x: &[f64], y: f64, alpha: Option<f64>) -> Dataset<f64> {
        Dataset::new(vec![Measurement::new(
            AugmentedInput::from_raw(x).unwrap(),
            y,
            alpha,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn cost_examples() {
        // perfect fit -> 0
        let net = Network::new(
            1,
            vec![Neuron::new(NeuronKind::Min, vec![BasicNeuron::new(vec![3.0, 0.0])])],
        )
        .unwrap();
        let ds = one_point(&[2.0], 3.0, Some(1.0));
        let alphas = resolve_alphas(&net, &ds);
        assert_eq!(cost(&net, &ds, &alphas).unwrap(), 0.0);

        // one measurement, alpha = 1, residual 2 -> V = 2
        let ds2 = one_point(&[2.0], 1.0, Some(1.0));
        let alphas2 = resolve_alphas(&net, &ds2);
        assert_eq!(cost(&net, &ds2, &alphas2).unwrap(), 2.0);

        // alpha = 0 -> V = 0 regardless of residuals
        let ds3 = one_point(&[2.0], -7.0, Some(0.0));
        let alphas3 = resolve_alphas(&net, &ds3);
        assert_eq!(cost(&net, &ds3, &alphas3).unwrap(), 0.0);
    }

    #[test]
    fn gradient_hand_example() {
        // one Min neuron K=1, x=(1,2), w=(0,0), y=3, alpha^2=0.1:
        // residual -3, gradient block = (-0.3, -0.6)
        let net = Network::new(
            1,
            vec![Neuron::new(NeuronKind::Min, vec![BasicNeuron::new(vec![0.0, 0.0])])],
        )
        .unwrap();
        let ds = one_point(&[2.0], 3.0, Some(0.1f64.sqrt()));
        let layout = StackedLayout::of(&net);
        let alphas = resolve_alphas(&net, &ds);
        let patterns = vec![net.activation_pattern(&ds.measurements()[0].x).unwrap()];
        let g = gradient(&net, &ds, &patterns, &alphas, &layout).unwrap();
        assert!((g[0] + 0.3).abs() < 1e-15);
        assert!((g[1] + 0.6).abs() < 1e-15);
    }

    #[test]
    fn zero_residual_zero_gradient_and_fixed_point() {
        let net = Network::new(
            1,
            vec![Neuron::new(NeuronKind::Min, vec![BasicNeuron::new(vec![1.0, 2.0])])],
        )
        .unwrap();
        let ds = one_point(&[0.5], 2.0, Some(1.0));
        let mut state = TrainState::new(net);
        let config = TrainerConfig::default();
        let before = state.net.clone();
        let report = constrained_step(&mut state, &ds, &config).unwrap();
        assert_eq!(report.grad_inf_norm, 0.0);
        assert!(report.active_set.0.is_empty());
        assert_eq!(state.net, before);
    }

    #[test]
    fn fig2_left_convex_side_activates_constraint() {
        // Min pair w1=(0,1), w2=(0,-1), measurement x'=0, y=1, alpha^2=0.1:
        // unconstrained step gives z1=0.1 > z2=0, the edge constraint
        // activates with lambda=-0.05 and both basics land on the edge 0.05.
        let net = Network::new(
            1,
            vec![Neuron::new(
                NeuronKind::Min,
                vec![
                    BasicNeuron::new(vec![0.0, 1.0]),
                    BasicNeuron::new(vec![0.0, -1.0]),
                ],
            )],
        )
        .unwrap();
        let ds = one_point(&[0.0], 1.0, Some(0.1f64.sqrt()));
        let mut state = TrainState::new(net);
        let config = TrainerConfig::default();
        let report = constrained_step(&mut state, &ds, &config).unwrap();
        let support = report
            .multipliers
            .iter()
            .filter(|(_, l)| *l < -1e-12)
            .collect::<Vec<_>>();
        assert_eq!(support.len(), 1);
        assert!((support[0].1 + 0.05).abs() < 1e-12);
        let w1 = &state.net.neurons()[0].basics[0].weights;
        let w2 = &state.net.neurons()[0].basics[1].weights;
        assert!((w1[0] - 0.05).abs() < 1e-12 && (w1[1] - 1.0).abs() < 1e-12);
        assert!((w2[0] - 0.05).abs() < 1e-12 && (w2[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn fig2_right_concave_side_runs_unconstrained() {
        // same measurement against a Max pair: no constraint activates and
        // the step equals the unconstrained gradient step
        let net = Network::new(
            1,
            vec![Neuron::new(
                NeuronKind::Max,
                vec![
                    BasicNeuron::new(vec![0.0, 1.0]),
                    BasicNeuron::new(vec![0.0, -1.0]),
                ],
            )],
        )
        .unwrap();
        let ds = one_point(&[0.0], 1.0, Some(0.1f64.sqrt()));
        let mut state = TrainState::new(net);
        let config = TrainerConfig::default();
        let report = constrained_step(&mut state, &ds, &config).unwrap();
        assert!(report.multipliers.iter().all(|(_, l)| *l == 0.0));
        let w1 = &state.net.neurons()[0].basics[0].weights;
        assert!((w1[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn one_step_convergence_with_orthogonal_measurements() {
        // M=2 orthogonal augmented inputs (1,1), (1,-1), alpha = 1/|x|:
        // the residual vanishes after exactly one step
        let net = Network::new(
            1,
            vec![Neuron::new(NeuronKind::Min, vec![BasicNeuron::new(vec![0.0, 0.0])])],
        )
        .unwrap();
        let a = 1.0 / 2.0f64.sqrt();
        let ds = Dataset::new(vec![
            Measurement::new(AugmentedInput::from_raw(&[1.0]).unwrap(), 2.0, Some(a)).unwrap(),
            Measurement::new(AugmentedInput::from_raw(&[-1.0]).unwrap(), -1.0, Some(a)).unwrap(),
        ])
        .unwrap();
        let mut state = TrainState::new(net);
        let config = TrainerConfig::default();
        constrained_step(&mut state, &ds, &config).unwrap();
        let alphas = resolve_alphas(&state.net, &ds);
        assert!(cost(&state.net, &ds, &alphas).unwrap() < 1e-24);
    }

    #[test]
    fn max_iters_zero_returns_initial_state() {
        let net = Network::new(
            1,
            vec![Neuron::new(NeuronKind::Min, vec![BasicNeuron::new(vec![0.0, 0.0])])],
        )
        .unwrap();
        let ds = one_point(&[1.0], 5.0, None);
        let mut state = TrainState::new(net.clone());
        let config = TrainerConfig {
            max_iters: 0,
            ..TrainerConfig::default()
        };
        let report = train(&mut state, &ds, &config, &mut NoHooks).unwrap();
        assert_eq!(report.stop, StopReason::MaxIterations);
        assert_eq!(report.iterations, 0);
        assert_eq!(state.net, net);
    }

    #[test]
    fn pattern_stability_under_constraints() {
        // after a constrained step, each measurement's active index is either
        // unchanged or the measurement sits on an edge
        let net = Network::new(
            1,
            vec![Neuron::new(
                NeuronKind::Min,
                vec![
                    BasicNeuron::new(vec![0.5, 1.0]),
                    BasicNeuron::new(vec![0.0, -0.5]),
                ],
            )],
        )
        .unwrap();
        let ds = Dataset::new(
            [-1.0, -0.4, 0.2, 0.9]
                .iter()
                .map(|&x| {
                    Measurement::new(
                        AugmentedInput::from_raw(&[x]).unwrap(),
                        (x as f64).abs() + 0.3,
                        None,
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap();
        let config = TrainerConfig::default();
        let mut state = TrainState::new(net);
        let before: Vec<usize> = ds
            .measurements()
            .iter()
            .map(|m| state.net.activation_pattern(&m.x).unwrap().0[0])
            .collect();
        constrained_step(&mut state, &ds, &config).unwrap();
        for (m, meas) in ds.measurements().iter().enumerate() {
            let after = state.net.activation_pattern(&meas.x).unwrap().0[0];
            if after != before[m] {
                let z: Vec<f64> = state.net.neurons()[0]
                    .basics
                    .iter()
                    .map(|b| b.output(&meas.x))
                    .collect();
                let gap = (z[0] - z[1]).abs();
                assert!(gap <= 1e-9, "pattern changed off-edge: gap {gap}");
            }
        }
    }
}
