//! Network structure adaptation: pruning, spawning, duplication, and the
//! plateau-driven controller that schedules them during training.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::model::{BasicNeuron, Network, Neuron, NeuronKind};
use crate::numerics::{dot, norm};
use crate::scalar::{lit, Real};
use crate::trainer::{
    self, HookContext, HookOutcome, HookSignal, SplitHint, TrainHooks, TrainerConfig,
};

pub const PRUNE_VALUE_TOL: f64 = 1e-8;
/// Cosine threshold for duplicate basic neurons.
pub const DUPLICATE_COS_TOL: f64 = 1e-8;

/// Why a structure element was removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneReason {
    NearZeroOutput,
    NeverActive,
    DuplicateWeights,
}

impl PruneReason {
    pub fn as_str(self) -> &'static str {
        match self {
            PruneReason::NearZeroOutput => "near-zero-output",
            PruneReason::NeverActive => "never-active",
            PruneReason::DuplicateWeights => "duplicate-weights",
        }
    }
}

/// One topology mutation, recorded against the iteration it happened at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopologyEvent {
    Spawn {
        neuron: usize,
        kind: NeuronKind,
    },
    Duplicate {
        neuron: usize,
        source: usize,
        copy: usize,
    },
    PruneBasic {
        neuron: usize,
        basic: usize,
        reason: PruneReason,
    },
    PruneNeuron {
        neuron: usize,
        reason: PruneReason,
    },
}

/// Which basic neurons were active at least once since the last reset.
#[derive(Debug, Clone, Default)]
pub struct ActivityStats {
    seen: Vec<Vec<bool>>,
}

impl ActivityStats {
    pub fn reset<T: Real>(&mut self, net: &Network<T>) {
        self.seen = net
            .neurons()
            .iter()
            .map(|n| vec![false; n.basic_count()])
            .collect();
    }

    pub fn record(&mut self, patterns: &[crate::model::ActivationPattern]) {
        for p in patterns {
            for (j, &k) in p.0.iter().enumerate() {
                if let Some(row) = self.seen.get_mut(j) {
                    if let Some(flag) = row.get_mut(k) {
                        *flag = true;
                    }
                }
            }
        }
    }

    fn matches<T: Real>(&self, net: &Network<T>) -> bool {
        self.seen.len() == net.neuron_count()
            && self
                .seen
                .iter()
                .zip(net.neurons())
                .all(|(row, n)| row.len() == n.basic_count())
    }
}

// ---------------------------------------------------------------------------
// The three structural operations
// ---------------------------------------------------------------------------

/// Appends a neuron of `kind` with a single all-zero basic neuron, keeping
/// Min neurons listed before Max neurons. The network output is unchanged at
/// the spawn instant. Returns the new neuron's index.
pub fn spawn_neuron<T: Real>(net: &mut Network<T>, kind: NeuronKind) -> usize {
    let dim = net.augmented_dim();
    let neuron = Neuron::new(kind, vec![BasicNeuron::zeros(dim)]);
    let idx = match kind {
        NeuronKind::Max => net.neuron_count(),
        NeuronKind::Min => net
            .neurons()
            .iter()
            .position(|n| n.kind == NeuronKind::Max)
            .unwrap_or(net.neuron_count()),
    };
    net.neurons_mut().insert(idx, neuron);
    idx
}

/// Appends an exact copy of basic `k` to neuron `j`; the min/max of the
/// multiset is unchanged everywhere. Returns the copy's index.
pub fn duplicate_basic<T: Real>(net: &mut Network<T>, neuron: usize, basic: usize) -> usize {
    let b = net.neurons()[neuron].basics[basic].clone();
    net.neurons_mut()[neuron].basics.push(b);
    net.neurons()[neuron].basic_count() - 1
}

/// The basic neuron to duplicate: the one active (in the lowest-index
/// neuron) at the measurement with the largest weighted squared residual.
/// Returns `(neuron, basic, measurement)`, or `None` when every weighted
/// squared residual is below `floor`.
pub fn select_duplication_target<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    residuals: &[T],
    alphas: &[T],
    floor: T,
) -> Option<(usize, usize, usize)> {
    let mut m_star = None;
    let mut worst = floor;
    for (m, &r) in residuals.iter().enumerate() {
        let wr = alphas[m] * alphas[m] * r * r;
        if wr > worst {
            worst = wr;
            m_star = Some(m);
        }
    }
    let m_star = m_star?;
    let x = &dataset.measurements()[m_star].x;
    let k = net.neurons()[0].active_index(x);
    Some((0, k, m_star))
}

/// Removes near-zero neurons, never-active basics, and duplicate basics.
/// Each removal is verified to change dataset predictions by at most
/// `prune_value_tol` per measurement, otherwise it is skipped. The last
/// basic neuron of the last neuron is never removed.
pub fn prune<T: Real>(
    net: &mut Network<T>,
    dataset: &Dataset<T>,
    stats: &ActivityStats,
    prune_value_tol: T,
) -> Result<Vec<TopologyEvent>> {
    let mut events = Vec::new();
    let stats_valid = stats.matches(net);

    let predictions = |net: &Network<T>| -> Result<Vec<T>> {
        dataset.measurements().iter().map(|m| net.evaluate(&m.x)).collect()
    };
    let mut current = predictions(net)?;

    // (a) whole neurons whose output stays near zero over the dataset
    let mut j = 0;
    while j < net.neuron_count() {
        if net.neuron_count() == 1 {
            break;
        }
        let max_out = dataset
            .measurements()
            .iter()
            .map(|m| net.neurons()[j].output(&m.x).abs())
            .fold(T::zero(), |a, b| a.max(b));
        if max_out <= prune_value_tol {
            let mut trial = net.clone();
            trial.neurons_mut().remove(j);
            let after = predictions(&trial)?;
            let ok = after
                .iter()
                .zip(current.iter())
                .all(|(a, b)| (*a - *b).abs() <= prune_value_tol);
            if ok {
                events.push(TopologyEvent::PruneNeuron {
                    neuron: j,
                    reason: PruneReason::NearZeroOutput,
                });
                *net = trial;
                current = after;
                continue;
            }
        }
        j += 1;
    }

    // (b) + (c): never-active and duplicate basic neurons
    let cos_tol = T::one() - lit::<T>(DUPLICATE_COS_TOL);
    let ratio_tol = lit::<T>(DUPLICATE_COS_TOL);
    for j in 0..net.neuron_count() {
        // recompute activity-now each pass so stale stats cannot remove a
        // basic that currently attains the extremum somewhere
        let mut k = net.neurons()[j].basic_count();
        while k > 1 {
            let mut removed = false;
            let active_now: Vec<bool> = {
                let mut flags = vec![false; net.neurons()[j].basic_count()];
                for m in dataset.measurements() {
                    flags[net.neurons()[j].active_index(&m.x)] = true;
                }
                flags
            };
            let kc = net.neurons()[j].basic_count();
            'scan: for cand in (0..kc).rev() {
                if net.neurons()[j].basic_count() == 1
                    || (net.neuron_count() == 1 && net.neurons()[j].basic_count() == 1)
                {
                    break;
                }
                let never_active = stats_valid
                    && !stats.seen[j].get(cand).copied().unwrap_or(true)
                    && !active_now[cand];
                let duplicate_of = (0..cand).find(|&other| {
                    let a = &net.neurons()[j].basics[other].weights;
                    let b = &net.neurons()[j].basics[cand].weights;
                    let na = norm(a);
                    let nb = norm(b);
                    if na == T::zero() && nb == T::zero() {
                        return true;
                    }
                    if na == T::zero() || nb == T::zero() {
                        return false;
                    }
                    let cos = dot(a, b) / (na * nb);
                    let ratio = (na / nb - T::one()).abs();
                    cos >= cos_tol && ratio <= ratio_tol
                });
                let reason = if duplicate_of.is_some() {
                    Some(PruneReason::DuplicateWeights)
                } else if never_active {
                    Some(PruneReason::NeverActive)
                } else {
                    None
                };
                if let Some(reason) = reason {
                    let mut trial = net.clone();
                    trial.neurons_mut()[j].basics.remove(cand);
                    let after = predictions(&trial)?;
                    let ok = after
                        .iter()
                        .zip(current.iter())
                        .all(|(a, b)| (*a - *b).abs() <= prune_value_tol);
                    if ok {
                        events.push(TopologyEvent::PruneBasic {
                            neuron: j,
                            basic: cand,
                            reason,
                        });
                        *net = trial;
                        current = after;
                        removed = true;
                        break 'scan;
                    }
                }
            }
            if !removed {
                break;
            }
            k = net.neurons()[j].basic_count();
        }
    }
    Ok(events)
}

// ---------------------------------------------------------------------------
// Insertion controller
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TopologyConfig<T> {
    /// Plateau detector: relative cost decrease below `plateau_tol` over
    /// `plateau_window` consecutive iterations.
    pub plateau_window: usize,
    pub plateau_tol: T,
    /// Fixed event period in iterations; 0 disables the periodic trigger.
    pub period: usize,
    /// Whether new neurons may be spawned for a kind that is absent.
    pub allow_spawn: bool,
    /// Look-ahead steps per insertion audition.
    pub audition_steps: usize,
    /// Required relative SSE improvement over the keep-training baseline.
    pub audition_margin: T,
    /// Insertions stop once every weighted squared residual is below this.
    pub insertion_floor: T,
    pub prune_value_tol: T,
    /// Run a final prune pass (current activity only) when training stops.
    pub final_cleanup: bool,
}

impl<T: Real> Default for TopologyConfig<T> {
    fn default() -> Self {
        Self {
            plateau_window: 25,
            plateau_tol: lit(1e-4),
            period: 100,
            allow_spawn: true,
            audition_steps: 30,
            audition_margin: lit(1e-3),
            insertion_floor: lit(1e-9),
            prune_value_tol: lit(PRUNE_VALUE_TOL),
            final_cleanup: true,
        }
    }
}

enum Candidate {
    Duplicate {
        neuron: usize,
        basic: usize,
        mask: Vec<bool>,
    },
    SpawnPair {
        kind: NeuronKind,
        mask: Vec<bool>,
    },
    SpawnSingle {
        kind: NeuronKind,
    },
}

/// Plateau/period-triggered controller that prunes and inserts structure.
/// Insertion candidates are auditioned on clones for a short horizon and the
/// winner is committed only when it beats continued training.
pub struct TopologyController<T> {
    pub cfg: TopologyConfig<T>,
    costs: Vec<T>,
    last_event: Option<usize>,
    start_iter: Option<usize>,
    stats: ActivityStats,
}

impl<T: Real> TopologyController<T> {
    pub fn new(cfg: TopologyConfig<T>) -> Self {
        Self {
            cfg,
            costs: Vec::new(),
            last_event: None,
            start_iter: None,
            stats: ActivityStats::default(),
        }
    }

    fn iters_since_event(&self, iter: usize) -> usize {
        match (self.last_event, self.start_iter) {
            (Some(e), _) => iter - e,
            (None, Some(s)) => iter - s,
            (None, None) => 0,
        }
    }

    fn plateau(&self, iter: usize) -> bool {
        let w = self.cfg.plateau_window;
        if self.iters_since_event(iter) < w || self.costs.len() <= w {
            return false;
        }
        let old = self.costs[self.costs.len() - 1 - w];
        let now = *self.costs.last().expect("non-empty");
        (old - now) < self.cfg.plateau_tol * old.max(lit(1e-300))
    }

    fn split_masks<T2: Real>(
        dataset: &Dataset<T2>,
        m_star: usize,
        region: &[usize],
    ) -> (Vec<bool>, Vec<bool>) {
        let dim = dataset.input_dim();
        let mut centroid = vec![T2::zero(); dim];
        for &m in region {
            for (c, v) in centroid.iter_mut().zip(dataset.measurements()[m].x.raw()) {
                *c += *v;
            }
        }
        let count = T2::from_usize(region.len().max(1)).expect("usize fits");
        for c in &mut centroid {
            *c = *c / count;
        }
        let star = dataset.measurements()[m_star].x.raw();
        let mut u: Vec<T2> = star
            .iter()
            .zip(centroid.iter())
            .map(|(s, c)| *s - *c)
            .collect();
        let un = norm(&u);
        if un <= lit(1e-12) {
            u = vec![T2::zero(); dim];
            u[0] = T2::one();
        } else {
            for v in &mut u {
                *v = *v / un;
            }
        }
        let mid: Vec<T2> = star
            .iter()
            .zip(centroid.iter())
            .map(|(s, c)| (*s + *c) * lit::<T2>(0.5))
            .collect();
        let side_a: Vec<bool> = dataset
            .measurements()
            .iter()
            .map(|m| {
                let h: T2 = m
                    .x
                    .raw()
                    .iter()
                    .zip(mid.iter())
                    .zip(u.iter())
                    .map(|((x, md), uu)| (*x - *md) * *uu)
                    .fold(T2::zero(), |a, b| a + b);
                h >= T2::zero()
            })
            .collect();
        let side_b = side_a.iter().map(|b| !b).collect();
        (side_a, side_b)
    }

    fn candidates(
        &self,
        net: &Network<T>,
        ctx: &HookContext<T>,
        m_star: usize,
    ) -> Vec<Candidate> {
        let mut out = Vec::new();
        for kind in [NeuronKind::Min, NeuronKind::Max] {
            let existing = net.neurons().iter().position(|n| n.kind == kind);
            match existing {
                Some(j) => {
                    let k = net.neurons()[j].active_index(&ctx.dataset.measurements()[m_star].x);
                    let region: Vec<usize> = ctx
                        .patterns
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| p.0[j] == k)
                        .map(|(m, _)| m)
                        .collect();
                    let (a, b) = Self::split_masks(ctx.dataset, m_star, &region);
                    out.push(Candidate::Duplicate {
                        neuron: j,
                        basic: k,
                        mask: a,
                    });
                    out.push(Candidate::Duplicate {
                        neuron: j,
                        basic: k,
                        mask: b,
                    });
                }
                None if self.cfg.allow_spawn => {
                    let all: Vec<usize> = (0..ctx.dataset.len()).collect();
                    let (a, b) = Self::split_masks(ctx.dataset, m_star, &all);
                    out.push(Candidate::SpawnPair { kind, mask: a });
                    out.push(Candidate::SpawnPair { kind, mask: b });
                    out.push(Candidate::SpawnSingle { kind });
                }
                None => {}
            }
        }
        out
    }

    /// Applies a candidate; returns the recorded events and the split hint
    /// for the next step.
    fn apply(
        net: &mut Network<T>,
        cand: &Candidate,
    ) -> (Vec<TopologyEvent>, Option<SplitHint>) {
        match cand {
            Candidate::Duplicate { neuron, basic, mask } => {
                let copy = duplicate_basic(net, *neuron, *basic);
                (
                    vec![TopologyEvent::Duplicate {
                        neuron: *neuron,
                        source: *basic,
                        copy,
                    }],
                    Some(SplitHint {
                        neuron: *neuron,
                        original: *basic,
                        copy,
                        mask: mask.clone(),
                    }),
                )
            }
            Candidate::SpawnPair { kind, mask } => {
                let j = spawn_neuron(net, *kind);
                let copy = duplicate_basic(net, j, 0);
                (
                    vec![
                        TopologyEvent::Spawn { neuron: j, kind: *kind },
                        TopologyEvent::Duplicate {
                            neuron: j,
                            source: 0,
                            copy,
                        },
                    ],
                    Some(SplitHint {
                        neuron: j,
                        original: 0,
                        copy,
                        mask: mask.clone(),
                    }),
                )
            }
            Candidate::SpawnSingle { kind } => {
                let j = spawn_neuron(net, *kind);
                (vec![TopologyEvent::Spawn { neuron: j, kind: *kind }], None)
            }
        }
    }

    fn audition(
        &self,
        net: &Network<T>,
        ctx: &HookContext<T>,
        cand: Option<&Candidate>,
    ) -> Result<T> {
        let mut trial = net.clone();
        let hint = cand.map(|c| Self::apply(&mut trial, c).1).unwrap_or(None);
        let cfg = TrainerConfig {
            max_iters: self.cfg.audition_steps,
            ..ctx.config.clone()
        };
        trainer::run_steps(&mut trial, ctx.dataset, &cfg, self.cfg.audition_steps, hint)?;
        trainer::audition_cost(&trial, ctx.dataset)
    }
}

impl<T: Real> TrainHooks<T> for TopologyController<T> {
    fn on_iteration(&mut self, net: &mut Network<T>, ctx: &HookContext<T>) -> HookOutcome<T> {
        if self.start_iter.is_none() {
            self.start_iter = Some(ctx.iter);
            self.stats.reset(net);
        }
        self.costs.push(ctx.cost);
        if !self.stats.matches(net) {
            self.stats.reset(net);
        }
        self.stats.record(ctx.patterns);

        let periodic = self.cfg.period > 0 && self.iters_since_event(ctx.iter) >= self.cfg.period;
        if !periodic && !self.plateau(ctx.iter) {
            return HookOutcome::not_triggered();
        }
        self.last_event = Some(ctx.iter);

        let mut events = match prune(net, ctx.dataset, &self.stats, self.cfg.prune_value_tol) {
            Ok(ev) => ev,
            Err(_) => Vec::new(),
        };
        self.stats.reset(net);
        let pruned = !events.is_empty();

        // anything left worth inserting?
        let target = select_duplication_target(
            net,
            ctx.dataset,
            ctx.residuals,
            ctx.alphas_base,
            self.cfg.insertion_floor,
        );
        let Some((_, _, m_star)) = target else {
            return HookOutcome::new(
                if pruned { HookSignal::Mutated } else { HookSignal::NoInsertionNeeded },
                events,
                None,
            );
        };

        let candidates = self.candidates(net, ctx, m_star);
        if candidates.is_empty() {
            return HookOutcome::new(
                if pruned { HookSignal::Mutated } else { HookSignal::NoInsertionNeeded },
                events,
                None,
            );
        }
        let baseline = match self.audition(net, ctx, None) {
            Ok(v) => v,
            Err(_) => {
                return HookOutcome::new(
                    if pruned { HookSignal::Mutated } else { HookSignal::NotTriggered },
                    events,
                    None,
                )
            }
        };
        let mut best: Option<(T, usize)> = None;
        for (i, cand) in candidates.iter().enumerate() {
            if let Ok(s) = self.audition(net, ctx, Some(cand)) {
                if best.map(|(bs, _)| s < bs).unwrap_or(true) {
                    best = Some((s, i));
                }
            }
        }
        if let Some((score, idx)) = best {
            if score < baseline * (T::one() - self.cfg.audition_margin) {
                let (mut ev, hint) = Self::apply(net, &candidates[idx]);
                events.append(&mut ev);
                self.stats.reset(net);
                return HookOutcome::new(HookSignal::Mutated, events, hint);
            }
        }
        HookOutcome::new(
            if pruned { HookSignal::Mutated } else { HookSignal::NoInsertionNeeded },
            events,
            None,
        )
    }

    fn on_finish(&mut self, net: &mut Network<T>, ctx: &HookContext<T>) -> Vec<TopologyEvent> {
        if !self.cfg.final_cleanup {
            return Vec::new();
        }
        // final pass judges activity at the converged weights only
        let mut stats = ActivityStats::default();
        stats.reset(net);
        stats.record(ctx.patterns);
        prune(net, ctx.dataset, &stats, self.cfg.prune_value_tol).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_polygon, Measurement};
    use crate::model::{ActivationPattern, AugmentedInput};

    fn probe_points(net: &Network<f64>, n: usize) -> Vec<AugmentedInput<f64>> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..net.input_dim())
                    .map(|_| rng.random_range(-2.0..2.0))
                    .collect();
                AugmentedInput::from_raw(&raw).unwrap()
            })
            .collect()
    }

    #[test]
    fn spawn_is_output_invariant_and_single_basic() {
        let mut net = crate::model::pyramid_minmax_network::<f64>();
        let probes = probe_points(&net, 100);
        let before: Vec<f64> = probes.iter().map(|x| net.evaluate(x).unwrap()).collect();
        let j = spawn_neuron(&mut net, NeuronKind::Min);
        assert_eq!(net.neurons()[j].basic_count(), 1);
        // min neurons stay listed before max neurons
        let first_max = net
            .neurons()
            .iter()
            .position(|n| n.kind == NeuronKind::Max)
            .unwrap();
        assert!(net.neurons()[..first_max]
            .iter()
            .all(|n| n.kind == NeuronKind::Min));
        for (x, b) in probes.iter().zip(before.iter()) {
            assert_eq!(net.evaluate(x).unwrap(), *b);
        }
    }

    #[test]
    fn duplicate_is_output_invariant_and_keeps_tie_rule() {
        let mut net = crate::model::pyramid_minmax_network::<f64>();
        let probes = probe_points(&net, 100);
        let before: Vec<f64> = probes.iter().map(|x| net.evaluate(x).unwrap()).collect();
        let k_before = net.neurons()[0].basic_count();
        let copy = duplicate_basic(&mut net, 0, 1);
        assert_eq!(net.neurons()[0].basic_count(), k_before + 1);
        assert_eq!(copy, k_before);
        for (x, b) in probes.iter().zip(before.iter()) {
            assert_eq!(net.evaluate(x).unwrap(), *b);
        }
        // the tie resolves to the original (lower index)
        for x in &probes {
            let k = net.neurons()[0].active_index(x);
            assert_ne!(k, copy, "tie must resolve to the lower index");
        }
    }

    #[test]
    fn prune_removes_zero_neuron_exactly() {
        let mut net = crate::model::pyramid_minmax_network::<f64>();
        spawn_neuron(&mut net, NeuronKind::Min); // all-zero neuron
        let ds = gen_polygon_like_2d();
        let before: Vec<f64> = ds
            .measurements()
            .iter()
            .map(|m| net.evaluate(&m.x).unwrap())
            .collect();
        let mut stats = ActivityStats::default();
        stats.reset(&net);
        // mark everything active so only the zero-output rule fires
        for (j, n) in net.neurons().iter().enumerate() {
            for k in 0..n.basic_count() {
                stats.seen[j][k] = true;
            }
        }
        let events = prune(&mut net, &ds, &stats, 1e-8).unwrap();
        assert!(events
            .iter()
            .any(|e| matches!(e, TopologyEvent::PruneNeuron { .. })));
        assert_eq!(net.neuron_count(), 2);
        for (m, b) in ds.measurements().iter().zip(before.iter()) {
            assert_eq!(net.evaluate(&m.x).unwrap(), *b);
        }
    }

    #[test]
    fn prune_removes_bit_identical_duplicate() {
        let mut net = crate::model::pyramid_minmax_network::<f64>();
        duplicate_basic(&mut net, 0, 2);
        let ds = gen_polygon_like_2d();
        let before: Vec<f64> = ds
            .measurements()
            .iter()
            .map(|m| net.evaluate(&m.x).unwrap())
            .collect();
        let mut stats = ActivityStats::default();
        stats.reset(&net);
        for (j, n) in net.neurons().iter().enumerate() {
            for k in 0..n.basic_count() {
                stats.seen[j][k] = true;
            }
        }
        let events = prune(&mut net, &ds, &stats, 1e-8).unwrap();
        assert!(events.iter().any(|e| matches!(
            e,
            TopologyEvent::PruneBasic {
                reason: PruneReason::DuplicateWeights,
                ..
            }
        )));
        assert_eq!(net.neurons()[0].basic_count(), 4);
        for (m, b) in ds.measurements().iter().zip(before.iter()) {
            assert_eq!(net.evaluate(&m.x).unwrap(), *b);
        }
    }

    #[test]
    fn prune_removes_never_active_basic() {
        // a basic neuron far above the min is never active
        let mut net = crate::model::pyramid_minmax_network::<f64>();
        net.neurons_mut()[0]
            .basics
            .push(BasicNeuron::new(vec![50.0, 0.0, 0.0]));
        let ds = gen_polygon_like_2d();
        let before: Vec<f64> = ds
            .measurements()
            .iter()
            .map(|m| net.evaluate(&m.x).unwrap())
            .collect();
        let mut stats = ActivityStats::default();
        stats.reset(&net);
        for m in ds.measurements() {
            let pattern = net.activation_pattern(&m.x).unwrap();
            stats.record(std::slice::from_ref(&pattern));
        }
        let events = prune(&mut net, &ds, &stats, 1e-8).unwrap();
        assert!(events.iter().any(|e| matches!(
            e,
            TopologyEvent::PruneBasic {
                reason: PruneReason::NeverActive,
                ..
            }
        )));
        for (m, b) in ds.measurements().iter().zip(before.iter()) {
            assert_eq!(net.evaluate(&m.x).unwrap(), *b);
        }
    }

    #[test]
    fn prune_never_removes_last_basic() {
        let mut net = Network::single_zero(1, NeuronKind::Min);
        let ds = gen_polygon();
        let mut stats = ActivityStats::default();
        stats.reset(&net);
        let events = prune(&mut net, &ds, &stats, 1e-8).unwrap();
        assert!(events.is_empty());
        assert_eq!(net.neuron_count(), 1);
        assert_eq!(net.neurons()[0].basic_count(), 1);
    }

    #[test]
    fn duplication_target_picks_worst_weighted_residual() {
        let net = Network::single_zero(1, NeuronKind::Min);
        let ds = gen_polygon::<f64>();
        let residuals = trainer::residuals(&net, &ds).unwrap();
        let alphas = trainer::resolve_alphas(&net, &ds);
        let (j, k, m) =
            select_duplication_target(&net, &ds, &residuals, &alphas, 1e-9).unwrap();
        assert_eq!((j, k), (0, 0));
        let wr: Vec<f64> = residuals
            .iter()
            .zip(alphas.iter())
            .map(|(r, a)| a * a * r * r)
            .collect();
        let expect = wr
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(m, expect);
    }

    #[test]
    fn duplication_target_none_when_residuals_vanish() {
        let net = Network::single_zero(1, NeuronKind::Min);
        let ds = Dataset::new(vec![Measurement::new(
            AugmentedInput::from_raw(&[1.0]).unwrap(),
            0.0,
            None,
        )
        .unwrap()])
        .unwrap();
        let residuals = vec![0.0];
        let alphas = trainer::resolve_alphas(&net, &ds);
        assert!(select_duplication_target(&net, &ds, &residuals, &alphas, 1e-9).is_none());
    }

    fn gen_polygon_like_2d() -> Dataset<f64> {
        let mut ms = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let x1 = -2.0 + i as f64;
                let x2 = -2.0 + j as f64;
                ms.push(
                    Measurement::new(
                        AugmentedInput::from_raw(&[x1, x2]).unwrap(),
                        crate::model::pyramid_closed_form(x1, x2),
                        None,
                    )
                    .unwrap(),
                );
            }
        }
        Dataset::new(ms).unwrap()
    }

    #[test]
    fn activity_stats_record() {
        let net = crate::model::pyramid_minmax_network::<f64>();
        let mut stats = ActivityStats::default();
        stats.reset(&net);
        stats.record(&[ActivationPattern(vec![1, 3])]);
        assert!(stats.seen[0][1]);
        assert!(stats.seen[1][3]);
        assert!(!stats.seen[0][0]);
    }
}
