//! Edge constraints, active sets and Lagrange multipliers.
//!
//! Every learning step must keep the active basic neuron extremal at each
//! measurement: for a Min neuron `z_{k*} - z_k <= 0`, for a Max neuron
//! `z_k - z_{k*} <= 0` (all `k != k*`). Violations of the unconstrained step
//! are repaired by non-positive multipliers on the constraint normals,
//! chosen by a linear program that maximizes the multiplier sum.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::model::{ActivationPattern, Network};
use crate::numerics::{self, DenseMatrix};
use crate::scalar::{lit, Real};
use crate::simplex::{solve_standard_form, LpOutcome};

/// Default activity tolerance: constraints within this of zero are active.
pub const EPS_ACTIVE: f64 = 1e-9;
/// Default feasibility tolerance for post-step constraint values.
pub const EPS_FEASIBLE: f64 = 1e-9;
/// Maximum step halvings before a constraint conflict becomes fatal.
pub const MAX_HALVINGS: u32 = 30;

/// Where each neuron's stacked weight block lives inside the full stacked
/// weight vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackedLayout {
    aug_dim: usize,
    offsets: Vec<usize>,
    total: usize,
}

impl StackedLayout {
    pub fn of<T: Real>(net: &Network<T>) -> Self {
        let aug_dim = net.augmented_dim();
        let mut offsets = Vec::with_capacity(net.neuron_count());
        let mut total = 0;
        for n in net.neurons() {
            offsets.push(total);
            total += n.basic_count() * aug_dim;
        }
        Self {
            aug_dim,
            offsets,
            total,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn aug_dim(&self) -> usize {
        self.aug_dim
    }

    /// Index range of basic `k` in neuron `j`.
    pub fn block(&self, neuron: usize, basic: usize) -> std::ops::Range<usize> {
        let start = self.offsets[neuron] + basic * self.aug_dim;
        start..start + self.aug_dim
    }
}

/// Stacks all weights into one vector in neuron order.
pub fn stack_weights<T: Real>(net: &Network<T>) -> Vec<T> {
    let mut w = Vec::with_capacity(StackedLayout::of(net).total());
    for n in net.neurons() {
        for b in &n.basics {
            w.extend_from_slice(&b.weights);
        }
    }
    w
}

/// Writes a stacked weight vector back into the network.
pub fn set_stacked_weights<T: Real>(net: &mut Network<T>, w: &[T]) {
    let mut i = 0;
    for n in net.neurons_mut() {
        for b in &mut n.basics {
            let d = b.weights.len();
            b.weights.copy_from_slice(&w[i..i + d]);
            i += d;
        }
    }
    debug_assert_eq!(i, w.len());
}

/// One edge constraint `g^T W + h <= 0` tying a non-active basic neuron to
/// the active one at a measurement. The normal has exactly two non-zero
/// blocks inside neuron `neuron`: `sign * x` at `active` and `-sign * x` at
/// `inactive` (`sign` is +1 for Min, -1 for Max neurons).
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec<T> {
    pub neuron: usize,
    pub measurement: usize,
    pub inactive: usize,
    pub active: usize,
    pub sign: T,
    pub offset: T,
}

impl<T: Real> ConstraintSpec<T> {
    /// `g^T w + h` for a stacked weight vector.
    pub fn value(&self, w: &[T], layout: &StackedLayout, dataset: &Dataset<T>) -> T {
        let x = dataset.measurements()[self.measurement].x.values();
        let a = &w[layout.block(self.neuron, self.active)];
        let b = &w[layout.block(self.neuron, self.inactive)];
        self.sign * (numerics::dot(x, a) - numerics::dot(x, b)) + self.offset
    }

    /// Dense constraint normal over the full stacked weight space.
    pub fn normal_dense(&self, layout: &StackedLayout, dataset: &Dataset<T>) -> Vec<T> {
        let x = dataset.measurements()[self.measurement].x.values();
        let mut g = vec![T::zero(); layout.total()];
        for (i, xi) in x.iter().enumerate() {
            g[layout.block(self.neuron, self.active).start + i] = self.sign * *xi;
            g[layout.block(self.neuron, self.inactive).start + i] = -self.sign * *xi;
        }
        g
    }
}

/// Indices (into a constraint list) of constraints active at an iterate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSet(pub Vec<usize>);

/// Non-positive multipliers per candidate constraint, indexed into the full
/// constraint list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiplierSolution<T> {
    pub lambdas: Vec<(usize, T)>,
}

impl<T: Real> MultiplierSolution<T> {
    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Multipliers strictly below `-eps`.
    pub fn support(&self, eps: T) -> Vec<(usize, T)> {
        self.lambdas
            .iter()
            .copied()
            .filter(|(_, l)| *l < -eps)
            .collect()
    }
}

/// Builds the full edge-constraint list for the given activation patterns:
/// one constraint per (neuron, measurement, non-active basic).
pub fn build_edge_constraints<T: Real>(
    net: &Network<T>,
    _dataset: &Dataset<T>,
    patterns: &[ActivationPattern],
) -> Vec<ConstraintSpec<T>> {
    let mut out = Vec::new();
    for (j, neuron) in net.neurons().iter().enumerate() {
        let sign = neuron.kind.constraint_sign::<T>();
        for (m, pattern) in patterns.iter().enumerate() {
            let k_star = pattern.0[j];
            for k in 0..neuron.basic_count() {
                if k != k_star {
                    out.push(ConstraintSpec {
                        neuron: j,
                        measurement: m,
                        inactive: k,
                        active: k_star,
                        sign,
                        offset: T::zero(),
                    });
                }
            }
        }
    }
    out
}

/// Constraints active (|value| <= eps) at a stacked iterate.
pub fn active_set<T: Real>(
    w: &[T],
    constraints: &[ConstraintSpec<T>],
    layout: &StackedLayout,
    dataset: &Dataset<T>,
    eps_active: T,
) -> ActiveSet {
    ActiveSet(
        constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.value(w, layout, dataset).abs() <= eps_active)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// Outcome of the multiplier LP for one candidate set.
#[derive(Debug, Clone, PartialEq)]
pub enum SolveOutcome<T> {
    Solved(MultiplierSolution<T>),
    Infeasible,
}

/// Solves Definition 2's linear program over `candidates`:
/// maximize the multiplier sum subject to every candidate constraint holding
/// at `f + sum_l g_l lambda_l` and `lambda_l <= 0`.
///
/// Identical normals (duplicated basic neurons) are deduplicated before the
/// solve; dropped duplicates report a zero multiplier.
pub fn solve_multipliers<T: Real>(
    f: &[T],
    constraints: &[ConstraintSpec<T>],
    candidates: &[usize],
    layout: &StackedLayout,
    dataset: &Dataset<T>,
) -> SolveOutcome<T> {
    if candidates.is_empty() {
        return SolveOutcome::Solved(MultiplierSolution::default());
    }
    let eps = lit::<T>(EPS_ACTIVE);

    // densify and deduplicate identical normals
    let normals: Vec<Vec<T>> = candidates
        .iter()
        .map(|&i| constraints[i].normal_dense(layout, dataset))
        .collect();
    let mut kept: Vec<usize> = Vec::new();
    for (i, g) in normals.iter().enumerate() {
        let dup = kept.iter().any(|&k| {
            normals[k]
                .iter()
                .zip(g.iter())
                .all(|(a, b)| (*a - *b).abs() <= eps)
        });
        if !dup {
            kept.push(i);
        }
    }

    let l = kept.len();
    // LP in mu = -lambda >= 0:  min sum(mu)  s.t.  Gram*mu - s = v, s >= 0
    // where v_l = g_l^T f + h_l is the constraint value at the target.
    let mut a = DenseMatrix::zeros(l, l + l);
    let mut b = vec![T::zero(); l];
    for (r, &ir) in kept.iter().enumerate() {
        for (cc, &ic) in kept.iter().enumerate() {
            a[(r, cc)] = numerics::dot(&normals[ir], &normals[ic]);
        }
        a[(r, l + r)] = -T::one();
        b[r] = constraints[candidates[ir]].value(f, layout, dataset);
    }
    let mut cost = vec![T::zero(); l + l];
    for c in cost.iter_mut().take(l) {
        *c = T::one();
    }

    match solve_standard_form(&cost, &a, &b) {
        LpOutcome::Infeasible => SolveOutcome::Infeasible,
        LpOutcome::Optimal(z) => {
            let mut lambdas = Vec::with_capacity(candidates.len());
            for (pos, &i) in candidates.iter().enumerate() {
                let lambda = match kept.iter().position(|&k| k == pos) {
                    Some(r) => -z[r],
                    None => T::zero(), // deduplicated twin carries the multiplier
                };
                lambdas.push((i, lambda));
            }
            SolveOutcome::Solved(MultiplierSolution { lambdas })
        }
    }
}

/// Applies `w = f + sum_l g_l lambda_l` for a multiplier solution.
pub fn apply_multipliers<T: Real>(
    f: &[T],
    solution: &MultiplierSolution<T>,
    constraints: &[ConstraintSpec<T>],
    layout: &StackedLayout,
    dataset: &Dataset<T>,
) -> Vec<T> {
    let mut w = f.to_vec();
    for &(idx, lambda) in &solution.lambdas {
        if lambda == T::zero() {
            continue;
        }
        let c = &constraints[idx];
        let x = dataset.measurements()[c.measurement].x.values();
        let a_range = layout.block(c.neuron, c.active);
        let b_range = layout.block(c.neuron, c.inactive);
        for (i, xi) in x.iter().enumerate() {
            w[a_range.start + i] = w[a_range.start + i] + c.sign * *xi * lambda;
            w[b_range.start + i] = w[b_range.start + i] - c.sign * *xi * lambda;
        }
    }
    w
}

/// Active-set outer loop: starts from the constraints violated at `f`,
/// solves the multiplier LP, and keeps adding any constraint the corrected
/// point still violates until the full list is feasible.
pub fn constrain_to_feasible<T: Real>(
    f: &[T],
    constraints: &[ConstraintSpec<T>],
    layout: &StackedLayout,
    dataset: &Dataset<T>,
    eps_feasible: T,
) -> SolveOutcome<T> {
    let violated = |w: &[T], skip: &[usize]| -> Vec<usize> {
        constraints
            .iter()
            .enumerate()
            .filter(|(i, c)| {
                !skip.contains(i) && c.value(w, layout, dataset) > eps_feasible
            })
            .map(|(i, _)| i)
            .collect()
    };

    let mut candidates = violated(f, &[]);
    if candidates.is_empty() {
        return SolveOutcome::Solved(MultiplierSolution::default());
    }
    let mut best: Option<MultiplierSolution<T>> = None;
    for _ in 0..2 * constraints.len() + 4 {
        match solve_multipliers(f, constraints, &candidates, layout, dataset) {
            SolveOutcome::Infeasible => return SolveOutcome::Infeasible,
            SolveOutcome::Solved(sol) => {
                let w = apply_multipliers(f, &sol, constraints, layout, dataset);
                let newly = violated(&w, &candidates);
                if !newly.is_empty() {
                    candidates.extend(newly);
                    continue;
                }
                best = Some(sol.clone());
                // restore complementarity: a multiplier on a slack row means
                // the LP had multiple optima; dropping the slack constraint
                // and re-solving moves the mass onto a binding row
                let slack: Vec<usize> = sol
                    .lambdas
                    .iter()
                    .filter(|&&(idx, l)| {
                        l < -eps_feasible
                            && constraints[idx].value(&w, layout, dataset) < -eps_feasible
                    })
                    .map(|&(idx, _)| idx)
                    .collect();
                if slack.is_empty() {
                    return SolveOutcome::Solved(sol);
                }
                let before = candidates.len();
                candidates.retain(|i| !slack.contains(i));
                if candidates.len() == before || candidates.is_empty() {
                    return SolveOutcome::Solved(sol);
                }
            }
        }
    }
    // give up on refinement; the last feasible solution is still lawful
    match best {
        Some(sol) => SolveOutcome::Solved(sol),
        None => SolveOutcome::Infeasible,
    }
}

/// Orthonormal basis of the subspace tangential to the active constraints.
/// An empty active set yields the identity; a fully pinned state yields a
/// zero-column basis.
pub fn tangential_basis<T: Real>(
    active: &[&ConstraintSpec<T>],
    layout: &StackedLayout,
    dataset: &Dataset<T>,
) -> Result<DenseMatrix<T>> {
    let rows: Vec<Vec<T>> = active
        .iter()
        .map(|c| c.normal_dense(layout, dataset))
        .collect();
    let normals = DenseMatrix::from_rows(layout.total(), &rows)?;
    Ok(numerics::orthonormal_nullspace_basis(&normals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Measurement;
    use crate::model::{AugmentedInput, BasicNeuron, Neuron, NeuronKind};

    fn min_pair_net() -> Network<f64> {
        Network::new(
            1,
            vec![Neuron::new(
                NeuronKind::Min,
                vec![
                    BasicNeuron::new(vec![0.0, 1.0]),
                    BasicNeuron::new(vec![0.0, -1.0]),
                ],
            )],
        )
        .unwrap()
    }

    fn one_point_dataset(x: f64, y: f64) -> Dataset<f64> {
        Dataset::new(vec![Measurement::new(
            AugmentedInput::from_raw(&[x]).unwrap(),
            y,
            None,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn constraint_counting() {
        let net = min_pair_net();
        let ds = one_point_dataset(0.0, 1.0);
        let pats = vec![net
            .activation_pattern(&ds.measurements()[0].x)
            .unwrap()];
        let cons = build_edge_constraints(&net, &ds, &pats);
        // K=2, one measurement -> exactly 1 constraint
        assert_eq!(cons.len(), 1);
        assert_eq!(cons[0].inactive, 1);
        assert_eq!(cons[0].active, 0);
    }

    #[test]
    fn constraint_value_nonpositive_at_current_iterate() {
        let net = crate::model::pyramid_minmax_network::<f64>();
        let ds = crate::dataset::gen_pyramid::<f64>(2.0, 5).unwrap();
        let pats: Vec<_> = ds
            .measurements()
            .iter()
            .map(|m| net.activation_pattern(&m.x).unwrap())
            .collect();
        let cons = build_edge_constraints(&net, &ds, &pats);
        let layout = StackedLayout::of(&net);
        let w = stack_weights(&net);
        for c in &cons {
            assert!(c.value(&w, &layout, &ds) <= 1e-12);
        }
        // J neurons with K_j basics, M measurements -> sum_j M (K_j - 1)
        let expected: usize = net
            .neurons()
            .iter()
            .map(|n| ds.len() * (n.basic_count() - 1))
            .sum();
        assert_eq!(cons.len(), expected);
    }

    #[test]
    fn single_violated_constraint_closed_form() {
        // g = (1,0,-1,0), g.f + h = 0.4, |g|^2 = 2 -> lambda = -0.2
        let net = min_pair_net();
        let ds = one_point_dataset(0.0, 1.0);
        let layout = StackedLayout::of(&net);
        let cons = vec![ConstraintSpec {
            neuron: 0,
            measurement: 0,
            inactive: 1,
            active: 0,
            sign: 1.0,
            offset: 0.0,
        }];
        // f chosen so z0 - z1 = 0.4 at x = (1, 0)
        let f = vec![0.4, 1.0, 0.0, -1.0];
        match solve_multipliers(&f, &cons, &[0], &layout, &ds) {
            SolveOutcome::Solved(sol) => {
                assert_eq!(sol.lambdas.len(), 1);
                assert!((sol.lambdas[0].1 + 0.2).abs() < 1e-9);
                let w = apply_multipliers(&f, &sol, &cons, &layout, &ds);
                assert!(cons[0].value(&w, &layout, &ds).abs() < 1e-9);
            }
            SolveOutcome::Infeasible => panic!("feasible"),
        }
    }

    #[test]
    fn no_violations_empty_solution() {
        let net = min_pair_net();
        let ds = one_point_dataset(0.0, 1.0);
        let layout = StackedLayout::of(&net);
        let pats = vec![net.activation_pattern(&ds.measurements()[0].x).unwrap()];
        let cons = build_edge_constraints(&net, &ds, &pats);
        let w = stack_weights(&net);
        match constrain_to_feasible(&w, &cons, &layout, &ds, 1e-9) {
            SolveOutcome::Solved(sol) => assert!(sol.is_empty()),
            SolveOutcome::Infeasible => panic!("feasible"),
        }
    }

    #[test]
    fn duplicate_normals_are_dedupled() {
        // two measurements at the same input produce two constraints with
        // bit-identical normals; only one may enter the LP
        let net = min_pair_net();
        let ds = Dataset::new(vec![
            Measurement::new(AugmentedInput::from_raw(&[0.5]).unwrap(), 1.0, None).unwrap(),
            Measurement::new(AugmentedInput::from_raw(&[0.5]).unwrap(), 1.0, None).unwrap(),
        ])
        .unwrap();
        let layout = StackedLayout::of(&net);
        let mk = |measurement| ConstraintSpec {
            neuron: 0,
            measurement,
            inactive: 0usize,
            active: 1usize,
            sign: 1.0,
            offset: 0.0,
        };
        let cons = vec![mk(0), mk(1)];
        // active basic (index 1) pushed above basic 0: both constraints violated
        // z_active = 1.2 - 0.5 = 0.7, z_inactive = 0.5, value = 0.2 > 0
        let f = vec![0.0, 1.0, 1.2, -1.0];
        match solve_multipliers(&f, &cons, &[0, 1], &layout, &ds) {
            SolveOutcome::Solved(sol) => {
                // one multiplier carries the correction, the twin reports zero
                let nonzero: Vec<_> =
                    sol.lambdas.iter().filter(|(_, l)| *l != 0.0).collect();
                assert_eq!(nonzero.len(), 1);
                let w = apply_multipliers(&f, &sol, &cons, &layout, &ds);
                for c in &cons {
                    assert!(c.value(&w, &layout, &ds) <= 1e-9);
                }
            }
            SolveOutcome::Infeasible => panic!("feasible"),
        }
    }

    #[test]
    fn tangential_basis_dimensions() {
        let net = min_pair_net();
        let ds = one_point_dataset(0.0, 1.0);
        let layout = StackedLayout::of(&net);
        // empty active set -> identity
        let g = tangential_basis::<f64>(&[], &layout, &ds).unwrap();
        assert_eq!((g.rows(), g.cols()), (4, 4));
        assert!(g.max_abs_minus_identity() == 0.0);
        // one active constraint in 4-d stacked space -> 3 columns
        let c = ConstraintSpec {
            neuron: 0,
            measurement: 0,
            inactive: 1,
            active: 0,
            sign: 1.0,
            offset: 0.0,
        };
        let g = tangential_basis(&[&c], &layout, &ds).unwrap();
        assert_eq!(g.cols(), 3);
        let normal =
            DenseMatrix::from_rows(4, &[c.normal_dense(&layout, &ds)]).unwrap();
        assert!(normal.matmul(&g).unwrap().max_abs() < 1e-12);
    }
}
