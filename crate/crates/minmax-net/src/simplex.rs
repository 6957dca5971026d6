//! Dense two-phase simplex in standard equality form with Bland's rule.
//!
//! Solves `min c^T z  s.t.  A z = b, z >= 0`. Small and dense on purpose:
//! the multiplier problems this crate generates have at most a few dozen
//! variables.

use crate::numerics::DenseMatrix;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal(Vec<T>),
    Infeasible,
}

struct Tableau<T> {
    a: DenseMatrix<T>,
    b: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Real> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let n = self.a.cols();
        let p = self.a[(row, col)];
        for j in 0..n {
            self.a[(row, j)] = self.a[(row, j)] / p;
        }
        self.b[row] = self.b[row] / p;
        for i in 0..self.a.rows() {
            if i == row {
                continue;
            }
            let f = self.a[(i, col)];
            if f == T::zero() {
                continue;
            }
            for j in 0..n {
                let delta = f * self.a[(row, j)];
                self.a[(i, j)] = self.a[(i, j)] - delta;
            }
            self.b[i] = self.b[i] - f * self.b[row];
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations with Bland's anti-cycling rule on the cost
    /// vector `c` restricted to columns `0..n_use`. Returns false when the
    /// iteration limit is hit (should not happen with Bland's rule).
    fn optimize(&mut self, c: &[T], n_use: usize) -> bool {
        let m = self.a.rows();
        let tol = lit::<T>(1e-11);
        let max_pivots = 200 * (n_use + m + 1);
        for _ in 0..max_pivots {
            // reduced costs: r_j = c_j - c_B^T (B^-1 A)_j
            let mut entering = None;
            for j in 0..n_use {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut r = c[j];
                for i in 0..m {
                    r -= c[self.basis[i]] * self.a[(i, j)];
                }
                if r < -tol {
                    entering = Some(j); // Bland: lowest eligible index
                    break;
                }
            }
            let Some(col) = entering else {
                return true; // optimal
            };
            // ratio test; Bland tie-break on the lowest basic variable index
            let mut leaving: Option<(usize, T)> = None;
            for i in 0..m {
                let aij = self.a[(i, col)];
                if aij > tol {
                    let ratio = self.b[i] / aij;
                    let better = match leaving {
                        None => true,
                        Some((r_prev, best)) => {
                            ratio < best - tol
                                || (ratio <= best + tol && self.basis[i] < self.basis[r_prev])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                // cost unbounded below; cannot happen for the problems we
                // build (phase-1 costs and multiplier problems are bounded),
                // treat as failure
                return false;
            };
            self.pivot(row, col);
        }
        false
    }
}

/// Solves `min c^T z  s.t.  A z = b, z >= 0` by the two-phase method.
pub fn solve_standard_form<T: Real>(c: &[T], a: &DenseMatrix<T>, b: &[T]) -> LpOutcome<T> {
    let m = a.rows();
    let n = a.cols();
    assert_eq!(c.len(), n, "cost vector length must match columns");
    assert_eq!(b.len(), m, "rhs length must match rows");
    let feas_tol = lit::<T>(1e-9);

    // normalize rows so the rhs is non-negative, then append artificials
    let mut full = DenseMatrix::zeros(m, n + m);
    let mut rhs = vec![T::zero(); m];
    for i in 0..m {
        let flip = if b[i] < T::zero() { -T::one() } else { T::one() };
        for j in 0..n {
            full[(i, j)] = flip * a[(i, j)];
        }
        full[(i, n + i)] = T::one();
        rhs[i] = flip * b[i];
    }
    let mut tab = Tableau {
        a: full,
        b: rhs,
        basis: (n..n + m).collect(),
    };

    // phase 1: minimize the artificial sum
    let mut phase1_cost = vec![T::zero(); n + m];
    for j in n..n + m {
        phase1_cost[j] = T::one();
    }
    if !tab.optimize(&phase1_cost, n + m) {
        return LpOutcome::Infeasible;
    }
    let phase1_obj: T = tab
        .basis
        .iter()
        .zip(tab.b.iter())
        .filter(|(v, _)| **v >= n)
        .fold(T::zero(), |acc, (_, bv)| acc + *bv);
    if phase1_obj > feas_tol {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificial variables out of the basis
    for row in 0..m {
        if tab.basis[row] >= n {
            let pivot_col = (0..n).find(|&j| tab.a[(row, j)].abs() > lit::<T>(1e-11));
            if let Some(col) = pivot_col {
                tab.pivot(row, col);
            }
            // an all-zero row is redundant; its artificial stays basic at 0
        }
    }

    // phase 2 on the structural columns
    let mut phase2_cost = vec![T::zero(); n + m];
    phase2_cost[..n].copy_from_slice(c);
    if !tab.optimize(&phase2_cost, n) {
        return LpOutcome::Infeasible;
    }

    let mut z = vec![T::zero(); n];
    for (i, &bv) in tab.basis.iter().enumerate() {
        if bv < n {
            z[bv] = tab.b[i];
        }
    }
    LpOutcome::Optimal(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn solves_textbook_problem() {
        // min -x1 - 2x2  s.t.  x1 + x2 + s1 = 4, x1 + 3x2 + s2 = 6, vars >= 0
        // optimum at (3, 1): objective -5
        let a = mat(2, 4, &[1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0]);
        let c = [-1.0, -2.0, 0.0, 0.0];
        let b = [4.0, 6.0];
        match solve_standard_form(&c, &a, &b) {
            LpOutcome::Optimal(z) => {
                assert!((z[0] - 3.0).abs() < 1e-9);
                assert!((z[1] - 1.0).abs() < 1e-9);
            }
            LpOutcome::Infeasible => panic!("should be feasible"),
        }
    }

    #[test]
    fn detects_infeasible() {
        // x1 = 1 and x1 = 2 cannot both hold
        let a = mat(2, 1, &[1.0, 1.0]);
        let c = [0.0];
        let b = [1.0, 2.0];
        assert_eq!(solve_standard_form(&c, &a, &b), LpOutcome::Infeasible);
    }

    #[test]
    fn handles_negative_rhs_rows() {
        // -x1 = -2  =>  x1 = 2
        let a = mat(1, 1, &[-1.0]);
        let c = [1.0];
        let b = [-2.0];
        match solve_standard_form(&c, &a, &b) {
            LpOutcome::Optimal(z) => assert!((z[0] - 2.0).abs() < 1e-9),
            LpOutcome::Infeasible => panic!("feasible"),
        }
    }

    #[test]
    fn degenerate_problem_terminates() {
        // redundant identical rows
        let a = mat(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let c = [1.0, 1.0];
        let b = [1.0, 1.0];
        match solve_standard_form(&c, &a, &b) {
            LpOutcome::Optimal(z) => {
                assert!((z[0] + z[1] - 1.0).abs() < 1e-9);
            }
            LpOutcome::Infeasible => panic!("feasible"),
        }
    }
}
