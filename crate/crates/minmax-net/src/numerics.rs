//! Dense linear-algebra kernels: small row-major matrices, one-sided Jacobi
//! singular values, orthonormal null-space bases and a Cholesky factorization.
//!
//! Everything here is written for small dense problems (at most a few
//! thousand entries); no attempt is made at BLAS-level performance.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Relative rank cutoff: singular values below `RANK_TOL * max(1, sigma_max)`
/// are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    /// Builds a matrix from row-major data, validating shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "DenseMatrix entries",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "DenseMatrix entries",
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Stacks rows (each of length `cols`) into a matrix. An empty slice
    /// yields a 0 x cols matrix.
    pub fn from_rows(cols: usize, rows: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "DenseMatrix row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                what: "matmul inner dimension",
                expected: self.cols,
                actual: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute entry; zero for empty matrices.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// `max |A - I|` over the square part, used by orthonormality checks.
    pub fn max_abs_minus_identity(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((self[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Scales every entry in place.
    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v = *v * s;
        }
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// All `min(rows, cols)` singular values of `a`, non-negative and descending.
///
/// Uses one-sided Jacobi rotations on the columns, which keeps full relative
/// accuracy on the small dense matrices this crate works with.
pub fn singular_values<T: Real>(a: &DenseMatrix<T>) -> Vec<T> {
    let count = a.rows().min(a.cols());
    if count == 0 {
        return Vec::new();
    }
    // Work on the tall orientation so the column count equals the number of
    // singular values we return.
    let work = if a.rows() >= a.cols() {
        a.clone()
    } else {
        a.transpose()
    };
    let (b, _v) = one_sided_jacobi(work);
    let mut sigma: Vec<T> = (0..b.cols()).map(|j| column_norm(&b, j)).collect();
    sigma.sort_by(|x, y| y.partial_cmp(x).expect("singular values are finite"));
    sigma
}

/// Orthonormal basis of the null space of `normals` (one constraint normal
/// per row): returns `G` with `G^T G = I` and `normals * G = 0`, with
/// `n - rank(normals)` columns in a deterministic order.
pub fn orthonormal_nullspace_basis<T: Real>(normals: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = normals.cols();
    if normals.rows() == 0 {
        return DenseMatrix::identity(n);
    }
    let (b, v) = one_sided_jacobi(normals.clone());
    let norms: Vec<T> = (0..n).map(|j| column_norm(&b, j)).collect();
    let sigma_max = norms
        .iter()
        .fold(T::zero(), |acc, s| acc.max(*s))
        .max(T::one());
    let tol = lit::<T>(RANK_TOL) * sigma_max;
    // Null columns of V in ascending original index keep runs reproducible.
    let mut out = DenseMatrix::zeros(n, norms.iter().filter(|s| **s <= tol).count());
    let mut col = 0;
    for (j, sigma) in norms.iter().enumerate() {
        if *sigma <= tol {
            for i in 0..n {
                out[(i, col)] = v[(i, j)];
            }
            col += 1;
        }
    }
    out
}

/// One-sided Jacobi orthogonalization: returns `(B, V)` with `A = B * V^T`,
/// `V` orthogonal and the columns of `B` mutually orthogonal.
fn one_sided_jacobi<T: Real>(mut a: DenseMatrix<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let n = a.cols();
    let m = a.rows();
    let mut v = DenseMatrix::identity(n);
    if n < 2 || m == 0 {
        return (a, v);
    }
    let eps = lit::<T>(1e-15);
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..m {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if app == T::zero() || aqq == T::zero() {
                    continue;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (aqq - app) / (lit::<T>(2.0) * apq);
                let t = {
                    let sign = if tau >= T::zero() { T::one() } else { -T::one() };
                    sign / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let x = a[(i, p)];
                    let y = a[(i, q)];
                    a[(i, p)] = c * x - s * y;
                    a[(i, q)] = s * x + c * y;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)];
                    v[(i, p)] = c * x - s * y;
                    v[(i, q)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (a, v)
}

fn column_norm<T: Real>(a: &DenseMatrix<T>, j: usize) -> T {
    let mut sum = T::zero();
    for i in 0..a.rows() {
        sum += a[(i, j)] * a[(i, j)];
    }
    sum.sqrt()
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Returns `None` when the matrix is not numerically positive definite.
pub fn cholesky<T: Real>(a: &DenseMatrix<T>) -> Option<DenseMatrix<T>> {
    let n = a.rows();
    if n != a.cols() {
        return None;
    }
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= T::zero() {
                    return None;
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Some(l)
}

/// Solves `X L^T = B` for `X` given lower-triangular `L`, i.e. applies
/// `L^{-T}` on the right. Used to whiten generalized singular-value problems.
pub fn solve_right_lower_transposed<T: Real>(
    b: &DenseMatrix<T>,
    l: &DenseMatrix<T>,
) -> DenseMatrix<T> {
    let n = l.rows();
    let mut x = b.clone();
    // Row-wise forward substitution against L^T: column j of X depends on
    // earlier columns because (L^T)_{kj} = L_{jk} for k <= j.
    for r in 0..x.rows() {
        for j in 0..n {
            let mut sum = x[(r, j)];
            for k in 0..j {
                sum -= x[(r, k)] * l[(j, k)];
            }
            x[(r, j)] = sum / l[(j, j)];
        }
    }
    x
}

/// Dot product helper for slices.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = T::zero();
    for (x, y) in a.iter().zip(b.iter()) {
        sum += *x * *y;
    }
    sum
}

/// Euclidean norm of a slice.
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m64(rows: usize, cols: usize, data: &[f64]) -> DenseMatrix<f64> {
        DenseMatrix::new(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_entries() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn rejects_wrong_entry_count() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn singular_values_of_identity() {
        let s = singular_values(&DenseMatrix::<f64>::identity(3));
        assert_eq!(s.len(), 3);
        for v in s {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_values_of_diagonal() {
        let s = singular_values(&m64(2, 2, &[3.0, 0.0, 0.0, 4.0]));
        assert!((s[0] - 4.0).abs() < 1e-14);
        assert!((s[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_wide_matrix_match_transpose() {
        let a = m64(2, 4, &[1.0, 2.0, 3.0, 4.0, -1.0, 0.5, 2.0, -3.0]);
        let s1 = singular_values(&a);
        let s2 = singular_values(&a.transpose());
        assert_eq!(s1.len(), 2);
        for (x, y) in s1.iter().zip(s2.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn nullspace_of_axis_normal_spans_remaining_axes() {
        let normals = m64(1, 3, &[1.0, 0.0, 0.0]);
        let g = orthonormal_nullspace_basis(&normals);
        assert_eq!(g.cols(), 2);
        // g must be orthonormal and orthogonal to e1
        let gtg = g.transpose().matmul(&g).unwrap();
        assert!(gtg.max_abs_minus_identity() < 1e-13);
        let ng = normals.matmul(&g).unwrap();
        assert!(ng.max_abs() < 1e-13);
        // every basis column has zero first component
        for c in 0..2 {
            assert!(g[(0, c)].abs() < 1e-13);
        }
    }

    #[test]
    fn nullspace_of_empty_normals_is_identity() {
        let normals = DenseMatrix::<f64>::zeros(0, 4);
        let g = orthonormal_nullspace_basis(&normals);
        assert_eq!((g.rows(), g.cols()), (4, 4));
        assert!(g.max_abs_minus_identity() == 0.0);
    }

    #[test]
    fn nullspace_of_two_random_rows_in_5d() {
        let normals = m64(
            2,
            5,
            &[0.7, -1.2, 0.3, 2.0, -0.5, 1.1, 0.4, -0.9, 0.2, 1.7],
        );
        let g = orthonormal_nullspace_basis(&normals);
        assert_eq!(g.cols(), 3);
        assert!(g.transpose().matmul(&g).unwrap().max_abs_minus_identity() < 1e-12);
        assert!(normals.matmul(&g).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn nullspace_detects_rank_deficient_rows() {
        // second row is a multiple of the first
        let normals = m64(2, 3, &[1.0, 2.0, -1.0, -2.0, -4.0, 2.0]);
        let g = orthonormal_nullspace_basis(&normals);
        assert_eq!(g.cols(), 2);
        assert!(normals.matmul(&g).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn cholesky_factors_spd() {
        let a = m64(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let l = cholesky(&a).unwrap();
        let rec = l.matmul(&l.transpose()).unwrap();
        for (x, y) in rec.data().iter().zip(a.data().iter()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(cholesky(&m64(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_none());
    }

    #[test]
    fn right_lower_transposed_solve() {
        let l = m64(2, 2, &[2.0, 0.0, 1.0, 3.0]);
        let b = m64(1, 2, &[4.0, 5.0]);
        // x L^T = b  =>  x = b (L^T)^{-1}
        let x = solve_right_lower_transposed(&b, &l);
        // verify x L^T == b
        let rec = x.matmul(&l.transpose()).unwrap();
        for (u, w) in rec.data().iter().zip(b.data().iter()) {
            assert!((u - w).abs() < 1e-13);
        }
    }
}
