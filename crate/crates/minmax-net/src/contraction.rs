//! Numerical certification of the contraction properties of the constrained
//! learning step: extreme singular values of the update map, projected onto
//! the subspace tangential to the active constraints, in a chosen metric.

use serde::Serialize;

use crate::constraints::{tangential_basis, ConstraintSpec, StackedLayout};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{ActivationPattern, Network};
use crate::numerics::{cholesky, dot, singular_values, solve_right_lower_transposed, DenseMatrix};
use crate::scalar::{lit, Real};

/// Metric used for the certification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Identity metric on the stacked weight space.
    Identity,
    /// Diagonal `alpha_n^2` metric on the measurement space.
    AlphaSquaredDiagonal,
}

/// Certified extreme singular values of the projected update map.
/// `sigma_max < 1` certifies exponential contraction on the probed region;
/// a zero-dimensional tangential space leaves the values absent.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport<T> {
    pub sigma_min: Option<T>,
    pub sigma_max: Option<T>,
    pub subspace_dim: usize,
    pub metric_kind: MetricKind,
    pub region_signature: Vec<Vec<u32>>,
}

impl<T: Real + Serialize> ContractionReport<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Contraction holds (non-expansion) when sigma_max <= 1 + tol.
    pub fn is_contractive(&self, tol: T) -> bool {
        match self.sigma_max {
            Some(s) => s <= T::one() + tol,
            None => true,
        }
    }
}

fn region_signature(patterns: &[ActivationPattern]) -> Vec<Vec<u32>> {
    patterns
        .iter()
        .map(|p| p.0.iter().map(|&k| k as u32).collect())
        .collect()
}

/// Weight-space update Jacobian on a fixed region:
/// `I - sum_m alpha_m^2 s_m s_m^T` over the full stacked-weight dimension,
/// where `s_m` is the stacked activation of measurement `m`.
pub fn weight_space_matrix<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    patterns: &[ActivationPattern],
    alphas: &[T],
) -> DenseMatrix<T> {
    let layout = StackedLayout::of(net);
    let d = layout.total();
    let mut f = DenseMatrix::identity(d);
    for (m, meas) in dataset.measurements().iter().enumerate() {
        let w = alphas[m] * alphas[m];
        if w == T::zero() {
            continue;
        }
        let x = meas.x.values();
        // the stacked activation is x in block (j, k*_j) for every neuron
        let blocks: Vec<std::ops::Range<usize>> = (0..net.neuron_count())
            .map(|j| layout.block(j, patterns[m].0[j]))
            .collect();
        for bi in &blocks {
            for bj in &blocks {
                for (a, xa) in x.iter().enumerate() {
                    for (b, xb) in x.iter().enumerate() {
                        let idx = (bi.start + a, bj.start + b);
                        f[idx] = f[idx] - w * *xa * *xb;
                    }
                }
            }
        }
    }
    f
}

/// Measurement-space update map in the `alpha_n^2` metric:
/// entry `(n, m)` is `delta_nm - alpha_n (sum_j A_j(x_n)^T A_j(x_m)) alpha_m`.
pub fn measurement_space_matrix<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    patterns: &[ActivationPattern],
    alphas: &[T],
) -> DenseMatrix<T> {
    let m_count = dataset.len();
    let mut out = DenseMatrix::identity(m_count);
    for n in 0..m_count {
        for m in 0..m_count {
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
                out[(n, m)] =
                    out[(n, m)] - alphas[n] * lit::<T>(agree as f64) * xx * alphas[m];
            }
        }
    }
    out
}

/// Generalized extreme singular values of `F` restricted to the columns of
/// `g_par`, against the diagonal metric `metric_diag`: the spectrum of
/// `L^-1 (G^T F^T M F G) L^-T` with `L L^T = G^T M G`, computed as ordinary
/// singular values of `M^(1/2) F G L^-T`.
fn generalized_extreme_singular_values<T: Real>(
    f: &DenseMatrix<T>,
    g_par: &DenseMatrix<T>,
    metric_diag: &[T],
) -> Result<(T, T)> {
    // B = G^T M G
    let mut mg = g_par.clone();
    for i in 0..mg.rows() {
        for j in 0..mg.cols() {
            mg[(i, j)] = mg[(i, j)] * metric_diag[i];
        }
    }
    let b = g_par.transpose().matmul(&mg)?;
    let b_sv = singular_values(&b);
    let b_max = b_sv.first().copied().unwrap_or_else(T::zero);
    let b_min = b_sv.last().copied().unwrap_or_else(T::zero);
    if b_min <= T::zero() || b_max / b_min > lit::<T>(1e12) {
        return Err(Error::IllConditionedMetric {
            condition: if b_min <= T::zero() {
                f64::INFINITY
            } else {
                (b_max / b_min).to_f64().unwrap_or(f64::INFINITY)
            },
        });
    }
    let l = cholesky(&b).ok_or(Error::IllConditionedMetric {
        condition: f64::INFINITY,
    })?;
    // X = M^(1/2) F G
    let mut x = f.matmul(g_par)?;
    for i in 0..x.rows() {
        let s = metric_diag[i].sqrt();
        for j in 0..x.cols() {
            x[(i, j)] = x[(i, j)] * s;
        }
    }
    let whitened = solve_right_lower_transposed(&x, &l);
    let sv = singular_values(&whitened);
    Ok((
        sv.last().copied().unwrap_or_else(T::zero),
        sv.first().copied().unwrap_or_else(T::zero),
    ))
}

/// Certifies one constrained step on the region fixed by `patterns`.
///
/// Identity metric: the weight-space Jacobian is projected onto the subspace
/// tangential to the active constraint normals. Alpha-squared metric: the
/// measurement-space map is analyzed in the `alpha_n^2` metric (no
/// constraint projection is defined there; the active set is ignored).
pub fn certify_step<T: Real>(
    net: &Network<T>,
    dataset: &Dataset<T>,
    patterns: &[ActivationPattern],
    active: &[&ConstraintSpec<T>],
    metric: MetricKind,
    alphas: &[T],
) -> Result<ContractionReport<T>> {
    match metric {
        MetricKind::Identity => {
            let layout = StackedLayout::of(net);
            let f = weight_space_matrix(net, dataset, patterns, alphas);
            let g_par = tangential_basis(active, &layout, dataset)?;
            let subspace_dim = g_par.cols();
            if subspace_dim == 0 {
                return Ok(ContractionReport {
                    sigma_min: None,
                    sigma_max: None,
                    subspace_dim,
                    metric_kind: metric,
                    region_signature: region_signature(patterns),
                });
            }
            let metric_diag = vec![T::one(); layout.total()];
            let (lo, hi) = generalized_extreme_singular_values(&f, &g_par, &metric_diag)?;
            Ok(ContractionReport {
                sigma_min: Some(lo),
                sigma_max: Some(hi),
                subspace_dim,
                metric_kind: metric,
                region_signature: region_signature(patterns),
            })
        }
        MetricKind::AlphaSquaredDiagonal => {
            if alphas.iter().any(|a| *a <= T::zero()) {
                return Err(Error::IllConditionedMetric {
                    condition: f64::INFINITY,
                });
            }
            let m_count = dataset.len();
            // measurement-space update in the natural coordinates:
            // y' = (I - K) y with K_nm = (sum_j agree) x_n.x_m alpha_m^2
            let mut f = DenseMatrix::identity(m_count);
            for n in 0..m_count {
                for m in 0..m_count {
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
                        f[(n, m)] = f[(n, m)]
                            - lit::<T>(agree as f64) * xx * alphas[m] * alphas[m];
                    }
                }
            }
            let g_par = DenseMatrix::identity(m_count);
            let metric_diag: Vec<T> = alphas.iter().map(|&a| a * a).collect();
            let (lo, hi) = generalized_extreme_singular_values(&f, &g_par, &metric_diag)?;
            Ok(ContractionReport {
                sigma_min: Some(lo),
                sigma_max: Some(hi),
                subspace_dim: m_count,
                metric_kind: metric,
                region_signature: region_signature(patterns),
            })
        }
    }
}
