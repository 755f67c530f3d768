use std::sync::Arc;

use nalgebra::DMatrix;

use super::{coordinate_partials, matrix_to_vec, Commutators, FdConfig, ManifoldModel, ModelKind};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::MetricMatrix;

/// Coordinate components `g_{μν}(x)` of a metric.
pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Coframe `e^k = A_{kμ}(x) dx^μ`, one row per 1-form.
pub type CoframeFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Local chart. Without a coframe the working frame is the coordinate frame;
/// with one it is the dual frame of the coframe.
#[derive(Clone)]
pub struct ChartModel {
    dim: usize,
    metric: MetricFn,
    coframe: Option<CoframeFn>,
    fd: FdConfig,
}

pub fn chart_model(
    dim: usize,
    metric: MetricFn,
    coframe: Option<CoframeFn>,
    fd: FdConfig,
) -> ChartModel {
    ChartModel {
        dim,
        metric,
        coframe,
        fd,
    }
}

impl std::fmt::Debug for ChartModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChartModel")
            .field("dim", &self.dim)
            .field("coframe", &self.coframe.is_some())
            .field("fd", &self.fd)
            .finish()
    }
}

impl ChartModel {
    pub fn coordinate_metric(&self, p: &[f64]) -> DMatrix<f64> {
        (self.metric)(p)
    }

    pub fn coframe_at(&self, p: &[f64]) -> Option<DMatrix<f64>> {
        self.coframe.as_ref().map(|c| c(p))
    }

    fn frame_matrix(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        match &self.coframe {
            None => Ok(DMatrix::identity(self.dim, self.dim)),
            Some(c) => {
                let a = c(p);
                let lu = a.clone().lu();
                if lu.determinant().abs() <= 1e-12 {
                    return Err(GeometryError::SingularCoframe);
                }
                lu.try_inverse().ok_or(GeometryError::SingularCoframe)
            }
        }
    }

    /// Coordinate components `(de^k)_{μν} = ∂_μ A_{kν} − ∂_ν A_{kμ}` by central
    /// differences; `None` for the coordinate frame.
    pub fn coframe_differentials(&self, p: &[f64]) -> Result<Option<Vec<DMatrix<f64>>>> {
        let Some(c) = &self.coframe else {
            return Ok(None);
        };
        let n = self.dim;
        let partials = coordinate_partials(p, self.fd.step, &|q| Ok(matrix_to_vec(&c(q))))?;
        let d = (0..n)
            .map(|k| {
                DMatrix::from_fn(n, n, |mu, nu| {
                    partials[mu][k * n + nu] - partials[nu][k * n + mu]
                })
            })
            .collect();
        Ok(Some(d))
    }
}

impl ManifoldModel for ChartModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Chart
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn coord_len(&self) -> usize {
        self.dim
    }

    fn fd(&self) -> FdConfig {
        self.fd
    }

    fn metric_at(&self, p: &[f64]) -> Result<MetricMatrix> {
        self.check_point(p)?;
        let g = (self.metric)(p);
        let e = self.frame_matrix(p)?;
        let framed = e.transpose() * g * &e;
        // symmetrize away rounding from the change of frame
        MetricMatrix::new((&framed + framed.transpose()) * 0.5)
    }

    /// `c^k_{ij} = −de^k(e_i, e_j)` from `dα(A,B) = Aα(B) − Bα(A) − α([A,B])`
    /// with `α(e_j)` constant.
    fn commutators_at(&self, p: &[f64]) -> Result<Commutators> {
        self.check_point(p)?;
        let n = self.dim;
        let Some(d) = self.coframe_differentials(p)? else {
            return Ok(Commutators::zeros(n));
        };
        let e = self.frame_matrix(p)?;
        let mut c = Commutators::zeros(n);
        for (k, dk) in d.iter().enumerate() {
            let on_frame = e.transpose() * dk * &e;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = -on_frame[(i, j)];
                    c.set(i, j, k, v);
                    c.set(j, i, k, -v);
                }
            }
        }
        Ok(c)
    }

    fn frame_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.frame_matrix(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::derive_scalar;

    #[test]
    fn flat_coordinate_chart() {
        let m = chart_model(
            3,
            Arc::new(|_| {
                DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, -1.0]))
            }),
            None,
            FdConfig::default(),
        );
        let p = [0.3, -0.2, 0.1];
        assert_eq!(m.commutators_at(&p).unwrap(), Commutators::zeros(3));
        assert!(m
            .metric_derivatives(&p)
            .unwrap()
            .iter()
            .all(|d| d.amax() < 1e-12));
    }

    #[test]
    fn quadratic_derivative_matches_analytic() {
        let m = chart_model(
            2,
            Arc::new(|_| DMatrix::identity(2, 2)),
            None,
            FdConfig::default(),
        );
        let p = [0.7, -1.3];
        let f = |q: &[f64]| 3.0 * q[0] * q[0] - q[0] * q[1] + 2.0 * q[1] * q[1];
        let d0 = derive_scalar(&m, &p, 0, &f).unwrap();
        let d1 = derive_scalar(&m, &p, 1, &f).unwrap();
        assert!((d0 - (6.0 * p[0] - p[1])).abs() < 1e-7);
        assert!((d1 - (-p[0] + 4.0 * p[1])).abs() < 1e-7);
    }

    #[test]
    fn singular_coframe_is_reported() {
        let m = chart_model(
            2,
            Arc::new(|_| DMatrix::identity(2, 2)),
            Some(Arc::new(|_| {
                DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])
            })),
            FdConfig::default(),
        );
        assert_eq!(
            m.metric_at(&[0.0, 0.0]),
            Err(GeometryError::SingularCoframe)
        );
    }

    #[test]
    fn rotating_coframe_has_rotation_commutators() {
        // e^0 = dt, e^1 = cos t dx + sin t dy, e^2 = -sin t dx + cos t dy
        let m = chart_model(
            3,
            Arc::new(|_| DMatrix::identity(3, 3)),
            Some(Arc::new(|p: &[f64]| {
                let (c, s) = (p[0].cos(), p[0].sin());
                DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c])
            })),
            FdConfig::default(),
        );
        let c = m.commutators_at(&[0.4, 0.1, 0.2]).unwrap();
        assert!((c.get(0, 1, 2) - 1.0).abs() < 1e-9);
        assert!((c.get(0, 2, 1) + 1.0).abs() < 1e-9);
        assert!(c.get(1, 2, 0).abs() < 1e-9);
    }
}
