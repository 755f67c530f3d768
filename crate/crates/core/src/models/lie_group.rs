use nalgebra::DMatrix;

use super::{Commutators, FdConfig, ManifoldModel, ModelKind};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::MetricMatrix;

/// Lie group with a left-invariant frame; all data is constant.
#[derive(Debug, Clone)]
pub struct LieGroupModel {
    n: usize,
    commutators: Commutators,
    metric: MetricMatrix,
    fd: FdConfig,
}

/// Builds a left-invariant model of dimension `2n+1`.
pub fn lie_group_model(
    n: usize,
    structure_constants: Commutators,
    metric: MetricMatrix,
) -> Result<LieGroupModel> {
    let dim = 2 * n + 1;
    if structure_constants.dim() != dim {
        return Err(GeometryError::DimMismatch {
            left: structure_constants.dim(),
            right: dim,
        });
    }
    if metric.dim() != dim {
        return Err(GeometryError::DimMismatch {
            left: metric.dim(),
            right: dim,
        });
    }
    structure_constants.check_antisymmetric()?;
    metric.expect_signature(n + 1, n)?;
    Ok(LieGroupModel {
        n,
        commutators: structure_constants,
        metric,
        fd: FdConfig::default(),
    })
}

impl LieGroupModel {
    /// Step used by models built on top of this one (the cone).
    pub fn with_fd(mut self, fd: FdConfig) -> Self {
        self.fd = fd;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn structure_constants(&self) -> &Commutators {
        &self.commutators
    }
}

impl ManifoldModel for LieGroupModel {
    fn kind(&self) -> ModelKind {
        ModelKind::LieGroup
    }

    fn dim(&self) -> usize {
        2 * self.n + 1
    }

    fn coord_len(&self) -> usize {
        0
    }

    fn fd(&self) -> FdConfig {
        self.fd
    }

    fn metric_at(&self, p: &[f64]) -> Result<MetricMatrix> {
        self.check_point(p)?;
        Ok(self.metric.clone())
    }

    fn commutators_at(&self, p: &[f64]) -> Result<Commutators> {
        self.check_point(p)?;
        Ok(self.commutators.clone())
    }

    fn frame_at(&self, _p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(0, self.dim()))
    }

    fn metric_derivatives(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        self.check_point(p)?;
        let d = self.dim();
        Ok(vec![DMatrix::zeros(d, d); d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::derive_scalar;

    #[test]
    fn rejects_wrong_signature() {
        let c = Commutators::zeros(3);
        let g = MetricMatrix::diagonal(&[1.0, -1.0, -1.0]).unwrap();
        assert!(matches!(
            lie_group_model(1, c, g),
            Err(GeometryError::BadSignature { .. })
        ));
    }

    #[test]
    fn invariant_fields_have_zero_derivative() {
        let g = MetricMatrix::diagonal(&[1.0, 1.0, -1.0]).unwrap();
        let m = lie_group_model(1, Commutators::zeros(3), g).unwrap();
        let d = derive_scalar(&m, &[], 1, &|_| 3.0).unwrap();
        assert_eq!(d, 0.0);
        assert!(m
            .metric_derivatives(&[])
            .unwrap()
            .iter()
            .all(|x| x.amax() == 0.0));
        assert!(m.metric_at(&[0.5]).is_err());
    }
}
