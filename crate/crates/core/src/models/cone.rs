use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{derive_field, matrix_to_vec, Commutators, FdConfig, Field, ManifoldModel, ModelKind};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::MetricMatrix;
use crate::structure::AccrStructure;

/// Metric placed on `M × ℝ⁻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeMetric {
    /// `r²g + (1 − r²)η⊗η − dr²/r²`: `J̌` is an anti-isometry and the
    /// component formulas of `∇̌` hold.
    #[default]
    AntiIsometric,
    /// `r²g + η⊗η − dr²` taken literally; `J̌` is an anti-isometry only on
    /// the horizontal part.
    Displayed,
}

impl ConeMetric {
    /// Coefficients `(α, β, κ)` of `ǧ = r²g + α η⊗η + κ dr²` and their
    /// `r`-derivatives `(α', κ')`.
    fn coefficients(self, r: f64) -> (f64, f64, f64, f64) {
        match self {
            ConeMetric::AntiIsometric => (1.0 - r * r, -1.0 / (r * r), -2.0 * r, 2.0 / (r * r * r)),
            ConeMetric::Displayed => (1.0, -1.0, 0.0, 0.0),
        }
    }
}

/// `M × ℝ⁻` over an accR manifold; frame `(base frame, ∂r)`, point
/// `(base point, r)`.
#[derive(Debug, Clone)]
pub struct ConeModel {
    base: AccrStructure,
    metric: ConeMetric,
}

impl ConeModel {
    pub fn base(&self) -> &AccrStructure {
        &self.base
    }

    pub fn metric_kind(&self) -> ConeMetric {
        self.metric
    }

    pub fn split<'a>(&self, p: &'a [f64]) -> Result<(&'a [f64], f64)> {
        self.check_point(p)?;
        let (q, r) = p.split_at(p.len() - 1);
        Ok((q, r[0]))
    }

    /// Frame embedding of a base vector.
    pub fn lift(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, v.len()).copy_from(v);
        out
    }

    /// `J̌ e_j = φ e_j + η(e_j) r ∂r`, `J̌ ∂r = −ξ / r`.
    pub fn complex_structure_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (q, r) = self.split(p)?;
        Ok(self.complex_structure(q, r))
    }

    fn complex_structure(&self, q: &[f64], r: f64) -> DMatrix<f64> {
        let m = self.base.dim();
        let phi = self.base.phi_at(q);
        let eta = self.base.eta_at(q);
        let xi = self.base.xi_at(q);
        let mut j = DMatrix::zeros(m + 1, m + 1);
        j.view_mut((0, 0), (m, m)).copy_from(&phi);
        for c in 0..m {
            j[(m, c)] = r * eta[c];
        }
        for a in 0..m {
            j[(a, m)] = -xi[a] / r;
        }
        j
    }

    fn assemble(&self, g: &DMatrix<f64>, eta: &DVector<f64>, r: f64) -> DMatrix<f64> {
        let m = self.base.dim();
        let mut out = DMatrix::zeros(m + 1, m + 1);
        let (alpha, kappa, _, _) = self.metric.coefficients(r);
        let block = g * (r * r) + eta * eta.transpose() * alpha;
        out.view_mut((0, 0), (m, m)).copy_from(&block);
        out[(m, m)] = kappa;
        out
    }
}

/// Builds the cone over `base` and its almost complex structure `J̌` as a field.
pub fn cone_model(base: AccrStructure) -> (Arc<ConeModel>, Field) {
    cone_model_with(base, ConeMetric::default())
}

pub fn cone_model_with(base: AccrStructure, metric: ConeMetric) -> (Arc<ConeModel>, Field) {
    let model = Arc::new(ConeModel { base, metric });
    let m = Arc::clone(&model);
    let j = Field::Varying(Arc::new(move |p: &[f64]| {
        let (q, r) = p.split_at(p.len() - 1);
        matrix_to_vec(&m.complex_structure(q, r[0]))
    }));
    (model, j)
}

impl ManifoldModel for ConeModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Cone
    }

    fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    fn coord_len(&self) -> usize {
        self.base.model().coord_len() + 1
    }

    fn fd(&self) -> FdConfig {
        self.base.model().fd()
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.coord_len() {
            return Err(GeometryError::BadPoint {
                got: p.len(),
                want: self.coord_len(),
            });
        }
        let r = p[p.len() - 1];
        if r >= 0.0 || r.is_nan() {
            return Err(GeometryError::RNotNegative { r });
        }
        Ok(())
    }

    fn metric_at(&self, p: &[f64]) -> Result<MetricMatrix> {
        let (q, r) = self.split(p)?;
        let g = self.base.model().metric_at(q)?;
        MetricMatrix::new(self.assemble(g.components(), &self.base.eta_at(q), r))
    }

    fn commutators_at(&self, p: &[f64]) -> Result<Commutators> {
        let (q, _) = self.split(p)?;
        Ok(self.base.model().commutators_at(q)?.embedded(self.dim(), 0))
    }

    fn frame_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (q, _) = self.split(p)?;
        let e = self.base.model().frame_at(q)?;
        let (rows, cols) = e.shape();
        let mut f = DMatrix::zeros(rows + 1, cols + 1);
        f.view_mut((0, 0), (rows, cols)).copy_from(&e);
        f[(rows, cols)] = 1.0;
        Ok(f)
    }

    fn metric_derivatives(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let (q, r) = self.split(p)?;
        let m = self.base.dim();
        let base_model = self.base.model();
        let g = base_model.metric_at(q)?;
        let eta = self.base.eta_at(q);
        let dg = base_model.metric_derivatives(q)?;
        let deta = derive_field(base_model.as_ref(), q, self.base.eta_field())?;
        let (alpha, _, dalpha, dkappa) = self.metric.coefficients(r);
        let eta_eta = &eta * eta.transpose();
        let mut out = Vec::with_capacity(m + 1);
        for (dgi, detai) in dg.iter().zip(&deta) {
            let de = DVector::from_column_slice(detai);
            let block = dgi * (r * r) + (&de * eta.transpose() + &eta * de.transpose()) * alpha;
            let mut d = DMatrix::zeros(m + 1, m + 1);
            d.view_mut((0, 0), (m, m)).copy_from(&block);
            out.push(d);
        }
        let mut dr = DMatrix::zeros(m + 1, m + 1);
        dr.view_mut((0, 0), (m, m))
            .copy_from(&(g.components() * (2.0 * r) + eta_eta * dalpha));
        dr[(m, m)] = dkappa;
        out.push(dr);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{derive_components, flat_base, product_extension};

    fn cone_metric_derivatives_fd(cone: &ConeModel, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let dim = cone.dim();
        let d = derive_components(cone, p, &|q| {
            Ok(matrix_to_vec(cone.metric_at(q)?.components()))
        })?;
        Ok(d.iter()
            .map(|v| DMatrix::from_row_slice(dim, dim, v))
            .collect())
    }

    fn example1_chartless() -> AccrStructure {
        let (_, s) = product_extension(flat_base(1, FdConfig::default()), &[0.0, 0.0]).unwrap();
        s
    }

    #[test]
    fn j_check_squares_to_minus_identity() {
        let (cone, j) = cone_model(example1_chartless());
        for &r in &[-1.0, -1.5, -0.7] {
            let p = [0.2, 0.1, -0.3, r];
            let jm = DMatrix::from_row_slice(4, 4, &j.eval(&p));
            assert!((&jm * &jm + DMatrix::identity(4, 4)).amax() < 1e-14);
            assert!((cone.complex_structure_at(&p).unwrap() - jm).amax() == 0.0);
        }
    }

    #[test]
    fn cone_metric_values() {
        let (cone, _) = cone_model_with(example1_chartless(), ConeMetric::Displayed);
        let g = cone.metric_at(&[0.0, 0.0, 0.0, -1.5]).unwrap();
        assert!((g.get(0, 0) - 3.25).abs() < 1e-15);
        assert_eq!(g.get(3, 3), -1.0);
        let (cone, _) = cone_model(example1_chartless());
        let g = cone.metric_at(&[0.0, 0.0, 0.0, -1.5]).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert!((g.get(1, 1) - 2.25).abs() < 1e-15);
        assert!((g.get(3, 3) + 1.0 / 2.25).abs() < 1e-15);
        for kind in [ConeMetric::Displayed, ConeMetric::AntiIsometric] {
            let (cone, _) = cone_model_with(example1_chartless(), kind);
            let g = cone.metric_at(&[0.0, 0.0, 0.0, -1.0]).unwrap();
            assert_eq!(g.get(1, 1), 1.0);
            assert_eq!(g.get(2, 2), -1.0);
            assert_eq!(g.get(3, 3), -1.0);
        }
    }

    #[test]
    fn anti_isometry_depends_on_metric() {
        let p = [0.1, -0.2, 0.3, -1.5];
        let defect = |kind| {
            let (cone, j) = cone_model_with(example1_chartless(), kind);
            let jm = DMatrix::from_row_slice(4, 4, &j.eval(&p));
            let g = cone.metric_at(&p).unwrap();
            (jm.transpose() * g.components() * &jm + g.components()).amax()
        };
        assert!(defect(ConeMetric::AntiIsometric) < 1e-12);
        // ǧ(J̌ξ, J̌ξ) = −r² against −ǧ(ξ, ξ) = −(r² + 1)
        assert!((defect(ConeMetric::Displayed) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_negative_r_is_rejected() {
        let (cone, _) = cone_model(example1_chartless());
        assert_eq!(
            cone.metric_at(&[0.0, 0.0, 0.0, 0.5]),
            Err(GeometryError::RNotNegative { r: 0.5 })
        );
    }

    #[test]
    fn analytic_derivatives_match_fd() {
        for kind in [ConeMetric::Displayed, ConeMetric::AntiIsometric] {
            let (cone, _) = cone_model_with(example1_chartless(), kind);
            let p = [0.3, 0.2, -0.1, -1.3];
            let a = cone.metric_derivatives(&p).unwrap();
            let f = cone_metric_derivatives_fd(&cone, &p).unwrap();
            for (x, y) in a.iter().zip(&f) {
                assert!((x - y).amax() < 1e-8);
            }
        }
    }
}
