use std::sync::Arc;

use nalgebra::DMatrix;

use super::{
    derive_components, derive_field, matrix_to_vec, vec_to_matrix, Commutators, FdConfig, Field,
    ManifoldModel, ModelKind,
};
use crate::connection::levi_civita;
use crate::error::{GeometryError, Result};
use crate::frame_algebra::MetricMatrix;
use crate::structure::AccrStructure;

/// Even-dimensional model with an almost complex structure `J` that should be
/// an anti-isometry of `h` and parallel for its Levi-Civita connection.
#[derive(Clone)]
pub struct HolomorphicBase {
    model: Arc<dyn ManifoldModel>,
    j: Field,
    n: usize,
}

impl std::fmt::Debug for HolomorphicBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HolomorphicBase")
            .field("kind", &self.model.kind())
            .field("n", &self.n)
            .field("j", &self.j)
            .finish()
    }
}

/// Residuals of the holomorphic base conditions at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolomorphicResiduals {
    pub j_squared: f64,
    pub anti_isometry: f64,
    pub parallel: f64,
}

impl HolomorphicResiduals {
    pub fn max(&self) -> f64 {
        self.j_squared.max(self.anti_isometry).max(self.parallel)
    }
}

impl HolomorphicBase {
    pub fn new(model: Arc<dyn ManifoldModel>, j: Field, n: usize) -> Result<Self> {
        if model.dim() != 2 * n {
            return Err(GeometryError::DimMismatch {
                left: model.dim(),
                right: 2 * n,
            });
        }
        if let Field::Constant(v) = &j {
            if v.len() != 4 * n * n {
                return Err(GeometryError::DimMismatch {
                    left: v.len(),
                    right: 4 * n * n,
                });
            }
        }
        Ok(HolomorphicBase { model, j, n })
    }

    pub fn model(&self) -> &Arc<dyn ManifoldModel> {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j_field(&self) -> &Field {
        &self.j
    }

    pub fn j_at(&self, p: &[f64]) -> DMatrix<f64> {
        vec_to_matrix(2 * self.n, &self.j.eval(p))
    }

    pub fn h_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.model.metric_at(p)?.components().clone())
    }

    /// Components of `h̃(X, Y) = h(JX, Y)`.
    pub fn h_tilde_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.j_at(p).transpose() * self.h_at(p)?)
    }

    pub fn residuals(&self, p: &[f64]) -> Result<HolomorphicResiduals> {
        let d = 2 * self.n;
        let j = self.j_at(p);
        let h = self.h_at(p)?;
        let j_squared = (&j * &j + DMatrix::identity(d, d)).amax();
        let anti_isometry = (j.transpose() * &h * &j + &h).amax();
        let gamma = levi_civita(self.model.as_ref(), p)?;
        let dj = derive_field(self.model.as_ref(), p, &self.j)?;
        let mut parallel: f64 = 0.0;
        for (i, dji) in dj.iter().enumerate() {
            let gi = gamma.matrix(i);
            let nabla = vec_to_matrix(d, dji) + &gi * &j - &j * &gi;
            parallel = parallel.max(nabla.amax());
        }
        Ok(HolomorphicResiduals {
            j_squared,
            anti_isometry,
            parallel,
        })
    }

    pub fn validate(&self, p: &[f64], tolerance: f64) -> Result<()> {
        let r = self.residuals(p)?;
        if r.max() > tolerance {
            return Err(GeometryError::BaseNotHolomorphic {
                residual: r.max(),
                tolerance,
            });
        }
        Ok(())
    }
}

/// `ℝ × N` with `g = dt² + cos 2t · h − sin 2t · h̃`, frame `(∂t, base frame)`.
#[derive(Debug, Clone)]
pub struct ProductExtension {
    base: HolomorphicBase,
}

impl ProductExtension {
    pub fn base(&self) -> &HolomorphicBase {
        &self.base
    }

    fn split<'a>(&self, p: &'a [f64]) -> Result<(f64, &'a [f64])> {
        self.check_point(p)?;
        Ok((p[0], &p[1..]))
    }

    fn embed(&self, block: &DMatrix<f64>, corner: f64) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        m[(0, 0)] = corner;
        m.view_mut((1, 1), (d - 1, d - 1)).copy_from(block);
        m
    }
}

/// Tolerance for the `∇ʰJ = 0` check performed when building an extension.
pub const HOLOMORPHIC_TOLERANCE: f64 = 1e-6;

/// Builds the extension and its structure `η = dt`, `ξ = ∂t`, `φ|_H = J`.
/// The base is validated at `probe` (its coordinate point).
pub fn product_extension(
    base: HolomorphicBase,
    probe: &[f64],
) -> Result<(Arc<ProductExtension>, AccrStructure)> {
    base.validate(probe, HOLOMORPHIC_TOLERANCE)?;
    let model = Arc::new(ProductExtension { base });
    let dim = model.dim();
    let d = dim - 1;
    let phi = match model.base.j_field() {
        Field::Constant(v) => {
            let j = vec_to_matrix(d, v);
            Field::from_matrix(&model.embed(&j, 0.0))
        }
        Field::Varying(_) => {
            let m = Arc::clone(&model);
            Field::Varying(Arc::new(move |p: &[f64]| {
                let j = m.base.j_at(&p[1..]);
                matrix_to_vec(&m.embed(&j, 0.0))
            }))
        }
    };
    let mut unit = vec![0.0; dim];
    unit[0] = 1.0;
    let structure = AccrStructure::new(
        model.clone(),
        phi,
        Field::Constant(unit.clone()),
        Field::Constant(unit),
    )?;
    Ok((model, structure))
}

impl ManifoldModel for ProductExtension {
    fn kind(&self) -> ModelKind {
        ModelKind::ProductExtension
    }

    fn dim(&self) -> usize {
        self.base.model.dim() + 1
    }

    fn coord_len(&self) -> usize {
        self.base.model.coord_len() + 1
    }

    fn fd(&self) -> FdConfig {
        self.base.model.fd()
    }

    fn metric_at(&self, p: &[f64]) -> Result<MetricMatrix> {
        let (t, q) = self.split(p)?;
        let h = self.base.h_at(q)?;
        let ht = self.base.h_tilde_at(q)?;
        let block = h * (2.0 * t).cos() - ht * (2.0 * t).sin();
        MetricMatrix::new(self.embed(&block, 1.0))
    }

    fn commutators_at(&self, p: &[f64]) -> Result<Commutators> {
        let (_, q) = self.split(p)?;
        Ok(self.base.model.commutators_at(q)?.embedded(self.dim(), 1))
    }

    fn frame_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let (_, q) = self.split(p)?;
        let e = self.base.model.frame_at(q)?;
        let (r, c) = e.shape();
        let mut m = DMatrix::zeros(r + 1, c + 1);
        m[(0, 0)] = 1.0;
        m.view_mut((1, 1), (r, c)).copy_from(&e);
        Ok(m)
    }

    fn metric_derivatives(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let (t, q) = self.split(p)?;
        let d = self.dim() - 1;
        let (c2, s2) = ((2.0 * t).cos(), (2.0 * t).sin());
        let h = self.base.h_at(q)?;
        let ht = self.base.h_tilde_at(q)?;
        let mut out = Vec::with_capacity(d + 1);
        out.push(self.embed(&(&h * (-2.0 * s2) - &ht * (2.0 * c2)), 0.0));
        let base = &self.base;
        let dh = derive_components(base.model.as_ref(), q, &|x| {
            let mut v = matrix_to_vec(&base.h_at(x)?);
            v.extend(matrix_to_vec(&base.h_tilde_at(x)?));
            Ok(v)
        })?;
        for row in dh {
            let (a, b) = row.split_at(d * d);
            let block = vec_to_matrix(d, a) * c2 - vec_to_matrix(d, b) * s2;
            out.push(self.embed(&block, 0.0));
        }
        Ok(out)
    }
}
