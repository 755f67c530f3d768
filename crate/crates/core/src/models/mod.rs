//! Pointwise manifold data: frame metric, frame commutators and directional
//! derivatives of component fields.
//!
//! Every model works in a fixed global frame `{e_0, .., e_{dim-1}}`. Points are
//! plain coordinate slices whose meaning depends on the model kind (empty for
//! Lie groups, `(t, base..)` for product extensions, `(base.., r)` for cones).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::frame_algebra::MetricMatrix;

mod chart;
mod cone;
mod extension;
mod hsphere;
mod lie_group;

pub use chart::{chart_model, ChartModel, CoframeFn, MetricFn};
pub use cone::{cone_model, cone_model_with, ConeMetric, ConeModel};
pub use extension::{
    product_extension, HolomorphicBase, HolomorphicResiduals, ProductExtension,
    HOLOMORPHIC_TOLERANCE,
};
pub use hsphere::{canonical_j, flat_base, hsphere_base, hsphere_embedding, HsphereParams};
pub use lie_group::{lie_group_model, LieGroupModel};

/// Default finite-difference step on coordinates.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LieGroup,
    Chart,
    ProductExtension,
    Cone,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::LieGroup => "lie_group",
            ModelKind::Chart => "chart",
            ModelKind::ProductExtension => "product_extension",
            ModelKind::Cone => "cone",
        };
        f.write_str(s)
    }
}

/// Finite-difference settings shared by all derivative evaluations of a model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub step: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: DEFAULT_FD_STEP,
        }
    }
}

impl FdConfig {
    pub fn with_step(step: f64) -> Self {
        FdConfig { step }
    }

    /// Configuration used for the discretization-error estimate.
    pub fn halved(self) -> Self {
        FdConfig {
            step: self.step * 0.5,
        }
    }
}

/// Frame structure coefficients, `[e_i, e_j] = Σ_k c(i, j, k) e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Commutators {
    dim: usize,
    data: Vec<f64>,
}

impl Commutators {
    pub fn zeros(dim: usize) -> Self {
        Commutators {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    /// Builds from entries `(i, j, k, value)`, filling in `[e_j, e_i] = -[e_i, e_j]`.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut c = Self::zeros(dim);
        for &(i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(GeometryError::BadParams(format!(
                    "commutator index ({i},{j},{k}) out of range for dim {dim}"
                )));
            }
            if i == j && v != 0.0 {
                return Err(GeometryError::NotAntisymmetric { i, j, k });
            }
            c.set(i, j, k, v);
            c.set(j, i, k, -v);
        }
        Ok(c)
    }

    /// Takes a full array and verifies antisymmetry exactly.
    pub fn from_dense(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim * dim {
            return Err(GeometryError::DimMismatch {
                left: data.len(),
                right: dim * dim * dim,
            });
        }
        let c = Commutators { dim, data };
        c.check_antisymmetric()?;
        Ok(c)
    }

    pub fn check_antisymmetric(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    if self.get(i, j, k) != -self.get(j, i, k) {
                        return Err(GeometryError::NotAntisymmetric { i, j, k });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let d = self.dim;
        self.data[(i * d + j) * d + k] = v;
    }

    /// Component vector of `[e_i, e_j]`.
    pub fn bracket(&self, i: usize, j: usize) -> nalgebra::DVector<f64> {
        nalgebra::DVector::from_fn(self.dim, |k, _| self.get(i, j, k))
    }

    /// `max |Σ_cyc [e_i, [e_j, e_k]]|` over all triples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for m in 0..d {
                        let mut s = 0.0;
                        for l in 0..d {
                            s += self.get(j, k, l) * self.get(i, l, m)
                                + self.get(k, i, l) * self.get(j, l, m)
                                + self.get(i, j, l) * self.get(k, l, m);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Embeds into a larger frame, shifting indices by `offset`.
    pub fn embedded(&self, dim: usize, offset: usize) -> Commutators {
        let mut c = Commutators::zeros(dim);
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    c.set(i + offset, j + offset, k + offset, self.get(i, j, k));
                }
            }
        }
        c
    }
}

/// A component field over a model's coordinates.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Frame components of a tensor field; constant fields have vanishing derivatives.
#[derive(Clone)]
pub enum Field {
    Constant(Vec<f64>),
    Varying(FieldFn),
}

impl Field {
    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        match self {
            Field::Constant(v) => v.clone(),
            Field::Varying(f) => f(p),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Field::Constant(_))
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Field::Constant(matrix_to_vec(m))
    }
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Field::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

/// Row-major flattening of a square matrix.
pub fn matrix_to_vec(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn vec_to_matrix(dim: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(dim, dim, v)
}

/// Uniform pointwise access to the geometry of a model in its frame.
pub trait ManifoldModel: Send + Sync {
    fn kind(&self) -> ModelKind;

    fn dim(&self) -> usize;

    /// Number of coordinates a point carries.
    fn coord_len(&self) -> usize;

    fn fd(&self) -> FdConfig;

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.coord_len() {
            return Err(GeometryError::BadPoint {
                got: p.len(),
                want: self.coord_len(),
            });
        }
        Ok(())
    }

    /// Frame components `g(e_i, e_j)`.
    fn metric_at(&self, p: &[f64]) -> Result<MetricMatrix>;

    fn commutators_at(&self, p: &[f64]) -> Result<Commutators>;

    /// Coordinate components of the frame vectors, one column per `e_i`.
    fn frame_at(&self, p: &[f64]) -> Result<DMatrix<f64>>;

    /// `e_i(g_{jk})`, one matrix per direction `i`.
    fn metric_derivatives(&self, p: &[f64]) -> Result<Vec<DMatrix<f64>>> {
        let dim = self.dim();
        let d = derive_components(self, p, &|q| {
            Ok(matrix_to_vec(self.metric_at(q)?.components()))
        })?;
        Ok(d.iter().map(|v| vec_to_matrix(dim, v)).collect())
    }
}

/// Derivatives `e_i(f)` of a vector-valued component function along every frame
/// direction, by central differences on coordinates.
pub fn derive_components<M: ManifoldModel + ?Sized>(
    model: &M,
    p: &[f64],
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    model.check_point(p)?;
    let dim = model.dim();
    let nc = model.coord_len();
    if nc == 0 {
        let len = f(p)?.len();
        return Ok(vec![vec![0.0; len]; dim]);
    }
    let partials = coordinate_partials(p, model.fd().step, f)?;
    let frame = model.frame_at(p)?;
    let len = partials[0].len();
    let mut out = vec![vec![0.0; len]; dim];
    for (i, row) in out.iter_mut().enumerate() {
        for (mu, partial) in partials.iter().enumerate() {
            let e = frame[(mu, i)];
            if e != 0.0 {
                for (o, d) in row.iter_mut().zip(partial) {
                    *o += e * d;
                }
            }
        }
    }
    Ok(out)
}

/// Partial derivatives `∂_μ f` at `p` by the fourth-order central stencil
/// `(−f(x+2h) + 8f(x+h) − 8f(x−h) + f(x−2h)) / 12h`.
pub fn coordinate_partials(
    p: &[f64],
    step: f64,
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let mut q = p.to_vec();
    let mut at = |mu: usize, offset: f64| {
        q[mu] = p[mu] + offset;
        let v = f(&q);
        q[mu] = p[mu];
        v
    };
    (0..p.len())
        .map(|mu| {
            let p2 = at(mu, 2.0 * step)?;
            let p1 = at(mu, step)?;
            let m1 = at(mu, -step)?;
            let m2 = at(mu, -2.0 * step)?;
            Ok((0..p1.len())
                .map(|k| (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k])) / (12.0 * step))
                .collect())
        })
        .collect()
}

/// Directional derivative `e_i(f)` of a scalar field at `p`.
pub fn derive_scalar<M: ManifoldModel + ?Sized>(
    model: &M,
    p: &[f64],
    i: usize,
    f: &dyn Fn(&[f64]) -> f64,
) -> Result<f64> {
    let d = derive_components(model, p, &|q| Ok(vec![f(q)]))?;
    Ok(d[i][0])
}

/// Derivatives of a [`Field`] along every frame direction.
pub fn derive_field<M: ManifoldModel + ?Sized>(
    model: &M,
    p: &[f64],
    field: &Field,
) -> Result<Vec<Vec<f64>>> {
    match field {
        Field::Constant(v) => Ok(vec![vec![0.0; v.len()]; model.dim()]),
        Field::Varying(f) => derive_components(model, p, &|q| Ok(f(q))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutator_entries_fill_antisymmetric_part() {
        let c = Commutators::from_entries(3, &[(0, 1, 2, 1.0), (0, 2, 1, -1.0)]).unwrap();
        assert_eq!(c.get(1, 0, 2), -1.0);
        assert_eq!(c.get(2, 0, 1), 1.0);
        assert!(c.check_antisymmetric().is_ok());
        assert_eq!(c.jacobi_residual(), 0.0);
    }

    #[test]
    fn dense_commutators_must_be_antisymmetric() {
        let mut data = vec![0.0; 8];
        data[1] = 1.0; // [e0,e0] has e1 component
        assert!(matches!(
            Commutators::from_dense(2, data),
            Err(GeometryError::NotAntisymmetric { .. })
        ));
    }

    #[test]
    fn jacobi_violation_is_detected() {
        // [e0,e1]=e2, [e1,e2]=e0, [e0,e2]=e0 violates Jacobi
        let c = Commutators::from_entries(3, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 0, 1.0)])
            .unwrap();
        assert!(c.jacobi_residual() > 0.5);
    }
}
