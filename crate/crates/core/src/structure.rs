//! Almost contact complex Riemannian structures `(φ, ξ, η, g)`: validation,
//! the fundamental tensor `F`, and both Nijenhuis tensors.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::connection::{levi_civita, ConnectionCoefficients};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::{FrameTensor, MetricMatrix};
use crate::models::{derive_field, vec_to_matrix, Commutators, Field, ManifoldModel};

/// An accR structure on a model, with `φ`, `ξ`, `η` as frame-component fields.
#[derive(Clone)]
pub struct AccrStructure {
    model: Arc<dyn ManifoldModel>,
    phi: Field,
    xi: Field,
    eta: Field,
}

impl std::fmt::Debug for AccrStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AccrStructure")
            .field("kind", &self.model.kind())
            .field("dim", &self.model.dim())
            .field("phi", &self.phi)
            .field("xi", &self.xi)
            .field("eta", &self.eta)
            .finish()
    }
}

impl AccrStructure {
    pub fn new(model: Arc<dyn ManifoldModel>, phi: Field, xi: Field, eta: Field) -> Result<Self> {
        let dim = model.dim();
        if dim.is_multiple_of(2) {
            return Err(GeometryError::BadParams(format!(
                "accR structure needs odd dimension, got {dim}"
            )));
        }
        for (len, want) in [
            (constant_len(&phi), dim * dim),
            (constant_len(&xi), dim),
            (constant_len(&eta), dim),
        ] {
            if let Some(len) = len {
                if len != want {
                    return Err(GeometryError::DimMismatch {
                        left: len,
                        right: want,
                    });
                }
            }
        }
        Ok(AccrStructure {
            model,
            phi,
            xi,
            eta,
        })
    }

    pub fn model(&self) -> &Arc<dyn ManifoldModel> {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Half of `dim − 1`.
    pub fn n(&self) -> usize {
        (self.model.dim() - 1) / 2
    }

    pub fn phi_field(&self) -> &Field {
        &self.phi
    }

    pub fn xi_field(&self) -> &Field {
        &self.xi
    }

    pub fn eta_field(&self) -> &Field {
        &self.eta
    }

    /// Matrix of `φ`: column `j` holds the components of `φ e_j`.
    pub fn phi_at(&self, p: &[f64]) -> DMatrix<f64> {
        vec_to_matrix(self.dim(), &self.phi.eval(p))
    }

    pub fn xi_at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.xi.eval(p))
    }

    pub fn eta_at(&self, p: &[f64]) -> DVector<f64> {
        DVector::from_vec(self.eta.eval(p))
    }

    /// Same structure with `φ` replaced, e.g. to probe validation.
    pub fn with_phi(&self, phi: Field) -> Result<Self> {
        AccrStructure::new(self.model.clone(), phi, self.xi.clone(), self.eta.clone())
    }

    /// All pointwise data needed for first-order structure computations.
    pub fn at(&self, p: &[f64]) -> Result<StructureAt> {
        let dim = self.dim();
        let g = self.model.metric_at(p)?;
        let c = self.model.commutators_at(p)?;
        let gamma = levi_civita(self.model.as_ref(), p)?;
        let dphi = derive_field(self.model.as_ref(), p, &self.phi)?
            .into_iter()
            .map(|v| vec_to_matrix(dim, &v))
            .collect();
        let dxi = derive_field(self.model.as_ref(), p, &self.xi)?
            .into_iter()
            .map(DVector::from_vec)
            .collect();
        let deta = derive_field(self.model.as_ref(), p, &self.eta)?
            .into_iter()
            .map(DVector::from_vec)
            .collect();
        Ok(StructureAt {
            dim,
            n: self.n(),
            g,
            c,
            gamma,
            phi: self.phi_at(p),
            dphi,
            xi: self.xi_at(p),
            dxi,
            eta: self.eta_at(p),
            deta,
        })
    }
}

fn constant_len(f: &Field) -> Option<usize> {
    match f {
        Field::Constant(v) => Some(v.len()),
        Field::Varying(_) => None,
    }
}

/// A vector field known at a point through its components and its frame
/// derivatives `e_a(X)`.
#[derive(Debug, Clone)]
pub struct LocalField {
    pub value: DVector<f64>,
    pub derivs: Vec<DVector<f64>>,
}

impl LocalField {
    pub fn constant(value: DVector<f64>) -> Self {
        let dim = value.len();
        LocalField {
            value,
            derivs: vec![DVector::zeros(dim); dim],
        }
    }

    /// Derivative along the vector `v`.
    pub fn along(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.value.len());
        for (a, d) in self.derivs.iter().enumerate() {
            out += d * v[a];
        }
        out
    }
}

/// Snapshot of the structure and its first derivatives at one point.
#[derive(Debug, Clone)]
pub struct StructureAt {
    pub dim: usize,
    pub n: usize,
    pub g: MetricMatrix,
    pub c: Commutators,
    pub gamma: ConnectionCoefficients,
    pub phi: DMatrix<f64>,
    pub dphi: Vec<DMatrix<f64>>,
    pub xi: DVector<f64>,
    pub dxi: Vec<DVector<f64>>,
    pub eta: DVector<f64>,
    pub deta: Vec<DVector<f64>>,
}

impl StructureAt {
    /// Matrix of `∇_{e_i} φ`.
    pub fn nabla_phi(&self, i: usize) -> DMatrix<f64> {
        let gi = self.gamma.matrix(i);
        &self.dphi[i] + &gi * &self.phi - &self.phi * &gi
    }

    /// Components of `∇_{e_i} ξ`.
    pub fn nabla_xi(&self, i: usize) -> DVector<f64> {
        &self.dxi[i] + self.gamma.matrix(i) * &self.xi
    }

    /// Components `(∇_{e_i} η)(e_j)`.
    pub fn nabla_eta(&self, i: usize) -> DVector<f64> {
        &self.deta[i] - self.gamma.matrix(i).transpose() * &self.eta
    }

    /// `P = Id − ξ ⊗ η`, the projector onto `H = ker η`.
    pub fn horizontal_projector(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) - &self.xi * self.eta.transpose()
    }

    /// `g(x, φy)` as a matrix.
    pub fn g_phi(&self) -> DMatrix<f64> {
        self.g.components() * &self.phi
    }

    /// Associated metric `g̃(x, y) = g(x, φy) + η(x)η(y)`.
    pub fn assoc_metric(&self) -> DMatrix<f64> {
        self.g_phi() + &self.eta * self.eta.transpose()
    }

    /// `dη(e_i, e_j) = e_i η(e_j) − e_j η(e_i) − η([e_i, e_j])`.
    pub fn d_eta(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| {
            self.deta[i][j] - self.deta[j][i] - self.c.bracket(i, j).dot(&self.eta)
        })
    }

    pub fn phi_column(&self, i: usize) -> LocalField {
        LocalField {
            value: self.phi.column(i).into_owned(),
            derivs: self.dphi.iter().map(|d| d.column(i).into_owned()).collect(),
        }
    }

    pub fn xi_field(&self) -> LocalField {
        LocalField {
            value: self.xi.clone(),
            derivs: self.dxi.clone(),
        }
    }

    /// `P e_i` as a field, `e_i − η(e_i) ξ`.
    pub fn horizontal_field(&self, i: usize) -> LocalField {
        let mut value = DVector::zeros(self.dim);
        value[i] = 1.0;
        value -= &self.xi * self.eta[i];
        let derivs = (0..self.dim)
            .map(|a| -(&self.dxi[a] * self.eta[i] + &self.xi * self.deta[a][i]))
            .collect();
        LocalField { value, derivs }
    }

    pub fn frame_field(&self, i: usize) -> LocalField {
        let mut value = DVector::zeros(self.dim);
        value[i] = 1.0;
        LocalField::constant(value)
    }

    /// `φ` applied to a field.
    pub fn apply_phi(&self, x: &LocalField) -> LocalField {
        let value = &self.phi * &x.value;
        let derivs = (0..self.dim)
            .map(|a| &self.dphi[a] * &x.value + &self.phi * &x.derivs[a])
            .collect();
        LocalField { value, derivs }
    }

    /// Lie bracket `[X, Y]` from frame derivatives and commutators.
    pub fn bracket(&self, x: &LocalField, y: &LocalField) -> DVector<f64> {
        let mut out = y.along(&x.value) - x.along(&y.value);
        for a in 0..self.dim {
            if x.value[a] == 0.0 {
                continue;
            }
            for b in 0..self.dim {
                if y.value[b] == 0.0 {
                    continue;
                }
                out += self.c.bracket(a, b) * (x.value[a] * y.value[b]);
            }
        }
        out
    }

    /// Frame coefficients of the symmetric bracket `{e_a, e_b}` from the
    /// expansion `g({x,y},z) = x g(y,z) + y g(x,z) − z g(x,y) − g([y,z],x) + g([z,x],y)`.
    pub fn symmetric_bracket_frame(&self, dg: &[DMatrix<f64>]) -> Vec<DVector<f64>> {
        let d = self.dim;
        let g = self.g.components();
        let mut out = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let lowered = DVector::from_fn(d, |k, _| {
                    dg[a][(b, k)] + dg[b][(a, k)]
                        - dg[k][(a, b)]
                        - self.c.bracket(b, k).dot(&g.column(a))
                        + self.c.bracket(k, a).dot(&g.column(b))
                });
                out.push(self.g.raise(&lowered));
            }
        }
        out
    }

    /// Symmetric bracket `{X, Y}` of fields.
    pub fn symmetric_bracket(
        &self,
        frame: &[DVector<f64>],
        x: &LocalField,
        y: &LocalField,
    ) -> DVector<f64> {
        let mut out = y.along(&x.value) + x.along(&y.value);
        for a in 0..self.dim {
            for b in 0..self.dim {
                let w = x.value[a] * y.value[b];
                if w != 0.0 {
                    out += &frame[a * self.dim + b] * w;
                }
            }
        }
        out
    }
}

/// Residuals of the algebraic accR axioms at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureResiduals {
    pub phi_xi: f64,
    pub phi_squared: f64,
    pub eta_phi: f64,
    pub eta_xi: f64,
    pub compatibility: f64,
    pub assoc_symmetry: f64,
    pub signature_g: (usize, usize),
    pub signature_assoc: (usize, usize),
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        [
            self.phi_xi,
            self.phi_squared,
            self.eta_phi,
            self.eta_xi,
            self.compatibility,
            self.assoc_symmetry,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn signatures_ok(&self, n: usize) -> bool {
        self.signature_g == (n + 1, n) && self.signature_assoc == (n + 1, n)
    }
}

pub fn validate_structure(s: &AccrStructure, p: &[f64]) -> Result<StructureResiduals> {
    let dim = s.dim();
    let g = s.model().metric_at(p)?;
    let phi = s.phi_at(p);
    let xi = s.xi_at(p);
    let eta = s.eta_at(p);
    let id = DMatrix::<f64>::identity(dim, dim);
    let gm = g.components();
    let eta_eta = &eta * eta.transpose();
    let compat = phi.transpose() * gm * &phi + gm - &eta_eta;
    let assoc = gm * &phi + &eta_eta;
    let assoc_symmetry = (&assoc - assoc.transpose()).amax();
    let sym = (&assoc + assoc.transpose()) * 0.5;
    let signature_assoc =
        nalgebra::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .fold(
                (0, 0),
                |(p, q), &l| if l > 0.0 { (p + 1, q) } else { (p, q + 1) },
            );
    Ok(StructureResiduals {
        phi_xi: (&phi * &xi).amax(),
        phi_squared: (&phi * &phi + &id - &xi * eta.transpose()).amax(),
        eta_phi: (phi.transpose() * &eta).amax(),
        eta_xi: (eta.dot(&xi) - 1.0).abs(),
        compatibility: compat.amax(),
        assoc_symmetry,
        signature_g: g.signature_counts(),
        signature_assoc,
    })
}

/// `F(x,y,z) = g((∇_x φ)y, z)` with the 1-forms `θ`, `θ*`.
#[derive(Debug, Clone)]
pub struct FundamentalTensor {
    pub f: FrameTensor,
    pub theta: DVector<f64>,
    pub theta_star: DVector<f64>,
}

impl FundamentalTensor {
    /// `max |F(x,y,z) − F(x,z,y)|`.
    pub fn symmetry_residual(&self) -> f64 {
        self.f.pair_symmetry_defect(1, 2, 1.0)
    }

    /// `max |F(x,y,z) − F(x,φy,φz) − η(y)F(x,ξ,z) − η(z)F(x,y,ξ)|`.
    pub fn phi_invariance_residual(&self, at: &StructureAt) -> f64 {
        let f = &self.f;
        let both = f.map_slot(1, &at.phi).map_slot(2, &at.phi);
        let d = at.dim;
        let mut worst: f64 = 0.0;
        for x in 0..d {
            for y in 0..d {
                for z in 0..d {
                    let mut f_xi_z = 0.0;
                    let mut f_y_xi = 0.0;
                    for a in 0..d {
                        f_xi_z += at.xi[a] * f.get(&[x, a, z]);
                        f_y_xi += at.xi[a] * f.get(&[x, y, a]);
                    }
                    let r = f.get(&[x, y, z])
                        - both.get(&[x, y, z])
                        - at.eta[y] * f_xi_z
                        - at.eta[z] * f_y_xi;
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// `max |θ*(φz) + θ(φ²z)|`.
    pub fn theta_relation_residual(&self, at: &StructureAt) -> f64 {
        let lhs = at.phi.transpose() * &self.theta_star;
        let rhs = (&at.phi * &at.phi).transpose() * &self.theta;
        (lhs + rhs).amax()
    }
}

pub fn fundamental_f_at(at: &StructureAt) -> FundamentalTensor {
    let d = at.dim;
    let gm = at.g.components();
    let lowered: Vec<DMatrix<f64>> = (0..d).map(|i| gm * at.nabla_phi(i)).collect();
    let f = FrameTensor::covariant_from_fn(d, 3, |idx| lowered[idx[0]][(idx[2], idx[1])]);
    let ginv = at.g.inverse_components();
    let f_xixi = f.insert_vector(0, &at.xi).insert_vector(0, &at.xi);
    let f_phi = f.map_slot(1, &at.phi);
    let mut theta = DVector::zeros(d);
    let mut theta_star = DVector::zeros(d);
    for z in 0..d {
        let mut t = 0.0;
        let mut ts = 0.0;
        for i in 0..d {
            for j in 0..d {
                let w = ginv[(i, j)];
                if w != 0.0 {
                    t += w * f.get(&[i, j, z]);
                    ts += w * f_phi.get(&[i, j, z]);
                }
            }
        }
        theta[z] = t - f_xixi.get(&[z]);
        theta_star[z] = ts;
    }
    FundamentalTensor {
        f,
        theta,
        theta_star,
    }
}

pub fn fundamental_f(s: &AccrStructure, p: &[f64]) -> Result<FundamentalTensor> {
    Ok(fundamental_f_at(&s.at(p)?))
}

/// Residuals of `(∇_x η)y = g(∇_x ξ, y) = F(x, φy, ξ)`.
pub fn xi_eta_relation_residual(at: &StructureAt, ft: &FundamentalTensor) -> f64 {
    let d = at.dim;
    let f_phi_xi = ft.f.map_slot(1, &at.phi).insert_vector(2, &at.xi);
    let mut worst: f64 = 0.0;
    for x in 0..d {
        let ne = at.nabla_eta(x);
        let nx = at.g.lower(&at.nabla_xi(x));
        for y in 0..d {
            let f = f_phi_xi.get(&[x, y]);
            worst = worst.max((ne[y] - f).abs()).max((nx[y] - f).abs());
        }
    }
    worst
}

/// `N` and `N̂` by the bracket route (A) and from `F` (B).
#[derive(Debug, Clone)]
pub struct NijenhuisPair {
    pub n_brackets: FrameTensor,
    pub n_hat_brackets: FrameTensor,
    pub n_from_f: FrameTensor,
    pub n_hat_from_f: FrameTensor,
}

impl NijenhuisPair {
    pub fn route_gap(&self) -> f64 {
        let a = self
            .n_brackets
            .max_diff(&self.n_from_f)
            .unwrap_or(f64::INFINITY);
        let b = self
            .n_hat_brackets
            .max_diff(&self.n_hat_from_f)
            .unwrap_or(f64::INFINITY);
        a.max(b)
    }
}

fn lower_vectors(at: &StructureAt, vectors: &[DVector<f64>]) -> FrameTensor {
    let d = at.dim;
    let lowered: Vec<DVector<f64>> = vectors.iter().map(|v| at.g.lower(v)).collect();
    FrameTensor::covariant_from_fn(d, 3, |idx| lowered[idx[0] * d + idx[1]][idx[2]])
}

pub fn nijenhuis_brackets(at: &StructureAt, dg: &[DMatrix<f64>]) -> (FrameTensor, FrameTensor) {
    let d = at.dim;
    let deta = at.d_eta();
    let sym = at.symmetric_bracket_frame(dg);
    let xi = at.xi_field();
    let phi2 = &at.phi * &at.phi;
    let mut n_vec = Vec::with_capacity(d * d);
    let mut n_hat_vec = Vec::with_capacity(d * d);
    for i in 0..d {
        let x = at.frame_field(i);
        let px = at.phi_column(i);
        for j in 0..d {
            let y = at.frame_field(j);
            let py = at.phi_column(j);
            let n = at.bracket(&px, &py) + &phi2 * at.bracket(&x, &y)
                - &at.phi * at.bracket(&px, &y)
                - &at.phi * at.bracket(&x, &py)
                + &at.xi * deta[(i, j)];
            // (L_ξ g)(x, y) = ξ g(x, y) − g([ξ, x], y) − g(x, [ξ, y])
            let mut xi_g = 0.0;
            for (a, dga) in dg.iter().enumerate() {
                xi_g += at.xi[a] * dga[(i, j)];
            }
            let lie_g = xi_g
                - at.g.apply(&at.bracket(&xi, &x), &y.value)
                - at.g.apply(&x.value, &at.bracket(&xi, &y));
            let n_hat = at.symmetric_bracket(&sym, &px, &py)
                + &phi2 * at.symmetric_bracket(&sym, &x, &y)
                - &at.phi * at.symmetric_bracket(&sym, &px, &y)
                - &at.phi * at.symmetric_bracket(&sym, &x, &py)
                + &at.xi * lie_g;
            n_vec.push(n);
            n_hat_vec.push(n_hat);
        }
    }
    (lower_vectors(at, &n_vec), lower_vectors(at, &n_hat_vec))
}

/// `N` and `N̂` expressed through `F`.
pub fn nijenhuis_from_f(at: &StructureAt, f: &FrameTensor) -> (FrameTensor, FrameTensor) {
    let f_phi_x = f.map_slot(0, &at.phi);
    let f_phi_z = f.map_slot(2, &at.phi);
    let f_y_xi = f.insert_vector(2, &at.xi).map_slot(1, &at.phi);
    let d = at.dim;
    let n = FrameTensor::covariant_from_fn(d, 3, |idx| {
        let (x, y, z) = (idx[0], idx[1], idx[2]);
        f_phi_x.get(&[x, y, z]) - f_phi_x.get(&[y, x, z]) - f_phi_z.get(&[x, y, z])
            + f_phi_z.get(&[y, x, z])
            + at.eta[z] * (f_y_xi.get(&[x, y]) - f_y_xi.get(&[y, x]))
    });
    let n_hat = FrameTensor::covariant_from_fn(d, 3, |idx| {
        let (x, y, z) = (idx[0], idx[1], idx[2]);
        f_phi_x.get(&[x, y, z]) + f_phi_x.get(&[y, x, z])
            - f_phi_z.get(&[x, y, z])
            - f_phi_z.get(&[y, x, z])
            + at.eta[z] * (f_y_xi.get(&[x, y]) + f_y_xi.get(&[y, x]))
    });
    (n, n_hat)
}

pub fn nijenhuis_at(at: &StructureAt, dg: &[DMatrix<f64>], f: &FrameTensor) -> NijenhuisPair {
    let (n_brackets, n_hat_brackets) = nijenhuis_brackets(at, dg);
    let (n_from_f, n_hat_from_f) = nijenhuis_from_f(at, f);
    NijenhuisPair {
        n_brackets,
        n_hat_brackets,
        n_from_f,
        n_hat_from_f,
    }
}

pub fn nijenhuis(s: &AccrStructure, p: &[f64]) -> Result<NijenhuisPair> {
    let at = s.at(p)?;
    let dg = s.model().metric_derivatives(p)?;
    let ft = fundamental_f_at(&at);
    Ok(nijenhuis_at(&at, &dg, &ft.f))
}

/// Right-hand side of the expression of `F` through `N` and `N̂`.
pub fn f_from_nijenhuis(at: &StructureAt, n: &FrameTensor, n_hat: &FrameTensor) -> FrameTensor {
    let d = at.dim;
    let n_phi = n.map_slot(0, &at.phi);
    let nh_phi = n_hat.map_slot(0, &at.phi);
    let n_xi = n.insert_vector(0, &at.xi).map_slot(1, &at.phi);
    let nh_xi = n_hat.insert_vector(0, &at.xi).map_slot(1, &at.phi);
    let nh_xixi = n_hat
        .insert_vector(0, &at.xi)
        .insert_vector(0, &at.xi)
        .map_slot(0, &at.phi);
    FrameTensor::covariant_from_fn(d, 3, |idx| {
        let (x, y, z) = (idx[0], idx[1], idx[2]);
        -0.25
            * (n_phi.get(&[x, y, z])
                + n_phi.get(&[x, z, y])
                + nh_phi.get(&[x, y, z])
                + nh_phi.get(&[x, z, y]))
            + 0.5
                * at.eta[x]
                * (n_xi.get(&[y, z]) + nh_xi.get(&[y, z]) + at.eta[z] * nh_xixi.get(&[y]))
    })
}

pub fn theorem_3_4_residual(s: &AccrStructure, p: &[f64]) -> Result<f64> {
    let at = s.at(p)?;
    let dg = s.model().metric_derivatives(p)?;
    let ft = fundamental_f_at(&at);
    let (n, n_hat) = nijenhuis_brackets(&at, &dg);
    f_from_nijenhuis(&at, &n, &n_hat).max_diff(&ft.f)
}

/// `max_z |F(ξ,ξ,z) − ½ N̂(ξ,ξ,φz)|`.
pub fn f_xi_xi_residual(at: &StructureAt, f: &FrameTensor, n_hat: &FrameTensor) -> f64 {
    let lhs = f.insert_vector(0, &at.xi).insert_vector(0, &at.xi);
    let rhs = n_hat
        .insert_vector(0, &at.xi)
        .insert_vector(0, &at.xi)
        .map_slot(0, &at.phi)
        .scale(0.5);
    lhs.max_diff(&rhs).unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::lie_group_model;

    fn example1(n: usize) -> AccrStructure {
        let dim = 2 * n + 1;
        let mut entries = Vec::new();
        for i in 1..=n {
            entries.push((0, i, n + i, 1.0));
            entries.push((0, n + i, i, -1.0));
        }
        let c = Commutators::from_entries(dim, &entries).unwrap();
        let mut diag = vec![1.0; n + 1];
        diag.extend(std::iter::repeat_n(-1.0, n));
        let g = MetricMatrix::diagonal(&diag).unwrap();
        let model = lie_group_model(n, c, g).unwrap();
        let mut phi = DMatrix::zeros(dim, dim);
        for i in 1..=n {
            phi[(n + i, i)] = 1.0;
            phi[(i, n + i)] = -1.0;
        }
        let mut xi = vec![0.0; dim];
        xi[0] = 1.0;
        AccrStructure::new(
            Arc::new(model),
            Field::from_matrix(&phi),
            Field::Constant(xi.clone()),
            Field::Constant(xi),
        )
        .unwrap()
    }

    #[test]
    fn example1_axioms_hold_exactly() {
        let s = example1(2);
        let r = validate_structure(&s, &[]).unwrap();
        assert_eq!(r.max(), 0.0);
        assert!(r.signatures_ok(2));
    }

    #[test]
    fn perturbed_phi_is_reported() {
        let s = example1(1);
        let mut phi = s.phi_at(&[]);
        phi[(2, 1)] += 1e-3;
        let bad = s.with_phi(Field::from_matrix(&phi)).unwrap();
        let r = validate_structure(&bad, &[]).unwrap();
        assert!((r.phi_squared - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn example1_f_values() {
        for n in 1..=3 {
            let s = example1(n);
            let ft = fundamental_f(&s, &[]).unwrap();
            assert!((ft.f.get(&[1, 1, 0]) + 1.0).abs() < 1e-14);
            assert!((ft.theta[0] + 2.0 * n as f64).abs() < 1e-14);
            assert!(ft.theta_star.amax() < 1e-14);
        }
    }

    #[test]
    fn example1_nijenhuis_values_both_routes() {
        let s = example1(1);
        let nj = nijenhuis(&s, &[]).unwrap();
        assert!(nj.n_brackets.max_abs() < 1e-14);
        assert!(nj.n_hat_brackets.get(&[1, 1, 0]).abs() < 1e-14);
        assert!((nj.n_hat_brackets.get(&[1, 2, 0]) - 4.0).abs() < 1e-14);
        assert!(nj.route_gap() < 1e-14);
    }

    #[test]
    fn symmetric_bracket_equals_sum_of_connections() {
        let s = example1(2);
        let at = s.at(&[]).unwrap();
        let dg = s.model().metric_derivatives(&[]).unwrap();
        let sym = at.symmetric_bracket_frame(&dg);
        let d = at.dim;
        for a in 0..d {
            for b in 0..d {
                let want = at.gamma.vector(a, b) + at.gamma.vector(b, a);
                assert!((&sym[a * d + b] - want).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn theorem_residual_vanishes_on_example1() {
        assert!(theorem_3_4_residual(&example1(1), &[]).unwrap() < 1e-12);
    }
}
