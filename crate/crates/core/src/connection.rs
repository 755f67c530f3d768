//! Levi-Civita connection by the Koszul formula in a frame, curvature, traces,
//! the Gauss comparator and the closed-form curvature of h-spheres.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::frame_algebra::{kulkarni_nomizu, FrameTensor, MetricMatrix, MultiIndex};
use crate::models::{derive_components, Commutators, ManifoldModel};

/// `∇_{e_i} e_j = Σ_k Γ(i, j, k) e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    dim: usize,
    data: Vec<f64>,
}

impl ConnectionCoefficients {
    pub fn from_data(dim: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim * dim * dim);
        ConnectionCoefficients { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    /// Components of `∇_{e_i} e_j`.
    pub fn vector(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| self.get(i, j, k))
    }

    /// Matrix of `∇_{e_i}` acting on frame components; column `j` is `∇_{e_i} e_j`.
    pub fn matrix(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |k, j| self.get(i, j, k))
    }

    /// `max |Γ(i,j,·) − Γ(j,i,·) − [e_i, e_j]|`.
    pub fn torsion_residual(&self, c: &Commutators) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let r = self.get(i, j, k) - self.get(j, i, k) - c.get(i, j, k);
                    worst = worst.max(r.abs());
                }
            }
        }
        worst
    }

    /// `max |e_i g(e_j,e_k) − g(∇_i e_j, e_k) − g(e_j, ∇_i e_k)|`.
    pub fn metric_compat_residual(&self, g: &MetricMatrix, dg: &[DMatrix<f64>]) -> f64 {
        let gm = g.components();
        let mut worst: f64 = 0.0;
        for (i, dgi) in dg.iter().enumerate() {
            let gi = self.matrix(i);
            let lhs = gi.transpose() * gm + gm * &gi;
            worst = worst.max((dgi - lhs).amax());
        }
        worst
    }
}

/// Lowered Koszul values `L(i,j,k) = g(∇_{e_i} e_j, e_k)`.
pub fn koszul_lowered(g: &MetricMatrix, dg: &[DMatrix<f64>], c: &Commutators) -> Vec<f64> {
    let d = g.dim();
    let gm = g.components();
    let cg =
        |a: usize, b: usize, e: usize| -> f64 { (0..d).map(|m| c.get(a, b, m) * gm[(m, e)]).sum() };
    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let v = dg[i][(j, k)] + dg[j][(k, i)] - dg[k][(i, j)] + cg(i, j, k) - cg(j, k, i)
                    + cg(k, i, j);
                out[(i * d + j) * d + k] = 0.5 * v;
            }
        }
    }
    out
}

pub fn connection_from(
    g: &MetricMatrix,
    dg: &[DMatrix<f64>],
    c: &Commutators,
) -> ConnectionCoefficients {
    let d = g.dim();
    let low = koszul_lowered(g, dg, c);
    let ginv = g.inverse_components();
    let mut data = vec![0.0; d * d * d];
    for i in 0..d {
        for j in 0..d {
            for l in 0..d {
                let mut s = 0.0;
                for k in 0..d {
                    s += ginv[(l, k)] * low[(i * d + j) * d + k];
                }
                data[(i * d + j) * d + l] = s;
            }
        }
    }
    ConnectionCoefficients { dim: d, data }
}

pub fn levi_civita<M: ManifoldModel + ?Sized>(
    model: &M,
    p: &[f64],
) -> Result<ConnectionCoefficients> {
    let g = model.metric_at(p)?;
    let dg = model.metric_derivatives(p)?;
    let c = model.commutators_at(p)?;
    Ok(connection_from(&g, &dg, &c))
}

/// Curvature `R(x,y,z,u) = g(R(x,y)z, u)` with `R = [∇, ∇] − ∇_{[,]}` and its traces.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub r: FrameTensor,
    pub ric: FrameTensor,
    pub scal: f64,
    pub scal_star: Option<f64>,
}

/// `(0,4)` curvature from connection coefficients and their frame derivatives.
pub fn curvature_from(
    g: &MetricMatrix,
    gamma: &ConnectionCoefficients,
    dgamma: &[Vec<f64>],
    c: &Commutators,
) -> FrameTensor {
    let d = g.dim();
    let gm = g.components();
    let idx = |i: usize, j: usize, k: usize| (i * d + j) * d + k;
    let mut upper = vec![0.0; d * d * d * d];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let mut v = dgamma[i][idx(j, k, l)] - dgamma[j][idx(i, k, l)];
                    for m in 0..d {
                        v += gamma.get(j, k, m) * gamma.get(i, m, l)
                            - gamma.get(i, k, m) * gamma.get(j, m, l)
                            - c.get(i, j, m) * gamma.get(m, k, l);
                    }
                    upper[((i * d + j) * d + k) * d + l] = v;
                }
            }
        }
    }
    FrameTensor::covariant_from_fn(d, 4, |x| {
        (0..d)
            .map(|l| gm[(x[3], l)] * upper[((x[0] * d + x[1]) * d + x[2]) * d + l])
            .sum()
    })
}

/// `Ric(y, z) = g^{ij} R(e_i, y, z, e_j)`.
pub fn ricci(r: &FrameTensor, g: &MetricMatrix) -> FrameTensor {
    let d = g.dim();
    let ginv = g.inverse_components();
    FrameTensor::covariant_from_fn(d, 2, |x| {
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                let w = ginv[(i, j)];
                if w != 0.0 {
                    s += w * r.get(&[i, x[0], x[1], j]);
                }
            }
        }
        s
    })
}

/// `g^{ij} t(e_i, e_j)`.
pub fn metric_trace(t: &FrameTensor, g: &MetricMatrix) -> f64 {
    let ginv = g.inverse_components();
    let d = g.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += ginv[(i, j)] * t.get(&[i, j]);
        }
    }
    s
}

/// `g^{ij} Ric(e_i, φ e_j)`.
pub fn star_trace(ric: &FrameTensor, g: &MetricMatrix, phi: &DMatrix<f64>) -> f64 {
    metric_trace(&ric.map_slot(1, phi), g)
}

pub fn curvature_bundle(
    g: &MetricMatrix,
    r: FrameTensor,
    phi: Option<&DMatrix<f64>>,
) -> CurvatureBundle {
    let ric = ricci(&r, g);
    let scal = metric_trace(&ric, g);
    let scal_star = phi.map(|phi| star_trace(&ric, g, phi));
    CurvatureBundle {
        r,
        ric,
        scal,
        scal_star,
    }
}

/// Full curvature at `p`; `Γ` is differentiated numerically on non-homogeneous
/// models and exactly zero on Lie groups.
pub fn riemann<M: ManifoldModel + ?Sized>(
    model: &M,
    p: &[f64],
    phi: Option<&DMatrix<f64>>,
) -> Result<CurvatureBundle> {
    let g = model.metric_at(p)?;
    let c = model.commutators_at(p)?;
    let gamma = levi_civita(model, p)?;
    let dgamma = derive_components(model, p, &|q| Ok(levi_civita(model, q)?.data))?;
    let r = curvature_from(&g, &gamma, &dgamma, &c);
    Ok(curvature_bundle(&g, r, phi))
}

/// Residuals of the algebraic curvature symmetries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals {
    pub first_pair: f64,
    pub last_pair: f64,
    pub interchange: f64,
    pub bianchi: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.first_pair
            .max(self.last_pair)
            .max(self.interchange)
            .max(self.bianchi)
    }
}

pub fn curvature_symmetries(r: &FrameTensor) -> SymmetryResiduals {
    let d = r.dim();
    let mut interchange: f64 = 0.0;
    let mut bianchi: f64 = 0.0;
    for x in MultiIndex::new(d, 4) {
        let (a, b, c, e) = (x[0], x[1], x[2], x[3]);
        interchange = interchange.max((r.get(&x) - r.get(&[c, e, a, b])).abs());
        let cyc = r.get(&x) + r.get(&[b, c, a, e]) + r.get(&[c, a, b, e]);
        bianchi = bianchi.max(cyc.abs());
    }
    SymmetryResiduals {
        first_pair: r.pair_symmetry_defect(0, 1, -1.0),
        last_pair: r.pair_symmetry_defect(2, 3, -1.0),
        interchange,
        bianchi,
    }
}

/// Closed-form curvature data of the h-sphere in a canonical frame of
/// `ℝ^{2n}` (`h' = diag(1..1, −1..−1)`, `J e_j = e_{n+j}`).
#[derive(Debug, Clone)]
pub struct HsphereCurvature {
    pub pi1: FrameTensor,
    pub pi2: FrameTensor,
    pub pi3: FrameTensor,
    pub r: FrameTensor,
    pub ric: FrameTensor,
    pub scal: f64,
}

/// `π₁ = ½ h⊙h`, `π₂ = ½ h̃⊙h̃`, `π₃ = −h⊙h̃` for symmetric `h`, `h̃`.
pub fn pi_tensors(
    h: &FrameTensor,
    ht: &FrameTensor,
) -> Result<(FrameTensor, FrameTensor, FrameTensor)> {
    Ok((
        kulkarni_nomizu(h, h)?.scale(0.5),
        kulkarni_nomizu(ht, ht)?.scale(0.5),
        kulkarni_nomizu(h, ht)?.scale(-1.0),
    ))
}

/// `(a(π₁ − π₂) − bπ₃)/(a² + b²)` built on arbitrary `h`, `h̃`.
pub fn hsphere_curvature_with(
    a: f64,
    b: f64,
    h: &FrameTensor,
    ht: &FrameTensor,
) -> Result<FrameTensor> {
    if a == 0.0 && b == 0.0 {
        return Err(crate::error::GeometryError::DegenerateParameters);
    }
    let (pi1, pi2, pi3) = pi_tensors(h, ht)?;
    let s = a * a + b * b;
    pi1.sub(&pi2)?.scale(a / s).sub(&pi3.scale(b / s))
}

pub fn hsphere_curvature(n: usize, a: f64, b: f64) -> Result<HsphereCurvature> {
    let params = crate::models::HsphereParams::new(n, a, b)?;
    let mut diag = vec![1.0; n];
    diag.extend(std::iter::repeat_n(-1.0, n));
    let hm = DMatrix::from_diagonal(&DVector::from_vec(diag));
    let j = crate::models::canonical_j(n);
    let htm = j.transpose() * &hm;
    let h = FrameTensor::from_matrix(&hm);
    let ht = FrameTensor::from_matrix(&htm);
    let (pi1, pi2, pi3) = pi_tensors(&h, &ht)?;
    let r = hsphere_curvature_with(params.a, params.b, &h, &ht)?;
    let s = a * a + b * b;
    let k = 2.0 * (n as f64 - 1.0) / s;
    let ric = FrameTensor::from_matrix(&((&hm * a + &htm * b) * k));
    let scal = 4.0 * n as f64 * (n as f64 - 1.0) * a / s;
    Ok(HsphereCurvature {
        pi1,
        pi2,
        pi3,
        r,
        ric,
        scal,
    })
}

/// `max |R(X,Y,Z,U) − R^h(X,Y,Z,U) − g(φX,Z)g(φY,U) + g(φY,Z)g(φX,U)|` on
/// horizontal projections of frame vectors. `rh` is the horizontal curvature
/// in the same frame.
pub fn gauss_residual_with(
    r: &FrameTensor,
    rh: &FrameTensor,
    g: &MetricMatrix,
    phi: &DMatrix<f64>,
    proj: &DMatrix<f64>,
) -> Result<f64> {
    let gphi = FrameTensor::from_matrix(&(g.components() * phi).transpose());
    let d = g.dim();
    let corr = FrameTensor::covariant_from_fn(d, 4, |x| {
        gphi.get(&[x[0], x[2]]) * gphi.get(&[x[1], x[3]])
            - gphi.get(&[x[1], x[2]]) * gphi.get(&[x[0], x[3]])
    });
    let lhs = project_all(r, proj);
    let rhs = project_all(&rh.add(&corr)?, proj);
    lhs.max_diff(&rhs)
}

/// Applies `proj` to every slot of a covariant tensor.
pub fn project_all(t: &FrameTensor, proj: &DMatrix<f64>) -> FrameTensor {
    (0..t.rank()).fold(t.clone(), |acc, s| acc.map_slot(s, proj))
}

/// Gauss comparator on a structure that is checked to be Sasaki-like.
pub fn gauss_residual(
    s: &crate::structure::AccrStructure,
    p: &[f64],
    rh: &FrameTensor,
    sasaki_tolerance: f64,
) -> Result<f64> {
    let defining = crate::sasaki::check_defining_conditions(s, p)?;
    if defining.max() > sasaki_tolerance {
        return Err(crate::error::GeometryError::NotSasakiLike {
            residual: defining.max(),
        });
    }
    let at = s.at(p)?;
    let bundle = riemann(s.model().as_ref(), p, Some(&at.phi))?;
    gauss_residual_with(&bundle.r, rh, &at.g, &at.phi, &at.horizontal_projector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame_algebra::trace_with_signature;
    use crate::frame_algebra::Signature;
    use crate::models::lie_group_model;

    fn example1_model(n: usize) -> crate::models::LieGroupModel {
        let dim = 2 * n + 1;
        let mut entries = Vec::new();
        for i in 1..=n {
            entries.push((0, i, n + i, 1.0));
            entries.push((0, n + i, i, -1.0));
        }
        let c = Commutators::from_entries(dim, &entries).unwrap();
        let mut diag = vec![1.0; n + 1];
        diag.extend(std::iter::repeat_n(-1.0, n));
        lie_group_model(n, c, MetricMatrix::diagonal(&diag).unwrap()).unwrap()
    }

    #[test]
    fn flat_abelian_has_no_connection() {
        let g = MetricMatrix::diagonal(&[1.0, 1.0, -1.0]).unwrap();
        let m = lie_group_model(1, Commutators::zeros(3), g).unwrap();
        let gamma = levi_civita(&m, &[]).unwrap();
        assert!(gamma.data().iter().all(|&x| x == 0.0));
        let b = riemann(&m, &[], None).unwrap();
        assert_eq!(b.r.max_abs(), 0.0);
        assert_eq!(b.scal, 0.0);
    }

    #[test]
    fn example1_connection_by_hand() {
        // hand Koszul: 2g(∇_1 e_0, e_2) = g([e_2,e_1],e_0)... gives ∇_1 e_0 = −e_2
        let m = example1_model(1);
        let gamma = levi_civita(&m, &[]).unwrap();
        assert_eq!(gamma.vector(1, 0), DVector::from_vec(vec![0.0, 0.0, -1.0]));
        assert_eq!(gamma.vector(1, 2), DVector::from_vec(vec![-1.0, 0.0, 0.0]));
        let c = m.commutators_at(&[]).unwrap();
        assert_eq!(gamma.torsion_residual(&c), 0.0);
    }

    #[test]
    fn example1_curvature_values() {
        for n in 1..=3 {
            let m = example1_model(n);
            let b = riemann(&m, &[], None).unwrap();
            assert!((b.r.get(&[1, n + 1, n + 1, 1]) - 1.0).abs() < 1e-14);
            assert!((b.ric.get(&[0, 0]) - 2.0 * n as f64).abs() < 1e-14);
            let sig = Signature::standard(n);
            assert!((trace_with_signature(&b.ric, &sig) - 2.0 * n as f64).abs() < 1e-14);
            assert!(curvature_symmetries(&b.r).max() < 1e-14);
        }
    }

    #[test]
    fn hsphere_scalar_and_symmetries() {
        let k = hsphere_curvature(2, 1.0, 0.0).unwrap();
        assert_eq!(k.scal, 8.0);
        assert!(curvature_symmetries(&k.r).max() < 1e-12);
        let k = hsphere_curvature(2, 3.0, 4.0).unwrap();
        assert!((k.scal - 0.96).abs() < 1e-15);
        // contraction of the closed-form R reproduces the closed-form Ric and Scal
        let mut diag = vec![1.0; 2];
        diag.extend([-1.0, -1.0]);
        let h = MetricMatrix::diagonal(&diag).unwrap();
        let ric = ricci(&k.r, &h);
        assert!(ric.max_diff(&k.ric).unwrap() < 1e-14);
        assert!((metric_trace(&ric, &h) - k.scal).abs() < 1e-14);
    }

    #[test]
    fn kotelnikov_study_sphere_is_pi1_minus_pi2() {
        let k = hsphere_curvature(3, 1.0, 0.0).unwrap();
        let want = k.pi1.sub(&k.pi2).unwrap();
        assert!(k.r.max_diff(&want).unwrap() < 1e-15);
    }
}
