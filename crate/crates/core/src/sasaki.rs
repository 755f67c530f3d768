//! Sasaki-like certification: the defining conditions on `F`, the `∇φ` and
//! Nijenhuis forms, their consequences, cone holomorphicity and the curvature
//! identities along `ξ`.

use nalgebra::{DMatrix, DVector};

use crate::connection::{levi_civita, project_all, riemann, CurvatureBundle};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::FrameTensor;
use crate::models::{
    cone_model, cone_model_with, derive_field, vec_to_matrix, ConeMetric, ManifoldModel,
};
use crate::structure::{
    fundamental_f_at, nijenhuis_brackets, AccrStructure, FundamentalTensor, LocalField, StructureAt,
};

/// Residuals of `F(X,Y,Z) = F(ξ,Y,Z) = F(ξ,ξ,Z) = 0` and `F(X,Y,ξ) = −g(X,Y)`
/// on horizontal `X, Y, Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefiningResiduals {
    pub horizontal: f64,
    pub xi_first: f64,
    pub xi_xi: f64,
    pub xi_last: f64,
}

impl DefiningResiduals {
    pub fn max(&self) -> f64 {
        self.horizontal
            .max(self.xi_first)
            .max(self.xi_xi)
            .max(self.xi_last)
    }
}

pub fn defining_at(at: &StructureAt, ft: &FundamentalTensor) -> DefiningResiduals {
    let p = at.horizontal_projector();
    let f = &ft.f;
    let horizontal = project_all(f, &p).max_abs();
    let f_xi = f.insert_vector(0, &at.xi);
    let xi_first = project_all(&f_xi, &p).max_abs();
    let xi_xi = f_xi.insert_vector(0, &at.xi).map_slot(0, &p).max_abs();
    let last = project_all(&f.insert_vector(2, &at.xi), &p);
    let g_h = project_all(&at.g.as_tensor(), &p);
    let xi_last = last.add(&g_h).map(|t| t.max_abs()).unwrap_or(f64::INFINITY);
    DefiningResiduals {
        horizontal,
        xi_first,
        xi_xi,
        xi_last,
    }
}

pub fn check_defining_conditions(s: &AccrStructure, p: &[f64]) -> Result<DefiningResiduals> {
    let at = s.at(p)?;
    Ok(defining_at(&at, &fundamental_f_at(&at)))
}

/// `max |F(x,y,z) − g(φx,φy)η(z) − g(φx,φz)η(y)|` together with the vector form
/// `(∇_x φ)y + g(x,y)ξ + η(y)x − 2η(x)η(y)ξ`.
pub fn nabla_phi_at(at: &StructureAt, ft: &FundamentalTensor) -> f64 {
    let d = at.dim;
    let gpp = at.phi.transpose() * at.g.components() * &at.phi;
    let mut worst: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let rhs = gpp[(x, y)] * at.eta[z] + gpp[(x, z)] * at.eta[y];
                worst = worst.max((ft.f.get(&[x, y, z]) - rhs).abs());
            }
        }
    }
    let gm = at.g.components();
    for x in 0..d {
        let nphi = at.nabla_phi(x);
        for y in 0..d {
            let mut v = nphi.column(y) + &at.xi * gm[(x, y)];
            v[x] += at.eta[y];
            v -= &at.xi * (2.0 * at.eta[x] * at.eta[y]);
            worst = worst.max(v.amax());
        }
    }
    worst
}

pub fn check_nabla_phi(s: &AccrStructure, p: &[f64]) -> Result<f64> {
    let at = s.at(p)?;
    Ok(nabla_phi_at(&at, &fundamental_f_at(&at)))
}

/// Residuals of `N = 0`, `N̂ = −4(g̃ − η⊗η)⊗ξ` and `N̂(ξ, ·) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NijenhuisFormResiduals {
    pub n: f64,
    pub n_hat: f64,
    pub n_hat_xi: f64,
}

impl NijenhuisFormResiduals {
    pub fn max(&self) -> f64 {
        self.n.max(self.n_hat).max(self.n_hat_xi)
    }
}

pub fn nijenhuis_form_from(
    at: &StructureAt,
    n: &FrameTensor,
    n_hat: &FrameTensor,
) -> NijenhuisFormResiduals {
    let d = at.dim;
    let assoc = at.assoc_metric();
    let target = FrameTensor::covariant_from_fn(d, 3, |x| {
        -4.0 * (assoc[(x[0], x[1])] - at.eta[x[0]] * at.eta[x[1]]) * at.eta[x[2]]
    });
    NijenhuisFormResiduals {
        n: n.max_abs(),
        n_hat: n_hat.max_diff(&target).unwrap_or(f64::INFINITY),
        n_hat_xi: n_hat.insert_vector(0, &at.xi).max_abs(),
    }
}

pub fn check_nijenhuis_form(s: &AccrStructure, p: &[f64]) -> Result<NijenhuisFormResiduals> {
    let at = s.at(p)?;
    let dg = s.model().metric_derivatives(p)?;
    let (n, n_hat) = nijenhuis_brackets(&at, &dg);
    Ok(nijenhuis_form_from(&at, &n, &n_hat))
}

/// Consequences of the Sasaki-like condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsequenceResiduals {
    pub d_eta: f64,
    pub nabla_xi_xi: f64,
    pub theta: f64,
    pub theta_star: f64,
    pub bracket_horizontal: f64,
    pub nabla_xi_horizontal: f64,
}

impl ConsequenceResiduals {
    pub fn max(&self) -> f64 {
        [
            self.d_eta,
            self.nabla_xi_xi,
            self.theta,
            self.theta_star,
            self.bracket_horizontal,
            self.nabla_xi_horizontal,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// `∇_X Y` for fields known at a point.
pub fn covariant_derivative(at: &StructureAt, x: &DVector<f64>, y: &LocalField) -> DVector<f64> {
    let mut out = y.along(x);
    for a in 0..at.dim {
        if x[a] != 0.0 {
            out += at.gamma.matrix(a) * &y.value * x[a];
        }
    }
    out
}

pub fn consequences_at(at: &StructureAt, ft: &FundamentalTensor) -> ConsequenceResiduals {
    let d = at.dim;
    let xi = at.xi_field();
    let nabla_xi_xi = covariant_derivative(at, &at.xi, &xi).amax();
    let theta = (&ft.theta + &at.eta * (2.0 * at.n as f64)).amax();
    let mut bracket_horizontal: f64 = 0.0;
    let mut nabla_xi_horizontal: f64 = 0.0;
    for i in 0..d {
        let x = at.horizontal_field(i);
        let br = at.bracket(&x, &xi);
        bracket_horizontal = bracket_horizontal.max(at.eta.dot(&br).abs());
        let nx = covariant_derivative(at, &at.xi, &x);
        let r = &nx + &at.phi * &x.value + &br;
        nabla_xi_horizontal = nabla_xi_horizontal.max(r.amax()).max(at.eta.dot(&nx).abs());
    }
    ConsequenceResiduals {
        d_eta: at.d_eta().amax(),
        nabla_xi_xi,
        theta,
        theta_star: ft.theta_star.amax(),
        bracket_horizontal,
        nabla_xi_horizontal,
    }
}

pub fn check_consequences(s: &AccrStructure, p: &[f64]) -> Result<ConsequenceResiduals> {
    let at = s.at(p)?;
    Ok(consequences_at(&at, &fundamental_f_at(&at)))
}

/// Second fundamental form of the leaves: `max |g(∇_X ξ, Y) + g̃(X, Y)|` on `H`.
pub fn second_fundamental_form_at(at: &StructureAt) -> f64 {
    let d = at.dim;
    let p = at.horizontal_projector();
    let lowered = DMatrix::from_fn(d, d, |x, y| at.g.lower(&at.nabla_xi(x))[y]);
    (p.transpose() * (lowered + at.assoc_metric()) * &p).amax()
}

/// `max |ǧ((∇̌_i J̌) e_j, e_k)|` on the cone at `(q, r)`.
pub fn cone_holomorphic_at(
    s: &AccrStructure,
    q: &[f64],
    r: f64,
    metric: ConeMetric,
) -> Result<f64> {
    let (cone, j) = cone_model_with(s.clone(), metric);
    let mut p = q.to_vec();
    p.push(r);
    let g = cone.metric_at(&p)?;
    let gamma = levi_civita(cone.as_ref(), &p)?;
    let dim = cone.dim();
    let jm = vec_to_matrix(dim, &j.eval(&p));
    let dj = derive_field(cone.as_ref(), &p, &j)?;
    let mut worst: f64 = 0.0;
    for (i, dji) in dj.iter().enumerate() {
        let gi = gamma.matrix(i);
        let nabla = vec_to_matrix(dim, dji) + &gi * &jm - &jm * &gi;
        worst = worst.max((g.components() * nabla).amax());
    }
    Ok(worst)
}

/// Maximum of [`cone_holomorphic_at`] over `(q, r)` pairs.
pub fn cone_holomorphic_residual(
    s: &AccrStructure,
    samples: &[(Vec<f64>, f64)],
    metric: ConeMetric,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (q, r) in samples {
        worst = worst.max(cone_holomorphic_at(s, q, *r, metric)?);
    }
    Ok(worst)
}

/// One displayed component formula of the cone connection or of `∇̌J̌`,
/// compared with the direct computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeFormulaCheck {
    pub label: &'static str,
    pub residual: f64,
}

fn lift_field(f: &LocalField, m: usize) -> LocalField {
    let mut value = DVector::zeros(m + 1);
    value.rows_mut(0, m).copy_from(&f.value);
    let mut derivs: Vec<DVector<f64>> = f
        .derivs
        .iter()
        .map(|d| {
            let mut v = DVector::zeros(m + 1);
            v.rows_mut(0, m).copy_from(d);
            v
        })
        .collect();
    derivs.push(DVector::zeros(m + 1));
    LocalField { value, derivs }
}

/// Labels of the displayed cone components, in the order returned by [`cone_formula_checks`].
pub const CONE_FORMULA_LABELS: [&str; 19] = [
    "nabla_X Y . Z",
    "nabla_X Y . dr",
    "nabla_X Y . xi",
    "nabla_X xi . Z",
    "nabla_xi Y . Z",
    "nabla_xi Y . xi",
    "nabla_xi xi . Z",
    "nabla_X dr . Z",
    "nabla_dr Y . Z",
    "(nabla_X J) Y . Z",
    "(nabla_X J) Y . xi",
    "(nabla_X J) Y . dr",
    "(nabla_X J) xi . Z [phi Z reading]",
    "(nabla_X J) dr . Z",
    "(nabla_xi J) xi . Z",
    "(nabla_xi J) Y . Z",
    "(nabla_xi J) Y . xi",
    "(nabla_xi J) Y . dr",
    "(nabla_xi J) dr . Z",
];

/// Evaluates every displayed cone formula on horizontal projections of frame
/// vectors, with `ξ` and `∂r` in their slots. For the `(∇̌_X J̌)ξ` line the
/// comparison uses `g(∇_X ξ, φZ)`.
pub fn cone_formula_checks(s: &AccrStructure, q: &[f64], r: f64) -> Result<Vec<ConeFormulaCheck>> {
    let at = s.at(q)?;
    let ft = fundamental_f_at(&at);
    let m = at.dim;
    let (cone, j) = cone_model(s.clone());
    let mut p = q.to_vec();
    p.push(r);
    let gc = cone.metric_at(&p)?;
    let gamma_c = levi_civita(cone.as_ref(), &p)?;
    let jm = vec_to_matrix(m + 1, &j.eval(&p));
    let dj = derive_field(cone.as_ref(), &p, &j)?;
    let nabla_j: Vec<DMatrix<f64>> = dj
        .iter()
        .enumerate()
        .map(|(i, dji)| {
            let gi = gamma_c.matrix(i);
            vec_to_matrix(m + 1, dji) + &gi * &jm - &jm * &gi
        })
        .collect();
    let cov_c = |x: &DVector<f64>, y: &LocalField| -> DVector<f64> {
        let mut out = y.along(x);
        for a in 0..=m {
            if x[a] != 0.0 {
                out += gamma_c.matrix(a) * &y.value * x[a];
            }
        }
        out
    };
    let nabla_j_along = |x: &DVector<f64>, y: &DVector<f64>| -> DVector<f64> {
        let mut out = DVector::zeros(m + 1);
        for a in 0..=m {
            if x[a] != 0.0 {
                out += &nabla_j[a] * y * x[a];
            }
        }
        out
    };
    let gcv = |a: &DVector<f64>, b: &DVector<f64>| gc.apply(a, b);
    let g = |a: &DVector<f64>, b: &DVector<f64>| at.g.apply(a, b);
    let deta = at.d_eta();
    let de = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &deta * b)[(0, 0)];
    let f = |x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>| ft.f.eval(&[x, y, z]);
    let nabla_xi = |x: &DVector<f64>| {
        let mut out = DVector::zeros(m);
        for a in 0..m {
            out += at.nabla_xi(a) * x[a];
        }
        out
    };
    let r2 = r * r;
    let k = 0.5 * (r2 - 1.0);

    let hf: Vec<LocalField> = (0..m).map(|i| at.horizontal_field(i)).collect();
    let hc: Vec<LocalField> = hf.iter().map(|x| lift_field(x, m)).collect();
    let xi_b = at.xi_field();
    let xi_c = lift_field(&xi_b, m);
    let mut dr = DVector::zeros(m + 1);
    dr[m] = 1.0;
    let dr_field = LocalField::constant(dr.clone());
    let nxx = covariant_derivative(&at, &at.xi, &xi_b);

    let mut worst = [0.0f64; 19];
    let mut upd = |i: usize, v: f64| worst[i] = worst[i].max(v.abs());
    for x in 0..m {
        let (xb, xc) = (&hf[x].value, &hc[x].value);
        for y in 0..m {
            let (yb, yc) = (&hf[y].value, &hc[y].value);
            let nxy = covariant_derivative(&at, xb, &hf[y]);
            let nxy_c = cov_c(xc, &hc[y]);
            upd(1, gcv(&nxy_c, &dr) + r * g(xb, yb));
            upd(
                2,
                gcv(&nxy_c, &xi_c.value) - r2 * g(&nxy, &at.xi) - k * de(xb, yb),
            );
            let nxi_c = cov_c(xc, &xi_c);
            let nxdr_c = cov_c(xc, &dr_field);
            let nxiy = covariant_derivative(&at, &at.xi, &hf[y]);
            let nxiy_c = cov_c(&xi_c.value, &hc[y]);
            upd(5, gcv(&nxiy_c, &xi_c.value) - g(&nxiy, &at.xi));
            let ndr_y = cov_c(&dr, &hc[x]);
            let nj_xy = nabla_j_along(xc, yc);
            let phi_y = &at.phi * yb;
            upd(
                10,
                gcv(&nj_xy, &xi_c.value)
                    - r2 * (f(xb, yb, &at.xi) + g(xb, yb))
                    - k * de(xb, &phi_y),
            );
            upd(
                11,
                gcv(&nj_xy, &dr) + r * (g(&nabla_xi(xb), yb) + g(xb, &phi_y))
                    - (r2 - 1.0) / (2.0 * r2) * de(xb, yb),
            );
            let nj_xi_y = nabla_j_along(&xi_c.value, yc);
            upd(16, gcv(&nj_xi_y, &xi_c.value) + g(&nxx, &phi_y));
            upd(17, gcv(&nj_xi_y, &dr) + g(&nxx, yb) / r);
            for z in 0..m {
                let (zb, zc) = (&hf[z].value, &hc[z].value);
                let phi_z = &at.phi * zb;
                upd(0, gcv(&nxy_c, zc) - r2 * g(&nxy, zb));
                upd(9, gcv(&nj_xy, zc) - r2 * f(xb, yb, zb));
                upd(
                    15,
                    gcv(&nj_xi_y, zc) - r2 * f(&at.xi, yb, zb)
                        + k * (de(&phi_y, zb) - de(yb, &phi_z)),
                );
                if y == 0 {
                    upd(
                        3,
                        gcv(&nxi_c, zc) - r2 * g(&nabla_xi(xb), zb) + k * de(xb, zb),
                    );
                    upd(7, gcv(&nxdr_c, zc) - r * g(xb, zb));
                    upd(8, gcv(&ndr_y, zc) - r * g(xb, zb));
                    let nj_x_xi = nabla_j_along(xc, &xi_c.value);
                    upd(
                        12,
                        gcv(&nj_x_xi, zc) + r2 * (g(&nabla_xi(xb), &phi_z) - g(xb, zb))
                            - k * de(xb, &phi_z),
                    );
                    let nj_x_dr = nabla_j_along(xc, &dr);
                    upd(
                        13,
                        gcv(&nj_x_dr, zc) + r * (g(&nabla_xi(xb), zb) + g(xb, &phi_z))
                            - (r2 - 1.0) / (2.0 * r) * de(xb, zb),
                    );
                }
                if x == 0 {
                    upd(4, gcv(&nxiy_c, zc) - r2 * g(&nxiy, zb) + k * de(yb, zb));
                }
            }
        }
    }
    for z in 0..m {
        let (zb, zc) = (&hf[z].value, &hc[z].value);
        let nxixi_c = cov_c(&xi_c.value, &xi_c);
        upd(6, gcv(&nxixi_c, zc) - g(&nxx, zb));
        let phi_z = &at.phi * zb;
        let nj_xi_xi = nabla_j_along(&xi_c.value, &xi_c.value);
        upd(14, gcv(&nj_xi_xi, zc) + g(&nxx, &phi_z));
        let nj_xi_dr = nabla_j_along(&xi_c.value, &dr);
        upd(18, gcv(&nj_xi_dr, zc) + g(&nxx, zb) / r);
    }

    Ok(CONE_FORMULA_LABELS
        .iter()
        .zip(worst)
        .map(|(&label, residual)| ConeFormulaCheck { label, residual })
        .collect())
}

/// Residuals of the curvature identities of Sasaki-like structures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureIdentityResiduals {
    pub curf: f64,
    pub r_xi: f64,
    pub r_xi_first: f64,
    pub ric_xi_xi: f64,
    pub ric_xi: f64,
    pub r_xi_x_xi: f64,
}

impl CurvatureIdentityResiduals {
    pub fn max(&self) -> f64 {
        [
            self.curf,
            self.r_xi,
            self.r_xi_first,
            self.ric_xi_xi,
            self.ric_xi,
            self.r_xi_x_xi,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn curvature_identities_at(
    at: &StructureAt,
    b: &CurvatureBundle,
) -> CurvatureIdentityResiduals {
    let d = at.dim;
    let n2 = 2.0 * at.n as f64;
    let gm = at.g.components();
    let gphi = at.g_phi();
    let e = &at.eta;
    let r = &b.r;
    let lhs = r
        .map_slot(2, &at.phi)
        .sub(&r.map_slot(3, &at.phi))
        .expect("same shape");
    let rhs = FrameTensor::covariant_from_fn(d, 4, |x| {
        let (a, bb, c, u) = (x[0], x[1], x[2], x[3]);
        (gm[(bb, c)] - 2.0 * e[bb] * e[c]) * gphi[(a, u)]
            + (gm[(bb, u)] - 2.0 * e[bb] * e[u]) * gphi[(a, c)]
            - (gm[(a, c)] - 2.0 * e[a] * e[c]) * gphi[(bb, u)]
            - (gm[(a, u)] - 2.0 * e[a] * e[u]) * gphi[(bb, c)]
    });
    let curf = lhs.max_diff(&rhs).unwrap_or(f64::INFINITY);
    let r_xi_t = r.insert_vector(2, &at.xi);
    let r_xi_first_t = r.insert_vector(0, &at.xi);
    let mut r_xi: f64 = 0.0;
    let mut r_xi_first: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                let want = e[y] * gm[(x, z)] - e[x] * gm[(y, z)];
                r_xi = r_xi.max((r_xi_t.get(&[x, y, z]) - want).abs());
                r_xi_first = r_xi_first.max((r_xi_first_t.get(&[z, x, y]) - want).abs());
            }
        }
    }
    let ric_xi_v = {
        let mut v = DVector::zeros(d);
        for y in 0..d {
            v[y] = (0..d).map(|a| b.ric.get(&[y, a]) * at.xi[a]).sum();
        }
        v
    };
    let ric_xi_xi = (ric_xi_v.dot(&at.xi) - n2).abs();
    let ric_xi = (&ric_xi_v - e * n2).amax();
    let p = at.horizontal_projector();
    let mut r_xi_x_xi: f64 = 0.0;
    let t = r.insert_vector(0, &at.xi).insert_vector(1, &at.xi);
    for i in 0..d {
        let x = p.column(i).into_owned();
        let lowered = DVector::from_fn(d, |u, _| (0..d).map(|a| x[a] * t.get(&[a, u])).sum());
        let v = at.g.raise(&lowered);
        r_xi_x_xi = r_xi_x_xi.max((v + &x).amax());
    }
    CurvatureIdentityResiduals {
        curf,
        r_xi,
        r_xi_first,
        ric_xi_xi,
        ric_xi,
        r_xi_x_xi,
    }
}

/// Curvature identities; only defined for structures passing the defining check.
pub fn check_curvature_identities(
    s: &AccrStructure,
    p: &[f64],
    sasaki_tolerance: f64,
) -> Result<CurvatureIdentityResiduals> {
    let at = s.at(p)?;
    let ft = fundamental_f_at(&at);
    let defining = defining_at(&at, &ft);
    if defining.max() > sasaki_tolerance {
        return Err(GeometryError::NotSasakiLike {
            residual: defining.max(),
        });
    }
    let b = riemann(s.model().as_ref(), p, Some(&at.phi))?;
    Ok(curvature_identities_at(&at, &b))
}

/// Pointwise summary of the three equivalent characterizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SasakiReport {
    pub defining: DefiningResiduals,
    pub nabla_phi: f64,
    pub nijenhuis: NijenhuisFormResiduals,
    pub consequences: ConsequenceResiduals,
}

impl SasakiReport {
    /// Verdicts of the defining, `∇φ` and Nijenhuis characterizations.
    pub fn verdicts(&self, tolerance: f64) -> [bool; 3] {
        [
            self.defining.max() <= tolerance,
            self.nabla_phi <= tolerance,
            self.nijenhuis.max() <= tolerance,
        ]
    }

    pub fn coherent(&self, tolerance: f64) -> bool {
        let v = self.verdicts(tolerance);
        v[0] == v[1] && v[1] == v[2]
    }
}

pub fn sasaki_report(s: &AccrStructure, p: &[f64]) -> Result<SasakiReport> {
    let at = s.at(p)?;
    let ft = fundamental_f_at(&at);
    let dg = s.model().metric_derivatives(p)?;
    let (n, n_hat) = nijenhuis_brackets(&at, &dg);
    Ok(SasakiReport {
        defining: defining_at(&at, &ft),
        nabla_phi: nabla_phi_at(&at, &ft),
        nijenhuis: nijenhuis_form_from(&at, &n, &n_hat),
        consequences: consequences_at(&at, &ft),
    })
}
