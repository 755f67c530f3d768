//! Contact complex conformal transformations
//! `ḡ = e^{2u}cos2v g + e^{2u}sin2v g(·,φ·) + (e^{2w} − e^{2u}cos2v) η⊗η`,
//! `ξ̄ = e^{−w}ξ`, `η̄ = e^{w}η`, and the checks built on them.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::connection::{levi_civita, riemann, CurvatureBundle};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::{FrameTensor, MetricMatrix};
use crate::models::{Commutators, FdConfig, Field, ManifoldModel, ModelKind};
use crate::sasaki::{check_defining_conditions, check_nabla_phi};
use crate::structure::{AccrStructure, StructureAt};

/// A scalar function on the coordinates: a constant or an affine function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "serde_json::Value")]
pub enum ScalarField {
    Constant(f64),
    Affine { constant: f64, gradient: Vec<f64> },
}

impl Default for ScalarField {
    fn default() -> Self {
        ScalarField::Constant(0.0)
    }
}

#[derive(Deserialize)]
struct AffineRepr {
    #[serde(default)]
    constant: f64,
    gradient: Vec<f64>,
}

impl TryFrom<serde_json::Value> for ScalarField {
    type Error = String;

    fn try_from(value: serde_json::Value) -> std::result::Result<Self, Self::Error> {
        match value {
            serde_json::Value::Number(x) => x
                .as_f64()
                .map(ScalarField::Constant)
                .ok_or_else(|| format!("{x} is not a finite number")),
            other => {
                let a: AffineRepr = serde_json::from_value(other).map_err(|e| e.to_string())?;
                Ok(ScalarField::Affine {
                    constant: a.constant,
                    gradient: a.gradient,
                })
            }
        }
    }
}

impl ScalarField {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            ScalarField::Constant(c) => *c,
            ScalarField::Affine { constant, gradient } => {
                constant + gradient.iter().zip(p).map(|(a, x)| a * x).sum::<f64>()
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ScalarField::Constant(_) => true,
            ScalarField::Affine { gradient, .. } => gradient.iter().all(|&a| a == 0.0),
        }
    }

    /// Frame components `df(e_i)`.
    pub fn differential(&self, model: &dyn ManifoldModel, p: &[f64]) -> Result<DVector<f64>> {
        let dim = model.dim();
        match self {
            ScalarField::Affine { gradient, .. } if !self.is_constant() => {
                let frame = model.frame_at(p)?;
                Ok(DVector::from_fn(dim, |i, _| {
                    gradient
                        .iter()
                        .enumerate()
                        .map(|(mu, a)| a * frame[(mu, i)])
                        .sum()
                }))
            }
            _ => Ok(DVector::zeros(dim)),
        }
    }

    fn check(&self, coord_len: usize) -> Result<()> {
        match self {
            ScalarField::Constant(c) if !c.is_finite() => Err(GeometryError::BadParams(
                "transformation parameter is not finite".into(),
            )),
            ScalarField::Affine { constant, gradient } => {
                if !constant.is_finite() || gradient.iter().any(|a| !a.is_finite()) {
                    return Err(GeometryError::BadParams(
                        "transformation parameter is not finite".into(),
                    ));
                }
                if self.is_constant() {
                    return Ok(());
                }
                if coord_len == 0 {
                    return Err(GeometryError::NonConstantParams);
                }
                if gradient.len() != coord_len {
                    return Err(GeometryError::BadParams(format!(
                        "gradient has {} entries, model has {coord_len} coordinates",
                        gradient.len()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The functions `(u, v, w)` of a transformation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    #[serde(default)]
    pub u: ScalarField,
    #[serde(default)]
    pub v: ScalarField,
    #[serde(default)]
    pub w: ScalarField,
}

impl TransformParams {
    pub fn constant(u: f64, v: f64, w: f64) -> Self {
        TransformParams {
            u: ScalarField::Constant(u),
            v: ScalarField::Constant(v),
            w: ScalarField::Constant(w),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.u.is_constant() && self.v.is_constant() && self.w.is_constant()
    }

    pub fn at(&self, p: &[f64]) -> (f64, f64, f64) {
        (self.u.eval(p), self.v.eval(p), self.w.eval(p))
    }

    fn check(&self, coord_len: usize) -> Result<()> {
        self.u.check(coord_len)?;
        self.v.check(coord_len)?;
        self.w.check(coord_len)
    }
}

/// Frame components of `ḡ` from `g`, `φ`, `η` at a point.
pub fn transformed_metric(
    g: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    eta: &DVector<f64>,
    (u, v, w): (f64, f64, f64),
) -> DMatrix<f64> {
    let e2u = (2.0 * u).exp();
    let (s, c) = (2.0 * v).sin_cos();
    let gphi = g * phi;
    let gphi = (&gphi + gphi.transpose()) * 0.5;
    g * (e2u * c) + gphi * (e2u * s) + eta * eta.transpose() * ((2.0 * w).exp() - e2u * c)
}

/// The base model with its metric replaced by `ḡ`; frame and commutators are kept.
pub struct TransformedModel {
    base: AccrStructure,
    params: TransformParams,
}

impl TransformedModel {
    pub fn params(&self) -> &TransformParams {
        &self.params
    }

    pub fn base(&self) -> &AccrStructure {
        &self.base
    }
}

impl ManifoldModel for TransformedModel {
    fn kind(&self) -> ModelKind {
        self.base.model().kind()
    }

    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn coord_len(&self) -> usize {
        self.base.model().coord_len()
    }

    fn fd(&self) -> FdConfig {
        self.base.model().fd()
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        self.base.model().check_point(p)
    }

    fn metric_at(&self, p: &[f64]) -> Result<MetricMatrix> {
        let g = self.base.model().metric_at(p)?;
        MetricMatrix::new(transformed_metric(
            g.components(),
            &self.base.phi_at(p),
            &self.base.eta_at(p),
            self.params.at(p),
        ))
    }

    fn commutators_at(&self, p: &[f64]) -> Result<Commutators> {
        self.base.model().commutators_at(p)
    }

    fn frame_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.base.model().frame_at(p)
    }
}

/// The transformed structure `(φ, ξ̄, η̄, ḡ)`.
#[derive(Debug, Clone)]
pub struct TransformedStructure {
    pub structure: AccrStructure,
    pub params: TransformParams,
}

fn scaled_field(base: &Field, w: &ScalarField, sign: f64) -> Field {
    match (base, w) {
        (Field::Constant(v), ScalarField::Constant(w)) => {
            let k = (sign * w).exp();
            Field::Constant(v.iter().map(|x| x * k).collect())
        }
        _ => {
            let base = base.clone();
            let w = w.clone();
            Field::Varying(Arc::new(move |p: &[f64]| {
                let k = (sign * w.eval(p)).exp();
                base.eval(p).into_iter().map(|x| x * k).collect()
            }))
        }
    }
}

/// Applies the transformation; Lie-group models only accept constant parameters.
pub fn apply_cct(s: &AccrStructure, params: &TransformParams) -> Result<TransformedStructure> {
    params.check(s.model().coord_len())?;
    let model = Arc::new(TransformedModel {
        base: s.clone(),
        params: params.clone(),
    });
    let xi = scaled_field(s.xi_field(), &params.w, -1.0);
    let eta = scaled_field(s.eta_field(), &params.w, 1.0);
    let structure = AccrStructure::new(model, s.phi_field().clone(), xi, eta)?;
    Ok(TransformedStructure {
        structure,
        params: params.clone(),
    })
}

/// Residuals of the conditions on `(du, dv, dw)` under which the transformation
/// keeps a Sasaki-like structure Sasaki-like.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResiduals {
    /// `dw∘φ = 0`
    pub dw_phi: f64,
    /// `du − dv∘φ = 0`
    pub du_dv_phi: f64,
    /// `du∘φ + dv − (1 − e^w)η = 0`
    pub du_phi_dv: f64,
    /// `du(ξ) = 0`
    pub du_xi: f64,
    /// `dv(ξ) = 1 − e^w`
    pub dv_xi: f64,
    /// The 1-forms `A`, `B` whose vanishing is equivalent to the last two conditions.
    pub a_form: f64,
    pub b_form: f64,
}

impl ConditionResiduals {
    pub fn max(&self) -> f64 {
        self.dw_phi.max(self.du_dv_phi).max(self.du_phi_dv)
    }

    pub fn consequences(&self) -> f64 {
        self.du_xi.max(self.dv_xi)
    }

    pub fn forms(&self) -> f64 {
        self.a_form.max(self.b_form)
    }
}

pub fn condition_residuals(
    s: &AccrStructure,
    params: &TransformParams,
    p: &[f64],
) -> Result<ConditionResiduals> {
    params.check(s.model().coord_len())?;
    let model = s.model().as_ref();
    let du = params.u.differential(model, p)?;
    let dv = params.v.differential(model, p)?;
    let dw = params.w.differential(model, p)?;
    let (_, v, w) = params.at(p);
    let phi_t = s.phi_at(p).transpose();
    let eta = s.eta_at(p);
    let xi = s.xi_at(p);
    let ew = w.exp();
    let first = &du - &phi_t * &dv;
    let second = &phi_t * &du + &dv - &eta * (1.0 - ew);
    let (sin2v, cos2v) = (2.0 * v).sin_cos();
    let a = &second * cos2v + &first * sin2v;
    let b = &second * sin2v - &first * cos2v;
    Ok(ConditionResiduals {
        dw_phi: (&phi_t * &dw).amax(),
        du_dv_phi: first.amax(),
        du_phi_dv: second.amax(),
        du_xi: du.dot(&xi).abs(),
        dv_xi: (dv.dot(&xi) - (1.0 - ew)).abs(),
        a_form: a.amax(),
        b_form: b.amax(),
    })
}

/// Predicted and observed preservation of the Sasaki-like property.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreservationReport {
    pub conditions: ConditionResiduals,
    /// Defining conditions recomputed on the transformed structure.
    pub transformed_defining: f64,
    pub transformed_nabla_phi: f64,
}

impl PreservationReport {
    pub fn predicted(&self, tolerance: f64) -> bool {
        self.conditions.max() <= tolerance
    }

    pub fn observed(&self, tolerance: f64) -> bool {
        self.transformed_defining <= tolerance
    }
}

fn require_sasaki_like(s: &AccrStructure, p: &[f64], tolerance: f64) -> Result<()> {
    let residual = check_nabla_phi(s, p)?;
    if residual > tolerance {
        return Err(GeometryError::NotSasakiLike { residual });
    }
    Ok(())
}

pub fn preservation_check(
    s: &AccrStructure,
    params: &TransformParams,
    p: &[f64],
    sasaki_tolerance: f64,
) -> Result<PreservationReport> {
    require_sasaki_like(s, p, sasaki_tolerance)?;
    let conditions = condition_residuals(s, params, p)?;
    let t = apply_cct(s, params)?;
    Ok(PreservationReport {
        conditions,
        transformed_defining: check_defining_conditions(&t.structure, p)?.max(),
        transformed_nabla_phi: check_nabla_phi(&t.structure, p)?,
    })
}

/// Coefficient form used for `∇̄ − ∇`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftForm {
    /// `β = 1 − e^{2(u−w)}cos2v`, from the Koszul formula.
    #[default]
    Derived,
    /// `β = e^{−2w} − e^{2(u−w)}cos2v`; agrees with `Derived` only for `w = 0`.
    Displayed,
}

/// `(α, β)` with `∇̄_x y = ∇_x y + (α g(φx,φy) − β g(x,φy)) ξ`.
pub fn connection_shift((u, v, w): (f64, f64, f64), form: ShiftForm) -> (f64, f64) {
    let k = (2.0 * (u - w)).exp();
    let (s, c) = (2.0 * v).sin_cos();
    let lead = match form {
        ShiftForm::Derived => 1.0,
        ShiftForm::Displayed => (-2.0 * w).exp(),
    };
    (k * s, lead - k * c)
}

fn require_constant(params: &TransformParams) -> Result<()> {
    if params.is_constant() {
        Ok(())
    } else {
        Err(GeometryError::NonConstantParams)
    }
}

/// `max |Γ̄ − Γ − (α g(φx,φy) − β g(x,φy)) ξ|` against a direct Koszul computation of `∇̄`.
pub fn homothetic_connection_residual(
    s: &AccrStructure,
    params: &TransformParams,
    p: &[f64],
    form: ShiftForm,
) -> Result<f64> {
    require_constant(params)?;
    let at = s.at(p)?;
    let t = apply_cct(s, params)?;
    let direct = levi_civita(t.structure.model().as_ref(), p)?;
    let (alpha, beta) = connection_shift(params.at(p), form);
    let gphi = at.g_phi();
    let gpp = at.phi.transpose() * &gphi;
    let d = at.dim;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let shift = alpha * gpp[(i, j)] - beta * gphi[(i, j)];
            for k in 0..d {
                let predicted = at.gamma.get(i, j, k) + shift * at.xi[k];
                worst = worst.max((direct.get(i, j, k) - predicted).abs());
            }
        }
    }
    Ok(worst)
}

/// `R̄(x,y)z − R(x,y)z` for frame vectors, as a `(1,3)` tensor `[x][y][z][component]`.
pub fn curvature_shift(at: &StructureAt, alpha: f64, beta: f64) -> FrameTensor {
    let gphi = at.g_phi();
    let gpp = at.phi.transpose() * &gphi;
    let d = at.dim;
    FrameTensor::covariant_from_fn(d, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        let xi = at.xi[l];
        let (phi_i, phi_j) = (at.phi[(l, i)], at.phi[(l, j)]);
        alpha
            * (gphi[(j, k)] * at.eta[i] * xi - gpp[(j, k)] * phi_i - gphi[(i, k)] * at.eta[j] * xi
                + gpp[(i, k)] * phi_j)
            + beta
                * (gpp[(j, k)] * at.eta[i] * xi + gphi[(j, k)] * phi_i
                    - gpp[(i, k)] * at.eta[j] * xi
                    - gphi[(i, k)] * phi_j)
    })
}

fn raise_last(r: &FrameTensor, g: &MetricMatrix) -> FrameTensor {
    r.map_slot(3, g.inverse_components())
}

/// A `ḡ`-adapted basis `(ξ̄, ē_1..ē_n, φē_1..φē_n)` as columns, with `ε̄_i = ḡ(ē_i, ē_i)`.
#[derive(Debug, Clone)]
pub struct AdaptedBasis {
    pub vectors: DMatrix<f64>,
    pub epsilons: Vec<f64>,
    /// `max |ḡ(ē_i, ē_j) − ε̄_i δ_ij|` together with `max ||ε̄_i| − 1|`.
    pub orthonormality_defect: f64,
}

/// `f_1..f_n` in `H` with `h_C(f_a, f_b) = δ_ab`, `h_C(x,y) = g(x,y) − i g(x,φy)`,
/// from complex Gram–Schmidt with `i x := φx`.
pub fn complex_orthonormal_horizontal(at: &StructureAt) -> Result<Vec<DVector<f64>>> {
    let g = at.g.components();
    let h_c = |x: &DVector<f64>, y: &DVector<f64>| {
        Complex::new(x.dot(&(g * y)), -x.dot(&(g * (&at.phi * y))))
    };
    let mul = |z: Complex<f64>, x: &DVector<f64>| x * z.re + (&at.phi * x) * z.im;
    let proj = at.horizontal_projector();
    let mut found: Vec<DVector<f64>> = Vec::with_capacity(at.n);
    let candidates = (0..at.dim)
        .map(|k| proj.column(k).into_owned())
        .chain((0..at.dim).flat_map(|a| {
            let proj = &proj;
            (a + 1..at.dim).map(move |b| proj.column(a) + proj.column(b))
        }));
    for mut x in candidates {
        if found.len() == at.n {
            break;
        }
        for f in &found {
            x -= mul(h_c(&x, f), f);
        }
        let c = h_c(&x, &x);
        if c.norm() < 1e-8 {
            continue;
        }
        found.push(mul(c.sqrt().inv(), &x));
    }
    if found.len() < at.n {
        return Err(GeometryError::BadParams(
            "no complex orthonormal basis of the horizontal space".into(),
        ));
    }
    Ok(found)
}

pub fn adapted_basis(
    at: &StructureAt,
    gbar: &MetricMatrix,
    (u, v, w): (f64, f64, f64),
) -> Result<AdaptedBasis> {
    let f = complex_orthonormal_horizontal(at)?;
    let n = at.n;
    let d = at.dim;
    let mut vectors = DMatrix::zeros(d, d);
    vectors.set_column(0, &(&at.xi * (-w).exp()));
    let (s, c) = v.sin_cos();
    let k = (-u).exp();
    for (a, fa) in f.iter().enumerate() {
        let e = (fa * c - (&at.phi * fa) * s) * k;
        vectors.set_column(n + 1 + a, &(&at.phi * &e));
        vectors.set_column(1 + a, &e);
    }
    let gram = vectors.transpose() * gbar.components() * &vectors;
    let epsilons: Vec<f64> = (0..d).map(|i| gram[(i, i)]).collect();
    let mut defect: f64 = 0.0;
    for i in 0..d {
        defect = defect.max((epsilons[i].abs() - 1.0).abs());
        for j in 0..d {
            if i != j {
                defect = defect.max(gram[(i, j)].abs());
            }
        }
    }
    Ok(AdaptedBasis {
        vectors,
        epsilons,
        orthonormality_defect: defect,
    })
}

/// Curvature comparison under a constant transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotheticCurvature {
    /// `(1,3)` curvature against the shifted original.
    pub curvature: f64,
    /// The same with the [`ShiftForm::Displayed`] coefficients.
    pub curvature_displayed: f64,
    /// `max |R̄ic − Ric|`.
    pub ricci: f64,
    pub scal_direct: f64,
    pub scal_formula: f64,
    pub scal_basis: f64,
    pub scal_star_direct: f64,
    pub scal_star_formula: f64,
    pub scal_star_basis: f64,
    pub basis_defect: f64,
}

impl HomotheticCurvature {
    /// Largest disagreement among the three evaluations of `S̄cal` and `S̄cal*`.
    pub fn scalar_spread(&self) -> f64 {
        let spread = |a: f64, b: f64, c: f64| (a - b).abs().max((a - c).abs()).max((b - c).abs());
        spread(self.scal_direct, self.scal_formula, self.scal_basis).max(spread(
            self.scal_star_direct,
            self.scal_star_formula,
            self.scal_star_basis,
        ))
    }
}

/// `(S̄cal, S̄cal*)` from `Scal`, `Scal*` and `Ric(ξ,ξ)` of the original metric.
pub fn transformed_scalars(
    scal: f64,
    scal_star: f64,
    ric_xi_xi: f64,
    (u, v, w): (f64, f64, f64),
) -> (f64, f64) {
    let k = (-2.0 * u).exp();
    let (s, c) = (2.0 * v).sin_cos();
    (
        k * c * scal - k * s * scal_star + ((-2.0 * w).exp() - k * c) * ric_xi_xi,
        k * s * scal + k * c * scal_star - k * s * ric_xi_xi,
    )
}

pub fn homothetic_curvature(
    s: &AccrStructure,
    params: &TransformParams,
    p: &[f64],
) -> Result<HomotheticCurvature> {
    require_constant(params)?;
    let at = s.at(p)?;
    let uvw = params.at(p);
    let t = apply_cct(s, params)?;
    let model = t.structure.model();
    let gbar = model.metric_at(p)?;
    let orig = riemann(s.model().as_ref(), p, Some(&at.phi))?;
    let bar = riemann(model.as_ref(), p, Some(&at.phi))?;
    let r_bar = raise_last(&bar.r, &gbar);
    let r_orig = raise_last(&orig.r, &at.g);
    let compare = |form| -> Result<f64> {
        let (alpha, beta) = connection_shift(uvw, form);
        r_bar.max_diff(&r_orig.add(&curvature_shift(&at, alpha, beta))?)
    };
    let curvature = compare(ShiftForm::Derived)?;
    let curvature_displayed = compare(ShiftForm::Displayed)?;
    let ricci = bar.ric.max_diff(&orig.ric)?;
    let ric_xi_xi = orig.ric.eval(&[&at.xi, &at.xi]);
    let (scal_formula, scal_star_formula) = transformed_scalars(
        orig.scal,
        orig.scal_star.unwrap_or(f64::NAN),
        ric_xi_xi,
        uvw,
    );
    let basis = adapted_basis(&at, &gbar, uvw)?;
    let (scal_basis, scal_star_basis) = basis_traces(&bar, &basis, &at.phi);
    Ok(HomotheticCurvature {
        curvature,
        curvature_displayed,
        ricci,
        scal_direct: bar.scal,
        scal_formula,
        scal_basis,
        scal_star_direct: bar.scal_star.unwrap_or(f64::NAN),
        scal_star_formula,
        scal_star_basis,
        basis_defect: basis.orthonormality_defect,
    })
}

fn basis_traces(bar: &CurvatureBundle, basis: &AdaptedBasis, phi: &DMatrix<f64>) -> (f64, f64) {
    let mut scal = 0.0;
    let mut star = 0.0;
    for (i, eps) in basis.epsilons.iter().enumerate() {
        let e = basis.vectors.column(i).into_owned();
        let pe = phi * &e;
        scal += eps * bar.ric.eval(&[&e, &e]);
        star += eps * bar.ric.eval(&[&e, &pe]);
    }
    (scal, star)
}

/// Type of a Ricci tensor of the form `A g + B g(·,φ·) + (2n − A) η⊗η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicciClass {
    Einstein,
    EtaEinstein,
    EtaComplexEinstein,
    /// `Ric = 2n η⊗η`, reached only as `c² + d² → ∞`.
    Degenerate,
    /// Not of the above form.
    General,
}

/// Least-squares fit of `Ric − 2n η⊗η = A (g − η⊗η) + B g(·,φ·)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicciFit {
    pub a: f64,
    pub b: f64,
    pub residual: f64,
    /// `(c, d)` with `c + id = 2n / (A + iB)`.
    pub cd: Option<(f64, f64)>,
    pub class: RicciClass,
}

impl RicciFit {
    /// The constant transformation turning an η-complex-Einstein metric with
    /// parameters `(c, d)` into an Einstein one.
    pub fn einstein_params(&self) -> Option<TransformParams> {
        let (c, d) = self.cd?;
        Some(TransformParams::constant(
            -0.25 * (c * c + d * d).ln(),
            -0.5 * d.atan2(c),
            0.0,
        ))
    }
}

pub fn ricci_fit(at: &StructureAt, ric: &FrameTensor, tolerance: f64) -> RicciFit {
    let two_n = 2.0 * at.n as f64;
    let eta_eta = &at.eta * at.eta.transpose();
    let target = ric.to_matrix() - &eta_eta * two_n;
    let b1 = at.g.components() - &eta_eta;
    let gphi = at.g_phi();
    let b2 = (&gphi + gphi.transpose()) * 0.5;
    let dot = |x: &DMatrix<f64>, y: &DMatrix<f64>| x.component_mul(y).sum();
    let m = nalgebra::Matrix2::new(dot(&b1, &b1), dot(&b1, &b2), dot(&b2, &b1), dot(&b2, &b2));
    let rhs = nalgebra::Vector2::new(dot(&b1, &target), dot(&b2, &target));
    let (a, b) = match m.lu().solve(&rhs) {
        Some(x) => (x[0], x[1]),
        None => (f64::NAN, f64::NAN),
    };
    let residual = (&target - &b1 * a - &b2 * b).amax();
    let residual = if residual.is_finite() {
        residual
    } else {
        f64::INFINITY
    };
    let (cd, class) = if residual > tolerance {
        (None, RicciClass::General)
    } else if a.abs() <= tolerance && b.abs() <= tolerance {
        (None, RicciClass::Degenerate)
    } else {
        let z = Complex::new(two_n, 0.0) / Complex::new(a, b);
        let class = if (a - two_n).abs() <= tolerance && b.abs() <= tolerance {
            RicciClass::Einstein
        } else if b.abs() <= tolerance {
            RicciClass::EtaEinstein
        } else {
            RicciClass::EtaComplexEinstein
        };
        (Some((z.re, z.im)), class)
    };
    RicciFit {
        a,
        b,
        residual,
        cd,
        class,
    }
}

/// `max |Ric − 2n g|` at `p`.
pub fn einstein_defect(s: &AccrStructure, p: &[f64]) -> Result<f64> {
    let g = s.model().metric_at(p)?;
    let bundle = riemann(s.model().as_ref(), p, None)?;
    let two_n = 2.0 * s.n() as f64;
    Ok((bundle.ric.to_matrix() - g.components() * two_n).amax())
}

/// Outcome of fitting the Ricci tensor and applying the homothety that should
/// make the metric Einstein.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinHomothety {
    pub fit: RicciFit,
    /// `max |R̄ic − 2n ḡ|` after the homothety; `None` when no finite `(c, d)` exists.
    pub einstein_defect: Option<f64>,
}

pub fn einstein_homothety_check(
    s: &AccrStructure,
    p: &[f64],
    tolerance: f64,
) -> Result<EinsteinHomothety> {
    let at = s.at(p)?;
    let bundle = riemann(s.model().as_ref(), p, None)?;
    let fit = ricci_fit(&at, &bundle.ric, tolerance);
    let einstein_defect = match fit.einstein_params() {
        Some(params) => Some(einstein_defect(&apply_cct(s, &params)?.structure, p)?),
        None => None,
    };
    Ok(EinsteinHomothety {
        fit,
        einstein_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{builtin, Params};
    use crate::structure::validate_structure;

    fn structure(name: &str, params: &[(&str, f64)]) -> AccrStructure {
        let p: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        builtin(name, &p).unwrap().structure
    }

    #[test]
    fn identity_params_change_nothing() {
        let s = structure("example2", &[("lambda", 0.7), ("mu", -0.4)]);
        let t = apply_cct(&s, &TransformParams::default()).unwrap();
        let g = s.model().metric_at(&[]).unwrap();
        let gbar = t.structure.model().metric_at(&[]).unwrap();
        assert!((g.components() - gbar.components()).amax() < 1e-15);
        assert!(
            homothetic_connection_residual(
                &s,
                &TransformParams::default(),
                &[],
                ShiftForm::Derived
            )
            .unwrap()
                < 1e-13
        );
    }

    #[test]
    fn metric_components() {
        let s = structure("example1", &[("n", 1.0)]);
        let ln2 = 2f64.ln();
        let g = |params: TransformParams| {
            apply_cct(&s, &params)
                .unwrap()
                .structure
                .model()
                .metric_at(&[])
                .unwrap()
                .components()
                .clone()
        };
        let m = g(TransformParams::constant(ln2, 0.0, 0.0));
        assert!((m[(1, 1)] - 4.0).abs() < 1e-14);
        assert!((m[(0, 0)] - 1.0).abs() < 1e-14);
        let m = g(TransformParams::constant(
            0.0,
            std::f64::consts::FRAC_PI_4,
            0.0,
        ));
        let at = s.at(&[]).unwrap();
        let gt = at.assoc_metric();
        assert!((m - gt).amax() < 1e-14);
        let m = g(TransformParams::constant(0.0, 0.0, ln2));
        assert!((m[(0, 0)] - 4.0).abs() < 1e-14);
    }

    #[test]
    fn transformed_structure_is_valid() {
        let s = structure("example2", &[("lambda", 1.3), ("mu", 0.5)]);
        let t = apply_cct(&s, &TransformParams::constant(0.3, 0.2, 0.1)).unwrap();
        let r = validate_structure(&t.structure, &[]).unwrap();
        assert!(r.max() < 1e-12);
        assert!(r.signatures_ok(2));
    }

    #[test]
    fn lie_groups_reject_non_constant_params() {
        let s = structure("example1", &[("n", 1.0)]);
        let params = TransformParams {
            u: ScalarField::Affine {
                constant: 0.0,
                gradient: vec![1.0, 0.0, 0.0],
            },
            ..Default::default()
        };
        assert_eq!(
            apply_cct(&s, &params).unwrap_err(),
            GeometryError::NonConstantParams
        );
        let s = structure("example1_chart", &[("n", 1.0)]);
        assert!(matches!(
            homothetic_connection_residual(&s, &params, &[0.1, 0.2, 0.3], ShiftForm::Derived),
            Err(GeometryError::NonConstantParams)
        ));
    }

    #[test]
    fn connection_shift_on_xi_direction() {
        let (alpha, beta) =
            connection_shift((0.0, std::f64::consts::PI / 6.0, 0.0), ShiftForm::Derived);
        assert!((alpha - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((beta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn homothety_conditions_for_constant_params() {
        let s = structure("example2", &[("lambda", 1.0), ("mu", 0.0)]);
        let r = condition_residuals(&s, &TransformParams::constant(0.4, -0.3, 0.0), &[]).unwrap();
        assert_eq!(r.max(), 0.0);
        let r =
            condition_residuals(&s, &TransformParams::constant(0.0, 0.0, 2f64.ln()), &[]).unwrap();
        assert!((r.du_phi_dv - 1.0).abs() < 1e-15);
        let report = preservation_check(
            &s,
            &TransformParams::constant(0.0, 0.0, 2f64.ln()),
            &[],
            1e-9,
        )
        .unwrap();
        assert!(!report.observed(1e-6));
        let report =
            preservation_check(&s, &TransformParams::constant(0.4, -0.3, 0.0), &[], 1e-9).unwrap();
        assert!(report.observed(1e-9));
    }

    #[test]
    fn homothetic_curvature_on_example2() {
        let s = structure("example2", &[("lambda", 1.0), ("mu", 0.5)]);
        let params = TransformParams::constant(0.3, 0.2, 0.0);
        assert!(
            homothetic_connection_residual(&s, &params, &[], ShiftForm::Derived).unwrap() < 1e-12
        );
        let h = homothetic_curvature(&s, &params, &[]).unwrap();
        assert!(h.curvature < 1e-11, "{h:?}");
        assert!(h.ricci < 1e-11);
        assert!(h.scalar_spread() < 1e-10, "{h:?}");
        assert!(h.basis_defect < 1e-12);
        assert!((h.curvature - h.curvature_displayed).abs() < 1e-15);
    }

    #[test]
    fn shift_forms_differ_when_w_is_non_zero() {
        let s = structure("example2", &[("lambda", 1.0), ("mu", 0.5)]);
        let params = TransformParams::constant(0.3, 0.2, 0.1);
        let derived = homothetic_connection_residual(&s, &params, &[], ShiftForm::Derived).unwrap();
        let displayed =
            homothetic_connection_residual(&s, &params, &[], ShiftForm::Displayed).unwrap();
        assert!(derived < 1e-12);
        assert!(displayed > 1e-2);
        let h = homothetic_curvature(&s, &params, &[]).unwrap();
        assert!(h.curvature < 1e-12);
        assert!(h.curvature_displayed > 1e-2);
        assert!(h.ricci < 1e-12);
        assert!(h.scalar_spread() < 1e-12);
    }

    #[test]
    fn homothety_to_einstein_on_the_extension() {
        let s = structure(
            "example3_hsphere_ext",
            &[("n", 3.0), ("a", 2.0 / 3.0), ("b", 0.0)],
        );
        let q = [0.0, 0.1, -0.2, 0.05, 0.2, 0.1, -0.1];
        assert!(einstein_defect(&s, &q).unwrap() < 1e-8);
        let (u, v) = (0.2, 0.3);
        let t = apply_cct(&s, &TransformParams::constant(u, v, 0.0)).unwrap();
        let check = einstein_homothety_check(&t.structure, &q, 1e-6).unwrap();
        assert_eq!(check.fit.class, RicciClass::EtaComplexEinstein);
        let (c, d) = check.fit.cd.unwrap();
        let z = Complex::new(2.0 * u, 2.0 * v).exp();
        assert!((c - z.re).abs() < 1e-8 && (d - z.im).abs() < 1e-8);
        assert!(check.einstein_defect.unwrap() < 1e-8);
    }

    #[test]
    fn scalar_curvatures_of_example1() {
        let s = structure("example1", &[("n", 2.0)]);
        let h = homothetic_curvature(&s, &TransformParams::constant(0.5, 0.7, 0.0), &[]).unwrap();
        assert!((h.scal_direct - 4.0).abs() < 1e-12);
        assert!(h.scal_star_direct.abs() < 1e-12);
        assert!(h.scalar_spread() < 1e-12);
    }

    #[test]
    fn example1_ricci_is_degenerate() {
        let s = structure("example1", &[("n", 2.0)]);
        let check = einstein_homothety_check(&s, &[], 1e-9).unwrap();
        assert_eq!(check.fit.class, RicciClass::Degenerate);
        assert!(check.einstein_defect.is_none());
    }

    #[test]
    fn complex_gram_schmidt() {
        let s = structure("example2", &[("lambda", 0.3), ("mu", 1.1)]);
        let at = s.at(&[]).unwrap();
        let f = complex_orthonormal_horizontal(&at).unwrap();
        let g = at.g.components();
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((f[a].dot(&(g * &f[b])) - want).abs() < 1e-13);
                assert!(f[a].dot(&(g * (&at.phi * &f[b]))).abs() < 1e-13);
            }
            assert!(at.eta.dot(&f[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn params_deserialize_from_json() {
        let p: TransformParams =
            serde_json::from_str(r#"{"u": 0.5, "v": {"constant": 0.0, "gradient": [0, 1, 0]}}"#)
                .unwrap();
        assert_eq!(p.u, ScalarField::Constant(0.5));
        assert_eq!(p.w, ScalarField::Constant(0.0));
        assert!(!p.is_constant());
        assert_eq!(p.v.eval(&[3.0, 2.0, 1.0]), 2.0);
    }
}

#[cfg(test)]
mod chart_tests {
    use super::*;
    use crate::corpus::{builtin, Params};

    fn chart(n: usize) -> AccrStructure {
        let p: Params = [("n".to_string(), n as f64)].into_iter().collect();
        builtin("example1_chart", &p).unwrap().structure
    }

    fn affine(gradient: Vec<f64>) -> ScalarField {
        ScalarField::Affine {
            constant: 0.0,
            gradient,
        }
    }

    #[test]
    fn non_sasaki_like_input_is_rejected() {
        let p: Params = [("n".to_string(), 1.0)].into_iter().collect();
        let s = builtin("flat_parallel", &p).unwrap().structure;
        assert!(matches!(
            preservation_check(&s, &TransformParams::default(), &[], 1e-8),
            Err(GeometryError::NotSasakiLike { .. })
        ));
    }

    #[test]
    fn non_constant_candidates() {
        let s = chart(1);
        let p = [0.3, -0.2, 0.4];
        let cases = [
            TransformParams {
                u: affine(vec![0.0, 1.0, 0.0]),
                v: affine(vec![0.0, 0.0, 1.0]),
                w: ScalarField::Constant(0.0),
            },
            TransformParams {
                u: ScalarField::Constant(0.0),
                v: affine(vec![-1.0, 0.0, 0.0]),
                w: ScalarField::Constant(2f64.ln()),
            },
            TransformParams {
                u: affine(vec![0.0, 1.0, 0.0]),
                ..Default::default()
            },
        ];
        for (params, preserved) in cases.iter().zip([true, true, false]) {
            let r = preservation_check(&s, params, &p, 1e-8).unwrap();
            assert_eq!(r.predicted(1e-9), preserved);
            assert_eq!(r.observed(1e-9), preserved, "{r:?}");
            assert!(r.conditions.consequences() < 1e-12);
            assert_eq!(r.conditions.forms() <= 1e-9, preserved);
        }
    }
}
