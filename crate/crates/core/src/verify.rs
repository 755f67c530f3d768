//! The verification driver: plans every applicable check for a model, evaluates
//! it over the sample points at two finite-difference steps and assembles a report.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_6, LN_2};
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    apply_cct, condition_residuals, einstein_homothety_check, homothetic_connection_residual,
    homothetic_curvature, preservation_check, ricci_fit, ScalarField, ShiftForm, TransformParams,
};
use crate::connection::{
    curvature_symmetries, gauss_residual_with, hsphere_curvature, hsphere_curvature_with,
    levi_civita, project_all, riemann, CurvatureBundle,
};
use crate::corpus::{
    builtin_with, canonical_phi, cross_representation_check, example2_connection_defect,
    extension_horizontal_metrics, Builtin, Params, Role,
};
use crate::error::{GeometryError, Result};
use crate::frame_algebra::{FrameTensor, MetricMatrix};
use crate::models::{lie_group_model, Commutators, ConeMetric, FdConfig, Field, ModelKind};
use crate::report::{CheckResult, Environment, Expectation, ModelReport, VerificationReport};
use crate::sampling::{cone_radii, SampleSpec, DEFAULT_POINTS, DEFAULT_SEED};
use crate::sasaki::{
    check_nijenhuis_form, cone_formula_checks, cone_holomorphic_at, consequences_at,
    curvature_identities_at, defining_at, nabla_phi_at, sasaki_report, second_fundamental_form_at,
    ConeFormulaCheck,
};
use crate::structure::{
    f_xi_xi_residual, fundamental_f_at, nijenhuis, theorem_3_4_residual, validate_structure,
    xi_eta_relation_residual, AccrStructure, FundamentalTensor, StructureAt,
};

/// Designed failures must exceed this residual.
pub const VIOLATION_THRESHOLD: f64 = 0.1;
pub const LIE_TOLERANCE: f64 = 1e-9;
pub const FD_TOLERANCE: f64 = 1e-6;
pub const GAUSS_TOLERANCE: f64 = 1e-5;
pub const ALGEBRAIC_TOLERANCE: f64 = 1e-10;
pub const CROSS_STRUCTURE_TOLERANCE: f64 = 1e-7;
pub const CROSS_METRIC_TOLERANCE: f64 = 1e-10;
pub const TABLE_TOLERANCE: f64 = 1e-12;
/// Cone radii are drawn from this interval; `r = −1` is always included.
pub const CONE_RADII: (f64, f64) = (-2.0, -0.5);

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub points: usize,
    pub fd_step: f64,
    /// Overrides the identity tolerances (1e-9 exact, 1e-6 finite-difference).
    pub tolerance: Option<f64>,
    pub cone_metric: ConeMetric,
    /// Check-ID prefixes; empty runs everything.
    pub checks: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: DEFAULT_SEED,
            points: DEFAULT_POINTS,
            fd_step: crate::models::DEFAULT_FD_STEP,
            tolerance: None,
            cone_metric: ConeMetric::default(),
            checks: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn environment(&self) -> Environment {
        Environment {
            seed: self.seed,
            points: self.points,
            fd_step: self.fd_step,
        }
    }

    fn selects(&self, id: &str) -> bool {
        self.checks.is_empty() || self.checks.iter().any(|p| id.starts_with(p.as_str()))
    }
}

/// Expected role of a model given in JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedRole {
    SasakiLike,
    Parallel,
    #[default]
    Unknown,
}

impl From<ExpectedRole> for Role {
    fn from(r: ExpectedRole) -> Self {
        match r {
            ExpectedRole::SasakiLike => Role::SasakiLike,
            ExpectedRole::Parallel => Role::Parallel,
            ExpectedRole::Unknown => Role::Unknown,
        }
    }
}

/// A model described in JSON: either a built-in with parameters, or a Lie
/// group given by structure constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Entries `(i, j, k, c)` meaning `[e_i, e_j] = … + c e_k`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub xi_index: usize,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
    #[serde(default)]
    pub expect: ExpectedRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_points: Option<SampleSpec>,
}

fn rows_to_matrix(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(GeometryError::BadParams(format!(
            "{what} must be {dim}×{dim}"
        )));
    }
    Ok(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
}

impl ModelSpec {
    fn build_lie(&self, fd: FdConfig) -> Result<Builtin> {
        let n = self
            .n
            .ok_or_else(|| GeometryError::BadParams("`n` is required".into()))?;
        if n == 0 {
            return Err(GeometryError::BadParams("`n` must be at least 1".into()));
        }
        let dim = 2 * n + 1;
        if let Some(&(i, j, k, _)) = self
            .structure_constants
            .iter()
            .find(|(i, j, k, _)| *i >= dim || *j >= dim || *k >= dim)
        {
            return Err(GeometryError::BadParams(format!(
                "structure constant index ({i}, {j}, {k}) out of range for dimension {dim}"
            )));
        }
        let c = Commutators::from_entries(dim, &self.structure_constants)?;
        let metric = match &self.metric {
            Some(rows) => MetricMatrix::new(rows_to_matrix(rows, dim, "metric")?)?,
            None => crate::corpus::standard_metric(n),
        };
        let phi = match &self.phi {
            Some(rows) => rows_to_matrix(rows, dim, "phi")?,
            None => canonical_phi(n),
        };
        if self.xi_index >= dim {
            return Err(GeometryError::BadParams(format!(
                "xi_index {} out of range",
                self.xi_index
            )));
        }
        let mut xi = DVector::zeros(dim);
        xi[self.xi_index] = 1.0;
        let eta = metric.lower(&xi);
        let model = Arc::new(lie_group_model(n, c, metric)?.with_fd(fd));
        let structure = AccrStructure::new(
            model.clone(),
            Field::from_matrix(&phi),
            Field::Constant(xi.iter().copied().collect()),
            Field::Constant(eta.iter().copied().collect()),
        )?;
        Ok(Builtin {
            name: self.name.clone(),
            params: self.params.clone(),
            model,
            structure,
            chart: None,
            hsphere: None,
            ranges: Vec::new(),
            role: self.expect.into(),
            notes: Vec::new(),
        })
    }
}

/// Something to verify.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Builtin {
        name: String,
        params: Params,
    },
    Spec(Box<ModelSpec>),
    Transformed {
        base: Box<Subject>,
        params: TransformParams,
    },
}

fn format_params(params: &Params) -> String {
    params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn format_scalar(f: &ScalarField) -> String {
    match f {
        ScalarField::Constant(c) => format!("{c}"),
        ScalarField::Affine { constant, gradient } => format!("{constant}+{gradient:?}·x"),
    }
}

impl Subject {
    pub fn builtin(name: &str, params: &[(&str, f64)]) -> Self {
        Subject::Builtin {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn from_spec(spec: ModelSpec) -> Self {
        match spec.transform.clone() {
            Some(params) => {
                let mut base = spec;
                base.transform = None;
                Subject::Transformed {
                    base: Box::new(Subject::Spec(Box::new(base))),
                    params,
                }
            }
            None => Subject::Spec(Box::new(spec)),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Subject::Builtin { name, params } => {
                let merged = crate::corpus::default_params(name)
                    .map(|mut d| {
                        d.extend(params.clone());
                        d
                    })
                    .unwrap_or_else(|_| params.clone());
                if merged.is_empty() {
                    name.clone()
                } else {
                    format!("{name}({})", format_params(&merged))
                }
            }
            Subject::Spec(spec) => spec.name.clone(),
            Subject::Transformed { base, params } => format!(
                "{}+cct(u={},v={},w={})",
                base.label(),
                format_scalar(&params.u),
                format_scalar(&params.v),
                format_scalar(&params.w)
            ),
        }
    }

    fn sample_override(&self) -> Option<&SampleSpec> {
        match self {
            Subject::Spec(spec) => spec.sample_points.as_ref(),
            Subject::Transformed { base, .. } => base.sample_override(),
            Subject::Builtin { .. } => None,
        }
    }

    fn build(&self, fd: FdConfig) -> Result<Prepared> {
        match self {
            Subject::Builtin { name, params } => {
                let b = builtin_with(name, params, fd)?;
                let horizontal = horizontal_of(&b, name);
                Ok(Prepared::plain(b, horizontal))
            }
            Subject::Spec(spec) => {
                let b = match (&spec.builtin, spec.kind) {
                    (Some(name), _) => {
                        let mut b = builtin_with(name, &spec.params, fd)?;
                        b.name = spec.name.clone();
                        let horizontal = horizontal_of(&b, name);
                        return Ok(Prepared::plain(b, horizontal));
                    }
                    (None, None | Some(ModelKind::LieGroup)) => spec.build_lie(fd)?,
                    (None, Some(kind)) => {
                        return Err(GeometryError::BadParams(format!(
                            "models of kind `{kind}` are only available as built-ins"
                        )))
                    }
                };
                Ok(Prepared::plain(b, Horizontal::Unknown))
            }
            Subject::Transformed { base, params } => {
                let b = base.build(fd)?.b;
                let t = apply_cct(&b.structure, params)?;
                let origin =
                    (b.role == Role::SasakiLike).then(|| (b.structure.clone(), params.clone()));
                let mut notes = b.notes.clone();
                notes.push(format!("transformed from {}", base.label()));
                Ok(Prepared {
                    b: Builtin {
                        name: self.label(),
                        params: b.params.clone(),
                        model: t.structure.model().clone(),
                        structure: t.structure,
                        chart: None,
                        hsphere: None,
                        ranges: b.ranges.clone(),
                        role: Role::Unknown,
                        notes,
                    },
                    horizontal: Horizontal::Unknown,
                    origin,
                })
            }
        }
    }
}

struct Prepared {
    b: Builtin,
    horizontal: Horizontal,
    /// Sasaki-like base and parameters of a transformed subject.
    origin: Option<(AccrStructure, TransformParams)>,
}

impl Prepared {
    fn plain(b: Builtin, horizontal: Horizontal) -> Self {
        Prepared {
            b,
            horizontal,
            origin: None,
        }
    }
}

/// Known curvature of the horizontal base, for the Gauss equation.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Horizontal {
    Flat,
    Hsphere(crate::models::HsphereParams),
    Unknown,
}

fn horizontal_of(b: &Builtin, name: &str) -> Horizontal {
    match (name, b.hsphere) {
        (_, Some(hp)) => Horizontal::Hsphere(hp),
        ("example1" | "example1_chart", _) => Horizontal::Flat,
        _ => Horizontal::Unknown,
    }
}

struct PointData {
    at: StructureAt,
    ft: FundamentalTensor,
    curvature: OnceLock<Result<CurvatureBundle>>,
}

/// A built model with its sample points and per-point caches.
struct Built {
    b: Builtin,
    horizontal: Horizontal,
    points: Vec<Vec<f64>>,
    cone_points: Vec<(Vec<f64>, f64)>,
    cache: Vec<OnceLock<Result<Arc<PointData>>>>,
    cone_cache: Vec<OnceLock<Result<Vec<ConeFormulaCheck>>>>,
}

impl Built {
    fn new(subject: &Subject, fd: FdConfig, cfg: &RunConfig) -> Result<Self> {
        let Prepared {
            mut b,
            horizontal,
            origin,
        } = subject.build(fd)?;
        let spec = match subject.sample_override() {
            Some(s) => SampleSpec {
                count: s.count,
                seed: s.seed,
                ranges: if s.ranges.is_empty() {
                    b.ranges.clone()
                } else {
                    s.ranges.clone()
                },
            },
            None => SampleSpec {
                count: cfg.points,
                seed: cfg.seed,
                ranges: b.ranges.clone(),
            },
        };
        if spec.ranges.len() != b.model.coord_len() {
            return Err(GeometryError::BadPoint {
                got: spec.ranges.len(),
                want: b.model.coord_len(),
            });
        }
        let points = spec.points();
        if let Some((base, params)) = origin {
            let tol = cfg.tolerance.unwrap_or(if b.model.coord_len() > 0 {
                FD_TOLERANCE
            } else {
                LIE_TOLERANCE
            });
            let mut worst: f64 = 0.0;
            for q in &points {
                worst = worst.max(condition_residuals(&base, &params, q)?.max());
            }
            if worst <= tol {
                b.role = Role::SasakiLike;
                b.notes.push(format!(
                    "preservation conditions hold (residual {worst:.1e}): Sasaki-like checks must pass"
                ));
            } else {
                b.notes.push(format!(
                    "preservation conditions fail (residual {worst:.1e}): Sasaki-like checks are informational"
                ));
            }
        }
        let radii = cone_radii(spec.count.max(1), spec.seed, CONE_RADII.0, CONE_RADII.1);
        let cone_points: Vec<(Vec<f64>, f64)> = if b.model.coord_len() == 0 {
            radii.iter().map(|&r| (Vec::new(), r)).collect()
        } else {
            points
                .iter()
                .zip(radii.iter().cycle())
                .map(|(q, &r)| (q.clone(), r))
                .collect()
        };
        Ok(Built {
            cache: (0..points.len()).map(|_| OnceLock::new()).collect(),
            cone_cache: (0..cone_points.len()).map(|_| OnceLock::new()).collect(),
            b,
            horizontal,
            points,
            cone_points,
        })
    }

    fn s(&self) -> &AccrStructure {
        &self.b.structure
    }

    fn data(&self, i: usize) -> Result<Arc<PointData>> {
        self.cache[i]
            .get_or_init(|| {
                let at = self.s().at(&self.points[i])?;
                let ft = fundamental_f_at(&at);
                Ok(Arc::new(PointData {
                    at,
                    ft,
                    curvature: OnceLock::new(),
                }))
            })
            .clone()
    }

    fn curvature(&self, i: usize) -> Result<(Arc<PointData>, CurvatureBundle)> {
        let d = self.data(i)?;
        let c = d
            .curvature
            .get_or_init(|| riemann(self.b.model.as_ref(), &self.points[i], Some(&d.at.phi)))
            .clone()?;
        Ok((d, c))
    }

    fn cone_lines(&self, i: usize) -> Result<Vec<ConeFormulaCheck>> {
        self.cone_cache[i]
            .get_or_init(|| {
                let (q, r) = &self.cone_points[i];
                cone_formula_checks(self.s(), q, *r)
            })
            .clone()
    }
}

/// Residual of one evaluation, with an optional remark.
#[derive(Debug, Clone, PartialEq)]
struct Outcome {
    residual: f64,
    note: Option<String>,
}

impl From<f64> for Outcome {
    fn from(residual: f64) -> Self {
        Outcome {
            residual,
            note: None,
        }
    }
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sampling {
    Base,
    Cone,
    Once,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TolClass {
    Algebraic,
    Identity,
    Gauss,
    CrossStructure,
    CrossMetric,
    Table,
    Flag,
}

type Eval = Arc<dyn Fn(&Built, usize) -> Result<Outcome> + Send + Sync>;

struct CheckDef {
    id: String,
    identity: String,
    expectation: Expectation,
    class: TolClass,
    sampling: Sampling,
    eval: Eval,
}

struct Planner<'a> {
    cfg: &'a RunConfig,
    defs: Vec<CheckDef>,
}

impl Planner<'_> {
    fn add(
        &mut self,
        id: impl Into<String>,
        identity: impl Into<String>,
        expectation: Expectation,
        class: TolClass,
        sampling: Sampling,
        eval: impl Fn(&Built, usize) -> Result<Outcome> + Send + Sync + 'static,
    ) {
        let id = id.into();
        if self.cfg.selects(&id) {
            self.defs.push(CheckDef {
                id,
                identity: identity.into(),
                expectation,
                class,
                sampling,
                eval: Arc::new(eval),
            });
        }
    }
}

fn sasaki_expectation(role: Role) -> Expectation {
    match role {
        Role::SasakiLike => Expectation::Hold,
        Role::Parallel => Expectation::Violate,
        Role::Unknown => Expectation::Info,
    }
}

/// Constant and affine parameter sets for the conformal checks, with the
/// expected preservation verdict.
fn conformal_sets(b: &Builtin) -> Vec<(String, TransformParams, bool)> {
    let mut sets = vec![
        (
            "u0.3_v0.2".to_string(),
            TransformParams::constant(0.3, 0.2, 0.0),
            true,
        ),
        (
            "uln2_vpi6".to_string(),
            TransformParams::constant(LN_2, FRAC_PI_6, 0.0),
            true,
        ),
        (
            "wln2".to_string(),
            TransformParams::constant(0.0, 0.0, LN_2),
            false,
        ),
        (
            "u0.3_v0.2_w0.25".to_string(),
            TransformParams::constant(0.3, 0.2, 0.25),
            false,
        ),
    ];
    if b.chart.is_some() && b.name == "example1_chart" {
        let len = b.model.coord_len();
        let n = (len - 1) / 2;
        let unit = |k: usize, s: f64| {
            let mut g = vec![0.0; len];
            g[k] = s;
            ScalarField::Affine {
                constant: 0.0,
                gradient: g,
            }
        };
        sets.push((
            "holomorphic_x1".to_string(),
            TransformParams {
                u: unit(1, 1.0),
                v: unit(n + 1, 1.0),
                w: ScalarField::Constant(0.0),
            },
            true,
        ));
        sets.push((
            "v_minus_t_wln2".to_string(),
            TransformParams {
                u: ScalarField::Constant(0.0),
                v: unit(0, -1.0),
                w: ScalarField::Constant(LN_2),
            },
            true,
        ));
        sets.push((
            "u_x1_only".to_string(),
            TransformParams {
                u: unit(1, 1.0),
                ..Default::default()
            },
            false,
        ));
    }
    sets
}

fn plan(built: &Built, cfg: &RunConfig) -> Vec<CheckDef> {
    use Expectation::{Hold, Info, Violate};
    use Sampling::{Base, Cone, Once};
    use TolClass::*;
    let mut p = Planner {
        cfg,
        defs: Vec::new(),
    };
    let b = &built.b;
    let role = b.role;
    let sas = sasaki_expectation(role);
    let kind = b.model.kind();

    p.add(
        "model.commutators_antisymmetric",
        "c^k_ij = −c^k_ji",
        Hold,
        Algebraic,
        Base,
        |bt, i| {
            let c = &bt.data(i)?.at.c;
            let d = c.dim();
            let mut worst: f64 = 0.0;
            for a in 0..d {
                for bb in 0..d {
                    worst = worst.max((c.bracket(a, bb) + c.bracket(bb, a)).amax());
                }
            }
            Ok(worst.into())
        },
    );
    if kind == ModelKind::LieGroup {
        p.add(
            "model.jacobi",
            "cyclic sum of [[e_i,e_j],e_k] = 0",
            Hold,
            Algebraic,
            Once,
            |bt, _| Ok(bt.b.model.commutators_at(&[])?.jacobi_residual().into()),
        );
    }
    if kind == ModelKind::ProductExtension {
        p.add(
            "extension.periodicity",
            "g(t + π) = g(t)",
            Hold,
            Algebraic,
            Base,
            |bt, i| {
                let q = &bt.points[i];
                let mut shifted = q.clone();
                shifted[0] += std::f64::consts::PI;
                let a = bt.b.model.metric_at(q)?;
                let c = bt.b.model.metric_at(&shifted)?;
                Ok((a.components() - c.components()).amax().into())
            },
        );
    }

    p.add(
        "structure.axioms",
        "φξ = 0, φ² = −Id + η⊗ξ, η∘φ = 0, η(ξ) = 1, g(φx,φy) = −g(x,y) + η(x)η(y), g̃ symmetric",
        Hold,
        Algebraic,
        Base,
        |bt, i| Ok(validate_structure(bt.s(), &bt.points[i])?.max().into()),
    );
    p.add(
        "structure.signature",
        "g and g̃ have signature (n+1, n)",
        Hold,
        Flag,
        Base,
        |bt, i| {
            let r = validate_structure(bt.s(), &bt.points[i])?;
            Ok(flag(r.signatures_ok(bt.s().n())).into())
        },
    );
    p.add(
        "connection.torsion",
        "Γ^k_ij − Γ^k_ji = c^k_ij",
        Hold,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(d.at.gamma.torsion_residual(&d.at.c).into())
        },
    );
    p.add(
        "connection.metric_compatibility",
        "e_i g(e_j,e_k) = g(∇_i e_j, e_k) + g(e_j, ∇_i e_k)",
        Hold,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            let dg = bt.b.model.metric_derivatives(&bt.points[i])?;
            Ok(d.at.gamma.metric_compat_residual(&d.at.g, &dg).into())
        },
    );
    p.add(
        "curvature.symmetries",
        "R antisymmetric in each pair, pair interchange, first Bianchi identity",
        Hold,
        Identity,
        Base,
        |bt, i| Ok(curvature_symmetries(&bt.curvature(i)?.1.r).max().into()),
    );
    p.add(
        "curvature.ricci_symmetric",
        "Ric(x,y) = Ric(y,x)",
        Hold,
        Identity,
        Base,
        |bt, i| {
            Ok(bt
                .curvature(i)?
                .1
                .ric
                .pair_symmetry_defect(0, 1, 1.0)
                .into())
        },
    );
    p.add(
        "core.f_symmetry",
        "F(x,y,z) = F(x,z,y)",
        Hold,
        Identity,
        Base,
        |bt, i| Ok(bt.data(i)?.ft.symmetry_residual().into()),
    );
    p.add(
        "core.f_phi_invariance",
        "F(x,y,z) = F(x,φy,φz) + η(y)F(x,ξ,z) + η(z)F(x,y,ξ)",
        Hold,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(d.ft.phi_invariance_residual(&d.at).into())
        },
    );
    p.add(
        "core.theta_relation",
        "θ*∘φ = −θ∘φ²",
        Hold,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(d.ft.theta_relation_residual(&d.at).into())
        },
    );
    p.add(
        "core.nabla_eta",
        "(∇_x η)y = g(∇_x ξ, y) = F(x,φy,ξ)",
        Hold,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(xi_eta_relation_residual(&d.at, &d.ft).into())
        },
    );
    p.add(
        "core.f_xi_xi",
        "F(ξ,ξ,z) = ½ N̂(ξ,ξ,φz)",
        Hold,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            let pair = nijenhuis(bt.s(), &bt.points[i])?;
            Ok(f_xi_xi_residual(&d.at, &d.ft.f, &pair.n_hat_brackets).into())
        },
    );
    p.add(
        "nijenhuis.route_gap",
        "N and N̂ from brackets equal N and N̂ expressed through F",
        Hold,
        Identity,
        Base,
        |bt, i| Ok(nijenhuis(bt.s(), &bt.points[i])?.route_gap().into()),
    );
    p.add(
        "core.f_from_nijenhuis",
        "F(x,y,z) = −¼[N(φx,y,z) + N(φx,z,y) + N̂(φx,y,z) + N̂(φx,z,y)] + ½η(x)[N(ξ,y,φz) + N̂(ξ,y,φz) + η(z)N̂(ξ,ξ,φy)]",
        Hold,
        Identity,
        Base,
        |bt, i| Ok(theorem_3_4_residual(bt.s(), &bt.points[i])?.into()),
    );

    p.add(
        "sasaki.defining",
        "F(X,Y,Z) = F(ξ,Y,Z) = F(ξ,ξ,Z) = 0 and F(X,Y,ξ) = −g(X,Y) for horizontal X,Y,Z",
        sas,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(defining_at(&d.at, &d.ft).max().into())
        },
    );
    p.add(
        "sasaki.nabla_phi",
        "(∇_x φ)y = −g(x,y)ξ − η(y)x + 2η(x)η(y)ξ",
        sas,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(nabla_phi_at(&d.at, &d.ft).into())
        },
    );
    p.add(
        "sasaki.nijenhuis_form",
        "N = 0 and N̂ = −4(g̃ − η⊗η)⊗ξ",
        sas,
        Identity,
        Base,
        |bt, i| Ok(check_nijenhuis_form(bt.s(), &bt.points[i])?.max().into()),
    );
    p.add(
        "sasaki.coherence",
        "the defining, ∇φ and Nijenhuis characterizations agree at tolerance 1e-6",
        Hold,
        Flag,
        Base,
        |bt, i| Ok(flag(sasaki_report(bt.s(), &bt.points[i])?.coherent(FD_TOLERANCE)).into()),
    );
    p.add(
        "sasaki.consequences",
        "dη = 0, ∇_ξ ξ = 0, θ = −2nη, θ* = 0, [X,ξ] ∈ H, ∇_ξ X = −φX − [X,ξ]",
        sas,
        Identity,
        Base,
        |bt, i| {
            let d = bt.data(i)?;
            Ok(consequences_at(&d.at, &d.ft).max().into())
        },
    );
    p.add(
        "curvature.second_fundamental_form",
        "g(∇_X ξ, Y) = −g̃(X,Y) on H",
        sas,
        Identity,
        Base,
        |bt, i| Ok(second_fundamental_form_at(&bt.data(i)?.at).into()),
    );
    let parallel = match role {
        Role::Parallel => Hold,
        Role::SasakiLike => Violate,
        Role::Unknown => Info,
    };
    p.add(
        "parallel.f_vanishes",
        "F = 0",
        parallel,
        Identity,
        Base,
        |bt, i| Ok(bt.data(i)?.ft.f.max_abs().into()),
    );

    if role == Role::SasakiLike {
        type Pick = fn(&crate::sasaki::CurvatureIdentityResiduals) -> f64;
        let identities: [(&str, &str, Pick); 6] = [
            (
                "curvature.curf",
                "R(x,y,φz,u) − R(x,y,z,φu) = (g(y,z) − 2η(y)η(z))g(x,φu) + … (φ-twisted curvature formula)",
                |r| r.curf,
            ),
            (
                "curvature.r_xy_xi",
                "R(x,y,ξ,z) = η(y)g(x,z) − η(x)g(y,z)",
                |r| r.r_xi,
            ),
            (
                "curvature.r_xi_z_xy",
                "R(ξ,z,x,y) = η(y)g(x,z) − η(x)g(y,z)",
                |r| r.r_xi_first,
            ),
            ("curvature.ricci_xi_xi", "Ric(ξ,ξ) = 2n", |r| r.ric_xi_xi),
            ("curvature.ricci_xi", "Ric(y,ξ) = 2nη(y)", |r| r.ric_xi),
            ("curvature.r_xi_x_xi", "R(ξ,X)ξ = −X for horizontal X", |r| {
                r.r_xi_x_xi
            }),
        ];
        for (id, identity, pick) in identities {
            p.add(id, identity, Hold, Identity, Base, move |bt, i| {
                let (d, c) = bt.curvature(i)?;
                Ok(pick(&curvature_identities_at(&d.at, &c)).into())
            });
        }
        if built.horizontal != Horizontal::Unknown {
            p.add(
                "curvature.gauss",
                "R(X,Y,Z,U) = R^h(X,Y,Z,U) + g(φX,Z)g(φY,U) − g(φY,Z)g(φX,U) on H",
                Hold,
                Gauss,
                Base,
                |bt, i| {
                    let (d, c) = bt.curvature(i)?;
                    let rh = horizontal_curvature(bt, i)?;
                    Ok(gauss_residual_with(
                        &c.r,
                        &rh,
                        &d.at.g,
                        &d.at.phi,
                        &d.at.horizontal_projector(),
                    )?
                    .into())
                },
            );
            p.add(
                "curvature.horizontal_ricci",
                "Ric(Y,Z) = Ric^h(Y,Z) for horizontal Y, Z",
                Hold,
                Gauss,
                Base,
                |bt, i| {
                    let (d, c) = bt.curvature(i)?;
                    let proj = d.at.horizontal_projector();
                    let lhs = project_all(&c.ric, &proj);
                    let rhs = FrameTensor::from_matrix(&horizontal_ricci(bt, i)?);
                    Ok(lhs.max_diff(&rhs)?.into())
                },
            );
        }
    }
    if let Horizontal::Hsphere(hp) = built.horizontal {
        p.add(
            "hsphere.scalar_closed_form",
            "contracting R' gives Ric' = 2(n−1)(a h' + b h̃')/(a² + b²) and Scal' = 4n(n−1)a/(a² + b²)",
            Hold,
            Algebraic,
            Once,
            move |_, _| {
                let c = hsphere_curvature(hp.n, hp.a, hp.b)?;
                let m = 2 * hp.n;
                let eps = |k: usize| if k < hp.n { 1.0 } else { -1.0 };
                let ric = DMatrix::from_fn(m, m, |y, z| {
                    (0..m).map(|k| eps(k) * c.r.get(&[k, y, z, k])).sum::<f64>()
                });
                let scal: f64 = (0..m).map(|k| eps(k) * ric[(k, k)]).sum();
                let closed = 4.0 * hp.n as f64 * (hp.n as f64 - 1.0) * hp.a / (hp.a * hp.a + hp.b * hp.b);
                let residual = (ric - c.ric.to_matrix())
                    .amax()
                    .max((scal - c.scal).abs())
                    .max((c.scal - closed).abs());
                Ok(Outcome {
                    residual,
                    note: Some(format!("Scal' = {scal}")),
                })
            },
        );
        if role == Role::SasakiLike {
            p.add(
                "hsphere.einstein_equivalence",
                "|Ric − 2n g| on the extension equals |Ric^h − 2n g|_H| (Einstein iff horizontally Einstein)",
                Hold,
                Gauss,
                Base,
                |bt, i| {
                    let (d, c) = bt.curvature(i)?;
                    let two_n = 2.0 * d.at.n as f64;
                    let full = (c.ric.to_matrix() - d.at.g.components() * two_n).amax();
                    let proj = d.at.horizontal_projector();
                    let g_h = proj.transpose() * d.at.g.components() * &proj;
                    let horizontal = (horizontal_ricci(bt, i)? - g_h * two_n).amax();
                    Ok(Outcome {
                        residual: (full - horizontal).abs(),
                        note: Some(if full <= GAUSS_TOLERANCE {
                            "Einstein at some sample points".into()
                        } else {
                            "not Einstein at sampled points".into()
                        }),
                    })
                },
            );
            p.add(
                "einstein.homothety",
                "the homothety with e^{2(u+iv)} = 1/(c + id) from the Ricci fit makes Ric = 2n ḡ",
                Hold,
                Gauss,
                Base,
                |bt, i| {
                    let check = einstein_homothety_check(bt.s(), &bt.points[i], GAUSS_TOLERANCE)?;
                    match check.einstein_defect {
                        Some(r) => Ok(r.into()),
                        None => Err(GeometryError::BadParams(format!(
                            "Ricci tensor is {:?}, no finite (c, d)",
                            check.fit.class
                        ))),
                    }
                },
            );
        }
    }

    p.add(
        "cone.holomorphic",
        "∇̌J̌ = 0 on the cone M × ℝ⁻",
        sas,
        Identity,
        Cone,
        {
            let metric = cfg.cone_metric;
            move |bt, i| {
                let (q, r) = &bt.cone_points[i];
                Ok(cone_holomorphic_at(bt.s(), q, *r, metric)?.into())
            }
        },
    );
    let labels = crate::sasaki::CONE_FORMULA_LABELS;
    let display = if role == Role::Unknown { Info } else { Hold };
    for (k, label) in labels.iter().enumerate() {
        p.add(
            format!("cone.display.{k:02}"),
            format!("displayed cone component {label} equals the direct computation"),
            display,
            Identity,
            Cone,
            move |bt, i| Ok(bt.cone_lines(i)?[k].residual.into()),
        );
    }

    if role == Role::SasakiLike {
        plan_conformal(&mut p, b);
        p.add(
            "einstein.fit",
            "Ric = A g + B g(·,φ·) + (2n − A)η⊗η, c + id = 2n/(A + iB)",
            Info,
            Identity,
            Base,
            |bt, i| {
                let (d, c) = bt.curvature(i)?;
                let fit = ricci_fit(&d.at, &c.ric, GAUSS_TOLERANCE);
                let class = serde_json::to_value(fit.class)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_string))
                    .unwrap_or_default();
                Ok(Outcome {
                    residual: fit.residual,
                    note: Some(format!("class {class}")),
                })
            },
        );
    }

    if let Some(chart) = &b.chart {
        let _ = chart;
        let partner = match b.name.as_str() {
            "example1_chart" => Some("example1"),
            "example2_chart" => Some("example2"),
            _ => None,
        };
        if let Some(partner) = partner {
            type PickCross = fn(&crate::corpus::CrossRepresentation) -> f64;
            let items: [(&str, &str, TolClass, PickCross); 3] = [
                (
                    "crossrep.structure_equations",
                    "commutators of the chart coframe equal the group structure constants",
                    CrossStructure,
                    |c| c.structure_equations,
                ),
                (
                    "crossrep.metric",
                    "closed-form coordinate metric equals Σ ε_i (e^i)² from the coframe",
                    CrossMetric,
                    |c| c.metric,
                ),
                (
                    "crossrep.verdicts",
                    "group and chart forms have the same Sasaki-like verdict",
                    Flag,
                    |c| flag(c.verdicts_agree()),
                ),
            ];
            for (id, identity, class, pick) in items {
                let params = b.params.clone();
                p.add(id, identity, Hold, class, Once, move |bt, _| {
                    let lie = builtin_with(partner, &params, FdConfig::default())?;
                    let c = cross_representation_check(
                        &lie,
                        &bt.b,
                        &bt.points,
                        LIE_TOLERANCE,
                        FD_TOLERANCE,
                    )?;
                    Ok(pick(&c).into())
                });
            }
        }
    }
    if kind == ModelKind::LieGroup && b.name == "example2" {
        let (l, m) = (b.params["lambda"], b.params["mu"]);
        p.add(
            "example2.connection_table",
            "Levi-Civita coefficients equal the displayed list ∇_{e_0}e_1 = λe_2 + μe_4, …",
            Hold,
            Table,
            Once,
            move |bt, _| {
                let gamma = levi_civita(bt.b.model.as_ref(), &[])?;
                Ok(example2_connection_defect(&gamma, l, m).into())
            },
        );
    }
    p.defs
}

fn plan_conformal(p: &mut Planner<'_>, b: &Builtin) {
    use Expectation::{Hold, Violate};
    use Sampling::Base;
    use TolClass::*;
    for (label, params, preserved) in conformal_sets(b) {
        let expect = if preserved { Hold } else { Violate };
        let id = |s: &str| format!("conformal.{label}.{s}");
        let t = params.clone();
        p.add(
            id("axioms"),
            "the transformed (φ, ξ̄, η̄, ḡ) satisfies the accR axioms",
            Hold,
            Algebraic,
            Base,
            move |bt, i| {
                let tr = apply_cct(bt.s(), &t)?;
                Ok(validate_structure(&tr.structure, &bt.points[i])?
                    .max()
                    .into())
            },
        );
        let t = params.clone();
        p.add(
            id("conditions"),
            "dw∘φ = 0, du − dv∘φ = 0, du∘φ + dv = (1 − e^w)η",
            expect,
            Identity,
            Base,
            move |bt, i| Ok(condition_residuals(bt.s(), &t, &bt.points[i])?.max().into()),
        );
        let t = params.clone();
        p.add(
            id("preserved"),
            "the transformed structure is Sasaki-like (defining conditions recomputed on ḡ)",
            expect,
            Identity,
            Base,
            move |bt, i| {
                let tol = identity_tolerance(bt, None);
                Ok(preservation_check(bt.s(), &t, &bt.points[i], tol * 10.0)?
                    .transformed_defining
                    .into())
            },
        );
        if let ScalarField::Constant(w) = params.w {
            if w != 0.0 && params.u.is_constant() && params.v.is_constant() {
                let t = params.clone();
                p.add(
                    id("third_condition"),
                    "for constant parameters the third condition has residual |1 − e^w|",
                    Hold,
                    Algebraic,
                    Base,
                    move |bt, i| {
                        let r = condition_residuals(bt.s(), &t, &bt.points[i])?;
                        Ok((r.du_phi_dv - (1.0 - w.exp()).abs()).abs().into())
                    },
                );
            }
        }
        if preserved {
            let t = params.clone();
            p.add(
                id("consequences"),
                "du(ξ) = 0, dv(ξ) = 1 − e^w",
                Hold,
                Identity,
                Base,
                move |bt, i| {
                    Ok(condition_residuals(bt.s(), &t, &bt.points[i])?
                        .consequences()
                        .into())
                },
            );
            let t = params.clone();
            p.add(
                id("proof_forms"),
                "the 1-forms A and B built from du, dv, w vanish",
                Hold,
                Identity,
                Base,
                move |bt, i| {
                    Ok(condition_residuals(bt.s(), &t, &bt.points[i])?
                        .forms()
                        .into())
                },
            );
        }
        if params.is_constant() {
            let t = params.clone();
            p.add(
                id("connection"),
                "∇̄_x y = ∇_x y + e^{2(u−w)}sin2v g(φx,φy)ξ − (1 − e^{2(u−w)}cos2v) g(x,φy)ξ",
                Hold,
                Identity,
                Base,
                move |bt, i| {
                    Ok(homothetic_connection_residual(
                        bt.s(),
                        &t,
                        &bt.points[i],
                        ShiftForm::Derived,
                    )?
                    .into())
                },
            );
            if params.w != ScalarField::Constant(0.0) {
                let t = params.clone();
                p.add(
                    id("connection_displayed"),
                    "∇̄_x y = ∇_x y + e^{2(u−w)}sin2v g(φx,φy)ξ − (e^{−2w} − e^{2(u−w)}cos2v) g(x,φy)ξ, which differs from the Koszul connection when w ≠ 0",
                    Violate,
                    Identity,
                    Base,
                    move |bt, i| {
                        Ok(homothetic_connection_residual(
                            bt.s(),
                            &t,
                            &bt.points[i],
                            ShiftForm::Displayed,
                        )?
                        .into())
                    },
                );
            }
            type PickCurv = fn(&crate::conformal::HomotheticCurvature) -> f64;
            let items: [(&str, &str, PickCurv); 3] = [
                (
                    "curvature",
                    "R̄(x,y)z = R(x,y)z + α{…} + β{…} with the connection shift coefficients",
                    |h| h.curvature,
                ),
                ("ricci_invariance", "R̄ic = Ric", |h| h.ricci),
                (
                    "scalar_curvatures",
                    "S̄cal, S̄cal* from the transformation formulas, the adapted ḡ-basis and direct ḡ-traces agree",
                    |h| h.scalar_spread().max(h.basis_defect),
                ),
            ];
            for (suffix, identity, pick) in items {
                let t = params.clone();
                p.add(id(suffix), identity, Hold, Identity, Base, move |bt, i| {
                    Ok(pick(&homothetic_curvature(bt.s(), &t, &bt.points[i])?).into())
                });
            }
        }
    }
}

fn horizontal_curvature(bt: &Built, i: usize) -> Result<FrameTensor> {
    let d = bt.b.model.dim();
    match bt.horizontal {
        Horizontal::Hsphere(hp) => {
            let q = &bt.points[i];
            let (c2, s2) = ((2.0 * q[0]).cos(), (2.0 * q[0]).sin());
            let (h, ht) = extension_horizontal_metrics(hp, q)?;
            hsphere_curvature_with(
                hp.a * c2 + hp.b * s2,
                hp.b * c2 - hp.a * s2,
                &FrameTensor::from_matrix(&h),
                &FrameTensor::from_matrix(&ht),
            )
        }
        _ => Ok(FrameTensor::covariant(d, 4)),
    }
}

fn horizontal_ricci(bt: &Built, i: usize) -> Result<DMatrix<f64>> {
    let d = bt.b.model.dim();
    match bt.horizontal {
        Horizontal::Hsphere(hp) => {
            let (h, ht) = extension_horizontal_metrics(hp, &bt.points[i])?;
            let k = 2.0 * (hp.n as f64 - 1.0) / (hp.a * hp.a + hp.b * hp.b);
            Ok((h * hp.a + ht * hp.b) * k)
        }
        _ => Ok(DMatrix::zeros(d, d)),
    }
}

fn uses_fd(built: &Built, sampling: Sampling) -> bool {
    sampling == Sampling::Cone || built.b.model.coord_len() > 0
}

fn identity_tolerance(bt: &Built, cfg: Option<&RunConfig>) -> f64 {
    if let Some(t) = cfg.and_then(|c| c.tolerance) {
        return t;
    }
    if uses_fd(bt, Sampling::Base) {
        FD_TOLERANCE
    } else {
        LIE_TOLERANCE
    }
}

fn tolerance(def: &CheckDef, built: &Built, cfg: &RunConfig) -> f64 {
    if def.expectation == Expectation::Violate {
        return VIOLATION_THRESHOLD;
    }
    let fd = uses_fd(built, def.sampling);
    match def.class {
        TolClass::Algebraic => ALGEBRAIC_TOLERANCE,
        TolClass::Identity => {
            cfg.tolerance
                .unwrap_or(if fd { FD_TOLERANCE } else { LIE_TOLERANCE })
        }
        TolClass::Gauss => {
            cfg.tolerance
                .unwrap_or(if fd { GAUSS_TOLERANCE } else { LIE_TOLERANCE })
        }
        TolClass::CrossStructure => CROSS_STRUCTURE_TOLERANCE,
        TolClass::CrossMetric => CROSS_METRIC_TOLERANCE,
        TolClass::Table => TABLE_TOLERANCE,
        TolClass::Flag => 0.0,
    }
}

/// Maximum residual over all samples; `Err` carries the first failure message.
fn evaluate(def: &CheckDef, built: &Built) -> std::result::Result<(f64, BTreeSet<String>), String> {
    let count = match def.sampling {
        Sampling::Base => built.points.len(),
        Sampling::Cone => built.cone_points.len(),
        Sampling::Once => 1,
    };
    let outcomes: Vec<Result<Outcome>> = (0..count)
        .into_par_iter()
        .map(|i| (def.eval)(built, i))
        .collect();
    let mut worst: f64 = 0.0;
    let mut notes = BTreeSet::new();
    for o in outcomes {
        let o = o.map_err(|e| e.to_string())?;
        if o.residual.is_nan() || worst.is_nan() {
            worst = f64::NAN;
        } else {
            worst = worst.max(o.residual);
        }
        notes.extend(o.note);
    }
    Ok((worst, notes))
}

fn run_check(
    def: &CheckDef,
    primary: &Built,
    secondary: Option<&Built>,
    cfg: &RunConfig,
) -> CheckResult {
    let tolerance = tolerance(def, primary, cfg);
    let (max_residual, note) = match evaluate(def, primary) {
        Ok((r, notes)) => (
            Some(r).filter(|r| r.is_finite()),
            (!notes.is_empty()).then(|| notes.into_iter().collect::<Vec<_>>().join("; ")),
        ),
        Err(e) => (None, Some(e)),
    };
    let fd_error_estimate = if !uses_fd(primary, def.sampling) {
        Some(0.0)
    } else {
        match (max_residual, secondary.map(|s| evaluate(def, s))) {
            (Some(a), Some(Ok((b, _)))) if b.is_finite() => Some((a - b).abs()),
            _ => None,
        }
    };
    CheckResult {
        check_id: def.id.clone(),
        identity: def.identity.clone(),
        expectation: def.expectation,
        max_residual,
        fd_error_estimate,
        tolerance,
        verdict: def.expectation.verdict(max_residual, tolerance),
        note,
    }
}

/// Runs every applicable check on one subject.
pub fn verify_subject(subject: &Subject, cfg: &RunConfig) -> ModelReport {
    let fd = FdConfig::with_step(cfg.fd_step);
    let label = subject.label();
    let primary = match Built::new(subject, fd, cfg) {
        Ok(b) => b,
        Err(e) => {
            return ModelReport {
                model: label,
                kind: None,
                params: Params::new(),
                sample_points: 0,
                notes: Vec::new(),
                error: Some(e.to_string()),
                checks: Vec::new(),
                all_pass: false,
            }
        }
    };
    let plan = plan(&primary, cfg);
    let needs_second = plan.iter().any(|d| uses_fd(&primary, d.sampling));
    let secondary = if needs_second {
        Built::new(subject, fd.halved(), cfg).ok()
    } else {
        None
    };
    let checks: Vec<CheckResult> = plan
        .par_iter()
        .map(|d| run_check(d, &primary, secondary.as_ref(), cfg))
        .collect();
    let all_pass = checks
        .iter()
        .all(|c| c.verdict == crate::report::Verdict::Pass);
    ModelReport {
        model: label,
        kind: Some(primary.b.model.kind()),
        params: primary.b.params.clone(),
        sample_points: primary.points.len(),
        notes: primary.b.notes.clone(),
        error: None,
        checks,
        all_pass,
    }
}

/// Runs all subjects; the report order follows `subjects`.
pub fn run_all(subjects: &[Subject], cfg: &RunConfig) -> VerificationReport {
    let models = subjects
        .par_iter()
        .map(|s| verify_subject(s, cfg))
        .collect();
    VerificationReport::new(cfg.environment(), models)
}

/// The full corpus with the parameter variants exercised by the suite.
pub fn default_suite() -> Vec<Subject> {
    vec![
        Subject::builtin("example1", &[("n", 1.0)]),
        Subject::builtin("example1", &[("n", 2.0)]),
        Subject::builtin("example1", &[("n", 3.0)]),
        Subject::builtin("example1_chart", &[("n", 1.0)]),
        Subject::builtin("example1_chart", &[("n", 2.0)]),
        Subject::builtin("example2", &[("lambda", 1.0), ("mu", 0.0)]),
        Subject::builtin("example2", &[("lambda", 3.0), ("mu", -2.0)]),
        Subject::builtin("example2", &[("lambda", 0.0), ("mu", 0.0)]),
        Subject::builtin("example2", &[("lambda", 2.0), ("mu", 1.0)]),
        Subject::builtin("example2_chart", &[("lambda", 1.0), ("mu", 0.0)]),
        Subject::builtin(
            "example3_hsphere_ext",
            &[("n", 3.0), ("a", 1.0), ("b", 0.0)],
        ),
        Subject::builtin(
            "example3_hsphere_ext",
            &[("n", 3.0), ("a", 3.0), ("b", 4.0)],
        ),
        Subject::builtin(
            "example3_hsphere_ext",
            &[("n", 3.0), ("a", 2.0 / 3.0), ("b", 0.0)],
        ),
        Subject::builtin("flat_parallel", &[("n", 1.0)]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    fn cfg(checks: &[&str]) -> RunConfig {
        RunConfig {
            points: 3,
            checks: checks.iter().map(|s| s.to_string()).collect(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn labels_include_merged_params() {
        assert_eq!(
            Subject::builtin("example2", &[("mu", -2.0)]).label(),
            "example2(lambda=1,mu=-2)"
        );
        assert_eq!(Subject::builtin("example1", &[]).label(), "example1(n=1)");
    }

    #[test]
    fn prefix_filter_selects_checks() {
        let r = verify_subject(&Subject::builtin("example1", &[]), &cfg(&["sasaki."]));
        assert!(!r.checks.is_empty());
        assert!(r.checks.iter().all(|c| c.check_id.starts_with("sasaki.")));
        assert!(r.all_pass);
    }

    #[test]
    fn build_errors_become_model_errors() {
        let r = run_all(
            &[
                Subject::builtin("example3_hsphere_ext", &[("a", 0.0), ("b", 0.0)]),
                Subject::builtin("nope", &[]),
                Subject::builtin("example1", &[]),
            ],
            &cfg(&["structure."]),
        );
        assert!(r.models[0].error.is_some());
        assert!(r.models[1].error.is_some());
        assert!(r.models[2].all_pass);
        assert!(!r.all_pass);
    }

    #[test]
    fn lie_spec_matches_builtin() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"name": "e1", "n": 1, "structure_constants": [[0, 1, 2, 1.0], [0, 2, 1, -1.0]], "expect": "sasaki_like"}"#,
        )
        .unwrap();
        let r = verify_subject(&Subject::from_spec(spec), &cfg(&[]));
        assert!(r.error.is_none());
        assert!(
            r.all_pass,
            "{:?}",
            r.checks
                .iter()
                .filter(|c| c.verdict == Verdict::Fail)
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn spec_rejects_bad_indices() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"name": "x", "n": 1, "structure_constants": [[1, 5, 0, 1.0]]}"#,
        )
        .unwrap();
        let r = verify_subject(&Subject::from_spec(spec), &cfg(&[]));
        assert!(r.error.unwrap().contains("out of range"));
    }

    #[test]
    fn violated_preservation_is_a_designed_fail() {
        let r = verify_subject(
            &Subject::builtin("example2", &[]),
            &cfg(&["conformal.wln2."]),
        );
        let c = r
            .checks
            .iter()
            .find(|c| c.check_id == "conformal.wln2.conditions")
            .unwrap();
        assert_eq!(c.expectation, Expectation::Violate);
        assert_eq!(c.verdict, Verdict::Pass);
        assert!(r.all_pass);
    }

    #[test]
    fn chart_checks_carry_fd_error_estimates() {
        let r = verify_subject(
            &Subject::builtin("example1_chart", &[]),
            &cfg(&["curvature.ricci_xi_xi"]),
        );
        let c = &r.checks[0];
        let e = c.fd_error_estimate.unwrap();
        assert!(e > 0.0 && e < 1e-8, "{e}");
    }
}
