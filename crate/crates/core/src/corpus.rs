//! Built-in example models and their cross-representation checks.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::connection::ConnectionCoefficients;
use crate::error::{GeometryError, Result};
use crate::frame_algebra::{basis, MetricMatrix};
use crate::models::{
    canonical_j, chart_model, hsphere_base, lie_group_model, product_extension, ChartModel,
    Commutators, FdConfig, Field, HsphereParams, ManifoldModel,
};
use crate::sasaki::check_defining_conditions;
use crate::structure::AccrStructure;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = [
    "example1",
    "example1_chart",
    "example2",
    "example2_chart",
    "example3_hsphere_ext",
    "flat_parallel",
];

/// Named real parameters, e.g. `n`, `lambda`, `mu`, `a`, `b`.
pub type Params = BTreeMap<String, f64>;

/// Whether the corpus expects a model to be Sasaki-like.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    SasakiLike,
    Parallel,
    /// No expectation; checks of the Sasaki family are recorded only.
    Unknown,
}

/// A constructed corpus member.
#[derive(Clone)]
pub struct Builtin {
    pub name: String,
    pub params: Params,
    pub model: Arc<dyn ManifoldModel>,
    pub structure: AccrStructure,
    /// Concrete chart, kept for coframe-level checks.
    pub chart: Option<Arc<ChartModel>>,
    /// Closed-form h-sphere parameters of an extension base.
    pub hsphere: Option<HsphereParams>,
    /// Coordinate box sampled by the verifier; empty for Lie groups.
    pub ranges: Vec<(f64, f64)>,
    pub role: Role,
    pub notes: Vec<String>,
}

impl std::fmt::Debug for Builtin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Builtin")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("kind", &self.model.kind())
            .field("role", &self.role)
            .finish()
    }
}

/// Default parameters of a built-in model.
pub fn default_params(name: &str) -> Result<Params> {
    let pairs: &[(&str, f64)] = match name {
        "example1" | "example1_chart" | "flat_parallel" => &[("n", 1.0)],
        "example2" => &[("lambda", 1.0), ("mu", 0.0)],
        "example2_chart" => &[("lambda", 1.0), ("mu", 0.0)],
        "example3_hsphere_ext" => &[("n", 3.0), ("a", 1.0), ("b", 0.0)],
        _ => return Err(GeometryError::UnknownBuiltin(name.to_string())),
    };
    Ok(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

fn merged(name: &str, params: &Params) -> Result<Params> {
    let mut out = default_params(name)?;
    for (k, v) in params {
        if !out.contains_key(k) {
            return Err(GeometryError::BadParams(format!(
                "`{name}` does not take parameter `{k}`"
            )));
        }
        if !v.is_finite() {
            return Err(GeometryError::BadParams(format!("`{k}` must be finite")));
        }
        out.insert(k.clone(), *v);
    }
    Ok(out)
}

fn dimension_param(params: &Params) -> Result<usize> {
    let n = params["n"];
    if n < 1.0 || n.fract() != 0.0 || n > 6.0 {
        return Err(GeometryError::BadParams(format!(
            "n must be an integer in 1..=6, got {n}"
        )));
    }
    Ok(n as usize)
}

/// `φ e_i = e_{n+i}`, `φ e_{n+i} = −e_i`, `φ e_0 = 0`.
pub fn canonical_phi(n: usize) -> DMatrix<f64> {
    let mut phi = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    phi.view_mut((1, 1), (2 * n, 2 * n))
        .copy_from(&canonical_j(n));
    phi
}

/// `diag(1, .., 1, −1, .., −1)` with `n+1` positive entries.
pub fn standard_metric(n: usize) -> MetricMatrix {
    let diag: Vec<f64> = (0..=2 * n)
        .map(|i| if i <= n { 1.0 } else { -1.0 })
        .collect();
    MetricMatrix::diagonal(&diag).expect("standard metric is nondegenerate")
}

fn reeb_structure(model: Arc<dyn ManifoldModel>, n: usize) -> Result<AccrStructure> {
    let e0: Vec<f64> = basis(2 * n + 1, 0).iter().copied().collect();
    AccrStructure::new(
        model,
        Field::from_matrix(&canonical_phi(n)),
        Field::Constant(e0.clone()),
        Field::Constant(e0),
    )
}

/// `[e_0, e_i] = e_{n+i}`, `[e_0, e_{n+i}] = −e_i`.
pub fn example1_commutators(n: usize) -> Commutators {
    let mut entries = Vec::new();
    for i in 1..=n {
        entries.push((0, i, n + i, 1.0));
        entries.push((0, n + i, i, -1.0));
    }
    Commutators::from_entries(2 * n + 1, &entries).expect("indices are in range")
}

/// Example 2 structure constants on the five-dimensional group.
pub fn example2_commutators(lambda: f64, mu: f64) -> Commutators {
    Commutators::from_entries(
        5,
        &[
            (0, 1, 2, lambda),
            (0, 1, 3, 1.0),
            (0, 1, 4, mu),
            (0, 2, 1, -lambda),
            (0, 2, 3, -mu),
            (0, 2, 4, 1.0),
            (0, 3, 1, -1.0),
            (0, 3, 2, -mu),
            (0, 3, 4, lambda),
            (0, 4, 1, mu),
            (0, 4, 2, -1.0),
            (0, 4, 3, -lambda),
        ],
    )
    .expect("indices are in range")
}

/// Coframe of the coordinate form of Example 1 on `(t, x¹, .., x^{2n})`.
pub fn example1_coframe(n: usize, x: &[f64]) -> DMatrix<f64> {
    let (c, s) = (x[0].cos(), x[0].sin());
    let mut a = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    a[(0, 0)] = 1.0;
    for i in 1..=n {
        a[(i, i)] = c;
        a[(i, n + i)] = s;
        a[(n + i, i)] = -s;
        a[(n + i, n + i)] = c;
    }
    a
}

/// Coordinate metric `dt² + cos 2t Σ ε_i (dx^i)² + 2 sin 2t Σ dx^i dx^{n+i}`.
pub fn example1_metric(n: usize, x: &[f64]) -> DMatrix<f64> {
    let (c2, s2) = ((2.0 * x[0]).cos(), (2.0 * x[0]).sin());
    let mut g = DMatrix::zeros(2 * n + 1, 2 * n + 1);
    g[(0, 0)] = 1.0;
    for i in 1..=n {
        g[(i, i)] = c2;
        g[(n + i, n + i)] = -c2;
        g[(i, n + i)] = s2;
        g[(n + i, i)] = s2;
    }
    g
}

/// Coframe of the coordinate form of Example 2 (`μ = 0`) on `(t, x¹, .., x⁴)`.
pub fn example2_coframe(lambda: f64, x: &[f64]) -> DMatrix<f64> {
    let t = x[0];
    let (cm, sm) = (((1.0 - lambda) * t).cos(), ((1.0 - lambda) * t).sin());
    let (cp, sp) = (((1.0 + lambda) * t).cos(), ((1.0 + lambda) * t).sin());
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, 0.0, 0.0, 0.0, 0.0, //
            0.0, cm, -cp, sm, -sp, //
            0.0, sm, sp, -cm, -cp, //
            0.0, -sm, sp, cm, -cp, //
            0.0, cm, cp, sm, sp,
        ],
    )
}

/// Coordinate metric `dt² − 4 cos 2t (dx¹dx² − dx³dx⁴) − 4 sin 2t (dx¹dx⁴ + dx²dx³)`.
pub fn example2_metric(x: &[f64]) -> DMatrix<f64> {
    let (c2, s2) = ((2.0 * x[0]).cos(), (2.0 * x[0]).sin());
    let mut g = DMatrix::zeros(5, 5);
    g[(0, 0)] = 1.0;
    for (i, j, v) in [
        (1, 2, -2.0 * c2),
        (3, 4, 2.0 * c2),
        (1, 4, -2.0 * s2),
        (2, 3, -2.0 * s2),
    ] {
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    g
}

fn lie_builtin(
    name: &str,
    params: Params,
    n: usize,
    c: Commutators,
    role: Role,
    fd: FdConfig,
) -> Result<Builtin> {
    let model: Arc<dyn ManifoldModel> =
        Arc::new(lie_group_model(n, c, standard_metric(n))?.with_fd(fd));
    let structure = reeb_structure(model.clone(), n)?;
    Ok(Builtin {
        name: name.to_string(),
        params,
        model,
        structure,
        chart: None,
        hsphere: None,
        ranges: Vec::new(),
        role,
        notes: Vec::new(),
    })
}

fn chart_builtin(name: &str, params: Params, n: usize, chart: ChartModel) -> Result<Builtin> {
    let chart = Arc::new(chart);
    let model: Arc<dyn ManifoldModel> = chart.clone();
    let structure = reeb_structure(model.clone(), n)?;
    let mut ranges = vec![(-1.5, 1.5)];
    ranges.extend(std::iter::repeat_n((-1.0, 1.0), 2 * n));
    Ok(Builtin {
        name: name.to_string(),
        params,
        model,
        structure,
        chart: Some(chart),
        hsphere: None,
        ranges,
        role: Role::SasakiLike,
        notes: Vec::new(),
    })
}

/// Builds a corpus member; missing parameters take their defaults.
pub fn builtin(name: &str, params: &Params) -> Result<Builtin> {
    builtin_with(name, params, FdConfig::default())
}

pub fn builtin_with(name: &str, params: &Params, fd: FdConfig) -> Result<Builtin> {
    let params = merged(name, params)?;
    match name {
        "example1" => {
            let n = dimension_param(&params)?;
            lie_builtin(
                name,
                params,
                n,
                example1_commutators(n),
                Role::SasakiLike,
                fd,
            )
        }
        "flat_parallel" => {
            let n = dimension_param(&params)?;
            lie_builtin(
                name,
                params,
                n,
                Commutators::zeros(2 * n + 1),
                Role::Parallel,
                fd,
            )
        }
        "example2" => {
            let (lambda, mu) = (params["lambda"], params["mu"]);
            lie_builtin(
                name,
                params,
                2,
                example2_commutators(lambda, mu),
                Role::SasakiLike,
                fd,
            )
        }
        "example1_chart" => {
            let n = dimension_param(&params)?;
            let chart = chart_model(
                2 * n + 1,
                Arc::new(move |x: &[f64]| example1_metric(n, x)),
                Some(Arc::new(move |x: &[f64]| example1_coframe(n, x))),
                fd,
            );
            chart_builtin(name, params, n, chart)
        }
        "example2_chart" => {
            let (lambda, mu) = (params["lambda"], params["mu"]);
            if mu != 0.0 || lambda == 0.0 {
                return Err(GeometryError::BadParams(format!(
                    "example2_chart needs mu = 0 and lambda != 0, got lambda = {lambda}, mu = {mu}"
                )));
            }
            let chart = chart_model(
                5,
                Arc::new(example2_metric),
                Some(Arc::new(move |x: &[f64]| example2_coframe(lambda, x))),
                fd,
            );
            chart_builtin(name, params, 2, chart)
        }
        "example3_hsphere_ext" => {
            let n = dimension_param(&params)?;
            let hp = HsphereParams::new(n, params["a"], params["b"])?;
            let base = hsphere_base(hp, fd)?;
            let (ext, structure) = product_extension(base, &vec![0.0; 2 * n])?;
            let mut ranges = vec![(-1.0, 1.0)];
            ranges.extend(std::iter::repeat_n((-0.3, 0.3), 2 * n));
            let mut notes = Vec::new();
            if n <= 2 {
                notes.push(format!(
                    "n = {n} is below the range n > 2 for which the h-sphere example is stated"
                ));
            }
            Ok(Builtin {
                name: name.to_string(),
                params,
                model: ext,
                structure,
                chart: None,
                hsphere: Some(hp),
                ranges,
                role: Role::SasakiLike,
                notes,
            })
        }
        _ => Err(GeometryError::UnknownBuiltin(name.to_string())),
    }
}

/// Displayed non-zero connection coefficients `∇_{e_i} e_j` of Example 2, as
/// `(i, j, components)`; all other coefficients vanish.
pub fn example2_connection_table(lambda: f64, mu: f64) -> Vec<(usize, usize, [f64; 5])> {
    let (l, m) = (lambda, mu);
    vec![
        (0, 1, [0.0, 0.0, l, 0.0, m]),
        (1, 0, [0.0, 0.0, 0.0, -1.0, 0.0]),
        (0, 2, [0.0, -l, 0.0, -m, 0.0]),
        (2, 0, [0.0, 0.0, 0.0, 0.0, -1.0]),
        (0, 3, [0.0, 0.0, -m, 0.0, l]),
        (3, 0, [0.0, 1.0, 0.0, 0.0, 0.0]),
        (0, 4, [0.0, m, 0.0, -l, 0.0]),
        (4, 0, [0.0, 0.0, 1.0, 0.0, 0.0]),
        (1, 3, [-1.0, 0.0, 0.0, 0.0, 0.0]),
        (2, 4, [-1.0, 0.0, 0.0, 0.0, 0.0]),
        (3, 1, [-1.0, 0.0, 0.0, 0.0, 0.0]),
        (4, 2, [-1.0, 0.0, 0.0, 0.0, 0.0]),
    ]
}

/// `max |Γ − table|` over all coefficients of an Example 2 model.
pub fn example2_connection_defect(gamma: &ConnectionCoefficients, lambda: f64, mu: f64) -> f64 {
    let mut expected = vec![0.0; 125];
    for (i, j, v) in example2_connection_table(lambda, mu) {
        expected[(i * 5 + j) * 5..(i * 5 + j + 1) * 5].copy_from_slice(&v);
    }
    gamma
        .data()
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `h'` and `h̃'` of the h-sphere at the base point `q[1..]` of an extension
/// point `q`, embedded in the extension frame (index 0 is `∂t`).
pub fn extension_horizontal_metrics(
    hp: HsphereParams,
    q: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let base = hsphere_base(hp, FdConfig::default())?;
    let d = 2 * hp.n + 1;
    let embed = |m: DMatrix<f64>| {
        let mut out = DMatrix::zeros(d, d);
        out.view_mut((1, 1), (d - 1, d - 1)).copy_from(&m);
        out
    };
    Ok((embed(base.h_at(&q[1..])?), embed(base.h_tilde_at(&q[1..])?)))
}

/// Agreement between the group and coordinate forms of one example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossRepresentation {
    /// `max |c_chart − c_group|` over frame commutators.
    pub structure_equations: f64,
    /// `max |g_closed_form − Aᵀ g_group A|` over coordinate components.
    pub metric: f64,
    pub lie_verdict: bool,
    pub chart_verdict: bool,
}

impl CrossRepresentation {
    pub fn verdicts_agree(&self) -> bool {
        self.lie_verdict == self.chart_verdict
    }
}

/// Compares a Lie-group example with its chart realization at `points`.
/// The Sasaki verdicts use `lie_tol` and `chart_tol` respectively.
pub fn cross_representation_check(
    lie: &Builtin,
    chart: &Builtin,
    points: &[Vec<f64>],
    lie_tol: f64,
    chart_tol: f64,
) -> Result<CrossRepresentation> {
    let Some(cm) = &chart.chart else {
        return Err(GeometryError::ParamMismatch(format!(
            "`{}` is not a chart model",
            chart.name
        )));
    };
    if lie.model.dim() != chart.model.dim() {
        return Err(GeometryError::ParamMismatch(format!(
            "dimensions {} and {} differ",
            lie.model.dim(),
            chart.model.dim()
        )));
    }
    for key in ["n", "lambda", "mu"] {
        if let (Some(a), Some(b)) = (lie.params.get(key), chart.params.get(key)) {
            if a != b {
                return Err(GeometryError::ParamMismatch(format!("`{key}`: {a} vs {b}")));
            }
        }
    }
    let c_lie = lie.model.commutators_at(&[])?;
    let g_lie = lie.model.metric_at(&[])?;
    let lie_verdict = check_defining_conditions(&lie.structure, &[])?.max() <= lie_tol;
    let mut out = CrossRepresentation {
        structure_equations: 0.0,
        metric: 0.0,
        lie_verdict,
        chart_verdict: true,
    };
    let dim = lie.model.dim();
    for p in points {
        let c = cm.commutators_at(p)?;
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let d = (c.get(i, j, k) - c_lie.get(i, j, k)).abs();
                    out.structure_equations = out.structure_equations.max(d);
                }
            }
        }
        let a = cm.coframe_at(p).expect("chart builtins carry a coframe");
        let assembled = a.transpose() * g_lie.components() * &a;
        out.metric = out.metric.max((cm.coordinate_metric(p) - assembled).amax());
        let defect = check_defining_conditions(&chart.structure, p)?.max();
        out.chart_verdict &= defect <= chart_tol;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::levi_civita;
    use crate::sampling::halton_points;
    use nalgebra::DVector;

    fn params(pairs: &[(&str, f64)]) -> Params {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn example1_has_requested_dimension() {
        let b = builtin("example1", &params(&[("n", 3.0)])).unwrap();
        assert_eq!(b.model.dim(), 7);
        assert_eq!(b.structure.n(), 3);
    }

    #[test]
    fn example2_without_parameters_is_example1_pattern() {
        let e2 = builtin("example2", &params(&[("lambda", 0.0), ("mu", 0.0)])).unwrap();
        let e1 = builtin("example1", &params(&[("n", 2.0)])).unwrap();
        assert_eq!(
            e2.model.commutators_at(&[]).unwrap(),
            e1.model.commutators_at(&[]).unwrap()
        );
    }

    #[test]
    fn bad_names_and_params_are_rejected() {
        assert!(matches!(
            builtin("example9", &Params::new()),
            Err(GeometryError::UnknownBuiltin(_))
        ));
        assert!(matches!(
            builtin("example2_chart", &params(&[("mu", 1.0)])),
            Err(GeometryError::BadParams(_))
        ));
        assert!(matches!(
            builtin("example2_chart", &params(&[("lambda", 0.0)])),
            Err(GeometryError::BadParams(_))
        ));
        assert!(matches!(
            builtin("example1", &params(&[("n", 1.5)])),
            Err(GeometryError::BadParams(_))
        ));
        assert!(matches!(
            builtin("example1", &params(&[("lambda", 1.0)])),
            Err(GeometryError::BadParams(_))
        ));
        assert_eq!(
            builtin("example3_hsphere_ext", &params(&[("a", 0.0), ("b", 0.0)])).unwrap_err(),
            GeometryError::DegenerateParameters
        );
    }

    #[test]
    fn example2_connection_list() {
        let (l, m) = (3.0, -2.0);
        let b = builtin("example2", &params(&[("lambda", l), ("mu", m)])).unwrap();
        let gamma = levi_civita(b.model.as_ref(), &[]).unwrap();
        let v = |c: &[f64]| DVector::from_column_slice(c);
        assert_eq!(gamma.vector(0, 1), v(&[0.0, 0.0, l, 0.0, m]));
        assert_eq!(gamma.vector(1, 0), v(&[0.0, 0.0, 0.0, -1.0, 0.0]));
        assert_eq!(gamma.vector(3, 0), v(&[0.0, 1.0, 0.0, 0.0, 0.0]));
        assert_eq!(gamma.vector(1, 3), v(&[-1.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(example2_connection_defect(&gamma, l, m), 0.0);
        assert!(example2_connection_defect(&gamma, l, 0.0) > 1.0);
    }

    #[test]
    fn example1_chart_at_origin_time() {
        let b = builtin("example1_chart", &Params::new()).unwrap();
        let cm = b.chart.clone().unwrap();
        let g = cm.coordinate_metric(&[0.0, 0.3, -0.2]);
        assert_eq!(
            g,
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]))
        );
        // de¹ = dt ∧ dx² at t = 0
        let d = cm
            .coframe_differentials(&[0.0, 0.3, -0.2])
            .unwrap()
            .unwrap();
        let mut want = DMatrix::zeros(3, 3);
        want[(0, 2)] = 1.0;
        want[(2, 0)] = -1.0;
        assert!((&d[1] - want).amax() < 1e-9);
    }

    #[test]
    fn example2_metric_matches_coframe() {
        let g_lie = standard_metric(2);
        for p in halton_points(
            &[
                (-1.5, 1.5),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
                (-1.0, 1.0),
            ],
            20,
            3,
        ) {
            let a = example2_coframe(1.0, &p);
            let assembled = a.transpose() * g_lie.components() * &a;
            assert!((example2_metric(&p) - assembled).amax() < 1e-10);
        }
    }

    #[test]
    fn cross_representation_of_both_examples() {
        for (lie, chart, ps) in [
            ("example1", "example1_chart", params(&[("n", 2.0)])),
            (
                "example2",
                "example2_chart",
                params(&[("lambda", 1.0), ("mu", 0.0)]),
            ),
        ] {
            let l = builtin(lie, &ps).unwrap();
            let c = builtin(chart, &ps).unwrap();
            let points = halton_points(&c.ranges, 5, 1);
            let r = cross_representation_check(&l, &c, &points, 1e-9, 1e-6).unwrap();
            assert!(r.structure_equations < 1e-7, "{lie}: {r:?}");
            assert!(r.metric < 1e-10, "{lie}: {r:?}");
            assert!(r.lie_verdict && r.verdicts_agree());
        }
    }

    #[test]
    fn mismatched_parameters_are_reported() {
        let l = builtin("example2", &params(&[("lambda", 2.0)])).unwrap();
        let c = builtin("example2_chart", &params(&[("lambda", 1.0)])).unwrap();
        assert!(matches!(
            cross_representation_check(&l, &c, &[], 1e-9, 1e-6),
            Err(GeometryError::ParamMismatch(_))
        ));
    }
}
