use std::f64::consts::LN_2;
use std::sync::Arc;

use accr::conformal::{apply_cct, connection_shift, ShiftForm, TransformParams};
use accr::connection::levi_civita;
use accr::corpus::{builtin, canonical_phi, standard_metric};
use accr::models::{
    cone_model_with, lie_group_model, Commutators, ConeMetric, Field, ManifoldModel,
};
use accr::sasaki::{cone_formula_checks, cone_holomorphic_at, CONE_FORMULA_LABELS};
use accr::structure::AccrStructure;

/// `[e1, e2] = e0` with `ξ = e0`, so `dη ≠ 0`.
fn heisenberg() -> AccrStructure {
    let c = Commutators::from_entries(3, &[(1, 2, 0, 1.0)]).unwrap();
    let m: Arc<dyn ManifoldModel> = Arc::new(lie_group_model(1, c, standard_metric(1)).unwrap());
    AccrStructure::new(
        m,
        Field::from_matrix(&canonical_phi(1)),
        Field::Constant(vec![1.0, 0.0, 0.0]),
        Field::Constant(vec![1.0, 0.0, 0.0]),
    )
    .unwrap()
}

#[test]
fn pure_w_homothety_shifts_the_connection_by_three_quarters() {
    let b = builtin("example1", &Default::default()).unwrap();
    let t = apply_cct(&b.structure, &TransformParams::constant(0.0, 0.0, LN_2)).unwrap();
    let base = levi_civita(b.model.as_ref(), &[]).unwrap();
    let bar = levi_civita(t.structure.model().as_ref(), &[]).unwrap();
    let at = b.structure.at(&[]).unwrap();
    let gphi = at.g_phi();
    let mut ratios = Vec::new();
    let mut largest: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let d = bar.get(i, j, k) - base.get(i, j, k);
                largest = largest.max(d.abs());
                if k != 0 {
                    assert!(d.abs() < 1e-14);
                }
            }
            if gphi[(i, j)].abs() > 0.5 {
                ratios.push(-(bar.get(i, j, 0) - base.get(i, j, 0)) / gphi[(i, j)]);
            }
        }
    }
    assert!(largest > 0.5, "the connection changes");
    assert!(!ratios.is_empty());
    for r in ratios {
        assert!((r - 0.75).abs() < 1e-14, "β = {r}");
    }
    assert_eq!(
        connection_shift((0.0, 0.0, LN_2), ShiftForm::Derived),
        (0.0, 0.75)
    );
    assert_eq!(
        connection_shift((0.0, 0.0, LN_2), ShiftForm::Displayed),
        (0.0, 0.0)
    );
}

#[test]
fn heisenberg_cone_lines_agree_except_the_dr_component() {
    let s = heisenberg();
    let r = -1.5;
    let lines = cone_formula_checks(&s, &[], r).unwrap();
    assert_eq!(lines.len(), CONE_FORMULA_LABELS.len());
    let odd = CONE_FORMULA_LABELS
        .iter()
        .position(|l| *l == "(nabla_X J) Y . dr")
        .unwrap();
    for (k, line) in lines.iter().enumerate() {
        if k == odd {
            let expected = (r * r - 1.0) * (1.0 / (2.0 * r * r) - 1.0 / (2.0 * r));
            assert!((line.residual - expected).abs() < 1e-9, "{}", line.residual);
        } else {
            assert!(line.residual < 1e-9, "{}: {}", line.label, line.residual);
        }
    }
    assert!(cone_holomorphic_at(&s, &[], r, ConeMetric::AntiIsometric).unwrap() > 0.1);
}

#[test]
fn displayed_cone_metric_is_not_holomorphic_on_example1() {
    let b = builtin("example1", &Default::default()).unwrap();
    let (cone, _) = cone_model_with(b.structure.clone(), ConeMetric::Displayed);
    let g = cone.metric_at(&[-1.5]).unwrap();
    assert!((g.get(0, 0) - 3.25).abs() < 1e-14);
    assert!(cone_holomorphic_at(&b.structure, &[], -1.0, ConeMetric::Displayed).unwrap() > 1.0);
    assert!(
        cone_holomorphic_at(&b.structure, &[], -1.0, ConeMetric::AntiIsometric).unwrap() < 1e-6
    );
}
