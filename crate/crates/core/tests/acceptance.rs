//! End-to-end acceptance criteria over the default corpus. Prints one line per
//! criterion and fails if any criterion fails.

use std::f64::consts::LN_2;

use accr::conformal::{condition_residuals, TransformParams};
use accr::connection::hsphere_curvature;
use accr::corpus::builtin;
use accr::models::ModelKind;
use accr::report::{Verdict, VerificationReport};
use accr::verify::{default_suite, run_all, RunConfig, Subject};

fn label(name: &str, params: &[(&str, f64)]) -> String {
    Subject::builtin(name, params).label()
}

struct Ledger {
    failures: Vec<String>,
}

impl Ledger {
    /// Largest residual of `id` on `model`; records a failure if absent or above `bound`.
    fn below(&mut self, report: &VerificationReport, model: &str, id: &str, bound: f64) -> bool {
        let found: Vec<_> = report.find(model, id).collect();
        let ok = !found.is_empty()
            && found
                .iter()
                .all(|c| c.max_residual.is_some_and(|r| r < bound));
        if !ok {
            self.failures.push(format!(
                "{model} {id}: {:?} (bound {bound:e})",
                found.iter().map(|c| c.max_residual).collect::<Vec<_>>()
            ));
        }
        ok
    }

    fn above(&mut self, report: &VerificationReport, model: &str, id: &str, bound: f64) -> bool {
        let found: Vec<_> = report.find(model, id).collect();
        let ok = !found.is_empty()
            && found
                .iter()
                .all(|c| c.max_residual.is_some_and(|r| r > bound));
        if !ok {
            self.failures
                .push(format!("{model} {id}: expected residual above {bound}"));
        }
        ok
    }

    fn passes(&mut self, report: &VerificationReport, model: &str, id: &str) -> bool {
        let found: Vec<_> = report.find(model, id).collect();
        let ok = !found.is_empty() && found.iter().all(|c| c.verdict == Verdict::Pass);
        if !ok {
            self.failures
                .push(format!("{model} {id}: verdict not pass"));
        }
        ok
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) -> bool {
        if !ok {
            self.failures.push(what.into());
        }
        ok
    }
}

fn criterion(number: u32, title: &str, run: impl FnOnce(&mut Ledger)) -> bool {
    let mut ledger = Ledger {
        failures: Vec::new(),
    };
    run(&mut ledger);
    let ok = ledger.failures.is_empty();
    println!(
        "criterion {number}: {} {title}",
        if ok { "PASS" } else { "FAIL" }
    );
    for f in &ledger.failures {
        println!("    {f}");
    }
    ok
}

fn main() {
    let cfg = RunConfig::default();
    let suite = default_suite();
    let report = run_all(&suite, &cfg);
    let r = &report;
    let mut results = Vec::new();

    results.push(criterion(
        1,
        "Example 1 (n = 1, 2, 3) is Sasaki-like by the defining conditions, the ∇φ formula and the Nijenhuis form",
        |l| {
            for n in [1.0, 2.0, 3.0] {
                let m = label("example1", &[("n", n)]);
                for id in ["sasaki.defining", "sasaki.nabla_phi", "sasaki.nijenhuis_form"] {
                    l.below(r, &m, id, 1e-9);
                }
            }
        },
    ));

    results.push(criterion(
        2,
        "Example 2 connection table and Sasaki-like checks for (λ, μ) = (1, 0), (3, −2), (0, 0)",
        |l| {
            for (lambda, mu) in [(1.0, 0.0), (3.0, -2.0), (0.0, 0.0)] {
                let m = label("example2", &[("lambda", lambda), ("mu", mu)]);
                l.below(r, &m, "example2.connection_table", 1e-12);
                for id in [
                    "sasaki.defining",
                    "sasaki.nabla_phi",
                    "sasaki.nijenhuis_form",
                ] {
                    l.below(r, &m, id, 1e-9);
                }
            }
        },
    ));

    results.push(criterion(
        3,
        "F is recovered from N and N̂ on every model",
        |l| {
            for m in &r.models {
                let bound = if m.kind == Some(ModelKind::LieGroup) {
                    1e-9
                } else {
                    1e-6
                };
                l.below(r, &m.model, "core.f_from_nijenhuis", bound);
            }
        },
    ));

    results.push(criterion(
        4,
        "curvature identities on every Sasaki-like model",
        |l| {
            let sasaki: Vec<_> = r
                .models
                .iter()
                .filter(|m| !m.model.starts_with("flat_parallel"))
                .collect();
            l.expect(
                sasaki.len() == suite.len() - 1,
                "missing Sasaki-like models",
            );
            for m in sasaki {
                l.below(r, &m.model, "curvature.curf", 1e-6);
                l.below(r, &m.model, "curvature.ricci_xi_xi", 1e-8);
                l.below(r, &m.model, "curvature.r_xi_x_xi", 1e-8);
            }
        },
    ));

    results.push(criterion(
        5,
        "the cone is holomorphic over Examples 1 and 2 and not over the parallel model",
        |l| {
            for m in &r.models {
                if m.model.starts_with("example1") || m.model.starts_with("example2") {
                    l.below(r, &m.model, "cone.holomorphic", 1e-6);
                }
            }
            l.above(
                r,
                &label("flat_parallel", &[("n", 1.0)]),
                "cone.holomorphic",
                0.1,
            );
        },
    ));

    results.push(criterion(
        6,
        "Example 3: Gauss equation, horizontal Ricci tensor and Scal'",
        |l| {
            for (a, b) in [(1.0, 0.0), (3.0, 4.0)] {
                let m = label("example3_hsphere_ext", &[("n", 3.0), ("a", a), ("b", b)]);
                l.below(r, &m, "curvature.gauss", 1e-5);
                l.below(r, &m, "curvature.horizontal_ricci", 1e-5);
                l.below(r, &m, "hsphere.scalar_closed_form", 1e-10);
            }
            let c = hsphere_curvature(2, 1.0, 0.0).unwrap();
            l.expect(
                c.scal == 8.0,
                format!("Scal' for n=2, a=1, b=0 is {}", c.scal),
            );
        },
    ));

    results.push(criterion(
        7,
        "contact homotheties preserve the Sasaki-like class and the Ricci tensor; w = ln 2 breaks preservation",
        |l| {
            for m in &r.models {
                if m.model.starts_with("flat_parallel") {
                    continue;
                }
                for set in ["u0.3_v0.2", "uln2_vpi6"] {
                    l.passes(r, &m.model, &format!("conformal.{set}.preserved"));
                    l.below(r, &m.model, &format!("conformal.{set}.ricci_invariance"), 1e-8);
                    l.below(r, &m.model, &format!("conformal.{set}.connection"), 1e-8);
                }
                l.passes(r, &m.model, "conformal.wln2.preserved");
                l.below(r, &m.model, "conformal.wln2.third_condition", 1e-15);
            }
            let b = builtin("example1", &Default::default()).unwrap();
            let c = condition_residuals(&b.structure, &TransformParams::constant(0.0, 0.0, LN_2), &[])
                .unwrap();
            l.expect(
                (c.du_phi_dv - (1.0 - LN_2.exp()).abs()).abs() <= 1e-15,
                format!("third condition residual {} for w = ln 2", c.du_phi_dv),
            );
        },
    ));

    results.push(criterion(
        8,
        "chart and Lie-group representations agree",
        |l| {
            for m in [
                label("example1_chart", &[("n", 1.0)]),
                label("example1_chart", &[("n", 2.0)]),
                label("example2_chart", &[("lambda", 1.0), ("mu", 0.0)]),
            ] {
                l.below(r, &m, "crossrep.structure_equations", 1e-7);
                l.below(r, &m, "crossrep.metric", 1e-10);
                l.passes(r, &m, "crossrep.verdicts");
            }
        },
    ));

    results.push(criterion(
        9,
        "two runs with the same seed give byte-identical JSON",
        |l| {
            let again = run_all(&suite, &cfg);
            l.expect(report.to_json() == again.to_json(), "reports differ");
        },
    ));

    println!(
        "corpus verdict: {}",
        if report.all_pass {
            "all checks pass"
        } else {
            "some checks failed"
        }
    );
    if !report.all_pass {
        print!("{}", report.to_text());
    }
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("{passed}/{} criteria pass", results.len());
    if !(results.iter().all(|&ok| ok) && report.all_pass) {
        std::process::exit(1);
    }
}
