use rigidity_gauge::curvature::{self, Source};
use rigidity_gauge::domains::DomainSpec;
use rigidity_gauge::growth::{self, FormCase, PuncturedChart, Verdict};
use rigidity_gauge::{l2lab, nakano};

fn spec(s: &str) -> DomainSpec {
    s.parse().unwrap()
}

#[test]
fn gamma_of_i22_and_its_vanishing_range() {
    let inv = curvature::domain_invariants(&spec("I(2,2)")).unwrap();
    assert_eq!(inv.n, 4);
    assert_eq!(inv.gamma_rounded, Some(4));
    assert_eq!(inv.vanishing_q_max, 2);
    assert!(!inv.all_groups_vanish);
    let r = inv.scalar_curvature.unwrap();
    assert!((r - inv.factors[0].two_trace_q.unwrap()).abs() < 1e-12 * r.abs());
}

#[test]
fn products_take_the_smallest_factor() {
    let inv = curvature::domain_invariants(&spec("I(1,1)xIII(2)")).unwrap();
    assert_eq!(inv.n, 1 + 3);
    assert_eq!(inv.gamma_rounded, Some(2));
    assert_eq!(inv.vanishing_q_max, 0);
    assert!(inv.scalar_curvature.is_none());

    let swapped = curvature::domain_invariants(&spec("III(2)xI(1,1)")).unwrap();
    assert_eq!(swapped.gamma, inv.gamma);
}

#[test]
fn exceptional_factors_use_reference_values() {
    let inv = curvature::domain_invariants(&spec("V")).unwrap();
    assert_eq!((inv.n, inv.gamma_rounded), (16, Some(12)));
    assert_eq!(inv.factors[0].source, Source::Reference);
    let mixed = curvature::domain_invariants(&spec("VIxIV(3)")).unwrap();
    assert_eq!(mixed.n, 27 + 3);
    assert_eq!(mixed.gamma_rounded, Some(3));
}

#[test]
fn table_rows_all_match_and_serialize_with_documented_keys() {
    let rows = curvature::gamma_table(4).unwrap();
    assert!(rows.iter().all(|r| r.matches));
    assert_eq!(rows.last().unwrap().type_tag, "VI");
    let json = serde_json::to_value(&rows[0]).unwrap();
    for key in ["type", "params", "n", "gamma", "gamma_reference", "source", "match"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["source"], "computed");
}

#[test]
fn disk_cv_reduces_to_half_the_scalar_curvature() {
    // n = 1, q = 0: h_Q vanishes on functions, so lhs = (R/2)‖ω‖².
    let s = nakano::cv_certify(&spec("I(1,1)"), 0, 10, 42, 1e-8).unwrap();
    assert!(s.passed);
    let r = curvature::compute_factor(spec("I(1,1)").factors[0], 1.0).unwrap().scalar_curvature;
    for rep in &s.reports {
        assert!((rep.lhs - 0.5 * r * rep.norm_sqr).abs() < 1e-12 * rep.norm_sqr.max(1.0));
        assert_eq!(rep.sign_verdict, nakano::SignVerdict::NegativeDefinite);
    }
}

#[test]
fn cv_is_reproducible_for_a_seed() {
    let a = nakano::cv_certify(&spec("II(4)"), 2, 20, 7, 1e-8).unwrap();
    let b = nakano::cv_certify(&spec("II(4)"), 2, 20, 7, 1e-8).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = nakano::cv_certify(&spec("II(4)"), 2, 20, 8, 1e-8).unwrap();
    assert_ne!(a.reports[0].norm_sqr, c.reports[0].norm_sqr);
}

#[test]
fn growth_verdicts_survive_a_coarser_chart() {
    let chart = PuncturedChart::new(1, 1, 1e-5, 0.1).unwrap();
    let v = |c: FormCase| growth::poincare_growth_test(&c, &chart).unwrap().verdict;
    assert_eq!(v(FormCase::Dz), Verdict::PoincareGrowth);
    assert_eq!(v(FormCase::DzOverZ), Verdict::NotPoincareGrowth);
    assert_eq!(v(FormCase::DzOverZlog), Verdict::PoincareGrowth);
}

#[test]
fn lab_reports_are_reproducible_and_pass() {
    let a = l2lab::lab_report(8, 1e-2, 20, 42).unwrap();
    let b = l2lab::lab_report(8, 1e-2, 20, 42).unwrap();
    assert!(a.passed(1e-10));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.harmonic_dim, [8, 16, 8]);
}
