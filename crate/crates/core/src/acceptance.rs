//! The eight acceptance criteria as callable checks.
//!
//! Shared by the `acceptance` test target and `verify all`. Every check
//! returns an [`Outcome`] whose `detail` is deterministic for a given seed.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{self, FactorComputation};
use crate::domains::Factor;
use crate::growth::{self, BoundaryCase, FormCase, MetricCase, PuncturedChart, Verdict};
use crate::l2lab;
use crate::nakano::{self, CvContext};

pub const DEFAULT_SEED: u64 = 42;
pub const CV_SAMPLES: usize = 200;
pub const CV_TOLERANCE: f64 = 1e-8;
pub const LAB_BASIS_SIZES: [usize; 3] = [8, 16, 32];
pub const LAB_EPSILON: f64 = 1e-2;
pub const LAB_QUAD_ORDER: usize = 20;
pub const LAB_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    fn new(id: usize, name: &'static str, failures: Vec<String>, ok_detail: String) -> Self {
        let passed = failures.is_empty();
        Outcome {
            id,
            name,
            passed,
            detail: if passed { ok_detail } else { failures.join("; ") },
        }
    }

    /// `criterion <id> <name>: PASS|FAIL (<detail>)`
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("criterion {} {}: {} ({})", self.id, self.name, status, self.detail)
    }
}

/// Classical factors covered by the table criterion, in a fixed order.
pub fn classical_factors() -> Vec<Factor> {
    let mut out = Vec::new();
    for s in 2..=6 {
        for p in 1..s {
            out.push(Factor::I { p, q: s - p });
        }
    }
    out.extend((2..=5).map(|m| Factor::II { m }));
    out.extend((1..=4).map(|m| Factor::III { m }));
    out.extend((3..=6).map(|m| Factor::IV { m }));
    out
}

/// Closed forms `(n, γ)` for the classical families.
pub fn closed_form(f: Factor) -> Option<(usize, f64)> {
    match f {
        Factor::I { p, q } => Some((p * q, (p + q) as f64)),
        Factor::II { m } => Some((m * (m - 1) / 2, 2.0 * (m as f64 - 1.0))),
        Factor::III { m } => Some((m * (m + 1) / 2, m as f64 + 1.0)),
        Factor::IV { m } => Some((m, m as f64)),
        Factor::V | Factor::VI => None,
    }
}

fn compute_all(factors: &[Factor], scale: f64) -> Result<Vec<FactorComputation>, String> {
    factors
        .par_iter()
        .map(|&f| curvature::compute_factor(f, scale).map_err(|e| format!("{f}: {e}")))
        .collect()
}

pub fn table_reproduction() -> Outcome {
    let factors = classical_factors();
    let comps = match compute_all(&factors, 1.0) {
        Ok(c) => c,
        Err(e) => return Outcome::new(1, "table-reproduction", vec![e], String::new()),
    };
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (f, c) in factors.iter().zip(&comps) {
        let (n, gamma) = closed_form(*f).expect("classical factor");
        let err = (c.gamma() - gamma).abs();
        worst = worst.max(err);
        if c.pair.n() != n {
            failures.push(format!("{f}: n = {} expected {n}", c.pair.n()));
        }
        if !(err < 1e-6) {
            failures.push(format!("{f}: gamma = {} expected {gamma}", c.gamma()));
        }
    }
    let detail = format!("{} domains, max |gamma - closed form| = {worst:.3e}", factors.len());
    Outcome::new(1, "table-reproduction", failures, detail)
}

/// Domains used for the scale-invariance check.
pub fn scale_domains() -> [Factor; 3] {
    [Factor::I { p: 2, q: 3 }, Factor::III { m: 3 }, Factor::IV { m: 5 }]
}

pub fn scale_invariance() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for f in scale_domains() {
        let base = match curvature::compute_factor(f, 1.0) {
            Ok(c) => c.gamma(),
            Err(e) => {
                failures.push(format!("{f}: {e}"));
                continue;
            }
        };
        for s in [0.5, 2.0, 10.0] {
            match curvature::compute_factor(f, s) {
                Ok(c) => {
                    let rel = (c.gamma() - base).abs() / base.abs();
                    worst = worst.max(rel);
                    if !(rel < 1e-9) {
                        failures.push(format!("{f} at scale {s}: relative change {rel:.3e}"));
                    }
                }
                Err(e) => failures.push(format!("{f} at scale {s}: {e}")),
            }
        }
    }
    Outcome::new(2, "scale-invariance", failures, format!("3 domains x 3 scales, max relative change {worst:.3e}"))
}

pub fn operator_properties() -> Outcome {
    let factors = classical_factors();
    let comps = match compute_all(&factors, 1.0) {
        Ok(c) => c,
        Err(e) => return Outcome::new(3, "operator-properties", vec![e], String::new()),
    };
    let mut failures = Vec::new();
    let (mut herm, mut skew, mut trace): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (f, c) in factors.iter().zip(&comps) {
        let h = c.q.hermitian_residual();
        let s = c.tensor.skew_residual();
        let r = c.scalar_curvature;
        let t = (r - 2.0 * c.q.trace()).abs() / r.abs();
        herm = herm.max(h);
        skew = skew.max(s);
        trace = trace.max(t);
        if !(h < 1e-10) {
            failures.push(format!("{f}: |Q - Q^H| = {h:.3e}"));
        }
        if !(s < 1e-10) {
            failures.push(format!("{f}: skew residual {s:.3e}"));
        }
        if !(t < 1e-9) {
            failures.push(format!("{f}: |R - 2 tr Q| / |R| = {t:.3e}"));
        }
        if !(r < 0.0 && c.lambda < 0.0) {
            failures.push(format!("{f}: R = {r}, lambda = {}", c.lambda));
        }
    }
    let detail = format!(
        "{} domains, hermitian {herm:.1e}, skew {skew:.1e}, trace {trace:.1e}, R < 0 and lambda < 0",
        factors.len()
    );
    Outcome::new(3, "operator-properties", failures, detail)
}

pub fn cv_suite(seed: u64) -> Outcome {
    let factors: Vec<Factor> = classical_factors().into_iter().filter(|f| f.dimension() <= 10).collect();
    let comps = match compute_all(&factors, 1.0) {
        Ok(c) => c,
        Err(e) => return Outcome::new(4, "cv-identity", vec![e], String::new()),
    };
    let jobs: Vec<(usize, usize)> = comps
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..=c.pair.n().min(3)).map(move |q| (i, q)))
        .collect();
    let results: Vec<Result<nakano::CvSummary, String>> = jobs
        .par_iter()
        .map(|&(i, q)| {
            let ctx = CvContext::new(&comps[i], q).map_err(|e| format!("{} q={q}: {e}", factors[i]))?;
            Ok(nakano::certify_with(&ctx, &factors[i].to_string(), CV_SAMPLES, seed, CV_TOLERANCE))
        })
        .collect();
    let mut failures = Vec::new();
    let (mut residual, mut slack): (f64, f64) = (0.0, f64::INFINITY);
    for r in results {
        match r {
            Ok(s) => {
                residual = residual.max(s.max_identity_residual);
                slack = slack.min(s.min_bound_slack);
                if !s.passed {
                    failures.push(format!(
                        "{} q={}: residual {:.3e}, slack {:.3e}, signs ok {}",
                        s.domain, s.q, s.max_identity_residual, s.min_bound_slack, s.all_signs_ok
                    ));
                }
            }
            Err(e) => failures.push(e),
        }
    }
    let detail = format!(
        "{} (domain, q) pairs x {CV_SAMPLES} samples, max residual {residual:.3e}, min slack {slack:.3e}",
        jobs.len()
    );
    Outcome::new(4, "cv-identity", failures, detail)
}

pub fn growth_fixtures() -> Outcome {
    let chart = PuncturedChart::punctured_disk();
    let mut failures = Vec::new();
    let expected = [
        (FormCase::Dz, Verdict::PoincareGrowth),
        (FormCase::DzOverZ, Verdict::NotPoincareGrowth),
        (FormCase::DzOverZlog, Verdict::PoincareGrowth),
    ];
    let mut ratio = f64::NAN;
    for (case, want) in expected {
        match growth::poincare_growth_test(&case, &chart) {
            Ok(r) => {
                if r.verdict != want {
                    failures.push(format!("{}: {:?} expected {want:?}", case.name(), r.verdict));
                }
                if case == FormCase::DzOverZlog {
                    ratio = r.sup_ratio;
                    if !((r.sup_ratio - 1.0).abs() < 1e-6) {
                        failures.push(format!("{}: sup ratio {}", case.name(), r.sup_ratio));
                    }
                }
            }
            Err(e) => failures.push(format!("{}: {e}", case.name())),
        }
    }
    let mut fitted_n = f64::NAN;
    match growth::good_metric_check(&MetricCase::LogPower(2.0), &chart) {
        Ok(r) => {
            fitted_n = r.log_growth.fitted_n;
            if !r.overall || !((fitted_n - 2.0).abs() <= 0.1) {
                failures.push(format!("log-power:2 good = {}, N = {fitted_n}", r.overall));
            }
        }
        Err(e) => failures.push(format!("log-power:2: {e}")),
    }
    match growth::good_metric_check(&MetricCase::AbsZSquared, &chart) {
        Ok(r) if r.overall => failures.push("abs-z-squared reported good".into()),
        Ok(_) => {}
        Err(e) => failures.push(format!("abs-z-squared: {e}")),
    }
    let detail = format!("3 form verdicts, dz/(z log|z|^2) sup ratio {ratio:.9}, good metric N = {fitted_n:.4}");
    Outcome::new(5, "growth-fixtures", failures, detail)
}

pub fn ke_check() -> Outcome {
    let disk = growth::ke_form_residual(&MetricCase::PoincareDisk, None);
    let flat = growth::ke_form_residual(&MetricCase::Identity, None);
    let mut failures = Vec::new();
    if !(disk.residual < 1e-4) {
        failures.push(format!("poincare-disk residual {:.3e}", disk.residual));
    }
    if !(flat.residual > 0.1) {
        failures.push(format!("identity residual {:.3e}", flat.residual));
    }
    let detail = format!(
        "disk residual {:.3e} with k = {:.6}, flat residual {:.3e}",
        disk.residual, disk.k, flat.residual
    );
    Outcome::new(6, "ke-check", failures, detail)
}

pub fn boundary_decay() -> Outcome {
    let deltas = growth::default_deltas();
    let mut failures = Vec::new();
    let mut exponent = f64::NAN;
    match growth::boundary_integral_decay(&BoundaryCase::PoincareGrowth, &deltas) {
        Ok(r) => {
            exponent = r.fitted_exponent.unwrap_or(f64::NAN);
            if !r.monotone_decreasing {
                failures.push(format!("values not decreasing: {:?}", r.values));
            }
            if !((exponent + 1.0).abs() <= 0.2) {
                failures.push(format!("fitted exponent {exponent}"));
            }
        }
        Err(e) => failures.push(format!("poincare-growth: {e}")),
    }
    let mut spread = f64::NAN;
    match growth::boundary_integral_decay(&BoundaryCase::LogDensity, &deltas) {
        Ok(r) => {
            spread = r.relative_spread;
            if !(spread < 1e-8) {
                failures.push(format!("log-density spread {spread:.3e}"));
            }
        }
        Err(e) => failures.push(format!("log-density: {e}")),
    }
    let detail = format!("exponent {exponent:.4}, constant fixture spread {spread:.3e}");
    Outcome::new(7, "boundary-decay", failures, detail)
}

pub fn hodge_suite(seed: u64) -> Outcome {
    let reports: Vec<_> = LAB_BASIS_SIZES
        .par_iter()
        .map(|&b| (b, l2lab::lab_report(b, LAB_EPSILON, LAB_QUAD_ORDER, seed)))
        .collect();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (b, r) in reports {
        match r {
            Ok(r) => {
                worst = worst
                    .max(r.adjoint_residual)
                    .max(r.energy_identity_residual)
                    .max(r.decomposition_residual)
                    .max(r.projection_gauge_residual);
                if !r.passed(LAB_TOLERANCE) {
                    failures.push(format!(
                        "B={b}: adjoint {:.1e}, energy {:.1e}, decomposition {:.1e}, gauge {:.1e}, dims ok {}",
                        r.adjoint_residual,
                        r.energy_identity_residual,
                        r.decomposition_residual,
                        r.projection_gauge_residual,
                        r.dimension_count_ok
                    ));
                }
            }
            Err(e) => failures.push(format!("B={b}: {e}")),
        }
    }
    Outcome::new(8, "hodge-suite", failures, format!("B in {LAB_BASIS_SIZES:?}, max residual {worst:.3e}"))
}

/// All criteria in order.
pub fn run_all(seed: u64) -> Vec<Outcome> {
    vec![
        table_reproduction(),
        scale_invariance(),
        operator_properties(),
        cv_suite(seed),
        growth_fixtures(),
        ke_check(),
        boundary_decay(),
        hodge_suite(seed),
    ]
}
