mod expr;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use rigidity_gauge::acceptance::{self, DEFAULT_SEED};
use rigidity_gauge::curvature::{self, CurvatureError};
use rigidity_gauge::domains::{DomainError, DomainSpec};
use rigidity_gauge::growth::{self, BoundaryCase, FnForm, FormCase, GrowthError, MetricCase, PuncturedChart, Verdict};
use rigidity_gauge::l2lab::{self, L2Error};
use rigidity_gauge::nakano::{self, NakanoError};

use expr::Expr;
use render::{num, Envelope, Format, Table};

#[derive(Parser)]
#[command(name = "rigidity-gauge", version, about = "Rigidity constants of bounded symmetric domains and the numerical checks behind them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, value_enum, global = true, default_value_t = Format::Json)]
    format: Format,
    /// Write the report to a file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Classification table with computed rigidity constants.
    Table {
        /// Largest family parameter; rows above complex dimension 30 are skipped.
        #[arg(long, default_value_t = 6)]
        max: usize,
    },
    /// Invariants of a domain such as `I(2,2)` or `I(1,1)xIII(2)`.
    Gamma { spec: String },
    #[command(subcommand)]
    Verify(Verify),
    #[command(subcommand)]
    Lab(Lab),
}

#[derive(Args)]
struct SeedArg {
    #[arg(long, env = "RIGIDITY_GAUGE_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct ChartArgs {
    #[arg(long, default_value_t = 1e-6)]
    rho_min: f64,
    #[arg(long, default_value_t = 0.1)]
    rho_max: f64,
    #[arg(long, default_value_t = 10)]
    points_per_decade: usize,
    #[arg(long, default_value_t = 8)]
    angles: usize,
}

impl ChartArgs {
    fn chart(&self) -> Result<PuncturedChart, Failure> {
        let chart = PuncturedChart {
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            points_per_decade: self.points_per_decade,
            angles: self.angles,
            ..PuncturedChart::punctured_disk()
        };
        chart.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(chart)
    }
}

/// Numerical verifications; each exits 1 when a check fails.
#[derive(Subcommand)]
enum Verify {
    /// Curvature identity, bound and sign on seeded random (0,q)-forms.
    Cv {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value_t = acceptance::CV_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = acceptance::CV_TOLERANCE)]
        tol: f64,
    },
    /// Poincaré growth verdicts on the punctured disk.
    Growth {
        /// One fixture: dz, dz-over-z, dz-over-zlog, poincare-volume.
        #[arg(long, conflicts_with = "custom")]
        case: Option<String>,
        /// Coefficient of dz as an expression in z, e.g. `1/(z*log(abs(z)^2))`.
        #[arg(long)]
        custom: Option<String>,
        #[command(flatten)]
        chart: ChartArgs,
    },
    /// Mumford goodness of line-bundle metrics at the puncture.
    GoodMetric {
        /// One fixture: log-power:<a>, abs-z-squared, identity, poincare-disk.
        #[arg(long)]
        case: Option<String>,
        #[command(flatten)]
        chart: ChartArgs,
    },
    /// Kähler–Einstein residual on the disk chart.
    Ke {
        /// One fixture: poincare-disk or identity.
        #[arg(long)]
        case: Option<String>,
        /// Fixed constant instead of the least-squares fit.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = KE_TOL)]
        tol: f64,
    },
    /// Decay of boundary circle integrals.
    Boundary,
    /// Every acceptance criterion.
    All {
        #[command(flatten)]
        seed: SeedArg,
    },
}

/// Discrete L2 Hodge lab on a punctured disk.
#[derive(Subcommand)]
enum Lab {
    /// Build the complex and check adjointness, decomposition and projections.
    Decompose {
        #[arg(long, default_value_t = 16)]
        basis: usize,
        #[arg(long, default_value_t = acceptance::LAB_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = acceptance::LAB_QUAD_ORDER)]
        quad_order: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = acceptance::LAB_TOLERANCE)]
        tol: f64,
    },
}

const KE_TOL: f64 = 1e-4;
/// A metric that is not Kähler–Einstein must miss by at least this much.
const NON_KE_MIN: f64 = 0.1;
const LOG_EXPONENT_TOL: f64 = 0.1;
const DECAY_EXPONENT_TOL: f64 = 0.2;
const CONSTANT_SPREAD_TOL: f64 = 1e-8;

enum Failure {
    /// Bad input; exit 2.
    Usage(String),
    /// A computation could not finish; exit 1.
    Runtime(String),
}

fn domain_failure(e: DomainError) -> Failure {
    match e {
        DomainError::DegenerateMetric(_) => Failure::Runtime(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    }
}

fn curvature_failure(e: CurvatureError) -> Failure {
    match e {
        CurvatureError::Domain(d) => domain_failure(d),
        other => Failure::Runtime(other.to_string()),
    }
}

fn nakano_failure(e: NakanoError) -> Failure {
    match e {
        NakanoError::Curvature(c) => curvature_failure(c),
        other => Failure::Usage(other.to_string()),
    }
}

fn growth_failure(e: GrowthError) -> Failure {
    match e {
        GrowthError::InvalidChart(_) | GrowthError::UnknownFixture(_) => Failure::Usage(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn l2_failure(e: L2Error) -> Failure {
    match e {
        L2Error::InvalidParameters(_) | L2Error::DegreeOutOfRange(_) => Failure::Usage(e.to_string()),
        other => Failure::Runtime(other.to_string()),
    }
}

fn parse_spec(s: &str) -> Result<DomainSpec, Failure> {
    s.parse().map_err(domain_failure)
}

fn table(max: usize) -> Result<Envelope, Failure> {
    let rows = curvature::gamma_table(max).map_err(curvature_failure)?;
    let mut t = Table::new(&["type", "params", "n", "gamma", "gamma_reference", "source", "match"]);
    let mut failures = Vec::new();
    for r in &rows {
        let params = r.params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        if !r.matches {
            failures.push(format!("{}({params}): gamma {} against {}", r.type_tag, r.gamma, r.gamma_reference));
        }
        let source = serde_json::to_value(r.source).expect("serialise").as_str().unwrap_or_default().to_string();
        t.push(vec![
            r.type_tag.clone(),
            params,
            r.n.to_string(),
            format!("{:.9}", r.gamma),
            r.gamma_reference.to_string(),
            source,
            r.matches.to_string(),
        ]);
    }
    Ok(Envelope::new("table", &rows, failures).with_table(t))
}

fn gamma(spec: &str) -> Result<Envelope, Failure> {
    let inv = curvature::domain_invariants(&parse_spec(spec)?).map_err(curvature_failure)?;
    Ok(Envelope::new("gamma", &inv, Vec::new()))
}

fn cv(domain: &str, q: usize, samples: usize, seed: u64, tol: f64) -> Result<Envelope, Failure> {
    let spec = parse_spec(domain)?;
    let s = nakano::cv_certify(&spec, q, samples, seed, tol).map_err(nakano_failure)?;
    let mut failures = Vec::new();
    if !(s.max_identity_residual < tol) {
        failures.push(format!("identity residual {:e} exceeds {tol:e}", s.max_identity_residual));
    }
    if !(s.min_bound_slack >= -tol) {
        failures.push(format!("bound violated by {:e}", -s.min_bound_slack));
    }
    if !s.all_signs_ok {
        failures.push(format!("q = {q} < gamma - 1 but some samples are not negative"));
    }
    Ok(Envelope::new("verify cv", &s, failures))
}

fn growth_cases(case: Option<String>, custom: Option<String>, chart: &PuncturedChart) -> Result<Envelope, Failure> {
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut t = Table::new(&["case", "expected", "verdict", "sup_ratio", "fitted_exponent"]);
    let mut record = |name: String, expected: Verdict, r: growth::GrowthReport| {
        if r.verdict != expected {
            failures.push(format!("{name}: {}, expected {}", verdict_name(r.verdict), verdict_name(expected)));
        }
        t.push(vec![
            name.clone(),
            verdict_name(expected),
            verdict_name(r.verdict),
            num(r.sup_ratio),
            r.fitted_exponent.map_or("null".into(), num),
        ]);
        reports.push(json!({"case": name, "expected": expected, "report": r}));
    };
    if let Some(src) = custom {
        let e = Expr::parse(&src).map_err(|e| Failure::Usage(format!("--custom: {e}")))?;
        let form = FnForm {
            degree: 1,
            mask: 0b01,
            coefficient: move |z: &[Complex64]| e.eval(z[0]),
        };
        let r = growth::poincare_growth_test(&form, chart).map_err(growth_failure)?;
        record(format!("({src}) dz"), Verdict::PoincareGrowth, r);
    } else {
        let cases = match case {
            Some(c) => vec![FormCase::parse(&c).map_err(growth_failure)?],
            None => FormCase::ALL.to_vec(),
        };
        for c in cases {
            let r = growth::poincare_growth_test(&c, chart).map_err(growth_failure)?;
            record(c.name().to_string(), c.expected_verdict(), r);
        }
    }
    Ok(Envelope::new("verify growth", json!({"chart": chart, "cases": reports}), failures).with_table(t))
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v).expect("serialise").as_str().unwrap_or_default().to_string()
}

/// Expected log-growth exponents of `h` and `h⁻¹` for good fixtures.
fn expected_log_exponents(m: &MetricCase) -> Option<(f64, f64)> {
    match m {
        MetricCase::LogPower(a) => Some((a.max(0.0), (-a).max(0.0))),
        MetricCase::Identity | MetricCase::PoincareDisk => Some((0.0, 0.0)),
        MetricCase::AbsZSquared => None,
    }
}

fn good_metric(case: Option<String>, chart: &PuncturedChart) -> Result<Envelope, Failure> {
    let cases = match case {
        Some(c) => vec![MetricCase::parse(&c).map_err(growth_failure)?],
        None => vec![MetricCase::LogPower(2.0), MetricCase::AbsZSquared, MetricCase::Identity],
    };
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut t = Table::new(&["case", "expected_good", "good", "fitted_n", "inverse_fitted_n"]);
    for m in cases {
        let r = growth::good_metric_check(&m, chart).map_err(growth_failure)?;
        let name = m.name();
        if r.overall != m.expected_good() {
            failures.push(format!("{name}: good = {}, expected {}", r.overall, m.expected_good()));
        }
        if let (true, Some((n, n_inv))) = (m.expected_good(), expected_log_exponents(&m)) {
            for (label, got, want) in [("N", r.log_growth.fitted_n, n), ("inverse N", r.inverse_log_growth.fitted_n, n_inv)] {
                if !((got - want).abs() <= LOG_EXPONENT_TOL) {
                    failures.push(format!("{name}: fitted {label} = {got}, expected {want}"));
                }
            }
        }
        t.push(vec![
            name.clone(),
            m.expected_good().to_string(),
            r.overall.to_string(),
            num(r.log_growth.fitted_n),
            num(r.inverse_log_growth.fitted_n),
        ]);
        reports.push(json!({"case": name, "expected_good": m.expected_good(), "report": r}));
    }
    Ok(Envelope::new("verify good-metric", json!({"chart": chart, "cases": reports}), failures).with_table(t))
}

fn ke(case: Option<String>, k: Option<f64>, tol: f64) -> Result<Envelope, Failure> {
    let cases = match case {
        Some(c) => {
            let m = MetricCase::parse(&c).map_err(growth_failure)?;
            if !matches!(m, MetricCase::PoincareDisk | MetricCase::Identity) {
                return Err(Failure::Usage(format!("{c} is singular on the disk grid; use poincare-disk or identity")));
            }
            vec![m]
        }
        None => vec![MetricCase::PoincareDisk, MetricCase::Identity],
    };
    if let Some(k) = k {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Failure::Usage(format!("k must be positive, got {k}")));
        }
    }
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut t = Table::new(&["case", "expected_ke", "k", "residual"]);
    for m in cases {
        let r = growth::ke_form_residual(&m, k);
        let name = m.name();
        let expected = m.expected_kahler_einstein();
        if expected && !(r.residual < tol) {
            failures.push(format!("{name}: residual {:e} exceeds {tol:e}", r.residual));
        }
        if !expected && !(r.residual > NON_KE_MIN) {
            failures.push(format!("{name}: residual {:e} too small for a non-Einstein metric", r.residual));
        }
        t.push(vec![name.clone(), expected.to_string(), num(r.k), num(r.residual)]);
        reports.push(json!({"case": name, "expected_kahler_einstein": expected, "report": r}));
    }
    Ok(Envelope::new("verify ke", json!({"tolerance": tol, "cases": reports}), failures).with_table(t))
}

fn boundary() -> Result<Envelope, Failure> {
    let deltas = growth::default_deltas();
    let mut failures = Vec::new();
    let decay = growth::boundary_integral_decay(&BoundaryCase::PoincareGrowth, &deltas).map_err(growth_failure)?;
    let exponent = decay.fitted_exponent.unwrap_or(f64::NAN);
    if !decay.monotone_decreasing {
        failures.push("poincare-growth: values do not decrease".into());
    }
    if !((exponent + 1.0).abs() <= DECAY_EXPONENT_TOL) {
        failures.push(format!("poincare-growth: fitted exponent {exponent}, expected -1"));
    }
    let constant = growth::boundary_integral_decay(&BoundaryCase::LogDensity, &deltas).map_err(growth_failure)?;
    if !(constant.relative_spread < CONSTANT_SPREAD_TOL) {
        failures.push(format!("log-density: relative spread {:e}", constant.relative_spread));
    }
    let zero = growth::boundary_integral_decay(&BoundaryCase::Zero, &deltas).map_err(growth_failure)?;
    if zero.values.iter().any(|v| *v != 0.0) {
        failures.push("zero: nonzero circle integral".into());
    }
    let mut t = Table::new(&["delta", "poincare_growth", "log_density", "zero"]);
    for (i, d) in deltas.iter().enumerate() {
        t.push(vec![num(*d), num(decay.values[i]), num(constant.values[i]), num(zero.values[i])]);
    }
    let report = json!({"poincare-growth": decay, "log-density": constant, "zero": zero});
    Ok(Envelope::new("verify boundary", report, failures).with_table(t))
}

fn all(seed: u64) -> Envelope {
    let outcomes = acceptance::run_all(seed);
    let failures = outcomes.iter().filter(|o| !o.passed).map(|o| o.line()).collect();
    let mut t = Table::new(&["id", "name", "status", "detail"]);
    for o in &outcomes {
        t.push(vec![
            o.id.to_string(),
            o.name.to_string(),
            if o.passed { "pass" } else { "fail" }.to_string(),
            o.detail.clone(),
        ]);
    }
    Envelope::new("verify all", json!({"seed": seed, "criteria": outcomes}), failures).with_table(t)
}

fn lab(basis: usize, epsilon: f64, quad_order: usize, seed: u64, tol: f64) -> Result<Envelope, Failure> {
    let r = l2lab::lab_report(basis, epsilon, quad_order, seed).map_err(l2_failure)?;
    let mut failures = Vec::new();
    for (name, v) in [
        ("adjoint_residual", r.adjoint_residual),
        ("double_adjoint_residual", r.double_adjoint_residual),
        ("energy_identity_residual", r.energy_identity_residual),
        ("decomposition_residual", r.decomposition_residual),
        ("projection_gauge_residual", r.projection_gauge_residual),
    ] {
        if !(v < tol) {
            failures.push(format!("{name} = {v:e} exceeds {tol:e}"));
        }
    }
    if r.d_squared != 0.0 {
        failures.push(format!("D1 D0 = {:e}", r.d_squared));
    }
    if !(r.laplacian_min_eigenvalue >= -tol) {
        failures.push(format!("Laplacian eigenvalue {:e}", r.laplacian_min_eigenvalue));
    }
    if !r.dimension_count_ok {
        failures.push("Hodge dimensions do not add up".into());
    }
    if !r.passed(tol) && failures.is_empty() {
        failures.push(format!("kernel distance {:e}", r.kernel_distance));
    }
    Ok(Envelope::new("lab decompose", &r, failures))
}

fn run(cli: Cli) -> Result<Envelope, Failure> {
    match cli.command {
        Command::Table { max } => table(max),
        Command::Gamma { spec } => gamma(&spec),
        Command::Verify(v) => match v {
            Verify::Cv {
                domain,
                q,
                samples,
                seed,
                tol,
            } => cv(&domain, q, samples, seed.seed, tol),
            Verify::Growth { case, custom, chart } => growth_cases(case, custom, &chart.chart()?),
            Verify::GoodMetric { case, chart } => good_metric(case, &chart.chart()?),
            Verify::Ke { case, k, tol } => ke(case, k, tol),
            Verify::Boundary => boundary(),
            Verify::All { seed } => Ok(all(seed.seed)),
        },
        Command::Lab(Lab::Decompose {
            basis,
            epsilon,
            quad_order,
            seed,
            tol,
        }) => lab(basis, epsilon, quad_order, seed.seed, tol),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Table { .. } => "table",
        Command::Gamma { .. } => "gamma",
        Command::Verify(v) => match v {
            Verify::Cv { .. } => "verify cv",
            Verify::Growth { .. } => "verify growth",
            Verify::GoodMetric { .. } => "verify good-metric",
            Verify::Ke { .. } => "verify ke",
            Verify::Boundary => "verify boundary",
            Verify::All { .. } => "verify all",
        },
        Command::Lab(_) => "lab decompose",
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), String> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (format, output) = (cli.format, cli.output.clone());
    let name = command_name(&cli.command);
    let envelope = match run(cli) {
        Ok(env) => env,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Runtime(msg)) => Envelope::new(name, serde_json::Value::Null, vec![msg]),
    };
    if let Err(msg) = emit(&envelope.render(format), output.as_ref()) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    if envelope.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
