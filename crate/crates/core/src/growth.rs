//! Growth of forms and metrics near a normal-crossing boundary.
//!
//! A chart is `(Δ*)^r × Δ^{n-r}` with the Poincaré metric
//! `1 / (|z|² (log|z|²)²)` on punctured factors and `4 / (1 - |z|²)²` on disk
//! factors. Forms are sampled on a geometric radial grid towards the divisor
//! and their pointwise Poincaré norms are compared through a trend fit in
//! `x = ln(-ln ρ)`, the variable in which a power of `log` becomes linear.
//! Sampling cannot prove boundedness: a verdict is evidence on the sampled
//! region only.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Slope in `x = ln(-ln ρ)` below which a ratio counts as not diverging.
pub const SLOPE_TOL: f64 = 0.05;
/// Minimum coefficient of determination for a divergence verdict.
pub const R2_MIN: f64 = 0.9;
/// A slope that shrinks by at least this factor per decade is read as
/// saturating rather than diverging.
pub const SLOPE_DECAY: f64 = 0.95;
/// Admissible drift of the fitted log exponent between the last two decades.
pub const EXPONENT_DRIFT_TOL: f64 = 0.25;
/// Last-decade ratios below this fraction of the grid maximum count as bounded:
/// for forms smooth at the puncture they are finite-difference roundoff, which
/// the Poincaré normalisation inflates by powers of `log ρ`.
pub const NOISE_FLOOR: f64 = 1e-8;
/// Relative step of first-order finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Step for second derivatives: absolute in the `∂∂̄` stencil, relative when
/// differencing the connection.
pub const FD_STEP_SECOND: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("point lies on the divisor (coordinate {0} is zero)")]
    OnDivisor(usize),
    #[error("evaluation failed at {point}: {reason}")]
    EvaluationFailure { point: String, reason: String },
    #[error("metric is numerically singular at {0}")]
    SingularMetric(String),
    #[error("quadrature failed at radius {0:e}")]
    QuadratureFailure(f64),
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
}

/// `(Δ*)^r × Δ^{n-r}` with a radial sampling plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuncturedChart {
    pub r: usize,
    pub n: usize,
    pub rho_min: f64,
    pub rho_max: f64,
    pub points_per_decade: usize,
    pub angles: usize,
    /// Modulus of the unpunctured coordinates at every sample.
    pub disk_radius: f64,
}

impl PuncturedChart {
    /// One punctured disk sampled from `0.1` down to `1e-6`.
    pub fn punctured_disk() -> Self {
        PuncturedChart {
            r: 1,
            n: 1,
            rho_min: 1e-6,
            rho_max: 1e-1,
            points_per_decade: 10,
            angles: 8,
            disk_radius: 0.5,
        }
    }

    pub fn new(r: usize, n: usize, rho_min: f64, rho_max: f64) -> Result<Self, GrowthError> {
        let c = PuncturedChart {
            r,
            n,
            rho_min,
            rho_max,
            ..PuncturedChart::punctured_disk()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        if !(1 <= self.r && self.r <= self.n) {
            return Err(GrowthError::InvalidChart(format!("need 1 <= r <= n, got r={} n={}", self.r, self.n)));
        }
        if !(0.0 < self.rho_min && self.rho_min < self.rho_max && self.rho_max < 1.0) {
            return Err(GrowthError::InvalidChart(format!(
                "need 0 < rho_min < rho_max < 1, got {} and {}",
                self.rho_min, self.rho_max
            )));
        }
        if self.rho_max < 100.0 * self.rho_min * (1.0 - 1e-12) {
            return Err(GrowthError::InvalidChart("the plan must span at least two decades".into()));
        }
        if self.points_per_decade < 3 || self.angles == 0 {
            return Err(GrowthError::InvalidChart("too few sample points".into()));
        }
        if !(0.0 <= self.disk_radius && self.disk_radius < 1.0) {
            return Err(GrowthError::InvalidChart("disk radius must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Radii from `rho_max` down to `rho_min`, geometric.
    pub fn radii(&self) -> Vec<f64> {
        let decades = (self.rho_max / self.rho_min).log10();
        let steps = (decades * self.points_per_decade as f64).round() as usize;
        (0..=steps)
            .map(|k| self.rho_max * (self.rho_min / self.rho_max).powf(k as f64 / steps as f64))
            .collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.angles).map(|k| 2.0 * PI * k as f64 / self.angles as f64).collect()
    }

    /// Sample point with every punctured coordinate at `rho e^{iθ}`.
    pub fn point(&self, rho: f64, theta: f64) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                let modulus = if i < self.r { rho } else { self.disk_radius };
                Complex64::from_polar(modulus, theta)
            })
            .collect()
    }
}

/// Diagonal of the Poincaré metric at `z`.
pub fn poincare_factors(chart: &PuncturedChart, z: &[Complex64]) -> Result<Vec<f64>, GrowthError> {
    z.iter()
        .enumerate()
        .map(|(i, zi)| {
            let s = zi.norm_sqr();
            if i < chart.r {
                if s == 0.0 {
                    return Err(GrowthError::OnDivisor(i));
                }
                Ok(1.0 / (s * s.ln().powi(2)))
            } else {
                Ok(4.0 / (1.0 - s).powi(2))
            }
        })
        .collect()
}

/// The Poincaré metric as a matrix on the coordinate frame.
pub fn poincare_metric_at(chart: &PuncturedChart, z: &[Complex64]) -> Result<DMatrix<f64>, GrowthError> {
    let d = poincare_factors(chart, z)?;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}

/// Values of a form on the coordinate frame: `(mask, coefficient)` where bit
/// `i` of the mask is `dz_i` and bit `n + i` is `dz̄_i`. Several entries may
/// share a mask when the sample bundles a matrix of forms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormSample {
    pub terms: Vec<(u64, Complex64)>,
}

/// Something that evaluates a (matrix of) `p`-form(s) on the chart.
pub trait FormEvaluator: Sync {
    fn degree(&self) -> usize;
    fn eval(&self, z: &[Complex64]) -> Result<FormSample, GrowthError>;
}

/// `sup |η(t_1..t_p)|² / Π ‖t_i‖²_P` over coordinate frame vectors.
pub fn growth_ratio(sample: &FormSample, factors: &[f64]) -> f64 {
    let n = factors.len();
    sample
        .terms
        .iter()
        .map(|&(mask, c)| {
            let denom: f64 = (0..2 * n).filter(|b| mask >> b & 1 == 1).map(|b| factors[b % n]).product();
            c.norm_sqr() / denom
        })
        .fold(0.0, |acc: f64, r| if r.is_nan() || acc.is_nan() { f64::NAN } else { acc.max(r) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    PoincareGrowth,
    NotPoincareGrowth,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioSample {
    pub rho: f64,
    pub theta: f64,
    pub ratio: f64,
}

/// Least-squares fit of `ln(value)` against `x = ln(-ln ρ)` on one window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits on the last two decades of the radial grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub last: LogFit,
    pub previous: LogFit,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> LogFit {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy <= 1e-30 * m { 1.0 } else { sxy * sxy / (sxx * syy) };
    LogFit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}

/// Trend of positive `values` sampled at `radii` (any order).
pub fn fit_trend(radii: &[f64], values: &[f64], rho_min: f64) -> Trend {
    let window = |lo: f64, hi: f64| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = radii
            .iter()
            .zip(values)
            .filter(|(r, _)| **r >= lo * (1.0 - 1e-9) && **r <= hi * (1.0 + 1e-9))
            .map(|(r, v)| ((-r.ln()).ln(), v.ln()))
            .unzip();
        fit_line(&xs, &ys)
    };
    Trend {
        last: window(rho_min, 10.0 * rho_min),
        previous: window(10.0 * rho_min, 100.0 * rho_min),
    }
}

/// Verdict on per-radius suprema.
pub fn classify(radii: &[f64], sups: &[f64], rho_min: f64) -> (Verdict, Option<Trend>) {
    if sups.iter().any(|v| !v.is_finite()) {
        return (Verdict::NotPoincareGrowth, None);
    }
    if sups.iter().all(|v| *v == 0.0) {
        return (Verdict::PoincareGrowth, None);
    }
    if sups.iter().any(|v| *v <= 0.0) {
        // Isolated zeros break the log fit; fall back to the tail maximum.
        let tail = sups.iter().rev().take(3).fold(0.0f64, |a, &b| a.max(b));
        let head = sups.iter().take(3).fold(0.0f64, |a, &b| a.max(b));
        let v = if tail <= head { Verdict::PoincareGrowth } else { Verdict::Inconclusive };
        return (v, None);
    }
    let trend = fit_trend(radii, sups, rho_min);
    let (last, prev) = (trend.last, trend.previous);
    let peak = sups.iter().fold(0.0f64, |a, &b| a.max(b));
    let negligible = radii
        .iter()
        .zip(sups)
        .filter(|(r, _)| **r <= 10.0 * rho_min * (1.0 + 1e-9))
        .all(|(_, v)| *v <= NOISE_FLOOR * peak);
    let verdict = if last.slope <= SLOPE_TOL || negligible {
        Verdict::PoincareGrowth
    } else if prev.slope > 0.0 && last.slope < SLOPE_DECAY * prev.slope {
        // Slope decaying geometrically in x: the ratio saturates.
        Verdict::PoincareGrowth
    } else if last.r2 >= R2_MIN {
        Verdict::NotPoincareGrowth
    } else {
        Verdict::Inconclusive
    };
    (verdict, Some(trend))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub degree: usize,
    pub ratio_samples: Vec<RatioSample>,
    pub sup_ratio: f64,
    /// Slope of `ln sup ratio` in `ln(-ln ρ)` over the last decade.
    pub fitted_exponent: Option<f64>,
    pub trend: Option<Trend>,
    pub verdict: Verdict,
}

fn sample_grid<T, F>(chart: &PuncturedChart, f: F) -> Result<Vec<(f64, f64, T)>, GrowthError>
where
    T: Send,
    F: Fn(&[Complex64]) -> Result<T, GrowthError> + Sync,
{
    let radii = chart.radii();
    let thetas = chart.thetas();
    let grid: Vec<(f64, f64)> = radii.iter().flat_map(|&r| thetas.iter().map(move |&t| (r, t))).collect();
    grid.into_par_iter()
        .map(|(rho, theta)| f(&chart.point(rho, theta)).map(|v| (rho, theta, v)))
        .collect()
}

fn per_radius_sup(chart: &PuncturedChart, samples: &[(f64, f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let a = chart.angles;
    let radii: Vec<f64> = samples.chunks(a).map(|c| c[0].0).collect();
    let sups: Vec<f64> = samples
        .chunks(a)
        .map(|c| c.iter().map(|s| s.2).fold(0.0, |acc: f64, r| if r.is_nan() { f64::NAN } else { acc.max(r) }))
        .collect();
    (radii, sups)
}

/// Decide Poincaré growth of `form` on the chart's sampling plan.
pub fn poincare_growth_test(form: &dyn FormEvaluator, chart: &PuncturedChart) -> Result<GrowthReport, GrowthError> {
    chart.validate()?;
    let p = form.degree();
    let samples = sample_grid(chart, |z| {
        let s = form.eval(z)?;
        for &(mask, _) in &s.terms {
            if mask.count_ones() as usize != p {
                return Err(GrowthError::EvaluationFailure {
                    point: format!("{z:?}"),
                    reason: format!("term of degree {} in a {p}-form", mask.count_ones()),
                });
            }
        }
        Ok(growth_ratio(&s, &poincare_factors(chart, z)?))
    })?;
    let (radii, sups) = per_radius_sup(chart, &samples);
    let (verdict, trend) = classify(&radii, &sups, chart.rho_min);
    let sup_ratio = sups.iter().fold(0.0, |a: f64, &b| if b.is_nan() { f64::NAN } else { a.max(b) });
    Ok(GrowthReport {
        degree: p,
        ratio_samples: samples
            .into_iter()
            .map(|(rho, theta, ratio)| RatioSample { rho, theta, ratio })
            .collect(),
        sup_ratio: if sups.iter().any(|v| !v.is_finite()) { f64::INFINITY } else { sup_ratio },
        fitted_exponent: trend.map(|t| t.last.slope),
        trend,
        verdict,
    })
}

/// Form `f(z) · monomial` on a chart of dimension `n`.
pub struct FnForm<F> {
    pub degree: usize,
    pub mask: u64,
    pub coefficient: F,
}

impl<F: Fn(&[Complex64]) -> Complex64 + Sync> FormEvaluator for FnForm<F> {
    fn degree(&self) -> usize {
        self.degree
    }

    fn eval(&self, z: &[Complex64]) -> Result<FormSample, GrowthError> {
        Ok(FormSample {
            terms: vec![(self.mask, (self.coefficient)(z))],
        })
    }
}

/// One-form fixtures on the punctured disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormCase {
    /// `dz`
    Dz,
    /// `dz / z`
    DzOverZ,
    /// `dz / (z log|z|²)`
    DzOverZlog,
    /// The Poincaré area form `(i/2) g dz ∧ dz̄`.
    PoincareVolume,
}

impl FormCase {
    pub const ALL: [FormCase; 4] = [FormCase::Dz, FormCase::DzOverZ, FormCase::DzOverZlog, FormCase::PoincareVolume];

    pub fn name(self) -> &'static str {
        match self {
            FormCase::Dz => "dz",
            FormCase::DzOverZ => "dz-over-z",
            FormCase::DzOverZlog => "dz-over-zlog",
            FormCase::PoincareVolume => "poincare-volume",
        }
    }

    pub fn parse(s: &str) -> Result<Self, GrowthError> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| GrowthError::UnknownFixture(s.to_string()))
    }

    /// Known answer for the fixture.
    pub fn expected_verdict(self) -> Verdict {
        match self {
            FormCase::DzOverZ => Verdict::NotPoincareGrowth,
            _ => Verdict::PoincareGrowth,
        }
    }

    /// The form pulled back along `z = c w`.
    pub fn rescaled(self, c: Complex64) -> RescaledForm {
        RescaledForm { case: self, c }
    }

    fn coefficient(self, z: Complex64) -> (u64, Complex64) {
        let s = z.norm_sqr();
        match self {
            FormCase::Dz => (0b01, Complex64::new(1.0, 0.0)),
            FormCase::DzOverZ => (0b01, 1.0 / z),
            FormCase::DzOverZlog => (0b01, 1.0 / (z * s.ln())),
            FormCase::PoincareVolume => (0b11, 0.5 * I / (s * s.ln().powi(2))),
        }
    }
}

impl FormEvaluator for FormCase {
    fn degree(&self) -> usize {
        if *self == FormCase::PoincareVolume {
            2
        } else {
            1
        }
    }

    fn eval(&self, z: &[Complex64]) -> Result<FormSample, GrowthError> {
        let (mask, c) = self.coefficient(z[0]);
        Ok(FormSample { terms: vec![(mask, c)] })
    }
}

/// A fixture in the coordinate `w` with `z = c w`.
pub struct RescaledForm {
    case: FormCase,
    c: Complex64,
}

impl FormEvaluator for RescaledForm {
    fn degree(&self) -> usize {
        self.case.degree()
    }

    fn eval(&self, w: &[Complex64]) -> Result<FormSample, GrowthError> {
        let (mask, coeff) = self.case.coefficient(self.c * w[0]);
        // dz = c dw, dz̄ = c̄ dw̄
        let mut factor = Complex64::new(1.0, 0.0);
        if mask & 1 != 0 {
            factor *= self.c;
        }
        if mask & 2 != 0 {
            factor *= self.c.conj();
        }
        Ok(FormSample {
            terms: vec![(mask, coeff * factor)],
        })
    }
}

/// A Hermitian metric on a trivialised bundle over the chart.
pub trait MetricSampler: Sync {
    fn rank(&self) -> usize;
    fn eval(&self, z: &[Complex64]) -> DMatrix<Complex64>;
}

impl<T: MetricSampler + ?Sized> MetricSampler for &T {
    fn rank(&self) -> usize {
        (**self).rank()
    }

    fn eval(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        (**self).eval(z)
    }
}

/// Line-bundle and disk metric fixtures (one complex variable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "case", content = "a")]
pub enum MetricCase {
    /// `(-log|z|²)^a`
    LogPower(f64),
    /// `|z|²`
    AbsZSquared,
    /// `1`
    Identity,
    /// `4 / (1 - |z|²)²` on the unit disk.
    PoincareDisk,
}

impl MetricCase {
    pub fn name(&self) -> String {
        match self {
            MetricCase::LogPower(a) => format!("log-power:{a}"),
            MetricCase::AbsZSquared => "abs-z-squared".into(),
            MetricCase::Identity => "identity".into(),
            MetricCase::PoincareDisk => "poincare-disk".into(),
        }
    }

    /// Known goodness at the puncture: only `|z|²` degenerates there.
    pub fn expected_good(&self) -> bool {
        !matches!(self, MetricCase::AbsZSquared)
    }

    /// Known Kähler–Einstein property on the disk chart.
    pub fn expected_kahler_einstein(&self) -> bool {
        matches!(self, MetricCase::PoincareDisk)
    }

    pub fn parse(s: &str) -> Result<Self, GrowthError> {
        let bad = || GrowthError::UnknownFixture(s.to_string());
        match s {
            "abs-z-squared" => Ok(MetricCase::AbsZSquared),
            "identity" => Ok(MetricCase::Identity),
            "poincare-disk" => Ok(MetricCase::PoincareDisk),
            _ => {
                let a = s.strip_prefix("log-power:").ok_or_else(bad)?;
                let a: f64 = a.parse().map_err(|_| bad())?;
                a.is_finite().then_some(MetricCase::LogPower(a)).ok_or_else(bad)
            }
        }
    }
}

impl MetricSampler for MetricCase {
    fn rank(&self) -> usize {
        1
    }

    fn eval(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let s = z[0].norm_sqr();
        let v = match self {
            MetricCase::LogPower(a) => (-s.ln()).powf(*a),
            MetricCase::AbsZSquared => s,
            MetricCase::Identity => 1.0,
            MetricCase::PoincareDisk => 4.0 / (1.0 - s).powi(2),
        };
        DMatrix::from_element(1, 1, Complex64::from(v))
    }
}

/// Metric `c · h` for a positive constant `c`.
pub struct Scaled<M>(pub M, pub f64);

impl<M: MetricSampler> MetricSampler for Scaled<M> {
    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn eval(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        self.0.eval(z) * Complex64::from(self.1)
    }
}

/// Induced metric `h^{-T}` on the dual bundle in the dual frame.
pub struct DualMetric<M>(pub M);

impl<M: MetricSampler> MetricSampler for DualMetric<M> {
    fn rank(&self) -> usize {
        self.0.rank()
    }

    fn eval(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let h = self.0.eval(z);
        let n = h.nrows();
        h.try_inverse()
            .map(|m| m.transpose())
            .unwrap_or_else(|| DMatrix::from_element(n, n, Complex64::new(f64::NAN, 0.0)))
    }
}

/// Metric given by a closure.
pub struct FnMetric<F> {
    pub rank: usize,
    pub h: F,
}

impl<F: Fn(&[Complex64]) -> DMatrix<Complex64> + Sync> MetricSampler for FnMetric<F> {
    fn rank(&self) -> usize {
        self.rank
    }

    fn eval(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        (self.h)(z)
    }
}

fn step_for(zi: Complex64, rel: f64) -> f64 {
    let m = zi.norm();
    if m > 0.0 {
        rel * m
    } else {
        rel
    }
}

/// `(∂f/∂z_i, ∂f/∂z̄_i)` by central differences in `x_i` and `y_i`.
pub fn wirtinger<F>(f: F, z: &[Complex64], i: usize, step: f64) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>), GrowthError>
where
    F: Fn(&[Complex64]) -> Result<DMatrix<Complex64>, GrowthError>,
{
    let shifted = |d: Complex64| {
        let mut w = z.to_vec();
        w[i] += d;
        f(&w)
    };
    let h = Complex64::new(step, 0.0);
    let ih = Complex64::new(0.0, step);
    let dx = (shifted(h)? - shifted(-h)?) / Complex64::from(2.0 * step);
    let dy = (shifted(ih)? - shifted(-ih)?) / Complex64::from(2.0 * step);
    let dz = (&dx - &dy * I) * Complex64::from(0.5);
    let dzbar = (dx + dy * I) * Complex64::from(0.5);
    Ok((dz, dzbar))
}

fn checked_inverse(h: &DMatrix<Complex64>, z: &[Complex64]) -> Result<DMatrix<Complex64>, GrowthError> {
    let singular = || GrowthError::SingularMetric(format!("{z:?}"));
    if h.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(singular());
    }
    let eig = crate::linalg::herm_eigenvalues(&((h + h.adjoint()) * Complex64::from(0.5)));
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    if !(lo > 1e-14 * hi.abs().max(f64::MIN_POSITIVE)) {
        return Err(singular());
    }
    h.clone().try_inverse().ok_or_else(singular)
}

/// `ω_h = ∂h · h⁻¹`: one matrix per `dz_i`, `n` being `z.len()`.
pub fn chern_connection(sampler: &dyn MetricSampler, z: &[Complex64]) -> Result<Vec<DMatrix<Complex64>>, GrowthError> {
    let h = sampler.eval(z);
    let inv = checked_inverse(&h, z)?;
    (0..z.len())
        .map(|i| {
            let (dh, _) = wirtinger(|w| Ok(sampler.eval(w)), z, i, step_for(z[i], FD_STEP))?;
            Ok(dh * &inv)
        })
        .collect()
}

/// Entries of `ω_h` as `(1,0)`-forms.
pub struct ConnectionForm<'a> {
    pub sampler: &'a dyn MetricSampler,
}

impl FormEvaluator for ConnectionForm<'_> {
    fn degree(&self) -> usize {
        1
    }

    fn eval(&self, z: &[Complex64]) -> Result<FormSample, GrowthError> {
        let omega = chern_connection(self.sampler, z)?;
        let mut terms = Vec::new();
        for (i, m) in omega.iter().enumerate() {
            terms.extend(m.iter().map(|&c| (1u64 << i, c)));
        }
        Ok(FormSample { terms })
    }
}

/// Entries of `dω_h` as 2-forms, by differencing [`chern_connection`].
pub struct ConnectionDifferential<'a> {
    pub sampler: &'a dyn MetricSampler,
}

/// `dω_h` per matrix entry, keyed by the 2-form monomial.
pub fn connection_differential(
    sampler: &dyn MetricSampler,
    z: &[Complex64],
) -> Result<Vec<BTreeMap<u64, Complex64>>, GrowthError> {
    let n = z.len();
    let rank = sampler.rank();
    let mut entries = vec![BTreeMap::new(); rank * rank];
    for i in 0..n {
        for l in 0..n {
            // Differencing a differenced quantity: the larger step balances
            // truncation against amplified rounding.
            let step = step_for(z[l], FD_STEP_SECOND);
            let (d, dbar) = wirtinger(|w| Ok(chern_connection(sampler, w)?[i].clone()), z, l, step)?;
            // ∂̄_l ω_i dz̄_l ∧ dz_i = -∂̄_l ω_i dz_i ∧ dz̄_l
            let mixed = (1u64 << i) | (1u64 << (n + l));
            for (e, c) in entries.iter_mut().zip(dbar.iter()) {
                *e.entry(mixed).or_insert(ZERO) -= c;
            }
            if l != i {
                // ∂_l ω_i dz_l ∧ dz_i, sign +1 when l < i
                let mask = (1u64 << i) | (1u64 << l);
                let s = if l < i { 1.0 } else { -1.0 };
                for (e, c) in entries.iter_mut().zip(d.iter()) {
                    *e.entry(mask).or_insert(ZERO) += c * s;
                }
            }
        }
    }
    Ok(entries)
}

impl FormEvaluator for ConnectionDifferential<'_> {
    fn degree(&self) -> usize {
        2
    }

    fn eval(&self, z: &[Complex64]) -> Result<FormSample, GrowthError> {
        let entries = connection_differential(self.sampler, z)?;
        Ok(FormSample {
            terms: entries.into_iter().flat_map(|e| e.into_iter()).collect(),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogGrowth {
    pub ok: bool,
    /// Fitted `N` in `C (log)^N` over the last decade (0 if bounded).
    pub fitted_n: f64,
    pub previous_n: f64,
}

fn log_growth(chart: &PuncturedChart, entry: impl Fn(&[Complex64]) -> Result<f64, GrowthError> + Sync) -> Result<LogGrowth, GrowthError> {
    let samples = sample_grid(chart, entry)?;
    let (radii, sups) = per_radius_sup(chart, &samples);
    if sups.iter().any(|v| !v.is_finite()) {
        return Ok(LogGrowth {
            ok: false,
            fitted_n: f64::INFINITY,
            previous_n: f64::INFINITY,
        });
    }
    if sups.iter().all(|v| *v > 0.0) {
        let t = fit_trend(&radii, &sups, chart.rho_min);
        let bounded = t.last.slope <= SLOPE_TOL;
        let stable = (t.last.slope - t.previous.slope).abs() <= EXPONENT_DRIFT_TOL;
        Ok(LogGrowth {
            ok: bounded || stable,
            fitted_n: if bounded { t.last.slope.max(0.0) } else { t.last.slope },
            previous_n: t.previous.slope,
        })
    } else {
        Ok(LogGrowth {
            ok: true,
            fitted_n: 0.0,
            previous_n: 0.0,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoodMetricReport {
    pub log_growth: LogGrowth,
    pub inverse_log_growth: LogGrowth,
    pub connection_good: Verdict,
    pub d_connection_good: Verdict,
    pub overall: bool,
}

/// Mumford goodness: log growth of `h` and `h⁻¹`, Poincaré growth of `ω_h` and `dω_h`.
pub fn good_metric_check(sampler: &dyn MetricSampler, chart: &PuncturedChart) -> Result<GoodMetricReport, GrowthError> {
    chart.validate()?;
    let max_entry = |m: DMatrix<Complex64>| m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let log_growth_h = log_growth(chart, |z| Ok(max_entry(sampler.eval(z))))?;
    let inverse = log_growth(chart, |z| {
        let h = sampler.eval(z);
        Ok(checked_inverse(&h, z).map(max_entry).unwrap_or(f64::INFINITY))
    })?;
    let connection = poincare_growth_test(&ConnectionForm { sampler }, chart)?.verdict;
    let d_connection = poincare_growth_test(&ConnectionDifferential { sampler }, chart)?.verdict;
    Ok(GoodMetricReport {
        overall: log_growth_h.ok
            && inverse.ok
            && connection == Verdict::PoincareGrowth
            && d_connection == Verdict::PoincareGrowth,
        log_growth: log_growth_h,
        inverse_log_growth: inverse,
        connection_good: connection,
        d_connection_good: d_connection,
    })
}

/// `∂_i ∂̄_j f` by a four-point second-order stencil with absolute step `h`.
pub fn ddbar<F: Fn(&[Complex64]) -> f64>(f: &F, z: &[Complex64], i: usize, j: usize, h: f64) -> Complex64 {
    let eval = |di: Complex64, dj: Complex64| {
        let mut w = z.to_vec();
        w[i] += di;
        w[j] += dj;
        f(&w)
    };
    let mixed = |u: Complex64, v: Complex64| {
        (eval(u, v) - eval(u, -v) - eval(-u, v) + eval(-u, -v)) / (4.0 * h * h)
    };
    let (x, y) = (Complex64::new(h, 0.0), Complex64::new(0.0, h));
    // ∂_i ∂̄_j = ¼ (∂x_i - i ∂y_i)(∂x_j + i ∂y_j)
    let xx = mixed(x, x);
    let yy = mixed(y, y);
    let xy = mixed(x, y);
    let yx = mixed(y, x);
    Complex64::new(xx + yy, xy - yx) * 0.25
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeReport {
    pub k: f64,
    pub k_fitted: bool,
    pub residual: f64,
    pub grid_points: usize,
}

/// Interior grid of the disk chart: radii `0, 0.1, .., 0.8`, 8 angles.
pub fn ke_grid() -> Vec<Complex64> {
    let mut pts = vec![ZERO];
    for r in 1..=8 {
        for t in 0..8 {
            pts.push(Complex64::from_polar(0.1 * r as f64, 2.0 * PI * t as f64 / 8.0));
        }
    }
    pts
}

/// `max |ω_{ij̄} + k i ∂_i ∂̄_j log det h|` over the grid, with the
/// fundamental form `ω_{ij̄} = -(i/2) h_{ij̄}` (so that `ω(X, Y) = g(X, JY)`).
/// Without `k`, it is fitted by least squares.
pub fn ke_form_residual(sampler: &dyn MetricSampler, k: Option<f64>) -> KeReport {
    let grid = ke_grid();
    let logdet = |w: &[Complex64]| sampler.eval(w).determinant().re.ln();
    let mut pairs = Vec::new();
    for z in &grid {
        let zs = [*z];
        let h = sampler.eval(&zs);
        let n = h.nrows();
        for i in 0..n {
            for j in 0..n {
                let omega = -0.5 * I * h[(i, j)];
                let b = I * ddbar(&logdet, &zs, i, j, FD_STEP_SECOND);
                pairs.push((omega, b));
            }
        }
    }
    let (k, k_fitted) = match k {
        Some(k) => (k, false),
        None => {
            let den: f64 = pairs.iter().map(|(_, b)| b.norm_sqr()).sum();
            let num: f64 = pairs.iter().map(|(o, b)| (b.conj() * o).re).sum();
            (if den > 0.0 { -num / den } else { 0.0 }, true)
        }
    };
    let residual = pairs.iter().map(|(o, b)| (o + b * k).norm()).fold(0.0, f64::max);
    KeReport {
        k,
        k_fitted,
        residual,
        grid_points: grid.len(),
    }
}

/// Integrand `a dz + b dz̄` restricted to circles `|z| = δ`.
pub trait CircleIntegrand: Sync {
    fn eval(&self, z: Complex64) -> (Complex64, Complex64);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCase {
    /// `(1 + z̄/2) dz / (z log|z|²)`: a bounded factor times a form of Poincaré growth.
    PoincareGrowth,
    /// `0`
    Zero,
    /// `dz / (i z)`, the angular density `|dz/z|²` seen on circles.
    LogDensity,
}

impl CircleIntegrand for BoundaryCase {
    fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        match self {
            BoundaryCase::PoincareGrowth => ((1.0 + 0.5 * z.conj()) / (z * z.norm_sqr().ln()), ZERO),
            BoundaryCase::Zero => (ZERO, ZERO),
            BoundaryCase::LogDensity => (1.0 / (I * z), ZERO),
        }
    }
}

/// `∫_{|z|=δ} a dz + b dz̄` by the periodic trapezoid rule, refined until stable.
pub fn circle_integral(integrand: &dyn CircleIntegrand, delta: f64) -> Result<Complex64, GrowthError> {
    let at = |m: usize| {
        quadrature::periodic_trapezoid(m, |t| {
            let z = Complex64::from_polar(delta, t);
            let (a, b) = integrand.eval(z);
            // dz = i z dθ, dz̄ = -i z̄ dθ
            a * I * z - b * I * z.conj()
        })
    };
    let mut m = 64;
    let mut prev = at(m);
    while m < 1 << 16 {
        m *= 2;
        let next = at(m);
        if !(next.re.is_finite() && next.im.is_finite()) {
            return Err(GrowthError::QuadratureFailure(delta));
        }
        if (next - prev).norm() <= 1e-13 * next.norm().max(1e-300) || next == prev {
            return Ok(next);
        }
        prev = next;
    }
    Err(GrowthError::QuadratureFailure(delta))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryDecayReport {
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    /// Slope of `ln value` against `ln |ln δ|` (−1 for `1/|log δ|`).
    pub fitted_exponent: Option<f64>,
    pub monotone_decreasing: bool,
    /// `max |v - v_0| / max(|v_0|, tiny)`.
    pub relative_spread: f64,
}

pub fn default_deltas() -> Vec<f64> {
    (2..=6).map(|k| 10f64.powi(-k)).collect()
}

pub fn boundary_integral_decay(integrand: &dyn CircleIntegrand, deltas: &[f64]) -> Result<BoundaryDecayReport, GrowthError> {
    if deltas.windows(2).any(|w| !(w[1] < w[0])) || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(GrowthError::InvalidChart("deltas must decrease strictly inside (0, 1)".into()));
    }
    let values: Vec<f64> = deltas
        .par_iter()
        .map(|&d| circle_integral(integrand, d).map(|v| v.norm()))
        .collect::<Result<_, _>>()?;
    let fitted_exponent = (values.iter().all(|v| *v > 0.0) && values.len() >= 2).then(|| {
        let xs: Vec<f64> = deltas.iter().map(|d| d.ln().abs().ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        fit_line(&xs, &ys).slope
    });
    let v0 = values[0];
    Ok(BoundaryDecayReport {
        deltas: deltas.to_vec(),
        monotone_decreasing: values.windows(2).all(|w| w[1] < w[0]),
        relative_spread: values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max) / v0.abs().max(f64::MIN_POSITIVE),
        values,
        fitted_exponent,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundedSectionReport {
    pub sup: f64,
    pub verdict: Verdict,
    pub fitted_exponent: Option<f64>,
    /// The value at the innermost radius is below the one a decade out.
    pub tends_to_zero: bool,
}

/// `sup |f|² ‖s‖²` on the grid and its trend towards the divisor.
pub fn bounded_section_check(
    section_norm_sqr: &(dyn Fn(Complex64) -> f64 + Sync),
    f: &(dyn Fn(Complex64) -> Complex64 + Sync),
    chart: &PuncturedChart,
) -> Result<BoundedSectionReport, GrowthError> {
    chart.validate()?;
    let samples = sample_grid(chart, |z| Ok(f(z[0]).norm_sqr() * section_norm_sqr(z[0])))?;
    let (radii, sups) = per_radius_sup(chart, &samples);
    let (verdict, trend) = classify(&radii, &sups, chart.rho_min);
    let last = *sups.last().expect("non-empty grid");
    let decade_out = sups[sups.len() - 1 - chart.points_per_decade];
    Ok(BoundedSectionReport {
        sup: if sups.iter().any(|v| !v.is_finite()) {
            f64::INFINITY
        } else {
            sups.iter().copied().fold(0.0, f64::max)
        },
        verdict,
        fitted_exponent: trend.map(|t| t.last.slope),
        tends_to_zero: last == 0.0 || last < decade_out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn disk() -> PuncturedChart {
        PuncturedChart::punctured_disk()
    }

    #[test]
    fn chart_validation() {
        assert!(PuncturedChart::new(0, 1, 1e-6, 0.1).is_err());
        assert!(PuncturedChart::new(2, 1, 1e-6, 0.1).is_err());
        assert!(PuncturedChart::new(1, 1, 0.0, 0.1).is_err());
        assert!(PuncturedChart::new(1, 1, 1e-6, 1.0).is_err());
        assert!(PuncturedChart::new(1, 1, 1e-3, 1e-2).is_err());
        let c = PuncturedChart::new(1, 2, 1e-6, 0.1).unwrap();
        let r = c.radii();
        assert_eq!(r.len(), 51);
        assert_relative_eq!(r[50], 1e-6, max_relative = 1e-12);
    }

    #[test]
    fn poincare_metric_values() {
        let c = disk();
        let z = [Complex64::new((-1f64).exp(), 0.0)];
        assert_relative_eq!(poincare_metric_at(&c, &z).unwrap()[(0, 0)], 1f64.exp().powi(2) / 4.0, max_relative = 1e-14);
        assert_eq!(poincare_metric_at(&c, &[ZERO]), Err(GrowthError::OnDivisor(0)));

        let c2 = PuncturedChart::new(1, 2, 1e-6, 0.1).unwrap();
        let m = poincare_metric_at(&c2, &c2.point(1e-3, 0.3)).unwrap();
        assert_eq!(m[(0, 1)], 0.0);
        assert_relative_eq!(m[(1, 1)], 4.0 / 0.75f64.powi(2));
        let g = |r: f64| poincare_metric_at(&c, &[Complex64::new(r, 0.0)]).unwrap()[(0, 0)];
        assert!(g(1e-8) > g(1e-4) && g(1e-4) > g(1e-2));
    }

    #[test]
    fn fixture_verdicts() {
        let c = disk();
        let v = |f: FormCase| poincare_growth_test(&f, &c).unwrap();
        assert_eq!(v(FormCase::Dz).verdict, Verdict::PoincareGrowth);
        let dz_over_z = v(FormCase::DzOverZ);
        assert_eq!(dz_over_z.verdict, Verdict::NotPoincareGrowth);
        assert_relative_eq!(dz_over_z.fitted_exponent.unwrap(), 2.0, epsilon = 1e-9);
        let log = v(FormCase::DzOverZlog);
        assert_eq!(log.verdict, Verdict::PoincareGrowth);
        assert!(log.ratio_samples.iter().all(|s| (s.ratio - 1.0).abs() < 1e-12));
        assert_eq!(v(FormCase::PoincareVolume).verdict, Verdict::PoincareGrowth);
    }

    #[test]
    fn roundoff_floor_is_bounded_but_real_growth_is_not() {
        let c = disk();
        let radii = c.radii();
        let logs: Vec<f64> = radii.iter().map(|r| (-r.ln()).powi(4)).collect();
        let mut tiny: Vec<f64> = logs.iter().map(|l| 1e-16 * l).collect();
        tiny[0] = 1.0;
        assert_eq!(classify(&radii, &tiny, c.rho_min).0, Verdict::PoincareGrowth);
        assert_eq!(classify(&radii, &logs, c.rho_min).0, Verdict::NotPoincareGrowth);
    }

    #[test]
    fn fixtures_meet_their_expectations() {
        let c = disk();
        for case in FormCase::ALL {
            assert_eq!(poincare_growth_test(&case, &c).unwrap().verdict, case.expected_verdict(), "{}", case.name());
        }
        for m in [MetricCase::LogPower(2.0), MetricCase::LogPower(-1.0), MetricCase::AbsZSquared, MetricCase::Identity, MetricCase::PoincareDisk] {
            assert_eq!(good_metric_check(&m, &c).unwrap().overall, m.expected_good(), "{}", m.name());
        }
        for m in [MetricCase::Identity, MetricCase::PoincareDisk] {
            assert_eq!(ke_form_residual(&m, None).residual < 1e-4, m.expected_kahler_einstein(), "{}", m.name());
        }
    }

    #[test]
    fn dz_ratio_matches_closed_form() {
        let c = disk();
        let report = poincare_growth_test(&FormCase::Dz, &c).unwrap();
        for s in &report.ratio_samples {
            let exact = s.rho.powi(2) * (s.rho * s.rho).ln().powi(2);
            assert_relative_eq!(s.ratio, exact, max_relative = 1e-12);
        }
    }

    #[test]
    fn rescaling_keeps_verdicts() {
        let c = disk();
        for case in FormCase::ALL {
            let base = poincare_growth_test(&case, &c).unwrap().verdict;
            for scale in [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0), Complex64::from_polar(0.1, 1.0)] {
                let v = poincare_growth_test(&case.rescaled(scale), &c).unwrap().verdict;
                assert_eq!(v, base, "{} scaled by {scale}", case.name());
            }
        }
    }

    #[test]
    fn non_finite_values_fail() {
        let f = FnForm {
            degree: 1,
            mask: 1,
            coefficient: |z: &[Complex64]| if z[0].norm() < 1e-5 { Complex64::new(f64::INFINITY, 0.0) } else { Complex64::new(1.0, 0.0) },
        };
        let r = poincare_growth_test(&f, &disk()).unwrap();
        assert_eq!(r.verdict, Verdict::NotPoincareGrowth);
        assert!(r.sup_ratio.is_infinite());
    }

    #[test]
    fn connection_closed_forms() {
        for a in [0.5, 2.0, 3.0] {
            for z in [Complex64::new(0.3, 0.1), Complex64::from_polar(1e-4, 2.0)] {
                let omega = chern_connection(&MetricCase::LogPower(a), &[z]).unwrap()[0][(0, 0)];
                let exact = a / (z * z.norm_sqr().ln());
                assert_relative_eq!(omega.re, exact.re, max_relative = 1e-6, epsilon = 1e-12 * exact.norm());
                assert_relative_eq!(omega.im, exact.im, max_relative = 1e-6, epsilon = 1e-12 * exact.norm());
            }
        }
        let z = Complex64::new(0.2, -0.3);
        let omega = chern_connection(&MetricCase::AbsZSquared, &[z]).unwrap()[0][(0, 0)];
        assert!((omega - 1.0 / z).norm() < 1e-6 * (1.0 / z).norm());
        assert_eq!(chern_connection(&MetricCase::Identity, &[z]).unwrap()[0][(0, 0)], ZERO);
        assert!(matches!(
            chern_connection(&MetricCase::AbsZSquared, &[ZERO]),
            Err(GrowthError::SingularMetric(_))
        ));
    }

    #[test]
    fn connection_differential_closed_form() {
        // d(a dz / (z log|z|²)) = a dz ∧ dz̄ / (|z|² (log|z|²)²)
        let a = 2.0;
        let z = Complex64::from_polar(1e-3, 0.7);
        let d = connection_differential(&MetricCase::LogPower(a), &[z]).unwrap();
        let s = z.norm_sqr();
        let exact = a / (s * s.ln().powi(2));
        let got = d[0][&0b11];
        assert!((got - exact).norm() < 1e-5 * exact, "{got} vs {exact}");
    }

    #[test]
    fn good_metric_fixtures() {
        let c = disk();
        let r = good_metric_check(&MetricCase::LogPower(2.0), &c).unwrap();
        assert!(r.overall, "{r:?}");
        assert!((r.log_growth.fitted_n - 2.0).abs() < 0.1);
        let r = good_metric_check(&MetricCase::AbsZSquared, &c).unwrap();
        assert!(!r.overall);
        assert_eq!(r.connection_good, Verdict::NotPoincareGrowth);
        let r = good_metric_check(&MetricCase::Identity, &c).unwrap();
        assert!(r.overall);
        assert_eq!(r.log_growth.fitted_n, 0.0);
    }

    #[test]
    fn dual_metric_has_the_same_goodness() {
        let c = disk();
        for m in [MetricCase::LogPower(2.0), MetricCase::LogPower(-1.0), MetricCase::AbsZSquared, MetricCase::Identity] {
            let a = good_metric_check(&m, &c).unwrap().overall;
            let b = good_metric_check(&DualMetric(m), &c).unwrap().overall;
            assert_eq!(a, b, "{}", m.name());
        }
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        // f = z² z̄ + e^z, ∂_z f = 2 z z̄ + e^z
        let z = [Complex64::new(0.3, 0.4)];
        let f = |w: &[Complex64]| Ok(DMatrix::from_element(1, 1, w[0] * w[0] * w[0].conj() + w[0].exp()));
        let exact = 2.0 * z[0] * z[0].conj() + z[0].exp();
        let err = |h: f64| (wirtinger(f, &z, 0, h).unwrap().0[(0, 0)] - exact).norm();
        let order = (err(1e-2) / err(5e-3)).log2();
        assert!((order - 2.0).abs() < 0.1, "observed order {order}");
    }

    #[test]
    fn ke_residuals() {
        let r = ke_form_residual(&MetricCase::PoincareDisk, None);
        assert!(r.residual < 1e-4, "{r:?}");
        assert_relative_eq!(r.k, 1.0, max_relative = 1e-5);
        let flat = ke_form_residual(&MetricCase::Identity, None);
        assert!(flat.residual > 0.1);
        assert_eq!(flat.k, 0.0);
    }

    #[test]
    fn ke_under_constant_rescaling() {
        // log det(c h) differs by a constant, so ∂∂̄ log det is unchanged; the
        // fundamental form scales, hence (c h, c k) has residual c × residual.
        let c = 3.0;
        let base = ke_form_residual(&MetricCase::PoincareDisk, Some(1.0));
        let scaled = ke_form_residual(&Scaled(MetricCase::PoincareDisk, c), Some(c));
        assert!(scaled.residual <= c * base.residual + 1e-6);
        assert!(scaled.residual < 1e-3);
        let fitted = ke_form_residual(&Scaled(MetricCase::PoincareDisk, c), None);
        assert_relative_eq!(fitted.k, c, max_relative = 1e-5);
    }

    #[test]
    fn boundary_decay_fixtures() {
        let deltas = default_deltas();
        let r = boundary_integral_decay(&BoundaryCase::PoincareGrowth, &deltas).unwrap();
        assert!(r.monotone_decreasing);
        for (d, v) in deltas.iter().zip(&r.values) {
            assert_relative_eq!(*v, PI / d.ln().abs(), max_relative = 1e-10);
        }
        assert_relative_eq!(r.fitted_exponent.unwrap(), -1.0, epsilon = 1e-9);

        let zero = boundary_integral_decay(&BoundaryCase::Zero, &deltas).unwrap();
        assert!(zero.values.iter().all(|v| *v == 0.0));

        let density = boundary_integral_decay(&BoundaryCase::LogDensity, &deltas).unwrap();
        assert!(density.values.iter().all(|v| (v - 2.0 * PI).abs() < 1e-12));
        assert!(density.relative_spread < 1e-8);
        assert!(boundary_integral_decay(&BoundaryCase::Zero, &[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn bounded_sections() {
        let c = disk();
        let z_f = |z: Complex64| z;
        let log_sq = |z: Complex64| z.norm_sqr().ln().powi(2);
        let r = bounded_section_check(&log_sq, &z_f, &c).unwrap();
        assert_eq!(r.verdict, Verdict::PoincareGrowth);
        assert!(r.sup.is_finite() && r.tends_to_zero);
        let zero = |_: Complex64| 0.0;
        assert_eq!(bounded_section_check(&zero, &z_f, &c).unwrap().sup, 0.0);
        let wild = |z: Complex64| z.norm().powi(-3);
        let r = bounded_section_check(&wild, &z_f, &c).unwrap();
        assert_eq!(r.verdict, Verdict::NotPoincareGrowth);
        assert!(!r.tends_to_zero);
    }

    #[test]
    fn metric_fixture_names_round_trip() {
        for m in [MetricCase::LogPower(2.0), MetricCase::AbsZSquared, MetricCase::Identity, MetricCase::PoincareDisk] {
            assert_eq!(MetricCase::parse(&m.name()).unwrap(), m);
        }
        assert!(MetricCase::parse("log-power:x").is_err());
        for f in FormCase::ALL {
            assert_eq!(FormCase::parse(f.name()).unwrap(), f);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn log_power_exponent_is_recovered(a in 0.2f64..4.0) {
            let r = good_metric_check(&MetricCase::LogPower(a), &disk()).unwrap();
            prop_assert!(r.overall);
            prop_assert!((r.log_growth.fitted_n - a).abs() < 1e-6);
        }

        #[test]
        fn poincare_metric_is_positive(re in -0.9f64..0.9, im in -0.9f64..0.9) {
            let z = Complex64::new(re, im);
            prop_assume!(z.norm() > 1e-12 && z.norm() < 0.99);
            let c = PuncturedChart::new(1, 2, 1e-6, 0.1).unwrap();
            let m = poincare_metric_at(&c, &[z, z]).unwrap();
            prop_assert!(m[(0, 0)] > 0.0 && m[(1, 1)] > 0.0);
        }
    }
}
