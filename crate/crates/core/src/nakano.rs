//! Pointwise exterior algebra at the base point.
//!
//! Forms are built on a unitary coframe `θ^1..θ^n` of `T^{1,0}` and its
//! conjugates. A monomial is a bitmask over `2n` generators: bit `a` is
//! `θ^a`, bit `n + a` is `θ̄^a`, and the wedge is taken in increasing bit
//! order. Monomials are orthonormal, and a bundle-valued form stores a fibre
//! vector (in the orthonormal frame `e_1..e_n`) per monomial.
//!
//! With `L = i Σ θ^a ∧ θ̄^a ∧ ·` and its pointwise adjoint `Λ`, the curvature
//! `F = Σ F_{a b̄} θ^a ∧ θ̄^b` satisfies, for a `T`-valued `(0,q)`-form `ω`,
//!
//! ```text
//! i h(ΛFω, ω) = (R / 2n) ‖ω‖² - h_Q(ω, ω)  ≤  (R / 2n - (q + 1) λ / 2) ‖ω‖²
//! ```
//!
//! on a Kähler–Einstein metric. [`cv_certify`] checks both on random forms.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::{self, CurvatureError, CurvatureTensor, FactorComputation};
use crate::domains::{DomainError, DomainSpec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Norm below which a sample is treated as the zero form.
pub const ZERO_FORM_NORM: f64 = 1e-6;
/// Largest `n` for which dense operators on the whole algebra are built.
pub const DENSE_MAX_N: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NakanoError {
    #[error("forms have different degrees ({0} and {1})")]
    DegreeMismatch(usize, usize),
    #[error("h_Q is only defined in positive degree")]
    DegreeZero,
    #[error("degree {q} is outside 0..={n}")]
    DegreeOutOfRange { q: usize, n: usize },
    #[error("at least one sample is required")]
    NoSamples,
    #[error("dense operators need n <= {DENSE_MAX_N}, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
}

impl From<DomainError> for NakanoError {
    fn from(e: DomainError) -> Self {
        NakanoError::Curvature(e.into())
    }
}

/// Sign of `ε(g)` on monomial `m`, or `None` if `g` already occurs.
#[inline]
fn wedge_sign(g: usize, m: u64) -> Option<f64> {
    let bit = 1u64 << g;
    if m & bit != 0 {
        return None;
    }
    let below = (m & (bit - 1)).count_ones();
    Some(if below % 2 == 0 { 1.0 } else { -1.0 })
}

/// Sign of moving the monomial `a` in front of the monomial `b` into sorted order.
fn merge_sign(a: u64, b: u64) -> f64 {
    let mut inversions = 0u32;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        inversions += (a >> (y + 1)).count_ones();
        rest &= rest - 1;
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A form with values in a trivialised bundle of rank `fiber`.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    pub n: usize,
    pub fiber: usize,
    pub terms: BTreeMap<u64, Vec<Complex64>>,
}

impl Form {
    pub fn zero(n: usize, fiber: usize) -> Self {
        Form {
            n,
            fiber,
            terms: BTreeMap::new(),
        }
    }

    /// The monomial `mask` with fibre vector `value`.
    pub fn monomial(n: usize, mask: u64, value: Vec<Complex64>) -> Self {
        let mut f = Form::zero(n, value.len());
        f.terms.insert(mask, value);
        f
    }

    pub fn scalar_one(n: usize) -> Self {
        Form::monomial(n, 0, vec![Complex64::new(1.0, 0.0)])
    }

    fn add_scaled(&mut self, mask: u64, coeff: Complex64, v: &[Complex64]) {
        let fiber = self.fiber;
        let entry = self.terms.entry(mask).or_insert_with(|| vec![ZERO; fiber]);
        for (e, x) in entry.iter_mut().zip(v) {
            *e += coeff * x;
        }
    }

    pub fn add(&self, other: &Form) -> Form {
        let mut out = self.clone();
        for (&m, v) in &other.terms {
            out.add_scaled(m, Complex64::new(1.0, 0.0), v);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Form {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| v.iter_mut().for_each(|x| *x *= c));
        out
    }

    /// `θ^g ∧ self` (or `θ̄^{g-n}` for `g >= n`).
    pub fn wedge(&self, g: usize) -> Form {
        let mut out = Form::zero(self.n, self.fiber);
        for (&m, v) in &self.terms {
            if let Some(s) = wedge_sign(g, m) {
                out.add_scaled(m | (1 << g), Complex64::from(s), v);
            }
        }
        out
    }

    /// Interior product with the dual of generator `g`; adjoint of [`Form::wedge`].
    pub fn contract(&self, g: usize) -> Form {
        let mut out = Form::zero(self.n, self.fiber);
        let bit = 1u64 << g;
        for (&m, v) in &self.terms {
            if m & bit != 0 {
                let s = wedge_sign(g, m & !bit).expect("bit cleared");
                out.add_scaled(m & !bit, Complex64::from(s), v);
            }
        }
        out
    }

    /// Apply an endomorphism of the fibre to every coefficient vector.
    pub fn apply_fiber(&self, a: &DMatrix<Complex64>) -> Form {
        let mut out = Form::zero(self.n, a.nrows());
        for (&m, v) in &self.terms {
            let w: Vec<Complex64> = (0..a.nrows())
                .map(|r| (0..a.ncols()).map(|c| a[(r, c)] * v[c]).sum())
                .collect();
            out.terms.insert(m, w);
        }
        out
    }

    /// Pointwise inner product `Σ h_X(α, β) h(s, t)` on the orthonormal basis.
    pub fn inner(&self, other: &Form) -> Complex64 {
        self.terms
            .iter()
            .filter_map(|(m, v)| other.terms.get(m).map(|w| (v, w)))
            .map(|(v, w)| v.iter().zip(w).map(|(a, b)| a * b.conj()).sum::<Complex64>())
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.inner(self).re
    }

    /// `(p, q)` if every term has that bidegree.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let low = (1u64 << self.n) - 1;
        let mut it = self
            .terms
            .iter()
            .filter(|(_, v)| v.iter().any(|x| *x != ZERO))
            .map(|(m, _)| ((m & low).count_ones() as usize, (m >> self.n).count_ones() as usize));
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn max_abs_diff(&self, other: &Form) -> f64 {
        let d = self.add(&other.scale(Complex64::new(-1.0, 0.0)));
        d.terms
            .values()
            .flat_map(|v| v.iter().map(|x| x.norm()))
            .fold(0.0, f64::max)
    }
}

/// `L α = i Σ_a θ^a ∧ θ̄^a ∧ α`.
pub fn lefschetz(alpha: &Form) -> Form {
    let n = alpha.n;
    let mut out = Form::zero(n, alpha.fiber);
    for a in 0..n {
        out = out.add(&alpha.wedge(n + a).wedge(a));
    }
    out.scale(I)
}

/// `Λ β = -i Σ_a ι(θ̄^a) ι(θ^a) β`, the pointwise adjoint of [`lefschetz`].
pub fn dual_lefschetz(beta: &Form) -> Form {
    let n = beta.n;
    let mut out = Form::zero(n, beta.fiber);
    for a in 0..n {
        out = out.add(&beta.contract(a).contract(n + a));
    }
    out.scale(-I)
}

/// Complex conjugate of a monomial: `(sign, mask)` with `θ^a ↔ θ̄^a`.
fn conjugate_monomial(n: usize, m: u64) -> (f64, u64) {
    let low = (1u64 << n) - 1;
    let swapped = ((m & low) << n) | (m >> n);
    // Conjugation keeps the factor order, so the sign is the parity of the
    // sort of the image sequence: generators a < n map to a + n and vice versa.
    let gens: Vec<usize> = (0..2 * n).filter(|g| m >> g & 1 == 1).collect();
    let images: Vec<usize> = gens.iter().map(|&g| if g < n { g + n } else { g - n }).collect();
    let mut inversions = 0;
    for i in 0..images.len() {
        for j in i + 1..images.len() {
            if images[i] > images[j] {
                inversions += 1;
            }
        }
    }
    (if inversions % 2 == 0 { 1.0 } else { -1.0 }, swapped)
}

/// Complex conjugate of a scalar form.
pub fn conjugate(alpha: &Form) -> Form {
    let mut out = Form::zero(alpha.n, alpha.fiber);
    for (&m, v) in &alpha.terms {
        let (s, c) = conjugate_monomial(alpha.n, m);
        let w: Vec<Complex64> = v.iter().map(|x| x.conj() * s).collect();
        out.add_scaled(c, Complex64::new(1.0, 0.0), &w);
    }
    out
}

/// Volume form `Ω^n / n!` for `Ω = i Σ θ^a ∧ θ̄^a`.
pub fn volume_form(n: usize) -> Form {
    let mut vol = Form::scalar_one(n);
    for a in 0..n {
        vol = vol.wedge(n + a).wedge(a);
    }
    // The loop wedges on the left, giving θ^{n-1} θ̄^{n-1} ... θ^0 θ̄^0;
    // pairs commute, so this equals the product in increasing a.
    vol.scale(I.powu(n as u32))
}

/// Complex-linear Hodge star, `α ∧ conj(*β) = ⟨α, β⟩ vol`.
pub fn hodge_star(beta: &Form) -> Form {
    let n = beta.n;
    let full = (1u64 << (2 * n)) - 1;
    let vol = volume_form(n);
    let vol_coeff = vol.terms[&full][0];
    let mut out = Form::zero(n, beta.fiber);
    for (&m, v) in &beta.terms {
        let comp = full ^ m;
        // conj(*m) = mu * comp with m ∧ mu comp = vol
        let mu = vol_coeff * merge_sign(m, comp);
        let (cs, cm) = conjugate_monomial(n, comp);
        out.add_scaled(cm, mu.conj() * cs, v);
    }
    out
}

/// Dense matrices of `L`, `Λ` and `*` on the full scalar algebra
/// (`4^n` monomials ordered by mask).
#[derive(Debug, Clone)]
pub struct LefschetzPair {
    pub n: usize,
    pub l: DMatrix<Complex64>,
    pub lambda: DMatrix<Complex64>,
    pub star: DMatrix<Complex64>,
}

fn dense_operator(n: usize, op: impl Fn(&Form) -> Form) -> DMatrix<Complex64> {
    let dim = 1usize << (2 * n);
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let image = op(&Form::monomial(n, col as u64, vec![Complex64::new(1.0, 0.0)]));
        for (&row, v) in &image.terms {
            m[(row as usize, col)] = v[0];
        }
    }
    m
}

pub fn lefschetz_pair(n: usize) -> Result<LefschetzPair, NakanoError> {
    if n > DENSE_MAX_N {
        return Err(NakanoError::TooLarge(n));
    }
    Ok(LefschetzPair {
        n,
        l: dense_operator(n, lefschetz),
        lambda: dense_operator(n, dual_lefschetz),
        star: dense_operator(n, hodge_star),
    })
}

impl LefschetzPair {
    /// `max |⟨L e_i, e_j⟩ - ⟨e_i, Λ e_j⟩|` over monomials.
    pub fn adjointness_residual(&self) -> f64 {
        (&self.l - self.lambda.adjoint()).camax()
    }

    /// `max |Λ - *⁻¹ L *|`.
    pub fn star_conjugation_residual(&self) -> f64 {
        let inv = self.star.clone().try_inverse().expect("Hodge star is invertible");
        (&self.lambda - inv * &self.l * &self.star).camax()
    }
}

/// Sorted `q`-subsets of `0..n` as bitmasks in lexicographic order.
pub fn multi_indices(n: usize, q: usize) -> Vec<u64> {
    fn rec(start: usize, n: usize, left: usize, acc: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            if n - i < left {
                break;
            }
            rec(i + 1, n, left - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, q, 0, &mut out);
    out
}

/// A `T`-valued `(0,q)`-form, stored on sorted multi-indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FormVector {
    pub n: usize,
    pub q: usize,
    /// `coefficients[J][k]`, `J` running over [`multi_indices`]`(n, q)`.
    pub coefficients: Vec<Vec<Complex64>>,
}

impl FormVector {
    pub fn zero(n: usize, q: usize) -> Self {
        let count = multi_indices(n, q).len();
        FormVector {
            n,
            q,
            coefficients: vec![vec![ZERO; n]; count],
        }
    }

    /// Complex-Gaussian coefficients.
    pub fn random<R: rand::Rng>(n: usize, q: usize, rng: &mut R) -> Self {
        let mut w = FormVector::zero(n, q);
        for v in &mut w.coefficients {
            for x in v.iter_mut() {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *x = Complex64::new(re, im);
            }
        }
        w
    }

    /// Shift antiholomorphic indices into the `θ̄` half of the generator masks.
    pub fn to_form(&self) -> Form {
        let mut f = Form::zero(self.n, self.n);
        for (j, v) in multi_indices(self.n, self.q).into_iter().zip(&self.coefficients) {
            f.terms.insert(j << self.n, v.clone());
        }
        f
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients
            .iter()
            .flat_map(|v| v.iter().map(|x| x.norm_sqr()))
            .sum()
    }

    /// Fully antisymmetric component `ω^k_{c J'}` for an ordered index `c`
    /// followed by a sorted `(q-1)`-set `rest`.
    fn component(&self, index: &BTreeMap<u64, usize>, c: usize, rest: u64) -> Option<(f64, &Vec<Complex64>)> {
        let s = wedge_sign(c, rest)?;
        let pos = index[&(rest | (1 << c))];
        Some((s, &self.coefficients[pos]))
    }
}

pub fn form_inner_product(w1: &FormVector, w2: &FormVector) -> Result<Complex64, NakanoError> {
    if w1.q != w2.q || w1.n != w2.n {
        return Err(NakanoError::DegreeMismatch(w1.q, w2.q));
    }
    Ok(w1
        .coefficients
        .iter()
        .zip(&w2.coefficients)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()))
        .sum())
}

/// `F_{a b̄}` as fibre endomorphisms, `F_{a b̄} e_c = Σ_d R_{a b̄ c d̄} e_d`.
pub fn curvature_endomorphisms(tensor: &CurvatureTensor) -> Vec<DMatrix<Complex64>> {
    let n = tensor.n();
    let mut out = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            out.push(DMatrix::from_fn(n, n, |d, c| tensor.get(a, b, c, d)));
        }
    }
    out
}

/// `F ∧ ω` for a `T`-valued form.
pub fn curvature_wedge(f: &[DMatrix<Complex64>], omega: &Form) -> Form {
    let n = omega.n;
    let mut out = Form::zero(n, omega.fiber);
    for a in 0..n {
        for b in 0..n {
            let term = omega.apply_fiber(&f[a * n + b]).wedge(n + b).wedge(a);
            out = out.add(&term);
        }
    }
    out
}

/// `Re(i h(ΛFω, ω))`, computed in the exterior algebra.
pub fn nakano_term(f: &[DMatrix<Complex64>], w: &FormVector) -> f64 {
    let omega = w.to_form();
    let lf = dual_lefschetz(&curvature_wedge(f, &omega));
    (I * lf.inner(&omega)).re
}

/// `h_Q(ω, ω)`: the curvature lift on `T ⊗ T` paired with `ξ^{k c} = ω^k_{c J'}`,
/// summed over sorted `(q-1)`-sets `J'`.
pub fn h_q_form(tensor: &CurvatureTensor, w: &FormVector) -> Result<f64, NakanoError> {
    if w.q == 0 {
        return Err(NakanoError::DegreeZero);
    }
    let n = w.n;
    let lift = tensor.lift();
    let index: BTreeMap<u64, usize> = multi_indices(n, w.q)
        .into_iter()
        .enumerate()
        .map(|(i, m)| (m, i))
        .collect();
    let mut total = ZERO;
    for rest in multi_indices(n, w.q - 1) {
        // xi[i * n + k] = ω^k_{i J'}
        let mut xi = nalgebra::DVector::<Complex64>::zeros(n * n);
        for i in 0..n {
            if let Some((s, v)) = w.component(&index, i, rest) {
                for k in 0..n {
                    xi[i * n + k] = v[k] * s;
                }
            }
        }
        let image = &lift * &xi;
        total += image.dotc(&xi).conj();
    }
    Ok(total.re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignVerdict {
    /// The bound coefficient is negative and `ω ≠ 0`.
    NegativeDefinite,
    /// The bound gives no sign information in this degree.
    NoConclusion,
    /// `‖ω‖` below [`ZERO_FORM_NORM`].
    ZeroForm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub sample: usize,
    pub norm_sqr: f64,
    pub lhs: f64,
    pub h_q: f64,
    pub rhs_identity: f64,
    pub rhs_bound: f64,
    pub identity_residual: f64,
    pub bound_slack: f64,
    pub sign_verdict: SignVerdict,
}

/// Per-degree constants shared by every sample.
#[derive(Debug, Clone)]
pub struct CvContext {
    pub n: usize,
    pub q: usize,
    pub scalar_curvature: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub tensor: CurvatureTensor,
    endomorphisms: Vec<DMatrix<Complex64>>,
}

impl CvContext {
    pub fn new(comp: &FactorComputation, q: usize) -> Result<Self, NakanoError> {
        let n = comp.pair.n();
        if q > n {
            return Err(NakanoError::DegreeOutOfRange { q, n });
        }
        Ok(CvContext {
            n,
            q,
            scalar_curvature: comp.scalar_curvature,
            lambda: comp.lambda,
            gamma: comp.gamma(),
            tensor: comp.tensor.clone(),
            endomorphisms: curvature_endomorphisms(&comp.tensor),
        })
    }

    /// `R/(2n) - (q+1) λ / 2`.
    pub fn bound_coefficient(&self) -> f64 {
        self.scalar_curvature / (2.0 * self.n as f64) - 0.5 * (self.q as f64 + 1.0) * self.lambda
    }

    pub fn report(&self, sample: usize, w: &FormVector) -> CvReport {
        let norm_sqr = w.norm_sqr();
        let lhs = nakano_term(&self.endomorphisms, w);
        let h_q = if self.q == 0 { 0.0 } else { h_q_form(&self.tensor, w).expect("q > 0") };
        let rhs_identity = self.scalar_curvature / (2.0 * self.n as f64) * norm_sqr - h_q;
        let rhs_bound = self.bound_coefficient() * norm_sqr;
        let sign_verdict = if norm_sqr.sqrt() < ZERO_FORM_NORM {
            SignVerdict::ZeroForm
        } else if rhs_bound < 0.0 {
            SignVerdict::NegativeDefinite
        } else {
            SignVerdict::NoConclusion
        };
        CvReport {
            sample,
            norm_sqr,
            lhs,
            h_q,
            rhs_identity,
            rhs_bound,
            identity_residual: (lhs - rhs_identity).abs(),
            bound_slack: rhs_bound - lhs,
            sign_verdict,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvSummary {
    pub domain: String,
    pub q: usize,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub gamma: f64,
    pub bound_coefficient: f64,
    /// `max identity_residual / max(1, ‖ω‖²)`.
    pub max_identity_residual: f64,
    /// `min bound_slack / max(1, ‖ω‖²)`.
    pub min_bound_slack: f64,
    pub all_signs_ok: bool,
    pub passed: bool,
    pub reports: Vec<CvReport>,
}

/// Random stream for one sample, independent of scheduling.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Certify the identity, the bound and the sign logic on random forms.
pub fn cv_certify(
    spec: &DomainSpec,
    q: usize,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<CvSummary, NakanoError> {
    if samples == 0 {
        return Err(NakanoError::NoSamples);
    }
    let pair = crate::domains::build_domain(spec)?;
    let comp = curvature::compute_pair(pair, 1.0)?;
    let ctx = CvContext::new(&comp, q)?;
    Ok(certify_with(&ctx, &spec.to_string(), samples, seed, tolerance))
}

pub fn certify_with(ctx: &CvContext, domain: &str, samples: usize, seed: u64, tolerance: f64) -> CvSummary {
    let reports: Vec<CvReport> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let w = FormVector::random(ctx.n, ctx.q, &mut rng);
            ctx.report(i, &w)
        })
        .collect();
    let expect_negative = (ctx.q as f64) < ctx.gamma - 1.0 - curvature::GAMMA_INTEGER_TOL;
    let mut max_identity_residual: f64 = 0.0;
    let mut min_bound_slack = f64::INFINITY;
    let mut all_signs_ok = true;
    for r in &reports {
        let scale = r.norm_sqr.max(1.0);
        max_identity_residual = max_identity_residual.max(r.identity_residual / scale);
        min_bound_slack = min_bound_slack.min(r.bound_slack / scale);
        if expect_negative && r.sign_verdict != SignVerdict::ZeroForm {
            all_signs_ok &= r.sign_verdict == SignVerdict::NegativeDefinite && r.lhs < 0.0;
        }
    }
    let passed = max_identity_residual < tolerance && min_bound_slack >= -tolerance && all_signs_ok;
    CvSummary {
        domain: domain.to_string(),
        q: ctx.q,
        samples,
        seed,
        tolerance,
        gamma: ctx.gamma,
        bound_coefficient: ctx.bound_coefficient(),
        max_identity_residual,
        min_bound_slack,
        all_signs_ok,
        passed,
        reports,
    }
}
