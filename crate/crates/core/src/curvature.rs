//! Base-point curvature of a Hermitian symmetric pair and the operator `Q` on
//! symmetric tensors.
//!
//! On `p` the Riemannian curvature is `R(X, Y)Z = -[[X, Y], Z]`. Extending
//! complex-bilinearly and evaluating on an `h`-orthonormal frame `e_a` of
//! `p^{1,0}` gives
//!
//! ```text
//! R_{a b̄ c d̄} = g(R(e_a, ē_b) e_c, ē_d)
//! ```
//!
//! which has negative holomorphic sectional curvature. Raising the second and
//! fourth indices turns it into an endomorphism of `T ⊗ T`,
//! `e_i ⊗ e_k ↦ Σ R_{i j̄ k l̄} e_j ⊗ e_l`; it kills skew tensors, and its
//! restriction to `S²T` is `Q`. The scalar curvature is
//! `R = 2 Σ R_{a ā c c̄} = 2 tr Q`.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domains::{self, DomainError, DomainSpec, Factor, HermitianMetric, HermitianPair};
use crate::linalg;

/// Tolerance for accepting a computed rigidity constant as an integer.
pub const GAMMA_INTEGER_TOL: f64 = 1e-6;
/// Skew-annihilation residual above which the index recipe is considered broken.
pub const SKEW_FAILURE_TOL: f64 = 1e-8;
/// Largest complex dimension the table generator will construct.
pub const TABLE_MAX_DIMENSION: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("curvature lift does not vanish on skew tensors (residual {0:e})")]
    SymmetryViolation(f64),
}

/// `R_{a b̄ c d̄}` on an orthonormal frame of `p^{1,0}`.
#[derive(Debug, Clone)]
pub struct CurvatureTensor {
    n: usize,
    components: Vec<Complex64>,
    /// Frame metric `h(e_a, e_b)`; the identity up to rounding.
    pub frame_metric: DMatrix<Complex64>,
}

impl CurvatureTensor {
    pub fn from_components(n: usize, components: Vec<Complex64>) -> Self {
        assert_eq!(components.len(), n.pow(4));
        CurvatureTensor {
            n,
            components,
            frame_metric: DMatrix::identity(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> Complex64 {
        let n = self.n;
        self.components[((a * n + b) * n + c) * n + d]
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    fn max_over<F: Fn(usize, usize, usize, usize) -> f64>(&self, f: F) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        worst = worst.max(f(a, b, c, d));
                    }
                }
            }
        }
        worst
    }

    /// `max |R_{a b̄ c d̄} - conj(R_{b ā d c̄})|`.
    pub fn hermitian_residual(&self) -> f64 {
        self.max_over(|a, b, c, d| (self.get(a, b, c, d) - self.get(b, a, d, c).conj()).norm())
    }

    /// `max |R_{a b̄ c d̄} - R_{c b̄ a d̄}|`.
    pub fn kahler_residual(&self) -> f64 {
        self.max_over(|a, b, c, d| (self.get(a, b, c, d) - self.get(c, b, a, d)).norm())
    }

    /// Double contraction `2 h^{a b̄} h^{c d̄} R_{a b̄ c d̄}`.
    pub fn scalar_curvature(&self) -> f64 {
        let inv = self
            .frame_metric
            .clone()
            .try_inverse()
            .expect("frame metric is invertible");
        let n = self.n;
        let mut total = Complex64::new(0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        // h^{b̄ a} pairs the barred slot b with the unbarred slot a.
                        total += inv[(b, a)] * inv[(d, c)] * self.get(a, b, c, d);
                    }
                }
            }
        }
        2.0 * total.re
    }

    /// Ricci form `Ric_{c d̄} = Σ_a R_{a ā c d̄}`.
    pub fn ricci(&self) -> DMatrix<Complex64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |c, d| (0..n).map(|a| self.get(a, a, c, d)).sum())
    }

    /// Endomorphism of `T ⊗ T`: column `i*n+k` is the image of `e_i ⊗ e_k`.
    pub fn lift(&self) -> DMatrix<Complex64> {
        let n = self.n;
        DMatrix::from_fn(n * n, n * n, |row, col| {
            let (j, l) = (row / n, row % n);
            let (i, k) = (col / n, col % n);
            self.get(i, j, k, l)
        })
    }

    /// `max ‖lift(e_i ⊗ e_j - e_j ⊗ e_i)‖`.
    pub fn skew_residual(&self) -> f64 {
        let n = self.n;
        let lift = self.lift();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let diff = lift.column(i * n + j) - lift.column(j * n + i);
                worst = worst.max(diff.norm());
            }
        }
        worst
    }
}

/// Curvature at the base point using the base invariant metric.
pub fn curvature_tensor(pair: &HermitianPair) -> Result<CurvatureTensor, CurvatureError> {
    let metric = domains::invariant_metric(pair, 1.0)?;
    curvature_tensor_with_metric(pair, &metric)
}

pub fn curvature_tensor_with_metric(
    pair: &HermitianPair,
    metric: &HermitianMetric,
) -> Result<CurvatureTensor, CurvatureError> {
    let frame = metric.orthonormal_frame()?;
    let n = pair.n();
    let dp = pair.p_basis.len();
    let c = &pair.constants;
    let dk = c.dim_k;

    // S_kappa[c][d] = (ad(K_kappa) e_c)^T G conj(e_d)
    let g_conj_frame = metric.real.map(Complex64::from) * frame.map(|z| z.conj());
    let s: Vec<DMatrix<Complex64>> = c
        .kp
        .par_iter()
        .map(|a| (a.map(Complex64::from) * &frame).transpose() * &g_conj_frame)
        .collect();

    // w[a][b][kappa] = coefficients of [e_a, ē_b] in k.
    let w: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut v = vec![Complex64::new(0.0, 0.0); dp * dk];
            for i in 0..dp {
                let u = frame[(i, a)];
                if u == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dp {
                    let row = c.pp_slice(i, j);
                    let dst = &mut v[j * dk..(j + 1) * dk];
                    for (d, &x) in dst.iter_mut().zip(row) {
                        *d += u * x;
                    }
                }
            }
            let frame = &frame;
            (0..n).map(move |b| {
                let mut out = vec![Complex64::new(0.0, 0.0); dk];
                for j in 0..dp {
                    let ub = frame[(j, b)].conj();
                    if ub == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for (o, x) in out.iter_mut().zip(&v[j * dk..(j + 1) * dk]) {
                        *o += ub * x;
                    }
                }
                out
            })
        })
        .collect();

    let components: Vec<Complex64> = w
        .par_iter()
        .flat_map_iter(|wab| {
            let s = &s;
            (0..n * n).map(move |cd| {
                let (cc, d) = (cd / n, cd % n);
                -wab.iter()
                    .zip(s)
                    .map(|(wk, sk)| wk * sk[(cc, d)])
                    .sum::<Complex64>()
            })
        })
        .collect();

    let frame_metric = DMatrix::from_fn(n, n, |a, b| {
        let ea: DVector<Complex64> = frame.column(a).into();
        let eb: DVector<Complex64> = frame.column(b).into();
        metric.h(&ea, &eb)
    });
    Ok(CurvatureTensor {
        n,
        components,
        frame_metric,
    })
}

/// Riemannian scalar curvature `Σ g(R(E_α, E_β)E_β, E_α)` over a real
/// orthonormal basis of `p`; does not use the complex frame at all.
pub fn riemannian_scalar_curvature(pair: &HermitianPair, metric: &HermitianMetric) -> f64 {
    let c = &pair.constants;
    let dp = c.dim_p;
    let chol = Cholesky::new(metric.real.clone()).expect("metric is positive definite");
    // Columns of E = L^{-T} are g-orthonormal.
    let e = chol
        .l()
        .transpose()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let ge = &metric.real * &e;
    (0..c.dim_k)
        .into_par_iter()
        .map(|kappa| {
            // [E_α, E_β]_κ
            let mut bracket = DMatrix::<f64>::zeros(dp, dp);
            for i in 0..dp {
                for j in 0..dp {
                    let coeff = c.pp_coeff(i, j, kappa);
                    if coeff != 0.0 {
                        bracket[(i, j)] = coeff;
                    }
                }
            }
            let bracket_e = e.transpose() * bracket * &e;
            // g(ad(K_κ) E_β, E_α)
            let action = ge.transpose() * &c.kp[kappa] * &e;
            -bracket_e.component_mul(&action).sum()
        })
        .sum()
}

/// `Q` on an orthonormal basis of `S²(p^{1,0})`.
#[derive(Debug, Clone)]
pub struct QOperator {
    pub matrix: DMatrix<Complex64>,
    /// Index pairs `(a, b)`, `a <= b`, labelling the basis
    /// `(e_a ⊗ e_b + e_b ⊗ e_a)/√2` (or `e_a ⊗ e_a`).
    pub pairs: Vec<(usize, usize)>,
}

impl QOperator {
    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `‖Q - Q^†‖`.
    pub fn hermitian_residual(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).norm()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::herm_eigenvalues(&self.matrix)
    }

    /// Algebraically smallest eigenvalue.
    pub fn lambda(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

fn sym_components(n: usize, (a, b): (usize, usize)) -> Vec<(usize, usize, f64)> {
    let _ = n;
    if a == b {
        vec![(a, a, 1.0)]
    } else {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        vec![(a, b, w), (b, a, w)]
    }
}

pub fn q_operator(tensor: &CurvatureTensor) -> Result<QOperator, CurvatureError> {
    let skew = tensor.skew_residual();
    if !(skew <= SKEW_FAILURE_TOL) {
        return Err(CurvatureError::SymmetryViolation(skew));
    }
    let n = tensor.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let comps: Vec<_> = pairs.iter().map(|&p| sym_components(n, p)).collect();
    let dim = pairs.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (s, out) in comps.iter().enumerate() {
        for (t, inp) in comps.iter().enumerate() {
            let mut v = Complex64::new(0.0, 0.0);
            for &(j, l, ws) in out {
                for &(i, k, wt) in inp {
                    v += tensor.get(i, j, k, l) * (ws * wt);
                }
            }
            matrix[(s, t)] = v;
        }
    }
    Ok(QOperator { matrix, pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Computed,
    Reference,
}

/// Invariants of one irreducible factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorInvariants {
    pub factor: String,
    pub n: usize,
    pub scalar_curvature: Option<f64>,
    pub two_trace_q: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub gamma_reference: u32,
    pub source: Source,
}

/// Rigidity data of a (possibly reducible) domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainInvariants {
    pub domain: String,
    pub n: usize,
    /// Only reported for a single computed factor.
    pub scalar_curvature: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: f64,
    pub gamma_rounded: Option<u32>,
    /// Largest `q` with `q < gamma - 1`.
    pub vanishing_q_max: i64,
    /// The unit ball `I(p,1)`, where every group vanishes.
    pub all_groups_vanish: bool,
    pub factors: Vec<FactorInvariants>,
}

/// `round(gamma)` when `gamma` is within [`GAMMA_INTEGER_TOL`] of an integer.
pub fn round_gamma(gamma: f64) -> Option<u32> {
    let r = gamma.round();
    ((gamma - r).abs() < GAMMA_INTEGER_TOL && r >= 0.0).then_some(r as u32)
}

/// Largest integer strictly below `gamma - 1`.
pub fn vanishing_q_max(gamma: f64) -> i64 {
    match round_gamma(gamma) {
        Some(g) => g as i64 - 2,
        None => (gamma - 1.0).ceil() as i64 - 1,
    }
}

/// Everything computed for one classical factor at a given metric scale.
#[derive(Debug, Clone)]
pub struct FactorComputation {
    pub pair: HermitianPair,
    pub tensor: CurvatureTensor,
    pub q: QOperator,
    pub scalar_curvature: f64,
    pub riemannian_scalar: f64,
    pub lambda: f64,
}

impl FactorComputation {
    pub fn gamma(&self) -> f64 {
        self.scalar_curvature / (self.pair.n() as f64 * self.lambda)
    }
}

pub fn compute_factor(factor: Factor, scale: f64) -> Result<FactorComputation, CurvatureError> {
    let pair = domains::build_factor(factor)?;
    compute_pair(pair, scale)
}

pub fn compute_pair(pair: HermitianPair, scale: f64) -> Result<FactorComputation, CurvatureError> {
    let metric = domains::invariant_metric(&pair, scale)?;
    let tensor = curvature_tensor_with_metric(&pair, &metric)?;
    let q = q_operator(&tensor)?;
    let lambda = q.lambda();
    let scalar_curvature = tensor.scalar_curvature();
    let riemannian_scalar = riemannian_scalar_curvature(&pair, &metric);
    Ok(FactorComputation {
        pair,
        tensor,
        q,
        scalar_curvature,
        riemannian_scalar,
        lambda,
    })
}

fn factor_invariants(factor: Factor) -> Result<FactorInvariants, CurvatureError> {
    if !factor.is_classical() {
        return Ok(FactorInvariants {
            factor: factor.to_string(),
            n: factor.dimension(),
            scalar_curvature: None,
            two_trace_q: None,
            lambda: None,
            gamma: factor.reference_gamma() as f64,
            gamma_reference: factor.reference_gamma(),
            source: Source::Reference,
        });
    }
    let comp = compute_factor(factor, 1.0)?;
    Ok(FactorInvariants {
        factor: factor.to_string(),
        n: comp.pair.n(),
        scalar_curvature: Some(comp.scalar_curvature),
        two_trace_q: Some(2.0 * comp.q.trace()),
        lambda: Some(comp.lambda),
        gamma: comp.gamma(),
        gamma_reference: factor.reference_gamma(),
        source: Source::Computed,
    })
}

/// Rigidity invariants, applying the min rule over irreducible factors.
pub fn domain_invariants(spec: &DomainSpec) -> Result<DomainInvariants, CurvatureError> {
    for f in &spec.factors {
        f.validate()?;
    }
    let factors = spec
        .factors
        .par_iter()
        .map(|&f| factor_invariants(f))
        .collect::<Result<Vec<_>, _>>()?;
    let gamma = factors.iter().map(|f| f.gamma).fold(f64::INFINITY, f64::min);
    let single = (factors.len() == 1).then(|| &factors[0]);
    let all_groups_vanish = matches!(spec.factors.as_slice(), [Factor::I { p, q }] if (*p).min(*q) == 1);
    Ok(DomainInvariants {
        domain: spec.to_string(),
        n: factors.iter().map(|f| f.n).sum(),
        scalar_curvature: single.and_then(|f| f.scalar_curvature),
        lambda: single.and_then(|f| f.lambda),
        gamma,
        gamma_rounded: round_gamma(gamma),
        vanishing_q_max: vanishing_q_max(gamma),
        all_groups_vanish,
        factors,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(rename = "type")]
    pub type_tag: String,
    pub params: Vec<usize>,
    pub n: usize,
    /// Computed value; for reference rows this is the stored constant.
    pub gamma: f64,
    pub gamma_reference: u32,
    pub source: Source,
    #[serde(rename = "match")]
    pub matches: bool,
}

/// Factors enumerated by the table generator, in output order.
pub fn table_factors(max_param: usize) -> Vec<Factor> {
    let mut out = Vec::new();
    for p in 1..=max_param {
        for q in p..=max_param {
            out.push(Factor::I { p, q });
        }
    }
    out.extend((2..=max_param).map(|m| Factor::II { m }));
    out.extend((1..=max_param).map(|m| Factor::III { m }));
    out.extend((3..=max_param).map(|m| Factor::IV { m }));
    out.retain(|f| f.dimension() <= TABLE_MAX_DIMENSION);
    out.push(Factor::V);
    out.push(Factor::VI);
    out
}

/// The classification table with computed rigidity constants.
///
/// Classical rows use parameters up to `max_param` (`I(p,q)` with `p <= q`),
/// skipping any with complex dimension above [`TABLE_MAX_DIMENSION`].
pub fn gamma_table(max_param: usize) -> Result<Vec<TableRow>, CurvatureError> {
    table_factors(max_param)
        .into_par_iter()
        .map(|f| {
            let inv = factor_invariants(f)?;
            Ok(TableRow {
                type_tag: f.type_tag().to_string(),
                params: f.params(),
                n: inv.n,
                gamma: inv.gamma,
                gamma_reference: inv.gamma_reference,
                source: inv.source,
                matches: (inv.gamma - inv.gamma_reference as f64).abs() < GAMMA_INTEGER_TOL
                    && inv.n == f.dimension(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn comp(s: &str) -> FactorComputation {
        let spec: DomainSpec = s.parse().unwrap();
        compute_factor(spec.factors[0], 1.0).unwrap()
    }

    #[test]
    fn disk_has_one_negative_component() {
        let c = comp("I(1,1)");
        assert_eq!(c.tensor.components().len(), 1);
        let r = c.tensor.get(0, 0, 0, 0);
        assert!(r.re < 0.0 && r.im.abs() < 1e-15);
        assert_eq!(c.q.dim(), 1);
        assert_relative_eq!(c.gamma(), 2.0, epsilon = 1e-12);
    }

    /// Brute-force oracle: evaluate `-[[X, Y], Z]` with dense matrix brackets
    /// in `gl(N, C)`, never touching the structure-constant tables.
    fn brute_force_tensor(pair: &HermitianPair) -> Vec<Complex64> {
        let metric = domains::invariant_metric(pair, 1.0).unwrap();
        let frame = metric.orthonormal_frame().unwrap();
        let n = pair.n();
        let dense: Vec<DMatrix<Complex64>> = pair.p_basis.iter().map(|p| p.to_dense()).collect();
        let real_of = |coords: &[Complex64]| -> (DMatrix<Complex64>, DMatrix<Complex64>) {
            // split a complex p-vector into the two real p-elements (re, im)
            let mut re = DMatrix::zeros(pair.matrix_dim, pair.matrix_dim);
            let mut im = re.clone();
            for (b, c) in dense.iter().zip(coords) {
                re += b * Complex64::from(c.re);
                im += b * Complex64::from(c.im);
            }
            (re, im)
        };
        let br = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
        // Complex-bilinear extension of a real-trilinear map T via re/im parts.
        let curv = |x: &[Complex64], y: &[Complex64], z: &[Complex64]| -> Vec<Complex64> {
            let (xr, xi) = real_of(x);
            let (yr, yi) = real_of(y);
            let (zr, zi) = real_of(z);
            let mut out = vec![Complex64::new(0.0, 0.0); dense.len()];
            let parts = [(&xr, 1.0, 0u8), (&xi, 1.0, 1u8)];
            for (xm, _, xflag) in parts {
                for (ym, yflag) in [(&yr, 0u8), (&yi, 1u8)] {
                    for (zm, zflag) in [(&zr, 0u8), (&zi, 1u8)] {
                        let powers = xflag + yflag + zflag;
                        let factor = Complex64::new(0.0, 1.0).powu(powers as u32);
                        let v = -br(&br(xm, ym), zm);
                        for (o, b) in out.iter_mut().zip(&dense) {
                            let coeff: f64 = b.iter().zip(v.iter()).map(|(p, q)| (p.conj() * q).re).sum();
                            *o += factor * coeff;
                        }
                    }
                }
            }
            out
        };
        let col = |a: usize| -> Vec<Complex64> { frame.column(a).iter().copied().collect() };
        let g = &metric.real;
        let mut comps = Vec::with_capacity(n.pow(4));
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let eb: Vec<Complex64> = col(b).iter().map(|z| z.conj()).collect();
                        let r = curv(&col(a), &eb, &col(c));
                        let ed: Vec<Complex64> = col(d).iter().map(|z| z.conj()).collect();
                        let mut v = Complex64::new(0.0, 0.0);
                        for i in 0..r.len() {
                            for j in 0..r.len() {
                                v += r[i] * g[(i, j)] * ed[j];
                            }
                        }
                        comps.push(v);
                    }
                }
            }
        }
        comps
    }

    #[test]
    fn tensor_matches_brute_force_double_bracket() {
        for s in ["III(2)", "IV(3)", "I(1,2)"] {
            let c = comp(s);
            let oracle = brute_force_tensor(&c.pair);
            let worst = c
                .tensor
                .components()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "{s}: {worst}");
        }
    }

    #[test]
    fn tensor_symmetries() {
        let c = comp("III(2)");
        assert_eq!(c.tensor.components().len(), 81);
        assert!(c.tensor.kahler_residual() < 1e-10);
        let c = comp("IV(3)");
        assert!(c.tensor.hermitian_residual() < 1e-12);
        assert!(c.tensor.kahler_residual() < 1e-10);
    }

    #[test]
    fn q_is_self_adjoint_and_kills_skew_tensors() {
        let c = comp("III(2)");
        assert_eq!(c.q.dim(), 6);
        assert!(c.q.hermitian_residual() < 1e-10);
        assert!(c.tensor.skew_residual() < 1e-10);
        assert_relative_eq!(c.gamma(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn scalar_curvature_routes_agree() {
        for s in ["I(2,2)", "II(4)", "III(3)", "IV(5)"] {
            let c = comp(s);
            assert_relative_eq!(c.scalar_curvature, 2.0 * c.q.trace(), max_relative = 1e-9);
            assert_relative_eq!(c.scalar_curvature, c.riemannian_scalar, max_relative = 1e-9);
            assert!(c.scalar_curvature < 0.0 && c.lambda < 0.0);
        }
    }

    #[test]
    fn metric_is_kahler_einstein() {
        for s in ["I(2,3)", "II(4)", "III(2)", "IV(4)"] {
            let c = comp(s);
            let n = c.pair.n();
            let ric = c.tensor.ricci();
            let rho = c.scalar_curvature / (2.0 * n as f64);
            let dev = (ric - DMatrix::<Complex64>::identity(n, n) * Complex64::from(rho)).norm();
            assert!(dev < 1e-10, "{s}: {dev}");
        }
    }

    #[test]
    fn gamma_matches_closed_forms() {
        for (s, g) in [("I(2,2)", 4.0), ("II(3)", 4.0), ("III(1)", 2.0), ("IV(5)", 5.0), ("I(1,3)", 4.0)] {
            assert_relative_eq!(comp(s).gamma(), g, epsilon = 1e-9);
        }
    }

    #[test]
    fn symmetry_violation_is_reported() {
        // A tensor that is not symmetric in its unbarred slots.
        let mut comps = vec![Complex64::new(0.0, 0.0); 16];
        comps[(0 * 2 + 0) * 4 + 1 * 2 + 0] = Complex64::new(1.0, 0.0);
        let t = CurvatureTensor::from_components(2, comps);
        assert!(matches!(q_operator(&t), Err(CurvatureError::SymmetryViolation(_))));
    }

    #[test]
    fn invariants_of_products_use_min_rule() {
        let inv = domain_invariants(&"I(1,1)xIII(2)".parse().unwrap()).unwrap();
        assert_relative_eq!(inv.gamma, 2.0, epsilon = 1e-9);
        assert_eq!(inv.n, 4);
        assert!(inv.scalar_curvature.is_none());
        assert_eq!(inv.factors.len(), 2);

        let inv = domain_invariants(&"I(2,2)".parse().unwrap()).unwrap();
        assert_eq!((inv.n, inv.gamma_rounded, inv.vanishing_q_max), (4, Some(4), 2));
        assert!(!inv.all_groups_vanish);

        let inv = domain_invariants(&"II(3)".parse().unwrap()).unwrap();
        assert_eq!((inv.n, inv.gamma_rounded), (3, Some(4)));

        let inv = domain_invariants(&"I(3,1)".parse().unwrap()).unwrap();
        assert!(inv.all_groups_vanish);

        let inv = domain_invariants(&"IV(4)xV".parse().unwrap()).unwrap();
        assert_eq!(inv.gamma_rounded, Some(4));
        assert_eq!(inv.n, 20);
        assert_eq!(inv.factors[1].source, Source::Reference);
    }

    #[test]
    fn vanishing_range() {
        assert_eq!(vanishing_q_max(4.0), 2);
        assert_eq!(vanishing_q_max(2.0), 0);
        assert_eq!(vanishing_q_max(3.0 + 1e-9), 1);
        assert_eq!(vanishing_q_max(3.5), 2);
    }

    #[test]
    fn table_rows() {
        let rows = gamma_table(3).unwrap();
        let find = |t: &str, p: &[usize]| rows.iter().find(|r| r.type_tag == t && r.params == p).unwrap();
        assert_eq!(find("III", &[1]).gamma_reference, 2);
        assert!(find("III", &[1]).matches);
        let v = find("V", &[]);
        assert_eq!((v.gamma_reference, v.n, v.source), (12, 16, Source::Reference));
        let vi = find("VI", &[]);
        assert_eq!((vi.gamma_reference, vi.n), (18, 27));
        assert!(rows.iter().all(|r| r.matches));
    }
}
