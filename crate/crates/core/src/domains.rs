//! Classical Hermitian symmetric pairs realised as matrix Lie algebras.
//!
//! Every irreducible classical domain is built from a real form `g` sitting
//! inside `gl(N, C)` that is stable under `X -> -X^†`. The Cartan decomposition
//! is then read off directly: `k` is the skew-Hermitian part and `p` the
//! Hermitian part. Both bases are orthonormal for the real trace form
//! `Re tr(X^† Y)`, so expansion coefficients are plain inner products.
//!
//! | type       | real form     | `dim_C p^{1,0}` |
//! |------------|---------------|-----------------|
//! | `I(p,q)`   | `su(p,q)`     | `pq`            |
//! | `II(m)`    | `so*(2m)`     | `m(m-1)/2`      |
//! | `III(m)`   | `sp(m,R)`     | `m(m+1)/2`      |
//! | `IV(m)`    | `so(m,2)`     | `m`             |

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain {0} has no matrix realisation here (reference constants only)")]
    UnsupportedDomain(String),
    #[error("parameter out of range for {factor}: {reason}")]
    ParameterOutOfRange { factor: String, reason: String },
    #[error("cannot parse domain spec {input:?}: {reason}")]
    Parse { input: String, reason: String },
    #[error("metric scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("expected a single factor, got {0}")]
    NotIrreducible(String),
    #[error("orthonormalisation of the (1,0) frame failed: {0}")]
    DegenerateMetric(String),
}

/// One irreducible factor in Cartan's classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    I { p: usize, q: usize },
    II { m: usize },
    III { m: usize },
    IV { m: usize },
    V,
    VI,
}

impl Factor {
    pub fn type_tag(&self) -> &'static str {
        match self {
            Factor::I { .. } => "I",
            Factor::II { .. } => "II",
            Factor::III { .. } => "III",
            Factor::IV { .. } => "IV",
            Factor::V => "V",
            Factor::VI => "VI",
        }
    }

    pub fn params(&self) -> Vec<usize> {
        match *self {
            Factor::I { p, q } => vec![p, q],
            Factor::II { m } | Factor::III { m } | Factor::IV { m } => vec![m],
            Factor::V | Factor::VI => vec![],
        }
    }

    pub fn is_classical(&self) -> bool {
        !matches!(self, Factor::V | Factor::VI)
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |reason: &str| {
            Err(DomainError::ParameterOutOfRange {
                factor: self.to_string(),
                reason: reason.to_string(),
            })
        };
        match *self {
            Factor::I { p, q } if p < 1 || q < 1 => bad("I(p,q) needs p >= 1 and q >= 1"),
            Factor::II { m } if m < 2 => bad("II(m) needs m >= 2"),
            Factor::III { m } if m < 1 => bad("III(m) needs m >= 1"),
            Factor::IV { m } if m < 3 => bad("IV(m) needs m >= 3"),
            _ => Ok(()),
        }
    }

    /// Complex dimension from the classification table.
    pub fn dimension(&self) -> usize {
        match *self {
            Factor::I { p, q } => p * q,
            Factor::II { m } => m * (m - 1) / 2,
            Factor::III { m } => m * (m + 1) / 2,
            Factor::IV { m } => m,
            Factor::V => 16,
            Factor::VI => 27,
        }
    }

    /// Tabulated rigidity constant `R / (n lambda)`.
    pub fn reference_gamma(&self) -> u32 {
        match *self {
            Factor::I { p, q } => (p + q) as u32,
            Factor::II { m } => 2 * (m as u32 - 1),
            Factor::III { m } => m as u32 + 1,
            Factor::IV { m } => m as u32,
            Factor::V => 12,
            Factor::VI => 18,
        }
    }

    /// Size `N` of the matrices realising the real form.
    fn matrix_dim(&self) -> usize {
        match *self {
            Factor::I { p, q } => p + q,
            Factor::II { m } | Factor::III { m } => 2 * m,
            Factor::IV { m } => m + 2,
            Factor::V | Factor::VI => 0,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Factor::I { p, q } => write!(f, "I({p},{q})"),
            Factor::II { m } => write!(f, "II({m})"),
            Factor::III { m } => write!(f, "III({m})"),
            Factor::IV { m } => write!(f, "IV({m})"),
            Factor::V => write!(f, "V"),
            Factor::VI => write!(f, "VI"),
        }
    }
}

impl FromStr for Factor {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| DomainError::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let s = s.trim();
        let (tag, args) = match s.find('(') {
            Some(open) => {
                let close = s.strip_suffix(')').ok_or_else(|| err("missing ')'"))?;
                (&s[..open], Some(&close[open + 1..]))
            }
            None => (s, None),
        };
        let nums: Vec<usize> = match args {
            Some(a) => a
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| err("parameters must be non-negative integers")))
                .collect::<Result<_, _>>()?,
            None => vec![],
        };
        let factor = match (tag.trim(), nums.as_slice()) {
            ("I", [p, q]) => Factor::I { p: *p, q: *q },
            ("II", [m]) => Factor::II { m: *m },
            ("III", [m]) => Factor::III { m: *m },
            ("IV", [m]) => Factor::IV { m: *m },
            ("V", []) => Factor::V,
            ("VI", []) => Factor::VI,
            ("I" | "II" | "III" | "IV" | "V" | "VI", _) => return Err(err("wrong number of parameters")),
            _ => return Err(err("unknown type tag")),
        };
        factor.validate()?;
        Ok(factor)
    }
}

/// A (possibly reducible) domain: an ordered product of irreducible factors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub factors: Vec<Factor>,
}

impl DomainSpec {
    pub fn single(factor: Factor) -> Self {
        DomainSpec { factors: vec![factor] }
    }

    pub fn dimension(&self) -> usize {
        self.factors.iter().map(Factor::dimension).sum()
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, factor) in self.factors.iter().enumerate() {
            if i > 0 {
                f.write_str("x")?;
            }
            write!(f, "{factor}")?;
        }
        Ok(())
    }
}

impl FromStr for DomainSpec {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // 'x' never occurs inside a factor, so a plain split is enough.
        let factors = s
            .split(['x', 'X', '×'])
            .map(|part| {
                part.parse::<Factor>().map_err(|e| match e {
                    DomainError::Parse { reason, .. } => DomainError::Parse {
                        input: s.to_string(),
                        reason: format!("factor {:?}: {reason}", part.trim()),
                    },
                    other => other,
                })
            })
            .collect::<Result<Vec<Factor>, _>>()?;
        if factors.is_empty() {
            return Err(DomainError::Parse {
                input: s.to_string(),
                reason: "empty spec".into(),
            });
        }
        Ok(DomainSpec { factors })
    }
}

/// Split a product into its irreducible factors, preserving order.
pub fn decompose_product(spec: &DomainSpec) -> Vec<DomainSpec> {
    spec.factors.iter().copied().map(DomainSpec::single).collect()
}

/// Sparse `N x N` complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl SparseMatrix {
    fn new(dim: usize) -> Self {
        SparseMatrix { dim, entries: Vec::new() }
    }

    fn push(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries.push((r, c, v));
    }

    fn scaled(mut self, s: f64) -> Self {
        for e in &mut self.entries {
            e.2 *= s;
        }
        self
    }

    fn frob_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `Re tr(self^† x)` against a dense row-major buffer.
    fn inner_dense(&self, buf: &[Complex64]) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v.conj() * buf[r * self.dim + c]).re)
            .sum()
    }

    /// Writes `[a, b]` into a zeroed row-major buffer.
    fn bracket_into(a: &SparseMatrix, b: &SparseMatrix, buf: &mut [Complex64]) {
        let n = a.dim;
        for &(r1, c1, v1) in &a.entries {
            for &(r2, c2, v2) in &b.entries {
                if c1 == r2 {
                    buf[r1 * n + c2] += v1 * v2;
                }
                if c2 == r1 {
                    buf[r2 * n + c1] -= v2 * v1;
                }
            }
        }
    }
}

fn unit(dim: usize, entries: &[(usize, usize, Complex64)]) -> SparseMatrix {
    let mut m = SparseMatrix::new(dim);
    for &(r, c, v) in entries {
        m.push(r, c, v);
    }
    let norm = m.frob_norm();
    m.scaled(1.0 / norm)
}

/// Orthonormal traceless diagonal matrices `i * diag(1,..,1,-k,0,..)`.
fn traceless_diagonals(dim: usize, target: &mut Vec<SparseMatrix>) {
    for k in 1..dim {
        let mut entries: Vec<_> = (0..k).map(|a| (a, a, I)).collect();
        entries.push((k, k, -I * k as f64));
        target.push(unit(dim, &entries));
    }
}

/// `k` and `p` generators together with the central element of `k`.
struct Realisation {
    dim: usize,
    k: Vec<SparseMatrix>,
    p: Vec<SparseMatrix>,
    center: SparseMatrix,
}

fn realise(factor: Factor) -> Result<Realisation, DomainError> {
    factor.validate()?;
    let dim = factor.matrix_dim();
    let mut k = Vec::new();
    let mut p = Vec::new();
    let center;
    match factor {
        Factor::I { p: pp, q } => {
            // u(p) and u(q) blocks, traceless overall.
            for block in [(0, pp), (pp, pp + q)] {
                for a in block.0..block.1 {
                    for b in a + 1..block.1 {
                        k.push(unit(dim, &[(a, b, ONE), (b, a, -ONE)]));
                        k.push(unit(dim, &[(a, b, I), (b, a, I)]));
                    }
                }
            }
            traceless_diagonals(dim, &mut k);
            for a in 0..pp {
                for b in pp..dim {
                    p.push(unit(dim, &[(a, b, ONE), (b, a, ONE)]));
                    p.push(unit(dim, &[(a, b, I), (b, a, -I)]));
                }
            }
            let mut z = SparseMatrix::new(dim);
            let total = (pp + q) as f64;
            for a in 0..dim {
                let w = if a < pp { q as f64 } else { -(pp as f64) };
                z.push(a, a, I * (w / total));
            }
            center = z;
        }
        Factor::II { m } | Factor::III { m } => {
            // [[A, B], [s*conj(B), conj(A)]], A in u(m); B skew (II, s=-1) or symmetric (III, s=+1).
            let symmetric = matches!(factor, Factor::III { .. });
            let s = if symmetric { ONE } else { -ONE };
            for a in 0..m {
                for b in a + 1..m {
                    k.push(unit(
                        dim,
                        &[(a, b, ONE), (b, a, -ONE), (m + a, m + b, ONE), (m + b, m + a, -ONE)],
                    ));
                    k.push(unit(
                        dim,
                        &[(a, b, I), (b, a, I), (m + a, m + b, -I), (m + b, m + a, -I)],
                    ));
                }
                k.push(unit(dim, &[(a, a, I), (m + a, m + a, -I)]));
            }
            for a in 0..m {
                let lo = if symmetric { a } else { a + 1 };
                for b in lo..m {
                    let sign = if symmetric { ONE } else { -ONE };
                    for c in [ONE, I] {
                        let mut e = vec![(a, m + b, c), (m + a, b, s * c.conj())];
                        if a != b {
                            e.push((b, m + a, sign * c));
                            e.push((m + b, a, s * sign * c.conj()));
                        }
                        p.push(unit(dim, &e));
                    }
                }
            }
            let mut z = SparseMatrix::new(dim);
            for a in 0..m {
                z.push(a, a, I * 0.5);
                z.push(m + a, m + a, -I * 0.5);
            }
            center = z;
        }
        Factor::IV { m } => {
            for a in 0..m {
                for b in a + 1..m {
                    k.push(unit(dim, &[(a, b, ONE), (b, a, -ONE)]));
                }
            }
            k.push(unit(dim, &[(m, m + 1, ONE), (m + 1, m, -ONE)]));
            for a in 0..m {
                for b in m..m + 2 {
                    p.push(unit(dim, &[(a, b, ONE), (b, a, ONE)]));
                }
            }
            center = unit(dim, &[(m, m + 1, ONE), (m + 1, m, -ONE)]);
        }
        Factor::V | Factor::VI => return Err(DomainError::UnsupportedDomain(factor.to_string())),
    }
    Ok(Realisation { dim, k, p, center })
}

/// Brackets between `k` and `p`, which are all the curvature needs.
///
/// `pp[(i * 2n + j) * dim_k + kappa]` is the `K_kappa` coefficient of
/// `[P_i, P_j]`; `kp[kappa]` is `ad(K_kappa)` restricted to `p`, column `l`
/// holding the coordinates of `[K_kappa, P_l]`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    pub dim_k: usize,
    pub dim_p: usize,
    pub pp: Vec<f64>,
    pub kp: Vec<DMatrix<f64>>,
}

impl StructureConstants {
    pub fn pp_coeff(&self, i: usize, j: usize, kappa: usize) -> f64 {
        self.pp[(i * self.dim_p + j) * self.dim_k + kappa]
    }

    pub fn pp_slice(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.dim_p + j) * self.dim_k;
        &self.pp[start..start + self.dim_k]
    }
}

/// An irreducible Hermitian symmetric pair `g = k + p` with complex structure
/// and invariant metric on `p`.
#[derive(Debug, Clone)]
pub struct HermitianPair {
    pub factor: Factor,
    pub matrix_dim: usize,
    pub k_basis: Vec<SparseMatrix>,
    pub p_basis: Vec<SparseMatrix>,
    /// Central element of `k`, scaled so `ad(z0)^2 = -1` on `p`.
    pub z0: SparseMatrix,
    pub constants: StructureConstants,
    /// `J = ad(z0)` on `p`, in `p_basis` coordinates.
    pub complex_structure: DMatrix<f64>,
    /// Killing form of `g` restricted to `p`.
    pub killing_p: DMatrix<f64>,
    /// Killing form rescaled to have smallest diagonal entry 1.
    pub base_metric: DMatrix<f64>,
    /// Indices of `p_basis` whose `(1,0)` parts form a complex basis of `p^{1,0}`.
    pub holomorphic_seeds: Vec<usize>,
}

impl HermitianPair {
    /// `dim_C p^{1,0}`.
    pub fn n(&self) -> usize {
        self.p_basis.len() / 2
    }

    pub fn dim_k(&self) -> usize {
        self.k_basis.len()
    }

    /// Full basis of `g`: `k` first, then `p`.
    pub fn g_basis(&self) -> impl Iterator<Item = &SparseMatrix> {
        self.k_basis.iter().chain(self.p_basis.iter())
    }

    /// Coordinates of a dense matrix in the `k + p` basis.
    pub fn coordinates(&self, x: &DMatrix<Complex64>) -> Vec<f64> {
        let buf: Vec<Complex64> = x.transpose().iter().copied().collect();
        self.g_basis().map(|b| b.inner_dense(&buf)).collect()
    }

    pub fn element(&self, coords: &[f64]) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.matrix_dim, self.matrix_dim);
        for (b, &c) in self.g_basis().zip(coords) {
            if c != 0.0 {
                for &(r, col, v) in &b.entries {
                    m[(r, col)] += v * c;
                }
            }
        }
        m
    }

    /// `[x, y]` for elements given in `k + p` coordinates.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (a, b) = (self.element(x), self.element(y));
        self.coordinates(&(&a * &b - &b * &a))
    }

    /// Distance of a dense matrix from the real span of `basis`.
    fn span_residual(basis: &[SparseMatrix], x: &DMatrix<Complex64>) -> f64 {
        let buf: Vec<Complex64> = x.transpose().iter().copied().collect();
        let mut rest = x.clone();
        for b in basis {
            let c = b.inner_dense(&buf);
            for &(r, col, v) in &b.entries {
                rest[(r, col)] -= v * c;
            }
        }
        rest.norm()
    }

    /// Largest violation of `[k,k] <= k`, `[k,p] <= p`, `[p,p] <= k` over basis pairs.
    pub fn cartan_residual(&self) -> f64 {
        let dense_k: Vec<_> = self.k_basis.iter().map(SparseMatrix::to_dense).collect();
        let dense_p: Vec<_> = self.p_basis.iter().map(SparseMatrix::to_dense).collect();
        let br = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
        let mut worst: f64 = 0.0;
        for (i, a) in dense_k.iter().enumerate() {
            for b in &dense_k[i + 1..] {
                worst = worst.max(Self::span_residual(&self.k_basis, &br(a, b)));
            }
            for b in &dense_p {
                worst = worst.max(Self::span_residual(&self.p_basis, &br(a, b)));
            }
        }
        for (i, a) in dense_p.iter().enumerate() {
            for b in &dense_p[i + 1..] {
                worst = worst.max(Self::span_residual(&self.k_basis, &br(a, b)));
            }
        }
        worst
    }

    /// Largest Jacobi-identity residual over all basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let dense: Vec<_> = self.g_basis().map(SparseMatrix::to_dense).collect();
        let br = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
        let mut worst: f64 = 0.0;
        for (i, x) in dense.iter().enumerate() {
            for (j, y) in dense.iter().enumerate().skip(i + 1) {
                let xy = br(x, y);
                for z in dense.iter().skip(j + 1) {
                    let total = br(&xy, z) + br(&br(y, z), x) + br(&br(z, x), y);
                    worst = worst.max(total.norm());
                }
            }
        }
        worst
    }

    /// Largest `|[z0, K]|` over the `k` basis.
    pub fn center_residual(&self) -> f64 {
        let z = self.z0.to_dense();
        self.k_basis
            .iter()
            .map(|k| {
                let k = k.to_dense();
                (&z * &k - &k * &z).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `|J^2 + 1|` on `p`.
    pub fn complex_structure_residual(&self) -> f64 {
        let j = &self.complex_structure;
        (j * j + DMatrix::identity(j.nrows(), j.ncols())).norm()
    }

    /// Largest `|[J, ad(K)]|` on `p` over the `k` basis.
    pub fn j_commutation_residual(&self) -> f64 {
        let j = &self.complex_structure;
        self.constants
            .kp
            .iter()
            .map(|a| (j * a - a * j).norm())
            .fold(0.0, f64::max)
    }

    /// Metric on `p^{1,0}` at the given positive scale.
    pub fn metric(&self, scale: f64) -> Result<HermitianMetric, DomainError> {
        invariant_metric(self, scale)
    }
}

/// Build the matrix realisation of one classical factor.
pub fn build_domain(spec: &DomainSpec) -> Result<HermitianPair, DomainError> {
    match spec.factors.as_slice() {
        [factor] => build_factor(*factor),
        _ => Err(DomainError::NotIrreducible(spec.to_string())),
    }
}

pub fn build_factor(factor: Factor) -> Result<HermitianPair, DomainError> {
    let Realisation { dim, k, p, center } = realise(factor)?;
    let (dim_k, dim_p) = (k.len(), p.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); dim * dim];
    let clear = |buf: &mut Vec<Complex64>| buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));

    let mut pp = vec![0.0; dim_p * dim_p * dim_k];
    for i in 0..dim_p {
        for j in i + 1..dim_p {
            clear(&mut buf);
            SparseMatrix::bracket_into(&p[i], &p[j], &mut buf);
            for (kappa, kb) in k.iter().enumerate() {
                let c = kb.inner_dense(&buf);
                pp[(i * dim_p + j) * dim_k + kappa] = c;
                pp[(j * dim_p + i) * dim_k + kappa] = -c;
            }
        }
    }

    let ad_on_p = |x: &SparseMatrix, buf: &mut Vec<Complex64>| {
        let mut a = DMatrix::zeros(dim_p, dim_p);
        for (l, pl) in p.iter().enumerate() {
            buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            SparseMatrix::bracket_into(x, pl, buf);
            for (mi, pm) in p.iter().enumerate() {
                a[(mi, l)] = pm.inner_dense(buf);
            }
        }
        a
    };
    let kp: Vec<DMatrix<f64>> = k.iter().map(|kb| ad_on_p(kb, &mut buf)).collect();

    let mut j = ad_on_p(&center, &mut buf);
    // ad(z0)^2 = -mu^2 on p; rescale so that J^2 = -1.
    let mu2 = -(&j * &j).trace() / dim_p as f64;
    if !(mu2 > 0.0) {
        return Err(DomainError::DegenerateMetric("central element acts trivially on p".into()));
    }
    let mu = mu2.sqrt();
    j /= mu;
    let z0 = center.scaled(1.0 / mu);

    let constants = StructureConstants { dim_k, dim_p, pp, kp };
    let killing_p = killing_on_p(&constants);
    let min_diag = killing_p.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_diag > 0.0) {
        return Err(DomainError::DegenerateMetric("Killing form not positive on p".into()));
    }
    let base_metric = &killing_p / min_diag;
    let holomorphic_seeds = holomorphic_seeds(&j);

    Ok(HermitianPair {
        factor,
        matrix_dim: dim,
        k_basis: k,
        p_basis: p,
        z0,
        constants,
        complex_structure: j,
        killing_p,
        base_metric,
        holomorphic_seeds,
    })
}

/// `tr(ad X ad Y)` on `g` for `X, Y` in `p`, assembled from the `k`/`p` brackets.
fn killing_on_p(c: &StructureConstants) -> DMatrix<f64> {
    let dp = c.dim_p;
    let mut b = DMatrix::zeros(dp, dp);
    for i in 0..dp {
        for jj in i..dp {
            let mut total = 0.0;
            for (kappa, a) in c.kp.iter().enumerate() {
                for m in 0..dp {
                    total -= a[(m, jj)] * c.pp_coeff(i, m, kappa);
                    total -= c.pp_coeff(jj, m, kappa) * a[(m, i)];
                }
            }
            b[(i, jj)] = total;
            b[(jj, i)] = total;
        }
    }
    b
}

/// `(v - iJv) / sqrt 2` for a real vector `v` on `p`.
pub fn holomorphic_part(j: &DMatrix<f64>, v: &DVector<f64>) -> DVector<Complex64> {
    let jv = j * v;
    DVector::from_iterator(
        v.len(),
        v.iter().zip(jv.iter()).map(|(&a, &b)| Complex64::new(a, -b) / 2f64.sqrt()),
    )
}

/// Greedy choice of `p` basis vectors with independent `(1,0)` parts.
fn holomorphic_seeds(j: &DMatrix<f64>) -> Vec<usize> {
    let dp = j.nrows();
    let n = dp / 2;
    let mut seeds = Vec::with_capacity(n);
    let mut ortho: Vec<DVector<Complex64>> = Vec::new();
    for idx in 0..dp {
        let mut e = DVector::zeros(dp);
        e[idx] = 1.0;
        let mut v = holomorphic_part(j, &e);
        for o in &ortho {
            let c = o.dotc(&v);
            v -= o * c;
        }
        let norm = v.norm();
        if norm > 1e-6 {
            ortho.push(v.unscale(norm));
            seeds.push(idx);
            if seeds.len() == n {
                break;
            }
        }
    }
    seeds
}

/// Invariant metric on `p`, carried both as the real form on `p` and as the
/// Hermitian matrix on `p^{1,0}` in the seed basis `f_i = (P_i - iJP_i)/sqrt 2`.
#[derive(Debug, Clone)]
pub struct HermitianMetric {
    pub scale: f64,
    /// Real symmetric form on `p` in `p_basis` coordinates.
    pub real: DMatrix<f64>,
    /// `h(f_i, f_j) = f_i^T G conj(f_j)`.
    pub hermitian: DMatrix<Complex64>,
    /// Columns `f_i` in `p_basis` coordinates.
    pub seed_vectors: DMatrix<Complex64>,
}

impl HermitianMetric {
    /// `h(u, v) = u^T G conj(v)` for complex vectors on `p`.
    pub fn h(&self, u: &DVector<Complex64>, v: &DVector<Complex64>) -> Complex64 {
        let gv = self.real.map(Complex64::from) * v.map(|z| z.conj());
        u.iter().zip(gv.iter()).map(|(a, b)| a * b).sum()
    }

    /// `h`-orthonormal frame `e_1..e_n` of `p^{1,0}` (columns, `p_basis` coordinates).
    pub fn orthonormal_frame(&self) -> Result<DMatrix<Complex64>, DomainError> {
        let (dp, n) = self.seed_vectors.shape();
        let mut frame = DMatrix::zeros(dp, n);
        for a in 0..n {
            let mut v: DVector<Complex64> = self.seed_vectors.column(a).into();
            for b in 0..a {
                let e: DVector<Complex64> = frame.column(b).into();
                let c = self.h(&v, &e);
                v -= e * c;
            }
            let norm2 = self.h(&v, &v).re;
            if !(norm2 > 1e-12 * self.scale) {
                return Err(DomainError::DegenerateMetric(format!(
                    "frame vector {a} has squared norm {norm2:e}"
                )));
            }
            frame.set_column(a, &v.unscale(norm2.sqrt()));
        }
        Ok(frame)
    }

    /// Largest `|h(A f_i, f_j) + h(f_i, A f_j)|` over `A = ad(K)`, `K` in the `k` basis.
    pub fn ad_invariance_residual(&self, pair: &HermitianPair) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.seed_vectors.ncols();
        for a in &pair.constants.kp {
            let ac = a.map(Complex64::from);
            let moved = &ac * &self.seed_vectors;
            for i in 0..n {
                for jj in 0..n {
                    let fi: DVector<Complex64> = self.seed_vectors.column(i).into();
                    let fj: DVector<Complex64> = self.seed_vectors.column(jj).into();
                    let ai: DVector<Complex64> = moved.column(i).into();
                    let aj: DVector<Complex64> = moved.column(jj).into();
                    worst = worst.max((self.h(&ai, &fj) + self.h(&fi, &aj)).norm());
                }
            }
        }
        worst
    }

    /// `|J^T G J - G|`.
    pub fn j_invariance_residual(&self, pair: &HermitianPair) -> f64 {
        let j = &pair.complex_structure;
        (j.transpose() * &self.real * j - &self.real).norm()
    }
}

/// The invariant metric `scale * (base form)` on `p^{1,0}`.
pub fn invariant_metric(pair: &HermitianPair, scale: f64) -> Result<HermitianMetric, DomainError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(DomainError::NonPositiveScale(scale));
    }
    let real = &pair.base_metric * scale;
    let dp = pair.p_basis.len();
    let n = pair.n();
    let mut seed_vectors = DMatrix::zeros(dp, n);
    for (col, &idx) in pair.holomorphic_seeds.iter().enumerate() {
        let mut e = DVector::zeros(dp);
        e[idx] = 1.0;
        seed_vectors.set_column(col, &holomorphic_part(&pair.complex_structure, &e));
    }
    let mut metric = HermitianMetric {
        scale,
        real,
        hermitian: DMatrix::zeros(n, n),
        seed_vectors,
    };
    let mut herm = DMatrix::zeros(n, n);
    for i in 0..n {
        for jj in 0..n {
            let fi: DVector<Complex64> = metric.seed_vectors.column(i).into();
            let fj: DVector<Complex64> = metric.seed_vectors.column(jj).into();
            herm[(i, jj)] = metric.h(&fi, &fj);
        }
    }
    metric.hermitian = herm;
    Ok(metric)
}
