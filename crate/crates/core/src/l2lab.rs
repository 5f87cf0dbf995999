//! A finite-dimensional Dolbeault complex on the punctured disk.
//!
//! Forms live on the annulus `ε < |z| < 1/2` with the Poincaré metric
//! `g = 1 / (|z|² (log|z|²)²)`, graded by total degree:
//!
//! ```text
//! degree 0   f                          basis z^j z̄^k
//! degree 1   f dz + g dz̄                (z^j z̄^k) dz, then (z^j z̄^k) dz̄
//! degree 2   f dz ∧ dz̄                  (z^j z̄^k) dz ∧ dz̄
//! ```
//!
//! with `k ∈ {0, 1}` and `D = ∂̄`. Inner products integrate the pointwise
//! metric against `χ · dA_P`, where `χ` is a smooth cutoff equal to 1 on
//! `|z| ≤ 1/4` and vanishing at `|z| = 1/2`. Angular integrals are exact;
//! radial ones use composite Gauss–Legendre panels in `ln r`. Basis vectors
//! are rescaled to unit norm.
//!
//! Adjoints are taken with respect to the Gram matrices, and all spectral
//! work happens in orthonormal coordinates `y = Lᴴ x` with `G = L Lᴴ`, where
//! the adjoint of `D` is its conjugate transpose.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::quadrature::CompositeRule;

/// Outer radius of the annulus.
pub const OUTER_RADIUS: f64 = 0.5;
/// The cutoff is identically 1 inside this radius.
pub const CUTOFF_START: f64 = 0.25;
/// Smallest admissible Gram eigenvalue.
pub const GRAM_MIN_EIGENVALUE: f64 = 1e-10;
/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-10;
/// Largest panel width in `ln r`.
const PANEL_WIDTH: f64 = 0.25;
const CUTOFF_PANELS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum L2Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("Gram matrix in degree {degree} is ill-conditioned (smallest eigenvalue {min_eigenvalue:e}); reduce the basis size")]
    IllConditionedGram { degree: usize, min_eigenvalue: f64 },
    #[error("degree {0} is outside 0..=2")]
    DegreeOutOfRange(usize),
    #[error("vector has length {got}, degree {degree} has dimension {expected}")]
    DimensionMismatch { degree: usize, expected: usize, got: usize },
}

/// The monomial `z^j z̄^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub j: i32,
    pub k: u32,
}

impl Mode {
    /// Angular frequency `j - k`.
    pub fn frequency(self) -> i64 {
        self.j as i64 - self.k as i64
    }

    /// Total power of `r`.
    pub fn radial_power(self) -> i64 {
        self.j as i64 + self.k as i64
    }
}

/// Modes `z^j z̄^k` with `k ∈ {0, 1}` and `basis_size` exponents `j` centred on 0.
pub fn standard_modes(basis_size: usize) -> Vec<Mode> {
    let lo = -((basis_size / 2) as i32);
    (0..basis_size as i32)
        .flat_map(|t| [Mode { j: lo + t, k: 0 }, Mode { j: lo + t, k: 1 }])
        .collect()
}

/// Smooth cutoff: 1 on `r ≤ 1/4`, 0 at `r = 1/2`.
pub fn cutoff(r: f64) -> f64 {
    if r <= CUTOFF_START {
        return 1.0;
    }
    if r >= OUTER_RADIUS {
        return 0.0;
    }
    let t = (OUTER_RADIUS - r) / (OUTER_RADIUS - CUTOFF_START);
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    f(t) / (f(t) + f(1.0 - t))
}

/// Poincaré conformal factor `1 / (r² (ln r²)²)`.
pub fn poincare_factor(r: f64) -> f64 {
    1.0 / (r * r * (r * r).ln().powi(2))
}

/// Radial weight of degree `q`: pointwise metric times the area density `g`.
pub fn radial_weight(q: usize, r: f64) -> f64 {
    match q {
        0 => poincare_factor(r),
        1 => 1.0,
        2 => 1.0 / poincare_factor(r),
        _ => unreachable!("degree checked by caller"),
    }
}

/// Basis element of a graded piece: `part` is 0 for `dz`, 1 for `dz̄` in degree 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisElement {
    pub mode: Mode,
    pub part: u8,
}

/// Unnormalised Gram matrix of `elements` in degree `q` with the given rule on `ln r`.
fn raw_gram(elements: &[BasisElement], q: usize, rule: &CompositeRule) -> DMatrix<f64> {
    let weights: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&s, &w)| {
            let r = s.exp();
            // dr = r ds, area r dr
            (r, 2.0 * PI * w * r * r * radial_weight(q, r) * cutoff(r))
        })
        .collect();
    let m = elements.len();
    let mut g = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let (ea, eb) = (elements[a], elements[b]);
            if ea.part != eb.part || ea.mode.frequency() != eb.mode.frequency() {
                continue;
            }
            let p = (ea.mode.radial_power() + eb.mode.radial_power()) as i32;
            let v: f64 = weights.iter().map(|(r, w)| w * r.powi(p)).sum();
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    g
}

/// Unnormalised Gram matrix of degree `q` on `ε < r < 1/2` for a mode set.
pub fn unnormalised_gram(modes: &[Mode], q: usize, epsilon: f64, quad_order: usize) -> Result<DMatrix<f64>, L2Error> {
    if q > 2 {
        return Err(L2Error::DegreeOutOfRange(q));
    }
    if !(epsilon > 0.0 && epsilon < OUTER_RADIUS) || quad_order < 2 {
        return Err(L2Error::InvalidParameters(format!("epsilon {epsilon}, quadrature order {quad_order}")));
    }
    Ok(raw_gram(&graded_basis(modes)[q], q, &radial_rule(epsilon, quad_order)))
}

/// Composite rule in `s = ln r`. The cutoff band has fixed panels, so its
/// contribution does not depend on `ε`.
fn radial_rule(epsilon: f64, order: usize) -> CompositeRule {
    let panels = |a: f64, b: f64| ((b - a) / PANEL_WIDTH).ceil().max(1.0) as usize;
    let (a, c, b) = (epsilon.ln(), CUTOFF_START.ln(), OUTER_RADIUS.ln());
    if a >= c {
        return CompositeRule::new(a, b, panels(a, b), order);
    }
    let mut rule = CompositeRule::new(a, c, panels(a, c), order);
    let band = CompositeRule::new(c, b, CUTOFF_PANELS, order);
    rule.nodes.extend(band.nodes);
    rule.weights.extend(band.weights);
    rule
}

/// Basis elements of each degree for a mode set.
pub fn graded_basis(modes: &[Mode]) -> [Vec<BasisElement>; 3] {
    let plain: Vec<BasisElement> = modes.iter().map(|&mode| BasisElement { mode, part: 0 }).collect();
    let mut one = plain.clone();
    one.extend(modes.iter().map(|&mode| BasisElement { mode, part: 1 }));
    [plain.clone(), one, plain]
}

/// `∂̄` on raw monomials, from degree `q` to `q + 1`.
fn raw_dbar(modes: &[Mode], q: usize) -> DMatrix<f64> {
    let m = modes.len();
    let find = |mode: Mode| modes.iter().position(|x| *x == mode);
    match q {
        0 => {
            // ∂̄(z^j z̄^k) = k z^j z̄^{k-1} dz̄
            let mut d = DMatrix::zeros(2 * m, m);
            for (i, mode) in modes.iter().enumerate() {
                if mode.k > 0 {
                    let target = find(Mode { j: mode.j, k: mode.k - 1 }).expect("mode set is closed under ∂̄");
                    d[(m + target, i)] = mode.k as f64;
                }
            }
            d
        }
        1 => {
            // ∂̄(f dz) = -∂f/∂z̄ dz ∧ dz̄; ∂̄(f dz̄) = 0
            let mut d = DMatrix::zeros(m, 2 * m);
            for (i, mode) in modes.iter().enumerate() {
                if mode.k > 0 {
                    let target = find(Mode { j: mode.j, k: mode.k - 1 }).expect("mode set is closed under ∂̄");
                    d[(target, i)] = -(mode.k as f64);
                }
            }
            d
        }
        _ => unreachable!(),
    }
}

fn check_gram(degree: usize, g: &DMatrix<Complex64>) -> Result<(), L2Error> {
    let min_eigenvalue = if g.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        linalg::herm_eigenvalues(g)[0]
    } else {
        f64::NAN
    };
    if min_eigenvalue >= GRAM_MIN_EIGENVALUE {
        Ok(())
    } else {
        Err(L2Error::IllConditionedGram { degree, min_eigenvalue })
    }
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(Complex64::from)
}

/// Gram matrices and `∂̄` in the unit-normalised basis.
#[derive(Debug, Clone)]
pub struct DiscreteComplex {
    pub modes: Vec<Mode>,
    pub epsilon: f64,
    pub quad_order: usize,
    pub basis: [Vec<BasisElement>; 3],
    pub gram: [DMatrix<Complex64>; 3],
    /// `d[q]` maps degree `q` to `q + 1`.
    pub d: [DMatrix<Complex64>; 2],
    /// Largest change of a normalised Gram entry between orders `quad_order`
    /// and `quad_order + 1`.
    pub quadrature_cauchy: f64,
    chol: [DMatrix<Complex64>; 3],
}

impl DiscreteComplex {
    /// The standard complex with `basis_size` Laurent exponents.
    pub fn build(basis_size: usize, epsilon: f64, quad_order: usize) -> Result<Self, L2Error> {
        if basis_size < 4 {
            return Err(L2Error::InvalidParameters(format!("basis size must be at least 4, got {basis_size}")));
        }
        Self::from_modes(standard_modes(basis_size), epsilon, quad_order)
    }

    /// A complex on an arbitrary mode set closed under `z̄`-differentiation.
    pub fn from_modes(modes: Vec<Mode>, epsilon: f64, quad_order: usize) -> Result<Self, L2Error> {
        if !(epsilon > 0.0 && epsilon < OUTER_RADIUS) {
            return Err(L2Error::InvalidParameters(format!("epsilon must lie in (0, 0.5), got {epsilon}")));
        }
        if quad_order < 2 {
            return Err(L2Error::InvalidParameters("quadrature order must be at least 2".into()));
        }
        if modes.is_empty() {
            return Err(L2Error::InvalidParameters("empty mode set".into()));
        }
        for m in &modes {
            if m.k > 1 || (m.k == 1 && !modes.contains(&Mode { j: m.j, k: 0 })) {
                return Err(L2Error::InvalidParameters(format!("mode set is not closed under ∂̄ at {m:?}")));
            }
        }
        let basis = graded_basis(&modes);
        let rule = radial_rule(epsilon, quad_order);
        let finer = radial_rule(epsilon, quad_order + 1);
        let raw: Vec<DMatrix<f64>> = (0..3).map(|q| raw_gram(&basis[q], q, &rule)).collect();
        let raw_finer: Vec<DMatrix<f64>> = (0..3).map(|q| raw_gram(&basis[q], q, &finer)).collect();

        let scales: Vec<DVector<f64>> = raw.iter().map(|g| g.diagonal().map(|v| 1.0 / v.sqrt())).collect();
        let normalise = |g: &DMatrix<f64>, s: &DVector<f64>| {
            DMatrix::from_fn(g.nrows(), g.ncols(), |a, b| g[(a, b)] * s[a] * s[b])
        };
        let gram_real: Vec<DMatrix<f64>> = raw.iter().zip(&scales).map(|(g, s)| normalise(g, s)).collect();
        let quadrature_cauchy = raw_finer
            .iter()
            .zip(&scales)
            .zip(&gram_real)
            .map(|((g, s), n)| (normalise(g, s) - n).amax())
            .fold(0.0, f64::max);

        let mut chol = Vec::with_capacity(3);
        for (q, g) in gram_real.iter().enumerate() {
            let gc = complexify(g);
            check_gram(q, &gc)?;
            chol.push(Cholesky::new(gc).expect("positive definite").l());
        }

        let d: Vec<DMatrix<Complex64>> = (0..2)
            .map(|q| {
                let raw_d = raw_dbar(&modes, q);
                let (sq, sq1) = (&scales[q], &scales[q + 1]);
                complexify(&DMatrix::from_fn(raw_d.nrows(), raw_d.ncols(), |k, i| raw_d[(k, i)] * sq[i] / sq1[k]))
            })
            .collect();

        let to3 = |v: Vec<DMatrix<Complex64>>| -> [DMatrix<Complex64>; 3] { v.try_into().expect("three degrees") };
        Ok(DiscreteComplex {
            modes,
            epsilon,
            quad_order,
            basis,
            gram: to3(gram_real.iter().map(complexify).collect()),
            d: d.try_into().expect("two maps"),
            quadrature_cauchy,
            chol: to3(chol),
        })
    }

    pub fn dim(&self, q: usize) -> usize {
        self.basis[q].len()
    }

    fn check_degree(q: usize) -> Result<(), L2Error> {
        (q <= 2).then_some(()).ok_or(L2Error::DegreeOutOfRange(q))
    }

    /// `D_q`, or the zero map at the ends of the complex.
    pub fn d_map(&self, q: usize) -> DMatrix<Complex64> {
        match q {
            0 | 1 => self.d[q].clone(),
            _ => DMatrix::zeros(0, self.dim(2)),
        }
    }

    pub fn inner(&self, q: usize, x: &DVector<Complex64>, y: &DVector<Complex64>) -> Complex64 {
        (y.adjoint() * &self.gram[q] * x)[(0, 0)]
    }

    pub fn norm_sqr(&self, q: usize, x: &DVector<Complex64>) -> f64 {
        self.inner(q, x, x).re
    }

    /// `y = Lᴴ x`.
    pub fn to_orthonormal(&self, q: usize, x: &DVector<Complex64>) -> DVector<Complex64> {
        self.chol[q].adjoint() * x
    }

    /// `x = L^{-H} y`.
    pub fn from_orthonormal(&self, q: usize, y: &DVector<Complex64>) -> DVector<Complex64> {
        self.chol[q]
            .adjoint()
            .solve_upper_triangular(y)
            .expect("Cholesky factor is invertible")
    }

    /// `D_q` in orthonormal coordinates: `L_{q+1}ᴴ D L_q^{-H}`.
    pub fn d_orthonormal(&self, q: usize) -> DMatrix<Complex64> {
        // D L_q^{-H} = (L_q^{-1} Dᴴ)ᴴ
        let right = self.chol[q]
            .solve_lower_triangular(&self.d[q].adjoint())
            .expect("Cholesky factor is invertible")
            .adjoint();
        self.chol[q + 1].adjoint() * right
    }

    /// `Laplacian` in orthonormal coordinates of degree `q`.
    pub fn laplacian_orthonormal(&self, q: usize) -> DMatrix<Complex64> {
        let n = self.dim(q);
        let mut lap = DMatrix::zeros(n, n);
        if q >= 1 {
            let a = self.d_orthonormal(q - 1);
            lap += &a * a.adjoint();
        }
        if q <= 1 {
            let b = self.d_orthonormal(q);
            lap += b.adjoint() * &b;
        }
        lap
    }
}

/// Build the standard complex (see [`DiscreteComplex::build`]).
pub fn build_discrete_complex(basis_size: usize, epsilon: f64, quad_order: usize) -> Result<DiscreteComplex, L2Error> {
    DiscreteComplex::build(basis_size, epsilon, quad_order)
}

/// `D*_q = G_q^{-1} D_qᴴ G_{q+1}`, mapping degree `q + 1` to `q`.
pub fn discrete_adjoint(complex: &DiscreteComplex, q: usize) -> Result<DMatrix<Complex64>, L2Error> {
    if q > 1 {
        return Err(L2Error::DegreeOutOfRange(q));
    }
    Ok(gram_adjoint(&complex.gram[q], &complex.gram[q + 1], &complex.d[q]))
}

/// Adjoint of `a: V → W` with respect to Gram matrices `gv`, `gw`.
pub fn gram_adjoint(gv: &DMatrix<Complex64>, gw: &DMatrix<Complex64>, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let chol = Cholesky::<Complex64, Dyn>::new(gv.clone()).expect("Gram matrix is positive definite");
    chol.solve(&(a.adjoint() * gw))
}

/// `max |⟨D u, v⟩ - ⟨u, D* v⟩|` over basis vectors `u`, `v`.
pub fn adjointness_residual(complex: &DiscreteComplex, q: usize) -> Result<f64, L2Error> {
    let dstar = discrete_adjoint(complex, q)?;
    // ⟨D e_u, e_v⟩ = (G_{q+1} D)_{vu},  ⟨e_u, D* e_v⟩ = (D*ᴴ G_q)_{vu}
    let lhs = &complex.gram[q + 1] * &complex.d[q];
    let rhs = dstar.adjoint() * &complex.gram[q];
    Ok((lhs - rhs).camax())
}

/// `max |(D*)* - D|`.
pub fn double_adjoint_residual(complex: &DiscreteComplex, q: usize) -> Result<f64, L2Error> {
    let dstar = discrete_adjoint(complex, q)?;
    let back = gram_adjoint(&complex.gram[q + 1], &complex.gram[q], &dstar);
    Ok((back - &complex.d[q]).camax())
}

/// Orthonormal basis (columns) of the range of `a`.
fn range_basis(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > RANK_TOL * smax)
        .collect();
    DMatrix::from_fn(a.nrows(), cols.len(), |r, c| u[(r, cols[c])])
}

/// Orthogonal projector onto the column span of an orthonormal `basis`.
fn projector(basis: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    if basis.ncols() == 0 {
        DMatrix::zeros(n, n)
    } else {
        basis * basis.adjoint()
    }
}

/// Projectors (orthonormal coordinates) onto `im D_{q-1}`, `im D*_q` and the harmonic space.
#[derive(Debug, Clone)]
pub struct HodgeProjectors {
    pub q: usize,
    pub exact: DMatrix<Complex64>,
    pub coexact: DMatrix<Complex64>,
    pub harmonic: DMatrix<Complex64>,
    pub dims: [usize; 3],
}

pub fn hodge_projectors(complex: &DiscreteComplex, q: usize) -> Result<HodgeProjectors, L2Error> {
    DiscreteComplex::check_degree(q)?;
    let n = complex.dim(q);
    let exact_basis = if q >= 1 { range_basis(&complex.d_orthonormal(q - 1)) } else { DMatrix::zeros(n, 0) };
    let coexact_basis = if q <= 1 {
        range_basis(&complex.d_orthonormal(q).adjoint())
    } else {
        DMatrix::zeros(n, 0)
    };
    let exact = projector(&exact_basis, n);
    let coexact = projector(&coexact_basis, n);
    let harmonic = DMatrix::identity(n, n) - &exact - &coexact;
    let harmonic_dim = n - exact_basis.ncols() - coexact_basis.ncols();
    Ok(HodgeProjectors {
        q,
        dims: [exact_basis.ncols(), coexact_basis.ncols(), harmonic_dim],
        exact,
        coexact,
        harmonic,
    })
}

/// `v = exact + coexact + harmonic` in the original coordinates.
#[derive(Debug, Clone)]
pub struct HodgeSplit {
    pub exact: DVector<Complex64>,
    pub coexact: DVector<Complex64>,
    pub harmonic: DVector<Complex64>,
    /// Largest `|⟨a, b⟩|` between distinct components, relative to `max(1, ‖v‖²)`.
    pub orthogonality_residual: f64,
    /// `‖v - Σ parts‖ / max(1, ‖v‖)`.
    pub reconstruction_residual: f64,
}

pub fn hodge_decompose(complex: &DiscreteComplex, q: usize, v: &DVector<Complex64>) -> Result<HodgeSplit, L2Error> {
    let p = hodge_projectors(complex, q)?;
    split_with(complex, &p, v)
}

pub fn split_with(complex: &DiscreteComplex, p: &HodgeProjectors, v: &DVector<Complex64>) -> Result<HodgeSplit, L2Error> {
    let q = p.q;
    if v.len() != complex.dim(q) {
        return Err(L2Error::DimensionMismatch {
            degree: q,
            expected: complex.dim(q),
            got: v.len(),
        });
    }
    let y = complex.to_orthonormal(q, v);
    let back = |m: &DMatrix<Complex64>| complex.from_orthonormal(q, &(m * &y));
    let exact = back(&p.exact);
    let coexact = back(&p.coexact);
    let harmonic = back(&p.harmonic);
    let scale = complex.norm_sqr(q, v).max(1.0);
    let parts = [&exact, &coexact, &harmonic];
    let mut orthogonality: f64 = 0.0;
    for a in 0..3 {
        for b in a + 1..3 {
            orthogonality = orthogonality.max(complex.inner(q, parts[a], parts[b]).norm() / scale);
        }
    }
    let rest = v - &exact - &coexact - &harmonic;
    Ok(HodgeSplit {
        reconstruction_residual: complex.norm_sqr(q, &rest).max(0.0).sqrt() / scale.sqrt(),
        orthogonality_residual: orthogonality,
        exact,
        coexact,
        harmonic,
    })
}

/// Harmonic part of `v`, the discrete image of the restriction map.
pub fn project_restriction(complex: &DiscreteComplex, q: usize, v: &DVector<Complex64>) -> Result<DVector<Complex64>, L2Error> {
    Ok(hodge_decompose(complex, q, v)?.harmonic)
}

/// `|⟨Δv, v⟩ - ‖Dv‖² - ‖D*v‖²| / max(1, ‖Dv‖² + ‖D*v‖²)`.
pub fn energy_identity_residual(complex: &DiscreteComplex, q: usize, v: &DVector<Complex64>) -> Result<f64, L2Error> {
    DiscreteComplex::check_degree(q)?;
    let n = complex.dim(q);
    // Δ = D_{q-1} D*_{q-1} + D*_q D_q
    let mut lap = DMatrix::<Complex64>::zeros(n, n);
    let mut energy = 0.0;
    if q >= 1 {
        let dstar = discrete_adjoint(complex, q - 1)?;
        lap += &complex.d[q - 1] * &dstar;
        energy += complex.norm_sqr(q - 1, &(&dstar * v));
    }
    if q <= 1 {
        let dstar = discrete_adjoint(complex, q)?;
        let dv = &complex.d[q] * v;
        lap += &dstar * &complex.d[q];
        energy += complex.norm_sqr(q + 1, &dv);
    }
    let lhs = complex.inner(q, &(lap * v), v);
    Ok(((lhs.re - energy).abs() + lhs.im.abs()) / energy.max(1.0))
}

/// Spectral facts about the Laplacian in one degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaplacianReport {
    pub degree: usize,
    pub min_eigenvalue: f64,
    pub kernel_dim: usize,
    /// `‖P_{ker Δ} - P_{ker D ∩ ker D*}‖`.
    pub kernel_distance: f64,
    pub dims: [usize; 3],
    pub dimension_count_ok: bool,
}

pub fn laplacian_report(complex: &DiscreteComplex, q: usize) -> Result<LaplacianReport, L2Error> {
    let p = hodge_projectors(complex, q)?;
    let lap = complex.laplacian_orthonormal(q);
    let eig = nalgebra::SymmetricEigen::new(lap.clone());
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let top = vals.iter().copied().fold(0.0, f64::max);
    let kernel: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] <= RANK_TOL * top.max(1.0)).collect();
    let kbasis = DMatrix::from_fn(lap.nrows(), kernel.len(), |r, c| eig.eigenvectors[(r, kernel[c])]);
    let pk = projector(&kbasis, lap.nrows());
    Ok(LaplacianReport {
        degree: q,
        min_eigenvalue: vals.iter().copied().fold(f64::INFINITY, f64::min),
        kernel_dim: kernel.len(),
        kernel_distance: (pk - &p.harmonic).norm(),
        dimension_count_ok: p.dims.iter().sum::<usize>() == complex.dim(q) && kernel.len() == p.dims[2],
        dims: p.dims,
    })
}

/// Seeded complex-Gaussian vector.
pub fn random_vector(len: usize, seed: u64, stream: u64) -> DVector<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    DVector::from_fn(len, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    })
}

/// All residuals of the lab for one complex.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabReport {
    pub basis_size: usize,
    pub epsilon: f64,
    pub quad_order: usize,
    pub seed: u64,
    pub dims: [usize; 3],
    pub d_squared: f64,
    pub adjoint_residual: f64,
    pub double_adjoint_residual: f64,
    pub energy_identity_residual: f64,
    pub decomposition_residual: f64,
    pub projection_gauge_residual: f64,
    pub laplacian_min_eigenvalue: f64,
    pub kernel_distance: f64,
    pub dimension_count_ok: bool,
    pub harmonic_dim: [usize; 3],
    pub quadrature_cauchy: f64,
}

impl LabReport {
    /// Every residual within `tol` and the dimension count exact.
    pub fn passed(&self, tol: f64) -> bool {
        self.d_squared == 0.0
            && self.adjoint_residual < tol
            && self.double_adjoint_residual < tol
            && self.energy_identity_residual < tol
            && self.decomposition_residual < tol
            && self.projection_gauge_residual < tol
            && self.laplacian_min_eigenvalue >= -tol
            && self.kernel_distance < 1e-8
            && self.dimension_count_ok
    }
}

/// Run every lab check on a standard complex with random vectors from `seed`.
pub fn lab_report(basis_size: usize, epsilon: f64, quad_order: usize, seed: u64) -> Result<LabReport, L2Error> {
    let c = DiscreteComplex::build(basis_size, epsilon, quad_order)?;
    let mut adjoint: f64 = 0.0;
    let mut double: f64 = 0.0;
    for q in 0..2 {
        adjoint = adjoint.max(adjointness_residual(&c, q)?);
        double = double.max(double_adjoint_residual(&c, q)?);
    }
    let (mut energy, mut decomposition, mut gauge, mut min_eig, mut kdist): (f64, f64, f64, f64, f64) =
        (0.0, 0.0, 0.0, f64::INFINITY, 0.0);
    let mut count_ok = true;
    let mut harmonic_dim = [0; 3];
    for q in 0..3 {
        let v = random_vector(c.dim(q), seed, q as u64);
        energy = energy.max(energy_identity_residual(&c, q, &v)?);
        let p = hodge_projectors(&c, q)?;
        let split = split_with(&c, &p, &v)?;
        decomposition = decomposition.max(split.orthogonality_residual).max(split.reconstruction_residual);
        if q >= 1 {
            let u = random_vector(c.dim(q - 1), seed, 16 + q as u64);
            let shifted = &v + &c.d[q - 1] * u;
            let moved = split_with(&c, &p, &shifted)?.harmonic;
            let scale = c.norm_sqr(q, &v).max(1.0).sqrt();
            gauge = gauge.max(c.norm_sqr(q, &(moved - &split.harmonic)).max(0.0).sqrt() / scale);
        }
        let lr = laplacian_report(&c, q)?;
        min_eig = min_eig.min(lr.min_eigenvalue);
        kdist = kdist.max(lr.kernel_distance);
        count_ok &= lr.dimension_count_ok;
        harmonic_dim[q] = lr.dims[2];
    }
    Ok(LabReport {
        basis_size,
        epsilon,
        quad_order,
        seed,
        dims: [c.dim(0), c.dim(1), c.dim(2)],
        d_squared: (&c.d[1] * &c.d[0]).camax(),
        adjoint_residual: adjoint,
        double_adjoint_residual: double,
        energy_identity_residual: energy,
        decomposition_residual: decomposition,
        projection_gauge_residual: gauge,
        laplacian_min_eigenvalue: min_eig,
        kernel_distance: kdist,
        dimension_count_ok: count_ok,
        harmonic_dim,
        quadrature_cauchy: c.quadrature_cauchy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small() -> DiscreteComplex {
        DiscreteComplex::build(6, 0.1, 20).unwrap()
    }

    /// Adaptive Simpson on `[a, b]`, used as an independent radial oracle.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        // `tol` is relative; absolute targets below roundoff never terminate.
        rec(f, a, b, fa, fm, fb, whole, tol * whole.abs(), 30)
    }

    #[test]
    fn holomorphic_gram_matches_oracle() {
        let modes: Vec<Mode> = (-2..=2).map(|j| Mode { j, k: 0 }).collect();
        let c = DiscreteComplex::from_modes(modes.clone(), 0.1, 20).unwrap();
        assert_eq!(c.gram[0].shape(), (5, 5));
        assert!(linalg::herm_eigenvalues(&c.gram[0])[0] > 0.0);
        // Distinct frequencies are orthogonal; the raw diagonal follows from the oracle.
        let rule = radial_rule(0.1, 20);
        let raw = raw_gram(&c.basis[0], 0, &rule);
        for (i, m) in modes.iter().enumerate() {
            let p = 2 * m.j;
            let f = |r: f64| 2.0 * PI * r.powi(p) * poincare_factor(r) * cutoff(r) * r;
            let exact = simpson(&f, 0.1, 0.5, 1e-12);
            assert_relative_eq!(raw[(i, i)], exact, max_relative = 1e-9);
            for l in 0..5 {
                if l != i {
                    assert_eq!(c.gram[0][(i, l)], Complex64::new(0.0, 0.0));
                }
            }
        }
        // Nothing here is z̄-dependent.
        assert!(c.d[0].iter().all(|x| *x == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn d_squared_vanishes_exactly() {
        let c = small();
        assert!((&c.d[1] * &c.d[0]).iter().all(|x| *x == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn holomorphic_columns_are_killed() {
        let c = small();
        for (i, e) in c.basis[0].iter().enumerate() {
            if e.mode.k == 0 {
                assert!(c.d[0].column(i).iter().all(|x| *x == Complex64::new(0.0, 0.0)));
            }
        }
    }

    #[test]
    fn gram_matrices_are_unit_diagonal_and_converged() {
        let c = small();
        for g in &c.gram {
            for i in 0..g.nrows() {
                assert_relative_eq!(g[(i, i)].re, 1.0, epsilon = 1e-14);
            }
            assert!(linalg::herm_eigenvalues(g)[0] > GRAM_MIN_EIGENVALUE);
        }
        assert!(c.quadrature_cauchy < 1e-8, "{}", c.quadrature_cauchy);
    }

    #[test]
    fn parameter_validation() {
        assert!(DiscreteComplex::build(3, 0.1, 20).is_err());
        assert!(DiscreteComplex::build(8, 0.6, 20).is_err());
        assert!(DiscreteComplex::build(8, 0.0, 20).is_err());
        assert!(DiscreteComplex::from_modes(vec![Mode { j: 0, k: 1 }], 0.1, 20).is_err());
        assert_eq!(discrete_adjoint(&small(), 2), Err(L2Error::DegreeOutOfRange(2)));
    }

    #[test]
    fn ill_conditioning_is_reported() {
        let one = Complex64::new(1.0, 0.0);
        let nearly = Complex64::new(1.0 - 1e-12, 0.0);
        let g = DMatrix::from_row_slice(2, 2, &[one, nearly, nearly, one]);
        assert!(matches!(check_gram(1, &g), Err(L2Error::IllConditionedGram { degree: 1, .. })));
        assert!(check_gram(0, &DMatrix::identity(3, 3)).is_ok());
    }

    #[test]
    fn adjoint_properties() {
        let c = small();
        for q in 0..2 {
            assert!(adjointness_residual(&c, q).unwrap() < 1e-10);
            assert!(double_adjoint_residual(&c, q).unwrap() < 1e-10);
        }
    }

    #[test]
    fn harmonic_vectors_are_killed_by_the_adjoint() {
        let c = small();
        let p = hodge_projectors(&c, 1).unwrap();
        let v = random_vector(c.dim(1), 3, 0);
        let h = split_with(&c, &p, &v).unwrap().harmonic;
        let dstar = discrete_adjoint(&c, 0).unwrap();
        assert!((&dstar * &h).camax() < 1e-10);
        assert!((&c.d[1] * &h).camax() < 1e-10);
    }

    #[test]
    fn split_of_special_vectors() {
        let c = small();
        // A holomorphic function is harmonic in degree 0.
        let idx = c.basis[0].iter().position(|e| e.mode == Mode { j: 1, k: 0 }).unwrap();
        let mut v = DVector::zeros(c.dim(0));
        v[idx] = Complex64::new(1.0, 0.0);
        let s = hodge_decompose(&c, 0, &v).unwrap();
        assert!((&s.harmonic - &v).camax() < 1e-10);
        assert!(s.exact.camax() < 1e-10 && s.coexact.camax() < 1e-10);

        // An exact vector is all exact.
        let u = random_vector(c.dim(0), 5, 0);
        let du = &c.d[0] * u;
        let s = hodge_decompose(&c, 1, &du).unwrap();
        assert!((&s.exact - &du).camax() < 1e-10);
        assert!(s.harmonic.camax() < 1e-10 && s.coexact.camax() < 1e-10);
    }

    #[test]
    fn projection_recovers_a_constructed_harmonic_summand() {
        let c = small();
        let p = hodge_projectors(&c, 1).unwrap();
        let h = split_with(&c, &p, &random_vector(c.dim(1), 8, 0)).unwrap().harmonic;
        let v = &h + &c.d[0] * random_vector(c.dim(0), 8, 1);
        let got = project_restriction(&c, 1, &v).unwrap();
        assert!((got - &h).camax() < 1e-10);
        let zero = project_restriction(&c, 1, &DVector::zeros(c.dim(1))).unwrap();
        assert_eq!(zero.camax(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = small();
        assert!(matches!(
            hodge_decompose(&c, 0, &DVector::zeros(3)),
            Err(L2Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn laplacian_facts() {
        let c = small();
        let b = 6;
        let expected = [[0, b, b], [b, b, 2 * b], [b, 0, b]];
        for q in 0..3 {
            let r = laplacian_report(&c, q).unwrap();
            assert!(r.min_eigenvalue >= -1e-10);
            assert!(r.kernel_distance < 1e-8);
            assert!(r.dimension_count_ok);
            assert_eq!(r.dims, expected[q], "degree {q}");
        }
    }

    #[test]
    fn full_report_passes() {
        let r = lab_report(8, 0.1, 20, 42).unwrap();
        assert!(r.passed(1e-10), "{r:?}");
        assert_eq!(r.dims, [16, 32, 16]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn random_splits_are_orthogonal(seed in any::<u64>(), q in 0usize..3) {
            let c = small();
            let v = random_vector(c.dim(q), seed, 0);
            let s = hodge_decompose(&c, q, &v).unwrap();
            prop_assert!(s.orthogonality_residual < 1e-10);
            prop_assert!(s.reconstruction_residual < 1e-10);
            prop_assert!(energy_identity_residual(&c, q, &v).unwrap() < 1e-10);
        }

        #[test]
        fn cutoff_is_monotone(a in 0.0f64..0.6, b in 0.0f64..0.6) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(cutoff(lo) >= cutoff(hi));
            prop_assert!((0.0..=1.0).contains(&cutoff(a)));
        }
    }
}
