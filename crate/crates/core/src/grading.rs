//! Parabolic 2-grading of su(n,1).
//!
//! The last two coordinates (one spacelike, one timelike) carry the
//! distinguished `sl(2)`. With `k = n - 1` and `τ = tr ρ`, an element in normal form is
//!
//! ```text
//! [  ρ      u                  u               ]
//! [ -u*    -τ/2 + i(f+1)/2     i(f-1)/2        ]
//! [  u*     i(1-f)/2          -τ/2 - i(f+1)/2  ]
//! ```
//!
//! that is `½ e₋² + ρ + e₊ ⊗ u + ½ f e₊²`.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::hermitian::{HermitianSpace, SuElement};
use crate::linalg::{c, frob, inner, trace, CMat, CVec, RMat, C64};

pub const DEFAULT_GRADING_TOL: f64 = 1e-9;
/// Largest condition number of the normalizing conjugation that is accepted.
pub const MAX_NORMALIZATION_CONDITION: f64 = 1e4;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum GradingError {
    #[error("g^-2 component vanishes (norm {norm:e}); the element cannot be normalized")]
    Normalization { norm: f64 },
    #[error("rescaled element has a nonzero {component} component (relative size {size:e})")]
    NotNormalForm { component: String, size: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rho is not skew-hermitian (residual {residual:e})")]
    NotSkewHermitian { residual: f64 },
    #[error("normalizing conjugation has condition number {condition:e}, above {limit:e}")]
    IllConditioned { condition: f64, limit: f64 },
}

/// The distinguished `sl(2)` triple and the grading eigenbasis.
#[derive(Debug, Clone)]
pub struct GradingBasis {
    dim: usize,
    pub e_plus2: CMat,
    pub e_minus2: CMat,
    /// Grading element: `[h_alpha0, X] = k X` on `g^k`.
    pub h_alpha0: CMat,
    /// The matrix `[[0, 1], [1, 0]]` in the distinguished corner, equal to `-h_alpha0`.
    pub h_alpha0_displayed: CMat,
    eigvecs: RMat,
    weights: Vec<f64>,
}

impl GradingBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Projection of `x` onto `g^grade`, `grade ∈ {-2, ..., 2}`.
    pub fn project(&self, x: &CMat, grade: i32) -> CMat {
        let p = self.eigvecs.map(|v| c(v, 0.0));
        let mut y = p.transpose() * x * &p;
        for a in 0..self.dim {
            for b in 0..self.dim {
                if (self.weights[a] - self.weights[b] - f64::from(grade)).abs() > 0.5 {
                    y[(a, b)] = c(0.0, 0.0);
                }
            }
        }
        &p * y * p.transpose()
    }

    /// Splits a grade-zero element into its `h` part and the coefficient of `h_alpha0`.
    pub fn split_zero(&self, x0: &CMat) -> (CMat, f64) {
        let coeff = inner(&self.h_alpha0, x0).re / inner(&self.h_alpha0, &self.h_alpha0).re;
        (x0 - &self.h_alpha0 * c(coeff, 0.0), coeff)
    }

    fn coefficient(&self, basis: &CMat, x: &CMat) -> f64 {
        inner(basis, x).re / inner(basis, basis).re
    }

    /// The `g^1` element `e₊ ⊗ u`.
    pub fn plus_one(&self, u: &CVec) -> CMat {
        let k = self.dim - 2;
        let (s, t) = (k, k + 1);
        let mut m = CMat::zeros(self.dim, self.dim);
        for a in 0..k {
            m[(a, s)] = u[a];
            m[(a, t)] = u[a];
            m[(s, a)] = -u[a].conj();
            m[(t, a)] = u[a].conj();
        }
        m
    }
}

pub fn grading_basis(n: usize) -> GradingBasis {
    let dim = n + 1;
    let (s, t) = (dim - 2, dim - 1);
    let corner = |vals: [C64; 4]| {
        let mut m = CMat::zeros(dim, dim);
        m[(s, s)] = vals[0];
        m[(s, t)] = vals[1];
        m[(t, s)] = vals[2];
        m[(t, t)] = vals[3];
        m
    };
    let (i, z, one) = (c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0));
    let e_plus2 = corner([i, i, -i, -i]);
    let e_minus2 = corner([i, -i, i, -i]);
    let h_alpha0_displayed = corner([z, one, one, z]);
    let h_alpha0 = -&h_alpha0_displayed;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut eigvecs = RMat::identity(dim, dim);
    eigvecs[(s, s)] = r;
    eigvecs[(t, s)] = -r;
    eigvecs[(s, t)] = r;
    eigvecs[(t, t)] = r;
    let mut weights = vec![0.0; dim];
    weights[s] = 1.0;
    weights[t] = -1.0;
    GradingBasis { dim, e_plus2, e_minus2, h_alpha0, h_alpha0_displayed, eigvecs, weights }
}

/// Components of an element in `g^-2, ..., g^2`.
#[derive(Debug, Clone)]
pub struct GradeComponents {
    pub parts: [CMat; 5],
}

impl GradeComponents {
    pub fn grade(&self, k: i32) -> &CMat {
        &self.parts[(k + 2) as usize]
    }

    pub fn sum(&self) -> CMat {
        self.parts.iter().skip(1).fold(self.parts[0].clone(), |acc, p| acc + p)
    }

    pub fn norms(&self) -> [f64; 5] {
        [0, 1, 2, 3, 4].map(|k| frob(&self.parts[k]))
    }
}

pub fn grade_split(a: &SuElement) -> GradeComponents {
    split_matrix(&grading_basis(a.n()), a.matrix())
}

pub(crate) fn split_matrix(basis: &GradingBasis, x: &CMat) -> GradeComponents {
    GradeComponents { parts: [-2, -1, 0, 1, 2].map(|k| basis.project(x, k)) }
}

/// `(ρ, u, f)` of an element in normal form, with the rescaling that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureFunctions {
    pub rho: CMat,
    pub u: CVec,
    pub f: f64,
    pub scale: f64,
}

impl Serialize for StructureFunctions {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("StructureFunctions", 4)?;
        st.serialize_field("rho", &crate::json::matrix_pairs(&self.rho))?;
        st.serialize_field("u", &crate::json::vector_pairs(&self.u))?;
        st.serialize_field("f", &self.f)?;
        st.serialize_field("scale", &self.scale)?;
        st.end()
    }
}

/// The normal-form template. `rho` must lie in u(n-1).
pub fn assemble(rho: &CMat, u: &CVec, f: f64) -> Result<CMat, GradingError> {
    let k = rho.nrows();
    if rho.ncols() != k {
        return Err(GradingError::DimensionMismatch { expected: k, got: rho.ncols() });
    }
    if u.len() != k {
        return Err(GradingError::DimensionMismatch { expected: k, got: u.len() });
    }
    let residual = frob(&(rho + rho.adjoint()));
    if residual > 1e-10 * frob(rho).max(1.0) {
        return Err(GradingError::NotSkewHermitian { residual });
    }
    let basis = grading_basis(k + 1);
    let tau = trace(rho);
    let mut m = basis.plus_one(u);
    m.view_mut((0, 0), (k, k)).copy_from(rho);
    let (s, t) = (k, k + 1);
    m[(s, s)] = -tau / c(2.0, 0.0) + c(0.0, (f + 1.0) / 2.0);
    m[(s, t)] = c(0.0, (f - 1.0) / 2.0);
    m[(t, s)] = c(0.0, (1.0 - f) / 2.0);
    m[(t, t)] = -tau / c(2.0, 0.0) - c(0.0, (f + 1.0) / 2.0);
    Ok(m)
}

/// Action of `h ≅ u(n-1)` on `g^1 ≅ C^{n-1}`: `ρ·u = ρu + ½ tr(ρ) u`.
pub fn h_action(rho: &CMat, u: &CVec) -> Result<CVec, GradingError> {
    if rho.nrows() != u.len() || rho.ncols() != u.len() {
        return Err(GradingError::DimensionMismatch { expected: rho.nrows(), got: u.len() });
    }
    let residual = frob(&(rho + rho.adjoint()));
    if residual > 1e-10 * frob(rho).max(1.0) {
        return Err(GradingError::NotSkewHermitian { residual });
    }
    Ok(rho * u + u * (trace(rho) / c(2.0, 0.0)))
}

/// Extracts `(ρ, u, f)` after rescaling the `g^-2` component to `½ e₋²`.
/// Rejects elements whose rescaled `g^-1` or `h_alpha0` components do not vanish.
pub fn structure_functions(a: &SuElement) -> Result<StructureFunctions, GradingError> {
    extract(&grading_basis(a.n()), a.matrix(), DEFAULT_GRADING_TOL)
}

fn minus_two_coefficient(basis: &GradingBasis, x: &CMat) -> Result<f64, GradingError> {
    let coeff = basis.coefficient(&basis.e_minus2, &basis.project(x, -2));
    if coeff.abs() <= 1e-12 * frob(x).max(f64::MIN_POSITIVE) || coeff == 0.0 {
        return Err(GradingError::Normalization { norm: coeff.abs() });
    }
    Ok(coeff)
}

fn extract(basis: &GradingBasis, x: &CMat, tol: f64) -> Result<StructureFunctions, GradingError> {
    let coeff = minus_two_coefficient(basis, x)?;
    let scale = 1.0 / (2.0 * coeff);
    let xs = x * c(scale, 0.0);
    let size = frob(&xs);
    let minus_one = frob(&basis.project(&xs, -1)) / size;
    if minus_one > tol {
        return Err(GradingError::NotNormalForm { component: "g^-1".into(), size: minus_one });
    }
    let (_, h_coeff) = basis.split_zero(&basis.project(&xs, 0));
    let h_size = (h_coeff * frob(&basis.h_alpha0)).abs() / size;
    if h_size > tol {
        return Err(GradingError::NotNormalForm { component: "h_alpha0".into(), size: h_size });
    }
    let k = basis.dim - 2;
    let rho_raw = xs.view((0, 0), (k, k)).into_owned();
    let rho = (&rho_raw - rho_raw.adjoint()) * c(0.5, 0.0);
    let u = xs.view((0, k), (k, 1)).column(0).into_owned();
    let f = 2.0 * basis.coefficient(&basis.e_plus2, &basis.project(&xs, 2));
    let rebuilt = assemble(&rho, &u, f)?;
    let mismatch = frob(&(&rebuilt - &xs)) / size;
    if mismatch > tol {
        return Err(GradingError::NotNormalForm { component: "template".into(), size: mismatch });
    }
    Ok(StructureFunctions { rho, u, f, scale })
}

/// An element conjugated into normal form: `matrix = G (scale · A) G^{-1}`.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub matrix: CMat,
    pub scale: f64,
    pub conjugator: CMat,
    pub functions: StructureFunctions,
}

/// Rescales and conjugates by `exp(g^1)` then `exp(g^2)` to remove the
/// `g^-1` and `h_alpha0` components.
pub fn normal_form(a: &SuElement) -> Result<NormalForm, GradingError> {
    let basis = grading_basis(a.n());
    let coeff = minus_two_coefficient(&basis, a.matrix())?;
    let scale = 1.0 / (2.0 * coeff);
    let x1 = a.matrix() * c(scale, 0.0);
    let k = basis.dim - 2;

    // Solve [e₊ ⊗ v, ½ e₋²] = -x1_{-1} for v ∈ C^k (real least squares).
    let half_minus = &basis.e_minus2 * c(0.5, 0.0);
    let target = -basis.project(&x1, -1);
    let unknowns = 2 * k;
    let mut lhs = RMat::zeros(2 * basis.dim * basis.dim, unknowns.max(1));
    let flatten = |m: &CMat| -> Vec<f64> { m.iter().flat_map(|z| [z.re, z.im]).collect() };
    for j in 0..unknowns {
        let mut v = CVec::zeros(k);
        v[j / 2] = if j % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
        let g1 = basis.plus_one(&v);
        let col = flatten(&(&g1 * &half_minus - &half_minus * &g1));
        for (r, val) in col.into_iter().enumerate() {
            lhs[(r, j)] = val;
        }
    }
    let rhs = crate::linalg::RVec::from_vec(flatten(&target));
    let mut v = CVec::zeros(k);
    if k > 0 {
        let sol = lhs.svd(true, true).solve(&rhs, 1e-14).expect("SVD solve");
        for a_idx in 0..k {
            v[a_idx] = c(sol[2 * a_idx], sol[2 * a_idx + 1]);
        }
    }
    let g1 = nilpotent_exp(&basis.plus_one(&v));
    let g1_inv = nilpotent_exp(&-basis.plus_one(&v));
    let x2 = &g1 * &x1 * &g1_inv;

    let (_, h_coeff) = basis.split_zero(&basis.project(&x2, 0));
    // [y e₊², ½ e₋²] = -2y h_alpha0.
    let y = h_coeff / 2.0;
    let g2 = nilpotent_exp(&(&basis.e_plus2 * c(y, 0.0)));
    let g2_inv = nilpotent_exp(&(&basis.e_plus2 * c(-y, 0.0)));
    let x3 = &g2 * x2 * &g2_inv;
    let condition = frob(&(&g2 * &g1)) * frob(&(&g1_inv * &g2_inv)) / basis.dim as f64;
    if condition > MAX_NORMALIZATION_CONDITION {
        return Err(GradingError::IllConditioned { condition, limit: MAX_NORMALIZATION_CONDITION });
    }
    let functions = extract(&basis, &x3, DEFAULT_GRADING_TOL * condition.max(1.0))?;
    Ok(NormalForm { matrix: x3, scale, conjugator: g2 * g1, functions })
}

/// `exp` of a nilpotent matrix as its terminating power series.
fn nilpotent_exp(x: &CMat) -> CMat {
    let dim = x.nrows();
    let mut sum = CMat::identity(dim, dim);
    let mut term = CMat::identity(dim, dim);
    for k in 1..=dim {
        term = &term * x * c(1.0 / k as f64, 0.0);
        sum += &term;
    }
    sum
}

/// Comparison of `det(A_s - t)` for the normalized element `A_s` with the
/// displayed cofactor factorization and with the factorization of the traceless template.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPolyCrossCheck {
    pub scale: f64,
    /// Relative mismatch of `det(ρ' - t)(t² + τt + f + τ²/4) + u* Cof(ρ' - t) u`
    /// with `ρ' = ρ - τ/(n+1)`.
    pub displayed_discrepancy: f64,
    /// Relative mismatch of `det(ρ - t)(t² + τt + f + τ²/4) - 2i u* adj(ρ - t) u`.
    pub corrected_discrepancy: f64,
    pub sample_points: usize,
}

pub fn charpoly_cross_check(a: &SuElement) -> Result<CharPolyCrossCheck, GradingError> {
    let nf = normal_form(a)?;
    let sf = &nf.functions;
    let dim = a.n() + 1;
    let k = dim - 2;
    let tau = trace(&sf.rho);
    let quad = |t: C64| t * t + tau * t + c(sf.f, 0.0) + tau * tau / c(4.0, 0.0);
    let shifted = &sf.rho - CMat::identity(k, k) * (tau / c(dim as f64, 0.0));
    let samples = dim + 2;
    let mut worst_displayed: f64 = 0.0;
    let mut worst_corrected: f64 = 0.0;
    let mut size: f64 = 1.0;
    for j in 0..samples {
        let angle = 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / samples as f64;
        let t = C64::from_polar(0.8, angle) + c(0.1, 0.05);
        let truth = (&nf.matrix - CMat::identity(dim, dim) * t).determinant();
        let (d_sh, adj_sh) = det_adj(&(&shifted - CMat::identity(k, k) * t));
        let (d_rho, adj_rho) = det_adj(&(&sf.rho - CMat::identity(k, k) * t));
        let cof_term = (sf.u.adjoint() * adj_sh.transpose() * &sf.u)[(0, 0)];
        let adj_term = (sf.u.adjoint() * adj_rho * &sf.u)[(0, 0)];
        let displayed = d_sh * quad(t) + cof_term;
        let corrected = d_rho * quad(t) - c(0.0, 2.0) * adj_term;
        size = size.max(truth.norm());
        worst_displayed = worst_displayed.max((displayed - truth).norm());
        worst_corrected = worst_corrected.max((corrected - truth).norm());
    }
    Ok(CharPolyCrossCheck {
        scale: nf.scale,
        displayed_discrepancy: worst_displayed / size,
        corrected_discrepancy: worst_corrected / size,
        sample_points: samples,
    })
}

/// Determinant and adjugate; the empty matrix has determinant 1.
fn det_adj(x: &CMat) -> (C64, CMat) {
    let k = x.nrows();
    if k == 0 {
        return (c(1.0, 0.0), CMat::zeros(0, 0));
    }
    let d = x.determinant();
    let adj = CMat::from_fn(k, k, |i, j| {
        let minor = x.clone().remove_row(j).remove_column(i);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        let m = if k == 1 { c(1.0, 0.0) } else { minor.determinant() };
        m * c(sign, 0.0)
    });
    (d, adj)
}

/// Standard space of an assembled template of size `k + 2`.
pub fn template_space(k: usize) -> HermitianSpace {
    HermitianSpace::standard(k + 1).expect("k + 1 >= 1")
}
