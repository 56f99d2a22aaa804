//! Linear algebra over the indefinite hermitian form
//! `h(x, y) = x_1 conj(y_1) + ... + x_n conj(y_n) - x_{n+1} conj(y_{n+1})`,
//! membership certificates for su(n,1) and the rank-one map `x -> x ∧ Jx`.

use std::fmt;
use std::str::FromStr;

use nalgebra::SymmetricEigen;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{c, frob, trace, CMat, CVec, C64, I};
use crate::rng::SeededRng;

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HermitianError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("the zero vector has no rank-one image")]
    ZeroVector,
    #[error("n must be at least 1")]
    DegenerateDimension,
    #[error("gram matrix is not hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("gram matrix has signature ({positive},{negative}), expected (n,1)")]
    WrongSignature { positive: usize, negative: usize },
    #[error("profile {profile} needs n >= {min_n}")]
    UnsupportedProfile { profile: String, min_n: usize },
}

/// The space `C^{n+1}` with the standard form `diag(1, ..., 1, -1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSpace {
    n: usize,
    form: CMat,
}

impl HermitianSpace {
    pub fn standard(n: usize) -> Result<Self, HermitianError> {
        if n == 0 {
            return Err(HermitianError::DegenerateDimension);
        }
        let mut form = CMat::identity(n + 1, n + 1);
        form[(n, n)] = c(-1.0, 0.0);
        Ok(Self { n, form })
    }

    /// Re-diagonalizes a signature-(n,1) Gram matrix. Returns the standard space
    /// together with `P` satisfying `P* gram P = diag(1, ..., 1, -1)`; coordinates
    /// with respect to `gram` map to standard ones through `P^{-1}`.
    pub fn from_gram(gram: &CMat) -> Result<(Self, CMat), HermitianError> {
        let dim = gram.nrows();
        if gram.ncols() != dim || dim < 2 {
            return Err(HermitianError::DimensionMismatch { expected: dim.max(2), got: gram.ncols() });
        }
        let residual = frob(&(gram - gram.adjoint()));
        if residual > 1e-12 * frob(gram).max(1.0) {
            return Err(HermitianError::NotHermitian { residual });
        }
        let eig = SymmetricEigen::new(gram.clone());
        let positive = eig.eigenvalues.iter().filter(|&&v| v > 0.0).count();
        let negative = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        if negative != 1 || positive != dim - 1 {
            return Err(HermitianError::WrongSignature { positive, negative });
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut p = CMat::zeros(dim, dim);
        for (col, &idx) in order.iter().enumerate() {
            let scale = 1.0 / eig.eigenvalues[idx].abs().sqrt();
            p.set_column(col, &(eig.eigenvectors.column(idx) * c(scale, 0.0)));
        }
        Ok((Self::standard(dim - 1)?, p))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn form(&self) -> &CMat {
        &self.form
    }

    fn check_len(&self, v: &CVec) -> Result<(), HermitianError> {
        if v.len() != self.dim() {
            return Err(HermitianError::DimensionMismatch { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }
}

/// `h(x, y) = y* H x`.
pub fn herm_form(x: &CVec, y: &CVec, space: &HermitianSpace) -> Result<C64, HermitianError> {
    space.check_len(x)?;
    space.check_len(y)?;
    Ok(raw_form(x, y, space.n()))
}

pub(crate) fn raw_form(x: &CVec, y: &CVec, n: usize) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for k in 0..n {
        s += x[k] * y[k].conj();
    }
    s - x[n] * y[n].conj()
}

pub fn herm_metric(x: &CVec, y: &CVec, space: &HermitianSpace) -> Result<f64, HermitianError> {
    herm_form(x, y, space).map(|z| z.re)
}

pub fn herm_symplectic(x: &CVec, y: &CVec, space: &HermitianSpace) -> Result<f64, HermitianError> {
    herm_form(x, y, space).map(|z| z.im)
}

/// A matrix certified to lie in su(n,1).
#[derive(Debug, Clone, PartialEq)]
pub struct SuElement {
    space: HermitianSpace,
    matrix: CMat,
    tolerance_used: f64,
}

impl SuElement {
    pub fn space(&self) -> &HermitianSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn tolerance_used(&self) -> f64 {
        self.tolerance_used
    }

    pub fn n(&self) -> usize {
        self.space.n()
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// Conjugation `G A G^{-1}`, re-certified.
    pub fn conjugate(&self, g: &CMat) -> Result<SuElement, SuViolation> {
        let g_inv = g.clone().try_inverse().ok_or_else(|| SuViolation::singular(self.space.dim()))?;
        check_su(&(g * &self.matrix * g_inv), &self.space, self.tolerance_used.max(1e-9))
    }
}

/// Failure report of [`check_su`]: names every violated identity with its residual.
#[derive(Debug, Clone, PartialEq, Serialize, Error)]
pub struct SuViolation {
    pub expected_dim: usize,
    pub rows: usize,
    pub cols: usize,
    pub skew_residual: f64,
    pub trace_residual: f64,
    pub norm: f64,
    pub tolerance: f64,
    pub violated: Vec<String>,
}

impl SuViolation {
    fn singular(dim: usize) -> Self {
        Self {
            expected_dim: dim,
            rows: dim,
            cols: dim,
            skew_residual: f64::NAN,
            trace_residual: f64::NAN,
            norm: f64::NAN,
            tolerance: 0.0,
            violated: vec!["invertible conjugator".into()],
        }
    }
}

impl fmt::Display for SuViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "not in su(n,1): violated {:?} (skew residual {:e}, trace residual {:e}, tol {:e})",
            self.violated, self.skew_residual, self.trace_residual, self.tolerance
        )
    }
}

/// Certifies `A* H + H A = 0` and `tr A = 0`, both relative to `tol * ‖A‖_F`.
pub fn check_su(a: &CMat, space: &HermitianSpace, tol: f64) -> Result<SuElement, SuViolation> {
    let dim = space.dim();
    let (rows, cols) = a.shape();
    if rows != dim || cols != dim {
        return Err(SuViolation {
            expected_dim: dim,
            rows,
            cols,
            skew_residual: f64::NAN,
            trace_residual: f64::NAN,
            norm: f64::NAN,
            tolerance: tol,
            violated: vec!["dimension".into()],
        });
    }
    let h = space.form();
    let norm = frob(a);
    let skew_residual = frob(&(a.adjoint() * h + h * a));
    let trace_residual = trace(a).norm();
    let bound = tol * norm;
    let mut violated = Vec::new();
    if !(skew_residual <= bound) {
        violated.push("skew-adjointness A*H + HA = 0".to_string());
    }
    if !(trace_residual <= bound) {
        violated.push("tracelessness".to_string());
    }
    if violated.is_empty() {
        Ok(SuElement { space: space.clone(), matrix: a.clone(), tolerance_used: tol })
    } else {
        Err(SuViolation { expected_dim: dim, rows, cols, skew_residual, trace_residual, norm, tolerance: tol, violated })
    }
}

/// The endomorphism `z -> g(x,z) Jx - g(Jx,z) x`, i.e. `z -> i h(z,x) x`.
pub fn wedge_j(x: &CVec, space: &HermitianSpace) -> Result<CMat, HermitianError> {
    space.check_len(x)?;
    if x.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return Err(HermitianError::ZeroVector);
    }
    Ok(x * x.adjoint() * space.form() * I)
}

/// Projection of an arbitrary matrix onto su(n,1).
pub fn project_su(m: &CMat, space: &HermitianSpace) -> CMat {
    let h = space.form();
    let skew = (m - h * m.adjoint() * h) * c(0.5, 0.0);
    let shift = trace(&skew) / c(space.dim() as f64, 0.0);
    skew - CMat::identity(space.dim(), space.dim()) * shift
}

/// Random element of SU(n,1) as `exp(scale * X)` with `X` a unit-norm su(n,1) element.
pub fn random_group_element(rng: &mut SeededRng, space: &HermitianSpace, scale: f64) -> CMat {
    let x = project_su(&rng.complex_matrix(space.dim(), space.dim()), space);
    let x = &x * c(scale / frob(&x), 0.0);
    x.exp()
}

/// Random element of U(n,1): like [`random_group_element`] with an extra central phase.
pub fn random_unitary_group_element(rng: &mut SeededRng, space: &HermitianSpace, scale: f64) -> CMat {
    let phase = rng.uniform(-std::f64::consts::PI, std::f64::consts::PI);
    random_group_element(rng, space, scale) * C64::from_polar(1.0, phase)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SuProfile {
    Generic,
    DiagonalImaginary,
    Rank1,
    NegRank1,
    /// Single 2-block whose chain pairing has imaginary part of sign `epsilon`.
    Jordan2 { epsilon: i8 },
    Jordan3,
    SplitReal,
}

impl FromStr for SuProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "generic" => Self::Generic,
            "diagonal-imaginary" => Self::DiagonalImaginary,
            "rank1" => Self::Rank1,
            "neg-rank1" => Self::NegRank1,
            "jordan2" | "jordan2+" => Self::Jordan2 { epsilon: 1 },
            "jordan2-" => Self::Jordan2 { epsilon: -1 },
            "jordan3" => Self::Jordan3,
            "split-real" => Self::SplitReal,
            other => return Err(format!("unknown profile {other}")),
        })
    }
}

const CONJUGATION_SCALE: f64 = 0.7;
const EIGEN_GAP: f64 = 0.1;

/// Deterministic random su(n,1) element of the requested shape.
pub fn random_su(seed: u64, space: &HermitianSpace, profile: SuProfile) -> Result<SuElement, HermitianError> {
    let mut rng = SeededRng::new(seed);
    let dim = space.dim();
    let n = space.n();
    let matrix = match profile {
        SuProfile::Generic => project_su(&rng.complex_matrix(dim, dim), space),
        SuProfile::DiagonalImaginary => {
            let lambdas = traceless_spectrum(&mut rng, dim - 1);
            let mut all = lambdas.clone();
            all.push(-lambdas.iter().sum::<f64>());
            CMat::from_diagonal(&CVec::from_iterator(dim, all.iter().map(|&l| c(0.0, l))))
        }
        SuProfile::Rank1 | SuProfile::NegRank1 => {
            let v = rng.complex_vector(n);
            let v = &v * c(rng.uniform(0.5, 2.0) / v.norm(), 0.0);
            let mut x = CVec::zeros(dim);
            x.rows_mut(0, n).copy_from(&v);
            x[n] = c(v.norm(), 0.0);
            let x = x * C64::from_polar(1.0, rng.uniform(-3.0, 3.0));
            let w = wedge_j(&x, space)?;
            let w = if profile == SuProfile::NegRank1 { -w } else { w };
            conjugate_randomly(&mut rng, space, &w)
        }
        SuProfile::Jordan2 { epsilon } => {
            let (lam, rest) = block_spectrum(&mut rng, dim - 2, 2.0);
            let e = f64::from(epsilon.signum());
            let (p, q) = null_pair(dim);
            let mut basis = vec![p, q * c(0.0, -e)];
            basis.extend((1..n).map(|k| unit(dim, k)));
            let mut form = CMat::zeros(dim, dim);
            form[(0, 0)] = c(0.0, lam);
            form[(1, 1)] = c(0.0, lam);
            form[(0, 1)] = c(1.0, 0.0);
            for (k, &l) in rest.iter().enumerate() {
                form[(k + 2, k + 2)] = c(0.0, l);
            }
            let a = from_basis(&basis, &form);
            conjugate_randomly(&mut rng, space, &a)
        }
        SuProfile::Jordan3 => {
            if n < 2 {
                return Err(HermitianError::UnsupportedProfile { profile: "jordan3".into(), min_n: 2 });
            }
            let (lam, rest) = block_spectrum(&mut rng, dim - 3, 3.0);
            let (p, q) = null_pair(dim);
            let mut basis = vec![p, unit(dim, 1), -q];
            basis.extend((2..n).map(|k| unit(dim, k)));
            let mut form = CMat::zeros(dim, dim);
            for k in 0..3 {
                form[(k, k)] = c(0.0, lam);
            }
            form[(0, 1)] = c(1.0, 0.0);
            form[(1, 2)] = c(1.0, 0.0);
            for (k, &l) in rest.iter().enumerate() {
                form[(k + 3, k + 3)] = c(0.0, l);
            }
            let a = from_basis(&basis, &form);
            conjugate_randomly(&mut rng, space, &a)
        }
        SuProfile::SplitReal => {
            let rest = rng.separated(dim - 2, -1.0, 1.0, EIGEN_GAP);
            let re = rng.sign() * rng.uniform(0.3, 1.0);
            let im = -rest.iter().sum::<f64>() / 2.0;
            let (p, q) = null_pair(dim);
            let mut basis = vec![p, q];
            basis.extend((1..n).map(|k| unit(dim, k)));
            let mut form = CMat::zeros(dim, dim);
            form[(0, 0)] = c(re, im);
            form[(1, 1)] = c(-re, im);
            for (k, &l) in rest.iter().enumerate() {
                form[(k + 2, k + 2)] = c(0.0, l);
            }
            let a = from_basis(&basis, &form);
            conjugate_randomly(&mut rng, space, &a)
        }
    };
    Ok(check_su(&matrix, space, DEFAULT_MEMBERSHIP_TOL).expect("generated element lies in su(n,1)"))
}

fn unit(dim: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[k] = c(1.0, 0.0);
    v
}

/// Null vectors `p = (e_1 + e_{n+1})/√2`, `q = (e_1 - e_{n+1})/√2` with `h(p, q) = 1`.
pub(crate) fn null_pair(dim: usize) -> (CVec, CVec) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut p = CVec::zeros(dim);
    let mut q = CVec::zeros(dim);
    p[0] = c(s, 0.0);
    p[dim - 1] = c(s, 0.0);
    q[0] = c(s, 0.0);
    q[dim - 1] = c(-s, 0.0);
    (p, q)
}

fn from_basis(basis: &[CVec], form: &CMat) -> CMat {
    let b = CMat::from_columns(basis);
    let b_inv = b.clone().try_inverse().expect("canonical basis is invertible");
    b * form * b_inv
}

fn conjugate_randomly(rng: &mut SeededRng, space: &HermitianSpace, a: &CMat) -> CMat {
    let g = random_group_element(rng, space, CONJUGATION_SCALE);
    let g_inv = space.form() * g.adjoint() * space.form();
    g * a * g_inv
}

/// `count` separated values that are also separated from minus their sum.
fn traceless_spectrum(rng: &mut SeededRng, count: usize) -> Vec<f64> {
    loop {
        let vals = rng.separated(count, -1.0, 1.0, EIGEN_GAP);
        let total: f64 = -vals.iter().sum::<f64>();
        if vals.iter().all(|v| (v - total).abs() >= EIGEN_GAP) {
            return vals;
        }
    }
}

/// Eigenvalue of a `mult`-fold block and the remaining imaginary spectrum, trace zero overall.
fn block_spectrum(rng: &mut SeededRng, count: usize, mult: f64) -> (f64, Vec<f64>) {
    loop {
        let rest = rng.separated(count, -1.0, 1.0, EIGEN_GAP);
        let lam = -rest.iter().sum::<f64>() / mult;
        if rest.iter().all(|v| (v - lam).abs() >= EIGEN_GAP) {
            return (lam, rest);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, k: usize) -> CVec {
        unit(dim, k)
    }

    #[test]
    fn form_on_basis_vectors() {
        let s = HermitianSpace::standard(2).unwrap();
        assert_eq!(herm_form(&e(3, 0), &e(3, 0), &s).unwrap(), c(1.0, 0.0));
        assert_eq!(herm_form(&e(3, 2), &e(3, 2), &s).unwrap(), c(-1.0, 0.0));
        assert!(matches!(
            herm_form(&e(2, 0), &e(3, 0), &s),
            Err(HermitianError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn hermitian_symmetry() {
        let s = HermitianSpace::standard(3).unwrap();
        let mut r = SeededRng::new(3);
        let x = r.complex_vector(4);
        let y = r.complex_vector(4);
        let d = herm_form(&x, &y, &s).unwrap() - herm_form(&y, &x, &s).unwrap().conj();
        assert!(d.norm() < 1e-12);
        assert_eq!(herm_metric(&x, &y, &s).unwrap(), herm_form(&x, &y, &s).unwrap().re);
        assert_eq!(herm_symplectic(&x, &y, &s).unwrap(), herm_form(&x, &y, &s).unwrap().im);
    }

    #[test]
    fn check_su_examples() {
        let s1 = HermitianSpace::standard(1).unwrap();
        let ok = CMat::from_diagonal(&CVec::from_vec(vec![I, -I]));
        assert!(check_su(&ok, &s1, DEFAULT_MEMBERSHIP_TOL).is_ok());
        let bad = CMat::from_diagonal(&CVec::from_vec(vec![I, I]));
        let report = check_su(&bad, &s1, DEFAULT_MEMBERSHIP_TOL).unwrap_err();
        assert_eq!(report.violated, vec!["tracelessness".to_string()]);
        assert!((report.trace_residual - 2.0).abs() < 1e-15);
        let s3 = HermitianSpace::standard(3).unwrap();
        let mut r = SeededRng::new(11);
        let a = project_su(&r.complex_matrix(4, 4), &s3);
        let cert = check_su(&a, &s3, DEFAULT_MEMBERSHIP_TOL).unwrap();
        assert_eq!(cert.tolerance_used(), DEFAULT_MEMBERSHIP_TOL);
        assert!(check_su(&CMat::zeros(3, 3), &s3, 1e-10).unwrap_err().violated == vec!["dimension".to_string()]);
    }

    #[test]
    fn wedge_of_null_vector_is_traceless_rank_one() {
        let s = HermitianSpace::standard(2).unwrap();
        let (p, _) = null_pair(3);
        let w = wedge_j(&p, &s).unwrap();
        assert!(trace(&w).norm() < 1e-15);
        assert!(check_su(&w, &s, 1e-12).is_ok());
        let rank = crate::linalg::singular_values(&w).iter().filter(|&&v| v > 1e-12).count();
        assert_eq!(rank, 1);
        assert_eq!(wedge_j(&CVec::zeros(3), &s), Err(HermitianError::ZeroVector));
    }

    #[test]
    fn wedge_matches_real_formula() {
        let s = HermitianSpace::standard(2).unwrap();
        let mut r = SeededRng::new(5);
        let x = r.complex_vector(3);
        let z = r.complex_vector(3);
        let jx = &x * I;
        let expected = &jx * c(herm_metric(&x, &z, &s).unwrap(), 0.0) - &x * c(herm_metric(&jx, &z, &s).unwrap(), 0.0);
        let got = wedge_j(&x, &s).unwrap() * &z;
        assert!((got - expected).norm() < 1e-12);
    }

    #[test]
    fn wedge_is_phase_invariant() {
        let s = HermitianSpace::standard(3).unwrap();
        let x = SeededRng::new(8).complex_vector(4);
        let w1 = wedge_j(&x, &s).unwrap();
        let w2 = wedge_j(&(&x * C64::from_polar(1.0, 0.7)), &s).unwrap();
        assert!(frob(&(w1 - w2)) < 1e-12);
    }

    #[test]
    fn from_gram_rediagonalizes() {
        let (p, q) = null_pair(3);
        let basis = CMat::from_columns(&[p, unit(3, 1), q]);
        let h = HermitianSpace::standard(2).unwrap();
        let gram = basis.adjoint() * h.form() * &basis;
        let (space, change) = HermitianSpace::from_gram(&gram).unwrap();
        assert!(frob(&(change.adjoint() * &gram * &change - space.form())) < 1e-12);
        assert!(matches!(
            HermitianSpace::from_gram(&CMat::identity(3, 3)),
            Err(HermitianError::WrongSignature { positive: 3, negative: 0 })
        ));
    }

    #[test]
    fn diagonal_profile_example() {
        let s = HermitianSpace::standard(2).unwrap();
        let a = random_su(0, &s, SuProfile::DiagonalImaginary).unwrap();
        let m = a.matrix();
        for i in 0..3 {
            assert_eq!(m[(i, i)].re, 0.0);
            for j in 0..3 {
                if i != j {
                    assert_eq!(m[(i, j)], c(0.0, 0.0));
                }
            }
        }
        assert!(trace(m).norm() < 1e-15);
    }

    #[test]
    fn split_real_profile_has_real_pair() {
        let s = HermitianSpace::standard(2).unwrap();
        let a = random_su(4, &s, SuProfile::SplitReal).unwrap();
        let eig = nalgebra::Schur::new(a.matrix().clone()).eigenvalues().unwrap();
        let lam = eig.iter().copied().max_by(|x, y| x.re.total_cmp(&y.re)).unwrap();
        assert!(lam.re > 0.29);
        assert!(eig.iter().any(|mu| (mu + lam.conj()).norm() < 1e-8));
    }

    #[test]
    fn jordan3_needs_two_spacelike_directions() {
        let s = HermitianSpace::standard(1).unwrap();
        assert!(matches!(random_su(1, &s, SuProfile::Jordan3), Err(HermitianError::UnsupportedProfile { .. })));
    }

    #[test]
    fn profiles_parse() {
        assert_eq!("jordan2-".parse::<SuProfile>().unwrap(), SuProfile::Jordan2 { epsilon: -1 });
        assert!("nope".parse::<SuProfile>().is_err());
    }
}
