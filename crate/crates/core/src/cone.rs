//! The cone of null lines in `C^{n,1}` modelled on `C^n \ 0`, the section `Σ`
//! cut out by a diagonal generator, its contact distribution, and the local
//! quotient by the generator's flow.
//!
//! Real tangent vectors live in `R^{2n}` with interleaved coordinates, so
//! `J` is multiplication by `i` and `(X, Y)` is the flat inner product.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curvature::{curvature_from_rho, CurvatureError, CurvatureTensor, KaehlerModel};
use crate::json::vector_pairs;
use crate::linalg::{c, complex_structure, complexify_vec, cvec_norm, realify, realify_vec, real_orthogonal_complement, trace, CMat, CVec, RMat, RVec};
use crate::numgeom::{riemann, ChartMetric, NumGeomError};
use crate::rng::SeededRng;

pub const MEMBERSHIP_TOL: f64 = 1e-10;
pub const TRANSVERSALITY_TOL: f64 = 1e-6;
pub const NULL_TOL: f64 = 1e-10;
/// The quotient metric is `2 g_Σ` on horizontal lifts.
pub const QUOTIENT_METRIC_SCALE: f64 = 2.0;
/// Finite-difference curvature of the quotient equals this sign times the template.
pub const TEMPLATE_CURVATURE_SIGN: f64 = -1.0;

const SAMPLE_ATTEMPTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum ConeError {
    #[error("the section is empty: no coefficient of the quadric is positive")]
    EmptySection,
    #[error("generator is tangent to the contact distribution (lambda(xi) = {value:e})")]
    TangencyError { value: f64 },
    #[error("point is off the section (residual {residual:e})")]
    NotOnSection { residual: f64 },
    #[error("vector is not null (|h(y,y)| = {residual:e})")]
    NotNull { residual: f64 },
    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },
    #[error("generator is not diagonal with imaginary entries (defect {defect:e})")]
    NotDiagonal { defect: f64 },
    #[error("zero vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quotient chart failure: {reason}")]
    ChartFailure { reason: String },
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error(transparent)]
    NumGeom(#[from] NumGeomError),
}

/// Which sign of the section equation is used.
///
/// `Paper` takes `Σ (λ_j + σ)|p_j|² = 1` with generator `-A'`; `Flipped` takes
/// `Σ (λ_j + σ)|p_j|² = -1` with generator `A'`, where `A' = A + tr(A) I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SigmaConvention {
    Paper,
    #[default]
    Flipped,
}

impl FromStr for SigmaConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(Self::Paper),
            "flipped" => Ok(Self::Flipped),
            other => Err(format!("unknown sigma convention {other:?} (expected paper or flipped)")),
        }
    }
}

impl fmt::Display for SigmaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Paper => "paper",
            Self::Flipped => "flipped",
        })
    }
}

/// Diagonal generator `A = diag(iλ_1, …, iλ_n)` acting on `C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeModel {
    lambdas: Vec<f64>,
    sigma: f64,
    convention: SigmaConvention,
    section: RMat,
    j: RMat,
}

impl ConeModel {
    pub fn new(lambdas: Vec<f64>, convention: SigmaConvention) -> Result<Self, ConeError> {
        if lambdas.is_empty() {
            return Err(ConeError::DimensionMismatch { expected: 1, got: 0 });
        }
        let sigma: f64 = lambdas.iter().sum();
        let n = lambdas.len();
        let sign = match convention {
            SigmaConvention::Paper => -1.0,
            SigmaConvention::Flipped => 1.0,
        };
        let action = CMat::from_diagonal(&CVec::from_iterator(n, lambdas.iter().map(|l| c(0.0, sign * (l + sigma)))));
        Ok(Self { section: realify(&action), j: complex_structure(n), lambdas, sigma, convention })
    }

    /// The model over `C^{n+1}` whose quotient is `CP^n`: all `λ_j = -1/(2(n+2))`.
    pub fn cpn(n: usize, convention: SigmaConvention) -> Self {
        let lambda = -1.0 / (2.0 * (n as f64 + 2.0));
        Self::new(vec![lambda; n + 1], convention).expect("n + 1 >= 1 coefficients")
    }

    pub fn from_generator(a: &CMat, convention: SigmaConvention) -> Result<Self, ConeError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(ConeError::DimensionMismatch { expected: n, got: a.ncols() });
        }
        let mut defect: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let z = a[(i, j)];
                defect = defect.max(if i == j { z.re.abs() } else { z.norm() });
            }
        }
        if defect > 1e-12 * a.norm().max(1.0) {
            return Err(ConeError::NotDiagonal { defect });
        }
        Self::new((0..n).map(|i| a[(i, i)].im).collect(), convention)
    }

    /// Random coefficients in `[-1, 1]` with a nonempty, non-degenerate section.
    pub fn random(rng: &mut SeededRng, n: usize, convention: SigmaConvention) -> Self {
        loop {
            let lambdas: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let model = Self::new(lambdas, convention).expect("n >= 1");
            let q = model.quadric();
            let top = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if top >= 0.2 && q.iter().all(|v| v.abs() >= 0.05) {
                return model;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn convention(&self) -> SigmaConvention {
        self.convention
    }

    pub fn generator(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(self.n(), self.lambdas.iter().map(|l| c(0.0, *l))))
    }

    /// `A + tr(A) I = diag(i(λ_j + σ))`, the action of the generator on the sphere.
    pub fn action_matrix(&self) -> CMat {
        let a = self.generator();
        let t = trace(&a);
        &a + CMat::identity(self.n(), self.n()) * t
    }

    /// `λ_j + σ`.
    pub fn coefficients(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l + self.sigma).collect()
    }

    /// Coefficients `c_j` with `Σ = { Σ c_j |p_j|² = 1 }` in the active convention.
    pub fn quadric(&self) -> Vec<f64> {
        let sign = match self.convention {
            SigmaConvention::Paper => 1.0,
            SigmaConvention::Flipped => -1.0,
        };
        self.coefficients().into_iter().map(|m| sign * m).collect()
    }

    /// Real matrix of the generator whose flow preserves `Σ`.
    pub fn section_matrix(&self) -> &RMat {
        &self.section
    }

    pub fn complex_structure(&self) -> &RMat {
        &self.j
    }

    /// `Q(x) = (x, A0 J x)`; the section is `Q = 1`.
    pub fn quadric_value(&self, x: &RVec) -> f64 {
        x.dot(&(&self.section * (&self.j * x)))
    }

    pub fn membership(&self, p: &CVec) -> Result<f64, ConeError> {
        self.check_len(p.len())?;
        Ok((self.quadric_value(&realify_vec(p)) - 1.0).abs())
    }

    /// Radius when the section is a round sphere.
    pub fn radius(&self) -> Option<f64> {
        let q = self.quadric();
        let first = q[0];
        (first > 0.0 && q.iter().all(|v| (v - first).abs() <= 1e-14 * first.abs())).then(|| 1.0 / first.sqrt())
    }

    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<CVec>, ConeError> {
        let q = self.quadric();
        let top = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top <= 0.0 {
            return Err(ConeError::EmptySection);
        }
        let mut rng = SeededRng::derive(seed, 0x5167_a000);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            if attempts > SAMPLE_ATTEMPTS * count.max(1) {
                return Err(ConeError::ChartFailure { reason: "rejection sampling of the section did not converge".into() });
            }
            let x = rng.real_vector(2 * self.n());
            let value = self.quadric_value(&x);
            if value > 0.25 * top * x.norm_squared() {
                out.push(complexify_vec(&(x / value.sqrt())));
            }
        }
        Ok(out)
    }

    fn check_len(&self, len: usize) -> Result<(), ConeError> {
        if len != self.n() {
            return Err(ConeError::DimensionMismatch { expected: self.n(), got: len });
        }
        Ok(())
    }
}

/// The representative `(x, |x|)` of a cone point.
pub fn lift(x: &CVec) -> CVec {
    let n = x.len();
    CVec::from_fn(n + 1, |k, _| if k < n { x[k] } else { c(cvec_norm(x), 0.0) })
}

/// Rotates a null vector so its last coordinate is real positive and drops that coordinate.
pub fn cone_rep(y: &CVec) -> Result<CVec, ConeError> {
    let n = y.len().checked_sub(1).filter(|&n| n > 0).ok_or(ConeError::DimensionMismatch { expected: 2, got: y.len() })?;
    let size = y.norm_squared();
    if size == 0.0 {
        return Err(ConeError::ZeroVector);
    }
    let h: f64 = y.rows(0, n).norm_squared() - y[n].norm_sqr();
    if h.abs() > NULL_TOL * size {
        return Err(ConeError::NotNull { residual: h.abs() });
    }
    let phase = y[n].conj() / y[n].norm();
    Ok(y.rows(0, n).map(|z| z * phase))
}

pub fn sphere_proj(x: &CVec) -> Result<CVec, ConeError> {
    let norm = cvec_norm(x);
    if norm == 0.0 {
        return Err(ConeError::ZeroVector);
    }
    Ok(x.unscale(norm))
}

/// `det(G) G x` for unitary `G`.
pub fn group_action(g: &CMat, x: &CVec) -> Result<CVec, ConeError> {
    let n = x.len();
    if g.shape() != (n, n) {
        return Err(ConeError::DimensionMismatch { expected: n, got: g.nrows() });
    }
    let residual = (g.adjoint() * g - CMat::identity(n, n)).norm();
    if residual > 1e-10 {
        return Err(ConeError::NotUnitary { residual });
    }
    Ok(g * x * g.determinant())
}

/// `(tr(A) I + A) x`.
pub fn algebra_action(a: &CMat, x: &CVec) -> CVec {
    a * x + x * trace(a)
}

/// `Ω(X, Y) = (X, J Y)` on `R^{2n}`.
pub fn omega(x: &RVec, y: &RVec) -> f64 {
    x.dot(&(complex_structure(x.len() / 2) * y))
}

/// `λ_x(v) = Ω(E0(x), v)` with Euler field `E0(x) = x / 2`, so that `dλ = Ω`.
pub fn lambda_form(x: &RVec, v: &RVec) -> f64 {
    0.5 * omega(x, v)
}

/// `g_Σ(X, Y) = (X, Y) - (X, p)(Y, p) / |p|²`.
pub fn induced_metric(p: &RVec, x: &RVec, y: &RVec) -> f64 {
    x.dot(y) - x.dot(p) * y.dot(p) / p.norm_squared()
}

/// `J_M X = J X - (X, A0 p) p - (X, p)/|p|² J p`.
pub fn j_m(model: &ConeModel, p: &RVec, x: &RVec) -> RVec {
    let j = model.complex_structure();
    let a0p = model.section_matrix() * p;
    j * x - p * x.dot(&a0p) - (j * p) * (x.dot(p) / p.norm_squared())
}

/// `ρ X = A0 X + g_Σ(X, ξ0) η + g_Σ(X, A0² J p) p` with `ξ0 = A0 p`, `η = A0 J p - |A0 p|² p`.
pub fn rho_map(model: &ConeModel, p: &RVec, x: &RVec) -> RVec {
    let a0 = model.section_matrix();
    let j = model.complex_structure();
    let xi = a0 * p;
    let eta = a0 * (j * p) - p * xi.norm_squared();
    let a0a0jp = a0 * (a0 * (j * p));
    a0 * x + eta * induced_metric(p, x, &xi) + p * induced_metric(p, x, &a0a0jp)
}

/// `g_Σ`-orthonormal basis `(v_1, J_M v_1, v_2, J_M v_2, …)` of the contact distribution at `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionFrame {
    #[serde(serialize_with = "serialize_real_point")]
    pub point: RVec,
    #[serde(skip)]
    pub basis: Vec<RVec>,
    /// `λ(ξ0)` at the point.
    pub transversality: f64,
    /// Smallest norm met while orthonormalizing; small values flag a degenerate frame.
    pub conditioning: f64,
}

fn serialize_real_point<S: serde::Serializer>(p: &RVec, s: S) -> Result<S::Ok, S::Error> {
    vector_pairs(&complexify_vec(p)).serialize(s)
}

impl DistributionFrame {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix(&self) -> RMat {
        RMat::from_columns(&self.basis)
    }

    /// Matrix `[g_Σ(E_a, op(E_b))]` of an endomorphism of the distribution.
    pub fn represent(&self, op: impl Fn(&RVec) -> RVec) -> RMat {
        let d = self.dim();
        let images: Vec<RVec> = self.basis.iter().map(&op).collect();
        RMat::from_fn(d, d, |a, b| induced_metric(&self.point, &self.basis[a], &images[b]))
    }
}

pub fn contact_frame(model: &ConeModel, p: &CVec) -> Result<DistributionFrame, ConeError> {
    let residual = model.membership(p)?;
    if residual > 1e-8 {
        return Err(ConeError::NotOnSection { residual });
    }
    let x = realify_vec(p);
    let j = model.complex_structure();
    let a0 = model.section_matrix();
    let transversality = lambda_form(&x, &(a0 * &x));
    if transversality.abs() < TRANSVERSALITY_TOL {
        return Err(ConeError::TangencyError { value: transversality });
    }
    let flat = real_orthogonal_complement(&[j * &x, j * (a0 * &x)], 2 * model.n());
    let mut pending: Vec<RVec> = flat.column_iter().map(|col| col.into_owned()).collect();
    pending.reverse();
    let target = 2 * model.n() - 2;
    let mut basis: Vec<RVec> = Vec::with_capacity(target);
    let mut conditioning = f64::INFINITY;
    let orthogonalize = |v: RVec, basis: &[RVec]| basis.iter().fold(v, |acc, e| &acc - e * induced_metric(&x, &acc, e));
    while basis.len() < target {
        let v = pending.pop().ok_or(ConeError::TangencyError { value: transversality })?;
        let v = orthogonalize(v, &basis);
        let nv = induced_metric(&x, &v, &v).max(0.0).sqrt();
        if nv < 1e-8 {
            continue;
        }
        let v = v / nv;
        let w = orthogonalize(j_m(model, &x, &v), &basis);
        let nw = induced_metric(&x, &w, &w).max(0.0).sqrt();
        if nw < 1e-8 {
            return Err(ConeError::TangencyError { value: transversality });
        }
        conditioning = conditioning.min(nv).min(nw);
        basis.push(v);
        basis.push(w / nw);
    }
    Ok(DistributionFrame { point: x, basis, transversality, conditioning: if target == 0 { 1.0 } else { conditioning } })
}

/// Local chart of the leaf space `Σ / exp(t A0)` near a point, parametrized by the contact frame.
pub struct QuotientChart {
    a0: RMat,
    a0j: RMat,
    j: RMat,
    p: RVec,
    frame: RMat,
}

impl QuotientChart {
    pub fn new(model: &ConeModel, frame: &DistributionFrame) -> Self {
        let a0 = model.section_matrix().clone();
        let j = model.complex_structure().clone();
        Self { a0j: &a0 * &j, a0, j, p: frame.point.clone(), frame: frame.matrix() }
    }

    /// The point of `Σ` over chart coordinates `y`.
    pub fn point(&self, y: &[f64]) -> RVec {
        let x = self.affine(y);
        let q = x.dot(&(&self.a0j * &x));
        x / q.sqrt()
    }

    fn affine(&self, y: &[f64]) -> RVec {
        &self.p + &self.frame * RVec::from_column_slice(y)
    }
}

impl ChartMetric for QuotientChart {
    fn dim(&self) -> usize {
        self.frame.ncols()
    }

    fn metric(&self, y: &[f64]) -> RMat {
        let x = self.affine(y);
        let qx = x.dot(&(&self.a0j * &x));
        let root = qx.sqrt();
        let q = &x / root;
        let xi = &self.a0 * &q;
        let jq = &self.j * &q;
        let xi_jq = xi.dot(&jq);
        let a0jx = &self.a0j * &x;
        let horizontal: Vec<RVec> = self
            .frame
            .column_iter()
            .map(|e| {
                let dq = (e.into_owned() - &x * (e.dot(&a0jx) / qx)) / root;
                let s = dq.dot(&jq) / xi_jq;
                dq - &xi * s
            })
            .collect();
        let d = horizontal.len();
        RMat::from_fn(d, d, |a, b| QUOTIENT_METRIC_SCALE * induced_metric(&q, &horizontal[a], &horizontal[b]))
    }

    fn contains(&self, y: &[f64]) -> bool {
        let x = self.affine(y);
        x.dot(&(&self.a0j * &x)) > 0.1
    }
}

/// Structure at one point of the section: `ρ`, `J_M` and `|A0 p|²` in the contact frame.
#[derive(Debug, Clone)]
pub struct PointTemplate {
    pub rho: RMat,
    pub j: RMat,
    pub action_norm_sq: f64,
}

impl PointTemplate {
    pub fn at(model: &ConeModel, frame: &DistributionFrame) -> Self {
        let p = &frame.point;
        Self {
            rho: frame.represent(|x| rho_map(model, p, x)),
            j: frame.represent(|x| j_m(model, p, x)),
            action_norm_sq: (model.section_matrix() * p).norm_squared(),
        }
    }

    /// `a ρ + ¼ |A0 p|² J`.
    pub fn endomorphism(&self, rho_weight: f64) -> RMat {
        &self.rho * rho_weight + &self.j * (0.25 * self.action_norm_sq)
    }

    /// Predicted curvature of the quotient in the orthonormal frame `E / √2`.
    pub fn predicted(&self, rho_weight: f64) -> Result<CurvatureTensor, ConeError> {
        let model = KaehlerModel::new(self.j.nrows() / 2);
        let h = self.endomorphism(rho_weight);
        let h = (&h - h.transpose()) * 0.5;
        Ok(curvature_from_rho(&model, &h)?.scaled(TEMPLATE_CURVATURE_SIGN))
    }
}

/// Finite-difference curvature of the quotient at the frame's point, in the orthonormal frame `E / √2`.
pub fn quotient_curvature(model: &ConeModel, frame: &DistributionFrame, fd_step: f64) -> Result<CurvatureTensor, ConeError> {
    let chart = QuotientChart::new(model, frame);
    let origin = vec![0.0; chart.dim()];
    if !chart.contains(&origin) {
        return Err(ConeError::ChartFailure { reason: "base point leaves the chart".into() });
    }
    let t = riemann(&chart, &origin, fd_step)?;
    let scale = 1.0 / QUOTIENT_METRIC_SCALE;
    Ok(t.scaled(scale * scale))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropPointReport {
    pub point: Vec<[f64; 2]>,
    pub residual: f64,
    pub control_residual: f64,
    pub transversality: f64,
    pub frame_conditioning: f64,
    pub j_frame_defect: f64,
    pub curvature_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropReport {
    pub convention: SigmaConvention,
    pub lambdas: Vec<f64>,
    pub fd_step: f64,
    pub points: Vec<PropPointReport>,
    pub max_residual: f64,
    /// Smallest ratio of control residual to matched residual over the points.
    pub min_control_ratio: f64,
}

fn relative(a: &CurvatureTensor, b: &CurvatureTensor) -> f64 {
    a.sub(b).max_abs() / b.max_abs().max(f64::MIN_POSITIVE)
}

/// Compares the finite-difference curvature of the quotient with the template
/// `½ρ + ¼|A0 p|² J`, and with the control template `ρ + ¼|A0 p|² J`.
pub fn verify_curvature_prop(model: &ConeModel, points: &[CVec], fd_step: f64) -> Result<PropReport, ConeError> {
    let mut reports = Vec::with_capacity(points.len());
    for p in points {
        let frame = contact_frame(model, p)?;
        let measured = quotient_curvature(model, &frame, fd_step)?;
        let template = PointTemplate::at(model, &frame);
        let residual = relative(&measured, &template.predicted(0.5)?);
        let control_residual = relative(&measured, &template.predicted(1.0)?);
        let standard = complex_structure(frame.dim() / 2);
        reports.push(PropPointReport {
            point: vector_pairs(p),
            residual,
            control_residual,
            transversality: frame.transversality,
            frame_conditioning: frame.conditioning,
            j_frame_defect: (&template.j - standard).abs().max(),
            curvature_norm: measured.max_abs(),
        });
    }
    let max_residual = reports.iter().map(|r| r.residual).fold(0.0, f64::max);
    let min_control_ratio =
        reports.iter().map(|r| r.control_residual / r.residual.max(f64::MIN_POSITIVE)).fold(f64::INFINITY, f64::min);
    Ok(PropReport {
        convention: model.convention(),
        lambdas: model.lambdas().to_vec(),
        fd_step,
        points: reports,
        max_residual,
        min_control_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{wedge_j, HermitianSpace};
    use crate::linalg::I;

    fn frame_cases() -> Vec<(ConeModel, CVec)> {
        let mut rng = SeededRng::new(17);
        let mut out = Vec::new();
        for k in 0..25 {
            let convention = if k % 2 == 0 { SigmaConvention::Flipped } else { SigmaConvention::Paper };
            let model = if k % 5 == 0 { ConeModel::cpn(2, SigmaConvention::Flipped) } else { ConeModel::random(&mut rng, 3, convention) };
            for p in model.sample(k as u64, 4).unwrap() {
                out.push((model.clone(), p));
            }
        }
        out
    }

    #[test]
    fn cone_rep_examples() {
        let y = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(cone_rep(&y).unwrap(), CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let yi = &y * I;
        assert!((cone_rep(&yi).unwrap() - CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])).norm() < 1e-15);
        assert!(matches!(cone_rep(&CVec::from_vec(vec![c(1.0, 0.0), c(2.0, 0.0)])), Err(ConeError::NotNull { .. })));
        assert!(matches!(cone_rep(&CVec::zeros(3)), Err(ConeError::ZeroVector)));
    }

    #[test]
    fn cone_rep_round_trip_through_wedge() {
        let mut rng = SeededRng::new(4);
        let space = HermitianSpace::standard(3).unwrap();
        for _ in 0..10 {
            let x = rng.complex_vector(3);
            let t = rng.uniform(0.0, std::f64::consts::TAU);
            let y = lift(&x) * c(t.cos(), t.sin());
            let back = lift(&cone_rep(&y).unwrap());
            let diff = wedge_j(&back, &space).unwrap() - wedge_j(&y, &space).unwrap();
            assert!(diff.norm() < 1e-12);
        }
    }

    #[test]
    fn sphere_projection() {
        let x = CVec::from_vec(vec![c(2.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(sphere_proj(&x).unwrap(), CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let y = CVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let s = 1.0 / 2f64.sqrt();
        assert!((sphere_proj(&y).unwrap() - CVec::from_vec(vec![c(s, 0.0), c(s, 0.0)])).norm() < 1e-15);
        let mut rng = SeededRng::new(8);
        let z = rng.complex_vector(3);
        let base = sphere_proj(&z).unwrap();
        for _ in 0..20 {
            let scaled = &z * c(rng.uniform(0.1, 10.0), 0.0);
            assert!((sphere_proj(&scaled).unwrap() - &base).norm() < 1e-14);
        }
        assert!(matches!(sphere_proj(&CVec::zeros(2)), Err(ConeError::ZeroVector)));
    }

    #[test]
    fn group_and_algebra_actions() {
        let mut rng = SeededRng::new(9);
        let x = rng.complex_vector(3);
        assert_eq!(group_action(&CMat::identity(3, 3), &x).unwrap(), x);
        let theta: f64 = 0.7;
        let mut g = CMat::identity(3, 3);
        g[(0, 0)] = c(theta.cos(), theta.sin());
        let gx = group_action(&g, &x).unwrap();
        let ratio0 = gx[0] / x[0];
        let ratio1 = gx[1] / x[1];
        assert!((ratio0 - c((2.0 * theta).cos(), (2.0 * theta).sin())).norm() < 1e-14);
        assert!((ratio1 - c(theta.cos(), theta.sin())).norm() < 1e-14);
        assert!(matches!(group_action(&(CMat::identity(3, 3) * c(2.0, 0.0)), &x), Err(ConeError::NotUnitary { .. })));

        assert_eq!(algebra_action(&CMat::zeros(3, 3), &x), CVec::zeros(3));
        let scalar = algebra_action(&(CMat::identity(3, 3) * I), &x);
        assert!((scalar - &x * c(0.0, 4.0)).norm() < 1e-14);

        let a = rng.skew_hermitian(3);
        let h = 1e-6;
        let plus = group_action(&(&a * c(h, 0.0)).exp(), &x).unwrap();
        let minus = group_action(&(&a * c(-h, 0.0)).exp(), &x).unwrap();
        let derivative = (plus - minus) / c(2.0 * h, 0.0);
        assert!((derivative - algebra_action(&a, &x)).norm() < 1e-8);
    }

    #[test]
    fn diagonal_generator_acts_by_shifted_coefficients() {
        let model = ConeModel::new(vec![0.3, -0.1, 0.5], SigmaConvention::Flipped).unwrap();
        let x = CVec::from_vec(vec![c(1.0, 2.0), c(-0.5, 0.1), c(0.2, 0.2)]);
        let got = algebra_action(&model.generator(), &x);
        for (k, mu) in model.coefficients().iter().enumerate() {
            assert!((got[k] - x[k] * c(0.0, *mu)).norm() < 1e-15);
        }
        assert!((model.action_matrix() * &x - got).norm() < 1e-15);
    }

    #[test]
    fn equivariance_of_representatives() {
        let mut rng = SeededRng::new(12);
        for _ in 0..10 {
            let g = (rng.skew_hermitian(2) * c(0.8, 0.0)).exp();
            let x = rng.complex_vector(2);
            let mut big = CMat::zeros(3, 3);
            big.view_mut((0, 0), (2, 2)).copy_from(&g);
            big[(2, 2)] = c(1.0, 0.0) / g.determinant();
            let moved = cone_rep(&(big * lift(&x))).unwrap();
            assert!((moved - group_action(&g, &x).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn section_sampling_and_emptiness() {
        let model = ConeModel::new(vec![1.0, 0.0], SigmaConvention::Paper).unwrap();
        assert_eq!(model.quadric(), vec![2.0, 1.0]);
        let p = CVec::from_vec(vec![c(1.0 / (2f64.sqrt() * 2f64.sqrt()), 0.0), c(1.0 / 2f64.sqrt(), 0.0)]);
        assert!(model.membership(&p).unwrap() < 1e-15);
        for p in model.sample(3, 20).unwrap() {
            assert!(model.membership(&p).unwrap() <= 1e-12);
        }
        let empty = ConeModel::new(vec![1.0, 0.0], SigmaConvention::Flipped).unwrap();
        assert_eq!(empty.sample(1, 1), Err(ConeError::EmptySection));
        assert_eq!(ConeModel::cpn(2, SigmaConvention::Paper).sample(1, 1), Err(ConeError::EmptySection));
    }

    #[test]
    fn cpn_section_is_round_sphere() {
        for n in 1..4 {
            let model = ConeModel::cpn(n, SigmaConvention::Flipped);
            assert!(model.coefficients().iter().all(|m| (m + 0.5).abs() < 1e-15));
            let r = model.radius().unwrap();
            assert!((r - 2f64.sqrt()).abs() < 1e-15);
            for p in model.sample(5, 10).unwrap() {
                assert!((cvec_norm(&p) - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_at_coordinate_point() {
        let model = ConeModel::cpn(2, SigmaConvention::Flipped);
        let p = CVec::from_vec(vec![c(2f64.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let frame = contact_frame(&model, &p).unwrap();
        assert_eq!(frame.dim(), 4);
        for v in &frame.basis {
            assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
        }
        assert!((frame.transversality - 0.5).abs() < 1e-12);
    }

    #[test]
    fn frame_satisfies_distribution_constraints() {
        for (model, p) in frame_cases() {
            let frame = contact_frame(&model, &p).unwrap();
            assert_eq!(frame.dim(), 2 * model.n() - 2);
            let x = &frame.point;
            let j = model.complex_structure();
            let jp = j * x;
            let ja0p = j * (model.section_matrix() * x);
            for v in &frame.basis {
                assert!(v.dot(&jp).abs() < 1e-10 && v.dot(&ja0p).abs() < 1e-10);
            }
            let gram = frame.represent(|v| v.clone());
            assert!((gram - RMat::identity(frame.dim(), frame.dim())).abs().max() < 1e-10);
        }
    }

    #[test]
    fn j_m_rho_and_metric_on_distribution() {
        let mut rng = SeededRng::new(21);
        for (model, p) in frame_cases() {
            let frame = contact_frame(&model, &p).unwrap();
            let x = &frame.point;
            let t = PointTemplate::at(&model, &frame);
            let d = frame.dim();
            assert!((&t.j * &t.j + RMat::identity(d, d)).abs().max() < 1e-9);
            assert!((&t.j + t.j.transpose()).abs().max() < 1e-9);
            assert!((&t.rho + t.rho.transpose()).abs().max() < 1e-9);
            assert!((&t.rho * &t.j - &t.j * &t.rho).abs().max() < 1e-9);
            let j = model.complex_structure();
            let a0p = model.section_matrix() * x;
            let special = real_orthogonal_complement(&[j * x, j * &a0p, x.clone(), a0p.clone()], x.len()).column(0).into_owned();
            assert!((j_m(&model, x, &special) - j * &special).norm() < 1e-12);
            for v in &frame.basis {
                let jj = j_m(&model, x, &j_m(&model, x, v));
                assert!((jj + v).norm() < 1e-10);
                let image = rho_map(&model, x, v);
                let back: RVec = frame.basis.iter().fold(RVec::zeros(x.len()), |acc, e| acc + e * induced_metric(x, e, &image));
                assert!((back - &image).norm() < 1e-9, "rho leaves the distribution");
                for w in &frame.basis {
                    let lhs = induced_metric(x, &rho_map(&model, x, v), w);
                    let rhs = (model.section_matrix() * v).dot(w);
                    assert!((lhs - rhs).abs() < 1e-9);
                }
            }
            for _ in 0..2 {
                let a = frame.matrix() * rng.real_vector(d);
                let b = frame.matrix() * rng.real_vector(d);
                let lhs = induced_metric(x, &j_m(&model, x, &a), &j_m(&model, x, &b));
                assert!((lhs - induced_metric(x, &a, &b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn induced_metric_degenerates_radially() {
        let p = RVec::from_vec(vec![1.0, 0.5, -0.2, 0.3]);
        assert!(induced_metric(&p, &p, &p).abs() < 1e-15);
        let v = RVec::from_vec(vec![0.0, 0.0, 0.3, 0.2]);
        let w = &v - &p * (v.dot(&p) / p.norm_squared());
        assert!((induced_metric(&p, &w, &w) - w.norm_squared()).abs() < 1e-15);
    }

    #[test]
    fn lambda_form_is_homogeneous_primitive() {
        let mut rng = SeededRng::new(31);
        let h = 1e-5;
        for _ in 0..10 {
            let x = rng.real_vector(6);
            let u = rng.real_vector(6);
            let w = rng.real_vector(6);
            // dλ(u, w) = u(λ(w)) - w(λ(u)) for constant fields.
            let du = (lambda_form(&(&x + &u * h), &w) - lambda_form(&(&x - &u * h), &w)) / (2.0 * h);
            let dw = (lambda_form(&(&x + &w * h), &u) - lambda_form(&(&x - &w * h), &u)) / (2.0 * h);
            assert!((du - dw - omega(&u, &w)).abs() < 1e-9);
            // L_E λ (w) = E(λ(w)) + λ(∇_w E) with E = x/2.
            let e = &x * 0.5;
            let de = (lambda_form(&(&x + &e * h), &w) - lambda_form(&(&x - &e * h), &w)) / (2.0 * h);
            assert!((de + lambda_form(&x, &(&w * 0.5)) - lambda_form(&x, &w)).abs() < 1e-9);
            assert_eq!(lambda_form(&x, &x), 0.0);
        }
    }

    #[test]
    fn off_section_points_are_rejected() {
        let model = ConeModel::cpn(1, SigmaConvention::Flipped);
        let p = CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(contact_frame(&model, &p), Err(ConeError::NotOnSection { .. })));
    }

    #[test]
    fn curvature_matches_template_on_cpn() {
        let model = ConeModel::cpn(2, SigmaConvention::Flipped);
        let points = model.sample(1, 3).unwrap();
        let report = verify_curvature_prop(&model, &points, 1e-4).unwrap();
        assert!(report.max_residual <= 1e-3, "{report:?}");
        assert!(report.min_control_ratio >= 10.0);
        let frame = contact_frame(&model, &points[0]).unwrap();
        let t = quotient_curvature(&model, &frame, 1e-4).unwrap();
        let j = complex_structure(2);
        let mut rng = SeededRng::new(2);
        for _ in 0..5 {
            let k = t.holomorphic_sectional(&j, &rng.unit_real_vector(4)).unwrap();
            assert!((k - 1.0).abs() < 1e-4, "{k}");
        }
    }

    #[test]
    fn curvature_matches_template_on_random_models() {
        let mut rng = SeededRng::new(77);
        for convention in [SigmaConvention::Flipped, SigmaConvention::Paper] {
            let model = ConeModel::random(&mut rng, 3, convention);
            let points = model.sample(2, 3).unwrap();
            let report = verify_curvature_prop(&model, &points, 1e-4).unwrap();
            assert!(report.max_residual <= 1e-3, "{report:?}");
            assert!(report.min_control_ratio >= 10.0, "{report:?}");
        }
    }

    #[test]
    fn curvature_scales_with_generator() {
        let base = ConeModel::cpn(2, SigmaConvention::Flipped);
        let scaled = ConeModel::new(base.lambdas().iter().map(|l| 0.25 * l).collect(), SigmaConvention::Flipped).unwrap();
        let j = complex_structure(2);
        let e = RVec::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        let k = |m: &ConeModel| {
            let p = m.sample(6, 1).unwrap().remove(0);
            let frame = contact_frame(m, &p).unwrap();
            quotient_curvature(m, &frame, 1e-4).unwrap().holomorphic_sectional(&j, &e).unwrap()
        };
        assert!((k(&scaled) / k(&base) - 0.25).abs() < 1e-4);
    }

    #[test]
    fn convention_parses() {
        assert_eq!("paper".parse::<SigmaConvention>().unwrap(), SigmaConvention::Paper);
        assert_eq!("flipped".parse::<SigmaConvention>().unwrap(), SigmaConvention::Flipped);
        assert!("other".parse::<SigmaConvention>().is_err());
        assert_eq!(SigmaConvention::default().to_string(), "flipped");
    }

    #[test]
    fn generator_must_be_diagonal() {
        let mut a = CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, 0.2), c(0.0, -0.4)]));
        let model = ConeModel::from_generator(&a, SigmaConvention::Paper).unwrap();
        assert_eq!(model.lambdas(), &[0.2, -0.4]);
        a[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(ConeModel::from_generator(&a, SigmaConvention::Paper), Err(ConeError::NotDiagonal { .. })));
    }
}
