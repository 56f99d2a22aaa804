//! Finite-difference Riemannian geometry on coordinate charts.
//!
//! Everything here is computed from metric samples only: Christoffel symbols by
//! central differences of `g_ij`, curvature by central differences of the
//! Christoffel symbols. Curvature follows `R(X,Y) = ∇_X∇_Y - ∇_Y∇_X - ∇_[X,Y]`,
//! so round spheres have sectional curvature `+1`.

use nalgebra::SymmetricEigen;
use serde::Serialize;
use thiserror::Error;

use crate::curvature::CurvatureTensor;
use crate::linalg::{RMat, RVec};

pub const DEFAULT_STEP: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum NumGeomError {
    #[error("point is closer than {margin:e} to the chart boundary")]
    BoundaryViolation { point: Vec<f64>, margin: f64 },
    #[error("metric is not positive definite at the sample point")]
    NotPositiveDefinite,
    #[error("vectors span a degenerate plane")]
    DegeneratePlane,
    #[error("embedding is not an immersion (tangent Gram eigenvalue {eigenvalue:e})")]
    RankDeficient { eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A metric field `g_ij(p)` on an open subset of `R^dim`.
pub trait ChartMetric {
    fn dim(&self) -> usize;
    fn metric(&self, p: &[f64]) -> RMat;
    fn contains(&self, _p: &[f64]) -> bool {
        true
    }
}

impl<T: ChartMetric + ?Sized> ChartMetric for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn metric(&self, p: &[f64]) -> RMat {
        (**self).metric(p)
    }
    fn contains(&self, p: &[f64]) -> bool {
        (**self).contains(p)
    }
}

/// Chart built from closures.
pub struct FnChart<F, D> {
    dim: usize,
    eval: F,
    domain: D,
}

impl<F: Fn(&[f64]) -> RMat, D: Fn(&[f64]) -> bool> FnChart<F, D> {
    pub fn new(dim: usize, eval: F, domain: D) -> Self {
        Self { dim, eval, domain }
    }
}

impl<F: Fn(&[f64]) -> RMat, D: Fn(&[f64]) -> bool> ChartMetric for FnChart<F, D> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn metric(&self, p: &[f64]) -> RMat {
        (self.eval)(p)
    }
    fn contains(&self, p: &[f64]) -> bool {
        (self.domain)(p)
    }
}

/// Flat `R^dim`.
pub struct Euclidean(pub usize);

impl ChartMetric for Euclidean {
    fn dim(&self) -> usize {
        self.0
    }
    fn metric(&self, _p: &[f64]) -> RMat {
        RMat::identity(self.0, self.0)
    }
}

/// Cone metric `t² g ⊕ dt²` on `base × R_+`; the last coordinate is `t`.
pub struct ConeChart<C> {
    base: C,
}

pub fn cone_metric_chart<C: ChartMetric>(base: C) -> ConeChart<C> {
    ConeChart { base }
}

impl<C: ChartMetric> ChartMetric for ConeChart<C> {
    fn dim(&self) -> usize {
        self.base.dim() + 1
    }
    fn metric(&self, p: &[f64]) -> RMat {
        let m = self.base.dim();
        let t = p[m];
        let mut g = RMat::zeros(m + 1, m + 1);
        g.view_mut((0, 0), (m, m)).copy_from(&(self.base.metric(&p[..m]) * (t * t)));
        g[(m, m)] = 1.0;
        g
    }
    fn contains(&self, p: &[f64]) -> bool {
        let m = self.base.dim();
        p[m] > 0.0 && self.base.contains(&p[..m])
    }
}

/// `Γ^k_ij` stored at `k*d*d + i*d + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ(x, y)^k = Γ^k_ij x^i y^j`.
    pub fn apply(&self, x: &RVec, y: &RVec) -> RVec {
        let d = self.dim;
        RVec::from_fn(d, |k, _| {
            let mut s = 0.0;
            for i in 0..d {
                for j in 0..d {
                    s += self.get(k, i, j) * x[i] * y[j];
                }
            }
            s
        })
    }

    pub fn max_asymmetry(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    worst = worst.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        worst
    }
}

fn check_margin<C: ChartMetric + ?Sized>(chart: &C, p: &[f64], margin: f64) -> Result<(), NumGeomError> {
    if p.len() != chart.dim() {
        return Err(NumGeomError::DimensionMismatch { expected: chart.dim(), got: p.len() });
    }
    let mut q = p.to_vec();
    let violation = || NumGeomError::BoundaryViolation { point: p.to_vec(), margin };
    if !chart.contains(p) {
        return Err(violation());
    }
    for i in 0..p.len() {
        for s in [-1.0, 1.0] {
            q[i] = p[i] + s * margin;
            if !chart.contains(&q) {
                return Err(violation());
            }
        }
        q[i] = p[i];
    }
    Ok(())
}

fn shifted(p: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[i] += h;
    q
}

fn inverse_metric(g: &RMat) -> Result<RMat, NumGeomError> {
    g.clone().cholesky().map(|ch| ch.inverse()).ok_or(NumGeomError::NotPositiveDefinite)
}

fn christoffel_unchecked<C: ChartMetric + ?Sized>(chart: &C, p: &[f64], step: f64) -> Result<Christoffel, NumGeomError> {
    let d = chart.dim();
    let g_inv = inverse_metric(&chart.metric(p))?;
    let dg: Vec<RMat> =
        (0..d).map(|m| (chart.metric(&shifted(p, m, step)) - chart.metric(&shifted(p, m, -step))) / (2.0 * step)).collect();
    let mut data = vec![0.0; d * d * d];
    for i in 0..d {
        for j in i..d {
            let lowered = RVec::from_fn(d, |l, _| 0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]));
            let raised = &g_inv * lowered;
            for k in 0..d {
                data[(k * d + i) * d + j] = raised[k];
                data[(k * d + j) * d + i] = raised[k];
            }
        }
    }
    Ok(Christoffel { dim: d, data })
}

/// Levi-Civita symbols by central differences; needs a margin of `2·step`.
pub fn christoffel<C: ChartMetric + ?Sized>(chart: &C, p: &[f64], step: f64) -> Result<Christoffel, NumGeomError> {
    check_margin(chart, p, 2.0 * step)?;
    christoffel_unchecked(chart, p, step)
}

/// Everything computed at one point: metric, symbols and both curvature forms.
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub metric: RMat,
    pub christoffel: Christoffel,
    /// `R^l_ijk` at `((l*d + i)*d + j)*d + k`, with `R(e_i, e_j) e_k = R^l_ijk e_l`.
    pub mixed: Vec<f64>,
    pub lowered: CurvatureTensor,
}

impl CurvatureSample {
    pub fn mixed(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.metric.nrows();
        self.mixed[((l * d + i) * d + j) * d + k]
    }
}

/// Curvature from differences of Christoffel symbols; needs a margin of `4·step`.
pub fn curvature_sample<C: ChartMetric + ?Sized>(chart: &C, p: &[f64], step: f64) -> Result<CurvatureSample, NumGeomError> {
    check_margin(chart, p, 4.0 * step)?;
    let d = chart.dim();
    let metric = chart.metric(p);
    let gamma = christoffel_unchecked(chart, p, step)?;
    let plus: Vec<Christoffel> =
        (0..d).map(|m| christoffel_unchecked(chart, &shifted(p, m, step), step)).collect::<Result<_, _>>()?;
    let minus: Vec<Christoffel> =
        (0..d).map(|m| christoffel_unchecked(chart, &shifted(p, m, -step), step)).collect::<Result<_, _>>()?;
    let dgamma = |m: usize, l: usize, a: usize, b: usize| (plus[m].get(l, a, b) - minus[m].get(l, a, b)) / (2.0 * step);
    let mut mixed = vec![0.0; d * d * d * d];
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut v = dgamma(i, l, j, k) - dgamma(j, l, i, k);
                    for m in 0..d {
                        v += gamma.get(l, i, m) * gamma.get(m, j, k) - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    mixed[((l * d + i) * d + j) * d + k] = v;
                }
            }
        }
    }
    let lowered = CurvatureTensor::from_fn(d, |i, j, k, l| (0..d).map(|m| mixed[((m * d + i) * d + j) * d + k] * metric[(m, l)]).sum());
    Ok(CurvatureSample { metric, christoffel: gamma, mixed, lowered })
}

/// Lowered curvature `g(R(e_i, e_j) e_k, e_l)` in chart coordinates.
pub fn riemann<C: ChartMetric + ?Sized>(chart: &C, p: &[f64], step: f64) -> Result<CurvatureTensor, NumGeomError> {
    curvature_sample(chart, p, step).map(|s| s.lowered)
}

/// `g(R(X,Y)Y, X) / (|X|²|Y|² - g(X,Y)²)`.
pub fn sectional<C: ChartMetric + ?Sized>(chart: &C, p: &[f64], x: &RVec, y: &RVec, step: f64) -> Result<f64, NumGeomError> {
    let s = curvature_sample(chart, p, step)?;
    sectional_from(&s.lowered, &s.metric, x, y)
}

pub fn sectional_from(t: &CurvatureTensor, g: &RMat, x: &RVec, y: &RVec) -> Result<f64, NumGeomError> {
    let gxx = x.dot(&(g * x));
    let gyy = y.dot(&(g * y));
    let gxy = x.dot(&(g * y));
    let area = gxx * gyy - gxy * gxy;
    if area <= 1e-12 * gxx * gyy {
        return Err(NumGeomError::DegeneratePlane);
    }
    Ok(t.eval(x, y, y, x) / area)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondFundamentalForm {
    /// `II(∂_a, ∂_b)` as ambient coordinate vectors, row-major over `(a, b)`.
    #[serde(skip)]
    pub components: Vec<RVec>,
    pub sub_dim: usize,
    /// `(Σ_ab |II(E_a, E_b)|²)^{1/2}` over an orthonormal tangent frame `E`.
    pub norm: f64,
}

/// Second fundamental form of `embedding: R^m -> chart` at `u`.
pub fn second_fundamental_form<C, F>(
    ambient: &C,
    embedding: F,
    sub_dim: usize,
    u: &[f64],
    step: f64,
) -> Result<SecondFundamentalForm, NumGeomError>
where
    C: ChartMetric + ?Sized,
    F: Fn(&[f64]) -> RVec,
{
    if u.len() != sub_dim {
        return Err(NumGeomError::DimensionMismatch { expected: sub_dim, got: u.len() });
    }
    let x = embedding(u);
    let gamma = christoffel(ambient, x.as_slice(), step)?;
    let g = ambient.metric(x.as_slice());
    let tangents: Vec<RVec> =
        (0..sub_dim).map(|a| (embedding(&shifted(u, a, step)) - embedding(&shifted(u, a, -step))) / (2.0 * step)).collect();
    let t = RMat::from_columns(&tangents);
    let gram = t.transpose() * &g * &t;
    let eig = SymmetricEigen::new(gram.clone());
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let bottom = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if bottom <= 1e-10 * top.max(f64::MIN_POSITIVE) {
        return Err(NumGeomError::RankDeficient { eigenvalue: bottom });
    }
    let gram_inv = gram.clone().try_inverse().ok_or(NumGeomError::RankDeficient { eigenvalue: bottom })?;
    let project_normal = |v: &RVec| v - &t * (&gram_inv * (t.transpose() * &g * v));
    let mut components = Vec::with_capacity(sub_dim * sub_dim);
    for a in 0..sub_dim {
        for b in 0..sub_dim {
            let second = if a == b {
                (embedding(&shifted(u, a, step)) - &x * 2.0 + embedding(&shifted(u, a, -step))) / (step * step)
            } else {
                let pp = embedding(&shifted(&shifted(u, a, step), b, step));
                let pm = embedding(&shifted(&shifted(u, a, step), b, -step));
                let mp = embedding(&shifted(&shifted(u, a, -step), b, step));
                let mm = embedding(&shifted(&shifted(u, a, -step), b, -step));
                (pp - pm - mp + mm) / (4.0 * step * step)
            };
            let accel = second + gamma.apply(&tangents[a], &tangents[b]);
            components.push(project_normal(&accel));
        }
    }
    // Orthonormal tangent frame: E = T W with W = gram^{-1/2}.
    let w = &eig.eigenvectors * RMat::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt())) * eig.eigenvectors.transpose();
    let mut norm_sq = 0.0;
    for a in 0..sub_dim {
        for b in 0..sub_dim {
            let mut v = RVec::zeros(x.len());
            for c in 0..sub_dim {
                for d in 0..sub_dim {
                    v += &components[c * sub_dim + d] * (w[(c, a)] * w[(d, b)]);
                }
            }
            norm_sq += v.dot(&(&g * &v));
        }
    }
    Ok(SecondFundamentalForm { components, sub_dim, norm: norm_sq.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit `S^2` in the stereographic chart, metric `4/(1+|u|²)² δ`.
    fn sphere2() -> impl ChartMetric {
        FnChart::new(
            2,
            |p: &[f64]| {
                let s = 1.0 + p[0] * p[0] + p[1] * p[1];
                RMat::identity(2, 2) * (4.0 / (s * s))
            },
            |_p: &[f64]| true,
        )
    }

    /// Unit `S^2` in spherical coordinates `(θ, φ)`.
    fn polar_sphere() -> impl ChartMetric {
        FnChart::new(
            2,
            |p: &[f64]| RMat::from_diagonal(&RVec::from_vec(vec![1.0, p[0].sin().powi(2)])),
            |p: &[f64]| p[0] > 0.0 && p[0] < std::f64::consts::PI,
        )
    }

    #[test]
    fn euclidean_is_flat() {
        let chart = Euclidean(3);
        let p = [0.3, -0.2, 1.0];
        let g = christoffel(&chart, &p, DEFAULT_STEP).unwrap();
        assert!(g.data.iter().all(|v| v.abs() < 1e-10));
        assert!(riemann(&chart, &p, DEFAULT_STEP).unwrap().max_abs() < 1e-10);
        let x = RVec::from_vec(vec![1.0, 0.0, 0.0]);
        let y = RVec::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(sectional(&chart, &p, &x, &y, DEFAULT_STEP).unwrap().abs() < 1e-10);
    }

    #[test]
    fn sphere_christoffels_match_closed_form() {
        let chart = sphere2();
        let p = [0.4, -0.3];
        let g = christoffel(&chart, &p, 1e-4).unwrap();
        let s = 1.0 + p[0] * p[0] + p[1] * p[1];
        let dphi = [-2.0 * p[0] / s, -2.0 * p[1] / s];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let exact = delta(i, k) * dphi[j] + delta(j, k) * dphi[i] - delta(i, j) * dphi[k];
                    assert!((g.get(k, i, j) - exact).abs() < 1e-7);
                }
            }
        }
        assert_eq!(g.max_asymmetry(), 0.0);
    }

    #[test]
    fn sphere_sectional_curvature() {
        let chart = sphere2();
        let p = [0.2, 0.5];
        let x = RVec::from_vec(vec![1.0, 0.0]);
        let y = RVec::from_vec(vec![0.3, 1.0]);
        let k = sectional(&chart, &p, &x, &y, 1e-4).unwrap();
        assert!((k - 1.0).abs() < 1e-4);
        let k2 = sectional(&chart, &p, &(&x * 2.0), &y, 1e-4).unwrap();
        assert!((k - k2).abs() < 1e-12);
        let t = riemann(&chart, &p, 1e-4).unwrap();
        assert!(t.symmetry_residuals(None).max_riemannian() < 1e-6);
        assert!(matches!(sectional(&chart, &p, &x, &(&x * 3.0), 1e-4), Err(NumGeomError::DegeneratePlane)));
    }

    #[test]
    fn convergence_is_second_order() {
        let chart = sphere2();
        let p = [0.3, 0.1];
        let x = RVec::from_vec(vec![1.0, 0.0]);
        let y = RVec::from_vec(vec![0.0, 1.0]);
        let e1 = (sectional(&chart, &p, &x, &y, 2e-2).unwrap() - 1.0).abs();
        let e2 = (sectional(&chart, &p, &x, &y, 1e-2).unwrap() - 1.0).abs();
        let ratio = e1 / e2;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn boundary_is_enforced() {
        let chart = polar_sphere();
        assert!(matches!(christoffel(&chart, &[1e-5, 0.0], 1e-4), Err(NumGeomError::BoundaryViolation { .. })));
        assert!(matches!(riemann(&chart, &[3e-4, 0.0], 1e-4), Err(NumGeomError::BoundaryViolation { .. })));
    }

    #[test]
    fn linear_subspace_of_flat_space() {
        let ff = second_fundamental_form(&Euclidean(3), |u: &[f64]| RVec::from_vec(vec![u[0], u[1], 0.5]), 2, &[0.1, 0.2], 1e-4)
            .unwrap();
        assert!(ff.norm < 1e-8);
    }

    #[test]
    fn circles_on_the_sphere() {
        let chart = polar_sphere();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let equator = second_fundamental_form(&chart, |u: &[f64]| RVec::from_vec(vec![half_pi, u[0]]), 1, &[0.4], 1e-4).unwrap();
        assert!(equator.norm < 1e-6);
        let theta0 = half_pi - 0.3;
        let small = second_fundamental_form(&chart, |u: &[f64]| RVec::from_vec(vec![theta0, u[0]]), 1, &[0.4], 1e-4).unwrap();
        assert!((small.norm - 0.3_f64.tan()).abs() < 1e-6, "{}", small.norm);
    }

    #[test]
    fn cone_over_flat_line_and_plane() {
        // Cone over a flat circle of length 2π is the flat plane; over flat R^2 it is curved.
        let line = cone_metric_chart(Euclidean(1));
        assert!(riemann(&line, &[0.2, 1.0], 1e-4).unwrap().max_abs() < 1e-7);
        let plane = cone_metric_chart(Euclidean(2));
        assert!(riemann(&plane, &[0.2, 0.1, 1.0], 1e-4).unwrap().max_abs() > 0.1);
        assert!(matches!(christoffel(&plane, &[0.0, 0.0, -1.0], 1e-4), Err(NumGeomError::BoundaryViolation { .. })));
    }

    #[test]
    fn rank_deficient_embedding() {
        let err = second_fundamental_form(&Euclidean(2), |u: &[f64]| RVec::from_vec(vec![u[0], u[0]]), 2, &[0.0, 0.0], 1e-4);
        assert!(matches!(err, Err(NumGeomError::RankDeficient { .. })));
    }
}
