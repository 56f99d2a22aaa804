//! Sasaki structures on odd spheres and the correspondence with flat Kähler cones.

use serde::Serialize;
use thiserror::Error;

use crate::cone::{contact_frame, quotient_curvature, ConeError, ConeModel, SigmaConvention};
use crate::linalg::{complex_structure, RMat, RVec};
use crate::numgeom::{christoffel, cone_metric_chart, curvature_sample, ChartMetric, Christoffel, NumGeomError};
use crate::rng::SeededRng;

/// Samples stay inside this radius of the stereographic chart.
pub const SAMPLE_RADIUS: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum SasakiError {
    #[error("Reeb field vanishes at the sample point (|xi| = {norm:e})")]
    DegenerateField { norm: f64 },
    #[error("a Sasaki chart must have odd dimension, got {dim}")]
    EvenDimension { dim: usize },
    #[error(transparent)]
    NumGeom(#[from] NumGeomError),
    #[error(transparent)]
    Cone(#[from] ConeError),
}

/// Inverse stereographic chart of the sphere of radius `radius` in `R^{dim+1}`,
/// projecting from the pole `(0, …, 0, radius)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StereographicSphere {
    pub dim: usize,
    pub radius: f64,
}

impl StereographicSphere {
    pub fn unit(dim: usize) -> Self {
        Self { dim, radius: 1.0 }
    }

    /// `r (2u, |u|² - 1) / (1 + |u|²)`.
    pub fn embedding(&self, u: &[f64]) -> RVec {
        let s = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        RVec::from_fn(self.dim + 1, |k, _| self.radius * if k < self.dim { 2.0 * u[k] / s } else { (s - 2.0) / s })
    }

    /// Derivative of the embedding of the unit sphere, `(dim+1) x dim`.
    pub fn unit_jacobian(&self, u: &[f64]) -> RMat {
        let m = self.dim;
        let s = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        RMat::from_fn(m + 1, m, |k, j| {
            if k < m {
                let delta = if k == j { 2.0 / s } else { 0.0 };
                delta - 4.0 * u[k] * u[j] / (s * s)
            } else {
                4.0 * u[j] / (s * s)
            }
        })
    }

    /// Pushes an ambient vector `v` at `x` (on the sphere) to chart components.
    pub fn chart_vector(&self, x: &RVec, v: &RVec) -> RVec {
        let m = self.dim;
        let gap = self.radius - x[m];
        RVec::from_fn(m, |k, _| v[k] / gap + x[k] * v[m] / (gap * gap))
    }
}

impl ChartMetric for StereographicSphere {
    fn dim(&self) -> usize {
        self.dim
    }
    fn metric(&self, u: &[f64]) -> RMat {
        let s = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        RMat::identity(self.dim, self.dim) * (4.0 * self.radius * self.radius / (s * s))
    }
    fn contains(&self, u: &[f64]) -> bool {
        u.iter().map(|v| v * v).sum::<f64>() < 1e6
    }
}

/// Ellipsoid `diag(axes) · S^dim` in the same chart: `g = Jacᵀ diag(axes)² Jac`.
#[derive(Debug, Clone, PartialEq)]
pub struct StereographicEllipsoid {
    pub axes: Vec<f64>,
}

impl ChartMetric for StereographicEllipsoid {
    fn dim(&self) -> usize {
        self.axes.len() - 1
    }
    fn metric(&self, u: &[f64]) -> RMat {
        let jac = StereographicSphere::unit(self.dim()).unit_jacobian(u);
        let scaled = RMat::from_diagonal(&RVec::from_column_slice(&self.axes)) * &jac;
        scaled.transpose() * scaled
    }
    fn contains(&self, u: &[f64]) -> bool {
        u.iter().map(|v| v * v).sum::<f64>() < 1e6
    }
}

/// A chart metric with a candidate Reeb field `ξ`.
pub struct SasakiData<C, F> {
    pub chart: C,
    pub xi: F,
}

impl<C: ChartMetric, F: Fn(&[f64]) -> RVec> SasakiData<C, F> {
    pub fn new(chart: C, xi: F) -> Result<Self, SasakiError> {
        let dim = chart.dim();
        if dim.is_multiple_of(2) {
            return Err(SasakiError::EvenDimension { dim });
        }
        Ok(Self { chart, xi })
    }
}

/// Unit Hopf field `J x / r` on the sphere of radius `r` in `C^{n+1}`, in chart components.
pub fn hopf_data(sphere: StereographicSphere) -> Result<SasakiData<StereographicSphere, impl Fn(&[f64]) -> RVec>, SasakiError> {
    let j = complex_structure(sphere.dim.div_ceil(2));
    SasakiData::new(sphere, move |u: &[f64]| {
        let x = sphere.embedding(u);
        sphere.chart_vector(&x, &(&j * &x / sphere.radius))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SasakiReport {
    /// `max |R(X,ξ)Y - g(ξ,Y)X + g(X,Y)ξ| / max |g(ξ,Y)X - g(X,Y)ξ|` over coordinate `X, Y`.
    pub identity_residual: f64,
    pub unit_length_residual: f64,
    /// `max |L_ξ g| / max |g|`.
    pub killing_residual: f64,
}

fn xi_at<C: ChartMetric, F: Fn(&[f64]) -> RVec>(data: &SasakiData<C, F>, p: &[f64]) -> Result<RVec, SasakiError> {
    let xi = (data.xi)(p);
    let g = data.chart.metric(p);
    let norm = xi.dot(&(&g * &xi)).max(0.0).sqrt();
    if !(norm >= 1e-8) {
        return Err(SasakiError::DegenerateField { norm });
    }
    Ok(xi)
}

fn shifted(p: &[f64], i: usize, h: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[i] += h;
    q
}

pub fn sasaki_residual<C: ChartMetric, F: Fn(&[f64]) -> RVec>(
    data: &SasakiData<C, F>,
    p: &[f64],
    step: f64,
) -> Result<SasakiReport, SasakiError> {
    let sample = curvature_sample(&data.chart, p, step)?;
    let xi = xi_at(data, p)?;
    let g = &sample.metric;
    let d = g.nrows();
    let g_xi = g * &xi;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..d {
        for k in 0..d {
            for l in 0..d {
                let lhs: f64 = (0..d).map(|j| sample.mixed(l, i, j, k) * xi[j]).sum();
                let rhs = g_xi[k] * if l == i { 1.0 } else { 0.0 } - g[(i, k)] * xi[l];
                worst = worst.max((lhs - rhs).abs());
                scale = scale.max(rhs.abs());
            }
        }
    }
    let dg: Vec<RMat> =
        (0..d).map(|m| (data.chart.metric(&shifted(p, m, step)) - data.chart.metric(&shifted(p, m, -step))) / (2.0 * step)).collect();
    let dxi: Vec<RVec> = (0..d).map(|m| ((data.xi)(&shifted(p, m, step)) - (data.xi)(&shifted(p, m, -step))) / (2.0 * step)).collect();
    let lie = RMat::from_fn(d, d, |i, j| {
        (0..d).map(|k| xi[k] * dg[k][(i, j)] + g[(k, j)] * dxi[i][k] + g[(i, k)] * dxi[j][k]).sum::<f64>()
    });
    Ok(SasakiReport {
        identity_residual: worst / scale.max(f64::MIN_POSITIVE),
        unit_length_residual: (xi.dot(&g_xi) - 1.0).abs(),
        killing_residual: lie.abs().max() / g.abs().max(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransversalJReport {
    /// `J = -∇ξ` on a g-orthonormal basis of `D = ker λ`.
    #[serde(serialize_with = "crate::json::serialize_real_matrix")]
    pub j: RMat,
    pub square_residual: f64,
    /// `max |λ(JX)|` over the basis, with `λ = g(ξ, ·)`.
    pub lambda_residual: f64,
    /// Largest `D`-component of `(∇_X J) Y` over basis pairs.
    pub parallel_residual: f64,
}

fn nabla_xi(gamma: &Christoffel, xi: &RVec, dxi: &[RVec]) -> RMat {
    let d = xi.len();
    RMat::from_fn(d, d, |l, i| dxi[i][l] + (0..d).map(|k| gamma.get(l, i, k) * xi[k]).sum::<f64>())
}

fn j_field<C: ChartMetric, F: Fn(&[f64]) -> RVec>(data: &SasakiData<C, F>, p: &[f64], step: f64) -> Result<RMat, SasakiError> {
    let d = data.chart.dim();
    let gamma = christoffel(&data.chart, p, step)?;
    let xi = xi_at(data, p)?;
    let dxi: Vec<RVec> = (0..d).map(|m| ((data.xi)(&shifted(p, m, step)) - (data.xi)(&shifted(p, m, -step))) / (2.0 * step)).collect();
    Ok(-nabla_xi(&gamma, &xi, &dxi))
}

/// `J = -∇ξ` restricted to the contact distribution, with its algebraic and parallel defects.
pub fn transversal_j<C: ChartMetric, F: Fn(&[f64]) -> RVec>(
    data: &SasakiData<C, F>,
    p: &[f64],
    step: f64,
) -> Result<TransversalJReport, SasakiError> {
    let d = data.chart.dim();
    let g = data.chart.metric(p);
    let xi = xi_at(data, p)?;
    let jm = j_field(data, p, step)?;
    let gamma = christoffel(&data.chart, p, step)?;

    // g-orthonormal basis of D = ξ^⊥.
    let g_xi = &g * &xi;
    let mut basis: Vec<RVec> = Vec::with_capacity(d - 1);
    let xi_unit = &xi / xi.dot(&g_xi).sqrt();
    let mut frame = vec![xi_unit.clone()];
    for k in 0..d {
        let mut v = RVec::zeros(d);
        v[k] = 1.0;
        for e in &frame {
            let coeff = v.dot(&(&g * e));
            v -= e * coeff;
        }
        let norm = v.dot(&(&g * &v)).max(0.0).sqrt();
        if norm > 1e-6 {
            let v = v / norm;
            frame.push(v.clone());
            basis.push(v);
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    let b = RMat::from_columns(&basis);
    let project = |v: &RVec| v - &xi_unit * v.dot(&(&g * &xi_unit));
    let j_on_d = b.transpose() * &g * &jm * &b;
    let mut square_residual: f64 = 0.0;
    let mut lambda_residual: f64 = 0.0;
    for x in &basis {
        let jx = &jm * x;
        let v = &jm * &jx + x;
        square_residual = square_residual.max(v.dot(&(&g * &v)).max(0.0).sqrt());
        lambda_residual = lambda_residual.max(jx.dot(&g_xi).abs());
    }

    let plus: Vec<RMat> = (0..d).map(|m| j_field(data, &shifted(p, m, step), step)).collect::<Result<_, _>>()?;
    let minus: Vec<RMat> = (0..d).map(|m| j_field(data, &shifted(p, m, -step), step)).collect::<Result<_, _>>()?;
    let mut parallel_residual: f64 = 0.0;
    for x in &basis {
        let mut nabla_j = RMat::zeros(d, d);
        for m in 0..d {
            let dj = (&plus[m] - &minus[m]) / (2.0 * step);
            let gm = RMat::from_fn(d, d, |l, k| gamma.get(l, m, k));
            nabla_j += (dj + &gm * &jm - &jm * &gm) * x[m];
        }
        for y in &basis {
            let v = project(&(&nabla_j * y));
            parallel_residual = parallel_residual.max(v.dot(&(&g * &v)).max(0.0).sqrt());
        }
    }
    Ok(TransversalJReport { j: j_on_d, square_residual, lambda_residual, parallel_residual })
}

/// Defect of `R̂(X,Y)Z = R̄(X,Y)Z + ḡ(X,Z)Y - ḡ(Y,Z)X` on base directions of the cone at `t = 1`,
/// relative to the largest entry of the right-hand side terms.
pub fn cone_relation_residual<C: ChartMetric>(base: &C, u: &[f64], step: f64) -> Result<f64, NumGeomError> {
    let m = base.dim();
    let base_sample = curvature_sample(base, u, step)?;
    let mut point = u.to_vec();
    point.push(1.0);
    let cone_sample = curvature_sample(&cone_metric_chart(base), &point, step)?;
    let g = &base_sample.metric;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for l in 0..m {
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let correction = g[(i, k)] * delta(l, j) - g[(j, k)] * delta(l, i);
                    let expected = base_sample.mixed(l, i, j, k) + correction;
                    worst = worst.max((cone_sample.mixed(l, i, j, k) - expected).abs());
                    scale = scale.max(base_sample.mixed(l, i, j, k).abs()).max(correction.abs());
                }
            }
        }
    }
    Ok(worst / scale.max(f64::MIN_POSITIVE))
}

/// Largest curvature entry of the cone over `base` at `(u, t)`.
pub fn cone_flatness<C: ChartMetric>(base: &C, u: &[f64], t: f64, step: f64) -> Result<f64, NumGeomError> {
    let mut point = u.to_vec();
    point.push(t);
    Ok(crate::numgeom::riemann(&cone_metric_chart(base), &point, step)?.max_abs())
}

/// Chart points with `|u| ≤ SAMPLE_RADIUS`.
pub fn sample_chart_points(rng: &mut SeededRng, dim: usize, count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let dir = rng.unit_real_vector(dim);
            let r = SAMPLE_RADIUS * rng.uniform(0.0, 1.0);
            (dir * r).as_slice().to_vec()
        })
        .collect()
}

/// Axes of the control ellipsoid over `S^dim`.
pub fn control_axes(dim: usize) -> Vec<f64> {
    (0..=dim).map(|k| if k % 2 == 0 { 1.0 } else { 1.6 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineChannels {
    pub sasaki_identity: f64,
    pub killing: f64,
    pub unit_length: f64,
    pub transversal_square: f64,
    pub transversal_lambda: f64,
    pub transversal_parallel: f64,
    pub cone_flatness: f64,
    pub cone_relation: f64,
    /// `|mean - 1|` of holomorphic sectional curvatures of the quotient.
    pub holomorphic_mean: f64,
    pub holomorphic_spread: f64,
}

impl PipelineChannels {
    pub fn max(&self) -> f64 {
        [
            self.sasaki_identity,
            self.killing,
            self.unit_length,
            self.transversal_square,
            self.transversal_lambda,
            self.transversal_parallel,
            self.cone_flatness,
            self.cone_relation,
            self.holomorphic_mean,
            self.holomorphic_spread,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub n: usize,
    pub fd_step: f64,
    pub samples: usize,
    pub seed: u64,
    pub channels: PipelineChannels,
    pub max_residual: f64,
    /// Cone flatness over an ellipsoid; expected to be far from zero.
    pub control_cone_flatness: f64,
    pub holomorphic_values: Vec<f64>,
}

/// Round `S^{2n+1}` → Sasaki checks → flat cone → curvature of the quotient `CP^n`.
pub fn cpn_pipeline(n: usize, fd_step: f64, seed: u64, samples: usize) -> Result<PipelineReport, SasakiError> {
    let dim = 2 * n + 1;
    let sphere = StereographicSphere::unit(dim);
    let data = hopf_data(sphere)?;
    let mut rng = SeededRng::derive(seed, 0x5a5a_0001 + n as u64);
    let points = sample_chart_points(&mut rng, dim, samples.max(1));
    let mut ch = PipelineChannels {
        sasaki_identity: 0.0,
        killing: 0.0,
        unit_length: 0.0,
        transversal_square: 0.0,
        transversal_lambda: 0.0,
        transversal_parallel: 0.0,
        cone_flatness: 0.0,
        cone_relation: 0.0,
        holomorphic_mean: 0.0,
        holomorphic_spread: 0.0,
    };
    let ellipsoid = StereographicEllipsoid { axes: control_axes(dim) };
    let mut control: f64 = f64::INFINITY;
    for u in &points {
        let s = sasaki_residual(&data, u, fd_step)?;
        ch.sasaki_identity = ch.sasaki_identity.max(s.identity_residual);
        ch.killing = ch.killing.max(s.killing_residual);
        ch.unit_length = ch.unit_length.max(s.unit_length_residual);
        let t = transversal_j(&data, u, fd_step)?;
        ch.transversal_square = ch.transversal_square.max(t.square_residual);
        ch.transversal_lambda = ch.transversal_lambda.max(t.lambda_residual);
        ch.transversal_parallel = ch.transversal_parallel.max(t.parallel_residual);
        ch.cone_flatness = ch.cone_flatness.max(cone_flatness(&sphere, u, 1.0, fd_step)?);
        ch.cone_relation = ch.cone_relation.max(cone_relation_residual(&sphere, u, fd_step)?);
        control = control.min(cone_flatness(&ellipsoid, u, 1.0, fd_step)?);
    }

    let model = ConeModel::cpn(n, SigmaConvention::Flipped);
    let j = complex_structure(n);
    let mut values = Vec::new();
    for p in model.sample(seed ^ 0x0c0f_fee0, samples.max(1))? {
        let frame = contact_frame(&model, &p)?;
        let curvature = quotient_curvature(&model, &frame, fd_step)?;
        for _ in 0..3 {
            let x = rng.unit_real_vector(2 * n);
            values.push(curvature.holomorphic_sectional(&j, &x).map_err(ConeError::from)?);
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    ch.holomorphic_mean = (mean - 1.0).abs();
    ch.holomorphic_spread = hi - lo;
    Ok(PipelineReport {
        n,
        fd_step,
        samples: points.len(),
        seed,
        max_residual: ch.max(),
        channels: ch,
        control_cone_flatness: control,
        holomorphic_values: values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numgeom::{Euclidean, FnChart};

    #[test]
    fn stereographic_embedding_lands_on_sphere() {
        let s = StereographicSphere { dim: 3, radius: 2.0 };
        let u = [0.3, -0.7, 1.1];
        let x = s.embedding(&u);
        assert!((x.norm() - 2.0).abs() < 1e-14);
        let jac = s.unit_jacobian(&u) * 2.0;
        let g = jac.transpose() * &jac;
        assert!((g - s.metric(&u)).abs().max() < 1e-13);
        // chart_vector inverts the Jacobian on tangent vectors.
        let v = RVec::from_vec(vec![0.2, 0.1, -0.4]);
        let ambient = &jac * &v;
        assert!((s.chart_vector(&x, &ambient) - v).norm() < 1e-13);
    }

    #[test]
    fn hopf_sphere_is_sasaki() {
        let data = hopf_data(StereographicSphere::unit(3)).unwrap();
        for u in [[0.2, -0.4, 0.5], [1.0, 0.3, -0.2], [0.0, 0.0, 0.1]] {
            let r = sasaki_residual(&data, &u, 1e-4).unwrap();
            assert!(r.identity_residual <= 1e-3, "{r:?}");
            assert!(r.killing_residual <= 1e-3, "{r:?}");
            assert!(r.unit_length_residual <= 1e-12, "{r:?}");
            let t = transversal_j(&data, &u, 1e-4).unwrap();
            assert!(t.square_residual <= 1e-3 && t.lambda_residual <= 1e-3 && t.parallel_residual <= 1e-3, "{t:?}");
        }
    }

    #[test]
    fn identity_residual_is_second_order() {
        let data = hopf_data(StereographicSphere::unit(3)).unwrap();
        let u = [0.3, 0.1, -0.2];
        let coarse = sasaki_residual(&data, &u, 2e-2).unwrap().identity_residual;
        let fine = sasaki_residual(&data, &u, 1e-2).unwrap().identity_residual;
        assert!((3.0..=5.0).contains(&(coarse / fine)), "{coarse} {fine}");
    }

    #[test]
    fn flat_space_with_constant_field_fails() {
        let data = SasakiData::new(Euclidean(3), |_p: &[f64]| RVec::from_vec(vec![0.0, 0.0, 1.0])).unwrap();
        let r = sasaki_residual(&data, &[0.1, 0.2, 0.3], 1e-4).unwrap();
        assert!(r.identity_residual >= 0.5);
        assert!(r.killing_residual < 1e-10 && r.unit_length_residual < 1e-12);
    }

    #[test]
    fn radius_two_sphere_fails() {
        let data = hopf_data(StereographicSphere { dim: 3, radius: 2.0 }).unwrap();
        let r = sasaki_residual(&data, &[0.2, 0.1, 0.4], 1e-4).unwrap();
        assert!(r.identity_residual > 0.5, "{r:?}");
        assert!(r.unit_length_residual < 1e-12 && r.killing_residual < 1e-3);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let data = SasakiData::new(Euclidean(3), |_p: &[f64]| RVec::zeros(3)).unwrap();
        assert!(matches!(transversal_j(&data, &[0.0, 0.0, 0.0], 1e-4), Err(SasakiError::DegenerateField { .. })));
        assert!(matches!(SasakiData::new(Euclidean(2), |_p: &[f64]| RVec::zeros(2)), Err(SasakiError::EvenDimension { dim: 2 })));
    }

    #[test]
    fn cones_over_spheres_and_ellipsoids() {
        for n in 1..=2 {
            let sphere = StereographicSphere::unit(2 * n + 1);
            let u: Vec<f64> = (0..2 * n + 1).map(|k| 0.1 * (k as f64 + 1.0)).collect();
            assert!(cone_flatness(&sphere, &u, 1.0, 1e-4).unwrap() <= 1e-3);
            assert!(cone_flatness(&sphere, &u, 1.7, 1e-4).unwrap() <= 1e-3);
            assert!(cone_relation_residual(&sphere, &u, 1e-4).unwrap() <= 1e-3);
            let ellipsoid = StereographicEllipsoid { axes: control_axes(2 * n + 1) };
            assert!(cone_flatness(&ellipsoid, &u, 1.0, 1e-4).unwrap() >= 0.1);
            assert!(cone_relation_residual(&ellipsoid, &u, 1e-4).unwrap() <= 1e-3);
        }
        let flat = FnChart::new(2, |_p: &[f64]| RMat::identity(2, 2), |_p: &[f64]| true);
        assert!(cone_relation_residual(&flat, &[0.1, 0.2], 1e-4).unwrap() <= 1e-3);
    }

    #[test]
    fn pipeline_n1_and_n2() {
        for n in 1..=2 {
            let report = cpn_pipeline(n, 1e-4, 42, 3).unwrap();
            assert!(report.max_residual <= 1e-3, "{report:?}");
            assert!(report.control_cone_flatness >= 0.1, "{report:?}");
        }
    }
}
