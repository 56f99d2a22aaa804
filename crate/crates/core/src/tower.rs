//! Totally geodesic embeddings of quotients along `su(n,1) → su(n+1,1)`, and the
//! matching of `u(n+1)` flows on the cone with linear flows on `R^{2n+2} / ±1`.

use serde::Serialize;
use thiserror::Error;

use crate::cone::{contact_frame, lift, cone_rep, ConeError, ConeModel, DistributionFrame, QuotientChart, SigmaConvention};
use crate::hermitian::{check_su, HermitianError, HermitianSpace, SuElement, SuViolation, DEFAULT_MEMBERSHIP_TOL};
use crate::linalg::{c, complex_structure, frob, realify, realify_vec, trace, CMat, CVec, RMat, RVec};
use crate::numgeom::{second_fundamental_form, NumGeomError};
use crate::rng::SeededRng;

/// Time samples along each compared trajectory.
pub const DUALITY_TIME_SAMPLES: usize = 64;
/// Coefficient of the quadratic bend used by the negative control.
pub const CONTROL_BEND: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum TowerError {
    #[error(transparent)]
    Certification(#[from] SuViolation),
    #[error("matrix is not skew-hermitian (residual {residual:e})")]
    NotSkewHermitian { residual: f64 },
    #[error("generator block is not diagonal imaginary (defect {defect:e})")]
    NotDiagonal { defect: f64 },
    #[error("hermitian space: {0}")]
    Space(String),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    NumGeom(#[from] NumGeomError),
}

impl From<HermitianError> for TowerError {
    fn from(e: HermitianError) -> Self {
        Self::Space(e.to_string())
    }
}

/// `D_{λ0} = diag(iλ0, A - iλ0/(n+1) I)` in `su(n+1,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TowerEmbedding {
    pub lambda0: f64,
    pub source_n: usize,
    pub d_matrix: SuElement,
}

fn extend(a: &CMat, lambda0: f64) -> CMat {
    let size = a.nrows();
    let shift = c(0.0, lambda0 / size as f64);
    let mut d = CMat::zeros(size + 1, size + 1);
    d[(0, 0)] = c(0.0, lambda0);
    d.view_mut((1, 1), (size, size)).copy_from(&(a - CMat::identity(size, size) * shift));
    d
}

pub fn embed_generator(a: &SuElement, lambda0: f64) -> Result<TowerEmbedding, TowerError> {
    let space = HermitianSpace::standard(a.n() + 1)?;
    let d = check_su(&extend(a.matrix(), lambda0), &space, DEFAULT_MEMBERSHIP_TOL.max(a.tolerance_used()))?;
    Ok(TowerEmbedding { lambda0, source_n: a.n(), d_matrix: d })
}

/// The `u(n)` block acting on the cone `C^n`: the top-left `n x n` block.
pub fn cone_block(a: &CMat) -> CMat {
    let n = a.nrows() - 1;
    a.view((0, 0), (n, n)).into_owned()
}

/// Cone model of a diagonal generator in `su(n,1)`.
pub fn cone_model_of(a: &SuElement, convention: SigmaConvention) -> Result<ConeModel, TowerError> {
    let m = a.matrix();
    let n = m.nrows();
    let defect = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| if i == j { m[(i, i)].re.abs() } else { m[(i, j)].norm() })
        .fold(0.0, f64::max);
    if defect > 1e-12 * frob(m).max(1.0) {
        return Err(TowerError::NotDiagonal { defect });
    }
    Ok(ConeModel::from_generator(&cone_block(m), convention)?)
}

/// The `CP^n` generator `diag(-i/(2(n+2)), …, -i/(2(n+2)), i(n+1)/(2(n+2)))` in `su(n+1,1)`.
pub fn cpn_generator(n: usize) -> SuElement {
    let k = 2.0 * (n as f64 + 2.0);
    let mut diag = vec![c(0.0, -1.0 / k); n + 1];
    diag.push(c(0.0, (n as f64 + 1.0) / k));
    let space = HermitianSpace::standard(n + 1).expect("n + 1 >= 1");
    check_su(&CMat::from_diagonal(&CVec::from_vec(diag)), &space, DEFAULT_MEMBERSHIP_TOL).expect("diagonal imaginary and traceless")
}

/// Random diagonal `su(n,1)` element whose cone section is nonempty and non-degenerate.
pub fn random_diagonal(rng: &mut SeededRng, n: usize, convention: SigmaConvention) -> SuElement {
    let model = ConeModel::random(rng, n, convention);
    let block = model.generator();
    let mut diag: Vec<_> = (0..n).map(|i| block[(i, i)]).collect();
    diag.push(-trace(&block));
    let space = HermitianSpace::standard(n).expect("n >= 1");
    check_su(&CMat::from_diagonal(&CVec::from_vec(diag)), &space, DEFAULT_MEMBERSHIP_TOL).expect("diagonal imaginary and traceless")
}

/// `max |D_{sλ1 + (1-s)λ2} - s D_{λ1} - (1-s) D_{λ2}|` entrywise.
pub fn affinity_residual(a: &SuElement, lambda1: f64, lambda2: f64, s: f64) -> f64 {
    let mix = extend(a.matrix(), s * lambda1 + (1.0 - s) * lambda2);
    let combo = extend(a.matrix(), lambda1) * c(s, 0.0) + extend(a.matrix(), lambda2) * c(1.0 - s, 0.0);
    (mix - combo).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |(tr D' + D')(0, x) - (0, (tr A' + A') x)|` over the given points.
pub fn action_agreement(embedding: &TowerEmbedding, a: &SuElement, points: &[CVec]) -> f64 {
    let big = cone_block(embedding.d_matrix.matrix());
    let small = cone_block(a.matrix());
    points
        .iter()
        .map(|x| {
            let mut padded = CVec::zeros(x.len() + 1);
            padded.rows_mut(1, x.len()).copy_from(x);
            let lhs = crate::cone::algebra_action(&big, &padded);
            let rhs = crate::cone::algebra_action(&small, x);
            let mut expected = CVec::zeros(x.len() + 1);
            expected.rows_mut(1, x.len()).copy_from(&rhs);
            (lhs - expected).iter().map(|z| z.norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Frame of the larger distribution at `(0, p)`: the embedded small frame, then `e_0`, `i e_0`.
fn embedded_frame(small: &DistributionFrame) -> DistributionFrame {
    let pad = |v: &RVec| {
        let mut out = RVec::zeros(v.len() + 2);
        out.rows_mut(2, v.len()).copy_from(v);
        out
    };
    let dim = small.point.len() + 2;
    let mut basis: Vec<RVec> = small.basis.iter().map(pad).collect();
    let mut e0 = RVec::zeros(dim);
    e0[0] = 1.0;
    let mut ie0 = RVec::zeros(dim);
    ie0[1] = 1.0;
    basis.push(e0);
    basis.push(ie0);
    DistributionFrame { point: pad(&small.point), basis, transversality: small.transversality, conditioning: small.conditioning }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicReport {
    pub source_n: usize,
    pub lambda0: f64,
    pub fd_step: f64,
    pub points: usize,
    /// Largest `‖II‖` of the embedded quotient.
    pub max_second_fundamental: f64,
    /// Smallest `‖II‖` after bending the embedding; expected to be far from zero.
    pub control_second_fundamental: f64,
    pub action_agreement: f64,
    pub frame_defect: f64,
}

/// Second fundamental form of the quotient of `{0} × Σ_A` inside the quotient of `Σ_D`.
pub fn verify_tower_geodesic(
    a: &SuElement,
    lambda0: f64,
    points: &[CVec],
    fd_step: f64,
    convention: SigmaConvention,
) -> Result<GeodesicReport, TowerError> {
    let embedding = embed_generator(a, lambda0)?;
    let small = cone_model_of(a, convention)?;
    let big = cone_model_of(&embedding.d_matrix, convention)?;
    let mut max_ii: f64 = 0.0;
    let mut control: f64 = f64::INFINITY;
    let mut frame_defect: f64 = 0.0;
    for p in points {
        let small_frame = contact_frame(&small, p)?;
        let frame = embedded_frame(&small_frame);
        let x = &frame.point;
        let j = big.complex_structure();
        let jp = j * x;
        let ja0p = j * (big.section_matrix() * x);
        for v in &frame.basis {
            frame_defect = frame_defect.max(v.dot(&jp).abs()).max(v.dot(&ja0p).abs());
        }
        let chart = QuotientChart::new(&big, &frame);
        let sub_dim = small_frame.dim();
        let origin = vec![0.0; sub_dim];
        let straight = |y: &[f64]| {
            let mut out = RVec::zeros(sub_dim + 2);
            out.rows_mut(0, sub_dim).copy_from_slice(y);
            out
        };
        let bent = |y: &[f64]| {
            let mut out = straight(y);
            out[sub_dim] = CONTROL_BEND * y[0] * y[0];
            out
        };
        max_ii = max_ii.max(second_fundamental_form(&chart, straight, sub_dim, &origin, fd_step)?.norm);
        control = control.min(second_fundamental_form(&chart, bent, sub_dim, &origin, fd_step)?.norm);
    }
    Ok(GeodesicReport {
        source_n: a.n(),
        lambda0,
        fd_step,
        points: points.len(),
        max_second_fundamental: max_ii,
        control_second_fundamental: control,
        action_agreement: action_agreement(&embedding, a, points),
        frame_defect,
    })
}

/// `Ω = du ∧ dv` summed over complex coordinates, as a matrix: `Ω(x, y) = xᵀ Ω y`.
pub fn standard_symplectic(real_dim: usize) -> RMat {
    -complex_structure(real_dim / 2)
}

/// `x ∘ x = 2 ω(x, ·) x`, the rank-one element of `sp(2m, R)`.
pub fn sp_square(x: &RVec) -> RMat {
    let omega = standard_symplectic(x.len());
    x * (x.transpose() * omega) * 2.0
}

/// `exp(Ω⁻¹ S)` for a random symmetric `S` scaled to Frobenius norm `scale`.
pub fn random_symplectic(rng: &mut SeededRng, real_dim: usize, scale: f64) -> RMat {
    let m = RMat::from_fn(real_dim, real_dim, |_, _| rng.normal());
    let s = (&m + m.transpose()) * 0.5;
    let s = &s * (scale / s.norm());
    let omega = standard_symplectic(real_dim);
    let generator = omega.try_inverse().expect("symplectic form is invertible") * s;
    generator.exp()
}

/// `‖(Gx)∘(Gx) - G (x∘x) G⁻¹‖ / ‖x∘x‖`.
pub fn sp_equivariance_residual(g: &RMat, x: &RVec) -> f64 {
    let g_inv = g.clone().try_inverse().expect("symplectic matrices are invertible");
    let lhs = sp_square(&(g * x));
    let rhs = g * sp_square(x) * g_inv;
    (lhs - rhs).norm() / sp_square(x).norm().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub samples: usize,
    pub time_samples: usize,
    /// `max_t min(‖γ_su - γ_sp‖, ‖γ_su + γ_sp‖) / ‖x‖`.
    pub residual: f64,
    /// Same comparison against `exp(t a)` without the trace shift.
    pub naive_residual: f64,
}

fn skew_residual(a: &CMat) -> f64 {
    frob(&(a + a.adjoint()))
}

/// Compares the cone flow of `diag(a, -tr a)` with the linear flow of `a + tr(a) I` on `R^{2n+2}`.
pub fn duality_action_check(a: &CMat, points: &[CVec]) -> Result<DualityReport, TowerError> {
    let residual = skew_residual(a);
    if residual > 1e-10 * frob(a).max(1.0) {
        return Err(TowerError::NotSkewHermitian { residual });
    }
    let m = a.nrows();
    let tr = trace(a);
    let mut su_gen = CMat::zeros(m + 1, m + 1);
    su_gen.view_mut((0, 0), (m, m)).copy_from(a);
    su_gen[(m, m)] = -tr;
    let sp_gen = realify(&(a + CMat::identity(m, m) * tr));
    let naive_gen = realify(a);
    let mut worst: f64 = 0.0;
    let mut naive: f64 = 0.0;
    for x in points {
        let norm = x.norm();
        let xr = realify_vec(x);
        let y = lift(x);
        for k in 0..DUALITY_TIME_SAMPLES {
            let t = k as f64 / (DUALITY_TIME_SAMPLES - 1) as f64;
            let su = realify_vec(&cone_rep(&((&su_gen * c(t, 0.0)).exp() * &y))?);
            let sp = (&sp_gen * t).exp() * &xr;
            let plain = (&naive_gen * t).exp() * &xr;
            let up_to_sign = |v: &RVec| (&su - v).norm().min((&su + v).norm()) / norm;
            worst = worst.max(up_to_sign(&sp));
            naive = naive.max(up_to_sign(&plain));
        }
    }
    Ok(DualityReport { samples: points.len(), time_samples: DUALITY_TIME_SAMPLES, residual: worst, naive_residual: naive })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::I;

    #[test]
    fn cpn_tower_step() {
        for n in 2..5 {
            let small = cpn_generator(n - 1);
            let lambda0 = -1.0 / (2.0 * (n as f64 + 2.0));
            let big = embed_generator(&small, lambda0).unwrap();
            assert!(frob(&(big.d_matrix.matrix() - cpn_generator(n).matrix())) < 1e-15);
        }
    }

    #[test]
    fn zero_embeds_to_zero() {
        let space = HermitianSpace::standard(2).unwrap();
        let zero = check_su(&CMat::zeros(3, 3), &space, 1e-10).unwrap();
        let e = embed_generator(&zero, 0.0).unwrap();
        assert_eq!(e.d_matrix.matrix(), &CMat::zeros(4, 4));
    }

    #[test]
    fn embedding_is_affine_and_linear() {
        let mut rng = SeededRng::new(3);
        let a = random_diagonal(&mut rng, 3, SigmaConvention::Flipped);
        let b = random_diagonal(&mut rng, 3, SigmaConvention::Flipped);
        assert!(affinity_residual(&a, 0.3, -1.2, 0.37) <= 1e-14);
        let sum = check_su(&(a.matrix() + b.matrix()), a.space(), 1e-10).unwrap();
        let lhs = embed_generator(&sum, 0.0).unwrap();
        let rhs = embed_generator(&a, 0.0).unwrap().d_matrix.into_matrix() + embed_generator(&b, 0.0).unwrap().d_matrix.into_matrix();
        assert!(frob(&(lhs.d_matrix.matrix() - rhs)) < 1e-15);
    }

    #[test]
    fn actions_agree_on_embedded_cone() {
        let mut rng = SeededRng::new(5);
        let a = random_diagonal(&mut rng, 3, SigmaConvention::Flipped);
        let e = embed_generator(&a, 0.3).unwrap();
        let points: Vec<CVec> = (0..50).map(|_| rng.complex_vector(3)).collect();
        assert!(action_agreement(&e, &a, &points) < 1e-14);
    }

    #[test]
    fn cpn_sub_quotient_is_totally_geodesic() {
        let n = 2;
        let small = cpn_generator(n - 1);
        let model = cone_model_of(&small, SigmaConvention::Flipped).unwrap();
        let points = model.sample(4, 3).unwrap();
        let report = verify_tower_geodesic(&small, -1.0 / (2.0 * (n as f64 + 2.0)), &points, 1e-4, SigmaConvention::Flipped).unwrap();
        assert!(report.max_second_fundamental <= 1e-3, "{report:?}");
        assert!(report.control_second_fundamental >= 0.05, "{report:?}");
        assert!(report.frame_defect < 1e-12);
    }

    #[test]
    fn random_tower_is_totally_geodesic() {
        let mut rng = SeededRng::new(8);
        for convention in [SigmaConvention::Flipped, SigmaConvention::Paper] {
            let a = random_diagonal(&mut rng, 3, convention);
            let model = cone_model_of(&a, convention).unwrap();
            let points = model.sample(9, 3).unwrap();
            let report = verify_tower_geodesic(&a, 0.3, &points, 1e-4, convention).unwrap();
            assert!(report.max_second_fundamental <= 1e-3, "{report:?}");
            assert!(report.control_second_fundamental >= 0.05, "{report:?}");
        }
    }

    #[test]
    fn sp_square_properties() {
        let mut rng = SeededRng::new(10);
        assert_eq!(sp_square(&RVec::zeros(4)), RMat::zeros(4, 4));
        let omega = standard_symplectic(6);
        for _ in 0..10 {
            let x = rng.real_vector(6);
            let s = sp_square(&x);
            assert!((s.transpose() * &omega + &omega * &s).abs().max() < 1e-12);
            assert_eq!(sp_square(&-&x), s);
            let g = random_symplectic(&mut rng, 6, 0.8);
            assert!((g.transpose() * &omega * &g - &omega).abs().max() < 1e-12);
            assert!(sp_equivariance_residual(&g, &x) <= 1e-10);
        }
        // du ∧ dv on the first complex coordinate.
        assert_eq!(omega[(0, 1)], 1.0);
    }

    #[test]
    fn duality_closed_forms() {
        let mut rng = SeededRng::new(11);
        let points: Vec<CVec> = (0..5).map(|_| rng.complex_vector(3)).collect();
        let scalar = duality_action_check(&(CMat::identity(3, 3) * I), &points).unwrap();
        assert!(scalar.residual <= 1e-8);
        let zero = duality_action_check(&CMat::zeros(3, 3), &points).unwrap();
        assert!(zero.residual <= 1e-14 && zero.naive_residual <= 1e-14);
        let diag = CMat::from_diagonal(&CVec::from_vec(vec![c(0.0, 0.4), c(0.0, -1.1), c(0.0, 0.25)]));
        let generic = duality_action_check(&diag, &points).unwrap();
        assert!(generic.residual <= 1e-6);
        assert!(generic.naive_residual > 1e-2);
        assert!(matches!(duality_action_check(&CMat::identity(3, 3), &points), Err(TowerError::NotSkewHermitian { .. })));
    }
}
