//! Algebraic Bochner-Kähler curvature on `R^{2n}` with the flat metric and the
//! standard complex structure (interleaved coordinates).
//!
//! Tensors are dense: entry `(i, j, k, l)` is `g(R(e_i, e_j) e_k, e_l)`.

use nalgebra::SymmetricEigen;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{complex_structure, real_singular_values, rfrob, RMat, RVec};

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum CurvatureError {
    #[error("endomorphism is not in u(n): commutator with J {commutator:e}, symmetric part {symmetric:e}")]
    NotUnitary { commutator: f64, symmetric: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("vectors span a degenerate plane")]
    DegeneratePlane,
}

/// Flat Kähler model `(R^{2n}, g0 = I, J0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KaehlerModel {
    n: usize,
    j0: RMat,
}

impl KaehlerModel {
    pub fn new(n: usize) -> Self {
        Self { n, j0: complex_structure(n) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn j(&self) -> &RMat {
        &self.j0
    }

    pub fn g0(&self) -> RMat {
        RMat::identity(2 * self.n, 2 * self.n)
    }

    /// `ω(x, y) = g(x, J y)`.
    pub fn omega(&self, x: &RVec, y: &RVec) -> f64 {
        x.dot(&(&self.j0 * y))
    }

    pub fn omega_matrix(&self) -> RMat {
        self.j0.clone()
    }

    /// Commutator with `J` and symmetric part, both in Frobenius norm.
    pub fn unitary_defect(&self, h: &RMat) -> (f64, f64) {
        (rfrob(&(h * &self.j0 - &self.j0 * h)), rfrob(&(h + h.transpose())))
    }

    fn check_unitary(&self, h: &RMat) -> Result<(), CurvatureError> {
        let d = self.real_dim();
        if h.shape() != (d, d) {
            return Err(CurvatureError::DimensionMismatch { expected: d, got: h.nrows() });
        }
        let (commutator, symmetric) = self.unitary_defect(h);
        let bound = 1e-10 * rfrob(h).max(1.0);
        if commutator > bound || symmetric > bound {
            return Err(CurvatureError::NotUnitary { commutator, symmetric });
        }
        Ok(())
    }

    /// Real basis of u(n) as `2n x 2n` matrices: `E_ab - E_ba`, `i(E_ab + E_ba)` for `a < b`, `i E_aa`.
    pub fn unitary_basis(&self) -> Vec<RMat> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        let embed = |entries: &[(usize, usize, f64, f64)]| {
            let mut m = crate::linalg::CMat::zeros(n, n);
            for &(a, b, re, im) in entries {
                m[(a, b)] = crate::linalg::c(re, im);
            }
            crate::linalg::realify(&m)
        };
        for a in 0..n {
            for b in a + 1..n {
                out.push(embed(&[(a, b, 1.0, 0.0), (b, a, -1.0, 0.0)]));
                out.push(embed(&[(a, b, 0.0, 1.0), (b, a, 0.0, 1.0)]));
            }
            out.push(embed(&[(a, a, 0.0, 1.0)]));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    dim: usize,
    data: Vec<f64>,
}

impl Serialize for CurvatureTensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CurvatureTensor", 2)?;
        st.serialize_field("shape", &[self.dim; 4])?;
        st.serialize_field("data", &self.data)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryResiduals {
    pub antisymmetry_first: f64,
    pub antisymmetry_last: f64,
    pub pair_symmetry: f64,
    pub bianchi: f64,
    pub j_invariance: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        [self.antisymmetry_first, self.antisymmetry_last, self.pair_symmetry, self.bianchi, self.j_invariance]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn max_riemannian(&self) -> f64 {
        [self.antisymmetry_first, self.antisymmetry_last, self.pair_symmetry, self.bianchi].into_iter().fold(0.0, f64::max)
    }
}

impl CurvatureTensor {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim.pow(4)] }
    }

    /// Builds the tensor from the operators `R(e_i, e_j)`, with `R(e_i, e_j) e_k = Σ_l op[(l, k)] e_l`.
    pub fn from_operators(dim: usize, op: impl Fn(usize, usize) -> RMat) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                let m = op(i, j);
                for k in 0..dim {
                    for l in 0..dim {
                        t.set(i, j, k, l, m[(l, k)]);
                    }
                }
            }
        }
        t
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        t.set(i, j, k, l, f(i, j, k, l));
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.idx(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let id = self.idx(i, j, k, l);
        self.data[id] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    /// Re-expresses the tensor in the basis given by the columns of `frame`.
    pub fn in_frame(&self, frame: &RMat) -> Self {
        let d = self.dim;
        let m = frame.ncols();
        let mut out = Self::zeros(m);
        // Sequential single-index contractions keep the cost at O(d^5).
        let mut t1 = vec![0.0; m * d * d * d];
        for a in 0..m {
            for i in 0..d {
                let f = frame[(i, a)];
                if f == 0.0 {
                    continue;
                }
                for rest in 0..d * d * d {
                    t1[a * d * d * d + rest] += f * self.data[i * d * d * d + rest];
                }
            }
        }
        let mut t2 = vec![0.0; m * m * d * d];
        for a in 0..m {
            for b in 0..m {
                for j in 0..d {
                    let f = frame[(j, b)];
                    if f == 0.0 {
                        continue;
                    }
                    for rest in 0..d * d {
                        t2[(a * m + b) * d * d + rest] += f * t1[(a * d + j) * d * d + rest];
                    }
                }
            }
        }
        let mut t3 = vec![0.0; m * m * m * d];
        for ab in 0..m * m {
            for cc in 0..m {
                for k in 0..d {
                    let f = frame[(k, cc)];
                    if f == 0.0 {
                        continue;
                    }
                    for l in 0..d {
                        t3[(ab * m + cc) * d + l] += f * t2[(ab * d + k) * d + l];
                    }
                }
            }
        }
        for abc in 0..m * m * m {
            for e in 0..m {
                let mut s = 0.0;
                for l in 0..d {
                    s += frame[(l, e)] * t3[abc * d + l];
                }
                out.data[abc * m + e] = s;
            }
        }
        out
    }

    /// The operator `R(x, y)` as a matrix acting on column vectors.
    pub fn operator(&self, x: &RVec, y: &RVec) -> RMat {
        let d = self.dim;
        let mut m = RMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for k in 0..d {
                    for l in 0..d {
                        m[(l, k)] += w * self.get(i, j, k, l);
                    }
                }
            }
        }
        m
    }

    /// `g(R(x, y) z, w)`.
    pub fn eval(&self, x: &RVec, y: &RVec, z: &RVec, w: &RVec) -> f64 {
        w.dot(&(self.operator(x, y) * z))
    }

    /// `g(R(x, y) y, x) / (|x|²|y|² - g(x,y)²)` for the flat metric.
    pub fn sectional(&self, x: &RVec, y: &RVec) -> Result<f64, CurvatureError> {
        let area = x.dot(x) * y.dot(y) - x.dot(y).powi(2);
        if area <= 1e-14 * x.dot(x) * y.dot(y) {
            return Err(CurvatureError::DegeneratePlane);
        }
        Ok(self.eval(x, y, y, x) / area)
    }

    pub fn holomorphic_sectional(&self, j: &RMat, x: &RVec) -> Result<f64, CurvatureError> {
        self.sectional(x, &(j * x))
    }

    pub fn symmetry_residuals(&self, j: Option<&RMat>) -> SymmetryResiduals {
        let d = self.dim;
        let mut r = SymmetryResiduals {
            antisymmetry_first: 0.0,
            antisymmetry_last: 0.0,
            pair_symmetry: 0.0,
            bianchi: 0.0,
            j_invariance: 0.0,
        };
        for i in 0..d {
            for jj in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let v = self.get(i, jj, k, l);
                        r.antisymmetry_first = r.antisymmetry_first.max((v + self.get(jj, i, k, l)).abs());
                        r.antisymmetry_last = r.antisymmetry_last.max((v + self.get(i, jj, l, k)).abs());
                        r.pair_symmetry = r.pair_symmetry.max((v - self.get(k, l, i, jj)).abs());
                        let cyc = v + self.get(jj, k, i, l) + self.get(k, i, jj, l);
                        r.bianchi = r.bianchi.max(cyc.abs());
                    }
                }
            }
        }
        if let Some(jm) = j {
            for i in 0..d {
                for jj in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let mut s = 0.0;
                            for a in 0..d {
                                for b in 0..d {
                                    s += jm[(a, i)] * jm[(b, jj)] * self.get(a, b, k, l);
                                }
                            }
                            r.j_invariance = r.j_invariance.max((s - self.get(i, jj, k, l)).abs());
                        }
                    }
                }
            }
        }
        r
    }
}

/// `(x ∘ y) z = ω(x,z) y + ω(y,z) x + ω(Jx,z) Jy + ω(Jy,z) Jx + ω(Jx,y) Jz`.
pub fn circle(model: &KaehlerModel, x: &RVec, y: &RVec) -> RMat {
    let j = model.j();
    let jx = j * x;
    let jy = j * y;
    // ω(a, z) = (aᵀ J) z, so z -> ω(a,z) b is b aᵀ J.
    let term = |a: &RVec, b: &RVec| b * a.transpose() * j;
    term(x, y) + term(y, x) + term(&jx, &jy) + term(&jy, &jx) + j * model.omega(&jx, y)
}

/// `R_h(X,Y) = 2 ω(X,Y) h + X ∘ (hY) - Y ∘ (hX)`.
pub fn curvature_from_h(model: &KaehlerModel, h: &RMat) -> Result<CurvatureTensor, CurvatureError> {
    model.check_unitary(h)?;
    let d = model.real_dim();
    let basis: Vec<RVec> = (0..d).map(|i| unit(d, i)).collect();
    Ok(CurvatureTensor::from_operators(d, |i, j| {
        let (x, y) = (&basis[i], &basis[j]);
        h * (2.0 * model.omega(x, y)) + circle(model, x, &(h * y)) - circle(model, y, &(h * x))
    }))
}

fn wedge(a: &RVec, b: &RVec) -> RMat {
    b * a.transpose() - a * b.transpose()
}

/// `R_ρ(X,Y) = 2g(X,JY)ρ + 2g(X,ρY)J + ρY∧JX - ρX∧JY + X∧JρY - Y∧JρX`
/// with `(A∧B)Z = g(A,Z)B - g(B,Z)A`.
pub fn curvature_from_rho(model: &KaehlerModel, rho: &RMat) -> Result<CurvatureTensor, CurvatureError> {
    model.check_unitary(rho)?;
    Ok(rho_template(model, rho))
}

fn rho_template(model: &KaehlerModel, rho: &RMat) -> CurvatureTensor {
    let d = model.real_dim();
    let j = model.j();
    let jrho = j * rho;
    CurvatureTensor::from_operators(d, |a, b| {
        let x = unit(d, a);
        let y = unit(d, b);
        let (rx, ry) = (rho.column(a).into_owned(), rho.column(b).into_owned());
        let (jx, jy) = (j.column(a).into_owned(), j.column(b).into_owned());
        let (jrx, jry) = (jrho.column(a).into_owned(), jrho.column(b).into_owned());
        rho * (2.0 * x.dot(&jy)) + j * (2.0 * x.dot(&ry)) + wedge(&ry, &jx) - wedge(&rx, &jy) + wedge(&x, &jry)
            - wedge(&y, &jrx)
    })
}

fn unit(d: usize, i: usize) -> RVec {
    let mut v = RVec::zeros(d);
    v[i] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoFit {
    #[serde(serialize_with = "crate::json::serialize_real_matrix")]
    pub rho: RMat,
    pub residual: f64,
    pub relative_residual: f64,
    pub rank_deficiency: usize,
}

/// Least-squares `ρ ∈ u(n)` minimizing `‖R - R_ρ‖_F` through the normal equations.
pub fn fit_rho(model: &KaehlerModel, r: &CurvatureTensor) -> Result<RhoFit, CurvatureError> {
    let d = model.real_dim();
    if r.dim() != d {
        return Err(CurvatureError::DimensionMismatch { expected: d, got: r.dim() });
    }
    let basis = model.unitary_basis();
    let columns: Vec<CurvatureTensor> = basis.iter().map(|b| rho_template(model, b)).collect();
    let m = basis.len();
    let mut normal = RMat::zeros(m, m);
    let mut rhs = RVec::zeros(m);
    for a in 0..m {
        rhs[a] = dot(&columns[a], r);
        for b in a..m {
            let v = dot(&columns[a], &columns[b]);
            normal[(a, b)] = v;
            normal[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(normal.clone());
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let rank_deficiency = eig.eigenvalues.iter().filter(|&&v| v <= 1e-12 * top.max(f64::MIN_POSITIVE)).count();
    let mut coeffs = RVec::zeros(m);
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 1e-12 * top {
            let v = eig.eigenvectors.column(k);
            coeffs += v * (v.dot(&rhs) / lam);
        }
    }
    let mut rho = RMat::zeros(d, d);
    for (k, b) in basis.iter().enumerate() {
        rho += b * coeffs[k];
    }
    let fitted = rho_template(model, &rho);
    let residual = r.sub(&fitted).frobenius();
    let relative_residual = residual / r.frobenius().max(f64::MIN_POSITIVE);
    Ok(RhoFit { rho, residual, relative_residual: if r.frobenius() == 0.0 { 0.0 } else { relative_residual }, rank_deficiency })
}

fn dot(a: &CurvatureTensor, b: &CurvatureTensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Matrix of the linear map `ρ -> R_ρ(x0, J x0)` from u(n) coordinates to `End(R^{2n})`.
pub fn direction_map(model: &KaehlerModel, x0: &RVec) -> RMat {
    let basis = model.unitary_basis();
    let d = model.real_dim();
    let jx = model.j() * x0;
    let mut out = RMat::zeros(d * d, basis.len());
    for (k, b) in basis.iter().enumerate() {
        let op = rho_template(model, b).operator(x0, &jx);
        for (r, v) in op.iter().enumerate() {
            out[(r, k)] = *v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionFlatReport {
    /// `‖R_ρ(X0, J X0)‖_F`.
    pub curvature_norm: f64,
    pub rho_norm: f64,
    pub full_tensor_norm: f64,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    pub kernel_dimension: usize,
    /// Smallest singular value of `ρ -> R_ρ(X0, J X0)` relative to the largest.
    pub smallest_relative_singular: f64,
}

/// Checks the implication `R(X0, J X0) = 0 ⇒ R = 0` for the template family.
pub fn direction_flat_check(
    model: &KaehlerModel,
    rho: &RMat,
    x0: &RVec,
    tol: f64,
) -> Result<DirectionFlatReport, CurvatureError> {
    model.check_unitary(rho)?;
    let x0 = x0.normalize();
    let r = rho_template(model, rho);
    let curvature_norm = rfrob(&r.operator(&x0, &(model.j() * &x0)));
    let rho_norm = rfrob(rho);
    let sv = real_singular_values(&direction_map(model, &x0));
    let top = sv[0];
    let bottom = *sv.last().expect("nonempty basis");
    let kernel_dimension = sv.iter().filter(|&&s| s <= 1e-8 * top).count();
    let hypothesis_holds = curvature_norm <= tol;
    let conclusion_holds = if hypothesis_holds { rho_norm <= tol / bottom.max(f64::MIN_POSITIVE) } else { true };
    Ok(DirectionFlatReport {
        curvature_norm,
        rho_norm,
        full_tensor_norm: r.frobenius(),
        hypothesis_holds,
        conclusion_holds,
        kernel_dimension,
        smallest_relative_singular: bottom / top,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::rng::SeededRng;

    fn random_rho(model: &KaehlerModel, rng: &mut SeededRng) -> RMat {
        crate::linalg::realify(&rng.skew_hermitian(model.n()))
    }

    #[test]
    fn model_invariants() {
        let m = KaehlerModel::new(3);
        let j = m.j();
        assert!(rfrob(&(j * j + RMat::identity(6, 6))) < 1e-15);
        let om = m.omega_matrix();
        assert!(rfrob(&(&om + om.transpose())) < 1e-15);
        assert!(rfrob(&(j.transpose() * j - RMat::identity(6, 6))) < 1e-15);
        assert_eq!(m.unitary_basis().len(), 9);
    }

    #[test]
    fn circle_examples() {
        let m = KaehlerModel::new(1);
        let zero = circle(&m, &RVec::zeros(2), &unit(2, 0));
        assert_eq!(max_abs(&zero), 0.0);
        let e1 = unit(2, 0);
        let out = circle(&m, &e1, &e1);
        let (comm, sym) = m.unitary_defect(&out);
        assert!(comm < 1e-15 && sym < 1e-15);
        let v = &out * unit(2, 1);
        assert!((v[0] + 3.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn circle_identity() {
        let m = KaehlerModel::new(3);
        let mut r = SeededRng::new(31);
        for _ in 0..10 {
            let (x, y, z) = (r.real_vector(6), r.real_vector(6), r.real_vector(6));
            let lhs = circle(&m, &x, &y) * &z - circle(&m, &x, &z) * &y;
            let rhs = &x * (2.0 * m.omega(&y, &z)) - &z * m.omega(&x, &y) + &y * m.omega(&x, &z);
            assert!((lhs - rhs).norm() < 1e-12);
            let out = circle(&m, &x, &y);
            let (comm, sym) = m.unitary_defect(&out);
            assert!(comm < 1e-12 && sym < 1e-12);
        }
    }

    #[test]
    fn zero_inputs_give_zero_tensors() {
        let m = KaehlerModel::new(2);
        assert_eq!(curvature_from_h(&m, &RMat::zeros(4, 4)).unwrap().max_abs(), 0.0);
        assert_eq!(curvature_from_rho(&m, &RMat::zeros(4, 4)).unwrap().max_abs(), 0.0);
        let fit = fit_rho(&m, &CurvatureTensor::zeros(4)).unwrap();
        assert_eq!(rfrob(&fit.rho), 0.0);
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = KaehlerModel::new(1);
        let bad = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(curvature_from_rho(&m, &bad), Err(CurvatureError::NotUnitary { .. })));
        assert!(matches!(curvature_from_h(&m, &bad), Err(CurvatureError::NotUnitary { .. })));
    }

    #[test]
    fn h_template_equals_rho_template() {
        let mut r = SeededRng::new(12);
        for n in 1..4 {
            let m = KaehlerModel::new(n);
            let rho = random_rho(&m, &mut r);
            let a = curvature_from_h(&m, &rho).unwrap();
            let b = curvature_from_rho(&m, &rho).unwrap();
            assert!(a.sub(&b).max_abs() < 1e-12 * b.max_abs());
        }
    }

    #[test]
    fn j_template_has_constant_holomorphic_curvature() {
        let m = KaehlerModel::new(1);
        let t = curvature_from_h(&m, m.j()).unwrap();
        let k = t.holomorphic_sectional(m.j(), &unit(2, 0)).unwrap();
        assert!((k - 8.0).abs() < 1e-12);
        let m3 = KaehlerModel::new(3);
        let t3 = curvature_from_rho(&m3, &(m3.j() * -0.5)).unwrap();
        let mut r = SeededRng::new(4);
        let vals: Vec<f64> =
            (0..50).map(|_| t3.holomorphic_sectional(m3.j(), &r.unit_real_vector(6)).unwrap()).collect();
        let mean = vals.iter().sum::<f64>() / 50.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 50.0).sqrt();
        assert!(sd <= 1e-10);
        assert!((mean + 4.0).abs() < 1e-12);
    }

    #[test]
    fn template_is_linear() {
        let m = KaehlerModel::new(2);
        let mut r = SeededRng::new(6);
        let (a, b) = (random_rho(&m, &mut r), random_rho(&m, &mut r));
        let sum = curvature_from_rho(&m, &(&a + &b)).unwrap();
        let parts = curvature_from_rho(&m, &a).unwrap().add(&curvature_from_rho(&m, &b).unwrap());
        assert!(sum.sub(&parts).max_abs() < 1e-13);
    }

    #[test]
    fn generic_curvature_tensor_is_not_bochner() {
        let m = KaehlerModel::new(2);
        let mut r = SeededRng::new(10);
        let s = r.real_vector(16);
        let h = RMat::from_fn(4, 4, |i, j| s[4 * i.min(j) + i.max(j)]);
        let t = CurvatureTensor::from_fn(4, |i, j, k, l| h[(i, l)] * h[(j, k)] - h[(i, k)] * h[(j, l)]);
        assert!(t.symmetry_residuals(None).max_riemannian() < 1e-12);
        let fit = fit_rho(&m, &t).unwrap();
        assert!(fit.relative_residual > 1e-3);
    }

    #[test]
    fn direction_flat_examples() {
        let m = KaehlerModel::new(2);
        let x0 = unit(4, 0);
        let zero = direction_flat_check(&m, &RMat::zeros(4, 4), &x0, 1e-12).unwrap();
        assert!(zero.hypothesis_holds && zero.conclusion_holds);
        assert_eq!(zero.kernel_dimension, 0);
        let mut r = SeededRng::new(1);
        for _ in 0..20 {
            let rep = direction_flat_check(&m, &(m.j() * -0.5), &r.unit_real_vector(4), 1e-12).unwrap();
            assert!(!rep.hypothesis_holds);
        }
    }

    #[test]
    fn frame_change_identity() {
        let m = KaehlerModel::new(2);
        let mut r = SeededRng::new(2);
        let t = curvature_from_rho(&m, &random_rho(&m, &mut r)).unwrap();
        assert!(t.in_frame(&RMat::identity(4, 4)).sub(&t).max_abs() < 1e-15);
    }
}
