//! Small dense linear-algebra helpers shared by every module.
//!
//! Complex vectors are identified with real ones by interleaving real and
//! imaginary parts: `(z_1, ..., z_n) -> (x_1, y_1, ..., x_n, y_n)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rfrob(m: &RMat) -> f64 {
    m.iter().map(|z| z * z).sum::<f64>().sqrt()
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Frobenius inner product `tr(a* b)`.
pub fn inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// The real 2n x 2n matrix of a complex n x n matrix in the interleaved basis.
pub fn realify(m: &CMat) -> RMat {
    let (r, cdim) = m.shape();
    let mut out = RMat::zeros(2 * r, 2 * cdim);
    for i in 0..r {
        for j in 0..cdim {
            let z = m[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    out
}

/// Inverse of [`realify`] for matrices commuting with the complex structure.
pub fn complexify(m: &RMat) -> CMat {
    let (r, cdim) = (m.nrows() / 2, m.ncols() / 2);
    CMat::from_fn(r, cdim, |i, j| c(m[(2 * i, 2 * j)], m[(2 * i + 1, 2 * j)]))
}

pub fn realify_vec(v: &CVec) -> RVec {
    RVec::from_fn(2 * v.len(), |k, _| {
        let z = v[k / 2];
        if k % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

pub fn complexify_vec(v: &RVec) -> CVec {
    CVec::from_fn(v.len() / 2, |k, _| c(v[2 * k], v[2 * k + 1]))
}

/// Multiplication by `i` on the interleaved real space.
pub fn complex_structure(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Orthonormal basis (columns) of the numerical null space, taking the `dim`
/// right singular vectors with the smallest singular values.
pub fn smallest_right_singular(m: &CMat, dim: usize) -> CMat {
    let ncols = m.ncols();
    if dim == 0 {
        return CMat::zeros(ncols, 0);
    }
    // Pad to a square so that the SVD returns a full set of right vectors.
    let padded = if m.nrows() < ncols {
        let mut p = CMat::zeros(ncols, ncols);
        p.view_mut((0, 0), m.shape()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[a].total_cmp(&sv[b]));
    let mut out = CMat::zeros(ncols, dim);
    for (col, &idx) in order.iter().take(dim).enumerate() {
        for r in 0..ncols {
            out[(r, col)] = v_t[(idx, r)].conj();
        }
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn real_singular_values(m: &RMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Orthonormal basis of the column span keeping the `dim` dominant directions.
pub fn dominant_left_singular(m: &CMat, dim: usize) -> CMat {
    let rows = m.nrows();
    if dim == 0 || m.ncols() == 0 {
        return CMat::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut out = CMat::zeros(rows, dim);
    for (col, &idx) in order.iter().take(dim).enumerate() {
        out.set_column(col, &u.column(idx));
    }
    out
}

/// Real orthonormal basis of the orthogonal complement of the span of `constraints`
/// inside `R^dim`.
pub fn real_orthogonal_complement(constraints: &[RVec], dim: usize) -> RMat {
    let k = constraints.len();
    let mut m = RMat::zeros(dim, dim);
    for (j, v) in constraints.iter().enumerate() {
        m.set_column(j, v);
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let mut out = RMat::zeros(dim, dim - k);
    for (col, &idx) in order.iter().skip(k).enumerate() {
        out.set_column(col, &u.column(idx));
    }
    out
}

pub fn cvec_norm(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
