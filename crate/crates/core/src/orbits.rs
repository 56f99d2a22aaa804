//! Adjoint-orbit classification in su(n,1).
//!
//! Eigenvalues come from a complex Schur decomposition and are grouped by
//! single linkage. Jordan block sizes are read off the rank sequence of
//! `((A - μ)/s)^k`. The split of type 2 into `2a`/`2b` uses the sign of
//! `Im h(e, f)` for a Jordan pair `A e = μ e`, `A f = μ f + e`.

use nalgebra::{Schur, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::hermitian::{raw_form, SuElement};
use crate::linalg::{c, dominant_left_singular, frob, singular_values, smallest_right_singular, CMat, CVec, C64};

pub const DEFAULT_ORBIT_TOL: f64 = 1e-8;

/// Sign of `Im h(e, f)` that carries the label `2a`. It is the sign produced by
/// `wedge_j((1, 0, ..., 0, 1))`.
pub const REFERENCE_EPSILON: i8 = 1;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum OrbitError {
    #[error("ill-conditioned decision at {stage}: value {value:e} against tolerance {tol:e}")]
    IllConditioned { stage: String, value: f64, tol: f64 },
    #[error("Schur decomposition did not converge")]
    NoConvergence,
    #[error("spectrum matches no orbit type: {reason}")]
    Unclassifiable { reason: String },
}

fn ill(stage: impl Into<String>, value: f64, tol: f64) -> OrbitError {
    OrbitError::IllConditioned { stage: stage.into(), value, tol }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub eigenvalue: [f64; 2],
    pub multiplicity: usize,
    /// Jordan block sizes in descending order.
    pub blocks: Vec<usize>,
}

impl Cluster {
    pub fn value(&self) -> C64 {
        c(self.eigenvalue[0], self.eigenvalue[1])
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.first().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenStructure {
    pub clusters: Vec<Cluster>,
    pub cluster_tol: f64,
    pub rank_tol: f64,
    pub scale: f64,
}

/// Eigenvalue clusters with Jordan block sizes.
///
/// Clustering uses `cbrt(tol) * max(1, ‖A‖)`: roundoff splits a `k`-block into
/// eigenvalues at distance `~ u^{1/k}`, so a linear threshold would tear 3-blocks.
/// Rank decisions use singular values of `((A - μ)/s)^k` against `tol`.
pub fn eigenstructure(a: &SuElement, tol: f64) -> Result<EigenStructure, OrbitError> {
    eigenstructure_of(a.matrix(), tol)
}

pub(crate) fn eigenstructure_of(m: &CMat, tol: f64) -> Result<EigenStructure, OrbitError> {
    let dim = m.nrows();
    let scale = frob(m).max(1.0);
    let cluster_tol = tol.cbrt() * scale;
    let eig = Schur::new(m.clone()).eigenvalues().ok_or(OrbitError::NoConvergence)?;
    let values: Vec<C64> = eig.iter().copied().collect();

    let mut parent: Vec<usize> = (0..dim).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..dim {
        for j in i + 1..dim {
            if (values[i] - values[j]).norm() <= cluster_tol {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..dim {
        let r = root(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }

    let mut clusters = Vec::with_capacity(groups.len());
    for group in groups {
        let mult = group.len();
        let mu = group.iter().map(|&i| values[i]).sum::<C64>() / c(mult as f64, 0.0);
        let shifted = (m - CMat::identity(dim, dim) * mu) / c(scale, 0.0);
        let mut power = CMat::identity(dim, dim);
        let mut nullities = vec![0usize];
        for k in 1..=mult {
            power = &power * &shifted;
            let sv = singular_values(&power);
            if let Some(&bad) = sv.iter().find(|&&s| s >= tol / 10.0 && s <= tol * 10.0) {
                return Err(ill(format!("rank of (A - mu)^{k}"), bad, tol));
            }
            let d = sv.iter().filter(|&&s| s < tol).count();
            let prev = *nullities.last().expect("seeded with zero");
            nullities.push(d);
            if d == mult || d == prev {
                break;
            }
        }
        let last = *nullities.last().expect("nonempty");
        if last != mult {
            return Err(ill("geometric data vs cluster size", last as f64, mult as f64));
        }
        let at_least: Vec<usize> = nullities.windows(2).map(|w| w[1] - w[0]).collect();
        let mut blocks = Vec::new();
        for k in (0..at_least.len()).rev() {
            let exactly = at_least[k] - at_least.get(k + 1).copied().unwrap_or(0);
            blocks.extend(std::iter::repeat_n(k + 1, exactly));
        }
        clusters.push(Cluster { eigenvalue: [mu.re, mu.im], multiplicity: mult, blocks });
    }
    clusters.sort_by(|x, y| x.eigenvalue[1].total_cmp(&y.eigenvalue[1]).then(x.eigenvalue[0].total_cmp(&y.eigenvalue[0])));
    Ok(EigenStructure { clusters, cluster_tol, rank_tol: tol, scale })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type")]
pub enum OrbitType {
    /// Diagonalizable with imaginary spectrum; sorted imaginary parts.
    #[serde(rename = "1")]
    Type1 { eigenvalues: Vec<f64> },
    /// One 2-block at `i * eigenvalue`.
    #[serde(rename = "2a")]
    Type2a { eigenvalue: f64, epsilon: i8 },
    #[serde(rename = "2b")]
    Type2b { eigenvalue: f64, epsilon: i8 },
    /// One 3-block at `i * eigenvalue`.
    #[serde(rename = "3")]
    Type3 { eigenvalue: f64 },
    /// Non-imaginary pair `lambda`, `mu = -conj(lambda)` with `Re lambda > 0`.
    #[serde(rename = "4")]
    Type4 { lambda: [f64; 2], mu: [f64; 2] },
}

impl OrbitType {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Type1 { .. } => "1",
            Self::Type2a { .. } => "2a",
            Self::Type2b { .. } => "2b",
            Self::Type3 { .. } => "3",
            Self::Type4 { .. } => "4",
        }
    }

    pub fn epsilon(&self) -> Option<i8> {
        match self {
            Self::Type2a { epsilon, .. } | Self::Type2b { epsilon, .. } => Some(*epsilon),
            _ => None,
        }
    }
}

/// Which sign of `Im h(e, f)` is called `2a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum EpsilonCalibration {
    #[default]
    Rank1,
    Swapped,
}

pub fn classify(a: &SuElement, tol: f64) -> Result<OrbitType, OrbitError> {
    classify_with(a, tol, EpsilonCalibration::Rank1)
}

pub fn classify_with(a: &SuElement, tol: f64, calibration: EpsilonCalibration) -> Result<OrbitType, OrbitError> {
    let es = eigenstructure(a, tol)?;
    let special = special_cluster(&es)?;
    Ok(match special {
        Special::None => {
            let mut eigenvalues: Vec<f64> = es
                .clusters
                .iter()
                .flat_map(|cl| std::iter::repeat_n(cl.eigenvalue[1], cl.multiplicity))
                .collect();
            eigenvalues.sort_by(f64::total_cmp);
            OrbitType::Type1 { eigenvalues }
        }
        Special::Block2(k) => {
            let mu = es.clusters[k].value();
            let (e, f) = jordan_pair(a.matrix(), mu, &es.clusters[k])?;
            let epsilon = pairing_sign(&e, &f, a.n(), tol)?;
            let reference = match calibration {
                EpsilonCalibration::Rank1 => REFERENCE_EPSILON,
                EpsilonCalibration::Swapped => -REFERENCE_EPSILON,
            };
            if epsilon == reference {
                OrbitType::Type2a { eigenvalue: mu.im, epsilon }
            } else {
                OrbitType::Type2b { eigenvalue: mu.im, epsilon }
            }
        }
        Special::Block3(k) => OrbitType::Type3 { eigenvalue: es.clusters[k].eigenvalue[1] },
        Special::Pair(k, l) => OrbitType::Type4 { lambda: es.clusters[k].eigenvalue, mu: es.clusters[l].eigenvalue },
    })
}

enum Special {
    None,
    Block2(usize),
    Block3(usize),
    /// Indices of `lambda` (positive real part) and `-conj(lambda)`.
    Pair(usize, usize),
}

fn special_cluster(es: &EigenStructure) -> Result<Special, OrbitError> {
    let unclassifiable = |reason: &str| OrbitError::Unclassifiable { reason: reason.to_string() };
    let real_part: Vec<usize> =
        (0..es.clusters.len()).filter(|&k| es.clusters[k].eigenvalue[0].abs() > es.cluster_tol).collect();
    let big: Vec<usize> = (0..es.clusters.len()).filter(|&k| es.clusters[k].largest_block() > 1).collect();
    let extra_blocks: usize = es.clusters.iter().map(|cl| cl.blocks.iter().filter(|&&b| b > 1).count()).sum();
    if !real_part.is_empty() {
        if real_part.len() != 2 || !big.is_empty() {
            return Err(unclassifiable("non-imaginary spectrum must be a single simple pair"));
        }
        let (a, b) = (real_part[0], real_part[1]);
        let (k, l) = if es.clusters[a].eigenvalue[0] > 0.0 { (a, b) } else { (b, a) };
        let (lam, mu) = (es.clusters[k].value(), es.clusters[l].value());
        if es.clusters[k].multiplicity != 1 || es.clusters[l].multiplicity != 1 || (lam + mu.conj()).norm() > es.cluster_tol {
            return Err(unclassifiable("non-imaginary eigenvalues are not a pair lambda, -conj(lambda)"));
        }
        return Ok(Special::Pair(k, l));
    }
    match (big.as_slice(), extra_blocks) {
        ([], _) => Ok(Special::None),
        ([k], 1) if es.clusters[*k].largest_block() == 2 => Ok(Special::Block2(*k)),
        ([k], 1) if es.clusters[*k].largest_block() == 3 => Ok(Special::Block3(*k)),
        _ => Err(unclassifiable("Jordan structure outside the su(n,1) list")),
    }
}

fn nullity(cl: &Cluster, k: usize) -> usize {
    cl.blocks.iter().map(|&b| b.min(k)).sum()
}

fn matrix_power(m: &CMat, k: usize) -> CMat {
    (0..k).fold(CMat::identity(m.nrows(), m.ncols()), |acc, _| acc * m)
}

/// Chain top `v` with `M^k v` of unit size and its images, `[M^{k} v, ..., M v, v]`.
fn chain(m: &CMat, cl: &Cluster, length: usize) -> Vec<CVec> {
    let basis = smallest_right_singular(&matrix_power(m, length), nullity(cl, length));
    let image = matrix_power(m, length - 1) * &basis;
    let svd = image.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    let coeffs = CVec::from_fn(v_t.ncols(), |r, _| v_t[(idx, r)].conj());
    let top = &basis * coeffs / c(sigma, 0.0);
    let mut out = vec![top];
    for _ in 1..length {
        let next = m * out.last().expect("nonempty");
        out.push(next);
    }
    out.reverse();
    out
}

fn jordan_pair(a: &CMat, mu: C64, cl: &Cluster) -> Result<(CVec, CVec), OrbitError> {
    let m = a - CMat::identity(a.nrows(), a.ncols()) * mu;
    let ch = chain(&m, cl, 2);
    Ok((ch[0].clone(), ch[1].clone()))
}

fn pairing_sign(e: &CVec, f: &CVec, n: usize, tol: f64) -> Result<i8, OrbitError> {
    let pairing = raw_form(e, f, n);
    let size = e.norm() * f.norm();
    if pairing.im.abs() < tol.sqrt() * size {
        return Err(ill("Im h(e, f) of the Jordan pair", pairing.im.abs() / size, tol.sqrt()));
    }
    Ok(if pairing.im > 0.0 { 1 } else { -1 })
}

/// Monic characteristic polynomial `det(tI - A)`, coefficients in ascending
/// degree, by the Faddeev-LeVerrier recursion. `det(A - tI)` is `(-1)^{n+1}`
/// times this polynomial.
pub fn char_poly_coefficients(a: &CMat) -> Vec<C64> {
    let dim = a.nrows();
    let mut coeffs = vec![c(0.0, 0.0); dim + 1];
    coeffs[dim] = c(1.0, 0.0);
    let id = CMat::identity(dim, dim);
    let mut mk = CMat::zeros(dim, dim);
    for k in 1..=dim {
        mk = a * &mk + &id * coeffs[dim - k + 1];
        let am = a * &mk;
        coeffs[dim - k] = -crate::linalg::trace(&am) / c(k as f64, 0.0);
    }
    coeffs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharPoly {
    /// Ascending coefficients of `det(tI - A)` as `[re, im]` pairs.
    pub coefficients: Vec<[f64; 2]>,
    pub cross_check: Option<crate::grading::CharPolyCrossCheck>,
}

impl CharPoly {
    pub fn complex(&self) -> Vec<C64> {
        self.coefficients.iter().map(|z| c(z[0], z[1])).collect()
    }
}

pub fn char_poly(a: &SuElement) -> CharPoly {
    let coefficients = char_poly_coefficients(a.matrix()).iter().map(|z| [z.re, z.im]).collect();
    CharPoly { coefficients, cross_check: crate::grading::charpoly_cross_check(a).ok() }
}

/// Largest coefficient difference relative to the largest coefficient (at least 1).
pub fn coefficient_distance(p: &[C64], q: &[C64]) -> f64 {
    let scale = p.iter().chain(q.iter()).map(|z| z.norm()).fold(1.0_f64, f64::max);
    p.iter().zip(q.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalBasis {
    pub orbit: OrbitType,
    /// Columns are the canonical basis vectors.
    #[serde(skip)]
    pub basis: CMat,
    /// Ideal canonical form built from cluster eigenvalues.
    #[serde(skip)]
    pub form: CMat,
    /// `gram[(j, k)] = h(b_j, b_k)`.
    #[serde(skip)]
    pub gram: CMat,
    #[serde(skip)]
    pub target_gram: CMat,
    pub reconstruction_residual: f64,
    pub gram_residual: f64,
}

fn gram_of(b: &CMat, n: usize) -> CMat {
    let cols: Vec<CVec> = (0..b.ncols()).map(|k| b.column(k).into_owned()).collect();
    CMat::from_fn(b.ncols(), b.ncols(), |j, k| raw_form(&cols[j], &cols[k], n))
}

/// Canonical basis of the orbit normal form together with its Gram matrix.
pub fn canonical_basis(a: &SuElement, tol: f64) -> Result<CanonicalBasis, OrbitError> {
    let orbit = classify(a, tol)?;
    let es = eigenstructure(a, tol)?;
    let special = special_cluster(&es)?;
    let m = a.matrix();
    let dim = m.nrows();
    let n = a.n();
    let id = CMat::identity(dim, dim);

    let mut lead: Vec<CVec> = Vec::new();
    let mut lead_form = CMat::zeros(0, 0);
    let mut lead_gram = CMat::zeros(0, 0);
    let mut special_idx: Vec<usize> = Vec::new();
    match special {
        Special::None => {}
        Special::Block2(k) => {
            let mu = es.clusters[k].value();
            let (e, f) = jordan_pair(m, mu, &es.clusters[k])?;
            let eps = f64::from(pairing_sign(&e, &f, n, tol)?);
            let s = raw_form(&e, &f, n).im * eps;
            let e1 = &e / c(s.sqrt(), 0.0);
            let f1 = &f / c(s.sqrt(), 0.0);
            let shift = c(0.0, eps * raw_form(&f1, &f1, n).re / 2.0);
            let e2 = &f1 + &e1 * shift;
            lead = vec![e1, e2];
            lead_form = CMat::from_row_slice(2, 2, &[mu, c(1.0, 0.0), c(0.0, 0.0), mu]);
            lead_gram = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, eps), c(0.0, -eps), c(0.0, 0.0)]);
            special_idx = vec![k];
        }
        Special::Block3(k) => {
            let mu = es.clusters[k].value();
            let shifted = m - &id * mu;
            let ch = chain(&shifted, &es.clusters[k], 3);
            let norm2 = raw_form(&ch[1], &ch[1], n).re;
            if norm2 <= 0.0 {
                return Err(ill("middle chain vector must be spacelike", norm2, 0.0));
            }
            let scale = c(1.0 / norm2.sqrt(), 0.0);
            let (f1, f2, f3) = (&ch[0] * scale, &ch[1] * scale, &ch[2] * scale);
            let b = c(0.0, (raw_form(&f2, &f3, n) / c(0.0, 2.0)).re);
            let f2b = &f2 + &f1 * b;
            let f3b = &f3 + &f2 * b;
            let re_c = raw_form(&f3b, &f3b, n).re / 2.0;
            let f3c = &f3b + &f1 * c(re_c, 0.0);
            lead = vec![f1, f2b, f3c];
            let z = c(0.0, 0.0);
            let one = c(1.0, 0.0);
            lead_form = CMat::from_row_slice(3, 3, &[mu, one, z, z, mu, one, z, z, mu]);
            lead_gram = CMat::from_row_slice(3, 3, &[z, z, -one, z, one, z, -one, z, z]);
            special_idx = vec![k];
        }
        Special::Pair(k, l) => {
            let (lam, nu) = (es.clusters[k].value(), es.clusters[l].value());
            let e1 = smallest_right_singular(&(m - &id * lam), 1).column(0).into_owned();
            let e2 = smallest_right_singular(&(m - &id * nu), 1).column(0).into_owned();
            let pairing = raw_form(&e1, &e2, n);
            if pairing.norm() < tol.sqrt() {
                return Err(ill("pairing of the null eigenvectors", pairing.norm(), tol.sqrt()));
            }
            let e2 = e2 / pairing.conj();
            lead = vec![e1, e2];
            let z = c(0.0, 0.0);
            lead_form = CMat::from_row_slice(2, 2, &[lam, z, z, nu]);
            lead_gram = CMat::from_row_slice(2, 2, &[z, c(1.0, 0.0), c(1.0, 0.0), z]);
            special_idx = vec![k, l];
        }
    }

    // Remaining eigenvectors, projected h-orthogonally off the lead block.
    let lead_pairings_t_inv = if lead.is_empty() {
        CMat::zeros(0, 0)
    } else {
        gram_of(&CMat::from_columns(&lead), n)
            .transpose().try_inverse().ok_or_else(|| ill("lead block Gram matrix", 0.0, tol))?
    };
    let mut positives: Vec<(CVec, C64)> = Vec::new();
    let mut negatives: Vec<(CVec, C64)> = Vec::new();
    for (k, cl) in es.clusters.iter().enumerate() {
        let count = cl.blocks.iter().filter(|&&b| b == 1).count();
        if count == 0 || special_idx.contains(&k) && matches!(special, Special::Pair(..)) {
            continue;
        }
        let mu = cl.value();
        let kernel = smallest_right_singular(&(m - &id * mu), nullity(cl, 1));
        let mut projected = kernel.clone();
        if !lead.is_empty() {
            for col in 0..kernel.ncols() {
                let z = kernel.column(col).into_owned();
                let w = CVec::from_fn(lead.len(), |j, _| raw_form(&z, &lead[j], n));
                let coeffs = &lead_pairings_t_inv * w;
                let mut zp = z.clone();
                for (j, v) in lead.iter().enumerate() {
                    zp -= v * coeffs[j];
                }
                projected.set_column(col, &zp);
            }
        }
        let span = dominant_left_singular(&projected, count);
        let local = gram_of(&span, n);
        let eig = SymmetricEigen::new((&local + local.adjoint()) * c(0.5, 0.0));
        for idx in 0..count {
            let d = eig.eigenvalues[idx];
            if d.abs() < tol.sqrt() {
                return Err(ill("degenerate restricted form", d.abs(), tol.sqrt()));
            }
            // local = V^T H conj(V); conjugate eigenvectors give h-orthonormal columns.
            let coeffs = eig.eigenvectors.column(idx).map(|z| z.conj());
            let v = (&span * coeffs) / c(d.abs().sqrt(), 0.0);
            if d > 0.0 {
                positives.push((v, mu));
            } else {
                negatives.push((v, mu));
            }
        }
    }
    let expected_negatives = usize::from(matches!(special, Special::None));
    if negatives.len() != expected_negatives {
        return Err(OrbitError::Unclassifiable { reason: format!("found {} timelike eigenvectors", negatives.len()) });
    }

    let mut columns = lead.clone();
    let mut diag: Vec<C64> = Vec::new();
    for (v, mu) in positives.into_iter().chain(negatives) {
        columns.push(v);
        diag.push(mu);
    }
    if columns.len() != dim {
        return Err(ill("basis size", columns.len() as f64, dim as f64));
    }
    let basis = CMat::from_columns(&columns);
    let lead_len = lead.len();
    let mut form = CMat::zeros(dim, dim);
    let mut target_gram = CMat::zeros(dim, dim);
    form.view_mut((0, 0), (lead_len, lead_len)).copy_from(&lead_form);
    target_gram.view_mut((0, 0), (lead_len, lead_len)).copy_from(&lead_gram);
    for (k, mu) in diag.iter().enumerate() {
        form[(lead_len + k, lead_len + k)] = *mu;
        target_gram[(lead_len + k, lead_len + k)] = c(1.0, 0.0);
    }
    if expected_negatives == 1 {
        target_gram[(dim - 1, dim - 1)] = c(-1.0, 0.0);
    }
    let gram = gram_of(&basis, n);
    let inv = basis.clone().try_inverse().ok_or_else(|| ill("canonical basis inverse", 0.0, tol))?;
    let reconstruction_residual = frob(&(&basis * &form * inv - m)) / frob(m).max(1.0);
    let gram_residual = frob(&(&gram - &target_gram));
    Ok(CanonicalBasis { orbit, basis, form, gram, target_gram, reconstruction_residual, gram_residual })
}
