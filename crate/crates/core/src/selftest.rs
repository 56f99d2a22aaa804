//! The acceptance suite: one seeded check per criterion, each reporting its
//! measured quantities next to the thresholds it is judged against.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cone::{verify_curvature_prop, ConeModel, SigmaConvention};
use crate::curvature::{curvature_from_rho, direction_flat_check, fit_rho, KaehlerModel};
use crate::hermitian::{random_group_element, random_su, HermitianSpace, SuProfile};
use crate::linalg::{c, realify, CVec, C64};
use crate::orbits::{char_poly, char_poly_coefficients, classify, coefficient_distance, OrbitType, REFERENCE_EPSILON};
use crate::rng::SeededRng;
use crate::sasaki::{
    cone_flatness, cone_relation_residual, control_axes, hopf_data, sample_chart_points, sasaki_residual, StereographicEllipsoid,
    StereographicSphere,
};
use crate::tower::{
    affinity_residual, cone_model_of, cpn_generator, duality_action_check, random_diagonal, random_symplectic, sp_equivariance_residual,
    verify_tower_geodesic,
};

pub const DEFAULT_SEED: u64 = 42;
pub const ORBIT_TOL: f64 = 1e-8;
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub metrics: BTreeMap<&'static str, f64>,
    pub notes: Vec<String>,
}

impl CriterionResult {
    fn new(id: u8, name: &'static str) -> Self {
        Self { id, name, passed: true, metrics: BTreeMap::new(), notes: Vec::new() }
    }

    /// Records `value` and fails the criterion unless `value <= bound`.
    fn at_most(&mut self, key: &'static str, value: f64, bound: f64) {
        self.metrics.insert(key, value);
        if !(value <= bound) {
            self.passed = false;
            self.notes.push(format!("{key} = {value:e} exceeds {bound:e}"));
        }
    }

    /// Records `value` and fails the criterion unless `value >= bound`.
    fn at_least(&mut self, key: &'static str, value: f64, bound: f64) {
        self.metrics.insert(key, value);
        if !(value >= bound) {
            self.passed = false;
            self.notes.push(format!("{key} = {value:e} is below {bound:e}"));
        }
    }

    fn error(&mut self, context: &str, err: impl std::fmt::Display) {
        self.passed = false;
        self.notes.push(format!("{context}: {err}"));
    }

    pub fn summary_line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let metrics: Vec<String> = self.metrics.iter().map(|(k, v)| format!("{k}={v:.3e}")).collect();
        format!("[{status}] criterion {:>2} {}: {}", self.id, self.name, metrics.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn new(seed: u64, criteria: Vec<CriterionResult>) -> Self {
        Self { seed, passed: criteria.iter().all(|c| c.passed), criteria }
    }
}

fn expected_tag(profile: SuProfile) -> &'static str {
    match profile {
        SuProfile::DiagonalImaginary => "1",
        SuProfile::Rank1 => "2a",
        SuProfile::NegRank1 => "2b",
        SuProfile::Jordan2 { epsilon } if epsilon == REFERENCE_EPSILON => "2a",
        SuProfile::Jordan2 { .. } => "2b",
        SuProfile::Jordan3 => "3",
        SuProfile::SplitReal => "4",
        SuProfile::Generic => "?",
    }
}

fn element_seed(seed: u64, n: usize, profile: usize, k: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add((n * 100_000 + profile * 10_000 + k) as u64)
}

fn same_class(a: &OrbitType, b: &OrbitType) -> bool {
    a.tag() == b.tag() && a.epsilon() == b.epsilon()
}

pub fn orbit_classification(seed: u64, per_profile: usize, conjugations: usize) -> CriterionResult {
    let mut out = CriterionResult::new(1, "orbit classifier soundness");
    let mut total = 0usize;
    let mut wrong = 0usize;
    for n in 2..=4 {
        let space = HermitianSpace::standard(n).expect("n >= 1");
        for k in 0..per_profile {
            let epsilon = if k % 2 == 0 { 1 } else { -1 };
            let profiles = [
                SuProfile::DiagonalImaginary,
                SuProfile::Rank1,
                SuProfile::NegRank1,
                SuProfile::Jordan2 { epsilon },
                SuProfile::Jordan3,
                SuProfile::SplitReal,
            ];
            for (idx, profile) in profiles.into_iter().enumerate() {
                let s = element_seed(seed, n, idx, k);
                total += 1;
                let a = match random_su(s, &space, profile) {
                    Ok(a) => a,
                    Err(e) => {
                        wrong += 1;
                        out.error("generation", e);
                        continue;
                    }
                };
                let base = match classify(&a, ORBIT_TOL) {
                    Ok(t) if t.tag() == expected_tag(profile) => t,
                    Ok(t) => {
                        wrong += 1;
                        out.notes.push(format!("n={n} {profile:?} seed {s}: got {}", t.tag()));
                        continue;
                    }
                    Err(e) => {
                        wrong += 1;
                        out.notes.push(format!("n={n} {profile:?} seed {s}: {e}"));
                        continue;
                    }
                };
                let mut rng = SeededRng::derive(s, 0xc0_1700);
                for _ in 0..conjugations {
                    let g = random_group_element(&mut rng, &space, 1.0);
                    let verdict = a.conjugate(&g).map_err(|e| e.to_string()).and_then(|b| classify(&b, ORBIT_TOL).map_err(|e| e.to_string()));
                    match verdict {
                        Ok(t) if same_class(&t, &base) => {}
                        Ok(t) => {
                            wrong += 1;
                            out.notes.push(format!("n={n} {profile:?} seed {s}: conjugate classified {}", t.tag()));
                            break;
                        }
                        Err(e) => {
                            wrong += 1;
                            out.notes.push(format!("n={n} {profile:?} seed {s}: conjugate failed: {e}"));
                            break;
                        }
                    }
                }
            }
        }
    }
    out.metrics.insert("elements", total as f64);
    out.at_most("misclassified", wrong as f64, 0.0);
    out.notes.truncate(10);
    out
}

/// Ascending coefficients of `(t + i/(2(n+2)))^{n+1} (t - i(n+1)/(2(n+2)))`.
pub fn cpn_char_poly(n: usize) -> Vec<C64> {
    let k = 2.0 * (n as f64 + 2.0);
    let mut poly = vec![c(1.0, 0.0)];
    let mut times = |root: C64| {
        let mut next = vec![c(0.0, 0.0); poly.len() + 1];
        for (d, coeff) in poly.iter().enumerate() {
            next[d + 1] += coeff;
            next[d] -= coeff * root;
        }
        poly = next;
    };
    for _ in 0..=n {
        times(c(0.0, -1.0 / k));
    }
    times(c(0.0, (n as f64 + 1.0) / k));
    poly
}

pub fn char_poly_invariance(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(2, "characteristic polynomial invariance");
    let mut worst: f64 = 0.0;
    let profiles = [
        SuProfile::Generic,
        SuProfile::DiagonalImaginary,
        SuProfile::Rank1,
        SuProfile::Jordan2 { epsilon: 1 },
        SuProfile::Jordan3,
        SuProfile::SplitReal,
    ];
    for n in 2..=4 {
        let space = HermitianSpace::standard(n).expect("n >= 1");
        for (idx, profile) in profiles.into_iter().enumerate() {
            for k in 0..10 {
                let s = element_seed(seed, n, idx + 10, k);
                let a = match random_su(s, &space, profile) {
                    Ok(a) => a,
                    Err(e) => {
                        out.error("generation", e);
                        continue;
                    }
                };
                let base = char_poly(&a).complex();
                let mut rng = SeededRng::derive(s, 0xc4a2);
                for _ in 0..5 {
                    let g = random_group_element(&mut rng, &space, 1.0);
                    let g_inv = g.clone().try_inverse().expect("group elements are invertible");
                    let moved = char_poly_coefficients(&(&g * a.matrix() * g_inv));
                    worst = worst.max(coefficient_distance(&moved, &base));
                }
            }
        }
    }
    out.at_most("conjugation_relative", worst, 1e-9);
    let mut cpn: f64 = 0.0;
    for n in 1..=4 {
        let got = char_poly(&cpn_generator(n)).complex();
        cpn = cpn.max(coefficient_distance(&got, &cpn_char_poly(n)));
    }
    out.at_most("cpn_generator", cpn, 1e-12);
    out
}

pub fn curvature_template(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(3, "curvature template");
    let mut rng = SeededRng::derive(seed, 3);
    let (mut symmetry, mut fit_residual, mut round_trip, mut deficiency) = (0.0_f64, 0.0_f64, 0.0_f64, 0usize);
    for k in 0..100 {
        let n = 1 + k % 3;
        let model = KaehlerModel::new(n);
        let rho = realify(&rng.skew_hermitian(n));
        match curvature_from_rho(&model, &rho) {
            Ok(r) => {
                symmetry = symmetry.max(r.symmetry_residuals(Some(model.j())).max());
                match fit_rho(&model, &r) {
                    Ok(fit) => {
                        fit_residual = fit_residual.max(fit.relative_residual);
                        round_trip = round_trip.max((&fit.rho - &rho).abs().max() / rho.abs().max());
                        deficiency = deficiency.max(fit.rank_deficiency);
                    }
                    Err(e) => out.error("fit", e),
                }
            }
            Err(e) => out.error("template", e),
        }
    }
    out.at_most("symmetry_and_bianchi", symmetry, 1e-10);
    out.at_most("fit_relative_residual", fit_residual, 1e-9);
    out.at_most("fit_round_trip", round_trip, 1e-9);
    out.at_most("rank_deficiency", deficiency as f64, 0.0);
    out
}

pub fn direction_flat(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(4, "single-direction flatness");
    let mut rng = SeededRng::derive(seed, 4);
    let mut kernel = 0usize;
    let mut smallest = f64::INFINITY;
    for n in 1..=3 {
        let model = KaehlerModel::new(n);
        for _ in 0..20 {
            let x0 = rng.unit_real_vector(2 * n);
            let rho = realify(&rng.skew_hermitian(n));
            match direction_flat_check(&model, &rho, &x0, 1e-10) {
                Ok(r) => {
                    kernel = kernel.max(r.kernel_dimension);
                    smallest = smallest.min(r.smallest_relative_singular);
                }
                Err(e) => out.error("direction map", e),
            }
        }
    }
    out.at_most("kernel_dimension", kernel as f64, 0.0);
    out.at_least("smallest_relative_singular", smallest, 1e-8);
    out
}

pub fn cone_flatness_criterion(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(5, "flat cone over the round sphere");
    let mut rng = SeededRng::derive(seed, 5);
    let (mut flat, mut relation, mut control) = (0.0_f64, 0.0_f64, f64::INFINITY);
    for n in 1..=2 {
        let dim = 2 * n + 1;
        let sphere = StereographicSphere::unit(dim);
        let ellipsoid = StereographicEllipsoid { axes: control_axes(dim) };
        for u in sample_chart_points(&mut rng, dim, 4) {
            let t = rng.uniform(0.5, 2.0);
            let run = || -> Result<(f64, f64, f64, f64), crate::numgeom::NumGeomError> {
                Ok((
                    cone_flatness(&sphere, &u, t, FD_STEP)?,
                    cone_relation_residual(&sphere, &u, FD_STEP)?,
                    cone_relation_residual(&ellipsoid, &u, FD_STEP)?,
                    cone_flatness(&ellipsoid, &u, 1.0, FD_STEP)?,
                ))
            };
            match run() {
                Ok((f, r1, r2, c)) => {
                    flat = flat.max(f);
                    relation = relation.max(r1).max(r2);
                    control = control.min(c);
                }
                Err(e) => out.error("cone", e),
            }
        }
    }
    out.at_most("max_riemann_entry", flat, 1e-3);
    out.at_most("cone_relation", relation, 1e-3);
    out.at_least("ellipsoid_control", control, 0.1);
    out
}

pub fn sasaki_criterion(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(6, "Sasaki identity on the Hopf sphere");
    let mut rng = SeededRng::derive(seed, 6);
    let (mut identity, mut killing, mut unit, mut radius_two) = (0.0_f64, 0.0_f64, 0.0_f64, f64::INFINITY);
    let unit_data = hopf_data(StereographicSphere::unit(3)).expect("odd dimension");
    let big_data = hopf_data(StereographicSphere { dim: 3, radius: 2.0 }).expect("odd dimension");
    for u in sample_chart_points(&mut rng, 3, 8) {
        match (sasaki_residual(&unit_data, &u, FD_STEP), sasaki_residual(&big_data, &u, FD_STEP)) {
            (Ok(a), Ok(b)) => {
                identity = identity.max(a.identity_residual);
                killing = killing.max(a.killing_residual);
                unit = unit.max(a.unit_length_residual);
                radius_two = radius_two.min(b.identity_residual);
            }
            (Err(e), _) | (_, Err(e)) => out.error("sasaki", e),
        }
    }
    out.at_most("identity_residual", identity, 1e-3);
    out.at_most("killing_residual", killing, 1e-3);
    out.at_most("unit_length_residual", unit, 1e-3);
    out.at_least("radius_two_identity_residual", radius_two, 0.1);
    out
}

pub fn quotient_curvature_criterion(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(7, "quotient curvature template");
    let mut rng = SeededRng::derive(seed, 7);
    let convention = SigmaConvention::Flipped;
    let models = [ConeModel::cpn(2, convention), ConeModel::random(&mut rng, 3, convention), ConeModel::random(&mut rng, 3, convention)];
    let (mut residual, mut ratio) = (0.0_f64, f64::INFINITY);
    for (k, model) in models.iter().enumerate() {
        let report = model.sample(seed.wrapping_add(700 + k as u64), 10).and_then(|pts| verify_curvature_prop(model, &pts, FD_STEP));
        match report {
            Ok(r) => {
                residual = residual.max(r.max_residual);
                ratio = ratio.min(r.min_control_ratio);
            }
            Err(e) => out.error("model", e),
        }
    }
    // The other sign convention has an empty section for CP^n.
    let paper_empty = ConeModel::cpn(2, SigmaConvention::Paper).sample(seed, 1).is_err();
    out.metrics.insert("sigma_sign_paper_cpn_section_empty", if paper_empty { 1.0 } else { 0.0 });
    out.at_most("max_relative_residual", residual, 1e-3);
    out.at_least("control_ratio", ratio, 10.0);
    out
}

pub fn tower_criterion(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(8, "totally geodesic tower");
    let mut rng = SeededRng::derive(seed, 8);
    let convention = SigmaConvention::Flipped;
    let n = 3;
    let mut cases = vec![(cpn_generator(n - 1), -1.0 / (2.0 * (n as f64 + 2.0)))];
    for _ in 0..3 {
        let a = random_diagonal(&mut rng, 3, convention);
        cases.push((a, rng.uniform(-1.0, 1.0)));
    }
    let (mut ii, mut control, mut affinity) = (0.0_f64, f64::INFINITY, 0.0_f64);
    for (k, (a, lambda0)) in cases.iter().enumerate() {
        let report = cone_model_of(a, convention)
            .map_err(|e| e.to_string())
            .and_then(|m| m.sample(seed.wrapping_add(800 + k as u64), 3).map_err(|e| e.to_string()))
            .and_then(|pts| verify_tower_geodesic(a, *lambda0, &pts, FD_STEP, convention).map_err(|e| e.to_string()));
        match report {
            Ok(r) => {
                ii = ii.max(r.max_second_fundamental);
                control = control.min(r.control_second_fundamental);
            }
            Err(e) => out.error("tower", e),
        }
        affinity = affinity.max(affinity_residual(a, *lambda0, rng.uniform(-1.0, 1.0), rng.uniform(0.0, 1.0)));
    }
    out.at_most("max_second_fundamental", ii, 1e-3);
    out.at_least("bent_control", control, 0.05);
    out.at_most("lambda0_affinity", affinity, 1e-14);
    out
}

pub fn duality_criterion(seed: u64) -> CriterionResult {
    let mut out = CriterionResult::new(9, "duality of flows");
    let mut rng = SeededRng::derive(seed, 9);
    let (mut residual, mut naive, mut equivariance) = (0.0_f64, f64::INFINITY, 0.0_f64);
    for _ in 0..20 {
        let a = rng.skew_hermitian(3);
        let points: Vec<CVec> = (0..5).map(|_| rng.complex_vector(3)).collect();
        match duality_action_check(&a, &points) {
            Ok(r) => {
                residual = residual.max(r.residual);
                naive = naive.min(r.naive_residual);
            }
            Err(e) => out.error("duality", e),
        }
        let g = random_symplectic(&mut rng, 6, 1.0);
        equivariance = equivariance.max(sp_equivariance_residual(&g, &rng.real_vector(6)));
    }
    out.at_most("trajectory_residual", residual, 1e-6);
    out.at_most("sp_square_equivariance", equivariance, 1e-10);
    out.metrics.insert("untwisted_flow_residual", naive);
    out
}

/// Criteria 1 to 9. Determinism is judged by comparing whole reports.
pub fn run_acceptance(seed: u64) -> AcceptanceReport {
    let criteria = vec![
        orbit_classification(seed, 200, 5),
        char_poly_invariance(seed),
        curvature_template(seed),
        direction_flat(seed),
        cone_flatness_criterion(seed),
        sasaki_criterion(seed),
        quotient_curvature_criterion(seed),
        tower_criterion(seed),
        duality_criterion(seed),
    ];
    AcceptanceReport::new(seed, criteria)
}

/// Criterion 10 from two serialized reports of the same seed.
pub fn determinism(first: &str, second: &str) -> CriterionResult {
    let mut out = CriterionResult::new(10, "determinism");
    out.metrics.insert("bytes", first.len() as f64);
    let differing = first.bytes().zip(second.bytes()).filter(|(a, b)| a != b).count() + first.len().abs_diff(second.len());
    out.at_most("differing_bytes", differing as f64, 0.0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpn_char_poly_expansion() {
        // n = 1: (t + i/6)^2 (t - i/3).
        let p = cpn_char_poly(1);
        let eval = |t: C64| p.iter().rev().fold(c(0.0, 0.0), |acc, z| acc * t + z);
        for t in [c(0.3, 0.1), c(-1.0, 2.0)] {
            let direct = (t + c(0.0, 1.0 / 6.0)).powi(2) * (t - c(0.0, 1.0 / 3.0));
            assert!((eval(t) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn small_orbit_run_passes() {
        let r = orbit_classification(7, 4, 2);
        assert!(r.passed, "{:?}", r.notes);
    }

    #[test]
    fn determinism_counts_differences() {
        assert!(determinism("abc", "abc").passed);
        let r = determinism("abc", "abd");
        assert!(!r.passed);
        assert_eq!(r.metrics["differing_bytes"], 1.0);
    }

    #[test]
    fn summary_line_format() {
        let mut r = CriterionResult::new(3, "x");
        r.at_most("a", 0.5, 1.0);
        assert!(r.summary_line().starts_with("[PASS] criterion  3 x: a=5.000e-1"));
        r.at_least("b", 0.0, 1.0);
        assert!(r.summary_line().starts_with("[FAIL]"));
    }
}
