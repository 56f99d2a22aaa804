//! Command-line front end. Every command writes one JSON document.
//!
//! Exit codes: 0 success, 2 validation failure, 3 malformed JSON input,
//! 4 ill-conditioned numerical decision.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cone::{verify_curvature_prop, ConeModel, SigmaConvention};
use crate::curvature::{curvature_from_rho, fit_rho, KaehlerModel};
use crate::grading::{grade_split, normal_form};
use crate::hermitian::{check_su, HermitianSpace, SuElement, DEFAULT_MEMBERSHIP_TOL};
use crate::json::{self, matrix_pairs, JsonError};
use crate::linalg::{complexify, realify, CMat, CVec};
use crate::orbits::{char_poly, classify_with, EpsilonCalibration, OrbitError, DEFAULT_ORBIT_TOL};
use crate::rng::SeededRng;
use crate::sasaki::cpn_pipeline;
use crate::selftest::{determinism, run_acceptance, DEFAULT_SEED};
use crate::tower::{
    affinity_residual, cone_model_of, cpn_generator, duality_action_check, embed_generator, random_diagonal, random_symplectic,
    sp_equivariance_residual, verify_tower_geodesic,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_BAD_JSON: i32 = 3;
pub const EXIT_ILL_CONDITIONED: i32 = 4;

const FD_STEP_RANGE: (f64, f64) = (1e-6, 1e-2);

#[derive(Debug, Parser)]
#[command(name = "bochner", version, about = "Bochner-Kähler geometry from su(n,1) generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Orbit type of an su(n,1) element.
    Classify,
    /// Grade components and structure functions.
    Grade,
    /// Characteristic polynomial with the factorization cross-check.
    Charpoly,
    /// Curvature template of a u(n) element.
    Curvature,
    /// Sphere, cone and CP^n verification pipeline.
    VerifyCpn,
    /// Quotient curvature against the template on sample points of the section.
    VerifyProp,
    /// Totally geodesic embedding of the tower step.
    Tower,
    /// u(n+1) flows on the cone against linear flows on R^{2n+2}.
    Duality,
    /// The acceptance suite.
    Selftest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SigmaSign {
    Paper,
    Flipped,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Calibration {
    Rank1,
    Swapped,
}

#[derive(Debug, clap::Args)]
struct Options {
    /// Matrix JSON document.
    #[arg(short = 'm', long, global = true)]
    matrix: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Orbit classification tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long = "fd-step", global = true, default_value_t = 1e-4)]
    fd_step: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long = "sigma-sign", global = true, value_enum, default_value = "flipped")]
    sigma_sign: SigmaSign,
    #[arg(long = "epsilon-calibration", global = true, value_enum, default_value = "rank1")]
    epsilon_calibration: Calibration,
    #[arg(long, global = true, allow_negative_numbers = true)]
    lambda0: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Options {
    fn convention(&self) -> SigmaConvention {
        match self.sigma_sign {
            SigmaSign::Paper => SigmaConvention::Paper,
            SigmaSign::Flipped => SigmaConvention::Flipped,
        }
    }

    fn calibration(&self) -> EpsilonCalibration {
        match self.epsilon_calibration {
            Calibration::Rank1 => EpsilonCalibration::Rank1,
            Calibration::Swapped => EpsilonCalibration::Swapped,
        }
    }
}

/// A failed run: exit code plus the error document for standard error.
#[derive(Debug)]
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
    details: Value,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, kind: "validation", message: message.into(), details: Value::Null }
    }

    fn with_details(code: i32, kind: &'static str, message: impl Into<String>, details: impl Serialize) -> Self {
        Self { code, kind, message: message.into(), details: serde_json::to_value(details).unwrap_or(Value::Null) }
    }

    fn document(&self) -> Value {
        json!({ "error": self.kind, "message": self.message, "exit_code": self.code, "details": self.details })
    }
}

impl From<JsonError> for Failure {
    fn from(e: JsonError) -> Self {
        match e {
            JsonError::Io(_) => Failure::validation(e.to_string()),
            other => Failure { code: EXIT_BAD_JSON, kind: "bad_json", message: other.to_string(), details: Value::Null },
        }
    }
}

impl From<OrbitError> for Failure {
    fn from(e: OrbitError) -> Self {
        let code = if matches!(e, OrbitError::IllConditioned { .. }) { EXIT_ILL_CONDITIONED } else { EXIT_VALIDATION };
        let kind = if code == EXIT_ILL_CONDITIONED { "ill_conditioned" } else { "orbit" };
        Failure::with_details(code, kind, e.to_string(), &e)
    }
}

fn fail<E: std::fmt::Display + Serialize>(kind: &'static str) -> impl Fn(E) -> Failure {
    move |e| Failure::with_details(EXIT_VALIDATION, kind, e.to_string(), &e)
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let failure = Failure::validation(e.to_string().trim_end().to_string());
            let _ = err.write_all(json::to_string(&failure.document()).as_bytes());
            return failure.code;
        }
    };
    let result = validate(&cli.options).and_then(|_| dispatch(&cli));
    match result {
        Ok((report, code)) => {
            let text = json::to_string(&report);
            let written = match &cli.options.out {
                Some(path) => fs::write(path, text.as_bytes()).map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display()))),
                None => out.write_all(text.as_bytes()).map_err(|e| Failure::validation(e.to_string())),
            };
            match written {
                Ok(()) => code,
                Err(f) => {
                    let _ = err.write_all(json::to_string(&f.document()).as_bytes());
                    f.code
                }
            }
        }
        Err(f) => {
            let _ = err.write_all(json::to_string(&f.document()).as_bytes());
            f.code
        }
    }
}

fn validate(o: &Options) -> Result<(), Failure> {
    let (lo, hi) = FD_STEP_RANGE;
    if !(o.fd_step >= lo && o.fd_step <= hi) {
        return Err(Failure::validation(format!("--fd-step must lie in [{lo:e}, {hi:e}], got {}", o.fd_step)));
    }
    if let Some(tol) = o.tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Failure::validation(format!("--tol must be positive, got {tol}")));
        }
    }
    if o.n == Some(0) {
        return Err(Failure::validation("--n must be at least 1"));
    }
    if o.samples == Some(0) {
        return Err(Failure::validation("--samples must be at least 1"));
    }
    if let Some(l) = o.lambda0 {
        if !l.is_finite() {
            return Err(Failure::validation("--lambda0 must be finite"));
        }
    }
    Ok(())
}

type Outcome = Result<(Value, i32), Failure>;

fn dispatch(cli: &Cli) -> Outcome {
    let o = &cli.options;
    match cli.command {
        Command::Classify => classify_cmd(o),
        Command::Grade => grade_cmd(o),
        Command::Charpoly => charpoly_cmd(o),
        Command::Curvature => curvature_cmd(o),
        Command::VerifyCpn => verify_cpn_cmd(o),
        Command::VerifyProp => verify_prop_cmd(o),
        Command::Tower => tower_cmd(o),
        Command::Duality => duality_cmd(o),
        Command::Selftest => selftest_cmd(o),
    }
}

fn read_input(o: &Options) -> Result<String, Failure> {
    let path = o.matrix.as_ref().ok_or_else(|| Failure::validation("--matrix is required for this command"))?;
    fs::read_to_string(path).map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))
}

fn su_input(o: &Options) -> Result<SuElement, Failure> {
    let (n, m) = json::parse_matrix(&read_input(o)?)?;
    let space = HermitianSpace::standard(n).map_err(|e| Failure::validation(e.to_string()))?;
    check_su(&m, &space, DEFAULT_MEMBERSHIP_TOL).map_err(fail("not_in_su"))
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn classify_cmd(o: &Options) -> Outcome {
    let a = su_input(o)?;
    let tol = o.tol.unwrap_or(DEFAULT_ORBIT_TOL);
    let orbit = classify_with(&a, tol, o.calibration())?;
    let mut report = to_value(&orbit);
    if let Value::Object(map) = &mut report {
        map.insert("n".into(), json!(a.n()));
        map.insert("tol".into(), json!(tol));
    }
    Ok((report, EXIT_OK))
}

fn grade_cmd(o: &Options) -> Outcome {
    let a = su_input(o)?;
    let parts = grade_split(&a);
    let components: Value = (-2..=2).map(|k| (k.to_string(), to_value(matrix_pairs(parts.grade(k))))).collect::<serde_json::Map<_, _>>().into();
    let nf = normal_form(&a).map_err(fail("grading"))?;
    Ok((
        json!({
            "n": a.n(),
            "grade_norms": parts.norms(),
            "components": components,
            "normal_form": matrix_pairs(&nf.matrix),
            "structure_functions": nf.functions,
        }),
        EXIT_OK,
    ))
}

fn charpoly_cmd(o: &Options) -> Outcome {
    let a = su_input(o)?;
    Ok((json!({ "n": a.n(), "charpoly": char_poly(&a) }), EXIT_OK))
}

fn curvature_cmd(o: &Options) -> Outcome {
    let rho = match &o.matrix {
        Some(_) => json::parse_square(&read_input(o)?)?,
        None => SeededRng::derive(o.seed, 0xcu64).skew_hermitian(o.n.unwrap_or(2)),
    };
    let n = rho.nrows();
    let model = KaehlerModel::new(n);
    let real = realify(&rho);
    let tensor = curvature_from_rho(&model, &real).map_err(fail("curvature"))?;
    let fit = fit_rho(&model, &tensor).map_err(fail("curvature"))?;
    let residuals = tensor.symmetry_residuals(Some(model.j()));
    Ok((
        json!({
            "n": n,
            "rho": matrix_pairs(&rho),
            "symmetry_residuals": residuals,
            "fit": { "rho": matrix_pairs(&complexify(&fit.rho)), "relative_residual": fit.relative_residual, "rank_deficiency": fit.rank_deficiency },
            "tensor": tensor,
        }),
        EXIT_OK,
    ))
}

fn verify_cpn_cmd(o: &Options) -> Outcome {
    let n = o.n.unwrap_or(1);
    let report = cpn_pipeline(n, o.fd_step, o.seed, o.samples.unwrap_or(5)).map_err(fail("pipeline"))?;
    Ok((to_value(report), EXIT_OK))
}

fn verify_prop_cmd(o: &Options) -> Outcome {
    let convention = o.convention();
    let model = match &o.matrix {
        Some(_) => cone_model_of(&su_input(o)?, convention).map_err(fail("cone"))?,
        None => ConeModel::cpn(o.n.unwrap_or(2), convention),
    };
    let points = model.sample(o.seed, o.samples.unwrap_or(10)).map_err(fail("cone"))?;
    let report = verify_curvature_prop(&model, &points, o.fd_step).map_err(fail("cone"))?;
    Ok((to_value(report), EXIT_OK))
}

fn tower_cmd(o: &Options) -> Outcome {
    let convention = o.convention();
    let (a, default_lambda0) = match &o.matrix {
        Some(_) => (su_input(o)?, 0.3),
        None => {
            let n = o.n.unwrap_or(2).max(2);
            (cpn_generator(n - 1), -1.0 / (2.0 * (n as f64 + 2.0)))
        }
    };
    let lambda0 = o.lambda0.unwrap_or(default_lambda0);
    let embedding = embed_generator(&a, lambda0).map_err(fail("tower"))?;
    let model = cone_model_of(&a, convention).map_err(fail("tower"))?;
    let points = model.sample(o.seed, o.samples.unwrap_or(3)).map_err(fail("cone"))?;
    let report = verify_tower_geodesic(&a, lambda0, &points, o.fd_step, convention).map_err(fail("tower"))?;
    Ok((
        json!({
            "n": a.n(),
            "lambda0": lambda0,
            "seed": o.seed,
            "convention": convention,
            "d_matrix": matrix_pairs(embedding.d_matrix.matrix()),
            "affinity_residual": affinity_residual(&a, lambda0, lambda0 + 1.0, 0.5),
            "report": report,
        }),
        EXIT_OK,
    ))
}

fn duality_cmd(o: &Options) -> Outcome {
    let mut rng = SeededRng::derive(o.seed, 0xd0a1);
    let a = match &o.matrix {
        Some(_) => json::parse_square(&read_input(o)?)?,
        None => rng.skew_hermitian(o.n.unwrap_or(2) + 1),
    };
    let m = a.nrows();
    let points: Vec<CVec> = (0..o.samples.unwrap_or(20)).map(|_| rng.complex_vector(m)).collect();
    let report = duality_action_check(&a, &points).map_err(fail("duality"))?;
    let g = random_symplectic(&mut rng, 2 * m, 1.0);
    let equivariance = sp_equivariance_residual(&g, &rng.real_vector(2 * m));
    Ok((json!({ "n": m - 1, "seed": o.seed, "matrix": matrix_pairs(&a), "report": report, "sp_square_equivariance": equivariance }), EXIT_OK))
}

fn selftest_cmd(o: &Options) -> Outcome {
    let first = run_acceptance(o.seed);
    let second = run_acceptance(o.seed);
    let mut criteria = first.criteria.clone();
    criteria.push(determinism(&json::to_string(&first), &json::to_string(&second)));
    let report = crate::selftest::AcceptanceReport::new(o.seed, criteria);
    let code = if report.passed { EXIT_OK } else { EXIT_VALIDATION };
    Ok((to_value(report), code))
}

/// Random diagonal generator as a matrix document, for examples and scripts.
pub fn example_generator(seed: u64, n: usize) -> Value {
    let a: CMat = random_diagonal(&mut SeededRng::new(seed), n, SigmaConvention::Flipped).into_matrix();
    json::matrix_document(n, &a)
}
