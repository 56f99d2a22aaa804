//! Runs every acceptance criterion at its stated tolerance and prints one
//! line per criterion. Exits nonzero if any criterion fails.

use std::process::{Command, ExitCode};

use bochner::selftest::{
    char_poly_invariance, cone_flatness_criterion, curvature_template, determinism, direction_flat, duality_criterion,
    orbit_classification, quotient_curvature_criterion, sasaki_criterion, tower_criterion, CriterionResult, DEFAULT_SEED,
};

fn selftest_stdout() -> Result<String, String> {
    let output = Command::new(env!("CARGO_BIN_EXE_bochner"))
        .args(["selftest", "--seed", &DEFAULT_SEED.to_string()])
        .output()
        .map_err(|e| e.to_string())?;
    if !output.status.success() {
        return Err(format!("selftest exited with {}: {}", output.status, String::from_utf8_lossy(&output.stderr)));
    }
    String::from_utf8(output.stdout).map_err(|e| e.to_string())
}

fn binary_determinism() -> CriterionResult {
    match (selftest_stdout(), selftest_stdout()) {
        (Ok(first), Ok(second)) => determinism(&first, &second),
        (Err(e), _) | (_, Err(e)) => {
            let mut failed = determinism("", "x");
            failed.notes.push(e);
            failed
        }
    }
}

fn main() -> ExitCode {
    let seed = DEFAULT_SEED;
    let criteria = [
        orbit_classification(seed, 200, 5),
        char_poly_invariance(seed),
        curvature_template(seed),
        direction_flat(seed),
        cone_flatness_criterion(seed),
        sasaki_criterion(seed),
        quotient_curvature_criterion(seed),
        tower_criterion(seed),
        duality_criterion(seed),
        binary_determinism(),
    ];
    let mut failures = 0;
    for c in &criteria {
        println!("{}", c.summary_line());
        for note in &c.notes {
            println!("    {note}");
        }
        failures += usize::from(!c.passed);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
