//! Acceptance run: one line per criterion, nonzero exit on any failure.
//!
//! CSVs and the report land in `target/acceptance` (or `$ACCEPTANCE_OUT`).

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use spectral_cnn::validate::{
    check_architecture, check_decay, check_determinism, check_exactness, check_fhn, check_gradients,
    check_lipschitz, check_periodization, check_scaling, Check, ValidateConfig,
};

type CheckFn = fn(&ValidateConfig) -> spectral_cnn::Result<Check>;

fn out_dir() -> PathBuf {
    std::env::var_os("ACCEPTANCE_OUT").map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance")
    })
}

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored
    let cfg = ValidateConfig::default();
    let start = Instant::now();
    let deterministic: [(usize, CheckFn); 7] = [
        (1, check_exactness),
        (2, check_architecture),
        (3, check_decay),
        (4, check_lipschitz),
        (5, check_periodization),
        (6, check_gradients),
        (8, check_fhn),
    ];

    let mut checks: Vec<Check> = Vec::new();
    let mut failed = 0;
    let mut record = |id: usize, result: spectral_cnn::Result<Check>, checks: &mut Vec<Check>| match result {
        Ok(c) => {
            println!("{}", c.report);
            if !c.report.passed {
                failed += 1;
            }
            checks.push(c);
        }
        Err(e) => {
            println!("[FAIL] {id}: error: {e}");
            failed += 1;
        }
    };

    for (id, check) in deterministic {
        record(id, check(&cfg), &mut checks);
    }
    let first_run: Vec<Check> = checks.clone();
    record(7, check_scaling(&cfg), &mut checks);
    record(9, check_determinism(&cfg, &first_run), &mut checks);

    let dir = out_dir();
    let written = std::fs::create_dir_all(&dir).and_then(|_| {
        for (name, content) in checks.iter().flat_map(|c| c.files.iter()) {
            std::fs::write(dir.join(name), content)?;
        }
        let mut report: Vec<_> = checks.iter().map(|c| c.report.clone()).collect();
        report.sort_by_key(|r| r.id);
        std::fs::write(dir.join("report.txt"), report.iter().map(|r| format!("{r}\n")).collect::<String>())
    });
    if let Err(e) = written {
        println!("could not write outputs to {}: {e}", dir.display());
    }

    println!(
        "acceptance: {} of 9 criteria passed in {:.0}s, outputs in {}",
        9 - failed,
        start.elapsed().as_secs_f64(),
        dir.display()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
