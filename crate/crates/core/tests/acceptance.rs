//! Runs every acceptance criterion once with a fixed seed and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use levymax::experiments::{run_criterion, CRITERIA};

const SEED: u64 = 20_240_601;

fn main() -> ExitCode {
    let mut failed = 0;
    for (id, name, limit) in CRITERIA {
        let start = Instant::now();
        let result = run_criterion(id, SEED);
        let secs = start.elapsed().as_secs_f64();
        let in_time = limit.map_or(true, |l| secs < l);
        let (ok, detail) = match &result {
            Ok(o) => (o.passed && in_time, o.summary.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = match limit {
            Some(l) => format!("{secs:.2}s, limit {l}s"),
            None => format!("{secs:.2}s"),
        };
        println!("AC{id:02} {:<4} {name}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
