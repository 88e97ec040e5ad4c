//! Small deterministic cost/ENS study on the built-in feeder; writes the
//! usual artifacts to a directory.
//!
//!     cargo run --release --example deterministic_study -- [out] [iterations]

use feeder_ems::study::{emit_artifacts, run_study, Mode, ObjectiveMode, StudyConfig};

fn main() -> feeder_ems::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "results/det".into());
    let iterations = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let mut cfg = StudyConfig {
        mode: Mode::Det,
        objective: ObjectiveMode::Multi,
        repeats: 1,
        out: out.clone().into(),
        ..Default::default()
    };
    cfg.optimizer.population = 30;
    cfg.optimizer.iterations = iterations;
    let report = run_study(&cfg)?;
    let rep = report.repeats().next().expect("one repeat");
    for r in &rep.runs {
        println!("{:<5} cost {:>10.2} $/day  ens {:>12.1}  penalty {:.3e}", r.label, r.f.f1, r.f.f2, r.f.penalty);
    }
    println!("front size {}", report.pareto.len());
    if let Some(p) = &report.profit {
        println!("annual saving {:.0} $, payback year {:?}", p.annual_delta_toc, p.payback_year);
    }
    let files = emit_artifacts(&report, &out)?;
    println!("{} files written to {out}", files.len());
    Ok(())
}
