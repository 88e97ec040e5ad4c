//! Stochastic cost study over several scenario counts; prints the per-count
//! statistics table.
//!
//!     cargo run --release --example stochastic_study -- [repeats] [iterations]

use feeder_ems::study::{run_study, stats_csv, Mode, ObjectiveMode, StatsBasis, StudyConfig};

fn main() -> feeder_ems::Result<()> {
    let arg = |i: usize, d: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let mut cfg = StudyConfig {
        mode: Mode::Stoch,
        objective: ObjectiveMode::Cost,
        scenario_counts: vec![10, 20, 40],
        repeats: arg(1, 3),
        stats_basis: StatsBasis::Repeat,
        ..Default::default()
    };
    cfg.optimizer.population = 20;
    cfg.optimizer.iterations = arg(2, 30);
    let report = run_study(&cfg)?;
    print!("{}", stats_csv(&report.stats));
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    Ok(())
}
