//! Archive and best-compromise selection on a two-objective toy problem
//! (Schaffer N.1); prints the front as CSV.
//!
//!     cargo run --release --example pareto_compromise -- [w1] [w2]

use feeder_ems::moo::{best_compromise, ObjectiveVector};
use feeder_ems::optimizer::{run, Algorithm, HybridConfig, SearchSpace};

fn main() -> feeder_ems::Result<()> {
    let arg = |i: usize, d: f64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let weights = [arg(1, 0.5), arg(2, 0.5)];
    let cfg = HybridConfig {
        population: 30,
        iterations: 60,
        archive_capacity: 25,
        weights,
        ..Default::default()
    };
    let space = SearchSpace::uniform(1, -10.0, 10.0)?;
    let res = run(Algorithm::Hybrid, &cfg, &space, None, |x: &[f64]| {
        Ok(ObjectiveVector::new(x[0] * x[0], (x[0] - 2.0).powi(2)))
    })?;
    print!("{}", res.archive.to_csv(weights)?);
    let bcs = best_compromise(&res.archive, weights)?;
    eprintln!("compromise x = {:.4}  f = ({:.4}, {:.4})", bcs.x[0], bcs.f.f1, bcs.f.f2);
    Ok(())
}
