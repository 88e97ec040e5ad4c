//! Compares GWO, PSO and the hybrid on 10-D sphere and Rastrigin.
//!
//!     cargo run --release --example hybrid_benchmark -- [seeds]

use feeder_ems::optimizer::{benchmarks, run, single_objective, Algorithm, HybridConfig, SearchSpace};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn main() -> feeder_ems::Result<()> {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let problems: [(&str, fn(&[f64]) -> f64, f64); 2] = [
        ("sphere", benchmarks::sphere, benchmarks::SPHERE_BOUND),
        ("rastrigin", benchmarks::rastrigin, benchmarks::RASTRIGIN_BOUND),
    ];
    println!("{:<10} {:>8} {:>14} {:>14} {:>14}", "function", "algo", "median", "best", "worst");
    for (name, f, bound) in problems {
        let space = SearchSpace::uniform(10, -bound, bound)?;
        for algo in [Algorithm::Gwo, Algorithm::Pso, Algorithm::Hybrid] {
            let finals = (0..seeds)
                .map(|seed| {
                    let cfg = HybridConfig {
                        population: 50,
                        iterations: 100,
                        seed,
                        weights: [1.0, 0.0],
                        ..Default::default()
                    };
                    run(algo, &cfg, &space, None, single_objective(f)).map(|r| r.best.f.f1)
                })
                .collect::<feeder_ems::Result<Vec<f64>>>()?;
            let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = finals.iter().copied().fold(0.0, f64::max);
            println!("{name:<10} {:>8} {:>14.4e} {:>14.4e} {:>14.4e}", format!("{algo:?}").to_lowercase(), median(finals), lo, hi);
        }
    }
    Ok(())
}
