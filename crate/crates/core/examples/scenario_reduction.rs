//! Draws a scenario pool from the forecast, reduces it, and prints run
//! statistics of the daily load factor.
//!
//!     cargo run --release --example scenario_reduction -- [pool] [keep] [seed]

use feeder_ems::scenario::{generate, reduce, DistanceScale, ForecastProfile, RunStatistics};

fn main() -> feeder_ems::Result<()> {
    let arg = |i: usize, d: u64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (pool, keep, seed) = (arg(1, 200) as usize, arg(2, 30) as usize, arg(3, 7));
    let f = ForecastProfile::default();
    let set = generate(&f, pool, seed)?;
    println!("drawn {pool}, distinct {}", set.len());
    let red = reduce(&set, keep.min(set.len()), &DistanceScale::from_forecast(&f))?;
    println!("kept {}, total probability {:.12}", red.len(), red.total_probability());

    let daily: Vec<f64> = red.scenarios.iter().map(|s| s.load_factor.iter().sum::<f64>() / 24.0).collect();
    let probs: Vec<f64> = red.scenarios.iter().map(|s| s.probability).collect();
    let st = RunStatistics::from_weighted(&daily, &probs)?;
    println!("daily mean load factor: mean {:.4}  sd {:.4}  ci95 {:.4}  ev {:.4}", st.mean, st.sd, st.ci95_halfwidth, st.ev);

    let mut top: Vec<_> = red.scenarios.iter().zip(&daily).collect();
    top.sort_by(|a, b| b.0.probability.total_cmp(&a.0.probability));
    println!("\n{:>10} {:>10}", "prob", "load");
    for (s, d) in top.iter().take(5) {
        println!("{:>10.5} {:>10.4}", s.probability, d);
    }
    Ok(())
}
