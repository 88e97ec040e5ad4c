//! Payback and net profit of the PV+ESS investment for a given daily saving.
//!
//!     cargo run --release --example profit_analysis -- [daily_saving]

use feeder_ems::objectives::{profit_analysis, C_NPV, INVESTMENT, PROFIT_YEARS};

fn main() -> feeder_ems::Result<()> {
    let saving: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2857.0);
    let p = profit_analysis(saving, 0.0, INVESTMENT, PROFIT_YEARS, C_NPV)?;
    println!("daily saving   {saving:>14.2} $");
    println!("annual         {:>14.2} $", p.annual_delta_toc);
    println!("investment     {:>14.2} $", p.investment);
    println!("net profit     {:>14.2} $", p.net_profit);
    match p.payback_year {
        Some(y) => println!("payback        {y:>14}"),
        None => println!("payback        {:>14}", "never"),
    }
    println!("\nyear,cumulative");
    for (y, c) in p.cumulative.iter().enumerate() {
        println!("{},{:.2}", y + 1, c);
    }
    Ok(())
}
