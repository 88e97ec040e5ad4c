//! Base-case power flow on the built-in 69-bus feeder, plus a loaded-hour
//! comparison with DG and PV injecting.
//!
//!     cargo run --release --example base_case_powerflow

use feeder_ems::netmodel::builtin_ieee69;
use feeder_ems::objectives::{DecisionVector, Evaluator};
use feeder_ems::powerflow::{check_limits, solve, InjectionProfile, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use feeder_ems::scenario::{ForecastProfile, Scenario};

fn main() -> feeder_ems::Result<()> {
    let net = builtin_ieee69();
    let base = solve(&net, &InjectionProfile::from_loads(&net), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    let (vmin, at) = base
        .v
        .iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |acc, (i, &v)| if v < acc.0 { (v, i) } else { acc });
    println!("buses {}  branches {}", net.n_buses(), net.branches.len());
    println!("load          {:>10.1} kW", net.total_load_kw());
    println!("slack         {:>10.1} kW", base.p_slack);
    println!("losses        {:>10.1} kW", base.p_loss_total);
    println!("min voltage   {:>10.4} pu at bus {}", vmin, net.buses[at].id);
    println!("iterations    {:>10}", base.iterations);

    // Peak hour of the forecast with every DG at half output.
    let f = ForecastProfile::default();
    let s = Scenario::from_forecast(&f);
    let peak = (0..f.load_factor.len()).max_by(|&a, &b| f.load_factor[a].total_cmp(&f.load_factor[b])).unwrap();
    let mut x = DecisionVector::zeros(&net);
    for (row, dg) in x.dg_power.iter_mut().zip(&net.dgs) {
        row.iter_mut().for_each(|p| *p = 0.5 * dg.p_max);
    }
    let ev = Evaluator::new(&net)?;
    let sol = solve(&net, &ev.injections(&x, &s, peak), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)?;
    let viol = check_limits(&sol, &net);
    println!();
    println!("hour {peak}, load factor {:.2}, DG at half output", f.load_factor[peak]);
    println!("slack         {:>10.1} kW", sol.p_slack);
    println!("losses        {:>10.1} kW", sol.p_loss_total);
    println!("min voltage   {:>10.4} pu", sol.v.iter().copied().fold(f64::INFINITY, f64::min));
    println!("limits ok     {:>10}", viol.is_empty());
    Ok(())
}
