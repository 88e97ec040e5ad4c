//! Schedule evaluation: operation cost, energy not supplied, storage dynamics,
//! constraint penalties and the long-horizon profit analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{radial_order, EssSpec, Network};
use crate::powerflow::{check_limits, InjectionProfile, Sweep, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use crate::scenario::{Scenario, ScenarioSet, HOURS};

pub use crate::moo::ObjectiveVector;

/// Net-present-value coefficient applied to yearly savings.
pub const C_NPV: f64 = 1.07;
/// Investment in PV arrays and storage over the study horizon, $.
pub const INVESTMENT: f64 = 9_751_200.0;
pub const PROFIT_YEARS: usize = 20;
pub const DEFAULT_PENALTY_WEIGHT: f64 = 1e6;

/// Hourly setpoints for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    /// kW per DG per hour.
    pub dg_power: Vec<Vec<f64>>,
    /// kW per ESS per hour; positive charges, negative discharges.
    pub ess_power: Vec<Vec<f64>>,
}

impl DecisionVector {
    pub fn zeros(net: &Network) -> Self {
        DecisionVector {
            dg_power: vec![vec![0.0; HOURS]; net.dgs.len()],
            ess_power: vec![vec![0.0; HOURS]; net.esss.len()],
        }
    }

    pub fn dimension(net: &Network) -> usize {
        (net.dgs.len() + net.esss.len()) * HOURS
    }

    /// Row-major: all DG rows, then all ESS rows.
    pub fn from_flat(net: &Network, x: &[f64]) -> Result<Self> {
        if x.len() != Self::dimension(net) {
            return Err(Error::Argument(format!(
                "decision vector has {} entries, expected {}",
                x.len(),
                Self::dimension(net)
            )));
        }
        let mut rows = x.chunks(HOURS).map(<[f64]>::to_vec);
        let dg_power = rows.by_ref().take(net.dgs.len()).collect();
        let ess_power = rows.collect();
        Ok(DecisionVector { dg_power, ess_power })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.dg_power.iter().chain(&self.ess_power).flatten().copied().collect()
    }

    /// Per-dimension box: DG limits, then storage charge/discharge limits.
    pub fn bounds(net: &Network) -> (Vec<f64>, Vec<f64>) {
        let mut lower = Vec::with_capacity(Self::dimension(net));
        let mut upper = Vec::with_capacity(Self::dimension(net));
        for dg in &net.dgs {
            lower.extend(std::iter::repeat_n(dg.p_min, HOURS));
            upper.extend(std::iter::repeat_n(dg.p_max, HOURS));
        }
        for ess in &net.esss {
            lower.extend(std::iter::repeat_n(-ess.p_discharge_max, HOURS));
            upper.extend(std::iter::repeat_n(ess.p_charge_max, HOURS));
        }
        (lower, upper)
    }

    fn check_shape(&self, net: &Network) -> Result<()> {
        let ok = self.dg_power.len() == net.dgs.len()
            && self.ess_power.len() == net.esss.len()
            && self.dg_power.iter().chain(&self.ess_power).all(|r| r.len() == HOURS);
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "decision vector shape does not match {} DGs / {} ESSs x {HOURS} h",
                net.dgs.len(),
                net.esss.len()
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyViolation {
    pub ess: usize,
    /// 1-based hour at whose end the bound is exceeded.
    pub hour: usize,
    /// kWh outside `[w_min, w_max]`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssTrajectory {
    /// kWh per ESS, 25 points; index 0 is the initial energy.
    pub energy: Vec<Vec<f64>>,
    pub feasible: bool,
    pub violations: Vec<EnergyViolation>,
}

/// Stored energy after one hour at signed power `p` (positive charges).
#[inline]
pub fn ess_step(w: f64, p: f64, spec: &EssSpec) -> f64 {
    if p >= 0.0 {
        w + spec.eff_charge * p
    } else {
        w + p / spec.eff_discharge
    }
}

pub fn ess_trajectory(x: &DecisionVector, specs: &[EssSpec]) -> EssTrajectory {
    let mut energy = Vec::with_capacity(specs.len());
    let mut violations = Vec::new();
    for (k, (spec, powers)) in specs.iter().zip(&x.ess_power).enumerate() {
        let mut w = spec.w_initial;
        let mut row = Vec::with_capacity(HOURS + 1);
        row.push(w);
        for (t, &p) in powers.iter().enumerate() {
            w = ess_step(w, p, spec);
            row.push(w);
            let excess = (spec.w_min - w).max(w - spec.w_max);
            if excess > 0.0 {
                violations.push(EnergyViolation {
                    ess: k,
                    hour: t + 1,
                    excess,
                });
            }
        }
        energy.push(row);
    }
    EssTrajectory {
        energy,
        feasible: violations.is_empty(),
        violations,
    }
}

/// Per-class penalty coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub flow: f64,
    pub voltage: f64,
    pub energy: f64,
    pub rate: f64,
    /// Charged once per non-converged power flow.
    pub nonconvergence: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        PenaltyWeights {
            flow: DEFAULT_PENALTY_WEIGHT,
            voltage: DEFAULT_PENALTY_WEIGHT,
            energy: DEFAULT_PENALTY_WEIGHT,
            rate: DEFAULT_PENALTY_WEIGHT,
            nonconvergence: DEFAULT_PENALTY_WEIGHT,
        }
    }
}

/// Normalized constraint overshoots: flows as a fraction of `s_max`, voltages
/// in pu, energies as a fraction of `w_max`, rates as a fraction of the limit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overshoots {
    pub flow: Vec<f64>,
    pub voltage: Vec<f64>,
    pub energy: Vec<f64>,
    pub rate: Vec<f64>,
    pub nonconverged: usize,
}

impl Overshoots {
    pub fn is_empty(&self) -> bool {
        self.flow.is_empty()
            && self.voltage.is_empty()
            && self.energy.is_empty()
            && self.rate.is_empty()
            && self.nonconverged == 0
    }
}

/// Weighted sum of squared overshoots plus a flat charge per non-converged flow.
pub fn penalty(v: &Overshoots, w: &PenaltyWeights) -> Result<f64> {
    let weights = [w.flow, w.voltage, w.energy, w.rate, w.nonconvergence];
    if weights.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::Argument("penalty weights must be >= 0".into()));
    }
    let classes = [(&v.flow, w.flow), (&v.voltage, w.voltage), (&v.energy, w.energy), (&v.rate, w.rate)];
    let mut total = 0.0;
    for (values, weight) in classes {
        if values.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::Argument("overshoots must be >= 0".into()));
        }
        total += weight * values.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(total + w.nonconvergence * v.nonconverged as f64)
}

/// How substation export (negative P_SS) is priced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportPolicy {
    /// Exported energy earns the hourly price.
    #[default]
    Credit,
    /// Exported energy earns nothing.
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationBreakdown {
    /// Substation import per hour, kW.
    pub p_slack: Vec<f64>,
    pub p_loss: Vec<f64>,
    /// Total PV injection per hour, kW.
    pub pv_injection: Vec<f64>,
    /// $ per hour.
    pub dg_cost: Vec<f64>,
    pub grid_cost: Vec<f64>,
    pub pv_cost: Vec<f64>,
    /// $/day
    pub cost: f64,
    /// kWh/yr
    pub ens: f64,
    pub penalty: f64,
    pub converged_hours: usize,
    pub overshoots: Overshoots,
}

/// Objective values of a schedule on every scenario of a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEvaluation {
    pub objective: ObjectiveVector,
    /// (cost, ens, penalty, probability) per scenario, in set order.
    pub per_scenario: Vec<(f64, f64, f64, f64)>,
}

/// Reusable evaluator holding the network and its precomputed sweep data.
#[derive(Debug, Clone)]
pub struct Evaluator {
    net: Network,
    sweep: Sweep,
    /// Sum of repair + restoration times along each bus's substation path, h/yr.
    path_outage: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub weights: PenaltyWeights,
    pub export: ExportPolicy,
}

impl Evaluator {
    pub fn new(net: &Network) -> Result<Self> {
        let order = radial_order(net);
        let sweep = Sweep::with_order(net, &order)?;
        let path_outage = order
            .paths
            .iter()
            .map(|p| {
                p.iter()
                    .map(|&k| net.branches[k].at_repair + net.branches[k].at_restoration)
                    .sum()
            })
            .collect();
        Ok(Evaluator {
            net: net.clone(),
            sweep,
            path_outage,
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
            weights: PenaltyWeights::default(),
            export: ExportPolicy::default(),
        })
    }

    pub fn with_weights(mut self, weights: PenaltyWeights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_export(mut self, export: ExportPolicy) -> Self {
        self.export = export;
        self
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    /// Bus injections for hour `t` (0-based).
    pub fn injections(&self, x: &DecisionVector, s: &Scenario, t: usize) -> InjectionProfile {
        let mut inj = InjectionProfile::zeros(self.net.n_buses());
        self.fill_injections(x, s, t, &mut inj);
        inj
    }

    fn fill_injections(&self, x: &DecisionVector, s: &Scenario, t: usize, inj: &mut InjectionProfile) {
        let lf = s.load_factor[t];
        for (i, bus) in self.net.buses.iter().enumerate() {
            inj.p[i] = -bus.p_load * lf;
            inj.q[i] = -bus.q_load * lf;
        }
        for pv in &self.net.pvs {
            inj.p[pv.bus - 1] += pv_output(pv.capacity, s.pv_factor[t]);
        }
        for (dg, row) in self.net.dgs.iter().zip(&x.dg_power) {
            inj.p[dg.bus - 1] += row[t];
        }
        for (ess, row) in self.net.esss.iter().zip(&x.ess_power) {
            inj.p[ess.bus - 1] -= row[t];
        }
    }

    fn schedule_overshoots(&self, x: &DecisionVector) -> (Vec<f64>, Vec<f64>) {
        let traj = ess_trajectory(x, &self.net.esss);
        let energy = traj
            .violations
            .iter()
            .map(|v| v.excess / self.net.esss[v.ess].w_max)
            .collect();
        let mut rate = Vec::new();
        for (ess, row) in self.net.esss.iter().zip(&x.ess_power) {
            for &p in row {
                if p > ess.p_charge_max {
                    rate.push((p - ess.p_charge_max) / ess.p_charge_max);
                } else if -p > ess.p_discharge_max {
                    rate.push((-p - ess.p_discharge_max) / ess.p_discharge_max);
                }
            }
        }
        (energy, rate)
    }

    pub fn evaluate_scenario(&self, x: &DecisionVector, s: &Scenario) -> Result<EvaluationBreakdown> {
        x.check_shape(&self.net)?;
        check_scenario(s)?;
        let (energy, rate) = self.schedule_overshoots(x);
        let mut ov = Overshoots {
            energy,
            rate,
            ..Overshoots::default()
        };
        let mut out = EvaluationBreakdown {
            p_slack: Vec::with_capacity(HOURS),
            p_loss: Vec::with_capacity(HOURS),
            pv_injection: Vec::with_capacity(HOURS),
            dg_cost: Vec::with_capacity(HOURS),
            grid_cost: Vec::with_capacity(HOURS),
            pv_cost: Vec::with_capacity(HOURS),
            cost: 0.0,
            ens: 0.0,
            penalty: 0.0,
            converged_hours: 0,
            overshoots: Overshoots::default(),
        };
        let mut inj = InjectionProfile::zeros(self.net.n_buses());
        for t in 0..HOURS {
            self.fill_injections(x, s, t, &mut inj);
            let sol = self.sweep.solve(&inj, self.tol, self.max_iter)?;
            let (p_slack, p_loss) = if sol.converged {
                out.converged_hours += 1;
                let rep = check_limits(&sol, &self.net);
                ov.flow
                    .extend(rep.flow.iter().map(|&(k, e)| e / self.net.branches[k].s_max));
                ov.voltage.extend(rep.voltage.iter().map(|&(_, e)| e));
                (sol.p_slack, sol.p_loss_total)
            } else {
                ov.nonconverged += 1;
                // lossless balance stands in for the unusable flow result
                let net_inj: f64 = inj
                    .p
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != self.net.substation_bus - 1)
                    .map(|(_, p)| p)
                    .sum();
                (-net_inj, 0.0)
            };
            let billed = match self.export {
                ExportPolicy::Credit => p_slack,
                ExportPolicy::Clamp => p_slack.max(0.0),
            };
            let grid = s.price[t] * billed;
            let dg: f64 = self
                .net
                .dgs
                .iter()
                .zip(&x.dg_power)
                .map(|(d, row)| d.marginal_cost * row[t])
                .sum();
            let (pv_kw, pv_cost) = self.net.pvs.iter().fold((0.0, 0.0), |acc, pv| {
                let out = pv_output(pv.capacity, s.pv_factor[t]);
                (acc.0 + out, acc.1 + pv.marginal_cost * out)
            });
            out.p_slack.push(p_slack);
            out.p_loss.push(p_loss);
            out.pv_injection.push(pv_kw);
            out.grid_cost.push(grid);
            out.dg_cost.push(dg);
            out.pv_cost.push(pv_cost);
        }
        out.cost = (0..HOURS)
            .map(|t| out.grid_cost[t] + out.dg_cost[t] + out.pv_cost[t])
            .sum();
        out.ens = self.ens_scenario(x, s);
        out.penalty = penalty(&ov, &self.weights)?;
        out.overshoots = ov;
        Ok(out)
    }

    /// Energy not supplied, kWh/yr: each bus's daily-mean net load (floored at
    /// zero) times the outage hours accumulated along its substation path.
    pub fn ens_scenario(&self, x: &DecisionVector, s: &Scenario) -> f64 {
        let n = self.net.n_buses();
        let mean_lf = s.load_factor.iter().sum::<f64>() / HOURS as f64;
        let mut net_load: Vec<f64> = self.net.buses.iter().map(|b| b.p_load * mean_lf).collect();
        for dg in self.net.dgs.iter().zip(&x.dg_power) {
            net_load[dg.0.bus - 1] -= dg.1.iter().sum::<f64>() / HOURS as f64;
        }
        for pv in &self.net.pvs {
            let total: f64 = s.pv_factor.iter().map(|&f| pv_output(pv.capacity, f)).sum();
            net_load[pv.bus - 1] -= total / HOURS as f64;
        }
        for (ess, row) in self.net.esss.iter().zip(&x.ess_power) {
            let discharged: f64 = row.iter().map(|&p| (-p).max(0.0)).sum();
            net_load[ess.bus - 1] -= discharged / HOURS as f64;
        }
        (0..n)
            .map(|b| net_load[b].max(0.0) * self.path_outage[b])
            .sum()
    }

    pub fn evaluate_set(&self, x: &DecisionVector, set: &ScenarioSet) -> Result<SetEvaluation> {
        let total = set.total_probability();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("scenario probabilities sum to {total}")));
        }
        let mut per_scenario = Vec::with_capacity(set.len());
        let mut obj = ObjectiveVector {
            f1: 0.0,
            f2: 0.0,
            penalty: 0.0,
        };
        for s in &set.scenarios {
            let b = self.evaluate_scenario(x, s)?;
            obj.f1 += s.probability * b.cost;
            obj.f2 += s.probability * b.ens;
            obj.penalty += s.probability * b.penalty;
            per_scenario.push((b.cost, b.ens, b.penalty, s.probability));
        }
        Ok(SetEvaluation {
            objective: obj,
            per_scenario,
        })
    }

    pub fn evaluate(&self, x: &DecisionVector, set: &ScenarioSet) -> Result<ObjectiveVector> {
        Ok(self.evaluate_set(x, set)?.objective)
    }
}

fn check_scenario(s: &Scenario) -> Result<()> {
    if s.load_factor.len() != HOURS || s.pv_factor.len() != HOURS || s.price.len() != HOURS {
        return Err(Error::Argument(format!("scenario profiles need {HOURS} values")));
    }
    Ok(())
}

#[inline]
fn pv_output(capacity: f64, factor: f64) -> f64 {
    (capacity * factor).min(capacity)
}

pub fn evaluate_scenario(net: &Network, x: &DecisionVector, s: &Scenario) -> Result<EvaluationBreakdown> {
    Evaluator::new(net)?.evaluate_scenario(x, s)
}

pub fn ens_scenario(net: &Network, x: &DecisionVector, s: &Scenario) -> Result<f64> {
    Ok(Evaluator::new(net)?.ens_scenario(x, s))
}

pub fn evaluate(net: &Network, x: &DecisionVector, set: &ScenarioSet) -> Result<ObjectiveVector> {
    Evaluator::new(net)?.evaluate(x, set)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfitReport {
    pub c_npv: f64,
    pub investment: f64,
    /// $/yr
    pub annual_delta_toc: f64,
    /// Cumulative savings at the end of each year, $.
    pub cumulative: Vec<f64>,
    /// First year (1-based) whose cumulative savings cover the investment.
    pub payback_year: Option<usize>,
    pub net_profit: f64,
}

/// Extrapolates one representative day's saving `toc_old - toc_new` ($/day)
/// to a yearly figure and accumulates it over `years`.
pub fn profit_analysis(
    toc_old: f64,
    toc_new: f64,
    investment: f64,
    years: usize,
    c_npv: f64,
) -> Result<ProfitReport> {
    if years == 0 {
        return Err(Error::Argument("profit horizon must be >= 1 year".into()));
    }
    let annual = c_npv * 365.0 * (toc_old - toc_new);
    let cumulative: Vec<f64> = (1..=years).map(|y| y as f64 * annual).collect();
    let payback_year = cumulative.iter().position(|&c| c >= investment).map(|i| i + 1);
    Ok(ProfitReport {
        c_npv,
        investment,
        annual_delta_toc: annual,
        net_profit: cumulative[years - 1] - investment,
        cumulative,
        payback_year,
    })
}
