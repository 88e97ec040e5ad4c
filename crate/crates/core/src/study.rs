//! Batch studies: deterministic and scenario-based runs, repeated for
//! statistics, and the CSV/JSON artifacts they produce.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, ValueEnum};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::{best_compromise, ArchiveEntry, ObjectiveVector, ParetoArchive};
use crate::netmodel::{builtin_ieee69, load_network, Network};
use crate::objectives::{
    ess_trajectory, profit_analysis, DecisionVector, Evaluator, ProfitReport, C_NPV, INVESTMENT,
    PROFIT_YEARS,
};
use crate::optimizer::{run, Algorithm, HybridConfig, LogRow, SearchSpace};
use crate::scenario::{
    generate, reduce, DistanceScale, ForecastProfile, RunStatistics, ScenarioSet, HOURS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[serde(alias = "det")]
    #[value(alias = "deterministic")]
    Det,
    #[serde(alias = "stoch")]
    #[value(alias = "stochastic")]
    Stoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveMode {
    Cost,
    Ens,
    Multi,
}

/// What the per-row statistics are computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StatsBasis {
    /// Per-scenario values of each repeat's selected schedule; one row per repeat.
    Scenario,
    /// Expected values of the selected schedules across repeats; one row per setting.
    Repeat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// `"builtin"` or a path accepted by [`load_network`].
    pub network: String,
    pub forecast: Option<PathBuf>,
    pub mode: Mode,
    pub scenario_counts: Vec<usize>,
    /// Scenarios drawn per retained scenario before reduction.
    pub scenario_pool_factor: usize,
    pub repeats: usize,
    pub objective: ObjectiveMode,
    pub weights: [f64; 2],
    pub algorithm: Algorithm,
    pub optimizer: HybridConfig,
    pub stats_basis: StatsBasis,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            network: "builtin".into(),
            forecast: None,
            mode: Mode::Det,
            scenario_counts: vec![30, 60, 90, 120],
            scenario_pool_factor: 2,
            repeats: 20,
            objective: ObjectiveMode::Multi,
            weights: [0.5, 0.5],
            algorithm: Algorithm::Hybrid,
            optimizer: HybridConfig::default(),
            stats_basis: StatsBasis::Scenario,
            out: PathBuf::from("results"),
            seed: 1,
        }
    }
}

impl StudyConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::Argument("repeats must be >= 1".into()));
        }
        if self.mode == Mode::Stoch {
            if self.scenario_counts.is_empty() || self.scenario_counts.contains(&0) {
                return Err(Error::Argument("scenario counts must be >= 1 each".into()));
            }
            if self.scenario_pool_factor == 0 {
                return Err(Error::Argument("scenario pool factor must be >= 1".into()));
            }
        }
        let w = self.weights;
        if w.iter().any(|x| !(*x >= 0.0)) || w[0] + w[1] <= 0.0 {
            return Err(Error::Argument(format!("weights must be >= 0 and not both zero, got {w:?}")));
        }
        self.optimizer.validate()
    }

    pub fn load_network(&self) -> Result<Network> {
        if self.network == "builtin" {
            Ok(builtin_ieee69())
        } else {
            load_network(&self.network)
        }
    }

    pub fn load_forecast(&self) -> Result<ForecastProfile> {
        match &self.forecast {
            Some(p) => ForecastProfile::load(p),
            None => Ok(ForecastProfile::default()),
        }
    }

    /// Scenario counts actually run: `[1]` in deterministic mode.
    pub fn settings(&self) -> Vec<usize> {
        match self.mode {
            Mode::Det => vec![1],
            Mode::Stoch => self.scenario_counts.clone(),
        }
    }
}

/// Seeds derived from the study seed; the optimizer seed depends only on the
/// repeat so deterministic and stochastic studies can be matched.
pub fn sub_seeds(seed: u64, n_scenarios: usize, repeat: usize) -> (u64, u64) {
    let draw = |stream: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        r.set_stream(stream);
        r.next_u64()
    };
    let scenario = draw(((n_scenarios as u64) << 32) | repeat as u64);
    let optimizer = draw((1u64 << 63) | repeat as u64);
    (scenario, optimizer)
}

/// Scenario set for one repeat: the forecast itself in deterministic mode,
/// otherwise a generated pool reduced to `n`.
pub fn build_scenarios(
    forecast: &ForecastProfile,
    mode: Mode,
    n: usize,
    pool_factor: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    match mode {
        Mode::Det => Ok(ScenarioSet::deterministic(forecast)),
        Mode::Stoch => {
            let pool = generate(forecast, n * pool_factor.max(1), seed)?;
            if pool.len() > n {
                reduce(&pool, n, &DistanceScale::from_forecast(forecast))
            } else {
                Ok(pool)
            }
        }
    }
}

/// Result of one optimization inside a repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `cost`, `ens` or `bcs`.
    pub label: String,
    pub x: Vec<f64>,
    pub f: ObjectiveVector,
    /// (cost, ens, probability) per scenario.
    pub per_scenario: Vec<(f64, f64, f64)>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub scenario_seed: u64,
    pub optimizer_seed: u64,
    pub n_scenarios: usize,
    pub runs: Vec<RunSummary>,
    /// Label of the run whose schedule represents this repeat.
    pub selected: String,
}

impl RepeatReport {
    pub fn selected_run(&self) -> &RunSummary {
        self.runs
            .iter()
            .find(|r| r.label == self.selected)
            .expect("selected run is present")
    }

    pub fn run(&self, label: &str) -> Option<&RunSummary> {
        self.runs.iter().find(|r| r.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub n_scenarios: usize,
    /// Repeat index, or `None` for a row aggregated across repeats.
    pub repeat: Option<usize>,
    pub objective: String,
    pub stats: RunStatistics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingReport {
    pub n_scenarios: usize,
    pub repeats: Vec<RepeatReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub label: String,
    pub dg_bus: Vec<usize>,
    pub ess_bus: Vec<usize>,
    pub x: DecisionVector,
    /// Stored energy at the end of each hour, kWh.
    pub ess_energy: Vec<Vec<f64>>,
    /// Substation import on the forecast, kW.
    pub p_substation: Vec<f64>,
    pub price: Vec<f64>,
    pub f: ObjectiveVector,
}

impl Schedule {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("hour,price,p_substation");
        for b in &self.dg_bus {
            let _ = write!(out, ",dg_{b}");
        }
        for b in &self.ess_bus {
            let _ = write!(out, ",ess_{b}");
        }
        for b in &self.ess_bus {
            let _ = write!(out, ",energy_{b}");
        }
        out.push('\n');
        for t in 0..HOURS {
            let _ = write!(out, "{},{},{}", t + 1, self.price[t], self.p_substation[t]);
            for row in &self.x.dg_power {
                let _ = write!(out, ",{}", row[t]);
            }
            for row in &self.x.ess_power {
                let _ = write!(out, ",{}", row[t]);
            }
            for row in &self.ess_energy {
                let _ = write!(out, ",{}", row[t + 1]);
            }
            out.push('\n');
        }
        out
    }
}

/// Freedman-Diaconis histogram with probability-weighted densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn freedman_diaconis(values: &[f64], weights: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len() != weights.len() {
            return Err(Error::Argument("histogram needs matching, non-empty values and weights".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let n = sorted.len() as f64;
        let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
        let width = 2.0 * iqr / n.cbrt();
        let bins = if hi > lo && width > 0.0 {
            (((hi - lo) / width).ceil() as usize).clamp(1, 1000)
        } else {
            1
        };
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        };
        let step = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + step * i as f64).collect();
        let mut mass = vec![0.0; bins];
        for (&v, &w) in values.iter().zip(weights) {
            let k = (((v - lo) / step) as usize).min(bins - 1);
            mass[k] += w;
        }
        let total: f64 = mass.iter().sum();
        let density = mass.iter().map(|m| m / total / step).collect();
        Ok(Histogram { edges, density })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,density\n");
        for (k, d) in self.density.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", self.edges[k], self.edges[k + 1], d);
        }
        out
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub settings: Vec<SettingReport>,
    pub stats: Vec<StatRow>,
    /// Archive of the first repeat's multi-objective (or only) run.
    pub pareto: ParetoArchive,
    pub schedules: Vec<Schedule>,
    pub histogram_f1: Option<Histogram>,
    pub histogram_f2: Option<Histogram>,
    pub profit: Option<ProfitReport>,
    /// Scenario set of the first repeat of the first setting.
    pub scenarios: Option<ScenarioSet>,
    pub convergence: Vec<(String, Vec<LogRow>)>,
    pub errors: Vec<String>,
    #[serde(skip)]
    pub timings: Vec<(String, Duration)>,
}

impl StudyReport {
    pub fn repeats(&self) -> impl Iterator<Item = &RepeatReport> {
        self.settings.iter().flat_map(|s| &s.repeats)
    }
}

struct RepeatDetail {
    report: RepeatReport,
    scenarios: ScenarioSet,
    archive: ParetoArchive,
    logs: Vec<(String, Vec<LogRow>)>,
}

fn optimize(
    weights: [f64; 2],
    cfg: &StudyConfig,
    seed: u64,
    evaluator: &Evaluator,
    set: &ScenarioSet,
    space: &SearchSpace,
) -> Result<crate::optimizer::RunResult> {
    let hc = HybridConfig {
        seed,
        weights,
        ..cfg.optimizer.clone()
    };
    let net = evaluator.network();
    run(cfg.algorithm, &hc, space, None, |x| {
        evaluator.evaluate(&DecisionVector::from_flat(net, x)?, set)
    })
}

fn summarize(
    label: &str,
    e: &ArchiveEntry,
    evaluator: &Evaluator,
    set: &ScenarioSet,
    evaluations: usize,
) -> Result<RunSummary> {
    let x = DecisionVector::from_flat(evaluator.network(), &e.x)?;
    let ev = evaluator.evaluate_set(&x, set)?;
    Ok(RunSummary {
        label: label.into(),
        x: e.x.clone(),
        f: ev.objective,
        per_scenario: ev.per_scenario.iter().map(|p| (p.0, p.1, p.3)).collect(),
        evaluations,
    })
}

fn run_repeat(
    cfg: &StudyConfig,
    forecast: &ForecastProfile,
    evaluator: &Evaluator,
    space: &SearchSpace,
    n: usize,
    repeat: usize,
) -> Result<RepeatDetail> {
    let (s_seed, o_seed) = sub_seeds(cfg.seed, n, repeat);
    let set = build_scenarios(forecast, cfg.mode, n, cfg.scenario_pool_factor, s_seed)?;
    let jobs: Vec<(&str, [f64; 2])> = match cfg.objective {
        ObjectiveMode::Cost => vec![("cost", [1.0, 0.0])],
        ObjectiveMode::Ens => vec![("ens", [0.0, 1.0])],
        ObjectiveMode::Multi => vec![("cost", [1.0, 0.0]), ("ens", [0.0, 1.0]), ("bcs", cfg.weights)],
    };
    let mut runs = Vec::new();
    let mut logs = Vec::new();
    let mut archives = Vec::new();
    for (label, w) in jobs {
        let result = optimize(w, cfg, o_seed, evaluator, &set, space)?;
        let chosen = if label == "bcs" {
            // every run scored the same scenario set, so their archives merge
            let mut front = result.archive.clone();
            for a in &archives {
                let a: &ParetoArchive = a;
                for e in &a.entries {
                    front.insert(e.x.clone(), e.f);
                }
            }
            let pick = best_compromise(&front, w)?.clone();
            archives.push(front);
            pick
        } else {
            archives.push(result.archive.clone());
            result.best.clone()
        };
        runs.push(summarize(label, &chosen, evaluator, &set, result.evaluations)?);
        logs.push((label.to_string(), result.log));
    }
    let archive = archives.pop().unwrap_or_default();
    let selected = runs.last().map(|r| r.label.clone()).unwrap_or_default();
    Ok(RepeatDetail {
        report: RepeatReport {
            repeat,
            scenario_seed: s_seed,
            optimizer_seed: o_seed,
            n_scenarios: set.len(),
            runs,
            selected,
        },
        scenarios: set,
        archive,
        logs,
    })
}

/// Statistics rows for one setting, for both objectives of the selected runs.
pub fn setting_stats(setting: &SettingReport, basis: StatsBasis) -> Vec<StatRow> {
    let mut rows = Vec::new();
    let objectives: [(&str, fn(&(f64, f64, f64)) -> f64, fn(&ObjectiveVector) -> f64); 2] =
        [("cost", |p| p.0, |f| f.f1), ("ens", |p| p.1, |f| f.f2)];
    for (name, per, total) in objectives {
        match basis {
            StatsBasis::Scenario => {
                for r in &setting.repeats {
                    let run = r.selected_run();
                    let v: Vec<f64> = run.per_scenario.iter().map(per).collect();
                    let p: Vec<f64> = run.per_scenario.iter().map(|s| s.2).collect();
                    if let Ok(stats) = RunStatistics::from_weighted(&v, &p) {
                        rows.push(StatRow {
                            n_scenarios: setting.n_scenarios,
                            repeat: Some(r.repeat),
                            objective: name.into(),
                            stats,
                        });
                    }
                }
            }
            StatsBasis::Repeat => {
                let v: Vec<f64> = setting.repeats.iter().map(|r| total(&r.selected_run().f)).collect();
                if let Ok(stats) = RunStatistics::from_samples(&v) {
                    rows.push(StatRow {
                        n_scenarios: setting.n_scenarios,
                        repeat: None,
                        objective: name.into(),
                        stats,
                    });
                }
            }
        }
    }
    rows
}

pub fn stats_csv(rows: &[StatRow]) -> String {
    let mut out = String::from("n_scenarios,repeat,objective,n,mean,sd,ci95,ev,re\n");
    for r in rows {
        let s = &r.stats;
        let rep = r.repeat.map_or_else(|| "all".to_string(), |k| k.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n_scenarios, rep, r.objective, s.n, s.mean, s.sd, s.ci95_halfwidth, s.ev, s.re
        );
    }
    out
}

fn schedule(label: &str, run: &RunSummary, evaluator: &Evaluator, forecast: &ForecastProfile) -> Result<Schedule> {
    let net = evaluator.network();
    let x = DecisionVector::from_flat(net, &run.x)?;
    let s = crate::scenario::Scenario::from_forecast(forecast);
    let b = evaluator.evaluate_scenario(&x, &s)?;
    Ok(Schedule {
        label: label.into(),
        dg_bus: net.dgs.iter().map(|d| d.bus).collect(),
        ess_bus: net.esss.iter().map(|e| e.bus).collect(),
        ess_energy: ess_trajectory(&x, &net.esss).energy,
        x,
        p_substation: b.p_slack,
        price: forecast.price.clone(),
        f: run.f,
    })
}

/// Expected cost of schedule `run` before the PV/storage retrofit: the same
/// DG dispatch on the network stripped of PV arrays and storage.
pub fn legacy_cost(net: &Network, run: &RunSummary, set: &ScenarioSet, template: &Evaluator) -> Result<f64> {
    let x = DecisionVector::from_flat(net, &run.x)?;
    let mut bare = net.clone();
    bare.pvs.clear();
    bare.esss.clear();
    let xb = DecisionVector {
        dg_power: x.dg_power,
        ess_power: Vec::new(),
    };
    let ev = Evaluator::new(&bare)?
        .with_weights(template.weights)
        .with_export(template.export);
    Ok(ev.evaluate(&xb, set)?.f1)
}

pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let net = cfg.load_network()?;
    let forecast = cfg.load_forecast()?;
    let evaluator = Evaluator::new(&net)?.with_weights(cfg.optimizer.penalty_weights);
    let (lower, upper) = DecisionVector::bounds(&net);
    let space = SearchSpace::new(lower, upper)?;

    let mut report = StudyReport {
        config: cfg.clone(),
        settings: Vec::new(),
        stats: Vec::new(),
        pareto: ParetoArchive::new(cfg.optimizer.archive_capacity),
        schedules: Vec::new(),
        histogram_f1: None,
        histogram_f2: None,
        profit: None,
        scenarios: None,
        convergence: Vec::new(),
        errors: Vec::new(),
        timings: Vec::new(),
    };
    let mut first: Option<RepeatDetail> = None;
    for n in cfg.settings() {
        let mut setting = SettingReport {
            n_scenarios: n,
            repeats: Vec::new(),
        };
        for repeat in 0..cfg.repeats {
            let started = Instant::now();
            match run_repeat(cfg, &forecast, &evaluator, &space, n, repeat) {
                Ok(detail) => {
                    let elapsed = started.elapsed();
                    log::info!("n_s={n} repeat={repeat} done in {:.2?}", elapsed);
                    report.timings.push((format!("n{n}_r{repeat}"), elapsed));
                    setting.repeats.push(detail.report.clone());
                    if first.is_none() {
                        first = Some(detail);
                    }
                }
                Err(e) => {
                    log::error!("n_s={n} repeat={repeat} failed: {e}");
                    report.errors.push(format!("n_s={n} repeat={repeat}: {e}"));
                }
            }
        }
        let basis = match cfg.mode {
            Mode::Det => StatsBasis::Repeat,
            Mode::Stoch => cfg.stats_basis,
        };
        report.stats.extend(setting_stats(&setting, basis));
        report.settings.push(setting);
    }

    if let Some(d) = first {
        for run in &d.report.runs {
            report.schedules.push(schedule(&run.label, run, &evaluator, &forecast)?);
        }
        let sel = d.report.selected_run();
        let probs: Vec<f64> = sel.per_scenario.iter().map(|p| p.2).collect();
        let costs: Vec<f64> = sel.per_scenario.iter().map(|p| p.0).collect();
        let ens: Vec<f64> = sel.per_scenario.iter().map(|p| p.1).collect();
        report.histogram_f1 = Some(Histogram::freedman_diaconis(&costs, &probs)?);
        report.histogram_f2 = Some(Histogram::freedman_diaconis(&ens, &probs)?);
        let toc_old = legacy_cost(&net, sel, &d.scenarios, &evaluator)?;
        report.profit = Some(profit_analysis(toc_old, sel.f.f1, INVESTMENT, PROFIT_YEARS, C_NPV)?);
        report.pareto = d.archive;
        report.scenarios = Some(d.scenarios);
        report.convergence = d.logs;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
}

/// Writes every artifact into `dir` and returns the manifest.
pub fn emit_artifacts(report: &StudyReport, dir: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<(String, String)> = Vec::new();
    files.push(("pareto_front.csv".into(), report.pareto.to_csv(report.config.weights)?));
    for s in &report.schedules {
        files.push((format!("schedules_{}.csv", s.label), s.to_csv()));
    }
    files.push(("stats.csv".into(), stats_csv(&report.stats)));
    if let Some(h) = &report.histogram_f1 {
        files.push(("histogram_f1.csv".into(), h.to_csv()));
    }
    if let Some(h) = &report.histogram_f2 {
        files.push(("histogram_f2.csv".into(), h.to_csv()));
    }
    if let Some(p) = &report.profit {
        let mut out = String::from("year,cumulative_savings,net_profit\n");
        for (y, c) in p.cumulative.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", y + 1, c, c - p.investment);
        }
        files.push(("profit.csv".into(), out));
    }
    if let Some(s) = &report.scenarios {
        files.push(("scenarios.csv".into(), s.to_csv()));
    }
    for (label, log) in &report.convergence {
        files.push((format!("convergence_{label}.csv"), crate::optimizer::log_to_csv(log)));
    }
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::parse("report.json", e))?;
    files.push(("report.json".into(), json));

    let mut manifest = Vec::with_capacity(files.len() + 1);
    for (name, body) in &files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        manifest.push(ManifestEntry {
            file: name.clone(),
            bytes: body.len(),
        });
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::parse("manifest.json", e))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Command-line flags; any flag given overrides the config file.
#[derive(Debug, Parser)]
#[command(name = "feeder-ems", version, about = "Day-ahead energy management studies for radial feeders")]
pub struct Cli {
    /// JSON study configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveMode>,
    /// Comma-separated scenario counts.
    #[arg(long, value_delimiter = ',')]
    pub scenarios: Option<Vec<usize>>,
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `builtin` or a network JSON file / feeder CSV directory.
    #[arg(long)]
    pub network: Option<String>,
    /// Objective weights, e.g. `0.5,0.5`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub weights: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub population: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, value_enum)]
    pub stats_basis: Option<StatsBasis>,
}

impl Cli {
    pub fn to_config(&self) -> Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(p) => StudyConfig::load(p)?,
            None => StudyConfig::default(),
        };
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.objective {
            cfg.objective = v;
        }
        if let Some(v) = &self.scenarios {
            cfg.scenario_counts = v.clone();
        }
        if let Some(v) = self.repeats {
            cfg.repeats = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &self.network {
            cfg.network = v.clone();
        }
        if let Some(w) = &self.weights {
            if w.len() != 2 {
                return Err(Error::Argument(format!("--weights needs two values, got {}", w.len())));
            }
            cfg.weights = [w[0], w[1]];
        }
        if let Some(v) = self.algorithm {
            cfg.algorithm = v;
        }
        if let Some(v) = self.population {
            cfg.optimizer.population = v;
        }
        if let Some(v) = self.iterations {
            cfg.optimizer.iterations = v;
        }
        if let Some(v) = self.stats_basis {
            cfg.stats_basis = v;
        }
        cfg.validate()?;
        cfg.load_network()?;
        cfg.load_forecast()?;
        Ok(cfg)
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let cfg = match cli.to_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let report = match run_study(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match emit_artifacts(&report, &cfg.out) {
        Ok(files) => {
            for f in &files {
                println!("{}", cfg.out.join(&f.file).display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    }
    if report.errors.is_empty() {
        EXIT_OK
    } else {
        for e in &report.errors {
            eprintln!("error: {e}");
        }
        EXIT_RUNTIME
    }
}
