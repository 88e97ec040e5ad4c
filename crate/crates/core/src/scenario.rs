//! Scenario generation, reduction and run statistics.
//!
//! Forecast errors of load, PV availability and price are modelled per hour as
//! independent normal variables, discretized into a small number of
//! sigma-wide bins. Scenarios are drawn bin by bin with a roulette wheel and
//! weighted by the product of the drawn bin probabilities; identical draws are
//! merged. Backward reduction then trims the set to a target size.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const HOURS: usize = 24;
pub const DEFAULT_LEVELS: usize = 7;
pub const DEFAULT_EPSILON: f64 = 0.005;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.96;

const DEFAULT_FORECAST: &str = include_str!("../data/forecast_default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastProfile {
    /// Hourly multipliers of nominal bus load.
    pub load_factor: Vec<f64>,
    /// Hourly PV availability as a fraction of capacity.
    pub pv_factor: Vec<f64>,
    /// Hourly energy price, $/kWh.
    pub price: Vec<f64>,
    /// Relative standard deviations of the forecast errors.
    pub sigma_load: f64,
    pub sigma_pv: f64,
    pub sigma_price: f64,
}

impl Default for ForecastProfile {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_FORECAST).expect("embedded forecast parses")
    }
}

impl ForecastProfile {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("load_factor", &self.load_factor),
            ("pv_factor", &self.pv_factor),
            ("price", &self.price),
        ] {
            if v.len() != HOURS {
                return Err(Error::Argument(format!("{name} needs {HOURS} values, got {}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Argument(format!("{name} values must be finite and >= 0")));
            }
        }
        if self.pv_factor.iter().any(|&x| x > 1.0) {
            return Err(Error::Argument("pv_factor values must lie in [0, 1]".into()));
        }
        if [self.sigma_load, self.sigma_pv, self.sigma_price]
            .iter()
            .any(|s| !s.is_finite() || *s < 0.0)
        {
            return Err(Error::Argument("sigmas must be >= 0".into()));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: ForecastProfile =
            serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
        f.validate()?;
        Ok(f)
    }

    /// The same forecast with all uncertainty removed.
    pub fn without_uncertainty(&self) -> Self {
        ForecastProfile {
            sigma_load: 0.0,
            sigma_pv: 0.0,
            sigma_price: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub load_factor: Vec<f64>,
    pub pv_factor: Vec<f64>,
    pub price: Vec<f64>,
    pub probability: f64,
}

impl Scenario {
    /// The forecast itself, with probability 1.
    pub fn from_forecast(f: &ForecastProfile) -> Self {
        Scenario {
            load_factor: f.load_factor.clone(),
            pv_factor: f.pv_factor.clone(),
            price: f.price.clone(),
            probability: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    /// Validates the probabilities (positive, summing to one within 1e-9) and
    /// renormalizes them.
    pub fn new(mut scenarios: Vec<Scenario>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Argument("scenario set is empty".into()));
        }
        if scenarios.iter().any(|s| !(s.probability > 0.0)) {
            return Err(Error::Argument("scenario probabilities must be > 0".into()));
        }
        let total: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!("scenario probabilities sum to {total}")));
        }
        normalize(&mut scenarios);
        Ok(ScenarioSet { scenarios })
    }

    /// Singleton set holding the forecast.
    pub fn deterministic(f: &ForecastProfile) -> Self {
        ScenarioSet {
            scenarios: vec![Scenario::from_forecast(f)],
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    /// One row per scenario: 24 load factors, 24 PV factors, 24 prices, probability.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = Vec::with_capacity(3 * HOURS + 1);
        for prefix in ["load", "pv", "price"] {
            header.extend((1..=HOURS).map(|h| format!("{prefix}_{h}")));
        }
        header.push("probability".into());
        out.push_str(&header.join(","));
        out.push('\n');
        for s in &self.scenarios {
            for v in s.load_factor.iter().chain(&s.pv_factor).chain(&s.price) {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", s.probability);
        }
        out
    }
}

fn normalize(scenarios: &mut [Scenario]) {
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    for s in scenarios.iter_mut() {
        s.probability /= total;
    }
}

/// Splits a normal distribution into `levels` sigma-wide bins centred on
/// `mean + k * sigma`; the outer bins absorb the tails.
pub fn discretize_normal(mean: f64, sigma: f64, levels: usize) -> Result<Vec<(f64, f64)>> {
    if levels < 3 || levels % 2 == 0 {
        return Err(Error::Argument(format!("levels must be odd and >= 3, got {levels}")));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Argument(format!("sigma must be >= 0, got {sigma}")));
    }
    let half = (levels / 2) as i64;
    if sigma == 0.0 {
        return Ok((-half..=half)
            .map(|k| (mean, if k == 0 { 1.0 } else { 0.0 }))
            .collect());
    }
    let std = Normal::standard();
    let mut bins: Vec<(f64, f64)> = (-half..=half)
        .map(|k| {
            let kf = k as f64;
            let lo = if k == -half { 0.0 } else { std.cdf(kf - 0.5) };
            let hi = if k == half { 1.0 } else { std.cdf(kf + 0.5) };
            (mean + kf * sigma, hi - lo)
        })
        .collect();
    let total: f64 = bins.iter().map(|b| b.1).sum();
    for b in &mut bins {
        b.1 /= total;
    }
    Ok(bins)
}

fn roulette(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

struct HourlyBins {
    values: Vec<f64>,
    cumulative: Vec<f64>,
    log_prob: Vec<f64>,
}

impl HourlyBins {
    fn new(mean: f64, rel_sigma: f64, levels: usize, lo: f64, hi: f64) -> Result<Self> {
        let bins = discretize_normal(mean, rel_sigma * mean, levels)?;
        let mut acc = 0.0;
        let cumulative = bins
            .iter()
            .map(|b| {
                acc += b.1;
                acc
            })
            .collect();
        Ok(HourlyBins {
            values: bins.iter().map(|b| b.0.clamp(lo, hi)).collect(),
            cumulative,
            log_prob: bins.iter().map(|b| b.1.ln()).collect(),
        })
    }
}

/// Draws `n` scenarios with the default 7-level discretization.
pub fn generate(forecast: &ForecastProfile, n: usize, seed: u64) -> Result<ScenarioSet> {
    generate_with_levels(forecast, n, seed, DEFAULT_LEVELS)
}

pub fn generate_with_levels(
    forecast: &ForecastProfile,
    n: usize,
    seed: u64,
    levels: usize,
) -> Result<ScenarioSet> {
    forecast.validate()?;
    if n == 0 {
        return Err(Error::Argument("scenario count must be >= 1".into()));
    }
    let mut tables: Vec<HourlyBins> = Vec::with_capacity(3 * HOURS);
    for h in 0..HOURS {
        tables.push(HourlyBins::new(forecast.load_factor[h], forecast.sigma_load, levels, 0.0, f64::INFINITY)?);
    }
    for h in 0..HOURS {
        tables.push(HourlyBins::new(forecast.pv_factor[h], forecast.sigma_pv, levels, 0.0, 1.0)?);
    }
    for h in 0..HOURS {
        tables.push(HourlyBins::new(forecast.price[h], forecast.sigma_price, levels, 0.0, f64::INFINITY)?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut draws: Vec<(Vec<u8>, f64)> = Vec::new();
    for _ in 0..n {
        let mut key = Vec::with_capacity(tables.len());
        let mut log_p = 0.0;
        for t in &tables {
            let k = roulette(&t.cumulative, rng.random::<f64>());
            key.push(k as u8);
            log_p += t.log_prob[k];
        }
        match index.get(&key) {
            Some(&i) => draws[i].1 = log_sum_exp(draws[i].1, log_p),
            None => {
                index.insert(key.clone(), draws.len());
                draws.push((key, log_p));
            }
        }
    }

    let max_lp = draws.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
    let mut scenarios: Vec<Scenario> = draws
        .iter()
        .map(|(key, lp)| {
            let value = |offset: usize, h: usize| tables[offset + h].values[key[offset + h] as usize];
            Scenario {
                load_factor: (0..HOURS).map(|h| value(0, h)).collect(),
                pv_factor: (0..HOURS).map(|h| value(HOURS, h)).collect(),
                price: (0..HOURS).map(|h| value(2 * HOURS, h)).collect(),
                probability: (lp - max_lp).exp(),
            }
        })
        .collect();
    normalize(&mut scenarios);
    Ok(ScenarioSet { scenarios })
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Per-block scale used to standardize the scenario distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceScale {
    pub load: f64,
    pub pv: f64,
    pub price: f64,
}

impl DistanceScale {
    /// Daily means of the forecast profiles.
    pub fn from_forecast(f: &ForecastProfile) -> Self {
        let mean = |v: &[f64]| nonzero(v.iter().sum::<f64>() / v.len() as f64);
        DistanceScale {
            load: mean(&f.load_factor),
            pv: mean(&f.pv_factor),
            price: mean(&f.price),
        }
    }

    /// Probability-weighted means over a set, for when no forecast is at hand.
    pub fn from_set(set: &ScenarioSet) -> Self {
        let mean = |pick: fn(&Scenario) -> &Vec<f64>| {
            nonzero(
                set.scenarios
                    .iter()
                    .map(|s| s.probability * pick(s).iter().sum::<f64>())
                    .sum::<f64>()
                    / HOURS as f64,
            )
        };
        DistanceScale {
            load: mean(|s| &s.load_factor),
            pv: mean(|s| &s.pv_factor),
            price: mean(|s| &s.price),
        }
    }

    pub fn distance(&self, a: &Scenario, b: &Scenario) -> f64 {
        let block = |x: &[f64], y: &[f64], scale: f64| {
            x.iter()
                .zip(y)
                .map(|(p, q)| {
                    let d = (p - q) / scale;
                    d * d
                })
                .sum::<f64>()
        };
        (block(&a.load_factor, &b.load_factor, self.load)
            + block(&a.pv_factor, &b.pv_factor, self.pv)
            + block(&a.price, &b.price, self.price))
        .sqrt()
    }
}

fn nonzero(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        1.0
    }
}

/// Backward reduction to `target` scenarios. Each step removes the scenario with
/// the smallest `probability * distance to nearest survivor` and hands its
/// probability to that nearest survivor.
pub fn reduce(set: &ScenarioSet, target: usize, scale: &DistanceScale) -> Result<ScenarioSet> {
    let n = set.len();
    if target == 0 || target > n {
        return Err(Error::Argument(format!("reduction target {target} outside 1..={n}")));
    }
    let mut prob: Vec<f64> = set.scenarios.iter().map(|s| s.probability).collect();
    let mut alive = vec![true; n];
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = scale.distance(&set.scenarios[i], &set.scenarios[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    for _ in target..n {
        let (victim, heir) = cheapest_deletion(&prob, &alive, &dist, n);
        alive[victim] = false;
        prob[heir] += prob[victim];
    }
    let mut scenarios: Vec<Scenario> = (0..n)
        .filter(|&i| alive[i])
        .map(|i| Scenario {
            probability: prob[i],
            ..set.scenarios[i].clone()
        })
        .collect();
    normalize(&mut scenarios);
    Ok(ScenarioSet { scenarios })
}

fn cheapest_deletion(prob: &[f64], alive: &[bool], dist: &[f64], n: usize) -> (usize, usize) {
    let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
    for i in (0..n).filter(|&i| alive[i]) {
        let mut nearest = (usize::MAX, f64::INFINITY);
        for j in (0..n).filter(|&j| j != i && alive[j]) {
            if dist[i * n + j] < nearest.1 {
                nearest = (j, dist[i * n + j]);
            }
        }
        let cost = prob[i] * nearest.1;
        if cost < best.2 {
            best = (i, nearest.0, cost);
        }
    }
    (best.0, best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub ci95_halfwidth: f64,
    /// Probability-weighted expected value.
    pub ev: f64,
    /// Relative error: CI half-width over |mean|.
    pub re: f64,
}

impl RunStatistics {
    /// Statistics of equally weighted samples (EV equals the mean).
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let w = vec![1.0 / samples.len().max(1) as f64; samples.len()];
        Self::from_weighted(samples, &w)
    }

    /// Unweighted mean/SD/CI with a probability-weighted EV.
    pub fn from_weighted(samples: &[f64], probabilities: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::Argument(format!("need at least 2 samples, got {n}")));
        }
        if probabilities.len() != n {
            return Err(Error::Argument("samples and probabilities differ in length".into()));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        let ci = Z95 * sd / (n as f64).sqrt();
        let total: f64 = probabilities.iter().sum();
        let ev = samples
            .iter()
            .zip(probabilities)
            .map(|(x, p)| x * p)
            .sum::<f64>()
            / total;
        let re = if ci == 0.0 { 0.0 } else { ci / mean.abs() };
        Ok(RunStatistics {
            n,
            mean,
            sd,
            ci95_halfwidth: ci,
            ev,
            re,
        })
    }
}

/// Returns `(stop, stats)` where `stop` holds when the relative error is at most `epsilon`.
pub fn stopping_rule(samples: &[f64], epsilon: f64) -> Result<(bool, RunStatistics)> {
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let stats = RunStatistics::from_samples(samples)?;
    Ok((stats.re <= epsilon, stats))
}

/// `sum(value * probability)`; independent of input order.
pub fn expected_value(per_scenario: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = per_scenario.iter().map(|p| p.1).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!("probabilities sum to {total}, expected 1")));
    }
    let mut terms: Vec<(f64, f64)> = per_scenario.to_vec();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(terms.iter().map(|(v, p)| v * p).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_levels_standard_normal() {
        let bins = discretize_normal(0.0, 1.0, 7).unwrap();
        let expected = [0.0062, 0.0606, 0.2417, 0.3829, 0.2417, 0.0606, 0.0062];
        for ((v, p), (k, e)) in bins.iter().zip(expected.iter().enumerate()) {
            assert_eq!(*v, k as f64 - 3.0);
            assert!((p - e).abs() < 1e-4, "{p} vs {e}");
        }
        let total: f64 = bins.iter().map(|b| b.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_sigma() {
        let bins = discretize_normal(5.0, 0.0, 5).unwrap();
        assert!(bins.iter().all(|b| b.0 == 5.0));
        assert_eq!(bins[2].1, 1.0);
        assert_eq!(bins.iter().map(|b| b.1).sum::<f64>(), 1.0);
    }

    #[test]
    fn bad_levels() {
        assert!(discretize_normal(0.0, 1.0, 4).is_err());
        assert!(discretize_normal(0.0, 1.0, 1).is_err());
        assert!(discretize_normal(0.0, -1.0, 3).is_err());
    }

    #[test]
    fn no_uncertainty_collapses() {
        let f = ForecastProfile::default().without_uncertainty();
        let set = generate(&f, 5, 1).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.scenarios[0].probability, 1.0);
        assert_eq!(set.scenarios[0].load_factor, f.load_factor);
        assert_eq!(set.scenarios[0].price, f.price);
    }

    #[test]
    fn generation_is_deterministic() {
        let f = ForecastProfile::default();
        assert_eq!(generate(&f, 20, 9).unwrap(), generate(&f, 20, 9).unwrap());
        assert_ne!(generate(&f, 20, 9).unwrap(), generate(&f, 20, 10).unwrap());
    }

    #[test]
    fn generation_invariants_seed_42() {
        let set = generate(&ForecastProfile::default(), 30, 42).unwrap();
        assert!((set.total_probability() - 1.0).abs() < 1e-12);
        for s in &set.scenarios {
            assert!(s.probability > 0.0);
            assert!(s.pv_factor.iter().all(|&p| (0.0..=1.0).contains(&p)));
            assert!(s.load_factor.iter().all(|&p| p >= 0.0));
        }
    }

    fn flat(level: f64, p: f64) -> Scenario {
        Scenario {
            load_factor: vec![level; HOURS],
            pv_factor: vec![0.5; HOURS],
            price: vec![0.05; HOURS],
            probability: p,
        }
    }

    #[test]
    fn reduce_identity_and_duplicates() {
        let set = ScenarioSet::new(vec![flat(1.0, 0.5), flat(1.2, 0.5)]).unwrap();
        let scale = DistanceScale::from_set(&set);
        assert_eq!(reduce(&set, 2, &scale).unwrap(), set);

        let dup = ScenarioSet::new(vec![flat(1.0, 0.5), flat(1.0, 0.5)]).unwrap();
        let r = reduce(&dup, 1, &scale).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.scenarios[0].probability, 1.0);

        assert!(reduce(&set, 0, &scale).is_err());
        assert!(reduce(&set, 3, &scale).is_err());
    }

    #[test]
    fn reduce_redistributes() {
        let f = ForecastProfile::default();
        let set = generate(&f, 10, 3).unwrap();
        let r = reduce(&set, 5, &DistanceScale::from_forecast(&f)).unwrap();
        assert_eq!(r.len(), 5);
        assert!((r.total_probability() - 1.0).abs() < 1e-12);
        for s in &r.scenarios {
            let orig = set
                .scenarios
                .iter()
                .find(|o| o.load_factor == s.load_factor && o.price == s.price && o.pv_factor == s.pv_factor)
                .unwrap();
            assert!(s.probability >= orig.probability);
        }
    }

    #[test]
    fn stopping_rule_examples() {
        let (stop, st) = stopping_rule(&[3.0, 3.0, 3.0], 0.01).unwrap();
        assert!(stop);
        assert_eq!(st.sd, 0.0);
        assert_eq!(st.re, 0.0);

        let (stop, st) = stopping_rule(&[10.0, 20.0], 0.01).unwrap();
        assert!(!stop);
        assert_eq!(st.mean, 15.0);
        assert!((st.sd - 7.0710678).abs() < 1e-6);
        assert!((st.ci95_halfwidth - 9.8).abs() < 1e-3);
        assert!((st.re - 0.6533).abs() < 1e-3);

        assert!(stopping_rule(&[1.0], 0.01).is_err());
        assert!(stopping_rule(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn tight_distribution_stops() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..1000).map(|_| 100.0 + rng.random::<f64>() - 0.5).collect();
        assert!(stopping_rule(&samples, 0.05).unwrap().0);
    }

    #[test]
    fn expected_value_examples() {
        assert_eq!(expected_value(&[(7.0, 1.0)]).unwrap(), 7.0);
        assert!((expected_value(&[(10.0, 0.6), (20.0, 0.4)]).unwrap() - 14.0).abs() < 1e-12);
        assert!(expected_value(&[(10.0, 0.6), (20.0, 0.3)]).is_err());
        let a = [(1.1, 0.1), (2.7, 0.2), (3.3, 0.3), (0.9, 0.4)];
        let mut b = a;
        b.reverse();
        assert_eq!(expected_value(&a).unwrap(), expected_value(&b).unwrap());
    }

    #[test]
    fn csv_shape() {
        let set = generate(&ForecastProfile::default(), 4, 2).unwrap();
        let csv = set.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), set.len() + 1);
        assert!(lines.iter().all(|l| l.split(',').count() == 73));
    }
}
