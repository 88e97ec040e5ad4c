//! Grey-wolf and particle-swarm updates and the split/evolve/shuffle hybrid
//! loop built on them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moo::{ArchiveEntry, MembershipScaler, ObjectiveVector, ParetoArchive, DEFAULT_ARCHIVE_CAPACITY};
use crate::objectives::PenaltyWeights;

pub const LEARNING_FACTOR: f64 = 1.49618;

/// Box constraints of the flattened decision vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Argument(format!(
                "bounds have {} lower and {} upper entries",
                lower.len(),
                upper.len()
            )));
        }
        if let Some(d) = (0..lower.len()).find(|&d| !(lower[d] < upper[d])) {
            return Err(Error::Argument(format!(
                "dimension {d}: lower {} must be below upper {}",
                lower[d], upper[d]
            )));
        }
        Ok(SearchSpace { lower, upper })
    }

    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension()
            && x.iter().enumerate().all(|(d, v)| *v >= self.lower[d] && *v <= self.upper[d])
    }

    pub fn repair(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }

    fn sample(&self, rng: &mut impl UniformSource) -> Vec<f64> {
        (0..self.dimension())
            .map(|d| self.lower[d] + rng.uniform() * (self.upper[d] - self.lower[d]))
            .collect()
    }
}

pub fn bound_repair(x: &[f64], space: &SearchSpace) -> Vec<f64> {
    let mut out = x.to_vec();
    space.repair(&mut out);
    out
}

/// Source of uniform draws in `[0, 1)`.
pub trait UniformSource {
    fn uniform(&mut self) -> f64;
}

impl<R: Rng + ?Sized> UniformSource for R {
    fn uniform(&mut self) -> f64 {
        self.random::<f64>()
    }
}

/// Replays a fixed list of values, cycling when exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedSource {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedSource {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "scripted source needs at least one value");
        ScriptedSource { values, pos: 0 }
    }
}

impl UniformSource for ScriptedSource {
    fn uniform(&mut self) -> f64 {
        let v = self.values[self.pos % self.values.len()];
        self.pos += 1;
        v
    }
}

/// One wolf move. Per dimension and per leader (α, β, δ in turn) two draws
/// are taken: R1 gives η = 2·R1, R2 gives ζ = ε·(2·R2 − 1). The candidate is
/// `L − ζ·|η·L − x|` and the new position is the mean of the three candidates.
pub fn gwo_step(
    x: &[f64],
    leaders: [&[f64]; 3],
    epsilon: f64,
    space: &SearchSpace,
    rng: &mut impl UniformSource,
) -> Vec<f64> {
    let mut out: Vec<f64> = (0..x.len())
        .map(|d| {
            leaders
                .iter()
                .map(|l| {
                    let eta = 2.0 * rng.uniform();
                    let zeta = epsilon * (2.0 * rng.uniform() - 1.0);
                    let dis = (eta * l[d] - x[d]).abs();
                    l[d] - zeta * dis
                })
                .sum::<f64>()
                / 3.0
        })
        .collect();
    space.repair(&mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoCoefficients {
    pub mu: f64,
    pub c1: f64,
    pub c2: f64,
}

/// One particle move; per dimension R1 then R2 are drawn. Returns the new
/// position and velocity.
pub fn pso_step(
    x: &[f64],
    v: &[f64],
    pbest: &[f64],
    gbest: &[f64],
    k: PsoCoefficients,
    space: &SearchSpace,
    rng: &mut impl UniformSource,
) -> (Vec<f64>, Vec<f64>) {
    let mut xn = Vec::with_capacity(x.len());
    let mut vn = Vec::with_capacity(x.len());
    for d in 0..x.len() {
        let r1 = rng.uniform();
        let r2 = rng.uniform();
        let vmax = space.upper[d] - space.lower[d];
        let vel = (k.mu * v[d] + k.c1 * r1 * (pbest[d] - x[d]) + k.c2 * r2 * (gbest[d] - x[d]))
            .clamp(-vmax, vmax);
        vn.push(vel);
        xn.push(x[d] + vel);
    }
    space.repair(&mut xn);
    (xn, vn)
}

/// Linear interpolation from `start` at iteration 0 to `end` at `iterations - 1`.
pub fn linear_schedule(start: f64, end: f64, t: usize, iterations: usize) -> f64 {
    if iterations <= 1 {
        return start;
    }
    start + (end - start) * t as f64 / (iterations - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gwo,
    Pso,
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    /// Even; the hybrid splits it in two halves.
    pub population: usize,
    pub iterations: usize,
    pub mu_start: f64,
    pub mu_end: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
    pub archive_capacity: usize,
    pub penalty_weights: PenaltyWeights,
    /// Objective weights Ω for the scalar ranking.
    pub weights: [f64; 2],
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            population: 60,
            iterations: 50,
            mu_start: 0.9,
            mu_end: 0.4,
            epsilon_start: 2.0,
            epsilon_end: 0.0,
            c1: LEARNING_FACTOR,
            c2: LEARNING_FACTOR,
            seed: 1,
            archive_capacity: DEFAULT_ARCHIVE_CAPACITY,
            penalty_weights: PenaltyWeights::default(),
            weights: [0.5, 0.5],
        }
    }
}

impl HybridConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Argument(m));
        if self.population < 2 || self.population % 2 != 0 {
            return fail(format!("population must be even and >= 2, got {}", self.population));
        }
        if self.iterations == 0 {
            return fail("iterations must be >= 1".into());
        }
        if self.archive_capacity == 0 {
            return fail("archive capacity must be >= 1".into());
        }
        if !(0.0..=2.0).contains(&self.epsilon_start) || !(0.0..=2.0).contains(&self.epsilon_end) {
            return fail("epsilon schedule must stay within [0, 2]".into());
        }
        let w = self.weights;
        if w.iter().any(|x| !(*x >= 0.0)) || w[0] + w[1] <= 0.0 {
            return fail(format!("weights must be >= 0 and not both zero, got {w:?}"));
        }
        Ok(())
    }

    pub fn epsilon(&self, t: usize) -> f64 {
        linear_schedule(self.epsilon_start, self.epsilon_end, t, self.iterations)
    }

    pub fn mu(&self, t: usize) -> f64 {
        linear_schedule(self.mu_start, self.mu_end, t, self.iterations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: usize,
    pub best_fitness: f64,
    pub archive_size: usize,
    pub best_f1: f64,
    pub best_f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub archive: ParetoArchive,
    pub log: Vec<LogRow>,
    /// Scalar-best archive member at the end of the run.
    pub best: ArchiveEntry,
    pub evaluations: usize,
}

impl RunResult {
    pub fn log_csv(&self) -> String {
        log_to_csv(&self.log)
    }
}

pub fn log_to_csv(log: &[LogRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in log {
        w.serialize(row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8")
}

struct Ranker {
    scaler: Option<MembershipScaler>,
    weights: [f64; 2],
}

impl Ranker {
    fn new<'a>(weights: [f64; 2], points: impl IntoIterator<Item = &'a ObjectiveVector>) -> Self {
        Ranker {
            scaler: MembershipScaler::from_points(points),
            weights,
        }
    }

    fn fitness(&self, f: &ObjectiveVector) -> f64 {
        let psi = self.scaler.map_or([1.0, 1.0], |s| s.memberships(f));
        self.weights[0] * (1.0 - psi[0]) + self.weights[1] * (1.0 - psi[1]) + f.penalty
    }
}

fn individual_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

const INIT_STREAM: u64 = u64::MAX;
const SHUFFLE_STREAM: u64 = u64::MAX - 1;

fn evaluate_checked<F>(eval: &mut F, x: &[f64]) -> Result<ObjectiveVector>
where
    F: FnMut(&[f64]) -> Result<ObjectiveVector>,
{
    eval(x).map_err(|e| Error::Evaluation {
        x: x.to_vec(),
        source: Box::new(e),
    })
}

/// Runs `algorithm` for `cfg.iterations` iterations. `initial` overrides the
/// random initial population.
pub fn run<F>(
    algorithm: Algorithm,
    cfg: &HybridConfig,
    space: &SearchSpace,
    initial: Option<Vec<Vec<f64>>>,
    mut eval: F,
) -> Result<RunResult>
where
    F: FnMut(&[f64]) -> Result<ObjectiveVector>,
{
    cfg.validate()?;
    let n = cfg.population;
    let dim = space.dimension();
    let mut xs: Vec<Vec<f64>> = match initial {
        Some(p) => {
            if p.len() != n || p.iter().any(|x| x.len() != dim) {
                return Err(Error::Argument(format!(
                    "initial population must be {n} x {dim}"
                )));
            }
            p.into_iter().map(|x| bound_repair(&x, space)).collect()
        }
        None => {
            let mut r = individual_rng(cfg.seed, INIT_STREAM);
            (0..n).map(|_| space.sample(&mut r)).collect()
        }
    };
    let mut vs = vec![vec![0.0; dim]; n];
    let mut fs = Vec::with_capacity(n);
    for x in &xs {
        fs.push(evaluate_checked(&mut eval, x)?);
    }
    let mut evaluations = n;
    let mut archive = ParetoArchive::new(cfg.archive_capacity);
    for (x, f) in xs.iter().zip(&fs) {
        archive.insert(x.clone(), *f);
    }
    let mut pbest = xs.clone();
    let mut pbest_f = fs.clone();
    let mut shuffle_rng = individual_rng(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(cfg.iterations);

    for t in 0..cfg.iterations {
        let ranker = Ranker::new(
            cfg.weights,
            archive.entries.iter().map(|e| &e.f).chain(&fs).chain(&pbest_f),
        );
        let mut cands: Vec<(&[f64], f64)> = archive
            .entries
            .iter()
            .map(|e| (e.x.as_slice(), ranker.fitness(&e.f)))
            .chain(xs.iter().zip(&fs).map(|(x, f)| (x.as_slice(), ranker.fitness(f))))
            .collect();
        cands.sort_by(|a, b| a.1.total_cmp(&b.1));
        let pick = |k: usize| cands[k.min(cands.len() - 1)].0.to_vec();
        let (alpha, beta, delta) = (pick(0), pick(1), pick(2));
        let gbest = alpha.clone();

        let n_gwo = match algorithm {
            Algorithm::Gwo => n,
            Algorithm::Pso => 0,
            Algorithm::Hybrid => n / 2,
        };
        if algorithm == Algorithm::Hybrid {
            order.shuffle(&mut shuffle_rng);
        }
        let eps = cfg.epsilon(t);
        let coeff = PsoCoefficients {
            mu: cfg.mu(t),
            c1: cfg.c1,
            c2: cfg.c2,
        };
        for (slot, &i) in order.iter().enumerate() {
            let mut r = individual_rng(cfg.seed, ((t as u64) << 32) | i as u64);
            if slot < n_gwo {
                xs[i] = gwo_step(&xs[i], [&alpha, &beta, &delta], eps, space, &mut r);
            } else {
                let (x, v) = pso_step(&xs[i], &vs[i], &pbest[i], &gbest, coeff, space, &mut r);
                xs[i] = x;
                vs[i] = v;
            }
        }
        for i in 0..n {
            fs[i] = evaluate_checked(&mut eval, &xs[i])?;
            archive.insert(xs[i].clone(), fs[i]);
        }
        evaluations += n;

        let ranker = Ranker::new(
            cfg.weights,
            archive.entries.iter().map(|e| &e.f).chain(&fs).chain(&pbest_f),
        );
        for i in 0..n {
            if ranker.fitness(&fs[i]) < ranker.fitness(&pbest_f[i]) {
                pbest[i] = xs[i].clone();
                pbest_f[i] = fs[i];
            }
        }
        let best = archive
            .entries
            .iter()
            .map(|e| ranker.fitness(&e.f))
            .fold(f64::INFINITY, f64::min);
        log.push(LogRow {
            iteration: t + 1,
            best_fitness: best,
            archive_size: archive.len(),
            best_f1: archive.entries.iter().map(|e| e.f.f1).fold(f64::INFINITY, f64::min),
            best_f2: archive.entries.iter().map(|e| e.f.f2).fold(f64::INFINITY, f64::min),
        });
    }

    archive.rescale();
    let ranker = Ranker::new(cfg.weights, archive.entries.iter().map(|e| &e.f));
    let best = archive
        .entries
        .iter()
        .min_by(|a, b| ranker.fitness(&a.f).total_cmp(&ranker.fitness(&b.f)))
        .cloned()
        .ok_or(Error::EmptyArchive)?;
    Ok(RunResult {
        archive,
        log,
        best,
        evaluations,
    })
}

pub fn hybrid_run<F>(cfg: &HybridConfig, space: &SearchSpace, eval: F) -> Result<RunResult>
where
    F: FnMut(&[f64]) -> Result<ObjectiveVector>,
{
    run(Algorithm::Hybrid, cfg, space, None, eval)
}

pub fn single_run<F>(algorithm: Algorithm, cfg: &HybridConfig, space: &SearchSpace, eval: F) -> Result<RunResult>
where
    F: FnMut(&[f64]) -> Result<ObjectiveVector>,
{
    run(algorithm, cfg, space, None, eval)
}

pub mod benchmarks {
    //! Single-objective test functions with minimum 0 at the origin.

    use std::f64::consts::PI;

    pub fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    pub fn rastrigin(x: &[f64]) -> f64 {
        10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
    }

    pub const SPHERE_BOUND: f64 = 100.0;
    pub const RASTRIGIN_BOUND: f64 = 5.12;
}

/// Wraps a scalar function as an objective with a constant second objective.
pub fn single_objective(f: impl Fn(&[f64]) -> f64) -> impl FnMut(&[f64]) -> Result<ObjectiveVector> {
    move |x| Ok(ObjectiveVector::new(f(x), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_space(dim: usize) -> SearchSpace {
        SearchSpace::uniform(dim, -1e9, 1e9).unwrap()
    }

    #[test]
    fn gwo_examples() {
        let sp = open_space(1);
        let x = [0.3];
        let mut r = ScriptedSource::new(vec![0.5, 0.9]);
        let out = gwo_step(&x, [&x, &x, &x], 2.0, &sp, &mut r);
        assert!((out[0] - 0.3).abs() < 1e-12);

        let l = [1.0];
        let mut r = ScriptedSource::new(vec![0.5, 0.75]);
        let out = gwo_step(&[0.0], [&l, &l, &l], 2.0, &sp, &mut r);
        assert!(out[0].abs() < 1e-12);

        let sp3 = open_space(2);
        let mut r = ScriptedSource::new(vec![0.1, 0.2, 0.3, 0.4]);
        let out = gwo_step(&[5.0, 5.0], [&[1.0, 2.0], &[3.0, 4.0], &[5.0, 9.0]], 0.0, &sp3, &mut r);
        assert!((out[0] - 3.0).abs() < 1e-12 && (out[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn pso_examples() {
        let sp = open_space(1);
        let k = PsoCoefficients {
            mu: 0.7,
            c1: LEARNING_FACTOR,
            c2: LEARNING_FACTOR,
        };
        let mut r = ScriptedSource::new(vec![1.0]);
        let (x, v) = pso_step(&[0.0], &[1.0], &[2.0], &[3.0], k, &sp, &mut r);
        assert!((v[0] - 8.18090).abs() < 1e-12);
        assert!((x[0] - 8.18090).abs() < 1e-12);

        let (x, v) = pso_step(&[4.0], &[0.0], &[4.0], &[4.0], k, &sp, &mut r);
        assert_eq!((x[0], v[0]), (4.0, 0.0));

        let zero = PsoCoefficients { mu: 0.0, ..k };
        let mut r = ScriptedSource::new(vec![0.0]);
        let (_, v) = pso_step(&[1.0], &[7.0], &[3.0], &[9.0], zero, &sp, &mut r);
        assert_eq!(v[0], 0.0);
    }

    #[test]
    fn repair_and_velocity_clamp() {
        let sp = SearchSpace::uniform(2, 0.0, 1.0).unwrap();
        assert_eq!(bound_repair(&[0.5, 0.2], &sp), vec![0.5, 0.2]);
        assert_eq!(bound_repair(&[6.0, -1.0], &sp), vec![1.0, 0.0]);
        let k = PsoCoefficients { mu: 1.0, c1: 0.0, c2: 0.0 };
        let (x, v) = pso_step(&[0.5, 0.5], &[10.0, -10.0], &[0.0; 2], &[0.0; 2], k, &sp, &mut ScriptedSource::new(vec![0.5]));
        assert_eq!(v, vec![1.0, -1.0]);
        assert_eq!(x, vec![1.0, 0.0]);
        assert!(SearchSpace::new(vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn schedules_are_linear() {
        let cfg = HybridConfig {
            iterations: 5,
            ..Default::default()
        };
        let eps: Vec<f64> = (0..5).map(|t| cfg.epsilon(t)).collect();
        assert_eq!(eps, vec![2.0, 1.5, 1.0, 0.5, 0.0]);
        assert!((cfg.mu(4) - 0.4).abs() < 1e-15);
        assert_eq!(cfg.mu(0), 0.9);
    }

    #[test]
    fn config_validation() {
        let odd = HybridConfig {
            population: 7,
            ..Default::default()
        };
        assert!(odd.validate().is_err());
        let none = HybridConfig {
            iterations: 0,
            ..Default::default()
        };
        assert!(none.validate().is_err());
    }

    #[test]
    fn identical_population_is_fixed_point() {
        let cfg = HybridConfig {
            population: 6,
            iterations: 1,
            epsilon_start: 0.0,
            ..Default::default()
        };
        let sp = SearchSpace::uniform(3, -5.0, 5.0).unwrap();
        let p = vec![vec![1.0, -2.0, 0.5]; 6];
        let res = run(Algorithm::Hybrid, &cfg, &sp, Some(p.clone()), single_objective(benchmarks::sphere)).unwrap();
        assert_eq!(res.archive.len(), 1);
        assert_eq!(res.archive.entries[0].x, p[0]);
    }

    #[test]
    fn evaluation_error_carries_position() {
        let cfg = HybridConfig {
            population: 4,
            iterations: 1,
            ..Default::default()
        };
        let sp = SearchSpace::uniform(2, 0.0, 1.0).unwrap();
        let err = hybrid_run(&cfg, &sp, |_x| Err(Error::Argument("boom".into()))).unwrap_err();
        match err {
            Error::Evaluation { x, .. } => assert_eq!(x.len(), 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = HybridConfig {
            population: 10,
            iterations: 10,
            seed: 42,
            ..Default::default()
        };
        let sp = SearchSpace::uniform(4, -5.0, 5.0).unwrap();
        let a = hybrid_run(&cfg, &sp, single_objective(benchmarks::rastrigin)).unwrap();
        let b = hybrid_run(&cfg, &sp, single_objective(benchmarks::rastrigin)).unwrap();
        assert_eq!(a, b);
    }
}
