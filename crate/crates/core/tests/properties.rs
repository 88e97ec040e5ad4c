mod common;

use feeder_ems::moo::{best_compromise, dominates, membership, ObjectiveVector, ParetoArchive};
use feeder_ems::netmodel::{builtin_ieee69, radial_order};
use feeder_ems::objectives::{ess_trajectory, penalty, DecisionVector, Overshoots, PenaltyWeights};
use feeder_ems::optimizer::{
    benchmarks, bound_repair, gwo_step, pso_step, run, single_objective, Algorithm, HybridConfig,
    PsoCoefficients, SearchSpace,
};
use feeder_ems::powerflow::{solve, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use feeder_ems::scenario::{generate, reduce, DistanceScale, ForecastProfile, RunStatistics, HOURS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn objective() -> impl Strategy<Value = ObjectiveVector> {
    (0.0..100.0f64, 0.0..100.0f64, prop_oneof![Just(0.0), 0.0..5.0f64])
        .prop_map(|(f1, f2, penalty)| ObjectiveVector { f1, f2, penalty })
}

fn brute_force_front(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut front: Vec<ObjectiveVector> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let beaten = points.iter().any(|q| dominates(q, p));
        let seen = points[..i].iter().any(|q| q.f1 == p.f1 && q.f2 == p.f2 && q.penalty == p.penalty);
        if !beaten && !seen {
            front.push(*p);
        }
    }
    front
}

fn key(f: &ObjectiveVector) -> (u64, u64, u64) {
    (f.f1.to_bits(), f.f2.to_bits(), f.penalty.to_bits())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dominance_is_antisymmetric(a in objective(), b in objective()) {
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        prop_assert!(!dominates(&a, &a));
    }

    #[test]
    fn membership_is_monotone(a in -10.0..10.0f64, b in -10.0..10.0f64, lo in -5.0..0.0f64, span in 0.1..5.0f64) {
        let (f, g) = if a <= b { (a, b) } else { (b, a) };
        let m = |v| membership(v, lo, lo + span).unwrap();
        prop_assert!(m(f) >= m(g));
        prop_assert!((0.0..=1.0).contains(&m(f)));
    }

    #[test]
    fn small_archive_equals_brute_force(points in prop::collection::vec(objective(), 1..=8)) {
        let mut arch = ParetoArchive::new(100);
        for p in &points {
            arch.insert(vec![], *p);
        }
        let mut got: Vec<_> = arch.entries.iter().map(|e| key(&e.f)).collect();
        let mut want: Vec<_> = brute_force_front(&points).iter().map(key).collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn archive_stays_sound_under_capacity(points in prop::collection::vec(objective(), 1..60), cap in 1usize..12) {
        let mut arch = ParetoArchive::new(cap);
        for p in &points {
            arch.insert(vec![], *p);
            prop_assert!(arch.len() <= cap);
        }
        for a in &arch.entries {
            for b in &arch.entries {
                prop_assert!(!dominates(&a.f, &b.f));
            }
        }
    }

    #[test]
    fn compromise_is_scale_invariant(
        points in prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 1..20),
        w in 0.01..1.0f64,
        k in 0.1..50.0f64,
    ) {
        let mut arch = ParetoArchive::new(100);
        for (a, b) in points {
            arch.insert(vec![], ObjectiveVector::new(a, b));
        }
        let one = best_compromise(&arch, [w, 1.0 - w]).unwrap().f;
        let two = best_compromise(&arch, [k * w, k * (1.0 - w)]).unwrap().f;
        prop_assert_eq!(one, two);
    }

    #[test]
    fn repaired_positions_stay_in_box(
        x in prop::collection::vec(-50.0..50.0f64, 4),
        v in prop::collection::vec(-50.0..50.0f64, 4),
        seed in any::<u64>(),
        eps in 0.0..2.0f64,
    ) {
        let space = SearchSpace::uniform(4, -3.0, 7.0).unwrap();
        prop_assert!(space.contains(&bound_repair(&x, &space)));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = [1.0, 2.0, 3.0, 4.0];
        prop_assert!(space.contains(&gwo_step(&x, [&l, &x, &v], eps, &space, &mut rng)));
        let k = PsoCoefficients { mu: 0.9, c1: 1.49618, c2: 1.49618 };
        let (xn, vn) = pso_step(&x, &v, &l, &l, k, &space, &mut rng);
        prop_assert!(space.contains(&xn));
        prop_assert!(vn.iter().all(|q| q.abs() <= 10.0));
    }

    #[test]
    fn probabilities_conserved(n in 1usize..40, seed in any::<u64>(), frac in 0.05..1.0f64) {
        let f = ForecastProfile::default();
        let set = generate(&f, n, seed).unwrap();
        prop_assert!((set.total_probability() - 1.0).abs() <= 1e-12);
        let target = ((set.len() as f64 * frac).ceil() as usize).max(1);
        let red = reduce(&set, target, &DistanceScale::from_forecast(&f)).unwrap();
        prop_assert_eq!(red.len(), target);
        prop_assert!((red.total_probability() - 1.0).abs() <= 1e-12);
        for s in &red.scenarios {
            let before = set.scenarios.iter().find(|o| o.load_factor == s.load_factor && o.price == s.price).unwrap();
            prop_assert!(s.probability >= before.probability - 1e-15);
        }
    }

    #[test]
    fn stats_relations(samples in prop::collection::vec(1.0..1e4f64, 2..50)) {
        let s = RunStatistics::from_samples(&samples).unwrap();
        prop_assert!((s.ci95_halfwidth - 1.96 * s.sd / (s.n as f64).sqrt()).abs() <= 1e-9 * s.ci95_halfwidth.max(1.0));
        prop_assert!((s.re - s.ci95_halfwidth / s.mean.abs()).abs() <= 1e-12);
    }

    #[test]
    fn idle_storage_keeps_energy(w0 in 300.0..3000.0f64) {
        let mut spec = feeder_ems::netmodel::EssSpec::sized(2, 3000.0);
        spec.w_initial = w0;
        let x = DecisionVector { dg_power: vec![], ess_power: vec![vec![0.0; HOURS]] };
        let tr = ess_trajectory(&x, &[spec]);
        prop_assert!(tr.energy[0].iter().all(|&w| w == w0));
    }

    #[test]
    fn penalty_monotone_in_overshoot(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let w = PenaltyWeights::default();
        let p = |v: f64| penalty(&Overshoots { voltage: vec![v], ..Default::default() }, &w).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p(lo) <= p(hi));
    }
}

#[test]
fn ieee69_paths_reach_substation() {
    let net = builtin_ieee69();
    let order = radial_order(&net);
    for id in 1..=69 {
        let path = order.path(id);
        if id == 1 {
            assert!(path.is_empty());
            continue;
        }
        let first = &net.branches[path[0]];
        assert!(first.from_bus == 1 || first.to_bus == 1, "bus {id}");
    }
}

#[test]
fn sweep_matches_newton_raphson_on_random_feeders() {
    let mut rng = common::rng(31);
    for _ in 0..50 {
        let (net, inj) = common::random_feeder(&mut rng, 15);
        let sol = solve(&net, &inj, DEFAULT_TOLERANCE, DEFAULT_MAX_ITER).unwrap();
        assert!(sol.converged);
        let (v, d) = common::newton_raphson(&net, &inj);
        for i in 0..net.n_buses() {
            assert!((sol.v[i] - v[i]).abs() < 1e-6);
            assert!((sol.delta[i] - d[i]).abs() < 1e-6);
        }
    }
}

#[test]
fn archive_capacity_fifty_of_hundred() {
    let mut arch = ParetoArchive::new(50);
    for i in 0..100 {
        let t = (i as f64 * 0.618_033_988_7).fract();
        arch.insert(vec![t], ObjectiveVector::new(t, (1.0 - t).powi(2)));
    }
    assert_eq!(arch.len(), 50);
    for a in &arch.entries {
        for b in &arch.entries {
            assert!(!dominates(&a.f, &b.f));
        }
    }
}

#[test]
fn elitist_archive_never_regresses() {
    let cfg = HybridConfig {
        population: 20,
        iterations: 40,
        seed: 3,
        ..Default::default()
    };
    let space = SearchSpace::uniform(5, -5.0, 5.0).unwrap();
    let res = run(Algorithm::Hybrid, &cfg, &space, None, |x: &[f64]| {
        Ok(ObjectiveVector::new(benchmarks::sphere(x), x.iter().map(|v| (v - 1.0).powi(2)).sum()))
    })
    .unwrap();
    for w in res.log.windows(2) {
        assert!(w[1].best_f1 <= w[0].best_f1);
        assert!(w[1].best_f2 <= w[0].best_f2);
    }
    for e in &res.archive.entries {
        assert!(space.contains(&e.x));
    }
}

#[test]
fn pure_algorithms_converge_on_sphere() {
    let space = SearchSpace::uniform(10, -100.0, 100.0).unwrap();
    for algo in [Algorithm::Gwo, Algorithm::Pso] {
        let mut finals: Vec<f64> = (0..5)
            .map(|seed| {
                let cfg = HybridConfig {
                    population: 50,
                    iterations: 100,
                    seed,
                    weights: [1.0, 0.0],
                    ..Default::default()
                };
                run(algo, &cfg, &space, None, single_objective(benchmarks::sphere)).unwrap().best.f.f1
            })
            .collect();
        finals.sort_by(f64::total_cmp);
        assert!(finals[2] <= 1e-2, "{algo:?} median {}", finals[2]);
    }
}
