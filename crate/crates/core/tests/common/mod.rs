#![allow(dead_code)]

use feeder_ems::netmodel::{Branch, Bus, Network};
use feeder_ems::powerflow::InjectionProfile;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Polar Newton-Raphson on the full bus admittance matrix with a
/// finite-difference Jacobian. Returns (|V|, angle) per bus index.
pub fn newton_raphson(net: &Network, inj: &InjectionProfile) -> (Vec<f64>, Vec<f64>) {
    let n = net.buses.len();
    let z_base = net.base_kv * net.base_kv / net.base_mva;
    let s_base = net.base_mva * 1000.0;
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for br in &net.branches {
        let (a, b) = (br.from_bus - 1, br.to_bus - 1);
        let yb = Complex64::new(1.0, 0.0) / Complex64::new(br.r / z_base, br.x / z_base);
        y[a][a] += yb;
        y[b][b] += yb;
        y[a][b] -= yb;
        y[b][a] -= yb;
    }
    let slack = net.substation_bus - 1;
    let pq: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = pq.len();
    let p_spec: Vec<f64> = pq.iter().map(|&i| inj.p[i] / s_base).collect();
    let q_spec: Vec<f64> = pq.iter().map(|&i| inj.q[i] / s_base).collect();

    let mismatch = |state: &[f64]| -> Vec<f64> {
        let mut v = vec![1.0; n];
        let mut d = vec![0.0; n];
        for (k, &i) in pq.iter().enumerate() {
            d[i] = state[k];
            v[i] = state[m + k];
        }
        let mut out = vec![0.0; 2 * m];
        for (k, &a) in pq.iter().enumerate() {
            let (mut p, mut q) = (0.0, 0.0);
            for b in 0..n {
                let ymag = y[a][b].norm();
                if ymag == 0.0 {
                    continue;
                }
                let theta = y[a][b].arg();
                let ang = theta - d[a] + d[b];
                p += v[a] * v[b] * ymag * ang.cos();
                q -= v[a] * v[b] * ymag * ang.sin();
            }
            out[k] = p_spec[k] - p;
            out[m + k] = q_spec[k] - q;
        }
        out
    };

    let mut state = vec![0.0; 2 * m];
    for k in 0..m {
        state[m + k] = 1.0;
    }
    for _ in 0..50 {
        let f0 = mismatch(&state);
        if f0.iter().map(|x| x.abs()).fold(0.0, f64::max) < 1e-13 {
            break;
        }
        let h = 1e-7;
        let mut jac = DMatrix::zeros(2 * m, 2 * m);
        for c in 0..2 * m {
            let mut s = state.clone();
            s[c] += h;
            let f1 = mismatch(&s);
            for r in 0..2 * m {
                jac[(r, c)] = (f1[r] - f0[r]) / h;
            }
        }
        let step = jac
            .lu()
            .solve(&DVector::from_vec(f0))
            .expect("nonsingular jacobian");
        for c in 0..2 * m {
            state[c] -= step[c];
        }
    }
    let mut v = vec![1.0; n];
    let mut d = vec![0.0; n];
    for (k, &i) in pq.iter().enumerate() {
        d[i] = state[k];
        v[i] = state[m + k];
    }
    (v, d)
}

/// Random radial feeder with 2..=max_buses buses; branch orientation and
/// ordering are shuffled.
pub fn random_feeder(rng: &mut ChaCha8Rng, max_buses: usize) -> (Network, InjectionProfile) {
    let n = rng.random_range(2..=max_buses);
    let buses: Vec<Bus> = (1..=n)
        .map(|id| Bus {
            id,
            p_load: if id == 1 { 0.0 } else { rng.random_range(0.0..300.0) },
            q_load: if id == 1 { 0.0 } else { rng.random_range(0.0..200.0) },
        })
        .collect();
    let mut branches: Vec<Branch> = (2..=n)
        .map(|child| {
            let parent = rng.random_range(1..child);
            let (from_bus, to_bus) = if rng.random::<bool>() {
                (parent, child)
            } else {
                (child, parent)
            };
            Branch {
                from_bus,
                to_bus,
                r: rng.random_range(0.02..0.6),
                x: rng.random_range(0.02..0.6),
                s_max: 5000.0,
                at_repair: 2.0,
                at_restoration: 0.5,
            }
        })
        .collect();
    for i in (1..branches.len()).rev() {
        let j = rng.random_range(0..=i);
        branches.swap(i, j);
    }
    let mut net = Network {
        buses,
        branches,
        dgs: vec![],
        pvs: vec![],
        esss: vec![],
        substation_bus: 1,
        v_min: 0.9,
        v_max: 1.05,
        base_kv: 12.66,
        base_mva: 10.0,
    };
    net.validate().expect("random feeder is radial");
    let mut inj = InjectionProfile::from_loads(&net);
    for i in 1..n {
        if rng.random::<f64>() < 0.2 {
            inj.p[i] += rng.random_range(0.0..400.0);
        }
    }
    (net, inj)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spearman rank correlation with average ranks for ties, and a two-sided
/// p-value from the t approximation.
pub fn spearman(x: &[f64], y: &[f64]) -> (f64, f64) {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    let rho = cov / (vx * vy).sqrt();
    let t = rho * ((n - 2.0) / (1.0 - rho * rho).max(1e-300)).sqrt();
    let dist = statrs::distribution::StudentsT::new(0.0, 1.0, n - 2.0).unwrap();
    use statrs::distribution::ContinuousCDF;
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    (rho, p)
}
