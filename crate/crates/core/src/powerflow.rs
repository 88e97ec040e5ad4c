//! Backward-forward sweep power flow for radial feeders.
//!
//! Each iteration converts the specified bus injections into currents at the
//! present voltages, accumulates branch currents from the leaves towards the
//! substation, then walks back down applying the series voltage drops. The
//! substation is the slack bus, held at 1.0 pu and zero angle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{radial_order, Network, RadialOrder};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Net bus injections for one hour. Positive is generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionProfile {
    /// kW per bus index; the substation entry is ignored.
    pub p: Vec<f64>,
    /// kvar per bus index.
    pub q: Vec<f64>,
}

impl InjectionProfile {
    pub fn zeros(n: usize) -> Self {
        InjectionProfile {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    /// Injections equal to the negated nominal loads.
    pub fn from_loads(net: &Network) -> Self {
        InjectionProfile {
            p: net.buses.iter().map(|b| -b.p_load).collect(),
            q: net.buses.iter().map(|b| -b.q_load).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowSolution {
    /// Voltage magnitude per bus index, pu.
    pub v: Vec<f64>,
    /// Voltage angle per bus index, rad.
    pub delta: Vec<f64>,
    /// Sending-end apparent power per branch (indexed like `Network::branches`), kVA.
    pub s_flow: Vec<f64>,
    /// kW
    pub p_loss_total: f64,
    /// Substation active power, kW, positive when importing from the grid.
    pub p_slack: f64,
    /// kvar
    pub q_slack: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Sum over non-slack buses of the complex power mismatch at exit, pu.
    pub mismatch: f64,
}

/// Limit overshoots, each `max(0, excess)`; only nonzero entries are listed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// (branch index, kVA above `s_max`)
    pub flow: Vec<(usize, f64)>,
    /// (bus id, pu outside `[v_min, v_max]`)
    pub voltage: Vec<(usize, f64)>,
}

impl ViolationReport {
    pub fn is_empty(&self) -> bool {
        self.flow.is_empty() && self.voltage.is_empty()
    }
}

/// Precomputed per-unit sweep data for one network. Build once, solve many times.
#[derive(Debug, Clone)]
pub struct Sweep {
    n: usize,
    root: usize,
    /// (branch index, parent bus, child bus, impedance pu), breadth-first.
    steps: Vec<(usize, usize, usize, Complex64)>,
    r_pu: Vec<f64>,
    s_base_kw: f64,
}

impl Sweep {
    pub fn new(net: &Network) -> Result<Self> {
        Self::with_order(net, &radial_order(net))
    }

    pub fn with_order(net: &Network, order: &RadialOrder) -> Result<Self> {
        let z_base = net.z_base();
        let mut steps = Vec::with_capacity(order.order.len());
        let mut r_pu = vec![0.0; net.branches.len()];
        for ob in &order.order {
            let br = &net.branches[ob.branch];
            if br.r == 0.0 && br.x == 0.0 {
                return Err(Error::SingularBranch {
                    from: br.from_bus,
                    to: br.to_bus,
                });
            }
            let z = Complex64::new(br.r / z_base, br.x / z_base);
            r_pu[ob.branch] = z.re;
            steps.push((ob.branch, ob.parent, ob.child, z));
        }
        Ok(Sweep {
            n: net.n_buses(),
            root: net.substation_bus - 1,
            steps,
            r_pu,
            s_base_kw: net.s_base_kw(),
        })
    }

    pub fn solve(&self, inj: &InjectionProfile, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
        if inj.p.len() != self.n || inj.q.len() != self.n {
            return Err(Error::Argument(format!(
                "injection profile has {} entries, network has {} buses",
                inj.p.len(),
                self.n
            )));
        }
        if max_iter == 0 {
            return Err(Error::Argument("max_iter must be >= 1".into()));
        }
        let n = self.n;
        let mut s_spec: Vec<Complex64> = inj
            .p
            .iter()
            .zip(&inj.q)
            .map(|(&p, &q)| Complex64::new(p, q) / self.s_base_kw)
            .collect();
        s_spec[self.root] = Complex64::new(0.0, 0.0);

        let mut v = vec![Complex64::new(1.0, 0.0); n];
        let mut i_inj = vec![Complex64::new(0.0, 0.0); n];
        let mut j_branch = vec![Complex64::new(0.0, 0.0); n];
        let mut converged = false;
        let mut iterations = 0;
        let mut mismatch = f64::INFINITY;

        for it in 1..=max_iter {
            iterations = it;
            for b in 0..n {
                i_inj[b] = (s_spec[b] / v[b]).conj();
            }
            // backward: current flowing parent -> child, stored at the child
            for b in 0..n {
                j_branch[b] = -i_inj[b];
            }
            for &(_, parent, child, _) in self.steps.iter().rev() {
                let jc = j_branch[child];
                if parent != self.root {
                    j_branch[parent] += jc;
                }
            }
            // forward
            for &(_, parent, child, z) in &self.steps {
                v[child] = v[parent] - z * j_branch[child];
            }
            mismatch = (0..n)
                .filter(|&b| b != self.root)
                .map(|b| (v[b] * i_inj[b].conj() - s_spec[b]).norm())
                .sum();
            if !mismatch.is_finite() {
                break;
            }
            if mismatch <= tol {
                converged = true;
                break;
            }
        }

        let mut s_flow = vec![0.0; self.r_pu.len()];
        let mut p_loss = 0.0;
        let mut s_root = Complex64::new(0.0, 0.0);
        for &(k, parent, child, _) in &self.steps {
            let j = j_branch[child];
            s_flow[k] = (v[parent] * j.conj()).norm() * self.s_base_kw;
            p_loss += self.r_pu[k] * j.norm_sqr();
            if parent == self.root {
                s_root += v[parent] * j.conj();
            }
        }
        Ok(PowerFlowSolution {
            v: v.iter().map(|c| c.norm()).collect(),
            delta: v.iter().map(|c| c.arg()).collect(),
            s_flow,
            p_loss_total: p_loss * self.s_base_kw,
            p_slack: s_root.re * self.s_base_kw,
            q_slack: s_root.im * self.s_base_kw,
            converged,
            iterations,
            mismatch,
        })
    }
}

/// One-shot solve; prefer [`Sweep`] when solving the same network repeatedly.
pub fn solve(net: &Network, inj: &InjectionProfile, tol: f64, max_iter: usize) -> Result<PowerFlowSolution> {
    Sweep::new(net)?.solve(inj, tol, max_iter)
}

pub fn check_limits(sol: &PowerFlowSolution, net: &Network) -> ViolationReport {
    let mut report = ViolationReport::default();
    for (k, br) in net.branches.iter().enumerate() {
        let excess = sol.s_flow[k] - br.s_max;
        if excess > 0.0 {
            report.flow.push((k, excess));
        }
    }
    for (i, &v) in sol.v.iter().enumerate() {
        let excess = (net.v_min - v).max(v - net.v_max);
        if excess > 0.0 {
            report.voltage.push((i + 1, excess));
        }
    }
    report
}
