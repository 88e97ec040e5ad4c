//! Distribution-network data model.
//!
//! A [`Network`] is a radial feeder: buses with constant-power loads, branches
//! with series impedance and reliability data, and the controllable devices
//! attached to it (diesel generators, PV arrays and storage units). Networks are
//! validated on construction and treated as read-only afterwards.
//!
//! Two on-disk formats are accepted: a single JSON document mirroring the
//! structs below, or a directory holding a `buses.csv` / `branches.csv` pair
//! for a bare feeder without devices.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const IEEE69_BUSES: &str = include_str!("../data/ieee69_buses.csv");
const IEEE69_BRANCHES: &str = include_str!("../data/ieee69_branches.csv");

pub const DEFAULT_AT_REPAIR: f64 = 2.0;
pub const DEFAULT_AT_RESTORATION: f64 = 0.5;
pub const DEFAULT_DG_MARGINAL_COST: f64 = 0.08;
pub const DEFAULT_DG_P_MAX: f64 = 500.0;
pub const DEFAULT_ESS_EFFICIENCY: f64 = 0.9;

fn default_at_repair() -> f64 {
    DEFAULT_AT_REPAIR
}

fn default_at_restoration() -> f64 {
    DEFAULT_AT_RESTORATION
}

fn default_dg_cost() -> f64 {
    DEFAULT_DG_MARGINAL_COST
}

fn default_dg_p_max() -> f64 {
    DEFAULT_DG_P_MAX
}

fn default_efficiency() -> f64 {
    DEFAULT_ESS_EFFICIENCY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    /// Active demand, kW.
    pub p_load: f64,
    /// Reactive demand, kvar.
    pub q_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series resistance, ohm.
    pub r: f64,
    /// Series reactance, ohm.
    pub x: f64,
    /// Apparent-power limit, kVA.
    pub s_max: f64,
    /// Annual repair time, h/yr.
    #[serde(default = "default_at_repair")]
    pub at_repair: f64,
    /// Annual restoration time, h/yr.
    #[serde(default = "default_at_restoration")]
    pub at_restoration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgSpec {
    pub bus: usize,
    #[serde(default)]
    pub p_min: f64,
    #[serde(default = "default_dg_p_max")]
    pub p_max: f64,
    /// $/kWh
    #[serde(default = "default_dg_cost")]
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvSpec {
    pub bus: usize,
    /// kW
    pub capacity: f64,
    /// $/kWh
    #[serde(default)]
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EssSpec {
    pub bus: usize,
    /// kWh
    pub w_min: f64,
    /// kWh
    pub w_max: f64,
    /// kW
    pub p_charge_max: f64,
    /// kW
    pub p_discharge_max: f64,
    #[serde(default = "default_efficiency")]
    pub eff_charge: f64,
    #[serde(default = "default_efficiency")]
    pub eff_discharge: f64,
    /// kWh
    pub w_initial: f64,
}

impl EssSpec {
    /// Storage unit sized from its energy capacity: 10% floor, half-full start,
    /// a quarter of the capacity as hourly power limit both ways.
    pub fn sized(bus: usize, w_max: f64) -> Self {
        EssSpec {
            bus,
            w_min: 0.1 * w_max,
            w_max,
            p_charge_max: 0.25 * w_max,
            p_discharge_max: 0.25 * w_max,
            eff_charge: DEFAULT_ESS_EFFICIENCY,
            eff_discharge: DEFAULT_ESS_EFFICIENCY,
            w_initial: 0.5 * w_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub dgs: Vec<DgSpec>,
    #[serde(default)]
    pub pvs: Vec<PvSpec>,
    #[serde(default)]
    pub esss: Vec<EssSpec>,
    pub substation_bus: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub base_kv: f64,
    pub base_mva: f64,
}

/// Scalars applied to feeders read from a bare CSV pair.
#[derive(Debug, Clone, Copy)]
pub struct FeederDefaults {
    pub substation_bus: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub base_kv: f64,
    pub base_mva: f64,
}

impl Default for FeederDefaults {
    fn default() -> Self {
        FeederDefaults {
            substation_bus: 1,
            v_min: 0.90,
            v_max: 1.05,
            base_kv: 12.66,
            base_mva: 10.0,
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation(msg()))
    }
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

impl Network {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    /// Zero-based index of a bus id. Ids are contiguous from 1 after validation.
    #[inline]
    pub fn bus_index(&self, id: usize) -> usize {
        id - 1
    }

    /// Impedance base, ohm.
    pub fn z_base(&self) -> f64 {
        self.base_kv * self.base_kv / self.base_mva
    }

    /// Power base, kW.
    pub fn s_base_kw(&self) -> f64 {
        self.base_mva * 1000.0
    }

    pub fn total_load_kw(&self) -> f64 {
        self.buses.iter().map(|b| b.p_load).sum()
    }

    /// Checks every structural and numeric invariant. Buses are sorted by id in
    /// place so that `buses[i].id == i + 1` afterwards.
    pub fn validate(&mut self) -> Result<()> {
        self.buses.sort_by_key(|b| b.id);
        check(!self.buses.is_empty(), || "network has no buses".into())?;
        for (i, bus) in self.buses.iter().enumerate() {
            check(bus.id == i + 1, || {
                format!("bus ids must be unique and contiguous from 1; found {} at position {}", bus.id, i + 1)
            })?;
            check(finite_nonneg(bus.p_load), || {
                format!("bus {}: p_load must be >= 0, got {}", bus.id, bus.p_load)
            })?;
            check(bus.q_load.is_finite(), || format!("bus {}: q_load is not finite", bus.id))?;
        }
        let n = self.buses.len();
        let known = |id: usize| id >= 1 && id <= n;

        check(known(self.substation_bus), || {
            format!("unknown bus {} (substation)", self.substation_bus)
        })?;
        check(self.v_min > 0.0 && self.v_min < self.v_max, || {
            format!("voltage bounds must satisfy 0 < v_min < v_max, got [{}, {}]", self.v_min, self.v_max)
        })?;
        check(self.base_kv > 0.0 && self.base_mva > 0.0, || {
            "base_kv and base_mva must be positive".into()
        })?;

        for br in &self.branches {
            let name = format!("branch {}-{}", br.from_bus, br.to_bus);
            check(known(br.from_bus), || format!("{name}: unknown bus {}", br.from_bus))?;
            check(known(br.to_bus), || format!("{name}: unknown bus {}", br.to_bus))?;
            check(br.from_bus != br.to_bus, || format!("{name}: self loop"))?;
            check(finite_nonneg(br.r) && finite_nonneg(br.x), || {
                format!("{name}: r and x must be >= 0")
            })?;
            check(br.s_max.is_finite() && br.s_max > 0.0, || format!("{name}: s_max must be > 0"))?;
            check(finite_nonneg(br.at_repair) && finite_nonneg(br.at_restoration), || {
                format!("{name}: reliability times must be >= 0")
            })?;
        }
        self.check_radial()?;

        for dg in &self.dgs {
            check(known(dg.bus), || format!("dg: unknown bus {}", dg.bus))?;
            check(
                finite_nonneg(dg.p_min) && dg.p_min <= dg.p_max && dg.p_max.is_finite(),
                || format!("dg at bus {}: need 0 <= p_min <= p_max", dg.bus),
            )?;
            check(finite_nonneg(dg.marginal_cost), || {
                format!("dg at bus {}: marginal_cost must be >= 0", dg.bus)
            })?;
        }
        for pv in &self.pvs {
            check(known(pv.bus), || format!("pv: unknown bus {}", pv.bus))?;
            check(pv.capacity.is_finite() && pv.capacity > 0.0, || {
                format!("pv at bus {}: capacity must be > 0", pv.bus)
            })?;
            check(finite_nonneg(pv.marginal_cost), || {
                format!("pv at bus {}: marginal_cost must be >= 0", pv.bus)
            })?;
        }
        for ess in &self.esss {
            check(known(ess.bus), || format!("ess: unknown bus {}", ess.bus))?;
            check(
                finite_nonneg(ess.w_min)
                    && ess.w_min <= ess.w_initial
                    && ess.w_initial <= ess.w_max
                    && ess.w_max.is_finite(),
                || format!("ess at bus {}: need 0 <= w_min <= w_initial <= w_max", ess.bus),
            )?;
            check(ess.p_charge_max > 0.0 && ess.p_discharge_max > 0.0, || {
                format!("ess at bus {}: power limits must be > 0", ess.bus)
            })?;
            let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
            check(eff_ok(ess.eff_charge) && eff_ok(ess.eff_discharge), || {
                format!("ess at bus {}: efficiencies must lie in (0, 1]", ess.bus)
            })?;
        }
        Ok(())
    }

    fn check_radial(&self) -> Result<()> {
        let n = self.buses.len();
        let mut uf = UnionFind::new(n);
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for br in &self.branches {
            let (a, b) = (br.from_bus - 1, br.to_bus - 1);
            if !uf.union(a, b) {
                let mut cycle = forest_path(&adj, a, b)
                    .into_iter()
                    .map(|i| (i + 1).to_string())
                    .collect::<Vec<_>>();
                cycle.push(br.from_bus.to_string());
                return Err(Error::Validation(format!(
                    "branch {}-{} closes cycle {}",
                    br.from_bus,
                    br.to_bus,
                    cycle.join("-")
                )));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        check(self.branches.len() + 1 == n, || {
            format!(
                "network is not connected: {} buses need {} branches, found {}",
                n,
                n - 1,
                self.branches.len()
            )
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mut net: Network =
            serde_json::from_str(text).map_err(|e| Error::parse("network JSON", e))?;
        net.validate()?;
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Loads a network from a JSON document, or from a directory containing a
/// `buses.csv` / `branches.csv` pair.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    if path.is_dir() {
        return load_feeder_csv(
            path.join("buses.csv"),
            path.join("branches.csv"),
            FeederDefaults::default(),
        );
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut net: Network = serde_json::from_str(&text)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    net.validate()?;
    Ok(net)
}

/// Reads a bare feeder (no devices) from a bus table and a branch table.
///
/// `buses.csv` columns: `id,p_load,q_load`. `branches.csv` columns:
/// `from_bus,to_bus,r,x,s_max` with optional `at_repair,at_restoration`.
pub fn load_feeder_csv(
    buses: impl AsRef<Path>,
    branches: impl AsRef<Path>,
    defaults: FeederDefaults,
) -> Result<Network> {
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let buses_path = buses.as_ref();
    let branches_path = branches.as_ref();
    feeder_from_csv_text(
        &read(buses_path)?,
        &read(branches_path)?,
        defaults,
        &buses_path.display().to_string(),
        &branches_path.display().to_string(),
    )
}

fn feeder_from_csv_text(
    buses: &str,
    branches: &str,
    defaults: FeederDefaults,
    buses_ctx: &str,
    branches_ctx: &str,
) -> Result<Network> {
    let buses = csv::Reader::from_reader(buses.as_bytes())
        .deserialize::<Bus>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(buses_ctx, e))?;
    let branches = csv::Reader::from_reader(branches.as_bytes())
        .deserialize::<Branch>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(branches_ctx, e))?;
    let mut net = Network {
        buses,
        branches,
        dgs: Vec::new(),
        pvs: Vec::new(),
        esss: Vec::new(),
        substation_bus: defaults.substation_bus,
        v_min: defaults.v_min,
        v_max: defaults.v_max,
        base_kv: defaults.base_kv,
        base_mva: defaults.base_mva,
    };
    net.validate()?;
    Ok(net)
}

pub const IEEE69_PV_BUSES: [usize; 3] = [14, 30, 69];
pub const IEEE69_DG_BUSES: [usize; 4] = [40, 51, 59, 67];
pub const IEEE69_PV_CAPACITY_KW: f64 = 1500.0;
pub const IEEE69_ESS_CAPACITY_KWH: f64 = 3000.0;

/// The Baran-Wu 69-bus feeder without any devices (12.66 kV, 10 MVA base).
pub fn ieee69_feeder() -> Network {
    feeder_from_csv_text(
        IEEE69_BUSES,
        IEEE69_BRANCHES,
        FeederDefaults::default(),
        "ieee69_buses.csv",
        "ieee69_branches.csv",
    )
    .expect("embedded 69-bus data is valid")
}

/// The 69-bus feeder retrofitted with PV + storage at buses 14, 30, 69 and
/// diesel generators at buses 40, 51, 59, 67.
pub fn builtin_ieee69() -> Network {
    let mut net = ieee69_feeder();
    for &bus in &IEEE69_PV_BUSES {
        net.pvs.push(PvSpec {
            bus,
            capacity: IEEE69_PV_CAPACITY_KW,
            marginal_cost: 0.0,
        });
        net.esss.push(EssSpec::sized(bus, IEEE69_ESS_CAPACITY_KWH));
    }
    for &bus in &IEEE69_DG_BUSES {
        net.dgs.push(DgSpec {
            bus,
            p_min: 0.0,
            p_max: DEFAULT_DG_P_MAX,
            marginal_cost: DEFAULT_DG_MARGINAL_COST,
        });
    }
    net.validate().expect("builtin network is valid");
    net
}

/// A branch oriented away from the substation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBranch {
    /// Index into `Network::branches`.
    pub branch: usize,
    /// Zero-based bus index on the substation side.
    pub parent: usize,
    /// Zero-based bus index on the far side.
    pub child: usize,
}

/// Breadth-first orientation of a radial network.
#[derive(Debug, Clone)]
pub struct RadialOrder {
    /// Branches in breadth-first order from the substation; every branch appears
    /// after the branch feeding its parent bus.
    pub order: Vec<OrientedBranch>,
    /// For each bus index, the position in `order` of the branch feeding it.
    pub feeder_of: Vec<Option<usize>>,
    /// For each bus index, branch indices (into `Network::branches`) on the
    /// path from the substation, substation end first.
    pub paths: Vec<Vec<usize>>,
}

impl RadialOrder {
    /// Branch indices on the unique path from bus `id` to the substation.
    pub fn path(&self, id: usize) -> &[usize] {
        &self.paths[id - 1]
    }
}

pub fn radial_order(net: &Network) -> RadialOrder {
    let n = net.n_buses();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, br) in net.branches.iter().enumerate() {
        adj[br.from_bus - 1].push((br.to_bus - 1, k));
        adj[br.to_bus - 1].push((br.from_bus - 1, k));
    }
    let root = net.substation_bus - 1;
    let mut visited = vec![false; n];
    let mut feeder_of = vec![None; n];
    let mut paths = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n.saturating_sub(1));
    let mut queue = VecDeque::from([root]);
    visited[root] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, k) in &adj[u] {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            feeder_of[v] = Some(order.len());
            order.push(OrientedBranch {
                branch: k,
                parent: u,
                child: v,
            });
            let mut path = paths[u].clone();
            path.push(k);
            paths[v] = path;
            queue.push_back(v);
        }
    }
    RadialOrder {
        order,
        feeder_of,
        paths,
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

fn forest_path(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev: HashMap<usize, usize> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    prev.insert(from, from);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &v in &adj[u] {
            if let std::collections::hash_map::Entry::Vacant(e) = prev.entry(v) {
                e.insert(u);
                queue.push_back(v);
            }
        }
    }
    let mut path = vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[&cur];
        path.push(cur);
    }
    path.reverse();
    path
}
