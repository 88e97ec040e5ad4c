//! Fuzzy normalization, constrained Pareto dominance, a bounded non-dominated
//! archive and best-compromise selection for two objectives.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Expected cost, expected ENS and the constraint penalty of one schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    /// $/day
    pub f1: f64,
    /// kWh/yr
    pub f2: f64,
    pub penalty: f64,
}

impl ObjectiveVector {
    pub fn new(f1: f64, f2: f64) -> Self {
        ObjectiveVector { f1, f2, penalty: 0.0 }
    }

    pub fn is_feasible(&self) -> bool {
        self.penalty <= 0.0
    }

    pub fn get(&self, h: usize) -> f64 {
        match h {
            0 => self.f1,
            1 => self.f2,
            _ => panic!("objective index {h} out of range"),
        }
    }
}

/// Trapezoidal membership for minimization: 1 at `f_min`, 0 at `f_max`.
pub fn membership(f: f64, f_min: f64, f_max: f64) -> Result<f64> {
    if !(f_min < f_max) {
        return Err(Error::Argument(format!(
            "membership needs f_min < f_max, got {f_min} >= {f_max}"
        )));
    }
    Ok(if f <= f_min {
        1.0
    } else if f >= f_max {
        0.0
    } else {
        (f_max - f) / (f_max - f_min)
    })
}

/// Constrained dominance: feasible beats infeasible, two infeasible points
/// compare by penalty, two feasible points by Pareto order on (f1, f2).
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.penalty < b.penalty,
        (true, true) => a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2),
    }
}

/// Per-objective normalization bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipScaler {
    pub f_min: [f64; 2],
    pub f_max: [f64; 2],
}

impl MembershipScaler {
    pub fn new(f_min: [f64; 2], f_max: [f64; 2]) -> Result<Self> {
        for h in 0..2 {
            if !(f_min[h] < f_max[h]) {
                return Err(Error::Argument(format!(
                    "objective {}: f_min {} must be below f_max {}",
                    h + 1,
                    f_min[h],
                    f_max[h]
                )));
            }
        }
        Ok(MembershipScaler { f_min, f_max })
    }

    /// Running extremes over `points`. A collapsed range is kept as-is and
    /// maps every value to membership 1; `None` for an empty iterator.
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a ObjectiveVector>) -> Option<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut any = false;
        for p in points {
            any = true;
            for h in 0..2 {
                lo[h] = lo[h].min(p.get(h));
                hi[h] = hi[h].max(p.get(h));
            }
        }
        any.then_some(MembershipScaler { f_min: lo, f_max: hi })
    }

    pub fn memberships(&self, f: &ObjectiveVector) -> [f64; 2] {
        std::array::from_fn(|h| membership(f.get(h), self.f_min[h], self.f_max[h]).unwrap_or(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    /// Flattened decision vector.
    pub x: Vec<f64>,
    pub f: ObjectiveVector,
    pub memberships: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub entries: Vec<ArchiveEntry>,
    pub capacity: usize,
}

pub const DEFAULT_ARCHIVE_CAPACITY: usize = 100;

impl Default for ParetoArchive {
    fn default() -> Self {
        Self::new(DEFAULT_ARCHIVE_CAPACITY)
    }
}

impl ParetoArchive {
    pub fn new(capacity: usize) -> Self {
        ParetoArchive {
            entries: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns whether the point was kept. Dominated points and exact
    /// duplicates of an existing objective vector are rejected.
    pub fn insert(&mut self, x: Vec<f64>, f: ObjectiveVector) -> bool {
        if self
            .entries
            .iter()
            .any(|e| dominates(&e.f, &f) || same_objectives(&e.f, &f))
        {
            return false;
        }
        self.entries.retain(|e| !dominates(&f, &e.f));
        self.entries.push(ArchiveEntry {
            x,
            f,
            memberships: [1.0, 1.0],
        });
        let mut kept = true;
        while self.entries.len() > self.capacity {
            let victim = self.most_crowded();
            kept &= victim != self.entries.len() - 1;
            self.entries.remove(victim);
        }
        self.rescale();
        kept
    }

    pub fn scaler(&self) -> Option<MembershipScaler> {
        MembershipScaler::from_points(self.entries.iter().map(|e| &e.f))
    }

    /// Recomputes memberships from the archive's own extremes.
    pub fn rescale(&mut self) {
        if let Some(s) = self.scaler() {
            self.rescale_with(&s);
        }
    }

    pub fn rescale_with(&mut self, scaler: &MembershipScaler) {
        for e in &mut self.entries {
            e.memberships = scaler.memberships(&e.f);
        }
    }

    /// Index of the entry with the smallest normalized nearest-neighbor
    /// distance; per-objective extremes are never chosen.
    fn most_crowded(&self) -> usize {
        let n = self.entries.len();
        let scaler = self.scaler().expect("non-empty archive");
        let span: [f64; 2] = std::array::from_fn(|h| {
            let s = scaler.f_max[h] - scaler.f_min[h];
            if s > 0.0 {
                s
            } else {
                1.0
            }
        });
        let extreme = |h: usize| {
            (0..n)
                .min_by(|&i, &j| {
                    self.entries[i].f.get(h).total_cmp(&self.entries[j].f.get(h))
                })
                .unwrap()
        };
        let protected = [extreme(0), extreme(1)];
        let mut best = (f64::INFINITY, n - 1);
        for i in 0..n {
            if protected.contains(&i) && n > 2 {
                continue;
            }
            let nn = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    (0..2)
                        .map(|h| {
                            ((self.entries[i].f.get(h) - self.entries[j].f.get(h)) / span[h]).powi(2)
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            if nn <= best.0 {
                best = (nn, i);
            }
        }
        best.1
    }

    /// Entries sorted by ascending f1, then f2.
    pub fn sorted(&self) -> Vec<&ArchiveEntry> {
        let mut v: Vec<&ArchiveEntry> = self.entries.iter().collect();
        v.sort_by(|a, b| a.f.f1.total_cmp(&b.f.f1).then(a.f.f2.total_cmp(&b.f.f2)));
        v
    }

    /// Normalized fuzzy scores Y_Ψ in entry order.
    pub fn compromise_scores(&self, weights: [f64; 2]) -> Result<Vec<f64>> {
        check_weights(weights)?;
        let num: Vec<f64> = self
            .entries
            .iter()
            .map(|e| weights[0] * e.memberships[0] + weights[1] * e.memberships[1])
            .collect();
        let total: f64 = num.iter().sum();
        Ok(if total > 0.0 {
            num.iter().map(|y| y / total).collect()
        } else {
            vec![1.0 / num.len() as f64; num.len()]
        })
    }

    /// CSV with columns f1, f2, psi1, psi2, y_psi, sorted by f1.
    pub fn to_csv(&self, weights: [f64; 2]) -> Result<String> {
        let scores = if self.is_empty() {
            Vec::new()
        } else {
            self.compromise_scores(weights)?
        };
        let mut rows: Vec<(&ArchiveEntry, f64)> = self.entries.iter().zip(scores).collect();
        rows.sort_by(|a, b| a.0.f.f1.total_cmp(&b.0.f.f1).then(a.0.f.f2.total_cmp(&b.0.f.f2)));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["f1", "f2", "psi1", "psi2", "y_psi"])
            .map_err(|e| Error::parse("archive csv", e))?;
        for (e, y) in rows {
            w.serialize((e.f.f1, e.f.f2, e.memberships[0], e.memberships[1], y))
                .map_err(|e| Error::parse("archive csv", e))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::parse("archive csv", e))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn same_objectives(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.f1 == b.f1 && a.f2 == b.f2 && a.penalty == b.penalty
}

fn check_weights(w: [f64; 2]) -> Result<()> {
    if w.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) || w[0] + w[1] <= 0.0 {
        return Err(Error::Argument(format!(
            "weights must be >= 0 and not both zero, got {w:?}"
        )));
    }
    Ok(())
}

/// Entry maximizing Y_Ψ; ties go to the lower f1.
pub fn best_compromise(arch: &ParetoArchive, weights: [f64; 2]) -> Result<&ArchiveEntry> {
    if arch.is_empty() {
        return Err(Error::EmptyArchive);
    }
    let scores = arch.compromise_scores(weights)?;
    let best = (0..arch.len())
        .max_by(|&i, &j| {
            scores[i]
                .total_cmp(&scores[j])
                .then(arch.entries[j].f.f1.total_cmp(&arch.entries[i].f.f1))
        })
        .unwrap();
    Ok(&arch.entries[best])
}
