use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};

/// Pareto dominance for minimisation.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteObjective);
    }
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveMember {
    pub position: Vec<f64>,
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Dominated by a current or previously evicted member.
    Rejected,
    Inserted {
        removed: usize,
        evicted: bool,
    },
}

/// Bounded set of mutually non-dominated solutions pruned by grid crowding.
///
/// The objective space is split into `grid_divisions` equal cells per
/// objective over the current member range. When the archive overflows, one
/// member of the most crowded cell is dropped at random. Dropped members are
/// remembered so that a later candidate they dominate is still rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    members: Vec<ArchiveMember>,
    capacity: usize,
    grid_divisions: usize,
    evicted: Vec<Vec<f64>>,
}

type CellKey = Vec<usize>;

impl ParetoArchive {
    pub fn new(capacity: usize, grid_divisions: usize) -> Self {
        assert!(capacity > 0 && grid_divisions > 0);
        Self {
            members: Vec::new(),
            capacity,
            grid_divisions,
            evicted: Vec::new(),
        }
    }

    pub fn members(&self) -> &[ArchiveMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.objectives.clone()).collect()
    }

    pub fn insert<R: Rng + ?Sized>(
        &mut self,
        position: Vec<f64>,
        objectives: Vec<f64>,
        rng: &mut R,
    ) -> Result<InsertOutcome> {
        if objectives.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteObjective);
        }
        if let Some(first) = self.members.first() {
            if first.objectives.len() != objectives.len() {
                return Err(Error::LengthMismatch(
                    first.objectives.len(),
                    objectives.len(),
                ));
            }
        }
        let dominated = self
            .members
            .iter()
            .map(|m| &m.objectives)
            .chain(&self.evicted)
            .any(|o| dominates_unchecked(o, &objectives) || *o == objectives);
        if dominated {
            return Ok(InsertOutcome::Rejected);
        }
        let before = self.members.len();
        self.members
            .retain(|m| !dominates_unchecked(&objectives, &m.objectives));
        let removed = before - self.members.len();
        self.evicted
            .retain(|o| !dominates_unchecked(&objectives, o));
        self.members.push(ArchiveMember {
            position,
            objectives,
        });

        let evicted = self.members.len() > self.capacity;
        if evicted {
            let cells = self.cells();
            let crowded = cells
                .values()
                .fold(None::<&Vec<usize>>, |best, idx| match best {
                    Some(b) if b.len() >= idx.len() => Some(b),
                    _ => Some(idx),
                })
                .expect("archive is non-empty");
            let victim = crowded[rng.random_range(0..crowded.len())];
            let gone = self.members.remove(victim);
            self.evicted.push(gone.objectives);
        }
        Ok(InsertOutcome::Inserted { removed, evicted })
    }

    fn cell_key(&self, obj: &[f64], lo: &[f64], hi: &[f64]) -> CellKey {
        let g = self.grid_divisions;
        obj.iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (l, h))| {
                if h > l {
                    (((v - l) / (h - l) * g as f64).floor() as usize).min(g - 1)
                } else {
                    0
                }
            })
            .collect()
    }

    /// Member indices grouped by grid cell, cells in ascending key order.
    pub fn cells(&self) -> BTreeMap<CellKey, Vec<usize>> {
        let mut map: BTreeMap<CellKey, Vec<usize>> = BTreeMap::new();
        let Some(first) = self.members.first() else {
            return map;
        };
        let k = first.objectives.len();
        let lo: Vec<f64> = (0..k)
            .map(|j| {
                self.members
                    .iter()
                    .map(|m| m.objectives[j])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let hi: Vec<f64> = (0..k)
            .map(|j| {
                self.members
                    .iter()
                    .map(|m| m.objectives[j])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for (i, m) in self.members.iter().enumerate() {
            map.entry(self.cell_key(&m.objectives, &lo, &hi))
                .or_default()
                .push(i);
        }
        map
    }

    /// Roulette over occupied cells weighted by inverse occupancy, then a
    /// uniform pick inside the chosen cell.
    pub fn select_leader<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&ArchiveMember> {
        let cells = self.cells();
        if cells.is_empty() {
            return None;
        }
        let total: f64 = cells.values().map(|c| 1.0 / c.len() as f64).sum();
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = cells.values().last().expect("non-empty");
        for c in cells.values() {
            pick -= 1.0 / c.len() as f64;
            if pick < 0.0 {
                chosen = c;
                break;
            }
        }
        Some(&self.members[chosen[rng.random_range(0..chosen.len())]])
    }

    /// A uniformly chosen member.
    pub fn random_member<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&ArchiveMember> {
        if self.members.is_empty() {
            None
        } else {
            Some(&self.members[rng.random_range(0..self.members.len())])
        }
    }

    /// `true` when no member dominates another and the capacity holds.
    pub fn is_sound(&self) -> bool {
        self.members.len() <= self.capacity && count_dominated_pairs(&self.objectives()) == 0
    }
}

/// Number of ordered pairs `(i, j)` with `i` dominating `j`.
pub fn count_dominated_pairs(objs: &[Vec<f64>]) -> usize {
    let mut count = 0;
    for (i, a) in objs.iter().enumerate() {
        for (j, b) in objs.iter().enumerate() {
            if i != j && dominates_unchecked(a, b) {
                count += 1;
            }
        }
    }
    count
}
