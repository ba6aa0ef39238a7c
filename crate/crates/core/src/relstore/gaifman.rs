use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::structure::{Elem, Structure};
use super::RelError;

/// Distance value used for disconnected pairs.
pub const UNREACHABLE: u32 = u32::MAX;

/// Adjacency of the Gaifman graph: `{v, w}` is an edge iff `v != w` and some
/// tuple contains both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaifmanIndex {
    adjacency: Vec<Vec<Elem>>,
    degree: usize,
}

impl GaifmanIndex {
    pub fn build(s: &Structure) -> Self {
        let mut adjacency: Vec<Vec<Elem>> = vec![Vec::new(); s.len()];
        for rel in s.relations() {
            if rel.arity() < 2 {
                continue;
            }
            for t in rel.tuples() {
                for (i, &a) in t.iter().enumerate() {
                    for &b in &t[i + 1..] {
                        if a != b {
                            adjacency[a as usize].push(b);
                            adjacency[b as usize].push(a);
                        }
                    }
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let degree = adjacency.iter().map(Vec::len).max().unwrap_or(0);
        GaifmanIndex { adjacency, degree }
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn neighbors(&self, v: Elem) -> &[Elem] {
        &self.adjacency[v as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn adjacent(&self, v: Elem, w: Elem) -> bool {
        self.adjacency[v as usize].binary_search(&w).is_ok()
    }

    fn check(&self, v: Elem) -> Result<(), RelError> {
        if (v as usize) < self.adjacency.len() {
            Ok(())
        } else {
            Err(RelError::UnknownElement(format!("#{v}")))
        }
    }

    /// Shortest-path length from the closest entry of `from` to `to`;
    /// [`UNREACHABLE`] when disconnected or `from` is empty.
    pub fn distance(&self, from: &[Elem], to: Elem) -> Result<u32, RelError> {
        for &v in from {
            self.check(v)?;
        }
        self.check(to)?;
        Ok(self.bounded_distance(from, to, UNREACHABLE))
    }

    /// BFS that stops after `cap` layers; returns [`UNREACHABLE`] past the cap.
    pub fn bounded_distance(&self, from: &[Elem], to: Elem, cap: u32) -> u32 {
        if from.contains(&to) {
            return 0;
        }
        let mut dist: FxHashMap<Elem, u32> = FxHashMap::default();
        let mut queue = VecDeque::new();
        for &v in from {
            if dist.insert(v, 0).is_none() {
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d >= cap {
                continue;
            }
            for &w in self.neighbors(v) {
                if !dist.contains_key(&w) {
                    if w == to {
                        return d + 1;
                    }
                    dist.insert(w, d + 1);
                    queue.push_back(w);
                }
            }
        }
        UNREACHABLE
    }

    /// Distances of everything within `radius` of `centers`.
    pub fn distances_within(&self, centers: &[Elem], radius: u32) -> FxHashMap<Elem, u32> {
        let mut dist: FxHashMap<Elem, u32> = FxHashMap::default();
        let mut queue = VecDeque::new();
        for &v in centers {
            if dist.insert(v, 0).is_none() {
                queue.push_back(v);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d >= radius {
                continue;
            }
            for &w in self.neighbors(v) {
                if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(w) {
                    slot.insert(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// The r-ball around a tuple, ascending. The ball of the empty tuple is empty.
    pub fn ball(&self, centers: &[Elem], radius: u32) -> Result<Vec<Elem>, RelError> {
        for &v in centers {
            self.check(v)?;
        }
        let mut out: Vec<Elem> = self.distances_within(centers, radius).into_keys().collect();
        out.sort_unstable();
        Ok(out)
    }
}
