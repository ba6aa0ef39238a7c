use std::sync::atomic::{AtomicU64, Ordering};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::structure::{Elem, Region, RelId, Relation, Signature, Structure};
use super::RelError;

/// Counters for every access made through a [`LocalOracle`].
#[derive(Debug, Default)]
pub struct AccessAudit {
    membership: AtomicU64,
    neighbor: AtomicU64,
    global: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditCounts {
    pub membership_queries: u64,
    pub neighbor_queries: u64,
    pub global_scans: u64,
}

impl AuditCounts {
    pub fn oracle_calls(&self) -> u64 {
        self.membership_queries + self.neighbor_queries
    }

    pub fn since(&self, earlier: &AuditCounts) -> AuditCounts {
        AuditCounts {
            membership_queries: self.membership_queries - earlier.membership_queries,
            neighbor_queries: self.neighbor_queries - earlier.neighbor_queries,
            global_scans: self.global_scans - earlier.global_scans,
        }
    }
}

impl AccessAudit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn snapshot(&self) -> AuditCounts {
        AuditCounts {
            membership_queries: self.membership.load(Ordering::Relaxed),
            neighbor_queries: self.neighbor.load(Ordering::Relaxed),
            global_scans: self.global.load(Ordering::Relaxed),
        }
    }

    pub fn record_membership(&self, n: u64) {
        self.membership.fetch_add(n, Ordering::Relaxed);
    }

    pub fn record_neighbors(&self, n: u64) {
        self.neighbor.fetch_add(n, Ordering::Relaxed);
    }

    pub fn record_global_scan(&self) {
        self.global.fetch_add(1, Ordering::Relaxed);
    }
}

/// Local access to a structure: membership tests and neighbour lists only.
/// Anything that touches the whole universe is recorded as a global scan.
#[derive(Clone, Copy)]
pub struct LocalOracle<'a> {
    structure: &'a Structure,
    audit: &'a AccessAudit,
}

impl<'a> LocalOracle<'a> {
    pub fn new(structure: &'a Structure, audit: &'a AccessAudit) -> Self {
        structure.gaifman();
        LocalOracle { structure, audit }
    }

    pub fn audit(&self) -> &'a AccessAudit {
        self.audit
    }

    pub fn signature(&self) -> &'a Signature {
        self.structure.signature()
    }

    /// Translates an external id to its handle. This is a dictionary lookup,
    /// not a scan.
    pub fn resolve(&self, name: &str) -> Result<Elem, RelError> {
        self.structure.resolve(name)
    }

    pub fn name(&self, e: Elem) -> &'a str {
        self.structure.name(e)
    }

    /// "Is `tuple` in R?"
    pub fn membership(&self, rel: RelId, tuple: &[Elem]) -> Result<bool, RelError> {
        for &e in tuple {
            self.structure.check(e)?;
        }
        self.audit.record_membership(1);
        Ok(self.structure.relation(rel).contains(tuple))
    }

    pub fn membership_by_name(&self, rel: &str, tuple: &[Elem]) -> Result<bool, RelError> {
        let id = self
            .signature()
            .lookup(rel)
            .ok_or_else(|| RelError::UnknownSymbol(rel.to_string()))?;
        self.membership(id, tuple)
    }

    /// "Return a list of all neighbours of v."
    pub fn neighbors(&self, v: Elem) -> Result<&'a [Elem], RelError> {
        self.structure.check(v)?;
        self.audit.record_neighbors(1);
        Ok(self.structure.gaifman().neighbors(v))
    }

    /// Iterates the whole universe. Never used by the learn phase.
    pub fn scan_universe(&self) -> std::ops::Range<Elem> {
        self.audit.record_global_scan();
        self.structure.universe()
    }

    /// Some element of a non-empty universe, without scanning.
    pub fn any_element(&self) -> Option<Elem> {
        (!self.structure.is_empty()).then_some(0)
    }

    /// BFS through neighbour queries. Returns the ball (ascending) and the
    /// neighbour lists fetched for its interior.
    fn explore(
        &self,
        centers: &[Elem],
        radius: u32,
        fetch_boundary: bool,
    ) -> Result<(Vec<Elem>, FxHashMap<Elem, &'a [Elem]>), RelError> {
        let mut dist: FxHashMap<Elem, u32> = FxHashMap::default();
        let mut adj: FxHashMap<Elem, &'a [Elem]> = FxHashMap::default();
        let mut frontier: Vec<Elem> = Vec::new();
        for &c in centers {
            self.structure.check(c)?;
            if dist.insert(c, 0).is_none() {
                frontier.push(c);
            }
        }
        let mut d = 0;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &v in &frontier {
                if d >= radius && !fetch_boundary {
                    continue;
                }
                let ns = self.neighbors(v)?;
                adj.insert(v, ns);
                if d >= radius {
                    continue;
                }
                for &w in ns {
                    if let std::collections::hash_map::Entry::Vacant(slot) = dist.entry(w) {
                        slot.insert(d + 1);
                        next.push(w);
                    }
                }
            }
            frontier = next;
            d += 1;
        }
        let mut ball: Vec<Elem> = dist.into_keys().collect();
        ball.sort_unstable();
        Ok((ball, adj))
    }

    /// The r-ball of a tuple computed with neighbour queries only.
    pub fn ball(&self, centers: &[Elem], radius: u32) -> Result<Vec<Elem>, RelError> {
        Ok(self.explore(centers, radius, false)?.0)
    }

    /// Materializes the r-neighbourhood of `centers` as a standalone structure.
    ///
    /// Every tuple containing `v` consists of `v` and neighbours of `v`, so the
    /// induced relations are recovered by membership queries over those
    /// candidates, anchored at the tuple's first entry.
    pub fn materialize(&self, centers: &[Elem], radius: u32) -> Result<Region, RelError> {
        let (ball, adj) = self.explore(centers, radius, true)?;
        let in_ball: FxHashSet<Elem> = ball.iter().copied().collect();
        let to_local: FxHashMap<Elem, Elem> = ball
            .iter()
            .enumerate()
            .map(|(i, &g)| (g, i as Elem))
            .collect();
        let sig = self.signature();
        let mut relations = Vec::with_capacity(sig.len());
        let mut queries = 0u64;
        for (id, sym) in sig.symbols().iter().enumerate() {
            let rel = self.structure.relation(id);
            match sym.arity {
                0 => {
                    queries += 1;
                    relations.push(Relation::nullary(rel.truth()));
                }
                arity => {
                    let mut tuples: Vec<Box<[Elem]>> = Vec::new();
                    let mut buf = vec![0 as Elem; arity];
                    for &v in &ball {
                        let mut cands: Vec<Elem> = vec![v];
                        cands.extend(adj[&v].iter().copied().filter(|w| in_ball.contains(w)));
                        buf[0] = v;
                        let mut idx = vec![0usize; arity - 1];
                        loop {
                            for (slot, &i) in idx.iter().enumerate() {
                                buf[slot + 1] = cands[i];
                            }
                            queries += 1;
                            if rel.contains(&buf) {
                                tuples.push(buf.iter().map(|g| to_local[g]).collect());
                            }
                            // odometer over cands^(arity-1)
                            let mut p = 0;
                            while p < idx.len() {
                                idx[p] += 1;
                                if idx[p] < cands.len() {
                                    break;
                                }
                                idx[p] = 0;
                                p += 1;
                            }
                            if p == idx.len() {
                                break;
                            }
                        }
                    }
                    relations.push(Relation::from_tuples(arity, tuples));
                }
            }
        }
        self.audit.record_membership(queries);
        let elements = ball.iter().map(|&g| self.structure.name(g).to_string()).collect();
        Ok(Region {
            structure: Structure::from_parts(sig.clone(), elements, relations),
            to_global: ball,
            to_local,
        })
    }
}
