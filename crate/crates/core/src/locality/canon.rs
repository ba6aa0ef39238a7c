use std::collections::BTreeMap;

use crate::relstore::{Elem, Structure};

/// Isomorphism-invariant description of a structure with distinguished centers.
/// Equal keys always mean isomorphic; past the search cap, isomorphic inputs may
/// still receive different keys.
pub type TypeKey = Vec<u32>;

struct Incidence<'a> {
    s: &'a Structure,
    /// Per element: (relation, position, tuple) for each tuple containing it.
    rows: Vec<Vec<(usize, usize, &'a [Elem])>>,
}

impl<'a> Incidence<'a> {
    fn new(s: &'a Structure) -> Self {
        let mut rows = vec![Vec::new(); s.len()];
        for (r, rel) in s.relations().iter().enumerate() {
            for t in rel.tuples() {
                for (p, &e) in t.iter().enumerate() {
                    rows[e as usize].push((r, p, t));
                }
            }
        }
        Incidence { s, rows }
    }

    /// Colour refinement until the number of classes is stable.
    fn refine(&self, mut colors: Vec<u32>) -> Vec<u32> {
        let mut classes = distinct(&colors);
        loop {
            let sigs: Vec<(u32, Vec<(usize, usize, Vec<u32>)>)> = (0..colors.len())
                .map(|v| {
                    let mut around: Vec<_> = self.rows[v]
                        .iter()
                        .map(|&(r, p, t)| (r, p, t.iter().map(|&e| colors[e as usize]).collect::<Vec<_>>()))
                        .collect();
                    around.sort_unstable();
                    (colors[v], around)
                })
                .collect();
            let mut order: Vec<&(u32, Vec<(usize, usize, Vec<u32>)>)> = sigs.iter().collect();
            order.sort_unstable();
            order.dedup();
            let rank: BTreeMap<_, u32> = order.into_iter().enumerate().map(|(i, s)| (s, i as u32)).collect();
            colors = sigs.iter().map(|s| rank[s]).collect();
            let now = distinct(&colors);
            if now == classes {
                return colors;
            }
            classes = now;
        }
    }

    fn encode(&self, colors: &[u32], centers: &[Elem]) -> TypeKey {
        let mut out = vec![self.s.len() as u32, centers.len() as u32];
        out.extend(centers.iter().map(|&c| colors[c as usize]));
        for rel in self.s.relations() {
            let mut ts: Vec<Vec<u32>> = rel.tuples().map(|t| t.iter().map(|&e| colors[e as usize]).collect()).collect();
            ts.sort_unstable();
            out.push(u32::MAX);
            out.push(ts.len() as u32);
            for t in ts {
                out.extend(t);
            }
        }
        out
    }
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

struct Search<'a, 'b> {
    inc: &'b Incidence<'a>,
    centers: &'b [Elem],
    best: Option<TypeKey>,
    leaves: usize,
    cap: usize,
}

impl Search<'_, '_> {
    fn run(&mut self, colors: Vec<u32>) {
        if self.leaves >= self.cap {
            return;
        }
        let colors = self.inc.refine(colors);
        let mut cells: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colors.iter().enumerate() {
            cells.entry(c).or_default().push(v);
        }
        let Some(cell) = cells.values().find(|c| c.len() > 1).cloned() else {
            self.leaves += 1;
            let key = self.inc.encode(&colors, self.centers);
            if self.best.as_ref().map_or(true, |b| key < *b) {
                self.best = Some(key);
            }
            return;
        };
        for v in cell {
            let mut next: Vec<u32> = colors.iter().map(|&c| 2 * c + 1).collect();
            next[v] -= 1;
            self.run(next);
            if self.leaves >= self.cap {
                return;
            }
        }
    }
}

/// Canonical key of `s` with `centers` distinguished in order. Explores at most
/// `leaf_cap` leaves of the individualisation tree.
pub fn canonical_type(s: &Structure, centers: &[Elem], leaf_cap: usize) -> TypeKey {
    let inc = Incidence::new(s);
    let k = centers.len() as u32;
    let mut colors = vec![k; s.len()];
    // repeated centers share the colour of their first position
    for (i, &c) in centers.iter().enumerate().rev() {
        colors[c as usize] = i as u32;
    }
    let mut search = Search { inc: &inc, centers, best: None, leaves: 0, cap: leaf_cap.max(1) };
    search.run(colors);
    search.best.expect("at least one leaf is visited")
}
