//! Simple undirected graphs on `0..n` (n ≤ 16) stored as pair bitsets.

use std::fmt;

use serde::{Deserialize, Serialize};

pub const MAX_VERTICES: usize = 16;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Graph {
    n: u8,
    bits: u128,
}

fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    b * (b - 1) / 2 + a
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_VERTICES, "at most {MAX_VERTICES} vertices");
        Graph { n: n as u8, bits: 0 }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for j in 0..n {
            for i in 0..j {
                g.add_edge(i, j);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn pair_count(&self) -> usize {
        let n = self.len();
        n * n.saturating_sub(1) / 2
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i != j && i < self.len() && j < self.len(), "edge ({i},{j}) out of range");
        self.bits |= 1u128 << pair_index(i, j);
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.bits & (1u128 << pair_index(i, j)) != 0
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.len() {
            for i in 0..j {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Vertex sets of connected components, each ascending, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut i = 0;
            while i < comp.len() {
                let v = comp[i];
                for w in 0..n {
                    if !seen[w] && self.has_edge(v, w) {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Component label per vertex.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.len()];
        for (c, comp) in self.components().iter().enumerate() {
            for &v in comp {
                labels[v] = c;
            }
        }
        labels
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Subgraph induced on `vertices`, renumbered in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut g = Graph::empty(vertices.len());
        for (a, &i) in vertices.iter().enumerate() {
            for (b, &j) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    g.add_edge(a, b);
                }
            }
        }
        g
    }

    /// Every graph on `n` vertices, in bitset order.
    pub fn all(n: usize) -> impl Iterator<Item = Graph> {
        let pairs = Graph::empty(n).pair_count();
        assert!(pairs < 64, "too many graphs to enumerate on {n} vertices");
        (0..(1u64 << pairs)).map(move |bits| Graph { n: n as u8, bits: bits as u128 })
    }

    pub fn connected(n: usize) -> impl Iterator<Item = Graph> {
        Graph::all(n).filter(Graph::is_connected)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph({}; {:?})", self.n, self.edges())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(Graph::all(3).count(), 8);
        assert_eq!(Graph::connected(3).count(), 4);
        assert_eq!(Graph::connected(4).count(), 38);
        assert_eq!(Graph::connected(1).count(), 1);
        assert_eq!(Graph::all(0).count(), 1);
    }

    #[test]
    fn components_and_induced() {
        let g = Graph::from_edges(3, &[(0, 1)]);
        assert_eq!(g.components(), vec![vec![0, 1], vec![2]]);
        assert!(!g.is_connected());
        assert!(g.induced(&[0, 1]).is_connected());
        assert_eq!(g.induced(&[2, 0]).edges(), vec![]);
        assert_eq!(Graph::empty(3).components().len(), 3);
        assert!(Graph::complete(4).is_connected());
        assert_eq!(Graph::complete(4).edges().len(), 6);
    }
}
