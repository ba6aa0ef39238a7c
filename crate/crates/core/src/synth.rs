//! Seeded generators for synthetic structures.

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashSet;

use crate::relstore::{Elem, Signature, Structure, Symbol};

/// `E/2`, `Blue/1`, `Red/1`, `Flag/0`.
pub fn desk_signature() -> Signature {
    Signature::new([
        Symbol::new("E", 2),
        Symbol::new("Blue", 1),
        Symbol::new("Red", 1),
        Symbol::new("Flag", 0),
    ])
    .unwrap()
}

/// Uniformly random facts: each relation of positive arity receives up to
/// `facts` random tuples; 0-ary relations are true with probability 1/2.
pub fn random_structure<R: Rng>(rng: &mut R, sig: &Signature, n: usize, facts: usize) -> Structure {
    let mut b = Structure::builder(sig.clone());
    for i in 0..n {
        b.element(&format!("e{i}"));
    }
    for (id, sym) in sig.symbols().iter().enumerate() {
        if sym.arity == 0 {
            if rng.gen_bool(0.5) {
                b.fact_handles(id, &[]).unwrap();
            }
            continue;
        }
        if n == 0 {
            continue;
        }
        let count = rng.gen_range(0..=facts);
        for _ in 0..count {
            let t: Vec<Elem> = (0..sym.arity).map(|_| rng.gen_range(0..n as Elem)).collect();
            b.fact_handles(id, &t).unwrap();
        }
    }
    b.build()
}

/// A small random structure over [`desk_signature`] with at most `max_n`
/// elements (at least one).
pub fn desk_structure<R: Rng>(rng: &mut R, max_n: usize) -> Structure {
    let n = rng.gen_range(1..=max_n.max(1));
    let facts = rng.gen_range(0..=n + 2);
    random_structure(rng, &desk_signature(), n, facts)
}

/// Simple graph with maximum degree `d` on `n` vertices: a random stub
/// pairing (dropping loops and multi-edges) followed by `swaps * edges`
/// degree-preserving double-edge swaps. Vertices get random `Blue` (p=1/2)
/// and `Red` (p=1/3) colours. Edges are stored once as `E(u, v)` with `u < v`.
pub fn bounded_degree_graph<R: Rng>(rng: &mut R, n: usize, d: usize, swaps: usize) -> Structure {
    let mut stubs: Vec<Elem> = (0..n as Elem).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    stubs.shuffle(rng);
    let mut edges: Vec<(Elem, Elem)> = Vec::new();
    let mut seen: FxHashSet<(Elem, Elem)> = FxHashSet::default();
    for pair in stubs.chunks_exact(2) {
        let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
        if a != b && seen.insert((a, b)) {
            edges.push((a, b));
        }
    }
    let m = edges.len();
    if m >= 2 {
        for _ in 0..swaps * m {
            let i = rng.gen_range(0..m);
            let j = rng.gen_range(0..m);
            if i == j {
                continue;
            }
            let (a, b) = edges[i];
            let (c, e) = edges[j];
            let (n1, n2) = if rng.gen_bool(0.5) {
                ((a.min(c), a.max(c)), (b.min(e), b.max(e)))
            } else {
                ((a.min(e), a.max(e)), (b.min(c), b.max(c)))
            };
            if n1.0 == n1.1 || n2.0 == n2.1 || n1 == n2 || seen.contains(&n1) || seen.contains(&n2) {
                continue;
            }
            seen.remove(&edges[i]);
            seen.remove(&edges[j]);
            seen.insert(n1);
            seen.insert(n2);
            edges[i] = n1;
            edges[j] = n2;
        }
    }
    edges.sort_unstable();
    let mut b = Structure::builder(desk_signature());
    for i in 0..n {
        b.element(&format!("v{i}"));
    }
    let e = b.signature().lookup("E").unwrap();
    let blue = b.signature().lookup("Blue").unwrap();
    let red = b.signature().lookup("Red").unwrap();
    for (u, v) in edges {
        b.fact_handles(e, &[u, v]).unwrap();
    }
    for v in 0..n as Elem {
        if rng.gen_bool(0.5) {
            b.fact_handles(blue, &[v]).unwrap();
        }
        if rng.gen_bool(1.0 / 3.0) {
            b.fact_handles(red, &[v]).unwrap();
        }
    }
    b.build()
}

/// Deterministic RNG from a seed.
pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
