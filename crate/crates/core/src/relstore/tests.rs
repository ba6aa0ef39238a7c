use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::fixtures;
use crate::synth;

fn names(s: &Structure, set: &[Elem]) -> BTreeSet<String> {
    set.iter().map(|&e| s.name(e).to_string()).collect()
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Edges straight from the definition: every pair of distinct entries of every tuple.
fn brute_edges(s: &Structure) -> BTreeSet<(Elem, Elem)> {
    let mut out = BTreeSet::new();
    for rel in s.relations() {
        for t in rel.tuples() {
            for &a in t {
                for &b in t {
                    if a != b {
                        out.insert((a.min(b), a.max(b)));
                    }
                }
            }
        }
    }
    out
}

#[test]
fn single_tuple_gives_one_edge() {
    let sig = Signature::new([Symbol::new("Author", 2)]).unwrap();
    let mut b = Structure::builder(sig);
    b.fact("Author", &["a1", "p1"]).unwrap();
    let s = b.build();
    let g = build_gaifman(&s);
    assert_eq!(g.degree(), 1);
    assert_eq!(g.edge_count(), 1);
    assert!(g.adjacent(0, 1));
}

#[test]
fn unary_relations_have_no_edges() {
    let sig = Signature::new([Symbol::new("Blue", 1)]).unwrap();
    let mut b = Structure::builder(sig);
    b.fact("Blue", &["a"]).unwrap().fact("Blue", &["b"]).unwrap();
    let g = build_gaifman(&b.build());
    assert_eq!(g.degree(), 0);
    assert_eq!(g.edge_count(), 0);
}

#[test]
fn citations_degree_and_p1_neighbours() {
    let s = fixtures::citations();
    let g = s.gaifman();
    assert_eq!(g.degree(), 3);
    let p1 = s.resolve("p1").unwrap();
    assert_eq!(names(&s, g.neighbors(p1)), set(&["a1", "p2", "p3"]));
    let expected: BTreeSet<_> = brute_edges(&s);
    let got: BTreeSet<_> = s
        .universe()
        .flat_map(|v| g.neighbors(v).iter().map(move |&w| (v.min(w), v.max(w))))
        .collect();
    assert_eq!(got, expected);
}

#[test]
fn distances_on_path_and_components() {
    let s = fixtures::path3();
    let g = s.gaifman();
    let (a, b, c) = (s.resolve("a").unwrap(), s.resolve("b").unwrap(), s.resolve("c").unwrap());
    assert_eq!(g.distance(&[a], a).unwrap(), 0);
    assert_eq!(g.distance(&[a], c).unwrap(), 2);
    assert_eq!(g.distance(&[a, c], b).unwrap(), 1);

    let sig = Signature::new([Symbol::new("E", 2)]).unwrap();
    let mut bld = Structure::builder(sig);
    bld.fact("E", &["u", "v"]).unwrap().fact("E", &["w", "x"]).unwrap();
    let two = bld.build();
    assert_eq!(two.gaifman().distance(&[0], 3).unwrap(), UNREACHABLE);
    assert!(two.gaifman().distance(&[0], 17).is_err());
}

#[test]
fn balls() {
    let s = fixtures::path3();
    let g = s.gaifman();
    let a = s.resolve("a").unwrap();
    assert_eq!(names(&s, &g.ball(&[a], 0).unwrap()), set(&["a"]));
    assert_eq!(names(&s, &g.ball(&[a], 1).unwrap()), set(&["a", "b"]));
    assert!(g.ball(&[], 3).unwrap().is_empty());

    let c = fixtures::citations();
    let a1 = c.resolve("a1").unwrap();
    assert_eq!(names(&c, &c.gaifman().ball(&[a1], 1).unwrap()), set(&["a1", "p1", "p2"]));
}

#[test]
fn induced_neighbourhoods() {
    let c = fixtures::citations();
    let a2 = c.resolve("a2").unwrap();
    let region = induced_neighborhood(&c, &[a2], 1).unwrap();
    let n = &region.structure;
    assert_eq!(n.names(), &["a2".to_string(), "p3".to_string()]);
    assert_eq!(n.relation_by_name("Author").unwrap().len(), 1);
    assert!(n.relation_by_name("Author").unwrap().contains(&[0, 1]));
    assert!(n.relation_by_name("Citation").unwrap().is_empty());

    // a connected structure is its own neighbourhood for a large radius
    let whole = induced_neighborhood(&c, &[a2], 10).unwrap();
    assert_eq!(whole.structure, c);

    // radius 0 keeps unary facts only
    let sig = Signature::new([Symbol::new("Blue", 1), Symbol::new("E", 2)]).unwrap();
    let mut b = Structure::builder(sig);
    b.fact("Blue", &["u"]).unwrap().fact("E", &["u", "v"]).unwrap();
    let s = b.build();
    let r0 = induced_neighborhood(&s, &[0], 0).unwrap();
    assert_eq!(r0.structure.relation_by_name("Blue").unwrap().len(), 1);
    assert!(r0.structure.relation_by_name("E").unwrap().is_empty());
}

#[test]
fn oracle_answers_and_counts() {
    let c = fixtures::citations();
    let audit = AccessAudit::new();
    let oracle = LocalOracle::new(&c, &audit);
    let (a1, p1, a2) = (c.resolve("a1").unwrap(), c.resolve("p1").unwrap(), c.resolve("a2").unwrap());
    assert!(oracle.membership_by_name("Author", &[a1, p1]).unwrap());
    assert_eq!(audit.snapshot().membership_queries, 1);
    assert_eq!(names(&c, oracle.neighbors(a2).unwrap()), set(&["p3"]));
    let counts = audit.snapshot();
    assert_eq!(counts.neighbor_queries, 1);
    assert_eq!(counts.global_scans, 0);
    assert!(oracle.neighbors(99).is_err());
    let _ = oracle.scan_universe();
    assert_eq!(audit.snapshot().global_scans, 1);
}

#[test]
fn materialized_region_matches_induced() {
    let mut rng = synth::rng(7);
    for _ in 0..50 {
        let s = synth::desk_structure(&mut rng, 10);
        let audit = AccessAudit::new();
        let oracle = LocalOracle::new(&s, &audit);
        for v in s.universe() {
            for r in 0..3 {
                let local = oracle.materialize(&[v], r).unwrap();
                let direct = induced_neighborhood(&s, &[v], r).unwrap();
                assert_eq!(local.structure, direct.structure);
                assert_eq!(local.to_global, direct.to_global);
            }
        }
        assert_eq!(audit.snapshot().global_scans, 0);
    }
}

#[test]
fn ingest_errors_and_empty_relations() {
    let s = ingest_str("{\"signature\":[{\"name\":\"R\",\"arity\":2}]}\n").unwrap();
    assert_eq!(s.len(), 0);
    assert!(s.relation_by_name("R").unwrap().is_empty());

    let bad = "{\"signature\":[{\"name\":\"R\",\"arity\":2}]}\n{\"rel\":\"R\",\"tuple\":[\"a\"]}\n";
    match ingest_str(bad) {
        Err(RelError::ArityMismatch { symbol, position, .. }) => {
            assert_eq!(symbol, "R");
            assert_eq!(position, Some(2));
        }
        other => panic!("expected arity mismatch, got {other:?}"),
    }
    let unknown = "{\"signature\":[]}\n{\"rel\":\"S\",\"tuple\":[]}\n";
    assert!(matches!(ingest_str(unknown), Err(RelError::UnknownSymbol(_))));
    let garbage = "{\"signature\":[]}\nnot json\n";
    assert!(matches!(ingest_str(garbage), Err(RelError::Format { line: 2, .. })));
    let dup = "{\"signature\":[{\"name\":\"R\",\"arity\":1},{\"name\":\"R\",\"arity\":1}]}\n";
    assert!(ingest_str(dup).is_err());
}

#[test]
fn citations_fixture_loads() {
    let c = fixtures::citations();
    assert_eq!(c.len(), 5);
    assert_eq!(c.relation_by_name("Author").unwrap().len(), 3);
    assert_eq!(c.relation_by_name("Citation").unwrap().len(), 3);
}

#[test]
fn nullary_relations() {
    let sig = Signature::new([Symbol::new("Flag", 0)]).unwrap();
    let mut b = Structure::builder(sig.clone());
    b.fact("Flag", &[]).unwrap();
    let s = b.build();
    assert!(s.relation(0).contains(&[]));
    assert_eq!(s.relation(0).len(), 1);
    let off = Structure::builder(sig).build();
    assert!(!off.relation(0).contains(&[]));
    assert_eq!(ingest_str(&persist_string(&s)).unwrap(), s);
}

#[test]
fn expansion_keeps_old_relations() {
    let c = fixtures::citations();
    let blue = Relation::from_tuples(1, [vec![0u32].into_boxed_slice()]);
    let e = c.expand(vec![(Symbol::new("Blue", 1), blue)]).unwrap();
    assert_eq!(e.len(), c.len());
    for (i, rel) in c.relations().iter().enumerate() {
        assert_eq!(e.relation(i), rel);
    }
    assert!(c.expand(vec![(Symbol::new("Author", 1), Relation::nullary(false))]).is_err());
}

proptest! {
    #[test]
    fn gaifman_edges_match_definition(seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let s = synth::desk_structure(&mut rng, 10);
        let g = build_gaifman(&s);
        let got: BTreeSet<_> = s
            .universe()
            .flat_map(|v| g.neighbors(v).iter().map(move |&w| (v.min(w), v.max(w))))
            .collect();
        prop_assert_eq!(got, brute_edges(&s));
        for v in s.universe() {
            prop_assert!(!g.neighbors(v).contains(&v));
            for &w in g.neighbors(v) {
                prop_assert!(g.neighbors(w).contains(&v));
            }
        }
        let maxlen = s.universe().map(|v| g.neighbors(v).len()).max().unwrap_or(0);
        prop_assert_eq!(g.degree(), maxlen);
    }

    #[test]
    fn balls_are_monotone_and_bounded(seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let s = synth::desk_structure(&mut rng, 10);
        let g = s.gaifman();
        let d = g.degree() as u64;
        for v in s.universe() {
            let mut prev: Vec<Elem> = Vec::new();
            for r in 0..=4u32 {
                let b = g.ball(&[v], r).unwrap();
                prop_assert!(prev.iter().all(|e| b.contains(e)));
                prop_assert!((b.len() as u128) <= crate::locality::nu(d, r as u64));
                prev = b;
            }
        }
    }

    #[test]
    fn inducing_twice_is_inducing_once(seed in any::<u64>(), r in 0u32..3) {
        let mut rng = synth::rng(seed);
        let s = synth::desk_structure(&mut rng, 10);
        let once = induced_neighborhood(&s, &[0], r).unwrap();
        let twice = once.structure.induced(&once.structure.universe().collect::<Vec<_>>()).unwrap();
        prop_assert_eq!(&once.structure, &twice.structure);
    }

    #[test]
    fn audit_counts_only_what_is_asked(seed in any::<u64>(), ops in proptest::collection::vec(0u8..2, 0..20)) {
        let mut rng = synth::rng(seed);
        let s = synth::desk_structure(&mut rng, 8);
        let audit = AccessAudit::new();
        let oracle = LocalOracle::new(&s, &audit);
        let (mut m, mut n) = (0, 0);
        for op in ops {
            let before = audit.snapshot();
            if op == 0 {
                oracle.membership(0, &[0, 0]).unwrap();
                m += 1;
            } else {
                oracle.neighbors(0).unwrap();
                n += 1;
            }
            let after = audit.snapshot();
            prop_assert!(after.membership_queries >= before.membership_queries);
            prop_assert!(after.neighbor_queries >= before.neighbor_queries);
        }
        let c = audit.snapshot();
        prop_assert_eq!(c.membership_queries, m);
        prop_assert_eq!(c.neighbor_queries, n);
        prop_assert_eq!(c.global_scans, 0);
    }

    #[test]
    fn persist_then_ingest_is_identity(seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let s = synth::desk_structure(&mut rng, 10);
        let back = ingest_str(&persist_string(&s)).unwrap();
        prop_assert_eq!(back, s);
    }
}
