use super::*;
use crate::fixtures;
use crate::graph::Graph;
use crate::lang::{parse, var, Caps, HypothesisClassConfig, Registry};
use crate::learner::TrainingSet;
use crate::locality::delta_formula;
use crate::semantics::assignment;
use crate::synth;

#[test]
fn citation_total_at_a1_is_three() {
    let s = fixtures::citations();
    let t = parse(fixtures::CITATIONS_TERM).unwrap();
    let beta = assignment([("x", s.resolve("a1").unwrap())]);
    assert_eq!(naive_eval(&t, &s, &Registry::builtin(), &beta).unwrap().as_int(), Some(3));
}

#[test]
fn counting_over_an_empty_universe_is_zero() {
    let s = crate::relstore::ingest_str("{\"signature\":[]}\n").unwrap();
    let t = parse("#(z).true").unwrap();
    assert_eq!(naive_eval(&t, &s, &Registry::builtin(), &Default::default()).unwrap().as_int(), Some(0));
}

#[test]
fn naive_delta_agrees_with_the_delta_formula() {
    let mut rng = synth::rng(11);
    let reg = Registry::builtin();
    for _ in 0..20 {
        let s = synth::desk_structure(&mut rng, 6);
        let n = s.len().min(3);
        let vars: Vec<_> = (0..n).map(|i| var(&format!("v{i}"))).collect();
        for g in Graph::all(n) {
            let phi = delta_formula(&g, &vars, 3);
            let tuple: Vec<_> = (0..n as u32).collect();
            let beta = vars.iter().cloned().zip(tuple.iter().copied()).collect();
            let expected = naive_eval(&phi, &s, &reg, &beta).unwrap().as_bool().unwrap();
            assert_eq!(naive_delta(&s, &g, &tuple, 1), expected);
        }
    }
}

fn desk_cfg(ell: usize) -> HypothesisClassConfig {
    let mut cfg = HypothesisClassConfig::new(1, ell, 1);
    cfg.ints = vec![2];
    cfg.caps = Caps { max_psi_atoms: 2, ..Caps::default() };
    cfg.symbols = Some(vec!["E".into(), "Blue".into()]);
    cfg
}

#[test]
fn without_parameters_only_terms_are_searched() {
    let s = synth::bounded_degree_graph(&mut synth::rng(5), 8, 2, 1);
    let t = parse("#(z).(E(x1,z) & Blue(z))").unwrap();
    let reg = Registry::builtin();
    let set = TrainingSet::new(
        1,
        s.universe().map(|a| (vec![a], naive_eval(&t, &s, &reg, &assignment([("x1", a)])).unwrap().as_int().unwrap())),
    )
    .unwrap();
    let fit = naive_learn(&set, &desk_cfg(0), &s, &reg).unwrap().expect("target is in the grammar");
    assert!(fit.params.is_empty());
    for (a, label) in set.examples() {
        let mut v = fit.constant;
        for (c, u) in &fit.summands {
            v += c * naive_eval(u, &s, &reg, &assignment([("x1", a[0])])).unwrap().as_int().unwrap();
        }
        assert_eq!(v, *label);
    }
}

#[test]
fn contradiction_free_but_impossible_labels_are_rejected() {
    // one isolated vertex cannot be told apart from another by any pattern
    let s = crate::relstore::ingest_str(
        "{\"signature\":[{\"name\":\"E\",\"arity\":2},{\"name\":\"Blue\",\"arity\":1}]}\n{\"universe\":[\"a\",\"b\"]}\n",
    )
    .unwrap();
    let set = TrainingSet::new(1, [(vec![0], 0), (vec![1], 1)]).unwrap();
    assert_eq!(naive_learn(&set, &desk_cfg(0), &s, &Registry::builtin()).unwrap(), None);
}
