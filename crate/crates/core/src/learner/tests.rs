use super::*;
use crate::fixtures;
use crate::lang::{parse, var, Caps};
use crate::oracle::naive_eval;
use crate::precompute::precompute;
use crate::semantics::assignment;

fn citations_cfg() -> HypothesisClassConfig {
    let mut cfg = HypothesisClassConfig::new(1, 0, 2);
    cfg.caps = Caps { max_psi_atoms: 2, ..Caps::default() };
    cfg
}

fn cakes_cfg() -> HypothesisClassConfig {
    let mut cfg = HypothesisClassConfig::new(1, 1, 1);
    cfg.ints = vec![2];
    cfg.caps = Caps { max_psi_atoms: 2, ..Caps::default() };
    cfg
}

fn labels(s: &Structure, term: &str, xs: &[&str], params: &[(&str, &str)]) -> TrainingSet {
    let t = parse(term).unwrap();
    let reg = Registry::builtin();
    let examples = xs.iter().map(|name| {
        let mut beta = assignment([("x", s.resolve(name).unwrap())]);
        for (y, w) in params {
            beta.insert(var(y), s.resolve(w).unwrap());
        }
        (vec![s.resolve(name).unwrap()], naive_eval(&t, s, &reg, &beta).unwrap().as_int().unwrap())
    });
    TrainingSet::new(1, examples).unwrap()
}

fn learn_ok(set: &TrainingSet, cfg: &HypothesisClassConfig, index: &IndexArtifact) -> (Hypothesis, LearnReport) {
    let audit = AccessAudit::new();
    let out = learn(set, cfg, index, &Registry::builtin(), &audit).unwrap();
    match out.outcome {
        Outcome::Hypothesis(h) => (h, out.report),
        Outcome::Reject => panic!("rejected"),
    }
}

/// Global value of the hypothesis term, by the brute-force evaluator.
fn global_value(h: &Hypothesis, s: &Structure, a: &[Elem]) -> i128 {
    let mut beta: crate::semantics::Assignment = h.xs.iter().cloned().zip(a.iter().copied()).collect();
    beta.extend(h.ys.iter().cloned().zip(h.params.iter().copied()));
    naive_eval(&h.term(), s, &Registry::builtin(), &beta).unwrap().as_int().unwrap()
}

#[test]
fn citation_counts_are_learnt() {
    let s = fixtures::citations();
    let cfg = citations_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let set = labels(&s, fixtures::CITATIONS_TERM, &["a1", "a2"], &[]);
    assert_eq!(set.examples().iter().map(|e| e.1).collect::<Vec<_>>(), vec![3, 0]);
    let (h, report) = learn_ok(&set, &cfg, &index);
    assert_eq!(report.audit.global_scans, 0);
    let audit = AccessAudit::new();
    for (a, label) in set.examples() {
        assert_eq!(evaluate_hypothesis(&h, a, &index, &Registry::builtin(), &audit).unwrap(), *label);
        assert_eq!(global_value(&h, &s, a), *label);
    }
    assert_eq!(audit.snapshot().global_scans, 0);
}

#[test]
fn the_target_itself_is_a_hypothesis_when_labels_pin_it_down() {
    let s = fixtures::citations();
    let cfg = citations_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let everyone = ["a1", "a2", "p1", "p2", "p3"];
    let set = labels(&s, fixtures::CITATIONS_TERM, &everyone, &[]);
    let (h, _) = learn_ok(&set, &cfg, &index);
    for (a, label) in set.examples() {
        assert_eq!(global_value(&h, &s, a), *label);
    }
}

#[test]
fn empty_training_set_returns_the_first_candidate() {
    let s = fixtures::citations();
    let cfg = citations_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let (h, _) = learn_ok(&TrainingSet::empty(1), &cfg, &index);
    assert_eq!(h.term(), Expr::int(0));
    assert!(h.summands.is_empty());
}

#[test]
fn contradictory_labels_are_refused_up_front() {
    let err = TrainingSet::new(1, [(vec![0], 0), (vec![0], 1)]).unwrap_err();
    assert!(matches!(err, LearnError::Contradictory { first: 0, second: 1, .. }));
    let dup = TrainingSet::new(1, [(vec![0], 4), (vec![0], 4), (vec![1], 2)]).unwrap();
    assert_eq!(dup.len(), 2);
    assert!(matches!(TrainingSet::new(2, [(vec![0], 0)]), Err(LearnError::Length { .. })));
}

#[test]
fn training_lines_are_read_by_name() {
    let s = fixtures::citations();
    let set = TrainingSet::from_jsonl("{\"tuple\":[\"a1\"],\"label\":3}\n\n{\"tuple\":[\"a2\"],\"label\":0}\n", &s, 1).unwrap();
    assert_eq!(set.examples(), &[(vec![0], 3), (vec![1], 0)]);
    assert!(matches!(TrainingSet::from_jsonl("{\"tuple\":3}", &s, 1), Err(LearnError::Format { line: 1, .. })));
    assert!(TrainingSet::from_jsonl("{\"tuple\":[\"nobody\"],\"label\":0}", &s, 1).is_err());
}

#[test]
fn constant_hypotheses_evaluate_to_their_constant() {
    let s = fixtures::citations();
    let cfg = citations_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let set = TrainingSet::new(1, s.universe().map(|e| (vec![e], 5))).unwrap();
    let (h, _) = learn_ok(&set, &cfg, &index);
    assert_eq!(h.term(), Expr::int(5));
    let audit = AccessAudit::new();
    for e in s.universe() {
        assert_eq!(evaluate_hypothesis(&h, &[e], &index, &Registry::builtin(), &audit).unwrap(), 5);
    }
}

#[test]
fn ground_summands_match_global_evaluation() {
    let s = fixtures::citations();
    let cfg = citations_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let space = candidate_terms(&cfg, &index).unwrap();
    let ground = space.ground_terms().last().unwrap().expr.clone();
    let local = space.library.iter().find(|t| !t.is_ground()).unwrap().expr.clone();
    let h = Hypothesis {
        constant: -1,
        summands: vec![(2, ground.clone()), (1, local)],
        xs: space.xs.clone(),
        ys: vec![],
        params: vec![],
        index_digest: index.digest().to_string(),
    };
    let audit = AccessAudit::new();
    for a in s.universe() {
        let fast = evaluate_hypothesis(&h, &[a], &index, &Registry::builtin(), &audit).unwrap();
        assert_eq!(fast, global_value(&h, &s, &[a]));
    }
    let table = index.table[&canonical_key(&ground)];
    let global = naive_eval(&ground, &s, &Registry::builtin(), &Default::default()).unwrap();
    assert_eq!(global.as_int(), Some(table));
}

#[test]
fn stale_index_is_detected() {
    let s = fixtures::citations();
    let cfg = citations_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let h = Hypothesis {
        constant: 1,
        summands: vec![],
        xs: vec![var("x1")],
        ys: vec![],
        params: vec![],
        index_digest: "0".repeat(64),
    };
    let err = evaluate_hypothesis(&h, &[0], &index, &Registry::builtin(), &AccessAudit::new()).unwrap_err();
    assert!(matches!(err, LearnError::StaleIndex(_)));
}

#[test]
fn cake_scores_are_discoverable() {
    let s = fixtures::cakes();
    let cfg = cakes_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let people = ["alice", "bob", "carol", "dave"];
    let set = labels(&s, fixtures::CAKES_TERM, &people, &[("y", "chocolate")]);
    assert_eq!(set.examples().iter().map(|e| e.1).collect::<Vec<_>>(), vec![3, 5, 1, 0]);
    let (h, report) = learn_ok(&set, &cfg, &index);
    assert_eq!(report.audit.global_scans, 0);
    for (a, label) in set.examples() {
        assert_eq!(global_value(&h, &s, a), *label);
    }
    // with every element labelled, the hypothesis is the target as a function
    let everything: Vec<&str> = s.names().iter().map(|n| n.as_str()).collect();
    let set = labels(&s, fixtures::CAKES_TERM, &everything, &[("y", "chocolate")]);
    let (h, _) = learn_ok(&set, &cfg, &index);
    assert!(h.summands.len() <= 2);
    for (a, label) in set.examples() {
        assert_eq!(global_value(&h, &s, a), *label);
    }
}

#[test]
fn stored_hypotheses_round_trip() {
    let s = fixtures::cakes();
    let cfg = cakes_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let set = labels(&s, fixtures::CAKES_TERM, &["alice", "bob", "carol", "dave"], &[("y", "chocolate")]);
    let (h, _) = learn_ok(&set, &cfg, &index);
    let text = h.to_json(&index.structure);
    let back = Hypothesis::from_json(&text, &index, &Registry::builtin()).unwrap();
    assert_eq!(back, h);
    let mut other = cfg.clone();
    other.ints = vec![3];
    let other_index = precompute(&s, &other, &Registry::builtin()).unwrap();
    assert!(matches!(
        Hypothesis::from_json(&text, &other_index, &Registry::builtin()),
        Err(LearnError::StaleIndex(_))
    ));
}

#[test]
fn learning_is_deterministic() {
    let s = fixtures::cakes();
    let cfg = cakes_cfg();
    let index = precompute(&s, &cfg, &Registry::builtin()).unwrap();
    let set = labels(&s, fixtures::CAKES_TERM, &["alice", "bob", "carol"], &[("y", "strawberry")]);
    let (a, _) = learn_ok(&set, &cfg, &index);
    let (b, _) = learn_ok(&set, &cfg, &index);
    assert_eq!(a, b);
}

#[test]
fn index_for_another_configuration_is_refused() {
    let s = fixtures::citations();
    let index = precompute(&s, &citations_cfg(), &Registry::builtin()).unwrap();
    let err = learn(&TrainingSet::empty(1), &cakes_cfg(), &index, &Registry::builtin(), &AccessAudit::new());
    assert!(matches!(err, Err(LearnError::ConfigMismatch { .. })));
}

#[test]
fn parameter_candidates_cover_the_training_neighbourhood() {
    let s = fixtures::citations();
    let audit = AccessAudit::new();
    let oracle = LocalOracle::new(&s, &audit);
    let a1 = s.resolve("a1").unwrap();
    let set = TrainingSet::new(1, [(vec![a1], 0)]).unwrap();

    let (_, none) = parameter_candidates(&set, &HypothesisClassConfig::new(1, 0, 2), &oracle).unwrap();
    assert_eq!(none, vec![Vec::<Elem>::new()]);

    let (n, tuples) = parameter_candidates(&set, &HypothesisClassConfig::new(1, 1, 1), &oracle).unwrap();
    for name in ["a1", "p1", "p2", "p3"] {
        assert!(n.contains(&s.resolve(name).unwrap()));
    }
    assert_eq!(tuples.len(), n.len());
    assert!(tuples.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(audit.snapshot().global_scans, 0);

    let lone = crate::relstore::ingest_str(
        "{\"signature\":[{\"name\":\"E\",\"arity\":2}]}\n{\"universe\":[\"v\",\"u\",\"w\"]}\n{\"rel\":\"E\",\"tuple\":[\"u\",\"w\"]}\n",
    )
    .unwrap();
    let oracle = LocalOracle::new(&lone, &audit);
    let v = lone.resolve("v").unwrap();
    let set = TrainingSet::new(1, [(vec![v], 0)]).unwrap();
    let (_, tuples) = parameter_candidates(&set, &HypothesisClassConfig::new(1, 1, 1), &oracle).unwrap();
    assert_eq!(tuples, vec![vec![v]]);
}

#[test]
fn first_combination_prefers_fewer_then_earlier_summands() {
    let g = vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![0, 0]];
    let c = [1, -1, 2];
    assert_eq!(first_combination(&g, &c, &[0, 0], 2), Some(vec![]));
    assert_eq!(first_combination(&g, &c, &[0, 2], 2), Some(vec![(0, 2)]));
    assert_eq!(first_combination(&g, &c, &[0, -3], 2), Some(vec![(2, 1)]));
    assert_eq!(first_combination(&g, &c, &[0, 5], 2), Some(vec![(0, 0), (1, 2)]));
    assert_eq!(first_combination(&g, &c, &[0, 5], 1), None);
    assert_eq!(first_combination(&g, &c, &[1, 0], 2), None);
}

#[test]
fn library_shapes() {
    let s = fixtures::cakes();
    let cfg = cakes_cfg();
    let space = CandidateSpace::build(&cfg, s.signature(), s.gaifman().degree()).unwrap();
    assert_eq!(space.coefficients, vec![1, -1, 2]);
    for t in &space.library {
        assert!(t.pattern.graph.is_connected());
        assert!(t.pattern.bound.len() <= cfg.q);
        assert_eq!(PatternTerm::recognise(&t.expr, space.rho).as_ref(), Some(&t.pattern), "{}", t.expr);
    }
    let keys: std::collections::BTreeSet<&String> = space.library.iter().map(|t| &t.key).collect();
    assert_eq!(keys.len(), space.library.len());
    let mut tight = cfg.clone();
    tight.caps.max_library = 3;
    assert!(matches!(
        CandidateSpace::build(&tight, s.signature(), 2),
        Err(LearnError::CapOverflow { cap: 3 })
    ));
    tight.symbols = Some(vec!["Nope".into()]);
    assert!(matches!(CandidateSpace::build(&tight, s.signature(), 2), Err(LearnError::UnknownSymbol(_))));
}
