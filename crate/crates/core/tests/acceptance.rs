//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rustc_hash::FxHashSet;

use focl::decompose::{decompose_term, tuple_eq_in_set, DecomposeInput};
use focl::eval::Evaluator;
use focl::fixtures;
use focl::gen::{local_count_term, ExprGen};
use focl::graph::Graph;
use focl::lang::{parse, var, Caps, Expr, HypothesisClassConfig, Kind, Registry, Var};
use focl::learner::{evaluate_hypothesis, learn, parameter_candidates, CandidateSpace, Hypothesis, Outcome, TrainingSet};
use focl::locality::{delta_formula, locality_radius, nu};
use focl::oracle::{naive_delta, naive_eval, naive_learn};
use focl::pattern::{outer_counts, PatternTerm};
use focl::precompute::precompute;
use focl::relstore::{AccessAudit, Elem, LocalOracle, Structure};
use focl::semantics::{assignment, Assignment};
use focl::synth;

/// Largest accepted log-log slope of candidate-space size against degree.
const MAX_SLOPE: f64 = 3.0;
const SEED: u64 = 20_260_101;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

/// Global scans seen by learn and hypothesis evaluation calls across the whole run.
#[derive(Default)]
struct ScanLedger {
    calls: u64,
    scans: u64,
}

impl ScanLedger {
    fn record(&mut self, audit: &AccessAudit) {
        self.calls += 1;
        self.scans += audit.snapshot().global_scans;
    }
}

fn reg() -> Registry {
    Registry::builtin()
}

fn semantics_equivalence() -> Verdict {
    let start = Instant::now();
    let r = reg();
    let mut rng = synth::rng(SEED);
    let (mut checked, mut mismatches) = (0, 0);
    while checked < 10_000 {
        let s = synth::desk_structure(&mut rng, 8);
        let g = ExprGen::new(s.signature(), &r);
        let ev = Evaluator::new(&s, &r);
        for _ in 0..50 {
            let e = g.expr(&mut rng);
            let beta: Assignment = g.vars.iter().map(|v| (v.clone(), rng.gen_range(0..s.len()) as Elem)).collect();
            let fast = ev.eval(&e, &beta);
            let slow = naive_eval(&e, &s, &r, &beta);
            let same = match (&fast, &slow) {
                (Ok(a), Ok(b)) => a == b,
                (Err(_), Err(_)) => true,
                _ => false,
            };
            if !same {
                mismatches += 1;
                if mismatches <= 3 {
                    eprintln!("  mismatch on {e}: {fast:?} vs {slow:?}");
                }
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!("{checked} triples, {mismatches} mismatches, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn delta_correctness() -> Verdict {
    let r = reg();
    let mut rng = synth::rng(SEED + 1);
    let (mut checked, mut mismatches) = (0u64, 0u64);
    for _ in 0..500 {
        let s = synth::desk_structure(&mut rng, 10);
        let ev = Evaluator::new(&s, &r);
        for radius in [0u32, 1] {
            for n in 1..=4usize {
                let tuple: Vec<Elem> = (0..n).map(|_| rng.gen_range(0..s.len()) as Elem).collect();
                let vars: Vec<Var> = (0..n).map(|i| var(&format!("v{i}"))).collect();
                let beta: Assignment = vars.iter().cloned().zip(tuple.iter().copied()).collect();
                for g in Graph::all(n) {
                    let phi = delta_formula(&g, &vars, 2 * radius + 1);
                    let formula = ev.eval_formula(&phi, &beta).expect("delta evaluates");
                    if formula != naive_delta(&s, &g, &tuple, radius) {
                        mismatches += 1;
                    }
                    checked += 1;
                }
            }
        }
    }
    verdict(mismatches == 0, format!("{checked} (structure, tuple, graph, r) checks, {mismatches} mismatches"))
}

fn ball_bound() -> Verdict {
    let mut rng = synth::rng(SEED + 2);
    let mut violations = 0;
    for i in 0..1000 {
        let s = if i % 2 == 0 {
            synth::desk_structure(&mut rng, 12)
        } else {
            let n = rng.gen_range(5..200);
            let d = rng.gen_range(1..6);
            synth::bounded_degree_graph(&mut rng, n, d, 1)
        };
        let v = rng.gen_range(0..s.len()) as Elem;
        let r = rng.gen_range(0..=4u32);
        let ball = s.gaifman().ball(&[v], r).expect("element exists");
        if ball.len() as u128 > nu(s.gaifman().degree() as u64, r as u64) {
            violations += 1;
        }
    }
    let exact = (0..=30u64).all(|r| nu(0, r) == 1 && nu(2, r) <= 2 * r as u128 + 1);
    verdict(violations == 0 && exact, format!("1000 samples, {violations} violations, unit values exact: {exact}"))
}

fn body_radius(t: &Expr, s: &Structure) -> u32 {
    outer_counts(t)
        .iter()
        .map(|c| match c.kind() {
            Kind::Count(_, body) => locality_radius(body, s.signature()).expect("generated bodies are local"),
            _ => unreachable!("outer counts are counting terms"),
        })
        .max()
        .unwrap_or(0)
}

fn decomposition_identity() -> Verdict {
    let r = reg();
    let mut rng = synth::rng(SEED + 3);
    let sig = synth::desk_signature();
    let (mut checked, mut mismatches, mut sums, mut errors) = (0u64, 0u64, 0u64, 0u64);
    for _ in 0..100 {
        let t = local_count_term(&mut rng, &sig, &[var("x"), var("y")], 2, 2);
        let (n, facts) = (rng.gen_range(1..=8), rng.gen_range(0..=10));
        let s = synth::random_structure(&mut rng, &sig, n, facts);
        let radius = body_radius(&t, &s);
        let training: Vec<Vec<Elem>> = (0..rng.gen_range(1..=3)).map(|_| vec![rng.gen_range(0..s.len()) as Elem]).collect();
        let ev = Evaluator::new(&s, &r);
        for w in s.universe() {
            let input = DecomposeInput {
                structure: &s,
                registry: &r,
                xs: vec![var("x")],
                ys: vec![var("y")],
                training: training.clone(),
                params: vec![w],
                radius,
            };
            let out = match decompose_term(&t, &input) {
                Ok(out) => out,
                Err(e) => {
                    errors += 1;
                    eprintln!("  decomposition failed on {t}: {e}");
                    continue;
                }
            };
            let near: FxHashSet<Elem> = out.neighbourhood.iter().copied().collect();
            for v in &training {
                let truth = naive_eval(&t, &s, &r, &assignment([("x", v[0]), ("y", w)])).unwrap();
                for w2 in s.universe() {
                    if !tuple_eq_in_set(&[w], &[w2], &near).unwrap() {
                        continue;
                    }
                    let got = naive_eval(&out.term, &s, &r, &assignment([("x", v[0]), ("y", w2)])).unwrap();
                    checked += 1;
                    if got != truth {
                        mismatches += 1;
                    }
                }
            }
            for dc in &out.counts {
                for a in s.universe() {
                    for b in s.universe() {
                        let beta = assignment([("x", a), ("y", b)]);
                        let whole = ev.eval_term(&dc.count, &beta).unwrap();
                        let parts: i128 = dc.pieces.iter().map(|p| ev.eval_term(&p.source, &beta).unwrap()).sum();
                        sums += 1;
                        if whole != parts {
                            mismatches += 1;
                        }
                    }
                }
            }
            for c in outer_counts(&out.term) {
                let shaped = PatternTerm::recognise(&c, 2 * radius + 1).is_some_and(|p| p.graph.is_connected());
                if !shaped {
                    mismatches += 1;
                }
            }
        }
    }
    verdict(
        mismatches == 0 && errors == 0,
        format!("100 terms, {checked} value checks, {sums} sum checks, {mismatches} mismatches, {errors} errors"),
    )
}

fn planted_cfg(ell: usize) -> HypothesisClassConfig {
    let mut cfg = HypothesisClassConfig::new(1, ell, 1);
    cfg.ints = vec![-1, 1, 2];
    cfg.caps = Caps { max_summands: 2, max_psi_atoms: 2, ..Caps::default() };
    cfg.symbols = Some(vec!["E".into(), "Blue".into()]);
    cfg
}

fn hypothesis_value(h: &Hypothesis, s: &Structure, a: &[Elem]) -> i128 {
    let mut beta: Assignment = h.xs.iter().cloned().zip(a.iter().copied()).collect();
    beta.extend(h.ys.iter().cloned().zip(h.params.iter().copied()));
    naive_eval(&h.term(), s, &reg(), &beta).unwrap().as_int().unwrap()
}

struct Campaign {
    runs: usize,
    hypotheses: usize,
    unsound: usize,
    rejects: usize,
    disagreements: usize,
    witness: Option<String>,
}

fn planted_campaign(scans: &mut ScanLedger) -> Campaign {
    let r = reg();
    let cfg = planted_cfg(1);
    let mut rng = synth::rng(SEED + 4);
    let mut c = Campaign { runs: 0, hypotheses: 0, unsound: 0, rejects: 0, disagreements: 0, witness: None };
    while c.runs < 200 {
        let s = synth::desk_structure(&mut rng, 10);
        let space = CandidateSpace::build(&cfg, s.signature(), s.gaifman().degree()).unwrap();
        let terms = rng.gen_range(1..=2);
        let mut picks: Vec<usize> = (0..space.library.len()).collect::<Vec<_>>().choose_multiple(&mut rng, terms).copied().collect();
        picks.sort_unstable();
        let mut target = Expr::int(rng.gen_range(-1..=2));
        for j in picks {
            let coefficient = *space.coefficients.choose(&mut rng).unwrap();
            target = Expr::add(target, Expr::mul(Expr::int(coefficient), space.library[j].expr.clone()));
        }
        let w = rng.gen_range(0..s.len()) as Elem;
        let size = rng.gen_range(1..=s.len());
        let mut xs: Vec<Elem> = s.universe().collect();
        xs.shuffle(&mut rng);
        let examples = xs[..size].iter().map(|&a| {
            let beta = assignment([("x1", a), ("y1", w)]);
            (vec![a], naive_eval(&target, &s, &r, &beta).unwrap().as_int().unwrap())
        });
        let set = TrainingSet::new(1, examples).unwrap();
        let index = precompute(&s, &cfg, &r).unwrap();
        let audit = AccessAudit::new();
        let result = learn(&set, &cfg, &index, &r, &audit).unwrap();
        scans.record(&audit);
        let naive = naive_learn(&set, &cfg, &s, &r).unwrap();
        c.runs += 1;
        match result.outcome {
            Outcome::Hypothesis(h) => {
                c.hypotheses += 1;
                let eval_audit = AccessAudit::new();
                for (a, label) in set.examples() {
                    let fast = evaluate_hypothesis(&h, a, &index, &r, &eval_audit).unwrap();
                    if hypothesis_value(&h, &s, a) != *label || fast != *label {
                        c.unsound += 1;
                    }
                }
                scans.record(&eval_audit);
                if naive.is_none() {
                    c.disagreements += 1;
                }
            }
            Outcome::Reject => {
                c.rejects += 1;
                if naive.is_some() {
                    c.disagreements += 1;
                }
            }
        }
    }
    // targets whose bodies have more literals than the library allows; on the structures
    // where the naive learner gives up, the learner must give up too
    let target = parse("#(z1).(E(x1,z1) & Blue(z1) & !Blue(x1)) + 2 * #(z1).(E(z1,x1) & !Blue(z1) & Blue(x1))").unwrap();
    let (mut tries, mut found, mut agreed) = (0, 0, 0);
    while tries < 60 && found < 3 {
        tries += 1;
        let s = synth::bounded_degree_graph(&mut rng, 10, 3, 2);
        let w = rng.gen_range(0..s.len()) as Elem;
        let examples = s.universe().map(|a| {
            let beta = assignment([("x1", a), ("y1", w)]);
            (vec![a], naive_eval(&target, &s, &r, &beta).unwrap().as_int().unwrap())
        });
        let set = TrainingSet::new(1, examples).unwrap();
        if naive_learn(&set, &cfg, &s, &r).unwrap().is_some() {
            continue;
        }
        found += 1;
        let index = precompute(&s, &cfg, &r).unwrap();
        let audit = AccessAudit::new();
        let result = learn(&set, &cfg, &index, &r, &audit).unwrap();
        scans.record(&audit);
        if result.outcome == Outcome::Reject {
            agreed += 1;
        } else {
            c.disagreements += 1;
        }
    }
    if found > 0 {
        c.witness = Some(format!("{found} out-of-library witnesses in {tries} tries, learner also rejects {agreed}"));
    }
    c
}

fn local_access(scans: &ScanLedger) -> Verdict {
    verdict(scans.scans == 0, format!("{} learn/evaluate calls, {} global scans", scans.calls, scans.scans))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn sublinearity(scans: &mut ScanLedger) -> Verdict {
    let start = Instant::now();
    let r = reg();
    let mut cfg = planted_cfg(1);
    cfg.q = 2;
    let target = parse("#(z1).(E(x1,z1) & Blue(z1)) + 2 * #(z1).(E(z1,x1) & !Blue(z1))").unwrap();
    let mut calls = Vec::new();
    let mut times = Vec::new();
    for (i, n) in [1000usize, 2000, 4000, 8000].into_iter().enumerate() {
        let mut rng = synth::rng(SEED + 10 + i as u64);
        let s = synth::bounded_degree_graph(&mut rng, n, 4, 2);
        let runs: Vec<f64> = (0..3)
            .map(|_| {
                let t = Instant::now();
                precompute(&s, &cfg, &r).unwrap();
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.push(median(runs));
        let index = precompute(&s, &cfg, &r).unwrap();
        let ev = Evaluator::new(&s, &r);
        let xs: Vec<Elem> = (0..8).map(|_| rng.gen_range(0..n) as Elem).collect();
        let set = TrainingSet::new(
            1,
            xs.iter().map(|&a| (vec![a], ev.eval_term(&target, &assignment([("x1", a)])).unwrap())),
        )
        .unwrap();
        let audit = AccessAudit::new();
        let result = learn(&set, &cfg, &index, &r, &audit).unwrap();
        scans.record(&audit);
        calls.push(result.report.audit.oracle_calls());
        if result.outcome == Outcome::Reject {
            return verdict(false, format!("learner rejected an in-grammar target at n={n}"));
        }
    }
    let (lo, hi) = (*calls.iter().min().unwrap() as f64, *calls.iter().max().unwrap() as f64);
    let growth: Vec<f64> = times.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = hi / lo < 1.5 && growth.iter().all(|&g| g <= 2.5) && start.elapsed() < Duration::from_secs(600);
    verdict(
        pass,
        format!(
            "learn oracle calls {calls:?} (max/min {:.3}), precompute seconds {:?}, per-doubling growth {:?}, {:.1}s total",
            hi / lo,
            times.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>(),
            growth.iter().map(|g| format!("{g:.2}")).collect::<Vec<_>>(),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn polynomial_space() -> Verdict {
    let cfg = planted_cfg(1);
    let degrees = [2usize, 4, 8, 16];
    let mut sizes = Vec::new();
    let mut pairs = Vec::new();
    for (i, &d) in degrees.iter().enumerate() {
        let mut rng = synth::rng(SEED + 20 + i as u64);
        let s = synth::bounded_degree_graph(&mut rng, 20_000, d, 1);
        let degree = s.gaifman().degree();
        let space = CandidateSpace::build(&cfg, s.signature(), degree).unwrap();
        sizes.push(space.term_count() as f64);
        let audit = AccessAudit::new();
        let oracle = LocalOracle::new(&s, &audit);
        let set = TrainingSet::new(1, (0..8).map(|_| (vec![rng.gen_range(0..s.len()) as Elem], 0))).unwrap();
        let (_, params) = parameter_candidates(&set, &cfg, &oracle).unwrap();
        pairs.push(space.skeleton_count() as f64 * params.len() as f64);
    }
    let ds: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    let (a, b) = (slope(&ds, &sizes), slope(&ds, &pairs));
    verdict(
        a < MAX_SLOPE && b < MAX_SLOPE,
        format!(
            "|T*| {:?} slope {a:.2}; searched pairs {:?} slope {b:.2}; limit {MAX_SLOPE}",
            sizes.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>(),
            pairs.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn example_fixtures(scans: &mut ScanLedger) -> Verdict {
    let r = reg();
    let s = fixtures::citations();
    let t = parse(fixtures::CITATIONS_TERM).unwrap();
    let golden = [("a1", 3), ("a2", 0), ("p1", 0), ("p2", 0), ("p3", 0)];
    let ev = Evaluator::new(&s, &r);
    let citations_ok = golden.iter().all(|&(name, want)| {
        let beta = assignment([("x", s.resolve(name).unwrap())]);
        naive_eval(&t, &s, &r, &beta).unwrap().as_int() == Some(want) && ev.eval_term(&t, &beta).unwrap() == want
    });

    let s = fixtures::cakes();
    let target = parse(fixtures::CAKES_TERM).unwrap();
    let mut cfg = HypothesisClassConfig::new(1, 1, 1);
    cfg.ints = vec![2];
    cfg.caps = Caps { max_psi_atoms: 2, ..Caps::default() };
    let choc = s.resolve("chocolate").unwrap();
    let set = TrainingSet::new(
        1,
        s.universe().map(|a| (vec![a], naive_eval(&target, &s, &r, &assignment([("x", a), ("y", choc)])).unwrap().as_int().unwrap())),
    )
    .unwrap();
    let index = precompute(&s, &cfg, &r).unwrap();
    let audit = AccessAudit::new();
    let result = learn(&set, &cfg, &index, &r, &audit).unwrap();
    scans.record(&audit);
    let (cakes_ok, found) = match &result.outcome {
        Outcome::Hypothesis(h) => {
            let eval_audit = AccessAudit::new();
            let ok = set.examples().iter().all(|(a, label)| {
                hypothesis_value(h, &s, a) == *label && evaluate_hypothesis(h, a, &index, &r, &eval_audit).unwrap() == *label
            });
            scans.record(&eval_audit);
            (ok && h.summands.len() <= 2, h.term().to_string())
        }
        Outcome::Reject => (false, "reject".into()),
    };
    verdict(
        citations_ok && cakes_ok,
        format!("citation goldens match: {citations_ok}; cakes target recovered on all 13 elements: {cakes_ok} ({found})"),
    )
}

fn main() {
    let mut scans = ScanLedger::default();
    let mut failed = 0;
    let mut report = |n: usize, name: &str, v: Verdict| {
        println!("{} [{n}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    };
    report(1, "semantics equivalence", semantics_equivalence());
    report(2, "delta formula correctness", delta_correctness());
    report(3, "ball size bound", ball_bound());
    report(4, "decomposition identity", decomposition_identity());
    let c = planted_campaign(&mut scans);
    report(
        5,
        "learner soundness",
        verdict(c.unsound == 0 && c.hypotheses > 0, format!("{} hypotheses over {} planted runs, {} inconsistent", c.hypotheses, c.runs, c.unsound)),
    );
    report(
        6,
        "scoped completeness",
        verdict(
            c.rejects == 0 && c.disagreements == 0 && c.witness.is_some(),
            format!(
                "{} rejects over {} planted runs, {} verdict disagreements with the naive learner; {}",
                c.rejects,
                c.runs,
                c.disagreements,
                c.witness.as_deref().unwrap_or("no out-of-library witness found")
            ),
        ),
    );
    let v8 = sublinearity(&mut scans);
    let v9 = polynomial_space();
    let v10 = example_fixtures(&mut scans);
    report(7, "local access discipline", local_access(&scans));
    report(8, "sublinearity signal", v8);
    report(9, "candidate space polynomiality", v9);
    report(10, "example fixtures", v10);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
