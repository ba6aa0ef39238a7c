use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

use focl::eval::Evaluator;
use focl::gen::ExprGen;
use focl::lang::{parse_with, Caps, Expr, HypothesisClassConfig, Registry};
use focl::learner::{self, evaluate_hypothesis, CandidateSpace, Hypothesis, LearnError, Outcome, TrainingSet};
use focl::oracle::{naive_eval, naive_learn};
use focl::precompute::{load_index, precompute as build_index, save_index, IndexArtifact};
use focl::relstore::{ingest_path, AccessAudit, Elem, Structure};
use focl::semantics::Assignment;
use focl::synth;

use crate::error::CliError;
use crate::ClassArgs;

pub const BENCH_TARGET: &str = "#(z1).(E(x1,z1) & Blue(z1)) + 2 * #(z1).(E(z1,x1) & !Blue(z1))";

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::input(&path.display().to_string(), e))
}

fn load_config(path: &Path) -> Result<HypothesisClassConfig, CliError> {
    Ok(HypothesisClassConfig::from_json(&read(path)?)?)
}

fn class_config(a: &ClassArgs) -> Result<HypothesisClassConfig, CliError> {
    if let Some(path) = &a.config {
        return load_config(path);
    }
    let mut cfg = HypothesisClassConfig::new(a.k, a.ell, a.q);
    cfg.radius = a.radius;
    cfg.ints = a.ints.clone();
    cfg.caps = Caps { max_summands: a.max_summands, max_psi_atoms: a.max_atoms, ..Caps::default() };
    if !a.symbols.is_empty() {
        cfg.symbols = Some(a.symbols.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json(v: &serde_json::Value) {
    println!("{v}");
}

pub fn precompute(db: &Path, class: &ClassArgs, out: &Path, stats: Option<&Path>) -> Result<(), CliError> {
    let cfg = class_config(class)?;
    let s = ingest_path(db)?;
    let index = build_index(&s, &cfg, &Registry::builtin())?;
    save_index(&index, out)?;
    let report = json!({
        "index": out.display().to_string(),
        "digest": index.digest(),
        "stats": index.meta.stats,
    });
    if let Some(path) = stats {
        write(path, &serde_json::to_string_pretty(&report).expect("stats serialize"))?;
    }
    log::info!("index written to {}", out.display());
    print_json(&report);
    Ok(())
}

fn learn_cmd_error(e: LearnError) -> CliError {
    match e {
        LearnError::Contradictory { tuple, first, second } => {
            CliError::Reject(format!("contradictory labels: ({tuple}) is labelled {first} and {second}"))
        }
        e => e.into(),
    }
}

pub fn learn(index_path: &Path, train: &Path, out: &Path) -> Result<(), CliError> {
    let index = load_index(index_path, None)?;
    let cfg = index.meta.config.clone();
    let set = TrainingSet::from_jsonl(&read(train)?, &index.structure, cfg.k).map_err(learn_cmd_error)?;
    let registry = Registry::builtin();
    let audit = AccessAudit::new();
    let result = learner::learn(&set, &cfg, &index, &registry, &audit).map_err(learn_cmd_error)?;
    match result.outcome {
        Outcome::Hypothesis(h) => {
            write(out, &h.to_json(&index.structure))?;
            print_json(&json!({
                "outcome": "hypothesis",
                "term": h.term().to_string(),
                "params": h.params.iter().map(|&e| index.structure.name(e)).collect::<Vec<_>>(),
                "out": out.display().to_string(),
                "report": result.report,
            }));
            Ok(())
        }
        Outcome::Reject => {
            print_json(&json!({ "outcome": "reject", "report": result.report }));
            Err(CliError::Reject("no hypothesis in the class is consistent with the examples".into()))
        }
    }
}

pub fn eval(db: &Path, text: &str, at: &[String]) -> Result<(), CliError> {
    let s = ingest_path(db)?;
    let registry = Registry::builtin();
    let e = parse_with(text, &registry)?;
    let mut beta = Assignment::new();
    for binding in at {
        let (v, name) = binding
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("binding `{binding}` is not of the form var=element")))?;
        beta.insert(focl::lang::var(v.trim()), s.resolve(name.trim())?);
    }
    let value = Evaluator::new(&s, &registry).eval(&e, &beta)?;
    print_json(&json!({ "expr": e.to_string(), "value": value }));
    Ok(())
}

fn parse_tuple(s: &Structure, text: &str) -> Result<Vec<Elem>, CliError> {
    text.split(',').map(|n| Ok(s.resolve(n.trim())?)).collect()
}

pub fn evalh(index_path: &Path, hypothesis: &Path, tuples: &[String], file: Option<&Path>) -> Result<(), CliError> {
    let index = load_index(index_path, None)?;
    let registry = Registry::builtin();
    let h = Hypothesis::from_json(&read(hypothesis)?, &index, &registry)?;
    let mut all: Vec<Vec<Elem>> = tuples.iter().map(|t| parse_tuple(&index.structure, t)).collect::<Result<_, _>>()?;
    if let Some(path) = file {
        #[derive(serde::Deserialize)]
        struct Line {
            tuple: Vec<String>,
        }
        for (i, line) in read(path)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: Line =
                serde_json::from_str(line).map_err(|e| CliError::input(&format!("{}:{}", path.display(), i + 1), e))?;
            all.push(rec.tuple.iter().map(|n| index.structure.resolve(n)).collect::<Result<_, _>>()?);
        }
    }
    let audit = AccessAudit::new();
    let mut out = std::io::stdout().lock();
    for a in &all {
        if a.len() != h.xs.len() {
            return Err(CliError::Input(format!("tuple has {} entries, expected {}", a.len(), h.xs.len())));
        }
        let value = evaluate_hypothesis(&h, a, &index, &registry, &audit)?;
        let names: Vec<&str> = a.iter().map(|&e| index.structure.name(e)).collect();
        writeln!(out, "{}", json!({ "tuple": names, "value": value })).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    let scans = audit.snapshot().global_scans;
    if scans > 0 {
        return Err(LearnError::AuditViolation { scans }.into());
    }
    Ok(())
}

fn planted_config() -> HypothesisClassConfig {
    let mut cfg = HypothesisClassConfig::new(1, 1, 1);
    cfg.ints = vec![-1, 1, 2];
    cfg.caps = Caps { max_summands: 2, max_psi_atoms: 2, ..Caps::default() };
    cfg.symbols = Some(vec!["E".into(), "Blue".into()]);
    cfg
}

fn hypothesis_value(h: &Hypothesis, s: &Structure, registry: &Registry, a: &[Elem]) -> Result<i128, CliError> {
    let mut beta: Assignment = h.xs.iter().cloned().zip(a.iter().copied()).collect();
    beta.extend(h.ys.iter().cloned().zip(h.params.iter().copied()));
    naive_eval(&h.term(), s, registry, &beta)?.as_int().ok_or_else(|| CliError::Internal("hypothesis is not a term".into()))
}

pub fn check(seed: u64, eval_samples: usize, learn_runs: usize) -> Result<(), CliError> {
    let registry = Registry::builtin();
    let mut rng = synth::rng(seed);

    let (mut eval_pass, mut eval_fail) = (0usize, 0usize);
    while eval_pass + eval_fail < eval_samples {
        let s = synth::desk_structure(&mut rng, 8);
        let g = ExprGen::new(s.signature(), &registry);
        let ev = Evaluator::new(&s, &registry);
        for _ in 0..(eval_samples - eval_pass - eval_fail).min(50) {
            let e = g.expr(&mut rng);
            let beta: Assignment = g.vars.iter().map(|v| (v.clone(), rng.gen_range(0..s.len()) as Elem)).collect();
            let same = match (ev.eval(&e, &beta), naive_eval(&e, &s, &registry, &beta)) {
                (Ok(a), Ok(b)) => a == b,
                (Err(_), Err(_)) => true,
                _ => false,
            };
            if same {
                eval_pass += 1;
            } else {
                eval_fail += 1;
                log::warn!("evaluator and oracle disagree on {e}");
            }
        }
    }

    let cfg = planted_config();
    let (mut learn_pass, mut learn_fail) = (0usize, 0usize);
    for _ in 0..learn_runs {
        let s = synth::desk_structure(&mut rng, 10);
        let space = CandidateSpace::build(&cfg, s.signature(), s.gaifman().degree())?;
        let terms = rng.gen_range(1..=2).min(space.library.len());
        let mut target = Expr::int(rng.gen_range(-1..=2));
        for t in space.library.choose_multiple(&mut rng, terms) {
            let c = *space.coefficients.choose(&mut rng).expect("coefficients are never empty");
            target = Expr::add(target, Expr::mul(Expr::int(c), t.expr.clone()));
        }
        let w = rng.gen_range(0..s.len()) as Elem;
        let mut xs: Vec<Elem> = s.universe().collect();
        xs.shuffle(&mut rng);
        xs.truncate(rng.gen_range(1..=s.len()));
        let mut examples = Vec::new();
        for &a in &xs {
            let beta: Assignment = [(space.xs[0].clone(), a), (space.ys[0].clone(), w)].into_iter().collect();
            let label = naive_eval(&target, &s, &registry, &beta)?.as_int().expect("target is a term");
            examples.push((vec![a], label));
        }
        let set = TrainingSet::new(1, examples)?;
        let index = build_index(&s, &cfg, &registry)?;
        let audit = AccessAudit::new();
        let result = learner::learn(&set, &cfg, &index, &registry, &audit)?;
        let naive = naive_learn(&set, &cfg, &s, &registry)?;
        let ok = match &result.outcome {
            Outcome::Hypothesis(h) => {
                let mut sound = naive.is_some();
                for (a, label) in set.examples() {
                    sound &= hypothesis_value(h, &s, &registry, a)? == *label;
                    sound &= evaluate_hypothesis(h, a, &index, &registry, &audit)? == *label;
                }
                sound
            }
            // targets come from the grammar, so a reject is always a failure
            Outcome::Reject => false,
        } && audit.snapshot().global_scans == 0;
        if ok {
            learn_pass += 1;
        } else {
            learn_fail += 1;
            log::warn!("learner check failed for target {target}");
        }
    }

    print_json(&json!({
        "seed": seed,
        "eval": { "pass": eval_pass, "fail": eval_fail },
        "learn": { "pass": learn_pass, "fail": learn_fail },
    }));
    if eval_fail + learn_fail > 0 {
        return Err(CliError::Internal(format!("{} oracle disagreements", eval_fail + learn_fail)));
    }
    Ok(())
}

fn bench_config() -> HypothesisClassConfig {
    let mut cfg = planted_config();
    cfg.q = 2;
    cfg
}

struct Row {
    n: usize,
    d: usize,
    s: usize,
    phase: &'static str,
    seconds: f64,
    oracle_calls: Option<u64>,
}

fn time_index(s: &Structure, cfg: &HypothesisClassConfig, registry: &Registry) -> Result<(IndexArtifact, f64), CliError> {
    let t = Instant::now();
    let index = build_index(s, cfg, registry)?;
    Ok((index, t.elapsed().as_secs_f64()))
}

pub fn bench(
    seed: u64,
    sizes: &[usize],
    degree: usize,
    examples: usize,
    target: &str,
    config: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = match config {
        Some(p) => load_config(p)?,
        None => bench_config(),
    };
    let registry = Registry::builtin();
    let target = parse_with(target, &registry)?;
    let x = focl::lang::var("x1");
    if target.free_vars().iter().any(|v| *v != x) {
        return Err(CliError::Input("the bench target may only use the free variable x1".into()));
    }
    let mut rng = synth::rng(seed);
    let mut rows = Vec::new();
    for &n in sizes {
        if n == 0 {
            return Err(CliError::Input("sizes must be positive".into()));
        }
        let s = synth::bounded_degree_graph(&mut rng, n, degree, 2);
        let (index, seconds) = time_index(&s, &cfg, &registry)?;
        let d = s.gaifman().degree();
        let ev = Evaluator::new(&s, &registry);
        let mut labelled = Vec::new();
        for _ in 0..examples {
            let a = rng.gen_range(0..n) as Elem;
            let beta: Assignment = [(x.clone(), a)].into_iter().collect();
            labelled.push((vec![a], ev.eval_term(&target, &beta)?));
        }
        let set = TrainingSet::new(cfg.k, labelled)?;
        rows.push(Row { n, d, s: set.len(), phase: "precompute", seconds, oracle_calls: None });

        let audit = AccessAudit::new();
        let t = Instant::now();
        let result = learner::learn(&set, &cfg, &index, &registry, &audit)?;
        let seconds = t.elapsed().as_secs_f64();
        rows.push(Row { n, d, s: set.len(), phase: "learn", seconds, oracle_calls: Some(result.report.audit.oracle_calls()) });

        if let Outcome::Hypothesis(h) = result.outcome {
            let audit = AccessAudit::new();
            let t = Instant::now();
            for (a, _) in set.examples() {
                evaluate_hypothesis(&h, a, &index, &registry, &audit)?;
            }
            let seconds = t.elapsed().as_secs_f64();
            rows.push(Row { n, d, s: set.len(), phase: "evalh", seconds, oracle_calls: Some(audit.snapshot().oracle_calls()) });
        } else {
            log::warn!("learner rejected at n={n}; no evalh row");
        }
    }
    let mut out = std::io::stdout().lock();
    let mut line = |text: String| writeln!(out, "{text}").map_err(|e| CliError::Internal(e.to_string()));
    line("n,d,s,phase,wall_time,oracle_calls".into())?;
    for r in rows {
        let calls = r.oracle_calls.map(|c| c.to_string()).unwrap_or_default();
        line(format!("{},{},{},{},{:.6},{}", r.n, r.d, r.s, r.phase, r.seconds, calls))?;
    }
    Ok(())
}
