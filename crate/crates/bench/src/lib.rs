//! Workloads shared by the benchmarks: bounded-degree graphs labelled by a fixed target.

use rand::Rng;

use focl::eval::Evaluator;
use focl::lang::{parse, Caps, HypothesisClassConfig, Registry};
use focl::learner::TrainingSet;
use focl::relstore::{Elem, Structure};
use focl::semantics::assignment;
use focl::synth;

pub const TARGET: &str = "#(z1).(E(x1,z1) & Blue(z1)) + 2 * #(z1).(E(z1,x1) & !Blue(z1))";

/// One parameter, up to two bound variables, patterns over `E` and `Blue`.
pub fn config() -> HypothesisClassConfig {
    let mut cfg = HypothesisClassConfig::new(1, 1, 2);
    cfg.ints = vec![-1, 1, 2];
    cfg.caps = Caps { max_summands: 2, max_psi_atoms: 2, ..Caps::default() };
    cfg.symbols = Some(vec!["E".into(), "Blue".into()]);
    cfg
}

pub struct Workload {
    pub structure: Structure,
    pub training: TrainingSet,
}

pub fn workload(seed: u64, n: usize, d: usize, examples: usize) -> Workload {
    let mut rng = synth::rng(seed);
    let structure = synth::bounded_degree_graph(&mut rng, n, d, 2);
    let registry = Registry::builtin();
    let target = parse(TARGET).expect("target parses");
    let ev = Evaluator::new(&structure, &registry);
    let labelled: Vec<(Vec<Elem>, i128)> = (0..examples)
        .map(|_| {
            let a = rng.gen_range(0..n) as Elem;
            (vec![a], ev.eval_term(&target, &assignment([("x1", a)])).expect("target evaluates"))
        })
        .collect();
    let training = TrainingSet::new(1, labelled).expect("labels come from one function");
    Workload { structure, training }
}
