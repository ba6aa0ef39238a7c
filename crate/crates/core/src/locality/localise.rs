use rand::Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{canonical_type, locality_radius, quantifier_depth, LocalityError, TypeKey};
use crate::eval::{eval_local, Evaluator};
use crate::lang::{Expr, Kind, LocaliseMode, Registry};
use crate::relstore::{AccessAudit, Elem, LocalOracle, Relation, Structure, Symbol};
use crate::semantics::{Assignment, Value};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub name: String,
    pub arity: usize,
    /// The subformula the predicate stands for, over the signature at the time it was added.
    pub definition: String,
    pub radius: Option<u32>,
    pub types_realized: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalisationReport {
    pub mode: LocaliseMode,
    pub input: String,
    pub output: String,
    pub certified_radius: u32,
    pub predicates: Vec<PredicateReport>,
    pub types_realized: usize,
    pub samples_checked: usize,
}

#[derive(Clone, Debug)]
pub struct LocalisationOutput {
    /// Expansion of the input by the added predicates.
    pub structure: Structure,
    pub formula: Expr,
    pub radius: u32,
    pub report: LocalisationReport,
}

/// Settings shared by both localisation modes.
#[derive(Clone, Debug)]
pub struct Localiser<'r> {
    pub registry: &'r Registry,
    /// Prefix of every added symbol.
    pub namespace: String,
    pub samples: usize,
    pub seed: u64,
    /// Leaf budget of the canonical-labelling search.
    pub leaf_cap: usize,
}

impl<'r> Localiser<'r> {
    pub fn new(registry: &'r Registry, namespace: &str) -> Self {
        Localiser { registry, namespace: namespace.to_string(), samples: 1000, seed: 0x5eed, leaf_cap: 512 }
    }

    pub fn run(&self, phi: &Expr, s: &Structure, mode: &LocaliseMode) -> Result<LocalisationOutput, LocalityError> {
        match *mode {
            LocaliseMode::AlreadyLocal { radius } => {
                let checked = certify_local(phi, s, radius, self.registry, self.samples, self.seed)?;
                Ok(LocalisationOutput {
                    structure: s.clone(),
                    formula: phi.clone(),
                    radius,
                    report: LocalisationReport {
                        mode: mode.clone(),
                        input: phi.to_string(),
                        output: phi.to_string(),
                        certified_radius: radius,
                        predicates: Vec::new(),
                        types_realized: 0,
                        samples_checked: checked,
                    },
                })
            }
            LocaliseMode::Hanf { radius_cap, quantifier_cap } => {
                let depth = quantifier_depth(phi);
                if depth > quantifier_cap {
                    return Err(LocalityError::Unsupported {
                        reason: format!("quantifier depth {depth} exceeds the cap {quantifier_cap}"),
                    });
                }
                let mut state = Hanf { cfg: self, structure: s.clone(), radius_cap, added: Vec::new() };
                let formula = state.rewrite(phi)?;
                let radius = locality_radius(&formula, state.structure.signature()).ok_or_else(|| {
                    LocalityError::Unsupported { reason: format!("{formula} has no syntactic locality radius") }
                })?;
                let radius = radius.max(1);
                let types_realized = state.added.iter().map(|p| p.types_realized).sum();
                Ok(LocalisationOutput {
                    report: LocalisationReport {
                        mode: mode.clone(),
                        input: phi.to_string(),
                        output: formula.to_string(),
                        certified_radius: radius,
                        predicates: state.added,
                        types_realized,
                        samples_checked: 0,
                    },
                    structure: state.structure,
                    formula,
                    radius,
                })
            }
        }
    }
}

/// Convenience wrapper around [`Localiser::run`].
pub fn localise(
    phi: &Expr,
    s: &Structure,
    mode: &LocaliseMode,
    registry: &Registry,
    namespace: &str,
) -> Result<LocalisationOutput, LocalityError> {
    Localiser::new(registry, namespace).run(phi, s, mode)
}

/// Compares neighbourhood and global evaluation on `samples` random assignments, or on
/// all of them when there are fewer. Returns the number of assignments checked.
pub fn certify_local(
    phi: &Expr,
    s: &Structure,
    radius: u32,
    registry: &Registry,
    samples: usize,
    seed: u64,
) -> Result<usize, LocalityError> {
    let vars: Vec<_> = phi.free_vars().iter().cloned().collect();
    let n = s.len();
    if n == 0 && !vars.is_empty() {
        return Ok(0);
    }
    let space = (0..vars.len()).try_fold(1usize, |acc, _| acc.checked_mul(n));
    let exhaustive = space.is_some_and(|sp| sp <= samples);
    let total = if exhaustive { space.unwrap_or(0) } else { samples };
    let audit = AccessAudit::new();
    let oracle = LocalOracle::new(s, &audit);
    let ev = Evaluator::new(s, registry);
    let compiled = ev.compile(phi, &vars)?;
    let mut rng = crate::synth::rng(seed);
    for i in 0..total {
        let tuple: Vec<Elem> = if exhaustive {
            let mut code = i;
            (0..vars.len())
                .map(|_| {
                    let e = (code % n) as Elem;
                    code /= n;
                    e
                })
                .collect()
        } else {
            (0..vars.len()).map(|_| rng.gen_range(0..n) as Elem).collect()
        };
        let global = ev.value(&compiled, &tuple)?;
        let beta: Assignment = vars.iter().cloned().zip(tuple.iter().copied()).collect();
        let local = eval_local(phi, radius, &beta, &oracle, registry)?;
        if local != global {
            let shown: Vec<String> = vars.iter().zip(&tuple).map(|(v, &e)| format!("{v}={}", s.name(e))).collect();
            return Err(LocalityError::CertificationFailed {
                radius,
                expr: phi.to_string(),
                assignment: shown.join(", "),
            });
        }
    }
    Ok(total)
}

fn has_quantifier(e: &Expr) -> bool {
    let mut found = false;
    e.visit(&mut |n| found |= matches!(n.kind(), Kind::Exists(..) | Kind::Count(..)));
    found
}

struct Hanf<'a, 'r> {
    cfg: &'a Localiser<'r>,
    structure: Structure,
    radius_cap: u32,
    added: Vec<PredicateReport>,
}

impl Hanf<'_, '_> {
    fn fresh(&self, kind: char) -> String {
        let sig = self.structure.signature();
        (self.added.len()..)
            .map(|i| format!("{}{kind}{i}", self.cfg.namespace))
            .find(|name| sig.lookup(name).is_none())
            .expect("unbounded supply")
    }

    fn local_radius(&self, e: &Expr) -> Result<u32, LocalityError> {
        match locality_radius(e, self.structure.signature()) {
            Some(r) if r <= self.radius_cap => Ok(r),
            Some(r) => Err(LocalityError::Unsupported {
                reason: format!("{e} needs radius {r}, above the cap {}", self.radius_cap),
            }),
            None => Err(LocalityError::Unsupported {
                reason: format!("{e} quantifies without a guard tying it to its free variables"),
            }),
        }
    }

    fn rewrite(&mut self, e: &Expr) -> Result<Expr, LocalityError> {
        let kids = e.children();
        if kids.is_empty() {
            return Ok(e.clone());
        }
        let kids = kids.into_iter().map(|c| self.rewrite(c)).collect::<Result<Vec<_>, _>>()?;
        let e = e.with_children(kids)?;
        let block = matches!(e.kind(), Kind::Exists(..) | Kind::Count(..) | Kind::NumPred(..));
        if !block || !has_quantifier(&e) {
            return Ok(e);
        }
        let free = e.free_vars().len();
        if free == 0 {
            return self.ground(&e);
        }
        if free == 1 && e.is_formula() {
            return self.colour(&e);
        }
        self.local_radius(&e)?;
        Ok(e)
    }

    /// Closed blocks: terms become their value, sentences a fresh 0-ary symbol.
    fn ground(&mut self, e: &Expr) -> Result<Expr, LocalityError> {
        let ev = Evaluator::new(&self.structure, self.cfg.registry);
        let value = ev.eval(e, &Assignment::new())?;
        match value {
            Value::Int(i) => Ok(Expr::int(i)),
            Value::Bool(b) => {
                let name = self.fresh('s');
                self.structure = self.structure.expand(vec![(Symbol::new(&name, 0), Relation::nullary(b))])?;
                self.added.push(PredicateReport {
                    name: name.clone(),
                    arity: 0,
                    definition: e.to_string(),
                    radius: None,
                    types_realized: 1,
                });
                Ok(Expr::atom(&name, &[]))
            }
        }
    }

    /// One-variable blocks become a unary predicate decided once per neighbourhood type.
    fn colour(&mut self, e: &Expr) -> Result<Expr, LocalityError> {
        let radius = self.local_radius(e)?;
        let x = e.free_vars().iter().next().expect("one free variable").clone();
        let s = &self.structure;
        let leaf_cap = self.cfg.leaf_cap;
        let typed: Vec<(TypeKey, Elem)> = s
            .universe()
            .into_par_iter()
            .map(|v| {
                let ball = s.gaifman().ball(&[v], radius).expect("element of the universe");
                let region = s.induced(&ball).expect("ball lies in the universe");
                let c = region.local(v).expect("center in its ball");
                (canonical_type(&region.structure, &[c], leaf_cap), v)
            })
            .collect();
        let mut reps: FxHashMap<&TypeKey, Elem> = FxHashMap::default();
        for (k, v) in &typed {
            reps.entry(k).or_insert(*v);
        }
        let reps: Vec<(&TypeKey, Elem)> = reps.into_iter().collect();
        let registry = self.cfg.registry;
        let decided: FxHashMap<&TypeKey, bool> = reps
            .par_iter()
            .map(|&(k, v)| {
                let ball = s.gaifman().ball(&[v], radius)?;
                let region = s.induced(&ball)?;
                let ev = Evaluator::new(&region.structure, registry);
                let c = ev.compile(e, std::slice::from_ref(&x))?;
                let truth = ev.formula(&c, &[region.local(v).expect("center in its ball")])?;
                Ok::<_, LocalityError>((k, truth))
            })
            .collect::<Result<_, _>>()?;
        let members = typed.iter().filter(|(k, _)| decided[k]).map(|(_, v)| vec![*v].into_boxed_slice());
        let relation = Relation::from_tuples(1, members);
        let name = self.fresh('p');
        let types_realized = decided.len();
        self.structure = self.structure.expand(vec![(Symbol::new(&name, 1), relation)])?;
        self.added.push(PredicateReport {
            name: name.clone(),
            arity: 1,
            definition: e.to_string(),
            radius: Some(radius),
            types_realized,
        });
        Ok(Expr::atom_vars(&name, vec![x]))
    }
}
