use super::naive::naive_eval;
use crate::graph::Graph;
use crate::lang::{Expr, HypothesisClassConfig, Registry};
use crate::learner::{CandidateSpace, LearnError, TrainingSet};
use crate::relstore::{Elem, Structure};
use crate::semantics::Assignment;

/// A consistent `(term, parameters)` pair found by [`naive_learn`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NaiveFit {
    pub constant: i128,
    pub summands: Vec<(i128, Expr)>,
    pub params: Vec<Elem>,
}

/// Exhaustive search over the learner's candidate grammar with parameters ranging over
/// the whole universe, every value computed by [`naive_eval`]. Tries summand counts in
/// increasing order, then summand sequences, then parameter tuples.
pub fn naive_learn(
    set: &TrainingSet,
    cfg: &HypothesisClassConfig,
    s: &Structure,
    registry: &Registry,
) -> Result<Option<NaiveFit>, LearnError> {
    let space = CandidateSpace::build(cfg, s.signature(), s.gaifman().degree())?;
    let mut params: Vec<Vec<Elem>> = vec![Vec::new()];
    for _ in 0..cfg.ell {
        params = params
            .iter()
            .flat_map(|p| {
                s.universe().map(move |e| {
                    let mut p = p.clone();
                    p.push(e);
                    p
                })
            })
            .collect();
    }
    let examples = set.examples();
    // values[w][j][i]
    let mut values = Vec::with_capacity(params.len());
    for w in &params {
        let mut per_term = Vec::with_capacity(space.library.len());
        for t in &space.library {
            let mut row = Vec::with_capacity(examples.len());
            for (a, _) in examples {
                let mut beta: Assignment = space.xs.iter().cloned().zip(a.iter().copied()).collect();
                beta.extend(space.ys.iter().cloned().zip(w.iter().copied()));
                row.push(naive_eval(&t.expr, s, registry, &beta)?.as_int().expect("counting term"));
            }
            per_term.push(row);
        }
        values.push(per_term);
    }

    let c = &space.coefficients;
    for p in 0..=space.max_summands {
        let mut terms: Vec<usize> = (0..p).collect();
        if p > space.library.len() {
            break;
        }
        loop {
            let mut coeffs = vec![0usize; p];
            loop {
                for (wi, w) in params.iter().enumerate() {
                    let value = |i: usize| -> i128 {
                        terms.iter().zip(&coeffs).map(|(&j, &ci)| c[ci] * values[wi][j][i]).sum()
                    };
                    let constant = examples.first().map_or(0, |(_, l)| l - value(0));
                    if examples.iter().enumerate().all(|(i, (_, l))| constant + value(i) == *l) {
                        return Ok(Some(NaiveFit {
                            constant,
                            summands: terms.iter().zip(&coeffs).map(|(&j, &ci)| (c[ci], space.library[j].expr.clone())).collect(),
                            params: w.clone(),
                        }));
                    }
                }
                // next coefficient choice, last position fastest
                let mut pos = p;
                while pos > 0 {
                    pos -= 1;
                    coeffs[pos] += 1;
                    if coeffs[pos] < c.len() {
                        break;
                    }
                    coeffs[pos] = 0;
                }
                if coeffs.iter().all(|&x| x == 0) {
                    break;
                }
            }
            if !next_combination(&mut terms, space.library.len()) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advances an increasing sequence to the next one in lexicographic order.
fn next_combination(terms: &mut [usize], n: usize) -> bool {
    let p = terms.len();
    for pos in (0..p).rev() {
        if terms[pos] < n - p + pos {
            terms[pos] += 1;
            for later in pos + 1..p {
                terms[later] = terms[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Whether `graph` is the component pattern of the `r`-neighbourhoods of `tuple`:
/// positions `i` and `j` are joined exactly when their `r`-balls share an element or
/// contain two elements of a common tuple.
pub fn naive_delta(s: &Structure, graph: &Graph, tuple: &[Elem], r: u32) -> bool {
    let ball = |c: Elem| -> Vec<Elem> { s.universe().filter(|&u| super::naive::naive_distance_at_most(s, c, u, r)).collect() };
    let balls: Vec<Vec<Elem>> = tuple.iter().map(|&c| ball(c)).collect();
    let touch = |a: &[Elem], b: &[Elem]| {
        a.iter().any(|u| b.contains(u))
            || s.relations().iter().any(|rel| rel.tuples().any(|t| t.iter().any(|u| a.contains(u)) && t.iter().any(|u| b.contains(u))))
    };
    (0..tuple.len()).all(|j| (0..j).all(|i| touch(&balls[i], &balls[j]) == graph.has_edge(i, j)))
}
