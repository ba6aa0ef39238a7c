use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::LangError;

pub type Decider = Arc<dyn Fn(&[i128]) -> bool + Send + Sync>;

#[derive(Clone)]
pub struct NumericalPredicate {
    pub arity: usize,
    pub decide: Decider,
}

/// Named numerical predicates with fixed arities.
#[derive(Clone, Default)]
pub struct Registry {
    entries: BTreeMap<String, NumericalPredicate>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.entries.iter().map(|(k, v)| (k, v.arity))).finish()
    }
}

fn is_prime(n: i128) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut i: i128 = 3;
    while i.checked_mul(i).is_some_and(|sq| sq <= n) {
        if n % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

impl Registry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `Peq`, `Pleq`, `Pprime` and `Pdivides`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("Peq", 2, |a| a[0] == a[1]).expect("fresh registry");
        r.register("Pleq", 2, |a| a[0] <= a[1]).expect("fresh registry");
        r.register("Pprime", 1, |a| is_prime(a[0])).expect("fresh registry");
        // 0 divides only 0
        r.register("Pdivides", 2, |a| if a[0] == 0 { a[1] == 0 } else { a[1] % a[0] == 0 })
            .expect("fresh registry");
        r
    }

    pub fn register(
        &mut self,
        name: &str,
        arity: usize,
        decide: impl Fn(&[i128]) -> bool + Send + Sync + 'static,
    ) -> Result<(), LangError> {
        if self.entries.contains_key(name) {
            return Err(LangError::DuplicatePredicate(name.to_string()));
        }
        self.entries.insert(name.to_string(), NumericalPredicate { arity, decide: Arc::new(decide) });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&NumericalPredicate> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn decide(&self, name: &str, args: &[i128]) -> Result<bool, LangError> {
        let p = self.get(name).ok_or_else(|| LangError::UnknownPredicate(name.to_string()))?;
        if p.arity != args.len() {
            return Err(LangError::PredicateArity { name: name.to_string(), expected: p.arity, found: args.len() });
        }
        Ok((p.decide)(args))
    }
}
