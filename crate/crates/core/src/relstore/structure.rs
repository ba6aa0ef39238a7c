use std::fmt;
use std::sync::OnceLock;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use super::gaifman::GaifmanIndex;
use super::RelError;

/// Dense handle of a universe element.
pub type Elem = u32;

/// Position of a symbol inside its [`Signature`].
pub type RelId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub name: String,
    pub arity: usize,
}

impl Symbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Symbol {
            name: name.into(),
            arity,
        }
    }
}

/// A finite set of relation symbols with unique names.
#[derive(Debug, Clone, Default)]
pub struct Signature {
    symbols: Vec<Symbol>,
    index: FxHashMap<String, RelId>,
}

impl Signature {
    pub fn new(symbols: impl IntoIterator<Item = Symbol>) -> Result<Self, RelError> {
        let mut sig = Signature::default();
        for sym in symbols {
            sig.push(sym)?;
        }
        Ok(sig)
    }

    pub fn push(&mut self, symbol: Symbol) -> Result<RelId, RelError> {
        if self.index.contains_key(&symbol.name) {
            return Err(RelError::DuplicateSymbol(symbol.name));
        }
        let id = self.symbols.len();
        self.index.insert(symbol.name.clone(), id);
        self.symbols.push(symbol);
        Ok(id)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, id: RelId) -> &Symbol {
        &self.symbols[id]
    }

    pub fn lookup(&self, name: &str) -> Option<RelId> {
        self.index.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains_all(&self, other: &Signature) -> bool {
        other
            .symbols
            .iter()
            .all(|s| self.lookup(&s.name).map(|id| self.symbol(id)) == Some(s))
    }
}

impl PartialEq for Signature {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Signature {}

/// Interpretation of one relation symbol.
///
/// Tuples are kept three ways: a sorted list for deterministic enumeration, a
/// hash set for constant-time membership, and one index per position mapping an
/// element to the tuples holding it there. A 0-ary relation is just a truth value.
#[derive(Debug, Clone)]
pub struct Relation {
    arity: usize,
    truth: bool,
    tuples: Vec<Box<[Elem]>>,
    set: FxHashSet<Box<[Elem]>>,
    by_position: Vec<FxHashMap<Elem, Vec<u32>>>,
}

impl Relation {
    pub fn nullary(truth: bool) -> Self {
        Relation {
            arity: 0,
            truth,
            tuples: Vec::new(),
            set: FxHashSet::default(),
            by_position: Vec::new(),
        }
    }

    /// Builds a relation of positive arity. Duplicates are dropped; lengths are
    /// the caller's responsibility.
    pub fn from_tuples(arity: usize, tuples: impl IntoIterator<Item = Box<[Elem]>>) -> Self {
        if arity == 0 {
            let truth = tuples.into_iter().next().is_some();
            return Relation::nullary(truth);
        }
        let mut list: Vec<Box<[Elem]>> = tuples.into_iter().collect();
        list.sort_unstable();
        list.dedup();
        let set: FxHashSet<Box<[Elem]>> = list.iter().cloned().collect();
        let mut by_position = vec![FxHashMap::<Elem, Vec<u32>>::default(); arity];
        for (i, t) in list.iter().enumerate() {
            debug_assert_eq!(t.len(), arity);
            for (pos, &e) in t.iter().enumerate() {
                by_position[pos].entry(e).or_default().push(i as u32);
            }
        }
        Relation {
            arity,
            truth: false,
            tuples: list,
            set,
            by_position,
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn contains(&self, tuple: &[Elem]) -> bool {
        if self.arity == 0 {
            return tuple.is_empty() && self.truth;
        }
        self.set.contains(tuple)
    }

    /// Truth value of a 0-ary relation (always false for positive arity).
    pub fn truth(&self) -> bool {
        self.truth
    }

    pub fn len(&self) -> usize {
        if self.arity == 0 {
            usize::from(self.truth)
        } else {
            self.tuples.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tuples(&self) -> impl Iterator<Item = &[Elem]> + '_ {
        let empty: &[Elem] = &[];
        let nullary = (self.arity == 0 && self.truth).then_some(empty);
        nullary
            .into_iter()
            .chain(self.tuples.iter().map(|t| &t[..]))
    }

    /// Tuples holding `e` at position `pos`.
    pub fn with_entry_at(&self, pos: usize, e: Elem) -> impl Iterator<Item = &[Elem]> + '_ {
        self.by_position
            .get(pos)
            .and_then(|m| m.get(&e))
            .into_iter()
            .flatten()
            .map(move |&i| &self.tuples[i as usize][..])
    }

    /// Distinct elements occurring at position `pos`, ascending.
    pub fn column(&self, pos: usize) -> Vec<Elem> {
        let mut v: Vec<Elem> = self
            .by_position
            .get(pos)
            .map(|m| m.keys().copied().collect())
            .unwrap_or_default();
        v.sort_unstable();
        v
    }
}

impl PartialEq for Relation {
    fn eq(&self, other: &Self) -> bool {
        self.arity == other.arity && self.truth == other.truth && self.tuples == other.tuples
    }
}

impl Eq for Relation {}

/// A finite relational structure. Immutable once built.
pub struct Structure {
    signature: Signature,
    elements: Vec<String>,
    element_index: FxHashMap<String, Elem>,
    relations: Vec<Relation>,
    gaifman: OnceLock<GaifmanIndex>,
}

impl Structure {
    pub fn builder(signature: Signature) -> StructureBuilder {
        StructureBuilder::new(signature)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn universe(&self) -> std::ops::Range<Elem> {
        0..self.elements.len() as Elem
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.elements[e as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.elements
    }

    pub fn handle(&self, name: &str) -> Option<Elem> {
        self.element_index.get(name).copied()
    }

    pub fn resolve(&self, name: &str) -> Result<Elem, RelError> {
        self.handle(name)
            .ok_or_else(|| RelError::UnknownElement(name.to_string()))
    }

    pub fn check(&self, e: Elem) -> Result<Elem, RelError> {
        if (e as usize) < self.elements.len() {
            Ok(e)
        } else {
            Err(RelError::UnknownElement(format!("#{e}")))
        }
    }

    pub fn relation(&self, id: RelId) -> &Relation {
        &self.relations[id]
    }

    pub fn relation_by_name(&self, name: &str) -> Option<&Relation> {
        self.signature.lookup(name).map(|id| &self.relations[id])
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn fact_count(&self) -> usize {
        self.relations.iter().map(Relation::len).sum()
    }

    /// Gaifman adjacency, built on first use.
    pub fn gaifman(&self) -> &GaifmanIndex {
        self.gaifman.get_or_init(|| GaifmanIndex::build(self))
    }

    /// The induced substructure on `set` (need not be sorted or deduplicated).
    /// Local handles follow ascending global handle order.
    pub fn induced(&self, set: &[Elem]) -> Result<Region, RelError> {
        let mut members: Vec<Elem> = set.to_vec();
        members.sort_unstable();
        members.dedup();
        for &e in &members {
            self.check(e)?;
        }
        let to_local: FxHashMap<Elem, Elem> = members
            .iter()
            .enumerate()
            .map(|(i, &g)| (g, i as Elem))
            .collect();
        let mut relations = Vec::with_capacity(self.relations.len());
        for rel in &self.relations {
            if rel.arity == 0 {
                relations.push(Relation::nullary(rel.truth));
                continue;
            }
            let mut tuples = Vec::new();
            for &g in &members {
                for t in rel.with_entry_at(0, g) {
                    let local: Option<Box<[Elem]>> =
                        t.iter().map(|e| to_local.get(e).copied()).collect();
                    if let Some(l) = local {
                        tuples.push(l);
                    }
                }
            }
            relations.push(Relation::from_tuples(rel.arity, tuples));
        }
        let elements: Vec<String> = members.iter().map(|&g| self.name(g).to_string()).collect();
        let structure = Structure::from_parts(self.signature.clone(), elements, relations);
        Ok(Region {
            structure,
            to_global: members,
            to_local,
        })
    }

    /// A σ'-expansion: same universe, old relations untouched, `additions`
    /// appended to the signature.
    pub fn expand(&self, additions: Vec<(Symbol, Relation)>) -> Result<Structure, RelError> {
        let mut signature = self.signature.clone();
        let mut relations = self.relations.clone();
        for (sym, rel) in additions {
            if sym.arity != rel.arity {
                return Err(RelError::ArityMismatch {
                    symbol: sym.name,
                    expected: sym.arity,
                    found: rel.arity,
                    position: None,
                });
            }
            if rel.tuples().flatten().any(|&e| e as usize >= self.len()) {
                return Err(RelError::UnknownElement(format!("in expansion of {}", sym.name)));
            }
            signature.push(sym)?;
            relations.push(rel);
        }
        let out = Structure::from_parts(signature, self.elements.clone(), relations);
        if let Some(g) = self.gaifman.get() {
            // only arity <= 1 additions keep the Gaifman graph unchanged
            if out.signature.symbols()[self.signature.len()..]
                .iter()
                .all(|s| s.arity <= 1)
            {
                let _ = out.gaifman.set(g.clone());
            }
        }
        Ok(out)
    }

    pub(crate) fn from_parts(
        signature: Signature,
        elements: Vec<String>,
        relations: Vec<Relation>,
    ) -> Structure {
        let element_index = elements
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as Elem))
            .collect();
        Structure {
            signature,
            elements,
            element_index,
            relations,
            gaifman: OnceLock::new(),
        }
    }
}

impl Clone for Structure {
    fn clone(&self) -> Self {
        let out = Structure {
            signature: self.signature.clone(),
            elements: self.elements.clone(),
            element_index: self.element_index.clone(),
            relations: self.relations.clone(),
            gaifman: OnceLock::new(),
        };
        if let Some(g) = self.gaifman.get() {
            let _ = out.gaifman.set(g.clone());
        }
        out
    }
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature
            && self.elements == other.elements
            && self.relations == other.relations
    }
}

impl Eq for Structure {}

impl fmt::Debug for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Structure");
        d.field("universe", &self.elements);
        for (sym, rel) in self.signature.symbols().iter().zip(&self.relations) {
            let tuples: Vec<Vec<&str>> = rel
                .tuples()
                .map(|t| t.iter().map(|&e| self.name(e)).collect())
                .collect();
            d.field(&sym.name, &tuples);
        }
        d.finish()
    }
}

/// An induced substructure together with its handle translation.
#[derive(Debug, Clone)]
pub struct Region {
    pub structure: Structure,
    pub to_global: Vec<Elem>,
    pub to_local: FxHashMap<Elem, Elem>,
}

impl Region {
    pub fn local(&self, global: Elem) -> Option<Elem> {
        self.to_local.get(&global).copied()
    }

    pub fn global(&self, local: Elem) -> Elem {
        self.to_global[local as usize]
    }

    pub fn localize(&self, tuple: &[Elem]) -> Result<Vec<Elem>, RelError> {
        tuple
            .iter()
            .map(|&g| {
                self.local(g)
                    .ok_or_else(|| RelError::UnknownElement(format!("#{g} outside region")))
            })
            .collect()
    }
}

/// Incremental construction with validation.
pub struct StructureBuilder {
    signature: Signature,
    elements: Vec<String>,
    index: FxHashMap<String, Elem>,
    facts: Vec<Vec<Box<[Elem]>>>,
    nullary: Vec<bool>,
}

impl StructureBuilder {
    pub fn new(signature: Signature) -> Self {
        let n = signature.len();
        StructureBuilder {
            signature,
            elements: Vec::new(),
            index: FxHashMap::default(),
            facts: vec![Vec::new(); n],
            nullary: vec![false; n],
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Returns the handle of `name`, adding it to the universe if new.
    pub fn element(&mut self, name: &str) -> Elem {
        if let Some(&e) = self.index.get(name) {
            return e;
        }
        let e = self.elements.len() as Elem;
        self.elements.push(name.to_string());
        self.index.insert(name.to_string(), e);
        e
    }

    pub fn elements<'n>(&mut self, names: impl IntoIterator<Item = &'n str>) -> &mut Self {
        for n in names {
            self.element(n);
        }
        self
    }

    pub fn fact(&mut self, rel: &str, names: &[&str]) -> Result<&mut Self, RelError> {
        let id = self
            .signature
            .lookup(rel)
            .ok_or_else(|| RelError::UnknownSymbol(rel.to_string()))?;
        let handles: Vec<Elem> = names.iter().map(|n| self.element(n)).collect();
        self.fact_handles(id, &handles)?;
        Ok(self)
    }

    pub fn fact_handles(&mut self, rel: RelId, tuple: &[Elem]) -> Result<(), RelError> {
        let sym = self.signature.symbol(rel);
        if sym.arity != tuple.len() {
            return Err(RelError::ArityMismatch {
                symbol: sym.name.clone(),
                expected: sym.arity,
                found: tuple.len(),
                position: None,
            });
        }
        if let Some(&bad) = tuple.iter().find(|&&e| e as usize >= self.elements.len()) {
            return Err(RelError::UnknownElement(format!("#{bad}")));
        }
        if sym.arity == 0 {
            self.nullary[rel] = true;
        } else {
            self.facts[rel].push(tuple.into());
        }
        Ok(())
    }

    pub fn set_nullary(&mut self, rel: &str, truth: bool) -> Result<&mut Self, RelError> {
        let id = self
            .signature
            .lookup(rel)
            .ok_or_else(|| RelError::UnknownSymbol(rel.to_string()))?;
        self.nullary[id] = truth;
        Ok(self)
    }

    pub fn build(self) -> Structure {
        let relations = self
            .signature
            .symbols()
            .iter()
            .zip(self.facts)
            .zip(self.nullary)
            .map(|((sym, facts), truth)| {
                if sym.arity == 0 {
                    Relation::nullary(truth)
                } else {
                    Relation::from_tuples(sym.arity, facts)
                }
            })
            .collect();
        Structure::from_parts(self.signature, self.elements, relations)
    }
}
