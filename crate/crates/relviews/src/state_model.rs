//! Concrete and abstract states as finite partial heaps, token maps, and the
//! world triples that views reify to.
//!
//! Heaps and token maps are kept as sorted association lists so that
//! composition is a merge and the derived ordering is lexicographic.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Values stored in heaps and manipulated by expressions.
pub type Val = i32;

/// Thread identifier, ranging over `1..=N`.
pub type Tid = u8;

/// Index of a declared location in a [`LocTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Loc(pub u16);

/// Index of a declared method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MethodId(pub u16);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StateError {
    #[error("world universe has {size} elements, above the cap of {cap}; raise --cap or RELVIEWS_CAP")]
    UniverseTooLarge { size: u128, cap: u128 },
}

/// Finite partial map from locations to values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Heap {
    cells: SmallVec<[(Loc, Val); 8]>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    /// Builds a heap from arbitrary cells; later duplicates win.
    pub fn from_cells<I: IntoIterator<Item = (Loc, Val)>>(cells: I) -> Self {
        let mut h = Heap::new();
        for (l, v) in cells {
            h.set(l, v);
        }
        h
    }

    pub fn singleton(l: Loc, v: Val) -> Self {
        let mut h = Heap::new();
        h.cells.push((l, v));
        h
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn get(&self, l: Loc) -> Option<Val> {
        self.cells
            .binary_search_by_key(&l, |c| c.0)
            .ok()
            .map(|i| self.cells[i].1)
    }

    pub fn contains(&self, l: Loc) -> bool {
        self.get(l).is_some()
    }

    pub fn set(&mut self, l: Loc, v: Val) {
        match self.cells.binary_search_by_key(&l, |c| c.0) {
            Ok(i) => self.cells[i].1 = v,
            Err(i) => self.cells.insert(i, (l, v)),
        }
    }

    pub fn remove(&mut self, l: Loc) -> Option<Val> {
        match self.cells.binary_search_by_key(&l, |c| c.0) {
            Ok(i) => Some(self.cells.remove(i).1),
            Err(_) => None,
        }
    }

    pub fn cells(&self) -> &[(Loc, Val)] {
        &self.cells
    }

    pub fn domain(&self) -> impl Iterator<Item = Loc> + '_ {
        self.cells.iter().map(|c| c.0)
    }

    /// Disjoint union, or `None` when the domains overlap.
    pub fn join(&self, other: &Heap) -> Option<Heap> {
        let (a, b) = (&self.cells, &other.cells);
        let mut out = SmallVec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => return None,
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Some(Heap { cells: out })
    }

    /// True when every cell of `self` appears with the same value in `other`.
    pub fn is_subheap_of(&self, other: &Heap) -> bool {
        let mut j = 0;
        let b = &other.cells;
        for &(l, v) in &self.cells {
            while j < b.len() && b[j].0 < l {
                j += 1;
            }
            if j == b.len() || b[j] != (l, v) {
                return false;
            }
            j += 1;
        }
        true
    }

    /// Removes the cells of `part`, which must be a subheap.
    pub fn minus(&self, part: &Heap) -> Heap {
        let cells = self
            .cells
            .iter()
            .filter(|c| part.get(c.0).is_none())
            .copied()
            .collect();
        Heap { cells }
    }
}

/// A concrete or abstract state: a partial heap or the fault state.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeapState {
    Heap(Heap),
    Fault,
}

/// `s1 • s2`. Fault absorbs; overlapping heaps give `None` (undefined).
pub fn compose_states(s1: &HeapState, s2: &HeapState) -> Option<HeapState> {
    match (s1, s2) {
        (HeapState::Fault, _) | (_, HeapState::Fault) => Some(HeapState::Fault),
        (HeapState::Heap(a), HeapState::Heap(b)) => a.join(b).map(HeapState::Heap),
    }
}

/// An abstract primitive command instance `L(m, a, v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ApCom {
    pub method: MethodId,
    pub arg: Val,
    pub ret: Val,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Todo,
    Done,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub kind: TokenKind,
    pub ap: ApCom,
}

impl Token {
    pub fn todo(ap: ApCom) -> Self {
        Token { kind: TokenKind::Todo, ap }
    }

    pub fn done(ap: ApCom) -> Self {
        Token { kind: TokenKind::Done, ap }
    }
}

/// Finite partial map from threads to tokens.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenMap {
    entries: SmallVec<[(Tid, Token); 2]>,
}

impl TokenMap {
    pub fn new() -> Self {
        TokenMap::default()
    }

    pub fn singleton(t: Tid, tok: Token) -> Self {
        let mut m = TokenMap::new();
        m.entries.push((t, tok));
        m
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, t: Tid) -> Option<Token> {
        self.entries
            .binary_search_by_key(&t, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn entries(&self) -> &[(Tid, Token)] {
        &self.entries
    }

    /// `Δ[t : tok]`.
    pub fn with(&self, t: Tid, tok: Token) -> TokenMap {
        let mut m = self.clone();
        match m.entries.binary_search_by_key(&t, |e| e.0) {
            Ok(i) => m.entries[i].1 = tok,
            Err(i) => m.entries.insert(i, (t, tok)),
        }
        m
    }

    pub fn without(&self, t: Tid) -> TokenMap {
        let mut m = self.clone();
        if let Ok(i) = m.entries.binary_search_by_key(&t, |e| e.0) {
            m.entries.remove(i);
        }
        m
    }

    /// `Δ ⊎ Δ'`, or `None` when both hold a token for one thread.
    pub fn join(&self, other: &TokenMap) -> Option<TokenMap> {
        let mut out = self.clone();
        for &(t, tok) in &other.entries {
            match out.entries.binary_search_by_key(&t, |e| e.0) {
                Ok(_) => return None,
                Err(i) => out.entries.insert(i, (t, tok)),
            }
        }
        Some(out)
    }

    pub fn is_submap_of(&self, other: &TokenMap) -> bool {
        self.entries.iter().all(|&(t, tok)| other.get(t) == Some(tok))
    }

    pub fn minus(&self, part: &TokenMap) -> TokenMap {
        let entries = self
            .entries
            .iter()
            .filter(|e| part.get(e.0).is_none())
            .copied()
            .collect();
        TokenMap { entries }
    }
}

/// `Δ1 ⊎ Δ2`; `None` stands for undefined.
pub fn compose_tokens(d1: &TokenMap, d2: &TokenMap) -> Option<TokenMap> {
    d1.join(d2)
}

/// One (concrete state, abstract state, tokens) configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World {
    pub conc: Heap,
    pub abs: Heap,
    pub toks: TokenMap,
}

impl World {
    pub fn new(conc: Heap, abs: Heap, toks: TokenMap) -> Self {
        World { conc, abs, toks }
    }

    /// The triple of nowhere-defined maps.
    pub fn empty() -> Self {
        World::default()
    }

    pub fn is_empty(&self) -> bool {
        self.conc.is_empty() && self.abs.is_empty() && self.toks.is_empty()
    }

    /// Componentwise composition; `None` if any component is undefined.
    pub fn join(&self, other: &World) -> Option<World> {
        Some(World {
            conc: self.conc.join(&other.conc)?,
            abs: self.abs.join(&other.abs)?,
            toks: self.toks.join(&other.toks)?,
        })
    }

    pub fn is_subworld_of(&self, other: &World) -> bool {
        self.conc.is_subheap_of(&other.conc)
            && self.abs.is_subheap_of(&other.abs)
            && self.toks.is_submap_of(&other.toks)
    }

    pub fn minus(&self, part: &World) -> World {
        World {
            conc: self.conc.minus(&part.conc),
            abs: self.abs.minus(&part.abs),
            toks: self.toks.minus(&part.toks),
        }
    }
}

/// A declared location with the values it may hold in enumerated universes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocDecl {
    pub name: String,
    pub values: Vec<Val>,
    /// When false, every enumerated heap holds this location.
    pub optional: bool,
}

/// Declared locations of one heap side.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LocTable {
    decls: Vec<LocDecl>,
    index: HashMap<String, Loc>,
}

impl LocTable {
    pub fn new(decls: Vec<LocDecl>) -> Self {
        let index = decls
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), Loc(i as u16)))
            .collect();
        LocTable { decls, index }
    }

    pub fn lookup(&self, name: &str) -> Option<Loc> {
        self.index.get(name).copied()
    }

    pub fn name(&self, l: Loc) -> &str {
        &self.decls[l.0 as usize].name
    }

    pub fn decls(&self) -> &[LocDecl] {
        &self.decls
    }

    pub fn len(&self) -> usize {
        self.decls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    /// Number of heaps in the enumerated universe of this side.
    pub fn heap_count(&self) -> u128 {
        self.decls
            .iter()
            .map(|d| d.values.len() as u128 + u128::from(d.optional))
            .product()
    }

    /// All heaps over the declared locations, in lexicographic order.
    pub fn enumerate_heaps(&self) -> Vec<Heap> {
        let mut out = vec![Heap::new()];
        for (i, d) in self.decls.iter().enumerate() {
            let l = Loc(i as u16);
            let mut next = Vec::with_capacity(out.len() * (d.values.len() + 1));
            for h in &out {
                if d.optional {
                    next.push(h.clone());
                }
                for &v in &d.values {
                    let mut h2 = h.clone();
                    h2.set(l, v);
                    next.push(h2);
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    pub fn render(&self, h: &Heap) -> String {
        let cells: Vec<String> = h
            .cells()
            .iter()
            .map(|&(l, v)| format!("{}:{}", self.name(l), v))
            .collect();
        format!("[{}]", cells.join(", "))
    }
}

/// Name and argument/return domains of a library method.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSig {
    pub name: String,
    pub args: Vec<Val>,
    pub rets: Vec<Val>,
}

/// The finite domains a model declares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domains {
    pub vals: Vec<Val>,
    pub modulus: Option<Val>,
    pub threads: Tid,
    pub conc: LocTable,
    pub abs: LocTable,
    pub methods: Vec<MethodSig>,
}

impl Domains {
    pub fn tids(&self) -> impl Iterator<Item = Tid> {
        1..=self.threads
    }

    pub fn method_id(&self, name: &str) -> Option<MethodId> {
        self.methods
            .iter()
            .position(|m| m.name == name)
            .map(|i| MethodId(i as u16))
    }

    pub fn method(&self, m: MethodId) -> &MethodSig {
        &self.methods[m.0 as usize]
    }

    /// Every `L(m, a, v)` over the declared argument and return domains.
    pub fn token_alphabet(&self) -> Vec<ApCom> {
        let mut out = Vec::new();
        for (i, sig) in self.methods.iter().enumerate() {
            for &arg in &sig.args {
                for &ret in &sig.rets {
                    out.push(ApCom { method: MethodId(i as u16), arg, ret });
                }
            }
        }
        out
    }

    /// Possible token-map entries of one thread, `None` meaning absent.
    fn thread_token_choices(&self) -> Vec<Option<Token>> {
        let mut out = vec![None];
        for ap in self.token_alphabet() {
            out.push(Some(Token::todo(ap)));
            out.push(Some(Token::done(ap)));
        }
        out
    }

    pub fn token_map_count(&self) -> u128 {
        let per = 1 + 2 * self.token_alphabet().len() as u128;
        per.pow(u32::from(self.threads))
    }

    pub fn enumerate_token_maps(&self) -> Vec<TokenMap> {
        let choices = self.thread_token_choices();
        let mut out = vec![TokenMap::new()];
        for t in self.tids() {
            let mut next = Vec::with_capacity(out.len() * choices.len());
            for m in &out {
                for c in &choices {
                    next.push(match c {
                        None => m.clone(),
                        Some(tok) => m.with(t, *tok),
                    });
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    pub fn world_count(&self) -> u128 {
        self.conc.heap_count() * self.abs.heap_count() * self.token_map_count()
    }

    pub fn render_token(&self, tok: &Token) -> String {
        let kind = match tok.kind {
            TokenKind::Todo => "todo",
            TokenKind::Done => "done",
        };
        let sig = self.method(tok.ap.method);
        format!("{}({}, {}, {})", kind, sig.name, tok.ap.arg, tok.ap.ret)
    }

    pub fn render_tokens(&self, d: &TokenMap) -> String {
        let parts: Vec<String> = d
            .entries()
            .iter()
            .map(|(t, tok)| format!("{}:{}", t, self.render_token(tok)))
            .collect();
        format!("[{}]", parts.join(", "))
    }

    pub fn render_world(&self, w: &World) -> String {
        format!(
            "({}, {}, {})",
            self.conc.render(&w.conc),
            self.abs.render(&w.abs),
            self.render_tokens(&w.toks)
        )
    }
}

/// The full universe of worlds over the declared domains, sorted.
pub fn enumerate_worlds(domains: &Domains, cap: u128) -> Result<Vec<World>, StateError> {
    let size = domains.world_count();
    if size > cap {
        return Err(StateError::UniverseTooLarge { size, cap });
    }
    let conc = domains.conc.enumerate_heaps();
    let abs = domains.abs.enumerate_heaps();
    let toks = domains.enumerate_token_maps();
    let mut out = Vec::with_capacity(size as usize);
    for c in &conc {
        for a in &abs {
            for d in &toks {
                out.push(World::new(c.clone(), a.clone(), d.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

impl fmt::Display for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (l, v)) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "#{}:{}", l.0, v)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro(locs: &[&str], vals: &[Val], threads: Tid, methods: Vec<MethodSig>) -> Domains {
        let decls = |optional| {
            locs.iter()
                .map(|n| LocDecl { name: n.to_string(), values: vals.to_vec(), optional })
                .collect::<Vec<_>>()
        };
        Domains {
            vals: vals.to_vec(),
            modulus: None,
            threads,
            conc: LocTable::new(decls(true)),
            abs: LocTable::new(decls(true)),
            methods,
        }
    }

    #[test]
    fn compose_disjoint_heaps() {
        let a = HeapState::Heap(Heap::singleton(Loc(0), 5));
        let b = HeapState::Heap(Heap::singleton(Loc(1), 7));
        let c = compose_states(&a, &b).unwrap();
        assert_eq!(c, HeapState::Heap(Heap::from_cells([(Loc(0), 5), (Loc(1), 7)])));
    }

    #[test]
    fn fault_absorbs() {
        let a = HeapState::Heap(Heap::singleton(Loc(0), 5));
        assert_eq!(compose_states(&HeapState::Fault, &a), Some(HeapState::Fault));
        assert_eq!(compose_states(&a, &HeapState::Fault), Some(HeapState::Fault));
    }

    #[test]
    fn overlapping_heaps_are_undefined() {
        let a = HeapState::Heap(Heap::singleton(Loc(0), 5));
        let b = HeapState::Heap(Heap::singleton(Loc(0), 6));
        assert_eq!(compose_states(&a, &b), None);
    }

    #[test]
    fn token_union() {
        let ap = ApCom { method: MethodId(0), arg: 1, ret: 1 };
        let bp = ApCom { method: MethodId(0), arg: 0, ret: 0 };
        let t1 = TokenMap::singleton(1, Token::todo(ap));
        assert_eq!(compose_tokens(&TokenMap::new(), &t1), Some(t1.clone()));
        let both = compose_tokens(&t1, &TokenMap::singleton(2, Token::done(bp))).unwrap();
        assert_eq!(both.entries().len(), 2);
        assert_eq!(compose_tokens(&t1, &TokenMap::singleton(1, Token::done(ap))), None);
    }

    #[test]
    fn universe_counts() {
        let d = micro(&["l"], &[0], 1, vec![]);
        assert_eq!(enumerate_worlds(&d, 1000).unwrap().len(), 4);
        let e = micro(&[], &[0], 1, vec![]);
        assert_eq!(enumerate_worlds(&e, 1000).unwrap().len(), 1);
        let f = micro(&["l", "m"], &[0], 1, vec![]);
        assert_eq!(f.world_count(), 16);
        assert_eq!(
            enumerate_worlds(&f, 10),
            Err(StateError::UniverseTooLarge { size: 16, cap: 10 })
        );
    }

    #[test]
    fn universe_matches_brute_force_count() {
        let sig = MethodSig { name: "m".into(), args: vec![0], rets: vec![0, 1] };
        let d = micro(&["x"], &[0, 1], 2, vec![sig]);
        let worlds = enumerate_worlds(&d, 1 << 20).unwrap();
        // 3 concrete heaps, 3 abstract heaps, (1 + 2*2)^2 token maps.
        assert_eq!(worlds.len(), 3 * 3 * 25);
        let mut dedup = worlds.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), worlds.len());
    }

    #[test]
    fn subworld_and_minus_invert_join() {
        let a = World::new(Heap::singleton(Loc(0), 1), Heap::new(), TokenMap::new());
        let b = World::new(Heap::singleton(Loc(1), 2), Heap::singleton(Loc(0), 3), TokenMap::new());
        let ab = a.join(&b).unwrap();
        assert!(a.is_subworld_of(&ab));
        assert_eq!(ab.minus(&a), b);
    }
}
