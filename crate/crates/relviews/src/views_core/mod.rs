//! The generic relational view monoid interface, the LP relation and the
//! verdict types shared by both instantiations.

pub mod vassn;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::command_lang::{EvalError, Interp, Prim, StepError, TransformerTable};
use crate::state_model::{enumerate_worlds, ApCom, Domains, Heap, StateError, Tid, Token, TokenKind, TokenMap, World};
pub use vassn::{Alt, FragMatcher, FragSet, VAssn, VAssnError, VCtx};

/// The atomic abstract command of one method, parametrised by its argument
/// and return variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsSpec {
    pub arg_var: String,
    pub ret_var: String,
    pub prim: Prim,
}

/// Domains plus abstract method specifications: everything needed to run
/// concrete primitives and abstract primitive commands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Semantics {
    pub domains: Domains,
    pub specs: Vec<AbsSpec>,
}

impl Semantics {
    pub fn conc_table(&self) -> TransformerTable<'_> {
        TransformerTable::new(&self.domains.conc, self.domains.modulus)
    }

    pub fn abs_table(&self) -> TransformerTable<'_> {
        TransformerTable::new(&self.domains.abs, self.domains.modulus)
    }

    /// The ground abstract primitive `L(m, a, v)`.
    pub fn apcom_prim(&self, ap: ApCom) -> Prim {
        let spec = &self.specs[ap.method.0 as usize];
        let mut i = Interp::new();
        i.insert(spec.arg_var.clone(), ap.arg);
        i.insert(spec.ret_var.clone(), ap.ret);
        spec.prim.substitute(&i)
    }

    /// `⟦A⟧t(Σ)`; faults and undefined reads yield no successor.
    pub fn run_apcom(&self, ap: ApCom, t: Tid, abs: &Heap) -> Vec<Heap> {
        self.abs_table()
            .apply(&self.apcom_prim(ap), t, abs, &Interp::new())
            .unwrap_or_default()
    }

    /// `⟦α⟧t(σ)` for a ground primitive.
    pub fn run_conc(&self, alpha: &Prim, t: Tid, conc: &Heap) -> Result<Vec<Heap>, ActionFailure> {
        self.conc_table().apply(alpha, t, conc, &Interp::new()).map_err(|e| match e {
            StepError::Fault(detail) => ActionFailure::FaultReachable {
                prim: alpha.to_string(),
                state: self.domains.conc.render(conc),
                detail,
            },
            StepError::Model(e) => ActionFailure::Eval(e),
        })
    }
}

/// One LP step: some thread's todo token is consumed by running its
/// abstract command.
pub fn lp_step(sem: &Semantics, abs: &Heap, toks: &TokenMap) -> Vec<(Heap, TokenMap)> {
    let mut out = Vec::new();
    for &(t, tok) in toks.entries() {
        if tok.kind != TokenKind::Todo {
            continue;
        }
        let next = toks.with(t, Token::done(tok.ap));
        for a2 in sem.run_apcom(tok.ap, t, abs) {
            out.push((a2, next.clone()));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Reflexive-transitive closure of `lp_step`, sorted.
pub fn lp_star(sem: &Semantics, abs: &Heap, toks: &TokenMap) -> Vec<(Heap, TokenMap)> {
    let mut seen: BTreeSet<(Heap, TokenMap)> = BTreeSet::new();
    let mut frontier = vec![(abs.clone(), toks.clone())];
    seen.insert((abs.clone(), toks.clone()));
    while let Some((a, d)) = frontier.pop() {
        for n in lp_step(sem, &a, &d) {
            if seen.insert(n.clone()) {
                frontier.push(n);
            }
        }
    }
    seen.into_iter().collect()
}

/// A witness that an action judgement fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionCounterexample {
    /// Description of the frame under which the failure occurs.
    pub frame: String,
    /// `(σ, Σ, Δ)` before the step.
    pub pre: World,
    /// `σ′`.
    pub post: Heap,
    pub reason: String,
}

impl ActionCounterexample {
    pub fn render(&self, d: &Domains) -> String {
        format!(
            "frame {}; pre-world {}; post-state {}; {}",
            self.frame,
            d.render_world(&self.pre),
            d.conc.render(&self.post),
            self.reason
        )
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionFailure {
    #[error("action judgement fails: {}", .0.reason)]
    Counterexample(Box<ActionCounterexample>),
    #[error("fault reachable: `{prim}` in state {state}: {detail}")]
    FaultReachable { prim: String, state: String, detail: String },
    #[error("`{prim}` is not local: {detail}")]
    LocalityViolation { prim: String, detail: String },
    #[error("views use different rely or guarantee relations")]
    RelationMismatch,
    #[error(transparent)]
    Universe(#[from] StateError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Outcome of a repartitioning implication check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ImplVerdict {
    Holds,
    Fails { frame: String, world: World, note: String },
    /// The monoid's sufficient condition does not apply.
    NotEstablished(String),
}

impl ImplVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ImplVerdict::Holds)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ViewError {
    #[error(transparent)]
    Assertion(#[from] VAssnError),
    #[error("assertion is not stable under the rely: {0}")]
    StabilityViolation(String),
    #[error("disjunction of views with different rely or guarantee relations")]
    DisjoinMismatch,
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error(transparent)]
    Universe(#[from] StateError),
}

/// A relational view monoid together with its reification, action
/// judgement and repartitioning implication.
pub trait ViewMonoid: Sync {
    type View: Clone + fmt::Debug + PartialEq + Send + Sync;

    fn semantics(&self) -> &Semantics;
    fn unit(&self) -> Self::View;
    fn compose(&self, p: &Self::View, q: &Self::View) -> Self::View;
    fn disjoin(&self, p: &Self::View, q: &Self::View) -> Result<Self::View, ViewError>;
    /// Sorted, deduplicated reification.
    fn reify(&self, p: &Self::View) -> Vec<World>;
    /// `t ⊩ α {p}{q}` for a ground primitive `α`.
    fn check_action(&self, t: Tid, alpha: &Prim, p: &Self::View, q: &Self::View) -> Result<(), ActionFailure>;
    /// `p ⇛ q`.
    fn repart_implies(&self, p: &Self::View, q: &Self::View) -> Result<ImplVerdict, ActionFailure>;
    /// `⟦ρ⟧i` for thread `t`.
    fn eval_vassn(&self, rho: &VAssn, i: &Interp, t: Tid) -> Result<Self::View, ViewError>;
    /// The empty disjunction.
    fn empty(&self) -> Self::View;
    /// Whether `⌊q ∗ r⌋` and `⌊p ∗ r⌋` coincide for every frame `r` once the
    /// token of thread `t` is removed. `Err` carries a witness.
    fn same_modulo_token(&self, q: &Self::View, p: &Self::View, t: Tid) -> Result<(), String>;
}

/// The finite world universe with an index from worlds to positions.
#[derive(Clone, Debug)]
pub struct Universe {
    pub worlds: Vec<World>,
    index: HashMap<World, u32>,
}

impl Universe {
    pub fn new(domains: &Domains, cap: u128) -> Result<Self, StateError> {
        Ok(Self::from_worlds(enumerate_worlds(domains, cap)?))
    }

    pub fn from_worlds(mut worlds: Vec<World>) -> Self {
        worlds.sort();
        worlds.dedup();
        let index = worlds.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        Universe { worlds, index }
    }

    pub fn id(&self, w: &World) -> Option<u32> {
        self.index.get(w).copied()
    }

    pub fn get(&self, id: u32) -> &World {
        &self.worlds[id as usize]
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command_lang::{Expr, LocExpr};
    use crate::state_model::{Loc, LocDecl, LocTable, MethodId, MethodSig};

    /// Abstract counter `K` with `inc(a, r)`: `<K := K + a; assume(K = r)>`.
    pub(crate) fn counter() -> Semantics {
        let k = LocExpr::named("K");
        let prim = Prim::Atomic(vec![
            Prim::Store(k.clone(), Expr::add(Expr::read(k.clone()), Expr::var("a"))),
            Prim::Assume(Expr::eq(Expr::read(k), Expr::var("r"))),
        ]);
        Semantics {
            domains: Domains {
                vals: vec![0, 1, 2, 3],
                modulus: Some(4),
                threads: 2,
                conc: LocTable::new(vec![]),
                abs: LocTable::new(vec![LocDecl { name: "K".into(), values: vec![0, 1, 2, 3], optional: true }]),
                methods: vec![MethodSig { name: "inc".into(), args: vec![1], rets: vec![0, 1, 2, 3] }],
            },
            specs: vec![AbsSpec { arg_var: "a".into(), ret_var: "r".into(), prim }],
        }
    }

    fn inc(r: i32) -> ApCom {
        ApCom { method: MethodId(0), arg: 1, ret: r }
    }

    fn k(v: i32) -> Heap {
        Heap::singleton(Loc(0), v)
    }

    #[test]
    fn lp_step_examples() {
        let sem = counter();
        assert!(lp_step(&sem, &k(0), &TokenMap::new()).is_empty());
        assert!(lp_step(&sem, &k(0), &TokenMap::singleton(1, Token::done(inc(1)))).is_empty());
        let got = lp_step(&sem, &k(0), &TokenMap::singleton(1, Token::todo(inc(1))));
        assert_eq!(got, vec![(k(1), TokenMap::singleton(1, Token::done(inc(1))))]);
    }

    #[test]
    fn lp_star_examples() {
        let sem = counter();
        assert_eq!(lp_star(&sem, &k(0), &TokenMap::new()), vec![(k(0), TokenMap::new())]);
        let one = TokenMap::singleton(1, Token::todo(inc(1)));
        let mut expect = vec![(k(0), one.clone())];
        expect.extend(lp_step(&sem, &k(0), &one));
        expect.sort();
        assert_eq!(lp_star(&sem, &k(0), &one), expect);
        // Both firing orders: thread 1 then 2 needs r1 = 1, r2 = 2; the
        // reverse order needs r2 = 1, r1 = 2.
        let both = TokenMap::singleton(1, Token::todo(inc(1))).with(2, Token::todo(inc(2)));
        let star = lp_star(&sem, &k(0), &both);
        let fin = TokenMap::singleton(1, Token::done(inc(1))).with(2, Token::done(inc(2)));
        assert!(star.contains(&(k(2), fin)));
        let rev = TokenMap::singleton(1, Token::todo(inc(2))).with(2, Token::todo(inc(1)));
        let fin_rev = TokenMap::singleton(1, Token::done(inc(2))).with(2, Token::done(inc(1)));
        assert!(lp_star(&sem, &k(0), &rev).contains(&(k(2), fin_rev)));
    }

    #[test]
    fn lp_star_monotone_in_tokens() {
        let sem = counter();
        let base = TokenMap::singleton(1, Token::todo(inc(1)));
        let more = base.with(2, Token::todo(inc(2)));
        let small = lp_star(&sem, &k(0), &base);
        let big = lp_star(&sem, &k(0), &more);
        for (a, d) in small {
            let extended = d.with(2, Token::todo(inc(2)));
            assert!(big.contains(&(a, extended)));
        }
    }
}
