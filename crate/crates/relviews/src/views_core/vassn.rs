//! View assertions `π` and their evaluation into local/shared alternatives.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::command_lang::{eval_expr, EvalCtx, EvalError, Expr, Interp, LocExpr};
use crate::state_model::{ApCom, Domains, Heap, Loc, LocTable, MethodId, Tid, Token, TokenKind, TokenMap, Val, World};

/// Heap-, token- and sharing-level view assertions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VAssn {
    Emp,
    /// Any fragment; allowed only inside `Boxed`.
    True,
    False,
    /// A pure condition over logical variables and the thread id.
    Pure(Expr),
    /// `E ↦ F` on the concrete heap.
    Pts(LocExpr, Expr),
    /// `E ⤇ F` on the abstract heap.
    APts(LocExpr, Expr),
    /// `[todo(m, a, r)]_t` or `[done(m, a, r)]_t`.
    Tok { kind: TokenKind, thread: Expr, method: MethodId, arg: Expr, ret: Expr },
    /// A constraint on the shared part of the state.
    Boxed(Box<VAssn>),
    Star(Vec<VAssn>),
    Or(Vec<VAssn>),
    Exists(String, Box<VAssn>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VAssnError {
    #[error("`true` is only allowed inside a boxed assertion")]
    LocalTrue,
    #[error("boxed assertions may not be nested")]
    NestedBox,
    #[error("boxed assertions are not supported by this monoid")]
    BoxUnsupported,
    #[error("an upward-closed fragment (`true`) is not allowed in an action")]
    UpwardAction,
    #[error("location `{0}` is not declared")]
    UnknownLocation(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl VAssn {
    pub fn star(parts: Vec<VAssn>) -> VAssn {
        let mut out = Vec::new();
        for p in parts {
            match p {
                VAssn::Star(inner) => out.extend(inner),
                VAssn::Emp => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => VAssn::Emp,
            1 => out.pop().unwrap(),
            _ => VAssn::Star(out),
        }
    }

    pub fn or(parts: Vec<VAssn>) -> VAssn {
        let mut out = Vec::new();
        for p in parts {
            match p {
                VAssn::Or(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            VAssn::Or(out)
        }
    }

    pub fn boxed(p: VAssn) -> VAssn {
        VAssn::Boxed(Box::new(p))
    }

    pub fn pts(l: LocExpr, e: Expr) -> VAssn {
        VAssn::Pts(l, e)
    }

    pub fn exists(x: &str, p: VAssn) -> VAssn {
        VAssn::Exists(x.to_string(), Box::new(p))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            VAssn::Emp | VAssn::True | VAssn::False => {}
            VAssn::Pure(e) => e.free_vars(out),
            VAssn::Pts(l, e) | VAssn::APts(l, e) => {
                l.free_vars(out);
                e.free_vars(out);
            }
            VAssn::Tok { thread, arg, ret, .. } => {
                thread.free_vars(out);
                arg.free_vars(out);
                ret.free_vars(out);
            }
            VAssn::Boxed(p) => p.collect_vars(out),
            VAssn::Star(ps) | VAssn::Or(ps) => ps.iter().for_each(|p| p.collect_vars(out)),
            VAssn::Exists(x, p) => {
                let mut inner = BTreeSet::new();
                p.collect_vars(&mut inner);
                inner.remove(x);
                out.extend(inner);
            }
        }
    }

    pub fn has_box(&self) -> bool {
        match self {
            VAssn::Boxed(_) => true,
            VAssn::Star(ps) | VAssn::Or(ps) => ps.iter().any(VAssn::has_box),
            VAssn::Exists(_, p) => p.has_box(),
            _ => false,
        }
    }

    /// Substitutes values for free occurrences of logical variables.
    pub fn substitute(&self, i: &Interp) -> VAssn {
        match self {
            VAssn::Emp | VAssn::True | VAssn::False => self.clone(),
            VAssn::Pure(e) => VAssn::Pure(e.substitute(i)),
            VAssn::Pts(l, e) => VAssn::Pts(l.substitute(i), e.substitute(i)),
            VAssn::APts(l, e) => VAssn::APts(l.substitute(i), e.substitute(i)),
            VAssn::Tok { kind, thread, method, arg, ret } => VAssn::Tok {
                kind: *kind,
                thread: thread.substitute(i),
                method: *method,
                arg: arg.substitute(i),
                ret: ret.substitute(i),
            },
            VAssn::Boxed(p) => VAssn::Boxed(Box::new(p.substitute(i))),
            VAssn::Star(ps) => VAssn::Star(ps.iter().map(|p| p.substitute(i)).collect()),
            VAssn::Or(ps) => VAssn::Or(ps.iter().map(|p| p.substitute(i)).collect()),
            VAssn::Exists(x, p) => {
                let mut inner = i.clone();
                inner.remove(x);
                VAssn::Exists(x.clone(), Box::new(p.substitute(&inner)))
            }
        }
    }
}

/// A set of world fragments. An upward entry stands for every world that
/// contains the fragment; an exact entry for that fragment alone.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FragSet {
    pub entries: Vec<(World, bool)>,
}

impl FragSet {
    fn normalize(mut self) -> FragSet {
        self.entries.sort();
        self.entries.dedup();
        // An upward entry subsumes exact entries that contain its fragment.
        let ups: Vec<World> = self.entries.iter().filter(|e| e.1).map(|e| e.0.clone()).collect();
        if !ups.is_empty() {
            self.entries.retain(|(w, up)| *up || !ups.iter().any(|u| u.is_subworld_of(w)));
        }
        self
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(|e| !e.1)
    }

    pub fn exact_worlds(&self) -> impl Iterator<Item = &World> {
        self.entries.iter().filter(|e| !e.1).map(|e| &e.0)
    }
}

/// The cells and threads a fragment occupies.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Footprint {
    conc: Vec<Loc>,
    abs: Vec<Loc>,
    toks: Vec<Tid>,
}

pub(crate) fn footprint(w: &World) -> Footprint {
    Footprint {
        conc: w.conc.domain().collect(),
        abs: w.abs.domain().collect(),
        toks: w.toks.entries().iter().map(|e| e.0).collect(),
    }
}

/// `s` restricted to `fp`, or `None` if `s` lacks part of it.
pub(crate) fn restrict(s: &World, fp: &Footprint) -> Option<World> {
    let mut conc = Heap::new();
    for &l in &fp.conc {
        conc.set(l, s.conc.get(l)?);
    }
    let mut abs = Heap::new();
    for &l in &fp.abs {
        abs.set(l, s.abs.get(l)?);
    }
    let mut toks = TokenMap::new();
    for &t in &fp.toks {
        toks = toks.with(t, s.toks.get(t)?);
    }
    Some(World::new(conc, abs, toks))
}

/// Membership test for a `FragSet`, indexed by footprint.
pub struct FragMatcher {
    exact: HashSet<World>,
    upward: Vec<(Footprint, HashSet<World>)>,
}

impl FragMatcher {
    pub fn new(fs: &FragSet) -> Self {
        let mut exact = HashSet::new();
        let mut groups: HashMap<Footprint, HashSet<World>> = HashMap::new();
        for (w, up) in &fs.entries {
            if *up {
                groups.entry(footprint(w)).or_default().insert(w.clone());
            } else {
                exact.insert(w.clone());
            }
        }
        let mut upward: Vec<_> = groups.into_iter().collect();
        upward.sort_by_key(|(fp, _)| (fp.conc.len() + fp.abs.len() + fp.toks.len(), fp.conc.clone()));
        FragMatcher { exact, upward }
    }

    pub fn matches(&self, s: &World) -> bool {
        if self.exact.contains(s) {
            return true;
        }
        self.upward
            .iter()
            .any(|(fp, set)| restrict(s, fp).is_some_and(|r| set.contains(&r)))
    }
}

/// One way a view assertion can hold: an exact local world together with
/// constraints that the shared world must satisfy.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Alt {
    pub local: World,
    pub shared: Vec<FragSet>,
}

/// Evaluation context for view assertions.
pub struct VCtx<'a> {
    pub domains: &'a Domains,
    pub tid: Tid,
}

impl<'a> VCtx<'a> {
    fn ectx<'b>(&'b self, locs: &'b LocTable, i: &'b Interp) -> EvalCtx<'b> {
        EvalCtx { locs, heap: None, interp: i, tid: self.tid, modulus: self.domains.modulus }
    }

    fn eval(&self, e: &Expr, i: &Interp) -> Result<Val, VAssnError> {
        Ok(eval_expr(e, &self.ectx(&self.domains.conc, i))?)
    }

    /// The singleton fragment a cell or token assertion denotes, if any.
    fn atom(&self, p: &VAssn, i: &Interp) -> Result<Option<World>, VAssnError> {
        let cell = |locs: &LocTable, l: &LocExpr, e: &Expr| -> Result<Option<Heap>, VAssnError> {
            // An array index outside the declared cells denotes no fragment,
            // like an out-of-range value; an undeclared name is an error.
            let loc = match l.resolve(&self.ectx(locs, i))? {
                Some(loc) => loc,
                None if l.index.is_some() => return Ok(None),
                None => return Err(VAssnError::UnknownLocation(l.to_string())),
            };
            let v = self.eval(e, i)?;
            Ok(locs.decls()[loc.0 as usize].values.contains(&v).then(|| Heap::singleton(loc, v)))
        };
        Ok(match p {
            VAssn::Pts(l, e) => cell(&self.domains.conc, l, e)?.map(|h| World::new(h, Heap::new(), TokenMap::new())),
            VAssn::APts(l, e) => cell(&self.domains.abs, l, e)?.map(|h| World::new(Heap::new(), h, TokenMap::new())),
            VAssn::Tok { kind, thread, method, arg, ret } => {
                let t = self.eval(thread, i)?;
                let a = self.eval(arg, i)?;
                let r = self.eval(ret, i)?;
                let sig = self.domains.method(*method);
                let ok = t >= 1
                    && t <= Val::from(self.domains.threads)
                    && sig.args.contains(&a)
                    && sig.rets.contains(&r);
                ok.then(|| {
                    let ap = ApCom { method: *method, arg: a, ret: r };
                    let tok = Token { kind: *kind, ap };
                    World::new(Heap::new(), Heap::new(), TokenMap::singleton(t as Tid, tok))
                })
            }
            _ => unreachable!("not an atom"),
        })
    }

    /// Alternatives for `p` at the local level.
    pub fn alts(&self, p: &VAssn, i: &Interp) -> Result<Vec<Alt>, VAssnError> {
        let mut out = self.alts_raw(p, i)?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn alts_raw(&self, p: &VAssn, i: &Interp) -> Result<Vec<Alt>, VAssnError> {
        let unit = || Alt { local: World::empty(), shared: vec![] };
        Ok(match p {
            VAssn::Emp => vec![unit()],
            VAssn::True => return Err(VAssnError::LocalTrue),
            VAssn::False => vec![],
            VAssn::Pure(e) => {
                if self.eval(e, i)? != 0 {
                    vec![unit()]
                } else {
                    vec![]
                }
            }
            VAssn::Pts(..) | VAssn::APts(..) | VAssn::Tok { .. } => match self.atom(p, i)? {
                Some(w) => vec![Alt { local: w, shared: vec![] }],
                None => vec![],
            },
            VAssn::Boxed(q) => {
                let fs = FragSet { entries: self.frags(q, i)? }.normalize();
                vec![Alt { local: World::empty(), shared: vec![fs] }]
            }
            VAssn::Star(ps) => {
                let mut acc = vec![unit()];
                for q in ps {
                    let rhs = self.alts_raw(q, i)?;
                    let mut next = Vec::new();
                    for a in &acc {
                        for b in &rhs {
                            if let Some(local) = a.local.join(&b.local) {
                                let mut shared = a.shared.clone();
                                shared.extend(b.shared.iter().cloned());
                                shared.sort();
                                shared.dedup();
                                next.push(Alt { local, shared });
                            }
                        }
                    }
                    next.sort();
                    next.dedup();
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            VAssn::Or(ps) => {
                let mut out = Vec::new();
                for q in ps {
                    out.extend(self.alts_raw(q, i)?);
                }
                out
            }
            VAssn::Exists(x, q) => {
                let mut out = Vec::new();
                let mut j = i.clone();
                for &v in &self.domains.vals {
                    j.insert(x.clone(), v);
                    out.extend(self.alts_raw(q, &j)?);
                }
                out
            }
        })
    }

    /// Fragments denoted by `p` inside a box.
    pub fn frags(&self, p: &VAssn, i: &Interp) -> Result<Vec<(World, bool)>, VAssnError> {
        let mut out = self.frags_raw(p, i)?;
        out.sort();
        out.dedup();
        Ok(out)
    }

    fn frags_raw(&self, p: &VAssn, i: &Interp) -> Result<Vec<(World, bool)>, VAssnError> {
        Ok(match p {
            VAssn::Emp => vec![(World::empty(), false)],
            VAssn::True => vec![(World::empty(), true)],
            VAssn::False => vec![],
            VAssn::Pure(e) => {
                if self.eval(e, i)? != 0 {
                    vec![(World::empty(), false)]
                } else {
                    vec![]
                }
            }
            VAssn::Pts(..) | VAssn::APts(..) | VAssn::Tok { .. } => {
                self.atom(p, i)?.map(|w| (w, false)).into_iter().collect()
            }
            VAssn::Boxed(_) => return Err(VAssnError::NestedBox),
            VAssn::Star(ps) => {
                let mut acc = vec![(World::empty(), false)];
                for q in ps {
                    let rhs = self.frags(q, i)?;
                    let mut next = Vec::new();
                    for (a, ua) in &acc {
                        for (b, ub) in &rhs {
                            if let Some(w) = a.join(b) {
                                next.push((w, *ua || *ub));
                            }
                        }
                    }
                    next.sort();
                    next.dedup();
                    acc = next;
                    if acc.is_empty() {
                        break;
                    }
                }
                acc
            }
            VAssn::Or(ps) => {
                let mut out = Vec::new();
                for q in ps {
                    out.extend(self.frags_raw(q, i)?);
                }
                out
            }
            VAssn::Exists(x, q) => {
                let mut out = Vec::new();
                let mut j = i.clone();
                for &v in &self.domains.vals {
                    j.insert(x.clone(), v);
                    out.extend(self.frags_raw(q, &j)?);
                }
                out
            }
        })
    }
}

fn join_list<T: fmt::Display>(xs: &[T], sep: &str) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for VAssn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VAssn::Emp => write!(f, "emp"),
            VAssn::True => write!(f, "true"),
            VAssn::False => write!(f, "false"),
            VAssn::Pure(e) => write!(f, "{e}"),
            VAssn::Pts(l, e) => write!(f, "&{l} |-> {e}"),
            VAssn::APts(l, e) => write!(f, "&{l} |=> {e}"),
            VAssn::Tok { kind, thread, method, arg, ret } => {
                let k = match kind {
                    TokenKind::Todo => "todo",
                    TokenKind::Done => "done",
                };
                write!(f, "[{k}(#{}, {arg}, {ret})]_{thread}", method.0)
            }
            VAssn::Boxed(p) => write!(f, "[[{p}]]"),
            VAssn::Star(ps) => write!(f, "({})", join_list(ps, " * ")),
            VAssn::Or(ps) => write!(f, "({})", join_list(ps, " \\/ ")),
            VAssn::Exists(x, p) => write!(f, "(exists {x}. {p})"),
        }
    }
}

/// Groups `(local, shared id)` pairs by local world.
pub fn group_by_local(pairs: impl IntoIterator<Item = (World, u32)>) -> BTreeMap<World, Vec<u32>> {
    let mut out: BTreeMap<World, Vec<u32>> = BTreeMap::new();
    for (l, s) in pairs {
        out.entry(l).or_default().push(s);
    }
    for v in out.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_model::{LocDecl, MethodSig};

    fn domains() -> Domains {
        let d = |n: &str| LocDecl { name: n.into(), values: vec![0, 1], optional: true };
        Domains {
            vals: vec![0, 1],
            modulus: Some(2),
            threads: 2,
            conc: LocTable::new(vec![d("x"), d("y")]),
            abs: LocTable::new(vec![d("X")]),
            methods: vec![MethodSig { name: "m".into(), args: vec![0], rets: vec![0, 1] }],
        }
    }

    fn x() -> LocExpr {
        LocExpr::named("x")
    }

    #[test]
    fn star_splits_local_heap() {
        let d = domains();
        let cx = VCtx { domains: &d, tid: 1 };
        let p = VAssn::star(vec![VAssn::pts(x(), Expr::Const(1)), VAssn::pts(LocExpr::named("y"), Expr::Const(0))]);
        let alts = cx.alts(&p, &Interp::new()).unwrap();
        assert_eq!(alts.len(), 1);
        assert_eq!(alts[0].local.conc, Heap::from_cells([(Loc(0), 1), (Loc(1), 0)]));
        let clash = VAssn::star(vec![VAssn::pts(x(), Expr::Const(1)), VAssn::pts(x(), Expr::Const(1))]);
        assert!(cx.alts(&clash, &Interp::new()).unwrap().is_empty());
    }

    #[test]
    fn exists_is_finite_disjunction() {
        let d = domains();
        let cx = VCtx { domains: &d, tid: 1 };
        let p = VAssn::exists("V", VAssn::pts(x(), Expr::var("V")));
        assert_eq!(cx.alts(&p, &Interp::new()).unwrap().len(), 2);
    }

    #[test]
    fn local_true_and_nested_boxes_rejected() {
        let d = domains();
        let cx = VCtx { domains: &d, tid: 1 };
        assert_eq!(cx.alts(&VAssn::True, &Interp::new()), Err(VAssnError::LocalTrue));
        let nested = VAssn::boxed(VAssn::boxed(VAssn::Emp));
        assert_eq!(cx.alts(&nested, &Interp::new()), Err(VAssnError::NestedBox));
    }

    #[test]
    fn upward_fragments_match_supersets() {
        let d = domains();
        let cx = VCtx { domains: &d, tid: 1 };
        let p = VAssn::star(vec![VAssn::True, VAssn::pts(x(), Expr::Const(1))]);
        let fs = FragSet { entries: cx.frags(&p, &Interp::new()).unwrap() }.normalize();
        let m = FragMatcher::new(&fs);
        let w = |cells: &[(u16, Val)]| {
            World::new(Heap::from_cells(cells.iter().map(|&(l, v)| (Loc(l), v))), Heap::new(), TokenMap::new())
        };
        assert!(m.matches(&w(&[(0, 1)])));
        assert!(m.matches(&w(&[(0, 1), (1, 0)])));
        assert!(!m.matches(&w(&[(0, 0), (1, 0)])));
        assert!(!m.matches(&w(&[(1, 1)])));
    }

    #[test]
    fn token_literal_pins_thread() {
        let d = domains();
        let cx = VCtx { domains: &d, tid: 2 };
        let p = VAssn::Tok {
            kind: TokenKind::Todo,
            thread: Expr::Tid,
            method: MethodId(0),
            arg: Expr::Const(0),
            ret: Expr::Const(1),
        };
        let alts = cx.alts(&p, &Interp::new()).unwrap();
        assert_eq!(alts[0].local.toks.get(2).map(|t| t.kind), Some(TokenKind::Todo));
        let bad = VAssn::Tok { kind: TokenKind::Todo, thread: Expr::Tid, method: MethodId(0), arg: Expr::Const(1), ret: Expr::Const(1) };
        assert!(cx.alts(&bad, &Interp::new()).unwrap().is_empty());
    }
}
