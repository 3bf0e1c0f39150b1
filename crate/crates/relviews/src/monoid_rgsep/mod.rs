//! The rely/guarantee-with-separation monoid: views are stable predicates
//! over (local, shared) world pairs together with a rely and a guarantee.

pub mod rel;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::command_lang::{Interp, Prim};
use crate::state_model::{ApCom, Heap, Loc, LocTable, Tid, World};
use crate::views_core::vassn::{footprint, restrict, Footprint};
use crate::views_core::{
    lp_star, ActionCounterexample, ActionFailure, FragMatcher, FragSet, ImplVerdict, Semantics, Universe, VAssn,
    VAssnError, VCtx, ViewError, ViewMonoid,
};
pub use rel::Rel;

/// A rely/guarantee action `π ⇝ π′` over shared fragments. `mytid` inside
/// the assertions denotes the thread performing the action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgAction {
    pub name: String,
    pub pre: VAssn,
    pub post: VAssn,
}

/// The actions of a model: thread `t` guarantees `guarantee` instantiated at
/// `t`; it relies on the guarantees and `rely_extra` actions of all other
/// threads.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RgSpec {
    pub actions: Vec<RgAction>,
    pub guarantee: Vec<String>,
    pub rely_extra: Vec<String>,
}

/// Sorted ids of shared worlds.
pub type SharedSet = Arc<Vec<u32>>;

/// A predicate grouped by local world.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pred {
    groups: BTreeMap<World, SharedSet>,
}

fn union_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

impl Pred {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (World, u32)>) -> Pred {
        let mut groups: BTreeMap<World, Vec<u32>> = BTreeMap::new();
        for (l, s) in pairs {
            groups.entry(l).or_default().push(s);
        }
        Pred {
            groups: groups
                .into_iter()
                .map(|(l, mut v)| {
                    v.sort_unstable();
                    v.dedup();
                    (l, Arc::new(v))
                })
                .collect(),
        }
    }

    fn add(&mut self, local: World, set: &SharedSet) {
        if set.is_empty() {
            return;
        }
        match self.groups.get_mut(&local) {
            Some(cur) => *cur = Arc::new(union_sorted(cur, set)),
            None => {
                self.groups.insert(local, set.clone());
            }
        }
    }

    pub fn groups(&self) -> impl Iterator<Item = (&World, &SharedSet)> {
        self.groups.iter()
    }

    pub fn contains(&self, local: &World, s: u32) -> bool {
        self.groups.get(local).is_some_and(|v| v.binary_search(&s).is_ok())
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&World, u32)> {
        self.groups.iter().flat_map(|(l, v)| v.iter().map(move |&s| (l, s)))
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn union(&self, other: &Pred) -> Pred {
        let mut out = self.clone();
        for (l, v) in &other.groups {
            out.add(l.clone(), v);
        }
        out
    }

    /// `P ∗ P′`: split the local part, share the shared part.
    pub fn star(&self, other: &Pred) -> Pred {
        let mut out = Pred::default();
        for (l1, v1) in &self.groups {
            for (l2, v2) in &other.groups {
                if let Some(l) = l1.join(l2) {
                    let both = intersect_sorted(v1, v2);
                    out.add(l, &Arc::new(both));
                }
            }
        }
        out
    }
}

/// A view of the monoid, or the inconsistent view `⊥`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RgsepView {
    Bot,
    View { pred: Pred, rely: Rel, guar: Rel },
}

impl RgsepView {
    pub fn new(pred: Pred, rely: Rel, guar: Rel) -> Self {
        RgsepView::View { pred, rely, guar }
    }

    pub fn pred(&self) -> Option<&Pred> {
        match self {
            RgsepView::Bot => None,
            RgsepView::View { pred, .. } => Some(pred),
        }
    }
}

fn bitset(n: usize, ids: &[u32]) -> Vec<u64> {
    let mut b = vec![0u64; n.div_ceil(64)];
    for &i in ids {
        b[i as usize / 64] |= 1 << (i % 64);
    }
    b
}

fn in_bits(b: &[u64], i: u32) -> bool {
    b[i as usize / 64] >> (i % 64) & 1 == 1
}

/// A pair `(s, s′)` in `rel` leaving `set`, if any.
pub fn unstable_witness(set: &[u32], rel: &Rel, n: usize) -> Option<(u32, u32)> {
    if set.is_empty() {
        return None;
    }
    let bits = bitset(n, set);
    match rel {
        Rel::All => (0..n as u32).find(|&i| !in_bits(&bits, i)).map(|out| (set[0], out)),
        Rel::Set(_) => set.iter().find_map(|&s| {
            rel.succ(s)
                .unwrap_or(&[])
                .iter()
                .find(|&&s2| !in_bits(&bits, s2))
                .map(|&s2| (s, s2))
        }),
    }
}

/// Closure of `set` under `rel`.
pub fn stabilize_set(set: &[u32], rel: &Rel, n: usize) -> Vec<u32> {
    if let Rel::All = rel {
        return if set.is_empty() { vec![] } else { (0..n as u32).collect() };
    }
    let mut bits = bitset(n, set);
    let mut stack: Vec<u32> = set.to_vec();
    while let Some(s) = stack.pop() {
        for &s2 in rel.succ(s).unwrap_or(&[]) {
            if !in_bits(&bits, s2) {
                bits[s2 as usize / 64] |= 1 << (s2 % 64);
                stack.push(s2);
            }
        }
    }
    (0..n as u32).filter(|&i| in_bits(&bits, i)).collect()
}

/// Every interpretation of `vars` over `vals`.
pub fn interpretations(vars: &BTreeSet<String>, vals: &[i32]) -> Vec<Interp> {
    let mut out = vec![Interp::new()];
    for x in vars {
        let mut next = Vec::with_capacity(out.len() * vals.len());
        for i in &out {
            for &v in vals {
                let mut j = i.clone();
                j.insert(x.clone(), v);
                next.push(j);
            }
        }
        out = next;
    }
    out
}

pub struct RgsepMonoid {
    sem: Semantics,
    universe: Universe,
    all: SharedSet,
    relies: Vec<Rel>,
    guars: Vec<Rel>,
    shared_cache: Mutex<HashMap<Vec<FragSet>, SharedSet>>,
    locality_cache: Mutex<HashMap<(Prim, Tid), Result<(), ActionFailure>>>,
    abs_locality: Mutex<Option<Result<(), ActionFailure>>>,
}

impl RgsepMonoid {
    /// Builds the shared universe and the per-thread rely and guarantee.
    pub fn new(sem: Semantics, cap: u128, spec: &RgSpec) -> Result<Self, ViewError> {
        let universe = Universe::new(&sem.domains, cap)?;
        let n = universe.len();
        let mut m = RgsepMonoid {
            all: Arc::new((0..n as u32).collect()),
            sem,
            universe,
            relies: Vec::new(),
            guars: Vec::new(),
            shared_cache: Mutex::new(HashMap::new()),
            locality_cache: Mutex::new(HashMap::new()),
            abs_locality: Mutex::new(None),
        };
        let find = |name: &String| {
            spec.actions
                .iter()
                .find(|a| &a.name == name)
                .ok_or_else(|| ViewError::UnknownAction(name.clone()))
        };
        let tids: Vec<Tid> = m.sem.domains.tids().collect();
        let mut own = Vec::new();
        let mut extra = Vec::new();
        for &t in &tids {
            let mut g = Rel::identity(n);
            for name in &spec.guarantee {
                g = g.union(&m.denote_action(find(name)?, t)?, n);
            }
            let mut e = Rel::identity(n);
            for name in &spec.rely_extra {
                e = e.union(&m.denote_action(find(name)?, t)?, n);
            }
            own.push(g);
            extra.push(e);
        }
        for (k, _) in tids.iter().enumerate() {
            let mut r = Rel::identity(n);
            for (j, _) in tids.iter().enumerate() {
                if j != k {
                    r = r.union(&own[j], n).union(&extra[j], n);
                }
            }
            m.relies.push(r);
        }
        m.guars = own;
        Ok(m)
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn rely(&self, t: Tid) -> &Rel {
        &self.relies[t as usize - 1]
    }

    pub fn guarantee(&self, t: Tid) -> &Rel {
        &self.guars[t as usize - 1]
    }

    /// The set of shared worlds containing all of `s`.
    pub fn all_shared(&self) -> SharedSet {
        self.all.clone()
    }

    /// `⟦π ⇝ π′⟧` for the action performed by thread `t`.
    pub fn denote_action(&self, a: &RgAction, t: Tid) -> Result<Rel, ViewError> {
        let cx = VCtx { domains: &self.sem.domains, tid: t };
        let mut vars = a.pre.free_vars();
        vars.extend(a.post.free_vars());
        let mut rewrites: HashMap<Footprint, HashMap<World, BTreeSet<World>>> = HashMap::new();
        for i in interpretations(&vars, &self.sem.domains.vals) {
            let pre = cx.frags(&a.pre, &i)?;
            if pre.is_empty() {
                continue;
            }
            let post = cx.frags(&a.post, &i)?;
            if pre.iter().chain(post.iter()).any(|e| e.1) {
                return Err(VAssnError::UpwardAction.into());
            }
            for (f, _) in &pre {
                let slot = rewrites.entry(footprint(f)).or_default().entry(f.clone()).or_default();
                slot.extend(post.iter().map(|e| e.0.clone()));
            }
        }
        let n = self.universe.len();
        let pairs: Vec<(u32, u32)> = (0..n as u32)
            .into_par_iter()
            .flat_map_iter(|sid| {
                let s = self.universe.get(sid);
                let mut out = Vec::new();
                for (fp, map) in &rewrites {
                    let Some(f) = restrict(s, fp) else { continue };
                    let Some(gs) = map.get(&f) else { continue };
                    let rest = s.minus(&f);
                    for g in gs {
                        if let Some(s2) = rest.join(g).and_then(|w| self.universe.id(&w)) {
                            if s2 != sid {
                                out.push((sid, s2));
                            }
                        }
                    }
                }
                out
            })
            .collect();
        Ok(Rel::from_pairs(n, pairs))
    }

    /// Shared worlds satisfying every constraint.
    fn materialize(&self, constraints: &[FragSet]) -> SharedSet {
        if constraints.is_empty() {
            return self.all.clone();
        }
        if let Some(hit) = self.shared_cache.lock().unwrap().get(constraints) {
            return hit.clone();
        }
        let matchers: Vec<FragMatcher> = constraints.iter().map(FragMatcher::new).collect();
        let exact = constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_exact())
            .min_by_key(|(_, c)| c.entries.len());
        let ids: Vec<u32> = match exact {
            Some((k, c)) => {
                let mut v: Vec<u32> = c
                    .exact_worlds()
                    .filter_map(|w| self.universe.id(w))
                    .filter(|&id| {
                        let s = self.universe.get(id);
                        matchers.iter().enumerate().all(|(j, m)| j == k || m.matches(s))
                    })
                    .collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            None => (0..self.universe.len() as u32)
                .into_par_iter()
                .filter(|&id| {
                    let s = self.universe.get(id);
                    matchers.iter().all(|m| m.matches(s))
                })
                .collect(),
        };
        let set = Arc::new(ids);
        self.shared_cache.lock().unwrap().insert(constraints.to_vec(), set.clone());
        set
    }

    /// `⟦π⟧i` as a predicate, without the stability check.
    pub fn eval_pred(&self, pi: &VAssn, i: &Interp, t: Tid) -> Result<Pred, ViewError> {
        let cx = VCtx { domains: &self.sem.domains, tid: t };
        let mut pred = Pred::default();
        for alt in cx.alts(pi, i)? {
            let set = self.materialize(&alt.shared);
            pred.add(alt.local, &set);
        }
        Ok(pred)
    }

    /// The rely-closure of a predicate, for diagnostics.
    pub fn stabilize(&self, pred: &Pred, rely: &Rel) -> Pred {
        let n = self.universe.len();
        let mut out = Pred::default();
        for (l, v) in pred.groups() {
            out.add(l.clone(), &Arc::new(stabilize_set(v, rely, n)));
        }
        out
    }

    fn render_pair(&self, l: &World, s: u32) -> String {
        let d = &self.sem.domains;
        format!("local {} shared {}", d.render_world(l), d.render_world(self.universe.get(s)))
    }

    /// Checks `stable(P, R)`.
    pub fn check_stable(&self, pred: &Pred, rely: &Rel) -> Result<(), ViewError> {
        let n = self.universe.len();
        for (l, v) in pred.groups() {
            if let Some((s, s2)) = unstable_witness(v, rely, n) {
                return Err(ViewError::StabilityViolation(format!(
                    "{} moves to shared {}",
                    self.render_pair(l, s),
                    self.sem.domains.render_world(self.universe.get(s2))
                )));
            }
        }
        Ok(())
    }

    /// Whether `⟦α⟧t` is local on the heaps of `locs`, checked against every
    /// single-cell extension (which implies all extensions by induction).
    fn locality(&self, locs: &LocTable, run: &(dyn Fn(&Heap) -> Option<Vec<Heap>> + Sync), what: &str) -> Result<(), ActionFailure> {
        let decls: Vec<_> = locs
            .decls()
            .iter()
            .map(|d| {
                let mut d = d.clone();
                d.optional = true;
                d
            })
            .collect();
        let partial = LocTable::new(decls);
        let heaps = partial.enumerate_heaps();
        let bad = heaps.par_iter().find_map_first(|h| {
            let base = run(h)?;
            for (k, d) in partial.decls().iter().enumerate() {
                let l = Loc(k as u16);
                if h.contains(l) {
                    continue;
                }
                for &v in &d.values {
                    let ext = Heap::singleton(l, v);
                    let big = h.join(&ext).expect("disjoint");
                    let mut expect: Vec<Heap> = base.iter().filter_map(|x| x.join(&ext)).collect();
                    expect.sort();
                    expect.dedup();
                    let got = run(&big).map(|mut g| {
                        g.sort();
                        g.dedup();
                        g
                    });
                    if got.as_ref() != Some(&expect) || expect.len() != base.len() {
                        return Some(format!(
                            "in {} versus {} extended by {}",
                            partial.render(h),
                            partial.render(&big),
                            partial.render(&ext)
                        ));
                    }
                }
            }
            None
        });
        match bad {
            None => Ok(()),
            Some(detail) => Err(ActionFailure::LocalityViolation { prim: what.to_string(), detail }),
        }
    }

    fn check_local_prim(&self, t: Tid, alpha: &Prim) -> Result<(), ActionFailure> {
        let key = (alpha.clone(), t);
        if let Some(r) = self.locality_cache.lock().unwrap().get(&key) {
            return r.clone();
        }
        let tt = self.sem.conc_table();
        let run = |h: &Heap| tt.apply(alpha, t, h, &Interp::new()).ok();
        let r = self.locality(&self.sem.domains.conc, &run, &alpha.to_string());
        self.locality_cache.lock().unwrap().insert(key, r.clone());
        r
    }

    /// Locality of every abstract command in the token alphabet.
    fn check_local_abstract(&self) -> Result<(), ActionFailure> {
        let mut guard = self.abs_locality.lock().unwrap();
        if let Some(r) = guard.as_ref() {
            return r.clone();
        }
        let tt = self.sem.abs_table();
        let mut res = Ok(());
        'outer: for ap in self.sem.domains.token_alphabet() {
            let prim = self.sem.apcom_prim(ap);
            for t in self.sem.domains.tids() {
                let run = |h: &Heap| tt.apply(&prim, t, h, &Interp::new()).ok();
                if let Err(e) = self.locality(&self.sem.domains.abs, &run, &self.render_apcom(ap)) {
                    res = Err(e);
                    break 'outer;
                }
            }
        }
        *guard = Some(res.clone());
        res
    }

    fn render_apcom(&self, ap: ApCom) -> String {
        format!("{}({}, {})", self.sem.domains.method(ap.method).name, ap.arg, ap.ret)
    }

    /// The frame-free sufficient condition for `t ⊩ α {p}{q}`: every step
    /// from a pair of `P` can be split into a pair of `Q` whose shared change
    /// is guaranteed, and `α` is local.
    pub fn check_action_rgsep(&self, t: Tid, alpha: &Prim, p: &RgsepView, q: &RgsepView) -> Result<(), ActionFailure> {
        let RgsepView::View { pred: pp, rely: rp, guar: gp } = p else { return Ok(()) };
        let empty = Pred::default();
        let qp = match q {
            RgsepView::Bot => &empty,
            RgsepView::View { pred, rely, guar } => {
                if rely != rp || guar != gp {
                    return Err(ActionFailure::RelationMismatch);
                }
                pred
            }
        };
        self.check_local_prim(t, alpha)?;
        self.check_local_abstract()?;
        let pairs: Vec<(&World, u32)> = pp.pairs().collect();
        let fail = pairs.par_iter().find_map_first(|&(l, sid)| {
            let s = self.universe.get(sid);
            let w = l.join(s)?;
            let posts = match self.sem.run_conc(alpha, t, &w.conc) {
                Ok(v) => v,
                Err(e) => return Some(e),
            };
            let succ: Vec<u32> = match gp.succ(sid) {
                Some(v) => std::iter::once(sid).chain(v.iter().copied()).collect(),
                None => (0..self.universe.len() as u32).collect(),
            };
            let lps = lp_star(&self.sem, &w.abs, &w.toks);
            for post in posts {
                let ok = lps.iter().any(|(a2, d2)| {
                    let w2 = World::new(post.clone(), a2.clone(), d2.clone());
                    succ.iter().any(|&s2| {
                        let sw = self.universe.get(s2);
                        sw.is_subworld_of(&w2) && qp.contains(&w2.minus(sw), s2)
                    })
                });
                if !ok {
                    return Some(ActionFailure::Counterexample(Box::new(ActionCounterexample {
                        frame: "none (frame-free check)".into(),
                        pre: w.clone(),
                        post,
                        reason: format!(
                            "no split of the post-state satisfies the postcondition with a guaranteed shared change from {}",
                            self.render_pair(l, sid)
                        ),
                    })));
                }
            }
            None
        });
        match fail {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

impl ViewMonoid for RgsepMonoid {
    type View = RgsepView;

    fn semantics(&self) -> &Semantics {
        &self.sem
    }

    fn unit(&self) -> RgsepView {
        let pred = Pred { groups: BTreeMap::from([(World::empty(), self.all.clone())]) };
        RgsepView::new(pred, Rel::All, Rel::identity(self.universe.len()))
    }

    fn empty(&self) -> RgsepView {
        RgsepView::Bot
    }

    fn compose(&self, p: &RgsepView, q: &RgsepView) -> RgsepView {
        match (p, q) {
            (RgsepView::View { pred: p1, rely: r1, guar: g1 }, RgsepView::View { pred: p2, rely: r2, guar: g2 }) => {
                if !g1.is_subset(r2) || !g2.is_subset(r1) {
                    return RgsepView::Bot;
                }
                let n = self.universe.len();
                RgsepView::new(p1.star(p2), r1.intersect(r2, n), g1.union(g2, n))
            }
            _ => RgsepView::Bot,
        }
    }

    fn disjoin(&self, p: &RgsepView, q: &RgsepView) -> Result<RgsepView, ViewError> {
        match (p, q) {
            (RgsepView::Bot, x) | (x, RgsepView::Bot) => Ok(x.clone()),
            (RgsepView::View { pred: p1, rely: r1, guar: g1 }, RgsepView::View { pred: p2, rely: r2, guar: g2 }) => {
                if r1 != r2 || g1 != g2 {
                    return Err(ViewError::DisjoinMismatch);
                }
                Ok(RgsepView::new(p1.union(p2), r1.clone(), g1.clone()))
            }
        }
    }

    fn reify(&self, p: &RgsepView) -> Vec<World> {
        let RgsepView::View { pred, .. } = p else { return vec![] };
        let mut out: Vec<World> = pred.pairs().filter_map(|(l, s)| l.join(self.universe.get(s))).collect();
        out.sort();
        out.dedup();
        out
    }

    fn check_action(&self, t: Tid, alpha: &Prim, p: &RgsepView, q: &RgsepView) -> Result<(), ActionFailure> {
        self.check_action_rgsep(t, alpha, p, q)
    }

    /// Sufficient condition: every defined pair of `P` is in `Q`, `R ⊆ R′`
    /// and `G′ ⊆ G`. A pair whose world is outside `⌊q⌋` refutes the
    /// implication under the unit frame.
    fn repart_implies(&self, p: &RgsepView, q: &RgsepView) -> Result<ImplVerdict, ActionFailure> {
        let RgsepView::View { pred: pp, rely: rp, guar: gp } = p else { return Ok(ImplVerdict::Holds) };
        let missing = pp
            .pairs()
            .filter(|(l, s)| l.join(self.universe.get(*s)).is_some())
            .find(|(l, s)| q.pred().is_none_or(|qp| !qp.contains(l, *s)));
        if let Some((l, s)) = missing {
            let w = l.join(self.universe.get(s)).expect("defined");
            let reified = self.reify(q);
            if reified.binary_search(&w).is_err() {
                return Ok(ImplVerdict::Fails {
                    frame: "unit".into(),
                    world: w,
                    note: format!("{} is not covered by the target view", self.render_pair(l, s)),
                });
            }
            return Ok(ImplVerdict::NotEstablished(format!(
                "implication not established: {} is not a pair of the target predicate",
                self.render_pair(l, s)
            )));
        }
        if let RgsepView::View { rely: rq, guar: gq, .. } = q {
            if !rp.is_subset(rq) || !gq.is_subset(gp) {
                return Ok(ImplVerdict::NotEstablished(
                    "implication not established: rely or guarantee relations are incompatible".into(),
                ));
            }
        }
        Ok(ImplVerdict::Holds)
    }

    /// Compares the defined pairs with the token of `t` removed from the
    /// local part. The token must be local, so that no frame can observe it.
    fn same_modulo_token(&self, q: &RgsepView, p: &RgsepView, t: Tid) -> Result<(), String> {
        let proj = |v: &RgsepView| -> Result<BTreeSet<(World, u32)>, String> {
            let mut out = BTreeSet::new();
            if let Some(pred) = v.pred() {
                for (l, s) in pred.pairs() {
                    if l.join(self.universe.get(s)).is_none() {
                        continue;
                    }
                    if self.universe.get(s).toks.get(t).is_some() {
                        return Err(format!("the token of thread {t} is shared in {}", self.render_pair(l, s)));
                    }
                    out.insert((World::new(l.conc.clone(), l.abs.clone(), l.toks.without(t)), s));
                }
            }
            Ok(out)
        };
        if let (RgsepView::View { rely: r1, guar: g1, .. }, RgsepView::View { rely: r2, guar: g2, .. }) = (q, p) {
            if r1 != r2 || g1 != g2 {
                return Err("the views use different rely or guarantee relations".into());
            }
        }
        let (a, b) = (proj(q)?, proj(p)?);
        match a.symmetric_difference(&b).next() {
            None => Ok(()),
            Some((l, s)) => Err(format!(
                "{} (without the token of thread {t}) is in only one of the views",
                self.render_pair(l, *s)
            )),
        }
    }

    fn eval_vassn(&self, rho: &VAssn, i: &Interp, t: Tid) -> Result<RgsepView, ViewError> {
        let pred = self.eval_pred(rho, i, t)?;
        let rely = self.rely(t).clone();
        self.check_stable(&pred, &rely)?;
        Ok(RgsepView::new(pred, rely, self.guarantee(t).clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command_lang::{Expr, LocExpr};
    use crate::state_model::{Domains, LocDecl, MethodSig, TokenMap};
    use crate::views_core::AbsSpec;

    fn sem() -> Semantics {
        Semantics {
            domains: Domains {
                vals: vec![0, 1],
                modulus: None,
                threads: 2,
                conc: LocTable::new(vec![LocDecl { name: "x".into(), values: vec![0, 1], optional: true }]),
                abs: LocTable::new(vec![]),
                methods: vec![MethodSig { name: "m".into(), args: vec![0], rets: vec![0] }],
            },
            specs: vec![AbsSpec { arg_var: "a".into(), ret_var: "r".into(), prim: Prim::Id }],
        }
    }

    fn x(v: i32) -> VAssn {
        VAssn::pts(LocExpr::named("x"), Expr::Const(v))
    }

    /// Threads may only raise `x` from 0 to 1.
    fn spec() -> RgSpec {
        RgSpec {
            actions: vec![RgAction { name: "set".into(), pre: x(0), post: x(1) }],
            guarantee: vec!["set".into()],
            rely_extra: vec![],
        }
    }

    fn monoid() -> RgsepMonoid {
        RgsepMonoid::new(sem(), 1 << 20, &spec()).unwrap()
    }

    fn cw(v: i32) -> World {
        World::new(Heap::singleton(Loc(0), v), Heap::new(), TokenMap::new())
    }

    #[test]
    fn denotation_preserves_the_remainder() {
        let m = monoid();
        let g = m.guarantee(1);
        let u = m.universe();
        // 3 conc states times 9 token maps.
        assert_eq!(u.len(), 27);
        // Only worlds exactly equal to the fragment {x:0} plus anything
        // outside its footprint are rewritten.
        assert_eq!(g.len(), Some(9));
        for (a, b) in g.pairs().unwrap() {
            let (wa, wb) = (u.get(a), u.get(b));
            assert_eq!(wa.conc.get(Loc(0)), Some(0));
            assert_eq!(wb.conc.get(Loc(0)), Some(1));
            assert_eq!(wa.toks, wb.toks);
        }
        assert_eq!(m.rely(1), m.guarantee(2));
    }

    #[test]
    fn unit_is_identity_and_incompatible_relations_give_bot() {
        let m = monoid();
        let p = m.eval_vassn(&VAssn::boxed(VAssn::or(vec![x(0), x(1)])), &Interp::new(), 1).unwrap();
        assert_eq!(m.compose(&m.unit(), &p), p);
        assert_eq!(m.compose(&p, &m.unit()), p);
        let wild = RgsepView::new(Pred::default(), Rel::identity(27), Rel::All);
        assert_eq!(m.compose(&p, &wild), RgsepView::Bot);
        assert!(m.reify(&RgsepView::Bot).is_empty());
        assert_eq!(m.disjoin(&RgsepView::Bot, &p).unwrap(), p);
    }

    #[test]
    fn satisfaction_and_stability() {
        let m = monoid();
        let i = Interp::new();
        let both = m.eval_vassn(&VAssn::boxed(VAssn::or(vec![x(0), x(1)])), &i, 1).unwrap();
        assert_eq!(m.reify(&both), vec![cw(0), cw(1)]);
        assert!(m.eval_vassn(&VAssn::boxed(x(1)), &i, 1).is_ok());
        let err = m.eval_vassn(&VAssn::boxed(x(0)), &i, 1).unwrap_err();
        assert!(matches!(err, ViewError::StabilityViolation(_)));
        let pred = m.eval_pred(&VAssn::boxed(x(0)), &i, 1).unwrap();
        let st = m.stabilize(&pred, m.rely(1));
        assert_eq!(st.len(), 2);
        assert!(m.check_stable(&st, m.rely(1)).is_ok());
    }

    #[test]
    fn action_judgements() {
        let m = monoid();
        let i = Interp::new();
        let both = m.eval_vassn(&VAssn::boxed(VAssn::or(vec![x(0), x(1)])), &i, 1).unwrap();
        let one = m.eval_vassn(&VAssn::boxed(x(1)), &i, 1).unwrap();
        assert_eq!(m.check_action(1, &Prim::Id, &both, &both), Ok(()));
        let set = Prim::Store(LocExpr::named("x"), Expr::Const(1));
        assert_eq!(m.check_action(1, &set, &both, &one), Ok(()));
        let reset = Prim::Store(LocExpr::named("x"), Expr::Const(0));
        assert!(matches!(m.check_action(1, &reset, &both, &both), Err(ActionFailure::Counterexample(_))));
        assert_eq!(m.check_action(1, &reset, &RgsepView::Bot, &RgsepView::Bot), Ok(()));
        let fault = m.check_action(1, &set, &m.unit(), &m.unit());
        assert!(fault.is_err());
    }

    #[test]
    fn repartitioning() {
        let m = monoid();
        let i = Interp::new();
        let both = m.eval_vassn(&VAssn::boxed(VAssn::or(vec![x(0), x(1)])), &i, 1).unwrap();
        let one = m.eval_vassn(&VAssn::boxed(x(1)), &i, 1).unwrap();
        assert!(m.repart_implies(&one, &both).unwrap().holds());
        assert!(matches!(m.repart_implies(&both, &one).unwrap(), ImplVerdict::Fails { .. }));
    }

    #[test]
    fn unstable_witness_and_closure() {
        let r = Rel::from_pairs(4, vec![(0, 1), (1, 2)]);
        assert_eq!(unstable_witness(&[0, 1, 2], &r, 4), None);
        assert_eq!(unstable_witness(&[0], &r, 4), Some((0, 1)));
        assert_eq!(stabilize_set(&[0], &r, 4), vec![0, 1, 2]);
        assert_eq!(stabilize_set(&[3], &Rel::All, 4), vec![0, 1, 2, 3]);
    }
}
