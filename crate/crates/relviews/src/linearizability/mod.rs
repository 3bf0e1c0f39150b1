//! Library models, bounded history generation for concrete and abstract
//! libraries, and the history-inclusion linearizability check.

pub mod obligations;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::command_lang::{step, Command, Interp, Prim, StepError};
use crate::logic::{Assertion, MethodSpec};
use crate::monoid_rgsep::RgSpec;
use crate::state_model::{ApCom, Domains, Heap, MethodId, StateError, Tid, Val};
use crate::views_core::Semantics;
pub use obligations::{check_obligations, ObligationItem, ObligationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonoidKind {
    Dcsl,
    Rgsep,
}

/// A concrete method `ℓ(m, a, v)`: a command over the argument and return
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcMethod {
    pub name: String,
    pub arg_var: String,
    pub ret_var: String,
    pub body: Command,
}

/// The assertion families `P(t, L(m, a, v))` and `Q(t, L(m, a, v))`, over
/// the method's argument and return variables and `mytid`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodAssertions {
    pub pre: Assertion,
    pub post: Assertion,
}

/// A concrete library, its abstract specification, initial states and the
/// proof-related declarations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LibraryModel {
    pub name: String,
    /// Domains and the abstract methods, indexed like `domains.methods`.
    pub sem: Semantics,
    /// Concrete methods, indexed like `domains.methods`.
    pub methods: Vec<ConcMethod>,
    pub init_conc: Heap,
    pub init_abs: Heap,
    pub monoid: MonoidKind,
    pub rg: RgSpec,
    pub assertions: Vec<Option<MethodAssertions>>,
}

impl LibraryModel {
    pub fn domains(&self) -> &Domains {
        &self.sem.domains
    }

    /// The proof goal of method `m`, if it declares assertions.
    pub fn method_spec(&self, m: MethodId) -> Option<MethodSpec> {
        let cm = &self.methods[m.0 as usize];
        let sig = self.domains().method(m);
        let a = self.assertions.get(m.0 as usize)?.as_ref()?;
        Some(MethodSpec {
            name: cm.name.clone(),
            body: cm.body.clone(),
            arg_var: cm.arg_var.clone(),
            ret_var: cm.ret_var.clone(),
            args: sig.args.clone(),
            rets: sig.rets.clone(),
            pre: a.pre.clone(),
            post: a.post.clone(),
        })
    }

    /// `ℓ(m, a, v)`.
    pub fn instantiate(&self, m: MethodId, a: Val, v: Val) -> Command {
        let cm = &self.methods[m.0 as usize];
        let mut i = Interp::new();
        i.insert(cm.arg_var.clone(), a);
        i.insert(cm.ret_var.clone(), v);
        cm.body.substitute(&i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Call { method: MethodId, arg: Val },
    Ret { method: MethodId, ret: Val },
}

/// A client/library interaction of one thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub tid: Tid,
    pub kind: EventKind,
}

pub type History = Vec<Event>;

pub fn render_event(d: &Domains, e: &Event) -> String {
    match e.kind {
        EventKind::Call { method, arg } => format!("t={} call {}({})", e.tid, d.method(method).name, arg),
        EventKind::Ret { method, ret } => format!("t={} ret {}({})", e.tid, d.method(method).name, ret),
    }
}

/// One event per line; `ε` for the empty history.
pub fn render_history(d: &Domains, h: &[Event]) -> String {
    if h.is_empty() {
        return "ε".to_string();
    }
    h.iter().map(|e| render_event(d, e)).collect::<Vec<_>>().join("\n")
}

/// Shortest first, then lexicographic.
pub fn shortlex(a: &History, b: &History) -> std::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Whether every thread alternates call and return, starting with a call.
pub fn well_formed(h: &[Event]) -> bool {
    let mut open: HashMap<Tid, MethodId> = HashMap::new();
    for e in h {
        match e.kind {
            EventKind::Call { method, .. } => {
                if open.insert(e.tid, method).is_some() {
                    return false;
                }
            }
            EventKind::Ret { method, .. } => {
                if open.remove(&e.tid) != Some(method) {
                    return false;
                }
            }
        }
    }
    true
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("fault reachable: thread {tid} runs `{prim}` in {state} after history [{history}]: {detail}")]
    FaultReachable { tid: Tid, prim: String, state: String, history: String, detail: String },
    #[error("evaluation error in thread {tid}: {detail}")]
    Eval { tid: Tid, detail: String },
    #[error(transparent)]
    Universe(#[from] StateError),
}

/// What the bound counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundKind {
    /// Call and return events; internal steps are unbounded.
    #[default]
    Events,
    /// Every transition of the history semantics, as in `H_n`.
    Steps,
}

/// Interned commands reachable from every method instance.
struct CmdTable {
    steps: Vec<Vec<(Prim, u32)>>,
    /// Start command of `ℓ(m, a, v)`.
    start: HashMap<(MethodId, Val, Val), u32>,
    skip: u32,
}

impl CmdTable {
    fn new(model: &LibraryModel) -> Self {
        let mut cmds = vec![Command::Skip];
        let mut index: HashMap<Command, u32> = HashMap::from([(Command::Skip, 0)]);
        let mut start = HashMap::new();
        let mut intern = |c: Command, cmds: &mut Vec<Command>| -> u32 {
            *index.entry(c.clone()).or_insert_with(|| {
                cmds.push(c);
                (cmds.len() - 1) as u32
            })
        };
        for (k, sig) in model.domains().methods.iter().enumerate() {
            let m = MethodId(k as u16);
            for &a in &sig.args {
                for &v in &sig.rets {
                    let id = intern(model.instantiate(m, a, v), &mut cmds);
                    start.insert((m, a, v), id);
                }
            }
        }
        let mut steps = Vec::new();
        let mut k = 0;
        while k < cmds.len() {
            let succ: Vec<(Prim, Command)> = step(&cmds[k]);
            let out = succ.into_iter().map(|(p, c)| (p, intern(c, &mut cmds))).collect();
            steps.push(out);
            k += 1;
        }
        CmdTable { steps, start, skip: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum ConcThread {
    Idle,
    Run { cmd: u32, method: MethodId, ret: Val },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum AbsThread {
    Idle,
    Pending(ApCom),
    Finished(MethodId, Val),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Config<T> {
    threads: Vec<T>,
    heap: Heap,
}

/// One side of the history semantics.
trait Side: Sync {
    type T: Copy + Ord + Hash + Send + Sync + fmt::Debug;
    fn init(&self) -> Config<Self::T>;
    /// Internal (history-silent) successors.
    fn internal(&self, c: &Config<Self::T>, h: &History) -> Result<Vec<Config<Self::T>>, LinError>;
    /// Successors emitting `e`.
    fn on_event(&self, c: &Config<Self::T>, e: &Event) -> Vec<Config<Self::T>>;
    /// Events enabled somewhere in the configuration.
    fn events(&self, c: &Config<Self::T>) -> Vec<Event>;
}

struct ConcSide<'a> {
    model: &'a LibraryModel,
    table: CmdTable,
}

impl Side for ConcSide<'_> {
    type T = ConcThread;

    fn init(&self) -> Config<ConcThread> {
        Config { threads: vec![ConcThread::Idle; self.model.domains().threads as usize], heap: self.model.init_conc.clone() }
    }

    fn internal(&self, c: &Config<ConcThread>, h: &History) -> Result<Vec<Config<ConcThread>>, LinError> {
        let tt = self.model.sem.conc_table();
        let mut out = Vec::new();
        for (k, th) in c.threads.iter().enumerate() {
            let ConcThread::Run { cmd, method, ret } = *th else { continue };
            let tid = (k + 1) as Tid;
            for (p, next) in &self.table.steps[cmd as usize] {
                let posts = tt.apply(p, tid, &c.heap, &Interp::new()).map_err(|e| match e {
                    StepError::Fault(detail) => LinError::FaultReachable {
                        tid,
                        prim: p.to_string(),
                        state: self.model.domains().conc.render(&c.heap),
                        history: h.iter().map(|e| render_event(self.model.domains(), e)).collect::<Vec<_>>().join("; "),
                        detail,
                    },
                    StepError::Model(e) => LinError::Eval { tid, detail: e.to_string() },
                })?;
                for heap in posts {
                    let mut threads = c.threads.clone();
                    threads[k] = ConcThread::Run { cmd: *next, method, ret };
                    out.push(Config { threads, heap });
                }
            }
        }
        Ok(out)
    }

    fn on_event(&self, c: &Config<ConcThread>, e: &Event) -> Vec<Config<ConcThread>> {
        let k = e.tid as usize - 1;
        match (e.kind, c.threads[k]) {
            (EventKind::Call { method, arg }, ConcThread::Idle) => self
                .model
                .domains()
                .method(method)
                .rets
                .iter()
                .map(|&v| {
                    let mut threads = c.threads.clone();
                    threads[k] = ConcThread::Run { cmd: self.table.start[&(method, arg, v)], method, ret: v };
                    Config { threads, heap: c.heap.clone() }
                })
                .collect(),
            (EventKind::Ret { method, ret }, ConcThread::Run { cmd, method: m2, ret: r2 })
                if cmd == self.table.skip && method == m2 && ret == r2 =>
            {
                let mut threads = c.threads.clone();
                threads[k] = ConcThread::Idle;
                vec![Config { threads, heap: c.heap.clone() }]
            }
            _ => vec![],
        }
    }

    fn events(&self, c: &Config<ConcThread>) -> Vec<Event> {
        let d = self.model.domains();
        let mut out = Vec::new();
        for (k, th) in c.threads.iter().enumerate() {
            let tid = (k + 1) as Tid;
            match *th {
                ConcThread::Idle => {
                    for (mi, sig) in d.methods.iter().enumerate() {
                        for &arg in &sig.args {
                            out.push(Event { tid, kind: EventKind::Call { method: MethodId(mi as u16), arg } });
                        }
                    }
                }
                ConcThread::Run { cmd, method, ret } if cmd == self.table.skip => {
                    out.push(Event { tid, kind: EventKind::Ret { method, ret } });
                }
                ConcThread::Run { .. } => {}
            }
        }
        out
    }
}

struct AbsSide<'a> {
    model: &'a LibraryModel,
}

impl Side for AbsSide<'_> {
    type T = AbsThread;

    fn init(&self) -> Config<AbsThread> {
        Config { threads: vec![AbsThread::Idle; self.model.domains().threads as usize], heap: self.model.init_abs.clone() }
    }

    fn internal(&self, c: &Config<AbsThread>, _h: &History) -> Result<Vec<Config<AbsThread>>, LinError> {
        let mut out = Vec::new();
        for (k, th) in c.threads.iter().enumerate() {
            let AbsThread::Pending(ap) = *th else { continue };
            for heap in self.model.sem.run_apcom(ap, (k + 1) as Tid, &c.heap) {
                let mut threads = c.threads.clone();
                threads[k] = AbsThread::Finished(ap.method, ap.ret);
                out.push(Config { threads, heap });
            }
        }
        Ok(out)
    }

    fn on_event(&self, c: &Config<AbsThread>, e: &Event) -> Vec<Config<AbsThread>> {
        let k = e.tid as usize - 1;
        match (e.kind, c.threads[k]) {
            (EventKind::Call { method, arg }, AbsThread::Idle) => self
                .model
                .domains()
                .method(method)
                .rets
                .iter()
                .map(|&v| {
                    let mut threads = c.threads.clone();
                    threads[k] = AbsThread::Pending(ApCom { method, arg, ret: v });
                    Config { threads, heap: c.heap.clone() }
                })
                .collect(),
            (EventKind::Ret { method, ret }, AbsThread::Finished(m2, r2)) if method == m2 && ret == r2 => {
                let mut threads = c.threads.clone();
                threads[k] = AbsThread::Idle;
                vec![Config { threads, heap: c.heap.clone() }]
            }
            _ => vec![],
        }
    }

    fn events(&self, c: &Config<AbsThread>) -> Vec<Event> {
        let d = self.model.domains();
        let mut out = Vec::new();
        for (k, th) in c.threads.iter().enumerate() {
            let tid = (k + 1) as Tid;
            match *th {
                AbsThread::Idle => {
                    for (mi, sig) in d.methods.iter().enumerate() {
                        for &arg in &sig.args {
                            out.push(Event { tid, kind: EventKind::Call { method: MethodId(mi as u16), arg } });
                        }
                    }
                }
                AbsThread::Finished(method, ret) => out.push(Event { tid, kind: EventKind::Ret { method, ret } }),
                AbsThread::Pending(_) => {}
            }
        }
        out
    }
}

type CSet<T> = Arc<Vec<Config<T>>>;

/// Closure of a set of configurations under internal steps, sorted.
fn closure<S: Side>(side: &S, seeds: Vec<Config<S::T>>, h: &History) -> Result<CSet<S::T>, LinError> {
    let mut seen: HashSet<Config<S::T>> = HashSet::new();
    let mut stack = Vec::new();
    for s in seeds {
        if seen.insert(s.clone()) {
            stack.push(s);
        }
    }
    while let Some(c) = stack.pop() {
        for n in side.internal(&c, h)? {
            if seen.insert(n.clone()) {
                stack.push(n);
            }
        }
    }
    let mut v: Vec<_> = seen.into_iter().collect();
    v.sort();
    Ok(Arc::new(v))
}

fn set_events<S: Side>(side: &S, set: &[Config<S::T>]) -> Vec<Event> {
    let mut evs: BTreeSet<Event> = BTreeSet::new();
    for c in set {
        evs.extend(side.events(c));
    }
    evs.into_iter().collect()
}

fn after_event<S: Side>(side: &S, set: &[Config<S::T>], e: &Event, h: &History) -> Result<CSet<S::T>, LinError> {
    let seeds: Vec<_> = set.iter().flat_map(|c| side.on_event(c, e)).collect();
    closure(side, seeds, h)
}

/// Options shared by the generators and the checker.
#[derive(Clone, Copy, Debug)]
pub struct LinOptions {
    pub bound: usize,
    pub kind: BoundKind,
    /// Cap on explored product states or generated histories.
    pub cap: u128,
}

impl LinOptions {
    pub fn events(bound: usize) -> Self {
        LinOptions { bound, kind: BoundKind::Events, cap: 50_000_000 }
    }
}

/// Histories of length at most `bound` under the event bound.
fn histories_events<S: Side>(side: &S, opts: &LinOptions) -> Result<BTreeSet<History>, LinError> {
    let init = closure(side, vec![side.init()], &vec![])?;
    let mut out: BTreeSet<History> = BTreeSet::from([vec![]]);
    let mut layer: Vec<(History, CSet<S::T>)> = vec![(vec![], init)];
    for _ in 0..opts.bound {
        let next: Vec<Vec<(History, CSet<S::T>)>> = layer
            .par_iter()
            .map(|(h, set)| {
                let mut v = Vec::new();
                for e in set_events(side, set) {
                    let mut h2 = h.clone();
                    h2.push(e);
                    let s2 = after_event(side, set, &e, &h2)?;
                    if !s2.is_empty() {
                        v.push((h2, s2));
                    }
                }
                Ok(v)
            })
            .collect::<Result<_, LinError>>()?;
        layer = next.into_iter().flatten().collect();
        out.extend(layer.iter().map(|(h, _)| h.clone()));
        if out.len() as u128 > opts.cap {
            return Err(StateError::UniverseTooLarge { size: out.len() as u128, cap: opts.cap }.into());
        }
        if layer.is_empty() {
            break;
        }
    }
    Ok(out)
}

/// Histories produced within `bound` transitions (`H_0 ∪ … ∪ H_n`).
fn histories_steps<S: Side>(side: &S, opts: &LinOptions) -> Result<BTreeSet<History>, LinError> {
    let mut out: BTreeSet<History> = BTreeSet::from([vec![]]);
    let mut layer: BTreeSet<(History, Config<S::T>)> = BTreeSet::from([(vec![], side.init())]);
    for _ in 0..opts.bound {
        let items: Vec<_> = layer.into_iter().collect();
        let next: Vec<Vec<(History, Config<S::T>)>> = items
            .par_iter()
            .map(|(h, c)| {
                let mut v: Vec<(History, Config<S::T>)> =
                    side.internal(c, h)?.into_iter().map(|c2| (h.clone(), c2)).collect();
                for e in side.events(c) {
                    for c2 in side.on_event(c, &e) {
                        let mut h2 = h.clone();
                        h2.push(e);
                        v.push((h2, c2));
                    }
                }
                Ok(v)
            })
            .collect::<Result<_, LinError>>()?;
        layer = next.into_iter().flatten().collect();
        out.extend(layer.iter().map(|(h, _)| h.clone()));
        if layer.len() as u128 > opts.cap {
            return Err(StateError::UniverseTooLarge { size: layer.len() as u128, cap: opts.cap }.into());
        }
    }
    Ok(out)
}

/// The histories of the concrete library within the bound.
pub fn concrete_histories(model: &LibraryModel, opts: &LinOptions) -> Result<BTreeSet<History>, LinError> {
    let side = ConcSide { model, table: CmdTable::new(model) };
    match opts.kind {
        BoundKind::Events => histories_events(&side, opts),
        BoundKind::Steps => histories_steps(&side, opts),
    }
}

/// The histories of the abstract library within the bound.
pub fn abstract_histories(model: &LibraryModel, opts: &LinOptions) -> Result<BTreeSet<History>, LinError> {
    let side = AbsSide { model };
    match opts.kind {
        BoundKind::Events => histories_events(&side, opts),
        BoundKind::Steps => histories_steps(&side, opts),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinVerdict {
    /// No violation up to the bound. `complete` is set when no history is
    /// longer than the bound, so the inclusion holds outright.
    NoViolation { complete: bool },
    /// The shortest, then lexicographically least, concrete history that
    /// the abstract library cannot produce.
    Counterexample(History),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LinStats {
    /// Product states (concrete set, abstract set) explored.
    pub states: usize,
    /// Distinct concrete configurations seen.
    pub conc_configs: usize,
    /// Histories compared (step bound only).
    pub histories: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinReport {
    pub verdict: LinVerdict,
    pub stats: LinStats,
    pub bound: usize,
    pub kind: BoundKind,
    /// The abstract bound used.
    pub abstract_bound: usize,
}

impl LinReport {
    /// Whether histories longer than the bound exist, so the result is
    /// only a bounded guarantee.
    pub fn bound_too_small(&self) -> bool {
        matches!(self.verdict, LinVerdict::NoViolation { complete: false })
    }
}

/// Checks `H(ℓ, σ) ⊆ H(L, Σ)` up to the bound.
pub fn check_linearizable(model: &LibraryModel, opts: &LinOptions) -> Result<LinReport, LinError> {
    match opts.kind {
        BoundKind::Events => check_events(model, opts),
        BoundKind::Steps => check_steps(model, opts),
    }
}

fn check_steps(model: &LibraryModel, opts: &LinOptions) -> Result<LinReport, LinError> {
    let conc = concrete_histories(model, opts)?;
    let abs = abstract_histories(model, opts)?;
    let mut missing: Vec<&History> = conc.iter().filter(|h| !abs.contains(*h)).collect();
    missing.sort_by(|a, b| shortlex(a, b));
    let longer = {
        let mut o = *opts;
        o.bound += 1;
        concrete_histories(model, &o)?.len() > conc.len()
    };
    let verdict = match missing.first() {
        Some(h) => LinVerdict::Counterexample((*h).clone()),
        None => LinVerdict::NoViolation { complete: !longer },
    };
    Ok(LinReport {
        verdict,
        stats: LinStats { states: 0, conc_configs: 0, histories: conc.len() },
        bound: opts.bound,
        kind: opts.kind,
        abstract_bound: opts.bound,
    })
}

type Product = (CSet<ConcThread>, CSet<AbsThread>);

/// Breadth-first search over pairs of concrete and abstract configuration
/// sets reached by the same history.
fn check_events(model: &LibraryModel, opts: &LinOptions) -> Result<LinReport, LinError> {
    let conc = ConcSide { model, table: CmdTable::new(model) };
    let abs = AbsSide { model };
    let start: Product = (closure(&conc, vec![conc.init()], &vec![])?, closure(&abs, vec![abs.init()], &vec![])?);
    let mut seen: HashSet<Product> = HashSet::from([start.clone()]);
    let mut conc_seen: HashSet<Config<ConcThread>> = start.0.iter().cloned().collect();
    let mut layer: Vec<(History, Product)> = vec![(vec![], start)];
    let mut states = 1usize;
    let mut growing = false;
    for depth in 0..=opts.bound {
        // Successors of every product state, computed in parallel and merged
        // in history order.
        let succs: Vec<Vec<(Event, Product)>> = layer
            .par_iter()
            .map(|(h, (cs, as_))| {
                let mut v = Vec::new();
                for e in set_events(&conc, cs) {
                    let mut h2 = h.clone();
                    h2.push(e);
                    let c2 = after_event(&conc, cs, &e, &h2)?;
                    if c2.is_empty() {
                        continue;
                    }
                    let a2 = after_event(&abs, as_, &e, &h2)?;
                    v.push((e, (c2, a2)));
                }
                Ok(v)
            })
            .collect::<Result<_, LinError>>()?;
        if depth == opts.bound {
            growing = succs.iter().any(|v| !v.is_empty());
            break;
        }
        let mut next = Vec::new();
        for ((h, _), vs) in layer.iter().zip(succs) {
            for (e, prod) in vs {
                let mut h2 = h.clone();
                h2.push(e);
                if prod.1.is_empty() {
                    return Ok(LinReport {
                        verdict: LinVerdict::Counterexample(h2),
                        stats: LinStats { states, conc_configs: conc_seen.len(), histories: 0 },
                        bound: opts.bound,
                        kind: opts.kind,
                        abstract_bound: opts.bound,
                    });
                }
                if seen.insert(prod.clone()) {
                    states += 1;
                    conc_seen.extend(prod.0.iter().cloned());
                    next.push((h2, prod));
                }
            }
        }
        if states as u128 > opts.cap {
            return Err(StateError::UniverseTooLarge { size: states as u128, cap: opts.cap }.into());
        }
        layer = next;
        if layer.is_empty() {
            break;
        }
    }
    Ok(LinReport {
        verdict: LinVerdict::NoViolation { complete: !growing },
        stats: LinStats { states, conc_configs: conc_seen.len(), histories: 0 },
        bound: opts.bound,
        kind: opts.kind,
        abstract_bound: opts.bound,
    })
}

/// A simulated schedule for tests and diagnostics: runs the concrete
/// library along `h`, returning whether it is producible.
pub fn concrete_accepts(model: &LibraryModel, h: &History) -> Result<bool, LinError> {
    let side = ConcSide { model, table: CmdTable::new(model) };
    accepts(&side, h)
}

/// Whether the abstract library can produce `h`.
pub fn abstract_accepts(model: &LibraryModel, h: &History) -> Result<bool, LinError> {
    accepts(&AbsSide { model }, h)
}

fn accepts<S: Side>(side: &S, h: &History) -> Result<bool, LinError> {
    let mut set = closure(side, vec![side.init()], &vec![])?;
    let mut prefix = Vec::new();
    for e in h {
        prefix.push(*e);
        set = after_event(side, &set, e, &prefix)?;
        if set.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Counts of concrete configurations reachable per depth, for reporting.
pub fn reachable_conc_configs(model: &LibraryModel, max: usize) -> Result<usize, LinError> {
    let side = ConcSide { model, table: CmdTable::new(model) };
    let mut seen: HashSet<Config<ConcThread>> = HashSet::new();
    let mut queue = VecDeque::from([side.init()]);
    seen.insert(side.init());
    while let Some(c) = queue.pop_front() {
        let mut nexts = side.internal(&c, &vec![])?;
        for e in side.events(&c) {
            nexts.extend(side.on_event(&c, &e));
        }
        for n in nexts {
            if seen.len() >= max {
                return Ok(seen.len());
            }
            if seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    Ok(seen.len())
}

/// Groups histories by length, for summaries.
pub fn length_profile(hs: &BTreeSet<History>) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for h in hs {
        *out.entry(h.len()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
pub(crate) mod tests;
