//! Assertions, proof outlines and the syntax-directed outline checker.

pub mod safety;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

use crate::command_lang::{Command, Interp, Prim};
use crate::state_model::{Tid, Val};
use crate::views_core::{ActionFailure, ImplVerdict, VAssn, ViewError, ViewMonoid};
pub use safety::{annotation_views, check_safe, SafetyStats};

/// `P, Q ::= ρ | P ∗ Q | P ∨ Q | P ⇛ Q | ∃X. P`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Assertion {
    Leaf(VAssn),
    Star(Box<Assertion>, Box<Assertion>),
    Or(Box<Assertion>, Box<Assertion>),
    RImpl(Box<Assertion>, Box<Assertion>),
    Exists(String, Box<Assertion>),
}

impl Assertion {
    pub fn leaf(p: VAssn) -> Assertion {
        Assertion::Leaf(p)
    }

    pub fn star(a: Assertion, b: Assertion) -> Assertion {
        Assertion::Star(Box::new(a), Box::new(b))
    }

    pub fn or(a: Assertion, b: Assertion) -> Assertion {
        Assertion::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(x: &str, p: Assertion) -> Assertion {
        Assertion::Exists(x.to_string(), Box::new(p))
    }

    /// Right-folded disjunction; `None` for an empty list.
    pub fn or_all(ps: Vec<Assertion>) -> Option<Assertion> {
        let mut it = ps.into_iter().rev();
        let last = it.next()?;
        Some(it.fold(last, |acc, p| Assertion::or(p, acc)))
    }

    /// Right-folded separating conjunction; `emp` for an empty list.
    pub fn star_all(ps: Vec<Assertion>) -> Assertion {
        let mut it = ps.into_iter().rev();
        match it.next() {
            None => Assertion::Leaf(VAssn::Emp),
            Some(last) => it.fold(last, |acc, p| Assertion::star(p, acc)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        match self {
            Assertion::Leaf(p) => p.free_vars(),
            Assertion::Star(a, b) | Assertion::Or(a, b) | Assertion::RImpl(a, b) => {
                let mut s = a.free_vars();
                s.extend(b.free_vars());
                s
            }
            Assertion::Exists(x, p) => {
                let mut s = p.free_vars();
                s.remove(x);
                s
            }
        }
    }

    /// Whether `⇛` occurs anywhere inside.
    pub fn has_rimpl(&self) -> bool {
        match self {
            Assertion::Leaf(_) => false,
            Assertion::RImpl(..) => true,
            Assertion::Star(a, b) | Assertion::Or(a, b) => a.has_rimpl() || b.has_rimpl(),
            Assertion::Exists(_, p) => p.has_rimpl(),
        }
    }

    /// The operands of nested `∗`, left to right.
    pub fn star_operands(&self) -> Vec<&Assertion> {
        match self {
            Assertion::Star(a, b) => {
                let mut v = a.star_operands();
                v.extend(b.star_operands());
                v
            }
            other => vec![other],
        }
    }

    /// The operands of nested `∨`, left to right.
    pub fn or_operands(&self) -> Vec<&Assertion> {
        match self {
            Assertion::Or(a, b) => {
                let mut v = a.or_operands();
                v.extend(b.or_operands());
                v
            }
            other => vec![other],
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Leaf(p) => write!(f, "{p}"),
            Assertion::Star(a, b) => write!(f, "({a} * {b})"),
            Assertion::Or(a, b) => write!(f, "({a} \\/ {b})"),
            Assertion::RImpl(a, b) => write!(f, "({a} ==> {b})"),
            Assertion::Exists(x, p) => write!(f, "(exists {x}. {p})"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error(transparent)]
    View(#[from] ViewError),
    #[error("a repartitioning implication is not a view; use it only as a consequence side condition")]
    RImplNotView,
}

/// `⟦P⟧i` for thread `t`.
pub fn eval_assertion<M: ViewMonoid>(m: &M, p: &Assertion, i: &Interp, t: Tid) -> Result<M::View, LogicError> {
    Ok(match p {
        Assertion::Leaf(rho) => m.eval_vassn(rho, i, t)?,
        Assertion::Star(a, b) => m.compose(&eval_assertion(m, a, i, t)?, &eval_assertion(m, b, i, t)?),
        Assertion::Or(a, b) => m.disjoin(&eval_assertion(m, a, i, t)?, &eval_assertion(m, b, i, t)?)?,
        Assertion::RImpl(..) => return Err(LogicError::RImplNotView),
        Assertion::Exists(x, q) => {
            let mut acc = m.empty();
            let mut j = i.clone();
            for &v in &m.semantics().domains.vals {
                j.insert(x.clone(), v);
                acc = m.disjoin(&acc, &eval_assertion(m, q, &j, t)?)?;
            }
            acc
        }
    })
}

/// One node of a proof outline. `pre` and `post` are the assertions the
/// node is proved against; `conseq_pre`/`conseq_post` strengthen and weaken
/// them; `frame` is then removed from both sides.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OutlineNode {
    pub kind: NodeKind,
    pub pre: Option<Assertion>,
    pub post: Option<Assertion>,
    pub invariant: Option<Assertion>,
    pub frame: Option<Assertion>,
    pub conseq_pre: Option<Assertion>,
    pub conseq_post: Option<Assertion>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum NodeKind {
    Prim(Prim),
    Seq(Vec<OutlineNode>),
    Choice(Vec<OutlineNode>),
    Iter(Box<OutlineNode>),
    #[default]
    Skip,
    /// Disjunction rule: children prove the same command.
    Disj(Vec<OutlineNode>),
    /// Existential rule over a logical variable.
    Exists(String, Box<OutlineNode>),
}

impl OutlineNode {
    pub fn new(kind: NodeKind) -> Self {
        OutlineNode { kind, ..Default::default() }
    }

    pub fn with_pre(mut self, p: Assertion) -> Self {
        self.pre = Some(p);
        self
    }

    pub fn with_post(mut self, q: Assertion) -> Self {
        self.post = Some(q);
        self
    }

    pub fn with_label(mut self, l: &str) -> Self {
        self.label = Some(l.to_string());
        self
    }

    /// The command the outline proves.
    pub fn command(&self) -> Command {
        match &self.kind {
            NodeKind::Prim(p) => Command::Prim(p.clone()),
            NodeKind::Seq(cs) => Command::seq_all(cs.iter().map(|c| c.command()).collect()),
            NodeKind::Choice(cs) => Command::choice_all(cs.iter().map(|c| c.command()).collect()),
            NodeKind::Iter(b) => Command::iter(b.command()),
            NodeKind::Skip => Command::Skip,
            NodeKind::Disj(cs) => cs.first().map(|c| c.command()).unwrap_or(Command::Skip),
            NodeKind::Exists(_, c) => c.command(),
        }
    }

    /// Every assertion occurring in the outline.
    pub fn assertions(&self) -> Vec<&Assertion> {
        let mut out: Vec<&Assertion> = [
            &self.pre,
            &self.post,
            &self.invariant,
            &self.frame,
            &self.conseq_pre,
            &self.conseq_post,
        ]
        .into_iter()
        .flatten()
        .collect();
        match &self.kind {
            NodeKind::Seq(cs) | NodeKind::Choice(cs) | NodeKind::Disj(cs) => {
                cs.iter().for_each(|c| out.extend(c.assertions()))
            }
            NodeKind::Iter(c) | NodeKind::Exists(_, c) => out.extend(c.assertions()),
            NodeKind::Prim(_) | NodeKind::Skip => {}
        }
        out
    }
}

/// Right-associates sequences and choices. Proofs are insensitive to the
/// association: the two forms differ only in `id` steps.
pub fn normalize_assoc(c: &Command) -> Command {
    fn seqs(c: &Command, out: &mut Vec<Command>) {
        match c {
            Command::Seq(a, b) => {
                seqs(a, out);
                seqs(b, out);
            }
            other => out.push(normalize_assoc(other)),
        }
    }
    fn choices(c: &Command, out: &mut Vec<Command>) {
        match c {
            Command::Choice(a, b) => {
                choices(a, out);
                choices(b, out);
            }
            other => out.push(normalize_assoc(other)),
        }
    }
    match c {
        Command::Seq(..) => {
            let mut v = Vec::new();
            seqs(c, &mut v);
            Command::seq_all(v)
        }
        Command::Choice(..) => {
            let mut v = Vec::new();
            choices(c, &mut v);
            Command::choice_all(v)
        }
        Command::Iter(b) => Command::iter(normalize_assoc(b)),
        other => other.clone(),
    }
}

/// A proof outline for one method, checked for each thread id.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofOutline {
    pub method: String,
    /// Threads to check; empty means all.
    pub threads: Vec<Tid>,
    pub root: OutlineNode,
}

/// What the outline must establish: `{P} body {Q}` with the method's
/// argument and return variables ranging over their declared domains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSpec {
    pub name: String,
    pub body: Command,
    pub arg_var: String,
    pub ret_var: String,
    pub args: Vec<Val>,
    pub rets: Vec<Val>,
    pub pre: Assertion,
    pub post: Assertion,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FailureKind {
    /// Annotations do not fit the rule being applied.
    Structure(String),
    Action(ActionFailure),
    Implication(ImplVerdict),
    View(LogicError),
}

/// Where and why an outline is rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureReport {
    pub tid: Tid,
    /// Position in the outline, e.g. `root/seq[2]/choice[0]`.
    pub path: String,
    pub label: Option<String>,
    pub rule: String,
    pub interpretation: Option<Interp>,
    pub kind: FailureKind,
    /// Rendered counterexample, if any.
    pub detail: String,
}

impl fmt::Display for FailureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "thread {}: rule {} at {}", self.tid, self.rule, self.path)?;
        if let Some(l) = &self.label {
            write!(f, " (label {l})")?;
        }
        if let Some(i) = &self.interpretation {
            let parts: Vec<String> = i.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, " under [{}]", parts.join(", "))?;
        }
        write!(f, ": {}", self.detail)
    }
}

impl std::error::Error for FailureReport {}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofStats {
    pub nodes: usize,
    pub action_checks: usize,
    pub implication_checks: usize,
}

type EvalKey = (Assertion, Interp, Tid);

/// Shared state of one `check_proof` run.
pub struct Checker<'a, M: ViewMonoid> {
    m: &'a M,
    spec: &'a MethodSpec,
    cache: Mutex<HashMap<EvalKey, Result<M::View, LogicError>>>,
    stats: Mutex<ProofStats>,
}

struct Site<'s> {
    tid: Tid,
    path: &'s str,
    label: Option<&'s String>,
}

impl<'a, M: ViewMonoid> Checker<'a, M> {
    pub fn new(m: &'a M, spec: &'a MethodSpec) -> Self {
        Checker { m, spec, cache: Mutex::new(HashMap::new()), stats: Mutex::new(ProofStats::default()) }
    }

    /// Restricts `i` to the free variables of `p` and evaluates with caching.
    pub fn eval(&self, p: &Assertion, i: &Interp, t: Tid) -> Result<M::View, LogicError> {
        let fv = p.free_vars();
        let j: Interp = i.iter().filter(|(k, _)| fv.contains(*k)).map(|(k, v)| (k.clone(), *v)).collect();
        let key = (p.clone(), j, t);
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return v.clone();
        }
        let v = eval_assertion(self.m, p, &key.1, t);
        self.cache.lock().unwrap().insert(key, v.clone());
        v
    }

    /// Interpretations of `vars`: the argument and return variables range
    /// over their declared domains, everything else over `Val`.
    pub fn interps(&self, vars: &BTreeSet<String>) -> Vec<Interp> {
        let vals = &self.m.semantics().domains.vals;
        let mut out = vec![Interp::new()];
        for x in vars {
            let dom: &[Val] = if *x == self.spec.arg_var {
                &self.spec.args
            } else if *x == self.spec.ret_var {
                &self.spec.rets
            } else {
                vals
            };
            out = out
                .into_iter()
                .flat_map(|i| {
                    dom.iter().map(move |&v| {
                        let mut j = i.clone();
                        j.insert(x.clone(), v);
                        j
                    })
                })
                .collect();
        }
        out
    }

    fn fail(&self, site: &Site<'_>, rule: &str, i: Option<Interp>, kind: FailureKind) -> FailureReport {
        let d = &self.m.semantics().domains;
        let detail = match &kind {
            FailureKind::Structure(s) => s.clone(),
            FailureKind::Action(ActionFailure::Counterexample(cx)) => cx.render(d),
            FailureKind::Action(e) => e.to_string(),
            FailureKind::Implication(ImplVerdict::Fails { frame, world, note }) => {
                format!("implication fails under frame {frame} at world {}: {note}", d.render_world(world))
            }
            FailureKind::Implication(ImplVerdict::NotEstablished(s)) => s.clone(),
            FailureKind::Implication(ImplVerdict::Holds) => String::new(),
            FailureKind::View(e) => e.to_string(),
        };
        FailureReport {
            tid: site.tid,
            path: site.path.to_string(),
            label: site.label.cloned(),
            rule: rule.to_string(),
            interpretation: i,
            kind,
            detail,
        }
    }

    /// `∀i. ⟦P⟧i ⇛ ⟦Q⟧i`.
    fn implies(&self, site: &Site<'_>, rule: &str, p: &Assertion, q: &Assertion) -> Result<(), FailureReport> {
        if p == q {
            return Ok(());
        }
        let mut vars = p.free_vars();
        vars.extend(q.free_vars());
        let is = self.interps(&vars);
        self.stats.lock().unwrap().implication_checks += is.len();
        let bad = is.par_iter().find_map_first(|i| {
            let vp = match self.eval(p, i, site.tid) {
                Ok(v) => v,
                Err(e) => return Some((i.clone(), FailureKind::View(e))),
            };
            let vq = match self.eval(q, i, site.tid) {
                Ok(v) => v,
                Err(e) => return Some((i.clone(), FailureKind::View(e))),
            };
            match self.m.repart_implies(&vp, &vq) {
                Ok(ImplVerdict::Holds) => None,
                Ok(v) => Some((i.clone(), FailureKind::Implication(v))),
                Err(e) => Some((i.clone(), FailureKind::Action(e))),
            }
        });
        match bad {
            None => Ok(()),
            Some((i, k)) => Err(self.fail(site, rule, Some(i), k)),
        }
    }

    fn structure(&self, site: &Site<'_>, rule: &str, msg: String) -> FailureReport {
        self.fail(site, rule, None, FailureKind::Structure(msg))
    }

    /// Checks `⊢t {P} node {Q}`.
    pub fn check_node(&self, node: &OutlineNode, p: &Assertion, q: &Assertion, tid: Tid, path: &str) -> Result<(), FailureReport> {
        self.stats.lock().unwrap().nodes += 1;
        let site = Site { tid, path, label: node.label.as_ref() };
        if let Some(pre) = &node.pre {
            if pre != p {
                return Err(self.structure(&site, "annotation", format!("precondition {pre} does not match {p}")));
            }
        }
        if let Some(post) = &node.post {
            if post != q {
                return Err(self.structure(&site, "annotation", format!("postcondition {post} does not match {q}")));
            }
        }
        let (mut p, mut q) = (p.clone(), q.clone());
        if let Some(p1) = &node.conseq_pre {
            self.implies(&site, "Conseq", &p, p1)?;
            p = p1.clone();
        }
        if let Some(q1) = &node.conseq_post {
            self.implies(&site, "Conseq", q1, &q)?;
            q = q1.clone();
        }
        if let Some(f) = &node.frame {
            p = strip_frame(&p, f).ok_or_else(|| self.structure(&site, "Frame", format!("{p} does not contain the frame {f}")))?;
            q = strip_frame(&q, f).ok_or_else(|| self.structure(&site, "Frame", format!("{q} does not contain the frame {f}")))?;
        }
        match &node.kind {
            NodeKind::Prim(alpha) => self.check_prim(&site, alpha, &p, &q),
            NodeKind::Skip => self.implies(&site, "Skip", &p, &q),
            NodeKind::Seq(cs) => {
                if cs.is_empty() {
                    return self.implies(&site, "Skip", &p, &q);
                }
                let mut mids = vec![p.clone()];
                for k in 1..cs.len() {
                    let m = match (&cs[k - 1].post, &cs[k].pre) {
                        (Some(a), Some(b)) if a != b => {
                            return Err(self.structure(
                                &site,
                                "Seq",
                                format!("midpoint {k} is annotated inconsistently: {a} versus {b}"),
                            ))
                        }
                        (Some(a), _) | (None, Some(a)) => a.clone(),
                        (None, None) => {
                            return Err(self.structure(&site, "Seq", format!("midpoint {k} has no assertion")))
                        }
                    };
                    mids.push(m);
                }
                mids.push(q.clone());
                for (k, c) in cs.iter().enumerate() {
                    self.check_node(c, &mids[k], &mids[k + 1], tid, &format!("{path}/seq[{k}]"))?;
                }
                Ok(())
            }
            NodeKind::Choice(cs) => {
                for (k, c) in cs.iter().enumerate() {
                    self.check_node(c, &p, &q, tid, &format!("{path}/choice[{k}]"))?;
                }
                Ok(())
            }
            NodeKind::Iter(body) => {
                let inv = match &node.invariant {
                    Some(inv) => {
                        self.implies(&site, "Iter", &p, inv)?;
                        self.implies(&site, "Iter", inv, &q)?;
                        inv.clone()
                    }
                    None if p == q => p.clone(),
                    None => {
                        return Err(self.structure(
                            &site,
                            "Iter",
                            "loop without invariant needs equal pre- and postcondition".into(),
                        ))
                    }
                };
                self.check_node(body, &inv, &inv, tid, &format!("{path}/iter"))
            }
            NodeKind::Disj(cs) => {
                let mut pres = Vec::new();
                let mut posts = Vec::new();
                for c in cs {
                    match (&c.pre, &c.post) {
                        (Some(a), Some(b)) => {
                            pres.push(a.clone());
                            posts.push(b.clone());
                        }
                        _ => return Err(self.structure(&site, "Disj", "every disjunct needs pre and post".into())),
                    }
                }
                let cmd = cs.first().map(|c| normalize_assoc(&c.command()));
                if cs.iter().any(|c| Some(normalize_assoc(&c.command())) != cmd) {
                    return Err(self.structure(&site, "Disj", "disjuncts prove different commands".into()));
                }
                let want_p = Assertion::or_all(pres).expect("non-empty");
                let want_q = Assertion::or_all(posts).expect("non-empty");
                if p.or_operands() != want_p.or_operands() || q.or_operands() != want_q.or_operands() {
                    return Err(self.structure(
                        &site,
                        "Disj",
                        format!("{p} / {q} are not the disjunctions of the disjuncts' assertions"),
                    ));
                }
                for (k, c) in cs.iter().enumerate() {
                    let (a, b) = (c.pre.clone().unwrap(), c.post.clone().unwrap());
                    self.check_node(c, &a, &b, tid, &format!("{path}/disj[{k}]"))?;
                }
                Ok(())
            }
            NodeKind::Exists(x, c) => {
                let (Some(a), Some(b)) = (&c.pre, &c.post) else {
                    return Err(self.structure(&site, "Ex", "the body needs pre and post".into()));
                };
                if p != Assertion::exists(x, a.clone()) || q != Assertion::exists(x, b.clone()) {
                    return Err(self.structure(&site, "Ex", format!("{p} / {q} do not quantify the body over {x}")));
                }
                self.check_node(c, a, b, tid, &format!("{path}/ex"))
            }
        }
    }

    fn check_prim(&self, site: &Site<'_>, alpha: &Prim, p: &Assertion, q: &Assertion) -> Result<(), FailureReport> {
        let mut vars = p.free_vars();
        vars.extend(q.free_vars());
        alpha.free_vars(&mut vars);
        let is = self.interps(&vars);
        self.stats.lock().unwrap().action_checks += is.len();
        let bad = is.par_iter().find_map_first(|i| {
            let vp = match self.eval(p, i, site.tid) {
                Ok(v) => v,
                Err(e) => return Some((i.clone(), FailureKind::View(e))),
            };
            let vq = match self.eval(q, i, site.tid) {
                Ok(v) => v,
                Err(e) => return Some((i.clone(), FailureKind::View(e))),
            };
            let a = alpha.substitute(i);
            self.m.check_action(site.tid, &a, &vp, &vq).err().map(|e| (i.clone(), FailureKind::Action(e)))
        });
        match bad {
            None => Ok(()),
            Some((i, k)) => Err(self.fail(site, "Prim", Some(i), k)),
        }
    }

    pub fn stats(&self) -> ProofStats {
        self.stats.lock().unwrap().clone()
    }
}

/// Removes the `∗`-operands of `frame` from `p`, leaving `emp` if nothing
/// remains.
pub fn strip_frame(p: &Assertion, frame: &Assertion) -> Option<Assertion> {
    let mut rest: Vec<&Assertion> = p.star_operands();
    for f in frame.star_operands() {
        let pos = rest.iter().position(|x| *x == f)?;
        rest.remove(pos);
    }
    Some(Assertion::star_all(rest.into_iter().cloned().collect()))
}

/// Checks an outline against its method: the outline must prove the
/// method's body from its pre- to its postcondition in every thread.
pub fn check_proof<M: ViewMonoid>(m: &M, spec: &MethodSpec, outline: &ProofOutline) -> Result<ProofStats, FailureReport> {
    let threads: Vec<Tid> = if outline.threads.is_empty() {
        m.semantics().domains.tids().collect()
    } else {
        outline.threads.clone()
    };
    let checker = Checker::new(m, spec);
    for &t in &threads {
        let site = Site { tid: t, path: "root", label: outline.root.label.as_ref() };
        if normalize_assoc(&outline.root.command()) != normalize_assoc(&spec.body) {
            return Err(checker.structure(
                &site,
                "outline",
                format!("the outline proves `{}`, not the body of {}", outline.root.command(), spec.name),
            ));
        }
        for a in outline.root.assertions() {
            if a.has_rimpl() {
                return Err(checker.fail(&site, "outline", None, FailureKind::View(LogicError::RImplNotView)));
            }
        }
        checker.check_node(&outline.root, &spec.pre, &spec.post, t, "root")?;
    }
    Ok(checker.stats())
}

/// Wraps a ground primitive node of a single-line outline.
pub fn single_prim_outline(method: &str, alpha: Prim) -> ProofOutline {
    ProofOutline { method: method.to_string(), threads: vec![], root: OutlineNode::new(NodeKind::Prim(alpha)) }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::command_lang::{Expr, LocExpr};
    use crate::monoid_dcsl::{DcslMonoid, DcslView};
    use crate::state_model::{Domains, Heap, Loc, LocDecl, LocTable, MethodSig, TokenMap, World};
    use crate::views_core::{AbsSpec, Semantics};

    fn sem() -> Semantics {
        Semantics {
            domains: Domains {
                vals: vec![0, 1],
                modulus: None,
                threads: 1,
                conc: LocTable::new(vec![LocDecl { name: "x".into(), values: vec![0, 1], optional: true }]),
                abs: LocTable::new(vec![]),
                methods: vec![MethodSig { name: "m".into(), args: vec![0], rets: vec![0] }],
            },
            specs: vec![AbsSpec { arg_var: "a".into(), ret_var: "r".into(), prim: Prim::Id }],
        }
    }

    fn x(e: Expr) -> Assertion {
        Assertion::leaf(VAssn::pts(LocExpr::named("x"), e))
    }

    fn spec(body: Command, pre: Assertion, post: Assertion) -> MethodSpec {
        MethodSpec {
            name: "m".into(),
            body,
            arg_var: "a".into(),
            ret_var: "r".into(),
            args: vec![0],
            rets: vec![0],
            pre,
            post,
        }
    }

    fn cw(v: i32) -> World {
        World::new(Heap::singleton(Loc(0), v), Heap::new(), TokenMap::new())
    }

    #[test]
    fn evaluation_examples() {
        let m = DcslMonoid::new(sem(), 1 << 20).unwrap();
        let i = Interp::new();
        let or = Assertion::or(x(Expr::Const(0)), x(Expr::Const(1)));
        assert_eq!(eval_assertion(&m, &or, &i, 1).unwrap(), DcslView::new(vec![cw(0), cw(1)]));
        let ex = Assertion::exists("X", x(Expr::var("X")));
        assert_eq!(eval_assertion(&m, &ex, &i, 1).unwrap(), DcslView::new(vec![cw(0), cw(1)]));
        let bad = Assertion::RImpl(Box::new(or.clone()), Box::new(or));
        assert_eq!(eval_assertion(&m, &bad, &i, 1), Err(LogicError::RImplNotView));
    }

    #[test]
    fn id_and_store_outlines() {
        let m = DcslMonoid::new(sem(), 1 << 20).unwrap();
        let p = x(Expr::Const(0));
        let s = spec(Command::Prim(Prim::Id), p.clone(), p.clone());
        assert!(check_proof(&m, &s, &single_prim_outline("m", Prim::Id)).is_ok());
        let store = Prim::Store(LocExpr::named("x"), Expr::Const(1));
        let s2 = spec(Command::Prim(store.clone()), p.clone(), x(Expr::Const(1)));
        assert!(check_proof(&m, &s2, &single_prim_outline("m", store.clone())).is_ok());
        let s3 = spec(Command::Prim(store.clone()), p.clone(), p.clone());
        let err = check_proof(&m, &s3, &single_prim_outline("m", store)).unwrap_err();
        assert_eq!(err.rule, "Prim");
    }

    #[test]
    fn sequences_need_midpoints_and_frames_strip() {
        let m = DcslMonoid::new(sem(), 1 << 20).unwrap();
        let set = |v| Prim::Store(LocExpr::named("x"), Expr::Const(v));
        let body = Command::seq(Command::Prim(set(1)), Command::Prim(set(0)));
        let s = spec(body, x(Expr::Const(0)), x(Expr::Const(0)));
        let no_mid = OutlineNode::new(NodeKind::Seq(vec![
            OutlineNode::new(NodeKind::Prim(set(1))),
            OutlineNode::new(NodeKind::Prim(set(0))),
        ]));
        let o = ProofOutline { method: "m".into(), threads: vec![], root: no_mid };
        assert_eq!(check_proof(&m, &s, &o).unwrap_err().rule, "Seq");
        let with_mid = OutlineNode::new(NodeKind::Seq(vec![
            OutlineNode::new(NodeKind::Prim(set(1))).with_post(x(Expr::Const(1))),
            OutlineNode::new(NodeKind::Prim(set(0))),
        ]));
        let o = ProofOutline { method: "m".into(), threads: vec![], root: with_mid };
        assert!(check_proof(&m, &s, &o).is_ok());

        let emp = Assertion::leaf(VAssn::Emp);
        let p = Assertion::star(x(Expr::Const(0)), emp.clone());
        assert_eq!(strip_frame(&p, &x(Expr::Const(0))), Some(emp.clone()));
        assert_eq!(strip_frame(&p, &x(Expr::Const(1))), None);
    }

    #[test]
    fn skip_requires_implication_and_loops_use_invariants() {
        let m = DcslMonoid::new(sem(), 1 << 20).unwrap();
        let zero = x(Expr::Const(0));
        let any = Assertion::or(zero.clone(), x(Expr::Const(1)));
        let s = spec(Command::Skip, zero.clone(), any.clone());
        let o = ProofOutline { method: "m".into(), threads: vec![], root: OutlineNode::new(NodeKind::Skip) };
        assert!(check_proof(&m, &s, &o).is_ok());
        let s_bad = spec(Command::Skip, any.clone(), zero.clone());
        assert_eq!(check_proof(&m, &s_bad, &o).unwrap_err().rule, "Skip");

        let flip = Prim::Store(LocExpr::named("x"), Expr::Const(1));
        let body = Command::iter(Command::Prim(flip.clone()));
        let s = spec(body, zero.clone(), any.clone());
        let mut it = OutlineNode::new(NodeKind::Iter(Box::new(OutlineNode::new(NodeKind::Prim(flip)))));
        it.invariant = Some(any.clone());
        let o = ProofOutline { method: "m".into(), threads: vec![], root: it };
        assert!(check_proof(&m, &s, &o).is_ok());
    }

    #[test]
    fn association_is_irrelevant() {
        let a = Command::Prim(Prim::Id);
        let left = Command::seq(Command::seq(a.clone(), a.clone()), a.clone());
        let right = Command::seq_all(vec![a.clone(), a.clone(), a]);
        assert_eq!(normalize_assoc(&left), right);
    }
}
