//! Sequential commands, expression evaluation and small-step semantics.

pub mod expr;
pub mod prim;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use expr::{eval_expr, EvalCtx, EvalError, Expr, Interp, LocExpr};
pub use prim::{Prim, StepError, TransformerTable, BUILTIN_PRIMS};

use crate::state_model::{Heap, Tid};

/// `C ::= α | C ; C | C + C | C⋆ | skip`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Prim(Prim),
    Seq(Arc<Command>, Arc<Command>),
    Choice(Arc<Command>, Arc<Command>),
    Iter(Arc<Command>),
    Skip,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommandError {
    #[error("fault reachable: `{prim}` in thread {tid}: {detail}")]
    FaultReachable { prim: String, tid: Tid, detail: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Command {
    pub fn prim(p: Prim) -> Command {
        Command::Prim(p)
    }

    pub fn seq(a: Command, b: Command) -> Command {
        Command::Seq(Arc::new(a), Arc::new(b))
    }

    /// Right-folded sequence; the empty sequence is `skip`.
    pub fn seq_all(cs: Vec<Command>) -> Command {
        let mut it = cs.into_iter().rev();
        match it.next() {
            None => Command::Skip,
            Some(last) => it.fold(last, |acc, c| Command::seq(c, acc)),
        }
    }

    pub fn choice(a: Command, b: Command) -> Command {
        Command::Choice(Arc::new(a), Arc::new(b))
    }

    /// Right-folded choice over a non-empty list.
    pub fn choice_all(cs: Vec<Command>) -> Command {
        let mut it = cs.into_iter().rev();
        match it.next() {
            None => Command::Prim(Prim::Assume(Expr::Const(0))),
            Some(last) => it.fold(last, |acc, c| Command::choice(c, acc)),
        }
    }

    pub fn iter(c: Command) -> Command {
        Command::Iter(Arc::new(c))
    }

    /// `if E then C1 else C2` as `(assume(E); C1) + (assume(!E); C2)`.
    pub fn if_then_else(e: Expr, c1: Command, c2: Command) -> Command {
        Command::choice(
            Command::seq(Command::Prim(Prim::Assume(e.clone())), c1),
            Command::seq(Command::Prim(Prim::Assume(Expr::not(e))), c2),
        )
    }

    /// `while E do C` as `(assume(E); C)⋆; assume(!E)`.
    pub fn while_do(e: Expr, c: Command) -> Command {
        Command::seq(
            Command::iter(Command::seq(Command::Prim(Prim::Assume(e.clone())), c)),
            Command::Prim(Prim::Assume(Expr::not(e))),
        )
    }

    pub fn substitute(&self, i: &Interp) -> Command {
        match self {
            Command::Prim(p) => Command::Prim(p.substitute(i)),
            Command::Seq(a, b) => Command::seq(a.substitute(i), b.substitute(i)),
            Command::Choice(a, b) => Command::choice(a.substitute(i), b.substitute(i)),
            Command::Iter(c) => Command::iter(c.substitute(i)),
            Command::Skip => Command::Skip,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Command::Prim(p) => p.free_vars(out),
            Command::Seq(a, b) | Command::Choice(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Command::Iter(c) => c.collect_vars(out),
            Command::Skip => {}
        }
    }

    /// All primitives occurring in the command.
    pub fn prims(&self) -> Vec<&Prim> {
        let mut out = Vec::new();
        self.collect_prims(&mut out);
        out
    }

    fn collect_prims<'a>(&'a self, out: &mut Vec<&'a Prim>) {
        match self {
            Command::Prim(p) => out.push(p),
            Command::Seq(a, b) | Command::Choice(a, b) => {
                a.collect_prims(out);
                b.collect_prims(out);
            }
            Command::Iter(c) => c.collect_prims(out),
            Command::Skip => {}
        }
    }
}

/// The labelled transitions `c -α-> c'` of the sequential semantics.
pub fn step(c: &Command) -> Vec<(Prim, Command)> {
    match c {
        Command::Prim(p) => vec![(p.clone(), Command::Skip)],
        Command::Seq(a, b) => {
            if **a == Command::Skip {
                return vec![(Prim::Id, (**b).clone())];
            }
            step(a)
                .into_iter()
                .map(|(p, a2)| (p, Command::Seq(Arc::new(a2), b.clone())))
                .collect()
        }
        Command::Choice(a, b) => vec![(Prim::Id, (**a).clone()), (Prim::Id, (**b).clone())],
        Command::Iter(body) => vec![
            (Prim::Id, Command::Seq(body.clone(), Arc::new(c.clone()))),
            (Prim::Id, Command::Skip),
        ],
        Command::Skip => vec![],
    }
}

/// Steps `c` in state `σ` for thread `t`.
pub fn state_step(
    c: &Command,
    heap: &Heap,
    t: Tid,
    tt: &TransformerTable<'_>,
    interp: &Interp,
) -> Result<Vec<(Prim, Command, Heap)>, CommandError> {
    let mut out = Vec::new();
    for (p, c2) in step(c) {
        let posts = tt.apply(&p, t, heap, interp).map_err(|e| match e {
            StepError::Fault(detail) => CommandError::FaultReachable { prim: p.to_string(), tid: t, detail },
            StepError::Model(e) => CommandError::Eval(e),
        })?;
        for h in posts {
            out.push((p.clone(), c2.clone(), h));
        }
    }
    Ok(out)
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Prim(p) => write!(f, "{p}"),
            Command::Seq(a, b) => write!(f, "{a}; {b}"),
            Command::Choice(a, b) => write!(f, "({a}) + ({b})"),
            Command::Iter(c) => write!(f, "({c})*"),
            Command::Skip => write!(f, "skip"),
        }
    }
}
