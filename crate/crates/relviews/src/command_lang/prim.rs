//! Primitive commands and their state transformers.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::expr::{eval_expr, EvalCtx, EvalError, Expr, Interp, LocExpr};
use crate::state_model::{Heap, LocTable, Tid, Val};

/// Built-in primitive commands. CAS is split into a succeeding and a failing
/// half so that `if CAS(..)` becomes a choice between two atomic filters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prim {
    Id,
    Assume(Expr),
    Store(LocExpr, Expr),
    /// `dst := src` as one atomic copy.
    Load(LocExpr, LocExpr),
    CasSucc(LocExpr, Expr, Expr),
    CasFail(LocExpr, Expr),
    /// A sequence of primitives executed as a single atomic step.
    Atomic(Vec<Prim>),
}

/// The ways a transformer can leave the space of ordinary heaps.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StepError {
    /// The result set contains the fault state.
    #[error("fault: {0}")]
    Fault(String),
    #[error(transparent)]
    Model(EvalError),
}

impl From<EvalError> for StepError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::UndefinedLocation(l) => StepError::Fault(format!("access to `{l}`")),
            other => StepError::Model(other),
        }
    }
}

/// Names of the shipped transformers; `id` is always present.
pub const BUILTIN_PRIMS: &[&str] = &["id", "assume", "store", "load", "cas_succ", "cas_fail", "atomic"];

impl Prim {
    pub fn name(&self) -> &'static str {
        match self {
            Prim::Id => "id",
            Prim::Assume(_) => "assume",
            Prim::Store(..) => "store",
            Prim::Load(..) => "load",
            Prim::CasSucc(..) => "cas_succ",
            Prim::CasFail(..) => "cas_fail",
            Prim::Atomic(_) => "atomic",
        }
    }

    pub fn substitute(&self, i: &Interp) -> Prim {
        match self {
            Prim::Id => Prim::Id,
            Prim::Assume(e) => Prim::Assume(e.substitute(i)),
            Prim::Store(l, e) => Prim::Store(l.substitute(i), e.substitute(i)),
            Prim::Load(d, s) => Prim::Load(d.substitute(i), s.substitute(i)),
            Prim::CasSucc(l, o, n) => Prim::CasSucc(l.substitute(i), o.substitute(i), n.substitute(i)),
            Prim::CasFail(l, o) => Prim::CasFail(l.substitute(i), o.substitute(i)),
            Prim::Atomic(ps) => Prim::Atomic(ps.iter().map(|p| p.substitute(i)).collect()),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Prim::Id => {}
            Prim::Assume(e) => e.free_vars(out),
            Prim::Store(l, e) => {
                l.free_vars(out);
                e.free_vars(out);
            }
            Prim::Load(d, s) => {
                d.free_vars(out);
                s.free_vars(out);
            }
            Prim::CasSucc(l, o, n) => {
                l.free_vars(out);
                o.free_vars(out);
                n.free_vars(out);
            }
            Prim::CasFail(l, o) => {
                l.free_vars(out);
                o.free_vars(out);
            }
            Prim::Atomic(ps) => ps.iter().for_each(|p| p.free_vars(out)),
        }
    }
}

/// Transformer table for one heap side: `⟦α⟧t(σ)`.
#[derive(Clone, Copy)]
pub struct TransformerTable<'a> {
    pub locs: &'a LocTable,
    pub modulus: Option<Val>,
}

impl<'a> TransformerTable<'a> {
    pub fn new(locs: &'a LocTable, modulus: Option<Val>) -> Self {
        TransformerTable { locs, modulus }
    }

    /// Runs `prim` in thread `t`. `Ok(vec![])` is blocking; `Err(Fault)`
    /// means the fault state is among the results.
    pub fn apply(&self, prim: &Prim, t: Tid, heap: &Heap, interp: &Interp) -> Result<Vec<Heap>, StepError> {
        let ctx = EvalCtx { locs: self.locs, heap: Some(heap), interp, tid: t, modulus: self.modulus };
        let cell = |l: &LocExpr| -> Result<crate::state_model::Loc, StepError> {
            match l.resolve(&ctx)? {
                Some(loc) if heap.contains(loc) => Ok(loc),
                _ => Err(StepError::Fault(format!("access to `{}`", l))),
            }
        };
        match prim {
            Prim::Id => Ok(vec![heap.clone()]),
            Prim::Assume(e) => {
                if eval_expr(e, &ctx)? != 0 {
                    Ok(vec![heap.clone()])
                } else {
                    Ok(vec![])
                }
            }
            Prim::Store(l, e) => {
                let loc = cell(l)?;
                let v = eval_expr(e, &ctx)?;
                let mut h = heap.clone();
                h.set(loc, v);
                Ok(vec![h])
            }
            Prim::Load(d, s) => {
                let dst = cell(d)?;
                let src = cell(s)?;
                let mut h = heap.clone();
                h.set(dst, heap.get(src).unwrap_or_default());
                Ok(vec![h])
            }
            Prim::CasSucc(l, old, new) => {
                let loc = cell(l)?;
                let o = eval_expr(old, &ctx)?;
                let n = eval_expr(new, &ctx)?;
                if heap.get(loc) == Some(o) {
                    let mut h = heap.clone();
                    h.set(loc, n);
                    Ok(vec![h])
                } else {
                    Ok(vec![])
                }
            }
            Prim::CasFail(l, old) => {
                let loc = cell(l)?;
                let o = eval_expr(old, &ctx)?;
                if heap.get(loc) != Some(o) {
                    Ok(vec![heap.clone()])
                } else {
                    Ok(vec![])
                }
            }
            Prim::Atomic(ps) => {
                let mut cur = vec![heap.clone()];
                for p in ps {
                    let mut next = Vec::new();
                    for h in &cur {
                        next.extend(self.apply(p, t, h, interp)?);
                    }
                    next.sort();
                    next.dedup();
                    cur = next;
                }
                Ok(cur)
            }
        }
    }
}

fn list(ps: &[Prim]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; ")
}

impl fmt::Display for Prim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prim::Id => write!(f, "id"),
            Prim::Assume(e) => write!(f, "assume({e})"),
            Prim::Store(l, e) => write!(f, "{l} := {e}"),
            Prim::Load(d, s) => write!(f, "{d} := load {s}"),
            Prim::CasSucc(l, o, n) => write!(f, "CAS(&{l}, {o}, {n}) succeeds"),
            Prim::CasFail(l, o) => write!(f, "CAS(&{l}, {o}, _) fails"),
            Prim::Atomic(ps) => write!(f, "<{}>", list(ps)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state_model::{Loc, LocDecl};

    fn table() -> LocTable {
        let d = |n: &str| LocDecl { name: n.into(), values: vec![0, 1, 2, 3, 4, 5], optional: true };
        LocTable::new(vec![d("l"), d("L")])
    }

    #[test]
    fn id_and_assume() {
        let locs = table();
        let tt = TransformerTable::new(&locs, None);
        let h = Heap::from_cells([(Loc(0), 0)]);
        let i = Interp::new();
        assert_eq!(tt.apply(&Prim::Id, 1, &h, &i), Ok(vec![h.clone()]));
        assert_eq!(tt.apply(&Prim::Assume(Expr::Const(0)), 1, &h, &i), Ok(vec![]));
        assert_eq!(tt.apply(&Prim::Assume(Expr::Const(7)), 1, &h, &i), Ok(vec![h.clone()]));
    }

    #[test]
    fn store_faults_outside_domain() {
        let locs = table();
        let tt = TransformerTable::new(&locs, None);
        let i = Interp::new();
        let st = Prim::Store(LocExpr::named("l"), Expr::Const(5));
        assert!(matches!(tt.apply(&st, 1, &Heap::new(), &i), Err(StepError::Fault(_))));
        let h = Heap::from_cells([(Loc(0), 0)]);
        assert_eq!(tt.apply(&st, 1, &h, &i), Ok(vec![Heap::from_cells([(Loc(0), 5)])]));
    }

    #[test]
    fn cas_halves_partition_states() {
        let locs = table();
        let tt = TransformerTable::new(&locs, None);
        let i = Interp::new();
        let succ = Prim::CasSucc(LocExpr::named("L"), Expr::Const(0), Expr::Tid);
        let fail = Prim::CasFail(LocExpr::named("L"), Expr::Const(0));
        for v in 0..3 {
            let h = Heap::from_cells([(Loc(1), v)]);
            let s = tt.apply(&succ, 2, &h, &i).unwrap();
            let f = tt.apply(&fail, 2, &h, &i).unwrap();
            assert_eq!(s.len() + f.len(), 1);
            if v == 0 {
                assert_eq!(s, vec![Heap::from_cells([(Loc(1), 2)])]);
            }
        }
    }

    #[test]
    fn atomic_block_composes() {
        let locs = table();
        let tt = TransformerTable::new(&locs, Some(4));
        let mut i = Interp::new();
        i.insert("a".into(), 1);
        i.insert("r".into(), 1);
        let k = LocExpr::named("L");
        let body = Prim::Atomic(vec![
            Prim::Store(k.clone(), Expr::add(Expr::read(k.clone()), Expr::var("a"))),
            Prim::Assume(Expr::eq(Expr::read(k.clone()), Expr::var("r"))),
        ]);
        let h0 = Heap::from_cells([(Loc(1), 0)]);
        assert_eq!(tt.apply(&body, 1, &h0, &i), Ok(vec![Heap::from_cells([(Loc(1), 1)])]));
        let h1 = Heap::from_cells([(Loc(1), 1)]);
        assert_eq!(tt.apply(&body, 1, &h1, &i), Ok(vec![]));
    }
}
