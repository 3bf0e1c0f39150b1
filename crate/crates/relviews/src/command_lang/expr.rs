//! Arithmetic/boolean expressions over heaps and logical variables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::state_model::{Heap, Loc, LocTable, Tid, Val};

/// Interpretation of logical variables.
pub type Interp = BTreeMap<String, Val>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("read of location `{0}` outside the heap domain")]
    UndefinedLocation(String),
    #[error("logical variable `{0}` is unbound")]
    UnboundVar(String),
}

/// A possibly indexed location name such as `k` or `arg[mytid]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocExpr {
    pub base: String,
    pub index: Option<Box<Expr>>,
}

impl LocExpr {
    pub fn named(base: &str) -> Self {
        LocExpr { base: base.to_string(), index: None }
    }

    pub fn indexed(base: &str, index: Expr) -> Self {
        LocExpr { base: base.to_string(), index: Some(Box::new(index)) }
    }

    /// Resolves to a declared location. `Ok(None)` means the computed name is
    /// not declared in `locs`.
    pub fn resolve(&self, ctx: &EvalCtx<'_>) -> Result<Option<Loc>, EvalError> {
        match &self.index {
            None => Ok(ctx.locs.lookup(&self.base)),
            Some(ix) => {
                let i = eval_expr(ix, ctx)?;
                Ok(ctx.locs.lookup(&format!("{}[{}]", self.base, i)))
            }
        }
    }

    pub fn substitute(&self, i: &Interp) -> LocExpr {
        LocExpr {
            base: self.base.clone(),
            index: self.index.as_ref().map(|e| Box::new(e.substitute(i))),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        if let Some(e) = &self.index {
            e.free_vars(out);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(Val),
    Var(String),
    Read(LocExpr),
    /// `mytid()`.
    Tid,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Eq(Box<Expr>, Box<Expr>),
    Ne(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
    Le(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

/// Everything expression evaluation depends on.
#[derive(Clone, Copy)]
pub struct EvalCtx<'a> {
    pub locs: &'a LocTable,
    /// `None` for pure contexts, where any heap read is undefined.
    pub heap: Option<&'a Heap>,
    pub interp: &'a Interp,
    pub tid: Tid,
    pub modulus: Option<Val>,
}

fn wrap(v: i64, m: Option<Val>) -> Val {
    match m {
        Some(m) if m > 0 => v.rem_euclid(i64::from(m)) as Val,
        _ => v as Val,
    }
}

/// `⟦E⟧` in the given heap, interpretation and thread.
pub fn eval_expr(e: &Expr, ctx: &EvalCtx<'_>) -> Result<Val, EvalError> {
    let b = |x: bool| Val::from(x);
    Ok(match e {
        Expr::Const(v) => *v,
        Expr::Var(x) => *ctx
            .interp
            .get(x)
            .ok_or_else(|| EvalError::UnboundVar(x.clone()))?,
        Expr::Tid => Val::from(ctx.tid),
        Expr::Read(l) => {
            let name = || match &l.index {
                None => l.base.clone(),
                Some(ix) => match eval_expr(ix, ctx) {
                    Ok(i) => format!("{}[{}]", l.base, i),
                    Err(_) => format!("{}[?]", l.base),
                },
            };
            let loc = l.resolve(ctx)?.ok_or_else(|| EvalError::UndefinedLocation(name()))?;
            ctx.heap
                .and_then(|h| h.get(loc))
                .ok_or_else(|| EvalError::UndefinedLocation(name()))?
        }
        Expr::Add(x, y) => wrap(
            i64::from(eval_expr(x, ctx)?) + i64::from(eval_expr(y, ctx)?),
            ctx.modulus,
        ),
        Expr::Sub(x, y) => wrap(
            i64::from(eval_expr(x, ctx)?) - i64::from(eval_expr(y, ctx)?),
            ctx.modulus,
        ),
        Expr::Eq(x, y) => b(eval_expr(x, ctx)? == eval_expr(y, ctx)?),
        Expr::Ne(x, y) => b(eval_expr(x, ctx)? != eval_expr(y, ctx)?),
        Expr::Lt(x, y) => b(eval_expr(x, ctx)? < eval_expr(y, ctx)?),
        Expr::Le(x, y) => b(eval_expr(x, ctx)? <= eval_expr(y, ctx)?),
        Expr::Not(x) => b(eval_expr(x, ctx)? == 0),
        Expr::And(x, y) => b(eval_expr(x, ctx)? != 0 && eval_expr(y, ctx)? != 0),
        Expr::Or(x, y) => b(eval_expr(x, ctx)? != 0 || eval_expr(y, ctx)? != 0),
    })
}

impl Expr {
    pub fn var(x: &str) -> Expr {
        Expr::Var(x.to_string())
    }

    pub fn read(l: LocExpr) -> Expr {
        Expr::Read(l)
    }

    pub fn not(e: Expr) -> Expr {
        Expr::Not(Box::new(e))
    }

    pub fn eq(a: Expr, b: Expr) -> Expr {
        Expr::Eq(Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    /// Replaces bound logical variables by constants.
    pub fn substitute(&self, i: &Interp) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(i));
        match self {
            Expr::Var(x) => match i.get(x) {
                Some(v) => Expr::Const(*v),
                None => self.clone(),
            },
            Expr::Const(_) | Expr::Tid => self.clone(),
            Expr::Read(l) => Expr::Read(l.substitute(i)),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Eq(a, b) => Expr::Eq(s(a), s(b)),
            Expr::Ne(a, b) => Expr::Ne(s(a), s(b)),
            Expr::Lt(a, b) => Expr::Lt(s(a), s(b)),
            Expr::Le(a, b) => Expr::Le(s(a), s(b)),
            Expr::Not(a) => Expr::Not(s(a)),
            Expr::And(a, b) => Expr::And(s(a), s(b)),
            Expr::Or(a, b) => Expr::Or(s(a), s(b)),
        }
    }

    /// Renames one logical variable.
    pub fn rename(&self, from: &str, to: &str) -> Expr {
        match self {
            Expr::Var(x) if x == from => Expr::Var(to.to_string()),
            _ => self.map_children(&|e| e.rename(from, to)),
        }
    }

    fn map_children(&self, f: &dyn Fn(&Expr) -> Expr) -> Expr {
        let s = |e: &Expr| Box::new(f(e));
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Tid => self.clone(),
            Expr::Read(l) => Expr::Read(LocExpr {
                base: l.base.clone(),
                index: l.index.as_ref().map(|e| s(e)),
            }),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Sub(a, b) => Expr::Sub(s(a), s(b)),
            Expr::Eq(a, b) => Expr::Eq(s(a), s(b)),
            Expr::Ne(a, b) => Expr::Ne(s(a), s(b)),
            Expr::Lt(a, b) => Expr::Lt(s(a), s(b)),
            Expr::Le(a, b) => Expr::Le(s(a), s(b)),
            Expr::Not(a) => Expr::Not(s(a)),
            Expr::And(a, b) => Expr::And(s(a), s(b)),
            Expr::Or(a, b) => Expr::Or(s(a), s(b)),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Const(_) | Expr::Tid => {}
            Expr::Read(l) => l.free_vars(out),
            Expr::Not(a) => a.free_vars(out),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Eq(a, b)
            | Expr::Ne(a, b)
            | Expr::Lt(a, b)
            | Expr::Le(a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    /// True if evaluation never reads the heap.
    pub fn is_pure(&self) -> bool {
        match self {
            Expr::Read(_) => false,
            Expr::Const(_) | Expr::Var(_) | Expr::Tid => true,
            Expr::Not(a) => a.is_pure(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Eq(a, b)
            | Expr::Ne(a, b)
            | Expr::Lt(a, b)
            | Expr::Le(a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b) => a.is_pure() && b.is_pure(),
        }
    }
}

impl fmt::Display for LocExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.index {
            None => write!(f, "{}", self.base),
            Some(i) => write!(f, "{}[{}]", self.base, i),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(x) => write!(f, "{x}"),
            Expr::Read(l) => write!(f, "{l}"),
            Expr::Tid => write!(f, "mytid()"),
            Expr::Add(a, b) => write!(f, "{a} + {b}"),
            Expr::Sub(a, b) => write!(f, "{a} - {b}"),
            Expr::Eq(a, b) => write!(f, "{a} = {b}"),
            Expr::Ne(a, b) => write!(f, "{a} != {b}"),
            Expr::Lt(a, b) => write!(f, "{a} < {b}"),
            Expr::Le(a, b) => write!(f, "{a} <= {b}"),
            Expr::Not(a) => write!(f, "!({a})"),
            Expr::And(a, b) => write!(f, "({a} && {b})"),
            Expr::Or(a, b) => write!(f, "({a} || {b})"),
        }
    }
}
