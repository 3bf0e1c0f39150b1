//! Loading and saving library models and proof outlines as JSON.
//!
//! Top-level structure is decoded with serde, so shape errors carry a line
//! and column. Terms (expressions, commands, assertions, outline nodes) are
//! decoded by hand and their errors carry a JSON path.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::command_lang::{Command, Expr, LocExpr, Prim};
use crate::linearizability::{ConcMethod, LibraryModel, MethodAssertions, MonoidKind};
use crate::logic::{Assertion, NodeKind, OutlineNode, ProofOutline};
use crate::monoid_rgsep::{RgAction, RgSpec};
use crate::state_model::{Domains, Heap, LocDecl, LocTable, MethodId, MethodSig, Tid, TokenKind, Val};
use crate::views_core::{AbsSpec, Semantics, VAssn};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("{at}: {msg}")]
    Invalid { at: String, msg: String },
    /// The concrete and abstract method sets differ.
    #[error("dom mismatch: {0}")]
    DomMismatch(String),
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Json { line: e.line(), column: e.column(), msg: e.to_string() }
    }
}

type Res<T> = Result<T, ModelError>;

fn invalid<T>(at: &str, msg: impl Into<String>) -> Res<T> {
    Err(ModelError::Invalid { at: at.to_string(), msg: msg.into() })
}

/// A named assertion with parameters, expanded at each call site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroDef {
    #[serde(default)]
    pub params: Vec<String>,
    pub body: Value,
}

/// A loaded model together with the macros its file declared.
#[derive(Clone, Debug)]
pub struct ModelFile {
    pub model: LibraryModel,
    pub macros: BTreeMap<String, MacroDef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    monoid: String,
    domains: RawDomains,
    methods: Vec<RawMethod>,
    #[serde(rename = "abstract")]
    abstract_methods: BTreeMap<String, Value>,
    #[serde(default)]
    init: RawInit,
    #[serde(default)]
    actions: Vec<RawAction>,
    #[serde(default)]
    guarantee: Vec<String>,
    #[serde(default)]
    rely_extra: Vec<String>,
    #[serde(default)]
    macros: BTreeMap<String, MacroDef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomains {
    vals: Vec<Val>,
    #[serde(default)]
    modulus: Option<Val>,
    threads: Tid,
    #[serde(default)]
    conc: Vec<RawLoc>,
    #[serde(default)]
    abs: Vec<RawLoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLoc {
    name: String,
    /// Declares `name[i]` for each index instead of `name`.
    #[serde(default)]
    indices: Option<Vec<Val>>,
    values: Vec<Val>,
    #[serde(default)]
    optional: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMethod {
    name: String,
    #[serde(default = "default_arg")]
    arg: String,
    #[serde(default = "default_ret")]
    ret: String,
    args: Vec<Val>,
    rets: Vec<Val>,
    body: Value,
    #[serde(default)]
    pre: Option<Value>,
    #[serde(default)]
    post: Option<Value>,
}

fn default_arg() -> String {
    "a".into()
}

fn default_ret() -> String {
    "r".into()
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    #[serde(default)]
    conc: BTreeMap<String, Val>,
    #[serde(default)]
    abs: BTreeMap<String, Val>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAction {
    name: String,
    pre: Value,
    post: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutlines {
    outlines: Vec<RawOutline>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutline {
    method: String,
    #[serde(default)]
    threads: Vec<Tid>,
    root: Value,
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "_"
}

/// `x` or `x[n]` for an integer `n`.
fn is_loc_name(s: &str) -> bool {
    match s.split_once('[') {
        None => is_ident(s),
        Some((base, rest)) => {
            is_ident(base) && rest.strip_suffix(']').is_some_and(|n| n.parse::<Val>().is_ok_and(|v| v.to_string() == n))
        }
    }
}

fn single_key<'v>(v: &'v Value, at: &str) -> Res<(&'v str, &'v Value)> {
    match v.as_object() {
        Some(o) if o.len() == 1 => {
            let (k, x) = o.iter().next().expect("one entry");
            Ok((k.as_str(), x))
        }
        _ => invalid(at, format!("expected an object with a single key, found {v}")),
    }
}

fn array<'v>(v: &'v Value, n: Option<usize>, at: &str) -> Res<&'v Vec<Value>> {
    match v.as_array() {
        Some(a) if n.map_or(true, |n| a.len() == n) => Ok(a),
        _ => match n {
            Some(n) => invalid(at, format!("expected an array of {n} elements")),
            None => invalid(at, "expected an array"),
        },
    }
}

fn string<'v>(v: &'v Value, at: &str) -> Res<&'v str> {
    v.as_str().map_or_else(|| invalid(at, "expected a string"), Ok)
}

/// Term decoder state.
struct Terms<'a> {
    methods: Vec<String>,
    threads: Tid,
    macros: &'a BTreeMap<String, MacroDef>,
    /// Fresh names for wildcards of the atom being decoded.
    wild: Option<Vec<String>>,
    /// Macros being expanded, for recursion detection.
    stack: Vec<String>,
    fresh: u32,
}

impl<'a> Terms<'a> {
    fn expr(&mut self, v: &Value, at: &str) -> Res<Expr> {
        match v {
            Value::Number(n) => match n.as_i64().and_then(|x| Val::try_from(x).ok()) {
                Some(x) => Ok(Expr::Const(x)),
                None => invalid(at, format!("`{n}` is not a machine integer")),
            },
            Value::String(s) if s == "mytid" => Ok(Expr::Tid),
            Value::String(s) if s == "_" => match &mut self.wild {
                Some(ws) => {
                    let x = format!("_{}", ws.len() + 1);
                    ws.push(x.clone());
                    Ok(Expr::Var(x))
                }
                None => invalid(at, "`_` is only allowed in points-to, token and pure atoms"),
            },
            Value::String(s) if is_ident(s) => Ok(Expr::Var(s.clone())),
            Value::String(s) => invalid(at, format!("`{s}` is not a variable name")),
            _ => {
                let (op, x) = single_key(v, at)?;
                let at2 = format!("{at}.{op}");
                match op {
                    "read" => Ok(Expr::Read(self.loc(x, &at2)?)),
                    "!" => Ok(Expr::Not(Box::new(self.expr(x, &at2)?))),
                    "+" | "-" | "==" | "!=" | "<" | "<=" | "&&" | "||" => {
                        let xs = array(x, None, &at2)?;
                        if xs.len() < 2 {
                            return invalid(&at2, "an operator needs at least two operands");
                        }
                        let mut acc = self.expr(&xs[0], &format!("{at2}[0]"))?;
                        for (k, y) in xs.iter().enumerate().skip(1) {
                            let b = Box::new(self.expr(y, &format!("{at2}[{k}]"))?);
                            let a = Box::new(acc);
                            acc = match op {
                                "+" => Expr::Add(a, b),
                                "-" => Expr::Sub(a, b),
                                "==" => Expr::Eq(a, b),
                                "!=" => Expr::Ne(a, b),
                                "<" => Expr::Lt(a, b),
                                "<=" => Expr::Le(a, b),
                                "&&" => Expr::And(a, b),
                                _ => Expr::Or(a, b),
                            };
                        }
                        Ok(acc)
                    }
                    _ => invalid(at, format!("unknown expression operator `{op}`")),
                }
            }
        }
    }

    fn loc(&mut self, v: &Value, at: &str) -> Res<LocExpr> {
        if let Some(s) = v.as_str() {
            let Some(open) = s.find('[') else {
                return if is_ident(s) { Ok(LocExpr::named(s)) } else { invalid(at, format!("`{s}` is not a location")) };
            };
            let base = &s[..open];
            let Some(inner) = s[open + 1..].strip_suffix(']') else {
                return invalid(at, format!("`{s}` is not a location"));
            };
            if !is_ident(base) {
                return invalid(at, format!("`{s}` is not a location"));
            }
            let idx = match inner.parse::<Val>() {
                Ok(n) => Value::from(n),
                Err(_) => Value::String(inner.to_string()),
            };
            return Ok(LocExpr::indexed(base, self.expr(&idx, at)?));
        }
        let o = match v.as_object() {
            Some(o) if o.len() == 2 && o.contains_key("arr") && o.contains_key("idx") => o,
            _ => return invalid(at, "expected a location name or {\"arr\", \"idx\"}"),
        };
        let base = string(&o["arr"], &format!("{at}.arr"))?;
        if !is_ident(base) {
            return invalid(at, format!("`{base}` is not a location"));
        }
        Ok(LocExpr::indexed(base, self.expr(&o["idx"], &format!("{at}.idx"))?))
    }

    fn prim(&mut self, v: &Value, at: &str) -> Res<Prim> {
        if v.as_str() == Some("id") {
            return Ok(Prim::Id);
        }
        let (op, x) = single_key(v, at)?;
        let at2 = format!("{at}.{op}");
        let el = |k: usize| format!("{at2}[{k}]");
        Ok(match op {
            "assume" => Prim::Assume(self.expr(x, &at2)?),
            "store" => {
                let xs = array(x, Some(2), &at2)?;
                Prim::Store(self.loc(&xs[0], &el(0))?, self.expr(&xs[1], &el(1))?)
            }
            "load" => {
                let xs = array(x, Some(2), &at2)?;
                Prim::Load(self.loc(&xs[0], &el(0))?, self.loc(&xs[1], &el(1))?)
            }
            "cas_succ" => {
                let xs = array(x, Some(3), &at2)?;
                Prim::CasSucc(self.loc(&xs[0], &el(0))?, self.expr(&xs[1], &el(1))?, self.expr(&xs[2], &el(2))?)
            }
            "cas_fail" => {
                let xs = array(x, Some(2), &at2)?;
                Prim::CasFail(self.loc(&xs[0], &el(0))?, self.expr(&xs[1], &el(1))?)
            }
            "atomic" => {
                let xs = array(x, None, &at2)?;
                let ps = xs.iter().enumerate().map(|(k, p)| self.prim(p, &el(k))).collect::<Res<Vec<_>>>()?;
                Prim::Atomic(ps)
            }
            _ => return invalid(at, format!("unknown primitive `{op}`")),
        })
    }

    fn command(&mut self, v: &Value, at: &str) -> Res<Command> {
        if v.as_str() == Some("skip") {
            return Ok(Command::Skip);
        }
        if v.as_str() == Some("id") {
            return Ok(Command::Prim(Prim::Id));
        }
        let o = match v.as_object() {
            Some(o) => o,
            None => return invalid(at, "expected a command"),
        };
        if o.contains_key("if") {
            check_keys(o, &["if", "then", "else"], &["if", "then"], at)?;
            let e = self.expr(&o["if"], &format!("{at}.if"))?;
            let c1 = self.command(&o["then"], &format!("{at}.then"))?;
            let c2 = match o.get("else") {
                Some(c) => self.command(c, &format!("{at}.else"))?,
                None => Command::Skip,
            };
            return Ok(Command::if_then_else(e, c1, c2));
        }
        if o.contains_key("while") {
            check_keys(o, &["while", "do"], &["while", "do"], at)?;
            let e = self.expr(&o["while"], &format!("{at}.while"))?;
            let c = self.command(&o["do"], &format!("{at}.do"))?;
            return Ok(Command::while_do(e, c));
        }
        let (op, x) = single_key(v, at)?;
        let at2 = format!("{at}.{op}");
        match op {
            "seq" | "choice" => {
                let xs = array(x, None, &at2)?;
                let cs =
                    xs.iter().enumerate().map(|(k, c)| self.command(c, &format!("{at2}[{k}]"))).collect::<Res<Vec<_>>>()?;
                Ok(if op == "seq" { Command::seq_all(cs) } else { Command::choice_all(cs) })
            }
            "iter" => Ok(Command::iter(self.command(x, &at2)?)),
            "prim" => Ok(Command::Prim(self.prim(x, &at2)?)),
            "skip" => Ok(Command::Skip),
            _ => Ok(Command::Prim(self.prim(v, at)?)),
        }
    }

    fn method(&self, v: &Value, at: &str) -> Res<MethodId> {
        let name = string(v, at)?;
        match self.methods.iter().position(|m| m == name) {
            Some(k) => Ok(MethodId(k as u16)),
            None => invalid(at, format!("unknown method `{name}`")),
        }
    }

    /// Decodes an atom, binding its wildcards existentially.
    fn atom(&mut self, f: impl FnOnce(&mut Self) -> Res<VAssn>) -> Res<VAssn> {
        let saved = self.wild.replace(Vec::new());
        let r = f(self);
        let ws = std::mem::replace(&mut self.wild, saved).unwrap_or_default();
        let mut p = r?;
        for x in ws.iter().rev() {
            p = VAssn::exists(x, p);
        }
        Ok(p)
    }

    fn vassn(&mut self, v: &Value, at: &str) -> Res<VAssn> {
        match v.as_str() {
            Some("emp") => return Ok(VAssn::Emp),
            Some("true") => return Ok(VAssn::True),
            Some("false") => return Ok(VAssn::False),
            Some(s) => return invalid(at, format!("unknown view assertion `{s}`")),
            None => {}
        }
        let o = match v.as_object() {
            Some(o) => o,
            None => return invalid(at, "expected a view assertion"),
        };
        if o.contains_key("exists") {
            check_keys(o, &["exists", "body"], &["exists", "body"], at)?;
            let x = bound_var(&o["exists"], &format!("{at}.exists"))?;
            return Ok(VAssn::exists(&x, self.vassn(&o["body"], &format!("{at}.body"))?));
        }
        if o.contains_key("call") {
            check_keys(o, &["call", "args"], &["call"], at)?;
            return self.call(o, at);
        }
        let (op, x) = single_key(v, at)?;
        let at2 = format!("{at}.{op}");
        let el = |k: usize| format!("{at2}[{k}]");
        match op {
            "pure" => self.atom(|s| Ok(VAssn::Pure(s.expr(x, &at2)?))),
            "pts" | "apts" => self.atom(|s| {
                let xs = array(x, Some(2), &at2)?;
                let l = s.loc(&xs[0], &el(0))?;
                let e = s.expr(&xs[1], &el(1))?;
                Ok(if op == "pts" { VAssn::Pts(l, e) } else { VAssn::APts(l, e) })
            }),
            "todo" | "done" => self.atom(|s| {
                let o = match x.as_object() {
                    Some(o) => o,
                    None => return invalid(&at2, "expected {\"t\", \"m\", \"a\", \"r\"}"),
                };
                check_keys(o, &["t", "m", "a", "r"], &["m", "a", "r"], &at2)?;
                let thread = match o.get("t") {
                    Some(t) => s.expr(t, &format!("{at2}.t"))?,
                    None => Expr::Tid,
                };
                Ok(VAssn::Tok {
                    kind: if op == "todo" { TokenKind::Todo } else { TokenKind::Done },
                    thread,
                    method: s.method(&o["m"], &format!("{at2}.m"))?,
                    arg: s.expr(&o["a"], &format!("{at2}.a"))?,
                    ret: s.expr(&o["r"], &format!("{at2}.r"))?,
                })
            }),
            "box" => Ok(VAssn::boxed(self.vassn(x, &at2)?)),
            "star" | "or" => {
                let xs = array(x, None, &at2)?;
                let ps = xs.iter().enumerate().map(|(k, p)| self.vassn(p, &el(k))).collect::<Res<Vec<_>>>()?;
                Ok(if op == "star" { VAssn::star(ps) } else { VAssn::or(ps) })
            }
            "sep_threads" => {
                let o = match x.as_object() {
                    Some(o) => o,
                    None => return invalid(&at2, "expected {\"var\", \"body\"}"),
                };
                check_keys(o, &["var", "body"], &["var", "body"], &at2)?;
                let i = bound_var(&o["var"], &format!("{at2}.var"))?;
                let body = self.vassn(&o["body"], &format!("{at2}.body"))?;
                let parts = (1..=self.threads)
                    .map(|t| self.subst_vassn(&body, &HashMap::from([(i.clone(), Expr::Const(t as Val))])))
                    .collect();
                Ok(VAssn::star(parts))
            }
            _ => invalid(at, format!("unknown view assertion `{op}`")),
        }
    }

    fn call(&mut self, o: &Map<String, Value>, at: &str) -> Res<VAssn> {
        let name = string(&o["call"], &format!("{at}.call"))?;
        let Some(def) = self.macros.get(name) else {
            return invalid(at, format!("unknown macro `{name}`"));
        };
        if self.stack.iter().any(|m| m == name) {
            return invalid(at, format!("macro `{name}` is recursive"));
        }
        let empty = Vec::new();
        let args = match o.get("args") {
            Some(a) => array(a, None, &format!("{at}.args"))?,
            None => &empty,
        };
        if args.len() != def.params.len() {
            return invalid(at, format!("macro `{name}` takes {} arguments, given {}", def.params.len(), args.len()));
        }
        let mut map = HashMap::new();
        for (k, (x, a)) in def.params.iter().zip(args).enumerate() {
            map.insert(x.clone(), self.expr(a, &format!("{at}.args[{k}]"))?);
        }
        self.stack.push(name.to_string());
        let body = self.vassn(&def.body, &format!("macro {name}"));
        self.stack.pop();
        Ok(self.subst_vassn(&body?, &map))
    }

    fn assertion(&mut self, v: &Value, at: &str) -> Res<Assertion> {
        let o = match v.as_object() {
            Some(o) => o,
            None => return invalid(at, "expected an assertion"),
        };
        if o.contains_key("exists") {
            check_keys(o, &["exists", "body"], &["exists", "body"], at)?;
            let x = bound_var(&o["exists"], &format!("{at}.exists"))?;
            return Ok(Assertion::exists(&x, self.assertion(&o["body"], &format!("{at}.body"))?));
        }
        let (op, x) = single_key(v, at)?;
        let at2 = format!("{at}.{op}");
        let el = |k: usize| format!("{at2}[{k}]");
        match op {
            "view" => Ok(Assertion::Leaf(self.vassn(x, &at2)?)),
            "star" | "or" => {
                let xs = array(x, None, &at2)?;
                let ps = xs.iter().enumerate().map(|(k, p)| self.assertion(p, &el(k))).collect::<Res<Vec<_>>>()?;
                if op == "star" {
                    Ok(Assertion::star_all(ps))
                } else {
                    Assertion::or_all(ps).map_or_else(|| invalid(&at2, "an empty disjunction"), Ok)
                }
            }
            "rimpl" => {
                let xs = array(x, Some(2), &at2)?;
                Ok(Assertion::RImpl(Box::new(self.assertion(&xs[0], &el(0))?), Box::new(self.assertion(&xs[1], &el(1))?)))
            }
            _ => invalid(at, format!("unknown assertion form `{op}`")),
        }
    }

    fn node(&mut self, v: &Value, at: &str) -> Res<OutlineNode> {
        if v.as_str() == Some("skip") {
            return Ok(OutlineNode::new(NodeKind::Skip));
        }
        let o = match v.as_object() {
            Some(o) => o,
            None => return invalid(at, "expected an outline node"),
        };
        const ANN: [&str; 7] = ["pre", "post", "invariant", "frame", "conseq_pre", "conseq_post", "label"];
        let kinds = ["prim", "seq", "choice", "iter", "skip", "disj", "exists", "if", "while"];
        let present: Vec<&str> = kinds.iter().copied().filter(|k| o.contains_key(*k)).collect();
        let [kind] = present[..] else {
            return invalid(at, format!("an outline node needs exactly one of {}", kinds.join(", ")));
        };
        let extra: &[&str] = match kind {
            "exists" => &["body"],
            "if" => &["then", "else"],
            "while" => &["do"],
            _ => &[],
        };
        let allowed: Vec<&str> = ANN.iter().chain(extra).copied().chain([kind]).collect();
        let required: Vec<&str> = match kind {
            "exists" => vec!["exists", "body"],
            "if" => vec!["if", "then", "else"],
            "while" => vec!["while", "do", "invariant"],
            _ => vec![kind],
        };
        check_keys(o, &allowed, &required, at)?;
        let x = &o[kind];
        let at2 = format!("{at}.{kind}");
        let children = |s: &mut Self| -> Res<Vec<OutlineNode>> {
            let xs = array(x, None, &at2)?;
            xs.iter().enumerate().map(|(k, c)| s.node(c, &format!("{at2}[{k}]"))).collect()
        };
        let mut invariant_on_node = true;
        let kind = match kind {
            "prim" => NodeKind::Prim(self.prim(x, &at2)?),
            "seq" => NodeKind::Seq(children(self)?),
            "choice" => NodeKind::Choice(children(self)?),
            "disj" => NodeKind::Disj(children(self)?),
            "iter" => NodeKind::Iter(Box::new(self.node(x, &at2)?)),
            "skip" => NodeKind::Skip,
            "exists" => {
                let y = bound_var(x, &at2)?;
                NodeKind::Exists(y, Box::new(self.node(&o["body"], &format!("{at}.body"))?))
            }
            "if" => {
                let e = self.expr(x, &at2)?;
                let c1 = self.node(&o["then"], &format!("{at}.then"))?;
                let c2 = self.node(&o["else"], &format!("{at}.else"))?;
                let guard = |e: Expr| OutlineNode::new(NodeKind::Prim(Prim::Assume(e)));
                NodeKind::Choice(vec![
                    OutlineNode::new(NodeKind::Seq(vec![guard(e.clone()), c1])),
                    OutlineNode::new(NodeKind::Seq(vec![guard(Expr::not(e)), c2])),
                ])
            }
            "while" => {
                let e = self.expr(x, &at2)?;
                let body = self.node(&o["do"], &format!("{at}.do"))?;
                let inv = self.assertion(&o["invariant"], &format!("{at}.invariant"))?;
                let mut lp = OutlineNode::new(NodeKind::Iter(Box::new(OutlineNode::new(NodeKind::Seq(vec![
                    OutlineNode::new(NodeKind::Prim(Prim::Assume(e.clone()))),
                    body,
                ])))));
                lp.invariant = Some(inv.clone());
                lp.post = Some(inv);
                invariant_on_node = false;
                NodeKind::Seq(vec![lp, OutlineNode::new(NodeKind::Prim(Prim::Assume(Expr::not(e))))])
            }
            _ => unreachable!("kind checked above"),
        };
        let mut n = OutlineNode::new(kind);
        let mut ann = |key: &str| -> Res<Option<Assertion>> {
            o.get(key).map(|a| self.assertion(a, &format!("{at}.{key}"))).transpose()
        };
        n.pre = ann("pre")?;
        n.post = ann("post")?;
        if invariant_on_node {
            n.invariant = ann("invariant")?;
        }
        n.frame = ann("frame")?;
        n.conseq_pre = ann("conseq_pre")?;
        n.conseq_post = ann("conseq_post")?;
        n.label = o.get("label").map(|l| string(l, &format!("{at}.label")).map(str::to_string)).transpose()?;
        Ok(n)
    }

    fn fresh_name(&mut self, x: &str) -> String {
        self.fresh += 1;
        format!("_{x}{}", self.fresh)
    }

    fn subst_vassn(&mut self, p: &VAssn, map: &HashMap<String, Expr>) -> VAssn {
        match p {
            VAssn::Emp | VAssn::True | VAssn::False => p.clone(),
            VAssn::Pure(e) => VAssn::Pure(subst_expr(e, map)),
            VAssn::Pts(l, e) => VAssn::Pts(subst_loc(l, map), subst_expr(e, map)),
            VAssn::APts(l, e) => VAssn::APts(subst_loc(l, map), subst_expr(e, map)),
            VAssn::Tok { kind, thread, method, arg, ret } => VAssn::Tok {
                kind: *kind,
                thread: subst_expr(thread, map),
                method: *method,
                arg: subst_expr(arg, map),
                ret: subst_expr(ret, map),
            },
            VAssn::Boxed(q) => VAssn::boxed(self.subst_vassn(q, map)),
            VAssn::Star(ps) => VAssn::Star(ps.iter().map(|q| self.subst_vassn(q, map)).collect()),
            VAssn::Or(ps) => VAssn::Or(ps.iter().map(|q| self.subst_vassn(q, map)).collect()),
            VAssn::Exists(x, q) => {
                let mut inner = map.clone();
                inner.remove(x);
                let captures = inner.values().any(|e| {
                    let mut fv = BTreeSet::new();
                    e.free_vars(&mut fv);
                    fv.contains(x)
                });
                if captures {
                    let y = self.fresh_name(x);
                    let renamed = self.subst_vassn(q, &HashMap::from([(x.clone(), Expr::Var(y.clone()))]));
                    VAssn::exists(&y, self.subst_vassn(&renamed, &inner))
                } else {
                    VAssn::exists(x, self.subst_vassn(q, &inner))
                }
            }
        }
    }
}

fn bound_var(v: &Value, at: &str) -> Res<String> {
    let x = string(v, at)?;
    if is_ident(x) && x != "mytid" {
        Ok(x.to_string())
    } else {
        invalid(at, format!("`{x}` is not a variable name"))
    }
}

fn check_keys(o: &Map<String, Value>, allowed: &[&str], required: &[&str], at: &str) -> Res<()> {
    if let Some(k) = o.keys().find(|k| !allowed.contains(&k.as_str())) {
        return invalid(at, format!("unexpected key `{k}`"));
    }
    if let Some(k) = required.iter().find(|k| !o.contains_key(**k)) {
        return invalid(at, format!("missing key `{k}`"));
    }
    Ok(())
}

fn subst_expr(e: &Expr, map: &HashMap<String, Expr>) -> Expr {
    let bin = |a: &Expr, b: &Expr| (Box::new(subst_expr(a, map)), Box::new(subst_expr(b, map)));
    match e {
        Expr::Var(x) => map.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Const(_) | Expr::Tid => e.clone(),
        Expr::Read(l) => Expr::Read(subst_loc(l, map)),
        Expr::Not(a) => Expr::Not(Box::new(subst_expr(a, map))),
        Expr::Add(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Add(a, b)
        }
        Expr::Sub(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Sub(a, b)
        }
        Expr::Eq(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Eq(a, b)
        }
        Expr::Ne(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Ne(a, b)
        }
        Expr::Lt(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Lt(a, b)
        }
        Expr::Le(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Le(a, b)
        }
        Expr::And(a, b) => {
            let (a, b) = bin(a, b);
            Expr::And(a, b)
        }
        Expr::Or(a, b) => {
            let (a, b) = bin(a, b);
            Expr::Or(a, b)
        }
    }
}

fn subst_loc(l: &LocExpr, map: &HashMap<String, Expr>) -> LocExpr {
    LocExpr { base: l.base.clone(), index: l.index.as_ref().map(|e| Box::new(subst_expr(e, map))) }
}

fn expand_locs(raw: Vec<RawLoc>, vals: &[Val], at: &str) -> Res<Vec<LocDecl>> {
    let mut out: Vec<LocDecl> = Vec::new();
    for (k, l) in raw.into_iter().enumerate() {
        let at = format!("{at}[{k}]");
        if !is_loc_name(&l.name) || (l.indices.is_some() && !is_ident(&l.name)) {
            return invalid(&at, format!("`{}` is not a location name", l.name));
        }
        if let Some(v) = l.values.iter().find(|v| !vals.contains(v)) {
            return invalid(&at, format!("value {v} of `{}` is not in vals", l.name));
        }
        let names = match &l.indices {
            None => vec![l.name.clone()],
            Some(ix) => ix.iter().map(|i| format!("{}[{i}]", l.name)).collect(),
        };
        for name in names {
            if out.iter().any(|d| d.name == name) {
                return invalid(&at, format!("location `{name}` is declared twice"));
            }
            out.push(LocDecl { name, values: l.values.clone(), optional: l.optional });
        }
    }
    Ok(out)
}

fn init_heap(table: &LocTable, init: &BTreeMap<String, Val>, at: &str) -> Res<Heap> {
    let mut h = Heap::new();
    for (name, &v) in init {
        let Some(l) = table.lookup(name) else {
            return invalid(at, format!("location `{name}` is not declared"));
        };
        if !table.decls()[l.0 as usize].values.contains(&v) {
            return invalid(at, format!("initial value {v} of `{name}` is outside its declared values"));
        }
        h.set(l, v);
    }
    if let Some(d) = table.decls().iter().find(|d| !d.optional && !init.contains_key(&d.name)) {
        return invalid(at, format!("non-optional location `{}` has no initial value", d.name));
    }
    Ok(h)
}

/// Location names used by a term, checked against one side's table.
struct LocCheck<'t> {
    table: &'t LocTable,
    side: &'static str,
}

impl LocCheck<'_> {
    fn loc(&self, l: &LocExpr, at: &str) -> Res<()> {
        let known = match &l.index {
            None => self.table.lookup(&l.base).is_some(),
            Some(ix) => {
                self.expr(ix, at)?;
                let prefix = format!("{}[", l.base);
                self.table.decls().iter().any(|d| d.name.starts_with(&prefix))
            }
        };
        if known {
            Ok(())
        } else {
            invalid(at, format!("{} location `{}` is not declared", self.side, l.base))
        }
    }

    fn expr(&self, e: &Expr, at: &str) -> Res<()> {
        match e {
            Expr::Read(l) => self.loc(l, at),
            Expr::Not(a) => self.expr(a, at),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Eq(a, b)
            | Expr::Ne(a, b)
            | Expr::Lt(a, b)
            | Expr::Le(a, b)
            | Expr::And(a, b)
            | Expr::Or(a, b) => {
                self.expr(a, at)?;
                self.expr(b, at)
            }
            Expr::Const(_) | Expr::Var(_) | Expr::Tid => Ok(()),
        }
    }

    fn prim(&self, p: &Prim, at: &str) -> Res<()> {
        match p {
            Prim::Id => Ok(()),
            Prim::Assume(e) => self.expr(e, at),
            Prim::Store(l, e) | Prim::CasFail(l, e) => {
                self.loc(l, at)?;
                self.expr(e, at)
            }
            Prim::Load(a, b) => {
                self.loc(a, at)?;
                self.loc(b, at)
            }
            Prim::CasSucc(l, e, f) => {
                self.loc(l, at)?;
                self.expr(e, at)?;
                self.expr(f, at)
            }
            Prim::Atomic(ps) => ps.iter().try_for_each(|q| self.prim(q, at)),
        }
    }
}

fn check_vassn_locs(conc: &LocCheck, abs: &LocCheck, p: &VAssn, at: &str) -> Res<()> {
    match p {
        VAssn::Emp | VAssn::True | VAssn::False | VAssn::Pure(_) | VAssn::Tok { .. } => Ok(()),
        VAssn::Pts(l, _) => conc.loc(l, at),
        VAssn::APts(l, _) => abs.loc(l, at),
        VAssn::Boxed(q) | VAssn::Exists(_, q) => check_vassn_locs(conc, abs, q, at),
        VAssn::Star(ps) | VAssn::Or(ps) => ps.iter().try_for_each(|q| check_vassn_locs(conc, abs, q, at)),
    }
}

fn assertion_leaves(a: &Assertion, out: &mut Vec<VAssn>) {
    match a {
        Assertion::Leaf(p) => out.push(p.clone()),
        Assertion::Star(x, y) | Assertion::Or(x, y) | Assertion::RImpl(x, y) => {
            assertion_leaves(x, out);
            assertion_leaves(y, out);
        }
        Assertion::Exists(_, x) => assertion_leaves(x, out),
    }
}

/// Checks the locations and box usage of an assertion.
fn check_assertion(model_sem: &Semantics, monoid: MonoidKind, a: &Assertion, at: &str) -> Res<()> {
    let conc = LocCheck { table: &model_sem.domains.conc, side: "concrete" };
    let abs = LocCheck { table: &model_sem.domains.abs, side: "abstract" };
    let mut leaves = Vec::new();
    assertion_leaves(a, &mut leaves);
    for p in &leaves {
        check_vassn_locs(&conc, &abs, p, at)?;
        if monoid == MonoidKind::Dcsl && p.has_box() {
            return invalid(at, "boxed assertions need the rgsep monoid");
        }
    }
    Ok(())
}

/// Decodes a model from JSON text.
pub fn load_model(text: &str) -> Res<ModelFile> {
    let raw: RawModel = serde_json::from_str(text)?;
    let monoid = match raw.monoid.as_str() {
        "dcsl" => MonoidKind::Dcsl,
        "rgsep" => MonoidKind::Rgsep,
        other => return invalid("monoid", format!("unknown monoid `{other}`, expected dcsl or rgsep")),
    };
    let d = raw.domains;
    if d.vals.is_empty() {
        return invalid("domains.vals", "the value domain is empty");
    }
    if d.vals.iter().collect::<BTreeSet<_>>().len() != d.vals.len() {
        return invalid("domains.vals", "duplicate values");
    }
    if d.threads == 0 {
        return invalid("domains.threads", "at least one thread is needed");
    }
    if matches!(d.modulus, Some(n) if n <= 0) {
        return invalid("domains.modulus", "the modulus must be positive");
    }
    let conc = LocTable::new(expand_locs(d.conc, &d.vals, "domains.conc")?);
    let abs = LocTable::new(expand_locs(d.abs, &d.vals, "domains.abs")?);

    let names: Vec<String> = raw.methods.iter().map(|m| m.name.clone()).collect();
    for (k, n) in names.iter().enumerate() {
        if names[..k].contains(n) {
            return invalid(&format!("methods[{k}]"), format!("method `{n}` is declared twice"));
        }
    }
    let conc_names: BTreeSet<&String> = names.iter().collect();
    let abs_names: BTreeSet<&String> = raw.abstract_methods.keys().collect();
    if conc_names != abs_names {
        let only_c: Vec<&str> = conc_names.difference(&abs_names).map(|s| s.as_str()).collect();
        let only_a: Vec<&str> = abs_names.difference(&conc_names).map(|s| s.as_str()).collect();
        return Err(ModelError::DomMismatch(format!(
            "concrete-only methods [{}], abstract-only methods [{}]",
            only_c.join(", "),
            only_a.join(", ")
        )));
    }
    let mut sigs = Vec::new();
    for (k, m) in raw.methods.iter().enumerate() {
        let at = format!("methods[{k}]");
        for (what, xs) in [("args", &m.args), ("rets", &m.rets)] {
            if xs.is_empty() {
                return invalid(&at, format!("`{what}` is empty"));
            }
            if let Some(v) = xs.iter().find(|v| !d.vals.contains(v)) {
                return invalid(&at, format!("{what} value {v} is not in vals"));
            }
        }
        for x in [&m.arg, &m.ret] {
            if !is_ident(x) || x == "mytid" {
                return invalid(&at, format!("`{x}` is not a variable name"));
            }
        }
        if m.arg == m.ret {
            return invalid(&at, "argument and return variables coincide");
        }
        sigs.push(MethodSig { name: m.name.clone(), args: m.args.clone(), rets: m.rets.clone() });
    }
    let domains = Domains { vals: d.vals, modulus: d.modulus, threads: d.threads, conc, abs, methods: sigs };

    let mut terms = Terms { methods: names, threads: domains.threads, macros: &raw.macros, wild: None, stack: vec![], fresh: 0 };
    for (name, def) in &raw.macros {
        if let Some(p) = def.params.iter().find(|p| !is_ident(p) || p.as_str() == "mytid") {
            return invalid(&format!("macros.{name}"), format!("`{p}` is not a parameter name"));
        }
    }
    let conc_check = LocCheck { table: &domains.conc, side: "concrete" };
    let abs_check = LocCheck { table: &domains.abs, side: "abstract" };
    let mut methods = Vec::new();
    let mut specs = Vec::new();
    let mut assertions = Vec::new();
    for (k, m) in raw.methods.iter().enumerate() {
        let at = format!("methods[{k}]");
        terms.fresh = 0;
        let body = terms.command(&m.body, &format!("{at}.body"))?;
        for p in body.prims() {
            conc_check.prim(p, &format!("{at}.body"))?;
        }
        let sat = format!("abstract.{}", m.name);
        let prim = terms.prim(&raw.abstract_methods[&m.name], &sat)?;
        abs_check.prim(&prim, &sat)?;
        methods.push(ConcMethod { name: m.name.clone(), arg_var: m.arg.clone(), ret_var: m.ret.clone(), body });
        specs.push(AbsSpec { arg_var: m.arg.clone(), ret_var: m.ret.clone(), prim });
        let a = match (&m.pre, &m.post) {
            (None, None) => None,
            (Some(p), Some(q)) => {
                terms.fresh = 0;
                let pre = terms.assertion(p, &format!("{at}.pre"))?;
                terms.fresh = 0;
                let post = terms.assertion(q, &format!("{at}.post"))?;
                Some(MethodAssertions { pre, post })
            }
            _ => return invalid(&at, "give both `pre` and `post` or neither"),
        };
        assertions.push(a);
    }

    let mut actions: Vec<RgAction> = Vec::new();
    for (k, a) in raw.actions.iter().enumerate() {
        let at = format!("actions[{k}]");
        if actions.iter().any(|b| b.name == a.name) {
            return invalid(&at, format!("action `{}` is declared twice", a.name));
        }
        terms.fresh = 0;
        let pre = terms.vassn(&a.pre, &format!("{at}.pre"))?;
        terms.fresh = 0;
        let post = terms.vassn(&a.post, &format!("{at}.post"))?;
        for p in [&pre, &post] {
            check_vassn_locs(&conc_check, &abs_check, p, &at)?;
        }
        actions.push(RgAction { name: a.name.clone(), pre, post });
    }
    for (what, list) in [("guarantee", &raw.guarantee), ("rely_extra", &raw.rely_extra)] {
        if let Some(n) = list.iter().find(|n| !actions.iter().any(|a| &a.name == *n)) {
            return invalid(what, format!("unknown action `{n}`"));
        }
    }
    if monoid == MonoidKind::Dcsl && !actions.is_empty() {
        return invalid("actions", "actions need the rgsep monoid");
    }

    let init_conc = init_heap(&domains.conc, &raw.init.conc, "init.conc")?;
    let init_abs = init_heap(&domains.abs, &raw.init.abs, "init.abs")?;
    let sem = Semantics { domains, specs };
    for (k, a) in assertions.iter().enumerate() {
        if let Some(a) = a {
            check_assertion(&sem, monoid, &a.pre, &format!("methods[{k}].pre"))?;
            check_assertion(&sem, monoid, &a.post, &format!("methods[{k}].post"))?;
        }
    }
    let model = LibraryModel {
        name: raw.name,
        sem,
        methods,
        init_conc,
        init_abs,
        monoid,
        rg: RgSpec { actions, guarantee: raw.guarantee, rely_extra: raw.rely_extra },
        assertions,
    };
    Ok(ModelFile { model, macros: raw.macros })
}

/// Decodes the proof outlines of a model from JSON text.
pub fn load_outlines(text: &str, file: &ModelFile) -> Res<Vec<ProofOutline>> {
    let raw: RawOutlines = serde_json::from_str(text)?;
    let model = &file.model;
    let mut terms = Terms {
        methods: model.methods.iter().map(|m| m.name.clone()).collect(),
        threads: model.domains().threads,
        macros: &file.macros,
        wild: None,
        stack: vec![],
        fresh: 0,
    };
    let mut out = Vec::new();
    for (k, o) in raw.outlines.iter().enumerate() {
        let at = format!("outlines[{k}]");
        if model.domains().method_id(&o.method).is_none() {
            return invalid(&at, format!("unknown method `{}`", o.method));
        }
        if let Some(t) = o.threads.iter().find(|&&t| t == 0 || t > model.domains().threads) {
            return invalid(&at, format!("thread {t} is out of range"));
        }
        let root = node_with_reset(&mut terms, &o.root, &format!("{at}.root"))?;
        check_node(&model.sem, model.monoid, &root, &format!("{at}.root"))?;
        out.push(ProofOutline { method: o.method.clone(), threads: o.threads.clone(), root });
    }
    Ok(out)
}

fn node_with_reset(terms: &mut Terms, v: &Value, at: &str) -> Res<OutlineNode> {
    terms.fresh = 0;
    terms.node(v, at)
}

fn check_node(sem: &Semantics, monoid: MonoidKind, n: &OutlineNode, at: &str) -> Res<()> {
    let here = [&n.pre, &n.post, &n.invariant, &n.frame, &n.conseq_pre, &n.conseq_post];
    for a in here.into_iter().flatten() {
        check_assertion(sem, monoid, a, at)?;
    }
    let conc = LocCheck { table: &sem.domains.conc, side: "concrete" };
    match &n.kind {
        NodeKind::Prim(p) => conc.prim(p, at),
        NodeKind::Skip => Ok(()),
        NodeKind::Seq(cs) | NodeKind::Choice(cs) | NodeKind::Disj(cs) => {
            cs.iter().enumerate().try_for_each(|(k, c)| check_node(sem, monoid, c, &format!("{at}[{k}]")))
        }
        NodeKind::Iter(c) | NodeKind::Exists(_, c) => check_node(sem, monoid, c, at),
    }
}

pub fn load_model_file(path: &Path) -> Res<ModelFile> {
    load_model(&read(path)?)
}

pub fn load_outlines_file(path: &Path, file: &ModelFile) -> Res<Vec<ProofOutline>> {
    load_outlines(&read(path)?, file)
}

fn read(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
}

// Encoding.

pub fn expr_json(e: &Expr) -> Value {
    let bin = |op: &str, a: &Expr, b: &Expr| json!({ op: [expr_json(a), expr_json(b)] });
    match e {
        Expr::Const(n) => json!(n),
        Expr::Var(x) => json!(x),
        Expr::Tid => json!("mytid"),
        Expr::Read(l) => json!({ "read": loc_json(l) }),
        Expr::Not(a) => json!({ "!": expr_json(a) }),
        Expr::Add(a, b) => bin("+", a, b),
        Expr::Sub(a, b) => bin("-", a, b),
        Expr::Eq(a, b) => bin("==", a, b),
        Expr::Ne(a, b) => bin("!=", a, b),
        Expr::Lt(a, b) => bin("<", a, b),
        Expr::Le(a, b) => bin("<=", a, b),
        Expr::And(a, b) => bin("&&", a, b),
        Expr::Or(a, b) => bin("||", a, b),
    }
}

pub fn loc_json(l: &LocExpr) -> Value {
    match l.index.as_deref() {
        None => json!(l.base),
        Some(Expr::Const(n)) => json!(format!("{}[{n}]", l.base)),
        Some(Expr::Tid) => json!(format!("{}[mytid]", l.base)),
        Some(Expr::Var(x)) => json!(format!("{}[{x}]", l.base)),
        Some(e) => json!({ "arr": l.base, "idx": expr_json(e) }),
    }
}

pub fn prim_json(p: &Prim) -> Value {
    match p {
        Prim::Id => json!("id"),
        Prim::Assume(e) => json!({ "assume": expr_json(e) }),
        Prim::Store(l, e) => json!({ "store": [loc_json(l), expr_json(e)] }),
        Prim::Load(a, b) => json!({ "load": [loc_json(a), loc_json(b)] }),
        Prim::CasSucc(l, e, f) => json!({ "cas_succ": [loc_json(l), expr_json(e), expr_json(f)] }),
        Prim::CasFail(l, e) => json!({ "cas_fail": [loc_json(l), expr_json(e)] }),
        Prim::Atomic(ps) => json!({ "atomic": ps.iter().map(prim_json).collect::<Vec<_>>() }),
    }
}

pub fn command_json(c: &Command) -> Value {
    match c {
        Command::Skip => json!("skip"),
        Command::Prim(p) => prim_json(p),
        Command::Iter(b) => json!({ "iter": command_json(b) }),
        Command::Seq(a, b) => {
            // Only the right spine is flattened, matching the right fold on load.
            let mut parts = vec![command_json(a)];
            let mut rest = b.as_ref();
            while let Command::Seq(x, y) = rest {
                parts.push(command_json(x));
                rest = y;
            }
            parts.push(command_json(rest));
            json!({ "seq": parts })
        }
        Command::Choice(a, b) => {
            let mut parts = vec![command_json(a)];
            let mut rest = b.as_ref();
            while let Command::Choice(x, y) = rest {
                parts.push(command_json(x));
                rest = y;
            }
            parts.push(command_json(rest));
            json!({ "choice": parts })
        }
    }
}

pub fn vassn_json(p: &VAssn, methods: &[String]) -> Value {
    match p {
        VAssn::Emp => json!("emp"),
        VAssn::True => json!("true"),
        VAssn::False => json!("false"),
        VAssn::Pure(e) => json!({ "pure": expr_json(e) }),
        VAssn::Pts(l, e) => json!({ "pts": [loc_json(l), expr_json(e)] }),
        VAssn::APts(l, e) => json!({ "apts": [loc_json(l), expr_json(e)] }),
        VAssn::Tok { kind, thread, method, arg, ret } => {
            let k = match kind {
                TokenKind::Todo => "todo",
                TokenKind::Done => "done",
            };
            json!({ k: { "t": expr_json(thread), "m": methods[method.0 as usize], "a": expr_json(arg), "r": expr_json(ret) } })
        }
        VAssn::Boxed(q) => json!({ "box": vassn_json(q, methods) }),
        VAssn::Star(ps) => json!({ "star": ps.iter().map(|q| vassn_json(q, methods)).collect::<Vec<_>>() }),
        VAssn::Or(ps) => json!({ "or": ps.iter().map(|q| vassn_json(q, methods)).collect::<Vec<_>>() }),
        VAssn::Exists(x, q) => json!({ "exists": x, "body": vassn_json(q, methods) }),
    }
}

pub fn assertion_json(a: &Assertion, methods: &[String]) -> Value {
    match a {
        Assertion::Leaf(p) => json!({ "view": vassn_json(p, methods) }),
        Assertion::Star(x, y) => {
            let mut parts = vec![assertion_json(x, methods)];
            let mut rest = y.as_ref();
            while let Assertion::Star(p, q) = rest {
                parts.push(assertion_json(p, methods));
                rest = q;
            }
            parts.push(assertion_json(rest, methods));
            json!({ "star": parts })
        }
        Assertion::Or(x, y) => {
            let mut parts = vec![assertion_json(x, methods)];
            let mut rest = y.as_ref();
            while let Assertion::Or(p, q) = rest {
                parts.push(assertion_json(p, methods));
                rest = q;
            }
            parts.push(assertion_json(rest, methods));
            json!({ "or": parts })
        }
        Assertion::RImpl(x, y) => json!({ "rimpl": [assertion_json(x, methods), assertion_json(y, methods)] }),
        Assertion::Exists(x, b) => json!({ "exists": x, "body": assertion_json(b, methods) }),
    }
}

pub fn node_json(n: &OutlineNode, methods: &[String]) -> Value {
    let list = |cs: &[OutlineNode]| cs.iter().map(|c| node_json(c, methods)).collect::<Vec<_>>();
    let mut o = Map::new();
    match &n.kind {
        NodeKind::Prim(p) => {
            o.insert("prim".into(), prim_json(p));
        }
        NodeKind::Seq(cs) => {
            o.insert("seq".into(), json!(list(cs)));
        }
        NodeKind::Choice(cs) => {
            o.insert("choice".into(), json!(list(cs)));
        }
        NodeKind::Disj(cs) => {
            o.insert("disj".into(), json!(list(cs)));
        }
        NodeKind::Iter(c) => {
            o.insert("iter".into(), node_json(c, methods));
        }
        NodeKind::Skip => {
            o.insert("skip".into(), json!(true));
        }
        NodeKind::Exists(x, c) => {
            o.insert("exists".into(), json!(x));
            o.insert("body".into(), node_json(c, methods));
        }
    }
    for (k, a) in [
        ("pre", &n.pre),
        ("post", &n.post),
        ("invariant", &n.invariant),
        ("frame", &n.frame),
        ("conseq_pre", &n.conseq_pre),
        ("conseq_post", &n.conseq_post),
    ] {
        if let Some(a) = a {
            o.insert(k.into(), assertion_json(a, methods));
        }
    }
    if let Some(l) = &n.label {
        o.insert("label".into(), json!(l));
    }
    Value::Object(o)
}

fn heap_json(table: &LocTable, h: &Heap) -> Value {
    let m: Map<String, Value> = h.cells().iter().map(|&(l, v)| (table.name(l).to_string(), json!(v))).collect();
    Value::Object(m)
}

/// Encodes a model. Macros are kept but every term is written expanded.
pub fn model_json(file: &ModelFile) -> Value {
    let model = &file.model;
    let d = model.domains();
    let names: Vec<String> = model.methods.iter().map(|m| m.name.clone()).collect();
    let locs = |t: &LocTable| -> Vec<Value> {
        t.decls().iter().map(|l| json!({ "name": l.name, "values": l.values, "optional": l.optional })).collect()
    };
    let mut domains = json!({ "vals": d.vals, "threads": d.threads, "conc": locs(&d.conc), "abs": locs(&d.abs) });
    if let Some(n) = d.modulus {
        domains["modulus"] = json!(n);
    }
    let methods: Vec<Value> = model
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let sig = &d.methods[k];
            let mut o = json!({
                "name": m.name, "arg": m.arg_var, "ret": m.ret_var,
                "args": sig.args, "rets": sig.rets, "body": command_json(&m.body),
            });
            if let Some(a) = &model.assertions[k] {
                o["pre"] = assertion_json(&a.pre, &names);
                o["post"] = assertion_json(&a.post, &names);
            }
            o
        })
        .collect();
    let abstract_methods: Map<String, Value> =
        model.methods.iter().zip(&model.sem.specs).map(|(m, s)| (m.name.clone(), prim_json(&s.prim))).collect();
    let actions: Vec<Value> = model
        .rg
        .actions
        .iter()
        .map(|a| json!({ "name": a.name, "pre": vassn_json(&a.pre, &names), "post": vassn_json(&a.post, &names) }))
        .collect();
    let monoid = match model.monoid {
        MonoidKind::Dcsl => "dcsl",
        MonoidKind::Rgsep => "rgsep",
    };
    json!({
        "name": model.name,
        "monoid": monoid,
        "domains": domains,
        "methods": methods,
        "abstract": abstract_methods,
        "init": { "conc": heap_json(&d.conc, &model.init_conc), "abs": heap_json(&d.abs, &model.init_abs) },
        "actions": actions,
        "guarantee": model.rg.guarantee,
        "rely_extra": model.rg.rely_extra,
        "macros": serde_json::to_value(&file.macros).expect("macros encode"),
    })
}

pub fn outlines_json(outlines: &[ProofOutline], model: &LibraryModel) -> Value {
    let names: Vec<String> = model.methods.iter().map(|m| m.name.clone()).collect();
    let list: Vec<Value> = outlines
        .iter()
        .map(|o| json!({ "method": o.method, "threads": o.threads, "root": node_json(&o.root, &names) }))
        .collect();
    json!({ "outlines": list })
}
