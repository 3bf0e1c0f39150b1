//! The per-method proof obligations that imply linearizability: a proof of
//! each method, token pinning in pre- and postconditions, and the
//! token-swap correspondence between postconditions and preconditions.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{LibraryModel, MonoidKind};
use crate::command_lang::Interp;
use crate::logic::{check_proof, eval_assertion, Assertion, ProofOutline};
use crate::monoid_dcsl::DcslMonoid;
use crate::monoid_rgsep::{interpretations, RgsepMonoid};
use crate::state_model::{ApCom, MethodId, Tid, Token};
use crate::views_core::{ViewError, ViewMonoid};

/// The outcome of one obligation for one method.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObligationItem {
    /// 1: the method proof; 2: token pinning; 3: token swap.
    pub obligation: u8,
    pub method: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObligationReport {
    pub items: Vec<ObligationItem>,
}

impl ObligationReport {
    pub fn passed(&self) -> bool {
        !self.items.is_empty() && self.items.iter().all(|i| i.passed)
    }

    pub fn first_failure(&self) -> Option<&ObligationItem> {
        self.items.iter().find(|i| !i.passed)
    }
}

/// A computation that is generic in the view monoid.
pub trait MonoidTask {
    type Out;
    fn run<M: ViewMonoid>(self, m: &M) -> Self::Out;
}

/// Builds the model's monoid and runs `task` on it.
pub fn with_monoid<T: MonoidTask>(model: &LibraryModel, cap: u128, task: T) -> Result<T::Out, ViewError> {
    match model.monoid {
        MonoidKind::Dcsl => Ok(task.run(&DcslMonoid::new(model.sem.clone(), cap)?)),
        MonoidKind::Rgsep => Ok(task.run(&RgsepMonoid::new(model.sem.clone(), cap, &model.rg)?)),
    }
}

fn item(obligation: u8, method: &str, res: Result<(), String>) -> ObligationItem {
    ObligationItem {
        obligation,
        method: method.to_string(),
        passed: res.is_ok(),
        detail: res.err().unwrap_or_else(|| "holds".to_string()),
    }
}

fn with_params(base: &Interp, arg_var: &str, ret_var: &str, ap: ApCom) -> Interp {
    let mut i = base.clone();
    i.insert(arg_var.to_string(), ap.arg);
    i.insert(ret_var.to_string(), ap.ret);
    i
}

fn others(p: &Assertion, arg_var: &str, ret_var: &str) -> BTreeSet<String> {
    p.free_vars().into_iter().filter(|x| x != arg_var && x != ret_var).collect()
}

/// Every world of `⌊⟦P⟧i⌋` maps `t` to `todo(A)` and every world of
/// `⌊⟦Q⟧i⌋` to `done(A)`. The unit frame suffices: framing only adds
/// worlds that extend these.
fn pinning<M: ViewMonoid>(m: &M, model: &LibraryModel, mid: MethodId, t: Tid) -> Result<(), String> {
    let cm = &model.methods[mid.0 as usize];
    let a = model.assertions[mid.0 as usize].as_ref().expect("checked");
    let d = model.domains();
    let mut vars = others(&a.pre, &cm.arg_var, &cm.ret_var);
    vars.extend(others(&a.post, &cm.arg_var, &cm.ret_var));
    let bases = interpretations(&vars, &d.vals);
    let aps: Vec<ApCom> = d.token_alphabet().into_iter().filter(|ap| ap.method == mid).collect();
    for ap in aps {
        for base in &bases {
            let i = with_params(base, &cm.arg_var, &cm.ret_var, ap);
            for (p, tok, which) in [(&a.pre, Token::todo(ap), "precondition"), (&a.post, Token::done(ap), "postcondition")] {
                let v = eval_assertion(m, p, &i, t).map_err(|e| format!("{which} of thread {t}: {e}"))?;
                if let Some(w) = m.reify(&v).into_iter().find(|w| w.toks.get(t) != Some(tok)) {
                    return Err(format!(
                        "{which} of thread {t} for {} admits world {} under the unit frame, where thread {t} does not hold {}",
                        render_ap(model, ap),
                        d.render_world(&w),
                        d.render_token(&tok)
                    ));
                }
            }
        }
    }
    Ok(())
}

/// `⌊Q(t, A) ∗ r⌋` and `⌊P(t, A′) ∗ r⌋` agree up to the token of `t`.
fn token_swap<M: ViewMonoid>(m: &M, model: &LibraryModel, mq: MethodId, t: Tid) -> Result<(), String> {
    let d = model.domains();
    let cq = &model.methods[mq.0 as usize];
    let aq = model.assertions[mq.0 as usize].as_ref().expect("checked");
    let alphabet = d.token_alphabet();
    let jobs: Vec<(ApCom, ApCom)> = alphabet
        .iter()
        .filter(|x| x.method == mq)
        .flat_map(|&x| alphabet.iter().filter(|y| model.assertions[y.method.0 as usize].is_some()).map(move |&y| (x, y)))
        .collect();
    let bad = jobs.par_iter().find_map_first(|&(aq_ap, ap_ap)| {
        let cp = &model.methods[ap_ap.method.0 as usize];
        let ap = model.assertions[ap_ap.method.0 as usize].as_ref().expect("filtered");
        let mut vars = others(&aq.post, &cq.arg_var, &cq.ret_var);
        vars.extend(others(&ap.pre, &cp.arg_var, &cp.ret_var));
        for base in interpretations(&vars, &d.vals) {
            let iq = with_params(&base, &cq.arg_var, &cq.ret_var, aq_ap);
            let ip = with_params(&base, &cp.arg_var, &cp.ret_var, ap_ap);
            let vq = match eval_assertion(m, &aq.post, &iq, t) {
                Ok(v) => v,
                Err(e) => return Some(format!("postcondition of thread {t}: {e}")),
            };
            let vp = match eval_assertion(m, &ap.pre, &ip, t) {
                Ok(v) => v,
                Err(e) => return Some(format!("precondition of thread {t}: {e}")),
            };
            if let Err(w) = m.same_modulo_token(&vq, &vp, t) {
                return Some(format!(
                    "postcondition for {} versus precondition for {}: {w}",
                    render_ap(model, aq_ap),
                    render_ap(model, ap_ap)
                ));
            }
        }
        None
    });
    bad.map_or(Ok(()), Err)
}

fn render_ap(model: &LibraryModel, ap: ApCom) -> String {
    format!("{}({}, {})", model.domains().method(ap.method).name, ap.arg, ap.ret)
}

/// Checks all three obligations for every method and thread.
pub fn check_obligations<M: ViewMonoid>(m: &M, model: &LibraryModel, outlines: &[ProofOutline]) -> ObligationReport {
    let mut items = Vec::new();
    let d = model.domains();
    for (k, cm) in model.methods.iter().enumerate() {
        let mid = MethodId(k as u16);
        let Some(spec) = model.method_spec(mid) else {
            for o in 1..=3 {
                items.push(item(o, &cm.name, Err("the method declares no pre- and postcondition".into())));
            }
            continue;
        };
        let proof = match outlines.iter().find(|o| o.method == cm.name) {
            None => Err("no proof outline for this method".to_string()),
            Some(o) => check_proof(m, &spec, o).map(|_| ()).map_err(|r| r.to_string()),
        };
        items.push(item(1, &cm.name, proof));
        let pin = d.tids().try_for_each(|t| pinning(m, model, mid, t));
        items.push(item(2, &cm.name, pin));
        let swap = d.tids().try_for_each(|t| token_swap(m, model, mid, t));
        items.push(item(3, &cm.name, swap));
    }
    ObligationReport { items }
}

/// `check_obligations` on the model's own monoid.
pub struct ObligationTask<'a> {
    pub model: &'a LibraryModel,
    pub outlines: &'a [ProofOutline],
}

impl MonoidTask for ObligationTask<'_> {
    type Out = ObligationReport;
    fn run<M: ViewMonoid>(self, m: &M) -> ObligationReport {
        check_obligations(m, self.model, self.outlines)
    }
}
