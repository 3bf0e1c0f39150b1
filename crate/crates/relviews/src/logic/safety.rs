//! The safety judgement as a greatest fixpoint over a finite set of
//! candidate views and the subcommands reachable from a command.

use std::collections::{BTreeSet, HashMap, VecDeque};

use rayon::prelude::*;

use super::{Checker, LogicError, MethodSpec, OutlineNode};
use crate::command_lang::{step, Command, Interp, Prim};
use crate::state_model::{StateError, Tid};
use crate::views_core::{ImplVerdict, ViewMonoid};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SafetyStats {
    pub holds: bool,
    /// Reachable (view, command) pairs examined.
    pub pairs: usize,
    pub action_checks: usize,
}

/// `safe_t(p, c, q)` relative to `universe`: `p` and every intermediate
/// view must be drawn from the universe (`p` is added if missing).
/// Fails with `UniverseTooLarge` when the reachable pair space exceeds `cap`.
pub fn check_safe<M: ViewMonoid>(
    m: &M,
    t: Tid,
    p: &M::View,
    c: &Command,
    q: &M::View,
    universe: &[M::View],
    cap: u128,
) -> Result<SafetyStats, StateError> {
    let mut views: Vec<M::View> = universe.to_vec();
    let p_idx = match views.iter().position(|v| v == p) {
        Some(k) => k,
        None => {
            views.push(p.clone());
            views.len() - 1
        }
    };

    // Reachable subcommands and their labelled steps.
    let mut cmds: Vec<Command> = vec![c.clone()];
    let mut cmd_idx: HashMap<Command, usize> = HashMap::from([(c.clone(), 0)]);
    let mut steps: Vec<Vec<(Prim, usize)>> = Vec::new();
    let mut k = 0;
    while k < cmds.len() {
        let mut out = Vec::new();
        for (a, c2) in step(&cmds[k]) {
            let j = match cmd_idx.get(&c2) {
                Some(&j) => j,
                None => {
                    cmds.push(c2.clone());
                    cmd_idx.insert(c2, cmds.len() - 1);
                    cmds.len() - 1
                }
            };
            out.push((a, j));
        }
        steps.push(out);
        k += 1;
    }
    let space = views.len() as u128 * cmds.len() as u128;
    if space > cap {
        return Err(StateError::UniverseTooLarge { size: space, cap });
    }

    // Judgement successors for (view, prim), computed on demand.
    let mut judged: HashMap<(usize, Prim), Vec<usize>> = HashMap::new();
    let mut action_checks = 0;
    let mut succ: HashMap<(usize, usize), Vec<Vec<(usize, usize)>>> = HashMap::new();
    let mut queue = VecDeque::from([(p_idx, 0usize)]);
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::from([(p_idx, 0)]);
    while let Some((v, ci)) = queue.pop_front() {
        let mut per_step = Vec::new();
        for (a, cj) in &steps[ci] {
            let targets = judged.entry((v, a.clone())).or_insert_with(|| {
                action_checks += views.len();
                (0..views.len())
                    .into_par_iter()
                    .filter(|&w| m.check_action(t, a, &views[v], &views[w]).is_ok())
                    .collect()
            });
            let nexts: Vec<(usize, usize)> = targets.iter().map(|&w| (w, *cj)).collect();
            for n in &nexts {
                if seen.insert(*n) {
                    queue.push_back(*n);
                }
            }
            per_step.push(nexts);
        }
        succ.insert((v, ci), per_step);
    }

    // Skip triples need `p ⇛ q`.
    let mut alive: BTreeSet<(usize, usize)> = seen.clone();
    for &(v, ci) in &seen {
        if cmds[ci] == Command::Skip {
            let ok = matches!(m.repart_implies(&views[v], q), Ok(ImplVerdict::Holds));
            if !ok {
                alive.remove(&(v, ci));
            }
        }
    }
    loop {
        let dead: Vec<(usize, usize)> = alive
            .iter()
            .filter(|key| {
                cmds[key.1] != Command::Skip
                    && succ[key].iter().any(|nexts| !nexts.iter().any(|n| alive.contains(n)))
            })
            .copied()
            .collect();
        if dead.is_empty() {
            break;
        }
        for d in dead {
            alive.remove(&d);
        }
    }
    Ok(SafetyStats { holds: alive.contains(&(p_idx, 0)), pairs: seen.len(), action_checks })
}

/// The views denoted by the outline's assertions and the method's pre- and
/// postcondition under every extension of `i`.
pub fn annotation_views<M: ViewMonoid>(
    m: &M,
    spec: &MethodSpec,
    root: &OutlineNode,
    t: Tid,
    i: &Interp,
) -> Result<Vec<M::View>, LogicError> {
    let checker = Checker::new(m, spec);
    let mut assertions = root.assertions();
    assertions.push(&spec.pre);
    assertions.push(&spec.post);
    let mut out: Vec<M::View> = Vec::new();
    for a in assertions {
        let free: BTreeSet<String> = a.free_vars().into_iter().filter(|x| !i.contains_key(x)).collect();
        for ext in checker.interps(&free) {
            let mut j = i.clone();
            j.extend(ext);
            let v = checker.eval(a, &j, t)?;
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    Ok(out)
}
