//! The disjoint concurrent separation logic monoid: views are finite sets of
//! worlds composed pointwise.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::command_lang::{Interp, Prim};
use crate::state_model::{StateError, Tid, World};
use crate::views_core::{
    lp_star, ActionCounterexample, ActionFailure, ImplVerdict, Semantics, Universe, VAssn, VAssnError, VCtx,
    ViewError, ViewMonoid,
};

/// A finite set of worlds, kept sorted and deduplicated.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DcslView {
    worlds: Vec<World>,
}

impl DcslView {
    pub fn new(mut worlds: Vec<World>) -> Self {
        worlds.sort();
        worlds.dedup();
        DcslView { worlds }
    }

    pub fn unit() -> Self {
        DcslView { worlds: vec![World::empty()] }
    }

    pub fn worlds(&self) -> &[World] {
        &self.worlds
    }

    pub fn contains(&self, w: &World) -> bool {
        self.worlds.binary_search(w).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }
}

/// `p ∗ q`: pairwise compositions, dropping undefined pairs.
pub fn compose_dcsl(p: &DcslView, q: &DcslView) -> DcslView {
    let mut out = Vec::new();
    for a in &p.worlds {
        for b in &q.worlds {
            if let Some(w) = a.join(b) {
                out.push(w);
            }
        }
    }
    DcslView::new(out)
}

pub fn disjoin_dcsl(p: &DcslView, q: &DcslView) -> DcslView {
    let mut out = p.worlds.clone();
    out.extend(q.worlds.iter().cloned());
    DcslView::new(out)
}

/// Frames used to decide judgements: the unit and every singleton view.
pub fn frames_dcsl(u: &Universe) -> Vec<DcslView> {
    let mut out = vec![DcslView::unit()];
    out.extend(u.worlds.iter().filter(|w| !w.is_empty()).map(|w| DcslView { worlds: vec![w.clone()] }));
    out
}

/// Whether `x ∈ ⌊q ∗ {w}⌋`.
fn in_framed(q: &DcslView, w: &World, x: &World) -> bool {
    w.is_subworld_of(x) && q.contains(&x.minus(w))
}

pub struct DcslMonoid {
    sem: Semantics,
    universe: Universe,
}

impl DcslMonoid {
    pub fn new(sem: Semantics, cap: u128) -> Result<Self, StateError> {
        let universe = Universe::new(&sem.domains, cap)?;
        Ok(DcslMonoid { sem, universe })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    fn frame_worlds(&self) -> Vec<World> {
        let mut out = vec![World::empty()];
        out.extend(self.universe.worlds.iter().filter(|w| !w.is_empty()).cloned());
        out
    }

    fn describe_frame(&self, w: &World) -> String {
        if w.is_empty() {
            "unit".to_string()
        } else {
            format!("{{{}}}", self.sem.domains.render_world(w))
        }
    }

    /// The judgement restricted to one singleton frame `{w}`.
    fn check_under(&self, t: Tid, alpha: &Prim, p: &DcslView, q: &DcslView, w: &World) -> Result<(), ActionFailure> {
        for x in &p.worlds {
            let Some(pre) = x.join(w) else { continue };
            for post in self.sem.run_conc(alpha, t, &pre.conc)? {
                let ok = lp_star(&self.sem, &pre.abs, &pre.toks)
                    .into_iter()
                    .any(|(a2, d2)| in_framed(q, w, &World::new(post.clone(), a2, d2)));
                if !ok {
                    return Err(ActionFailure::Counterexample(Box::new(ActionCounterexample {
                        frame: self.describe_frame(w),
                        pre,
                        post,
                        reason: "no LP* successor lies in the framed postcondition".into(),
                    })));
                }
            }
        }
        Ok(())
    }

    /// Explains why `x` is missing from `q`, noting token clashes.
    fn missing_note(&self, x: &World, q: &DcslView) -> String {
        let owned: BTreeSet<Tid> = x.toks.entries().iter().map(|e| e.0).collect();
        let wanted: BTreeSet<Tid> = q
            .worlds
            .iter()
            .flat_map(|y| y.toks.entries().iter().map(|e| e.0))
            .filter(|t| !owned.contains(t))
            .collect();
        match wanted.iter().next() {
            Some(t) => format!(
                "token composition undefined: the target view needs the token of thread {t}, which a frame may own"
            ),
            None => "world not covered by the target view".into(),
        }
    }
}

impl ViewMonoid for DcslMonoid {
    type View = DcslView;

    fn semantics(&self) -> &Semantics {
        &self.sem
    }

    fn unit(&self) -> DcslView {
        DcslView::unit()
    }

    fn empty(&self) -> DcslView {
        DcslView::default()
    }

    fn compose(&self, p: &DcslView, q: &DcslView) -> DcslView {
        compose_dcsl(p, q)
    }

    fn disjoin(&self, p: &DcslView, q: &DcslView) -> Result<DcslView, ViewError> {
        Ok(disjoin_dcsl(p, q))
    }

    fn reify(&self, p: &DcslView) -> Vec<World> {
        p.worlds.clone()
    }

    fn check_action(&self, t: Tid, alpha: &Prim, p: &DcslView, q: &DcslView) -> Result<(), ActionFailure> {
        let frames = self.frame_worlds();
        match frames
            .par_iter()
            .find_map_first(|w| self.check_under(t, alpha, p, q, w).err())
        {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    fn repart_implies(&self, p: &DcslView, q: &DcslView) -> Result<ImplVerdict, ActionFailure> {
        let frames = self.frame_worlds();
        let found = frames.par_iter().find_map_first(|w| {
            p.worlds
                .iter()
                .filter_map(|x| x.join(w))
                .find(|y| !in_framed(q, w, y))
                .map(|y| (w.clone(), y))
        });
        Ok(match found {
            None => ImplVerdict::Holds,
            Some((w, y)) => ImplVerdict::Fails {
                frame: self.describe_frame(&w),
                note: self.missing_note(&y.minus(&w), q),
                world: y,
            },
        })
    }

    /// Checked under the unit frame and every singleton frame.
    fn same_modulo_token(&self, q: &DcslView, p: &DcslView, t: Tid) -> Result<(), String> {
        let proj = |v: &DcslView, w: &World| -> BTreeSet<World> {
            v.worlds
                .iter()
                .filter_map(|x| x.join(w))
                .map(|y| World::new(y.conc.clone(), y.abs.clone(), y.toks.without(t)))
                .collect()
        };
        let frames = self.frame_worlds();
        let bad = frames.par_iter().find_map_first(|w| {
            let (a, b) = (proj(q, w), proj(p, w));
            (a != b).then(|| {
                let x = a.symmetric_difference(&b).next().expect("sets differ");
                format!(
                    "under frame {} the world {} (without the token of thread {t}) is in only one of the views",
                    self.describe_frame(w),
                    self.sem.domains.render_world(x)
                )
            })
        });
        bad.map_or(Ok(()), Err)
    }

    fn eval_vassn(&self, rho: &VAssn, i: &Interp, t: Tid) -> Result<DcslView, ViewError> {
        let cx = VCtx { domains: &self.sem.domains, tid: t };
        let alts = cx.alts(rho, i)?;
        if alts.iter().any(|a| !a.shared.is_empty()) {
            return Err(VAssnError::BoxUnsupported.into());
        }
        Ok(DcslView::new(alts.into_iter().map(|a| a.local).collect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command_lang::{Expr, LocExpr};
    use crate::state_model::{ApCom, Domains, Heap, Loc, LocDecl, LocTable, MethodId, MethodSig, Token, TokenMap};
    use crate::views_core::AbsSpec;

    fn sem(vals: Vec<i32>) -> Semantics {
        let d = |n: &str| LocDecl { name: n.into(), values: vals.clone(), optional: true };
        Semantics {
            domains: Domains {
                vals: vals.clone(),
                modulus: None,
                threads: 1,
                conc: LocTable::new(vec![d("l")]),
                abs: LocTable::new(vec![]),
                methods: vec![MethodSig { name: "m".into(), args: vec![0], rets: vec![0] }],
            },
            specs: vec![AbsSpec { arg_var: "a".into(), ret_var: "r".into(), prim: Prim::Id }],
        }
    }

    fn cw(cells: &[(u16, i32)]) -> World {
        World::new(Heap::from_cells(cells.iter().map(|&(l, v)| (Loc(l), v))), Heap::new(), TokenMap::new())
    }

    fn tok(t: u8) -> World {
        let ap = ApCom { method: MethodId(0), arg: 0, ret: 0 };
        World::new(Heap::new(), Heap::new(), TokenMap::singleton(t, Token::todo(ap)))
    }

    #[test]
    fn composition_examples() {
        let p = DcslView::new(vec![cw(&[(0, 1)])]);
        assert_eq!(compose_dcsl(&p, &DcslView::unit()), p);
        let clash = DcslView::new(vec![cw(&[(0, 2)])]);
        assert!(compose_dcsl(&p, &clash).is_empty());
        let q = DcslView::new(vec![cw(&[(1, 2)]).join(&tok(1)).unwrap()]);
        let pq = compose_dcsl(&p, &q);
        assert_eq!(pq.worlds(), &[cw(&[(0, 1), (1, 2)]).join(&tok(1)).unwrap()]);
    }

    #[test]
    fn frames_include_unit_and_singletons() {
        let s = sem(vec![0]);
        let u = Universe::new(&s.domains, 1 << 20).unwrap();
        // Worlds: l absent or l:0, times tokens none/todo/done.
        assert_eq!(u.len(), 6);
        assert_eq!(frames_dcsl(&u).len(), 6);
        let small = Universe::new(&s.domains, 4);
        assert!(small.is_err());
    }

    #[test]
    fn store_action_examples() {
        let s = sem(vec![0, 5]);
        let m = DcslMonoid::new(s, 1 << 20).unwrap();
        let store = Prim::Store(LocExpr::named("l"), Expr::Const(5));
        let p = DcslView::new(vec![cw(&[(0, 0)])]);
        let q = DcslView::new(vec![cw(&[(0, 5)])]);
        assert_eq!(m.check_action(1, &store, &p, &q), Ok(()));
        assert_eq!(m.check_action(1, &Prim::Id, &p, &p), Ok(()));
        let r = m.check_action(1, &store, &DcslView::unit(), &DcslView::unit());
        assert!(matches!(r, Err(ActionFailure::FaultReachable { .. })));
    }

    #[test]
    fn repartitioning_examples() {
        let s = sem(vec![0, 1]);
        let m = DcslMonoid::new(s, 1 << 20).unwrap();
        let p = DcslView::new(vec![cw(&[(0, 0)])]);
        let q = DcslView::new(vec![cw(&[(0, 1)])]);
        assert!(m.repart_implies(&p, &p).unwrap().holds());
        assert!(m.repart_implies(&p, &disjoin_dcsl(&p, &q)).unwrap().holds());
        match m.repart_implies(&p, &q).unwrap() {
            ImplVerdict::Fails { frame, .. } => assert_eq!(frame, "unit"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn acquiring_foreign_token_is_rejected() {
        let s = sem(vec![0]);
        let m = DcslMonoid::new(s, 1 << 20).unwrap();
        let p = DcslView::unit();
        let q = DcslView::new(vec![tok(1)]);
        match m.repart_implies(&p, &q).unwrap() {
            ImplVerdict::Fails { note, .. } => assert!(note.contains("token composition undefined")),
            other => panic!("{other:?}"),
        }
    }
}
