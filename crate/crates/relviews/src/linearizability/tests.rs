use super::*;
use crate::command_lang::{Expr, LocExpr};
use crate::state_model::{Loc, LocDecl, LocTable, MethodSig};
use crate::views_core::AbsSpec;

/// Counter `k` incremented atomically; abstract counter `K`.
pub(crate) fn atomic_inc(body: Command) -> LibraryModel {
    let vals = vec![0, 1, 2, 3];
    let kk = LocExpr::named("K");
    let spec = Prim::Atomic(vec![
        Prim::Store(kk.clone(), Expr::add(Expr::read(kk.clone()), Expr::var("a"))),
        Prim::Assume(Expr::eq(Expr::read(kk), Expr::var("r"))),
    ]);
    LibraryModel {
        name: "inc".into(),
        sem: Semantics {
            domains: Domains {
                vals: vals.clone(),
                modulus: Some(4),
                threads: 2,
                conc: LocTable::new(vec![LocDecl { name: "k".into(), values: vals.clone(), optional: true }]),
                abs: LocTable::new(vec![LocDecl { name: "K".into(), values: vals.clone(), optional: true }]),
                methods: vec![MethodSig { name: "inc".into(), args: vec![1], rets: vals }],
            },
            specs: vec![AbsSpec { arg_var: "a".into(), ret_var: "r".into(), prim: spec }],
        },
        methods: vec![ConcMethod { name: "inc".into(), arg_var: "a".into(), ret_var: "r".into(), body }],
        init_conc: Heap::singleton(Loc(0), 0),
        init_abs: Heap::singleton(Loc(0), 0),
        monoid: MonoidKind::Rgsep,
        rg: RgSpec::default(),
        assertions: vec![None],
    }
}

fn k() -> LocExpr {
    LocExpr::named("k")
}

pub(crate) fn atomic_body() -> Command {
    Command::Prim(Prim::Atomic(vec![
        Prim::Store(k(), Expr::add(Expr::read(k()), Expr::var("a"))),
        Prim::Assume(Expr::eq(Expr::read(k()), Expr::var("r"))),
    ]))
}

/// Read, then write back: increments can be lost.
fn racy_body() -> Command {
    let tmp = LocExpr::named("k");
    Command::seq_all(vec![
        Command::Prim(Prim::Assume(Expr::eq(Expr::read(tmp.clone()), Expr::Sub(Box::new(Expr::var("r")), Box::new(Expr::var("a")))))),
        Command::Prim(Prim::Store(tmp, Expr::var("r"))),
    ])
}

fn call(t: Tid, a: Val) -> Event {
    Event { tid: t, kind: EventKind::Call { method: MethodId(0), arg: a } }
}

fn ret(t: Tid, v: Val) -> Event {
    Event { tid: t, kind: EventKind::Ret { method: MethodId(0), ret: v } }
}

fn steps(n: usize) -> LinOptions {
    LinOptions { bound: n, kind: BoundKind::Steps, cap: 10_000_000 }
}

#[test]
fn bound_zero_is_epsilon() {
    let m = atomic_inc(atomic_body());
    for o in [LinOptions::events(0), steps(0)] {
        assert_eq!(concrete_histories(&m, &o).unwrap(), BTreeSet::from([vec![]]));
        assert_eq!(abstract_histories(&m, &o).unwrap(), BTreeSet::from([vec![]]));
    }
    assert_eq!(render_history(m.domains(), &[]), "ε");
}

#[test]
fn depth_one_only_calls() {
    let mut m = atomic_inc(atomic_body());
    m.sem.domains.threads = 1;
    let hs = concrete_histories(&m, &steps(1)).unwrap();
    assert_eq!(hs, BTreeSet::from([vec![], vec![call(1, 1)]]));
}

#[test]
fn overlapping_calls_history() {
    let m = atomic_inc(atomic_body());
    let h = vec![call(1, 1), call(2, 1), ret(1, 1), ret(2, 2)];
    assert!(concrete_histories(&m, &steps(6)).unwrap().contains(&h));
    assert!(concrete_histories(&m, &LinOptions::events(4)).unwrap().contains(&h));
    assert_eq!(render_history(m.domains(), &h[..1]), "t=1 call inc(1)");
}

#[test]
fn abstract_examples() {
    let m = atomic_inc(atomic_body());
    let hs = abstract_histories(&m, &steps(3)).unwrap();
    assert!(hs.contains(&vec![call(1, 1), ret(1, 1)]));
    assert!(!hs.contains(&vec![call(1, 1), ret(1, 2)]));
    assert!(!abstract_accepts(&m, &vec![call(1, 1), ret(1, 3)]).unwrap());
}

#[test]
fn atomic_model_is_linearizable() {
    let m = atomic_inc(atomic_body());
    for o in [LinOptions::events(8), steps(9)] {
        let r = check_linearizable(&m, &o).unwrap();
        assert!(matches!(r.verdict, LinVerdict::NoViolation { .. }), "{r:?}");
        assert!(r.bound_too_small());
    }
}

#[test]
fn racy_model_has_counterexample() {
    let m = atomic_inc(racy_body());
    let r = check_linearizable(&m, &LinOptions::events(8)).unwrap();
    let LinVerdict::Counterexample(h) = r.verdict else { panic!("{r:?}") };
    assert!(concrete_accepts(&m, &h).unwrap());
    assert!(!abstract_accepts(&m, &h).unwrap());
    assert!(well_formed(&h));
    // Same answer from the literal step-bounded generator, allowing for
    // the extra steps of the two-step body.
    let r2 = check_linearizable(&m, &steps(10)).unwrap();
    assert!(matches!(r2.verdict, LinVerdict::Counterexample(_)));
}

#[test]
fn histories_are_prefix_closed_monotone_and_well_formed() {
    let m = atomic_inc(racy_body());
    for o in [LinOptions::events(4), steps(6)] {
        let hs = concrete_histories(&m, &o).unwrap();
        for h in &hs {
            assert!(well_formed(h));
            for k in 0..h.len() {
                assert!(hs.contains(&h[..k].to_vec()));
            }
        }
        let mut bigger = o;
        bigger.bound += 1;
        assert!(hs.is_subset(&concrete_histories(&m, &bigger).unwrap()));
    }
}

#[test]
fn faults_are_reported() {
    let body = Command::Prim(Prim::Store(LocExpr::named("k"), Expr::Const(1)));
    let mut m = atomic_inc(body);
    m.init_conc = Heap::new();
    let r = check_linearizable(&m, &LinOptions::events(2));
    assert!(matches!(r, Err(LinError::FaultReachable { .. })));
}
