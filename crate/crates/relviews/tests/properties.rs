use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;

use relviews::command_lang::{Command, Expr, LocExpr, Prim};
use relviews::fixtures::fixture_manifest;
use relviews::linearizability::{concrete_histories, well_formed, LinOptions};
use relviews::logic::normalize_assoc;
use relviews::model_file::{command_json, load_model};
use relviews::monoid_dcsl::{compose_dcsl, disjoin_dcsl, DcslView};
use relviews::state_model::{
    enumerate_worlds, ApCom, Domains, Heap, Loc, LocDecl, LocTable, MethodId, MethodSig, Token, TokenMap, World,
};
use relviews::views_core::{lp_star, AbsSpec, Semantics};

/// Two locations over {0, 1}, one thread, one abstract command: 27 worlds.
fn micro_worlds() -> Vec<World> {
    let d = |n: &str| LocDecl { name: n.into(), values: vec![0, 1], optional: true };
    let domains = Domains {
        vals: vec![0, 1],
        modulus: None,
        threads: 1,
        conc: LocTable::new(vec![d("x"), d("y")]),
        abs: LocTable::new(vec![]),
        methods: vec![MethodSig { name: "m".into(), args: vec![0], rets: vec![0] }],
    };
    enumerate_worlds(&domains, 1 << 10).unwrap()
}

fn view() -> impl Strategy<Value = DcslView> {
    let ws = micro_worlds();
    let n = ws.len();
    subsequence(ws, 0..=n).prop_map(DcslView::new)
}

/// Abstract counter `K` over Z/4 with `inc(a, r)`.
fn counter() -> Semantics {
    let k = LocExpr::named("K");
    let prim = Prim::Atomic(vec![
        Prim::Store(k.clone(), Expr::add(Expr::read(k.clone()), Expr::var("a"))),
        Prim::Assume(Expr::eq(Expr::read(k), Expr::var("r"))),
    ]);
    Semantics {
        domains: Domains {
            vals: vec![0, 1, 2, 3],
            modulus: Some(4),
            threads: 3,
            conc: LocTable::new(vec![]),
            abs: LocTable::new(vec![LocDecl { name: "K".into(), values: vec![0, 1, 2, 3], optional: true }]),
            methods: vec![MethodSig { name: "inc".into(), args: vec![1, 2], rets: vec![0, 1, 2, 3] }],
        },
        specs: vec![AbsSpec { arg_var: "a".into(), ret_var: "r".into(), prim }],
    }
}

fn token() -> impl Strategy<Value = Option<Token>> {
    prop_oneof![
        Just(None),
        (1..=2i32, 0..4i32, any::<bool>()).prop_map(|(arg, ret, todo)| {
            let ap = ApCom { method: MethodId(0), arg, ret };
            Some(if todo { Token::todo(ap) } else { Token::done(ap) })
        }),
    ]
}

fn token_map(tids: &'static [u8]) -> impl Strategy<Value = TokenMap> {
    proptest::collection::vec(token(), tids.len()).prop_map(move |ts| {
        tids.iter()
            .zip(ts)
            .fold(TokenMap::new(), |m, (&t, tok)| tok.map_or(m.clone(), |tok| m.with(t, tok)))
    })
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..4i32).prop_map(Expr::Const),
        Just(Expr::var("a")),
        Just(Expr::var("r")),
        Just(Expr::read(LocExpr::named("k"))),
        Just(Expr::Tid),
    ];
    leaf.prop_recursive(2, 6, 2, |e| {
        prop_oneof![
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::eq(a, b)),
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::Lt(Box::new(a), Box::new(b))),
            e.prop_map(Expr::not),
        ]
    })
}

fn prim() -> impl Strategy<Value = Prim> {
    let k = || LocExpr::named("k");
    let simple = prop_oneof![
        Just(Prim::Id),
        expr().prop_map(Prim::Assume),
        expr().prop_map(move |e| Prim::Store(k(), e)),
        (0..4i32, expr()).prop_map(move |(v, e)| Prim::CasSucc(k(), Expr::Const(v), e)),
        (0..4i32).prop_map(move |v| Prim::CasFail(k(), Expr::Const(v))),
    ];
    prop_oneof![
        3 => simple.clone(),
        1 => proptest::collection::vec(simple, 1..3).prop_map(Prim::Atomic),
    ]
}

fn command() -> impl Strategy<Value = Command> {
    let leaf = prop_oneof![4 => prim().prop_map(Command::Prim), 1 => Just(Command::Skip)];
    leaf.prop_recursive(3, 10, 2, |c| {
        prop_oneof![
            (c.clone(), c.clone()).prop_map(|(a, b)| Command::seq(a, b)),
            (c.clone(), c.clone()).prop_map(|(a, b)| Command::choice(a, b)),
            c.prop_map(Command::iter),
        ]
    })
}

/// The atomic-increment model text with `body` as its method body.
fn model_with_body(body: &Command) -> String {
    let f = fixture_manifest().iter().find(|f| f.name == "atomic-inc").unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(f.model_path()).unwrap()).unwrap();
    v["methods"][0]["body"] = command_json(body);
    v.to_string()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_commutative(p in view(), q in view()) {
        prop_assert_eq!(compose_dcsl(&p, &q), compose_dcsl(&q, &p));
    }

    #[test]
    fn composition_is_associative(p in view(), q in view(), r in view()) {
        prop_assert_eq!(compose_dcsl(&p, &compose_dcsl(&q, &r)), compose_dcsl(&compose_dcsl(&p, &q), &r));
    }

    #[test]
    fn unit_is_neutral(p in view()) {
        prop_assert_eq!(compose_dcsl(&p, &DcslView::unit()), p);
    }

    #[test]
    fn composition_distributes_over_disjunction(p in view(), q in view(), r in view()) {
        let lhs = compose_dcsl(&p, &disjoin_dcsl(&q, &r));
        let rhs = disjoin_dcsl(&compose_dcsl(&p, &q), &compose_dcsl(&p, &r));
        prop_assert_eq!(lhs, rhs);
        prop_assert!(compose_dcsl(&p, &DcslView::default()).is_empty());
    }

    #[test]
    fn lp_star_is_monotone_in_tokens(k in proptest::option::of(0..4i32), d in token_map(&[1, 2]), e in token_map(&[3])) {
        let sem = counter();
        let abs = k.map_or_else(Heap::new, |v| Heap::singleton(Loc(0), v));
        let de = d.join(&e).unwrap();
        let big: BTreeSet<(Heap, TokenMap)> = lp_star(&sem, &abs, &de).into_iter().collect();
        for (a2, d2) in lp_star(&sem, &abs, &d) {
            prop_assert!(big.contains(&(a2, d2.join(&e).unwrap())));
        }
    }

    #[test]
    fn normalize_assoc_is_idempotent(c in command()) {
        let n = normalize_assoc(&c);
        prop_assert_eq!(normalize_assoc(&n), n.clone());
        prop_assert_eq!(n.free_vars(), c.free_vars());
        let mut p1: Vec<String> = c.prims().iter().map(|p| p.to_string()).collect();
        let mut p2: Vec<String> = n.prims().iter().map(|p| p.to_string()).collect();
        p1.sort();
        p2.sort();
        prop_assert_eq!(p1, p2);
    }

    #[test]
    fn method_bodies_round_trip(c in command()) {
        let file = load_model(&model_with_body(&c)).unwrap();
        prop_assert_eq!(&file.model.methods[0].body, &c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn histories_are_well_formed_and_prefix_closed(c in command()) {
        let file = load_model(&model_with_body(&c)).unwrap();
        let Ok(hs) = concrete_histories(&file.model, &LinOptions::events(4)) else {
            // Faulting bodies are reported as errors; nothing to check.
            return Ok(());
        };
        prop_assert!(hs.contains(&vec![]));
        for h in &hs {
            prop_assert!(h.len() <= 4);
            prop_assert!(well_formed(h));
            prop_assert!(hs.contains(&h[..h.len() - usize::from(!h.is_empty())].to_vec()));
        }
    }
}
