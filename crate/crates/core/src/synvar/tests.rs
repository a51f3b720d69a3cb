use proptest::prelude::*;

use super::*;
use crate::kernels::{frame_check, from_full, kernel_equal, par, seq, FrameCondition, Kernel, SubkernelDecision};
use crate::varspace::VarSet;

fn l(names: &[&str]) -> VarList {
    VarList::of(names)
}

fn gen(d: &[&str], c: &[&str]) -> DiagTerm {
    DiagTerm::gen(l(d), l(c)).unwrap()
}

fn p(text: &str) -> DiagTerm {
    parse_term(text, &TermEnv::new()).unwrap()
}

/// `c0 → w`, `c1 : w → x`, `c2 : w → y`, `d : x, y → u`, all outputs kept.
fn separating() -> DiagGraph {
    let node = |d: &[&str], c: &[&str], inputs: Vec<Src>| Node { dom: l(d), cod: l(c), inputs };
    DiagGraph {
        dom: l(&[]),
        cod: l(&["u", "w", "x", "y"]),
        nodes: vec![
            node(&[], &["w"], vec![]),
            node(&["w"], &["x"], vec![Src::Port(0, 0)]),
            node(&["w"], &["y"], vec![Src::Port(0, 0)]),
            node(&["x", "y"], &["u"], vec![Src::Port(1, 0), Src::Port(2, 0)]),
        ],
        outputs: vec![Src::Port(3, 0), Src::Port(0, 0), Src::Port(1, 0), Src::Port(2, 0)],
    }
    .normalize()
}

#[test]
fn identity_is_a_single_wire() {
    let g = elaborate(&DiagTerm::Id(l(&["x"]))).unwrap();
    assert!(g.nodes.is_empty());
    assert_eq!(g.outputs, vec![Src::Input(0)]);
}

#[test]
fn kernel_shape_fans_out() {
    let t = DiagTerm::seq(DiagTerm::Copy(l(&["z"])), DiagTerm::par(gen(&["z"], &["x"]), DiagTerm::Id(l(&["z"]))));
    let g = elaborate(&t).unwrap();
    assert_eq!((g.dom.len(), g.cod.len(), g.nodes.len()), (1, 2, 1));
    assert_eq!(g.nodes[0].inputs, vec![Src::Input(0)]);
    assert_eq!(g.outputs[1], Src::Input(0));
}

#[test]
fn separating_example_has_four_generators() {
    let g = separating();
    assert_eq!(g.nodes.len(), 4);
    assert_eq!(g.cod, l(&["u", "w", "x", "y"]));
}

#[test]
fn del_removes_generators() {
    let g = elaborate(&DiagTerm::seq(gen(&["a"], &["b"]), DiagTerm::Del(l(&["b"])))).unwrap();
    assert_eq!(g, elaborate(&DiagTerm::Del(l(&["a"]))).unwrap());
    assert_eq!(g.normalize(), g);
}

#[test]
fn copy_associativity_variants_agree() {
    let a = p("copy[x] ; copy[x] * id[x]");
    let b = p("copy[x] ; id[x] * copy[x]");
    assert!(diag_equal(&elaborate(&a).unwrap(), &elaborate(&b).unwrap()));
    let s = p("gen[] -> [x] ; copy[x] ; swap[x][x]");
    assert!(diag_equal(&elaborate(&s).unwrap(), &elaborate(&p("gen[] -> [x] ; copy[x]")).unwrap()));
}

#[test]
fn distinct_generators_differ() {
    assert!(!diag_equal(&elaborate(&gen(&[], &["x"])).unwrap(), &elaborate(&gen(&[], &["y"])).unwrap()));
    let once = p("gen[] -> [x] ; copy[x]");
    let twice = p("gen[] -> [x] * gen[] -> [x]");
    assert!(!diag_equal(&elaborate(&once).unwrap(), &elaborate(&twice).unwrap()));
}

#[test]
fn type_errors_are_reported() {
    assert!(matches!(parse_term("gen[b,a] -> [c]", &TermEnv::new()), Err(Error::TypeError { .. })));
    assert!(matches!(parse_term("id[x] ; id[y]", &TermEnv::new()), Err(Error::TypeError { .. })));
    let e = parse_term("id[x] ;", &TermEnv::new()).unwrap_err();
    match e {
        Error::Parse(pe) => assert_eq!((pe.line, pe.column), (1, 8)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn names_resolve_through_environment() {
    let mut env = TermEnv::new();
    env.insert("c0".into(), gen(&[], &["w"]));
    let t = parse_term("c0 ; copy[w]", &env).unwrap();
    assert_eq!(t.typ().unwrap(), (l(&[]), l(&["w", "w"])));
    assert!(parse_term("c9", &env).is_err());
}

#[test]
fn printed_graphs_reparse_to_equal_graphs() {
    let g = separating();
    let text = graph_to_term(&g).to_string();
    let back = elaborate(&parse_term(&text, &TermEnv::new()).unwrap()).unwrap();
    assert!(diag_equal(&g, &back));
}

#[test]
fn separating_example_searches() {
    let g = separating();
    let (w, x, y, u) = (VarSet::of(&["w"]), VarSet::of(&["x"]), VarSet::of(&["y"]), VarSet::of(&["u"]));
    assert!(decompose_search(&g, &w, &x, &y, &u, SearchFlavor::Dibi).unwrap().holds());
    assert!(!decompose_search(&g, &w, &x, &y, &u, SearchFlavor::Superset).unwrap().holds());
    assert!(decompose_search(&g, &w, &x, &y, &u, SearchFlavor::ExtSuperset).unwrap().holds());
}

#[test]
fn juxtaposition_is_superset_independent() {
    let g = elaborate(&p("gen[] -> [x] * gen[] -> [y]")).unwrap();
    let e = VarSet::new();
    assert!(decompose_search(&g, &e, &VarSet::of(&["x"]), &VarSet::of(&["y"]), &e, SearchFlavor::Superset).unwrap().holds());
    let joint = elaborate(&p("gen[] -> [x,y]")).unwrap();
    assert!(!decompose_search(&joint, &e, &VarSet::of(&["x"]), &VarSet::of(&["y"]), &e, SearchFlavor::Superset).unwrap().holds());
    let open = elaborate(&p("gen[a] -> [x]")).unwrap();
    assert!(matches!(decompose_search(&open, &e, &e, &e, &e, SearchFlavor::Dibi), Err(Error::UnsupportedShape(_))));
}

#[test]
fn structural_subkernels() {
    let g = from_full(&SynVar, &separating()).unwrap();
    let wx = from_full(&SynVar, &elaborate(&p("gen[] -> [w] ; copy[w] ; id[w] * gen[w] -> [x]")).unwrap()).unwrap();
    assert!(SynVar.decide_subkernel(&wx, &g).unwrap().is_witness());
    let xy = VarSet::of(&["x", "y"]);
    assert!(restrict_graph(&crate::kernels::embed(&SynVar, &g).unwrap(), &VarSet::new(), &VarSet::of(&["w", "x", "y"])).is_ok());
    let joint = from_full(&SynVar, &elaborate(&p("gen[] -> [x,y]")).unwrap()).unwrap();
    let only_x = crate::kernels::marginal(&SynVar, &joint, &VarSet::of(&["x"])).unwrap();
    assert!(!SynVar.decide_subkernel(&only_x, &joint).unwrap().is_witness());
    assert_eq!(joint.cod(), &xy);
}

#[test]
fn kernel_compositions_in_synvar() {
    let f = from_full(&SynVar, &elaborate(&p("copy[z] ; gen[z] -> [x] * id[z]")).unwrap()).unwrap();
    let g = from_full(&SynVar, &elaborate(&p("copy[z] ; gen[z] -> [y] * id[z]")).unwrap()).unwrap();
    let fg = par(&SynVar, &f, &g).unwrap();
    assert_eq!(fg.cod(), &VarSet::of(&["x", "y", "z"]));
    let gf = par(&SynVar, &g, &f).unwrap();
    assert!(kernel_equal(&SynVar, &fg, &gf));
    let prior = from_full(&SynVar, &elaborate(&gen(&[], &["z"])).unwrap()).unwrap();
    let s = seq(&SynVar, &prior, &fg).unwrap();
    assert_eq!(s.core().nodes.len(), 3);
    let _: Kernel<SynVar> = s;
}

#[test]
fn frame_conditions_hold_in_synvar() {
    for cond in FrameCondition::ALL {
        let r = frame_check(cond, |_, _| SynVar, 5, 40, 4);
        assert!(r.ok(), "{cond}: {:?}", r.counterexample);
    }
}

fn arb_term() -> impl Strategy<Value = DiagTerm> {
    let vars = prop::sample::subsequence(vec!["a", "b", "c"], 0..=3);
    let leaf = (vars.clone(), vars).prop_map(|(d, c)| DiagTerm::Gen(l(&d), l(&c)));
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| DiagTerm::par(a, b)),
            inner.clone().prop_map(|a| {
                let (_, c) = a.typ().unwrap();
                DiagTerm::seq(a, DiagTerm::Copy(c))
            }),
            inner.prop_map(|a| {
                let (_, c) = a.typ().unwrap();
                DiagTerm::seq(a, DiagTerm::Del(c))
            }),
        ]
    })
}

proptest! {
    #[test]
    fn normalize_is_idempotent(t in arb_term()) {
        let g = elaborate(&t).unwrap();
        prop_assert_eq!(g.normalize(), g.normalize().normalize());
    }

    #[test]
    fn print_parse_round_trip(t in arb_term()) {
        let back = parse_term(&t.to_string(), &TermEnv::new()).unwrap();
        prop_assert!(diag_equal(&elaborate(&t).unwrap(), &elaborate(&back).unwrap()));
        let g = elaborate(&t).unwrap();
        let again = elaborate(&parse_term(&graph_to_term(&g).to_string(), &TermEnv::new()).unwrap()).unwrap();
        prop_assert!(diag_equal(&g, &again));
    }

    #[test]
    fn equality_is_a_congruence(a in arb_term(), b in arb_term()) {
        let (ga, gb) = (elaborate(&a).unwrap(), elaborate(&b).unwrap());
        let a2 = DiagTerm::seq(DiagTerm::seq(a.clone(), DiagTerm::Copy(ga.cod.clone())), DiagTerm::par(DiagTerm::Id(ga.cod.clone()), DiagTerm::Del(ga.cod.clone())));
        prop_assert!(diag_equal(&elaborate(&a2).unwrap(), &ga));
        let left = elaborate(&DiagTerm::par(a2, b.clone())).unwrap();
        let right = elaborate(&DiagTerm::par(a, b)).unwrap();
        prop_assert!(diag_equal(&left, &right));
        prop_assert!(diag_equal(&gb, &gb.clone()));
    }
}
