use rand::SeedableRng;

use super::random::{random_finrel, random_finstoch, random_kernel, TrialRng};
use super::subkernel::{replay, verify_witness};
use super::*;
use crate::finrel::FinRel;
use crate::finstoch::{q, Dist, FinStoch, Q};
use crate::gauss::Gauss;
use crate::markov::Markov;
use crate::varspace::VarName;

fn vs(names: &[&str]) -> VarSet {
    VarSet::of(names)
}

/// `z → {v, z}` drawing `v = 1` with probability 1/2 or 3/4 by `z`.
fn coin(fs: &FinStoch, v: &str) -> Kernel<FinStoch> {
    let rows = vec![
        Dist::new([(0, q(1, 2)), (1, q(1, 2))]).unwrap(),
        Dist::new([(0, q(1, 4)), (1, q(3, 4))]).unwrap(),
    ];
    let core = fs.table(&VarList::of(&["z"]), &VarList::of(&[v]), rows).unwrap();
    Kernel::new(vs(&["z"]), vs(&[v, "z"]), core).unwrap()
}

#[test]
fn embed_of_trivial_core_is_identity() {
    let fs = FinStoch::uniform(2);
    let x = vs(&["a", "b"]);
    let k = identity_kernel(&fs, &x).unwrap();
    assert!(fs.equal(&embed(&fs, &k).unwrap(), &fs.identity(&x.to_list()).unwrap()));
}

#[test]
fn embed_has_copy_fan_shape() {
    let fs = FinStoch::uniform(2);
    let h1 = coin(&fs, "x");
    let full = embed(&fs, &h1).unwrap();
    assert_eq!(full.cod(), &VarList::of(&["x", "z"]));
    // z=1 row: x=0,z=1 has 1/4; x=1,z=1 has 3/4; codes are x*2+z
    assert_eq!(full.rows()[1].get(&1), q(1, 4));
    assert_eq!(full.rows()[1].get(&3), q(3, 4));
    assert_eq!(full.rows()[0].get(&0), q(1, 2));
    let back = fs.compose(&full, &fs.project(full.cod(), &VarList::of(&["z"])).unwrap()).unwrap();
    assert!(fs.equal(&back, &fs.identity(&VarList::of(&["z"])).unwrap()));
}

#[test]
fn par_of_coins_gives_example_weights() {
    let fs = FinStoch::uniform(2);
    let f = par(&fs, &coin(&fs, "x"), &coin(&fs, "y")).unwrap();
    assert_eq!(f.cod(), &vs(&["x", "y", "z"]));
    let full = embed(&fs, &f).unwrap();
    // codes x*4 + y*2 + z
    for c in [0, 2, 4, 6] {
        assert_eq!(full.rows()[0].get(&c), q(1, 4));
    }
    assert_eq!(full.rows()[1].get(&1), q(1, 16));
    assert_eq!(full.rows()[1].get(&3), q(3, 16));
    assert_eq!(full.rows()[1].get(&5), q(3, 16));
    assert_eq!(full.rows()[1].get(&7), q(9, 16));
}

#[test]
fn seq_with_prior_gives_ci_example() {
    let fs = FinStoch::uniform(2);
    let f = par(&fs, &coin(&fs, "x"), &coin(&fs, "y")).unwrap();
    let prior = fs.table(&VarList::empty(), &VarList::of(&["z"]), vec![Dist::new([(0, q(1, 2)), (1, q(1, 2))]).unwrap()]).unwrap();
    let h0 = Kernel::new(VarSet::new(), vs(&["z"]), prior).unwrap();
    let h = seq(&fs, &h0, &f).unwrap();
    let row = &h.core().rows()[0];
    for c in [0, 2, 4, 6] {
        assert_eq!(row.get(&c), q(1, 8));
    }
    assert_eq!(row.get(&1), q(1, 32));
    assert_eq!(row.get(&3), q(3, 32));
    assert_eq!(row.get(&5), q(3, 32));
    assert_eq!(row.get(&7), q(9, 32));
}

#[test]
fn composition_errors() {
    let fs = FinStoch::uniform(2);
    let a = coin(&fs, "x");
    assert!(matches!(seq(&fs, &a, &a), Err(Error::SeqUndefined { .. })));
    let b = Kernel::new(VarSet::new(), vs(&["x"]), fs.random_core(&mut TrialRng::seed_from_u64(1), &VarList::empty(), &VarList::of(&["x"])).unwrap()).unwrap();
    assert!(matches!(par(&fs, &a, &b), Err(Error::ParUndefined { .. })));
}

#[test]
fn par_unit_and_product_formula() {
    let fs = FinStoch::uniform(2);
    let mut rng = TrialRng::seed_from_u64(3);
    let f = random_kernel(&fs, &mut rng, &vs(&["a"]), &vs(&["a", "b"])).unwrap();
    let g = random_kernel(&fs, &mut rng, &vs(&["c"]), &vs(&["c", "d"])).unwrap();
    let e = identity_kernel(&fs, &VarSet::new()).unwrap();
    assert!(kernel_equal(&fs, &par(&fs, &f, &e).unwrap(), &f));
    let fg = par(&fs, &f, &g).unwrap();
    let (ff, gf, fgf) = (embed(&fs, &f).unwrap(), embed(&fs, &g).unwrap(), embed(&fs, &fg).unwrap());
    for l in fs.memories(&fg.dom().to_list()).unwrap() {
        let joint = fs.row(&fgf, &l).unwrap();
        let pf = fs.row(&ff, &l).unwrap();
        let pg = fs.row(&gf, &l).unwrap();
        for out in fs.memories(&fg.cod().to_list()).unwrap() {
            let restrict = |keys: &VarSet| out.iter().filter(|(k, _)| keys.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
            let expected: Q = pf.get(&restrict(f.cod())) * pg.get(&restrict(g.cod()));
            assert_eq!(joint.get(&out), expected);
        }
    }
}

#[test]
fn subkernel_of_coins() {
    let fs = FinStoch::uniform(2);
    let (g1, g2) = (coin(&fs, "x"), coin(&fs, "y"));
    let f = par(&fs, &g1, &g2).unwrap();
    for g in [&g1, &g2] {
        let w = subkernel(&fs, g, &f).unwrap().witness().expect("witness");
        assert!(w.extension_vars.is_empty());
        assert!(kernel_equal(&fs, &replay(&fs, g, &w).unwrap(), &f));
    }
    let w = subkernel(&fs, &f, &f).unwrap().witness().unwrap();
    assert!(kernel_equal(&fs, &w.continuation, &identity_kernel(&fs, f.cod()).unwrap()));
}

#[test]
fn subkernel_refutations() {
    let fs = FinStoch::uniform(2);
    let f = par(&fs, &coin(&fs, "x"), &coin(&fs, "y")).unwrap();
    let uniform_x = fs.table(&VarList::empty(), &VarList::of(&["x"]), vec![Dist::new([(0, q(1, 2)), (1, q(1, 2))]).unwrap()]).unwrap();
    let cand = Kernel::new(VarSet::new(), vs(&["x"]), uniform_x).unwrap();
    assert!(matches!(subkernel(&fs, &cand, &f).unwrap(), SubkernelOutcome::Refuted(Refutation::CompletionDependence)));
    let stray = identity_kernel(&fs, &vs(&["w"])).unwrap();
    assert!(matches!(subkernel(&fs, &stray, &f).unwrap(), SubkernelOutcome::Refuted(Refutation::Type(_))));
    let prior = fs.table(&VarList::empty(), &VarList::of(&["z"]), vec![Dist::new([(0, q(1, 2)), (1, q(1, 2))]).unwrap()]).unwrap();
    let h = seq(&fs, &Kernel::new(VarSet::new(), vs(&["z"]), prior).unwrap(), &f).unwrap();
    assert!(matches!(subkernel(&fs, &cand, &h).unwrap(), SubkernelOutcome::Refuted(Refutation::MarginalMismatch)));
    let flipped = coin(&fs, "x");
    let skew = fs.table(&VarList::of(&["z"]), &VarList::of(&["x"]), vec![Dist::dirac(0), Dist::dirac(1)]).unwrap();
    let other = Kernel::new(vs(&["z"]), vs(&["x", "z"]), skew).unwrap();
    assert!(subkernel(&fs, &flipped, &f).unwrap().is_witness());
    assert!(matches!(subkernel(&fs, &other, &f).unwrap(), SubkernelOutcome::Refuted(Refutation::MarginalMismatch)));
    let dep = fs.table(&VarList::empty(), &VarList::of(&["x"]), vec![Dist::dirac(0)]).unwrap();
    let dep = Kernel::new(VarSet::new(), vs(&["x"]), dep).unwrap();
    let lifted = Kernel::new(vs(&["z"]), vs(&["x", "z"]), fs.table(&VarList::of(&["z"]), &VarList::of(&["x"]), vec![Dist::dirac(0), Dist::dirac(1)]).unwrap()).unwrap();
    assert!(matches!(subkernel(&fs, &dep, &lifted).unwrap(), SubkernelOutcome::Refuted(Refutation::CompletionDependence)));
}

#[test]
fn subkernel_positive_by_construction() {
    for seed in 0..40 {
        let mut rng = TrialRng::seed_from_u64(seed);
        let names: Vec<VarName> = ["a", "b", "c", "d"].iter().map(|s| VarName::new(*s).unwrap()).collect();
        let fs = random_finstoch(&mut rng, &names);
        let f = random_kernel(&fs, &mut rng, &vs(&["a"]), &vs(&["a", "b"])).unwrap();
        let h = random_kernel(&fs, &mut rng, &vs(&["a", "b", "c"]), &vs(&["a", "b", "c", "d"])).unwrap();
        let w = SubkernelWitness { extension_vars: vs(&["c"]), continuation: h };
        let g = replay(&fs, &f, &w).unwrap();
        let found = subkernel(&fs, &f, &g).unwrap().witness().expect("witness exists by construction");
        assert!(verify_witness(&fs, &f, &g, &found));
        assert_eq!(found.extension_vars, vs(&["c"]));
    }
}

#[test]
fn finrel_refuses_subkernel() {
    let fr = FinRel::uniform(2);
    let k = identity_kernel(&fr, &vs(&["x"])).unwrap();
    assert!(matches!(fr.decide_subkernel(&k, &k), Err(Error::Unsupported(_))));
}

#[test]
fn gauss_subkernel_of_regression() {
    let g = Gauss::scalar();
    let mut rng = TrialRng::seed_from_u64(5);
    let f = random_kernel(&g, &mut rng, &vs(&["w"]), &vs(&["w", "x"])).unwrap();
    let h = random_kernel(&g, &mut rng, &vs(&["w", "x"]), &vs(&["w", "x", "y"])).unwrap();
    let big = seq(&g, &f, &h).unwrap();
    assert!(subkernel(&g, &f, &big).unwrap().is_witness());
}

#[test]
fn frame_conditions_hold_on_small_runs() {
    for cond in FrameCondition::ALL {
        let r = frame_check(cond, random_finstoch, 11, 20, 3);
        assert!(r.ok(), "{cond} finstoch: {:?}", r.counterexample);
        let r = frame_check(cond, random_finrel, 11, 20, 3);
        assert!(r.ok(), "{cond} finrel: {:?}", r.counterexample);
        let r = frame_check(cond, super::random::random_gauss, 11, 10, 3);
        assert!(r.ok(), "{cond} gauss: {:?}", r.counterexample);
    }
}

#[test]
fn frame_reports_are_deterministic() {
    let a = frame_check(FrameCondition::SeqUpClosed, random_finstoch, 9, 16, 4);
    let b = frame_check(FrameCondition::SeqUpClosed, random_finstoch, 9, 16, 4);
    assert_eq!((a.passed, a.vacuous, a.failed), (b.passed, b.vacuous, b.failed));
    assert!(a.passed > 0);
}
