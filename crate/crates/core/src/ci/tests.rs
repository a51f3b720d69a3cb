use super::*;
use crate::examples;
use crate::finstoch::{q, Dist, Memory};
use crate::gauss::GaussMap;
use crate::kernels::random::{random_finrel, random_gauss, random_kernel, TrialRng};
use crate::kernels::{identity_kernel, par, seq};
use crate::varspace::{VarList, VarName};
use nalgebra::DVector;
use rand::SeedableRng;

fn vs(names: &[&str]) -> VarSet {
    VarSet::of(names)
}

fn query(w: &[&str], x: &[&str], y: &[&str], u: &[&str]) -> CIQuery {
    CIQuery::new(vs(w), vs(x), vs(y), vs(u), Flavor::Dibi).unwrap()
}

fn rng(seed: u64) -> TrialRng {
    TrialRng::seed_from_u64(seed)
}

/// Brute-force Markov independence over every value tuple of `w ∪ x ∪ y`,
/// including those of mass zero.
fn finstoch_oracle(fs: &FinStoch, k: &Kernel<FinStoch>, q: &CIQuery) -> bool {
    let joint: Dist<Memory> = fs.row(&embed(fs, k).unwrap(), &Memory::new()).unwrap();
    let mass = |keep: &VarSet, at: &Memory| -> Q {
        joint
            .iter()
            .filter(|(m, _)| keep.iter().all(|v| m[v] == at[v]))
            .map(|(_, p)| p.clone())
            .fold(num::Zero::zero(), |a: Q, b| a + b)
    };
    let wxy = q.w.union(&q.x).union(&q.y);
    let list: VarList = wxy.iter().cloned().collect();
    fs.memories(&list).unwrap().iter().all(|m| {
        mass(&wxy, m) * mass(&q.w, m) == mass(&q.w.union(&q.x), m) * mass(&q.w.union(&q.y), m)
    })
}

/// Textbook join dependency: for every `w`, the `(x, y)` pairs are the
/// product of the `x` values and the `y` values seen with it.
fn finrel_oracle(fr: &FinRel, k: &Kernel<FinRel>, q: &CIQuery) -> bool {
    let rel = FlatRelation::from_state(fr, &embed(fr, k).unwrap()).unwrap();
    let pick = |t: &Vec<String>, s: &VarSet| -> Vec<String> {
        rel.vars.iter().zip(t).filter(|(v, _)| s.contains(v)).map(|(_, x)| x.clone()).collect()
    };
    let mut groups: BTreeMap<Vec<String>, Vec<(Vec<String>, Vec<String>)>> = BTreeMap::new();
    for t in &rel.tuples {
        groups.entry(pick(t, &q.w)).or_default().push((pick(t, &q.x), pick(t, &q.y)));
    }
    groups.values().all(|pairs| {
        let xs: std::collections::BTreeSet<_> = pairs.iter().map(|p| p.0.clone()).collect();
        let ys: std::collections::BTreeSet<_> = pairs.iter().map(|p| p.1.clone()).collect();
        let seen: std::collections::BTreeSet<_> = pairs.iter().cloned().collect();
        xs.iter().all(|x| ys.iter().all(|y| seen.contains(&(x.clone(), y.clone()))))
    })
}

/// A state built as `s0 ; (g1 ⊕ g2)` so that `x ⟂ y | w` holds.
fn markov_shaped<M: crate::kernels::RandomCore>(m: &M, rng: &mut TrialRng) -> Kernel<M> {
    let (w, x, y) = (vs(&["w"]), vs(&["x"]), vs(&["y"]));
    let s0 = random_kernel(m, rng, &VarSet::new(), &w).unwrap();
    let g1 = random_kernel(m, rng, &w, &w.union(&x)).unwrap();
    let g2 = random_kernel(m, rng, &w, &w.union(&y)).unwrap();
    seq(m, &s0, &par(m, &g1, &g2).unwrap()).unwrap()
}

#[test]
fn flavor_names_round_trip() {
    for f in Flavor::ALL {
        assert_eq!(f.name().parse::<Flavor>().unwrap(), f);
        assert_eq!(serde_json::to_string(&f).unwrap(), format!("\"{}\"", f.name()));
    }
    assert!("nope".parse::<Flavor>().is_err());
}

#[test]
fn queries_need_disjoint_parts() {
    let e = CIQuery::new(vs(&["w"]), vs(&["x", "w"]), vs(&["y"]), VarSet::new(), Flavor::Dibi);
    assert!(matches!(e, Err(Error::OverlapViolation { .. })));
    let e = CIQuery::new(vs(&["w"]), vs(&["x"]), vs(&["y"]), vs(&["u"]), Flavor::Plain);
    assert!(matches!(e, Err(Error::ShapeError(_))));
}

#[test]
fn kernels_must_be_states_over_the_query() {
    let (fs, h) = examples::ci_state().unwrap();
    let wrong = query(&["z"], &["x"], &["w"], &[]);
    assert!(matches!(markov_ci(&fs, &h, &wrong), Err(Error::ShapeError(_))));
    let (_, g1, _, _) = examples::coins().unwrap();
    assert!(matches!(markov_ci(&fs, &g1, &query(&["z"], &["x"], &[], &[])), Err(Error::ShapeError(_))));
}

#[test]
fn coin_state_is_independent_given_z() {
    let (fs, h) = examples::ci_state().unwrap();
    let core = embed(&fs, &h).unwrap();
    let expected = [q(1, 8), q(1, 8), q(1, 8), q(1, 8), q(1, 32), q(3, 32), q(3, 32), q(9, 32)];
    let radix = core.cod_radix();
    for (code, p) in expected.iter().enumerate() {
        // cod order is x, y, z with z as the most significant digit
        let t = radix.decode(code);
        let lhs = core.rows()[0].get(&radix.encode(&[t[2], t[1], t[0]]));
        assert_eq!(&lhs, p, "mass at {t:?}");
    }
    let qz = query(&["z"], &["x"], &["y"], &[]);
    for f in Flavor::ALL {
        assert!(decide(&fs, &h, &qz.with_flavor(f).unwrap()).unwrap(), "{f}");
    }
    assert_eq!(superset_partition(&h, &qz).unwrap(), Some([VarSet::new(), VarSet::new(), VarSet::new()]));
}

#[test]
fn xor_state_is_dependent_given_z() {
    let (fs, h) = examples::xor_state().unwrap();
    let qz = query(&["z"], &["x"], &["y"], &[]);
    for f in Flavor::ALL {
        assert!(!decide(&fs, &h, &qz.with_flavor(f).unwrap()).unwrap(), "{f}");
    }
}

#[test]
fn product_and_correlated_states_without_conditioning() {
    let fs = FinStoch::uniform(2);
    let product = par(&fs, &examples::fair(&fs, "x").unwrap(), &examples::fair(&fs, "y").unwrap()).unwrap();
    let q0 = query(&[], &["x"], &["y"], &[]);
    assert!(dibi_ci(&fs, &product, &q0).unwrap());
    assert!(markov_ci(&fs, &product, &q0).unwrap());
    let copy = fs.table(&VarList::empty(), &VarList::of(&["x", "y"]), vec![Dist::new([(0, q(1, 2)), (3, q(1, 2))]).unwrap()]).unwrap();
    let correlated = Kernel::new(VarSet::new(), vs(&["x", "y"]), copy).unwrap();
    assert!(!dibi_ci(&fs, &correlated, &q0).unwrap());
    assert!(!markov_ci(&fs, &correlated, &q0).unwrap());
    let qx = query(&[], &[], &["x", "y"], &[]);
    assert!(dibi_ci(&fs, &correlated, &qx).unwrap());
    assert!(markov_ci(&fs, &correlated, &qx).unwrap());
}

#[test]
fn finstoch_markov_matches_brute_force() {
    let fs = FinStoch::uniform(2);
    let all = vs(&["w", "x", "y"]);
    let q = query(&["w"], &["x"], &["y"], &[]);
    for seed in 0..60 {
        let mut r = rng(seed);
        let k = if seed % 2 == 0 { random_kernel(&fs, &mut r, &VarSet::new(), &all).unwrap() } else { markov_shaped(&fs, &mut r) };
        let m = markov_ci(&fs, &k, &q).unwrap();
        assert_eq!(m, finstoch_oracle(&fs, &k, &q), "seed {seed}");
        assert_eq!(dibi_ci(&fs, &k, &q).unwrap(), m, "seed {seed}");
        assert_eq!(plain_ci(&fs, &k, &q).unwrap(), m, "seed {seed}");
        if seed % 2 == 1 {
            assert!(m, "seed {seed}");
        }
    }
}

#[test]
fn superset_partition_is_found_for_constructed_states() {
    let fs = FinStoch::uniform(2);
    let (w, x, y) = (vs(&["w"]), vs(&["x"]), vs(&["y"]));
    for seed in 0..30 {
        let mut r = rng(100 + seed);
        let (u0, u1, u2) = (vs(&["u0"]), vs(&["u1"]), vs(&["u2"]));
        let s0 = random_kernel(&fs, &mut r, &VarSet::new(), &w.union(&u0)).unwrap();
        let g1 = random_kernel(&fs, &mut r, &w, &w.union(&x).union(&u1)).unwrap();
        let g2 = random_kernel(&fs, &mut r, &w, &w.union(&y).union(&u2)).unwrap();
        let tail = par(&fs, &par(&fs, &g1, &g2).unwrap(), &identity_kernel(&fs, &u0).unwrap()).unwrap();
        let k = seq(&fs, &s0, &tail).unwrap();
        let q = query(&["w"], &["x"], &["y"], &["u0", "u1", "u2"]);
        let [p0, p1, p2] = superset_partition(&k, &q).unwrap().expect("constructed partition");
        assert_eq!(p0.union(&p1).union(&p2), q.u);
        assert!(superset_ci(&fs, &k, &q).unwrap());
        assert!(dibi_ci(&fs, &k, &q).unwrap());
        assert!(markov_ci(&fs, &k, &q).unwrap());
    }
}

#[test]
fn superset_without_extras_is_plain() {
    let fs = FinStoch::uniform(2);
    let all = vs(&["w", "x", "y"]);
    let q = query(&["w"], &["x"], &["y"], &[]);
    for seed in 0..30 {
        let mut r = rng(200 + seed);
        let k = if seed % 2 == 0 { random_kernel(&fs, &mut r, &VarSet::new(), &all).unwrap() } else { markov_shaped(&fs, &mut r) };
        assert_eq!(superset_ci(&fs, &k, &q).unwrap(), plain_ci(&fs, &k, &q).unwrap(), "seed {seed}");
    }
}

#[test]
fn superset_refuses_too_many_extras() {
    let fs = FinStoch::uniform(2);
    let u: Vec<String> = (0..=MAX_EXTRA).map(|i| format!("u{i}")).collect();
    let u: Vec<&str> = u.iter().map(String::as_str).collect();
    let q = query(&[], &["x"], &["y"], &u);
    let k = random_kernel(&fs, &mut rng(1), &VarSet::new(), &q.all()).unwrap();
    assert!(matches!(superset_ci(&fs, &k, &q), Err(Error::Budget(_))));
}

#[test]
fn partitions_cover_every_assignment() {
    let u = vs(&["a", "b", "c"]);
    let parts = partitions3(&u);
    assert_eq!(parts.len(), 27);
    let distinct: std::collections::BTreeSet<_> = parts.iter().cloned().collect();
    assert_eq!(distinct.len(), 27);
    for [a, b, c] in &parts {
        assert!(a.is_disjoint(b) && b.is_disjoint(c) && a.is_disjoint(c));
        assert_eq!(a.union(b).union(c), u);
    }
    assert_eq!(partitions3(&VarSet::new()).len(), 1);
}

#[test]
fn gauss_example() {
    let (g, [_, _, _, s]) = examples::gauss_parts().unwrap();
    let full: GaussMap = embed(&g, &s).unwrap();
    let want = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0]);
    assert!((full.cov.clone() - want).abs().max() <= 1e-9);
    assert!(full.mean.abs().max() <= 1e-9);
    let given_w = query(&["w"], &["x"], &["y"], &[]);
    assert!(markov_ci(&g, &s, &given_w).unwrap());
    assert!(dibi_ci(&g, &s, &given_w).unwrap());
    let alone = query(&[], &["x"], &["y"], &["w"]);
    assert!(!markov_ci(&g, &s, &alone).unwrap());
    assert!((gauss_conditional_cross(&g, &s, &alone).unwrap()[(0, 0)] - 1.0).abs() <= 1e-9);
    assert!(matches!(superset_ci(&g, &s, &given_w), Err(Error::Unsupported(_))));
}

#[test]
fn gauss_markov_matches_precision_matrix() {
    let names: Vec<VarName> = ["w", "x", "y"].iter().map(|v| VarName::new(*v).unwrap()).collect();
    let q = query(&["w"], &["x"], &["y"], &[]);
    let mut tested = 0;
    for seed in 0..400 {
        let mut r = rng(300 + seed);
        let g = random_gauss(&mut r, &names);
        let k = if seed % 2 == 0 { random_kernel(&g, &mut r, &VarSet::new(), &q.all()).unwrap() } else { markov_shaped(&g, &mut r) };
        let full = embed(&g, &k).unwrap();
        if full.cov.determinant().abs() < 1e-6 {
            continue;
        }
        let prec = full.cov.clone().try_inverse().unwrap();
        tested += 1;
        let dw = g.var_dim(&names[0]).unwrap();
        let dx = g.var_dim(&names[1]).unwrap();
        let scale = prec.abs().max().max(1.0);
        let zero = prec.view((dw, dw + dx), (dx, prec.ncols() - dw - dx)).iter().all(|v| v.abs() <= 1e-7 * scale);
        let m = markov_ci(&g, &k, &q).unwrap();
        assert_eq!(m, zero, "seed {seed}");
        assert_eq!(ext_superset_ci(&g, &k, &q).unwrap(), m, "seed {seed}");
        if seed % 2 == 1 {
            assert!(m, "seed {seed}");
        }
    }
    assert!(tested >= 15, "only {tested} nonsingular cases");
}

#[test]
fn gauss_degenerate_conditioning_uses_pseudo_inverse() {
    let g = Gauss::scalar();
    // w is deterministic zero, x and y independent noises
    let cov = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let core = g.state(&VarList::of(&["w", "x", "y"]), cov, DVector::zeros(3)).unwrap();
    let k = Kernel::new(VarSet::new(), vs(&["w", "x", "y"]), core).unwrap();
    assert!(markov_ci(&g, &k, &query(&["w"], &["x"], &["y"], &[])).unwrap());
}

#[test]
fn finrel_matches_join_dependency_oracle() {
    let names: Vec<VarName> = ["w", "x", "y"].iter().map(|v| VarName::new(*v).unwrap()).collect();
    let q = query(&["w"], &["x"], &["y"], &[]);
    let (mut yes, mut no) = (0, 0);
    for seed in 0..80 {
        let mut r = rng(400 + seed);
        let fr = random_finrel(&mut r, &names);
        let k = if seed % 2 == 0 { random_kernel(&fr, &mut r, &VarSet::new(), &q.all()).unwrap() } else { markov_shaped(&fr, &mut r) };
        let m = markov_ci(&fr, &k, &q).unwrap();
        assert_eq!(m, finrel_oracle(&fr, &k, &q), "seed {seed}");
        assert_eq!(plain_ci(&fr, &k, &q).unwrap(), m);
        if m {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes > 0 && no > 0);
}

#[test]
fn finrel_refuses_decomposition_flavors() {
    let fr = FinRel::uniform(2);
    let q = query(&["w"], &["x"], &["y"], &[]);
    let k = random_kernel(&fr, &mut rng(7), &VarSet::new(), &q.all()).unwrap();
    for f in [Flavor::Dibi, Flavor::Superset, Flavor::ExtSuperset] {
        assert!(matches!(decide(&fr, &k, &q.with_flavor(f).unwrap()), Err(Error::Unsupported(_))), "{f}");
    }
}

#[test]
fn separating_diagram_separates_superset_from_dibi() {
    let k = examples::separating_kernel().unwrap();
    let q = query(&["w"], &["x"], &["y"], &["u"]);
    assert!(dibi_ci(&SynVar, &k, &q).unwrap());
    assert!(!superset_ci(&SynVar, &k, &q).unwrap());
    assert!(ext_superset_ci(&SynVar, &k, &q).unwrap());
    assert!(markov_ci(&SynVar, &k, &q).unwrap());
    let plain = query(&["w"], &["x"], &["y", "u"], &[]);
    assert!(!plain_ci(&SynVar, &k, &plain).unwrap());
}

#[test]
fn dibi_is_symmetric_on_random_states() {
    let fs = FinStoch::uniform(2);
    let q = query(&["w"], &["x"], &["y"], &["u"]);
    for seed in 0..30 {
        let k = random_kernel(&fs, &mut rng(500 + seed), &VarSet::new(), &q.all()).unwrap();
        assert_eq!(dibi_ci(&fs, &k, &q).unwrap(), dibi_ci(&fs, &k, &q.swapped()).unwrap(), "seed {seed}");
    }
}

#[test]
fn small_harness_run_is_clean() {
    let report = theorem_harness(11, 24);
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert!(report.ok(), "{:?}", report.counterexample.map(|c| c.file.to_json()));
    assert!(report.checks.iter().all(|c| c.checked > 0));
    assert_eq!(report.fixed.len(), 3);
}
