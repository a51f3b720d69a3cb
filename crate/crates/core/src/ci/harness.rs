//! Randomized cross-checks between the independence notions.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::examples;
use crate::finstoch::FinStoch;
use crate::kernels::random::{random_kernel, TrialRng};
use crate::kernels::{from_full, identity_kernel, marginal, par, seq, Kernel};
use crate::kfile::{to_file, FileInstance, KernelFile};
use crate::synvar::{DiagGraph, Node, Src, SynVar};
use crate::varspace::{VarList, VarName, VarSet};

use super::{dibi_ci, ext_superset_ci, markov_ci, plain_ci, superset_ci, CIQuery, CiInstance, Flavor};

/// The implications checked on every generated state.
pub const CHECKS: [&str; 6] = [
    "markov-iff-dibi",
    "superset-implies-dibi",
    "superset-implies-markov",
    "plain-iff-dibi",
    "ext-superset-iff-markov",
    "dibi-symmetric",
];

/// The subset of [`CHECKS`] run on random diagrams.
pub const SYNVAR_CHECKS: [&str; 3] = ["superset-implies-dibi", "superset-implies-markov", "superset-implies-ext-superset"];

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub checked: u64,
    pub violations: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedCase {
    pub name: String,
    pub results: BTreeMap<Flavor, bool>,
    pub expected: BTreeMap<Flavor, bool>,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnessFailure {
    pub trial: u64,
    pub check: String,
    pub query: CIQuery,
    /// The state, shrunk, as a kernel file with one kernel named `s`.
    pub file: KernelFile,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnessReport {
    pub seed: u64,
    pub trials: u64,
    pub checks: Vec<CheckSummary>,
    pub synvar_checks: Vec<CheckSummary>,
    pub fixed: Vec<FixedCase>,
    pub errors: Vec<String>,
    pub counterexample: Option<HarnessFailure>,
}

impl HarnessReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
            && self.checks.iter().chain(&self.synvar_checks).all(|c| c.violations == 0)
            && self.fixed.iter().all(|f| f.ok)
    }
}

/// Every flavor that applies to `q` on this instance.
pub fn all_flavors<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<BTreeMap<Flavor, bool>> {
    let mut out = BTreeMap::new();
    out.insert(Flavor::Dibi, dibi_ci(m, k, q)?);
    out.insert(Flavor::Markov, markov_ci(m, k, q)?);
    out.insert(Flavor::Superset, superset_ci(m, k, q)?);
    out.insert(Flavor::ExtSuperset, ext_superset_ci(m, k, q)?);
    if q.u.is_empty() {
        out.insert(Flavor::Plain, plain_ci(m, k, q)?);
    }
    Ok(out)
}

/// Outcome of each check on one state: `None` when it does not apply.
fn verdicts<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<Vec<Option<bool>>> {
    let r = all_flavors(m, k, q)?;
    let (d, mk, s, e) = (r[&Flavor::Dibi], r[&Flavor::Markov], r[&Flavor::Superset], r[&Flavor::ExtSuperset]);
    let swapped = dibi_ci(m, k, &q.swapped())?;
    Ok(vec![
        Some(mk == d),
        s.then_some(d),
        s.then_some(mk),
        r.get(&Flavor::Plain).map(|p| *p == d),
        Some(e == mk),
        Some(swapped == d),
    ])
}

fn names(prefix: &str, n: usize) -> VarSet {
    (0..n).map(|i| VarName::new(format!("{prefix}{i}")).expect("valid name")).collect()
}

fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = TrialRng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// A random state for trial `t`: unconstrained, built in the superset
/// shape, or built in the Markov shape followed by a random extension.
fn random_state(fs: &FinStoch, rng: &mut TrialRng, t: u64) -> Result<(Kernel<FinStoch>, CIQuery)> {
    let (w, x, y) = (VarSet::of(&["w"]), VarSet::of(&["x"]), VarSet::of(&["y"]));
    let u = names("u", rng.gen_range(0..=2));
    let q = CIQuery::new(w.clone(), x.clone(), y.clone(), u.clone(), Flavor::Dibi)?;
    let all = q.all();
    let k = match t % 3 {
        0 => random_kernel(fs, rng, &VarSet::new(), &all)?,
        1 => {
            let (mut u0, mut u1, mut u2) = (VarSet::new(), VarSet::new(), VarSet::new());
            for v in &u {
                [&mut u0, &mut u1, &mut u2][rng.gen_range(0..3)].insert(v.clone());
            }
            let s0 = random_kernel(fs, rng, &VarSet::new(), &w.union(&u0))?;
            let g1 = random_kernel(fs, rng, &w, &w.union(&x).union(&u1))?;
            let g2 = random_kernel(fs, rng, &w, &w.union(&y).union(&u2))?;
            seq(fs, &s0, &par(fs, &par(fs, &g1, &g2)?, &identity_kernel(fs, &u0)?)?)?
        }
        _ => {
            let s0 = random_kernel(fs, rng, &VarSet::new(), &w)?;
            let g1 = random_kernel(fs, rng, &w, &w.union(&x))?;
            let g2 = random_kernel(fs, rng, &w, &w.union(&y))?;
            let base = seq(fs, &s0, &par(fs, &g1, &g2)?)?;
            seq(fs, &base, &random_kernel(fs, rng, base.cod(), &all)?)?
        }
    };
    Ok((k, q))
}

/// A random closed diagram producing `w`, `x`, `y` and some `u`s, one to
/// four generators, each reading earlier outputs.
fn random_diagram(rng: &mut TrialRng) -> Result<(Kernel<SynVar>, CIQuery)> {
    let u = names("u", rng.gen_range(0..=2));
    let q = CIQuery::new(VarSet::of(&["w"]), VarSet::of(&["x"]), VarSet::of(&["y"]), u, Flavor::Dibi)?;
    let mut pending: Vec<VarName> = q.all().iter().cloned().collect();
    let mut made: Vec<(VarName, Src)> = Vec::new();
    let mut nodes = Vec::new();
    let count = rng.gen_range(1..=4.min(pending.len()));
    for i in 0..count {
        let take = if i + 1 == count { pending.len() } else { rng.gen_range(1..=pending.len() - (count - i - 1)) };
        let mut cod: Vec<VarName> = Vec::new();
        for _ in 0..take {
            cod.push(pending.remove(rng.gen_range(0..pending.len())));
        }
        cod.sort();
        let reads: Vec<&(VarName, Src)> = made.iter().filter(|_| rng.gen_bool(0.5)).collect();
        let node = Node {
            dom: reads.iter().map(|(v, _)| v.clone()).collect(),
            cod: VarList::new(cod.clone()),
            inputs: reads.iter().map(|(_, s)| *s).collect(),
        };
        for (p, v) in cod.into_iter().enumerate() {
            made.push((v, Src::Port(nodes.len(), p)));
        }
        nodes.push(node);
    }
    let cod = q.all().to_list();
    let outputs = cod.iter().map(|v| made.iter().find(|(n, _)| n == v).expect("produced").1).collect();
    let g = DiagGraph { dom: VarList::empty(), cod, nodes, outputs }.normalize();
    Ok((from_full(&SynVar, &g)?, q))
}

/// Marginalizes extra variables away while the check keeps failing.
fn shrink<M: CiInstance>(m: &M, mut k: Kernel<M>, mut q: CIQuery, check: usize) -> (Kernel<M>, CIQuery) {
    'outer: loop {
        for v in q.u.clone().iter() {
            let mut u = q.u.clone();
            u = u.difference(&VarSet::of(&[v.as_str()]));
            let Ok(q2) = CIQuery::new(q.w.clone(), q.x.clone(), q.y.clone(), u, q.flavor) else { continue };
            let Ok(k2) = marginal(m, &k, &q2.all()) else { continue };
            if matches!(verdicts(m, &k2, &q2), Ok(v) if v[check] == Some(false)) {
                (k, q) = (k2, q2);
                continue 'outer;
            }
        }
        return (k, q);
    }
}

fn failure<M: CiInstance + FileInstance>(m: &M, trial: u64, check: usize, k: Kernel<M>, q: CIQuery, names: &[&str]) -> Option<HarnessFailure> {
    let (k, q) = shrink(m, k, q, check);
    let file = to_file(m, &[("s".to_string(), &k)], None).ok()?;
    Some(HarnessFailure { trial, check: names[check].to_string(), query: q, file })
}

type TrialResult<M> = std::result::Result<(Vec<Option<bool>>, Kernel<M>, CIQuery), String>;

fn summarize<M: CiInstance + FileInstance>(
    m: &M,
    results: Vec<TrialResult<M>>,
    names: &'static [&'static str],
    pick: &[usize],
    errors: &mut Vec<String>,
    counterexample: &mut Option<HarnessFailure>,
) -> Vec<CheckSummary> {
    let mut sums: Vec<CheckSummary> = pick.iter().map(|&i| CheckSummary { name: names[i], checked: 0, violations: 0 }).collect();
    for (t, r) in results.into_iter().enumerate() {
        match r {
            Err(e) => errors.push(format!("trial {t}: {e}")),
            Ok((v, k, q)) => {
                for (slot, &i) in pick.iter().enumerate() {
                    let Some(ok) = v[i] else { continue };
                    sums[slot].checked += 1;
                    if !ok {
                        sums[slot].violations += 1;
                        if counterexample.is_none() {
                            *counterexample = failure(m, t as u64, i, k.clone(), q.clone(), names);
                        }
                    }
                }
            }
        }
    }
    sums
}

fn synvar_verdicts(k: &Kernel<SynVar>, q: &CIQuery) -> Result<Vec<Option<bool>>> {
    let s = superset_ci(&SynVar, k, q)?;
    if !s {
        return Ok(vec![None, None, None]);
    }
    Ok(vec![Some(dibi_ci(&SynVar, k, q)?), Some(markov_ci(&SynVar, k, q)?), Some(ext_superset_ci(&SynVar, k, q)?)])
}

fn fixed_case<M: CiInstance>(name: &str, m: &M, k: &Kernel<M>, q: &CIQuery, expected: &[(Flavor, bool)]) -> FixedCase {
    let expected: BTreeMap<Flavor, bool> = expected.iter().copied().collect();
    match all_flavors(m, k, q) {
        Ok(results) => {
            let ok = expected.iter().all(|(f, e)| results.get(f) == Some(e));
            FixedCase { name: name.to_string(), results, expected, ok }
        }
        Err(_) => FixedCase { name: name.to_string(), results: BTreeMap::new(), expected, ok: false },
    }
}

fn fixed_cases() -> Result<Vec<FixedCase>> {
    use Flavor::*;
    let (w, x, y) = (VarSet::of(&["w"]), VarSet::of(&["x"]), VarSet::of(&["y"]));
    let sep = examples::separating_kernel()?;
    let q = CIQuery::new(w, x.clone(), y.clone(), VarSet::of(&["u"]), Dibi)?;
    let mut out = vec![fixed_case("separating-diagram", &SynVar, &sep, &q, &[(Dibi, true), (Superset, false), (ExtSuperset, true)])];
    let qz = CIQuery::new(VarSet::of(&["z"]), x, y, VarSet::new(), Dibi)?;
    let (fs, h) = examples::ci_state()?;
    let all_true: Vec<(Flavor, bool)> = [Dibi, Plain, Markov, Superset, ExtSuperset].iter().map(|f| (*f, true)).collect();
    out.push(fixed_case("coin-state", &fs, &h, &qz, &all_true));
    let (fs, xor) = examples::xor_state()?;
    let all_false: Vec<(Flavor, bool)> = all_true.iter().map(|(f, _)| (*f, false)).collect();
    out.push(fixed_case("xor-state", &fs, &xor, &qz, &all_false));
    Ok(out)
}

/// Runs `trials` random states on bits through every check, plus as many
/// random diagrams and the fixed examples.
pub fn theorem_harness(seed: u64, trials: u64) -> HarnessReport {
    let fs = FinStoch::uniform(2);
    let results: Vec<TrialResult<FinStoch>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let (k, q) = random_state(&fs, &mut rng, t).map_err(|e| e.to_string())?;
            let v = verdicts(&fs, &k, &q).map_err(|e| e.to_string())?;
            Ok((v, k, q))
        })
        .collect();
    let mut errors = Vec::new();
    let mut counterexample = None;
    let checks = summarize(&fs, results, &CHECKS, &[0, 1, 2, 3, 4, 5], &mut errors, &mut counterexample);

    let diagrams: Vec<TrialResult<SynVar>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t | 1 << 40);
            let (k, q) = random_diagram(&mut rng).map_err(|e| e.to_string())?;
            let v = synvar_verdicts(&k, &q).map_err(|e| e.to_string())?;
            Ok((v, k, q))
        })
        .collect();
    let mut synvar_checks = Vec::new();
    for (i, name) in SYNVAR_CHECKS.iter().enumerate() {
        let mut sum = CheckSummary { name, checked: 0, violations: 0 };
        for (t, r) in diagrams.iter().enumerate() {
            match r {
                Ok((v, k, q)) => {
                    if let Some(ok) = v[i] {
                        sum.checked += 1;
                        if !ok {
                            sum.violations += 1;
                            if counterexample.is_none() {
                                counterexample = to_file(&SynVar, &[("s".to_string(), k)], None)
                                    .ok()
                                    .map(|file| HarnessFailure { trial: t as u64, check: format!("synvar-{name}"), query: q.clone(), file });
                            }
                        }
                    }
                }
                Err(e) if i == 0 => errors.push(format!("diagram {t}: {e}")),
                Err(_) => {}
            }
        }
        synvar_checks.push(sum);
    }
    let fixed = fixed_cases().unwrap_or_else(|e| {
        errors.push(format!("fixed cases: {e}"));
        Vec::new()
    });
    HarnessReport { seed, trials, checks, synvar_checks, fixed, errors, counterexample }
}
