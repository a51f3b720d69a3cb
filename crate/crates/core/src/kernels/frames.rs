//! The twelve frame conditions, evaluated on concrete kernels and checked on
//! randomly generated ones.

use std::fmt;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::Markov;
use crate::varspace::{VarName, VarSet};

use super::random::{random_kernel, random_subset, RandomCore, TrialRng};
use super::subkernel::{replay, verify_witness, SubkernelDecision, SubkernelOutcome, SubkernelWitness};
use super::{embed, from_full, identity_kernel, kernel_equal, par, seq, Kernel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrameCondition {
    PlusCom,
    PlusUnitExist,
    PlusAssoc,
    SeqUnitExistL,
    SeqUnitExistR,
    SeqAssoc,
    PlusUnitCoh,
    SeqUnitCohR,
    UnitClosure,
    PlusDownClosed,
    SeqUpClosed,
    RevExchange,
}

use FrameCondition::*;

impl FrameCondition {
    pub const ALL: [FrameCondition; 12] = [
        PlusCom,
        PlusUnitExist,
        PlusAssoc,
        SeqUnitExistL,
        SeqUnitExistR,
        SeqAssoc,
        PlusUnitCoh,
        SeqUnitCohR,
        UnitClosure,
        PlusDownClosed,
        SeqUpClosed,
        RevExchange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlusCom => "plus-com",
            PlusUnitExist => "plus-unit-exist",
            PlusAssoc => "plus-assoc",
            SeqUnitExistL => "seq-unit-exist-l",
            SeqUnitExistR => "seq-unit-exist-r",
            SeqAssoc => "seq-assoc",
            PlusUnitCoh => "plus-unit-coh",
            SeqUnitCohR => "seq-unit-coh-r",
            UnitClosure => "unit-closure",
            PlusDownClosed => "plus-down-closed",
            SeqUpClosed => "seq-up-closed",
            RevExchange => "rev-exchange",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Names of the kernels a case consists of, in order.
    pub fn roles(self) -> &'static [&'static str] {
        match self {
            PlusCom => &["a", "b"],
            PlusUnitExist | SeqUnitExistL | SeqUnitExistR => &["a"],
            PlusAssoc | SeqAssoc => &["a", "b", "c"],
            PlusUnitCoh | SeqUnitCohR => &["a", "e"],
            UnitClosure => &["e", "h"],
            PlusDownClosed => &["a_sub", "b_sub", "a_ext", "b_ext"],
            SeqUpClosed => &["a", "b", "h"],
            RevExchange => &["a1", "a2", "b1", "b2"],
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&c| c == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for FrameCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// The premises do not hold.
    Vacuous,
    Pass,
    Fail(String),
}

/// `None` for an undefined composite, errors otherwise propagated.
fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(t) => Ok(Some(t)),
        Err(Error::SeqUndefined { .. } | Error::ParUndefined { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn same<M: Markov>(m: &M, l: Option<Kernel<M>>, r: Option<Kernel<M>>, what: &str) -> Outcome {
    match (l, r) {
        (None, None) => Outcome::Vacuous,
        (Some(l), Some(r)) if kernel_equal(m, &l, &r) => Outcome::Pass,
        (Some(_), Some(_)) => Outcome::Fail(format!("{what}: sides differ")),
        _ => Outcome::Fail(format!("{what}: only one side is defined")),
    }
}

fn check(ok: bool, msg: &str) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail(msg.to_string())
    }
}

/// Checks `f ⊑ g` by a constructed witness and, where the instance decides
/// the order, by the decision procedure too.
fn below<M: SubkernelDecision>(m: &M, f: &Kernel<M>, g: &Kernel<M>, w: Option<&SubkernelWitness<M>>, what: &str) -> Result<Outcome> {
    if let Some(w) = w {
        if !verify_witness(m, f, g, w) {
            return Ok(Outcome::Fail(format!("{what}: constructed witness does not replay")));
        }
    }
    match m.decide_subkernel(f, g) {
        Ok(SubkernelOutcome::Witness(w)) if verify_witness(m, f, g, &w) => Ok(Outcome::Pass),
        Ok(SubkernelOutcome::Witness(_)) => Ok(Outcome::Fail(format!("{what}: decided witness does not replay"))),
        Ok(SubkernelOutcome::Refuted(r)) => Ok(Outcome::Fail(format!("{what}: decision procedure refutes ({r})"))),
        Err(Error::Unsupported(_)) => Ok(Outcome::Pass),
        Err(e) => Err(e),
    }
}

fn all(outcomes: Vec<Outcome>) -> Outcome {
    outcomes.into_iter().find(|o| matches!(o, Outcome::Fail(_))).unwrap_or(Outcome::Pass)
}

fn witness<M: Markov>(u: VarSet, h: Kernel<M>) -> SubkernelWitness<M> {
    SubkernelWitness { extension_vars: u, continuation: h }
}

/// Evaluates one condition on the kernels named by [`FrameCondition::roles`].
pub fn evaluate<M: SubkernelDecision>(m: &M, cond: FrameCondition, ks: &[Kernel<M>]) -> Result<Outcome> {
    if ks.len() != cond.roles().len() {
        return Err(Error::ShapeError(format!("{cond} takes {} kernels, got {}", cond.roles().len(), ks.len())));
    }
    let empty = identity_kernel(m, &VarSet::new())?;
    Ok(match cond {
        PlusCom => same(m, defined(par(m, &ks[0], &ks[1]))?, defined(par(m, &ks[1], &ks[0]))?, "a ⊕ b vs b ⊕ a"),
        PlusUnitExist => {
            let a = &ks[0];
            check(
                kernel_equal(m, &par(m, &empty, a)?, a) && kernel_equal(m, &par(m, a, &empty)?, a),
                "the empty identity is not a parallel unit",
            )
        }
        PlusAssoc => {
            let (a, b, c) = (&ks[0], &ks[1], &ks[2]);
            let l = match defined(par(m, a, b))? {
                Some(ab) => defined(par(m, &ab, c))?,
                None => None,
            };
            let r = match defined(par(m, b, c))? {
                Some(bc) => defined(par(m, a, &bc))?,
                None => None,
            };
            same(m, l, r, "(a ⊕ b) ⊕ c vs a ⊕ (b ⊕ c)")
        }
        SeqUnitExistL => {
            let a = &ks[0];
            check(kernel_equal(m, &seq(m, &identity_kernel(m, a.dom())?, a)?, a), "id ⊙ a differs from a")
        }
        SeqUnitExistR => {
            let a = &ks[0];
            check(kernel_equal(m, &seq(m, a, &identity_kernel(m, a.cod())?)?, a), "a ⊙ id differs from a")
        }
        SeqAssoc => {
            let (a, b, c) = (&ks[0], &ks[1], &ks[2]);
            let l = match defined(seq(m, a, b))? {
                Some(ab) => defined(seq(m, &ab, c))?,
                None => None,
            };
            let r = match defined(seq(m, b, c))? {
                Some(bc) => defined(seq(m, a, &bc))?,
                None => None,
            };
            same(m, l, r, "(a ⊙ b) ⊙ c vs a ⊙ (b ⊙ c)")
        }
        PlusUnitCoh => {
            let (a, e) = (&ks[0], &ks[1]);
            match defined(par(m, a, e))? {
                None => Outcome::Vacuous,
                Some(ae) => {
                    let u = e.dom().difference(a.dom());
                    match defined(par(m, &identity_kernel(m, a.cod())?, e))? {
                        None => Outcome::Fail("id ⊕ e undefined".into()),
                        Some(h) => below(m, a, &ae, Some(&witness(u, h)), "a ⊑ a ⊕ e")?,
                    }
                }
            }
        }
        SeqUnitCohR => {
            let (a, e) = (&ks[0], &ks[1]);
            match defined(seq(m, a, e))? {
                None => Outcome::Vacuous,
                Some(ae) => below(m, a, &ae, Some(&witness(VarSet::new(), e.clone())), "a ⊑ a ⊙ e")?,
            }
        }
        UnitClosure => {
            let (e, h) = (&ks[0], &ks[1]);
            let w = witness(h.dom().difference(e.cod()), h.clone());
            match defined(replay(m, e, &w))? {
                None => Outcome::Vacuous,
                Some(big) => {
                    let revalid = from_full(m, &embed(m, &big)?).is_ok_and(|k| kernel_equal(m, &k, &big));
                    all(vec![check(revalid, "extension is not a kernel"), below(m, e, &big, Some(&w), "e ⊑ e′")?])
                }
            }
        }
        PlusDownClosed => {
            let (a1, b1, a2, b2) = (&ks[0], &ks[1], &ks[2], &ks[3]);
            let wa = witness(a2.dom().difference(a1.cod()), a2.clone());
            let wb = witness(b2.dom().difference(b1.cod()), b2.clone());
            let (a, b) = match (defined(replay(m, a1, &wa))?, defined(replay(m, b1, &wb))?) {
                (Some(a), Some(b)) => (a, b),
                _ => return Ok(Outcome::Vacuous),
            };
            match defined(par(m, &a, &b))? {
                None => Outcome::Vacuous,
                Some(ab) => match defined(par(m, a1, b1))? {
                    None => Outcome::Fail("a′ ⊕ b′ undefined".into()),
                    Some(sub) => {
                        let u = wa.extension_vars.union(&wb.extension_vars).difference(sub.dom());
                        match defined(par(m, a2, b2))? {
                            None => Outcome::Fail("extension parts do not compose in parallel".into()),
                            Some(h) => below(m, &sub, &ab, Some(&witness(u, h)), "a′ ⊕ b′ ⊑ a ⊕ b")?,
                        }
                    }
                },
            }
        }
        SeqUpClosed => {
            let (a, b, h) = (&ks[0], &ks[1], &ks[2]);
            let ab = match defined(seq(m, a, b))? {
                Some(ab) => ab,
                None => return Ok(Outcome::Vacuous),
            };
            let w = witness(h.dom().difference(b.cod()), h.clone());
            let c = match defined(replay(m, &ab, &w))? {
                Some(c) => c,
                None => return Ok(Outcome::Vacuous),
            };
            let mut checks = vec![up_split(m, a, b, &c, &w, "constructed")?];
            match m.decide_subkernel(&ab, &c) {
                Ok(SubkernelOutcome::Witness(found)) => checks.push(up_split(m, a, b, &c, &found, "decided")?),
                Ok(SubkernelOutcome::Refuted(r)) => checks.push(Outcome::Fail(format!("a ⊙ b ⊑ c′ refuted ({r})"))),
                Err(Error::Unsupported(_)) => {}
                Err(e) => return Err(e),
            }
            all(checks)
        }
        RevExchange => {
            let (a1, a2, b1, b2) = (&ks[0], &ks[1], &ks[2], &ks[3]);
            let lhs = match (defined(seq(m, a1, a2))?, defined(seq(m, b1, b2))?) {
                (Some(a), Some(b)) => defined(par(m, &a, &b))?,
                _ => None,
            };
            match lhs {
                None => Outcome::Vacuous,
                Some(l) => {
                    let rhs = match (defined(par(m, a1, b1))?, defined(par(m, a2, b2))?) {
                        (Some(a), Some(b)) => defined(seq(m, &a, &b))?,
                        _ => None,
                    };
                    match rhs {
                        None => Outcome::Fail("right side undefined".into()),
                        Some(r) => check(kernel_equal(m, &l, &r), "sides differ"),
                    }
                }
            }
        }
    })
}

/// Splits `c′ = (a ⊙ b ⊕ id_U) ⊙ h` as `a′ ⊙ b′` with `a′ = a ⊕ id_U` and
/// `b′ = (b ⊕ id_U) ⊙ h`, and checks `a ⊑ a′`, `b ⊑ b′`.
fn up_split<M: SubkernelDecision>(
    m: &M,
    a: &Kernel<M>,
    b: &Kernel<M>,
    c: &Kernel<M>,
    w: &SubkernelWitness<M>,
    what: &str,
) -> Result<Outcome> {
    let u = &w.extension_vars;
    let id_u = identity_kernel(m, u)?;
    let (a2, b_lift) = match (defined(par(m, a, &id_u))?, defined(par(m, b, &id_u))?) {
        (Some(x), Some(y)) => (x, y),
        _ => return Ok(Outcome::Fail(format!("{what}: lifting by id_U undefined"))),
    };
    let b2 = match defined(seq(m, &b_lift, &w.continuation))? {
        Some(x) => x,
        None => return Ok(Outcome::Fail(format!("{what}: b′ undefined"))),
    };
    let split = match defined(seq(m, &a2, &b2))? {
        Some(x) => x,
        None => return Ok(Outcome::Fail(format!("{what}: a′ ⊙ b′ undefined"))),
    };
    if !kernel_equal(m, &split, c) {
        return Ok(Outcome::Fail(format!("{what}: a′ ⊙ b′ differs from c′")));
    }
    let wa = witness(u.clone(), identity_kernel(m, a2.cod())?);
    Ok(all(vec![
        below(m, a, &a2, Some(&wa), &format!("{what}: a ⊑ a′"))?,
        below(m, b, &b2, Some(w), &format!("{what}: b ⊑ b′"))?,
    ]))
}

fn unconstrained(rng: &mut TrialRng, pool: &VarSet) -> (VarSet, VarSet) {
    let dom = random_subset(rng, pool, 0.4);
    let cod = dom.union(&random_subset(rng, &pool.difference(&dom), 0.5));
    (dom, cod)
}

/// Assigns every variable one of `n` roles uniformly.
fn roles(rng: &mut TrialRng, pool: &VarSet, n: usize) -> Vec<VarSet> {
    let mut out = vec![VarSet::new(); n];
    for v in pool {
        out[rng.gen_range(0..n)].insert(v.clone());
    }
    out
}

fn chain(rng: &mut TrialRng, pool: &VarSet, len: usize) -> Vec<VarSet> {
    let r = roles(rng, pool, len + 2);
    (0..=len).map(|i| r[..=i].iter().fold(VarSet::new(), |acc, s| acc.union(s))).collect()
}

/// Kernel types for a random case of `cond`, generated so that the side
/// conditions hold most of the time.
fn case_types(rng: &mut TrialRng, cond: FrameCondition, pool: &VarSet) -> Vec<(VarSet, VarSet)> {
    let free = rng.gen_bool(0.2);
    let free_case = |rng: &mut TrialRng| (0..cond.roles().len()).map(|_| unconstrained(rng, pool)).collect::<Vec<_>>();
    match cond {
        PlusUnitExist | SeqUnitExistL | SeqUnitExistR => vec![unconstrained(rng, pool)],
        _ if free && !matches!(cond, UnitClosure | SeqUpClosed) => free_case(rng),
        PlusCom | PlusUnitCoh => {
            let r = roles(rng, pool, 6);
            let xa = r[1].union(&r[2]);
            let xb = r[1].union(&r[3]);
            vec![(xa.clone(), xa.union(&r[4])), (xb.clone(), xb.union(&r[5]))]
        }
        PlusAssoc => {
            let mut x = vec![VarSet::new(); 3];
            let mut y = vec![VarSet::new(); 3];
            for v in pool {
                match rng.gen_range(0..11) {
                    0 => {}
                    k @ 1..=7 => {
                        for (i, xi) in x.iter_mut().enumerate() {
                            if k & (1 << i) != 0 {
                                xi.insert(v.clone());
                            }
                        }
                    }
                    k => {
                        y[k - 8].insert(v.clone());
                    }
                }
            }
            (0..3).map(|i| (x[i].clone(), x[i].union(&y[i]))).collect()
        }
        SeqAssoc => {
            let c = chain(rng, pool, 3);
            vec![(c[0].clone(), c[1].clone()), (c[1].clone(), c[2].clone()), (c[2].clone(), c[3].clone())]
        }
        SeqUnitCohR => {
            let c = chain(rng, pool, 2);
            vec![(c[0].clone(), c[1].clone()), (c[1].clone(), c[2].clone())]
        }
        UnitClosure => {
            let (d, c) = unconstrained(rng, pool);
            let u = random_subset(rng, &pool.difference(&c), 0.5);
            let hd = c.union(&u);
            let hc = hd.union(&random_subset(rng, &pool.difference(&hd), 0.6));
            vec![(d, c), (hd, hc)]
        }
        PlusDownClosed => {
            let r = roles(rng, pool, 6);
            let xa = r[1].union(&r[2]);
            let xb = r[1].union(&r[3]);
            let (ya, yb) = (xa.union(&r[4]), xb.union(&r[5]));
            let sub = |rng: &mut TrialRng, x: &VarSet, y: &VarSet| {
                let x1 = random_subset(rng, x, 0.6);
                let y1 = x1.union(&random_subset(rng, &y.difference(x), 0.5));
                let ext_dom = y1.union(x);
                ((x1, y1), (ext_dom, y.clone()))
            };
            let (a1, a2) = sub(rng, &xa, &ya);
            let (b1, b2) = sub(rng, &xb, &yb);
            vec![a1, b1, a2, b2]
        }
        SeqUpClosed => {
            let c = chain(rng, pool, 2);
            let u = random_subset(rng, &pool.difference(&c[2]), 0.5);
            let hd = c[2].union(&u);
            let hc = hd.union(&random_subset(rng, &pool.difference(&hd), 0.6));
            vec![(c[0].clone(), c[1].clone()), (c[1].clone(), c[2].clone()), (hd, hc)]
        }
        RevExchange => {
            let r = roles(rng, pool, 8);
            let xa = r[1].union(&r[2]);
            let xb = r[1].union(&r[3]);
            let (ya, yb) = (xa.union(&r[4]), xb.union(&r[6]));
            let (za, zb) = (ya.union(&r[5]), yb.union(&r[7]));
            vec![(xa, ya.clone()), (ya, za), (xb, yb.clone()), (yb, zb)]
        }
    }
}

/// The variables `v0, v1, …` used by random cases.
pub fn pool_names(n: usize) -> Vec<VarName> {
    (0..n).map(|i| VarName::new(format!("v{i}")).expect("valid name")).collect()
}

pub struct Counterexample<M: Markov> {
    pub trial: u64,
    pub instance: M,
    pub kernels: Vec<Kernel<M>>,
    pub reason: String,
}

impl<M: Markov + fmt::Debug> fmt::Debug for Counterexample<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Counterexample")
            .field("trial", &self.trial)
            .field("instance", &self.instance)
            .field("kernels", &self.kernels)
            .field("reason", &self.reason)
            .finish()
    }
}

pub struct FrameReport<M: Markov> {
    pub condition: FrameCondition,
    pub seed: u64,
    pub trials: u64,
    pub passed: u64,
    pub vacuous: u64,
    pub failed: u64,
    pub counterexample: Option<Counterexample<M>>,
}

impl<M: Markov> FrameReport<M> {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

struct Trial<M: Markov> {
    instance: M,
    kernels: Vec<Kernel<M>>,
    outcome: Outcome,
}

fn run_trial<M, F>(cond: FrameCondition, make: &F, seed: u64, trial: u64, vars: usize) -> Trial<M>
where
    M: RandomCore + SubkernelDecision,
    F: Fn(&mut TrialRng, &[VarName]) -> M,
{
    let mut rng = TrialRng::seed_from_u64(seed);
    rng.set_stream(cond.index() * (1 << 40) + trial);
    let names = pool_names(vars);
    let instance = make(&mut rng, &names);
    let pool: VarSet = names.into_iter().collect();
    let types = case_types(&mut rng, cond, &pool);
    let kernels: Result<Vec<Kernel<M>>> = types.iter().map(|(d, c)| random_kernel(&instance, &mut rng, d, c)).collect();
    let (kernels, outcome) = match kernels {
        Ok(ks) => {
            let o = evaluate(&instance, cond, &ks).unwrap_or_else(|e| Outcome::Fail(format!("error: {e}")));
            (ks, o)
        }
        Err(e) => (Vec::new(), Outcome::Fail(format!("generation error: {e}"))),
    };
    Trial { instance, kernels, outcome }
}

/// Runs `trials` random cases of `cond` over at most `vars` variables. The
/// instance for each case comes from `make`; each trial draws from its own
/// stream of `seed`, so the report does not depend on scheduling. A failing
/// case is shrunk by retrying the same trial over fewer variables.
pub fn frame_check<M, F>(cond: FrameCondition, make: F, seed: u64, trials: u64, vars: usize) -> FrameReport<M>
where
    M: RandomCore + SubkernelDecision,
    F: Fn(&mut TrialRng, &[VarName]) -> M + Sync,
{
    let outcomes: Vec<Outcome> =
        (0..trials).into_par_iter().map(|t| run_trial(cond, &make, seed, t, vars).outcome).collect();
    let passed = outcomes.iter().filter(|o| **o == Outcome::Pass).count() as u64;
    let vacuous = outcomes.iter().filter(|o| **o == Outcome::Vacuous).count() as u64;
    let first_fail = outcomes.iter().position(|o| matches!(o, Outcome::Fail(_)));
    let counterexample = first_fail.map(|t| {
        let t = t as u64;
        let smallest = (1..=vars)
            .map(|n| run_trial(cond, &make, seed, t, n))
            .find(|tr| matches!(tr.outcome, Outcome::Fail(_)))
            .unwrap_or_else(|| run_trial(cond, &make, seed, t, vars));
        let reason = match smallest.outcome {
            Outcome::Fail(r) => r,
            _ => String::new(),
        };
        Counterexample { trial: t, instance: smallest.instance, kernels: smallest.kernels, reason }
    });
    FrameReport { condition: cond, seed, trials, passed, vacuous, failed: trials - passed - vacuous, counterexample }
}
