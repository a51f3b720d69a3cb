//! Satisfaction of formulas by kernels.
//!
//! Witness searches run over partly determined kernels: the right factor of
//! a `⨟` split is pinned only where the left factor has mass, and may be
//! completed freely elsewhere. Masks carry that information through the
//! recursion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::decompose::restrict_type_ok;
use crate::kernels::subkernel::verify_witness;
use crate::kernels::{kernel_equal, par, seq, Decompose, Kernel, SubkernelDecision, SubkernelWitness};
use crate::markov::Markov;
use crate::varspace::VarSet;

use super::Formula;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SatMode {
    /// Witnesses built from marginals and conditionals; decides formulas in
    /// which `∧` does not occur to the right of a `⨟`.
    ExactConditional,
    /// Witnesses found by enumerating decompositions, for any instance.
    BoundedStructural,
    /// Witnesses provided by the caller, see [`satisfies_with_witness`].
    WitnessSupplied,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatStrategy {
    pub mode: SatMode,
    /// Maximum number of decomposition steps.
    pub budget: u64,
}

impl SatStrategy {
    pub fn exact() -> Self {
        SatStrategy { mode: SatMode::ExactConditional, budget: DEFAULT_BUDGET }
    }

    pub fn bounded() -> Self {
        SatStrategy { mode: SatMode::BoundedStructural, budget: DEFAULT_BUDGET }
    }

    /// The exact mode where the instance supports it, the bounded one
    /// otherwise.
    pub fn for_instance(m: &impl Markov) -> Self {
        let c = m.capabilities();
        if c.has_conditionals && c.del_cancellative {
            Self::exact()
        } else {
            Self::bounded()
        }
    }
}

/// `k ⊨ ⟨S ▹ T⟩`: some subkernel of `k` has domain `S` and a codomain
/// containing `T`.
pub fn sat_atomic<M: Decompose + SubkernelDecision>(m: &M, k: &Kernel<M>, s: &VarSet, t: &VarSet) -> Result<bool> {
    let mut search = Search { m, steps: 0, budget: DEFAULT_BUDGET };
    let mask = m.full_mask(k)?;
    search.atom(k, &mask, s, t)
}

pub fn satisfies<M: Decompose + SubkernelDecision>(m: &M, k: &Kernel<M>, p: &Formula, strategy: &SatStrategy) -> Result<bool> {
    match strategy.mode {
        SatMode::WitnessSupplied => {
            return Err(Error::Unsupported("witness-supplied satisfaction needs a witness".into()));
        }
        SatMode::ExactConditional => {
            let c = m.capabilities();
            if !(c.has_conditionals && c.del_cancellative) {
                return Err(Error::Unsupported(format!("{} has no exact conditionals", m.name())));
            }
            if and_after_fatsemi(p, false) {
                return Err(Error::Unsupported("`&` to the right of `;` is outside the exact fragment".into()));
            }
        }
        SatMode::BoundedStructural => {}
    }
    let mut search = Search { m, steps: 0, budget: strategy.budget };
    let mask = m.full_mask(k)?;
    search.sat(k, &mask, p)
}

fn and_after_fatsemi(p: &Formula, right: bool) -> bool {
    match p {
        Formula::Top | Formula::Emp | Formula::Atom(..) => false,
        Formula::And(a, b) => right || and_after_fatsemi(a, right) || and_after_fatsemi(b, right),
        Formula::Star(a, b) => and_after_fatsemi(a, right) || and_after_fatsemi(b, right),
        Formula::Fatsemi(a, b) => and_after_fatsemi(a, right) || and_after_fatsemi(b, true),
    }
}

struct Search<'a, M> {
    m: &'a M,
    steps: u64,
    budget: u64,
}

impl<M: Decompose + SubkernelDecision> Search<'_, M> {
    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::Budget(format!("satisfaction search exceeded {} steps", self.budget)));
        }
        Ok(())
    }

    fn sat(&mut self, k: &Kernel<M>, mask: &M::Mask, p: &Formula) -> Result<bool> {
        match p {
            Formula::Top | Formula::Emp => Ok(true),
            Formula::Atom(s, t) => self.atom(k, mask, s, t),
            Formula::And(a, b) => {
                if !self.m.is_full(mask) {
                    return Err(Error::Unsupported("`&` on a partly determined kernel".into()));
                }
                Ok(self.sat(k, mask, a)? && self.sat(k, mask, b)?)
            }
            Formula::Star(a, b) => self.star(k, mask, a, b),
            Formula::Fatsemi(a, b) => {
                for extra in k.cod().difference(k.dom()).subsets() {
                    self.tick()?;
                    let mid = k.dom().union(&extra);
                    let Some(((b1, m1), (b2, m2))) = self.m.split_seq(k, mask, &mid)? else { continue };
                    if self.sat(&b1, &m1, a)? && self.sat(&b2, &m2, b)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Subkernel of type `s → c`, if one exists.
    fn piece(&mut self, k: &Kernel<M>, mask: &M::Mask, s: &VarSet, c: &VarSet) -> Result<Option<(Kernel<M>, M::Mask)>> {
        if !restrict_type_ok(k, s, c) {
            return Ok(None);
        }
        self.tick()?;
        self.m.restrict(k, mask, s, c)
    }

    fn atom(&mut self, k: &Kernel<M>, mask: &M::Mask, s: &VarSet, t: &VarSet) -> Result<bool> {
        let need = s.union(t);
        if !s.is_subset(k.dom()) || !need.is_subset(k.cod()) || need.intersection(k.dom()) != *s {
            return Ok(false);
        }
        let extras = if self.m.minimal_witnesses() {
            vec![VarSet::new()]
        } else {
            k.cod().difference(k.dom()).difference(&need).subsets()
        };
        for e in extras {
            let c = need.union(&e);
            let Some((b, _)) = self.piece(k, mask, s, &c)? else { continue };
            if !self.m.is_full(mask) || self.m.decide_subkernel(&b, k)?.is_witness() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Codomains worth trying for a `∗` operand.
    fn candidates(&self, k: &Kernel<M>, p: &Formula) -> Vec<VarSet> {
        match p {
            Formula::Top | Formula::Emp => vec![VarSet::new()],
            Formula::Atom(s, t) if self.m.minimal_witnesses() => vec![s.union(t)],
            Formula::Atom(s, t) => {
                let need = s.union(t);
                k.cod().difference(&need).subsets().into_iter().map(|e| need.union(&e)).collect()
            }
            _ => k.cod().subsets(),
        }
    }

    fn star(&mut self, k: &Kernel<M>, mask: &M::Mask, a: &Formula, b: &Formula) -> Result<bool> {
        let x = k.dom();
        let (left, right) = (self.candidates(k, a), self.candidates(k, b));
        for c1 in &left {
            for c2 in &right {
                let (d1, d2) = (c1.intersection(x), c2.intersection(x));
                if c1.intersection(c2) != d1.intersection(&d2) {
                    continue;
                }
                let (c, d) = (c1.union(c2), d1.union(&d2));
                let Some((whole, mw)) = self.piece(k, mask, &d, &c)? else { continue };
                let Some((p1, m1)) = self.piece(&whole, &mw, &d1, c1)? else { continue };
                let Some((p2, m2)) = self.piece(&whole, &mw, &d2, c2)? else { continue };
                if !self.m.equal_on(&par(self.m, &p1, &p2)?, &whole, &mw) {
                    continue;
                }
                if self.m.is_full(mask) && !self.m.decide_subkernel(&whole, k)?.is_witness() {
                    continue;
                }
                if self.sat(&p1, &m1, a)? && self.sat(&p2, &m2, b)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }
}

/// Evidence for `k ⊨ p`, mirroring the shape of `p`.
pub enum Witness<M: Markov> {
    /// For `⊤` and `I`.
    Leaf,
    /// A subkernel `sub ⊑ k` together with the continuation showing it.
    Atom { sub: Kernel<M>, ext: SubkernelWitness<M> },
    /// `b1 ⊕ b2 ⊑ k`, shown by `ext`.
    Star { b1: Kernel<M>, b2: Kernel<M>, ext: SubkernelWitness<M>, w1: Box<Witness<M>>, w2: Box<Witness<M>> },
    /// `b1 ⊙ b2 = k`.
    Fatsemi { b1: Kernel<M>, b2: Kernel<M>, w1: Box<Witness<M>>, w2: Box<Witness<M>> },
    And(Box<Witness<M>>, Box<Witness<M>>),
}

/// Checks a supplied witness by replaying it; needs no decision procedure.
pub fn satisfies_with_witness<M: Markov>(m: &M, k: &Kernel<M>, p: &Formula, w: &Witness<M>) -> Result<bool> {
    Ok(match (p, w) {
        (Formula::Top | Formula::Emp, Witness::Leaf) => true,
        (Formula::Atom(s, t), Witness::Atom { sub, ext }) => {
            sub.dom() == s && t.is_subset(sub.cod()) && verify_witness(m, sub, k, ext)
        }
        (Formula::And(a, b), Witness::And(w1, w2)) => {
            satisfies_with_witness(m, k, a, w1)? && satisfies_with_witness(m, k, b, w2)?
        }
        (Formula::Star(a, b), Witness::Star { b1, b2, ext, w1, w2 }) => {
            let Ok(whole) = par(m, b1, b2) else { return Ok(false) };
            verify_witness(m, &whole, k, ext)
                && satisfies_with_witness(m, b1, a, w1)?
                && satisfies_with_witness(m, b2, b, w2)?
        }
        (Formula::Fatsemi(a, b), Witness::Fatsemi { b1, b2, w1, w2 }) => {
            let Ok(whole) = seq(m, b1, b2) else { return Ok(false) };
            kernel_equal(m, &whole, k) && satisfies_with_witness(m, b1, a, w1)? && satisfies_with_witness(m, b2, b, w2)?
        }
        _ => return Err(Error::ShapeError(format!("witness does not match the shape of `{p}`"))),
    })
}
