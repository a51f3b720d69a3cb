//! The Markov-category contract shared by every instance.
//!
//! Objects are [`VarList`]s interpreted through an instance-specific
//! assignment; the monoidal structure is strict list concatenation.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::varspace::{Rewiring, VarList, VarName};

/// A morphism together with its endpoints.
pub trait Morphism: Clone + fmt::Debug + Send + Sync {
    fn dom(&self) -> &VarList;
    fn cod(&self) -> &VarList;
}

/// What an instance can promise to the decision procedures built on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Capabilities {
    pub has_conditionals: bool,
    pub del_cancellative: bool,
    pub equality_exact: bool,
    pub tolerance: f64,
}

/// A variable assignment: a default descriptor plus per-variable overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T> {
    pub default: Option<T>,
    pub overrides: BTreeMap<VarName, T>,
}

impl<T> Assignment<T> {
    pub fn uniform(t: T) -> Self {
        Assignment { default: Some(t), overrides: BTreeMap::new() }
    }

    pub fn explicit(overrides: BTreeMap<VarName, T>) -> Self {
        Assignment { default: None, overrides }
    }

    pub fn with(mut self, v: VarName, t: T) -> Self {
        self.overrides.insert(v, t);
        self
    }

    pub fn get(&self, v: &VarName) -> Result<&T> {
        self.overrides.get(v).or(self.default.as_ref()).ok_or_else(|| Error::UnknownVariable(v.to_string()))
    }
}

pub trait Markov: Send + Sync {
    type Mor: Morphism;

    fn name(&self) -> &'static str;
    fn capabilities(&self) -> Capabilities;

    fn identity(&self, o: &VarList) -> Result<Self::Mor>;
    /// `g ∘ f`, i.e. first `f` then `g`.
    fn compose(&self, f: &Self::Mor, g: &Self::Mor) -> Result<Self::Mor>;
    fn tensor(&self, f: &Self::Mor, g: &Self::Mor) -> Result<Self::Mor>;
    /// `o → o ++ o`.
    fn copy(&self, o: &VarList) -> Result<Self::Mor>;
    /// `o → []`.
    fn del(&self, o: &VarList) -> Result<Self::Mor>;
    /// `a ++ b → b ++ a`.
    fn swap(&self, a: &VarList, b: &VarList) -> Result<Self::Mor>;
    fn equal(&self, f: &Self::Mor, g: &Self::Mor) -> bool;

    /// The deterministic wiring `src → dst` with `dst[j] = src[picks[j]]`;
    /// positions may be dropped or repeated. Instances override this with a
    /// direct construction; the default assembles it from the primitives.
    fn structural(&self, src: &VarList, picks: &[usize]) -> Result<Self::Mor> {
        structural_from_primitives(self, src, picks)
    }

    fn rewire(&self, r: &Rewiring) -> Result<Self::Mor> {
        self.structural(&r.src, &r.picks())
    }

    /// Wiring from a duplicate-free `src` onto `dst`, matching by name.
    fn project(&self, src: &VarList, dst: &VarList) -> Result<Self::Mor> {
        self.structural(src, &src.picks_for(dst)?)
    }

    fn compose_all(&self, parts: &[&Self::Mor]) -> Result<Self::Mor> {
        let (first, rest) = parts.split_first().ok_or_else(|| Error::InvalidKernel("empty composite".into()))?;
        rest.iter().try_fold((*first).clone(), |acc, m| self.compose(&acc, m))
    }
}

/// Instances with conditionals in the parametric form: every `f : A → X ++ Y`
/// factors through its marginal `A → X` and a conditional `A ++ X → Y`.
pub trait Conditionals: Markov {
    /// Splits the codomain after `split` positions.
    fn conditional(&self, f: &Self::Mor, split: usize) -> Result<(Self::Mor, Self::Mor)>;
    /// Some state `[] → o`.
    fn point(&self, o: &VarList) -> Result<Self::Mor>;
}

pub fn check_endpoints(left: &VarList, right: &VarList) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::EndpointMismatch { left: left.names(), right: right.names() })
    }
}

fn repeated(v: &VarName, n: usize) -> VarList {
    VarList::new(vec![v.clone(); n])
}

/// Builds the wiring of [`Markov::structural`] from identities, copies,
/// deletions and adjacent swaps only.
pub fn structural_from_primitives<M: Markov + ?Sized>(m: &M, src: &VarList, picks: &[usize]) -> Result<M::Mor> {
    let mut counts = vec![0usize; src.len()];
    for &p in picks {
        *counts.get_mut(p).ok_or_else(|| Error::InvalidKernel(format!("pick {p} out of range")))? += 1;
    }
    let mut acc = m.identity(&VarList::empty())?;
    for (v, &c) in src.iter().zip(&counts) {
        let one = repeated(v, 1);
        let piece = match c {
            0 => m.del(&one)?,
            1 => m.identity(&one)?,
            _ => {
                let mut p = m.copy(&one)?;
                for k in 2..c {
                    let step = m.tensor(&m.copy(&one)?, &m.identity(&repeated(v, k - 1))?)?;
                    p = m.compose(&p, &step)?;
                }
                p
            }
        };
        acc = m.tensor(&acc, &piece)?;
    }
    // position in the grouped list for each target, then bubble it into place
    let mut offsets = Vec::with_capacity(src.len());
    let mut total = 0;
    for &c in &counts {
        offsets.push(total);
        total += c;
    }
    let mut used = vec![0usize; src.len()];
    let mut target_of = vec![0usize; total];
    for (j, &p) in picks.iter().enumerate() {
        target_of[offsets[p] + used[p]] = j;
        used[p] += 1;
    }
    let mut current: Vec<VarName> = Vec::with_capacity(total);
    for (v, &c) in src.iter().zip(&counts) {
        current.extend(std::iter::repeat(v.clone()).take(c));
    }
    for pass in 0..total {
        for i in 0..total.saturating_sub(1 + pass) {
            if target_of[i] > target_of[i + 1] {
                let pre = VarList::new(current[..i].to_vec());
                let post = VarList::new(current[i + 2..].to_vec());
                let sw = m.swap(&VarList::new(vec![current[i].clone()]), &VarList::new(vec![current[i + 1].clone()]))?;
                let step = m.tensor(&m.tensor(&m.identity(&pre)?, &sw)?, &m.identity(&post)?)?;
                acc = m.compose(&acc, &step)?;
                target_of.swap(i, i + 1);
                current.swap(i, i + 1);
            }
        }
    }
    Ok(acc)
}

/// Rebuilds `A → X ++ Y` from a marginal `A → X` and a conditional `A ++ X → Y`.
pub fn reassemble<M: Markov + ?Sized>(m: &M, marginal: &M::Mor, cond: &M::Mor) -> Result<M::Mor> {
    let a = marginal.dom().clone();
    let x = marginal.cod().clone();
    let ax = a.concat(&x);
    let na = a.len();
    let nx = x.len();
    let first = m.compose(&m.copy(&a)?, &m.tensor(&m.identity(&a)?, marginal)?)?;
    let picks: Vec<usize> = (0..na + nx).chain(na..na + nx).collect();
    let dup = m.structural(&ax, &picks)?;
    let apply = m.tensor(cond, &m.identity(&x)?)?;
    let y = cond.cod().clone();
    let ny = y.len();
    let yx = y.concat(&x);
    let order: Vec<usize> = (ny..ny + nx).chain(0..ny).collect();
    let fix = m.structural(&yx, &order)?;
    m.compose_all(&[&first, &dup, &apply, &fix])
}

/// Executable versions of the Markov-category axioms, shared by the
/// per-instance test suites.
pub mod laws {
    use super::*;

    pub fn coassociative<M: Markov>(m: &M, o: &VarList) -> Result<bool> {
        let c = m.copy(o)?;
        let id = m.identity(o)?;
        let left = m.compose(&c, &m.tensor(&c, &id)?)?;
        let right = m.compose(&c, &m.tensor(&id, &c)?)?;
        Ok(m.equal(&left, &right))
    }

    pub fn counital<M: Markov>(m: &M, o: &VarList) -> Result<bool> {
        let c = m.copy(o)?;
        let id = m.identity(o)?;
        let d = m.del(o)?;
        let left = m.compose(&c, &m.tensor(&d, &id)?)?;
        let right = m.compose(&c, &m.tensor(&id, &d)?)?;
        Ok(m.equal(&left, &id) && m.equal(&right, &id))
    }

    pub fn cocommutative<M: Markov>(m: &M, o: &VarList) -> Result<bool> {
        let c = m.copy(o)?;
        Ok(m.equal(&m.compose(&c, &m.swap(o, o)?)?, &c))
    }

    /// Copy and delete of `a ++ b` agree with the componentwise maps.
    pub fn tensor_compatible<M: Markov>(m: &M, a: &VarList, b: &VarList) -> Result<bool> {
        let ab = a.concat(b);
        let split = m.tensor(&m.copy(a)?, &m.copy(b)?)?;
        let middle = m.tensor(&m.tensor(&m.identity(a)?, &m.swap(a, b)?)?, &m.identity(b)?)?;
        let copy_ok = m.equal(&m.copy(&ab)?, &m.compose(&split, &middle)?);
        let del_ok = m.equal(&m.del(&ab)?, &m.tensor(&m.del(a)?, &m.del(b)?)?);
        Ok(copy_ok && del_ok)
    }

    /// `f ; del = del`.
    pub fn del_natural<M: Markov>(m: &M, f: &M::Mor) -> Result<bool> {
        Ok(m.equal(&m.compose(f, &m.del(f.cod())?)?, &m.del(f.dom())?))
    }

    /// `(f1 ; g1) ⊗ (f2 ; g2) = (f1 ⊗ f2) ; (g1 ⊗ g2)`.
    pub fn interchange<M: Markov>(m: &M, f1: &M::Mor, g1: &M::Mor, f2: &M::Mor, g2: &M::Mor) -> Result<bool> {
        let left = m.tensor(&m.compose(f1, g1)?, &m.compose(f2, g2)?)?;
        let right = m.compose(&m.tensor(f1, f2)?, &m.tensor(g1, g2)?)?;
        Ok(m.equal(&left, &right))
    }

    pub fn unit_laws<M: Markov>(m: &M, f: &M::Mor) -> Result<bool> {
        let l = m.compose(&m.identity(f.dom())?, f)?;
        let r = m.compose(f, &m.identity(f.cod())?)?;
        let t = m.tensor(f, &m.identity(&VarList::empty())?)?;
        Ok(m.equal(&l, f) && m.equal(&r, f) && m.equal(&t, f))
    }

    pub fn swap_involutive<M: Markov>(m: &M, a: &VarList, b: &VarList) -> Result<bool> {
        let twice = m.compose(&m.swap(a, b)?, &m.swap(b, a)?)?;
        Ok(m.equal(&twice, &m.identity(&a.concat(b))?))
    }

    /// The instance's direct wiring agrees with the primitive construction.
    pub fn structural_agrees<M: Markov>(m: &M, src: &VarList, picks: &[usize]) -> Result<bool> {
        Ok(m.equal(&m.structural(src, picks)?, &structural_from_primitives(m, src, picks)?))
    }

    /// Marginal agrees with projection and the pieces reassemble to `f`.
    pub fn conditional_reassembles<M: Conditionals>(m: &M, f: &M::Mor, split: usize) -> Result<bool> {
        let (marg, cond) = m.conditional(f, split)?;
        let cod = f.cod();
        let picks: Vec<usize> = (0..split).collect();
        let projected = m.compose(f, &m.structural(cod, &picks)?)?;
        Ok(m.equal(&marg, &projected) && m.equal(&reassemble(m, &marg, &cond)?, f))
    }
}
