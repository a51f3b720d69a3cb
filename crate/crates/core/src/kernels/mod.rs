//! Input-preserving kernels over any [`Markov`] instance, with sequential and
//! parallel composition and the subkernel order.
//!
//! A kernel `X → Y` (with `X ⊆ Y`) is stored as its nontrivial part, a
//! morphism from the canonical list of `X` to the canonical list of `Y ∖ X`.
//! The full morphism copies the inputs through:
//!
//! ```text
//! embed(k) = copy_X ; (id_X ⊗ core) ; rewire to ⌞Y⌟
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::markov::{Markov, Morphism};
use crate::varspace::{VarList, VarSet};

pub mod decompose;
pub mod frames;
pub mod random;
pub mod subkernel;

pub use decompose::Decompose;
pub use frames::{frame_check, FrameCondition, FrameReport, Outcome};
pub use random::RandomCore;
pub use subkernel::{subkernel, Refutation, SubkernelDecision, SubkernelOutcome, SubkernelWitness};

pub struct Kernel<M: Markov + ?Sized> {
    dom: VarSet,
    cod: VarSet,
    core: M::Mor,
}

impl<M: Markov + ?Sized> Clone for Kernel<M> {
    fn clone(&self) -> Self {
        Kernel { dom: self.dom.clone(), cod: self.cod.clone(), core: self.core.clone() }
    }
}

impl<M: Markov + ?Sized> fmt::Debug for Kernel<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel {} -> {} {:?}", self.dom, self.cod, self.core)
    }
}

impl<M: Markov + ?Sized> Kernel<M> {
    /// Wraps a nontrivial part; its endpoints must be `⌞dom⌟ → ⌞cod ∖ dom⌟`.
    pub fn new(dom: VarSet, cod: VarSet, core: M::Mor) -> Result<Self> {
        if !dom.is_subset(&cod) {
            return Err(Error::InvalidKernel(format!("domain {dom} is not inside codomain {cod}")));
        }
        if core.dom() != &dom.to_list() || core.cod() != &cod.difference(&dom).to_list() {
            return Err(Error::InvalidKernel(format!(
                "core {} -> {} does not match {dom} -> {cod}",
                core.dom(),
                core.cod()
            )));
        }
        Ok(Kernel { dom, cod, core })
    }

    pub fn dom(&self) -> &VarSet {
        &self.dom
    }

    pub fn cod(&self) -> &VarSet {
        &self.cod
    }

    /// The variables the kernel produces.
    pub fn fresh(&self) -> VarSet {
        self.cod.difference(&self.dom)
    }

    pub fn core(&self) -> &M::Mor {
        &self.core
    }

    /// Number of variables mentioned, used to compare counterexample sizes.
    pub fn size(&self) -> usize {
        self.cod.len()
    }
}

/// The full morphism `⌞dom⌟ → ⌞cod⌟`.
pub fn embed<M: Markov + ?Sized>(m: &M, k: &Kernel<M>) -> Result<M::Mor> {
    let x = k.dom.to_list();
    let n = k.fresh().to_list();
    let both = m.compose(&m.copy(&x)?, &m.tensor(&m.identity(&x)?, &k.core)?)?;
    m.compose(&both, &m.project(&x.concat(&n), &k.cod.to_list())?)
}

/// Recovers a kernel from a full morphism between canonical lists, checking
/// that the inputs are preserved.
pub fn from_full<M: Markov + ?Sized>(m: &M, full: &M::Mor) -> Result<Kernel<M>> {
    let (x, y) = (full.dom(), full.cod());
    if !x.is_canonical() || !y.is_canonical() {
        return Err(Error::InvalidKernel("endpoints must be strictly increasing lists".into()));
    }
    let (dom, cod) = (x.to_set(), y.to_set());
    if !dom.is_subset(&cod) {
        return Err(Error::InvalidKernel(format!("domain {dom} is not inside codomain {cod}")));
    }
    let core = m.compose(full, &m.project(y, &cod.difference(&dom).to_list())?)?;
    let k = Kernel::new(dom, cod, core)?;
    if !m.equal(&embed(m, &k)?, full) {
        return Err(Error::InvalidKernel("morphism does not preserve its inputs".into()));
    }
    Ok(k)
}

pub fn identity_kernel<M: Markov + ?Sized>(m: &M, x: &VarSet) -> Result<Kernel<M>> {
    Kernel::new(x.clone(), x.clone(), m.del(&x.to_list())?)
}

pub fn kernel_equal<M: Markov + ?Sized>(m: &M, f: &Kernel<M>, g: &Kernel<M>) -> bool {
    f.dom == g.dom && f.cod == g.cod && m.equal(&f.core, &g.core)
}

/// `f ⊙ g`, defined when `cod f = dom g`.
pub fn seq<M: Markov + ?Sized>(m: &M, f: &Kernel<M>, g: &Kernel<M>) -> Result<Kernel<M>> {
    if f.cod != g.dom {
        return Err(Error::SeqUndefined { cod: f.cod.clone(), dom: g.dom.clone() });
    }
    let full = m.compose(&embed(m, f)?, &embed(m, g)?)?;
    let core = m.compose(&full, &m.project(&g.cod.to_list(), &g.cod.difference(&f.dom).to_list())?)?;
    Kernel::new(f.dom.clone(), g.cod.clone(), core)
}

/// `f ⊕ g`, defined when `dom f ∩ dom g = cod f ∩ cod g`.
pub fn par<M: Markov + ?Sized>(m: &M, f: &Kernel<M>, g: &Kernel<M>) -> Result<Kernel<M>> {
    let doms = f.dom.intersection(&g.dom);
    let cods = f.cod.intersection(&g.cod);
    if doms != cods {
        return Err(Error::ParUndefined { doms, cods });
    }
    let dom = f.dom.union(&g.dom);
    let cod = f.cod.union(&g.cod);
    let (x, u) = (f.dom.to_list(), g.dom.to_list());
    let fan = m.project(&dom.to_list(), &x.concat(&u))?;
    let body = m.tensor(&f.core, &g.core)?;
    let out = f.fresh().to_list().concat(&g.fresh().to_list());
    let order = m.project(&out, &cod.difference(&dom).to_list())?;
    Kernel::new(dom, cod, m.compose_all(&[&fan, &body, &order])?)
}

/// The kernel `dom k → keep` forgetting the other outputs (`dom k ⊆ keep ⊆ cod k`).
pub fn marginal<M: Markov + ?Sized>(m: &M, k: &Kernel<M>, keep: &VarSet) -> Result<Kernel<M>> {
    if !k.dom.is_subset(keep) || !keep.is_subset(&k.cod) {
        return Err(Error::NotASubset { sub: keep.clone(), sup: k.cod.clone() });
    }
    let proj = m.project(&k.fresh().to_list(), &keep.difference(&k.dom).to_list())?;
    Kernel::new(k.dom.clone(), keep.clone(), m.compose(&k.core, &proj)?)
}

/// A state `[] → cod` seen as a kernel from the empty set.
pub fn state_kernel<M: Markov + ?Sized>(m: &M, full: &M::Mor) -> Result<Kernel<M>> {
    if !full.dom().is_empty() {
        return Err(Error::ShapeError("a state has an empty domain".into()));
    }
    from_full(m, full)
}

/// Reorders a morphism with canonical domain onto the canonical list of its
/// codomain's variables.
pub fn canonical_cod<M: Markov + ?Sized>(m: &M, f: &M::Mor) -> Result<M::Mor> {
    let target: VarList = f.cod().to_set().to_list();
    if target.len() != f.cod().len() {
        return Err(Error::DuplicateVariable(format!("{}", f.cod())));
    }
    m.compose(f, &m.project(f.cod(), &target)?)
}

#[cfg(test)]
mod tests;
