//! The subkernel order `f ⊑ g`: `g = (f ⊕ id_U) ⊙ h` for some `U` and `h`.

use std::fmt;

use crate::error::{Error, Result};
use crate::finrel::FinRel;
use crate::finstoch::FinStoch;
use crate::gauss::Gauss;
use crate::markov::{Conditionals, Markov};

use super::{embed, from_full, identity_kernel, kernel_equal, par, seq, Kernel};

pub struct SubkernelWitness<M: Markov + ?Sized> {
    pub extension_vars: crate::varspace::VarSet,
    pub continuation: Kernel<M>,
}

impl<M: Markov + ?Sized> Clone for SubkernelWitness<M> {
    fn clone(&self) -> Self {
        SubkernelWitness { extension_vars: self.extension_vars.clone(), continuation: self.continuation.clone() }
    }
}

impl<M: Markov + ?Sized> fmt::Debug for SubkernelWitness<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SubkernelWitness")
            .field("extension_vars", &self.extension_vars)
            .field("continuation", &self.continuation)
            .finish()
    }
}

/// Which check refuted a subkernel query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Refutation {
    Type(String),
    CompletionDependence,
    MarginalMismatch,
    ReplayFailure,
}

impl fmt::Display for Refutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Refutation::Type(s) => write!(f, "type mismatch: {s}"),
            Refutation::CompletionDependence => f.write_str("completion-dependence"),
            Refutation::MarginalMismatch => f.write_str("marginal-mismatch"),
            Refutation::ReplayFailure => f.write_str("replay-failure"),
        }
    }
}

pub enum SubkernelOutcome<M: Markov + ?Sized> {
    Witness(SubkernelWitness<M>),
    Refuted(Refutation),
}

impl<M: Markov + ?Sized> SubkernelOutcome<M> {
    pub fn is_witness(&self) -> bool {
        matches!(self, SubkernelOutcome::Witness(_))
    }

    pub fn witness(self) -> Option<SubkernelWitness<M>> {
        match self {
            SubkernelOutcome::Witness(w) => Some(w),
            SubkernelOutcome::Refuted(_) => None,
        }
    }
}

impl<M: Markov + ?Sized> fmt::Debug for SubkernelOutcome<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubkernelOutcome::Witness(w) => write!(f, "Witness({w:?})"),
            SubkernelOutcome::Refuted(r) => write!(f, "Refuted({r})"),
        }
    }
}

/// `(f ⊕ id_U) ⊙ h`.
pub fn replay<M: Markov + ?Sized>(m: &M, f: &Kernel<M>, w: &SubkernelWitness<M>) -> Result<Kernel<M>> {
    let lifted = par(m, f, &identity_kernel(m, &w.extension_vars)?)?;
    seq(m, &lifted, &w.continuation)
}

pub fn verify_witness<M: Markov + ?Sized>(m: &M, f: &Kernel<M>, g: &Kernel<M>, w: &SubkernelWitness<M>) -> bool {
    replay(m, f, w).is_ok_and(|r| kernel_equal(m, &r, g))
}

/// Type conditions under which a subkernel `f ⊑ g` can exist at all.
pub fn type_check(fdom: &crate::varspace::VarSet, fcod: &crate::varspace::VarSet, g: &Kernel<impl Markov + ?Sized>) -> Option<Refutation> {
    if !fdom.is_subset(g.dom()) {
        return Some(Refutation::Type(format!("{fdom} is not inside the domain {}", g.dom())));
    }
    if fcod.intersection(g.dom()) != *fdom {
        return Some(Refutation::Type(format!("{fcod} meets the domain {} outside {fdom}", g.dom())));
    }
    if !fcod.is_subset(g.cod()) {
        return Some(Refutation::Type(format!("{fcod} is not inside the codomain {}", g.cod())));
    }
    None
}

/// Decides `f ⊑ g` with `U = dom g ∖ dom f`, building `h` from a conditional
/// of `g`. Sound and complete when conditionals exist and `del` is
/// cancellative.
pub fn subkernel<M: Conditionals + ?Sized>(m: &M, f: &Kernel<M>, g: &Kernel<M>) -> Result<SubkernelOutcome<M>> {
    let caps = m.capabilities();
    if !caps.has_conditionals || !caps.del_cancellative {
        return Err(Error::Unsupported(format!("{} lacks conditionals or cancellative delete", m.name())));
    }
    if let Some(r) = type_check(f.dom(), f.cod(), g) {
        return Ok(SubkernelOutcome::Refuted(r));
    }
    let u = g.dom().difference(f.dom());
    let (xf, yf, xg, zg) = (f.dom().to_list(), f.cod().to_list(), g.dom().to_list(), g.cod().to_list());

    let onto_y = m.compose(&embed(m, g)?, &m.project(&zg, &yf)?)?;
    let completed = m.compose_all(&[
        &m.tensor(&m.identity(&xf)?, &m.point(&u.to_list())?)?,
        &m.project(&xf.concat(&u.to_list()), &xg)?,
        &onto_y,
    ])?;
    let spread = m.compose(&m.project(&xg, &xf)?, &completed)?;
    if !m.equal(&spread, &onto_y) {
        return Ok(SubkernelOutcome::Refuted(Refutation::CompletionDependence));
    }
    let star = from_full(m, &completed)?;
    if !kernel_equal(m, &star, f) {
        return Ok(SubkernelOutcome::Refuted(Refutation::MarginalMismatch));
    }

    let n1 = f.fresh();
    let rest = zg.to_set().difference(&f.cod().union(g.dom()));
    let fresh_g = g.fresh().to_list();
    let split_core = m.compose(g.core(), &m.project(&fresh_g, &n1.to_list().concat(&rest.to_list()))?)?;
    let (_, cond) = m.conditional(&split_core, n1.len())?;
    let hdom = f.cod().union(&u);
    let hcore = m.compose(&m.project(&hdom.to_list(), &xg.concat(&n1.to_list()))?, &cond)?;
    let h = Kernel::new(hdom, g.cod().clone(), hcore)?;
    let w = SubkernelWitness { extension_vars: u, continuation: h };
    if !verify_witness(m, f, g, &w) {
        return Ok(SubkernelOutcome::Refuted(Refutation::ReplayFailure));
    }
    Ok(SubkernelOutcome::Witness(w))
}

/// Per-instance choice of subkernel decision procedure.
pub trait SubkernelDecision: Markov + Sized {
    fn decide_subkernel(&self, f: &Kernel<Self>, g: &Kernel<Self>) -> Result<SubkernelOutcome<Self>>;
}

impl SubkernelDecision for FinStoch {
    fn decide_subkernel(&self, f: &Kernel<Self>, g: &Kernel<Self>) -> Result<SubkernelOutcome<Self>> {
        subkernel(self, f, g)
    }
}

impl SubkernelDecision for Gauss {
    fn decide_subkernel(&self, f: &Kernel<Self>, g: &Kernel<Self>) -> Result<SubkernelOutcome<Self>> {
        subkernel(self, f, g)
    }
}

impl SubkernelDecision for FinRel {
    fn decide_subkernel(&self, _: &Kernel<Self>, _: &Kernel<Self>) -> Result<SubkernelOutcome<Self>> {
        Err(Error::Unsupported("FinRel has no conditionals; the subkernel order is not decided".into()))
    }
}
