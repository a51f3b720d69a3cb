//! Decomposition of kernels into the pieces that the satisfaction relation
//! quantifies over, possibly for kernels that are only partly determined.
//!
//! A *mask* marks the inputs on which a kernel is pinned down; elsewhere it
//! may be completed freely. Kernels split off sequentially are undetermined
//! outside the support of the first factor, which is what masks record.

use std::fmt;

use crate::error::Result;
use crate::finstoch::{Dist, FinStoch};
use crate::gauss::Gauss;
use crate::markov::{Conditionals, Markov};
use crate::varspace::{VarList, VarSet};

use super::{embed, from_full, marginal, Kernel};

pub trait Decompose: Markov + Sized {
    type Mask: Clone + fmt::Debug + Send + Sync;

    /// Whether a subkernel of a given type exists as soon as any larger one
    /// does, so that minimal codomains suffice in witness searches.
    fn minimal_witnesses(&self) -> bool;
    fn full_mask(&self, k: &Kernel<Self>) -> Result<Self::Mask>;
    fn is_full(&self, mask: &Self::Mask) -> bool;
    /// The subkernel of `k` of type `dom → cod`, agreeing with `k` where the
    /// mask pins it, or `None` if no completion of `k` has one. Callers
    /// guarantee `dom ⊆ dom k`, `cod ∩ dom k = dom` and `cod ⊆ cod k`.
    fn restrict(&self, k: &Kernel<Self>, mask: &Self::Mask, dom: &VarSet, cod: &VarSet)
        -> Result<Option<(Kernel<Self>, Self::Mask)>>;
    /// Factors `k = b1 ⊙ b2` through `mid` (`dom k ⊆ mid ⊆ cod k`).
    #[allow(clippy::type_complexity)]
    fn split_seq(&self, k: &Kernel<Self>, mask: &Self::Mask, mid: &VarSet)
        -> Result<Option<((Kernel<Self>, Self::Mask), (Kernel<Self>, Self::Mask))>>;
    /// Equality on the pinned inputs.
    fn equal_on(&self, f: &Kernel<Self>, g: &Kernel<Self>, mask: &Self::Mask) -> bool;
}

/// Whether `dom → cod` is a possible subkernel type below `k`.
pub fn restrict_type_ok<M: Markov>(k: &Kernel<M>, dom: &VarSet, cod: &VarSet) -> bool {
    dom.is_subset(k.dom()) && cod.intersection(k.dom()) == *dom && cod.is_subset(k.cod())
}

/// Restriction for a fully determined kernel in an instance with
/// conditionals: complete the missing inputs by a point and check that the
/// result does not depend on the choice.
pub fn restrict_total<M: Conditionals>(m: &M, k: &Kernel<M>, dom: &VarSet, cod: &VarSet) -> Result<Option<Kernel<M>>> {
    let (xl, dl) = (k.dom().to_list(), dom.to_list());
    let rest = k.dom().difference(dom).to_list();
    let onto = m.compose(&embed(m, k)?, &m.project(&k.cod().to_list(), &cod.to_list())?)?;
    let completed = m.compose_all(&[
        &m.tensor(&m.identity(&dl)?, &m.point(&rest)?)?,
        &m.project(&dl.concat(&rest), &xl)?,
        &onto,
    ])?;
    if !m.equal(&m.compose(&m.project(&xl, &dl)?, &completed)?, &onto) {
        return Ok(None);
    }
    from_full(m, &completed).map(Some)
}

/// Sequential factorisation through a conditional, for fully determined
/// kernels.
pub fn split_total<M: Conditionals>(m: &M, k: &Kernel<M>, mid: &VarSet) -> Result<(Kernel<M>, Kernel<M>)> {
    let b1 = marginal(m, k, mid)?;
    let (xl, ml) = (k.dom().to_list(), mid.to_list());
    let first = mid.difference(k.dom()).to_list();
    let second = k.cod().difference(mid).to_list();
    let core = m.compose(k.core(), &m.project(&k.fresh().to_list(), &first.concat(&second))?)?;
    let (_, cond) = m.conditional(&core, first.len())?;
    let b2core = m.compose(&m.project(&ml, &xl.concat(&first))?, &cond)?;
    Ok((b1, Kernel::new(mid.clone(), k.cod().clone(), b2core)?))
}

impl Decompose for Gauss {
    type Mask = ();

    fn minimal_witnesses(&self) -> bool {
        true
    }

    fn full_mask(&self, _: &Kernel<Self>) -> Result<()> {
        Ok(())
    }

    fn is_full(&self, _: &()) -> bool {
        true
    }

    fn restrict(&self, k: &Kernel<Self>, _: &(), dom: &VarSet, cod: &VarSet) -> Result<Option<(Kernel<Self>, ())>> {
        Ok(restrict_total(self, k, dom, cod)?.map(|b| (b, ())))
    }

    fn split_seq(&self, k: &Kernel<Self>, _: &(), mid: &VarSet) -> Result<Option<((Kernel<Self>, ()), (Kernel<Self>, ()))>> {
        let (b1, b2) = split_total(self, k, mid)?;
        Ok(Some(((b1, ()), (b2, ()))))
    }

    fn equal_on(&self, f: &Kernel<Self>, g: &Kernel<Self>, _: &()) -> bool {
        super::kernel_equal(self, f, g)
    }
}

/// Positions in `from` of the variables of `to`.
fn positions(from: &VarList, to: &VarList) -> Vec<usize> {
    to.iter().map(|v| from.position(v).expect("variable present")).collect()
}

impl Decompose for FinStoch {
    /// One flag per input code of the kernel.
    type Mask = Vec<bool>;

    fn minimal_witnesses(&self) -> bool {
        true
    }

    fn full_mask(&self, k: &Kernel<Self>) -> Result<Vec<bool>> {
        Ok(vec![true; self.radix(&k.dom().to_list())?.size()])
    }

    fn is_full(&self, mask: &Vec<bool>) -> bool {
        mask.iter().all(|&b| b)
    }

    fn restrict(
        &self,
        k: &Kernel<Self>,
        mask: &Vec<bool>,
        dom: &VarSet,
        cod: &VarSet,
    ) -> Result<Option<(Kernel<Self>, Vec<bool>)>> {
        let (xl, dl, cl, zl) = (k.dom().to_list(), dom.to_list(), cod.to_list(), k.cod().to_list());
        let onto = self.compose(&embed(self, k)?, &self.project(&zl, &cl)?)?;
        let (xr, dr, cr) = (self.radix(&xl)?, self.radix(&dl)?, self.radix(&cl)?);
        let dpos = positions(&xl, &dl);
        let mut rows: Vec<Option<Dist<usize>>> = vec![None; dr.size()];
        for (x, pinned) in mask.iter().enumerate() {
            if !pinned {
                continue;
            }
            let xt = xr.decode(x);
            let d = dr.encode(&dpos.iter().map(|&p| xt[p]).collect::<Vec<_>>());
            let row = &onto.rows()[x];
            match &rows[d] {
                None => rows[d] = Some(row.clone()),
                Some(r) if r != row => return Ok(None),
                Some(_) => {}
            }
        }
        let new_mask: Vec<bool> = rows.iter().map(Option::is_some).collect();
        let full_rows = rows
            .into_iter()
            .enumerate()
            .map(|(d, r)| {
                r.unwrap_or_else(|| {
                    let dt = dr.decode(d);
                    let ct: Vec<usize> = cl.iter().map(|v| dl.position(v).map_or(0, |i| dt[i])).collect();
                    Dist::dirac(cr.encode(&ct))
                })
            })
            .collect();
        let table = self.table(&dl, &cl, full_rows)?;
        Ok(Some((from_full(self, &table)?, new_mask)))
    }

    fn split_seq(
        &self,
        k: &Kernel<Self>,
        mask: &Vec<bool>,
        mid: &VarSet,
    ) -> Result<Option<((Kernel<Self>, Vec<bool>), (Kernel<Self>, Vec<bool>))>> {
        let b1 = marginal(self, k, mid)?;
        let (xl, ml, zl) = (k.dom().to_list(), mid.to_list(), k.cod().to_list());
        let full = embed(self, k)?;
        let first = embed(self, &b1)?;
        let (mr, zr) = (self.radix(&ml)?, self.radix(&zl)?);
        let xr = self.radix(&xl)?;
        let xin_m = positions(&ml, &xl);
        let min_z = positions(&zl, &ml);
        let z_to_m: Vec<usize> = (0..zr.size())
            .map(|z| {
                let zt = zr.decode(z);
                mr.encode(&min_z.iter().map(|&p| zt[p]).collect::<Vec<_>>())
            })
            .collect();
        let mut rows = Vec::with_capacity(mr.size());
        let mut mask2 = Vec::with_capacity(mr.size());
        for l in 0..mr.size() {
            let lt = mr.decode(l);
            let x = xr.encode(&xin_m.iter().map(|&p| lt[p]).collect::<Vec<_>>());
            let pinned = mask[x] && first.rows()[x].get(&l) > num::Zero::zero();
            let row = if pinned { full.rows()[x].condition(|z| z_to_m[*z] == l) } else { None };
            mask2.push(row.is_some());
            rows.push(row.unwrap_or_else(|| {
                let zt: Vec<usize> = zl.iter().map(|v| ml.position(v).map_or(0, |i| lt[i])).collect();
                Dist::dirac(zr.encode(&zt))
            }));
        }
        let b2 = from_full(self, &self.table(&ml, &zl, rows)?)?;
        Ok(Some(((b1, mask.clone()), (b2, mask2))))
    }

    fn equal_on(&self, f: &Kernel<Self>, g: &Kernel<Self>, mask: &Vec<bool>) -> bool {
        f.dom() == g.dom()
            && f.cod() == g.cod()
            && f.core().rows().iter().zip(g.core().rows()).zip(mask).all(|((a, b), &p)| !p || a == b)
    }
}
