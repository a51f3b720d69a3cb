//! Random nontrivial parts, for property tests and the frame suite.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::finrel::{FinRel, RelTable};
use crate::finstoch::{q, Dist, FinStoch, StochTable};
use crate::gauss::{Gauss, GaussMap};
use crate::markov::{Assignment, Markov};
use crate::varspace::{VarList, VarName, VarSet};

use super::Kernel;

pub type TrialRng = ChaCha8Rng;

pub trait RandomCore: Markov + Sized {
    fn random_core(&self, rng: &mut TrialRng, dom: &VarList, cod: &VarList) -> Result<Self::Mor>;
}

/// A random kernel `dom → cod`.
pub fn random_kernel<M: RandomCore>(m: &M, rng: &mut TrialRng, dom: &VarSet, cod: &VarSet) -> Result<Kernel<M>> {
    let core = m.random_core(rng, &dom.to_list(), &cod.difference(dom).to_list())?;
    Kernel::new(dom.clone(), cod.clone(), core)
}

/// Each element kept with probability `p`.
pub fn random_subset(rng: &mut TrialRng, s: &VarSet, p: f64) -> VarSet {
    s.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

impl RandomCore for FinStoch {
    fn random_core(&self, rng: &mut TrialRng, dom: &VarList, cod: &VarList) -> Result<StochTable> {
        let n = self.radix(cod)?.size();
        let codes: Vec<usize> = (0..n).collect();
        let rows = (0..self.radix(dom)?.size())
            .map(|_| {
                let k = rng.gen_range(1..=n.min(3));
                let picked: Vec<usize> = codes.choose_multiple(rng, k).copied().collect();
                let weights: Vec<i64> = picked.iter().map(|_| rng.gen_range(1..=4)).collect();
                let total: i64 = weights.iter().sum();
                Dist::new(picked.into_iter().zip(weights).map(|(c, w)| (c, q(w, total))))
            })
            .collect::<Result<Vec<_>>>()?;
        self.table(dom, cod, rows)
    }
}

impl RandomCore for FinRel {
    fn random_core(&self, rng: &mut TrialRng, dom: &VarList, cod: &VarList) -> Result<RelTable> {
        let n = self.radix(cod)?.size();
        let rows = (0..self.radix(dom)?.size())
            .map(|_| {
                let mut s: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
                if s.is_empty() {
                    s.insert(rng.gen_range(0..n));
                }
                s
            })
            .collect();
        self.table(dom, cod, rows)
    }
}

impl RandomCore for Gauss {
    fn random_core(&self, rng: &mut TrialRng, dom: &VarList, cod: &VarList) -> Result<GaussMap> {
        let (n, k) = (self.dim(dom)?, self.dim(cod)?);
        let m = DMatrix::from_fn(k, n, |_, _| rng.gen_range(-2..=2) as f64);
        let r = rng.gen_range(0..=k);
        let a = DMatrix::from_fn(k, r, |_, _| rng.gen_range(-1..=1) as f64);
        let mean = DVector::from_fn(k, |_, _| rng.gen_range(-2..=2) as f64);
        self.map(dom, cod, m, &a * a.transpose(), mean)
    }
}

/// FinStoch over `vars` with each alphabet of size 2 or 3.
pub fn random_finstoch(rng: &mut TrialRng, vars: &[VarName]) -> FinStoch {
    FinStoch::new(Assignment::explicit(
        vars.iter().map(|v| (v.clone(), crate::finstoch::Alphabet::range(rng.gen_range(2..=3)))).collect(),
    ))
}

/// FinRel over `vars` with each alphabet of size 2 or 3.
pub fn random_finrel(rng: &mut TrialRng, vars: &[VarName]) -> FinRel {
    FinRel::new(Assignment::explicit(
        vars.iter().map(|v| (v.clone(), crate::finstoch::Alphabet::range(rng.gen_range(2..=3)))).collect(),
    ))
}

/// Gauss over `vars` with each dimension 1 or 2.
pub fn random_gauss(rng: &mut TrialRng, vars: &[VarName]) -> Gauss {
    Gauss::new(Assignment::explicit(vars.iter().map(|v| (v.clone(), rng.gen_range(1..=2))).collect()))
}
