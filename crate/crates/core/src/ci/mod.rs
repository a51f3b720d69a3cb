//! Conditional independence: the formula-based notion and the factorization
//! notions it is compared with.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dibi::{satisfies, Formula, SatStrategy};
use crate::error::{Error, Result};
use crate::finrel::{FinRel, FlatRelation};
use crate::finstoch::{FinStoch, Q};
use crate::gauss::{pinv, Gauss};
use crate::kernels::{embed, Decompose, Kernel, SubkernelDecision};
use crate::markov::{Markov, Morphism};
use crate::synvar::search::{decompose_search, SearchFlavor};
use crate::synvar::SynVar;
use crate::varspace::VarSet;

pub mod harness;
#[cfg(test)]
mod tests;

pub use harness::{theorem_harness, HarnessReport};

/// Largest `|U|` accepted by the superset search.
pub const MAX_EXTRA: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    Dibi,
    Plain,
    Markov,
    Superset,
    ExtSuperset,
}

impl Flavor {
    pub const ALL: [Flavor; 5] = [Flavor::Dibi, Flavor::Plain, Flavor::Markov, Flavor::Superset, Flavor::ExtSuperset];

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Dibi => "dibi",
            Flavor::Plain => "plain",
            Flavor::Markov => "markov",
            Flavor::Superset => "superset",
            Flavor::ExtSuperset => "ext-superset",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Flavor::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown flavor `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CIQuery {
    pub w: VarSet,
    pub x: VarSet,
    pub y: VarSet,
    pub u: VarSet,
    pub flavor: Flavor,
}

impl CIQuery {
    pub fn new(w: VarSet, x: VarSet, y: VarSet, u: VarSet, flavor: Flavor) -> Result<Self> {
        let parts = [&w, &x, &y, &u];
        for i in 0..4 {
            for j in i + 1..4 {
                if !parts[i].is_disjoint(parts[j]) {
                    return Err(Error::OverlapViolation { left: parts[i].clone(), right: parts[j].clone() });
                }
            }
        }
        if flavor == Flavor::Plain && !u.is_empty() {
            return Err(Error::ShapeError(format!("plain independence needs no extra variables, got {u}")));
        }
        Ok(CIQuery { w, x, y, u, flavor })
    }

    pub fn all(&self) -> VarSet {
        self.w.union(&self.x).union(&self.y).union(&self.u)
    }

    pub fn with_flavor(&self, flavor: Flavor) -> Result<Self> {
        CIQuery::new(self.w.clone(), self.x.clone(), self.y.clone(), self.u.clone(), flavor)
    }

    /// The same question with `X` and `Y` exchanged.
    pub fn swapped(&self) -> Self {
        CIQuery { x: self.y.clone(), y: self.x.clone(), ..self.clone() }
    }

    fn check<M: Markov>(&self, k: &Kernel<M>) -> Result<()> {
        if !k.dom().is_empty() {
            return Err(Error::ShapeError(format!("expected a state, the kernel has inputs {}", k.dom())));
        }
        if *k.cod() != self.all() {
            return Err(Error::ShapeError(format!("kernel outputs {} differ from W ∪ X ∪ Y ∪ U = {}", k.cod(), self.all())));
        }
        Ok(())
    }

    fn check_plain<M: Markov>(&self, k: &Kernel<M>) -> Result<()> {
        self.check(k)?;
        if !self.u.is_empty() {
            return Err(Error::ShapeError(format!("plain independence needs no extra variables, got {}", self.u)));
        }
        Ok(())
    }
}

/// Decision procedures of one instance. Inputs are validated by the free
/// functions of this module before reaching these.
pub trait CiInstance: Markov + Sized {
    fn dibi(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool>;
    /// Independence of `X` and `Y` given `W` once `U` is marginalized.
    fn markov(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool>;
    fn superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool>;
    fn ext_superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool>;

    fn plain(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        self.markov(k, q)
    }
}

pub fn dibi_ci<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    q.check(k)?;
    m.dibi(k, q)
}

pub fn plain_ci<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    q.check_plain(k)?;
    m.plain(k, q)
}

pub fn markov_ci<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    q.check(k)?;
    m.markov(k, q)
}

pub fn superset_ci<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    q.check(k)?;
    if q.u.len() > MAX_EXTRA {
        return Err(Error::Budget(format!("{} extra variables exceed the limit of {MAX_EXTRA}", q.u.len())));
    }
    m.superset(k, q)
}

pub fn ext_superset_ci<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    q.check(k)?;
    m.ext_superset(k, q)
}

/// Decides `q` for its own flavor.
pub fn decide<M: CiInstance>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    match q.flavor {
        Flavor::Dibi => dibi_ci(m, k, q),
        Flavor::Plain => plain_ci(m, k, q),
        Flavor::Markov => markov_ci(m, k, q),
        Flavor::Superset => superset_ci(m, k, q),
        Flavor::ExtSuperset => ext_superset_ci(m, k, q),
    }
}

fn dibi_by_formula<M: Decompose + SubkernelDecision>(m: &M, k: &Kernel<M>, q: &CIQuery) -> Result<bool> {
    let p = Formula::conditional_independence(&q.w, &q.x, &q.y);
    satisfies(m, k, &p, &SatStrategy::for_instance(m))
}

/// The ordered 3-partitions of `u`.
pub fn partitions3(u: &VarSet) -> Vec<[VarSet; 3]> {
    let items: Vec<_> = u.iter().collect();
    (0..3usize.pow(items.len() as u32))
        .map(|mut code| {
            let mut out = [VarSet::new(), VarSet::new(), VarSet::new()];
            for v in &items {
                out[code % 3].insert((*v).clone());
                code /= 3;
            }
            out
        })
        .collect()
}

/// A joint distribution as a map from value tuples over `vars` to mass.
struct Joint {
    vars: Vec<crate::varspace::VarName>,
    mass: BTreeMap<Vec<usize>, Q>,
}

impl Joint {
    fn of(k: &Kernel<FinStoch>) -> Joint {
        let core = k.core();
        let radix = core.cod_radix();
        let mass = core.rows()[0].iter().map(|(c, p)| (radix.decode(*c), p.clone())).collect();
        Joint { vars: core.cod().iter().cloned().collect(), mass }
    }

    fn positions(&self, s: &VarSet) -> Vec<usize> {
        (0..self.vars.len()).filter(|&i| s.contains(&self.vars[i])).collect()
    }

    fn marginal(&self, idx: &[usize]) -> BTreeMap<Vec<usize>, Q> {
        let mut out: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
        for (t, p) in &self.mass {
            *out.entry(idx.iter().map(|&i| t[i]).collect()).or_insert_with(num::Zero::zero) += p;
        }
        out
    }

    /// Whether `p(w, a0, a1, a2) · p(w)² = p(w, a0) · p(w, a1) · p(w, a2)`
    /// for all values, with `a0 ∪ a1 ∪ a2` the variables beyond `w` that are
    /// kept; everything else is marginalized.
    fn factorizes(&self, w: &VarSet, blocks: [&VarSet; 3]) -> bool {
        let wi = self.positions(w);
        let bi: Vec<Vec<usize>> = blocks.iter().map(|b| self.positions(b)).collect();
        let all: Vec<usize> = wi.iter().chain(bi.iter().flatten()).copied().collect();
        let joint = self.marginal(&all);
        let pw = self.marginal(&wi);
        let grouped: Vec<BTreeMap<Vec<usize>, Vec<(Vec<usize>, Q)>>> = bi
            .iter()
            .map(|b| {
                let idx: Vec<usize> = wi.iter().chain(b).copied().collect();
                let mut g: BTreeMap<Vec<usize>, Vec<(Vec<usize>, Q)>> = BTreeMap::new();
                for (t, p) in self.marginal(&idx) {
                    g.entry(t[..wi.len()].to_vec()).or_default().push((t[wi.len()..].to_vec(), p));
                }
                g
            })
            .collect();
        let zero: Q = num::Zero::zero();
        for (wv, p) in &pw {
            let sq = p * p;
            let empty = Vec::new();
            let parts: Vec<&Vec<(Vec<usize>, Q)>> = grouped.iter().map(|g| g.get(wv).unwrap_or(&empty)).collect();
            for (t0, p0) in parts[0] {
                for (t1, p1) in parts[1] {
                    for (t2, p2) in parts[2] {
                        let key: Vec<usize> = wv.iter().chain(t0).chain(t1).chain(t2).copied().collect();
                        let lhs = joint.get(&key).unwrap_or(&zero) * &sq;
                        if lhs != p0 * p1 * p2 {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// A partition `U = U0 ⊎ U1 ⊎ U2` under which the state factorizes as
/// `p(w, u0) · p(x, u1 | w) · p(y, u2 | w)`.
pub fn superset_partition(k: &Kernel<FinStoch>, q: &CIQuery) -> Result<Option<[VarSet; 3]>> {
    q.check(k)?;
    if q.u.len() > MAX_EXTRA {
        return Err(Error::Budget(format!("{} extra variables exceed the limit of {MAX_EXTRA}", q.u.len())));
    }
    let joint = Joint::of(k);
    Ok(partitions3(&q.u).into_iter().find(|[u0, u1, u2]| joint.factorizes(&q.w, [u0, &q.x.union(u1), &q.y.union(u2)])))
}

impl CiInstance for FinStoch {
    fn dibi(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        dibi_by_formula(self, k, q)
    }

    fn markov(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        Ok(Joint::of(k).factorizes(&q.w, [&VarSet::new(), &q.x, &q.y]))
    }

    fn superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        Ok(superset_partition(k, q)?.is_some())
    }

    fn ext_superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        self.markov(k, q)
    }
}

impl CiInstance for FinRel {
    fn dibi(&self, _: &Kernel<Self>, _: &CIQuery) -> Result<bool> {
        Err(Error::Unsupported("finrel has no conditionals to build decomposition witnesses".into()))
    }

    fn markov(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        let rel = FlatRelation::from_state(self, &embed(self, k)?)?.project(&q.w.union(&q.x).union(&q.y));
        rel.join_dependency(&q.w.union(&q.x), &q.w.union(&q.y))
    }

    fn superset(&self, _: &Kernel<Self>, _: &CIQuery) -> Result<bool> {
        Err(Error::Unsupported("superset independence is decided for finstoch and synvar only".into()))
    }

    fn ext_superset(&self, _: &Kernel<Self>, _: &CIQuery) -> Result<bool> {
        Err(Error::Unsupported("finrel has no conditionals".into()))
    }
}

/// `Σ_XY − Σ_XW Σ_WW⁺ Σ_WY` for the state `k`.
pub fn gauss_conditional_cross(g: &Gauss, k: &Kernel<Gauss>, q: &CIQuery) -> Result<DMatrix<f64>> {
    let full = embed(g, k)?;
    let mut offsets = BTreeMap::new();
    let mut at = 0;
    for v in full.cod().iter() {
        let d = g.var_dim(v)?;
        offsets.insert(v.clone(), (at, d));
        at += d;
    }
    let idx = |s: &VarSet| -> Vec<usize> { s.iter().flat_map(|v| offsets[v].0..offsets[v].0 + offsets[v].1).collect() };
    let (wi, xi, yi) = (idx(&q.w), idx(&q.x), idx(&q.y));
    let block = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |i, j| full.cov[(r[i], c[j])]);
    let sww = block(&wi, &wi);
    Ok(block(&xi, &yi) - block(&xi, &wi) * pinv(&sww, g.tolerance()) * block(&wi, &yi))
}

impl CiInstance for Gauss {
    fn dibi(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        dibi_by_formula(self, k, q)
    }

    fn markov(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        let cross = gauss_conditional_cross(self, k, q)?;
        Ok(cross.iter().all(|v| v.abs() <= self.tolerance()))
    }

    fn superset(&self, _: &Kernel<Self>, _: &CIQuery) -> Result<bool> {
        Err(Error::Unsupported("superset independence is decided for finstoch and synvar only".into()))
    }

    fn ext_superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        self.markov(k, q)
    }
}

fn search(k: &Kernel<SynVar>, q: &CIQuery, flavor: SearchFlavor) -> Result<bool> {
    let g = embed(&SynVar, k)?;
    Ok(decompose_search(&g, &q.w, &q.x, &q.y, &q.u, flavor)?.holds())
}

impl CiInstance for SynVar {
    fn dibi(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        dibi_by_formula(self, k, q)
    }

    fn markov(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        search(k, q, SearchFlavor::Dibi)
    }

    fn superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        search(k, q, SearchFlavor::Superset)
    }

    fn ext_superset(&self, k: &Kernel<Self>, q: &CIQuery) -> Result<bool> {
        search(k, q, SearchFlavor::ExtSuperset)
    }
}
