//! Finite stochastic maps with exact rational weights: the Kleisli category
//! of the finite distribution monad.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::markov::{check_endpoints, Assignment, Capabilities, Conditionals, Markov, Morphism};
use crate::varspace::{VarList, VarName, VarSet};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"n/d"` or an integer.
pub fn parse_q(s: &str) -> Result<Q> {
    Q::from_str(s.trim()).map_err(|_| Error::InvalidValue(format!("not a rational: `{s}`")))
}

pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// A nonempty, duplicate-free list of value tokens. The listed order is the
/// order used for "least" memories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet(Vec<String>);

impl Alphabet {
    pub fn new(values: Vec<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidValue("empty alphabet".into()));
        }
        for (i, v) in values.iter().enumerate() {
            if values[..i].contains(v) {
                return Err(Error::InvalidValue(format!("duplicate alphabet value `{v}`")));
            }
        }
        Ok(Alphabet(values))
    }

    /// The alphabet `0, 1, …, n-1`.
    pub fn range(n: usize) -> Self {
        Alphabet((0..n.max(1)).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[String] {
        &self.0
    }

    pub fn index(&self, v: &str) -> Option<usize> {
        self.0.iter().position(|x| x == v)
    }
}

/// An assignment of values to variables.
pub type Memory = BTreeMap<VarName, String>;

/// A finitely supported probability distribution. Zero weights are never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct Dist<T: Ord> {
    weights: BTreeMap<T, Q>,
}

impl<T: Ord + Clone> Dist<T> {
    pub fn dirac(t: T) -> Self {
        let mut weights = BTreeMap::new();
        weights.insert(t, Q::one());
        Dist { weights }
    }

    /// Builds a distribution, merging repeated outcomes and dropping zeros.
    /// Fails unless the weights are nonnegative and sum to one.
    pub fn new(entries: impl IntoIterator<Item = (T, Q)>) -> Result<Self> {
        let d = Self::accumulate(entries);
        if d.weights.values().any(|w| w.is_negative()) {
            return Err(Error::InvalidValue("negative probability".into()));
        }
        if !d.total().is_one() {
            return Err(Error::InvalidValue(format!("weights sum to {}", format_q(&d.total()))));
        }
        Ok(d)
    }

    fn accumulate(entries: impl IntoIterator<Item = (T, Q)>) -> Self {
        let mut weights: BTreeMap<T, Q> = BTreeMap::new();
        for (t, w) in entries {
            *weights.entry(t).or_insert_with(Q::zero) += w;
        }
        weights.retain(|_, w| !w.is_zero());
        Dist { weights }
    }

    pub fn total(&self) -> Q {
        self.weights.values().fold(Q::zero(), |a, b| a + b)
    }

    pub fn get(&self, t: &T) -> Q {
        self.weights.get(t).cloned().unwrap_or_else(Q::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Q)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn bind<U: Ord + Clone>(&self, mut k: impl FnMut(&T) -> Dist<U>) -> Dist<U> {
        let mut out: BTreeMap<U, Q> = BTreeMap::new();
        for (t, p) in &self.weights {
            for (u, w) in k(t).weights {
                *out.entry(u).or_insert_with(Q::zero) += p * w;
            }
        }
        out.retain(|_, w| !w.is_zero());
        Dist { weights: out }
    }

    pub fn map<U: Ord + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Dist<U> {
        Dist::accumulate(self.weights.iter().map(|(t, w)| (f(t), w.clone())))
    }

    pub fn product<U: Ord + Clone, V: Ord + Clone>(&self, other: &Dist<U>, mut f: impl FnMut(&T, &U) -> V) -> Dist<V> {
        let mut out = Vec::with_capacity(self.len() * other.len());
        for (t, p) in &self.weights {
            for (u, w) in &other.weights {
                out.push((f(t, u), p * w));
            }
        }
        Dist::accumulate(out)
    }

    /// Restricts to outcomes satisfying `keep` and rescales; `None` if the
    /// kept mass is zero.
    pub fn condition(&self, mut keep: impl FnMut(&T) -> bool) -> Option<Self> {
        let kept: Vec<(T, Q)> = self.weights.iter().filter(|(t, _)| keep(t)).map(|(t, w)| (t.clone(), w.clone())).collect();
        let mass = kept.iter().fold(Q::zero(), |a, (_, w)| a + w);
        if mass.is_zero() {
            return None;
        }
        Some(Dist::accumulate(kept.into_iter().map(|(t, w)| (t, w / &mass))))
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (t, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t:?}: {}", format_q(w))?;
        }
        f.write_str("}")
    }
}

pub fn dirac(m: Memory) -> Dist<Memory> {
    Dist::dirac(m)
}

pub fn kleisli_bind(d: &Dist<Memory>, k: impl FnMut(&Memory) -> Dist<Memory>) -> Dist<Memory> {
    d.bind(k)
}

/// Sums out every variable outside `u`.
pub fn marginalize(d: &Dist<Memory>, u: &VarSet) -> Result<Dist<Memory>> {
    for m in d.support() {
        let vars: VarSet = m.keys().cloned().collect();
        if !u.is_subset(&vars) {
            return Err(Error::NotASubset { sub: u.clone(), sup: vars });
        }
    }
    Ok(d.map(|m| m.iter().filter(|(k, _)| u.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect()))
}

/// Mixed-radix encoding of tuples; the first position is most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Radix(Vec<usize>);

impl Radix {
    pub fn new(r: Vec<usize>) -> Self {
        Radix(r)
    }

    pub fn size(&self) -> usize {
        self.0.iter().product()
    }

    pub fn encode(&self, t: &[usize]) -> usize {
        self.0.iter().zip(t).fold(0, |acc, (r, x)| acc * r + x)
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut t = vec![0; self.0.len()];
        for i in (0..self.0.len()).rev() {
            t[i] = code % self.0[i];
            code /= self.0[i];
        }
        t
    }

    pub fn radices(&self) -> &[usize] {
        &self.0
    }
}

/// A stochastic map between variable lists: one distribution over codomain
/// codes for every domain code.
#[derive(Clone, PartialEq, Eq)]
pub struct StochTable {
    dom: VarList,
    cod: VarList,
    dom_radix: Radix,
    cod_radix: Radix,
    rows: Vec<Dist<usize>>,
}

impl StochTable {
    pub fn rows(&self) -> &[Dist<usize>] {
        &self.rows
    }

    pub fn dom_radix(&self) -> &Radix {
        &self.dom_radix
    }

    pub fn cod_radix(&self) -> &Radix {
        &self.cod_radix
    }
}

impl Morphism for StochTable {
    fn dom(&self) -> &VarList {
        &self.dom
    }
    fn cod(&self) -> &VarList {
        &self.cod
    }
}

impl fmt::Debug for StochTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} ", self.dom, self.cod)?;
        f.debug_list().entries(self.rows.iter()).finish()
    }
}

/// The finite stochastic instance under a value assignment.
#[derive(Clone, Debug)]
pub struct FinStoch {
    theta: Assignment<Alphabet>,
}

impl FinStoch {
    pub fn new(theta: Assignment<Alphabet>) -> Self {
        FinStoch { theta }
    }

    /// Every variable ranges over `0..n`.
    pub fn uniform(n: usize) -> Self {
        FinStoch { theta: Assignment::uniform(Alphabet::range(n)) }
    }

    pub fn theta(&self) -> &Assignment<Alphabet> {
        &self.theta
    }

    pub fn alphabet(&self, v: &VarName) -> Result<&Alphabet> {
        self.theta.get(v)
    }

    pub fn radix(&self, l: &VarList) -> Result<Radix> {
        Ok(Radix(l.iter().map(|v| self.alphabet(v).map(Alphabet::len)).collect::<Result<_>>()?))
    }

    pub fn table(&self, dom: &VarList, cod: &VarList, rows: Vec<Dist<usize>>) -> Result<StochTable> {
        let dom_radix = self.radix(dom)?;
        let cod_radix = self.radix(cod)?;
        if rows.len() != dom_radix.size() {
            return Err(Error::DimensionMismatch(format!("{} rows for {} inputs", rows.len(), dom_radix.size())));
        }
        for r in &rows {
            if r.support().any(|&c| c >= cod_radix.size()) || !r.total().is_one() {
                return Err(Error::InvalidValue("row is not a distribution over the codomain".into()));
            }
        }
        Ok(StochTable { dom: dom.clone(), cod: cod.clone(), dom_radix, cod_radix, rows })
    }

    pub fn memory_of(&self, l: &VarList, code: usize) -> Result<Memory> {
        let t = self.radix(l)?.decode(code);
        l.iter()
            .zip(t)
            .map(|(v, i)| Ok((v.clone(), self.alphabet(v)?.values()[i].clone())))
            .collect()
    }

    /// Encodes the restriction of `m` to the variables of `l`.
    pub fn code_of(&self, l: &VarList, m: &Memory) -> Result<usize> {
        let t = l
            .iter()
            .map(|v| {
                let val = m.get(v).ok_or_else(|| Error::InvalidValue(format!("memory lacks `{v}`")))?;
                self.alphabet(v)?
                    .index(val)
                    .ok_or_else(|| Error::InvalidValue(format!("`{val}` is not a value of `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.radix(l)?.encode(&t))
    }

    /// All memories over `l`, in code order.
    pub fn memories(&self, l: &VarList) -> Result<Vec<Memory>> {
        (0..self.radix(l)?.size()).map(|c| self.memory_of(l, c)).collect()
    }

    /// Tabulates a memory-level kernel.
    pub fn from_fn(
        &self,
        dom: &VarList,
        cod: &VarList,
        mut f: impl FnMut(&Memory) -> Result<Dist<Memory>>,
    ) -> Result<StochTable> {
        let mut rows = Vec::new();
        for m in self.memories(dom)? {
            let d = f(&m)?;
            let mut entries = Vec::new();
            for (out, w) in d.iter() {
                entries.push((self.code_of(cod, out)?, w.clone()));
            }
            rows.push(Dist::new(entries)?);
        }
        self.table(dom, cod, rows)
    }

    /// The output distribution, as memories over the codomain, at input `m`.
    pub fn row(&self, t: &StochTable, m: &Memory) -> Result<Dist<Memory>> {
        let code = self.code_of(&t.dom, m)?;
        let mut entries = Vec::new();
        for (c, w) in t.rows[code].iter() {
            entries.push((self.memory_of(&t.cod, *c)?, w.clone()));
        }
        Dist::new(entries)
    }

    /// Applies a deterministic function on codes row by row.
    fn deterministic(&self, dom: &VarList, cod: &VarList, f: impl Fn(&[usize]) -> Vec<usize>) -> Result<StochTable> {
        let dr = self.radix(dom)?;
        let cr = self.radix(cod)?;
        let rows = (0..dr.size()).map(|c| Dist::dirac(cr.encode(&f(&dr.decode(c))))).collect();
        Ok(StochTable { dom: dom.clone(), cod: cod.clone(), dom_radix: dr, cod_radix: cr, rows })
    }

    /// The conditional `X → Y` obtained by pooling over the domain, checked by
    /// reassembly; fails when the outputs depend on the domain beyond `X`.
    pub fn conditional_pooled(&self, f: &StochTable, split: usize) -> Result<(StochTable, StochTable)> {
        let (marg, _) = self.conditional(f, split)?;
        let x = VarList::new(f.cod[..split].to_vec());
        let y = VarList::new(f.cod[split..].to_vec());
        let xr = self.radix(&x)?;
        let yr = self.radix(&y)?;
        let mut joint: Vec<BTreeMap<usize, Q>> = vec![BTreeMap::new(); xr.size()];
        for row in &f.rows {
            for (c, w) in row.iter() {
                let (xc, yc) = (c / yr.size(), c % yr.size());
                *joint[xc].entry(yc).or_insert_with(Q::zero) += w;
            }
        }
        let rows = joint
            .into_iter()
            .map(|m| {
                let mass = m.values().fold(Q::zero(), |a, b| a + b);
                if mass.is_zero() {
                    Dist::dirac(0)
                } else {
                    Dist::accumulate(m.into_iter().map(|(k, w)| (k, w / &mass)))
                }
            })
            .collect();
        let cond = StochTable { dom: x.clone(), cod: y, dom_radix: xr, cod_radix: yr, rows };
        // reassembly ignoring the domain: marginal ; copy ; (id ⊗ cond)
        let both = self.compose(&self.copy(&x)?, &self.tensor(&self.identity(&x)?, &cond)?)?;
        if !self.equal(&self.compose(&marg, &both)?, f) {
            return Err(Error::ReassemblyFailed);
        }
        Ok((marg, cond))
    }
}

impl Markov for FinStoch {
    type Mor = StochTable;

    fn name(&self) -> &'static str {
        "finstoch"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_conditionals: true, del_cancellative: true, equality_exact: true, tolerance: 0.0 }
    }

    fn identity(&self, o: &VarList) -> Result<StochTable> {
        self.deterministic(o, o, |t| t.to_vec())
    }

    fn compose(&self, f: &StochTable, g: &StochTable) -> Result<StochTable> {
        check_endpoints(&f.cod, &g.dom)?;
        let rows = f.rows.iter().map(|r| r.bind(|b| g.rows[*b].clone())).collect();
        Ok(StochTable {
            dom: f.dom.clone(),
            cod: g.cod.clone(),
            dom_radix: f.dom_radix.clone(),
            cod_radix: g.cod_radix.clone(),
            rows,
        })
    }

    fn tensor(&self, f: &StochTable, g: &StochTable) -> Result<StochTable> {
        let gs = g.cod_radix.size();
        let mut rows = Vec::with_capacity(f.rows.len() * g.rows.len());
        for fr in &f.rows {
            for gr in &g.rows {
                rows.push(fr.product(gr, |a, b| a * gs + b));
            }
        }
        let cat = |a: &Radix, b: &Radix| Radix(a.0.iter().chain(&b.0).copied().collect());
        Ok(StochTable {
            dom: f.dom.concat(&g.dom),
            cod: f.cod.concat(&g.cod),
            dom_radix: cat(&f.dom_radix, &g.dom_radix),
            cod_radix: cat(&f.cod_radix, &g.cod_radix),
            rows,
        })
    }

    fn copy(&self, o: &VarList) -> Result<StochTable> {
        self.deterministic(o, &o.concat(o), |t| t.iter().chain(t).copied().collect())
    }

    fn del(&self, o: &VarList) -> Result<StochTable> {
        self.deterministic(o, &VarList::empty(), |_| Vec::new())
    }

    fn swap(&self, a: &VarList, b: &VarList) -> Result<StochTable> {
        let n = a.len();
        self.deterministic(&a.concat(b), &b.concat(a), |t| t[n..].iter().chain(&t[..n]).copied().collect())
    }

    fn equal(&self, f: &StochTable, g: &StochTable) -> bool {
        f.dom == g.dom && f.cod == g.cod && f.rows == g.rows
    }

    fn structural(&self, src: &VarList, picks: &[usize]) -> Result<StochTable> {
        if let Some(&p) = picks.iter().find(|&&p| p >= src.len()) {
            return Err(Error::InvalidKernel(format!("pick {p} out of range")));
        }
        let cod: VarList = picks.iter().map(|&p| src[p].clone()).collect();
        self.deterministic(src, &cod, |t| picks.iter().map(|&p| t[p]).collect())
    }
}

impl Conditionals for FinStoch {
    fn conditional(&self, f: &StochTable, split: usize) -> Result<(StochTable, StochTable)> {
        if split > f.cod.len() {
            return Err(Error::DimensionMismatch(format!("split {split} beyond codomain {}", f.cod)));
        }
        let x = VarList::new(f.cod[..split].to_vec());
        let y = VarList::new(f.cod[split..].to_vec());
        let xr = self.radix(&x)?;
        let yr = self.radix(&y)?;
        let ys = yr.size();
        let mut marg_rows = Vec::with_capacity(f.rows.len());
        let mut cond_rows = Vec::with_capacity(f.rows.len() * xr.size());
        for row in &f.rows {
            let marg = row.map(|c| c / ys);
            for xc in 0..xr.size() {
                let r = row.condition(|c| c / ys == xc).map(|d| d.map(|c| c % ys)).unwrap_or_else(|| Dist::dirac(0));
                cond_rows.push(r);
            }
            marg_rows.push(marg);
        }
        let marginal = StochTable {
            dom: f.dom.clone(),
            cod: x.clone(),
            dom_radix: f.dom_radix.clone(),
            cod_radix: xr.clone(),
            rows: marg_rows,
        };
        let ax = f.dom.concat(&x);
        let cond = StochTable { dom_radix: self.radix(&ax)?, dom: ax, cod: y, cod_radix: yr, rows: cond_rows };
        Ok((marginal, cond))
    }

    fn point(&self, o: &VarList) -> Result<StochTable> {
        let cr = self.radix(o)?;
        Ok(StochTable {
            dom: VarList::empty(),
            cod: o.clone(),
            dom_radix: Radix(vec![]),
            cod_radix: cr,
            rows: vec![Dist::dirac(0)],
        })
    }
}
