//! Finite relations as Kleisli maps of the nonempty powerset monad.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::finstoch::{Alphabet, Memory, Radix};
use crate::markov::{check_endpoints, Assignment, Capabilities, Markov, Morphism};
use crate::varspace::{VarList, VarName, VarSet};

/// A relation between variable lists: a nonempty set of codomain codes for
/// every domain code.
#[derive(Clone, PartialEq, Eq)]
pub struct RelTable {
    dom: VarList,
    cod: VarList,
    dom_radix: Radix,
    cod_radix: Radix,
    rows: Vec<BTreeSet<usize>>,
}

impl RelTable {
    pub fn rows(&self) -> &[BTreeSet<usize>] {
        &self.rows
    }
}

impl Morphism for RelTable {
    fn dom(&self) -> &VarList {
        &self.dom
    }
    fn cod(&self) -> &VarList {
        &self.cod
    }
}

impl fmt::Debug for RelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} ", self.dom, self.cod)?;
        f.debug_list().entries(self.rows.iter()).finish()
    }
}

#[derive(Clone, Debug)]
pub struct FinRel {
    theta: Assignment<Alphabet>,
}

/// Union of the images of `s` under `k`.
pub fn rel_bind(s: &BTreeSet<Memory>, mut k: impl FnMut(&Memory) -> BTreeSet<Memory>) -> Result<BTreeSet<Memory>> {
    let mut out = BTreeSet::new();
    for m in s {
        let img = k(m);
        if img.is_empty() {
            return Err(Error::EmptyImage);
        }
        out.extend(img);
    }
    Ok(out)
}

fn restrict(m: &Memory, vars: &VarSet) -> Memory {
    m.iter().filter(|(k, _)| vars.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

impl FinRel {
    pub fn new(theta: Assignment<Alphabet>) -> Self {
        FinRel { theta }
    }

    pub fn uniform(n: usize) -> Self {
        FinRel { theta: Assignment::uniform(Alphabet::range(n)) }
    }

    pub fn theta(&self) -> &Assignment<Alphabet> {
        &self.theta
    }

    pub fn alphabet(&self, v: &VarName) -> Result<&Alphabet> {
        self.theta.get(v)
    }

    pub fn radix(&self, l: &VarList) -> Result<Radix> {
        Ok(Radix::new(l.iter().map(|v| self.alphabet(v).map(Alphabet::len)).collect::<Result<_>>()?))
    }

    pub fn table(&self, dom: &VarList, cod: &VarList, rows: Vec<BTreeSet<usize>>) -> Result<RelTable> {
        let dom_radix = self.radix(dom)?;
        let cod_radix = self.radix(cod)?;
        if rows.len() != dom_radix.size() {
            return Err(Error::DimensionMismatch(format!("{} rows for {} inputs", rows.len(), dom_radix.size())));
        }
        for r in &rows {
            if r.is_empty() {
                return Err(Error::EmptyImage);
            }
            if r.iter().any(|&c| c >= cod_radix.size()) {
                return Err(Error::InvalidValue("output code out of range".into()));
            }
        }
        Ok(RelTable { dom: dom.clone(), cod: cod.clone(), dom_radix, cod_radix, rows })
    }

    pub fn memory_of(&self, l: &VarList, code: usize) -> Result<Memory> {
        let t = self.radix(l)?.decode(code);
        l.iter()
            .zip(t)
            .map(|(v, i)| Ok((v.clone(), self.alphabet(v)?.values()[i].clone())))
            .collect()
    }

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

    pub fn memories(&self, l: &VarList) -> Result<Vec<Memory>> {
        (0..self.radix(l)?.size()).map(|c| self.memory_of(l, c)).collect()
    }

    pub fn from_fn(
        &self,
        dom: &VarList,
        cod: &VarList,
        mut f: impl FnMut(&Memory) -> Result<BTreeSet<Memory>>,
    ) -> Result<RelTable> {
        let mut rows = Vec::new();
        for m in self.memories(dom)? {
            let img = f(&m)?;
            rows.push(img.iter().map(|o| self.code_of(cod, o)).collect::<Result<BTreeSet<_>>>()?);
        }
        self.table(dom, cod, rows)
    }

    pub fn row(&self, t: &RelTable, m: &Memory) -> Result<BTreeSet<Memory>> {
        let code = self.code_of(&t.dom, m)?;
        t.rows[code].iter().map(|&c| self.memory_of(&t.cod, c)).collect()
    }

    fn deterministic(&self, dom: &VarList, cod: &VarList, f: impl Fn(&[usize]) -> Vec<usize>) -> Result<RelTable> {
        let dr = self.radix(dom)?;
        let cr = self.radix(cod)?;
        let rows = (0..dr.size()).map(|c| BTreeSet::from([cr.encode(&f(&dr.decode(c)))])).collect();
        Ok(RelTable { dom: dom.clone(), cod: cod.clone(), dom_radix: dr, cod_radix: cr, rows })
    }

    /// One row of the parallel composite of two input-preserving relations
    /// `f : X → Y` and `g : U → V`, at input `l` over `X ∪ U`.
    pub fn rel_parallel_row(&self, l: &Memory, f: &RelTable, g: &RelTable) -> Result<BTreeSet<Memory>> {
        let (x, y, u, v) = (f.dom.to_set(), f.cod.to_set(), g.dom.to_set(), g.cod.to_set());
        if x.intersection(&u) != y.intersection(&v) {
            return Err(Error::OverlapViolation { left: x.intersection(&u), right: y.intersection(&v) });
        }
        let shared = y.intersection(&v);
        let left = self.row(f, &restrict(l, &x))?;
        let right = self.row(g, &restrict(l, &u))?;
        let mut out = BTreeSet::new();
        for a in &left {
            for b in &right {
                if restrict(a, &shared) == restrict(b, &shared) {
                    let mut m = a.clone();
                    m.extend(b.iter().map(|(k, val)| (k.clone(), val.clone())));
                    out.insert(m);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyImage);
        }
        Ok(out)
    }
}

impl Markov for FinRel {
    type Mor = RelTable;

    fn name(&self) -> &'static str {
        "finrel"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_conditionals: false, del_cancellative: true, equality_exact: true, tolerance: 0.0 }
    }

    fn identity(&self, o: &VarList) -> Result<RelTable> {
        self.deterministic(o, o, |t| t.to_vec())
    }

    fn compose(&self, f: &RelTable, g: &RelTable) -> Result<RelTable> {
        check_endpoints(&f.cod, &g.dom)?;
        let rows = f
            .rows
            .iter()
            .map(|r| r.iter().flat_map(|&b| g.rows[b].iter().copied()).collect())
            .collect();
        Ok(RelTable {
            dom: f.dom.clone(),
            cod: g.cod.clone(),
            dom_radix: f.dom_radix.clone(),
            cod_radix: g.cod_radix.clone(),
            rows,
        })
    }

    fn tensor(&self, f: &RelTable, g: &RelTable) -> Result<RelTable> {
        let gs = g.cod_radix.size();
        let mut rows = Vec::with_capacity(f.rows.len() * g.rows.len());
        for fr in &f.rows {
            for gr in &g.rows {
                rows.push(fr.iter().flat_map(|a| gr.iter().map(move |b| a * gs + b)).collect());
            }
        }
        let cat = |a: &Radix, b: &Radix| Radix::new(a.radices().iter().chain(b.radices()).copied().collect());
        Ok(RelTable {
            dom: f.dom.concat(&g.dom),
            cod: f.cod.concat(&g.cod),
            dom_radix: cat(&f.dom_radix, &g.dom_radix),
            cod_radix: cat(&f.cod_radix, &g.cod_radix),
            rows,
        })
    }

    fn copy(&self, o: &VarList) -> Result<RelTable> {
        self.deterministic(o, &o.concat(o), |t| t.iter().chain(t).copied().collect())
    }

    fn del(&self, o: &VarList) -> Result<RelTable> {
        self.deterministic(o, &VarList::empty(), |_| Vec::new())
    }

    fn swap(&self, a: &VarList, b: &VarList) -> Result<RelTable> {
        let n = a.len();
        self.deterministic(&a.concat(b), &b.concat(a), |t| t[n..].iter().chain(&t[..n]).copied().collect())
    }

    fn equal(&self, f: &RelTable, g: &RelTable) -> bool {
        f.dom == g.dom && f.cod == g.cod && f.rows == g.rows
    }

    fn structural(&self, src: &VarList, picks: &[usize]) -> Result<RelTable> {
        if let Some(&p) = picks.iter().find(|&&p| p >= src.len()) {
            return Err(Error::InvalidKernel(format!("pick {p} out of range")));
        }
        let cod: VarList = picks.iter().map(|&p| src[p].clone()).collect();
        self.deterministic(src, &cod, |t| picks.iter().map(|&p| t[p]).collect())
    }
}

/// A flat relation: a set of tuples over an ordered list of variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlatRelation {
    pub vars: VarList,
    pub tuples: BTreeSet<Vec<String>>,
}

impl FlatRelation {
    /// The support of a state `[] → vars`.
    pub fn from_state(fr: &FinRel, state: &RelTable) -> Result<Self> {
        if !state.dom.is_empty() {
            return Err(Error::ShapeError("a flat relation needs an empty domain".into()));
        }
        let tuples = state.rows[0]
            .iter()
            .map(|&c| {
                let m = fr.memory_of(&state.cod, c)?;
                Ok(state.cod.iter().map(|v| m[v].clone()).collect())
            })
            .collect::<Result<_>>()?;
        Ok(FlatRelation { vars: state.cod.clone(), tuples })
    }

    pub fn to_state(&self, fr: &FinRel) -> Result<RelTable> {
        let row = self
            .tuples
            .iter()
            .map(|t| {
                let m: Memory = self.vars.iter().cloned().zip(t.iter().cloned()).collect();
                fr.code_of(&self.vars, &m)
            })
            .collect::<Result<BTreeSet<_>>>()?;
        fr.table(&VarList::empty(), &self.vars, vec![row])
    }

    pub fn project(&self, keep: &VarSet) -> FlatRelation {
        let idx: Vec<usize> = (0..self.vars.len()).filter(|&i| keep.contains(&self.vars[i])).collect();
        FlatRelation {
            vars: idx.iter().map(|&i| self.vars[i].clone()).collect(),
            tuples: self.tuples.iter().map(|t| idx.iter().map(|&i| t[i].clone()).collect()).collect(),
        }
    }

    /// Natural join; the result lists `self`'s variables first.
    pub fn join(&self, other: &FlatRelation) -> FlatRelation {
        let shared: Vec<(usize, usize)> = self
            .vars
            .iter()
            .enumerate()
            .filter_map(|(i, v)| other.vars.position(v).map(|j| (i, j)))
            .collect();
        let extra: Vec<usize> = (0..other.vars.len()).filter(|j| !shared.iter().any(|(_, s)| s == j)).collect();
        let mut vars = self.vars.to_vec();
        vars.extend(extra.iter().map(|&j| other.vars[j].clone()));
        let mut tuples = BTreeSet::new();
        for a in &self.tuples {
            for b in &other.tuples {
                if shared.iter().all(|&(i, j)| a[i] == b[j]) {
                    let mut t = a.clone();
                    t.extend(extra.iter().map(|&j| b[j].clone()));
                    tuples.insert(t);
                }
            }
        }
        FlatRelation { vars: VarList::new(vars), tuples }
    }

    /// Reorders columns to `order`, a permutation of the variables.
    pub fn reorder(&self, order: &VarList) -> Result<FlatRelation> {
        let idx = self.vars.picks_for(order)?;
        Ok(FlatRelation {
            vars: order.clone(),
            tuples: self.tuples.iter().map(|t| idx.iter().map(|&i| t[i].clone()).collect()).collect(),
        })
    }

    /// Whether `R = π_A(R) ⋈ π_B(R)`, with `A ∪ B` covering every column.
    pub fn join_dependency(&self, a: &VarSet, b: &VarSet) -> Result<bool> {
        if a.union(b) != self.vars.to_set() {
            return Err(Error::ShapeError("join dependency must cover every column".into()));
        }
        let joined = self.project(a).join(&self.project(b)).reorder(&self.vars)?;
        Ok(joined.tuples == self.tuples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::markov::laws;

    fn mem(pairs: &[(&str, &str)]) -> Memory {
        pairs.iter().map(|(k, v)| (VarName::new(*k).unwrap(), v.to_string())).collect()
    }

    #[test]
    fn bind_examples() {
        let m = mem(&[("a", "0")]);
        let k = |x: &Memory| -> BTreeSet<Memory> {
            let v = &x[&VarName::new("a").unwrap()];
            if v == "0" {
                BTreeSet::from([mem(&[("b", "0")]), mem(&[("b", "1")])])
            } else {
                BTreeSet::from([mem(&[("b", "1")])])
            }
        };
        assert_eq!(rel_bind(&BTreeSet::from([m.clone()]), k).unwrap(), k(&m));
        let s = BTreeSet::from([mem(&[("a", "0")]), mem(&[("a", "1")])]);
        assert_eq!(rel_bind(&s, |x| BTreeSet::from([x.clone()])).unwrap(), s);
        // two rows: {0 ↦ {0,1}, 1 ↦ {1}} over {0,1} is {0,1}; over {1} is {1}
        assert_eq!(rel_bind(&s, k).unwrap().len(), 2);
        assert_eq!(rel_bind(&BTreeSet::from([mem(&[("a", "1")])]), k).unwrap(), BTreeSet::from([mem(&[("b", "1")])]));
        assert!(matches!(rel_bind(&s, |_| BTreeSet::new()), Err(Error::EmptyImage)));
    }

    #[test]
    fn parallel_row_examples() {
        let fr = FinRel::uniform(2);
        let xz = VarList::of(&["x", "z"]);
        let yz = VarList::of(&["y", "z"]);
        let z = VarList::of(&["z"]);
        // f outputs any x; g copies z into y
        let f = fr.from_fn(&z, &xz, |m| Ok(["0", "1"].iter().map(|x| {
            let mut o = m.clone();
            o.insert(VarName::new("x").unwrap(), x.to_string());
            o
        }).collect())).unwrap();
        let g = fr.from_fn(&z, &yz, |m| {
            let mut o = m.clone();
            o.insert(VarName::new("y").unwrap(), m[&VarName::new("z").unwrap()].clone());
            Ok(BTreeSet::from([o]))
        }).unwrap();
        for zv in ["0", "1"] {
            let got = fr.rel_parallel_row(&mem(&[("z", zv)]), &f, &g).unwrap();
            // oracle: filter all memories over {x,y,z}
            let expected: BTreeSet<Memory> = fr
                .memories(&VarList::of(&["x", "y", "z"]))
                .unwrap()
                .into_iter()
                .filter(|m| m[&VarName::new("z").unwrap()] == zv && m[&VarName::new("y").unwrap()] == zv)
                .collect();
            assert_eq!(got, expected);
        }
        let idz = fr.identity(&z).unwrap();
        assert_eq!(fr.rel_parallel_row(&mem(&[("z", "1")]), &idz, &idz).unwrap(), BTreeSet::from([mem(&[("z", "1")])]));
        let a = fr.table(&VarList::empty(), &VarList::of(&["a"]), vec![BTreeSet::from([1])]).unwrap();
        let b = fr.table(&VarList::empty(), &VarList::of(&["b"]), vec![BTreeSet::from([0])]).unwrap();
        assert_eq!(fr.rel_parallel_row(&Memory::new(), &a, &b).unwrap(), BTreeSet::from([mem(&[("a", "1"), ("b", "0")])]));
        let bad = fr.table(&VarList::empty(), &VarList::of(&["z"]), vec![BTreeSet::from([0])]).unwrap();
        assert!(matches!(fr.rel_parallel_row(&mem(&[("z", "0")]), &idz, &bad), Err(Error::OverlapViolation { .. })));
    }

    #[test]
    fn markov_axioms_hold() {
        let fr = FinRel::new(Assignment::uniform(Alphabet::range(2)).with(VarName::new("b").unwrap(), Alphabet::range(3)));
        let ab = VarList::of(&["a", "b"]);
        let c = VarList::of(&["c"]);
        for o in [&ab, &c, &VarList::empty()] {
            assert!(laws::coassociative(&fr, o).unwrap());
            assert!(laws::counital(&fr, o).unwrap());
            assert!(laws::cocommutative(&fr, o).unwrap());
        }
        assert!(laws::tensor_compatible(&fr, &ab, &c).unwrap());
        let f = fr.table(&c, &ab, vec![BTreeSet::from([0, 4]), BTreeSet::from([5])]).unwrap();
        assert!(laws::del_natural(&fr, &f).unwrap());
        assert!(laws::unit_laws(&fr, &f).unwrap());
        assert!(laws::structural_agrees(&fr, &ab.concat(&c), &[1, 1, 2]).unwrap());
    }

    #[test]
    fn empty_rows_are_rejected() {
        let fr = FinRel::uniform(2);
        assert!(matches!(fr.table(&VarList::empty(), &VarList::of(&["a"]), vec![BTreeSet::new()]), Err(Error::EmptyImage)));
    }

    #[test]
    fn flat_view_and_join_dependency() {
        let fr = FinRel::uniform(2);
        let vars = VarList::of(&["w", "x", "y"]);
        let rel = FlatRelation {
            vars: vars.clone(),
            tuples: [["0", "0", "0"], ["0", "1", "1"], ["1", "0", "0"]]
                .iter()
                .map(|t| t.iter().map(|s| s.to_string()).collect())
                .collect(),
        };
        let state = rel.to_state(&fr).unwrap();
        assert_eq!(FlatRelation::from_state(&fr, &state).unwrap(), rel);
        let wx = VarSet::of(&["w", "x"]);
        let wy = VarSet::of(&["w", "y"]);
        assert!(!rel.join_dependency(&wx, &wy).unwrap());
        let mut full = rel.clone();
        full.tuples.insert(vec!["0".into(), "0".into(), "1".into()]);
        full.tuples.insert(vec!["0".into(), "1".into(), "0".into()]);
        assert!(full.join_dependency(&wx, &wy).unwrap());
    }
}
