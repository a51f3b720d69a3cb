//! The free Markov category on one generator per signature of strictly
//! increasing variable lists.
//!
//! Terms elaborate into port graphs in which a wire may feed any number of
//! sinks, so the comonoid laws hold by construction; normalization removes
//! generators whose outputs are all discarded and numbers the rest
//! canonically, after which equality is structural.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::markov::{check_endpoints, Capabilities, Markov, Morphism};
use crate::varspace::VarList;

mod parse;
pub mod search;
mod structure;

pub use parse::{parse_term, TermEnv};
pub use search::{decompose_search, BlockWitness, SearchFlavor, SearchOutcome};
pub use structure::restrict_graph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagTerm {
    Gen(VarList, VarList),
    Id(VarList),
    Copy(VarList),
    Del(VarList),
    Swap(VarList, VarList),
    Seq(Box<DiagTerm>, Box<DiagTerm>),
    Par(Box<DiagTerm>, Box<DiagTerm>),
}

impl DiagTerm {
    pub fn seq(a: DiagTerm, b: DiagTerm) -> DiagTerm {
        DiagTerm::Seq(Box::new(a), Box::new(b))
    }

    pub fn par(a: DiagTerm, b: DiagTerm) -> DiagTerm {
        DiagTerm::Par(Box::new(a), Box::new(b))
    }

    /// The generator of a signature, checking that both lists are strictly
    /// increasing.
    pub fn gen(dom: VarList, cod: VarList) -> Result<DiagTerm> {
        let t = DiagTerm::Gen(dom, cod);
        t.typ()?;
        Ok(t)
    }

    /// Domain and codomain, or the innermost ill-typed subterm.
    pub fn typ(&self) -> Result<(VarList, VarList)> {
        let bad = |reason: String| Error::TypeError { term: self.to_string(), reason };
        match self {
            DiagTerm::Gen(d, c) => {
                if !d.is_canonical() || !c.is_canonical() {
                    return Err(bad("generator lists must be strictly increasing".into()));
                }
                Ok((d.clone(), c.clone()))
            }
            DiagTerm::Id(o) => Ok((o.clone(), o.clone())),
            DiagTerm::Copy(o) => Ok((o.clone(), o.concat(o))),
            DiagTerm::Del(o) => Ok((o.clone(), VarList::empty())),
            DiagTerm::Swap(a, b) => Ok((a.concat(b), b.concat(a))),
            DiagTerm::Seq(f, g) => {
                let (fd, fc) = f.typ()?;
                let (gd, gc) = g.typ()?;
                if fc != gd {
                    return Err(bad(format!("{fc} does not match {gd}")));
                }
                Ok((fd, gc))
            }
            DiagTerm::Par(f, g) => {
                let (fd, fc) = f.typ()?;
                let (gd, gc) = g.typ()?;
                Ok((fd.concat(&gd), fc.concat(&gc)))
            }
        }
    }
}

fn list(f: &mut fmt::Formatter<'_>, l: &VarList) -> fmt::Result {
    f.write_str("[")?;
    for (i, v) in l.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{v}")?;
    }
    f.write_str("]")
}

impl DiagTerm {
    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, level: u8) -> fmt::Result {
        let wrap = match self {
            DiagTerm::Seq(..) => level > 0,
            DiagTerm::Par(..) => level > 1,
            _ => false,
        };
        if wrap {
            f.write_str("(")?;
        }
        match self {
            DiagTerm::Gen(d, c) => {
                f.write_str("gen")?;
                list(f, d)?;
                f.write_str(" -> ")?;
                list(f, c)?;
            }
            DiagTerm::Id(o) => {
                f.write_str("id")?;
                list(f, o)?;
            }
            DiagTerm::Copy(o) => {
                f.write_str("copy")?;
                list(f, o)?;
            }
            DiagTerm::Del(o) => {
                f.write_str("del")?;
                list(f, o)?;
            }
            DiagTerm::Swap(a, b) => {
                f.write_str("swap")?;
                list(f, a)?;
                list(f, b)?;
            }
            DiagTerm::Seq(a, b) => {
                a.fmt_at(f, 0)?;
                f.write_str(" ; ")?;
                b.fmt_at(f, 1)?;
            }
            DiagTerm::Par(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" * ")?;
                b.fmt_at(f, 2)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// Concrete syntax accepted by [`parse_term`].
impl fmt::Display for DiagTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Where a wire comes from: a boundary input or an output port of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Src {
    Input(usize),
    Port(usize, usize),
}

/// A generator occurrence; its signature is its label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Node {
    pub dom: VarList,
    pub cod: VarList,
    pub inputs: Vec<Src>,
}

/// A string diagram. Nodes only read from boundary inputs and earlier nodes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DiagGraph {
    pub dom: VarList,
    pub cod: VarList,
    pub nodes: Vec<Node>,
    pub outputs: Vec<Src>,
}

impl Morphism for DiagGraph {
    fn dom(&self) -> &VarList {
        &self.dom
    }
    fn cod(&self) -> &VarList {
        &self.cod
    }
}

impl fmt::Debug for DiagGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} {{", self.dom, self.cod)?;
        for (i, n) in self.nodes.iter().enumerate() {
            write!(f, " n{i}:{}->{}{:?}", n.dom, n.cod, n.inputs)?;
        }
        write!(f, " out {:?} }}", self.outputs)
    }
}

impl DiagGraph {
    pub fn identity(o: &VarList) -> Self {
        DiagGraph { dom: o.clone(), cod: o.clone(), nodes: Vec::new(), outputs: (0..o.len()).map(Src::Input).collect() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Variable carried by a wire.
    pub fn var_of(&self, s: Src) -> &crate::varspace::VarName {
        match s {
            Src::Input(i) => &self.dom[i],
            Src::Port(n, p) => &self.nodes[n].cod[p],
        }
    }

    /// Drops unused generators and renumbers the rest in post-order from the
    /// outputs. Idempotent.
    pub fn normalize(&self) -> DiagGraph {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut seen = vec![false; self.nodes.len()];
        fn visit(g: &DiagGraph, n: usize, seen: &mut [bool], order: &mut Vec<usize>) {
            if seen[n] {
                return;
            }
            seen[n] = true;
            for s in &g.nodes[n].inputs {
                if let Src::Port(m, _) = s {
                    visit(g, *m, seen, order);
                }
            }
            order.push(n);
        }
        for s in &self.outputs {
            if let Src::Port(m, _) = s {
                visit(self, *m, &mut seen, &mut order);
            }
        }
        let mut renum = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in order.iter().enumerate() {
            renum[old] = new;
        }
        let map = |s: &Src| match *s {
            Src::Input(i) => Src::Input(i),
            Src::Port(n, p) => Src::Port(renum[n], p),
        };
        DiagGraph {
            dom: self.dom.clone(),
            cod: self.cod.clone(),
            nodes: order
                .iter()
                .map(|&o| {
                    let n = &self.nodes[o];
                    Node { dom: n.dom.clone(), cod: n.cod.clone(), inputs: n.inputs.iter().map(map).collect() }
                })
                .collect(),
            outputs: self.outputs.iter().map(map).collect(),
        }
    }

    /// Wires the outputs of `self` into the inputs of `g`.
    fn then(&self, g: &DiagGraph) -> DiagGraph {
        let off = self.nodes.len();
        let map = |s: &Src| match *s {
            Src::Input(i) => self.outputs[i],
            Src::Port(n, p) => Src::Port(n + off, p),
        };
        let mut nodes = self.nodes.clone();
        nodes.extend(g.nodes.iter().map(|n| Node { dom: n.dom.clone(), cod: n.cod.clone(), inputs: n.inputs.iter().map(map).collect() }));
        DiagGraph { dom: self.dom.clone(), cod: g.cod.clone(), nodes, outputs: g.outputs.iter().map(map).collect() }
    }

    fn beside(&self, g: &DiagGraph) -> DiagGraph {
        let (ioff, noff) = (self.dom.len(), self.nodes.len());
        let map = |s: &Src| match *s {
            Src::Input(i) => Src::Input(i + ioff),
            Src::Port(n, p) => Src::Port(n + noff, p),
        };
        let mut nodes = self.nodes.clone();
        nodes.extend(g.nodes.iter().map(|n| Node { dom: n.dom.clone(), cod: n.cod.clone(), inputs: n.inputs.iter().map(map).collect() }));
        let mut outputs = self.outputs.clone();
        outputs.extend(g.outputs.iter().map(map));
        DiagGraph { dom: self.dom.concat(&g.dom), cod: self.cod.concat(&g.cod), nodes, outputs }
    }

    fn wiring(dom: &VarList, picks: &[usize]) -> DiagGraph {
        DiagGraph {
            dom: dom.clone(),
            cod: picks.iter().map(|&p| dom[p].clone()).collect(),
            nodes: Vec::new(),
            outputs: picks.iter().map(|&p| Src::Input(p)).collect(),
        }
    }

    /// Checks that nodes only read earlier wires of the right variables and
    /// that the outputs carry the codomain.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::TypeError { term: format!("{self:?}"), reason };
        let ok = |s: Src, before: usize| match s {
            Src::Input(i) => i < self.dom.len(),
            Src::Port(n, p) => n < before && p < self.nodes[n].cod.len(),
        };
        for (i, n) in self.nodes.iter().enumerate() {
            if !n.dom.is_canonical() || !n.cod.is_canonical() || n.inputs.len() != n.dom.len() {
                return Err(bad(format!("node {i} has a malformed signature")));
            }
            for (s, v) in n.inputs.iter().zip(n.dom.iter()) {
                if !ok(*s, i) || self.var_of(*s) != v {
                    return Err(bad(format!("node {i} reads a wire of the wrong type")));
                }
            }
        }
        if self.outputs.len() != self.cod.len() {
            return Err(bad("output count differs from the codomain".into()));
        }
        for (s, v) in self.outputs.iter().zip(self.cod.iter()) {
            if !ok(*s, self.nodes.len()) || self.var_of(*s) != v {
                return Err(bad("an output carries the wrong variable".into()));
            }
        }
        Ok(())
    }

    /// Boundary-to-boundary inputs used, as positions in the domain.
    pub fn used_inputs(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for s in self.nodes.iter().flat_map(|n| &n.inputs).chain(&self.outputs) {
            if let Src::Input(i) = s {
                out.insert(*i);
            }
        }
        out
    }
}

/// Turns a well-typed term into a graph.
pub fn elaborate(t: &DiagTerm) -> Result<DiagGraph> {
    let (dom, cod) = t.typ()?;
    fn go(t: &DiagTerm, ins: &[Src], nodes: &mut Vec<Node>) -> Vec<Src> {
        match t {
            DiagTerm::Gen(d, c) => {
                nodes.push(Node { dom: d.clone(), cod: c.clone(), inputs: ins.to_vec() });
                let n = nodes.len() - 1;
                (0..c.len()).map(|p| Src::Port(n, p)).collect()
            }
            DiagTerm::Id(_) => ins.to_vec(),
            DiagTerm::Copy(_) => ins.iter().chain(ins).copied().collect(),
            DiagTerm::Del(_) => Vec::new(),
            DiagTerm::Swap(a, _) => ins[a.len()..].iter().chain(&ins[..a.len()]).copied().collect(),
            DiagTerm::Seq(f, g) => {
                let mid = go(f, ins, nodes);
                go(g, &mid, nodes)
            }
            DiagTerm::Par(f, g) => {
                let n = f.typ().map(|(d, _)| d.len()).unwrap_or(0);
                let mut out = go(f, &ins[..n], nodes);
                out.extend(go(g, &ins[n..], nodes));
                out
            }
        }
    }
    let mut nodes = Vec::new();
    let ins: Vec<Src> = (0..dom.len()).map(Src::Input).collect();
    let outputs = go(t, &ins, &mut nodes);
    Ok(DiagGraph { dom, cod, nodes, outputs }.normalize())
}

pub fn normalize(g: &DiagGraph) -> DiagGraph {
    g.normalize()
}

pub fn diag_equal(a: &DiagGraph, b: &DiagGraph) -> bool {
    a.normalize() == b.normalize()
}

/// A term denoting the graph: one generator per step, with wirings between.
pub fn graph_to_term(g: &DiagGraph) -> DiagTerm {
    let mut bundle: Vec<Src> = (0..g.dom.len()).map(Src::Input).collect();
    let mut types = g.dom.clone();
    let mut term: Option<DiagTerm> = None;
    let push = |term: &mut Option<DiagTerm>, t: DiagTerm| {
        *term = Some(match term.take() {
            None => t,
            Some(prev) => DiagTerm::seq(prev, t),
        })
    };
    for (i, n) in g.nodes.iter().enumerate() {
        let mut picks: Vec<usize> = (0..bundle.len()).collect();
        picks.extend(n.inputs.iter().map(|s| bundle.iter().position(|b| b == s).expect("wire in scope")));
        if let Some(w) = structure::wiring_term(&types, &picks) {
            push(&mut term, w);
        }
        let gen = DiagTerm::Gen(n.dom.clone(), n.cod.clone());
        push(&mut term, if types.is_empty() { gen } else { DiagTerm::par(DiagTerm::Id(types.clone()), gen) });
        bundle.extend((0..n.cod.len()).map(|p| Src::Port(i, p)));
        types = types.concat(&n.cod);
    }
    let picks: Vec<usize> = g.outputs.iter().map(|s| bundle.iter().position(|b| b == s).expect("wire in scope")).collect();
    if let Some(w) = structure::wiring_term(&types, &picks) {
        push(&mut term, w);
    }
    term.unwrap_or(DiagTerm::Id(g.dom.clone()))
}

/// The free Markov category; generators are global, one per signature.
#[derive(Clone, Copy, Debug, Default)]
pub struct SynVar;

impl Markov for SynVar {
    type Mor = DiagGraph;

    fn name(&self) -> &'static str {
        "synvar"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities { has_conditionals: false, del_cancellative: false, equality_exact: true, tolerance: 0.0 }
    }

    fn identity(&self, o: &VarList) -> Result<DiagGraph> {
        Ok(DiagGraph::identity(o))
    }

    fn compose(&self, f: &DiagGraph, g: &DiagGraph) -> Result<DiagGraph> {
        check_endpoints(&f.cod, &g.dom)?;
        Ok(f.then(g).normalize())
    }

    fn tensor(&self, f: &DiagGraph, g: &DiagGraph) -> Result<DiagGraph> {
        Ok(f.beside(g).normalize())
    }

    fn copy(&self, o: &VarList) -> Result<DiagGraph> {
        let n = o.len();
        Ok(DiagGraph::wiring(o, &(0..n).chain(0..n).collect::<Vec<_>>()))
    }

    fn del(&self, o: &VarList) -> Result<DiagGraph> {
        Ok(DiagGraph::wiring(o, &[]))
    }

    fn swap(&self, a: &VarList, b: &VarList) -> Result<DiagGraph> {
        let (n, m) = (a.len(), b.len());
        Ok(DiagGraph::wiring(&a.concat(b), &(n..n + m).chain(0..n).collect::<Vec<_>>()))
    }

    fn equal(&self, f: &DiagGraph, g: &DiagGraph) -> bool {
        f.dom == g.dom && f.cod == g.cod && diag_equal(f, g)
    }

    fn structural(&self, src: &VarList, picks: &[usize]) -> Result<DiagGraph> {
        if let Some(&p) = picks.iter().find(|&&p| p >= src.len()) {
            return Err(Error::InvalidKernel(format!("pick {p} out of range")));
        }
        Ok(DiagGraph::wiring(src, picks))
    }
}

#[cfg(test)]
mod tests;
