//! Subkernels and decompositions of diagrams, read off the graph structure.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::kernels::random::{random_subset, RandomCore, TrialRng};
use crate::kernels::subkernel::{type_check, verify_witness};
use crate::kernels::{embed, from_full, kernel_equal, Decompose, Kernel, Refutation, SubkernelDecision, SubkernelOutcome, SubkernelWitness};
use crate::markov::{structural_from_primitives, Capabilities, Markov, Morphism};
use crate::varspace::{VarList, VarSet};

use super::{DiagGraph, DiagTerm, Node, Src, SynVar};

/// Terms as morphisms, so wirings can be spelled out with the primitives.
struct TermAlgebra;

#[derive(Clone, Debug)]
struct Typed {
    term: DiagTerm,
    dom: VarList,
    cod: VarList,
}

impl Morphism for Typed {
    fn dom(&self) -> &VarList {
        &self.dom
    }
    fn cod(&self) -> &VarList {
        &self.cod
    }
}

impl Markov for TermAlgebra {
    type Mor = Typed;

    fn name(&self) -> &'static str {
        "terms"
    }

    fn capabilities(&self) -> Capabilities {
        SynVar.capabilities()
    }

    fn identity(&self, o: &VarList) -> Result<Typed> {
        Ok(Typed { term: DiagTerm::Id(o.clone()), dom: o.clone(), cod: o.clone() })
    }

    fn compose(&self, f: &Typed, g: &Typed) -> Result<Typed> {
        let term = match (&f.term, &g.term) {
            (DiagTerm::Id(_), t) | (t, DiagTerm::Id(_)) => t.clone(),
            (a, b) => DiagTerm::seq(a.clone(), b.clone()),
        };
        Ok(Typed { term, dom: f.dom.clone(), cod: g.cod.clone() })
    }

    fn tensor(&self, f: &Typed, g: &Typed) -> Result<Typed> {
        let term = match (&f.term, &g.term) {
            (DiagTerm::Id(a), DiagTerm::Id(b)) => DiagTerm::Id(a.concat(b)),
            (DiagTerm::Id(a), t) | (t, DiagTerm::Id(a)) if a.is_empty() => t.clone(),
            (a, b) => DiagTerm::par(a.clone(), b.clone()),
        };
        Ok(Typed { term, dom: f.dom.concat(&g.dom), cod: f.cod.concat(&g.cod) })
    }

    fn copy(&self, o: &VarList) -> Result<Typed> {
        Ok(Typed { term: DiagTerm::Copy(o.clone()), dom: o.clone(), cod: o.concat(o) })
    }

    fn del(&self, o: &VarList) -> Result<Typed> {
        Ok(Typed { term: DiagTerm::Del(o.clone()), dom: o.clone(), cod: VarList::empty() })
    }

    fn swap(&self, a: &VarList, b: &VarList) -> Result<Typed> {
        Ok(Typed { term: DiagTerm::Swap(a.clone(), b.clone()), dom: a.concat(b), cod: b.concat(a) })
    }

    fn equal(&self, f: &Typed, g: &Typed) -> bool {
        match (super::elaborate(&f.term), super::elaborate(&g.term)) {
            (Ok(a), Ok(b)) => super::diag_equal(&a, &b),
            _ => false,
        }
    }
}

/// A term for the wiring `types → picks`, or `None` for the identity.
pub(super) fn wiring_term(types: &VarList, picks: &[usize]) -> Option<DiagTerm> {
    if picks.len() == types.len() && picks.iter().enumerate().all(|(i, &p)| i == p) {
        return None;
    }
    structural_from_primitives(&TermAlgebra, types, picks).ok().map(|t| t.term)
}

/// Splits the full diagram `g : X → Z` of a kernel as `(b ⊕ id_U) ⊙ h`
/// where `b : dom → cod` computes the `cod ∖ dom` outputs of `g`. Returns
/// the full diagrams of `b` and of `h : cod ∪ X → Z`.
pub fn restrict_graph(g: &DiagGraph, dom: &VarSet, cod: &VarSet) -> std::result::Result<(DiagGraph, DiagGraph), Refutation> {
    let src_of: BTreeMap<_, Src> = g.cod.iter().cloned().zip(g.outputs.iter().copied()).collect();
    let mut inside = vec![false; g.nodes.len()];
    let mut stack: Vec<Src> = cod.difference(dom).iter().map(|v| src_of[v]).collect();
    while let Some(s) = stack.pop() {
        match s {
            Src::Input(i) => {
                if !dom.contains(&g.dom[i]) {
                    return Err(Refutation::CompletionDependence);
                }
            }
            Src::Port(n, _) => {
                if !inside[n] {
                    inside[n] = true;
                    stack.extend(g.nodes[n].inputs.iter().copied());
                }
            }
        }
    }
    let exposed: BTreeMap<Src, _> = cod.iter().rev().map(|v| (src_of[v], v.clone())).collect();
    let visible = |s: &Src| match s {
        Src::Port(n, _) if inside[*n] => exposed.contains_key(s),
        _ => true,
    };
    let outside = g.nodes.iter().enumerate().filter(|(i, _)| !inside[*i]);
    let consumers = outside.flat_map(|(_, n)| n.inputs.iter()).chain(
        g.cod.iter().zip(&g.outputs).filter(|(v, _)| !cod.contains(v)).map(|(_, s)| s),
    );
    for s in consumers {
        if !visible(s) {
            return Err(Refutation::ReplayFailure);
        }
    }

    let dl = dom.to_list();
    let mut renum = vec![usize::MAX; g.nodes.len()];
    let mut b_nodes = Vec::new();
    let mut h_nodes = Vec::new();
    for (i, n) in g.nodes.iter().enumerate() {
        if inside[i] {
            renum[i] = b_nodes.len();
            b_nodes.push(n);
        } else {
            renum[i] = h_nodes.len();
            h_nodes.push(n);
        }
    }
    let b_src = |s: &Src| match *s {
        Src::Input(i) => Src::Input(dl.position(&g.dom[i]).expect("input in domain")),
        Src::Port(n, p) => Src::Port(renum[n], p),
    };
    let cl = cod.to_list();
    let b = DiagGraph {
        dom: dl.clone(),
        cod: cl.clone(),
        nodes: b_nodes.iter().map(|n| Node { dom: n.dom.clone(), cod: n.cod.clone(), inputs: n.inputs.iter().map(b_src).collect() }).collect(),
        outputs: cl.iter().map(|v| b_src(&src_of[v])).collect(),
    };

    let hl = cod.union(&g.dom.to_set()).to_list();
    let h_src = |s: &Src| match *s {
        Src::Input(i) => Src::Input(hl.position(&g.dom[i]).expect("input in domain")),
        Src::Port(n, _) if inside[n] => Src::Input(hl.position(&exposed[s]).expect("exposed wire")),
        Src::Port(n, p) => Src::Port(renum[n], p),
    };
    let h = DiagGraph {
        dom: hl.clone(),
        cod: g.cod.clone(),
        nodes: h_nodes.iter().map(|n| Node { dom: n.dom.clone(), cod: n.cod.clone(), inputs: n.inputs.iter().map(h_src).collect() }).collect(),
        outputs: g.cod.iter().map(|v| match hl.position(v) {
            Some(i) => Src::Input(i),
            None => h_src(&src_of[v]),
        }).collect(),
    };
    Ok((b.normalize(), h.normalize()))
}

fn split(k: &Kernel<SynVar>, dom: &VarSet, cod: &VarSet) -> Result<std::result::Result<(Kernel<SynVar>, Kernel<SynVar>), Refutation>> {
    let full = embed(&SynVar, k)?;
    Ok(match restrict_graph(&full, dom, cod) {
        Ok((b, h)) => Ok((from_full(&SynVar, &b)?, from_full(&SynVar, &h)?)),
        Err(r) => Err(r),
    })
}

impl Decompose for SynVar {
    type Mask = ();

    fn minimal_witnesses(&self) -> bool {
        false
    }

    fn full_mask(&self, _: &Kernel<Self>) -> Result<()> {
        Ok(())
    }

    fn is_full(&self, _: &()) -> bool {
        true
    }

    fn restrict(&self, k: &Kernel<Self>, _: &(), dom: &VarSet, cod: &VarSet) -> Result<Option<(Kernel<Self>, ())>> {
        Ok(split(k, dom, cod)?.ok().map(|(b, _)| (b, ())))
    }

    fn split_seq(&self, k: &Kernel<Self>, _: &(), mid: &VarSet) -> Result<Option<((Kernel<Self>, ()), (Kernel<Self>, ()))>> {
        Ok(split(k, k.dom(), mid)?.ok().map(|(b, h)| ((b, ()), (h, ()))))
    }

    fn equal_on(&self, f: &Kernel<Self>, g: &Kernel<Self>, _: &()) -> bool {
        kernel_equal(self, f, g)
    }
}

impl SubkernelDecision for SynVar {
    fn decide_subkernel(&self, f: &Kernel<Self>, g: &Kernel<Self>) -> Result<SubkernelOutcome<Self>> {
        if let Some(r) = type_check(f.dom(), f.cod(), g) {
            return Ok(SubkernelOutcome::Refuted(r));
        }
        let (b, h) = match split(g, f.dom(), f.cod())? {
            Ok(parts) => parts,
            Err(r) => return Ok(SubkernelOutcome::Refuted(r)),
        };
        if !kernel_equal(self, &b, f) {
            return Ok(SubkernelOutcome::Refuted(Refutation::MarginalMismatch));
        }
        let w = SubkernelWitness { extension_vars: g.dom().difference(f.dom()), continuation: h };
        if !verify_witness(self, f, g, &w) {
            return Ok(SubkernelOutcome::Refuted(Refutation::ReplayFailure));
        }
        Ok(SubkernelOutcome::Witness(w))
    }
}

impl RandomCore for SynVar {
    /// One or two generators over random parts of the domain, sharing the
    /// outputs between them.
    fn random_core(&self, rng: &mut TrialRng, dom: &VarList, cod: &VarList) -> Result<DiagGraph> {
        let outs = cod.to_set();
        let first = random_subset(rng, &outs, 0.5);
        let parts: Vec<VarSet> = [first.clone(), outs.difference(&first)].into_iter().filter(|p| !p.is_empty()).collect();
        let mut nodes = Vec::new();
        let mut source: BTreeMap<_, Src> = BTreeMap::new();
        for part in parts {
            let reads = random_subset(rng, &dom.to_set(), 0.6);
            let inputs = reads.iter().map(|v| Src::Input(dom.position(v).expect("in domain"))).collect();
            let pl = part.to_list();
            for (p, v) in pl.iter().enumerate() {
                source.insert(v.clone(), Src::Port(nodes.len(), p));
            }
            nodes.push(Node { dom: reads.to_list(), cod: pl, inputs });
        }
        let g = DiagGraph { dom: dom.clone(), cod: cod.clone(), nodes, outputs: cod.iter().map(|v| source[v]).collect() };
        Ok(g.normalize())
    }
}
