//! Searching a closed diagram for the block shapes of the decomposition-based
//! independence notions.
//!
//! Blocks: `0` produces `W` (and part of `U`) from nothing; `1` and `2` read
//! only the `W` wires and produce `X` and `Y` respectively; `3` (extended
//! shape only) may read every output wire of the earlier blocks. Generators
//! are assigned to blocks by propagating backwards from the outputs, which
//! determines every generator, so each split of `U` is checked in linear
//! time.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::varspace::{VarName, VarSet};

use super::{DiagGraph, Src};

pub const NODE_BUDGET: usize = 20;
pub const EXTRA_BUDGET: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchFlavor {
    /// `U` is discarded first, then the plain shape is sought.
    Dibi,
    Superset,
    ExtSuperset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockWitness {
    /// Block of every generator of the searched (normalized) diagram.
    pub node_blocks: Vec<u8>,
    /// Block producing each extra variable.
    pub extra_blocks: BTreeMap<VarName, u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum SearchOutcome {
    Witness(BlockWitness),
    Refuted { searched: usize },
}

impl SearchOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, SearchOutcome::Witness(_))
    }
}

fn assign(g: &DiagGraph, block_of: &BTreeMap<&VarName, u8>, w: &VarSet) -> Option<Vec<u8>> {
    let mut ws = BTreeSet::new();
    let mut os = BTreeSet::new();
    for (v, s) in g.cod.iter().zip(&g.outputs) {
        if w.contains(v) {
            ws.insert(*s);
        }
        if block_of[v] < 3 {
            os.insert(*s);
        }
    }
    let mut req: Vec<Option<u8>> = vec![None; g.nodes.len()];
    let mut stack = Vec::new();
    let need = |s: Src, b: u8, req: &mut Vec<Option<u8>>, stack: &mut Vec<usize>| -> bool {
        let Src::Port(n, _) = s else { return true };
        let free = match b {
            1 | 2 => ws.contains(&s),
            3 => os.contains(&s),
            _ => false,
        };
        if free {
            return true;
        }
        match req[n] {
            Some(c) => c == b,
            None => {
                req[n] = Some(b);
                stack.push(n);
                true
            }
        }
    };
    for (v, s) in g.cod.iter().zip(&g.outputs) {
        if !need(*s, block_of[v], &mut req, &mut stack) {
            return None;
        }
    }
    while let Some(n) = stack.pop() {
        let b = req[n].expect("assigned");
        for s in &g.nodes[n].inputs {
            if !need(*s, b, &mut req, &mut stack) {
                return None;
            }
        }
    }
    Some(req.into_iter().map(|b| b.unwrap_or(0)).collect())
}

/// Looks for a decomposition of the closed diagram `g` of the given shape.
pub fn decompose_search(g: &DiagGraph, w: &VarSet, x: &VarSet, y: &VarSet, u: &VarSet, flavor: SearchFlavor) -> Result<SearchOutcome> {
    if !g.dom.is_empty() {
        return Err(Error::UnsupportedShape(format!("diagram has inputs {}", g.dom)));
    }
    let all = w.union(x).union(y).union(u);
    if g.cod.to_set() != all || g.cod.has_duplicates() {
        return Err(Error::ShapeError(format!("outputs {} are not exactly {all}", g.cod)));
    }
    let (g, u, blocks) = match flavor {
        SearchFlavor::Dibi => {
            let keep: Vec<usize> = (0..g.cod.len()).filter(|&i| !u.contains(&g.cod[i])).collect();
            let pruned = DiagGraph {
                dom: g.dom.clone(),
                cod: keep.iter().map(|&i| g.cod[i].clone()).collect(),
                nodes: g.nodes.clone(),
                outputs: keep.iter().map(|&i| g.outputs[i]).collect(),
            };
            (pruned.normalize(), VarSet::new(), 3u8)
        }
        SearchFlavor::Superset => (g.normalize(), u.clone(), 3),
        SearchFlavor::ExtSuperset => (g.normalize(), u.clone(), 4),
    };
    if g.nodes.len() > NODE_BUDGET {
        return Err(Error::Budget(format!("{} generators exceed the limit of {NODE_BUDGET}", g.nodes.len())));
    }
    if u.len() > EXTRA_BUDGET {
        return Err(Error::Budget(format!("{} extra variables exceed the limit of {EXTRA_BUDGET}", u.len())));
    }
    let extra: Vec<&VarName> = u.iter().collect();
    let total = (blocks as usize).pow(extra.len() as u32);
    for code in 0..total {
        let mut block_of: BTreeMap<&VarName, u8> = BTreeMap::new();
        for v in w {
            block_of.insert(v, 0);
        }
        for v in x {
            block_of.insert(v, 1);
        }
        for v in y {
            block_of.insert(v, 2);
        }
        let mut c = code;
        for v in &extra {
            block_of.insert(v, (c % blocks as usize) as u8);
            c /= blocks as usize;
        }
        if let Some(node_blocks) = assign(&g, &block_of, w) {
            let extra_blocks = extra.iter().map(|v| ((*v).clone(), block_of[v])).collect();
            return Ok(SearchOutcome::Witness(BlockWitness { node_blocks, extra_blocks }));
        }
    }
    Ok(SearchOutcome::Refuted { searched: total })
}
