//! The worked examples used by the tests, the harness and the fixtures.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::finstoch::{q, Dist, FinStoch};
use crate::gauss::Gauss;
use crate::kernels::{from_full, par, seq, Kernel};
use crate::synvar::{DiagGraph, Node, Src, SynVar};
use crate::varspace::{VarList, VarSet};

/// `z → {v, z}`: `v = 1` with probability 1/2 when `z = 0` and 3/4 when
/// `z = 1`.
pub fn coin(fs: &FinStoch, v: &str) -> Result<Kernel<FinStoch>> {
    let rows = vec![Dist::new([(0, q(1, 2)), (1, q(1, 2))])?, Dist::new([(0, q(1, 4)), (1, q(3, 4))])?];
    let core = fs.table(&VarList::of(&["z"]), &VarList::of(&[v]), rows)?;
    Kernel::new(VarSet::of(&["z"]), VarSet::of(&[v, "z"]), core)
}

/// A fair bit on `v`.
pub fn fair(fs: &FinStoch, v: &str) -> Result<Kernel<FinStoch>> {
    let core = fs.table(&VarList::empty(), &VarList::of(&[v]), vec![Dist::new([(0, q(1, 2)), (1, q(1, 2))])?])?;
    Kernel::new(VarSet::new(), VarSet::of(&[v]), core)
}

/// `g1`, `g2` and `f = g1 ⊕ g2` over bits.
pub fn coins() -> Result<(FinStoch, Kernel<FinStoch>, Kernel<FinStoch>, Kernel<FinStoch>)> {
    let fs = FinStoch::uniform(2);
    let (g1, g2) = (coin(&fs, "x")?, coin(&fs, "y")?);
    let f = par(&fs, &g1, &g2)?;
    Ok((fs, g1, g2, f))
}

/// The state `h` on `{x, y, z}`: a fair `z` followed by the two coins.
pub fn ci_state() -> Result<(FinStoch, Kernel<FinStoch>)> {
    let (fs, _, _, f) = coins()?;
    let h = seq(&fs, &fair(&fs, "z")?, &f)?;
    Ok((fs, h))
}

/// Like [`ci_state`] but with `y = x xor z`, so that `x` and `y` are
/// dependent given `z`.
pub fn xor_state() -> Result<(FinStoch, Kernel<FinStoch>)> {
    let fs = FinStoch::uniform(2);
    let x = coin(&fs, "x")?;
    // codes x*2 + z over the inputs, y over the output
    let rows = (0..4).map(|c| Dist::dirac((c >> 1) ^ (c & 1))).collect();
    let core = fs.table(&VarList::of(&["x", "z"]), &VarList::of(&["y"]), rows)?;
    let y = Kernel::new(VarSet::of(&["x", "z"]), VarSet::of(&["x", "y", "z"]), core)?;
    let h = seq(&fs, &seq(&fs, &fair(&fs, "z")?, &x)?, &y)?;
    Ok((fs, h))
}

/// `s_w`, `g_x`, `g_y` and the assembled state on `{w, x, y}`, with
/// `x = w + ξ_x` and `y = w + ξ_y` for standard noises.
pub fn gauss_parts() -> Result<(Gauss, [Kernel<Gauss>; 4])> {
    let g = Gauss::scalar();
    let one = |v: &str| VarList::of(&[v]);
    let sw = Kernel::new(VarSet::new(), VarSet::of(&["w"]), g.state(&one("w"), DMatrix::identity(1, 1), DVector::zeros(1))?)?;
    let noisy = |v: &str| -> Result<Kernel<Gauss>> {
        let core = g.map(&one("w"), &one(v), DMatrix::identity(1, 1), DMatrix::identity(1, 1), DVector::zeros(1))?;
        Kernel::new(VarSet::of(&["w"]), VarSet::of(&["w", v]), core)
    };
    let (gx, gy) = (noisy("x")?, noisy("y")?);
    let s = seq(&g, &sw, &par(&g, &gx, &gy)?)?;
    Ok((g, [sw, gx, gy, s]))
}

/// The diagram `c0 : [] → [w]`, `c1 : [w] → [x]`, `c2 : [w] → [y]`,
/// `d : [x, y] → [u]` with all four variables as outputs.
pub fn separating_diagram() -> DiagGraph {
    let node = |d: &[&str], c: &[&str], inputs: Vec<Src>| Node { dom: VarList::of(d), cod: VarList::of(c), inputs };
    DiagGraph {
        dom: VarList::empty(),
        cod: VarList::of(&["u", "w", "x", "y"]),
        nodes: vec![
            node(&[], &["w"], vec![]),
            node(&["w"], &["x"], vec![Src::Port(0, 0)]),
            node(&["w"], &["y"], vec![Src::Port(0, 0)]),
            node(&["x", "y"], &["u"], vec![Src::Port(1, 0), Src::Port(2, 0)]),
        ],
        outputs: vec![Src::Port(3, 0), Src::Port(0, 0), Src::Port(1, 0), Src::Port(2, 0)],
    }
    .normalize()
}

pub fn separating_kernel() -> Result<Kernel<SynVar>> {
    from_full(&SynVar, &separating_diagram())
}

/// The term text of [`separating_diagram`], as shipped in the fixture.
pub const SEPARATING_TERM: &str = "c0 ; copy[w] ; copy[w] * id[w] ; c1 * c2 * id[w] \
    ; copy[x] * copy[y] * id[w] ; id[x] * swap[x][y] * id[y] * id[w] ; d * id[x] * id[y] * id[w] \
    ; id[u] * swap[x, y][w]";

/// The generators named in [`SEPARATING_TERM`].
pub const SEPARATING_DEFINITIONS: [(&str, &str); 4] =
    [("c0", "gen[] -> [w]"), ("c1", "gen[w] -> [x]"), ("c2", "gen[w] -> [y]"), ("d", "gen[x, y] -> [u]")];
