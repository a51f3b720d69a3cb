//! The JSON kernel file: one instance plus named kernels over it.
//!
//! ```json
//! {
//!   "instance": "finstoch",
//!   "default_alphabet": ["0", "1"],
//!   "kernels": {
//!     "g1": {
//!       "dom": ["z"], "cod": ["x", "z"],
//!       "rows": [
//!         { "given": { "z": "0" }, "outcomes": [ { "values": { "x": "0" }, "p": "1/2" }, … ] },
//!         …
//!       ]
//!     }
//!   }
//! }
//! ```
//!
//! Rows list the fresh outputs `cod ∖ dom` for every assignment of `dom`.
//! Relations omit `p`. Gaussian kernels give `m`, `cov` and `mean` over the
//! fresh outputs. Diagram kernels give a `term` of type `dom → cod`, in any
//! wire order; `definitions` name terms for later use and `diagrams` names
//! closed or open diagrams for equality checks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::finrel::FinRel;
use crate::finstoch::{format_q, parse_q, Alphabet, Dist, FinStoch, Memory};
use crate::gauss::Gauss;
use crate::kernels::{embed, from_full, FrameCondition, Kernel};
use crate::markov::{Assignment, Markov, Morphism};
use crate::synvar::{elaborate, graph_to_term, parse_term, DiagGraph, Src, SynVar, TermEnv};
use crate::varspace::{VarList, VarName, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceTag {
    Finstoch,
    Finrel,
    Gauss,
    Synvar,
}

impl fmt::Display for InstanceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceTag::Finstoch => "finstoch",
            InstanceTag::Finrel => "finrel",
            InstanceTag::Gauss => "gauss",
            InstanceTag::Synvar => "synvar",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub instance: InstanceTag,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alphabets: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_alphabet: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dimensions: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub definitions: Vec<Definition>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub diagrams: BTreeMap<String, String>,
    #[serde(default)]
    pub kernels: BTreeMap<String, KernelSpec>,
    /// The frame condition the kernels are a counterexample to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Definition {
    pub name: String,
    pub term: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub dom: Vec<String>,
    pub cod: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<RowSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowSpec {
    #[serde(default)]
    pub given: BTreeMap<String, String>,
    pub outcomes: Vec<OutcomeSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSpec {
    #[serde(default)]
    pub values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
}

/// An instance with its named kernels.
pub struct Model<M: Markov> {
    pub instance: M,
    pub kernels: BTreeMap<String, Kernel<M>>,
    pub condition: Option<FrameCondition>,
}

impl<M: Markov> Model<M> {
    pub fn kernel(&self, name: &str) -> Result<&Kernel<M>> {
        self.kernels.get(name).ok_or_else(|| Error::File(format!("no kernel named `{name}`")))
    }
}

pub enum Loaded {
    FinStoch(Model<FinStoch>),
    FinRel(Model<FinRel>),
    Gauss(Model<Gauss>),
    SynVar(Model<SynVar>, BTreeMap<String, DiagGraph>),
}

impl KernelFile {
    pub fn from_json(text: &str) -> Result<KernelFile> {
        serde_json::from_str(text).map_err(|e| {
            Error::Parse(ParseError { line: e.line(), column: e.column(), message: e.to_string(), expected: Vec::new() })
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("kernel files serialize")
    }

    pub fn read(path: &Path) -> Result<KernelFile> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::File(format!("{}: {e}", path.display())))?;
        KernelFile::from_json(&text)
    }

    pub fn load(&self) -> Result<Loaded> {
        let condition = match &self.condition {
            None => None,
            Some(c) => Some(FrameCondition::from_name(c).ok_or_else(|| Error::File(format!("condition: unknown frame condition `{c}`")))?),
        };
        Ok(match self.instance {
            InstanceTag::Finstoch => {
                let fs = FinStoch::new(self.alphabet_assignment()?);
                let kernels = self.each_kernel(|name, spec| finstoch_kernel(&fs, name, spec))?;
                Loaded::FinStoch(Model { instance: fs, kernels, condition })
            }
            InstanceTag::Finrel => {
                let fr = FinRel::new(self.alphabet_assignment()?);
                let kernels = self.each_kernel(|name, spec| finrel_kernel(&fr, name, spec))?;
                Loaded::FinRel(Model { instance: fr, kernels, condition })
            }
            InstanceTag::Gauss => {
                let mut theta = Assignment { default: self.default_dimension, overrides: BTreeMap::new() };
                for (v, d) in &self.dimensions {
                    theta.overrides.insert(var(v, "dimensions")?, *d);
                }
                let mut g = Gauss::new(theta);
                if let Some(t) = self.tolerance {
                    g = g.with_tolerance(t);
                }
                let kernels = self.each_kernel(|name, spec| gauss_kernel(&g, name, spec))?;
                Loaded::Gauss(Model { instance: g, kernels, condition })
            }
            InstanceTag::Synvar => {
                let mut env = TermEnv::new();
                for (i, d) in self.definitions.iter().enumerate() {
                    let at = format!("definitions[{i}]");
                    let t = parse_term(&d.term, &env).map_err(|e| located(&at, e))?;
                    env.insert(d.name.clone(), t);
                }
                let kernels = self.each_kernel(|name, spec| synvar_kernel(&env, name, spec))?;
                let diagrams = self
                    .diagrams
                    .iter()
                    .map(|(name, text)| {
                        let at = format!("diagrams.{name}");
                        let g = elaborate(&parse_term(text, &env).map_err(|e| located(&at, e))?).map_err(|e| located(&at, e))?;
                        Ok((name.clone(), g))
                    })
                    .collect::<Result<_>>()?;
                Loaded::SynVar(Model { instance: SynVar, kernels, condition }, diagrams)
            }
        })
    }

    fn alphabet_assignment(&self) -> Result<Assignment<Alphabet>> {
        let default = match &self.default_alphabet {
            Some(vals) => Some(Alphabet::new(vals.clone()).map_err(|e| located("default_alphabet", e))?),
            None => None,
        };
        let mut theta = Assignment { default, overrides: BTreeMap::new() };
        for (v, vals) in &self.alphabets {
            let at = format!("alphabets.{v}");
            theta.overrides.insert(var(v, &at)?, Alphabet::new(vals.clone()).map_err(|e| located(&at, e))?);
        }
        Ok(theta)
    }

    fn each_kernel<M: Markov>(&self, mut f: impl FnMut(&str, &KernelSpec) -> Result<Kernel<M>>) -> Result<BTreeMap<String, Kernel<M>>> {
        self.kernels.iter().map(|(name, spec)| Ok((name.clone(), f(name, spec)?))).collect()
    }
}

/// Prefixes an error with the path of the offending field.
fn located(at: &str, e: Error) -> Error {
    match e {
        Error::Parse(p) => Error::File(format!("{at}: line {}, column {}: {}", p.line, p.column, p.message)),
        other => Error::File(format!("{at}: {other}")),
    }
}

fn var(name: &str, at: &str) -> Result<VarName> {
    VarName::new(name).map_err(|e| located(at, e))
}

fn var_set(names: &[String], at: &str) -> Result<VarSet> {
    let mut out = VarSet::new();
    for n in names {
        if !out.insert(var(n, at)?) {
            return Err(located(at, Error::DuplicateVariable(n.clone())));
        }
    }
    Ok(out)
}

fn endpoints(name: &str, spec: &KernelSpec) -> Result<(VarSet, VarSet)> {
    let dom = var_set(&spec.dom, &format!("kernels.{name}.dom"))?;
    let cod = var_set(&spec.cod, &format!("kernels.{name}.cod"))?;
    if !dom.is_subset(&cod) {
        return Err(Error::File(format!("kernels.{name}: inputs {dom} are not among the outputs {cod}")));
    }
    Ok((dom, cod))
}

fn memory(map: &BTreeMap<String, String>, expected: &VarSet, at: &str) -> Result<Memory> {
    let keys: BTreeSet<&str> = map.keys().map(String::as_str).collect();
    let want: BTreeSet<&str> = expected.iter().map(VarName::as_str).collect();
    if keys != want {
        return Err(Error::File(format!("{at}: expected values for {expected}, got {{{}}}", keys.into_iter().collect::<Vec<_>>().join(", "))));
    }
    map.iter().map(|(k, v)| Ok((var(k, at)?, v.clone()))).collect()
}

/// Row payloads indexed by input code, each a list of `(output code, p)`.
fn coded_rows(
    name: &str,
    spec: &KernelSpec,
    dom: &VarSet,
    fresh: &VarSet,
    inputs: usize,
    code_of: impl Fn(&VarList, &Memory) -> Result<usize>,
) -> Result<Vec<Vec<(usize, Option<String>)>>> {
    let rows = spec.rows.as_ref().ok_or_else(|| Error::File(format!("kernels.{name}: missing `rows`")))?;
    let (dl, fl) = (dom.to_list(), fresh.to_list());
    let mut out: Vec<Option<Vec<(usize, Option<String>)>>> = vec![None; inputs];
    for (i, row) in rows.iter().enumerate() {
        let at = format!("kernels.{name}.rows[{i}]");
        let given = memory(&row.given, dom, &format!("{at}.given"))?;
        let d = code_of(&dl, &given).map_err(|e| located(&at, e))?;
        if out[d].is_some() {
            return Err(Error::File(format!("{at}: input listed twice")));
        }
        let outcomes = row
            .outcomes
            .iter()
            .enumerate()
            .map(|(j, o)| {
                let at = format!("{at}.outcomes[{j}]");
                let m = memory(&o.values, fresh, &at)?;
                Ok((code_of(&fl, &m).map_err(|e| located(&at, e))?, o.p.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        out[d] = Some(outcomes);
    }
    out.into_iter()
        .enumerate()
        .map(|(d, r)| r.ok_or_else(|| Error::File(format!("kernels.{name}.rows: no row for input #{d}"))))
        .collect()
}

fn no_extra(name: &str, spec: &KernelSpec, allowed: &[&str]) -> Result<()> {
    let present = [
        ("rows", spec.rows.is_some()),
        ("m", spec.m.is_some()),
        ("cov", spec.cov.is_some()),
        ("mean", spec.mean.is_some()),
        ("term", spec.term.is_some()),
    ];
    match present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
        Some((k, _)) => Err(Error::File(format!("kernels.{name}: field `{k}` does not belong to this instance"))),
        None => Ok(()),
    }
}

fn finstoch_kernel(fs: &FinStoch, name: &str, spec: &KernelSpec) -> Result<Kernel<FinStoch>> {
    no_extra(name, spec, &["rows"])?;
    let (dom, cod) = endpoints(name, spec)?;
    let fresh = cod.difference(&dom);
    let at = format!("kernels.{name}");
    let inputs = fs.radix(&dom.to_list()).map_err(|e| located(&at, e))?.size();
    let coded = coded_rows(name, spec, &dom, &fresh, inputs, |l, m| fs.code_of(l, m))?;
    let rows = coded
        .into_iter()
        .enumerate()
        .map(|(d, r)| {
            let at = format!("{at}.rows (input #{d})");
            let entries = r
                .into_iter()
                .map(|(c, p)| {
                    let p = p.ok_or_else(|| Error::File(format!("{at}: outcome without `p`")))?;
                    Ok((c, parse_q(&p).map_err(|e| located(&at, e))?))
                })
                .collect::<Result<Vec<_>>>()?;
            Dist::new(entries).map_err(|e| located(&at, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let core = fs.table(&dom.to_list(), &fresh.to_list(), rows).map_err(|e| located(&at, e))?;
    Kernel::new(dom, cod, core).map_err(|e| located(&at, e))
}

fn finrel_kernel(fr: &FinRel, name: &str, spec: &KernelSpec) -> Result<Kernel<FinRel>> {
    no_extra(name, spec, &["rows"])?;
    let (dom, cod) = endpoints(name, spec)?;
    let fresh = cod.difference(&dom);
    let at = format!("kernels.{name}");
    let inputs = fr.radix(&dom.to_list()).map_err(|e| located(&at, e))?.size();
    let coded = coded_rows(name, spec, &dom, &fresh, inputs, |l, m| fr.code_of(l, m))?;
    if coded.iter().flatten().any(|(_, p)| p.is_some()) {
        return Err(Error::File(format!("{at}: relations take no probabilities")));
    }
    let rows = coded.into_iter().map(|r| r.into_iter().map(|(c, _)| c).collect()).collect();
    let core = fr.table(&dom.to_list(), &fresh.to_list(), rows).map_err(|e| located(&at, e))?;
    Kernel::new(dom, cod, core).map_err(|e| located(&at, e))
}

fn matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, at: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::File(format!("{at}: expected a {nrows}x{ncols} matrix")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn gauss_kernel(g: &Gauss, name: &str, spec: &KernelSpec) -> Result<Kernel<Gauss>> {
    no_extra(name, spec, &["m", "cov", "mean"])?;
    let (dom, cod) = endpoints(name, spec)?;
    let fresh = cod.difference(&dom);
    let at = format!("kernels.{name}");
    let (dl, fl) = (dom.to_list(), fresh.to_list());
    let (n, k) = (g.dim(&dl).map_err(|e| located(&at, e))?, g.dim(&fl).map_err(|e| located(&at, e))?);
    let m = match &spec.m {
        Some(rows) => matrix(rows, k, n, &format!("{at}.m"))?,
        None if n == 0 => DMatrix::zeros(k, 0),
        None => return Err(Error::File(format!("{at}: missing `m`"))),
    };
    let cov = match &spec.cov {
        Some(rows) => matrix(rows, k, k, &format!("{at}.cov"))?,
        None => DMatrix::zeros(k, k),
    };
    let mean = match &spec.mean {
        Some(v) if v.len() == k => DVector::from_column_slice(v),
        Some(_) => return Err(Error::File(format!("{at}.mean: expected {k} entries"))),
        None => DVector::zeros(k),
    };
    let core = g.map(&dl, &fl, m, cov, mean).map_err(|e| located(&at, e))?;
    Kernel::new(dom, cod, core).map_err(|e| located(&at, e))
}

/// Reorders the wires of `g` so both ends are in canonical order.
pub fn canonical_wires(g: &DiagGraph) -> Result<DiagGraph> {
    if g.dom.has_duplicates() || g.cod.has_duplicates() {
        return Err(Error::InvalidKernel("diagram ends repeat a variable".into()));
    }
    let dom = g.dom.to_set().to_list();
    let cod = g.cod.to_set().to_list();
    let remap: Vec<usize> = g.dom.iter().map(|v| dom.position(v).expect("same set")).collect();
    let re = |s: &Src| match *s {
        Src::Input(i) => Src::Input(remap[i]),
        p => p,
    };
    let nodes = g
        .nodes
        .iter()
        .map(|n| crate::synvar::Node { dom: n.dom.clone(), cod: n.cod.clone(), inputs: n.inputs.iter().map(re).collect() })
        .collect();
    let outputs = cod.iter().map(|v| re(&g.outputs[g.cod.position(v).expect("same set")])).collect();
    Ok(DiagGraph { dom, cod, nodes, outputs }.normalize())
}

fn synvar_kernel(env: &TermEnv, name: &str, spec: &KernelSpec) -> Result<Kernel<SynVar>> {
    no_extra(name, spec, &["term"])?;
    let (dom, cod) = endpoints(name, spec)?;
    let at = format!("kernels.{name}.term");
    let text = spec.term.as_ref().ok_or_else(|| Error::File(format!("kernels.{name}: missing `term`")))?;
    let g = elaborate(&parse_term(text, env).map_err(|e| located(&at, e))?).map_err(|e| located(&at, e))?;
    if g.dom.to_set() != dom || g.cod.to_set() != cod {
        return Err(Error::File(format!("{at}: term has type {} -> {}, expected {dom} -> {cod}", g.dom, g.cod)));
    }
    from_full(&SynVar, &canonical_wires(&g).map_err(|e| located(&at, e))?).map_err(|e| located(&at, e))
}

fn names(s: &VarSet) -> Vec<String> {
    s.iter().map(|v| v.as_str().to_string()).collect()
}

fn spec_shell<M: Markov>(k: &Kernel<M>) -> KernelSpec {
    KernelSpec { dom: names(k.dom()), cod: names(k.cod()), rows: None, m: None, cov: None, mean: None, term: None }
}

fn string_map(m: &Memory) -> BTreeMap<String, String> {
    m.iter().map(|(k, v)| (k.as_str().to_string(), v.clone())).collect()
}

/// Instances whose kernels can be written to a kernel file.
pub trait FileInstance: Markov + Sized {
    fn tag(&self) -> InstanceTag;
    /// Declares the objects of `vars` in `file`.
    fn declare(&self, vars: &VarSet, file: &mut KernelFile) -> Result<()>;
    fn spec(&self, k: &Kernel<Self>) -> Result<KernelSpec>;
}

impl FileInstance for FinStoch {
    fn tag(&self) -> InstanceTag {
        InstanceTag::Finstoch
    }

    fn declare(&self, vars: &VarSet, file: &mut KernelFile) -> Result<()> {
        for v in vars {
            file.alphabets.insert(v.as_str().to_string(), self.alphabet(v)?.values().to_vec());
        }
        Ok(())
    }

    fn spec(&self, k: &Kernel<Self>) -> Result<KernelSpec> {
        let core = k.core();
        let rows = core
            .rows()
            .iter()
            .enumerate()
            .map(|(d, row)| {
                Ok(RowSpec {
                    given: string_map(&self.memory_of(core.dom(), d)?),
                    outcomes: row
                        .iter()
                        .map(|(c, p)| Ok(OutcomeSpec { values: string_map(&self.memory_of(core.cod(), *c)?), p: Some(format_q(p)) }))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(KernelSpec { rows: Some(rows), ..spec_shell(k) })
    }
}

impl FileInstance for FinRel {
    fn tag(&self) -> InstanceTag {
        InstanceTag::Finrel
    }

    fn declare(&self, vars: &VarSet, file: &mut KernelFile) -> Result<()> {
        for v in vars {
            file.alphabets.insert(v.as_str().to_string(), self.alphabet(v)?.values().to_vec());
        }
        Ok(())
    }

    fn spec(&self, k: &Kernel<Self>) -> Result<KernelSpec> {
        let core = k.core();
        let rows = core
            .rows()
            .iter()
            .enumerate()
            .map(|(d, row)| {
                Ok(RowSpec {
                    given: string_map(&self.memory_of(core.dom(), d)?),
                    outcomes: row
                        .iter()
                        .map(|c| Ok(OutcomeSpec { values: string_map(&self.memory_of(core.cod(), *c)?), p: None }))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(KernelSpec { rows: Some(rows), ..spec_shell(k) })
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl FileInstance for Gauss {
    fn tag(&self) -> InstanceTag {
        InstanceTag::Gauss
    }

    fn declare(&self, vars: &VarSet, file: &mut KernelFile) -> Result<()> {
        for v in vars {
            file.dimensions.insert(v.as_str().to_string(), self.var_dim(v)?);
        }
        file.tolerance = Some(self.tolerance());
        Ok(())
    }

    fn spec(&self, k: &Kernel<Self>) -> Result<KernelSpec> {
        let c = k.core();
        Ok(KernelSpec {
            m: (c.m.ncols() > 0).then(|| rows_of(&c.m)),
            cov: Some(rows_of(&c.cov)),
            mean: Some(c.mean.iter().copied().collect()),
            ..spec_shell(k)
        })
    }
}

impl FileInstance for SynVar {
    fn tag(&self) -> InstanceTag {
        InstanceTag::Synvar
    }

    fn declare(&self, _: &VarSet, _: &mut KernelFile) -> Result<()> {
        Ok(())
    }

    fn spec(&self, k: &Kernel<Self>) -> Result<KernelSpec> {
        Ok(KernelSpec { term: Some(graph_to_term(&embed(self, k)?).to_string()), ..spec_shell(k) })
    }
}

/// A kernel file holding the given kernels.
pub fn to_file<M: FileInstance>(m: &M, kernels: &[(String, &Kernel<M>)], condition: Option<FrameCondition>) -> Result<KernelFile> {
    let mut file = KernelFile {
        instance: m.tag(),
        alphabets: BTreeMap::new(),
        default_alphabet: None,
        dimensions: BTreeMap::new(),
        default_dimension: None,
        tolerance: None,
        definitions: Vec::new(),
        diagrams: BTreeMap::new(),
        kernels: BTreeMap::new(),
        condition: condition.map(|c| c.name().to_string()),
    };
    let vars = kernels.iter().fold(VarSet::new(), |acc, (_, k)| acc.union(k.cod()));
    m.declare(&vars, &mut file)?;
    for (name, k) in kernels {
        file.kernels.insert(name.clone(), m.spec(k)?);
    }
    Ok(file)
}
