//! Formulas of the `{⊤, I, ⟨S ▹ T⟩, ∧, ∗, ⨟}` fragment and their
//! satisfaction by kernels.

use std::fmt;

use crate::varspace::VarSet;

mod parse;
mod sat;

pub use parse::parse;
pub use sat::{sat_atomic, satisfies, satisfies_with_witness, SatMode, SatStrategy, Witness, DEFAULT_BUDGET};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    Top,
    Emp,
    Atom(VarSet, VarSet),
    And(Box<Formula>, Box<Formula>),
    Star(Box<Formula>, Box<Formula>),
    Fatsemi(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(s: VarSet, t: VarSet) -> Formula {
        Formula::Atom(s, t)
    }

    pub fn and(p: Formula, q: Formula) -> Formula {
        Formula::And(Box::new(p), Box::new(q))
    }

    pub fn star(p: Formula, q: Formula) -> Formula {
        Formula::Star(Box::new(p), Box::new(q))
    }

    pub fn fatsemi(p: Formula, q: Formula) -> Formula {
        Formula::Fatsemi(Box::new(p), Box::new(q))
    }

    /// `⟨∅ ▹ W⟩ ⨟ (⟨W ▹ W ∪ X⟩ ∗ ⟨W ▹ W ∪ Y⟩)`.
    pub fn conditional_independence(w: &VarSet, x: &VarSet, y: &VarSet) -> Formula {
        Formula::fatsemi(
            Formula::atom(VarSet::new(), w.clone()),
            Formula::star(Formula::atom(w.clone(), w.union(x)), Formula::atom(w.clone(), w.union(y))),
        )
    }

    /// Number of connectives and leaves.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Emp | Formula::Atom(..) => 1,
            Formula::And(p, q) | Formula::Star(p, q) | Formula::Fatsemi(p, q) => 1 + p.size() + q.size(),
        }
    }

    /// Every variable mentioned.
    pub fn vars(&self) -> VarSet {
        match self {
            Formula::Top | Formula::Emp => VarSet::new(),
            Formula::Atom(s, t) => s.union(t),
            Formula::And(p, q) | Formula::Star(p, q) | Formula::Fatsemi(p, q) => p.vars().union(&q.vars()),
        }
    }

    fn level(&self) -> u8 {
        match self {
            Formula::Fatsemi(..) => 0,
            Formula::Star(..) => 1,
            Formula::And(..) => 2,
            _ => 3,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.level() < min {
            f.write_str("(")?;
            self.write(f, 0)?;
            return f.write_str(")");
        }
        let (op, p, q) = match self {
            Formula::Top => return f.write_str("top"),
            Formula::Emp => return f.write_str("emp"),
            Formula::Atom(s, t) => return write!(f, "<{}|>{}>", braces(s), braces(t)),
            Formula::And(p, q) => (" & ", p, q),
            Formula::Star(p, q) => (" * ", p, q),
            Formula::Fatsemi(p, q) => (" ; ", p, q),
        };
        let l = self.level();
        p.write(f, l + 1)?;
        f.write_str(op)?;
        q.write(f, l)
    }
}

fn braces(s: &VarSet) -> String {
    let names: Vec<&str> = s.iter().map(|v| v.as_str()).collect();
    format!("{{{}}}", names.join(","))
}

/// The concrete syntax accepted by [`parse`], with minimal parentheses.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}
