//! Concrete syntax for diagram terms.
//!
//! ```text
//! term   := tensor { ";" tensor }
//! tensor := factor { "*" factor }
//! factor := "id" list | "copy" list | "del" list | "swap" list list
//!         | "gen" list "->" list | NAME | "(" term ")"
//! list   := "[" [ ident { "," ident } ] "]"
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, ParseError, Result};
use crate::lex::{Cursor, Tok};
use crate::varspace::{VarList, VarName};

use super::DiagTerm;

/// Named terms that may be referenced by `NAME`.
pub type TermEnv = BTreeMap<String, DiagTerm>;

const PUNCTS: &[&str] = &["[", "]", ",", ";", "*", "(", ")", "->"];
const KEYWORDS: &[&str] = &["id", "copy", "del", "swap", "gen"];
const FACTOR: &[&str] = &["id", "copy", "del", "swap", "gen", "(", "name"];

pub fn parse_term(text: &str, env: &TermEnv) -> Result<DiagTerm> {
    let mut c = Cursor::new(text, PUNCTS)?;
    let t = term(&mut c, env)?;
    if !c.at_end() {
        return Err(c.error(&[";", "*"]).into());
    }
    Ok(t)
}

fn typed(c: &Cursor, t: DiagTerm) -> Result<DiagTerm> {
    match t.typ() {
        Ok(_) => Ok(t),
        Err(Error::TypeError { term, reason }) => {
            let at = ParseError::at(c.src, c.offset(), "", &[]);
            Err(Error::TypeError { term, reason: format!("{reason} (before {}:{})", at.line, at.column) })
        }
        Err(e) => Err(e),
    }
}

fn term(c: &mut Cursor, env: &TermEnv) -> Result<DiagTerm> {
    let mut t = tensor(c, env)?;
    while c.eat(";") {
        let rhs = tensor(c, env)?;
        t = typed(c, DiagTerm::seq(t, rhs))?;
    }
    Ok(t)
}

fn tensor(c: &mut Cursor, env: &TermEnv) -> Result<DiagTerm> {
    let mut t = factor(c, env)?;
    while c.eat("*") {
        let rhs = factor(c, env)?;
        t = DiagTerm::par(t, rhs);
    }
    Ok(t)
}

fn list(c: &mut Cursor) -> Result<VarList> {
    c.expect("[")?;
    let mut out = Vec::new();
    if c.eat("]") {
        return Ok(VarList::new(out));
    }
    loop {
        match c.bump() {
            Tok::Ident(s) => out.push(VarName::new(s)?),
            _ => return Err(c.error(&["identifier"]).into()),
        }
        if c.eat("]") {
            return Ok(VarList::new(out));
        }
        c.expect(",")?;
    }
}

fn factor(c: &mut Cursor, env: &TermEnv) -> Result<DiagTerm> {
    match c.peek().clone() {
        Tok::Punct("(") => {
            c.bump();
            let t = term(c, env)?;
            c.expect(")")?;
            Ok(t)
        }
        Tok::Ident(kw) if KEYWORDS.contains(&kw) => {
            c.bump();
            let l = list(c)?;
            Ok(match kw {
                "id" => DiagTerm::Id(l),
                "copy" => DiagTerm::Copy(l),
                "del" => DiagTerm::Del(l),
                "swap" => DiagTerm::Swap(l, list(c)?),
                _ => {
                    c.expect("->")?;
                    let cod = list(c)?;
                    typed(c, DiagTerm::Gen(l, cod))?
                }
            })
        }
        Tok::Ident(name) => match env.get(name) {
            Some(t) => {
                c.bump();
                Ok(t.clone())
            }
            None => Err(c.error_msg(format!("unknown name `{name}`"), FACTOR).into()),
        },
        _ => Err(c.error(FACTOR).into()),
    }
}
