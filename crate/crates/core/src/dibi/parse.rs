//! ```text
//! formula := fatsemi
//! fatsemi := star [ ";" fatsemi ]
//! star    := conj [ "*" star ]
//! conj    := unit [ "&" conj ]
//! unit    := "top" | "emp" | atom | "(" formula ")"
//! atom    := "<" varset "|>" varset ">"
//! varset  := "{" [ ident { "," ident } ] "}"
//! ```

use crate::error::{ParseError, Result};
use crate::lex::{Cursor, Tok};
use crate::varspace::{VarName, VarSet};

use super::Formula;

const PUNCTS: &[&str] = &["{", "}", ",", "<", "|>", ">", "&", "*", ";", "(", ")"];
const UNIT: &[&str] = &["top", "emp", "<", "("];

pub fn parse(text: &str) -> Result<Formula> {
    let mut c = Cursor::new(text, PUNCTS)?;
    let f = fatsemi(&mut c)?;
    if !c.at_end() {
        return Err(c.error(&["&", "*", ";", "end of input"]).into());
    }
    Ok(f)
}

fn fatsemi(c: &mut Cursor) -> std::result::Result<Formula, ParseError> {
    let p = star(c)?;
    if c.eat(";") {
        return Ok(Formula::fatsemi(p, fatsemi(c)?));
    }
    Ok(p)
}

fn star(c: &mut Cursor) -> std::result::Result<Formula, ParseError> {
    let p = conj(c)?;
    if c.eat("*") {
        return Ok(Formula::star(p, star(c)?));
    }
    Ok(p)
}

fn conj(c: &mut Cursor) -> std::result::Result<Formula, ParseError> {
    let p = unit(c)?;
    if c.eat("&") {
        return Ok(Formula::and(p, conj(c)?));
    }
    Ok(p)
}

fn unit(c: &mut Cursor) -> std::result::Result<Formula, ParseError> {
    match c.peek().clone() {
        Tok::Ident("top") => {
            c.bump();
            Ok(Formula::Top)
        }
        Tok::Ident("emp") => {
            c.bump();
            Ok(Formula::Emp)
        }
        Tok::Punct("<") => {
            c.bump();
            let s = varset(c)?;
            c.expect("|>")?;
            let t = varset(c)?;
            c.expect(">")?;
            Ok(Formula::Atom(s, t))
        }
        Tok::Punct("(") => {
            c.bump();
            let p = fatsemi(c)?;
            c.expect(")")?;
            Ok(p)
        }
        _ => Err(c.error(UNIT)),
    }
}

fn varset(c: &mut Cursor) -> std::result::Result<VarSet, ParseError> {
    c.expect("{")?;
    let mut out = VarSet::new();
    if c.eat("}") {
        return Ok(out);
    }
    loop {
        let at = c.offset();
        match c.bump() {
            Tok::Ident(s) => match VarName::new(s) {
                Ok(v) => {
                    out.insert(v);
                }
                Err(e) => return Err(ParseError::at(c.src, at, e.to_string(), &["identifier"])),
            },
            _ => return Err(ParseError::at(c.src, at, "expected a variable", &["identifier", "}"])),
        }
        if c.eat("}") {
            return Ok(out);
        }
        if !c.eat(",") {
            return Err(c.error(&[",", "}"]));
        }
    }
}
