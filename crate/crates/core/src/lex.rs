//! A small tokenizer shared by the textual front ends.

use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok<'a> {
    Ident(&'a str),
    Punct(&'static str),
    End,
}

impl Tok<'_> {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::End => "end of input".into(),
        }
    }
}

/// Splits `src` into identifiers and the given punctuation, longest match
/// first; each token carries its byte offset.
pub(crate) fn tokenize<'a>(src: &'a str, puncts: &[&'static str]) -> Result<Vec<(Tok<'a>, usize)>, ParseError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(&src[start..i]), start));
            continue;
        }
        let mut best: Option<&'static str> = None;
        for p in puncts {
            if src[i..].starts_with(p) && best.is_none_or(|b| p.len() > b.len()) {
                best = Some(p);
            }
        }
        if let Some(p) = best {
            out.push((Tok::Punct(p), i));
            i += p.len();
            continue 'outer;
        }
        let ch = src[i..].chars().next().unwrap_or('?');
        let mut expected: Vec<&str> = puncts.to_vec();
        expected.push("identifier");
        return Err(ParseError::at(src, i, format!("unexpected character `{ch}`"), &expected));
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

/// Cursor over a token stream with error reporting against the source.
pub(crate) struct Cursor<'a> {
    pub src: &'a str,
    toks: Vec<(Tok<'a>, usize)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(src: &'a str, puncts: &[&'static str]) -> Result<Self, ParseError> {
        Ok(Cursor { src, toks: tokenize(src, puncts)?, pos: 0 })
    }

    pub(crate) fn peek(&self) -> &Tok<'a> {
        &self.toks[self.pos].0
    }

    pub(crate) fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    pub(crate) fn bump(&mut self) -> Tok<'a> {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn eat(&mut self, p: &str) -> bool {
        if matches!(self.peek(), Tok::Punct(q) if *q == p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::at(self.src, self.offset(), format!("unexpected {}", self.peek().describe()), expected)
    }

    pub(crate) fn error_msg(&self, msg: impl Into<String>, expected: &[&str]) -> ParseError {
        ParseError::at(self.src, self.offset(), msg, expected)
    }

    pub(crate) fn expect(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.error(&[p]))
        }
    }

    pub(crate) fn at_end(&self) -> bool {
        matches!(self.peek(), Tok::End)
    }
}
