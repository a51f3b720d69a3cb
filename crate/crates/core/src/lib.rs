//! Input-preserving kernels over Markov categories, a satisfaction checker
//! for the {∧, ∗, ⨟} fragment of DIBI, and decision procedures for several
//! notions of conditional independence.

pub mod ci;
pub mod dibi;
pub mod error;
pub mod examples;
pub mod finrel;
pub mod finstoch;
pub mod gauss;
pub mod kernels;
pub mod kfile;
mod lex;
pub mod markov;
pub mod synvar;
pub mod varspace;

pub use error::{Error, ParseError, Result};
