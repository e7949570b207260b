//! Text format: `[s, p, o] :- [s, p, o], ... .` for rules, `[s, p, o] .` for
//! facts. Terms are `?var`, `<iri>`, `"literal"` or a bare name, which is
//! resolved against the base IRI (`sameAs` and `differentFrom` name the OWL
//! properties).

use std::collections::HashMap;

use crate::dictionary::{Dictionary, Term, OWL_DIFFERENT_FROM, OWL_SAME_AS};
use crate::error::{Error, Result};
use crate::store::Triple;
use crate::syntax::{Lexer, Token};

use super::{Atom, Rule, RuleTerm};

#[derive(Clone, Debug, Default)]
pub struct ParsedProgram {
    pub rules: Vec<Rule>,
    /// Ground statements found alongside the rules.
    pub facts: Vec<Triple>,
}

pub(crate) fn bare_name_term(word: &str, base: &str) -> Term {
    match word {
        "sameAs" => Term::iri(OWL_SAME_AS),
        "differentFrom" => Term::iri(OWL_DIFFERENT_FROM),
        _ => Term::iri(format!("{base}{word}")),
    }
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    dict: &'a Dictionary,
    base: &'a str,
    vars: HashMap<String, u16>,
    names: Vec<String>,
}

impl Parser<'_> {
    fn line(&self) -> usize {
        self.tokens.get(self.pos).or(self.tokens.last()).map_or(1, |(l, _)| *l)
    }

    fn next(&mut self) -> Result<Token> {
        let tok = self
            .tokens
            .get(self.pos)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Error::parse(self.line(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let line = self.line();
        match self.next()? {
            Token::Punct(p) if p == c => Ok(()),
            other => Err(Error::parse(
                line,
                format!("expected '{c}', found {}", other.describe()),
            )),
        }
    }

    fn term(&mut self) -> Result<RuleTerm> {
        let line = self.line();
        let term = match self.next()? {
            Token::Var(name) => {
                let next = self.names.len() as u16;
                let id = *self.vars.entry(name.clone()).or_insert_with(|| {
                    self.names.push(name);
                    next
                });
                return Ok(RuleTerm::Var(id));
            }
            Token::Iri(i) => Term::iri(i),
            Token::Literal(l) => Term::literal(l),
            Token::Word(w) => bare_name_term(&w, self.base),
            other => {
                return Err(Error::parse(
                    line,
                    format!("expected a term, found {}", other.describe()),
                ))
            }
        };
        Ok(RuleTerm::Const(self.dict.intern(term)))
    }

    fn atom(&mut self) -> Result<Atom> {
        self.expect('[')?;
        let s = self.term()?;
        self.expect(',')?;
        let p = self.term()?;
        self.expect(',')?;
        let o = self.term()?;
        self.expect(']')?;
        Ok(Atom::new(s, p, o))
    }

    fn statement(&mut self, out: &mut ParsedProgram) -> Result<()> {
        self.vars.clear();
        self.names.clear();
        let line = self.line();
        let head = self.atom()?;
        let line_after = self.line();
        match self.next()? {
            Token::Punct('.') => {
                let ground = head.terms().map(RuleTerm::as_const);
                match ground {
                    [Some(s), Some(p), Some(o)] => out.facts.push(Triple::new(s, p, o)),
                    _ => return Err(Error::parse(line, "facts must not contain variables")),
                }
            }
            Token::Turnstile => {
                let mut body = vec![self.atom()?];
                loop {
                    let l = self.line();
                    match self.next()? {
                        Token::Punct(',') => body.push(self.atom()?),
                        Token::Punct('.') => break,
                        other => {
                            return Err(Error::parse(
                                l,
                                format!("expected ',' or '.', found {}", other.describe()),
                            ))
                        }
                    }
                }
                let rule = Rule::new(head, body, std::mem::take(&mut self.names)).map_err(|e| match e {
                    Error::UnsafeRule { variable, .. } => Error::UnsafeRule { line, variable },
                    Error::Parse { message, .. } => Error::Parse { line, message },
                    e => e,
                })?;
                out.rules.push(rule);
            }
            other => {
                return Err(Error::parse(
                    line_after,
                    format!("expected ':-' or '.', found {}", other.describe()),
                ))
            }
        }
        Ok(())
    }
}

/// Parses rules (and any facts) resolving bare names against `base`.
pub fn parse_rules(text: &str, dict: &Dictionary, base: &str) -> Result<ParsedProgram> {
    let mut parser = Parser {
        tokens: Lexer::tokenize(text)?,
        pos: 0,
        dict,
        base,
        vars: HashMap::new(),
        names: Vec::new(),
    };
    let mut out = ParsedProgram::default();
    while parser.pos < parser.tokens.len() {
        parser.statement(&mut out)?;
    }
    Ok(out)
}
