//! `SELECT ?v ... WHERE { s p o . ... BIND(STR(?x) AS ?y) }`

use crate::dictionary::Term;
use crate::error::{Error, Result};
use crate::rules::bare_name_term;
use crate::syntax::{Lexer, Token};

use super::{Bind, QueryTerm, SelectQuery, TriplePattern};

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Query(format!("line {line}: {}", msg.into()))
}

impl Parser {
    fn line(&self) -> usize {
        self.tokens.get(self.pos).or(self.tokens.last()).map_or(1, |(l, _)| *l)
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Result<Token> {
        let line = self.line();
        let t = self
            .tokens
            .get(self.pos)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| err(line, "unexpected end of query"))?;
        self.pos += 1;
        Ok(t)
    }

    fn keyword(&mut self, kw: &str) -> Result<()> {
        let line = self.line();
        match self.next()? {
            Token::Word(w) if w.eq_ignore_ascii_case(kw) => Ok(()),
            other => Err(err(line, format!("expected {kw}, found {}", other.describe()))),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        let line = self.line();
        match self.next()? {
            Token::Punct(p) if p == c => Ok(()),
            other => Err(err(line, format!("expected '{c}', found {}", other.describe()))),
        }
    }

    fn var(&mut self) -> Result<String> {
        let line = self.line();
        match self.next()? {
            Token::Var(v) => Ok(v),
            other => Err(err(line, format!("expected a variable, found {}", other.describe()))),
        }
    }

    fn term(&mut self, base: &str) -> Result<QueryTerm> {
        let line = self.line();
        Ok(match self.next()? {
            Token::Var(v) => QueryTerm::Var(v),
            Token::Iri(i) => QueryTerm::Const(Term::Iri(i)),
            Token::Literal(l) => QueryTerm::Const(Term::Literal(l)),
            Token::Word(w) if w == "a" => QueryTerm::Const(Term::iri(RDF_TYPE)),
            Token::Word(w) => QueryTerm::Const(bare_name_term(&w, base)),
            other => return Err(err(line, format!("expected a term, found {}", other.describe()))),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token::Word(w)) if w.eq_ignore_ascii_case(kw))
    }
}

const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

pub fn parse_query(text: &str, base: &str) -> Result<SelectQuery> {
    let mut p = Parser {
        tokens: Lexer::tokenize(text).map_err(|e| Error::Query(e.to_string()))?,
        pos: 0,
    };
    p.keyword("SELECT")?;
    let mut projection = Vec::new();
    let mut star = false;
    loop {
        match p.peek() {
            Some(Token::Var(_)) => projection.push(p.var()?),
            Some(Token::Punct('*')) if projection.is_empty() && !star => {
                p.pos += 1;
                star = true;
            }
            _ => break,
        }
    }
    if projection.is_empty() && !star {
        return Err(err(p.line(), "SELECT needs at least one variable or '*'"));
    }
    p.keyword("WHERE")?;
    p.punct('{')?;
    let mut patterns = Vec::new();
    let mut binds: Vec<Bind> = Vec::new();
    loop {
        match p.peek() {
            Some(Token::Punct('}')) => {
                p.pos += 1;
                break;
            }
            Some(Token::Punct('.')) => p.pos += 1,
            _ if p.is_keyword("BIND") => {
                let line = p.line();
                p.pos += 1;
                p.punct('(')?;
                p.keyword("STR")?;
                p.punct('(')?;
                let source = p.var()?;
                p.punct(')')?;
                p.keyword("AS")?;
                let target = p.var()?;
                p.punct(')')?;
                binds.push(Bind { source, target, line });
            }
            _ => {
                let s = p.term(base)?;
                let pr = p.term(base)?;
                let o = p.term(base)?;
                patterns.push(TriplePattern { s, p: pr, o });
            }
        }
    }
    if p.pos != p.tokens.len() {
        return Err(err(p.line(), "unexpected input after '}'"));
    }
    let query = SelectQuery {
        projection: if star { None } else { Some(projection) },
        patterns,
        binds,
    };
    query.validate()?;
    Ok(query)
}
