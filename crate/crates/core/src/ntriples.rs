//! A small N-Triples subset: IRIs in angle brackets and plain string
//! literals, one `.`-terminated triple per line.

use std::io::{self, Write};

use crate::dictionary::{Dictionary, Term};
use crate::error::{Error, Result};
use crate::store::{FactStore, Triple};
use crate::syntax::{Lexer, Token};

/// Parses `text`, interning terms in the order they appear.
pub fn parse(text: &str, dict: &Dictionary) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let tokens = Lexer::tokenize(line).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(lineno, message),
            e => e,
        })?;
        if tokens.is_empty() {
            continue;
        }
        let mut terms = Vec::with_capacity(3);
        let mut iter = tokens.into_iter().map(|(_, t)| t);
        for _ in 0..3 {
            let term = match iter.next() {
                Some(Token::Iri(i)) => Term::Iri(i),
                Some(Token::Literal(l)) => Term::Literal(l),
                Some(other) => {
                    return Err(Error::parse(
                        lineno,
                        format!("expected an IRI or literal, found {}", other.describe()),
                    ))
                }
                None => return Err(Error::parse(lineno, "incomplete triple")),
            };
            terms.push(term);
        }
        match (iter.next(), iter.next()) {
            (Some(Token::Punct('.')), None) => {}
            _ => return Err(Error::parse(lineno, "expected '.' at end of triple")),
        }
        let [s, p, o]: [Term; 3] = terms.try_into().unwrap();
        out.push(Triple::new(dict.intern(s), dict.intern(p), dict.intern(o)));
    }
    Ok(out)
}

pub fn write_triple(out: &mut impl Write, dict: &Dictionary, t: &Triple) -> Result<()> {
    let [s, p, o] = t.terms().map(|r| dict.lookup(r));
    writeln!(out, "{} {} {} .", s?, p?, o?)?;
    Ok(())
}

/// Writes the unmarked facts of `store` in log order.
pub fn export(out: &mut impl Write, dict: &Dictionary, store: &FactStore) -> Result<()> {
    for fact in store.unmarked() {
        write_triple(out, dict, &fact.triple)?;
    }
    Ok(())
}

pub fn export_to_string(dict: &Dictionary, triples: impl IntoIterator<Item = Triple>) -> Result<String> {
    let mut buf = io::Cursor::new(Vec::new());
    for t in triples {
        write_triple(&mut buf, dict, &t)?;
    }
    Ok(String::from_utf8(buf.into_inner()).expect("terms are UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dict = Dictionary::new();
        let text = "<http://e/a> <http://e/p> \"x \\\"y\\\"\" .\n\n# c\n<http://e/b> <http://e/p> <http://e/a> .\n";
        let triples = parse(text, &dict).unwrap();
        assert_eq!(triples, vec![Triple::raw(1, 2, 3), Triple::raw(4, 2, 1)]);
        let back = export_to_string(&dict, triples).unwrap();
        assert_eq!(
            back,
            "<http://e/a> <http://e/p> \"x \\\"y\\\"\" .\n<http://e/b> <http://e/p> <http://e/a> .\n"
        );
    }

    #[test]
    fn errors_report_line() {
        let dict = Dictionary::new();
        let err = parse("<a> <b> <c> .\n<a> <b> .", &dict).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse("<a> <b> <c>", &dict).is_err());
        assert!(parse("<a> <b> <c> . <d>", &dict).is_err());
    }
}
