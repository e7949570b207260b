//! Tokenizer shared by the rule, N-Triples and query parsers.

use std::iter::Peekable;
use std::str::Chars;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Token {
    Var(String),
    Iri(String),
    Literal(String),
    Word(String),
    Punct(char),
    Turnstile,
}

impl Token {
    pub(crate) fn describe(&self) -> String {
        match self {
            Token::Var(v) => format!("?{v}"),
            Token::Iri(i) => format!("<{i}>"),
            Token::Literal(l) => format!("\"{l}\""),
            Token::Word(w) => w.clone(),
            Token::Punct(c) => format!("'{c}'"),
            Token::Turnstile => "':-'".into(),
        }
    }
}

pub(crate) struct Lexer<'a> {
    chars: Peekable<Chars<'a>>,
    line: usize,
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            chars: text.chars().peekable(),
            line: 1,
        }
    }

    pub(crate) fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
        let mut lexer = Lexer::new(text);
        let mut out = Vec::new();
        while let Some(tok) = lexer.next_token()? {
            out.push(tok);
        }
        Ok(out)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn name(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if !is_name_char(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn hex_escape(&mut self, digits: usize) -> Result<char> {
        let line = self.line;
        let mut code = 0u32;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| Error::parse(line, "bad unicode escape"))?;
            code = code * 16 + d;
        }
        char::from_u32(code).ok_or_else(|| Error::parse(line, "invalid code point"))
    }

    fn literal(&mut self) -> Result<String> {
        let line = self.line;
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(Error::parse(line, "unterminated string literal")),
                Some('"') => return Ok(s),
                Some('\\') => {
                    let c = match self.bump() {
                        Some('"') => '"',
                        Some('\\') => '\\',
                        Some('\'') => '\'',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('t') => '\t',
                        Some('u') => self.hex_escape(4)?,
                        Some('U') => self.hex_escape(8)?,
                        _ => return Err(Error::parse(line, "bad escape in string literal")),
                    };
                    s.push(c);
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn iri(&mut self) -> Result<String> {
        let line = self.line;
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('>') => return Ok(s),
                Some(c) if c.is_whitespace() => return Err(Error::parse(line, "whitespace inside IRI")),
                Some(c) => s.push(c),
                None => return Err(Error::parse(line, "unterminated IRI")),
            }
        }
    }

    pub(crate) fn next_token(&mut self) -> Result<Option<(usize, Token)>> {
        self.skip_trivia();
        let line = self.line;
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '?' | '$' => {
                self.bump();
                let name = self.name();
                if name.is_empty() {
                    return Err(Error::parse(line, "empty variable name"));
                }
                Token::Var(name)
            }
            '<' => {
                self.bump();
                Token::Iri(self.iri()?)
            }
            '"' => {
                self.bump();
                Token::Literal(self.literal()?)
            }
            ':' => {
                self.bump();
                if self.bump() != Some('-') {
                    return Err(Error::parse(line, "expected ':-'"));
                }
                Token::Turnstile
            }
            '[' | ']' | ',' | '.' | '{' | '}' | '(' | ')' | ';' | '*' => {
                self.bump();
                Token::Punct(c)
            }
            c if is_name_char(c) => Token::Word(self.name()),
            other => return Err(Error::parse(line, format!("unexpected character {other:?}"))),
        };
        Ok(Some((line, tok)))
    }
}
