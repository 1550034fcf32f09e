use std::collections::HashMap;

use thiserror::Error;

use super::{Term, VarId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Lambda,
    Dot,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    while let Some(&c) = chars.peek() {
        let (l, k) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
            }
            '-' => {
                bump(&mut chars);
                if chars.peek() != Some(&'-') {
                    return Err(ParseError {
                        line: l,
                        col: k,
                        message: "unexpected '-' (comments start with \"--\")".into(),
                    });
                }
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
            }
            '\\' | 'λ' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Lambda, line: l, col: k });
            }
            '.' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::Dot, line: l, col: k });
            }
            '(' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::LParen, line: l, col: k });
            }
            ')' => {
                bump(&mut chars);
                out.push(Spanned { tok: Tok::RParen, line: l, col: k });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        name.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                out.push(Spanned { tok: Tok::Ident(name), line: l, col: k });
            }
            other => {
                return Err(ParseError {
                    line: l,
                    col: k,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    names: HashMap<String, VarId>,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn advance(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        })
    }

    fn var(&mut self, name: String) -> VarId {
        self.names
            .entry(name)
            .or_insert_with_key(|n| VarId::named(n))
            .clone()
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        if self.peek().tok == Tok::Lambda {
            self.lam()
        } else {
            self.app()
        }
    }

    fn lam(&mut self) -> Result<Term, ParseError> {
        self.advance();
        let x = match self.advance().tok {
            Tok::Ident(name) => self.var(name),
            _ => {
                self.pos -= 1;
                return self.error("expected a variable after λ");
            }
        };
        if self.peek().tok != Tok::Dot {
            return self.error("expected '.' after the bound variable");
        }
        self.advance();
        let body = self.term()?;
        Ok(Term::lam(x, body))
    }

    fn app(&mut self) -> Result<Term, ParseError> {
        let mut acc = match self.atom()? {
            Some(t) => t,
            None => return self.error("expected a term"),
        };
        loop {
            // a trailing abstraction extends to the end, as the body of a λ does
            if self.peek().tok == Tok::Lambda {
                let arg = self.lam()?;
                return Ok(Term::app(acc, arg));
            }
            match self.atom()? {
                Some(arg) => acc = Term::app(acc, arg),
                None => return Ok(acc),
            }
        }
    }

    fn atom(&mut self) -> Result<Option<Term>, ParseError> {
        match self.peek().tok.clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(Some(Term::var(self.var(name))))
            }
            Tok::LParen => {
                self.advance();
                let t = self.term()?;
                if self.peek().tok != Tok::RParen {
                    return self.error("expected ')'");
                }
                self.advance();
                Ok(Some(t))
            }
            _ => Ok(None),
        }
    }
}

/// Parses the concrete syntax
/// `term = ("\" | "λ") ident "." term | atom+`, `atom = ident | "(" term ")"`.
/// Application is left-associative and λ-bodies extend as far right as
/// possible. Free variables are allowed.
pub fn parse(src: &str) -> Result<Term, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        names: HashMap::new(),
    };
    let t = p.term()?;
    if p.peek().tok != Tok::Eof {
        return p.error("unexpected input after the term");
    }
    Ok(t)
}
