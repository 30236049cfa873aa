//! A recursive-descent parser for the textual rule format.
//!
//! ```text
//! program  = { rule }
//! rule     = atom [ ":-" bodylist ] "."
//! bodylist = bodylit { "," bodylit }
//! bodylit  = [ "not" ] atom | term rel term | aggname "{" elems "}" rel term
//! elems    = elem { ";" elem }
//! elem     = [ termlist ] ":" atomlist | termlist
//! rel      = "<" | "<=" | ">" | ">=" | "=" | "!="
//! ```
//!
//! Comments run from `%` to the end of the line. Identifiers start with a
//! lowercase letter, variables with an uppercase letter or underscore.

use crate::syntax::{
    AggFunc, Aggregate, AggregateElement, Atom, BodyLiteral, Comparison, Literal, Program, Rel,
    Rule, Term, RESERVED_PREFIX,
};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

/// Parses a program from its textual representation.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(text);
    let mut rules = Vec::new();
    p.skip_ws();
    while !p.at_end() {
        rules.push(p.rule()?);
        p.skip_ws();
    }
    Ok(Program { rules })
}

/// Parses a single ground or non-ground term, mainly for tests and the CLI.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    let t = p.term()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.err("trailing input after term"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser { src: text.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError { line: self.line, col: self.col, msg: msg.into() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'%') => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            for _ in 0..s.len() {
                self.bump();
            }
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                self.bump();
            }
            _ => return Err(self.err("expected identifier")),
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == b'_' {
                self.bump();
            } else {
                break;
            }
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn integer(&mut self) -> Result<i64, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.bump();
        }
        let digits_start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                self.bump();
            } else {
                break;
            }
        }
        if self.pos == digits_start {
            return Err(self.err("expected integer"));
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<i64>().map_err(|_| self.err("integer out of 64-bit range"))
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some(b'#') => {
                if self.eat("#inf") {
                    Ok(Term::Inf)
                } else if self.eat("#sup") {
                    Ok(Term::Sup)
                } else {
                    Err(self.err("expected `#inf` or `#sup`"))
                }
            }
            Some(c) if c == b'-' || c.is_ascii_digit() => Ok(Term::Integer(self.integer()?)),
            Some(c) if c.is_ascii_uppercase() || c == b'_' => {
                Ok(Term::Variable(self.ident()?))
            }
            Some(c) if c.is_ascii_lowercase() => {
                let name = self.ident()?;
                let mut args = Vec::new();
                if self.peek() == Some(b'(') {
                    self.bump();
                    self.skip_ws();
                    loop {
                        args.push(self.term()?);
                        self.skip_ws();
                        if self.eat(",") {
                            self.skip_ws();
                        } else {
                            break;
                        }
                    }
                    self.expect(")")?;
                }
                Ok(Term::Function(name, args))
            }
            _ => Err(self.err("expected term")),
        }
    }

    /// Reports use of the reserved predicate prefix at the cursor, if any.
    fn check_reserved(&mut self) -> Result<(), ParseError> {
        if self.src[self.pos..].starts_with(RESERVED_PREFIX.as_bytes()) {
            let (line, col) = (self.line, self.col);
            let name = self.ident()?;
            return Err(ParseError {
                line,
                col,
                msg: format!("predicate name `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"),
            });
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<Atom, ParseError> {
        let (line, col) = (self.line, self.col);
        self.check_reserved()?;
        match self.peek() {
            Some(c) if c.is_ascii_lowercase() => {}
            _ => return Err(self.err("expected predicate name")),
        }
        let t = self.term()?;
        match t {
            Term::Function(name, args) => {
                if name.starts_with(RESERVED_PREFIX) {
                    return Err(ParseError {
                        line,
                        col,
                        msg: format!(
                            "predicate name `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"
                        ),
                    });
                }
                Ok(Atom { predicate: name, args })
            }
            _ => Err(ParseError { line, col, msg: "expected atom".into() }),
        }
    }

    fn rel(&mut self) -> Option<Rel> {
        // longest match first
        if self.eat("<=") {
            Some(Rel::Le)
        } else if self.eat(">=") {
            Some(Rel::Ge)
        } else if self.eat("!=") {
            Some(Rel::Ne)
        } else if self.eat("<") {
            Some(Rel::Lt)
        } else if self.eat(">") {
            Some(Rel::Gt)
        } else if self.eat("=") {
            Some(Rel::Eq)
        } else {
            None
        }
    }

    fn agg_func(&mut self) -> Result<AggFunc, ParseError> {
        if self.eat("#count") {
            Ok(AggFunc::Count)
        } else if self.eat("#sum+") {
            Ok(AggFunc::SumPlus)
        } else if self.eat("#sum-") {
            Ok(AggFunc::SumMinus)
        } else if self.eat("#sum") {
            Ok(AggFunc::Sum)
        } else {
            Err(self.err("expected aggregate name"))
        }
    }

    fn aggregate_element(&mut self) -> Result<AggregateElement, ParseError> {
        let mut tuple = Vec::new();
        self.skip_ws();
        if self.peek() != Some(b':') {
            loop {
                tuple.push(self.term()?);
                self.skip_ws();
                if self.eat(",") {
                    self.skip_ws();
                } else {
                    break;
                }
            }
        }
        let mut condition = Vec::new();
        self.skip_ws();
        if self.eat(":") {
            self.skip_ws();
            // the condition may be empty (e.g. before `;` or `}`)
            while matches!(self.peek(), Some(c) if c.is_ascii_lowercase()) {
                condition.push(self.atom()?);
                self.skip_ws();
                if self.eat(",") {
                    self.skip_ws();
                } else {
                    break;
                }
            }
        }
        Ok(AggregateElement { tuple, condition })
    }

    fn aggregate(&mut self) -> Result<Aggregate, ParseError> {
        let func = self.agg_func()?;
        self.skip_ws();
        self.expect("{")?;
        self.skip_ws();
        let mut elements = Vec::new();
        if self.peek() != Some(b'}') {
            loop {
                elements.push(self.aggregate_element()?);
                self.skip_ws();
                if self.eat(";") {
                    self.skip_ws();
                } else {
                    break;
                }
            }
        }
        self.expect("}")?;
        self.skip_ws();
        let rel = self.rel().ok_or_else(|| self.err("expected comparison relation"))?;
        self.skip_ws();
        let bound = self.term()?;
        Ok(Aggregate { func, elements, rel, bound })
    }

    fn body_literal(&mut self) -> Result<BodyLiteral, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'#') => {
                // distinguish aggregates from the constants #inf/#sup
                if self.src[self.pos..].starts_with(b"#inf")
                    || self.src[self.pos..].starts_with(b"#sup")
                {
                    let left = self.term()?;
                    self.skip_ws();
                    let rel =
                        self.rel().ok_or_else(|| self.err("expected comparison relation"))?;
                    self.skip_ws();
                    let right = self.term()?;
                    return Ok(BodyLiteral::Comparison(Comparison { left, rel, right }));
                }
                Ok(BodyLiteral::Aggregate(self.aggregate()?))
            }
            Some(b'n') if self.keyword_not() => {
                self.expect("not")?;
                self.skip_ws();
                if self.peek() == Some(b'#') {
                    return Err(self.err("negated aggregates are not supported"));
                }
                let atom = self.atom()?;
                self.skip_ws();
                if self.rel().is_some() {
                    return Err(self.err("comparisons cannot be negated with `not`"));
                }
                Ok(BodyLiteral::Literal(Literal { atom, negated: true }))
            }
            _ => {
                self.check_reserved()?;
                let left = self.term()?;
                self.skip_ws();
                if let Some(rel) = self.rel() {
                    self.skip_ws();
                    let right = self.term()?;
                    return Ok(BodyLiteral::Comparison(Comparison { left, rel, right }));
                }
                match left {
                    Term::Function(name, args) => {
                        if name.starts_with(RESERVED_PREFIX) {
                            return Err(self.err(format!(
                                "predicate name `{name}` uses the reserved prefix `{RESERVED_PREFIX}`"
                            )));
                        }
                        Ok(BodyLiteral::Literal(Literal {
                            atom: Atom { predicate: name, args },
                            negated: false,
                        }))
                    }
                    _ => Err(self.err("expected atom, comparison, or aggregate")),
                }
            }
        }
    }

    /// True if the input at the cursor is the keyword `not` followed by a
    /// non-identifier character, so `notable(X)` still parses as an atom.
    fn keyword_not(&self) -> bool {
        if !self.src[self.pos..].starts_with(b"not") {
            return false;
        }
        match self.src.get(self.pos + 3) {
            Some(c) => !(c.is_ascii_alphanumeric() || *c == b'_'),
            None => true,
        }
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let head = self.atom()?;
        self.skip_ws();
        let mut body = Vec::new();
        if self.eat(":-") {
            loop {
                body.push(self.body_literal()?);
                self.skip_ws();
                if self.eat(",") {
                    self.skip_ws();
                } else {
                    break;
                }
            }
        }
        self.expect(".")?;
        Ok(Rule { head, body })
    }
}
