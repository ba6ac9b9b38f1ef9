use std::sync::Arc;

use thiserror::Error;

use crate::ball::{parse_rational, Ball};

use super::ast::{ProjEntry, SmoothExpr};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("variable x{index} out of range for dimension {n}")]
    VariableOutOfRange { index: usize, n: usize },
    #[error("negative exponent")]
    NegativeExponent,
}

/// Parses `text` as an expression in `n` variables.
pub fn parse(text: &str, n: usize) -> Result<SmoothExpr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        n,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ParseError {
        self.error_at(self.pos, ParseErrorKind::Syntax(msg.to_string()))
    }

    fn error_at(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { offset, kind }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<SmoothExpr, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                acc = SmoothExpr::add(acc, self.term()?);
            } else if self.eat(b'-') {
                acc = SmoothExpr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SmoothExpr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat(b'*') {
                acc = SmoothExpr::mul(acc, self.factor()?);
            } else if self.eat(b'/') {
                acc = SmoothExpr::div(acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<SmoothExpr, ParseError> {
        let base = self.base()?;
        if self.eat(b'^') {
            if self.peek() == Some(b'-') {
                return Err(self.error_at(self.pos, ParseErrorKind::NegativeExponent));
            }
            let k = self.integer()?;
            let k = u32::try_from(k).map_err(|_| self.syntax("exponent too large"))?;
            return Ok(SmoothExpr::powi(base, k));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected integer"));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii digits")
            .parse()
            .map_err(|_| self.error_at(start, ParseErrorKind::Syntax("integer too large".into())))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let v: f64 = text
            .parse()
            .map_err(|_| self.error_at(start, ParseErrorKind::Syntax(format!("bad number `{text}`"))))?;
        if !v.is_finite() {
            return Err(self.error_at(start, ParseErrorKind::Syntax(format!("number `{text}` overflows"))));
        }
        Ok(v)
    }

    fn identifier(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii")
    }

    fn base(&mut self) -> Result<SmoothExpr, ParseError> {
        let Some(c) = self.peek() else {
            return Err(self.syntax("unexpected end of input"));
        };
        if c.is_ascii_digit() || c == b'.' {
            return Ok(SmoothExpr::constant(self.number()?));
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            self.expect(b')')?;
            return Ok(e);
        }
        if !c.is_ascii_alphabetic() {
            return Err(self.syntax(&format!("unexpected `{}`", c as char)));
        }
        let start = self.pos;
        let ident = self.identifier().to_string();
        match ident.as_str() {
            "x" => {
                let digits_start = self.pos;
                if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                    return Err(self.syntax("expected variable index after `x`"));
                }
                let idx = self.integer()? as usize;
                if idx == 0 || idx > self.n {
                    return Err(self.error_at(
                        digits_start - 1,
                        ParseErrorKind::VariableOutOfRange { index: idx, n: self.n },
                    ));
                }
                Ok(SmoothExpr::var(idx - 1))
            }
            "exp" | "sin" | "cos" | "flat" => {
                self.expect(b'(')?;
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(match ident.as_str() {
                    "exp" => SmoothExpr::exp(a),
                    "sin" => SmoothExpr::sin(a),
                    "cos" => SmoothExpr::cos(a),
                    _ => SmoothExpr::flat(a),
                })
            }
            "flatd" => {
                self.expect(b'(')?;
                let j = self.integer()?;
                let j = u32::try_from(j).map_err(|_| self.syntax("derivative order too large"))?;
                self.expect(b',')?;
                let a = self.expr()?;
                self.expect(b')')?;
                Ok(SmoothExpr::flat_derivative(j, a))
            }
            "proj" => self.proj(),
            "partial" => self.partial(),
            _ => Err(self.error_at(start, ParseErrorKind::Syntax(format!("unknown function `{ident}`")))),
        }
    }

    fn rational_token(&mut self) -> Result<crate::ball::Rational, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'/' || self.src[self.pos] == b' ')
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        parse_rational(text).map_err(|e| self.error_at(start, ParseErrorKind::Syntax(e.to_string())))
    }

    fn proj(&mut self) -> Result<SmoothExpr, ParseError> {
        self.expect(b'(')?;
        let row = self.integer()? as usize;
        self.expect(b',')?;
        let col = self.integer()? as usize;
        self.expect(b';')?;
        let ball_start = self.pos;
        self.expect(b'[')?;
        let mut center = vec![self.rational_token()?];
        while self.eat(b',') {
            center.push(self.rational_token()?);
        }
        self.expect(b']')?;
        self.expect(b',')?;
        let radius = self.rational_token()?;
        if center.len() != self.n {
            return Err(self.error_at(ball_start, ParseErrorKind::Syntax("ball dimension differs from n".into())));
        }
        let support = Ball::new(center, radius)
            .map_err(|e| self.error_at(ball_start, ParseErrorKind::Syntax(e.to_string())))?;
        let mut columns: Vec<Vec<SmoothExpr>> = Vec::new();
        while self.eat(b';') {
            self.expect(b'[')?;
            let mut col = vec![self.expr()?];
            while self.eat(b',') {
                col.push(self.expr()?);
            }
            self.expect(b']')?;
            columns.push(col);
        }
        self.expect(b')')?;
        let m = columns.first().map_or(0, Vec::len);
        if columns.is_empty() || columns.iter().any(|c| c.len() != m) {
            return Err(self.syntax("projection needs columns of equal length"));
        }
        if row == 0 || col == 0 || row > m || col > m {
            return Err(self.syntax("projection entry index out of range"));
        }
        Ok(SmoothExpr::proj(ProjEntry {
            row: row - 1,
            col: col - 1,
            support,
            columns: Arc::new(columns),
        }))
    }

    fn partial(&mut self) -> Result<SmoothExpr, ParseError> {
        self.expect(b'(')?;
        self.expect(b'[')?;
        let mut counts = vec![self.integer()? as u32];
        while self.eat(b',') {
            counts.push(self.integer()? as u32);
        }
        self.expect(b']')?;
        if counts.len() != self.n {
            return Err(self.syntax("derivative multi-index length differs from n"));
        }
        self.expect(b';')?;
        let inner = self.expr()?;
        self.expect(b')')?;
        Ok(SmoothExpr::partial(counts, inner))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    #[test]
    fn grammar_cases() {
        let e = parse("flat(x1)*x2", 2).unwrap();
        assert_eq!(e, SmoothExpr::mul(SmoothExpr::flat(SmoothExpr::var(0)), SmoothExpr::var(1)));
        assert!(matches!(e.node(), Node::Mul(a, _) if matches!(a.node(), Node::Flat { order: 0, .. })));
        let e = parse("(1+x1)^2", 1).unwrap();
        assert!(matches!(e.node(), Node::Pow(_, 2)));
        assert_eq!(parse(" x1 +\n x1 ", 1).unwrap(), parse("x1+x1", 1).unwrap());
    }

    #[test]
    fn left_associative() {
        let e = parse("x1-x2-x3", 3).unwrap();
        match e.node() {
            Node::Sub(a, b) => {
                assert_eq!(*b, SmoothExpr::var(2));
                assert!(matches!(a.node(), Node::Sub(..)));
            }
            _ => panic!(),
        }
    }

    #[test]
    fn error_cases() {
        let err = parse("x3", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::VariableOutOfRange { index: 3, n: 2 });
        assert_eq!(err.offset, 0);
        let err = parse("x1^-2", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::NegativeExponent);
        assert_eq!(err.offset, 3);
        let err = parse("x1 + * 2", 1).unwrap_err();
        assert_eq!(err.offset, 5);
        assert!(parse("x0", 1).is_err());
        assert!(parse("tan(x1)", 1).is_err());
        assert!(parse("(x1", 1).is_err());
        assert!(parse("x1 x1", 1).is_err());
        assert!(parse("x1^2.5", 1).is_err());
    }

    #[test]
    fn extended_primitives_round_trip() {
        let text = "proj(1,2;[1/2,-1/4],3/8;[1,0];[0,flat(x1)])";
        let e = parse(text, 2).unwrap();
        assert_eq!(e.to_string(), text);
        let d = parse("partial([1,0];proj(2,2;[0,0],1/1;[x1,x2]))", 2).unwrap();
        assert_eq!(parse(&d.to_string(), 2).unwrap(), d);
        assert!(parse("proj(3,1;[0,0],1/1;[1,0])", 2).is_err());
        assert!(parse("proj(1,1;[0],1/1;[1,0])", 2).is_err());
    }
}
