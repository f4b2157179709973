//! Lexer and recursive-descent parser.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?          right-associative
//! primary := NUMBER | IDENT | IDENT '(' args ')' | '(' expr ')'
//! ```

use super::ast::{BinOp, Expr, ExprKind, Func, Span};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at {span}: {message}")]
    Syntax { message: String, span: Span },
    #[error("unknown identifier '{name}' at {span}")]
    UnknownIdentifier { name: String, span: Span },
    #[error("unknown function '{name}' at {span}")]
    UnknownFunction { name: String, span: Span },
    #[error("function '{name}' expects {expected} argument(s), got {found} at {span}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        span: Span,
    },
}

impl ParseError {
    pub fn span(&self) -> Span {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::UnknownIdentifier { span, .. }
            | ParseError::UnknownFunction { span, .. }
            | ParseError::Arity { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, Span), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, Span::new(start, start)));
        }
        let c = bytes[start];
        let single = |t: Tok, me: &mut Self| {
            me.pos += 1;
            Ok((t, Span::new(start, start + 1)))
        };
        match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => single(Tok::Op(c as char), self),
            b'(' => single(Tok::LParen, self),
            b')' => single(Tok::RParen, self),
            b',' => single(Tok::Comma, self),
            b'0'..=b'9' | b'.' => self.number(start),
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = start + 1;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_')
                {
                    end += 1;
                }
                self.pos = end;
                Ok((Tok::Ident(self.src[start..end].to_string()), Span::new(start, end)))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ParseError::Syntax {
                    message: format!("unexpected character '{ch}'"),
                    span: Span::new(start, start + ch.len_utf8()),
                })
            }
        }
    }

    fn number(&mut self, start: usize) -> Result<(Tok, Span), ParseError> {
        let bytes = self.src.as_bytes();
        let mut end = start;
        let digits = |end: &mut usize| {
            let s = *end;
            while *end < bytes.len() && bytes[*end].is_ascii_digit() {
                *end += 1;
            }
            *end - s
        };
        let int_digits = digits(&mut end);
        let mut frac_digits = 0;
        if end < bytes.len() && bytes[end] == b'.' {
            end += 1;
            frac_digits = digits(&mut end);
        }
        if int_digits + frac_digits == 0 {
            return Err(ParseError::Syntax {
                message: "malformed number".into(),
                span: Span::new(start, end),
            });
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut e = end + 1;
            if e < bytes.len() && (bytes[e] == b'+' || bytes[e] == b'-') {
                e += 1;
            }
            if digits(&mut e) == 0 {
                return Err(ParseError::Syntax {
                    message: "malformed exponent".into(),
                    span: Span::new(start, e),
                });
            }
            end = e;
        }
        self.pos = end;
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            message: format!("malformed number '{text}'"),
            span: Span::new(start, end),
        })?;
        Ok((Tok::Num(value), Span::new(start, end)))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    span: Span,
    vars: &'a [&'a str],
    params: &'a [&'a str],
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, s) = self.lexer.next_token()?;
        self.tok = t;
        self.span = s;
        Ok(())
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Span, ParseError> {
        if self.tok == want {
            let s = self.span;
            self.bump()?;
            Ok(s)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let found = match &self.tok {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        };
        ParseError::Syntax {
            message: format!("expected {what}, found {found}"),
            span: self.span,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            self.bump()?;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Op('-') {
            let start = self.span;
            self.bump()?;
            let inner = self.unary()?;
            let span = start.join(inner.span);
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Num(x) => {
                let span = self.span;
                self.bump()?;
                Ok(Expr {
                    kind: ExprKind::Number(x),
                    span,
                })
            }
            Tok::LParen => {
                let open = self.span;
                self.bump()?;
                let mut inner = self.expr()?;
                let close = self.expect(Tok::RParen, "')'")?;
                inner.span = open.join(close);
                Ok(inner)
            }
            Tok::Ident(name) => {
                let span = self.span;
                self.bump()?;
                if self.tok == Tok::LParen {
                    return self.call(name, span);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Expr {
                        kind: ExprKind::Var { index: i, name },
                        span,
                    })
                } else if let Some(i) = self.params.iter().position(|p| *p == name) {
                    Ok(Expr {
                        kind: ExprKind::Param { index: i, name },
                        span,
                    })
                } else {
                    Err(ParseError::UnknownIdentifier { name, span })
                }
            }
            _ => Err(self.unexpected("a number, identifier or '('")),
        }
    }

    fn call(&mut self, name: String, name_span: Span) -> Result<Expr, ParseError> {
        let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
            name: name.clone(),
            span: name_span,
        })?;
        self.bump()?; // '('
        let mut args = Vec::new();
        if self.tok != Tok::RParen {
            args.push(self.expr()?);
            while self.tok == Tok::Comma {
                self.bump()?;
                args.push(self.expr()?);
            }
        }
        let close = self.expect(Tok::RParen, "')' or ','")?;
        let span = name_span.join(close);
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name,
                expected: func.arity(),
                found: args.len(),
                span,
            });
        }
        let arg = args.pop().expect("arity checked");
        Ok(Expr {
            kind: ExprKind::Call(func, Box::new(arg)),
            span,
        })
    }
}

fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
    let span = a.span.join(b.span);
    Expr {
        kind: ExprKind::Binary(op, Box::new(a), Box::new(b)),
        span,
    }
}

/// Parse `source`, resolving identifiers against chart variables first and
/// parameters second.
pub fn parse(source: &str, chart_vars: &[&str], params: &[&str]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        lexer: Lexer { src: source, pos: 0 },
        tok: Tok::End,
        span: Span::default(),
        vars: chart_vars,
        params,
    };
    p.bump()?;
    if p.tok == Tok::End {
        return Err(ParseError::Syntax {
            message: "empty expression".into(),
            span: Span::new(0, source.len()),
        });
    }
    let e = p.expr()?;
    if p.tok != Tok::End {
        return Err(p.unexpected("an operator or end of input"));
    }
    Ok(e)
}
