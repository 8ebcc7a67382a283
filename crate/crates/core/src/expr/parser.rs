use super::lexer::{tokenize, Token, TokenKind};
use super::{BinOp, Expr, ExprKind, Func, ParseError, Var};

pub(super) struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: usize,
    allowed: &'a [Var],
}

impl<'a> Parser<'a> {
    pub(super) fn new(source: &'a str, allowed: &'a [Var]) -> Result<Self, ParseError> {
        let tokens = tokenize(source)?;
        if tokens.is_empty() {
            return Err(ParseError::Empty);
        }
        Ok(Parser {
            tokens,
            pos: 0,
            end: source.len(),
            allowed,
        })
    }

    pub(super) fn parse(mut self) -> Result<Expr, ParseError> {
        let e = self.expr()?;
        if self.pos < self.tokens.len() {
            return Err(self.unexpected(&["operator", "end of input"]));
        }
        Ok(e)
    }

    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn unexpected(&self, expected: &[&'static str]) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError::Syntax {
                offset: tok.position,
                expected: expected.to_vec(),
                found: format!("{} `{}`", tok.kind.describe(), tok.lexeme),
            },
            None => ParseError::Syntax {
                offset: self.end,
                expected: expected.to_vec(),
                found: "end of input".to_string(),
            },
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<&Token<'a>, ParseError> {
        if self.peek_kind() == Some(kind) {
            self.pos += 1;
            Ok(&self.tokens[self.pos - 1])
        } else {
            Err(self.unexpected(&[kind.describe()]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(kind @ (TokenKind::Plus | TokenKind::Minus)) = self.peek_kind() {
            let position = self.tokens[self.pos].position;
            self.pos += 1;
            let rhs = self.term()?;
            let op = if kind == TokenKind::Plus { BinOp::Add } else { BinOp::Sub };
            lhs = binary(op, lhs, rhs, position);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(kind @ (TokenKind::Star | TokenKind::Slash)) = self.peek_kind() {
            let position = self.tokens[self.pos].position;
            self.pos += 1;
            let rhs = self.factor()?;
            let op = if kind == TokenKind::Star { BinOp::Mul } else { BinOp::Div };
            lhs = binary(op, lhs, rhs, position);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        // A leading minus covers the whole power: -x^2 == -(x^2).
        if self.peek_kind() == Some(TokenKind::Minus) {
            let position = self.tokens[self.pos].position;
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr {
                kind: ExprKind::Neg(Box::new(inner)),
                position,
            });
        }
        let base = self.atom()?;
        if self.peek_kind() == Some(TokenKind::Caret) {
            let position = self.tokens[self.pos].position;
            self.pos += 1;
            let exponent = self.factor()?;
            return Ok(binary(BinOp::Pow, base, exponent, position));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        const ATOM: &[&str] = &["number", "identifier", "'('", "'-'"];
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected(ATOM));
        };
        match tok.kind {
            TokenKind::Number => {
                self.pos += 1;
                let value: f64 = tok.lexeme.parse().map_err(|_| ParseError::Syntax {
                    offset: tok.position,
                    expected: vec!["number"],
                    found: format!("`{}`", tok.lexeme),
                })?;
                Ok(Expr {
                    kind: ExprKind::Const(value),
                    position: tok.position,
                })
            }
            TokenKind::Identifier => {
                self.pos += 1;
                if self.peek_kind() == Some(TokenKind::LParen) {
                    self.call(&tok)
                } else {
                    self.variable(&tok)
                }
            }
            TokenKind::LParen => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            _ => Err(self.unexpected(ATOM)),
        }
    }

    fn variable(&self, tok: &Token<'_>) -> Result<Expr, ParseError> {
        match Var::from_name(tok.lexeme) {
            Some(v) if self.allowed.contains(&v) => Ok(Expr {
                kind: ExprKind::Var(v),
                position: tok.position,
            }),
            _ => Err(ParseError::UndeclaredVariable {
                name: tok.lexeme.to_string(),
                offset: tok.position,
                allowed: self
                    .allowed
                    .iter()
                    .map(|v| v.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            }),
        }
    }

    fn call(&mut self, tok: &Token<'_>) -> Result<Expr, ParseError> {
        let func = Func::from_name(tok.lexeme).ok_or_else(|| ParseError::UnknownFunction {
            name: tok.lexeme.to_string(),
            offset: tok.position,
        })?;
        self.expect(TokenKind::LParen)?;
        let mut args = vec![self.expr()?];
        while self.peek_kind() == Some(TokenKind::Comma) {
            self.pos += 1;
            args.push(self.expr()?);
        }
        if self.peek_kind() != Some(TokenKind::RParen) {
            return Err(self.unexpected(&["','", "')'"]));
        }
        self.pos += 1;
        if args.len() != func.arity() {
            return Err(ParseError::Arity {
                name: func.name(),
                offset: tok.position,
                expected: func.arity(),
                found: args.len(),
            });
        }
        Ok(Expr {
            kind: ExprKind::Call(func, args),
            position: tok.position,
        })
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr, position: usize) -> Expr {
    Expr {
        kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        position,
    }
}
