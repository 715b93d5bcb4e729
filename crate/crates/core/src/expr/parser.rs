use super::{BinOp, Func, Node};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (pos, tok) = lx.next()?;
            let end = tok == Tok::End;
            out.push((pos, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next(&mut self) -> Result<(usize, Tok)> {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += self.peek().map_or(0, char::len_utf8);
        }
        let start = self.pos;
        let Some(c) = self.peek() else {
            return Ok((start, Tok::End));
        };
        if c.is_ascii_digit() || c == '.' {
            return self.number(start);
        }
        if c.is_alphabetic() || c == '_' {
            while self
                .peek()
                .is_some_and(|c| c.is_alphanumeric() || c == '_')
            {
                self.pos += self.peek().map_or(0, char::len_utf8);
            }
            return Ok((start, Tok::Ident(self.src[start..self.pos].to_string())));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((start, Tok::Op(c)));
        }
        Err(Error::Syntax {
            position: start,
            message: format!("unexpected character `{c}`"),
        })
    }

    fn number(&mut self, start: usize) -> Result<(usize, Tok)> {
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        self.pos = i;
        text.parse::<f64>()
            .map(|v| (start, Tok::Num(v)))
            .map_err(|_| Error::Syntax {
                position: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    vars: &'a [String],
}

pub(super) fn parse(text: &str, vars: &[String]) -> Result<Node> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, at: 0, vars };
    if p.tok() == &Tok::End {
        return Err(p.error("empty expression"));
    }
    let node = p.expr()?;
    if p.tok() != &Tok::End {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(node)
}

impl Parser<'_> {
    fn tok(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn peek_tok(&self, ahead: usize) -> &Tok {
        &self.toks[(self.at + ahead).min(self.toks.len() - 1)].1
    }

    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            position: self.toks[self.at].0,
            message: message.to_string(),
        }
    }

    fn bump(&mut self) {
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.tok() == &Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        match self.tok() {
            Tok::Op('-') => {
                if let Tok::Num(v) = *self.peek_tok(1) {
                    if self.peek_tok(2) != &Tok::Op('^') {
                        self.bump();
                        self.bump();
                        return Ok(Node::Const(-v));
                    }
                }
                self.bump();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.tok() != &Tok::Op('^') {
            return Ok(base);
        }
        self.bump();
        let exp_pos = self.at;
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(Error::Syntax {
                position: self.toks[exp_pos].0,
                message: "exponent must be a constant; write exp(b*ln(a)) for variable powers"
                    .into(),
            });
        }
        let value = fold_constant(&exponent).ok_or_else(|| Error::Syntax {
            position: self.toks[exp_pos].0,
            message: "exponent does not evaluate to a finite number".into(),
        })?;
        Ok(Node::Pow(Box::new(base), value))
    }

    fn primary(&mut self) -> Result<Node> {
        match self.tok().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Const(v))
            }
            Tok::Op('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    self.bump();
                    return Ok(Node::Var(i));
                }
                if let Some(func) = Func::from_name(&name) {
                    self.bump();
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Node::Func(func, Box::new(arg)));
                }
                if name == "pi" {
                    self.bump();
                    return Ok(Node::Const(std::f64::consts::PI));
                }
                Err(Error::UnknownVariable(name))
            }
            Tok::End => Err(self.error("unexpected end of input")),
            Tok::Op(c) => Err(self.error(&format!("unexpected `{c}`"))),
        }
    }
}

fn fold_constant(node: &Node) -> Option<f64> {
    let v = match node {
        Node::Const(c) => *c,
        Node::Var(_) => return None,
        Node::Neg(a) => -fold_constant(a)?,
        Node::Func(f, a) => {
            let u = fold_constant(a)?;
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Ln => u.ln(),
                Func::Sqrt => u.sqrt(),
            }
        }
        Node::Binary(op, a, b) => {
            let (x, y) = (fold_constant(a)?, fold_constant(b)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => x / y,
            }
        }
        Node::Pow(a, c) => fold_constant(a)?.powf(*c),
    };
    v.is_finite().then_some(v)
}
