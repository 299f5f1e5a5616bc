use super::{BinOp, Expr, Func, ParseError};

pub(super) struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    pub(super) fn parse(mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        if self.pos == self.src.len() {
            return Err(self.error("empty expression"));
        }
        let e = self.expr()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("unexpected trailing input"));
        }
        Ok(e)
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax { position: self.pos + 1, message: message.to_string() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    /// Consumes `c` if it is next; the Unicode minus sign counts as '-'.
    fn eat(&mut self, c: char) -> bool {
        match self.peek() {
            Some(p) if p == c || (c == '-' && p == '\u{2212}') => {
                self.pos += p.len_utf8();
                true
            }
            _ => false,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.identifier(),
            Some(_) => Err(self.error("expected a number, 'x', a function call or '('")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |mut i: usize| {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            i
        };
        let mut end = digits(start);
        let int_digits = end - start;
        let mut frac_digits = 0;
        if end < bytes.len() && bytes[end] == b'.' {
            let after = digits(end + 1);
            frac_digits = after - end - 1;
            end = after;
        }
        if int_digits + frac_digits == 0 {
            return Err(self.error("malformed number"));
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut i = end + 1;
            if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                i += 1;
            }
            let after = digits(i);
            if after == i {
                self.pos = after;
                return Err(self.error("malformed exponent"));
            }
            end = after;
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| self.error("malformed number"))?;
        if !value.is_finite() {
            return Err(self.error("number out of range"));
        }
        self.pos = end;
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let len = self.rest().bytes().take_while(|b| b.is_ascii_alphanumeric() || *b == b'_').count();
        let name = &self.src[start..start + len];
        let func = match name {
            "x" => {
                self.pos += len;
                return Ok(Expr::X);
            }
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => {
                return Err(ParseError::UnknownIdentifier { name: name.to_string(), position: start + 1 });
            }
        };
        self.pos += len;
        if !self.eat('(') {
            return Err(self.error("expected '(' after function name"));
        }
        let arg = self.expr()?;
        if !self.eat(')') {
            return Err(self.error("expected ')'"));
        }
        Ok(Expr::Call(func, Box::new(arg)))
    }
}
