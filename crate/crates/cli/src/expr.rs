//! Complex expressions in `z` for `verify growth --custom`.
//!
//! Grammar: `+ - * / ^`, parentheses, numbers, `z`, `zbar`, `i`, `pi`, and the
//! functions `log exp sqrt abs conj re im`. `log` is the principal branch.

use std::fmt;

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Z,
    Zbar,
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func {
    Log,
    Exp,
    Sqrt,
    Abs,
    Conj,
    Re,
    Im,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(s: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part, e.g. 1e-3
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v = s[start..i].parse().map_err(|_| ParseError {
                position: start,
                message: format!("bad number {:?}", &s[start..i]),
            })?;
            out.push((start, Token::Num(v)));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Token::Ident(s[start..i].to_string())));
        } else if "+-*/^()".contains(c) {
            out.push((i, Token::Sym(c)));
            i += 1;
        } else {
            return Err(ParseError {
                position: i,
                message: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.here(),
            message: message.into(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        let base = self.atom()?;
        if self.eat('^') {
            // right associative, binds tighter than unary minus on the left
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(Complex64::new(v, 0.0))),
            Token::Sym('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected ')'");
                }
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "z" => Ok(Expr::Z),
                "zbar" => Ok(Expr::Zbar),
                "i" => Ok(Expr::Num(Complex64::new(0.0, 1.0))),
                "pi" => Ok(Expr::Num(Complex64::new(std::f64::consts::PI, 0.0))),
                _ => {
                    let f = match name.as_str() {
                        "log" => Func::Log,
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        "abs" => Func::Abs,
                        "conj" => Func::Conj,
                        "re" => Func::Re,
                        "im" => Func::Im,
                        _ => {
                            self.pos -= 1;
                            return self.err(format!("unknown name {name:?}"));
                        }
                    };
                    if !self.eat('(') {
                        return self.err(format!("expected '(' after {name}"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return self.err("expected ')'");
                    }
                    Ok(Expr::Call(f, Box::new(arg)))
                }
            },
            Token::Sym(c) => {
                self.pos -= 1;
                self.err(format!("unexpected {c:?}"))
            }
        }
    }
}

impl Expr {
    pub fn parse(s: &str) -> Result<Expr, ParseError> {
        let mut p = Parser {
            tokens: tokenize(s)?,
            pos: 0,
            end: s.len(),
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Z => z,
            Expr::Zbar => z.conj(),
            Expr::Neg(a) => -a.eval(z),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(z), b.eval(z));
                match op {
                    Op::Add => x + y,
                    Op::Sub => x - y,
                    Op::Mul => x * y,
                    Op::Div => x / y,
                    Op::Pow if y.im == 0.0 && y.re.fract() == 0.0 && y.re.abs() < 1e6 => x.powi(y.re as i32),
                    Op::Pow => x.powc(y),
                }
            }
            Expr::Call(f, a) => {
                let x = a.eval(z);
                match f {
                    Func::Log => x.ln(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => Complex64::new(x.norm(), 0.0),
                    Func::Conj => x.conj(),
                    Func::Re => Complex64::new(x.re, 0.0),
                    Func::Im => Complex64::new(x.im, 0.0),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(s: &str, z: Complex64) -> Complex64 {
        Expr::parse(s).unwrap().eval(z)
    }

    #[test]
    fn precedence_and_associativity() {
        let z = Complex64::new(2.0, 0.0);
        assert_eq!(at("1 + 2 * z", z).re, 5.0);
        assert_eq!(at("2 ^ 3 ^ 2", z).re, 512.0);
        assert_eq!(at("-z ^ 2", z).re, -4.0);
        assert_eq!(at("(1 + z) / 3 - 1", z).re, 0.0);
        assert_eq!(at("1e-3 * 1E3", z).re, 1.0);
    }

    #[test]
    fn matches_the_builtin_fixture() {
        let z = Complex64::from_polar(1e-3, 0.7);
        let got = at("1 / (z * log(abs(z)^2))", z);
        let want = 1.0 / (z * z.norm_sqr().ln());
        assert!((got - want).norm() < 1e-12 * want.norm());
        assert_eq!(at("zbar", z), z.conj());
        assert_eq!(at("conj(z) * i", z), z.conj() * Complex64::i());
    }

    #[test]
    fn errors_point_at_the_problem() {
        assert_eq!(Expr::parse("z +").unwrap_err().position, 3);
        assert_eq!(Expr::parse("foo(z)").unwrap_err().position, 0);
        assert_eq!(Expr::parse("z $ 1").unwrap_err().position, 2);
        assert!(Expr::parse("(z").is_err());
        assert!(Expr::parse("z z").is_err());
        assert!(Expr::parse("log z").is_err());
    }
}
