//! Arithmetic expressions in one variable `x`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'x' | 'pi' | 'e' | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `×`, `÷` and `−` are accepted for `*`, `/` and `-`. `-x^2` is `-(x^2)`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;
use vstop::ScalarFn;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message} (found {found})")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub found: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Arctan,
    Abs,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "arctan" | "atan" => Func::Arctan,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn apply(self, a: &[f64]) -> f64 {
        match self {
            Func::Exp => a[0].exp(),
            Func::Log => a[0].ln(),
            Func::Sqrt => a[0].sqrt(),
            Func::Sin => a[0].sin(),
            Func::Cos => a[0].cos(),
            Func::Tanh => a[0].tanh(),
            Func::Arctan => a[0].atan(),
            Func::Abs => a[0].abs(),
            Func::Min => a[0].min(a[1]),
            Func::Max => a[0].max(a[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl Node {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Neg(a) => -a.eval(x),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => a.powf(b),
                }
            }
            Node::Call(f, args) => {
                let vals: Vec<f64> = args.iter().map(|a| a.eval(x)).collect();
                f.apply(&vals)
            }
        }
    }

    fn uses_x(&self) -> bool {
        match self {
            Node::Num(_) => false,
            Node::X => true,
            Node::Neg(a) => a.uses_x(),
            Node::Bin(_, a, b) => a.uses_x() || b.uses_x(),
            Node::Call(_, args) => args.iter().any(Node::uses_x),
        }
    }
}

/// A parsed expression.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Arc<Node>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let tokens = lex(source)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(t.error("expected an operator or end of input"));
        }
        Ok(Self {
            source: source.to_string(),
            root: Arc::new(root),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.root.eval(x)
    }

    /// Value of an expression that does not mention `x`.
    pub fn constant(&self) -> Option<f64> {
        (!self.root.uses_x()).then(|| self.root.eval(0.0))
    }

    /// Constant expressions become [`ScalarFn::constant`] so that the
    /// solvers can recognise them.
    pub fn to_fn(&self) -> ScalarFn {
        match self.constant() {
            Some(c) => ScalarFn::constant(c),
            None => {
                let root = Arc::clone(&self.root);
                ScalarFn::new(self.source.clone(), move |x| root.eval(x))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    column: usize,
}

impl Token {
    fn error(&self, message: &str) -> ParseError {
        ParseError {
            column: self.column,
            found: format!("'{}'", self.text),
            message: message.to_string(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text.parse::<f64>().map_err(|_| ParseError {
                column,
                found: format!("'{text}'"),
                message: "malformed number".into(),
            })?;
            out.push(Token { tok: Tok::Num(value), text, column });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token { tok: Tok::Ident(text.clone()), text, column });
        } else {
            let sym = match c {
                '+' | '-' | '*' | '/' | '^' | '(' | ')' | ',' => c,
                '×' | '·' => '*',
                '÷' => '/',
                '−' => '-',
                _ => {
                    return Err(ParseError {
                        column,
                        found: format!("'{c}'"),
                        message: "unexpected character".into(),
                    })
                }
            };
            out.push(Token { tok: Tok::Sym(sym), text: c.to_string(), column });
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, sym: char) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn end_error(&self, message: &str) -> ParseError {
        let column = self.tokens.last().map_or(1, |t| t.column + t.text.chars().count());
        ParseError {
            column,
            found: "end of input".into(),
            message: message.to_string(),
        }
    }

    fn expect(&mut self, sym: char) -> Result<(), ParseError> {
        if self.eat(sym) {
            return Ok(());
        }
        let message = format!("expected '{sym}'");
        Err(match self.peek() {
            Some(t) => t.error(&message),
            None => self.end_error(&message),
        })
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(t) = self.peek().cloned() else {
            return Err(self.end_error("expected a number, 'x', a function or '('"));
        };
        self.pos += 1;
        match &t.tok {
            Tok::Num(v) => Ok(Node::Num(*v)),
            Tok::Sym('(') => {
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Sym(_) => Err(t.error("expected a number, 'x', a function or '('")),
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::X),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "e" => Ok(Node::Num(std::f64::consts::E)),
                _ => {
                    let Some(func) = Func::lookup(name) else {
                        return Err(t.error("unknown name"));
                    };
                    self.expect('(')?;
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != func.arity() {
                        return Err(t.error(&format!(
                            "{name} takes {} argument(s), got {}",
                            func.arity(),
                            args.len()
                        )));
                    }
                    Ok(Node::Call(func, args))
                }
            },
        }
    }
}
