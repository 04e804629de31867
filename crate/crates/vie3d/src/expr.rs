//! A small arithmetic expression language used to declare the data of a
//! problem: the free term `f`, the kernel, the pointwise nonlinearity, and
//! reference solutions.
//!
//! Grammar (see the README for the full EBNF):
//!
//! ```text
//! expr   = term  { ("+" | "-") term }
//! term   = unary { ("*" | "/") unary }
//! unary  = "-" unary | power
//! power  = atom [ "^" unary ]              (right-associative)
//! atom   = NUMBER | CONSTANT | VARIABLE | FUNCTION "(" expr ")" | "(" expr ")"
//! ```
//!
//! `^` binds tighter than unary minus, so `-2^2` is `-(2^2)`. The variable
//! set is fixed: `x, y, z` (outer coordinates), `r, s, t` (integration
//! variables), and `u` (the nonlinearity argument). Functions: `sin, cos,
//! tan, exp, ln, sqrt, abs`. Constants: `pi, e`.

use std::fmt;

/// The fixed variable set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
    R,
    S,
    T,
    U,
}

impl Var {
    pub const ALL: [Var; 7] = [Var::X, Var::Y, Var::Z, Var::R, Var::S, Var::T, Var::U];

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::R => "r",
            Var::S => "s",
            Var::T => "t",
            Var::U => "u",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "y" => Some(Var::Y),
            "z" => Some(Var::Z),
            "r" => Some(Var::R),
            "s" => Some(Var::S),
            "t" => Some(Var::T),
            "u" => Some(Var::U),
            _ => None,
        }
    }

    fn index(self) -> usize {
        match self {
            Var::X => 0,
            Var::Y => 1,
            Var::Z => 2,
            Var::R => 3,
            Var::S => 4,
            Var::T => 5,
            Var::U => 6,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A set of variables, used to validate which variables an expression may
/// reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VarSet(u8);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn of(vars: &[Var]) -> VarSet {
        let mut s = VarSet::EMPTY;
        for v in vars {
            s.insert(*v);
        }
        s
    }

    pub fn insert(&mut self, v: Var) {
        self.0 |= 1 << v.index();
    }

    pub fn contains(&self, v: Var) -> bool {
        self.0 & (1 << v.index()) != 0
    }

    pub fn is_subset_of(&self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        Var::ALL.iter().copied().filter(|v| self.contains(*v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sqrt" => Some(Func::Sqrt),
            "abs" => Some(Func::Abs),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Const {
    Pi,
    E,
}

impl Const {
    pub fn name(self) -> &'static str {
        match self {
            Const::Pi => "pi",
            Const::E => "e",
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Const::Pi => std::f64::consts::PI,
            Const::E => std::f64::consts::E,
        }
    }

    fn from_name(name: &str) -> Option<Const> {
        match name {
            "pi" => Some(Const::Pi),
            "e" => Some(Const::E),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Immutable expression tree. Parsing never produces negative number
/// literals; a leading minus always becomes [`Expr::Neg`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Constant(Const),
    Variable(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Partial map from the fixed variable set to values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    values: [Option<f64>; 7],
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    pub fn with(mut self, var: Var, value: f64) -> Bindings {
        self.values[var.index()] = Some(value);
        self
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.values[var.index()]
    }

    /// Binds the outer coordinates `x, y, z`.
    pub fn point(x: f64, y: f64, z: f64) -> Bindings {
        Bindings::new().with(Var::X, x).with(Var::Y, y).with(Var::Z, z)
    }

    /// Binds all six kernel arguments.
    pub fn kernel(x: f64, y: f64, z: f64, r: f64, s: f64, t: f64) -> Bindings {
        Bindings::point(x, y, z)
            .with(Var::R, r)
            .with(Var::S, s)
            .with(Var::T, t)
    }

    /// Binds the nonlinearity argument `u`.
    pub fn scalar(u: f64) -> Bindings {
        Bindings::new().with(Var::U, u)
    }
}

// ---------------------------------------------------------------------------
// errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// Byte offset into the source where the error was detected.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    EmptyInput,
    InvalidNumber,
    UnexpectedChar(char),
    UnknownIdentifier(String),
    FunctionNeedsParen(String),
    ExpectedOperand,
    UnbalancedParen,
    TrailingInput,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at byte {}: ", self.offset)?;
        match &self.kind {
            ParseErrorKind::EmptyInput => write!(f, "empty expression"),
            ParseErrorKind::InvalidNumber => write!(f, "malformed number literal"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::UnknownIdentifier(name) => {
                write!(f, "unknown identifier \"{name}\"")
            }
            ParseErrorKind::FunctionNeedsParen(name) => {
                write!(f, "function \"{name}\" must be called with parentheses")
            }
            ParseErrorKind::ExpectedOperand => write!(f, "expected an operand"),
            ParseErrorKind::UnbalancedParen => write!(f, "unbalanced parentheses"),
            ParseErrorKind::TrailingInput => write!(f, "unexpected trailing input"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    /// Rendering of the offending sub-expression.
    pub expr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalErrorKind {
    UnboundVariable(Var),
    DivisionByZero,
    LogNonPositive,
    SqrtNegative,
    NonFinite,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EvalErrorKind::UnboundVariable(v) => {
                write!(f, "variable \"{v}\" is unbound in \"{}\"", self.expr)
            }
            EvalErrorKind::DivisionByZero => write!(f, "division by zero in \"{}\"", self.expr),
            EvalErrorKind::LogNonPositive => {
                write!(f, "ln of a non-positive value in \"{}\"", self.expr)
            }
            EvalErrorKind::SqrtNegative => {
                write!(f, "sqrt of a negative value in \"{}\"", self.expr)
            }
            EvalErrorKind::NonFinite => {
                write!(f, "non-finite result in \"{}\"", self.expr)
            }
        }
    }
}

impl std::error::Error for EvalError {}

#[derive(Debug, Clone, PartialEq)]
pub enum DiffError {
    /// The expression references a variable other than `u`.
    DisallowedVariable(Var),
}

impl fmt::Display for DiffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffError::DisallowedVariable(v) => {
                write!(f, "cannot differentiate with respect to u: expression references \"{v}\"")
            }
        }
    }
}

impl std::error::Error for DiffError {}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let offset = i;
        match c {
            ' ' | '\t' | '\r' | '\n' => {
                i += 1;
            }
            '+' | '-' | '*' | '/' | '^' | '(' | ')' => {
                let kind = match c {
                    '+' => TokenKind::Plus,
                    '-' => TokenKind::Minus,
                    '*' => TokenKind::Star,
                    '/' => TokenKind::Slash,
                    '^' => TokenKind::Caret,
                    '(' => TokenKind::LParen,
                    _ => TokenKind::RParen,
                };
                tokens.push(Token { kind, offset });
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
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
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::InvalidNumber,
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset: start,
                });
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(ParseError {
                    offset,
                    kind: ParseErrorKind::UnexpectedChar(c),
                });
            }
        }
    }
    Ok(tokens)
}

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind,
        }
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            let op = match self.peek() {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.parse_unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Minus) {
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.eat(&TokenKind::Caret) {
            // a signed exponent is allowed: x^-2 parses as x^(-2)
            let exponent = self.parse_unary()?;
            return Ok(Expr::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Number(v))
            }
            Some(TokenKind::Ident(name)) => {
                let ident_offset = self.offset();
                self.pos += 1;
                if let Some(var) = Var::from_name(&name) {
                    return Ok(Expr::Variable(var));
                }
                if let Some(c) = Const::from_name(&name) {
                    return Ok(Expr::Constant(c));
                }
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat(&TokenKind::LParen) {
                        return Err(ParseError {
                            offset: ident_offset,
                            kind: ParseErrorKind::FunctionNeedsParen(name),
                        });
                    }
                    let arg = self.parse_expr()?;
                    if !self.eat(&TokenKind::RParen) {
                        return Err(self.err(ParseErrorKind::UnbalancedParen));
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Err(ParseError {
                    offset: ident_offset,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                })
            }
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                if !self.eat(&TokenKind::RParen) {
                    return Err(self.err(ParseErrorKind::UnbalancedParen));
                }
                Ok(inner)
            }
            _ => Err(self.err(ParseErrorKind::ExpectedOperand)),
        }
    }
}

/// Parses an expression; errors carry the byte offset of the failure.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = lex(src)?;
    if tokens.is_empty() {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::EmptyInput,
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: src.len(),
    };
    let expr = parser.parse_expr()?;
    if let Some(tok) = parser.tokens.get(parser.pos) {
        let kind = if tok.kind == TokenKind::RParen {
            ParseErrorKind::UnbalancedParen
        } else {
            ParseErrorKind::TrailingInput
        };
        return Err(ParseError {
            offset: tok.offset,
            kind,
        });
    }
    Ok(expr)
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

/// `^` uses repeated multiplication for integral exponents with magnitude
/// up to 16, so polynomial kernels evaluate exactly; everything else goes
/// through `powf`.
#[inline]
fn apply_pow(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 16.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

impl Expr {
    /// IEEE double evaluation under the given bindings. Domain errors and
    /// non-finite intermediate results are reported with the offending
    /// sub-expression.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        self.eval_inner(bindings).map_err(|(kind, at)| EvalError {
            kind,
            expr: at.to_string(),
        })
    }

    fn eval_inner<'a>(&'a self, b: &Bindings) -> Result<f64, (EvalErrorKind, &'a Expr)> {
        let value = match self {
            Expr::Number(v) => *v,
            Expr::Constant(c) => c.value(),
            Expr::Variable(v) => b
                .get(*v)
                .ok_or((EvalErrorKind::UnboundVariable(*v), self))?,
            Expr::Neg(a) => -a.eval_inner(b)?,
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval_inner(b)?;
                let r = rhs.eval_inner(b)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err((EvalErrorKind::DivisionByZero, self));
                        }
                        l / r
                    }
                    BinOp::Pow => apply_pow(l, r),
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval_inner(b)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Tan => a.tan(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err((EvalErrorKind::LogNonPositive, self));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err((EvalErrorKind::SqrtNegative, self));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                }
            }
        };
        if !value.is_finite() {
            return Err((EvalErrorKind::NonFinite, self));
        }
        Ok(value)
    }

    /// The set of variables referenced anywhere in the tree.
    pub fn variables(&self) -> VarSet {
        let mut set = VarSet::EMPTY;
        self.collect_variables(&mut set);
        set
    }

    fn collect_variables(&self, set: &mut VarSet) {
        match self {
            Expr::Number(_) | Expr::Constant(_) => {}
            Expr::Variable(v) => set.insert(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_variables(set),
            Expr::Binary(_, a, b) => {
                a.collect_variables(set);
                b.collect_variables(set);
            }
        }
    }

    /// Symbolic derivative with respect to `u`, for nonlinearity
    /// expressions. Rejects expressions referencing any other variable.
    /// The result is not simplified; callers evaluate it.
    pub fn differentiate_u(&self) -> Result<Expr, DiffError> {
        let vars = self.variables();
        for v in Var::ALL {
            if v != Var::U && vars.contains(v) {
                return Err(DiffError::DisallowedVariable(v));
            }
        }
        Ok(self.d_u())
    }

    fn d_u(&self) -> Expr {
        match self {
            Expr::Number(_) | Expr::Constant(_) => num(0.0),
            Expr::Variable(Var::U) => num(1.0),
            Expr::Variable(_) => num(0.0),
            Expr::Neg(a) => neg(a.d_u()),
            Expr::Binary(BinOp::Add, a, b) => add(a.d_u(), b.d_u()),
            Expr::Binary(BinOp::Sub, a, b) => sub(a.d_u(), b.d_u()),
            Expr::Binary(BinOp::Mul, a, b) => add(
                mul(a.d_u(), (**b).clone()),
                mul((**a).clone(), b.d_u()),
            ),
            Expr::Binary(BinOp::Div, a, b) => div(
                sub(
                    mul(a.d_u(), (**b).clone()),
                    mul((**a).clone(), b.d_u()),
                ),
                pow((**b).clone(), num(2.0)),
            ),
            Expr::Binary(BinOp::Pow, base, exponent) => {
                let base_has_u = base.variables().contains(Var::U);
                let exp_has_u = exponent.variables().contains(Var::U);
                match (base_has_u, exp_has_u) {
                    // constant exponent: n * a^(n-1) * a'
                    (_, false) => mul(
                        mul(
                            (**exponent).clone(),
                            pow((**base).clone(), sub((**exponent).clone(), num(1.0))),
                        ),
                        base.d_u(),
                    ),
                    // constant base: a^b * ln(a) * b'
                    (false, true) => mul(
                        mul(
                            pow((**base).clone(), (**exponent).clone()),
                            call(Func::Ln, (**base).clone()),
                        ),
                        exponent.d_u(),
                    ),
                    // general: a^b * (b' ln a + b a'/a)
                    (true, true) => mul(
                        pow((**base).clone(), (**exponent).clone()),
                        add(
                            mul(exponent.d_u(), call(Func::Ln, (**base).clone())),
                            mul(
                                (**exponent).clone(),
                                div(base.d_u(), (**base).clone()),
                            ),
                        ),
                    ),
                }
            }
            Expr::Call(func, a) => {
                let inner = a.d_u();
                let outer = match func {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Tan => div(
                        num(1.0),
                        pow(call(Func::Cos, (**a).clone()), num(2.0)),
                    ),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                    Func::Ln => div(num(1.0), (**a).clone()),
                    Func::Sqrt => div(
                        num(1.0),
                        mul(num(2.0), call(Func::Sqrt, (**a).clone())),
                    ),
                    // sign(a), undefined at a = 0
                    Func::Abs => div((**a).clone(), call(Func::Abs, (**a).clone())),
                };
                mul(outer, inner)
            }
        }
    }
}

fn num(v: f64) -> Expr {
    Expr::Number(v)
}

fn neg(a: Expr) -> Expr {
    Expr::Neg(Box::new(a))
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::Binary(BinOp::Add, Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    Expr::Binary(BinOp::Sub, Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    Expr::Binary(BinOp::Mul, Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    Expr::Binary(BinOp::Div, Box::new(a), Box::new(b))
}

fn pow(a: Expr, b: Expr) -> Expr {
    Expr::Binary(BinOp::Pow, Box::new(a), Box::new(b))
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

/// Precedence levels used by the printer; parenthesization is chosen so
/// that `parse(expr.to_string())` reconstructs the same tree.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Binary(BinOp::Pow, ..) => 4,
        Expr::Number(_) | Expr::Constant(_) | Expr::Variable(_) | Expr::Call(..) => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Constant(c) => f.write_str(c.name()),
            Expr::Variable(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, 3)
            }
            Expr::Binary(op, a, b) => match op {
                BinOp::Add | BinOp::Sub => {
                    write_child(f, a, 1)?;
                    write!(f, " {} ", op.symbol())?;
                    write_child(f, b, 2)
                }
                BinOp::Mul | BinOp::Div => {
                    write_child(f, a, 2)?;
                    f.write_str(op.symbol())?;
                    write_child(f, b, 3)
                }
                BinOp::Pow => {
                    write_child(f, a, 5)?;
                    f.write_str(op.symbol())?;
                    write_child(f, b, 3)
                }
            },
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn eval_str(src: &str, b: &Bindings) -> f64 {
        parse(src).unwrap().eval(b).unwrap()
    }

    #[test]
    fn shifted_t1_formula() {
        let v = eval_str("2*x - 1", &Bindings::new().with(Var::X, 0.75));
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn example_3_4_free_term() {
        let e = parse("x*cos(z) - (x^3*y^3)/9*sin(z)").unwrap();
        let v = e.eval(&Bindings::point(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sin_of_zero() {
        assert_eq!(eval_str("sin(0)", &Bindings::new()), 0.0);
    }

    #[test]
    fn sum_of_coordinates() {
        let v = eval_str("x+y+z", &Bindings::point(0.1, 0.2, 0.3));
        assert_abs_diff_eq!(v, 0.6, epsilon = 1e-15);
    }

    #[test]
    fn example_3_5_free_term_at_origin() {
        let e = parse("exp(x+y)+exp(x+z)+exp(y+z)-exp(x)-exp(y)-exp(z)+1").unwrap();
        assert_eq!(e.eval(&Bindings::point(0.0, 0.0, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn example_3_3_prefactor() {
        let e = parse("-(x*y*z)^3/27").unwrap();
        let v = e.eval(&Bindings::point(1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(v, -1.0 / 27.0, epsilon = 1e-16);
    }

    #[test]
    fn precedence_rules() {
        let b = Bindings::new();
        assert_eq!(eval_str("2+3*4", &b), 14.0);
        assert_eq!(eval_str("2^3^2", &b), 512.0);
        assert_eq!(eval_str("-2^2", &b), -4.0);
        assert_eq!(eval_str("2^-2", &b), 0.25);
        assert_eq!(eval_str("(2+3)*4", &b), 20.0);
    }

    #[test]
    fn integer_powers_multiply_out() {
        let b = Bindings::new().with(Var::X, 0.2);
        assert_eq!(eval_str("x^3", &b), (0.2f64).powi(3));
        assert_eq!(eval_str("x^0", &b), 1.0);
        let frac = eval_str("2^0.5", &Bindings::new());
        assert_abs_diff_eq!(frac, 2.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn constants() {
        assert_abs_diff_eq!(
            eval_str("sin(pi/2)", &Bindings::new()),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            eval_str("ln(e)", &Bindings::new()),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn unknown_identifier_reports_offset() {
        match parse("2 + foo") {
            Err(ParseError {
                offset,
                kind: ParseErrorKind::UnknownIdentifier(name),
            }) => {
                assert_eq!(offset, 4);
                assert_eq!(name, "foo");
            }
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_parentheses() {
        assert!(matches!(
            parse("(2+3").unwrap_err().kind,
            ParseErrorKind::UnbalancedParen
        ));
        assert!(matches!(
            parse("2+3)").unwrap_err().kind,
            ParseErrorKind::UnbalancedParen
        ));
        assert!(matches!(
            parse("sin(x").unwrap_err().kind,
            ParseErrorKind::UnbalancedParen
        ));
    }

    #[test]
    fn empty_operands() {
        let err = parse("2*").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ExpectedOperand);
        assert_eq!(err.offset, 2);
        assert!(matches!(
            parse("()").unwrap_err().kind,
            ParseErrorKind::ExpectedOperand
        ));
        assert!(matches!(
            parse("   ").unwrap_err().kind,
            ParseErrorKind::EmptyInput
        ));
        assert!(matches!(
            parse("2 3").unwrap_err().kind,
            ParseErrorKind::TrailingInput
        ));
    }

    #[test]
    fn unbound_variable_reported() {
        let e = parse("x + r").unwrap();
        let err = e.eval(&Bindings::new().with(Var::X, 1.0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::UnboundVariable(Var::R));
        assert_eq!(err.expr, "r");
    }

    #[test]
    fn domain_errors_carry_subexpression() {
        let e = parse("1 + ln(x - 2)").unwrap();
        let err = e.eval(&Bindings::new().with(Var::X, 1.0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::LogNonPositive);
        assert_eq!(err.expr, "ln(x - 2)");

        let e = parse("x / (y - y)").unwrap();
        let err = e
            .eval(&Bindings::new().with(Var::X, 1.0).with(Var::Y, 3.0))
            .unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::DivisionByZero);

        let e = parse("sqrt(-x)").unwrap();
        let err = e.eval(&Bindings::new().with(Var::X, 4.0)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::SqrtNegative);
    }

    #[test]
    fn overflow_is_non_finite() {
        let e = parse("exp(x)").unwrap();
        let err = e.eval(&Bindings::new().with(Var::X, 1e4)).unwrap_err();
        assert_eq!(err.kind, EvalErrorKind::NonFinite);
    }

    #[test]
    fn derivative_of_u_squared() {
        let d = parse("u^2").unwrap().differentiate_u().unwrap();
        for u in [-1.0, 0.0, 0.5, 2.0] {
            let v = d.eval(&Bindings::scalar(u)).unwrap();
            assert_abs_diff_eq!(v, 2.0 * u, epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_of_identity() {
        let d = parse("u").unwrap().differentiate_u().unwrap();
        assert_eq!(d.eval(&Bindings::scalar(7.0)).unwrap(), 1.0);
    }

    #[test]
    fn derivative_of_product_matches_finite_differences() {
        let d = parse("sin(u)*u").unwrap().differentiate_u().unwrap();
        let f = parse("sin(u)*u").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..20 {
            let u: f64 = rng.gen_range(-3.0..3.0);
            let fd = (f.eval(&Bindings::scalar(u + h)).unwrap()
                - f.eval(&Bindings::scalar(u - h)).unwrap())
                / (2.0 * h);
            let sym = d.eval(&Bindings::scalar(u)).unwrap();
            assert_abs_diff_eq!(sym, fd, epsilon = 1e-6);
            assert_abs_diff_eq!(sym, u.sin() + u * u.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_corpus_matches_finite_differences() {
        // relative error <= 1e-6 away from domain boundaries
        let corpus = [
            "u^3 - 2*u",
            "exp(u)",
            "cos(u^2)",
            "sqrt(u + 2)",
            "ln(u + 3)",
            "u/(u^2 + 1)",
            "tan(u/2)",
            "exp(-u^2)*sin(u)",
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = 1e-6;
        for src in corpus {
            let f = parse(src).unwrap();
            let d = f.differentiate_u().unwrap();
            for _ in 0..10 {
                let u: f64 = rng.gen_range(-1.0..1.0);
                let fd = (f.eval(&Bindings::scalar(u + h)).unwrap()
                    - f.eval(&Bindings::scalar(u - h)).unwrap())
                    / (2.0 * h);
                let sym = d.eval(&Bindings::scalar(u)).unwrap();
                let scale = sym.abs().max(1.0);
                assert!(
                    (sym - fd).abs() <= 1e-6 * scale,
                    "{src} at u={u}: {sym} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn derivative_rejects_other_variables() {
        assert!(matches!(
            parse("u + x").unwrap().differentiate_u(),
            Err(DiffError::DisallowedVariable(Var::X))
        ));
    }

    /// Random AST generator for the round-trip property. Numbers are
    /// non-negative (a leading minus always parses as `Neg`).
    fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
        if depth == 0 {
            return match rng.gen_range(0..3) {
                0 => num((rng.gen_range(0..1000) as f64) / 64.0),
                1 => Expr::Variable(Var::ALL[rng.gen_range(0..7)]),
                _ => Expr::Constant(if rng.gen_bool(0.5) { Const::Pi } else { Const::E }),
            };
        }
        match rng.gen_range(0..8) {
            0 => neg(random_expr(rng, depth - 1)),
            1 => add(random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
            2 => sub(random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
            3 => mul(random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
            4 => div(random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
            5 => pow(random_expr(rng, depth - 1), num(rng.gen_range(0..4) as f64)),
            6 => {
                let funcs = [Func::Sin, Func::Cos, Func::Exp, Func::Abs];
                call(funcs[rng.gen_range(0..4)], random_expr(rng, depth - 1))
            }
            _ => random_expr(rng, depth - 1),
        }
    }

    #[test]
    fn print_parse_roundtrip_is_stable() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
        for _ in 0..100 {
            let ast = random_expr(&mut rng, 4);
            let printed = ast.to_string();
            let reparsed = parse(&printed)
                .unwrap_or_else(|e| panic!("failed to reparse \"{printed}\": {e}"));
            assert_eq!(reparsed, ast, "round-trip changed \"{printed}\"");
            // and evaluation agrees bit-for-bit where it succeeds
            for _ in 0..10 {
                let mut b = Bindings::new();
                for v in Var::ALL {
                    b = b.with(v, rng.gen_range(-2.0..2.0));
                }
                match (ast.eval(&b), reparsed.eval(&b)) {
                    (Ok(a), Ok(c)) => assert_eq!(a.to_bits(), c.to_bits()),
                    (Err(_), Err(_)) => {}
                    (a, c) => panic!("eval mismatch: {a:?} vs {c:?}"),
                }
            }
        }
    }

    #[test]
    fn printer_precedence_examples() {
        let cases = [
            "2 + 3*4",
            "2^3^2",
            "-2^2",
            "x*cos(z) - x^3*y^3/9*sin(z)",
            "(x + y)*(x - y)",
            "-(x + y)",
            "x - (y - z)",
        ];
        for src in cases {
            let ast = parse(src).unwrap();
            assert_eq!(parse(&ast.to_string()).unwrap(), ast, "case {src}");
        }
    }

    #[test]
    fn variable_sets() {
        let e = parse("x*cos(z) - r*s^2*u").unwrap();
        let vars = e.variables();
        assert!(vars.contains(Var::X));
        assert!(vars.contains(Var::Z));
        assert!(vars.contains(Var::R));
        assert!(vars.contains(Var::S));
        assert!(vars.contains(Var::U));
        assert!(!vars.contains(Var::Y));
        assert!(!vars.contains(Var::T));
        assert!(vars.is_subset_of(VarSet::of(&Var::ALL)));
        assert!(!vars.is_subset_of(VarSet::of(&[Var::X, Var::Z])));
    }
}
