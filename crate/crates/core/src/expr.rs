//! Expression trees over `x`, `y` and the family parameter `mu`.

use std::fmt;

use crate::dual::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
    Mu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
    Atan2(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }
    pub fn x() -> Self {
        Expr::Var(Var::X)
    }
    pub fn y() -> Self {
        Expr::Var(Var::Y)
    }
    pub fn mu() -> Self {
        Expr::Var(Var::Mu)
    }
    /// `x^2 + y^2`, the expansion of the `r2` shorthand.
    pub fn r2() -> Self {
        Expr::x().pow(2) + Expr::y().pow(2)
    }
    pub fn pow(self, n: i32) -> Self {
        Expr::Pow(Box::new(self), n)
    }
    pub fn call(f: Func, arg: Expr) -> Self {
        Expr::Call(f, Box::new(arg))
    }

    pub fn eval<S: Scalar>(&self, x: S, y: S, mu: S) -> S {
        match self {
            Expr::Num(c) => S::constant(*c),
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Var(Var::Mu) => mu,
            Expr::Neg(a) => -a.eval(x, y, mu),
            Expr::Add(a, b) => a.eval(x, y, mu) + b.eval(x, y, mu),
            Expr::Sub(a, b) => a.eval(x, y, mu) - b.eval(x, y, mu),
            Expr::Mul(a, b) => a.eval(x, y, mu) * b.eval(x, y, mu),
            Expr::Div(a, b) => a.eval(x, y, mu) / b.eval(x, y, mu),
            Expr::Pow(a, n) => a.eval(x, y, mu).powi(*n),
            Expr::Call(f, a) => {
                let v = a.eval(x, y, mu);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Sqrt => v.sqrt(),
                }
            }
            Expr::Atan2(a, b) => a.eval(x, y, mu).atan2(b.eval(x, y, mu)),
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.uses(var),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Atan2(a, b) => a.uses(var) || b.uses(var),
        }
    }
}

macro_rules! expr_binop {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

/// Fully parenthesized rendering that the parser reads back to an
/// evaluation-identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Num(c) => write!(f, "{c}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::Y) => f.write_str("y"),
            Expr::Var(Var::Mu) => f.write_str("mu"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Atan2(a, b) => write!(f, "atan2({a}, {b})"),
        }
    }
}
