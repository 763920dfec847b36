//! Runtime values: unbounded integers, symbol constants, and pairs.

use crate::sexpr::SExpr;
use num_bigint::BigInt;
use num_traits::Zero;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Int(BigInt),
    Sym(String),
    Pair(Arc<Value>, Arc<Value>),
}

pub const NIL: &str = "NIL";
pub const T: &str = "T";

impl Value {
    pub fn nil() -> Value {
        Value::Sym(NIL.to_string())
    }

    pub fn t() -> Value {
        Value::Sym(T.to_string())
    }

    pub fn int(i: i64) -> Value {
        Value::Int(BigInt::from(i))
    }

    pub fn sym(s: &str) -> Value {
        Value::Sym(s.to_ascii_uppercase())
    }

    pub fn cons(car: Value, cdr: Value) -> Value {
        Value::Pair(Arc::new(car), Arc::new(cdr))
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Sym(s) if s == NIL)
    }

    /// Everything except NIL counts as true.
    pub fn truthy(&self) -> bool {
        !self.is_nil()
    }

    pub fn boolean(b: bool) -> Value {
        if b {
            Value::t()
        } else {
            Value::nil()
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(n) => Some(n),
            _ => None,
        }
    }

    /// Numeric coercion used by the arithmetic primitives: non-integers
    /// behave as 0.
    pub fn int_fix(&self) -> BigInt {
        match self {
            Value::Int(n) => n.clone(),
            _ => BigInt::zero(),
        }
    }

    /// Proper NIL-terminated list.
    pub fn proper_list(items: Vec<Value>) -> Value {
        let mut acc = Value::nil();
        for v in items.into_iter().rev() {
            acc = Value::cons(v, acc);
        }
        acc
    }

    pub fn is_true_list(&self) -> bool {
        let mut cur = self;
        loop {
            match cur {
                Value::Pair(_, cdr) => cur = cdr,
                other => return other.is_nil(),
            }
        }
    }

    /// Build a value from the payload of a quoted constant.
    pub fn from_sexpr(e: &SExpr) -> Value {
        match e {
            SExpr::Sym(s) => Value::Sym(s.clone()),
            SExpr::Int(n) => Value::Int(n.clone()),
            SExpr::List(items) => {
                let mut acc = Value::nil();
                for it in items.iter().rev() {
                    acc = Value::cons(Value::from_sexpr(it), acc);
                }
                acc
            }
            SExpr::Dotted(items, tail) => {
                let mut acc = Value::from_sexpr(tail);
                for it in items.iter().rev() {
                    acc = Value::cons(Value::from_sexpr(it), acc);
                }
                acc
            }
        }
    }

    /// Inverse of `from_sexpr`; pairs become (possibly dotted) lists.
    pub fn to_sexpr(&self) -> SExpr {
        match self {
            Value::Int(n) => SExpr::Int(n.clone()),
            Value::Sym(s) => SExpr::Sym(s.clone()),
            Value::Pair(_, _) => {
                let mut items = Vec::new();
                let mut cur = self;
                loop {
                    match cur {
                        Value::Pair(car, cdr) => {
                            items.push(car.to_sexpr());
                            cur = cdr;
                        }
                        tail if tail.is_nil() => return SExpr::List(items),
                        tail => return SExpr::Dotted(items, Box::new(tail.to_sexpr())),
                    }
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sexpr())
    }
}
