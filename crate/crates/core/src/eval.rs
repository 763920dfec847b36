//! Fueled big-step evaluator with total primitive semantics.
//!
//! Evaluation runs on an explicit control stack: a fuel-bounded recursion
//! (fuel counts user-defined calls; primitives are free) must not be able to
//! exhaust the host thread's stack, since differential tests evaluate with
//! large fuel in worker threads.

use crate::term::Term;
use crate::value::Value;
use crate::world::World;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::rc::Rc;

pub type Bindings = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalResult {
    Value(Value),
    OutOfFuel,
    Error(String),
}

impl EvalResult {
    pub fn value(&self) -> Option<&Value> {
        match self {
            EvalResult::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// Fuel used when evaluation backs another engine (ground rewriting,
/// constraint filtering) rather than a user-visible run.
pub const DEFAULT_EVAL_FUEL: u64 = 100_000;

type Env = Rc<Vec<(String, Value)>>;

enum Ctl<'a> {
    Eval(&'a Term, Env),
    Branch(&'a Term, &'a Term, Env),
    Apply(&'a str, usize),
}

pub fn eval_term(world: &World, term: &Term, bindings: &Bindings, fuel: u64) -> EvalResult {
    let initial: Env = Rc::new(bindings.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
    let mut fuel = fuel;
    let mut ctl: Vec<Ctl> = vec![Ctl::Eval(term, initial)];
    let mut vals: Vec<Value> = Vec::new();

    while let Some(frame) = ctl.pop() {
        match frame {
            Ctl::Eval(t, env) => match t {
                Term::Const(v) => vals.push(v.clone()),
                Term::Var(name) => match env.iter().find(|(k, _)| k == name) {
                    Some((_, v)) => vals.push(v.clone()),
                    None => return EvalResult::Error(format!("unbound variable {name}")),
                },
                Term::App(head, args) => {
                    if head == "IF" {
                        if args.len() != 3 {
                            return EvalResult::Error("if takes three arguments".into());
                        }
                        ctl.push(Ctl::Branch(&args[1], &args[2], env.clone()));
                        ctl.push(Ctl::Eval(&args[0], env));
                    } else {
                        ctl.push(Ctl::Apply(head, args.len()));
                        for a in args.iter().rev() {
                            ctl.push(Ctl::Eval(a, env.clone()));
                        }
                    }
                }
            },
            Ctl::Branch(then_t, else_t, env) => {
                let test = vals.pop().expect("branch test value");
                ctl.push(Ctl::Eval(if test.truthy() { then_t } else { else_t }, env));
            }
            Ctl::Apply(head, argc) => {
                let args = vals.split_off(vals.len() - argc);
                if let Some(prim) = apply_primitive(head, &args) {
                    match prim {
                        Ok(v) => vals.push(v),
                        Err(msg) => return EvalResult::Error(msg),
                    }
                } else if let Some(def) = world.get(head) {
                    if def.formals.len() != argc {
                        return EvalResult::Error(format!("arity mismatch calling {head}"));
                    }
                    if fuel == 0 {
                        return EvalResult::OutOfFuel;
                    }
                    fuel -= 1;
                    let env: Env =
                        Rc::new(def.formals.iter().cloned().zip(args).collect());
                    ctl.push(Ctl::Eval(&def.body, env));
                } else {
                    return EvalResult::Error(format!("unknown function {head}"));
                }
            }
        }
    }
    match vals.pop() {
        Some(v) if vals.is_empty() => EvalResult::Value(v),
        _ => EvalResult::Error("evaluator stack imbalance".into()),
    }
}

/// Returns None for non-primitive heads.
fn apply_primitive(head: &str, args: &[Value]) -> Option<Result<Value, String>> {
    let wrong = |n: usize| -> Option<Result<Value, String>> {
        if args.len() != n {
            Some(Err(format!("arity mismatch calling {head}")))
        } else {
            None
        }
    };
    let out = match head {
        "CONS" => wrong(2).unwrap_or_else(|| Ok(Value::cons(args[0].clone(), args[1].clone()))),
        "CAR" => wrong(1).unwrap_or_else(|| {
            Ok(match &args[0] {
                Value::Pair(a, _) => (**a).clone(),
                _ => Value::nil(),
            })
        }),
        "CDR" => wrong(1).unwrap_or_else(|| {
            Ok(match &args[0] {
                Value::Pair(_, d) => (**d).clone(),
                _ => Value::nil(),
            })
        }),
        "CONSP" => wrong(1)
            .unwrap_or_else(|| Ok(Value::boolean(matches!(args[0], Value::Pair(_, _))))),
        "EQUAL" => wrong(2).unwrap_or_else(|| Ok(Value::boolean(args[0] == args[1]))),
        "NOT" => wrong(1).unwrap_or_else(|| Ok(Value::boolean(!args[0].truthy()))),
        "IMPLIES" => wrong(2).unwrap_or_else(|| {
            Ok(Value::boolean(!args[0].truthy() || args[1].truthy()))
        }),
        "BINARY-+" => {
            wrong(2).unwrap_or_else(|| Ok(Value::Int(args[0].int_fix() + args[1].int_fix())))
        }
        "BINARY-*" => {
            wrong(2).unwrap_or_else(|| Ok(Value::Int(args[0].int_fix() * args[1].int_fix())))
        }
        "UNARY--" => wrong(1).unwrap_or_else(|| Ok(Value::Int(-args[0].int_fix()))),
        "<" => wrong(2).unwrap_or_else(|| Ok(Value::boolean(args[0].int_fix() < args[1].int_fix()))),
        "ZP" => wrong(1).unwrap_or_else(|| {
            Ok(Value::boolean(match args[0].as_int() {
                Some(n) => !(n > &BigInt::zero()),
                None => true,
            }))
        }),
        "NATP" => wrong(1).unwrap_or_else(|| {
            Ok(Value::boolean(
                args[0].as_int().map(|n| !n.is_negative()).unwrap_or(false),
            ))
        }),
        "ENDP" => wrong(1)
            .unwrap_or_else(|| Ok(Value::boolean(!matches!(args[0], Value::Pair(_, _))))),
        "TRUE-LISTP" => wrong(1).unwrap_or_else(|| Ok(Value::boolean(args[0].is_true_list()))),
        "NTH" => wrong(2).unwrap_or_else(|| Ok(prim_nth(&args[0], &args[1]))),
        "LEN" => wrong(1).unwrap_or_else(|| {
            let mut n = BigInt::zero();
            let mut cur = &args[0];
            while let Value::Pair(_, d) = cur {
                n += 1;
                cur = d;
            }
            Ok(Value::Int(n))
        }),
        "APPEND" => wrong(2).unwrap_or_else(|| {
            let mut prefix = Vec::new();
            let mut cur = &args[0];
            while let Value::Pair(a, d) = cur {
                prefix.push((**a).clone());
                cur = d;
            }
            let mut acc = args[1].clone();
            for v in prefix.into_iter().rev() {
                acc = Value::cons(v, acc);
            }
            Ok(acc)
        }),
        "SIGNED-BYTE-P" => wrong(2).unwrap_or_else(|| Ok(prim_signed_byte_p(&args[0], &args[1]))),
        _ => return None,
    };
    Some(out)
}

/// `(nth n x)`: car/cdr completion, with negative or non-integer n as 0.
fn prim_nth(n: &Value, x: &Value) -> Value {
    let mut idx = match n.as_int() {
        Some(i) if i.is_positive() => i.clone(),
        _ => BigInt::zero(),
    };
    let mut cur = x;
    loop {
        match cur {
            Value::Pair(a, d) => {
                if idx.is_zero() {
                    return (**a).clone();
                }
                idx -= 1;
                cur = d;
            }
            _ => return Value::nil(),
        }
    }
}

/// Width comparisons are done on bit lengths so huge widths cannot force a
/// huge power-of-two allocation.
fn prim_signed_byte_p(bits: &Value, x: &Value) -> Value {
    let (Some(bits), Some(x)) = (bits.as_int(), x.as_int()) else {
        return Value::nil();
    };
    if !bits.is_positive() {
        return Value::nil();
    }
    let m = (bits - BigInt::one()).try_into().unwrap_or(u64::MAX);
    let ok = if x.is_negative() {
        let mag = x.magnitude();
        mag.bits() <= m || (mag.bits() == m + 1 && mag.trailing_zeros() == Some(m))
    } else {
        x.bits() <= m
    };
    Value::boolean(ok)
}

// ---------------------------------------------------------------------------
// Random binding generation
// ---------------------------------------------------------------------------

const SYMBOL_POOL: &[&str] = &["T", "NIL", "A", "B", "FOO", "BAR", "BAZ", ":KEY"];

/// Deterministic rejection sampler: random values per formal, filtered by the
/// constraint term when given. Gives up once attempts reach 1000 * count.
pub fn gen_bindings(
    formals: &[String],
    constraint: Option<&Term>,
    world: &World,
    seed: u64,
    count: usize,
) -> Vec<Bindings> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let max_attempts = 1000usize.saturating_mul(count);
    let mut attempts = 0;
    while out.len() < count && attempts < max_attempts {
        attempts += 1;
        let candidate: Bindings = formals
            .iter()
            .map(|f| (f.clone(), random_value(&mut rng, 0)))
            .collect();
        let keep = match constraint {
            None => true,
            Some(c) => matches!(
                eval_term(world, c, &candidate, DEFAULT_EVAL_FUEL),
                EvalResult::Value(v) if v.truthy()
            ),
        };
        if keep {
            out.push(candidate);
        }
    }
    out
}

pub fn random_value(rng: &mut ChaCha8Rng, depth: usize) -> Value {
    let kind = rng.gen_range(0..100);
    if kind < 45 {
        return Value::Int(random_int(rng));
    }
    if kind < 70 || depth >= 4 {
        let s = SYMBOL_POOL[rng.gen_range(0..SYMBOL_POOL.len())];
        return Value::Sym(s.to_string());
    }
    // A short list, usually proper.
    let len = rng.gen_range(0..=3);
    let mut tail = if rng.gen_range(0..100) < 15 {
        match rng.gen_range(0..2) {
            0 => Value::Int(random_int(rng)),
            _ => Value::Sym(SYMBOL_POOL[rng.gen_range(0..SYMBOL_POOL.len())].to_string()),
        }
    } else {
        Value::nil()
    };
    for _ in 0..len {
        tail = Value::cons(random_value(rng, depth + 1), tail);
    }
    tail
}

/// Integers span [-2^34, 2^34] but concentrate on small magnitudes so that
/// bounded recursions are exercised without exhausting fuel on every sample.
fn random_int(rng: &mut ChaCha8Rng) -> BigInt {
    let bucket = rng.gen_range(0..100);
    let bound: i64 = 1 << 34;
    let n: i64 = if bucket < 70 {
        rng.gen_range(-20..=20)
    } else if bucket < 90 {
        rng.gen_range(-10_000..=10_000)
    } else {
        rng.gen_range(-bound..=bound)
    };
    BigInt::from(n)
}
