//! Translated terms and the source-level sugar layer.
//!
//! `translate` maps surface s-expressions onto a three-constructor term
//! language (variables, quoted constants, applications). All n-ary sugar is
//! expanded here; the rewriter never sees `and`, `or`, n-ary `+`/`*`, `list`,
//! or bare constants. `untranslate_plain` inverts the expansion and is exact:
//! `translate(untranslate_plain(t)) == t` for every term, which is what makes
//! the directed variant below safe to verify by re-translation.

use crate::error::{Error, Result};
use crate::sexpr::SExpr;
use crate::value::Value;
use crate::world::World;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Const(Value),
    App(String, Vec<Term>),
}

/// Path of argument indexes from the root; `if` uses 0 = test, 1 = then,
/// 2 = else like any other application.
pub type Position = Vec<usize>;

pub const PRIMITIVES: &[(&str, usize)] = &[
    ("CONS", 2),
    ("CAR", 1),
    ("CDR", 1),
    ("CONSP", 1),
    ("EQUAL", 2),
    ("NOT", 1),
    ("IMPLIES", 2),
    ("BINARY-+", 2),
    ("BINARY-*", 2),
    ("UNARY--", 1),
    ("<", 2),
    ("ZP", 1),
    ("NATP", 1),
    ("ENDP", 1),
    ("TRUE-LISTP", 1),
    ("NTH", 2),
    ("LEN", 1),
    ("APPEND", 2),
    ("SIGNED-BYTE-P", 2),
];

pub fn primitive_arity(name: &str) -> Option<usize> {
    PRIMITIVES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, a)| *a)
}

/// Arity of a callable head: `if`, a primitive, or a world function.
pub fn head_arity(world: &World, name: &str) -> Option<usize> {
    if name == "IF" {
        return Some(3);
    }
    primitive_arity(name).or_else(|| world.get(name).map(|d| d.formals.len()))
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(s.to_ascii_uppercase())
    }

    pub fn app(head: &str, args: Vec<Term>) -> Term {
        Term::App(head.to_ascii_uppercase(), args)
    }

    pub fn konst(v: Value) -> Term {
        Term::Const(v)
    }

    pub fn t() -> Term {
        Term::Const(Value::t())
    }

    pub fn nil() -> Term {
        Term::Const(Value::nil())
    }

    pub fn int(i: i64) -> Term {
        Term::Const(Value::int(i))
    }

    pub fn is_const_t(&self) -> bool {
        matches!(self, Term::Const(Value::Sym(s)) if s == "T")
    }

    pub fn is_const_nil(&self) -> bool {
        matches!(self, Term::Const(v) if v.is_nil())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    pub fn subterm_at(&self, pos: &[usize]) -> Option<&Term> {
        let mut cur = self;
        for &i in pos {
            match cur {
                Term::App(_, args) => cur = args.get(i)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    pub fn replace_at(&self, pos: &[usize], replacement: Term) -> Option<Term> {
        if pos.is_empty() {
            return Some(replacement);
        }
        match self {
            Term::App(h, args) => {
                let i = pos[0];
                if i >= args.len() {
                    return None;
                }
                let mut new_args = args.clone();
                new_args[i] = args[i].replace_at(&pos[1..], replacement)?;
                Some(Term::App(h.clone(), new_args))
            }
            _ => None,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Simultaneous substitution; variables without a binding stay put.
    pub fn substitute(&self, subst: &std::collections::BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Const(_) => self.clone(),
            Term::App(h, args) => Term::App(
                h.clone(),
                args.iter().map(|a| a.substitute(subst)).collect(),
            ),
        }
    }

    /// Count of applications with the given head, anywhere in the term.
    pub fn count_head(&self, head: &str) -> usize {
        match self {
            Term::App(h, args) => {
                (h == head) as usize + args.iter().map(|a| a.count_head(head)).sum::<usize>()
            }
            _ => 0,
        }
    }

    /// Raw, sugar-free rendering: constants always quoted, heads verbatim.
    pub fn to_sexpr(&self) -> SExpr {
        match self {
            Term::Var(v) => SExpr::Sym(v.clone()),
            Term::Const(v) => SExpr::quote(v.to_sexpr()),
            Term::App(h, args) => {
                let mut items = vec![SExpr::Sym(h.clone())];
                items.extend(args.iter().map(Term::to_sexpr));
                SExpr::List(items)
            }
        }
    }

    /// Inverse of `to_sexpr`, lenient: bare symbols are variables except
    /// T/NIL/keywords, bare integers are constants. No arity checking; the
    /// certificate checker validates structure during replay instead.
    pub fn from_sexpr(e: &SExpr) -> Result<Term> {
        match e {
            SExpr::Int(n) => Ok(Term::Const(Value::Int(n.clone()))),
            SExpr::Sym(s) => {
                if s == "T" || s == "NIL" || s.starts_with(':') {
                    Ok(Term::Const(Value::Sym(s.clone())))
                } else {
                    Ok(Term::Var(s.clone()))
                }
            }
            SExpr::List(items) => {
                if items.len() == 2 && items[0].is_sym("QUOTE") {
                    return Ok(Term::Const(Value::from_sexpr(&items[1])));
                }
                let head = items
                    .first()
                    .and_then(|h| h.as_sym())
                    .ok_or_else(|| Error::Translate(format!("bad term head in {e}")))?;
                let args = items[1..]
                    .iter()
                    .map(Term::from_sexpr)
                    .collect::<Result<Vec<_>>>()?;
                Ok(Term::App(head.to_string(), args))
            }
            SExpr::Dotted(_, _) => Err(Error::Translate(format!("dotted term {e}"))),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sexpr())
    }
}

// ---------------------------------------------------------------------------
// Conjunction helpers shared by the rewriter, transform, and checker.
// ---------------------------------------------------------------------------

/// Flatten nested `(if a b 'NIL)` (the `and` encoding) into conjuncts.
pub fn conjuncts(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    collect_conjuncts(t, &mut out);
    out
}

fn collect_conjuncts(t: &Term, out: &mut Vec<Term>) {
    if let Term::App(h, args) = t {
        if h == "IF" && args.len() == 3 && args[2].is_const_nil() {
            collect_conjuncts(&args[0], out);
            collect_conjuncts(&args[1], out);
            return;
        }
    }
    if !t.is_const_t() {
        out.push(t.clone());
    }
}

/// Right-nested `and` encoding of a conjunct list; empty list is `'T`.
pub fn make_conjunction(mut terms: Vec<Term>) -> Term {
    match terms.len() {
        0 => Term::t(),
        1 => terms.pop().unwrap(),
        _ => {
            let first = terms.remove(0);
            Term::App("IF".into(), vec![first, make_conjunction(terms), Term::nil()])
        }
    }
}

/// Negation in negation-normal polarity: strips a leading NOT instead of
/// stacking a second one.
pub fn nnf_negate(t: &Term) -> Term {
    if let Term::App(h, args) = t {
        if h == "NOT" && args.len() == 1 {
            return args[0].clone();
        }
    }
    Term::App("NOT".into(), vec![t.clone()])
}

// ---------------------------------------------------------------------------
// translate
// ---------------------------------------------------------------------------

/// How unbound symbols are handled during translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarPolicy<'a> {
    /// Only the given names denote variables; anything else errors.
    Bound(&'a BTreeSet<String>),
    /// Any non-constant symbol becomes a variable (rule and pattern bodies).
    AutoBind,
}

pub fn translate(e: &SExpr, vars: VarPolicy, world: &World) -> Result<Term> {
    match e {
        SExpr::Int(n) => Ok(Term::Const(Value::Int(n.clone()))),
        SExpr::Sym(s) => {
            if s == "T" || s == "NIL" || s.starts_with(':') {
                return Ok(Term::Const(Value::Sym(s.clone())));
            }
            match vars {
                VarPolicy::Bound(set) if !set.contains(s) => {
                    Err(Error::Translate(format!("unbound variable {s}")))
                }
                _ => Ok(Term::Var(s.clone())),
            }
        }
        SExpr::Dotted(_, _) => Err(Error::Translate(format!("dotted form {e}"))),
        SExpr::List(items) => {
            let head = items
                .first()
                .and_then(|h| h.as_sym())
                .ok_or_else(|| Error::Translate(format!("application head must be a symbol: {e}")))?
                .to_string();
            let args = &items[1..];
            let tr = |x: &SExpr| translate(x, vars, world);
            match head.as_str() {
                "QUOTE" => {
                    if args.len() != 1 {
                        return Err(Error::Translate(format!("quote takes one argument: {e}")));
                    }
                    Ok(Term::Const(Value::from_sexpr(&args[0])))
                }
                "+" => translate_plus_like(args, "BINARY-+", 0, vars, world),
                "*" => translate_plus_like(args, "BINARY-*", 1, vars, world),
                "-" => match args {
                    [] => Err(Error::Translate("- needs at least one argument".into())),
                    [a] => Ok(Term::App("UNARY--".into(), vec![tr(a)?])),
                    [a, rest @ ..] => {
                        let minuend = tr(a)?;
                        let sub = if rest.len() == 1 {
                            tr(&rest[0])?
                        } else {
                            translate_plus_like(rest, "BINARY-+", 0, vars, world)?
                        };
                        Ok(Term::App(
                            "BINARY-+".into(),
                            vec![minuend, Term::App("UNARY--".into(), vec![sub])],
                        ))
                    }
                },
                "AND" => match args {
                    [] => Ok(Term::t()),
                    [a] => tr(a),
                    [a, rest @ ..] => {
                        let rest_form = SExpr::List(
                            std::iter::once(SExpr::sym("AND")).chain(rest.to_vec()).collect(),
                        );
                        Ok(Term::App(
                            "IF".into(),
                            vec![tr(a)?, translate(&rest_form, vars, world)?, Term::nil()],
                        ))
                    }
                },
                "OR" => match args {
                    [] => Ok(Term::nil()),
                    [a] => tr(a),
                    [a, rest @ ..] => {
                        let rest_form = SExpr::List(
                            std::iter::once(SExpr::sym("OR")).chain(rest.to_vec()).collect(),
                        );
                        let rest_t = translate(&rest_form, vars, world)?;
                        // Three encodings, chosen by the shape of the first
                        // disjunct so that untranslate can invert each one.
                        if let Some(p) = not_call_payload(a) {
                            Ok(Term::App("IF".into(), vec![tr(p)?, rest_t, Term::t()]))
                        } else {
                            let a_t = tr(a)?;
                            if matches!(a_t, Term::Var(_)) {
                                Ok(Term::App("IF".into(), vec![a_t.clone(), a_t, rest_t]))
                            } else {
                                Ok(Term::App("IF".into(), vec![a_t, Term::t(), rest_t]))
                            }
                        }
                    }
                },
                "LIST" => {
                    let mut acc = Term::nil();
                    for a in args.iter().rev() {
                        acc = Term::App("CONS".into(), vec![tr(a)?, acc]);
                    }
                    Ok(acc)
                }
                _ => {
                    let arity = head_arity(world, &head).ok_or_else(|| {
                        Error::Translate(format!("unknown function {head} in {e}"))
                    })?;
                    if args.len() != arity {
                        return Err(Error::Translate(format!(
                            "{head} takes {arity} argument(s), got {} in {e}",
                            args.len()
                        )));
                    }
                    let targs = args.iter().map(tr).collect::<Result<Vec<_>>>()?;
                    Ok(Term::App(head, targs))
                }
            }
        }
    }
}

fn translate_plus_like(
    args: &[SExpr],
    binop: &str,
    unit: i64,
    vars: VarPolicy,
    world: &World,
) -> Result<Term> {
    match args {
        [] => Ok(Term::int(unit)),
        [a] => Ok(Term::App(
            binop.into(),
            vec![Term::int(unit), translate(a, vars, world)?],
        )),
        [a, rest @ ..] => {
            let first = translate(a, vars, world)?;
            let rest_t = if rest.len() == 1 {
                translate(&rest[0], vars, world)?
            } else {
                translate_plus_like(rest, binop, unit, vars, world)?
            };
            Ok(Term::App(binop.into(), vec![first, rest_t]))
        }
    }
}

/// Surface `(not p)` recognizer, used to pick the `or` encoding.
fn not_call_payload(e: &SExpr) -> Option<&SExpr> {
    match e {
        SExpr::List(items) if items.len() == 2 && items[0].is_sym("NOT") => Some(&items[1]),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// untranslate (plain)
// ---------------------------------------------------------------------------

pub fn untranslate_plain(t: &Term) -> SExpr {
    match t {
        Term::Var(v) => SExpr::Sym(v.clone()),
        Term::Const(v) => const_to_source(v),
        Term::App(h, args) => match (h.as_str(), args.as_slice()) {
            ("IF", [p, q, r]) => {
                if r.is_const_nil() {
                    // (if p q 'NIL) = (and p q ...)
                    let mut parts = vec![untranslate_plain(p)];
                    splice(&mut parts, untranslate_plain(q), "AND");
                    return tagged("AND", parts);
                }
                if q.is_const_t() && !matches!(p, Term::Var(_)) && !is_not_app(p) {
                    let mut parts = vec![untranslate_plain(p)];
                    splice(&mut parts, untranslate_plain(r), "OR");
                    return tagged("OR", parts);
                }
                if q == p && matches!(p, Term::Var(_)) {
                    let mut parts = vec![untranslate_plain(p)];
                    splice(&mut parts, untranslate_plain(r), "OR");
                    return tagged("OR", parts);
                }
                if r.is_const_t() {
                    // (if p q 'T) = (or (not p) q); translate undoes this via
                    // the (not _) disjunct case.
                    let np = SExpr::List(vec![SExpr::sym("NOT"), untranslate_plain(p)]);
                    let mut parts = vec![np];
                    splice(&mut parts, untranslate_plain(q), "OR");
                    return tagged("OR", parts);
                }
                SExpr::List(vec![
                    SExpr::sym("IF"),
                    untranslate_plain(p),
                    untranslate_plain(q),
                    untranslate_plain(r),
                ])
            }
            ("BINARY-+", [a, b]) => {
                let mut parts = vec![untranslate_plain(a)];
                splice(&mut parts, untranslate_plain(b), "+");
                tagged("+", parts)
            }
            ("BINARY-*", [a, b]) => {
                let mut parts = vec![untranslate_plain(a)];
                splice(&mut parts, untranslate_plain(b), "*");
                tagged("*", parts)
            }
            ("UNARY--", [a]) => SExpr::List(vec![SExpr::sym("-"), untranslate_plain(a)]),
            ("CONS", [a, b]) => {
                if b.is_const_nil() {
                    return SExpr::List(vec![SExpr::sym("LIST"), untranslate_plain(a)]);
                }
                let ub = untranslate_plain(b);
                if ub.head() == Some("LIST") {
                    let mut parts = vec![untranslate_plain(a)];
                    splice(&mut parts, ub, "LIST");
                    return tagged("LIST", parts);
                }
                SExpr::List(vec![SExpr::sym("CONS"), untranslate_plain(a), ub])
            }
            _ => {
                let mut items = vec![SExpr::Sym(h.clone())];
                items.extend(args.iter().map(untranslate_plain));
                SExpr::List(items)
            }
        },
    }
}

fn const_to_source(v: &Value) -> SExpr {
    match v {
        Value::Int(n) => SExpr::Int(n.clone()),
        Value::Sym(s) if s == "T" || s == "NIL" || s.starts_with(':') => SExpr::Sym(s.clone()),
        other => SExpr::quote(other.to_sexpr()),
    }
}

fn is_not_app(t: &Term) -> bool {
    matches!(t, Term::App(h, args) if h == "NOT" && args.len() == 1)
}

/// Append `piece` to `parts`, flattening when it is the same n-ary form.
fn splice(parts: &mut Vec<SExpr>, piece: SExpr, tag: &str) {
    match piece {
        SExpr::List(ref items)
            if items.first().map(|h| h.is_sym(tag)).unwrap_or(false) && items.len() >= 2 =>
        {
            parts.extend(items[1..].iter().cloned());
        }
        other => parts.push(other),
    }
}

fn tagged(tag: &str, parts: Vec<SExpr>) -> SExpr {
    let mut items = vec![SExpr::sym(tag)];
    items.extend(parts);
    SExpr::List(items)
}

// ---------------------------------------------------------------------------
// directed untranslate
// ---------------------------------------------------------------------------

/// Untranslate `new` using the old term and its original source text as a
/// guide: untouched subterms keep their source spelling. Falls back to
/// `untranslate_plain` whenever the guide stops matching, and verifies every
/// guided reassembly by re-translation, so the result always translates back
/// to exactly `new`.
pub fn directed_untranslate(new: &Term, old: &Term, src: &SExpr, world: &World) -> SExpr {
    if new == old {
        return src.clone();
    }
    if let (Term::App(h1, args1), Term::App(h2, args2)) = (new, old) {
        if h1 == h2 && args1.len() == args2.len() {
            if let Some(frags) = decompose_source(src, h2, args2.len()) {
                let results: Vec<SExpr> = args1
                    .iter()
                    .zip(args2)
                    .zip(&frags)
                    .map(|((n, o), f)| directed_untranslate(n, o, f, world))
                    .collect();
                if let Some(rebuilt) = rebuild_source(src, &results) {
                    if translate(&rebuilt, VarPolicy::AutoBind, world).ok().as_ref() == Some(new) {
                        return rebuilt;
                    }
                }
            }
        }
    }
    untranslate_plain(new)
}

/// Split a source form into fragments aligned with the translated arguments
/// of its head. Synthesized fragments (for sugar) are themselves valid
/// sources for the corresponding argument.
fn decompose_source(src: &SExpr, head: &str, arity: usize) -> Option<Vec<SExpr>> {
    let items = src.as_list()?;
    let stag = items.first()?.as_sym()?;
    let args = &items[1..];
    let rest_form = |tag: &str, rest: &[SExpr]| -> SExpr {
        if rest.len() == 1 {
            rest[0].clone()
        } else {
            let mut v = vec![SExpr::sym(tag)];
            v.extend(rest.to_vec());
            SExpr::List(v)
        }
    };
    match (stag, head, arity) {
        ("IF", "IF", 3) if args.len() == 3 => Some(args.to_vec()),
        ("AND", "IF", 3) if args.len() >= 2 => Some(vec![
            args[0].clone(),
            rest_form("AND", &args[1..]),
            SExpr::sym("NIL"),
        ]),
        ("OR", "IF", 3) if args.len() >= 2 => {
            let rest = rest_form("OR", &args[1..]);
            if let Some(p) = not_call_payload(&args[0]) {
                Some(vec![p.clone(), rest, SExpr::sym("T")])
            } else if is_plain_var_sym(&args[0]) {
                Some(vec![args[0].clone(), args[0].clone(), rest])
            } else {
                Some(vec![args[0].clone(), SExpr::sym("T"), rest])
            }
        }
        ("LIST", "CONS", 2) if !args.is_empty() => {
            let tail = if args.len() == 1 {
                SExpr::sym("NIL")
            } else {
                let mut v = vec![SExpr::sym("LIST")];
                v.extend(args[1..].to_vec());
                SExpr::List(v)
            };
            Some(vec![args[0].clone(), tail])
        }
        ("+", "BINARY-+", 2) | ("*", "BINARY-*", 2) => match args.len() {
            0 => None,
            1 => {
                let unit = if stag == "+" { 0 } else { 1 };
                Some(vec![SExpr::int(unit), args[0].clone()])
            }
            _ => Some(vec![args[0].clone(), rest_form(stag, &args[1..])]),
        },
        ("-", "UNARY--", 1) if args.len() == 1 => Some(vec![args[0].clone()]),
        ("-", "BINARY-+", 2) if args.len() >= 2 => {
            let sub = if args.len() == 2 {
                args[1].clone()
            } else {
                rest_form("+", &args[1..])
            };
            Some(vec![
                args[0].clone(),
                SExpr::List(vec![SExpr::sym("-"), sub]),
            ])
        }
        _ => {
            if stag == head && args.len() == arity {
                Some(args.to_vec())
            } else {
                None
            }
        }
    }
}

fn is_plain_var_sym(e: &SExpr) -> bool {
    matches!(e, SExpr::Sym(s) if s != "T" && s != "NIL" && !s.starts_with(':'))
}

/// Reassemble a source form from per-argument results, keeping the source's
/// surface head. Returns None when the sugar's fixed parts no longer line up
/// (the caller then falls back to plain untranslation).
fn rebuild_source(src: &SExpr, results: &[SExpr]) -> Option<SExpr> {
    let items = src.as_list()?;
    let stag = items.first()?.as_sym()?;
    let args = &items[1..];
    match stag {
        "IF" if results.len() == 3 => Some(SExpr::List(vec![
            SExpr::sym("IF"),
            results[0].clone(),
            results[1].clone(),
            results[2].clone(),
        ])),
        "AND" if results.len() == 3 => {
            if !results[2].is_sym("NIL") {
                return None;
            }
            let mut parts = vec![results[0].clone()];
            splice(&mut parts, results[1].clone(), "AND");
            Some(tagged("AND", parts))
        }
        "OR" if results.len() == 3 => {
            if not_call_payload(&args[0]).is_some() {
                if !results[2].is_sym("T") {
                    return None;
                }
                let np = SExpr::List(vec![SExpr::sym("NOT"), results[0].clone()]);
                let mut parts = vec![np];
                splice(&mut parts, results[1].clone(), "OR");
                Some(tagged("OR", parts))
            } else if is_plain_var_sym(&args[0]) {
                if results[0] != results[1] {
                    return None;
                }
                let mut parts = vec![results[0].clone()];
                splice(&mut parts, results[2].clone(), "OR");
                Some(tagged("OR", parts))
            } else {
                if !results[1].is_sym("T") {
                    return None;
                }
                let mut parts = vec![results[0].clone()];
                splice(&mut parts, results[2].clone(), "OR");
                Some(tagged("OR", parts))
            }
        }
        "LIST" if results.len() == 2 => {
            if results[1].is_sym("NIL") {
                return Some(tagged("LIST", vec![results[0].clone()]));
            }
            if results[1].head() == Some("LIST") {
                let mut parts = vec![results[0].clone()];
                splice(&mut parts, results[1].clone(), "LIST");
                return Some(tagged("LIST", parts));
            }
            None
        }
        "+" | "*" if results.len() == 2 => {
            let mut parts = vec![results[0].clone()];
            splice(&mut parts, results[1].clone(), stag);
            Some(tagged(stag, parts))
        }
        "-" if results.len() == 1 => {
            Some(SExpr::List(vec![SExpr::sym("-"), results[0].clone()]))
        }
        "-" if results.len() == 2 => {
            // Keep binary minus when the negated side survived as (- x).
            if let Some(inner) = results[1].as_list() {
                if inner.len() == 2 && inner[0].is_sym("-") {
                    return Some(SExpr::List(vec![
                        SExpr::sym("-"),
                        results[0].clone(),
                        inner[1].clone(),
                    ]));
                }
            }
            let mut parts = vec![results[0].clone()];
            splice(&mut parts, results[1].clone(), "+");
            Some(tagged("+", parts))
        }
        _ => {
            let mut out = vec![items[0].clone()];
            out.extend(results.to_vec());
            Some(SExpr::List(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_sexpr;

    fn w() -> World {
        let mut w = World::new();
        for src in [
            "(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))",
            "(defun foo (x) (if (consp x) (foo (cdr x)) x))",
        ] {
            w = w.define(&parse_sexpr(src).unwrap()).unwrap();
        }
        w
    }

    fn tr(src: &str) -> Term {
        translate(&parse_sexpr(src).unwrap(), VarPolicy::AutoBind, &w()).unwrap()
    }

    #[test]
    fn nary_plus_right_nests() {
        assert_eq!(
            tr("(+ 1 1 (f x))"),
            Term::app(
                "BINARY-+",
                vec![
                    Term::int(1),
                    Term::app(
                        "BINARY-+",
                        vec![Term::int(1), Term::app("F", vec![Term::var("x")])]
                    )
                ]
            )
        );
    }

    #[test]
    fn and_becomes_if_nest() {
        assert_eq!(
            tr("(and a b c)"),
            Term::app(
                "IF",
                vec![
                    Term::var("a"),
                    Term::app("IF", vec![Term::var("b"), Term::var("c"), Term::nil()]),
                    Term::nil()
                ]
            )
        );
    }

    #[test]
    fn minus_one_is_unary() {
        assert_eq!(tr("(- x)"), Term::app("UNARY--", vec![Term::var("x")]));
        assert_eq!(
            tr("(- x y)"),
            Term::app(
                "BINARY-+",
                vec![
                    Term::var("x"),
                    Term::app("UNARY--", vec![Term::var("y")])
                ]
            )
        );
    }

    #[test]
    fn keywords_and_booleans_are_constants() {
        assert_eq!(tr(":undefined"), Term::Const(Value::sym(":UNDEFINED")));
        assert_eq!(tr("t"), Term::t());
        assert_eq!(tr("nil"), Term::nil());
    }

    #[test]
    fn strict_policy_rejects_unbound() {
        let bound: BTreeSet<String> = ["X".to_string()].into();
        let e = parse_sexpr("(cons x y)").unwrap();
        assert!(translate(&e, VarPolicy::Bound(&bound), &w()).is_err());
    }

    #[test]
    fn unknown_function_rejected() {
        let e = parse_sexpr("(mystery x)").unwrap();
        assert!(translate(&e, VarPolicy::AutoBind, &w()).is_err());
    }

    #[test]
    fn arity_mismatch_rejected() {
        let e = parse_sexpr("(cons x)").unwrap();
        assert!(translate(&e, VarPolicy::AutoBind, &w()).is_err());
    }

    #[test]
    fn untranslate_or_from_then_else_t() {
        // (IF (CONSP X) (NOT (F2 (CAR X))) 'T) prints as an OR of negations.
        let t = Term::app(
            "IF",
            vec![
                Term::app("CONSP", vec![Term::var("x")]),
                Term::app("NOT", vec![Term::app("CAR", vec![Term::var("x")])]),
                Term::t(),
            ],
        );
        assert_eq!(
            untranslate_plain(&t).to_string(),
            "(OR (NOT (CONSP X)) (NOT (CAR X)))"
        );
    }

    #[test]
    fn untranslate_fold_of_constants() {
        let t = tr("(+ 2 (f x))");
        assert_eq!(untranslate_plain(&t).to_string(), "(+ 2 (F X))");
    }

    #[test]
    fn untranslate_list() {
        let t = tr("(list a b c)");
        assert_eq!(untranslate_plain(&t).to_string(), "(LIST A B C)");
    }

    #[test]
    fn plain_round_trip_on_samples() {
        for src in [
            "(if (zp x) 0 (+ 2 (f (+ -1 x))))",
            "(and a (or b c) (not d))",
            "(or (not (consp x)) (not (foo (car x))))",
            "(list (+ x 3) (* y 4))",
            "(cons a b)",
            "'(1 2 . 3)",
            "(or x y z)",
            "(- x y)",
            ":undefined",
        ] {
            let t = tr(src);
            let back = untranslate_plain(&t);
            let t2 = translate(&back, VarPolicy::AutoBind, &w()).unwrap();
            assert_eq!(t, t2, "round trip through {back} from {src}");
        }
    }

    #[test]
    fn directed_keeps_unchanged_source() {
        let world = w();
        let src = parse_sexpr("(if (zp x) 0 (+ 1 1 (f (+ -1 x))))").unwrap();
        let old = translate(&src, VarPolicy::AutoBind, &world).unwrap();
        let out = directed_untranslate(&old, &old, &src, &world);
        assert_eq!(out, src);
    }

    #[test]
    fn directed_rebuilds_changed_argument() {
        let world = w();
        let src = parse_sexpr("(if (zp x) 0 (+ 1 1 (f (+ -1 x))))").unwrap();
        let old = translate(&src, VarPolicy::AutoBind, &world).unwrap();
        let new = translate(
            &parse_sexpr("(if (zp x) 0 (+ 2 (g{1} (+ -1 x))))").unwrap(),
            VarPolicy::AutoBind,
            &World::new(),
        );
        // G{1} is unknown to the world, so build the new term by hand.
        drop(new);
        let new = Term::app(
            "IF",
            vec![
                Term::app("ZP", vec![Term::var("x")]),
                Term::int(0),
                Term::app(
                    "BINARY-+",
                    vec![
                        Term::int(2),
                        Term::app(
                            "F{1}",
                            vec![Term::app(
                                "BINARY-+",
                                vec![Term::int(-1), Term::var("x")],
                            )],
                        ),
                    ],
                ),
            ],
        );
        let out = directed_untranslate(&new, &old, &src, &world);
        assert_eq!(out.to_string(), "(IF (ZP X) 0 (+ 2 (F{1} (+ -1 X))))");
    }

    #[test]
    fn subterm_and_replace() {
        let t = tr("(cons (car x) (cdr y))");
        assert_eq!(
            t.subterm_at(&[1, 0]).unwrap(),
            &Term::var("y")
        );
        let r = t.replace_at(&[0], Term::var("z")).unwrap();
        assert_eq!(r, tr("(cons z (cdr y))"));
    }

    #[test]
    fn conjunct_flattening() {
        let t = tr("(and a b c)");
        assert_eq!(
            conjuncts(&t),
            vec![Term::var("a"), Term::var("b"), Term::var("c")]
        );
        assert_eq!(conjuncts(&Term::t()), Vec::<Term>::new());
        let back = make_conjunction(vec![Term::var("a"), Term::var("b"), Term::var("c")]);
        assert_eq!(back, t);
    }

    #[test]
    fn raw_term_sexpr_round_trip() {
        for src in ["(cons x 'FOO)", "'(1 2)", "(binary-+ '1 x)"] {
            let t = tr(src);
            let raw = t.to_sexpr();
            assert_eq!(Term::from_sexpr(&raw).unwrap(), t);
        }
    }
}
