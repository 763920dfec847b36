//! Definitions and the world (an ordered map of admitted functions).

use crate::error::{Error, Result};
use crate::sexpr::SExpr;
use crate::term::{head_arity, translate, Term, VarPolicy};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub formals: Vec<String>,
    pub guard: Option<Term>,
    pub guard_source: Option<SExpr>,
    pub measure: Option<Term>,
    pub measure_source: Option<SExpr>,
    /// Unnormalized body, exactly as translated from the source.
    pub body: Term,
    /// Verbatim source body, kept for directed untranslation.
    pub source_body: SExpr,
    /// Mutual-recursion clique, own name included; singleton when standalone.
    pub clique: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct World {
    defs: Vec<Definition>,
    index: HashMap<String, usize>,
}

impl World {
    pub fn new() -> World {
        World::default()
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.index.get(name).map(|&i| &self.defs[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn defs(&self) -> &[Definition] {
        &self.defs
    }

    /// Admit a `(defun ...)` or `(mutual-recursion (defun ...) ...)` form.
    /// Redefinition is rejected; callees must be primitives, previously
    /// defined functions, or clique members.
    pub fn define(&self, form: &SExpr) -> Result<World> {
        let parsed = parse_definitions(form)?;
        let clique: Vec<String> = parsed.iter().map(|d| d.name.clone()).collect();
        {
            let mut seen = BTreeSet::new();
            for name in &clique {
                if self.contains(name) || !seen.insert(name.clone()) {
                    return Err(Error::Define(format!("{name} is already defined")));
                }
            }
        }

        // Translation happens against a world that already knows the clique
        // heads so recursive and mutual calls resolve.
        let mut staged = self.clone();
        for raw in &parsed {
            staged = staged.insert(Definition {
                name: raw.name.clone(),
                formals: raw.formals.clone(),
                guard: None,
                guard_source: None,
                measure: None,
                measure_source: None,
                body: Term::nil(),
                source_body: SExpr::sym("NIL"),
                clique: clique.clone(),
            });
        }

        let mut out = self.clone();
        for raw in parsed {
            let bound: BTreeSet<String> = raw.formals.iter().cloned().collect();
            let body = translate(&raw.body, VarPolicy::Bound(&bound), &staged)?;
            let guard = raw
                .guard
                .as_ref()
                .map(|g| translate(g, VarPolicy::Bound(&bound), &staged))
                .transpose()?;
            let measure = raw
                .measure
                .as_ref()
                .map(|m| translate(m, VarPolicy::Bound(&bound), &staged))
                .transpose()?;
            out = out.insert(Definition {
                name: raw.name,
                formals: raw.formals,
                guard,
                guard_source: raw.guard,
                measure,
                measure_source: raw.measure,
                body,
                source_body: raw.body,
                clique: clique.clone(),
            });
        }
        Ok(out)
    }

    pub fn insert(&self, def: Definition) -> World {
        let mut next = self.clone();
        next.index.insert(def.name.clone(), next.defs.len());
        next.defs.push(def);
        next
    }

    /// Admission index of a function, for rule ordering.
    pub fn order_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

struct RawDefun {
    name: String,
    formals: Vec<String>,
    guard: Option<SExpr>,
    measure: Option<SExpr>,
    body: SExpr,
}

fn parse_definitions(form: &SExpr) -> Result<Vec<RawDefun>> {
    match form.head() {
        Some("DEFUN") => Ok(vec![parse_defun(form)?]),
        Some("MUTUAL-RECURSION") => {
            let items = form.as_list().unwrap();
            if items.len() < 3 {
                return Err(Error::Define(
                    "mutual-recursion needs at least two defuns".into(),
                ));
            }
            items[1..].iter().map(parse_defun).collect()
        }
        _ => Err(Error::Define(format!("not a definition form: {form}"))),
    }
}

fn parse_defun(form: &SExpr) -> Result<RawDefun> {
    let items = form
        .as_list()
        .filter(|items| items.first().map(|h| h.is_sym("DEFUN")).unwrap_or(false))
        .ok_or_else(|| Error::Define(format!("expected (defun ...): {form}")))?;
    if items.len() < 4 {
        return Err(Error::Define(format!("defun is too short: {form}")));
    }
    let name = items[1]
        .as_sym()
        .ok_or_else(|| Error::Define(format!("defun name must be a symbol: {form}")))?
        .to_string();
    let formals = items[2]
        .as_list()
        .ok_or_else(|| Error::Define(format!("{name}: formals must be a list")))?
        .iter()
        .map(|f| {
            f.as_sym()
                .map(str::to_string)
                .ok_or_else(|| Error::Define(format!("{name}: formal must be a symbol")))
        })
        .collect::<Result<Vec<_>>>()?;
    {
        let mut seen = BTreeSet::new();
        for f in &formals {
            if !seen.insert(f) {
                return Err(Error::Define(format!("{name}: duplicate formal {f}")));
            }
        }
    }

    let mut guard = None;
    let mut measure = None;
    let mut body_index = 3;
    // Optional (declare (xargs :guard g :measure m)) between formals and body.
    if items.len() > 4 {
        if let Some("DECLARE") = items[3].head() {
            parse_declare(&items[3], &name, &mut guard, &mut measure)?;
            body_index = 4;
        }
    }
    if items.len() != body_index + 1 {
        return Err(Error::Define(format!(
            "{name}: expected exactly one body form"
        )));
    }
    Ok(RawDefun {
        name,
        formals,
        guard,
        measure,
        body: items[body_index].clone(),
    })
}

fn parse_declare(
    form: &SExpr,
    fn_name: &str,
    guard: &mut Option<SExpr>,
    measure: &mut Option<SExpr>,
) -> Result<()> {
    let items = form.as_list().unwrap();
    for part in &items[1..] {
        let xargs = part
            .as_list()
            .filter(|p| p.first().map(|h| h.is_sym("XARGS")).unwrap_or(false))
            .ok_or_else(|| {
                Error::Define(format!("{fn_name}: only (xargs ...) declares are supported"))
            })?;
        let mut rest = &xargs[1..];
        while !rest.is_empty() {
            if rest.len() < 2 {
                return Err(Error::Define(format!(
                    "{fn_name}: xargs keyword without a value"
                )));
            }
            let key = rest[0]
                .as_sym()
                .ok_or_else(|| Error::Define(format!("{fn_name}: bad xargs keyword")))?;
            match key {
                ":GUARD" => *guard = Some(rest[1].clone()),
                ":MEASURE" => *measure = Some(rest[1].clone()),
                other => {
                    return Err(Error::Define(format!(
                        "{fn_name}: unsupported xargs keyword {other}"
                    )))
                }
            }
            rest = &rest[2..];
        }
    }
    Ok(())
}

/// The arity oracle used by translation, re-exported for convenience.
pub fn known_arity(world: &World, name: &str) -> Option<usize> {
    head_arity(world, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_sexpr;

    fn define(world: &World, src: &str) -> Result<World> {
        world.define(&parse_sexpr(src).unwrap())
    }

    #[test]
    fn admits_recursive_defun() {
        let w = define(&World::new(), "(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))")
            .unwrap();
        let d = w.get("F").unwrap();
        assert_eq!(d.formals, vec!["X"]);
        assert_eq!(d.clique, vec!["F"]);
        assert_eq!(d.source_body.to_string(), "(IF (ZP X) 0 (+ 1 1 (F (+ -1 X))))");
    }

    #[test]
    fn admits_mutual_recursion() {
        let w = define(
            &World::new(),
            "(mutual-recursion
               (defun f1 (x) (if (consp x) (not (f2 (nth 0 x))) t))
               (defun f2 (x) (if (consp x) (f1 (nth 0 x)) t)))",
        )
        .unwrap();
        assert_eq!(w.get("F1").unwrap().clique, vec!["F1", "F2"]);
        assert_eq!(w.get("F2").unwrap().clique, vec!["F1", "F2"]);
    }

    #[test]
    fn rejects_redefinition() {
        let w = define(&World::new(), "(defun f (x) x)").unwrap();
        assert!(define(&w, "(defun f (y) y)").is_err());
    }

    #[test]
    fn rejects_unknown_callee() {
        assert!(define(&World::new(), "(defun f (x) (g x))").is_err());
    }

    #[test]
    fn parses_guard_and_measure() {
        let w = define(
            &World::new(),
            "(defun foo (x) (declare (xargs :guard (true-listp x) :measure (len x)))
               (if (consp x) (foo (cdr x)) x))",
        )
        .unwrap();
        let d = w.get("FOO").unwrap();
        assert!(d.guard.is_some());
        assert_eq!(d.guard_source.as_ref().unwrap().to_string(), "(TRUE-LISTP X)");
        assert!(d.measure.is_some());
    }

    #[test]
    fn rejects_other_declare_keys() {
        let err = define(
            &World::new(),
            "(defun foo (x) (declare (xargs :verify-guards t)) x)",
        )
        .unwrap_err();
        assert!(err.to_string().contains(":VERIFY-GUARDS"));
    }
}
