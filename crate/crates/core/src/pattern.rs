//! The `:simplify-body` pattern language.
//!
//! Patterns are surface s-expressions with three extra leaves: `_` matches
//! any subterm, `@` matches any subterm and marks it as a simplification
//! site, and `(:@ p)` marks the subterms matching `p`. Everything else is
//! ordinary source syntax (sugar included) whose variables match only
//! themselves. Parsing reuses the term translator: markers are swapped for
//! reserved fresh symbols, the form is translated, and the reserved
//! variables are turned back into pattern leaves.

use crate::error::{Error, Result};
use crate::rewrite::path_governors;
use crate::sexpr::SExpr;
use crate::term::{translate, Position, Term, VarPolicy};
use crate::value::Value;
use crate::world::World;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SitePattern {
    Wild,
    Site,
    WrappedSite(Box<SitePattern>),
    /// A source variable: matches exactly that variable.
    Var(String),
    Const(Value),
    App(String, Vec<SitePattern>),
}

/// A simplification site: where to rewrite and what governs the path there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Site {
    pub position: Position,
    pub governors: Vec<Term>,
}

const WILD_PREFIX: &str = "__PATTERN-WILD-";
const SITE_PREFIX: &str = "__PATTERN-SITE-";
const WRAP_PREFIX: &str = "__PATTERN-WRAP-";

pub fn parse_pattern(form: &SExpr, world: &World) -> Result<SitePattern> {
    let mut state = MarkState {
        counter: 0,
        payloads: BTreeMap::new(),
    };
    let marked = mark_holes(form, &mut state, false)?;
    let term = translate(&marked, VarPolicy::AutoBind, world)
        .map_err(|e| Error::Pattern(format!("unusable pattern: {e}")))?;
    // Sugar expansion must not duplicate a hole: a doubled wildcard would
    // silently become a same-subterm constraint and a doubled site would
    // mark two positions from one marker.
    for (name, _) in &state.payloads {
        if count_var(&term, name) > 1 {
            return Err(Error::Pattern(
                "macro expansion duplicates a pattern hole; write the expansion explicitly"
                    .to_string(),
            ));
        }
    }
    let pattern = term_to_pattern(&term, &state, world)?;
    if !has_marker(&pattern) {
        return Err(Error::Pattern(
            "pattern has no simplification site (no @ or (:@ ...))".to_string(),
        ));
    }
    Ok(pattern)
}

struct MarkState {
    counter: usize,
    /// Reserved symbol -> the (already marked) payload of a `(:@ p)`.
    payloads: BTreeMap<String, SExpr>,
}

impl MarkState {
    fn fresh(&mut self, prefix: &str) -> String {
        let name = format!("{prefix}{}", self.counter);
        self.counter += 1;
        name
    }
}

fn mark_holes(form: &SExpr, state: &mut MarkState, inside_site: bool) -> Result<SExpr> {
    match form {
        SExpr::Sym(s) if s == "_" => {
            let name = state.fresh(WILD_PREFIX);
            state.payloads.insert(name.clone(), SExpr::sym("_"));
            Ok(SExpr::Sym(name))
        }
        SExpr::Sym(s) if s == "@" => {
            if inside_site {
                return Err(Error::Pattern("site marker nested inside (:@ ...)".into()));
            }
            let name = state.fresh(SITE_PREFIX);
            state.payloads.insert(name.clone(), SExpr::sym("@"));
            Ok(SExpr::Sym(name))
        }
        SExpr::List(items) if items.first().map(|h| h.is_sym(":@")) == Some(true) => {
            if inside_site {
                return Err(Error::Pattern("site marker nested inside (:@ ...)".into()));
            }
            if items.len() != 2 {
                return Err(Error::Pattern(":@ takes exactly one sub-pattern".into()));
            }
            let payload = mark_holes(&items[1], state, true)?;
            let name = state.fresh(WRAP_PREFIX);
            state.payloads.insert(name.clone(), payload);
            Ok(SExpr::Sym(name))
        }
        SExpr::List(items) => {
            // Quoted data is opaque: its underscores are symbols, not holes.
            if items.len() == 2 && items[0].is_sym("QUOTE") {
                return Ok(form.clone());
            }
            let walked: Result<Vec<SExpr>> = items
                .iter()
                .map(|i| mark_holes(i, state, inside_site))
                .collect();
            Ok(SExpr::List(walked?))
        }
        _ => Ok(form.clone()),
    }
}

fn count_var(t: &Term, name: &str) -> usize {
    match t {
        Term::Var(v) => (v == name) as usize,
        Term::Const(_) => 0,
        Term::App(_, args) => args.iter().map(|a| count_var(a, name)).sum(),
    }
}

fn term_to_pattern(t: &Term, state: &MarkState, world: &World) -> Result<SitePattern> {
    Ok(match t {
        Term::Var(v) if v.starts_with(WILD_PREFIX) => SitePattern::Wild,
        Term::Var(v) if v.starts_with(SITE_PREFIX) => SitePattern::Site,
        Term::Var(v) if v.starts_with(WRAP_PREFIX) => {
            let payload = state
                .payloads
                .get(v)
                .ok_or_else(|| Error::Pattern("unknown site payload".into()))?;
            let payload_term = translate(payload, VarPolicy::AutoBind, world)
                .map_err(|e| Error::Pattern(format!("unusable pattern: {e}")))?;
            SitePattern::WrappedSite(Box::new(term_to_pattern(&payload_term, state, world)?))
        }
        Term::Var(v) => SitePattern::Var(v.clone()),
        Term::Const(v) => SitePattern::Const(v.clone()),
        Term::App(h, args) => {
            let sub: Result<Vec<SitePattern>> = args
                .iter()
                .map(|a| term_to_pattern(a, state, world))
                .collect();
            SitePattern::App(h.clone(), sub?)
        }
    })
}

fn has_marker(p: &SitePattern) -> bool {
    match p {
        SitePattern::Site | SitePattern::WrappedSite(_) => true,
        SitePattern::App(_, args) => args.iter().any(has_marker),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// Matching
// ---------------------------------------------------------------------------

/// Everything the whole pattern marks within every outermost match of the
/// body, leftmost first, each with its root-to-site governors.
pub fn match_sites(pattern: &SitePattern, body: &Term) -> Result<Vec<Site>> {
    let mut positions: Vec<Position> = Vec::new();
    walk(pattern, body, &mut Vec::new(), &mut positions);
    if positions.is_empty() {
        return Err(Error::Pattern("pattern does not match the body".into()));
    }
    positions
        .into_iter()
        .map(|position| {
            let governors = path_governors(body, &position)?;
            Ok(Site {
                position,
                governors,
            })
        })
        .collect()
}

/// Outermost-match walk: once the pattern matches, its marked positions are
/// taken and the subtree is not searched further, so sites never overlap.
fn walk(pattern: &SitePattern, t: &Term, here: &mut Position, out: &mut Vec<Position>) {
    if let Some(rels) = match_at(pattern, t) {
        for rel in rels {
            let mut abs = here.clone();
            abs.extend(rel);
            out.push(abs);
        }
        return;
    }
    if let Term::App(_, args) = t {
        for (i, a) in args.iter().enumerate() {
            here.push(i);
            walk(pattern, a, here, out);
            here.pop();
        }
    }
}

/// The positions (relative to `t`) this pattern marks, or None on mismatch.
fn match_at(pattern: &SitePattern, t: &Term) -> Option<Vec<Position>> {
    match pattern {
        SitePattern::Wild => Some(Vec::new()),
        SitePattern::Site => Some(vec![Vec::new()]),
        SitePattern::WrappedSite(inner) => {
            match_at(inner, t).map(|_| vec![Vec::new()])
        }
        SitePattern::Var(v) => match t {
            Term::Var(tv) if tv == v => Some(Vec::new()),
            _ => None,
        },
        SitePattern::Const(c) => match t {
            Term::Const(tc) if tc == c => Some(Vec::new()),
            _ => None,
        },
        SitePattern::App(h, ps) => match t {
            Term::App(th, args) if th == h && args.len() == ps.len() => {
                let mut marked = Vec::new();
                for (i, (p, a)) in ps.iter().zip(args).enumerate() {
                    let rels = match_at(p, a)?;
                    for rel in rels {
                        let mut pos = vec![i];
                        pos.extend(rel);
                        marked.push(pos);
                    }
                }
                Some(marked)
            }
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sexpr::parse_sexpr;

    fn pat(src: &str) -> Result<SitePattern> {
        parse_pattern(&parse_sexpr(src).unwrap(), &World::new())
    }

    fn body(src: &str) -> Term {
        translate(
            &parse_sexpr(src).unwrap(),
            VarPolicy::AutoBind,
            &World::new(),
        )
        .unwrap()
    }

    #[test]
    fn selects_only_the_starred_multiplication() {
        let p = pat("(* (:@ (car (cons x y))) _)").unwrap();
        let b = body(
            "(list (+ (car (cons x y)) 3) (* (car (cons y y)) 4) (* (car (cons x y)) 5))",
        );
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(
            b.subterm_at(&sites[0].position).unwrap(),
            &body("(car (cons x y))")
        );
        assert!(sites[0].governors.is_empty());
    }

    #[test]
    fn then_branch_site_with_governor() {
        let p = pat("(if _ @ _)").unwrap();
        let b = body("(if (natp n) (+ n 1) 0)");
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].position, vec![1]);
        assert_eq!(sites[0].governors, vec![body("(natp n)")]);
    }

    #[test]
    fn root_site_matches_everything_once() {
        let p = pat("@").unwrap();
        let b = body("(append x y)");
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].position, Vec::<usize>::new());
        assert!(sites[0].governors.is_empty());
    }

    #[test]
    fn outermost_match_wins() {
        // The pattern could also match the inner call; only the outer is
        // reported and the positions never overlap.
        let p = pat("(cons @ _)").unwrap();
        let b = body("(cons (cons a b) c)");
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].position, vec![0]);
    }

    #[test]
    fn multiple_disjoint_matches_in_order() {
        let p = pat("(car @)").unwrap();
        let b = body("(cons (car x) (car y))");
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites.len(), 2);
        assert_eq!(sites[0].position, vec![0, 0]);
        assert_eq!(sites[1].position, vec![1, 0]);
    }

    #[test]
    fn pattern_variables_are_exact() {
        let p = pat("(* (:@ (car (cons x y))) _)").unwrap();
        let b = body("(* (car (cons y y)) 4)");
        assert!(match_sites(&p, &b).is_err());
    }

    #[test]
    fn sugar_translates_inside_patterns() {
        // + is n-ary sugar; the pattern must align with the translated body.
        let p = pat("(+ _ (:@ (+ _ _)))").unwrap();
        let b = body("(+ a b c)");
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].position, vec![1]);
    }

    #[test]
    fn rejects_bad_patterns() {
        assert!(matches!(pat("(car (cons x y))"), Err(Error::Pattern(_))));
        assert!(matches!(pat("(:@ (:@ _))"), Err(Error::Pattern(_))));
        assert!(matches!(pat("(if (:@ @) _ _)"), Err(Error::Pattern(_))));
        assert!(matches!(pat("(:@ x y)"), Err(Error::Pattern(_))));
        assert!(matches!(pat("(mystery-fn @)"), Err(Error::Pattern(_))));
        // or-sugar duplicates its first argument's hole.
        assert!(matches!(pat("(or @ x)"), Err(Error::Pattern(_))));
    }

    #[test]
    fn quoted_data_is_not_a_hole() {
        let p = pat("(cons '_ @)").unwrap();
        let b = body("(cons '_ x)");
        let sites = match_sites(&p, &b).unwrap();
        assert_eq!(sites[0].position, vec![1]);
    }

    #[test]
    fn no_match_is_loud() {
        let p = pat("(car @)").unwrap();
        let b = body("(cdr x)");
        let err = match_sites(&p, &b).unwrap_err();
        assert!(err.to_string().contains("does not match"));
    }
}
