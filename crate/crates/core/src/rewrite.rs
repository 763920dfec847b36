//! The conditional rewriting engine.
//!
//! Strategy: innermost-first with an outer re-descent loop at each node, so
//! a fired rule's right-hand side is itself fully normalized before the
//! parent retries. `if` tests extend the context into their branches (the
//! rewritten test, positively for the then-branch, negated for the else);
//! `implies` antecedents extend it into their consequents. Ground calls of
//! evaluation-enabled functions fold to constants, recorded as
//! executable-counterpart steps, and a constant `if` test or a constant
//! `implies` consequent collapses the node the same way.

use crate::error::{Error, Result};
use crate::eval::{eval_term, Bindings, EvalResult, DEFAULT_EVAL_FUEL};
use crate::rules::{ActiveTheory, RewriteRule, RuleBook, Rune};
use crate::term::{conjuncts, nnf_negate, Position, Term};
use crate::world::World;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_steps: usize,
    pub max_backchain: usize,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits {
            max_steps: 10_000,
            max_backchain: 20,
        }
    }
}

// ---------------------------------------------------------------------------
// Context
// ---------------------------------------------------------------------------

/// Assumptions in force at a point in the term: user assumptions plus the
/// governors of the path down to it. Terms are kept conjunct-flattened and
/// deduplicated, and a call of a definitionally known function (a
/// synthesized hypothesis function) is also stored unfolded, so hypothesis
/// relief sees through the wrapper.
#[derive(Debug, Clone, Default)]
pub struct Context {
    terms: Vec<Term>,
}

/* Unfolding recursion is capped defensively; definition rules come from
   hypothesis-function synthesis and cannot be self-referential today. */
const UNFOLD_DEPTH: usize = 8;

impl Context {
    pub fn empty() -> Context {
        Context::default()
    }

    pub fn new(assumptions: &[Term], book: &RuleBook) -> Context {
        let mut ctx = Context::default();
        for t in assumptions {
            ctx.add(t, book, 0);
        }
        ctx
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.terms.iter().any(|u| u == t)
    }

    pub fn extended(&self, raw: &[Term], book: &RuleBook) -> Context {
        let mut next = self.clone();
        for t in raw {
            next.add(t, book, 0);
        }
        next
    }

    fn add(&mut self, t: &Term, book: &RuleBook, depth: usize) {
        for c in conjuncts(t) {
            if self.contains(&c) {
                continue;
            }
            self.terms.push(c.clone());
            if depth >= UNFOLD_DEPTH {
                continue;
            }
            if let Term::App(h, args) = &c {
                if let Some(rule) = book.definition_of(h) {
                    if let Some(subst) = bind_formals(&rule.lhs, args) {
                        self.add(&rule.rhs.substitute(&subst), book, depth + 1);
                    }
                }
            }
        }
    }
}

fn bind_formals(lhs: &Term, args: &[Term]) -> Option<BTreeMap<String, Term>> {
    let Term::App(_, params) = lhs else {
        return None;
    };
    if params.len() != args.len() {
        return None;
    }
    let mut subst = BTreeMap::new();
    for (p, a) in params.iter().zip(args) {
        let Term::Var(v) = p else { return None };
        subst.insert(v.clone(), a.clone());
    }
    Some(subst)
}

/// Raw context additions seen when stepping from a node into its idx-th
/// argument: `if` branches assume the test (or its negation), `implies`
/// consequents assume the antecedent.
pub fn branch_extension(head: &str, args: &[Term], idx: usize) -> Vec<Term> {
    match (head, idx) {
        ("IF", 1) if args.len() == 3 => conjuncts(&args[0]),
        ("IF", 2) if args.len() == 3 => conjuncts(&nnf_negate(&args[0])),
        ("IMPLIES", 1) if args.len() == 2 => conjuncts(&args[0]),
        _ => Vec::new(),
    }
}

/// All governors along the path from the root of `term` to `pos`, in
/// root-to-leaf order.
pub fn path_governors(term: &Term, pos: &[usize]) -> Result<Vec<Term>> {
    let mut out = Vec::new();
    let mut cur = term;
    for &i in pos {
        match cur {
            Term::App(h, args) if i < args.len() => {
                out.extend(branch_extension(h, args, i));
                cur = &args[i];
            }
            _ => {
                return Err(Error::Transform(
                    "position escapes the term".to_string(),
                ))
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypProof {
    /// The hypothesis instance is literally among the context terms.
    InContext(Term),
    /// The hypothesis instance rewrites to `'T`.
    Rewrite(Trace),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    /// Address within the trace's initial term.
    pub position: Position,
    pub rune: Rune,
    pub subst: BTreeMap<String, Term>,
    pub hyp_proofs: Vec<HypProof>,
    pub before: Term,
    pub after: Term,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub initial: Term,
    pub steps: Vec<TraceStep>,
    pub final_term: Term,
    pub limit_hit: bool,
}

impl Trace {
    pub fn empty(t: &Term) -> Trace {
        Trace {
            initial: t.clone(),
            steps: Vec::new(),
            final_term: t.clone(),
            limit_hit: false,
        }
    }

    pub fn collect_runes(&self, out: &mut BTreeSet<Rune>) {
        for step in &self.steps {
            out.insert(step.rune.clone());
            for hp in &step.hyp_proofs {
                if let HypProof::Rewrite(tr) = hp {
                    tr.collect_runes(out);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// One-way matching and syntactic application
// ---------------------------------------------------------------------------

/// Extends `subst` to make the pattern equal the subject; nonlinear
/// occurrences must agree, constants must be identical.
pub fn match_term(pattern: &Term, subject: &Term, subst: &mut BTreeMap<String, Term>) -> bool {
    match pattern {
        Term::Var(v) => match subst.get(v) {
            Some(bound) => bound == subject,
            None => {
                subst.insert(v.clone(), subject.clone());
                true
            }
        },
        Term::Const(_) => pattern == subject,
        Term::App(h, args) => match subject {
            Term::App(h2, args2) if h == h2 && args.len() == args2.len() => args
                .iter()
                .zip(args2)
                .all(|(p, s)| match_term(p, s, subst)),
            _ => false,
        },
    }
}

/// Purely syntactic single-rule application, shared with the certificate
/// checker: no hypothesis checking happens here.
pub fn apply_rule_at(
    term: &Term,
    rule: &RewriteRule,
    pos: &[usize],
    subst: &BTreeMap<String, Term>,
) -> Result<Term> {
    let lhs_vars = rule.lhs.free_vars();
    let domain: BTreeSet<String> = subst.keys().cloned().collect();
    if domain != lhs_vars {
        return Err(Error::Certificate(format!(
            "{}: substitution domain differs from rule variables",
            rule.rune
        )));
    }
    for v in &rule.const_vars {
        if !matches!(subst.get(v), Some(Term::Const(_))) {
            return Err(Error::Certificate(format!(
                "{}: {v} must be bound to a constant",
                rule.rune
            )));
        }
    }
    let subterm = term
        .subterm_at(pos)
        .ok_or_else(|| Error::Certificate(format!("{}: invalid position", rule.rune)))?;
    if &rule.lhs.substitute(subst) != subterm {
        return Err(Error::Certificate(format!(
            "{}: left-hand side instance does not match the subterm",
            rule.rune
        )));
    }
    let replaced = term
        .replace_at(pos, rule.rhs.substitute(subst))
        .expect("position already validated");
    Ok(replaced)
}

// ---------------------------------------------------------------------------
// The engine
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct RewriteOutcome {
    pub term: Term,
    pub trace: Trace,
    pub used_runes: BTreeSet<Rune>,
}

pub fn rewrite(
    term: &Term,
    ctx: &Context,
    book: &RuleBook,
    theory: &ActiveTheory,
    world: &World,
    limits: &Limits,
) -> RewriteOutcome {
    let mut rw = Rw {
        book,
        theory,
        world,
        limits: *limits,
        steps: Vec::new(),
        used: 0,
        limit_hit: false,
    };
    let final_term = rw.rw(term.clone(), ctx, &[], 0);
    let trace = Trace {
        initial: term.clone(),
        steps: rw.steps,
        final_term: final_term.clone(),
        limit_hit: rw.limit_hit,
    };
    let mut used_runes = BTreeSet::new();
    trace.collect_runes(&mut used_runes);
    RewriteOutcome {
        term: final_term,
        trace,
        used_runes,
    }
}

struct Rw<'a> {
    book: &'a RuleBook,
    theory: &'a ActiveTheory,
    world: &'a World,
    limits: Limits,
    steps: Vec<TraceStep>,
    used: usize,
    limit_hit: bool,
}

impl<'a> Rw<'a> {
    fn budget_left(&mut self) -> bool {
        if self.used >= self.limits.max_steps {
            self.limit_hit = true;
            return false;
        }
        true
    }

    fn record(&mut self, step: TraceStep) {
        self.used += 1;
        self.steps.push(step);
    }

    fn rw(&mut self, term: Term, ctx: &Context, pos: &[usize], depth: usize) -> Term {
        let mut current = term;
        // Bare-variable rules fire at most once per position per visit.
        let mut fired_var_rules: BTreeSet<Rune> = BTreeSet::new();
        'outer: loop {
            // Arguments first, with contextual descent.
            match current.clone() {
                Term::Var(_) | Term::Const(_) => {}
                Term::App(h, args) if h == "IF" && args.len() == 3 => {
                    let test = self.rw_arg(&args[0], ctx, pos, 0, depth);
                    if let Term::Const(v) = &test {
                        if self.theory.exec_enabled("IF") && self.budget_left() {
                            let keep = if v.truthy() { &args[1] } else { &args[2] };
                            let before =
                                Term::App("IF".into(), vec![test.clone(), args[1].clone(), args[2].clone()]);
                            let after = keep.clone();
                            self.record(TraceStep {
                                position: pos.to_vec(),
                                rune: Rune::Exec("IF".into()),
                                subst: BTreeMap::new(),
                                hyp_proofs: Vec::new(),
                                before,
                                after: after.clone(),
                            });
                            current = after;
                            continue 'outer;
                        }
                    }
                    let then_ctx = ctx.extended(&conjuncts(&test), self.book);
                    let else_ctx = ctx.extended(&conjuncts(&nnf_negate(&test)), self.book);
                    let then_t = self.rw_arg(&args[1], &then_ctx, pos, 1, depth);
                    let else_t = self.rw_arg(&args[2], &else_ctx, pos, 2, depth);
                    current = Term::App("IF".into(), vec![test, then_t, else_t]);
                }
                Term::App(h, args) if h == "IMPLIES" && args.len() == 2 => {
                    let ante = self.rw_arg(&args[0], ctx, pos, 0, depth);
                    let conseq_ctx = ctx.extended(&conjuncts(&ante), self.book);
                    let conseq = self.rw_arg(&args[1], &conseq_ctx, pos, 1, depth);
                    let both_const =
                        matches!(ante, Term::Const(_)) && matches!(conseq, Term::Const(_));
                    let vacuous = matches!(&ante, Term::Const(v) if !v.truthy());
                    let settled = matches!(&conseq, Term::Const(v) if v.truthy());
                    current = Term::App("IMPLIES".into(), vec![ante, conseq]);
                    if !both_const
                        && (vacuous || settled)
                        && self.theory.exec_enabled("IMPLIES")
                        && self.budget_left()
                    {
                        self.record(TraceStep {
                            position: pos.to_vec(),
                            rune: Rune::Exec("IMPLIES".into()),
                            subst: BTreeMap::new(),
                            hyp_proofs: Vec::new(),
                            before: current.clone(),
                            after: Term::t(),
                        });
                        current = Term::t();
                    }
                }
                Term::App(h, args) => {
                    let mut new_args = Vec::with_capacity(args.len());
                    for (i, a) in args.iter().enumerate() {
                        new_args.push(self.rw_arg(a, ctx, pos, i, depth));
                    }
                    current = Term::App(h, new_args);
                }
            }

            // Ground calls of evaluation-enabled functions fold to constants.
            if let Term::App(h, args) = &current {
                if h != "IF"
                    && args.iter().all(|a| matches!(a, Term::Const(_)))
                    && self.theory.exec_enabled(h)
                    && self.budget_left()
                {
                    if let EvalResult::Value(v) =
                        eval_term(self.world, &current, &Bindings::new(), DEFAULT_EVAL_FUEL)
                    {
                        let after = Term::Const(v);
                        self.record(TraceStep {
                            position: pos.to_vec(),
                            rune: Rune::Exec(h.clone()),
                            subst: BTreeMap::new(),
                            hyp_proofs: Vec::new(),
                            before: current.clone(),
                            after: after.clone(),
                        });
                        current = after;
                    }
                }
            }

            // Rules, later admissions first.
            let head = match &current {
                Term::App(h, _) => Some(h.as_str()),
                _ => None,
            };
            for rule in self.book.candidates(head) {
                if !self.theory.rule_enabled(rule) {
                    continue;
                }
                if rule.variable_lhs && fired_var_rules.contains(&rule.rune) {
                    continue;
                }
                if !self.budget_left() {
                    break;
                }
                let mut subst = BTreeMap::new();
                if !match_term(&rule.lhs, &current, &mut subst) {
                    continue;
                }
                if !rule
                    .const_vars
                    .iter()
                    .all(|v| matches!(subst.get(v), Some(Term::Const(_))))
                {
                    continue;
                }
                let after = rule.rhs.substitute(&subst);
                if after == current {
                    continue;
                }
                let Some(hyp_proofs) = self.relieve_hyps(rule, &subst, ctx, depth) else {
                    continue;
                };
                if rule.variable_lhs {
                    fired_var_rules.insert(rule.rune.clone());
                }
                self.record(TraceStep {
                    position: pos.to_vec(),
                    rune: rule.rune.clone(),
                    subst,
                    hyp_proofs,
                    before: current.clone(),
                    after: after.clone(),
                });
                current = after;
                continue 'outer;
            }
            break;
        }
        current
    }

    fn rw_arg(&mut self, arg: &Term, ctx: &Context, pos: &[usize], idx: usize, depth: usize) -> Term {
        let mut child = pos.to_vec();
        child.push(idx);
        self.rw(arg.clone(), ctx, &child, depth)
    }

    /// None means some hypothesis could not be relieved. Bare-variable
    /// rules match every subterm, so letting them backchain would spawn a
    /// rewrite whose every node retries the same rule, an exponential
    /// search for nothing; they are context rules, membership relief only.
    fn relieve_hyps(
        &mut self,
        rule: &RewriteRule,
        subst: &BTreeMap<String, Term>,
        ctx: &Context,
        depth: usize,
    ) -> Option<Vec<HypProof>> {
        let mut proofs = Vec::new();
        for hyp in &rule.hyps {
            let instance = hyp.substitute(subst);
            if ctx.contains(&instance) {
                proofs.push(HypProof::InContext(instance));
                continue;
            }
            if rule.variable_lhs || depth >= self.limits.max_backchain {
                return None;
            }
            let (reduced, trace) = self.rw_capture(&instance, ctx, depth + 1);
            if reduced.is_const_t() {
                proofs.push(HypProof::Rewrite(trace));
            } else {
                return None;
            }
        }
        Some(proofs)
    }

    /// Rewrite in a fresh trace, preserving the shared step budget.
    fn rw_capture(&mut self, term: &Term, ctx: &Context, depth: usize) -> (Term, Trace) {
        let saved = std::mem::take(&mut self.steps);
        let final_term = self.rw(term.clone(), ctx, &[], depth);
        let steps = std::mem::replace(&mut self.steps, saved);
        let trace = Trace {
            initial: term.clone(),
            steps,
            final_term: final_term.clone(),
            limit_hit: self.limit_hit,
        };
        (final_term, trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{base_book, theory_from};
    use crate::sexpr::parse_sexpr;
    use crate::term::{translate, VarPolicy};

    fn t(world: &World, src: &str) -> Term {
        translate(&parse_sexpr(src).unwrap(), VarPolicy::AutoBind, world).unwrap()
    }

    fn rw_default(world: &World, book: &RuleBook, ctx: &Context, src: &str) -> RewriteOutcome {
        let theory = theory_from(book, world, None, &[], &[]).unwrap();
        rewrite(
            &t(world, src),
            ctx,
            book,
            &theory,
            world,
            &Limits::default(),
        )
    }

    #[test]
    fn folds_constants_in_sum() {
        let w = World::new()
            .define(&parse_sexpr("(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))").unwrap())
            .unwrap();
        let book = base_book();
        let got = rw_default(&w, &book, &Context::empty(), "(if (zp x) 0 (+ 1 1 (f (+ -1 x))))");
        assert_eq!(got.term, t(&w, "(if (zp x) 0 (binary-+ 2 (f (binary-+ -1 x))))"));
        assert!(got.used_runes.contains(&Rune::Rewrite("FOLD-CONSTS-IN-+".into())));
        assert!(got.used_runes.contains(&Rune::Exec("BINARY-+".into())));
        assert_eq!(got.trace.steps.len(), 2);
        assert!(!got.trace.limit_hit);
    }

    #[test]
    fn context_rule_reduces_variable() {
        let w = World::new();
        let book = base_book();
        let ctx = Context::new(&[t(&w, "(true-listp x)"), t(&w, "(not (consp x))")], &book);
        let got = rw_default(&w, &book, &ctx, "x");
        assert!(got.term.is_const_nil());
        let step = &got.trace.steps[0];
        assert_eq!(step.hyp_proofs.len(), 2);
        assert!(matches!(step.hyp_proofs[0], HypProof::InContext(_)));
        // And the no-op guard: 'NIL stays put under the same context.
        let again = rw_default(&w, &book, &ctx, "'nil");
        assert!(again.trace.steps.is_empty());
    }

    #[test]
    fn if_same_and_ground_if() {
        let w = World::new();
        let book = base_book();
        let got = rw_default(&w, &book, &Context::empty(), "(if (consp x) y y)");
        assert_eq!(got.term, Term::Var("Y".into()));

        let got = rw_default(&w, &book, &Context::empty(), "(if (consp '(1)) p q)");
        assert_eq!(got.term, Term::Var("P".into()));
        assert!(got.used_runes.contains(&Rune::Exec("CONSP".into())));
        assert!(got.used_runes.contains(&Rune::Exec("IF".into())));
    }

    #[test]
    fn conditional_rule_backchains_through_evaluation() {
        let w = World::new()
            .define(&parse_sexpr("(defun wrap (x) x)").unwrap())
            .unwrap();
        let mut book = base_book();
        book.add_rule(
            "WRAP-NATP",
            &parse_sexpr("(implies (natp x) (equal (wrap x) 0))").unwrap(),
            true,
            &w,
        )
        .unwrap();
        let theory = theory_from(&book, &w, None, &[], &[Rune::Exec("WRAP".into())]).unwrap();
        let run = |src: &str| {
            rewrite(
                &t(&w, src),
                &Context::empty(),
                &book,
                &theory,
                &w,
                &Limits::default(),
            )
        };
        let hit = run("(wrap 5)");
        assert_eq!(hit.term, Term::int(0));
        assert!(matches!(
            hit.trace.steps[0].hyp_proofs[0],
            HypProof::Rewrite(_)
        ));
        let miss = run("(wrap 'a)");
        assert_eq!(miss.term, t(&w, "(wrap 'a)"));
    }

    #[test]
    fn membership_relieves_without_backchaining() {
        let w = World::new()
            .define(&parse_sexpr("(defun wrap (x) x)").unwrap())
            .unwrap();
        let mut book = base_book();
        book.add_rule(
            "WRAP-NATP",
            &parse_sexpr("(implies (natp x) (equal (wrap x) 0))").unwrap(),
            true,
            &w,
        )
        .unwrap();
        let theory = theory_from(&book, &w, None, &[], &[Rune::Exec("WRAP".into())]).unwrap();
        let ctx = Context::new(&[t(&w, "(natp y)")], &book);
        let limits = Limits {
            max_backchain: 0,
            ..Limits::default()
        };
        let got = rewrite(&t(&w, "(wrap y)"), &ctx, &book, &theory, &w, &limits);
        assert_eq!(got.term, Term::int(0));
        // Without the context entry the zero-depth limit blocks the rule.
        let got = rewrite(&t(&w, "(wrap 5)"), &Context::empty(), &book, &theory, &w, &limits);
        assert_eq!(got.term, t(&w, "(wrap 5)"));
    }

    #[test]
    fn step_limit_halts_divergence() {
        let w = World::new()
            .define(&parse_sexpr("(defun f (x) x)").unwrap())
            .unwrap();
        let mut book = base_book();
        book.add_rule(
            "GROW",
            &parse_sexpr("(equal (f x) (f (f x)))").unwrap(),
            true,
            &w,
        )
        .unwrap();
        let theory = theory_from(&book, &w, None, &[], &[Rune::Exec("F".into())]).unwrap();
        let limits = Limits {
            max_steps: 40,
            max_backchain: 20,
        };
        let got = rewrite(&t(&w, "(f x)"), &Context::empty(), &book, &theory, &w, &limits);
        assert!(got.trace.limit_hit);
        assert!(got.trace.steps.len() <= 40);
    }

    #[test]
    fn fixpoint_is_idempotent() {
        let w = World::new()
            .define(&parse_sexpr("(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))").unwrap())
            .unwrap();
        let book = base_book();
        let once = rw_default(&w, &book, &Context::empty(), "(if (zp x) 0 (+ 1 1 (f (+ -1 x))))");
        assert!(!once.trace.limit_hit);
        let theory = theory_from(&book, &w, None, &[], &[]).unwrap();
        let twice = rewrite(
            &once.term,
            &Context::empty(),
            &book,
            &theory,
            &w,
            &Limits::default(),
        );
        assert_eq!(twice.term, once.term);
        assert!(twice.trace.steps.is_empty());
    }

    #[test]
    fn implication_discharges_through_context() {
        let w = World::new();
        let mut book = base_book();
        book.add_rule(
            "TRUE-LISTP-OF-CDR",
            &parse_sexpr("(implies (true-listp x) (equal (true-listp (cdr x)) 't))").unwrap(),
            true,
            &w,
        )
        .unwrap();
        let got = rw_default(
            &w,
            &book,
            &Context::empty(),
            "(implies (and (true-listp x) (consp x)) (true-listp (cdr x)))",
        );
        assert!(got.term.is_const_t());
        assert!(got.used_runes.contains(&Rune::Exec("IMPLIES".into())));
    }

    #[test]
    fn definition_closure_in_context() {
        let w = World::new();
        let mut book = base_book();
        book.insert(RewriteRule::definition(
            "FOO-HYPS",
            &["X".to_string()],
            Term::App("TRUE-LISTP".into(), vec![Term::Var("X".into())]),
            0,
        ))
        .unwrap();
        book.add_rule(
            "TRUE-LISTP-OF-CDR",
            &parse_sexpr("(implies (true-listp x) (equal (true-listp (cdr x)) 't))").unwrap(),
            true,
            &w,
        )
        .unwrap();
        let ctx = Context::new(&[Term::App("FOO-HYPS".into(), vec![Term::Var("X".into())])], &book);
        assert!(ctx.contains(&t(&w, "(true-listp x)")));
        let got = rw_default(&w, &book, &ctx, "(true-listp (cdr x))");
        assert!(got.term.is_const_t());
    }

    #[test]
    fn matching_is_nonlinear_and_constant_exact() {
        let w = World::new();
        let mut subst = BTreeMap::new();
        assert!(match_term(
            &t(&w, "(if x y y)"),
            &t(&w, "(if (consp a) (car a) (car a))"),
            &mut subst
        ));
        let mut subst = BTreeMap::new();
        assert!(!match_term(
            &t(&w, "(if x y y)"),
            &t(&w, "(if (consp a) (car a) (cdr a))"),
            &mut subst
        ));
        let mut subst = BTreeMap::new();
        assert!(!match_term(&t(&w, "(nth 0 x)"), &t(&w, "(nth 1 y)"), &mut subst));
    }

    #[test]
    fn apply_rule_at_validates() {
        let w = World::new();
        let book = base_book();
        let car_cons = book.get(&Rune::Rewrite("CAR-CONS".into())).unwrap();
        let term = t(&w, "(binary-* (car (cons a b)) 5)");
        let mut subst = BTreeMap::new();
        subst.insert("X".to_string(), Term::Var("A".into()));
        subst.insert("Y".to_string(), Term::Var("B".into()));
        let out = apply_rule_at(&term, car_cons, &[0], &subst).unwrap();
        assert_eq!(out, t(&w, "(binary-* a 5)"));

        assert!(apply_rule_at(&term, car_cons, &[1], &subst).is_err());
        assert!(apply_rule_at(&term, car_cons, &[0, 0, 9], &subst).is_err());
        let mut extra = subst.clone();
        extra.insert("Z".to_string(), Term::nil());
        assert!(apply_rule_at(&term, car_cons, &[0], &extra).is_err());
        let mut wrong = subst.clone();
        wrong.insert("X".to_string(), Term::Var("B".into()));
        assert!(apply_rule_at(&term, car_cons, &[0], &wrong).is_err());
    }

    #[test]
    fn governors_along_path() {
        let w = World::new();
        let body = t(&w, "(if (consp x) (car x) x)");
        assert_eq!(path_governors(&body, &[]).unwrap(), Vec::<Term>::new());
        assert_eq!(
            path_governors(&body, &[1]).unwrap(),
            vec![t(&w, "(consp x)")]
        );
        assert_eq!(
            path_governors(&body, &[2]).unwrap(),
            vec![t(&w, "(not (consp x))")]
        );
        assert!(path_governors(&body, &[7]).is_err());
    }
}
