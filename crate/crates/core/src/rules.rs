//! Rewrite rules, runes, theories, and the built-in base book.

use crate::error::{Error, Result};
use crate::sexpr::SExpr;
use crate::term::{primitive_arity, translate, Term, VarPolicy};
use crate::world::World;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// A rule's identity as reported in traces and certificates.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rune {
    Rewrite(String),
    Exec(String),
    Definition(String),
}

impl Rune {
    pub fn to_sexpr(&self) -> SExpr {
        let (tag, name) = match self {
            Rune::Rewrite(n) => (":REWRITE", n),
            Rune::Exec(n) => (":EXECUTABLE-COUNTERPART", n),
            Rune::Definition(n) => (":DEFINITION", n),
        };
        SExpr::list(vec![SExpr::sym(tag), SExpr::sym(name)])
    }

    pub fn from_sexpr(form: &SExpr) -> Result<Rune> {
        let items = form
            .as_list()
            .ok_or_else(|| Error::Rule(format!("malformed rune {form}")))?;
        let (tag, name) = match items {
            [a, b] => (a.as_sym(), b.as_sym()),
            _ => (None, None),
        };
        match (tag, name) {
            (Some(":REWRITE"), Some(n)) => Ok(Rune::Rewrite(n.to_string())),
            (Some(":EXECUTABLE-COUNTERPART"), Some(n)) | (Some(":E"), Some(n)) => {
                Ok(Rune::Exec(n.to_string()))
            }
            (Some(":DEFINITION"), Some(n)) => Ok(Rune::Definition(n.to_string())),
            _ => Err(Error::Rule(format!("malformed rune {form}"))),
        }
    }

    /// Theory items: a bare symbol names a rewrite rule, a tagged pair
    /// selects the rune kind explicitly.
    pub fn from_theory_item(form: &SExpr) -> Result<Rune> {
        match form.as_sym() {
            Some(s) => Ok(Rune::Rewrite(s.to_string())),
            None => Rune::from_sexpr(form),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Rune::Rewrite(n) | Rune::Exec(n) | Rune::Definition(n) => n,
        }
    }
}

impl fmt::Display for Rune {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_sexpr())
    }
}

#[derive(Debug, Clone)]
pub struct RewriteRule {
    pub rune: Rune,
    pub hyps: Vec<Term>,
    pub lhs: Term,
    pub rhs: Term,
    pub enabled_by_default: bool,
    /// Admission sequence number; later rules are tried first.
    pub order: usize,
    /// Variables that must be bound to quoted constants for the rule to
    /// fire. Built-in rules only; the event syntax cannot express this.
    pub const_vars: BTreeSet<String>,
    pub variable_lhs: bool,
}

impl RewriteRule {
    fn validate(&self) -> Result<()> {
        if matches!(self.lhs, Term::Const(_)) {
            return Err(Error::Rule(format!(
                "{}: left-hand side is a constant",
                self.rune.name()
            )));
        }
        self.variable_lhs_ok()?;
        let lhs_vars = self.lhs.free_vars();
        for t in self.hyps.iter().chain(std::iter::once(&self.rhs)) {
            for v in t.free_vars() {
                if !lhs_vars.contains(&v) {
                    return Err(Error::Rule(format!(
                        "{}: variable {v} is not bound by the left-hand side",
                        self.rune.name()
                    )));
                }
            }
        }
        Ok(())
    }

    fn variable_lhs_ok(&self) -> Result<()> {
        if self.variable_lhs && self.hyps.is_empty() {
            return Err(Error::Rule(format!(
                "{}: a bare-variable left-hand side needs hypotheses",
                self.rune.name()
            )));
        }
        Ok(())
    }

    /// Definitional rule `(fn ...formals) = body`, used for unfolding
    /// synthesized hypothesis functions.
    pub fn definition(name: &str, formals: &[String], body: Term, order: usize) -> RewriteRule {
        RewriteRule {
            rune: Rune::Definition(name.to_string()),
            hyps: Vec::new(),
            lhs: Term::App(
                name.to_string(),
                formals.iter().map(|f| Term::Var(f.clone())).collect(),
            ),
            rhs: body,
            enabled_by_default: true,
            order,
            const_vars: BTreeSet::new(),
            variable_lhs: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RuleBook {
    rules: Vec<RewriteRule>,
    by_head: HashMap<String, Vec<usize>>,
    variable_lhs: Vec<usize>,
}

impl RuleBook {
    pub fn new() -> RuleBook {
        RuleBook::default()
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn get(&self, rune: &Rune) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| &r.rune == rune)
    }

    pub fn contains(&self, rune: &Rune) -> bool {
        self.get(rune).is_some()
    }

    /// The unfolding rule for a definitionally registered function.
    pub fn definition_of(&self, fn_name: &str) -> Option<&RewriteRule> {
        self.get(&Rune::Definition(fn_name.to_string()))
    }

    /// Rules that could apply at a term with the given head, later
    /// admissions first. Bare-variable rules apply everywhere.
    pub fn candidates(&self, head: Option<&str>) -> Vec<&RewriteRule> {
        let mut idx: Vec<usize> = match head {
            Some(h) => self.by_head.get(h).cloned().unwrap_or_default(),
            None => Vec::new(),
        };
        idx.extend_from_slice(&self.variable_lhs);
        idx.sort_by(|a, b| self.rules[*b].order.cmp(&self.rules[*a].order));
        idx.into_iter().map(|i| &self.rules[i]).collect()
    }

    /// Ingest a theorem body of shape `(equal lhs rhs)` or
    /// `(implies hyp (equal lhs rhs))`; hypothesis conjunctions flatten.
    pub fn add_rule(
        &mut self,
        name: &str,
        body: &SExpr,
        default_enabled: bool,
        world: &World,
    ) -> Result<()> {
        let formula = translate(body, VarPolicy::AutoBind, world)
            .map_err(|e| Error::Rule(format!("{name}: {e}")))?;
        self.add_rule_term(Rune::Rewrite(name.to_string()), &formula, default_enabled)
    }

    /// Same, from an already translated formula. Also the entry point for
    /// registering equivalence theorems produced by earlier transformations.
    pub fn add_rule_term(
        &mut self,
        rune: Rune,
        formula: &Term,
        default_enabled: bool,
    ) -> Result<()> {
        let (hyps, concl) = match formula {
            Term::App(h, args) if h == "IMPLIES" && args.len() == 2 => {
                (crate::term::conjuncts(&args[0]), &args[1])
            }
            other => (Vec::new(), other),
        };
        let (lhs, rhs) = match concl {
            Term::App(h, args) if h == "EQUAL" && args.len() == 2 => {
                (args[0].clone(), args[1].clone())
            }
            _ => {
                return Err(Error::Rule(format!(
                    "{}: conclusion is not an equality",
                    rune.name()
                )))
            }
        };
        let variable_lhs = matches!(lhs, Term::Var(_));
        let rule = RewriteRule {
            rune,
            hyps,
            lhs,
            rhs,
            enabled_by_default: default_enabled,
            order: self.rules.len(),
            const_vars: BTreeSet::new(),
            variable_lhs,
        };
        self.insert(rule)
    }

    pub fn insert(&mut self, mut rule: RewriteRule) -> Result<()> {
        if self.contains(&rule.rune) {
            return Err(Error::Rule(format!("duplicate rune {}", rule.rune)));
        }
        rule.order = self.rules.len();
        rule.validate()?;
        let i = self.rules.len();
        if rule.variable_lhs {
            self.variable_lhs.push(i);
        } else if let Term::App(h, _) = &rule.lhs {
            self.by_head.entry(h.clone()).or_default().push(i);
        }
        self.rules.push(rule);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Theories
// ---------------------------------------------------------------------------

/// Which runes are live for one rewriting run. An explicit base list (the
/// `:theory` option) replaces the per-rule defaults; enables and disables
/// adjust either starting point, with disables winning.
#[derive(Debug, Clone, Default)]
pub struct ActiveTheory {
    explicit: Option<BTreeSet<Rune>>,
    enabled: BTreeSet<Rune>,
    disabled: BTreeSet<Rune>,
}

impl ActiveTheory {
    pub fn rule_enabled(&self, rule: &RewriteRule) -> bool {
        if self.disabled.contains(&rule.rune) {
            return false;
        }
        if self.enabled.contains(&rule.rune) {
            return true;
        }
        match &self.explicit {
            Some(set) => set.contains(&rule.rune),
            None => rule.enabled_by_default,
        }
    }

    /// Turn a rune on unconditionally, overriding any earlier disable.
    pub fn force_enable(&mut self, rune: Rune) {
        self.disabled.remove(&rune);
        self.enabled.insert(rune);
    }

    /// Turn a rune off unconditionally, overriding any earlier enable.
    pub fn force_disable(&mut self, rune: Rune) {
        self.enabled.remove(&rune);
        self.disabled.insert(rune);
    }

    /// Ground-call evaluation is on for every function unless an explicit
    /// theory or a disable says otherwise.
    pub fn exec_enabled(&self, fn_name: &str) -> bool {
        let rune = Rune::Exec(fn_name.to_string());
        if self.disabled.contains(&rune) {
            return false;
        }
        if self.enabled.contains(&rune) {
            return true;
        }
        match &self.explicit {
            Some(set) => set.contains(&rune),
            None => true,
        }
    }
}

pub fn theory_from(
    book: &RuleBook,
    world: &World,
    explicit: Option<&[Rune]>,
    enable: &[Rune],
    disable: &[Rune],
) -> Result<ActiveTheory> {
    let known = |rune: &Rune| -> Result<()> {
        let ok = match rune {
            Rune::Rewrite(_) | Rune::Definition(_) => book.contains(rune),
            Rune::Exec(f) => primitive_arity(f).is_some() || world.contains(f),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Theory(format!("unknown rune {rune}")))
        }
    };
    for rune in explicit
        .unwrap_or(&[])
        .iter()
        .chain(enable)
        .chain(disable)
    {
        known(rune)?;
    }
    if let Some(both) = enable.iter().find(|r| disable.contains(r)) {
        return Err(Error::Theory(format!("{both} both enabled and disabled")));
    }
    Ok(ActiveTheory {
        explicit: explicit.map(|r| r.iter().cloned().collect()),
        enabled: enable.iter().cloned().collect(),
        disabled: disable.iter().cloned().collect(),
    })
}

// ---------------------------------------------------------------------------
// Base book
// ---------------------------------------------------------------------------

/// The always-available rules. FOLD-CONSTS-IN-+ carries a syntactic
/// constancy condition on c1/c2; its right-hand side leaves the folded sum
/// as a ground call for counterpart evaluation to finish.
pub fn base_book() -> RuleBook {
    let mut book = RuleBook::new();
    let w = World::new();
    let mut add = |name: &str, hyps: &[&str], lhs: &str, rhs: &str, const_vars: &[&str]| {
        let t = |src: &str| {
            translate(
                &crate::sexpr::parse_sexpr(src).expect("base rule syntax"),
                VarPolicy::AutoBind,
                &w,
            )
            .expect("base rule translation")
        };
        let lhs = t(lhs);
        let rule = RewriteRule {
            rune: Rune::Rewrite(name.to_string()),
            hyps: hyps.iter().map(|h| t(h)).collect(),
            variable_lhs: matches!(lhs, Term::Var(_)),
            lhs,
            rhs: t(rhs),
            enabled_by_default: true,
            order: 0,
            const_vars: const_vars.iter().map(|s| s.to_string()).collect(),
        };
        book.insert(rule).expect("base rule valid");
    };
    add("CAR-CONS", &[], "(car (cons x y))", "x", &[]);
    add("CDR-CONS", &[], "(cdr (cons x y))", "y", &[]);
    add("NTH-OF-0", &[], "(nth 0 x)", "(car x)", &[]);
    add(
        "FOLD-CONSTS-IN-+",
        &[],
        "(binary-+ c1 (binary-+ c2 x))",
        "(binary-+ (binary-+ c1 c2) x)",
        &["C1", "C2"],
    );
    add("IF-SAME", &[], "(if x y y)", "y", &[]);
    add(
        "TRUE-LISTP-NOT-CONSP",
        &["(true-listp x)", "(not (consp x))"],
        "x",
        "'nil",
        &[],
    );
    book
}
