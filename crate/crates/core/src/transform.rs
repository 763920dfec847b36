//! The definition-simplification transform.
//!
//! Given a defined function, a rule book, and options, this produces a new
//! definition (a whole new clique for mutual recursion) whose body is the
//! rewritten old body with recursive calls renamed, plus the equivalence
//! statement per member and, under assumptions, the preserved-hypotheses
//! obligations. Everything needed to re-check the result is collected in a
//! TransformRecord.

use crate::error::{Error, Result};
use crate::pattern::{match_sites, parse_pattern, Site};
use crate::rewrite::{
    path_governors, rewrite, Context, Limits, Trace,
};
use crate::rules::{theory_from, ActiveTheory, RewriteRule, RuleBook, Rune};
use crate::sexpr::SExpr;
use crate::term::{
    conjuncts, directed_untranslate, make_conjunction, translate, untranslate_plain, Position,
    Term, VarPolicy,
};
use crate::world::{Definition, World};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssumptionSpec {
    None,
    /// Use the function's own guard.
    Guard,
    /// Explicit terms over the function's formals, still in source syntax.
    Terms(Vec<SExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UntranslateMode {
    Directed,
    Plain,
    Raw,
}

#[derive(Debug, Clone)]
pub struct Options {
    pub assumptions: AssumptionSpec,
    pub simplify_body: Option<SExpr>,
    pub simplify_guard: bool,
    pub simplify_measure: bool,
    pub new_name: Option<String>,
    pub theorem_name: Option<String>,
    pub must_simplify: bool,
    pub theory: Option<Vec<Rune>>,
    pub enable: Vec<Rune>,
    pub disable: Vec<Rune>,
    pub untranslate: UntranslateMode,
    pub show_only: bool,
    pub print_def: bool,
    /// Record undischarged obligations as warnings instead of failing.
    /// Set from the command line, not from event options.
    pub assume_obligations: bool,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            assumptions: AssumptionSpec::None,
            simplify_body: None,
            simplify_guard: false,
            simplify_measure: false,
            new_name: None,
            theorem_name: None,
            must_simplify: true,
            theory: None,
            enable: Vec::new(),
            disable: Vec::new(),
            untranslate: UntranslateMode::Directed,
            show_only: false,
            print_def: true,
            assume_obligations: false,
        }
    }
}

impl Options {
    /// Parse the keyword/value tail of a simplify-defun event.
    pub fn parse(args: &[SExpr]) -> Result<Options> {
        if args.len() % 2 != 0 {
            return Err(Error::Transform(
                "options must be keyword/value pairs".into(),
            ));
        }
        let mut opts = Options::default();
        let mut seen = BTreeSet::new();
        for pair in args.chunks(2) {
            let key = pair[0]
                .as_sym()
                .filter(|s| s.starts_with(':'))
                .ok_or_else(|| Error::Transform(format!("expected an option keyword: {}", pair[0])))?;
            if !seen.insert(key.to_string()) {
                return Err(Error::Transform(format!("duplicate option {key}")));
            }
            let val = &pair[1];
            match key {
                ":ASSUMPTIONS" => {
                    opts.assumptions = if val.is_sym(":GUARD") {
                        AssumptionSpec::Guard
                    } else {
                        let items = val.as_list().ok_or_else(|| {
                            Error::Transform(
                                ":assumptions takes :guard or a list of terms".into(),
                            )
                        })?;
                        AssumptionSpec::Terms(items.to_vec())
                    };
                }
                ":SIMPLIFY-BODY" => {
                    if val.is_sym("NIL") {
                        return Err(Error::Transform(
                            ":simplify-body nil is not supported; the body is always simplified"
                                .into(),
                        ));
                    }
                    if !val.is_sym("T") {
                        opts.simplify_body = Some(val.clone());
                    }
                }
                ":ENABLE" => opts.enable = parse_rune_list(val)?,
                ":DISABLE" => opts.disable = parse_rune_list(val)?,
                ":THEORY" => opts.theory = Some(parse_rune_list(val)?),
                ":NEW-NAME" => opts.new_name = Some(symbol_value(key, val)?),
                ":THEOREM-NAME" => opts.theorem_name = Some(symbol_value(key, val)?),
                ":MUST-SIMPLIFY" => opts.must_simplify = bool_value(key, val)?,
                ":UNTRANSLATE" => {
                    let mode = val
                        .as_sym()
                        .map(|s| s.trim_start_matches(':'))
                        .unwrap_or("");
                    opts.untranslate = match mode {
                        "DIRECTED" => UntranslateMode::Directed,
                        "PLAIN" => UntranslateMode::Plain,
                        "RAW" => UntranslateMode::Raw,
                        _ => {
                            return Err(Error::Transform(format!(
                                ":untranslate must be directed, plain, or raw, not {val}"
                            )))
                        }
                    };
                }
                ":SHOW-ONLY" => opts.show_only = bool_value(key, val)?,
                ":PRINT-DEF" => opts.print_def = bool_value(key, val)?,
                other => {
                    return Err(Error::Transform(format!("unsupported option {other}")));
                }
            }
        }
        Ok(opts)
    }

    /// Stable fingerprint of the options, for certificate headers.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical_text().as_bytes());
        let out = h.finalize();
        out[..8].iter().map(|b| format!("{b:02X}")).collect()
    }

    fn canonical_text(&self) -> String {
        let assumptions = match &self.assumptions {
            AssumptionSpec::None => "NIL".to_string(),
            AssumptionSpec::Guard => ":GUARD".to_string(),
            AssumptionSpec::Terms(ts) => {
                SExpr::list(ts.clone()).to_string()
            }
        };
        let runes = |rs: &[Rune]| {
            SExpr::list(rs.iter().map(|r| r.to_sexpr()).collect::<Vec<_>>()).to_string()
        };
        format!(
            "(:ASSUMPTIONS {assumptions} :SIMPLIFY-BODY {} :SIMPLIFY-GUARD {} \
             :SIMPLIFY-MEASURE {} :NEW-NAME {} :THEOREM-NAME {} :MUST-SIMPLIFY {} \
             :THEORY {} :ENABLE {} :DISABLE {} :UNTRANSLATE {:?} :SHOW-ONLY {} \
             :ASSUME-OBLIGATIONS {})",
            self.simplify_body
                .as_ref()
                .map(|p| p.to_string())
                .unwrap_or_else(|| "NIL".into()),
            self.simplify_guard,
            self.simplify_measure,
            self.new_name.as_deref().unwrap_or("NIL"),
            self.theorem_name.as_deref().unwrap_or("NIL"),
            self.must_simplify,
            self.theory.as_deref().map(runes).unwrap_or_else(|| "NIL".into()),
            runes(&self.enable),
            runes(&self.disable),
            self.untranslate,
            self.show_only,
            self.assume_obligations,
        )
    }
}

fn parse_rune_list(val: &SExpr) -> Result<Vec<Rune>> {
    match val.as_list() {
        Some(items) => items.iter().map(Rune::from_theory_item).collect(),
        None => Ok(vec![Rune::from_theory_item(val)?]),
    }
}

fn symbol_value(key: &str, val: &SExpr) -> Result<String> {
    val.as_sym()
        .map(str::to_string)
        .ok_or_else(|| Error::Transform(format!("{key} takes a symbol, not {val}")))
}

fn bool_value(key: &str, val: &SExpr) -> Result<bool> {
    if val.is_sym("T") {
        Ok(true)
    } else if val.is_sym("NIL") {
        Ok(false)
    } else {
        Err(Error::Transform(format!("{key} takes t or nil, not {val}")))
    }
}

// ---------------------------------------------------------------------------
// Numbered names
// ---------------------------------------------------------------------------

/// Split `ROOT{n}` into root and index; names without the suffix get None.
pub fn parse_numbered_name(name: &str) -> (&str, Option<u64>) {
    if let Some(stripped) = name.strip_suffix('}') {
        if let Some(brace) = stripped.rfind('{') {
            if let Ok(n) = stripped[brace + 1..].parse::<u64>() {
                return (&name[..brace], Some(n));
            }
        }
    }
    (name, None)
}

pub fn format_numbered_name(root: &str, k: u64) -> String {
    format!("{root}{{{k}}}")
}

/// The next free numbered variant: `base` → `base{k}` for the least unused
/// k ≥ 1, and `root{n}` → `root{k}` for the least unused k > n.
pub fn next_numbered_name(world: &World, base: &str) -> String {
    next_name_avoiding(world, base, &BTreeSet::new())
}

fn next_name_avoiding(world: &World, base: &str, taken: &BTreeSet<String>) -> String {
    let (root, floor) = parse_numbered_name(base);
    let mut k = floor.unwrap_or(0) + 1;
    loop {
        let cand = format_numbered_name(root, k);
        if !world.contains(&cand) && !taken.contains(&cand) {
            return cand;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// Renaming and governors
// ---------------------------------------------------------------------------

/// Swap call heads per the map; variables and constants are untouched.
pub fn rename_calls(t: &Term, map: &BTreeMap<String, String>) -> Term {
    match t {
        Term::Var(_) | Term::Const(_) => t.clone(),
        Term::App(h, args) => Term::App(
            map.get(h).cloned().unwrap_or_else(|| h.clone()),
            args.iter().map(|a| rename_calls(a, map)).collect(),
        ),
    }
}

/// Tests (or their negations) of the if-nodes on the path to `pos`, in
/// root-to-leaf order.
pub fn collect_governors(body: &Term, pos: &Position) -> Result<Vec<Term>> {
    path_governors(body, pos)
}

// ---------------------------------------------------------------------------
// Preserved-hypotheses obligations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Obligation {
    pub governors: Vec<Term>,
    /// The recursive call being justified.
    pub call: Term,
    /// `(implies (and hyps ...governors) hyps-at-call-args)`.
    pub statement: Term,
    /// Rewrite of the statement to 'T; None means it was assumed.
    pub discharge: Option<Trace>,
}

/// One obligation per recursive (clique) call in `body`: under the
/// hypotheses and the call's governors, the hypotheses hold again at the
/// call's arguments. `hyps` is stated over the definition's formals.
pub fn hyps_preserved_obligations(
    defn: &Definition,
    hyps: &Term,
    body: &Term,
) -> Result<Vec<Obligation>> {
    let formals: BTreeSet<String> = defn.formals.iter().cloned().collect();
    for v in hyps.free_vars() {
        if !formals.contains(&v) {
            return Err(Error::Transform(format!(
                "assumption variable {v} is not a formal of {}",
                defn.name
            )));
        }
    }
    let clique: BTreeSet<String> = defn.clique.iter().cloned().collect();
    let mut calls = Vec::new();
    collect_calls(body, &clique, &mut Vec::new(), &mut calls);

    let mut out = Vec::new();
    for (pos, call) in calls {
        let Term::App(_, args) = &call else {
            unreachable!("collected calls are applications")
        };
        if args.len() != defn.formals.len() {
            return Err(Error::Transform(format!(
                "assumptions over a clique with mixed signatures are not supported ({})",
                defn.name
            )));
        }
        let subst: BTreeMap<String, Term> = defn
            .formals
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .collect();
        let governors = path_governors(body, &pos)?;
        let mut ante = vec![hyps.clone()];
        ante.extend(governors.iter().cloned());
        let statement = Term::App(
            "IMPLIES".into(),
            vec![make_conjunction(ante), hyps.substitute(&subst)],
        );
        out.push(Obligation {
            governors,
            call,
            statement,
            discharge: None,
        });
    }
    Ok(out)
}

fn collect_calls(
    t: &Term,
    clique: &BTreeSet<String>,
    here: &mut Position,
    out: &mut Vec<(Position, Term)>,
) {
    if let Term::App(h, args) = t {
        if clique.contains(h) {
            out.push((here.clone(), t.clone()));
        }
        for (i, a) in args.iter().enumerate() {
            here.push(i);
            collect_calls(a, clique, here, out);
            here.pop();
        }
    }
}

// ---------------------------------------------------------------------------
// The transform
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct MemberResult {
    pub old_name: String,
    pub new_name: String,
    pub theorem_name: String,
    /// Site positions in the old translated body with their rewrites.
    pub site_traces: Vec<(Position, Trace)>,
    /// Whole body after splicing in the rewritten sites, before renaming.
    pub simplified_body: Term,
    pub becomes: Term,
}

#[derive(Debug, Clone)]
pub struct TransformRecord {
    pub members: Vec<MemberResult>,
    /// Resolved assumption conjuncts; empty when no assumptions were given.
    pub hyps_terms: Vec<Term>,
    /// The materialized hypotheses function, when assumptions were given.
    pub hyps_fn: Option<Definition>,
    pub rename_map: BTreeMap<String, String>,
    pub new_definitions: Vec<Definition>,
    pub obligations: Vec<Obligation>,
    pub used_runes: Vec<Rune>,
    pub options_digest: String,
}

pub fn simplify_defun(
    world: &World,
    book: &RuleBook,
    fn_name: &str,
    opts: &Options,
    limits: &Limits,
) -> Result<(World, TransformRecord)> {
    simplify_defun_in(world, book, &ActiveTheory::default(), fn_name, opts, limits)
}

/// Like [`simplify_defun`], but layers the event options over an ambient
/// theory (the state built up by earlier in-theory events). An explicit
/// `:theory` replaces the ambient entirely.
pub fn simplify_defun_in(
    world: &World,
    book: &RuleBook,
    ambient: &ActiveTheory,
    fn_name: &str,
    opts: &Options,
    limits: &Limits,
) -> Result<(World, TransformRecord)> {
    let defn = world
        .get(fn_name)
        .ok_or_else(|| Error::Transform(format!("{fn_name} is not defined")))?;
    let members: Vec<Definition> = defn
        .clique
        .iter()
        .map(|n| world.get(n).expect("clique members are defined").clone())
        .collect();

    // 1. Assumptions.
    let hyps_terms = resolve_assumptions(world, defn, &opts.assumptions)?;
    if !hyps_terms.is_empty() && members.len() > 1 {
        return Err(Error::Transform(
            "assumptions are not supported over a mutual-recursion clique".into(),
        ));
    }

    // Validate the option runes, then layer them over the ambient theory.
    let from_opts = theory_from(
        book,
        world,
        opts.theory.as_deref(),
        &opts.enable,
        &opts.disable,
    )?;
    let theory = if opts.theory.is_some() {
        from_opts
    } else {
        let mut t = ambient.clone();
        for r in &opts.enable {
            t.force_enable(r.clone());
        }
        for r in &opts.disable {
            t.force_disable(r.clone());
        }
        t
    };

    // 2-3. Sites and rewriting, per member.
    let mut used: BTreeSet<Rune> = BTreeSet::new();
    let mut simplified: Vec<(Definition, Vec<(Position, Trace)>, Term)> = Vec::new();
    for m in &members {
        let sites: Vec<Site> = match (&opts.simplify_body, m.name == fn_name) {
            (Some(pat_form), true) => {
                let pat = parse_pattern(pat_form, world)?;
                match_sites(&pat, &m.body)?
            }
            _ => vec![Site {
                position: Vec::new(),
                governors: Vec::new(),
            }],
        };
        let mut body = m.body.clone();
        let mut traces = Vec::new();
        for site in &sites {
            let sub = m
                .body
                .subterm_at(&site.position)
                .expect("site positions index the body")
                .clone();
            let mut ctx_terms = hyps_terms.clone();
            ctx_terms.extend(site.governors.iter().cloned());
            let ctx = Context::new(&ctx_terms, book);
            let out = rewrite(&sub, &ctx, book, &theory, world, limits);
            used.extend(out.used_runes.iter().cloned());
            body = body
                .replace_at(&site.position, out.term)
                .expect("site positions index the body");
            traces.push((site.position.clone(), out.trace));
        }
        simplified.push((m.clone(), traces, body));
    }

    // 4. Must-simplify.
    let changed = simplified
        .iter()
        .any(|(_, traces, _)| traces.iter().any(|(_, t)| !t.steps.is_empty()));
    if opts.must_simplify && !changed {
        return Err(Error::Transform("body did not simplify".into()));
    }

    // 5. New names for the whole clique.
    if let Some(n) = &opts.new_name {
        if world.contains(n) {
            return Err(Error::Transform(format!("new name {n} is already defined")));
        }
    }
    let mut taken = BTreeSet::new();
    let mut rename_map = BTreeMap::new();
    for m in &members {
        let new_name = match (&opts.new_name, m.name == fn_name) {
            (Some(n), true) => n.clone(),
            _ => next_name_avoiding(world, &m.name, &taken),
        };
        if taken.contains(&new_name) {
            return Err(Error::Transform(format!(
                "new name {new_name} assigned twice in the clique"
            )));
        }
        taken.insert(new_name.clone());
        rename_map.insert(m.name.clone(), new_name);
    }
    let new_clique: Vec<String> = members
        .iter()
        .map(|m| rename_map[&m.name].clone())
        .collect();

    // 6. Optional guard and measure simplification (never required to
    // change anything, never run under the assumptions).
    let mut new_definitions = Vec::new();
    let inverse: BTreeMap<String, String> =
        rename_map.iter().map(|(k, v)| (v.clone(), k.clone())).collect();
    // Untranslation re-translates its output as a self-check, which needs
    // the new names' arities known; stub them into a staging world.
    let mut staged = world.clone();
    for m in &members {
        staged = staged.insert(Definition {
            name: rename_map[&m.name].clone(),
            formals: m.formals.clone(),
            guard: None,
            guard_source: None,
            measure: None,
            measure_source: None,
            body: Term::nil(),
            source_body: SExpr::sym("NIL"),
            clique: new_clique.clone(),
        });
    }
    for (m, _, simp_body) in &simplified {
        let new_body = rename_calls(simp_body, &rename_map);
        assert_eq!(
            rename_calls(&new_body, &inverse),
            *simp_body,
            "renaming must invert to the simplified body"
        );
        let (guard, guard_source) = simplify_aux_term(
            m.guard.as_ref(),
            m.guard_source.as_ref(),
            opts.simplify_guard,
            book,
            &theory,
            world,
            limits,
        );
        let (measure, measure_source) = simplify_aux_term(
            m.measure.as_ref(),
            m.measure_source.as_ref(),
            opts.simplify_measure,
            book,
            &theory,
            world,
            limits,
        );
        let source_body = untranslate_body(opts.untranslate, &new_body, m, &staged);
        new_definitions.push(Definition {
            name: rename_map[&m.name].clone(),
            formals: m.formals.clone(),
            guard,
            guard_source,
            measure,
            measure_source,
            body: new_body,
            source_body,
            clique: new_clique.clone(),
        });
    }

    // 7. Obligations, discharged by rewriting to 'T with the hypotheses
    // function unfoldable.
    let mut hyps_fn = None;
    let mut obligations = Vec::new();
    if !hyps_terms.is_empty() {
        let hyps_raw = make_conjunction(hyps_terms.clone());
        let hyps_name = next_hyps_name(world, fn_name);
        let hyps_defn = Definition {
            name: hyps_name.clone(),
            formals: defn.formals.clone(),
            guard: None,
            guard_source: None,
            measure: None,
            measure_source: None,
            body: hyps_raw.clone(),
            source_body: untranslate_plain(&hyps_raw),
            clique: vec![hyps_name.clone()],
        };
        let world_h = world.insert(hyps_defn.clone());
        let mut book_h = book.clone();
        book_h.insert(RewriteRule::definition(
            &hyps_name,
            &defn.formals,
            hyps_raw,
            0,
        ))?;
        let mut theory_h = theory.clone();
        theory_h.force_enable(Rune::Definition(hyps_name.clone()));

        let hyps_call = Term::App(
            hyps_name.clone(),
            defn.formals.iter().map(|f| Term::Var(f.clone())).collect(),
        );
        let (_, _, simp_body) = &simplified[members
            .iter()
            .position(|m| m.name == fn_name)
            .expect("the named function is a member")];
        obligations = hyps_preserved_obligations(defn, &hyps_call, simp_body)?;
        for ob in &mut obligations {
            let out = rewrite(
                &ob.statement,
                &Context::empty(),
                &book_h,
                &theory_h,
                &world_h,
                limits,
            );
            if out.term.is_const_t() {
                used.extend(out.used_runes.iter().cloned());
                ob.discharge = Some(out.trace);
            } else if !opts.assume_obligations {
                return Err(Error::Transform(format!(
                    "could not establish that the assumptions are preserved by {}",
                    untranslate_plain(&ob.call)
                )));
            }
        }
        hyps_fn = Some(hyps_defn);
    }

    // 8. Becomes statements and the record.
    if let Some(thm) = &opts.theorem_name {
        if book.contains(&Rune::Rewrite(thm.clone())) {
            return Err(Error::Transform(format!(
                "theorem name {thm} is already in use"
            )));
        }
    }
    let hyps_raw = (!hyps_terms.is_empty()).then(|| make_conjunction(hyps_terms.clone()));
    let mut results = Vec::new();
    for (m, traces, simp_body) in simplified {
        let new_name = rename_map[&m.name].clone();
        let formals: Vec<Term> = m.formals.iter().map(|f| Term::Var(f.clone())).collect();
        let eq = Term::App(
            "EQUAL".into(),
            vec![
                Term::App(m.name.clone(), formals.clone()),
                Term::App(new_name.clone(), formals),
            ],
        );
        let becomes = match &hyps_raw {
            Some(h) => Term::App("IMPLIES".into(), vec![h.clone(), eq]),
            None => eq,
        };
        let theorem_name = match (&opts.theorem_name, m.name == fn_name) {
            (Some(t), true) => t.clone(),
            _ => format!("{}-BECOMES-{}", m.name, new_name),
        };
        results.push(MemberResult {
            old_name: m.name.clone(),
            new_name,
            theorem_name,
            site_traces: traces,
            simplified_body: simp_body,
            becomes,
        });
    }

    let record = TransformRecord {
        members: results,
        hyps_terms,
        hyps_fn: hyps_fn.clone(),
        rename_map,
        new_definitions: new_definitions.clone(),
        obligations,
        used_runes: used.into_iter().collect(),
        options_digest: opts.digest(),
    };

    // 9. World extension.
    let world_out = if opts.show_only {
        world.clone()
    } else {
        let mut w = world.clone();
        if let Some(h) = hyps_fn {
            w = w.insert(h);
        }
        for d in new_definitions {
            w = w.insert(d);
        }
        w
    };
    Ok((world_out, record))
}

fn resolve_assumptions(
    world: &World,
    defn: &Definition,
    spec: &AssumptionSpec,
) -> Result<Vec<Term>> {
    let terms = match spec {
        AssumptionSpec::None => Vec::new(),
        AssumptionSpec::Guard => defn
            .guard
            .as_ref()
            .map(conjuncts)
            .unwrap_or_default(),
        AssumptionSpec::Terms(forms) => {
            let mut out = Vec::new();
            for f in forms {
                let t = translate(f, VarPolicy::AutoBind, world)?;
                out.extend(conjuncts(&t));
            }
            out
        }
    };
    let formals: BTreeSet<String> = defn.formals.iter().cloned().collect();
    for t in &terms {
        for v in t.free_vars() {
            if !formals.contains(&v) {
                return Err(Error::Transform(format!(
                    "assumption variable {v} is not a formal of {}",
                    defn.name
                )));
            }
        }
    }
    Ok(terms)
}

fn next_hyps_name(world: &World, fn_name: &str) -> String {
    let base = format!("{fn_name}-HYPS");
    if world.contains(&base) {
        next_numbered_name(world, &base)
    } else {
        base
    }
}

#[allow(clippy::too_many_arguments)]
fn simplify_aux_term(
    term: Option<&Term>,
    source: Option<&SExpr>,
    simplify: bool,
    book: &RuleBook,
    theory: &crate::rules::ActiveTheory,
    world: &World,
    limits: &Limits,
) -> (Option<Term>, Option<SExpr>) {
    match (term, simplify) {
        (Some(t), true) => {
            let out = rewrite(t, &Context::empty(), book, theory, world, limits);
            let src = untranslate_plain(&out.term);
            (Some(out.term), Some(src))
        }
        _ => (term.cloned(), source.cloned()),
    }
}

/// The printed body of a new definition under the requested mode.
fn untranslate_body(
    mode: UntranslateMode,
    new_body: &Term,
    old: &Definition,
    world: &World,
) -> SExpr {
    match mode {
        UntranslateMode::Directed => {
            directed_untranslate(new_body, &old.body, &old.source_body, world)
        }
        UntranslateMode::Plain => untranslate_plain(new_body),
        UntranslateMode::Raw => new_body.to_sexpr(),
    }
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

/// `(DEFUN name (formals) body)`, matching the transcript convention of
/// leaving declare forms out of printed definitions.
pub fn definition_form(d: &Definition) -> SExpr {
    SExpr::list(vec![
        SExpr::sym("DEFUN"),
        SExpr::sym(&d.name),
        SExpr::list(d.formals.iter().map(|f| SExpr::sym(f)).collect::<Vec<_>>()),
        d.source_body.clone(),
    ])
}

/// The whole new event: a lone defun, or the clique's mutual-recursion.
pub fn new_event_form(defs: &[Definition]) -> SExpr {
    if defs.len() == 1 {
        definition_form(&defs[0])
    } else {
        let mut items = vec![SExpr::sym("MUTUAL-RECURSION")];
        items.extend(defs.iter().map(definition_form));
        SExpr::list(items)
    }
}

/// `(DEFTHM name becomes-statement)`.
pub fn becomes_form(m: &MemberResult) -> SExpr {
    SExpr::list(vec![
        SExpr::sym("DEFTHM"),
        SExpr::sym(&m.theorem_name),
        untranslate_plain(&m.becomes),
    ])
}
