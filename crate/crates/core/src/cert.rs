//! Certificates: the serialized, independently checkable record of one
//! transformation.
//!
//! A certificate holds every trace, the rename map, the obligations, and
//! the equivalence statements. The checker replays it against the world as
//! it stood before the transformation, using only pointwise rule
//! application, ground evaluation, and context membership; it never runs
//! the rewriter's search. Differential testing then compares old and new
//! functions on generated inputs as a statistical backstop for the parts
//! replay cannot reach (the induction behind each becomes statement).

use crate::error::{Error, Result};
use crate::eval::{eval_term, gen_bindings, Bindings, EvalResult, DEFAULT_EVAL_FUEL};
use crate::rewrite::{
    apply_rule_at, branch_extension, path_governors, Context, HypProof, Trace, TraceStep,
};
use crate::rules::{RewriteRule, RuleBook, Rune};
use crate::sexpr::{parse_sexpr, SExpr};
use crate::term::{make_conjunction, translate, Position, Term, VarPolicy};
use crate::transform::{hyps_preserved_obligations, Obligation, TransformRecord};
use crate::world::{Definition, World};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub version: Vec<u64>,
    pub old_names: Vec<String>,
    pub new_names: Vec<String>,
    pub options_digest: String,
    /// Resolved assumption conjuncts (empty without assumptions).
    pub assumptions: Vec<Term>,
    /// Materialized hypotheses function: name, formals, body.
    pub hyps_fn: Option<(String, Vec<String>, Term)>,
    /// Per clique member, in order: rewrites at each site position.
    pub site_traces: Vec<Vec<(Position, Trace)>>,
    /// Per member: the whole body after splicing, before renaming.
    pub simplified: Vec<Term>,
    pub rename: BTreeMap<String, String>,
    /// Printed sources of the new definitions, one defun form per member.
    pub definitions: Vec<SExpr>,
    pub obligations: Vec<CertObligation>,
    /// Per member: theorem name and the equivalence statement.
    pub becomes: Vec<(String, Term)>,
    pub used_runes: Vec<Rune>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertObligation {
    pub governors: Vec<Term>,
    pub call: Term,
    pub statement: Term,
    /// None means the obligation was assumed rather than discharged.
    pub discharge: Option<Trace>,
}

pub fn build_certificate(record: &TransformRecord) -> Certificate {
    let version = env!("CARGO_PKG_VERSION")
        .split('.')
        .map(|p| p.parse().unwrap_or(0))
        .collect();
    Certificate {
        version,
        old_names: record.members.iter().map(|m| m.old_name.clone()).collect(),
        new_names: record.members.iter().map(|m| m.new_name.clone()).collect(),
        options_digest: record.options_digest.clone(),
        assumptions: record.hyps_terms.clone(),
        hyps_fn: record
            .hyps_fn
            .as_ref()
            .map(|d| (d.name.clone(), d.formals.clone(), d.body.clone())),
        site_traces: record
            .members
            .iter()
            .map(|m| m.site_traces.clone())
            .collect(),
        simplified: record
            .members
            .iter()
            .map(|m| m.simplified_body.clone())
            .collect(),
        rename: record.rename_map.clone(),
        definitions: record
            .new_definitions
            .iter()
            .map(crate::transform::definition_form)
            .collect(),
        obligations: record
            .obligations
            .iter()
            .map(|o: &Obligation| CertObligation {
                governors: o.governors.clone(),
                call: o.call.clone(),
                statement: o.statement.clone(),
                discharge: o.discharge.clone(),
            })
            .collect(),
        becomes: record
            .members
            .iter()
            .map(|m| (m.theorem_name.clone(), m.becomes.clone()))
            .collect(),
        used_runes: record.used_runes.clone(),
    }
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn tagged(tag: &str, mut rest: Vec<SExpr>) -> SExpr {
    let mut items = vec![SExpr::sym(tag)];
    items.append(&mut rest);
    SExpr::List(items)
}

fn position_sexpr(pos: &Position) -> SExpr {
    tagged(
        "POSITION",
        pos.iter().map(|&i| SExpr::int(i as i64)).collect(),
    )
}

fn hyp_proof_sexpr(p: &HypProof) -> SExpr {
    match p {
        HypProof::InContext(t) => tagged("IN-CONTEXT", vec![t.to_sexpr()]),
        HypProof::Rewrite(tr) => tagged("BACKCHAIN", vec![trace_sexpr(tr)]),
    }
}

fn step_sexpr(s: &TraceStep) -> SExpr {
    tagged(
        "STEP",
        vec![
            position_sexpr(&s.position),
            tagged("RUNE", vec![s.rune.to_sexpr()]),
            tagged(
                "SUBST",
                s.subst
                    .iter()
                    .map(|(v, t)| SExpr::list(vec![SExpr::sym(v), t.to_sexpr()]))
                    .collect(),
            ),
            tagged("HYPS", s.hyp_proofs.iter().map(hyp_proof_sexpr).collect()),
            tagged("BEFORE", vec![s.before.to_sexpr()]),
            tagged("AFTER", vec![s.after.to_sexpr()]),
        ],
    )
}

fn trace_sexpr(t: &Trace) -> SExpr {
    tagged(
        "TRACE",
        vec![
            tagged("INITIAL", vec![t.initial.to_sexpr()]),
            tagged("STEPS", t.steps.iter().map(step_sexpr).collect()),
            tagged("FINAL", vec![t.final_term.to_sexpr()]),
            tagged(
                "LIMIT",
                vec![SExpr::sym(if t.limit_hit { "T" } else { "NIL" })],
            ),
        ],
    )
}

impl Certificate {
    pub fn to_sexpr(&self) -> SExpr {
        let header = tagged(
            "HEADER",
            vec![
                tagged(
                    "VERSION",
                    self.version.iter().map(|&v| SExpr::int(v as i64)).collect(),
                ),
                tagged("OLD", self.old_names.iter().map(|n| SExpr::sym(n)).collect()),
                tagged("NEW", self.new_names.iter().map(|n| SExpr::sym(n)).collect()),
                tagged("OPTIONS", vec![SExpr::sym(&self.options_digest)]),
            ],
        );
        let assumptions = tagged(
            "ASSUMPTIONS",
            vec![
                tagged(
                    "TERMS",
                    self.assumptions.iter().map(Term::to_sexpr).collect(),
                ),
                tagged(
                    "HYPS-FN",
                    match &self.hyps_fn {
                        None => vec![SExpr::sym("NIL")],
                        Some((name, formals, body)) => vec![
                            SExpr::sym(name),
                            SExpr::list(formals.iter().map(|f| SExpr::sym(f)).collect()),
                            body.to_sexpr(),
                        ],
                    },
                ),
            ],
        );
        let sites = tagged(
            "SITES",
            self.old_names
                .iter()
                .zip(&self.site_traces)
                .map(|(name, traces)| {
                    let mut items = vec![SExpr::sym(name)];
                    items.extend(traces.iter().map(|(pos, tr)| {
                        tagged("SITE", vec![position_sexpr(pos), trace_sexpr(tr)])
                    }));
                    tagged("MEMBER", items)
                })
                .collect(),
        );
        let simplified = tagged(
            "SIMPLIFIED",
            self.old_names
                .iter()
                .zip(&self.simplified)
                .map(|(name, t)| tagged("MEMBER", vec![SExpr::sym(name), t.to_sexpr()]))
                .collect(),
        );
        let rename = tagged(
            "RENAME",
            self.rename
                .iter()
                .map(|(o, n)| SExpr::list(vec![SExpr::sym(o), SExpr::sym(n)]))
                .collect(),
        );
        let definitions = tagged("DEFINITIONS", self.definitions.clone());
        let obligations = tagged(
            "OBLIGATIONS",
            self.obligations
                .iter()
                .map(|o| {
                    tagged(
                        "OBLIGATION",
                        vec![
                            tagged("GOVERNORS", o.governors.iter().map(Term::to_sexpr).collect()),
                            tagged("CALL", vec![o.call.to_sexpr()]),
                            tagged("STATEMENT", vec![o.statement.to_sexpr()]),
                            tagged(
                                "DISCHARGE",
                                vec![match &o.discharge {
                                    Some(tr) => trace_sexpr(tr),
                                    None => SExpr::sym(":ASSUMED"),
                                }],
                            ),
                        ],
                    )
                })
                .collect(),
        );
        let becomes = tagged(
            "BECOMES",
            self.becomes
                .iter()
                .map(|(name, t)| {
                    SExpr::list(vec![SExpr::sym("DEFTHM"), SExpr::sym(name), t.to_sexpr()])
                })
                .collect(),
        );
        let runes = tagged("RUNES", self.used_runes.iter().map(Rune::to_sexpr).collect());
        tagged(
            "CERTIFICATE",
            vec![
                header,
                assumptions,
                sites,
                simplified,
                rename,
                definitions,
                obligations,
                becomes,
                runes,
            ],
        )
    }

    /// Deterministic text form: one section per line, so identical records
    /// serialize to identical bytes.
    pub fn to_text(&self) -> String {
        let SExpr::List(items) = self.to_sexpr() else {
            unreachable!("certificates serialize as lists")
        };
        let mut out = String::from("(");
        out.push_str(&items[0].to_string());
        for section in &items[1..] {
            out.push('\n');
            out.push(' ');
            out.push_str(&section.to_string());
        }
        out.push_str(")\n");
        out
    }

    pub fn parse(text: &str) -> Result<Certificate> {
        let form = parse_sexpr(text)?;
        Certificate::from_sexpr(&form)
    }

    pub fn from_sexpr(form: &SExpr) -> Result<Certificate> {
        let items = expect_tagged(form, "CERTIFICATE")?;
        if items.len() != 9 {
            return Err(bad("certificate must have exactly nine sections"));
        }

        let header = expect_tagged(&items[0], "HEADER")?;
        if header.len() != 4 {
            return Err(bad("header must have four entries"));
        }
        let version = expect_tagged(&header[0], "VERSION")?
            .iter()
            .map(parse_index)
            .collect::<Result<Vec<u64>>>()?;
        let old_names = symbol_list(expect_tagged(&header[1], "OLD")?)?;
        let new_names = symbol_list(expect_tagged(&header[2], "NEW")?)?;
        let options = expect_tagged(&header[3], "OPTIONS")?;
        let options_digest = one_symbol(options, "OPTIONS")?;

        let assumptions_sec = expect_tagged(&items[1], "ASSUMPTIONS")?;
        if assumptions_sec.len() != 2 {
            return Err(bad("assumptions section must have terms and hyps-fn"));
        }
        let assumptions = expect_tagged(&assumptions_sec[0], "TERMS")?
            .iter()
            .map(Term::from_sexpr)
            .collect::<Result<Vec<Term>>>()?;
        let hyps_fn_items = expect_tagged(&assumptions_sec[1], "HYPS-FN")?;
        let hyps_fn = match hyps_fn_items {
            [single] if single.is_sym("NIL") => None,
            [name, formals, body] => Some((
                symbol(name)?,
                symbol_list(formals.as_list().ok_or_else(|| bad("hyps-fn formals"))?)?,
                Term::from_sexpr(body)?,
            )),
            _ => return Err(bad("hyps-fn must be NIL or name/formals/body")),
        };

        let sites_sec = expect_tagged(&items[2], "SITES")?;
        let mut site_traces = Vec::new();
        for (i, member) in sites_sec.iter().enumerate() {
            let m = expect_tagged(member, "MEMBER")?;
            let name = symbol(m.first().ok_or_else(|| bad("empty sites member"))?)?;
            if old_names.get(i) != Some(&name) {
                return Err(bad("sites members must follow the header order"));
            }
            let mut traces = Vec::new();
            for site in &m[1..] {
                let s = expect_tagged(site, "SITE")?;
                if s.len() != 2 {
                    return Err(bad("site must have a position and a trace"));
                }
                traces.push((parse_position(&s[0])?, parse_trace(&s[1])?));
            }
            site_traces.push(traces);
        }

        let simp_sec = expect_tagged(&items[3], "SIMPLIFIED")?;
        let mut simplified = Vec::new();
        for (i, member) in simp_sec.iter().enumerate() {
            let m = expect_tagged(member, "MEMBER")?;
            if m.len() != 2 || old_names.get(i) != Some(&symbol(&m[0])?) {
                return Err(bad("simplified members must follow the header order"));
            }
            simplified.push(Term::from_sexpr(&m[1])?);
        }

        let rename_sec = expect_tagged(&items[4], "RENAME")?;
        let mut rename = BTreeMap::new();
        for pair in rename_sec {
            let p = pair.as_list().ok_or_else(|| bad("rename pair"))?;
            if p.len() != 2 {
                return Err(bad("rename pair must have two names"));
            }
            if rename.insert(symbol(&p[0])?, symbol(&p[1])?).is_some() {
                return Err(bad("duplicate rename entry"));
            }
        }

        let definitions = expect_tagged(&items[5], "DEFINITIONS")?.to_vec();

        let obligations_sec = expect_tagged(&items[6], "OBLIGATIONS")?;
        let mut obligations = Vec::new();
        for ob in obligations_sec {
            let o = expect_tagged(ob, "OBLIGATION")?;
            if o.len() != 4 {
                return Err(bad("obligation must have four entries"));
            }
            let governors = expect_tagged(&o[0], "GOVERNORS")?
                .iter()
                .map(Term::from_sexpr)
                .collect::<Result<Vec<Term>>>()?;
            let call = Term::from_sexpr(one(expect_tagged(&o[1], "CALL")?, "CALL")?)?;
            let statement =
                Term::from_sexpr(one(expect_tagged(&o[2], "STATEMENT")?, "STATEMENT")?)?;
            let d = one(expect_tagged(&o[3], "DISCHARGE")?, "DISCHARGE")?;
            let discharge = if d.is_sym(":ASSUMED") {
                None
            } else {
                Some(parse_trace(d)?)
            };
            obligations.push(CertObligation {
                governors,
                call,
                statement,
                discharge,
            });
        }

        let becomes_sec = expect_tagged(&items[7], "BECOMES")?;
        let mut becomes = Vec::new();
        for thm in becomes_sec {
            let t = thm.as_list().ok_or_else(|| bad("becomes entry"))?;
            if t.len() != 3 || !t[0].is_sym("DEFTHM") {
                return Err(bad("becomes entries are (DEFTHM name statement)"));
            }
            becomes.push((symbol(&t[1])?, Term::from_sexpr(&t[2])?));
        }

        let runes = expect_tagged(&items[8], "RUNES")?
            .iter()
            .map(Rune::from_sexpr)
            .collect::<Result<Vec<Rune>>>()?;

        Ok(Certificate {
            version,
            old_names,
            new_names,
            options_digest,
            assumptions,
            hyps_fn,
            site_traces,
            simplified,
            rename,
            definitions,
            obligations,
            becomes,
            used_runes: runes,
        })
    }
}

fn bad(msg: &str) -> Error {
    Error::Certificate(msg.to_string())
}

fn expect_tagged<'a>(form: &'a SExpr, tag: &str) -> Result<&'a [SExpr]> {
    form.as_list()
        .filter(|items| items.first().map(|h| h.is_sym(tag)).unwrap_or(false))
        .map(|items| &items[1..])
        .ok_or_else(|| bad(&format!("expected a ({tag} ...) form, got {form}")))
}

fn symbol(form: &SExpr) -> Result<String> {
    form.as_sym()
        .map(str::to_string)
        .ok_or_else(|| bad(&format!("expected a symbol, got {form}")))
}

fn symbol_list(items: &[SExpr]) -> Result<Vec<String>> {
    items.iter().map(symbol).collect()
}

fn one<'a>(items: &'a [SExpr], what: &str) -> Result<&'a SExpr> {
    match items {
        [single] => Ok(single),
        _ => Err(bad(&format!("{what} must hold exactly one form"))),
    }
}

fn one_symbol(items: &[SExpr], what: &str) -> Result<String> {
    symbol(one(items, what)?)
}

fn parse_index(form: &SExpr) -> Result<u64> {
    match form {
        SExpr::Int(n) => u64::try_from(n.clone()).map_err(|_| bad("index out of range")),
        _ => Err(bad(&format!("expected an index, got {form}"))),
    }
}

fn parse_position(form: &SExpr) -> Result<Position> {
    expect_tagged(form, "POSITION")?
        .iter()
        .map(|i| parse_index(i).map(|n| n as usize))
        .collect()
}

fn parse_trace(form: &SExpr) -> Result<Trace> {
    let items = expect_tagged(form, "TRACE")?;
    if items.len() != 4 {
        return Err(bad("trace must have initial, steps, final, limit"));
    }
    let initial = Term::from_sexpr(one(expect_tagged(&items[0], "INITIAL")?, "INITIAL")?)?;
    let steps = expect_tagged(&items[1], "STEPS")?
        .iter()
        .map(parse_step)
        .collect::<Result<Vec<TraceStep>>>()?;
    let final_term = Term::from_sexpr(one(expect_tagged(&items[2], "FINAL")?, "FINAL")?)?;
    let limit = one(expect_tagged(&items[3], "LIMIT")?, "LIMIT")?;
    let limit_hit = if limit.is_sym("T") {
        true
    } else if limit.is_sym("NIL") {
        false
    } else {
        return Err(bad("limit flag must be T or NIL"));
    };
    Ok(Trace {
        initial,
        steps,
        final_term,
        limit_hit,
    })
}

fn parse_step(form: &SExpr) -> Result<TraceStep> {
    let items = expect_tagged(form, "STEP")?;
    if items.len() != 6 {
        return Err(bad("step must have six entries"));
    }
    let position = parse_position(&items[0])?;
    let rune = Rune::from_sexpr(one(expect_tagged(&items[1], "RUNE")?, "RUNE")?)?;
    let mut subst = BTreeMap::new();
    for pair in expect_tagged(&items[2], "SUBST")? {
        let p = pair.as_list().ok_or_else(|| bad("subst pair"))?;
        if p.len() != 2 {
            return Err(bad("subst pairs bind one variable to one term"));
        }
        if subst.insert(symbol(&p[0])?, Term::from_sexpr(&p[1])?).is_some() {
            return Err(bad("duplicate variable in substitution"));
        }
    }
    let hyp_proofs = expect_tagged(&items[3], "HYPS")?
        .iter()
        .map(parse_hyp_proof)
        .collect::<Result<Vec<HypProof>>>()?;
    let before = Term::from_sexpr(one(expect_tagged(&items[4], "BEFORE")?, "BEFORE")?)?;
    let after = Term::from_sexpr(one(expect_tagged(&items[5], "AFTER")?, "AFTER")?)?;
    Ok(TraceStep {
        position,
        rune,
        subst,
        hyp_proofs,
        before,
        after,
    })
}

fn parse_hyp_proof(form: &SExpr) -> Result<HypProof> {
    if let Ok(items) = expect_tagged(form, "IN-CONTEXT") {
        return Ok(HypProof::InContext(Term::from_sexpr(one(
            items,
            "IN-CONTEXT",
        )?)?));
    }
    let items = expect_tagged(form, "BACKCHAIN")?;
    Ok(HypProof::Rewrite(parse_trace(one(items, "BACKCHAIN")?)?))
}

// ---------------------------------------------------------------------------
// Checking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub section: String,
    pub position: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, section: &str, position: usize, reason: impl Into<String>) {
        self.violations.push(Violation {
            section: section.to_string(),
            position,
            reason: reason.into(),
        });
    }
}

/// Check a certificate against the world as it stood before the
/// transformation and the rule book containing every cited rune.
pub fn check_certificate(
    world_before: &World,
    book: &RuleBook,
    cert: &Certificate,
) -> CheckReport {
    let mut report = CheckReport::default();

    // Freshness and structural consistency come first: everything later
    // leans on the names lining up.
    if cert.old_names.is_empty() || cert.old_names.len() != cert.new_names.len() {
        report.flag("header", 0, "old and new name lists must align");
        return report;
    }
    let mut fresh = BTreeSet::new();
    for (i, n) in cert.new_names.iter().enumerate() {
        if world_before.contains(n) {
            report.flag("header", i, format!("new name {n} already defined"));
        }
        if !fresh.insert(n.clone()) {
            report.flag("header", i, format!("new name {n} repeated"));
        }
    }
    for (i, n) in cert.old_names.iter().enumerate() {
        if !world_before.contains(n) {
            report.flag("header", i, format!("old name {n} is not defined"));
            return report;
        }
    }
    let clique = &world_before.get(&cert.old_names[0]).unwrap().clique;
    if clique != &cert.old_names {
        report.flag(
            "header",
            0,
            format!("old names must be the whole clique {clique:?}"),
        );
        return report;
    }
    let expected_rename: BTreeMap<String, String> = cert
        .old_names
        .iter()
        .cloned()
        .zip(cert.new_names.iter().cloned())
        .collect();
    if cert.rename != expected_rename {
        report.flag("rename", 0, "rename map must pair old names with new");
    }
    if cert.site_traces.len() != cert.old_names.len()
        || cert.simplified.len() != cert.old_names.len()
        || cert.definitions.len() != cert.old_names.len()
        || cert.becomes.len() != cert.old_names.len()
    {
        report.flag("header", 0, "per-member sections must cover the clique");
        return report;
    }

    // The hypotheses function is part of the certificate; synthesize its
    // unfolding rule and admit it so replay sees what the producer saw.
    let mut book_c = book.clone();
    let mut world_c = world_before.clone();
    if let Some((name, formals, body)) = &cert.hyps_fn {
        if world_before.contains(name) {
            report.flag("assumptions", 0, format!("hyps name {name} already defined"));
        }
        if !fresh.insert(name.clone()) {
            report.flag("assumptions", 0, format!("hyps name {name} collides"));
        }
        let expected_body = make_conjunction(cert.assumptions.clone());
        if *body != expected_body {
            report.flag(
                "assumptions",
                0,
                "hyps-fn body must be the conjunction of the assumptions",
            );
        }
        if let Err(e) = book_c.insert(RewriteRule::definition(name, formals, body.clone(), 0)) {
            report.flag("assumptions", 0, format!("unusable hyps-fn: {e}"));
            return report;
        }
        world_c = world_c.insert(Definition {
            name: name.clone(),
            formals: formals.clone(),
            guard: None,
            guard_source: None,
            measure: None,
            measure_source: None,
            body: body.clone(),
            source_body: body.to_sexpr(),
            clique: vec![name.clone()],
        });
    } else if !cert.assumptions.is_empty() {
        report.flag("assumptions", 0, "assumptions given without a hyps-fn");
        return report;
    }

    // Checks 1 and 2: replay each site trace and compose the results into
    // the recorded simplified body.
    for (mi, old_name) in cert.old_names.iter().enumerate() {
        let old_body = &world_before.get(old_name).unwrap().body;
        let mut body = old_body.clone();
        for (si, (pos, trace)) in cert.site_traces[mi].iter().enumerate() {
            let section = format!("sites[{old_name}]");
            let Some(site_sub) = body.subterm_at(pos) else {
                report.flag(&section, si, format!("position {pos:?} escapes the body"));
                continue;
            };
            if trace.initial != *site_sub {
                report.flag(&section, si, "trace initial is not the site subterm");
                continue;
            }
            let governors = match path_governors(old_body, pos) {
                Ok(g) => g,
                Err(e) => {
                    report.flag(&section, si, e.to_string());
                    continue;
                }
            };
            let mut base = cert.assumptions.clone();
            base.extend(governors);
            match replay_trace(trace, &base, &book_c, &world_c) {
                Ok(final_term) => {
                    body = body
                        .replace_at(pos, final_term)
                        .expect("position was just validated");
                }
                Err(reason) => report.flag(&section, si, reason),
            }
        }
        if body != cert.simplified[mi] {
            report.flag(
                "simplified",
                mi,
                format!("composed site traces do not yield the recorded body for {old_name}"),
            );
        }
    }

    // Check 3: the recorded new definitions, with the rename inverted,
    // must read back as exactly the simplified bodies.
    let inverse: BTreeMap<String, String> = cert
        .rename
        .iter()
        .map(|(o, n)| (n.clone(), o.clone()))
        .collect();
    let mut staged = world_c.clone();
    for (mi, old_name) in cert.old_names.iter().enumerate() {
        let old = world_before.get(old_name).unwrap();
        staged = staged.insert(Definition {
            name: cert.new_names[mi].clone(),
            formals: old.formals.clone(),
            guard: None,
            guard_source: None,
            measure: None,
            measure_source: None,
            body: Term::nil(),
            source_body: SExpr::sym("NIL"),
            clique: cert.new_names.clone(),
        });
    }
    for (mi, form) in cert.definitions.iter().enumerate() {
        let formals = &world_before.get(&cert.old_names[mi]).unwrap().formals;
        match parse_definition_source(form, &cert.new_names[mi], formals, &staged, mi) {
            Ok(new_body) => {
                let unrenamed = crate::transform::rename_calls(&new_body, &inverse);
                if unrenamed != cert.simplified[mi] {
                    report.flag(
                        "definitions",
                        mi,
                        "new body does not invert to the simplified body",
                    );
                }
            }
            Err(e) => report.flag("definitions", mi, e.to_string()),
        }
    }

    // Check 4: obligations. Their statements are recomputed from the
    // simplified body, and every discharge must replay to 'T.
    let expected_obligations = match &cert.hyps_fn {
        None => Vec::new(),
        Some((name, _, _)) => {
            let defn = world_before.get(&cert.old_names[0]).unwrap();
            if cert.old_names.len() > 1 {
                report.flag("obligations", 0, "assumptions over a clique are unsupported");
                return report;
            }
            let hyps_call = Term::App(
                name.clone(),
                defn.formals.iter().map(|f| Term::Var(f.clone())).collect(),
            );
            match hyps_preserved_obligations(defn, &hyps_call, &cert.simplified[0]) {
                Ok(obs) => obs,
                Err(e) => {
                    report.flag("obligations", 0, e.to_string());
                    return report;
                }
            }
        }
    };
    if expected_obligations.len() != cert.obligations.len() {
        report.flag(
            "obligations",
            0,
            format!(
                "expected {} obligations, certificate has {}",
                expected_obligations.len(),
                cert.obligations.len()
            ),
        );
    } else {
        for (oi, (expect, got)) in expected_obligations
            .iter()
            .zip(&cert.obligations)
            .enumerate()
        {
            if got.statement != expect.statement
                || got.call != expect.call
                || got.governors != expect.governors
            {
                report.flag("obligations", oi, "recorded obligation does not match the body");
                continue;
            }
            match &got.discharge {
                None => report
                    .warnings
                    .push(format!("obligation {oi} was assumed, not discharged")),
                Some(trace) => {
                    if trace.initial != got.statement {
                        report.flag("obligations", oi, "discharge does not start at the statement");
                        continue;
                    }
                    match replay_trace(trace, &[], &book_c, &world_c) {
                        Ok(final_term) => {
                            if !final_term.is_const_t() {
                                report.flag("obligations", oi, "discharge does not end in 'T");
                            }
                        }
                        Err(reason) => report.flag("obligations", oi, reason),
                    }
                }
            }
        }
    }

    // Check 5: becomes statements have exactly the expected shape.
    let hyps_conj = (!cert.assumptions.is_empty())
        .then(|| make_conjunction(cert.assumptions.clone()));
    for (mi, (thm_name, statement)) in cert.becomes.iter().enumerate() {
        let old = world_before.get(&cert.old_names[mi]).unwrap();
        let formals: Vec<Term> = old.formals.iter().map(|f| Term::Var(f.clone())).collect();
        let eq = Term::App(
            "EQUAL".into(),
            vec![
                Term::App(cert.old_names[mi].clone(), formals.clone()),
                Term::App(cert.new_names[mi].clone(), formals),
            ],
        );
        let expected = match &hyps_conj {
            Some(h) => Term::App("IMPLIES".into(), vec![h.clone(), eq]),
            None => eq,
        };
        if *statement != expected {
            report.flag("becomes", mi, format!("{thm_name} does not state the equivalence"));
        }
    }

    // The used-runes section must be exactly what the traces cite.
    let mut cited = BTreeSet::new();
    for traces in &cert.site_traces {
        for (_, t) in traces {
            t.collect_runes(&mut cited);
        }
    }
    for ob in &cert.obligations {
        if let Some(t) = &ob.discharge {
            t.collect_runes(&mut cited);
        }
    }
    let recorded: BTreeSet<Rune> = cert.used_runes.iter().cloned().collect();
    if cited != recorded || recorded.len() != cert.used_runes.len() {
        report.flag("runes", 0, "used-runes must list exactly the cited runes");
    }

    report
}

/// Re-translate a printed `(DEFUN name (formals) body)` against a staging
/// world that knows the new names.
fn parse_definition_source(
    form: &SExpr,
    expect_name: &str,
    expect_formals: &[String],
    staged: &World,
    member: usize,
) -> Result<Term> {
    let items = expect_tagged(form, "DEFUN")?;
    if items.len() != 3 {
        return Err(bad("printed definitions are (DEFUN name (formals) body)"));
    }
    let name = symbol(&items[0])?;
    if name != expect_name {
        return Err(bad(&format!("definition {member} must define {expect_name}")));
    }
    let formals = symbol_list(items[1].as_list().ok_or_else(|| bad("formals"))?)?;
    if formals != expect_formals {
        return Err(bad(&format!("definition {member} changes the formals")));
    }
    let bound: BTreeSet<String> = formals.iter().cloned().collect();
    translate(&items[2], VarPolicy::Bound(&bound), staged)
}

/// Replay one trace from its initial term, validating every step, and
/// return the term it produces. `base_ctx` holds the assumptions and
/// governors in force at the trace's root.
fn replay_trace(
    trace: &Trace,
    base_ctx: &[Term],
    book: &RuleBook,
    world: &World,
) -> std::result::Result<Term, String> {
    let mut cur = trace.initial.clone();
    for (i, step) in trace.steps.iter().enumerate() {
        let fail = |msg: String| Err(format!("step {i}: {msg}"));
        let Some(sub) = cur.subterm_at(&step.position) else {
            return fail(format!("position {:?} escapes the term", step.position));
        };
        if *sub != step.before {
            return fail("recorded before-term is stale".into());
        }
        match &step.rune {
            Rune::Rewrite(_) | Rune::Definition(_) => {
                let Some(rule) = book.get(&step.rune) else {
                    return fail(format!("unknown rune {}", step.rune));
                };
                if rule.hyps.len() != step.hyp_proofs.len() {
                    return fail("one proof per hypothesis is required".into());
                }
                let ctx = context_at(&cur, &step.position, base_ctx, book);
                for (hyp, proof) in rule.hyps.iter().zip(&step.hyp_proofs) {
                    let instance = hyp.substitute(&step.subst);
                    match proof {
                        HypProof::InContext(t) => {
                            if *t != instance {
                                return fail("context citation proves the wrong hypothesis".into());
                            }
                            if !ctx.contains(t) {
                                return fail(format!("{t} is not in the governing context"));
                            }
                        }
                        HypProof::Rewrite(subtrace) => {
                            if subtrace.initial != instance {
                                return fail("backchain starts at the wrong hypothesis".into());
                            }
                            let reduced =
                                replay_trace(subtrace, ctx.terms(), book, world)
                                    .map_err(|e| format!("step {i}: backchain {e}"))?;
                            if !reduced.is_const_t() {
                                return fail("backchain does not reach 'T".into());
                            }
                        }
                    }
                }
                match apply_rule_at(&cur, rule, &step.position, &step.subst) {
                    Ok(next) => {
                        let landed = next
                            .subterm_at(&step.position)
                            .expect("apply preserves positions");
                        if *landed != step.after {
                            return fail("recorded after-term is stale".into());
                        }
                        cur = next;
                    }
                    Err(e) => return fail(e.to_string()),
                }
            }
            Rune::Exec(fn_name) => {
                if !step.subst.is_empty() || !step.hyp_proofs.is_empty() {
                    return fail("evaluation steps carry no substitution".into());
                }
                if !valid_exec_step(fn_name, &step.before, &step.after, world) {
                    return fail(format!("invalid evaluation of {fn_name}"));
                }
                cur = cur
                    .replace_at(&step.position, step.after.clone())
                    .expect("position was just validated");
            }
        }
    }
    if cur != trace.final_term {
        return Err("recorded final term does not match the replay".to_string());
    }
    Ok(cur)
}

/// An Exec step is one of: a branch pick on a decided if, the collapse of
/// an implication with a settled side, or a ground call folded by the
/// evaluator.
fn valid_exec_step(fn_name: &str, before: &Term, after: &Term, world: &World) -> bool {
    if let Term::App(h, args) = before {
        if fn_name == "IF" && h == "IF" && args.len() == 3 {
            if let Term::Const(v) = &args[0] {
                let keep = if v.truthy() { &args[1] } else { &args[2] };
                return keep == after;
            }
            return false;
        }
        if h != fn_name {
            return false;
        }
        if h == "IMPLIES" && args.len() == 2 {
            let both_const = args.iter().all(|a| matches!(a, Term::Const(_)));
            let vacuous = matches!(&args[0], Term::Const(v) if !v.truthy());
            let settled = matches!(&args[1], Term::Const(v) if v.truthy());
            if !both_const && (vacuous || settled) {
                return after.is_const_t();
            }
            // Fall through: a fully constant implication is a ground call.
        }
        if h != "IF" && args.iter().all(|a| matches!(a, Term::Const(_))) {
            if let EvalResult::Value(v) =
                eval_term(world, before, &Bindings::new(), DEFAULT_EVAL_FUEL)
            {
                return *after == Term::Const(v);
            }
        }
    }
    false
}

/// The context in force at `pos` inside `cur`: the base terms plus the
/// branch conditions of every if/implies node crossed on the way down.
fn context_at(cur: &Term, pos: &Position, base: &[Term], book: &RuleBook) -> Context {
    let mut ctx = Context::new(base, book);
    let mut node = cur;
    for &idx in pos {
        let Term::App(h, args) = node else { break };
        let ext = branch_extension(h, args, idx);
        if !ext.is_empty() {
            ctx = ctx.extended(&ext, book);
        }
        node = &args[idx];
    }
    ctx
}

// ---------------------------------------------------------------------------
// Differential testing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffReport {
    /// Bindings actually generated (generation can starve on narrow
    /// hypotheses; compare with the requested sample count).
    pub completed: usize,
    pub mismatches: usize,
    pub out_of_fuel: usize,
    pub first_mismatch: Option<Bindings>,
}

/// Evaluate both sides of a becomes statement on generated inputs that
/// satisfy its hypothesis. Deterministic for a given seed.
pub fn differential_test(
    world_after: &World,
    becomes: &Term,
    samples: usize,
    fuel: u64,
    seed: u64,
) -> Result<DiffReport> {
    let (constraint, lhs, rhs) = split_becomes(becomes)?;
    let formals = call_formals(&lhs)?;
    let bindings = gen_bindings(&formals, constraint.as_ref(), world_after, seed, samples);

    #[derive(Clone, Copy, PartialEq)]
    enum Outcome {
        Agree,
        Mismatch,
        OutOfFuel,
    }
    let outcomes = crate::par::map_ordered(&bindings, |b| {
        let old = eval_term(world_after, &lhs, b, fuel);
        let new = eval_term(world_after, &rhs, b, fuel);
        match (&old, &new) {
            (EvalResult::OutOfFuel, _) | (_, EvalResult::OutOfFuel) => Outcome::OutOfFuel,
            (EvalResult::Value(a), EvalResult::Value(b)) if a == b => Outcome::Agree,
            _ => Outcome::Mismatch,
        }
    });

    let mismatches = outcomes.iter().filter(|o| **o == Outcome::Mismatch).count();
    let out_of_fuel = outcomes.iter().filter(|o| **o == Outcome::OutOfFuel).count();
    let first_mismatch = outcomes
        .iter()
        .position(|o| *o == Outcome::Mismatch)
        .map(|i| bindings[i].clone());
    Ok(DiffReport {
        completed: bindings.len(),
        mismatches,
        out_of_fuel,
        first_mismatch,
    })
}

/// Split `(implies hyps (equal old new))` or a bare equality.
fn split_becomes(becomes: &Term) -> Result<(Option<Term>, Term, Term)> {
    let (constraint, eq) = match becomes {
        Term::App(h, args) if h == "IMPLIES" && args.len() == 2 => {
            (Some(args[0].clone()), &args[1])
        }
        other => (None, other),
    };
    match eq {
        Term::App(h, args) if h == "EQUAL" && args.len() == 2 => {
            Ok((constraint, args[0].clone(), args[1].clone()))
        }
        _ => Err(bad("becomes statement is not an equality of two calls")),
    }
}

fn call_formals(call: &Term) -> Result<Vec<String>> {
    let Term::App(_, args) = call else {
        return Err(bad("becomes sides must be calls"));
    };
    let mut formals = Vec::new();
    for a in args {
        match a {
            Term::Var(v) => formals.push(v.clone()),
            _ => return Err(bad("becomes calls must be on plain formals")),
        }
    }
    Ok(formals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewrite::Limits;
    use crate::rules::base_book;
    use crate::transform::{simplify_defun, AssumptionSpec, Options};

    fn world_with(forms: &[&str]) -> World {
        let mut w = World::new();
        for f in forms {
            w = w.define(&parse_sexpr(f).unwrap()).unwrap();
        }
        w
    }

    fn f_world() -> World {
        world_with(&["(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))"])
    }

    fn foo_world() -> World {
        world_with(&[
            "(defun foo (x) (declare (xargs :guard (true-listp x))) (if (consp x) (foo (cdr x)) x))",
        ])
    }

    fn foo_book() -> RuleBook {
        let mut book = base_book();
        book.add_rule(
            "TRUE-LISTP-OF-CDR",
            &parse_sexpr("(implies (true-listp l) (equal (true-listp (cdr l)) t))").unwrap(),
            true,
            &World::new(),
        )
        .unwrap();
        book
    }

    fn transform(
        world: &World,
        book: &RuleBook,
        fn_name: &str,
        opts: &Options,
    ) -> (World, Certificate) {
        let (w2, rec) =
            simplify_defun(world, book, fn_name, opts, &Limits::default()).unwrap();
        (w2, build_certificate(&rec))
    }

    #[test]
    fn serialization_round_trips_and_is_deterministic() {
        let w = foo_world();
        let opts = Options {
            assumptions: AssumptionSpec::Guard,
            ..Options::default()
        };
        let (_, cert) = transform(&w, &foo_book(), "FOO", &opts);
        let text = cert.to_text();
        let parsed = Certificate::parse(&text).unwrap();
        assert_eq!(parsed, cert);
        assert_eq!(parsed.to_text(), text);
        assert!(text.contains("(HYPS-FN FOO-HYPS"));
        assert!(text.contains("OBLIGATION"));
    }

    #[test]
    fn pipeline_certificates_are_accepted() {
        let w = f_world();
        let (_, cert) = transform(&w, &base_book(), "F", &Options::default());
        let report = check_certificate(&w, &base_book(), &cert);
        assert!(report.accepted(), "{:?}", report.violations);
        assert!(report.warnings.is_empty());

        let w = foo_world();
        let opts = Options {
            assumptions: AssumptionSpec::Guard,
            ..Options::default()
        };
        let (_, cert) = transform(&w, &foo_book(), "FOO", &opts);
        let report = check_certificate(&w, &foo_book(), &cert);
        assert!(report.accepted(), "{:?}", report.violations);
    }

    #[test]
    fn clique_certificates_are_accepted() {
        let w = world_with(&[
            "(mutual-recursion
               (defun f1 (x) (if (consp x) (not (f2 (nth 0 x))) t))
               (defun f2 (x) (if (consp x) (f1 (nth 0 x)) t)))",
        ]);
        let (_, cert) = transform(&w, &base_book(), "F1", &Options::default());
        assert_eq!(cert.new_names, vec!["F1{1}", "F2{1}"]);
        let report = check_certificate(&w, &base_book(), &cert);
        assert!(report.accepted(), "{:?}", report.violations);
    }

    #[test]
    fn tampering_is_rejected() {
        let w = f_world();
        let (_, cert) = transform(&w, &base_book(), "F", &Options::default());

        // Wrong rune on a step.
        let mut bad_rune = cert.clone();
        bad_rune.site_traces[0][0].1.steps[0].rune = Rune::Rewrite("CAR-CONS".into());
        assert!(!check_certificate(&w, &base_book(), &bad_rune).accepted());

        // Wrong position.
        let mut bad_pos = cert.clone();
        bad_pos.site_traces[0][0].1.steps[0].position = vec![0];
        assert!(!check_certificate(&w, &base_book(), &bad_pos).accepted());

        // Wrong substitution.
        let mut bad_subst = cert.clone();
        let step = &mut bad_subst.site_traces[0][0].1.steps[0];
        if let Some(v) = step.subst.values_mut().next() {
            *v = Term::Var("Y".into());
        }
        assert!(!check_certificate(&w, &base_book(), &bad_subst).accepted());

        // Tampered rename map.
        let mut bad_rename = cert.clone();
        bad_rename.rename.insert("F".into(), "F{9}".into());
        assert!(!check_certificate(&w, &base_book(), &bad_rename).accepted());

        // Tampered final body.
        let mut bad_body = cert.clone();
        bad_body.simplified[0] = Term::nil();
        assert!(!check_certificate(&w, &base_book(), &bad_body).accepted());

        // The original still passes.
        assert!(check_certificate(&w, &base_book(), &cert).accepted());
    }

    #[test]
    fn vacuous_certificate_is_accepted() {
        // No steps, unchanged body: replay is trivial but must line up.
        let w = world_with(&["(defun id (x) (cons x x))"]);
        let opts = Options {
            must_simplify: false,
            ..Options::default()
        };
        let (_, cert) = transform(&w, &base_book(), "ID", &opts);
        assert!(cert.site_traces[0][0].1.steps.is_empty());
        let report = check_certificate(&w, &base_book(), &cert);
        assert!(report.accepted(), "{:?}", report.violations);
    }

    #[test]
    fn assumed_obligations_warn_but_verify() {
        let w = foo_world();
        let opts = Options {
            assumptions: AssumptionSpec::Guard,
            assume_obligations: true,
            ..Options::default()
        };
        // Base book lacks the cdr lemma, so the obligation is assumed.
        let (_, cert) = transform(&w, &base_book(), "FOO", &opts);
        assert!(cert.obligations[0].discharge.is_none());
        let report = check_certificate(&w, &base_book(), &cert);
        assert!(report.accepted(), "{:?}", report.violations);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn differential_agreement_and_planted_bug() {
        let w = f_world();
        let (w2, cert) = transform(&w, &base_book(), "F", &Options::default());
        let report =
            differential_test(&w2, &cert.becomes[0].1, 100, DEFAULT_EVAL_FUEL, 7).unwrap();
        assert_eq!(report.completed, 100);
        assert_eq!(report.mismatches, 0);

        // Same becomes statement, but the new function adds 3 instead of 2.
        let w_bug = w
            .define(
                &parse_sexpr("(defun f{1} (x) (if (zp x) 0 (+ 3 (f{1} (+ -1 x)))))").unwrap(),
            )
            .unwrap();
        let report = differential_test(&w_bug, &cert.becomes[0].1, 100, DEFAULT_EVAL_FUEL, 7)
            .unwrap();
        assert!(report.mismatches > 0);
        assert!(report.first_mismatch.is_some());
    }

    #[test]
    fn differential_respects_hypotheses() {
        let w = foo_world();
        let opts = Options {
            assumptions: AssumptionSpec::Guard,
            ..Options::default()
        };
        let (w2, cert) = transform(&w, &foo_book(), "FOO", &opts);
        let report =
            differential_test(&w2, &cert.becomes[0].1, 200, DEFAULT_EVAL_FUEL, 11).unwrap();
        assert_eq!(report.completed, 200);
        assert_eq!(report.mismatches, 0);

        let determinism =
            differential_test(&w2, &cert.becomes[0].1, 200, DEFAULT_EVAL_FUEL, 11).unwrap();
        assert_eq!(report, determinism);
    }
}
