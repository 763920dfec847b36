//! Book processing: a book is a file of event forms executed in order.
//! Definitions extend the world, theorems extend the rule book, in-theory
//! events adjust the ambient theory, and simplify-defun events run the
//! transformation, emit a certificate, and must pass the checker (plus a
//! differential test) before the world moves forward.

use crate::cert::{build_certificate, check_certificate, differential_test, Certificate};
use crate::error::{Error, Result};
use crate::eval::DEFAULT_EVAL_FUEL;
use crate::rewrite::Limits;
use crate::rules::{base_book, theory_from, ActiveTheory, RewriteRule, RuleBook, Rune};
use crate::sexpr::{parse_forms, SExpr};
use crate::transform::{new_event_form, simplify_defun_in, Options};
use crate::world::World;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub enum Event {
    /// A defun or mutual-recursion form, admitted verbatim.
    Define(SExpr),
    /// A defthm (enabled) or defthmd (disabled by default) rewrite rule.
    Theorem {
        name: String,
        body: SExpr,
        enabled: bool,
    },
    /// (in-theory (enable ...)) or (in-theory (disable ...)).
    InTheory {
        enable: Vec<Rune>,
        disable: Vec<Rune>,
    },
    SimplifyDefun {
        fn_name: String,
        opts: Options,
    },
}

pub fn parse_event(form: &SExpr) -> Result<Event> {
    let items = form
        .as_list()
        .ok_or_else(|| Error::Book(format!("event is not a list: {form}")))?;
    let head = items
        .first()
        .and_then(SExpr::as_sym)
        .ok_or_else(|| Error::Book(format!("event has no head symbol: {form}")))?;
    match head {
        "DEFUN" | "MUTUAL-RECURSION" => Ok(Event::Define(form.clone())),
        "DEFTHM" | "DEFTHMD" => {
            if items.len() != 3 {
                return Err(Error::Book(format!(
                    "{head} takes a name and one formula"
                )));
            }
            let name = items[1]
                .as_sym()
                .ok_or_else(|| Error::Book(format!("{head} name must be a symbol")))?;
            Ok(Event::Theorem {
                name: name.to_string(),
                body: items[2].clone(),
                enabled: head == "DEFTHM",
            })
        }
        "IN-THEORY" => {
            if items.len() != 2 {
                return Err(Error::Book("in-theory takes one adjustment form".into()));
            }
            let adj = items[1]
                .as_list()
                .ok_or_else(|| Error::Book("in-theory expects (enable ...) or (disable ...)".into()))?;
            let mode = adj.first().and_then(SExpr::as_sym).unwrap_or("");
            let runes = adj[1..]
                .iter()
                .map(Rune::from_theory_item)
                .collect::<Result<Vec<Rune>>>()?;
            match mode {
                "ENABLE" => Ok(Event::InTheory {
                    enable: runes,
                    disable: Vec::new(),
                }),
                "DISABLE" => Ok(Event::InTheory {
                    enable: Vec::new(),
                    disable: runes,
                }),
                other => Err(Error::Book(format!(
                    "unsupported in-theory form {other}; use enable or disable"
                ))),
            }
        }
        "SIMPLIFY-DEFUN" => {
            if items.len() < 2 {
                return Err(Error::Book("simplify-defun needs a function name".into()));
            }
            let fn_name = items[1]
                .as_sym()
                .ok_or_else(|| Error::Book("simplify-defun target must be a symbol".into()))?;
            Ok(Event::SimplifyDefun {
                fn_name: fn_name.to_string(),
                opts: Options::parse(&items[2..])?,
            })
        }
        other => Err(Error::Book(format!("unsupported event {other}"))),
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub samples: usize,
    pub fuel: u64,
    pub difftest: bool,
    pub assume_obligations: bool,
    /// Force every transformation to show-only: certificates go to the
    /// output stream and the world is left unchanged.
    pub show_only: bool,
    /// Where certificate files land; None suppresses writing.
    pub cert_dir: Option<PathBuf>,
    pub limits: Limits,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            seed: 0,
            samples: 500,
            fuel: DEFAULT_EVAL_FUEL,
            difftest: true,
            assume_obligations: false,
            show_only: false,
            cert_dir: None,
            limits: Limits::default(),
        }
    }
}

/// Everything a transformation event left behind, kept so callers (tests,
/// the verifier) can re-check certificates against the exact states.
#[derive(Debug, Clone)]
pub struct TransformOutcome {
    pub fn_name: String,
    pub cert: Certificate,
    pub cert_path: Option<PathBuf>,
    pub world_before: World,
    pub book_before: RuleBook,
    pub world_after: World,
}

#[derive(Debug)]
pub struct ProcessedBook {
    pub world: World,
    pub book: RuleBook,
    pub theory: ActiveTheory,
    pub transforms: Vec<TransformOutcome>,
}

/// Execute every event in a book file. Printed definitions (and, under
/// show-only, certificates) go to `out`; diagnostics ride on errors.
pub fn process_book(path: &Path, cfg: &RunConfig, out: &mut dyn Write) -> Result<ProcessedBook> {
    let file = path.display().to_string();
    let src = std::fs::read_to_string(path)?;
    let forms = parse_forms(&src).map_err(|e| {
        let line = match &e {
            Error::Parse { line, .. } => *line,
            _ => 0,
        };
        e.in_book(&file, line)
    })?;

    let mut state = BookState::new();
    for lf in &forms {
        state
            .execute(&lf.form, cfg, out)
            .map_err(|e| e.in_book(&file, lf.line))?;
    }
    Ok(state.finish())
}

/// Incremental book execution, exposed so the verifier can snapshot the
/// world between events.
pub struct BookState {
    pub world: World,
    pub book: RuleBook,
    pub theory: ActiveTheory,
    pub transforms: Vec<TransformOutcome>,
}

impl BookState {
    pub fn new() -> BookState {
        BookState {
            world: World::new(),
            book: base_book(),
            theory: ActiveTheory::default(),
            transforms: Vec::new(),
        }
    }

    pub fn finish(self) -> ProcessedBook {
        ProcessedBook {
            world: self.world,
            book: self.book,
            theory: self.theory,
            transforms: self.transforms,
        }
    }

    pub fn execute(&mut self, form: &SExpr, cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
        match parse_event(form)? {
            Event::Define(d) => {
                let admitted = self.world.defs().len();
                self.world = self.world.define(&d)?;
                // Every admitted function gets a definition rune, disabled
                // by default: the rewriter leaves calls unopened unless the
                // rune is enabled, while context-building still sees
                // through assumed predicate calls to their conjuncts.
                for defn in &self.world.defs()[admitted..] {
                    let mut rule =
                        RewriteRule::definition(&defn.name, &defn.formals, defn.body.clone(), 0);
                    rule.enabled_by_default = false;
                    self.book.insert(rule)?;
                }
            }
            Event::Theorem {
                name,
                body,
                enabled,
            } => {
                self.book.add_rule(&name, &body, enabled, &self.world)?;
            }
            Event::InTheory { enable, disable } => {
                theory_from(&self.book, &self.world, None, &enable, &disable)?;
                for r in enable {
                    self.theory.force_enable(r);
                }
                for r in disable {
                    self.theory.force_disable(r);
                }
            }
            Event::SimplifyDefun { fn_name, mut opts } => {
                opts.show_only |= cfg.show_only;
                opts.assume_obligations |= cfg.assume_obligations;
                self.run_transform(&fn_name, &opts, cfg, out)?;
            }
        }
        Ok(())
    }

    fn run_transform(
        &mut self,
        fn_name: &str,
        opts: &Options,
        cfg: &RunConfig,
        out: &mut dyn Write,
    ) -> Result<()> {
        let world_before = self.world.clone();
        let book_before = self.book.clone();
        let (world_after, record) = simplify_defun_in(
            &self.world,
            &self.book,
            &self.theory,
            fn_name,
            opts,
            &cfg.limits,
        )?;
        let cert = build_certificate(&record);

        if opts.print_def {
            writeln!(out, "{}", new_event_form(&record.new_definitions))?;
        }

        // The produced certificate must satisfy the independent checker
        // before the book can move forward.
        let report = check_certificate(&world_before, &book_before, &cert);
        if !report.accepted() {
            let listing: Vec<String> = report
                .violations
                .iter()
                .map(|v| format!("{}[{}]: {}", v.section, v.position, v.reason))
                .collect();
            return Err(Error::Certificate(format!(
                "certificate for {fn_name} rejected: {}",
                listing.join("; ")
            )));
        }

        let target = record
            .members
            .iter()
            .find(|m| m.old_name == fn_name)
            .expect("the named function is in its own clique");

        if opts.show_only {
            write!(out, "{}", cert.to_text())?;
            // World, book, and theory stay as they were.
            self.transforms.push(TransformOutcome {
                fn_name: fn_name.to_string(),
                cert,
                cert_path: None,
                world_before,
                book_before,
                world_after: self.world.clone(),
            });
            return Ok(());
        }

        let cert_path = match &cfg.cert_dir {
            Some(dir) => {
                let p = dir.join(format!("{}.cert.sx", target.new_name));
                std::fs::write(&p, cert.to_text())?;
                Some(p)
            }
            None => None,
        };

        if cfg.difftest {
            for m in &record.members {
                let rep =
                    differential_test(&world_after, &m.becomes, cfg.samples, cfg.fuel, cfg.seed)?;
                if rep.mismatches > 0 {
                    return Err(Error::Certificate(format!(
                        "differential test: {} of {} samples disagree between {} and {}",
                        rep.mismatches, rep.completed, m.old_name, m.new_name
                    )));
                }
            }
        }

        // Later events see the transformation: new definitions in the
        // world, the hyps function's unfolding rule, and each becomes
        // theorem as an enabled rewrite rule (this is what lets a later
        // simplify-defun chain through an earlier one's output).
        self.world = world_after.clone();
        if let Some(h) = &record.hyps_fn {
            self.book
                .insert(RewriteRule::definition(&h.name, &h.formals, h.body.clone(), 0))?;
        }
        for d in &record.new_definitions {
            let mut rule = RewriteRule::definition(&d.name, &d.formals, d.body.clone(), 0);
            rule.enabled_by_default = false;
            self.book.insert(rule)?;
        }
        for m in &record.members {
            self.book
                .add_rule_term(Rune::Rewrite(m.theorem_name.clone()), &m.becomes, true)?;
        }

        self.transforms.push(TransformOutcome {
            fn_name: fn_name.to_string(),
            cert,
            cert_path,
            world_before,
            book_before,
            world_after,
        });
        Ok(())
    }
}

impl Default for BookState {
    fn default() -> BookState {
        BookState::new()
    }
}

/// Check a certificate file against the world prefix of a book: events are
/// replayed until one introduces any of the certificate's new names, and
/// the certificate is checked against the state just before that event.
pub fn verify_certificate_file(
    cert_path: &Path,
    book_path: &Path,
    limits: &Limits,
) -> Result<crate::cert::CheckReport> {
    let cert_text = std::fs::read_to_string(cert_path)?;
    let cert = Certificate::parse(&cert_text)
        .map_err(|e| e.in_book(&cert_path.display().to_string(), 1))?;

    let file = book_path.display().to_string();
    let src = std::fs::read_to_string(book_path)?;
    let forms = parse_forms(&src).map_err(|e| {
        let line = match &e {
            Error::Parse { line, .. } => *line,
            _ => 0,
        };
        e.in_book(&file, line)
    })?;

    // Replay quietly: no certificate files, no differential tests; the
    // point is only to reconstruct the pre-transformation state.
    let cfg = RunConfig {
        difftest: false,
        limits: limits.clone(),
        ..RunConfig::default()
    };
    let mut introduced: Vec<String> = cert.new_names.clone();
    if let Some((h, _, _)) = &cert.hyps_fn {
        introduced.push(h.clone());
    }

    let mut state = BookState::new();
    let mut sink = std::io::sink();
    for lf in &forms {
        let world_before = state.world.clone();
        let book_before = state.book.clone();
        state
            .execute(&lf.form, &cfg, &mut sink)
            .map_err(|e| e.in_book(&file, lf.line))?;
        if introduced.iter().any(|n| state.world.contains(n)) {
            return Ok(check_certificate(&world_before, &book_before, &cert));
        }
    }
    Ok(check_certificate(&state.world, &state.book, &cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_book(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    const F_BOOK: &str = "\
(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))
(simplify-defun f)
";

    #[test]
    fn processes_a_small_book() {
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "f.sx", F_BOOK);
        let cfg = RunConfig {
            cert_dir: Some(dir.path().to_path_buf()),
            samples: 50,
            ..RunConfig::default()
        };
        let mut out = Vec::new();
        let pb = process_book(&path, &cfg, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "(DEFUN F{1} (X) (IF (ZP X) 0 (+ 2 (F{1} (+ -1 X)))))\n"
        );
        assert!(pb.world.contains("F{1}"));
        assert_eq!(pb.transforms.len(), 1);
        let cert_file = dir.path().join("F{1}.cert.sx");
        assert!(cert_file.is_file());

        // The written certificate re-verifies standalone against the book.
        let report =
            verify_certificate_file(&cert_file, &path, &Limits::default()).unwrap();
        assert!(report.accepted(), "{:?}", report.violations);
    }

    #[test]
    fn stdout_is_deterministic() {
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "f.sx", F_BOOK);
        let cfg = RunConfig {
            samples: 25,
            ..RunConfig::default()
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        process_book(&path, &cfg, &mut a).unwrap();
        process_book(&path, &cfg, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn show_only_prints_the_certificate_and_keeps_the_world() {
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "f.sx", F_BOOK);
        let cfg = RunConfig {
            show_only: true,
            cert_dir: Some(dir.path().to_path_buf()),
            ..RunConfig::default()
        };
        let mut out = Vec::new();
        let pb = process_book(&path, &cfg, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("(CERTIFICATE"));
        assert!(!pb.world.contains("F{1}"));
        assert!(!dir.path().join("F{1}.cert.sx").exists());
    }

    #[test]
    fn becomes_rules_chain_into_later_transforms() {
        // h calls f; once f has been simplified, simplifying h rewrites
        // the call through the recorded equivalence.
        let book = "\
(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))
(defun h (x) (f (car (cons x x))))
(simplify-defun f)
(simplify-defun h)
";
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "chain.sx", book);
        let cfg = RunConfig {
            samples: 50,
            ..RunConfig::default()
        };
        let mut out = Vec::new();
        let pb = process_book(&path, &cfg, &mut out).unwrap();
        let h1 = pb.world.get("H{1}").unwrap();
        assert_eq!(h1.body.to_string(), "(F{1} X)");
    }

    #[test]
    fn in_theory_adjusts_later_events() {
        // With the arithmetic fold disabled ambiently, f's body cannot
        // simplify and must-simplify fails; re-enabling restores it.
        let book = "\
(defun f (x) (if (zp x) 0 (+ 1 1 (f (+ -1 x)))))
(in-theory (disable fold-consts-in-+))
(simplify-defun f)
";
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "theory.sx", book);
        let mut out = Vec::new();
        let err = process_book(&path, &RunConfig::default(), &mut out).unwrap_err();
        assert!(err.to_string().contains("did not simplify"), "{err}");
        assert!(err.to_string().contains("theory.sx:3"), "{err}");
    }

    #[test]
    fn event_errors_carry_file_and_line() {
        let dir = tempdir().unwrap();
        let path = write_book(
            dir.path(),
            "bad.sx",
            "(defun f (x) x)\n(simplify-defun f :verbose t)\n",
        );
        let mut out = Vec::new();
        let err = process_book(&path, &RunConfig::default(), &mut out).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad.sx:2"), "{msg}");
        assert!(msg.contains("unsupported option"), "{msg}");
        assert!(msg.contains(":VERBOSE"), "{msg}");
    }

    #[test]
    fn rejects_unknown_events() {
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "odd.sx", "(include-book \"arith\")\n");
        let mut out = Vec::new();
        let err = process_book(&path, &RunConfig::default(), &mut out).unwrap_err();
        assert!(err.to_string().contains("unsupported event"), "{err}");
    }

    #[test]
    fn guard_assumptions_run_through_books() {
        let book = "\
(defthm true-listp-of-cdr
  (implies (true-listp l) (equal (true-listp (cdr l)) t)))
(defun foo (x)
  (declare (xargs :guard (true-listp x)))
  (if (consp x) (foo (cdr x)) x))
(simplify-defun foo :assumptions :guard)
";
        let dir = tempdir().unwrap();
        let path = write_book(dir.path(), "foo.sx", book);
        let cfg = RunConfig {
            samples: 100,
            cert_dir: Some(dir.path().to_path_buf()),
            ..RunConfig::default()
        };
        let mut out = Vec::new();
        let pb = process_book(&path, &cfg, &mut out).unwrap();
        assert!(pb.world.contains("FOO-HYPS"));
        assert!(pb.book.contains(&Rune::Definition("FOO-HYPS".into())));
        let cert_file = dir.path().join("FOO{1}.cert.sx");
        let report =
            verify_certificate_file(&cert_file, &path, &Limits::default()).unwrap();
        assert!(report.accepted(), "{:?}", report.violations);
    }
}
