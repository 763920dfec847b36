//! S-expression reader and printer.
//!
//! The surface syntax is deliberately small: atoms are symbols or integers,
//! `(` `)` delimit lists, `'x` abbreviates `(quote x)`, `.` builds dotted
//! tails, and `;` starts a line comment. Symbols are case-insensitive and
//! canonicalized to upper case; `{` and `}` are ordinary symbol characters
//! (they appear in generated names like `F{1}`).

use crate::error::{Error, Result};
use num_bigint::BigInt;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SExpr {
    Sym(String),
    Int(BigInt),
    List(Vec<SExpr>),
    /// Improper list: at least one leading element plus a non-list tail.
    Dotted(Vec<SExpr>, Box<SExpr>),
}

impl SExpr {
    pub fn sym(s: &str) -> SExpr {
        SExpr::Sym(s.to_ascii_uppercase())
    }

    pub fn int(i: i64) -> SExpr {
        SExpr::Int(BigInt::from(i))
    }

    pub fn list(items: Vec<SExpr>) -> SExpr {
        SExpr::List(items)
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            SExpr::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_sym(&self, name: &str) -> bool {
        self.as_sym() == Some(name)
    }

    /// Head symbol of a list form, if any.
    pub fn head(&self) -> Option<&str> {
        match self {
            SExpr::List(items) => items.first().and_then(|h| h.as_sym()),
            _ => None,
        }
    }

    pub fn quote(inner: SExpr) -> SExpr {
        SExpr::List(vec![SExpr::sym("QUOTE"), inner])
    }
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

/// A top-level form together with the line it starts on (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatedForm {
    pub line: usize,
    pub form: SExpr,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Reader<'a> {
        Reader {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, at: usize, msg: &str) -> Error {
        let mut line = 1;
        let mut col = 1;
        for &b in &self.src[..at.min(self.src.len())] {
            if b == b'\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        Error::Parse {
            offset: at,
            line,
            col,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while let Some(b) = self.peek() {
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b';' => {
                    while let Some(c) = self.peek() {
                        self.pos += 1;
                        if c == b'\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn is_atom_byte(b: u8) -> bool {
        !matches!(b, b' ' | b'\t' | b'\r' | b'\n' | b'(' | b')' | b';' | b'\'')
    }

    fn read_atom(&mut self) -> Result<SExpr> {
        let start = self.pos;
        while let Some(b) = self.peek() {
            if Reader::is_atom_byte(b) {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos])
            .map_err(|_| self.err(start, "invalid utf-8 in atom"))?;
        if text.is_empty() {
            return Err(self.err(start, "empty atom"));
        }
        if is_integer_token(text) {
            let n: BigInt = text.parse().expect("validated integer token");
            Ok(SExpr::Int(n))
        } else if text == "." {
            Err(self.err(start, "lone dot outside a list tail"))
        } else {
            Ok(SExpr::Sym(text.to_ascii_uppercase()))
        }
    }

    fn read_form(&mut self) -> Result<SExpr> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.err(self.pos, "unexpected end of input")),
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return Err(self.err(open, "unterminated list")),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(SExpr::List(items));
                        }
                        Some(b'.') if self.dot_is_marker() => {
                            if items.is_empty() {
                                return Err(self.err(self.pos, "dot with no preceding element"));
                            }
                            self.pos += 1;
                            let tail = self.read_form()?;
                            self.skip_ws();
                            if self.peek() != Some(b')') {
                                return Err(self.err(self.pos, "expected ) after dotted tail"));
                            }
                            self.pos += 1;
                            return Ok(make_dotted(items, tail));
                        }
                        Some(_) => items.push(self.read_form()?),
                    }
                }
            }
            Some(b')') => Err(self.err(self.pos, "unexpected )")),
            Some(b'\'') => {
                self.pos += 1;
                let inner = self.read_form()?;
                Ok(SExpr::quote(inner))
            }
            Some(_) => self.read_atom(),
        }
    }

    /// A `.` acts as the dotted-pair marker only when it stands alone.
    fn dot_is_marker(&self) -> bool {
        if self.src.get(self.pos) != Some(&b'.') {
            return false;
        }
        match self.src.get(self.pos + 1) {
            None => true,
            Some(&b) => !Reader::is_atom_byte(b),
        }
    }

    fn line_at(&self, at: usize) -> usize {
        1 + self.src[..at.min(self.src.len())]
            .iter()
            .filter(|&&b| b == b'\n')
            .count()
    }
}

fn is_integer_token(text: &str) -> bool {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

fn make_dotted(items: Vec<SExpr>, tail: SExpr) -> SExpr {
    match tail {
        SExpr::List(rest) => {
            let mut all = items;
            all.extend(rest);
            SExpr::List(all)
        }
        SExpr::Dotted(mid, end) => {
            let mut all = items;
            all.extend(mid);
            SExpr::Dotted(all, end)
        }
        atom => SExpr::Dotted(items, Box::new(atom)),
    }
}

/// Parse a single s-expression; trailing input is an error.
pub fn parse_sexpr(src: &str) -> Result<SExpr> {
    let mut r = Reader::new(src);
    let form = r.read_form()?;
    r.skip_ws();
    if r.pos != r.src.len() {
        return Err(r.err(r.pos, "trailing input after form"));
    }
    Ok(form)
}

/// Parse a whole file of forms, remembering the starting line of each.
pub fn parse_forms(src: &str) -> Result<Vec<LocatedForm>> {
    let mut r = Reader::new(src);
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.pos == r.src.len() {
            return Ok(out);
        }
        let line = r.line_at(r.pos);
        let form = r.read_form()?;
        out.push(LocatedForm { line, form });
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Sym(s) => write!(f, "{s}"),
            SExpr::Int(n) => write!(f, "{n}"),
            SExpr::List(items) => {
                if items.len() == 2 && items[0].is_sym("QUOTE") {
                    return write!(f, "'{}", items[1]);
                }
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, ")")
            }
            SExpr::Dotted(items, tail) => {
                write!(f, "(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{it}")?;
                }
                write!(f, " . {tail})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_list() {
        let e = parse_sexpr("(defun f (x) (+ 1 x))").unwrap();
        let items = e.as_list().unwrap();
        assert_eq!(items.len(), 4);
        assert!(items[0].is_sym("DEFUN"));
        assert_eq!(items[2], SExpr::List(vec![SExpr::sym("x")]));
    }

    #[test]
    fn case_folds_symbols() {
        assert_eq!(parse_sexpr("fOo").unwrap(), SExpr::sym("FOO"));
    }

    #[test]
    fn reads_integers_and_signs() {
        assert_eq!(parse_sexpr("-5").unwrap(), SExpr::int(-5));
        assert_eq!(parse_sexpr("+7").unwrap(), SExpr::int(7));
        // A bare - or + is a symbol, not a number.
        assert_eq!(parse_sexpr("-").unwrap(), SExpr::sym("-"));
    }

    #[test]
    fn unbalanced_input_reports_offset() {
        match parse_sexpr("(a (b").unwrap_err() {
            Error::Parse { offset, .. } => assert_eq!(offset, 3),
            other => panic!("unexpected: {other:?}"),
        }
        // The offset of the unterminated inner list is its open paren.
    }

    #[test]
    fn unexpected_close_is_an_error() {
        assert!(parse_sexpr(")").is_err());
        assert!(parse_sexpr("(a))").is_err());
    }

    #[test]
    fn quote_sugar_round_trips() {
        let e = parse_sexpr("'(1 2 . 3)").unwrap();
        assert_eq!(e.to_string(), "'(1 2 . 3)");
        let again = parse_sexpr(&e.to_string()).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn comments_are_skipped() {
        let forms = parse_forms("; header\n(a) ; tail\n(b)\n").unwrap();
        assert_eq!(forms.len(), 2);
        assert_eq!(forms[0].line, 2);
        assert_eq!(forms[1].line, 3);
    }

    #[test]
    fn braces_are_symbol_chars() {
        assert_eq!(parse_sexpr("f{1}").unwrap(), SExpr::sym("F{1}"));
    }

    #[test]
    fn dotted_tail_merges_into_lists() {
        assert_eq!(
            parse_sexpr("(a . (b c))").unwrap(),
            parse_sexpr("(a b c)").unwrap()
        );
    }
}
