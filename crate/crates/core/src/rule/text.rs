//! Rule text format: `HEAD <- ATOM, ATOM, ...` with `ATOM := pred(term,term)`.
//!
//! Variables are `X`, `Y` and `V<digits>`; everything else is a constant.
//! Names that would be ambiguous in this grammar are wrapped in backquotes.

use std::fmt;

use super::{Atom, Rule, Term, Var};
use crate::error::ParseError;
use crate::store::Vocab;

fn is_var_name(s: &str) -> bool {
    s == "X" || s == "Y" || (s.len() > 1 && s.starts_with('V') && s[1..].bytes().all(|b| b.is_ascii_digit()))
}

fn needs_quotes(name: &str, is_term: bool) -> bool {
    name.is_empty()
        || name.trim() != name
        || name.contains(['(', ')', ',', '`', '|', '\t', '\n'])
        || name.contains("<-")
        || (is_term && is_var_name(name))
}

fn write_name(f: &mut fmt::Formatter<'_>, name: &str, is_term: bool) -> fmt::Result {
    if needs_quotes(name, is_term) {
        write!(f, "`{name}`")
    } else {
        f.write_str(name)
    }
}

pub struct RuleDisplay<'a> {
    rule: &'a Rule,
    vocab: &'a Vocab,
}

impl RuleDisplay<'_> {
    fn term(&self, f: &mut fmt::Formatter<'_>, t: Term) -> fmt::Result {
        match t {
            Term::Var(Var::X) => f.write_str("X"),
            Term::Var(Var::Y) => f.write_str("Y"),
            Term::Var(Var(i)) => write!(f, "V{}", i - 2),
            Term::Const(c) if c.is_skolem() => f.write_str(&self.vocab.entity_name(c)),
            Term::Const(c) => write_name(f, &self.vocab.entity_name(c), true),
        }
    }

    fn atom(&self, f: &mut fmt::Formatter<'_>, a: &Atom) -> fmt::Result {
        write_name(f, &self.vocab.relation_name(a.pred), false)?;
        f.write_str("(")?;
        self.term(f, a.subj)?;
        f.write_str(",")?;
        self.term(f, a.obj)?;
        f.write_str(")")
    }
}

impl fmt::Display for RuleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.atom(f, self.rule.head())?;
        f.write_str(" <-")?;
        for (i, a) in self.rule.body().iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            self.atom(f, a)?;
        }
        Ok(())
    }
}

impl Rule {
    pub fn display<'a>(&'a self, vocab: &'a Vocab) -> RuleDisplay<'a> {
        RuleDisplay { rule: self, vocab }
    }
}

pub fn format_rule(rule: &Rule, vocab: &Vocab) -> String {
    rule.display(vocab).to_string()
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start_matches([' ', '\t']).len();
    }

    /// Consumes optional whitespace and `tok`; on a miss nothing is consumed.
    fn eat(&mut self, tok: &str) -> bool {
        let start = self.pos;
        self.skip_ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            self.pos = start;
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(ParseError::new(self.pos, format!("expected `{tok}`")))
        }
    }

    /// Returns the name and whether it was quoted.
    fn name(&mut self, stops: &[char]) -> Result<(&'a str, bool), ParseError> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        if let Some(inner) = rest.strip_prefix('`') {
            let end = inner
                .find('`')
                .ok_or_else(|| ParseError::new(start, "unterminated backquote"))?;
            self.pos += end + 2;
            return Ok((&inner[..end], true));
        }
        let end = rest.find(stops).unwrap_or(rest.len());
        let name = rest[..end].trim_end();
        if name.is_empty() {
            return Err(ParseError::new(start, "expected a name"));
        }
        if name.contains("<-") || name.contains('`') {
            return Err(ParseError::new(start, "unexpected token in name"));
        }
        self.pos += end;
        Ok((name, false))
    }

    fn term(&mut self, vocab: &mut Vocab) -> Result<Term, ParseError> {
        let (name, quoted) = self.name(&[',', ')', '(', '|'])?;
        if !quoted && is_var_name(name) {
            return Ok(match name {
                "X" => Term::X,
                "Y" => Term::Y,
                _ => {
                    let i: u32 = name[1..]
                        .parse()
                        .map_err(|_| ParseError::new(self.pos, "variable index out of range"))?;
                    if i > u32::MAX - 3 {
                        return Err(ParseError::new(self.pos, "variable index out of range"));
                    }
                    Term::v(i)
                }
            });
        }
        Ok(Term::Const(vocab.entity(name)))
    }

    fn atom(&mut self, vocab: &mut Vocab) -> Result<Atom, ParseError> {
        let (pred, _) = self.name(&['(', ')', ',', '|'])?;
        let pred = vocab.relation(pred);
        self.expect("(")?;
        let subj = self.term(vocab)?;
        self.expect(",")?;
        let obj = self.term(vocab)?;
        self.expect(")")?;
        Ok(Atom::new(pred, subj, obj))
    }
}

/// Parses a rule at the start of `text`, stopping before a trailing
/// ` | ...` column section. Returns the rule and the number of bytes consumed.
pub fn parse_rule_prefix(text: &str, vocab: &mut Vocab) -> Result<(Rule, usize), ParseError> {
    let mut cur = Cursor { src: text, pos: 0 };
    let head = cur.atom(vocab)?;
    cur.expect("<-")?;
    let mut body = Vec::new();
    let mut end = cur.pos;
    cur.skip_ws();
    if !(cur.rest().is_empty() || cur.rest().starts_with('|')) {
        body.push(cur.atom(vocab)?);
        while cur.eat(",") {
            body.push(cur.atom(vocab)?);
        }
        end = cur.pos;
    }
    cur.skip_ws();
    if !(cur.rest().is_empty() || cur.rest().starts_with('|')) {
        return Err(ParseError::new(cur.pos, "unexpected trailing input"));
    }
    Ok((Rule::new(head, body), end))
}

/// Parses a complete rule; symbols are interned into `vocab`.
pub fn parse_rule(text: &str, vocab: &mut Vocab) -> Result<Rule, ParseError> {
    let text = text.trim_end_matches(['\n', '\r', ' ', '\t']);
    let (rule, used) = parse_rule_prefix(text, vocab)?;
    if used != text.len() {
        return Err(ParseError::new(used, "unexpected trailing input"));
    }
    Ok(rule)
}
