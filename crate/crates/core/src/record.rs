//! Text artifacts: rule files and run records.
//!
//! A rule file holds one rule per line:
//!
//! ```text
//! Advises(X,bob) <- Is_A(X,V0) | supp=4 | hc=0.5 | sc=0.4444444444444444 | kind=HAR
//! ```
//!
//! A run record is a list of `[section]` headers each followed by
//! `key = value` lines. Keys may repeat. `#` starts a comment line.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use crate::error::RecordError;
use crate::ground::Measures;
use crate::miner::{LearnOutcome, LearnedRule};
use crate::rule::{parse_rule_prefix, RuleKind};
use crate::store::Vocab;

pub fn format_rule_line(r: &LearnedRule, vocab: &Vocab) -> String {
    format!(
        "{} | supp={} | hc={} | sc={} | kind={}",
        r.rule.display(vocab),
        r.measures.supp,
        r.measures.hc,
        r.measures.sc,
        r.rule.kind()
    )
}

pub fn write_rules<W: Write>(mut w: W, rules: &[LearnedRule], vocab: &Vocab) -> io::Result<()> {
    for r in rules {
        writeln!(w, "{}", format_rule_line(r, vocab))?;
    }
    Ok(())
}

fn err(line: usize, message: impl Into<String>) -> RecordError {
    RecordError {
        line,
        message: message.into(),
    }
}

/// Parses one rule-file line; `line_no` is only used for errors. Only
/// `supp`, `hc` and `sc` are restored; the other measures are zero.
pub fn parse_rule_line(text: &str, line_no: usize, vocab: &mut Vocab) -> Result<LearnedRule, RecordError> {
    let (rule, used) = parse_rule_prefix(text, vocab).map_err(|e| err(line_no, e.to_string()))?;
    let mut measures = Measures::zero();
    let (mut supp, mut hc, mut sc) = (None, None, None);
    for col in text[used..].split('|').skip(1) {
        let (key, value) = col
            .trim()
            .split_once('=')
            .ok_or_else(|| err(line_no, format!("column `{}` is not key=value", col.trim())))?;
        let bad = |_| err(line_no, format!("bad value for {key}: `{value}`"));
        match key {
            "supp" => supp = Some(value.parse::<u64>().map_err(|e| bad(e.to_string()))?),
            "hc" => hc = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "sc" => sc = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
            "kind" => {
                let kind = RuleKind::parse(value).ok_or_else(|| err(line_no, format!("unknown kind `{value}`")))?;
                if kind != rule.kind() {
                    return Err(err(line_no, format!("kind={value} but the rule is a {}", rule.kind())));
                }
            }
            other => return Err(err(line_no, format!("unknown column `{other}`"))),
        }
    }
    match (supp, hc, sc) {
        (Some(s), Some(h), Some(c)) => {
            measures.supp = s;
            measures.hc = h;
            measures.sc = c;
        }
        _ => return Err(err(line_no, "missing supp, hc or sc column")),
    }
    Ok(LearnedRule { rule, measures })
}

/// Reads a rule file, skipping blank lines and `#` comments.
pub fn read_rules<R: BufRead>(reader: R, vocab: &mut Vocab) -> Result<Vec<LearnedRule>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, e.to_string()))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_rule_line(t, i + 1, vocab)?);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Section {
            name: name.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    /// First value stored under `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_parsed<T: std::str::FromStr>(&self, key: &str) -> Option<T> {
        self.get(key)?.parse().ok()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunRecord {
    pub sections: Vec<Section>,
}

impl RunRecord {
    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Sections named `<prefix> <rest>`, with `rest`.
    pub fn sections_with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a Section)> + 'a {
        self.sections.iter().filter_map(move |s| {
            s.name
                .strip_prefix(prefix)
                .and_then(|r| r.strip_prefix(' '))
                .map(|r| (r, s))
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# rulehier run record\n");
        for sec in &self.sections {
            let _ = writeln!(s, "\n[{}]", sec.name);
            for (k, v) in &sec.entries {
                let _ = writeln!(s, "{k} = {}", v.replace('\n', " "));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<RunRecord, RecordError> {
        let mut rec = RunRecord::default();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                rec.sections.push(Section::new(name));
                continue;
            }
            let (k, v) = t
                .split_once(" = ")
                .or_else(|| t.split_once('='))
                .ok_or_else(|| err(i + 1, "expected `key = value`"))?;
            let sec = rec
                .sections
                .last_mut()
                .ok_or_else(|| err(i + 1, "entry before any section"))?;
            sec.entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(rec)
    }
}

/// Per-target summary of a mining run, including every OAR's class.
pub fn outcome_section(out: &LearnOutcome, vocab: &Vocab) -> Section {
    let mut s = Section::new(format!("target {}", vocab.relation_name(out.target)));
    let c = out.oar_counts();
    s.push("abstract_rules", out.abstract_rules)
        .push("prior_kept", out.prior_kept)
        .push("orphans", out.orphans)
        .push("oars", c.total())
        .push("p_oars", c.pruned)
        .push("i_oars", c.informative)
        .push("u_oars", c.uninformative)
        .push("relevant_rules", out.relevant.len())
        .push("rules", out.rules.len())
        .push("post_pruned", out.post_pruned.len())
        .push("truncated_oars", out.truncated_oars)
        .push("skipped_oars", out.skipped_oars)
        .push("generalization_cut", out.generalization_cut)
        .push("approximate", out.approximate)
        .push("time_generalization_ms", out.timings.generalization.as_secs_f64() * 1e3)
        .push("time_prior_pruning_ms", out.timings.prior_pruning.as_secs_f64() * 1e3)
        .push("time_specialization_ms", out.timings.specialization.as_secs_f64() * 1e3);
    for (oar, class) in &out.oar_classes {
        s.push("oar", format!("{} {}", class.as_str(), oar.display(vocab)));
    }
    s
}
