//! Logical representation of paths and first-order chain rules.
//!
//! A [`Rule`] is a head atom plus an ordered body. Atoms keep the knowledge
//! graph's edge orientation; the walk direction of each body atom follows
//! from which argument it shares with its predecessor. Variables `V<i>` are
//! renumbered by first occurrence on construction, so two rules that differ
//! only by a variable renaming compare equal.

mod text;

use std::collections::HashMap;
use std::fmt;

use crate::error::RuleError;
use crate::store::{EntityId, RelationId, Triple};

pub use text::{format_rule, parse_rule, parse_rule_prefix, RuleDisplay};

/// Variable index: `0` is `X`, `1` is `Y`, `2 + i` is `V<i>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub const X: Var = Var(0);
    pub const Y: Var = Var(1);

    pub fn fresh(i: u32) -> Var {
        Var(2 + i)
    }

    pub fn is_head_var(self) -> bool {
        self.0 < 2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(EntityId),
}

impl Term {
    pub const X: Term = Term::Var(Var::X);
    pub const Y: Term = Term::Var(Var::Y);

    pub fn v(i: u32) -> Term {
        Term::Var(Var::fresh(i))
    }

    pub fn as_var(self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(self) -> Option<EntityId> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    pub fn is_var(self) -> bool {
        matches!(self, Term::Var(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: RelationId,
    pub subj: Term,
    pub obj: Term,
}

impl Atom {
    pub fn new(pred: RelationId, subj: Term, obj: Term) -> Self {
        Atom { pred, subj, obj }
    }

    pub fn terms(&self) -> [Term; 2] {
        [self.subj, self.obj]
    }

    pub fn contains(&self, t: Term) -> bool {
        self.subj == t || self.obj == t
    }

    fn map_terms(&self, mut f: impl FnMut(Term) -> Term) -> Atom {
        Atom {
            pred: self.pred,
            subj: f(self.subj),
            obj: f(self.obj),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    /// Closed abstract rule.
    Car,
    /// Open abstract rule; the top rule is an OAR with an empty body.
    Oar,
    /// Head-anchored instantiated rule.
    Har,
    /// Both-anchored instantiated rule.
    Bar,
    /// Any other instantiated rule.
    Insr,
    /// Any other abstract rule.
    Other,
}

impl RuleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Car => "CAR",
            RuleKind::Oar => "OAR",
            RuleKind::Har => "HAR",
            RuleKind::Bar => "BAR",
            RuleKind::Insr => "INSR",
            RuleKind::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Option<RuleKind> {
        Some(match s {
            "CAR" => RuleKind::Car,
            "OAR" => RuleKind::Oar,
            "HAR" => RuleKind::Har,
            "BAR" => RuleKind::Bar,
            "INSR" => RuleKind::Insr,
            "OTHER" => RuleKind::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rule {
    head: Atom,
    body: Vec<Atom>,
    kind: RuleKind,
    constants: u32,
}

impl Rule {
    /// Builds a rule, renumbering body variables by first occurrence. No
    /// connectedness or straightness check is made here.
    pub fn new(head: Atom, body: Vec<Atom>) -> Rule {
        let mut map: HashMap<Var, Var> = HashMap::new();
        let mut next = 0u32;
        let mut norm = |t: Term| match t {
            Term::Var(v) if !v.is_head_var() => Term::Var(*map.entry(v).or_insert_with(|| {
                next += 1;
                Var::fresh(next - 1)
            })),
            other => other,
        };
        let head = head.map_terms(&mut norm);
        let body: Vec<Atom> = body.iter().map(|a| a.map_terms(&mut norm)).collect();
        let mut rule = Rule {
            head,
            body,
            kind: RuleKind::Other,
            constants: 0,
        };
        rule.constants = rule.constant_set().len() as u32;
        rule.kind = rule.classify();
        rule
    }

    /// `r(X,Y) <-`
    pub fn top(target: RelationId) -> Rule {
        Rule::new(Atom::new(target, Term::X, Term::Y), Vec::new())
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn target(&self) -> RelationId {
        self.head.pred
    }

    pub fn is_top(&self) -> bool {
        self.body.is_empty()
    }

    /// Number of body atoms.
    pub fn body_length(&self) -> usize {
        self.body.len()
    }

    /// Number of distinct constants, `d(p)`.
    pub fn deduction_level(&self) -> usize {
        self.constants as usize
    }

    /// Atom at index `i`: `0` is the head, `1..=len` the body.
    pub fn atom(&self, i: usize) -> &Atom {
        if i == 0 {
            &self.head
        } else {
            &self.body[i - 1]
        }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    pub fn terms(&self) -> impl Iterator<Item = Term> + '_ {
        self.atoms().flat_map(|a| a.terms())
    }

    /// Distinct constants in order of first occurrence.
    pub fn constant_set(&self) -> Vec<EntityId> {
        let mut out = Vec::new();
        for t in self.terms() {
            if let Term::Const(c) = t {
                if !out.contains(&c) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Distinct variables in order of first occurrence.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        for t in self.terms() {
            if let Term::Var(v) = t {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    fn body_contains(&self, t: Term) -> bool {
        self.body.iter().any(|a| a.contains(t))
    }

    /// Definition of connectedness: every body atom shares a term with its
    /// predecessor, the head for the first one.
    pub fn is_connected(&self) -> bool {
        self.atoms()
            .zip(self.body.iter())
            .all(|(prev, a)| a.terms().iter().any(|t| prev.contains(*t)))
    }

    /// Every term occurs at most twice across head and body.
    pub fn is_straight(&self) -> bool {
        let mut counts: HashMap<Term, u32> = HashMap::new();
        for t in self.terms() {
            let c = counts.entry(t).or_insert(0);
            *c += 1;
            if *c > 2 {
                return false;
            }
        }
        true
    }

    /// The same rule with the body order reversed.
    pub fn reverse_body(&self) -> Rule {
        let mut body = self.body.clone();
        body.reverse();
        Rule::new(self.head, body)
    }

    /// Replaces every variable by a fresh skolem constant, numbered by first
    /// occurrence.
    pub fn skolemize(&self) -> Rule {
        let vars = self.variables();
        let sk = |t: Term| match t {
            Term::Var(v) => {
                let i = vars.iter().position(|w| *w == v).expect("variable listed");
                Term::Const(EntityId::skolem(i as u32))
            }
            c => c,
        };
        Rule::new(
            self.head.map_terms(sk),
            self.body.iter().map(|a| a.map_terms(sk)).collect(),
        )
    }

    /// Replaces variables by constants. Fails if a constant is already in
    /// the rule or bound twice, which would break straightness.
    pub fn substitute(&self, bindings: &[(Var, EntityId)]) -> Result<Rule, RuleError> {
        let existing = self.constant_set();
        for (i, (v, c)) in bindings.iter().enumerate() {
            if existing.contains(c) || bindings[..i].iter().any(|(w, d)| d == c || w == v) {
                return Err(RuleError::BindingCollision);
            }
        }
        let sub = |t: Term| match t {
            Term::Var(v) => bindings
                .iter()
                .find(|(w, _)| *w == v)
                .map(|(_, c)| Term::Const(*c))
                .unwrap_or(t),
            c => c,
        };
        Ok(Rule::new(
            self.head.map_terms(sub),
            self.body.iter().map(|a| a.map_terms(sub)).collect(),
        ))
    }

    /// The chain view of the body, walking from the head term that the
    /// first body atom shares.
    pub fn chain(&self) -> Result<Chain, RuleError> {
        let first = self.body.first().ok_or(RuleError::EmptyBody)?;
        let anchor = if first.contains(self.head.subj) {
            self.head.subj
        } else if first.contains(self.head.obj) {
            self.head.obj
        } else {
            return Err(RuleError::NotChain);
        };
        let mut prev = anchor;
        let mut steps = Vec::with_capacity(self.body.len());
        for a in &self.body {
            let (forward, next) = if a.subj == prev {
                (true, a.obj)
            } else if a.obj == prev {
                (false, a.subj)
            } else {
                return Err(RuleError::NotChain);
            };
            steps.push(Step {
                pred: a.pred,
                forward,
                next,
            });
            prev = next;
        }
        Ok(Chain { anchor, steps })
    }

    fn classify(&self) -> RuleKind {
        let x_in = self.body_contains(Term::X);
        let y_in = self.body_contains(Term::Y);
        let standard_head = self.head.subj == Term::X;
        if self.constants == 0 {
            if !standard_head || self.head.obj != Term::Y {
                return RuleKind::Other;
            }
            if x_in && y_in {
                return RuleKind::Car;
            }
            if !y_in && (self.body.is_empty() || x_in) {
                return RuleKind::Oar;
            }
            return RuleKind::Other;
        }
        let Term::Const(c) = self.head.obj else {
            return RuleKind::Insr;
        };
        if !standard_head || self.body.is_empty() || !x_in || self.body_contains(Term::Const(c)) {
            return RuleKind::Insr;
        }
        let body_consts = self.constants - 1;
        if body_consts == 0 {
            return RuleKind::Har;
        }
        if body_consts == 1 {
            if let Ok(chain) = self.chain() {
                let last = chain.steps.last().map(|s| s.next);
                let interior_const = chain.steps[..chain.steps.len() - 1].iter().any(|s| !s.next.is_var());
                if chain.anchor == Term::X && matches!(last, Some(Term::Const(_))) && !interior_const {
                    return RuleKind::Bar;
                }
            }
        }
        RuleKind::Insr
    }
}

/// One traversal step of a chain body.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub pred: RelationId,
    /// `true` when the atom is `pred(prev, next)`, `false` for `pred(next, prev)`.
    pub forward: bool,
    pub next: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub anchor: Term,
    pub steps: Vec<Step>,
}

impl Chain {
    /// Term at the far end of the chain.
    pub fn end(&self) -> Term {
        self.steps.last().map(|s| s.next).unwrap_or(self.anchor)
    }

    /// The same chain walked from its end back to its anchor.
    pub fn reversed(&self) -> Chain {
        let mut steps = Vec::with_capacity(self.steps.len());
        for (i, s) in self.steps.iter().enumerate().rev() {
            let prev = if i == 0 { self.anchor } else { self.steps[i - 1].next };
            steps.push(Step {
                pred: s.pred,
                forward: !s.forward,
                next: prev,
            });
        }
        Chain {
            anchor: self.end(),
            steps,
        }
    }
}

/// Ground path: an instance of the target followed by the walked edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub head: Triple,
    pub steps: Vec<Triple>,
}

impl Path {
    pub fn new(head: Triple, steps: Vec<Triple>) -> Self {
        Path { head, steps }
    }
}

/// Abstracts a path into a CAR (walk ends at the head's object) or an OAR.
pub fn generalize(path: &Path) -> Result<Rule, RuleError> {
    let e0 = path.head.head;
    let e1 = path.head.tail;
    if e0 == e1 {
        return Err(RuleError::NotStraight("head instance is a self-loop".into()));
    }
    let mut terms: HashMap<EntityId, Term> = HashMap::new();
    terms.insert(e0, Term::X);
    terms.insert(e1, Term::Y);
    let mut fresh = 0u32;
    let mut term_of = |e: EntityId| {
        *terms.entry(e).or_insert_with(|| {
            fresh += 1;
            Term::v(fresh - 1)
        })
    };
    let mut current = e0;
    let mut body = Vec::with_capacity(path.steps.len());
    for (i, t) in path.steps.iter().enumerate() {
        let next = if t.head == current {
            t.tail
        } else if t.tail == current {
            t.head
        } else {
            return Err(RuleError::DisconnectedPath(i, i + 1));
        };
        body.push(Atom::new(t.rel, term_of(t.head), term_of(t.tail)));
        current = next;
    }
    let rule = Rule::new(Atom::new(path.head.rel, Term::X, Term::Y), body);
    if !rule.is_straight() {
        return Err(RuleError::NotStraight("a term occurs more than twice".into()));
    }
    debug_assert!(matches!(rule.kind(), RuleKind::Car | RuleKind::Oar));
    Ok(rule)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    /// The head variable that does not occur in the body.
    HeadObject,
    /// The last body atom's term that is not shared with its predecessor.
    Dangling,
}

/// An OAR with variables marked for instantiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    base: Rule,
    slots: Vec<(Slot, Var)>,
}

impl Template {
    pub fn base(&self) -> &Rule {
        &self.base
    }

    pub fn slots(&self) -> &[(Slot, Var)] {
        &self.slots
    }
}

/// HAR and BAR templates of an OAR.
pub fn specialize_templates(oar: &Rule) -> Result<(Template, Template), RuleError> {
    if oar.kind() != RuleKind::Oar {
        return Err(RuleError::InvalidKind {
            expected: "OAR",
            found: oar.kind().as_str(),
        });
    }
    if oar.is_top() {
        return Err(RuleError::EmptyBody);
    }
    let chain = oar.chain()?;
    let Term::Var(dangling) = chain.end() else {
        return Err(RuleError::NotChain);
    };
    let head_slot = (Slot::HeadObject, Var::Y);
    Ok((
        Template {
            base: oar.clone(),
            slots: vec![head_slot],
        },
        Template {
            base: oar.clone(),
            slots: vec![head_slot, (Slot::Dangling, dangling)],
        },
    ))
}

/// Binds a template's slots, in slot order. Zero bindings returns the base.
pub fn instantiate(template: &Template, bindings: &[EntityId]) -> Result<Rule, RuleError> {
    if bindings.is_empty() {
        return Ok(template.base.clone());
    }
    if bindings.len() != template.slots.len() {
        return Err(RuleError::BindingArity {
            expected: template.slots.len(),
            found: bindings.len(),
        });
    }
    let pairs: Vec<(Var, EntityId)> = template
        .slots
        .iter()
        .zip(bindings)
        .map(|((_, v), c)| (*v, *c))
        .collect();
    template.base.substitute(&pairs)
}
