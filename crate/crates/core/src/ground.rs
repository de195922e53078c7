//! Rule groundings and quality measures.
//!
//! Groundings follow object identity: distinct variables bind distinct
//! entities, none of which is a constant of the rule. Bodies are chains, so
//! enumeration is a depth-first walk along the train indices from the head
//! term the chain is anchored at.
//!
//! A head variable that does not occur in the body (the `Y` of an OAR) is
//! never enumerated. For a fixed value `b` of the other head term, a free
//! value `f` is admissible iff some body grounding avoids it, so the
//! admissible set is everything outside the intersection of the bound sets.

use std::collections::{HashMap, HashSet};

use crate::error::RuleError;
use crate::rule::{instantiate, specialize_templates, Chain, Rule, RuleKind, Term, Var};
use crate::store::{EntityId, RelationId, Split, TripleStore};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measures {
    pub supp: u64,
    pub hc: f64,
    pub sc: f64,
    /// `|g(p)|`, the number of distinct head pairs.
    pub groundings: u64,
    /// Head pairs that are validation instances of the target.
    pub valid_supp: u64,
    /// Set when the grounding cap stopped enumeration early.
    pub approximate: bool,
}

impl Measures {
    pub fn from_counts(supp: u64, groundings: u64, valid_supp: u64, targets: usize, eta: f64) -> Self {
        let hc = if targets == 0 {
            0.0
        } else {
            supp as f64 / targets as f64
        };
        let denom = eta + groundings as f64;
        let sc = if denom > 0.0 { supp as f64 / denom } else { 0.0 };
        Measures {
            supp,
            hc,
            sc,
            groundings,
            valid_supp,
            approximate: false,
        }
    }

    pub fn zero() -> Self {
        Measures::from_counts(0, 0, 0, 0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundingConfig {
    /// Offset of smooth confidence.
    pub eta: f64,
    /// Maximum body groundings enumerated per rule; `0` means no limit.
    pub max_groundings: usize,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            eta: 5.0,
            max_groundings: 0,
        }
    }
}

/// Instances of one relation in one split, indexed by either side.
#[derive(Clone, Debug, Default)]
pub struct PairIndex {
    set: HashSet<(EntityId, EntityId)>,
    by_subject: HashMap<EntityId, Vec<EntityId>>,
    by_object: HashMap<EntityId, Vec<EntityId>>,
}

impl PairIndex {
    pub fn new(pairs: &[(EntityId, EntityId)]) -> Self {
        let mut idx = PairIndex::default();
        for &(s, o) in pairs {
            if idx.set.insert((s, o)) {
                idx.by_subject.entry(s).or_default().push(o);
                idx.by_object.entry(o).or_default().push(s);
            }
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn contains(&self, pair: (EntityId, EntityId)) -> bool {
        self.set.contains(&pair)
    }

    pub fn objects_of(&self, s: EntityId) -> &[EntityId] {
        self.by_subject.get(&s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn subjects_of(&self, o: EntityId) -> &[EntityId] {
        self.by_object.get(&o).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pairs(&self) -> impl Iterator<Item = &(EntityId, EntityId)> {
        self.set.iter()
    }
}

/// Shared countdown over body groundings.
#[derive(Debug)]
pub(crate) struct Budget {
    remaining: Option<usize>,
    exhausted: bool,
}

impl Budget {
    pub(crate) fn new(max: usize) -> Self {
        Budget {
            remaining: (max > 0).then_some(max),
            exhausted: false,
        }
    }

    fn take(&mut self) -> bool {
        match &mut self.remaining {
            None => true,
            Some(0) => {
                self.exhausted = true;
                false
            }
            Some(n) => {
                *n -= 1;
                true
            }
        }
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.exhausted
    }
}

/// Callback over the bindings of one complete grounding.
pub(crate) type Visit<'a> = dyn FnMut(&[(Var, EntityId)]) + 'a;

/// Variable bindings of one grounding, in binding order.
pub(crate) type Bindings = Vec<(Var, EntityId)>;

pub(crate) fn lookup(b: &[(Var, EntityId)], v: Var) -> Option<EntityId> {
    b.iter().find(|(w, _)| *w == v).map(|(_, e)| *e)
}

fn resolve(b: &[(Var, EntityId)], t: Term) -> Option<EntityId> {
    match t {
        Term::Const(c) => Some(c),
        Term::Var(v) => lookup(b, v),
    }
}

/// Candidate values of a chain's anchor: every entity with an edge of the
/// first step's relation in the right direction, minus the rule constants.
pub(crate) fn anchor_candidates(store: &TripleStore, chain: &Chain, consts: &[EntityId]) -> Vec<EntityId> {
    match chain.anchor {
        Term::Const(c) => vec![c],
        Term::Var(_) => {
            let Some(first) = chain.steps.first() else {
                return Vec::new();
            };
            let cands = if first.forward {
                store.subjects_of(first.pred)
            } else {
                store.objects_of(first.pred)
            };
            cands.iter().copied().filter(|e| !consts.contains(e)).collect()
        }
    }
}

/// Enumerates the groundings of `chain` with its anchor bound to `anchor`.
/// `visit` sees the variable bindings of every complete grounding.
pub(crate) fn walk_chain(
    store: &TripleStore,
    chain: &Chain,
    consts: &[EntityId],
    anchor: EntityId,
    budget: &mut Budget,
    visit: &mut Visit<'_>,
) {
    let mut b: Bindings = Vec::with_capacity(chain.steps.len() + 1);
    match chain.anchor {
        Term::Const(c) => {
            if c != anchor {
                return;
            }
        }
        Term::Var(v) => {
            if consts.contains(&anchor) {
                return;
            }
            b.push((v, anchor));
        }
    }
    descend(store, chain, consts, 0, anchor, &mut b, budget, visit);
}

#[allow(clippy::too_many_arguments)]
fn descend(
    store: &TripleStore,
    chain: &Chain,
    consts: &[EntityId],
    depth: usize,
    current: EntityId,
    b: &mut Bindings,
    budget: &mut Budget,
    visit: &mut Visit<'_>,
) {
    if budget.exhausted {
        return;
    }
    let Some(step) = chain.steps.get(depth) else {
        if budget.take() {
            visit(b);
        }
        return;
    };
    let edge = |next: EntityId| {
        if step.forward {
            store.has_edge(step.pred, current, next)
        } else {
            store.has_edge(step.pred, next, current)
        }
    };
    match step.next {
        Term::Const(c) => {
            if edge(c) {
                descend(store, chain, consts, depth + 1, c, b, budget, visit);
            }
        }
        Term::Var(v) => {
            if let Some(e) = lookup(b, v) {
                if edge(e) {
                    descend(store, chain, consts, depth + 1, e, b, budget, visit);
                }
                return;
            }
            let nexts = if step.forward {
                store.objects(step.pred, current)
            } else {
                store.subjects(step.pred, current)
            };
            for &e in nexts {
                if consts.contains(&e) || b.iter().any(|(_, x)| *x == e) {
                    continue;
                }
                b.push((v, e));
                descend(store, chain, consts, depth + 1, e, b, budget, visit);
                b.pop();
                if budget.exhausted {
                    return;
                }
            }
        }
    }
}

fn intersect_into(acc: &mut Option<Vec<EntityId>>, b: &[(Var, EntityId)]) {
    match acc {
        None => {
            let mut v: Vec<EntityId> = b.iter().map(|(_, e)| *e).collect();
            v.sort_unstable();
            *acc = Some(v);
        }
        Some(v) => v.retain(|e| b.iter().any(|(_, x)| x == e)),
    }
}

/// Head pairs of a rule whose head terms are both fixed by the body, or the
/// per-value exclusion sets when one head variable is free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeadGroundings {
    Pairs(HashSet<(EntityId, EntityId)>),
    /// The head variable at `free_is_object`'s side is free; for every value
    /// `b` of the other head term, entities in `excluded[b]` (and the rule
    /// constants) are not admissible.
    Free {
        free_is_object: bool,
        excluded: HashMap<EntityId, Vec<EntityId>>,
    },
}

/// Quality measures of rules for one target relation.
pub struct Grounder<'a> {
    store: &'a TripleStore,
    target: RelationId,
    train: PairIndex,
    valid: PairIndex,
    cfg: GroundingConfig,
}

impl<'a> Grounder<'a> {
    pub fn new(store: &'a TripleStore, target: RelationId, cfg: GroundingConfig) -> Self {
        Grounder {
            store,
            target,
            train: PairIndex::new(store.instances_of(target, Split::Train)),
            valid: PairIndex::new(store.instances_of(target, Split::Valid)),
            cfg,
        }
    }

    pub fn store(&self) -> &'a TripleStore {
        self.store
    }

    pub fn target(&self) -> RelationId {
        self.target
    }

    pub fn config(&self) -> GroundingConfig {
        self.cfg
    }

    pub fn train_instances(&self) -> &PairIndex {
        &self.train
    }

    pub fn valid_instances(&self) -> &PairIndex {
        &self.valid
    }

    fn measures(&self, supp: u64, groundings: u64, valid_supp: u64, approximate: bool) -> Measures {
        let mut m = Measures::from_counts(supp, groundings, valid_supp, self.train.len(), self.cfg.eta);
        m.approximate = approximate;
        m
    }

    /// Enumerates `g(p)`. The top rule is not supported; its measures are
    /// analytic.
    pub fn head_groundings(&self, rule: &Rule) -> Result<(HeadGroundings, bool), RuleError> {
        let chain = rule.chain()?;
        let consts = rule.constant_set();
        let head = *rule.head();
        let in_body = |t: Term| t.is_var() && rule.body().iter().any(|a| a.contains(t));
        let subj_free = head.subj.is_var() && !in_body(head.subj);
        let obj_free = head.obj.is_var() && !in_body(head.obj);
        if subj_free && obj_free {
            return Err(RuleError::NotChain);
        }
        let mut budget = Budget::new(self.cfg.max_groundings);
        let anchors = anchor_candidates(self.store, &chain, &consts);
        if subj_free || obj_free {
            let bound_term = if obj_free { head.subj } else { head.obj };
            let mut acc: HashMap<EntityId, Option<Vec<EntityId>>> = HashMap::new();
            for a in anchors {
                walk_chain(self.store, &chain, &consts, a, &mut budget, &mut |b| {
                    if let Some(v) = resolve(b, bound_term) {
                        intersect_into(acc.entry(v).or_default(), b);
                    }
                });
                if budget.exhausted() {
                    break;
                }
            }
            let excluded = acc.into_iter().map(|(k, v)| (k, v.unwrap_or_default())).collect();
            return Ok((
                HeadGroundings::Free {
                    free_is_object: obj_free,
                    excluded,
                },
                budget.exhausted(),
            ));
        }
        let mut pairs = HashSet::new();
        for a in anchors {
            walk_chain(self.store, &chain, &consts, a, &mut budget, &mut |b| {
                if let (Some(s), Some(o)) = (resolve(b, head.subj), resolve(b, head.obj)) {
                    pairs.insert((s, o));
                }
            });
            if budget.exhausted() {
                break;
            }
        }
        Ok((HeadGroundings::Pairs(pairs), budget.exhausted()))
    }

    /// `supp`, `hc`, `sc` and `|g|` of a rule for this target.
    pub fn evaluate(&self, rule: &Rule) -> Result<Measures, RuleError> {
        if rule.target() != self.target {
            return Ok(self.measures(0, 0, 0, false));
        }
        if rule.is_top() {
            let n = self.store.num_entities() as u64;
            return Ok(self.measures(self.train.len() as u64, n * n, self.valid.len() as u64, false));
        }
        let (g, approximate) = self.head_groundings(rule)?;
        let m = match g {
            HeadGroundings::Pairs(pairs) => {
                let supp = pairs.iter().filter(|p| self.train.contains(**p)).count();
                let valid = pairs.iter().filter(|p| self.valid.contains(**p)).count();
                self.measures(supp as u64, pairs.len() as u64, valid as u64, approximate)
            }
            HeadGroundings::Free {
                free_is_object,
                excluded,
            } => {
                let consts = rule.constant_set();
                let n = self.store.num_entities() as u64;
                let admissible = |b: EntityId, f: EntityId, ex: &[EntityId]| {
                    f != b && !consts.contains(&f) && ex.binary_search(&f).is_err()
                };
                let count = |idx: &PairIndex| -> u64 {
                    excluded
                        .iter()
                        .map(|(&b, ex)| {
                            let others = if free_is_object {
                                idx.objects_of(b)
                            } else {
                                idx.subjects_of(b)
                            };
                            others.iter().filter(|&&f| admissible(b, f, ex)).count() as u64
                        })
                        .sum()
                };
                let groundings: u64 = excluded
                    .iter()
                    .map(|(&b, ex)| {
                        let mut blocked: HashSet<EntityId> = ex.iter().copied().collect();
                        blocked.extend(consts.iter().copied());
                        blocked.insert(b);
                        n.saturating_sub(blocked.len() as u64)
                    })
                    .sum();
                self.measures(count(&self.train), groundings, count(&self.valid), approximate)
            }
        };
        debug_assert!(m.approximate || m.supp <= m.groundings);
        Ok(m)
    }

    /// HARs and BARs of an X-anchored OAR with measures from one shared
    /// grounding pass. Only rules with at least one supporting training
    /// instance are produced. At most `cap` HARs (by support) and `cap` BARs
    /// per HAR are kept; `0` means no cap.
    pub fn specialize(&self, oar: &Rule, cap: usize) -> Result<Specialization, RuleError> {
        let (har_t, bar_t) = specialize_templates(oar)?;
        let chain = oar.chain()?;
        if chain.anchor != Term::X {
            return Err(RuleError::NotChain);
        }
        let Term::Var(end_var) = chain.end() else {
            return Err(RuleError::NotChain);
        };
        let mut budget = Budget::new(self.cfg.max_groundings);
        let mut anchors: HashMap<EntityId, AnchorInfo> = HashMap::new();
        for x in anchor_candidates(self.store, &chain, &[]) {
            let mut info = AnchorInfo::default();
            let mut ends: HashMap<EntityId, Option<Vec<EntityId>>> = HashMap::new();
            walk_chain(self.store, &chain, &[], x, &mut budget, &mut |b| {
                intersect_into(&mut info.inter, b);
                let d = lookup(b, end_var).expect("end variable bound");
                intersect_into(ends.entry(d).or_default(), b);
            });
            if info.inter.is_some() {
                let mut ends: Vec<(EntityId, Vec<EntityId>)> =
                    ends.into_iter().map(|(d, i)| (d, i.unwrap_or_default())).collect();
                ends.sort_unstable_by_key(|(d, _)| *d);
                info.ends = ends;
                anchors.insert(x, info);
            }
            if budget.exhausted() {
                break;
            }
        }
        let approximate = budget.exhausted();

        // |g(HAR c)| = |X| - #{x : c ∈ I_x}
        let mut har_blocked: HashMap<EntityId, u64> = HashMap::new();
        // |g(BAR c,d)| = |X_d| - #{x ∈ X_d : c ∈ I_{x,d}}
        let mut end_count: HashMap<EntityId, u64> = HashMap::new();
        let mut bar_blocked: HashMap<(EntityId, EntityId), u64> = HashMap::new();
        for info in anchors.values() {
            for &e in info.inter() {
                *har_blocked.entry(e).or_default() += 1;
            }
            for (d, inter) in &info.ends {
                *end_count.entry(*d).or_default() += 1;
                for &e in inter {
                    *bar_blocked.entry((*d, e)).or_default() += 1;
                }
            }
        }

        let tally = |idx: &PairIndex| {
            let mut har: HashMap<EntityId, u64> = HashMap::new();
            let mut bar: HashMap<(EntityId, EntityId), u64> = HashMap::new();
            for &(x, c) in idx.pairs() {
                let Some(info) = anchors.get(&x) else { continue };
                if x == c || info.inter().binary_search(&c).is_ok() {
                    continue;
                }
                *har.entry(c).or_default() += 1;
                for (d, inter) in &info.ends {
                    if inter.binary_search(&c).is_err() {
                        *bar.entry((c, *d)).or_default() += 1;
                    }
                }
            }
            (har, bar)
        };
        let (har_supp, bar_supp) = tally(&self.train);
        let (har_valid, bar_valid) = tally(&self.valid);

        let mut hars: Vec<(EntityId, u64)> = har_supp.into_iter().collect();
        hars.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut bars_of: HashMap<EntityId, Vec<(EntityId, u64)>> = HashMap::new();
        for ((c, d), s) in bar_supp {
            bars_of.entry(c).or_default().push((d, s));
        }
        let mut truncated = false;
        if cap > 0 && hars.len() > cap {
            hars.truncate(cap);
            truncated = true;
        }
        let n_anchors = anchors.len() as u64;
        let mut rules = Vec::new();
        for (c, supp) in hars {
            let g = n_anchors - har_blocked.get(&c).copied().unwrap_or(0);
            let valid = har_valid.get(&c).copied().unwrap_or(0);
            rules.push(SpecializedRule {
                rule: instantiate(&har_t, &[c])?,
                measures: self.measures(supp, g, valid, approximate),
            });
            let mut bars = bars_of.remove(&c).unwrap_or_default();
            bars.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            if cap > 0 && bars.len() > cap {
                bars.truncate(cap);
                truncated = true;
            }
            for (d, supp) in bars {
                let g = end_count[&d] - bar_blocked.get(&(d, c)).copied().unwrap_or(0);
                let valid = bar_valid.get(&(c, d)).copied().unwrap_or(0);
                rules.push(SpecializedRule {
                    rule: instantiate(&bar_t, &[c, d])?,
                    measures: self.measures(supp, g, valid, approximate),
                });
            }
        }
        Ok(Specialization {
            rules,
            truncated,
            approximate,
        })
    }
}

#[derive(Default)]
struct AnchorInfo {
    inter: Option<Vec<EntityId>>,
    ends: Vec<(EntityId, Vec<EntityId>)>,
}

impl AnchorInfo {
    fn inter(&self) -> &[EntityId] {
        self.inter.as_deref().unwrap_or(&[])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecializedRule {
    pub rule: Rule,
    pub measures: Measures,
}

/// Output of [`Grounder::specialize`]: each HAR is followed by its BARs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Specialization {
    pub rules: Vec<SpecializedRule>,
    /// Some rules were dropped by the cap.
    pub truncated: bool,
    pub approximate: bool,
}

impl Specialization {
    pub fn hars(&self) -> impl Iterator<Item = &SpecializedRule> {
        self.rules.iter().filter(|r| r.rule.kind() == RuleKind::Har)
    }

    pub fn bars(&self) -> impl Iterator<Item = &SpecializedRule> {
        self.rules.iter().filter(|r| r.rule.kind() == RuleKind::Bar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::parse_rule;
    use crate::toy::advising_graph;

    fn store_of(triples: &[(&str, &str, &str)]) -> TripleStore {
        let mut s = TripleStore::new();
        for (h, r, t) in triples {
            s.add(Split::Train, h, r, t).unwrap();
        }
        s
    }

    fn grounder<'a>(s: &'a TripleStore, target: &str) -> Grounder<'a> {
        Grounder::new(s, s.vocab().relation_id(target).unwrap(), GroundingConfig::default())
    }

    #[test]
    fn three_triple_example() {
        let mut s = store_of(&[("a", "r_t", "b"), ("a", "r0", "c"), ("b", "r0", "c")]);
        let rule = parse_rule("r_t(X,Y) <- r0(X,V0), r0(Y,V0)", s.vocab_mut()).unwrap();
        let g = grounder(&s, "r_t");
        let (hg, _) = g.head_groundings(&rule).unwrap();
        let (a, b) = (s.vocab().entity_id("a").unwrap(), s.vocab().entity_id("b").unwrap());
        assert_eq!(hg, HeadGroundings::Pairs([(a, b), (b, a)].into()));
        let m = g.evaluate(&rule).unwrap();
        assert_eq!((m.supp, m.groundings), (1, 2));
        assert_eq!(m.hc, 1.0);
        assert!((m.sc - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn absent_predicate_gives_zero() {
        let mut s = advising_graph();
        let rule = parse_rule("Advises(X,Y) <- Cites(X,Y)", s.vocab_mut()).unwrap();
        let m = grounder(&s, "Advises").evaluate(&rule).unwrap();
        assert_eq!((m.supp, m.groundings, m.hc, m.sc), (0, 0, 0.0, 0.0));
    }

    #[test]
    fn top_rule_is_analytic() {
        let s = advising_graph();
        let r = s.vocab().relation_id("Advises").unwrap();
        let m = grounder(&s, "Advises").evaluate(&Rule::top(r)).unwrap();
        assert_eq!(m.supp, 1);
        assert_eq!(m.hc, 1.0);
        assert_eq!(m.groundings, 25);
    }

    #[test]
    fn free_head_variable_counts() {
        // Advises(X,Y) <- Is_A(X,V0): anchors alice and bob; each grounding
        // binds {x, type}, so 5 - 2 admissible objects per anchor.
        let mut s = advising_graph();
        let rule = parse_rule("Advises(X,Y) <- Is_A(X,V0)", s.vocab_mut()).unwrap();
        let m = grounder(&s, "Advises").evaluate(&rule).unwrap();
        assert_eq!(m.groundings, 6);
        assert_eq!(m.supp, 1);
    }

    #[test]
    fn object_identity_blocks_constants() {
        let mut s = store_of(&[("a", "t", "b"), ("a", "p", "b"), ("a", "p", "c")]);
        // V0 may not bind b, the head constant
        let har = parse_rule("t(X,b) <- p(X,V0)", s.vocab_mut()).unwrap();
        let g = grounder(&s, "t");
        let m = g.evaluate(&har).unwrap();
        assert_eq!((m.supp, m.groundings), (1, 1));
        let only_b = store_of(&[("a", "t", "b"), ("a", "p", "b")]);
        let mut v = only_b.vocab().clone();
        let har = parse_rule("t(X,b) <- p(X,V0)", &mut v).unwrap();
        assert_eq!(grounder(&only_b, "t").evaluate(&har).unwrap().groundings, 0);
    }

    #[test]
    fn cap_marks_approximate() {
        let mut s = advising_graph();
        let rule = parse_rule("Advises(X,Y) <- Publishes(X,V0), Publishes(Y,V0)", s.vocab_mut()).unwrap();
        let r = s.vocab().relation_id("Advises").unwrap();
        let capped = Grounder::new(
            &s,
            r,
            GroundingConfig {
                eta: 5.0,
                max_groundings: 1,
            },
        );
        assert!(capped.evaluate(&rule).unwrap().approximate);
        assert!(!grounder(&s, "Advises").evaluate(&rule).unwrap().approximate);
    }

    #[test]
    fn specialization_of_is_a_oar() {
        let mut s = advising_graph();
        let oar = parse_rule("Advises(X,Y) <- Is_A(X,V0)", s.vocab_mut()).unwrap();
        let spec = grounder(&s, "Advises").specialize(&oar, 0).unwrap();
        let texts: Vec<String> = spec
            .rules
            .iter()
            .map(|r| r.rule.display(s.vocab()).to_string())
            .collect();
        assert_eq!(
            texts,
            vec!["Advises(X,bob) <- Is_A(X,V0)", "Advises(X,bob) <- Is_A(X,professor)"]
        );
        // x = bob cannot pair with the head constant bob
        let har = &spec.rules[0].measures;
        assert_eq!((har.supp, har.groundings), (1, 1));
        let bar = &spec.rules[1].measures;
        assert_eq!((bar.supp, bar.groundings), (1, 1));
        assert!(!spec.truncated);
    }

    #[test]
    fn specialization_errors_and_empty() {
        let mut s = advising_graph();
        let car = parse_rule("Advises(X,Y) <- Publishes(X,V0), Publishes(Y,V0)", s.vocab_mut()).unwrap();
        let g = grounder(&s, "Advises");
        assert!(matches!(g.specialize(&car, 0), Err(RuleError::InvalidKind { .. })));
        let mut s2 = advising_graph();
        let none = parse_rule("Advises(X,Y) <- Cites(X,V0)", s2.vocab_mut()).unwrap();
        assert!(grounder(&s2, "Advises").specialize(&none, 0).unwrap().rules.is_empty());
    }

    #[test]
    fn specialization_cap() {
        let mut s = store_of(&[
            ("a", "t", "b"),
            ("c", "t", "d"),
            ("a", "p", "e"),
            ("a", "p", "f"),
            ("c", "p", "e"),
        ]);
        let oar = parse_rule("t(X,Y) <- p(X,V0)", s.vocab_mut()).unwrap();
        let g = grounder(&s, "t");
        let full = g.specialize(&oar, 0).unwrap();
        assert_eq!(full.hars().count(), 2);
        assert_eq!(full.bars().count(), 3);
        let one = g.specialize(&oar, 1).unwrap();
        assert!(one.rules.len() <= 2);
        assert_eq!(one.hars().count(), 1);
        assert!(one.truncated);
    }

    #[test]
    fn specialization_matches_generic_evaluation() {
        let mut s = store_of(&[
            ("a", "t", "b"),
            ("c", "t", "b"),
            ("a", "p", "e"),
            ("e", "q", "b"),
            ("e", "q", "f"),
            ("c", "p", "e"),
            ("c", "p", "b"),
            ("b", "q", "f"),
        ]);
        for text in ["t(X,Y) <- p(X,V0)", "t(X,Y) <- p(X,V0), q(V0,V1)"] {
            let oar = parse_rule(text, s.vocab_mut()).unwrap();
            let g = grounder(&s, "t");
            let spec = g.specialize(&oar, 0).unwrap();
            assert!(!spec.rules.is_empty());
            for r in &spec.rules {
                assert_eq!(
                    g.evaluate(&r.rule).unwrap(),
                    r.measures,
                    "{}",
                    r.rule.display(s.vocab())
                );
            }
        }
    }
}
