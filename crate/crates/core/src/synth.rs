//! Seeded generators for property tests and benchmarks: random connected,
//! straight chain rules, continuity-closed rule sets, and small knowledge
//! graphs with planted regularities.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rule::{Atom, Rule, Term};
use crate::store::{EntityId, RelationId, Split, SplitConfig, TripleStore, Vocab};

/// Symbol pools for random rules.
#[derive(Clone, Debug)]
pub struct RuleAlphabet {
    pub predicates: Vec<RelationId>,
    pub constants: Vec<EntityId>,
    pub max_len: usize,
}

impl RuleAlphabet {
    /// `p0..p{preds-1}` and `c0..c{consts-1}` interned into `vocab`.
    pub fn new(vocab: &mut Vocab, preds: usize, consts: usize, max_len: usize) -> Self {
        RuleAlphabet {
            predicates: (0..preds).map(|i| vocab.relation(&format!("p{i}"))).collect(),
            constants: (0..consts).map(|i| vocab.entity(&format!("c{i}"))).collect(),
            max_len,
        }
    }
}

fn oriented(pred: RelationId, from: Term, to: Term, forward: bool) -> Atom {
    if forward {
        Atom::new(pred, from, to)
    } else {
        Atom::new(pred, to, from)
    }
}

/// A random connected, straight rule whose body is a chain from one head
/// term. Head terms may be constants; body terms are fresh variables or
/// distinct constants, and the chain may close on the other head term.
pub fn random_rule<R: Rng>(rng: &mut R, a: &RuleAlphabet) -> Rule {
    loop {
        let len = rng.gen_range(0..=a.max_len);
        let mut consts: Vec<EntityId> = a.constants.clone();
        consts.shuffle(rng);
        let mut take_const = || consts.pop();
        let head_pred = *a.predicates.choose(rng).expect("predicates");
        let anchor_is_subject = len == 0 || rng.gen_bool(0.7);
        let mut subj = Term::X;
        let mut obj = Term::Y;
        if rng.gen_bool(0.15) {
            if let Some(c) = take_const() {
                subj = Term::Const(c);
            }
        }
        if rng.gen_bool(0.3) {
            if let Some(c) = take_const() {
                obj = Term::Const(c);
            }
        }
        let (anchor, other) = if anchor_is_subject { (subj, obj) } else { (obj, subj) };
        let mut body = Vec::with_capacity(len);
        let mut prev = anchor;
        for i in 0..len {
            let last = i + 1 == len;
            let next = if last && rng.gen_bool(0.4) {
                other
            } else if rng.gen_bool(0.25) {
                match take_const() {
                    Some(c) => Term::Const(c),
                    None => Term::v(i as u32),
                }
            } else {
                Term::v(i as u32)
            };
            let pred = *a.predicates.choose(rng).expect("predicates");
            body.push(oriented(pred, prev, next, rng.gen_bool(0.5)));
            prev = next;
        }
        let rule = Rule::new(Atom::new(head_pred, subj, obj), body);
        if rule.is_connected() && rule.is_straight() {
            return rule;
        }
    }
}

/// A random generalization of `q`: trailing body atoms dropped and some
/// constants turned back into variables.
pub fn random_generalization<R: Rng>(rng: &mut R, q: &Rule) -> Rule {
    let keep = rng.gen_range(0..=q.body_length());
    let mut body: Vec<Atom> = q.body()[..keep].to_vec();
    let mut head = *q.head();
    let mut next_var = 1000u32;
    for c in q.constant_set() {
        if !rng.gen_bool(0.5) {
            continue;
        }
        let replacement = if head.subj == Term::Const(c) && !q.terms().any(|t| t == Term::X) {
            Term::X
        } else if head.obj == Term::Const(c) && !q.terms().any(|t| t == Term::Y) {
            Term::Y
        } else if head.subj == Term::Const(c) || head.obj == Term::Const(c) {
            continue;
        } else {
            next_var += 1;
            Term::v(next_var)
        };
        let sub = |t: Term| if t == Term::Const(c) { replacement } else { t };
        head = Atom::new(head.pred, sub(head.subj), sub(head.obj));
        for at in &mut body {
            *at = Atom::new(at.pred, sub(at.subj), sub(at.obj));
        }
    }
    Rule::new(head, body)
}

/// A pair `(p, q)` where half the time `p` generalizes `q`.
pub fn random_rule_pair<R: Rng>(rng: &mut R, a: &RuleAlphabet) -> (Rule, Rule) {
    let q = random_rule(rng, a);
    let p = if rng.gen_bool(0.5) {
        random_generalization(rng, &q)
    } else {
        random_rule(rng, a)
    };
    (p, q)
}

/// A rule set closed under taking body prefixes and under dropping
/// constants, for one target: random X-anchored chains with all their
/// prefixes, some closed on `Y`, plus HAR/BAR specializations of some of the
/// open ones. At most `max_rules` rules.
pub fn continuity_closed_set<R: Rng>(rng: &mut R, a: &RuleAlphabet, max_rules: usize) -> Vec<Rule> {
    let target = a.predicates[0];
    let mut set = BTreeSet::new();
    set.insert(Rule::top(target));
    let mut tries = 0;
    while set.len() < max_rules && tries < 4 * max_rules {
        tries += 1;
        let len = rng.gen_range(1..=a.max_len.max(1));
        let closed = rng.gen_bool(0.3);
        let mut body = Vec::new();
        let mut new_rules = Vec::new();
        for i in 0..len {
            let prev = if i == 0 { Term::X } else { Term::v(i as u32 - 1) };
            let last = i + 1 == len;
            let next = if last && closed { Term::Y } else { Term::v(i as u32) };
            let pred = *a.predicates.choose(rng).expect("predicates");
            body.push(oriented(pred, prev, next, rng.gen_bool(0.5)));
            let rule = Rule::new(Atom::new(target, Term::X, Term::Y), body.clone());
            if !(last && closed) && rng.gen_bool(0.4) && a.constants.len() >= 2 {
                let mut cs = a.constants.clone();
                cs.shuffle(rng);
                let (c, d) = (cs[0], cs[1]);
                let end = crate::rule::Var(2 + i as u32);
                if let Ok(har) = rule.substitute(&[(crate::rule::Var::Y, c)]) {
                    new_rules.push(har);
                }
                if rng.gen_bool(0.6) {
                    if let Ok(bar) = rule.substitute(&[(crate::rule::Var::Y, c), (end, d)]) {
                        new_rules.push(bar);
                    }
                }
            }
            new_rules.push(rule);
        }
        if set.len() + new_rules.len() > max_rules {
            break;
        }
        set.extend(new_rules);
    }
    set.into_iter().collect()
}

/// Size knobs of [`random_kg`].
#[derive(Clone, Copy, Debug)]
pub struct KgParams {
    pub entities: usize,
    pub max_triples: usize,
    pub seed: u64,
}

/// A small graph over `target` with planted regularities: typed entities
/// whose type predicts a link to a hub, a two-step composition that
/// implies the target, and random noise edges. Everything is in train;
/// use [`random_split_kg`] for a 6:2:2 split.
pub fn random_kg<R: Rng>(rng: &mut R, p: KgParams) -> TripleStore {
    let mut s = TripleStore::new();
    let n = p.entities.max(6);
    let name = |i: usize| format!("e{i}");
    let types = 3;
    let add = |s: &mut TripleStore, h: &str, r: &str, t: &str| {
        if s.total_len() < p.max_triples && h != t {
            let _ = s.add(Split::Train, h, r, t);
        }
    };
    let mut type_of = vec![0usize; n];
    for (i, ty) in type_of.iter_mut().enumerate() {
        *ty = rng.gen_range(0..types);
        if rng.gen_bool(0.9) {
            add(&mut s, &name(i), "is_a", &format!("type{ty}"));
        }
    }
    for (i, &ty) in type_of.iter().enumerate() {
        let (hub, prob) = match ty {
            0 => ("hub0", 0.7),
            1 => ("hub0", 0.2),
            _ => ("hub1", 0.5),
        };
        if rng.gen_bool(prob) {
            add(&mut s, &name(i), "target", hub);
        }
    }
    let mut r1 = Vec::new();
    for _ in 0..n {
        let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
        if a == b || b == c || a == c {
            continue;
        }
        add(&mut s, &name(a), "r1", &name(b));
        add(&mut s, &name(b), "r2", &name(c));
        r1.push((a, c));
    }
    for (a, c) in r1 {
        if rng.gen_bool(0.6) {
            add(&mut s, &name(a), "target", &name(c));
        }
    }
    let noise = ["r1", "r2", "r3", "target"];
    let mut guard = 0;
    while s.total_len() < p.max_triples && guard < 10 * p.max_triples {
        guard += 1;
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        let r = noise.choose(rng).expect("noise relations");
        add(&mut s, &name(a), r, &name(b));
    }
    s
}

/// [`random_kg`] re-split 6:2:2 with the same seed.
pub fn random_split_kg(p: KgParams) -> TripleStore {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(p.seed);
    let kg = random_kg(&mut rng, p);
    kg.resplit(&SplitConfig {
        ratios: [0.6, 0.2, 0.2],
        seed: p.seed,
    })
    .expect("non-empty graph")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::RuleKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_rules_are_connected_and_straight() {
        let mut v = Vocab::new();
        let a = RuleAlphabet::new(&mut v, 5, 6, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lens = BTreeSet::new();
        for _ in 0..2000 {
            let (p, q) = random_rule_pair(&mut rng, &a);
            for r in [&p, &q] {
                assert!(r.is_connected() && r.is_straight(), "{}", r.display(&v));
                lens.insert(r.body_length());
            }
        }
        assert_eq!(lens, (0..=4).collect());
    }

    #[test]
    fn closed_sets_have_their_generalizations() {
        let mut v = Vocab::new();
        let a = RuleAlphabet::new(&mut v, 5, 6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let set = continuity_closed_set(&mut rng, &a, 50);
            assert!(set.len() <= 50);
            for r in &set {
                assert!(matches!(
                    r.kind(),
                    RuleKind::Car | RuleKind::Oar | RuleKind::Har | RuleKind::Bar
                ));
                if r.body_length() > 0 && r.deduction_level() == 0 {
                    let mut body = r.body().to_vec();
                    body.pop();
                    assert!(set.contains(&Rule::new(*r.head(), body)));
                }
            }
        }
    }

    #[test]
    fn kg_respects_size_and_seed() {
        let p = KgParams {
            entities: 30,
            max_triples: 150,
            seed: 7,
        };
        let a = random_split_kg(p);
        let b = random_split_kg(p);
        assert!(a.total_len() <= 150);
        assert!(a.len(Split::Train) > 0 && a.len(Split::Test) > 0);
        assert_eq!(a.triples(Split::Test), b.triples(Split::Test));
    }
}
