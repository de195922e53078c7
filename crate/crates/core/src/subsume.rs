//! Subsumption deciders over chain rules.
//!
//! * [`theta_subsumes`]: plain θ-subsumption by exhaustive atom assignment.
//!   Exponential; kept as a test oracle.
//! * [`oi_subsumes`]: θ-subsumption under object identity, decided by
//!   eliminating atoms of `p` against the skolemized `q` with backtracking.
//! * [`sa_subsumes`]: one positional pass, `p[i]θ = q[i]` for head and body.
//! * [`sa_subsumes_complete`]: positional pass on `q` or its reversed body.
//! * [`a_subsumes`] / [`i_subsumes`]: single atom addition or single
//!   variable instantiation steps.
//!
//! Atom index 0 is the head; body atoms occupy `1..=len`.

use crate::rule::{Atom, Rule, Term, Var};
use crate::store::EntityId;

/// Variable bindings built during a subsumption test.
#[derive(Clone, Debug, Default)]
pub struct Substitution {
    map: Vec<(Var, Term)>,
}

impl Substitution {
    pub fn get(&self, v: Var) -> Option<Term> {
        self.map.iter().find(|(w, _)| *w == v).map(|(_, t)| *t)
    }

    pub fn bindings(&self) -> &[(Var, Term)] {
        &self.map
    }

    fn is_image(&self, t: Term) -> bool {
        self.map.iter().any(|(_, u)| *u == t)
    }

    fn len(&self) -> usize {
        self.map.len()
    }

    fn truncate(&mut self, n: usize) {
        self.map.truncate(n);
    }

    fn push(&mut self, v: Var, t: Term) {
        self.map.push((v, t));
    }
}

/// Binding state for the injective deciders. `p`'s own constants count as
/// taken images so no variable can be merged with them.
struct Injective<'a> {
    sub: Substitution,
    reserved: &'a [EntityId],
}

impl<'a> Injective<'a> {
    fn new(reserved: &'a [EntityId]) -> Self {
        Injective {
            sub: Substitution::default(),
            reserved,
        }
    }

    fn unify_term(&mut self, pt: Term, qt: Term) -> bool {
        match pt {
            Term::Const(_) => pt == qt,
            Term::Var(v) => match self.sub.get(v) {
                Some(bound) => bound == qt,
                None => {
                    if self.sub.is_image(qt) || qt.as_const().is_some_and(|c| self.reserved.contains(&c)) {
                        return false;
                    }
                    self.sub.push(v, qt);
                    true
                }
            },
        }
    }

    fn unify_atom(&mut self, pa: &Atom, qa: &Atom) -> bool {
        pa.pred == qa.pred && self.unify_term(pa.subj, qa.subj) && self.unify_term(pa.obj, qa.obj)
    }
}

/// Positional subsumption: `|p| ≤ |q|` and `p[i]θ = q[i]` for every `i`
/// under an injective `θ`, in a single pass.
pub fn sa_subsumes(p: &Rule, q: &Rule) -> bool {
    if p.body_length() > q.body_length() {
        return false;
    }
    let reserved = p.constant_set();
    let mut state = Injective::new(&reserved);
    (0..=p.body_length()).all(|i| state.unify_atom(p.atom(i), q.atom(i)))
}

/// [`sa_subsumes`] against `q` or against `q` with its body reversed.
pub fn sa_subsumes_complete(p: &Rule, q: &Rule) -> bool {
    sa_subsumes(p, q) || (q.body_length() > 1 && sa_subsumes(p, &q.reverse_body()))
}

/// OI-subsumption: skolemize `q`, then eliminate `p`'s atoms left to right
/// against atoms of `S(q)`, backtracking on failure.
pub fn oi_subsumes(p: &Rule, q: &Rule) -> bool {
    oi_substitution(p, q).is_some()
}

/// The injective substitution found by [`oi_subsumes`], if any.
pub fn oi_substitution(p: &Rule, q: &Rule) -> Option<Substitution> {
    if p.target() != q.target() {
        return None;
    }
    let sq = q.skolemize();
    let reserved = p.constant_set();
    let mut state = Injective::new(&reserved);
    if !state.unify_atom(p.head(), sq.head()) {
        return None;
    }
    if eliminate(p.body(), sq.body(), &mut state) {
        Some(state.sub)
    } else {
        None
    }
}

fn eliminate(rest: &[Atom], target: &[Atom], state: &mut Injective<'_>) -> bool {
    let Some((first, rest)) = rest.split_first() else {
        return true;
    };
    for candidate in target.iter().filter(|a| a.pred == first.pred) {
        let mark = state.sub.len();
        if state.unify_atom(first, candidate) && eliminate(rest, target, state) {
            return true;
        }
        state.sub.truncate(mark);
    }
    false
}

/// θ-subsumption (variables may share images). Enumerates every
/// assignment of `p`'s body atoms to atoms of `S(q)`.
pub fn theta_subsumes(p: &Rule, q: &Rule) -> bool {
    if p.target() != q.target() {
        return false;
    }
    let sq = q.skolemize();
    let n = p.body_length();
    let m = sq.body_length();
    if n > 0 && m == 0 {
        return false;
    }
    let total = (m.max(1) as u64).pow(n as u32);
    (0..total).any(|mut code| {
        let mut pairs = vec![(*p.head(), *sq.head())];
        for a in p.body() {
            pairs.push((*a, sq.body()[(code % m as u64) as usize]));
            code /= m as u64;
        }
        consistent(&pairs)
    })
}

fn consistent(pairs: &[(Atom, Atom)]) -> bool {
    let mut sub: Vec<(Var, Term)> = Vec::new();
    let mut unify = |pt: Term, qt: Term| match pt {
        Term::Const(_) => pt == qt,
        Term::Var(v) => match sub.iter().find(|(w, _)| *w == v) {
            Some((_, t)) => *t == qt,
            None => {
                sub.push((v, qt));
                true
            }
        },
    };
    pairs
        .iter()
        .all(|(pa, qa)| pa.pred == qa.pred && unify(pa.subj, qa.subj) && unify(pa.obj, qa.obj))
}

/// Atom addition: SA-subsumption with equal deduction level and exactly one
/// more body atom in `q`.
pub fn a_subsumes(p: &Rule, q: &Rule) -> bool {
    q.body_length() == p.body_length() + 1 && p.deduction_level() == q.deduction_level() && sa_subsumes(p, q)
}

/// Variable instantiation: SA-subsumption with equal length and exactly one
/// more constant in `q`.
pub fn i_subsumes(p: &Rule, q: &Rule) -> bool {
    q.body_length() == p.body_length() && q.deduction_level() == p.deduction_level() + 1 && sa_subsumes(p, q)
}

/// The instantiation condition with the level inequality read literally as
/// `d(p) = d(q) + 1`. Only used to show that reading admits no edges
/// between a rule and its instantiations.
pub fn i_subsumes_literal(p: &Rule, q: &Rule) -> bool {
    q.body_length() == p.body_length() && p.deduction_level() == q.deduction_level() + 1 && sa_subsumes(p, q)
}

/// Outcome of every decider on one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeciderReport {
    pub theta: bool,
    pub oi: bool,
    pub sa: bool,
    pub sa_complete: bool,
    pub a: bool,
    pub i: bool,
}

impl DeciderReport {
    pub fn of(p: &Rule, q: &Rule) -> Self {
        DeciderReport {
            theta: theta_subsumes(p, q),
            oi: oi_subsumes(p, q),
            sa: sa_subsumes(p, q),
            sa_complete: sa_subsumes_complete(p, q),
            a: a_subsumes(p, q),
            i: i_subsumes(p, q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::parse_rule;
    use crate::store::Vocab;
    use crate::toy::worked_rules;

    #[test]
    fn theta_worked_examples() {
        let mut v = Vocab::new();
        let w = worked_rules(&mut v);
        assert!(theta_subsumes(&w.p4, &w.p4));
        assert!(theta_subsumes(&w.p9, &w.p11));
        assert!(theta_subsumes(&w.p8, &w.p4));
    }

    #[test]
    fn theta_p5_p6() {
        let mut v = Vocab::new();
        let w = worked_rules(&mut v);
        // p5 is anchored at X and p6 at Y, so the heads pin X and no
        // substitution reaches Is_A(Y,student)
        assert!(!theta_subsumes(&w.p5, &w.p6));
        let y_side = parse_rule("Advises(X,Y) <- Is_A(Y,V1)", &mut v).unwrap();
        assert!(theta_subsumes(&y_side, &w.p6));
        let sub = oi_substitution(&y_side, &w.p6).unwrap();
        let student = v.entity_id("student").unwrap();
        assert_eq!(sub.get(Var::fresh(0)), Some(Term::Const(student)));
    }

    #[test]
    fn oi_worked_examples() {
        let mut v = Vocab::new();
        let w = worked_rules(&mut v);
        assert!(!oi_subsumes(&w.p9, &w.p10));
        assert!(oi_subsumes(&w.p8, &w.p4));
        assert!(oi_subsumes(&w.p7, &w.p8));
        assert!(oi_subsumes(&w.p7, &w.p4));
        assert!(oi_subsumes(&w.p9, &w.p11));
    }

    #[test]
    fn oi_rejects_identity_merge() {
        let mut v = Vocab::new();
        let oar = parse_rule("r(X,Y) <- s(X,V1)", &mut v).unwrap();
        let car = parse_rule("r(X,Y) <- s(X,Y)", &mut v).unwrap();
        assert!(!oi_subsumes(&oar, &car));
        assert!(theta_subsumes(&oar, &car));
        assert!(!sa_subsumes(&oar, &car));
    }

    #[test]
    fn constant_merge_is_rejected() {
        let mut v = Vocab::new();
        let p = parse_rule("r(X,c) <- s(X,V0)", &mut v).unwrap();
        let q = parse_rule("r(X,c) <- s(X,c)", &mut v).unwrap();
        assert!(!sa_subsumes(&p, &q));
        assert!(!oi_subsumes(&p, &q));
        assert!(theta_subsumes(&p, &q));
    }

    #[test]
    fn sa_worked_examples() {
        let mut v = Vocab::new();
        let w = worked_rules(&mut v);
        assert!(sa_subsumes(&w.p7, &w.p8));
        assert!(sa_subsumes(&w.p8, &w.p4));
        assert!(!sa_subsumes(&w.p9, &w.p10));
        assert!(!sa_subsumes(&w.p9, &w.p11));
        assert!(sa_subsumes(&w.p9, &w.p12));
        assert!(sa_subsumes_complete(&w.p9, &w.p11));
        assert!(sa_subsumes_complete(&w.p4, &w.p4));
    }

    #[test]
    fn a_and_i_examples() {
        let mut v = Vocab::new();
        let w = worked_rules(&mut v);
        assert!(a_subsumes(&w.p7, &w.p8));
        assert!(a_subsumes(&w.p8, &w.p4));
        assert!(!a_subsumes(&w.p7, &w.p4));

        let oar = parse_rule("A(X,Y) <- P(Y,V0)", &mut v).unwrap();
        let fig = parse_rule("A(X,bob) <- P(bob,V0)", &mut v).unwrap();
        assert!(i_subsumes(&oar, &fig));
        assert!(!i_subsumes_literal(&oar, &fig));
        assert!(!a_subsumes(&oar, &fig));

        let x_oar = parse_rule("A(X,Y) <- I(X,V0)", &mut v).unwrap();
        let har = parse_rule("A(X,bob) <- I(X,V0)", &mut v).unwrap();
        let bar = parse_rule("A(X,bob) <- I(X,student)", &mut v).unwrap();
        assert!(i_subsumes(&har, &bar));
        assert!(i_subsumes(&x_oar, &har));
        assert!(!i_subsumes(&x_oar, &bar));
        assert!(sa_subsumes(&x_oar, &bar));
        // the top rule reaches this HAR only through the intermediate OAR
        let top = parse_rule("A(X,Y) <-", &mut v).unwrap();
        assert!(sa_subsumes(&top, &fig));
        assert!(!a_subsumes(&top, &fig) && !i_subsumes(&top, &fig));
    }

    #[test]
    fn different_targets_never_subsume() {
        let mut v = Vocab::new();
        let p = parse_rule("r(X,Y) <-", &mut v).unwrap();
        let q = parse_rule("s(X,Y) <-", &mut v).unwrap();
        let report = DeciderReport::of(&p, &q);
        assert!(!(report.theta || report.oi || report.sa || report.sa_complete));
    }
}
