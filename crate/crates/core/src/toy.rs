//! The small advising graph used throughout the docs and tests, and the
//! named rules of its worked examples.

use crate::rule::{parse_rule, Rule};
use crate::store::{Split, TripleStore, Vocab};

/// `alice` advises `bob`; both published `paper`; `alice` is a professor
/// and `bob` a student.
pub fn advising_graph() -> TripleStore {
    let mut store = TripleStore::new();
    for (h, r, t) in [
        ("alice", "Advises", "bob"),
        ("alice", "Publishes", "paper"),
        ("bob", "Publishes", "paper"),
        ("alice", "Is_A", "professor"),
        ("bob", "Is_A", "student"),
    ] {
        store.add(Split::Train, h, r, t).expect("toy triple");
    }
    store
}

/// Named rules of the worked examples, parsed into `vocab`.
pub struct WorkedRules {
    pub p4: Rule,
    pub p5: Rule,
    pub p6: Rule,
    pub p7: Rule,
    pub p8: Rule,
    pub p9: Rule,
    pub p10: Rule,
    pub p11: Rule,
    pub p12: Rule,
}

pub fn worked_rules(vocab: &mut Vocab) -> WorkedRules {
    let mut p = |s: &str| parse_rule(s, vocab).expect("worked rule parses");
    WorkedRules {
        p4: p("Advises(X,Y) <- Publishes(X,V0), Publishes(Y,V0)"),
        p5: p("Advises(X,Y) <- Is_A(X,V1)"),
        p6: p("Advises(X,Y) <- Is_A(Y,student)"),
        p7: p("Advises(X,Y) <-"),
        p8: p("Advises(X,Y) <- Publishes(X,V0)"),
        p9: p("r_t(X,Y) <- r0(X,V0)"),
        p10: p("r_t(X,Y) <- r1(X,V0), r0(V0,V1), r0(V1,V2)"),
        p11: p("r_t(X,Y) <- r0(Y,V0), r1(V0,V1), r0(X,V1)"),
        p12: p("r_t(X,Y) <- r0(X,V1), r1(V0,V1), r0(Y,V0)"),
    }
}
