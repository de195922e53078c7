//! Link prediction with learned rules: candidates are ranked by the sorted
//! vector of smooth confidences of the rules suggesting them (maximum
//! aggregation), in the filtered setting.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use crate::ground::{anchor_candidates, walk_chain, Budget};
use crate::miner::LearnedRule;
use crate::par::{self, Execution};
use crate::rule::{Chain, Rule, Term};
use crate::store::{EntityId, RelationId, Split, Triple, TripleStore, Vocab};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum QueryKind {
    /// `r(e, ?)`: the subject is known.
    Head,
    /// `r(?, e)`: the object is known.
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub target: RelationId,
    pub known: EntityId,
    pub kind: QueryKind,
    pub truth: EntityId,
}

impl Query {
    /// The head and the tail query of a test triple.
    pub fn pair(t: &Triple) -> [Query; 2] {
        [
            Query {
                target: t.rel,
                known: t.head,
                kind: QueryKind::Head,
                truth: t.tail,
            },
            Query {
                target: t.rel,
                known: t.tail,
                kind: QueryKind::Tail,
                truth: t.head,
            },
        ]
    }

    /// The triple this query would assert for `answer`.
    pub fn triple(&self, answer: EntityId) -> Triple {
        match self.kind {
            QueryKind::Head => Triple::new(self.target, self.known, answer),
            QueryKind::Tail => Triple::new(self.target, answer, self.known),
        }
    }

    pub fn display(&self, vocab: &Vocab) -> String {
        let (r, e) = (vocab.relation_name(self.target), vocab.entity_name(self.known));
        match self.kind {
            QueryKind::Head => format!("{r}({e},?)"),
            QueryKind::Tail => format!("{r}(?,{e})"),
        }
    }
}

/// How one rule answers queries of one kind.
#[derive(Clone, Debug)]
enum Mode {
    /// Never suggests anything.
    Silent,
    /// Ground `chain` from the known entity; the answer is `answer`.
    Walk { chain: Chain, answer: Term },
    /// The known slot holds constant `c`; the answers are computed the
    /// first time a query hits `c`.
    Fixed {
        c: EntityId,
        chain: Chain,
        answer: Term,
        answers: OnceLock<Vec<EntityId>>,
    },
    /// Full head pairs keyed by the known entity.
    Table(HashMap<EntityId, Vec<EntityId>>),
}

struct Compiled {
    sc: f64,
    consts: Vec<EntityId>,
    head: Mode,
    tail: Mode,
}

fn values_over_all(
    store: &TripleStore,
    chain: &Chain,
    consts: &[EntityId],
    answer: Term,
    known: Term,
) -> Vec<(EntityId, EntityId)> {
    let mut out = HashSet::new();
    let mut budget = Budget::new(0);
    for a in anchor_candidates(store, chain, consts) {
        walk_chain(store, chain, consts, a, &mut budget, &mut |b| {
            let get = |t: Term| match t {
                Term::Const(c) => Some(c),
                Term::Var(v) => crate::ground::lookup(b, v),
            };
            if let (Some(k), Some(v)) = (get(known), get(answer)) {
                out.insert((k, v));
            }
        });
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort_unstable();
    v
}

fn compile_mode(store: &TripleStore, rule: &Rule, kind: QueryKind) -> Mode {
    let head = rule.head();
    let (known, answer) = match kind {
        QueryKind::Head => (head.subj, head.obj),
        QueryKind::Tail => (head.obj, head.subj),
    };
    let Ok(chain) = rule.chain() else {
        return Mode::Silent;
    };
    let in_body = |t: Term| rule.body().iter().any(|a| a.contains(t));
    if answer.is_var() && !in_body(answer) {
        return Mode::Silent;
    }
    let consts = rule.constant_set();
    match known {
        Term::Const(c) => Mode::Fixed {
            c,
            chain,
            answer,
            answers: OnceLock::new(),
        },
        Term::Var(_) if !in_body(known) => Mode::Silent,
        Term::Var(_) if chain.anchor == known => Mode::Walk { chain, answer },
        Term::Var(_) if chain.end() == known => Mode::Walk {
            chain: chain.reversed(),
            answer,
        },
        Term::Var(_) => {
            let mut table: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
            for (k, v) in values_over_all(store, &chain, &consts, answer, known) {
                table.entry(k).or_default().push(v);
            }
            Mode::Table(table)
        }
    }
}

/// Learned rules of one target prepared for answering queries.
pub struct Predictor<'a> {
    store: &'a TripleStore,
    rules: Vec<Compiled>,
}

impl<'a> Predictor<'a> {
    pub fn new(store: &'a TripleStore, rules: &[LearnedRule], exec: Execution) -> Self {
        let rules = par::map(exec, rules, |r| Compiled {
            sc: r.measures.sc,
            consts: r.rule.constant_set(),
            head: compile_mode(store, &r.rule, QueryKind::Head),
            tail: compile_mode(store, &r.rule, QueryKind::Tail),
        });
        Predictor { store, rules }
    }

    /// Candidate answers with the smooth confidences of the suggesting
    /// rules, one entry per rule, sorted descending.
    pub fn suggest(&self, q: &Query) -> HashMap<EntityId, Vec<f64>> {
        let mut out: HashMap<EntityId, Vec<f64>> = HashMap::new();
        for r in &self.rules {
            let mode = match q.kind {
                QueryKind::Head => &r.head,
                QueryKind::Tail => &r.tail,
            };
            let mut found: Vec<EntityId> = Vec::new();
            match mode {
                Mode::Silent => {}
                Mode::Fixed {
                    c,
                    chain,
                    answer,
                    answers,
                } => {
                    if *c == q.known {
                        let all = answers.get_or_init(|| {
                            values_over_all(self.store, chain, &r.consts, *answer, Term::Const(*c))
                                .into_iter()
                                .map(|(_, v)| v)
                                .collect()
                        });
                        found.extend(all.iter().copied());
                    }
                }
                Mode::Table(t) => {
                    if let Some(v) = t.get(&q.known) {
                        found.extend(v.iter().copied());
                    }
                }
                Mode::Walk { chain, answer } => {
                    // a constant answer only needs one grounding
                    let mut budget = Budget::new(if answer.is_var() { 0 } else { 1 });
                    walk_chain(self.store, chain, &r.consts, q.known, &mut budget, &mut |b| {
                        let v = match *answer {
                            Term::Const(c) => Some(c),
                            Term::Var(v) => crate::ground::lookup(b, v),
                        };
                        if let Some(v) = v {
                            found.push(v);
                        }
                    });
                }
            }
            found.sort_unstable();
            found.dedup();
            for e in found {
                if e != q.known {
                    out.entry(e).or_default().push(r.sc);
                }
            }
        }
        for v in out.values_mut() {
            v.sort_by(|a, b| b.total_cmp(a));
        }
        out
    }
}

/// Descending-sorted confidence vectors: the first larger entry wins; when
/// one vector is a prefix of the other the longer one wins.
pub fn compare_vectors(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    b.len().cmp(&a.len())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRanking {
    /// Candidates best first.
    pub ranked: Vec<(EntityId, Vec<f64>)>,
    /// 1-based position of the ground truth, if suggested.
    pub truth_rank: Option<usize>,
}

/// Orders candidates, dropping every candidate `e != truth` for which
/// `filtered(e)` holds.
pub fn rank(
    candidates: HashMap<EntityId, Vec<f64>>,
    truth: EntityId,
    filtered: impl Fn(EntityId) -> bool,
) -> PredictionRanking {
    let mut ranked: Vec<(EntityId, Vec<f64>)> = candidates
        .into_iter()
        .filter(|(e, _)| *e == truth || !filtered(*e))
        .collect();
    ranked.sort_by(|a, b| compare_vectors(&a.1, &b.1).then(a.0.cmp(&b.0)));
    let truth_rank = ranked.iter().position(|(e, _)| *e == truth).map(|p| p + 1);
    PredictionRanking { ranked, truth_rank }
}

/// Ranks `q` against the train, valid and test triples.
pub fn rank_filtered(store: &TripleStore, q: &Query, candidates: HashMap<EntityId, Vec<f64>>) -> PredictionRanking {
    rank(candidates, q.truth, |e| store.contains_any(&q.triple(e)))
}

pub fn mrr(ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().map(|r| r.map_or(0.0, |r| 1.0 / r as f64)).sum::<f64>() / ranks.len() as f64
}

pub fn hits_at(k: usize, ranks: &[Option<usize>]) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count() as f64 / ranks.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub query: Query,
    pub rank: Option<usize>,
    /// Best ten candidates with their top confidence.
    pub top: Vec<(EntityId, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub results: Vec<QueryResult>,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    /// Rule application time: predictor setup, suggestion and ranking.
    pub rat: Duration,
}

impl EvalReport {
    pub fn ranks(&self) -> Vec<Option<usize>> {
        self.results.iter().map(|r| r.rank).collect()
    }

    pub fn summary_text(&self) -> String {
        format!(
            "queries = {}\nmrr = {:.6}\nhits@1 = {:.6}\nhits@3 = {:.6}\nhits@10 = {:.6}\nrat_seconds = {:.6}\n",
            self.results.len(),
            self.mrr,
            self.hits1,
            self.hits3,
            self.hits10,
            self.rat.as_secs_f64()
        )
    }

    /// One line per query: query, rank of the truth (`-` if unsuggested),
    /// and the top candidates as `name:score` joined by `; `.
    pub fn query_lines(&self, vocab: &Vocab) -> String {
        let mut s = String::new();
        for r in &self.results {
            let rank = r.rank.map_or("-".to_string(), |x| x.to_string());
            let top: Vec<String> = r
                .top
                .iter()
                .map(|(e, sc)| format!("{}:{sc:.6}", vocab.entity_name(*e)))
                .collect();
            let _ = writeln!(s, "{}\t{rank}\t{}", r.query.display(vocab), top.join("; "));
        }
        s
    }
}

/// Answers the head and tail query of every test triple whose relation has
/// an entry in `rules`, in test-file order.
pub fn evaluate(store: &TripleStore, rules: &HashMap<RelationId, Vec<LearnedRule>>, exec: Execution) -> EvalReport {
    let start = Instant::now();
    let predictors: HashMap<RelationId, Predictor<'_>> = rules
        .iter()
        .map(|(r, rs)| (*r, Predictor::new(store, rs, exec)))
        .collect();
    let queries: Vec<Query> = store
        .triples(Split::Test)
        .iter()
        .filter(|t| rules.contains_key(&t.rel))
        .flat_map(Query::pair)
        .collect();
    let results = par::map(exec, &queries, |q| {
        let ranking = rank_filtered(store, q, predictors[&q.target].suggest(q));
        QueryResult {
            query: *q,
            rank: ranking.truth_rank,
            top: ranking.ranked.iter().take(10).map(|(e, v)| (*e, v[0])).collect(),
        }
    });
    let rat = start.elapsed();
    let ranks: Vec<Option<usize>> = results.iter().map(|r| r.rank).collect();
    EvalReport {
        mrr: mrr(&ranks),
        hits1: hits_at(1, &ranks),
        hits3: hits_at(3, &ranks),
        hits10: hits_at(10, &ranks),
        results,
        rat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::Measures;
    use crate::rule::parse_rule;
    use crate::toy::advising_graph;

    fn lr(store: &mut TripleStore, text: &str, sc: f64) -> LearnedRule {
        let mut measures = Measures::zero();
        measures.sc = sc;
        LearnedRule {
            rule: parse_rule(text, store.vocab_mut()).unwrap(),
            measures,
        }
    }

    fn e(s: &TripleStore, n: &str) -> EntityId {
        s.vocab().entity_id(n).unwrap()
    }

    #[test]
    fn shared_publication_suggests_bob() {
        let mut g = advising_graph();
        let rules = vec![lr(&mut g, "Advises(X,Y) <- Publishes(X,V0), Publishes(Y,V0)", 0.2)];
        let p = Predictor::new(&g, &rules, Execution::Sequential);
        let q = Query {
            target: g.vocab().relation_id("Advises").unwrap(),
            known: e(&g, "alice"),
            kind: QueryKind::Head,
            truth: e(&g, "bob"),
        };
        let s = p.suggest(&q);
        assert_eq!(s.len(), 1);
        assert_eq!(s[&e(&g, "bob")], vec![0.2]);
        let tail = Query {
            kind: QueryKind::Tail,
            known: e(&g, "bob"),
            truth: e(&g, "alice"),
            ..q
        };
        assert!(p.suggest(&tail).contains_key(&e(&g, "alice")));
        assert!(Predictor::new(&g, &[], Execution::Sequential).suggest(&q).is_empty());
    }

    #[test]
    fn instantiated_rules_answer_both_directions() {
        let mut g = advising_graph();
        let rules = vec![
            lr(&mut g, "Advises(X,bob) <- Is_A(X,professor)", 0.5),
            lr(&mut g, "Advises(X,bob) <- Is_A(X,V0)", 0.3),
        ];
        let p = Predictor::new(&g, &rules, Execution::Sequential);
        let target = g.vocab().relation_id("Advises").unwrap();
        let head = Query {
            target,
            known: e(&g, "alice"),
            kind: QueryKind::Head,
            truth: e(&g, "bob"),
        };
        assert_eq!(p.suggest(&head)[&e(&g, "bob")], vec![0.5, 0.3]);
        let tail = Query {
            target,
            known: e(&g, "bob"),
            kind: QueryKind::Tail,
            truth: e(&g, "alice"),
        };
        let s = p.suggest(&tail);
        assert_eq!(s[&e(&g, "alice")], vec![0.5, 0.3]);
        assert_eq!(s.len(), 1);
        let other = Query {
            known: e(&g, "paper"),
            ..tail
        };
        assert!(p.suggest(&other).is_empty());
    }

    #[test]
    fn rule_that_cannot_ground_is_silent() {
        let mut g = advising_graph();
        let rules = vec![lr(&mut g, "Advises(X,Y) <- Cites(X,Y)", 0.9)];
        let p = Predictor::new(&g, &rules, Execution::Sequential);
        let q = Query::pair(&Triple::new(
            g.vocab().relation_id("Advises").unwrap(),
            e(&g, "alice"),
            e(&g, "bob"),
        ));
        assert!(p.suggest(&q[0]).is_empty() && p.suggest(&q[1]).is_empty());
    }

    #[test]
    fn recursive_tie_break() {
        let (a, b) = (EntityId(1), EntityId(2));
        let c: HashMap<_, _> = [(a, vec![0.9, 0.4]), (b, vec![0.9, 0.5])].into();
        let r = rank(c, a, |_| false);
        assert_eq!(r.ranked[0].0, b);
        assert_eq!(r.truth_rank, Some(2));
        let longer: HashMap<_, _> = [(a, vec![0.9]), (b, vec![0.9, 0.1])].into();
        assert_eq!(rank(longer, a, |_| false).ranked[0].0, b);
        let same: HashMap<_, _> = [(b, vec![0.9]), (a, vec![0.9])].into();
        let r = rank(same.clone(), a, |_| false);
        assert_eq!(r.ranked[0].0, a);
        assert_eq!(r, rank(same, a, |_| false));
    }

    #[test]
    fn truth_is_never_filtered() {
        let (a, b) = (EntityId(1), EntityId(2));
        let c: HashMap<_, _> = [(a, vec![0.5]), (b, vec![0.9])].into();
        let r = rank(c.clone(), a, |_| true);
        assert_eq!(r.truth_rank, Some(1));
        assert_eq!(rank(c, a, |_| false).truth_rank, Some(2));
    }

    #[test]
    fn metrics() {
        assert_eq!(mrr(&[Some(2)]), 0.5);
        assert_eq!(mrr(&[None]), 0.0);
        assert_eq!(mrr(&[Some(1), Some(4)]), 0.625);
        assert_eq!(hits_at(3, &[Some(1), Some(4), None, Some(3)]), 0.5);
        assert_eq!(mrr(&[]), 0.0);
    }

    #[test]
    fn end_to_end_report() {
        let mut g = advising_graph();
        g.add(Split::Test, "carol", "Advises", "dave").unwrap();
        g.add(Split::Train, "carol", "Publishes", "book").unwrap();
        g.add(Split::Train, "dave", "Publishes", "book").unwrap();
        let target = g.vocab().relation_id("Advises").unwrap();
        let rules = vec![lr(&mut g, "Advises(X,Y) <- Publishes(X,V0), Publishes(Y,V0)", 0.2)];
        let report = evaluate(&g, &[(target, rules)].into(), Execution::Sequential);
        assert_eq!(report.ranks(), vec![Some(1), Some(1)]);
        assert_eq!(report.mrr, 1.0);
        let lines = report.query_lines(g.vocab());
        assert!(lines.starts_with("Advises(carol,?)\t1\tdave:0.200000"));
        assert!(report.summary_text().contains("mrr = 1.000000"));
        let empty = evaluate(&g, &[(target, Vec::new())].into(), Execution::Sequential);
        assert_eq!(empty.mrr, 0.0);
        assert_eq!(empty.results.len(), 2);
    }
}
