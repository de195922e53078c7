use std::collections::HashMap;

use super::MinerConfig;
use crate::error::HierarchyError;
use crate::ground::Measures;
use crate::hierarchy::Hierarchy;
use crate::par::Execution;
use crate::rule::{Rule, RuleKind};

/// `supp > supp_f`, `hc > hc_f` and `sc > sc_f`.
pub fn is_relevant(m: &Measures, cfg: &MinerConfig) -> bool {
    m.supp > cfg.supp_f && m.hc > cfg.hc_f && m.sc > cfg.sc_f
}

/// Validation-support filter: keep iff `valid_supp / supp >= threshold`.
/// Rules without training support are dropped. When the validation split
/// has no instance of the target the ratio carries no signal and every
/// supported rule is kept.
pub fn overfit_filter(rule: &Rule, m: &Measures, cfg: &MinerConfig, has_valid_instances: bool) -> bool {
    if m.supp == 0 {
        return false;
    }
    if cfg.overfit_insr_only && rule.deduction_level() == 0 {
        return true;
    }
    if !has_valid_instances || cfg.overfit_threshold <= 0.0 {
        return true;
    }
    m.valid_supp as f64 / m.supp as f64 >= cfg.overfit_threshold
}

/// Result of [`prior_pruning`].
#[derive(Clone, Debug, Default)]
pub struct PriorPruned {
    /// Kept rules with their measures, in visit order.
    pub kept: Vec<(Rule, Measures)>,
    /// Every evaluated rule, kept or not.
    pub evaluated: HashMap<Rule, Measures>,
}

/// Breadth-first traversal of `Φa` that drops a rule and its subtree when
/// `supp < supp_h`. `evaluate` runs once per visited rule.
pub fn prior_pruning<F>(
    phi_a: &Hierarchy,
    supp_h: u64,
    exec: Execution,
    evaluate: F,
) -> Result<PriorPruned, HierarchyError>
where
    F: Fn(&Rule) -> Measures + Sync + Send,
{
    let visits = phi_a.traverse(exec, |_, rule| {
        let m = evaluate(rule);
        (m.supp >= supp_h, m)
    })?;
    let mut out = PriorPruned::default();
    for v in visits {
        let rule = phi_a.node(v.node).clone();
        if v.kept {
            out.kept.push((rule.clone(), v.value));
        }
        out.evaluated.insert(rule, v.value);
    }
    Ok(out)
}

/// Removes every BAR that has an HAR parent in `phi_i` with strictly larger
/// smooth confidence. Returns the kept node indices and the removed
/// `(bar, har)` index pairs.
pub fn post_pruning(phi_i: &Hierarchy, sc: impl Fn(usize) -> f64) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for i in 0..phi_i.len() {
        let dominated = (phi_i.node(i).kind() == RuleKind::Bar)
            .then(|| {
                phi_i
                    .parents(i)
                    .iter()
                    .copied()
                    .find(|&p| phi_i.node(p).kind() == RuleKind::Har && sc(p) > sc(i))
            })
            .flatten();
        match dominated {
            Some(p) => removed.push((i, p)),
            None => kept.push(i),
        }
    }
    (kept, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_a_hierarchy, build_i_hierarchy, EdgeKind};
    use crate::rule::parse_rule;
    use crate::store::Vocab;

    fn m(supp: u64, hc: f64, sc: f64) -> Measures {
        Measures {
            supp,
            hc,
            sc,
            groundings: supp,
            valid_supp: 0,
            approximate: false,
        }
    }

    #[test]
    fn relevance_is_strict() {
        let cfg = MinerConfig::default();
        assert!(is_relevant(&m(4, 0.01, 0.01), &cfg));
        assert!(!is_relevant(&m(3, 0.01, 0.01), &cfg));
        assert!(!is_relevant(&m(4, 0.01, 0.001), &cfg));
        assert!(!is_relevant(&m(4, 0.001, 0.01), &cfg));
    }

    #[test]
    fn overfit_ratio() {
        let mut v = Vocab::new();
        let r = parse_rule("t(X,Y) <- p(X,Y)", &mut v).unwrap();
        let cfg = MinerConfig::default();
        let mut x = m(10, 0.1, 0.1);
        x.valid_supp = 3;
        assert!(overfit_filter(&r, &x, &cfg, true));
        x.valid_supp = 0;
        assert!(!overfit_filter(&r, &x, &cfg, true));
        assert!(overfit_filter(&r, &x, &cfg, false));
        let lax = MinerConfig {
            overfit_threshold: 0.0,
            ..cfg.clone()
        };
        assert!(overfit_filter(&r, &x, &lax, true));
        let insr_only = MinerConfig {
            overfit_insr_only: true,
            ..cfg
        };
        assert!(overfit_filter(&r, &x, &insr_only, true));
        assert!(!overfit_filter(&r, &m(0, 0.0, 0.0), &lax, true));
    }

    fn chain(v: &mut Vocab) -> (Hierarchy, Vec<Rule>) {
        let rules: Vec<Rule> = ["t(X,Y) <-", "t(X,Y) <- a(X,V0)", "t(X,Y) <- a(X,V0), b(V0,V1)"]
            .iter()
            .map(|s| parse_rule(s, v).unwrap())
            .collect();
        (build_a_hierarchy(&rules), rules)
    }

    #[test]
    fn prior_pruning_drops_subtrees() {
        let mut v = Vocab::new();
        let (h, rules) = chain(&mut v);
        let supp = |r: &Rule| m([10, 4, 7][rules.iter().position(|x| x == r).unwrap()], 1.0, 1.0);
        let out = prior_pruning(&h, 5, Execution::Sequential, supp).unwrap();
        let kept: Vec<&Rule> = out.kept.iter().map(|(r, _)| r).collect();
        assert_eq!(kept, vec![&rules[0]]);
        // the qualifying grandchild is never evaluated
        assert_eq!(out.evaluated.len(), 2);
        let all = prior_pruning(&h, 0, Execution::Sequential, supp).unwrap();
        assert_eq!(all.kept.len(), 3);
        let none = prior_pruning(&h, u64::MAX, Execution::Sequential, supp).unwrap();
        assert!(none.kept.is_empty());
    }

    #[test]
    fn post_pruning_is_strict() {
        let mut v = Vocab::new();
        let s: Vec<Rule> = ["A(X,bob) <- I(X,V0)", "A(X,bob) <- I(X,student)"]
            .iter()
            .map(|t| parse_rule(t, &mut v).unwrap())
            .collect();
        let h = build_i_hierarchy(&s);
        assert_eq!(h.edges()[0].kind, EdgeKind::Instantiation);
        for (har, bar, pruned) in [(0.5, 0.3, true), (0.3, 0.3, false), (0.3, 0.5, false)] {
            let (kept, removed) = post_pruning(&h, |i| if i == 0 { har } else { bar });
            assert_eq!(removed.len(), pruned as usize);
            assert_eq!(kept.len(), 2 - pruned as usize);
            assert!(kept.contains(&0));
        }
    }
}
