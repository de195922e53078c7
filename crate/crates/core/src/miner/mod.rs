//! The mining loop: generalization, prior pruning over the atom-addition
//! hierarchy, specialization of the surviving OARs, relevance and
//! overfitting filters, and post pruning over each instantiation hierarchy.

mod prune;
mod walk;

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use prune::{is_relevant, overfit_filter, post_pruning, prior_pruning, PriorPruned};
pub use walk::generalization;

use crate::error::MineError;
use crate::ground::{Grounder, GroundingConfig, Measures};
use crate::hierarchy::{build_a_hierarchy, build_i_hierarchy};
use crate::par::{self, Execution};
use crate::rule::{Rule, RuleKind};
use crate::store::{RelationId, TripleStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinerConfig {
    /// Maximum body length.
    pub len: usize,
    pub supp_f: u64,
    pub hc_f: f64,
    pub sc_f: f64,
    /// Prior-pruning threshold; `0` disables prior pruning.
    pub supp_h: u64,
    /// Smooth-confidence offset.
    pub eta: f64,
    pub overfit_threshold: f64,
    pub walks_per_instance: usize,
    /// Wall-clock budgets in milliseconds; `0` means unconstrained.
    pub gen_budget_ms: u64,
    pub spec_budget_ms: u64,
    /// Body groundings enumerated per rule; `0` means exact.
    pub max_groundings: usize,
    /// HARs per OAR and BARs per HAR; `0` means no cap.
    pub max_specializations: usize,
    pub seed: u64,
    pub post_prune: bool,
    /// When false, CARs are exempt from prior pruning.
    pub prior_prune_cars: bool,
    /// Apply the overfitting filter to instantiated rules only.
    pub overfit_insr_only: bool,
    pub execution: Execution,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            len: 3,
            supp_f: 3,
            hc_f: 0.001,
            sc_f: 0.001,
            supp_h: 0,
            eta: 5.0,
            overfit_threshold: 0.1,
            walks_per_instance: 10,
            gen_budget_ms: 0,
            spec_budget_ms: 0,
            max_groundings: 0,
            max_specializations: 0,
            seed: 42,
            post_prune: true,
            prior_prune_cars: true,
            overfit_insr_only: false,
            execution: Execution::Parallel,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<(), MineError> {
        if self.len == 0 {
            return Err(MineError::Config("len must be at least 1".into()));
        }
        for (name, v) in [
            ("hc_f", self.hc_f),
            ("sc_f", self.sc_f),
            ("eta", self.eta),
            ("overfit_threshold", self.overfit_threshold),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(MineError::Config(format!(
                    "{name} must be a finite non-negative number"
                )));
            }
        }
        Ok(())
    }

    pub fn grounding(&self) -> GroundingConfig {
        GroundingConfig {
            eta: self.eta,
            max_groundings: self.max_groundings,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnedRule {
    pub rule: Rule,
    pub measures: Measures,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OarClass {
    /// Removed by prior pruning.
    Pruned,
    /// At least one relevant specialization.
    Informative,
    Uninformative,
}

impl OarClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OarClass::Pruned => "P",
            OarClass::Informative => "I",
            OarClass::Uninformative => "U",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OarCounts {
    pub pruned: usize,
    pub informative: usize,
    pub uninformative: usize,
}

impl OarCounts {
    pub fn total(&self) -> usize {
        self.pruned + self.informative + self.uninformative
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub generalization: Duration,
    pub prior_pruning: Duration,
    pub specialization: Duration,
}

impl Timings {
    pub fn total(&self) -> Duration {
        self.generalization + self.prior_pruning + self.specialization
    }
}

/// Everything a mining run for one target produces.
#[derive(Clone, Debug, Default)]
pub struct LearnOutcome {
    pub target: RelationId,
    /// The learned set `F`, sorted by descending smooth confidence.
    pub rules: Vec<LearnedRule>,
    /// Relevant rules that passed the overfitting filter, before post
    /// pruning; same order as `rules`.
    pub relevant: Vec<LearnedRule>,
    /// `|L|`, the sampled abstract rules including the top rule.
    pub abstract_rules: usize,
    /// Abstract rules surviving prior pruning.
    pub prior_kept: usize,
    /// Sampled rules without a sampled generalization, hooked under the top rule.
    pub orphans: usize,
    /// Non-top OARs of `L` with their classes, in rule order.
    pub oar_classes: Vec<(Rule, OarClass)>,
    /// `(bar, har)` pairs removed by post pruning.
    pub post_pruned: Vec<(Rule, Rule)>,
    /// OARs whose specialization hit the per-OAR cap.
    pub truncated_oars: usize,
    /// OARs left unprocessed by the specialization budget.
    pub skipped_oars: usize,
    pub generalization_cut: bool,
    pub approximate: bool,
    pub timings: Timings,
}

impl LearnOutcome {
    pub fn oar_counts(&self) -> OarCounts {
        classify_oars(&self.oar_classes)
    }
}

pub fn classify_oars(classes: &[(Rule, OarClass)]) -> OarCounts {
    let mut c = OarCounts::default();
    for (_, class) in classes {
        match class {
            OarClass::Pruned => c.pruned += 1,
            OarClass::Informative => c.informative += 1,
            OarClass::Uninformative => c.uninformative += 1,
        }
    }
    c
}

fn sort_rules(rules: &mut [LearnedRule]) {
    rules.sort_by(|a, b| {
        b.measures
            .sc
            .total_cmp(&a.measures.sc)
            .then_with(|| a.rule.cmp(&b.rule))
    });
}

struct OarResult {
    relevant: Vec<LearnedRule>,
    kept: Vec<LearnedRule>,
    post_pruned: Vec<(Rule, Rule)>,
    truncated: bool,
    approximate: bool,
    skipped: bool,
}

/// Specializes one OAR and filters the result. With `post_prune`, BARs
/// dominated by a subsuming HAR are removed from `kept`.
fn process_oar(
    grounder: &Grounder<'_>,
    oar: &Rule,
    cfg: &MinerConfig,
    has_valid: bool,
    post_prune: bool,
) -> Result<OarResult, MineError> {
    let spec = grounder.specialize(oar, cfg.max_specializations)?;
    let relevant: Vec<LearnedRule> = spec
        .rules
        .into_iter()
        .filter(|s| is_relevant(&s.measures, cfg) && overfit_filter(&s.rule, &s.measures, cfg, has_valid))
        .map(|s| LearnedRule {
            rule: s.rule,
            measures: s.measures,
        })
        .collect();
    let mut kept = relevant.clone();
    let mut removed_pairs = Vec::new();
    if post_prune && !relevant.is_empty() {
        let rules: Vec<Rule> = relevant.iter().map(|r| r.rule.clone()).collect();
        let phi_i = build_i_hierarchy(&rules);
        let sc: HashMap<&Rule, f64> = relevant.iter().map(|r| (&r.rule, r.measures.sc)).collect();
        let (keep_idx, removed) = post_pruning(&phi_i, |i| sc[phi_i.node(i)]);
        let keep: HashSet<&Rule> = keep_idx.iter().map(|&i| phi_i.node(i)).collect();
        kept.retain(|r| keep.contains(&r.rule));
        removed_pairs = removed
            .into_iter()
            .map(|(b, h)| (phi_i.node(b).clone(), phi_i.node(h).clone()))
            .collect();
    }
    Ok(OarResult {
        relevant,
        kept,
        post_pruned: removed_pairs,
        truncated: spec.truncated,
        approximate: spec.approximate,
        skipped: false,
    })
}

fn skipped() -> OarResult {
    OarResult {
        relevant: Vec::new(),
        kept: Vec::new(),
        post_pruned: Vec::new(),
        truncated: false,
        approximate: false,
        skipped: true,
    }
}

/// The mining loop with prior and post pruning for one target relation.
pub fn learn(store: &TripleStore, target: RelationId, cfg: &MinerConfig) -> Result<LearnOutcome, MineError> {
    cfg.validate()?;
    let grounder = Grounder::new(store, target, cfg.grounding());
    let has_valid = !grounder.valid_instances().is_empty();
    let mut out = LearnOutcome {
        target,
        ..LearnOutcome::default()
    };

    let t0 = Instant::now();
    let (abstract_rules, cut) = generalization(store, target, cfg)?;
    out.generalization_cut = cut;
    out.abstract_rules = abstract_rules.len();
    out.timings.generalization = t0.elapsed();

    let t1 = Instant::now();
    let mut phi_a = build_a_hierarchy(&abstract_rules);
    out.orphans = phi_a.attach_orphans_to_top();
    let evaluate = |r: &Rule| grounder.evaluate(r).unwrap_or_else(|_| Measures::zero());
    let PriorPruned { mut kept, evaluated } = prior_pruning(&phi_a, cfg.supp_h, cfg.execution, evaluate)?;
    if !cfg.prior_prune_cars {
        let have: HashSet<Rule> = kept.iter().map(|(r, _)| r.clone()).collect();
        let cars: Vec<&Rule> = abstract_rules
            .iter()
            .filter(|r| r.kind() == RuleKind::Car && !have.contains(*r))
            .collect();
        let measures = par::map(cfg.execution, &cars, |r| {
            evaluated.get(*r).copied().unwrap_or_else(|| evaluate(r))
        });
        kept.extend(cars.into_iter().cloned().zip(measures));
    }
    out.prior_kept = kept.len();
    out.timings.prior_pruning = t1.elapsed();
    log::debug!(
        "target {}: |L| = {}, kept {} after prior pruning, {} orphans",
        target.0,
        out.abstract_rules,
        out.prior_kept,
        out.orphans
    );

    let t2 = Instant::now();
    let mut relevant = Vec::new();
    let mut rules = Vec::new();
    let mut oars: Vec<(Rule, Measures)> = Vec::new();
    for (rule, m) in kept {
        match rule.kind() {
            RuleKind::Car => {
                out.approximate |= m.approximate;
                if is_relevant(&m, cfg) && overfit_filter(&rule, &m, cfg, has_valid) {
                    let lr = LearnedRule { rule, measures: m };
                    relevant.push(lr.clone());
                    rules.push(lr);
                }
            }
            RuleKind::Oar if !rule.is_top() => oars.push((rule, m)),
            _ => {}
        }
    }
    oars.sort_by(|a, b| b.1.supp.cmp(&a.1.supp).then_with(|| a.0.cmp(&b.0)));
    let start = Instant::now();
    let results = par::map(cfg.execution, &oars, |(oar, _)| {
        if cfg.spec_budget_ms > 0 && start.elapsed().as_millis() as u64 >= cfg.spec_budget_ms {
            return Ok(skipped());
        }
        process_oar(&grounder, oar, cfg, has_valid, cfg.post_prune)
    });
    let mut class_of: HashMap<Rule, OarClass> = HashMap::new();
    for ((oar, _), res) in oars.iter().zip(results) {
        let res = res?;
        out.truncated_oars += res.truncated as usize;
        out.skipped_oars += res.skipped as usize;
        out.approximate |= res.approximate;
        let class = if res.relevant.is_empty() {
            OarClass::Uninformative
        } else {
            OarClass::Informative
        };
        class_of.insert(oar.clone(), class);
        relevant.extend(res.relevant);
        rules.extend(res.kept);
        out.post_pruned.extend(res.post_pruned);
    }
    out.oar_classes = abstract_rules
        .iter()
        .filter(|r| r.kind() == RuleKind::Oar && !r.is_top())
        .map(|r| (r.clone(), class_of.get(r).copied().unwrap_or(OarClass::Pruned)))
        .collect();
    out.timings.specialization = t2.elapsed();

    sort_rules(&mut rules);
    sort_rules(&mut relevant);
    out.rules = rules;
    out.relevant = relevant;
    Ok(out)
}

/// The mining loop with both pruners removed: every sampled rule is
/// evaluated and every OAR specialized, with no hierarchy built.
pub fn learn_baseline(store: &TripleStore, target: RelationId, cfg: &MinerConfig) -> Result<LearnOutcome, MineError> {
    cfg.validate()?;
    let grounder = Grounder::new(store, target, cfg.grounding());
    let has_valid = !grounder.valid_instances().is_empty();
    let t0 = Instant::now();
    let (abstract_rules, cut) = generalization(store, target, cfg)?;
    let generalization_time = t0.elapsed();
    let t1 = Instant::now();
    let results = par::map(
        cfg.execution,
        &abstract_rules,
        |rule| -> Result<Option<OarResult>, MineError> {
            match rule.kind() {
                RuleKind::Car => {
                    let m = grounder.evaluate(rule)?;
                    let keep = is_relevant(&m, cfg) && overfit_filter(rule, &m, cfg, has_valid);
                    let lr: Vec<LearnedRule> = keep
                        .then(|| LearnedRule {
                            rule: rule.clone(),
                            measures: m,
                        })
                        .into_iter()
                        .collect();
                    Ok(Some(OarResult {
                        relevant: lr.clone(),
                        kept: lr,
                        post_pruned: Vec::new(),
                        truncated: false,
                        approximate: m.approximate,
                        skipped: false,
                    }))
                }
                RuleKind::Oar if !rule.is_top() => process_oar(&grounder, rule, cfg, has_valid, false).map(Some),
                _ => Ok(None),
            }
        },
    );
    let mut out = LearnOutcome {
        target,
        abstract_rules: abstract_rules.len(),
        prior_kept: abstract_rules.len(),
        generalization_cut: cut,
        ..LearnOutcome::default()
    };
    for (rule, res) in abstract_rules.iter().zip(results) {
        let Some(res) = res? else { continue };
        if rule.kind() == RuleKind::Oar {
            let class = if res.relevant.is_empty() {
                OarClass::Uninformative
            } else {
                OarClass::Informative
            };
            out.oar_classes.push((rule.clone(), class));
        }
        out.truncated_oars += res.truncated as usize;
        out.approximate |= res.approximate;
        out.relevant.extend(res.relevant);
        out.rules.extend(res.kept);
    }
    sort_rules(&mut out.rules);
    sort_rules(&mut out.relevant);
    out.timings.generalization = generalization_time;
    out.timings.specialization = t1.elapsed();
    Ok(out)
}
