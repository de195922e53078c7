use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MinerConfig;
use crate::error::MineError;
use crate::par;
use crate::rule::{generalize, Path, Rule};
use crate::store::{Direction, EntityId, RelationId, Split, Triple, TripleStore};

/// One random walk of exactly `len` steps from `x`, or `None` when it
/// revisits an entity, returns to `x`, reaches `y` early, or gets stuck.
/// The instance triple itself is never the first step.
fn walk(
    store: &TripleStore,
    target: RelationId,
    x: EntityId,
    y: EntityId,
    len: usize,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<Triple>> {
    let mut current = x;
    let mut visited = vec![x];
    let mut steps = Vec::with_capacity(len);
    for i in 0..len {
        let incident = store.incident(current);
        let n = if i == 0 {
            let options: Vec<_> = incident
                .iter()
                .filter(|n| !(n.rel == target && n.direction == Direction::Out && n.other == y))
                .collect();
            **options.choose(rng)?
        } else {
            *incident.choose(rng)?
        };
        if visited.contains(&n.other) || (n.other == y && i + 1 < len) {
            return None;
        }
        steps.push(match n.direction {
            Direction::Out => Triple::new(n.rel, current, n.other),
            Direction::In => Triple::new(n.rel, n.other, current),
        });
        visited.push(n.other);
        current = n.other;
    }
    Some(steps)
}

/// Per-instance stream seed so results do not depend on scheduling.
fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Samples walks from every training instance of `target` and abstracts
/// them into CARs and OARs. Every prefix of an accepted walk is abstracted
/// too, so each sampled rule's generalizations are present. The top rule
/// is always included. Returns the sorted rule set and whether the time
/// budget cut sampling short.
pub fn generalization(
    store: &TripleStore,
    target: RelationId,
    cfg: &MinerConfig,
) -> Result<(Vec<Rule>, bool), MineError> {
    let instances = store.instances_of(target, Split::Train);
    if instances.is_empty() {
        return Err(MineError::EmptyTarget);
    }
    let start = Instant::now();
    let over = || cfg.gen_budget_ms > 0 && start.elapsed().as_millis() as u64 >= cfg.gen_budget_ms;
    let per_instance = par::map_range(cfg.execution, instances.len(), |i| {
        if over() {
            return (BTreeSet::new(), true);
        }
        let (x, y) = instances[i];
        let mut found = BTreeSet::new();
        if x == y {
            return (found, false);
        }
        let head = Triple::new(target, x, y);
        let mut rng = instance_rng(cfg.seed, i);
        for len in 1..=cfg.len {
            for _ in 0..cfg.walks_per_instance {
                let Some(steps) = walk(store, target, x, y, len, &mut rng) else {
                    continue;
                };
                for k in 1..=steps.len() {
                    if let Ok(rule) = generalize(&Path::new(head, steps[..k].to_vec())) {
                        found.insert(rule);
                    }
                }
            }
        }
        (found, false)
    });
    let mut all = BTreeSet::new();
    all.insert(Rule::top(target));
    let mut cut = false;
    for (rules, skipped) in per_instance {
        cut |= skipped;
        all.extend(rules);
    }
    Ok((all.into_iter().collect(), cut))
}
