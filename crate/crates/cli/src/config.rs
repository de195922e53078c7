//! Run configuration: a TOML file with one table per module, overridable
//! flag by flag on the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rulehier_core::miner::MinerConfig;
use rulehier_core::par::Execution;
use rulehier_core::{RelationId, Split, SplitConfig, TripleStore};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory with `train.txt`, `valid.txt` and `test.txt`.
    pub dataset: PathBuf,
    pub output: PathBuf,
    /// Worker threads; `0` uses every core. `RULEHIER_THREADS` caps it.
    pub threads: usize,
    pub targets: TargetSelection,
    pub split: SplitConfig,
    pub miner: MinerConfig,
    pub eval: EvalConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: PathBuf::from("data"),
            output: PathBuf::from("out"),
            threads: 0,
            targets: TargetSelection::All,
            split: SplitConfig::default(),
            miner: MinerConfig::default(),
            eval: EvalConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSelection {
    All,
    /// `k` predicates drawn without replacement among those with at least
    /// `supp_f + 1` train instances.
    Random {
        k: usize,
        seed: u64,
    },
    List {
        names: Vec<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub execution: Execution,
    /// Write the per-query file next to the summary.
    pub per_query: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            execution: Execution::Parallel,
            per_query: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub thresholds: Vec<u64>,
    pub post_prune: Vec<bool>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            thresholds: vec![0, 10, 20, 50, 100],
            post_prune: vec![false],
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// The config as `# `-prefixed lines, for artifact headers.
    pub fn echo_comment(&self) -> String {
        self.to_toml()
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| format!("# {l}\n"))
            .collect()
    }

    /// Flattened `table.key = value` pairs, for run records.
    pub fn flat_entries(&self) -> Vec<(String, String)> {
        let value = toml::Value::try_from(self).expect("run config serializes");
        let mut out = Vec::new();
        flatten("", &value, &mut out);
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.miner.validate()?;
        self.split.validate()?;
        if let TargetSelection::List { names } = &self.targets {
            if names.is_empty() {
                bail!("targets.names is empty");
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($field:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = o.$field.clone() { $dst = v; })*
            };
        }
        set! {
            dataset => self.dataset,
            output => self.output,
            threads => self.threads,
            len => self.miner.len,
            supp_f => self.miner.supp_f,
            hc_f => self.miner.hc_f,
            sc_f => self.miner.sc_f,
            supp_h => self.miner.supp_h,
            eta => self.miner.eta,
            overfit_threshold => self.miner.overfit_threshold,
            walks_per_instance => self.miner.walks_per_instance,
            gen_budget_ms => self.miner.gen_budget_ms,
            spec_budget_ms => self.miner.spec_budget_ms,
            max_groundings => self.miner.max_groundings,
            max_specializations => self.miner.max_specializations,
            seed => self.miner.seed,
            post_prune => self.miner.post_prune,
            prior_prune_cars => self.miner.prior_prune_cars,
            overfit_insr_only => self.miner.overfit_insr_only,
        }
        if let Some(names) = &o.targets {
            self.targets = TargetSelection::List { names: names.clone() };
        }
        if let Some(k) = o.random_k {
            let seed = match self.targets {
                TargetSelection::Random { seed, .. } => seed,
                _ => 42,
            };
            self.targets = TargetSelection::Random { k, seed };
        }
        if let (Some(s), TargetSelection::Random { seed, .. }) = (o.target_seed, &mut self.targets) {
            *seed = s;
        }
        if o.sequential {
            self.miner.execution = Execution::Sequential;
            self.eval.execution = Execution::Sequential;
        }
    }

    /// Target relations in id order, resolved against `store`.
    pub fn select_targets(&self, store: &TripleStore) -> Result<Vec<RelationId>> {
        let mut out = match &self.targets {
            TargetSelection::All => store.train_relations(),
            TargetSelection::List { names } => names
                .iter()
                .map(|n| {
                    store
                        .vocab()
                        .relation_id(n)
                        .with_context(|| format!("target relation `{n}` is not in the dataset"))
                })
                .collect::<Result<Vec<_>>>()?,
            TargetSelection::Random { k, seed } => {
                let mut pool: Vec<RelationId> = store
                    .train_relations()
                    .into_iter()
                    .filter(|r| store.instances_of(*r, Split::Train).len() as u64 > self.miner.supp_f)
                    .collect();
                pool.sort();
                if *k > pool.len() {
                    bail!(
                        "targets.k = {k} but only {} relations have more than supp_f = {} train instances",
                        pool.len(),
                        self.miner.supp_f
                    );
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                pool.shuffle(&mut rng);
                pool.truncate(*k);
                pool
            }
        };
        out.sort();
        out.dedup();
        Ok(out)
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<(String, String)>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        toml::Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// Per-flag overrides shared by `learn`, `eval` and `bench`.
#[derive(Args, Clone, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma-separated target relations.
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Mine `k` randomly selected targets.
    #[arg(long)]
    pub random_k: Option<usize>,
    #[arg(long)]
    pub target_seed: Option<u64>,
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub supp_f: Option<u64>,
    #[arg(long)]
    pub hc_f: Option<f64>,
    #[arg(long)]
    pub sc_f: Option<f64>,
    #[arg(long)]
    pub supp_h: Option<u64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub overfit_threshold: Option<f64>,
    #[arg(long)]
    pub walks_per_instance: Option<usize>,
    #[arg(long)]
    pub gen_budget_ms: Option<u64>,
    #[arg(long)]
    pub spec_budget_ms: Option<u64>,
    #[arg(long)]
    pub max_groundings: Option<usize>,
    #[arg(long)]
    pub max_specializations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub post_prune: Option<bool>,
    #[arg(long)]
    pub prior_prune_cars: Option<bool>,
    #[arg(long)]
    pub overfit_insr_only: Option<bool>,
    /// Run everything on the calling thread.
    #[arg(long)]
    pub sequential: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let cfg: RunConfig =
            toml::from_str("dataset = \"d\"\n[miner]\nsupp_h = 10\n[targets]\nmode = \"random\"\nk = 3\nseed = 1\n")
                .unwrap();
        assert_eq!(cfg.miner.supp_h, 10);
        assert_eq!(cfg.miner.len, 3);
        assert_eq!(cfg.targets, TargetSelection::Random { k: 3, seed: 1 });
        assert!(toml::from_str::<RunConfig>("[miner]\nbogus = 1\n").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            supp_h: Some(7),
            post_prune: Some(false),
            random_k: Some(2),
            target_seed: Some(9),
            sequential: true,
            ..Overrides::default()
        });
        assert_eq!(cfg.miner.supp_h, 7);
        assert!(!cfg.miner.post_prune);
        assert_eq!(cfg.targets, TargetSelection::Random { k: 2, seed: 9 });
        assert_eq!(cfg.miner.execution, Execution::Sequential);
    }

    #[test]
    fn flat_entries_cover_nested_tables() {
        let e = RunConfig::default().flat_entries();
        assert!(e.iter().any(|(k, v)| k == "miner.supp_f" && v == "3"));
        assert!(e.iter().any(|(k, v)| k == "targets.mode" && v == "all"));
    }

    #[test]
    fn random_selection_is_seeded_and_bounded() {
        let mut s = TripleStore::new();
        for r in ["a", "b", "c", "d"] {
            for i in 0..5 {
                s.add(Split::Train, &format!("x{i}"), r, &format!("y{i}")).unwrap();
            }
        }
        s.add(Split::Train, "x", "rare", "y").unwrap();
        let mut cfg = RunConfig {
            targets: TargetSelection::Random { k: 2, seed: 5 },
            ..RunConfig::default()
        };
        let a = cfg.select_targets(&s).unwrap();
        assert_eq!(a, cfg.select_targets(&s).unwrap());
        assert_eq!(a.len(), 2);
        assert!(!a.contains(&s.vocab().relation_id("rare").unwrap()));
        cfg.targets = TargetSelection::Random { k: 5, seed: 5 };
        assert!(cfg.select_targets(&s).is_err());
    }
}
