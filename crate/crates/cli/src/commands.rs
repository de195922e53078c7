use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use log::{info, warn};

use rulehier_core::eval::{evaluate, EvalReport};
use rulehier_core::hierarchy::{build_a_hierarchy, build_i_hierarchy, union};
use rulehier_core::miner::{learn, learn_baseline, LearnOutcome, LearnedRule, MinerConfig};
use rulehier_core::par;
use rulehier_core::record::{outcome_section, read_rules, write_rules, RunRecord, Section};
use rulehier_core::rule::parse_rule;
use rulehier_core::subsume::DeciderReport;
use rulehier_core::{MineError, RelationId, Rule, Split, SplitConfig, TripleStore, Vocab};

use crate::config::RunConfig;

const RULES_DIR: &str = "rules";
const RECORD_FILE: &str = "run.record";
const TARGET_HEADER: &str = "# target = ";

fn load_dataset(dir: &Path) -> Result<TripleStore> {
    let store = TripleStore::load_dir(dir).with_context(|| format!("loading dataset {}", dir.display()))?;
    info!(
        "{}: {} entities, {} relations, {}/{}/{} train/valid/test triples",
        dir.display(),
        store.num_entities(),
        store.num_relations(),
        store.len(Split::Train),
        store.len(Split::Valid),
        store.len(Split::Test)
    );
    Ok(store)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// File name for a relation; names may contain `/` and other symbols.
fn rule_file_name(vocab: &Vocab, rel: RelationId) -> String {
    let name: String = vocab
        .relation_name(rel)
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("r{:04}_{}.txt", rel.0, name.trim_matches('_'))
}

pub fn cmd_split(input: &Path, output: &Path, split: SplitConfig) -> Result<()> {
    split.validate()?;
    let store = load_dataset(input)?;
    let out = store.resplit(&split)?;
    out.write_dir(output)
        .with_context(|| format!("writing {}", output.display()))?;
    let echo = toml::to_string(&split)?;
    write_file(
        &output.join("split.toml"),
        &format!("# input = {}\n{echo}", input.display()),
    )?;
    println!(
        "{} triples -> train {} / valid {} / test {} in {}",
        out.total_len(),
        out.len(Split::Train),
        out.len(Split::Valid),
        out.len(Split::Test),
        output.display()
    );
    Ok(())
}

/// Mines every target, one worker per target. Targets without train
/// instances are skipped with a warning.
fn mine_all(
    store: &TripleStore,
    targets: &[RelationId],
    cfg: &MinerConfig,
    baseline: bool,
) -> Result<Vec<LearnOutcome>> {
    let results = par::map(cfg.execution, targets, |t| {
        if baseline {
            learn_baseline(store, *t, cfg)
        } else {
            learn(store, *t, cfg)
        }
    });
    let mut out = Vec::new();
    for (t, r) in targets.iter().zip(results) {
        match r {
            Ok(o) => out.push(o),
            Err(MineError::EmptyTarget) => {
                warn!(
                    "target {} has no train instances; skipped",
                    store.vocab().relation_name(*t)
                )
            }
            Err(e) => return Err(e).with_context(|| format!("mining {}", store.vocab().relation_name(*t))),
        }
    }
    Ok(out)
}

fn config_section(cfg: &RunConfig) -> Section {
    let mut s = Section::new("config");
    for (k, v) in cfg.flat_entries() {
        s.push(k, v);
    }
    s
}

pub fn cmd_learn(cfg: &RunConfig, emit_hierarchy: Option<&Path>) -> Result<()> {
    cfg.validate()?;
    let store = load_dataset(&cfg.dataset)?;
    let targets = cfg.select_targets(&store)?;
    let start = Instant::now();
    let outcomes = mine_all(&store, &targets, &cfg.miner, false)?;
    let elapsed = start.elapsed();

    let vocab = store.vocab();
    let header = cfg.echo_comment();
    for o in &outcomes {
        let mut buf = header.clone().into_bytes();
        buf.extend_from_slice(format!("{TARGET_HEADER}{}\n", vocab.relation_name(o.target)).as_bytes());
        write_rules(&mut buf, &o.rules, vocab)?;
        let path = cfg.output.join(RULES_DIR).join(rule_file_name(vocab, o.target));
        write_file(&path, std::str::from_utf8(&buf)?)?;
    }

    let mut run = Section::new("run");
    run.push("dataset", cfg.dataset.display())
        .push("targets", outcomes.len())
        .push("rules", outcomes.iter().map(|o| o.rules.len()).sum::<usize>())
        .push("time_ms", elapsed.as_secs_f64() * 1e3);
    let mut record = RunRecord {
        sections: vec![config_section(cfg), run],
    };
    record
        .sections
        .extend(outcomes.iter().map(|o| outcome_section(o, vocab)));
    write_file(&cfg.output.join(RECORD_FILE), &record.to_text())?;
    write_file(&cfg.output.join("config.toml"), &cfg.to_toml())?;

    if let Some(dir) = emit_hierarchy {
        for o in &outcomes {
            let mut rules: Vec<Rule> = o.rules.iter().map(|r| r.rule.clone()).collect();
            rules.push(Rule::top(o.target));
            let mut h = union(&build_a_hierarchy(&rules), &build_i_hierarchy(&rules));
            h.attach_orphans_to_top();
            let name = rule_file_name(vocab, o.target).replace(".txt", ".dot");
            write_file(&dir.join(name), &h.to_dot(vocab))?;
        }
    }

    println!(
        "mined {} rules for {} targets in {:.2}s; output in {}",
        outcomes.iter().map(|o| o.rules.len()).sum::<usize>(),
        outcomes.len(),
        elapsed.as_secs_f64(),
        cfg.output.display()
    );
    Ok(())
}

/// Reads every rule file of `dir`; the target comes from the file header.
pub fn read_rule_dir(dir: &Path, store: &TripleStore) -> Result<HashMap<RelationId, Vec<LearnedRule>>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading rule directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    entries.retain(|p| p.extension().is_some_and(|e| e == "txt"));
    entries.sort();
    let mut vocab = store.vocab().clone();
    let mut out = HashMap::new();
    for path in entries {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let Some(name) = text.lines().find_map(|l| l.strip_prefix(TARGET_HEADER)) else {
            bail!(
                "{}: missing `{}<relation>` header",
                path.display(),
                TARGET_HEADER.trim()
            );
        };
        let Some(target) = store.vocab().relation_id(name.trim()) else {
            bail!("{}: target `{}` is not in the dataset", path.display(), name.trim());
        };
        let rules = read_rules(BufReader::new(text.as_bytes()), &mut vocab)
            .with_context(|| format!("parsing {}", path.display()))?;
        if rules.is_empty() {
            warn!("{}: no rules; queries of {} score nothing", path.display(), name.trim());
        }
        if let Some(r) = rules.iter().find(|r| r.rule.target() != target) {
            bail!(
                "{}: rule {} does not predict {}",
                path.display(),
                r.rule.display(&vocab),
                name.trim()
            );
        }
        out.entry(target).or_insert_with(Vec::new).extend(rules);
    }
    Ok(out)
}

pub fn cmd_eval(cfg: &RunConfig, rules_dir: Option<&Path>) -> Result<EvalReport> {
    let store = load_dataset(&cfg.dataset)?;
    let dir = rules_dir.map_or_else(|| cfg.output.join(RULES_DIR), Path::to_path_buf);
    let rules = read_rule_dir(&dir, &store)?;
    if rules.is_empty() {
        warn!("no rule files in {}", dir.display());
    }
    let report = evaluate(&store, &rules, cfg.eval.execution);
    let header = format!("{}# rules = {}\n", cfg.echo_comment(), dir.display());
    let eval_dir = cfg.output.join("eval");
    write_file(
        &eval_dir.join("summary.txt"),
        &format!("{header}{}", report.summary_text()),
    )?;
    if cfg.eval.per_query {
        write_file(
            &eval_dir.join("queries.tsv"),
            &format!("{header}{}", report.query_lines(store.vocab())),
        )?;
    }
    print!("{}", report.summary_text());
    Ok(report)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OarRow {
    pub pruned: usize,
    pub informative: usize,
    pub uninformative: usize,
    pub total: usize,
}

/// P/I/U-OAR counts per target of a run record, from the `oar` lines.
pub fn oar_table(record: &RunRecord) -> Result<Vec<(String, OarRow)>> {
    let mut rows = Vec::new();
    for (name, sec) in record.sections_with_prefix("target") {
        let mut row = OarRow::default();
        for line in sec.get_all("oar") {
            row.total += 1;
            match line.split_whitespace().next() {
                Some("P") => row.pruned += 1,
                Some("I") => row.informative += 1,
                Some("U") => row.uninformative += 1,
                _ => bail!("target {name}: malformed oar line `{line}`"),
            }
        }
        if let Some(n) = sec.get_parsed::<usize>("oars") {
            if n != row.total {
                bail!("target {name}: oars = {n} but {} oar lines", row.total);
            }
        }
        rows.push((name.to_string(), row));
    }
    Ok(rows)
}

pub fn cmd_stats_record(path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record = RunRecord::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let rows = oar_table(&record)?;
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(6).max(6);
    println!(
        "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}",
        "target", "P-OAR", "I-OAR", "U-OAR", "total"
    );
    let mut sum = OarRow::default();
    for (name, r) in &rows {
        println!(
            "{name:<width$}  {:>7}  {:>7}  {:>7}  {:>7}",
            r.pruned, r.informative, r.uninformative, r.total
        );
        sum.pruned += r.pruned;
        sum.informative += r.informative;
        sum.uninformative += r.uninformative;
        sum.total += r.total;
    }
    println!(
        "{:<width$}  {:>7}  {:>7}  {:>7}  {:>7}",
        "all", sum.pruned, sum.informative, sum.uninformative, sum.total
    );
    if sum.total > 0 {
        let pct = |x: usize| 100.0 * x as f64 / sum.total as f64;
        println!(
            "{:<width$}  {:>6.1}%  {:>6.1}%  {:>6.1}%",
            "share",
            pct(sum.pruned),
            pct(sum.informative),
            pct(sum.uninformative)
        );
    }
    Ok(())
}

pub fn cmd_stats_dataset(dir: &Path, same_relation_only: bool) -> Result<()> {
    let store = load_dataset(dir)?;
    println!("entities   {}", store.num_entities());
    println!("relations  {}", store.num_relations());
    for s in Split::ALL {
        println!("{:<10} {}", s.to_string(), store.len(s));
    }
    match store.reverse_triple_fraction(same_relation_only) {
        Ok(f) => println!(
            "reverse    {:.4} ({} relation)",
            f,
            if same_relation_only { "same" } else { "any" }
        ),
        Err(e) => println!("reverse    n/a ({e})"),
    }
    Ok(())
}

pub const BENCH_COLUMNS: &str =
    "threshold,post_prune,baseline,runtime_s,mrr,hits1,hits3,hits10,rat_s,rules,relevant_rules,p_oars,i_oars,u_oars";

pub fn cmd_bench(cfg: &RunConfig, csv: Option<&Path>) -> Result<String> {
    cfg.validate()?;
    if cfg.bench.thresholds.is_empty() || cfg.bench.post_prune.is_empty() {
        bail!("bench needs at least one threshold and one post-prune setting");
    }
    let store = load_dataset(&cfg.dataset)?;
    let targets = cfg.select_targets(&store)?;
    let mut out = cfg.echo_comment();
    let _ = writeln!(out, "{BENCH_COLUMNS}");
    for &threshold in &cfg.bench.thresholds {
        for &post_prune in &cfg.bench.post_prune {
            let miner = MinerConfig {
                supp_h: threshold,
                post_prune,
                ..cfg.miner.clone()
            };
            let baseline = threshold == 0 && !post_prune;
            let start = Instant::now();
            let outcomes = mine_all(&store, &targets, &miner, baseline)?;
            let runtime = start.elapsed();
            let rules: HashMap<RelationId, Vec<LearnedRule>> =
                outcomes.iter().map(|o| (o.target, o.rules.clone())).collect();
            let report = evaluate(&store, &rules, cfg.eval.execution);
            let (mut p, mut i, mut u) = (0, 0, 0);
            for o in &outcomes {
                let c = o.oar_counts();
                p += c.pruned;
                i += c.informative;
                u += c.uninformative;
            }
            let row = format!(
                "{threshold},{post_prune},{baseline},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{p},{i},{u}",
                secs(runtime),
                report.mrr,
                report.hits1,
                report.hits3,
                report.hits10,
                secs(report.rat),
                outcomes.iter().map(|o| o.rules.len()).sum::<usize>(),
                outcomes.iter().map(|o| o.relevant.len()).sum::<usize>(),
            );
            info!("bench row {row}");
            let _ = writeln!(out, "{row}");
        }
    }
    let path = csv.map_or_else(|| cfg.output.join("bench.csv"), Path::to_path_buf);
    write_file(&path, &out)?;
    print!(
        "{}",
        out.lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
    Ok(out)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

pub fn cmd_subsume(p: &str, q: &str) -> Result<String> {
    let mut vocab = Vocab::new();
    let p = parse_rule(p, &mut vocab).context("parsing the first rule")?;
    let q = parse_rule(q, &mut vocab).context("parsing the second rule")?;
    let r = DeciderReport::of(&p, &q);
    let mut s = String::new();
    let _ = writeln!(s, "p = {}", p.display(&vocab));
    let _ = writeln!(s, "q = {}", q.display(&vocab));
    for (name, v) in [
        ("theta", r.theta),
        ("oi", r.oi),
        ("sa", r.sa),
        ("sa_complete", r.sa_complete),
        ("a", r.a),
        ("i", r.i),
    ] {
        let _ = writeln!(s, "{name:<12}{v}");
    }
    print!("{s}");
    Ok(s)
}
