//! In-memory knowledge graph with interned ids, split tags and train-only
//! adjacency indices.
//!
//! Triples are read from 3-column tab-separated files (`head TAB relation
//! TAB tail`). All mining reads go through the train index; valid and test
//! triples are only reachable through [`TripleStore::instances_of`] and
//! [`TripleStore::contains`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::StoreError;

/// Entity ids at or above this value are reserved for skolem constants.
pub const SKOLEM_BASE: u32 = 0x8000_0000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntityId(pub u32);

impl EntityId {
    pub fn skolem(i: u32) -> Self {
        EntityId(SKOLEM_BASE + i)
    }

    pub fn is_skolem(self) -> bool {
        self.0 >= SKOLEM_BASE
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RelationId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub rel: RelationId,
    pub head: EntityId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(rel: RelationId, head: EntityId, tail: EntityId) -> Self {
        Triple { rel, head, tail }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    fn slot(self) -> usize {
        match self {
            Split::Train => 0,
            Split::Valid => 1,
            Split::Test => 2,
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Split::Train => "train.txt",
            Split::Valid => "valid.txt",
            Split::Test => "test.txt",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Out,
    In,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NeighborFilter {
    Out,
    In,
    Both,
}

/// One incident train edge seen from an entity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Neighbor {
    pub rel: RelationId,
    pub other: EntityId,
    pub direction: Direction,
}

/// Dense string interner; ids are assigned in first-seen order.
#[derive(Clone, Debug, Default)]
pub struct Interner {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Interner {
    pub fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: u32) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Entity and relation symbol tables.
#[derive(Clone, Debug, Default)]
pub struct Vocab {
    pub entities: Interner,
    pub relations: Interner,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entity(&mut self, name: &str) -> EntityId {
        EntityId(self.entities.intern(name))
    }

    pub fn relation(&mut self, name: &str) -> RelationId {
        RelationId(self.relations.intern(name))
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entities.get(name).map(EntityId)
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relations.get(name).map(RelationId)
    }

    pub fn entity_name(&self, id: EntityId) -> String {
        if id.is_skolem() {
            return format!("sk{}", id.0 - SKOLEM_BASE);
        }
        match self.entities.name(id.0) {
            Some(n) => n.to_owned(),
            None => format!("#{}", id.0),
        }
    }

    pub fn relation_name(&self, id: RelationId) -> String {
        match self.relations.name(id.0) {
            Some(n) => n.to_owned(),
            None => format!("#r{}", id.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.6, 0.2, 0.2],
            seed: 42,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        let sum: f64 = self.ratios.iter().sum();
        if self.ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(StoreError::BadRatios(self.ratios));
        }
        Ok(())
    }

    /// Split sizes for `n` triples: valid and test get the floor of their
    /// share, train takes the remainder.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let valid = (n as f64 * self.ratios[1]).floor() as usize;
        let test = (n as f64 * self.ratios[2]).floor() as usize;
        let test = test.min(n - valid);
        [n - valid - test, valid, test]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub added: usize,
    pub duplicates: usize,
}

#[derive(Clone, Debug, Default)]
struct SplitData {
    triples: Vec<Triple>,
    set: HashSet<Triple>,
    by_relation: HashMap<RelationId, Vec<(EntityId, EntityId)>>,
}

#[derive(Clone, Debug, Default)]
struct TrainIndex {
    fwd: HashMap<(RelationId, EntityId), Vec<EntityId>>,
    bwd: HashMap<(RelationId, EntityId), Vec<EntityId>>,
    by_entity: Vec<Vec<Neighbor>>,
    subjects: HashMap<RelationId, Vec<EntityId>>,
    objects: HashMap<RelationId, Vec<EntityId>>,
}

impl TrainIndex {
    fn insert(&mut self, t: Triple) {
        let objs = self.fwd.entry((t.rel, t.head)).or_default();
        if objs.is_empty() {
            self.subjects.entry(t.rel).or_default().push(t.head);
        }
        objs.push(t.tail);
        let subs = self.bwd.entry((t.rel, t.tail)).or_default();
        if subs.is_empty() {
            self.objects.entry(t.rel).or_default().push(t.tail);
        }
        subs.push(t.head);
        let hi = t.head.index().max(t.tail.index());
        if self.by_entity.len() <= hi {
            self.by_entity.resize_with(hi + 1, Vec::new);
        }
        self.by_entity[t.head.index()].push(Neighbor {
            rel: t.rel,
            other: t.tail,
            direction: Direction::Out,
        });
        self.by_entity[t.tail.index()].push(Neighbor {
            rel: t.rel,
            other: t.head,
            direction: Direction::In,
        });
    }
}

/// Read-only (after loading) knowledge graph `G = (E, R, T)`.
#[derive(Clone, Debug, Default)]
pub struct TripleStore {
    vocab: Vocab,
    splits: [SplitData; 3],
    index: TrainIndex,
    duplicates: usize,
}

impl TripleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vocab(vocab: Vocab) -> Self {
        TripleStore {
            vocab,
            ..Self::default()
        }
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn vocab_mut(&mut self) -> &mut Vocab {
        &mut self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.relations.len()
    }

    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    pub fn len(&self, split: Split) -> usize {
        self.splits[split.slot()].triples.len()
    }

    pub fn total_len(&self) -> usize {
        Split::ALL.iter().map(|s| self.len(*s)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_len() == 0
    }

    pub fn triples(&self, split: Split) -> &[Triple] {
        &self.splits[split.slot()].triples
    }

    /// Adds a triple by surface names. Returns `false` when the triple is
    /// already present in any split.
    pub fn add(&mut self, split: Split, head: &str, rel: &str, tail: &str) -> Result<bool, StoreError> {
        let h = self.vocab.entity(head);
        let r = self.vocab.relation(rel);
        let t = self.vocab.entity(tail);
        if h.is_skolem() || t.is_skolem() {
            return Err(StoreError::TooManyEntities);
        }
        Ok(self.insert(split, Triple::new(r, h, t)))
    }

    /// Adds an already interned triple.
    pub fn insert(&mut self, split: Split, t: Triple) -> bool {
        if self.splits.iter().any(|s| s.set.contains(&t)) {
            self.duplicates += 1;
            return false;
        }
        let data = &mut self.splits[split.slot()];
        data.set.insert(t);
        data.triples.push(t);
        data.by_relation.entry(t.rel).or_default().push((t.head, t.tail));
        if split == Split::Train {
            self.index.insert(t);
        }
        true
    }

    pub fn load_triples(&mut self, path: &Path, split: Split) -> Result<LoadReport, StoreError> {
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.to_owned(),
            source,
        })?;
        self.load_reader(BufReader::new(file), path, split)
    }

    pub fn load_reader<R: BufRead>(&mut self, reader: R, path: &Path, split: Split) -> Result<LoadReport, StoreError> {
        let mut report = LoadReport::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| StoreError::Io {
                path: path.to_owned(),
                source,
            })?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(StoreError::Parse {
                    path: path.to_owned(),
                    line: i + 1,
                    found: fields.len(),
                });
            }
            if fields.iter().any(|f| f.is_empty()) {
                return Err(StoreError::EmptyField {
                    path: path.to_owned(),
                    line: i + 1,
                });
            }
            if self.add(split, fields[0], fields[1], fields[2])? {
                report.added += 1;
            } else {
                report.duplicates += 1;
            }
        }
        if report.duplicates > 0 {
            log::warn!("{}: skipped {} duplicate triples", path.display(), report.duplicates);
        }
        Ok(report)
    }

    /// Loads `train.txt`, `valid.txt` and `test.txt` from a dataset directory.
    /// `train.txt` is required; the other two are optional.
    pub fn load_dir(dir: &Path) -> Result<Self, StoreError> {
        let mut store = TripleStore::new();
        for split in Split::ALL {
            let path = dir.join(split.file_name());
            if split != Split::Train && !path.exists() {
                continue;
            }
            store.load_triples(&path, split)?;
        }
        Ok(store)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), StoreError> {
        let io = |path: PathBuf| move |source| StoreError::Io { path, source };
        std::fs::create_dir_all(dir).map_err(io(dir.to_owned()))?;
        for split in Split::ALL {
            let path = dir.join(split.file_name());
            let file = File::create(&path).map_err(io(path.clone()))?;
            let mut w = BufWriter::new(file);
            for t in self.triples(split) {
                writeln!(
                    w,
                    "{}\t{}\t{}",
                    self.vocab.entity_name(t.head),
                    self.vocab.relation_name(t.rel),
                    self.vocab.entity_name(t.tail)
                )
                .map_err(io(path.clone()))?;
            }
            w.flush().map_err(io(path.clone()))?;
        }
        Ok(())
    }

    /// Pools every split, shuffles with `cfg.seed` and repartitions.
    pub fn resplit(&self, cfg: &SplitConfig) -> Result<TripleStore, StoreError> {
        cfg.validate()?;
        if self.is_empty() {
            return Err(StoreError::Empty);
        }
        let mut all: Vec<Triple> = Split::ALL
            .iter()
            .flat_map(|s| self.triples(*s).iter().copied())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        all.shuffle(&mut rng);
        let [train, valid, _] = cfg.sizes(all.len());
        let mut out = TripleStore::with_vocab(self.vocab.clone());
        for (i, t) in all.into_iter().enumerate() {
            let split = if i < train {
                Split::Train
            } else if i < train + valid {
                Split::Valid
            } else {
                Split::Test
            };
            out.insert(split, t);
        }
        Ok(out)
    }

    /// `(subject, object)` pairs of `relation` in `split`, in load order.
    pub fn instances_of(&self, relation: RelationId, split: Split) -> &[(EntityId, EntityId)] {
        self.splits[split.slot()]
            .by_relation
            .get(&relation)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn contains(&self, split: Split, t: &Triple) -> bool {
        self.splits[split.slot()].set.contains(t)
    }

    pub fn contains_any(&self, t: &Triple) -> bool {
        self.splits.iter().any(|s| s.set.contains(t))
    }

    /// Relations with at least one train triple, in id order.
    pub fn train_relations(&self) -> Vec<RelationId> {
        let mut rels: Vec<RelationId> = self.splits[0].by_relation.keys().copied().collect();
        rels.sort();
        rels
    }

    /// Fraction of valid ∪ test triples whose reverse `(y, x)` is connected
    /// by some train triple (by the same relation when `same_relation_only`).
    pub fn reverse_triple_fraction(&self, same_relation_only: bool) -> Result<f64, StoreError> {
        let held_out: Vec<&Triple> = self
            .triples(Split::Valid)
            .iter()
            .chain(self.triples(Split::Test))
            .collect();
        if held_out.is_empty() {
            return Err(StoreError::UndefinedStatistic("valid and test splits are empty"));
        }
        let reversed = held_out
            .iter()
            .filter(|t| {
                if same_relation_only {
                    self.has_edge(t.rel, t.tail, t.head)
                } else {
                    self.index
                        .by_entity
                        .get(t.tail.index())
                        .is_some_and(|ns| ns.iter().any(|n| n.direction == Direction::Out && n.other == t.head))
                }
            })
            .count();
        Ok(reversed as f64 / held_out.len() as f64)
    }

    /// Incident train edges of `entity`, in load order.
    pub fn incident(&self, entity: EntityId) -> &[Neighbor] {
        self.index
            .by_entity
            .get(entity.index())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn neighbors(&self, entity: EntityId, filter: NeighborFilter) -> Vec<Neighbor> {
        self.incident(entity)
            .iter()
            .filter(|n| match filter {
                NeighborFilter::Both => true,
                NeighborFilter::Out => n.direction == Direction::Out,
                NeighborFilter::In => n.direction == Direction::In,
            })
            .copied()
            .collect()
    }

    /// Train objects `o` with `rel(subject, o)`.
    pub fn objects(&self, rel: RelationId, subject: EntityId) -> &[EntityId] {
        self.index.fwd.get(&(rel, subject)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Train subjects `s` with `rel(s, object)`.
    pub fn subjects(&self, rel: RelationId, object: EntityId) -> &[EntityId] {
        self.index.bwd.get(&(rel, object)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct train subjects of `rel`.
    pub fn subjects_of(&self, rel: RelationId) -> &[EntityId] {
        self.index.subjects.get(&rel).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Distinct train objects of `rel`.
    pub fn objects_of(&self, rel: RelationId) -> &[EntityId] {
        self.index.objects.get(&rel).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_edge(&self, rel: RelationId, head: EntityId, tail: EntityId) -> bool {
        self.contains(Split::Train, &Triple::new(rel, head, tail))
    }
}
