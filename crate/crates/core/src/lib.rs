//! Walk-based rule mining over knowledge graphs with proper rule
//! hierarchies and hierarchical pruning.
//!
//! The pipeline per target relation:
//!
//! 1. sample random walks from the target's training instances and abstract
//!    them into closed (CAR) and open (OAR) abstract rules,
//! 2. arrange the abstract rules in an atom-addition hierarchy and prune
//!    whole subtrees whose support falls under a prior threshold,
//! 3. specialize the surviving OARs into head-anchored (HAR) and
//!    both-anchored (BAR) rules over shared groundings,
//! 4. drop BARs that a subsuming HAR beats on smooth confidence.
//!
//! [`eval`] ranks link-prediction candidates with the learned rules.

pub mod error;
pub mod eval;
pub mod ground;
pub mod hierarchy;
pub mod miner;
pub mod par;
pub mod record;
pub mod rule;
pub mod store;
pub mod subsume;
pub mod synth;
pub mod toy;

pub use error::{HierarchyError, MineError, ParseError, RecordError, RuleError, StoreError};
pub use rule::{Atom, Rule, RuleKind, Term, Var};
pub use store::{EntityId, RelationId, Split, SplitConfig, Triple, TripleStore, Vocab};
