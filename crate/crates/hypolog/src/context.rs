//! Context identifiers, the prefix order on them, and the registration
//! store used by the compiled engine.
//!
//! A context identifier names the program context built by a chain of
//! assumptions: the empty sequence names the initial user program, and
//! every embedded implication extends the current identifier with a fresh
//! integer index. Identifiers are stored most-recent-first, so the prefix
//! order `s1 ⪯ s2` becomes a suffix check on the stored lists.

use crate::syntax::Term;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

/// A context identifier: a shared cons list of indexes, newest first.
/// `ContextId::root()` is the empty sequence.
#[derive(Clone, Default)]
pub struct ContextId(Option<Arc<CtxNode>>);

struct CtxNode {
    index: u64,
    len: u32,
    parent: ContextId,
}

impl ContextId {
    /// The identifier of the initial user program.
    pub fn root() -> ContextId {
        ContextId(None)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_none()
    }

    pub fn len(&self) -> u32 {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The context reached by assuming one more hypothesis under `self`,
    /// tagged with fresh index `i`.
    pub fn extend(&self, i: u64) -> ContextId {
        ContextId(Some(Arc::new(CtxNode {
            index: i,
            len: self.len() + 1,
            parent: self.clone(),
        })))
    }

    /// Indexes newest-first (the storage order).
    pub fn indexes(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.len() as usize);
        let mut cur = self;
        while let Some(n) = &cur.0 {
            out.push(n.index);
            cur = &n.parent;
        }
        out
    }

    /// Prefix order: `self ⪯ other` iff `other` extends `self`. In the
    /// newest-first storage this is a suffix check, linear in the length
    /// difference thanks to structure sharing.
    pub fn is_prefix_of(&self, other: &ContextId) -> bool {
        let (a, b) = (self.len(), other.len());
        if a > b {
            return false;
        }
        let mut cur = other;
        for _ in 0..(b - a) {
            cur = &cur.0.as_ref().unwrap().parent;
        }
        cur.same_as(self)
    }

    fn same_as(&self, other: &ContextId) -> bool {
        match (&self.0, &other.0) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                if Arc::ptr_eq(a, b) {
                    return true;
                }
                a.index == b.index && a.len == b.len && a.parent.same_as(&b.parent)
            }
            _ => false,
        }
    }
}

impl PartialEq for ContextId {
    fn eq(&self, other: &ContextId) -> bool {
        self.len() == other.len() && self.same_as(other)
    }
}
impl Eq for ContextId {}

impl PartialOrd for ContextId {
    fn partial_cmp(&self, other: &ContextId) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ContextId {
    fn cmp(&self, other: &ContextId) -> Ordering {
        self.indexes().cmp(&other.indexes())
    }
}

impl std::hash::Hash for ContextId {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        for i in self.indexes() {
            i.hash(state);
        }
    }
}

impl std::fmt::Debug for ContextId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self)
    }
}

impl std::fmt::Display for ContextId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (k, i) in self.indexes().iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "]")
    }
}

/// One registration: the snapshot of the shared-variable values and the
/// context the hypothesis was assumed in.
#[derive(Debug, Clone)]
pub struct Registration {
    pub shared_values: Vec<Term>,
    pub context: ContextId,
}

/// Per-solve-run store of hypothesis registrations, plus the fresh-index
/// counter. Entries are append-only during a derivation; stale entries
/// are harmless because their context indexes can never pass the prefix
/// check from a live context.
#[derive(Debug, Default)]
pub struct RegistrationStore {
    counter: u64,
    entries: HashMap<u32, Vec<Registration>>,
    total: u64,
}

impl RegistrationStore {
    pub fn new() -> RegistrationStore {
        RegistrationStore::default()
    }

    /// Strictly increasing, starting at 0, unique within this store.
    pub fn fresh_index(&mut self) -> u64 {
        let i = self.counter;
        self.counter += 1;
        i
    }

    pub fn register(&mut self, rule_id: u32, shared_values: Vec<Term>, context: ContextId) {
        self.entries.entry(rule_id).or_default().push(Registration {
            shared_values,
            context,
        });
        self.total += 1;
    }

    /// All entries for `rule_id` in insertion order. The caller filters
    /// by the prefix check against its current context.
    pub fn lookup(&self, rule_id: u32) -> &[Registration] {
        self.entries.get(&rule_id).map_or(&[], |v| v.as_slice())
    }

    /// Number of live registrations for one rule.
    pub fn count_for(&self, rule_id: u32) -> usize {
        self.lookup(rule_id).len()
    }

    /// Total registration events over the run (not reduced by trimming).
    pub fn total_registrations(&self) -> u64 {
        self.total
    }

    /// Drop entries of `rule_id` back down to `len`. Used by the optional
    /// trim-on-backtrack mode once an implication subtree is exhausted.
    pub fn truncate(&mut self, rule_id: u32, len: usize) {
        if let Some(v) = self.entries.get_mut(&rule_id) {
            v.truncate(len);
        }
    }
}
