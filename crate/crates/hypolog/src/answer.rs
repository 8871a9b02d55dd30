//! Answers, run statistics and multiset comparison between engines.

use crate::sym::Sym;
use crate::syntax::{term_to_string, Term, VarId};
use std::collections::HashMap;

/// One solution: the query variables with their computed values, plus
/// the approximation degree of the whole derivation.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    /// Named query variables in source order. Unbound variables stay as
    /// `Term::Var` with engine-internal ids.
    pub bindings: Vec<(Sym, Term)>,
    pub degree: f64,
}

impl Answer {
    /// Rename the variables left in the answer to 0, 1, 2, ... jointly
    /// over all bindings, so answers from different engines compare equal
    /// when they differ only in internal variable numbering.
    pub fn canonical(&self) -> Answer {
        let mut map: HashMap<VarId, VarId> = HashMap::new();
        let bindings = self
            .bindings
            .iter()
            .map(|(n, t)| (*n, canon_term(t, &mut map)))
            .collect();
        Answer { bindings, degree: self.degree }
    }
}

fn canon_term(t: &Term, map: &mut HashMap<VarId, VarId>) -> Term {
    match t {
        Term::Var(v) => {
            let next = map.len() as VarId;
            Term::Var(*map.entry(*v).or_insert(next))
        }
        Term::Comp(f, args) => {
            Term::Comp(*f, args.iter().map(|a| canon_term(a, map)).collect())
        }
        other => other.clone(),
    }
}

impl std::fmt::Display for Answer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.bindings.is_empty() {
            write!(f, "true")?;
        } else {
            for (i, (name, t)) in self.bindings.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{name} = {}", term_to_string(t, &[]))?;
            }
        }
        if self.degree < 1.0 {
            write!(f, " with {}", self.degree)?;
        }
        Ok(())
    }
}

/// Counters reported by a solve run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Clause resolution steps attempted successfully (rule 1 firings).
    pub resolutions: u64,
    /// Hypothesis assumptions made (rule 2 activations; for the compiled
    /// engine, registration events).
    pub registrations: u64,
    /// Some branch hit the depth budget and was pruned.
    pub depth_pruned: bool,
    /// The global step limit stopped the whole search early.
    pub step_limited: bool,
}

impl SolveStats {
    pub fn inferences(&self) -> u64 {
        self.resolutions + self.registrations
    }
}

/// Degrees equal up to float noise.
pub fn degrees_eq(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn answers_match(a: &Answer, b: &Answer) -> bool {
    a.bindings == b.bindings && degrees_eq(a.degree, b.degree)
}

/// Order-insensitive comparison of two answer sets, up to variable
/// renaming and degree rounding. Returns a counterexample description on
/// mismatch.
pub fn compare_answer_multisets(left: &[Answer], right: &[Answer]) -> Result<(), String> {
    if left.len() != right.len() {
        return Err(format!(
            "answer counts differ: {} vs {}",
            left.len(),
            right.len()
        ));
    }
    let l: Vec<Answer> = left.iter().map(Answer::canonical).collect();
    let mut r: Vec<Option<Answer>> = right.iter().map(|a| Some(a.canonical())).collect();
    for (i, a) in l.iter().enumerate() {
        let found = r
            .iter_mut()
            .find(|slot| slot.as_ref().is_some_and(|b| answers_match(a, b)));
        match found {
            Some(slot) => *slot = None,
            None => return Err(format!("answer #{i} `{a}` has no counterpart")),
        }
    }
    Ok(())
}

/// Strict comparison that also requires the same order.
pub fn compare_answer_sequences(left: &[Answer], right: &[Answer]) -> Result<(), String> {
    if left.len() != right.len() {
        return Err(format!(
            "answer counts differ: {} vs {}",
            left.len(),
            right.len()
        ));
    }
    for (i, (a, b)) in left.iter().zip(right).enumerate() {
        let (ca, cb) = (a.canonical(), b.canonical());
        if !answers_match(&ca, &cb) {
            return Err(format!("answer #{i} differs: `{ca}` vs `{cb}`"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ans(name: &str, t: Term, d: f64) -> Answer {
        Answer { bindings: vec![(Sym::new(name), t)], degree: d }
    }

    #[test]
    fn canonical_renames_jointly() {
        let a = ans("X", Term::comp("f", vec![Term::Var(7), Term::Var(7), Term::Var(9)]), 1.0);
        let b = ans("X", Term::comp("f", vec![Term::Var(2), Term::Var(2), Term::Var(5)]), 1.0);
        assert_eq!(a.canonical(), b.canonical());
        let c = ans("X", Term::comp("f", vec![Term::Var(2), Term::Var(5), Term::Var(5)]), 1.0);
        assert_ne!(a.canonical(), c.canonical());
    }

    #[test]
    fn multiset_comparison() {
        let a1 = ans("X", Term::int(1), 1.0);
        let a2 = ans("X", Term::int(2), 0.5);
        assert!(compare_answer_multisets(&[a1.clone(), a2.clone()], &[a2.clone(), a1.clone()]).is_ok());
        assert!(compare_answer_multisets(&[a1.clone(), a1.clone()], &[a1.clone(), a2.clone()]).is_err());
        assert!(compare_answer_multisets(&[a1.clone()], &[]).is_err());
        // multiplicities matter
        assert!(compare_answer_multisets(&[a1.clone(), a1.clone()], &[a1.clone()]).is_err());
        // order matters only for the strict variant
        assert!(compare_answer_sequences(&[a1.clone(), a2.clone()], &[a2, a1]).is_err());
    }

    #[test]
    fn degree_noise_tolerated() {
        let a = ans("X", Term::int(1), 0.3);
        let b = ans("X", Term::int(1), 0.3 + 1e-12);
        assert!(compare_answer_multisets(&[a], &[b]).is_ok());
    }
}
