//! Candidate equivalence classes: two candidates are equivalent when exactly
//! the same voters approve them. Everything the axioms look at is invariant
//! under swapping equivalent candidates, which is what the FPT algorithms
//! (parameterized by the number of voters) exploit.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::election::{CandidateId, CandidateSet, Election};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// Smallest member id.
    pub representative: CandidateId,
    /// Members, ascending.
    pub members: Vec<CandidateId>,
    pub approvers: FixedBitSet,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Partition of (a subset of) the candidates into equivalence classes,
/// ordered by representative.
#[derive(Debug, Clone)]
pub struct QuotientStructure {
    classes: Vec<EquivalenceClass>,
    class_of: Vec<Option<usize>>,
}

impl QuotientStructure {
    /// Quotient of the full candidate set.
    pub fn build(e: &Election) -> Self {
        Self::build_excluding(e, &CandidateSet::empty())
    }

    /// Quotient of `C \ excluded`. Excluded candidates map to no class.
    pub fn build_excluding(e: &Election, excluded: &CandidateSet) -> Self {
        let m = e.num_candidates();
        let mut index: HashMap<&FixedBitSet, usize> = HashMap::new();
        let mut classes: Vec<EquivalenceClass> = Vec::new();
        let mut class_of = vec![None; m];
        for c in e.candidates().filter(|&c| !excluded.contains(c)) {
            let bits = e.approver_bits(c);
            let idx = *index.entry(bits).or_insert_with(|| {
                classes.push(EquivalenceClass {
                    representative: c,
                    members: Vec::new(),
                    approvers: bits.clone(),
                });
                classes.len() - 1
            });
            classes[idx].members.push(c);
            class_of[c] = Some(idx);
        }
        QuotientStructure { classes, class_of }
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class_of(&self, c: CandidateId) -> Option<usize> {
        self.class_of.get(c).copied().flatten()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(EquivalenceClass::size).collect()
    }

    /// Classes approved by voter `i`.
    pub fn classes_of_voter(&self, i: usize) -> Vec<usize> {
        (0..self.classes.len()).filter(|&j| self.classes[j].approvers.contains(i)).collect()
    }

    /// Per-class member counts of `set` (members outside the quotient are
    /// ignored).
    pub fn class_counts(&self, set: &CandidateSet) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for c in set.iter() {
            if let Some(j) = self.class_of(c) {
                counts[j] += 1;
            }
        }
        counts
    }

    /// Representatives of the given classes.
    pub fn representatives(&self, class_ids: &[usize]) -> CandidateSet {
        CandidateSet::new(class_ids.iter().map(|&j| self.classes[j].representative))
    }
}
