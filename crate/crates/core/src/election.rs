//! Approval-based multiwinner elections and committee arithmetic.
//!
//! Candidates and voters are dense integer ids (`0..m`, `0..n`). Names coming
//! from data files live in [`ElectionMeta`] and never enter the hot paths.

use std::collections::BTreeMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CandidateId = usize;
pub type VoterId = usize;

/// Default cap on the number of committees an exhaustive enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Optional descriptive data attached to an election.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectionMeta {
    pub name: Option<String>,
    /// Original candidate labels, indexed by dense id. Empty when unknown.
    pub candidate_labels: Vec<String>,
    /// Original voter labels, indexed by dense id. Empty when unknown.
    pub voter_labels: Vec<String>,
    pub tags: BTreeMap<String, String>,
}

/// A sorted, duplicate-free set of candidate ids. A committee is a
/// `CandidateSet` whose size equals the election's committee size.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateSet(Vec<CandidateId>);

pub type Committee = CandidateSet;

impl CandidateSet {
    pub fn new(ids: impl IntoIterator<Item = CandidateId>) -> Self {
        let mut ids: Vec<_> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        CandidateSet(ids)
    }

    /// Wraps ids that are already sorted and unique.
    pub(crate) fn from_sorted_unchecked(ids: Vec<CandidateId>) -> Self {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]));
        CandidateSet(ids)
    }

    pub fn empty() -> Self {
        CandidateSet(Vec::new())
    }

    pub fn ids(&self) -> &[CandidateId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: CandidateId) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = CandidateId> + '_ {
        self.0.iter().copied()
    }

    pub fn without(&self, c: CandidateId) -> Self {
        CandidateSet(self.0.iter().copied().filter(|&x| x != c).collect())
    }

    pub fn with(&self, c: CandidateId) -> Self {
        let mut ids = self.0.clone();
        if let Err(pos) = ids.binary_search(&c) {
            ids.insert(pos, c);
        }
        CandidateSet(ids)
    }

    pub fn union(&self, other: &CandidateSet) -> Self {
        CandidateSet::new(self.iter().chain(other.iter()))
    }

    pub fn intersection_len(&self, other: &CandidateSet) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    pub fn is_subset_of(&self, other: &CandidateSet) -> bool {
        self.intersection_len(other) == self.len()
    }

    /// Membership mask over `0..m`.
    pub fn mask(&self, m: usize) -> Vec<bool> {
        let mut mask = vec![false; m];
        for c in self.iter() {
            mask[c] = true;
        }
        mask
    }
}

impl FromIterator<CandidateId> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = CandidateId>>(iter: I) -> Self {
        CandidateSet::new(iter)
    }
}

impl fmt::Display for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().join(","))
    }
}

/// An approval-based multiwinner election `(N, C, A, k)`.
///
/// Immutable after construction. Approver sets are kept twice: as sorted id
/// lists for iteration and as voter bitsets for set algebra.
#[derive(Debug, Clone)]
pub struct Election {
    num_voters: usize,
    num_candidates: usize,
    committee_size: usize,
    ballots: Vec<Vec<CandidateId>>,
    approvers: Vec<Vec<VoterId>>,
    approver_bits: Vec<FixedBitSet>,
    pub meta: ElectionMeta,
}

impl PartialEq for Election {
    fn eq(&self, other: &Self) -> bool {
        self.num_candidates == other.num_candidates
            && self.committee_size == other.committee_size
            && self.ballots == other.ballots
    }
}

impl Election {
    /// Builds an election from per-voter approval ballots over `0..m`.
    ///
    /// Ballots may be empty and may list a candidate more than once; the
    /// stored ballot is the sorted set.
    pub fn new<B, I>(ballots: B, m: usize, k: usize) -> Result<Self>
    where
        B: IntoIterator<Item = I>,
        I: IntoIterator<Item = CandidateId>,
    {
        let ballots: Vec<Vec<CandidateId>> = ballots
            .into_iter()
            .map(|b| {
                let mut b: Vec<_> = b.into_iter().collect();
                b.sort_unstable();
                b.dedup();
                b
            })
            .collect();
        let n = ballots.len();
        if n == 0 || m == 0 {
            return Err(Error::EmptyElection);
        }
        if k == 0 || k > m {
            return Err(Error::CommitteeSizeOutOfRange { k, num_candidates: m });
        }
        let mut approvers = vec![Vec::new(); m];
        let mut approver_bits = vec![FixedBitSet::with_capacity(n); m];
        for (i, ballot) in ballots.iter().enumerate() {
            for &c in ballot {
                if c >= m {
                    return Err(Error::CandidateOutOfRange { id: c, num_candidates: m });
                }
                approvers[c].push(i);
                approver_bits[c].insert(i);
            }
        }
        Ok(Election {
            num_voters: n,
            num_candidates: m,
            committee_size: k,
            ballots,
            approvers,
            approver_bits,
            meta: ElectionMeta::default(),
        })
    }

    pub fn with_meta(mut self, meta: ElectionMeta) -> Self {
        self.meta = meta;
        self
    }

    /// Same profile with a different committee size.
    pub fn with_committee_size(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.num_candidates {
            return Err(Error::CommitteeSizeOutOfRange { k, num_candidates: self.num_candidates });
        }
        let mut e = self.clone();
        e.committee_size = k;
        Ok(e)
    }

    /// n
    pub fn num_voters(&self) -> usize {
        self.num_voters
    }

    /// m
    pub fn num_candidates(&self) -> usize {
        self.num_candidates
    }

    /// k
    pub fn committee_size(&self) -> usize {
        self.committee_size
    }

    pub fn ballots(&self) -> &[Vec<CandidateId>] {
        &self.ballots
    }

    pub fn ballot(&self, voter: VoterId) -> &[CandidateId] {
        &self.ballots[voter]
    }

    /// Voters approving `c`, ascending.
    pub fn approvers(&self, c: CandidateId) -> &[VoterId] {
        &self.approvers[c]
    }

    pub fn approver_bits(&self, c: CandidateId) -> &FixedBitSet {
        &self.approver_bits[c]
    }

    pub fn approval_score(&self, c: CandidateId) -> usize {
        self.approvers[c].len()
    }

    pub fn approval_scores(&self) -> Vec<usize> {
        self.approvers.iter().map(Vec::len).collect()
    }

    pub fn candidates(&self) -> std::ops::Range<CandidateId> {
        0..self.num_candidates
    }

    /// Total number of approvals divided by n.
    pub fn mean_ballot_size(&self) -> f64 {
        self.ballots.iter().map(Vec::len).sum::<usize>() as f64 / self.num_voters as f64
    }

    pub fn validate_set(&self, set: &CandidateSet) -> Result<()> {
        match set.ids().last() {
            Some(&c) if c >= self.num_candidates => {
                Err(Error::CandidateOutOfRange { id: c, num_candidates: self.num_candidates })
            }
            _ => Ok(()),
        }
    }

    /// Number of committee members each voter approves.
    pub fn representation(&self, set: &CandidateSet) -> Vec<usize> {
        let mut rep = vec![0usize; self.num_voters];
        for c in set.iter() {
            for &i in &self.approvers[c] {
                rep[i] += 1;
            }
        }
        rep
    }

    /// Voters approving at least one member of `set`.
    pub fn covered_voters(&self, set: &CandidateSet) -> FixedBitSet {
        let mut covered = FixedBitSet::with_capacity(self.num_voters);
        for c in set.iter() {
            covered.union_with(&self.approver_bits[c]);
        }
        covered
    }

    /// Enumerates every committee in lexicographic order, refusing when
    /// `C(m, k)` exceeds `cap`.
    pub fn committees(&self, cap: u64) -> Result<impl Iterator<Item = Committee> + '_> {
        self.committees_containing(&CandidateSet::empty(), cap)
    }

    /// Enumerates, in lexicographic order, every committee containing
    /// `required`.
    pub fn committees_containing(
        &self,
        required: &CandidateSet,
        cap: u64,
    ) -> Result<impl Iterator<Item = Committee> + '_> {
        self.validate_set(required)?;
        let k = self.committee_size;
        if required.len() > k {
            return Err(Error::RequiredTooLarge { required: required.len(), k });
        }
        let rest: Vec<CandidateId> = self.candidates().filter(|&c| !required.contains(c)).collect();
        let slots = k - required.len();
        check_cap(rest.len(), slots, cap)?;
        let required = required.clone();
        Ok(rest
            .into_iter()
            .combinations(slots)
            .map(move |chosen| required.union(&CandidateSet::from_sorted_unchecked(chosen))))
    }
}

/// Fails with [`Error::CapExceeded`] when `C(n, r) > cap`.
pub(crate) fn check_cap(n: usize, r: usize, cap: u64) -> Result<()> {
    match binomial_u128(n, r) {
        Some(count) if count <= cap as u128 => Ok(()),
        Some(count) => Err(Error::CapExceeded { requested: count.to_string(), cap }),
        None => Err(Error::CapExceeded { requested: format!("C({n},{r})"), cap }),
    }
}

/// `C(n, r)`, or `None` on overflow.
pub fn binomial_u128(n: usize, r: usize) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `d(W1, W2) = |W1 \ W2|` for equal-size sets.
pub fn committee_distance(w1: &CandidateSet, w2: &CandidateSet) -> Result<usize> {
    if w1.len() != w2.len() {
        return Err(Error::SizeMismatch { left: w1.len(), right: w2.len() });
    }
    Ok(w1.len() - w1.intersection_len(w2))
}

/// Expected distance between two independent uniformly random size-`k`
/// subsets of `m` candidates: `k (m - k) / m`.
///
/// Each candidate of `W1` misses `W2` with probability `(m - k) / m`.
pub fn expected_random_distance(m: usize, k: usize) -> Result<Ratio<u64>> {
    if k == 0 || k > m {
        return Err(Error::CommitteeSizeOutOfRange { k, num_candidates: m });
    }
    Ok(Ratio::new((k * (m - k)) as u64, m as u64))
}
