//! Combinatorial search for two JR committees at maximum distance, over
//! subsets of candidate equivalence classes.
//!
//! JR only depends on which voters are covered, and adding candidates never
//! uncovers anyone. So a committee satisfies JR as soon as the set of classes
//! it touches does. For two touched-class sets `X1`, `X2`, the committees can
//! use different members of every shared class except singletons, and any
//! remaining seats go to candidates outside both. The best distance is then
//! `min(k - k_c, m - k)` where `k_c` counts shared singleton classes.

use fixedbitset::FixedBitSet;

use crate::axioms::check_jr;
use crate::election::{binomial_u128, committee_distance, CandidateId, CandidateSet, Committee, Election};
use crate::error::{Error, Result};
use crate::quotient::QuotientStructure;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FptDiff {
    /// Largest `|W1 \ W2|` over pairs of JR committees.
    pub max_distance: usize,
    /// `max_distance >= k'`.
    pub decision: bool,
    /// A pair attaining `max_distance`.
    pub pair: (Committee, Committee),
    pub subsets_examined: u64,
}

fn jr_subsets(e: &Election, q: &QuotientStructure) -> Vec<Vec<usize>> {
    let n = e.num_voters();
    let k = e.committee_size();
    let tests: Vec<&FixedBitSet> =
        q.classes().iter().map(|c| &c.approvers).filter(|b| b.count_ones(..) * k >= n).collect();
    let is_jr = |covered: &FixedBitSet| tests.iter().all(|b| b.difference(covered).count() * k < n);
    let mut out = Vec::new();
    let mut stack: Vec<(usize, Vec<usize>, FixedBitSet)> = vec![(0, Vec::new(), FixedBitSet::with_capacity(n))];
    while let Some((from, chosen, covered)) = stack.pop() {
        if is_jr(&covered) {
            out.push(chosen.clone());
        }
        if chosen.len() == k {
            continue;
        }
        for j in from..q.len() {
            let mut cov = covered.clone();
            cov.union_with(&q.classes()[j].approvers);
            let mut next = chosen.clone();
            next.push(j);
            stack.push((j + 1, next, cov));
        }
    }
    out
}

/// Builds the pair for touched sets `x1`, `x2`: representatives first
/// (distinct members in shared classes of size two or more), then unused
/// candidates, then the other committee's candidates.
fn build_pair(e: &Election, q: &QuotientStructure, x1: &[usize], x2: &[usize]) -> (Committee, Committee) {
    let m = e.num_candidates();
    let k = e.committee_size();
    let mut w1: Vec<CandidateId> = x1.iter().map(|&j| q.classes()[j].members[0]).collect();
    let mut w2: Vec<CandidateId> = x2
        .iter()
        .map(|&j| {
            let members = &q.classes()[j].members;
            if x1.contains(&j) { members[members.len() - 1] } else { members[0] }
        })
        .collect();
    let mut used = vec![false; m];
    for &c in w1.iter().chain(&w2) {
        used[c] = true;
    }
    let mut spares = (0..m).filter(|&c| !used[c]);
    while w1.len() < k {
        match spares.next() {
            Some(c) => w1.push(c),
            None => break,
        }
    }
    while w2.len() < k {
        match spares.next() {
            Some(c) => w2.push(c),
            None => break,
        }
    }
    let (s1, s2) = (w1.clone(), w2.clone());
    for &c in &s2 {
        if w1.len() < k && !w1.contains(&c) {
            w1.push(c);
        }
    }
    for &c in &s1 {
        if w2.len() < k && !w2.contains(&c) {
            w2.push(c);
        }
    }
    (CandidateSet::new(w1), CandidateSet::new(w2))
}

/// Decides whether two JR committees at distance at least `k_prime` exist,
/// and returns a pair at maximum distance. The number of class subsets of
/// size at most `k` must not exceed `cap`.
pub fn diff_committees_fpt_jr(e: &Election, k_prime: usize, cap: u64) -> Result<FptDiff> {
    let k = e.committee_size();
    let m = e.num_candidates();
    let q = QuotientStructure::build(e);
    let subsets = (0..=k.min(q.len()))
        .try_fold(0u128, |acc, j| binomial_u128(q.len(), j).and_then(|b| acc.checked_add(b)));
    match subsets {
        Some(s) if s <= cap as u128 => {}
        Some(s) => return Err(Error::CapExceeded { requested: s.to_string(), cap }),
        None => return Err(Error::CapExceeded { requested: format!("2^{}", q.len()), cap }),
    }
    let good = jr_subsets(e, &q);
    let ceiling = k.min(m - k);
    let mut best: Option<(usize, usize, usize)> = None;
    'outer: for a in 0..good.len() {
        for b in a..good.len() {
            let shared_singletons =
                good[a].iter().filter(|j| q.classes()[**j].size() == 1 && good[b].contains(j)).count();
            let d = (k - shared_singletons).min(m - k);
            if best.is_none_or(|(bd, _, _)| d > bd) {
                best = Some((d, a, b));
                if d == ceiling {
                    break 'outer;
                }
            }
        }
    }
    let (d, a, b) = best.ok_or_else(|| Error::Internal("no JR class subset".into()))?;
    let (w1, w2) = build_pair(e, &q, &good[a], &good[b]);
    if w1.len() != k || w2.len() != k || committee_distance(&w1, &w2)? != d {
        return Err(Error::Internal(format!("pair construction missed distance {d}")));
    }
    if !check_jr(e, &w1)?.satisfied || !check_jr(e, &w2)?.satisfied {
        return Err(Error::Internal("constructed pair violates JR".into()));
    }
    Ok(FptDiff { max_distance: d, decision: d >= k_prime, pair: (w1, w2), subsets_examined: good.len() as u64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::{satisfies, Axiom};
    use crate::election::DEFAULT_ENUMERATION_CAP;
    use crate::fixtures::{empty_profile, running_example};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_max(e: &Election) -> usize {
        let jr: Vec<_> = e.committees(u64::MAX).unwrap().filter(|w| satisfies(e, w, Axiom::Jr)).collect();
        let mut best = 0;
        for a in &jr {
            for b in &jr {
                best = best.max(committee_distance(a, b).unwrap());
            }
        }
        best
    }

    #[test]
    fn empty_ballots_allow_disjoint_committees() {
        let e = empty_profile(3, 4, 2);
        let r = diff_committees_fpt_jr(&e, 2, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(r.decision);
        assert_eq!(r.max_distance, 2);
        assert_eq!(r.pair, (CandidateSet::new([0, 1]), CandidateSet::new([2, 3])));
    }

    #[test]
    fn single_committee_has_distance_zero() {
        let e = empty_profile(2, 3, 3);
        let r = diff_committees_fpt_jr(&e, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(!r.decision);
        assert_eq!(r.max_distance, 0);
    }

    #[test]
    fn running_example_matches_all_pairs_scan() {
        let e = running_example();
        let r = diff_committees_fpt_jr(&e, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(r.max_distance, brute_max(&e));
    }

    #[test]
    fn agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..150 {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(1..=8);
            let k = rng.random_range(1..=m);
            let p: f64 = rng.random_range(0.1..0.7);
            let ballots: Vec<Vec<usize>> =
                (0..n).map(|_| (0..m).filter(|_| rng.random_bool(p)).collect()).collect();
            let e = Election::new(ballots, m, k).unwrap();
            let expect = brute_max(&e);
            let r = diff_committees_fpt_jr(&e, expect, DEFAULT_ENUMERATION_CAP).unwrap();
            assert_eq!(r.max_distance, expect, "{e:?}");
            assert!(r.decision);
            assert!(!diff_committees_fpt_jr(&e, expect + 1, DEFAULT_ENUMERATION_CAP).unwrap().decision);
        }
    }

    #[test]
    fn cap_applies_to_class_subsets() {
        let e = running_example();
        assert!(matches!(diff_committees_fpt_jr(&e, 1, 3), Err(Error::CapExceeded { .. })));
    }
}
