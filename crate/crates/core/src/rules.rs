//! Sequential approval-based voting rules and score-based selections.
//!
//! All arithmetic is exact (`BigRational`) and every tie is broken towards
//! the smallest candidate id.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use crate::election::{CandidateId, CandidateSet, Committee, Election};

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Method of Equal Shares (unit costs, budget `k/n` per voter), completed by
/// seq-Phragmén when no further candidate is affordable.
pub fn mes_with_phragmen_completion(e: &Election) -> Committee {
    let selected = method_of_equal_shares(e);
    phragmen_from(e, selected)
}

/// The (possibly incomplete) MES outcome, in selection order.
pub fn method_of_equal_shares(e: &Election) -> Vec<CandidateId> {
    let n = e.num_voters();
    let k = e.committee_size();
    let mut budget = vec![ratio(k, n); n];
    let mut selected: Vec<CandidateId> = Vec::with_capacity(k);
    let mut in_w = vec![false; e.num_candidates()];
    let one = BigRational::one();
    while selected.len() < k {
        let mut best: Option<(BigRational, CandidateId)> = None;
        for c in e.candidates().filter(|&c| !in_w[c]) {
            let Some(rho) = equal_share_price(e.approvers(c).iter().map(|&i| &budget[i]), &one)
            else {
                continue;
            };
            if best.as_ref().is_none_or(|(b, _)| rho < *b) {
                best = Some((rho, c));
            }
        }
        let Some((rho, c)) = best else { break };
        for &i in e.approvers(c) {
            let pay = if budget[i] < rho { budget[i].clone() } else { rho.clone() };
            budget[i] -= pay;
        }
        in_w[c] = true;
        selected.push(c);
    }
    selected
}

/// Smallest `rho` with `sum_i min(b_i, rho) = cost`, or `None` when the
/// supporters cannot afford `cost` together.
fn equal_share_price<'a>(budgets: impl Iterator<Item = &'a BigRational>, cost: &BigRational) -> Option<BigRational> {
    let mut budgets: Vec<&BigRational> = budgets.collect();
    if budgets.is_empty() {
        return None;
    }
    let total: BigRational = budgets.iter().copied().sum();
    if total < *cost {
        return None;
    }
    budgets.sort();
    let mut paid_in_full = BigRational::zero();
    let s = budgets.len();
    for (j, b) in budgets.iter().enumerate() {
        let rho = (cost - &paid_in_full) / BigRational::from_integer(BigInt::from(s - j));
        if rho <= **b {
            return Some(rho);
        }
        paid_in_full += *b;
    }
    None
}

/// Sequential Phragmén: each round adds the candidate whose election yields
/// the smallest maximal load among its supporters. Unsupported candidates come
/// last, by id.
pub fn seq_phragmen(e: &Election) -> Committee {
    phragmen_from(e, Vec::new())
}

/// Runs seq-Phragmén from zero loads with `seated` already on the committee.
fn phragmen_from(e: &Election, seated: Vec<CandidateId>) -> Committee {
    let k = e.committee_size();
    let mut in_w = vec![false; e.num_candidates()];
    for &c in &seated {
        in_w[c] = true;
    }
    let mut size = seated.len();
    let mut load = vec![BigRational::zero(); e.num_voters()];
    while size < k {
        let mut best: Option<(BigRational, CandidateId)> = None;
        for c in e.candidates().filter(|&c| !in_w[c] && e.approval_score(c) > 0) {
            let approvers = e.approvers(c);
            let sum: BigRational = approvers.iter().map(|&i| &load[i]).sum();
            let new_load = (sum + BigRational::one()) / BigRational::from_integer(approvers.len().into());
            if best.as_ref().is_none_or(|(b, _)| new_load < *b) {
                best = Some((new_load, c));
            }
        }
        let Some((new_load, c)) = best else { break };
        for &i in e.approvers(c) {
            load[i] = new_load.clone();
        }
        in_w[c] = true;
        size += 1;
    }
    // unsupported candidates, smallest ids first
    for c in e.candidates() {
        if size == k {
            break;
        }
        if !in_w[c] {
            in_w[c] = true;
            size += 1;
        }
    }
    CandidateSet::new(e.candidates().filter(|&c| in_w[c]))
}

/// Greedy (sequential) PAV: each round adds the candidate with the largest
/// marginal harmonic score `sum_i 1 / (|A_i ∩ W| + 1)` over its supporters.
pub fn seq_pav(e: &Election) -> Committee {
    let k = e.committee_size();
    let mut rep = vec![0usize; e.num_voters()];
    let mut in_w = vec![false; e.num_candidates()];
    for _ in 0..k {
        let mut best: Option<(BigRational, CandidateId)> = None;
        for c in e.candidates().filter(|&c| !in_w[c]) {
            // group supporters by current representation to keep the sum short
            let mut by_rep = vec![0usize; k + 1];
            for &i in e.approvers(c) {
                by_rep[rep[i]] += 1;
            }
            let gain: BigRational = by_rep
                .iter()
                .enumerate()
                .filter(|(_, &cnt)| cnt > 0)
                .map(|(r, &cnt)| ratio(cnt, r + 1))
                .sum();
            if best.as_ref().is_none_or(|(b, _)| gain > *b) {
                best = Some((gain, c));
            }
        }
        let (_, c) = best.expect("k <= m leaves a candidate each round");
        in_w[c] = true;
        for &i in e.approvers(c) {
            rep[i] += 1;
        }
    }
    CandidateSet::new(e.candidates().filter(|&c| in_w[c]))
}

/// The `k` candidates with the highest scores, ties towards smaller ids.
pub fn top_k_by_score<T: PartialOrd>(scores: &[T], k: usize) -> Committee {
    let mut order: Vec<CandidateId> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    CandidateSet::new(order.into_iter().take(k))
}

/// `|W1 ∩ W2| / k` for two committees of size `k`.
pub fn relative_overlap(w1: &CandidateSet, w2: &CandidateSet) -> crate::Result<Ratio<u64>> {
    if w1.len() != w2.len() || w1.is_empty() {
        return Err(crate::Error::SizeMismatch { left: w1.len(), right: w2.len() });
    }
    Ok(Ratio::new(w1.intersection_len(w2) as u64, w1.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::axioms::check_ejrp;
    use crate::fixtures::{empty_profile, running_example};
    use itertools::Itertools;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(ids: &[usize]) -> CandidateSet {
        CandidateSet::new(ids.iter().copied())
    }

    #[test]
    fn mes_small_example() {
        let e = Election::new(vec![vec![0], vec![0], vec![0], vec![1]], 2, 2).unwrap();
        assert_eq!(method_of_equal_shares(&e), vec![0]);
        assert_eq!(mes_with_phragmen_completion(&e), set(&[0, 1]));
    }

    #[test]
    fn rules_on_empty_profile_pick_smallest_ids() {
        let e = empty_profile(3, 5, 3);
        assert_eq!(mes_with_phragmen_completion(&e), set(&[0, 1, 2]));
        assert_eq!(seq_phragmen(&e), set(&[0, 1, 2]));
        assert_eq!(seq_pav(&e), set(&[0, 1, 2]));
    }

    #[test]
    fn mes_on_running_example_is_ejrp() {
        let e = running_example();
        let w = mes_with_phragmen_completion(&e);
        assert_eq!(w.len(), 5);
        assert!(check_ejrp(&e, &w).unwrap().satisfied);
    }

    #[test]
    fn phragmen_examples() {
        let e = Election::new(vec![vec![0], vec![0]], 2, 1).unwrap();
        assert_eq!(seq_phragmen(&e), set(&[0]));
        // round 1: c0 and c1 both reach load 1/2, c0 wins by id; round 2: c1
        // and c2 both reach max load 1, c1 wins by id
        let e = Election::new(vec![vec![0, 1], vec![0, 1], vec![2]], 3, 2).unwrap();
        assert_eq!(seq_phragmen(&e), set(&[0, 1]));
    }

    #[test]
    fn pav_examples() {
        let e = Election::new(vec![vec![0, 1], vec![0, 1], vec![2]], 3, 2).unwrap();
        assert_eq!(seq_pav(&e), set(&[0, 1]));
        // exhaustive PAV-score scan agrees that {0,1} and {0,2} tie at 3
        let pav = |w: &[usize]| -> BigRational {
            e.ballots()
                .iter()
                .map(|b| {
                    let r = b.iter().filter(|c| w.contains(c)).count();
                    (1..=r).map(|j| ratio(1, j)).sum::<BigRational>()
                })
                .sum()
        };
        assert_eq!(pav(&[0, 1]), pav(&[0, 2]));
        let e = Election::new(vec![vec![1]], 3, 1).unwrap();
        assert_eq!(seq_pav(&e), set(&[1]));
    }

    #[test]
    fn top_k_examples() {
        let e = running_example();
        let scores = e.approval_scores();
        assert_eq!(top_k_by_score(&scores, 5), set(&[5, 0, 1, 4, 2]));
        assert_eq!(top_k_by_score(&[1, 1, 1, 1], 2), set(&[0, 1]));
        assert_eq!(top_k_by_score(&[4.0, 3.0, 2.0, 1.0], 3), set(&[0, 1, 2]));
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(relative_overlap(&set(&[0, 1]), &set(&[0, 1])).unwrap(), Ratio::from_integer(1));
        assert_eq!(relative_overlap(&set(&[0, 1]), &set(&[2, 3])).unwrap(), Ratio::from_integer(0));
        assert_eq!(relative_overlap(&set(&[0, 1]), &set(&[1, 2])).unwrap(), Ratio::new(1, 2));
        assert!(relative_overlap(&set(&[0]), &set(&[1, 2])).is_err());
    }

    fn random_election(rng: &mut ChaCha8Rng) -> Election {
        let n = rng.random_range(1..=12);
        let m = rng.random_range(1..=8);
        let k = rng.random_range(1..=m);
        let ballots: Vec<Vec<usize>> =
            (0..n).map(|_| (0..m).filter(|_| rng.random_bool(0.35)).collect()).collect();
        Election::new(ballots, m, k).unwrap()
    }

    #[test]
    fn pav_with_k1_is_argmax_approval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let e = random_election(&mut rng).with_committee_size(1).unwrap();
            let scores = e.approval_scores();
            assert_eq!(seq_pav(&e), top_k_by_score(&scores, 1));
        }
    }

    #[test]
    fn rules_are_anonymous_and_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..150 {
            let e = random_election(&mut rng);
            let (m, k) = (e.num_candidates(), e.committee_size());
            let mut voters = e.ballots().to_vec();
            voters.shuffle(&mut rng);
            let shuffled = Election::new(voters, m, k).unwrap();
            for rule in [mes_with_phragmen_completion, seq_phragmen, seq_pav] {
                let w = rule(&e);
                assert_eq!(w.len(), k);
                assert_eq!(rule(&shuffled), w);
            }
        }
    }

    /// Party-list profile: party `p` has a prime number of voters approving
    /// exactly the party's candidates. With `k <= 6` no two parties ever tie
    /// under any of the rules, so the only ties are between equivalent
    /// candidates.
    fn party_profile(rng: &mut ChaCha8Rng) -> (Vec<Vec<usize>>, usize, usize) {
        const PRIMES: [usize; 5] = [7, 11, 13, 17, 19];
        let parties = rng.random_range(1..=PRIMES.len());
        let mut ballots = Vec::new();
        let mut next = 0;
        for &size in &PRIMES[..parties] {
            let members: Vec<usize> = (next..next + rng.random_range(1..=3)).collect();
            next += members.len();
            ballots.extend(std::iter::repeat_n(members, size));
        }
        let k = rng.random_range(1..=next.min(6));
        (ballots, next, k)
    }

    #[test]
    fn relabelling_candidates_permutes_outcome() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let (ballots, m, k) = party_profile(&mut rng);
            let e = Election::new(ballots.clone(), m, k).unwrap();
            let mut perm: Vec<usize> = (0..m).collect();
            perm.shuffle(&mut rng);
            let relabelled =
                Election::new(ballots.iter().map(|b| b.iter().map(|&c| perm[c]).collect_vec()), m, k)
                    .unwrap();
            let q = crate::quotient::QuotientStructure::build(&e);
            let mut inverse = vec![0; m];
            for (c, &p) in perm.iter().enumerate() {
                inverse[p] = c;
            }
            for rule in [mes_with_phragmen_completion, seq_phragmen, seq_pav] {
                let original = rule(&e);
                let mapped_back = CandidateSet::new(rule(&relabelled).iter().map(|c| inverse[c]));
                assert_eq!(q.class_counts(&original), q.class_counts(&mapped_back));
            }
        }
    }

    #[test]
    fn mes_always_ejrp_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let e = random_election(&mut rng);
            let w = mes_with_phragmen_completion(&e);
            assert!(check_ejrp(&e, &w).unwrap().satisfied, "{w} on {:?}", e.ballots());
        }
    }
}
