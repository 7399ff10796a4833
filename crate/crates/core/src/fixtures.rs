//! Small reference instances used by tests, docs and golden CLI outputs.

use crate::election::Election;

/// Ten voters, nine candidates, `k = 5`; the standard illustration of a
/// committee that satisfies JR but not EJR+.
///
/// Voter `i` (0-based) approves:
/// `0,1 -> {0,1,2}`, `2,3 -> {0,1,3}`, `4 -> {4}`, `5,6 -> {4,5}`, `7 -> {5}`,
/// `8 -> {5,6,7}`, `9 -> {5,6,8}`.
pub fn running_example() -> Election {
    let ballots: Vec<Vec<usize>> = vec![
        vec![0, 1, 2],
        vec![0, 1, 2],
        vec![0, 1, 3],
        vec![0, 1, 3],
        vec![4],
        vec![4, 5],
        vec![4, 5],
        vec![5],
        vec![5, 6, 7],
        vec![5, 6, 8],
    ];
    Election::new(ballots, 9, 5).expect("fixture is valid")
}

/// `n` voters with empty ballots over `m` candidates.
pub fn empty_profile(n: usize, m: usize, k: usize) -> Election {
    Election::new(vec![Vec::<usize>::new(); n], m, k).expect("fixture is valid")
}
