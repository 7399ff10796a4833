//! Exact counting of proportional committees.
//!
//! [`count_brute_force`] enumerates committees and is the reference oracle.
//! [`count_jr_fpt`] works on the candidate quotient: JR only depends on which
//! voters are covered, and coverage only depends on which equivalence classes
//! a committee touches. So it enumerates class subsets `X`, tests JR once per
//! subset, and counts the committees touching exactly the classes of `X` with
//! a small dynamic program over class sizes.

use fixedbitset::FixedBitSet;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::axioms::{satisfies, Axiom};
use crate::election::{binomial_u128, CandidateSet, Election};
use crate::error::{Error, Result};
use crate::quotient::QuotientStructure;

/// Pascal triangle of big binomial coefficients, rows `0..=max_n`.
#[derive(Debug, Clone)]
pub struct Pascal {
    rows: Vec<Vec<BigUint>>,
}

impl Pascal {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<BigUint>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![BigUint::one()]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(BigUint::one());
            for r in 1..n {
                row.push(&prev[r - 1] + &prev[r]);
            }
            row.push(BigUint::one());
            rows.push(row);
        }
        Pascal { rows }
    }

    /// `C(n, r)`; zero when `r > n`. Panics if `n` exceeds the table.
    pub fn get(&self, n: usize, r: usize) -> BigUint {
        if r > n {
            BigUint::zero()
        } else {
            self.rows[n][r].clone()
        }
    }

    fn at(&self, n: usize, r: usize) -> &BigUint {
        &self.rows[n][r]
    }
}

/// Big `C(n, r)`.
pub fn binomial(n: usize, r: usize) -> BigUint {
    if r > n {
        return BigUint::zero();
    }
    let r = r.min(n - r);
    let mut acc = BigUint::one();
    for i in 0..r {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Number of size-`k` committees containing `must_contain` that satisfy
/// `axiom`, by exhaustive enumeration.
pub fn count_brute_force(e: &Election, axiom: Axiom, must_contain: &CandidateSet, cap: u64) -> Result<BigUint> {
    let t = axiom.t_for(e.committee_size());
    if t == 0 || t > e.committee_size() {
        return Err(Error::TOutOfRange { t, k: e.committee_size() });
    }
    let count = e.committees_containing(must_contain, cap)?.filter(|w| satisfies(e, w, axiom)).count();
    Ok(BigUint::from(count))
}

/// Extends a completion row by one class of size `a`:
/// `next[s] = sum_{i=1}^{min(a, s)} C(a, i) * row[s - i]`.
fn extend_row(row: &[BigUint], a: usize, pascal: &Pascal) -> Vec<BigUint> {
    let mut next = vec![BigUint::zero(); row.len()];
    for (s, slot) in next.iter_mut().enumerate() {
        for i in 1..=a.min(s) {
            let prev = &row[s - i];
            if !prev.is_zero() {
                *slot += pascal.at(a, i) * prev;
            }
        }
    }
    next
}

/// The completion table for classes of the given sizes: entry `[j][s]` is
/// the number of ways to pick `s` candidates from the first `j` classes using
/// at least one from each. Row `0` is `[1, 0, 0, ...]`.
pub fn completion_table(sizes: &[usize], k: usize) -> Vec<Vec<BigUint>> {
    let pascal = Pascal::new(sizes.iter().copied().max().unwrap_or(0));
    let mut table = Vec::with_capacity(sizes.len() + 1);
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    table.push(row);
    for &a in sizes {
        let next = extend_row(table.last().expect("row 0 exists"), a, &pascal);
        table.push(next);
    }
    table
}

struct FptSearch<'a> {
    e: &'a Election,
    /// Classes of `C \ must_contain`.
    classes: Vec<(usize, FixedBitSet)>,
    /// Distinct approver sets of all candidates, used for the JR test.
    jr_tests: Vec<FixedBitSet>,
    seats: usize,
    pascal: Pascal,
    total: BigUint,
}

impl FptSearch<'_> {
    fn is_jr(&self, covered: &FixedBitSet) -> bool {
        let n = self.e.num_voters();
        let k = self.e.committee_size();
        self.jr_tests.iter().all(|bits| bits.difference(covered).count() * k < n)
    }

    fn visit(&mut self, from: usize, depth: usize, row: &[BigUint], covered: &FixedBitSet) {
        if !row[self.seats].is_zero() && self.is_jr(covered) {
            self.total += &row[self.seats];
        }
        if depth == self.seats {
            return;
        }
        for j in from..self.classes.len() {
            let (a, bits) = &self.classes[j];
            let next = extend_row(row, *a, &self.pascal);
            let mut cov = covered.clone();
            cov.union_with(bits);
            self.visit(j + 1, depth + 1, &next, &cov);
        }
    }
}

/// Number of JR committees containing `must_contain`, via the quotient.
///
/// The number of class subsets visited is `sum_{j <= k - p} C(|Q|, j)` where
/// `p = |must_contain|` and `Q` is the quotient of the remaining candidates;
/// this must not exceed `cap`.
pub fn count_jr_fpt(e: &Election, must_contain: &CandidateSet, cap: u64) -> Result<BigUint> {
    e.validate_set(must_contain)?;
    let k = e.committee_size();
    if must_contain.len() > k {
        return Err(Error::RequiredTooLarge { required: must_contain.len(), k });
    }
    let seats = k - must_contain.len();
    let q = QuotientStructure::build_excluding(e, must_contain);
    let subsets = (0..=seats.min(q.len()))
        .try_fold(0u128, |acc, j| binomial_u128(q.len(), j).and_then(|b| acc.checked_add(b)));
    match subsets {
        Some(s) if s <= cap as u128 => {}
        Some(s) => return Err(Error::CapExceeded { requested: s.to_string(), cap }),
        None => return Err(Error::CapExceeded { requested: format!("2^{}", q.len()), cap }),
    }
    let jr_tests = QuotientStructure::build(e)
        .classes()
        .iter()
        .map(|c| c.approvers.clone())
        .filter(|bits| bits.count_ones(..) * k >= e.num_voters())
        .collect();
    let max_class = q.sizes().into_iter().max().unwrap_or(0);
    let mut search = FptSearch {
        e,
        classes: q.classes().iter().map(|c| (c.size(), c.approvers.clone())).collect(),
        jr_tests,
        seats,
        pascal: Pascal::new(max_class),
        total: BigUint::zero(),
    };
    let mut row = vec![BigUint::zero(); seats + 1];
    row[0] = BigUint::one();
    let covered = e.covered_voters(must_contain);
    search.visit(0, 0, &row, &covered);
    Ok(search.total)
}

/// Number of committees satisfying `axiom` divided by `C(m, k)`. JR uses the
/// quotient algorithm, everything else enumerates.
pub fn axiom_fraction_exact(e: &Election, axiom: Axiom, cap: u64) -> Result<BigRational> {
    let count = match axiom.t_for(e.committee_size()) {
        1 => count_jr_fpt(e, &CandidateSet::empty(), cap)
            .or_else(|_| count_brute_force(e, axiom, &CandidateSet::empty(), cap))?,
        _ => count_brute_force(e, axiom, &CandidateSet::empty(), cap)?,
    };
    let total = binomial(e.num_candidates(), e.committee_size());
    Ok(BigRational::new(count.into(), total.into()))
}
