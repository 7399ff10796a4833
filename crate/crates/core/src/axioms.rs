//! Justified representation (JR), t-EJR+ and EJR+.
//!
//! A set `W` satisfies t-EJR+ when for every candidate `c` outside `W` and
//! every `l` in `1..=t`, no group of at least `l * n / k` approvers of `c`
//! consists solely of voters approving fewer than `l` members of `W`. JR is
//! 1-EJR+ and EJR+ is k-EJR+.
//!
//! All thresholds are compared in integers: `|N'| >= l*n/k` is evaluated as
//! `|N'| * k >= l * n`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::election::{CandidateId, CandidateSet, Committee, Election, VoterId};
use crate::error::{Error, Result};

/// Which proportionality axiom to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axiom {
    Jr,
    Ejrp,
    /// t-EJR+ for a fixed `t`.
    TEjrp(usize),
}

impl Axiom {
    /// The `t` this axiom uses in an election with committee size `k`.
    pub fn t_for(self, k: usize) -> usize {
        match self {
            Axiom::Jr => 1,
            Axiom::Ejrp => k,
            Axiom::TEjrp(t) => t,
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Jr => f.write_str("jr"),
            Axiom::Ejrp => f.write_str("ejrp"),
            Axiom::TEjrp(t) => write!(f, "t:{t}"),
        }
    }
}

impl FromStr for Axiom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jr" => Ok(Axiom::Jr),
            "ejrp" | "ejr+" => Ok(Axiom::Ejrp),
            other => other
                .strip_prefix("t:")
                .and_then(|t| t.parse().ok())
                .filter(|&t| t >= 1)
                .map(Axiom::TEjrp)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown axiom `{s}`"))),
        }
    }
}

/// A certificate that `W` violates t-EJR+: `candidate` is outside `W`, every
/// voter in `voters` approves it and fewer than `ell` members of `W`, and
/// `|voters| * k >= ell * n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub candidate: CandidateId,
    pub ell: usize,
    pub voters: Vec<VoterId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub satisfied: bool,
    pub witness: Option<Violation>,
}

impl AxiomReport {
    fn satisfied() -> Self {
        AxiomReport { satisfied: true, witness: None }
    }

    fn violated(witness: Violation) -> Self {
        AxiomReport { satisfied: false, witness: Some(witness) }
    }
}

/// Checks t-EJR+ for an arbitrary candidate set (its size need not be `k`;
/// thresholds always use the election's `k`).
///
/// On failure the witness has the smallest `ell`, then the smallest candidate
/// id, and lists every approver of that candidate with fewer than `ell`
/// approved members of `w`.
pub fn check_t_ejrp(e: &Election, w: &CandidateSet, t: usize) -> Result<AxiomReport> {
    let k = e.committee_size();
    if t == 0 || t > k {
        return Err(Error::TOutOfRange { t, k });
    }
    e.validate_set(w)?;
    let rep = e.representation(w);
    Ok(match find_violation(e, w, t, &rep) {
        Some((candidate, ell)) => {
            let voters = e.approvers(candidate).iter().copied().filter(|&i| rep[i] < ell).collect();
            AxiomReport::violated(Violation { candidate, ell, voters })
        }
        None => AxiomReport::satisfied(),
    })
}

/// JR, i.e. 1-EJR+.
pub fn check_jr(e: &Election, w: &CandidateSet) -> Result<AxiomReport> {
    check_t_ejrp(e, w, 1)
}

/// EJR+, i.e. k-EJR+.
pub fn check_ejrp(e: &Election, w: &CandidateSet) -> Result<AxiomReport> {
    check_t_ejrp(e, w, e.committee_size())
}

pub fn check(e: &Election, w: &CandidateSet, axiom: Axiom) -> Result<AxiomReport> {
    check_t_ejrp(e, w, axiom.t_for(e.committee_size()))
}

/// Boolean form of [`check`] for hot loops; skips witness construction.
pub fn satisfies(e: &Election, w: &CandidateSet, axiom: Axiom) -> bool {
    let rep = e.representation(w);
    find_violation(e, w, axiom.t_for(e.committee_size()).min(e.committee_size()), &rep).is_none()
}

/// Smallest `(ell, candidate)` violation, given per-voter representation.
fn find_violation(e: &Election, w: &CandidateSet, t: usize, rep: &[usize]) -> Option<(CandidateId, usize)> {
    let n = e.num_voters() as u64;
    let k = e.committee_size() as u64;
    let in_w = w.mask(e.num_candidates());
    let mut best: Option<(usize, CandidateId)> = None;
    let mut hist: Vec<u64> = Vec::new();
    for c in e.candidates() {
        if in_w[c] {
            continue;
        }
        let approvers = e.approvers(c);
        // a group of size s can only witness ell with s * k >= ell * n
        let ell_max = ((approvers.len() as u64 * k) / n).min(t as u64) as usize;
        let ell_max = match best {
            Some((b, _)) => ell_max.min(b - 1),
            None => ell_max,
        };
        if ell_max == 0 {
            continue;
        }
        hist.clear();
        hist.resize(ell_max, 0);
        for &i in approvers {
            if rep[i] < ell_max {
                hist[rep[i]] += 1;
            }
        }
        let mut deficient = 0u64;
        for ell in 1..=ell_max {
            deficient += hist[ell - 1];
            if deficient * k >= ell as u64 * n {
                best = Some((ell, c));
                break;
            }
        }
        if best.map(|(b, _)| b) == Some(1) {
            break;
        }
    }
    best.map(|(ell, c)| (c, ell))
}

/// Re-validates a witness directly against the definition.
pub fn witness_is_valid(e: &Election, w: &CandidateSet, witness: &Violation) -> bool {
    let n = e.num_voters();
    let k = e.committee_size();
    if w.contains(witness.candidate) || witness.ell == 0 || witness.voters.len() * k < witness.ell * n {
        return false;
    }
    witness.voters.iter().all(|&i| {
        e.ballot(i).binary_search(&witness.candidate).is_ok()
            && e.ballot(i).iter().filter(|&&c| w.contains(c)).count() < witness.ell
    })
}

/// Returns a size-`k` committee satisfying EJR+, computed by the Method of
/// Equal Shares with seq-Phragmén completion and verified before returning.
pub fn construct_ejrp_committee(e: &Election) -> Result<Committee> {
    let w = crate::rules::mes_with_phragmen_completion(e);
    if !check_ejrp(e, &w)?.satisfied {
        return Err(Error::Internal(format!("MES committee {w} fails EJR+")));
    }
    Ok(w)
}
