use std::fmt;

use crate::axioms::{witness_is_valid, Violation};
use crate::election::{CandidateSet, Committee, Election};
use crate::error::{Error, Result};
use crate::quotient::QuotientStructure;

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: i64,
    pub upper: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Le,
    Ge,
    Eq,
}

impl Comparator {
    pub fn holds(self, lhs: i64, rhs: i64) -> bool {
        match self {
            Comparator::Le => lhs <= rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        })
    }
}

/// `sum coef * var  cmp  rhs`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, i64)>,
    pub cmp: Comparator,
    pub rhs: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Feasibility,
    Maximize,
}

/// Which decision problem a model encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProblemKind {
    /// A committee satisfying JR but not EJR+.
    JrNotEjrp,
    /// Two committees satisfying t-EJR+ at maximum distance.
    DiffCommittees { t: usize },
    /// A committee satisfying t-EJR+ that contains `required`.
    PCandidates { required: CandidateSet, t: usize },
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemKind::JrNotEjrp => f.write_str("jr-not-ejrp"),
            ProblemKind::DiffCommittees { t } => write!(f, "diff-committees(t={t})"),
            ProblemKind::PCandidates { required, t } => write!(f, "p-candidates({required}, t={t})"),
        }
    }
}

/// Per-candidate or per-class committee variables.
#[derive(Debug, Clone)]
pub(crate) struct CommitteeVars {
    /// `x_j`: membership (plain) or member count (quotient).
    pub count: Vec<VarId>,
    /// Quotient JR models: class touched.
    pub touched: Option<Vec<VarId>>,
    /// Quotient t-EJR+ models: class fully selected.
    pub full: Option<Vec<VarId>>,
    /// JR models: voter covered.
    pub covered: Option<Vec<VarId>>,
    /// t-EJR+ models: `levels[i][l - 1]` is 1 only if voter `i` approves at
    /// least `l` members.
    pub levels: Option<Vec<Vec<VarId>>>,
}

#[derive(Debug, Clone)]
pub(crate) struct WitnessVars {
    /// `u_j` per candidate or class.
    pub candidate: Vec<VarId>,
    /// Quotient models: `t_j`.
    pub class_count: Option<Vec<VarId>>,
    pub voters: Vec<VarId>,
    pub ell: VarId,
}

/// What a model means, for decoding and for the enumeration backend.
#[derive(Debug, Clone)]
pub(crate) struct ModelMeta {
    pub problem: ProblemKind,
    pub election: Election,
    pub quotient: Option<QuotientStructure>,
    pub committees: Vec<CommitteeVars>,
    pub witness: Option<WitnessVars>,
    /// Diff models: `z_j`.
    pub diff: Option<Vec<VarId>>,
}

/// A solver-agnostic integer program with integer coefficients.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub name: String,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub sense: Sense,
    pub objective: Vec<(VarId, i64)>,
    pub(crate) meta: Option<ModelMeta>,
}

/// A decoded solution of a problem model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decoded {
    JrNotEjrp { committee: Committee, witness: Violation },
    Diff { first: Committee, second: Committee, distance: usize },
    PCandidates { committee: Committee },
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            variables: Vec::new(),
            constraints: Vec::new(),
            sense: Sense::Feasibility,
            objective: Vec::new(),
            meta: None,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: i64, upper: i64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0), upper.min(1)),
            VarKind::Integer => (lower, upper),
        };
        self.variables.push(Variable { name: name.into(), kind, lower, upper });
        self.variables.len() - 1
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0, 1)
    }

    pub fn integer(&mut self, name: impl Into<String>, lower: i64, upper: i64) -> VarId {
        self.add_var(name, VarKind::Integer, lower, upper)
    }

    /// Adds a constraint. Terms on the same variable are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, i64)>,
        cmp: Comparator,
        rhs: i64,
    ) {
        let terms = merge_terms(terms);
        assert!(terms.iter().all(|&(v, _)| v < self.variables.len()), "constraint references unknown variable");
        self.constraints.push(Constraint { name: name.into(), terms, cmp, rhs });
    }

    pub fn maximize(&mut self, terms: impl IntoIterator<Item = (VarId, i64)>) {
        self.sense = Sense::Maximize;
        self.objective = merge_terms(terms);
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn problem(&self) -> Option<&ProblemKind> {
        self.meta.as_ref().map(|m| &m.problem)
    }

    /// The election a problem model was built from.
    pub fn election(&self) -> Option<&Election> {
        self.meta.as_ref().map(|m| &m.election)
    }

    pub fn is_quotient(&self) -> bool {
        self.meta.as_ref().is_some_and(|m| m.quotient.is_some())
    }

    pub fn objective_value(&self, assignment: &[i64]) -> i64 {
        self.objective.iter().map(|&(v, c)| c * assignment[v]).sum()
    }

    /// Exact feasibility check. Returns the first violated bound or
    /// constraint as an error.
    pub fn check_assignment(&self, assignment: &[i64]) -> Result<()> {
        if assignment.len() != self.variables.len() {
            return Err(Error::SizeMismatch { left: assignment.len(), right: self.variables.len() });
        }
        for (var, &value) in self.variables.iter().zip(assignment) {
            if value < var.lower || value > var.upper {
                return Err(Error::Solver(format!(
                    "{} = {value} outside [{}, {}]",
                    var.name, var.lower, var.upper
                )));
            }
        }
        for c in &self.constraints {
            let lhs: i64 = c.terms.iter().map(|&(v, coef)| coef * assignment[v]).sum();
            if !c.cmp.holds(lhs, c.rhs) {
                return Err(Error::Solver(format!("constraint {} violated: {lhs} {} {}", c.name, c.cmp, c.rhs)));
            }
        }
        Ok(())
    }

    /// Turns a feasible assignment back into committees (and a witness).
    /// The result is re-checked against the axioms it encodes.
    pub fn decode(&self, assignment: &[i64]) -> Result<Decoded> {
        let meta = self.meta.as_ref().ok_or_else(|| Error::InvalidParameter("model has no problem metadata".into()))?;
        self.check_assignment(assignment)?;
        let e = &meta.election;
        let none = CandidateSet::empty();
        // quotient counts become members; `prefer` members go first
        let pick = |vars: &CommitteeVars, from_back: bool, prefer: &CandidateSet| -> Committee {
            match &meta.quotient {
                None => CandidateSet::new(e.candidates().filter(|&c| assignment[vars.count[c]] == 1)),
                Some(q) => CandidateSet::new(q.classes().iter().zip(&vars.count).flat_map(|(class, &v)| {
                    let take = assignment[v] as usize;
                    let mut members = class.members.clone();
                    if from_back {
                        members.reverse();
                    }
                    members.sort_by_key(|&c| !prefer.contains(c));
                    members.truncate(take);
                    members
                })),
            }
        };
        let committee = |vars: &CommitteeVars, from_back: bool| pick(vars, from_back, &none);
        let decoded = match &meta.problem {
            ProblemKind::JrNotEjrp => {
                let w = committee(&meta.committees[0], false);
                let wv = meta.witness.as_ref().expect("witness variables");
                let candidate = match &meta.quotient {
                    None => e.candidates().find(|&c| assignment[wv.candidate[c]] == 1),
                    Some(q) => q
                        .classes()
                        .iter()
                        .zip(&wv.candidate)
                        .filter(|(_, &u)| assignment[u] == 1)
                        .find_map(|(class, _)| class.members.iter().rev().copied().find(|&c| !w.contains(c))),
                }
                .ok_or_else(|| Error::Internal("no witness candidate in assignment".into()))?;
                let voters = (0..e.num_voters()).filter(|&i| assignment[wv.voters[i]] == 1).collect();
                let witness = Violation { candidate, ell: assignment[wv.ell] as usize, voters };
                if !crate::axioms::check_jr(e, &w)?.satisfied || !witness_is_valid(e, &w, &witness) {
                    return Err(Error::Internal(format!("decoded committee {w} is not JR-not-EJR+")));
                }
                Decoded::JrNotEjrp { committee: w, witness }
            }
            ProblemKind::DiffCommittees { t } => {
                let first = committee(&meta.committees[0], false);
                let second = committee(&meta.committees[1], true);
                for w in [&first, &second] {
                    if w.len() != e.committee_size() || !crate::axioms::check_t_ejrp(e, w, *t)?.satisfied {
                        return Err(Error::Internal(format!("decoded committee {w} fails the axiom")));
                    }
                }
                let distance = crate::election::committee_distance(&first, &second)?;
                Decoded::Diff { first, second, distance }
            }
            ProblemKind::PCandidates { required, t } => {
                let w = pick(&meta.committees[0], false, required);
                if !required.is_subset_of(&w) || !crate::axioms::check_t_ejrp(e, &w, *t)?.satisfied {
                    return Err(Error::Internal(format!("decoded committee {w} is not a valid answer")));
                }
                Decoded::PCandidates { committee: w }
            }
        };
        Ok(decoded)
    }
}

fn merge_terms(terms: impl IntoIterator<Item = (VarId, i64)>) -> Vec<(VarId, i64)> {
    let mut terms: Vec<(VarId, i64)> = terms.into_iter().collect();
    terms.sort_by_key(|&(v, _)| v);
    let mut merged: Vec<(VarId, i64)> = Vec::with_capacity(terms.len());
    for (v, c) in terms {
        match merged.last_mut() {
            Some((last, coef)) if *last == v => *coef += c,
            _ => merged.push((v, c)),
        }
    }
    merged.retain(|&(_, c)| c != 0);
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_are_merged() {
        let mut m = MilpModel::new("t");
        let x = m.binary("x");
        let y = m.binary("y");
        m.add_constraint("c", [(y, 2), (x, 1), (y, -2), (x, 3)], Comparator::Le, 4);
        assert_eq!(m.constraints[0].terms, vec![(x, 4)]);
    }

    #[test]
    fn assignment_checks() {
        let mut m = MilpModel::new("t");
        let x = m.binary("x");
        let z = m.integer("z", -2, 5);
        m.add_constraint("c", [(x, 1), (z, 1)], Comparator::Ge, 3);
        m.maximize([(z, 2)]);
        assert!(m.check_assignment(&[1, 2]).is_ok());
        assert!(m.check_assignment(&[0, 2]).is_err());
        assert!(m.check_assignment(&[2, 1]).is_err());
        assert!(m.check_assignment(&[1]).is_err());
        assert_eq!(m.objective_value(&[1, 4]), 8);
        assert!(m.decode(&[1, 2]).is_err());
    }
}
