//! Model builders for the three decision problems, over candidates (plain)
//! or over candidate equivalence classes (quotient).
//!
//! Strict inequalities with rational right-hand sides are scaled by `k` and
//! tightened by one: `sum < l*n/k` becomes `k*sum <= l*n - 1`.

use crate::axioms::{Axiom, Violation};
use crate::election::{CandidateSet, Committee, Election};
use crate::error::{Error, Result};
use crate::quotient::QuotientStructure;

use super::model::{Comparator, CommitteeVars, MilpModel, ModelMeta, ProblemKind, VarId, WitnessVars};

use Comparator::{Eq, Ge, Le};

struct Builder<'a> {
    model: MilpModel,
    e: &'a Election,
    q: Option<QuotientStructure>,
}

impl<'a> Builder<'a> {
    fn new(name: &str, e: &'a Election, quotient: bool) -> Self {
        let q = quotient.then(|| QuotientStructure::build(e));
        Builder { model: MilpModel::new(name), e, q }
    }

    fn n(&self) -> i64 {
        self.e.num_voters() as i64
    }

    fn k(&self) -> i64 {
        self.e.committee_size() as i64
    }

    /// Units the committee variables range over: one per candidate, or one
    /// per class. Each unit is (size, approvers).
    fn units(&self) -> Vec<(usize, Vec<usize>)> {
        match &self.q {
            None => self.e.candidates().map(|c| (1, self.e.approvers(c).to_vec())).collect(),
            Some(q) => q.classes().iter().map(|cl| (cl.size(), cl.approvers.ones().collect())).collect(),
        }
    }

    /// Units approved by each voter.
    fn units_of_voters(&self) -> Vec<Vec<usize>> {
        let mut of = vec![Vec::new(); self.e.num_voters()];
        for (j, (_, approvers)) in self.units().iter().enumerate() {
            for &i in approvers {
                of[i].push(j);
            }
        }
        of
    }

    /// Size-`k` committee variables with constraints forcing t-EJR+ (JR
    /// when `t == 1`).
    fn committee(&mut self, p: &str, t: usize) -> CommitteeVars {
        let (n, k) = (self.n(), self.k());
        let units = self.units();
        let of_voter = self.units_of_voters();
        let quotient = self.q.is_some();
        let m = &mut self.model;
        let count: Vec<VarId> = units
            .iter()
            .enumerate()
            .map(|(j, &(size, _))| {
                if quotient {
                    m.integer(format!("{p}_{j}"), 0, size as i64)
                } else {
                    m.binary(format!("{p}_{j}"))
                }
            })
            .collect();
        m.add_constraint(format!("{p}_size"), count.iter().map(|&v| (v, 1)), Eq, k);
        let mut vars = CommitteeVars { count, touched: None, full: None, covered: None, levels: None };

        if t == 1 {
            // in quotient models JR looks at which classes are touched
            let touched = if quotient {
                let touched: Vec<VarId> =
                    (0..units.len()).map(|j| m.binary(format!("{p}t_{j}"))).collect();
                for (j, &(size, _)) in units.iter().enumerate() {
                    let (x, tj) = (vars.count[j], touched[j]);
                    m.add_constraint(format!("{p}t_lo_{j}"), [(tj, 1), (x, -1)], Le, 0);
                    m.add_constraint(format!("{p}t_hi_{j}"), [(x, 1), (tj, -(size as i64))], Le, 0);
                }
                vars.touched = Some(touched.clone());
                touched
            } else {
                vars.count.clone()
            };
            let covered: Vec<VarId> = (0..of_voter.len()).map(|i| m.binary(format!("{p}y_{i}"))).collect();
            for (i, units_i) in of_voter.iter().enumerate() {
                for &j in units_i {
                    m.add_constraint(format!("{p}y_lo_{i}_{j}"), [(covered[i], 1), (touched[j], -1)], Ge, 0);
                }
                m.add_constraint(
                    format!("{p}y_hi_{i}"),
                    std::iter::once((covered[i], 1)).chain(units_i.iter().map(|&j| (touched[j], -1))),
                    Le,
                    0,
                );
            }
            for (j, (_, approvers)) in units.iter().enumerate().filter(|(_, (_, a))| !a.is_empty()) {
                // k * sum_{i in N_j} (1 - y_i) <= n - 1
                m.add_constraint(
                    format!("{p}jr_{j}"),
                    approvers.iter().map(|&i| (covered[i], -k)),
                    Le,
                    n - 1 - k * approvers.len() as i64,
                );
            }
            vars.covered = Some(covered);
        } else {
            // a candidate outside W needs the EJR+ constraint; in quotient
            // models that is a class not fully selected
            let outside: Vec<(VarId, i64)> = if quotient {
                let full: Vec<VarId> = (0..units.len()).map(|j| m.binary(format!("{p}f_{j}"))).collect();
                for (j, &(size, _)) in units.iter().enumerate() {
                    let (x, f, a) = (vars.count[j], full[j], size as i64);
                    m.add_constraint(format!("{p}f_a_{j}"), [(x, 1), (f, a)], Le, 2 * a);
                    m.add_constraint(format!("{p}f_b_{j}"), [(x, 1), (f, -a)], Ge, 0);
                }
                vars.full = Some(full.clone());
                full.into_iter().map(|f| (f, 1)).collect()
            } else {
                vars.count.iter().map(|&x| (x, 1)).collect()
            };
            let levels: Vec<Vec<VarId>> = (0..of_voter.len())
                .map(|i| (1..=t).map(|l| m.binary(format!("{p}y_{i}_{l}"))).collect())
                .collect();
            for (i, units_i) in of_voter.iter().enumerate() {
                for l in 1..=t {
                    m.add_constraint(
                        format!("{p}lvl_{i}_{l}"),
                        std::iter::once((levels[i][l - 1], l as i64))
                            .chain(units_i.iter().map(|&j| (vars.count[j], -1))),
                        Le,
                        0,
                    );
                }
            }
            for (j, (_, approvers)) in units.iter().enumerate().filter(|(_, (_, a))| !a.is_empty()) {
                for l in 1..=t as i64 {
                    // k * sum (1 - y_il) <= l*n - 1 + n*k*[outside fails]
                    m.add_constraint(
                        format!("{p}ejr_{j}_{l}"),
                        approvers
                            .iter()
                            .map(|&i| (levels[i][l as usize - 1], -k))
                            .chain(std::iter::once((outside[j].0, -n * k))),
                        Le,
                        l * n - 1 - k * approvers.len() as i64,
                    );
                }
            }
            vars.levels = Some(levels);
        }
        vars
    }

    fn finish(mut self, problem: ProblemKind, committees: Vec<CommitteeVars>, witness: Option<WitnessVars>, diff: Option<Vec<VarId>>) -> MilpModel {
        self.model.meta = Some(ModelMeta {
            problem,
            election: self.e.clone(),
            quotient: self.q,
            committees,
            witness,
            diff,
        });
        self.model
    }
}

fn level_for(e: &Election, axiom: Axiom) -> Result<usize> {
    let k = e.committee_size();
    let t = axiom.t_for(k);
    if t == 0 || t > k {
        return Err(Error::TOutOfRange { t, k });
    }
    Ok(t)
}

fn jr_not_ejrp(e: &Election, quotient: bool) -> MilpModel {
    let name = if quotient { "jr_not_ejrp_quotient" } else { "jr_not_ejrp" };
    let mut b = Builder::new(name, e, quotient);
    let x = b.committee("x", 1);
    let (n, k) = (b.n(), b.k());
    let mc = e.num_candidates() as i64;
    let units = b.units();
    let of_voter = b.units_of_voters();
    let m = &mut b.model;
    let ell = m.integer("ell", 2, k.max(2));
    let v: Vec<VarId> = (0..e.num_voters()).map(|i| m.binary(format!("v_{i}"))).collect();
    let u: Vec<VarId> = (0..units.len()).map(|j| m.binary(format!("u_{j}"))).collect();
    m.add_constraint("group_size", v.iter().map(|&vi| (vi, k)).chain([(ell, -n)]), Ge, 0);
    let class_count = if quotient {
        let t: Vec<VarId> =
            units.iter().enumerate().map(|(j, &(size, _))| m.integer(format!("t_{j}"), 0, size as i64)).collect();
        m.add_constraint("witness", t.iter().map(|&tj| (tj, 1)), Ge, 1);
        for (j, &(size, _)) in units.iter().enumerate() {
            m.add_constraint(format!("t_lo_{j}"), [(u[j], 1), (t[j], -1)], Le, 0);
            m.add_constraint(format!("t_hi_{j}"), [(t[j], 1), (u[j], -(size as i64))], Le, 0);
            // a witness class must keep a member outside the committee
            m.add_constraint(format!("outside_{j}"), [(x.count[j], 1), (u[j], 1)], Le, size as i64);
        }
        Some(t)
    } else {
        m.add_constraint("witness", u.iter().map(|&uj| (uj, 1)), Eq, 1);
        for (j, &uj) in u.iter().enumerate() {
            m.add_constraint(format!("outside_{j}"), [(uj, 1), (x.count[j], 1)], Le, 1);
        }
        None
    };
    for (i, units_i) in of_voter.iter().enumerate() {
        for j in (0..units.len()).filter(|j| !units_i.contains(j)) {
            m.add_constraint(format!("cohesive_{i}_{j}"), [(u[j], 1), (v[i], 1)], Le, 1);
        }
        // sum_{A_i} x < l + m(1 - v_i)
        m.add_constraint(
            format!("deficient_{i}"),
            units_i.iter().map(|&j| (x.count[j], 1)).chain([(ell, -1), (v[i], mc)]),
            Le,
            mc - 1,
        );
    }
    let witness = WitnessVars { candidate: u, class_count, voters: v, ell };
    b.finish(ProblemKind::JrNotEjrp, vec![x], Some(witness), None)
}

fn diff_committees(e: &Election, axiom: Axiom, quotient: bool) -> Result<MilpModel> {
    let t = level_for(e, axiom)?;
    let name = if quotient { "diff_committees_quotient" } else { "diff_committees" };
    let mut b = Builder::new(name, e, quotient);
    let x = b.committee("x", t);
    let a = b.committee("a", t);
    let units = b.units();
    let m = &mut b.model;
    let z: Vec<VarId> = units
        .iter()
        .enumerate()
        .map(|(j, &(size, _))| if quotient { m.integer(format!("z_{j}"), 0, size as i64) } else { m.binary(format!("z_{j}")) })
        .collect();
    for (j, &(size, _)) in units.iter().enumerate() {
        m.add_constraint(format!("z_x_{j}"), [(z[j], 1), (x.count[j], -1)], Le, 0);
        m.add_constraint(format!("z_a_{j}"), [(z[j], 1), (a.count[j], 1)], Le, size as i64);
    }
    m.maximize(z.iter().map(|&zj| (zj, 1)));
    Ok(b.finish(ProblemKind::DiffCommittees { t }, vec![x, a], None, Some(z)))
}

fn p_candidates(e: &Election, required: &CandidateSet, axiom: Axiom, quotient: bool) -> Result<MilpModel> {
    e.validate_set(required)?;
    if required.len() > e.committee_size() {
        return Err(Error::RequiredTooLarge { required: required.len(), k: e.committee_size() });
    }
    let t = level_for(e, axiom)?;
    let name = if quotient { "p_candidates_quotient" } else { "p_candidates" };
    let mut b = Builder::new(name, e, quotient);
    let x = b.committee("x", t);
    let demand: Vec<i64> = match &b.q {
        None => e.candidates().map(|c| i64::from(required.contains(c))).collect(),
        Some(q) => q.class_counts(required).into_iter().map(|c| c as i64).collect(),
    };
    for (j, &d) in demand.iter().enumerate().filter(|(_, &d)| d > 0) {
        let cmp = if quotient { Ge } else { Eq };
        b.model.add_constraint(format!("required_{j}"), [(x.count[j], 1)], cmp, d);
    }
    Ok(b.finish(ProblemKind::PCandidates { required: required.clone(), t }, vec![x], None, None))
}

/// Is there a committee satisfying JR but not EJR+?
pub fn build_jr_not_ejrp(e: &Election) -> MilpModel {
    jr_not_ejrp(e, false)
}

/// Maximum distance between two committees satisfying `axiom`.
pub fn build_diff_committees(e: &Election, axiom: Axiom) -> Result<MilpModel> {
    diff_committees(e, axiom, false)
}

/// Is there a committee satisfying `axiom` that contains `required`?
pub fn build_p_candidates(e: &Election, required: &CandidateSet, axiom: Axiom) -> Result<MilpModel> {
    p_candidates(e, required, axiom, false)
}

/// Problem selector for [`build_quotient_variant`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotientProblem {
    JrNotEjrp,
    DiffCommittees(Axiom),
    PCandidates(CandidateSet, Axiom),
}

/// The same problems over candidate equivalence classes: the number of
/// committee variables depends on the number of classes, not on `m`.
pub fn build_quotient_variant(e: &Election, problem: &QuotientProblem) -> Result<MilpModel> {
    match problem {
        QuotientProblem::JrNotEjrp => Ok(jr_not_ejrp(e, true)),
        QuotientProblem::DiffCommittees(axiom) => diff_committees(e, *axiom, true),
        QuotientProblem::PCandidates(required, axiom) => p_candidates(e, required, *axiom, true),
    }
}

/// The assignment a model's variables take for the given committees (and
/// witness), following each variable's intended meaning.
pub(crate) fn intended_assignment(model: &MilpModel, committees: &[Committee], witness: Option<&Violation>) -> Vec<i64> {
    let meta = model.meta.as_ref().expect("problem metadata");
    let e = &meta.election;
    let mut a = vec![0i64; model.num_vars()];
    let unit_counts = |w: &Committee| -> Vec<usize> {
        match &meta.quotient {
            None => w.mask(e.num_candidates()).into_iter().map(usize::from).collect(),
            Some(q) => q.class_counts(w),
        }
    };
    let sizes: Vec<usize> = match &meta.quotient {
        None => vec![1; e.num_candidates()],
        Some(q) => q.sizes(),
    };
    let mut counts = Vec::new();
    for (vars, w) in meta.committees.iter().zip(committees) {
        let cnt = unit_counts(w);
        let rep = e.representation(w);
        for (j, &c) in cnt.iter().enumerate() {
            a[vars.count[j]] = c as i64;
            if let Some(touched) = &vars.touched {
                a[touched[j]] = i64::from(c > 0);
            }
            if let Some(full) = &vars.full {
                a[full[j]] = i64::from(c == sizes[j]);
            }
        }
        if let Some(covered) = &vars.covered {
            for (i, &y) in covered.iter().enumerate() {
                a[y] = i64::from(rep[i] >= 1);
            }
        }
        if let Some(levels) = &vars.levels {
            for (i, row) in levels.iter().enumerate() {
                for (l, &y) in row.iter().enumerate() {
                    a[y] = i64::from(rep[i] > l);
                }
            }
        }
        counts.push(cnt);
    }
    if let (Some(z), [first, second]) = (&meta.diff, counts.as_slice()) {
        for (j, &zj) in z.iter().enumerate() {
            a[zj] = first[j].min(sizes[j] - second[j]) as i64;
        }
    }
    if let (Some(wv), Some(witness)) = (&meta.witness, witness) {
        let unit = match &meta.quotient {
            None => witness.candidate,
            Some(q) => q.class_of(witness.candidate).expect("every candidate has a class"),
        };
        a[wv.candidate[unit]] = 1;
        if let Some(t) = &wv.class_count {
            a[t[unit]] = 1;
        }
        for &i in &witness.voters {
            a[wv.voters[i]] = 1;
        }
        a[wv.ell] = witness.ell as i64;
    } else if let Some(wv) = &meta.witness {
        a[wv.ell] = 2;
    }
    a
}
