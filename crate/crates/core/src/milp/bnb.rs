//! Depth-first branch and bound with bound propagation, for small models.

use std::time::Instant;

use super::model::{Comparator, MilpModel, Sense};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum BnbResult {
    Infeasible,
    /// Feasibility models: first solution found. Maximisation: proven optimum.
    Solution(Vec<i64>),
    /// Limits hit before the search finished.
    Stopped,
}

/// A row in `sum a_i x_i <= b` form.
struct Row {
    terms: Vec<(usize, i128)>,
    rhs: i128,
}

struct Search<'a> {
    model: &'a MilpModel,
    rows: Vec<Row>,
    /// Maximisation: `objective >= best + 1` once an incumbent exists.
    cut: Option<Row>,
    order: Vec<usize>,
    deadline: Instant,
    node_limit: u64,
    nodes: u64,
    best: Option<(i128, Vec<i64>)>,
    stopped: bool,
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

impl Search<'_> {
    /// Tightens bounds to a fixpoint. Returns false on infeasibility.
    fn propagate(&self, lo: &mut [i128], hi: &mut [i128]) -> bool {
        loop {
            let mut changed = false;
            for row in self.rows.iter().chain(&self.cut) {
                let min_act: i128 = row.terms.iter().map(|&(v, a)| if a > 0 { a * lo[v] } else { a * hi[v] }).sum();
                if min_act > row.rhs {
                    return false;
                }
                for &(v, a) in &row.terms {
                    let own = if a > 0 { a * lo[v] } else { a * hi[v] };
                    let slack = row.rhs - (min_act - own);
                    if a > 0 {
                        let bound = floor_div(slack, a);
                        if bound < hi[v] {
                            hi[v] = bound;
                            changed = true;
                        }
                    } else {
                        let bound = ceil_div(slack, a);
                        if bound > lo[v] {
                            lo[v] = bound;
                            changed = true;
                        }
                    }
                    if lo[v] > hi[v] {
                        return false;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn objective_bound(&self, lo: &[i128], hi: &[i128]) -> i128 {
        self.model.objective.iter().map(|&(v, c)| if c > 0 { c as i128 * hi[v] } else { c as i128 * lo[v] }).sum()
    }

    fn visit(&mut self, mut lo: Vec<i128>, mut hi: Vec<i128>) {
        if self.stopped {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_limit || (self.nodes.is_multiple_of(256) && Instant::now() >= self.deadline) {
            self.stopped = true;
            return;
        }
        if !self.propagate(&mut lo, &mut hi) {
            return;
        }
        let maximize = self.model.sense == Sense::Maximize;
        if maximize {
            if let Some((best, _)) = &self.best {
                if self.objective_bound(&lo, &hi) <= *best {
                    return;
                }
            }
        }
        let Some(v) = self.order.iter().copied().find(|&v| lo[v] < hi[v]) else {
            let assignment: Vec<i64> = lo.iter().map(|&x| x as i64).collect();
            let value = self.model.objective_value(&assignment) as i128;
            if maximize {
                let terms = self.model.objective.iter().map(|&(v, c)| (v, -(c as i128))).collect();
                self.cut = Some(Row { terms, rhs: -(value + 1) });
            }
            self.best = Some((value, assignment));
            return;
        };
        // larger values first: fills committees early and favours the objective
        let (low, high) = (lo[v], hi[v]);
        let mut value = high;
        while value >= low {
            let (mut l, mut h) = (lo.clone(), hi.clone());
            l[v] = value;
            h[v] = value;
            self.visit(l, h);
            if self.stopped || (!maximize && self.best.is_some()) {
                return;
            }
            value -= 1;
        }
    }
}

/// Problem models branch on committee and witness choices first; the other
/// variables mostly follow by propagation once those are fixed.
fn branch_order(model: &MilpModel) -> Vec<usize> {
    let mut order = Vec::with_capacity(model.num_vars());
    if let Some(meta) = &model.meta {
        for c in &meta.committees {
            order.extend(&c.count);
        }
        if let Some(w) = &meta.witness {
            order.push(w.ell);
            order.extend(&w.candidate);
            order.extend(w.class_count.iter().flatten());
        }
        order.extend(meta.diff.iter().flatten());
    }
    let mut seen = vec![false; model.num_vars()];
    order.retain(|&v| !std::mem::replace(&mut seen[v], true));
    order.extend((0..model.num_vars()).filter(|&v| !seen[v]));
    order
}

pub(crate) fn branch_and_bound(model: &MilpModel, deadline: Instant, node_limit: u64) -> BnbResult {
    let mut rows = Vec::with_capacity(model.constraints.len() * 2);
    for c in &model.constraints {
        let terms: Vec<(usize, i128)> = c.terms.iter().map(|&(v, a)| (v, a as i128)).collect();
        let negated = || Row { terms: terms.iter().map(|&(v, a)| (v, -a)).collect(), rhs: -(c.rhs as i128) };
        match c.cmp {
            Comparator::Le => rows.push(Row { terms: terms.clone(), rhs: c.rhs as i128 }),
            Comparator::Ge => rows.push(negated()),
            Comparator::Eq => {
                rows.push(negated());
                rows.push(Row { terms: terms.clone(), rhs: c.rhs as i128 });
            }
        }
    }
    let lo: Vec<i128> = model.variables.iter().map(|v| v.lower as i128).collect();
    let hi: Vec<i128> = model.variables.iter().map(|v| v.upper as i128).collect();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return BnbResult::Infeasible;
    }
    let mut search = Search { model, rows, cut: None, order: branch_order(model), deadline, node_limit, nodes: 0, best: None, stopped: false };
    search.visit(lo, hi);
    match (search.stopped, search.best) {
        (false, Some((_, a))) => BnbResult::Solution(a),
        (false, None) => BnbResult::Infeasible,
        (true, Some((_, a))) if model.sense == Sense::Feasibility => BnbResult::Solution(a),
        (true, _) => BnbResult::Stopped,
    }
}
