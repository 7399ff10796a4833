//! Solver backends and the common `solve` entry point.

use std::collections::HashMap;
use std::fmt;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use wait_timeout::ChildExt;

use crate::axioms::{check_ejrp, check_jr, satisfies, Axiom};
use crate::election::{committee_distance, Committee, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};

use super::bnb::{branch_and_bound, BnbResult};
use super::build::intended_assignment;
use super::lp::write_lp;
use super::model::{MilpModel, ProblemKind, Sense};

/// Environment variable holding the external solver command.
pub const SOLVER_CMD_ENV: &str = "SOLVER_CMD";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    /// Exhaustive search over committees (pairs for diff models), decoded
    /// from the model's problem metadata rather than its rows. Models built
    /// by hand have no metadata and fall through to branch and bound.
    Enumeration { cap: u64 },
    /// Generic depth-first branch and bound on the rows themselves.
    BranchAndBound { node_limit: u64 },
    /// A subprocess. `{lp}` and `{sol}` in the command are replaced by the
    /// model and solution file paths; the command runs under `sh -c`.
    External { command: String },
}

impl Backend {
    pub fn enumeration() -> Self {
        Backend::Enumeration { cap: DEFAULT_ENUMERATION_CAP }
    }

    pub fn branch_and_bound() -> Self {
        Backend::BranchAndBound { node_limit: 50_000_000 }
    }

    /// The external backend configured through `SOLVER_CMD`, if any.
    pub fn external_from_env() -> Option<Self> {
        std::env::var(SOLVER_CMD_ENV).ok().filter(|c| !c.trim().is_empty()).map(|command| Backend::External { command })
    }

    /// `enumeration`, `bnb` or `external`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "enumeration" | "fallback" => Ok(Backend::enumeration()),
            "bnb" | "branch-and-bound" => Ok(Backend::branch_and_bound()),
            "external" => Backend::external_from_env()
                .ok_or_else(|| Error::InvalidParameter(format!("backend `external` needs {SOLVER_CMD_ENV}"))),
            other => Err(Error::InvalidParameter(format!("unknown backend `{other}`"))),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Backend::Enumeration { .. } => "enumeration",
            Backend::BranchAndBound { .. } => "bnb",
            Backend::External { .. } => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible(Vec<i64>),
    Infeasible,
    Optimal { value: i64, assignment: Vec<i64> },
    Timeout,
}

impl SolveStatus {
    pub fn assignment(&self) -> Option<&[i64]> {
        match self {
            SolveStatus::Feasible(a) | SolveStatus::Optimal { assignment: a, .. } => Some(a),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Feasible(_) => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Optimal { .. } => "optimal",
            SolveStatus::Timeout => "timeout",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveStatus::Optimal { value, .. } => write!(f, "optimal({value})"),
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub backend: String,
    pub wall_time: Duration,
}

/// Solves `model`. Every returned assignment has been re-checked against
/// all rows in exact integer arithmetic.
pub fn solve(model: &MilpModel, backend: &Backend, time_limit: Duration) -> Result<SolveOutcome> {
    let start = Instant::now();
    let deadline = start + time_limit;
    let status = if time_limit.is_zero() {
        SolveStatus::Timeout
    } else {
        match backend {
            Backend::Enumeration { cap } if model.meta.is_some() => enumerate(model, *cap, deadline)?,
            Backend::Enumeration { .. } => run_bnb(model, deadline, Backend::branch_and_bound())?,
            Backend::BranchAndBound { .. } => run_bnb(model, deadline, backend.clone())?,
            Backend::External { command } => external(model, command, time_limit)?,
        }
    };
    if let Some(a) = status.assignment() {
        model.check_assignment(a).map_err(|e| Error::Solver(format!("{} returned an invalid assignment: {e}", backend.id())))?;
    }
    Ok(SolveOutcome { status, backend: backend.id().to_string(), wall_time: start.elapsed() })
}

fn finished(model: &MilpModel, assignment: Vec<i64>) -> SolveStatus {
    match model.sense {
        Sense::Feasibility => SolveStatus::Feasible(assignment),
        Sense::Maximize => SolveStatus::Optimal { value: model.objective_value(&assignment), assignment },
    }
}

fn run_bnb(model: &MilpModel, deadline: Instant, backend: Backend) -> Result<SolveStatus> {
    let Backend::BranchAndBound { node_limit } = backend else { unreachable!() };
    Ok(match branch_and_bound(model, deadline, node_limit) {
        BnbResult::Infeasible => SolveStatus::Infeasible,
        BnbResult::Solution(a) => finished(model, a),
        BnbResult::Stopped => SolveStatus::Timeout,
    })
}

/// Exhaustive search from the problem metadata; the winning committees are
/// turned into a full assignment that must satisfy the model.
fn enumerate(model: &MilpModel, cap: u64, deadline: Instant) -> Result<SolveStatus> {
    let meta = model.meta.as_ref().expect("checked by caller");
    let e = &meta.election;
    let timed_out = |i: usize| i.is_multiple_of(512) && Instant::now() >= deadline;
    let intended = |committees: &[Committee], witness| -> Result<Vec<i64>> {
        let a = intended_assignment(model, committees, witness);
        model
            .check_assignment(&a)
            .map_err(|err| Error::Internal(format!("model {} rejects a valid solution: {err}", model.name)))?;
        Ok(a)
    };
    match &meta.problem {
        ProblemKind::JrNotEjrp => {
            for (i, w) in e.committees(cap)?.enumerate() {
                if timed_out(i) {
                    return Ok(SolveStatus::Timeout);
                }
                if !check_jr(e, &w)?.satisfied {
                    continue;
                }
                if let Some(witness) = check_ejrp(e, &w)?.witness {
                    return Ok(finished(model, intended(&[w], Some(&witness))?));
                }
            }
            Ok(SolveStatus::Infeasible)
        }
        ProblemKind::DiffCommittees { t } => {
            let axiom = Axiom::TEjrp(*t);
            let mut good: Vec<Committee> = Vec::new();
            for (i, w) in e.committees(cap)?.enumerate() {
                if timed_out(i) {
                    return Ok(SolveStatus::Timeout);
                }
                if satisfies(e, &w, axiom) {
                    good.push(w);
                }
            }
            let pairs = (good.len() as u128) * (good.len() as u128 + 1) / 2;
            if pairs > cap as u128 {
                return Err(Error::CapExceeded { requested: pairs.to_string(), cap });
            }
            let mut best: Option<(usize, usize, usize)> = None;
            for a in 0..good.len() {
                if timed_out(a) {
                    return Ok(SolveStatus::Timeout);
                }
                for b in a..good.len() {
                    let d = committee_distance(&good[a], &good[b])?;
                    if best.is_none_or(|(bd, _, _)| d > bd) {
                        best = Some((d, a, b));
                    }
                }
            }
            let Some((d, a, b)) = best else { return Ok(SolveStatus::Infeasible) };
            let assignment = intended(&[good[a].clone(), good[b].clone()], None)?;
            let status = finished(model, assignment);
            if matches!(status, SolveStatus::Optimal { value, .. } if value != d as i64) {
                return Err(Error::Internal(format!("model objective disagrees with distance {d}")));
            }
            Ok(status)
        }
        ProblemKind::PCandidates { required, t } => {
            for (i, w) in e.committees_containing(required, cap)?.enumerate() {
                if timed_out(i) {
                    return Ok(SolveStatus::Timeout);
                }
                if satisfies(e, &w, Axiom::TEjrp(*t)) {
                    return Ok(finished(model, intended(&[w], None)?));
                }
            }
            Ok(SolveStatus::Infeasible)
        }
    }
}

/// Status line and variable values from a CBC or HiGHS solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalSolution {
    pub status: ExternalStatus,
    pub values: HashMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExternalStatus {
    Optimal,
    Infeasible,
    Stopped,
    Unknown,
}

fn status_from(text: &str) -> ExternalStatus {
    let t = text.trim().to_ascii_lowercase();
    if t.starts_with("optimal") {
        ExternalStatus::Optimal
    } else if t.contains("infeasible") {
        ExternalStatus::Infeasible
    } else if t.starts_with("stopped") || t.contains("time limit") || t.contains("interrupted") {
        ExternalStatus::Stopped
    } else {
        ExternalStatus::Unknown
    }
}

/// Understands CBC `solu` output (`status line`, then `index name value
/// reduced-cost` rows) and HiGHS solution files (`Model status` block and a
/// `# Columns` section of `name value` rows).
pub fn parse_solution(text: &str) -> Result<ExternalSolution> {
    let lines: Vec<&str> = text.lines().collect();
    let mut values = HashMap::new();
    if let Some(pos) = lines.iter().position(|l| l.trim() == "Model status") {
        let status = lines.get(pos + 1).map_or(ExternalStatus::Unknown, |l| status_from(l));
        if let Some(cols) = lines.iter().position(|l| l.starts_with("# Columns")) {
            for (offset, line) in lines[cols + 1..].iter().enumerate() {
                if line.starts_with('#') || line.trim().is_empty() {
                    break;
                }
                let mut parts = line.split_whitespace();
                let (Some(name), Some(value)) = (parts.next(), parts.next()) else {
                    return Err(Error::Parse { line: cols + offset + 2, message: "bad column row".into() });
                };
                let value = value.parse().map_err(|_| Error::Parse { line: cols + offset + 2, message: "bad value".into() })?;
                values.insert(name.to_string(), value);
            }
        }
        return Ok(ExternalSolution { status, values });
    }
    let Some(first) = lines.first() else {
        return Err(Error::Parse { line: 1, message: "empty solution file".into() });
    };
    let status = status_from(first);
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let parts: Vec<&str> = line.split_whitespace().filter(|p| *p != "**").collect();
        if parts.is_empty() {
            continue;
        }
        if parts.len() < 3 {
            return Err(Error::Parse { line: idx + 1, message: format!("unexpected row `{line}`") });
        }
        let value = parts[2].parse().map_err(|_| Error::Parse { line: idx + 1, message: "bad value".into() })?;
        values.insert(parts[1].to_string(), value);
    }
    Ok(ExternalSolution { status, values })
}

fn external(model: &MilpModel, command: &str, time_limit: Duration) -> Result<SolveStatus> {
    let dir = tempfile::tempdir()?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("model.sol");
    std::fs::write(&lp_path, write_lp(model))?;
    let cmd = command
        .replace("{lp}", &lp_path.to_string_lossy())
        .replace("{sol}", &sol_path.to_string_lossy());
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Solver(format!("cannot start `{cmd}`: {e}")))?;
    let Some(exit) = child.wait_timeout(time_limit)? else {
        let _ = child.kill();
        let _ = child.wait();
        return Ok(SolveStatus::Timeout);
    };
    if !exit.success() {
        let mut stderr = String::new();
        if let Some(mut pipe) = child.stderr.take() {
            use std::io::Read;
            let _ = pipe.read_to_string(&mut stderr);
        }
        return Err(Error::Solver(format!("`{cmd}` exited with {exit}: {}", stderr.trim())));
    }
    let text = std::fs::read_to_string(&sol_path)
        .map_err(|e| Error::Solver(format!("no solution file from `{cmd}`: {e}")))?;
    let solution = parse_solution(&text)?;
    match solution.status {
        ExternalStatus::Infeasible => Ok(SolveStatus::Infeasible),
        ExternalStatus::Stopped => Ok(SolveStatus::Timeout),
        ExternalStatus::Unknown => Err(Error::Solver(format!("unrecognised solver status in `{}`", text.lines().next().unwrap_or("")))),
        ExternalStatus::Optimal => {
            let mut assignment = Vec::with_capacity(model.num_vars());
            for v in &model.variables {
                let x = solution.values.get(&v.name).copied().unwrap_or(0.0);
                let rounded = x.round();
                if (x - rounded).abs() > 1e-6 {
                    return Err(Error::Solver(format!("{} = {x} is not integral", v.name)));
                }
                assignment.push(rounded as i64);
            }
            Ok(finished(model, assignment))
        }
    }
}
