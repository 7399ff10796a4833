//! One function per subcommand. Each returns plain serialisable rows or
//! reports; writing them out is left to the caller.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use axiomscope::count::{axiom_fraction_exact, binomial, count_brute_force, count_jr_fpt};
use axiomscope::gen::{gen_euclidean, gen_resampling};
use axiomscope::milp::{
    build_diff_committees, build_jr_not_ejrp, build_p_candidates, build_quotient_variant, solve, write_lp, Backend,
    Decoded, MilpModel, ProblemKind, QuotientProblem, SolveStatus,
};
use axiomscope::pabulib::{emit_pabulib, exclusion_reason, KPolicy, PabulibFile};
use axiomscope::rules::{mes_with_phragmen_completion, relative_overlap, seq_pav, seq_phragmen, top_k_by_score};
use axiomscope::sample::{
    estimate_avg_distance, estimate_fraction, estimate_fraction_by_acceptances, estimate_importance, ratio_to_f64,
    required_samples, SamplerConfig,
};
use axiomscope::{check, Axiom, CandidateSet, Election, Error, Violation};
use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::input::{label, labels, to_instances, voter_label, Instance, Skipped};
use crate::stats::pearson;

pub const CHECK_SCHEMA: &str = "axiomscope.check/v1";
pub const COUNT_SCHEMA: &str = "axiomscope.count/v1";
pub const FRACTIONS_SCHEMA: &str = "axiomscope.fractions/v1";
pub const DISTANCE_SCHEMA: &str = "axiomscope.distance/v1";
pub const CORRELATE_SCHEMA: &str = "axiomscope.correlate/v1";
pub const ILP_SCHEMA: &str = "axiomscope.ilp/v1";
pub const FILTER_SCHEMA: &str = "axiomscope.filter/v1";
pub const ROBUSTNESS_SCHEMA: &str = "axiomscope.robustness/v1";

/// How much sampling an estimate gets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Effort {
    /// Sample until this many committees satisfy the axiom.
    Accept(u64),
    /// Fixed number of draws from the Hoeffding bound.
    Hoeffding { epsilon: f64, delta: f64 },
}

impl Effort {
    fn describe(&self) -> String {
        match self {
            Effort::Accept(n) => format!("accept:{n}"),
            Effort::Hoeffding { epsilon, delta } => format!("hoeffding:{epsilon}:{delta}"),
        }
    }

    /// Acceptance target for estimators that only run in acceptance mode.
    fn acceptances(&self) -> Result<u64> {
        match *self {
            Effort::Accept(n) => Ok(n),
            Effort::Hoeffding { epsilon, delta } => Ok(required_samples(epsilon, delta)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleOpts {
    pub effort: Effort,
    pub seed: u64,
    /// Wall clock per (instance, k) estimate.
    pub timeout: Option<Duration>,
}

impl SampleOpts {
    fn config(&self) -> SamplerConfig {
        SamplerConfig { deadline: self.timeout.map(|t| Instant::now() + t), ..SamplerConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Timeout,
    DrawCap,
}

/// A fraction estimate, or why there is none.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub status: Status,
    pub fraction: Option<f64>,
    pub accepted: u64,
    pub drawn: u64,
}

pub fn estimate(e: &Election, axiom: Axiom, opts: &SampleOpts) -> Result<Estimate> {
    let cfg = opts.config();
    let result = match opts.effort {
        Effort::Accept(n) => estimate_fraction_by_acceptances(e, axiom, n, opts.seed, &cfg),
        Effort::Hoeffding { epsilon, delta } => estimate_fraction(e, axiom, epsilon, delta, opts.seed, &cfg),
    };
    match result {
        Ok(r) => Ok(Estimate {
            status: Status::Ok,
            fraction: Some(ratio_to_f64(&r.estimate)),
            accepted: r.samples_accepted,
            drawn: r.samples_drawn,
        }),
        Err(Error::Timeout) => Ok(Estimate { status: Status::Timeout, fraction: None, accepted: 0, drawn: 0 }),
        Err(Error::DrawCapExceeded { cap, accepted }) => Ok(Estimate {
            status: Status::DrawCap,
            fraction: Some(accepted as f64 / cap as f64),
            accepted,
            drawn: cap,
        }),
        Err(err) => Err(err.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessOut {
    pub candidate: String,
    pub ell: usize,
    pub voters: Vec<String>,
}

impl WitnessOut {
    fn new(e: &Election, v: &Violation) -> Self {
        WitnessOut {
            candidate: label(e, v.candidate),
            ell: v.ell,
            voters: v.voters.iter().map(|&i| voter_label(e, i)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema: String,
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub axiom: String,
    pub committee: Vec<String>,
    pub satisfied: bool,
    pub witness: Option<WitnessOut>,
}

pub fn cmd_check(inst: &Instance, committee: &CandidateSet, axiom: Axiom) -> Result<CheckReport> {
    let e = &inst.election;
    let report = check(e, committee, axiom)?;
    Ok(CheckReport {
        schema: CHECK_SCHEMA.into(),
        instance: inst.name.clone(),
        n: e.num_voters(),
        m: e.num_candidates(),
        k: e.committee_size(),
        axiom: axiom.to_string(),
        committee: labels(e, committee),
        satisfied: report.satisfied,
        witness: report.witness.map(|w| WitnessOut::new(e, &w)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub schema: String,
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub axiom: String,
    pub must_contain: Vec<String>,
    pub method: String,
    /// Decimal strings: the counts can exceed 64 bits.
    pub count: String,
    pub total: String,
    pub fraction: String,
    pub fraction_value: f64,
}

/// Exact number of committees containing `must_contain` that satisfy `axiom`.
pub fn cmd_count(inst: &Instance, axiom: Axiom, must_contain: &CandidateSet, cap: u64) -> Result<CountReport> {
    let e = &inst.election;
    let (count, method) = match axiom {
        Axiom::Jr => match count_jr_fpt(e, must_contain, cap) {
            Ok(c) => (c, "quotient-dp"),
            Err(Error::CapExceeded { .. }) => (count_brute_force(e, axiom, must_contain, cap)?, "enumeration"),
            Err(err) => return Err(err.into()),
        },
        _ => (count_brute_force(e, axiom, must_contain, cap)?, "enumeration"),
    };
    let (m, k, p) = (e.num_candidates(), e.committee_size(), must_contain.len());
    let total = binomial(m - p, k - p);
    let fraction = BigRational::new(BigInt::from(count.clone()), BigInt::from(total.clone()));
    Ok(CountReport {
        schema: COUNT_SCHEMA.into(),
        instance: inst.name.clone(),
        n: e.num_voters(),
        m,
        k,
        axiom: axiom.to_string(),
        must_contain: labels(e, must_contain),
        method: method.into(),
        count: count.to_string(),
        total: total.to_string(),
        fraction: fraction.to_string(),
        fraction_value: ratio_to_f64(&fraction),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsweepRow {
    pub instance: String,
    pub k: usize,
    pub axiom: String,
    pub status: Status,
    pub accepted: u64,
    pub drawn: u64,
    pub fraction: Option<f64>,
    /// Filled when exact counting was requested and fits the cap.
    pub exact_fraction: Option<f64>,
}

/// Axiom fractions for every `k` in `1..=m`.
pub fn cmd_ksweep(inst: &Instance, axioms: &[Axiom], opts: &SampleOpts, exact_cap: Option<u64>) -> Result<Vec<KsweepRow>> {
    let m = inst.election.num_candidates();
    let mut rows = Vec::with_capacity(m * axioms.len());
    for k in 1..=m {
        let e = inst.election.with_committee_size(k)?;
        for &axiom in axioms {
            let est = estimate(&e, axiom, opts)?;
            let exact = match exact_cap {
                Some(cap) => match axiom_fraction_exact(&e, axiom, cap) {
                    Ok(f) => Some(ratio_to_f64(&f)),
                    Err(Error::CapExceeded { .. }) => None,
                    Err(err) => return Err(err.into()),
                },
                None => None,
            };
            rows.push(KsweepRow {
                instance: inst.name.clone(),
                k,
                axiom: axiom.to_string(),
                status: est.status,
                accepted: est.accepted,
                drawn: est.drawn,
                fraction: est.fraction,
                exact_fraction: exact,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionsRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub jr_fraction: Option<f64>,
    pub ejrp_fraction: Option<f64>,
    pub jr_status: Status,
    pub ejrp_status: Status,
    pub jr_drawn: u64,
    pub ejrp_drawn: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionsReport {
    pub schema: String,
    pub k_policy: String,
    pub effort: String,
    pub seed: u64,
    pub instances: Vec<FractionsRow>,
    pub skipped: Vec<Skipped>,
}

pub fn cmd_fractions(instances: &[Instance], skipped: Vec<Skipped>, policy: KPolicy, opts: &SampleOpts) -> Result<FractionsReport> {
    let rows = instances
        .par_iter()
        .map(|inst| {
            let e = &inst.election;
            let jr = estimate(e, Axiom::Jr, opts)?;
            let ejrp = estimate(e, Axiom::Ejrp, opts)?;
            Ok(FractionsRow {
                instance: inst.name.clone(),
                n: e.num_voters(),
                m: e.num_candidates(),
                k: e.committee_size(),
                jr_fraction: jr.fraction,
                ejrp_fraction: ejrp.fraction,
                jr_status: jr.status,
                ejrp_status: ejrp.status,
                jr_drawn: jr.drawn,
                ejrp_drawn: ejrp.drawn,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FractionsReport {
        schema: FRACTIONS_SCHEMA.into(),
        k_policy: policy.to_string(),
        effort: opts.effort.describe(),
        seed: opts.seed,
        instances: rows,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub schema: String,
    pub reports: Vec<FractionsReport>,
}

/// [`cmd_fractions`] once per k-policy over the same files.
pub fn cmd_robustness(
    files: &[(String, PabulibFile)],
    policies: &[KPolicy],
    min_avg_ballot: Option<f64>,
    opts: &SampleOpts,
) -> Result<RobustnessReport> {
    let reports = policies
        .iter()
        .map(|&policy| {
            let (instances, skipped) = to_instances(files, policy, min_avg_ballot);
            cmd_fractions(&instances, skipped, policy, opts)
        })
        .collect::<Result<_>>()?;
    Ok(RobustnessReport { schema: ROBUSTNESS_SCHEMA.into(), reports })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Mean pairwise distance of sampled axiom committees over the mean
    /// distance of two uniformly random committees.
    AvgSampled,
    /// Maximum distance between two axiom committees, via the integer program.
    MaxIlp,
}

impl FromStr for DistanceMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "avg_sampled" => Ok(DistanceMode::AvgSampled),
            "max_ilp" => Ok(DistanceMode::MaxIlp),
            _ => Err(CliError::Usage(format!("unknown distance mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceMode::AvgSampled => "avg_sampled",
            DistanceMode::MaxIlp => "max_ilp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub status: Status,
    /// Average or maximum `|W1 \ W2|`.
    pub distance: Option<f64>,
    /// Average: over `k (m - k) / m`. Maximum: over `min(k, m - k)`.
    pub normalized: Option<f64>,
    /// `m == k`: only one committee exists.
    pub degenerate: bool,
    pub pair: Option<[Vec<String>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub schema: String,
    pub mode: String,
    pub axiom: String,
    pub instances: Vec<DistanceRow>,
    pub skipped: Vec<Skipped>,
}

fn distance_row(
    inst: &Instance,
    axiom: Axiom,
    mode: DistanceMode,
    opts: &SampleOpts,
    backend: &Backend,
    time_limit: Duration,
) -> Result<DistanceRow> {
    let e = &inst.election;
    let (m, k) = (e.num_candidates(), e.committee_size());
    let mut row = DistanceRow {
        instance: inst.name.clone(),
        n: e.num_voters(),
        m,
        k,
        status: Status::Ok,
        distance: None,
        normalized: None,
        degenerate: m == k,
        pair: None,
    };
    match mode {
        DistanceMode::AvgSampled => {
            match estimate_avg_distance(e, axiom, opts.effort.acceptances()?, opts.seed, &opts.config()) {
                Ok(r) if r.degenerate => row.distance = Some(0.0),
                Ok(r) => {
                    let norm = ratio_to_f64(&r.estimate);
                    row.normalized = Some(norm);
                    row.distance = Some(norm * (k * (m - k)) as f64 / m as f64);
                }
                Err(Error::Timeout) => row.status = Status::Timeout,
                Err(Error::DrawCapExceeded { .. }) => row.status = Status::DrawCap,
                Err(err) => return Err(err.into()),
            }
        }
        DistanceMode::MaxIlp => {
            let model = build_diff_committees(e, axiom)?;
            match solve(&model, backend, time_limit)?.status {
                SolveStatus::Optimal { value, assignment } => {
                    if let Decoded::Diff { first, second, .. } = model.decode(&assignment)? {
                        row.pair = Some([labels(e, &first), labels(e, &second)]);
                    }
                    row.distance = Some(value as f64);
                    let most = k.min(m - k);
                    row.normalized = (most > 0).then(|| value as f64 / most as f64);
                }
                SolveStatus::Timeout => row.status = Status::Timeout,
                other => return Err(CliError::Usage(format!("{}: unexpected solver status {other}", inst.name))),
            }
        }
    }
    Ok(row)
}

pub fn cmd_distance(
    instances: &[Instance],
    skipped: Vec<Skipped>,
    axiom: Axiom,
    mode: DistanceMode,
    opts: &SampleOpts,
    backend: &Backend,
    time_limit: Duration,
) -> Result<DistanceReport> {
    let rows = instances
        .par_iter()
        .map(|inst| distance_row(inst, axiom, mode, opts, backend, time_limit))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistanceReport {
        schema: DISTANCE_SCHEMA.into(),
        mode: mode.to_string(),
        axiom: axiom.to_string(),
        instances: rows,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub instance: String,
    pub axiom: String,
    pub candidate: String,
    pub approval_score: usize,
    pub prevalence: f64,
    pub power: f64,
}

/// EJR+ fraction gate: `Some(reason)` when the instance should be skipped.
fn ejrp_gate(e: &Election, opts: &SampleOpts, max_ejrp_fraction: Option<f64>) -> Result<Option<String>> {
    let Some(max) = max_ejrp_fraction else { return Ok(None) };
    let est = estimate(e, Axiom::Ejrp, opts)?;
    Ok(match est.fraction {
        Some(f) if est.status == Status::Ok && f <= max => None,
        Some(f) if est.status == Status::Ok => Some(format!("ejrp fraction {f:.4} above {max}")),
        _ => Some(format!("ejrp fraction estimate stopped ({:?})", est.status)),
    })
}

fn sampling_failure(err: Error) -> Result<String> {
    match err {
        Error::Timeout => Ok("timeout".into()),
        Error::DrawCapExceeded { .. } => Ok(err.to_string()),
        other => Err(other.into()),
    }
}

/// Approval score, prevalence and power per candidate.
pub fn cmd_importance(
    instances: &[Instance],
    axiom: Axiom,
    opts: &SampleOpts,
    max_ejrp_fraction: Option<f64>,
) -> Result<(Vec<ImportanceRow>, Vec<Skipped>)> {
    let per_instance = instances
        .par_iter()
        .map(|inst| -> Result<std::result::Result<Vec<ImportanceRow>, Skipped>> {
            let e = &inst.election;
            let skip = |reason: String| Skipped { instance: inst.name.clone(), reason };
            if let Some(reason) = ejrp_gate(e, opts, max_ejrp_fraction)? {
                return Ok(Err(skip(reason)));
            }
            let est = match estimate_importance(e, axiom, opts.effort.acceptances()?, opts.seed, &opts.config()) {
                Ok(est) => est,
                Err(err) => return Ok(Err(skip(sampling_failure(err)?))),
            };
            let scores = e.approval_scores();
            Ok(Ok(e
                .candidates()
                .map(|c| ImportanceRow {
                    instance: inst.name.clone(),
                    axiom: axiom.to_string(),
                    candidate: label(e, c),
                    approval_score: scores[c],
                    prevalence: ratio_to_f64(&est.prevalence[c]),
                    power: ratio_to_f64(&est.power[c]),
                })
                .collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for item in per_instance {
        match item {
            Ok(r) => rows.extend(r),
            Err(s) => skipped.push(s),
        }
    }
    Ok((rows, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub instance: String,
    pub axiom: String,
    pub measure_a: String,
    pub measure_b: String,
    /// `None` when a measure is constant on the instance.
    pub pcc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCorrelation {
    pub axiom: String,
    pub measure_a: String,
    pub measure_b: String,
    pub mean_pcc: Option<f64>,
    /// Instances with a defined coefficient.
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelateReport {
    pub schema: String,
    pub per_instance: Vec<CorrelationRow>,
    pub mean: Vec<MeanCorrelation>,
}

const MEASURES: [&str; 3] = ["approval_score", "prevalence", "power"];

fn measure(row: &ImportanceRow, name: &str) -> f64 {
    match name {
        "approval_score" => row.approval_score as f64,
        "prevalence" => row.prevalence,
        _ => row.power,
    }
}

pub fn read_importance_csv(path: &Path) -> Result<Vec<ImportanceRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Pearson coefficients between every pair of measures, per instance and
/// averaged over instances.
pub fn cmd_correlate(rows: &[ImportanceRow]) -> CorrelateReport {
    let mut groups: BTreeMap<(String, String), Vec<&ImportanceRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.axiom.clone(), r.instance.clone())).or_default().push(r);
    }
    let mut per_instance = Vec::new();
    let mut sums: BTreeMap<(String, usize, usize), (f64, usize)> = BTreeMap::new();
    for ((axiom, instance), group) in &groups {
        for (a, &ma) in MEASURES.iter().enumerate() {
            for (b, &mb) in MEASURES.iter().enumerate().skip(a + 1) {
                let x: Vec<f64> = group.iter().map(|r| measure(r, ma)).collect();
                let y: Vec<f64> = group.iter().map(|r| measure(r, mb)).collect();
                let pcc = pearson(&x, &y);
                let entry = sums.entry((axiom.clone(), a, b)).or_insert((0.0, 0));
                if let Some(p) = pcc {
                    entry.0 += p;
                    entry.1 += 1;
                }
                per_instance.push(CorrelationRow {
                    instance: instance.clone(),
                    axiom: axiom.clone(),
                    measure_a: MEASURES[a].into(),
                    measure_b: MEASURES[b].into(),
                    pcc,
                });
            }
        }
    }
    let mean = sums
        .into_iter()
        .map(|((axiom, a, b), (sum, count))| MeanCorrelation {
            axiom,
            measure_a: MEASURES[a].into(),
            measure_b: MEASURES[b].into(),
            mean_pcc: (count > 0).then(|| sum / count as f64),
            instances: count,
        })
        .collect();
    CorrelateReport { schema: CORRELATE_SCHEMA.into(), per_instance, mean }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub instance: String,
    pub rule: String,
    pub measure: String,
    pub overlap: f64,
}

/// Relative overlap between each rule's committee and the top `k`
/// candidates by approval score, JR prevalence and EJR+ prevalence.
pub fn cmd_rules_overlap(
    instances: &[Instance],
    opts: &SampleOpts,
    max_ejrp_fraction: Option<f64>,
) -> Result<(Vec<OverlapRow>, Vec<Skipped>)> {
    let per_instance = instances
        .par_iter()
        .map(|inst| -> Result<std::result::Result<Vec<OverlapRow>, Skipped>> {
            let e = &inst.election;
            let k = e.committee_size();
            let skip = |reason: String| Skipped { instance: inst.name.clone(), reason };
            let accept = opts.effort.acceptances()?;
            let mut tops = vec![("approval", top_k_by_score(&e.approval_scores(), k))];
            for (name, axiom) in [("jr_prevalence", Axiom::Jr), ("ejrp_prevalence", Axiom::Ejrp)] {
                let est = match estimate_importance(e, axiom, accept, opts.seed, &opts.config()) {
                    Ok(est) => est,
                    Err(err) => return Ok(Err(skip(sampling_failure(err)?))),
                };
                if axiom == Axiom::Ejrp {
                    let fraction = est.samples_accepted as f64 / est.samples_drawn as f64;
                    if let Some(max) = max_ejrp_fraction.filter(|&max| fraction > max) {
                        return Ok(Err(skip(format!("ejrp fraction {fraction:.4} above {max}"))));
                    }
                }
                tops.push((name, top_k_by_score(&est.prevalence, k)));
            }
            let rules = [("mes", mes_with_phragmen_completion(e)), ("seq_phragmen", seq_phragmen(e)), ("seq_pav", seq_pav(e))];
            let mut rows = Vec::new();
            for (rule, w) in &rules {
                for (measure, top) in &tops {
                    let r = relative_overlap(w, top)?;
                    rows.push(OverlapRow {
                        instance: inst.name.clone(),
                        rule: (*rule).into(),
                        measure: (*measure).into(),
                        overlap: *r.numer() as f64 / *r.denom() as f64,
                    });
                }
            }
            Ok(Ok(rows))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for item in per_instance {
        match item {
            Ok(r) => rows.extend(r),
            Err(s) => skipped.push(s),
        }
    }
    Ok((rows, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenModel {
    Resampling { p: f64, phi: f64 },
    Euclidean { radius: f64, dim: usize },
}

/// Writes `count` generated elections (seeds `seed..seed + count`) as
/// pabulib files into `out_dir`.
pub fn cmd_gen(model: GenModel, n: usize, m: usize, k: usize, seed: u64, count: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for s in seed..seed + count {
        let e = match model {
            GenModel::Resampling { p, phi } => gen_resampling(n, m, k, p, phi, s)?,
            GenModel::Euclidean { radius, dim } => gen_euclidean(n, m, k, radius, dim, s)?,
        };
        let name = e.meta.name.clone().unwrap_or_else(|| format!("generated_s{s}"));
        let path = out_dir.join(format!("{name}.pb"));
        std::fs::write(&path, emit_pabulib(&PabulibFile::from_election(&e, &name)))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlpProblem {
    JrNotEjrp,
    Diff,
    PCandidates,
}

impl FromStr for IlpProblem {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "jr-not-ejrp" => Ok(IlpProblem::JrNotEjrp),
            "diff" | "diff-committees" => Ok(IlpProblem::Diff),
            "p-candidates" => Ok(IlpProblem::PCandidates),
            _ => Err(CliError::Usage(format!("unknown problem `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpReport {
    pub schema: String,
    pub instance: String,
    pub problem: String,
    /// Axiom strength of the diff and p-candidates models.
    pub t: Option<usize>,
    pub required: Option<Vec<String>>,
    pub quotient: bool,
    pub backend: String,
    pub status: String,
    pub objective: Option<i64>,
    pub wall_time_ms: u64,
    pub num_variables: usize,
    pub num_constraints: usize,
    pub committee: Option<Vec<String>>,
    pub second_committee: Option<Vec<String>>,
    pub witness: Option<WitnessOut>,
}

pub fn build_model(e: &Election, problem: IlpProblem, axiom: Axiom, required: &CandidateSet, quotient: bool) -> Result<MilpModel> {
    Ok(match (problem, quotient) {
        (IlpProblem::JrNotEjrp, false) => build_jr_not_ejrp(e),
        (IlpProblem::JrNotEjrp, true) => build_quotient_variant(e, &QuotientProblem::JrNotEjrp)?,
        (IlpProblem::Diff, false) => build_diff_committees(e, axiom)?,
        (IlpProblem::Diff, true) => build_quotient_variant(e, &QuotientProblem::DiffCommittees(axiom))?,
        (IlpProblem::PCandidates, false) => build_p_candidates(e, required, axiom)?,
        (IlpProblem::PCandidates, true) => {
            build_quotient_variant(e, &QuotientProblem::PCandidates(required.clone(), axiom))?
        }
    })
}

/// Builds and solves one model. With `lp_out`, the model is also written
/// there in LP format.
pub fn cmd_ilp(
    inst: &Instance,
    model: &MilpModel,
    backend: &Backend,
    time_limit: Duration,
    lp_out: Option<&Path>,
) -> Result<IlpReport> {
    let e = &inst.election;
    if let Some(path) = lp_out {
        std::fs::write(path, write_lp(model))?;
    }
    let outcome = solve(model, backend, time_limit)?;
    let (problem, t, required) = match model.problem() {
        Some(ProblemKind::JrNotEjrp) => ("jr-not-ejrp".to_string(), None, None),
        Some(ProblemKind::DiffCommittees { t }) => ("diff".to_string(), Some(*t), None),
        Some(ProblemKind::PCandidates { required, t }) => {
            ("p-candidates".to_string(), Some(*t), Some(labels(e, required)))
        }
        None => (model.name.clone(), None, None),
    };
    let mut report = IlpReport {
        schema: ILP_SCHEMA.into(),
        instance: inst.name.clone(),
        problem,
        t,
        required,
        quotient: model.is_quotient(),
        backend: outcome.backend.clone(),
        status: outcome.status.name().into(),
        objective: None,
        wall_time_ms: outcome.wall_time.as_millis() as u64,
        num_variables: model.num_vars(),
        num_constraints: model.constraints.len(),
        committee: None,
        second_committee: None,
        witness: None,
    };
    if let SolveStatus::Optimal { value, .. } = &outcome.status {
        report.objective = Some(*value);
    }
    if let Some(a) = outcome.status.assignment() {
        match model.decode(a)? {
            Decoded::JrNotEjrp { committee, witness } => {
                report.committee = Some(labels(e, &committee));
                report.witness = Some(WitnessOut::new(e, &witness));
            }
            Decoded::Diff { first, second, .. } => {
                report.committee = Some(labels(e, &first));
                report.second_committee = Some(labels(e, &second));
            }
            Decoded::PCandidates { committee } => report.committee = Some(labels(e, &committee)),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub schema: String,
    pub min_avg_ballot: f64,
    pub kept: Vec<String>,
    pub excluded: Vec<Skipped>,
}

pub fn cmd_filter(files: &[(String, PabulibFile)], min_avg_ballot: f64) -> FilterReport {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (name, f) in files {
        match exclusion_reason(f, min_avg_ballot) {
            None => kept.push(name.clone()),
            Some(reason) => excluded.push(Skipped { instance: name.clone(), reason: reason.to_string() }),
        }
    }
    FilterReport { schema: FILTER_SCHEMA.into(), min_avg_ballot, kept, excluded }
}

pub fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(&text, out)
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_csv<T: Serialize>(rows: &[T], out: Option<&Path>) -> Result<()> {
    write_text(&csv_string(rows)?, out)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
