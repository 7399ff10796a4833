//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p axiomscope-cli --test acceptance`. Set `SOLVER_CMD`
//! to also cross-check the external solver backend.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axiomscope::count::{axiom_fraction_exact, count_brute_force, count_jr_fpt};
use axiomscope::fixtures::{empty_profile, running_example};
use axiomscope::gen::{gen_euclidean, gen_resampling};
use axiomscope::milp::*;
use axiomscope::rules::mes_with_phragmen_completion;
use axiomscope::sample::{estimate_avg_distance, estimate_fraction, estimate_prevalence, ratio_to_f64, SamplerConfig};
use axiomscope::*;
use axiomscope_cli::drivers::{cmd_ksweep, Effort, SampleOpts, Status};
use axiomscope_cli::input::load_one;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn random_election(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> Election {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(2..=max_m);
    let k = rng.random_range(1..=m);
    let p: f64 = rng.random_range(0.1..0.7);
    let ballots: Vec<Vec<usize>> = (0..n).map(|_| (0..m).filter(|_| rng.random_bool(p)).collect()).collect();
    Election::new(ballots, m, k).unwrap()
}

fn elections(count: u64, seed: u64, max_n: usize, max_m: usize) -> Vec<Election> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_election(&mut rng, max_n, max_m)).collect()
}

fn running_example_fidelity() -> Outcome {
    let e = running_example();
    let w = CandidateSet::new([0, 2, 3, 4, 6]);
    let other = CandidateSet::new([0, 1, 2, 3, 5]);
    let start = Instant::now();
    let jr = check_jr(&e, &w).unwrap();
    let ejrp = check_ejrp(&e, &w).unwrap();
    let ejrp_other = check_ejrp(&e, &other).unwrap();
    let elapsed = start.elapsed();
    ensure!(jr.satisfied, "JR should hold");
    let expected = Violation { candidate: 5, ell: 2, voters: vec![5, 6, 7, 8, 9] };
    ensure!(ejrp.witness == Some(expected.clone()), "witness {:?}, expected {expected:?}", ejrp.witness);
    ensure!(ejrp_other.satisfied, "second committee should satisfy EJR+");
    ensure!(elapsed < Duration::from_millis(1), "three checks took {elapsed:?}");
    Ok(format!("three checks in {elapsed:?}"))
}

fn counting_oracle() -> Outcome {
    let cap = u64::MAX;
    let set = elections(500, 2, 8, 12);
    let cases: usize = set
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            let mut cases = 0;
            for k in 1..=e.num_candidates() {
                let e = e.with_committee_size(k).unwrap();
                let none = CandidateSet::empty();
                let fpt = count_jr_fpt(&e, &none, cap).map_err(|err| err.to_string())?;
                let brute = count_brute_force(&e, Axiom::Jr, &none, cap).map_err(|err| err.to_string())?;
                ensure!(fpt == brute, "election {i}, k = {k}: {fpt} vs {brute}");
                let must = CandidateSet::new((0..e.num_candidates()).filter(|_| rng.random_bool(0.15)).take(k));
                let fpt = count_jr_fpt(&e, &must, cap).map_err(|err| err.to_string())?;
                let brute = count_brute_force(&e, Axiom::Jr, &must, cap).map_err(|err| err.to_string())?;
                ensure!(fpt == brute, "election {i}, k = {k}, must contain {must:?}: {fpt} vs {brute}");
                cases += 2;
            }
            Ok(cases)
        })
        .collect::<std::result::Result<Vec<_>, String>>()?
        .into_iter()
        .sum();
    Ok(format!("500 elections, {cases} (k, required set) cases agree"))
}

fn failure_rate(exact: f64, epsilon: f64, runs: impl Fn(u64) -> f64 + Sync) -> f64 {
    let failures = (0..200u64).into_par_iter().filter(|&s| (runs(s) - exact).abs() > epsilon).count();
    failures as f64 / 200.0
}

fn estimator_guarantee() -> Outcome {
    let (epsilon, delta) = (0.05, 0.2);
    let e = running_example();
    let cfg = SamplerConfig::default();
    let mut notes = Vec::new();
    for axiom in [Axiom::Jr, Axiom::Ejrp] {
        let exact = ratio_to_f64(&axiom_fraction_exact(&e, axiom, u64::MAX).unwrap());
        let rate = failure_rate(exact, epsilon, |s| {
            estimate_fraction(&e, axiom, epsilon, delta, s, &cfg).unwrap().estimate_f64()
        });
        ensure!(rate <= 0.26, "{axiom} fraction failure rate {rate}");
        notes.push(format!("{axiom} fraction {rate:.3}"));
    }
    // prevalence of candidate c among EJR+ committees
    let good: Vec<Committee> = e.committees(u64::MAX).unwrap().filter(|w| satisfies(&e, w, Axiom::Ejrp)).collect();
    for c in [0, 4, 5, 8] {
        let exact = good.iter().filter(|w| w.contains(c)).count() as f64 / good.len() as f64;
        let rate = failure_rate(exact, epsilon, |s| {
            estimate_prevalence(&e, c, Axiom::Ejrp, epsilon, delta, s, &cfg).unwrap().estimate_f64()
        });
        ensure!(rate <= 0.26, "prevalence of {c} failure rate {rate}");
        notes.push(format!("prevalence c{c} {rate:.3}"));
    }
    Ok(format!("failure rates: {}", notes.join(", ")))
}

fn brute_diff(e: &Election, axiom: Axiom) -> usize {
    let good: Vec<_> = e.committees(u64::MAX).unwrap().filter(|w| satisfies(e, w, axiom)).collect();
    let mut best = 0;
    for (i, a) in good.iter().enumerate() {
        for b in &good[i..] {
            best = best.max(committee_distance(a, b).unwrap());
        }
    }
    best
}

#[derive(Debug, PartialEq)]
enum Verdict {
    Feasible,
    Infeasible,
    Optimum(usize),
}

/// Solves, verifies the decoded solution against the axioms and returns the
/// verdict.
fn verdict(model: &MilpModel, backend: &Backend) -> std::result::Result<Verdict, String> {
    let e = model.election().expect("built from an election");
    let out = solve(model, backend, Duration::from_secs(120)).map_err(|err| format!("{}: {err}", model.name))?;
    let decoded = match &out.status {
        SolveStatus::Infeasible => return Ok(Verdict::Infeasible),
        SolveStatus::Feasible(a) | SolveStatus::Optimal { assignment: a, .. } => {
            model.decode(a).map_err(|err| format!("{}: {err}", model.name))?
        }
        SolveStatus::Timeout => return Err(format!("{} timed out", model.name)),
    };
    match decoded {
        Decoded::JrNotEjrp { committee, witness } => {
            ensure!(satisfies(e, &committee, Axiom::Jr), "{}: decoded committee violates JR", model.name);
            ensure!(witness_is_valid(e, &committee, &witness), "{}: invalid witness", model.name);
            Ok(Verdict::Feasible)
        }
        Decoded::Diff { first, second, distance } => {
            let Some(ProblemKind::DiffCommittees { t }) = model.problem() else { unreachable!() };
            for w in [&first, &second] {
                ensure!(check_t_ejrp(e, w, *t).unwrap().satisfied, "{}: decoded committee fails", model.name);
            }
            ensure!(committee_distance(&first, &second).unwrap() == distance, "{}: distance mismatch", model.name);
            let SolveStatus::Optimal { value, .. } = out.status else { unreachable!() };
            ensure!(value == distance as i64, "{}: objective {value} vs distance {distance}", model.name);
            Ok(Verdict::Optimum(distance))
        }
        Decoded::PCandidates { committee } => {
            let Some(ProblemKind::PCandidates { required, t }) = model.problem() else { unreachable!() };
            ensure!(required.is_subset_of(&committee), "{}: required candidates missing", model.name);
            ensure!(check_t_ejrp(e, &committee, *t).unwrap().satisfied, "{}: decoded committee fails", model.name);
            Ok(Verdict::Feasible)
        }
    }
}

fn models(e: &Election, rng: &mut ChaCha8Rng) -> Vec<(MilpModel, Verdict)> {
    let k = e.committee_size();
    let m = e.num_candidates();
    let mut out = Vec::new();
    let feasible = |yes: bool| if yes { Verdict::Feasible } else { Verdict::Infeasible };
    let jrne = e.committees(u64::MAX).unwrap().any(|w| satisfies(e, &w, Axiom::Jr) && !satisfies(e, &w, Axiom::Ejrp));
    out.push((build_jr_not_ejrp(e), feasible(jrne)));
    out.push((build_quotient_variant(e, &QuotientProblem::JrNotEjrp).unwrap(), feasible(jrne)));
    let size = rng.random_range(1..=k.min(2));
    let required = CandidateSet::new(rand::seq::index::sample(rng, m, size));
    for axiom in [Axiom::Jr, Axiom::Ejrp] {
        let d = brute_diff(e, axiom);
        out.push((build_diff_committees(e, axiom).unwrap(), Verdict::Optimum(d)));
        out.push((build_quotient_variant(e, &QuotientProblem::DiffCommittees(axiom)).unwrap(), Verdict::Optimum(d)));
        let p = e.committees_containing(&required, u64::MAX).unwrap().any(|w| satisfies(e, &w, axiom));
        out.push((build_p_candidates(e, &required, axiom).unwrap(), feasible(p)));
        let q = QuotientProblem::PCandidates(required.clone(), axiom);
        out.push((build_quotient_variant(e, &q).unwrap(), feasible(p)));
    }
    out
}

fn ilp_cross_validation() -> Outcome {
    let set = elections(300, 4, 7, 9);
    let mut backends = vec![Backend::from_name("fallback").unwrap(), Backend::branch_and_bound()];
    if let Some(external) = Backend::external_from_env() {
        backends.push(external);
    }
    let names: Vec<&str> = backends.iter().map(Backend::id).collect();
    let solved: usize = set
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
            let mut solved = 0;
            for (model, expected) in models(e, &mut rng) {
                for backend in &backends {
                    let got = verdict(&model, backend)?;
                    ensure!(got == expected, "election {i} {} on {}: {got:?}, expected {expected:?}", model.name, backend.id());
                    solved += 1;
                }
            }
            Ok(solved)
        })
        .collect::<std::result::Result<Vec<_>, String>>()?
        .into_iter()
        .sum();
    Ok(format!("300 elections, {solved} solves agree ({})", names.join(", ")))
}

fn mes_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let specs: Vec<(usize, usize, usize, u64, u8)> = (0..1200)
        .map(|i| {
            let n = rng.random_range(1..=150);
            let m = rng.random_range(2..=50);
            (n, m, rng.random_range(1..=m), i, rng.random_range(0..3))
        })
        .collect();
    specs.par_iter().try_for_each(|&(n, m, k, seed, kind)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = match kind {
            0 => gen_resampling(n, m, k, rng.random_range(0.05..0.5), rng.random_range(0.0..1.0), seed).unwrap(),
            1 => gen_euclidean(n, m, k, rng.random_range(0.02..0.4), rng.random_range(1..=2), seed).unwrap(),
            _ => random_election(&mut rng, n, m),
        };
        let w = mes_with_phragmen_completion(&e);
        ensure!(w.len() == e.committee_size(), "wrong committee size for {e:?}");
        let report = check_ejrp(&e, &w).unwrap();
        ensure!(report.satisfied, "seed {seed}: {w:?} violates EJR+ via {:?}", report.witness);
        Ok(())
    })?;
    Ok(format!("{} elections, all EJR+", specs.len()))
}

fn monotonicity() -> Outcome {
    let set = elections(400, 6, 8, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    for (i, e) in set.iter().enumerate() {
        let m = e.num_candidates();
        let k = e.committee_size();
        for _ in 0..10 {
            let w = CandidateSet::new(rand::seq::index::sample(&mut rng, m, k));
            let holds: Vec<bool> = (1..=k).map(|t| check_t_ejrp(e, &w, t).unwrap().satisfied).collect();
            ensure!(holds.windows(2).all(|p| p[0] >= p[1]), "election {i}, {w:?}: {holds:?}");
            ensure!(holds[0] == satisfies(e, &w, Axiom::Jr), "election {i}, {w:?}: 1-EJR+ differs from JR");
            checked += k;
        }
        let jr = axiom_fraction_exact(e, Axiom::Jr, u64::MAX).unwrap();
        let ejrp = axiom_fraction_exact(e, Axiom::Ejrp, u64::MAX).unwrap();
        ensure!(ejrp <= jr, "election {i}: EJR+ fraction {ejrp} > JR fraction {jr}");
    }
    Ok(format!("{checked} (election, committee, t) triples; 400 exact fraction pairs"))
}

fn distance_identities() -> Outcome {
    for m in 1..=8 {
        for k in 1..=m {
            let e = empty_profile(1, m, k);
            let all: Vec<Committee> = e.committees(u64::MAX).unwrap().collect();
            let total: u64 = all.iter().flat_map(|a| all.iter().map(move |b| committee_distance(a, b).unwrap() as u64)).sum();
            let brute = Ratio::new(total, (all.len() * all.len()) as u64);
            let formula = expected_random_distance(m, k).unwrap();
            ensure!(formula == brute, "m = {m}, k = {k}: {formula} vs {brute}");
        }
    }
    let cfg = SamplerConfig::default();
    let mut values = Vec::new();
    for (m, k) in [(10, 3), (20, 6), (30, 15)] {
        let e = empty_profile(5, m, k);
        let r = estimate_avg_distance(&e, Axiom::Ejrp, 5000, 9, &cfg).unwrap();
        let v = r.estimate_f64();
        ensure!((v - 1.0).abs() <= 0.05, "m = {m}, k = {k}: normalized distance {v}");
        values.push(format!("{v:.5}"));
    }
    Ok(format!("formula exact for m <= 8; normalized distances {}", values.join(", ")))
}

fn ksweep_smoke() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/running_example.pb");
    let inst = load_one(&path, "explicit:5".parse().unwrap()).map_err(|err| err.to_string())?;
    let e = &inst.election;
    let epsilon = 0.05;
    let opts = SampleOpts { effort: Effort::Hoeffding { epsilon, delta: 0.01 }, seed: 8, timeout: Some(Duration::from_secs(60)) };
    let axioms = [Axiom::Jr, Axiom::Ejrp];
    let rows = cmd_ksweep(&inst, &axioms, &opts, Some(u64::MAX)).map_err(|err| err.to_string())?;
    let m = e.num_candidates();
    ensure!(rows.len() == 2 * m, "{} rows", rows.len());
    let mut worst: f64 = 0.0;
    for r in &rows {
        ensure!(r.status == Status::Ok, "k = {} {}: {:?}", r.k, r.axiom, r.status);
        let (Some(est), Some(exact)) = (r.fraction, r.exact_fraction) else {
            return Err(format!("k = {} {}: missing fraction", r.k, r.axiom));
        };
        worst = worst.max((est - exact).abs());
        ensure!((est - exact).abs() <= epsilon, "k = {} {}: {est} vs exact {exact}", r.k, r.axiom);
    }
    let unanimous = e.candidates().any(|c| e.approval_score(c) == e.num_voters());
    let covered_at_m = e.ballots().iter().all(|b| !b.is_empty());
    let mut extremes = Vec::new();
    for r in rows.iter().filter(|r| (r.k == 1 && !unanimous) || (r.k == m && covered_at_m)) {
        ensure!(r.exact_fraction == Some(1.0) && r.fraction == Some(1.0), "k = {} {}: not 1", r.k, r.axiom);
        extremes.push(format!("k={} {}", r.k, r.axiom));
    }
    ensure!(!extremes.is_empty(), "no extreme-k precondition holds on the fixture");
    Ok(format!("{} rows, max |estimate - exact| = {worst:.4}; fraction 1 at {}", rows.len(), extremes.join(", ")))
}

fn generator_statistics() -> Outcome {
    let (n, m) = (1000, 30);
    for (p, seed) in [(0.1, 1), (0.3, 2), (0.5, 3)] {
        let e = gen_resampling(n, m, 5, p, 1.0, seed).unwrap();
        let rate = e.mean_ballot_size() / m as f64;
        let sigma = (p * (1.0 - p) / (n * m) as f64).sqrt();
        ensure!((rate - p).abs() <= 3.0 * sigma, "p = {p}: rate {rate}, sigma {sigma}");
    }
    for dim in [1, 2] {
        for radius in [(dim as f64).sqrt(), 2.0] {
            let e = gen_euclidean(50, 12, 3, radius, dim, 4).unwrap();
            ensure!(e.ballots().iter().all(|b| b.len() == 12), "dim {dim}, r = {radius}: incomplete ballot");
        }
    }
    let same = |a: &Election, b: &Election| a.ballots() == b.ballots();
    ensure!(same(&gen_resampling(40, 15, 4, 0.2, 0.6, 10).unwrap(), &gen_resampling(40, 15, 4, 0.2, 0.6, 10).unwrap()), "resampling not deterministic");
    ensure!(!same(&gen_resampling(40, 15, 4, 0.2, 0.6, 10).unwrap(), &gen_resampling(40, 15, 4, 0.2, 0.6, 11).unwrap()), "resampling ignores seed");
    ensure!(same(&gen_euclidean(40, 15, 4, 0.2, 2, 10).unwrap(), &gen_euclidean(40, 15, 4, 0.2, 2, 10).unwrap()), "euclidean not deterministic");
    ensure!(!same(&gen_euclidean(40, 15, 4, 0.2, 2, 10).unwrap(), &gen_euclidean(40, 15, 4, 0.2, 2, 11).unwrap()), "euclidean ignores seed");
    Ok("rates within 3 sigma, complete ballots, seeded".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("running example fidelity", running_example_fidelity, Duration::from_secs(1)),
        ("counting oracle equivalence", counting_oracle, Duration::from_secs(300)),
        ("estimator guarantee", estimator_guarantee, Duration::from_secs(600)),
        ("ILP cross-validation", ilp_cross_validation, Duration::from_secs(900)),
        ("MES returns EJR+ committees", mes_guarantee, Duration::from_secs(600)),
        ("monotonicity", monotonicity, Duration::from_secs(600)),
        ("distance identities", distance_identities, Duration::from_secs(600)),
        ("k-sweep smoke test", ksweep_smoke, Duration::from_secs(600)),
        ("generator statistics", generator_statistics, Duration::from_secs(600)),
    ];
    // keep the expected-failure output of panicking criteria readable
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; took {elapsed:.1?}, budget {budget:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name} ({elapsed:.2?}): {detail}", i + 1);
            }
        }
    }
    let _ = std::panic::take_hook();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
