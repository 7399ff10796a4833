use std::time::Duration;

use axiomscope::fixtures::{empty_profile, running_example};
use axiomscope::milp::*;
use axiomscope::*;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LIMIT: Duration = Duration::from_secs(120);

fn backends() -> [Backend; 2] {
    [Backend::enumeration(), Backend::branch_and_bound()]
}

fn random_election(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> Election {
    let n = rng.random_range(1..=max_n);
    let m = rng.random_range(2..=max_m);
    let k = rng.random_range(1..m);
    let p: f64 = rng.random_range(0.15..0.6);
    let ballots: Vec<Vec<usize>> = (0..n).map(|_| (0..m).filter(|_| rng.random_bool(p)).collect()).collect();
    Election::new(ballots, m, k).unwrap()
}

fn brute_jr_not_ejrp(e: &Election) -> bool {
    e.committees(u64::MAX).unwrap().any(|w| check_jr(e, &w).unwrap().satisfied && !check_ejrp(e, &w).unwrap().satisfied)
}

fn brute_diff(e: &Election, axiom: Axiom) -> usize {
    let good: Vec<_> = e.committees(u64::MAX).unwrap().filter(|w| check(e, w, axiom).unwrap().satisfied).collect();
    let mut best = 0;
    for a in &good {
        for b in &good {
            best = best.max(committee_distance(a, b).unwrap());
        }
    }
    best
}

fn brute_p(e: &Election, required: &CandidateSet, axiom: Axiom) -> bool {
    e.committees_containing(required, u64::MAX).unwrap().any(|w| check(e, &w, axiom).unwrap().satisfied)
}

fn feasible(model: &MilpModel, backend: &Backend) -> bool {
    let out = solve(model, backend, LIMIT).unwrap();
    match &out.status {
        SolveStatus::Feasible(a) => {
            if let Err(err) = model.decode(a) { panic!("{}: {err}\n{:?}\n{}", model.name, model.election(), write_lp(model)) }
            true
        }
        SolveStatus::Infeasible => false,
        other => panic!("{}: unexpected {other}", model.name),
    }
}

fn optimum(model: &MilpModel, backend: &Backend) -> usize {
    match solve(model, backend, LIMIT).unwrap().status {
        SolveStatus::Optimal { value, assignment } => {
            let Decoded::Diff { distance, .. } = model.decode(&assignment).unwrap() else { panic!() };
            assert_eq!(distance as i64, value);
            distance
        }
        other => panic!("{}: unexpected {other}", model.name),
    }
}

#[test]
fn running_example_has_jr_committee_violating_ejrp() {
    let e = running_example();
    for quotient in [false, true] {
        let model = if quotient {
            build_quotient_variant(&e, &QuotientProblem::JrNotEjrp).unwrap()
        } else {
            build_jr_not_ejrp(&e)
        };
        for backend in backends() {
            let out = solve(&model, &backend, LIMIT).unwrap();
            let a = out.status.assignment().expect("feasible").to_vec();
            let Decoded::JrNotEjrp { committee, witness } = model.decode(&a).unwrap() else { panic!() };
            assert!(check_jr(&e, &committee).unwrap().satisfied);
            assert!(witness_is_valid(&e, &committee, &witness));
            assert!(witness.ell >= 2);
        }
    }
    // the committee from the running example is one valid answer
    let w = CandidateSet::new([0, 2, 3, 4, 6]);
    assert!(check_jr(&e, &w).unwrap().satisfied);
    assert!(!check_ejrp(&e, &w).unwrap().satisfied);
}

#[test]
fn empty_ballots_are_infeasible_for_jr_not_ejrp() {
    let e = empty_profile(4, 6, 3);
    let plain = build_jr_not_ejrp(&e);
    let quotient = build_quotient_variant(&e, &QuotientProblem::JrNotEjrp).unwrap();
    assert!(quotient.num_vars() < plain.num_vars());
    // one class however many candidates there are
    let wide = build_quotient_variant(&empty_profile(4, 60, 3), &QuotientProblem::JrNotEjrp).unwrap();
    assert_eq!(wide.num_vars(), quotient.num_vars());
    for backend in backends() {
        assert!(!feasible(&plain, &backend));
        assert!(!feasible(&quotient, &backend));
    }
}

#[test]
fn empty_ballots_allow_disjoint_committees() {
    let e = empty_profile(3, 4, 2);
    for axiom in [Axiom::Jr, Axiom::Ejrp] {
        let plain = build_diff_committees(&e, axiom).unwrap();
        let quotient = build_quotient_variant(&e, &QuotientProblem::DiffCommittees(axiom)).unwrap();
        for backend in backends() {
            assert_eq!(optimum(&plain, &backend), 2);
            assert_eq!(optimum(&quotient, &backend), 2);
        }
    }
}

#[test]
fn running_example_diff_optima() {
    let e = running_example();
    for axiom in [Axiom::Jr, Axiom::Ejrp] {
        let expect = brute_diff(&e, axiom);
        let plain = build_diff_committees(&e, axiom).unwrap();
        let quotient = build_quotient_variant(&e, &QuotientProblem::DiffCommittees(axiom)).unwrap();
        for backend in backends() {
            assert_eq!(optimum(&plain, &backend), expect, "{axiom} {}", backend.id());
            assert_eq!(optimum(&quotient, &backend), expect, "{axiom} {}", backend.id());
        }
        if axiom == Axiom::Jr {
            assert_eq!(diff_committees_fpt_jr(&e, expect, DEFAULT_ENUMERATION_CAP).unwrap().max_distance, expect);
        }
    }
}

#[test]
fn running_example_admits_jr_committee_with_c8_c9() {
    let e = running_example();
    let required = CandidateSet::new([7, 8]);
    assert!(brute_p(&e, &required, Axiom::Jr));
    let model = build_p_candidates(&e, &required, Axiom::Jr).unwrap();
    for backend in backends() {
        let out = solve(&model, &backend, LIMIT).unwrap();
        let Decoded::PCandidates { committee } = model.decode(out.status.assignment().unwrap()).unwrap() else {
            panic!()
        };
        assert!(required.is_subset_of(&committee));
        assert!(check_jr(&e, &committee).unwrap().satisfied);
    }
    assert!(check_jr(&e, &CandidateSet::new([0, 1, 4, 7, 8])).unwrap().satisfied);
}

#[test]
fn single_required_candidate_is_always_possible_for_jr() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let e = random_election(&mut rng, 6, 7);
        if e.approval_scores().contains(&0) {
            continue;
        }
        for c in e.candidates() {
            let model = build_p_candidates(&e, &CandidateSet::new([c]), Axiom::Jr).unwrap();
            assert!(feasible(&model, &Backend::enumeration()));
        }
    }
}

#[test]
fn oversized_required_set_is_rejected() {
    let e = running_example();
    let required = CandidateSet::new(0..6);
    assert!(matches!(build_p_candidates(&e, &required, Axiom::Jr), Err(Error::RequiredTooLarge { required: 6, k: 5 })));
    assert!(matches!(
        build_quotient_variant(&e, &QuotientProblem::PCandidates(required, Axiom::Ejrp)),
        Err(Error::RequiredTooLarge { .. })
    ));
}

#[test]
#[allow(clippy::int_plus_one)]
fn strict_inequality_scaling_is_exact() {
    // k * s <= l * n - 1 and s < l * n / k agree for all integer inputs
    for n in 1..15i64 {
        for k in 1..10i64 {
            for l in 1..=k {
                for s in 0..=n {
                    assert_eq!(k * s <= l * n - 1, Ratio::from_integer(s) < Ratio::new(l * n, k));
                }
            }
        }
    }
}

#[test]
fn models_agree_with_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bnb = Backend::branch_and_bound();
    for _ in 0..60 {
        let e = random_election(&mut rng, 6, 7);
        let jrne = brute_jr_not_ejrp(&e);
        assert_eq!(feasible(&build_jr_not_ejrp(&e), &bnb), jrne, "{e:?}");
        assert_eq!(feasible(&build_quotient_variant(&e, &QuotientProblem::JrNotEjrp).unwrap(), &bnb), jrne);
        let required = CandidateSet::new([rng.random_range(0..e.num_candidates())]);
        for axiom in [Axiom::Jr, Axiom::Ejrp] {
            let d = brute_diff(&e, axiom);
            assert_eq!(optimum(&build_diff_committees(&e, axiom).unwrap(), &bnb), d, "{axiom} {e:?}");
            let q = build_quotient_variant(&e, &QuotientProblem::DiffCommittees(axiom)).unwrap();
            assert_eq!(optimum(&q, &bnb), d, "quotient {axiom} {e:?}");
            let p = brute_p(&e, &required, axiom);
            assert_eq!(feasible(&build_p_candidates(&e, &required, axiom).unwrap(), &bnb), p);
            let q = build_quotient_variant(&e, &QuotientProblem::PCandidates(required.clone(), axiom)).unwrap();
            assert_eq!(feasible(&q, &bnb), p);
        }
    }
}

#[test]
fn written_models_parse_back_and_keep_their_solutions() {
    let e = running_example();
    let model = build_diff_committees(&e, Axiom::Ejrp).unwrap();
    let back = parse_lp(&write_lp(&model)).unwrap();
    assert_eq!(back.num_vars(), model.num_vars());
    assert_eq!(back.constraints.len(), model.constraints.len());
    let SolveStatus::Optimal { value, assignment } = solve(&model, &Backend::enumeration(), LIMIT).unwrap().status else {
        panic!()
    };
    let by_name: Vec<i64> = back
        .variables
        .iter()
        .map(|v| assignment[model.var_by_name(&v.name).unwrap()])
        .collect();
    back.check_assignment(&by_name).unwrap();
    assert_eq!(back.objective_value(&by_name), value);
}

#[test]
fn external_backend_agrees_when_configured() {
    let Some(backend) = Backend::external_from_env() else { return };
    let e = running_example();
    assert!(feasible(&build_jr_not_ejrp(&e), &backend));
    assert_eq!(optimum(&build_diff_committees(&e, Axiom::Jr).unwrap(), &backend), brute_diff(&e, Axiom::Jr));
}
