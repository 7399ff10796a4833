//! Monte Carlo estimators over uniformly random committees.
//!
//! Work is split across a fixed number of independent ChaCha8 streams: stream
//! `s` is seeded with the master seed and switched to stream index `s`. Each
//! stream owns a fixed share of the requested samples, so results depend on
//! the seed and the stream count only, never on the thread count.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::axioms::{satisfies, Axiom};
use crate::election::{expected_random_distance, CandidateId, CandidateSet, Committee, Election};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SamplerConfig {
    /// Number of RNG streams the work is split across.
    pub streams: u64,
    /// Rejection samplers give up after `draw_cap_factor * target` draws.
    pub draw_cap_factor: u64,
    pub deadline: Option<Instant>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { streams: 8, draw_cap_factor: 10_000, deadline: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub estimate: BigRational,
    /// Set when the sample size was derived from an (epsilon, delta) target.
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub samples_drawn: u64,
    pub samples_accepted: u64,
    pub seed: u64,
    /// The statistic is undefined (e.g. a zero normaliser) and `estimate` is 0.
    pub degenerate: bool,
}

impl EstimatorResult {
    pub fn estimate_f64(&self) -> f64 {
        ratio_to_f64(&self.estimate)
    }
}

pub fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Hoeffding sample size `ceil(ln(2/delta) / (2 epsilon^2))`.
///
/// Values within a relative `1e-9` of an integer are snapped to it first, so
/// that parameters chosen to make the bound integral are not pushed up by
/// floating-point noise.
pub fn required_samples(epsilon: f64, delta: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} not in (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} not in (0, 1)")));
    }
    let r = (2.0 / delta).ln() / (2.0 * epsilon * epsilon);
    let nearest = r.round();
    let r = if (r - nearest).abs() <= 1e-9 * r.max(1.0) { nearest } else { r.ceil() };
    Ok(r.max(1.0) as u64)
}

/// The RNG for stream `stream` under master seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws uniform size-`k` subsets of `0..m` by partial Fisher-Yates.
#[derive(Debug, Clone)]
pub struct CommitteeSampler {
    ids: Vec<CandidateId>,
    k: usize,
}

impl CommitteeSampler {
    pub fn new(m: usize, k: usize) -> Self {
        CommitteeSampler { ids: (0..m).collect(), k }
    }

    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Committee {
        let m = self.ids.len();
        for i in 0..self.k {
            let j = rng.random_range(i..m);
            self.ids.swap(i, j);
        }
        CandidateSet::new(self.ids[..self.k].iter().copied())
    }
}

pub fn sample_committee_uniform<R: Rng + ?Sized>(e: &Election, rng: &mut R) -> Committee {
    CommitteeSampler::new(e.num_candidates(), e.committee_size()).draw(rng)
}

fn shares(total: u64, streams: u64) -> impl Iterator<Item = (u64, u64)> {
    let streams = streams.max(1);
    (0..streams).map(move |s| (s, total / streams + u64::from(s < total % streams)))
}

/// Draws exactly `draws` committees and folds every one of them into a
/// per-stream state. States come back in stream order.
fn direct<S, F>(e: &Election, draws: u64, seed: u64, cfg: &SamplerConfig, init: impl Fn() -> S + Sync, visit: F) -> Result<Vec<S>>
where
    S: Send,
    F: Fn(&mut S, &Committee) + Sync,
{
    shares(draws, cfg.streams)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(stream, quota)| {
            let mut rng = stream_rng(seed, stream);
            let mut sampler = CommitteeSampler::new(e.num_candidates(), e.committee_size());
            let mut state = init();
            for drawn in 0..quota {
                if drawn % 1024 == 0 && cfg.deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err(Error::Timeout);
                }
                visit(&mut state, &sampler.draw(&mut rng));
            }
            Ok(state)
        })
        .collect()
}

/// Draws committees until `target` of them satisfy `axiom`, folding each
/// accepted committee into a per-stream state. Returns the total number of
/// draws and the states in stream order.
fn rejection<S, F>(
    e: &Election,
    axiom: Axiom,
    target: u64,
    seed: u64,
    cfg: &SamplerConfig,
    init: impl Fn() -> S + Sync,
    accept: F,
) -> Result<(u64, Vec<S>)>
where
    S: Send,
    F: Fn(&mut S, &Committee) + Sync,
{
    let per_stream: Vec<(u64, S)> = shares(target, cfg.streams)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(stream, quota)| {
            let mut rng = stream_rng(seed, stream);
            let mut sampler = CommitteeSampler::new(e.num_candidates(), e.committee_size());
            let mut state = init();
            let cap = quota.saturating_mul(cfg.draw_cap_factor);
            let (mut drawn, mut accepted) = (0u64, 0u64);
            while accepted < quota {
                if drawn == cap {
                    return Err((drawn, accepted, Error::DrawCapExceeded { cap: 0, accepted: 0 }));
                }
                if drawn % 1024 == 0 && cfg.deadline.is_some_and(|d| Instant::now() >= d) {
                    return Err((drawn, accepted, Error::Timeout));
                }
                let w = sampler.draw(&mut rng);
                drawn += 1;
                if satisfies(e, &w, axiom) {
                    accepted += 1;
                    accept(&mut state, &w);
                }
            }
            Ok((drawn, state))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<std::result::Result<_, _>>()
        .map_err(|(_, accepted, err)| match err {
            Error::DrawCapExceeded { .. } => {
                Error::DrawCapExceeded { cap: target.saturating_mul(cfg.draw_cap_factor), accepted }
            }
            other => other,
        })?;
    let drawn = per_stream.iter().map(|(d, _)| d).sum();
    Ok((drawn, per_stream.into_iter().map(|(_, s)| s).collect()))
}

fn check_candidate(e: &Election, c: CandidateId) -> Result<()> {
    if c >= e.num_candidates() {
        return Err(Error::CandidateOutOfRange { id: c, num_candidates: e.num_candidates() });
    }
    Ok(())
}

/// Fraction of uniformly random committees satisfying `axiom`, from
/// `required_samples(epsilon, delta)` draws.
pub fn estimate_fraction(
    e: &Election,
    axiom: Axiom,
    epsilon: f64,
    delta: f64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<EstimatorResult> {
    let r = required_samples(epsilon, delta)?;
    let hits: u64 = direct(e, r, seed, cfg, || 0u64, |hits, w| *hits += u64::from(satisfies(e, w, axiom)))?
        .into_iter()
        .sum();
    Ok(EstimatorResult {
        estimate: ratio(hits, r),
        epsilon: Some(epsilon),
        delta: Some(delta),
        samples_drawn: r,
        samples_accepted: hits,
        seed,
        degenerate: false,
    })
}

/// Fraction estimate `accepted / drawn` from sampling until `num_accepted`
/// committees satisfy `axiom`.
pub fn estimate_fraction_by_acceptances(
    e: &Election,
    axiom: Axiom,
    num_accepted: u64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<EstimatorResult> {
    positive(num_accepted)?;
    let (drawn, _) = rejection(e, axiom, num_accepted, seed, cfg, || (), |_, _| {})?;
    Ok(EstimatorResult {
        estimate: ratio(num_accepted, drawn),
        epsilon: None,
        delta: None,
        samples_drawn: drawn,
        samples_accepted: num_accepted,
        seed,
        degenerate: false,
    })
}

fn positive(num_accepted: u64) -> Result<()> {
    if num_accepted == 0 {
        return Err(Error::InvalidParameter("number of accepted samples must be positive".into()));
    }
    Ok(())
}

/// Share of `axiom`-satisfying committees that contain `c`, from
/// `required_samples(epsilon, delta)` accepted samples.
pub fn estimate_prevalence(
    e: &Election,
    c: CandidateId,
    axiom: Axiom,
    epsilon: f64,
    delta: f64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<EstimatorResult> {
    check_candidate(e, c)?;
    let r = required_samples(epsilon, delta)?;
    let (drawn, hits) = rejection(e, axiom, r, seed, cfg, || 0u64, |h, w| *h += u64::from(w.contains(c)))?;
    Ok(EstimatorResult {
        estimate: ratio(hits.iter().sum(), r),
        epsilon: Some(epsilon),
        delta: Some(delta),
        samples_drawn: drawn,
        samples_accepted: r,
        seed,
        degenerate: false,
    })
}

/// Whether `c` is pivotal for `w`: `w` contains `c` and `w \ {c}` fails
/// `axiom` (still judged with the election's `k`).
pub fn is_pivotal(e: &Election, w: &CandidateSet, c: CandidateId, axiom: Axiom) -> bool {
    w.contains(c) && !satisfies(e, &w.without(c), axiom)
}

/// Share of `num_accepted` sampled `axiom`-satisfying committees for which
/// `c` is pivotal.
pub fn estimate_power_index(
    e: &Election,
    c: CandidateId,
    axiom: Axiom,
    num_accepted: u64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<EstimatorResult> {
    check_candidate(e, c)?;
    positive(num_accepted)?;
    let (drawn, hits) =
        rejection(e, axiom, num_accepted, seed, cfg, || 0u64, |h, w| *h += u64::from(is_pivotal(e, w, c, axiom)))?;
    Ok(EstimatorResult {
        estimate: ratio(hits.iter().sum(), num_accepted),
        epsilon: None,
        delta: None,
        samples_drawn: drawn,
        samples_accepted: num_accepted,
        seed,
        degenerate: false,
    })
}

/// Per-candidate prevalence and power fractions from one shared sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceEstimates {
    pub prevalence: Vec<BigRational>,
    pub power: Vec<BigRational>,
    pub samples_drawn: u64,
    pub samples_accepted: u64,
    pub seed: u64,
}

pub fn estimate_importance(
    e: &Election,
    axiom: Axiom,
    num_accepted: u64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<ImportanceEstimates> {
    positive(num_accepted)?;
    let m = e.num_candidates();
    let (drawn, states) = rejection(
        e,
        axiom,
        num_accepted,
        seed,
        cfg,
        || (vec![0u64; m], vec![0u64; m]),
        |(contains, pivotal), w| {
            for c in w.iter() {
                contains[c] += 1;
                pivotal[c] += u64::from(is_pivotal(e, w, c, axiom));
            }
        },
    )?;
    let (mut contains, mut pivotal) = (vec![0u64; m], vec![0u64; m]);
    for (cs, ps) in states {
        for c in 0..m {
            contains[c] += cs[c];
            pivotal[c] += ps[c];
        }
    }
    Ok(ImportanceEstimates {
        prevalence: contains.into_iter().map(|x| ratio(x, num_accepted)).collect(),
        power: pivotal.into_iter().map(|x| ratio(x, num_accepted)).collect(),
        samples_drawn: drawn,
        samples_accepted: num_accepted,
        seed,
    })
}

/// Mean pairwise distance of committees with candidate frequencies `freq`
/// among `count` committees of size `k`: two committees share `c` in
/// `C(f_c, 2)` of the `C(count, 2)` pairs.
pub fn mean_pairwise_distance(freq: &[u64], count: u64, k: usize) -> Result<BigRational> {
    if count < 2 {
        return Err(Error::InvalidParameter("need at least two committees".into()));
    }
    let pairs = BigInt::from(count) * BigInt::from(count - 1) / 2;
    let shared: BigInt = freq.iter().map(|&f| BigInt::from(f) * BigInt::from(f.saturating_sub(1)) / 2).sum();
    Ok(BigRational::from_integer(BigInt::from(k)) - BigRational::new(shared, pairs))
}

/// Average pairwise distance among `num_accepted` sampled committees
/// satisfying `axiom`, divided by the expected distance of two uniformly
/// random committees. Flagged degenerate when that normaliser is zero.
pub fn estimate_avg_distance(
    e: &Election,
    axiom: Axiom,
    num_accepted: u64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<EstimatorResult> {
    if num_accepted < 2 {
        return Err(Error::InvalidParameter("need at least two accepted committees".into()));
    }
    let m = e.num_candidates();
    let k = e.committee_size();
    let (drawn, states) = rejection(e, axiom, num_accepted, seed, cfg, || vec![0u64; m], |f, w| {
        for c in w.iter() {
            f[c] += 1;
        }
    })?;
    let freq: Vec<u64> = (0..m).map(|c| states.iter().map(|f| f[c]).sum()).collect();
    let mean = mean_pairwise_distance(&freq, num_accepted, k)?;
    let norm = expected_random_distance(m, k)?;
    let (estimate, degenerate) = if *norm.numer() == 0 {
        (BigRational::from_integer(0.into()), true)
    } else {
        (mean * ratio(*norm.denom(), *norm.numer()), false)
    };
    Ok(EstimatorResult {
        estimate,
        epsilon: None,
        delta: None,
        samples_drawn: drawn,
        samples_accepted: num_accepted,
        seed,
        degenerate,
    })
}
