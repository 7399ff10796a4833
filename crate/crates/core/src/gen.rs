//! Synthetic election generators: the resampling model and the Euclidean
//! voter/candidate-range model.

use rand::seq::index;
use rand::Rng;

use crate::election::{Election, ElectionMeta};
use crate::error::{Error, Result};
use crate::sample::stream_rng;

fn unit_interval(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {x} not in [0, 1]")))
    }
}

fn meta(name: String, tags: &[(&str, String)]) -> ElectionMeta {
    ElectionMeta {
        name: Some(name),
        tags: tags.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        ..ElectionMeta::default()
    }
}

/// `floor(p * m)`, immune to products like `0.29 * 100` landing just below
/// an integer.
fn central_size(p: f64, m: usize) -> usize {
    let x = p * m as f64;
    let nearest = x.round();
    let x = if (x - nearest).abs() <= 1e-9 * x.max(1.0) { nearest } else { x.floor() };
    (x as usize).min(m)
}

/// Resampling model: a central ballot of `floor(p * m)` uniformly chosen
/// candidates; every voter keeps each candidate's central membership with
/// probability `1 - phi` and otherwise approves it with probability `p`.
pub fn gen_resampling(n: usize, m: usize, k: usize, p: f64, phi: f64, seed: u64) -> Result<Election> {
    unit_interval("p", p)?;
    unit_interval("phi", phi)?;
    let mut rng = stream_rng(seed, 0);
    let mut central = vec![false; m];
    for c in index::sample(&mut rng, m, central_size(p, m)) {
        central[c] = true;
    }
    let ballots: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            (0..m)
                .filter(|&c| if rng.random_bool(phi) { rng.random_bool(p) } else { central[c] })
                .collect()
        })
        .collect();
    let e = Election::new(ballots, m, k)?;
    Ok(e.with_meta(meta(
        format!("resampling_p{p}_phi{phi}_s{seed}"),
        &[("model", "resampling".into()), ("p", p.to_string()), ("phi", phi.to_string()), ("seed", seed.to_string())],
    )))
}

/// Euclidean model: voters and candidates uniform in `[0, 1]^dim`; a voter
/// approves every candidate within distance `radius`.
pub fn gen_euclidean(n: usize, m: usize, k: usize, radius: f64, dim: usize, seed: u64) -> Result<Election> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius {radius} must be finite and non-negative")));
    }
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidParameter(format!("dimension {dim} not in {{1, 2}}")));
    }
    let mut rng = stream_rng(seed, 0);
    let mut points = |count: usize| -> Vec<Vec<f64>> {
        (0..count).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect()
    };
    let voters = points(n);
    let candidates = points(m);
    let r2 = radius * radius;
    let ballots: Vec<Vec<usize>> = voters
        .iter()
        .map(|v| {
            (0..m)
                .filter(|&c| v.iter().zip(&candidates[c]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
                .collect()
        })
        .collect();
    let e = Election::new(ballots, m, k)?;
    Ok(e.with_meta(meta(
        format!("euclidean_r{radius}_d{dim}_s{seed}"),
        &[("model", "euclidean".into()), ("radius", radius.to_string()), ("dim", dim.to_string()), ("seed", seed.to_string())],
    )))
}
