//! Loading pabulib files and directories.

use std::path::{Path, PathBuf};

use axiomscope::pabulib::{exclusion_reason, parse_pabulib, KPolicy, PabulibFile};
use axiomscope::{CandidateId, CandidateSet, Election};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// An election with the name reports use for it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub election: Election,
}

/// An input that could not be turned into an election.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub instance: String,
    pub reason: String,
}

/// `path` itself, or the `.pb` files directly inside it, sorted.
pub fn input_paths(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(path)?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "pb"));
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no .pb files in {}", path.display())));
    }
    Ok(paths)
}

pub fn instance_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn read_file(path: &Path) -> Result<PabulibFile> {
    let text = std::fs::read_to_string(path)?;
    parse_pabulib(&text).map_err(|source| CliError::File { path: path.display().to_string(), source })
}

/// Parses every input file in parallel; order follows [`input_paths`].
pub fn load_files(path: &Path) -> Result<Vec<(String, PabulibFile)>> {
    input_paths(path)?
        .par_iter()
        .map(|p| Ok((instance_name(p), read_file(p)?)))
        .collect()
}

/// Elections for every input; files that are unreadable as elections under
/// `policy`, or fail the ballot-size filter when `min_avg_ballot` is given,
/// are reported instead.
pub fn load_instances(path: &Path, policy: KPolicy, min_avg_ballot: Option<f64>) -> Result<(Vec<Instance>, Vec<Skipped>)> {
    Ok(to_instances(&load_files(path)?, policy, min_avg_ballot))
}

pub fn to_instances(files: &[(String, PabulibFile)], policy: KPolicy, min_avg_ballot: Option<f64>) -> (Vec<Instance>, Vec<Skipped>) {
    let mut instances = Vec::new();
    let mut skipped = Vec::new();
    for (name, file) in files {
        let skip = |reason: String| Skipped { instance: name.clone(), reason };
        if let Some(reason) = min_avg_ballot.and_then(|min| exclusion_reason(file, min)) {
            skipped.push(skip(reason.to_string()));
            continue;
        }
        match file.to_election(policy) {
            Ok(election) => instances.push(Instance { name: name.clone(), election }),
            Err(err) => skipped.push(skip(err.to_string())),
        }
    }
    (instances, skipped)
}

/// Exactly one election from a single file.
pub fn load_one(path: &Path, policy: KPolicy) -> Result<Instance> {
    if path.is_dir() {
        return Err(CliError::Usage(format!("{} is a directory; this command takes one file", path.display())));
    }
    let file = read_file(path)?;
    let election = file.to_election(policy).map_err(|source| CliError::File { path: path.display().to_string(), source })?;
    Ok(Instance { name: instance_name(path), election })
}

/// Display label of candidate `c`: its project id when known.
pub fn label(e: &Election, c: CandidateId) -> String {
    e.meta.candidate_labels.get(c).cloned().unwrap_or_else(|| (c + 1).to_string())
}

pub fn voter_label(e: &Election, i: usize) -> String {
    e.meta.voter_labels.get(i).cloned().unwrap_or_else(|| (i + 1).to_string())
}

pub fn labels(e: &Election, set: &CandidateSet) -> Vec<String> {
    set.iter().map(|c| label(e, c)).collect()
}

/// Resolves a comma-separated list of project ids.
pub fn parse_candidates(e: &Election, list: &str) -> Result<CandidateSet> {
    let mut ids = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c = e
            .candidates()
            .find(|&c| label(e, c) == item)
            .ok_or_else(|| CliError::Usage(format!("unknown candidate `{item}`")))?;
        ids.push(c);
    }
    Ok(CandidateSet::new(ids))
}
