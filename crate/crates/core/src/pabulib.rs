//! Participatory-budgeting files in the pabulib `.pb` format.
//!
//! A file has three `;`-separated sections, each introduced by a line holding
//! only its name: `META` (`key;value` rows), `PROJECTS` and `VOTES` (a header
//! row, then data rows). Column sets vary between files, so every column is
//! kept as text; only `project_id`, `cost`, `voter_id` and `vote` are
//! interpreted.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::election::{Election, ElectionMeta};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Project {
    pub id: String,
    /// One value per project column, in file order.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vote {
    pub voter_id: String,
    /// Approved project ids, in file order.
    pub approvals: Vec<String>,
    /// One value per vote column, in file order.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PabulibFile {
    /// Meta rows in file order.
    pub meta: Vec<(String, String)>,
    pub project_columns: Vec<String>,
    pub projects: Vec<Project>,
    pub vote_columns: Vec<String>,
    pub votes: Vec<Vote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Meta,
    Projects,
    Votes,
}

impl Section {
    fn from_line(line: &str) -> Option<Self> {
        match line.trim().trim_end_matches(';').to_ascii_uppercase().as_str() {
            "META" => Some(Section::Meta),
            "PROJECTS" => Some(Section::Projects),
            "VOTES" => Some(Section::Votes),
            _ => None,
        }
    }
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Rows of one section; line numbers are 1-based within the whole file.
fn read_rows(body: &str, first_line: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(first_line, |p| first_line + p.line() as usize - 1);
            parse_error(line, e.to_string())
        })?;
        let line = record.position().map_or(first_line, |p| first_line + p.line() as usize - 1);
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        rows.push((line, fields));
    }
    Ok(rows)
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h.trim() == name)
}

fn split_approvals(raw: &str) -> Vec<String> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

pub fn parse_pabulib(text: &str) -> Result<PabulibFile> {
    let mut sections: Vec<(Section, usize, String)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if let Some(section) = Section::from_line(line) {
            if sections.iter().any(|(s, _, _)| *s == section) {
                return Err(parse_error(idx + 1, format!("repeated section {line}")));
            }
            sections.push((section, idx + 2, String::new()));
        } else if let Some((_, _, body)) = sections.last_mut() {
            body.push_str(line);
            body.push('\n');
        } else if !line.trim().is_empty() {
            return Err(parse_error(idx + 1, "content before the META section"));
        }
    }
    let order: Vec<Section> = sections.iter().map(|(s, _, _)| *s).collect();
    for (want, name) in [(Section::Meta, "META"), (Section::Projects, "PROJECTS"), (Section::Votes, "VOTES")] {
        if !order.contains(&want) {
            return Err(parse_error(text.lines().count().max(1), format!("missing {name} section")));
        }
    }
    if order != [Section::Meta, Section::Projects, Section::Votes] {
        return Err(parse_error(1, "sections must appear as META, PROJECTS, VOTES"));
    }
    let section = |i: usize| read_rows(&sections[i].2, sections[i].1);

    let mut meta = Vec::new();
    for (n, (line, row)) in section(0)?.into_iter().enumerate() {
        if n == 0 && row.len() == 2 && row[0] == "key" && row[1] == "value" {
            continue;
        }
        match <[String; 2]>::try_from(row) {
            Ok([k, v]) => meta.push((k, v)),
            Err(row) => return Err(parse_error(line, format!("meta row has {} fields, expected 2", row.len()))),
        }
    }

    let mut rows = section(1)?.into_iter();
    let (header_line, project_columns) = rows.next().ok_or_else(|| parse_error(sections[1].1, "PROJECTS has no header"))?;
    let id_col = column(&project_columns, "project_id")
        .ok_or_else(|| parse_error(header_line, "PROJECTS header lacks project_id"))?;
    let mut projects = Vec::new();
    let mut known: HashMap<String, usize> = HashMap::new();
    for (line, values) in rows {
        if values.len() != project_columns.len() {
            return Err(parse_error(line, format!("{} fields, header has {}", values.len(), project_columns.len())));
        }
        let id = values[id_col].trim().to_string();
        if known.insert(id.clone(), projects.len()).is_some() {
            return Err(parse_error(line, format!("duplicate project id {id}")));
        }
        projects.push(Project { id, values });
    }

    let mut rows = section(2)?.into_iter();
    let (header_line, vote_columns) = rows.next().ok_or_else(|| parse_error(sections[2].1, "VOTES has no header"))?;
    let vote_col = column(&vote_columns, "vote").ok_or_else(|| parse_error(header_line, "VOTES header lacks vote"))?;
    let voter_col = column(&vote_columns, "voter_id");
    let mut votes = Vec::new();
    for (line, values) in rows {
        if values.len() != vote_columns.len() {
            return Err(parse_error(line, format!("{} fields, header has {}", values.len(), vote_columns.len())));
        }
        let approvals = split_approvals(&values[vote_col]);
        if let Some(unknown) = approvals.iter().find(|p| !known.contains_key(*p)) {
            return Err(parse_error(line, format!("vote for unknown project {unknown}")));
        }
        let voter_id = voter_col.map_or_else(|| (votes.len() + 1).to_string(), |c| values[c].trim().to_string());
        votes.push(Vote { voter_id, approvals, values });
    }
    Ok(PabulibFile { meta, project_columns, projects, vote_columns, votes })
}

/// Writes the file back in `.pb` form. Project ids and approval lists come
/// from the structured fields, everything else from the stored values.
pub fn emit_pabulib(f: &PabulibFile) -> String {
    let mut out = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .delimiter(b';')
            .flexible(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        let mut write = |row: &[&str]| w.write_record(row).expect("writing to memory");
        write(&["META"]);
        write(&["key", "value"]);
        for (k, v) in &f.meta {
            write(&[k, v]);
        }
        write(&["PROJECTS"]);
        write(&f.project_columns.iter().map(String::as_str).collect::<Vec<_>>());
        let id_col = column(&f.project_columns, "project_id");
        for p in &f.projects {
            let mut row: Vec<&str> = p.values.iter().map(String::as_str).collect();
            if let Some(c) = id_col {
                row[c] = &p.id;
            }
            write(&row);
        }
        write(&["VOTES"]);
        write(&f.vote_columns.iter().map(String::as_str).collect::<Vec<_>>());
        let vote_col = column(&f.vote_columns, "vote");
        let voter_col = column(&f.vote_columns, "voter_id");
        for v in &f.votes {
            let joined = v.approvals.join(",");
            let mut row: Vec<&str> = v.values.iter().map(String::as_str).collect();
            if let Some(c) = vote_col {
                row[c] = &joined;
            }
            if let Some(c) = voter_col {
                row[c] = &v.voter_id;
            }
            write(&row);
        }
        w.flush().expect("writing to memory");
    }
    String::from_utf8(out).expect("input was UTF-8")
}

impl PabulibFile {
    /// An approval file for `e` with unit costs. Candidate and voter labels
    /// are used as ids when present, 1-based indices otherwise.
    pub fn from_election(e: &Election, description: &str) -> Self {
        let label = |labels: &[String], i: usize| labels.get(i).cloned().unwrap_or_else(|| (i + 1).to_string());
        let m = e.num_candidates();
        let mut meta = vec![
            ("description".to_string(), description.to_string()),
            ("num_projects".to_string(), m.to_string()),
            ("num_votes".to_string(), e.num_voters().to_string()),
            ("budget".to_string(), e.committee_size().to_string()),
            ("vote_type".to_string(), "approval".to_string()),
        ];
        for (k, v) in &e.meta.tags {
            if !meta.iter().any(|(key, _)| key == k) {
                meta.push((k.clone(), v.clone()));
            }
        }
        let ids: Vec<String> = (0..m).map(|c| label(&e.meta.candidate_labels, c)).collect();
        let projects = ids.iter().map(|id| Project { id: id.clone(), values: vec![id.clone(), "1".into()] }).collect();
        let votes = (0..e.num_voters())
            .map(|i| {
                let voter_id = label(&e.meta.voter_labels, i);
                let approvals: Vec<String> = e.ballot(i).iter().map(|&c| ids[c].clone()).collect();
                Vote { values: vec![voter_id.clone(), approvals.join(",")], voter_id, approvals }
            })
            .collect();
        PabulibFile {
            meta,
            project_columns: vec!["project_id".into(), "cost".into()],
            projects,
            vote_columns: vec!["voter_id".into(), "vote".into()],
            votes,
        }
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn vote_type(&self) -> Option<&str> {
        self.meta_value("vote_type").map(str::trim)
    }

    pub fn is_approval(&self) -> bool {
        self.vote_type() == Some("approval")
    }

    pub fn num_projects(&self) -> usize {
        self.projects.len()
    }

    /// Project cost, when the file has a parseable `cost` column.
    pub fn cost(&self, project: usize) -> Option<f64> {
        let c = column(&self.project_columns, "cost")?;
        self.projects[project].values[c].trim().parse().ok()
    }

    pub fn mean_ballot_size(&self) -> f64 {
        if self.votes.is_empty() {
            return 0.0;
        }
        self.votes.iter().map(|v| v.approvals.len()).sum::<usize>() as f64 / self.votes.len() as f64
    }

    pub fn to_election(&self, policy: KPolicy) -> Result<Election> {
        if !self.is_approval() {
            return Err(Error::UnsupportedVoteType(self.vote_type().unwrap_or("<missing>").to_string()));
        }
        let m = self.projects.len();
        let k = policy.committee_size(self)?;
        let index: HashMap<&str, usize> = self.projects.iter().enumerate().map(|(j, p)| (p.id.as_str(), j)).collect();
        let ballots: Vec<Vec<usize>> =
            self.votes.iter().map(|v| v.approvals.iter().map(|p| index[p.as_str()]).collect()).collect();
        let tags: BTreeMap<String, String> = self.meta.iter().cloned().collect();
        let meta = ElectionMeta {
            name: self.meta_value("description").or(self.meta_value("name")).map(str::to_string),
            candidate_labels: self.projects.iter().map(|p| p.id.clone()).collect(),
            voter_labels: self.votes.iter().map(|v| v.voter_id.clone()).collect(),
            tags,
        };
        Ok(Election::new(ballots, m, k)?.with_meta(meta))
    }
}

/// How to pick the committee size for a file with `m` projects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    /// `floor(m / 2)`.
    HalfM,
    /// `floor(m / c)`.
    MOver(usize),
    Explicit(usize),
    /// `floor(budget / mean project cost)`, clamped to `[1, m]`.
    BudgetAvgCost,
}

impl KPolicy {
    pub fn committee_size(self, f: &PabulibFile) -> Result<usize> {
        let m = f.num_projects();
        let k = match self {
            KPolicy::HalfM => m / 2,
            KPolicy::MOver(0) => return Err(Error::InvalidParameter("m_over(0)".into())),
            KPolicy::MOver(c) => m / c,
            KPolicy::Explicit(k) => k,
            KPolicy::BudgetAvgCost => {
                let budget: f64 = f
                    .meta_value("budget")
                    .and_then(|b| b.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidParameter("file has no numeric budget".into()))?;
                let costs: Option<Vec<f64>> = (0..m).map(|j| f.cost(j)).collect();
                let costs = costs.filter(|c| !c.is_empty()).ok_or_else(|| Error::InvalidParameter("file has no costs".into()))?;
                let mean = costs.iter().sum::<f64>() / costs.len() as f64;
                if mean <= 0.0 {
                    return Err(Error::InvalidParameter("mean project cost is not positive".into()));
                }
                ((budget / mean).floor() as usize).clamp(1, m.max(1))
            }
        };
        if k == 0 || k > m {
            return Err(Error::CommitteeSizeOutOfRange { k, num_candidates: m });
        }
        Ok(k)
    }
}

impl std::str::FromStr for KPolicy {
    type Err = Error;

    /// `half`, `over:<c>`, `explicit:<k>` (or just `<k>`), `budget-avg-cost`;
    /// underscores work in place of dashes, and `half_m` / `m_over:<c>` too.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown k policy `{s}`"));
        let s = s.trim().replace('_', "-");
        match s.as_str() {
            "half" | "half-m" => return Ok(KPolicy::HalfM),
            "budget-avg-cost" => return Ok(KPolicy::BudgetAvgCost),
            _ => {}
        }
        if let Some(c) = s.strip_prefix("over:").or(s.strip_prefix("m-over:")) {
            return c.parse().map(KPolicy::MOver).map_err(|_| bad());
        }
        s.strip_prefix("explicit:").unwrap_or(&s).parse().map(KPolicy::Explicit).map_err(|_| bad())
    }
}

impl fmt::Display for KPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KPolicy::HalfM => f.write_str("half"),
            KPolicy::MOver(c) => write!(f, "over:{c}"),
            KPolicy::Explicit(k) => write!(f, "explicit:{k}"),
            KPolicy::BudgetAvgCost => f.write_str("budget-avg-cost"),
        }
    }
}

/// Why a file was left out of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Exclusion {
    NotApproval(String),
    SmallBallots { mean: f64 },
    NoVotes,
}

impl fmt::Display for Exclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exclusion::NotApproval(t) => write!(f, "vote_type {t}"),
            Exclusion::SmallBallots { mean } => write!(f, "mean ballot size {mean:.3}"),
            Exclusion::NoVotes => f.write_str("no votes"),
        }
    }
}

pub const DEFAULT_MIN_AVG_BALLOT: f64 = 4.0;

/// `None` when the file is kept: approval votes with mean ballot size at
/// least `min_avg_ballot`.
pub fn exclusion_reason(f: &PabulibFile, min_avg_ballot: f64) -> Option<Exclusion> {
    if !f.is_approval() {
        return Some(Exclusion::NotApproval(f.vote_type().unwrap_or("<missing>").to_string()));
    }
    if f.votes.is_empty() {
        return Some(Exclusion::NoVotes);
    }
    let total: usize = f.votes.iter().map(|v| v.approvals.len()).sum();
    if (total as f64) < min_avg_ballot * f.votes.len() as f64 {
        return Some(Exclusion::SmallBallots { mean: f.mean_ballot_size() });
    }
    None
}

/// Splits named files into kept names and excluded names with reasons.
pub fn filter_dataset<'a>(
    files: impl IntoIterator<Item = (&'a str, &'a PabulibFile)>,
    min_avg_ballot: f64,
) -> (Vec<&'a str>, Vec<(&'a str, Exclusion)>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (name, f) in files {
        match exclusion_reason(f, min_avg_ballot) {
            None => kept.push(name),
            Some(reason) => excluded.push((name, reason)),
        }
    }
    (kept, excluded)
}
