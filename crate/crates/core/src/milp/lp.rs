//! CPLEX LP text format: writer and a small reader for the subset the
//! writer emits. See `docs/lp-format.md` for the grammar.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::model::{Comparator, MilpModel, Sense, VarId, VarKind};

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, model: &MilpModel, terms: &[(VarId, i64)]) {
    for (idx, &(v, c)) in terms.iter().enumerate() {
        if idx > 0 && idx % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", c.unsigned_abs(), model.variables[v].name);
    }
}

/// Serialises `model`. Feasibility models get an empty minimisation
/// objective.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    match model.sense {
        Sense::Maximize => out.push_str("Maximize\n obj:"),
        Sense::Feasibility => out.push_str("Minimize\n obj:"),
    }
    write_terms(&mut out, model, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        if c.terms.is_empty() {
            // keeps the row syntactically valid
            let _ = write!(out, " + 0 {}", model.variables[0].name);
        }
        write_terms(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.cmp, c.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.kind == VarKind::Integer || (v.lower, v.upper) != (0, 1) {
            let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
        }
    }
    for (header, kind) in [("General", VarKind::Integer), ("Binary", VarKind::Binary)] {
        let names: Vec<&str> =
            model.variables.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{header}");
        for chunk in names.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    General,
    Binary,
    End,
}

fn section_of(line: &str) -> Option<(Section, Option<Sense>)> {
    match line.to_ascii_lowercase().as_str() {
        "maximize" | "maximise" | "max" => Some((Section::Objective, Some(Sense::Maximize))),
        "minimize" | "minimise" | "min" => Some((Section::Objective, Some(Sense::Feasibility))),
        "subject to" | "such that" | "st" | "s.t." => Some((Section::Constraints, None)),
        "bounds" => Some((Section::Bounds, None)),
        "general" | "generals" | "gen" => Some((Section::General, None)),
        "binary" | "binaries" | "bin" => Some((Section::Binary, None)),
        "end" => Some((Section::End, None)),
        _ => None,
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parses `[+|-] [coef] name ...` into (name, coefficient) pairs.
fn parse_terms(tokens: &[&str], line: usize) -> Result<Vec<(String, i64)>> {
    let mut terms = Vec::new();
    let mut sign = 1i64;
    let mut coef: Option<i64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1,
            "-" => sign = -1,
            _ => {
                if let Ok(c) = tok.parse::<i64>() {
                    if coef.replace(c).is_some() {
                        return Err(parse_err(line, format!("two coefficients in a row at `{tok}`")));
                    }
                } else {
                    terms.push((tok.to_string(), sign * coef.take().unwrap_or(1)));
                    sign = 1;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(parse_err(line, "dangling coefficient"));
    }
    Ok(terms)
}

fn tokenize(s: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(s.len() + 8);
    let mut chars = s.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '+' | '-' => {
                spaced.push(' ');
                spaced.push(ch);
                spaced.push(' ');
            }
            '<' | '>' | '=' => {
                spaced.push(' ');
                spaced.push(ch);
                if let Some(&next) = chars.peek() {
                    if matches!(next, '=' | '<' | '>') {
                        spaced.push(next);
                        chars.next();
                    }
                }
                spaced.push(' ');
            }
            _ => spaced.push(ch),
        }
    }
    // re-attach signs to numbers that follow a comparator or start a bound
    let raw: Vec<&str> = spaced.split_whitespace().collect();
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        let prev_is_op = out.last().is_none_or(|p| comparator(p).is_some());
        if (raw[i] == "-" || raw[i] == "+") && prev_is_op && i + 1 < raw.len() && raw[i + 1].parse::<i64>().is_ok() {
            out.push(format!("{}{}", raw[i], raw[i + 1]));
            i += 2;
        } else {
            out.push(raw[i].to_string());
            i += 1;
        }
    }
    out
}

fn comparator(tok: &str) -> Option<Comparator> {
    match tok {
        "<=" | "=<" | "<" => Some(Comparator::Le),
        ">=" | "=>" | ">" => Some(Comparator::Ge),
        "=" => Some(Comparator::Eq),
        _ => None,
    }
}

type NamedRow = (String, Vec<(String, i64)>, Comparator, i64);

/// Reads an LP file in the subset produced by [`write_lp`]. Variables are
/// numbered by first appearance; undeclared variables are continuous in
/// real LP files but are read as integers here.
pub fn parse_lp(text: &str) -> Result<MilpModel> {
    let mut section: Option<Section> = None;
    let mut model = MilpModel::new("");
    let mut index: HashMap<String, VarId> = HashMap::new();
    let mut declared_binary: HashSet<String> = HashSet::new();
    let mut bounds: HashMap<String, (i64, i64)> = HashMap::new();
    let mut objective: Vec<(String, i64)> = Vec::new();
    let mut rows: Vec<NamedRow> = Vec::new();
    let mut pending = String::new();
    let mut pending_line = 0;
    let mut sense_line = 0;
    let mut var = |name: &str, model: &mut MilpModel| -> VarId {
        *index.entry(name.to_string()).or_insert_with(|| model.add_var(name, VarKind::Integer, 0, i64::MAX))
    };

    let mut flush = |pending: &mut String, line: usize, section: Option<Section>| -> Result<()> {
        let text = std::mem::take(pending);
        if text.trim().is_empty() {
            return Ok(());
        }
        let (name, body) = match text.split_once(':') {
            Some((name, body)) => (name.trim().to_string(), body),
            None => (String::new(), text.as_str()),
        };
        let tokens = tokenize(body);
        let tokens: Vec<&str> = tokens.iter().map(String::as_str).collect();
        match section {
            Some(Section::Objective) => objective = parse_terms(&tokens, line)?,
            Some(Section::Constraints) => {
                let pos = tokens
                    .iter()
                    .position(|t| comparator(t).is_some())
                    .ok_or_else(|| parse_err(line, "constraint without comparator"))?;
                let cmp = comparator(tokens[pos]).expect("checked");
                let rhs = tokens
                    .get(pos + 1..)
                    .filter(|rest| rest.len() == 1)
                    .and_then(|rest| rest[0].parse::<i64>().ok())
                    .ok_or_else(|| parse_err(line, "right-hand side must be one integer"))?;
                rows.push((name, parse_terms(&tokens[..pos], line)?, cmp, rhs));
            }
            _ => return Err(parse_err(line, "statement outside a section")),
        }
        Ok(())
    };

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((next, sense)) = section_of(line) {
            flush(&mut pending, pending_line, section)?;
            if let Some(sense) = sense {
                model.sense = sense;
                sense_line = lineno;
            }
            section = Some(next);
            continue;
        }
        match section {
            Some(Section::Objective) | Some(Section::Constraints) => {
                // a new statement starts with `name:`; anything else continues
                let starts_new = line.contains(':') || section == Some(Section::Objective) && pending.is_empty();
                if starts_new && !pending.is_empty() {
                    flush(&mut pending, pending_line, section)?;
                }
                if pending.is_empty() {
                    pending_line = lineno;
                }
                pending.push(' ');
                pending.push_str(line);
            }
            Some(Section::Bounds) => {
                let tokens = tokenize(line);
                match tokens.as_slice() {
                    [lo, le1, name, le2, hi] if comparator(le1) == Some(Comparator::Le) && comparator(le2) == Some(Comparator::Le) => {
                        let lo = lo.parse().map_err(|_| parse_err(lineno, "bad lower bound"))?;
                        let hi = hi.parse().map_err(|_| parse_err(lineno, "bad upper bound"))?;
                        bounds.insert(name.clone(), (lo, hi));
                    }
                    _ => return Err(parse_err(lineno, format!("unsupported bound `{line}`"))),
                }
            }
            Some(Section::General) => {
                for name in line.split_whitespace() {
                    var(name, &mut model);
                }
            }
            Some(Section::Binary) => {
                for name in line.split_whitespace() {
                    var(name, &mut model);
                    declared_binary.insert(name.to_string());
                }
            }
            Some(Section::End) => return Err(parse_err(lineno, "content after End")),
            None => return Err(parse_err(lineno, "content before the objective section")),
        }
    }
    flush(&mut pending, pending_line, section)?;
    if section != Some(Section::End) {
        return Err(parse_err(text.lines().count(), "missing End"));
    }
    if model.sense != Sense::Maximize && !objective.is_empty() {
        return Err(parse_err(sense_line, "only feasibility and maximization models are supported"));
    }

    // create variables in order of first appearance, then fix kinds/bounds
    let mut ordered = MilpModel::new(text.lines().next().and_then(|l| l.strip_prefix('\\')).unwrap_or("").trim());
    ordered.sense = model.sense;
    let mut ids: HashMap<String, VarId> = HashMap::new();
    let mut names_in_order: Vec<String> = Vec::new();
    for (name, _) in objective.iter().chain(rows.iter().flat_map(|r| r.1.iter())) {
        if !ids.contains_key(name) {
            ids.insert(name.clone(), usize::MAX);
            names_in_order.push(name.clone());
        }
    }
    for v in &model.variables {
        if !ids.contains_key(&v.name) {
            ids.insert(v.name.clone(), usize::MAX);
            names_in_order.push(v.name.clone());
        }
    }
    for name in names_in_order {
        let (kind, (lo, hi)) = if declared_binary.contains(&name) {
            (VarKind::Binary, bounds.get(&name).copied().unwrap_or((0, 1)))
        } else {
            (VarKind::Integer, bounds.get(&name).copied().unwrap_or((0, i64::MAX)))
        };
        let id = ordered.add_var(name.clone(), kind, lo, hi);
        ids.insert(name, id);
    }
    let to_ids = |terms: &[(String, i64)]| -> Vec<(VarId, i64)> { terms.iter().map(|(n, c)| (ids[n], *c)).collect() };
    for (name, terms, cmp, rhs) in &rows {
        ordered.add_constraint(name.clone(), to_ids(terms), *cmp, *rhs);
    }
    if model.sense == Sense::Maximize {
        ordered.maximize(to_ids(&objective));
    }
    Ok(ordered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> MilpModel {
        let mut m = MilpModel::new("toy");
        let x = m.binary("x");
        let z = m.integer("z", 0, 4);
        m.add_constraint("c0", [(x, 1), (z, -3)], Comparator::Le, -1);
        m.add_constraint("c1", [(z, 2)], Comparator::Eq, 4);
        m.maximize([(z, 1), (x, 2)]);
        m
    }

    #[test]
    fn writes_expected_text() {
        let text = write_lp(&toy());
        assert_eq!(
            text,
            "\\ toy\nMaximize\n obj: + 1 z + 2 x\nSubject To\n c0: + 1 x - 3 z <= -1\n c1: + 2 z = 4\nBounds\n 0 <= z <= 4\nGeneral\n z\nBinary\n x\nEnd\n"
                .replace(" obj: + 1 z + 2 x", " obj: + 2 x + 1 z")
        );
    }

    #[test]
    fn reads_what_it_writes() {
        let m = toy();
        let back = parse_lp(&write_lp(&m)).unwrap();
        assert_eq!(back.name, "toy");
        assert_eq!(back.sense, Sense::Maximize);
        assert_eq!(canonical(&back), canonical(&m));
    }

    #[test]
    fn reports_errors_with_lines() {
        assert!(matches!(parse_lp("Minimize\n obj:\nSubject To\n c: x 3\nEnd\n"), Err(Error::Parse { line: 4, .. })));
        assert!(parse_lp("Minimize\n obj:\nSubject To\n c: x >= 1\n").is_err());
        assert!(parse_lp(" c: x >= 1\nEnd\n").is_err());
        assert!(matches!(parse_lp("Minimize\n obj: + 1 x\nSubject To\nEnd\n"), Err(Error::Parse { line: 1, .. })));
    }

    type Canon = (Vec<(String, VarKind, i64, i64)>, Vec<(String, Vec<(String, i64)>, Comparator, i64)>, Vec<(String, i64)>);

    fn canonical(m: &MilpModel) -> Canon {
        let name = |v: VarId| m.variables[v].name.clone();
        let mut vars: Vec<_> = m.variables.iter().map(|v| (v.name.clone(), v.kind, v.lower, v.upper)).collect();
        vars.sort_by(|a, b| a.0.cmp(&b.0));
        let sorted = |terms: &[(VarId, i64)]| {
            let mut t: Vec<(String, i64)> = terms.iter().map(|&(v, c)| (name(v), c)).collect();
            t.sort();
            t
        };
        let rows = m.constraints.iter().map(|c| (c.name.clone(), sorted(&c.terms), c.cmp, c.rhs)).collect();
        (vars, rows, sorted(&m.objective))
    }

    fn arb_model() -> impl Strategy<Value = MilpModel> {
        (1usize..12, proptest::bool::ANY).prop_flat_map(|(nv, maximize)| {
            let kinds = proptest::collection::vec((proptest::bool::ANY, -5i64..5, 0i64..6), nv);
            let rows = proptest::collection::vec(
                (proptest::collection::vec((0..nv, -20i64..20), 0..15), 0usize..3, -50i64..50),
                0..10,
            );
            let obj = proptest::collection::vec((0..nv, -9i64..9), 0..6);
            (kinds, rows, obj, Just(maximize)).prop_map(|(kinds, rows, obj, maximize)| {
                let mut m = MilpModel::new("random");
                for (j, (binary, lo, span)) in kinds.into_iter().enumerate() {
                    if binary {
                        m.binary(format!("b{j}"));
                    } else {
                        m.integer(format!("i_{j}"), lo, lo + span);
                    }
                }
                for (r, (terms, cmp, rhs)) in rows.into_iter().enumerate() {
                    let cmp = [Comparator::Le, Comparator::Ge, Comparator::Eq][cmp];
                    m.add_constraint(format!("r{r}"), terms, cmp, rhs);
                }
                if maximize {
                    m.maximize(obj);
                }
                m
            })
        })
    }

    proptest! {
        #[test]
        fn lp_round_trip(m in arb_model()) {
            let back = parse_lp(&write_lp(&m)).unwrap();
            let (vars, mut rows, obj) = canonical(&m);
            let (bvars, brows, bobj) = canonical(&back);
            // rows written with no terms come back with a zero placeholder
            rows.iter_mut().for_each(|r| r.1.retain(|&(_, c)| c != 0));
            prop_assert_eq!(vars, bvars);
            prop_assert_eq!(rows, brows);
            prop_assert_eq!(obj, bobj);
            prop_assert_eq!(back.sense, m.sense);
        }
    }
}
