//! Grids over one parameter of an experiment.

use std::collections::BTreeSet;

use serde_json::{Map, Value};
use swcluster_core::exec::Executor;

use crate::config::{parse_scalar, CliError, Table};
use crate::experiments;

/// Expand `a,b,c` or `a,b,...,z`. The ellipsis continues geometrically when
/// `a` and `b` are integers and `b / a` is an integer of at least 2,
/// otherwise arithmetically, up to and including `z`.
pub fn expand(list: &str) -> Result<Vec<String>, CliError> {
    let items: Vec<&str> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let Some(pos) = items.iter().position(|&s| s == "...") else {
        if items.is_empty() {
            return Err(CliError::Usage(format!("empty sweep list `{list}`")));
        }
        return Ok(items.into_iter().map(String::from).collect());
    };
    if pos != 2 || items.len() != 4 {
        return Err(CliError::Usage(format!(
            "an ellipsis sweep must read a,b,...,z; got `{list}`"
        )));
    }
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("`{s}` in sweep `{list}` is not a number")))
    };
    let (a, b, z) = (num(items[0])?, num(items[1])?, num(items[3])?);
    let integral = [a, b, z].iter().all(|v| v.fract() == 0.0);
    let fmt = |v: f64| {
        if integral {
            format!("{}", v.round() as i64)
        } else {
            format!("{v}")
        }
    };
    let ratio = b / a;
    let geometric = integral && a > 0.0 && ratio >= 2.0 && ratio.fract() == 0.0;
    let step = b - a;
    if !geometric && (step == 0.0 || (z - a) / step < 0.0) {
        return Err(CliError::Usage(format!("sweep `{list}` never reaches {z}")));
    }
    let tol = 1e-9 * z.abs().max(1.0);
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let v = if geometric {
            a * ratio.powi(k as i32)
        } else {
            a + step * k as f64
        };
        let past = if geometric || step > 0.0 {
            v > z + tol
        } else {
            v < z - tol
        };
        if past {
            break;
        }
        out.push(fmt(v));
        k += 1;
        if out.len() > 10_000 {
            return Err(CliError::Usage(format!(
                "sweep `{list}` expands to more than 10000 points"
            )));
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!("sweep `{list}` is empty")));
    }
    Ok(out)
}

fn cell(v: &Value) -> Option<String> {
    match v {
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => Some(String::new()),
        _ => None,
    }
}

/// Run `experiment` once per grid point. Returns the table and whether every
/// run passed its gates.
pub fn run<E: Executor>(
    experiment: &str,
    file: &Map<String, Value>,
    pairs: &[(String, String)],
    seed: u64,
    exec: &E,
) -> Result<(Table, bool), CliError> {
    let axes: Vec<&(String, String)> = pairs.iter().filter(|(_, v)| v.contains(',')).collect();
    let (axis, list) = match axes.as_slice() {
        [one] => (one.0.clone(), one.1.clone()),
        [] => {
            return Err(CliError::Usage(
                "sweep needs one parameter given as a comma list".into(),
            ))
        }
        _ => {
            let names: Vec<&str> = axes.iter().map(|(k, _)| k.as_str()).collect();
            return Err(CliError::Usage(format!(
                "sweep takes exactly one comma-list parameter; got {}",
                names.join(", ")
            )));
        }
    };
    let values = expand(&list)?;
    let mut base: Map<String, Value> = pairs
        .iter()
        .filter(|(k, _)| *k != axis)
        .map(|(k, v)| (k.clone(), parse_scalar(v)))
        .collect();

    let mut rows = Vec::new();
    let mut columns = BTreeSet::new();
    let mut all_passed = true;
    for v in &values {
        base.insert(axis.clone(), parse_scalar(v));
        let o = experiments::run(experiment, file, &base, seed, exec)?;
        let mut row = Map::new();
        for (k, val) in &o.statistics {
            if let Some(c) = cell(val) {
                row.insert(k.clone(), Value::String(c));
            }
        }
        for (k, val) in &o.resolved_constants {
            if let Some(c) = cell(val) {
                row.insert(format!("constant_{k}"), Value::String(c));
            }
        }
        row.insert("gates_passed".into(), Value::String(o.passed().to_string()));
        all_passed &= o.passed();
        columns.extend(row.keys().cloned());
        rows.push((v.clone(), row));
    }
    let mut header = vec![axis.as_str()];
    header.extend(columns.iter().map(String::as_str));
    let mut table = Table::new("sweep", &header);
    for (v, row) in rows {
        let mut r = vec![v];
        r.extend(
            columns
                .iter()
                .map(|c| row.get(c).and_then(Value::as_str).unwrap_or("").to_string()),
        );
        table.push(r);
    }
    Ok((table, all_passed))
}
