//! Parameter resolution (flags over config file over defaults) and the
//! JSON/CSV outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] swcluster_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// 2 for anything the caller got wrong, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use swcluster_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(E::Parameter(_) | E::Domain(_) | E::Capacity(_)) => 2,
            _ => 1,
        }
    }
}

/// Contents of a `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
    }
}

pub const DEFAULT_SEED: u64 = 1;

/// Interpret a flag value: integers (including integral floats such as
/// `1e4`), then floats, booleans and `null`, else a string.
pub fn parse_scalar(text: &str) -> Value {
    if let Ok(i) = text.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(f) = text.parse::<f64>() {
        if f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15 {
            return Value::from(f as i64);
        }
        return Value::from(f);
    }
    match text {
        "true" => Value::Bool(true),
        "false" => Value::Bool(false),
        "null" => Value::Null,
        _ => Value::String(text.to_string()),
    }
}

/// Split `--key value` pairs. Keys are returned in snake_case.
pub fn parse_pairs(args: &[String]) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(CliError::Usage(format!(
                "expected --KEY VALUE, found `{arg}`"
            )));
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage(format!("--{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        pairs.push((key.replace('-', "_"), value));
    }
    Ok(pairs)
}

/// Overlay `file` and then `flags` on the defaults of `P` and deserialize.
pub fn resolve<P>(file: &Map<String, Value>, flags: &Map<String, Value>) -> Result<P, CliError>
where
    P: Serialize + DeserializeOwned + Default,
{
    let defaults = serde_json::to_value(P::default())?;
    let mut merged = match defaults {
        Value::Object(m) => m,
        _ => unreachable!("parameter structs serialize to objects"),
    };
    for layer in [file, flags] {
        for (k, v) in layer {
            merged.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| {
        CliError::Usage(format!(
            "{e}\nvalid parameters with their defaults:\n{}",
            serde_json::to_string_pretty(&P::default()).unwrap_or_default()
        ))
    })
}

/// A CSV table produced by an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        self.rows
            .push(row.into_iter().map(|v| v.to_string()).collect());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Everything an experiment produces before it is serialised.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub params: Value,
    pub resolved_constants: BTreeMap<String, Value>,
    pub statistics: BTreeMap<String, Value>,
    pub confidence_intervals: BTreeMap<String, [f64; 2]>,
    /// Hard assertions; any `false` makes the run exit with status 1.
    pub gates: BTreeMap<String, bool>,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn stat(&mut self, key: &str, value: impl Into<Value>) {
        self.statistics.insert(key.to_string(), value.into());
    }

    pub fn constant(&mut self, key: &str, value: impl Into<Value>) {
        self.resolved_constants
            .insert(key.to_string(), value.into());
    }

    pub fn interval(&mut self, key: &str, bounds: (f64, f64)) {
        self.confidence_intervals
            .insert(key.to_string(), [bounds.0, bounds.1]);
    }

    pub fn passed(&self) -> bool {
        self.gates.values().all(|&g| g)
    }
}

/// The published JSON record of one run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub experiment: String,
    pub params: Value,
    pub seed: u64,
    pub resolved_constants: BTreeMap<String, Value>,
    pub statistics: BTreeMap<String, Value>,
    pub confidence_intervals: BTreeMap<String, [f64; 2]>,
    pub gates: BTreeMap<String, bool>,
}

impl Report {
    pub fn new(experiment: &str, seed: u64, outcome: &Outcome) -> Self {
        Report {
            experiment: experiment.to_string(),
            params: outcome.params.clone(),
            seed,
            resolved_constants: outcome.resolved_constants.clone(),
            statistics: outcome.statistics.clone(),
            confidence_intervals: outcome.confidence_intervals.clone(),
            gates: outcome.gates.clone(),
        }
    }
}

/// The JSON Schema every [`Report`] validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct P {
        n: usize,
        c: f64,
    }

    impl Default for P {
        fn default() -> Self {
            P { n: 10, c: 1.0 }
        }
    }

    fn map(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn scalars() {
        assert_eq!(parse_scalar("12"), Value::from(12));
        assert_eq!(parse_scalar("1e4"), Value::from(10000));
        assert_eq!(parse_scalar("0.5"), Value::from(0.5));
        assert_eq!(parse_scalar("path"), Value::from("path"));
        assert_eq!(parse_scalar("true"), Value::Bool(true));
    }

    #[test]
    fn precedence() {
        let file = map(serde_json::json!({"n": 20, "c": 2.0}));
        let flags = map(serde_json::json!({"n": 30}));
        let p: P = resolve(&file, &flags).unwrap();
        assert_eq!((p.n, p.c), (30, 2.0));
        let p: P = resolve(&Map::new(), &Map::new()).unwrap();
        assert_eq!((p.n, p.c), (10, 1.0));
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let flags = map(serde_json::json!({"bogus": 1}));
        let err = resolve::<P>(&Map::new(), &flags).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("\"n\": 10"));
    }

    #[test]
    fn pairs() {
        let args: Vec<String> = ["--n", "5", "--horizon-k=3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let p = parse_pairs(&args).unwrap();
        assert_eq!(
            p,
            vec![("n".into(), "5".into()), ("horizon_k".into(), "3".into())]
        );
        assert!(parse_pairs(&["--n".to_string()]).is_err());
        assert!(parse_pairs(&["n".to_string()]).is_err());
    }
}
