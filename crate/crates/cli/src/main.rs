mod config;
mod exec;
mod experiments;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgMatches, Command};
use serde_json::{Map, Value};

use config::{
    parse_pairs, parse_scalar, CliError, ConfigFile, Report, DEFAULT_SEED, REPORT_SCHEMA,
};
use exec::Pool;
use experiments::EXPERIMENTS;

const ABOUT: &str =
    "Swendsen-Wang magnetization chains, random graph exploration and coupling experiments";

fn params_arg() -> Arg {
    Arg::new("params")
        .help("Experiment parameters as --key value (or --key=value)")
        .num_args(0..)
        .trailing_var_arg(true)
        .allow_hyphen_values(true)
        .value_name("--KEY VALUE")
}

fn command() -> Command {
    let mut cmd = Command::new("swcluster")
        .about(ABOUT)
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("seed")
                .long("seed")
                .global(true)
                .value_parser(value_parser!(u64))
                .help("Master seed; trial i uses stream i"),
        )
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_parser(value_parser!(usize))
                .help("Worker threads (0 = one per core); results do not depend on it"),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .global(true)
                .value_parser(value_parser!(PathBuf))
                .help("Directory for the JSON report and CSV tables"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_parser(value_parser!(PathBuf))
                .help("JSON config file; flags override it"),
        );
    for name in EXPERIMENTS {
        cmd = cmd.subcommand(
            Command::new(name)
                .about(format!("Run the {name} experiment"))
                .arg(params_arg()),
        );
    }
    cmd.subcommand(
        Command::new("sweep")
            .about("Run one experiment over a grid: exactly one parameter takes a comma list (a,b,...,z expands)")
            .arg(Arg::new("experiment").required(true))
            .arg(params_arg()),
    )
    .subcommand(Command::new("schema").about("Print the JSON Schema of the report"))
}

/// Global options after merging flags, config file and defaults.
struct Globals {
    seed: u64,
    threads: usize,
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let matches = match command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&matches) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Returns whether every gate passed.
fn dispatch(m: &ArgMatches) -> Result<bool, CliError> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    if name == "schema" {
        println!("{REPORT_SCHEMA}");
        return Ok(true);
    }
    let raw: Vec<String> = sub
        .get_many::<String>("params")
        .map(|v| v.cloned().collect())
        .unwrap_or_default();
    let mut pairs = parse_pairs(&raw)?;

    // Global options may also appear after the subcommand.
    let mut take = |key: &str| -> Option<String> {
        let i = pairs.iter().rposition(|(k, _)| k == key)?;
        let v = pairs.remove(i).1;
        pairs.retain(|(k, _)| k != key);
        Some(v)
    };
    let seed_flag = match take("seed") {
        Some(s) => Some(
            s.parse::<u64>()
                .map_err(|_| CliError::Usage(format!("--seed `{s}` is not an unsigned integer")))?,
        ),
        None => m.get_one::<u64>("seed").copied(),
    };
    let threads_flag =
        match take("threads") {
            Some(s) => Some(s.parse::<usize>().map_err(|_| {
                CliError::Usage(format!("--threads `{s}` is not an unsigned integer"))
            })?),
            None => m.get_one::<usize>("threads").copied(),
        };
    let out_flag = take("out")
        .map(PathBuf::from)
        .or_else(|| m.get_one::<PathBuf>("out").cloned());
    let config_path = take("config")
        .map(PathBuf::from)
        .or_else(|| m.get_one::<PathBuf>("config").cloned());

    let file = match &config_path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let globals = Globals {
        seed: seed_flag.or(file.seed).unwrap_or(DEFAULT_SEED),
        threads: threads_flag.or(file.threads).unwrap_or(0),
        out: out_flag.or(file.out.clone()),
    };
    let experiment = if name == "sweep" {
        sub.get_one::<String>("experiment")
            .expect("required")
            .clone()
    } else {
        name.to_string()
    };
    if let Some(e) = &file.experiment {
        if *e != experiment {
            return Err(CliError::Usage(format!(
                "config file is for `{e}` but `{experiment}` was requested"
            )));
        }
    }
    let pool = Pool::new(globals.threads)?;

    if name == "sweep" {
        let table = sweep::run(&experiment, &file.params, &pairs, globals.seed, &pool)?;
        let csv = table.0.to_csv_string()?;
        match &globals.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(format!("sweep_{experiment}.csv")), &csv)?;
            }
            None => print!("{csv}"),
        }
        return Ok(table.1);
    }

    let flags: Map<String, Value> = pairs
        .into_iter()
        .map(|(k, v)| (k, parse_scalar(&v)))
        .collect();
    let outcome = experiments::run(&experiment, &file.params, &flags, globals.seed, &pool)?;
    let report = Report::new(&experiment, globals.seed, &outcome);
    let json = serde_json::to_string_pretty(&report)?;
    if let Some(dir) = &globals.out {
        write_outputs(dir, &experiment, &json, &outcome.tables)?;
    }
    println!("{json}");
    Ok(outcome.passed())
}

fn write_outputs(
    dir: &Path,
    experiment: &str,
    json: &str,
    tables: &[config::Table],
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{experiment}.json")), format!("{json}\n"))?;
    for t in tables {
        t.write(&dir.join(format!("{experiment}_{}.csv", t.name)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn every_experiment_has_a_subcommand() {
        let cmd = command();
        for name in EXPERIMENTS {
            assert!(cmd.find_subcommand(name).is_some(), "{name}");
        }
    }
}
