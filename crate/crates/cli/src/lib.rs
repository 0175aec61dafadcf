//! Command-line front end: runs a registered experiment and writes its CSV
//! tables, gnuplot scripts and a manifest into the output directory.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::experiments::{Experiment, ExperimentRegistry, Outcome, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_KEY: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

pub fn command(registry: &ExperimentRegistry) -> Command {
    let mut cmd = Command::new("mdiqkd")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Key rates of CV-MDI-QKD with photon-subtracted two-mode squeezed resources")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("TOML config file")
                .global(true)
                .value_parser(value_parser!(PathBuf)),
        )
        .arg(
            Arg::new("out")
                .long("out")
                .value_name("DIR")
                .help("Output directory")
                .global(true)
                .default_value("results")
                .value_parser(value_parser!(PathBuf)),
        )
        .arg(
            Arg::new("set")
                .long("set")
                .value_name("KEY=VALUE")
                .help("Override one config key (repeatable)")
                .global(true)
                .action(ArgAction::Append),
        )
        .arg(
            Arg::new("jobs")
                .long("jobs")
                .value_name("N")
                .help("Worker threads (default: all cores)")
                .global(true)
                .value_parser(value_parser!(u64).range(1..)),
        );
    for e in registry.iter() {
        cmd = cmd.subcommand(Command::new(e.name()).about(e.about()));
    }
    cmd
}

/// Resolved invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub experiment: String,
    pub config_file: Option<PathBuf>,
    pub out: PathBuf,
    pub overrides: Vec<String>,
    pub jobs: Option<usize>,
}

impl Invocation {
    fn from_matches(m: &ArgMatches) -> Self {
        let (name, sub) = m.subcommand().expect("subcommand is required");
        Self {
            experiment: name.to_string(),
            config_file: sub.get_one::<PathBuf>("config").cloned(),
            out: sub.get_one::<PathBuf>("out").cloned().expect("has default"),
            overrides: sub
                .get_many::<String>("set")
                .map(|v| v.cloned().collect())
                .unwrap_or_default(),
            jobs: sub.get_one::<u64>("jobs").map(|&n| n as usize),
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'static str,
    config: &'a RunConfig,
    config_file: Option<String>,
    overrides: &'a [String],
    jobs: usize,
    started_unix_s: u64,
    wall_clock_s: f64,
    outcome: &'a str,
    outputs: &'a [String],
}

/// Runs one invocation and writes its outputs. Returns the exit code.
pub fn execute(registry: &ExperimentRegistry, inv: &Invocation) -> Result<i32, CliError> {
    let exp: &dyn Experiment = registry
        .get(&inv.experiment)
        .ok_or_else(|| CliError::Config(format!("unknown experiment '{}'", inv.experiment)))?;
    let cfg = config::resolve(exp.defaults(), inv.config_file.as_deref(), &inv.overrides)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = inv.jobs {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| {
        CliError::Config(format!(
            "cannot start {} worker threads: {e}",
            inv.jobs.unwrap_or(0)
        ))
    })?;

    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let report = pool.install(|| exp.run(&cfg))?;
    let wall_clock_s = clock.elapsed().as_secs_f64();

    let (code, outcome) = match &report.outcome {
        Outcome::Ok => (EXIT_OK, "ok".to_string()),
        Outcome::NoKey(m) => (EXIT_NO_KEY, format!("no key: {m}")),
        Outcome::ValidationFailed(m) => (EXIT_VALIDATION, format!("validation failed: {m}")),
    };
    let outputs = write_outputs(&inv.out, &report)?;
    let manifest = Manifest {
        experiment: exp.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        config_file: inv.config_file.as_ref().map(|p| p.display().to_string()),
        overrides: &inv.overrides,
        jobs: pool.current_num_threads(),
        started_unix_s: started,
        wall_clock_s,
        outcome: &outcome,
        outputs: &outputs,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
    for a in &report.artifacts {
        std::fs::write(
            inv.out.join(format!("{}.manifest.json", a.stem)),
            format!("{json}\n"),
        )?;
    }

    print!("{}", report.summary);
    if code != EXIT_OK {
        eprintln!("{outcome}");
    }
    println!("outputs in {}", inv.out.display());
    Ok(code)
}

fn write_outputs(dir: &Path, report: &Report) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for a in &report.artifacts {
        let csv_name = format!("{}.csv", a.stem);
        std::fs::write(dir.join(&csv_name), &a.csv)?;
        let header: Vec<String> = csv::Reader::from_reader(a.csv.as_slice())
            .headers()?
            .iter()
            .map(str::to_string)
            .collect();
        written.push(csv_name.clone());
        for p in &a.plots {
            let gp_name = format!("{}.gp", p.name);
            std::fs::write(dir.join(&gp_name), p.render(&csv_name, &header)?)?;
            written.push(gp_name);
        }
    }
    Ok(written)
}

/// Parses `args` and runs. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let registry = ExperimentRegistry::default();
    let matches = match command(&registry).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let inv = Invocation::from_matches(&matches);
    match execute(&registry, &inv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
