//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain failure (no feasible candidate, empty
//! cluster), 2 usage or scenario error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::output::{self, Dump};
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::{self, cycle_cluster, Mode, SimError, Switches};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Thread cap for the candidate pool; `0` or unset means one per core.
pub const THREADS_ENV: &str = "PLANNER_THREADS";

#[derive(Debug, Parser)]
#[command(name = "frenet-planner", version, about = "Frenet trajectory planner with endpoint regulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DumpArg {
    Endpoints,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Proposed,
    Baseline,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Proposed => Mode::Proposed,
            ModeArg::Baseline => Mode::Baseline,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file and list every problem found.
    Validate { scenario: PathBuf },
    /// Run the closed-loop simulation and write the metric tables.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "proposed")]
        mode: ModeArg,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the cluster at the initial state and dump it.
    Cluster {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        dump: DumpArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// `baseline` skips spacing repair.
        #[arg(long, value_enum, default_value = "proposed")]
        mode: ModeArg,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario, out, err),
        Command::Run {
            scenario,
            mode,
            seed,
            out: dir,
        } => cmd_run(&scenario, mode.into(), seed, &dir, out, err),
        Command::Cluster {
            scenario,
            dump,
            out: dir,
            mode,
        } => {
            let dump = match dump {
                DumpArg::Endpoints => Dump::Endpoints,
                DumpArg::Full => Dump::Full,
            };
            cmd_cluster(&scenario, dump, mode.into(), &dir, out, err)
        }
    }
}

/// Entry point of the binary: sizes the thread pool, then runs.
pub fn main_from_env() -> i32 {
    let mut err = std::io::stderr();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.trim().parse::<usize>() {
            Ok(n) => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    let _ = writeln!(err, "error: {THREADS_ENV}: {e}");
                    return EXIT_USAGE;
                }
            }
            Err(_) => {
                let _ = writeln!(err, "error: {THREADS_ENV} must be a non-negative integer, got {v:?}");
                return EXIT_USAGE;
            }
        }
    }
    run_cli(std::env::args_os(), &mut std::io::stdout(), &mut err)
}

fn report_scenario_error(path: &Path, e: &ScenarioError, err: &mut dyn Write) {
    match e {
        ScenarioError::Invalid(violations) => {
            let _ = writeln!(err, "{}: {} problem(s)", path.display(), violations.len());
            for v in violations {
                let _ = writeln!(err, "  {}: {}", v.field, v.message);
            }
        }
        ScenarioError::Io { source, .. } => {
            let _ = writeln!(err, "{}: {source}", path.display());
        }
        ScenarioError::Parse(e) => {
            let _ = writeln!(err, "{}: parse error: {e}", path.display());
        }
    }
}

fn load(path: &Path, err: &mut dyn Write) -> Result<(Scenario, Vec<u8>), i32> {
    Scenario::load(path).map_err(|e| {
        report_scenario_error(path, &e, err);
        EXIT_USAGE
    })
}

fn cmd_validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load(path, err) {
        Ok((s, _)) => {
            let _ = writeln!(out, "{}: ok ({})", path.display(), s.name);
            EXIT_OK
        }
        Err(code) => code,
    }
}

fn cmd_run(
    path: &Path,
    mode: Mode,
    seed: Option<u64>,
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (mut scenario, bytes) = match load(path, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(seed) = seed {
        scenario = scenario.with_seed(seed);
    }
    let start = Instant::now();
    match sim::run(&scenario, mode) {
        Ok(log) => {
            let elapsed = start.elapsed().as_secs_f64();
            match output::write_run(dir, &log, path, &bytes, mode, elapsed) {
                Ok(m) => {
                    let _ = writeln!(
                        out,
                        "{} {mode} seed {}: {} cycles, wrote {} files to {}",
                        scenario.name,
                        m.seed,
                        log.cycles.len(),
                        m.files.len() + 1,
                        dir.display()
                    );
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(SimError::Scenario(e)) => {
            report_scenario_error(path, &e, err);
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let Some(log) = e.partial_log() {
                match output::write_partial(dir, log) {
                    Ok(()) => {
                        let _ = writeln!(err, "partial log written to {}", dir.join(output::SIMLOG).display());
                    }
                    Err(w) => {
                        let _ = writeln!(err, "error: {w}");
                    }
                }
            }
            EXIT_DOMAIN
        }
    }
}

fn cmd_cluster(
    path: &Path,
    dump: Dump,
    mode: Mode,
    dir: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (scenario, _) = match load(path, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let geometry = match scenario.reference_path() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "{}: path: {e}", path.display());
            return EXIT_USAGE;
        }
    };
    let cluster = match cycle_cluster(&scenario, &geometry, &scenario.initial, 0, Switches::for_mode(mode)) {
        Ok(c) if !c.is_empty() => c,
        Ok(_) => {
            let _ = writeln!(err, "error: empty cluster");
            return EXIT_DOMAIN;
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_DOMAIN;
        }
    };
    match output::write_cluster(dir, &cluster, dump) {
        Ok(files) => {
            let _ = writeln!(
                out,
                "{} candidates{}, wrote {} to {}",
                cluster.len(),
                if cluster.budget_exhausted { " (insert budget exhausted)" } else { "" },
                files.join(", "),
                dir.display()
            );
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
