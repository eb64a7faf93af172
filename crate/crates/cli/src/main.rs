use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lensspec::job::JobError;
use lensspec::verify::Suite;
use lensspec::{parse_job, run_job};
use serde_json::{json, Map, Value};

const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;

/// Maslov index, spectral selectors and norms for unitary contact isotopies
/// of lens spaces.
#[derive(Parser)]
#[command(name = "lensspec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Relative nullity tolerance for form indices.
    #[arg(long, global = true)]
    tol_null: Option<f64>,
    /// Embeddedness sweep points per unit time.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Left end of the 2π window for the Maslov step function.
    #[arg(long, global = true, allow_hyphen_values = true)]
    window_base: Option<f64>,
    /// Print an aligned summary table to stderr.
    #[arg(long, global = true)]
    table: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job file as written.
    Run(Input),
    /// Non-linear Maslov index of the job path.
    Maslov(Input),
    /// Spectral selectors c_j for j in [j_lo, j_hi].
    Selectors {
        #[command(flatten)]
        input: Input,
        #[arg(long, allow_hyphen_values = true)]
        j_lo: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        j_hi: Option<i64>,
    },
    /// Action spectra on the sphere and on the lens space.
    Spectrum(Input),
    /// Spectral pseudonorm, norm, descended norm and length bounds.
    Norms(Input),
    /// Geodesic report for the Reeb flow up to time T.
    Geodesic {
        #[command(flatten)]
        input: Input,
        /// Reeb time; overrides the job file.
        #[arg(short = 'T', long = "time")]
        time: Option<f64>,
    },
    /// Seeded property suite; the job file is optional.
    Verify {
        #[arg(long)]
        suite: Option<Suite>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Job file supplying tolerances; omit to use the defaults.
        input: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Job file; `-` or nothing reads stdin.
    input: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(e)) => {
            eprintln!("input error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

enum Failure {
    Input(String),
    Run(String),
}

impl From<JobError> for Failure {
    fn from(e: JobError) -> Self {
        Failure::Input(e.to_string())
    }
}

fn execute(cli: Cli) -> Result<u8, Failure> {
    let (mut doc, task) = match &cli.command {
        Command::Run(i) => (read_doc(i.input.as_ref())?, None),
        Command::Maslov(i) => (read_doc(i.input.as_ref())?, Some(("maslov", Map::new()))),
        Command::Spectrum(i) => (read_doc(i.input.as_ref())?, Some(("spectrum", Map::new()))),
        Command::Norms(i) => (read_doc(i.input.as_ref())?, Some(("norms", Map::new()))),
        Command::Selectors { input, j_lo, j_hi } => {
            let mut m = Map::new();
            insert(&mut m, "j_lo", j_lo.map(Value::from));
            insert(&mut m, "j_hi", j_hi.map(Value::from));
            (read_doc(input.input.as_ref())?, Some(("selectors", m)))
        }
        Command::Geodesic { input, time } => {
            let mut m = Map::new();
            insert(&mut m, "T", time.map(Value::from));
            (read_doc(input.input.as_ref())?, Some(("geodesic", m)))
        }
        Command::Verify {
            suite,
            trials,
            seed,
            input,
        } => {
            let doc = match input {
                Some(p) => read_doc(Some(p))?,
                None => json!({}),
            };
            let mut m = Map::new();
            insert(&mut m, "suite", suite.map(|s| Value::from(s.name())));
            insert(&mut m, "trials", trials.map(Value::from));
            insert(&mut m, "seed", seed.map(Value::from));
            (doc, Some(("verify", m)))
        }
    };
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| Failure::Input("$: job must be a JSON object".into()))?;
    if let Some((name, overrides)) = task {
        merge_task(obj, name, overrides)?;
    }
    let c = &cli.common;
    let mut tol = Map::new();
    insert(&mut tol, "null", c.tol_null.map(Value::from));
    insert(&mut tol, "grid", c.grid.map(Value::from));
    insert(&mut tol, "window_base", c.window_base.map(Value::from));
    if !tol.is_empty() {
        let entry = obj.entry("tolerances").or_insert_with(|| json!({}));
        let t = entry
            .as_object_mut()
            .ok_or_else(|| Failure::Input("tolerances: expected an object".into()))?;
        t.extend(tol);
    }

    let bytes = serde_json::to_vec(&doc).expect("JSON values serialize");
    let job = parse_job(&bytes)?;
    let report = run_job(&job).map_err(|e| Failure::Run(e.to_string()))?;
    println!("{}", report.to_json());
    if c.table {
        eprint!("{}", report.table());
    }
    for f in &report.failures {
        eprintln!("FAIL {f}");
    }
    Ok(if report.passed { 0 } else { EXIT_FAILURE })
}

fn insert(m: &mut Map<String, Value>, key: &str, v: Option<Value>) {
    if let Some(v) = v {
        m.insert(key.into(), v);
    }
}

/// Fills in the task for a subcommand. A job file naming a different task
/// is rejected; flags override matching fields.
fn merge_task(obj: &mut Map<String, Value>, name: &str, overrides: Map<String, Value>) -> Result<(), Failure> {
    let task = obj.entry("task").or_insert_with(|| json!({ name: {} }));
    let t = task
        .as_object_mut()
        .ok_or_else(|| Failure::Input("task: expected an object".into()))?;
    if let Some(other) = t.keys().find(|k| *k != name) {
        return Err(Failure::Input(format!(
            "task: job file asks for '{other}' but the subcommand is '{name}'"
        )));
    }
    let body = t.entry(name).or_insert_with(|| json!({}));
    body.as_object_mut()
        .ok_or_else(|| Failure::Input(format!("task.{name}: expected an object")))?
        .extend(overrides);
    Ok(())
}

fn read_doc(path: Option<&PathBuf>) -> Result<Value, Failure> {
    let bytes = match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::read(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?
        }
        _ => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
            buf
        }
    };
    serde_json::from_slice(&bytes).map_err(|e| Failure::Input(format!("$: {e}")))
}
