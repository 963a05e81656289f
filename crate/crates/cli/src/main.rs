//! `hessfield`: runs the reduction pipelines on meshes and writes JSON/CSV reports.
//!
//! Exit codes: 0 all invariants passed, 2 invariant or certification failure,
//! 3 unmet precondition, 4 malformed input, 5 I/O failure. `report.json` is
//! written in every case where the output directory is usable.

mod input;
mod jobs;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "hessfield",
    version,
    about = "Continuous Hessenberg reduction of matrix fields over meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Builtin mesh: `grid:D:R` or `sphere:K:R`.
    #[arg(long)]
    pub domain: Option<String>,
    /// Builtin field: bott, zero, random-hermitian[:SEED], affine-hermitian[:SEED], shift.
    #[arg(long)]
    pub field: Option<String>,
    /// Matrix size for sized builtin fields.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Appends a zero block of this size.
    #[arg(long, default_value_t = 0)]
    pub pad: usize,
    /// Repeats the field as a block diagonal this many times.
    #[arg(long, default_value_t = 1)]
    pub copies: usize,
    /// JSON field document; replaces --domain and --field.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Constant tolerance `ε`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// JSON array of per-vertex tolerances.
    #[arg(long)]
    pub epsilon_file: Option<PathBuf>,
    /// Caps the worker count.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Multiplies every numerical acceptance tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Hessenberg reduction of a matrix field.
    Reduce {
        #[command(flatten)]
        common: Common,
        /// summary, default, dim3 or dim1.
        #[arg(long, default_value = "summary")]
        mode: String,
    },
    /// Eigenvalue separation of a self-adjoint field.
    Separate {
        #[command(flatten)]
        common: Common,
    },
    /// Spectral structure decomposition of the reduced field.
    Struc {
        #[command(flatten)]
        common: Common,
        /// rank1-positive, rank1-negative or rank2-traceless.
        #[arg(long, default_value = "rank2-traceless")]
        q_mode: String,
    },
    /// Conjugates a projection field into block form.
    ProjectReduce {
        #[command(flatten)]
        common: Common,
    },
    /// Extracts pointwise independent sections of a projection field.
    Sections {
        #[command(flatten)]
        common: Common,
    },
    /// Iterative reduction of a truncated operator field.
    OperatorReduce {
        #[command(flatten)]
        common: Common,
        /// Truncation size N; the field occupies the leading n x n block.
        #[arg(long, default_value_t = 32)]
        truncation: usize,
        /// Iteration count K.
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Re-checks a claims file against its input field.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        claims: PathBuf,
    },
}

pub enum JobError {
    Core(hessfield::Error),
    Io(String),
}

impl From<hessfield::Error> for JobError {
    fn from(e: hessfield::Error) -> Self {
        JobError::Core(e)
    }
}

impl JobError {
    fn exit_code(&self) -> u8 {
        match self {
            JobError::Io(_) => 5,
            JobError::Core(hessfield::Error::Malformed(_)) => 4,
            JobError::Core(e) if e.is_precondition() => 3,
            JobError::Core(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            JobError::Io(m) => m.clone(),
            JobError::Core(e) => e.to_string(),
        }
    }
}

/// Result of a job that ran to completion.
pub struct Outcome {
    pub summary: Value,
    pub violations: Vec<String>,
    /// Extra files as (name, contents).
    pub files: Vec<(String, String)>,
}

/// Pretty JSON with sorted keys and a trailing newline, so parse and reserialize is the identity.
pub fn canonical_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

fn parameters(name: &str, c: &Common, extra: Value) -> Value {
    let mut p = json!({
        "command": name,
        "domain": c.domain,
        "field": c.field,
        "n": c.n,
        "pad": c.pad,
        "copies": c.copies,
        "input": c.input.as_ref().map(|p| p.display().to_string()),
        "seed": c.seed,
        "epsilon": c.epsilon,
        "epsilon_file": c.epsilon_file.as_ref().map(|p| p.display().to_string()),
        "tolerance_scale": c.tolerance_scale,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut p, extra) {
        m.extend(e);
    }
    p
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    let (name, common, extra) = match &cli.command {
        Command::Reduce { common, mode } => ("reduce", common, json!({ "mode": mode })),
        Command::Separate { common } => ("separate", common, json!({})),
        Command::Struc { common, q_mode } => ("struc", common, json!({ "q_mode": q_mode })),
        Command::ProjectReduce { common } => ("project-reduce", common, json!({})),
        Command::Sections { common } => ("sections", common, json!({})),
        Command::OperatorReduce {
            common,
            truncation,
            steps,
        } => (
            "operator-reduce",
            common,
            json!({ "truncation": truncation, "steps": steps }),
        ),
        Command::Verify { common, claims } => (
            "verify",
            common,
            json!({ "claims": claims.display().to_string() }),
        ),
    };
    if let Some(t) = common.threads {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .is_err()
        {
            eprintln!("warning: could not configure the thread pool");
        }
    }
    if let Err(e) = std::fs::create_dir_all(&common.output) {
        eprintln!("error: cannot create {}: {e}", common.output.display());
        return ExitCode::from(5);
    }
    let result = match &cli.command {
        Command::Reduce { common, mode } => jobs::reduce(common, mode),
        Command::Separate { common } => jobs::separate(common),
        Command::Struc { common, q_mode } => jobs::struc(common, q_mode),
        Command::ProjectReduce { common } => jobs::project_reduce(common),
        Command::Sections { common } => jobs::sections(common),
        Command::OperatorReduce {
            common,
            truncation,
            steps,
        } => jobs::operator_reduce(common, *truncation, *steps),
        Command::Verify { common, claims } => jobs::verify(common, claims),
    };
    let (status, code, summary, violations, error, files) = match result {
        Ok(o) => {
            let pass = o.violations.is_empty();
            (
                if pass { "pass" } else { "fail" },
                if pass { 0 } else { 2 },
                o.summary,
                o.violations,
                None,
                o.files,
            )
        }
        Err(e) => (
            "error",
            e.exit_code(),
            Value::Null,
            Vec::new(),
            Some(e.message()),
            Vec::new(),
        ),
    };
    let mut file_names: Vec<String> = vec!["report.json".into()];
    for (fname, contents) in &files {
        if let Err(e) = std::fs::write(common.output.join(fname), contents) {
            eprintln!("error: cannot write {fname}: {e}");
            return ExitCode::from(5);
        }
        file_names.push(fname.clone());
    }
    let report = json!({
        "command": name,
        "status": status,
        "exit_code": code,
        "parameters": parameters(name, common, extra),
        "summary": summary,
        "violations": violations,
        "error": error,
        "files": file_names,
    });
    if let Err(e) = std::fs::write(common.output.join("report.json"), canonical_json(&report)) {
        eprintln!("error: cannot write report.json: {e}");
        return ExitCode::from(5);
    }
    match (&error, violations.len()) {
        (Some(m), _) => eprintln!("{name}: {status}: {m}"),
        (None, 0) => println!("{name}: {status}"),
        (None, k) => eprintln!("{name}: {status} ({k} violations)"),
    }
    ExitCode::from(code)
}
