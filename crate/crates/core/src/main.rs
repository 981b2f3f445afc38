use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use equiblow::io::{
    parse_problem, run, verify, Mode, ProblemFile, RunOptions, ENGINE_NAME, ENGINE_VERSION,
};
use equiblow::principalize::DEFAULT_MAX_STEPS;
use equiblow::Error;

const MAX_STEPS_ENV: &str = "EQUIBLOW_MAX_STEPS";

#[derive(Parser)]
#[command(
    name = "equiblow",
    version,
    about = "Equivariant toric blowups for monomial ideals and maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simplify a group-invariant collection of monomial ideals.
    Simplify(SolveArgs),
    /// Resolve the indeterminacy of a monomial map to projective space.
    ResolveMap(SolveArgs),
    /// Run whatever mode the problem file declares.
    Run {
        #[command(flatten)]
        args: SolveArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Process every problem file in a directory.
        #[arg(long, value_name = "DIR", conflicts_with_all = ["problem", "dot", "verify_only"])]
        batch: Option<PathBuf>,
    },
    /// Audit a report against the problem it claims to answer.
    Verify { report: PathBuf, problem: PathBuf },
    /// Print engine and interface details.
    Info,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem file (JSON).
    problem: Option<PathBuf>,
    /// Write the report here instead of stdout. With --batch, a directory.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Write the blowup tower as Graphviz DOT.
    #[arg(long, value_name = "PATH")]
    dot: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    max_steps: Option<usize>,
    /// Audit this report instead of computing a new one.
    #[arg(long, value_name = "REPORT")]
    verify_only: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Simplify,
    ResolveMap,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simplify => Mode::Simplify,
            ModeArg::ResolveMap => Mode::ResolveMap,
        }
    }
}

/// A failure with its exit code, already formatted for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut message = format!("error: {e}");
        if let Error::TerminationGuard(trace) = &e {
            if let Ok(json) = serde_json::to_string_pretty(trace) {
                message.push('\n');
                message.push_str(&json);
            }
        }
        Failure {
            code: e.exit_code() as u8,
            message,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .map_err(|e| Failure::usage(format!("error: cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents)
        .map_err(|e| Failure::usage(format!("error: cannot write {}: {e}", path.display())))
}

fn env_max_steps() -> Result<Option<usize>, Failure> {
    match std::env::var(MAX_STEPS_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Failure::usage(format!(
                "error: {MAX_STEPS_ENV}={v} is not a non-negative integer"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn load_problem(path: &Path, mode: Option<Mode>) -> Result<ProblemFile, Failure> {
    let mut problem = parse_problem(&read(path)?)
        .map_err(|e| Failure::usage(format!("{}:\n{e}", path.display())))?;
    match (problem.mode, mode) {
        (Some(declared), Some(wanted)) if declared != wanted => {
            return Err(Failure::usage(format!(
                "error: {} declares mode {declared}, not {wanted}",
                path.display()
            )))
        }
        (None, Some(wanted)) => problem.mode = Some(wanted),
        _ => {}
    }
    Ok(problem)
}

/// Flag, then the problem's own value, then the environment, then the default.
fn options(args: &SolveArgs, problem: &ProblemFile) -> Result<RunOptions, Failure> {
    let max_steps = match args.max_steps.or(problem.max_steps) {
        Some(n) => n,
        None => env_max_steps()?.unwrap_or(DEFAULT_MAX_STEPS),
    };
    Ok(RunOptions {
        max_steps: Some(max_steps),
        timing: args.timing,
    })
}

fn audit(report: &Path, problem: &Path) -> Result<(), Failure> {
    let audit = verify(&read(report)?, &read(problem)?)?;
    if audit.ok() {
        println!("verified: {}", report.display());
        Ok(())
    } else {
        let mut message = format!("verification failed: {}", report.display());
        for w in &audit.witnesses {
            message.push_str("\n  ");
            message.push_str(w);
        }
        Err(Failure::usage(message))
    }
}

fn solve(args: &SolveArgs, mode: Option<Mode>) -> Result<(), Failure> {
    let path = args
        .problem
        .as_deref()
        .ok_or_else(|| Failure::usage("error: a problem file is required"))?;
    if let Some(report) = &args.verify_only {
        return audit(report, path);
    }
    let problem = load_problem(path, mode)?;
    let report = run(&problem, &options(args, &problem)?)?;
    if let Some(dot) = &args.dot {
        write(dot, &report.replay()?.to_dot())?;
    }
    let json = report.to_json();
    match &args.out {
        Some(out) => write(out, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn batch(dir: &Path, args: &SolveArgs, mode: Option<Mode>) -> Result<(), Failure> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Failure::usage(format!("error: cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "json")
                && !p
                    .file_name()
                    .is_some_and(|n| n.to_string_lossy().ends_with(".report.json"))
        })
        .collect();
    files.sort();
    let out_dir = args.out.clone().unwrap_or_else(|| dir.to_path_buf());
    fs::create_dir_all(&out_dir)
        .map_err(|e| Failure::usage(format!("error: cannot create {}: {e}", out_dir.display())))?;

    let results: Vec<Result<PathBuf, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = files
            .iter()
            .map(|file| {
                let out_dir = &out_dir;
                s.spawn(move || -> Result<PathBuf, Failure> {
                    let problem = load_problem(file, mode)?;
                    let report = run(&problem, &options(args, &problem)?)?;
                    let stem = file
                        .file_stem()
                        .expect("json files have stems")
                        .to_string_lossy();
                    let target = out_dir.join(format!("{stem}.report.json"));
                    write(&target, &report.to_json())?;
                    Ok(target)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("batch worker panicked"))
            .collect()
    });

    let mut worst = 0;
    let mut failed = 0;
    for (file, result) in files.iter().zip(results) {
        match result {
            Ok(target) => println!("ok {} -> {}", file.display(), target.display()),
            Err(f) => {
                println!("exit {} {}", f.code, file.display());
                eprintln!("{}: {}", file.display(), f.message);
                worst = worst.max(f.code);
                failed += 1;
            }
        }
    }
    match worst {
        0 => Ok(()),
        code => Err(Failure {
            code,
            message: format!("{failed} of {} problems failed", files.len()),
        }),
    }
}

fn info() {
    println!("{ENGINE_NAME} {ENGINE_VERSION}");
    println!("modes: simplify, resolve-map");
    println!(
        "default max steps: {DEFAULT_MAX_STEPS} (override with {MAX_STEPS_ENV} or --max-steps)"
    );
    println!("exit codes: 0 success, 1 input or verification failure, 2 step guard tripped, 3 group action not respected");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Simplify(args) => solve(args, Some(Mode::Simplify)),
        Command::ResolveMap(args) => solve(args, Some(Mode::ResolveMap)),
        Command::Run {
            args,
            mode,
            batch: dir,
        } => match dir {
            Some(dir) => batch(dir, args, mode.map(Mode::from)),
            None => solve(args, mode.map(Mode::from)),
        },
        Command::Verify { report, problem } => audit(report, problem),
        Command::Info => {
            info();
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
