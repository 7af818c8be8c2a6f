use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use tribody::harness::{self, CompareReport, HarnessError, Scenario};
use tribody::lambert_w::{self, Branch, LambertError};
use tribody::trajectory::Mode;

const EXIT_STRICT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "tribody", version, about = "Lambert-W closed forms for the planar three-body problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a real Lambert W branch and its residual.
    Lambertw {
        /// `principal` or `lower`
        branch: String,
        #[arg(allow_negative_numbers = true)]
        z: f64,
    },
    /// Closed-form or semi-analytic solution of a scenario.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Numerical integration (oracle or surrogate modes).
    Integrate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Run two modes and measure the first against the second.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Two comma-separated modes, e.g. `paper_closed_form,oracle_newton`.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        modes: Vec<String>,
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Check the initial-state validity conditions of a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Write the example scenario (to stdout without `--out`).
    Demo {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn input(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_NUMERIC, message: format!("{}: {e}", path.display()) }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(Scenario::from_json(&text)?)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io(&path, e))
}

fn run_and_write(path: &Path, out: &Path, strict: bool, closed_form: bool) -> Result<u8, Failure> {
    let sc = load(path)?;
    let mode = sc.solver.mode;
    if mode.is_closed_form() != closed_form {
        let hint = if closed_form { "integrate" } else { "solve" };
        return Err(input(format!("mode {mode} is not handled by this subcommand; use `{hint}`")));
    }
    let run = harness::run_scenario(&sc)?;
    write(out, "trajectory.csv", &harness::trajectory_csv(&run.trajectories))?;
    write(out, "report.json", &run.report_json(&sc))?;
    for f in &run.failures {
        eprintln!("body {}: {}", f.body, f.message);
    }
    Ok(run.exit_code(strict || sc.solver.strict) as u8)
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    s.trim().parse().map_err(input)
}

fn execute(cmd: Command) -> Result<u8, Failure> {
    match cmd {
        Command::Lambertw { branch, z } => {
            let branch: Branch = branch.parse().map_err(|e: LambertError| input(e.to_string()))?;
            let w = branch.eval(z).map_err(|e| Failure { code: EXIT_NUMERIC, message: e.to_string() })?;
            println!("w = {w:?}");
            println!("residual = {:?}", lambert_w::w_residual(w, z));
            Ok(0)
        }
        Command::Solve { scenario, out, strict } => run_and_write(&scenario, &out, strict, true),
        Command::Integrate { scenario, out, strict } => run_and_write(&scenario, &out, strict, false),
        Command::Compare { scenario, modes, threshold, out, strict } => {
            let [a, b] = modes.as_slice() else {
                return Err(input(format!("--modes needs exactly two modes, got {}", modes.len())));
            };
            let (a, b) = (parse_mode(a)?, parse_mode(b)?);
            let sc = load(&scenario)?;
            let (ra, rb, metrics) = harness::compare_modes(&sc, a, b, threshold)?;
            write(&out, &format!("{a}.csv"), &harness::trajectory_csv(&ra.trajectories))?;
            if b != a {
                write(&out, &format!("{b}.csv"), &harness::trajectory_csv(&rb.trajectories))?;
            }
            let report = CompareReport { modes: [a, b], metrics: &metrics, runs: [ra.report(&sc), rb.report(&sc)] };
            write(&out, "report.json", &harness::to_json(&report))?;
            let strict = strict || sc.solver.strict;
            Ok(ra.exit_code(strict).max(rb.exit_code(strict)) as u8)
        }
        Command::Validate { scenario, strict } => {
            let sc = load(&scenario)?;
            let (_, params, failures, report) = harness::validate_scenario(&sc)?;
            #[derive(serde::Serialize)]
            struct Out<'a> {
                validity: &'a tribody::validity::ValidityReport,
                params: &'a [Option<tribody::closed_form::SurrogateParams>; 3],
                failures: &'a [harness::BodyFailure],
            }
            print!("{}", harness::to_json(&Out { validity: &report, params: &params, failures: &failures }));
            let strict = strict || sc.solver.strict;
            Ok(if strict && !report.all_ok() { EXIT_STRICT } else { 0 })
        }
        Command::Demo { out } => {
            let text = Scenario::demo().to_json();
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| io(&path, e))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
