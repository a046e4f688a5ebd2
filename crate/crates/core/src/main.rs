use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use selfield::report::{self, CheckTolerances, SolveOverrides, SpectrumMethod, SpectrumOptions};
use selfield::{AnsatzKind, SolutionRecord, SolverError, StepControl};

#[derive(Parser)]
#[command(name = "selfield", version, about = "Regular solutions of the self-consistent hydrogen model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one state and write its record as JSON.
    Solve(SolveArgs),
    /// Tabulate binding energies over a range of node counts as CSV.
    Spectrum(SpectrumArgs),
    /// Resample a record's profiles on a uniform grid as CSV.
    Profiles(ProfilesArgs),
    /// Report identity, charge and moment residuals of records.
    Check(CheckArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Flat key=value file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Freeze the potential (self-field off).
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    tol_charge: Option<f64>,
    /// Use fixed-step RK4 with this step instead of adaptive RK45.
    #[arg(long)]
    fixed_step: Option<f64>,
}

#[derive(Args)]
struct SolveArgs {
    /// A, B, or A-/B- for the conjugate sign.
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    nodes: Option<u32>,
    #[arg(long)]
    delta_guess: Option<f64>,
    /// Initial bracket `lo,hi` for the origin amplitude.
    #[arg(long)]
    beta_bracket: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long)]
    nodes_from: Option<u32>,
    #[arg(long)]
    nodes_to: Option<u32>,
    /// shooting, variational or both.
    #[arg(long)]
    method: Option<String>,
    /// Worker threads (default: all cores, or SELFIELD_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ProfilesArgs {
    /// Record written by `solve`.
    #[arg(long)]
    record: PathBuf,
    #[arg(long, default_value_t = 2000)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Record files.
    #[arg(required = true)]
    records: Vec<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    identity_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    charge_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    moment_tol: f64,
}

/// Failure classes and their exit codes.
enum Failure {
    Usage(String),
    Check,
    Solver(SolverError),
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        Failure::Solver(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Check => 1,
            Failure::Solver(e) if e.is_bracket_error() => 2,
            Failure::Solver(_) => 3,
        }
    }
}

struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                report::parse_config(&text).map_err(|e| Failure::Usage(e.to_string()))?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config value for '{key}' is invalid: {v}"))),
            None => Ok(None),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T, Failure> {
        self.get(flag, key)?
            .ok_or_else(|| Failure::Usage(format!("missing --{key}")))
    }

    fn overrides(&self, common: &Common) -> Result<SolveOverrides, Failure> {
        let linear = common.linear || self.get::<bool>(None, "linear")?.unwrap_or(false);
        let step = self
            .get(common.fixed_step, "fixed-step")?
            .map(|h| StepControl::Rk4Fixed { h });
        Ok(SolveOverrides {
            self_field: !linear,
            r_max: self.get(common.r_max, "r-max")?,
            tol_charge: self.get(common.tol_charge, "tol-charge")?,
            delta_guess: None,
            beta_bracket: None,
            step,
        })
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_ansatz(s: &str) -> Result<AnsatzKind, Failure> {
    s.parse()
        .map_err(|e: SolverError| Failure::Usage(e.to_string()))
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let cfg = Settings::load(args.common.config.as_deref())?;
    let ansatz = parse_ansatz(&cfg.require(args.ansatz, "ansatz")?)?;
    let nodes: u32 = cfg.require(args.nodes, "nodes")?;
    let mut overrides = cfg.overrides(&args.common)?;
    overrides.delta_guess = cfg.get(args.delta_guess, "delta-guess")?;
    overrides.beta_bracket = match cfg.get(args.beta_bracket, "beta-bracket")? {
        Some(s) => Some(report::parse_pair(&s).map_err(|e| Failure::Usage(e.to_string()))?),
        None => None,
    };
    let out: Option<PathBuf> = cfg.get(args.out, "out")?;
    let record = selfield::solve(&overrides.problem(ansatz, nodes))?;
    write_output(out.as_deref(), &(record.to_json() + "\n"))
}

fn run_spectrum(args: SpectrumArgs) -> Result<(), Failure> {
    let cfg = Settings::load(args.common.config.as_deref())?;
    let ansatz = parse_ansatz(&cfg.require(args.ansatz, "ansatz")?)?;
    let method = match cfg.get(args.method, "method")? {
        Some(m) => SpectrumMethod::from_str(&m).map_err(|e| Failure::Usage(e.to_string()))?,
        None => SpectrumMethod::Both,
    };
    let opts = SpectrumOptions {
        ansatz,
        nodes_from: cfg.require(args.nodes_from, "nodes-from")?,
        nodes_to: cfg.require(args.nodes_to, "nodes-to")?,
        method,
        overrides: cfg.overrides(&args.common)?,
        threads: cfg.get(args.threads, "threads")?,
    };
    let out: Option<PathBuf> = cfg.get(args.out, "out")?;
    let rows = report::spectrum(&opts)?;
    for row in &rows {
        for e in &row.errors {
            eprintln!("n = {}: {e}", row.n);
        }
    }
    write_output(out.as_deref(), &report::spectrum_csv(&rows))
}

fn read_record(path: &Path) -> Result<SolutionRecord, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    SolutionRecord::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn run_profiles(args: ProfilesArgs) -> Result<(), Failure> {
    let record = read_record(&args.record)?;
    let csv = report::profiles_csv(&record, args.points)?;
    write_output(args.out.as_deref(), &csv)
}

fn run_check(args: CheckArgs) -> Result<(), Failure> {
    let records = args
        .records
        .iter()
        .map(|p| read_record(p))
        .collect::<Result<Vec<_>, _>>()?;
    let tol = CheckTolerances {
        identity: args.identity_tol,
        charge: args.charge_tol,
        moment: args.moment_tol,
    };
    let rep = report::check_records(&records, &tol);
    print!("{}", rep.render());
    if rep.passed() {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Spectrum(a) => run_spectrum(a),
        Command::Profiles(a) => run_profiles(a),
        Command::Check(a) => run_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Solver(e) => eprintln!("error: {e}"),
                Failure::Check => eprintln!("check failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
