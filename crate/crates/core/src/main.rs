use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use toeplitz_forge::condition::{check_leq_star, find_star_witness, Condition};
use toeplitz_forge::creature::{factorial, snap_weights, Creature};
use toeplitz_forge::extension::pos_count;
use toeplitz_forge::fusion::{check_approximation, fuse_deciding, NameOracle, TrunkReader, Universe};
use toeplitz_forge::matrix::ToeplitzMatrix;
use toeplitz_forge::scalar::{format_rational, rat};
use toeplitz_forge::sequence::{SequenceFamily, SequenceSource};
use toeplitz_forge::synthesis::amalgamate::amalgamate;
use toeplitz_forge::synthesis::err::{err, ErrMode, ErrValue};
use toeplitz_forge::synthesis::schedule::SynthesisSchedule;
use toeplitz_forge::synthesis::synthesize_matrix;
use toeplitz_forge::verify::{
    borel_cantelli_report, check_convergence, check_convexity, check_regular, mc_measure_bound, serialize_reports,
    hoeffding_half_width, Outcome, VerificationReport, ENUM_MAX_BITS,
};
use toeplitz_forge::{Error, Rational};

const THREADS_VAR: &str = "TOEPLITZ_FORGE_THREADS";

#[derive(Parser)]
#[command(name = "toeplitz-forge", version, about = "Synthesize and verify regular summation matrices")]
struct Cli {
    /// Progress notes on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a matrix making every member of a family convergent.
    Synthesize {
        #[arg(long)]
        family: PathBuf,
        #[arg(long, default_value_t = 0)]
        k_star: u32,
        #[arg(long)]
        k_max: u32,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        #[arg(long, default_value_t = 8192)]
        budget: usize,
        #[arg(long, default_value_t = 2000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run checks on a matrix and write a report.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        family: Option<PathBuf>,
        /// All checks when omitted.
        #[arg(long, value_enum)]
        check: Option<Check>,
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// `err_{k,i}` of one matrix row for every `i ≤ 2^k`.
    Estimate {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        source: String,
        #[arg(long)]
        row: usize,
        #[arg(long, default_value_t = 3)]
        k: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Amalgamate a `≤*`-increasing chain of conditions.
    Amalgamate {
        /// Conditions one after another, each starting with `condition`.
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, default_value_t = 64)]
        max_mistake: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fuse a condition so that it approximates the given names.
    Fuse {
        #[arg(long)]
        condition: PathBuf,
        /// `index:mdn|mup|count:arg`, repeatable.
        #[arg(long = "name", required = true)]
        names: Vec<TrunkReader>,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 2)]
        den: u64,
        #[arg(long, default_value_t = 200)]
        bound: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// `|pos(w, S)|` for the rows of a condition past its trunk.
    PosCount {
        #[arg(long)]
        condition: PathBuf,
        #[arg(long, default_value_t = 2)]
        den: u64,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Regular,
    Convergence,
    Measure,
    BorelCantelli,
    Convexity,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Exhausted(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Exhausted(_) | Error::EmptySearch(_) => Failure::Exhausted(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Run = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::Usage(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn all_pass(reports: &[VerificationReport]) -> bool {
    reports.iter().all(|r| r.outcome != Outcome::Fail)
}

fn load_family(path: &Path) -> Result<SequenceFamily, Failure> {
    Ok(SequenceFamily::parse(&read(path)?)?)
}

fn load_matrix(path: &Path) -> Result<ToeplitzMatrix, Failure> {
    Ok(ToeplitzMatrix::parse(&read(path)?)?)
}

fn load_condition(path: &Path) -> Result<Condition, Failure> {
    Ok(Condition::parse(&read(path)?)?)
}

fn err_mode(source: &SequenceSource, samples: u64, seed: u64, c: &Creature) -> ErrMode {
    if !source.is_random() {
        return ErrMode::Exact;
    }
    match source.dependency_window_of(c.support().into_iter().map(|j| j as u64)) {
        Ok(w) if w.len() <= ENUM_MAX_BITS => ErrMode::Enumerate { max_bits: ENUM_MAX_BITS },
        _ => ErrMode::Estimate { samples, seed },
    }
}

fn run_verify(
    matrix: &ToeplitzMatrix,
    family: Option<&SequenceFamily>,
    check: Option<Check>,
    rows: usize,
    k: u32,
    samples: u64,
    seed: u64,
) -> Result<Vec<VerificationReport>, Failure> {
    let wants = |c: Check| check.is_none_or(|x| x == c);
    let rows = rows.min(matrix.len());
    let mut out = Vec::new();
    if wants(Check::Regular) {
        out.push(check_regular(matrix, rows)?);
    }
    let sources: &[SequenceSource] = match family {
        Some(f) => &f.sources,
        None if check.is_some_and(|c| c != Check::Regular) => {
            return Err(Failure::Usage("--family is required for this check".into()));
        }
        None => &[],
    };
    for source in sources {
        if wants(Check::Convergence) {
            out.push(check_convergence(matrix, source, Some(seed))?);
        }
        if wants(Check::Convexity) {
            for l in 0..rows.saturating_sub(1) {
                let parts = [matrix.rows()[l].clone(), matrix.rows()[l + 1].clone()];
                let weights = match snap_weights(&[rat(1, 2), rat(1, 2)], &parts) {
                    Ok(w) => w,
                    Err(Error::NoAdmissibleWeights) => continue,
                    Err(e) => return Err(e.into()),
                };
                let c = &parts[1];
                for i in 0..=(1u64 << k) {
                    let mode = err_mode(source, samples, seed, c);
                    out.push(check_convexity(source, k, i, &parts, &weights, mode)?.param("row", l));
                }
            }
        }
        if !source.is_random() {
            continue;
        }
        if wants(Check::Measure) {
            for l in 1..rows.saturating_sub(1) {
                let bound = Rational::new(1.into(), factorial(l));
                let (c0, c1) = (&matrix.rows()[l], &matrix.rows()[l + 1]);
                out.push(mc_measure_bound(c0, c1, source, k, &bound, samples, seed)?.param("row", l));
            }
        }
        if wants(Check::BorelCantelli) {
            out.push(borel_cantelli_report(matrix, source, k, samples, seed, rows)?);
        }
    }
    Ok(out)
}

fn run(cli: Cli) -> Run {
    let verbose = cli.verbose > 0;
    match cli.command {
        Command::Synthesize { family, k_star, k_max, horizon, budget, samples, seed, out } => {
            let family = load_family(&family)?;
            let schedule = SynthesisSchedule::new(k_star, k_max, horizon, budget, samples, seed);
            let syn = synthesize_matrix(&family, &schedule)?;
            if verbose {
                eprintln!("synthesized {} rows from {} levels", syn.matrix.len(), syn.reservoirs.len());
            }
            write_atomic(&out, &syn.matrix.serialize())?;
            Ok(true)
        }
        Command::Verify { matrix, family, check, rows, k, samples, seed, report } => {
            let matrix = load_matrix(&matrix)?;
            let family = family.as_deref().map(load_family).transpose()?;
            let reports = run_verify(&matrix, family.as_ref(), check, rows, k, samples, seed)?;
            if verbose {
                for r in reports.iter().filter(|r| r.outcome != Outcome::Pass) {
                    eprintln!("{r}");
                }
            }
            emit(report.as_deref(), &serialize_reports(&reports))?;
            Ok(all_pass(&reports))
        }
        Command::Estimate { matrix, family, source, row, k, samples, seed, report } => {
            let matrix = load_matrix(&matrix)?;
            let family = load_family(&family)?;
            let src = family.get(&source).ok_or_else(|| Failure::Usage(format!("no source named `{source}`")))?;
            let c = matrix
                .rows()
                .get(row)
                .ok_or_else(|| Failure::Usage(format!("row {row} is beyond the {} rows of the matrix", matrix.len())))?;
            let mode = err_mode(src, samples, seed, c);
            let mut reports = Vec::new();
            for i in 0..=(1u64 << k) {
                let v = err(src, k, i, c, mode)?;
                let ci = match v {
                    ErrValue::Estimated { samples, .. } => {
                        format!("{:.6e}", hoeffding_half_width(samples, 1.0))
                    }
                    _ => "exact".into(),
                };
                let shown = v.exact().map_or(format!("{:.9}", v.to_f64()), format_rational);
                reports.push(
                    VerificationReport::new("err", Outcome::Pass, shown, ci)
                        .param("source", &src.name)
                        .param("row", row)
                        .param("k", k)
                        .param("i", i)
                        .param("mode", v.provenance()),
                );
            }
            emit(report.as_deref(), &serialize_reports(&reports))?;
            Ok(true)
        }
        Command::Amalgamate { chain, max_mistake, out, report } => {
            let text = read(&chain)?;
            let chain = split_conditions(&text)?;
            if chain.is_empty() {
                return Err(Failure::Usage("chain file holds no conditions".into()));
            }
            let links = chain
                .windows(2)
                .enumerate()
                .map(|(j, w)| {
                    find_star_witness(&w[0], &w[1], max_mistake)
                        .ok_or_else(|| Failure::Usage(format!("element {} is not ≤* element {}", j, j + 1)))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let am = amalgamate(&chain, &links)?;
            let reports: Vec<VerificationReport> = chain
                .iter()
                .zip(&am.witnesses)
                .enumerate()
                .map(|(j, (c, w))| {
                    let r = match check_leq_star(c, &am.cond, w) {
                        Ok(()) => VerificationReport::new("leq-star", Outcome::Pass, "witness", "exact"),
                        Err(e) => VerificationReport::new("leq-star", Outcome::Fail, "witness", "exact").detail(e),
                    };
                    r.param("element", j).param("mistake", w.mistake)
                })
                .collect();
            write_atomic(&out, &am.cond.serialize())?;
            if let Some(p) = report {
                write_atomic(&p, &serialize_reports(&reports))?;
            }
            Ok(all_pass(&reports))
        }
        Command::Fuse { condition, names, horizon, den, bound, out, report } => {
            let p = load_condition(&condition)?;
            let u = Universe { horizon, den, bound };
            let dyns: Vec<&dyn NameOracle> = names.iter().map(|n| n as &dyn NameOracle).collect();
            let q = fuse_deciding(&p, &dyns, &u)?;
            let reports: Vec<VerificationReport> = check_approximation(&q, &dyns, &u)?
                .into_iter()
                .map(|a| {
                    let outcome = if a.holds() { Outcome::Pass } else { Outcome::Fail };
                    VerificationReport::new("approximation", outcome, format!("forcing:{},failures:{}", a.forcing, a.failures), "exact")
                        .param("n", a.n)
                        .param("m", a.m)
                })
                .collect();
            write_atomic(&out, &q.serialize())?;
            if let Some(path) = report {
                write_atomic(&path, &serialize_reports(&reports))?;
            }
            Ok(all_pass(&reports))
        }
        Command::PosCount { condition, den, horizon, out } => {
            let p = load_condition(&condition)?;
            let rows = match horizon {
                Some(h) => p.rows_below(h),
                None => p.rows().to_vec(),
            };
            let body = rows.get(p.trunk_len()..).unwrap_or_default();
            let n = pos_count(body, den)?;
            emit(out.as_deref(), &format!("{n}\n"))?;
            Ok(true)
        }
    }
}

/// Splits a file of concatenated conditions at each `condition` header.
fn split_conditions(text: &str) -> Result<Vec<Condition>, Failure> {
    let mut blocks: Vec<String> = Vec::new();
    for line in text.lines() {
        if line.starts_with("condition") || blocks.is_empty() {
            blocks.push(String::new());
        }
        let b = blocks.last_mut().expect("non-empty");
        b.push_str(line);
        b.push('\n');
    }
    blocks.iter().filter(|b| !b.trim().is_empty()).map(|b| Ok(Condition::parse(b)?)).collect()
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure::Usage(format!("{THREADS_VAR}={v} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Exhausted(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
