//! Command-line front end. [`run`] is the whole program; `main` only wires it
//! to the process streams so tests can drive it in memory.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mmscheme::builtins::{self, BuiltinValue, CATALOG};
use mmscheme::engine::{
    bench, naive_multiply, recursive_multiply, seeded_operands, BenchConfig, BlockMatrix,
    CheckedI64, F64Ring, ModP, OpMeter, RationalRing, ScalarRing, BENCH_HEADER,
};
use mmscheme::io::{emit_slp_with_diagnostics, parse_scheme, parse_slp, serialize_scheme};
use mmscheme::reduce::ReductionConfig;
use mmscheme::{
    extract_scheme, naive_addition_count, random_check, reduce_scheme, scheme_to_naive_slp,
    slp_addition_count, verify_scheme, verify_slp, BilinearScheme, CheckTarget, Dims,
    RandomCheckOutcome, StraightLineProgram,
};

/// Exit status for a successful run or a valid verdict.
pub const EXIT_OK: i32 = 0;
/// Exit status for an invalid verdict or a failed comparison.
pub const EXIT_INVALID: i32 = 1;
/// Exit status for usage, parse and file errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "mmscheme",
    version,
    about = "Verify, count, reduce and run matrix-multiplication schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a scheme or program computes matrix multiplication.
    Verify {
        /// Builtin name or path to a scheme file or program.
        input: String,
        /// Dimensions `n,m,p` for scheme files whose shape is ambiguous.
        #[arg(long, value_parser = parse_dims)]
        dims: Option<Dims>,
        /// Also run a randomized check over F_p with this prime.
        #[arg(long = "mod")]
        modulus: Option<u64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Count additions and multiplications.
    Count {
        input: String,
        #[arg(long, value_parser = parse_dims)]
        dims: Option<Dims>,
    },
    /// Reduce the additions of a scheme by common-subexpression elimination.
    Reduce {
        input: String,
        #[arg(long, value_parser = parse_dims)]
        dims: Option<Dims>,
        /// Break ties randomly from this seed (default: deterministic ties).
        #[arg(long)]
        seed: Option<u64>,
        /// Number of seeds to try, starting at `--seed`.
        #[arg(long)]
        restarts: Option<usize>,
        /// Write the reduced program here (`-` for standard output).
        #[arg(long)]
        emit_slp: Option<PathBuf>,
    },
    /// Convert between program text and coefficient files.
    Emit {
        input: String,
        #[arg(long, value_parser = parse_dims)]
        dims: Option<Dims>,
        #[arg(long, value_enum, default_value_t = Format::Slp)]
        format: Format,
    },
    /// Multiply random matrices recursively and compare with the naive product.
    Multiply {
        #[arg(long)]
        size: usize,
        /// Blocks at or below this size are multiplied naively.
        #[arg(long, default_value_t = 27)]
        threshold: usize,
        #[arg(long, default_value = "int64", value_parser = parse_ring)]
        ring: RingChoice,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Program or scheme to recurse with.
        #[arg(long, default_value = "stapleton59-slp")]
        slp: String,
    },
    /// Time recursive against naive multiplication; prints CSV rows.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "3,9,27,81")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repetitions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        threshold: usize,
        #[arg(long, default_value = "int64", value_parser = parse_ring)]
        ring: RingChoice,
        #[arg(long, default_value = "stapleton59-slp")]
        slp: String,
    },
    /// List the builtin schemes and programs.
    Builtins,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Slp,
    SchemeFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RingChoice {
    Rational,
    Int64,
    F64,
    ModP(u64),
}

fn parse_dims(text: &str) -> Result<Dims, String> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("expected n,m,p: {e}"))?;
    match parts[..] {
        [n, m, p] if n > 0 && m > 0 && p > 0 => Ok(Dims::new(n, m, p)),
        _ => Err("expected three positive integers n,m,p".into()),
    }
}

fn parse_ring(text: &str) -> Result<RingChoice, String> {
    match text {
        "rational" => Ok(RingChoice::Rational),
        "int64" => Ok(RingChoice::Int64),
        "f64" => Ok(RingChoice::F64),
        _ => {
            let p = text.strip_prefix("modp:").ok_or_else(|| {
                format!("unknown ring `{text}`; use rational, int64, f64 or modp:P")
            })?;
            let p: u64 = p.parse().map_err(|e| format!("bad modulus `{p}`: {e}"))?;
            ModP::new(p).map_err(|e| e.to_string())?;
            Ok(RingChoice::ModP(p))
        }
    }
}

/// A parsed command-line input.
enum Input {
    Scheme(BilinearScheme),
    Program(StraightLineProgram),
}

impl Input {
    fn into_scheme(self) -> Result<BilinearScheme, String> {
        match self {
            Input::Scheme(s) => Ok(s),
            Input::Program(p) => extract_scheme(&p).map_err(|e| e.to_string()),
        }
    }

    fn into_program(self) -> StraightLineProgram {
        match self {
            Input::Scheme(s) => scheme_to_naive_slp(&s),
            Input::Program(p) => p,
        }
    }
}

/// Resolves a builtin name, else reads a file. Files containing `=` are
/// programs; anything else is a coefficient file.
fn load(input: &str, dims: Option<Dims>) -> Result<Input, String> {
    if let Some(entry) = builtins::find(input) {
        return Ok(match entry.load() {
            BuiltinValue::Scheme(s) => Input::Scheme(s),
            BuiltinValue::Program(p) => Input::Program(p),
        });
    }
    let text = fs::read_to_string(input).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            format!("`{input}` is neither a builtin nor a readable file")
        } else {
            format!("{input}: {e}")
        }
    })?;
    if text.contains('=') {
        parse_slp(&text, dims)
            .map(Input::Program)
            .map_err(|e| format!("{input}: {e}"))
    } else {
        parse_scheme(&text, dims)
            .map(|s| Input::Scheme(s.with_name(input)))
            .map_err(|e| format!("{input}: {e}"))
    }
}

enum Failure {
    Usage(String),
    Io(std::io::Error),
}

impl From<String> for Failure {
    fn from(message: String) -> Self {
        Failure::Usage(message)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the program on `args` (including the program name) and returns the
/// exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                let rendered = e.to_string();
                let first = rendered.lines().next().unwrap_or("invalid arguments");
                let _ = writeln!(err, "{first}");
                EXIT_USAGE
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_USAGE
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match command {
        Command::Verify {
            input,
            dims,
            modulus,
            trials,
            seed,
        } => verify(&input, dims, modulus, trials, seed, out),
        Command::Count { input, dims } => count(&input, dims, out),
        Command::Reduce {
            input,
            dims,
            seed,
            restarts,
            emit_slp,
        } => reduce(&input, dims, seed, restarts, emit_slp, out, err),
        Command::Emit {
            input,
            dims,
            format,
        } => emit(&input, dims, format, out, err),
        Command::Multiply {
            size,
            threshold,
            ring,
            seed,
            slp,
        } => {
            let program = load(&slp, None)?.into_program();
            with_ring(ring, |r| multiply(&program, size, threshold, r, seed, out))
        }
        Command::Bench {
            sizes,
            repetitions,
            seed,
            threshold,
            ring,
            slp,
        } => {
            let program = load(&slp, None)?.into_program();
            let config = BenchConfig {
                sizes,
                repetitions,
                seed,
                threshold,
            };
            with_ring(ring, |r| run_bench(&program, &config, r, out, err))
        }
        Command::Builtins => list_builtins(out),
    }
}

fn verify(
    input: &str,
    dims: Option<Dims>,
    modulus: Option<u64>,
    trials: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Outcome {
    let input = load(input, dims)?;
    let (report, random) = match &input {
        Input::Scheme(s) => {
            let random = modulus
                .map(|p| random_check(CheckTarget::Scheme(s), p, trials, seed))
                .transpose();
            (verify_scheme(s), random)
        }
        Input::Program(p) => {
            let random = modulus
                .map(|m| random_check(CheckTarget::Program(p), m, trials, seed))
                .transpose();
            (verify_slp(p).map_err(|e| e.to_string())?, random)
        }
    };
    let random = random.map_err(|e| e.to_string())?;
    writeln!(out, "{report}")?;
    for failure in &report.failures {
        writeln!(out, "  {failure}")?;
    }
    let mut ok = report.is_valid();
    if let (Some(p), Some(outcome)) = (modulus, random) {
        match outcome {
            RandomCheckOutcome::Pass { trials } => {
                writeln!(out, "random check mod {p}: pass ({trials} trials)")?
            }
            RandomCheckOutcome::Fail(w) => {
                ok = false;
                writeln!(out, "random check mod {p}: fail at trial {}", w.trial)?;
                writeln!(out, "  A = {:?}", w.a)?;
                writeln!(out, "  B = {:?}", w.b)?;
                writeln!(out, "  expected C = {:?}", w.expected)?;
                writeln!(out, "  computed C = {:?}", w.computed)?;
            }
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_INVALID })
}

fn count(input: &str, dims: Option<Dims>, out: &mut dyn Write) -> Outcome {
    match load(input, dims)? {
        Input::Scheme(s) => {
            let report = naive_addition_count(&s);
            writeln!(out, "{report}")?;
        }
        Input::Program(p) => {
            let report = slp_addition_count(&p);
            writeln!(
                out,
                "additions: {}, multiplications: {}",
                report.adds_total, report.muls
            )?;
            writeln!(
                out,
                "breakdown: A:{} B:{} C:{}, scalings: {}",
                report.adds_a, report.adds_b, report.adds_c, report.scalings
            )?;
        }
    }
    Ok(EXIT_OK)
}

fn reduce(
    input: &str,
    dims: Option<Dims>,
    seed: Option<u64>,
    restarts: Option<usize>,
    emit_to: Option<PathBuf>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let scheme = load(input, dims)?.into_scheme()?;
    let config = match (seed, restarts) {
        (None, None) => ReductionConfig::deterministic(),
        (seed, restarts) => ReductionConfig::seeded(seed.unwrap_or(0), restarts.unwrap_or(1)),
    };
    let (slp, report) = reduce_scheme(&scheme, &config).map_err(|e| e.to_string())?;
    writeln!(out, "{report}")?;
    let verdict = verify_slp(&slp).map_err(|e| e.to_string())?;
    writeln!(out, "reduced program: {verdict}")?;
    if let Some(path) = emit_to {
        let (text, diagnostics) = emit_slp_with_diagnostics(&slp);
        for d in diagnostics {
            writeln!(err, "warning: {}", d.message)?;
        }
        if path.as_os_str() == "-" {
            write!(out, "{text}")?;
        } else {
            fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
        }
    }
    Ok(if verdict.is_valid() {
        EXIT_OK
    } else {
        EXIT_INVALID
    })
}

fn emit(
    input: &str,
    dims: Option<Dims>,
    format: Format,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let input = load(input, dims)?;
    match format {
        Format::Slp => {
            let (text, diagnostics) = emit_slp_with_diagnostics(&input.into_program());
            for d in diagnostics {
                writeln!(err, "warning: {}", d.message)?;
            }
            write!(out, "{text}")?;
        }
        Format::SchemeFile => {
            let text = serialize_scheme(&input.into_scheme()?).map_err(|e| e.to_string())?;
            writeln!(out, "{text}")?;
        }
    }
    Ok(EXIT_OK)
}

/// Calls `f` with the ring the user picked.
fn with_ring(choice: RingChoice, f: impl FnOnce(&dyn RingRunner) -> Outcome) -> Outcome {
    match choice {
        RingChoice::Rational => f(&Exact(RationalRing)),
        RingChoice::Int64 => f(&Exact(CheckedI64)),
        RingChoice::ModP(p) => f(&Exact(ModP::new(p).map_err(|e| e.to_string())?)),
        RingChoice::F64 => f(&Float),
    }
}

/// Object-safe view of a ring together with its notion of agreement.
trait RingRunner {
    fn multiply(
        &self,
        slp: &StraightLineProgram,
        size: usize,
        threshold: usize,
        seed: u64,
    ) -> Result<MultiplyResult, String>;
    fn bench(
        &self,
        slp: &StraightLineProgram,
        config: &BenchConfig,
    ) -> Result<Vec<mmscheme::engine::BenchRow>, String>;
    fn name(&self) -> String;
}

struct MultiplyResult {
    agrees: bool,
    counts: mmscheme::engine::MeterCounts,
    baseline_ns: u128,
}

fn multiply_generic<R: ScalarRing>(
    ring: &R,
    close: impl Fn(&BlockMatrix<R::Elem>, &BlockMatrix<R::Elem>) -> bool,
    slp: &StraightLineProgram,
    size: usize,
    threshold: usize,
    seed: u64,
) -> Result<MultiplyResult, String> {
    if size == 0 {
        return Err("--size must be positive".into());
    }
    let (a, b) = seeded_operands(size, ring, seed);
    let meter = OpMeter::new();
    let fast =
        recursive_multiply(&a, &b, slp, threshold, ring, &meter).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let slow = naive_multiply(&a, &b, ring, None).map_err(|e| e.to_string())?;
    let baseline_ns = started.elapsed().as_nanos();
    Ok(MultiplyResult {
        agrees: close(&fast, &slow),
        counts: meter.snapshot(),
        baseline_ns,
    })
}

struct Exact<R>(R);

impl<R: ScalarRing> RingRunner for Exact<R> {
    fn multiply(
        &self,
        slp: &StraightLineProgram,
        size: usize,
        threshold: usize,
        seed: u64,
    ) -> Result<MultiplyResult, String> {
        multiply_generic(&self.0, |x, y| x == y, slp, size, threshold, seed)
    }
    fn bench(
        &self,
        slp: &StraightLineProgram,
        config: &BenchConfig,
    ) -> Result<Vec<mmscheme::engine::BenchRow>, String> {
        bench(slp, config, &self.0, |x, y| x == y).map_err(|e| e.to_string())
    }
    fn name(&self) -> String {
        self.0.name()
    }
}

struct Float;

/// Entrywise `|x − y| ≤ 10³·ε·n` for inputs drawn from `[-1, 1]`.
fn float_close(x: &BlockMatrix<f64>, y: &BlockMatrix<f64>) -> bool {
    let bound = 1e3 * f64::EPSILON * x.cols() as f64;
    x.rows() == y.rows()
        && x.cols() == y.cols()
        && x.as_slice()
            .iter()
            .zip(y.as_slice())
            .all(|(a, b)| (a - b).abs() <= bound)
}

impl RingRunner for Float {
    fn multiply(
        &self,
        slp: &StraightLineProgram,
        size: usize,
        threshold: usize,
        seed: u64,
    ) -> Result<MultiplyResult, String> {
        multiply_generic(&F64Ring, float_close, slp, size, threshold, seed)
    }
    fn bench(
        &self,
        slp: &StraightLineProgram,
        config: &BenchConfig,
    ) -> Result<Vec<mmscheme::engine::BenchRow>, String> {
        bench(slp, config, &F64Ring, float_close).map_err(|e| e.to_string())
    }
    fn name(&self) -> String {
        F64Ring.name()
    }
}

fn multiply(
    slp: &StraightLineProgram,
    size: usize,
    threshold: usize,
    ring: &dyn RingRunner,
    seed: u64,
    out: &mut dyn Write,
) -> Outcome {
    let result = ring.multiply(slp, size, threshold, seed)?;
    let c = result.counts;
    writeln!(
        out,
        "size {size} over {}: {}",
        ring.name(),
        if result.agrees {
            "agrees with naive multiplication"
        } else {
            "DISAGREES with naive multiplication"
        }
    )?;
    writeln!(
        out,
        "adds: {}, muls: {}, scales: {}, time_ns: {}, baseline_time_ns: {}",
        c.scalar_adds,
        c.scalar_muls,
        c.scalar_scales,
        c.wall_time.as_nanos(),
        result.baseline_ns
    )?;
    Ok(if result.agrees { EXIT_OK } else { EXIT_INVALID })
}

fn run_bench(
    slp: &StraightLineProgram,
    config: &BenchConfig,
    ring: &dyn RingRunner,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Outcome {
    let rows = ring.bench(slp, config)?;
    writeln!(out, "{BENCH_HEADER}")?;
    let mut ok = true;
    for row in &rows {
        writeln!(out, "{}", row.to_csv())?;
        if !row.agrees {
            ok = false;
            writeln!(
                err,
                "size {}: result differs from naive multiplication",
                row.size
            )?;
        }
        if row.formula_match == Some(false) {
            ok = false;
            writeln!(err, "size {}: counts differ from the closed form", row.size)?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_INVALID })
}

fn list_builtins(out: &mut dyn Write) -> Outcome {
    writeln!(
        out,
        "{:<18} {:<8} {:<8} {:>4} {:>9}  description",
        "name", "form", "dims", "rank", "additions"
    )?;
    for entry in CATALOG {
        let (form, dims, rank, adds) = match entry.load() {
            BuiltinValue::Scheme(s) => (
                "scheme",
                s.dims(),
                s.rank(),
                naive_addition_count(&s).adds_total,
            ),
            BuiltinValue::Program(p) => (
                "program",
                p.dims(),
                p.mul_count(),
                slp_addition_count(&p).adds_total,
            ),
        };
        writeln!(
            out,
            "{:<18} {:<8} {:<8} {:>4} {:>9}  {}",
            entry.name,
            form,
            dims.to_string(),
            rank,
            adds,
            entry.description
        )?;
    }
    Ok(EXIT_OK)
}
