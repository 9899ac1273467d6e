//! `cpi`: command-line front end to the confidential pi-calculus workbench.
//!
//! Exit codes:
//!
//! | code | meaning                                                        |
//! |------|----------------------------------------------------------------|
//! | 0    | success, or a positive verdict                                 |
//! | 1    | usage, I/O, syntax, sort or encoder-input error                |
//! | 2    | the input (or a witness) is not a confidential process         |
//! | 3    | a negative verdict: not bisimilar, forwarding found, law or encoding check failed |

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use cpi_core::encode::{encode_with_handlers_by, Encoder};
use cpi_core::{
    check, check_completeness, check_nonforwarding_with, free_names, law_suite, parse, render, static_guarantee,
    successors, tau_reachable, validate_cpi, witness_check, Error, EvidenceResult, ParseMode, ParseOptions, Process,
    TaintRule, TransitionRecord,
};

/// First-line marker written by `cpi encode`; such files are re-read with
/// reserved names allowed.
const ENCODED_MARKER: &str = "-- encoded";

#[derive(Parser)]
#[command(name = "cpi", version, about = "Workbench for the confidential pi-calculus")]
struct Cli {
    /// Emit machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,

    /// Parsing discipline. Defaults to `cpi`, except for `encode`, whose
    /// sources are full pi-calculus terms.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,

    /// Accept `#`-prefixed reserved names in input files.
    #[arg(long, global = true)]
    allow_reserved: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Cpi,
    Pi,
}

impl From<Mode> for ParseMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Cpi => ParseMode::CpiStrict,
            Mode::Pi => ParseMode::PiFull,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Rule {
    FreeNames,
    FreeOutputs,
}

impl From<Rule> for TaintRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::FreeNames => TaintRule::FreeNames,
            Rule::FreeOutputs => TaintRule::FreeOutputs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a term, printing its normalised rendering.
    Parse { file: PathBuf },

    /// List the transitions of a term, or with `--depth` summarise its
    /// internal-step reachability.
    Step {
        file: PathBuf,
        #[arg(long)]
        depth: Option<usize>,
    },

    /// Bounded strong bisimilarity of two terms, or the law suite.
    Bisim {
        #[arg(required_unless_present = "laws")]
        left: Option<PathBuf>,
        #[arg(required_unless_present = "laws")]
        right: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Check the algebraic law suite on random instances instead.
        #[arg(long, conflicts_with_all = ["left", "right"])]
        laws: bool,
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },

    /// Bounded non-forwarding analysis, or witness evidence with `--witness`.
    Nonforward {
        file: PathBuf,
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// A confidential term expected to be bisimilar to FILE.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Rule::FreeNames)]
        rule: Rule,
    },

    /// Encode a pi-calculus term into the confidential calculus.
    Encode {
        file: PathBuf,
        /// Add a handler for every name whose free occurrences are not all
        /// output objects.
        #[arg(long)]
        with_handlers: bool,
        /// Check operational completeness on every reduction of the source.
        #[arg(long)]
        verify: bool,
        #[arg(long, default_value_t = 12)]
        tau: usize,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
}

enum Failure {
    Usage(String),
    Io(PathBuf, std::io::Error),
    Core(Error),
    /// Output was already printed; only the exit code remains.
    Negative,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(Error::CpiViolation(_) | Error::WitnessNotCpi(_)) => 2,
            Failure::Negative => 3,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Io(..) => "io",
            Failure::Negative => "negative",
            Failure::Core(e) => match e {
                Error::Syntax { .. } => "syntax",
                Error::Sort(_) => "sort",
                Error::CpiViolation(_) => "cpi_violation",
                Error::WitnessNotCpi(_) => "witness_not_cpi",
                Error::ReservedName(_) => "reserved_name",
                Error::SourceMode(_) => "source_mode",
                _ => "internal",
            },
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Io(path, e) => format!("{}: {e}", path.display()),
            Failure::Core(e) => e.to_string(),
            Failure::Negative => String::new(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": self.kind(), "message": self.message() });
        match self {
            Failure::Core(Error::CpiViolation(r) | Error::WitnessNotCpi(r)) => {
                v["validation"] = serde_json::to_value(r).expect("report serializes");
            }
            Failure::Core(Error::Syntax { line, col, .. }) => {
                v["line"] = json!(line);
                v["col"] = json!(col);
            }
            _ => {}
        }
        v
    }
}

struct Ctx {
    json: bool,
    seed: u64,
    mode: Option<Mode>,
    allow_reserved: bool,
}

impl Ctx {
    fn load(&self, path: &Path, default: ParseMode) -> Result<Process, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e))?;
        let encoded = text.lines().next().is_some_and(|l| l.trim_start().starts_with(ENCODED_MARKER));
        let options = ParseOptions {
            mode: self.mode.map(ParseMode::from).unwrap_or(default),
            allow_reserved: self.allow_reserved || encoded,
        };
        Ok(parse(&text, options)?)
    }

    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
        } else {
            print!("{}", text());
        }
    }
}

fn cmd_parse(ctx: &Ctx, file: &Path) -> Result<(), Failure> {
    let p = ctx.load(file, ParseMode::CpiStrict)?;
    let report = validate_cpi(&p);
    let free: Vec<String> = free_names(&p).iter().map(|n| n.to_string()).collect();
    let out = json!({
        "term": render(&p),
        "free_names": free,
        "valid_cpi": report.is_valid(),
        "validation": report,
    });
    ctx.emit(&out, || {
        let mut s = format!("{}\n", render(&p));
        if !report.is_valid() {
            for v in &report.violations {
                s.push_str(&format!("-- not confidential: {v}\n"));
            }
        }
        s
    });
    Ok(())
}

fn cmd_step(ctx: &Ctx, file: &Path, depth: Option<usize>) -> Result<(), Failure> {
    let p = ctx.load(file, ParseMode::CpiStrict)?;
    match depth {
        None => {
            let ts = successors(&p, &Default::default())?;
            let records: Vec<TransitionRecord> = ts.iter().map(TransitionRecord::from).collect();
            let out = json!({ "source": render(&p), "transitions": records });
            ctx.emit(&out, || {
                ts.iter()
                    .map(|t| format!("{} -> {}    [{}]\n", t.action, render(&t.target), t.rules.join(", ")))
                    .collect()
            });
        }
        Some(budget) => {
            let reach = tau_reachable(&p, budget)?;
            let states: Vec<_> = reach
                .states
                .iter()
                .map(|(q, d)| json!({ "distance": d, "process": render(q) }))
                .collect();
            let max = reach.states.iter().map(|(_, d)| *d).max().unwrap_or(0);
            let out = json!({
                "source": render(&p),
                "budget": budget,
                "budget_exceeded": reach.budget_exceeded,
                "max_distance": max,
                "states": states,
            });
            ctx.emit(&out, || {
                let mut s = format!(
                    "{} states within {budget} internal steps{}\n",
                    reach.states.len(),
                    if reach.budget_exceeded { " (budget exceeded)" } else { "" }
                );
                for (q, d) in &reach.states {
                    s.push_str(&format!("{d:>3}  {}\n", render(q)));
                }
                s
            });
        }
    }
    Ok(())
}

fn cmd_bisim(ctx: &Ctx, left: &Path, right: &Path, depth: usize) -> Result<(), Failure> {
    let p = ctx.load(left, ParseMode::CpiStrict)?;
    let q = ctx.load(right, ParseMode::CpiStrict)?;
    let verdict = check(&p, &q, depth)?;
    ctx.emit(&verdict, || format!("{verdict}\n"));
    if verdict.is_bisimilar() {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn cmd_laws(ctx: &Ctx, instances: usize, depth: usize) -> Result<(), Failure> {
    let report = law_suite(ctx.seed, instances, depth)?;
    ctx.emit(&report, || report.to_string());
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn cmd_nonforward(
    ctx: &Ctx,
    file: &Path,
    depth: usize,
    witness: Option<&Path>,
    rule: TaintRule,
) -> Result<(), Failure> {
    let p = ctx.load(file, ParseMode::CpiStrict)?;
    if let Some(w) = witness {
        let q = ctx.load(w, ParseMode::CpiStrict)?;
        let evidence = witness_check(&p, &q, depth)?;
        ctx.emit(&evidence, || format!("{:?}: {}\n", evidence.result, evidence.verdict).to_lowercase());
        return match evidence.result {
            EvidenceResult::Positive => Ok(()),
            EvidenceResult::Negative => Err(Failure::Negative),
        };
    }
    let verdict = check_nonforwarding_with(&p, depth, rule)?;
    let mut out = serde_json::to_value(&verdict).expect("verdict serializes");
    out["static"] = serde_json::to_value(static_guarantee(&p)).expect("guarantee serializes");
    ctx.emit(&out, || format!("{verdict}\n"));
    if verdict.is_satisfied() {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn cmd_encode(
    ctx: &Ctx,
    file: &Path,
    with_handlers: bool,
    verify: Option<(usize, usize)>,
) -> Result<(), Failure> {
    let p = ctx.load(file, ParseMode::PiFull)?;
    let mut encoder = Encoder::new();
    let encoded = if with_handlers { encode_with_handlers_by(&mut encoder, &p)? } else { encoder.encode(&p)? };
    let reports = match verify {
        Some((tau, depth)) => Some(check_completeness(&p, tau, depth)?),
        None => None,
    };
    let out = json!({
        "source": render(&p),
        "encoded": render(&encoded),
        "reports": reports,
    });
    ctx.emit(&out, || {
        let mut s = format!("{ENCODED_MARKER} from {}\n{}\n", file.display(), render(&encoded));
        for r in reports.iter().flatten() {
            match (&r.matched_state, r.tau_steps_used) {
                (Some(_), Some(n)) => {
                    s.push_str(&format!("-- {} -> {}: matched after {n} internal steps\n", render(&r.source), render(&r.source_target)))
                }
                _ => s.push_str(&format!(
                    "-- {} -> {}: no match ({})\n",
                    render(&r.source),
                    render(&r.source_target),
                    r.verdict
                )),
            }
        }
        s
    });
    if reports.iter().flatten().all(|r| r.succeeded()) {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = Ctx { json: cli.json, seed: cli.seed, mode: cli.mode, allow_reserved: cli.allow_reserved };
    match cli.command {
        Command::Parse { file } => cmd_parse(&ctx, &file),
        Command::Step { file, depth } => cmd_step(&ctx, &file, depth),
        Command::Bisim { laws: true, instances, depth, .. } => cmd_laws(&ctx, instances, depth),
        Command::Bisim { left: Some(l), right: Some(r), depth, .. } => cmd_bisim(&ctx, &l, &r, depth),
        Command::Bisim { .. } => Err(Failure::Usage("bisim needs two files or --laws".into())),
        Command::Nonforward { file, depth, witness, rule } => {
            cmd_nonforward(&ctx, &file, depth, witness.as_deref(), rule.into())
        }
        Command::Encode { file, with_handlers, verify, tau, depth } => {
            cmd_encode(&ctx, &file, with_handlers, verify.then_some((tau, depth)))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !matches!(f, Failure::Negative) {
                if json {
                    println!("{}", serde_json::to_string_pretty(&f.to_json()).expect("error serializes"));
                } else {
                    eprintln!("error: {}", f.message());
                }
            }
            ExitCode::from(f.code())
        }
    }
}
