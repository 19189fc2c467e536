//! The `qtm` command line.
//!
//! Every command prints one record per line, either as `kind key=value ...`
//! text or as JSON lines (`--format json`). Exit codes: 0 pass,
//! 1 verification failure, 2 parse or usage error, 3 truncation or resource
//! error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::{json, Map, Value};

use crate::analysis::{
    build_truncated, lemma_suite, projection_relations_check, qnd_check, window_configurations, Truncation,
    DEFAULT_BASIS_CAP, PRODUCT_TOL,
};
use crate::error::Error;
use crate::fixtures;
use crate::machine::{parse_machine, validate_halt_preservation, validate_unitarity, MachineSpec};
use crate::measurement::{compare_distributions, monitored_distribution, sample_monitored, unmonitored_distribution, Outcome};
use crate::state_vector::StateVector;
use crate::tape::{Symbol, Tape};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_TRUNCATION: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qtm", version, about = "Quantum Turing machine simulator with a monitored halt qubit")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a machine and check halt preservation and unitarity.
    Validate {
        file: PathBuf,
        /// Steps of the reachable truncation checked from the start state.
        #[arg(long, default_value_t = 16)]
        depth: usize,
        /// Initial tape as `cell:symbol` pairs, e.g. `0:1,1:1`.
        #[arg(long, default_value = "")]
        initial: String,
        /// Check every configuration in `[-W, W]` instead.
        #[arg(long)]
        window: Option<i64>,
    },
    /// Monitored versus unmonitored output distribution.
    Compare {
        file: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value = "")]
        initial: String,
        #[arg(long, default_value_t = PRODUCT_TOL)]
        tol: f64,
        /// Skip validation.
        #[arg(long)]
        force: bool,
    },
    /// Heisenberg-picture suite: commutators, projection relations, lemmas.
    Qnd {
        file: PathBuf,
        #[arg(long)]
        max_steps: usize,
        /// Head radius of the truncation; defaults to `4 * max-steps`.
        #[arg(long)]
        window: Option<i64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = PRODUCT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_BASIS_CAP)]
        cap: usize,
    },
    /// Repeated monitored runs with a seeded generator.
    Sample {
        file: PathBuf,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        runs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "")]
        initial: String,
        /// Significance level of the chi-squared test.
        #[arg(long, default_value_t = 0.001)]
        alpha: f64,
        #[arg(long)]
        force: bool,
    },
    /// List the bundled machines, or print one.
    Example { name: Option<String> },
}

/// Records collected by a command, rendered at the end.
struct Report {
    format: Format,
    lines: Vec<String>,
}

impl Report {
    fn new(format: Format) -> Self {
        Report { format, lines: Vec::new() }
    }

    fn record(&mut self, kind: &str, fields: Vec<(&str, Value)>) {
        match self.format {
            Format::Text => {
                let mut line = kind.to_string();
                for (k, v) in fields {
                    let v = match v {
                        Value::String(s) => s,
                        Value::Null => "-".to_string(),
                        other => other.to_string(),
                    };
                    line.push_str(&format!(" {k}={v}"));
                }
                self.lines.push(line);
            }
            Format::Json => {
                let mut map = Map::new();
                map.insert("record".into(), Value::String(kind.into()));
                for (k, v) in fields {
                    map.insert(k.into(), v);
                }
                self.lines.push(Value::Object(map).to_string());
            }
        }
    }

    fn write_to(&self, out: &mut dyn Write) {
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
    }
}

/// Fixed-width scientific notation, so reports are byte-stable.
fn num(x: f64) -> Value {
    let x = if x == 0.0 { 0.0 } else { x };
    Value::String(format!("{x:.12e}"))
}

fn verdict(pass: bool) -> Value {
    Value::String(if pass { "pass" } else { "fail" }.into())
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Syntax { .. } | Error::Semantic { .. } | Error::InvalidArgument(_) => EXIT_PARSE,
        Error::WindowTooSmall { .. }
        | Error::BasisOverflow { .. }
        | Error::InsufficientDepth { .. }
        | Error::LabelCapacity => EXIT_TRUNCATION,
        _ => EXIT_FAIL,
    }
}

fn error_record(report: &mut Report, e: &Error) {
    let mut fields = vec![("message", Value::String(e.to_string()))];
    match e {
        Error::Syntax { line, column, .. } => {
            fields.push(("line", json!(line)));
            fields.push(("column", json!(column)));
        }
        Error::Semantic { line, .. } => fields.push(("line", json!(line))),
        Error::WindowTooSmall { required, .. } => fields.push(("required-radius", json!(required))),
        Error::InsufficientDepth { required, .. } => fields.push(("required-depth", json!(required))),
        _ => {}
    }
    report.record("error", fields);
}

/// Parses `cell:symbol` pairs separated by commas.
pub fn parse_tape_literal(text: &str, spec: &MachineSpec) -> Result<Tape, Error> {
    let mut cells = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (cell, sym) = part
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("tape entry `{part}` is not cell:symbol")))?;
        let cell: i64 = cell
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad cell index `{cell}`")))?;
        let sym: u16 = sym
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad symbol `{sym}`")))?;
        if sym as usize >= spec.alphabet_size() {
            return Err(Error::InvalidArgument(format!("symbol {sym} outside alphabet of size {}", spec.alphabet_size())));
        }
        cells.push((cell, Symbol(sym)));
    }
    Ok(Tape::from_cells(spec.blank(), cells))
}

fn load(path: &Path) -> Result<MachineSpec, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    parse_machine(&text)
}

/// Halt preservation plus unitarity on the configurations reachable from
/// `start` within `depth` steps. Adds records and returns whether both passed.
fn validate_into(report: &mut Report, spec: &MachineSpec, truncation: &Truncation) -> Result<bool, Error> {
    let halt = validate_halt_preservation(spec);
    for v in &halt.violations {
        report.record("halt-violation", vec![("rule", Value::String(v.to_string()))]);
    }
    report.record(
        "halt-preservation",
        vec![("violations", json!(halt.violations.len())), ("result", verdict(halt.passed()))],
    );
    let unit = validate_unitarity(spec, truncation, crate::analysis::EXACT_TOL)?;
    for k in &unit.missing_keys {
        report.record("missing-rule", vec![("key", Value::String(k.to_string()))]);
    }
    for (k, n) in &unit.local_norm_failures {
        report.record("local-norm", vec![("key", Value::String(k.to_string())), ("norm-sq", num(*n))]);
    }
    let mut fields = vec![
        ("columns", json!(unit.columns_checked)),
        ("max-deviation", num(unit.max_deviation)),
        ("tol", num(unit.tolerance)),
    ];
    if let Some((a, b, _)) = &unit.worst_pair {
        if unit.max_deviation > unit.tolerance {
            fields.push(("worst-a", Value::String(a.to_string())));
            fields.push(("worst-b", Value::String(b.to_string())));
        }
    }
    fields.push(("result", verdict(unit.passed())));
    report.record("unitarity", fields);
    Ok(halt.passed() && unit.passed())
}

fn cmd_validate(report: &mut Report, file: &Path, depth: usize, initial: &str, window: Option<i64>) -> Result<i32, Error> {
    let spec = load(file)?;
    let tape = parse_tape_literal(initial, &spec)?;
    report.record(
        "machine",
        vec![
            ("file", Value::String(file.display().to_string())),
            ("states", json!(spec.state_count())),
            ("symbols", json!(spec.alphabet_size())),
        ],
    );
    let truncation = match window {
        Some(w) => Truncation::window(w, 1),
        None => Truncation::reachable(vec![spec.start_configuration(tape)], depth),
    };
    let ok = validate_into(report, &spec, &truncation)?;
    report.record("summary", vec![("result", verdict(ok))]);
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn start_state(spec: &MachineSpec, initial: &str) -> Result<StateVector, Error> {
    Ok(StateVector::basis(spec.start_configuration(parse_tape_literal(initial, spec)?)))
}

fn outcome_value(o: &Outcome) -> Value {
    match o {
        Outcome::Output(l) => Value::String(l.to_string()),
        Outcome::NotHalted => Value::String("not-halted".into()),
    }
}

fn cmd_compare(report: &mut Report, file: &Path, steps: usize, initial: &str, tol: f64, force: bool) -> Result<i32, Error> {
    let spec = load(file)?;
    let psi = start_state(&spec, initial)?;
    report.record(
        "machine",
        vec![
            ("file", Value::String(file.display().to_string())),
            ("steps", json!(steps)),
            ("initial", Value::String(psi.configurations().next().map(|c| c.tape.to_string()).unwrap_or_default())),
        ],
    );
    if !force {
        let seeds: Vec<_> = psi.configurations().cloned().collect();
        if !validate_into(report, &spec, &Truncation::reachable(seeds, steps))? {
            report.record("summary", vec![("result", verdict(false)), ("reason", "validation".into())]);
            return Ok(EXIT_FAIL);
        }
    }
    let mon = monitored_distribution(&spec, &psi, steps)?;
    let unmon = unmonitored_distribution(&spec, &psi, steps)?;
    let cmp = compare_distributions(&mon, &unmon, tol);
    for row in &cmp.rows {
        report.record(
            "row",
            vec![
                ("label", outcome_value(&row.outcome)),
                ("monitored", num(row.a)),
                ("unmonitored", num(row.b)),
                ("abs-diff", num(row.diff)),
            ],
        );
    }
    report.record(
        "summary",
        vec![
            ("rows", json!(cmp.rows.len())),
            ("max-diff", num(cmp.max_diff)),
            ("worst", cmp.worst.as_ref().map(outcome_value).unwrap_or(Value::Null)),
            ("tol", num(tol)),
            ("result", verdict(cmp.passed)),
        ],
    );
    Ok(if cmp.passed { EXIT_PASS } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn cmd_qnd(
    report: &mut Report,
    file: &Path,
    max_steps: usize,
    window: Option<i64>,
    trials: usize,
    seed: u64,
    tol: f64,
    cap: usize,
) -> Result<i32, Error> {
    let spec = load(file)?;
    let depth = 4 * max_steps;
    let radius = window.unwrap_or(depth as i64);
    report.record(
        "machine",
        vec![
            ("file", Value::String(file.display().to_string())),
            ("max-steps", json!(max_steps)),
            ("window", json!(radius)),
            ("trials", json!(trials)),
            ("seed", json!(seed)),
        ],
    );
    let halt = validate_halt_preservation(&spec);
    report.record("halt-preservation", vec![("result", verdict(halt.passed()))]);

    // Columns: every configuration with the head on cell 0.
    let seeds = window_configurations(&spec, 0, cap)?;
    let heis = build_truncated(&spec, &Truncation::reachable(seeds.clone(), depth).bidirectional().with_radius(radius).with_cap(cap))?;
    let mut ok = halt.passed();
    let mut worst_commutator: f64 = 0.0;
    for n in 0..=max_steps {
        for m in 0..=max_steps {
            let r = qnd_check(&heis, n, m)?;
            worst_commutator = worst_commutator.max(r.max_entry);
            report.record(
                "commutator",
                vec![
                    ("n", json!(n)),
                    ("n-prime", json!(m)),
                    ("columns", json!(r.columns_checked)),
                    ("max-entry", num(r.max_entry)),
                    ("result", verdict(r.max_entry <= tol)),
                ],
            );
        }
    }
    ok &= worst_commutator <= tol;

    let mut worst_relation: f64 = 0.0;
    for n in 0..=max_steps {
        for m in 0..=n {
            let r = projection_relations_check(&heis, n, m)?;
            let mut fields = vec![("n", json!(n)), ("n-prime", json!(m)), ("columns", json!(r.columns_checked))];
            for (name, dev) in r.rows() {
                fields.push((name, num(dev)));
            }
            fields.push(("result", verdict(r.max_deviation() <= tol)));
            report.record("relations", fields);
            worst_relation = worst_relation.max(r.max_deviation());
        }
    }
    ok &= worst_relation <= tol;

    let fwd = build_truncated(&spec, &Truncation::reachable(seeds, max_steps).with_radius(radius).with_cap(cap))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let lemmas = lemma_suite(&fwd, trials, &mut rng);
    for (name, dev) in lemmas.rows() {
        report.record("lemma", vec![("name", name.into()), ("max-deviation", num(dev)), ("result", verdict(dev <= tol))]);
    }
    ok &= lemmas.max_deviation() <= tol;

    report.record(
        "summary",
        vec![
            ("basis", json!(heis.dim())),
            ("max-commutator", num(worst_commutator)),
            ("max-relation", num(worst_relation)),
            ("max-lemma", num(lemmas.max_deviation())),
            ("tol", num(tol)),
            ("result", verdict(ok)),
        ],
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sample(
    report: &mut Report,
    file: &Path,
    steps: usize,
    runs: u64,
    seed: u64,
    initial: &str,
    alpha: f64,
    force: bool,
) -> Result<i32, Error> {
    let spec = load(file)?;
    let psi = start_state(&spec, initial)?;
    report.record(
        "machine",
        vec![
            ("file", Value::String(file.display().to_string())),
            ("steps", json!(steps)),
            ("runs", json!(runs)),
            ("seed", json!(seed)),
        ],
    );
    if !force {
        let seeds: Vec<_> = psi.configurations().cloned().collect();
        if !validate_into(report, &spec, &Truncation::reachable(seeds, steps))? {
            report.record("summary", vec![("result", verdict(false)), ("reason", "validation".into())]);
            return Ok(EXIT_FAIL);
        }
    }
    let s = sample_monitored(&spec, &psi, steps, runs, seed)?;
    let mut labels: Vec<_> = s.expected.entries.keys().chain(s.output_counts.keys()).copied().collect();
    labels.sort();
    labels.dedup();
    for l in labels {
        let count = s.output_counts.get(&l).copied().unwrap_or(0);
        let freq = if runs == 0 { 0.0 } else { count as f64 / runs as f64 };
        report.record(
            "output",
            vec![
                ("label", Value::String(l.to_string())),
                ("count", json!(count)),
                ("frequency", num(freq)),
                ("expected", num(s.expected.probability(l))),
            ],
        );
    }
    report.record(
        "output",
        vec![
            ("label", "not-halted".into()),
            ("count", json!(s.not_halted)),
            ("frequency", num(if runs == 0 { 0.0 } else { s.not_halted as f64 / runs as f64 })),
            ("expected", num(s.expected.residual)),
        ],
    );
    for (k, c) in &s.halting_step_counts {
        report.record("halting-step", vec![("step", json!(k)), ("count", json!(c))]);
    }
    let pass = s.chi_squared.p_value >= alpha;
    report.record(
        "summary",
        vec![
            ("seed", json!(seed)),
            ("runs", json!(runs)),
            ("chi-squared", num(s.chi_squared.statistic)),
            ("dof", json!(s.chi_squared.dof)),
            ("p-value", num(s.chi_squared.p_value)),
            ("alpha", num(alpha)),
            ("result", verdict(pass)),
        ],
    );
    Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_example(report: &mut Report, out: &mut dyn Write, name: Option<&str>) -> Result<i32, Error> {
    match name {
        None => {
            for (name, _) in fixtures::BUNDLED {
                report.record("machine", vec![("name", name.into())]);
            }
            Ok(EXIT_PASS)
        }
        Some(name) => match fixtures::BUNDLED.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => {
                let _ = out.write_all(text.as_bytes());
                Ok(EXIT_PASS)
            }
            None => Err(Error::InvalidArgument(format!("no bundled machine named `{name}`"))),
        },
    }
}

/// Runs the command line `args` (program name first), writing the report to
/// `out`, and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(out, "{}", e.render());
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_PASS };
        }
    };
    let mut report = Report::new(cli.format);
    let result = match &cli.command {
        Command::Validate {
            file,
            depth,
            initial,
            window,
        } => cmd_validate(&mut report, file, *depth, initial, *window),
        Command::Compare {
            file,
            steps,
            initial,
            tol,
            force,
        } => cmd_compare(&mut report, file, *steps, initial, *tol, *force),
        Command::Qnd {
            file,
            max_steps,
            window,
            trials,
            seed,
            tol,
            cap,
        } => cmd_qnd(&mut report, file, *max_steps, *window, *trials, *seed, *tol, *cap),
        Command::Sample {
            file,
            steps,
            runs,
            seed,
            initial,
            alpha,
            force,
        } => cmd_sample(&mut report, file, *steps, *runs, *seed, initial, *alpha, *force),
        Command::Example { name } => cmd_example(&mut report, out, name.as_deref()),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            error_record(&mut report, &e);
            exit_code(&e)
        }
    };
    report.write_to(out);
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tape_literal() {
        let spec = parse_machine(fixtures::TWO_PHASE).unwrap();
        let t = parse_tape_literal("0:1, 3:1", &spec).unwrap();
        assert_eq!(t, Tape::from_cells(Symbol::BLANK, [(0, Symbol(1)), (3, Symbol(1))]));
        assert_eq!(parse_tape_literal("", &spec).unwrap(), Tape::default());
        assert!(parse_tape_literal("0:2", &spec).is_err());
        assert!(parse_tape_literal("0-1", &spec).is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::Syntax { line: 1, column: 1, message: String::new() }), EXIT_PARSE);
        assert_eq!(exit_code(&Error::WindowTooSmall { reached: 3, required: 4 }), EXIT_TRUNCATION);
        assert_eq!(exit_code(&Error::ZeroNorm), EXIT_FAIL);
    }
}
