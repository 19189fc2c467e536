//! Machine descriptions: the amplitude table of the transition function,
//! the line-oriented machine file format, and well-formedness checks.
//!
//! A machine file looks like
//!
//! ```text
//! qtm 1
//! alphabet 2        # symbols 0..2, symbol 0 is blank
//! states 3
//! initial 0
//! rule 0 0 0 -> 1 1 2 R 1/sqrt2 0
//! rule 0 0 0 -> 1 0 1 R 1/sqrt2 0
//! ```
//!
//! Each `rule p n0 sigma -> tau n0' q d re im` line contributes one target to
//! the key `(p, n0, sigma)`; repeating a key superposes its targets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{build_truncated, Truncation};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::tape::{Symbol, Tape};

pub const FORMAT_VERSION: u32 = 1;

/// `1/sqrt(2)` to 17 significant digits, the expansion of the `1/sqrt2` token.
const INV_SQRT2_17: &str = "0.70710678118654752";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn offset(self) -> i64 {
        match self {
            Direction::Left => -1,
            Direction::Right => 1,
        }
    }

    fn token(self) -> &'static str {
        match self {
            Direction::Left => "L",
            Direction::Right => "R",
        }
    }
}

/// Left-hand side of a transition: internal state, halt bit, scanned symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RuleKey {
    pub state: usize,
    pub halted: bool,
    pub read: Symbol,
}

impl RuleKey {
    pub fn new(state: usize, halted: bool, read: Symbol) -> Self {
        RuleKey {
            state,
            halted,
            read,
        }
    }
}

impl fmt::Display for RuleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, n0={}, sigma={})", self.state, self.halted as u8, self.read)
    }
}

/// One branch `(tau, n0', q, d)` with amplitude `amp`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub write: Symbol,
    pub halted: bool,
    pub state: usize,
    pub dir: Direction,
    pub amp: Complex64,
}

impl Transition {
    fn target_key(&self) -> (Symbol, bool, usize, Direction) {
        (self.write, self.halted, self.state, self.dir)
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {:?} {:?}",
            self.write,
            self.halted as u8,
            self.state,
            self.dir.token(),
            self.amp.re,
            self.amp.im
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineSpec {
    alphabet_size: usize,
    state_count: usize,
    initial_state: usize,
    rules: BTreeMap<RuleKey, Vec<Transition>>,
}

impl MachineSpec {
    pub fn new(
        alphabet_size: usize,
        state_count: usize,
        initial_state: usize,
        rules: BTreeMap<RuleKey, Vec<Transition>>,
    ) -> Result<Self> {
        if alphabet_size == 0 || alphabet_size > u16::MAX as usize {
            return Err(Error::InvalidMachine(format!("alphabet size {alphabet_size} out of range")));
        }
        if state_count == 0 {
            return Err(Error::InvalidMachine("state count must be positive".into()));
        }
        if initial_state >= state_count {
            return Err(Error::InvalidMachine(format!("initial state {initial_state} out of range")));
        }
        for (key, targets) in &rules {
            if key.state >= state_count || key.read.index() >= alphabet_size {
                return Err(Error::InvalidMachine(format!("rule key {key} out of range")));
            }
            for t in targets {
                if t.state >= state_count || t.write.index() >= alphabet_size {
                    return Err(Error::InvalidMachine(format!("target of {key} out of range")));
                }
                if !(t.amp.re.is_finite() && t.amp.im.is_finite()) {
                    return Err(Error::InvalidMachine(format!("non-finite amplitude in {key}")));
                }
            }
        }
        Ok(MachineSpec {
            alphabet_size,
            state_count,
            initial_state,
            rules,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn blank(&self) -> Symbol {
        Symbol::BLANK
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn rules(&self) -> &BTreeMap<RuleKey, Vec<Transition>> {
        &self.rules
    }

    pub fn rule(&self, key: &RuleKey) -> Option<&[Transition]> {
        self.rules.get(key).map(Vec::as_slice).filter(|t| !t.is_empty())
    }

    /// Every `(p, n0, sigma)` the declared sizes allow.
    pub fn key_space(&self) -> impl Iterator<Item = RuleKey> + '_ {
        (0..self.state_count).flat_map(move |p| {
            [false, true].into_iter().flat_map(move |h| {
                (0..self.alphabet_size).map(move |s| RuleKey::new(p, h, Symbol(s as u16)))
            })
        })
    }

    pub fn missing_keys(&self) -> Vec<RuleKey> {
        self.key_space().filter(|k| self.rule(k).is_none()).collect()
    }

    /// Start configuration: head at 0, initial state, halt bit 0.
    pub fn start_configuration(&self, tape: Tape) -> Configuration {
        Configuration::new(self.initial_state, 0, tape, false)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MachineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qtm {FORMAT_VERSION}")?;
        writeln!(f, "alphabet {}", self.alphabet_size)?;
        writeln!(f, "states {}", self.state_count)?;
        writeln!(f, "initial {}", self.initial_state)?;
        for (key, targets) in &self.rules {
            for t in targets {
                writeln!(
                    f,
                    "rule {} {} {} -> {}",
                    key.state, key.halted as u8, key.read, t
                )?;
            }
        }
        Ok(())
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn semantic(line: usize, message: impl Into<String>) -> Error {
    Error::Semantic {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: &Token<'_>, line: usize, what: &str) -> Result<usize> {
    tok.text
        .parse::<usize>()
        .map_err(|_| syntax(line, tok.column, format!("expected {what}, found `{}`", tok.text)))
}

fn parse_bit(tok: &Token<'_>, line: usize) -> Result<bool> {
    match tok.text {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(syntax(line, tok.column, format!("expected halt bit 0 or 1, found `{other}`"))),
    }
}

fn parse_real(tok: &Token<'_>, line: usize) -> Result<f64> {
    let text = match tok.text {
        "1/sqrt2" => INV_SQRT2_17.to_string(),
        "-1/sqrt2" => format!("-{INV_SQRT2_17}"),
        t => t.to_string(),
    };
    let value = text
        .parse::<f64>()
        .map_err(|_| syntax(line, tok.column, format!("expected real number, found `{}`", tok.text)))?;
    if !value.is_finite() {
        return Err(semantic(line, format!("amplitude component `{}` is not finite", tok.text)));
    }
    Ok(value)
}

/// Parses a machine file.
pub fn parse_machine(text: &str) -> Result<MachineSpec> {
    let mut seen_magic = false;
    let mut alphabet: Option<(usize, usize)> = None;
    let mut states: Option<(usize, usize)> = None;
    let mut initial: Option<(usize, usize)> = None;
    // (line, key, target)
    let mut entries: Vec<(usize, RuleKey, Transition)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let toks = tokenize(content);
        let Some(first) = toks.first() else { continue };

        if !seen_magic {
            if first.text != "qtm" {
                return Err(syntax(line_no, first.column, "expected `qtm <version>` header"));
            }
            let Some(v) = toks.get(1) else {
                return Err(syntax(line_no, content.trim_end().chars().count() + 1, "missing format version"));
            };
            let version = parse_usize(v, line_no, "format version")?;
            if version as u32 != FORMAT_VERSION {
                return Err(semantic(line_no, format!("unsupported format version {version}")));
            }
            if let Some(extra) = toks.get(2) {
                return Err(syntax(line_no, extra.column, "unexpected token after version"));
            }
            seen_magic = true;
            continue;
        }

        match first.text {
            "alphabet" | "states" | "initial" => {
                if toks.len() != 2 {
                    let col = toks.get(2).map_or(content.trim_end().chars().count() + 1, |t| t.column);
                    return Err(syntax(line_no, col, format!("`{}` takes exactly one value", first.text)));
                }
                let v = parse_usize(&toks[1], line_no, "non-negative integer")?;
                let slot = match first.text {
                    "alphabet" => &mut alphabet,
                    "states" => &mut states,
                    _ => &mut initial,
                };
                if slot.is_some() {
                    return Err(semantic(line_no, format!("`{}` declared twice", first.text)));
                }
                *slot = Some((v, line_no));
            }
            "rule" => {
                if toks.len() != 11 {
                    let col = toks.get(11).map_or(content.trim_end().chars().count() + 1, |t| t.column);
                    return Err(syntax(
                        line_no,
                        col,
                        format!("rule needs 10 fields `p n0 sigma -> tau n0' q d re im`, found {}", toks.len() - 1),
                    ));
                }
                let p = parse_usize(&toks[1], line_no, "state index")?;
                let n0 = parse_bit(&toks[2], line_no)?;
                let sigma = parse_usize(&toks[3], line_no, "symbol index")?;
                if toks[4].text != "->" {
                    return Err(syntax(line_no, toks[4].column, format!("expected `->`, found `{}`", toks[4].text)));
                }
                let tau = parse_usize(&toks[5], line_no, "symbol index")?;
                let n0p = parse_bit(&toks[6], line_no)?;
                let q = parse_usize(&toks[7], line_no, "state index")?;
                let dir = match toks[8].text {
                    "L" => Direction::Left,
                    "R" => Direction::Right,
                    other => {
                        return Err(syntax(line_no, toks[8].column, format!("expected direction L or R, found `{other}`")))
                    }
                };
                let re = parse_real(&toks[9], line_no)?;
                let im = parse_real(&toks[10], line_no)?;
                if sigma > u16::MAX as usize || tau > u16::MAX as usize {
                    return Err(semantic(line_no, "symbol index too large"));
                }
                entries.push((
                    line_no,
                    RuleKey::new(p, n0, Symbol(sigma as u16)),
                    Transition {
                        write: Symbol(tau as u16),
                        halted: n0p,
                        state: q,
                        dir,
                        amp: Complex64::new(re, im),
                    },
                ));
            }
            other => {
                return Err(syntax(line_no, first.column, format!("unknown directive `{other}`")));
            }
        }
    }

    if !seen_magic {
        return Err(syntax(1, 1, "empty document: expected `qtm <version>` header"));
    }
    let last_line = text.lines().count().max(1);
    let (alphabet_size, aline) = alphabet.ok_or_else(|| semantic(last_line, "missing `alphabet` declaration"))?;
    let (state_count, sline) = states.ok_or_else(|| semantic(last_line, "missing `states` declaration"))?;
    let (initial_state, iline) = initial.ok_or_else(|| semantic(last_line, "missing `initial` declaration"))?;
    if alphabet_size == 0 || alphabet_size > u16::MAX as usize {
        return Err(semantic(aline, format!("alphabet size {alphabet_size} out of range")));
    }
    if state_count == 0 {
        return Err(semantic(sline, "state count must be positive"));
    }
    if initial_state >= state_count {
        return Err(semantic(iline, format!("unknown initial state {initial_state}")));
    }

    let mut rules: BTreeMap<RuleKey, Vec<Transition>> = BTreeMap::new();
    let mut targets_seen: BTreeSet<(RuleKey, (Symbol, bool, usize, Direction))> = BTreeSet::new();
    for (line_no, key, t) in entries {
        if key.state >= state_count {
            return Err(semantic(line_no, format!("unknown state {}", key.state)));
        }
        if t.state >= state_count {
            return Err(semantic(line_no, format!("unknown state {}", t.state)));
        }
        if key.read.index() >= alphabet_size {
            return Err(semantic(line_no, format!("unknown symbol {}", key.read)));
        }
        if t.write.index() >= alphabet_size {
            return Err(semantic(line_no, format!("unknown symbol {}", t.write)));
        }
        if !targets_seen.insert((key, t.target_key())) {
            return Err(semantic(
                line_no,
                format!("duplicate rule key {key} with target ({} {} {} {})", t.write, t.halted as u8, t.state, t.dir.token()),
            ));
        }
        rules.entry(key).or_default().push(t);
    }

    MachineSpec::new(alphabet_size, state_count, initial_state, rules)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HaltViolationKind {
    /// A halted rule writes a symbol other than the one it read.
    RewritesTape,
    /// A halted rule clears the halt bit.
    ClearsHalt,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaltViolation {
    pub key: RuleKey,
    pub target: Transition,
    pub kind: HaltViolationKind,
}

impl fmt::Display for HaltViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            HaltViolationKind::RewritesTape => "halted rule rewrites the tape",
            HaltViolationKind::ClearsHalt => "halted rule clears the halt bit",
        };
        write!(f, "{what}: {} -> {}", self.key, self.target)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HaltPreservationReport {
    pub violations: Vec<HaltViolation>,
}

impl HaltPreservationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that once the halt bit is set the machine keeps it set and never
/// changes the tape: every halted rule writes back the scanned symbol.
pub fn validate_halt_preservation(spec: &MachineSpec) -> HaltPreservationReport {
    let mut violations = Vec::new();
    for (key, targets) in spec.rules().iter().filter(|(k, _)| k.halted) {
        for t in targets {
            if t.amp.norm() == 0.0 {
                continue;
            }
            if t.write != key.read {
                violations.push(HaltViolation {
                    key: *key,
                    target: *t,
                    kind: HaltViolationKind::RewritesTape,
                });
            }
            if !t.halted {
                violations.push(HaltViolation {
                    key: *key,
                    target: *t,
                    kind: HaltViolationKind::ClearsHalt,
                });
            }
        }
    }
    HaltPreservationReport { violations }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitarityReport {
    pub tolerance: f64,
    pub missing_keys: Vec<RuleKey>,
    /// Keys whose amplitudes do not satisfy `sum |c|^2 = 1`.
    pub local_norm_failures: Vec<(RuleKey, f64)>,
    pub columns_checked: usize,
    /// Largest `|(U^dag U - I)_{ab}|` over interior columns.
    pub max_deviation: f64,
    /// Offending pair (equal configurations for a norm defect).
    pub worst_pair: Option<(Configuration, Configuration, f64)>,
}

impl UnitarityReport {
    pub fn passed(&self) -> bool {
        self.missing_keys.is_empty()
            && self.local_norm_failures.is_empty()
            && self.max_deviation <= self.tolerance
    }
}

/// Checks the per-key norm condition and orthonormality of the interior
/// columns of `U` on the given truncation.
///
/// With [`BasisKind::Window`](crate::analysis::BasisKind::Window) every configuration inside the window is
/// checked; with [`BasisKind::Reachable`](crate::analysis::BasisKind::Reachable) only the configurations reachable
/// from the seeds, which is what the dynamics from those seeds depend on.
pub fn validate_unitarity(spec: &MachineSpec, truncation: &Truncation, tol: f64) -> Result<UnitarityReport> {
    let missing_keys = spec.missing_keys();
    let local_norm_failures: Vec<(RuleKey, f64)> = spec
        .rules()
        .iter()
        .map(|(k, ts)| (*k, ts.iter().map(|t| t.amp.norm_sqr()).sum::<f64>()))
        .filter(|(_, n)| (n - 1.0).abs() > tol)
        .collect();
    if !missing_keys.is_empty() {
        return Ok(UnitarityReport {
            tolerance: tol,
            missing_keys,
            local_norm_failures,
            columns_checked: 0,
            max_deviation: f64::NAN,
            worst_pair: None,
        });
    }
    let model = build_truncated(spec, truncation)?;
    let gram = model.interior_gram_deviation();
    Ok(UnitarityReport {
        tolerance: tol,
        missing_keys,
        local_norm_failures,
        columns_checked: gram.columns_checked,
        max_deviation: gram.max_deviation,
        worst_pair: gram.worst.map(|(a, b, d)| (model.basis()[a].clone(), model.basis()[b].clone(), d)),
    })
}
