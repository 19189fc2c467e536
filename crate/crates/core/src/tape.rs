//! Tapes with canonical finite support, and the injective tape labels that
//! serve as eigenvalues of the tape observable.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index into a machine alphabet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol(pub u16);

impl Symbol {
    pub const BLANK: Symbol = Symbol(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A bi-infinite tape holding finitely many non-blank cells.
///
/// Cells that are not stored read as `blank`. No stored cell ever holds the
/// blank symbol, so two tapes describing the same string compare equal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tape {
    cells: BTreeMap<i64, Symbol>,
    blank: Symbol,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::empty(Symbol::BLANK)
    }
}

impl Tape {
    pub fn empty(blank: Symbol) -> Self {
        Tape {
            cells: BTreeMap::new(),
            blank,
        }
    }

    /// Builds a tape from `(cell, symbol)` pairs; later pairs win and blanks
    /// are dropped.
    pub fn from_cells<I>(blank: Symbol, cells: I) -> Self
    where
        I: IntoIterator<Item = (i64, Symbol)>,
    {
        let mut tape = Tape::empty(blank);
        for (i, s) in cells {
            tape.write_in_place(i, s);
        }
        tape
    }

    pub fn blank(&self) -> Symbol {
        self.blank
    }

    pub fn read(&self, i: i64) -> Symbol {
        self.cells.get(&i).copied().unwrap_or(self.blank)
    }

    /// Returns the tape with `symbol` written at cell `i`.
    pub fn write(&self, i: i64, symbol: Symbol) -> Tape {
        let mut out = self.clone();
        out.write_in_place(i, symbol);
        out
    }

    pub(crate) fn write_in_place(&mut self, i: i64, symbol: Symbol) {
        if symbol == self.blank {
            self.cells.remove(&i);
        } else {
            self.cells.insert(i, symbol);
        }
    }

    pub fn is_blank(&self) -> bool {
        self.cells.is_empty()
    }

    /// Stored (non-blank) cells in increasing index order.
    pub fn cells(&self) -> impl Iterator<Item = (i64, Symbol)> + '_ {
        self.cells.iter().map(|(&i, &s)| (i, s))
    }

    pub fn support_len(&self) -> usize {
        self.cells.len()
    }

    /// Smallest and largest non-blank cell, if any.
    pub fn span(&self) -> Option<(i64, i64)> {
        let lo = *self.cells.keys().next()?;
        let hi = *self.cells.keys().next_back()?;
        Some((lo, hi))
    }

    /// Largest `|i|` over the non-blank cells, 0 for the blank tape.
    pub fn support_radius(&self) -> i64 {
        self.span().map_or(0, |(lo, hi)| lo.abs().max(hi.abs()))
    }

    pub fn label(&self) -> Result<Label> {
        tape_label(self)
    }
}

impl fmt::Display for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cells.is_empty() {
            return write!(f, "{{}}");
        }
        write!(f, "{{")?;
        for (n, (i, s)) in self.cells().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}", i, s)?;
        }
        write!(f, "}}")
    }
}

/// Positive integer identifying a tape string; the eigenvalue attached to
/// that string by the tape observable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label(pub u128);

impl Label {
    pub const BLANK_TAPE: Label = Label(1);

    pub fn get(self) -> u128 {
        self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

struct BitWriter {
    acc: u128,
}

impl BitWriter {
    fn push(&mut self, bit: bool) -> Result<()> {
        if self.acc >> 127 != 0 {
            return Err(Error::LabelCapacity);
        }
        self.acc = (self.acc << 1) | bit as u128;
        Ok(())
    }

    /// Elias gamma code of `n >= 1`.
    fn gamma(&mut self, n: u128) -> Result<()> {
        debug_assert!(n >= 1);
        let width = 128 - n.leading_zeros();
        for _ in 1..width {
            self.push(false)?;
        }
        for b in (0..width).rev() {
            self.push((n >> b) & 1 == 1)?;
        }
        Ok(())
    }
}

fn zigzag(i: i64) -> u128 {
    if i >= 0 {
        2 * i as u128
    } else {
        2 * (-(i as i128)) as u128 - 1
    }
}

/// Injective positive label of a tape string.
///
/// The blank tape gets 1. Any other tape is written as a bit string: a
/// leading 1, the gamma code of the zigzagged leftmost non-blank index, then
/// the gamma code of `symbol + 1` for every cell of the span. Gamma codes are
/// prefix-free, so the string (and hence the integer) determines the tape.
/// Fails with [`Error::LabelCapacity`] once the string needs more than 128
/// bits.
pub fn tape_label(tape: &Tape) -> Result<Label> {
    let Some((lo, hi)) = tape.span() else {
        return Ok(Label::BLANK_TAPE);
    };
    let mut w = BitWriter { acc: 1 };
    w.gamma(zigzag(lo) + 1)?;
    for i in lo..=hi {
        w.gamma(tape.read(i).0 as u128 + 1)?;
    }
    Ok(Label(w.acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    const A: Symbol = Symbol(1);
    const B: Symbol = Symbol(2);

    #[test]
    fn read_empty_and_outside_support() {
        let t = Tape::default();
        assert_eq!(t.read(0), Symbol::BLANK);
        let t = t.write(0, A);
        assert_eq!(t.read(0), A);
        assert_eq!(t.read(7), Symbol::BLANK);
    }

    #[test]
    fn write_canonicalizes_blank() {
        let t = Tape::default().write(3, Symbol::BLANK);
        assert_eq!(t, Tape::default());
        let t = Tape::from_cells(Symbol::BLANK, [(0, A)]);
        assert_eq!(t.write(0, B), Tape::from_cells(Symbol::BLANK, [(0, B)]));
        assert_eq!(t.write(1, A), Tape::from_cells(Symbol::BLANK, [(0, A), (1, A)]));
        assert_eq!(t.write(0, Symbol::BLANK), Tape::default());
    }

    #[test]
    fn label_of_blank_tape_is_one() {
        assert_eq!(tape_label(&Tape::default()).unwrap(), Label(1));
    }

    #[test]
    fn label_is_deterministic() {
        let t = Tape::from_cells(Symbol::BLANK, [(-3, A), (2, B)]);
        assert_eq!(t.label().unwrap(), t.clone().label().unwrap());
    }

    #[test]
    fn labels_injective_on_small_window() {
        // Every tape over {-2..2} with three symbols.
        let mut seen: HashMap<Label, Tape> = HashMap::new();
        for code in 0..3u32.pow(5) {
            let mut c = code;
            let mut tape = Tape::default();
            for i in -2..=2 {
                tape = tape.write(i, Symbol((c % 3) as u16));
                c /= 3;
            }
            let label = tape.label().unwrap();
            assert!(label.0 >= 1);
            if let Some(prev) = seen.insert(label, tape.clone()) {
                assert_eq!(prev, tape, "label collision");
            }
        }
        assert_eq!(seen.len(), 243);
    }

    #[test]
    fn overflow_reports_capacity_error() {
        let tape = Tape::from_cells(Symbol::BLANK, (0..60).map(|i| (i, B)));
        assert_eq!(tape.label(), Err(Error::LabelCapacity));
    }

    #[test]
    fn zigzag_is_injective_near_zero() {
        let v: Vec<u128> = (-3..=3).map(zigzag).collect();
        assert_eq!(v, vec![5, 3, 1, 0, 2, 4, 6]);
    }
}
