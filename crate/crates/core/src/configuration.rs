use std::fmt;

use crate::tape::{Label, Symbol, Tape};
use crate::error::Result;

/// Classical snapshot of the machine together with the halt bit: one vector
/// of the computational basis.
///
/// Field order fixes the `Ord` used for deterministic aggregation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub state: usize,
    pub head: i64,
    pub tape: Tape,
    pub halted: bool,
}

impl Configuration {
    pub fn new(state: usize, head: i64, tape: Tape, halted: bool) -> Self {
        Configuration {
            state,
            head,
            tape,
            halted,
        }
    }

    pub fn scanned(&self) -> Symbol {
        self.tape.read(self.head)
    }

    pub fn tape_label(&self) -> Result<Label> {
        self.tape.label()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "|q={} h={} T={} n0={}>",
            self.state, self.head, self.tape, self.halted as u8
        )
    }
}
