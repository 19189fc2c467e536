//! Machines shipped with the crate, and the outputs they are known to
//! produce.

use crate::error::Result;
use crate::machine::{parse_machine, MachineSpec};
use crate::tape::{Label, Symbol, Tape};

pub const TWO_PHASE: &str = include_str!("../machines/two_phase.qtm");
pub const PERMUTATION: &str = include_str!("../machines/permutation.qtm");
pub const HALT_VIOLATOR: &str = include_str!("../machines/halt_violator.qtm");
pub const HADAMARD_WALK: &str = include_str!("../machines/hadamard_walk.qtm");

/// `(name, source)` for every bundled machine, halt violator last.
pub const BUNDLED: [(&str, &str); 4] = [
    ("two_phase", TWO_PHASE),
    ("permutation", PERMUTATION),
    ("hadamard_walk", HADAMARD_WALK),
    ("halt_violator", HALT_VIOLATOR),
];

/// Bundled machines that satisfy halt preservation.
pub fn well_formed() -> Vec<(&'static str, MachineSpec)> {
    BUNDLED
        .iter()
        .filter(|(name, _)| *name != "halt_violator")
        .map(|(name, text)| (*name, parse_machine(text).expect("bundled machine parses")))
        .collect()
}

pub fn load(name: &str) -> Option<Result<MachineSpec>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_machine(text))
}

/// Output of the `two_phase` branch that halts after one step.
pub fn two_phase_early_output() -> Label {
    Label::BLANK_TAPE
}

/// Output of the `two_phase` branch that halts after two steps: a 1 in
/// cell 0.
pub fn two_phase_late_output() -> Label {
    Tape::from_cells(Symbol::BLANK, [(0, Symbol(1))])
        .label()
        .expect("small tape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::validate_halt_preservation;

    #[test]
    fn bundled_machines_parse() {
        for (name, text) in BUNDLED {
            let spec = parse_machine(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(spec.missing_keys().is_empty(), "{name}");
        }
        let two = load("two_phase").unwrap().unwrap();
        assert_eq!((two.state_count(), two.alphabet_size()), (3, 2));
        assert!(load("nope").is_none());
    }

    #[test]
    fn only_the_violator_breaks_halt_preservation() {
        for (name, text) in BUNDLED {
            let report = validate_halt_preservation(&parse_machine(text).unwrap());
            assert_eq!(report.passed(), name != "halt_violator", "{name}");
        }
    }

    #[test]
    fn late_output_label() {
        assert_eq!(two_phase_late_output(), Label(26));
    }
}
