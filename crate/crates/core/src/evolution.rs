//! One application of the time-evolution operator to sparse states, and the
//! spectral projections of the halt flag and the tape observable.

use crate::error::{Error, Result};
use crate::machine::{MachineSpec, RuleKey};
use crate::state_vector::StateVector;
use crate::tape::Label;

/// Applies `U` once.
///
/// Each term `a|q, h, T, n0>` spreads `a * c` onto
/// `|q', h + d, T with tau at h, n0'>` for every branch of the rule keyed by
/// `(q, n0, T(h))`. Terms are visited in configuration order and branches in
/// rule order, so the floating-point sums are reproducible.
pub fn step(spec: &MachineSpec, psi: &StateVector) -> Result<StateVector> {
    let mut out = StateVector::zero();
    for (config, amp) in psi.iter() {
        let key = RuleKey::new(config.state, config.halted, config.scanned());
        let targets = spec.rule(&key).ok_or(Error::MissingRule(key))?;
        for t in targets {
            let mut next = config.clone();
            next.tape.write_in_place(config.head, t.write);
            next.head = config.head + t.dir.offset();
            next.state = t.state;
            next.halted = t.halted;
            out.accumulate(next, amp * t.amp);
        }
    }
    out.prune();
    Ok(out)
}

/// `U^n psi`.
pub fn evolve(spec: &MachineSpec, psi: &StateVector, n: usize) -> Result<StateVector> {
    let mut cur = psi.clone();
    for _ in 0..n {
        cur = step(spec, &cur)?;
    }
    Ok(cur)
}

/// `P` for `halted = true`, `P^perp` otherwise. Not renormalized.
pub fn project_halt(psi: &StateVector, halted: bool) -> StateVector {
    psi.filter(|c| c.halted == halted)
}

/// `Q_j` for the tape string labelled `label`. Not renormalized.
pub fn project_tape(psi: &StateVector, label: Label) -> Result<StateVector> {
    // Label first so an over-capacity tape surfaces as an error.
    let mut keep = Vec::with_capacity(psi.len());
    for c in psi.configurations() {
        keep.push(c.tape_label()? == label);
    }
    let mut flags = keep.into_iter();
    Ok(psi.filter(|_| flags.next().unwrap_or(false)))
}
