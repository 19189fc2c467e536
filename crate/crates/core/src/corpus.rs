//! Seeded random machines that entangle the halted and running sectors, and
//! random initial states for them.
//!
//! A running machine always writes the same non-blank symbol and steps
//! right, so the tape records how long the machine ran before it halted.
//! From the
//! initial states produced here (head at 0, non-blank cells only to the
//! left) distinct halting times therefore leave distinct tapes. That is
//! what keeps `U` an isometry on the reachable configurations even though
//! running configurations feed into the halted sector. Each step out of a
//! running configuration is one column of a random isometry, so the machine
//! halts at a random time with a random output. Halted configurations keep
//! their tape and step right while a random unitary mixes the internal
//! state.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::analysis::Truncation;
use crate::configuration::Configuration;
use crate::error::Result;
use crate::machine::{validate_halt_preservation, validate_unitarity, Direction, MachineSpec, RuleKey, Transition};
use crate::state_vector::StateVector;
use crate::tape::{Symbol, Tape};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorpusParams {
    pub max_states: usize,
    pub max_symbols: usize,
    /// Extra target rows beyond the state count in each running column.
    pub max_extra_targets: usize,
}

impl Default for CorpusParams {
    fn default() -> Self {
        CorpusParams {
            max_states: 4,
            max_symbols: 3,
            max_extra_targets: 2,
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// `cols` orthonormal vectors of length `dim` (Gram-Schmidt on Gaussian
/// vectors), returned as columns.
fn random_isometry<R: Rng + ?Sized>(dim: usize, cols: usize, rng: &mut R) -> Vec<Vec<Complex64>> {
    assert!(cols <= dim);
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    while out.len() < cols {
        let mut v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        for u in &out {
            let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(u).for_each(|(x, a)| *x -= proj * a);
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-6 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= n);
        out.push(v);
    }
    out
}

/// One random machine with `2..=max_states` states and `2..=max_symbols`
/// symbols.
pub fn random_machine<R: Rng + ?Sized>(params: CorpusParams, rng: &mut R) -> Result<MachineSpec> {
    let states = rng.random_range(2..=params.max_states.max(2));
    let symbols = rng.random_range(2..=params.max_symbols.max(2));
    let mut rules: BTreeMap<RuleKey, Vec<Transition>> = BTreeMap::new();

    // Target rows for running columns: (write, halted, state). Running
    // targets all write the same non-blank symbol, which keeps the number of
    // reachable tapes linear in the horizon; halting targets may write any
    // non-blank symbol.
    let running_write = Symbol(rng.random_range(1..symbols) as u16);
    let mut rows: Vec<(Symbol, bool, usize)> = (0..states).map(|q| (running_write, false, q)).collect();
    for s in 1..symbols {
        for q in 0..states {
            rows.push((Symbol(s as u16), true, q));
        }
    }
    rows.shuffle(rng);
    let want = (states + rng.random_range(1..=params.max_extra_targets.max(1))).min(rows.len());
    let mut chosen: Vec<_> = rows[..want].to_vec();
    if !chosen.iter().any(|r| r.1) {
        let pick = rows.iter().find(|r| r.1).copied().expect("halting row");
        chosen[0] = pick;
    }
    if !chosen.iter().any(|r| !r.1) {
        let pick = rows.iter().find(|r| !r.1).copied().expect("running row");
        chosen[0] = pick;
    }
    chosen.sort();
    let columns = random_isometry(chosen.len(), states, rng);
    for (p, col) in columns.iter().enumerate() {
        let targets = chosen
            .iter()
            .zip(col)
            .map(|(&(write, halted, state), &amp)| Transition {
                write,
                halted,
                state,
                dir: Direction::Right,
                amp,
            })
            .collect();
        rules.insert(RuleKey::new(p, false, Symbol::BLANK), targets);
    }

    // Running keys on non-blank cells are never read from the states this
    // module generates; give them a permutation so the table is total.
    for p in 0..states {
        for s in 1..symbols {
            rules.insert(
                RuleKey::new(p, false, Symbol(s as u16)),
                vec![Transition {
                    write: Symbol(s as u16),
                    halted: false,
                    state: p,
                    dir: Direction::Right,
                    amp: Complex64::new(1.0, 0.0),
                }],
            );
        }
    }

    // Halted keys: a state unitary per read symbol, tape untouched.
    for s in 0..symbols {
        let w = random_isometry(states, states, rng);
        for (p, col) in w.iter().enumerate() {
            let targets = col
                .iter()
                .enumerate()
                .map(|(q, &amp)| Transition {
                    write: Symbol(s as u16),
                    halted: true,
                    state: q,
                    dir: Direction::Right,
                    amp,
                })
                .collect();
            rules.insert(RuleKey::new(p, true, Symbol(s as u16)), targets);
        }
    }
    MachineSpec::new(symbols, states, 0, rules)
}

/// Normalized superposition of one to three configurations with the head
/// at 0, random state and halt flag, and random symbols on cells -2 and -1.
pub fn random_initial_state<R: Rng + ?Sized>(spec: &MachineSpec, rng: &mut R) -> StateVector {
    loop {
        let terms = rng.random_range(1..=3);
        let psi = StateVector::from_terms((0..terms).map(|_| {
            let mut tape = Tape::empty(spec.blank());
            for i in -2..0 {
                tape = tape.write(i, Symbol(rng.random_range(0..spec.alphabet_size()) as u16));
            }
            let config = Configuration::new(rng.random_range(0..spec.state_count()), 0, tape, rng.random_bool(0.3));
            (config, gaussian(rng))
        }));
        if let Ok(n) = psi.normalized() {
            return n;
        }
    }
}

/// A machine together with the initial states it is tested on.
#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub spec: MachineSpec,
    pub initial_states: Vec<StateVector>,
}

/// Seeds of the truncation used to validate a corpus entry.
pub fn seeds(initial_states: &[StateVector]) -> Vec<Configuration> {
    let mut out: Vec<Configuration> = initial_states.iter().flat_map(|s| s.configurations().cloned()).collect();
    out.sort();
    out.dedup();
    out
}

/// `machines` validated machines with `states_per_machine` initial states
/// each, reproducible from `seed`. Every machine passes halt preservation
/// and is an isometry on the configurations its initial states reach within
/// `horizon` steps.
pub fn corpus(seed: u64, machines: usize, states_per_machine: usize, horizon: usize) -> Result<Vec<CorpusEntry>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(machines);
    while out.len() < machines {
        let spec = random_machine(CorpusParams::default(), &mut rng)?;
        let initial_states: Vec<StateVector> =
            (0..states_per_machine).map(|_| random_initial_state(&spec, &mut rng)).collect();
        if !validate_halt_preservation(&spec).passed() {
            continue;
        }
        let trunc = Truncation::reachable(seeds(&initial_states), horizon);
        if !validate_unitarity(&spec, &trunc, 1e-12)?.passed() {
            continue;
        }
        out.push(CorpusEntry { spec, initial_states });
    }
    Ok(out)
}
