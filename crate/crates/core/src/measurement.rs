//! Projective measurements of the halt flag and the tape, the monitored halt
//! protocol, and exact output distributions with and without monitoring.
//!
//! Only the halt flag and the tape string are ever measured; nothing here
//! measures another function of the tape.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::evolution::{project_halt, step};
use crate::machine::MachineSpec;
use crate::state_vector::StateVector;
use crate::tape::Label;

/// Norm of each tape sector of `psi`, in label order.
pub fn tape_weights(psi: &StateVector) -> Result<BTreeMap<Label, f64>> {
    let mut out = BTreeMap::new();
    for (c, a) in psi.iter() {
        *out.entry(c.tape_label()?).or_insert(0.0) += a.norm_sqr();
    }
    Ok(out)
}

fn restrict_to_label(psi: &StateVector, label: Label) -> StateVector {
    psi.filter(|c| c.tape_label().map(|l| l == label).unwrap_or(false))
}

/// Measures the halt flag. Returns the outcome and the renormalized
/// post-measurement state.
pub fn measure_halt<R: Rng + ?Sized>(psi: &StateVector, rng: &mut R) -> Result<(bool, StateVector)> {
    let total = psi.norm_sq();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let halted = project_halt(psi, true);
    let p1 = halted.norm_sq() / total;
    let u: f64 = rng.random();
    if u < p1 {
        Ok((true, halted.normalized()?))
    } else {
        Ok((false, project_halt(psi, false).normalized()?))
    }
}

/// Measures the tape string. Returns the label and the renormalized
/// post-measurement state.
pub fn measure_tape<R: Rng + ?Sized>(psi: &StateVector, rng: &mut R) -> Result<(Label, StateVector)> {
    let weights = tape_weights(psi)?;
    let total: f64 = weights.values().sum();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = *weights.keys().next_back().expect("non-empty");
    for (&label, &w) in &weights {
        acc += w;
        if u < acc {
            chosen = label;
            break;
        }
    }
    Ok((chosen, restrict_to_label(psi, chosen).normalized()?))
}

/// When the halt flag is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Schedule {
    /// Also read the flag at time 0, before the first step.
    pub measure_at_start: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { measure_at_start: true }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeRecord {
    /// Step at which the flag first read 1, `None` if it never did.
    pub halted_at: Option<usize>,
    /// Measured tape label; present exactly when `halted_at` is.
    pub output: Option<Label>,
    pub final_state: StateVector,
}

/// Runs the halt scheme: step, read the flag, and on the first 1 read the
/// tape and stop.
pub fn run_monitored<R: Rng + ?Sized>(
    spec: &MachineSpec,
    psi0: &StateVector,
    horizon: usize,
    schedule: Schedule,
    rng: &mut R,
) -> Result<OutcomeRecord> {
    let mut psi = psi0.clone();
    for k in 0..=horizon {
        if k > 0 {
            psi = step(spec, &psi)?;
        }
        if k == 0 && !schedule.measure_at_start {
            continue;
        }
        let (flag, post) = measure_halt(&psi, rng)?;
        psi = post;
        if flag {
            let (label, post) = measure_tape(&psi, rng)?;
            return Ok(OutcomeRecord {
                halted_at: Some(k),
                output: Some(label),
                final_state: post,
            });
        }
    }
    Ok(OutcomeRecord {
        halted_at: None,
        output: None,
        final_state: psi,
    })
}

/// Output probabilities plus the mass that has not halted.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Distribution {
    pub entries: BTreeMap<Label, f64>,
    pub residual: f64,
}

impl Distribution {
    pub fn probability(&self, label: Label) -> f64 {
        self.entries.get(&label).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum::<f64>() + self.residual
    }
}

/// `terms[K][j] = ||P Q_j (U P^perp)^K psi||^2`, the probability of first
/// reading the flag as 1 at step `K` with output `j`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MonitoredTerms {
    pub terms: Vec<BTreeMap<Label, f64>>,
    pub residual: f64,
}

impl MonitoredTerms {
    pub fn distribution(&self) -> Distribution {
        let mut entries: BTreeMap<Label, f64> = BTreeMap::new();
        for row in &self.terms {
            for (&l, &p) in row {
                *entries.entry(l).or_insert(0.0) += p;
            }
        }
        Distribution {
            entries,
            residual: self.residual,
        }
    }

    /// Probability that the flag first reads 1 at step `k`.
    pub fn halting_probability(&self, k: usize) -> f64 {
        self.terms.get(k).map_or(0.0, |row| row.values().sum())
    }
}

pub fn monitored_terms(spec: &MachineSpec, psi0: &StateVector, horizon: usize, schedule: Schedule) -> Result<MonitoredTerms> {
    let mut terms = Vec::with_capacity(horizon + 1);
    let mut running = psi0.clone();
    for k in 0..=horizon {
        if k > 0 {
            running = step(spec, &running)?;
        }
        if k == 0 && !schedule.measure_at_start {
            terms.push(BTreeMap::new());
            continue;
        }
        terms.push(tape_weights(&project_halt(&running, true))?);
        running = project_halt(&running, false);
    }
    Ok(MonitoredTerms {
        terms,
        residual: running.norm_sq(),
    })
}

/// Output distribution when the flag is read after every step.
pub fn monitored_distribution(spec: &MachineSpec, psi0: &StateVector, horizon: usize) -> Result<Distribution> {
    Ok(monitored_terms(spec, psi0, horizon, Schedule::default())?.distribution())
}

/// Output distribution of a single measurement after `horizon` steps.
pub fn unmonitored_distribution(spec: &MachineSpec, psi0: &StateVector, horizon: usize) -> Result<Distribution> {
    let phi = crate::evolution::evolve(spec, psi0, horizon)?;
    Ok(Distribution {
        entries: tape_weights(&project_halt(&phi, true))?,
        residual: project_halt(&phi, false).norm_sq(),
    })
}

/// Which row of a comparison a difference belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Output(Label),
    NotHalted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub outcome: Outcome,
    pub a: f64,
    pub b: f64,
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub max_diff: f64,
    pub worst: Option<Outcome>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Row-by-row comparison over the union of labels plus the residual row.
pub fn compare_distributions(a: &Distribution, b: &Distribution, tol: f64) -> Comparison {
    let mut labels: Vec<Label> = a.entries.keys().chain(b.entries.keys()).copied().collect();
    labels.sort();
    labels.dedup();
    let mut rows: Vec<ComparisonRow> = labels
        .into_iter()
        .map(|l| {
            let (pa, pb) = (a.probability(l), b.probability(l));
            ComparisonRow {
                outcome: Outcome::Output(l),
                a: pa,
                b: pb,
                diff: (pa - pb).abs(),
            }
        })
        .collect();
    if a.residual != 0.0 || b.residual != 0.0 {
        rows.push(ComparisonRow {
            outcome: Outcome::NotHalted,
            a: a.residual,
            b: b.residual,
            diff: (a.residual - b.residual).abs(),
        });
    }
    let mut max_diff = 0.0;
    let mut worst = None;
    for r in &rows {
        if r.diff > max_diff {
            max_diff = r.diff;
            worst = Some(r.outcome);
        }
    }
    Comparison {
        passed: max_diff <= tol,
        rows,
        max_diff,
        worst,
        tolerance: tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness-of-fit of observed counts against expected
/// probabilities. Categories with zero expected probability must have zero
/// counts, otherwise the statistic is infinite.
pub fn chi_squared_test(observed: &[u64], expected: &[f64]) -> ChiSquaredTest {
    assert_eq!(observed.len(), expected.len());
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return ChiSquaredTest {
            statistic: 0.0,
            dof: expected.iter().filter(|p| **p > 0.0).count().saturating_sub(1),
            p_value: 1.0,
        };
    }
    let mut statistic = 0.0;
    let mut categories = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        if p <= 0.0 {
            if o > 0 {
                statistic = f64::INFINITY;
            }
            continue;
        }
        categories += 1;
        let e = p * n as f64;
        statistic += (o as f64 - e).powi(2) / e;
    }
    let dof = categories.saturating_sub(1);
    let p_value = if n == 0 || dof == 0 {
        if statistic.is_finite() { 1.0 } else { 0.0 }
    } else if !statistic.is_finite() {
        0.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    ChiSquaredTest {
        statistic,
        dof,
        p_value,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSummary {
    pub seed: u64,
    pub runs: u64,
    pub horizon: usize,
    pub output_counts: BTreeMap<Label, u64>,
    pub not_halted: u64,
    pub halting_step_counts: BTreeMap<usize, u64>,
    pub expected: Distribution,
    pub chi_squared: ChiSquaredTest,
}

/// Repeats [`run_monitored`] `runs` times from one ChaCha20 stream seeded
/// with `seed`, and tests the output frequencies against
/// [`monitored_distribution`].
pub fn sample_monitored(spec: &MachineSpec, psi0: &StateVector, horizon: usize, runs: u64, seed: u64) -> Result<SampleSummary> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut output_counts: BTreeMap<Label, u64> = BTreeMap::new();
    let mut halting_step_counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut not_halted = 0u64;
    for _ in 0..runs {
        let rec = run_monitored(spec, psi0, horizon, Schedule::default(), &mut rng)?;
        match (rec.halted_at, rec.output) {
            (Some(k), Some(l)) => {
                *output_counts.entry(l).or_insert(0) += 1;
                *halting_step_counts.entry(k).or_insert(0) += 1;
            }
            _ => not_halted += 1,
        }
    }
    let expected = monitored_distribution(spec, psi0, horizon)?;
    let mut labels: Vec<Label> = expected.entries.keys().chain(output_counts.keys()).copied().collect();
    labels.sort();
    labels.dedup();
    let mut observed: Vec<u64> = labels.iter().map(|l| output_counts.get(l).copied().unwrap_or(0)).collect();
    let mut probs: Vec<f64> = labels.iter().map(|l| expected.probability(*l)).collect();
    observed.push(not_halted);
    probs.push(expected.residual);
    let chi_squared = chi_squared_test(&observed, &probs);
    Ok(SampleSummary {
        seed,
        runs,
        horizon,
        output_counts,
        not_halted,
        halting_step_counts,
        expected,
        chi_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configuration::Configuration;
    use crate::machine::parse_machine;
    use crate::tape::{Symbol, Tape};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn cfg(state: usize, tape: Tape, halted: bool) -> Configuration {
        Configuration::new(state, 0, tape, halted)
    }

    fn one() -> Tape {
        Tape::from_cells(Symbol::BLANK, [(0, Symbol(1))])
    }

    #[test]
    fn measure_halt_probabilities_and_collapse() {
        let a = cfg(0, Tape::default(), false);
        let b = cfg(1, one(), true);
        let psi = StateVector::from_terms([(a.clone(), c(0.8)), (b.clone(), c(0.6))]);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n = 20_000;
        let mut ones = 0;
        for _ in 0..n {
            let (bit, post) = measure_halt(&psi, &mut rng).unwrap();
            if bit {
                ones += 1;
                assert_eq!(post, StateVector::basis(b.clone()));
            } else {
                assert_eq!(post, StateVector::basis(a.clone()));
            }
        }
        let f = ones as f64 / n as f64;
        let sigma = (0.36f64 * 0.64 / n as f64).sqrt();
        assert!((f - 0.36).abs() < 4.0 * sigma, "{f}");
    }

    #[test]
    fn measure_halt_on_running_state_is_certain() {
        let psi = StateVector::from_terms([(cfg(0, Tape::default(), false), c(0.6)), (cfg(1, one(), false), c(0.8))]);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (bit, post) = measure_halt(&psi, &mut rng).unwrap();
            assert!(!bit);
            assert!(post.max_abs_diff(&psi) < 1e-15);
        }
        assert_eq!(measure_halt(&StateVector::zero(), &mut rng), Err(Error::ZeroNorm));
    }

    #[test]
    fn measure_tape_single_and_even() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let single = StateVector::basis(cfg(0, one(), true));
        let (l, _) = measure_tape(&single, &mut rng).unwrap();
        assert_eq!(l, one().label().unwrap());

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let even = StateVector::from_terms([(cfg(0, one(), true), c(r)), (cfg(0, Tape::default(), true), c(r))]);
        let n = 20_000;
        let hits = (0..n)
            .filter(|_| measure_tape(&even, &mut rng).unwrap().0 == Label::BLANK_TAPE)
            .count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 4.0 * sigma);
    }

    fn halts_at_one() -> MachineSpec {
        parse_machine(
            "qtm 1\nalphabet 2\nstates 1\ninitial 0\n\
             rule 0 0 0 -> 1 1 0 R 1 0\nrule 0 0 1 -> 1 1 0 R 1 0\n\
             rule 0 1 0 -> 0 1 0 R 1 0\nrule 0 1 1 -> 1 1 0 R 1 0\n",
        )
        .unwrap()
    }

    #[test]
    fn deterministic_halt_at_step_one() {
        let spec = halts_at_one();
        let psi = StateVector::basis(spec.start_configuration(Tape::default()));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..50 {
            let rec = run_monitored(&spec, &psi, 5, Schedule::default(), &mut rng).unwrap();
            assert_eq!(rec.halted_at, Some(1));
            assert_eq!(rec.output, Some(one().label().unwrap()));
        }
        let rec = run_monitored(&spec, &psi, 0, Schedule::default(), &mut rng).unwrap();
        assert_eq!(rec.halted_at, None);
        assert_eq!(rec.output, None);
    }

    #[test]
    fn halted_start_is_reported_at_zero() {
        let spec = halts_at_one();
        let psi = StateVector::basis(cfg(0, one(), true));
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let rec = run_monitored(&spec, &psi, 0, Schedule::default(), &mut rng).unwrap();
        assert_eq!(rec.halted_at, Some(0));
        let late = run_monitored(&spec, &psi, 3, Schedule { measure_at_start: false }, &mut rng).unwrap();
        assert_eq!(late.halted_at, Some(1));
        for n in 0..6 {
            let d = monitored_distribution(&spec, &psi, n).unwrap();
            assert_eq!(d.entries, BTreeMap::from([(one().label().unwrap(), 1.0)]));
            let u = unmonitored_distribution(&spec, &psi, n).unwrap();
            assert_eq!(u.entries, d.entries);
        }
    }

    #[test]
    fn unmonitored_at_zero_steps() {
        let spec = halts_at_one();
        let psi = StateVector::basis(spec.start_configuration(Tape::default()));
        let d = unmonitored_distribution(&spec, &psi, 0).unwrap();
        assert!(d.entries.is_empty());
        assert_eq!(d.residual, 1.0);
    }

    #[test]
    fn comparison_reports_worst_label() {
        let a = Distribution {
            entries: BTreeMap::from([(Label(1), 0.5), (Label(26), 0.5)]),
            residual: 0.0,
        };
        let same = compare_distributions(&a, &a, 1e-10);
        assert!(same.passed);
        assert_eq!(same.max_diff, 0.0);

        let mut b = a.clone();
        b.entries.insert(Label(26), 0.499);
        b.residual = 0.001;
        let cmp = compare_distributions(&a, &b, 1e-10);
        assert!(!cmp.passed);
        assert!((cmp.max_diff - 1e-3).abs() < 1e-12);
        assert_eq!(cmp.worst, Some(Outcome::Output(Label(26))));
    }

    #[test]
    fn chi_squared_edge_cases() {
        let t = chi_squared_test(&[50, 50], &[0.5, 0.5]);
        assert_eq!(t.statistic, 0.0);
        assert!((t.p_value - 1.0).abs() < 1e-12);
        let t = chi_squared_test(&[0, 0], &[0.5, 0.5]);
        assert_eq!(t.p_value, 1.0);
        let t = chi_squared_test(&[1, 9], &[0.0, 1.0]);
        assert_eq!(t.p_value, 0.0);
        let t = chi_squared_test(&[5980, 4020], &[0.6, 0.4]);
        assert!((t.statistic - (400.0 / 6000.0 + 400.0 / 4000.0)).abs() < 1e-9);
    }
}
