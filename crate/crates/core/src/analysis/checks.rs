use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::model::{dinner, dnorm_sq, snorm_sq, smax_abs, ssub, DVec, SVec, TruncatedModel};
use crate::error::{Error, Result};
use crate::evolution::evolve;
use crate::machine::MachineSpec;
use crate::measurement::{monitored_terms, MonitoredTerms, Schedule};
use crate::state_vector::StateVector;
use crate::tape::Label;

/// Largest deviation found per lemma, over columns and random vectors.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LemmaReport {
    pub trials: usize,
    pub max_steps: usize,
    /// `P Q_j U^K P Q_j = U^K P Q_j`.
    pub invariant_subspace: f64,
    /// `P Q_j U P Q_k = 0` for `k != j`.
    pub cross_tape: f64,
    /// `||P Q_j U psi||^2 = ||P Q_j psi||^2 + ||P Q_j U P^perp psi||^2`.
    pub pythagoras: f64,
    /// `<U P Q_j psi | P Q_j U P^perp psi> = 0`.
    pub orthogonality: f64,
    /// `||P Q_j U^N psi||^2 = sum_K ||P Q_j (U P^perp)^K psi||^2`.
    pub telescoping: f64,
    pub columns_checked: usize,
}

impl LemmaReport {
    pub fn max_deviation(&self) -> f64 {
        [
            self.invariant_subspace,
            self.cross_tape,
            self.pythagoras,
            self.orthogonality,
            self.telescoping,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> [(&'static str, f64); 5] {
        [
            ("invariant-subspace", self.invariant_subspace),
            ("cross-tape", self.cross_tape),
            ("pythagoras", self.pythagoras),
            ("orthogonality", self.orthogonality),
            ("telescoping", self.telescoping),
        ]
    }
}

fn labels_of(model: &TruncatedModel, vs: &[&DVec]) -> Vec<Label> {
    let mut out: Vec<Label> = vs.iter().flat_map(|v| model.halted_labels_in(v)).collect();
    out.sort();
    out.dedup();
    out
}

/// Runs the lemmas behind the monitoring theorem: column checks on every
/// exact halted column, then `trials` random unit vectors on exact columns.
pub fn lemma_suite<R: Rng + ?Sized>(model: &TruncatedModel, trials: usize, rng: &mut R) -> LemmaReport {
    let mut report = LemmaReport {
        trials,
        max_steps: model.max_steps(),
        ..LemmaReport::default()
    };

    for c in 0..model.dim() {
        if !model.is_halted(c) || model.forward_margin(c) == 0 {
            continue;
        }
        report.columns_checked += 1;
        let label = model.label(c);
        let depth = model.forward_margin(c).min(model.max_steps());
        let mut v: SVec = [(c, Complex64::new(1.0, 0.0))].into_iter().collect();
        for k in 1..=depth {
            v = model.sparse_u(&v);
            let inside = model.sparse_output(&v, label);
            let dev = smax_abs(&ssub(&v, &inside));
            report.invariant_subspace = report.invariant_subspace.max(dev);
            if k == 1 {
                let other = model.sparse_filter(&v, |i| model.is_halted(i) && model.label(i) != label);
                report.cross_tape = report.cross_tape.max(smax_abs(&other));
            }
        }
    }

    let one_step = model.forward_exact(1);
    for _ in 0..trials {
        let Some(psi) = model.random_unit_vector(&one_step, rng) else {
            break;
        };
        let u_psi = model.apply_u(&psi);
        let u_perp = model.apply_u(&model.project_halt(&psi, false));
        for j in labels_of(model, &[&psi, &u_psi]) {
            let lhs = dnorm_sq(&model.project_output(&u_psi, j));
            let a = model.project_output(&psi, j);
            let b = model.project_output(&u_perp, j);
            report.pythagoras = report.pythagoras.max((lhs - dnorm_sq(&a) - dnorm_sq(&b)).abs());
            let ortho = dinner(&model.apply_u(&a), &b).norm();
            report.orthogonality = report.orthogonality.max(ortho);
        }

        for n in 1..=model.max_steps() {
            let support = model.forward_exact(n);
            let Some(psi) = model.random_unit_vector(&support, rng) else {
                break;
            };
            let direct = model.apply_u_pow(&psi, n);
            let mut phi = psi.clone();
            let mut sums: BTreeMap<Label, f64> = BTreeMap::new();
            for k in 0..=n {
                if k > 0 {
                    phi = model.apply_u(&model.project_halt(&phi, false));
                }
                for j in model.halted_labels_in(&phi) {
                    *sums.entry(j).or_insert(0.0) += dnorm_sq(&model.project_output(&phi, j));
                }
            }
            let mut labels: Vec<Label> = sums.keys().copied().chain(model.halted_labels_in(&direct)).collect();
            labels.sort();
            labels.dedup();
            for j in labels {
                let lhs = dnorm_sq(&model.project_output(&direct, j));
                let rhs = sums.get(&j).copied().unwrap_or(0.0);
                report.telescoping = report.telescoping.max((lhs - rhs).abs());
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq)]
pub struct TelescopingReport {
    pub horizon: usize,
    pub sparse: MonitoredTerms,
    /// Oracle values of `||P Q_j (U P^perp)^K psi||^2`.
    pub dense_terms: Vec<BTreeMap<Label, f64>>,
    pub dense_residual: f64,
    /// Oracle values of `||P Q_j U^N psi||^2`.
    pub dense_unmonitored: BTreeMap<Label, f64>,
    /// Worst term-by-term gap between the sparse and oracle computations.
    pub max_term_deviation: f64,
    /// Worst gap in the identity itself, on the oracle side.
    pub max_identity_deviation: f64,
}

impl TelescopingReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_term_deviation.max(self.max_identity_deviation)
    }
}

fn row_gap(a: &BTreeMap<Label, f64>, b: &BTreeMap<Label, f64>) -> f64 {
    a.keys()
        .chain(b.keys())
        .map(|l| (a.get(l).copied().unwrap_or(0.0) - b.get(l).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

/// Checks the telescoping identity term by term: every monitored term from
/// the sparse simulator against the oracle, and the oracle's sum against its
/// own single-measurement probability.
pub fn telescoping_check(
    spec: &MachineSpec,
    model: &TruncatedModel,
    psi0: &StateVector,
    horizon: usize,
) -> Result<TelescopingReport> {
    let psi = model.to_dense(psi0)?;
    let available = model.support_forward_margin(&psi);
    if available < horizon {
        return Err(Error::InsufficientDepth {
            required: horizon,
            available,
        });
    }
    let sparse = monitored_terms(spec, psi0, horizon, Schedule::default())?;

    let mut dense_terms = Vec::with_capacity(horizon + 1);
    let mut phi = psi.clone();
    for k in 0..=horizon {
        if k > 0 {
            phi = model.apply_u(&phi);
        }
        let row: BTreeMap<Label, f64> = model
            .halted_labels_in(&phi)
            .into_iter()
            .map(|j| (j, dnorm_sq(&model.project_output(&phi, j))))
            .collect();
        dense_terms.push(row);
        phi = model.project_halt(&phi, false);
    }
    let dense_residual = dnorm_sq(&phi);

    let direct = model.apply_u_pow(&psi, horizon);
    let dense_unmonitored: BTreeMap<Label, f64> = model
        .halted_labels_in(&direct)
        .into_iter()
        .map(|j| (j, dnorm_sq(&model.project_output(&direct, j))))
        .collect();

    let mut max_term_deviation: f64 = (sparse.residual - dense_residual).abs();
    for (s, d) in sparse.terms.iter().zip(&dense_terms) {
        max_term_deviation = max_term_deviation.max(row_gap(s, d));
    }

    let mut summed: BTreeMap<Label, f64> = BTreeMap::new();
    for row in &dense_terms {
        for (&j, &p) in row {
            *summed.entry(j).or_insert(0.0) += p;
        }
    }
    let max_identity_deviation = row_gap(&summed, &dense_unmonitored);

    Ok(TelescopingReport {
        horizon,
        sparse,
        dense_terms,
        dense_residual,
        dense_unmonitored,
        max_term_deviation,
        max_identity_deviation,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub max_steps: usize,
    pub columns_checked: usize,
    pub max_deviation: f64,
}

/// Sparse `evolve` against the oracle's `U^n e_c` for every column `c` and
/// every `n <= max_steps` the column's margin allows.
pub fn oracle_equivalence(spec: &MachineSpec, model: &TruncatedModel, max_steps: usize) -> Result<EquivalenceReport> {
    let mut report = EquivalenceReport {
        max_steps,
        ..EquivalenceReport::default()
    };
    for c in 0..model.dim() {
        let depth = model.forward_margin(c).min(max_steps);
        if depth == 0 {
            continue;
        }
        report.columns_checked += 1;
        let mut dense: SVec = [(c, Complex64::new(1.0, 0.0))].into_iter().collect();
        let mut sparse = StateVector::basis(model.basis()[c].clone());
        for _ in 0..depth {
            dense = model.sparse_u(&dense);
            sparse = evolve(spec, &sparse, 1)?;
            let mut gap: f64 = 0.0;
            for (i, v) in &dense {
                gap = gap.max((v - sparse.amplitude(&model.basis()[*i])).norm());
            }
            for (cfg, a) in sparse.iter() {
                if model.index_of(cfg).is_none_or(|i| !dense.contains_key(&i)) {
                    gap = gap.max(a.norm());
                }
            }
            // Mass that left the truncation would show up as a norm gap.
            gap = gap.max((snorm_sq(&dense) - sparse.norm_sq()).abs());
            report.max_deviation = report.max_deviation.max(gap);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_truncated, Truncation};
    use crate::configuration::Configuration;
    use crate::machine::parse_machine;
    use crate::tape::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn branching_halter() -> MachineSpec {
        // Halts at step 1 or 2 with equal weight; halted branches drift right.
        parse_machine(
            "qtm 1\nalphabet 2\nstates 3\ninitial 0\n\
             rule 0 0 0 -> 0 1 1 R 1/sqrt2 0\nrule 0 0 0 -> 1 0 2 R 1/sqrt2 0\n\
             rule 0 0 1 -> 1 0 0 R 1 0\nrule 1 0 0 -> 0 0 1 R 1 0\nrule 1 0 1 -> 1 0 1 R 1 0\n\
             rule 2 0 0 -> 0 1 1 R 1 0\nrule 2 0 1 -> 1 0 2 R 1 0\n\
             rule 0 1 0 -> 0 1 0 R 1 0\nrule 0 1 1 -> 1 1 0 R 1 0\nrule 1 1 0 -> 0 1 1 R 1 0\n\
             rule 1 1 1 -> 1 1 1 R 1 0\nrule 2 1 0 -> 0 1 2 R 1 0\nrule 2 1 1 -> 1 1 2 R 1 0\n",
        )
        .unwrap()
    }

    fn start(spec: &MachineSpec) -> Configuration {
        spec.start_configuration(Tape::default())
    }

    #[test]
    fn telescoping_on_branching_halter() {
        let spec = branching_halter();
        let model = build_truncated(&spec, &Truncation::reachable(vec![start(&spec)], 6)).unwrap();
        let psi = StateVector::basis(start(&spec));
        for n in 0..=6 {
            let r = telescoping_check(&spec, &model, &psi, n).unwrap();
            assert!(r.max_deviation() < 1e-12, "n={n}: {r:?}");
        }
        let r = telescoping_check(&spec, &model, &psi, 2).unwrap();
        assert!((r.dense_terms[1].values().sum::<f64>() - 0.5).abs() < 1e-12);
        assert!((r.dense_terms[2].values().sum::<f64>() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn telescoping_needs_depth() {
        let spec = branching_halter();
        let model = build_truncated(&spec, &Truncation::reachable(vec![start(&spec)], 3)).unwrap();
        let psi = StateVector::basis(start(&spec));
        let err = telescoping_check(&spec, &model, &psi, 4).unwrap_err();
        assert_eq!(err, Error::InsufficientDepth { required: 4, available: 3 });
    }

    #[test]
    fn lemmas_hold_on_reachable_span() {
        let spec = branching_halter();
        let model = build_truncated(&spec, &Truncation::reachable(vec![start(&spec)], 6)).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let r = lemma_suite(&model, 20, &mut rng);
        assert!(r.columns_checked > 0);
        assert!(r.max_deviation() < 1e-10, "{r:?}");
    }

    #[test]
    fn sparse_and_oracle_agree() {
        let spec = branching_halter();
        let model = build_truncated(&spec, &Truncation::reachable(vec![start(&spec)], 8)).unwrap();
        let r = oracle_equivalence(&spec, &model, 8).unwrap();
        assert!(r.columns_checked > 0);
        assert!(r.max_deviation < 1e-12);
    }
}
