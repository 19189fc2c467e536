//! Heisenberg-picture operators `O(N) = U^dag^N O U^N` and their spectral
//! projections `E_N(lambda_j) = U^dag^N P Q_j U^N`,
//! `E_N(0) = U^dag^N P^perp U^N`.
//!
//! Everything is applied column by column. A column `c` of an expression
//! with `k` factors of `U` or `U^dag` is exact when `margin(c) >= k`, so each
//! check only visits such columns and reports how many it found.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::model::{snorm_sq, smax_abs, ssub, SVec, TruncatedModel};
use super::PRODUCT_TOL;
use crate::error::{Error, Result};
use crate::machine::MachineSpec;
use crate::measurement::{compare_distributions, monitored_distribution, Distribution};
use crate::state_vector::StateVector;
use crate::tape::Label;

/// Largest model for which [`heisenberg_observable`] materializes a matrix.
pub const DENSE_CAP: usize = 2048;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn unit(c: usize) -> SVec {
    [(c, Complex64::new(1.0, 0.0))].into_iter().collect()
}

/// `E_n(lambda_label) x`.
pub fn e_label(model: &TruncatedModel, n: usize, label: Label, x: &SVec) -> SVec {
    let fwd = model.sparse_u_pow(x, n);
    model.sparse_u_dag_pow(&model.sparse_output(&fwd, label), n)
}

/// `E_n(0) x`.
pub fn e_zero(model: &TruncatedModel, n: usize, x: &SVec) -> SVec {
    let fwd = model.sparse_u_pow(x, n);
    model.sparse_u_dag_pow(&model.sparse_halt(&fwd, false), n)
}

/// `O(n) x`.
fn apply_observable(model: &TruncatedModel, n: usize, x: &SVec) -> SVec {
    let fwd = model.sparse_u_pow(x, n);
    let weighted: SVec = fwd.iter().map(|(i, v)| (*i, v * model.output_diagonal(*i))).collect();
    model.sparse_u_dag_pow(&weighted, n)
}

fn exact_columns(model: &TruncatedModel, steps: usize) -> Result<Vec<usize>> {
    let cols = model.mixed_exact(steps);
    if cols.is_empty() {
        return Err(Error::InsufficientDepth {
            required: steps,
            available: model.max_steps(),
        });
    }
    Ok(cols)
}

/// Materializes `O(n)` over the whole model. Columns with `margin < 2n`
/// carry truncation artifacts.
pub fn heisenberg_observable(model: &TruncatedModel, n: usize) -> Result<DenseMatrix> {
    if model.dim() > DENSE_CAP {
        return Err(Error::BasisOverflow { cap: DENSE_CAP });
    }
    let mut m = DenseMatrix::zeros(model.dim());
    for c in 0..model.dim() {
        for (r, v) in apply_observable(model, n, &unit(c)) {
            m.set(r, c, v);
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub n: usize,
    pub n_prime: usize,
    pub columns_checked: usize,
    /// Largest entry of `O(n) O(n') - O(n') O(n)`.
    pub max_entry: f64,
    pub worst_column: Option<String>,
}

/// Largest entry of `[O(n), O(n')]` over the exact columns.
pub fn qnd_check(model: &TruncatedModel, n: usize, n_prime: usize) -> Result<CommutatorReport> {
    let cols = exact_columns(model, 2 * (n + n_prime))?;
    let mut report = CommutatorReport {
        n,
        n_prime,
        columns_checked: cols.len(),
        max_entry: 0.0,
        worst_column: None,
    };
    if n == n_prime {
        return Ok(report);
    }
    for c in cols {
        let e = unit(c);
        let ab = apply_observable(model, n, &apply_observable(model, n_prime, &e));
        let ba = apply_observable(model, n_prime, &apply_observable(model, n, &e));
        let d = smax_abs(&ssub(&ab, &ba));
        if d > report.max_entry {
            report.max_entry = d;
            report.worst_column = Some(model.basis()[c].to_string());
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationsReport {
    pub n: usize,
    pub n_prime: usize,
    pub columns_checked: usize,
    /// `E_n(j) E_n'(k) = delta_jk E_n'(j)`.
    pub same_output: f64,
    /// `E_n(j) E_n'(0) = E_n(j) - E_n'(j)`.
    pub late_halt: f64,
    /// `E_n(0) E_n'(j) = 0`.
    pub no_unhalting: f64,
    /// `E_n(0) E_n'(0) = E_n(0)`.
    pub still_running: f64,
}

impl RelationsReport {
    pub fn max_deviation(&self) -> f64 {
        [self.same_output, self.late_halt, self.no_unhalting, self.still_running]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> [(&'static str, f64); 4] {
        [
            ("same-output", self.same_output),
            ("late-halt", self.late_halt),
            ("no-unhalting", self.no_unhalting),
            ("still-running", self.still_running),
        ]
    }
}

fn merged(a: Vec<Label>, b: Vec<Label>) -> Vec<Label> {
    let mut out: Vec<Label> = a.into_iter().chain(b).collect();
    out.sort();
    out.dedup();
    out
}

/// The four product relations between the spectral families of `O(n)` and
/// `O(n')`, for `n >= n'`, on every exact column.
pub fn projection_relations_check(model: &TruncatedModel, n: usize, n_prime: usize) -> Result<RelationsReport> {
    if n < n_prime {
        return Err(Error::InvalidArgument(format!("need n >= n', got n={n}, n'={n_prime}")));
    }
    let cols = exact_columns(model, 2 * (n + n_prime))?;
    let mut r = RelationsReport {
        n,
        n_prime,
        columns_checked: cols.len(),
        same_output: 0.0,
        late_halt: 0.0,
        no_unhalting: 0.0,
        still_running: 0.0,
    };
    for c in cols {
        let x = unit(c);
        let at_n = model.sparse_halted_labels(&model.sparse_u_pow(&x, n));
        let at_np = model.sparse_halted_labels(&model.sparse_u_pow(&x, n_prime));

        for &k in &at_np {
            let y = e_label(model, n_prime, k, &x);
            let later = model.sparse_halted_labels(&model.sparse_u_pow(&y, n));
            for j in merged(later, vec![k]) {
                let lhs = e_label(model, n, j, &y);
                let dev = if j == k { smax_abs(&ssub(&lhs, &y)) } else { smax_abs(&lhs) };
                r.same_output = r.same_output.max(dev);
            }
            r.no_unhalting = r.no_unhalting.max(smax_abs(&e_zero(model, n, &y)));
        }

        let z = e_zero(model, n_prime, &x);
        let from_z = model.sparse_halted_labels(&model.sparse_u_pow(&z, n));
        for j in merged(merged(from_z, at_n.clone()), at_np.clone()) {
            let lhs = e_label(model, n, j, &z);
            let rhs = ssub(&e_label(model, n, j, &x), &e_label(model, n_prime, j, &x));
            r.late_halt = r.late_halt.max(smax_abs(&ssub(&lhs, &rhs)));
        }
        let lhs = e_zero(model, n, &z);
        r.still_running = r.still_running.max(smax_abs(&ssub(&lhs, &e_zero(model, n, &x))));
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeisenbergDistributions {
    /// `||E_0 psi||^2 + sum_K ||E_K psi - E_{K-1} psi||^2` per label.
    pub difference_sum: Distribution,
    /// `||E_N psi||^2` per label.
    pub direct: Distribution,
    /// The sparse simulator's monitored distribution.
    pub schrodinger: Distribution,
    pub max_disagreement: f64,
    pub agree: bool,
}

/// The monitored output distribution computed three ways; they must agree
/// within the product tolerance.
pub fn heisenberg_monitored_distribution(
    spec: &MachineSpec,
    model: &TruncatedModel,
    psi0: &StateVector,
    n: usize,
) -> Result<HeisenbergDistributions> {
    let dense = model.to_dense(psi0)?;
    let available = model.support_margin(&dense);
    if available < 2 * n {
        return Err(Error::InsufficientDepth {
            required: 2 * n,
            available,
        });
    }
    let psi: SVec = dense
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(i, v)| (i, *v))
        .collect();

    let mut labels = Vec::new();
    let mut fwd = psi.clone();
    for k in 0..=n {
        if k > 0 {
            fwd = model.sparse_u(&fwd);
        }
        labels = merged(labels, model.sparse_halted_labels(&fwd));
    }

    let mut difference_sum = BTreeMap::new();
    let mut direct = BTreeMap::new();
    for &j in &labels {
        let mut prev = e_label(model, 0, j, &psi);
        let mut total = snorm_sq(&prev);
        for k in 1..=n {
            let cur = e_label(model, k, j, &psi);
            total += snorm_sq(&ssub(&cur, &prev));
            prev = cur;
        }
        difference_sum.insert(j, total);
        direct.insert(j, snorm_sq(&prev));
    }
    let residual = snorm_sq(&e_zero(model, n, &psi));
    let difference_sum = Distribution {
        entries: difference_sum,
        residual,
    };
    let direct = Distribution {
        entries: direct,
        residual,
    };
    let schrodinger = monitored_distribution(spec, psi0, n)?;

    let max_disagreement = [
        compare_distributions(&difference_sum, &direct, PRODUCT_TOL).max_diff,
        compare_distributions(&direct, &schrodinger, PRODUCT_TOL).max_diff,
        compare_distributions(&difference_sum, &schrodinger, PRODUCT_TOL).max_diff,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(HeisenbergDistributions {
        difference_sum,
        direct,
        schrodinger,
        max_disagreement,
        agree: max_disagreement <= PRODUCT_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{build_truncated, window_configurations, Truncation};
    use crate::configuration::Configuration;
    use crate::machine::parse_machine;
    use crate::tape::{Symbol, Tape};

    /// Head swings between two cells forever; every orbit has two elements.
    fn swing() -> MachineSpec {
        parse_machine(
            "qtm 1\nalphabet 2\nstates 2\ninitial 0\n\
             rule 0 0 0 -> 0 0 1 L 1 0\nrule 0 0 1 -> 1 0 1 L 1 0\nrule 1 0 0 -> 0 0 0 R 1 0\nrule 1 0 1 -> 1 0 0 R 1 0\n\
             rule 0 1 0 -> 0 1 1 L 1 0\nrule 0 1 1 -> 1 1 1 L 1 0\nrule 1 1 0 -> 0 1 0 R 1 0\nrule 1 1 1 -> 1 1 0 R 1 0\n",
        )
        .unwrap()
    }

    /// Hadamard coin on the state; state 0 moves left, state 1 right.
    fn walk() -> MachineSpec {
        let mut text = String::from("qtm 1\nalphabet 2\nstates 2\ninitial 0\n");
        for n0 in 0..2 {
            for s in 0..2 {
                for (p, sign) in [(0, ""), (1, "-")] {
                    text += &format!("rule {p} {n0} {s} -> {s} {n0} 0 L 1/sqrt2 0\n");
                    text += &format!("rule {p} {n0} {s} -> {s} {n0} 1 R {sign}1/sqrt2 0\n");
                }
            }
        }
        parse_machine(&text).unwrap()
    }

    fn seeds(spec: &MachineSpec) -> Vec<Configuration> {
        window_configurations(spec, 1, 10_000).unwrap()
    }

    #[test]
    fn observable_at_zero_is_output_observable() {
        let spec = swing();
        let model = build_truncated(&spec, &Truncation::reachable(seeds(&spec), 4).bidirectional()).unwrap();
        let o0 = heisenberg_observable(&model, 0).unwrap();
        for i in 0..model.dim() {
            for j in 0..model.dim() {
                let expect = if i == j { model.output_diagonal(i) } else { 0.0 };
                assert_eq!(o0.get(i, j), Complex64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn conjugation_keeps_spectrum() {
        // Closed orbits make every column exact, so traces of powers are exact.
        let spec = swing();
        let model = build_truncated(&spec, &Truncation::reachable(seeds(&spec), 4).bidirectional()).unwrap();
        assert!(model.mixed_exact(1000).len() == model.dim());
        let o0 = heisenberg_observable(&model, 0).unwrap();
        for n in 1..=3 {
            let on = heisenberg_observable(&model, n).unwrap();
            let (mut p0, mut pn) = (o0.clone(), on.clone());
            for _ in 1..=4 {
                assert!((p0.trace() - pn.trace()).norm() < 1e-9);
                p0 = p0.mul(&o0);
                pn = pn.mul(&on);
            }
        }
    }

    #[test]
    fn commutators_vanish_on_unitary_walk() {
        let spec = walk();
        let model = build_truncated(&spec, &Truncation::reachable(seeds(&spec), 12).bidirectional()).unwrap();
        let same = qnd_check(&model, 2, 2).unwrap();
        assert_eq!(same.max_entry, 0.0);
        for n in 0..=3 {
            for m in 0..=3 {
                let r = qnd_check(&model, n, m).unwrap();
                assert!(r.columns_checked > 0);
                assert!(r.max_entry < 1e-10, "{r:?}");
            }
        }
    }

    #[test]
    fn relations_hold_on_unitary_walk() {
        let spec = walk();
        let model = build_truncated(&spec, &Truncation::reachable(seeds(&spec), 12).bidirectional()).unwrap();
        for n in 0..=3 {
            for m in 0..=n {
                let r = projection_relations_check(&model, n, m).unwrap();
                assert!(r.max_deviation() < 1e-10, "{r:?}");
            }
        }
        let r = projection_relations_check(&model, 0, 0).unwrap();
        assert_eq!(r.max_deviation(), 0.0);
    }

    #[test]
    fn depth_is_checked() {
        let spec = walk();
        let model = build_truncated(&spec, &Truncation::reachable(seeds(&spec), 2).bidirectional()).unwrap();
        assert!(matches!(qnd_check(&model, 1, 1), Err(Error::InsufficientDepth { .. })));
        assert!(projection_relations_check(&model, 0, 1).is_err());
    }

    #[test]
    fn halted_start_gives_its_tape_three_ways() {
        let spec = walk();
        let tape = Tape::from_cells(Symbol::BLANK, [(0, Symbol(1))]);
        let start = Configuration::new(0, 0, tape.clone(), true);
        let model = build_truncated(&spec, &Truncation::reachable(vec![start.clone()], 8).bidirectional()).unwrap();
        let r = heisenberg_monitored_distribution(&spec, &model, &StateVector::basis(start), 3).unwrap();
        assert!(r.agree, "{r:?}");
        let label = tape.label().unwrap();
        for d in [&r.difference_sum, &r.direct, &r.schrodinger] {
            assert!((d.probability(label) - 1.0).abs() < 1e-12);
        }
    }
}
