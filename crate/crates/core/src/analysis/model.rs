//! Finite truncations of the configuration space with an explicit basis
//! enumeration and an index-based matrix for `U`.
//!
//! Vectors here are dense arrays over the enumerated basis. `U` is stored
//! column by column, since almost every entry is zero. Each basis element
//! carries a margin: the number of steps that can be taken from it before
//! the truncation stops describing the true dynamics. An identity involving
//! `k` factors of `U` or `U^dag` is exact on columns whose margin is at
//! least `k`.

use std::collections::{BTreeMap, HashMap, VecDeque};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::machine::{MachineSpec, RuleKey};
use crate::state_vector::StateVector;
use crate::tape::{Label, Symbol, Tape};

pub type DVec = Vec<Complex64>;

/// Vector over basis indices that stores only its non-zero entries.
pub type SVec = BTreeMap<usize, Complex64>;

pub const DEFAULT_BASIS_CAP: usize = 200_000;

/// Margin of configurations in a truncation that is closed under the
/// dynamics.
pub const UNBOUNDED: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq)]
pub enum BasisKind {
    /// Every configuration with head and tape support inside the window.
    Window,
    /// Configurations reachable from the seeds in at most `max_steps` steps
    /// forward (or, when `bidirectional`, forward and backward).
    Reachable {
        seeds: Vec<Configuration>,
        bidirectional: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub kind: BasisKind,
    /// Head positions must stay within `[-radius, radius]`.
    pub radius: i64,
    pub max_steps: usize,
    pub cap: usize,
}

impl Truncation {
    pub fn window(radius: i64, max_steps: usize) -> Self {
        Truncation {
            kind: BasisKind::Window,
            radius,
            max_steps,
            cap: DEFAULT_BASIS_CAP,
        }
    }

    /// Forward closure of `seeds` to depth `max_steps`, with a window wide
    /// enough for the head to move freely.
    pub fn reachable(seeds: Vec<Configuration>, max_steps: usize) -> Self {
        let seed_radius = seeds
            .iter()
            .map(|c| c.head.abs())
            .max()
            .unwrap_or(0);
        Truncation {
            kind: BasisKind::Reachable {
                seeds,
                bidirectional: false,
            },
            radius: seed_radius + max_steps as i64 + 1,
            max_steps,
            cap: DEFAULT_BASIS_CAP,
        }
    }

    pub fn bidirectional(mut self) -> Self {
        if let BasisKind::Reachable { bidirectional, .. } = &mut self.kind {
            *bidirectional = true;
        }
        self
    }

    pub fn with_radius(mut self, radius: i64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }
}

pub struct TruncatedModel {
    basis: Vec<Configuration>,
    index: HashMap<Configuration, usize>,
    /// `columns[b]` lists `(a, U_ab)`.
    columns: Vec<Vec<(usize, Complex64)>>,
    /// Transpose of `columns`: `rows[a]` lists `(b, U_ab)`.
    rows: Vec<Vec<(usize, Complex64)>>,
    forward_margin: Vec<usize>,
    margin: Vec<usize>,
    labels: Vec<Label>,
    eigenvalues: BTreeMap<Label, f64>,
    max_steps: usize,
}

/// Successors of `c` with their amplitudes, straight from the rule table.
fn successors(spec: &MachineSpec, c: &Configuration) -> Result<Vec<(Configuration, Complex64)>> {
    let key = RuleKey::new(c.state, c.halted, c.scanned());
    let targets = spec.rule(&key).ok_or(Error::MissingRule(key))?;
    Ok(targets
        .iter()
        .map(|t| {
            let tape = c.tape.write(c.head, t.write);
            (Configuration::new(t.state, c.head + t.dir.offset(), tape, t.halted), t.amp)
        })
        .collect())
}

/// Configurations `b` with `<c|U|b> != 0`.
fn predecessors(spec: &MachineSpec, c: &Configuration) -> Vec<Configuration> {
    let mut out = Vec::new();
    for (key, targets) in spec.rules() {
        for t in targets {
            if t.state != c.state || t.halted != c.halted {
                continue;
            }
            let head = c.head - t.dir.offset();
            if c.tape.read(head) != t.write {
                continue;
            }
            out.push(Configuration::new(key.state, head, c.tape.write(head, key.read), key.halted));
        }
    }
    out
}

fn enumerate_window(spec: &MachineSpec, trunc: &Truncation) -> Result<Vec<Configuration>> {
    let cells = (2 * trunc.radius + 1) as u32;
    let a = spec.alphabet_size();
    let tapes = (a as u128).checked_pow(cells).unwrap_or(u128::MAX);
    let total = tapes
        .saturating_mul(cells as u128)
        .saturating_mul(spec.state_count() as u128)
        .saturating_mul(2);
    if total > trunc.cap as u128 {
        return Err(Error::BasisOverflow { cap: trunc.cap });
    }
    let mut basis = Vec::with_capacity(total as usize);
    for code in 0..tapes {
        let mut rest = code;
        let mut tape = Tape::empty(spec.blank());
        for i in -trunc.radius..=trunc.radius {
            tape.write_in_place(i, Symbol((rest % a as u128) as u16));
            rest /= a as u128;
        }
        for state in 0..spec.state_count() {
            for head in -trunc.radius..=trunc.radius {
                for halted in [false, true] {
                    basis.push(Configuration::new(state, head, tape.clone(), halted));
                }
            }
        }
    }
    Ok(basis)
}

/// Every configuration with head and non-blank cells inside
/// `[-radius, radius]`; handy as a seed set for reachable truncations.
pub fn window_configurations(spec: &MachineSpec, radius: i64, cap: usize) -> Result<Vec<Configuration>> {
    enumerate_window(spec, &Truncation::window(radius, 0).with_cap(cap))
}

/// Breadth-first closure; returns the basis and the distance of each element
/// from the seeds, plus whether the closure ran out of new configurations.
fn closure(
    spec: &MachineSpec,
    trunc: &Truncation,
    seeds: &[Configuration],
    bidirectional: bool,
) -> Result<(Vec<Configuration>, Vec<usize>, bool)> {
    let mut basis: Vec<Configuration> = Vec::new();
    let mut dist: Vec<usize> = Vec::new();
    let mut index: HashMap<Configuration, usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let seed_radius = seeds.iter().map(|c| c.head.abs()).max().unwrap_or(0);
    let required = seed_radius + trunc.max_steps as i64;
    let mut sorted = seeds.to_vec();
    sorted.sort();
    sorted.dedup();
    for s in sorted {
        if s.head.abs() > trunc.radius {
            return Err(Error::WindowTooSmall {
                reached: s.head,
                required,
            });
        }
        index.insert(s.clone(), basis.len());
        queue.push_back(basis.len());
        basis.push(s);
        dist.push(0);
    }
    let mut closed = true;
    while let Some(i) = queue.pop_front() {
        if dist[i] == trunc.max_steps {
            closed = false;
            continue;
        }
        let c = basis[i].clone();
        let mut next: Vec<Configuration> = successors(spec, &c)?.into_iter().map(|(n, _)| n).collect();
        if bidirectional {
            next.extend(predecessors(spec, &c));
        }
        for n in next {
            if index.contains_key(&n) {
                continue;
            }
            if n.head.abs() > trunc.radius {
                return Err(Error::WindowTooSmall {
                    reached: n.head,
                    required,
                });
            }
            if basis.len() >= trunc.cap {
                return Err(Error::BasisOverflow { cap: trunc.cap });
            }
            index.insert(n.clone(), basis.len());
            queue.push_back(basis.len());
            basis.push(n);
            dist.push(dist[i] + 1);
        }
    }
    Ok((basis, dist, closed))
}

/// Enumerates the basis of `trunc` and fills `U` column by column from the
/// rule table.
pub fn build_truncated(spec: &MachineSpec, trunc: &Truncation) -> Result<TruncatedModel> {
    let (basis, forward_margin, margin) = match &trunc.kind {
        BasisKind::Window => {
            if trunc.radius < trunc.max_steps as i64 {
                return Err(Error::WindowTooSmall {
                    reached: trunc.max_steps as i64,
                    required: trunc.max_steps as i64,
                });
            }
            let basis = enumerate_window(spec, trunc)?;
            let m: Vec<usize> = basis.iter().map(|c| (trunc.radius - c.head.abs()) as usize).collect();
            (basis, m.clone(), m)
        }
        BasisKind::Reachable { seeds, bidirectional } => {
            let (basis, dist, closed) = closure(spec, trunc, seeds, *bidirectional)?;
            let m: Vec<usize> = if closed {
                vec![UNBOUNDED; basis.len()]
            } else {
                dist.iter().map(|d| trunc.max_steps - d).collect()
            };
            let mixed = if *bidirectional { m.clone() } else { vec![0; basis.len()] };
            (basis, m, mixed)
        }
    };

    let index: HashMap<Configuration, usize> = basis.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let mut columns = Vec::with_capacity(basis.len());
    for (b, c) in basis.iter().enumerate() {
        let succ = match successors(spec, c) {
            Ok(s) => s,
            // Boundary columns may leave the key space the caller cares about.
            Err(_) if forward_margin[b] == 0 => Vec::new(),
            Err(e) => return Err(e),
        };
        let mut col: Vec<(usize, Complex64)> = Vec::with_capacity(succ.len());
        for (n, amp) in succ {
            match index.get(&n) {
                Some(&a) => col.push((a, amp)),
                None => debug_assert!(forward_margin[b] == 0, "interior column leaves basis"),
            }
        }
        columns.push(col);
    }

    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); basis.len()];
    for (b, col) in columns.iter().enumerate() {
        for &(a, u) in col {
            rows[a].push((b, u));
        }
    }

    let labels = basis.iter().map(|c| c.tape_label()).collect::<Result<Vec<_>>>()?;
    let mut distinct = labels.clone();
    distinct.sort();
    distinct.dedup();
    let n = distinct.len() as f64;
    let eigenvalues = distinct
        .into_iter()
        .enumerate()
        .map(|(rank, l)| (l, (rank + 1) as f64 / n))
        .collect();

    Ok(TruncatedModel {
        basis,
        index,
        columns,
        rows,
        forward_margin,
        margin,
        labels,
        eigenvalues,
        max_steps: trunc.max_steps,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramCheck {
    pub columns_checked: usize,
    pub max_deviation: f64,
    /// Basis indices of the worst entry of `U^dag U - I` and its size.
    pub worst: Option<(usize, usize, f64)>,
}

impl TruncatedModel {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Configuration] {
        &self.basis
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn index_of(&self, c: &Configuration) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// Forward steps that stay exact from basis element `i`.
    pub fn forward_margin(&self, i: usize) -> usize {
        self.forward_margin[i]
    }

    /// Mixed `U` / `U^dag` steps that stay exact from basis element `i`.
    pub fn margin(&self, i: usize) -> usize {
        self.margin[i]
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    /// Eigenvalue of the output observable on tape `label`: the label's rank
    /// among the model's tapes, scaled into `(0, 1]`.
    pub fn eigenvalue(&self, label: Label) -> Option<f64> {
        self.eigenvalues.get(&label).copied()
    }

    pub fn tape_labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.eigenvalues.keys().copied()
    }

    pub fn is_halted(&self, i: usize) -> bool {
        self.basis[i].halted
    }

    pub fn column(&self, b: usize) -> &[(usize, Complex64)] {
        &self.columns[b]
    }

    pub fn zero(&self) -> DVec {
        vec![Complex64::new(0.0, 0.0); self.dim()]
    }

    pub fn unit(&self, i: usize) -> DVec {
        let mut v = self.zero();
        v[i] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn apply_u(&self, x: &[Complex64]) -> DVec {
        let mut y = self.zero();
        for (b, xb) in x.iter().enumerate() {
            if *xb == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(a, u) in &self.columns[b] {
                y[a] += u * xb;
            }
        }
        y
    }

    pub fn apply_u_dag(&self, x: &[Complex64]) -> DVec {
        let mut y = self.zero();
        for (a, xa) in x.iter().enumerate() {
            if *xa == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &(b, u) in &self.rows[a] {
                y[b] += u.conj() * xa;
            }
        }
        y
    }

    pub fn sparse_u(&self, x: &SVec) -> SVec {
        let mut y = SVec::new();
        for (&b, xb) in x {
            for &(a, u) in &self.columns[b] {
                *y.entry(a).or_insert(Complex64::new(0.0, 0.0)) += u * xb;
            }
        }
        y
    }

    pub fn sparse_u_dag(&self, x: &SVec) -> SVec {
        let mut y = SVec::new();
        for (&a, xa) in x {
            for &(b, u) in &self.rows[a] {
                *y.entry(b).or_insert(Complex64::new(0.0, 0.0)) += u.conj() * xa;
            }
        }
        y
    }

    pub fn sparse_u_pow(&self, x: &SVec, n: usize) -> SVec {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.sparse_u(&y);
        }
        y
    }

    pub fn sparse_u_dag_pow(&self, x: &SVec, n: usize) -> SVec {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.sparse_u_dag(&y);
        }
        y
    }

    /// Keeps the entries whose basis element satisfies `keep`.
    pub fn sparse_filter<F: Fn(usize) -> bool>(&self, x: &SVec, keep: F) -> SVec {
        x.iter().filter(|(i, _)| keep(**i)).map(|(i, v)| (*i, *v)).collect()
    }

    /// `P Q_j` on an index vector.
    pub fn sparse_output(&self, x: &SVec, label: Label) -> SVec {
        self.sparse_filter(x, |i| self.basis[i].halted && self.labels[i] == label)
    }

    pub fn sparse_halt(&self, x: &SVec, halted: bool) -> SVec {
        self.sparse_filter(x, |i| self.basis[i].halted == halted)
    }

    pub fn sparse_halted_labels(&self, x: &SVec) -> Vec<Label> {
        let mut out: Vec<Label> = x
            .iter()
            .filter(|(i, v)| self.basis[**i].halted && v.norm() > 0.0)
            .map(|(i, _)| self.labels[*i])
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn apply_u_pow(&self, x: &[Complex64], n: usize) -> DVec {
        let mut y = x.to_vec();
        for _ in 0..n {
            y = self.apply_u(&y);
        }
        y
    }

    pub fn apply_u_dag_pow(&self, x: &[Complex64], n: usize) -> DVec {
        let mut y = x.to_vec();
        for _ in 0..n {
            y = self.apply_u_dag(&y);
        }
        y
    }

    /// `P` (halted) or `P^perp`.
    pub fn project_halt(&self, x: &[Complex64], halted: bool) -> DVec {
        x.iter()
            .enumerate()
            .map(|(i, v)| if self.basis[i].halted == halted { *v } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// `Q_j`.
    pub fn project_tape(&self, x: &[Complex64], label: Label) -> DVec {
        x.iter()
            .enumerate()
            .map(|(i, v)| if self.labels[i] == label { *v } else { Complex64::new(0.0, 0.0) })
            .collect()
    }

    /// `P Q_j`.
    pub fn project_output(&self, x: &[Complex64], label: Label) -> DVec {
        x.iter()
            .enumerate()
            .map(|(i, v)| {
                if self.basis[i].halted && self.labels[i] == label {
                    *v
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// Diagonal of the output observable: 0 off the halted sector, the tape
    /// eigenvalue on it.
    pub fn output_diagonal(&self, i: usize) -> f64 {
        if self.basis[i].halted {
            self.eigenvalues[&self.labels[i]]
        } else {
            0.0
        }
    }

    pub fn apply_output_observable(&self, x: &[Complex64]) -> DVec {
        x.iter().enumerate().map(|(i, v)| v * self.output_diagonal(i)).collect()
    }

    /// Tape labels of halted basis elements where `x` is non-zero.
    pub fn halted_labels_in(&self, x: &[Complex64]) -> Vec<Label> {
        let mut out: Vec<Label> = x
            .iter()
            .enumerate()
            .filter(|(i, v)| self.basis[*i].halted && v.norm() > 0.0)
            .map(|(i, _)| self.labels[i])
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn to_dense(&self, psi: &StateVector) -> Result<DVec> {
        let mut v = self.zero();
        for (c, a) in psi.iter() {
            let i = self
                .index_of(c)
                .ok_or_else(|| Error::InvalidArgument(format!("configuration {c} lies outside the truncation")))?;
            v[i] = *a;
        }
        Ok(v)
    }

    pub fn to_sparse(&self, x: &[Complex64]) -> StateVector {
        StateVector::from_terms(
            x.iter()
                .enumerate()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(i, v)| (self.basis[i].clone(), *v)),
        )
    }

    /// Smallest forward margin over the support of `x`.
    pub fn support_forward_margin(&self, x: &[Complex64]) -> usize {
        x.iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, _)| self.forward_margin[i])
            .min()
            .unwrap_or(UNBOUNDED)
    }

    pub fn support_margin(&self, x: &[Complex64]) -> usize {
        x.iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(i, _)| self.margin[i])
            .min()
            .unwrap_or(UNBOUNDED)
    }

    /// Columns on which `steps` forward applications of `U` are exact.
    pub fn forward_exact(&self, steps: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.forward_margin[i] >= steps).collect()
    }

    /// Columns on which `steps` mixed applications of `U`, `U^dag` are exact.
    pub fn mixed_exact(&self, steps: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.margin[i] >= steps).collect()
    }

    /// Orthonormality of the interior columns: the largest entry of
    /// `U^dag U - I` restricted to columns with positive forward margin.
    pub fn interior_gram_deviation(&self) -> GramCheck {
        let interior = self.forward_exact(1);
        let mut rows: HashMap<usize, Vec<(usize, Complex64)>> = HashMap::new();
        let mut max_deviation: f64 = 0.0;
        let mut worst = None;
        for &b in &interior {
            let n: f64 = self.columns[b].iter().map(|(_, u)| u.norm_sqr()).sum();
            let d = (n - 1.0).abs();
            if d > max_deviation {
                max_deviation = d;
                worst = Some((b, b, d));
            }
            for &(a, u) in &self.columns[b] {
                rows.entry(a).or_default().push((b, u));
            }
        }
        let mut overlaps: HashMap<(usize, usize), Complex64> = HashMap::new();
        for entries in rows.values() {
            for (x, &(b1, u1)) in entries.iter().enumerate() {
                for &(b2, u2) in &entries[x + 1..] {
                    let key = if b1 < b2 { (b1, b2) } else { (b2, b1) };
                    let v = if b1 < b2 { u1.conj() * u2 } else { u2.conj() * u1 };
                    *overlaps.entry(key).or_insert(Complex64::new(0.0, 0.0)) += v;
                }
            }
        }
        let mut keys: Vec<_> = overlaps.keys().copied().collect();
        keys.sort();
        for k in keys {
            let d = overlaps[&k].norm();
            if d > max_deviation {
                max_deviation = d;
                worst = Some((k.0, k.1, d));
            }
        }
        GramCheck {
            columns_checked: interior.len(),
            max_deviation,
            worst,
        }
    }

    /// Gaussian vector on the given basis elements, normalized: uniform on
    /// the unit sphere of their span.
    pub fn random_unit_vector<R: Rng + ?Sized>(&self, support: &[usize], rng: &mut R) -> Option<DVec> {
        if support.is_empty() {
            return None;
        }
        let mut v = self.zero();
        let mut n = 0.0;
        for &i in support {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            v[i] = Complex64::new(re, im);
            n += re * re + im * im;
        }
        let s = 1.0 / n.sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        Some(v)
    }
}

pub fn snorm_sq(x: &SVec) -> f64 {
    x.values().map(|v| v.norm_sqr()).sum()
}

pub fn sinner(x: &SVec, y: &SVec) -> Complex64 {
    x.iter()
        .filter_map(|(i, a)| y.get(i).map(|b| a.conj() * b))
        .sum()
}

/// `x - y`.
pub fn ssub(x: &SVec, y: &SVec) -> SVec {
    let mut out = x.clone();
    for (i, b) in y {
        *out.entry(*i).or_insert(Complex64::new(0.0, 0.0)) -= b;
    }
    out
}

pub fn smax_abs(x: &SVec) -> f64 {
    x.values().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn dnorm_sq(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn dinner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn dsub(x: &[Complex64], y: &[Complex64]) -> DVec {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn dmax_abs(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::parse_machine;

    fn trivial() -> MachineSpec {
        parse_machine("qtm 1\nalphabet 1\nstates 1\ninitial 0\nrule 0 0 0 -> 0 0 0 R 1 0\nrule 0 1 0 -> 0 1 0 R 1 0\n").unwrap()
    }

    #[test]
    fn window_basis_size_counts_configurations() {
        let model = build_truncated(&trivial(), &Truncation::window(1, 1)).unwrap();
        assert_eq!(model.dim(), 6);
        let two_symbols = parse_machine(
            "qtm 1\nalphabet 2\nstates 2\ninitial 0\n\
             rule 0 0 0 -> 0 0 0 R 1 0\nrule 0 0 1 -> 1 0 0 R 1 0\nrule 0 1 0 -> 0 1 0 R 1 0\nrule 0 1 1 -> 1 1 0 R 1 0\n\
             rule 1 0 0 -> 0 0 1 R 1 0\nrule 1 0 1 -> 1 0 1 R 1 0\nrule 1 1 0 -> 0 1 1 R 1 0\nrule 1 1 1 -> 1 1 1 R 1 0\n",
        )
        .unwrap();
        let model = build_truncated(&two_symbols, &Truncation::window(1, 1)).unwrap();
        assert_eq!(model.dim(), 2 * 3 * 8 * 2);
    }

    #[test]
    fn window_smaller_than_horizon_is_rejected() {
        let err = build_truncated(&trivial(), &Truncation::window(1, 3)).err().unwrap();
        assert!(matches!(err, Error::WindowTooSmall { .. }));
    }

    #[test]
    fn basis_cap_is_enforced() {
        let err = build_truncated(&trivial(), &Truncation::window(3, 1).with_cap(10)).err().unwrap();
        assert_eq!(err, Error::BasisOverflow { cap: 10 });
    }

    #[test]
    fn reachable_window_too_small() {
        let seed = Configuration::new(0, 0, Tape::default(), false);
        let err = build_truncated(&trivial(), &Truncation::reachable(vec![seed], 5).with_radius(2))
            .err()
            .unwrap();
        assert_eq!(err, Error::WindowTooSmall { reached: 3, required: 5 });
    }

    #[test]
    fn halt_projections_resolve_identity() {
        let model = build_truncated(&trivial(), &Truncation::window(1, 1)).unwrap();
        let x: DVec = (0..model.dim()).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let sum: DVec = model
            .project_halt(&x, true)
            .iter()
            .zip(model.project_halt(&x, false))
            .map(|(a, b)| a + b)
            .collect();
        assert_eq!(sum, x);
    }

    #[test]
    fn shift_is_unitary_on_interior() {
        let model = build_truncated(&trivial(), &Truncation::window(2, 1)).unwrap();
        let g = model.interior_gram_deviation();
        assert_eq!(g.max_deviation, 0.0);
        assert_eq!(g.columns_checked, 3 * 2);
    }
}
