//! Sparse superpositions over configurations.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::configuration::Configuration;
use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Terms whose amplitude magnitude falls below this are pruned.
pub const DROP_TOLERANCE: f64 = 1e-15;

/// Finite superposition `sum_C a_C |C>` kept in configuration order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector {
    terms: BTreeMap<Configuration, Amplitude>,
}

impl StateVector {
    pub fn zero() -> Self {
        StateVector::default()
    }

    pub fn basis(config: Configuration) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(config, Complex64::new(1.0, 0.0));
        StateVector { terms }
    }

    /// Sums amplitudes of repeated configurations, then prunes.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Configuration, Amplitude)>,
    {
        let mut out = StateVector::zero();
        for (c, a) in terms {
            out.accumulate(c, a);
        }
        out.prune();
        out
    }

    pub(crate) fn accumulate(&mut self, config: Configuration, amp: Amplitude) {
        *self.terms.entry(config).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }

    pub(crate) fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= DROP_TOLERANCE);
    }

    pub fn amplitude(&self, config: &Configuration) -> Amplitude {
        self.terms.get(config).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Configuration, &Amplitude)> {
        self.terms.iter()
    }

    pub fn configurations(&self) -> impl Iterator<Item = &Configuration> {
        self.terms.keys()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(self)
    }

    pub fn scaled(&self, factor: Amplitude) -> StateVector {
        StateVector::from_terms(self.terms.iter().map(|(c, a)| (c.clone(), a * factor)))
    }

    /// Keeps the terms accepted by `keep`; no renormalization.
    pub fn filter<F>(&self, mut keep: F) -> StateVector
    where
        F: FnMut(&Configuration) -> bool,
    {
        StateVector {
            terms: self
                .terms
                .iter()
                .filter(|(c, _)| keep(c))
                .map(|(c, a)| (c.clone(), *a))
                .collect(),
        }
    }

    pub fn add(&self, other: &StateVector) -> StateVector {
        StateVector::from_terms(
            self.terms
                .iter()
                .chain(other.terms.iter())
                .map(|(c, a)| (c.clone(), *a)),
        )
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        StateVector::from_terms(
            self.terms
                .iter()
                .map(|(c, a)| (c.clone(), *a))
                .chain(other.terms.iter().map(|(c, a)| (c.clone(), -*a))),
        )
    }

    pub fn normalized(&self) -> Result<StateVector> {
        let n = self.norm_sq();
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    /// Largest amplitude magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, a) in &self.terms {
            worst = worst.max((a - other.amplitude(c)).norm());
        }
        for (c, b) in &other.terms {
            if !self.terms.contains_key(c) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }
}

impl FromIterator<(Configuration, Amplitude)> for StateVector {
    fn from_iter<I: IntoIterator<Item = (Configuration, Amplitude)>>(iter: I) -> Self {
        StateVector::from_terms(iter)
    }
}

/// `<psi|phi> = sum_C conj(psi(C)) phi(C)`.
pub fn inner(psi: &StateVector, phi: &StateVector) -> Amplitude {
    let (small, large, flip) = if psi.len() <= phi.len() {
        (psi, phi, false)
    } else {
        (phi, psi, true)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (c, a) in &small.terms {
        if let Some(b) = large.terms.get(c) {
            acc += if flip { b.conj() * a } else { a.conj() * b };
        }
    }
    acc
}

pub fn norm_sq(psi: &StateVector) -> f64 {
    psi.terms.values().map(|a| a.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tape::{Symbol, Tape};
    use proptest::prelude::*;

    fn cfg(state: usize, head: i64) -> Configuration {
        Configuration::new(state, head, Tape::default(), false)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_examples() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = StateVector::from_terms([(cfg(0, 0), c(r, 0.0)), (cfg(1, 0), c(0.0, r))]);
        assert!((inner(&psi, &psi) - c(1.0, 0.0)).norm() < 1e-12);

        let a = StateVector::basis(cfg(0, 0));
        let b = StateVector::basis(cfg(0, 1));
        assert_eq!(inner(&a, &b), c(0.0, 0.0));

        let psi = StateVector::from_terms([(cfg(0, 0), c(0.6, 0.0)), (cfg(1, 0), c(0.0, 0.8))]);
        let phi = StateVector::basis(cfg(1, 0));
        assert!((inner(&psi, &phi) - c(0.0, -0.8)).norm() < 1e-15);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm_sq(&StateVector::zero()), 0.0);
        let one = StateVector::from_terms([(cfg(0, 0), c(0.6, 0.8))]);
        assert!((norm_sq(&one) - 1.0).abs() < 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let two = StateVector::from_terms([(cfg(0, 0), c(r, 0.0)), (cfg(0, 1), c(r, 0.0))]);
        assert!((norm_sq(&two) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tiny_terms_are_pruned() {
        let v = StateVector::from_terms([(cfg(0, 0), c(1e-16, 0.0)), (cfg(0, 1), c(1.0, 0.0))]);
        assert_eq!(v.len(), 1);
        let cancel = StateVector::from_terms([(cfg(0, 0), c(0.5, 0.0)), (cfg(0, 0), c(-0.5, 0.0))]);
        assert!(cancel.is_empty());
    }

    #[test]
    fn normalizing_zero_fails() {
        assert_eq!(StateVector::zero().normalized(), Err(Error::ZeroNorm));
    }

    fn arb_state() -> impl Strategy<Value = StateVector> {
        prop::collection::vec((0usize..3, -3i64..3, 0u16..3, any::<bool>(), -1.0f64..1.0, -1.0f64..1.0), 0..12)
            .prop_map(|terms| {
                StateVector::from_terms(terms.into_iter().map(|(q, h, s, halt, re, im)| {
                    let tape = Tape::default().write(h, Symbol(s));
                    (Configuration::new(q, h, tape, halt), Complex64::new(re, im))
                }))
            })
    }

    proptest! {
        #[test]
        fn inner_is_conjugate_symmetric(a in arb_state(), b in arb_state()) {
            let ab = inner(&a, &b);
            let ba = inner(&b, &a);
            prop_assert!((ab - ba.conj()).norm() < 1e-14);
        }

        #[test]
        fn norm_matches_self_inner(a in arb_state()) {
            prop_assert!((norm_sq(&a) - inner(&a, &a).re).abs() < 1e-14);
        }

        #[test]
        fn normalization_gives_unit_norm(a in arb_state()) {
            if let Ok(n) = a.normalized() {
                prop_assert!((n.norm_sq() - 1.0).abs() < 1e-12);
            }
        }
    }
}
