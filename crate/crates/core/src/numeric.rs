//! Small numerical building blocks shared by the exact and Poisson engines:
//! compensated summation and finite discrete laws with support merging.

use crate::error::{Error, Result};

/// Values closer than this (relative to `max(1, |v|)`) are merged into one atom.
pub const MERGE_TOL: f64 = 1e-12;

/// Neumaier-compensated accumulator. Adding terms in a fixed order gives
/// bit-reproducible totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut s = NeumaierSum::new();
    s.extend(iter);
    s.value()
}

/// `x^e` with the conventions `0^e = 0` for `e > 0` and `0^0 = 1`.
#[inline]
pub fn pow0(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        if e == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        x.powf(e)
    }
}

/// A finitely supported law on the reals, kept sorted by value with
/// near-equal values merged.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw {
    atoms: Vec<(f64, f64)>,
}

impl DiscreteLaw {
    pub fn point(value: f64) -> Self {
        Self {
            atoms: vec![(value, 1.0)],
        }
    }

    /// `value` with probability `prob`, otherwise `0`.
    pub fn two_point(value: f64, prob: f64) -> Self {
        Self::from_atoms(vec![(0.0, 1.0 - prob), (value, prob)])
    }

    /// Builds a law from (value, probability) pairs; drops zero-mass atoms and
    /// merges values within [`MERGE_TOL`].
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.retain(|&(_, p)| p > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if (v - last.0).abs() <= MERGE_TOL * last.0.abs().max(1.0) => {
                    last.1 += p;
                }
                _ => merged.push((v, p)),
            }
        }
        Self { atoms: merged }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.1))
    }

    pub fn max_value(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.0)
    }

    pub fn min_value(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_atoms(self.atoms.iter().map(|&(v, p)| (f(v), p)).collect())
    }

    /// Law of `op(X, Y)` for independent `X ~ self`, `Y ~ other`. Fails when
    /// the pairwise product of supports exceeds `cap`.
    pub fn combine(&self, other: &Self, cap: usize, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let size = self.len() as u64 * other.len() as u64;
        if size > cap as u64 {
            return Err(Error::CapExceeded {
                what: "convolution support",
                size,
                cap: cap as u64,
            });
        }
        let mut out = Vec::with_capacity(size as usize);
        for &(a, pa) in &self.atoms {
            for &(b, pb) in &other.atoms {
                out.push((op(a, b), pa * pb));
            }
        }
        Ok(Self::from_atoms(out))
    }

    /// Drops atoms lighter than `floor`; returns the law and the mass removed.
    pub fn prune(self, floor: f64) -> (Self, f64) {
        let mut dropped = NeumaierSum::new();
        let atoms = self
            .atoms
            .into_iter()
            .filter(|&(_, p)| {
                let keep = p >= floor;
                if !keep {
                    dropped.add(p);
                }
                keep
            })
            .collect();
        (Self { atoms }, dropped.value())
    }

    /// Law of `X + Y` for independent nonnegative `X ~ self`, `Y ~ other`,
    /// with atoms merged into bins `[k h, (k + 1) h)` placed at their mean,
    /// so no atom moves by more than `h`.
    pub fn convolve_binned(&self, other: &Self, h: f64) -> Self {
        let hi = self.max_value().unwrap_or(0.0) + other.max_value().unwrap_or(0.0);
        let n = (hi / h).floor() as usize + 1;
        let mut mass = vec![0.0; n];
        let mut first = vec![0.0; n];
        for &(a, pa) in &self.atoms {
            for &(b, pb) in &other.atoms {
                let (v, p) = (a + b, pa * pb);
                let k = ((v / h) as usize).min(n - 1);
                mass[k] += p;
                first[k] += p * v;
            }
        }
        let atoms = mass
            .into_iter()
            .zip(first)
            .filter(|&(p, _)| p > 0.0)
            .map(|(p, m)| (m / p, p))
            .collect();
        Self { atoms }
    }

    pub fn convolve(&self, other: &Self, cap: usize) -> Result<Self> {
        self.combine(other, cap, |a, b| a + b)
    }

    /// Sum of independent laws, folded left to right.
    pub fn convolve_all<'a, I>(laws: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a DiscreteLaw>,
    {
        let mut acc = Self::point(0.0);
        for law in laws {
            acc = acc.convolve(law, cap)?;
        }
        Ok(acc)
    }

    /// `E f(X)` with compensated accumulation in increasing-value order.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        compensated_sum(self.atoms.iter().map(|&(v, p)| p * f(v)))
    }

    /// `E X^e` for a nonnegative law.
    pub fn moment(&self, e: f64) -> f64 {
        self.expect(|v| pow0(v.max(0.0), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_beats_naive_on_cancellation() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        let naive: f64 = xs.iter().sum();
        assert_eq!(naive, 0.0);
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn merge_collapses_near_equal_values() {
        let law = DiscreteLaw::from_atoms(vec![(0.5, 0.25), (0.5 + 1e-14, 0.25), (1.0, 0.5)]);
        assert_eq!(law.len(), 2);
        assert!((law.atoms()[0].1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn convolution_of_bernoullis_is_binomial() {
        let b = DiscreteLaw::two_point(1.0, 0.5);
        let (pruned, dropped) = DiscreteLaw::from_atoms(vec![(0.0, 0.9), (1.0, 0.1 - 1e-20), (2.0, 1e-20)]).prune(1e-18);
        assert_eq!(pruned.len(), 2);
        assert_eq!(dropped, 1e-20);
        let x = DiscreteLaw::from_atoms(vec![(0.0, 0.5), (1.0, 0.5)]);
        let y = DiscreteLaw::from_atoms(vec![(0.01, 0.5), (0.02, 0.5)]);
        let z = x.convolve_binned(&y, 0.1);
        assert_eq!(z.len(), 2);
        assert!((z.atoms()[0].0 - 0.015).abs() < 1e-12);
        assert!((z.moment(1.0) - x.convolve(&y, 100).unwrap().moment(1.0)).abs() < 1e-12);
        let s = DiscreteLaw::convolve_all([&b, &b, &b], 1000).unwrap();
        let probs: Vec<f64> = s.atoms().iter().map(|a| a.1).collect();
        assert_eq!(probs, vec![0.125, 0.375, 0.375, 0.125]);
        assert!((s.moment(1.0) - 1.5).abs() < 1e-15);
        assert!((s.moment(2.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let a = DiscreteLaw::from_atoms((0..100).map(|i| (i as f64, 0.01)).collect());
        let b = DiscreteLaw::from_atoms((0..100).map(|i| (i as f64 * 1000.0, 0.01)).collect());
        assert!(matches!(
            a.convolve(&b, 5000),
            Err(Error::CapExceeded { size: 10000, .. })
        ));
        assert!(a.convolve(&b, 10000).is_ok());
    }

    #[test]
    fn pow0_conventions() {
        assert_eq!(pow0(0.0, 2.0), 0.0);
        assert_eq!(pow0(0.0, 0.0), 1.0);
        assert_eq!(pow0(4.0, 0.5), 2.0);
    }
}
