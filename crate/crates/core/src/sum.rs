//! Neumaier compensated summation.
//!
//! Partial sums from independent segments are merged in a fixed order, so a
//! reduction gives the same bits no matter how many workers produced the parts.

use std::iter::Sum;
use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub const fn new() -> Self {
        Self { sum: 0.0, comp: 0.0 }
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum into this one.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, v: f64) {
        self.add(v);
    }
}

impl Sum<f64> for CompensatedSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        iter.for_each(|v| acc.add(v));
        acc
    }
}

impl<'a> Sum<&'a CompensatedSum> for CompensatedSum {
    fn sum<I: Iterator<Item = &'a CompensatedSum>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        iter.for_each(|p| acc.merge(p));
        acc
    }
}

/// Compensated sum of a slice.
pub fn compensated(values: &[f64]) -> f64 {
    values.iter().copied().sum::<CompensatedSum>().value()
}
