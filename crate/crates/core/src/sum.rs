//! Compensated summation.

/// Neumaier's variant of Kahan summation.
///
/// Results depend only on the order in which terms are added, so callers that
/// fix the order get bit-identical totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().total()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let terms = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(terms), 2.0);
        let naive: f64 = terms.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn harmonic_partial_sum_matches_reverse_order() {
        let fwd = compensated_sum((1..=100_000).map(|k| 1.0 / k as f64));
        let rev = compensated_sum((1..=100_000).rev().map(|k| 1.0 / k as f64));
        assert!((fwd - rev).abs() <= 1e-15 * fwd);
    }
}
