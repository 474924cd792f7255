//! Compensated summation. Normalizers and mass checks in this crate carry
//! tolerances down to 1e-12 over up to 1e5 terms, which plain f64
//! accumulation cannot hold.

/// Kahan accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    pub sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Compensated sum of an iterator.
#[inline]
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = Kahan::default();
    for v in values {
        acc.add(v);
    }
    acc.sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_bits_naive_summation_loses() {
        let n = 100_000;
        let values: Vec<f64> = (1..=n).map(|i| 1.0 / i as f64).collect();
        let compensated = kahan_sum(values.iter().copied());
        let mut reversed = values.clone();
        reversed.reverse();
        let compensated_rev = kahan_sum(reversed);
        assert!((compensated - compensated_rev).abs() < 1e-13);
    }
}
