//! Neumaier-compensated running sums.

/// A compensated sum. Merging two sums in a fixed order is deterministic.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Restore a sum from its two stored parts.
    pub fn from_parts(sum: f64, compensation: f64) -> Self {
        CompensatedSum { sum, compensation }
    }

    pub fn parts(&self) -> (f64, f64) {
        (self.sum, self.compensation)
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.compensation += other.compensation;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn merge_matches_sequential_on_exact_values() {
        let mut a = CompensatedSum::new();
        let mut b = CompensatedSum::new();
        let mut all = CompensatedSum::new();
        for i in 0..100 {
            let x = i as f64 * 0.25;
            if i < 50 {
                a.add(x)
            } else {
                b.add(x)
            }
            all.add(x);
        }
        a.merge(&b);
        assert_eq!(a.value(), all.value());
    }
}
