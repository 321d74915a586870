//! Order-fixed compensated reductions.
//!
//! All reductions run sequentially over values stored by path index, so a
//! result never depends on how the values were produced.

use num_traits::Float;

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

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

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

/// Two-pass mean / standard error over an indexed sequence.
pub fn mean_se<F: Fn(usize) -> f64>(n: usize, value: F) -> MeanSe {
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN, n };
    }
    let mean = sum((0..n).map(&value)) / n as f64;
    if n < 2 {
        return MeanSe { mean, se: 0.0, n };
    }
    let ss = sum((0..n).map(|i| {
        let d = value(i) - mean;
        d * d
    }));
    let var = ss / (n - 1) as f64;
    MeanSe { mean, se: (var / n as f64).sqrt(), n }
}

pub fn mean_se_of(xs: &[f64]) -> MeanSe {
    mean_se(xs.len(), |i| xs[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = KahanSum::new();
        acc.add(1e16);
        for _ in 0..1000 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 1000.0);
    }

    #[test]
    fn mean_se_matches_textbook() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let m = mean_se_of(&xs);
        assert_eq!(m.mean, 2.5);
        // sample variance 5/3
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
