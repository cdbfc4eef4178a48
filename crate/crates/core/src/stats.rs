//! Numeric and statistical helpers.

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
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

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::new();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// log(sum(exp(xs))) handling -inf entries.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// P(Bin(n, p) >= m).
pub fn binomial_upper_tail(n: usize, p: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > n {
        return 0.0;
    }
    let terms: Vec<f64> = (m..=n)
        .map(|k| ln_binomial(n, k) + xlny(k as f64, p) + xlny((n - k) as f64, 1.0 - p))
        .collect();
    logsumexp(&terms).exp().min(1.0)
}

/// P(Bin(n, p) <= m).
pub fn binomial_lower_tail(n: usize, p: f64, m: usize) -> f64 {
    if m >= n {
        return 1.0;
    }
    let terms: Vec<f64> = (0..=m)
        .map(|k| ln_binomial(n, k) + xlny(k as f64, p) + xlny((n - k) as f64, 1.0 - p))
        .collect();
    logsumexp(&terms).exp().min(1.0)
}

/// x * ln(y) with 0 * ln(0) = 0.
#[inline]
pub fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// Deterministic seed derivation for parallel streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated() {
        let xs = std::iter::once(1e16).chain(std::iter::repeat_n(1.0, 1000)).chain(std::iter::once(-1e16));
        assert_eq!(compensated_sum(xs), 1000.0);
    }

    #[test]
    fn wilson_contains_phat() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson_interval(0, 50, 3.0);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn binomial_tails_sum() {
        let n = 9;
        let p = 0.3;
        let up = binomial_upper_tail(n, p, 4);
        let low = binomial_lower_tail(n, p, 3);
        assert!((up + low - 1.0).abs() < 1e-12);
    }
}
