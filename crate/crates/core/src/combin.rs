//! Small combinatorial helpers: binomials, subset ranking, set partitions.

/// Binomial coefficient as `u64` (saturating on overflow).
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Binomial coefficient as `f64`.
pub fn binomial_f(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Falling factorial (n)_k = n (n-1) ... (n-k+1).
pub fn falling(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).map(|i| (n - i) as f64).product()
}

pub fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// Colex ranking of sorted r-subsets of [n].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIndex {
    n: usize,
    r: usize,
    table: Vec<Vec<usize>>,
}

impl SubsetIndex {
    pub fn new(n: usize, r: usize) -> Self {
        let table = (0..=n)
            .map(|i| (0..=r).map(|j| binomial(i, j) as usize).collect())
            .collect();
        SubsetIndex { n, r, table }
    }

    pub fn len(&self) -> usize {
        self.table[self.n][self.r]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rank of a strictly increasing subset.
    #[inline]
    pub fn rank(&self, sorted: &[usize]) -> usize {
        sorted
            .iter()
            .enumerate()
            .map(|(j, &x)| self.table[x][j + 1])
            .sum()
    }

    /// Rank of an arbitrary tuple; `None` on repeated coordinates.
    pub fn rank_tuple(&self, tuple: &[usize]) -> Option<usize> {
        let mut buf = [0usize; 16];
        let s = &mut buf[..tuple.len()];
        s.copy_from_slice(tuple);
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some(self.rank(s))
    }

    pub fn unrank(&self, mut rank: usize) -> Vec<usize> {
        let mut out = vec![0; self.r];
        let mut x = self.n;
        for j in (1..=self.r).rev() {
            x -= 1;
            while self.table[x][j] > rank {
                x -= 1;
            }
            out[j - 1] = x;
            rank -= self.table[x][j];
        }
        out
    }
}

/// Advance a sorted k-subset of [n] in lexicographic order.
pub fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// All k-subsets of [n] in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k > n {
        return Vec::new();
    }
    let mut c: Vec<usize> = (0..k).collect();
    let mut out = vec![c.clone()];
    if k == 0 {
        return out;
    }
    while next_combination(&mut c, n) {
        out.push(c.clone());
    }
    out
}

/// Visit all set partitions of [v] as restricted growth strings, with the block count.
pub fn for_each_partition(v: usize, mut f: impl FnMut(&[usize], usize)) {
    let mut a = vec![0usize; v];
    fn rec(i: usize, blocks: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize], usize)) {
        if i == a.len() {
            f(a, blocks);
            return;
        }
        for b in 0..=blocks {
            a[i] = b;
            rec(i + 1, blocks.max(b + 1), a, f);
        }
    }
    if v == 0 {
        f(&a, 0);
        return;
    }
    rec(0, 0, &mut a, &mut f);
}

/// Mixed-radix tuple counter over [n]^k; returns false after the last tuple.
#[inline]
pub fn next_tuple(t: &mut [usize], n: usize) -> bool {
    for i in (0..t.len()).rev() {
        t[i] += 1;
        if t[i] < n {
            return true;
        }
        t[i] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial_f(10, 3), 120.0);
        assert_eq!(falling(5, 3), 60.0);
    }

    #[test]
    fn rank_roundtrip() {
        let idx = SubsetIndex::new(7, 3);
        assert_eq!(idx.len(), 35);
        let mut seen = [false; 35];
        for c in combinations(7, 3) {
            let k = idx.rank(&c);
            assert!(!seen[k]);
            seen[k] = true;
            assert_eq!(idx.unrank(k), c);
        }
        assert_eq!(idx.rank_tuple(&[2, 0, 2]), None);
        assert_eq!(idx.rank_tuple(&[4, 1, 0]), Some(idx.rank(&[0, 1, 4])));
    }

    #[test]
    fn bell_numbers() {
        for (v, bell) in [(0, 1), (1, 1), (3, 5), (5, 52)] {
            let mut count = 0;
            for_each_partition(v, |_, _| count += 1);
            assert_eq!(count, bell);
        }
    }
}
