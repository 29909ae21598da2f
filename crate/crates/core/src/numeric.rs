//! Small numerical helpers shared by the kernel and the oracles.

/// Neumaier compensated accumulator.
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

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
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

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Exact count of lattice sites with sup-norm exactly `k` in dimension `d`,
/// `(2k+1)^d - (2k-1)^d`, evaluated without cancellation.
pub fn shell_size(d: usize, k: i64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    // 2 * sum_{i odd} C(d, i) (2k)^{d-i}
    let two_k = 2.0 * k as f64;
    let mut total = 0.0;
    let mut binom = 1.0;
    for i in 0..=d {
        if i > 0 {
            binom = binom * (d + 1 - i) as f64 / i as f64;
        }
        if i % 2 == 1 {
            total += binom * two_k.powi((d - i) as i32);
        }
    }
    2.0 * total
}

/// Exact integer site count of the shell, when it fits.
pub fn shell_size_exact(d: usize, k: i64) -> Option<u64> {
    if k == 0 {
        return Some(1);
    }
    let outer = (2 * k as u64 + 1).checked_pow(d as u32)?;
    let inner = (2 * k as u64 - 1).checked_pow(d as u32)?;
    Some(outer - inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat(1e-16).take(10_000));
        let s = compensated_sum(xs);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((integral - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn shell_sizes_match_counts() {
        for d in 1..=4 {
            for k in 0..6 {
                let exact = shell_size_exact(d, k).unwrap() as f64;
                assert_eq!(shell_size(d, k), exact, "d={d} k={k}");
            }
        }
    }
}
