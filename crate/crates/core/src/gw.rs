//! Critical Galton–Watson trees and the Otter–Dwass total-progeny oracle.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric::CompensatedSum;

/// Largest offspring count an explicit table may carry.
pub const MAX_OFFSPRING: usize = 64;

/// Parent marker of the root.
pub const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Table { probs: Vec<f64>, cdf: Vec<f64> },
    /// `p_m = 2^{-(m+1)}`.
    GeometricHalf,
}

/// Critical offspring law with finite, positive variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OffspringRepr", into = "OffspringRepr")]
pub struct OffspringDist {
    law: Law,
    sigma_sq: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OffspringRepr {
    Table(Vec<f64>),
    Named(String),
}

impl TryFrom<OffspringRepr> for OffspringDist {
    type Error = String;
    fn try_from(r: OffspringRepr) -> std::result::Result<Self, String> {
        match r {
            OffspringRepr::Table(p) => OffspringDist::table(p).map_err(|e| e.to_string()),
            OffspringRepr::Named(s) => match s.as_str() {
                "geometric-half" => Ok(OffspringDist::geometric_half()),
                "binary" => Ok(OffspringDist::binary()),
                other => Err(format!("unknown offspring law {other:?} (expected a table, \"binary\" or \"geometric-half\")")),
            },
        }
    }
}

impl From<OffspringDist> for OffspringRepr {
    fn from(o: OffspringDist) -> Self {
        match o.law {
            Law::Table { probs, .. } => OffspringRepr::Table(probs),
            Law::GeometricHalf => OffspringRepr::Named("geometric-half".into()),
        }
    }
}

impl OffspringDist {
    /// `probs[m] = P(xi = m)`.
    pub fn table(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.len() > MAX_OFFSPRING + 1 {
            return invalid(format!("offspring table needs 1..={} entries (got {})", MAX_OFFSPRING + 1, probs.len()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return invalid("offspring probabilities must be finite and >= 0");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("offspring probabilities sum to {total}, not 1"));
        }
        let mean: f64 = probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
        if (mean - 1.0).abs() > 1e-12 {
            return invalid(format!("offspring mean is {mean}; a critical law has mean 1"));
        }
        let sigma_sq: f64 = probs.iter().enumerate().map(|(m, p)| (m * m.saturating_sub(1)) as f64 * p).sum();
        if sigma_sq <= 1e-12 {
            return invalid("offspring law is degenerate (sigma_p^2 = 0)");
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(OffspringDist { law: Law::Table { probs, cdf }, sigma_sq })
    }

    /// `p_0 = p_2 = 1/2`.
    pub fn binary() -> Self {
        Self::table(vec![0.5, 0.0, 0.5]).expect("binary law is valid")
    }

    pub fn geometric_half() -> Self {
        OffspringDist { law: Law::GeometricHalf, sigma_sq: 2.0 }
    }

    /// `sigma_p^2 = sum_m m (m - 1) p_m`.
    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn prob(&self, m: usize) -> f64 {
        match &self.law {
            Law::Table { probs, .. } => probs.get(m).copied().unwrap_or(0.0),
            Law::GeometricHalf => 0.5f64.powi(m as i32 + 1),
        }
    }

    /// Probabilities `p_0..p_M`, or `None` for the unbounded geometric law.
    pub fn probs(&self) -> Option<&[f64]> {
        match &self.law {
            Law::Table { probs, .. } => Some(probs),
            Law::GeometricHalf => None,
        }
    }

    pub fn is_geometric_half(&self) -> bool {
        matches!(self.law, Law::GeometricHalf)
    }

    /// Probability generating function `f(s) = E[s^xi]`.
    pub fn pgf(&self, s: f64) -> f64 {
        match &self.law {
            Law::Table { probs, .. } => probs.iter().rev().fold(0.0, |acc, p| acc * s + p),
            Law::GeometricHalf => 1.0 / (2.0 - s),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.law {
            Law::Table { cdf, .. } => {
                let u: f64 = rng.random();
                cdf.iter().position(|&c| u < c).unwrap_or_else(|| last_positive(cdf))
            }
            Law::GeometricHalf => loop {
                let bits: u64 = rng.random();
                if bits != 0 {
                    return bits.trailing_zeros() as usize;
                }
            },
        }
    }
}

fn last_positive(cdf: &[f64]) -> usize {
    // u landed above a cdf that rounds below 1
    let mut m = cdf.len() - 1;
    while m > 0 && cdf[m] == cdf[m - 1] {
        m -= 1;
    }
    m
}

/// Tree in breadth-first order: `parents[i] < i`, the root is vertex 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    parents: Vec<u32>,
    truncated: bool,
}

impl Tree {
    pub fn from_parents(parents: Vec<u32>, truncated: bool) -> Result<Self> {
        if parents.first() != Some(&NO_PARENT) {
            return invalid("tree must start with a root");
        }
        for (i, &p) in parents.iter().enumerate().skip(1) {
            if p as usize >= i {
                return invalid(format!("vertex {i} has parent {p}; parents must precede children"));
            }
        }
        Ok(Tree { parents, truncated })
    }

    pub fn size(&self) -> usize {
        self.parents.len()
    }

    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        match self.parents[v] {
            NO_PARENT => None,
            p => Some(p as usize),
        }
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Generation of every vertex.
    pub fn depths(&self) -> Vec<u32> {
        let mut depth = vec![0u32; self.parents.len()];
        for i in 1..self.parents.len() {
            depth[i] = depth[self.parents[i] as usize] + 1;
        }
        depth
    }
}

/// Breadth-first GW tree; stops (flagging truncation) once the vertex count
/// would exceed `cap`, keeping the partial generation.
pub fn sample_tree<R: Rng + ?Sized>(off: &OffspringDist, cap: usize, rng: &mut R) -> Result<Tree> {
    if cap < 1 {
        return invalid("tree cap must be >= 1");
    }
    let mut parents = vec![NO_PARENT];
    let mut truncated = false;
    let mut i = 0;
    while i < parents.len() {
        let xi = off.sample(rng);
        if parents.len() + xi > cap {
            let room = cap - parents.len();
            parents.extend(std::iter::repeat_n(i as u32, room));
            truncated = true;
            break;
        }
        parents.extend(std::iter::repeat_n(i as u32, xi));
        i += 1;
    }
    Ok(Tree { parents, truncated })
}

/// Size of a GW tree, without storing it. Returns `cap + 1` when the tree has more than `cap` vertices.
pub fn sample_size<R: Rng + ?Sized>(off: &OffspringDist, cap: usize, rng: &mut R) -> usize {
    let mut size = 1usize;
    let mut processed = 0usize;
    while processed < size {
        size += off.sample(rng);
        processed += 1;
        if size > cap {
            return cap + 1;
        }
    }
    size
}

/// `P(|T| = n)` for `n = 0..=n_max` (entry 0 is zero), from
/// `P(|T| = n) = P(S_n = n - 1) / n` with `S_n` the `n`-fold offspring sum.
pub fn total_progeny_pmf(off: &OffspringDist, n_max: usize) -> Result<Vec<f64>> {
    if n_max < 1 {
        return invalid("n_max must be >= 1");
    }
    let mut out = vec![0.0; n_max + 1];
    match &off.law {
        Law::GeometricHalf => {
            // (1/n) C(2n-2, n-1) 2^{-(2n-1)} by its term ratio (2n - 1) / (2n + 2)
            out[1] = 0.5;
            for n in 1..n_max {
                out[n + 1] = out[n] * (2 * n - 1) as f64 / (2 * n + 2) as f64;
            }
        }
        Law::Table { probs, .. } => {
            // S_n restricted to [0, n_max - 1]; larger values never return below
            let width = n_max;
            let mut dist = vec![0.0; width];
            dist[0] = 1.0;
            let mut next = vec![0.0; width];
            for n in 1..=n_max {
                next.iter_mut().for_each(|v| *v = 0.0);
                for (k, &v) in dist.iter().enumerate() {
                    if v == 0.0 {
                        continue;
                    }
                    for (m, &p) in probs.iter().enumerate() {
                        if k + m >= width {
                            break;
                        }
                        next[k + m] += v * p;
                    }
                }
                std::mem::swap(&mut dist, &mut next);
                let mass: f64 = dist.iter().sum();
                if mass > 1.0 + n as f64 * 1e-15 {
                    return Err(Error::NumericalGuard(format!("convolution mass {mass} exceeds 1 at n = {n}")));
                }
                out[n] = dist[n - 1] / n as f64;
            }
        }
    }
    Ok(out)
}

/// `P(|T| >= s) = 1 - sum_{n < s} P(n)` for `s = 0..=n_max`.
pub fn survival_tail(pmf: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pmf.len());
    let mut acc = CompensatedSum::new();
    for &p in pmf {
        out.push((1.0 - acc.value()).max(0.0));
        acc.add(p);
    }
    out
}

/// Survival function of the total progeny: exact up to `exact_limit`,
/// extrapolated as `P(|T| >= n0) sqrt(n0 / s)` beyond (relative error `O(1/n0)`).
#[derive(Debug, Clone)]
pub struct ProgenySurvival {
    tail: Vec<f64>,
}

impl ProgenySurvival {
    pub const DEFAULT_EXACT_LIMIT: usize = 1 << 14;

    pub fn new(off: &OffspringDist, exact_limit: usize) -> Result<Self> {
        let pmf = total_progeny_pmf(off, exact_limit.max(2))?;
        Ok(ProgenySurvival { tail: survival_tail(&pmf) })
    }

    pub fn exact_limit(&self) -> usize {
        self.tail.len() - 1
    }

    /// `P(|T| >= s)`.
    pub fn at(&self, s: u64) -> f64 {
        let n0 = self.exact_limit();
        if (s as usize) <= n0 {
            return self.tail[s as usize];
        }
        // average two neighbours so lattice-periodic laws do not bias the anchor
        let anchor = 0.5 * (self.tail[n0] + self.tail[n0 - 1]);
        let base = n0 as f64 - 0.5;
        anchor * (base / s as f64).sqrt()
    }
}

/// Leading-order Kolmogorov constant: `P(|T| >= s) ~ sqrt(2 / (pi sigma^2 s))`.
pub fn progeny_tail_constant(sigma_sq: f64) -> f64 {
    (2.0 / (std::f64::consts::PI * sigma_sq)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn sigma_sq_values() {
        assert_eq!(OffspringDist::binary().sigma_sq(), 1.0);
        assert_eq!(OffspringDist::geometric_half().sigma_sq(), 2.0);
        let t = OffspringDist::table(vec![2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0]).unwrap();
        assert!((t.sigma_sq() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_laws() {
        assert!(OffspringDist::table(vec![0.0, 1.0]).is_err());
        assert!(OffspringDist::table(vec![0.5, 0.5]).is_err());
        assert!(OffspringDist::table(vec![0.5, 0.0, 0.4]).is_err());
        assert!(OffspringDist::table(vec![]).is_err());
        assert!(OffspringDist::table(vec![0.5, -0.1, 0.6]).is_err());
    }

    #[test]
    fn serde_forms() {
        let g: OffspringDist = serde_json::from_str("\"geometric-half\"").unwrap();
        assert!(g.is_geometric_half());
        let b: OffspringDist = serde_json::from_str("[0.5, 0, 0.5]").unwrap();
        assert_eq!(b, OffspringDist::binary());
        assert_eq!(serde_json::to_string(&g).unwrap(), "\"geometric-half\"");
        assert!(serde_json::from_str::<OffspringDist>("[0.0, 1.0]").is_err());
    }

    #[test]
    fn dwass_small_values() {
        let p = total_progeny_pmf(&OffspringDist::binary(), 9).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 0.5).abs() < 1e-16);
        assert!((p[3] - 0.125).abs() < 1e-16);
        assert!((p[5] - 0.0625).abs() < 1e-16);
        // Catalan: C_4 / 2^9
        assert!((p[9] - 14.0 / 512.0).abs() < 1e-16);
        assert!(p[2] == 0.0 && p[4] == 0.0 && p[8] == 0.0);
        let g = total_progeny_pmf(&OffspringDist::geometric_half(), 3).unwrap();
        assert!((g[1] - 0.5).abs() < 1e-16 && (g[2] - 0.125).abs() < 1e-16 && (g[3] - 0.0625).abs() < 1e-16);
    }

    #[test]
    fn geometric_closed_form_matches_truncated_table() {
        // a 65-entry truncation of the geometric law, renormalized, agrees for small n
        let mut probs: Vec<f64> = (0..=MAX_OFFSPRING).map(|m| 0.5f64.powi(m as i32 + 1)).collect();
        // push the missing mass 2^-65 onto m = 0 and fix the mean on m = 2 approximately: the
        // perturbation is below 1e-18 and invisible at the tested precision
        probs[0] += 0.5f64.powi(MAX_OFFSPRING as i32 + 1);
        let mean: f64 = probs.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
        probs[1] += 1.0 - mean;
        probs[0] -= 1.0 - mean;
        let t = OffspringDist::table(probs).unwrap();
        let a = total_progeny_pmf(&t, 40).unwrap();
        let b = total_progeny_pmf(&OffspringDist::geometric_half(), 40).unwrap();
        for n in 1..=40 {
            assert!((a[n] - b[n]).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn survival_tail_basics() {
        let pmf = total_progeny_pmf(&OffspringDist::binary(), 10_000).unwrap();
        let tail = survival_tail(&pmf);
        assert_eq!(tail[1], 1.0);
        assert!((tail[2] - 0.5).abs() < 1e-15);
        assert!(tail.windows(2).all(|w| w[1] <= w[0]));
        let c = (10_000f64).sqrt() * tail[10_000];
        assert!((c - progeny_tail_constant(1.0)).abs() < 1e-3, "{c}");
    }

    #[test]
    fn survival_extrapolation_is_continuous() {
        let s = ProgenySurvival::new(&OffspringDist::binary(), 4096).unwrap();
        let exact = ProgenySurvival::new(&OffspringDist::binary(), 16_384).unwrap();
        let far = s.at(16_000);
        assert!(((far - exact.at(16_000)) / far).abs() < 1e-3);
    }

    #[test]
    fn cap_one_is_bare_root() {
        let off = OffspringDist::binary();
        let mut rng = stream(9, 0);
        for _ in 0..1000 {
            let t = sample_tree(&off, 1, &mut rng).unwrap();
            assert_eq!(t.size(), 1);
        }
        let mut rng = stream(9, 0);
        let mut rng2 = stream(9, 0);
        for _ in 0..1000 {
            let t = sample_tree(&off, 1, &mut rng).unwrap();
            assert_eq!(t.truncated(), off.sample(&mut rng2) > 0);
        }
    }

    #[test]
    fn tree_structure_invariants() {
        let off = OffspringDist::geometric_half();
        let mut rng = stream(11, 0);
        for _ in 0..2000 {
            let t = sample_tree(&off, 500, &mut rng).unwrap();
            assert!(t.size() <= 500);
            assert!(Tree::from_parents(t.parents().to_vec(), t.truncated()).is_ok());
            if !t.truncated() {
                assert!(t.size() < 500 || t.size() == 500);
            } else {
                assert_eq!(t.size(), 500);
            }
        }
    }

    #[test]
    fn sample_size_agrees_with_tree() {
        let off = OffspringDist::binary();
        for i in 0..500 {
            let t = sample_tree(&off, 100, &mut stream(3, i)).unwrap();
            let s = sample_size(&off, 100, &mut stream(3, i));
            if t.truncated() {
                assert_eq!(s, 101);
            } else {
                assert_eq!(s, t.size());
            }
        }
    }

    #[test]
    fn pgf_values() {
        let b = OffspringDist::binary();
        assert!((b.pgf(0.0) - 0.5).abs() < 1e-16);
        assert!((b.pgf(1.0) - 1.0).abs() < 1e-16);
        assert!((OffspringDist::geometric_half().pgf(0.5) - 2.0 / 3.0).abs() < 1e-16);
    }
}
