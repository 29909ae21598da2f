//! Exponent formulas, the beta-constraint arithmetic, derived scales, and
//! the statistics used to report estimates (Wilson intervals, log-log fits).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub alpha: f64,
    /// One-arm exponent `min(4, alpha) / 2`.
    pub rho: f64,
    /// Truncated-cluster exponent `min(alpha / (2 alpha + 2), 2/5)`.
    pub xi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha <= 0.0 {
        return invalid(format!("alpha must be > 0 (got {alpha})"));
    }
    if alpha == 2.0 {
        return invalid("alpha = 2 is excluded (logarithmic corrections are not treated)");
    }
    Ok(())
}

/// Exponents for decay exponent `alpha` (`f64::INFINITY` allowed).
pub fn exponents(alpha: f64) -> Result<ExponentSet> {
    check_alpha(alpha)?;
    let four = alpha.min(4.0);
    let xi = if alpha.is_infinite() { 0.4 } else { (alpha / (2.0 * alpha + 2.0)).min(0.4) };
    let beta_hi = if alpha <= 4.0 { (alpha + 1.0) / (alpha * alpha) } else { 5.0 / 16.0 };
    Ok(ExponentSet { alpha, rho: four / 2.0, xi, beta_lo: 11.0 / (10.0 * four), beta_hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    pub alpha: f64,
    pub beta: f64,
    /// `-(beta ∧ 1/(2 rho)) < 1 - 2 beta rho < 0`
    pub shell_chain: bool,
    /// `2 beta rho > 11/10`
    pub volume_chain: bool,
    /// `-1 < beta (xi - rho) < 0`
    pub truncation_chain: bool,
    pub all: bool,
}

pub fn beta_constraints_hold(alpha: f64, beta: f64) -> Result<BetaReport> {
    let e = exponents(alpha)?;
    let two_beta_rho = 2.0 * beta * e.rho;
    let middle = 1.0 - two_beta_rho;
    let shell_chain = -(beta.min(1.0 / (2.0 * e.rho))) < middle && middle < 0.0;
    let volume_chain = two_beta_rho > 1.1;
    let t = beta * (e.xi - e.rho);
    let truncation_chain = -1.0 < t && t < 0.0;
    Ok(BetaReport {
        alpha,
        beta,
        shell_chain,
        volume_chain,
        truncation_chain,
        all: shell_chain && volume_chain && truncation_chain,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedScales {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub j_list: Vec<f64>,
    /// `1 - 2 beta rho`; the bound on `J` scales as `epsilon` to this power.
    pub j_bound_exponent: f64,
}

impl DerivedScales {
    /// `a^{-1} epsilon^{1 - 2 beta rho}`.
    pub fn j_bound(&self, a: f64) -> f64 {
        self.epsilon.powf(self.j_bound_exponent) / a
    }

    /// `J`-bound over `N`; must vanish as `epsilon -> 0` for the counting argument to bite.
    pub fn j_over_n(&self, a: f64) -> f64 {
        self.j_bound(a) / self.n
    }
}

pub fn derived_scales(epsilon: f64, r: f64, lambda: f64, alpha: f64, beta: f64) -> Result<DerivedScales> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("epsilon must lie in (0, 1) (got {epsilon})"));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return invalid(format!("lambda must lie in (0, 1] (got {lambda})"));
    }
    if !(r >= 1.0 && r.is_finite()) {
        return invalid(format!("r must be >= 1 (got {r})"));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return invalid(format!("beta must be > 0 (got {beta})"));
    }
    let e = exponents(alpha)?;
    let delta = epsilon.powf(1.0 / (2.0 * e.rho));
    let eb = epsilon.powf(beta);
    let l = eb * r;
    let n = lambda / (4.0 * (eb + delta));
    let step = l + delta * r;
    let start = r + lambda * r / 4.0;
    if n.floor() > 1e7 {
        return Err(Error::TooLarge(format!("N = {n:.3e} shell levels; increase epsilon")));
    }
    let count = n.floor() as usize;
    let (lo, hi) = (r * (1.0 + lambda / 4.0), r * (1.0 + lambda / 2.0));
    let slack = 1e-9 * hi;
    let mut j_list = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let j = start + i as f64 * step;
        if j < lo - slack || j > hi + slack {
            return Err(Error::NumericalGuard(format!("j_{i} = {j} left [{lo}, {hi}]")));
        }
        j_list.push(j);
    }
    Ok(DerivedScales { epsilon, delta, l, n, j_list, j_bound_exponent: 1.0 - 2.0 * beta * e.rho })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_ci(hits: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return invalid("Wilson interval needs trials >= 1");
    }
    if hits > trials {
        return invalid(format!("hits {hits} exceed trials {trials}"));
    }
    if !(level > 0.0 && level < 1.0) {
        return invalid(format!("confidence level must lie in (0, 1) (got {level})"));
    }
    let z = Normal::standard().inverse_cdf(1.0 - (1.0 - level) / 2.0);
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if hits == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if hits == trials { 1.0 } else { (centre + half).min(1.0) };
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub weighted: bool,
    pub points: usize,
}

/// Least squares on `(ln r, ln value)`. With every `stderr > 0` each point is
/// weighted by `(value / stderr)^2` (the inverse variance of `ln value`) and
/// the slope error assumes those variances are correct; otherwise the fit is
/// unweighted with a residual-based slope error.
pub fn loglog_fit(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return invalid(format!("log-log fit needs >= 3 points (got {})", points.len()));
    }
    for &(r, v, _) in points {
        if !(r > 0.0 && v > 0.0 && r.is_finite() && v.is_finite()) {
            return invalid(format!("log-log fit needs positive finite abscissae and values (got r = {r}, value = {v})"));
        }
    }
    let weighted = points.iter().all(|&(_, _, s)| s > 0.0 && s.is_finite());
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let ws: Vec<f64> =
        points.iter().map(|&(_, v, s)| if weighted { (v / s).powi(2) } else { 1.0 }).collect();
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * (x - xm).powi(2)).sum();
    if sxx <= 1e-300 {
        return invalid("log-log fit needs distinct abscissae");
    }
    let sxy: f64 = xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let syy: f64 = ys.iter().zip(&ws).map(|(y, w)| w * (y - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let sse: f64 =
        xs.iter().zip(&ys).zip(&ws).map(|((x, y), w)| w * (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr =
        if weighted { (1.0 / sxx).sqrt() } else { (sse / (points.len() as f64 - 2.0) / sxx).sqrt() };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(FitResult { slope, intercept, slope_stderr, r_squared, weighted, points: points.len() })
}

/// Which model produced a table; decides the CSV columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Brw,
    Lrp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub r: i64,
    pub hits: u64,
    pub trials: u64,
    pub gamma_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Tree size cap (BRW) or vertex cap (LRP).
    pub cap: u64,
    /// `P(|T| >= cap)` from the progeny oracle (BRW only).
    pub cap_tail_bound: Option<f64>,
    /// Samples counted as hits only because the cap was reached (BRW) or
    /// the exploration was inconclusive (LRP).
    pub unresolved: u64,
    pub window: Option<i64>,
}

impl EstimateRow {
    pub fn new(r: i64, hits: u64, trials: u64, cap: u64) -> Result<Self> {
        let (ci_lo, ci_hi) = wilson_ci(hits, trials, 0.95)?;
        Ok(EstimateRow {
            r,
            hits,
            trials,
            gamma_hat: hits as f64 / trials as f64,
            ci_lo,
            ci_hi,
            cap,
            cap_tail_bound: None,
            unresolved: 0,
            window: None,
        })
    }

    /// Binomial standard error of `gamma_hat`.
    pub fn stderr(&self) -> f64 {
        let p = self.gamma_hat;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    pub fn unresolved_fraction(&self) -> f64 {
        self.unresolved as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateTable {
    pub model: Model,
    pub rows: Vec<EstimateRow>,
}

/// Radii with fewer hits than this are left out of exponent fits.
pub const MIN_FIT_HITS: u64 = 10;

impl EstimateTable {
    pub fn header(&self) -> &'static str {
        match self.model {
            Model::Brw => "r,hits,trials,gamma_hat,ci_lo,ci_hi,cap,cap_tail_bound,truncated",
            Model::Lrp => "r,hits,trials,gamma_hat,ci_lo,ci_hi,cap,window,indeterminate,indeterminate_fraction",
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(self.header());
        s.push('\n');
        for row in &self.rows {
            let _ = write!(
                s,
                "{},{},{},{},{},{},{}",
                row.r, row.hits, row.trials, row.gamma_hat, row.ci_lo, row.ci_hi, row.cap
            );
            match self.model {
                Model::Brw => {
                    let bound = row.cap_tail_bound.map(|b| b.to_string()).unwrap_or_default();
                    let _ = writeln!(s, ",{bound},{}", row.unresolved);
                }
                Model::Lrp => {
                    let window = row.window.map(|w| w.to_string()).unwrap_or_default();
                    let _ = writeln!(s, ",{window},{},{}", row.unresolved, row.unresolved_fraction());
                }
            }
        }
        s
    }

    /// Log-log fit of `gamma_hat` against `r` over rows with at least `min_hits` hits.
    pub fn fit(&self, min_hits: u64) -> Result<FitResult> {
        let points: Vec<(f64, f64, f64)> = self
            .rows
            .iter()
            .filter(|row| row.hits >= min_hits && row.r > 0)
            .map(|row| (row.r as f64, row.gamma_hat, row.stderr()))
            .collect();
        loglog_fit(&points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_examples() {
        let e = exponents(0.8).unwrap();
        assert!((e.rho - 0.4).abs() < 1e-15);
        assert!((e.xi - 0.8 / 3.6).abs() < 1e-15);
        assert!((e.beta_lo - 1.375).abs() < 1e-15 && (e.beta_hi - 2.8125).abs() < 1e-15);
        let e = exponents(4.0).unwrap();
        assert_eq!(e.rho, 2.0);
        assert!((e.beta_lo - 0.275).abs() < 1e-15 && (e.beta_hi - 0.3125).abs() < 1e-15);
        let e = exponents(8.0).unwrap();
        assert_eq!((e.rho, e.xi), (2.0, 0.4));
        assert!((e.beta_lo - 0.275).abs() < 1e-15 && (e.beta_hi - 0.3125).abs() < 1e-15);
        let e = exponents(f64::INFINITY).unwrap();
        assert_eq!((e.rho, e.xi, e.beta_hi), (2.0, 0.4, 0.3125));
        assert!(exponents(2.0).is_err());
        assert!(exponents(0.0).is_err());
        assert!(exponents(-1.0).is_err());
    }

    #[test]
    fn beta_midpoints_satisfy_constraints() {
        for alpha in [0.5, 1.0, 1.5, 3.0, 4.0, 5.0, 10.0] {
            let e = exponents(alpha).unwrap();
            let rep = beta_constraints_hold(alpha, 0.5 * (e.beta_lo + e.beta_hi)).unwrap();
            assert!(rep.all, "alpha = {alpha}: {rep:?}");
        }
        let e = exponents(4.0).unwrap();
        assert!(!beta_constraints_hold(4.0, e.beta_hi + 0.1).unwrap().all);
        assert!(beta_constraints_hold(8.0, 0.3).unwrap().volume_chain);
    }

    #[test]
    fn derived_scale_example() {
        let s = derived_scales(0.01, 1000.0, 1.0, 8.0, 0.3).unwrap();
        assert!((s.delta - 0.01f64.powf(0.25)).abs() < 1e-12);
        assert!((s.l - 251.188_643_150_958).abs() < 1e-9);
        assert!((s.n - 0.25 / (0.01f64.powf(0.3) + 0.01f64.powf(0.25))).abs() < 1e-12);
        assert!((s.n - 0.4405).abs() < 1e-3);
        assert_eq!(s.j_list, vec![1250.0]);
        assert!(derived_scales(1.0, 10.0, 1.0, 8.0, 0.3).is_err());
        assert!(derived_scales(0.1, 10.0, 1.5, 8.0, 0.3).is_err());
    }

    #[test]
    fn derived_scales_shrinking_epsilon() {
        let e = exponents(0.8).unwrap();
        let beta = 0.5 * (e.beta_lo + e.beta_hi);
        let mut prev_n = 0.0;
        let mut prev_j = 0.0;
        let mut prev_ratio = f64::INFINITY;
        for k in 1..=6 {
            let eps = 10f64.powi(-k);
            let s = derived_scales(eps, 100.0, 1.0, 0.8, beta).unwrap();
            assert!(s.n > prev_n);
            // N >> J >> 1
            assert!(s.j_bound(1.0) > prev_j);
            assert!(s.j_over_n(1.0) < prev_ratio);
            for &j in &s.j_list {
                assert!((125.0 - 1e-9..=150.0 + 1e-9).contains(&j));
            }
            prev_n = s.n;
            assert!(k < 6 || prev_ratio < 0.05);
            prev_j = s.j_bound(1.0);
            prev_ratio = s.j_over_n(1.0);
        }
    }

    #[test]
    fn wilson_examples() {
        assert_eq!(wilson_ci(0, 20, 0.95).unwrap().0, 0.0);
        assert_eq!(wilson_ci(20, 20, 0.95).unwrap().1, 1.0);
        let (lo, hi) = wilson_ci(50, 100, 0.95).unwrap();
        assert!(lo < 0.5 && hi > 0.5);
        assert!((hi - lo - 0.1923).abs() < 1e-3, "{}", hi - lo);
        assert!(wilson_ci(1, 0, 0.95).is_err());
        assert!(wilson_ci(3, 2, 0.95).is_err());
    }

    #[test]
    fn fits_exact_power_laws() {
        let pts: Vec<(f64, f64, f64)> = (1..=6).map(|k| {
            let r = 2f64.powi(k);
            (r, r.powi(-2), 0.0)
        }).collect();
        let f = loglog_fit(&pts).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-12);
        let flat: Vec<(f64, f64, f64)> = (1..=5).map(|k| (k as f64, 3.0, 0.1)).collect();
        assert!(loglog_fit(&flat).unwrap().slope.abs() < 1e-12);
        assert!(loglog_fit(&pts[..2]).is_err());
        assert!(loglog_fit(&[(1.0, 1.0, 0.0), (2.0, 0.0, 0.0), (3.0, 1.0, 0.0)]).is_err());
        assert!(loglog_fit(&[(2.0, 1.0, 0.0), (2.0, 2.0, 0.0), (2.0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn table_csv_layout() {
        let mut row = EstimateRow::new(8, 5, 10, 100).unwrap();
        row.cap_tail_bound = Some(0.25);
        let t = EstimateTable { model: Model::Brw, rows: vec![row] };
        let csv = t.to_csv();
        assert!(csv.starts_with("r,hits,trials,gamma_hat,ci_lo,ci_hi,cap,cap_tail_bound,truncated\n8,5,10,0.5,"));
        assert!(csv.ends_with(",100,0.25,0\n"));
    }
}
