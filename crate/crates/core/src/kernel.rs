//! One-step distributions `D(0, x) = h(x / Lambda) / sum_y h(y / Lambda)` on `Z^d`.
//!
//! A [`Kernel`] tabulates the mass of every sup-norm shell up to a radius
//! `R_tab` and carries a closed-form model of the mass beyond it. Sampling is
//! radius first: the shell is drawn from the cumulative shell table (or from
//! the analytic tail), then a site inside the shell by rejection against the
//! shell's largest site weight. Nothing is truncated, so the heavy tail is
//! reproduced exactly.
//!
//! For power-law tails `h(x) = c |x|_2^{-d-alpha}` the mass outside `Q_R` is
//! obtained from the midpoint rule on the unit cells tiling `Q_{R+1/2}^c`:
//!
//! ```text
//! sum_{|x|_inf > R} |x|^{-s} = a^{-alpha} I(alpha) - s (alpha + 2) / 24 * a^{-alpha-2} I(alpha + 2) + O(a^{-alpha-4})
//! ```
//!
//! with `a = R + 1/2`, `s = d + alpha` and
//! `I(b) = (2d / b) * int_{[-1,1]^{d-1}} (1 + |w|^2)^{-(d+b)/2} dw`.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{norm2_sq, sup_norm, Point};
use crate::numeric::{gauss_legendre, shell_size, CompensatedSum};
use crate::rng::open01;

/// Radii sampled from the analytic tail are clamped here so positions stay
/// representable. The clamped mass is at most `(R_tab / 2^48)^alpha`.
pub const MAX_STEP_RADIUS: i64 = 1 << 48;

/// Decay exponent; `Infinite` for bounded or exponentially decaying profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaRepr", into = "AlphaRepr")]
pub enum Alpha {
    Finite(f64),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphaRepr {
    Number(f64),
    Symbol(String),
}

impl TryFrom<AlphaRepr> for Alpha {
    type Error = String;
    fn try_from(r: AlphaRepr) -> std::result::Result<Self, String> {
        match r {
            AlphaRepr::Number(a) => Ok(Alpha::Finite(a)),
            AlphaRepr::Symbol(s) if s.eq_ignore_ascii_case("infinite") || s.eq_ignore_ascii_case("inf") => {
                Ok(Alpha::Infinite)
            }
            AlphaRepr::Symbol(s) => Err(format!("alpha must be a number or \"infinite\", got {s:?}")),
        }
    }
}

impl From<Alpha> for AlphaRepr {
    fn from(a: Alpha) -> Self {
        match a {
            Alpha::Finite(x) => AlphaRepr::Number(x),
            Alpha::Infinite => AlphaRepr::Symbol("infinite".into()),
        }
    }
}

impl Alpha {
    pub fn value(&self) -> f64 {
        match self {
            Alpha::Finite(a) => *a,
            Alpha::Infinite => f64::INFINITY,
        }
    }

    /// `min(2, alpha)`, the volume / Green's function exponent.
    pub fn two_wedge(&self) -> f64 {
        self.value().min(2.0)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinite => write!(f, "infinite"),
        }
    }
}

/// Profile `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// `max(|x|_2, 1)^{-d-alpha}`.
    Canonical,
    /// Flat on `[-1, 1]^d`.
    BoundedUniform,
    /// `exp(-kappa |x|_inf)`.
    Exponential { kappa: f64 },
    /// `weights[k]` on the sup-norm shell `k` (lattice units, `Lambda = 1`).
    /// With finite `alpha` the profile continues beyond the table as
    /// `weights[K] (K / |x|_2)^{d+alpha}`; with infinite `alpha` it is zero there.
    CustomTable { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub d: usize,
    pub alpha: Alpha,
    pub lambda: f64,
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tab_radius: Option<i64>,
}

impl KernelSpec {
    pub fn canonical(d: usize, alpha: f64, lambda: f64) -> Self {
        KernelSpec { d, alpha: Alpha::Finite(alpha), lambda, shape: Shape::Canonical, tab_radius: None }
    }

    pub fn bounded_uniform(d: usize, lambda: f64) -> Self {
        KernelSpec { d, alpha: Alpha::Infinite, lambda, shape: Shape::BoundedUniform, tab_radius: None }
    }

    pub fn exponential(d: usize, kappa: f64, lambda: f64) -> Self {
        KernelSpec { d, alpha: Alpha::Infinite, lambda, shape: Shape::Exponential { kappa }, tab_radius: None }
    }

    pub fn custom_table(d: usize, weights: Vec<f64>, alpha: Alpha) -> Self {
        KernelSpec { d, alpha, lambda: 1.0, shape: Shape::CustomTable { weights }, tab_radius: None }
    }

    pub fn with_tab_radius(mut self, r: i64) -> Self {
        self.tab_radius = Some(r);
        self
    }

    /// Default table radius: 4096 in d <= 2, 256 otherwise.
    pub fn default_tab_radius(d: usize) -> i64 {
        if d <= 2 {
            4096
        } else {
            256
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("kernel dimension d must be >= 1");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return invalid(format!("lambda must be > 0 (got {})", self.lambda));
        }
        if let Alpha::Finite(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return invalid(format!("alpha must be > 0 (got {a})"));
            }
            if a == 2.0 {
                return invalid("alpha = 2 is excluded");
            }
        }
        if let Some(t) = self.tab_radius {
            if t < 1 {
                return invalid(format!("tab_radius must be >= 1 (got {t})"));
            }
        }
        match &self.shape {
            Shape::Canonical => {
                if self.alpha == Alpha::Infinite {
                    return invalid("canonical shape requires a finite alpha");
                }
            }
            Shape::BoundedUniform => {
                if self.alpha != Alpha::Infinite {
                    return invalid("bounded-uniform shape has alpha = infinite");
                }
            }
            Shape::Exponential { kappa } => {
                if self.alpha != Alpha::Infinite {
                    return invalid("exponential shape has alpha = infinite");
                }
                if !(*kappa > 0.0 && kappa.is_finite()) {
                    return invalid(format!("kappa must be > 0 (got {kappa})"));
                }
            }
            Shape::CustomTable { weights } => {
                if self.lambda != 1.0 {
                    return invalid("custom-table kernels are given in lattice units; lambda must be 1");
                }
                if weights.is_empty() {
                    return invalid("custom table must have at least one weight");
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return invalid("custom table weights must be finite and >= 0");
                }
                if weights.iter().all(|&w| w == 0.0) {
                    return invalid("custom table weights must not all vanish");
                }
                if let Alpha::Finite(_) = self.alpha {
                    if weights.len() < 2 || *weights.last().unwrap() <= 0.0 {
                        return invalid("a power tail needs a table with >= 2 entries and a positive last weight");
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Tail {
    None,
    /// `h(x) = coef |x|_2^{-d-alpha}` for `|x|_inf > R_tab`.
    Power { coef: f64, alpha: f64, envelope: f64 },
    /// `h(x) = exp(-rate |x|_inf)`.
    Exponential { rate: f64 },
}

#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    d: usize,
    tab: i64,
    shell_mass: Vec<f64>,
    cumulative: Vec<f64>,
    /// `suffix[k] = sum_{j > k} shell mass`, analytic tail included.
    suffix: Vec<f64>,
    shell_max: Vec<f64>,
    /// `max_{j >= k} shell_max[j]`.
    envelope: Vec<f64>,
    constant_shell: Vec<bool>,
    tail: Tail,
    tail_mass_raw: f64,
    total: f64,
    norm: f64,
}

pub fn build_kernel(spec: &KernelSpec, tab_radius: i64) -> Result<Kernel> {
    Kernel::build(&spec.clone().with_tab_radius(tab_radius))
}

impl Kernel {
    pub fn build(spec: &KernelSpec) -> Result<Kernel> {
        spec.validate()?;
        let d = spec.d;
        let requested = spec.tab_radius.unwrap_or_else(|| KernelSpec::default_tab_radius(d));
        let tab = match &spec.shape {
            Shape::Canonical => requested.max(spec.lambda.ceil() as i64),
            Shape::BoundedUniform => (spec.lambda.floor() as i64).max(0),
            Shape::Exponential { .. } => requested,
            Shape::CustomTable { weights } => requested.max(weights.len() as i64 - 1),
        };
        let tail = match (&spec.shape, spec.alpha) {
            (Shape::Canonical, Alpha::Finite(a)) => Tail::Power {
                coef: spec.lambda.powf(d as f64 + a),
                alpha: a,
                envelope: power_tail_envelope(d, a, tab),
            },
            (Shape::CustomTable { weights }, Alpha::Finite(a)) => {
                let k = (weights.len() - 1) as f64;
                Tail::Power {
                    coef: weights[weights.len() - 1] * k.powf(d as f64 + a),
                    alpha: a,
                    envelope: power_tail_envelope(d, a, tab),
                }
            }
            (Shape::Exponential { kappa }, _) => Tail::Exponential { rate: kappa / spec.lambda },
            _ => Tail::None,
        };
        let mut kernel = Kernel {
            spec: spec.clone(),
            d,
            tab,
            shell_mass: Vec::new(),
            cumulative: Vec::new(),
            suffix: Vec::new(),
            shell_max: Vec::new(),
            envelope: Vec::new(),
            constant_shell: Vec::new(),
            tail,
            tail_mass_raw: 0.0,
            total: 0.0,
            norm: 0.0,
        };
        kernel.tabulate()?;
        Ok(kernel)
    }

    fn tabulate(&mut self) -> Result<()> {
        let d = self.d;
        let n = (self.tab + 1) as usize;
        let mut shell_mass = Vec::with_capacity(n);
        let mut shell_max = Vec::with_capacity(n);
        let mut constant = Vec::with_capacity(n);
        for k in 0..=self.tab {
            let top = self.site_weight(&Point::axis(d, 0, k));
            shell_max.push(top);
            if self.is_constant_shell(k) {
                constant.push(true);
                shell_mass.push(shell_size(d, k) * top);
            } else {
                constant.push(false);
                let mut acc = CompensatedSum::new();
                for_each_shell_orbit(d, k, |n2, mult| acc.add(mult * self.weight_from_norms(k, n2)));
                shell_mass.push(acc.value());
            }
        }
        let tail_raw = self.analytic_tail_raw(self.tab);
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = CompensatedSum::new();
        for &m in &shell_mass {
            acc.add(m);
            cumulative.push(acc.value());
        }
        let mut suffix = vec![0.0; n];
        let mut acc = CompensatedSum::new();
        acc.add(tail_raw);
        for k in (0..n).rev() {
            suffix[k] = acc.value();
            acc.add(shell_mass[k]);
        }
        let total = acc.value();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NumericalGuard(format!("kernel normalization is {total}")));
        }
        let tail_top = match self.tail {
            Tail::None => 0.0,
            _ => self.site_weight(&Point::axis(d, 0, self.tab + 1)),
        };
        let mut envelope = vec![0.0; n];
        let mut run = tail_top;
        for k in (0..n).rev() {
            run = run.max(shell_max[k]);
            envelope[k] = run;
        }
        self.shell_mass = shell_mass;
        self.cumulative = cumulative;
        self.suffix = suffix;
        self.shell_max = shell_max;
        self.envelope = envelope;
        self.constant_shell = constant;
        self.tail_mass_raw = tail_raw;
        self.total = total;
        self.norm = 1.0 / total;
        Ok(())
    }

    fn is_constant_shell(&self, k: i64) -> bool {
        if self.d == 1 || k == 0 {
            return true;
        }
        match &self.spec.shape {
            Shape::Canonical => {
                // max(|x|_2 / Lambda, 1) == 1 on the whole shell
                (k * k * self.d as i64) as f64 <= self.spec.lambda * self.spec.lambda
            }
            Shape::BoundedUniform | Shape::Exponential { .. } => true,
            Shape::CustomTable { weights } => (k as usize) < weights.len(),
        }
    }

    /// Unnormalized weight `h(x / Lambda)`.
    pub fn site_weight(&self, x: &[i64]) -> f64 {
        self.weight_from_norms(sup_norm(x), norm2_sq(x))
    }

    #[inline]
    fn weight_from_norms(&self, sup: i64, n2: i64) -> f64 {
        let d = self.d as f64;
        match &self.spec.shape {
            Shape::Canonical => {
                let a = self.spec.alpha.value();
                let s = n2 as f64 / (self.spec.lambda * self.spec.lambda);
                if s <= 1.0 {
                    1.0
                } else {
                    s.powf(-(d + a) / 2.0)
                }
            }
            Shape::BoundedUniform => {
                if sup as f64 <= self.spec.lambda {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Exponential { kappa } => (-kappa * sup as f64 / self.spec.lambda).exp(),
            Shape::CustomTable { weights } => {
                if (sup as usize) < weights.len() {
                    weights[sup as usize]
                } else if let Tail::Power { coef, alpha, .. } = self.tail {
                    coef * (n2 as f64).powf(-(d + alpha) / 2.0)
                } else {
                    0.0
                }
            }
        }
    }

    /// Unnormalized mass outside `Q_t`, for `t >= R_tab`.
    fn analytic_tail_raw(&self, t: i64) -> f64 {
        match self.tail {
            Tail::None => 0.0,
            Tail::Power { coef, alpha, .. } => coef * power_tail_sum(self.d, alpha, t),
            Tail::Exponential { rate } => {
                let mut acc = CompensatedSum::new();
                let mut k = t + 1;
                let peak = t as f64 + self.d as f64 / rate;
                loop {
                    let term = shell_size(self.d, k) * (-rate * k as f64).exp();
                    acc.add(term);
                    if (k as f64 > peak && term <= 1e-18 * acc.value()) || term == 0.0 || k - t > 50_000_000 {
                        break;
                    }
                    k += 1;
                }
                acc.value()
            }
        }
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> Alpha {
        self.spec.alpha
    }

    pub fn tab_radius(&self) -> i64 {
        self.tab
    }

    /// `1 / sum_x h(x / Lambda)`.
    pub fn norm_constant(&self) -> f64 {
        self.norm
    }

    pub fn pmf(&self, x: &[i64]) -> f64 {
        debug_assert_eq!(x.len(), self.d);
        self.norm * self.site_weight(x)
    }

    /// `max_x D(0, x)`.
    pub fn max_pmf(&self) -> f64 {
        self.norm * self.envelope[0]
    }

    /// Largest `D(0, x)` over `|x|_inf >= k`.
    pub fn envelope_pmf_from(&self, k: i64) -> f64 {
        if k <= self.tab {
            self.norm * self.envelope[k.max(0) as usize]
        } else {
            match self.tail {
                Tail::None => 0.0,
                _ => self.norm * self.site_weight(&Point::axis(self.d, 0, k)),
            }
        }
    }

    /// `P(|X|_inf = k)`.
    pub fn shell_probability(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else if k <= self.tab {
            self.norm * self.shell_mass[k as usize]
        } else {
            self.norm * (self.analytic_tail_raw(k - 1) - self.analytic_tail_raw(k))
        }
    }

    /// `P(|X|_inf > t) = sum_{x outside Q_t} D(0, x)`.
    pub fn tail_mass(&self, t: i64) -> Result<f64> {
        if t < 0 {
            return invalid(format!("tail_mass needs t >= 0 (got {t})"));
        }
        Ok(if t <= self.tab { self.norm * self.suffix[t as usize] } else { self.norm * self.analytic_tail_raw(t) })
    }

    /// Normalized mass of the tabulated part `Q_{R_tab}` and of the analytic tail.
    pub fn mass_split(&self) -> (f64, f64) {
        (self.norm * self.cumulative[self.tab as usize], self.norm * self.tail_mass_raw)
    }

    /// Partial moment `sum_{x in Q_cutoff} |x|_2^q D(0, x)`.
    pub fn moment_partial(&self, q: f64, cutoff: i64) -> Result<f64> {
        if !(q >= 0.0) {
            return invalid(format!("moment order q must be >= 0 (got {q})"));
        }
        if cutoff < 1 {
            return invalid(format!("moment cutoff must be >= 1 (got {cutoff})"));
        }
        let mut acc = CompensatedSum::new();
        for k in 0..=cutoff {
            for_each_shell_orbit(self.d, k, |n2, mult| {
                let w = self.weight_from_norms(k, n2);
                if w > 0.0 {
                    acc.add(mult * (n2 as f64).powf(q / 2.0) * w);
                }
            });
        }
        Ok(self.norm * acc.value())
    }

    /// Draws `x ~ D(0, .)`.
    pub fn sample_step<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let mut p = Point::origin(self.d);
        self.sample_step_into(rng, p.coords_mut());
        p
    }

    /// Draws a step into `out` (length `d`).
    pub fn sample_step_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [i64]) {
        let u = rng.random::<f64>() * self.total;
        let last = self.cumulative[self.tab as usize];
        if u < last {
            let k = self.cumulative.partition_point(|&c| c <= u) as i64;
            let k = k.min(self.tab);
            if self.constant_shell[k as usize] {
                uniform_on_shell(self.d, k, rng, out);
            } else {
                let top = self.shell_max[k as usize];
                loop {
                    uniform_on_shell(self.d, k, rng, out);
                    let w = self.site_weight(out);
                    if rng.random::<f64>() * top < w {
                        break;
                    }
                }
            }
        } else {
            self.sample_tail_into(rng, out);
        }
    }

    fn sample_tail_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [i64]) {
        let d = self.d;
        match self.tail {
            Tail::None => {
                // unreachable in exact arithmetic: zero tail mass
                uniform_on_shell(d, self.tab, rng, out);
            }
            Tail::Power { alpha, envelope, .. } => {
                let r = self.tab as f64;
                let s = d as f64 + alpha;
                loop {
                    let y = r * open01(rng).powf(-1.0 / alpha);
                    let k = if y >= MAX_STEP_RADIUS as f64 { MAX_STEP_RADIUS } else { (y.ceil() as i64).max(self.tab + 1) };
                    let kf = k as f64;
                    // proposal mass of k under ceil(Pareto(R, alpha))
                    let q = r.powf(alpha) * kf.powf(-alpha) * (-alpha * (-1.0 / kf).ln_1p()).exp_m1();
                    let target = shell_size(d, k) * kf.powf(-s);
                    if rng.random::<f64>() * envelope * q >= target {
                        continue;
                    }
                    uniform_on_shell(d, k, rng, out);
                    if d > 1 {
                        let n2 = norm2_sq(out) as f64;
                        let acc = (kf * kf / n2).powf(s / 2.0);
                        if rng.random::<f64>() >= acc {
                            continue;
                        }
                    }
                    return;
                }
            }
            Tail::Exponential { rate } => {
                let mut u = rng.random::<f64>() * self.tail_mass_raw;
                let mut k = self.tab + 1;
                loop {
                    let m = shell_size(d, k) * (-rate * k as f64).exp();
                    if u < m || m == 0.0 {
                        break;
                    }
                    u -= m;
                    k += 1;
                }
                uniform_on_shell(d, k, rng, out);
            }
        }
    }
}

/// `sup_{k > R} S_k k^{-d-alpha} / q(k)` bound used by the tail sampler, where
/// `q(k) = R^alpha ((k-1)^{-alpha} - k^{-alpha}) >= alpha R^alpha k^{-1-alpha}` and
/// `S_k <= 2d (2k+1)^{d-1}`.
fn power_tail_envelope(d: usize, alpha: f64, r: i64) -> f64 {
    let r = r as f64;
    let df = d as f64;
    2.0 * df * 2f64.powi(d as i32 - 1) * (1.0 + 1.0 / (2.0 * r + 2.0)).powi(d as i32 - 1) / (alpha * r.powf(alpha))
}

/// `sum_{|x|_inf > t} |x|_2^{-d-alpha}` via the corrected midpoint rule.
pub fn power_tail_sum(d: usize, alpha: f64, t: i64) -> f64 {
    let a = t as f64 + 0.5;
    let s = d as f64 + alpha;
    a.powf(-alpha) * cube_exterior_integral(d, alpha)
        - s * (alpha + 2.0) / 24.0 * a.powf(-alpha - 2.0) * cube_exterior_integral(d, alpha + 2.0)
}

/// `int_{|u|_inf > 1} |u|_2^{-d-b} du`.
pub fn cube_exterior_integral(d: usize, b: f64) -> f64 {
    let df = d as f64;
    if d == 1 {
        return 2.0 / b;
    }
    let (nodes, weights) = gauss_legendre(48);
    let m = d - 1;
    let n = nodes.len();
    let mut idx = vec![0usize; m];
    let mut acc = CompensatedSum::new();
    'outer: loop {
        let mut w = 1.0;
        let mut r2 = 1.0;
        for &i in &idx {
            w *= weights[i];
            r2 += nodes[i] * nodes[i];
        }
        acc.add(w * r2.powf(-(df + b) / 2.0));
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < n {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    2.0 * df / b * acc.value()
}

/// Calls `f(|x|_2^2, multiplicity)` once per orbit of the signed permutation
/// group on the shell `|x|_inf = k`.
pub fn for_each_shell_orbit<F: FnMut(i64, f64)>(d: usize, k: i64, mut f: F) {
    if k == 0 {
        f(0, 1.0);
        return;
    }
    if d == 1 {
        f(k * k, 2.0);
        return;
    }
    let mut factorial = vec![1.0f64; d + 1];
    for i in 1..=d {
        factorial[i] = factorial[i - 1] * i as f64;
    }
    // nondecreasing c_1 <= ... <= c_{d-1} in [0, k]; the last coordinate is k
    let m = d - 1;
    let mut c = vec![0i64; m];
    loop {
        let mut n2 = k * k;
        let mut nonzero = 1;
        let mut perms = factorial[d];
        let mut run = 1usize;
        for i in 0..m {
            n2 += c[i] * c[i];
            if c[i] != 0 {
                nonzero += 1;
            }
            let next = if i + 1 < m { c[i + 1] } else { k };
            if next == c[i] {
                run += 1;
            } else {
                perms /= factorial[run];
                run = 1;
            }
        }
        perms /= factorial[run];
        f(n2, perms * (1u64 << nonzero) as f64);

        // advance to the next nondecreasing sequence
        let mut i = m;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if c[i] < k {
                c[i] += 1;
                let v = c[i];
                for cj in c.iter_mut().skip(i + 1) {
                    *cj = v;
                }
                break;
            }
        }
    }
}

/// Uniform site on the shell `|x|_inf = k`, decomposed by the first
/// coordinate attaining the maximum.
pub fn uniform_on_shell<R: Rng + ?Sized>(d: usize, k: i64, rng: &mut R, out: &mut [i64]) {
    debug_assert_eq!(out.len(), d);
    if k == 0 {
        out.iter_mut().for_each(|c| *c = 0);
        return;
    }
    let sign = |rng: &mut R| if rng.random::<bool>() { 1 } else { -1 };
    if d == 1 {
        out[0] = sign(rng) * k;
        return;
    }
    let inner = (2 * k - 1) as f64;
    let outer = (2 * k + 1) as f64;
    // weight of leading index i: inner^i * outer^{d-1-i}
    let ratio = inner / outer;
    let mut weights = [0.0f64; 16];
    let lead = if d <= 16 {
        let mut total = 0.0;
        let mut w = 1.0;
        for slot in weights.iter_mut().take(d) {
            *slot = w;
            total += w;
            w *= ratio;
        }
        let mut u = rng.random::<f64>() * total;
        let mut lead = d - 1;
        for (i, &w) in weights.iter().take(d).enumerate() {
            if u < w {
                lead = i;
                break;
            }
            u -= w;
        }
        lead
    } else {
        // rejection: uniform on the cube until the sup-norm is k
        loop {
            for c in out.iter_mut() {
                *c = rng.random_range(-k..=k);
            }
            if sup_norm(out) == k {
                return;
            }
        }
    };
    for (i, c) in out.iter_mut().enumerate() {
        *c = match i.cmp(&lead) {
            std::cmp::Ordering::Less => rng.random_range(-(k - 1)..=(k - 1)),
            std::cmp::Ordering::Equal => sign(rng) * k,
            std::cmp::Ordering::Greater => rng.random_range(-k..=k),
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::cube_points;
    use crate::rng::stream;
    use std::f64::consts::PI;

    fn canonical(d: usize, alpha: f64, tab: i64) -> Kernel {
        Kernel::build(&KernelSpec::canonical(d, alpha, 1.0).with_tab_radius(tab)).unwrap()
    }

    #[test]
    fn canonical_d1_alpha1_normalization() {
        // sum_x max(|x|,1)^{-2} = 1 + 2 zeta(2)
        let k = canonical(1, 1.0, 4096);
        let expected = 1.0 / (1.0 + PI * PI / 3.0);
        assert!((k.norm_constant() - expected).abs() < 1e-13, "{}", k.norm_constant());
        assert!((k.pmf(&[2]) - expected / 4.0).abs() < 1e-14);
        assert!((k.pmf(&[0]) - k.norm_constant()).abs() < 1e-16);
    }

    #[test]
    fn tail_mass_series_value() {
        let k = canonical(1, 1.0, 4096);
        let partial: f64 = (1..=10).map(|j| 1.0 / (j * j) as f64).sum();
        let expected = k.norm_constant() * 2.0 * (PI * PI / 6.0 - partial);
        assert!((k.tail_mass(10).unwrap() - expected).abs() < 1e-13);
        assert!((k.tail_mass(0).unwrap() - (1.0 - k.pmf(&[0]))).abs() < 1e-14);
        // beyond the table: sum_{k>t} 2/k^2 against the exact digamma-free series
        let t = 10_000i64;
        let partial: f64 = crate::numeric::compensated_sum((1..=t).map(|j| 1.0 / (j as f64 * j as f64)));
        let expected = k.norm_constant() * 2.0 * (PI * PI / 6.0 - partial);
        assert!((k.tail_mass(t).unwrap() - expected).abs() < 1e-15);
        assert!(k.tail_mass(-1).is_err());
    }

    #[test]
    fn power_tail_sum_matches_direct_summation_d2() {
        // differences of the analytic tail equal direct shell sums
        let (alpha, lo, hi) = (0.8, 40i64, 160i64);
        let direct: f64 = crate::numeric::compensated_sum((lo + 1..=hi).flat_map(|k| {
            let mut v = Vec::new();
            for_each_shell_orbit(2, k, |n2, m| v.push(m * (n2 as f64).powf(-1.4)));
            v
        }));
        let analytic = power_tail_sum(2, alpha, lo) - power_tail_sum(2, alpha, hi);
        // next correction is O(a^{-alpha-4})
        assert!(((direct - analytic) / direct).abs() < 1e-7, "{direct} vs {analytic}");
    }

    #[test]
    fn power_tail_sum_matches_direct_summation_d3() {
        let (alpha, lo, hi) = (5.0, 24i64, 96i64);
        let direct: f64 = crate::numeric::compensated_sum((lo + 1..=hi).flat_map(|k| {
            let mut v = Vec::new();
            for_each_shell_orbit(3, k, |n2, m| v.push(m * (n2 as f64).powf(-4.0)));
            v
        }));
        let analytic = power_tail_sum(3, alpha, lo) - power_tail_sum(3, alpha, hi);
        assert!(((direct - analytic) / direct).abs() < 2e-5, "{direct} vs {analytic}");
    }

    #[test]
    fn orbit_multiplicities_cover_shell() {
        for d in 1..=4 {
            for k in 0..5 {
                let mut total = 0.0;
                let mut n2sum = 0.0;
                for_each_shell_orbit(d, k, |n2, m| {
                    total += m;
                    n2sum += m * n2 as f64;
                });
                let brute: Vec<Point> = cube_points(d, k).filter(|p| p.sup_norm() == k).collect();
                assert_eq!(total, brute.len() as f64, "d={d} k={k}");
                let b2: i64 = brute.iter().map(|p| p.norm2_sq()).sum();
                assert_eq!(n2sum, b2 as f64);
            }
        }
    }

    #[test]
    fn normalization_brute_force_d2() {
        let k = canonical(2, 0.8, 50);
        let direct: f64 = crate::numeric::compensated_sum(cube_points(2, 50).map(|p| k.pmf(&p)));
        let (_, tail) = k.mass_split();
        assert!((direct + tail - 1.0).abs() < 1e-10, "{}", direct + tail - 1.0);
        assert!(direct < 1.0);
        let smaller: f64 = cube_points(2, 40).map(|p| k.pmf(&p)).sum();
        assert!(smaller < direct);
    }

    #[test]
    fn bounded_uniform_is_flat() {
        let k = Kernel::build(&KernelSpec::bounded_uniform(1, 2.0)).unwrap();
        for x in -2..=2 {
            assert!((k.pmf(&[x]) - 0.2).abs() < 1e-15);
        }
        assert_eq!(k.pmf(&[3]), 0.0);
        assert_eq!(k.tail_mass(2).unwrap(), 0.0);
        let mut rng = stream(1, 0);
        let k1 = Kernel::build(&KernelSpec::bounded_uniform(1, 1.0)).unwrap();
        for _ in 0..10_000 {
            let s = k1.sample_step(&mut rng);
            assert!((-1..=1).contains(&s[0]));
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Kernel::build(&KernelSpec::canonical(1, 2.0, 1.0)).is_err());
        assert!(Kernel::build(&KernelSpec::canonical(1, 0.8, 0.0)).is_err());
        assert!(Kernel::build(&KernelSpec::canonical(1, 0.8, -1.0)).is_err());
        let mut s = KernelSpec::canonical(1, 0.8, 1.0);
        s.alpha = Alpha::Infinite;
        assert!(Kernel::build(&s).is_err());
        assert!(build_kernel(&KernelSpec::canonical(1, 0.8, 1.0), 0).is_err());
    }

    #[test]
    fn pmf_symmetry() {
        let k = canonical(3, 0.8, 64);
        let mut rng = stream(3, 0);
        for _ in 0..1000 {
            let x: Vec<i64> = (0..3).map(|_| rng.random_range(-40..=40)).collect();
            let neg: Vec<i64> = x.iter().map(|c| -c).collect();
            assert_eq!(k.pmf(&x), k.pmf(&neg));
            let perm = [x[2], -x[0], x[1]];
            assert_eq!(k.pmf(&x), k.pmf(&perm));
        }
    }

    #[test]
    fn tail_sandwich_canonical() {
        let k = canonical(1, 0.8, 4096);
        let vals: Vec<f64> = (4..=14).map(|e| {
            let t = 1i64 << e;
            (t as f64).powf(0.8) * k.tail_mass(t).unwrap()
        }).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        // integral comparison: 2N/alpha (t+1)^{-alpha} <= tail <= 2N/alpha t^{-alpha}
        let c = 2.0 * k.norm_constant() / 0.8;
        assert!(lo >= c * (17f64 / 16.0).powf(-0.8) - 1e-12 && hi <= c + 1e-12, "{lo} {hi} {c}");
    }

    #[test]
    fn moment_partial_behaviour() {
        let k = canonical(1, 1.0, 4096);
        let m0 = k.moment_partial(0.0, 1 << 16).unwrap();
        assert!((m0 - (1.0 - k.tail_mass(1 << 16).unwrap())).abs() < 1e-12);
        // q = 0.5 < alpha converges (Cauchy); q = 1 = alpha grows by ~2N ln 2 per doubling
        let half: Vec<f64> = (10..=16).map(|e| k.moment_partial(0.5, 1 << e).unwrap()).collect();
        let inc: Vec<f64> = half.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(inc.windows(2).all(|w| w[1] < 0.75 * w[0]));
        let one: Vec<f64> = (10..=16).map(|e| k.moment_partial(1.0, 1 << e).unwrap()).collect();
        let step = 2.0 * k.norm_constant() * 2f64.ln();
        for w in one.windows(2) {
            assert!(((w[1] - w[0]) / step - 1.0).abs() < 1e-3);
        }
        let e = Kernel::build(&KernelSpec::exponential(1, 1.0, 1.0)).unwrap();
        let a = e.moment_partial(10.0, 200).unwrap();
        let b = e.moment_partial(10.0, 400).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn exponential_tail_beyond_table() {
        let k = Kernel::build(&KernelSpec::exponential(2, 0.5, 1.0).with_tab_radius(8)).unwrap();
        let direct: f64 = (9..2000).map(|j| shell_size(2, j) * (-0.5 * j as f64).exp()).sum::<f64>() * k.norm_constant();
        assert!((k.tail_mass(8).unwrap() - direct).abs() < 1e-14);
        let mut rng = stream(5, 0);
        let n = 200_000;
        let far = (0..n).filter(|_| k.sample_step(&mut rng).sup_norm() > 8).count();
        let p = k.tail_mass(8).unwrap();
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((far as f64 / n as f64 - p).abs() < 4.0 * sd);
    }

    #[test]
    fn custom_table_zero_at_origin() {
        let k = Kernel::build(&KernelSpec::custom_table(1, vec![0.0, 1.0], Alpha::Infinite)).unwrap();
        assert_eq!(k.pmf(&[0]), 0.0);
        assert!((k.pmf(&[1]) - 0.5).abs() < 1e-15);
        let t = Kernel::build(&KernelSpec::custom_table(1, vec![1.0, 0.5], Alpha::Finite(1.0))).unwrap();
        // tail continues as 0.5 * (1/|x|)^2
        assert!((t.pmf(&[4]) / t.pmf(&[1]) - 1.0 / 16.0).abs() < 1e-14);
    }
}
