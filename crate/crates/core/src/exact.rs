//! Exact oracles: convolution powers and Green's functions of the walk
//! killed outside a cube, the BRW one-arm fixed point, volume moments of the
//! killed BRW, and exhaustive enumeration on tiny graphs.
//!
//! All lattice computations happen on `Q_R` with killing: mass that jumps
//! out is removed and booked in `mass_outside`, never wrapped around.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gw::OffspringDist;
use crate::kernel::Kernel;
use crate::lattice::Point;
use crate::numeric::{compensated_sum, CompensatedSum};

/// Largest number of sites a field may hold.
pub const MAX_FIELD_SITES: usize = 1 << 26;

/// Real field on `Q_R`, site `x` stored at `sum_i (x_i + R) (2R + 1)^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    d: usize,
    radius: i64,
    values: Vec<f64>,
    mass_outside: f64,
}

fn window_len(d: usize, radius: i64) -> Result<usize> {
    if d == 0 {
        return invalid("dimension must be >= 1");
    }
    if radius < 0 {
        return invalid(format!("window radius must be >= 0 (got {radius})"));
    }
    let side = (2 * radius + 1) as f64;
    let n = side.powi(d as i32);
    if n > MAX_FIELD_SITES as f64 {
        return Err(Error::TooLarge(format!("window Q_{radius} in d = {d} has {n:.3e} sites")));
    }
    Ok(n as usize)
}

impl LatticeField {
    pub fn zeros(d: usize, radius: i64) -> Result<Self> {
        Ok(LatticeField { d, radius, values: vec![0.0; window_len(d, radius)?], mass_outside: 0.0 })
    }

    /// Point mass at the origin.
    pub fn delta(d: usize, radius: i64) -> Result<Self> {
        let mut f = Self::zeros(d, radius)?;
        let i = f.index(&vec![0; d]).expect("origin");
        f.values[i] = 1.0;
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn side(&self) -> i64 {
        2 * self.radius + 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Probability mass that has left the window.
    pub fn mass_outside(&self) -> f64 {
        self.mass_outside
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0i64;
        let mut stride = 1i64;
        for &c in x {
            if c.abs() > self.radius {
                return None;
            }
            idx += (c + self.radius) * stride;
            stride *= side;
        }
        Some(idx as usize)
    }

    pub fn point(&self, mut idx: usize) -> Point {
        let side = self.side() as usize;
        let mut p = Point::origin(self.d);
        for c in p.coords_mut() {
            *c = (idx % side) as i64 - self.radius;
            idx /= side;
        }
        p
    }

    /// Value at `x`; zero outside the window.
    pub fn get(&self, x: &[i64]) -> f64 {
        self.index(x).map_or(0.0, |i| self.values[i])
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.values.iter().copied())
    }

    /// `sum_{x in Q_r} f(x)`.
    pub fn sum_over_cube(&self, r: i64) -> f64 {
        compensated_sum(
            self.values.iter().enumerate().filter(|(i, _)| self.point(*i).sup_norm() <= r).map(|(_, v)| *v),
        )
    }

    /// `(k, f(k e_1))` for `k = 0..=R`.
    pub fn axis_profile(&self) -> Vec<(i64, f64)> {
        (0..=self.radius).map(|k| (k, self.get(&Point::axis(self.d, 0, k)))).collect()
    }
}

/// Smallest `n >= min` whose only prime factors are 2, 3 and 5.
fn smooth_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

enum Engine {
    /// Kernel on `Q_{2R}` and per-site offsets into it.
    Direct { weights: Vec<f64>, offset: Vec<usize>, centre: usize },
    Fft {
        m: usize,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        kernel_hat: Vec<Complex64>,
        /// buffer index of each window site
        slot: Vec<usize>,
    },
}

/// `(P f)(x) = sum_{y in Q_R} D(y - x) f(y)` on `Q_R`: one step of the walk killed outside the window.
pub struct WindowOperator {
    d: usize,
    radius: i64,
    engine: Engine,
}

impl std::fmt::Debug for WindowOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.engine {
            Engine::Direct { .. } => "direct",
            Engine::Fft { .. } => "fft",
        };
        f.debug_struct("WindowOperator").field("d", &self.d).field("radius", &self.radius).field("engine", &kind).finish()
    }
}

/// Windows with at most this many (site, site) pairs are convolved directly.
const DIRECT_PAIRS: f64 = 4e6;

impl WindowOperator {
    pub fn new(kernel: &Kernel, radius: i64) -> Result<Self> {
        let d = kernel.dim();
        let n = window_len(d, radius)?;
        if (n as f64) * (n as f64) <= DIRECT_PAIRS {
            Self::direct(kernel, radius)
        } else {
            Self::fft(kernel, radius)
        }
    }

    pub fn direct(kernel: &Kernel, radius: i64) -> Result<Self> {
        let d = kernel.dim();
        let outer = LatticeField::zeros(d, 2 * radius)?;
        let weights: Vec<f64> = (0..outer.values.len()).map(|i| kernel.pmf(&outer.point(i))).collect();
        let window = LatticeField::zeros(d, radius)?;
        let s2 = outer.side();
        let offset: Vec<usize> = (0..window.values.len())
            .map(|i| {
                let p = window.point(i);
                let mut a = 0i64;
                let mut stride = 1i64;
                for &c in p.coords() {
                    a += (c + radius) * stride;
                    stride *= s2;
                }
                a as usize
            })
            .collect();
        let centre = {
            let mut c = 0i64;
            let mut stride = 1i64;
            for _ in 0..d {
                c += 2 * radius * stride;
                stride *= s2;
            }
            c as usize
        };
        Ok(WindowOperator { d, radius, engine: Engine::Direct { weights, offset, centre } })
    }

    pub fn fft(kernel: &Kernel, radius: i64) -> Result<Self> {
        let d = kernel.dim();
        // a linear window convolution needs no wrap for offsets in [-2R, 2R]
        let m = smooth_size((4 * radius + 1) as usize);
        let total = (m as f64).powi(d as i32);
        if total > MAX_FIELD_SITES as f64 {
            return Err(Error::TooLarge(format!("FFT grid {m}^{d} is too large")));
        }
        let total = total as usize;
        let mut planner = FftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let outer = LatticeField::zeros(d, 2 * radius)?;
        let mut kernel_hat = vec![Complex64::new(0.0, 0.0); total];
        for i in 0..outer.values.len() {
            let p = outer.point(i);
            let mut idx = 0usize;
            let mut stride = 1usize;
            for &c in p.coords() {
                idx += (c.rem_euclid(m as i64) as usize) * stride;
                stride *= m;
            }
            kernel_hat[idx] = Complex64::new(kernel.pmf(&p), 0.0);
        }
        fft_nd(&mut kernel_hat, m, d, &forward);
        let window = LatticeField::zeros(d, radius)?;
        let slot: Vec<usize> = (0..window.values.len())
            .map(|i| {
                let p = window.point(i);
                let mut idx = 0usize;
                let mut stride = 1usize;
                for &c in p.coords() {
                    idx += (c + radius) as usize * stride;
                    stride *= m;
                }
                idx
            })
            .collect();
        Ok(WindowOperator { d, radius, engine: Engine::Fft { m, forward, inverse, kernel_hat, slot } })
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Applies the killed step to `f` (values on `Q_R`).
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        match &self.engine {
            Engine::Direct { weights, offset, centre } => {
                let mut out = vec![0.0; f.len()];
                for (y, &fy) in f.iter().enumerate() {
                    if fy == 0.0 {
                        continue;
                    }
                    let base = centre - offset[y];
                    for (x, o) in out.iter_mut().enumerate() {
                        // index of x - y in Q_{2R}
                        *o += fy * weights[base + offset[x]];
                    }
                }
                out
            }
            Engine::Fft { m, forward, inverse, kernel_hat, slot } => {
                let mut buf = vec![Complex64::new(0.0, 0.0); kernel_hat.len()];
                for (i, &s) in slot.iter().enumerate() {
                    buf[s] = Complex64::new(f[i], 0.0);
                }
                fft_nd(&mut buf, *m, self.d, forward);
                for (b, k) in buf.iter_mut().zip(kernel_hat) {
                    *b *= k;
                }
                fft_nd(&mut buf, *m, self.d, inverse);
                let scale = 1.0 / kernel_hat.len() as f64;
                slot.iter().map(|&s| (buf[s].re * scale).max(0.0)).collect()
            }
        }
    }

    /// Killed step for a probability field, booking the escaped mass.
    pub fn step(&self, f: &LatticeField) -> LatticeField {
        let values = self.apply(&f.values);
        let kept = compensated_sum(values.iter().copied());
        let before = f.total();
        LatticeField { d: f.d, radius: f.radius, values, mass_outside: f.mass_outside + (before - kept).max(0.0) }
    }
}

fn fft_nd(buf: &mut [Complex64], m: usize, d: usize, fft: &Arc<dyn Fft<f64>>) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    let mut stride = m;
    for _ in 1..d {
        let block = stride * m;
        for start in (0..buf.len()).step_by(block) {
            for inner in 0..stride {
                for (t, l) in line.iter_mut().enumerate() {
                    *l = buf[start + inner + t * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (t, l) in line.iter().enumerate() {
                    buf[start + inner + t * stride] = *l;
                }
            }
        }
        stride = block;
    }
}

/// `D^{*n}` on `Q_R` for the walk killed outside `Q_R`; `mass_outside = 1 - sum`.
pub fn convolve_power(kernel: &Kernel, n: usize, radius: i64) -> Result<LatticeField> {
    if radius < 1 {
        return invalid("window radius must be >= 1");
    }
    let op = WindowOperator::new(kernel, radius)?;
    let mut f = LatticeField::delta(kernel.dim(), radius)?;
    for _ in 0..n {
        f = op.step(&f);
    }
    f.mass_outside = (1.0 - f.total()).max(0.0);
    Ok(f)
}

/// Plain convolution `(a * b)(x)` for `x` in `Q_radius`.
pub fn convolve_fields(a: &LatticeField, b: &LatticeField, radius: i64) -> Result<LatticeField> {
    if a.d != b.d {
        return invalid("fields have different dimensions");
    }
    let mut out = LatticeField::zeros(a.d, radius)?;
    let mut y_minus = Point::origin(a.d);
    for xi in 0..out.values.len() {
        let x = out.point(xi);
        let mut acc = CompensatedSum::new();
        for (yi, &av) in a.values.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let y = a.point(yi);
            for k in 0..a.d {
                y_minus.coords_mut()[k] = x[k] - y[k];
            }
            acc.add(av * b.get(&y_minus));
        }
        out.values[xi] = acc.value();
    }
    Ok(out)
}

fn check_transient(kernel: &Kernel) -> Result<()> {
    let a = kernel.alpha();
    if kernel.dim() as f64 <= a.two_wedge() {
        return Err(Error::RecurrentRegime { d: kernel.dim(), alpha: a.value() });
    }
    Ok(())
}

/// Green's function of the killed walk summed to `N` steps.
#[derive(Debug, Clone)]
pub struct GreenFunction {
    pub field: LatticeField,
    pub steps: usize,
    /// `sum_x D_R^{*(N+1)}(x)`: mass of the first omitted term.
    pub next_term_mass: f64,
    /// `max_x D_R^{*(N+1)}(x)`; equals the renewal residual `|G_N - delta - P G_N|`.
    pub next_term_sup: f64,
    /// Geometric extrapolation of `sum_{n > N} D_R^{*n}(0)` from the last doubling.
    pub origin_tail_estimate: f64,
}

pub fn green_function(kernel: &Kernel, steps: usize, radius: i64) -> Result<GreenFunction> {
    check_transient(kernel)?;
    if steps < 1 || radius < 1 {
        return invalid("green_function needs N >= 1 and R >= 1");
    }
    let op = WindowOperator::new(kernel, radius)?;
    green_function_with(&op, steps)
}

pub fn green_function_with(op: &WindowOperator, steps: usize) -> Result<GreenFunction> {
    let d = op.dim();
    let radius = op.radius();
    let mut f = LatticeField::delta(d, radius)?;
    let origin = f.index(&vec![0; d]).expect("origin");
    let mut g = f.values.clone();
    let half = steps / 2;
    let mut at_half = 0.0;
    for n in 1..=steps {
        f = op.step(&f);
        for (gv, fv) in g.iter_mut().zip(&f.values) {
            *gv += fv;
        }
        if n == half {
            at_half = f.values[origin];
        }
    }
    let at_end = f.values[origin];
    let origin_tail_estimate = if half >= 1 && at_half > 0.0 && at_end > 0.0 && at_end < at_half {
        let q = (at_end / at_half).powf(1.0 / (steps - half) as f64);
        at_end * q / (1.0 - q)
    } else if at_end == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let next = op.apply(&f.values);
    let next_term_mass = compensated_sum(next.iter().copied());
    let next_term_sup = next.iter().cloned().fold(0.0, f64::max);
    Ok(GreenFunction {
        field: LatticeField { d, radius, values: g, mass_outside: f.mass_outside },
        steps,
        next_term_mass,
        next_term_sup,
        origin_tail_estimate,
    })
}

/// `max_{x in Q_{R/2}} |G(x) - delta_0(x) - (P G)(x)|`.
pub fn renewal_residual(op: &WindowOperator, g: &LatticeField) -> f64 {
    let pg = op.apply(&g.values);
    let inner = g.radius / 2;
    (0..g.values.len())
        .filter_map(|i| {
            let p = g.point(i);
            (p.sup_norm() <= inner).then(|| {
                let delta = if p.is_origin() { 1.0 } else { 0.0 };
                (g.values[i] - delta - pg[i]).abs()
            })
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneArmOracle {
    /// Jumps beyond `Q_R` count as exits: the exact one-arm probability.
    pub hit: f64,
    /// Jumps beyond `Q_R` count as misses: a lower bound.
    pub miss: f64,
    pub iterations: usize,
}

/// One-arm probability of the BRW by monotone fixed-point iteration on `Q_r`.
pub fn brw_one_arm_oracle(off: &OffspringDist, kernel: &Kernel, r: i64, window: i64, tol: f64) -> Result<OneArmOracle> {
    if r < 0 || r >= window {
        return invalid(format!("oracle needs 0 <= r < R (got r = {r}, R = {window})"));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be > 0");
    }
    let d = kernel.dim();
    let inner = WindowOperator::new(kernel, r)?;
    let field = LatticeField::zeros(d, r)?;
    // escape probability from Q_r sites to beyond Q_R
    let big = WindowOperator::new(kernel, window)?;
    let big_field = LatticeField::zeros(d, window)?;
    let stay = big.apply(&vec![1.0; big_field.values.len()]);
    let beyond: Vec<f64> = (0..field.values.len())
        .map(|i| {
            let j = big_field.index(&field.point(i)).expect("Q_r inside Q_R");
            (1.0 - stay[j]).max(0.0)
        })
        .collect();
    let origin = field.index(&vec![0; d]).expect("origin");
    let solve = |extra: Option<&[f64]>| -> Result<(f64, usize)> {
        // v = probability that no descendant leaves Q_r
        let mut v = vec![1.0; field.values.len()];
        for it in 1..=1_000_000 {
            let s = inner.apply(&v);
            let mut change = 0.0f64;
            for i in 0..v.len() {
                let arg = (s[i] + extra.map_or(0.0, |e| e[i])).min(1.0);
                let nv = off.pgf(arg);
                if nv > v[i] + 1e-14 {
                    return Err(Error::NumericalGuard(format!("one-arm iteration lost monotonicity at step {it}")));
                }
                change = change.max(v[i] - nv);
                v[i] = nv;
            }
            if change < tol {
                return Ok((1.0 - v[origin], it));
            }
        }
        Err(Error::NumericalGuard("one-arm iteration did not converge".into()))
    };
    let (hit, it_hit) = solve(None)?;
    let (miss, it_miss) = solve(Some(&beyond))?;
    Ok(OneArmOracle { hit, miss, iterations: it_hit.max(it_miss) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeMomentOracle {
    pub r: i64,
    /// `E|V(Q_r)|`
    pub first: f64,
    /// `E|V(Q_r)|^2`
    pub second: f64,
}

/// First two moments of `|V(Q_r)|` for the BRW killed outside `Q_R` and
/// stopped after `N` generations. With `S = 1_{Q_r}`, `h_0 = m_0 = S`:
///
/// ```text
/// h_{M+1} = S + P h_M
/// m_{M+1} = S + 2 S P h_M + P m_M + sigma^2 (P h_M)^2
/// ```
///
/// and the moments are `h_N(0)`, `m_N(0)`.
pub fn three_point_sum(kernel: &Kernel, sigma_sq: f64, window: i64, depth: usize, r: i64) -> Result<VolumeMomentOracle> {
    check_transient(kernel)?;
    if r < 0 || 4 * r > window {
        return invalid(format!("three_point_sum needs 0 <= r <= R/4 (got r = {r}, R = {window})"));
    }
    if !(sigma_sq >= 0.0) {
        return invalid("sigma^2 must be >= 0");
    }
    let op = WindowOperator::new(kernel, window)?;
    let field = LatticeField::zeros(kernel.dim(), window)?;
    let s: Vec<f64> = (0..field.values.len()).map(|i| if field.point(i).sup_norm() <= r { 1.0 } else { 0.0 }).collect();
    let mut h = s.clone();
    let mut m = s.clone();
    for _ in 0..depth {
        let ph = op.apply(&h);
        let pm = op.apply(&m);
        for i in 0..h.len() {
            m[i] = s[i] + 2.0 * s[i] * ph[i] + pm[i] + sigma_sq * ph[i] * ph[i];
            h[i] = s[i] + ph[i];
        }
    }
    let origin = field.index(&vec![0; kernel.dim()]).expect("origin");
    Ok(VolumeMomentOracle { r, first: h[origin], second: m[origin] })
}

/// Up to 16 vertices and 24 edges with independent open probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyGraph {
    pub vertices: usize,
    /// `(u, v, p)`
    pub edges: Vec<(usize, usize, f64)>,
}

pub const MAX_TINY_VERTICES: usize = 16;
pub const MAX_TINY_EDGES: usize = 24;
pub const MAX_BK_EDGES: usize = 12;

impl TinyGraph {
    pub fn validate(&self) -> Result<()> {
        if self.vertices == 0 || self.vertices > MAX_TINY_VERTICES {
            return invalid(format!("tiny graph needs 1..={MAX_TINY_VERTICES} vertices"));
        }
        if self.edges.len() > MAX_TINY_EDGES {
            return Err(Error::TooLarge(format!("{} edges exceed the enumeration cap of {MAX_TINY_EDGES}", self.edges.len())));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v, p) in &self.edges {
            if u >= self.vertices || v >= self.vertices || u == v {
                return invalid(format!("edge ({u}, {v}) is not a simple edge of the graph"));
            }
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("edge probability {p} outside [0, 1]"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return invalid(format!("duplicate edge ({u}, {v})"));
            }
        }
        Ok(())
    }

    /// Whether `u` and `v` are joined by edges in `open` (bit `i` = edge `i`).
    pub fn connected(&self, open: u32, u: usize, v: usize) -> bool {
        if u == v {
            return true;
        }
        let mut reached = 1u32 << u;
        loop {
            let before = reached;
            for (i, &(a, b, _)) in self.edges.iter().enumerate() {
                if open >> i & 1 == 1 {
                    let (ma, mb) = (1u32 << a, 1u32 << b);
                    if reached & (ma | mb) != 0 {
                        reached |= ma | mb;
                    }
                }
            }
            if reached >> v & 1 == 1 {
                return true;
            }
            if reached == before {
                return false;
            }
        }
    }

    /// Probability of the configuration `open`.
    fn weight_tables(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.edges.len();
        let lo_bits = m.min(12);
        let table = |from: usize, to: usize| -> Vec<f64> {
            (0..1usize << (to - from))
                .map(|mask| {
                    (from..to)
                        .map(|i| {
                            let p = self.edges[i].2;
                            if mask >> (i - from) & 1 == 1 {
                                p
                            } else {
                                1.0 - p
                            }
                        })
                        .product()
                })
                .collect()
        };
        (table(0, lo_bits), table(lo_bits, m))
    }
}

/// Event over open-edge sets, given by edge indices and vertex labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSpec {
    Connected([usize; 2]),
    Open(Vec<usize>),
    AtLeast { k: usize, edges: Vec<usize> },
    Any(Vec<EventSpec>),
    All(Vec<EventSpec>),
    Not(Box<EventSpec>),
    True,
}

impl EventSpec {
    pub fn eval(&self, g: &TinyGraph, open: u32) -> bool {
        match self {
            EventSpec::Connected([u, v]) => g.connected(open, *u, *v),
            EventSpec::Open(es) => es.iter().all(|&e| open >> e & 1 == 1),
            EventSpec::AtLeast { k, edges } => edges.iter().filter(|&&e| open >> e & 1 == 1).count() >= *k,
            EventSpec::Any(v) => v.iter().any(|e| e.eval(g, open)),
            EventSpec::All(v) => v.iter().all(|e| e.eval(g, open)),
            EventSpec::Not(e) => !e.eval(g, open),
            EventSpec::True => true,
        }
    }

    pub fn validate(&self, g: &TinyGraph) -> Result<()> {
        let bad_edge = |e: &usize| *e >= g.edges.len();
        match self {
            EventSpec::Connected([u, v]) if *u >= g.vertices || *v >= g.vertices => {
                invalid(format!("event refers to vertex outside 0..{}", g.vertices))
            }
            EventSpec::Open(es) | EventSpec::AtLeast { edges: es, .. } if es.iter().any(bad_edge) => {
                invalid(format!("event refers to an edge outside 0..{}", g.edges.len()))
            }
            EventSpec::Any(v) | EventSpec::All(v) => v.iter().try_for_each(|e| e.validate(g)),
            EventSpec::Not(e) => e.validate(g),
            _ => Ok(()),
        }
    }

    /// Whether opening any edge can only turn the event on.
    pub fn is_increasing(&self, g: &TinyGraph) -> bool {
        let m = g.edges.len();
        (0u32..1 << m).all(|open| {
            !self.eval(g, open) || (0..m).all(|e| self.eval(g, open | 1 << e))
        })
    }
}

/// `sum_omega P(omega) 1{omega in event}` over all `2^m` configurations.
pub fn enumerate(g: &TinyGraph, event: &EventSpec) -> Result<f64> {
    g.validate()?;
    event.validate(g)?;
    let (lo, hi) = g.weight_tables();
    let lo_bits = g.edges.len().min(12);
    let mut acc = CompensatedSum::new();
    for h in 0..hi.len() {
        let mut part = 0.0;
        for (l, &wl) in lo.iter().enumerate() {
            let open = (h << lo_bits | l) as u32;
            if event.eval(g, open) {
                part += wl;
            }
        }
        acc.add(part * hi[h]);
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BkResult {
    /// `P(A o B)`: disjoint occurrence.
    pub disjoint: f64,
    /// `P(A) P(B)`
    pub product: f64,
}

/// Disjoint occurrence of two increasing events: some split of the open
/// edges into `K` and its complement has `K` witnessing `A` and the rest `B`.
pub fn bk_check(g: &TinyGraph, a: &EventSpec, b: &EventSpec) -> Result<BkResult> {
    g.validate()?;
    if g.edges.len() > MAX_BK_EDGES {
        return Err(Error::TooLarge(format!("disjoint occurrence is limited to {MAX_BK_EDGES} edges")));
    }
    a.validate(g)?;
    b.validate(g)?;
    if !a.is_increasing(g) || !b.is_increasing(g) {
        return invalid("both events must be increasing");
    }
    let m = g.edges.len();
    let (lo, _) = g.weight_tables();
    let mut acc = CompensatedSum::new();
    for open in 0u32..1 << m {
        // submasks K of open, including empty and full
        let mut k = open;
        let found = loop {
            if a.eval(g, k) && b.eval(g, open & !k) {
                break true;
            }
            if k == 0 {
                break false;
            }
            k = (k - 1) & open;
        };
        if found {
            acc.add(lo[open as usize]);
        }
    }
    let product = enumerate(g, a)? * enumerate(g, b)?;
    Ok(BkResult { disjoint: acc.value(), product })
}

/// `P(|T| = n)` for `n = 0..=n_max` by summing over all ordered trees with
/// `n` vertices, encoded as offspring sequences whose running sum of
/// `(xi - 1)` first reaches `-1` at step `n`.
pub fn progeny_by_enumeration(off: &OffspringDist, n_max: usize) -> Result<Vec<f64>> {
    if !(1..=9).contains(&n_max) {
        return invalid("tree enumeration supports 1 <= n_max <= 9");
    }
    fn walk(off: &OffspringDist, n_max: usize, len: usize, open: usize, prob: f64, out: &mut [f64]) {
        // `open` = vertices still to be read
        if open == 0 {
            out[len] += prob;
            return;
        }
        if len + open > n_max {
            return;
        }
        for xi in 0..=(n_max - len - 1) {
            let p = off.prob(xi);
            if p > 0.0 {
                walk(off, n_max, len + 1, open - 1 + xi, prob * p, out);
            }
        }
    }
    let mut out = vec![0.0; n_max + 1];
    walk(off, n_max, 0, 1, 1.0, &mut out);
    Ok(out)
}
