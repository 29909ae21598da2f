//! Long-range percolation explored lazily inside a window `Q_R`.
//!
//! Edge `{x, y}` is open with probability `p D(x - y)`. From an explored
//! vertex `v` the offsets are grouped in dyadic blocks `2^i <= |z|_inf < 2^{i+1}`.
//! A block with `n` sites and envelope `q = p max_{|z| >= 2^i} D(z)` gets
//! `K ~ Bin(n, q)` distinct uniform candidates, each kept with probability
//! `p D(z) / q`, so every site is open independently with probability
//! `p D(z)`. Pairs with an already explored endpoint were decided before and
//! are skipped.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::analysis::{loglog_fit, EstimateRow, EstimateTable, FitResult, Model};
use crate::error::{invalid, Error, Result};
use crate::kernel::Kernel;
use crate::lattice::{sup_norm, Point, Shell};
use crate::parallel::{chunks, map_indexed};
use crate::rng::{stream, RandomStream};

/// Kernel, intensity `p` and window radius `R`.
#[derive(Debug, Clone)]
pub struct PercolationConfig {
    kernel: Kernel,
    p: f64,
    window: i64,
}

impl PercolationConfig {
    pub fn new(kernel: Kernel, p: f64, window: i64) -> Result<Self> {
        let p_max = 1.0 / kernel.max_pmf();
        if !(p >= 0.0) || p > p_max * (1.0 + 1e-12) {
            return invalid(format!("p = {p} outside [0, 1 / max D] = [0, {p_max}]"));
        }
        if window < 1 {
            return invalid(format!("window radius must be >= 1 (got {window})"));
        }
        let side = (2 * window + 1) as f64;
        if side.powi(kernel.dim() as i32) > 1.8e19 {
            return Err(Error::TooLarge(format!("window Q_{window} in d = {}", kernel.dim())));
        }
        Ok(PercolationConfig { p: p.min(p_max), kernel, window })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// Width of the boundary band: vertices with `|x|_inf > R - margin` flag the cluster.
    pub fn margin(&self) -> i64 {
        self.window / 4
    }

    /// Largest admissible intensity `1 / max D`.
    pub fn p_max(kernel: &Kernel) -> f64 {
        1.0 / kernel.max_pmf()
    }

    fn code(&self, x: &[i64]) -> u64 {
        let side = (2 * self.window + 1) as u64;
        x.iter().rev().fold(0u64, |acc, &c| acc * side + (c + self.window) as u64)
    }
}

/// Restrictions applied during one exploration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreOptions {
    pub vertex_cap: usize,
    /// Edges with `|x - y|_inf >= ell` stay closed.
    pub max_edge_len: Option<i64>,
    /// Edges without both endpoints in `Q_j` stay closed.
    pub level: Option<i64>,
    /// Stop as soon as a vertex with `|x|_inf > s` is found.
    pub stop_beyond: Option<i64>,
}

impl ExploreOptions {
    pub fn capped(vertex_cap: usize) -> Self {
        ExploreOptions { vertex_cap, max_edge_len: None, level: None, stop_beyond: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    window: i64,
    /// BFS discovery order, origin first.
    pub vertices: Vec<Point>,
    /// Open edges as indices into `vertices`.
    pub edges: Vec<(u32, u32)>,
    pub hit_window_boundary: bool,
    pub exploration_truncated: bool,
    /// Exploration ended early at a vertex beyond `stop_beyond`.
    pub stopped_beyond: bool,
    /// Bernoulli decisions made; each unordered pair at most once.
    pub decisions: u64,
}

impl Cluster {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// Whether every vertex's neighbourhood was fully explored.
    pub fn complete(&self) -> bool {
        !self.exploration_truncated && !self.stopped_beyond
    }

    pub fn max_norm(&self) -> i64 {
        self.vertices.iter().map(|v| v.sup_norm()).max().unwrap_or(0)
    }

    fn component(&self, keep: impl Fn(&Point, &Point) -> bool) -> Cluster {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            if keep(&self.vertices[a as usize], &self.vertices[b as usize]) {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
        }
        let mut new_index = vec![u32::MAX; n];
        new_index[0] = 0;
        let mut order = vec![0u32];
        let mut head = 0;
        while head < order.len() {
            let v = order[head] as usize;
            head += 1;
            for &u in &adj[v] {
                if new_index[u as usize] == u32::MAX {
                    new_index[u as usize] = order.len() as u32;
                    order.push(u);
                }
            }
        }
        let vertices = order.iter().map(|&i| self.vertices[i as usize].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&(a, b)| {
                new_index[a as usize] != u32::MAX && keep(&self.vertices[a as usize], &self.vertices[b as usize])
            })
            .map(|&(a, b)| (new_index[a as usize], new_index[b as usize]))
            .collect();
        Cluster {
            window: self.window,
            vertices,
            edges,
            hit_window_boundary: false,
            exploration_truncated: self.exploration_truncated,
            stopped_beyond: self.stopped_beyond,
            decisions: 0,
        }
    }

    /// Origin component using only edges with `|x - y|_inf < ell`, on this realization.
    pub fn short_edge_component(&self, ell: i64) -> Cluster {
        self.component(|x, y| crate::lattice::sup_dist(x, y) < ell)
    }

    /// Origin component using only edges inside `Q_j`, on this realization.
    pub fn level_component(&self, j: i64) -> Cluster {
        self.component(|x, y| x.sup_norm() <= j && y.sup_norm() <= j)
    }
}

struct Block {
    lo: i64,
    hi: i64,
    sites: u64,
    q: f64,
    envelope: f64,
}

fn blocks(cfg: &PercolationConfig, max_shell: i64) -> Vec<Block> {
    let d = cfg.kernel.dim() as i32;
    let mut out = Vec::new();
    let mut lo = 1i64;
    while lo <= max_shell {
        let hi = (2 * lo).min(max_shell + 1);
        let sites = ((2 * hi - 1) as f64).powi(d) - ((2 * lo - 1) as f64).powi(d);
        let envelope = cfg.kernel.envelope_pmf_from(lo);
        out.push(Block { lo, hi, sites: sites as u64, q: (cfg.p * envelope).min(1.0), envelope });
        lo = hi;
    }
    out
}

/// Breadth-first exploration of the open cluster of `origin` within `Q_R`.
pub fn explore(cfg: &PercolationConfig, origin: &[i64], opts: &ExploreOptions, rng: &mut RandomStream) -> Result<Cluster> {
    let d = cfg.kernel.dim();
    if origin.len() != d {
        return invalid(format!("origin has dimension {} but the kernel has d = {d}", origin.len()));
    }
    if sup_norm(origin) > cfg.window {
        return invalid(format!("origin {origin:?} outside the window Q_{}", cfg.window));
    }
    if opts.vertex_cap < 1 {
        return invalid("vertex cap must be >= 1");
    }
    let region = opts.level.unwrap_or(cfg.window).min(cfg.window);
    if region < 0 {
        return invalid("level must be >= 0");
    }
    if sup_norm(origin) > region {
        return invalid("origin outside the level cube");
    }
    if let Some(ell) = opts.max_edge_len {
        if ell < 1 {
            return invalid("edge length bound must be >= 1");
        }
    }
    let mut max_shell = 2 * region;
    if let Some(ell) = opts.max_edge_len {
        max_shell = max_shell.min(ell - 1);
    }
    let blocks = blocks(cfg, max_shell);
    let band = cfg.window - cfg.margin();

    let mut cluster = Cluster {
        window: cfg.window,
        vertices: vec![Point::new(origin)],
        edges: Vec::new(),
        hit_window_boundary: sup_norm(origin) > band,
        exploration_truncated: false,
        stopped_beyond: false,
        decisions: 0,
    };
    if let Some(s) = opts.stop_beyond {
        if sup_norm(origin) > s {
            cluster.stopped_beyond = true;
            return Ok(cluster);
        }
    }
    let mut index: FxHashMap<u64, u32> = FxHashMap::default();
    index.insert(cfg.code(origin), 0);
    let mut memo: FxHashMap<(u64, u64), bool> = FxHashMap::default();
    let mut picked: FxHashSet<Point> = FxHashSet::default();
    let mut candidates: Vec<Point> = Vec::new();
    let mut y = Point::origin(d);
    let mut head = 0usize;

    'bfs: while head < cluster.vertices.len() {
        let v = cluster.vertices[head].clone();
        let v_code = cfg.code(&v);
        let v_idx = head as u32;
        head += 1;
        let reach = region + v.sup_norm();
        for b in &blocks {
            if b.lo > reach || b.q <= 0.0 {
                continue;
            }
            candidates.clear();
            if b.q >= 0.25 && b.sites <= 4096 {
                // dense block: every site is a candidate, kept with probability p D(z)
                let r = b.hi - 1;
                for z in crate::lattice::cube_points(d, r) {
                    if z.sup_norm() >= b.lo {
                        candidates.push(z);
                    }
                }
            } else {
                let k = Binomial::new(b.sites, b.q).map_err(|e| Error::NumericalGuard(format!("binomial: {e}")))?.sample(rng);
                picked.clear();
                while (picked.len() as u64) < k {
                    let mut z = Point::origin(d);
                    loop {
                        for c in z.coords_mut() {
                            *c = rng.random_range(-(b.hi - 1)..=b.hi - 1);
                        }
                        if z.sup_norm() >= b.lo {
                            break;
                        }
                    }
                    if picked.insert(z.clone()) {
                        candidates.push(z);
                    }
                }
            }
            let dense = b.q >= 0.25 && b.sites <= 4096;
            for z in &candidates {
                for k in 0..d {
                    y.coords_mut()[k] = v[k] + z[k];
                }
                if y.sup_norm() > region {
                    continue;
                }
                let y_code = cfg.code(&y);
                let known = index.get(&y_code).copied();
                if matches!(known, Some(i) if (i as usize) < head) {
                    continue;
                }
                let pmf = cfg.kernel.pmf(z);
                let accept = if dense { cfg.p * pmf } else { pmf / b.envelope };
                let open = rng.random::<f64>() < accept;
                let key = (v_code.min(y_code), v_code.max(y_code));
                cluster.decisions += 1;
                if memo.insert(key, open).is_some() {
                    return Err(Error::NumericalGuard(format!("edge {v:?} - {y:?} decided twice")));
                }
                if !open {
                    continue;
                }
                let y_idx = match known {
                    Some(i) => i,
                    None => {
                        if cluster.vertices.len() >= opts.vertex_cap {
                            cluster.exploration_truncated = true;
                            break 'bfs;
                        }
                        let i = cluster.vertices.len() as u32;
                        index.insert(y_code, i);
                        cluster.vertices.push(y.clone());
                        if y.sup_norm() > band {
                            cluster.hit_window_boundary = true;
                        }
                        i
                    }
                };
                cluster.edges.push((v_idx, y_idx));
                if let Some(s) = opts.stop_beyond {
                    if y.sup_norm() > s {
                        cluster.stopped_beyond = true;
                        break 'bfs;
                    }
                }
            }
        }
    }
    Ok(cluster)
}

pub fn explore_cluster(cfg: &PercolationConfig, origin: &[i64], vertex_cap: usize, rng: &mut RandomStream) -> Result<Cluster> {
    explore(cfg, origin, &ExploreOptions::capped(vertex_cap), rng)
}

/// Cluster using only edges shorter than `ell` (sup-norm).
pub fn truncated_cluster(
    cfg: &PercolationConfig,
    origin: &[i64],
    ell: i64,
    vertex_cap: usize,
    rng: &mut RandomStream,
) -> Result<Cluster> {
    explore(cfg, origin, &ExploreOptions { max_edge_len: Some(ell), ..ExploreOptions::capped(vertex_cap) }, rng)
}

/// Cluster of the origin with every edge not inside `Q_j` closed.
pub fn cluster_until_level(cfg: &PercolationConfig, j: i64, vertex_cap: usize, rng: &mut RandomStream) -> Result<Cluster> {
    if !(0..=cfg.window).contains(&j) {
        return invalid(format!("level j = {j} outside [0, R = {}]", cfg.window));
    }
    let origin = vec![0; cfg.kernel.dim()];
    explore(cfg, &origin, &ExploreOptions { level: Some(j), ..ExploreOptions::capped(vertex_cap) }, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmOutcome {
    Hit,
    Miss,
    /// Truncated or touched the boundary band without leaving `Q_r`; tallied as a hit.
    Indeterminate,
}

impl ArmOutcome {
    pub fn counts_as_hit(self) -> bool {
        self != ArmOutcome::Miss
    }
}

pub fn one_arm_lrp(cluster: &Cluster, r: i64) -> Result<ArmOutcome> {
    if r >= cluster.window {
        return Err(Error::WindowTooSmall(format!("r = {r} must be < R = {}", cluster.window)));
    }
    if r < 0 || cluster.max_norm() > r {
        return Ok(ArmOutcome::Hit);
    }
    if cluster.exploration_truncated || cluster.hit_window_boundary || cluster.stopped_beyond {
        return Ok(ArmOutcome::Indeterminate);
    }
    Ok(ArmOutcome::Miss)
}

/// Some cluster edge has `|x - y|_inf >= threshold`.
pub fn long_edge_event_lrp(cluster: &Cluster, threshold: i64) -> bool {
    cluster.edges.iter().any(|&(a, b)| {
        crate::lattice::sup_dist(&cluster.vertices[a as usize], &cluster.vertices[b as usize]) >= threshold
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LrpBoundaryStats {
    /// `|C_j ∩ dQ_{j,w}|`
    pub x_j: u64,
    /// `|C ∩ (Q_{j+L} \ Q_j)|`
    pub a_j: u64,
    /// The full cluster hit the vertex cap, so both counts are lower bounds.
    pub truncated: bool,
}

/// `X_j` from the cluster until level `j` and `A_j` from the full cluster, on one realization.
pub fn boundary_stats_lrp(
    cfg: &PercolationConfig,
    j: i64,
    w: i64,
    l: i64,
    vertex_cap: usize,
    rng: &mut RandomStream,
) -> Result<LrpBoundaryStats> {
    if j < 0 || l < 0 || j + l > cfg.window {
        return Err(Error::WindowTooSmall(format!("need 0 <= j, L and j + L <= R (j = {j}, L = {l}, R = {})", cfg.window)));
    }
    let shell = Shell::new(j, w)?;
    let full = explore_cluster(cfg, &vec![0; cfg.kernel.dim()], vertex_cap, rng)?;
    let cj = full.level_component(j);
    let x_j = cj.vertices.iter().filter(|v| shell.contains(v)).count() as u64;
    let a_j = full
        .vertices
        .iter()
        .filter(|v| {
            let n = v.sup_norm();
            n > j && n <= j + l
        })
        .count() as u64;
    Ok(LrpBoundaryStats { x_j, a_j, truncated: full.exploration_truncated })
}

/// Job description for [`estimate_gamma_lrp`].
#[derive(Debug, Clone)]
pub struct LrpGammaJob<'a> {
    pub cfg: &'a PercolationConfig,
    pub radii: &'a [i64],
    pub samples: u64,
    pub vertex_cap: usize,
    pub seed: u64,
    pub workers: usize,
}

/// One-arm frequencies per radius. Cluster `i` uses stream `(seed, i)` and
/// is explored until it leaves `Q_{max r}`; indeterminate outcomes count as
/// hits and are reported per row.
pub fn estimate_gamma_lrp(job: &LrpGammaJob<'_>) -> Result<EstimateTable> {
    let cfg = job.cfg;
    if job.samples == 0 {
        return invalid("samples must be >= 1");
    }
    if job.radii.is_empty() || job.radii.windows(2).any(|w| w[1] <= w[0]) || job.radii[0] < 0 {
        return invalid("radii must be non-empty, non-negative and strictly increasing");
    }
    let r_max = *job.radii.last().expect("non-empty");
    if 4 * r_max > cfg.window {
        return Err(Error::WindowTooSmall(format!("max radius {r_max} exceeds R / 4 = {}", cfg.window as f64 / 4.0)));
    }
    let opts = ExploreOptions { stop_beyond: Some(r_max), ..ExploreOptions::capped(job.vertex_cap) };
    let origin = vec![0; cfg.kernel.dim()];
    let nr = job.radii.len();
    let tasks = chunks(job.samples);
    let partial = map_indexed(tasks.len(), job.workers, |t| -> Result<(Vec<u64>, Vec<u64>)> {
        let (lo, hi) = tasks[t];
        let mut hits = vec![0u64; nr];
        let mut indet = vec![0u64; nr];
        for i in lo..hi {
            let c = explore(cfg, &origin, &opts, &mut stream(job.seed, i))?;
            for (k, &r) in job.radii.iter().enumerate() {
                let o = one_arm_lrp(&c, r)?;
                hits[k] += o.counts_as_hit() as u64;
                indet[k] += (o == ArmOutcome::Indeterminate) as u64;
            }
        }
        Ok((hits, indet))
    })?;
    let mut hits = vec![0u64; nr];
    let mut indet = vec![0u64; nr];
    for part in partial {
        let (h, u) = part?;
        for k in 0..nr {
            hits[k] += h[k];
            indet[k] += u[k];
        }
    }
    let rows = (0..nr)
        .map(|k| {
            let mut row = EstimateRow::new(job.radii[k], hits[k], job.samples, job.vertex_cap as u64)?;
            row.unresolved = indet[k];
            row.window = Some(cfg.window);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateTable { model: Model::Lrp, rows })
}

/// `P(|C| >= n)` for each `n` in `grid` from `samples` capped explorations.
pub fn cluster_size_tail(
    cfg: &PercolationConfig,
    grid: &[u64],
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<(u64, u64)>> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] < 1 {
        return invalid("size grid must be non-empty, positive and strictly increasing");
    }
    if samples == 0 {
        return invalid("samples must be >= 1");
    }
    let cap = *grid.last().expect("non-empty") as usize;
    let origin = vec![0; cfg.kernel.dim()];
    let tasks = chunks(samples);
    let partial = map_indexed(tasks.len(), workers, |t| -> Result<Vec<u64>> {
        let (lo, hi) = tasks[t];
        let mut counts = vec![0u64; grid.len()];
        for i in lo..hi {
            let c = explore_cluster(cfg, &origin, cap, &mut stream(seed, i))?;
            let size = c.size() as u64;
            for (k, &n) in grid.iter().enumerate() {
                counts[k] += (size >= n) as u64;
            }
        }
        Ok(counts)
    })?;
    let mut counts = vec![0u64; grid.len()];
    for part in partial {
        for (c, x) in counts.iter_mut().zip(part?) {
            *c += x;
        }
    }
    Ok(grid.iter().copied().zip(counts).collect())
}

/// Fitted slope of `log P(|C| >= n)` against `log n`; `None` when some tail count is zero.
pub fn tail_slope(cfg: &PercolationConfig, grid: &[u64], samples: u64, seed: u64, workers: usize) -> Result<Option<FitResult>> {
    let tail = cluster_size_tail(cfg, grid, samples, seed, workers)?;
    if tail.iter().any(|&(_, c)| c == 0) {
        return Ok(None);
    }
    let s = samples as f64;
    let pts: Vec<(f64, f64, f64)> = tail
        .iter()
        .map(|&(n, c)| {
            let q = c as f64 / s;
            (n as f64, q, (q * (1.0 - q) / s).sqrt())
        })
        .collect();
    Ok(Some(loglog_fit(&pts)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcJob {
    pub window: i64,
    pub n_grid: Vec<u64>,
    pub samples: u64,
    pub seed: u64,
    pub workers: usize,
    pub bisection_steps: usize,
    /// Initial bracket; defaults to `[0, 1 / max D]`.
    pub bracket: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcStep {
    pub p: f64,
    /// `None` when some tail count was zero (slope effectively `-inf`).
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcEstimate {
    pub p_c: f64,
    pub slope: f64,
    pub slope_stderr: f64,
    pub window: i64,
    pub steps: Vec<PcStep>,
    /// The same search at `R / 2`.
    pub p_c_half_window: f64,
    /// `|p_c(R) - p_c(R/2)| / p_c(R)`
    pub window_shift: f64,
    pub warning: Option<String>,
}

/// Slope of `log P(|C| >= n)` that marks criticality.
pub const CRITICAL_TAIL_SLOPE: f64 = -0.5;

fn bisect_pc(kernel: &Kernel, job: &PcJob, window: i64) -> Result<(f64, Option<FitResult>, Vec<PcStep>)> {
    let (mut lo, mut hi) = job.bracket.unwrap_or((0.0, PercolationConfig::p_max(kernel)));
    if !(lo < hi) {
        return invalid("bracket must satisfy lo < hi");
    }
    let slope_at = |p: f64| -> Result<Option<FitResult>> {
        let cfg = PercolationConfig::new(kernel.clone(), p, window)?;
        tail_slope(&cfg, &job.n_grid, job.samples, job.seed, job.workers)
    };
    let below = |f: &Option<FitResult>| f.as_ref().is_none_or(|f| f.slope < CRITICAL_TAIL_SLOPE);
    let mut steps = Vec::new();
    let f_lo = slope_at(lo)?;
    steps.push(PcStep { p: lo, slope: f_lo.as_ref().map(|f| f.slope) });
    let f_hi = slope_at(hi)?;
    steps.push(PcStep { p: hi, slope: f_hi.as_ref().map(|f| f.slope) });
    if !below(&f_lo) || below(&f_hi) {
        return Err(Error::NonBracketing(format!(
            "tail slopes at p = {lo} and p = {hi} are {:?} and {:?}; need one below and one above {CRITICAL_TAIL_SLOPE}",
            f_lo.map(|f| f.slope),
            f_hi.map(|f| f.slope)
        )));
    }
    let mut best = f_hi;
    for _ in 0..job.bisection_steps {
        let mid = 0.5 * (lo + hi);
        let f = slope_at(mid)?;
        steps.push(PcStep { p: mid, slope: f.as_ref().map(|f| f.slope) });
        if below(&f) {
            lo = mid;
        } else {
            hi = mid;
            best = f;
        }
    }
    let p = 0.5 * (lo + hi);
    let f = slope_at(p)?;
    steps.push(PcStep { p, slope: f.as_ref().map(|f| f.slope) });
    Ok((p, f.or(best), steps))
}

/// Bisection for the `p` where the cluster-size tail slope crosses `-1/2`,
/// repeated at `R / 2` as a finite-size diagnostic.
pub fn estimate_pc(kernel: &Kernel, job: &PcJob) -> Result<PcEstimate> {
    if job.window < 2 {
        return invalid("window must be >= 2 so that R / 2 >= 1");
    }
    if job.n_grid.len() < 3 {
        return invalid("size grid needs at least 3 points");
    }
    let warning = {
        let d = kernel.dim() as f64;
        let a = kernel.alpha().two_wedge();
        (d <= 3.0 * a).then(|| format!("d = {d} <= 3 min(2, alpha) = {}: the tail criterion is heuristic here", 3.0 * a))
    };
    let (p_c, fit, steps) = bisect_pc(kernel, job, job.window)?;
    let (p_half, _, _) = bisect_pc(kernel, job, job.window / 2)?;
    let (slope, slope_stderr) = fit.map_or((f64::NEG_INFINITY, f64::NAN), |f| (f.slope, f.slope_stderr));
    Ok(PcEstimate {
        p_c,
        slope,
        slope_stderr,
        window: job.window,
        steps,
        p_c_half_window: p_half,
        window_shift: if p_c > 0.0 { (p_c - p_half).abs() / p_c } else { f64::INFINITY },
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;

    fn canonical(d: usize, alpha: f64) -> Kernel {
        Kernel::build(&KernelSpec::canonical(d, alpha, 1.0)).unwrap()
    }

    #[test]
    fn config_rejects_large_p() {
        let k = canonical(1, 0.8);
        let pm = PercolationConfig::p_max(&k);
        assert!(PercolationConfig::new(k.clone(), pm, 8).is_ok());
        assert!(PercolationConfig::new(k.clone(), pm * 1.01, 8).is_err());
        assert!(PercolationConfig::new(k, -0.1, 8).is_err());
    }

    #[test]
    fn p_zero_is_single_vertex() {
        let cfg = PercolationConfig::new(canonical(2, 0.8), 0.0, 16).unwrap();
        let c = explore_cluster(&cfg, &[0, 0], 100, &mut stream(1, 0)).unwrap();
        assert_eq!(c.size(), 1);
        assert!(c.edges.is_empty());
        assert_eq!(one_arm_lrp(&c, 0).unwrap(), ArmOutcome::Miss);
        assert!(one_arm_lrp(&c, 16).is_err());
        assert!(!long_edge_event_lrp(&c, 1));
        assert!(explore_cluster(&cfg, &[17, 0], 10, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn full_bounded_kernel_fills_window() {
        let k = Kernel::build(&KernelSpec::bounded_uniform(2, 4.0)).unwrap();
        let p = PercolationConfig::p_max(&k);
        let cfg = PercolationConfig::new(k, p, 2).unwrap();
        let c = explore_cluster(&cfg, &[0, 0], 1000, &mut stream(3, 0)).unwrap();
        assert_eq!(c.size(), 25);
        // every pair of the 25 sites is open
        assert_eq!(c.edges.len(), 25 * 24 / 2);
        assert!(long_edge_event_lrp(&c, 1));
    }

    #[test]
    fn edge_length_and_level_limits() {
        let k = canonical(1, 0.8);
        let cfg = PercolationConfig::new(k.clone(), PercolationConfig::p_max(&k), 32).unwrap();
        for s in 0..50 {
            let c = truncated_cluster(&cfg, &[0], 1, 1000, &mut stream(s, 0)).unwrap();
            assert_eq!(c.size(), 1);
            let a = explore_cluster(&cfg, &[0], 1000, &mut stream(s, 0)).unwrap();
            let b = truncated_cluster(&cfg, &[0], 65, 1000, &mut stream(s, 0)).unwrap();
            assert_eq!(a, b);
            let e = cluster_until_level(&cfg, 32, 1000, &mut stream(s, 0)).unwrap();
            assert_eq!(a, e);
            assert_eq!(cluster_until_level(&cfg, 0, 1000, &mut stream(s, 0)).unwrap().size(), 1);
            let short = a.short_edge_component(4);
            assert!(short.vertices.iter().all(|v| a.vertices.contains(v)));
            assert!(!long_edge_event_lrp(&short, 4));
            let lvl = a.level_component(8);
            assert!(lvl.max_norm() <= 8);
        }
    }

    #[test]
    fn vertex_cap_truncates() {
        let k = Kernel::build(&KernelSpec::bounded_uniform(2, 4.0)).unwrap();
        let p = PercolationConfig::p_max(&k);
        let cfg = PercolationConfig::new(k, p, 8).unwrap();
        let c = explore_cluster(&cfg, &[0, 0], 10, &mut stream(3, 0)).unwrap();
        assert_eq!(c.size(), 10);
        assert!(c.exploration_truncated);
        assert_eq!(one_arm_lrp(&c, 7).unwrap(), if c.max_norm() > 7 { ArmOutcome::Hit } else { ArmOutcome::Indeterminate });
    }

    #[test]
    fn gamma_table_shape() {
        let k = canonical(1, 0.8);
        let cfg = PercolationConfig::new(k, 0.5, 64).unwrap();
        let job = LrpGammaJob { cfg: &cfg, radii: &[1, 4, 16], samples: 2000, vertex_cap: 10_000, seed: 5, workers: 1 };
        let t = estimate_gamma_lrp(&job).unwrap();
        assert!(t.rows.windows(2).all(|w| w[1].hits <= w[0].hits));
        assert!(t.to_csv().starts_with("r,hits,trials,gamma_hat,ci_lo,ci_hi,cap,window,indeterminate,indeterminate_fraction\n"));
        let bad = LrpGammaJob { radii: &[17], ..job };
        assert!(matches!(estimate_gamma_lrp(&bad), Err(Error::WindowTooSmall(_))));
        let zero = PercolationConfig::new(canonical(1, 0.8), 0.0, 64).unwrap();
        let t = estimate_gamma_lrp(&LrpGammaJob { cfg: &zero, ..job }).unwrap();
        assert!(t.rows.iter().all(|r| r.hits == 0));
    }

    #[test]
    fn boundary_stats_all_open() {
        let k = Kernel::build(&KernelSpec::bounded_uniform(1, 8.0)).unwrap();
        let p = PercolationConfig::p_max(&k);
        let cfg = PercolationConfig::new(k, p, 8).unwrap();
        let s = boundary_stats_lrp(&cfg, 4, 2, 3, 1000, &mut stream(0, 0)).unwrap();
        assert_eq!(s, LrpBoundaryStats { x_j: 4, a_j: 6, truncated: false });
        let zero = PercolationConfig::new(canonical(1, 0.8), 0.0, 8).unwrap();
        let s = boundary_stats_lrp(&zero, 4, 2, 3, 1000, &mut stream(0, 0)).unwrap();
        assert_eq!((s.x_j, s.a_j), (0, 0));
        assert!(boundary_stats_lrp(&cfg, 6, 2, 3, 1000, &mut stream(0, 0)).is_err());
    }
}
