//! Branching random walk: GW trees embedded in `Z^d` by i.i.d. kernel steps.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{exponents, EstimateRow, EstimateTable, Model};
use crate::error::{invalid, Error, Result};
use crate::gw::{OffspringDist, ProgenySurvival, Tree, NO_PARENT};
use crate::kernel::Kernel;
use crate::lattice::{half_cube_contains, half_cube_side, sup_norm, Region, Shell};
use crate::parallel::{chunks, map_indexed};
use crate::rng::stream;

/// Sampling limits for [`sample_brw_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrwOptions {
    /// Maximum number of particles; reaching it sets `truncated`.
    pub cap: usize,
    /// Particles in this generation do not reproduce.
    pub max_generation: Option<u32>,
    /// Children landing outside `Q_R` are killed (not recorded).
    pub kill_outside: Option<i64>,
}

impl BrwOptions {
    pub fn capped(cap: usize) -> Self {
        BrwOptions { cap, max_generation: None, kill_outside: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    tree: Tree,
    d: usize,
    pos: Vec<i64>,
}

impl Embedding {
    /// Builds an embedding from parent indices and positions (`pos[0]` must be the origin).
    pub fn from_parts(tree: Tree, d: usize, positions: &[Vec<i64>]) -> Result<Self> {
        if positions.len() != tree.size() {
            return invalid("one position per vertex is required");
        }
        if positions.iter().any(|p| p.len() != d) {
            return invalid(format!("positions must have dimension {d}"));
        }
        if positions[0].iter().any(|&c| c != 0) {
            return invalid("the root sits at the origin");
        }
        Ok(Embedding { tree, d, pos: positions.concat() })
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn size(&self) -> usize {
        self.tree.size()
    }

    pub fn truncated(&self) -> bool {
        self.tree.truncated()
    }

    pub fn pos(&self, v: usize) -> &[i64] {
        &self.pos[v * self.d..(v + 1) * self.d]
    }

    pub fn positions(&self) -> impl Iterator<Item = &[i64]> {
        self.pos.chunks_exact(self.d)
    }
}

/// Fused breadth-first tree and embedding sampler.
pub fn sample_brw<R: Rng + ?Sized>(off: &OffspringDist, kernel: &Kernel, cap: usize, rng: &mut R) -> Result<Embedding> {
    sample_brw_with(off, kernel, &BrwOptions::capped(cap), rng)
}

pub fn sample_brw_with<R: Rng + ?Sized>(
    off: &OffspringDist,
    kernel: &Kernel,
    opts: &BrwOptions,
    rng: &mut R,
) -> Result<Embedding> {
    if opts.cap < 1 {
        return invalid("particle cap must be >= 1");
    }
    let d = kernel.dim();
    let mut parents = vec![NO_PARENT];
    let mut depth = vec![0u32];
    let mut pos = vec![0i64; d];
    let mut step = vec![0i64; d];
    let mut truncated = false;
    let mut i = 0;
    'bfs: while i < parents.len() {
        if opts.max_generation.is_some_and(|g| depth[i] >= g) {
            i += 1;
            continue;
        }
        let xi = off.sample(rng);
        for _ in 0..xi {
            if parents.len() >= opts.cap {
                truncated = true;
                break 'bfs;
            }
            kernel.sample_step_into(rng, &mut step);
            let base = i * d;
            let child: smallvec::SmallVec<[i64; 4]> = (0..d).map(|k| pos[base + k] + step[k]).collect();
            if opts.kill_outside.is_some_and(|r| sup_norm(&child) > r) {
                continue;
            }
            pos.extend_from_slice(&child);
            parents.push(i as u32);
            depth.push(depth[i] + 1);
        }
        i += 1;
    }
    Ok(Embedding { tree: Tree::from_parents(parents, truncated)?, d, pos })
}

/// How a truncated embedding that never left `Q_r` is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationPolicy {
    /// Refuse to decide.
    Reject,
    /// Upper-bound convention: truncation counts as a hit.
    CountAsHit,
}

/// Whether some particle lies outside `Q_r`; `r = -1` (empty cube) is always a hit.
pub fn one_arm(emb: &Embedding, r: i64, policy: TruncationPolicy) -> Result<bool> {
    if r < -1 {
        return invalid(format!("radius must be >= -1 (got {r})"));
    }
    if max_displacement(emb) > r {
        return Ok(true);
    }
    if emb.truncated() {
        return match policy {
            TruncationPolicy::CountAsHit => Ok(true),
            TruncationPolicy::Reject => invalid("embedding was truncated before the outcome was decided"),
        };
    }
    Ok(false)
}

pub fn max_displacement(emb: &Embedding) -> i64 {
    emb.positions().map(sup_norm).max().unwrap_or(0)
}

/// `|V(S)|`.
pub fn count_in_set(emb: &Embedding, region: &Region) -> Result<usize> {
    region.validate()?;
    Ok(emb.positions().filter(|p| region.contains(p)).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BoundaryStats {
    pub x_j: u64,
    pub a_j: u64,
}

/// `X_j`: particles in the shell `Q_j \ Q_{j-w}` all of whose strict ancestors
/// lie in `Q_{j-w}`. `A_j`: descendants (the particle itself included) of
/// those particles that land in its outward half-cube of side
/// `floor(L^{rho_over})`.
pub fn boundary_stats(emb: &Embedding, j: i64, w: i64, l: i64, rho_over: f64) -> Result<BoundaryStats> {
    let shell = Shell::new(j, w)?;
    if w == j {
        return invalid("boundary statistics need j > w");
    }
    if l < 0 || !(rho_over > 0.0) {
        return invalid("half-cube needs L >= 0 and rho_over > 0");
    }
    let side = half_cube_side(l, rho_over);
    let inner = j - w;
    let n = emb.size();
    // all strict ancestors inside Q_{j-w}
    let mut clear = vec![false; n];
    let mut owner = vec![u32::MAX; n];
    let mut stats = BoundaryStats::default();
    clear[0] = true;
    for v in 0..n {
        if let Some(p) = emb.tree().parent(v) {
            clear[v] = clear[p] && sup_norm(emb.pos(p)) <= inner;
            owner[v] = owner[p];
        }
        if clear[v] && shell.contains(emb.pos(v)) {
            stats.x_j += 1;
            owner[v] = v as u32;
        }
        if owner[v] != u32::MAX && half_cube_contains(emb.pos(v), emb.pos(owner[v] as usize), side)? {
            stats.a_j += 1;
        }
    }
    Ok(stats)
}

/// Some parent-child step has sup-norm at least `threshold`.
pub fn long_edge_event(emb: &Embedding, threshold: i64) -> Result<bool> {
    if threshold < 1 {
        return invalid("long-edge threshold must be >= 1");
    }
    Ok((1..emb.size()).any(|v| {
        let p = emb.tree().parent(v).expect("non-root");
        emb.pos(v).iter().zip(emb.pos(p)).any(|(a, b)| (a - b).abs() >= threshold)
    }))
}

/// Tree-size cap used at each radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapPolicy {
    /// `ceil(k * r^{2 rho})`; `rho` defaults to `min(4, alpha) / 2`.
    Scaled { k: f64, rho: Option<f64> },
    Fixed { cap: u64 },
}

impl Default for CapPolicy {
    fn default() -> Self {
        CapPolicy::Scaled { k: 100.0, rho: None }
    }
}

impl CapPolicy {
    pub fn cap(&self, r: i64, alpha: f64) -> Result<u64> {
        let c = match *self {
            CapPolicy::Fixed { cap } => cap as f64,
            CapPolicy::Scaled { k, rho } => {
                let rho = match rho {
                    Some(x) => x,
                    None => exponents(alpha)?.rho,
                };
                if !(k > 0.0 && rho >= 0.0) {
                    return invalid("scaled cap needs k > 0 and rho >= 0");
                }
                (k * (r.max(1) as f64).powf(2.0 * rho)).ceil()
            }
        };
        if !(c >= 1.0) {
            return invalid(format!("cap policy produced cap {c} < 1 at r = {r}"));
        }
        if c > 1e15 {
            return invalid(format!("cap policy produced cap {c} at r = {r}; too large"));
        }
        Ok(c as u64)
    }
}

/// Outcome of one tree against a set of increasing radii.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmScan {
    /// BFS index of the first particle outside `Q_{r_i}`, if any was generated.
    pub first_exit: Vec<Option<u64>>,
    /// Number of particles generated (stops early once every radius is exceeded or the cap is passed).
    pub generated: u64,
    /// The tree finished before any stopping rule applied.
    pub complete: bool,
}

impl ArmScan {
    /// Hit at radius index `i` when that radius uses tree-size cap `cap`;
    /// second component: hit only because the cap was reached.
    pub fn outcome(&self, i: usize, cap: u64) -> (bool, bool) {
        match self.first_exit[i] {
            Some(v) if v < cap => (true, false),
            // `generated` is the tree size if complete, else a lower bound that already exceeds any relevant cap
            _ => {
                let over = self.generated > cap;
                (over, over)
            }
        }
    }
}

/// Streams one BRW in BFS order, keeping only unprocessed particles, and
/// records where each radius is first exceeded. Stops once every radius is
/// exceeded or more than `max_cap` particles exist.
pub fn scan_one_arm<R: Rng + ?Sized>(
    off: &OffspringDist,
    kernel: &Kernel,
    radii: &[i64],
    max_cap: u64,
    rng: &mut R,
) -> ArmScan {
    let d = kernel.dim();
    let mut first_exit = vec![None; radii.len()];
    let mut next = 0usize;
    // queue of positions of generated but unprocessed particles
    let mut queue: Vec<i64> = vec![0; d];
    let mut head = 0usize;
    let mut generated = 1u64;
    let mut step = vec![0i64; d];
    let mut child = vec![0i64; d];
    if next < radii.len() && radii[next] < 0 {
        while next < radii.len() && radii[next] < 0 {
            first_exit[next] = Some(0);
            next += 1;
        }
    }
    while head < queue.len() {
        if next == radii.len() {
            return ArmScan { first_exit, generated, complete: false };
        }
        let xi = off.sample(rng);
        for _ in 0..xi {
            if generated > max_cap {
                return ArmScan { first_exit, generated, complete: false };
            }
            kernel.sample_step_into(rng, &mut step);
            for k in 0..d {
                child[k] = queue[head + k] + step[k];
            }
            let m = sup_norm(&child);
            while next < radii.len() && m > radii[next] {
                first_exit[next] = Some(generated);
                next += 1;
            }
            generated += 1;
            queue.extend_from_slice(&child);
        }
        head += d;
        if head > 4096 && head * 2 > queue.len() {
            queue.drain(..head);
            head = 0;
        }
    }
    ArmScan { first_exit, generated, complete: true }
}

/// Job description for [`estimate_gamma_brw`].
#[derive(Debug, Clone)]
pub struct BrwGammaJob<'a> {
    pub off: &'a OffspringDist,
    pub kernel: &'a Kernel,
    pub radii: &'a [i64],
    pub samples: u64,
    pub cap_policy: CapPolicy,
    pub seed: u64,
    pub workers: usize,
}

/// One-arm frequencies per radius with Wilson 95% intervals. Tree `i` uses
/// random stream `(seed, i)` and is shared by all radii; each radius applies
/// its own cap and scores trees larger than the cap as hits.
pub fn estimate_gamma_brw(job: &BrwGammaJob<'_>) -> Result<EstimateTable> {
    if job.samples == 0 {
        return invalid("samples must be >= 1");
    }
    if job.radii.is_empty() {
        return invalid("at least one radius is required");
    }
    if job.radii.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("radii must be strictly increasing");
    }
    if job.radii[0] < 0 {
        return invalid("radii must be >= 0");
    }
    let alpha = job.kernel.alpha().value();
    let caps: Vec<u64> = job.radii.iter().map(|&r| job.cap_policy.cap(r, alpha)).collect::<Result<_>>()?;
    let max_cap = *caps.iter().max().expect("non-empty");
    let tasks = chunks(job.samples);
    let nr = job.radii.len();
    let partial = map_indexed(tasks.len(), job.workers, |t| {
        let (lo, hi) = tasks[t];
        let mut hits = vec![0u64; nr];
        let mut unresolved = vec![0u64; nr];
        for i in lo..hi {
            let mut rng = stream(job.seed, i);
            let scan = scan_one_arm(job.off, job.kernel, job.radii, max_cap, &mut rng);
            for k in 0..nr {
                let (hit, by_cap) = scan.outcome(k, caps[k]);
                hits[k] += hit as u64;
                unresolved[k] += by_cap as u64;
            }
        }
        (hits, unresolved)
    })?;
    let mut hits = vec![0u64; nr];
    let mut unresolved = vec![0u64; nr];
    for (h, u) in partial {
        for k in 0..nr {
            hits[k] += h[k];
            unresolved[k] += u[k];
        }
    }
    let survival = ProgenySurvival::new(job.off, ProgenySurvival::DEFAULT_EXACT_LIMIT.min(max_cap as usize + 2))?;
    let rows = (0..nr)
        .map(|k| {
            let mut row = EstimateRow::new(job.radii[k], hits[k], job.samples, caps[k])?;
            // P(|T| > cap)
            row.cap_tail_bound = Some(survival.at(caps[k] + 1));
            row.unresolved = unresolved[k];
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateTable { model: Model::Brw, rows })
}

/// Sample moments of `|V(Q_r)|` for a BRW killed outside `Q_window` and stopped after `depth` generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMoments {
    pub r: i64,
    pub mean: f64,
    pub mean_stderr: f64,
    pub second: f64,
    pub second_stderr: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn volume_moments(
    off: &OffspringDist,
    kernel: &Kernel,
    radii: &[i64],
    window: i64,
    depth: u32,
    samples: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<VolumeMoments>> {
    if samples < 2 {
        return invalid("volume moments need >= 2 samples");
    }
    if radii.iter().any(|&r| r < 0 || r > window) {
        return invalid("radii must lie in [0, window]");
    }
    let opts = BrwOptions { cap: 50_000_000, max_generation: Some(depth), kill_outside: Some(window) };
    let nr = radii.len();
    let tasks = chunks(samples);
    let partial = map_indexed(tasks.len(), workers, |t| -> Result<Vec<[f64; 4]>> {
        let (lo, hi) = tasks[t];
        let mut acc = vec![[0.0f64; 4]; nr];
        for i in lo..hi {
            let emb = sample_brw_with(off, kernel, &opts, &mut stream(seed, i))?;
            if emb.truncated() {
                return Err(Error::NumericalGuard("killed BRW exceeded the particle cap".into()));
            }
            let norms: Vec<i64> = emb.positions().map(sup_norm).collect();
            for (k, &r) in radii.iter().enumerate() {
                let v = norms.iter().filter(|&&n| n <= r).count() as f64;
                let v2 = v * v;
                acc[k][0] += v;
                acc[k][1] += v2;
                acc[k][2] += v2 * v;
                acc[k][3] += v2 * v2;
            }
        }
        Ok(acc)
    })?;
    let mut acc = vec![[0.0f64; 4]; nr];
    for part in partial {
        for (a, p) in acc.iter_mut().zip(part?) {
            for c in 0..4 {
                a[c] += p[c];
            }
        }
    }
    let n = samples as f64;
    Ok(radii
        .iter()
        .zip(acc)
        .map(|(&r, a)| {
            let m1 = a[0] / n;
            let m2 = a[1] / n;
            let m4 = a[3] / n;
            VolumeMoments {
                r,
                mean: m1,
                mean_stderr: ((m2 - m1 * m1).max(0.0) / (n - 1.0)).sqrt(),
                second: m2,
                second_stderr: ((m4 - m2 * m2).max(0.0) / (n - 1.0)).sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelSpec;
    use crate::lattice::Point;

    fn bounded(d: usize) -> Kernel {
        Kernel::build(&KernelSpec::bounded_uniform(d, 1.0)).unwrap()
    }

    fn path(positions: &[&[i64]]) -> Embedding {
        let parents: Vec<u32> =
            std::iter::once(NO_PARENT).chain(0..positions.len() as u32 - 1).collect();
        let tree = Tree::from_parents(parents, false).unwrap();
        let d = positions[0].len();
        Embedding::from_parts(tree, d, &positions.iter().map(|p| p.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_particle() {
        let e = path(&[&[0, 0]]);
        assert!(!one_arm(&e, 0, TruncationPolicy::Reject).unwrap());
        assert!(one_arm(&e, -1, TruncationPolicy::Reject).unwrap());
        assert_eq!(max_displacement(&e), 0);
        assert_eq!(boundary_stats(&e, 5, 1, 4, 1.0).unwrap(), BoundaryStats::default());
        assert!(!long_edge_event(&e, 1).unwrap());
        assert_eq!(count_in_set(&e, &Region::Cube(0)).unwrap(), 1);
    }

    #[test]
    fn two_particles_step_three() {
        let e = path(&[&[0, 0], &[3, 0]]);
        assert!(one_arm(&e, 2, TruncationPolicy::Reject).unwrap());
        assert!(!one_arm(&e, 3, TruncationPolicy::Reject).unwrap());
        assert!(long_edge_event(&e, 3).unwrap());
        assert!(!long_edge_event(&e, 4).unwrap());
    }

    #[test]
    fn boundary_trace() {
        let j = 6;
        // root -> (0) -> (j) -> (j + 1): the middle vertex enters the shell, the leaf lies in its half-cube
        let e = path(&[&[0], &[0], &[j], &[j + 1]]);
        let s = boundary_stats(&e, j, 1, 4, 1.0).unwrap();
        assert_eq!(s.x_j, 1);
        assert_eq!(s.a_j, 2);
        // leaf stepping back inward falls outside the half-cube
        let e = path(&[&[0], &[0], &[j], &[j - 1]]);
        assert_eq!(boundary_stats(&e, j, 1, 4, 1.0).unwrap(), BoundaryStats { x_j: 1, a_j: 1 });
        // an ancestor already outside Q_{j-w} disqualifies later entries
        let e = path(&[&[0], &[j], &[j - 3], &[j]]);
        assert_eq!(boundary_stats(&e, j, 1, 4, 1.0).unwrap().x_j, 1);
        assert!(boundary_stats(&e, 3, 3, 4, 1.0).is_err());
    }

    #[test]
    fn cap_one_is_origin() {
        let k = bounded(2);
        let e = sample_brw(&OffspringDist::binary(), &k, 1, &mut stream(1, 0)).unwrap();
        assert_eq!(e.size(), 1);
        assert_eq!(e.pos(0), &[0, 0]);
    }

    #[test]
    fn bounded_steps_respect_depth() {
        let k = bounded(2);
        let off = OffspringDist::geometric_half();
        for i in 0..300 {
            let e = sample_brw(&off, &k, 2000, &mut stream(2, i)).unwrap();
            let depth = e.tree().depths();
            for v in 0..e.size() {
                assert!(sup_norm(e.pos(v)) <= depth[v] as i64);
            }
            assert!(!long_edge_event(&e, 2).unwrap());
        }
    }

    #[test]
    fn one_arm_matches_max_displacement() {
        let k = Kernel::build(&KernelSpec::canonical(1, 0.8, 1.0)).unwrap();
        let off = OffspringDist::binary();
        for i in 0..2000 {
            let e = sample_brw(&off, &k, 10_000, &mut stream(4, i)).unwrap();
            if e.truncated() {
                continue;
            }
            let m = max_displacement(&e);
            for r in [0, 1, 5, m - 1, m, m + 1] {
                if r >= 0 {
                    assert_eq!(one_arm(&e, r, TruncationPolicy::Reject).unwrap(), m > r);
                }
            }
        }
    }

    #[test]
    fn truncation_policy() {
        let k = bounded(1);
        let off = OffspringDist::binary();
        let e = (0..)
            .map(|i| sample_brw(&off, &k, 50, &mut stream(6, i)).unwrap())
            .find(|e| e.truncated() && max_displacement(e) < 100)
            .unwrap();
        assert!(one_arm(&e, 100, TruncationPolicy::CountAsHit).unwrap());
        assert!(one_arm(&e, 100, TruncationPolicy::Reject).is_err());
    }

    #[test]
    fn shells_partition_cube() {
        let k = Kernel::build(&KernelSpec::canonical(2, 0.8, 1.0)).unwrap();
        let off = OffspringDist::binary();
        for i in 0..200 {
            let e = sample_brw(&off, &k, 5000, &mut stream(7, i)).unwrap();
            let total = count_in_set(&e, &Region::Cube(20)).unwrap();
            let mut parts = count_in_set(&e, &Region::Cube(0)).unwrap();
            for j in (4..=20).step_by(4) {
                parts += count_in_set(&e, &Region::Shell(Shell::new(j, 4).unwrap())).unwrap();
            }
            // shell (0, 4] has j - w = 0 so the origin shell is Q_4 \ Q_0
            assert_eq!(parts, total);
            let outside = count_in_set(&e, &Region::Cube(20).complement()).unwrap();
            assert_eq!(total + outside, e.size());
        }
    }

    #[test]
    fn scan_agrees_with_full_embedding() {
        let k = Kernel::build(&KernelSpec::canonical(1, 0.8, 1.0)).unwrap();
        let off = OffspringDist::binary();
        let radii = [2i64, 8, 32];
        for i in 0..3000 {
            let scan = scan_one_arm(&off, &k, &radii, 400, &mut stream(8, i));
            for (idx, &r) in radii.iter().enumerate() {
                for cap in [10u64, 100, 400] {
                    let e = sample_brw(&off, &k, cap as usize, &mut stream(8, i)).unwrap();
                    let expect = one_arm(&e, r, TruncationPolicy::CountAsHit).unwrap();
                    assert_eq!(scan.outcome(idx, cap).0, expect, "i={i} r={r} cap={cap}");
                }
            }
        }
    }

    #[test]
    fn estimate_validation_and_determinism() {
        let k = Kernel::build(&KernelSpec::canonical(1, 0.8, 1.0)).unwrap();
        let off = OffspringDist::binary();
        let mut job = BrwGammaJob {
            off: &off,
            kernel: &k,
            radii: &[4, 16],
            samples: 0,
            cap_policy: CapPolicy::default(),
            seed: 3,
            workers: 1,
        };
        assert!(estimate_gamma_brw(&job).is_err());
        job.samples = 1;
        job.radii = &[1 << 40];
        let t = estimate_gamma_brw(&job).unwrap();
        assert_eq!(t.rows[0].hits, 0);
        assert_eq!(t.rows[0].ci_lo, 0.0);
        job.radii = &[4, 16];
        job.samples = 10_000;
        let a = estimate_gamma_brw(&job).unwrap();
        job.workers = 3;
        let b = estimate_gamma_brw(&job).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.rows[0].hits >= a.rows[1].hits);
        job.cap_policy = CapPolicy::Fixed { cap: 0 };
        assert!(estimate_gamma_brw(&job).is_err());
    }

    #[test]
    fn killed_brw_stays_in_window() {
        let k = Kernel::build(&KernelSpec::canonical(1, 0.8, 1.0)).unwrap();
        let opts = BrwOptions { cap: 1_000_000, max_generation: Some(20), kill_outside: Some(10) };
        for i in 0..500 {
            let e = sample_brw_with(&OffspringDist::binary(), &k, &opts, &mut stream(9, i)).unwrap();
            assert!(max_displacement(&e) <= 10);
            assert!(e.tree().depths().iter().all(|&g| g <= 20));
        }
        let _ = Point::origin(1);
    }
}
