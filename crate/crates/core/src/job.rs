//! Batch job descriptions shared by the command line and the Python bindings.

use serde::{Deserialize, Serialize};

use crate::analysis::{EstimateTable, Model};
use crate::brw::{estimate_gamma_brw, BrwGammaJob, CapPolicy};
use crate::error::{invalid, Result};
use crate::gw::OffspringDist;
use crate::kernel::{Kernel, KernelSpec};
use crate::lrp::{estimate_gamma_lrp, estimate_pc, LrpGammaJob, PcEstimate, PcJob, PercolationConfig};
use crate::parallel::resolve_workers;

/// Edge intensity of an LRP job: a number or `"auto-pc"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Intensity {
    Value(f64),
    Auto(AutoPc),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoPc {
    #[serde(rename = "auto-pc")]
    AutoPc,
}

/// Settings of the critical-point search used by `"auto-pc"` and `estimate-pc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcSettings {
    #[serde(default = "PcSettings::default_grid")]
    pub n_grid: Vec<u64>,
    #[serde(default = "PcSettings::default_samples")]
    pub samples: u64,
    #[serde(default = "PcSettings::default_steps")]
    pub bisection_steps: usize,
    #[serde(default)]
    pub bracket: Option<(f64, f64)>,
}

impl PcSettings {
    fn default_grid() -> Vec<u64> {
        (3..=10).map(|i| 1u64 << i).collect()
    }
    fn default_samples() -> u64 {
        20_000
    }
    fn default_steps() -> usize {
        12
    }
}

impl Default for PcSettings {
    fn default() -> Self {
        PcSettings {
            n_grid: Self::default_grid(),
            samples: Self::default_samples(),
            bisection_steps: Self::default_steps(),
            bracket: None,
        }
    }
}

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: Model,
    pub kernel: KernelSpec,
    /// BRW offspring law.
    #[serde(default)]
    pub offspring: Option<OffspringDist>,
    /// LRP intensity.
    #[serde(default)]
    pub p: Option<Intensity>,
    pub radii: Vec<i64>,
    pub samples: u64,
    /// LRP window radius; defaults to `4 max(radii)`.
    #[serde(default)]
    pub window: Option<i64>,
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub cap: Option<CapPolicy>,
    #[serde(default)]
    pub vertex_cap: Option<usize>,
    #[serde(default)]
    pub pc: Option<PcSettings>,
}

/// Result of [`run_job`].
#[derive(Debug, Clone)]
pub struct JobOutput {
    pub table: EstimateTable,
    /// Intensity actually used (LRP).
    pub p: Option<f64>,
    pub pc: Option<PcEstimate>,
    pub workers: usize,
}

impl JobConfig {
    /// Checks every precondition that can be checked before sampling.
    pub fn validate(&self) -> Result<Kernel> {
        self.kernel.validate()?;
        let kernel = Kernel::build(&self.kernel)?;
        if self.samples == 0 {
            return invalid("samples must be >= 1");
        }
        if self.radii.is_empty() {
            return invalid("radii must not be empty");
        }
        if self.radii.windows(2).any(|w| w[1] <= w[0]) || self.radii[0] < 0 {
            return invalid("radii must be non-negative and strictly increasing");
        }
        if self.workers == Some(0) {
            return invalid("workers must be >= 1");
        }
        match self.model {
            Model::Brw => {
                if self.offspring.is_none() {
                    return invalid("brw jobs need an offspring law");
                }
                if self.p.is_some() || self.window.is_some() || self.vertex_cap.is_some() || self.pc.is_some() {
                    return invalid("p, window, vertex_cap and pc apply to lrp jobs only");
                }
                let alpha = kernel.alpha().value();
                for &r in &self.radii {
                    self.cap.unwrap_or_default().cap(r, alpha)?;
                }
            }
            Model::Lrp => {
                if self.offspring.is_some() || self.cap.is_some() {
                    return invalid("offspring and cap apply to brw jobs only");
                }
                let window = self.lrp_window();
                let r_max = *self.radii.last().expect("non-empty");
                if 4 * r_max > window {
                    return Err(crate::Error::WindowTooSmall(format!("max radius {r_max} exceeds window / 4 = {}", window as f64 / 4.0)));
                }
                match self.p {
                    None => return invalid("lrp jobs need p (a number or \"auto-pc\")"),
                    Some(Intensity::Value(p)) => {
                        PercolationConfig::new(kernel.clone(), p, window)?;
                    }
                    Some(Intensity::Auto(_)) => {
                        let pc = self.pc.clone().unwrap_or_default();
                        if pc.n_grid.len() < 3 || pc.samples == 0 {
                            return invalid("pc search needs >= 3 grid sizes and >= 1 sample");
                        }
                    }
                }
                if self.vertex_cap == Some(0) {
                    return invalid("vertex_cap must be >= 1");
                }
            }
        }
        Ok(kernel)
    }

    pub fn lrp_window(&self) -> i64 {
        self.window.unwrap_or_else(|| 4 * self.radii.last().copied().unwrap_or(1).max(1))
    }
}

/// Runs a validated job; `workers` overrides the configured worker count.
pub fn run_job(job: &JobConfig, workers: Option<usize>) -> Result<JobOutput> {
    let kernel = job.validate()?;
    let workers = resolve_workers(workers.or(job.workers))?;
    match job.model {
        Model::Brw => {
            let off = job.offspring.as_ref().expect("validated");
            let table = estimate_gamma_brw(&BrwGammaJob {
                off,
                kernel: &kernel,
                radii: &job.radii,
                samples: job.samples,
                cap_policy: job.cap.unwrap_or_default(),
                seed: job.seed,
                workers,
            })?;
            Ok(JobOutput { table, p: None, pc: None, workers })
        }
        Model::Lrp => {
            let window = job.lrp_window();
            let (p, pc) = match job.p.expect("validated") {
                Intensity::Value(p) => (p, None),
                Intensity::Auto(_) => {
                    let s = job.pc.clone().unwrap_or_default();
                    let est = estimate_pc(
                        &kernel,
                        &PcJob {
                            window,
                            n_grid: s.n_grid,
                            samples: s.samples,
                            seed: job.seed,
                            workers,
                            bisection_steps: s.bisection_steps,
                            bracket: s.bracket,
                        },
                    )?;
                    (est.p_c, Some(est))
                }
            };
            let cfg = PercolationConfig::new(kernel, p, window)?;
            let table = estimate_gamma_lrp(&LrpGammaJob {
                cfg: &cfg,
                radii: &job.radii,
                samples: job.samples,
                vertex_cap: job.vertex_cap.unwrap_or(DEFAULT_VERTEX_CAP),
                seed: job.seed,
                workers,
            })?;
            Ok(JobOutput { table, p: Some(p), pc, workers })
        }
    }
}
