use std::path::Path;
use std::time::Instant;

use longarm_core::analysis::{beta_constraints_hold, exponents, loglog_fit, Model, MIN_FIT_HITS};
use longarm_core::exact::{bk_check, enumerate, green_function_with, renewal_residual, EventSpec, TinyGraph, WindowOperator};
use longarm_core::gw::{survival_tail, total_progeny_pmf};
use longarm_core::job::{run_job, JobConfig, PcSettings};
use longarm_core::lrp::{estimate_pc, PcJob};
use longarm_core::parallel::resolve_workers;
use longarm_core::{Error, Kernel, KernelSpec, OffspringDist, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::output::{emit, json_body};
use crate::{Command, FitArgs, GreenArgs, InputArgs, JobArgs, KernelArgs, PcArgs, ProgenyArgs};

fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::BrwGamma(a) => gamma(Model::Brw, a),
        Command::LrpGamma(a) => gamma(Model::Lrp, a),
        Command::EstimatePc(a) => pc(a),
        Command::Green(a) => green(a),
        Command::Progeny(a) => progeny(a),
        Command::Enumerate(a) => enumerate_cmd(a),
        Command::BkCheck(a) => bk_cmd(a),
        Command::Exponents { alpha, run } => {
            let t0 = Instant::now();
            let e = exponents(parse_alpha(&alpha)?)?;
            emit("exponents", &json_body(&e)?, Map::new(), &run, t0, None)
        }
        Command::CheckBeta { alpha, beta, run } => {
            let t0 = Instant::now();
            let e = exponents(parse_alpha(&alpha)?)?;
            let beta = beta.unwrap_or(0.5 * (e.beta_lo + e.beta_hi));
            let report = beta_constraints_hold(e.alpha, beta)?;
            let body = json!({
                "interval": [e.beta_lo, e.beta_hi],
                "nonempty": e.beta_lo < e.beta_hi,
                "report": report,
            });
            emit("check-beta", &json_body(&body)?, Map::new(), &run, t0, None)
        }
        Command::Fit(a) => fit(a),
    }
}

fn parse_alpha(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("infinite") || s.eq_ignore_ascii_case("inf") {
        return Ok(f64::INFINITY);
    }
    s.parse().or_else(|_| bad(format!("alpha must be a number or \"infinite\" (got {s:?})")))
}

fn alpha_json(s: &str) -> Result<Value> {
    let a = parse_alpha(s)?;
    Ok(if a.is_infinite() { json!("infinite") } else { json!(a) })
}

fn kernel_json(k: &KernelArgs) -> Result<Option<Value>> {
    if k.d.is_none() && k.alpha.is_none() && k.lambda.is_none() && k.shape.is_none() && k.kappa.is_none() && k.tab_radius.is_none() {
        return Ok(None);
    }
    let Some(d) = k.d else {
        return bad("--d is required with kernel flags");
    };
    let shape = k.shape.as_deref().unwrap_or("canonical");
    let shape_json = match shape {
        "canonical" | "bounded-uniform" => json!(shape),
        "exponential" => match k.kappa {
            Some(kappa) => json!({ "exponential": { "kappa": kappa } }),
            None => return bad("--shape exponential needs --kappa"),
        },
        other => return bad(format!("unknown shape {other:?} (custom tables need --config)")),
    };
    let alpha = match (&k.alpha, shape) {
        (Some(a), _) => alpha_json(a)?,
        (None, "canonical") => return bad("--alpha is required for the canonical shape"),
        (None, _) => json!("infinite"),
    };
    let mut v = json!({ "d": d, "alpha": alpha, "lambda": k.lambda.unwrap_or(1.0), "shape": shape_json });
    if let Some(t) = k.tab_radius {
        v["tab_radius"] = json!(t);
    }
    Ok(Some(v))
}

fn kernel_from_flags(k: &KernelArgs) -> Result<Kernel> {
    match kernel_json(k)? {
        Some(v) => {
            let spec: KernelSpec = serde_json::from_value(v)?;
            Kernel::build(&spec)
        }
        None => bad("kernel flags --d and --alpha are required"),
    }
}

fn offspring_json(s: &str) -> Result<Value> {
    match s {
        "binary" | "geometric-half" => Ok(json!(s)),
        _ => {
            let probs: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
            match probs {
                Ok(p) => Ok(json!(p)),
                Err(_) => bad(format!("offspring must be binary, geometric-half or a probability list (got {s:?})")),
            }
        }
    }
}

/// Flags give the base object; keys present in the config file replace it.
fn merge_config(mut base: Map<String, Value>, config: Option<&Path>) -> Result<Value> {
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)?;
        match serde_json::from_str::<Value>(&text)? {
            Value::Object(file) => base.extend(file),
            _ => return bad(format!("{} must hold a JSON object", path.display())),
        }
    }
    Ok(Value::Object(base))
}

fn gamma(model: Model, a: JobArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut base = Map::new();
    base.insert("model".into(), serde_json::to_value(model)?);
    if let Some(k) = kernel_json(&a.kernel)? {
        base.insert("kernel".into(), k);
    }
    if let Some(o) = &a.offspring {
        base.insert("offspring".into(), offspring_json(o)?);
    }
    if let Some(p) = &a.p {
        let v = match p.as_str() {
            "auto-pc" => json!("auto-pc"),
            s => match s.parse::<f64>() {
                Ok(x) => json!(x),
                Err(_) => return bad(format!("p must be a number or auto-pc (got {s:?})")),
            },
        };
        base.insert("p".into(), v);
    }
    let opt = |base: &mut Map<String, Value>, key: &str, v: Option<Value>| {
        if let Some(v) = v {
            base.insert(key.into(), v);
        }
    };
    opt(&mut base, "radii", a.radii.as_ref().map(|r| json!(r)));
    opt(&mut base, "samples", a.samples.map(|x| json!(x)));
    opt(&mut base, "window", a.window.map(|x| json!(x)));
    opt(&mut base, "seed", a.seed.map(|x| json!(x)));
    opt(&mut base, "vertex_cap", a.vertex_cap.map(|x| json!(x)));
    opt(&mut base, "workers", a.run.workers.map(|x| json!(x)));
    opt(&mut base, "cap", a.cap_k.map(|k| json!({ "scaled": { "k": k, "rho": null } })));
    opt(&mut base, "cap", a.cap_fixed.map(|cap| json!({ "fixed": { "cap": cap } })));
    let job: JobConfig = serde_json::from_value(merge_config(base, a.config.as_deref())?)?;
    if job.model != model {
        return bad(format!("config model {:?} does not match the subcommand", job.model));
    }
    let out = run_job(&job, a.run.workers)?;
    let diagnostics: Vec<Value> = out
        .table
        .rows
        .iter()
        .map(|r| {
            json!({
                "r": r.r,
                "cap": r.cap,
                "cap_tail_bound": r.cap_tail_bound,
                "window": r.window,
                "unresolved": r.unresolved,
                "unresolved_fraction": r.unresolved_fraction(),
            })
        })
        .collect();
    let mut meta = Map::new();
    meta.insert("config".into(), serde_json::to_value(&job)?);
    meta.insert("workers".into(), out.workers.into());
    meta.insert("p".into(), serde_json::to_value(out.p)?);
    meta.insert("pc".into(), serde_json::to_value(&out.pc)?);
    meta.insert("fit".into(), serde_json::to_value(out.table.fit(MIN_FIT_HITS).ok())?);
    meta.insert("diagnostics".into(), diagnostics.into());
    let name = match model {
        Model::Brw => "brw-gamma",
        Model::Lrp => "lrp-gamma",
    };
    emit(name, &out.table.to_csv(), meta, &a.run, t0, job.output.as_deref())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PcConfig {
    kernel: KernelSpec,
    window: i64,
    seed: u64,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    pc: PcSettings,
}

fn pc(a: PcArgs) -> Result<()> {
    let t0 = Instant::now();
    let mut base = Map::new();
    if let Some(k) = kernel_json(&a.kernel)? {
        base.insert("kernel".into(), k);
    }
    if let Some(w) = a.window {
        base.insert("window".into(), json!(w));
    }
    if let Some(s) = a.seed {
        base.insert("seed".into(), json!(s));
    }
    let mut settings = PcSettings::default();
    if let Some(g) = &a.n_grid {
        settings.n_grid = g.clone();
    }
    if let Some(s) = a.samples {
        settings.samples = s;
    }
    if let Some(s) = a.bisection_steps {
        settings.bisection_steps = s;
    }
    if let Some(b) = &a.bracket {
        match b.as_slice() {
            [lo, hi] => settings.bracket = Some((*lo, *hi)),
            _ => return bad("--bracket takes two values lo,hi"),
        }
    }
    base.insert("pc".into(), serde_json::to_value(&settings)?);
    let cfg: PcConfig = serde_json::from_value(merge_config(base, a.config.as_deref())?)?;
    cfg.kernel.validate()?;
    let kernel = Kernel::build(&cfg.kernel)?;
    if cfg.pc.n_grid.len() < 3 || cfg.pc.samples == 0 {
        return bad("pc search needs >= 3 grid sizes and >= 1 sample");
    }
    let workers = resolve_workers(a.run.workers.or(cfg.workers))?;
    let est = estimate_pc(
        &kernel,
        &PcJob {
            window: cfg.window,
            n_grid: cfg.pc.n_grid.clone(),
            samples: cfg.pc.samples,
            seed: cfg.seed,
            workers,
            bisection_steps: cfg.pc.bisection_steps,
            bracket: cfg.pc.bracket,
        },
    )?;
    let mut meta = Map::new();
    meta.insert("config".into(), serde_json::to_value(&cfg)?);
    meta.insert("workers".into(), workers.into());
    emit("estimate-pc", &json_body(&est)?, meta, &a.run, t0, cfg.output.as_deref())
}

fn green(a: GreenArgs) -> Result<()> {
    let t0 = Instant::now();
    let kernel = kernel_from_flags(&a.kernel)?;
    if a.steps < 1 || a.radius < 1 {
        return bad("green needs --steps >= 1 and --radius >= 1");
    }
    if kernel.alpha().two_wedge() >= kernel.dim() as f64 {
        return Err(Error::RecurrentRegime { d: kernel.dim(), alpha: kernel.alpha().value() });
    }
    let op = WindowOperator::new(&kernel, a.radius)?;
    let g = green_function_with(&op, a.steps)?;
    let residual = renewal_residual(&op, &g.field);
    let mut body = String::from("x,G\n");
    for (x, v) in g.field.axis_profile() {
        body.push_str(&format!("{x},{v}\n"));
    }
    let mut meta = Map::new();
    meta.insert("kernel".into(), serde_json::to_value(kernel.spec())?);
    meta.insert("steps".into(), a.steps.into());
    meta.insert("radius".into(), a.radius.into());
    meta.insert("next_term_mass".into(), g.next_term_mass.into());
    meta.insert("next_term_sup".into(), g.next_term_sup.into());
    meta.insert("origin_tail_estimate".into(), serde_json::to_value(g.origin_tail_estimate)?);
    meta.insert("renewal_residual".into(), residual.into());
    meta.insert("mass_outside".into(), g.field.mass_outside().into());
    emit("green", &body, meta, &a.run, t0, None)
}

fn progeny(a: ProgenyArgs) -> Result<()> {
    let t0 = Instant::now();
    let off: OffspringDist = serde_json::from_value(offspring_json(&a.offspring)?)?;
    let pmf = total_progeny_pmf(&off, a.n_max)?;
    let tail = survival_tail(&pmf);
    let mut body = String::from("n,pmf,tail\n");
    for n in 1..pmf.len() {
        body.push_str(&format!("{n},{},{}\n", pmf[n], tail[n]));
    }
    let mut meta = Map::new();
    meta.insert("offspring".into(), serde_json::to_value(&off)?);
    meta.insert("sigma_sq".into(), off.sigma_sq().into());
    meta.insert("n_max".into(), a.n_max.into());
    emit("progeny", &body, meta, &a.run, t0, None)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnumerateInput {
    graph: TinyGraph,
    event: EventSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BkInput {
    graph: TinyGraph,
    a: EventSpec,
    b: EventSpec,
}

fn enumerate_cmd(a: InputArgs) -> Result<()> {
    let t0 = Instant::now();
    let input: EnumerateInput = serde_json::from_str(&std::fs::read_to_string(&a.input)?)?;
    let p = enumerate(&input.graph, &input.event)?;
    emit("enumerate", &json_body(&json!({ "probability": p }))?, Map::new(), &a.run, t0, None)
}

fn bk_cmd(a: InputArgs) -> Result<()> {
    let t0 = Instant::now();
    let input: BkInput = serde_json::from_str(&std::fs::read_to_string(&a.input)?)?;
    let r = bk_check(&input.graph, &input.a, &input.b)?;
    let body = json!({ "disjoint": r.disjoint, "product": r.product, "holds": r.disjoint <= r.product + 1e-12 });
    emit("bk-check", &json_body(&body)?, Map::new(), &a.run, t0, None)
}

fn fit(a: FitArgs) -> Result<()> {
    let t0 = Instant::now();
    let text = std::fs::read_to_string(&a.input)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        return bad(format!("{} is empty", a.input.display()));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| cols.iter().position(|c| *c == name);
    let Some(ir) = find("r") else {
        return bad("fit input needs an `r` column");
    };
    let Some(iv) = find(&a.column) else {
        return bad(format!("fit input has no column {:?}", a.column));
    };
    let (ihits, itrials, ierr) = (find("hits"), find("trials"), find("stderr"));
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.parse::<f64>().ok())
                .map_or_else(|| bad(format!("row {}: column {i} is not a number", lineno + 2)), Ok)
        };
        let (r, v) = (num(ir)?, num(iv)?);
        if let Some(ih) = ihits {
            if num(ih)? < a.min_hits as f64 {
                continue;
            }
        }
        let sigma = match (ierr, itrials) {
            (Some(ie), _) => num(ie)?,
            (None, Some(it)) => (v * (1.0 - v) / num(it)?).sqrt(),
            _ => 0.0,
        };
        points.push((r, v, sigma));
    }
    let result = loglog_fit(&points)?;
    emit("fit", &json_body(&result)?, Map::new(), &a.run, t0, None)
}
