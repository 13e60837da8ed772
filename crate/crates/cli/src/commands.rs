//! One function per subcommand, each returning a [`Report`].

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thermocap::capacity::{corollary1_upper, one_shot_capacity_lower, random_codebook_experiment, theorem1_upper, TIE};
use thermocap::channels::ChannelChoi;
use thermocap::localtherm::{fef, kappa_star, theorem5_demo, Theorem5Report};
use thermocap::monotones::{gamma_quantity, preservability_bracket, BoundReport, PreservabilityParams};
use thermocap::quantum::{check_energy_subspace_condition, DensityMatrix, ThermalContext};
use thermocap::resources::{is_free_operation, ResourceSpec};
use thermocap::thermo::{build_collision_model, channel_bath_size, default_time_grid, min_bath_size_state, epsilon_thermalizes, evolve_many};
use thermocap::tolerance::Tolerances;
use thermocap::Error;

use crate::config::*;
use crate::output::{json_num, kind, num, report_cells, Report, REPORT_COLUMNS};

/// Slack allowed when a lower bound is compared with an upper bound.
pub const CONSISTENCY_SLACK: f64 = 1e-6;
/// Allowed deviation between the measured and closed-form success probability.
pub const SUCCESS_TOL: f64 = 1e-12;
/// Allowed drift of the thermal product under the collision dynamics.
pub const STATIONARY_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct Check {
    lower: String,
    upper: String,
    margin: f64,
    holds: bool,
}

struct BoundsOutcome {
    reports: Vec<BoundReport>,
    checks: Vec<Check>,
    notes: Vec<String>,
    d_in: usize,
    d_out: usize,
    resource: &'static str,
}

fn require_free(spec: &ResourceSpec, n: &ChannelChoi, tol: &Tolerances) -> CliResult<()> {
    let v = is_free_operation(spec, n, tol.free)?;
    if !v.holds {
        return Err(Error::Precondition(format!("channel is not a free {} operation (violation {:.3e})", spec.name(), v.worst)).into());
    }
    Ok(())
}

fn compute_bounds(cfg: &BoundsConfig, seed: u64, tol: &Tolerances) -> CliResult<BoundsOutcome> {
    let n = cfg.channel.build()?;
    let thermal = cfg.thermal.as_ref().map(ThermalInput::build).transpose()?;
    let spec = cfg.spec.build(thermal.as_ref())?;
    require_free(&spec, &n, tol)?;
    if !(cfg.epsilon >= 0.0 && cfg.delta >= 0.0 && cfg.epsilon + cfg.delta < 1.0) {
        return Err(CliError::config(format!("need epsilon, delta >= 0 and epsilon + delta < 1 (got {}, {})", cfg.epsilon, cfg.delta)));
    }
    let m_max = cfg.m_max.unwrap_or(((n.d_out as f64) / (1.0 - cfg.epsilon) + TIE).floor() as usize).max(1);
    let capacity = one_shot_capacity_lower(&n, cfg.epsilon, m_max, cfg.restarts, seed)?;
    let params = PreservabilityParams { seed, ..Default::default() };
    let bracket = preservability_bracket(&spec, &n, &params)?;
    let gamma = gamma_quantity(&spec, &n, cfg.kappa, &params)?;
    let t1 = theorem1_upper(&spec, &n, cfg.epsilon, cfg.delta, cfg.kappa, seed)?;
    let mut notes = vec![];
    let ctx: Option<ThermalContext> = match &spec {
        ResourceSpec::Athermality { ctx } => Some(ctx.clone()),
        _ => thermal,
    };
    let corollary = match ctx {
        Some(ctx) => match corollary1_upper(&n, &ctx, &spec, cfg.epsilon, cfg.kappa) {
            Ok(r) => Some(r),
            Err(e @ (Error::Precondition(_) | Error::Dimension(_))) => {
                notes.push(format!("corollary1_upper skipped: {e}"));
                None
            }
            Err(e) => return Err(e.into()),
        },
        None => {
            notes.push("corollary1_upper skipped: no thermal state given".into());
            None
        }
    };
    let mut checks = vec![];
    let mut check = |lo: &BoundReport, hi: &BoundReport| {
        let margin = hi.value - lo.value;
        checks.push(Check { lower: lo.name.clone(), upper: hi.name.clone(), margin, holds: margin >= -CONSISTENCY_SLACK });
    };
    let p_lo = bracket.lower.clone().renamed("preservability_lower");
    let p_hi = bracket.upper.clone().renamed("preservability_upper");
    check(&capacity, &t1);
    if let Some(c) = &corollary {
        check(&capacity, c);
    }
    check(&p_lo, &p_hi);
    let mut reports = vec![capacity, p_lo, p_hi, gamma, t1];
    reports.extend(corollary);
    Ok(BoundsOutcome { reports, checks, notes, d_in: n.d_in, d_out: n.d_out, resource: spec.name() })
}

pub fn bounds(cfg: &BoundsConfig, seed: u64, tol: &Tolerances) -> CliResult<Report> {
    let o = compute_bounds(cfg, seed, tol)?;
    let holds = o.checks.iter().all(|c| c.holds);
    let worst = o.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let body = json!({
        "channel": { "d_in": o.d_in, "d_out": o.d_out },
        "resource": o.resource,
        "reports": o.reports,
        "consistency": { "holds": holds, "worst_margin": json_num(worst), "checks": o.checks },
        "notes": o.notes,
    });
    let mut r = Report::new(body, &REPORT_COLUMNS);
    for b in &o.reports {
        r.row(report_cells(b));
    }
    let verdict = if holds { "pass" } else { "violation" };
    r.row(vec!["consistency".into(), num(worst), "exact".into(), verdict.into(), format!("{CONSISTENCY_SLACK:e}")]);
    for c in &o.checks {
        r.notes.push(format!("{} <= {} : margin {} {}", c.lower, c.upper, num(c.margin), if c.holds { "ok" } else { "VIOLATED" }));
    }
    r.notes.extend(o.notes.iter().cloned());
    r.notes.push(format!("consistency: {verdict}"));
    r.pass = holds;
    Ok(r)
}

#[derive(Serialize)]
struct ThermoRow {
    n: usize,
    #[serde(serialize_with = "ser_num")]
    t: f64,
    residual: f64,
    thermalized: bool,
}

fn ser_num<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    json_num(*v).serialize(s)
}

pub fn thermo(cfg: &ThermoConfig, seed: u64) -> CliResult<Report> {
    let h = cfg.hamiltonian.build()?;
    let ctx = ThermalContext::new(h.clone(), cfg.beta)?;
    let d = ctx.dim();
    let style = cfg.style.build()?;
    let rho = match &cfg.state {
        Some(s) => s.build()?,
        None => DensityMatrix::basis(d, 0),
    };
    if rho.dim() != d {
        return Err(CliError::config(format!("state has dimension {}, Hamiltonian {d}", rho.dim())));
    }
    if cfg.n_max == 0 {
        return Err(CliError::config("n_max must be at least 1"));
    }
    let mut times = vec![0.0];
    times.extend(default_time_grid(cfg.rate));
    times.push(f64::INFINITY);
    let per_n: Vec<CliResult<(Vec<ThermoRow>, f64)>> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| {
            let model = build_collision_model(&h, n, style, cfg.rate)?;
            let input = if n == 1 { rho.clone() } else { rho.tensor(&ctx.gamma_power(n - 1)) };
            let mut rows = vec![];
            for (t, s) in times.iter().zip(evolve_many(&model, &input, &times)?) {
                let c = epsilon_thermalizes(&s, &ctx, n, cfg.epsilon)?;
                rows.push(ThermoRow { n, t: *t, residual: c.residual, thermalized: c.holds });
            }
            let g = ctx.gamma_power(n);
            let drift = evolve_many(&model, &g, &times)?.iter().map(|s| s.mat.max_abs_diff(&g.mat)).fold(0.0, f64::max);
            Ok((rows, drift))
        })
        .collect();
    let mut rows = vec![];
    let mut drift = 0.0f64;
    for p in per_n {
        let (r, dr) = p?;
        rows.extend(r);
        drift = drift.max(dr);
    }
    let summary = min_bath_size_state(&rho, &ctx, cfg.epsilon, cfg.n_max, &default_time_grid(cfg.rate))?;
    let subspace = check_energy_subspace_condition(&h, cfg.n_max)?;
    let channel_bath = match &cfg.channel {
        Some(c) => Some(channel_bath_size(&c.build()?, &ctx, cfg.epsilon, cfg.n_max, cfg.probes, seed)?),
        None => None,
    };
    let pass = drift <= STATIONARY_TOL;
    let body = json!({
        "rows": rows,
        "bath_size": summary,
        "stationary_drift": drift,
        "energy_subspace_condition": subspace.holds,
        "channel_bath": channel_bath,
    });
    let mut r = Report::new(body, &["n", "t", "residual", "residual_kind", "thermalized"]);
    for row in &rows {
        r.row(vec![row.n.to_string(), num(row.t), num(row.residual), "exact".into(), row.thermalized.to_string()]);
    }
    match (summary.n_star, summary.time, &summary.style) {
        (Some(n), Some(t), Some(s)) => r.notes.push(format!("n* = {n} at t = {} ({s}, {})", num(t), summary.kind)),
        _ => r.notes.push(format!("not thermalized within n_max = {} (best residual {})", cfg.n_max, num(summary.residual))),
    }
    if let Some(b) = &channel_bath {
        let bs = b.bath_size.map_or("none".to_string(), |x| x.to_string());
        r.notes.push(format!("channel bath size {bs} ({})", b.kind));
    }
    if !subspace.holds {
        r.notes.push("warning: energy subspace condition fails".into());
    }
    r.notes.push(format!("stationary drift {} ({})", num(drift), if pass { "ok" } else { "VIOLATED" }));
    r.pass = pass;
    Ok(r)
}

fn localtherm_run(cfg: &LocalthermConfig, kappa: Option<f64>) -> CliResult<Theorem5Report> {
    let setup = cfg.setup_spec().build()?;
    Ok(theorem5_demo(&setup, kappa, cfg.epsilon)?)
}

const LOCALTHERM_COLUMNS: [&str; 16] = [
    "d",
    "kappa",
    "kappa_star",
    "success",
    "success_kind",
    "analytic",
    "threshold",
    "epsilon",
    "capacity_lb",
    "capacity_lb_kind",
    "fef",
    "fef_kind",
    "entangled",
    "min_pt_eigenvalue",
    "marginal_deviation",
    "marginals_hold",
];

fn localtherm_cells(t: &Theorem5Report) -> Vec<String> {
    vec![
        t.d.to_string(),
        num(t.kappa),
        num(t.kappa_star),
        num(t.success),
        "exact".into(),
        num(t.analytic),
        num(t.threshold),
        num(t.epsilon),
        num(t.capacity_lower.value),
        kind(t.capacity_lower.kind),
        num(t.fef.value),
        "lower".into(),
        t.entangled.to_string(),
        num(t.min_pt_eigenvalue),
        format!("{:e}", t.marginals.max_deviation),
        t.marginals.holds.to_string(),
    ]
}

fn localtherm_ok(t: &Theorem5Report) -> bool {
    t.marginals.holds && (t.success - t.analytic).abs() <= SUCCESS_TOL
}

pub fn localtherm(cfg: &LocalthermConfig) -> CliResult<Report> {
    let t = localtherm_run(cfg, cfg.kappa)?;
    let mut r = Report::new(&t, &LOCALTHERM_COLUMNS);
    r.row(localtherm_cells(&t));
    r.pass = localtherm_ok(&t);
    r.notes.push(format!("success {} vs closed form {}", num(t.success), num(t.analytic)));
    r.notes.push(format!("capacity >= {} bits for epsilon >= {}", num(2.0 * (t.d as f64).log2()), num(t.threshold)));
    Ok(r)
}

pub fn asym(cfg: &AsymConfig, seed: u64) -> CliResult<Report> {
    let rho = cfg.state.build()?;
    let g = cfg.group.build()?;
    let e = random_codebook_experiment(&rho, &g, cfg.m, cfg.trials, cfg.kappa, seed)?;
    let mut r = Report::new(&e, &["m", "trials", "kappa", "mean", "mean_kind", "stderr", "d_s", "rhs", "passes"]);
    r.row(vec![
        e.m.to_string(),
        e.trials.to_string(),
        num(e.kappa),
        num(e.mean),
        "heuristic".into(),
        num(e.stderr),
        num(e.d_s),
        num(e.rhs),
        e.passes.to_string(),
    ]);
    r.pass = e.passes;
    Ok(r)
}

pub fn fef_cmd(cfg: &FefConfig, seed: u64) -> CliResult<Report> {
    let rho = cfg.state.build()?;
    let f = fef(&rho, cfg.restarts, seed)?;
    let d = (rho.dim() as f64).sqrt().round() as usize;
    let witness = f.value > 1.0 / d as f64 + thermocap::localtherm::FEF_MARGIN;
    let body = json!({ "d": d, "fef": f, "kind": "lower", "witness": witness });
    let mut r = Report::new(body, &["d", "fef", "fef_kind", "restarts", "converged", "witness"]);
    r.row(vec![d.to_string(), num(f.value), "lower".into(), f.restarts.to_string(), f.converged.to_string(), witness.to_string()]);
    Ok(r)
}

fn default_kappa_grid(ks: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..).map(|k| 0.2 * k as f64).take_while(|x| *x < ks - 1e-12).collect();
    v.push(ks);
    v
}

pub fn sweep(cfg: &SweepConfig, seed: u64, tol: &Tolerances) -> CliResult<Report> {
    match cfg.parameter {
        SweepParameter::Kappa => {
            let lt = cfg.localtherm.clone().ok_or_else(|| CliError::config("a kappa sweep needs a \"localtherm\" object"))?;
            let setup = lt.setup_spec().build()?;
            let ks = kappa_star(&setup.ctx_a, &setup.ctx_b)?;
            let values = cfg.values.clone().unwrap_or_else(|| default_kappa_grid(ks));
            let runs: Vec<CliResult<Theorem5Report>> = values.par_iter().map(|k| localtherm_run(&lt, Some(*k))).collect();
            let runs: Vec<Theorem5Report> = runs.into_iter().collect::<CliResult<_>>()?;
            let mut r = Report::new(json!({ "parameter": "kappa", "rows": runs }), &LOCALTHERM_COLUMNS);
            for t in &runs {
                r.row(localtherm_cells(t));
            }
            r.pass = runs.iter().all(localtherm_ok);
            Ok(r)
        }
        SweepParameter::Epsilon | SweepParameter::Delta => {
            let base = cfg.bounds.clone().ok_or_else(|| CliError::config("epsilon and delta sweeps need a \"bounds\" object"))?;
            let is_eps = cfg.parameter == SweepParameter::Epsilon;
            let values = cfg.values.clone().unwrap_or_else(|| if is_eps { vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5] } else { vec![0.0, 0.05, 0.1, 0.2] });
            let runs: Vec<CliResult<BoundsOutcome>> = values
                .par_iter()
                .map(|v| {
                    let mut c = base.clone();
                    if is_eps {
                        c.epsilon = *v;
                    } else {
                        c.delta = *v;
                    }
                    compute_bounds(&c, seed, tol)
                })
                .collect();
            let runs: Vec<BoundsOutcome> = runs.into_iter().collect::<CliResult<_>>()?;
            let name = if is_eps { "epsilon" } else { "delta" };
            let columns = [name, "capacity_lower", "capacity_lower_kind", "theorem1_upper", "theorem1_upper_kind", "consistent"];
            let mut rows_json: Vec<Value> = vec![];
            let mut r = Report::new(Value::Null, &columns);
            for (v, o) in values.iter().zip(&runs) {
                let get = |k: &str| o.reports.iter().find(|b| b.name == k).expect("report present");
                let (cap, t1) = (get("capacity_lower"), get("theorem1_upper"));
                let ok = o.checks.iter().all(|c| c.holds);
                r.row(vec![num(*v), num(cap.value), kind(cap.kind), num(t1.value), kind(t1.kind), ok.to_string()]);
                rows_json.push(json!({ name: v, "capacity_lower": cap, "theorem1_upper": t1, "consistent": ok }));
            }
            r.body = json!({ "parameter": name, "rows": rows_json });
            r.pass = runs.iter().all(|o| o.checks.iter().all(|c| c.holds));
            Ok(r)
        }
    }
}
