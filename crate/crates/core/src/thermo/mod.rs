//! Collision-model thermalization: random pair collisions between identical copies, bath sizes
//! needed to thermalize states and channel outputs, and the capacity consistency check.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::one_shot_capacity_lower;
use crate::channels::ChannelChoi;
use crate::error::{Error, Result};
use crate::kernel::{c, herm_eig, permutation_index_map, trace_norm, ComplexMatrix};
use crate::monotones::preservability::probe_states;
use crate::monotones::{preservability_bracket, preservability_upper, BoundKind, BoundReport, PreservabilityParams};
use crate::quantum::random::{child_rng, haar_ket};
use crate::quantum::{check_energy_subspace_condition, DensityMatrix, Hamiltonian, ThermalContext};
use crate::resources::{is_free_operation, is_resource_annihilating, ResourceSpec};
use crate::tolerance::DEFAULT;

/// Largest total dimension a model may act on.
pub const MAX_DIM: usize = 64;

/// Rounding allowance on trace-norm residuals.
pub const RESIDUAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "style", rename_all = "kebab-case")]
pub enum CollisionStyle {
    /// Pair collisions are full swaps.
    FullSwap,
    /// Pair collisions are `exp(-i theta SWAP)`.
    PartialSwap { theta: f64 },
}

impl CollisionStyle {
    pub fn label(&self) -> String {
        match self {
            Self::FullSwap => "full-swap".into(),
            Self::PartialSwap { theta } => format!("partial-swap({theta:.4})"),
        }
    }
}

/// `d/dt rho = sum_k rate_k (U_k rho U_k^dagger - rho)` on `n` copies of a `d`-level system,
/// with one generator per pair of copies.
#[derive(Debug, Clone)]
pub struct CollisionModel {
    pub d: usize,
    pub n: usize,
    pub style: CollisionStyle,
    pub unitaries: Vec<ComplexMatrix>,
    pub rates: Vec<f64>,
    /// Basis-index map of the swap behind each generator.
    swaps: Vec<Vec<usize>>,
}

fn swap_perm(n: usize, i: usize, j: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.swap(i, j);
    p
}

pub fn build_collision_model(h: &Hamiltonian, n: usize, style: CollisionStyle, rate: f64) -> Result<CollisionModel> {
    let d = h.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one copy".into()));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("rate = {rate} must be positive")));
    }
    let total = d.checked_pow(n as u32).filter(|&t| t <= MAX_DIM);
    let Some(total) = total else {
        return Err(Error::Guard(format!("{d}^{n} exceeds the model dimension limit {MAX_DIM}")));
    };
    let dims = vec![d; n];
    let h_total = h.total(n);
    let mut unitaries = vec![];
    let mut swaps = vec![];
    for i in 0..n {
        for j in i + 1..n {
            let map = permutation_index_map(&dims, &swap_perm(n, i, j));
            let s = ComplexMatrix::from_fn(total, total, |a, b| if map[a] == b { c(1.0, 0.0) } else { c(0.0, 0.0) });
            let u = match style {
                CollisionStyle::FullSwap => s,
                CollisionStyle::PartialSwap { theta } => {
                    &ComplexMatrix::identity(total).scale_real(theta.cos()) + &s.scale(c(0.0, -theta.sin()))
                }
            };
            let defect = u.unitarity_defect();
            if defect > 1e-9 {
                return Err(Error::NotUnitary(defect));
            }
            let comm = (&(&u * &h_total) - &(&h_total * &u)).max_abs();
            if comm > 1e-8 * h_total.max_abs().max(1.0) {
                return Err(Error::InvalidChannel(format!("collision does not preserve energy (commutator {comm:.3e})")));
            }
            unitaries.push(u);
            swaps.push(map);
        }
    }
    let rates = vec![rate; unitaries.len()];
    Ok(CollisionModel { d, n, style, unitaries, rates, swaps })
}

impl CollisionModel {
    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    /// `sum_k (rate_k / total) U_k x U_k^dagger`, using the swap structure of the generators.
    fn jump(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let dim = x.rows();
        let total = self.total_rate();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for (map, rate) in self.swaps.iter().zip(&self.rates) {
            let w = rate / total;
            let sxs = ComplexMatrix::from_fn(dim, dim, |a, b| x[(map[a], map[b])]);
            match self.style {
                CollisionStyle::FullSwap => out.axpy(c(w, 0.0), &sxs),
                CollisionStyle::PartialSwap { theta } => {
                    let (co, si) = (theta.cos(), theta.sin());
                    let xs = ComplexMatrix::from_fn(dim, dim, |a, b| x[(a, map[b])]);
                    let sx = ComplexMatrix::from_fn(dim, dim, |a, b| x[(map[a], b)]);
                    out.axpy(c(w * co * co, 0.0), x);
                    out.axpy(c(w * si * si, 0.0), &sxs);
                    out.axpy(Complex64::new(0.0, w * co * si), &(&xs - &sx));
                }
            }
        }
        out
    }

    /// Whether the collisions mix the copies at all.
    fn mixes(&self) -> bool {
        !self.unitaries.is_empty() && !matches!(self.style, CollisionStyle::PartialSwap { theta } if theta.sin().abs() < 1e-12)
    }

    /// Long-time limit: the projection onto operators commuting with every copy permutation,
    /// i.e. the average over all `n!` permutations of the copies.
    fn stationary(&self, x: &ComplexMatrix) -> ComplexMatrix {
        if !self.mixes() {
            return x.clone();
        }
        let dims = vec![self.d; self.n];
        let perms = permutations(self.n);
        let dim = x.rows();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for p in &perms {
            let map = permutation_index_map(&dims, p);
            out += &ComplexMatrix::from_fn(dim, dim, |a, b| x[(map[a], map[b])]);
        }
        out.scale_real(1.0 / perms.len() as f64)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                rec(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = vec![];
    rec(&mut vec![], &mut vec![false; n], &mut out);
    out
}

/// States at each requested time (`f64::INFINITY` for the long-time limit). Finite times use
/// uniformization, `e^{tL} = sum_j Poisson(j; R t) J^j` with `R` the total rate and `J` the
/// jump channel; the powers `J^j rho` are shared across times.
pub fn evolve_many(model: &CollisionModel, rho: &DensityMatrix, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    let dim = model.dim();
    if rho.dim() != dim {
        return Err(Error::Dimension(format!("state has dimension {}, model {dim}", rho.dim())));
    }
    if let Some(t) = times.iter().find(|t| t.is_nan() || **t < 0.0) {
        return Err(Error::InvalidParameter(format!("time {t} must be >= 0")));
    }
    let rate = model.total_rate();
    let finite: Vec<f64> = times.iter().copied().filter(|t| t.is_finite()).collect();
    let x_max = finite.iter().fold(0.0f64, |a, t| a.max(rate * t));
    let mut sums: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(dim, dim); finite.len()];
    let mut mass = vec![0.0f64; finite.len()];
    let mut log_w: Vec<f64> = finite.iter().map(|t| -rate * t).collect();
    let mut power = rho.mat.clone();
    let j_max = if model.mixes() { (x_max + 12.0 * x_max.sqrt() + 40.0).ceil() as usize } else { 0 };
    for j in 0..=j_max {
        for (k, &t) in finite.iter().enumerate() {
            let x = rate * t;
            if j > 0 {
                log_w[k] += if x > 0.0 { x.ln() - (j as f64).ln() } else { f64::NEG_INFINITY };
            }
            let w = if j == 0 && x == 0.0 { 1.0 } else { log_w[k].exp() };
            if w > 0.0 {
                sums[k].axpy(c(w, 0.0), &power);
                mass[k] += w;
            }
        }
        if j < j_max {
            power = model.jump(&power);
        }
    }
    let mut out = Vec::with_capacity(times.len());
    let mut fi = 0;
    for &t in times {
        let m = if t.is_finite() {
            let m = if model.mixes() { sums[fi].scale_real(1.0 / mass[fi]) } else { rho.mat.clone() };
            fi += 1;
            m
        } else {
            model.stationary(&rho.mat)
        };
        out.push(DensityMatrix::trusted(rho.dims.clone(), m.hermitian_part()));
    }
    Ok(out)
}

pub fn evolve(model: &CollisionModel, rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    Ok(evolve_many(model, rho, &[t])?.remove(0))
}

/// 16 logarithmically spaced times over `[1e-2, 1e2] / rate`.
pub fn default_time_grid(rate: f64) -> Vec<f64> {
    (0..16).map(|k| 10f64.powf(-2.0 + 4.0 * k as f64 / 15.0) / rate).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalizationCheck {
    pub holds: bool,
    pub residual: f64,
}

/// `||state - gamma^{(x) n}||_1 <= epsilon`.
pub fn epsilon_thermalizes(state: &DensityMatrix, ctx: &ThermalContext, n: usize, epsilon: f64) -> Result<ThermalizationCheck> {
    let g = ctx.gamma_power(n);
    if g.dim() != state.dim() {
        return Err(Error::Dimension(format!("state has dimension {}, expected {}", state.dim(), g.dim())));
    }
    let residual = trace_norm(&(&state.mat - &g.mat));
    Ok(ThermalizationCheck { holds: residual <= epsilon + RESIDUAL_TOL, residual })
}

/// JSON numbers cannot be infinite; the long-time limit is written as `"inf"`.
mod opt_time {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "crate::monotones::report::extended_f64")] f64);

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Smallest number of copies (system plus bath) for which some tested protocol thermalizes;
/// an upper bound on the minimum over all collision models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSizeReport {
    pub n_star: Option<usize>,
    pub epsilon: f64,
    #[serde(with = "opt_time")]
    pub time: Option<f64>,
    pub style: Option<String>,
    /// Residual of the reported protocol, or the best residual at the largest `n` tried.
    pub residual: f64,
    pub kind: BoundKind,
}

fn styles() -> [CollisionStyle; 2] {
    [CollisionStyle::FullSwap, CollisionStyle::PartialSwap { theta: std::f64::consts::FRAC_PI_4 }]
}

fn bath_size(rho: &DensityMatrix, ctx: &ThermalContext, epsilon: f64, n_max: usize, t_grid: &[f64]) -> Result<BathSizeReport> {
    let d = ctx.dim();
    if rho.dim() != d {
        return Err(Error::Dimension(format!("state has dimension {}, thermal context {d}", rho.dim())));
    }
    if n_max == 0 || d.checked_pow(n_max as u32).map_or(true, |t| t > MAX_DIM) {
        return Err(Error::Guard(format!("n_max = {n_max} outside 1..=log_{d}({MAX_DIM})")));
    }
    let mut times = vec![0.0];
    times.extend(t_grid.iter().copied().filter(|t| t.is_finite() && *t > 0.0));
    times.push(f64::INFINITY);
    let mut best = f64::INFINITY;
    for n in 1..=n_max {
        let input = if n == 1 { rho.clone() } else { rho.tensor(&ctx.gamma_power(n - 1)) };
        let target = ctx.gamma_power(n);
        best = f64::INFINITY;
        for style in styles() {
            let model = build_collision_model(&ctx.hamiltonian, n, style, 1.0)?;
            let states = evolve_many(&model, &input, &times)?;
            for (t, s) in times.iter().zip(&states) {
                let r = trace_norm(&(&s.mat - &target.mat));
                best = best.min(r);
                if r <= epsilon + RESIDUAL_TOL {
                    return Ok(BathSizeReport {
                        n_star: Some(n),
                        epsilon,
                        time: Some(*t),
                        style: Some(style.label()),
                        residual: r,
                        kind: BoundKind::Upper,
                    });
                }
            }
            if n == 1 {
                break;
            }
        }
    }
    Ok(BathSizeReport { n_star: None, epsilon, time: None, style: None, residual: best, kind: BoundKind::Upper })
}

/// Smallest total copy number `n` for which `rho (x) gamma^{(x) n-1}` is brought within
/// `epsilon` of `gamma^{(x) n}` by a full- or partial-swap model at a grid time, `t = 0` or the
/// long-time limit.
pub fn min_bath_size_state(
    rho: &DensityMatrix,
    ctx: &ThermalContext,
    epsilon: f64,
    n_max: usize,
    t_grid: &[f64],
) -> Result<BathSizeReport> {
    let check = check_energy_subspace_condition(&ctx.hamiltonian, n_max.max(1))?;
    if !check.holds {
        log::warn!("energy subspace condition fails: {:?}", check.violation);
    }
    bath_size(rho, ctx, epsilon, n_max, t_grid)
}

/// Channel bath size `max_rho n*(n_ch(rho)) - 1` over probe inputs; `bath_size = None` when some
/// probe output was not thermalized within `n_max` copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelBathReport {
    pub bath_size: Option<usize>,
    pub epsilon: f64,
    pub probes: usize,
    /// Largest output distance `||n_ch(rho) - gamma||_1` among the probes.
    pub worst_distance: f64,
    pub kind: BoundKind,
}

/// Pure input maximizing `||n(psi) - gamma||_1`, by alternating the optimal sign operator and
/// the top eigenvector of its adjoint image.
fn farthest_input(n: &ChannelChoi, gamma: &DensityMatrix, start: Vec<Complex64>) -> Result<ComplexMatrix> {
    let mut psi = ComplexMatrix::outer(&start, &start);
    let mut best = -1.0;
    for _ in 0..30 {
        let diff = (&n.apply_op(&psi) - &gamma.mat).hermitian_part();
        let e = herm_eig(&diff)?;
        let sign = e.map(|x| if x >= 0.0 { 1.0 } else { -1.0 });
        let v = e.values.iter().map(|x| x.abs()).sum::<f64>();
        if v <= best + 1e-12 {
            break;
        }
        best = v;
        let a = herm_eig(&n.adjoint_apply(&sign).hermitian_part())?;
        let top = a.vector(n.d_in - 1);
        psi = ComplexMatrix::outer(&top, &top);
    }
    Ok(psi)
}

pub fn channel_bath_size(
    n_ch: &ChannelChoi,
    ctx: &ThermalContext,
    epsilon: f64,
    n_max: usize,
    probes: usize,
    seed: u64,
) -> Result<ChannelBathReport> {
    let d = ctx.dim();
    if n_ch.d_out != d {
        return Err(Error::Dimension(format!("channel output dimension {} differs from {d}", n_ch.d_out)));
    }
    let check = check_energy_subspace_condition(&ctx.hamiltonian, n_max.max(1))?;
    if !check.holds {
        log::warn!("energy subspace condition fails: {:?}", check.violation);
    }
    let mut inputs = probe_states(n_ch.d_in, probes, seed);
    for k in 0..probes {
        let start = haar_ket(n_ch.d_in, &mut child_rng(seed, 5000 + k as u64));
        inputs.push(farthest_input(n_ch, &ctx.gamma, start)?);
    }
    let grid = default_time_grid(1.0);
    let results: Vec<Result<(f64, BathSizeReport)>> = inputs
        .par_iter()
        .map(|x| {
            let out = DensityMatrix::trusted(vec![d], n_ch.apply_op(x).hermitian_part());
            let dist = trace_norm(&(&out.mat - &ctx.gamma.mat));
            Ok((dist, bath_size(&out, ctx, epsilon, n_max, &grid)?))
        })
        .collect();
    let mut worst = 0.0f64;
    let mut b: Option<usize> = Some(0);
    for r in results {
        let (dist, rep) = r?;
        worst = worst.max(dist);
        b = match (b, rep.n_star) {
            (Some(cur), Some(n)) => Some(cur.max(n - 1)),
            _ => None,
        };
    }
    Ok(ChannelBathReport { bath_size: b, epsilon, probes: inputs.len(), worst_distance: worst, kind: BoundKind::Heuristic })
}

/// Necessary condition `2^P <= B + 2 sqrt(epsilon) / p_min + 1` for the athermality
/// preservability of a Gibbs-preserving channel, checked with the lower bracket end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathPreservabilityCheck {
    pub preservability_lower: f64,
    pub bath_size: Option<usize>,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub capacity_lower: BoundReport,
    pub coherence_upper: BoundReport,
    pub bath: ChannelBathReport,
    #[serde(with = "crate::monotones::report::extended_f64")]
    pub rhs: f64,
    #[serde(with = "crate::monotones::report::extended_f64")]
    pub margin: f64,
    pub holds: bool,
    pub bath_check: Option<BathPreservabilityCheck>,
}

/// Largest copy number usable for bath-size estimates at local dimension `d`.
pub fn default_n_max(d: usize) -> usize {
    (1..=5).rev().find(|&n| d.checked_pow(n as u32).map_or(false, |t| t <= 32)).unwrap_or(1)
}

/// Compares the capacity lower bound with coherence preservability plus
/// `log2(B^delta(Lambda) + 2 sqrt(delta) / p_min + 1) + kappa - log2(1 - epsilon)`, where
/// `Lambda` is the channel itself when it is coherence-annihilating and otherwise its
/// Gibbs-fixing resourceless representative. For coherence-annihilating channels it also
/// runs the bath-size necessary condition at `epsilon`.
pub fn theorem3_consistency(
    n_ch: &ChannelChoi,
    ctx: &ThermalContext,
    spec_coh: &ResourceSpec,
    epsilon: f64,
    delta: f64,
    kappa: f64,
) -> Result<Theorem3Report> {
    if !matches!(spec_coh, ResourceSpec::Coherence { .. }) {
        return Err(Error::InvalidParameter("the coherence resource is required".into()));
    }
    if !(0.0..1.0).contains(&epsilon) || !(0.0..1.0).contains(&delta) || !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("parameters out of range: epsilon {epsilon}, delta {delta}, kappa {kappa}")));
    }
    let d = ctx.dim();
    if n_ch.d_in != d || n_ch.d_out != d {
        return Err(Error::Dimension(format!("channel must act on the {d}-level system")));
    }
    let gamma = &ctx.gamma;
    let dev = n_ch.apply_op(&gamma.mat).max_abs_diff(&gamma.mat);
    if dev > DEFAULT.free {
        return Err(Error::Precondition(format!("channel is not Gibbs-preserving (deviation {dev:.3e})")));
    }
    let v = is_free_operation(spec_coh, n_ch, DEFAULT.free)?;
    if !v.holds {
        return Err(Error::Precondition(format!("channel generates coherence (violation {:.3e})", v.worst)));
    }
    let n_max = default_n_max(d);
    let subspace = check_energy_subspace_condition(&ctx.hamiltonian, n_max)?;
    if !subspace.holds {
        return Err(Error::Precondition(format!("energy subspace condition fails: {:?}", subspace.violation)));
    }
    let annihilating = is_resource_annihilating(spec_coh, n_ch, DEFAULT.free)?.holds;
    let (coherence_upper, lambda) = preservability_upper(spec_coh, n_ch, Some(gamma))?;
    let lambda = if annihilating { n_ch.clone() } else { lambda };
    let bath = channel_bath_size(&lambda, ctx, delta, n_max, 4, 0)?;
    let m_max = ((d as f64) / (1.0 - epsilon)).floor() as usize;
    let capacity_lower = one_shot_capacity_lower(n_ch, epsilon, m_max.max(1), 4, 0)?;
    let extra = 2.0 * delta.sqrt() / ctx.p_min + 1.0;
    let rhs = match bath.bath_size {
        Some(b) => coherence_upper.value + (b as f64 + extra).log2() + kappa - (1.0 - epsilon).log2(),
        None => f64::INFINITY,
    };
    let margin = rhs - capacity_lower.value;
    let bath_check = if annihilating {
        let spec = ResourceSpec::Athermality { ctx: ctx.clone() };
        let p = preservability_bracket(&spec, n_ch, &PreservabilityParams::default())?.lower.value;
        let b = if epsilon == delta { bath.bath_size } else { channel_bath_size(n_ch, ctx, epsilon, n_max, 4, 0)?.bath_size };
        let bound = b.map_or(f64::INFINITY, |b| b as f64 + 2.0 * epsilon.sqrt() / ctx.p_min + 1.0);
        Some(BathPreservabilityCheck { preservability_lower: p, bath_size: b, bound, holds: p.exp2() <= bound + 1e-9 })
    } else {
        None
    };
    Ok(Theorem3Report { capacity_lower, coherence_upper, bath, rhs, margin, holds: margin >= -1e-6, bath_check })
}

#[cfg(test)]
mod tests;
