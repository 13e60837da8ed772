//! Brackets on the max-relative-entropy preservability and the discrimination quantity of a
//! channel's resourceless representative.

use num_complex::Complex64;
use rayon::prelude::*;

use super::dmax::{channel_dmax_cp_upper, channel_dmax_input_lower};
use super::discrimination::optimal_povm;
use super::report::{BoundKind, BoundReport};
use super::sdp::{sdp_solve, HermVar, SdpOptions, SdpProblem, MAX_COMPLEX_DIM};
use crate::channels::{constant, mix, ChannelChoi};
use crate::error::{Error, Result};
use crate::kernel::{c, herm_eig, kron, max_eigenvalue, min_eigenvalue, partial_trace, trace_norm, ComplexMatrix};
use crate::quantum::random::{child_rng, haar_ket};
use crate::quantum::DensityMatrix;
use crate::resources::{annihilating_projection, is_free_operation, is_resource_annihilating, ResourceSpec};
use crate::tolerance::DEFAULT;

#[derive(Debug, Clone)]
pub struct PreservabilityParams {
    pub restarts: usize,
    pub seed: u64,
    /// Random pure probes added to the fixed probe set of the lower program.
    pub random_probes: usize,
    /// Restrict the representative to channels fixing this state.
    pub gibbs: Option<DensityMatrix>,
}

impl Default for PreservabilityParams {
    fn default() -> Self {
        Self { restarts: 8, seed: 0, random_probes: 4, gibbs: None }
    }
}

/// `lower <= P <= upper`, and a resource-destroying channel dominating the input channel
/// with the factor `2^upper`.
#[derive(Debug, Clone)]
pub struct Preservability {
    pub lower: BoundReport,
    pub upper: BoundReport,
    pub representative: ChannelChoi,
}

fn herm_basis(n: usize) -> Vec<ComplexMatrix> {
    let hv = HermVar { offset: 0, n };
    (0..hv.len()).map(|k| hv.basis(k)).collect()
}

/// Real spanning set for the Choi matrices of the relevant resource-destroying channels.
fn choi_family(spec: &ResourceSpec, d_in: usize, d_out: usize, covariant: bool) -> Result<Vec<ComplexMatrix>> {
    let out = spec.free_algebra(d_out)?;
    let inp = if covariant {
        spec.free_algebra(d_in)?.iter().map(|m| m.conj()).collect()
    } else {
        herm_basis(d_in)
    };
    Ok(out.iter().flat_map(|a| inp.iter().map(move |b| kron(a, b))).collect())
}

fn apply_choi(j: &ComplexMatrix, d_in: usize, d_out: usize, x: &ComplexMatrix) -> ComplexMatrix {
    ChannelChoi::from_choi_unchecked(d_in, d_out, j.clone()).expect("dimensions").apply_op(x)
}

fn combine(basis: &[ComplexMatrix], y: &[f64]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(basis[0].rows(), basis[0].cols());
    for (b, w) in basis.iter().zip(y) {
        m.axpy(c(*w, 0.0), b);
    }
    m
}

/// Adds `sum_k y_k L(B_k) = lambda R` entrywise, with `lambda` variable 0 and `y_k` variable k+1.
fn add_matrix_equality(p: &mut SdpProblem, images: &[ComplexMatrix], rhs: &ComplexMatrix) {
    let n = rhs.rows();
    for i in 0..n {
        for j in i..n {
            let re: Vec<(usize, f64)> = std::iter::once((0, -rhs[(i, j)].re))
                .chain(images.iter().enumerate().map(|(k, m)| (k + 1, m[(i, j)].re)))
                .filter(|(_, a)| *a != 0.0)
                .collect();
            if !re.is_empty() {
                p.add_equality(re, 0.0);
            }
            if i != j {
                let im: Vec<(usize, f64)> = std::iter::once((0, -rhs[(i, j)].im))
                    .chain(images.iter().enumerate().map(|(k, m)| (k + 1, m[(i, j)].im)))
                    .filter(|(_, a)| *a != 0.0)
                    .collect();
                if !im.is_empty() {
                    p.add_equality(im, 0.0);
                }
            }
        }
    }
}

/// `min lambda  s.t.  Y >= J(n), tr_out Y = lambda I, Y in span(basis)` (and `Y(gamma) =
/// lambda gamma` when requested). Returns the certified `lambda` and `Y`.
fn dominance_program(
    n: &ChannelChoi,
    basis: &[ComplexMatrix],
    gibbs: Option<&DensityMatrix>,
) -> Result<(f64, ComplexMatrix)> {
    let (d_in, d_out) = (n.d_in, n.d_out);
    let dim = d_in * d_out;
    if dim > MAX_COMPLEX_DIM {
        return Err(Error::Guard(format!("Choi dimension {dim} exceeds the program size limit")));
    }
    let mut p = SdpProblem::new(1 + basis.len());
    p.objective[0] = 1.0;
    let blk = p.add_block(-&n.choi);
    for (k, b) in basis.iter().enumerate() {
        p.add_term(blk, k + 1, b.clone());
    }
    let traces: Vec<ComplexMatrix> =
        basis.iter().map(|b| partial_trace(b, &[d_out, d_in], &[1])).collect::<Result<_>>()?;
    add_matrix_equality(&mut p, &traces, &ComplexMatrix::identity(d_in));
    if let Some(g) = gibbs {
        let images: Vec<ComplexMatrix> = basis.iter().map(|b| apply_choi(b, d_in, d_out, &g.mat)).collect();
        add_matrix_equality(&mut p, &images, &g.mat);
    }
    let sol = sdp_solve(&p, &SdpOptions::default())?;
    let lambda = sol.y[0];
    let y = combine(basis, &sol.y[1..]).hermitian_part();
    let defect = (-min_eigenvalue(&(&y - &n.choi))?).max(0.0) + 1e-12 * n.choi.max_abs().max(1.0);
    Ok(match gibbs {
        None => (lambda + d_out as f64 * defect, &y + &ComplexMatrix::identity(dim).scale_real(defect)),
        Some(g) => {
            let pmin = min_eigenvalue(&g.mat)?;
            if pmin <= 0.0 {
                return Err(Error::InvalidState("fixed state must have full rank".into()));
            }
            let s = defect / pmin;
            (lambda + s, &y + &kron(&g.mat, &ComplexMatrix::identity(d_in)).scale_real(s))
        }
    })
}

pub(crate) fn probe_states(d: usize, extra: usize, seed: u64) -> Vec<ComplexMatrix> {
    let mut kets: Vec<Vec<Complex64>> = (0..d).map(|k| crate::kernel::basis_vector(d, k)).collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            for ph in [c(1.0, 0.0), c(0.0, 1.0)] {
                let mut v = vec![c(0.0, 0.0); d];
                v[i] = c(s, 0.0);
                v[j] = ph * s;
                kets.push(v);
            }
        }
    }
    if d > 2 {
        kets.push(vec![c(1.0 / (d as f64).sqrt(), 0.0); d]);
    }
    for k in 0..extra {
        kets.push(haar_ket(d, &mut child_rng(seed, 1000 + k as u64)));
    }
    kets.iter().map(|v| ComplexMatrix::outer(v, v)).collect()
}

/// `min lambda  s.t.  lambda Lambda(rho_k) >= n(rho_k)` over probes, `Lambda` in the family.
/// Returns a lower bound on the optimal `lambda` from the dual objective.
fn probe_program(n: &ChannelChoi, basis: &[ComplexMatrix], probes: &[ComplexMatrix]) -> Result<f64> {
    let (d_in, d_out) = (n.d_in, n.d_out);
    let mut p = SdpProblem::new(1 + basis.len());
    p.objective[0] = 1.0;
    let pos = p.add_block(ComplexMatrix::zeros(d_in * d_out, d_in * d_out));
    for (k, b) in basis.iter().enumerate() {
        p.add_term(pos, k + 1, b.clone());
    }
    for rho in probes {
        let blk = p.add_block(-n.apply_op(rho).hermitian_part());
        for (k, b) in basis.iter().enumerate() {
            p.add_term(blk, k + 1, apply_choi(b, d_in, d_out, rho).hermitian_part());
        }
    }
    let traces: Vec<ComplexMatrix> =
        basis.iter().map(|b| partial_trace(b, &[d_out, d_in], &[1])).collect::<Result<_>>()?;
    add_matrix_equality(&mut p, &traces, &ComplexMatrix::identity(d_in));
    let sol = sdp_solve(&p, &SdpOptions::default())?;
    Ok(sol.dual_value)
}

fn check_free(spec: &ResourceSpec, n: &ChannelChoi) -> Result<()> {
    let v = is_free_operation(spec, n, DEFAULT.free)?;
    if !v.holds {
        return Err(Error::Precondition(format!("channel is not a free {} operation (violation {:.3e})", spec.name(), v.worst)));
    }
    Ok(())
}

fn zero_bracket(name: &str, n: &ChannelChoi) -> Preservability {
    Preservability {
        lower: BoundReport::new(name, 0.0, BoundKind::Exact, "resource-destroying channel", 0.0),
        upper: BoundReport::new(name, 0.0, BoundKind::Exact, "resource-destroying channel", 0.0),
        representative: n.clone(),
    }
}

/// Certified upper bound with its dominating resource-destroying channel.
pub fn preservability_upper(
    spec: &ResourceSpec,
    n: &ChannelChoi,
    gibbs: Option<&DensityMatrix>,
) -> Result<(BoundReport, ChannelChoi)> {
    const NAME: &str = "preservability";
    if is_resource_annihilating(spec, n, 1e-10)?.holds && gibbs.map_or(true, |g| n.apply_op(&g.mat).max_abs_diff(&g.mat) < 1e-10) {
        let z = zero_bracket(NAME, n);
        return Ok((z.upper, z.representative));
    }
    if let ResourceSpec::Athermality { .. } = spec {
        let f = constant(&spec.gibbs(n.d_out)?, n.d_in);
        return Ok((channel_dmax_cp_upper(n, &f)?.renamed(NAME), f));
    }
    if gibbs.is_some() && !matches!(spec, ResourceSpec::Coherence { .. }) {
        return Err(Error::InvalidParameter("a fixed-state constraint is only supported for coherence".into()));
    }
    let proj = annihilating_projection(spec, n)?;
    let fallback = channel_dmax_cp_upper(n, &proj)?;
    let covariant = matches!(spec, ResourceSpec::Asymmetry { .. });
    let basis = choi_family(spec, n.d_in, n.d_out, covariant)?;
    match dominance_program(n, &basis, gibbs) {
        Ok((lambda, y)) => {
            let v = lambda.max(1.0).log2();
            if fallback.value <= v {
                return Ok((fallback.renamed(NAME), proj));
            }
            let rep = ChannelChoi::from_choi_unchecked(n.d_in, n.d_out, y.scale_real(1.0 / lambda))?;
            Ok((BoundReport::new(NAME, v, BoundKind::Upper, "cp-dominance program over resource-destroying channels", 1e-9), rep))
        }
        Err(err) => {
            log::warn!("preservability program failed ({err}); using the canonical projection");
            Ok((
                BoundReport::new(NAME, fallback.value, BoundKind::Upper, "cp dominance of the canonical projection (program fallback)", 1e-9),
                proj,
            ))
        }
    }
}

pub fn preservability_bracket(spec: &ResourceSpec, n: &ChannelChoi, params: &PreservabilityParams) -> Result<Preservability> {
    const NAME: &str = "preservability";
    check_free(spec, n)?;
    if let Some(g) = &params.gibbs {
        if n.apply_op(&g.mat).max_abs_diff(&g.mat) > DEFAULT.free {
            return Err(Error::Precondition("channel does not fix the requested state".into()));
        }
    }
    let (upper, representative) = preservability_upper(spec, n, params.gibbs.as_ref())?;
    if upper.kind == BoundKind::Exact {
        return Ok(Preservability { lower: upper.clone(), upper, representative });
    }
    let lower = match spec {
        ResourceSpec::Athermality { .. } => {
            channel_dmax_input_lower(n, &representative, params.restarts, params.seed)?.renamed(NAME)
        }
        _ => {
            let basis = choi_family(spec, n.d_in, n.d_out, false)?;
            let room = MAX_COMPLEX_DIM.saturating_sub(n.d_in * n.d_out) / n.d_out;
            let mut probes = probe_states(n.d_in, params.random_probes, params.seed);
            probes.truncate(room);
            match probe_program(n, &basis, &probes) {
                Ok(l) => BoundReport::new(
                    NAME,
                    l.max(1.0).log2(),
                    BoundKind::Lower,
                    format!("probe-input program ({} probes)", probes.len()),
                    1e-9,
                ),
                Err(err) => {
                    log::warn!("probe program failed ({err})");
                    BoundReport::new(NAME, 0.0, BoundKind::Lower, "trivial (probe program failed)", 0.0)
                }
            }
        }
    };
    let lower = BoundReport { value: lower.value.min(upper.value), ..lower };
    Ok(Preservability { lower, upper, representative })
}

/// Smoothed upper bound over `E_t = (1 - t) n + t Pi(n)` with `t` small enough that
/// `||n - E_t||_diamond <= 2 delta` follows from the Choi trace-norm bracket.
#[derive(Debug, Clone)]
pub struct SmoothedUpper {
    pub report: BoundReport,
    pub t: f64,
    pub channel: ChannelChoi,
    pub representative: ChannelChoi,
}

pub fn smoothing_path(spec: &ResourceSpec, n: &ChannelChoi, delta: f64, family_size: usize) -> Result<Vec<(f64, ChannelChoi)>> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 1)")));
    }
    let proj = annihilating_projection(spec, n)?;
    let dist = trace_norm(&(&n.choi - &proj.choi));
    let t_max = if dist < 1e-14 { 1.0 } else { (2.0 * delta / dist).min(1.0) };
    let k = family_size.max(2);
    (0..k)
        .map(|i| {
            let t = if delta == 0.0 { 0.0 } else { t_max * i as f64 / (k - 1) as f64 };
            Ok((t, mix(&[1.0 - t, t], &[n.clone(), proj.clone()])?))
        })
        .collect()
}

pub fn smoothed_preservability_upper(
    spec: &ResourceSpec,
    n: &ChannelChoi,
    delta: f64,
    family_size: usize,
    gibbs: Option<&DensityMatrix>,
) -> Result<SmoothedUpper> {
    check_free(spec, n)?;
    let path = smoothing_path(spec, n, delta, if delta == 0.0 { 1 } else { family_size })?;
    let mut evals: Vec<Result<(f64, ChannelChoi, BoundReport, ChannelChoi)>> = path
        .into_par_iter()
        .map(|(t, e)| preservability_upper(spec, &e, gibbs).map(|(r, rep)| (t, e, r, rep)))
        .collect();
    let mut best: Option<(f64, ChannelChoi, BoundReport, ChannelChoi)> = None;
    for ev in evals.drain(..) {
        let ev = ev?;
        if best.as_ref().map_or(true, |b| ev.2.value < b.2.value - 1e-12) {
            best = Some(ev);
        }
    }
    let (t, channel, report, representative) = best.expect("nonempty path");
    let report = BoundReport {
        name: "smoothed_preservability".into(),
        method: format!("{}; smoothing weight t = {t:.6}", report.method),
        ..report
    };
    Ok(SmoothedUpper { report, t, channel, representative })
}

fn seesaw_discrimination(lambda: &ChannelChoi, restarts: usize, seed: u64) -> Result<f64> {
    let (d_in, m) = (lambda.d_in, lambda.d_out);
    let runs: Vec<Result<f64>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut g = child_rng(seed, r as u64);
            let mut states: Vec<ComplexMatrix> = (0..m)
                .map(|_| {
                    let v = haar_ket(d_in, &mut g);
                    ComplexMatrix::outer(&v, &v)
                })
                .collect();
            let mut best = 0.0f64;
            for _ in 0..60 {
                let outs: Vec<ComplexMatrix> = states.iter().map(|s| lambda.apply_op(s).hermitian_part()).collect();
                let d = optimal_povm(&outs)?;
                let mut total = 0.0;
                states = d
                    .povm
                    .elements
                    .iter()
                    .map(|e| {
                        let h = herm_eig(&lambda.adjoint_apply(e).hermitian_part())?;
                        total += h.max();
                        let v = h.vector(d_in - 1);
                        Ok(ComplexMatrix::outer(&v, &v))
                    })
                    .collect::<Result<_>>()?;
                if total <= best + 1e-10 {
                    best = best.max(total);
                    break;
                }
                best = total;
            }
            Ok(best)
        })
        .collect();
    let mut best = 0.0f64;
    for r in runs {
        best = best.max(r?);
    }
    Ok(best)
}

/// `log2 sup sum_m tr[E_m Lambda(rho_m)]` for a resource-destroying `lambda`. Exact when the
/// free algebra is commutative (the supremum is `sum_k lambda_max(Lambda^dagger(P_k))`);
/// otherwise a see-saw estimate flagged heuristic.
pub fn gamma_of_representative(spec: &ResourceSpec, lambda: &ChannelChoi, restarts: usize, seed: u64) -> Result<BoundReport> {
    const NAME: &str = "gamma";
    if let ResourceSpec::Athermality { .. } = spec {
        let g = spec.gibbs(lambda.d_out)?;
        if lambda.distance_choi(&constant(&g, lambda.d_in)) < 1e-9 {
            return Ok(BoundReport::new(NAME, 0.0, BoundKind::Exact, "constant output", 0.0));
        }
    }
    if let Some(projectors) = spec.free_projectors(lambda.d_out)? {
        let mut s = 0.0;
        for p in &projectors {
            s += max_eigenvalue(&lambda.adjoint_apply(p).hermitian_part())?;
        }
        return Ok(BoundReport::new(NAME, s.max(1.0).log2(), BoundKind::Exact, "closed form over free projectors", 1e-10));
    }
    let v = seesaw_discrimination(lambda, restarts, seed)?;
    Ok(BoundReport::new(NAME, v.max(1.0).log2(), BoundKind::Heuristic, "see-saw over codes", 1e-8))
}

/// Discrimination quantity of the channel's representative. Reported as an upper bound on
/// the infimum over near-optimal representatives when the bracket gap is within `kappa`.
pub fn gamma_quantity(spec: &ResourceSpec, n: &ChannelChoi, kappa: f64, params: &PreservabilityParams) -> Result<BoundReport> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} outside (0, 1)")));
    }
    let b = preservability_bracket(spec, n, params)?;
    let g = gamma_of_representative(spec, &b.representative, params.restarts, params.seed)?;
    let member = b.upper.value - b.lower.value <= kappa;
    let kind = match (g.kind, member) {
        (BoundKind::Exact, true) => BoundKind::Upper,
        _ => BoundKind::Heuristic,
    };
    Ok(BoundReport { kind, method: format!("{}; bracket gap {:.3e}", g.method, b.upper.value - b.lower.value), ..g })
}
