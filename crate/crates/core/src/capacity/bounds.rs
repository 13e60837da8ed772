//! Certified upper bounds on the one-shot capacity of free operations, the covariant lower
//! bound and the random-codebook experiment behind it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CodebookMap;
use crate::channels::{constant, twirl_group, ChannelChoi, UnitaryGroup};
use crate::error::{Error, Result};
use crate::kernel::ComplexMatrix;
use crate::monotones::preservability::probe_states;
use crate::monotones::{
    channel_dmax_cp_upper, combine_kinds, gamma_of_representative, info_spectrum_re, preservability_upper, smoothing_path,
    BoundKind, BoundReport,
};
use crate::quantum::random::child_rng;
use crate::quantum::{pretty_good_measurement, DensityMatrix, ThermalContext};
use crate::resources::{is_free_operation, ResourceSpec};
use crate::tolerance::DEFAULT;

#[derive(Debug, Clone)]
pub struct Theorem1Params {
    pub restarts: usize,
    /// Points on the smoothing path when `delta > 0`.
    pub family_size: usize,
}

impl Default for Theorem1Params {
    fn default() -> Self {
        Self { restarts: 8, family_size: 5 }
    }
}

/// The capacity bound together with its two channel-dependent terms, evaluated at the
/// smoothing weight `t` that minimizes their sum.
#[derive(Debug, Clone)]
pub struct Theorem1Bound {
    pub total: BoundReport,
    pub preservability: BoundReport,
    pub gamma: BoundReport,
    pub t: f64,
}

fn check_free(spec: &ResourceSpec, n: &ChannelChoi) -> Result<()> {
    let v = is_free_operation(spec, n, DEFAULT.free)?;
    if !v.holds {
        return Err(Error::Precondition(format!("channel is not a free {} operation (violation {:.3e})", spec.name(), v.worst)));
    }
    Ok(())
}

fn check_errors(epsilon: f64, delta: f64, kappa: f64) -> Result<()> {
    if !(epsilon >= 0.0 && delta >= 0.0 && epsilon + delta < 1.0) {
        return Err(Error::InvalidParameter(format!("need epsilon, delta >= 0 and epsilon + delta < 1 (got {epsilon}, {delta})")));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} outside (0, 1)")));
    }
    Ok(())
}

/// `min_t [P_upper(E_t) + Gamma(Lambda_t)] + kappa - log2(1 - epsilon - delta)` along the
/// smoothing path, where `Lambda_t` is the dominating channel found for `E_t`. Any dominating
/// resource-destroying channel gives a valid bound, so the result is certified whenever the
/// discrimination term is exact.
pub fn theorem1_bound(
    spec: &ResourceSpec,
    n: &ChannelChoi,
    epsilon: f64,
    delta: f64,
    kappa: f64,
    seed: u64,
    params: &Theorem1Params,
) -> Result<Theorem1Bound> {
    check_errors(epsilon, delta, kappa)?;
    check_free(spec, n)?;
    let size = if delta == 0.0 { 1 } else { params.family_size };
    let path = smoothing_path(spec, n, delta, size)?;
    let evals: Vec<Result<(f64, BoundReport, BoundReport)>> = path
        .into_par_iter()
        .map(|(t, e)| {
            let (p, rep) = preservability_upper(spec, &e, None)?;
            let g = gamma_of_representative(spec, &rep, params.restarts, seed)?;
            Ok((t, p, g))
        })
        .collect();
    let mut best: Option<(f64, BoundReport, BoundReport)> = None;
    for ev in evals {
        let ev = ev?;
        if best.as_ref().map_or(true, |b| ev.1.value + ev.2.value < b.1.value + b.2.value - 1e-12) {
            best = Some(ev);
        }
    }
    let (t, p, g) = best.expect("nonempty path");
    let slack = kappa - (1.0 - epsilon - delta).log2();
    let kind = match combine_kinds(BoundKind::Upper, &[p.kind, g.kind]) {
        BoundKind::Heuristic => BoundKind::Heuristic,
        _ => BoundKind::Upper,
    };
    let total = BoundReport::new(
        "theorem1_upper",
        p.value + g.value + slack,
        kind,
        format!("preservability ({}) + gamma ({}) at t = {t:.6}", p.method, g.method),
        p.tol + g.tol,
    );
    Ok(Theorem1Bound { total, preservability: p, gamma: g, t })
}

pub fn theorem1_upper(spec: &ResourceSpec, n: &ChannelChoi, epsilon: f64, delta: f64, kappa: f64, seed: u64) -> Result<BoundReport> {
    Ok(theorem1_bound(spec, n, epsilon, delta, kappa, seed, &Theorem1Params::default())?.total)
}

fn gibbs_for(ctx: &ThermalContext, dim: usize) -> Result<DensityMatrix> {
    let d = ctx.dim();
    let mut k = 0;
    let mut p = 1;
    while p < dim {
        p *= d;
        k += 1;
    }
    if p != dim {
        return Err(Error::Dimension(format!("dimension {dim} is not a power of the thermal dimension {d}")));
    }
    Ok(ctx.gamma_power(k.max(1)))
}

/// Bound for channels that are free and Gibbs-preserving: the resource preservability (with
/// the representative constrained to fix the Gibbs state for coherence), plus the
/// athermality of the representative, plus `kappa - log2(1 - epsilon)`.
pub fn corollary1_upper(
    n: &ChannelChoi,
    ctx: &ThermalContext,
    spec: &ResourceSpec,
    epsilon: f64,
    kappa: f64,
) -> Result<BoundReport> {
    check_errors(epsilon, 0.0, kappa)?;
    check_free(spec, n)?;
    if n.d_in != n.d_out {
        return Err(Error::Dimension("Gibbs preservation needs equal input and output dimension".into()));
    }
    let gamma = gibbs_for(ctx, n.d_out)?;
    let dev = n.apply_op(&gamma.mat).max_abs_diff(&gamma.mat);
    if dev > DEFAULT.free {
        return Err(Error::Precondition(format!("channel is not Gibbs-preserving (deviation {dev:.3e})")));
    }
    let fixed = matches!(spec, ResourceSpec::Coherence { .. }).then_some(&gamma);
    let (p, rep) = preservability_upper(spec, n, fixed)?;
    let a = channel_dmax_cp_upper(&rep, &constant(&gamma, n.d_in))?;
    let slack = kappa - (1.0 - epsilon).log2();
    Ok(BoundReport::new(
        "corollary1_upper",
        p.value + a.value + slack,
        BoundKind::Upper,
        format!("preservability ({}) + athermality of the representative", p.method),
        p.tol + a.tol,
    ))
}

/// Covariant lower bound `max{0, W + log2(delta) - 1}` with `W` the best information
/// spectrum `D_s^{epsilon - delta}[n(rho) || T_G(n(rho))]` over probe inputs, in bits.
pub fn theorem2_lower(
    n: &ChannelChoi,
    g: &UnitaryGroup,
    epsilon: f64,
    delta: f64,
    probes: usize,
    seed: u64,
) -> Result<BoundReport> {
    if !(0.0 <= delta && delta < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 <= delta < epsilon < 1 (got {epsilon}, {delta})")));
    }
    if g.dim() != n.d_in || n.d_in != n.d_out {
        return Err(Error::Dimension("group and channel act on different dimensions".into()));
    }
    let spec = ResourceSpec::Asymmetry { group: g.clone() };
    let v = is_free_operation(&spec, n, DEFAULT.free)?;
    if !v.holds {
        return Err(Error::Precondition(format!("channel is not covariant (violation {:.3e})", v.worst)));
    }
    let twirl = twirl_group(g)?;
    let inputs = probe_states(n.d_in, probes, seed);
    let ws: Vec<Result<f64>> = inputs
        .par_iter()
        .map(|rho| {
            let out = DensityMatrix::trusted(vec![n.d_out], n.apply_op(rho).hermitian_part());
            let sym = DensityMatrix::trusted(vec![n.d_out], twirl.apply_op(&out.mat).hermitian_part());
            info_spectrum_re(&out, &sym, epsilon - delta)
        })
        .collect();
    let mut w = f64::NEG_INFINITY;
    for x in ws {
        w = w.max(x?);
    }
    let value = if delta == 0.0 { 0.0 } else { (w + delta.log2() - 1.0).max(0.0) };
    Ok(BoundReport::new(
        "theorem2_lower",
        value,
        BoundKind::Lower,
        format!("information spectrum over {} probes, W = {w:.6} bits", inputs.len()),
        1e-9,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookExperiment {
    pub m: usize,
    pub trials: usize,
    pub kappa: f64,
    pub mean: f64,
    pub stderr: f64,
    /// `D_s^kappa[rho || T_G(rho)]` in bits.
    pub d_s: f64,
    pub rhs: f64,
    pub passes: bool,
}

/// Draws `m` group elements uniformly and independently per trial, encodes `U_g rho U_g^dagger`
/// and decodes with the pretty good measurement. Compares the mean success with
/// `(1 - kappa)(1 - m e^{-D_s})`.
pub fn random_codebook_experiment(
    rho: &DensityMatrix,
    g: &UnitaryGroup,
    m: usize,
    trials: usize,
    kappa: f64,
    seed: u64,
) -> Result<CodebookExperiment> {
    let Some(els) = g.elements() else {
        return Err(Error::InvalidParameter("random codebooks need a finite group".into()));
    };
    if m == 0 || trials == 0 {
        return Err(Error::InvalidParameter("need m >= 1 and trials >= 1".into()));
    }
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa = {kappa} outside [0, 1)")));
    }
    if g.dim() != rho.dim() {
        return Err(Error::Dimension("state and group act on different dimensions".into()));
    }
    let size = els.len();
    let sym = DensityMatrix::trusted(rho.dims.clone(), twirl_group(g)?.apply_op(&rho.mat).hermitian_part());
    let d_s = info_spectrum_re(rho, &sym, kappa)?;
    let rhs = (1.0 - kappa) * (1.0 - m as f64 * (-d_s).exp());
    let samples: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut r = child_rng(seed, t as u64);
            let map = CodebookMap::new((0..m).map(|_| r.gen_range(0..size)).collect(), g.clone())?;
            let enc: Vec<ComplexMatrix> = map.encodings(rho)?.into_iter().map(|s| s.mat).collect();
            let povm = pretty_good_measurement(&enc)?;
            let total: f64 = povm.elements.iter().zip(&enc).map(|(e, s)| e.trace_product(s).re).sum();
            Ok(total / m as f64)
        })
        .collect();
    let samples: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    let nt = trials as f64;
    let mean = samples.iter().sum::<f64>() / nt;
    let var = if trials > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nt - 1.0) } else { 0.0 };
    let stderr = (var / nt).sqrt();
    Ok(CodebookExperiment { m, trials, kappa, mean, stderr, d_s, rhs, passes: mean >= rhs - 3.0 * stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::one_shot_capacity_lower;
    use crate::channels::{dephasing, depolarizing};
    use crate::kernel::pauli_z;
    use crate::quantum::plus_state;
    use crate::quantum::random::rng;
    use crate::resources::random::{random_covariant_channel, random_incoherent_channel};
    use proptest::prelude::*;

    const KAPPA: f64 = 1e-6;

    #[test]
    fn state_preparation_saturates() {
        let coh = ResourceSpec::coherence();
        let b = theorem1_upper(&coh, &constant(&DensityMatrix::basis(2, 0), 2), 0.0, 0.0, KAPPA, 0).unwrap();
        assert!(b.value.abs() <= KAPPA + 1e-9, "{}", b.value);
        assert_eq!(b.kind, BoundKind::Upper);
    }

    #[test]
    fn dephasing_saturates() {
        let coh = ResourceSpec::coherence();
        for d in [2usize, 3, 4] {
            let b = theorem1_upper(&coh, &dephasing(d, None).unwrap(), 0.0, 0.0, KAPPA, 0).unwrap();
            assert!((b.value - (d as f64).log2()).abs() <= KAPPA + 1e-6, "d {d}: {}", b.value);
        }
    }

    #[test]
    fn smoothing_never_hurts() {
        let coh = ResourceSpec::coherence();
        let n = depolarizing(2, 0.4).unwrap();
        let a = theorem1_bound(&coh, &n, 0.1, 0.0, 0.01, 0, &Theorem1Params::default()).unwrap();
        let b = theorem1_bound(&coh, &n, 0.1, 0.05, 0.01, 0, &Theorem1Params::default()).unwrap();
        let pg = |x: &Theorem1Bound| x.preservability.value + x.gamma.value;
        assert!(pg(&b) <= pg(&a) + 1e-9);
    }

    #[test]
    fn rejects_non_free_and_bad_parameters() {
        let coh = ResourceSpec::coherence();
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, -1.0]).unwrap().scale_real(0.5f64.sqrt());
        let n = ChannelChoi::unitary(&h).unwrap();
        assert!(matches!(theorem1_upper(&coh, &n, 0.0, 0.0, 0.1, 0), Err(Error::Precondition(_))));
        let id = ChannelChoi::identity(2);
        assert!(theorem1_upper(&coh, &id, 0.6, 0.5, 0.1, 0).is_err());
        assert!(theorem1_upper(&coh, &id, 0.0, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn corollary_examples() {
        let ctx = ThermalContext::from_populations(&[0.7, 0.3]).unwrap();
        let coh = ResourceSpec::coherence();
        let kappa = 0.01;
        let eps = 0.2;
        let c = constant(&ctx.gamma, 2);
        let b = corollary1_upper(&c, &ctx, &coh, eps, kappa).unwrap();
        assert!((b.value - (kappa - (1.0f64 - eps).log2())).abs() < 1e-8, "{}", b.value);
        // sup_rho D_max(Delta(rho) || gamma) = log2(1 / p_min) for diagonal gamma.
        let b = corollary1_upper(&dephasing(2, None).unwrap(), &ctx, &coh, 0.0, kappa).unwrap();
        assert!((b.value - ((1.0f64 / 0.3).log2() + kappa)).abs() < 1e-6, "{}", b.value);
        assert!(corollary1_upper(&depolarizing(2, 0.9).unwrap(), &ctx, &coh, 0.0, kappa).is_err());
    }

    #[test]
    fn covariant_lower_examples() {
        let grp = UnitaryGroup::finite(vec![ComplexMatrix::identity(2), pauli_z()]).unwrap();
        let b = theorem2_lower(&dephasing(2, None).unwrap(), &grp, 0.3, 0.1, 2, 0).unwrap();
        assert_eq!(b.value, 0.0);
        let b = theorem2_lower(&ChannelChoi::identity(2), &grp, 0.3, 0.1, 2, 0).unwrap();
        assert!(b.method.contains("W = 1.000000"), "{}", b.method);
        assert_eq!(b.value, 0.0);
        assert!(theorem2_lower(&ChannelChoi::identity(2), &grp, 0.1, 0.3, 2, 0).is_err());
    }

    #[test]
    fn codebook_examples() {
        let grp = UnitaryGroup::phase_rotations(4).unwrap();
        let one = random_codebook_experiment(&plus_state(), &grp, 1, 50, 0.1, 0).unwrap();
        assert!((one.mean - 1.0).abs() < 1e-12 && one.passes);
        let sym = DensityMatrix::maximally_mixed(2);
        let s = random_codebook_experiment(&sym, &grp, 2, 50, 0.1, 0).unwrap();
        assert!(s.rhs <= 0.0 && s.passes);
        let two = random_codebook_experiment(&plus_state(), &grp, 2, 2000, 0.1, 3).unwrap();
        assert!((two.d_s - 1.0).abs() < 1e-8);
        assert!(two.passes, "{two:?}");
        let again = random_codebook_experiment(&plus_state(), &grp, 2, 2000, 0.1, 3).unwrap();
        assert_eq!(two, again);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn upper_dominates_capacity(seed in 0u64..10_000, d in 2usize..4) {
            let n = random_incoherent_channel(d, &mut rng(seed)).unwrap();
            let coh = ResourceSpec::coherence();
            let eps = 0.1;
            let up = theorem1_upper(&coh, &n, eps, 0.0, 0.01, seed).unwrap();
            let low = one_shot_capacity_lower(&n, eps, d * d, 3, seed).unwrap();
            prop_assert!(low.value <= up.value + 1e-6, "{} > {}", low.value, up.value);
        }

        #[test]
        fn covariant_lower_below_capacity(seed in 0u64..10_000) {
            let grp = UnitaryGroup::finite(vec![ComplexMatrix::identity(2), pauli_z()]).unwrap();
            let n = random_covariant_channel(&grp, &mut rng(seed)).unwrap();
            let low = theorem2_lower(&n, &grp, 0.4, 0.2, 2, seed).unwrap();
            let cap = one_shot_capacity_lower(&n, 0.4, 4, 3, seed).unwrap();
            prop_assert!(low.value <= cap.value + 1e-6);
        }
    }
}
