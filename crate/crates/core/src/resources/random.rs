//! Seeded random free operations, used as test scaffolding.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::channels::{compose, constant, dephasing, mix, twirl_group, ChannelChoi, UnitaryGroup};
use crate::error::{Error, Result};
use crate::kernel::{c, kron, min_eigenvalue, ComplexMatrix};
use crate::quantum::random::{haar_kraus, haar_unitary, random_probabilities};
use crate::quantum::DensityMatrix;

fn random_permutation(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let mut p: Vec<usize> = (0..d).collect();
    p.shuffle(rng);
    ComplexMatrix::from_fn(d, d, |i, j| if p[j] == i { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

fn random_phases(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let ph: Vec<_> = (0..d)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            c(t.cos(), t.sin())
        })
        .collect();
    ComplexMatrix::from_diag(&ph)
}

/// Random channel mapping every input to a diagonal output.
pub fn random_dephased_channel(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Result<ChannelChoi> {
    let e = ChannelChoi::from_kraus(&haar_kraus(d_in, d_out, d_in.max(2), rng))?;
    compose(&dephasing(d_out, None)?, &e)
}

/// Random coherence non-generating channel on `d` (computational basis): a mixture of
/// phased permutations, dephased channels and measure-and-prepare maps onto basis states.
pub fn random_incoherent_channel(d: usize, rng: &mut impl Rng) -> Result<ChannelChoi> {
    let u = &random_permutation(d, rng) * &random_phases(d, rng);
    let perm = ChannelChoi::unitary(&u)?;
    let deph = random_dephased_channel(d, d, rng)?;
    let k = rng.gen_range(0..d);
    let prep = constant(&DensityMatrix::basis(d, k), d);
    let w = random_probabilities(3, rng);
    mix(&w, &[perm, deph, prep])
}

/// Random Gibbs-preserving channel: `(1 - p)(E - E(gamma) tr) + gamma tr`, with `p` the
/// smallest weight (found by bisection) that keeps the Choi matrix positive.
pub fn random_gibbs_preserving(gamma: &DensityMatrix, rng: &mut impl Rng) -> Result<ChannelChoi> {
    let d = gamma.dim();
    let e = ChannelChoi::from_kraus(&haar_kraus(d, d, d, rng))?;
    let eg = e.apply_op(&gamma.mat);
    let id = ComplexMatrix::identity(d);
    let dev = &e.choi - &kron(&eg, &id);
    let base = kron(&gamma.mat, &id);
    let choi_at = |p: f64| &dev.scale_real(1.0 - p) + &base;
    let ok = |p: f64| min_eigenvalue(&choi_at(p)).map(|v| v >= 1e-12).unwrap_or(false);
    if !ok(1.0) {
        return Err(Error::InvalidState("Gibbs state must have full rank".into()));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if ok(0.0) {
        hi = 0.0;
    } else {
        for _ in 0..50 {
            let m = 0.5 * (lo + hi);
            if ok(m) {
                hi = m;
            } else {
                lo = m;
            }
        }
    }
    let extra: f64 = rng.gen_range(0.0..0.2);
    let p = hi + extra * (1.0 - hi);
    ChannelChoi::new(d, d, choi_at(p).hermitian_part())
}

/// Gibbs-preserving channel whose outputs are all diagonal: measure-and-prepare with
/// effects `M_a = alpha (R_a - c_a I) + gamma_a I` where `tr(R_a gamma) = c_a`.
pub fn random_gp_coherence_annihilating(gamma: &DensityMatrix, rng: &mut impl Rng) -> Result<ChannelChoi> {
    let d = gamma.dim();
    let g: Vec<f64> = gamma.mat.real_diag();
    if gamma.mat.max_abs_diff(&ComplexMatrix::from_real_diag(&g)) > 1e-12 {
        return Err(Error::InvalidState("Gibbs state must be diagonal".into()));
    }
    let ks = haar_kraus(d, d, d, rng);
    let rs: Vec<ComplexMatrix> = ks.iter().map(|k| &k.adjoint() * k).collect();
    let cs: Vec<f64> = rs.iter().map(|r| r.trace_product(&gamma.mat).re).collect();
    let pmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut alpha = 1.0f64;
    let build = |alpha: f64| -> Vec<ComplexMatrix> {
        (0..d)
            .map(|a| {
                let shifted = &rs[a] - &ComplexMatrix::identity(d).scale_real(cs[a]);
                &shifted.scale_real(alpha) + &ComplexMatrix::identity(d).scale_real(g[a])
            })
            .collect()
    };
    while build(alpha).iter().any(|m| min_eigenvalue(m).map(|v| v < 0.0).unwrap_or(true)) {
        alpha *= 0.5;
        if alpha < 1e-6 * pmin {
            alpha = 0.0;
            break;
        }
    }
    let effects = build(alpha);
    ChannelChoi::from_linear_map(d, d, |x| {
        let p: Vec<f64> = effects.iter().map(|m| m.trace_product(x).re).collect();
        let im: Vec<f64> = effects.iter().map(|m| m.trace_product(x).im).collect();
        ComplexMatrix::from_diag(&p.iter().zip(&im).map(|(a, b)| c(*a, *b)).collect::<Vec<_>>())
    })
}

/// Random Gibbs-preserving, coherence non-generating channel for diagonal `gamma`:
/// mixtures of diagonal-phase unitaries, dephasing and diagonal-output GP maps.
pub fn random_gp_incoherent(gamma: &DensityMatrix, rng: &mut impl Rng) -> Result<ChannelChoi> {
    let d = gamma.dim();
    let phase = ChannelChoi::unitary(&random_phases(d, rng))?;
    let ann = random_gp_coherence_annihilating(gamma, rng)?;
    let w = random_probabilities(3, rng);
    mix(&w, &[phase, dephasing(d, None)?, ann])
}

/// Random group-covariant channel: the group average of a random channel.
pub fn random_covariant_channel(group: &UnitaryGroup, rng: &mut impl Rng) -> Result<ChannelChoi> {
    let d = group.dim();
    let e = ChannelChoi::from_kraus(&haar_kraus(d, d, d, rng))?;
    match group {
        UnitaryGroup::Finite { elements, .. } => {
            let n = elements.len() as f64;
            let mut acc = ComplexMatrix::zeros(d * d, d * d);
            for u in elements {
                let ad = ChannelChoi::unitary(u)?;
                let adj = ChannelChoi::unitary(&u.adjoint())?;
                acc += &compose(&adj, &compose(&e, &ad)?)?.choi;
            }
            ChannelChoi::new(d, d, acc.scale_real(1.0 / n))
        }
        UnitaryGroup::UUStar { .. } => {
            let t = twirl_group(group)?;
            let w = rng.gen_range(0.0..1.0);
            mix(&[w, 1.0 - w], &[compose(&t, &compose(&e, &t)?)?, ChannelChoi::identity(d)])
        }
    }
}

/// Random unitary channel, used when a non-free channel is needed.
pub fn random_unitary_channel(d: usize, rng: &mut impl Rng) -> Result<ChannelChoi> {
    ChannelChoi::unitary(&haar_unitary(d, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::tensor;
    use crate::kernel::pauli_z;
    use crate::quantum::random::rng;
    use crate::quantum::ThermalContext;
    use crate::resources::{is_free_operation, is_resource_annihilating, ResourceSpec};
    use proptest::prelude::*;

    fn thermal() -> (ResourceSpec, DensityMatrix) {
        let ctx = ThermalContext::from_populations(&[0.7, 0.3]).unwrap();
        let g = ctx.gamma.clone();
        (ResourceSpec::Athermality { ctx }, g)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn incoherent_channels_are_closed(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let coh = ResourceSpec::coherence();
            let a = random_incoherent_channel(2, &mut g).unwrap();
            let b = random_incoherent_channel(2, &mut g).unwrap();
            prop_assert!(is_free_operation(&coh, &a, 1e-8).unwrap().holds);
            prop_assert!(is_free_operation(&coh, &compose(&a, &b).unwrap(), 1e-8).unwrap().holds);
            prop_assert!(is_free_operation(&coh, &tensor(&a, &b), 1e-8).unwrap().holds);
            prop_assert!(is_free_operation(&coh, &mix(&[0.3, 0.7], &[a, b]).unwrap(), 1e-8).unwrap().holds);
        }

        #[test]
        fn gibbs_preserving_channels_are_closed(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let (spec, gamma) = thermal();
            let a = random_gibbs_preserving(&gamma, &mut g).unwrap();
            let b = random_gp_incoherent(&gamma, &mut g).unwrap();
            prop_assert!(is_free_operation(&spec, &a, 1e-9).unwrap().holds);
            prop_assert!(is_free_operation(&spec, &b, 1e-9).unwrap().holds);
            prop_assert!(is_free_operation(&ResourceSpec::coherence(), &b, 1e-8).unwrap().holds);
            prop_assert!(is_free_operation(&spec, &compose(&a, &b).unwrap(), 1e-9).unwrap().holds);
            prop_assert!(is_free_operation(&spec, &tensor(&a, &b), 1e-9).unwrap().holds);
        }

        #[test]
        fn gp_annihilating_outputs_are_diagonal(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let (spec, gamma) = thermal();
            let a = random_gp_coherence_annihilating(&gamma, &mut g).unwrap();
            prop_assert!(is_free_operation(&spec, &a, 1e-9).unwrap().holds);
            prop_assert!(is_resource_annihilating(&ResourceSpec::coherence(), &a, 1e-9).unwrap().holds);
        }

        #[test]
        fn covariant_channels_are_free(seed in 0u64..10_000) {
            let mut g = rng(seed);
            let grp = UnitaryGroup::finite(vec![ComplexMatrix::identity(2), pauli_z()]).unwrap();
            let spec = ResourceSpec::Asymmetry { group: grp.clone() };
            let a = random_covariant_channel(&grp, &mut g).unwrap();
            prop_assert!(is_free_operation(&spec, &a, 1e-9).unwrap().holds);
            let uu = UnitaryGroup::UUStar { d: 2 };
            let b = random_covariant_channel(&uu, &mut g).unwrap();
            let uu_spec = ResourceSpec::Asymmetry { group: uu };
            prop_assert!(is_free_operation(&uu_spec, &b, 1e-8).unwrap().holds);
        }
    }
}
