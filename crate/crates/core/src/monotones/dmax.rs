use num_complex::Complex64;
use rayon::prelude::*;

use super::report::{BoundKind, BoundReport};
use crate::channels::ChannelChoi;
use crate::error::{Error, Result};
use crate::kernel::{herm_eig, max_eigenvalue, normalize, psd_pinv_sqrt, support_projector, ComplexMatrix};
use crate::quantum::random::{child_rng, haar_ket};
use crate::quantum::DensityMatrix;

fn scale(m: &ComplexMatrix) -> f64 {
    m.max_abs().max(1e-300)
}

/// Largest generalized eigenvalue `sup_w <w|a|w> / <w|b|w>` for PSD `a`, `b`, with a maximizer.
/// Infinite when `a` has weight outside the support of `b`.
fn generalized_max(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(f64, Vec<Complex64>)> {
    let n = a.rows();
    let p = support_projector(b)?;
    let q = &ComplexMatrix::identity(n) - &p;
    let leak = a.conjugate_by(&q).hermitian_part();
    let le = herm_eig(&leak)?;
    if le.max() > 1e-10 * scale(a).max(scale(b)) {
        return Ok((f64::INFINITY, le.vector(n - 1)));
    }
    let s = psd_pinv_sqrt(b)?;
    let e = herm_eig(&a.conjugate_by(&s).hermitian_part())?;
    let mut w = s.mul_vec(&e.vector(n - 1));
    if crate::kernel::vec_norm(&w) < 1e-300 {
        w = e.vector(n - 1);
    }
    normalize(&mut w);
    Ok((e.max(), w))
}

/// `log2 min { lambda : a <= lambda b }`, infinite on a support violation.
pub fn dmax_op(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::Dimension("dmax needs square operators of equal size".into()));
    }
    let p = support_projector(b)?;
    let q = &ComplexMatrix::identity(a.rows()) - &p;
    let leak = a.conjugate_by(&q).hermitian_part();
    if max_eigenvalue(&leak)? > 1e-10 * scale(a).max(scale(b)) {
        return Ok(f64::INFINITY);
    }
    let s = psd_pinv_sqrt(b)?;
    let l = max_eigenvalue(&a.conjugate_by(&s).hermitian_part())?;
    Ok(if l <= 0.0 { f64::NEG_INFINITY } else { l.log2() })
}

/// Max-relative entropy in bits.
pub fn dmax(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension(format!("states of dimension {} and {}", rho.dim(), sigma.dim())));
    }
    Ok(dmax_op(&rho.mat, &sigma.mat)?.max(0.0))
}

fn check_same_shape(n: &ChannelChoi, f: &ChannelChoi) -> Result<()> {
    if (n.d_in, n.d_out) != (f.d_in, f.d_out) {
        return Err(Error::Dimension("channels differ in dimensions".into()));
    }
    Ok(())
}

/// Complete-positivity relaxation: `log2 min { lambda : lambda J(f) >= J(n) }`.
pub fn channel_dmax_cp_upper(n: &ChannelChoi, f: &ChannelChoi) -> Result<BoundReport> {
    check_same_shape(n, f)?;
    let v = if n.choi.max_abs_diff(&f.choi) < 1e-13 { 0.0 } else { dmax_op(&n.choi, &f.choi)?.max(0.0) };
    Ok(BoundReport::new("channel_dmax", v, BoundKind::Upper, "choi dominance", 1e-9))
}

fn pure(ket: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::outer(ket, ket)
}

fn seesaw_from(n: &ChannelChoi, f: &ChannelChoi, start: Vec<Complex64>) -> Result<f64> {
    let mut psi = start;
    let mut best = f64::NEG_INFINITY;
    for _ in 0..80 {
        let rho = pure(&psi);
        let a = n.apply_op(&rho).hermitian_part();
        let b = f.apply_op(&rho).hermitian_part();
        let (mu, w) = generalized_max(&a, &b)?;
        let v = if mu.is_infinite() { f64::INFINITY } else { mu.max(1e-300).log2() };
        if v == f64::INFINITY {
            return Ok(v);
        }
        if v <= best + 1e-12 {
            break;
        }
        best = v;
        let ww = pure(&w);
        let (_, next) = generalized_max(&n.adjoint_apply(&ww).hermitian_part(), &f.adjoint_apply(&ww).hermitian_part())?;
        psi = next;
    }
    Ok(best)
}

/// Trivial-ancilla lower bound: the best pure input found by alternating the output witness
/// and the input state, each a generalized Rayleigh-quotient maximization.
pub fn channel_dmax_input_lower(n: &ChannelChoi, f: &ChannelChoi, restarts: usize, seed: u64) -> Result<BoundReport> {
    check_same_shape(n, f)?;
    let d = n.d_in;
    let total = restarts.max(1) + d;
    let values: Vec<Result<f64>> = (0..total)
        .into_par_iter()
        .map(|k| {
            let start = if k < d {
                crate::kernel::basis_vector(d, k)
            } else {
                haar_ket(d, &mut child_rng(seed, k as u64))
            };
            seesaw_from(n, f, start)
        })
        .collect();
    let mut best = 0.0f64;
    for v in values {
        best = best.max(v?);
    }
    Ok(BoundReport::new(
        "channel_dmax",
        best,
        BoundKind::Lower,
        format!("pure-input see-saw ({total} starts)"),
        1e-9,
    ))
}

fn spectrum_weight(rho: &ComplexMatrix, sigma: &ComplexMatrix, omega: f64) -> Result<f64> {
    let m = (&sigma.scale_real(omega.exp2()) - rho).hermitian_part();
    let e = herm_eig(&m)?;
    let tol = 1e-12 * m.max_abs().max(1.0);
    let p = e.projector(|x| x >= -tol);
    Ok(p.trace_product(rho).re)
}

/// `sup { w : tr(rho P_w) <= delta }` in bits, with `P_w` the projector onto the
/// non-negative eigenspace of `2^w sigma - rho`. Searched over `[-64, 64]`; returns
/// negative infinity when no point qualifies and infinity when the top of the range does.
pub fn info_spectrum_re(rho: &DensityMatrix, sigma: &DensityMatrix, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside [0, 1)")));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension("states differ in dimension".into()));
    }
    const LO: f64 = -64.0;
    const HI: f64 = 64.0;
    let f = |w: f64| spectrum_weight(&rho.mat, &sigma.mat, w);
    let mut critical = vec![];
    if crate::kernel::min_eigenvalue(&sigma.mat)? > 1e-12 {
        let s = psd_pinv_sqrt(&sigma.mat)?;
        for mu in herm_eig(&rho.mat.conjugate_by(&s).hermitian_part())?.values {
            if mu > 0.0 {
                let w = mu.log2();
                if (LO..=HI).contains(&w) {
                    critical.push(w);
                }
            }
        }
    }
    let mut pts: Vec<f64> = (0..=1024).map(|k| LO + (HI - LO) * k as f64 / 1024.0).collect();
    pts.extend(&critical);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let vals: Vec<f64> = pts.iter().map(|&w| f(w)).collect::<Result<_>>()?;
    let ok = |v: f64| v <= delta + 1e-12;
    let Some(i) = (0..pts.len()).rev().find(|&i| ok(vals[i])) else {
        return Ok(f64::NEG_INFINITY);
    };
    if i + 1 == pts.len() {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (pts[i], pts[i + 1]);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if ok(f(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(critical.iter().copied().find(|c| (c - hi).abs() < 1e-8).unwrap_or(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{constant, dephasing, depolarizing};
    use crate::quantum::random::{random_density, rng};
    use crate::quantum::plus_state;
    use proptest::prelude::*;

    #[test]
    fn dmax_examples() {
        let r = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        assert!(dmax(&r, &r).unwrap().abs() < 1e-12);
        let v = dmax(&DensityMatrix::basis(2, 0), &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(dmax(&plus_state(), &DensityMatrix::basis(2, 0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn cp_upper_examples() {
        let id = ChannelChoi::identity(2);
        let c = constant(&DensityMatrix::maximally_mixed(2), 2);
        assert!((channel_dmax_cp_upper(&id, &c).unwrap().value - 2.0).abs() < 1e-10);
        assert_eq!(channel_dmax_cp_upper(&id, &id).unwrap().value, 0.0);
        let d = dephasing(2, None).unwrap();
        assert_eq!(channel_dmax_cp_upper(&d, &d).unwrap().value, 0.0);
    }

    #[test]
    fn input_lower_examples() {
        let id = ChannelChoi::identity(2);
        let c = constant(&DensityMatrix::maximally_mixed(2), 2);
        let lo = channel_dmax_input_lower(&id, &c, 4, 1).unwrap();
        assert!((lo.value - 1.0).abs() < 1e-9, "{}", lo.value);
        assert!(channel_dmax_input_lower(&id, &id, 4, 1).unwrap().value.abs() < 1e-9);
        let a = channel_dmax_input_lower(&depolarizing(2, 0.3).unwrap(), &c, 6, 9).unwrap();
        let b = channel_dmax_input_lower(&depolarizing(2, 0.3).unwrap(), &c, 6, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn info_spectrum_examples() {
        let r = DensityMatrix::diagonal(&[0.3, 0.7]).unwrap();
        for &d in &[0.0, 0.2, 0.9] {
            assert!(info_spectrum_re(&r, &r, d).unwrap().abs() < 1e-8);
        }
        let v = info_spectrum_re(&DensityMatrix::basis(2, 0), &DensityMatrix::maximally_mixed(2), 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-8, "{v}");
        let w = info_spectrum_re(&plus_state(), &DensityMatrix::maximally_mixed(2), 0.3).unwrap();
        assert!((w - 1.0).abs() < 1e-8, "{w}");
        assert!(info_spectrum_re(&r, &r, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn spectrum_below_dmax(seed in 0u64..100_000) {
            let mut g = rng(seed);
            let rho = random_density(3, 3, &mut g);
            let sigma = random_density(3, 3, &mut g);
            let s = info_spectrum_re(&rho, &sigma, 0.0).unwrap();
            prop_assert!(s <= dmax(&rho, &sigma).unwrap() + 1e-8);
        }

        #[test]
        fn dmax_positive_and_contracting(seed in 0u64..100_000) {
            let mut g = rng(seed);
            let rho = random_density(2, 2, &mut g);
            let sigma = random_density(2, 2, &mut g);
            let e = ChannelChoi::from_kraus(&crate::quantum::random::haar_kraus(2, 3, 2, &mut g)).unwrap();
            let before = dmax(&rho, &sigma).unwrap();
            prop_assert!(before > 1e-6);
            let after = dmax(&e.apply(&rho).unwrap(), &e.apply(&sigma).unwrap()).unwrap();
            prop_assert!(after <= before + 1e-8);
        }

        #[test]
        fn lower_never_exceeds_upper(seed in 0u64..100_000) {
            let mut g = rng(seed);
            let n = ChannelChoi::from_kraus(&crate::quantum::random::haar_kraus(2, 2, 2, &mut g)).unwrap();
            let f = crate::channels::compose(&dephasing(2, None).unwrap(),
                &ChannelChoi::from_kraus(&crate::quantum::random::haar_kraus(2, 2, 3, &mut g)).unwrap()).unwrap();
            let lo = channel_dmax_input_lower(&n, &f, 3, seed).unwrap().value;
            let up = channel_dmax_cp_upper(&n, &f).unwrap().value;
            prop_assert!(lo <= up + 1e-6, "{lo} > {up}");
        }
    }
}
