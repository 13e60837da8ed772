//! Codes restricted to orthonormal maximally entangled encodings and decoders, and the
//! preservability bounds they obey.

use num_complex::Complex64;
use rayon::prelude::*;

use super::TIE;
use crate::channels::{constant, dephasing, tensor, ChannelChoi};
use crate::error::{Error, Result};
use crate::kernel::{kron, ComplexMatrix};
use crate::monotones::{channel_dmax_cp_upper, smoothed_preservability_upper, BoundKind, BoundReport};
use crate::quantum::random::{child_rng, haar_unitary};
use crate::quantum::{max_entangled_from_unitary_ket, weyl_unitaries, DensityMatrix};
use crate::resources::ResourceSpec;

/// `best[k - 1]` is the largest total weight of a matching with `k` pairs in the bipartite
/// graph with weights `w[row][col]`, for `k = 1..=min(rows, cols)`. Successive shortest
/// augmenting paths; each augmentation is optimal for its cardinality.
pub fn max_weight_matchings(w: &[Vec<f64>]) -> Vec<f64> {
    let r = w.len();
    let c = w.first().map_or(0, |x| x.len());
    let mut row_match: Vec<Option<usize>> = vec![None; r];
    let mut col_match: Vec<Option<usize>> = vec![None; c];
    let mut out = Vec::with_capacity(r.min(c));
    let mut total = 0.0;
    for _ in 0..r.min(c) {
        let mut dr: Vec<f64> = row_match.iter().map(|m| if m.is_none() { 0.0 } else { f64::INFINITY }).collect();
        let mut dc = vec![f64::INFINITY; c];
        let mut prev = vec![usize::MAX; c];
        loop {
            let mut changed = false;
            for i in 0..r {
                if !dr[i].is_finite() {
                    continue;
                }
                for j in 0..c {
                    if row_match[i] == Some(j) {
                        continue;
                    }
                    let nd = dr[i] - w[i][j];
                    if nd < dc[j] - 1e-14 {
                        dc[j] = nd;
                        prev[j] = i;
                        changed = true;
                    }
                }
            }
            for j in 0..c {
                if let Some(i) = col_match[j] {
                    let nd = dc[j] + w[i][j];
                    if nd < dr[i] - 1e-14 {
                        dr[i] = nd;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let Some(end) = (0..c).filter(|&j| col_match[j].is_none() && dc[j].is_finite()).min_by(|&a, &b| dc[a].total_cmp(&dc[b]))
        else {
            break;
        };
        total -= dc[end];
        let mut j = end;
        loop {
            let i = prev[j];
            let old = row_match[i];
            row_match[i] = Some(j);
            col_match[j] = Some(i);
            match old {
                Some(j2) => j = j2,
                None => break,
            }
        }
        out.push(total);
    }
    out
}

fn local_dim(n: &ChannelChoi) -> Result<usize> {
    let d = (n.d_in as f64).sqrt().round() as usize;
    if d * d != n.d_in || n.d_in != n.d_out || d < 2 {
        return Err(Error::Dimension(format!("expected a d^2 -> d^2 bipartite channel, got {} -> {}", n.d_in, n.d_out)));
    }
    Ok(d)
}

fn weyl_kets(d: usize, local: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    weyl_unitaries(d).iter().map(|u| local.mul_vec(&max_entangled_from_unitary_ket(u))).collect()
}

#[derive(Debug, Clone)]
pub struct CmeCapacity {
    pub report: BoundReport,
    /// Largest count reached; zero when even a single pair misses the target.
    pub m: usize,
    /// Best success found for `M = 1..=d^2`.
    pub success: Vec<f64>,
}

/// Capacity with maximally entangled codes. Encoders and decoders range over Weyl bases under
/// seeded local unitaries (rotation 0 is the standard basis); for each pair of frames the best
/// `M`-subsets and their matching follow from a maximum-weight matching of the overlap table.
pub fn cme_capacity(n: &ChannelChoi, epsilon: f64, rotations: usize, seed: u64) -> Result<CmeCapacity> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    let d = local_dim(n)?;
    let tables: Vec<Vec<f64>> = (0..rotations.max(1))
        .into_par_iter()
        .map(|r| {
            let (enc, dec) = if r == 0 {
                let id = ComplexMatrix::identity(d * d);
                (id.clone(), id)
            } else {
                let mut g = child_rng(seed, r as u64);
                let u = kron(&haar_unitary(d, &mut g), &haar_unitary(d, &mut g));
                let v = if r % 2 == 1 { u.clone() } else { kron(&haar_unitary(d, &mut g), &haar_unitary(d, &mut g)) };
                (u, v)
            };
            let ins = weyl_kets(d, &enc);
            let outs = weyl_kets(d, &dec);
            let w: Vec<Vec<f64>> = ins
                .iter()
                .map(|a| {
                    let y = n.apply_op(&ComplexMatrix::outer(a, a));
                    outs.iter().map(|b| y.expectation(b).re).collect()
                })
                .collect();
            max_weight_matchings(&w)
        })
        .collect();
    let mut success = vec![0.0f64; d * d];
    for t in &tables {
        for (k, v) in t.iter().enumerate() {
            success[k] = success[k].max(v / (k + 1) as f64);
        }
    }
    let m = (1..=d * d).rev().find(|&m| success[m - 1] >= 1.0 - epsilon - TIE).unwrap_or(0);
    let value = if m == 0 { 0.0 } else { (m as f64).log2() };
    let method = if m == 0 {
        "no maximally entangled code reached the target".to_string()
    } else {
        format!("Weyl frames under {} local rotations, M = {m}, success {:.9}", rotations.max(1), success[m - 1])
    };
    Ok(CmeCapacity { report: BoundReport::new("cme_capacity", value, BoundKind::Lower, method, TIE), m, success })
}

#[derive(Debug, Clone)]
pub struct Theorem4Check {
    pub alpha: f64,
    pub cme: BoundReport,
    pub preservability: BoundReport,
    pub rhs: f64,
    /// `rhs - alpha * cme`; negative means a violation.
    pub margin: f64,
    pub holds: bool,
}

fn finish_check(alpha: f64, cme: BoundReport, p: BoundReport, epsilon: f64, delta: f64) -> Theorem4Check {
    let rhs = p.value - (1.0 - epsilon - delta).log2();
    let margin = rhs - alpha * cme.value;
    Theorem4Check { alpha, cme, preservability: p, rhs, margin, holds: margin >= -1e-9 }
}

fn check_errors(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon >= 0.0 && delta >= 0.0 && epsilon + delta < 1.0) {
        return Err(Error::InvalidParameter(format!("need epsilon, delta >= 0 and epsilon + delta < 1 (got {epsilon}, {delta})")));
    }
    Ok(())
}

/// `cme <= P^delta + log2(1 / (1 - epsilon - delta))` for athermality.
pub fn theorem4_check(spec: &ResourceSpec, n: &ChannelChoi, epsilon: f64, delta: f64) -> Result<Theorem4Check> {
    check_errors(epsilon, delta)?;
    if !matches!(spec, ResourceSpec::Athermality { .. }) {
        return Err(Error::InvalidParameter(format!(
            "{} has no maximally entangled capacity bound; use athermality or the entanglement check",
            spec.name()
        )));
    }
    local_dim(n)?;
    let p = smoothed_preservability_upper(spec, n, delta, 5, None)?.report;
    let cme = cme_capacity(n, epsilon, 8, 0)?.report;
    Ok(finish_check(1.0, cme, p, epsilon, delta))
}

/// Upper bound on the entanglement preservability of a bipartite channel: the best
/// dominance factor over the entanglement-breaking references `I/d^2`, `Delta (x) id`,
/// `id (x) Delta` and `Delta (x) Delta`.
pub fn entanglement_preservability_upper(n: &ChannelChoi) -> Result<BoundReport> {
    let d = local_dim(n)?;
    let deph = dephasing(d, None)?;
    let id = ChannelChoi::identity(d);
    let refs = [
        ("maximally mixed output", constant(&DensityMatrix::maximally_mixed(d * d), d * d)),
        ("local dephasing on A", tensor(&deph, &id)),
        ("local dephasing on B", tensor(&id, &deph)),
        ("local dephasing on both", tensor(&deph, &deph)),
    ];
    let mut best: Option<BoundReport> = None;
    for (label, f) in &refs {
        let r = channel_dmax_cp_upper(n, f)?;
        if best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(BoundReport { method: format!("cp dominance by {label}"), ..r });
        }
    }
    Ok(best.expect("nonempty reference family").renamed("entanglement_preservability"))
}

/// `cme / 2 <= P + log2(1 / (1 - epsilon - delta))` for entanglement-family resources. The
/// unsmoothed preservability is used, which only weakens the right-hand side's tightness.
/// The caller is responsible for the channel being entanglement non-generating.
pub fn theorem4_check_entanglement(n: &ChannelChoi, epsilon: f64, delta: f64) -> Result<Theorem4Check> {
    check_errors(epsilon, delta)?;
    let p = entanglement_preservability_upper(n)?;
    let cme = cme_capacity(n, epsilon, 8, 0)?.report;
    Ok(finish_check(0.5, cme, p, epsilon, delta))
}

#[derive(Debug, Clone)]
pub struct FefThresholdCheck {
    pub preservability: BoundReport,
    /// `log2((1 - epsilon) d)`.
    pub threshold: f64,
    /// Strict inequality `P_upper < threshold`; when true no maximally entangled state can be
    /// maintained with error below `epsilon`.
    pub condition: bool,
    pub cme_m: usize,
    /// False only if the condition holds and a maintained pair was nevertheless found.
    pub consistent: bool,
}

pub fn fef_threshold_check(n: &ChannelChoi, epsilon: f64) -> Result<FefThresholdCheck> {
    check_errors(epsilon, 0.0)?;
    let d = local_dim(n)?;
    let p = entanglement_preservability_upper(n)?;
    let threshold = ((1.0 - epsilon) * d as f64).log2();
    let condition = p.value < threshold;
    let cme = cme_capacity(n, epsilon, 8, 0)?;
    let consistent = !condition || cme.m == 0;
    Ok(FefThresholdCheck { preservability: p, threshold, condition, cme_m: cme.m, consistent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::mix;
    use crate::quantum::random::{haar_kraus, random_probabilities, rng};
    use crate::quantum::ThermalContext;
    use proptest::prelude::*;

    fn brute_force(w: &[Vec<f64>], k: usize) -> f64 {
        fn go(w: &[Vec<f64>], row: usize, k: usize, used: &mut Vec<bool>) -> f64 {
            if k == 0 {
                return 0.0;
            }
            if w.len() - row < k {
                return f64::NEG_INFINITY;
            }
            let mut best = go(w, row + 1, k, used);
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.max(w[row][j] + go(w, row + 1, k - 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(w, 0, k, &mut vec![false; w[0].len()])
    }

    #[test]
    fn identity_keeps_the_bell_basis() {
        let c = cme_capacity(&ChannelChoi::identity(4), 0.0, 2, 0).unwrap();
        assert_eq!(c.m, 4);
        assert_eq!(c.report.value, 2.0);
    }

    #[test]
    fn constant_channel_reaches_the_best_overlap_only() {
        let g = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let gg = g.tensor(&g);
        let n = constant(&gg, 4);
        // max over maximally entangled Phi of <Phi|g (x) g|Phi> = (0.49 + 0.09) / 2.
        let f = 0.29;
        assert!((cme_capacity(&n, 0.0, 4, 0).unwrap().success[0] - f).abs() < 1e-9);
        assert_eq!(cme_capacity(&n, 1.0 - f - 0.01, 4, 0).unwrap().m, 0);
        assert!(cme_capacity(&n, 1.0 - f + 0.01, 4, 0).unwrap().m >= 2);
    }

    #[test]
    fn cme_rejects_non_bipartite() {
        assert!(cme_capacity(&ChannelChoi::identity(3), 0.0, 1, 0).is_err());
    }

    #[test]
    fn athermality_check() {
        let spec = ResourceSpec::Athermality { ctx: ThermalContext::from_populations(&[0.5, 0.5]).unwrap() };
        let r = theorem4_check(&spec, &ChannelChoi::identity(4), 0.0, 0.0).unwrap();
        assert!(r.holds && r.margin > 0.0);
        let g = spec.gibbs(4).unwrap();
        let r = theorem4_check(&spec, &constant(&g, 4), 0.1, 0.0).unwrap();
        assert!(r.holds);
        assert!(theorem4_check(&ResourceSpec::coherence(), &ChannelChoi::identity(4), 0.0, 0.0).is_err());
    }

    #[test]
    fn entanglement_check_is_tight_on_identity() {
        let p = entanglement_preservability_upper(&ChannelChoi::identity(4)).unwrap();
        assert!((p.value - 1.0).abs() < 1e-8, "{}", p.value);
        let r = theorem4_check_entanglement(&ChannelChoi::identity(4), 0.0, 0.0).unwrap();
        assert!(r.holds && r.margin.abs() < 1e-7, "{r:?}");
    }

    #[test]
    fn fef_threshold_examples() {
        let deph = dephasing(2, None).unwrap();
        let n = tensor(&deph, &deph);
        let c = fef_threshold_check(&n, 0.0).unwrap();
        assert!(c.condition && c.cme_m == 0 && c.consistent);
        let c = fef_threshold_check(&ChannelChoi::identity(4), 0.0).unwrap();
        assert!(!c.condition && c.consistent);
        assert_eq!(c.cme_m, 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn matchings_match_brute_force(seed in 0u64..10_000, r in 1usize..5, c in 1usize..5) {
            use rand::Rng;
            let mut g = rng(seed);
            let w: Vec<Vec<f64>> = (0..r).map(|_| (0..c).map(|_| g.gen_range(-1.0..1.0)).collect()).collect();
            let m = max_weight_matchings(&w);
            prop_assert_eq!(m.len(), r.min(c));
            for (k, v) in m.iter().enumerate() {
                prop_assert!((v - brute_force(&w, k + 1)).abs() < 1e-9);
            }
        }

        #[test]
        fn product_channels_respect_the_threshold(seed in 0u64..10_000, eps in 0.0f64..0.3) {
            let mut g = rng(seed);
            let parts: Vec<ChannelChoi> = (0..2)
                .map(|_| {
                    let a = ChannelChoi::from_kraus(&haar_kraus(2, 2, 2, &mut g)).unwrap();
                    let b = ChannelChoi::from_kraus(&haar_kraus(2, 2, 2, &mut g)).unwrap();
                    tensor(&a, &b)
                })
                .collect();
            let n = mix(&random_probabilities(2, &mut g), &parts).unwrap();
            let c = fef_threshold_check(&n, eps).unwrap();
            prop_assert!(c.consistent);
            let cme = cme_capacity(&n, eps, 4, seed).unwrap();
            prop_assert!(cme.report.value <= 2.0 + 1e-12);
        }
    }
}
