//! Quantum channels in the Choi representation.
//!
//! `J(E) = sum_ij E(|i><j|) (x) |i><j|` with the output factor first and no normalization,
//! so `E(rho) = tr_in[J (I (x) rho^T)]`, trace preservation reads `tr_out J = I` and
//! `(E (x) id)(Phi+) = J / d_in`.

mod diamond;
mod group;

pub use diamond::{diamond_distance, DiamondMode, DiamondReport};
pub use group::UnitaryGroup;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{herm_eig, kron, partial_trace, permute_subsystems, r, ComplexMatrix, ZERO};
use crate::quantum::{max_entangled, DensityMatrix};
use crate::tolerance::DEFAULT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelChoi {
    pub d_in: usize,
    pub d_out: usize,
    pub choi: ComplexMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpDefect {
    /// Smallest Choi eigenvalue (negative means not CP).
    pub min_eigenvalue: f64,
    /// Max entry of `tr_out J - I`.
    pub trace_defect: f64,
}

impl ChannelChoi {
    /// Validated constructor: `choi` must be Hermitian, PSD and trace preserving to tolerance.
    pub fn new(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        let ch = Self::from_choi_unchecked(d_in, d_out, choi)?;
        ch.validate()?;
        Ok(ch)
    }

    pub fn from_choi_unchecked(d_in: usize, d_out: usize, choi: ComplexMatrix) -> Result<Self> {
        if !choi.is_square() || choi.rows() != d_in * d_out {
            return Err(Error::Dimension(format!(
                "Choi matrix {}x{} for d_in {d_in}, d_out {d_out}",
                choi.rows(),
                choi.cols()
            )));
        }
        Ok(Self { d_in, d_out, choi })
    }

    pub fn validate(&self) -> Result<()> {
        let defect = self.choi.hermiticity_defect();
        if defect > DEFAULT.hermitian * self.choi.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let d = self.cptp_defect()?;
        if d.min_eigenvalue < -DEFAULT.psd {
            return Err(Error::InvalidChannel(format!("not CP (min Choi eigenvalue {:.3e})", d.min_eigenvalue)));
        }
        if d.trace_defect > 1e-9 {
            return Err(Error::InvalidChannel(format!("not trace preserving (defect {:.3e})", d.trace_defect)));
        }
        Ok(())
    }

    pub fn cptp_defect(&self) -> Result<CptpDefect> {
        let min_eigenvalue = herm_eig(&self.choi.hermitian_part())?.min();
        let t = partial_trace(&self.choi, &[self.d_out, self.d_in], &[1])?;
        let trace_defect = t.max_abs_diff(&ComplexMatrix::identity(self.d_in));
        Ok(CptpDefect { min_eigenvalue, trace_defect })
    }

    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let Some(k0) = kraus.first() else {
            return Err(Error::InvalidParameter("no Kraus operators".into()));
        };
        let (d_out, d_in) = (k0.rows(), k0.cols());
        let n = d_in * d_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for k in kraus {
            if (k.rows(), k.cols()) != (d_out, d_in) {
                return Err(Error::Dimension("Kraus operators differ in shape".into()));
            }
            // row-major data of K is exactly sum_i K|i> (x) |i>
            choi += &ComplexMatrix::outer(k.data(), k.data());
        }
        Self::new(d_in, d_out, choi)
    }

    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        let defect = u.unitarity_defect();
        if defect > 1e-9 {
            return Err(Error::NotUnitary(defect));
        }
        Self::from_kraus(std::slice::from_ref(u))
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(&ComplexMatrix::identity(d)).expect("identity channel")
    }

    /// Channel from a linear map, evaluated on matrix units.
    pub fn from_linear_map(d_in: usize, d_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        let n = d_in * d_out;
        let mut choi = ComplexMatrix::zeros(n, n);
        for i in 0..d_in {
            for j in 0..d_in {
                let out = f(&ComplexMatrix::unit(d_in, i, j));
                if out.rows() != d_out || !out.is_square() {
                    return Err(Error::Dimension("map output has wrong dimension".into()));
                }
                for a in 0..d_out {
                    for b in 0..d_out {
                        choi[(a * d_in + i, b * d_in + j)] = out[(a, b)];
                    }
                }
            }
        }
        Self::new(d_in, d_out, choi.hermitian_part())
    }

    /// `E(|i><j|)`.
    pub fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let di = self.d_in;
        ComplexMatrix::from_fn(self.d_out, self.d_out, |a, b| self.choi[(a * di + i, b * di + j)])
    }

    /// Applies the map to an arbitrary operator.
    pub fn apply_op(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.rows(), self.d_in, "input dimension mismatch");
        let (di, dout) = (self.d_in, self.d_out);
        let mut out = ComplexMatrix::zeros(dout, dout);
        for a in 0..dout {
            for b in 0..dout {
                let mut s = ZERO;
                for i in 0..di {
                    let row = self.choi.row(a * di + i);
                    for j in 0..di {
                        let xij = x[(i, j)];
                        if xij != ZERO {
                            s += row[b * di + j] * xij;
                        }
                    }
                }
                out[(a, b)] = s;
            }
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_in {
            return Err(Error::Dimension(format!("state dimension {} for channel input {}", rho.dim(), self.d_in)));
        }
        Ok(DensityMatrix::trusted(vec![self.d_out], self.apply_op(&rho.mat).hermitian_part()))
    }

    /// Heisenberg-picture map `E^dagger(Y)`.
    pub fn adjoint_apply(&self, y: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(y.rows(), self.d_out, "output dimension mismatch");
        let (di, dout) = (self.d_in, self.d_out);
        let mut out = ComplexMatrix::zeros(di, di);
        for a in 0..dout {
            for b in 0..dout {
                let yba = y[(b, a)];
                if yba == ZERO {
                    continue;
                }
                for i in 0..di {
                    for j in 0..di {
                        out[(j, i)] += yba * self.choi[(a * di + i, b * di + j)];
                    }
                }
            }
        }
        out
    }

    /// `(E (x) id)(Phi+)`.
    pub fn choi_state(&self) -> DensityMatrix {
        DensityMatrix::trusted(vec![self.d_out, self.d_in], self.choi.scale_real(1.0 / self.d_in as f64))
    }

    pub fn distance_choi(&self, other: &Self) -> f64 {
        crate::kernel::trace_norm(&(&self.choi - &other.choi))
    }
}

/// `outer o inner`.
pub fn compose(outer: &ChannelChoi, inner: &ChannelChoi) -> Result<ChannelChoi> {
    if inner.d_out != outer.d_in {
        return Err(Error::Dimension(format!("cannot compose {} -> {} after {} -> {}", outer.d_in, outer.d_out, inner.d_in, inner.d_out)));
    }
    let (di, dout) = (inner.d_in, outer.d_out);
    let n = di * dout;
    let mut choi = ComplexMatrix::zeros(n, n);
    for i in 0..di {
        for j in 0..di {
            let out = outer.apply_op(&inner.block(i, j));
            for a in 0..dout {
                for b in 0..dout {
                    choi[(a * di + i, b * di + j)] = out[(a, b)];
                }
            }
        }
    }
    Ok(ChannelChoi { d_in: di, d_out: dout, choi: choi.hermitian_part() })
}

pub fn tensor(e: &ChannelChoi, f: &ChannelChoi) -> ChannelChoi {
    let k = kron(&e.choi, &f.choi);
    let choi = permute_subsystems(&k, &[e.d_out, e.d_in, f.d_out, f.d_in], &[0, 2, 1, 3]).expect("tensor dims");
    ChannelChoi { d_in: e.d_in * f.d_in, d_out: e.d_out * f.d_out, choi }
}

pub fn tensor_power(e: &ChannelChoi, k: usize) -> ChannelChoi {
    let mut out = ChannelChoi::identity(1);
    for _ in 0..k {
        out = tensor(&out, e);
    }
    out
}

/// Convex combination `sum_k w_k E_k`.
pub fn mix(weights: &[f64], channels: &[ChannelChoi]) -> Result<ChannelChoi> {
    let Some(first) = channels.first() else {
        return Err(Error::InvalidParameter("no channels to mix".into()));
    };
    if weights.len() != channels.len() || weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter("mixing weights must be a probability vector".into()));
    }
    let mut choi = ComplexMatrix::zeros(first.choi.rows(), first.choi.cols());
    for (w, ch) in weights.iter().zip(channels) {
        if (ch.d_in, ch.d_out) != (first.d_in, first.d_out) {
            return Err(Error::Dimension("mixed channels differ in dimensions".into()));
        }
        choi.axpy(r(*w), &ch.choi);
    }
    Ok(ChannelChoi { d_in: first.d_in, d_out: first.d_out, choi })
}

/// Completely dephasing channel in the orthonormal basis given by the columns of `basis`.
pub fn dephasing(d: usize, basis: Option<&ComplexMatrix>) -> Result<ChannelChoi> {
    let u = basis.cloned().unwrap_or_else(|| ComplexMatrix::identity(d));
    if u.rows() != d {
        return Err(Error::Dimension("dephasing basis has wrong dimension".into()));
    }
    let defect = u.unitarity_defect();
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    let kraus: Vec<ComplexMatrix> = (0..d).map(|k| ComplexMatrix::outer(&u.col(k), &u.col(k))).collect();
    ChannelChoi::from_kraus(&kraus)
}

/// `(1 - p) id + p * (X -> tr(X) I/d)`.
pub fn depolarizing(d: usize, p: f64) -> Result<ChannelChoi> {
    let lim = d as f64 * d as f64 / (d as f64 * d as f64 - 1.0);
    if !(0.0..=lim).contains(&p) {
        return Err(Error::InvalidParameter(format!("depolarizing parameter {p} outside [0, {lim}]")));
    }
    let id = ChannelChoi::identity(d);
    let choi = id.choi.scale_real(1.0 - p) + ComplexMatrix::identity(d * d).scale_real(p / d as f64);
    ChannelChoi::new(d, d, choi)
}

/// `X -> tr(X) sigma`.
pub fn constant(sigma: &DensityMatrix, d_in: usize) -> ChannelChoi {
    ChannelChoi { d_in, d_out: sigma.dim(), choi: kron(&sigma.mat, &ComplexMatrix::identity(d_in)) }
}

/// Twirl over `U (x) U*`: projects onto isotropic states, preserving the overlap with `Phi+`.
pub fn twirl_uu_star(d: usize) -> ChannelChoi {
    let phi = max_entangled(d).mat;
    let n = d * d;
    let rest = (ComplexMatrix::identity(n) - phi.clone()).scale_real(1.0 / (n as f64 - 1.0));
    ChannelChoi::from_linear_map(n, n, |x| {
        let f = phi.trace_product(x);
        let t = x.trace();
        phi.scale(f) + rest.scale(t - f)
    })
    .expect("isotropic twirl")
}

/// Group average `(1/|G|) sum_g U_g X U_g^dagger`.
pub fn twirl_group(g: &UnitaryGroup) -> Result<ChannelChoi> {
    match g {
        UnitaryGroup::UUStar { d } => Ok(twirl_uu_star(*d)),
        UnitaryGroup::Finite { elements, .. } => {
            let w = (1.0 / elements.len() as f64).sqrt();
            let kraus: Vec<ComplexMatrix> = elements.iter().map(|u| u.scale_real(w)).collect();
            ChannelChoi::from_kraus(&kraus)
        }
    }
}

/// Parses names such as `identity:2`, `dephasing:4`, `depolarizing:2:0.3`.
pub fn parse_named(spec: &str) -> Result<ChannelChoi> {
    let parts: Vec<&str> = spec.split(':').collect();
    let dim = |k: usize| -> Result<usize> {
        parts
            .get(k)
            .and_then(|s| s.parse().ok())
            .filter(|&d: &usize| d >= 1)
            .ok_or_else(|| Error::InvalidParameter(format!("channel {spec}: missing or invalid dimension")))
    };
    let num = |k: usize| -> Result<f64> {
        parts
            .get(k)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::InvalidParameter(format!("channel {spec}: missing or invalid parameter")))
    };
    let expect = |n: usize| -> Result<()> {
        if parts.len() != n {
            return Err(Error::InvalidParameter(format!("channel {spec}: expected {} fields", n)));
        }
        Ok(())
    };
    match parts[0] {
        "identity" => {
            expect(2)?;
            Ok(ChannelChoi::identity(dim(1)?))
        }
        "dephasing" => {
            expect(2)?;
            dephasing(dim(1)?, None)
        }
        "depolarizing" => {
            expect(3)?;
            depolarizing(dim(1)?, num(2)?)
        }
        "maximally-mixed" => {
            expect(2)?;
            let d = dim(1)?;
            Ok(constant(&DensityMatrix::maximally_mixed(d), d))
        }
        "isotropic-twirl" => {
            expect(2)?;
            Ok(twirl_uu_star(dim(1)?))
        }
        other => Err(Error::InvalidParameter(format!("unknown channel name {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{pauli_x, pauli_z, trace_norm};
    use crate::quantum::random::{haar_kraus, random_density, rng};
    use crate::quantum::{max_entangled, plus_state, DensityMatrix};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn random_channel(d_in: usize, d_out: usize, seed: u64) -> ChannelChoi {
        let mut g = rng(seed);
        let k = (d_in + d_out - 1) / d_out + 1;
        ChannelChoi::from_kraus(&haar_kraus(d_in, d_out, k, &mut g)).unwrap()
    }

    #[test]
    fn apply_agrees_with_kraus_sum() {
        let mut g = rng(11);
        let ks = haar_kraus(3, 2, 3, &mut g);
        let ch = ChannelChoi::from_kraus(&ks).unwrap();
        let rho = random_density(3, 3, &mut g);
        let mut want = ComplexMatrix::zeros(2, 2);
        for k in &ks {
            want += &rho.mat.conjugate_by(k);
        }
        assert!(ch.apply(&rho).unwrap().mat.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn adjoint_is_dual_to_apply() {
        let mut g = rng(12);
        let ch = random_channel(3, 2, 4);
        let rho = random_density(3, 3, &mut g);
        let y = random_density(2, 2, &mut g);
        let lhs = y.mat.trace_product(&ch.apply(&rho).unwrap().mat);
        let rhs = ch.adjoint_apply(&y.mat).trace_product(&rho.mat);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn depolarizing_on_ground_state() {
        for &p in &[0.0, 0.3, 1.0] {
            let out = depolarizing(2, p).unwrap().apply(&DensityMatrix::basis(2, 0)).unwrap();
            assert!(out.mat.max_abs_diff(&ComplexMatrix::from_real_diag(&[1.0 - p / 2.0, p / 2.0])) < 1e-14);
        }
        assert!(depolarizing(2, 1.5).is_err());
    }

    #[test]
    fn dephasing_kills_coherences_in_given_basis() {
        let out = dephasing(2, None).unwrap().apply(&plus_state()).unwrap();
        assert!(out.mat.max_abs_diff(&DensityMatrix::maximally_mixed(2).mat) < 1e-15);
        let s = 0.5f64.sqrt();
        let hb = ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).unwrap();
        let out = dephasing(2, Some(&hb)).unwrap().apply(&plus_state()).unwrap();
        assert!(out.mat.max_abs_diff(&plus_state().mat) < 1e-14);
    }

    #[test]
    fn isotropic_twirl_of_product_state() {
        let t = twirl_uu_star(2);
        let out = t.apply(&DensityMatrix::basis(4, 0)).unwrap();
        let phi = max_entangled(2).mat;
        assert_abs_diff_eq!(out.mat.trace_product(&phi).re, 0.5, epsilon = 1e-14);
        let want = phi.scale_real(0.5) + (ComplexMatrix::identity(4) - phi.clone()).scale_real(0.5 / 3.0);
        assert!(out.mat.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn isotropic_twirl_matches_haar_average_on_invariants() {
        // U (x) U* invariance: twirl commutes with conjugation by U (x) conj(U)
        let mut g = rng(21);
        let u = crate::quantum::random::haar_unitary(2, &mut g);
        let w = kron(&u, &u.conj());
        let rho = random_density(4, 4, &mut g);
        let t = twirl_uu_star(2);
        let a = t.apply_op(&rho.mat.conjugate_by(&w));
        let b = t.apply_op(&rho.mat);
        assert!(a.max_abs_diff(&b) < 1e-13);
        assert!(b.conjugate_by(&w).max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn z_group_twirl_is_dephasing() {
        let g = UnitaryGroup::finite(vec![ComplexMatrix::identity(2), pauli_z()]).unwrap();
        let t = twirl_group(&g).unwrap();
        assert!(t.choi.max_abs_diff(&dephasing(2, None).unwrap().choi) < 1e-14);
    }

    #[test]
    fn compose_matches_sequential_application() {
        let a = random_channel(2, 3, 1);
        let b = random_channel(3, 2, 2);
        let ba = compose(&b, &a).unwrap();
        let rho = random_density(2, 2, &mut rng(9));
        let seq = b.apply(&a.apply(&rho).unwrap()).unwrap();
        assert!(ba.apply(&rho).unwrap().mat.max_abs_diff(&seq.mat) < 1e-12);
        assert!(compose(&a, &a).is_err());
    }

    #[test]
    fn tensor_acts_factorwise() {
        let a = random_channel(2, 3, 5);
        let b = random_channel(3, 2, 6);
        let ab = tensor(&a, &b);
        ab.validate().unwrap();
        let mut g = rng(10);
        let (r1, r2) = (random_density(2, 2, &mut g), random_density(3, 2, &mut g));
        let out = ab.apply(&r1.tensor(&r2)).unwrap();
        let want = kron(&a.apply(&r1).unwrap().mat, &b.apply(&r2).unwrap().mat);
        assert!(out.mat.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn constant_channel_outputs_fixed_state() {
        let sigma = DensityMatrix::diagonal(&[0.7, 0.3]).unwrap();
        let ch = constant(&sigma, 3);
        ch.validate().unwrap();
        let out = ch.apply(&random_density(3, 1, &mut rng(2))).unwrap();
        assert!(out.mat.max_abs_diff(&sigma.mat) < 1e-14);
    }

    #[test]
    fn rejects_non_cptp() {
        let m = ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 2.0]);
        assert!(ChannelChoi::new(2, 2, m).is_err());
        let m = ComplexMatrix::from_real_diag(&[1.0, -0.1, 0.1, 1.0]);
        assert!(ChannelChoi::new(2, 2, m).is_err());
    }

    #[test]
    fn named_channels_parse() {
        assert_eq!(parse_named("dephasing:4").unwrap().d_in, 4);
        let dp = parse_named("depolarizing:2:0.3").unwrap();
        assert!(dp.choi.max_abs_diff(&depolarizing(2, 0.3).unwrap().choi) < 1e-15);
        assert!(parse_named("dephasing").is_err());
        assert!(parse_named("warp:3").is_err());
        assert!(parse_named("identity:2:1").is_err());
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = depolarizing(2, 0.25).unwrap();
        let s = serde_json::to_string(&ch).unwrap();
        let back: ChannelChoi = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn unitary_channel_of_x() {
        let ch = ChannelChoi::unitary(&pauli_x()).unwrap();
        let out = ch.apply(&DensityMatrix::basis(2, 0)).unwrap();
        assert!(out.mat.max_abs_diff(&DensityMatrix::basis(2, 1).mat) < 1e-15);
        assert!(trace_norm(&ch.choi) - 2.0 < 1e-12);
    }

    proptest! {
        #[test]
        fn random_channels_are_cptp_and_preserve_states(seed in 0u64..500) {
            let ch = random_channel(2, 3, seed);
            let d = ch.cptp_defect().unwrap();
            prop_assert!(d.min_eigenvalue > -1e-9);
            prop_assert!(d.trace_defect < 1e-10);
            let out = ch.apply(&random_density(2, 1, &mut rng(seed + 1))).unwrap();
            prop_assert!(DensityMatrix::new(vec![3], out.mat).is_ok());
        }
    }
}
