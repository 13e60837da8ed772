//! States, Hamiltonians, thermal states, measurements and the standard entangled bases.

pub mod random;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{
    basis_vector, c, herm_eig, kron, psd_pinv_sqrt, r, trace_norm, ComplexMatrix, ONE, ZERO,
};
use crate::tolerance::DEFAULT;

/// A density operator on a tensor product of subsystems with dimensions `dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub dims: Vec<usize>,
    pub mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, mat: ComplexMatrix) -> Result<Self> {
        let d: usize = dims.iter().product();
        if !mat.is_square() || mat.rows() != d {
            return Err(Error::Dimension(format!("dims {dims:?} do not match {}x{}", mat.rows(), mat.cols())));
        }
        let scale = mat.max_abs().max(1.0);
        let defect = mat.hermiticity_defect();
        if defect > DEFAULT.hermitian * scale {
            return Err(Error::NotHermitian(defect));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > 1e-9 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let e = herm_eig(&mat)?;
        if e.min() < -DEFAULT.psd {
            return Err(Error::NotPsd(e.min()));
        }
        Ok(Self { dims, mat: mat.hermitian_part() })
    }

    pub fn from_matrix(mat: ComplexMatrix) -> Result<Self> {
        let d = mat.rows();
        Self::new(vec![d], mat)
    }

    /// Builds without validation; used internally for outputs of validated maps.
    pub(crate) fn trusted(dims: Vec<usize>, mat: ComplexMatrix) -> Self {
        Self { dims, mat }
    }

    pub fn pure(ket: &[Complex64]) -> Result<Self> {
        let n = crate::kernel::vec_norm(ket);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("ket norm {n} differs from 1")));
        }
        Ok(Self { dims: vec![ket.len()], mat: ComplexMatrix::outer(ket, ket) })
    }

    pub fn basis(d: usize, k: usize) -> Self {
        Self { dims: vec![d], mat: ComplexMatrix::unit(d, k, k) }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { dims: vec![d], mat: ComplexMatrix::identity(d).scale_real(1.0 / d as f64) }
    }

    pub fn diagonal(p: &[f64]) -> Result<Self> {
        Self::from_matrix(ComplexMatrix::from_real_diag(p))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().product::<usize>() != self.dim() {
            return Err(Error::Dimension(format!("dims {dims:?} do not match dimension {}", self.dim())));
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend(&other.dims);
        Self { dims, mat: kron(&self.mat, &other.mat) }
    }

    pub fn tensor_power(&self, k: usize) -> Self {
        let mut out = Self { dims: vec![], mat: ComplexMatrix::identity(1) };
        for _ in 0..k {
            out = out.tensor(self);
        }
        out
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let mat = crate::kernel::partial_trace(&self.mat, &self.dims, keep)?;
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        Ok(Self { dims: kept.iter().map(|&k| self.dims[k]).collect(), mat })
    }

    pub fn trace_distance(&self, other: &Self) -> f64 {
        trace_norm(&(&self.mat - &other.mat))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        herm_eig(&self.mat).map(|e| e.min()).unwrap_or(f64::NAN)
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).re
    }
}

/// Hamiltonian given by its spectrum and orthonormal eigenbasis (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub energies: Vec<f64>,
    pub eigenbasis: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BasisRepr {
    Named(String),
    Matrix(ComplexMatrix),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HamiltonianRepr {
    energies: Vec<f64>,
    #[serde(default = "computational")]
    basis: BasisRepr,
}

fn computational() -> BasisRepr {
    BasisRepr::Named("computational".into())
}

impl Serialize for Hamiltonian {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.energies.len();
        let basis = if self.eigenbasis == ComplexMatrix::identity(d) {
            computational()
        } else {
            BasisRepr::Matrix(self.eigenbasis.clone())
        };
        HamiltonianRepr { energies: self.energies.clone(), basis }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Hamiltonian {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = HamiltonianRepr::deserialize(d)?;
        let n = repr.energies.len();
        let basis = match repr.basis {
            BasisRepr::Named(s) if s == "computational" => ComplexMatrix::identity(n),
            BasisRepr::Named(s) => return Err(serde::de::Error::custom(format!("unknown basis {s}"))),
            BasisRepr::Matrix(m) => m,
        };
        Hamiltonian::new(repr.energies, basis).map_err(serde::de::Error::custom)
    }
}

impl Hamiltonian {
    pub fn new(energies: Vec<f64>, eigenbasis: ComplexMatrix) -> Result<Self> {
        if energies.is_empty() || energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidParameter("energies must be finite and non-empty".into()));
        }
        if eigenbasis.rows() != energies.len() || !eigenbasis.is_square() {
            return Err(Error::Dimension("eigenbasis size differs from number of energies".into()));
        }
        let defect = eigenbasis.unitarity_defect();
        if defect > 1e-9 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self { energies, eigenbasis })
    }

    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        Self::new(energies.to_vec(), ComplexMatrix::identity(energies.len()))
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_real_diag(&self.energies);
        d.conjugate_by(&self.eigenbasis)
    }

    /// Hamiltonian of `n` non-interacting copies.
    pub fn total(&self, n: usize) -> ComplexMatrix {
        let d = self.dim();
        let h = self.matrix();
        let mut total = ComplexMatrix::zeros(d.pow(n as u32), d.pow(n as u32));
        for k in 0..n {
            let mut term = ComplexMatrix::identity(1);
            for j in 0..n {
                term = kron(&term, &if j == k { h.clone() } else { ComplexMatrix::identity(d) });
            }
            total += &term;
        }
        total
    }
}

/// Thermal data of a system at inverse temperature `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalContext {
    pub hamiltonian: Hamiltonian,
    pub beta: f64,
    pub gamma: DensityMatrix,
    pub p_min: f64,
}

impl ThermalContext {
    pub fn new(hamiltonian: Hamiltonian, beta: f64) -> Result<Self> {
        let gamma = thermal_state(&hamiltonian, beta)?;
        let p_min = thermal_populations(&hamiltonian, beta).into_iter().fold(f64::INFINITY, f64::min);
        Ok(Self { hamiltonian, beta, gamma, p_min })
    }

    /// Diagonal thermal state with the given populations, realized at `beta = 1`.
    pub fn from_populations(p: &[f64]) -> Result<Self> {
        if p.iter().any(|&x| x <= 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("populations must be positive and sum to 1".into()));
        }
        let energies: Vec<f64> = p.iter().map(|x| -x.ln()).collect();
        Self::new(Hamiltonian::diagonal(&energies)?, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn populations(&self) -> Vec<f64> {
        thermal_populations(&self.hamiltonian, self.beta)
    }

    pub fn gamma_power(&self, k: usize) -> DensityMatrix {
        self.gamma.tensor_power(k)
    }
}

pub fn thermal_populations(h: &Hamiltonian, beta: f64) -> Vec<f64> {
    let emin = h.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = h.energies.iter().map(|e| (-beta * (e - emin)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

pub fn thermal_state(h: &Hamiltonian, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let p = thermal_populations(h, beta);
    let mat = ComplexMatrix::from_real_diag(&p).conjugate_by(&h.eigenbasis).hermitian_part();
    Ok(DensityMatrix::trusted(vec![h.dim()], mat))
}

/// A POVM with elements summing to the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    pub elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let p = Self { elements };
        p.validate(DEFAULT.povm)?;
        Ok(p)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let Some(first) = self.elements.first() else {
            return Err(Error::InvalidParameter("empty POVM".into()));
        };
        let d = first.rows();
        let mut sum = ComplexMatrix::zeros(d, d);
        for e in &self.elements {
            if e.rows() != d || !e.is_square() {
                return Err(Error::Dimension("POVM elements differ in size".into()));
            }
            let m = herm_eig(e)?.min();
            if m < -tol {
                return Err(Error::NotPsd(m));
            }
            sum += e;
        }
        let dev = sum.max_abs_diff(&ComplexMatrix::identity(d));
        if dev > tol {
            return Err(Error::InvalidParameter(format!("POVM elements sum to identity only within {dev:.3e}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }
}

/// `|Phi+> = sum_i |ii> / sqrt(d)`.
pub fn max_entangled_ket(d: usize) -> Vec<Complex64> {
    let s = 1.0 / (d as f64).sqrt();
    let mut v = vec![ZERO; d * d];
    for i in 0..d {
        v[i * d + i] = r(s);
    }
    v
}

pub fn max_entangled(d: usize) -> DensityMatrix {
    let v = max_entangled_ket(d);
    DensityMatrix::trusted(vec![d, d], ComplexMatrix::outer(&v, &v))
}

/// `(U (x) I)|Phi+>`.
pub fn max_entangled_from_unitary_ket(u: &ComplexMatrix) -> Vec<Complex64> {
    let d = u.rows();
    kron(u, &ComplexMatrix::identity(d)).mul_vec(&max_entangled_ket(d))
}

pub fn max_entangled_from_unitary(u: &ComplexMatrix) -> Result<DensityMatrix> {
    let defect = u.unitarity_defect();
    if defect > 1e-9 {
        return Err(Error::NotUnitary(defect));
    }
    let v = max_entangled_from_unitary_ket(u);
    Ok(DensityMatrix::trusted(vec![u.rows(), u.rows()], ComplexMatrix::outer(&v, &v)))
}

/// Cyclic shift `X|j> = |j+1 mod d>`.
pub fn shift(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO })
}

/// Clock `Z|j> = w^j |j>`.
pub fn clock(d: usize) -> ComplexMatrix {
    let w = 2.0 * PI / d as f64;
    ComplexMatrix::from_diag(&(0..d).map(|j| c((w * j as f64).cos(), (w * j as f64).sin())).collect::<Vec<_>>())
}

/// `X^a Z^b`.
pub fn weyl_unitary(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::identity(d);
    let (x, z) = (shift(d), clock(d));
    for _ in 0..a {
        u = &u * &x;
    }
    for _ in 0..b {
        u = &u * &z;
    }
    u
}

/// All `d^2` Weyl operators, ordered by `a * d + b`.
pub fn weyl_unitaries(d: usize) -> Vec<ComplexMatrix> {
    (0..d * d).map(|m| weyl_unitary(d, m / d, m % d)).collect()
}

/// Orthonormal basis of maximally entangled states `(X^a Z^b (x) I)|Phi+>`.
pub fn weyl_basis(d: usize) -> Vec<DensityMatrix> {
    weyl_unitaries(d)
        .iter()
        .map(|u| {
            let v = max_entangled_from_unitary_ket(u);
            DensityMatrix::trusted(vec![d, d], ComplexMatrix::outer(&v, &v))
        })
        .collect()
}

/// Pretty-good measurement `E_m = S s_m S`, `S = (sum s_m)^{-1/2}` on the support, with the
/// remainder `I - sum E_m` added to the first element.
pub fn pretty_good_measurement(states: &[ComplexMatrix]) -> Result<Povm> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidParameter("no states".into()));
    };
    let d = first.rows();
    let mut sum = ComplexMatrix::zeros(d, d);
    for s in states {
        if s.rows() != d {
            return Err(Error::Dimension("states differ in dimension".into()));
        }
        sum += s;
    }
    let sq = psd_pinv_sqrt(&sum)?;
    let mut elements: Vec<ComplexMatrix> = states.iter().map(|s| s.conjugate_by(&sq).hermitian_part()).collect();
    let mut rest = ComplexMatrix::identity(d);
    for e in &elements {
        rest -= e;
    }
    elements[0] += &rest.hermitian_part();
    Ok(Povm { elements })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCheck {
    pub holds: bool,
    pub violation: Option<(Vec<usize>, Vec<usize>)>,
}

pub const MAX_COMPOSITIONS: f64 = 1e7;

fn compositions(m: usize, parts: usize, out: &mut Vec<Vec<usize>>) {
    fn rec(rem: usize, slot: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slot + 1 == cur.len() {
            cur[slot] = rem;
            out.push(cur.clone());
            return;
        }
        for k in (0..=rem).rev() {
            cur[slot] = k;
            rec(rem - k, slot + 1, cur, out);
        }
    }
    let mut cur = vec![0; parts];
    rec(m, 0, &mut cur, out);
}

/// Checks that, for every `M <= m_max`, distinct occupation vectors `(m_1..m_d)` summing to
/// `M` have distinct total energies `sum m_i E_i`. Returns the first colliding pair otherwise.
pub fn check_energy_subspace_condition(h: &Hamiltonian, m_max: usize) -> Result<SubspaceCheck> {
    let d = h.dim();
    if (d as f64).powi(m_max as i32) > MAX_COMPOSITIONS {
        return Err(Error::Guard(format!("d^m_max = {d}^{m_max} exceeds {MAX_COMPOSITIONS:e}")));
    }
    let emax = h.energies.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    for m in 1..=m_max {
        let mut comps = vec![];
        compositions(m, d, &mut comps);
        let mut sums: Vec<(f64, usize)> = comps
            .iter()
            .enumerate()
            .map(|(k, cv)| (cv.iter().zip(&h.energies).map(|(&n, e)| n as f64 * e).sum(), k))
            .collect();
        sums.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let tol = 1e-9 * (emax * m as f64).max(1.0);
        let mut best: Option<(usize, usize)> = None;
        for w in sums.windows(2) {
            if (w[1].0 - w[0].0).abs() <= tol {
                let pair = (w[0].1.min(w[1].1), w[0].1.max(w[1].1));
                if best.map_or(true, |b| (pair.1, pair.0) < (b.1, b.0)) {
                    best = Some(pair);
                }
            }
        }
        if let Some((a, b)) = best {
            return Ok(SubspaceCheck { holds: false, violation: Some((comps[a].clone(), comps[b].clone())) });
        }
    }
    Ok(SubspaceCheck { holds: true, violation: None })
}

pub fn ket(d: usize, k: usize) -> Vec<Complex64> {
    basis_vector(d, k)
}

/// `(|0> + |1>)/sqrt 2`.
pub fn plus_state() -> DensityMatrix {
    DensityMatrix::trusted(vec![2], ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0, 3.0]).unwrap();
        let g = thermal_state(&h, 0.0).unwrap();
        assert!(g.mat.max_abs_diff(&DensityMatrix::maximally_mixed(3).mat) < 1e-15);
    }

    #[test]
    fn qubit_thermal_state_at_log3() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0]).unwrap();
        let g = thermal_state(&h, 3f64.ln()).unwrap();
        assert_abs_diff_eq!(g.mat[(0, 0)].re, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(g.mat[(1, 1)].re, 0.25, epsilon = 1e-14);
        let ctx = ThermalContext::new(h, 3f64.ln()).unwrap();
        assert_abs_diff_eq!(ctx.p_min, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn thermal_state_in_rotated_eigenbasis() {
        let s = 0.5f64.sqrt();
        let basis = ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).unwrap();
        let h = Hamiltonian::new(vec![0.0, 1.0], basis).unwrap();
        let g = thermal_state(&h, 2.0).unwrap();
        let p0 = 1.0 / (1.0 + (-2.0f64).exp());
        assert_abs_diff_eq!(g.mat[(0, 1)].re, (2.0 * p0 - 1.0) / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn negative_beta_rejected() {
        let h = Hamiltonian::diagonal(&[0.0, 1.0]).unwrap();
        assert!(thermal_state(&h, -1.0).is_err());
        assert!(thermal_state(&h, f64::INFINITY).is_err());
    }

    #[test]
    fn weyl_basis_reproduces_bell_states_for_qubits() {
        let s = 0.5f64.sqrt();
        let bell: Vec<Vec<Complex64>> = vec![
            vec![r(s), ZERO, ZERO, r(s)],
            vec![r(s), ZERO, ZERO, r(-s)],
            vec![ZERO, r(s), r(s), ZERO],
            vec![ZERO, r(s), r(-s), ZERO],
        ];
        let basis = weyl_basis(2);
        for (st, b) in basis.iter().zip(&bell) {
            assert!(st.mat.max_abs_diff(&ComplexMatrix::outer(b, b)) < 1e-14);
        }
    }

    #[test]
    fn weyl_basis_is_orthonormal_with_maximally_mixed_marginals() {
        for d in 2..=4 {
            let basis = weyl_basis(d);
            assert_eq!(basis.len(), d * d);
            for (i, a) in basis.iter().enumerate() {
                let marg = a.partial_trace(&[0]).unwrap();
                assert!(marg.mat.max_abs_diff(&DensityMatrix::maximally_mixed(d).mat) < 1e-13);
                for (j, b) in basis.iter().enumerate() {
                    let ov = a.mat.trace_product(&b.mat).re;
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ov, want, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn pgm_is_a_povm_and_sums_exactly() {
        let states = vec![
            DensityMatrix::basis(2, 0).mat,
            plus_state().mat,
            DensityMatrix::basis(2, 0).mat,
        ];
        let p = pretty_good_measurement(&states).unwrap();
        p.validate(1e-10).unwrap();
    }

    #[test]
    fn pgm_completion_goes_to_first_element() {
        // single state with support on |0> only: E_0 = |0><0| + |1><1|
        let p = pretty_good_measurement(&[DensityMatrix::basis(2, 0).mat]).unwrap();
        assert!(p.elements[0].max_abs_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn energy_subspace_condition_examples() {
        let two = Hamiltonian::diagonal(&[0.0, 1.0]).unwrap();
        assert!(check_energy_subspace_condition(&two, 5).unwrap().holds);
        let ladder = Hamiltonian::diagonal(&[0.0, 1.0, 2.0]).unwrap();
        let res = check_energy_subspace_condition(&ladder, 2).unwrap();
        assert!(!res.holds);
        assert_eq!(res.violation, Some((vec![1, 0, 1], vec![0, 2, 0])));
        let irr = Hamiltonian::diagonal(&[0.0, 2f64.sqrt()]).unwrap();
        assert!(check_energy_subspace_condition(&irr, 4).unwrap().holds);
        let big = Hamiltonian::diagonal(&[0.0, 1.0, 2.5, 7.0]).unwrap();
        assert!(matches!(check_energy_subspace_condition(&big, 12), Err(Error::Guard(_))));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.2, -0.2]).is_err());
        assert!(DensityMatrix::diagonal(&[0.25, 0.75]).is_ok());
    }

    #[test]
    fn hamiltonian_json_forms() {
        let h: Hamiltonian = serde_json::from_str(r#"{"energies":[0,1],"basis":"computational"}"#).unwrap();
        assert_eq!(h.eigenbasis, ComplexMatrix::identity(2));
        let s = serde_json::to_string(&h).unwrap();
        assert_eq!(s, r#"{"energies":[0.0,1.0],"basis":"computational"}"#);
        assert!(serde_json::from_str::<Hamiltonian>(r#"{"energies":[0,1],"extra":1}"#).is_err());
    }
}
