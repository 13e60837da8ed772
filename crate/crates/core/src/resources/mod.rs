//! Resource theories: which states and channels are free, and which channels destroy the
//! resource altogether.

pub mod random;

use serde::{Deserialize, Serialize};

use crate::channels::{compose, constant, dephasing, tensor_power, twirl_group, ChannelChoi, UnitaryGroup};
use crate::error::{Error, Result};
use crate::kernel::{kron_power, trace_norm, ComplexMatrix};
use crate::quantum::random::{haar_unitary, rng};
use crate::quantum::{DensityMatrix, Hamiltonian, ThermalContext};

#[derive(Debug, Clone, PartialEq)]
pub enum ResourceSpec {
    /// Incoherent basis given by the columns of `basis` (computational if absent).
    Coherence { basis: Option<ComplexMatrix> },
    Athermality { ctx: ThermalContext },
    Asymmetry { group: UnitaryGroup },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SpecRepr {
    Coherence {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<ComplexMatrix>,
    },
    Athermality { hamiltonian: Hamiltonian, beta: f64 },
    Asymmetry { group: UnitaryGroup },
}

impl Serialize for ResourceSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Coherence { basis } => SpecRepr::Coherence { basis: basis.clone() },
            Self::Athermality { ctx } => SpecRepr::Athermality { hamiltonian: ctx.hamiltonian.clone(), beta: ctx.beta },
            Self::Asymmetry { group } => SpecRepr::Asymmetry { group: group.clone() },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ResourceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match SpecRepr::deserialize(d)? {
            SpecRepr::Coherence { basis } => {
                if let Some(b) = &basis {
                    if b.unitarity_defect() > 1e-9 {
                        return Err(serde::de::Error::custom("coherence basis is not unitary"));
                    }
                }
                Self::Coherence { basis }
            }
            SpecRepr::Athermality { hamiltonian, beta } => {
                Self::Athermality { ctx: ThermalContext::new(hamiltonian, beta).map_err(serde::de::Error::custom)? }
            }
            SpecRepr::Asymmetry { group } => {
                if let UnitaryGroup::Finite { elements, .. } = &group {
                    UnitaryGroup::finite(elements.clone()).map_err(serde::de::Error::custom)?;
                }
                Self::Asymmetry { group }
            }
        })
    }
}

/// Outcome of a membership test together with the largest violation seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub worst: f64,
}

impl Verdict {
    fn from_worst(worst: f64, tol: f64) -> Self {
        Self { holds: worst <= tol, worst }
    }
}

fn copies(unit: usize, dim: usize) -> Result<usize> {
    if unit == 0 {
        return Err(Error::Dimension("zero-dimensional unit system".into()));
    }
    let mut k = 0;
    let mut p = 1usize;
    while p < dim {
        p *= unit;
        k += 1;
    }
    if p != dim {
        return Err(Error::Dimension(format!("dimension {dim} is not a power of {unit}")));
    }
    Ok(k)
}

impl ResourceSpec {
    pub fn coherence() -> Self {
        Self::Coherence { basis: None }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Coherence { .. } => "coherence",
            Self::Athermality { .. } => "athermality",
            Self::Asymmetry { .. } => "asymmetry",
        }
    }

    /// Incoherent basis on `dim` (product basis on multiple copies).
    pub fn incoherent_basis(&self, dim: usize) -> Result<ComplexMatrix> {
        match self {
            Self::Coherence { basis: None } => Ok(ComplexMatrix::identity(dim)),
            Self::Coherence { basis: Some(b) } => Ok(kron_power(b, copies(b.rows(), dim)?)),
            _ => Err(Error::InvalidParameter("incoherent basis requested for a non-coherence resource".into())),
        }
    }

    /// Thermal state `gamma^{(x) k}` on `dim`.
    pub fn gibbs(&self, dim: usize) -> Result<DensityMatrix> {
        match self {
            Self::Athermality { ctx } => Ok(ctx.gamma_power(copies(ctx.dim(), dim)?)),
            _ => Err(Error::InvalidParameter("Gibbs state requested for a non-thermal resource".into())),
        }
    }

    pub fn group_on(&self, dim: usize) -> Result<UnitaryGroup> {
        match self {
            Self::Asymmetry { group } => group.tensor_power(copies(group.dim(), dim)?),
            _ => Err(Error::InvalidParameter("group requested for a non-asymmetry resource".into())),
        }
    }

    /// The canonical resource-destroying map on `dim`: dephasing, replacement by the Gibbs
    /// state, or the group twirl.
    pub fn destroying_map(&self, dim: usize) -> Result<ChannelChoi> {
        match self {
            Self::Coherence { .. } => dephasing(dim, Some(&self.incoherent_basis(dim)?)),
            Self::Athermality { .. } => Ok(constant(&self.gibbs(dim)?, dim)),
            Self::Asymmetry { group } => Ok(tensor_power(&twirl_group(group)?, copies(group.dim(), dim)?)),
        }
    }

    /// Real basis of the Hermitian operators on `dim` spanned by free states: diagonal
    /// projectors for coherence, the commutant of the group for asymmetry.
    pub fn free_algebra(&self, dim: usize) -> Result<Vec<ComplexMatrix>> {
        match self {
            Self::Coherence { .. } => {
                let b = self.incoherent_basis(dim)?;
                Ok((0..dim)
                    .map(|a| {
                        let v = b.col(a);
                        ComplexMatrix::outer(&v, &v)
                    })
                    .collect())
            }
            Self::Athermality { .. } => Ok(vec![self.gibbs(dim)?.mat]),
            Self::Asymmetry { .. } => match self.group_on(dim)? {
                UnitaryGroup::UUStar { d } => {
                    let phi = crate::quantum::max_entangled(d).mat;
                    Ok(vec![&ComplexMatrix::identity(dim) - &phi, phi])
                }
                UnitaryGroup::Finite { elements, .. } => commutant(&elements, dim),
            },
        }
    }

    /// Minimal projectors of the free algebra when it is commutative.
    pub fn free_projectors(&self, dim: usize) -> Result<Option<Vec<ComplexMatrix>>> {
        let alg = self.free_algebra(dim)?;
        if matches!(self, Self::Athermality { .. }) {
            return Ok(None);
        }
        for a in &alg {
            for b in &alg {
                if (&(a * b) - &(b * a)).max_abs() > 1e-9 {
                    return Ok(None);
                }
            }
        }
        if matches!(self, Self::Coherence { .. }) {
            return Ok(Some(alg));
        }
        let mut g = rng(0x9e37);
        let mut x = ComplexMatrix::zeros(dim, dim);
        for a in &alg {
            x.axpy(num_complex::Complex64::new(rand::Rng::gen_range(&mut g, 0.5..1.5), 0.0), a);
        }
        let e = crate::kernel::herm_eig(&x.hermitian_part())?;
        let mut out = vec![];
        let mut start = 0;
        for k in 1..=dim {
            if k == dim || e.values[k] - e.values[k - 1] > 1e-7 {
                let mut p = ComplexMatrix::zeros(dim, dim);
                for i in start..k {
                    let v = e.vector(i);
                    p += &ComplexMatrix::outer(&v, &v);
                }
                out.push(p);
                start = k;
            }
        }
        Ok(Some(out))
    }

    /// Unitaries whose conjugation action generates the symmetry on `dim`.
    fn symmetry_probes(&self, dim: usize) -> Result<Vec<ComplexMatrix>> {
        match self.group_on(dim)? {
            UnitaryGroup::Finite { elements, .. } => Ok(elements),
            UnitaryGroup::UUStar { d } => {
                let mut g = rng(0x5eed);
                Ok((0..8)
                    .map(|_| {
                        let u = haar_unitary(d, &mut g);
                        crate::kernel::kron(&u, &u.conj())
                    })
                    .collect())
            }
        }
    }
}

/// Hermitian basis of the operators commuting with every element of `ops`.
pub fn commutant(ops: &[ComplexMatrix], dim: usize) -> Result<Vec<ComplexMatrix>> {
    let hv = crate::monotones::sdp::HermVar { offset: 0, n: dim };
    let basis: Vec<ComplexMatrix> = (0..hv.len()).map(|k| hv.basis(k)).collect();
    let rows = ops.len() * 2 * dim * dim;
    let mut a = nalgebra::DMatrix::<f64>::zeros(rows, basis.len());
    for (k, b) in basis.iter().enumerate() {
        for (g, u) in ops.iter().enumerate() {
            if u.rows() != dim {
                return Err(Error::Dimension("group element size differs from the space".into()));
            }
            let c = &(b * u) - &(u * b);
            for (idx, z) in c.data().iter().enumerate() {
                a[(g * 2 * dim * dim + 2 * idx, k)] = z.re;
                a[(g * 2 * dim * dim + 2 * idx + 1, k)] = z.im;
            }
        }
    }
    let ns = crate::kernel::real_null_space(&a, 1e-10);
    Ok((0..ns.ncols())
        .map(|j| {
            let mut h = ComplexMatrix::zeros(dim, dim);
            for (k, b) in basis.iter().enumerate() {
                h.axpy(num_complex::Complex64::new(ns[(k, j)], 0.0), b);
            }
            h
        })
        .collect())
}

pub fn is_free_state(spec: &ResourceSpec, rho: &DensityMatrix, tol: f64) -> Result<Verdict> {
    let d = rho.dim();
    let worst = match spec {
        ResourceSpec::Coherence { .. } => {
            let b = spec.incoherent_basis(d)?;
            let m = rho.mat.conjugate_by(&b.adjoint());
            let mut off = 0.0;
            for i in 0..d {
                for j in 0..d {
                    if i != j {
                        off += m[(i, j)].norm();
                    }
                }
            }
            off
        }
        ResourceSpec::Athermality { .. } => rho.trace_distance(&spec.gibbs(d)?),
        ResourceSpec::Asymmetry { .. } => spec
            .symmetry_probes(d)?
            .iter()
            .map(|u| trace_norm(&(&rho.mat.conjugate_by(u) - &rho.mat)))
            .fold(0.0, f64::max),
    };
    Ok(Verdict::from_worst(worst, tol))
}

pub fn is_free_operation(spec: &ResourceSpec, e: &ChannelChoi, tol: f64) -> Result<Verdict> {
    let worst = match spec {
        ResourceSpec::Coherence { .. } => {
            let din = spec.destroying_map(e.d_in)?;
            let dout = spec.destroying_map(e.d_out)?;
            let ed = compose(e, &din)?;
            compose(&dout, &ed)?.distance_choi(&ed)
        }
        ResourceSpec::Athermality { .. } => {
            let out = e.apply(&spec.gibbs(e.d_in)?)?;
            out.trace_distance(&spec.gibbs(e.d_out)?)
        }
        ResourceSpec::Asymmetry { .. } => {
            if e.d_in != e.d_out {
                return Err(Error::Dimension("covariance check needs equal input and output dimensions".into()));
            }
            let mut worst = 0.0f64;
            for u in spec.symmetry_probes(e.d_in)? {
                let ad = ChannelChoi::unitary(&u)?;
                let a = compose(&ad, e)?;
                let b = compose(e, &ad)?;
                worst = worst.max(a.distance_choi(&b));
            }
            worst
        }
    };
    Ok(Verdict::from_worst(worst, tol))
}

pub fn is_resource_annihilating(spec: &ResourceSpec, e: &ChannelChoi, tol: f64) -> Result<Verdict> {
    let proj = annihilating_projection(spec, e)?;
    Ok(Verdict::from_worst(proj.distance_choi(e), tol))
}

/// Maps a free channel to its resource-destroying counterpart.
pub fn annihilating_projection(spec: &ResourceSpec, e: &ChannelChoi) -> Result<ChannelChoi> {
    match spec {
        ResourceSpec::Athermality { .. } => Ok(constant(&spec.gibbs(e.d_out)?, e.d_in)),
        _ => compose(&spec.destroying_map(e.d_out)?, e),
    }
}

/// Channels on `dim` that destroy the resource even when tensored with any other
/// resource-destroying channel.
pub fn absolutely_annihilating_family(spec: &ResourceSpec, dim: usize) -> Result<Vec<ChannelChoi>> {
    match spec {
        ResourceSpec::Coherence { .. } => {
            let b = spec.incoherent_basis(dim)?;
            let mut out: Vec<ChannelChoi> = (0..dim)
                .map(|k| {
                    let v = b.col(k);
                    constant(&DensityMatrix::trusted(vec![dim], ComplexMatrix::outer(&v, &v)), dim)
                })
                .collect();
            out.push(constant(&DensityMatrix::maximally_mixed(dim), dim));
            out.push(spec.destroying_map(dim)?);
            Ok(out)
        }
        ResourceSpec::Athermality { .. } => Ok(vec![constant(&spec.gibbs(dim)?, dim)]),
        ResourceSpec::Asymmetry { .. } => {
            let t = spec.destroying_map(dim)?;
            let mut out = vec![constant(&DensityMatrix::maximally_mixed(dim), dim)];
            for k in 0..dim {
                let s = t.apply(&DensityMatrix::basis(dim, k))?;
                out.push(constant(&s, dim));
            }
            out.push(t);
            Ok(out)
        }
    }
}
