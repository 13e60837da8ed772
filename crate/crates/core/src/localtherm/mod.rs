//! Entanglement preserving local thermalization on a tripartite system `A|BC`, its
//! verification, fully entangled fraction estimation and the capacity demonstration built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::TIE;
use crate::channels::{constant, mix, ChannelChoi};
use crate::error::{Error, Result};
use crate::kernel::{c, herm_eig, kron, kron_vec, partial_trace, partial_transpose, polar_unitary, trace_norm, ComplexMatrix, ZERO};
use crate::monotones::{BoundKind, BoundReport};
use crate::quantum::random::{child_rng, haar_ket, haar_unitary};
use crate::quantum::{max_entangled, max_entangled_ket, weyl_unitaries, DensityMatrix, Hamiltonian, ThermalContext};

/// Largest total dimension `d * d * (d^2 + 1)` accepted by the channel builder.
pub const MAX_TOTAL_DIM: usize = 64;
/// Restarts used by [`fef`] when called from the demonstration.
pub const FEF_RESTARTS: usize = 32;
const FEF_MAX_ITERS: usize = 2000;
const FEF_CONVERGED: f64 = 1e-10;
/// Margin above `1/d` before an FEF value counts as an entanglement witness.
pub const FEF_MARGIN: f64 = 1e-9;
/// Partial-transpose eigenvalue below which a state counts as entangled.
pub const PT_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripartiteSetup {
    pub d: usize,
    pub ctx_a: ThermalContext,
    pub ctx_b: ThermalContext,
    pub ctx_c: ThermalContext,
    /// `d^2 + 1` unitaries on B; the last one is the identity.
    pub v_list: Vec<ComplexMatrix>,
}

impl TripartiteSetup {
    pub fn new(ctx_a: ThermalContext, ctx_b: ThermalContext, ctx_c: ThermalContext, v_list: Vec<ComplexMatrix>) -> Result<Self> {
        let d = ctx_a.dim();
        if ctx_b.dim() != d {
            return Err(Error::Dimension(format!("A has dimension {d}, B has {}", ctx_b.dim())));
        }
        if ctx_c.dim() != d * d + 1 {
            return Err(Error::Dimension(format!("C must have dimension {}, got {}", d * d + 1, ctx_c.dim())));
        }
        if v_list.len() != d * d + 1 {
            return Err(Error::InvalidParameter(format!("v_list needs {} unitaries, got {}", d * d + 1, v_list.len())));
        }
        for v in &v_list {
            if v.rows() != d || !v.is_square() {
                return Err(Error::Dimension(format!("v_list entry is {}x{}, expected {d}x{d}", v.rows(), v.cols())));
            }
            let defect = v.unitarity_defect();
            if defect > 1e-10 {
                return Err(Error::NotUnitary(defect));
            }
        }
        let last = v_list.last().expect("non-empty");
        if last.max_abs_diff(&ComplexMatrix::identity(d)) > 1e-10 {
            return Err(Error::InvalidParameter("last element of v_list must be the identity".into()));
        }
        Ok(Self { d, ctx_a, ctx_b, ctx_c, v_list })
    }

    /// Weyl unitaries `X^a Z^b` followed by the identity.
    pub fn weyl(ctx_a: ThermalContext, ctx_b: ThermalContext, ctx_c: ThermalContext) -> Result<Self> {
        let d = ctx_a.dim();
        let mut v = weyl_unitaries(d);
        v.push(ComplexMatrix::identity(d));
        Self::new(ctx_a, ctx_b, ctx_c, v)
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.d, self.d, self.d * self.d + 1]
    }

    pub fn total_dim(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn gamma_bc(&self) -> DensityMatrix {
        self.ctx_b.gamma.tensor(&self.ctx_c.gamma)
    }

    pub fn with_weyl(&self) -> Result<Self> {
        Self::weyl(self.ctx_a.clone(), self.ctx_b.clone(), self.ctx_c.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    Energies(Vec<f64>),
    Full(Hamiltonian),
}

impl HamiltonianSpec {
    pub fn build(&self) -> Result<Hamiltonian> {
        match self {
            Self::Energies(e) => Hamiltonian::diagonal(e),
            Self::Full(h) => Ok(h.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VListSpec {
    Named(String),
    Matrices(Vec<ComplexMatrix>),
}

impl Default for VListSpec {
    fn default() -> Self {
        Self::Named("weyl".into())
    }
}

/// Setup file: `{"d", "beta_a", "beta_b", "beta_c", "h_a", "h_b", "h_c", "v_list"}`. Missing
/// Hamiltonians default to the spectrum `0, 1, ..., D - 1`; `v_list` defaults to `"weyl"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSpec {
    pub d: usize,
    pub beta_a: f64,
    pub beta_b: f64,
    pub beta_c: f64,
    #[serde(default)]
    pub h_a: Option<HamiltonianSpec>,
    #[serde(default)]
    pub h_b: Option<HamiltonianSpec>,
    #[serde(default)]
    pub h_c: Option<HamiltonianSpec>,
    #[serde(default)]
    pub v_list: VListSpec,
}

impl SetupSpec {
    pub fn build(&self) -> Result<TripartiteSetup> {
        if self.d < 2 {
            return Err(Error::InvalidParameter("d must be at least 2".into()));
        }
        let ctx = |h: &Option<HamiltonianSpec>, dim: usize, beta: f64| -> Result<ThermalContext> {
            let h = match h {
                Some(h) => h.build()?,
                None => Hamiltonian::diagonal(&(0..dim).map(|k| k as f64).collect::<Vec<_>>())?,
            };
            if h.dim() != dim {
                return Err(Error::Dimension(format!("Hamiltonian of dimension {} where {dim} is needed", h.dim())));
            }
            ThermalContext::new(h, beta)
        };
        let d = self.d;
        let (a, b, cc) = (ctx(&self.h_a, d, self.beta_a)?, ctx(&self.h_b, d, self.beta_b)?, ctx(&self.h_c, d * d + 1, self.beta_c)?);
        match &self.v_list {
            VListSpec::Named(n) if n == "weyl" => TripartiteSetup::weyl(a, b, cc),
            VListSpec::Named(n) => Err(Error::InvalidParameter(format!("unknown v_list {n:?}"))),
            VListSpec::Matrices(v) => TripartiteSetup::new(a, b, cc, v.clone()),
        }
    }
}

/// `d * min(p_min(gamma_A), p_min(gamma_B))`.
pub fn kappa_star(ctx_a: &ThermalContext, ctx_b: &ThermalContext) -> Result<f64> {
    if ctx_a.dim() != ctx_b.dim() {
        return Err(Error::Dimension(format!("A has dimension {}, B has {}", ctx_a.dim(), ctx_b.dim())));
    }
    Ok(ctx_a.dim() as f64 * ctx_a.p_min.min(ctx_b.p_min))
}

/// `gamma + kappa / (1 - kappa) (gamma - I/d)`, written as `(gamma - kappa I/d) / (1 - kappa)`.
pub fn alt_thermal(ctx: &ThermalContext, kappa: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa {kappa} outside [0, 1]")));
    }
    let d = ctx.dim();
    let slack = ctx.p_min - kappa / d as f64;
    if slack < -1e-12 {
        return Err(Error::NotPsd(slack / (1.0 - kappa)));
    }
    if kappa == 1.0 {
        // Only reachable with gamma = I/d, where the formula reads 0/0 and the limit is I/d.
        return Ok(DensityMatrix::maximally_mixed(d));
    }
    let mut m = ctx.gamma.mat.clone();
    m.axpy(c(-kappa / d as f64, 0.0), &ComplexMatrix::identity(d));
    DensityMatrix::from_matrix(m.scale_real(1.0 / (1.0 - kappa)))
}

fn check_kappa(setup: &TripartiteSetup, kappa: f64) -> Result<f64> {
    let ks = kappa_star(&setup.ctx_a, &setup.ctx_b)?;
    if !(0.0..=ks + 1e-12).contains(&kappa) {
        return Err(Error::InvalidParameter(format!("kappa {kappa} outside [0, {ks}]")));
    }
    Ok(ks)
}

/// `D^kappa(X) = (1 - kappa) tr(X) alt_A (x) alt_B + kappa X` on AB.
pub fn mixer(ctx_a: &ThermalContext, ctx_b: &ThermalContext, kappa: f64) -> Result<ChannelChoi> {
    let alt = alt_thermal(ctx_a, kappa)?.tensor(&alt_thermal(ctx_b, kappa)?);
    let n = alt.dim();
    mix(&[1.0 - kappa, kappa], &[constant(&alt, n), ChannelChoi::identity(n)])
}

/// The `(AB, AB')` block of an ABC operator for fixed C indices.
fn c_block(x: &ComplexMatrix, nab: usize, nc: usize, c1: usize, c2: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(nab, nab, |i, j| x[(i * nc + c1, j * nc + c2)])
}

/// Twirl, controlled unitary on B with C refreshed to `gamma_C`, then the mixer on AB.
pub fn build_local_thermalization(setup: &TripartiteSetup, kappa: f64) -> Result<ChannelChoi> {
    check_kappa(setup, kappa)?;
    let total = setup.total_dim();
    if total > MAX_TOTAL_DIM {
        return Err(Error::Guard(format!("total dimension {total} exceeds {MAX_TOTAL_DIM}")));
    }
    let d = setup.d;
    let (nab, nc) = (d * d, d * d + 1);
    let alt = alt_thermal(&setup.ctx_a, kappa)?.tensor(&alt_thermal(&setup.ctx_b, kappa)?).mat;
    let phi = max_entangled(d).mat;
    let rest = (ComplexMatrix::identity(nab) - phi.clone()).scale_real(1.0 / (nab as f64 - 1.0));
    let locals: Vec<ComplexMatrix> = setup.v_list.iter().map(|v| kron(&ComplexMatrix::identity(d), v)).collect();
    let gamma_c = &setup.ctx_c.gamma.mat;
    ChannelChoi::from_linear_map(total, total, |x| {
        let mut y = ComplexMatrix::zeros(nab, nab);
        for (n, w) in locals.iter().enumerate() {
            let blk = c_block(x, nab, nc, n, n);
            let f = phi.trace_product(&blk);
            let twirled = phi.scale(f) + rest.scale(blk.trace() - f);
            y += &(&(w * &twirled) * &w.adjoint());
        }
        let mut z = alt.scale(c(1.0 - kappa, 0.0) * y.trace());
        z.axpy(c(kappa, 0.0), &y);
        kron(&z, gamma_c)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalThermalizationReport {
    pub holds: bool,
    /// Max `||tr_BC E(rho) - gamma_A||_1` over the checked inputs.
    pub deviation_a: f64,
    /// Max `||tr_A E(rho) - gamma_B (x) gamma_C||_1` over the checked inputs.
    pub deviation_bc: f64,
    pub max_deviation: f64,
    pub inputs_checked: usize,
}

/// Density operators `|i><i|`, `|i>+|j>` and `|i>+i|j>` spanning all operators on `C^n`.
fn spanning_states(n: usize) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(n * n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        out.push(ComplexMatrix::unit(n, i, i));
        for j in i + 1..n {
            for phase in [c(s, 0.0), c(0.0, s)] {
                let mut v = vec![ZERO; n];
                v[i] = c(s, 0.0);
                v[j] = phase;
                out.push(ComplexMatrix::outer(&v, &v));
            }
        }
    }
    out
}

/// Checks both marginals on a spanning set of states (certifying every input by linearity) plus
/// `samples` seeded pure product and `samples` seeded pure entangled inputs.
pub fn verify_local_thermalization(channel: &ChannelChoi, setup: &TripartiteSetup, samples: usize, seed: u64, tol: f64) -> Result<LocalThermalizationReport> {
    let dims = setup.dims();
    let total = setup.total_dim();
    if channel.d_in != total || channel.d_out != total {
        return Err(Error::Dimension(format!("channel {} -> {} on a setup of dimension {total}", channel.d_in, channel.d_out)));
    }
    let mut inputs = spanning_states(total);
    let (da, dbc) = (dims[0], dims[1] * dims[2]);
    for k in 0..samples as u64 {
        let mut r = child_rng(seed, 2 * k);
        let v = kron_vec(&haar_ket(da, &mut r), &haar_ket(dbc, &mut r));
        inputs.push(ComplexMatrix::outer(&v, &v));
        let v = haar_ket(total, &mut child_rng(seed, 2 * k + 1));
        inputs.push(ComplexMatrix::outer(&v, &v));
    }
    let gamma_bc = setup.gamma_bc().mat;
    let devs: Vec<(f64, f64)> = inputs
        .par_iter()
        .map(|x| {
            let out = channel.apply_op(x);
            let a = partial_trace(&out, &dims, &[0]).expect("valid dims");
            let bc = partial_trace(&out, &dims, &[1, 2]).expect("valid dims");
            (trace_norm(&(&a - &setup.ctx_a.gamma.mat)), trace_norm(&(&bc - &gamma_bc)))
        })
        .collect();
    let deviation_a = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let deviation_bc = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    let max_deviation = deviation_a.max(deviation_bc);
    Ok(LocalThermalizationReport { holds: max_deviation <= tol, deviation_a, deviation_bc, max_deviation, inputs_checked: inputs.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FefReport {
    pub value: f64,
    pub restarts: usize,
    pub converged: bool,
}

/// `<Phi_U| rho |Phi_U>` with `|Phi_U> = (U (x) I)|Phi+>`, whose amplitudes are the row-major
/// entries of `U / sqrt(d)`.
fn me_overlap(rho: &ComplexMatrix, u: &ComplexMatrix) -> f64 {
    rho.expectation(u.data()).re / u.rows() as f64
}

/// Polar ascent from `u`; returns the overlap after every step, starting with the initial one.
fn fef_ascent(rho: &ComplexMatrix, mut u: ComplexMatrix) -> Result<(Vec<f64>, bool)> {
    let d = u.rows();
    let mut history = vec![me_overlap(rho, &u)];
    for _ in 0..FEF_MAX_ITERS {
        let g = ComplexMatrix::new(d, d, rho.mul_vec(u.data()))?;
        u = polar_unitary(&g)?;
        let f = me_overlap(rho, &u);
        let prev = *history.last().expect("non-empty");
        history.push(f);
        if (f - prev).abs() < FEF_CONVERGED {
            return Ok((history, true));
        }
    }
    Ok((history, false))
}

fn local_dim(rho: &DensityMatrix) -> Result<usize> {
    let n = rho.dim();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || (rho.dims.len() == 2 && rho.dims[0] != rho.dims[1]) {
        return Err(Error::Dimension(format!("state with dims {:?} is not d x d", rho.dims)));
    }
    Ok(d)
}

/// Fully entangled fraction lower bound by multi-restart polar ascent. Restart 0 starts at
/// `Phi+`; the rest start at Haar unitaries drawn from `child_rng(seed, r)`.
pub fn fef(rho: &DensityMatrix, restarts: usize, seed: u64) -> Result<FefReport> {
    let d = local_dim(rho)?;
    let restarts = restarts.max(1);
    let runs: Vec<Result<(Vec<f64>, bool)>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let u0 = if r == 0 { ComplexMatrix::identity(d) } else { haar_unitary(d, &mut child_rng(seed, r as u64)) };
            fef_ascent(&rho.mat, u0)
        })
        .collect();
    let mut best: Option<(f64, bool)> = None;
    for run in runs {
        let (h, conv) = run?;
        let v = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if best.map_or(true, |(b, _)| v > b) {
            best = Some((v, conv));
        }
    }
    let (value, converged) = best.expect("at least one restart");
    Ok(FefReport { value: value.clamp(0.0, 1.0), restarts, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem5Report {
    pub d: usize,
    pub kappa: f64,
    pub kappa_star: f64,
    /// Success probability of the Bell code measured through the built channel.
    pub success: f64,
    /// `(1 - kappa) / d^2 + kappa`.
    pub analytic: f64,
    /// Smallest `epsilon` with `analytic >= 1 - epsilon`: `(1 - 1/d^2)(1 - kappa)`.
    pub threshold: f64,
    pub epsilon: f64,
    pub capacity_lower: BoundReport,
    pub marginals: LocalThermalizationReport,
    /// FEF of the AB output for input `|Psi+><Psi+| (x) |d^2><d^2|`.
    pub fef: FefReport,
    /// `fef > 1/d`.
    pub fef_witness: bool,
    /// Smallest eigenvalue of the partial transpose of the same AB output.
    pub min_pt_eigenvalue: f64,
    /// Either witness fires. The partial transpose is needed when the two thermal states differ
    /// strongly: only one alternative thermal state becomes pure at `kappa_star` and the output
    /// can be entangled with `fef <= 1/d`.
    pub entangled: bool,
}

/// Builds the channel with Weyl encoders, runs the Bell code `|Psi+> (x) |m>_C` with decoder
/// `Phi_m (x) I_C` (last element completed to the identity), and witnesses entanglement of the
/// output through its fully entangled fraction. `kappa` defaults to `kappa_star`, `epsilon` to
/// the threshold.
pub fn theorem5_demo(setup: &TripartiteSetup, kappa: Option<f64>, epsilon: Option<f64>) -> Result<Theorem5Report> {
    let ks = kappa_star(&setup.ctx_a, &setup.ctx_b)?;
    let kappa = kappa.unwrap_or(ks);
    check_kappa(setup, kappa)?;
    let setup = setup.with_weyl()?;
    let ch = build_local_thermalization(&setup, kappa)?;
    let d = setup.d;
    let (nab, nc) = (d * d, d * d + 1);
    let psi = max_entangled_ket(d);
    let psi_op = ComplexMatrix::outer(&psi, &psi);
    let bells: Vec<ComplexMatrix> = setup.v_list[..nab]
        .iter()
        .map(|v| {
            let k = kron(&ComplexMatrix::identity(d), v).mul_vec(&psi);
            ComplexMatrix::outer(&k, &k)
        })
        .collect();
    let id_c = ComplexMatrix::identity(nc);
    let mut decoder: Vec<ComplexMatrix> = bells[..nab - 1].iter().map(|b| kron(b, &id_c)).collect();
    let mut last = ComplexMatrix::identity(nab);
    for b in &bells[..nab - 1] {
        last -= b;
    }
    decoder.push(kron(&last, &id_c));
    let success = (0..nab)
        .map(|m| {
            let out = ch.apply_op(&kron(&psi_op, &ComplexMatrix::unit(nc, m, m)));
            decoder[m].trace_product(&out).re
        })
        .sum::<f64>()
        / nab as f64;
    let analytic = (1.0 - kappa) / nab as f64 + kappa;
    let threshold = (1.0 - 1.0 / nab as f64) * (1.0 - kappa);
    let epsilon = epsilon.unwrap_or(threshold);
    let bits = if success >= 1.0 - epsilon - TIE { (nab as f64).log2() } else { 0.0 };
    let capacity_lower = BoundReport::new(
        "capacity_lower",
        bits,
        BoundKind::Lower,
        format!("Bell code with {nab} messages, success {success:.12}"),
        TIE,
    );
    let marginals = verify_local_thermalization(&ch, &setup, 4, 0, 1e-9)?;
    let out = ch.apply(&DensityMatrix { dims: vec![nab * nc], mat: kron(&psi_op, &ComplexMatrix::unit(nc, nab, nab)) })?;
    let ab = out.with_dims(setup.dims().to_vec())?.partial_trace(&[0, 1])?;
    let fef = fef(&ab, FEF_RESTARTS, 0)?;
    let fef_witness = fef.value > 1.0 / d as f64 + FEF_MARGIN;
    let min_pt_eigenvalue = herm_eig(&partial_transpose(&ab.mat, &[d, d], 1)?)?.min();
    let entangled = fef_witness || min_pt_eigenvalue < -PT_MARGIN;
    Ok(Theorem5Report {
        d,
        kappa,
        kappa_star: ks,
        success,
        analytic,
        threshold,
        epsilon,
        capacity_lower,
        marginals,
        fef,
        fef_witness,
        min_pt_eigenvalue,
        entangled,
    })
}

#[cfg(test)]
mod tests;
