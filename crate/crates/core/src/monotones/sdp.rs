//! Small dense semidefinite programs in linear-matrix-inequality form.
//!
//! The user problem is
//!
//! ```text
//! minimize c^T y  subject to  F0_b + sum_i y_i F_ib >= 0 for each block b,  G y = h
//! ```
//!
//! with complex Hermitian blocks. Equalities are eliminated through a null-space
//! parametrization, Hermitian blocks are embedded as real symmetric blocks of twice the
//! size, and the result is solved by an infeasible primal-dual path-following method
//! with the HKM direction and Mehrotra predictor-corrector steps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{real_null_space, ComplexMatrix, ONE, ZERO};

pub const MAX_COMPLEX_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum SdpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded below")]
    Unbounded,
    #[error("no convergence after {iterations} iterations (relative gap {gap:.3e})")]
    MaxIterations { iterations: usize, gap: f64 },
    #[error("total block dimension {0} exceeds the supported maximum")]
    TooLarge(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("malformed problem: {0}")]
    Malformed(String),
}

/// One Hermitian LMI block `F0 + sum_i y_i F_i >= 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub constant: ComplexMatrix,
    pub terms: Vec<(usize, ComplexMatrix)>,
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
    pub equalities: Vec<(Vec<(usize, f64)>, f64)>,
}

/// A Hermitian matrix variable occupying `n^2` consecutive real variables.
#[derive(Debug, Clone, Copy)]
pub struct HermVar {
    pub offset: usize,
    pub n: usize,
}

impl HermVar {
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Basis matrix for local parameter `k`: diagonals, then real and imaginary off-diagonal parts.
    pub fn basis(&self, k: usize) -> ComplexMatrix {
        let n = self.n;
        let mut m = ComplexMatrix::zeros(n, n);
        if k < n {
            m[(k, k)] = ONE;
            return m;
        }
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let k = k - n;
        let (i, j) = pairs[k % pairs.len()];
        if k < pairs.len() {
            m[(i, j)] = ONE;
            m[(j, i)] = ONE;
        } else {
            m[(i, j)] = Complex64::new(0.0, 1.0);
            m[(j, i)] = Complex64::new(0.0, -1.0);
        }
        m
    }

    pub fn value(&self, y: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.n, self.n);
        for k in 0..self.len() {
            m.axpy(Complex64::new(y[self.offset + k], 0.0), &self.basis(k));
        }
        m
    }

    /// Real coordinates of a Hermitian matrix in this basis.
    pub fn coordinates(&self, h: &ComplexMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out: Vec<f64> = (0..n).map(|i| h[(i, i)].re).collect();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        out.extend(pairs.iter().map(|&(i, j)| h[(i, j)].re));
        out.extend(pairs.iter().map(|&(i, j)| h[(i, j)].im));
        out
    }
}

impl SdpProblem {
    pub fn new(n_vars: usize) -> Self {
        Self { n_vars, objective: vec![0.0; n_vars], blocks: vec![], equalities: vec![] }
    }

    pub fn add_var(&mut self) -> usize {
        self.n_vars += 1;
        self.objective.push(0.0);
        self.n_vars - 1
    }

    pub fn add_herm_var(&mut self, n: usize) -> HermVar {
        let v = HermVar { offset: self.n_vars, n };
        self.n_vars += n * n;
        self.objective.resize(self.n_vars, 0.0);
        v
    }

    pub fn add_block(&mut self, constant: ComplexMatrix) -> usize {
        self.blocks.push(LmiBlock { constant, terms: vec![] });
        self.blocks.len() - 1
    }

    pub fn add_term(&mut self, block: usize, var: usize, coeff: ComplexMatrix) {
        self.blocks[block].terms.push((var, coeff));
    }

    /// Adds `embed(H)` for a Hermitian variable, where `embed` maps the variable's basis
    /// matrices into the block.
    pub fn add_herm_term(&mut self, block: usize, v: HermVar, embed: impl Fn(&ComplexMatrix) -> ComplexMatrix) {
        for k in 0..v.len() {
            let m = embed(&v.basis(k));
            self.add_term(block, v.offset + k, m);
        }
    }

    pub fn add_equality(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.equalities.push((coeffs, rhs));
    }

    /// Evaluates block `b` at `y`.
    pub fn block_value(&self, b: usize, y: &[f64]) -> ComplexMatrix {
        let blk = &self.blocks[b];
        let mut m = blk.constant.clone();
        for (v, f) in &blk.terms {
            m.axpy(Complex64::new(y[*v], 0.0), f);
        }
        m
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, feas_tol: 1e-9, max_iter: 120 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    /// `c^T y` at the returned point.
    pub value: f64,
    /// Dual objective: a lower bound on the optimum up to the primal residual.
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Dual matrices, one per block, satisfying `sum_b Re tr(X_b F_ib) = c_i`.
    pub multipliers: Vec<ComplexMatrix>,
}

struct Sparse {
    entries: Vec<(usize, usize, f64)>,
}

impl Sparse {
    fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = vec![];
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Self { entries }
    }

    fn dot(&self, x: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, a)| a * x[(j, i)]).sum()
    }

    fn add_to(&self, c: f64, x: &mut DMatrix<f64>) {
        for &(i, j, a) in &self.entries {
            x[(i, j)] += c * a;
        }
    }

    /// `X A` for dense X.
    fn left_mul(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let mut out = DMatrix::zeros(n, n);
        for &(i, j, a) in &self.entries {
            for r in 0..n {
                out[(r, j)] += x[(r, i)] * a;
            }
        }
        out
    }
}

/// Standard form: min <C,X> s.t. <A_j,X> = b_j, X >= 0, with dual max b^T z s.t. C - sum z_j A_j = Z >= 0.
struct StandardForm {
    sizes: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    a: Vec<Vec<Option<Sparse>>>,
    b: Vec<f64>,
}

fn embed(h: &ComplexMatrix) -> DMatrix<f64> {
    let n = h.rows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn unembed(s: &DMatrix<f64>) -> ComplexMatrix {
    let n = s.nrows() / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        let re = s[(i, j)] + s[(i + n, j + n)];
        let im = s[(i + n, j)] - s[(i, j + n)];
        Complex64::new(re, im)
    })
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.component_mul(y).sum()).sum()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn sym_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let ch = m.clone().cholesky()?;
    Some(sym(ch.inverse()))
}

/// Largest step `alpha` keeping `X + alpha dX` PSD (infinite if unconstrained).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(ch) = x.clone().cholesky() else { return 0.0 };
    let l = ch.l();
    let linv = match l.clone().try_inverse() {
        Some(li) => li,
        None => return 0.0,
    };
    let w = sym(&linv * dx * linv.transpose());
    let emin = w.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if emin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / emin
    }
}

struct Reduced {
    y0: Vec<f64>,
    basis: DMatrix<f64>,
}

fn eliminate_equalities(p: &SdpProblem) -> Result<Reduced, SdpError> {
    let n = p.n_vars;
    if p.equalities.is_empty() {
        return Ok(Reduced { y0: vec![0.0; n], basis: DMatrix::identity(n, n) });
    }
    let m = p.equalities.len();
    let mut g = DMatrix::zeros(m, n);
    let mut h = DVector::zeros(m);
    for (r, (coeffs, rhs)) in p.equalities.iter().enumerate() {
        for &(v, a) in coeffs {
            if v >= n {
                return Err(SdpError::Malformed(format!("equality references variable {v}")));
            }
            g[(r, v)] += a;
        }
        h[r] = *rhs;
    }
    let svd = g.clone().svd(true, true);
    let y0 = svd.solve(&h, 1e-12).map_err(|e| SdpError::Numerical(e.to_string()))?;
    let resid = (&g * &y0 - &h).norm();
    if resid > 1e-8 * (1.0 + h.norm()) {
        return Err(SdpError::Infeasible);
    }
    let basis = real_null_space(&g, 1e-12);
    Ok(Reduced { y0: y0.iter().copied().collect(), basis })
}

fn to_standard(p: &SdpProblem, red: &Reduced) -> (StandardForm, f64) {
    let m = red.basis.ncols();
    let sizes: Vec<usize> = p.blocks.iter().map(|b| 2 * b.constant.rows()).collect();
    let mut c = vec![];
    let mut a: Vec<Vec<Option<Sparse>>> = (0..m).map(|_| Vec::with_capacity(p.blocks.len())).collect();
    for blk in &p.blocks {
        let mut f0 = blk.constant.clone();
        let nb = f0.rows();
        let mut coeff: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(nb, nb); m];
        let mut touched = vec![false; m];
        for (v, f) in &blk.terms {
            f0.axpy(Complex64::new(red.y0[*v], 0.0), f);
            for j in 0..m {
                let w = red.basis[(*v, j)];
                if w != 0.0 {
                    coeff[j].axpy(Complex64::new(w, 0.0), f);
                    touched[j] = true;
                }
            }
        }
        c.push(embed(&f0.hermitian_part()));
        for j in 0..m {
            let s = touched[j].then(|| Sparse::from_dense(&(-embed(&coeff[j].hermitian_part()))));
            a[j].push(s.filter(|s| !s.entries.is_empty()));
        }
    }
    let obj_const: f64 = p.objective.iter().zip(&red.y0).map(|(c, y)| c * y).sum();
    let b: Vec<f64> = (0..m)
        .map(|j| -(0..p.n_vars).map(|i| p.objective[i] * red.basis[(i, j)]).sum::<f64>())
        .collect();
    (StandardForm { sizes, c, a, b }, obj_const)
}

impl StandardForm {
    fn op_a(&self, x: &[DMatrix<f64>]) -> Vec<f64> {
        self.a
            .iter()
            .map(|aj| aj.iter().zip(x).map(|(s, xb)| s.as_ref().map_or(0.0, |s| s.dot(xb))).sum())
            .collect()
    }

    fn op_at(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&s| DMatrix::zeros(s, s)).collect();
        for (aj, &yj) in self.a.iter().zip(y) {
            if yj == 0.0 {
                continue;
            }
            for (s, ob) in aj.iter().zip(out.iter_mut()) {
                if let Some(s) = s {
                    s.add_to(yj, ob);
                }
            }
        }
        out
    }
}

fn solve_standard(sf: &StandardForm, opts: &SdpOptions) -> Result<(Vec<DMatrix<f64>>, Vec<f64>, usize, f64), SdpError> {
    let m = sf.b.len();
    let ntot: usize = sf.sizes.iter().sum();
    let nblocks = sf.sizes.len();
    let cnorm = sf.c.iter().map(frob).fold(0.0f64, |a, b| a.hypot(b));
    let bnorm = sf.b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let anorms: Vec<f64> = sf
        .a
        .iter()
        .map(|aj| aj.iter().flatten().map(|s| s.entries.iter().map(|e| e.2 * e.2).sum::<f64>()).sum::<f64>().sqrt())
        .collect();
    let mut xi = 10.0f64;
    let mut eta = 10.0f64;
    for (j, &an) in anorms.iter().enumerate() {
        xi = xi.max((ntot as f64).sqrt() * (1.0 + sf.b[j].abs()) / (1.0 + an));
    }
    eta = eta.max((1.0 + anorms.iter().copied().fold(cnorm, f64::max)) / (ntot as f64).sqrt());
    let mut x: Vec<DMatrix<f64>> = sf.sizes.iter().map(|&s| DMatrix::identity(s, s) * xi).collect();
    let mut z: Vec<DMatrix<f64>> = sf.sizes.iter().map(|&s| DMatrix::identity(s, s) * eta).collect();
    let mut y = vec![0.0; m];
    let mut last_gap = f64::INFINITY;

    for it in 0..opts.max_iter {
        let ax = sf.op_a(&x);
        let rp: Vec<f64> = sf.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let aty = sf.op_at(&y);
        let rd: Vec<DMatrix<f64>> = (0..nblocks).map(|k| &sf.c[k] - &z[k] - &aty[k]).collect();
        let mu = inner(&x, &z) / ntot as f64;
        let pobj = inner(&sf.c, &x);
        let dobj: f64 = sf.b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + bnorm);
        let dinf = rd.iter().map(frob).fold(0.0f64, |a, b| a.hypot(b)) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        last_gap = gap;
        if gap < opts.gap_tol && pinf < opts.feas_tol && dinf < opts.feas_tol {
            return Ok((x, y, it, gap));
        }
        let xnorm = x.iter().map(frob).fold(0.0f64, f64::max);
        let znorm = z.iter().map(frob).fold(0.0f64, f64::max);
        let ynorm = y.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        if xnorm > 1e10 * xi.max(1.0) && pobj < 0.0 {
            return Err(SdpError::Infeasible);
        }
        if (ynorm > 1e10 || znorm > 1e10 * eta.max(1.0)) && dobj > 0.0 {
            return Err(SdpError::Unbounded);
        }

        let zinv: Vec<DMatrix<f64>> = z
            .iter()
            .map(|zb| sym_inverse(zb).ok_or_else(|| SdpError::Numerical("dual slack lost definiteness".into())))
            .collect::<Result<_, _>>()?;

        let mut schur = DMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..nblocks {
                let Some(aj) = &sf.a[j][k] else { continue };
                let t = aj.left_mul(&x[k]) * &zinv[k];
                for i in 0..m {
                    if let Some(ai) = &sf.a[i][k] {
                        schur[(i, j)] += ai.dot(&t);
                    }
                }
            }
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let chol = schur.clone().cholesky();
        let lu = if chol.is_none() { Some(schur.clone().lu()) } else { None };
        let solve_schur = |rhs: &DVector<f64>| -> Result<DVector<f64>, SdpError> {
            match (&chol, &lu) {
                (Some(c), _) => Ok(c.solve(rhs)),
                (None, Some(l)) => l.solve(rhs).ok_or_else(|| SdpError::Numerical("singular Schur complement".into())),
                _ => unreachable!(),
            }
        };

        let xrdz: Vec<DMatrix<f64>> = (0..nblocks).map(|k| &x[k] * &rd[k] * &zinv[k]).collect();
        let a_xrdz = sf.op_a(&xrdz);
        let a_zinv = sf.op_a(&zinv);

        let direction = |sigma_mu: f64, corr: Option<&Vec<DMatrix<f64>>>| -> Result<_, SdpError> {
            let a_corr = corr.map(|c| sf.op_a(c));
            let rhs = DVector::from_fn(m, |i, _| {
                sf.b[i] - sigma_mu * a_zinv[i] + a_xrdz[i] + a_corr.as_ref().map_or(0.0, |v| v[i])
            });
            let dy = solve_schur(&rhs)?;
            let dyv: Vec<f64> = dy.iter().copied().collect();
            let atdy = sf.op_at(&dyv);
            let dz: Vec<DMatrix<f64>> = (0..nblocks).map(|k| &rd[k] - &atdy[k]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nblocks)
                .map(|k| {
                    let mut d = &zinv[k] * sigma_mu - &x[k] - sym(&x[k] * &dz[k] * &zinv[k]);
                    if let Some(c) = corr {
                        d -= sym(c[k].clone());
                    }
                    d
                })
                .collect();
            Ok((dx, dyv, dz))
        };
        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
            let ap = (0..nblocks).map(|k| max_step(&x[k], &dx[k])).fold(f64::INFINITY, f64::min);
            let ad = (0..nblocks).map(|k| max_step(&z[k], &dz[k])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let (dxa, _, dza) = direction(0.0, None)?;
        let (apa, ada) = steps(&dxa, &dza);
        let (apa, ada) = (apa.min(1.0), ada.min(1.0));
        let xa: Vec<DMatrix<f64>> = (0..nblocks).map(|k| &x[k] + &dxa[k] * apa).collect();
        let za: Vec<DMatrix<f64>> = (0..nblocks).map(|k| &z[k] + &dza[k] * ada).collect();
        let mu_aff = inner(&xa, &za) / ntot as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corr: Vec<DMatrix<f64>> = (0..nblocks).map(|k| &dxa[k] * &dza[k] * &zinv[k]).collect();
        let (dx, dy, dz) = direction(sigma * mu, Some(&corr))?;
        let (ap, ad) = steps(&dx, &dz);
        let tau = if gap < 1e-4 { 0.99 } else { 0.95 };
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if ap < 1e-14 && ad < 1e-14 {
            return Err(SdpError::Numerical("step length collapsed".into()));
        }
        for k in 0..nblocks {
            x[k] = sym(&x[k] + &dx[k] * ap);
            z[k] = sym(&z[k] + &dz[k] * ad);
        }
        for (yi, di) in y.iter_mut().zip(&dy) {
            *yi += ad * di;
        }
    }
    Err(SdpError::MaxIterations { iterations: opts.max_iter, gap: last_gap })
}

/// Solves the LMI problem; see the module documentation for the form.
pub fn sdp_solve(p: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let total: usize = p.blocks.iter().map(|b| b.constant.rows()).sum();
    if total > MAX_COMPLEX_DIM {
        return Err(SdpError::TooLarge(total));
    }
    if p.objective.len() != p.n_vars {
        return Err(SdpError::Malformed("objective length differs from variable count".into()));
    }
    for blk in &p.blocks {
        if !blk.constant.is_square() || blk.terms.iter().any(|(v, f)| *v >= p.n_vars || f.rows() != blk.constant.rows()) {
            return Err(SdpError::Malformed("inconsistent block".into()));
        }
    }
    let red = eliminate_equalities(p)?;
    let (sf, obj_const) = to_standard(p, &red);
    if sf.b.is_empty() {
        // Nothing left to optimize: only feasibility of the fixed point matters.
        for k in 0..p.blocks.len() {
            let e = crate::kernel::min_eigenvalue(&p.block_value(k, &red.y0)).map_err(|e| SdpError::Numerical(e.to_string()))?;
            if e < -opts.feas_tol.max(1e-9) {
                return Err(SdpError::Infeasible);
            }
        }
        let multipliers = p.blocks.iter().map(|b| ComplexMatrix::zeros(b.constant.rows(), b.constant.rows())).collect();
        return Ok(SdpSolution { y: red.y0, value: obj_const, dual_value: obj_const, gap: 0.0, iterations: 0, multipliers });
    }
    let (x, zvar, iterations, gap) = solve_standard(&sf, opts)?;
    let mut y = red.y0.clone();
    for (j, zj) in zvar.iter().enumerate() {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += red.basis[(i, j)] * zj;
        }
    }
    let value: f64 = p.objective.iter().zip(&y).map(|(c, y)| c * y).sum();
    let dual_value = obj_const - inner(&sf.c, &x);
    let multipliers = x.iter().map(unembed).collect();
    Ok(SdpSolution { y, value, dual_value, gap, iterations, multipliers })
}

/// Real part of `tr(A B)` for Hermitian arguments.
pub fn re_trace(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.trace_product(b).re
}

pub fn zero_block(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{c, ComplexMatrix};

    fn opts() -> SdpOptions {
        SdpOptions::default()
    }

    #[test]
    fn smallest_dominating_multiple_of_identity() {
        let mut p = SdpProblem::new(1);
        p.objective[0] = 1.0;
        let b = p.add_block(-ComplexMatrix::from_real_diag(&[1.0, 2.0]));
        p.add_term(b, 0, ComplexMatrix::identity(2));
        let s = sdp_solve(&p, &opts()).unwrap();
        assert!((s.value - 2.0).abs() < 1e-7, "{}", s.value);
        assert!((s.dual_value - 2.0).abs() < 1e-7);
        let x = &s.multipliers[0];
        assert!((x.trace().re - 1.0).abs() < 1e-6, "multiplier trace {:?}", x);
    }

    #[test]
    fn min_trace_above_hermitian_matrix() {
        let a = ComplexMatrix::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => c(1.0, 0.0),
            (1, 1) => c(-0.5, 0.0),
            (0, 1) => c(0.3, 0.4),
            _ => c(0.3, -0.4),
        });
        let mut p = SdpProblem::new(0);
        let v = p.add_herm_var(2);
        for k in 0..v.len() {
            p.objective[v.offset + k] = v.basis(k).trace().re;
        }
        let b = p.add_block(-&a);
        p.add_herm_term(b, v, |m| m.clone());
        let s = sdp_solve(&p, &opts()).unwrap();
        assert!((s.value - a.trace().re).abs() < 1e-7, "{}", s.value);
    }

    #[test]
    fn helstrom_from_dual_program() {
        // max sum tr(E_m rho_m)/2  <=>  min tr Y  s.t. Y >= rho_m / 2
        let r = 0.5f64.sqrt();
        let rho0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let rho1 = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let mut p = SdpProblem::new(0);
        let v = p.add_herm_var(2);
        for k in 0..v.len() {
            p.objective[v.offset + k] = v.basis(k).trace().re;
        }
        for rho in [&rho0, &rho1] {
            let b = p.add_block(-&rho.scale_real(0.5));
            p.add_herm_term(b, v, |m| m.clone());
        }
        let s = sdp_solve(&p, &opts()).unwrap();
        assert!((s.value - 0.5 * (1.0 + r)).abs() < 1e-7, "{}", s.value);
        let sum = &s.multipliers[0] + &s.multipliers[1];
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-6, "{sum:?}");
    }

    #[test]
    fn equality_constraints_are_respected() {
        // min x0 + 2 x1 s.t. x0 + x1 = 1, x0 >= 0, x1 >= 0
        let mut p = SdpProblem::new(2);
        p.objective = vec![1.0, 2.0];
        for v in 0..2 {
            let b = p.add_block(ComplexMatrix::zeros(1, 1));
            p.add_term(b, v, ComplexMatrix::identity(1));
        }
        p.add_equality(vec![(0, 1.0), (1, 1.0)], 1.0);
        let s = sdp_solve(&p, &opts()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-7);
        assert!((s.y[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reports_infeasible_and_unbounded() {
        // x >= 1 and -x >= 0
        let mut p = SdpProblem::new(1);
        p.objective[0] = 1.0;
        let b = p.add_block(-ComplexMatrix::identity(1));
        p.add_term(b, 0, ComplexMatrix::identity(1));
        let b = p.add_block(ComplexMatrix::zeros(1, 1));
        p.add_term(b, 0, -&ComplexMatrix::identity(1));
        assert_eq!(sdp_solve(&p, &opts()).unwrap_err(), SdpError::Infeasible);

        // min x s.t. -x >= 0
        let mut p = SdpProblem::new(1);
        p.objective[0] = 1.0;
        let b = p.add_block(ComplexMatrix::zeros(1, 1));
        p.add_term(b, 0, -&ComplexMatrix::identity(1));
        assert_eq!(sdp_solve(&p, &opts()).unwrap_err(), SdpError::Unbounded);

        let mut p = SdpProblem::new(1);
        p.add_equality(vec![(0, 1.0)], 1.0);
        p.add_equality(vec![(0, 1.0)], 2.0);
        assert_eq!(sdp_solve(&p, &opts()).unwrap_err(), SdpError::Infeasible);
    }

    #[test]
    fn rejects_oversized_blocks() {
        let mut p = SdpProblem::new(1);
        p.add_block(ComplexMatrix::identity(MAX_COMPLEX_DIM + 1));
        assert!(matches!(sdp_solve(&p, &opts()), Err(SdpError::TooLarge(_))));
    }

    #[test]
    fn herm_var_coordinates_round_trip() {
        let v = HermVar { offset: 0, n: 3 };
        let h = ComplexMatrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, i as f64 - j as f64)).hermitian_part();
        let y = v.coordinates(&h);
        assert!(v.value(&y).max_abs_diff(&h) < 1e-14);
    }
}
