use nalgebra::linalg::{SymmetricEigen, SVD};
use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tolerance::DEFAULT;

/// Spectral decomposition `A = V diag(values) V^dagger` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermEig {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.col(k)
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn min(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    /// `V diag(f(values)) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &w) in fv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Projector onto eigenvectors whose eigenvalue satisfies `pred`.
    pub fn projector(&self, pred: impl Fn(f64) -> bool) -> ComplexMatrix {
        self.map(|x| if pred(x) { 1.0 } else { 0.0 })
    }

    fn support_cutoff(&self) -> f64 {
        DEFAULT.support * self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

pub fn herm_eig(m: &ComplexMatrix) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let defect = m.hermiticity_defect();
    let scale = m.max_abs().max(1.0);
    if defect > DEFAULT.hermitian * scale {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(HermEig { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(herm_eig(m)?.values)
}

pub fn max_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.max())
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.min())
}

fn psd_eig(m: &ComplexMatrix) -> Result<HermEig> {
    let e = herm_eig(m)?;
    let floor = -DEFAULT.psd * e.max().abs().max(1.0);
    if e.min() < floor {
        return Err(Error::NotPsd(e.min()));
    }
    Ok(e)
}

pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    herm_eig(m).map(|e| e.min() >= -tol).unwrap_or(false)
}

pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(psd_eig(m)?.map(|x| x.max(0.0).sqrt()))
}

/// `A^{-1/2}` on the support of `A`, zero on its kernel.
pub fn psd_pinv_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = psd_eig(m)?;
    let cut = e.support_cutoff();
    Ok(e.map(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 }))
}

pub fn psd_pinv(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = psd_eig(m)?;
    let cut = e.support_cutoff();
    Ok(e.map(|x| if x > cut { 1.0 / x } else { 0.0 }))
}

pub fn support_projector(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = herm_eig(m)?;
    let cut = e.support_cutoff();
    Ok(e.projector(|x| x > cut))
}

pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return vec![];
    }
    let svd = SVD::new(m.to_nalgebra(), false, false);
    svd.singular_values.iter().copied().collect()
}

pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_square() && m.hermiticity_defect() <= DEFAULT.hermitian * m.max_abs().max(1.0) {
        if let Ok(e) = herm_eig(m) {
            return e.values.iter().map(|x| x.abs()).sum();
        }
    }
    singular_values(m).iter().sum()
}

pub fn op_norm(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    Ok(singular_values(m).iter().copied().fold(0.0, f64::max))
}

/// Unitary polar factor `W V^dagger` of `A = W S V^dagger`.
pub fn polar_unitary(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let svd = SVD::new(m.to_nalgebra(), true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    Ok(ComplexMatrix::from_nalgebra(&(u * vt)))
}

pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() != b.rows() {
        return Err(Error::Dimension("solve: incompatible shapes".into()));
    }
    let lu = a.to_nalgebra().lu();
    lu.solve(&b.to_nalgebra())
        .map(|x| ComplexMatrix::from_nalgebra(&x))
        .ok_or_else(|| Error::InvalidParameter("singular linear system".into()))
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.cols()).map(|j| (0..m.rows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let n = m.rows();
    let norm = one_norm(m);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m.scale_real(0.5f64.powi(s));
    let id = ComplexMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);
    let lin = |terms: &[(usize, &ComplexMatrix)]| {
        let mut out = ComplexMatrix::zeros(n, n);
        for &(k, t) in terms {
            out.axpy(b(k), t);
        }
        out
    };
    let u_inner = &a6 * &lin(&[(13, &a6), (11, &a4), (9, &a2)]) + lin(&[(7, &a6), (5, &a4), (3, &a2), (1, &id)]);
    let u = &a * &u_inner;
    let v = &a6 * &lin(&[(12, &a6), (10, &a4), (8, &a2)]) + lin(&[(6, &a6), (4, &a4), (2, &a2), (0, &id)]);
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}

pub fn basis_vector(n: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; n];
    v[k] = ONE;
    v
}

/// Real orthonormal basis vectors spanning the same space as `rows` (Gram-Schmidt with rank cutoff).
pub fn orthonormal_rows(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        let mut v = r.clone();
        for _ in 0..2 {
            for q in &out {
                let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > tol {
            out.push(v.iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Null space basis (columns) of a real matrix via SVD.
pub fn real_null_space(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if m == 0 {
        return DMatrix::identity(n, n);
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("svd v_t");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= cut).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| vt[(cols[j], i)])
}
