//! Seeded random states, unitaries and channels.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::DensityMatrix;
use crate::kernel::{normalize, ComplexMatrix};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child generator for stream `k`; independent of how many workers run the streams.
pub fn child_rng(seed: u64, k: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k + 1);
    r
}

pub fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn haar_ket(d: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..d).map(|_| gaussian(rng)).collect();
    normalize(&mut v);
    v
}

pub fn haar_pure_state(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let v = haar_ket(d, rng);
    DensityMatrix::trusted(vec![d], ComplexMatrix::outer(&v, &v))
}

/// Mixed state `G G^dagger / tr` from a `d x rank` Ginibre matrix.
pub fn random_density(d: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(d, rank.max(1), rng);
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    DensityMatrix::trusted(vec![d], p.scale_real(1.0 / t).hermitian_part())
}

/// Haar unitary via Gram-Schmidt on Ginibre columns.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.col(j);
        for _ in 0..2 {
            for q in &cols {
                let ov: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= ov * y;
                }
            }
        }
        normalize(&mut v);
        cols.push(v);
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Isometry `d_in -> d_out * k` split into `k` Kraus operators.
pub fn haar_kraus(d_in: usize, d_out: usize, k: usize, rng: &mut impl Rng) -> Vec<ComplexMatrix> {
    let big = d_out * k;
    assert!(big >= d_in, "need d_out * k >= d_in for an isometry");
    let u = haar_unitary(big, rng);
    (0..k)
        .map(|e| ComplexMatrix::from_fn(d_out, d_in, |i, j| u[(e * d_out + i, j)]))
        .collect()
}

pub fn random_probabilities(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}
