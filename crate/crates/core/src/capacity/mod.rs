//! One-shot classical communication: M-codes, decoders and the capacity search.

mod bounds;
mod entangled;

pub use bounds::{
    corollary1_upper, random_codebook_experiment, theorem1_bound, theorem1_upper, theorem2_lower, CodebookExperiment, Theorem1Bound,
    Theorem1Params,
};
pub use entangled::{
    cme_capacity, entanglement_preservability_upper, fef_threshold_check, max_weight_matchings, theorem4_check,
    theorem4_check_entanglement, CmeCapacity, FefThresholdCheck, Theorem4Check,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{ChannelChoi, UnitaryGroup};
use crate::error::{Error, Result};
use crate::kernel::{basis_vector, herm_eig, ComplexMatrix};
use crate::monotones::sdp::MAX_COMPLEX_DIM;
use crate::monotones::{optimal_povm, BoundKind, BoundReport};
use crate::quantum::random::{child_rng, haar_ket};
use crate::quantum::{pretty_good_measurement, DensityMatrix, Povm};

/// Slack on `p >= 1 - epsilon`; the definition uses `>=`, so ties accept.
pub const TIE: f64 = 1e-10;

/// Encodings `rho_m` with a decoding POVM `{E_m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBook {
    pub encodings: Vec<DensityMatrix>,
    pub decoder: Povm,
}

impl CodeBook {
    pub fn new(encodings: Vec<DensityMatrix>, decoder: Povm) -> Result<Self> {
        if encodings.is_empty() || encodings.len() != decoder.len() {
            return Err(Error::Dimension(format!("{} encodings for {} effects", encodings.len(), decoder.len())));
        }
        let d = encodings[0].dim();
        if encodings.iter().any(|e| e.dim() != d) {
            return Err(Error::Dimension("encodings differ in dimension".into()));
        }
        Ok(Self { encodings, decoder })
    }

    pub fn m(&self) -> usize {
        self.encodings.len()
    }
}

/// Message `m` is encoded by the group element with index `assignments[m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookMap {
    pub assignments: Vec<usize>,
    pub group: UnitaryGroup,
}

impl CodebookMap {
    pub fn new(assignments: Vec<usize>, group: UnitaryGroup) -> Result<Self> {
        let size = group
            .elements()
            .ok_or_else(|| Error::InvalidParameter("codebook maps need a finite group".into()))?
            .len();
        if let Some(bad) = assignments.iter().find(|&&g| g >= size) {
            return Err(Error::InvalidParameter(format!("group index {bad} out of range (size {size})")));
        }
        Ok(Self { assignments, group })
    }

    /// `U_{g_m} rho U_{g_m}^dagger` for every message.
    pub fn encodings(&self, rho: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
        let els = self.group.elements().expect("finite group checked on construction");
        if els[0].rows() != rho.dim() {
            return Err(Error::Dimension("state and group act on different dimensions".into()));
        }
        Ok(self
            .assignments
            .iter()
            .map(|&g| DensityMatrix::trusted(rho.dims.clone(), rho.mat.conjugate_by(&els[g]).hermitian_part()))
            .collect())
    }
}

/// `(1/M) sum_m tr[E_m n(rho_m)]`, clamped to `[0, 1]`.
pub fn success_probability(n: &ChannelChoi, code: &CodeBook) -> Result<f64> {
    if code.encodings[0].dim() != n.d_in || code.decoder.dim() != n.d_out {
        return Err(Error::Dimension(format!(
            "code acts on {} -> {}, channel on {} -> {}",
            code.encodings[0].dim(),
            code.decoder.dim(),
            n.d_in,
            n.d_out
        )));
    }
    let total: f64 =
        code.encodings.iter().zip(&code.decoder.elements).map(|(r, e)| e.trace_product(&n.apply_op(&r.mat)).re).sum();
    Ok((total / code.m() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone)]
pub struct Decoder {
    pub povm: Povm,
    /// Average success probability under the uniform prior.
    pub value: f64,
    /// Upper bound on the optimal average success (infinite if uncertified).
    pub upper: f64,
    pub kind: BoundKind,
}

fn pgm_decoder(outs: &[ComplexMatrix]) -> Result<Decoder> {
    let povm = pretty_good_measurement(outs)?;
    let value = povm.elements.iter().zip(outs).map(|(e, s)| e.trace_product(s).re).sum();
    Ok(Decoder { povm, value, upper: f64::INFINITY, kind: BoundKind::Heuristic })
}

fn decode_outputs(outs: &[ComplexMatrix]) -> Result<Decoder> {
    let n = outs[0].rows();
    if outs.len() * n > MAX_COMPLEX_DIM {
        return pgm_decoder(outs);
    }
    let d = optimal_povm(outs)?;
    if !d.upper.is_finite() {
        return pgm_decoder(outs);
    }
    let pgm = pgm_decoder(outs)?;
    let upper = d.upper.min(1.0);
    if pgm.value > d.value {
        return Ok(Decoder { upper, kind: BoundKind::Exact, ..pgm });
    }
    Ok(Decoder { povm: d.povm, value: d.value, upper, kind: BoundKind::Exact })
}

/// Best decoder for the outputs `n(rho_m)` under the uniform prior. Programs too large for
/// the solver, or failing ones, use the pretty good measurement and are flagged heuristic.
pub fn optimal_decoder(n: &ChannelChoi, encodings: &[DensityMatrix]) -> Result<Decoder> {
    if encodings.is_empty() {
        return Err(Error::InvalidParameter("no encodings".into()));
    }
    if encodings.iter().any(|e| e.dim() != n.d_in) {
        return Err(Error::Dimension("encoding dimension differs from the channel input".into()));
    }
    let w = 1.0 / encodings.len() as f64;
    let outs: Vec<ComplexMatrix> = encodings.iter().map(|r| n.apply_op(&r.mat).hermitian_part().scale_real(w)).collect();
    decode_outputs(&outs)
}

#[derive(Debug, Clone)]
pub struct CapacitySearch {
    pub report: BoundReport,
    /// Largest message count reached; zero only if the search space was empty.
    pub m: usize,
    pub success: f64,
    pub code: Option<CodeBook>,
}

fn pure(v: &[num_complex::Complex64]) -> DensityMatrix {
    DensityMatrix::trusted(vec![v.len()], ComplexMatrix::outer(v, v))
}

/// Alternating optimization for a fixed `m`: decoder for the current encodings, then
/// encodings as top eigenvectors of `n^dagger(E_m)`.
fn seesaw_code(n: &ChannelChoi, m: usize, start: Vec<DensityMatrix>) -> Result<(f64, CodeBook)> {
    let mut enc = start;
    let mut best: Option<(f64, CodeBook)> = None;
    for _ in 0..50 {
        let dec = optimal_decoder(n, &enc)?;
        let improved = best.as_ref().map_or(true, |b| dec.value > b.0 + 1e-10);
        if !improved {
            break;
        }
        let next: Vec<DensityMatrix> = dec
            .povm
            .elements
            .iter()
            .map(|e| {
                let h = herm_eig(&n.adjoint_apply(e).hermitian_part())?;
                Ok(pure(&h.vector(n.d_in - 1)))
            })
            .collect::<Result<_>>()?;
        best = Some((dec.value, CodeBook { encodings: enc, decoder: dec.povm }));
        enc = next;
        debug_assert_eq!(enc.len(), m);
    }
    Ok(best.expect("at least one iteration"))
}

fn search_m(n: &ChannelChoi, m: usize, restarts: usize, seed: u64) -> Result<(f64, CodeBook)> {
    let d = n.d_in;
    let runs: Vec<Result<(f64, CodeBook)>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start: Vec<DensityMatrix> = if r == 0 {
                (0..m).map(|k| pure(&basis_vector(d, k % d))).collect()
            } else {
                let mut g = child_rng(seed, (m as u64) << 20 | r as u64);
                (0..m).map(|_| pure(&haar_ket(d, &mut g))).collect()
            };
            seesaw_code(n, m, start)
        })
        .collect();
    let mut best: Option<(f64, CodeBook)> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().map_or(true, |b| run.0 > b.0 + 1e-12) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Searches `M = m_max, m_max - 1, ...` for a code with success `>= 1 - epsilon` and reports
/// `log2 M` of the first one found. Counts with `1/M >= 1 - epsilon` need no search (uniform
/// guessing), and counts above `d_out / (1 - epsilon)` are impossible.
pub fn one_shot_capacity_search(n: &ChannelChoi, epsilon: f64, m_max: usize, restarts: usize, seed: u64) -> Result<CapacitySearch> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} outside [0, 1)")));
    }
    let target = 1.0 - epsilon;
    let guess = ((1.0 / target) + TIE).floor() as usize;
    let cap = ((n.d_out as f64 / target) + TIE).floor() as usize;
    let top = m_max.min(cap).max(1);
    for m in (1..=top).rev() {
        if m <= guess {
            let report = BoundReport::new(
                "capacity_lower",
                (m as f64).log2(),
                BoundKind::Lower,
                "uniform guessing",
                0.0,
            );
            return Ok(CapacitySearch { report, m, success: 1.0 / m as f64, code: None });
        }
        let (_, code) = search_m(n, m, restarts, seed)?;
        let p = success_probability(n, &code)?;
        if p >= target - TIE {
            let report = BoundReport::new(
                "capacity_lower",
                (m as f64).log2(),
                BoundKind::Lower,
                format!("see-saw code search, M = {m}, success {p:.9}"),
                TIE,
            );
            return Ok(CapacitySearch { report, m, success: p, code: Some(code) });
        }
    }
    unreachable!("M = 1 is always accepted by uniform guessing")
}

pub fn one_shot_capacity_lower(n: &ChannelChoi, epsilon: f64, m_max: usize, restarts: usize, seed: u64) -> Result<BoundReport> {
    Ok(one_shot_capacity_search(n, epsilon, m_max, restarts, seed)?.report)
}
