use serde::{Deserialize, Serialize};

use super::ChannelChoi;
use crate::error::{Error, Result};
use crate::kernel::{partial_trace, trace_norm, ComplexMatrix};
use crate::monotones::sdp::{sdp_solve, SdpOptions, SdpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiamondMode {
    Exact,
    Bracket,
}

/// `lower <= ||e - f||_diamond <= upper`; `exact` is set when the SDP converged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiamondReport {
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
    pub method: String,
}

/// Largest `d_in * d_out` for which the exact program is attempted.
pub const EXACT_LIMIT: usize = 16;

pub fn diamond_distance(e: &ChannelChoi, f: &ChannelChoi, mode: DiamondMode) -> Result<DiamondReport> {
    if (e.d_in, e.d_out) != (f.d_in, f.d_out) {
        return Err(Error::Dimension("channels differ in dimensions".into()));
    }
    let delta = &e.choi - &f.choi;
    let t = trace_norm(&delta);
    let lower = t / e.d_in as f64;
    let upper = t;
    let bracket = |method: &str| DiamondReport { lower, upper, exact: None, method: method.into() };
    if mode == DiamondMode::Bracket {
        return Ok(bracket("choi trace-norm bracket"));
    }
    if e.d_in * e.d_out > EXACT_LIMIT {
        return Ok(bracket("choi trace-norm bracket (exact program too large)"));
    }
    if upper < 1e-12 {
        return Ok(DiamondReport { lower: 0.0, upper: 0.0, exact: Some(0.0), method: "identical channels".into() });
    }
    match exact(&delta, e.d_out, e.d_in) {
        Ok((lo, hi)) => {
            let lo = lo.max(lower).min(upper);
            let hi = hi.min(upper).max(lo);
            Ok(DiamondReport { lower: lo, upper: hi, exact: Some(0.5 * (lo + hi)), method: "sdp".into() })
        }
        Err(err) => {
            log::warn!("diamond SDP failed ({err}); falling back to bracket");
            Ok(bracket("choi trace-norm bracket (sdp fallback)"))
        }
    }
}

/// `min 2 s  s.t.  Z >= J, Z >= 0, s I >= tr_out Z`; returns (dual, primal) objective values.
fn exact(delta: &ComplexMatrix, d_out: usize, d_in: usize) -> Result<(f64, f64)> {
    let n = d_out * d_in;
    let mut p = SdpProblem::new(0);
    let s = p.add_var();
    p.objective[s] = 2.0;
    let z = p.add_herm_var(n);
    let b_dom = p.add_block(-delta);
    p.add_herm_term(b_dom, z, |m| m.clone());
    let b_pos = p.add_block(ComplexMatrix::zeros(n, n));
    p.add_herm_term(b_pos, z, |m| m.clone());
    let b_tr = p.add_block(ComplexMatrix::zeros(d_in, d_in));
    p.add_term(b_tr, s, ComplexMatrix::identity(d_in));
    p.add_herm_term(b_tr, z, |m| -partial_trace(m, &[d_out, d_in], &[1]).expect("dims"));
    let sol = sdp_solve(&p, &SdpOptions::default())?;
    Ok((sol.dual_value, sol.value))
}
