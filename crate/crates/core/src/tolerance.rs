//! Numerical tolerances shared by every module.
//!
//! Each field can be overridden by name, which is how the command line `--tol NAME=VALUE`
//! flag reaches the library.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Max |A - A^dagger| entry before a matrix counts as non-Hermitian.
    pub hermitian: f64,
    /// Smallest eigenvalue still accepted as PSD.
    pub psd: f64,
    /// Relative eigenvalue cutoff used to define supports and pseudo-inverses.
    pub support: f64,
    /// Trace and normalization checks.
    pub trace: f64,
    /// POVM completeness.
    pub povm: f64,
    /// Free-state / free-operation membership.
    pub free: f64,
    /// Target duality gap of the SDP solver.
    pub sdp_gap: f64,
    /// Group closure check.
    pub closure: f64,
    /// Bisection and see-saw convergence.
    pub convergence: f64,
}

pub const DEFAULT: Tolerances = Tolerances {
    hermitian: 1e-10,
    psd: 1e-9,
    support: 1e-10,
    trace: 1e-10,
    povm: 1e-9,
    free: 1e-8,
    sdp_gap: 1e-6,
    closure: 1e-8,
    convergence: 1e-10,
};

impl Default for Tolerances {
    fn default() -> Self {
        DEFAULT
    }
}

impl Tolerances {
    pub fn names() -> &'static [&'static str] {
        &["hermitian", "psd", "support", "trace", "povm", "free", "sdp_gap", "closure", "convergence"]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {name} must be finite and >= 0")));
        }
        let slot = match name {
            "hermitian" => &mut self.hermitian,
            "psd" => &mut self.psd,
            "support" => &mut self.support,
            "trace" => &mut self.trace,
            "povm" => &mut self.povm,
            "free" => &mut self.free,
            "sdp_gap" => &mut self.sdp_gap,
            "closure" => &mut self.closure,
            "convergence" => &mut self.convergence,
            _ => return Err(Error::InvalidParameter(format!("unknown tolerance {name}"))),
        };
        *slot = value;
        Ok(())
    }

    /// Parses `NAME=VALUE`.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected NAME=VALUE, got {assignment}")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("tolerance value {value} is not a number")))?;
        self.set(name.trim(), value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_overrides_single_field() {
        let mut t = Tolerances::default();
        t.apply_assignment("free=1e-6").unwrap();
        assert_eq!(t.free, 1e-6);
        assert_eq!(t.psd, DEFAULT.psd);
        assert!(t.apply_assignment("bogus=1").is_err());
        assert!(t.apply_assignment("free").is_err());
        assert!(t.apply_assignment("free=-1").is_err());
    }
}
