//! Optimal discrimination of a finite ensemble of (possibly unnormalized) operators.

use super::sdp::{sdp_solve, SdpOptions, SdpProblem};
use crate::error::{Error, Result};
use crate::kernel::{herm_eig, psd_pinv_sqrt, ComplexMatrix};
use crate::quantum::{pretty_good_measurement, Povm};

fn povm_sum(effects: &[ComplexMatrix], ops: &[ComplexMatrix]) -> f64 {
    effects.iter().zip(ops).map(|(e, s)| e.trace_product(s).re).sum()
}

/// Clips negative eigenvalues and renormalizes so the effects form an exact POVM.
fn repair(effects: Vec<ComplexMatrix>) -> Result<Vec<ComplexMatrix>> {
    let n = effects[0].rows();
    let clipped: Vec<ComplexMatrix> =
        effects.iter().map(|e| herm_eig(&e.hermitian_part()).map(|h| h.map(|x| x.max(0.0)))).collect::<Result<_>>()?;
    let mut total = ComplexMatrix::zeros(n, n);
    for e in &clipped {
        total += e;
    }
    let s = psd_pinv_sqrt(&total.hermitian_part())?;
    let mut out: Vec<ComplexMatrix> = clipped.iter().map(|e| e.conjugate_by(&s).hermitian_part()).collect();
    let mut sum = ComplexMatrix::zeros(n, n);
    for e in &out {
        sum += e;
    }
    let missing = &ComplexMatrix::identity(n) - &sum;
    let fix = herm_eig(&missing.hermitian_part())?.map(|x| x.max(0.0));
    out[0] += &fix;
    Ok(out)
}

/// Result of discriminating `ops`: an exact POVM, the achieved `sum_m tr(E_m ops_m)` and a
/// dual upper bound on the optimum (equal to the achieved value on the closed-form routes).
#[derive(Debug, Clone)]
pub struct Discrimination {
    pub povm: Povm,
    pub value: f64,
    pub upper: f64,
    pub method: &'static str,
}

/// Maximizes `sum_m tr(E_m ops_m)` over POVMs; falls back to the pretty good measurement
/// (with `upper` set to infinity) if the program fails.
pub fn optimal_povm(ops: &[ComplexMatrix]) -> Result<Discrimination> {
    let Some(first) = ops.first() else {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    };
    let n = first.rows();
    if ops.iter().any(|o| o.rows() != n || !o.is_square()) {
        return Err(Error::Dimension("ensemble operators differ in size".into()));
    }
    let m = ops.len();
    if m == 1 {
        let v = ops[0].trace().re;
        return Ok(Discrimination { povm: Povm { elements: vec![ComplexMatrix::identity(n)] }, value: v, upper: v, method: "trivial" });
    }
    match sdp_route(ops) {
        Ok(d) => Ok(d),
        Err(err) => {
            log::warn!("discrimination program failed ({err}); using the pretty good measurement");
            let povm = pretty_good_measurement(ops)?;
            let value = povm_sum(&povm.elements, ops);
            Ok(Discrimination { povm, value, upper: f64::INFINITY, method: "pretty good measurement" })
        }
    }
}

fn sdp_route(ops: &[ComplexMatrix]) -> Result<Discrimination> {
    let n = ops[0].rows();
    let m = ops.len();
    let last = &ops[m - 1];
    let mut p = SdpProblem::new(0);
    let vars: Vec<_> = (0..m - 1).map(|_| p.add_herm_var(n)).collect();
    // E_{M-1} = I - sum of the others; maximize sum_m tr(E_m ops_m).
    for (k, v) in vars.iter().enumerate() {
        let diff = (&ops[k] - last).hermitian_part();
        for j in 0..v.len() {
            p.objective[v.offset + j] = -v.basis(j).trace_product(&diff).re;
        }
        let b = p.add_block(ComplexMatrix::zeros(n, n));
        p.add_herm_term(b, *v, |x| x.clone());
    }
    let b_last = p.add_block(ComplexMatrix::identity(n));
    for v in &vars {
        p.add_herm_term(b_last, *v, |x| -x);
    }
    let sol = sdp_solve(&p, &SdpOptions::default())?;
    let mut effects: Vec<ComplexMatrix> = vars.iter().map(|v| v.value(&sol.y)).collect();
    let mut rest = ComplexMatrix::identity(n);
    for e in &effects {
        rest -= e;
    }
    effects.push(rest);
    let effects = repair(effects)?;
    let value = povm_sum(&effects, ops);
    let upper = last.trace().re - sol.dual_value;
    Ok(Discrimination { povm: Povm { elements: effects }, value, upper: upper.max(value), method: "sdp" })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{plus_state, DensityMatrix};

    #[test]
    fn helstrom_pair() {
        let a = DensityMatrix::basis(2, 0).mat.scale_real(0.5);
        let b = plus_state().mat.scale_real(0.5);
        let d = optimal_povm(&[a, b]).unwrap();
        let expected = 0.5 * (1.0 + 0.5f64.sqrt());
        assert!((d.value - expected).abs() < 1e-7, "{}", d.value);
        assert!(d.upper >= d.value - 1e-12 && d.upper - expected < 1e-6);
        d.povm.validate(1e-9).unwrap();
    }

    #[test]
    fn orthogonal_triple_is_perfect() {
        let ops: Vec<_> = (0..3).map(|k| DensityMatrix::basis(3, k).mat).collect();
        let d = optimal_povm(&ops).unwrap();
        assert!((d.value - 3.0).abs() < 1e-7);
    }

    #[test]
    fn identical_states_give_one() {
        let ops = vec![DensityMatrix::maximally_mixed(2).mat; 3];
        let d = optimal_povm(&ops).unwrap();
        assert!((d.value - 1.0).abs() < 1e-7);
    }
}
