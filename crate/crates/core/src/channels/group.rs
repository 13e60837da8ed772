use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{c, kron, ComplexMatrix};
use crate::tolerance::DEFAULT;

/// A symmetry group acting by conjugation.
///
/// Finite groups are stored as explicit element lists; closure is checked up to a global
/// phase, which is all the conjugation action sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UnitaryGroup {
    Finite { dim: usize, elements: Vec<ComplexMatrix> },
    /// `{U (x) conj(U)}` over all of `U(d)`, acting on `d^2` dimensions.
    UUStar { d: usize },
}

fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let ov = a.hs_inner(b);
    if ov.norm() < 1e-12 {
        return f64::INFINITY;
    }
    let phase = ov / ov.norm();
    a.scale(phase).max_abs_diff(b)
}

impl UnitaryGroup {
    pub fn finite(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidParameter("empty group".into()));
        };
        let dim = first.rows();
        for u in &elements {
            if u.rows() != dim {
                return Err(Error::Dimension("group elements differ in size".into()));
            }
            let defect = u.unitarity_defect();
            if defect > 1e-9 {
                return Err(Error::NotUnitary(defect));
            }
        }
        let mut worst = 0.0f64;
        for a in &elements {
            for b in &elements {
                let p = a * b;
                let best = elements.iter().map(|e| equal_up_to_phase(e, &p)).fold(f64::INFINITY, f64::min);
                worst = worst.max(best);
            }
        }
        if worst > DEFAULT.closure {
            return Err(Error::NotClosed(worst));
        }
        Ok(Self::Finite { dim, elements })
    }

    /// Closure of the given generators under multiplication, modulo phases.
    pub fn generated_by(generators: &[ComplexMatrix], max_order: usize) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::InvalidParameter("no generators".into()));
        };
        let mut elements = vec![ComplexMatrix::identity(first.rows())];
        let mut frontier = elements.clone();
        while !frontier.is_empty() {
            let mut next = vec![];
            for a in &frontier {
                for g in generators {
                    let p = a * g;
                    if !elements.iter().any(|e| equal_up_to_phase(e, &p) < 1e-9) {
                        elements.push(p.clone());
                        next.push(p);
                        if elements.len() > max_order {
                            return Err(Error::Guard(format!("generated group exceeds {max_order} elements")));
                        }
                    }
                }
            }
            frontier = next;
        }
        Self::finite(elements)
    }

    /// Qubit phase rotations `diag(1, e^{2 pi i k / order})`.
    pub fn phase_rotations(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("order must be positive".into()));
        }
        let elements = (0..order)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / order as f64;
                ComplexMatrix::from_diag(&[c(1.0, 0.0), c(t.cos(), t.sin())])
            })
            .collect();
        Self::finite(elements)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite { dim, .. } => *dim,
            Self::UUStar { d } => d * d,
        }
    }

    pub fn elements(&self) -> Option<&[ComplexMatrix]> {
        match self {
            Self::Finite { elements, .. } => Some(elements),
            Self::UUStar { .. } => None,
        }
    }

    /// Product group acting factorwise on `k` copies.
    pub fn tensor_power(&self, k: usize) -> Result<Self> {
        match self {
            Self::Finite { elements, dim } => {
                let n = elements.len().pow(k as u32);
                if n > 4096 {
                    return Err(Error::Guard(format!("product group of size {n}")));
                }
                let mut out = vec![ComplexMatrix::identity(1)];
                for _ in 0..k {
                    out = out.iter().flat_map(|a| elements.iter().map(move |b| kron(a, b))).collect();
                }
                Ok(Self::Finite { dim: dim.pow(k as u32), elements: out })
            }
            Self::UUStar { .. } if k == 1 => Ok(self.clone()),
            Self::UUStar { .. } => Err(Error::InvalidParameter("tensor powers of U(x)U* are not supported".into())),
        }
    }
}
