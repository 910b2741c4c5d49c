//! First-order tangent bounds for logarithmic interference terms.
//!
//! The power-allocation subproblems contain constraints of the form
//! `… + log2(Σ_j w_j x_j + b) ≤ …` where the log term sits on the wrong
//! (concave) side. Because `log2` of an affine form is concave, its
//! first-order Taylor expansion at any expansion point is a *global* upper
//! bound that touches the function exactly at that point; substituting the
//! tangent therefore shrinks the feasible set (every point that satisfies
//! the tightened constraint satisfies the original) while agreeing with the
//! true constraint at the expansion point. That pair of facts — domination
//! and tangency — is what makes the successive approximation loop monotone,
//! and both are asserted by the test suite.
//!
//! The gradient uses the full-sum denominator: `∂/∂x_j log2(Σ w x + b)
//! = w_j / (ln2 · (Σ w x + b))`, evaluated at the expansion point.

use crate::error::{Error, Result};

/// `log2(Σ_j weights_j · x_j + offset)` over a shared variable vector.
///
/// Weights must be non-negative and the offset strictly positive (it is a
/// noise floor), so the argument is positive wherever `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LogTerm {
    pub weights: Vec<(usize, f64)>,
    pub offset: f64,
}

/// Affine function `constant + Σ coeffs_j · x_j`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AffineExpr {
    pub constant: f64,
    pub coeffs: Vec<(usize, f64)>,
}

impl AffineExpr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.coeffs.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

impl LogTerm {
    pub fn new(weights: Vec<(usize, f64)>, offset: f64) -> Result<Self> {
        if !offset.is_finite() || offset <= 0.0 {
            return Err(Error::Domain { what: "log term offset (must be positive)", value: offset });
        }
        for &(_, w) in &weights {
            if !w.is_finite() {
                return Err(Error::NonFinite { what: "log term weight" });
            }
            if w < 0.0 {
                return Err(Error::Domain { what: "log term weight", value: w });
            }
        }
        Ok(LogTerm { weights, offset })
    }

    /// The affine argument `Σ w x + offset`.
    pub fn arg(&self, x: &[f64]) -> f64 {
        self.offset + self.weights.iter().map(|&(j, w)| w * x[j]).sum::<f64>()
    }

    /// The term value `log2(arg)`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.arg(x).log2()
    }

    /// Tangent at `x0`: an affine global upper bound on the term, exact at
    /// `x0`. Requires `x0 ≥ 0` on the term's support.
    pub fn tangent_at(&self, x0: &[f64]) -> Result<AffineExpr> {
        for &(j, _) in &self.weights {
            let v = x0.get(j).copied().ok_or(Error::DimensionMismatch {
                what: "tangent expansion point",
                expected: format!("length > {j}"),
                got: x0.len().to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { what: "tangent expansion point" });
            }
            if v < 0.0 {
                return Err(Error::Domain { what: "tangent expansion point", value: v });
            }
        }
        let s = self.arg(x0);
        let denom = std::f64::consts::LN_2 * s;
        let coeffs: Vec<(usize, f64)> =
            self.weights.iter().map(|&(j, w)| (j, w / denom)).collect();
        // log2(s) − Σ (w_j/ (ln2·s)) x0_j = log2(s) − (s − offset)/(ln2·s).
        let constant = s.log2() - (s - self.offset) / denom;
        Ok(AffineExpr { constant, coeffs })
    }
}
