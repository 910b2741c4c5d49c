//! Slow reference solvers used to validate the production pipeline.
//!
//! Nothing here shares numerical machinery with the interior-point method:
//! the cutting-plane solver reduces the concave program to a sequence of
//! linear programs through tangent relaxations, so agreement between the
//! two routes is meaningful evidence of correctness.

use crate::error::{Error, Result};
use crate::ipm::ConvexProgram;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};

/// Maximize the program's objective by outer linearization (Kelley's
/// cutting-plane method).
///
/// Every concave constraint is replaced by an accumulating family of
/// tangent cuts; each round solves the resulting LP relaxation and cuts at
/// the relaxation optimum. Because tangents over-estimate a concave
/// function, every LP value bounds the true optimum from above, and the
/// first relaxation optimum that satisfies the original constraints to
/// `tol` is optimal to the same tolerance.
///
/// All variable upper bounds must be finite (the initial relaxation has no
/// other rows); cap epigraph variables before calling. Intended for tests —
/// convergence is reliable but slow.
pub fn kelley_solve(
    prog: &ConvexProgram,
    tol: f64,
    max_rounds: usize,
) -> Result<(Vec<f64>, f64)> {
    prog.validate()?;
    if let Some(&bad) = prog.upper.iter().find(|u| !u.is_finite()) {
        return Err(Error::Domain { what: "cutting-plane upper bound (must be finite)", value: bad });
    }

    let _n = prog.num_vars;
    let negated: Vec<f64> = prog.objective.iter().map(|&c| -c).collect();
    let mut lp = LinearProgram::minimize(negated).with_upper(prog.upper.clone());

    // Linear constraints need no cuts; add them once.
    for con in &prog.constraints {
        if con.logs.is_empty() {
            lp.push_row(con.lin.clone(), Relation::Ge, con.rhs);
        }
    }

    for round in 0..max_rounds {
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(Error::Solver("cutting-plane relaxation infeasible".into()))
            }
            LpStatus::Unbounded => {
                return Err(Error::Solver("cutting-plane relaxation unbounded".into()))
            }
        }
        // Basis arithmetic can land a hair outside the box; the log terms
        // and tangents require exact non-negativity.
        let x: Vec<f64> = sol
            .x
            .iter()
            .zip(&prog.upper)
            .map(|(&v, &u)| v.clamp(0.0, u))
            .collect();
        let x = &x;

        let mut worst = 0.0f64;
        let mut cut_added = false;
        for con in &prog.constraints {
            if con.logs.is_empty() {
                continue;
            }
            let violation = -con.eval(x);
            worst = worst.max(violation);
            if violation <= tol {
                continue;
            }
            // Tangent cut: lin·x + Σ w·(tangent of log2 at x) ≥ rhs.
            let mut coeffs: Vec<(usize, f64)> = con.lin.clone();
            let mut rhs = con.rhs;
            for wl in &con.logs {
                let tangent = wl.term.tangent_at(x)?;
                rhs -= wl.weight * tangent.constant;
                for &(j, a) in &tangent.coeffs {
                    coeffs.push((j, wl.weight * a));
                }
            }
            lp.push_row(coeffs, Relation::Ge, rhs);
            cut_added = true;
        }

        if !cut_added {
            let objective = prog.objective.iter().zip(x).map(|(c, v)| c * v).sum();
            return Ok((x.clone(), objective));
        }
        let _ = (round, worst);
    }
    Err(Error::Solver("cutting-plane method did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ipm::{ConcaveConstraint, WeightedLog};
    use crate::taylor::LogTerm;
    use approx::assert_relative_eq;

    /// max t s.t. t ≤ log2(1+x₀) + log2(2+x₁), x₀+x₁ ≤ 1 → t* = 2 at (1,0).
    #[test]
    fn water_filling_reference() {
        let prog = ConvexProgram {
            num_vars: 3,
            objective: vec![0.0, 0.0, 1.0],
            upper: vec![1.0, 1.0, 64.0],
            constraints: vec![
                ConcaveConstraint {
                    lin: vec![(2, -1.0)],
                    logs: vec![
                        WeightedLog {
                            weight: 1.0,
                            term: LogTerm::new(vec![(0, 1.0)], 1.0).unwrap(),
                        },
                        WeightedLog {
                            weight: 1.0,
                            term: LogTerm::new(vec![(1, 1.0)], 2.0).unwrap(),
                        },
                    ],
                    rhs: 0.0,
                },
                ConcaveConstraint { lin: vec![(0, -1.0), (1, -1.0)], logs: Vec::new(), rhs: -1.0 },
            ],
            blocks: None,
        };
        let (x, obj) = kelley_solve(&prog, 1e-9, 400).unwrap();
        assert_relative_eq!(obj, 2.0, epsilon = 1e-6);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-4);
    }

    #[test]
    fn rejects_unbounded_variables() {
        let prog = ConvexProgram {
            num_vars: 1,
            objective: vec![1.0],
            upper: vec![f64::INFINITY],
            constraints: Vec::new(),
            blocks: None,
        };
        assert!(kelley_solve(&prog, 1e-9, 10).is_err());
    }
}
