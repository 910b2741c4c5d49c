//! Dense bounded-variable primal simplex.
//!
//! Solves `min c·x` subject to sparse linear rows (`≤`, `=`, `≥`) and box
//! bounds `0 ≤ x_j ≤ u_j` (upper bounds may be infinite). Sized for the
//! problems this crate produces — a few dozen rows — so the basis inverse is
//! kept densely and refreshed by periodic refactorization.
//!
//! Method: two-phase revised simplex. Phase 1 minimizes the sum of
//! artificial variables (rows whose slack cannot seed a feasible basis get
//! one); phase 2 minimizes the true objective with artificials pinned to
//! zero. Pricing is Dantzig (most negative reduced cost) with a Bland
//! (lowest-index) fallback that engages after a run of degenerate pivots, so
//! cycling cannot persist. Every returned optimum carries its dual vector
//! and the residual duality gap `|c·x − (y·b + Σ_upper d_j u_j)|`, which is
//! an independent optimality certificate — callers assert on it rather than
//! trusting the pivot log.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Row sense for [`LpRow`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

/// One sparse constraint row: `Σ coeffs · x  rel  rhs`.
#[derive(Debug, Clone)]
pub struct LpRow {
    /// `(variable index, coefficient)` pairs; indices must be < `num_vars`.
    pub coeffs: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// `min objective·x` over `0 ≤ x ≤ upper`, subject to `rows`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// Per-variable upper bound; `f64::INFINITY` for a free-above variable.
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

impl LinearProgram {
    /// Problem with all upper bounds infinite.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram { num_vars: n, objective, upper: vec![f64::INFINITY; n], rows: Vec::new() }
    }

    pub fn with_upper(mut self, upper: Vec<f64>) -> Self {
        self.upper = upper;
        self
    }

    pub fn push_row(&mut self, coeffs: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        self.rows.push(LpRow { coeffs, rel, rhs });
    }

    fn validate(&self) -> Result<()> {
        if self.objective.len() != self.num_vars || self.upper.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                what: "linear program",
                expected: self.num_vars.to_string(),
                got: format!("c: {}, u: {}", self.objective.len(), self.upper.len()),
            });
        }
        for v in self.objective.iter().chain(self.upper.iter()) {
            if v.is_nan() {
                return Err(Error::NonFinite { what: "lp objective/bounds" });
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(Error::NonFinite { what: "lp rhs" });
            }
            for &(j, v) in &row.coeffs {
                if j >= self.num_vars {
                    return Err(Error::DimensionMismatch {
                        what: "lp row index",
                        expected: format!("< {}", self.num_vars),
                        got: j.to_string(),
                    });
                }
                if !v.is_finite() {
                    return Err(Error::NonFinite { what: "lp coefficient" });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver output. `x`, `objective`, `duals`, and `gap` are meaningful only
/// when `status == Optimal`; `duals[i]` corresponds to `rows[i]` with the
/// convention that a `≤` row of an active constraint has `y ≤ 0` for a
/// minimization (i.e. `c − Aᵀy ≥ 0` at lower bounds).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    /// Residual duality gap at the reported basis; a certificate of
    /// optimality up to roundoff.
    pub gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

const PIVOT_TOL: f64 = 1e-10;
const PRICE_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
/// Consecutive near-zero steps before switching to Bland pricing.
const DEGENERATE_STREAK: usize = 40;

struct Worker {
    m: usize,
    ncols: usize,
    nstruct: usize,
    /// Column range of artificial variables (empty when none were needed).
    art_start: usize,
    a: Array2<f64>,
    b: Array1<f64>,
    u: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    binv: Array2<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
    /// Per original row: +1/−1 scale applied during standardization.
    row_sign: Vec<f64>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Worker {
    /// Standardize: scale rows to non-negative rhs, append slack/surplus
    /// columns, and add artificials where the slack cannot start basic.
    fn build(lp: &LinearProgram) -> Self {
        let m = lp.rows.len();
        let nstruct = lp.num_vars;

        let mut row_sign = vec![1.0; m];
        let mut rels = Vec::with_capacity(m);
        let mut b = Array1::zeros(m);
        for (i, row) in lp.rows.iter().enumerate() {
            let (sign, rel) = if row.rhs < 0.0 {
                let flipped = match row.rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (-1.0, flipped)
            } else {
                (1.0, row.rel)
            };
            row_sign[i] = sign;
            rels.push(rel);
            b[i] = sign * row.rhs;
        }

        // Slack (+1, basic) for ≤; surplus (−1) plus artificial for ≥;
        // artificial alone for =.
        let num_art = rels.iter().filter(|r| !matches!(r, Relation::Le)).count();
        let ncols = nstruct + m + num_art;
        let art_start = nstruct + m;

        let mut a = Array2::zeros((m, ncols));
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                a[[i, j]] += row_sign[i] * v;
            }
        }
        let mut u = Vec::with_capacity(ncols);
        u.extend_from_slice(&lp.upper);
        u.extend(std::iter::repeat(f64::INFINITY).take(m + num_art));

        let mut basis = Vec::with_capacity(m);
        let mut state = vec![VarState::AtLower; ncols];
        let mut next_art = art_start;
        for (i, rel) in rels.iter().enumerate() {
            let slack_col = nstruct + i;
            match rel {
                Relation::Le => {
                    a[[i, slack_col]] = 1.0;
                    basis.push(slack_col);
                }
                Relation::Ge => {
                    a[[i, slack_col]] = -1.0;
                    a[[i, next_art]] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    // The slack column stays all-zero with bound 0 so column
                    // numbering remains uniform.
                    u[slack_col] = 0.0;
                    a[[i, next_art]] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        for (i, &col) in basis.iter().enumerate() {
            state[col] = VarState::Basic(i);
        }
        let mut x = vec![0.0; ncols];
        for (i, &col) in basis.iter().enumerate() {
            x[col] = b[i];
        }

        Worker {
            m,
            ncols,
            nstruct,
            art_start,
            a,
            b,
            u,
            basis,
            state,
            x,
            binv: Array2::eye(m),
            pivots_since_refactor: 0,
            iterations: 0,
            row_sign,
        }
    }

    fn has_artificials(&self) -> bool {
        self.ncols > self.art_start
    }

    /// Rebuild the basis inverse from scratch (Gauss–Jordan with partial
    /// pivoting) and recompute the basic values from the bounds.
    fn refactorize(&mut self) -> Result<()> {
        let m = self.m;
        let mut work = Array2::zeros((m, 2 * m));
        for (i, &col) in self.basis.iter().enumerate() {
            for r in 0..m {
                work[[r, i]] = self.a[[r, col]];
            }
        }
        for r in 0..m {
            work[[r, m + r]] = 1.0;
        }
        for col in 0..m {
            let (piv_row, piv_val) = (col..m)
                .map(|r| (r, work[[r, col]].abs()))
                .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
                .expect("nonempty");
            if piv_val < 1e-12 {
                return Err(Error::Solver(format!("singular basis at column {col}")));
            }
            if piv_row != col {
                for j in 0..2 * m {
                    work.swap([piv_row, j], [col, j]);
                }
            }
            let inv = 1.0 / work[[col, col]];
            for j in 0..2 * m {
                work[[col, j]] *= inv;
            }
            for r in 0..m {
                if r != col {
                    let factor = work[[r, col]];
                    if factor != 0.0 {
                        for j in 0..2 * m {
                            work[[r, j]] -= factor * work[[col, j]];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            for j in 0..m {
                self.binv[[r, j]] = work[[r, m + j]];
            }
        }
        self.pivots_since_refactor = 0;
        self.recompute_basics();
        Ok(())
    }

    /// x_B = B⁻¹ (b − Σ_nonbasic A_j x_j).
    fn recompute_basics(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            let xj = match self.state[j] {
                VarState::AtUpper => self.u[j],
                _ => 0.0,
            };
            if xj != 0.0 {
                for r in 0..self.m {
                    rhs[r] -= self.a[[r, j]] * xj;
                }
            }
        }
        for i in 0..self.m {
            let mut v = 0.0;
            for r in 0..self.m {
                v += self.binv[[i, r]] * rhs[r];
            }
            self.x[self.basis[i]] = v;
        }
        for j in 0..self.ncols {
            match self.state[j] {
                VarState::AtLower => self.x[j] = 0.0,
                VarState::AtUpper => self.x[j] = self.u[j],
                VarState::Basic(_) => {}
            }
        }
    }

    /// Simplex dual vector y = c_Bᵀ B⁻¹ for the given cost vector.
    fn duals(&self, c: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (i, &col) in self.basis.iter().enumerate() {
            let cb = c[col];
            if cb != 0.0 {
                for j in 0..self.m {
                    y[j] += cb * self.binv[[i, j]];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, c: &[f64], y: &[f64], j: usize) -> f64 {
        let mut d = c[j];
        for r in 0..self.m {
            let av = self.a[[r, j]];
            if av != 0.0 {
                d -= y[r] * av;
            }
        }
        d
    }

    /// Run the simplex loop for cost vector `c` until optimal or unbounded.
    fn optimize(&mut self, c: &[f64], max_iters: usize) -> Result<PhaseEnd> {
        let mut degenerate_streak = 0usize;
        loop {
            if self.iterations >= max_iters {
                return Err(Error::Solver(format!(
                    "simplex iteration cap {max_iters} reached"
                )));
            }
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactorize()?;
            }
            let y = self.duals(c);
            let bland = degenerate_streak >= DEGENERATE_STREAK;

            // Entering column: improving reduced cost, honoring the bound
            // side the variable currently rests on.
            let mut entering: Option<(usize, f64, f64)> = None; // (col, |d|, direction)
            for j in 0..self.ncols {
                let dir = match self.state[j] {
                    VarState::Basic(_) => continue,
                    VarState::AtLower => 1.0,
                    VarState::AtUpper => -1.0,
                };
                if self.u[j] <= 0.0 {
                    continue; // fixed at zero (pinned artificials, Eq slots)
                }
                let d = self.reduced_cost(c, &y, j);
                let improving = if dir > 0.0 { d < -PRICE_TOL } else { d > PRICE_TOL };
                if !improving {
                    continue;
                }
                if bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), dir)),
                }
            }
            let Some((e, _, dir)) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            // Direction through the basis: x_B(t) = x_B − dir·t·w.
            let col_e: Vec<f64> = (0..self.m).map(|r| self.a[[r, e]]).collect();
            let mut w = vec![0.0; self.m];
            for i in 0..self.m {
                let mut v = 0.0;
                for r in 0..self.m {
                    v += self.binv[[i, r]] * col_e[r];
                }
                w[i] = v;
            }

            // Ratio test: tightest limit among basic-to-lower,
            // basic-to-upper, and the entering variable's own bound span;
            // near-ties resolved toward the largest pivot magnitude.
            const TIE: f64 = 1e-12;
            let mut t_limit = self.u[e]; // bound-flip span (lower width is 0)
            let mut leaving: Option<(usize, bool)> = None; // (row, hits_upper)
            for i in 0..self.m {
                let step = dir * w[i];
                let xb = self.x[self.basis[i]];
                let (t, hits_upper) = if step > PIVOT_TOL {
                    ((xb / step).max(0.0), false)
                } else if step < -PIVOT_TOL {
                    let cap = self.u[self.basis[i]];
                    if !cap.is_finite() {
                        continue;
                    }
                    (((cap - xb) / -step).max(0.0), true)
                } else {
                    continue;
                };
                let better = if t < t_limit - TIE {
                    true
                } else if t <= t_limit + TIE {
                    match leaving {
                        None => true,
                        Some((r, _)) => w[i].abs() > w[r].abs(),
                    }
                } else {
                    false
                };
                if better {
                    t_limit = t.min(t_limit);
                    leaving = Some((i, hits_upper));
                }
            }

            if t_limit.is_infinite() {
                return Ok(PhaseEnd::Unbounded);
            }
            self.iterations += 1;
            degenerate_streak = if t_limit < 1e-12 { degenerate_streak + 1 } else { 0 };

            // Apply the step.
            for i in 0..self.m {
                let col = self.basis[i];
                self.x[col] -= dir * t_limit * w[i];
            }
            match leaving {
                None => {
                    // Bound flip: entering runs its whole span.
                    self.state[e] = if dir > 0.0 { VarState::AtUpper } else { VarState::AtLower };
                    self.x[e] = if dir > 0.0 { self.u[e] } else { 0.0 };
                }
                Some((r, hits_upper)) => {
                    let new_val = match self.state[e] {
                        VarState::AtLower => t_limit,
                        VarState::AtUpper => self.u[e] - t_limit,
                        VarState::Basic(_) => unreachable!("entering is nonbasic"),
                    };
                    let old = self.basis[r];
                    self.state[old] = if hits_upper {
                        self.x[old] = self.u[old];
                        VarState::AtUpper
                    } else {
                        self.x[old] = 0.0;
                        VarState::AtLower
                    };
                    self.basis[r] = e;
                    self.state[e] = VarState::Basic(r);
                    self.x[e] = new_val;

                    // Product-form update of B⁻¹ around pivot w[r].
                    let piv = w[r];
                    if piv.abs() < 1e-13 {
                        return Err(Error::Solver("vanishing pivot in basis update".into()));
                    }
                    for j in 0..self.m {
                        self.binv[[r, j]] /= piv;
                    }
                    for i in 0..self.m {
                        if i != r {
                            let factor = w[i];
                            if factor != 0.0 {
                                for j in 0..self.m {
                                    self.binv[[i, j]] -= factor * self.binv[[r, j]];
                                }
                            }
                        }
                    }
                    self.pivots_since_refactor += 1;
                }
            }
        }
    }

    /// Degenerate-pivot any artificial still basic after phase 1 out of the
    /// basis where possible; rows that admit no real pivot are redundant and
    /// keep their zero-valued artificial.
    fn evict_basic_artificials(&mut self) {
        for r in 0..self.m {
            let col = self.basis[r];
            if col < self.art_start {
                continue;
            }
            let replacement = (0..self.art_start).find(|&j| {
                if !matches!(self.state[j], VarState::AtLower | VarState::AtUpper) {
                    return false;
                }
                let mut wr = 0.0;
                for k in 0..self.m {
                    wr += self.binv[[r, k]] * self.a[[k, j]];
                }
                wr.abs() > 1e-8
            });
            if let Some(j) = replacement {
                let mut w = vec![0.0; self.m];
                for i in 0..self.m {
                    let mut v = 0.0;
                    for k in 0..self.m {
                        v += self.binv[[i, k]] * self.a[[k, j]];
                    }
                    w[i] = v;
                }
                let piv = w[r];
                let entering_from_upper = matches!(self.state[j], VarState::AtUpper);
                self.state[col] = VarState::AtLower;
                self.x[col] = 0.0;
                self.basis[r] = j;
                self.state[j] = VarState::Basic(r);
                self.x[j] = if entering_from_upper { self.u[j] } else { 0.0 };
                for jj in 0..self.m {
                    self.binv[[r, jj]] /= piv;
                }
                for i in 0..self.m {
                    if i != r {
                        let factor = w[i];
                        if factor != 0.0 {
                            for jj in 0..self.m {
                                self.binv[[i, jj]] -= factor * self.binv[[r, jj]];
                            }
                        }
                    }
                }
                self.pivots_since_refactor += 1;
                self.recompute_basics();
            }
        }
    }
}

/// Solve the program; see [`LpSolution`] for the output contract.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let mut wk = Worker::build(lp);
    let max_iters = 20_000 + 500 * wk.m.max(1);

    if wk.m == 0 {
        // Pure box problem: each variable sits on whichever bound its cost
        // prefers.
        let mut x = vec![0.0; lp.num_vars];
        for j in 0..lp.num_vars {
            if lp.objective[j] < 0.0 {
                if lp.upper[j].is_infinite() {
                    return Ok(LpSolution {
                        status: LpStatus::Unbounded,
                        x,
                        objective: f64::NEG_INFINITY,
                        duals: Vec::new(),
                        gap: f64::NAN,
                        iterations: 0,
                    });
                }
                x[j] = lp.upper[j];
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        return Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            duals: Vec::new(),
            gap: 0.0,
            iterations: 0,
        });
    }

    // Phase 1: drive artificial infeasibility to zero.
    if wk.has_artificials() {
        let mut c1 = vec![0.0; wk.ncols];
        for j in wk.art_start..wk.ncols {
            c1[j] = 1.0;
        }
        match wk.optimize(&c1, max_iters)? {
            PhaseEnd::Unbounded => {
                return Err(Error::Solver("phase-1 objective cannot be unbounded".into()))
            }
            PhaseEnd::Optimal => {}
        }
        let infeas: f64 = (wk.art_start..wk.ncols).map(|j| wk.x[j]).sum();
        let scale = 1.0 + wk.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeas > 1e-7 * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; lp.num_vars],
                objective: f64::NAN,
                duals: vec![0.0; lp.rows.len()],
                gap: f64::NAN,
                iterations: wk.iterations,
            });
        }
        for j in wk.art_start..wk.ncols {
            wk.u[j] = 0.0;
            if matches!(wk.state[j], VarState::AtUpper) {
                wk.state[j] = VarState::AtLower;
                wk.x[j] = 0.0;
            }
        }
        wk.evict_basic_artificials();
    }

    // Phase 2: true objective.
    let mut c2 = vec![0.0; wk.ncols];
    c2[..wk.nstruct].copy_from_slice(&lp.objective);
    let end = wk.optimize(&c2, max_iters)?;
    wk.refactorize()?;

    if matches!(end, PhaseEnd::Unbounded) {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; lp.num_vars],
            objective: f64::NEG_INFINITY,
            duals: vec![0.0; lp.rows.len()],
            gap: f64::NAN,
            iterations: wk.iterations,
        });
    }

    let x: Vec<f64> = wk.x[..wk.nstruct].to_vec();
    let objective: f64 = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();

    // Duals in original row orientation, plus the residual gap certificate:
    // for any basic point, c·x = y·b̂ + Σ_nonbasic d_j x_j exactly; the gap is
    // the float residual of that identity restricted to bound contributions.
    let y_std = wk.duals(&c2);
    let mut dual_obj = 0.0;
    for i in 0..wk.m {
        dual_obj += y_std[i] * wk.b[i];
    }
    for j in 0..wk.ncols {
        if matches!(wk.state[j], VarState::AtUpper) {
            let d = wk.reduced_cost(&c2, &y_std, j);
            dual_obj += d * wk.u[j];
        }
    }
    let full_obj: f64 = (0..wk.ncols).map(|j| c2[j] * wk.x[j]).sum();
    let gap = (full_obj - dual_obj).abs();
    let duals: Vec<f64> = (0..lp.rows.len()).map(|i| wk.row_sign[i] * y_std[i]).collect();

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
        gap,
        iterations: wk.iterations,
    })
}
