//! Builders and drivers for the three inner optimization stages.
//!
//! Each stage works on one group of variables with the others frozen:
//!
//! * [`solve_p22`] — transmit powers, subcarrier shares, and scheduled
//!   downlink rates, with the per-subcarrier decode weights fixed. The
//!   interference-denominator logs are replaced by their tangents at the
//!   supplied expansion point, which tightens the feasible set (tangents
//!   dominate the logs) while agreeing with it exactly at that point, so
//!   re-solving from a feasible point can never lose objective value.
//! * [`solve_p23`] — decode weights and the common-rate epigraph, with
//!   powers and scheduled rates fixed. At fixed powers every per-subcarrier
//!   rate is a constant, so this stage is an exact linear program.
//! * [`solve_dl_power`] — downlink powers alone with the uplink silent,
//!   used by the feasibility precheck. Its rate expressions have no
//!   interference term, so the program is exactly concave and one solve is
//!   globally optimal.
//!
//! All stages share one variable layout ([`VarMap`]): powers are scaled by
//! their budgets so every power variable lives in `[0, 1]`, subcarrier
//! shares coincide with the scaled powers (for any feasible pair the share
//! can be lowered onto the scaled power without changing rates or budgets,
//! so the substitution is lossless), and block structure by subcarrier is
//! preserved for the solver. Entries excluded by an [`ActiveMask`] simply
//! never become variables, which is how binary assignments are enforced
//! after rounding.

use std::time::{Duration, Instant};

use ndarray::Array2;

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::ipm::{
    solve_convex, ConcaveConstraint, ConvexProgram, IpmSettings, SolveStatus, WeightedLog,
};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation};
use crate::rates::{rate_bs, rate_dl, rate_ul_sic, rate_ul_tin};
use crate::solution::RelaxedSolution;
use crate::taylor::{AffineExpr, LogTerm};

/// Epigraph seed used when re-certifying a point: any value far above the
/// largest reachable sum rate; the projection pass pulls it down onto the
/// exact per-user minimum.
const EPIGRAPH_CEILING: f64 = 1e6;

/// Which (user, subcarrier) pairs may carry power or scheduled rate.
///
/// The relaxed stages use the all-active mask; rounding produces one-hot
/// columns. A masked-out entry is removed from the variable space entirely,
/// so its power and scheduled rate are exactly zero in every result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveMask {
    /// `ul[[k, n]]`: uplink user `k` may transmit on subcarrier `n`.
    pub ul: Array2<bool>,
    /// `dl[[l, n]]`: downlink user `l` may be served on subcarrier `n`.
    pub dl: Array2<bool>,
}

impl ActiveMask {
    /// Every pair active (the plain relaxation).
    pub fn all(cfg: &NetworkConfig) -> Self {
        ActiveMask {
            ul: Array2::from_elem((cfg.num_ul_users, cfg.num_subcarriers), true),
            dl: Array2::from_elem((cfg.num_dl_users, cfg.num_subcarriers), true),
        }
    }

    /// Mask from rounded assignment matrices: an entry is active when its
    /// share exceeds one half (binary inputs give exact selection).
    pub fn from_assignment(a_ul: &Array2<f64>, a_dl: &Array2<f64>) -> Self {
        ActiveMask { ul: a_ul.mapv(|v| v > 0.5), dl: a_dl.mapv(|v| v > 0.5) }
    }

    fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        if self.ul.dim() != (mu, n) || self.dl.dim() != (md, n) {
            return Err(Error::DimensionMismatch {
                what: "active mask",
                expected: format!("ul {:?}, dl {:?}", (mu, n), (md, n)),
                got: format!("ul {:?}, dl {:?}", self.ul.dim(), self.dl.dim()),
            });
        }
        Ok(())
    }
}

/// Layout of the scaled decision vector.
///
/// Variables are grouped by subcarrier — block `n` holds, in order, the
/// active uplink powers (as fractions of each user's budget), the active
/// downlink powers (as fractions of the shared budget), and the active
/// scheduled downlink rates — followed by one trailing epigraph variable.
/// Power fractions double as the subcarrier shares.
#[derive(Debug, Clone)]
pub struct VarMap {
    num_vars: usize,
    blocks: Vec<usize>,
    eul: Array2<Option<usize>>,
    edl: Array2<Option<usize>>,
    rdl: Option<Array2<Option<usize>>>,
    epi: usize,
}

impl VarMap {
    /// Assign indices for the active entries; `with_rdl` controls whether
    /// scheduled downlink rates are variables (the downlink-only stage
    /// derives rates from powers instead).
    fn build(cfg: &NetworkConfig, mask: &ActiveMask, with_rdl: bool) -> Self {
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        let mut eul = Array2::from_elem((mu, n), None);
        let mut edl = Array2::from_elem((md, n), None);
        let mut rdl = with_rdl.then(|| Array2::from_elem((md, n), None));
        let mut idx = 0usize;
        let mut blocks = Vec::with_capacity(n + 1);
        for sc in 0..n {
            blocks.push(idx);
            for k in 0..mu {
                if mask.ul[[k, sc]] {
                    eul[[k, sc]] = Some(idx);
                    idx += 1;
                }
            }
            for l in 0..md {
                if mask.dl[[l, sc]] {
                    edl[[l, sc]] = Some(idx);
                    idx += 1;
                }
            }
            if let Some(rdl) = rdl.as_mut() {
                for l in 0..md {
                    if mask.dl[[l, sc]] {
                        rdl[[l, sc]] = Some(idx);
                        idx += 1;
                    }
                }
            }
        }
        blocks.push(idx);
        let epi = idx;
        blocks.dedup(); // subcarriers with no active entry collapse away
        VarMap { num_vars: idx + 1, blocks, eul, edl, rdl, epi }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn eul(&self, k: usize, n: usize) -> Option<usize> {
        self.eul[[k, n]]
    }

    fn edl(&self, l: usize, n: usize) -> Option<usize> {
        self.edl[[l, n]]
    }

    fn rdl(&self, l: usize, n: usize) -> Option<usize> {
        self.rdl.as_ref().and_then(|r| r[[l, n]])
    }

    /// Upper bounds: 1 for power fractions, unbounded for rates and the
    /// epigraph (their caps are constraint rows).
    fn upper(&self) -> Vec<f64> {
        let mut u = vec![f64::INFINITY; self.num_vars];
        for j in self.eul.iter().chain(self.edl.iter()).flatten() {
            u[*j] = 1.0;
        }
        u
    }

    /// Scale a physical point into the variable space, clamping to the box;
    /// masked entries are dropped.
    fn pack(&self, point: &RelaxedSolution, cfg: &NetworkConfig) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars];
        for ((k, n), j) in self.eul.indexed_iter() {
            if let Some(j) = j {
                x[*j] = (point.e_ul[[k, n]] / cfg.p_ul_budgets[k]).clamp(0.0, 1.0);
            }
        }
        for ((l, n), j) in self.edl.indexed_iter() {
            if let Some(j) = j {
                x[*j] = (point.e_dl[[l, n]] / cfg.p_dl_budget).clamp(0.0, 1.0);
            }
        }
        if let Some(rdl) = &self.rdl {
            for ((l, n), j) in rdl.indexed_iter() {
                if let Some(j) = j {
                    x[*j] = point.r_dl[[l, n]].max(0.0);
                }
            }
        }
        x[self.epi] = point.r_common.max(0.0);
        x
    }

    /// Rescale a variable vector back to physical powers and rates; masked
    /// entries come out as exact zeros.
    fn unpack(
        &self,
        x: &[f64],
        cfg: &NetworkConfig,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>, f64) {
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        let mut e_ul = Array2::zeros((mu, n));
        let mut e_dl = Array2::zeros((md, n));
        let mut r_dl = Array2::zeros((md, n));
        for ((k, sc), j) in self.eul.indexed_iter() {
            if let Some(j) = j {
                e_ul[[k, sc]] = x[*j] * cfg.p_ul_budgets[k];
            }
        }
        for ((l, sc), j) in self.edl.indexed_iter() {
            if let Some(j) = j {
                e_dl[[l, sc]] = x[*j] * cfg.p_dl_budget;
            }
        }
        if let Some(rdl) = &self.rdl {
            for ((l, sc), j) in rdl.indexed_iter() {
                if let Some(j) = j {
                    r_dl[[l, sc]] = x[*j];
                }
            }
        }
        (e_ul, e_dl, r_dl, x[self.epi])
    }
}

/// How a stage solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    /// Converged with the returned point feasible to `feas_tol`.
    Optimal,
    /// Iteration cap or stalled progress; the best usable iterate is
    /// returned without an optimality certificate.
    MaxIterations,
    /// No usable point: the stage is structurally infeasible under the
    /// given mask, or the solve broke down away from feasibility.
    Infeasible,
}

/// Outcome of one stage solve.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub status: SubproblemStatus,
    /// Certified objective value at `solution` (its epigraph entry).
    pub objective: f64,
    /// The operating point in physical units.
    pub solution: RelaxedSolution,
    /// Worst violation of the stage's constraints at `solution`. The
    /// tightened constraints imply the true ones, so this also bounds the
    /// violation of the exact rate expressions.
    pub max_violation: f64,
    pub iterations: usize,
    pub wall_time: Duration,
}

/// Tolerances for the power stage.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemSettings {
    /// Feasibility demanded of a returned point for `Optimal` status.
    pub feas_tol: f64,
    pub ipm: IpmSettings,
}

impl Default for SubproblemSettings {
    fn default() -> Self {
        SubproblemSettings { feas_tol: 1e-6, ipm: IpmSettings::default() }
    }
}

/// Role of each constraint row, kept alongside the program so the
/// projection pass knows which variable absorbs a residual.
#[derive(Debug, Clone, Copy)]
enum RowTag {
    /// Scheduled rate of downlink user `l` on subcarrier `n` is capped by
    /// its achievable rate.
    DlRate { l: usize, n: usize },
    /// When cancelling on subcarrier `n`, the receiving station must be
    /// able to decode the downlink signal ahead of its own traffic.
    DecodeGate { n: usize },
    /// Uplink shares on one subcarrier sum to at most one.
    UlShare,
    /// One uplink user's power fractions sum to at most one.
    UlBudget,
    /// All downlink power fractions sum to at most one.
    DlBudget,
    /// Downlink user `l` must accumulate the minimum total rate.
    DlFloor,
    /// Uplink user `k`'s total rate dominates the epigraph variable.
    UlTotal,
}

/// A stage program plus the metadata to interpret its solution.
struct BuiltStage {
    prog: ConvexProgram,
    map: VarMap,
    tags: Vec<RowTag>,
}

/// Assemble the power-stage program around expansion point `local`.
///
/// Every log of an interference-plus-noise denominator is replaced by its
/// tangent at `local`; signal-bearing logs stay exact. Zero-weight terms
/// (decode weight exactly 0 or 1) are dropped rather than emitted.
fn build_power_stage(
    local: &RelaxedSolution,
    tau: &[f64],
    mask: &ActiveMask,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<BuiltStage> {
    let (mu, md, n_sc) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
    let s2 = cfg.noise_power;
    let log2_s2 = s2.log2();
    // Scheduled downlink rates matter only when a rate floor forces the
    // downlink to carry traffic. Without one, zero scheduled rate satisfies
    // every decode cap, gate, and floor vacuously, so the whole rate-side
    // apparatus is omitted rather than encoded as constraints — the caps
    // would otherwise pin uplink power to the expansion neighbourhood for
    // no modelling benefit.
    let map = VarMap::build(cfg, mask, cfg.gamma_min > 0.0);
    let x0 = map.pack(local, cfg);

    let mut rows: Vec<ConcaveConstraint> = Vec::new();
    let mut tags: Vec<RowTag> = Vec::new();

    // Received-power weight lists per subcarrier, in scaled variables.
    let ul_at_bs = |sc: usize| -> Vec<(usize, f64)> {
        (0..mu)
            .filter_map(|k| map.eul(k, sc).map(|j| (j, cfg.p_ul_budgets[k] * ch.f[[k, sc]])))
            .collect()
    };
    let dl_at_bs = |sc: usize| -> Vec<(usize, f64)> {
        (0..md)
            .filter_map(|l| map.edl(l, sc).map(|j| (j, cfg.p_dl_budget * ch.phi[sc])))
            .collect()
    };

    // Tangent of the downlink interference seen by uplink users, shared by
    // every user's rate row on that subcarrier.
    let mut dl_itf_tangent: Vec<Option<AffineExpr>> = vec![None; n_sc];
    for sc in 0..n_sc {
        if tau[sc] < 1.0 {
            dl_itf_tangent[sc] = Some(LogTerm::new(dl_at_bs(sc), s2)?.tangent_at(&x0)?);
        }
    }

    for sc in 0..n_sc {
        let ul_f = ul_at_bs(sc);
        let dl_phi = dl_at_bs(sc);

        // Scheduled downlink rates are capped by the rate each user can
        // actually decode under uplink interference.
        for l in 0..md {
            let Some(jr) = map.rdl(l, sc) else { continue };
            let ul_g: Vec<(usize, f64)> = (0..mu)
                .filter_map(|k| {
                    map.eul(k, sc).map(|j| (j, cfg.p_ul_budgets[k] * ch.g[[k, l, sc]]))
                })
                .collect();
            let tangent = LogTerm::new(ul_g.clone(), s2)?.tangent_at(&x0)?;
            let mut full = ul_g;
            full.push((map.edl(l, sc).expect("rate var implies power var"), cfg.p_dl_budget * ch.h[[l, sc]]));
            let mut lin = vec![(jr, -1.0)];
            lin.extend(tangent.coeffs.iter().map(|&(j, c)| (j, -c)));
            rows.push(ConcaveConstraint {
                lin,
                logs: vec![WeightedLog { weight: 1.0, term: LogTerm::new(full, s2)? }],
                rhs: tangent.constant,
            });
            tags.push(RowTag::DlRate { l, n: sc });
        }

        // Decode gate: the fraction of downlink rate scheduled on a
        // cancelling subcarrier must fit the rate the receiving station can
        // strip off first.
        let rdl_on: Vec<usize> = (0..md).filter_map(|l| map.rdl(l, sc)).collect();
        if tau[sc] > 0.0 && !rdl_on.is_empty() {
            let tangent = LogTerm::new(ul_f.clone(), s2)?.tangent_at(&x0)?;
            let mut both = ul_f.clone();
            both.extend(dl_phi.iter().copied());
            let mut lin: Vec<(usize, f64)> = rdl_on.iter().map(|&j| (j, -tau[sc])).collect();
            lin.extend(tangent.coeffs.iter().map(|&(j, c)| (j, -c)));
            rows.push(ConcaveConstraint {
                lin,
                logs: vec![WeightedLog { weight: 1.0, term: LogTerm::new(both, s2)? }],
                rhs: tangent.constant,
            });
            tags.push(RowTag::DecodeGate { n: sc });
        }

        // At most one uplink user per subcarrier (in shares). The downlink
        // counterpart is implied by the shared budget row, whose sum over
        // all subcarriers already caps each column at one.
        let ul_on: Vec<usize> = (0..mu).filter_map(|k| map.eul(k, sc)).collect();
        if ul_on.len() >= 2 {
            rows.push(ConcaveConstraint {
                lin: ul_on.iter().map(|&j| (j, -1.0)).collect(),
                logs: Vec::new(),
                rhs: -1.0,
            });
            tags.push(RowTag::UlShare);
        }
    }

    // Per-user uplink power budgets (single-entry sums are the box bound).
    for k in 0..mu {
        let on: Vec<usize> = (0..n_sc).filter_map(|sc| map.eul(k, sc)).collect();
        if on.len() >= 2 {
            rows.push(ConcaveConstraint {
                lin: on.iter().map(|&j| (j, -1.0)).collect(),
                logs: Vec::new(),
                rhs: -1.0,
            });
            tags.push(RowTag::UlBudget);
        }
    }

    // Shared downlink budget.
    let dl_vars: Vec<usize> = {
        let mut v = Vec::new();
        for l in 0..md {
            for sc in 0..n_sc {
                if let Some(j) = map.edl(l, sc) {
                    v.push(j);
                }
            }
        }
        v
    };
    if dl_vars.len() >= 2 {
        rows.push(ConcaveConstraint {
            lin: dl_vars.iter().map(|&j| (j, -1.0)).collect(),
            logs: Vec::new(),
            rhs: -1.0,
        });
        tags.push(RowTag::DlBudget);
    }

    // Downlink rate floors.
    if cfg.gamma_min > 0.0 {
        for l in 0..md {
            let on: Vec<usize> = (0..n_sc).filter_map(|sc| map.rdl(l, sc)).collect();
            if on.is_empty() {
                return Err(Error::Solver(format!(
                    "downlink user {l} has no active subcarriers but the rate floor is positive"
                )));
            }
            rows.push(ConcaveConstraint {
                lin: on.iter().map(|&j| (j, 1.0)).collect(),
                logs: Vec::new(),
                rhs: cfg.gamma_min,
            });
            tags.push(RowTag::DlFloor);
        }
    }

    // Per-uplink-user totals dominating the epigraph: on each subcarrier
    // the rate is a decode-weight blend of the clean-channel rate and the
    // interference-limited rate.
    for k in 0..mu {
        let mut lin = vec![(map.epi, -1.0)];
        let mut logs = Vec::new();
        let mut rhs = 0.0;
        for sc in 0..n_sc {
            let Some(j_ul) = map.eul(k, sc) else { continue };
            let signal = (j_ul, cfg.p_ul_budgets[k] * ch.f[[k, sc]]);
            if tau[sc] > 0.0 {
                logs.push(WeightedLog {
                    weight: tau[sc],
                    term: LogTerm::new(vec![signal], s2)?,
                });
                rhs += tau[sc] * log2_s2;
            }
            if tau[sc] < 1.0 {
                let w = 1.0 - tau[sc];
                let mut arg = dl_at_bs(sc);
                arg.push(signal);
                logs.push(WeightedLog { weight: w, term: LogTerm::new(arg, s2)? });
                let tangent = dl_itf_tangent[sc].as_ref().expect("built for tau < 1");
                lin.extend(tangent.coeffs.iter().map(|&(j, c)| (j, -w * c)));
                rhs += w * tangent.constant;
            }
        }
        rows.push(ConcaveConstraint { lin, logs, rhs });
        tags.push(RowTag::UlTotal);
    }

    let mut objective = vec![0.0; map.num_vars];
    objective[map.epi] = 1.0;
    let prog = ConvexProgram {
        num_vars: map.num_vars,
        objective,
        upper: map.upper(),
        constraints: rows,
        blocks: Some(map.blocks.clone()),
    };
    prog.validate()?;
    Ok(BuiltStage { prog, map, tags })
}

impl BuiltStage {
    /// Pull a near-feasible iterate exactly onto the stage's feasible set,
    /// in dependency order: shrink powers onto the budgets, then re-clamp
    /// each rate against its (now slightly moved) cap, then the epigraph.
    /// Only the rate floors cannot be repaired this way; their residual
    /// stays in the reported violation.
    fn project(&self, x: &mut [f64], tau: &[f64]) {
        for (j, &u) in self.prog.upper.iter().enumerate() {
            x[j] = if u.is_finite() { x[j].clamp(0.0, u) } else { x[j].max(0.0) };
        }
        let mut worst = 1.0f64;
        for (row, tag) in self.prog.constraints.iter().zip(&self.tags) {
            if matches!(tag, RowTag::UlShare | RowTag::UlBudget | RowTag::DlBudget) {
                let sum: f64 = row.lin.iter().map(|&(j, _)| x[j]).sum();
                worst = worst.max(sum);
            }
        }
        if worst > 1.0 {
            for j in self.map.eul.iter().chain(self.map.edl.iter()).flatten() {
                x[*j] /= worst;
            }
        }
        for (row, tag) in self.prog.constraints.iter().zip(&self.tags) {
            if let RowTag::DlRate { l, n } = tag {
                let g = row.eval(x);
                if g < 0.0 {
                    let jr = self.map.rdl(*l, *n).expect("tagged row has a rate var");
                    x[jr] = (x[jr] + g).max(0.0);
                }
            }
        }
        for (row, tag) in self.prog.constraints.iter().zip(&self.tags) {
            if let RowTag::DecodeGate { n } = tag {
                let g = row.eval(x);
                if g < 0.0 {
                    let on: Vec<usize> =
                        (0..self.map.edl.dim().0).filter_map(|l| self.map.rdl(l, *n)).collect();
                    let total: f64 = on.iter().map(|&j| x[j]).sum();
                    if total > 0.0 && tau[*n] > 0.0 {
                        let factor = (1.0 + g / (tau[*n] * total)).max(0.0);
                        for j in on {
                            x[j] *= factor;
                        }
                    }
                }
            }
        }
        for (row, tag) in self.prog.constraints.iter().zip(&self.tags) {
            if matches!(tag, RowTag::UlTotal) {
                let g = row.eval(x);
                if g < 0.0 {
                    x[self.map.epi] = (x[self.map.epi] + g).max(0.0);
                }
            }
        }
    }

    /// Physical point and its residual stage violation.
    fn assemble(
        &self,
        x: &[f64],
        tau: &[f64],
        cfg: &NetworkConfig,
    ) -> (RelaxedSolution, f64) {
        let (e_ul, e_dl, r_dl, epi) = self.map.unpack(x, cfg);
        let mut a_ul = Array2::zeros(e_ul.dim());
        for ((k, sc), j) in self.map.eul.indexed_iter() {
            if j.is_some() {
                a_ul[[k, sc]] = e_ul[[k, sc]] / cfg.p_ul_budgets[k];
            }
        }
        let mut a_dl = Array2::zeros(e_dl.dim());
        for ((l, sc), j) in self.map.edl.indexed_iter() {
            if j.is_some() {
                a_dl[[l, sc]] = e_dl[[l, sc]] / cfg.p_dl_budget;
            }
        }
        let violation = self.prog.infeasibility(x);
        let point = RelaxedSolution {
            a_ul,
            a_dl,
            tau: tau.to_vec(),
            e_ul,
            e_dl,
            r_dl,
            r_common: epi,
        };
        (point, violation)
    }
}

fn check_tau(tau: &[f64], cfg: &NetworkConfig) -> Result<()> {
    if tau.len() != cfg.num_subcarriers {
        return Err(Error::DimensionMismatch {
            what: "decode weights",
            expected: cfg.num_subcarriers.to_string(),
            got: tau.len().to_string(),
        });
    }
    for &t in tau {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain { what: "decode weight (must lie in [0, 1])", value: t });
        }
    }
    Ok(())
}

/// Re-optimize powers, shares, and scheduled downlink rates around `local`
/// with the decode weights frozen at `tau_fixed`, over the full variable
/// set. See [`solve_p22_masked`] for the general form.
pub fn solve_p22(
    local: &RelaxedSolution,
    tau_fixed: &[f64],
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<SolverReport> {
    solve_p22_masked(
        local,
        tau_fixed,
        &ActiveMask::all(cfg),
        &SubproblemSettings::default(),
        ch,
        cfg,
    )
}

/// Power stage restricted to the active entries of `mask`.
///
/// The returned point is feasible for the stage's tightened constraints up
/// to the reported violation — and therefore for the exact rate
/// constraints, which the tightened ones imply. Because the constraints are
/// tangent at `local`, a feasible `local` is itself a candidate, so the
/// reported objective never falls below the value certified at `local`.
pub fn solve_p22_masked(
    local: &RelaxedSolution,
    tau_fixed: &[f64],
    mask: &ActiveMask,
    settings: &SubproblemSettings,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<SolverReport> {
    let start = Instant::now();
    cfg.validate()?;
    ch.validate(cfg)?;
    local.validate_dims(cfg)?;
    check_tau(tau_fixed, cfg)?;
    mask.validate(cfg)?;

    let built = match build_power_stage(local, tau_fixed, mask, ch, cfg) {
        Ok(b) => b,
        Err(Error::Solver(_)) => {
            let mut empty = RelaxedSolution::zeros(cfg);
            empty.tau = tau_fixed.to_vec();
            return Ok(SolverReport {
                status: SubproblemStatus::Infeasible,
                objective: 0.0,
                solution: empty,
                max_violation: f64::INFINITY,
                iterations: 0,
                wall_time: start.elapsed(),
            });
        }
        Err(e) => return Err(e),
    };
    let x0 = built.map.pack(local, cfg);

    let (mut x, iterations, solver_status) =
        match solve_convex(&built.prog, Some(&x0), &settings.ipm) {
            Ok(sol) => (sol.x, sol.iterations, Some(sol.status)),
            Err(Error::Solver(_)) => {
                // The warm point, re-certified, may still be usable.
                let mut fb = x0.clone();
                fb[built.map.epi] = EPIGRAPH_CEILING;
                (fb, settings.ipm.max_iters, None)
            }
            Err(e) => return Err(e),
        };
    built.project(&mut x, tau_fixed);

    // The expansion point re-certified through the projection: its epigraph
    // lands exactly on its per-user rate minimum because the tangents touch
    // there. Keep whichever point certifies more.
    let mut fallback = x0.clone();
    fallback[built.map.epi] = EPIGRAPH_CEILING;
    built.project(&mut fallback, tau_fixed);
    let mut swapped = false;
    if fallback[built.map.epi] > x[built.map.epi] {
        x = fallback;
        swapped = true;
    }

    let (solution, max_violation) = built.assemble(&x, tau_fixed, cfg);
    let objective = solution.r_common;
    let status = match solver_status {
        None => {
            if max_violation <= 10.0 * settings.feas_tol {
                SubproblemStatus::MaxIterations
            } else {
                SubproblemStatus::Infeasible
            }
        }
        Some(SolveStatus::Converged)
            if !swapped && max_violation <= settings.feas_tol =>
        {
            SubproblemStatus::Optimal
        }
        Some(_) => SubproblemStatus::MaxIterations,
    };
    Ok(SolverReport {
        status,
        objective,
        solution,
        max_violation,
        iterations,
        wall_time: start.elapsed(),
    })
}

/// Self-describing JSON dump of the power-stage program for debugging.
pub fn power_stage_json(
    local: &RelaxedSolution,
    tau_fixed: &[f64],
    mask: &ActiveMask,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<String> {
    let built = build_power_stage(local, tau_fixed, mask, ch, cfg)?;
    serde_json::to_string_pretty(&built.prog)
        .map_err(|e| Error::Parse(format!("program serialization failed: {e}")))
}

/// Re-optimize the decode weights and the common-rate epigraph with powers
/// and scheduled rates frozen at `resources_fixed`.
///
/// At fixed powers each subcarrier contributes constant clean-channel and
/// interference-limited rates, so the stage is an exact linear program over
/// the decode weights; the previous weights are always feasible for it,
/// which makes the alternating loop monotone at this step.
pub fn solve_p23(
    resources_fixed: &RelaxedSolution,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<SolverReport> {
    let start = Instant::now();
    cfg.validate()?;
    ch.validate(cfg)?;
    resources_fixed.validate_dims(cfg)?;
    let (mu, md, n_sc) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
    let s2 = cfg.noise_power;

    // Exact per-subcarrier rates at the frozen powers.
    let mut scheduled = vec![0.0; n_sc]; // total downlink rate scheduled on n
    let mut decode_cap = vec![0.0; n_sc]; // rate the station can strip first
    let mut tin = Array2::zeros((mu, n_sc));
    let mut sic = Array2::zeros((mu, n_sc));
    for sc in 0..n_sc {
        let dl_rx: f64 = (0..md).map(|l| resources_fixed.e_dl[[l, sc]] * ch.phi[sc]).sum();
        let ul_rx: f64 =
            (0..mu).map(|k| resources_fixed.e_ul[[k, sc]] * ch.f[[k, sc]]).sum();
        scheduled[sc] = (0..md).map(|l| resources_fixed.r_dl[[l, sc]]).sum();
        decode_cap[sc] = rate_bs(dl_rx, ul_rx, s2)?;
        for k in 0..mu {
            let e = resources_fixed.e_ul[[k, sc]];
            tin[[k, sc]] = rate_ul_tin(e, ch.f[[k, sc]], dl_rx, s2)?;
            sic[[k, sc]] = rate_ul_sic(e, ch.f[[k, sc]], s2)?;
        }
    }

    // Variables: one decode weight per subcarrier, then the epigraph.
    let j_epi = n_sc;
    let mut objective = vec![0.0; n_sc + 1];
    objective[j_epi] = -1.0; // maximize the epigraph
    let mut upper = vec![1.0; n_sc + 1];
    upper[j_epi] = f64::INFINITY;
    let mut lp = LinearProgram::minimize(objective).with_upper(upper);
    for sc in 0..n_sc {
        if scheduled[sc] > 0.0 {
            lp.push_row(vec![(sc, scheduled[sc])], Relation::Le, decode_cap[sc]);
        }
    }
    for k in 0..mu {
        let mut coeffs: Vec<(usize, f64)> = (0..n_sc)
            .filter_map(|sc| {
                let gain = sic[[k, sc]] - tin[[k, sc]];
                (gain != 0.0).then_some((sc, gain))
            })
            .collect();
        coeffs.push((j_epi, -1.0));
        let base: f64 = (0..n_sc).map(|sc| tin[[k, sc]]).sum();
        lp.push_row(coeffs, Relation::Ge, -base);
    }

    let lp_sol = solve_lp(&lp)?;
    if lp_sol.status != LpStatus::Optimal {
        // Zero weights and a zero epigraph are always feasible, so a
        // non-optimal status is a solver breakdown.
        let mut unchanged = resources_fixed.clone();
        unchanged.r_common = 0.0;
        return Ok(SolverReport {
            status: SubproblemStatus::Infeasible,
            objective: 0.0,
            solution: unchanged,
            max_violation: f64::INFINITY,
            iterations: lp_sol.iterations,
            wall_time: start.elapsed(),
        });
    }

    let tau: Vec<f64> = (0..n_sc).map(|sc| lp_sol.x[sc].clamp(0.0, 1.0)).collect();
    let r_common = lp_sol.x[j_epi].max(0.0);
    let mut max_violation = 0.0f64;
    for sc in 0..n_sc {
        max_violation = max_violation.max(tau[sc] * scheduled[sc] - decode_cap[sc]);
    }
    for k in 0..mu {
        let total: f64 = (0..n_sc)
            .map(|sc| (1.0 - tau[sc]) * tin[[k, sc]] + tau[sc] * sic[[k, sc]])
            .sum();
        max_violation = max_violation.max(r_common - total);
    }

    let mut solution = resources_fixed.clone();
    solution.tau = tau;
    solution.r_common = r_common;
    let status = if lp_sol.gap <= 1e-9 && max_violation <= 1e-8 {
        SubproblemStatus::Optimal
    } else {
        SubproblemStatus::MaxIterations
    };
    Ok(SolverReport {
        status,
        objective: r_common,
        solution,
        max_violation,
        iterations: lp_sol.iterations,
        wall_time: start.elapsed(),
    })
}

/// Best downlink-only operating point: the uplink is silent and the
/// minimum per-user downlink total is maximized.
#[derive(Debug, Clone)]
pub struct DlOnlyOptimum {
    /// The maximized minimum per-user downlink total (exact rates).
    pub l_star: f64,
    /// Downlink powers, mW.
    pub e_dl: Array2<f64>,
    /// Fractional shares (powers over the shared budget).
    pub shares: Array2<f64>,
    /// Exact per-entry downlink rates at those powers.
    pub r_dl: Array2<f64>,
    /// Row sums of `r_dl`.
    pub per_user: Vec<f64>,
    pub status: SubproblemStatus,
}

impl DlOnlyOptimum {
    /// Package this downlink-only optimum as a full resource allocation
    /// with the uplink silent. The exact downlink rates double as the
    /// scheduled rates, so when the floors are met here the point is
    /// strictly feasible and makes a sound expansion seed — tangent models
    /// agree with the exact rates at their own expansion point.
    pub fn into_relaxed(self, tau: Vec<f64>, cfg: &NetworkConfig) -> RelaxedSolution {
        let mut out = RelaxedSolution::zeros(cfg);
        out.a_dl = self.shares;
        out.e_dl = self.e_dl;
        out.r_dl = self.r_dl;
        out.tau = tau;
        out
    }
}

/// Maximize the minimum per-downlink-user total rate with the uplink off,
/// restricted to the active entries of `mask_dl`.
///
/// Without uplink interference the rate logs are exact and concave, so a
/// single solve is globally optimal — no expansion point is involved. Used
/// to decide whether the rate floors are satisfiable at all, and to build
/// starting points.
pub fn solve_dl_power(
    mask_dl: &Array2<bool>,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<DlOnlyOptimum> {
    cfg.validate()?;
    ch.validate(cfg)?;
    let (md, n_sc) = (cfg.num_dl_users, cfg.num_subcarriers);
    if mask_dl.dim() != (md, n_sc) {
        return Err(Error::DimensionMismatch {
            what: "downlink mask",
            expected: format!("{:?}", (md, n_sc)),
            got: format!("{:?}", mask_dl.dim()),
        });
    }
    let s2 = cfg.noise_power;
    let mask = ActiveMask {
        ul: Array2::from_elem((cfg.num_ul_users, n_sc), false),
        dl: mask_dl.clone(),
    };
    let map = VarMap::build(cfg, &mask, false);

    let mut rows = Vec::with_capacity(md + 1);
    for l in 0..md {
        let lin = vec![(map.epi, -1.0)];
        let mut logs = Vec::new();
        let mut rhs = 0.0;
        for sc in 0..n_sc {
            if let Some(j) = map.edl(l, sc) {
                logs.push(WeightedLog {
                    weight: 1.0,
                    term: LogTerm::new(vec![(j, cfg.p_dl_budget * ch.h[[l, sc]])], s2)?,
                });
                rhs += s2.log2();
            }
        }
        rows.push(ConcaveConstraint { lin, logs, rhs });
    }
    let dl_vars: Vec<usize> = {
        let mut v = Vec::new();
        for l in 0..md {
            for sc in 0..n_sc {
                if let Some(j) = map.edl(l, sc) {
                    v.push(j);
                }
            }
        }
        v
    };
    if dl_vars.len() >= 2 {
        rows.push(ConcaveConstraint {
            lin: dl_vars.iter().map(|&j| (j, -1.0)).collect(),
            logs: Vec::new(),
            rhs: -1.0,
        });
    }
    let mut objective = vec![0.0; map.num_vars];
    objective[map.epi] = 1.0;
    let prog = ConvexProgram {
        num_vars: map.num_vars,
        objective,
        upper: map.upper(),
        constraints: rows,
        blocks: Some(map.blocks.clone()),
    };
    prog.validate()?;

    let (mut x, status) = match solve_convex(&prog, None, &IpmSettings::default()) {
        Ok(sol) => {
            let st = match sol.status {
                SolveStatus::Converged => SubproblemStatus::Optimal,
                SolveStatus::Degraded => SubproblemStatus::MaxIterations,
            };
            (sol.x, st)
        }
        Err(Error::Solver(_)) => (vec![0.0; map.num_vars], SubproblemStatus::Infeasible),
        Err(e) => return Err(e),
    };

    // Certify through exact rates: clamp onto the budget, then recompute
    // every rate from the projected powers.
    for j in &dl_vars {
        x[*j] = x[*j].clamp(0.0, 1.0);
    }
    let total: f64 = dl_vars.iter().map(|&j| x[j]).sum();
    if total > 1.0 {
        for j in &dl_vars {
            x[*j] /= total;
        }
    }
    let mut e_dl = Array2::zeros((md, n_sc));
    let mut shares = Array2::zeros((md, n_sc));
    let mut r_dl = Array2::zeros((md, n_sc));
    for ((l, sc), j) in map.edl.indexed_iter() {
        if let Some(j) = j {
            shares[[l, sc]] = x[*j];
            e_dl[[l, sc]] = x[*j] * cfg.p_dl_budget;
            r_dl[[l, sc]] = rate_dl(e_dl[[l, sc]], ch.h[[l, sc]], 0.0, s2)?;
        }
    }
    let per_user: Vec<f64> = r_dl.rows().into_iter().map(|row| row.sum()).collect();
    let l_star = per_user.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(DlOnlyOptimum { l_star, e_dl, shares, r_dl, per_user, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, RngSeed};
    use crate::oracle::kelley_solve;
    use crate::rates::common_uplink_throughput;
    use approx::assert_relative_eq;

    fn tiny_1x1() -> NetworkConfig {
        let mut cfg = NetworkConfig::tiny().with_dims(1, 1, 1);
        cfg.gamma_min = 0.0;
        cfg
    }

    #[test]
    fn single_carrier_tin_reaches_full_power() {
        let cfg = tiny_1x1();
        let (_, ch) = draw_realization(&cfg, RngSeed(41));
        let local = RelaxedSolution::zeros(&cfg);
        let report = solve_p22(&local, &[0.0], &ch, &cfg).unwrap();
        assert_eq!(report.status, SubproblemStatus::Optimal);
        // With no rate floor, downlink power only hurts the uplink, so the
        // optimum is full uplink power on a clean channel.
        let expected = rate_ul_sic(cfg.p_ul_budgets[0], ch.f[[0, 0]], cfg.noise_power).unwrap();
        assert_relative_eq!(report.objective, expected, max_relative = 1e-4);
        assert_relative_eq!(report.solution.e_ul[[0, 0]], cfg.p_ul_budgets[0], max_relative = 1e-3);
        assert!(report.solution.e_dl[[0, 0]] < 1e-3 * cfg.p_dl_budget);
        assert!(report.max_violation <= 1e-6);
    }

    #[test]
    fn resolving_from_own_solution_keeps_objective() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(42));
        let tau = vec![0.5, 0.25];
        // Expand around a point that already meets the rate floors — the
        // same seed the full pipeline uses. A floor-violating expansion
        // point makes the restricted subproblem needlessly hostile.
        let dl_mask = Array2::from_elem((cfg.num_dl_users, cfg.num_subcarriers), true);
        let seed = solve_dl_power(&dl_mask, &ch, &cfg).unwrap().into_relaxed(tau.clone(), &cfg);
        let first = solve_p22(&seed, &tau, &ch, &cfg).unwrap();
        assert!(first.objective > 0.0);
        let second = solve_p22(&first.solution, &tau, &ch, &cfg).unwrap();
        assert!(
            second.objective >= first.objective - 1e-9,
            "restart lost value: {} -> {}",
            first.objective,
            second.objective
        );
        // The certified epigraph never exceeds what the exact rate formulas
        // deliver at the returned powers.
        let exact = common_uplink_throughput(
            &second.solution.e_ul,
            &second.solution.e_dl,
            &second.solution.tau,
            &ch,
            &cfg,
        )
        .unwrap();
        assert!(second.objective <= exact + 1e-9);
    }

    #[test]
    fn cross_check_against_cutting_planes() {
        let cfg = NetworkConfig::tiny().with_dims(2, 2, 4);
        let (_, ch) = draw_realization(&cfg, RngSeed(43));
        let tau = vec![0.3, 0.0, 1.0, 0.7];
        let local = RelaxedSolution::zeros(&cfg);
        let built = build_power_stage(&local, &tau, &ActiveMask::all(&cfg), &ch, &cfg).unwrap();

        let report = solve_p22(&local, &tau, &ch, &cfg).unwrap();

        // The cutting-plane reference needs finite bounds; rates at these
        // scales stay far below 64 bits/s/Hz.
        let mut capped = built.prog.clone();
        for u in capped.upper.iter_mut() {
            if !u.is_finite() {
                *u = 64.0;
            }
        }
        let (_, reference) = kelley_solve(&capped, 1e-9, 600).unwrap();
        assert!(
            (report.objective - reference).abs() <= 1e-6 * (1.0 + reference.abs()),
            "stage solver {} vs cutting planes {}",
            report.objective,
            reference
        );
    }

    #[test]
    fn power_scaling_leaves_objective_invariant() {
        let base = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&base, RngSeed(44));
        let tau = vec![0.6, 0.2];
        let r1 = solve_p22(&RelaxedSolution::zeros(&base), &tau, &ch, &base).unwrap();
        for scale in [1e3, 1e-3] {
            let mut cfg = base.clone();
            cfg.p_dl_budget *= scale;
            cfg.p_ul_budgets.iter_mut().for_each(|p| *p *= scale);
            cfg.noise_power *= scale;
            let r2 = solve_p22(&RelaxedSolution::zeros(&cfg), &tau, &ch, &cfg).unwrap();
            assert!(
                (r1.objective - r2.objective).abs() <= 1e-6 * (1.0 + r1.objective.abs()),
                "scale {scale}: {} vs {}",
                r1.objective,
                r2.objective
            );
        }
    }

    #[test]
    fn masked_entries_stay_silent() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(45));
        let mut mask = ActiveMask::all(&cfg);
        mask.ul[[0, 0]] = false;
        mask.dl[[1, 1]] = false;
        let report = solve_p22_masked(
            &RelaxedSolution::zeros(&cfg),
            &[0.0, 0.0],
            &mask,
            &SubproblemSettings::default(),
            &ch,
            &cfg,
        )
        .unwrap();
        assert_eq!(report.solution.e_ul[[0, 0]], 0.0);
        assert_eq!(report.solution.a_ul[[0, 0]], 0.0);
        assert_eq!(report.solution.e_dl[[1, 1]], 0.0);
        assert_eq!(report.solution.r_dl[[1, 1]], 0.0);
        assert!(report.solution.e_ul[[1, 0]] >= 0.0);
    }

    #[test]
    fn floor_without_subcarriers_reports_infeasible() {
        let mut cfg = NetworkConfig::tiny();
        cfg.gamma_min = 1.0;
        let (_, ch) = draw_realization(&cfg, RngSeed(46));
        let mut mask = ActiveMask::all(&cfg);
        mask.dl.row_mut(0).fill(false);
        let report = solve_p22_masked(
            &RelaxedSolution::zeros(&cfg),
            &[0.0, 0.0],
            &mask,
            &SubproblemSettings::default(),
            &ch,
            &cfg,
        )
        .unwrap();
        assert_eq!(report.status, SubproblemStatus::Infeasible);
    }

    /// Builds a one-subcarrier instance with chosen powers and scheduled
    /// rate, returning the exact per-subcarrier quantities alongside.
    fn one_carrier_point(
        e_ul: f64,
        e_dl: f64,
        r_sched: f64,
        cfg: &NetworkConfig,
        ch: &ChannelRealization,
    ) -> (RelaxedSolution, f64, f64, f64) {
        let mut point = RelaxedSolution::zeros(cfg);
        point.e_ul[[0, 0]] = e_ul;
        point.e_dl[[0, 0]] = e_dl;
        point.r_dl[[0, 0]] = r_sched;
        let s2 = cfg.noise_power;
        let dl_rx = e_dl * ch.phi[0];
        let tin = rate_ul_tin(e_ul, ch.f[[0, 0]], dl_rx, s2).unwrap();
        let sic = rate_ul_sic(e_ul, ch.f[[0, 0]], s2).unwrap();
        let cap = rate_bs(dl_rx, e_ul * ch.f[[0, 0]], s2).unwrap();
        (point, tin, sic, cap)
    }

    #[test]
    fn decode_lp_prefers_cancellation_when_gate_is_slack() {
        let cfg = tiny_1x1();
        let (_, ch) = draw_realization(&cfg, RngSeed(47));
        let (point, _tin, sic, cap) =
            one_carrier_point(cfg.p_ul_budgets[0] / 2.0, cfg.p_dl_budget / 2.0, 0.0, &cfg, &ch);
        // Schedule well under the decode capacity so cancelling is free.
        let mut point = point;
        point.r_dl[[0, 0]] = cap / 4.0;
        let report = solve_p23(&point, &ch, &cfg).unwrap();
        assert_eq!(report.status, SubproblemStatus::Optimal);
        assert_relative_eq!(report.solution.tau[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(report.objective, sic, max_relative = 1e-12);
    }

    #[test]
    fn decode_lp_splits_at_a_binding_gate() {
        let cfg = tiny_1x1();
        let (_, ch) = draw_realization(&cfg, RngSeed(48));
        let (point, tin, sic, cap) =
            one_carrier_point(cfg.p_ul_budgets[0] / 2.0, cfg.p_dl_budget / 2.0, 0.0, &cfg, &ch);
        // Schedule four times the decode capacity: the weight can rise only
        // to a quarter before the gate binds.
        let mut point = point;
        point.r_dl[[0, 0]] = 4.0 * cap;
        let report = solve_p23(&point, &ch, &cfg).unwrap();
        assert_relative_eq!(report.solution.tau[0], 0.25, max_relative = 1e-9);
        assert_relative_eq!(
            report.objective,
            tin + 0.25 * (sic - tin),
            max_relative = 1e-9
        );
    }

    #[test]
    fn decode_lp_zero_power_gives_zero() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(49));
        let report = solve_p23(&RelaxedSolution::zeros(&cfg), &ch, &cfg).unwrap();
        assert_eq!(report.objective, 0.0);
        assert!(report.max_violation <= 1e-12);
    }

    #[test]
    fn dl_power_single_link_closed_form() {
        let cfg = tiny_1x1();
        let (_, ch) = draw_realization(&cfg, RngSeed(50));
        let mask = Array2::from_elem((1, 1), true);
        let best = solve_dl_power(&mask, &ch, &cfg).unwrap();
        let expected =
            rate_dl(cfg.p_dl_budget, ch.h[[0, 0]], 0.0, cfg.noise_power).unwrap();
        assert_relative_eq!(best.l_star, expected, max_relative = 1e-6);
        assert_relative_eq!(best.e_dl[[0, 0]], cfg.p_dl_budget, max_relative = 1e-3);
    }

    #[test]
    fn dl_power_empty_row_gives_zero_floor() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(51));
        let mut mask = Array2::from_elem((2, 2), true);
        mask.row_mut(1).fill(false);
        let best = solve_dl_power(&mask, &ch, &cfg).unwrap();
        assert_eq!(best.l_star, 0.0);
        assert_eq!(best.per_user[1], 0.0);
        assert!(best.per_user[0] > 0.0);
    }

    #[test]
    fn dump_round_trips_through_json() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(52));
        let text = power_stage_json(
            &RelaxedSolution::zeros(&cfg),
            &[0.5, 0.5],
            &ActiveMask::all(&cfg),
            &ch,
            &cfg,
        )
        .unwrap();
        assert!(text.contains("num_vars"));
        let back: ConvexProgram = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back.num_vars, 2 * (2 + 2 + 2) + 1);
    }

    #[test]
    fn pack_unpack_round_trip_respects_masks() {
        let cfg = NetworkConfig::tiny();
        let mut mask = ActiveMask::all(&cfg);
        mask.ul[[1, 1]] = false;
        mask.dl[[0, 0]] = false;
        let map = VarMap::build(&cfg, &mask, true);
        let mut point = RelaxedSolution::zeros(&cfg);
        point.e_ul[[0, 0]] = 0.5 * cfg.p_ul_budgets[0];
        point.e_ul[[1, 1]] = 100.0; // masked: must vanish
        point.e_dl[[1, 1]] = 0.25 * cfg.p_dl_budget;
        point.r_dl[[1, 1]] = 2.0;
        point.r_common = 1.5;
        let x = map.pack(&point, &cfg);
        let (e_ul, e_dl, r_dl, epi) = map.unpack(&x, &cfg);
        assert_relative_eq!(e_ul[[0, 0]], point.e_ul[[0, 0]], max_relative = 1e-15);
        assert_eq!(e_ul[[1, 1]], 0.0);
        assert_relative_eq!(e_dl[[1, 1]], point.e_dl[[1, 1]], max_relative = 1e-15);
        assert_eq!(e_dl[[0, 0]], 0.0);
        assert_relative_eq!(r_dl[[1, 1]], 2.0, max_relative = 1e-15);
        assert_eq!(epi, 1.5);
    }
}
