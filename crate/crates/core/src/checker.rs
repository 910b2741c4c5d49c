//! Independent feasibility audit for integral solutions.
//!
//! [`check_p1_feasible`] re-derives every constraint of the hard
//! (unrelaxed) problem directly from the rate formulas and the configuration
//! — it shares nothing with the solver stack, so a solution that passes here
//! is feasible by construction of the model, not by the solver's own
//! bookkeeping. Violations are reported per constraint family with the worst
//! additive excess; nothing is thrown for a violation.

use std::fmt;

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::error::Result;
use crate::rates::{per_user_ul_throughput, rate_bs, rate_dl};
use crate::solution::IntegralSolution;

/// Outcome for one constraint family.
#[derive(Debug, Clone)]
pub struct ConstraintReport {
    /// Stable identifier, e.g. `"ul-power-budget"`.
    pub name: &'static str,
    /// Whether every member of the family held within tolerance.
    pub passed: bool,
    /// Largest additive violation across the family (0 when satisfied).
    pub worst_violation: f64,
    /// Where the worst violation occurred, for diagnostics.
    pub detail: String,
}

/// Full audit: one entry per constraint family, in a fixed order.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub constraints: Vec<ConstraintReport>,
    /// Additive tolerance the audit was run with.
    pub tol: f64,
}

impl FeasibilityReport {
    /// True iff every family passed.
    pub fn passed(&self) -> bool {
        self.constraints.iter().all(|c| c.passed)
    }

    /// Largest violation over all families.
    pub fn worst_violation(&self) -> f64 {
        self.constraints.iter().map(|c| c.worst_violation).fold(0.0, f64::max)
    }

    /// Names of the families that failed.
    pub fn failed(&self) -> Vec<&'static str> {
        self.constraints.iter().filter(|c| !c.passed).map(|c| c.name).collect()
    }

    fn get(&self, name: &str) -> Option<&ConstraintReport> {
        self.constraints.iter().find(|c| c.name == name)
    }

    /// Whether a specific family passed (true for unknown names).
    pub fn constraint_passed(&self, name: &str) -> bool {
        self.get(name).map_or(true, |c| c.passed)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            out,
            "feasibility audit (tol {:.1e}): {}",
            self.tol,
            if self.passed() { "PASS" } else { "FAIL" }
        )?;
        for c in &self.constraints {
            if c.passed {
                writeln!(out, "  PASS {}", c.name)?;
            } else {
                writeln!(out, "  FAIL {} (worst violation {:.3e}; {})", c.name, c.worst_violation, c.detail)?;
            }
        }
        Ok(())
    }
}

/// Tracks the worst offender within one constraint family.
struct Family {
    name: &'static str,
    worst: f64,
    detail: String,
}

impl Family {
    fn new(name: &'static str) -> Self {
        Family { name, worst: 0.0, detail: String::new() }
    }

    /// Record `violation` (≤ 0 means satisfied) observed at `where_`.
    /// NaN counts as an infinite violation so corrupt data can never pass.
    fn observe(&mut self, violation: f64, where_: impl FnOnce() -> String) {
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.worst {
            self.worst = v;
            self.detail = where_();
        }
    }

    fn finish(self, tol: f64) -> ConstraintReport {
        ConstraintReport {
            name: self.name,
            passed: self.worst <= tol,
            worst_violation: self.worst,
            detail: self.detail,
        }
    }
}

/// Audit an integral solution against the hard problem: subcarrier
/// exclusivity, binary entries, power budgets and masking, the decode gate on
/// scheduled downlink rates, downlink rate achievability, the per-user QoS
/// floor, sign constraints, and internal throughput consistency.
///
/// Errors only on dimension mismatch; constraint violations land in the
/// report.
pub fn check_p1_feasible(
    sol: &IntegralSolution,
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
    tol: f64,
) -> Result<FeasibilityReport> {
    sol.validate_dims(cfg)?;
    ch.validate(cfg)?;
    let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
    let s2 = cfg.noise_power;

    // -- Subcarrier exclusivity: at most one user per subcarrier per cell.
    let mut excl_ul = Family::new("subcarrier-exclusivity-ul");
    let mut excl_dl = Family::new("subcarrier-exclusivity-dl");
    for sc in 0..n {
        let ul_sum: f64 = (0..mu).map(|k| sol.a_ul[[k, sc]]).sum();
        excl_ul.observe(ul_sum - 1.0, || format!("subcarrier {sc} assigned {ul_sum} times"));
        let dl_sum: f64 = (0..md).map(|l| sol.a_dl[[l, sc]]).sum();
        excl_dl.observe(dl_sum - 1.0, || format!("subcarrier {sc} assigned {dl_sum} times"));
    }

    // -- Binary entries: shares and decode modes must be exactly 0 or 1.
    let mut binary = Family::new("binary-entries");
    let check_bin = |label: &str, idx: String, v: f64, fam: &mut Family| {
        if v != 0.0 && v != 1.0 {
            // Distance to the nearer of {0, 1}; floor keeps denormals visible.
            let dist = v.abs().min((v - 1.0).abs()).max(f64::MIN_POSITIVE);
            fam.observe(dist, || format!("{label}{idx} = {v}"));
        }
    };
    for ((k, sc), &v) in sol.a_ul.indexed_iter() {
        check_bin("a_ul", format!("[{k},{sc}]"), v, &mut binary);
    }
    for ((l, sc), &v) in sol.a_dl.indexed_iter() {
        check_bin("a_dl", format!("[{l},{sc}]"), v, &mut binary);
    }
    for (sc, &v) in sol.tau.iter().enumerate() {
        check_bin("tau", format!("[{sc}]"), v, &mut binary);
    }

    // -- Sign constraints on powers and scheduled rates.
    let mut nonneg = Family::new("non-negativity");
    for ((k, sc), &v) in sol.e_ul.indexed_iter() {
        nonneg.observe(-v, || format!("e_ul[{k},{sc}] = {v}"));
    }
    for ((l, sc), &v) in sol.e_dl.indexed_iter() {
        nonneg.observe(-v, || format!("e_dl[{l},{sc}] = {v}"));
    }
    for ((l, sc), &v) in sol.r_dl.indexed_iter() {
        nonneg.observe(-v, || format!("r_dl[{l},{sc}] = {v}"));
    }

    // -- Power only on assigned subcarriers (e = a·p with binary a).
    let mut masked = Family::new("power-on-assigned-subcarriers");
    for ((k, sc), &v) in sol.e_ul.indexed_iter() {
        if sol.a_ul[[k, sc]] == 0.0 {
            masked.observe(v, || format!("e_ul[{k},{sc}] = {v} on unassigned subcarrier"));
        }
    }
    for ((l, sc), &v) in sol.e_dl.indexed_iter() {
        if sol.a_dl[[l, sc]] == 0.0 {
            masked.observe(v, || format!("e_dl[{l},{sc}] = {v} on unassigned subcarrier"));
        }
    }

    // -- Transmit power budgets.
    let mut ul_budget = Family::new("ul-power-budget");
    for k in 0..mu {
        let sum: f64 = (0..n).map(|sc| sol.e_ul[[k, sc]]).sum();
        ul_budget.observe(sum - cfg.p_ul_budgets[k], || {
            format!("user {k}: {sum} mW over budget {} mW", cfg.p_ul_budgets[k])
        });
    }
    let mut dl_budget = Family::new("dl-power-budget");
    let dl_sum: f64 = sol.e_dl.iter().sum();
    dl_budget.observe(dl_sum - cfg.p_dl_budget, || {
        format!("total {dl_sum} mW over budget {} mW", cfg.p_dl_budget)
    });

    // -- Decode gate: with cancellation on, the scheduled downlink rate on a
    // subcarrier may not exceed what the receiving station can decode.
    let mut gate = Family::new("bs-decode-gate");
    for sc in 0..n {
        if sol.tau[sc] == 0.0 {
            continue;
        }
        let sum_dl_phi: f64 = (0..md).map(|l| sol.e_dl[[l, sc]] * ch.phi[sc]).sum();
        let sum_ul_f: f64 = (0..mu).map(|k| sol.e_ul[[k, sc]] * ch.f[[k, sc]]).sum();
        let cap = rate_bs(sum_dl_phi, sum_ul_f, s2)?;
        let scheduled: f64 = (0..md).map(|l| sol.r_dl[[l, sc]]).sum();
        gate.observe(sol.tau[sc] * scheduled - cap, || {
            format!("subcarrier {sc}: scheduled {scheduled} over decodable {cap}")
        });
    }

    // -- Downlink achievability: scheduled rate within the channel's capacity.
    let mut achievable = Family::new("dl-rate-achievability");
    for l in 0..md {
        for sc in 0..n {
            let itf: f64 = (0..mu).map(|k| sol.e_ul[[k, sc]] * ch.g[[k, l, sc]]).sum();
            let cap = rate_dl(sol.e_dl[[l, sc]], ch.h[[l, sc]], itf, s2)?;
            achievable.observe(sol.r_dl[[l, sc]] - cap, || {
                format!("r_dl[{l},{sc}] = {} over achievable {cap}", sol.r_dl[[l, sc]])
            });
        }
    }

    // -- QoS floor: every downlink user gets at least gamma_min in total.
    let mut qos = Family::new("dl-qos-threshold");
    for l in 0..md {
        let total: f64 = (0..n).map(|sc| sol.r_dl[[l, sc]]).sum();
        qos.observe(cfg.gamma_min - total, || {
            format!("user {l}: total {total} below threshold {}", cfg.gamma_min)
        });
    }

    // -- Internal consistency: stored throughputs match a recomputation.
    let mut consistent = Family::new("throughput-consistency");
    let per_ul = per_user_ul_throughput(&sol.e_ul, &sol.e_dl, &sol.tau, ch, cfg)?;
    for (k, (&stored, &fresh)) in sol.per_ul_user_throughput.iter().zip(&per_ul).enumerate() {
        consistent.observe((stored - fresh).abs(), || {
            format!("user {k}: stored {stored} vs recomputed {fresh}")
        });
    }
    let min_fresh = per_ul.iter().copied().fold(f64::INFINITY, f64::min);
    consistent.observe((sol.achieved_common_throughput - min_fresh).abs(), || {
        format!(
            "achieved {} vs recomputed min {min_fresh}",
            sol.achieved_common_throughput
        )
    });
    for l in 0..md {
        let total: f64 = (0..n).map(|sc| sol.r_dl[[l, sc]]).sum();
        consistent.observe((sol.per_dl_user_throughput[l] - total).abs(), || {
            format!("dl user {l}: stored {} vs summed {total}", sol.per_dl_user_throughput[l])
        });
    }

    let families = vec![
        excl_ul, excl_dl, binary, nonneg, masked, ul_budget, dl_budget, gate, achievable, qos,
        consistent,
    ];
    Ok(FeasibilityReport {
        constraints: families.into_iter().map(|f| f.finish(tol)).collect(),
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, RngSeed};
    use crate::solution::IntegralSolution;
    use ndarray::Array2;

    /// Hand-built feasible point on the tiny preset: diagonal assignments,
    /// no cancellation, scheduled rates at 90% of capacity, QoS set below
    /// the delivered total.
    fn feasible_instance() -> (NetworkConfig, ChannelRealization, IntegralSolution) {
        let mut cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(32));
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        assert_eq!((mu, md, n), (2, 2, 2));

        let mut a_ul = Array2::zeros((mu, n));
        let mut a_dl = Array2::zeros((md, n));
        let mut e_ul = Array2::zeros((mu, n));
        let mut e_dl = Array2::zeros((md, n));
        for i in 0..2 {
            a_ul[[i, i]] = 1.0;
            a_dl[[i, i]] = 1.0;
            e_ul[[i, i]] = cfg.p_ul_budgets[i];
            e_dl[[i, i]] = cfg.p_dl_budget / 2.0;
        }
        let mut r_dl = Array2::zeros((md, n));
        for l in 0..2 {
            let sc = l;
            let itf: f64 = (0..mu).map(|k| e_ul[[k, sc]] * ch.g[[k, l, sc]]).sum();
            let cap = rate_dl(e_dl[[l, sc]], ch.h[[l, sc]], itf, cfg.noise_power).unwrap();
            r_dl[[l, sc]] = 0.9 * cap;
        }
        let min_total = (0..2).map(|l| r_dl[[l, l]]).fold(f64::INFINITY, f64::min);
        assert!(min_total > 0.0);
        cfg.gamma_min = 0.5 * min_total;

        let sol = IntegralSolution::from_parts(
            a_ul,
            a_dl,
            vec![0.0, 0.0],
            e_ul,
            e_dl,
            r_dl,
            &ch,
            &cfg,
        )
        .unwrap();
        (cfg, ch, sol)
    }

    #[test]
    fn accepts_analytically_feasible_solution() {
        let (cfg, ch, sol) = feasible_instance();
        let report = check_p1_feasible(&sol, &ch, &cfg, 1e-9).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.worst_violation(), 0.0);
    }

    #[test]
    fn all_zero_solution_fails_qos_for_every_user() {
        let cfg = NetworkConfig::tiny();
        assert!(cfg.gamma_min > 0.0);
        let (_, ch) = draw_realization(&cfg, RngSeed(32));
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        let sol = IntegralSolution::from_parts(
            Array2::zeros((mu, n)),
            Array2::zeros((md, n)),
            vec![0.0; n],
            Array2::zeros((mu, n)),
            Array2::zeros((md, n)),
            Array2::zeros((md, n)),
            &ch,
            &cfg,
        )
        .unwrap();
        let report = check_p1_feasible(&sol, &ch, &cfg, 1e-9).unwrap();
        assert!(!report.passed());
        assert_eq!(report.failed(), vec!["dl-qos-threshold"]);
        let qos = report.get("dl-qos-threshold").unwrap();
        assert_eq!(qos.worst_violation, cfg.gamma_min);
    }

    /// Recompute the stored throughputs after a mutation that changes the
    /// uplink rates, so only the intended constraint family is perturbed.
    fn refresh_throughputs(
        sol: &mut IntegralSolution,
        ch: &ChannelRealization,
        cfg: &NetworkConfig,
    ) {
        sol.per_ul_user_throughput =
            per_user_ul_throughput(&sol.e_ul, &sol.e_dl, &sol.tau, ch, cfg).unwrap();
        sol.achieved_common_throughput = sol
            .per_ul_user_throughput
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
    }

    type Mutation = Box<dyn Fn(&mut IntegralSolution, &ChannelRealization, &NetworkConfig)>;

    /// Every single-constraint mutation of the feasible point must be
    /// rejected, and by the family that was mutated.
    #[test]
    fn rejects_each_single_constraint_mutation() {
        let mutations: Vec<(&str, Mutation)> = vec![
            ("subcarrier-exclusivity-ul", Box::new(|s, _, _| {
                s.a_ul[[1, 0]] = 1.0;
            })),
            ("subcarrier-exclusivity-dl", Box::new(|s, _, _| {
                s.a_dl[[1, 0]] = 1.0;
            })),
            ("binary-entries", Box::new(|s, _, _| s.tau[0] = 0.5)),
            ("non-negativity", Box::new(|s, _, _| s.r_dl[[0, 1]] = -0.25)),
            ("power-on-assigned-subcarriers", Box::new(|s, ch, cfg| {
                // keep the row budget intact: move power to an unassigned slot
                s.e_ul[[0, 1]] = s.e_ul[[0, 0]] / 2.0;
                s.e_ul[[0, 0]] /= 2.0;
                refresh_throughputs(s, ch, cfg);
            })),
            ("ul-power-budget", Box::new(|s, ch, cfg| {
                s.e_ul[[0, 0]] *= 1.5;
                refresh_throughputs(s, ch, cfg);
            })),
            ("dl-power-budget", Box::new(|s, ch, cfg| {
                s.e_dl[[0, 0]] *= 1.5;
                s.e_dl[[1, 1]] *= 1.5;
                refresh_throughputs(s, ch, cfg);
            })),
            ("bs-decode-gate", Box::new(|s, ch, cfg| {
                // Shrink the downlink power on subcarrier 0 until the weak
                // station-to-station link can no longer decode the rate the
                // strong user link still supports, then turn cancellation on
                // and schedule just inside the user link's capacity.
                s.e_dl[[0, 0]] /= 100.0;
                s.tau[0] = 1.0;
                let itf: f64 = (0..2).map(|k| s.e_ul[[k, 0]] * ch.g[[k, 0, 0]]).sum();
                let cap_dl =
                    rate_dl(s.e_dl[[0, 0]], ch.h[[0, 0]], itf, cfg.noise_power).unwrap();
                s.r_dl[[0, 0]] = 0.95 * cap_dl;
                s.per_dl_user_throughput[0] = s.r_dl[[0, 0]];
                refresh_throughputs(s, ch, cfg);
                let sum_dl_phi: f64 = (0..2).map(|l| s.e_dl[[l, 0]] * ch.phi[0]).sum();
                let sum_ul_f: f64 = (0..2).map(|k| s.e_ul[[k, 0]] * ch.f[[k, 0]]).sum();
                let cap_bs = rate_bs(sum_dl_phi, sum_ul_f, cfg.noise_power).unwrap();
                assert!(
                    s.r_dl[[0, 0]] > cap_bs,
                    "fixture draw unsuitable: scheduled {} ≤ decode cap {cap_bs}",
                    s.r_dl[[0, 0]]
                );
            })),
            ("dl-rate-achievability", Box::new(|s, _, _| s.r_dl[[0, 0]] *= 1.5)),
            ("dl-qos-threshold", Box::new(|s, _, _| {
                s.r_dl[[0, 0]] = 0.0;
                s.per_dl_user_throughput[0] = 0.0;
            })),
            ("throughput-consistency", Box::new(|s, _, _| {
                s.achieved_common_throughput += 1.0;
            })),
        ];
        for (name, mutate) in mutations {
            let (cfg, ch, base) = feasible_instance();
            let mut sol = base;
            mutate(&mut sol, &ch, &cfg);
            let report = check_p1_feasible(&sol, &ch, &cfg, 1e-9).unwrap();
            assert!(!report.passed(), "mutation of {name} was accepted");
            assert!(
                !report.constraint_passed(name),
                "mutation of {name} failed elsewhere: {:?}",
                report.failed()
            );
        }
    }

    #[test]
    fn mutating_powers_also_trips_consistency() {
        // Changing a power without refreshing stored throughputs must be
        // caught by the consistency family even when budgets still hold.
        let (cfg, ch, mut sol) = feasible_instance();
        sol.e_ul[[0, 0]] *= 0.5;
        let report = check_p1_feasible(&sol, &ch, &cfg, 1e-9).unwrap();
        assert!(!report.constraint_passed("throughput-consistency"));
    }

    #[test]
    fn tolerance_is_respected() {
        let (cfg, ch, mut sol) = feasible_instance();
        // A 1e-9 mW overdraw passes at tol 1e-6 but fails at tol 1e-12.
        sol.e_ul[[0, 0]] += 1e-9;
        sol.per_ul_user_throughput =
            per_user_ul_throughput(&sol.e_ul, &sol.e_dl, &sol.tau, &ch, &cfg).unwrap();
        sol.achieved_common_throughput = sol
            .per_ul_user_throughput
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        assert!(check_p1_feasible(&sol, &ch, &cfg, 1e-6).unwrap().passed());
        assert!(!check_p1_feasible(&sol, &ch, &cfg, 1e-12).unwrap().passed());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let (cfg, ch, sol) = feasible_instance();
        let bigger = cfg.clone().with_dims(3, 2, 2);
        assert!(check_p1_feasible(&sol, &ch, &bigger, 1e-9).is_err());
    }

    #[test]
    fn display_lists_every_family() {
        let (cfg, ch, sol) = feasible_instance();
        let report = check_p1_feasible(&sol, &ch, &cfg, 1e-9).unwrap();
        let text = report.to_string();
        for name in [
            "subcarrier-exclusivity-ul",
            "dl-qos-threshold",
            "bs-decode-gate",
            "throughput-consistency",
        ] {
            assert!(text.contains(name), "missing {name} in {text}");
        }
    }
}

