//! Solution containers produced by the relaxation pipeline.
//!
//! [`RelaxedSolution`] carries the continuous point the successive convex
//! steps operate on: fractional subcarrier shares `a_ul`/`a_dl`, fractional
//! decode weights `tau`, the substituted per-subcarrier transmit energies
//! `e_ul`/`e_dl` (share × power, so budgets constrain their plain sums),
//! scheduled downlink rates `r_dl`, and the epigraph value `r_common`.
//!
//! [`IntegralSolution`] is the deliverable: the same layout with shares and
//! decode modes snapped to {0, 1}, powers re-optimized under that mask, and
//! the achieved throughputs recomputed from first principles.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::rates::{common_uplink_throughput, per_user_ul_throughput};

/// Continuous (relaxed) operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedSolution {
    /// Subcarrier share of uplink user `k` on subcarrier `n`, in [0, 1].
    pub a_ul: Array2<f64>,
    /// Subcarrier share of downlink user `l` on subcarrier `n`, in [0, 1].
    pub a_dl: Array2<f64>,
    /// Decode weight per subcarrier: 1 = cancel the downlink signal,
    /// 0 = treat it as noise; fractional in between.
    pub tau: Vec<f64>,
    /// Uplink transmit energy of user `k` on subcarrier `n` (share × power, mW).
    pub e_ul: Array2<f64>,
    /// Downlink transmit energy toward user `l` on subcarrier `n` (mW).
    pub e_dl: Array2<f64>,
    /// Scheduled downlink rate of user `l` on subcarrier `n` (bits/s/Hz).
    pub r_dl: Array2<f64>,
    /// Epigraph value: the common uplink rate the point certifies.
    pub r_common: f64,
}

/// Final operating point with hard assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralSolution {
    /// Binary subcarrier assignment for uplink users (entries exactly 0 or 1).
    pub a_ul: Array2<f64>,
    /// Binary subcarrier assignment for downlink users.
    pub a_dl: Array2<f64>,
    /// Binary decode mode per subcarrier.
    pub tau: Vec<f64>,
    /// Re-optimized uplink powers under the binary mask (mW).
    pub e_ul: Array2<f64>,
    /// Re-optimized downlink powers under the binary mask (mW).
    pub e_dl: Array2<f64>,
    /// Scheduled downlink rates under the binary mask (bits/s/Hz).
    pub r_dl: Array2<f64>,
    /// min_k of `per_ul_user_throughput` — the delivered objective value.
    pub achieved_common_throughput: f64,
    /// Total uplink rate per user at the final powers.
    pub per_ul_user_throughput: Vec<f64>,
    /// Total scheduled downlink rate per user.
    pub per_dl_user_throughput: Vec<f64>,
}

impl RelaxedSolution {
    /// All-zero point with the right shapes for `cfg`.
    pub fn zeros(cfg: &NetworkConfig) -> Self {
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        RelaxedSolution {
            a_ul: Array2::zeros((mu, n)),
            a_dl: Array2::zeros((md, n)),
            tau: vec![0.0; n],
            e_ul: Array2::zeros((mu, n)),
            e_dl: Array2::zeros((md, n)),
            r_dl: Array2::zeros((md, n)),
            r_common: 0.0,
        }
    }

    /// Shape check against a configuration.
    pub fn validate_dims(&self, cfg: &NetworkConfig) -> Result<()> {
        let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        let ok = self.a_ul.dim() == (mu, n)
            && self.a_dl.dim() == (md, n)
            && self.tau.len() == n
            && self.e_ul.dim() == (mu, n)
            && self.e_dl.dim() == (md, n)
            && self.r_dl.dim() == (md, n);
        if !ok {
            return Err(Error::DimensionMismatch {
                what: "relaxed solution",
                expected: format!("(mu, md, n) = {:?}", (mu, md, n)),
                got: format!(
                    "a_ul {:?}, a_dl {:?}, tau {}, e_ul {:?}, e_dl {:?}, r_dl {:?}",
                    self.a_ul.dim(),
                    self.a_dl.dim(),
                    self.tau.len(),
                    self.e_ul.dim(),
                    self.e_dl.dim(),
                    self.r_dl.dim()
                ),
            });
        }
        Ok(())
    }

    /// Common uplink throughput implied by the stored powers and decode
    /// weights (recomputed, not the stored epigraph value).
    pub fn common_uplink_throughput(
        &self,
        ch: &ChannelRealization,
        cfg: &NetworkConfig,
    ) -> Result<f64> {
        self.validate_dims(cfg)?;
        common_uplink_throughput(&self.e_ul, &self.e_dl, &self.tau, ch, cfg)
    }
}

impl IntegralSolution {
    /// Shape check against a configuration.
    pub fn validate_dims(&self, cfg: &NetworkConfig) -> Result<()> {
        let as_relaxed = RelaxedSolution {
            a_ul: self.a_ul.clone(),
            a_dl: self.a_dl.clone(),
            tau: self.tau.clone(),
            e_ul: self.e_ul.clone(),
            e_dl: self.e_dl.clone(),
            r_dl: self.r_dl.clone(),
            r_common: self.achieved_common_throughput,
        };
        as_relaxed.validate_dims(cfg)?;
        if self.per_ul_user_throughput.len() != cfg.num_ul_users
            || self.per_dl_user_throughput.len() != cfg.num_dl_users
        {
            return Err(Error::DimensionMismatch {
                what: "per-user throughput vectors",
                expected: format!("{} / {}", cfg.num_ul_users, cfg.num_dl_users),
                got: format!(
                    "{} / {}",
                    self.per_ul_user_throughput.len(),
                    self.per_dl_user_throughput.len()
                ),
            });
        }
        Ok(())
    }

    /// True when every share and decode-mode entry is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        let bin = |v: &f64| *v == 0.0 || *v == 1.0;
        self.a_ul.iter().all(bin) && self.a_dl.iter().all(bin) && self.tau.iter().all(bin)
    }

    /// Construct from masked powers: recomputes the per-user and common
    /// throughputs from the rate formulas, and the per-downlink-user totals
    /// from the scheduled `r_dl`.
    pub fn from_parts(
        a_ul: Array2<f64>,
        a_dl: Array2<f64>,
        tau: Vec<f64>,
        e_ul: Array2<f64>,
        e_dl: Array2<f64>,
        r_dl: Array2<f64>,
        ch: &ChannelRealization,
        cfg: &NetworkConfig,
    ) -> Result<Self> {
        let per_ul = per_user_ul_throughput(&e_ul, &e_dl, &tau, ch, cfg)?;
        let achieved = per_ul
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let per_dl = r_dl.rows().into_iter().map(|row| row.sum()).collect();
        let sol = IntegralSolution {
            a_ul,
            a_dl,
            tau,
            e_ul,
            e_dl,
            r_dl,
            achieved_common_throughput: achieved,
            per_ul_user_throughput: per_ul,
            per_dl_user_throughput: per_dl,
        };
        sol.validate_dims(cfg)?;
        Ok(sol)
    }

    /// Common uplink throughput recomputed from the stored powers; for a
    /// well-formed value this matches `achieved_common_throughput`.
    pub fn common_uplink_throughput(
        &self,
        ch: &ChannelRealization,
        cfg: &NetworkConfig,
    ) -> Result<f64> {
        self.validate_dims(cfg)?;
        common_uplink_throughput(&self.e_ul, &self.e_dl, &self.tau, ch, cfg)
    }
}
