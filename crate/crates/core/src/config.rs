//! Static description of the two-cell network under study.
//!
//! One base station serves downlink users while a neighbouring station
//! receives uplink traffic on the same band, so every quantity here is
//! expressed in linear units: powers in milliwatts, distances in metres,
//! rates in bits/s/Hz. Decibel values appear only at the CLI boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Convert a dBm figure to linear milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Convert linear milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Network geometry, budgets, and the quality-of-service floor.
///
/// `validate` enforces the documented ranges; constructors in this module
/// always return validated configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of uplink users (served by the recovering station).
    pub num_ul_users: usize,
    /// Number of downlink users (served by the transmitting station).
    pub num_dl_users: usize,
    /// Number of orthogonal subcarriers shared by both cells.
    pub num_subcarriers: usize,
    /// Total downlink transmit budget across all users and subcarriers, mW.
    pub p_dl_budget: f64,
    /// Per-user uplink transmit budgets, mW; length `num_ul_users`.
    pub p_ul_budgets: Vec<f64>,
    /// Noise power per subcarrier, mW.
    pub noise_power: f64,
    /// Minimum total downlink rate each downlink user must receive, bits/s/Hz.
    pub gamma_min: f64,
    /// Path-loss gain at the reference distance (linear, e.g. 1e-6 for -60 dB).
    pub pathloss_ref_gain: f64,
    /// Reference distance for the path-loss model, metres.
    pub pathloss_ref_dist: f64,
    /// Path-loss exponent.
    pub pathloss_exponent: f64,
    /// Radius of each cell's user disc, metres.
    pub cell_radius: f64,
    /// Distance between the two base stations, metres.
    pub bs_separation: f64,
}

impl NetworkConfig {
    /// Full-scale configuration matching the published experiment:
    /// 20 users per cell, 100 subcarriers, 40 dBm downlink budget,
    /// 30 dBm per uplink user, -50 dBm noise.
    pub fn paper() -> Self {
        Self {
            num_ul_users: 20,
            num_dl_users: 20,
            num_subcarriers: 100,
            p_dl_budget: dbm_to_mw(40.0),
            p_ul_budgets: vec![dbm_to_mw(30.0); 20],
            noise_power: dbm_to_mw(-50.0),
            gamma_min: 4.0,
            pathloss_ref_gain: 1e-6,
            pathloss_ref_dist: 10.0,
            pathloss_exponent: 3.0,
            cell_radius: 100.0,
            bs_separation: 100.0,
        }
    }

    /// Reduced configuration sized for CI: 8 users per cell, 32 subcarriers.
    ///
    /// Noise is lowered to -70 dBm so that the default rate floor of
    /// 4 bits/s/Hz stays satisfiable at this scale: with -50 dBm noise the
    /// downlink max-min throughput tops out near 1-3 bits/s/Hz and every
    /// sweep point above that would be infeasible by construction.
    pub fn desk() -> Self {
        Self {
            num_ul_users: 8,
            num_dl_users: 8,
            num_subcarriers: 32,
            p_dl_budget: dbm_to_mw(40.0),
            p_ul_budgets: vec![dbm_to_mw(30.0); 8],
            noise_power: dbm_to_mw(-70.0),
            gamma_min: 4.0,
            pathloss_ref_gain: 1e-6,
            pathloss_ref_dist: 10.0,
            pathloss_exponent: 3.0,
            cell_radius: 100.0,
            bs_separation: 100.0,
        }
    }

    /// Smallest interesting instance: two users per cell on two subcarriers.
    /// Used by the exhaustive-search cross checks.
    pub fn tiny() -> Self {
        Self {
            num_ul_users: 2,
            num_dl_users: 2,
            num_subcarriers: 2,
            gamma_min: 1.0,
            p_ul_budgets: vec![dbm_to_mw(30.0); 2],
            ..Self::desk()
        }
    }

    /// Same settings with different cell dimensions; budgets are resized to
    /// `num_ul_users` copies of the first existing budget.
    pub fn with_dims(mut self, num_ul: usize, num_dl: usize, num_sc: usize) -> Self {
        let per_user = self.p_ul_budgets.first().copied().unwrap_or(1.0);
        self.num_ul_users = num_ul;
        self.num_dl_users = num_dl;
        self.num_subcarriers = num_sc;
        self.p_ul_budgets = vec![per_user; num_ul];
        self
    }

    /// Replace every uplink budget with `p_max` milliwatts.
    pub fn with_p_ul_max(mut self, p_max: f64) -> Self {
        self.p_ul_budgets = vec![p_max; self.num_ul_users];
        self
    }

    pub fn with_gamma_min(mut self, gamma_min: f64) -> Self {
        self.gamma_min = gamma_min;
        self
    }

    /// Check every documented range; returns the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive and finite, got {v}")));
            }
            Ok(())
        }
        if self.num_ul_users == 0 || self.num_dl_users == 0 || self.num_subcarriers == 0 {
            return Err(Error::InvalidConfig("user and subcarrier counts must be at least 1".into()));
        }
        if self.p_ul_budgets.len() != self.num_ul_users {
            return Err(Error::InvalidConfig(format!(
                "p_ul_budgets has {} entries for {} uplink users",
                self.p_ul_budgets.len(),
                self.num_ul_users
            )));
        }
        positive("p_dl_budget", self.p_dl_budget)?;
        for (k, &p) in self.p_ul_budgets.iter().enumerate() {
            positive("p_ul_budgets", p).map_err(|_| {
                Error::InvalidConfig(format!("p_ul_budgets[{k}] must be positive and finite, got {p}"))
            })?;
        }
        positive("noise_power", self.noise_power)?;
        if !self.gamma_min.is_finite() || self.gamma_min < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "gamma_min must be non-negative and finite, got {}",
                self.gamma_min
            )));
        }
        positive("pathloss_ref_gain", self.pathloss_ref_gain)?;
        positive("pathloss_ref_dist", self.pathloss_ref_dist)?;
        positive("pathloss_exponent", self.pathloss_exponent)?;
        positive("cell_radius", self.cell_radius)?;
        positive("bs_separation", self.bs_separation)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        NetworkConfig::paper().validate().unwrap();
        NetworkConfig::desk().validate().unwrap();
        NetworkConfig::tiny().validate().unwrap();
    }

    #[test]
    fn paper_preset_unit_conversions() {
        let cfg = NetworkConfig::paper();
        assert_eq!(cfg.p_dl_budget, 1e4);
        assert_eq!(cfg.p_ul_budgets[0], 1e3);
        assert_eq!(cfg.noise_power, 1e-5);
        assert_eq!(cfg.num_subcarriers, 100);
    }

    #[test]
    fn rejects_zero_counts_and_bad_budgets() {
        let mut cfg = NetworkConfig::tiny();
        cfg.num_subcarriers = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = NetworkConfig::tiny();
        cfg.p_ul_budgets = vec![1.0]; // wrong length
        assert!(cfg.validate().is_err());

        let mut cfg = NetworkConfig::tiny();
        cfg.noise_power = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = NetworkConfig::tiny();
        cfg.gamma_min = f64::NAN;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-70.0, -50.0, 0.0, 20.0, 40.0] {
            assert!((mw_to_dbm(dbm_to_mw(dbm)) - dbm).abs() < 1e-12);
        }
    }
}
