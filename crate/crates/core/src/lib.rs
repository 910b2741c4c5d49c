//! Adaptive uplink–downlink spectrum-sharing optimizer.
//!
//! Two co-located cells share one OFDMA band: one station serves downlink
//! users while the other receives uplink traffic on the same subcarriers.
//! The receiving station can, per subcarrier, either decode-and-cancel the
//! other station's downlink signal (which costs downlink rate headroom,
//! because the signal must be decodable at the receiving station too) or
//! treat it as noise. This crate finds subcarrier assignments, transmit
//! powers, and per-subcarrier decode modes that maximize the minimum uplink
//! user throughput while every downlink user keeps a guaranteed rate.
//!
//! The pipeline relaxes the binary assignments, alternates successive convex
//! approximation over powers with a linear-programming step over decode
//! modes, then rounds and re-optimizes. Everything is deterministic given an
//! [`channel::RngSeed`].

pub mod channel;
pub mod checker;
pub mod config;
pub mod error;
pub mod ipm;
pub mod lp;
pub mod oracle;
pub mod rates;
pub mod solution;
pub mod subproblem;
pub mod taylor;

pub use channel::{
    draw_channels, draw_realization, draw_topology, path_loss_gain, ChannelRealization, RngSeed,
    Topology,
};
pub use checker::{check_p1_feasible, ConstraintReport, FeasibilityReport};
pub use config::{dbm_to_mw, mw_to_dbm, NetworkConfig};
pub use error::{Error, Result};
pub use solution::{IntegralSolution, RelaxedSolution};
