//! Geometry and fading draws for the two-cell layout.
//!
//! The transmitting (downlink) station sits at the origin and the receiving
//! (uplink) station at `(0, bs_separation)`; each station's users are placed
//! uniformly on a disc of `cell_radius` around it. Large-scale attenuation
//! follows a single-slope power law and small-scale fading is Rayleigh: every
//! link gain is `path_loss_gain(d) * |z|^2` with `z` a zero-mean,
//! unit-variance circularly-symmetric complex Gaussian, so `|z|^2` is
//! exponentially distributed with unit mean.
//!
//! All draws are reproducible: the generator is ChaCha8 keyed through
//! [`RngSeed`], and the draw order is fixed (uplink users before downlink
//! users; then `f` by user-major subcarrier order, `phi`, `h`, `g`).

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Distances below this are clamped before applying the power law, so that
/// overlapping cells cannot produce unbounded gains.
pub const MIN_LINK_DISTANCE_M: f64 = 1.0;

/// Root key for a reproducible draw.
///
/// Derived keys come from [`RngSeed::derive`], which mixes the root with a
/// stream index through SplitMix64; the same (seed, stream) pair always maps
/// to the same generator state, on every platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// SplitMix64 step (Steele, Lea, Flood 2014); the standard 64-bit finalizer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    /// Stable sub-stream derivation: `derive(i)` feeds `seed XOR i*phi64`
    /// through SplitMix64, where `phi64` is the 64-bit golden-ratio constant.
    pub fn derive(self, stream: u64) -> RngSeed {
        RngSeed(splitmix64(self.0 ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
    }

    fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Station and user coordinates in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Downlink (transmitting) station.
    pub dl_bs: [f64; 2],
    /// Uplink (receiving) station.
    pub ul_bs: [f64; 2],
    /// Uplink users, clustered around `ul_bs`.
    pub ul_users: Vec<[f64; 2]>,
    /// Downlink users, clustered around `dl_bs`.
    pub dl_users: Vec<[f64; 2]>,
}

/// One fading realization: every link gain the optimizer needs, all strictly
/// positive.
///
/// Indexing convention: `f[[k, n]]` uplink user `k` to the uplink station on
/// subcarrier `n`; `phi[n]` downlink station to uplink station; `h[[l, n]]`
/// downlink station to downlink user `l`; `g[[k, l, n]]` uplink user `k`
/// into downlink user `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub f: Array2<f64>,
    pub phi: Array1<f64>,
    pub h: Array2<f64>,
    pub g: Array3<f64>,
}

/// Large-scale gain at distance `d` metres: `ref_gain * (d / ref_dist)^-exponent`,
/// with `d` clamped to [`MIN_LINK_DISTANCE_M`].
pub fn path_loss_gain(d: f64, cfg: &NetworkConfig) -> f64 {
    let d = d.max(MIN_LINK_DISTANCE_M);
    cfg.pathloss_ref_gain * (d / cfg.pathloss_ref_dist).powf(-cfg.pathloss_exponent)
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Place both stations and draw user positions uniformly on each cell disc.
///
/// Polar inversion sampling: radius `R*sqrt(u1)`, angle `2*pi*u2`, one
/// (radius, angle) pair per user, uplink users first.
pub fn draw_topology(cfg: &NetworkConfig, seed: RngSeed) -> Topology {
    let mut rng = seed.rng();
    let dl_bs = [0.0, 0.0];
    let ul_bs = [0.0, cfg.bs_separation];
    let mut disc = |center: [f64; 2], count: usize| -> Vec<[f64; 2]> {
        (0..count)
            .map(|_| {
                let r = cfg.cell_radius * rng.random::<f64>().sqrt();
                let th = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                [center[0] + r * th.cos(), center[1] + r * th.sin()]
            })
            .collect()
    };
    let ul_users = disc(ul_bs, cfg.num_ul_users);
    let dl_users = disc(dl_bs, cfg.num_dl_users);
    Topology { dl_bs, ul_bs, ul_users, dl_users }
}

/// Draw the Rayleigh fading on top of a topology's large-scale gains.
pub fn draw_channels(topo: &Topology, cfg: &NetworkConfig, seed: RngSeed) -> ChannelRealization {
    let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
    let mut rng = seed.rng();
    // |z|^2 for z = x + iy with x, y ~ N(0, 1/2): exponential with unit mean.
    let half_gauss = Normal::new(0.0, 0.5f64.sqrt()).expect("valid std dev");
    let fade = move |rng: &mut ChaCha8Rng| -> f64 {
        let re: f64 = half_gauss.sample(rng);
        let im: f64 = half_gauss.sample(rng);
        (re * re + im * im).max(f64::MIN_POSITIVE)
    };

    let mut f = Array2::zeros((mu, n));
    for k in 0..mu {
        let pl = path_loss_gain(dist(topo.ul_users[k], topo.ul_bs), cfg);
        for sc in 0..n {
            f[[k, sc]] = pl * fade(&mut rng);
        }
    }
    let pl_bs = path_loss_gain(dist(topo.dl_bs, topo.ul_bs), cfg);
    let phi = Array1::from_iter((0..n).map(|_| pl_bs * fade(&mut rng)));
    let mut h = Array2::zeros((md, n));
    for l in 0..md {
        let pl = path_loss_gain(dist(topo.dl_users[l], topo.dl_bs), cfg);
        for sc in 0..n {
            h[[l, sc]] = pl * fade(&mut rng);
        }
    }
    let mut g = Array3::zeros((mu, md, n));
    for k in 0..mu {
        for l in 0..md {
            let pl = path_loss_gain(dist(topo.ul_users[k], topo.dl_users[l]), cfg);
            for sc in 0..n {
                g[[k, l, sc]] = pl * fade(&mut rng);
            }
        }
    }
    ChannelRealization { f, phi, h, g }
}

/// Topology plus fading in one call, on independent sub-streams of `seed`.
pub fn draw_realization(cfg: &NetworkConfig, seed: RngSeed) -> (Topology, ChannelRealization) {
    let topo = draw_topology(cfg, seed.derive(0));
    let ch = draw_channels(&topo, cfg, seed.derive(1));
    (topo, ch)
}

impl ChannelRealization {
    pub fn dims(&self) -> (usize, usize, usize) {
        let (mu, n) = self.f.dim();
        let (md, _) = self.h.dim();
        (mu, md, n)
    }

    /// Validate against a configuration: shapes match and every gain is
    /// strictly positive and finite.
    pub fn validate(&self, cfg: &NetworkConfig) -> Result<()> {
        let want = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
        let got = (self.f.dim(), self.h.dim(), self.g.dim(), self.phi.len());
        let ok = self.f.dim() == (want.0, want.2)
            && self.h.dim() == (want.1, want.2)
            && self.g.dim() == (want.0, want.1, want.2)
            && self.phi.len() == want.2;
        if !ok {
            return Err(Error::DimensionMismatch {
                what: "channel realization",
                expected: format!("{want:?}"),
                got: format!("{got:?}"),
            });
        }
        let all_pos = self.f.iter().chain(self.phi.iter()).chain(self.h.iter()).chain(self.g.iter());
        for &v in all_pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("channel gain must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Serialize as self-describing JSON: explicit dimensions plus row-major
    /// gain arrays, suitable for fixture files.
    pub fn to_json(&self) -> String {
        let (mu, md, n) = self.dims();
        let file = ChannelFile {
            num_ul_users: mu,
            num_dl_users: md,
            num_subcarriers: n,
            f: self.f.iter().copied().collect(),
            phi: self.phi.to_vec(),
            h: self.h.iter().copied().collect(),
            g: self.g.iter().copied().collect(),
        };
        serde_json::to_string_pretty(&file).expect("channel serialization cannot fail")
    }

    /// Inverse of [`ChannelRealization::to_json`]; checks dimensions and
    /// positivity before accepting the data.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ChannelFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let (mu, md, n) = (file.num_ul_users, file.num_dl_users, file.num_subcarriers);
        let expect = |name: &'static str, got: usize, want: usize| -> Result<()> {
            if got != want {
                return Err(Error::DimensionMismatch {
                    what: name,
                    expected: want.to_string(),
                    got: got.to_string(),
                });
            }
            Ok(())
        };
        expect("f", file.f.len(), mu * n)?;
        expect("phi", file.phi.len(), n)?;
        expect("h", file.h.len(), md * n)?;
        expect("g", file.g.len(), mu * md * n)?;
        let ch = ChannelRealization {
            f: Array2::from_shape_vec((mu, n), file.f).expect("checked shape"),
            phi: Array1::from_vec(file.phi),
            h: Array2::from_shape_vec((md, n), file.h).expect("checked shape"),
            g: Array3::from_shape_vec((mu, md, n), file.g).expect("checked shape"),
        };
        for &v in ch.f.iter().chain(ch.phi.iter()).chain(ch.h.iter()).chain(ch.g.iter()) {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Parse(format!("gain entries must be positive and finite, got {v}")));
            }
        }
        Ok(ch)
    }
}

/// On-disk schema for [`ChannelRealization`]: row-major flattening of each
/// gain tensor.
#[derive(Serialize, Deserialize)]
struct ChannelFile {
    num_ul_users: usize,
    num_dl_users: usize,
    num_subcarriers: usize,
    f: Vec<f64>,
    phi: Vec<f64>,
    h: Vec<f64>,
    g: Vec<f64>,
}
