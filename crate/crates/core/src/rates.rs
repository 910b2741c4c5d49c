//! Per-subcarrier spectral efficiencies for the shared-band scenario.
//!
//! All rates are Shannon capacities in bits/s/Hz with unit subcarrier
//! bandwidth, computed from linear-milliwatt powers and linear gains. Each
//! function validates its domain (finite, non-negative inputs; positive
//! noise) and returns a [`crate::error::Error`] instead of a NaN.
//!
//! The two uplink rates differ only in what the receiving station sees on the
//! subcarrier: [`rate_ul_tin`] treats the other station's downlink signal as
//! noise, while [`rate_ul_sic`] assumes that signal was already decoded and
//! cancelled, leaving a clean channel. [`rate_bs`] is the rate at which the
//! receiving station can decode that downlink signal in the first place
//! (uplink traffic acting as noise), which is what gates cancellation.

use ndarray::Array2;

use crate::channel::ChannelRealization;
use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// log2(1 + x) computed through `ln_1p` so that tiny SNRs keep full relative
/// precision.
#[inline]
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

fn check(what: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::NonFinite { what });
    }
    if value < 0.0 {
        return Err(Error::Domain { what, value });
    }
    Ok(value)
}

fn check_noise(sigma2: f64) -> Result<f64> {
    if !sigma2.is_finite() {
        return Err(Error::NonFinite { what: "sigma2" });
    }
    if sigma2 <= 0.0 {
        return Err(Error::Domain { what: "sigma2 (must be positive)", value: sigma2 });
    }
    Ok(sigma2)
}

/// Uplink rate after the co-channel downlink signal has been cancelled:
/// `log2(1 + e_ul·f / σ²)`.
pub fn rate_ul_sic(e_ul: f64, f: f64, sigma2: f64) -> Result<f64> {
    let e = check("e_ul", e_ul)?;
    let f = check("f", f)?;
    let s2 = check_noise(sigma2)?;
    Ok(log2_1p(e * f / s2))
}

/// Uplink rate with the co-channel downlink signal treated as noise:
/// `log2(1 + e_ul·f / (dl_interference + σ²))`, where `dl_interference` is
/// the received downlink power `Σ_l E_dl[l]·φ` precomputed by the caller.
pub fn rate_ul_tin(e_ul: f64, f: f64, dl_interference: f64, sigma2: f64) -> Result<f64> {
    let e = check("e_ul", e_ul)?;
    let f = check("f", f)?;
    let i = check("dl_interference", dl_interference)?;
    let s2 = check_noise(sigma2)?;
    Ok(log2_1p(e * f / (i + s2)))
}

/// Rate at which the receiving station can decode the other station's
/// downlink signal while its own uplink traffic interferes:
/// `log2(sum_e_ul_f + sum_e_dl_phi + σ²) − log2(sum_e_ul_f + σ²)`.
///
/// Both sums are received powers on the subcarrier: `sum_e_dl_phi` over
/// downlink users (`Σ_l E_dl[l]·φ`), `sum_e_ul_f` over uplink users
/// (`Σ_k E_ul[k]·f_k`). Zero exactly when no downlink power is present.
pub fn rate_bs(sum_e_dl_phi: f64, sum_e_ul_f: f64, sigma2: f64) -> Result<f64> {
    let dl = check("sum_e_dl_phi", sum_e_dl_phi)?;
    let ul = check("sum_e_ul_f", sum_e_ul_f)?;
    let s2 = check_noise(sigma2)?;
    Ok(log2_1p(dl / (ul + s2)))
}

/// Downlink user rate with uplink traffic as noise:
/// `log2(1 + e_dl·h / (ul_interference + σ²))`, where `ul_interference` is
/// `Σ_k E_ul[k]·g_k` precomputed by the caller.
pub fn rate_dl(e_dl: f64, h: f64, ul_interference: f64, sigma2: f64) -> Result<f64> {
    let e = check("e_dl", e_dl)?;
    let h = check("h", h)?;
    let i = check("ul_interference", ul_interference)?;
    let s2 = check_noise(sigma2)?;
    Ok(log2_1p(e * h / (i + s2)))
}

/// Per-uplink-user totals `Σ_n [(1−τ_n)·TIN + τ_n·SIC]` for arbitrary power
/// matrices and (possibly fractional) decode weights.
///
/// `e_ul` is `num_ul_users × num_subcarriers`, `e_dl` is
/// `num_dl_users × num_subcarriers`, `tau[n] ∈ [0, 1]`.
pub fn per_user_ul_throughput(
    e_ul: &Array2<f64>,
    e_dl: &Array2<f64>,
    tau: &[f64],
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<Vec<f64>> {
    let (mu, md, n) = (cfg.num_ul_users, cfg.num_dl_users, cfg.num_subcarriers);
    ch.validate(cfg)?;
    if e_ul.dim() != (mu, n) || e_dl.dim() != (md, n) || tau.len() != n {
        return Err(Error::DimensionMismatch {
            what: "throughput inputs",
            expected: format!("e_ul {:?}, e_dl {:?}, tau {}", (mu, n), (md, n), n),
            got: format!("e_ul {:?}, e_dl {:?}, tau {}", e_ul.dim(), e_dl.dim(), tau.len()),
        });
    }
    let s2 = cfg.noise_power;
    let mut per_user = vec![0.0; mu];
    for (k, total) in per_user.iter_mut().enumerate() {
        for sc in 0..n {
            let dl_itf: f64 = (0..md).map(|l| e_dl[[l, sc]] * ch.phi[sc]).sum();
            let tin = rate_ul_tin(e_ul[[k, sc]], ch.f[[k, sc]], dl_itf, s2)?;
            let sic = rate_ul_sic(e_ul[[k, sc]], ch.f[[k, sc]], s2)?;
            *total += (1.0 - tau[sc]) * tin + tau[sc] * sic;
        }
    }
    Ok(per_user)
}

/// The min-over-users value of [`per_user_ul_throughput`] — the quantity the
/// optimizer maximizes.
pub fn common_uplink_throughput(
    e_ul: &Array2<f64>,
    e_dl: &Array2<f64>,
    tau: &[f64],
    ch: &ChannelRealization,
    cfg: &NetworkConfig,
) -> Result<f64> {
    let per_user = per_user_ul_throughput(e_ul, e_dl, tau, ch, cfg)?;
    per_user
        .into_iter()
        .min_by(|a, b| a.partial_cmp(b).expect("rates are finite"))
        .ok_or_else(|| Error::InvalidConfig("no uplink users".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, RngSeed};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Reference values computed with 30-digit arbitrary-precision arithmetic.
    const LOG2_101: f64 = 6.658_211_482_751_795;
    const LOG2_1_1: f64 = 0.137_503_523_749_934_91;
    const LOG2_1_01: f64 = 0.014_355_292_977_070_041;
    const BS_EXAMPLE: f64 = 3.334_984_247_712_808_7;
    const DL_EXAMPLE: f64 = 5.101_538_026_462_062;

    #[test]
    fn sic_reference_points() {
        assert_eq!(rate_ul_sic(0.0, 1e-9, 1e-5).unwrap(), 0.0);
        assert_eq!(rate_ul_sic(1.0, 1e-5, 1e-5).unwrap(), 1.0);
        // 1 mW received over 1e-5 mW noise: SNR 0.1.
        assert_relative_eq!(rate_ul_sic(1000.0, 1e-9, 1e-5).unwrap(), LOG2_1_1, max_relative = 1e-15);
        // Same received power over 1e-8 mW noise: SNR 100.
        assert_relative_eq!(rate_ul_sic(1000.0, 1e-9, 1e-8).unwrap(), LOG2_101, max_relative = 1e-15);
    }

    #[test]
    fn tin_reference_points() {
        assert_eq!(rate_ul_tin(0.0, 1e-9, 3.0, 1e-5).unwrap(), 0.0);
        assert_relative_eq!(
            rate_ul_tin(1000.0, 1e-9, 9e-5, 1e-5).unwrap(),
            LOG2_1_01,
            max_relative = 1e-15
        );
    }

    #[test]
    fn bs_reference_points() {
        assert_eq!(rate_bs(0.0, 123.0, 1e-5).unwrap(), 0.0);
        // Decodable signal power equal to uplink-plus-noise power: one bit.
        assert_eq!(rate_bs(2e-4, 1e-4, 1e-4).unwrap(), 1.0);
        assert_relative_eq!(rate_bs(1e-3, 1e-4, 1e-5).unwrap(), BS_EXAMPLE, max_relative = 1e-15);
    }

    #[test]
    fn dl_reference_points() {
        assert_eq!(rate_dl(0.0, 1e-7, 2e-5, 1e-5).unwrap(), 0.0);
        // Signal exactly equal to interference-plus-noise (all sums exact in
        // binary): one bit.
        assert_eq!(rate_dl(2.0, 1e-5, 1e-5, 1e-5).unwrap(), 1.0);
        assert_relative_eq!(
            rate_dl(10_000.0, 1e-7, 2e-5, 1e-5).unwrap(),
            DL_EXAMPLE,
            max_relative = 1e-15
        );
    }

    #[test]
    fn domain_errors() {
        assert!(rate_ul_sic(f64::NAN, 1e-9, 1e-5).is_err());
        assert!(rate_ul_sic(1.0, f64::INFINITY, 1e-5).is_err());
        assert!(rate_ul_sic(-1.0, 1e-9, 1e-5).is_err());
        assert!(rate_ul_sic(1.0, 1e-9, 0.0).is_err());
        assert!(rate_ul_tin(1.0, 1e-9, -2.0, 1e-5).is_err());
        assert!(rate_bs(1.0, 1.0, -1e-5).is_err());
        assert!(rate_dl(1.0, f64::NAN, 0.0, 1e-5).is_err());
    }

    #[test]
    fn small_snr_precision() {
        // At SNR = 1e-12, log2(1 + x) ≈ x/ln2; naive (1.0 + x).log2() loses
        // half the digits.
        let r = rate_ul_sic(1e-12, 1.0, 1.0).unwrap();
        assert_relative_eq!(r, 1e-12 / std::f64::consts::LN_2, max_relative = 1e-9);
    }

    #[test]
    fn common_throughput_zero_and_unit_cases() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(3));
        let e_ul = Array2::zeros((cfg.num_ul_users, cfg.num_subcarriers));
        let e_dl = Array2::zeros((cfg.num_dl_users, cfg.num_subcarriers));
        let tau = vec![0.0; cfg.num_subcarriers];
        assert_eq!(common_uplink_throughput(&e_ul, &e_dl, &tau, &ch, &cfg).unwrap(), 0.0);

        // Single user, single subcarrier, cancellation on, e_ul·f = σ².
        let mut cfg1 = NetworkConfig::tiny().with_dims(1, 1, 1);
        cfg1.gamma_min = 0.0;
        let (_, ch1) = draw_realization(&cfg1, RngSeed(4));
        let mut e1 = Array2::zeros((1, 1));
        e1[[0, 0]] = cfg1.noise_power / ch1.f[[0, 0]];
        let d1 = Array2::zeros((1, 1));
        assert_relative_eq!(
            common_uplink_throughput(&e1, &d1, &[1.0], &ch1, &cfg1).unwrap(),
            1.0,
            max_relative = 1e-12
        );
    }

    /// Independent re-summation of the throughput on a seeded instance,
    /// written directly against the rate formulas rather than through
    /// [`per_user_ul_throughput`].
    #[test]
    fn common_throughput_matches_direct_resummation() {
        let cfg = NetworkConfig::tiny(); // 2 users, 2 subcarriers
        let (_, ch) = draw_realization(&cfg, RngSeed(9));
        let e_ul = Array2::from_shape_vec((2, 2), vec![10.0, 0.0, 0.0, 25.0]).unwrap();
        let e_dl = Array2::from_shape_vec((2, 2), vec![100.0, 0.0, 0.0, 400.0]).unwrap();
        let tau = [1.0, 0.25];
        let s2 = cfg.noise_power;

        let mut expected = f64::INFINITY;
        for k in 0..2 {
            let mut sum = 0.0;
            for n in 0..2 {
                let itf = e_dl[[0, n]] * ch.phi[n] + e_dl[[1, n]] * ch.phi[n];
                let tin = (1.0 + e_ul[[k, n]] * ch.f[[k, n]] / (itf + s2)).log2();
                let sic = (1.0 + e_ul[[k, n]] * ch.f[[k, n]] / s2).log2();
                sum += (1.0 - tau[n]) * tin + tau[n] * sic;
            }
            expected = expected.min(sum);
        }
        let got = common_uplink_throughput(&e_ul, &e_dl, &tau, &ch, &cfg).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn throughput_rejects_dimension_mismatch() {
        let cfg = NetworkConfig::tiny();
        let (_, ch) = draw_realization(&cfg, RngSeed(5));
        let e_ul = Array2::zeros((3, 2));
        let e_dl = Array2::zeros((2, 2));
        let tau = vec![0.0; 2];
        assert!(common_uplink_throughput(&e_ul, &e_dl, &tau, &ch, &cfg).is_err());
    }

    fn power() -> impl Strategy<Value = f64> {
        prop_oneof![Just(0.0), 1e-9..1e6f64]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        /// Each rate grows with its own signal power and shrinks with
        /// interference.
        #[test]
        fn rate_monotonicity(
            e1 in power(), e2 in power(),
            f in 1e-12..1e-3f64,
            i1 in power(), i2 in power(),
            s2 in 1e-9..1e-2f64,
        ) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(rate_ul_sic(lo, f, s2).unwrap() <= rate_ul_sic(hi, f, s2).unwrap());
            prop_assert!(rate_dl(lo, f, i1, s2).unwrap() <= rate_dl(hi, f, i1, s2).unwrap());
            prop_assert!(rate_bs(lo, i1, s2).unwrap() <= rate_bs(hi, i1, s2).unwrap());

            let (ilo, ihi) = if i1 <= i2 { (i1, i2) } else { (i2, i1) };
            prop_assert!(rate_ul_tin(e1, f, ilo, s2).unwrap() >= rate_ul_tin(e1, f, ihi, s2).unwrap());
            prop_assert!(rate_dl(e1, f, ilo, s2).unwrap() >= rate_dl(e1, f, ihi, s2).unwrap());
            prop_assert!(rate_bs(e1, ilo, s2).unwrap() >= rate_bs(e1, ihi, s2).unwrap());
        }

        /// With no co-channel downlink power the two uplink rates coincide.
        #[test]
        fn tin_equals_sic_without_interference(
            e in power(), f in 1e-12..1e-3f64, s2 in 1e-9..1e-2f64,
        ) {
            let tin = rate_ul_tin(e, f, 0.0, s2).unwrap();
            let sic = rate_ul_sic(e, f, s2).unwrap();
            prop_assert!((tin - sic).abs() <= 1e-12 * sic.max(1.0));
        }

        /// The decode-gate rate is non-negative and zero only for zero
        /// downlink power.
        #[test]
        fn bs_rate_sign(dl in power(), ul in power(), s2 in 1e-9..1e-2f64) {
            let r = rate_bs(dl, ul, s2).unwrap();
            prop_assert!(r >= 0.0);
            prop_assert_eq!(r == 0.0, dl == 0.0);
        }
    }
}
