//! Wireless link abstraction: gains, achievable rate, per-link time and
//! energy, and system totals. All arithmetic is in linear SI units; dB and
//! dBm conversions happen once, at configuration load.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Radio-level constants shared by every link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConstants {
    /// Noise power spectral density, W/Hz.
    pub noise_psd_n0: f64,
    /// Co-channel interference power, W.
    pub interference_i: f64,
    /// System bandwidth cap, Hz.
    pub bandwidth_cap_bmax: f64,
    /// Per-user transmit power cap, W.
    pub power_cap_pmax: f64,
    /// Log-normal shadow fading standard deviation, dB.
    pub shadow_fading_db_sigma: f64,
}

impl RadioConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_psd_n0 > 0.0) {
            return Err(invalid("noise_psd_n0", "must be positive"));
        }
        if self.interference_i < 0.0 {
            return Err(invalid("interference_i", "must be >= 0"));
        }
        if !(self.bandwidth_cap_bmax > 0.0) {
            return Err(invalid("bandwidth_cap_bmax", "must be positive"));
        }
        if !(self.power_cap_pmax > 0.0) {
            return Err(invalid("power_cap_pmax", "must be positive"));
        }
        if self.shadow_fading_db_sigma < 0.0 {
            return Err(invalid("shadow_fading_db_sigma", "must be >= 0"));
        }
        Ok(())
    }
}

/// How distance and fading map to a channel power gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainModel {
    /// `h = r * d^-2`, distance in km.
    Simple,
    /// Urban-macro path loss `128.1 + 37.6 log10(d)` dB plus log-normal
    /// shadowing, distance in km.
    Empirical,
}

/// Per-user channel snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserChannelState {
    pub distance_d_km: f64,
    /// Squared-envelope fading power, unit mean.
    pub rayleigh_r: f64,
    pub shadow_db: f64,
    pub gain_h: f64,
}

impl UserChannelState {
    pub fn new(distance_d_km: f64, rayleigh_r: f64, shadow_db: f64, mode: GainModel) -> Result<Self> {
        Ok(Self {
            distance_d_km,
            rayleigh_r,
            shadow_db,
            gain_h: channel_gain(distance_d_km, rayleigh_r, shadow_db, mode)?,
        })
    }
}

/// One user's slice of the allocation decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAllocation {
    /// 1 if the user transmits this round.
    pub selected_beta: bool,
    /// Transmit power, W.
    pub power_p: f64,
    /// Allocated bandwidth, Hz.
    pub bandwidth_b: f64,
    /// Compression ratio in (0, 1].
    pub compression_o: f64,
    /// Uncompressed payload, bits.
    pub payload_z: f64,
}

/// Channel power gain for the given model.
pub fn channel_gain(distance_km: f64, rayleigh_sample: f64, shadow_db: f64, mode: GainModel) -> Result<f64> {
    if !(distance_km > 0.0 && distance_km.is_finite()) {
        return Err(invalid("distance_km", format!("must be positive, got {distance_km}")));
    }
    if rayleigh_sample < 0.0 || !rayleigh_sample.is_finite() {
        return Err(invalid("rayleigh_sample", "must be finite and >= 0"));
    }
    Ok(match mode {
        GainModel::Simple => rayleigh_sample / (distance_km * distance_km),
        GainModel::Empirical => {
            let path_loss_db = 128.1 + 37.6 * distance_km.log10() + shadow_db;
            rayleigh_sample * 10f64.powf(-path_loss_db / 10.0)
        }
    })
}

/// Shannon rate of one link, bits/s:
/// `B * log2(1 + h * P / (I + B * N0))`.
///
/// `B = 0` carries nothing and short-circuits to 0 rather than evaluating
/// `0 * log(inf)`.
pub fn achievable_rate(bandwidth_b: f64, power_p: f64, gain_h: f64, constants: &RadioConstants) -> f64 {
    if bandwidth_b <= 0.0 || power_p <= 0.0 || gain_h <= 0.0 {
        return 0.0;
    }
    let noise = constants.interference_i + bandwidth_b * constants.noise_psd_n0;
    bandwidth_b * (1.0 + gain_h * power_p / noise).log2()
}

/// Time to deliver the compressed payload, seconds. Unselected users take
/// zero time; a selected user with zero rate cannot finish.
pub fn transmission_time(alloc: &LinkAllocation, rate_bps: f64) -> Result<f64> {
    if !alloc.selected_beta {
        return Ok(0.0);
    }
    if rate_bps <= 0.0 {
        return Err(Error::InfeasibleLink { user: usize::MAX });
    }
    Ok(alloc.compression_o * alloc.payload_z / rate_bps)
}

/// Energy spent delivering the compressed payload, joules.
pub fn transmission_energy(alloc: &LinkAllocation, rate_bps: f64) -> Result<f64> {
    Ok(alloc.power_p * transmission_time(alloc, rate_bps)?)
}

/// Total system energy across users, joules.
pub fn total_energy(allocations: &[LinkAllocation], rates_bps: &[f64]) -> Result<f64> {
    if allocations.len() != rates_bps.len() {
        return Err(Error::ShapeMismatch {
            context: "total_energy",
            expected: allocations.len(),
            got: rates_bps.len(),
        });
    }
    let mut sum = 0.0;
    for (user, (alloc, &rate)) in allocations.iter().zip(rates_bps).enumerate() {
        sum += transmission_energy(alloc, rate).map_err(|e| match e {
            Error::InfeasibleLink { .. } => Error::InfeasibleLink { user },
            other => other,
        })?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constants() -> RadioConstants {
        RadioConstants {
            noise_psd_n0: 10f64.powf((-174.0 - 30.0) / 10.0),
            interference_i: 0.0,
            bandwidth_cap_bmax: 10.0e6,
            power_cap_pmax: 0.01,
            shadow_fading_db_sigma: 8.0,
        }
    }

    fn alloc(selected: bool, p: f64, o: f64, z: f64) -> LinkAllocation {
        LinkAllocation {
            selected_beta: selected,
            power_p: p,
            bandwidth_b: 1.0e6,
            compression_o: o,
            payload_z: z,
        }
    }

    #[test]
    fn gain_simple() {
        assert_eq!(channel_gain(1.0, 1.0, 0.0, GainModel::Simple).unwrap(), 1.0);
        assert_eq!(channel_gain(0.5, 2.0, 0.0, GainModel::Simple).unwrap(), 8.0);
        assert!(channel_gain(0.0, 1.0, 0.0, GainModel::Simple).is_err());
        assert!(channel_gain(-1.0, 1.0, 0.0, GainModel::Empirical).is_err());
    }

    #[test]
    fn gain_empirical() {
        let g = channel_gain(1.0, 1.0, 0.0, GainModel::Empirical).unwrap();
        assert!((g - 10f64.powf(-12.81)).abs() < 1e-18);
        assert!((g - 1.549e-13).abs() / 1.549e-13 < 1e-3);
    }

    #[test]
    fn gain_empirical_below_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let d = 0.01 + rng.gen::<f64>();
            let r = -rng.gen::<f64>().max(1e-12).ln(); // exp(1) sample
            let shadow = 8.0 * (rng.gen::<f64>() - 0.5) * 6.0; // +-24 dB
            let g = channel_gain(d, r, shadow, GainModel::Empirical).unwrap();
            assert!(g >= 0.0 && g < 1.0, "d={d} r={r} shadow={shadow} g={g}");
        }
    }

    #[test]
    fn rate_reference_points() {
        // Construct SNR term = 1 => rate = B * log2(2) = B.
        let c = RadioConstants { noise_psd_n0: 1.0, interference_i: 0.0, ..constants() };
        assert!((achievable_rate(1.0, 1.0, 1.0, &c) - 1.0).abs() < 1e-12);
        // SNR term = 3 => log2(4) = 2 bits/s/Hz.
        let c = RadioConstants { noise_psd_n0: 1e-6, interference_i: 0.0, ..constants() };
        let r = achievable_rate(1.0e6, 3.0, 1.0, &c);
        assert!((r - 2.0e6).abs() < 1e-6);
        // No power, no rate; no bandwidth, no rate.
        assert_eq!(achievable_rate(1.0e6, 0.0, 1.0, &c), 0.0);
        assert_eq!(achievable_rate(0.0, 1.0, 1.0, &c), 0.0);
    }

    #[test]
    fn rate_monotone_in_power_and_gain() {
        let c = constants();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let b = 1e4 + rng.gen::<f64>() * 1e7;
            let p = 1e-5 + rng.gen::<f64>() * 0.01;
            let h = 1e-14 * (1.0 + rng.gen::<f64>() * 1e3);
            let base = achievable_rate(b, p, h, &c);
            assert!(achievable_rate(b, p * 1.5, h, &c) > base);
            assert!(achievable_rate(b, p, h * 1.5, &c) > base);
        }
    }

    #[test]
    fn time_and_energy_examples() {
        let a = alloc(false, 0.5, 0.3, 24528.0);
        assert_eq!(transmission_time(&a, 1.0e6).unwrap(), 0.0);
        assert_eq!(transmission_energy(&a, 0.0).unwrap(), 0.0);

        let a = alloc(true, 0.1, 0.5, 24528.0);
        let t = transmission_time(&a, 1.0e6).unwrap();
        assert!((t - 0.012264).abs() < 1e-12);
        let e = transmission_energy(&a, 1.0e6).unwrap();
        assert!((e - 1.2264e-3).abs() < 1e-12);

        let z0 = 4096.0;
        let a = alloc(true, 1.0, 1.0, z0);
        assert!((transmission_time(&a, z0).unwrap() - 1.0).abs() < 1e-15);
        assert!((transmission_energy(&a, z0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn selected_with_zero_rate_is_infeasible() {
        let a = alloc(true, 0.1, 0.5, 24528.0);
        assert!(matches!(transmission_time(&a, 0.0), Err(Error::InfeasibleLink { .. })));
    }

    #[test]
    fn energy_is_power_times_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let a = alloc(true, rng.gen::<f64>() * 0.01, rng.gen::<f64>().max(1e-3), 24528.0);
            let rate = 1e3 + rng.gen::<f64>() * 1e7;
            let t = transmission_time(&a, rate).unwrap();
            let e = transmission_energy(&a, rate).unwrap();
            assert!((e - a.power_p * t).abs() <= 1e-12 * e.abs().max(1e-300));
        }
    }

    #[test]
    fn more_payload_fraction_costs_more() {
        let rate = 2.0e6;
        let lo = alloc(true, 0.01, 0.2, 24528.0);
        let hi = alloc(true, 0.01, 0.6, 24528.0);
        assert!(transmission_time(&hi, rate).unwrap() > transmission_time(&lo, rate).unwrap());
        assert!(transmission_energy(&hi, rate).unwrap() > transmission_energy(&lo, rate).unwrap());
    }

    #[test]
    fn total_energy_sums_users() {
        let allocs = vec![
            alloc(true, 0.01, 0.5, 24528.0),
            alloc(false, 0.01, 0.5, 24528.0),
            alloc(true, 0.002, 1.0, 24528.0),
        ];
        let rates = vec![1.0e6, 0.0, 5.0e5];
        let total = total_energy(&allocs, &rates).unwrap();
        let expected: f64 = allocs
            .iter()
            .zip(&rates)
            .map(|(a, &r)| if a.selected_beta { a.power_p * a.compression_o * a.payload_z / r } else { 0.0 })
            .sum();
        assert!((total - expected).abs() < 1e-15);

        assert!(total_energy(&allocs, &rates[..2]).is_err());
        assert_eq!(total_energy(&[], &[]).unwrap(), 0.0);
    }

    #[test]
    fn total_energy_reports_offending_user() {
        let allocs = vec![alloc(false, 0.01, 0.5, 1.0), alloc(true, 0.01, 0.5, 1.0)];
        match total_energy(&allocs, &[0.0, 0.0]) {
            Err(Error::InfeasibleLink { user }) => assert_eq!(user, 1),
            other => panic!("expected infeasible link, got {other:?}"),
        }
    }
}
