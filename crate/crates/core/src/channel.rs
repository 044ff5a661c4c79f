//! Air-to-ground communication model: co-channel SNR, Shannon rate,
//! transmission delay, deadline feasibility, and coverage-area load.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("infeasible link: rate is zero for a {size_bits}-bit packet")]
    InfeasibleLink { size_bits: f64 },
}

/// One shared frequency channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub channel_id: u32,
    pub bandwidth_hz: f64,
    pub noise_power_w: f64,
}

/// A user-to-UAV link on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub user_id: u64,
    pub uav_id: u64,
    pub channel_id: u32,
    pub tx_power_w: f64,
    pub channel_gain: f64,
}

impl Link {
    /// Received power of this link's own signal.
    pub fn received_power_w(&self) -> f64 {
        self.tx_power_w * self.channel_gain
    }
}

/// A delivery data packet with its transmission deadline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPacket {
    pub packet_id: u64,
    pub owner: u64,
    pub size_bits: f64,
    pub deadline_s: f64,
}

/// Signal-to-noise ratio of `link` against co-channel interference:
/// `p*h / (sum of interferer p'*h' + noise)`.
///
/// `interferers` holds the other active links on the same channel; the
/// link's own term is excluded by the caller.
pub fn snr(link: &Link, interferers: &[Link], channel: &Channel) -> f64 {
    debug_assert!(channel.noise_power_w > 0.0);
    debug_assert!(interferers
        .iter()
        .all(|i| !(i.user_id == link.user_id && i.uav_id == link.uav_id)));
    let interference: f64 = interferers
        .iter()
        .filter(|i| i.channel_id == link.channel_id)
        .map(Link::received_power_w)
        .sum();
    link.received_power_w() / (interference + channel.noise_power_w)
}

/// Shannon rate `B * log2(1 + snr)` in bits/second.
pub fn achievable_rate(bandwidth_hz: f64, snr: f64) -> f64 {
    debug_assert!(bandwidth_hz > 0.0 && snr >= 0.0);
    bandwidth_hz * log2_portable(1.0 + snr)
}

/// Seconds needed to push the packet through at `rate_bps`. A zero rate
/// with a nonempty packet marks the link infeasible.
pub fn transmission_delay(packet: &DataPacket, rate_bps: f64) -> Result<f64, ChannelError> {
    debug_assert!(rate_bps >= 0.0);
    if packet.size_bits == 0.0 {
        return Ok(0.0);
    }
    if rate_bps == 0.0 {
        return Err(ChannelError::InfeasibleLink {
            size_bits: packet.size_bits,
        });
    }
    Ok(packet.size_bits / rate_bps)
}

/// A delivery is feasible when its delay does not exceed the target time
/// (boundary inclusive).
pub fn delivery_feasible(delay_s: f64, deadline_s: f64) -> bool {
    debug_assert!(delay_s >= 0.0 && deadline_s > 0.0);
    delay_s <= deadline_s
}

/// Total bits delivered within one coverage area.
pub fn coverage_load(packets: &[DataPacket]) -> f64 {
    packets.iter().map(|p| p.size_bits).sum()
}

const LN_2: f64 = core::f64::consts::LN_2;
const SQRT_2: f64 = core::f64::consts::SQRT_2;

/// Base-2 logarithm computed with pure f64 arithmetic so results are
/// bit-identical on every platform and optimization level (libm log2 can
/// differ by an ulp between C libraries). Accurate to well under 1e-12
/// relative, which downstream tests check against the std implementation.
pub fn log2_portable(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut bits = x.to_bits();
    let mut exp = ((bits >> 52) & 0x7FF) as i64 - 1023;
    if exp == -1023 {
        // Subnormal: renormalize first.
        bits = (x * (1u64 << 52) as f64).to_bits();
        exp = ((bits >> 52) & 0x7FF) as i64 - 1023 - 52;
    }
    let mantissa = f64::from_bits((bits & 0x000F_FFFF_FFFF_FFFF) | 0x3FF0_0000_0000_0000);
    // Reduce the mantissa to [sqrt(2)/2, sqrt(2)) so the atanh series
    // argument stays below 0.1716.
    let (m, e) = if mantissa >= SQRT_2 {
        (mantissa * 0.5, exp + 1)
    } else {
        (mantissa, exp)
    };
    let s = (m - 1.0) / (m + 1.0);
    let s2 = s * s;
    // ln(m) = 2 * atanh(s), odd series through s^13.
    let series = s
        * (1.0
            + s2 * (1.0 / 3.0
                + s2 * (1.0 / 5.0
                    + s2 * (1.0 / 7.0 + s2 * (1.0 / 9.0 + s2 * (1.0 / 11.0 + s2 / 13.0))))));
    e as f64 + 2.0 * series / LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn chan(noise: f64) -> Channel {
        Channel {
            channel_id: 0,
            bandwidth_hz: 1e6,
            noise_power_w: noise,
        }
    }

    fn link(user: u64, p: f64, h: f64) -> Link {
        Link {
            user_id: user,
            uav_id: 1,
            channel_id: 0,
            tx_power_w: p,
            channel_gain: h,
        }
    }

    #[test]
    fn snr_hand_values() {
        assert_eq!(snr(&link(1, 1.0, 1.0), &[], &chan(1.0)), 1.0);
        assert_eq!(
            snr(&link(1, 2.0, 0.5), &[link(2, 1.0, 0.5)], &chan(0.5)),
            1.0
        );
        assert_eq!(snr(&link(1, 0.0, 1.0), &[], &chan(1.0)), 0.0);
    }

    #[test]
    fn snr_monotonicity() {
        let mut rng = SplitMix64::stream(17, "channel-snr-monotone");
        for _ in 0..500 {
            let p = rng.range_f64(0.01, 10.0);
            let h = rng.range_f64(0.01, 1.0);
            let noise = rng.range_f64(0.001, 1.0);
            let interferers: Vec<Link> = (0..rng.below(5))
                .map(|i| link(10 + i, rng.range_f64(0.0, 5.0), rng.range_f64(0.0, 1.0)))
                .collect();
            let base = snr(&link(1, p, h), &interferers, &chan(noise));

            // Higher own power raises SNR, a stronger interferer lowers it,
            // more noise lowers it.
            assert!(snr(&link(1, p * 2.0, h), &interferers, &chan(noise)) >= base);
            let mut louder = interferers.clone();
            louder.push(link(99, 1.0, 0.5));
            assert!(snr(&link(1, p, h), &louder, &chan(noise)) <= base);
            assert!(snr(&link(1, p, h), &interferers, &chan(noise * 2.0)) <= base);
        }
    }

    #[test]
    fn achievable_rate_hand_values() {
        assert_eq!(achievable_rate(1e6, 0.0), 0.0);
        assert!((achievable_rate(1e6, 1.0) - 1e6).abs() < 1e-6);
        assert!((achievable_rate(1e6, 3.0) - 2e6).abs() < 1e-6);
    }

    #[test]
    fn rate_is_increasing_in_snr_and_linear_in_bandwidth() {
        let mut rng = SplitMix64::stream(23, "channel-rate");
        for _ in 0..500 {
            let b = rng.range_f64(1e3, 1e8);
            let z1 = rng.range_f64(0.0, 1e6);
            let z2 = z1 + rng.range_f64(1e-6, 1e3);
            assert!(achievable_rate(b, z2) > achievable_rate(b, z1));
            let doubled = achievable_rate(2.0 * b, z1);
            let twice = 2.0 * achievable_rate(b, z1);
            assert!((doubled - twice).abs() <= 1e-9 * twice.max(1.0));
        }
    }

    #[test]
    fn transmission_delay_hand_values() {
        let p = DataPacket {
            packet_id: 0,
            owner: 1,
            size_bits: 1e6,
            deadline_s: 10.0,
        };
        assert_eq!(transmission_delay(&p, 1e6).unwrap(), 1.0);
        let empty = DataPacket {
            size_bits: 0.0,
            ..p
        };
        assert_eq!(transmission_delay(&empty, 0.0).unwrap(), 0.0);
        assert!(matches!(
            transmission_delay(&p, 0.0),
            Err(ChannelError::InfeasibleLink { .. })
        ));
    }

    #[test]
    fn doubling_bandwidth_halves_delay() {
        let mut rng = SplitMix64::stream(29, "channel-delay");
        for _ in 0..200 {
            let p = DataPacket {
                packet_id: 0,
                owner: 1,
                size_bits: rng.range_f64(1.0, 1e9),
                deadline_s: 1.0,
            };
            let b = rng.range_f64(1e3, 1e8);
            let z = rng.range_f64(1e-3, 1e5);
            let d1 = transmission_delay(&p, achievable_rate(b, z)).unwrap();
            let d2 = transmission_delay(&p, achievable_rate(2.0 * b, z)).unwrap();
            assert!((d1 - 2.0 * d2).abs() <= 1e-9 * d1.max(1e-12));
        }
    }

    #[test]
    fn deadline_boundary_is_inclusive() {
        assert!(delivery_feasible(1.0, 2.0));
        assert!(!delivery_feasible(3.0, 2.0));
        assert!(delivery_feasible(2.0, 2.0));
    }

    #[test]
    fn coverage_load_sums_packet_sizes() {
        let mk = |id, bits| DataPacket {
            packet_id: id,
            owner: id,
            size_bits: bits,
            deadline_s: 1.0,
        };
        assert_eq!(coverage_load(&[mk(1, 1.0), mk(2, 2.0), mk(3, 3.0)]), 6.0);
        assert_eq!(coverage_load(&[]), 0.0);
        assert_eq!(coverage_load(&[mk(1, 7.0)]), 7.0);
    }

    #[test]
    fn coverage_load_is_additive_over_disjoint_sets() {
        let mut rng = SplitMix64::stream(31, "channel-load");
        for _ in 0..200 {
            let a: Vec<DataPacket> = (0..rng.below(10))
                .map(|i| DataPacket {
                    packet_id: i,
                    owner: i,
                    size_bits: rng.range_f64(0.0, 1e7),
                    deadline_s: 1.0,
                })
                .collect();
            let b: Vec<DataPacket> = (0..rng.below(10))
                .map(|i| DataPacket {
                    packet_id: 100 + i,
                    owner: i,
                    size_bits: rng.range_f64(0.0, 1e7),
                    deadline_s: 1.0,
                })
                .collect();
            let joined: Vec<DataPacket> = a.iter().chain(b.iter()).copied().collect();
            let lhs = coverage_load(&joined);
            let rhs = coverage_load(&a) + coverage_load(&b);
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
        }
    }

    #[test]
    fn portable_log2_matches_std() {
        let mut rng = SplitMix64::stream(37, "channel-log2");
        for _ in 0..20_000 {
            let x = match rng.below(3) {
                0 => rng.range_f64(1.0, 2.0),
                1 => rng.range_f64(1e-6, 1e6),
                _ => 1.0 + rng.range_f64(0.0, 1e9),
            };
            let got = log2_portable(x);
            let want = x.log2();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "x={x} got={got} want={want}"
            );
        }
        assert_eq!(log2_portable(1.0), 0.0);
        assert_eq!(log2_portable(2.0), 1.0);
        assert_eq!(log2_portable(4.0), 2.0);
        assert_eq!(log2_portable(0.5), -1.0);
    }
}
