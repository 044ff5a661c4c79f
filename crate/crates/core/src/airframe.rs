//! UAV physical model: registration attributes, payload-dependent speed,
//! 3-D kinematics, and flight/hover energy bookkeeping.
//!
//! All quantities are SI (meters, seconds, joules, watts). Scenario files
//! carry the original mph/km² values; conversion happens at parse time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed at the 1 kg payload endpoint (400 mph).
pub const SPEED_AT_MIN_PAYLOAD_MPS: f64 = 178.8;
/// Speed at the 15 kg payload endpoint (100 mph).
pub const SPEED_AT_MAX_PAYLOAD_MPS: f64 = 44.7;
/// Payload at the fast endpoint of the speed law.
pub const MIN_PAYLOAD_KG: f64 = 1.0;
/// Payload at the slow endpoint of the speed law.
pub const MAX_PAYLOAD_KG: f64 = 15.0;

#[derive(Debug, Error, PartialEq)]
pub enum AirframeError {
    #[error("payload {payload_kg} kg exceeds capacity {capacity_kg} kg of UAV {node_id}")]
    Overload {
        node_id: u64,
        payload_kg: f64,
        capacity_kg: f64,
    },
    #[error("energy exhausted: debit of {needed_j} J exceeds remaining {remaining_j} J")]
    EnergyExhausted { needed_j: f64, remaining_j: f64 },
    #[error("invalid UAV spec for node {node_id}: {reason}")]
    InvalidSpec { node_id: u64, reason: String },
}

/// Airframe size category recorded at registration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

impl SizeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SizeClass::Small => "small",
            SizeClass::Medium => "medium",
            SizeClass::Large => "large",
        }
    }
}

/// Registration attributes of one UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSpec {
    pub node_id: u64,
    pub size_class: SizeClass,
    pub empty_weight_kg: f64,
    pub payload_capacity_kg: f64,
    pub battery_capacity_j: f64,
    pub rated_flight_duration_s: f64,
    pub rated_travel_distance_m: f64,
}

impl UavSpec {
    /// Checks the registration invariants. A zero or negative capacity is
    /// the representable form of a missing required attribute.
    pub fn validate(&self) -> Result<(), AirframeError> {
        let fail = |reason: &str| {
            Err(AirframeError::InvalidSpec {
                node_id: self.node_id,
                reason: reason.to_string(),
            })
        };
        if !(self.payload_capacity_kg > 0.0) {
            return fail("payload capacity must be positive");
        }
        if !(self.battery_capacity_j > 0.0) {
            return fail("battery capacity must be positive");
        }
        if !(self.rated_flight_duration_s > 0.0) {
            return fail("rated flight duration must be positive");
        }
        if !(self.empty_weight_kg > 0.0) {
            return fail("empty weight must be positive");
        }
        if !(self.rated_travel_distance_m > 0.0) {
            return fail("rated travel distance must be positive");
        }
        Ok(())
    }
}

/// Position, velocity, and accumulated flight time of one UAV.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KinematicState {
    pub position_m: [f64; 3],
    pub velocity_mps: [f64; 3],
    pub flight_elapsed_s: f64,
}

/// Battery bookkeeping for one UAV.
///
/// `total_consumed_j` mirrors `capacity - remaining` so conservation can be
/// checked directly after any sequence of debits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyState {
    pub capacity_j: f64,
    pub remaining_j: f64,
    pub threshold_j: f64,
    /// Flight energy per meter traveled; one leg of distance d costs d
    /// times this value (the sortie term sigma).
    pub flight_energy_per_meter_j: f64,
    /// Hover power while transmitting (watts).
    pub hover_power_w: f64,
    /// Hover energy per second used by penalty accounting (watts).
    pub hover_unit_energy_w: f64,
    pub total_consumed_j: f64,
}

impl EnergyState {
    pub fn new(
        capacity_j: f64,
        threshold_j: f64,
        flight_energy_per_meter_j: f64,
        hover_power_w: f64,
        hover_unit_energy_w: f64,
    ) -> Self {
        Self {
            capacity_j,
            remaining_j: capacity_j,
            threshold_j,
            flight_energy_per_meter_j,
            hover_power_w,
            hover_unit_energy_w,
            total_consumed_j: 0.0,
        }
    }

    /// Debits `joules` from the battery. Fails without mutating when the
    /// debit exceeds what is left; the caller removes the UAV from the
    /// eligible set in that case.
    pub fn debit(&mut self, joules: f64) -> Result<(), AirframeError> {
        debug_assert!(joules >= 0.0);
        if joules > self.remaining_j {
            return Err(AirframeError::EnergyExhausted {
                needed_j: joules,
                remaining_j: self.remaining_j,
            });
        }
        self.remaining_j -= joules;
        self.total_consumed_j += joules;
        Ok(())
    }
}

/// Distance covered after flying at the state's velocity for its elapsed
/// flight time: `tau * ||v||`.
pub fn flying_distance(state: &KinematicState) -> f64 {
    state.flight_elapsed_s * norm3(state.velocity_mps)
}

/// Energy of one sortie: a flight term plus hover power times hover time.
pub fn sortie_energy(flight_j: f64, hover_power_w: f64, hover_time_s: f64) -> f64 {
    flight_j + hover_power_w * hover_time_s
}

/// True when the UAV holds strictly more energy than its return threshold.
pub fn can_return(energy: &EnergyState) -> bool {
    energy.remaining_j > energy.threshold_j
}

/// Cruise speed for a given payload: linear between the 400 mph at 1 kg and
/// 100 mph at 15 kg endpoints, clamped outside that range. Payload above
/// the UAV's capacity is an overload and rejects the job.
pub fn payload_speed(spec: &UavSpec, payload_kg: f64) -> Result<f64, AirframeError> {
    if payload_kg > spec.payload_capacity_kg {
        return Err(AirframeError::Overload {
            node_id: spec.node_id,
            payload_kg,
            capacity_kg: spec.payload_capacity_kg,
        });
    }
    let clamped = payload_kg.clamp(MIN_PAYLOAD_KG, MAX_PAYLOAD_KG);
    let t = (clamped - MIN_PAYLOAD_KG) / (MAX_PAYLOAD_KG - MIN_PAYLOAD_KG);
    // Convex form so the endpoint speeds are hit exactly.
    Ok((1.0 - t) * SPEED_AT_MIN_PAYLOAD_MPS + t * SPEED_AT_MAX_PAYLOAD_MPS)
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn spec(node_id: u64, capacity: f64) -> UavSpec {
        UavSpec {
            node_id,
            size_class: SizeClass::Medium,
            empty_weight_kg: 8.0,
            payload_capacity_kg: capacity,
            battery_capacity_j: 1.8e6,
            rated_flight_duration_s: 3600.0,
            rated_travel_distance_m: 3.3e5,
        }
    }

    #[test]
    fn flying_distance_hand_values() {
        let s = KinematicState {
            position_m: [0.0; 3],
            velocity_mps: [3.0, 4.0, 0.0],
            flight_elapsed_s: 10.0,
        };
        assert_eq!(flying_distance(&s), 50.0);

        let zero = KinematicState {
            velocity_mps: [0.0; 3],
            flight_elapsed_s: 7.0,
            ..Default::default()
        };
        assert_eq!(flying_distance(&zero), 0.0);

        let s2 = KinematicState {
            position_m: [0.0; 3],
            velocity_mps: [1.0, 2.0, 2.0],
            flight_elapsed_s: 2.0,
        };
        assert_eq!(flying_distance(&s2), 6.0);
    }

    #[test]
    fn flying_distance_is_homogeneous_in_velocity() {
        let mut rng = SplitMix64::stream(7, "airframe-homogeneity");
        for _ in 0..500 {
            let v = [
                rng.range_f64(-50.0, 50.0),
                rng.range_f64(-50.0, 50.0),
                rng.range_f64(-50.0, 50.0),
            ];
            let tau = rng.range_f64(0.0, 100.0);
            let c = rng.range_f64(0.1, 10.0);
            let base = KinematicState {
                position_m: [0.0; 3],
                velocity_mps: v,
                flight_elapsed_s: tau,
            };
            let scaled = KinematicState {
                velocity_mps: [c * v[0], c * v[1], c * v[2]],
                ..base
            };
            let lhs = flying_distance(&scaled);
            let rhs = c * flying_distance(&base);
            assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn sortie_energy_hand_values() {
        assert_eq!(sortie_energy(100.0, 2.0, 30.0), 160.0);
        assert_eq!(sortie_energy(0.0, 5.0, 0.0), 0.0);
        assert_eq!(sortie_energy(50.0, 0.0, 12.0), 50.0);
    }

    #[test]
    fn debit_conserves_energy() {
        let mut rng = SplitMix64::stream(11, "airframe-conservation");
        for _ in 0..200 {
            let cap = rng.range_f64(1e4, 1e6);
            let mut e = EnergyState::new(cap, 0.1 * cap, 5.0, 100.0, 100.0);
            let mut spent = 0.0;
            for _ in 0..rng.below(30) {
                let cost = sortie_energy(
                    rng.range_f64(0.0, cap / 100.0),
                    rng.range_f64(0.0, 50.0),
                    rng.range_f64(0.0, 30.0),
                );
                if e.debit(cost).is_ok() {
                    spent += cost;
                }
            }
            let consumed = e.capacity_j - e.remaining_j;
            assert!((consumed - spent).abs() <= 1e-9 * spent.max(1.0));
            assert!((e.total_consumed_j - consumed).abs() <= 1e-9 * spent.max(1.0));
        }
    }

    #[test]
    fn debit_rejects_overdraw_without_mutation() {
        let mut e = EnergyState::new(100.0, 10.0, 5.0, 100.0, 100.0);
        e.debit(60.0).unwrap();
        let before = e.clone();
        let err = e.debit(50.0).unwrap_err();
        assert!(matches!(err, AirframeError::EnergyExhausted { .. }));
        assert_eq!(e, before);
    }

    #[test]
    fn can_return_uses_strict_threshold() {
        let mut e = EnergyState::new(100.0, 5.0, 5.0, 100.0, 100.0);
        e.remaining_j = 10.0;
        assert!(can_return(&e));
        e.remaining_j = 5.0;
        assert!(!can_return(&e));
        e.remaining_j = 4.0;
        assert!(!can_return(&e));
    }

    #[test]
    fn can_return_is_monotone_in_remaining_energy() {
        let mut rng = SplitMix64::stream(3, "airframe-can-return");
        for _ in 0..500 {
            let mut e = EnergyState::new(1000.0, rng.range_f64(0.0, 1000.0), 5.0, 0.0, 0.0);
            e.remaining_j = rng.range_f64(0.0, 1000.0);
            if can_return(&e) {
                let mut higher = e.clone();
                higher.remaining_j = rng.range_f64(e.remaining_j, 1000.0);
                assert!(can_return(&higher));
            }
        }
    }

    #[test]
    fn payload_speed_endpoints_and_midpoint() {
        let s = spec(1, 15.0);
        assert_eq!(payload_speed(&s, 1.0).unwrap(), 178.8);
        assert_eq!(payload_speed(&s, 15.0).unwrap(), 44.7);
        let mid = payload_speed(&s, 8.0).unwrap();
        assert!((mid - 111.75).abs() < 1e-12);
    }

    #[test]
    fn payload_speed_clamps_outside_endpoints() {
        let s = spec(1, 15.0);
        assert_eq!(payload_speed(&s, 0.2).unwrap(), 178.8);
    }

    #[test]
    fn payload_speed_rejects_overload() {
        let s = spec(1, 15.0);
        let err = payload_speed(&s, 20.0).unwrap_err();
        assert!(matches!(err, AirframeError::Overload { .. }));
    }

    #[test]
    fn payload_speed_is_monotone_nonincreasing() {
        let s = spec(1, 100.0);
        let mut rng = SplitMix64::stream(5, "airframe-speed-monotone");
        for _ in 0..500 {
            let a = rng.range_f64(0.0, 20.0);
            let b = rng.range_f64(0.0, 20.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            assert!(payload_speed(&s, lo).unwrap() >= payload_speed(&s, hi).unwrap());
        }
    }

    #[test]
    fn spec_validation_catches_missing_fields() {
        let mut s = spec(9, 15.0);
        s.battery_capacity_j = 0.0;
        assert!(matches!(
            s.validate(),
            Err(AirframeError::InvalidSpec { node_id: 9, .. })
        ));
    }
}
