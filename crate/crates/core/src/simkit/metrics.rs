//! Per-round metrics, CSV emission, and the run summary.
//!
//! CSV contract: header row then records, comma separated, floats printed
//! with 6 significant digits, UTF-8, LF line endings. Emission is
//! deterministic: the same rows always produce the same bytes.

use crate::consensus::EngineKind;
use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;

/// One row type that knows its CSV schema.
pub trait CsvRow {
    fn header() -> &'static str;
    fn record(&self) -> String;
}

/// Formats a float with 6 significant digits, trimming trailing zeros.
/// The exponent is derived from the shortest-roundtrip formatter rather
/// than a libm log, so output bytes are platform-independent.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{v:e}");
    let exp: i32 = sci
        .split('e')
        .nth(1)
        .expect("formatter always emits an exponent")
        .parse()
        .expect("exponent is an integer");
    if !(-5..=5).contains(&exp) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - exp).max(0) as usize;
    let fixed = format!("{v:.decimals$}");
    if fixed.contains('.') {
        fixed
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        fixed
    }
}

/// Renders header plus records with LF endings.
pub fn rows_to_csv<R: CsvRow>(rows: &[R]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(R::header());
    out.push('\n');
    for row in rows {
        out.push_str(&row.record());
        out.push('\n');
    }
    out
}

/// Writes the rows to `path`.
pub fn emit_csv<R: CsvRow>(rows: &[R], path: &Path) -> io::Result<()> {
    std::fs::write(path, rows_to_csv(rows))
}

/// Snapshot of one simulation round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub round: u64,
    pub sim_time_s: f64,
    pub engine: EngineKind,
    pub consensus_energy_j: f64,
    /// Flight, hover, and consensus energy accumulated so far.
    pub cumulative_energy_j: f64,
    pub delivered: u64,
    pub failed: u64,
    pub queued: u64,
    pub mean_edt_s: f64,
    pub mean_adt_s: f64,
    pub success_rate: f64,
    pub active_uavs: u32,
    /// Short digest of the per-UAV reputation snapshot this round.
    pub reputation_ref: String,
}

impl CsvRow for MetricsRow {
    fn header() -> &'static str {
        "round,sim_time_s,engine,consensus_energy_j,cumulative_energy_j,delivered,failed,queued,mean_edt_s,mean_adt_s,success_rate,active_uavs,reputation_ref"
    }

    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.round,
            fmt_f64(self.sim_time_s),
            self.engine.as_str(),
            fmt_f64(self.consensus_energy_j),
            fmt_f64(self.cumulative_energy_j),
            self.delivered,
            self.failed,
            self.queued,
            fmt_f64(self.mean_edt_s),
            fmt_f64(self.mean_adt_s),
            fmt_f64(self.success_rate),
            self.active_uavs,
            self.reputation_ref,
        )
    }
}

/// Per-UAV line of the run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavSummary {
    pub uav_id: u64,
    pub reputation: f64,
    pub certificate: bool,
    pub remaining_j: f64,
    pub delivered: u64,
}

/// End-of-run totals written as JSON next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub engine: String,
    pub seed: u64,
    pub rounds: u64,
    pub blocks: u64,
    pub delivered: u64,
    pub failed: u64,
    pub success_rate: f64,
    /// Fraction of requests confirmed on-chain within their deadline.
    pub deadline_satisfaction: f64,
    pub flight_energy_j: f64,
    pub consensus_energy_j: f64,
    pub total_energy_j: f64,
    pub chain_digest: String,
    pub per_uav: Vec<UavSummary>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Pair(f64, u64);
    impl CsvRow for Pair {
        fn header() -> &'static str {
            "value,count"
        }
        fn record(&self) -> String {
            format!("{},{}", fmt_f64(self.0), self.1)
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(123.456789), "123.457");
        assert_eq!(fmt_f64(-0.001234567), "-0.00123457");
        assert_eq!(fmt_f64(1234567.0), "1.23457e6");
        assert_eq!(fmt_f64(1e-7), "1.00000e-7");
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn empty_rows_emit_header_only() {
        let csv = rows_to_csv::<Pair>(&[]);
        assert_eq!(csv, "value,count\n");
    }

    #[test]
    fn three_rows_make_four_lines() {
        let rows = vec![Pair(1.0, 1), Pair(2.5, 2), Pair(3.25, 3)];
        let csv = rows_to_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn reemission_is_byte_identical() {
        let rows = vec![Pair(0.1 + 0.2, 7)];
        assert_eq!(rows_to_csv(&rows), rows_to_csv(&rows));
    }
}
