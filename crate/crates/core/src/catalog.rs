//! Signal, noise-environment and constellation data model.
//!
//! Catalogs are JSON documents whose field names carry their units
//! (`center_frequency_hz`, `max_single_sat_rip_dbw`, ...). Unknown fields are
//! rejected. The reserved name [`BUILTIN_CATALOG`] resolves to the built-in
//! catalog shipped with the crate.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Reserved name of the built-in catalog.
pub const BUILTIN_CATALOG: &str = "paper-2025";

const BUILTIN_JSON: &str = include_str!("../data/paper-2025.json");

// ---------------------------------------------------------------------------
// Modulation
// ---------------------------------------------------------------------------

/// Baseband modulation of a navigation signal. All rates in Hz (chips/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulationKind {
    BpskR {
        chip_rate_hz: f64,
    },
    Qpsk {
        chip_rate_hz: f64,
    },
    BocSin {
        subcarrier_rate_hz: f64,
        chip_rate_hz: f64,
    },
    BocCos {
        subcarrier_rate_hz: f64,
        chip_rate_hz: f64,
    },
    /// Power-weighted mixture of BOC(high, low) and BOC(low, low).
    /// `power_split` is the fraction of power in the high-rate component.
    Cboc {
        high_rate_hz: f64,
        low_rate_hz: f64,
        power_split: f64,
    },
    Altboc {
        subcarrier_rate_hz: f64,
        chip_rate_hz: f64,
    },
    Efqpsk {
        chip_rate_hz: f64,
    },
}

impl ModulationKind {
    pub fn chip_rate(&self) -> f64 {
        match *self {
            ModulationKind::BpskR { chip_rate_hz }
            | ModulationKind::Qpsk { chip_rate_hz }
            | ModulationKind::BocSin { chip_rate_hz, .. }
            | ModulationKind::BocCos { chip_rate_hz, .. }
            | ModulationKind::Altboc { chip_rate_hz, .. }
            | ModulationKind::Efqpsk { chip_rate_hz } => chip_rate_hz,
            ModulationKind::Cboc { low_rate_hz, .. } => low_rate_hz,
        }
    }

    pub fn label(&self) -> String {
        let m = |x: f64| x / 1.023e6;
        match *self {
            ModulationKind::BpskR { chip_rate_hz } => format!("BPSK-R({})", m(chip_rate_hz)),
            ModulationKind::Qpsk { chip_rate_hz } => format!("QPSK({})", m(chip_rate_hz)),
            ModulationKind::BocSin {
                subcarrier_rate_hz,
                chip_rate_hz,
            } => format!("BOCsin({},{})", m(subcarrier_rate_hz), m(chip_rate_hz)),
            ModulationKind::BocCos {
                subcarrier_rate_hz,
                chip_rate_hz,
            } => format!("BOCcos({},{})", m(subcarrier_rate_hz), m(chip_rate_hz)),
            ModulationKind::Cboc {
                high_rate_hz,
                low_rate_hz,
                power_split,
            } => format!(
                "CBOC({},{},{:.4})",
                m(high_rate_hz),
                m(low_rate_hz),
                power_split
            ),
            ModulationKind::Altboc {
                subcarrier_rate_hz,
                chip_rate_hz,
            } => format!("AltBOC({},{})", m(subcarrier_rate_hz), m(chip_rate_hz)),
            ModulationKind::Efqpsk { chip_rate_hz } => format!("EFQPSK({})", m(chip_rate_hz)),
        }
    }

    fn violations(&self, prefix: &str, out: &mut Vec<Violation>) {
        let mut rate = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                out.push(Violation::new(
                    format!("{prefix}.{name}"),
                    format!("must be finite and > 0, got {v}"),
                ));
            }
        };
        match *self {
            ModulationKind::BpskR { chip_rate_hz }
            | ModulationKind::Qpsk { chip_rate_hz }
            | ModulationKind::Efqpsk { chip_rate_hz } => rate("chip_rate_hz", chip_rate_hz),
            ModulationKind::BocSin {
                subcarrier_rate_hz,
                chip_rate_hz,
            }
            | ModulationKind::BocCos {
                subcarrier_rate_hz,
                chip_rate_hz,
            }
            | ModulationKind::Altboc {
                subcarrier_rate_hz,
                chip_rate_hz,
            } => {
                rate("subcarrier_rate_hz", subcarrier_rate_hz);
                rate("chip_rate_hz", chip_rate_hz);
            }
            ModulationKind::Cboc {
                high_rate_hz,
                low_rate_hz,
                power_split,
            } => {
                rate("high_rate_hz", high_rate_hz);
                rate("low_rate_hz", low_rate_hz);
                if !(power_split > 0.0 && power_split < 1.0) {
                    out.push(Violation::new(
                        format!("{prefix}.power_split"),
                        format!("must lie in (0, 1), got {power_split}"),
                    ));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Signals
// ---------------------------------------------------------------------------

/// RF, modulation and power parameters of one RNSS signal.
///
/// Power fields are optional because victim signals are usually described only
/// by their spectrum; an interferer needs both `max_single_sat_rip_dbw` and
/// `aggregation_gain_db`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub id: String,
    pub system: String,
    pub center_frequency_hz: f64,
    pub modulation: ModulationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_single_sat_rip_dbw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation_gain_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doppler_range_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupied_bandwidth_99_5_hz: Option<f64>,
    pub receiver_ref_bandwidth_hz: f64,
    /// Carrier power C used for absolute C/N0 (dBW).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub carrier_power_dbw: Option<f64>,
}

impl SignalSpec {
    /// RIP + aggregation gain, i.e. the aggregate received power in dBW.
    pub fn aggregate_power_dbw(&self) -> Option<f64> {
        Some(self.max_single_sat_rip_dbw? + self.aggregation_gain_db?)
    }
}

/// Checks every [`SignalSpec`] invariant. An empty list means the spec is valid.
pub fn validate_spec(spec: &SignalSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    collect_spec_violations(spec, "", &mut out);
    out
}

fn collect_spec_violations(spec: &SignalSpec, prefix: &str, out: &mut Vec<Violation>) {
    let field = |name: &str| format!("{prefix}{name}");
    if spec.id.trim().is_empty() {
        out.push(Violation::new(field("id"), "must not be empty"));
    }
    if !(spec.center_frequency_hz.is_finite() && spec.center_frequency_hz > 0.0) {
        out.push(Violation::new(
            field("center_frequency_hz"),
            format!("must be finite and > 0, got {}", spec.center_frequency_hz),
        ));
    }
    if !(spec.receiver_ref_bandwidth_hz.is_finite() && spec.receiver_ref_bandwidth_hz > 0.0) {
        out.push(Violation::new(
            field("receiver_ref_bandwidth_hz"),
            format!("must be finite and > 0, got {}", spec.receiver_ref_bandwidth_hz),
        ));
    }
    spec.modulation
        .violations(&field("modulation"), out);
    let optional_nonneg = [
        ("doppler_range_hz", spec.doppler_range_hz),
        ("occupied_bandwidth_99_5_hz", spec.occupied_bandwidth_99_5_hz),
    ];
    for (name, v) in optional_nonneg {
        if let Some(v) = v {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(field(name), format!("must be finite and >= 0, got {v}")));
            }
        }
    }
    // RIP may legitimately be -inf (switched-off interferer) but never NaN/+inf.
    let powers = [
        ("max_single_sat_rip_dbw", spec.max_single_sat_rip_dbw),
        ("aggregation_gain_db", spec.aggregation_gain_db),
        ("carrier_power_dbw", spec.carrier_power_dbw),
    ];
    for (name, v) in powers {
        if let Some(v) = v {
            if v.is_nan() || v == f64::INFINITY {
                out.push(Violation::new(field(name), format!("must be a finite dB value, got {v}")));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Noise environment
// ---------------------------------------------------------------------------

/// Victim-side noise ledger. Absent densities contribute zero linear power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEnvironment {
    pub n0_dbw_hz: Option<f64>,
    pub i_ext_dbw_hz: Option<f64>,
    pub i_ref_dbw_hz: Option<f64>,
    pub i_rem_dbw_hz: Option<f64>,
    pub l_proc_db: f64,
}

impl NoiseEnvironment {
    pub fn components(&self) -> [Option<f64>; 4] {
        [
            self.n0_dbw_hz,
            self.i_ext_dbw_hz,
            self.i_ref_dbw_hz,
            self.i_rem_dbw_hz,
        ]
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let names = ["n0_dbw_hz", "i_ext_dbw_hz", "i_ref_dbw_hz", "i_rem_dbw_hz"];
        for (name, v) in names.iter().zip(self.components()) {
            if let Some(v) = v {
                if !v.is_finite() {
                    out.push(Violation::new(
                        format!("{prefix}{name}"),
                        format!("must be finite or null, got {v}"),
                    ));
                }
            }
        }
        if !self.l_proc_db.is_finite() {
            out.push(Violation::new(format!("{prefix}l_proc_db"), "must be finite"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseEntry {
    pub victim_id: String,
    pub environment: NoiseEnvironment,
}

/// Published spectral separation coefficient for one interferer/victim pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SscEntry {
    pub interferer_id: String,
    pub victim_id: String,
    pub ssc_db_hz: f64,
}

// ---------------------------------------------------------------------------
// Constellations
// ---------------------------------------------------------------------------

/// Gain versus angle, interpolated linearly in dB and clamped at the ends.
///
/// For transmit patterns the angle is off-boresight (nadir) angle, for
/// receive patterns it is elevation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaPattern {
    /// `(angle_deg, gain_dbi)` pairs, angles strictly increasing.
    pub samples: Vec<(f64, f64)>,
}

impl AntennaPattern {
    pub fn isotropic() -> Self {
        Self {
            samples: vec![(0.0, 0.0), (90.0, 0.0)],
        }
    }

    pub fn gain_dbi(&self, angle_deg: f64) -> f64 {
        let s = &self.samples;
        match s.len() {
            0 => 0.0,
            1 => s[0].1,
            _ => {
                if angle_deg <= s[0].0 {
                    return s[0].1;
                }
                if angle_deg >= s[s.len() - 1].0 {
                    return s[s.len() - 1].1;
                }
                let k = s.partition_point(|&(a, _)| a <= angle_deg);
                let (a0, g0) = s[k - 1];
                let (a1, g1) = s[k];
                g0 + (g1 - g0) * (angle_deg - a0) / (a1 - a0)
            }
        }
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.samples.is_empty() {
            out.push(Violation::new(format!("{prefix}samples"), "must not be empty"));
        }
        for (k, w) in self.samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                out.push(Violation::new(
                    format!("{prefix}samples[{}]", k + 1),
                    "angles must be strictly increasing",
                ));
            }
        }
        if self
            .samples
            .iter()
            .any(|&(a, g)| !a.is_finite() || !g.is_finite())
        {
            out.push(Violation::new(format!("{prefix}samples"), "values must be finite"));
        }
        out
    }
}

/// Circular Walker-delta shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstellationSpec {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub inclination_deg: f64,
    pub altitude_m: f64,
    /// Along-track phase step between adjacent planes.
    pub phasing_offset_deg: f64,
    pub tx_eirp_dbw: f64,
    pub tx_pattern: AntennaPattern,
}

impl ConstellationSpec {
    pub fn satellite_count(&self) -> usize {
        self.planes as usize * self.sats_per_plane as usize
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.planes < 1 {
            out.push(Violation::new(format!("{prefix}planes"), "must be >= 1"));
        }
        if self.sats_per_plane < 1 {
            out.push(Violation::new(format!("{prefix}sats_per_plane"), "must be >= 1"));
        }
        if !(self.altitude_m.is_finite() && self.altitude_m > 0.0) {
            out.push(Violation::new(format!("{prefix}altitude_m"), "must be finite and > 0"));
        }
        for (name, v) in [
            ("inclination_deg", self.inclination_deg),
            ("phasing_offset_deg", self.phasing_offset_deg),
            ("tx_eirp_dbw", self.tx_eirp_dbw),
        ] {
            if !v.is_finite() {
                out.push(Violation::new(format!("{prefix}{name}"), "must be finite"));
            }
        }
        out.extend(self.tx_pattern.violations(&format!("{prefix}tx_pattern.")));
        out
    }
}

/// Latitude/longitude grid of user points sharing one mask and receive pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserGridSpec {
    pub lat_min_deg: f64,
    pub lat_max_deg: f64,
    pub lat_step_deg: f64,
    pub lon_min_deg: f64,
    pub lon_max_deg: f64,
    pub lon_step_deg: f64,
    pub mask_angle_deg: f64,
    pub rx_pattern: AntennaPattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGridSpec {
    pub start_s: f64,
    pub stop_s: f64,
    pub step_s: f64,
}

/// Steps `[lo, hi]` inclusively; a non-positive step yields just `lo`.
pub(crate) fn inclusive_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || hi < lo {
        return vec![lo];
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

impl TimeGridSpec {
    pub fn times(&self) -> Vec<f64> {
        inclusive_range(self.start_s, self.stop_s, self.step_s)
    }
}

/// A named aggregation-gain computation: shell, user grid, time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregationScenario {
    pub name: String,
    pub constellation: ConstellationSpec,
    pub user_grid: UserGridSpec,
    pub time_grid: TimeGridSpec,
}

impl AggregationScenario {
    fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = self
            .constellation
            .violations(&format!("{prefix}constellation."));
        let g = &self.user_grid;
        if !(g.lat_min_deg >= -90.0 && g.lat_max_deg <= 90.0 && g.lat_min_deg <= g.lat_max_deg) {
            out.push(Violation::new(
                format!("{prefix}user_grid.lat_min_deg"),
                "latitudes must satisfy -90 <= min <= max <= 90",
            ));
        }
        if !(g.mask_angle_deg >= 0.0 && g.mask_angle_deg < 90.0) {
            out.push(Violation::new(
                format!("{prefix}user_grid.mask_angle_deg"),
                "must lie in [0, 90)",
            ));
        }
        out.extend(g.rx_pattern.violations(&format!("{prefix}user_grid.rx_pattern.")));
        if !(self.time_grid.start_s >= 0.0 && self.time_grid.stop_s >= self.time_grid.start_s) {
            out.push(Violation::new(
                format!("{prefix}time_grid.start_s"),
                "times must satisfy 0 <= start <= stop",
            ));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Catalog {
    pub name: String,
    pub signals: Vec<SignalSpec>,
    #[serde(default)]
    pub noise_environments: Vec<NoiseEntry>,
    #[serde(default)]
    pub ssc_table: Vec<SscEntry>,
    #[serde(default)]
    pub aggregation_scenarios: Vec<AggregationScenario>,
}

/// Normalizes a signal identifier: `"GPS L1 C/A"`, `"gps_l1ca"` and
/// `"GPS-L1CA"` all map to `"GPSL1CA"`.
pub fn canonical_id(id: &str) -> String {
    id.chars()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_uppercase())
        .collect()
}

impl Catalog {
    /// The built-in catalog with the values of the reference analysis.
    pub fn builtin() -> Self {
        Self::from_json_str(BUILTIN_JSON, BUILTIN_CATALOG).expect("built-in catalog is valid")
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let catalog: Catalog = serde_json::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        let violations = catalog.violations();
        if violations.is_empty() {
            Ok(catalog)
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeMap::new();
        for (k, s) in self.signals.iter().enumerate() {
            collect_spec_violations(s, &format!("signals[{k}]."), &mut out);
            if let Some(prev) = seen.insert(canonical_id(&s.id), k) {
                out.push(Violation::new(
                    format!("signals[{k}].id"),
                    format!("duplicates signals[{prev}].id `{}`", s.id),
                ));
            }
        }
        for (k, e) in self.noise_environments.iter().enumerate() {
            out.extend(
                e.environment
                    .violations(&format!("noise_environments[{k}].environment.")),
            );
        }
        for (k, e) in self.ssc_table.iter().enumerate() {
            if !e.ssc_db_hz.is_finite() {
                out.push(Violation::new(
                    format!("ssc_table[{k}].ssc_db_hz"),
                    "must be finite",
                ));
            }
        }
        for (k, a) in self.aggregation_scenarios.iter().enumerate() {
            out.extend(a.violations(&format!("aggregation_scenarios[{k}].")));
        }
        out
    }

    pub fn signal(&self, id: &str) -> Result<&SignalSpec> {
        let key = canonical_id(id);
        self.signals
            .iter()
            .find(|s| canonical_id(&s.id) == key)
            .ok_or_else(|| Error::UnknownSignal(id.to_string()))
    }

    pub fn noise_environment(&self, victim_id: &str) -> Result<NoiseEnvironment> {
        let key = canonical_id(victim_id);
        self.noise_environments
            .iter()
            .find(|e| canonical_id(&e.victim_id) == key)
            .map(|e| e.environment)
            .ok_or_else(|| Error::UnknownVictim(victim_id.to_string()))
    }

    /// All noise environments keyed by canonical victim id.
    pub fn noise_map(&self) -> BTreeMap<String, NoiseEnvironment> {
        self.noise_environments
            .iter()
            .map(|e| (canonical_id(&e.victim_id), e.environment))
            .collect()
    }

    pub fn fixed_ssc(&self, interferer_id: &str, victim_id: &str) -> Option<f64> {
        let (i, v) = (canonical_id(interferer_id), canonical_id(victim_id));
        self.ssc_table
            .iter()
            .find(|e| canonical_id(&e.interferer_id) == i && canonical_id(&e.victim_id) == v)
            .map(|e| e.ssc_db_hz)
    }

    /// Victims listed in the SSC table for `interferer_id`, in table order.
    pub fn tabulated_victims(&self, interferer_id: &str) -> Vec<&SignalSpec> {
        let i = canonical_id(interferer_id);
        self.ssc_table
            .iter()
            .filter(|e| canonical_id(&e.interferer_id) == i)
            .filter_map(|e| self.signal(&e.victim_id).ok())
            .collect()
    }

    pub fn aggregation_scenario(&self, name: &str) -> Result<&AggregationScenario> {
        self.aggregation_scenarios
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| Error::InvalidArgument {
                name: "scenario",
                reason: format!("no aggregation scenario named `{name}`"),
            })
    }
}

/// Loads a catalog from a JSON file, or the built-in catalog when `path` is
/// the reserved name [`BUILTIN_CATALOG`].
pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    if path.as_os_str() == BUILTIN_CATALOG {
        return Ok(Catalog::builtin());
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Catalog::from_json_str(&text, &path.display().to_string())
}

/// Looks up the noise environment of `victim_id` in a catalog file (or the
/// built-in catalog).
pub fn load_noise_environment(path: impl AsRef<Path>, victim_id: &str) -> Result<NoiseEnvironment> {
    load_catalog(path)?.noise_environment(victim_id)
}
