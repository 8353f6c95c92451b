//! Spectral separation coefficients, noise budgets and C/N0 degradation.
//!
//! All quantities are densities in dB(W/Hz) unless named otherwise. Noise
//! terms are always combined in the linear domain.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::catalog::{canonical_id, ModulationKind, NoiseEnvironment, SignalSpec, SscEntry};
use crate::error::{Error, Result};
use crate::spectrum::{
    analytic_psd, efqpsk_reference_psd, EfqpskPsdConfig, FrequencyGrid, SampledPsd, DEFAULT_GRID_HALF_SPAN_HZ,
    DEFAULT_GRID_SPACING_HZ,
};
use crate::units::{db_sum, to_db, to_linear};

/// Reported instead of `-inf` when two spectra do not overlap.
pub const SSC_FLOOR_DB_HZ: f64 = -300.0;

/// Processing loss applied when a victim has no noise environment of its own.
pub const DEFAULT_L_PROC_DB: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SscResult {
    pub value_db_hz: f64,
    pub victim_id: String,
    pub interferer_id: String,
    /// Interferer centre minus victim centre.
    pub frequency_offset_hz: f64,
    /// Victim-centred band over which the overlap was integrated.
    pub integration_band_hz: (f64, f64),
    pub grid_spacing_hz: f64,
}

/// `10 log10 ∫ G_v(f) G_i(f - offset) df` over `band` (victim-centred
/// offsets), trapezoidal on the victim grid with the shifted interferer
/// linearly interpolated and taken as zero outside its own grid.
pub fn compute_ssc(victim: &SampledPsd, interferer: &SampledPsd, freq_offset_hz: f64, band: (f64, f64)) -> Result<f64> {
    let g = &victim.grid;
    if !g.covers(band.0, band.1) {
        return Err(Error::GridCoverage {
            need_lo: band.0,
            need_hi: band.1,
            have_lo: g.start_hz,
            have_hi: g.stop_hz(),
        });
    }
    let tol = 1e-9 * g.step_hz;
    let k0 = (((band.0 - g.start_hz) / g.step_hz) - 1e-9).ceil().max(0.0) as usize;
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    for k in k0..g.len {
        let f = g.freq(k);
        if f > band.1 + tol {
            break;
        }
        let y = victim.density[k] * interferer.interp(f - freq_offset_hz);
        if let Some(p) = prev {
            sum += 0.5 * (p + y) * g.step_hz;
        }
        prev = Some(y);
    }
    let db = to_db(sum);
    Ok(if db.is_finite() && db > SSC_FLOOR_DB_HZ {
        db
    } else {
        SSC_FLOOR_DB_HZ
    })
}

/// Linear sum of every present component plus `extra`, in dB(W/Hz).
/// Returns `-inf` when nothing is present.
pub fn total_noise_density(env: &NoiseEnvironment, extra: Option<f64>) -> f64 {
    db_sum(env.components().into_iter().chain([extra]).flatten())
}

/// Equivalent noise density added by an interfering system:
/// `rip + g_agg - l_proc + ssc`.
pub fn i_alt(rip_dbw: f64, g_agg_db: f64, l_proc_db: f64, ssc_db_hz: f64) -> f64 {
    rip_dbw + g_agg_db - l_proc_db + ssc_db_hz
}

/// Carrier-to-noise density ratio in dB-Hz.
pub fn effective_cn0(carrier_dbw: f64, env: &NoiseEnvironment, added: Option<f64>) -> f64 {
    carrier_dbw - total_noise_density(env, added)
}

/// C/N0 loss in dB caused by adding `i_alt` to `pre_noise_total`; never
/// negative.
pub fn cn0_degradation(i_alt_dbw_hz: f64, pre_noise_dbw_hz: f64) -> f64 {
    10.0 * (to_linear(i_alt_dbw_hz - pre_noise_dbw_hz)).ln_1p() / std::f64::consts::LN_10
}

// ---------------------------------------------------------------------------
// Signal-pair SSC
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SscConfig {
    pub grid_step_hz: f64,
    /// Minimum half-span of the victim grid; it grows to contain the whole
    /// shifted interferer spectrum.
    pub min_half_span_hz: f64,
    pub efqpsk: EfqpskPsdConfig,
}

impl Default for SscConfig {
    fn default() -> Self {
        Self {
            grid_step_hz: DEFAULT_GRID_SPACING_HZ,
            min_half_span_hz: DEFAULT_GRID_HALF_SPAN_HZ,
            efqpsk: EfqpskPsdConfig::default(),
        }
    }
}

/// How the spectrum of each signal is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdMethod {
    /// Closed forms only; EFQPSK signals are rejected.
    Analytic,
    /// Closed forms where they exist, numeric estimates for EFQPSK.
    Numeric,
}

/// PSD of one catalog signal, normalized over its whole grid. Closed-form
/// spectra use a symmetric grid of `half_span_hz`; EFQPSK spectra span the
/// estimator's sampled band.
pub fn signal_psd(spec: &SignalSpec, method: PsdMethod, cfg: &SscConfig, half_span_hz: f64) -> Result<SampledPsd> {
    match (spec.modulation, method) {
        (ModulationKind::Efqpsk { chip_rate_hz }, PsdMethod::Numeric) => {
            efqpsk_reference_psd(chip_rate_hz, &cfg.efqpsk)
        }
        (m, _) => {
            let grid = FrequencyGrid::symmetric(half_span_hz, cfg.grid_step_hz)?;
            analytic_psd(&m, &grid, None)
        }
    }
}

fn half_extent(psd: &SampledPsd) -> f64 {
    psd.grid.start_hz.abs().max(psd.grid.stop_hz().abs())
}

fn pair_ssc_with(
    victim: &SignalSpec,
    interferer: &SignalSpec,
    interferer_psd: &SampledPsd,
    method: PsdMethod,
    cfg: &SscConfig,
) -> Result<SscResult> {
    let offset = interferer.center_frequency_hz - victim.center_frequency_hz;
    let half = cfg.min_half_span_hz.max(offset.abs() + half_extent(interferer_psd));
    let victim_psd = signal_psd(victim, method, cfg, half)?;
    let band = (victim_psd.grid.start_hz, victim_psd.grid.stop_hz());
    let value = compute_ssc(&victim_psd, interferer_psd, offset, band)?;
    Ok(SscResult {
        value_db_hz: value,
        victim_id: victim.id.clone(),
        interferer_id: interferer.id.clone(),
        frequency_offset_hz: offset,
        integration_band_hz: band,
        grid_spacing_hz: victim_psd.grid.step_hz,
    })
}

/// SSC of `interferer` into `victim` from their catalog definitions.
pub fn pair_ssc(victim: &SignalSpec, interferer: &SignalSpec, method: PsdMethod, cfg: &SscConfig) -> Result<SscResult> {
    let ipsd = signal_psd(interferer, method, cfg, cfg.min_half_span_hz)?;
    pair_ssc_with(victim, interferer, &ipsd, method, cfg)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum SscSource<'a> {
    /// Published values, looked up by (interferer, victim).
    Fixed(&'a [SscEntry]),
    Analytic(SscConfig),
    Numeric(SscConfig),
}

impl SscSource<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            SscSource::Fixed(_) => "fixed",
            SscSource::Analytic(_) => "analytic",
            SscSource::Numeric(_) => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub victim_id: String,
    pub interferer_id: String,
    pub ssc_db_hz: f64,
    pub i_alt_dbw_hz: f64,
    pub pre_noise_dbw_hz: Option<f64>,
    /// Non-negative C/N0 loss in dB.
    pub delta_cn0_db: Option<f64>,
    pub cn0_before_dbhz: Option<f64>,
    pub cn0_after_dbhz: Option<f64>,
}

pub const SIGN_CONVENTION: &str = "delta_cn0_db is a non-negative loss; printed tables show it negated";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegradationReport {
    pub interferer_id: String,
    pub ssc_source: String,
    pub rip_dbw: f64,
    pub g_agg_db: f64,
    pub sign_convention: String,
    pub rows: Vec<ReportRow>,
}

/// SSC, I_alt and (where a noise environment exists) C/N0 degradation for
/// every victim. `envs` is keyed by canonical victim id; rows come back sorted
/// by victim id.
pub fn build_report(
    victims: &[&SignalSpec],
    interferer: &SignalSpec,
    envs: &BTreeMap<String, NoiseEnvironment>,
    source: &SscSource,
) -> Result<DegradationReport> {
    let rip = interferer.max_single_sat_rip_dbw.ok_or_else(|| Error::InvalidArgument {
        name: "max_single_sat_rip_dbw",
        reason: format!("interferer `{}` has no RIP", interferer.id),
    })?;
    let g_agg = interferer.aggregation_gain_db.ok_or_else(|| Error::InvalidArgument {
        name: "aggregation_gain_db",
        reason: format!("interferer `{}` has no aggregation gain", interferer.id),
    })?;

    let computed = match source {
        SscSource::Fixed(_) => None,
        SscSource::Analytic(cfg) => Some((PsdMethod::Analytic, cfg)),
        SscSource::Numeric(cfg) => Some((PsdMethod::Numeric, cfg)),
    };
    let interferer_psd = match computed {
        Some((method, cfg)) => Some(signal_psd(interferer, method, cfg, cfg.min_half_span_hz)?),
        None => None,
    };

    let mut rows = Vec::with_capacity(victims.len());
    for victim in victims {
        let ssc = match (source, &interferer_psd, computed) {
            (SscSource::Fixed(table), _, _) => {
                let (i, v) = (canonical_id(&interferer.id), canonical_id(&victim.id));
                table
                    .iter()
                    .find(|e| canonical_id(&e.interferer_id) == i && canonical_id(&e.victim_id) == v)
                    .map(|e| e.ssc_db_hz)
                    .ok_or_else(|| Error::MissingPsd(format!("{} -> {}", interferer.id, victim.id)))?
            }
            (_, Some(psd), Some((method, cfg))) => pair_ssc_with(victim, interferer, psd, method, cfg)?.value_db_hz,
            _ => unreachable!(),
        };
        let env = envs.get(&canonical_id(&victim.id));
        let l_proc = env.map_or(DEFAULT_L_PROC_DB, |e| e.l_proc_db);
        let ia = i_alt(rip, g_agg, l_proc, ssc);
        let pre = env.map(|e| total_noise_density(e, None));
        let delta = pre.map(|p| cn0_degradation(ia, p));
        let (before, after) = match (env, victim.carrier_power_dbw) {
            (Some(e), Some(c)) => (Some(effective_cn0(c, e, None)), Some(effective_cn0(c, e, Some(ia)))),
            _ => (None, None),
        };
        rows.push(ReportRow {
            victim_id: victim.id.clone(),
            interferer_id: interferer.id.clone(),
            ssc_db_hz: ssc,
            i_alt_dbw_hz: ia,
            pre_noise_dbw_hz: pre,
            delta_cn0_db: delta,
            cn0_before_dbhz: before,
            cn0_after_dbhz: after,
        });
    }
    rows.sort_by(|a, b| a.victim_id.cmp(&b.victim_id));
    Ok(DegradationReport {
        interferer_id: interferer.id.clone(),
        ssc_source: source.name().into(),
        rip_dbw: rip,
        g_agg_db: g_agg,
        sign_convention: SIGN_CONVENTION.into(),
        rows,
    })
}
