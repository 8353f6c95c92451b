//! Baseband replica of a conducted interference test.
//!
//! A victim ranging signal, an EFQPSK interferer at its aggregate power and
//! white noise are synthesized one coherent interval at a time. A genie-aided
//! prompt correlator (code phase and carrier known) feeds a
//! narrowband/wideband power-ratio C/N0 estimator. Stages of a power ramp are
//! measured independently and compared against the analytic prediction built
//! from the simulator's own spectral separation coefficient.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, ModulationKind, SignalSpec};
use crate::error::{Error, Result};
use crate::rng::{random_chips, stream, GaussianSource};
use crate::spectrum::{efqpsk_reference_psd, EfqpskPsdConfig, SampledPsd};
use crate::units::{to_db, to_linear};
use crate::waveform::{gen_prn, BasebandBuffer, EfqpskShaper, PrnConfig};

/// Noise floor applied in the reference test setup.
pub const DEFAULT_NOISE_DENSITY_DBW_HZ: f64 = -200.3;
/// Coherent intervals per narrowband/wideband power block.
pub const NWPR_BLOCK: usize = 20;
/// Estimates below this are reported as [`Cn0Estimate::BelowFloor`].
pub const CN0_FLOOR_DBHZ: f64 = 20.0;
pub const MIN_DURATION_S: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub victim: SignalSpec,
    pub victim_prn: PrnConfig,
    pub interferer: SignalSpec,
    pub victim_power_dbw: f64,
    /// `-inf` switches the interferer off.
    pub interferer_power_dbw: f64,
    pub noise_density_dbw_hz: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub coherent_time_s: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Victim, interferer and PRN taken from a catalog; the interferer runs at
    /// its aggregate (RIP + aggregation gain) power.
    pub fn from_catalog(
        catalog: &Catalog,
        victim_id: &str,
        interferer_id: &str,
        victim_prn: PrnConfig,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        let victim = catalog.signal(victim_id)?.clone();
        let interferer = catalog.signal(interferer_id)?.clone();
        let interferer_power_dbw = interferer.aggregate_power_dbw().ok_or_else(|| Error::InvalidArgument {
            name: "interferer",
            reason: format!("`{interferer_id}` has no RIP / aggregation gain"),
        })?;
        Ok(Self {
            victim_power_dbw: victim.carrier_power_dbw.unwrap_or(-158.5),
            victim,
            victim_prn,
            interferer,
            interferer_power_dbw,
            noise_density_dbw_hz: DEFAULT_NOISE_DENSITY_DBW_HZ,
            sample_rate_hz,
            duration_s: 1.0,
            coherent_time_s: 1e-3,
            seed: 1,
        })
    }

    /// GPS L5-class victim (10230-chip code) against X5 at 81.84 MHz.
    pub fn l5_vs_x5(catalog: &Catalog) -> Result<Self> {
        let mut cfg = Self::from_catalog(catalog, "GPS_L5", "X5", PrnConfig::lfsr(10230, &[1, 6, 10, 14]), 81.84e6)?;
        cfg.victim_power_dbw = -157.9;
        Ok(cfg)
    }

    /// GPS L1 C/A victim (1023-chip Gold code) against X1 at 49.104 MHz.
    pub fn l1ca_vs_x1(catalog: &Catalog) -> Result<Self> {
        Self::from_catalog(catalog, "GPS_L1CA", "X1", PrnConfig::gold(1023, 5), 49.104e6)
    }

    pub fn frequency_offset_hz(&self) -> f64 {
        self.interferer.center_frequency_hz - self.victim.center_frequency_hz
    }

    fn victim_chip_rate(&self) -> Result<f64> {
        match self.victim.modulation {
            ModulationKind::BpskR { chip_rate_hz } | ModulationKind::Qpsk { chip_rate_hz } => Ok(chip_rate_hz),
            m => Err(Error::UnsupportedModulation(format!("{} as a simulated victim", m.label()))),
        }
    }

    fn interferer_chip_rate(&self) -> Result<f64> {
        match self.interferer.modulation {
            ModulationKind::Efqpsk { chip_rate_hz } => Ok(chip_rate_hz),
            m => Err(Error::UnsupportedModulation(format!("{} as a simulated interferer", m.label()))),
        }
    }

    /// Checks the configuration and derives the sampling layout.
    pub fn layout(&self) -> Result<Layout> {
        let fs = self.sample_rate_hz;
        let widest = self
            .victim
            .receiver_ref_bandwidth_hz
            .max(self.interferer.receiver_ref_bandwidth_hz);
        if !(fs > 2.0 * widest) {
            return Err(Error::SampleRateTooLow {
                sample_rate: fs,
                required: 2.0 * widest,
            });
        }
        if !(self.duration_s >= MIN_DURATION_S) {
            return Err(Error::InvalidArgument {
                name: "duration_s",
                reason: format!("must be >= {MIN_DURATION_S} s, got {}", self.duration_s),
            });
        }
        for (name, v) in [
            ("victim_power_dbw", self.victim_power_dbw),
            ("noise_density_dbw_hz", self.noise_density_dbw_hz),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        if self.interferer_power_dbw.is_nan() || self.interferer_power_dbw == f64::INFINITY {
            return Err(Error::InvalidArgument {
                name: "interferer_power_dbw",
                reason: "must be finite or -inf".into(),
            });
        }
        let victim_rate = self.victim_chip_rate()?;
        let interferer_rate = self.interferer_chip_rate()?;
        let victim_spc = integer_ratio(fs, victim_rate, "victim chip rate")?;
        let interferer_spc = integer_ratio(fs, interferer_rate, "interferer chip rate")?;
        if interferer_spc < 8 {
            return Err(Error::SampleRateTooLow {
                sample_rate: fs,
                required: 8.0 * interferer_rate,
            });
        }
        let half_occupied = 0.5 * self.interferer.occupied_bandwidth_99_5_hz.unwrap_or(interferer_rate);
        if self.frequency_offset_hz().abs() + half_occupied >= fs / 2.0 {
            return Err(Error::SampleRateTooLow {
                sample_rate: fs,
                required: 2.0 * (self.frequency_offset_hz().abs() + half_occupied),
            });
        }
        let code_period = self.victim_prn.period() as f64 / victim_rate;
        let periods = self.coherent_time_s / code_period;
        if !(periods >= 0.999_999) || (periods - periods.round()).abs() > 1e-6 {
            return Err(Error::CoherentTime {
                coherent_time: self.coherent_time_s,
                code_period,
            });
        }
        let samples_per_epoch = (self.coherent_time_s * fs).round() as usize;
        Ok(Layout {
            victim_spc,
            interferer_spc,
            samples_per_epoch,
            victim_chips_per_epoch: samples_per_epoch / victim_spc,
            interferer_chips_per_epoch: samples_per_epoch / interferer_spc,
            n_epochs: (self.duration_s / self.coherent_time_s).floor() as usize,
        })
    }
}

fn integer_ratio(fs: f64, rate: f64, what: &str) -> Result<usize> {
    let r = fs / rate;
    if !(r >= 1.0) || (r - r.round()).abs() > 1e-9 * r {
        return Err(Error::NonCommensurate(format!(
            "sample rate {fs} Hz is not an integer multiple of the {what} {rate} Hz"
        )));
    }
    Ok(r.round() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub victim_spc: usize,
    pub interferer_spc: usize,
    pub samples_per_epoch: usize,
    pub victim_chips_per_epoch: usize,
    pub interferer_chips_per_epoch: usize,
    pub n_epochs: usize,
}

/// Which signal components to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Components {
    pub victim: bool,
    pub interferer: bool,
    pub noise: bool,
}

impl Components {
    pub const ALL: Self = Self {
        victim: true,
        interferer: true,
        noise: true,
    };
}

/// Spreading-code replica used by the correlator.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub prn: PrnConfig,
    pub chip_rate_hz: f64,
}

/// Replica samples for one coherent interval.
fn replica_samples(prn: &PrnConfig, chips_per_epoch: usize, spc: usize) -> Result<Vec<f64>> {
    let chips = gen_prn(prn, chips_per_epoch)?;
    Ok(chips
        .iter()
        .flat_map(|&c| std::iter::repeat_n(c as f64, spc))
        .collect())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derived seed for an independent sub-run (stage, Monte-Carlo replica).
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x51)))
}

/// Streaming synthesizer; epochs must be requested in order.
pub struct Synthesizer {
    layout: Layout,
    seed: u64,
    victim_amp: f64,
    interferer_amp: f64,
    noise_sigma: f64,
    offset_cycles_per_sample: f64,
    replica: Vec<f64>,
    shaper: EfqpskShaper,
    noise: GaussianSource,
    i_chips: Vec<i8>,
    q_chips: Vec<i8>,
    shaped: Vec<Complex64>,
}

/// Context chips kept on each side of an epoch's interferer chips.
const CONTEXT: usize = 2;

impl Synthesizer {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        let layout = cfg.layout()?;
        let shaper = EfqpskShaper::new(layout.interferer_spc)?;
        let fs = cfg.sample_rate_hz;
        let interferer_amp = (to_linear(cfg.interferer_power_dbw) / shaper.mean_power()).sqrt();
        Ok(Self {
            replica: replica_samples(&cfg.victim_prn, layout.victim_chips_per_epoch, layout.victim_spc)?,
            seed: cfg.seed,
            victim_amp: to_linear(cfg.victim_power_dbw).sqrt(),
            interferer_amp,
            noise_sigma: (to_linear(cfg.noise_density_dbw_hz) * fs / 2.0).sqrt(),
            offset_cycles_per_sample: cfg.frequency_offset_hz() / fs,
            shaper,
            noise: GaussianSource::new(cfg.seed, stream::NOISE),
            i_chips: vec![0; layout.interferer_chips_per_epoch + 2 * CONTEXT],
            q_chips: vec![0; layout.interferer_chips_per_epoch + 2 * CONTEXT],
            shaped: Vec::with_capacity(layout.samples_per_epoch),
            layout,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn replica(&self) -> &[f64] {
        &self.replica
    }

    /// Writes epoch `epoch` into `out` (resized to one coherent interval).
    pub fn render_epoch(&mut self, epoch: usize, parts: Components, out: &mut Vec<Complex64>) -> Result<()> {
        let n = self.layout.samples_per_epoch;
        out.clear();
        out.resize(n, Complex64::default());

        if parts.noise {
            let s = self.noise_sigma;
            for x in out.iter_mut() {
                let (a, b) = self.noise.pair();
                *x = Complex64::new(s * a, s * b);
            }
        }
        if parts.victim {
            let a = self.victim_amp;
            for (x, c) in out.iter_mut().zip(&self.replica) {
                x.re += a * c;
            }
        }
        if parts.interferer && self.interferer_amp > 0.0 {
            // keystream chip k + CONTEXT is stream chip k, so the window
            // starting at the epoch's first chip minus CONTEXT is never negative
            let nc = self.layout.interferer_chips_per_epoch;
            let first = (epoch * nc) as u64;
            random_chips(self.seed, stream::INTERFERER_I, first, &mut self.i_chips);
            random_chips(self.seed, stream::INTERFERER_Q, first, &mut self.q_chips);
            self.shaped.clear();
            self.shaper
                .render(&self.i_chips, &self.q_chips, CONTEXT..CONTEXT + nc, &mut self.shaped)?;

            let start = (epoch * n) as f64 * self.offset_cycles_per_sample;
            let mut phasor = Complex64::from_polar(self.interferer_amp, TAU * start.fract());
            let step = Complex64::from_polar(1.0, TAU * self.offset_cycles_per_sample);
            for (x, s) in out.iter_mut().zip(&self.shaped) {
                *x += s * phasor;
                phasor *= step;
            }
        }
        Ok(())
    }
}

/// Whole-duration baseband buffer of the configured scenario.
pub fn synthesize_scenario(cfg: &ScenarioConfig) -> Result<BasebandBuffer> {
    synthesize_components(cfg, Components::ALL)
}

/// As [`synthesize_scenario`] with only the selected components.
pub fn synthesize_components(cfg: &ScenarioConfig, parts: Components) -> Result<BasebandBuffer> {
    let mut synth = Synthesizer::new(cfg)?;
    let layout = *synth.layout();
    let mut samples = Vec::with_capacity(layout.n_epochs * layout.samples_per_epoch);
    let mut epoch = Vec::new();
    for e in 0..layout.n_epochs {
        synth.render_epoch(e, parts, &mut epoch)?;
        samples.extend_from_slice(&epoch);
    }
    BasebandBuffer::new(samples, cfg.sample_rate_hz, 0.0)
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cn0Estimate {
    DbHz(f64),
    BelowFloor,
}

impl Cn0Estimate {
    pub fn db_hz(self) -> Option<f64> {
        match self {
            Cn0Estimate::DbHz(v) => Some(v),
            Cn0Estimate::BelowFloor => None,
        }
    }
}

impl std::fmt::Display for Cn0Estimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cn0Estimate::DbHz(v) => write!(f, "{v:.3}"),
            Cn0Estimate::BelowFloor => f.write_str("below_floor"),
        }
    }
}

/// Prompt correlation of one coherent interval.
#[inline]
pub fn correlate(samples: &[Complex64], replica: &[f64]) -> Complex64 {
    samples.iter().zip(replica).map(|(s, c)| s * c).sum()
}

/// Narrowband/wideband power-ratio estimate from prompt correlator outputs
/// taken every `coherent_time_s`. Uses complete blocks of [`NWPR_BLOCK`]
/// outputs and the ratio of block-averaged powers.
pub fn nwpr_estimate(prompts: &[Complex64], coherent_time_s: f64) -> Result<Cn0Estimate> {
    let m = NWPR_BLOCK;
    let blocks = prompts.len() / m;
    if blocks == 0 {
        return Err(Error::InvalidArgument {
            name: "n_epochs",
            reason: format!("need at least {m} coherent intervals, got {}", prompts.len()),
        });
    }
    let (mut nbp, mut wbp) = (0.0, 0.0);
    for block in prompts.chunks_exact(m) {
        nbp += block.iter().sum::<Complex64>().norm_sqr();
        wbp += block.iter().map(|y| y.norm_sqr()).sum::<f64>();
    }
    let mu = nbp / wbp;
    let snr = (mu - 1.0) / (m as f64 - mu);
    let cn0 = to_db(snr / coherent_time_s);
    Ok(if cn0.is_finite() && cn0 >= CN0_FLOOR_DBHZ {
        Cn0Estimate::DbHz(cn0)
    } else {
        Cn0Estimate::BelowFloor
    })
}

/// C/N0 of the signal in `buf` whose code is `replica`, aligned with the
/// buffer's first sample, over `n_epochs` coherent intervals.
pub fn estimate_cn0(buf: &BasebandBuffer, replica: &Replica, coherent_time_s: f64, n_epochs: usize) -> Result<Cn0Estimate> {
    let code_period = replica.prn.period() as f64 / replica.chip_rate_hz;
    let periods = coherent_time_s / code_period;
    if !(periods >= 0.999_999) || (periods - periods.round()).abs() > 1e-6 {
        return Err(Error::CoherentTime {
            coherent_time: coherent_time_s,
            code_period,
        });
    }
    let spc = integer_ratio(buf.sample_rate, replica.chip_rate_hz, "replica chip rate")?;
    let n = (coherent_time_s * buf.sample_rate).round() as usize;
    if n_epochs * n > buf.len() {
        return Err(Error::InvalidArgument {
            name: "n_epochs",
            reason: format!("{n_epochs} intervals of {n} samples exceed the buffer ({})", buf.len()),
        });
    }
    let code = replica_samples(&replica.prn, n / spc, spc)?;
    let prompts: Vec<Complex64> = buf.samples[..n_epochs * n]
        .chunks_exact(n)
        .map(|s| correlate(s, &code))
        .collect();
    nwpr_estimate(&prompts, coherent_time_s)
}

/// Streams `n_epochs` intervals of a scenario through the correlator.
pub fn measure_cn0(cfg: &ScenarioConfig, n_epochs: usize) -> Result<Cn0Estimate> {
    let mut synth = Synthesizer::new(cfg)?;
    let mut buf = Vec::new();
    let mut prompts = Vec::with_capacity(n_epochs);
    for e in 0..n_epochs {
        synth.render_epoch(e, Components::ALL, &mut buf)?;
        prompts.push(correlate(&buf, synth.replica()));
    }
    nwpr_estimate(&prompts, cfg.coherent_time_s)
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

/// Spectral separation coefficient seen by the simulated correlator: the
/// sampled victim code spectrum against the sampled, frequency-shifted
/// interferer spectrum, both periodic in the sample rate.
pub fn scenario_ssc(cfg: &ScenarioConfig) -> Result<f64> {
    let layout = cfg.layout()?;
    let interferer = efqpsk_reference_psd(
        cfg.interferer_chip_rate()?,
        &EfqpskPsdConfig {
            samples_per_chip: layout.interferer_spc,
            segment_length: 16384,
            segments: 64,
            seed: sub_seed(cfg.seed, 0xfeed),
        },
    )?;
    let fs = cfg.sample_rate_hz;
    let l = layout.victim_spc as f64;
    // PSD of a sampled rectangular chip of `l` samples, unit power per period
    let victim = |f: f64| {
        let x = std::f64::consts::PI * f / fs;
        if x.abs() < 1e-12 {
            l / fs
        } else {
            ((l * x).sin() / x.sin()).powi(2) / (l * fs)
        }
    };
    Ok(circular_overlap(&interferer, victim, cfg.frequency_offset_hz()))
}

/// `10 log10 Σ G_v(f) G_i(f - offset) df` over one period `[-fs/2, fs/2)`
/// of the interferer grid, wrapping the shifted interferer.
fn circular_overlap(interferer: &SampledPsd, victim: impl Fn(f64) -> f64, offset: f64) -> f64 {
    let g = &interferer.grid;
    let shift_bins = offset / g.step_hz;
    let mut sum = 0.0;
    let n = g.len as f64;
    for k in 0..g.len {
        // victim-frame frequency of interferer bin k after the shift
        let pos = (k as f64 + shift_bins).rem_euclid(n);
        let f = g.start_hz + pos * g.step_hz;
        sum += victim(f) * interferer.density[k];
    }
    to_db(sum * g.step_hz)
}

/// Analytic C/N0 with an interferer of `interferer_power_dbw` coupling
/// through `ssc_db_hz`.
pub fn predicted_cn0(victim_power_dbw: f64, noise_density_dbw_hz: f64, interferer_power_dbw: f64, ssc_db_hz: f64) -> f64 {
    victim_power_dbw - to_db(to_linear(noise_density_dbw_hz) + to_linear(interferer_power_dbw + ssc_db_hz))
}

// ---------------------------------------------------------------------------
// Ramp profiles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampStage {
    pub label: String,
    /// Interferer power relative to the scenario's FOC power; `None` is a
    /// baseline stage with the interferer off.
    pub offset_db: Option<f64>,
    pub dwell_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampProfile {
    pub stages: Vec<RampStage>,
}

/// Placeholder CADL and IOV levels below FOC; not published values.
pub const CADL_OFFSET_DB: f64 = -10.0;
pub const IOV_OFFSET_DB: f64 = -3.0;
pub const DEFAULT_DWELL_S: f64 = 2.0;

impl RampProfile {
    /// Baseline, CADL, IOV, FOC, FOC+5/+10/+20/+30 dB, baseline.
    pub fn default_ladder(dwell_s: f64) -> Self {
        let stage = |label: &str, offset_db| RampStage {
            label: label.into(),
            offset_db,
            dwell_s,
        };
        Self {
            stages: vec![
                stage("baseline", None),
                stage("CADL", Some(CADL_OFFSET_DB)),
                stage("IOV", Some(IOV_OFFSET_DB)),
                stage("FOC", Some(0.0)),
                stage("FOC+5", Some(5.0)),
                stage("FOC+10", Some(10.0)),
                stage("FOC+20", Some(20.0)),
                stage("FOC+30", Some(30.0)),
                stage("baseline-after", None),
            ],
        }
    }

    pub fn validate(&self, coherent_time_s: f64) -> Result<()> {
        let s = &self.stages;
        if s.len() < 2 {
            return Err(Error::InvalidProfile("needs at least a baseline before and after".into()));
        }
        if s[0].offset_db.is_some() || s[s.len() - 1].offset_db.is_some() {
            return Err(Error::InvalidProfile(
                "first and last stages must be baselines (offset_db = null)".into(),
            ));
        }
        for st in s {
            if !(st.dwell_s >= NWPR_BLOCK as f64 * coherent_time_s) {
                return Err(Error::InvalidProfile(format!(
                    "stage `{}` dwell {} s is shorter than one estimator block",
                    st.label, st.dwell_s
                )));
            }
            if let Some(o) = st.offset_db {
                if !o.is_finite() {
                    return Err(Error::InvalidProfile(format!("stage `{}` offset is not finite", st.label)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RampRow {
    pub stage: String,
    pub t_start_s: f64,
    pub interferer_power_dbw: f64,
    /// `None` when the estimate fell below the floor.
    pub measured_cn0_dbhz: Option<f64>,
    pub predicted_cn0_dbhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RampResult {
    pub ssc_db_hz: f64,
    pub rows: Vec<RampRow>,
    /// Last baseline minus first baseline, dB.
    pub hysteresis_db: Option<f64>,
}

impl RampResult {
    /// Measured and predicted C/N0 loss of each stage relative to the first
    /// baseline.
    pub fn degradations(&self) -> Vec<(Option<f64>, f64)> {
        let base_m = self.rows[0].measured_cn0_dbhz;
        let base_p = self.rows[0].predicted_cn0_dbhz;
        self.rows
            .iter()
            .map(|r| {
                let m = match (base_m, r.measured_cn0_dbhz) {
                    (Some(b), Some(x)) => Some(b - x),
                    _ => None,
                };
                (m, base_p - r.predicted_cn0_dbhz)
            })
            .collect()
    }
}

/// Measures every stage independently (own seed) and pairs it with the
/// analytic prediction.
pub fn run_ramp_profile(cfg: &ScenarioConfig, profile: &RampProfile) -> Result<RampResult> {
    profile.validate(cfg.coherent_time_s)?;
    cfg.layout()?;
    let ssc = scenario_ssc(cfg)?;
    run_ramp_with_ssc(cfg, profile, ssc)
}

/// As [`run_ramp_profile`] with a precomputed coupling coefficient.
pub fn run_ramp_with_ssc(cfg: &ScenarioConfig, profile: &RampProfile, ssc_db_hz: f64) -> Result<RampResult> {
    profile.validate(cfg.coherent_time_s)?;
    let mut starts = Vec::with_capacity(profile.stages.len());
    let mut t = 0.0;
    for st in &profile.stages {
        // keep stage times free of accumulated rounding noise
        starts.push((t * 1e9_f64).round() / 1e9);
        t += st.dwell_s;
    }
    let rows = profile
        .stages
        .par_iter()
        .enumerate()
        .map(|(k, st)| {
            let power = st.offset_db.map_or(f64::NEG_INFINITY, |o| cfg.interferer_power_dbw + o);
            let stage_cfg = ScenarioConfig {
                interferer_power_dbw: power,
                duration_s: st.dwell_s.max(MIN_DURATION_S),
                seed: sub_seed(cfg.seed, k as u64),
                ..cfg.clone()
            };
            let n_epochs = (st.dwell_s / cfg.coherent_time_s).floor() as usize;
            let measured = measure_cn0(&stage_cfg, n_epochs)?;
            Ok(RampRow {
                stage: st.label.clone(),
                t_start_s: starts[k],
                interferer_power_dbw: power,
                measured_cn0_dbhz: measured.db_hz(),
                predicted_cn0_dbhz: predicted_cn0(cfg.victim_power_dbw, cfg.noise_density_dbw_hz, power, ssc_db_hz),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let hysteresis_db = match (rows[0].measured_cn0_dbhz, rows[rows.len() - 1].measured_cn0_dbhz) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    Ok(RampResult {
        ssc_db_hz,
        rows,
        hysteresis_db,
    })
}
