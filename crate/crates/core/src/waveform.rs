//! PRN chip streams and baseband I/Q waveforms.
//!
//! Chips are `i8` values in {+1, -1} everywhere; data modulation is chipwise
//! multiplication, never XOR on bits.
//!
//! EFQPSK follows the enhanced cross-correlated (XPSK) construction: each rail
//! is built from half-symbol waveforms centred on that rail's potential
//! transition instants, the Q rail is offset by half a chip, and the shape of
//! each half is selected by whether the *other* rail transitions at that
//! half's outer edge. With `A = 1/sqrt(2)` and `tau` in chips, `|tau| <= 1/2`:
//!
//! | own rail       | other rail transitions at edge | half waveform                      |
//! |----------------|--------------------------------|------------------------------------|
//! | no transition  | no                             | `A`                                |
//! | no transition  | yes                            | `1 - (1 - A) cos^2(pi tau)`        |
//! | transition     | no                             | `sin(pi tau) -/+ (1 - A) sin^2(pi tau)` (sign: `+` left, `-` right) |
//! | transition     | yes                            | `sin(pi tau)`                      |
//!
//! Adjacent halves meet with matching value and slope, so the waveform needs
//! no filtering. The envelope ripple is about 0.19 dB.

use std::io::Write;
use std::ops::Range;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Chip = i8;

// ---------------------------------------------------------------------------
// PRN generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PrnGenerator {
    /// Fibonacci LFSR; taps are 1-based stage numbers, the highest tap sets
    /// the register length. Register starts all ones; output is the last stage.
    Lfsr { taps: Vec<u32> },
    /// Chipwise product of two LFSR sequences, the second delayed by `delay`.
    Gold {
        taps_a: Vec<u32>,
        taps_b: Vec<u32>,
        delay: u32,
    },
    /// Explicit ±1 chip table.
    Table { chips: Vec<Chip> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrnConfig {
    /// Primary code length in chips.
    pub length: usize,
    pub generator: PrnGenerator,
    /// Optional secondary code, one overlay chip per primary code epoch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<Vec<Chip>>,
}

/// GPS C/A style preferred pair: `1 + x^3 + x^10` and
/// `1 + x^2 + x^3 + x^6 + x^8 + x^9 + x^10`.
pub const G1_TAPS: [u32; 2] = [3, 10];
pub const G2_TAPS: [u32; 6] = [2, 3, 6, 8, 9, 10];
/// Primitive degree-14 polynomial used for the 10230-chip placeholder.
pub const L14_TAPS: [u32; 4] = [1, 3, 5, 14];

impl PrnConfig {
    pub fn lfsr(length: usize, taps: &[u32]) -> Self {
        Self {
            length,
            generator: PrnGenerator::Lfsr {
                taps: taps.to_vec(),
            },
            overlay: None,
        }
    }

    pub fn gold(length: usize, delay: u32) -> Self {
        Self {
            length,
            generator: PrnGenerator::Gold {
                taps_a: G1_TAPS.to_vec(),
                taps_b: G2_TAPS.to_vec(),
                delay,
            },
            overlay: None,
        }
    }

    pub fn table(chips: Vec<Chip>) -> Self {
        Self {
            length: chips.len(),
            generator: PrnGenerator::Table { chips },
            overlay: None,
        }
    }

    /// 1023-chip Gold code standing in for the (unpublished) X1 codes.
    pub fn placeholder_x1(delay: u32) -> Self {
        Self::gold(1023, delay)
    }

    /// 10230-chip truncated m-sequence standing in for the X5 codes.
    pub fn placeholder_x5() -> Self {
        Self::lfsr(10230, &L14_TAPS)
    }

    /// Composite period in chips, including the overlay.
    pub fn period(&self) -> usize {
        self.length * self.overlay.as_ref().map_or(1, Vec::len).max(1)
    }
}

fn check_taps(taps: &[u32]) -> Result<u32> {
    if taps.is_empty() {
        return Err(Error::InvalidTaps("no taps given".into()));
    }
    let mut sorted = taps.to_vec();
    sorted.sort_unstable();
    if sorted[0] == 0 {
        return Err(Error::InvalidTaps("taps are 1-based; 0 is not a stage".into()));
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidTaps(format!("duplicate tap in {taps:?}")));
    }
    let degree = *sorted.last().unwrap();
    if degree > 63 {
        return Err(Error::InvalidTaps(format!("register length {degree} exceeds 63")));
    }
    if taps.len() < 2 {
        return Err(Error::InvalidTaps(
            "a single tap gives a constant sequence".into(),
        ));
    }
    Ok(degree)
}

/// Raw 0/1 LFSR output, `n` bits.
fn lfsr_bits(taps: &[u32], n: usize) -> Result<Vec<u8>> {
    let degree = check_taps(taps)?;
    let mask: u64 = taps.iter().fold(0, |m, &t| m | 1 << (t - 1));
    let mut state: u64 = (1u64 << degree) - 1;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(((state >> (degree - 1)) & 1) as u8);
        let fb = (state & mask).count_ones() as u64 & 1;
        state = ((state << 1) | fb) & ((1u64 << degree) - 1);
    }
    Ok(out)
}

#[inline]
fn bit_to_chip(b: u8) -> Chip {
    if b == 0 {
        1
    } else {
        -1
    }
}

fn primary_code(config: &PrnConfig) -> Result<Vec<Chip>> {
    if config.length == 0 {
        return Err(Error::InvalidArgument {
            name: "length",
            reason: "code length must be >= 1".into(),
        });
    }
    let n = config.length;
    match &config.generator {
        PrnGenerator::Lfsr { taps } => Ok(lfsr_bits(taps, n)?.into_iter().map(bit_to_chip).collect()),
        PrnGenerator::Gold {
            taps_a,
            taps_b,
            delay,
        } => {
            let a = lfsr_bits(taps_a, n)?;
            let degree_b = check_taps(taps_b)?;
            let period_b = (1usize << degree_b) - 1;
            let b = lfsr_bits(taps_b, period_b)?;
            Ok((0..n)
                .map(|k| bit_to_chip(a[k] ^ b[(k + *delay as usize) % period_b]))
                .collect())
        }
        PrnGenerator::Table { chips } => {
            if chips.len() < n {
                return Err(Error::InvalidArgument {
                    name: "length",
                    reason: format!("table has {} chips, length is {n}", chips.len()),
                });
            }
            if let Some(bad) = chips.iter().find(|&&c| c != 1 && c != -1) {
                return Err(Error::InvalidArgument {
                    name: "chips",
                    reason: format!("chip value {bad} is not ±1"),
                });
            }
            Ok(chips[..n].to_vec())
        }
    }
}

fn check_pm_one(name: &'static str, seq: &[Chip]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidArgument {
            name,
            reason: "sequence is empty".into(),
        });
    }
    if seq.iter().any(|&c| c != 1 && c != -1) {
        return Err(Error::InvalidArgument {
            name,
            reason: "values must be ±1".into(),
        });
    }
    Ok(())
}

/// First `n_chips` chips of the (overlaid) code, repeating with its period.
pub fn gen_prn(config: &PrnConfig, n_chips: usize) -> Result<Vec<Chip>> {
    if n_chips == 0 {
        return Err(Error::InvalidArgument {
            name: "n_chips",
            reason: "must be >= 1".into(),
        });
    }
    let primary = primary_code(config)?;
    let l = primary.len();
    match &config.overlay {
        None => Ok((0..n_chips).map(|k| primary[k % l]).collect()),
        Some(ov) => {
            check_pm_one("overlay", ov)?;
            Ok((0..n_chips)
                .map(|k| primary[k % l] * ov[(k / l) % ov.len()])
                .collect())
        }
    }
}

/// Builds the data (I) and pilot (Q) chip streams of a composite signal.
///
/// `i[k] = data[k / chips_per_bit] * data_prn[k]`, and
/// `q[k] = overlay[k / pilot_len] * pilot_prn[k]`; the pilot carries no data.
pub fn compose_data_pilot(
    data_bits: &[Chip],
    bit_rate_hz: f64,
    chip_rate_hz: f64,
    data_prn: &PrnConfig,
    pilot_prn: &PrnConfig,
    overlay: &[Chip],
) -> Result<(Vec<Chip>, Vec<Chip>)> {
    check_pm_one("data_bits", data_bits)?;
    check_pm_one("overlay", overlay)?;
    let ratio = chip_rate_hz / bit_rate_hz;
    let chips_per_bit = ratio.round();
    if !(bit_rate_hz > 0.0 && chip_rate_hz > 0.0)
        || chips_per_bit < 1.0
        || (ratio - chips_per_bit).abs() > 1e-9 * ratio
    {
        return Err(Error::NonCommensurate(format!(
            "{chip_rate_hz} chips/s over {bit_rate_hz} bits/s is not an integer chips-per-bit"
        )));
    }
    let cpb = chips_per_bit as usize;
    let n = data_bits.len() * cpb;
    let dprn = gen_prn(data_prn, n)?;
    let pprn = gen_prn(pilot_prn, n)?;
    let pilot_len = pilot_prn.period();
    let i = (0..n).map(|k| data_bits[k / cpb] * dprn[k]).collect();
    let q = (0..n)
        .map(|k| overlay[(k / pilot_len) % overlay.len()] * pprn[k])
        .collect();
    Ok((i, q))
}

// ---------------------------------------------------------------------------
// Baseband buffers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BasebandBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Time of the first sample, seconds.
    pub epoch: f64,
}

impl BasebandBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, epoch: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidArgument {
                name: "sample_rate",
                reason: format!("must be > 0, got {sample_rate}"),
            });
        }
        if samples.is_empty() {
            return Err(Error::InvalidArgument {
                name: "samples",
                reason: "buffer must hold at least one sample".into(),
            });
        }
        Ok(Self {
            samples,
            sample_rate,
            epoch,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn scale(&mut self, factor: f64) {
        for s in &mut self.samples {
            *s *= factor;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeStats {
    /// `20 log10(max|s| / min|s|)`; `+inf` when any sample is zero.
    pub ripple_db: f64,
    pub mean_power: f64,
}

pub fn envelope_stats(buf: &BasebandBuffer) -> EnvelopeStats {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in &buf.samples {
        let m = s.norm();
        lo = lo.min(m);
        hi = hi.max(m);
    }
    let ripple_db = if lo == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (hi / lo).log10()
    };
    EnvelopeStats {
        ripple_db,
        mean_power: buf.mean_power(),
    }
}

fn check_spc(samples_per_chip: usize, min: usize) -> Result<()> {
    if samples_per_chip < min {
        return Err(Error::InvalidArgument {
            name: "samples_per_chip",
            reason: format!("must be >= {min}, got {samples_per_chip}"),
        });
    }
    Ok(())
}

/// Rectangular-chip BPSK on the I rail.
pub fn bpsk_modulate(chips: &[Chip], samples_per_chip: usize, chip_rate_hz: f64) -> Result<BasebandBuffer> {
    check_spc(samples_per_chip, 1)?;
    let samples = chips
        .iter()
        .flat_map(|&c| std::iter::repeat_n(Complex64::new(c as f64, 0.0), samples_per_chip))
        .collect();
    BasebandBuffer::new(samples, chip_rate_hz * samples_per_chip as f64, 0.0)
}

// ---------------------------------------------------------------------------
// EFQPSK
// ---------------------------------------------------------------------------

const EFQPSK_A: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Sample-indexed half-waveform table for one rail.
#[derive(Debug, Clone)]
struct RailTable {
    /// For every sample offset inside a chip: which transition instant the
    /// sample belongs to (0 = current chip's, 1 = next chip's) and the four
    /// possible values indexed by `2 * own_transition + other_flag`.
    entries: Vec<(usize, [f64; 4])>,
    /// Whether the sample lies in the left half of its interval.
    left: Vec<bool>,
}

fn half_values(tau: f64) -> [f64; 4] {
    let (s, c) = (std::f64::consts::PI * tau).sin_cos();
    let k = 1.0 - EFQPSK_A;
    let trans_free = if tau < 0.0 { s + k * s * s } else { s - k * s * s };
    [EFQPSK_A, 1.0 - k * c * c, trans_free, s]
}

/// Precomputed EFQPSK shaping for a fixed number of samples per chip.
#[derive(Debug, Clone)]
pub struct EfqpskShaper {
    samples_per_chip: usize,
    i_table: RailTable,
    q_table: RailTable,
}

impl EfqpskShaper {
    pub fn new(samples_per_chip: usize) -> Result<Self> {
        check_spc(samples_per_chip, 8)?;
        let spc = samples_per_chip as f64;
        let mut i_table = RailTable {
            entries: Vec::with_capacity(samples_per_chip),
            left: Vec::with_capacity(samples_per_chip),
        };
        let mut q_table = i_table.clone();
        for r in 0..samples_per_chip {
            let x = r as f64 / spc;
            // I transition instants sit on chip boundaries.
            let (which, tau) = if x < 0.5 { (0, x) } else { (1, x - 1.0) };
            i_table.entries.push((which, half_values(tau)));
            i_table.left.push(tau < 0.0);
            // Q transition instants sit half a chip later.
            let tau = x - 0.5;
            q_table.entries.push((0, half_values(tau)));
            q_table.left.push(tau < 0.0);
        }
        Ok(Self {
            samples_per_chip,
            i_table,
            q_table,
        })
    }

    pub fn samples_per_chip(&self) -> usize {
        self.samples_per_chip
    }

    /// Expected `|s|^2` for independent equiprobable chips on both rails.
    pub fn mean_power(&self) -> f64 {
        let rail = |t: &RailTable| {
            t.entries
                .iter()
                .map(|(_, v)| v.iter().map(|x| x * x).sum::<f64>() / 4.0)
                .sum::<f64>()
                / t.entries.len() as f64
        };
        rail(&self.i_table) + rail(&self.q_table)
    }

    /// Renders the samples of chips `range` into `out`. Chips outside the
    /// slices are taken equal to the nearest end chip (no transition).
    pub fn render(&self, i: &[Chip], q: &[Chip], range: Range<usize>, out: &mut Vec<Complex64>) -> Result<()> {
        if i.len() != q.len() {
            return Err(Error::LengthMismatch {
                i: i.len(),
                q: q.len(),
            });
        }
        if i.is_empty() || range.end > i.len() {
            return Err(Error::InvalidArgument {
                name: "range",
                reason: format!("chip range {range:?} outside stream of {} chips", i.len()),
            });
        }
        let n = i.len() as isize;
        let at = |s: &[Chip], k: isize| s[k.clamp(0, n - 1) as usize];
        // Transition at the instant preceding chip k on each rail.
        let it = |k: isize| at(i, k) != at(i, k - 1);
        let qt = |k: isize| at(q, k) != at(q, k - 1);

        out.reserve(range.len() * self.samples_per_chip);
        for k in range {
            let k = k as isize;
            for r in 0..self.samples_per_chip {
                // I rail: interval around instant m (m = k or k + 1).
                let (which, ref vals) = self.i_table.entries[r];
                let m = k + which as isize;
                let flag = if self.i_table.left[r] { qt(m - 1) } else { qt(m) };
                let own = it(m);
                let iv = at(i, m) as f64 * vals[2 * own as usize + flag as usize];

                // Q rail: interval around instant k + 1/2 spanning [k, k + 1).
                let (_, ref vals) = self.q_table.entries[r];
                let flag = if self.q_table.left[r] { it(k) } else { it(k + 1) };
                let own = qt(k);
                let qv = at(q, k) as f64 * vals[2 * own as usize + flag as usize];

                out.push(Complex64::new(iv, qv));
            }
        }
        Ok(())
    }
}

/// EFQPSK baseband waveform of two equal-length ±1 chip streams.
pub fn efqpsk_modulate(
    i_chips: &[Chip],
    q_chips: &[Chip],
    samples_per_chip: usize,
    chip_rate_hz: f64,
) -> Result<BasebandBuffer> {
    if i_chips.len() != q_chips.len() {
        return Err(Error::LengthMismatch {
            i: i_chips.len(),
            q: q_chips.len(),
        });
    }
    let shaper = EfqpskShaper::new(samples_per_chip)?;
    let mut samples = Vec::new();
    shaper.render(i_chips, q_chips, 0..i_chips.len(), &mut samples)?;
    BasebandBuffer::new(samples, chip_rate_hz * samples_per_chip as f64, 0.0)
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub format: String,
    pub sample_rate_hz: f64,
    pub epoch_s: f64,
    pub n_samples: usize,
}

/// Writes interleaved little-endian `f32` I/Q to `path` and a JSON sidecar to
/// `path` + `.json`.
pub fn write_iq_f32(buf: &BasebandBuffer, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::with_capacity(buf.len() * 8);
    for s in &buf.samples {
        bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(io_err)?;
    let sidecar = IqSidecar {
        format: "cf32_le".into(),
        sample_rate_hz: buf.sample_rate,
        epoch_s: buf.epoch,
        n_samples: buf.len(),
    };
    let mut json_path = path.as_os_str().to_owned();
    json_path.push(".json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar).unwrap()).map_err(io_err)
}
