//! Unit-power power spectral densities on uniform frequency grids.
//!
//! Closed forms cover the classical GNSS modulations; EFQPSK has no closed
//! form here and goes through [`numeric_psd`], a Hann-windowed, 50 %-overlap
//! segment-averaged periodogram.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::catalog::ModulationKind;
use crate::error::{Error, Result};
use crate::rng::{random_chips, stream};
use crate::waveform::{efqpsk_modulate, BasebandBuffer};

/// Default SSC grid: 1 kHz spacing over ±30 MHz.
pub const DEFAULT_GRID_SPACING_HZ: f64 = 1.0e3;
pub const DEFAULT_GRID_HALF_SPAN_HZ: f64 = 30.0e6;

/// Uniform grid of frequency offsets from a signal's centre, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub start_hz: f64,
    pub step_hz: f64,
    pub len: usize,
}

impl FrequencyGrid {
    pub fn new(start_hz: f64, step_hz: f64, len: usize) -> Result<Self> {
        if !(step_hz.is_finite() && step_hz > 0.0) {
            return Err(Error::InvalidArgument {
                name: "step_hz",
                reason: format!("must be > 0, got {step_hz}"),
            });
        }
        if len < 2 {
            return Err(Error::InvalidArgument {
                name: "len",
                reason: "a grid needs at least two points".into(),
            });
        }
        Ok(Self {
            start_hz,
            step_hz,
            len,
        })
    }

    /// Grid `-half_span ..= +half_span`, always containing 0.
    pub fn symmetric(half_span_hz: f64, step_hz: f64) -> Result<Self> {
        let half = (half_span_hz / step_hz).ceil().max(1.0) as usize;
        Self::new(-(half as f64) * step_hz, step_hz, 2 * half + 1)
    }

    pub fn default_ssc() -> Self {
        Self::symmetric(DEFAULT_GRID_HALF_SPAN_HZ, DEFAULT_GRID_SPACING_HZ).unwrap()
    }

    #[inline]
    pub fn freq(&self, k: usize) -> f64 {
        self.start_hz + k as f64 * self.step_hz
    }

    pub fn stop_hz(&self) -> f64 {
        self.freq(self.len - 1)
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.freq(k)).collect()
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        let tol = 1e-9 * self.step_hz;
        self.start_hz <= lo + tol && self.stop_hz() >= hi - tol
    }
}

/// Density samples (1/Hz) on a [`FrequencyGrid`], normalized so the piecewise
/// linear integral over `normalization_band` is one.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPsd {
    pub grid: FrequencyGrid,
    pub density: Vec<f64>,
    pub normalization_band: (f64, f64),
}

impl SampledPsd {
    /// Wraps raw densities and normalizes them over `band` (whole grid if
    /// `None`).
    pub fn normalized(grid: FrequencyGrid, density: Vec<f64>, band: Option<(f64, f64)>) -> Result<Self> {
        assert_eq!(grid.len, density.len());
        let band = band.unwrap_or((grid.start_hz, grid.stop_hz()));
        if !(band.0 < band.1) {
            return Err(Error::InvalidArgument {
                name: "normalization_band",
                reason: format!("empty band [{}, {}]", band.0, band.1),
            });
        }
        if !grid.covers(band.0, band.1) {
            return Err(Error::GridCoverage {
                need_lo: band.0,
                need_hi: band.1,
                have_lo: grid.start_hz,
                have_hi: grid.stop_hz(),
            });
        }
        let mut psd = Self {
            grid,
            density,
            normalization_band: band,
        };
        let total = psd.integrate(band.0, band.1);
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidArgument {
                name: "density",
                reason: "no power inside the normalization band".into(),
            });
        }
        for d in &mut psd.density {
            *d /= total;
        }
        Ok(psd)
    }

    pub fn freqs(&self) -> Vec<f64> {
        self.grid.freqs()
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interp(&self, f: f64) -> f64 {
        let x = (f - self.grid.start_hz) / self.grid.step_hz;
        if x < 0.0 || x > (self.grid.len - 1) as f64 {
            return 0.0;
        }
        let k = (x.floor() as usize).min(self.grid.len - 2);
        let t = x - k as f64;
        self.density[k] * (1.0 - t) + self.density[k + 1] * t
    }

    /// Exact integral of the piecewise-linear density from the grid start to
    /// `f` (clamped to the grid).
    fn cumulative(&self, prefix: &[f64], f: f64) -> f64 {
        let n = self.grid.len;
        let x = ((f - self.grid.start_hz) / self.grid.step_hz).clamp(0.0, (n - 1) as f64);
        let k = (x.floor() as usize).min(n - 2);
        let t = x - k as f64;
        let (a, b) = (self.density[k], self.density[k + 1]);
        prefix[k] + self.grid.step_hz * (a * t + 0.5 * (b - a) * t * t)
    }

    fn prefix(&self) -> Vec<f64> {
        let mut acc = Vec::with_capacity(self.grid.len);
        let mut s = 0.0;
        acc.push(0.0);
        for w in self.density.windows(2) {
            s += 0.5 * (w[0] + w[1]) * self.grid.step_hz;
            acc.push(s);
        }
        acc
    }

    /// Integral of the density over `[lo, hi]`, zero outside the grid.
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let p = self.prefix();
        self.cumulative(&p, hi) - self.cumulative(&p, lo)
    }

    pub fn total_power(&self) -> f64 {
        self.integrate(self.grid.start_hz, self.grid.stop_hz())
    }

    pub fn peak(&self) -> f64 {
        self.density.iter().cloned().fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "offset_hz,density_per_hz")?;
        for (k, d) in self.density.iter().enumerate() {
            writeln!(w, "{},{:.12e}", self.grid.freq(k), d)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let f = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_csv(&mut w).and_then(|_| w.flush()).map_err(io)
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// `sin(x)/x` with the limit at 0.
fn sinx_x(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `(1 - cos x)/x`, computed without cancellation.
fn one_minus_cos_x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        let s = (0.5 * x).sin();
        2.0 * s * s / x
    }
}

/// `trig(n x) / cos(x)` where `trig` is sin for even `n` and cos for odd `n`;
/// the zeros of `cos x` are removable and handled by l'Hôpital's rule.
fn subcarrier_ratio(n: f64, x: f64) -> f64 {
    let even = (n.round() as i64) % 2 == 0;
    let c = x.cos();
    if c.abs() > 1e-7 {
        if even {
            (n * x).sin() / c
        } else {
            (n * x).cos() / c
        }
    } else if even {
        -n * (n * x).cos() / x.sin()
    } else {
        n * (n * x).sin() / x.sin()
    }
}

fn bpsk_density(fc: f64, f: f64) -> f64 {
    let s = sinx_x(PI * f / fc);
    s * s / fc
}

fn boc_sin_density(fs: f64, fc: f64, f: f64) -> f64 {
    let n = 2.0 * fs / fc;
    let x = PI * f / (2.0 * fs);
    let a = sinx_x(x) * subcarrier_ratio(n, x);
    fc / (4.0 * fs * fs) * a * a
}

fn boc_cos_density(fs: f64, fc: f64, f: f64) -> f64 {
    let n = 2.0 * fs / fc;
    let x = PI * f / (2.0 * fs);
    let a = one_minus_cos_x(x) * subcarrier_ratio(n, x);
    fc / (4.0 * fs * fs) * a * a
}

/// Constant-envelope AltBOC (8-PSK lookup) PSD for odd `2 fs / fc`.
fn altboc_density(fs: f64, fc: f64, f: f64) -> f64 {
    let n = 2.0 * fs / fc;
    let x = PI * f / (2.0 * fs);
    let c = x.cos();
    // bracket / x^2, with its series near x = 0
    let b = if x.abs() < 1e-3 {
        0.75 + (30.0 / 384.0) * x * x
    } else {
        (c * c - c - 2.0 * c * (0.5 * x).cos() + 2.0) / (x * x)
    };
    let r = subcarrier_ratio(n, x);
    fc / (8.0 * fs * fs) * r * r * b
}

/// Un-normalized closed-form density (unit power over the whole line).
pub fn modulation_density(m: &ModulationKind, f: f64) -> Result<f64> {
    // every closed form here is even in f
    let f = f.abs();
    Ok(match *m {
        ModulationKind::BpskR { chip_rate_hz } | ModulationKind::Qpsk { chip_rate_hz } => {
            bpsk_density(chip_rate_hz, f)
        }
        ModulationKind::BocSin {
            subcarrier_rate_hz,
            chip_rate_hz,
        } => boc_sin_density(subcarrier_rate_hz, chip_rate_hz, f),
        ModulationKind::BocCos {
            subcarrier_rate_hz,
            chip_rate_hz,
        } => boc_cos_density(subcarrier_rate_hz, chip_rate_hz, f),
        ModulationKind::Cboc {
            high_rate_hz,
            low_rate_hz,
            power_split,
        } => {
            (1.0 - power_split) * boc_sin_density(low_rate_hz, low_rate_hz, f)
                + power_split * boc_sin_density(high_rate_hz, low_rate_hz, f)
        }
        ModulationKind::Altboc {
            subcarrier_rate_hz,
            chip_rate_hz,
        } => altboc_density(subcarrier_rate_hz, chip_rate_hz, f),
        ModulationKind::Efqpsk { .. } => return Err(Error::UnsupportedModulation(m.label())),
    })
}

fn check_subcarrier(m: &ModulationKind) -> Result<()> {
    let check = |fs: f64, fc: f64, odd_only: bool| {
        let n = 2.0 * fs / fc;
        let ok = (n - n.round()).abs() < 1e-9 * n && n.round() >= 1.0;
        if !ok || (odd_only && (n.round() as i64) % 2 == 0) {
            Err(Error::NonCommensurate(format!(
                "{}: 2 fs / fc = {n} must be a{} integer",
                m.label(),
                if odd_only { "n odd" } else { "n" }
            )))
        } else {
            Ok(())
        }
    };
    match *m {
        ModulationKind::BocSin {
            subcarrier_rate_hz,
            chip_rate_hz,
        }
        | ModulationKind::BocCos {
            subcarrier_rate_hz,
            chip_rate_hz,
        } => check(subcarrier_rate_hz, chip_rate_hz, false),
        ModulationKind::Cboc {
            high_rate_hz,
            low_rate_hz,
            ..
        } => check(high_rate_hz, low_rate_hz, false),
        ModulationKind::Altboc {
            subcarrier_rate_hz,
            chip_rate_hz,
        } => check(subcarrier_rate_hz, chip_rate_hz, true),
        _ => Ok(()),
    }
}

/// Closed-form PSD on `grid`, normalized over `band` (whole grid if `None`).
pub fn analytic_psd(m: &ModulationKind, grid: &FrequencyGrid, band: Option<(f64, f64)>) -> Result<SampledPsd> {
    if let ModulationKind::Efqpsk { .. } = m {
        return Err(Error::UnsupportedModulation(m.label()));
    }
    check_subcarrier(m)?;
    let density: Vec<f64> = (0..grid.len)
        .into_par_iter()
        .map(|k| modulation_density(m, grid.freq(k)).unwrap())
        .collect();
    SampledPsd::normalized(*grid, density, band)
}

/// Closed-form PSD as seen by a receiver sampling at `sample_rate`: the
/// spectrum folded onto `[-fs/2, fs/2)` by summing `alias_orders` images on
/// each side.
pub fn aliased_analytic_psd(
    m: &ModulationKind,
    grid: &FrequencyGrid,
    sample_rate: f64,
    alias_orders: usize,
    band: Option<(f64, f64)>,
) -> Result<SampledPsd> {
    check_subcarrier(m)?;
    modulation_density(m, 0.0)?;
    let k = alias_orders as i64;
    let density: Vec<f64> = (0..grid.len)
        .into_par_iter()
        .map(|i| {
            let f = grid.freq(i);
            (-k..=k)
                .map(|j| modulation_density(m, f + j as f64 * sample_rate).unwrap())
                .sum()
        })
        .collect();
    SampledPsd::normalized(*grid, density, band)
}

// ---------------------------------------------------------------------------
// Numeric estimate
// ---------------------------------------------------------------------------

pub const MIN_SEGMENTS: usize = 8;

/// Un-normalized Welch estimate in W/Hz on the fft-shifted grid
/// `[-fs/2, fs/2)`: its integral equals the buffer's mean power.
pub fn welch_density(buf: &BasebandBuffer, segment_length: usize) -> Result<(FrequencyGrid, Vec<f64>)> {
    let len = buf.len();
    if segment_length < 2 {
        return Err(Error::InvalidArgument {
            name: "segment_length",
            reason: "must be >= 2".into(),
        });
    }
    if segment_length > len {
        return Err(Error::SegmentTooLong {
            segment: segment_length,
            len,
        });
    }
    if len < MIN_SEGMENTS * segment_length {
        return Err(Error::InsufficientData {
            len,
            segment: segment_length,
            min_segments: MIN_SEGMENTS,
        });
    }
    let l = segment_length;
    let hop = l / 2;
    let n_seg = (len - l) / hop + 1;
    let window: Vec<f64> = (0..l)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / l as f64).cos())
        .collect();
    let u: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(l);

    let acc = (0..n_seg)
        .into_par_iter()
        .fold(
            || (vec![0.0f64; l], vec![Complex64::default(); l]),
            |(mut acc, mut work), s| {
                let seg = &buf.samples[s * hop..s * hop + l];
                for ((w, x), win) in work.iter_mut().zip(seg).zip(&window) {
                    *w = x * win;
                }
                fft.process(&mut work);
                for (a, w) in acc.iter_mut().zip(&work) {
                    *a += w.norm_sqr();
                }
                (acc, work)
            },
        )
        .map(|(a, _)| a)
        .reduce(
            || vec![0.0; l],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let fs = buf.sample_rate;
    let scale = 1.0 / (n_seg as f64 * fs * u);
    let half = l / 2;
    // fftshift: bin (k + l - half) % l lands at index k
    let density: Vec<f64> = (0..l).map(|k| acc[(k + l - half) % l] * scale).collect();
    let df = fs / l as f64;
    let grid = FrequencyGrid::new(-(half as f64) * df, df, l)?;
    Ok((grid, density))
}

/// Segment-averaged periodogram normalized over `band` (whole grid if `None`).
pub fn numeric_psd(buf: &BasebandBuffer, segment_length: usize, band: Option<(f64, f64)>) -> Result<SampledPsd> {
    let (grid, density) = welch_density(buf, segment_length)?;
    SampledPsd::normalized(grid, density, band)
}

/// Estimation parameters for the EFQPSK reference spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfqpskPsdConfig {
    pub samples_per_chip: usize,
    pub segment_length: usize,
    pub segments: usize,
    pub seed: u64,
}

impl Default for EfqpskPsdConfig {
    fn default() -> Self {
        Self {
            samples_per_chip: 16,
            segment_length: 16384,
            segments: 64,
            seed: 0x5eed,
        }
    }
}

/// Numeric PSD of an EFQPSK signal carrying independent random chips on both
/// rails, normalized over its full sampled band.
pub fn efqpsk_reference_psd(chip_rate_hz: f64, cfg: &EfqpskPsdConfig) -> Result<SampledPsd> {
    let n_samples = cfg.segments.max(MIN_SEGMENTS) * cfg.segment_length;
    let n_chips = n_samples.div_ceil(cfg.samples_per_chip);
    let mut i = vec![0i8; n_chips];
    let mut q = vec![0i8; n_chips];
    random_chips(cfg.seed, stream::INTERFERER_I, 0, &mut i);
    random_chips(cfg.seed, stream::INTERFERER_Q, 0, &mut q);
    let buf = efqpsk_modulate(&i, &q, cfg.samples_per_chip, chip_rate_hz)?;
    numeric_psd(&buf, cfg.segment_length, None)
}

/// Half-width based bandwidth containing `fraction` of the PSD's power,
/// measured symmetrically about its power centroid.
pub fn occupied_bandwidth(psd: &SampledPsd, fraction: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::FractionOutOfRange(fraction));
    }
    let prefix = psd.prefix();
    let total = *prefix.last().unwrap();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument {
            name: "psd",
            reason: "PSD carries no power".into(),
        });
    }
    let first_moment: f64 = psd
        .density
        .iter()
        .enumerate()
        .map(|(k, d)| psd.grid.freq(k) * d)
        .sum::<f64>()
        * psd.grid.step_hz;
    let centre = first_moment / total;
    let target = fraction * total;
    let inside = |h: f64| psd.cumulative(&prefix, centre + h) - psd.cumulative(&prefix, centre - h);

    let mut lo = 0.0;
    let mut hi = (centre - psd.grid.start_hz).max(psd.grid.stop_hz() - centre);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-9 * psd.grid.step_hz {
            break;
        }
    }
    Ok(2.0 * hi)
}
