use rnss_compat::rng::{random_chips, stream};
use rnss_compat::catalog::ModulationKind;
use rnss_compat::spectrum::{modulation_density, numeric_psd, welch_density};
use rnss_compat::waveform::bpsk_modulate;

/// Discrete-time PSD of random rectangular chips of `l` samples: a Dirichlet
/// kernel, periodic in `fs`, unit power per period.
fn dirichlet(f: f64, l: f64, fs: f64) -> f64 {
    let x = std::f64::consts::PI * f / fs;
    if x.abs() < 1e-12 {
        l / fs
    } else {
        ((l * x).sin() / x.sin()).powi(2) / (l * fs)
    }
}

fn random_bpsk(spc: usize, samples: usize, seed: u64) -> rnss_compat::waveform::BasebandBuffer {
    let mut chips = vec![0; samples / spc];
    random_chips(seed, stream::TEST_CHIPS, 0, &mut chips);
    bpsk_modulate(&chips, spc, 1.023e6).unwrap()
}

#[test]
fn welch_estimate_matches_sampled_chip_spectrum() {
    for spc in [4usize, 8] {
        let buf = random_bpsk(spc, 1 << 22, 3 + spc as u64);
        let fs = buf.sample_rate;
        let psd = numeric_psd(&buf, 2048, None).unwrap();
        let peak = dirichlet(0.0, spc as f64, fs);
        for (k, d) in psd.density.iter().enumerate() {
            let want = dirichlet(psd.grid.freq(k), spc as f64, fs);
            if want >= 1e-4 * peak {
                let err = 10.0 * (d / want).log10();
                assert!(err.abs() <= 0.5, "spc {spc} bin {k}: {err:.3} dB");
            }
        }
    }
}

#[test]
fn oversampled_estimate_approaches_sinc_squared_in_main_lobe() {
    // at 32 samples per chip aliasing is negligible inside the main lobe
    let buf = random_bpsk(32, 1 << 22, 17);
    let psd = numeric_psd(&buf, 4096, None).unwrap();
    let m = ModulationKind::BpskR { chip_rate_hz: 1.023e6 };
    for f in [-0.6e6, -0.3e6, 0.0, 0.25e6, 0.7e6] {
        let err = 10.0 * (psd.interp(f) / modulation_density(&m, f).unwrap()).log10();
        assert!(err.abs() < 0.3, "{f}: {err}");
    }
}

#[test]
fn parseval_for_welch_density() {
    let buf = random_bpsk(4, 1 << 20, 5);
    let (grid, raw) = welch_density(&buf, 1024).unwrap();
    let ratio = raw.iter().sum::<f64>() * grid.step_hz / buf.mean_power();
    assert!((ratio - 1.0).abs() <= 0.01, "{ratio}");
}
