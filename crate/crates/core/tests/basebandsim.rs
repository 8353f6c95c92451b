use rnss_compat::basebandsim::{
    estimate_cn0, measure_cn0, predicted_cn0, run_ramp_profile, synthesize_scenario, Cn0Estimate, RampProfile,
    Replica, ScenarioConfig,
};
use rnss_compat::catalog::{Catalog, ModulationKind, SignalSpec};
use rnss_compat::waveform::PrnConfig;

/// Cheapest scenario the guards accept: 4 samples per victim chip.
fn cheap(seed: u64, cn0_dbhz: f64) -> ScenarioConfig {
    let victim = SignalSpec {
        id: "V".into(),
        system: "test".into(),
        center_frequency_hz: 1575.42e6,
        modulation: ModulationKind::BpskR { chip_rate_hz: 1.023e6 },
        max_single_sat_rip_dbw: None,
        aggregation_gain_db: None,
        doppler_range_hz: None,
        occupied_bandwidth_99_5_hz: None,
        receiver_ref_bandwidth_hz: 2.0e6,
        carrier_power_dbw: None,
    };
    let interferer = SignalSpec {
        id: "I".into(),
        center_frequency_hz: 1575.42e6 + 0.3e6,
        modulation: ModulationKind::Efqpsk { chip_rate_hz: 511.5e3 },
        occupied_bandwidth_99_5_hz: Some(0.9e6),
        ..victim.clone()
    };
    let n0 = -200.3;
    ScenarioConfig {
        victim,
        victim_prn: PrnConfig::gold(1023, 7),
        interferer,
        victim_power_dbw: n0 + cn0_dbhz,
        interferer_power_dbw: f64::NEG_INFINITY,
        noise_density_dbw_hz: n0,
        sample_rate_hz: 4.092e6,
        duration_s: 2.0,
        coherent_time_s: 1e-3,
        seed,
    }
}

fn est(cfg: &ScenarioConfig, n: usize) -> f64 {
    measure_cn0(cfg, n).unwrap().db_hz().expect("above floor")
}

#[test]
fn unbiased_at_45_dbhz() {
    let cfg = cheap(11, 45.0);
    let buf = synthesize_scenario(&cfg).unwrap();
    let replica = Replica {
        prn: cfg.victim_prn.clone(),
        chip_rate_hz: 1.023e6,
    };
    let got = estimate_cn0(&buf, &replica, 1e-3, 2000).unwrap().db_hz().unwrap();
    assert!((got - 45.0).abs() <= 0.5, "{got}");
}

#[test]
fn unbiased_across_range() {
    for (k, cn0) in [25.0, 35.0, 55.0].into_iter().enumerate() {
        let got = est(&cheap(100 + k as u64, cn0), 1000);
        assert!((got - cn0).abs() <= 0.5, "{cn0}: {got}");
    }
}

#[test]
fn doubling_power_adds_3_db() {
    let a = cheap(21, 42.0);
    let mut b = a.clone();
    b.victim_power_dbw += 10.0 * 2f64.log10();
    let d = est(&b, 2000) - est(&a, 2000);
    assert!((d - 3.0103).abs() <= 0.3, "{d}");
}

#[test]
fn missing_victim_hits_floor() {
    let mut cfg = cheap(31, 45.0);
    cfg.victim_power_dbw = -260.0;
    assert_eq!(measure_cn0(&cfg, 400).unwrap(), Cn0Estimate::BelowFloor);
}

#[test]
fn spread_scales_with_inverse_root_epochs() {
    let runs = 24;
    let std_at = |n: usize| {
        let xs: Vec<f64> = (0..runs).map(|s| est(&cheap(1000 * n as u64 + s, 40.0), n)).collect();
        let m = xs.iter().sum::<f64>() / runs as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (runs - 1) as f64).sqrt()
    };
    let ns = [60, 240, 960];
    let s: Vec<f64> = ns.iter().map(|&n| std_at(n)).collect();
    for k in 1..ns.len() {
        let ratio = s[k - 1] / s[k];
        let want = ((ns[k] / ns[k - 1]) as f64).sqrt();
        assert!(ratio / want < 1.5 && want / ratio < 1.5, "{s:?}");
    }
}

#[test]
fn interferer_degradation_follows_prediction() {
    let mut cfg = cheap(41, 44.0);
    cfg.interferer_power_dbw = cfg.noise_density_dbw_hz + 70.0;
    let ssc = rnss_compat::basebandsim::scenario_ssc(&cfg).unwrap();
    let pred = predicted_cn0(cfg.victim_power_dbw, cfg.noise_density_dbw_hz, cfg.interferer_power_dbw, ssc);
    assert!(44.0 - pred > 1.0);
    let mean: f64 = (0..8)
        .map(|s| {
            cfg.seed = 500 + s;
            est(&cfg, 1000)
        })
        .sum::<f64>()
        / 8.0;
    assert!((mean - pred).abs() <= 0.3, "{mean} vs {pred}");
}

#[test]
fn default_ramp_on_catalog_scenario() {
    let cat = Catalog::builtin();
    let mut cfg = ScenarioConfig::l1ca_vs_x1(&cat).unwrap();
    cfg.seed = 77;
    let r = run_ramp_profile(&cfg, &RampProfile::default_ladder(0.2)).unwrap();
    let labels: Vec<_> = r.rows.iter().map(|r| r.stage.as_str()).collect();
    assert_eq!(
        labels,
        ["baseline", "CADL", "IOV", "FOC", "FOC+5", "FOC+10", "FOC+20", "FOC+30", "baseline-after"]
    );
    assert!(r.rows.windows(2).all(|w| w[1].t_start_s > w[0].t_start_s));
    // predictions decrease monotonically with interferer power
    let p: Vec<f64> = r.rows[1..8].iter().map(|r| r.predicted_cn0_dbhz).collect();
    assert!(p.windows(2).all(|w| w[1] < w[0]));
    assert!(r.hysteresis_db.unwrap().abs() < 1.0);
}
