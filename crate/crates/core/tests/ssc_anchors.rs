use rnss_compat::catalog::Catalog;
use rnss_compat::interference::{pair_ssc, PsdMethod, SscConfig};
use rnss_compat::spectrum::{efqpsk_reference_psd, occupied_bandwidth, EfqpskPsdConfig};

fn computed(interferer: &str, victim: &str, cfg: &SscConfig) -> f64 {
    let cat = Catalog::builtin();
    pair_ssc(
        cat.signal(victim).unwrap(),
        cat.signal(interferer).unwrap(),
        PsdMethod::Numeric,
        cfg,
    )
    .unwrap()
    .value_db_hz
}

#[test]
fn anchor_pairs_within_two_db() {
    let cfg = SscConfig::default();
    for (i, v, table) in [
        ("X1", "GPS_L1CA", -97.41),
        ("X1", "GAL_E1A", -85.23),
        ("X5", "GPS_L5", -85.04),
        ("X5", "GAL_E5", -85.99),
    ] {
        let got = computed(i, v, &cfg);
        assert!((got - table).abs() <= 2.0, "{i}/{v}: {got:.2} vs {table}");
    }
}

#[test]
fn other_tabulated_pairs_except_l1m() {
    let cat = Catalog::builtin();
    let cfg = SscConfig::default();
    for e in cat.ssc_table.iter().filter(|e| e.victim_id != "GPS_L1M") {
        let got = computed(&e.interferer_id, &e.victim_id, &cfg);
        assert!(
            (got - e.ssc_db_hz).abs() <= 2.0,
            "{}/{}: {got:.2} vs {}",
            e.interferer_id,
            e.victim_id,
            e.ssc_db_hz
        );
    }
}

#[test]
fn grid_refinement_is_stable() {
    let coarse = SscConfig {
        grid_step_hz: 2e3,
        ..SscConfig::default()
    };
    let fine = SscConfig::default();
    for (i, v) in [("X1", "GPS_L1CA"), ("X5", "GAL_E5")] {
        let a = computed(i, v, &coarse);
        let b = computed(i, v, &fine);
        assert!((a - b).abs() < 0.05, "{i}/{v}: {a} vs {b}");
    }
}

#[test]
fn efqpsk_occupied_bandwidths() {
    let cfg = EfqpskPsdConfig::default();
    for (rate, want) in [(1.023e6, 1.8e6), (10.23e6, 17.7e6)] {
        let psd = efqpsk_reference_psd(rate, &cfg).unwrap();
        let ob = occupied_bandwidth(&psd, 0.995).unwrap();
        assert!((ob / want - 1.0).abs() <= 0.10, "{rate}: {ob}");
    }
}
