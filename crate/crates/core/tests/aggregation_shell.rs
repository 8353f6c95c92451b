use rnss_compat::aggregation::{run_scenario, user_points};
use rnss_compat::catalog::Catalog;

#[test]
fn placeholder_shell_gain_is_bounded_and_in_band() {
    let cat = Catalog::builtin();
    let scenario = cat.aggregation_scenario("pulsar-like-placeholder").unwrap();
    assert_eq!(scenario.constellation.satellite_count(), 258);
    let r = run_scenario(scenario, cat.signal("X1").unwrap().center_frequency_hz).unwrap();
    let bound = 10.0 * (r.max_visible_count as f64).log10();
    assert!(r.g_agg_db > 0.0 && r.g_agg_db <= bound, "{} vs {bound}", r.g_agg_db);
    // sensitivity band around both published gains
    assert!((10.1..=12.8).contains(&r.g_agg_db), "{}", r.g_agg_db);
    assert!(r.visible_count <= r.max_visible_count);
    assert!((r.aggregate_rip_dbw - r.max_single_rip_dbw - r.g_agg_db).abs() < 1e-9);
}

#[test]
fn gain_is_frequency_independent() {
    let cat = Catalog::builtin();
    let scenario = cat.aggregation_scenario("pulsar-like-placeholder").unwrap();
    let a = run_scenario(scenario, 1.5e9).unwrap();
    let b = run_scenario(scenario, 1.2e9).unwrap();
    assert!((a.g_agg_db - b.g_agg_db).abs() < 1e-9);
    assert!((a.max_single_rip_dbw - b.max_single_rip_dbw - 20.0 * (1.2f64 / 1.5).log10()).abs() < 1e-9);
}

#[test]
fn user_grid_expansion() {
    let cat = Catalog::builtin();
    let g = &cat.aggregation_scenario("pulsar-like-placeholder").unwrap().user_grid;
    // 37 latitudes x 13 longitudes
    assert_eq!(user_points(g).unwrap().len(), 37 * 13);
}
