//! Aggregation gain of a circular Walker-delta constellation.
//!
//! Spherical Earth, Keplerian circular orbits, no perturbations. Satellite
//! positions are Earth-centred inertial; users sit on the rotating surface.
//! The gain is the worst case, over users and epochs, of the aggregate
//! received power from all visible satellites relative to the strongest
//! power any single satellite can deliver.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{AggregationScenario, AntennaPattern, ConstellationSpec, UserGridSpec};
use crate::error::{Error, Result};
use crate::units::{to_db, to_linear, SPEED_OF_LIGHT};

pub const MU_EARTH: f64 = 3.986_004_418e14;
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatState {
    pub position: Vec3,
    pub plane: u32,
    pub slot: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserPoint {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub mask_angle_deg: f64,
    pub rx_pattern: AntennaPattern,
}

impl UserPoint {
    pub fn new(lat_deg: f64, lon_deg: f64, mask_angle_deg: f64, rx_pattern: AntennaPattern) -> Result<Self> {
        if !(lat_deg.abs() <= 90.0) {
            return Err(Error::InvalidArgument {
                name: "lat_deg",
                reason: format!("|lat| must be <= 90, got {lat_deg}"),
            });
        }
        if !(0.0..90.0).contains(&mask_angle_deg) {
            return Err(Error::InvalidArgument {
                name: "mask_angle_deg",
                reason: format!("must lie in [0, 90), got {mask_angle_deg}"),
            });
        }
        Ok(Self {
            lat_deg,
            lon_deg,
            mask_angle_deg,
            rx_pattern,
        })
    }

    /// Inertial position at time `t`; the Earth-fixed and inertial frames
    /// coincide at `t = 0`.
    pub fn position(&self, t: f64) -> Vec3 {
        let lat = self.lat_deg.to_radians();
        let lon = self.lon_deg.to_radians() + EARTH_ROTATION_RAD_S * t;
        [
            EARTH_RADIUS_M * lat.cos() * lon.cos(),
            EARTH_RADIUS_M * lat.cos() * lon.sin(),
            EARTH_RADIUS_M * lat.sin(),
        ]
    }
}

/// Expands a user grid spec into points.
pub fn user_points(grid: &UserGridSpec) -> Result<Vec<UserPoint>> {
    let lats = crate::catalog::inclusive_range(grid.lat_min_deg, grid.lat_max_deg, grid.lat_step_deg);
    let lons = crate::catalog::inclusive_range(grid.lon_min_deg, grid.lon_max_deg, grid.lon_step_deg);
    let mut out = Vec::with_capacity(lats.len() * lons.len());
    for &lat in &lats {
        for &lon in &lons {
            out.push(UserPoint::new(lat, lon, grid.mask_angle_deg, grid.rx_pattern.clone())?);
        }
    }
    Ok(out)
}

pub fn orbital_period(altitude_m: f64) -> f64 {
    let a = EARTH_RADIUS_M + altitude_m;
    2.0 * PI * (a * a * a / MU_EARTH).sqrt()
}

/// Positions of every satellite at time `t`. Plane `p` has RAAN `360 p / P`;
/// slot `s` has argument of latitude `360 s / S + p * phasing + n t`.
pub fn propagate_constellation(spec: &ConstellationSpec, t: f64) -> Vec<SatState> {
    let a = EARTH_RADIUS_M + spec.altitude_m;
    let n = 2.0 * PI / orbital_period(spec.altitude_m);
    let (si, ci) = spec.inclination_deg.to_radians().sin_cos();
    let mut out = Vec::with_capacity(spec.satellite_count());
    for p in 0..spec.planes {
        let raan = 2.0 * PI * p as f64 / spec.planes as f64;
        let (so, co) = raan.sin_cos();
        for s in 0..spec.sats_per_plane {
            let u = 2.0 * PI * s as f64 / spec.sats_per_plane as f64
                + p as f64 * spec.phasing_offset_deg.to_radians()
                + n * t;
            let (su, cu) = u.sin_cos();
            out.push(SatState {
                position: [
                    a * (co * cu - so * su * ci),
                    a * (so * cu + co * su * ci),
                    a * su * si,
                ],
                plane: p,
                slot: s,
            });
        }
    }
    out
}

/// Free-space path loss in dB.
pub fn fspl_db(distance_m: f64, freq_hz: f64) -> f64 {
    20.0 * (4.0 * PI * distance_m * freq_hz / SPEED_OF_LIGHT).log10()
}

/// Elevation (deg), off-nadir angle (deg) and range (m) of `sat` from `user_pos`.
fn look_angles(sat_pos: Vec3, user_pos: Vec3) -> (f64, f64, f64) {
    let rel = sub(sat_pos, user_pos);
    let d = norm(rel);
    let up = dot(rel, user_pos) / (d * norm(user_pos));
    let elevation = up.clamp(-1.0, 1.0).asin().to_degrees();
    let nadir = dot(sat_pos, rel) / (norm(sat_pos) * d);
    let off_nadir = nadir.clamp(-1.0, 1.0).acos().to_degrees();
    (elevation, off_nadir, d)
}

fn link_power(eirp: f64, tx: &AntennaPattern, rx: &AntennaPattern, off_nadir: f64, elevation: f64, d: f64, f: f64) -> f64 {
    eirp + tx.gain_dbi(off_nadir) - fspl_db(d, f) + rx.gain_dbi(elevation)
}

/// Received isotropic power in dBW, or `None` below the user's mask.
pub fn received_power(
    sat: &SatState,
    user: &UserPoint,
    t: f64,
    tx_eirp_dbw: f64,
    tx_pattern: &AntennaPattern,
    freq_hz: f64,
) -> Option<f64> {
    let (el, off, d) = look_angles(sat.position, user.position(t));
    (el >= user.mask_angle_deg).then(|| link_power(tx_eirp_dbw, tx_pattern, &user.rx_pattern, off, el, d, freq_hz))
}

/// Range and off-nadir angle (deg) of a satellite at `altitude_m` seen at
/// `elevation_deg`.
pub fn slant_geometry(altitude_m: f64, elevation_deg: f64) -> (f64, f64) {
    let r = EARTH_RADIUS_M;
    let a = r + altitude_m;
    if elevation_deg >= 90.0 {
        return (altitude_m, 0.0);
    }
    let (se, ce) = elevation_deg.to_radians().sin_cos();
    let d = -r * se + ((r * se).powi(2) + a * a - r * r).sqrt();
    let off = (r * ce / a).clamp(-1.0, 1.0).asin().to_degrees();
    (d, off)
}

/// Strongest single-satellite power over all elevations above the mask.
pub fn max_single_rip(spec: &ConstellationSpec, user: &UserPoint, freq_hz: f64) -> f64 {
    let rip = |el: f64| {
        let (d, off) = slant_geometry(spec.altitude_m, el);
        link_power(spec.tx_eirp_dbw, &spec.tx_pattern, &user.rx_pattern, off, el, d, freq_hz)
    };
    let lo = user.mask_angle_deg;
    let steps = 9000;
    let h = (90.0 - lo) / steps as f64;
    let (mut best_el, mut best) = (90.0, rip(90.0));
    for k in 0..steps {
        let el = lo + k as f64 * h;
        let v = rip(el);
        if v > best {
            best = v;
            best_el = el;
        }
    }
    // golden-section refinement around the best grid point
    let (mut a, mut b) = ((best_el - h).max(lo), (best_el + h).min(90.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if rip(c) > rip(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(rip(0.5 * (a + b)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregationResult {
    pub g_agg_db: f64,
    pub worst_user: (f64, f64),
    pub worst_time_s: f64,
    /// Satellites visible at the worst case.
    pub visible_count: usize,
    /// Largest number of simultaneously visible satellites over the grids.
    pub max_visible_count: usize,
    pub max_single_rip_dbw: f64,
    pub aggregate_rip_dbw: f64,
}

/// Linear-sum aggregate power (dBW) and visible count at one (user, t).
pub fn aggregate_power(sats: &[SatState], user: &UserPoint, t: f64, spec: &ConstellationSpec, freq_hz: f64) -> (f64, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for sat in sats {
        if let Some(p) = received_power(sat, user, t, spec.tx_eirp_dbw, &spec.tx_pattern, freq_hz) {
            sum += to_linear(p);
            count += 1;
        }
    }
    (to_db(sum), count)
}

struct Cell {
    ratio_db: f64,
    user: usize,
    t: f64,
    visible: usize,
    aggregate: f64,
    denom: f64,
    max_visible: usize,
}

/// Worst-case aggregation gain over `users` x `times`.
pub fn aggregation_gain(spec: &ConstellationSpec, users: &[UserPoint], times: &[f64], freq_hz: f64) -> Result<AggregationResult> {
    if users.is_empty() || times.is_empty() {
        return Err(Error::InvalidArgument {
            name: "grid",
            reason: "user and time grids must be non-empty".into(),
        });
    }
    if !(freq_hz > 0.0) {
        return Err(Error::InvalidArgument {
            name: "freq_hz",
            reason: format!("must be > 0, got {freq_hz}"),
        });
    }
    // One denominator per distinct (mask, pattern).
    let mut keys: Vec<(f64, &AntennaPattern, f64)> = Vec::new();
    let denom_index: Vec<usize> = users
        .iter()
        .map(|u| {
            keys.iter()
                .position(|(m, p, _)| *m == u.mask_angle_deg && **p == u.rx_pattern)
                .unwrap_or_else(|| {
                    keys.push((u.mask_angle_deg, &u.rx_pattern, max_single_rip(spec, u, freq_hz)));
                    keys.len() - 1
                })
        })
        .collect();

    let snapshots: Vec<Vec<SatState>> = times.iter().map(|&t| propagate_constellation(spec, t)).collect();

    let mut cells: Vec<Cell> = (0..users.len())
        .into_par_iter()
        .filter_map(|ui| {
            let user = &users[ui];
            let denom_opt = keys[denom_index[ui]].2;
            let mut best: Option<Cell> = None;
            let mut max_visible = 0;
            for (ti, sats) in snapshots.iter().enumerate() {
                let t = times[ti];
                let mut sum = 0.0;
                let mut count = 0;
                let mut strongest = f64::NEG_INFINITY;
                for sat in sats {
                    if let Some(p) = received_power(sat, user, t, spec.tx_eirp_dbw, &spec.tx_pattern, freq_hz) {
                        sum += to_linear(p);
                        count += 1;
                        strongest = strongest.max(p);
                    }
                }
                max_visible = max_visible.max(count);
                if count == 0 {
                    continue;
                }
                let denom = denom_opt.max(strongest);
                let aggregate = to_db(sum);
                let ratio_db = to_db(sum / to_linear(denom));
                if best.as_ref().is_none_or(|b| ratio_db > b.ratio_db) {
                    best = Some(Cell {
                        ratio_db,
                        user: ui,
                        t,
                        visible: count,
                        aggregate,
                        denom,
                        max_visible: 0,
                    });
                }
            }
            best.map(|mut c| {
                c.max_visible = max_visible;
                c
            })
        })
        .collect();

    let max_visible = cells.iter().map(|c| c.max_visible).max().ok_or(Error::NeverVisible)?;
    // deterministic tie-break: first user, then earliest time
    cells.sort_by(|a, b| {
        b.ratio_db
            .total_cmp(&a.ratio_db)
            .then(a.user.cmp(&b.user))
            .then(a.t.total_cmp(&b.t))
    });
    let w = &cells[0];
    Ok(AggregationResult {
        g_agg_db: w.ratio_db,
        worst_user: (users[w.user].lat_deg, users[w.user].lon_deg),
        worst_time_s: w.t,
        visible_count: w.visible,
        max_visible_count: max_visible,
        max_single_rip_dbw: w.denom,
        aggregate_rip_dbw: w.aggregate,
    })
}

/// Runs a catalog scenario at `freq_hz`.
pub fn run_scenario(scenario: &AggregationScenario, freq_hz: f64) -> Result<AggregationResult> {
    let users = user_points(&scenario.user_grid)?;
    aggregation_gain(&scenario.constellation, &users, &scenario.time_grid.times(), freq_hz)
}

/// Transmit pattern that equalizes received power across the coverage area:
/// gain rises with the slant range, up to the edge of coverage at
/// `mask_angle_deg`, sampled every `step_deg` off-nadir degrees.
pub fn iso_flux_pattern(altitude_m: f64, mask_angle_deg: f64, step_deg: f64) -> AntennaPattern {
    let a = EARTH_RADIUS_M + altitude_m;
    let edge = (EARTH_RADIUS_M * mask_angle_deg.to_radians().cos() / a).asin().to_degrees();
    let mut samples = Vec::new();
    let mut eta: f64 = 0.0;
    loop {
        let e = eta.min(edge);
        let s = e.to_radians().sin();
        let d = a * e.to_radians().cos() - (EARTH_RADIUS_M.powi(2) - (a * s).powi(2)).sqrt();
        samples.push((e, 20.0 * (d / altitude_m).log10()));
        if e >= edge {
            break;
        }
        eta += step_deg;
    }
    AntennaPattern { samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn iso() -> AntennaPattern {
        AntennaPattern::isotropic()
    }

    fn spec(planes: u32, per_plane: u32, inc: f64) -> ConstellationSpec {
        ConstellationSpec {
            planes,
            sats_per_plane: per_plane,
            inclination_deg: inc,
            altitude_m: 525e3,
            phasing_offset_deg: 0.0,
            tx_eirp_dbw: 10.0,
            tx_pattern: iso(),
        }
    }

    #[test]
    fn period_at_525_km() {
        assert!((orbital_period(525e3) / 5705.0 - 1.0).abs() < 2e-3);
    }

    #[test]
    fn epoch_convention() {
        let s = propagate_constellation(&spec(3, 4, 53.0), 0.0);
        assert_eq!(s[0].position, [EARTH_RADIUS_M + 525e3, 0.0, 0.0]);
        assert_eq!((s[0].plane, s[0].slot), (0, 0));
        assert_eq!(s.len(), 12);
    }

    #[test]
    fn free_space_example() {
        assert_abs_diff_eq!(-fspl_db(1.0e6, 1575.42e6), -156.39, epsilon = 0.01);
        assert_abs_diff_eq!(fspl_db(2.0e6, 1575.42e6) - fspl_db(1.0e6, 1575.42e6), 6.02, epsilon = 0.005);
    }

    #[test]
    fn received_power_overhead_and_mask() {
        let sat = SatState {
            position: [EARTH_RADIUS_M + 1.0e6, 0.0, 0.0],
            plane: 0,
            slot: 0,
        };
        let user = UserPoint::new(0.0, 0.0, 5.0, iso()).unwrap();
        let p = received_power(&sat, &user, 0.0, 0.0, &iso(), 1575.42e6).unwrap();
        assert_abs_diff_eq!(p, -156.39, epsilon = 0.01);
        let far = UserPoint::new(0.0, 120.0, 5.0, iso()).unwrap();
        assert!(received_power(&sat, &far, 0.0, 0.0, &iso(), 1575.42e6).is_none());
    }

    #[test]
    fn single_satellite_is_zero_db() {
        let s = spec(1, 1, 0.0);
        let user = UserPoint::new(0.0, 0.0, 5.0, iso()).unwrap();
        let r = aggregation_gain(&s, &[user], &[0.0], 1575.42e6).unwrap();
        assert_eq!(r.g_agg_db, 0.0);
        assert_eq!(r.visible_count, 1);
    }

    #[test]
    fn n_equal_satellites() {
        for n in [2u32, 5, 12] {
            let s = spec(n, 1, 90.0);
            let t = orbital_period(s.altitude_m) / 4.0;
            let user = UserPoint::new(90.0, 0.0, 5.0, iso()).unwrap();
            let r = aggregation_gain(&s, &[user], &[t], 1575.42e6).unwrap();
            assert_abs_diff_eq!(r.g_agg_db, 10.0 * (n as f64).log10(), epsilon = 0.01);
        }
    }

    #[test]
    fn never_visible_is_an_error() {
        let s = spec(1, 1, 0.0);
        let user = UserPoint::new(0.0, 180.0, 5.0, iso()).unwrap();
        assert!(matches!(
            aggregation_gain(&s, &[user], &[0.0], 1575.42e6),
            Err(Error::NeverVisible)
        ));
        assert!(aggregation_gain(&s, &[], &[0.0], 1.0).is_err());
    }

    #[test]
    fn user_point_validation() {
        assert!(UserPoint::new(91.0, 0.0, 5.0, iso()).is_err());
        assert!(UserPoint::new(0.0, 0.0, 90.0, iso()).is_err());
    }

    #[test]
    fn iso_flux_equalizes_power() {
        let alt = 525e3;
        let pat = iso_flux_pattern(alt, 5.0, 1.0);
        let s = ConstellationSpec {
            tx_pattern: pat.clone(),
            ..spec(1, 1, 0.0)
        };
        let user = UserPoint::new(0.0, 0.0, 5.0, iso()).unwrap();
        let best = max_single_rip(&s, &user, 1.5e9);
        for el in [5.0, 20.0, 45.0, 90.0] {
            let (d, off) = slant_geometry(alt, el);
            let p = link_power(10.0, &pat, &iso(), off, el, d, 1.5e9);
            assert!((best - p).abs() < 0.1, "{el}: {p} vs {best}");
        }
    }

    #[test]
    fn longitude_rotation_symmetry() {
        let planes = 6;
        let s = ConstellationSpec {
            phasing_offset_deg: 0.0,
            ..spec(planes, 8, 60.0)
        };
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 30.0).collect();
        let run = |lon0: f64| {
            let users: Vec<UserPoint> = (0..7)
                .flat_map(|i| (0..6).map(move |j| (-60.0 + 20.0 * i as f64, lon0 + 10.0 * j as f64)))
                .map(|(lat, lon)| UserPoint::new(lat, lon, 5.0, iso()).unwrap())
                .collect();
            aggregation_gain(&s, &users, &times, 1.2e9).unwrap().g_agg_db
        };
        let spacing = 360.0 / planes as f64;
        assert!((run(0.0) - run(spacing)).abs() < 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn circular_radius(t in 0.0f64..1e6, inc in 0.0f64..180.0, alt in 3e5f64..2e7) {
            let s = ConstellationSpec { altitude_m: alt, inclination_deg: inc, ..spec(4, 5, 0.0) };
            for sat in propagate_constellation(&s, t) {
                prop_assert!((norm(sat.position) - (EARTH_RADIUS_M + alt)).abs() < 1.0);
            }
        }

        #[test]
        fn adding_a_satellite_never_decreases_power(t in 0.0f64..6000.0, lat in -80.0f64..80.0, lon in 0.0f64..360.0) {
            let s = spec(4, 10, 70.0);
            let user = UserPoint::new(lat, lon, 5.0, iso()).unwrap();
            let all = propagate_constellation(&s, t);
            let (full, n_full) = aggregate_power(&all, &user, t, &s, 1.5e9);
            let (part, n_part) = aggregate_power(&all[..all.len() - 1], &user, t, &s, 1.5e9);
            prop_assert!(n_full >= n_part);
            prop_assert!(full >= part || (n_full == 0 && n_part == 0));
        }

        #[test]
        fn eirp_offset_invariance(offset in -20.0f64..20.0) {
            let s = spec(3, 6, 60.0);
            let users: Vec<UserPoint> = [0.0, 30.0, 60.0].iter()
                .map(|&lat| UserPoint::new(lat, 10.0, 5.0, iso()).unwrap())
                .collect();
            let times: Vec<f64> = (0..20).map(|k| k as f64 * 120.0).collect();
            let a = aggregation_gain(&s, &users, &times, 1.5e9).unwrap();
            let shifted = ConstellationSpec { tx_eirp_dbw: s.tx_eirp_dbw + offset, ..s.clone() };
            let b = aggregation_gain(&shifted, &users, &times, 1.5e9).unwrap();
            prop_assert!((a.g_agg_db - b.g_agg_db).abs() < 1e-9);
        }
    }
}
