use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fire::{water_distance_field, RecentIgnitions};
use crate::testutil::{forest, set_terrain};
use crate::world::TerrainClass;

/// Owns everything a `Targeting` borrows.
struct Scene {
    map: GridMap,
    view: FireView,
    spread: SpreadParams,
    water: Vec<f64>,
    wind: f64,
}

impl Scene {
    fn new(map: GridMap) -> Self {
        let view = FireView::observe(&map, &RecentIgnitions::default(), None, 0.0);
        let water = water_distance_field(&map);
        Scene {
            map,
            view,
            spread: SpreadParams::default(),
            water,
            wind: 0.0,
        }
    }

    fn refresh(&mut self) {
        self.view = FireView::observe(
            &self.map,
            &RecentIgnitions::default(),
            self.view.center,
            0.0,
        );
        self.water = water_distance_field(&self.map);
    }

    fn targeting(&self) -> Targeting<'_> {
        Targeting {
            map: &self.map,
            view: &self.view,
            spread: &self.spread,
            wind_direction: self.wind,
            water_distance: &self.water,
        }
    }
}

fn burning(map: &mut GridMap, cells: &[(usize, usize)]) {
    for &c in cells {
        map.cell_mut(c).phase = BurnPhase::FullBurning;
    }
}

fn tactic(select: SelectPoi, track: TrackPoi, suppress: SuppressMode) -> Tactic {
    Tactic {
        select,
        track,
        suppress,
    }
}

#[test]
fn decode_examples() {
    assert_eq!(
        decode_tactic(0).unwrap(),
        tactic(
            SelectPoi::WaterResources,
            TrackPoi::Direct,
            SuppressMode::DirectSuppress
        )
    );
    assert_eq!(
        decode_tactic(7).unwrap(),
        tactic(
            SelectPoi::CombustibleVegetation,
            TrackPoi::Direct,
            SuppressMode::IndirectSuppress
        )
    );
    assert_eq!(
        decode_tactic(23).unwrap(),
        tactic(
            SelectPoi::IndirectEllipse,
            TrackPoi::FollowFireFront,
            SuppressMode::IndirectSuppress
        )
    );
    assert_eq!(decode_tactic(24), Err(FleetError::OutOfRange(24)));
    assert_eq!(
        decode_tactic(usize::MAX),
        Err(FleetError::OutOfRange(usize::MAX))
    );
}

#[test]
fn decode_is_a_bijection() {
    let mut seen = std::collections::HashSet::new();
    for i in 0..TACTIC_COUNT {
        let t = decode_tactic(i).unwrap();
        assert_eq!(t.encode(), i);
        assert!(seen.insert(t));
    }
    assert_eq!(seen.len(), 4 * 3 * 2);
}

#[test]
fn no_fire_is_an_error() {
    let s = Scene::new(forest(8, 8));
    for sel in [
        SelectPoi::WaterResources,
        SelectPoi::CombustibleVegetation,
        SelectPoi::UpslopeSpread,
        SelectPoi::IndirectEllipse,
    ] {
        assert_eq!(select_poi(sel, &s.targeting()), Err(FleetError::NoFire));
    }
}

#[test]
fn singleton_fire_is_targeted() {
    let mut m = forest(9, 9);
    burning(&mut m, &[(4, 4)]);
    let s = Scene::new(m);
    for sel in [
        SelectPoi::WaterResources,
        SelectPoi::CombustibleVegetation,
        SelectPoi::UpslopeSpread,
    ] {
        assert_eq!(select_poi(sel, &s.targeting()).unwrap(), (4, 4));
    }
    let (x, y) = select_poi(SelectPoi::IndirectEllipse, &s.targeting()).unwrap();
    assert!((x as i64 - 4).abs() <= 1 && (y as i64 - 4).abs() <= 1);
}

#[test]
fn burnt_out_fire_targets_last_center() {
    let mut m = forest(9, 9);
    burning(&mut m, &[(2, 6)]);
    let mut s = Scene::new(m);
    s.map.cell_mut((2, 6)).phase = BurnPhase::Burnt;
    s.refresh();
    assert!(s.view.burning.is_empty());
    assert_eq!(
        select_poi(SelectPoi::WaterResources, &s.targeting()).unwrap(),
        (2, 6)
    );
}

#[test]
fn water_resources_picks_cell_nearest_water() {
    let mut m = forest(12, 5);
    set_terrain(&mut m, (11, 2), TerrainClass::Water);
    m.water_sources = vec![(11, 2)];
    burning(&mut m, &[(2, 2), (5, 2), (8, 1)]);
    let s = Scene::new(m);
    assert_eq!(
        select_poi(SelectPoi::WaterResources, &s.targeting()).unwrap(),
        (8, 1)
    );
}

#[test]
fn combustible_vegetation_looks_downwind() {
    let mut m = forest(10, 5);
    burning(&mut m, &[(2, 2), (6, 2)]);
    let mut s = Scene::new(m.clone());
    // nothing distinguishes the two: lowest index wins
    assert_eq!(
        select_poi(SelectPoi::CombustibleVegetation, &s.targeting()).unwrap(),
        (2, 2)
    );

    m.cell_mut((3, 2)).phase = BurnPhase::Burnt;
    s = Scene::new(m);
    assert_eq!(
        select_poi(SelectPoi::CombustibleVegetation, &s.targeting()).unwrap(),
        (6, 2)
    );
    // with the wind reversed the burnt cell is upwind of both
    s.wind = 180.0;
    assert_eq!(
        select_poi(SelectPoi::CombustibleVegetation, &s.targeting()).unwrap(),
        (2, 2)
    );
}

#[test]
fn upslope_follows_spread_direction() {
    let mut m = forest(10, 5);
    burning(&mut m, &[(2, 2), (6, 2)]);
    m.cell_mut((7, 2)).elevation = 30.0;
    let mut s = Scene::new(m);
    s.view.spread_angle = 0.0;
    assert_eq!(
        select_poi(SelectPoi::UpslopeSpread, &s.targeting()).unwrap(),
        (6, 2)
    );
    // downhill in the spread direction scores zero, so ties fall back to index order
    s.view.spread_angle = 180.0;
    assert_eq!(
        select_poi(SelectPoi::UpslopeSpread, &s.targeting()).unwrap(),
        (2, 2)
    );
}

#[test]
fn ellipse_point_sits_outside_a_disk_fire() {
    let (cx, cy, r) = (20i64, 20i64, 4i64);
    let mut m = forest(41, 41);
    let disk: Vec<(usize, usize)> = (0..41)
        .flat_map(|y| (0..41).map(move |x| (x, y)))
        .filter(|&(x, y)| (x as i64 - cx).pow(2) + (y as i64 - cy).pow(2) <= r * r)
        .collect();
    burning(&mut m, &disk);
    let mut s = Scene::new(m);
    let expect = ELLIPSE_SCALE * (r as f64 + 0.5);
    for k in 0..8 {
        let bearing = k as f64 * 45.0;
        s.view.spread_angle = bearing;
        let (x, y) = select_poi(SelectPoi::IndirectEllipse, &s.targeting()).unwrap();
        let (s_, c_) = bearing.to_radians().sin_cos();
        let want = (cx as f64 + expect * c_, cy as f64 + expect * s_);
        assert!(
            (x as f64 - want.0).abs() <= 1.0 && (y as f64 - want.1).abs() <= 1.0,
            "bearing {bearing}: got {:?}, want {:?}",
            (x, y),
            want
        );
    }
}

#[test]
fn track_direct_keeps_poi() {
    let mut m = forest(9, 9);
    burning(&mut m, &[(4, 4)]);
    m.cell_mut((1, 1)).phase = BurnPhase::Burnt;
    let s = Scene::new(m);
    let t = tactic(
        SelectPoi::WaterResources,
        TrackPoi::Direct,
        SuppressMode::DirectSuppress,
    );
    assert_eq!(track_poi(t, (1, 1), &s.targeting()), (1, 1));
}

#[test]
fn track_indirect_retargets_only_when_burnt_out() {
    let mut m = forest(9, 9);
    burning(&mut m, &[(4, 4)]);
    m.cell_mut((1, 1)).phase = BurnPhase::Burnt;
    m.cell_mut((7, 7)).phase = BurnPhase::Extinguishing;
    let s = Scene::new(m);
    let t = tactic(
        SelectPoi::WaterResources,
        TrackPoi::Indirect,
        SuppressMode::DirectSuppress,
    );
    assert_eq!(track_poi(t, (1, 1), &s.targeting()), (4, 4));
    assert_eq!(track_poi(t, (7, 7), &s.targeting()), (4, 4));
    assert_eq!(track_poi(t, (2, 6), &s.targeting()), (2, 6));
}

#[test]
fn track_follow_front_picks_fastest_nearby() {
    let mut m = forest(40, 5);
    burning(&mut m, &[(5, 2), (8, 2), (30, 2)]);
    let mut s = Scene::new(m);
    let idx = |x: usize| 2 * 40 + x;
    s.view.spread_rate[idx(8)] = 3;
    s.view.spread_rate[idx(30)] = 9;
    let t = tactic(
        SelectPoi::WaterResources,
        TrackPoi::FollowFireFront,
        SuppressMode::DirectSuppress,
    );
    // (30, 2) is faster but 25 cells away
    assert_eq!(track_poi(t, (5, 2), &s.targeting()), (8, 2));
    // nothing within the radius
    assert_eq!(track_poi(t, (19, 2), &s.targeting()), (19, 2));
    // the radius is inclusive
    assert_eq!(track_poi(t, (18, 2), &s.targeting()), (8, 2));
}

#[test]
fn return_margin_matches_flight_time() {
    let m = forest(40, 5);
    let mut a = Aircraft::from_spec(0, &AircraftSpec::dhc515(0), &m);
    a.position = (3050.0, 50.0, TRANSIT_ALTITUDE);
    a.propellant = 0.2;
    // 3000 m at 92.5 m/s is 3000 / 5550 minutes
    let want = 0.2 - (1.0 / 240.0) * (3000.0 / 5550.0);
    assert!((return_margin(&a, &m) - want).abs() < 1e-12);
}

/// Map with the airport in one corner, a lake in the other and a fire
/// next to the lake.
fn theatre() -> Scene {
    let mut m = forest(30, 30);
    for c in [(25, 25), (26, 25), (25, 26), (26, 26)] {
        set_terrain(&mut m, c, TerrainClass::Water);
    }
    m.water_sources = vec![(25, 25)];
    burning(&mut m, &[(20, 20), (21, 20), (20, 21)]);
    Scene::new(m)
}

#[test]
fn scoop_then_drop() {
    let s = theatre();
    let spec = AircraftSpec::dhc515(0);
    let mut a = Aircraft::from_spec(0, &spec, &s.map);
    a.current_poi = Some(select_poi(SelectPoi::WaterResources, &s.targeting()).unwrap());
    let t = tactic(
        SelectPoi::WaterResources,
        TrackPoi::Direct,
        SuppressMode::DirectSuppress,
    );
    let mut phases = vec![a.phase];
    let mut drop = None;
    for minute in 0..60 {
        let d = advance_aircraft(&mut a, t, &s.targeting(), 1.0);
        phases.push(a.phase);
        if let Some(ev) = d.into_iter().next() {
            drop = Some((minute, ev));
            break;
        }
    }
    let (_, ev) = drop.expect("a drop within the hour");
    assert_eq!(ev.aircraft, 0);
    assert_eq!(ev.amount, spec.capacity_l);
    assert_eq!(ev.mode, SuppressMode::DirectSuppress);
    assert_eq!(a.payload, 0.0);
    assert!(phases.contains(&FlightPhase::Scooping));
    assert!(phases.contains(&FlightPhase::Dropping));
    let covered = ev.footprint.covered_cells(&s.map);
    assert!(covered.iter().any(|&i| s.map.cells[i].phase.is_burning()));
}

#[test]
fn loiters_without_a_target() {
    let s = theatre();
    let mut a = Aircraft::from_spec(0, &AircraftSpec::dhc515(0), &s.map);
    let t = decode_tactic(0).unwrap();
    for _ in 0..30 {
        assert!(advance_aircraft(&mut a, t, &s.targeting(), 1.0).is_empty());
    }
    assert_eq!(a.payload, a.water_capacity);
    assert!(a.propellant < 1.0);
}

#[test]
fn refuels_before_running_dry() {
    let s = theatre();
    let mut a = Aircraft::from_spec(0, &AircraftSpec::dhc515(0), &s.map);
    a.current_poi = Some((20, 20));
    let t = decode_tactic(0).unwrap();
    let mut refueled = false;
    for _ in 0..600 {
        advance_aircraft(&mut a, t, &s.targeting(), 1.0);
        refueled |= a.phase == FlightPhase::Refueling;
        assert!(a.propellant > 0.0);
    }
    assert!(refueled);
    assert!(a.propellant > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn never_runs_out_of_propellant(seed in any::<u64>(), dt in prop::sample::select(vec![1.0, 2.0, 5.0])) {
        let s = theatre();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Aircraft::from_spec(0, &AircraftSpec::dhc515(0), &s.map);
        let mut tac = decode_tactic(0).unwrap();
        let mut minute = 0.0;
        while minute < 720.0 {
            if (minute as u64).is_multiple_of(10) {
                tac = decode_tactic(rng.random_range(0..TACTIC_COUNT)).unwrap();
                if a.current_poi.is_none() || !a.is_returning() {
                    a.current_poi = Some(select_poi(tac.select, &s.targeting()).unwrap());
                }
            }
            let drops = advance_aircraft(&mut a, tac, &s.targeting(), dt);
            for d in &drops {
                prop_assert!(d.amount > 0.0 && d.amount <= a.water_capacity);
            }
            prop_assert!(a.propellant > 0.0);
            prop_assert!(a.payload >= 0.0 && a.payload <= a.water_capacity);
            prop_assert!(a.position.2 >= 0.0 && a.position.2 <= MAX_ALTITUDE);
            if a.is_airborne() {
                prop_assert!(return_margin(&a, &s.map) > 0.0);
            }
            minute += dt;
        }
    }
}
