use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::testutil::{forest, set_terrain};
use crate::world::{DamageCoeffs, FuelType, TerrainClass};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn set_phase(map: &mut GridMap, at: (usize, usize), phase: BurnPhase) {
    map.cell_mut(at).phase = phase;
}

fn coeffs() -> DamageCoeffs {
    DamageCoeffs {
        cost_per_urban_cell: 1.0e6,
        cost_per_forest_cell: 1.0e4,
        emissions_per_kg_fuel: 0.0016,
        lethality: 0.05,
    }
}

#[test]
fn ignite_cases() {
    let mut m = forest(5, 5);
    set_terrain(&mut m, (1, 1), TerrainClass::Water);
    let before = m.clone();
    let t = ignite(&mut m, (2, 3)).unwrap();
    assert_eq!(t.cell, m.index((2, 3)));
    assert_eq!(m.cell((2, 3)).phase, BurnPhase::EarlyBurning);
    let changed = (0..m.len())
        .filter(|&i| m.cells[i] != before.cells[i])
        .count();
    assert_eq!(changed, 1);
    assert_eq!(ignite(&mut m, (1, 1)), Err(FireError::NotFlammable(1, 1)));
    assert_eq!(ignite(&mut m, (2, 3)), Err(FireError::NotFlammable(2, 3)));
    assert_eq!(ignite(&mut m, (-1, 0)), Err(FireError::OutOfBounds(-1, 0)));
    assert_eq!(ignite(&mut m, (0, 5)), Err(FireError::OutOfBounds(0, 5)));
}

#[test]
fn no_fire_is_a_fixed_point() {
    let mut m = forest(6, 6);
    let before = m.clone();
    let t = step_fire(
        &mut m,
        &FireWeather::calm(),
        &SpreadParams::default(),
        1.0,
        &mut rng(0),
    );
    assert!(t.is_empty());
    assert_eq!(m, before);
}

#[test]
fn one_minute_ignition_frequency_matches_law() {
    // calm, flat pine, dry: p = base probability exactly
    let params = SpreadParams::default();
    let trials = 20_000;
    let mut hits = 0usize;
    let mut r = rng(1);
    for _ in 0..trials {
        let mut m = forest(3, 3);
        set_phase(&mut m, (1, 1), BurnPhase::FullBurning);
        let t = step_fire(&mut m, &FireWeather::calm(), &params, 1.0, &mut r);
        hits += t.iter().filter(|t| t.to == BurnPhase::EarlyBurning).count();
    }
    let p = params.base_ignition_prob;
    let n = (trials * 8) as f64;
    let f = hits as f64 / n;
    let sigma = (p * (1.0 - p) / n).sqrt();
    assert!((f - p).abs() < 3.0 * sigma, "{f} vs {p}");
}

#[test]
fn calm_spread_is_symmetric_under_rotation() {
    let n = 13;
    let c = 6;
    let trials = 1000;
    let params = SpreadParams::default();
    let mut counts = vec![0usize; n * n];
    let mut r = rng(2);
    for _ in 0..trials {
        let mut m = forest(n, n);
        set_phase(&mut m, (c, c), BurnPhase::FullBurning);
        for _ in 0..40 {
            step_fire(&mut m, &FireWeather::calm(), &params, 1.0, &mut r);
        }
        for (i, cell) in m.cells.iter().enumerate() {
            if cell.phase != BurnPhase::Combustible {
                counts[i] += 1;
            }
        }
    }
    let freq = |x: usize, y: usize| counts[y * n + x] as f64 / trials as f64;
    let mut compared = 0;
    for y in 0..n {
        for x in 0..n {
            // rotate by 90° about the ignition cell
            let (rx, ry) = (c + c - y, c + x - c);
            let (p, q) = (freq(x, y), freq(rx, ry));
            let var = (p * (1.0 - p) + q * (1.0 - q)) / trials as f64;
            if var == 0.0 {
                assert_eq!(p, q);
                continue;
            }
            compared += 1;
            assert!((p - q).abs() < 3.0 * var.sqrt(), "({x},{y}): {p} vs {q}");
        }
    }
    assert!(compared > 8);
}

#[test]
fn saturated_neighbours_never_ignite() {
    let mut m = forest(5, 5);
    for c in m.cells.iter_mut() {
        c.moisture = 1.0;
    }
    set_phase(&mut m, (2, 2), BurnPhase::FullBurning);
    let mut r = rng(3);
    for _ in 0..100 {
        let t = step_fire(
            &mut m,
            &FireWeather::calm(),
            &SpreadParams::default(),
            1.0,
            &mut r,
        );
        assert!(t.iter().all(|t| t.to != BurnPhase::EarlyBurning));
    }
}

#[test]
fn wind_pushes_fire_downwind() {
    let params = SpreadParams::default();
    let weather = FireWeather {
        wind_speed: 10.0,
        wind_direction: 0.0,
        ..FireWeather::calm()
    };
    let mut east = 0;
    let mut west = 0;
    let mut r = rng(4);
    for _ in 0..2000 {
        let mut m = forest(3, 3);
        set_phase(&mut m, (1, 1), BurnPhase::FullBurning);
        for t in step_fire(&mut m, &weather, &params, 1.0, &mut r) {
            match m.coord(t.cell) {
                (2, 1) => east += 1,
                (0, 1) => west += 1,
                _ => {}
            }
        }
    }
    assert!(east > 5 * west, "{east} vs {west}");
}

fn factors() -> impl Strategy<Value = IgnitionFactors> {
    (
        0usize..4,
        0.0f64..1.0,
        0.0f64..15.0,
        -1.0f64..1.0,
        -0.5f64..0.5,
        0.0f64..1.0,
        0.0f64..1.0,
    )
        .prop_map(
            |(f, moisture, wind_speed, wind_alignment, slope_rad, temp_norm, humidity_norm)| {
                IgnitionFactors {
                    fuel: FuelType::ALL[f],
                    moisture,
                    wind_speed,
                    wind_alignment,
                    slope_rad,
                    temp_norm,
                    humidity_norm,
                }
            },
        )
}

proptest! {
    #[test]
    fn ignition_probability_is_monotone(f in factors(), d in 0.0f64..0.5) {
        let p = SpreadParams::default();
        let base = p.ignition_probability(&f);
        prop_assert!((0.0..=1.0).contains(&base));
        let up = |g: IgnitionFactors| p.ignition_probability(&g);
        let wind = up(IgnitionFactors { wind_alignment: (f.wind_alignment + d).min(1.0), ..f });
        let hot = up(IgnitionFactors { temp_norm: (f.temp_norm + d).min(1.0), ..f });
        let humid = up(IgnitionFactors { humidity_norm: (f.humidity_norm + d).min(1.0), ..f });
        let wet = up(IgnitionFactors { moisture: (f.moisture + d).min(1.0), ..f });
        let steep = up(IgnitionFactors { slope_rad: f.slope_rad + d, ..f });
        prop_assert!(wind >= base);
        prop_assert!(hot >= base);
        prop_assert!(humid <= base);
        prop_assert!(wet <= base);
        prop_assert!(steep >= base);
    }

    #[test]
    fn phases_only_move_forward_and_ledger_grows(seed in 0u64..1000, wind in 0.0f64..12.0, dir in 0.0f64..360.0) {
        let mut m = forest(12, 12);
        set_terrain(&mut m, (3, 3), TerrainClass::Urban);
        set_terrain(&mut m, (4, 4), TerrainClass::Road);
        set_phase(&mut m, (5, 5), BurnPhase::FullBurning);
        let weather = FireWeather { wind_speed: wind, wind_direction: dir, temp_norm: 0.5, humidity_norm: 0.3 };
        let params = SpreadParams { base_ignition_prob: 0.2, ..SpreadParams::default() };
        let mut r = rng(seed);
        let mut ledger = DamageLedger::default();
        for _ in 0..120 {
            let before: Vec<BurnPhase> = m.cells.iter().map(|c| c.phase).collect();
            let t = step_fire(&mut m, &weather, &params, 1.0, &mut r);
            for tr in &t {
                prop_assert_eq!(before[tr.cell], tr.from);
                prop_assert_eq!(m.cells[tr.cell].phase, tr.to);
                prop_assert!(tr.to.code() == tr.from.code() + 1);
            }
            for (i, c) in m.cells.iter().enumerate() {
                prop_assert!(c.phase.code() >= before[i].code());
            }
            let next = accrue_damage(&ledger, &t, &m, &coeffs());
            prop_assert!(next.burnt_area >= ledger.burnt_area);
            prop_assert!(next.cost >= ledger.cost);
            prop_assert!(next.emissions >= ledger.emissions);
            prop_assert!(next.casualties >= ledger.casualties);
            ledger = next;
            let stats = fire_stats(&m, &[], &RecentIgnitions::default(), None);
            prop_assert!((0.0..=1.0).contains(&stats.burnt_fraction));
        }
    }
}

#[test]
fn replay_is_bit_identical() {
    let run = |seed| {
        let mut m = forest(15, 15);
        set_phase(&mut m, (7, 7), BurnPhase::FullBurning);
        let w = FireWeather {
            wind_speed: 6.0,
            wind_direction: 45.0,
            ..FireWeather::calm()
        };
        let mut r = rng(seed);
        let mut all = Vec::new();
        for _ in 0..60 {
            all.extend(step_fire(&mut m, &w, &SpreadParams::default(), 1.0, &mut r));
        }
        (all, m)
    };
    assert_eq!(run(9), run(9));
    assert_ne!(run(9).0, run(10).0);
}

#[test]
fn burnout_leaves_everything_burnt() {
    let mut m = forest(4, 4);
    set_phase(&mut m, (0, 0), BurnPhase::FullBurning);
    let params = SpreadParams {
        base_ignition_prob: 1.0,
        ..SpreadParams::default()
    };
    let mut r = rng(5);
    for _ in 0..400 {
        step_fire(&mut m, &FireWeather::calm(), &params, 1.0, &mut r);
    }
    assert_eq!(m.count_phase(BurnPhase::Burnt), 16);
    let stats = fire_stats(&m, &[], &RecentIgnitions::default(), None);
    assert_eq!(stats.burnt_fraction, 1.0);
    assert_eq!(stats.active_front_count, 0);
}

#[test]
fn drop_on_single_burning_cell() {
    let mut m = forest(5, 5);
    set_phase(&mut m, (2, 2), BurnPhase::FullBurning);
    let fp = Footprint::centered(m.cell_center_m((2, 2)), 0.0, 50.0, 20.0);
    assert_eq!(fp.covered_cells(&m), vec![m.index((2, 2))]);
    let out = apply_suppressant(&mut m, &fp, 1000.0, 0.4).unwrap();
    assert_eq!(out.suppressed_count(), 1);
    assert_eq!(m.cell((2, 2)).phase, BurnPhase::Extinguishing);
    assert_eq!(m.cell((2, 2)).phase_age, 0.0);
}

#[test]
fn drop_on_water_changes_nothing() {
    let mut m = forest(5, 5);
    for x in 0..5 {
        set_terrain(&mut m, (x, 2), TerrainClass::Water);
    }
    let before = m.clone();
    let fp = Footprint::centered((250.0, 250.0), 0.0, 400.0, 60.0);
    let out = apply_suppressant(&mut m, &fp, 7000.0, 0.4).unwrap();
    assert_eq!(out.suppressed_count(), 0);
    assert_eq!(out.wetted, 0);
    assert_eq!(m, before);
}

#[test]
fn drop_lowers_ignition_probability() {
    let mut m = forest(5, 5);
    let params = SpreadParams::default();
    let prob = |m: &GridMap| {
        params.ignition_probability(&IgnitionFactors {
            fuel: FuelType::Pine,
            moisture: m.cell((2, 2)).moisture,
            wind_speed: 5.0,
            wind_alignment: 1.0,
            slope_rad: 0.0,
            temp_norm: 0.5,
            humidity_norm: 0.5,
        })
    };
    let before = prob(&m);
    let fp = Footprint::centered((250.0, 250.0), 90.0, 400.0, 60.0);
    let out = apply_suppressant(&mut m, &fp, 7000.0, 0.4).unwrap();
    assert!(out.wetted >= 4);
    let expected = 7000.0 / (400.0 * 60.0 * 0.4);
    assert!((m.cell((2, 2)).moisture - expected).abs() < 1e-12);
    assert!(prob(&m) < before);
}

#[test]
fn degenerate_footprints_rejected() {
    let mut m = forest(3, 3);
    let fp = Footprint {
        start: (50.0, 50.0),
        end: (50.0, 50.0),
        width: 60.0,
    };
    assert_eq!(
        apply_suppressant(&mut m, &fp, 100.0, 0.4),
        Err(FireError::DegenerateFootprint)
    );
    let thin = Footprint::centered((150.0, 150.0), 0.0, 100.0, 0.0);
    assert_eq!(
        apply_suppressant(&mut m, &thin, 100.0, 0.4),
        Err(FireError::InvalidFootprint)
    );
}

#[test]
fn diagonal_footprint_covers_the_diagonal() {
    let m = forest(6, 6);
    let fp = Footprint {
        start: (50.0, 50.0),
        end: (550.0, 550.0),
        width: 10.0,
    };
    let cells = fp.covered_cells(&m);
    for k in 0..6 {
        assert!(cells.contains(&m.index((k, k))));
    }
    assert!(!cells.contains(&m.index((5, 0))));
    assert!(!cells.contains(&m.index((0, 5))));
    assert_eq!(fp.distance_to((50.0, 50.0)), 0.0);
    assert!((fp.distance_to((550.0, 50.0)) - (250.0 * 2f64.sqrt() - 5.0)).abs() < 1e-9);
}

fn burn(m: &GridMap, at: (usize, usize)) -> Transition {
    Transition {
        cell: m.index(at),
        from: BurnPhase::Extinguishing,
        to: BurnPhase::Burnt,
    }
}

#[test]
fn forest_damage_is_emissions_not_casualties() {
    let m = forest(3, 3);
    let l = accrue_damage(&DamageLedger::default(), &[burn(&m, (1, 1))], &m, &coeffs());
    assert_eq!(l.casualties, 0.0);
    assert_eq!(l.burnt_area, 1.0e4);
    assert_eq!(l.cost, 1.0e4);
    assert!((l.emissions - 0.0016 * 3.0 * 1.0e4).abs() < 1e-12);
}

#[test]
fn urban_damage_is_casualties_not_emissions() {
    let mut m = forest(3, 3);
    set_terrain(&mut m, (1, 1), TerrainClass::Urban);
    let l = accrue_damage(&DamageLedger::default(), &[burn(&m, (1, 1))], &m, &coeffs());
    assert_eq!(l.emissions, 0.0);
    assert_eq!(l.cost, 1.0e6);
    assert!((l.casualties - 0.05 * 0.004 * 1.0e4).abs() < 1e-12);
}

#[test]
fn only_transitions_into_burnt_are_charged() {
    let m = forest(3, 3);
    let start = DamageLedger {
        burnt_area: 5.0,
        cost: 1.0,
        emissions: 2.0,
        casualties: 0.5,
    };
    assert_eq!(accrue_damage(&start, &[], &m, &coeffs()), start);
    let early = Transition {
        cell: 0,
        from: BurnPhase::Combustible,
        to: BurnPhase::EarlyBurning,
    };
    assert_eq!(accrue_damage(&start, &[early], &m, &coeffs()), start);
    let total = full_burn_damage(&m, &coeffs());
    assert_eq!(total.burnt_area, 9.0e4);
}

#[test]
fn stats_center_cases() {
    let mut m = forest(20, 20);
    set_phase(&mut m, (10, 10), BurnPhase::FullBurning);
    let s = fire_stats(&m, &[], &RecentIgnitions::default(), None);
    assert_eq!(s.fire_center, Some((10.0, 10.0)));
    assert_eq!(s.active_front_count, 1);
    assert_eq!(s.dist_to_boundaries, [1050.0, 950.0, 950.0, 1050.0]);
    assert_eq!(s.dist_to_fireline, m.diagonal_m());

    let mut m = forest(5, 5);
    set_phase(&mut m, (0, 0), BurnPhase::EarlyBurning);
    set_phase(&mut m, (2, 0), BurnPhase::FullBurning);
    let s = fire_stats(&m, &[], &RecentIgnitions::default(), None);
    assert_eq!(s.fire_center, Some((1.0, 0.0)));

    let quiet = forest(5, 5);
    let s2 = fire_stats(&quiet, &[], &RecentIgnitions::default(), Some(&s));
    assert_eq!(s2.active_front_count, 0);
    assert_eq!(s2.fire_center, Some((1.0, 0.0)));
    assert_eq!(s2.spread_angle, s.spread_angle);
}

#[test]
fn spread_angle_points_at_fastest_frontier() {
    let mut m = forest(9, 9);
    for x in 3..=5 {
        set_phase(&mut m, (x, 4), BurnPhase::FullBurning);
    }
    // recent ignitions pile up east of the line
    let mut recent = RecentIgnitions::default();
    let igs: Vec<Transition> = [(6, 4), (6, 3), (6, 5)]
        .iter()
        .map(|&c| Transition {
            cell: m.index(c),
            from: BurnPhase::Combustible,
            to: BurnPhase::EarlyBurning,
        })
        .collect();
    recent.record(1, &igs);
    let s = fire_stats(&m, &[], &recent, None);
    assert_eq!(s.fire_center, Some((4.0, 4.0)));
    assert!(s.spread_angle.abs() < 1e-9, "{}", s.spread_angle);
    // the window forgets old events
    recent.prune(1 + SPREAD_WINDOW_MIN);
    assert!(recent.is_empty());
}

#[test]
fn water_and_fireline_distances() {
    let mut m = forest(10, 10);
    m.water_sources = vec![(9, 5)];
    set_phase(&mut m, (5, 5), BurnPhase::FullBurning);
    let line = [Footprint::centered((550.0, 150.0), 0.0, 200.0, 20.0)];
    let s = fire_stats(&m, &line, &RecentIgnitions::default(), None);
    assert!((s.dist_to_water - 400.0).abs() < 1e-9);
    assert!((s.dist_to_fireline - 390.0).abs() < 1e-9);
}
