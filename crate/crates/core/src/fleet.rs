//! Aircraft kinematics and logistics, and execution of tactic triplets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fire::{FireView, Footprint, SpreadParams};
use crate::world::{BurnPhase, CellCoord, GridMap, NEIGHBOR_OFFSETS};

pub const TACTIC_COUNT: usize = 24;

/// Radius, in cells, searched by follow-the-front tracking.
pub const FOLLOW_RADIUS_CELLS: f64 = 10.0;
/// Candidate headings of a direct drop.
pub const DIRECT_HEADINGS: usize = 16;
/// Scale of the containment ellipse around the burning set.
pub const ELLIPSE_SCALE: f64 = 1.5;

/// Cruise altitude bands, meters.
const TRANSIT_ALTITUDE: f64 = 300.0;
const DROP_ALTITUDE: f64 = 50.0;
pub const MAX_ALTITUDE: f64 = TRANSIT_ALTITUDE;

#[derive(Debug, Error, PartialEq)]
pub enum FleetError {
    #[error("tactic index {0} outside 0..24")]
    OutOfRange(usize),
    #[error("no fire has been observed")]
    NoFire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectPoi {
    WaterResources,
    CombustibleVegetation,
    UpslopeSpread,
    IndirectEllipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackPoi {
    Direct,
    Indirect,
    FollowFireFront,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuppressMode {
    DirectSuppress,
    IndirectSuppress,
}

const SELECTS: [SelectPoi; 4] = [
    SelectPoi::WaterResources,
    SelectPoi::CombustibleVegetation,
    SelectPoi::UpslopeSpread,
    SelectPoi::IndirectEllipse,
];
const TRACKS: [TrackPoi; 3] = [
    TrackPoi::Direct,
    TrackPoi::Indirect,
    TrackPoi::FollowFireFront,
];
const SUPPRESSES: [SuppressMode; 2] =
    [SuppressMode::DirectSuppress, SuppressMode::IndirectSuppress];

/// One of the 24 (select, track, suppress) triplets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tactic {
    pub select: SelectPoi,
    pub track: TrackPoi,
    pub suppress: SuppressMode,
}

impl Tactic {
    /// Mixed-radix code `select·6 + track·2 + suppress`.
    pub fn encode(self) -> usize {
        let s = SELECTS.iter().position(|&v| v == self.select).unwrap();
        let t = TRACKS.iter().position(|&v| v == self.track).unwrap();
        let m = SUPPRESSES.iter().position(|&v| v == self.suppress).unwrap();
        s * 6 + t * 2 + m
    }
}

pub fn decode_tactic(index: usize) -> Result<Tactic, FleetError> {
    if index >= TACTIC_COUNT {
        return Err(FleetError::OutOfRange(index));
    }
    Ok(Tactic {
        select: SELECTS[index / 6],
        track: TRACKS[(index / 2) % 3],
        suppress: SUPPRESSES[index % 2],
    })
}

fn default_scoop_time() -> u32 {
    2
}
fn default_refuel_time() -> u32 {
    20
}
fn default_drop_length() -> f64 {
    400.0
}
fn default_drop_width() -> f64 {
    60.0
}

/// Per-aircraft entry of a scenario's fleet list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub cruise_speed_mps: f64,
    pub capacity_l: f64,
    /// Propellant fraction per airborne minute.
    pub burn_rate_per_min: f64,
    /// Index into the scenario's airport list.
    pub start_airport: usize,
    #[serde(default = "default_scoop_time")]
    pub scoop_time_min: u32,
    #[serde(default = "default_refuel_time")]
    pub refuel_time_min: u32,
    #[serde(default = "default_drop_length")]
    pub drop_length_m: f64,
    #[serde(default = "default_drop_width")]
    pub drop_width_m: f64,
}

impl AircraftSpec {
    /// DHC-515 ballpark: 333 km/h cruise, 7000 L tank, about four hours endurance.
    pub fn dhc515(start_airport: usize) -> Self {
        AircraftSpec {
            kind: "DHC-515".into(),
            cruise_speed_mps: 92.5,
            capacity_l: 7000.0,
            burn_rate_per_min: 1.0 / 240.0,
            start_airport,
            scoop_time_min: default_scoop_time(),
            refuel_time_min: default_refuel_time(),
            drop_length_m: default_drop_length(),
            drop_width_m: default_drop_width(),
        }
    }

    pub fn check(&self, airports: usize) -> Result<(), &'static str> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.cruise_speed_mps) {
            return Err("cruise_speed_mps");
        }
        if !pos(self.capacity_l) {
            return Err("capacity_l");
        }
        if !(pos(self.burn_rate_per_min) && self.burn_rate_per_min < 1.0) {
            return Err("burn_rate_per_min");
        }
        if self.start_airport >= airports {
            return Err("start_airport");
        }
        if !pos(self.drop_length_m) {
            return Err("drop_length_m");
        }
        if !pos(self.drop_width_m) {
            return Err("drop_width_m");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlightPhase {
    AtBase,
    Transit,
    Scooping,
    Dropping,
    Refueling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Leg {
    Water(CellCoord),
    Poi,
    Airport(CellCoord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aircraft {
    pub id: usize,
    /// Meters; `z` follows fixed altitude bands per phase.
    pub position: (f64, f64, f64),
    /// m/s.
    pub cruise_speed: f64,
    /// Liters.
    pub water_capacity: f64,
    /// Liters on board.
    pub payload: f64,
    /// Fuel fraction in `[0, 1]`.
    pub propellant: f64,
    /// Fraction per airborne minute.
    pub burn_rate: f64,
    pub phase: FlightPhase,
    pub current_poi: Option<CellCoord>,
    leg: Option<Leg>,
    timer: f64,
    scoop_time: f64,
    refuel_time: f64,
    drop_length: f64,
    drop_width: f64,
}

/// A suppressant drop emitted by an aircraft.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropEvent {
    pub aircraft: usize,
    pub footprint: Footprint,
    /// Liters.
    pub amount: f64,
    pub mode: SuppressMode,
}

/// Everything targeting needs to know about the current fire.
#[derive(Debug, Clone, Copy)]
pub struct Targeting<'a> {
    pub map: &'a GridMap,
    pub view: &'a FireView,
    pub spread: &'a SpreadParams,
    /// Degrees, same convention as `WeatherState::wind_direction`.
    pub wind_direction: f64,
    /// Per-cell meters to the nearest water source.
    pub water_distance: &'a [f64],
}

impl Aircraft {
    pub fn from_spec(id: usize, spec: &AircraftSpec, map: &GridMap) -> Self {
        let (x, y) = map.cell_center_m(map.airports[spec.start_airport]);
        Aircraft {
            id,
            position: (x, y, 0.0),
            cruise_speed: spec.cruise_speed_mps,
            water_capacity: spec.capacity_l,
            payload: 0.0,
            propellant: 1.0,
            burn_rate: spec.burn_rate_per_min,
            phase: FlightPhase::AtBase,
            current_poi: None,
            leg: None,
            timer: 0.0,
            scoop_time: spec.scoop_time_min as f64,
            refuel_time: spec.refuel_time_min as f64,
            drop_length: spec.drop_length_m,
            drop_width: spec.drop_width_m,
        }
    }

    pub fn xy(&self) -> (f64, f64) {
        (self.position.0, self.position.1)
    }

    pub fn is_airborne(&self) -> bool {
        matches!(
            self.phase,
            FlightPhase::Transit | FlightPhase::Scooping | FlightPhase::Dropping
        )
    }

    pub fn is_returning(&self) -> bool {
        matches!(self.leg, Some(Leg::Airport(_)))
    }

    fn meters_per_minute(&self) -> f64 {
        self.cruise_speed * 60.0
    }

    fn set_phase(&mut self, phase: FlightPhase) {
        self.phase = phase;
        self.position.2 = match phase {
            FlightPhase::Transit => TRANSIT_ALTITUDE,
            FlightPhase::Dropping => DROP_ALTITUDE,
            FlightPhase::AtBase | FlightPhase::Refueling | FlightPhase::Scooping => 0.0,
        };
    }

    fn depart(&mut self, leg: Leg) {
        self.leg = Some(leg);
        self.set_phase(FlightPhase::Transit);
    }

    /// Moves towards `target` for `dt` minutes; returns whether it arrived
    /// and the fraction of `dt` spent flying.
    fn fly_towards(&mut self, target: (f64, f64), dt: f64) -> (bool, f64) {
        let (x, y) = self.xy();
        let dist = (target.0 - x).hypot(target.1 - y);
        let reach = self.meters_per_minute() * dt;
        if dist <= reach {
            self.position.0 = target.0;
            self.position.1 = target.1;
            (true, if reach > 0.0 { dist / reach } else { 0.0 })
        } else {
            let k = reach / dist;
            self.position.0 += (target.0 - x) * k;
            self.position.1 += (target.1 - y) * k;
            (false, 1.0)
        }
    }

    fn burn(&mut self, minutes: f64) {
        self.propellant = (self.propellant - self.burn_rate * minutes).clamp(0.0, 1.0);
    }
}

/// Propellant left after reserving enough to reach the nearest airport.
pub fn return_margin(aircraft: &Aircraft, map: &GridMap) -> f64 {
    let dist = map
        .nearest(aircraft.xy(), &map.airports)
        .map_or(0.0, |(_, d)| d);
    aircraft.propellant - aircraft.burn_rate * (dist / aircraft.cruise_speed / 60.0)
}

fn argmax_by<F: Fn(usize) -> f64>(cands: &[usize], score: F) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &c in cands {
        let s = score(c);
        match best {
            Some((_, b)) if b >= s => {}
            _ => best = Some((c, s)),
        }
    }
    best.map(|(c, _)| c)
}

fn neighbor_towards(map: &GridMap, idx: usize, bearing: f64) -> Option<(usize, f64)> {
    let k = ((bearing.rem_euclid(360.0) / 45.0).round() as usize) % 8;
    let (dx, dy) = NEIGHBOR_OFFSETS[k];
    let (x, y) = map.coord(idx);
    let (nx, ny) = (x as isize + dx, y as isize + dy);
    map.in_bounds(nx, ny).then(|| {
        let run = map.cell_size * ((dx * dx + dy * dy) as f64).sqrt();
        (ny as usize * map.width + nx as usize, run)
    })
}

/// Picks a point of interest for `select`; ties resolve to the lowest cell index.
pub fn select_poi(select: SelectPoi, t: &Targeting<'_>) -> Result<CellCoord, FleetError> {
    let map = t.map;
    let view = t.view;
    let center = view.center.ok_or(FleetError::NoFire)?;
    let candidates: &[usize] = if !view.frontier.is_empty() {
        &view.frontier
    } else {
        &view.burning
    };
    if candidates.is_empty() {
        return Ok(round_to_cell(map, center));
    }
    let chosen = match select {
        SelectPoi::WaterResources => argmax_by(candidates, |i| -t.water_distance[i]),
        SelectPoi::CombustibleVegetation => argmax_by(candidates, |i| {
            match neighbor_towards(map, i, t.wind_direction) {
                Some((n, _)) => {
                    let c = &map.cells[n];
                    match (c.phase, c.fuel) {
                        (BurnPhase::Combustible, Some(fuel)) => {
                            t.spread.fuel_flammability(fuel) * c.fuel_load
                        }
                        _ => 0.0,
                    }
                }
                None => 0.0,
            }
        }),
        SelectPoi::UpslopeSpread => argmax_by(candidates, |i| {
            match neighbor_towards(map, i, view.spread_angle) {
                Some((n, run)) => {
                    ((map.cells[n].elevation - map.cells[i].elevation) / run).max(0.0)
                }
                None => 0.0,
            }
        }),
        SelectPoi::IndirectEllipse => {
            return Ok(ellipse_point(map, &view.burning, center, view.spread_angle));
        }
    };
    Ok(map.coord(chosen.expect("candidates are non-empty")))
}

fn round_to_cell(map: &GridMap, (x, y): (f64, f64)) -> CellCoord {
    (
        x.round().clamp(0.0, (map.width - 1) as f64) as usize,
        y.round().clamp(0.0, (map.height - 1) as f64) as usize,
    )
}

/// Point at `bearing` on the axis-aligned bounding ellipse of `burning`,
/// scaled by `ELLIPSE_SCALE` about `center`.
fn ellipse_point(map: &GridMap, burning: &[usize], center: (f64, f64), bearing: f64) -> CellCoord {
    let (mut ax, mut by) = (0.0f64, 0.0f64);
    for &i in burning {
        let (x, y) = map.coord(i);
        ax = ax.max((x as f64 - center.0).abs());
        by = by.max((y as f64 - center.1).abs());
    }
    // half a cell so a single burning cell still has an extent
    let (a, b) = (ax + 0.5, by + 0.5);
    let (s, c) = bearing.to_radians().sin_cos();
    round_to_cell(
        map,
        (
            center.0 + ELLIPSE_SCALE * a * c,
            center.1 + ELLIPSE_SCALE * b * s,
        ),
    )
}

/// Updates a point of interest according to the tracking rule.
pub fn track_poi(tactic: Tactic, current: CellCoord, t: &Targeting<'_>) -> CellCoord {
    match tactic.track {
        TrackPoi::Direct => current,
        TrackPoi::Indirect => {
            let phase = t.map.cell(current).phase;
            if matches!(phase, BurnPhase::Burnt | BurnPhase::Extinguishing) {
                select_poi(tactic.select, t).unwrap_or(current)
            } else {
                current
            }
        }
        TrackPoi::FollowFireFront => {
            let (cx, cy) = (current.0 as f64, current.1 as f64);
            let near: Vec<usize> = t
                .view
                .frontier
                .iter()
                .copied()
                .filter(|&i| {
                    let (x, y) = t.map.coord(i);
                    (x as f64 - cx).hypot(y as f64 - cy) <= FOLLOW_RADIUS_CELLS
                })
                .collect();
            argmax_by(&near, |i| t.view.spread_rate[i] as f64).map_or(current, |i| t.map.coord(i))
        }
    }
}

/// Drop footprint for the aircraft's current position.
fn plan_drop(a: &Aircraft, mode: SuppressMode, t: &Targeting<'_>) -> Footprint {
    let map = t.map;
    let here = a.xy();
    match mode {
        SuppressMode::DirectSuppress => {
            let mut best: Option<(Footprint, f64)> = None;
            for k in 0..DIRECT_HEADINGS {
                let heading = k as f64 * 360.0 / DIRECT_HEADINGS as f64;
                let fp = Footprint::centered(here, heading, a.drop_length, a.drop_width);
                let score: f64 = fp
                    .covered_cells(map)
                    .into_iter()
                    .map(|i| match map.cells[i].phase {
                        BurnPhase::EarlyBurning | BurnPhase::FullBurning => 1.0,
                        BurnPhase::Extinguishing => -0.5,
                        _ => 0.0,
                    })
                    .sum();
                match best {
                    Some((_, b)) if b >= score => {}
                    _ => best = Some((fp, score)),
                }
            }
            best.expect("at least one heading").0
        }
        SuppressMode::IndirectSuppress => {
            let (s, c) = t.view.spread_angle.to_radians().sin_cos();
            let ahead = 1.5 * map.cell_size;
            let center = (here.0 + c * ahead, here.1 + s * ahead);
            Footprint::centered(
                center,
                t.view.spread_angle + 90.0,
                a.drop_length,
                a.drop_width,
            )
        }
    }
}

/// Advances one aircraft by `dt` minutes and returns the drops it made.
///
/// Leaves for the nearest airport whenever an airborne aircraft's return
/// margin falls to two minutes of burn, which keeps the reserve positive
/// through the next step.
pub fn advance_aircraft(
    a: &mut Aircraft,
    tactic: Tactic,
    t: &Targeting<'_>,
    dt: f64,
) -> Vec<DropEvent> {
    assert!(dt > 0.0, "dt must be positive");
    let map = t.map;
    let mut drops = Vec::new();

    if a.is_airborne() && !a.is_returning() && return_margin(a, map) <= 2.0 * a.burn_rate * dt {
        let (base, _) = map
            .nearest(a.xy(), &map.airports)
            .expect("scenario has airports");
        a.depart(Leg::Airport(base));
    }

    if let Some(poi) = a.current_poi {
        if !a.is_returning() {
            a.current_poi = Some(track_poi(tactic, poi, t));
        }
    }

    match a.phase {
        FlightPhase::AtBase => {
            if a.payload > 0.0 && a.current_poi.is_some() {
                a.depart(Leg::Poi);
            } else {
                let (water, _) = map
                    .nearest(a.xy(), &map.water_sources)
                    .expect("scenario has water");
                a.depart(Leg::Water(water));
            }
            fly_leg(a, map, dt);
        }
        FlightPhase::Transit => fly_leg(a, map, dt),
        FlightPhase::Scooping => {
            a.burn(dt);
            a.timer -= dt;
            if a.timer <= 0.0 {
                a.payload = a.water_capacity;
                a.depart(Leg::Poi);
            }
        }
        FlightPhase::Dropping => {
            a.burn(dt);
            if a.payload > 0.0 {
                drops.push(DropEvent {
                    aircraft: a.id,
                    footprint: plan_drop(a, tactic.suppress, t),
                    amount: a.payload,
                    mode: tactic.suppress,
                });
                a.payload = 0.0;
            }
            let (water, _) = map
                .nearest(a.xy(), &map.water_sources)
                .expect("scenario has water");
            a.depart(Leg::Water(water));
        }
        FlightPhase::Refueling => {
            a.timer -= dt;
            if a.timer <= 0.0 {
                a.propellant = 1.0;
                a.leg = None;
                a.set_phase(FlightPhase::AtBase);
            }
        }
    }
    drops
}

fn fly_leg(a: &mut Aircraft, map: &GridMap, dt: f64) {
    let target = match a.leg {
        Some(Leg::Water(c)) | Some(Leg::Airport(c)) => map.cell_center_m(c),
        Some(Leg::Poi) => match a.current_poi {
            Some(c) => map.cell_center_m(c),
            None => {
                // nothing to attack yet: loiter
                a.burn(dt);
                return;
            }
        },
        None => return,
    };
    let (arrived, used) = a.fly_towards(target, dt);
    a.burn(dt * used);
    if !arrived {
        return;
    }
    match a.leg {
        Some(Leg::Water(_)) => {
            if a.payload < a.water_capacity {
                a.timer = a.scoop_time;
                a.set_phase(FlightPhase::Scooping);
            } else {
                a.depart(Leg::Poi);
            }
        }
        Some(Leg::Poi) => a.set_phase(FlightPhase::Dropping),
        Some(Leg::Airport(_)) => {
            a.timer = a.refuel_time;
            a.set_phase(FlightPhase::Refueling);
        }
        None => {}
    }
}

#[cfg(test)]
mod tests;
