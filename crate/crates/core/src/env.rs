//! Markov decision process over the fire and fleet simulation.
//!
//! A decision step lasts `step_minutes` one-minute sub-steps. In each sub-step
//! aircraft advance in id order, their drops are applied, then the fire
//! advances and burnt cells are charged to the damage ledger. The reward of a
//! step is the change in measure of effectiveness (MoE) over it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fire::{
    accrue_damage, apply_suppressant, ignite, step_fire, water_distance_field, DamageLedger,
    FireStats, FireView, FireWeather, Footprint, RecentIgnitions, RegionMaxima,
};
use crate::fleet::{
    advance_aircraft, decode_tactic, return_margin, select_poi, Aircraft, DropEvent, SuppressMode,
    Tactic, Targeting, MAX_ALTITUDE, TACTIC_COUNT,
};
use crate::rng::{stream_rng, Stream, StreamRng};
use crate::world::{weather_at, GridMap, Scenario, WeatherState};

/// Length of the decision horizon in minutes.
pub const HORIZON_MINUTES: u32 = 960;
pub const ENV_FEATURES: usize = 16;
pub const AIRCRAFT_FEATURES: usize = 6;

pub fn observation_len(fleet_size: usize) -> usize {
    ENV_FEATURES + AIRCRAFT_FEATURES * fleet_size
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub step_minutes: u32,
    pub max_steps: u32,
    pub detection_delay_min: u32,
    /// Discount of the episode return, in `(0, 1]`.
    pub discount: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            step_minutes: 10,
            max_steps: 96,
            detection_delay_min: 60,
            discount: 0.99,
        }
    }
}

impl EpisodeConfig {
    pub fn check(&self) -> Result<(), &'static str> {
        if self.step_minutes == 0 {
            return Err("episode.step_minutes");
        }
        if self.max_steps == 0 || self.step_minutes * self.max_steps != HORIZON_MINUTES {
            return Err("episode.max_steps");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err("episode.discount");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    Running,
    Contained,
    TimeLimit,
    OutOfBound,
}

impl Termination {
    pub fn is_done(self) -> bool {
        self != Termination::Running
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    /// MoE change over the step.
    pub reward: f64,
    pub done: bool,
    pub termination: Termination,
    pub moe: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum MoeError {
    #[error("{field} ratio {ratio} exceeds 1; region maxima are mis-specified")]
    MaximaViolation { field: &'static str, ratio: f64 },
}

/// `1 - (BA/MBA + CA/MCA + E/ME + C/MC) / 4 - out_of_bound`.
pub fn compute_moe(
    ledger: &DamageLedger,
    maxima: &RegionMaxima,
    out_of_bound: bool,
) -> Result<f64, MoeError> {
    let ratios = [
        ("BA", ledger.burnt_area / maxima.mba),
        ("CA", ledger.cost / maxima.mca),
        ("E", ledger.emissions / maxima.me),
        ("C", ledger.casualties / maxima.mc),
    ];
    let mut sum = 0.0;
    for (field, ratio) in ratios {
        // tolerate accumulated rounding at the exact maximum
        if !(ratio <= 1.0 + 1e-9) {
            return Err(MoeError::MaximaViolation { field, ratio });
        }
        sum += ratio.min(1.0);
    }
    Ok(1.0 - 0.25 * sum - if out_of_bound { 1.0 } else { 0.0 })
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("environment has not been reset")]
    NotInitialized,
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("expected {expected} actions, got {got}")]
    WrongActionCount { expected: usize, got: usize },
    #[error("aircraft {aircraft}: tactic index {index} outside 0..24")]
    InvalidAction { aircraft: usize, index: usize },
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error(transparent)]
    Moe(#[from] MoeError),
}

/// Fixed per-scenario constants that scale raw observables into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalization {
    pub map_diagonal_m: f64,
    pub map_width_m: f64,
    pub map_height_m: f64,
    pub day_length_min: f64,
    pub flammable_cells: f64,
    pub max_wind_speed: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub hum_min: f64,
    pub hum_max: f64,
    pub max_altitude_m: f64,
}

impl ObsNormalization {
    pub fn for_scenario(s: &Scenario) -> Self {
        let m = &s.map;
        ObsNormalization {
            map_diagonal_m: m.diagonal_m(),
            map_width_m: m.width as f64 * m.cell_size,
            map_height_m: m.height as f64 * m.cell_size,
            day_length_min: s.weather.day_length as f64,
            flammable_cells: m.flammable_count().max(1) as f64,
            max_wind_speed: s.weather.max_wind_speed().max(f64::MIN_POSITIVE),
            temp_min: s.weather.temp_range.0,
            temp_max: s.weather.temp_range.1,
            hum_min: s.weather.humidity_range.0,
            hum_max: s.weather.humidity_range.1,
            max_altitude_m: MAX_ALTITUDE,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![
            self.map_diagonal_m,
            self.map_width_m,
            self.map_height_m,
            self.day_length_min,
            self.flammable_cells,
            self.max_wind_speed,
            self.temp_min,
            self.temp_max,
            self.hum_min,
            self.hum_max,
            self.max_altitude_m,
        ]
    }

    pub fn from_slice(v: &[f64]) -> Option<Self> {
        let &[map_diagonal_m, map_width_m, map_height_m, day_length_min, flammable_cells, max_wind_speed, temp_min, temp_max, hum_min, hum_max, max_altitude_m] =
            v
        else {
            return None;
        };
        Some(ObsNormalization {
            map_diagonal_m,
            map_width_m,
            map_height_m,
            day_length_min,
            flammable_cells,
            max_wind_speed,
            temp_min,
            temp_max,
            hum_min,
            hum_max,
            max_altitude_m,
        })
    }
}

fn unit(v: f64) -> f64 {
    if v.is_finite() {
        v.clamp(0.0, 1.0)
    } else {
        0.0
    }
}

fn span(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        unit((v - lo) / (hi - lo))
    } else {
        0.0
    }
}

/// Observation vector in the fixed feature order.
pub fn build_observation(
    n: &ObsNormalization,
    weather: &WeatherState,
    stats: &FireStats,
    minute: u32,
    fleet: &[Aircraft],
    map: &GridMap,
) -> Vec<f64> {
    let diag = n.map_diagonal_m;
    let (cx, cy) = stats.fire_center.unwrap_or((
        (map.width as f64 - 1.0) / 2.0,
        (map.height as f64 - 1.0) / 2.0,
    ));
    let mut obs = Vec::with_capacity(observation_len(fleet.len()));
    obs.extend([
        span(weather.temperature, n.temp_min, n.temp_max),
        span(weather.humidity, n.hum_min, n.hum_max),
        unit(weather.wind_speed / n.max_wind_speed),
        unit(weather.wind_direction / 360.0),
        unit(stats.dist_to_fireline / diag),
        unit(stats.dist_to_water / diag),
        unit(stats.active_front_count as f64 / n.flammable_cells),
        unit(stats.burnt_fraction),
        unit((n.day_length_min - minute as f64) / n.day_length_min),
        unit((cx + 0.5) * map.cell_size / n.map_width_m),
        unit((cy + 0.5) * map.cell_size / n.map_height_m),
        unit(stats.spread_angle / 360.0),
    ]);
    obs.extend(stats.dist_to_boundaries.iter().map(|d| unit(d / diag)));
    for a in fleet {
        obs.extend([
            unit(a.position.0 / n.map_width_m),
            unit(a.position.1 / n.map_height_m),
            unit(a.position.2 / n.max_altitude_m),
            if a.payload > 0.0 { 1.0 } else { 0.0 },
            unit(a.propellant),
            unit(return_margin(a, map)),
        ]);
    }
    obs
}

#[derive(Debug, Clone)]
struct Episode {
    seed: u64,
    map: GridMap,
    aircraft: Vec<Aircraft>,
    ledger: DamageLedger,
    recent: RecentIgnitions,
    view: FireView,
    fireline: Vec<Footprint>,
    minute: u32,
    step: u32,
    fire_rng: StreamRng,
    moe_initial: f64,
    moe: f64,
    out_of_bound: bool,
    termination: Termination,
    last_drops: Vec<DropEvent>,
}

/// One simulated fire. Owns all mutable state; many instances may run in
/// parallel over a shared `Scenario`.
#[derive(Debug, Clone)]
pub struct Environment {
    scenario: Arc<Scenario>,
    water_distance: Arc<Vec<f64>>,
    norm: ObsNormalization,
    episode: Option<Episode>,
}

impl Environment {
    pub fn new(scenario: Arc<Scenario>) -> Self {
        let water_distance = Arc::new(water_distance_field(&scenario.map));
        let norm = ObsNormalization::for_scenario(&scenario);
        Environment {
            scenario,
            water_distance,
            norm,
            episode: None,
        }
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn normalization(&self) -> &ObsNormalization {
        &self.norm
    }

    pub fn fleet_size(&self) -> usize {
        self.scenario.fleet.len()
    }

    pub fn observation_len(&self) -> usize {
        observation_len(self.fleet_size())
    }

    /// Ignites the scenario's fire, lets it burn undetected for the detection
    /// delay and puts the fleet on its start airports.
    pub fn reset(&mut self, episode_seed: u64) -> Result<Vec<f64>, EnvError> {
        let sc = Arc::clone(&self.scenario);
        let mut map = sc.map.clone();
        let (ix, iy) = sc.ignition;
        ignite(&mut map, (ix as isize, iy as isize))
            .map_err(|e| EnvError::Scenario(e.to_string()))?;
        let aircraft = sc
            .fleet
            .iter()
            .enumerate()
            .map(|(id, spec)| Aircraft::from_spec(id, spec, &map))
            .collect();
        let recent = RecentIgnitions::default();
        let view = FireView::observe(&map, &recent, None, 0.0);
        let mut ep = Episode {
            seed: episode_seed,
            map,
            aircraft,
            ledger: DamageLedger::default(),
            recent,
            view,
            fireline: Vec::new(),
            minute: 0,
            step: 0,
            fire_rng: stream_rng(episode_seed, Stream::Fire),
            moe_initial: 0.0,
            moe: 0.0,
            out_of_bound: false,
            termination: Termination::Running,
            last_drops: Vec::new(),
        };
        for _ in 0..sc.episode.detection_delay_min {
            self.advance_fire(&mut ep)?;
        }
        ep.moe = compute_moe(&ep.ledger, &sc.maxima, ep.out_of_bound)?;
        ep.moe_initial = ep.moe;
        self.episode = Some(ep);
        self.observe()
    }

    fn weather(&self, ep: &Episode) -> Result<WeatherState, EnvError> {
        weather_at(&self.scenario.weather, ep.minute, ep.seed)
            .map_err(|e| EnvError::Scenario(e.to_string()))
    }

    fn advance_fire(&self, ep: &mut Episode) -> Result<(), EnvError> {
        let sc = &self.scenario;
        let weather = self.weather(ep)?;
        let fw = FireWeather::new(&weather, &sc.weather);
        let transitions = step_fire(&mut ep.map, &fw, &sc.spread, 1.0, &mut ep.fire_rng);
        ep.ledger = accrue_damage(&ep.ledger, &transitions, &ep.map, &sc.damage);
        ep.minute += 1;
        ep.recent.record(ep.minute, &transitions);
        ep.view = FireView::observe(&ep.map, &ep.recent, ep.view.center, ep.view.spread_angle);
        if ep.view.burning.iter().any(|&i| ep.map.is_edge(i)) {
            ep.out_of_bound = true;
        }
        Ok(())
    }

    pub fn step(&mut self, actions: &[usize]) -> Result<StepResult, EnvError> {
        let mut ep = self.episode.take().ok_or(EnvError::NotInitialized)?;
        let result = self.step_episode(&mut ep, actions);
        self.episode = Some(ep);
        result
    }

    fn step_episode(&self, ep: &mut Episode, actions: &[usize]) -> Result<StepResult, EnvError> {
        if ep.termination.is_done() {
            return Err(EnvError::EpisodeFinished);
        }
        if actions.len() != ep.aircraft.len() {
            return Err(EnvError::WrongActionCount {
                expected: ep.aircraft.len(),
                got: actions.len(),
            });
        }
        let tactics: Vec<Tactic> = actions
            .iter()
            .enumerate()
            .map(|(aircraft, &index)| {
                decode_tactic(index).map_err(|_| EnvError::InvalidAction { aircraft, index })
            })
            .collect::<Result<_, _>>()?;

        let sc = Arc::clone(&self.scenario);
        ep.last_drops.clear();

        let weather = self.weather(ep)?;
        {
            let targeting = Targeting {
                map: &ep.map,
                view: &ep.view,
                spread: &sc.spread,
                wind_direction: weather.wind_direction,
                water_distance: &self.water_distance,
            };
            for (a, tactic) in ep.aircraft.iter_mut().zip(&tactics) {
                if let Ok(poi) = select_poi(tactic.select, &targeting) {
                    a.current_poi = Some(poi);
                }
            }
        }

        for _ in 0..sc.episode.step_minutes {
            let weather = self.weather(ep)?;
            for (i, tactic) in tactics.iter().enumerate() {
                let drops = {
                    let targeting = Targeting {
                        map: &ep.map,
                        view: &ep.view,
                        spread: &sc.spread,
                        wind_direction: weather.wind_direction,
                        water_distance: &self.water_distance,
                    };
                    advance_aircraft(&mut ep.aircraft[i], *tactic, &targeting, 1.0)
                };
                if drops.is_empty() {
                    continue;
                }
                for d in &drops {
                    // zero-length footprints cannot occur for positive drop lengths
                    if apply_suppressant(
                        &mut ep.map,
                        &d.footprint,
                        d.amount,
                        sc.spread.saturation_l_per_m2,
                    )
                    .is_ok()
                        && d.mode == SuppressMode::IndirectSuppress
                    {
                        ep.fireline.push(d.footprint);
                    }
                }
                ep.last_drops.extend(drops);
                ep.view =
                    FireView::observe(&ep.map, &ep.recent, ep.view.center, ep.view.spread_angle);
            }
            self.advance_fire(ep)?;
        }
        ep.step += 1;

        let moe = compute_moe(&ep.ledger, &sc.maxima, ep.out_of_bound)?;
        let reward = moe - ep.moe;
        ep.moe = moe;
        ep.termination = if ep.out_of_bound {
            Termination::OutOfBound
        } else if ep.view.burning.is_empty() {
            Termination::Contained
        } else if ep.step >= sc.episode.max_steps {
            Termination::TimeLimit
        } else {
            Termination::Running
        };
        let next_state = self.observation_of(ep)?;
        Ok(StepResult {
            next_state,
            reward,
            done: ep.termination.is_done(),
            termination: ep.termination,
            moe,
        })
    }

    fn observation_of(&self, ep: &Episode) -> Result<Vec<f64>, EnvError> {
        let weather = self.weather(ep)?;
        let stats = ep.view.stats(&ep.map, &ep.fireline, &self.water_distance);
        Ok(build_observation(
            &self.norm,
            &weather,
            &stats,
            ep.minute,
            &ep.aircraft,
            &ep.map,
        ))
    }

    pub fn observe(&self) -> Result<Vec<f64>, EnvError> {
        let ep = self.episode.as_ref().ok_or(EnvError::NotInitialized)?;
        self.observation_of(ep)
    }

    fn ep(&self) -> Result<&Episode, EnvError> {
        self.episode.as_ref().ok_or(EnvError::NotInitialized)
    }

    pub fn map(&self) -> Result<&GridMap, EnvError> {
        Ok(&self.ep()?.map)
    }

    pub fn aircraft(&self) -> Result<&[Aircraft], EnvError> {
        Ok(&self.ep()?.aircraft)
    }

    pub fn ledger(&self) -> Result<DamageLedger, EnvError> {
        Ok(self.ep()?.ledger)
    }

    pub fn moe(&self) -> Result<f64, EnvError> {
        Ok(self.ep()?.moe)
    }

    pub fn initial_moe(&self) -> Result<f64, EnvError> {
        Ok(self.ep()?.moe_initial)
    }

    pub fn termination(&self) -> Result<Termination, EnvError> {
        Ok(self.ep()?.termination)
    }

    pub fn minute(&self) -> Result<u32, EnvError> {
        Ok(self.ep()?.minute)
    }

    pub fn steps_taken(&self) -> Result<u32, EnvError> {
        Ok(self.ep()?.step)
    }

    pub fn episode_seed(&self) -> Result<u64, EnvError> {
        Ok(self.ep()?.seed)
    }

    pub fn fire_stats(&self) -> Result<FireStats, EnvError> {
        let ep = self.ep()?;
        Ok(ep.view.stats(&ep.map, &ep.fireline, &self.water_distance))
    }

    pub fn fireline(&self) -> Result<&[Footprint], EnvError> {
        Ok(&self.ep()?.fireline)
    }

    /// Drops made during the last decision step.
    pub fn last_drops(&self) -> Result<&[DropEvent], EnvError> {
        Ok(&self.ep()?.last_drops)
    }

    pub fn weather_now(&self) -> Result<WeatherState, EnvError> {
        self.weather(self.ep()?)
    }
}

/// Number of distinct actions per aircraft.
pub const ACTIONS_PER_AIRCRAFT: usize = TACTIC_COUNT;
