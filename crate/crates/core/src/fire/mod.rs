//! Probabilistic cellular fire: ignition, phase dwell, spread, suppression,
//! damage accounting and fire-front statistics.

mod damage;
mod stats;
mod suppress;

pub use damage::{accrue_damage, full_burn_damage, DamageLedger, RegionMaxima};
pub use stats::{
    fire_stats, water_distance_field, FireStats, FireView, RecentIgnitions, SPREAD_WINDOW_MIN,
};
pub use suppress::{apply_suppressant, Footprint, SuppressionOutcome};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{
    BurnPhase, CellCoord, FuelType, GridMap, WeatherConfig, WeatherState, NEIGHBOR_OFFSETS,
};

#[derive(Debug, Error, PartialEq)]
pub enum FireError {
    #[error("cell ({0}, {1}) is out of bounds")]
    OutOfBounds(isize, isize),
    #[error("cell ({0}, {1}) is not combustible")]
    NotFlammable(usize, usize),
    #[error("suppression footprint has zero length")]
    DegenerateFootprint,
    #[error("suppression footprint needs positive width and amount")]
    InvalidFootprint,
}

/// Coefficients of the per-minute ignition law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpreadParams {
    /// Ignition probability per minute from one fully burning neighbour
    /// before weather, fuel and terrain factors.
    pub base_ignition_prob: f64,
    /// Multipliers indexed by `FuelType::index`.
    pub flammability: [f64; 4],
    /// Per m/s of wind speed.
    pub wind_coupling: f64,
    /// Per radian of upslope angle.
    pub slope_coupling: f64,
    pub temp_coupling: f64,
    pub humidity_coupling: f64,
    /// Minutes.
    pub early_dwell: f64,
    pub full_dwell: f64,
    pub extinguish_dwell: f64,
    /// Liters per m² that fully saturate fuel.
    pub saturation_l_per_m2: f64,
}

impl Default for SpreadParams {
    fn default() -> Self {
        SpreadParams {
            base_ignition_prob: 0.03,
            flammability: [1.0, 1.2, 1.4, 0.8],
            wind_coupling: 0.12,
            slope_coupling: 2.0,
            temp_coupling: 0.5,
            humidity_coupling: 0.5,
            early_dwell: 10.0,
            full_dwell: 30.0,
            extinguish_dwell: 20.0,
            saturation_l_per_m2: 0.4,
        }
    }
}

impl SpreadParams {
    pub fn check(&self) -> Result<(), &'static str> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !nonneg(self.base_ignition_prob) {
            return Err("fire.base_ignition_prob");
        }
        if !self.flammability.iter().all(|&v| nonneg(v)) {
            return Err("fire.flammability");
        }
        if !nonneg(self.wind_coupling) {
            return Err("fire.wind_coupling");
        }
        if !nonneg(self.slope_coupling) {
            return Err("fire.slope_coupling");
        }
        if !nonneg(self.temp_coupling) {
            return Err("fire.temp_coupling");
        }
        if !(nonneg(self.humidity_coupling) && self.humidity_coupling <= 1.0) {
            return Err("fire.humidity_coupling");
        }
        for (key, v) in [
            ("fire.early_dwell", self.early_dwell),
            ("fire.full_dwell", self.full_dwell),
            ("fire.extinguish_dwell", self.extinguish_dwell),
            ("fire.saturation_l_per_m2", self.saturation_l_per_m2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(key);
            }
        }
        Ok(())
    }

    pub fn fuel_flammability(&self, fuel: FuelType) -> f64 {
        self.flammability[fuel.index()]
    }

    /// Per-minute probability that a fully burning source ignites a
    /// combustible target.
    pub fn ignition_probability(&self, f: &IgnitionFactors) -> f64 {
        let p = self.base_ignition_prob
            * self.fuel_flammability(f.fuel)
            * (self.wind_coupling * f.wind_speed * f.wind_alignment).exp()
            * (1.0 + self.slope_coupling * f.slope_rad.max(0.0))
            * (1.0 + self.temp_coupling * f.temp_norm)
            * (1.0 - self.humidity_coupling * f.humidity_norm)
            * (1.0 - f.moisture);
        if p.is_nan() {
            0.0
        } else {
            p.clamp(0.0, 1.0)
        }
    }

    fn dwell(&self, phase: BurnPhase) -> Option<(f64, BurnPhase)> {
        match phase {
            BurnPhase::EarlyBurning => Some((self.early_dwell, BurnPhase::FullBurning)),
            BurnPhase::FullBurning => Some((self.full_dwell, BurnPhase::Extinguishing)),
            BurnPhase::Extinguishing => Some((self.extinguish_dwell, BurnPhase::Burnt)),
            _ => None,
        }
    }
}

/// Inputs of the ignition law for one source/target pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgnitionFactors {
    pub fuel: FuelType,
    pub moisture: f64,
    /// m/s.
    pub wind_speed: f64,
    /// cos of the angle between wind direction and source-to-target bearing.
    pub wind_alignment: f64,
    /// Upslope angle from source to target, radians.
    pub slope_rad: f64,
    /// Temperature normalized to the scenario range, `[0, 1]`.
    pub temp_norm: f64,
    /// Humidity normalized to the scenario range, `[0, 1]`.
    pub humidity_norm: f64,
}

/// Weather as the spread law consumes it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FireWeather {
    pub temp_norm: f64,
    pub humidity_norm: f64,
    pub wind_speed: f64,
    pub wind_direction: f64,
}

fn range_norm(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

impl FireWeather {
    pub fn new(state: &WeatherState, config: &WeatherConfig) -> Self {
        FireWeather {
            temp_norm: range_norm(state.temperature, config.temp_range),
            humidity_norm: range_norm(state.humidity, config.humidity_range),
            wind_speed: state.wind_speed,
            wind_direction: state.wind_direction,
        }
    }

    pub fn calm() -> Self {
        FireWeather {
            temp_norm: 0.0,
            humidity_norm: 0.0,
            wind_speed: 0.0,
            wind_direction: 0.0,
        }
    }
}

/// Bearing in degrees of a grid offset, measured from +x towards +y.
pub fn bearing_deg(dx: f64, dy: f64) -> f64 {
    let b = dy.atan2(dx).to_degrees().rem_euclid(360.0);
    if b >= 360.0 {
        0.0
    } else {
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub cell: usize,
    pub from: BurnPhase,
    pub to: BurnPhase,
}

pub fn ignite(map: &mut GridMap, at: (isize, isize)) -> Result<Transition, FireError> {
    if !map.in_bounds(at.0, at.1) {
        return Err(FireError::OutOfBounds(at.0, at.1));
    }
    let coord: CellCoord = (at.0 as usize, at.1 as usize);
    let idx = map.index(coord);
    let cell = &mut map.cells[idx];
    if cell.phase != BurnPhase::Combustible {
        return Err(FireError::NotFlammable(coord.0, coord.1));
    }
    cell.phase = BurnPhase::EarlyBurning;
    cell.phase_age = 0.0;
    Ok(Transition {
        cell: idx,
        from: BurnPhase::Combustible,
        to: BurnPhase::EarlyBurning,
    })
}

/// Advances the fire by `dt` minutes.
///
/// Ignitions are decided against the phases at entry: each combustible cell
/// with fully burning neighbours draws one uniform variate (row-major order)
/// against `1 - Π(1 - p_k)^dt`. Burning cells then age by `dt` and move on
/// when their dwell expires. Newly ignited cells start with age zero.
pub fn step_fire<R: Rng + ?Sized>(
    map: &mut GridMap,
    weather: &FireWeather,
    params: &SpreadParams,
    dt: f64,
    rng: &mut R,
) -> Vec<Transition> {
    assert!(dt > 0.0, "dt must be positive");
    let n = map.len();
    let w = map.width;

    let wind_rad = weather.wind_direction.to_radians();
    let alignment: [f64; 8] = NEIGHBOR_OFFSETS.map(|(dx, dy)| {
        let b = (dy as f64).atan2(dx as f64);
        (wind_rad - b).cos()
    });

    // survival probability of each candidate target, accumulated per source
    let mut survive: Vec<(usize, f64)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for src in 0..n {
        if map.cells[src].phase != BurnPhase::FullBurning {
            continue;
        }
        let (sx, sy) = (src % w, src / w);
        let src_elev = map.cells[src].elevation;
        for (k, &(dx, dy)) in NEIGHBOR_OFFSETS.iter().enumerate() {
            let tx = sx as isize + dx;
            let ty = sy as isize + dy;
            if !map.in_bounds(tx, ty) {
                continue;
            }
            let t = ty as usize * w + tx as usize;
            let target = &map.cells[t];
            if target.phase != BurnPhase::Combustible {
                continue;
            }
            let Some(fuel) = target.fuel else { continue };
            let run = map.cell_size * ((dx * dx + dy * dy) as f64).sqrt();
            let p = params.ignition_probability(&IgnitionFactors {
                fuel,
                moisture: target.moisture,
                wind_speed: weather.wind_speed,
                wind_alignment: alignment[k],
                slope_rad: ((target.elevation - src_elev) / run).atan(),
                temp_norm: weather.temp_norm,
                humidity_norm: weather.humidity_norm,
            });
            let keep = (1.0 - p).powf(dt);
            if slot[t] == usize::MAX {
                slot[t] = survive.len();
                survive.push((t, keep));
            } else {
                survive[slot[t]].1 *= keep;
            }
        }
    }
    survive.sort_unstable_by_key(|&(t, _)| t);

    let mut ignitions = Vec::new();
    for &(t, keep) in &survive {
        let p = 1.0 - keep;
        if p <= 0.0 {
            continue;
        }
        if p >= 1.0 || rng.random::<f64>() < p {
            ignitions.push(t);
        }
    }

    let mut transitions: Vec<Transition> = ignitions
        .iter()
        .map(|&t| Transition {
            cell: t,
            from: BurnPhase::Combustible,
            to: BurnPhase::EarlyBurning,
        })
        .collect();
    for (idx, cell) in map.cells.iter_mut().enumerate() {
        if let Some((dwell, next)) = params.dwell(cell.phase) {
            cell.phase_age += dt;
            if cell.phase_age >= dwell {
                transitions.push(Transition {
                    cell: idx,
                    from: cell.phase,
                    to: next,
                });
                cell.phase_age = 0.0;
                cell.phase = next;
            }
        }
    }
    for &t in &ignitions {
        let c = &mut map.cells[t];
        c.phase = BurnPhase::EarlyBurning;
        c.phase_age = 0.0;
    }
    transitions
}

#[cfg(test)]
mod tests;
