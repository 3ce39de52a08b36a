//! Scenario files: TOML documents describing terrain, weather, fleet,
//! episode timing, damage coefficients and the region's damage maxima.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Cell, CellCoord, FuelType, GridMap, TerrainClass, WeatherConfig};
use crate::env::EpisodeConfig;
use crate::fire::{full_burn_damage, RegionMaxima, SpreadParams};
use crate::fleet::AircraftSpec;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

impl ScenarioError {
    fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ScenarioError::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Key named by a validation error.
    pub fn key(&self) -> Option<&str> {
        match self {
            ScenarioError::Validation { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Per-cell damage coefficients applied when a cell finishes burning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DamageCoeffs {
    /// Euros per urban cell burnt.
    pub cost_per_urban_cell: f64,
    /// Euros per forest cell burnt.
    pub cost_per_forest_cell: f64,
    /// Tonnes CO₂ per kg of fuel consumed.
    pub emissions_per_kg_fuel: f64,
    /// Fraction of an urban cell's population lost when it burns.
    pub lethality: f64,
}

/// A fully validated scenario. Immutable once loaded; episodes clone the map.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub map: GridMap,
    pub ignition: CellCoord,
    pub weather: WeatherConfig,
    pub fleet: Vec<AircraftSpec>,
    pub episode: EpisodeConfig,
    pub maxima: RegionMaxima,
    pub damage: DamageCoeffs,
    pub spread: SpreadParams,
    urban_fuel: FuelType,
    base_moisture: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    ignition: [usize; 2],
    airports: Vec<[usize; 2]>,
    water_sources: Vec<[usize; 2]>,
    grid: GridSection,
    weather: WeatherSection,
    episode: EpisodeSection,
    maxima: MaximaSection,
    damage: DamageCoeffs,
    #[serde(default)]
    fire: SpreadParams,
    fleet: Vec<AircraftSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    width: usize,
    height: usize,
    cell_size_m: f64,
    #[serde(default = "default_urban_fuel")]
    urban_fuel: char,
    #[serde(default = "default_population_density")]
    population_density: f64,
    #[serde(default = "default_base_moisture")]
    base_moisture: f64,
    /// Row-major terrain codes; whitespace is ignored.
    terrain: String,
    elevation: Vec<f64>,
}

fn default_urban_fuel() -> char {
    'L'
}
fn default_population_density() -> f64 {
    0.004
}
fn default_base_moisture() -> f64 {
    0.08
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeatherSection {
    temp_min: f64,
    temp_max: f64,
    hum_min: f64,
    hum_max: f64,
    wind_base: f64,
    wind_amp: f64,
    wind_period: f64,
    day_length: u32,
    wind_jitter: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EpisodeSection {
    step_minutes: u32,
    max_steps: u32,
    detection_delay_min: u32,
    #[serde(default = "default_discount")]
    discount: f64,
}

fn default_discount() -> f64 {
    0.99
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MaximaSection {
    #[serde(rename = "MBA")]
    mba: f64,
    #[serde(rename = "MCA")]
    mca: f64,
    #[serde(rename = "ME")]
    me: f64,
    #[serde(rename = "MC")]
    mc: f64,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    if text.trim().is_empty() {
        return Err(ScenarioError::Parse("empty scenario file".into()));
    }
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    Scenario::from_file(file)
}

fn check_nonneg(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(
            key,
            format!("must be finite and >= 0, got {v}"),
        ))
    }
}

fn check_pos(key: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ScenarioError::invalid(
            key,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

impl Scenario {
    fn from_file(f: ScenarioFile) -> Result<Self, ScenarioError> {
        let g = &f.grid;
        if g.width == 0 {
            return Err(ScenarioError::invalid("grid.width", "must be > 0"));
        }
        if g.height == 0 {
            return Err(ScenarioError::invalid("grid.height", "must be > 0"));
        }
        check_pos("grid.cell_size_m", g.cell_size_m)?;
        check_nonneg("grid.population_density", g.population_density)?;
        if !(0.0..=1.0).contains(&g.base_moisture) {
            return Err(ScenarioError::invalid(
                "grid.base_moisture",
                "must lie in [0, 1]",
            ));
        }
        let urban_fuel = FuelType::from_code(g.urban_fuel)
            .ok_or_else(|| ScenarioError::invalid("grid.urban_fuel", "expected one of P/L/N/F"))?;

        let n = g.width * g.height;
        let codes: Vec<char> = g.terrain.chars().filter(|c| !c.is_whitespace()).collect();
        if codes.len() != n {
            return Err(ScenarioError::invalid(
                "grid.terrain",
                format!("expected {n} codes, found {}", codes.len()),
            ));
        }
        if g.elevation.len() != n {
            return Err(ScenarioError::invalid(
                "grid.elevation",
                format!("expected {n} values, found {}", g.elevation.len()),
            ));
        }
        let mut cells = Vec::with_capacity(n);
        for (i, (&code, &elev)) in codes.iter().zip(&g.elevation).enumerate() {
            if !elev.is_finite() {
                return Err(ScenarioError::invalid(
                    format!("grid.elevation[{i}]"),
                    "not finite",
                ));
            }
            let (terrain, fuel) = match code {
                'R' => (TerrainClass::Road, None),
                'W' => (TerrainClass::Water, None),
                'U' => (TerrainClass::Urban, Some(urban_fuel)),
                c => match FuelType::from_code(c) {
                    Some(fuel) => (TerrainClass::Forest, Some(fuel)),
                    None => {
                        return Err(ScenarioError::invalid(
                            format!("grid.terrain[{i}]"),
                            format!("unknown terrain code {c:?}"),
                        ))
                    }
                },
            };
            cells.push(Cell::new(terrain, fuel, elev, g.base_moisture));
        }

        let in_bounds = |[x, y]: [usize; 2]| x < g.width && y < g.height;
        let mut map = GridMap {
            width: g.width,
            height: g.height,
            cell_size: g.cell_size_m,
            cells,
            airports: Vec::with_capacity(f.airports.len()),
            water_sources: Vec::with_capacity(f.water_sources.len()),
            population_density: g.population_density,
        };
        if f.airports.is_empty() {
            return Err(ScenarioError::invalid(
                "airports",
                "at least one airport required",
            ));
        }
        for (i, &a) in f.airports.iter().enumerate() {
            let key = format!("airports[{i}]");
            if !in_bounds(a) {
                return Err(ScenarioError::invalid(key, "out of bounds"));
            }
            if map.cell((a[0], a[1])).terrain == TerrainClass::Water {
                return Err(ScenarioError::invalid(key, "airport on a water cell"));
            }
            map.airports.push((a[0], a[1]));
        }
        if f.water_sources.is_empty() {
            return Err(ScenarioError::invalid(
                "water_sources",
                "at least one water source required",
            ));
        }
        for (i, &w) in f.water_sources.iter().enumerate() {
            let key = format!("water_sources[{i}]");
            if !in_bounds(w) {
                return Err(ScenarioError::invalid(key, "out of bounds"));
            }
            if map.cell((w[0], w[1])).terrain != TerrainClass::Water {
                return Err(ScenarioError::invalid(key, "not a water cell"));
            }
            map.water_sources.push((w[0], w[1]));
        }
        if !in_bounds(f.ignition) {
            return Err(ScenarioError::invalid("ignition", "out of bounds"));
        }
        let ignition = (f.ignition[0], f.ignition[1]);
        if !map.cell(ignition).terrain.is_flammable() {
            return Err(ScenarioError::invalid(
                "ignition",
                "must be a forest or urban cell",
            ));
        }

        let w = &f.weather;
        let weather = WeatherConfig {
            temp_range: (w.temp_min, w.temp_max),
            humidity_range: (w.hum_min, w.hum_max),
            base_wind_speed: w.wind_base,
            wind_sine_amplitude: w.wind_amp,
            wind_sine_period: w.wind_period,
            day_length: w.day_length,
            wind_jitter_halfwidth: w.wind_jitter,
        };
        weather
            .check()
            .map_err(|key| ScenarioError::invalid(key, "weather invariant violated"))?;

        let e = &f.episode;
        let episode = EpisodeConfig {
            step_minutes: e.step_minutes,
            max_steps: e.max_steps,
            detection_delay_min: e.detection_delay_min,
            discount: e.discount,
        };
        episode
            .check()
            .map_err(|key| ScenarioError::invalid(key, "episode invariant violated"))?;
        if e.detection_delay_min + e.step_minutes * e.max_steps > w.day_length {
            return Err(ScenarioError::invalid(
                "weather.day_length",
                "episode (detection delay plus decision horizon) must fit in one day",
            ));
        }

        let d = &f.damage;
        check_nonneg("damage.cost_per_urban_cell", d.cost_per_urban_cell)?;
        check_nonneg("damage.cost_per_forest_cell", d.cost_per_forest_cell)?;
        check_nonneg("damage.emissions_per_kg_fuel", d.emissions_per_kg_fuel)?;
        check_nonneg("damage.lethality", d.lethality)?;

        let maxima = RegionMaxima {
            mba: f.maxima.mba,
            mca: f.maxima.mca,
            me: f.maxima.me,
            mc: f.maxima.mc,
        };
        let worst = full_burn_damage(&map, &f.damage);
        for (key, max, total) in [
            ("maxima.MBA", maxima.mba, worst.burnt_area),
            ("maxima.MCA", maxima.mca, worst.cost),
            ("maxima.ME", maxima.me, worst.emissions),
            ("maxima.MC", maxima.mc, worst.casualties),
        ] {
            check_pos(key, max)?;
            // small relative slack for values written with limited precision
            if total > max * (1.0 + 1e-9) {
                return Err(ScenarioError::invalid(
                    key,
                    format!("below the damage of burning the whole region ({total})"),
                ));
            }
        }

        f.fire
            .check()
            .map_err(|key| ScenarioError::invalid(key, "spread parameter invariant violated"))?;

        if f.fleet.is_empty() {
            return Err(ScenarioError::invalid(
                "fleet",
                "at least one aircraft required",
            ));
        }
        for (i, a) in f.fleet.iter().enumerate() {
            a.check(map.airports.len()).map_err(|field| {
                ScenarioError::invalid(format!("fleet[{i}].{field}"), "invalid aircraft spec")
            })?;
        }

        Ok(Scenario {
            map,
            ignition,
            weather,
            fleet: f.fleet,
            episode,
            maxima,
            damage: f.damage,
            spread: f.fire,
            urban_fuel,
            base_moisture: f.grid.base_moisture,
        })
    }

    pub fn fleet_size(&self) -> usize {
        self.fleet.len()
    }

    /// Serializes back to the scenario file format.
    pub fn to_toml_string(&self) -> String {
        let m = &self.map;
        let terrain = m
            .cells
            .chunks(m.width)
            .map(|row| row.iter().map(Cell::code).collect::<String>())
            .collect::<Vec<_>>()
            .join("\n");
        let file = ScenarioFile {
            ignition: [self.ignition.0, self.ignition.1],
            airports: m.airports.iter().map(|&(x, y)| [x, y]).collect(),
            water_sources: m.water_sources.iter().map(|&(x, y)| [x, y]).collect(),
            grid: GridSection {
                width: m.width,
                height: m.height,
                cell_size_m: m.cell_size,
                urban_fuel: self.urban_fuel.code(),
                population_density: m.population_density,
                base_moisture: self.base_moisture,
                terrain,
                elevation: m.cells.iter().map(|c| c.elevation).collect(),
            },
            weather: WeatherSection {
                temp_min: self.weather.temp_range.0,
                temp_max: self.weather.temp_range.1,
                hum_min: self.weather.humidity_range.0,
                hum_max: self.weather.humidity_range.1,
                wind_base: self.weather.base_wind_speed,
                wind_amp: self.weather.wind_sine_amplitude,
                wind_period: self.weather.wind_sine_period,
                day_length: self.weather.day_length,
                wind_jitter: self.weather.wind_jitter_halfwidth,
            },
            episode: EpisodeSection {
                step_minutes: self.episode.step_minutes,
                max_steps: self.episode.max_steps,
                detection_delay_min: self.episode.detection_delay_min,
                discount: self.episode.discount,
            },
            maxima: MaximaSection {
                mba: self.maxima.mba,
                mca: self.maxima.mca,
                me: self.maxima.me,
                mc: self.maxima.mc,
            },
            damage: self.damage,
            fire: self.spread.clone(),
            fleet: self.fleet.clone(),
        };
        toml::to_string(&file).expect("scenario serializes")
    }
}
