//! Browser bindings for the bundled scenario: step a fire by hand, with
//! random tactics or with a trained checkpoint; plot the ignition law; chart
//! a day of weather.

use std::sync::Arc;

use emberops::env::{Environment, Termination};
use emberops::fire::IgnitionFactors;
use emberops::fleet::{decode_tactic, TACTIC_COUNT};
use emberops::ppo::{argmax_actions, policy_forward, Checkpoint};
use emberops::world::{parse_scenario, weather_at, FuelType, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

const SCENARIO: &str = include_str!("../../../scenarios/palisades-small.toml");

fn scenario() -> Result<Arc<Scenario>, String> {
    parse_scenario(SCENARIO)
        .map(Arc::new)
        .map_err(|e| e.to_string())
}

/// One episode on the bundled scenario.
#[wasm_bindgen]
pub struct Simulation {
    env: Environment,
    policy: Option<Checkpoint>,
    rng: ChaCha8Rng,
    state: Vec<f64>,
    last_reward: f64,
}

#[wasm_bindgen]
impl Simulation {
    /// Resets to a fresh fire; the fire has already burned through the
    /// detection delay.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u64) -> Result<Simulation, String> {
        let mut env = Environment::new(scenario()?);
        let state = env.reset(seed).map_err(|e| e.to_string())?;
        Ok(Simulation {
            env,
            policy: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            state,
            last_reward: 0.0,
        })
    }

    pub fn width(&self) -> usize {
        self.env.scenario().map.width
    }

    pub fn height(&self) -> usize {
        self.env.scenario().map.height
    }

    #[wasm_bindgen(js_name = fleetSize)]
    pub fn fleet_size(&self) -> usize {
        self.env.fleet_size()
    }

    /// Terrain code per cell, row-major.
    pub fn terrain(&self) -> String {
        self.env
            .scenario()
            .map
            .cells
            .iter()
            .map(|c| c.code())
            .collect()
    }

    /// Burn phase code per cell, row-major.
    pub fn phases(&self) -> Vec<u8> {
        self.env
            .map()
            .map(|m| m.cells.iter().map(|c| c.phase.code()).collect())
            .unwrap_or_default()
    }

    /// `x, y, payload` per aircraft, positions in cells.
    pub fn aircraft(&self) -> Vec<f64> {
        let cell = self.env.scenario().map.cell_size;
        self.env
            .aircraft()
            .map(|fleet| {
                fleet
                    .iter()
                    .flat_map(|a| [a.position.0 / cell, a.position.1 / cell, a.payload])
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn moe(&self) -> f64 {
        self.env.moe().unwrap_or(f64::NAN)
    }

    #[wasm_bindgen(js_name = lastReward)]
    pub fn last_reward(&self) -> f64 {
        self.last_reward
    }

    pub fn minute(&self) -> u32 {
        self.env.minute().unwrap_or(0)
    }

    pub fn steps(&self) -> u32 {
        self.env.steps_taken().unwrap_or(0)
    }

    pub fn termination(&self) -> String {
        let t = self.env.termination().unwrap_or(Termination::Running);
        format!("{t:?}")
    }

    pub fn done(&self) -> bool {
        self.env.termination().is_ok_and(Termination::is_done)
    }

    /// Advances one decision step with one tactic index per aircraft.
    pub fn step(&mut self, tactics: Vec<u32>) -> Result<f64, String> {
        let actions: Vec<usize> = tactics.into_iter().map(|t| t as usize).collect();
        let r = self.env.step(&actions).map_err(|e| e.to_string())?;
        self.state = r.next_state;
        self.last_reward = r.reward;
        Ok(r.reward)
    }

    /// Uniform random tactics; returns the ones taken.
    #[wasm_bindgen(js_name = stepRandom)]
    pub fn step_random(&mut self) -> Result<Vec<u32>, String> {
        let tactics: Vec<u32> = (0..self.fleet_size())
            .map(|_| self.rng.random_range(0..TACTIC_COUNT as u32))
            .collect();
        self.step(tactics.clone())?;
        Ok(tactics)
    }

    /// Loads a checkpoint written by `emberops train`.
    #[wasm_bindgen(js_name = loadPolicy)]
    pub fn load_policy(&mut self, bytes: &[u8]) -> Result<(), String> {
        let ck = Checkpoint::from_bytes(bytes).map_err(|e| e.to_string())?;
        if ck.params.input_dim != self.env.observation_len()
            || ck.params.fleet_size != self.fleet_size()
        {
            return Err(format!(
                "checkpoint expects {} inputs and {} aircraft, scenario has {} and {}",
                ck.params.input_dim,
                ck.params.fleet_size,
                self.env.observation_len(),
                self.fleet_size()
            ));
        }
        self.policy = Some(ck);
        Ok(())
    }

    #[wasm_bindgen(js_name = hasPolicy)]
    pub fn has_policy(&self) -> bool {
        self.policy.is_some()
    }

    /// Most likely tactics of the loaded policy; returns the ones taken.
    #[wasm_bindgen(js_name = stepPolicy)]
    pub fn step_policy(&mut self) -> Result<Vec<u32>, String> {
        let ck = self.policy.as_ref().ok_or("no policy loaded")?;
        let out = policy_forward(&ck.params, &self.state).map_err(|e| e.to_string())?;
        let tactics: Vec<u32> = argmax_actions(&out.logits)
            .into_iter()
            .map(|a| a as u32)
            .collect();
        self.step(tactics.clone())?;
        Ok(tactics)
    }
}

#[wasm_bindgen(js_name = tacticCount)]
pub fn tactic_count() -> usize {
    TACTIC_COUNT
}

/// Human-readable `select / track / suppress` of a tactic index.
#[wasm_bindgen(js_name = tacticLabel)]
pub fn tactic_label(index: u32) -> Result<String, String> {
    let t = decode_tactic(index as usize).map_err(|e| e.to_string())?;
    Ok(format!("{:?} / {:?} / {:?}", t.select, t.track, t.suppress))
}

/// Per-minute ignition probability of a neighbour at each whole-degree
/// bearing, with the wind blowing towards bearing 0, under the bundled
/// scenario's spread parameters. `slope_deg` is the upslope angle towards
/// every neighbour.
#[wasm_bindgen(js_name = ignitionCurve)]
pub fn ignition_curve(
    fuel: char,
    wind_speed: f64,
    slope_deg: f64,
    temp_norm: f64,
    humidity_norm: f64,
    moisture: f64,
) -> Result<Vec<f64>, String> {
    let fuel = FuelType::from_code(fuel).ok_or_else(|| format!("unknown fuel code {fuel:?}"))?;
    let spread = scenario()?.spread.clone();
    Ok((0..360)
        .map(|deg| {
            spread.ignition_probability(&IgnitionFactors {
                fuel,
                moisture,
                wind_speed,
                wind_alignment: (deg as f64).to_radians().cos(),
                slope_rad: slope_deg.to_radians(),
                temp_norm,
                humidity_norm,
            })
        })
        .collect())
}

/// `minute, temperature, humidity, wind speed, wind direction` every
/// `every` minutes over one day, flattened.
#[wasm_bindgen(js_name = weatherDay)]
pub fn weather_day(seed: u64, every: u32) -> Result<Vec<f64>, String> {
    if every == 0 {
        return Err("sampling interval must be positive".into());
    }
    let sc = scenario()?;
    let mut out = Vec::new();
    for minute in (0..=sc.weather.day_length).step_by(every as usize) {
        let w = weather_at(&sc.weather, minute, seed).map_err(|e| e.to_string())?;
        out.extend([
            minute as f64,
            w.temperature,
            w.humidity,
            w.wind_speed,
            w.wind_direction,
        ]);
    }
    Ok(out)
}
