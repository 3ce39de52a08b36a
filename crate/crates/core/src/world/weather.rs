use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{hash64, stream_seed, unit_from_hash, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherConfig {
    /// °C.
    pub temp_range: (f64, f64),
    /// Relative humidity, %.
    pub humidity_range: (f64, f64),
    /// m/s.
    pub base_wind_speed: f64,
    /// m/s, strictly below `base_wind_speed`.
    pub wind_sine_amplitude: f64,
    /// Minutes.
    pub wind_sine_period: f64,
    /// Minutes.
    pub day_length: u32,
    /// Degrees either side of the episode's base direction.
    pub wind_jitter_halfwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherState {
    pub temperature: f64,
    pub humidity: f64,
    pub wind_speed: f64,
    /// Direction the wind blows towards, degrees in `[0, 360)` measured
    /// from +x (east) towards +y (south).
    pub wind_direction: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum WeatherError {
    #[error("minute {minute} outside [0, {day_length}]")]
    OutOfRange { minute: u32, day_length: u32 },
}

impl WeatherConfig {
    /// Returns the name of the first violated invariant, if any.
    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.temp_range.0 <= self.temp_range.1) {
            return Err("weather.temp_min");
        }
        if !(self.humidity_range.0 <= self.humidity_range.1) {
            return Err("weather.hum_min");
        }
        if !(self.base_wind_speed >= 0.0) {
            return Err("weather.wind_base");
        }
        if !(self.wind_sine_amplitude >= 0.0 && self.wind_sine_amplitude < self.base_wind_speed) {
            return Err("weather.wind_amp");
        }
        if !(self.wind_sine_period > 0.0) {
            return Err("weather.wind_period");
        }
        if self.day_length == 0 {
            return Err("weather.day_length");
        }
        if !(self.wind_jitter_halfwidth >= 0.0 && self.wind_jitter_halfwidth <= 180.0) {
            return Err("weather.wind_jitter");
        }
        Ok(())
    }

    /// Upper bound of the wind speed process.
    pub fn max_wind_speed(&self) -> f64 {
        self.base_wind_speed + self.wind_sine_amplitude
    }
}

/// Raised-cosine day curve: 0 at dawn and dusk of the day, 1 at midday.
fn day_bump(minute: u32, day_length: u32) -> f64 {
    (1.0 - (2.0 * PI * minute as f64 / day_length as f64).cos()) / 2.0
}

/// Base wind direction of an episode, uniform on `[0, 360)`.
pub fn sample_wind_direction(episode_seed: u64) -> f64 {
    let deg = unit_from_hash(stream_seed(episode_seed, Stream::WindBase)) * 360.0;
    // guard against rounding up to exactly 360
    if deg >= 360.0 {
        0.0
    } else {
        deg
    }
}

pub fn weather_at(
    config: &WeatherConfig,
    minute: u32,
    episode_seed: u64,
) -> Result<WeatherState, WeatherError> {
    if minute > config.day_length {
        return Err(WeatherError::OutOfRange {
            minute,
            day_length: config.day_length,
        });
    }
    let bump = day_bump(minute, config.day_length);
    let (t_lo, t_hi) = config.temp_range;
    let (h_lo, h_hi) = config.humidity_range;
    let temperature = t_lo + (t_hi - t_lo) * bump;
    let humidity = h_hi - (h_hi - h_lo) * bump;

    let phase = 2.0 * PI * minute as f64 / config.wind_sine_period;
    let wind_speed = (config.base_wind_speed + config.wind_sine_amplitude * phase.sin()).max(0.0);

    let jitter_u = unit_from_hash(hash64(
        stream_seed(episode_seed, Stream::WindJitter),
        minute as u64,
    ));
    let jitter = (2.0 * jitter_u - 1.0) * config.wind_jitter_halfwidth;
    let wind_direction = (sample_wind_direction(episode_seed) + jitter).rem_euclid(360.0);

    Ok(WeatherState {
        temperature,
        humidity,
        wind_speed,
        wind_direction: if wind_direction >= 360.0 {
            0.0
        } else {
            wind_direction
        },
    })
}
