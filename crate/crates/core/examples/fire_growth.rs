//! Unsuppressed fire growth on a scenario: burning and burnt cell counts
//! every hour, averaged over seeds, and the minute the fire reaches the edge.
//!
//!     cargo run --release -p emberops-core --example fire_growth -- SCENARIO [SEEDS]

use emberops::fire::{ignite, step_fire, FireWeather};
use emberops::rng::{stream_rng, Stream};
use emberops::world::{load_scenario, weather_at, BurnPhase};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let sc = load_scenario(std::path::Path::new(&args[1]))?;
    let seeds: u64 = args.get(2).map_or(Ok(20), |s| s.parse())?;
    let horizon = sc.episode.detection_delay_min + sc.episode.step_minutes * sc.episode.max_steps;
    let hours = (horizon / 60) as usize + 1;
    let mut burning = vec![0.0; hours];
    let mut burnt = vec![0.0; hours];
    let mut edge_minutes = Vec::new();
    for seed in 0..seeds {
        let mut map = sc.map.clone();
        let mut rng = stream_rng(seed, Stream::Fire);
        ignite(&mut map, (sc.ignition.0 as isize, sc.ignition.1 as isize))?;
        let mut edge = None;
        for minute in 0..horizon {
            let w = weather_at(&sc.weather, minute, seed)?;
            step_fire(
                &mut map,
                &FireWeather::new(&w, &sc.weather),
                &sc.spread,
                1.0,
                &mut rng,
            );
            if edge.is_none()
                && (0..map.len()).any(|i| map.cells[i].phase.is_burning() && map.is_edge(i))
            {
                edge = Some(minute + 1);
            }
            if (minute + 1) % 60 == 0 {
                let h = ((minute + 1) / 60) as usize;
                burning[h] += map.cells.iter().filter(|c| c.phase.is_burning()).count() as f64;
                burnt[h] += map.count_phase(BurnPhase::Burnt) as f64;
            }
        }
        edge_minutes.push(edge);
    }
    for h in 1..hours {
        println!(
            "hour {h:>2}: burning {:>7.1}  burnt {:>7.1}",
            burning[h] / seeds as f64,
            burnt[h] / seeds as f64
        );
    }
    println!("edge reached: {:?}", edge_minutes);
    Ok(())
}
