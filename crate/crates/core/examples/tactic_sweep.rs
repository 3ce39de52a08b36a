//! Mean final MoE of every fixed tactic against uniform random tactics.
//!
//!     cargo run --release -p emberops-core --example tactic_sweep -- SCENARIO [EPISODES]

use std::sync::Arc;

use emberops::env::{Environment, Termination};
use emberops::fleet::{decode_tactic, TACTIC_COUNT};
use emberops::harness::{episode_seed, mean, rollout, Controller, HarnessError, RandomController};
use emberops::rng::{stream_rng, Stream};
use emberops::world::load_scenario;
use rayon::prelude::*;

struct Fixed(Vec<usize>);

impl Controller for Fixed {
    fn act(&mut self, _: &[f64]) -> Result<(Vec<usize>, f64, f64), HarnessError> {
        Ok((self.0.clone(), 0.0, 0.0))
    }
}

fn summarize(label: &str, runs: &[(f64, Termination, u32)]) {
    let moes: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let oob = runs
        .iter()
        .filter(|r| r.1 == Termination::OutOfBound)
        .count();
    let contained = runs
        .iter()
        .filter(|r| r.1 == Termination::Contained)
        .count();
    let steps = mean(&runs.iter().map(|r| r.2 as f64).collect::<Vec<_>>());
    println!(
        "{label:<28} mean {:.4}  oob {:>3}  contained {:>3}  steps {:.1}",
        mean(&moes),
        oob,
        contained,
        steps
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let scenario = Arc::new(load_scenario(std::path::Path::new(&args[1]))?);
    let episodes: usize = args.get(2).map_or(Ok(100), |s| s.parse())?;
    let env = Environment::new(Arc::clone(&scenario));
    let fleet = env.fleet_size();

    let random = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let seed = episode_seed(1, i);
            let mut c = RandomController {
                fleet_size: fleet,
                rng: stream_rng(seed, Stream::Baseline),
            };
            let r = rollout(&mut env.clone(), i, seed, &mut c, None).unwrap();
            (r.final_moe, r.termination, r.steps)
        })
        .collect::<Vec<_>>();
    summarize("random", &random);
    for t in 0..TACTIC_COUNT {
        let runs = (0..episodes)
            .into_par_iter()
            .map(|i| {
                let seed = episode_seed(1, i);
                let r =
                    rollout(&mut env.clone(), i, seed, &mut Fixed(vec![t; fleet]), None).unwrap();
                (r.final_moe, r.termination, r.steps)
            })
            .collect::<Vec<_>>();
        summarize(&format!("{t:>2} {:?}", decode_tactic(t)?), &runs);
    }
    Ok(())
}
