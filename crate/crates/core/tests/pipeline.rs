use std::path::Path;
use std::sync::Arc;

use emberops::harness::{
    checkpoint_path, evaluate_policy, replay, run_random_baseline, train, RunLog, TrainOptions,
    FINAL_CHECKPOINT,
};
use emberops::ppo::{Checkpoint, PpoConfig};
use emberops::world::{load_scenario, Scenario};

fn scenario() -> Arc<Scenario> {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/palisades-small.toml");
    Arc::new(load_scenario(p).unwrap())
}

fn jsonl(log: &RunLog) -> Vec<u8> {
    let mut buf = Vec::new();
    log.write_jsonl(&mut buf).unwrap();
    buf
}

#[test]
fn train_checkpoint_eval_replay() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario();
    let cfg = PpoConfig {
        checkpoint_every: 2,
        ..PpoConfig::default()
    };
    let opts = TrainOptions {
        out_dir: Some(dir.path().to_path_buf()),
    };
    let out = train(Arc::clone(&sc), &cfg, 5, 11, &opts).unwrap();
    assert_eq!(out.log.len(), 5);
    assert_eq!(out.updates.len(), 5);
    assert!(checkpoint_path(dir.path(), 2).is_file());
    assert!(checkpoint_path(dir.path(), 4).is_file());

    let ck = Checkpoint::load(&dir.path().join(FINAL_CHECKPOINT)).unwrap();
    assert_eq!(ck, out.checkpoint);

    let a = evaluate_policy(&ck, Arc::clone(&sc), 4, 11).unwrap();
    let b = evaluate_policy(&ck, Arc::clone(&sc), 4, 11).unwrap();
    assert_eq!(jsonl(&a), jsonl(&b));

    let back = RunLog::read_jsonl(&jsonl(&a)[..]).unwrap();
    assert_eq!(back.final_moes(), a.final_moes());

    let frames = dir.path().join("frames");
    let rec = replay(&ck, Arc::clone(&sc), a.episodes[0].seed, &frames).unwrap();
    assert_eq!(rec.final_moe, a.episodes[0].final_moe);
    let n = std::fs::read_dir(&frames).unwrap().count();
    assert_eq!(n, rec.steps as usize + 1);
}

#[test]
fn runs_with_one_master_seed_face_the_same_fires() {
    let sc = scenario();
    let base = run_random_baseline(Arc::clone(&sc), 6, 3).unwrap();
    let again = run_random_baseline(Arc::clone(&sc), 6, 3).unwrap();
    assert_eq!(jsonl(&base), jsonl(&again));

    let out = train(
        Arc::clone(&sc),
        &PpoConfig::default(),
        1,
        3,
        &TrainOptions::default(),
    )
    .unwrap();
    let eval = evaluate_policy(&out.checkpoint, sc, 6, 3).unwrap();
    let seeds = |l: &RunLog| l.episodes.iter().map(|e| e.seed).collect::<Vec<_>>();
    assert_eq!(seeds(&base), seeds(&eval));
}

#[test]
fn zero_episodes_is_rejected() {
    let sc = scenario();
    assert!(run_random_baseline(Arc::clone(&sc), 0, 1).is_err());
    assert!(train(sc, &PpoConfig::default(), 0, 1, &TrainOptions::default()).is_err());
}
