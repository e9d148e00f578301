//! Training-loop contracts: zero-step checkpointing, bitwise determinism,
//! the identity-at-init loss value, and basic descent.

use std::path::{Path, PathBuf};

use hint_cli::config::{CheckpointCfg, DataCfg, LossSpec, TrainConfig};
use hint_cli::error::CliError;
use hint_cli::loss::l1_loss;
use hint_cli::pairs::{build_pairs, to_tensor};
use hint_cli::runlog::Record;
use hint_cli::train::train;
use hint_core::rng::seeded_rng;
use hint_data::sample::sample_patches;
use hint_data::synth::{Degradation, DegradationSpec};
use hint_model::checkpoint::{load_model, save_model};
use hint_model::{Model, ModelConfig};
use rand::Rng;

fn cfg(steps: u64, lr: f64, image_size: usize, ckpt: PathBuf) -> TrainConfig {
    TrainConfig {
        seed: 11,
        steps,
        batch_size: 1,
        lr,
        lr_min: 1e-6,
        betas: (0.9, 0.999),
        weight_decay: 1e-4,
        loss: LossSpec::L1,
        checkpoint: CheckpointCfg { path: ckpt, every: 0 },
        eval_every: 0,
        model: ModelConfig::tiny(),
        data: DataCfg {
            degradation: DegradationSpec {
                kind: Degradation::GaussianNoise { sigma: 25.0 / 255.0 },
                seed: 5,
            },
            image_size,
            n_images: 1,
            patch_size: None,
        },
    }
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn zero_steps_writes_the_initialization_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let trained = dir.path().join("zero.ckpt");
    let c = cfg(0, 2e-4, 16, trained.clone());
    let outcome = train::<f32>(&c).unwrap();

    // Only the Done record; no steps ran.
    assert_eq!(outcome.log.records().len(), 1);
    assert!(matches!(outcome.log.records()[0], Record::Done { steps: 0, .. }));

    // Byte-identical to a freshly built model saved directly.
    let reference = dir.path().join("init.ckpt");
    let model = Model::<f32>::build(&c.model, c.seed).unwrap();
    save_model(&reference, &model).unwrap();
    assert_eq!(read(&trained), read(&reference));
}

#[test]
fn training_is_bitwise_deterministic_under_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt_a = dir.path().join("a.ckpt");
    let ckpt_b = dir.path().join("b.ckpt");
    let mut ca = cfg(6, 1e-3, 16, ckpt_a.clone());
    ca.eval_every = 3;
    let mut cb = cfg(6, 1e-3, 16, ckpt_b.clone());
    cb.eval_every = 3;

    let a = train::<f32>(&ca).unwrap();
    let b = train::<f32>(&cb).unwrap();

    // Every record except the wall-time one must match bitwise.
    let strip = |log: &hint_cli::runlog::RunLog| -> Vec<Record> {
        log.records()
            .iter()
            .filter(|r| !matches!(r, Record::Done { .. }))
            .cloned()
            .collect()
    };
    assert_eq!(strip(&a.log), strip(&b.log));
    assert_eq!(read(&ckpt_a), read(&ckpt_b));
}

#[test]
fn loss_at_step_zero_is_exactly_l1_of_degraded_vs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(1, 2e-4, 16, dir.path().join("one.ckpt"));
    let outcome = train::<f32>(&c).unwrap();
    let logged = outcome.log.step_losses().next().unwrap();

    // The model starts as the identity, so the first loss is the raw gap
    // between the sampled degraded patch and its clean twin. Recompute it
    // without any model in the loop.
    let (pairs, _) = build_pairs(&c.data, c.seed).unwrap();
    let patch_seed: u64 = seeded_rng(c.seed, "train-step", 0).gen();
    let batch = sample_patches(&pairs, c.data.patch(), c.batch_size, patch_seed).unwrap();
    let (clean, degraded) = &batch[0];
    let expected = l1_loss(&to_tensor::<f32>(degraded), &to_tensor::<f32>(clean))
        .unwrap()
        .item()
        .unwrap() as f64;
    assert_eq!(logged, expected);
}

#[test]
fn a_short_run_reduces_the_loss() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(60, 1e-3, 16, dir.path().join("short.ckpt"));
    let outcome = train::<f32>(&c).unwrap();
    let losses: Vec<f64> = outcome.log.step_losses().collect();
    let first = losses[0];
    let last = *losses.last().unwrap();
    assert!(
        last < 0.5 * first,
        "loss failed to drop: first {first}, last {last}"
    );
}

#[test]
fn eval_cadence_and_checkpoint_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("cadence.ckpt");
    let mut c = cfg(4, 1e-3, 16, ckpt.clone());
    c.eval_every = 2;
    c.checkpoint.every = 2;
    let outcome = train::<f32>(&c).unwrap();

    let eval_steps: Vec<u64> = outcome
        .log
        .records()
        .iter()
        .filter_map(|r| match r {
            Record::Eval { step, .. } => Some(*step),
            _ => None,
        })
        .collect();
    assert_eq!(eval_steps, vec![1, 3]);

    // The saved checkpoint reproduces the in-memory model exactly.
    let loaded = load_model::<f32>(&ckpt).unwrap();
    let (pairs, _) = build_pairs(&c.data, c.seed).unwrap();
    let x = to_tensor::<f32>(&pairs[0].1);
    let a = outcome.model.forward(&x).unwrap().to_vec();
    let b = loaded.forward(&x).unwrap().to_vec();
    assert_eq!(a, b);
}

#[test]
fn exploding_run_is_reported_as_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(20, 1e14, 16, dir.path().join("explode.ckpt"));
    match train::<f32>(&c) {
        Err(CliError::Numeric(_)) => {}
        Err(other) => panic!("expected a numeric error, got {other:?}"),
        Ok(_) => panic!("a 1e14 learning rate should not survive 20 steps"),
    }
}
