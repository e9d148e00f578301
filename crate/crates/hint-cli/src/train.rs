//! Deterministic single-thread training loop: patch sampling, L1 loss,
//! AdamW with cosine decay, NDJSON run log, checkpointing.

use std::path::Path;
use std::time::Instant;

use hint_core::rng::seeded_rng;
use hint_core::scalar::Scalar;
use hint_core::tensor::Tensor;
use hint_data::image::Image;
use hint_data::sample::sample_patches;
use hint_metrics::{psnr, ssim};
use hint_model::checkpoint::save_model;
use hint_model::model::Model;
use rand::Rng;

use crate::config::TrainConfig;
use crate::error::{CliError, Result};
use crate::infer::restore;
use crate::loss::l1_loss;
use crate::optim::{cosine_lr, AdamW, AdamWCfg};
use crate::pairs::{build_pairs, to_tensor};
use crate::runlog::{Record, RunLog};

pub struct TrainOutcome<T: Scalar> {
    pub log: RunLog,
    pub model: Model<T>,
}

/// Trains on synthetic pairs derived from the config. Bitwise deterministic
/// for a fixed seed: same data, same init, same update order. Zero steps is
/// allowed programmatically and writes the initialization checkpoint as-is.
pub fn train<T: Scalar>(cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    cfg.validate_loose()?;
    let (pairs, eval_pair) = build_pairs(&cfg.data, cfg.seed)?;
    train_on_pairs(cfg, &pairs, Some(&eval_pair), true)
}

/// Core loop shared by `train` and the ablation harness, which supplies its
/// own pairs and skips checkpoint files.
pub(crate) fn train_on_pairs<T: Scalar>(
    cfg: &TrainConfig,
    pairs: &[(Image, Image)],
    eval_pair: Option<&(Image, Image)>,
    write_checkpoints: bool,
) -> Result<TrainOutcome<T>> {
    let started = Instant::now();
    let model = Model::<T>::build(&cfg.model, cfg.seed)?;
    let mut opt = AdamW::new(model.params(), AdamWCfg {
        betas: cfg.betas,
        weight_decay: cfg.weight_decay,
    });
    let mut log = RunLog::new();

    for step in 0..cfg.steps {
        // Each step draws its own patch seed so batches are independent but
        // replayable without the optimizer state.
        let patch_seed: u64 = seeded_rng(cfg.seed, "train-step", step).gen();
        let batch = sample_patches(pairs, cfg.data.patch(), cfg.batch_size, patch_seed)?;

        for p in model.params().iter() {
            p.zero_grad();
        }
        let mut total: Option<Tensor<T>> = None;
        for (clean, degraded) in &batch {
            let pred = model.forward(&to_tensor::<T>(degraded))?;
            let term = l1_loss(&pred, &to_tensor::<T>(clean))?;
            total = Some(match total {
                Some(acc) => acc.add(&term)?,
                None => term,
            });
        }
        let inv = Tensor::scalar(T::from_f64(1.0 / batch.len() as f64));
        let loss = total.expect("batch_size >= 1").scale_by(&inv)?;
        let loss_v = loss.item()?.to_f64();
        if !loss_v.is_finite() {
            return Err(CliError::Numeric(format!("non-finite loss {loss_v} at step {step}")));
        }
        loss.backward()?;

        let lr = cosine_lr(step, cfg.steps, cfg.lr, cfg.lr_min);
        opt.step(model.params(), lr)?;
        log.push(Record::Step { step, loss: loss_v, lr })?;

        if let Some(pair) = eval_pair {
            if cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0 {
                let (p, s) = held_out_metrics(&model, pair)?;
                log.push(Record::Eval { step, psnr: p, ssim: s })?;
            }
        }
        if write_checkpoints && cfg.checkpoint.every > 0 && (step + 1) % cfg.checkpoint.every == 0 {
            write_checkpoint(&cfg.checkpoint.path, &model)?;
        }
    }

    if write_checkpoints {
        write_checkpoint(&cfg.checkpoint.path, &model)?;
    }
    log.push(Record::Done { steps: cfg.steps, wall_s: started.elapsed().as_secs_f64() })?;
    Ok(TrainOutcome { log, model })
}

fn held_out_metrics<T: Scalar>(model: &Model<T>, pair: &(Image, Image)) -> Result<(f64, f64)> {
    let (clean, degraded) = pair;
    let restored = restore(model, degraded)?;
    Ok((psnr(&restored, clean)?, ssim(&restored, clean)?))
}

fn write_checkpoint<T: Scalar>(path: &Path, model: &Model<T>) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("{}: {e}", parent.display())))?;
        }
    }
    save_model(path, model)?;
    Ok(())
}
