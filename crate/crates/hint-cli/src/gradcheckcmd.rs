//! Full-pipeline gradient verification: analytic backward vs adaptive
//! central differences on a stratified sample of parameter scalars.

use hint_core::gradcheck::check_gradients_refined;
use hint_core::rng::seeded_rng;
use hint_core::tensor::Tensor;
use hint_data::synth::synth_clean;
use hint_model::config::ModelConfig;
use hint_model::model::Model;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::loss::l1_loss;
use crate::pairs::to_tensor;

/// Gradients below this are too close to the central-difference noise floor
/// for a 1e-4 relative bar: on an O(1) loss the f64 cancellation noise is
/// ~1e-11 absolute, so |g| must clear ~1e-7 with margin. Structurally zero
/// gradients also exist (softmax-row invariant directions); both are
/// skipped, not checked.
const MIN_PROBE_GRAD: f64 = 1e-6;

pub const BUCKETS: [&str; 4] = ["hmha", "qkcu", "ffn", "conv"];

#[derive(Debug, Serialize)]
pub struct GradcheckReport {
    pub samples: usize,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
    pub worst_param: String,
    pub per_bucket: Vec<(String, usize)>,
    pub pass: bool,
}

fn bucket_of(name: &str) -> usize {
    if name.contains(".attn.") {
        0
    } else if name.contains(".intra.") || name.contains(".inter.") {
        1
    } else if name.contains(".ffn.") || name.contains(".ln") {
        2
    } else {
        3
    }
}

/// Runs the check on a fresh 64-bit model. The output projection keeps its
/// random init here; zeroing it (the training default) would zero every
/// upstream gradient and make the comparison vacuous.
pub fn run_gradcheck(
    model_cfg: &ModelConfig,
    seed: u64,
    n_samples: usize,
    step_size: f64,
) -> Result<GradcheckReport> {
    if n_samples == 0 {
        return Err(CliError::Usage("samples must be >= 1".into()));
    }
    if !step_size.is_finite() || step_size <= 0.0 {
        return Err(CliError::Usage(format!("step size {step_size} must be > 0")));
    }
    let cfg = ModelConfig { zero_init_output: false, ..model_cfg.clone() };
    cfg.validate()?;
    let model = Model::<f64>::build(&cfg, seed)?;

    let side = cfg.spatial_divisor();
    let input_seed: u64 = seeded_rng(seed, "gradcheck-io", 0).gen();
    let target_seed: u64 = seeded_rng(seed, "gradcheck-io", 1).gen();
    let x = to_tensor::<f64>(&synth_clean(side, side, input_seed)?);
    let y = to_tensor::<f64>(&synth_clean(side, side, target_seed)?);
    let loss = || l1_loss(&model.forward(&x)?, &y);

    // One backward pass ranks every coordinate; probes then target each
    // tensor's largest-magnitude gradient so relative error is meaningful.
    for p in model.params().iter() {
        p.zero_grad();
    }
    loss()?.backward()?;

    let mut buckets: Vec<Vec<(String, Tensor<f64>, usize)>> = vec![Vec::new(); BUCKETS.len()];
    for p in model.params().iter() {
        let Some(g) = p.grad() else { continue };
        let Some((idx, best)) = g
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        else {
            continue;
        };
        if best.abs() < MIN_PROBE_GRAD {
            continue;
        }
        buckets[bucket_of(p.name())].push((p.name().to_string(), p.tensor().clone(), idx));
    }
    for (i, b) in buckets.iter_mut().enumerate() {
        let mut rng = seeded_rng(seed, "gradcheck-pick", i as u64);
        b.shuffle(&mut rng);
    }

    // Round-robin across buckets so a small sample still spans all four
    // computation paths.
    let mut picked: Vec<(usize, String, Tensor<f64>, usize)> = Vec::new();
    let mut cursors = [0usize; 4];
    while picked.len() < n_samples {
        let mut advanced = false;
        for (bi, b) in buckets.iter().enumerate() {
            if picked.len() >= n_samples {
                break;
            }
            if cursors[bi] < b.len() {
                let (name, t, idx) = &b[cursors[bi]];
                picked.push((bi, name.clone(), t.clone(), *idx));
                cursors[bi] += 1;
                advanced = true;
            }
        }
        if !advanced {
            break;
        }
    }
    if picked.is_empty() {
        return Err(CliError::Numeric(
            "no parameter had a gradient above the probe floor".into(),
        ));
    }

    let checks: Vec<(Tensor<f64>, Vec<usize>)> =
        picked.iter().map(|(_, _, t, idx)| (t.clone(), vec![*idx])).collect();
    let report = check_gradients_refined(loss, &checks, step_size)?;

    let mut per_bucket: Vec<(String, usize)> =
        BUCKETS.iter().map(|n| (n.to_string(), 0)).collect();
    for (bi, _, _, _) in &picked {
        per_bucket[*bi].1 += 1;
    }
    Ok(GradcheckReport {
        samples: report.count,
        max_rel_err: report.max_rel_err,
        mean_rel_err: report.mean_rel_err,
        worst_param: picked[report.worst.0].1.clone(),
        per_bucket,
        pass: report.passes(1e-4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bucket_classifier_covers_known_names() {
        assert_eq!(bucket_of("bottleneck.b0.attn.qkv_pw.weight"), 0);
        assert_eq!(bucket_of("bottleneck.b0.attn.temp0"), 0);
        assert_eq!(bucket_of("decoder.l2.b0.intra.down.weight"), 1);
        assert_eq!(bucket_of("refine.b0.inter.h1.gate.bias"), 1);
        assert_eq!(bucket_of("encoder.l1.b0.ffn.pw1.weight"), 2);
        assert_eq!(bucket_of("bottleneck.b0.ln1.gain"), 2);
        assert_eq!(bucket_of("shallow.weight"), 3);
        assert_eq!(bucket_of("output.bias"), 3);
    }

    #[test]
    fn rejects_degenerate_arguments() {
        let cfg = ModelConfig::tiny();
        assert!(matches!(run_gradcheck(&cfg, 1, 0, 1e-5), Err(CliError::Usage(_))));
        assert!(matches!(run_gradcheck(&cfg, 1, 8, 0.0), Err(CliError::Usage(_))));
    }
}
