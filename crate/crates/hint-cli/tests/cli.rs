//! End-to-end runs of the `hint` binary: exit codes, NDJSON logs,
//! checkpoint files, padding behavior, and directory evaluation.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hint_cli::config::{CheckpointCfg, DataCfg, LossSpec, TrainConfig};
use hint_data::io::{load_image, save_image};
use hint_data::synth::{degrade, synth_clean, Degradation, DegradationSpec};
use hint_model::ModelConfig;

fn hint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hint")).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, cfg: &TrainConfig) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn base_cfg(dir: &Path, steps: u64) -> TrainConfig {
    TrainConfig {
        seed: 11,
        steps,
        batch_size: 1,
        lr: 1e-3,
        lr_min: 1e-6,
        betas: (0.9, 0.999),
        weight_decay: 1e-4,
        loss: LossSpec::L1,
        checkpoint: CheckpointCfg { path: dir.join("model.ckpt"), every: 0 },
        eval_every: 0,
        model: ModelConfig::tiny(),
        data: DataCfg {
            degradation: DegradationSpec {
                kind: Degradation::GaussianNoise { sigma: 25.0 / 255.0 },
                seed: 5,
            },
            image_size: 16,
            n_images: 1,
            patch_size: None,
        },
    }
}

#[test]
fn help_exits_zero_and_usage_mistakes_exit_one() {
    assert_eq!(hint(&["--help"]).status.code(), Some(0));
    assert_eq!(hint(&["train", "--help"]).status.code(), Some(0));
    assert_eq!(hint(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(hint(&["train"]).status.code(), Some(1)); // missing --config
}

#[test]
fn config_problems_split_between_usage_and_data_codes() {
    let dir = tempfile::tempdir().unwrap();

    // Unreadable path: a data problem.
    let missing = dir.path().join("absent.json");
    let out = hint(&["train", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Unknown key: a usage problem.
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "bogus_key": true}"#).unwrap();
    let out = hint(&["train", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr).to_lowercase();
    assert!(msg.contains("bogus_key") || msg.contains("unknown"), "stderr: {msg}");

    // Valid JSON, invalid value: usage.
    let zero_steps = dir.path().join("zero.json");
    let mut cfg = base_cfg(dir.path(), 0);
    cfg.checkpoint.path = dir.path().join("z.ckpt");
    std::fs::write(&zero_steps, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = hint(&["train", "--config", zero_steps.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn train_emits_ndjson_and_a_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_cfg(dir.path(), 3);
    let path = write_cfg(dir.path(), &cfg);

    let out = hint(&["train", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(cfg.checkpoint.path.is_file());

    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> =
        stdout.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4); // 3 steps + done
    for (i, line) in lines[..3].iter().enumerate() {
        assert_eq!(line["type"], "step");
        assert_eq!(line["step"], i as u64);
        assert!(line["loss"].as_f64().unwrap().is_finite());
    }
    assert_eq!(lines[3]["type"], "done");
    assert_eq!(lines[3]["steps"], 3);
}

#[test]
fn infer_preserves_odd_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_cfg(dir.path(), 1);
    let cfg_path = write_cfg(dir.path(), &cfg);
    assert_eq!(hint(&["train", "--config", cfg_path.to_str().unwrap()]).status.code(), Some(0));

    let input = dir.path().join("odd.ppm");
    save_image(&synth_clean(33, 33, 3).unwrap(), &input).unwrap();
    let output = dir.path().join("restored.png");
    let out = hint(&[
        "infer",
        "--ckpt",
        cfg.checkpoint.path.to_str().unwrap(),
        "--in",
        input.to_str().unwrap(),
        "--out",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let restored = load_image(&output).unwrap();
    assert_eq!((restored.width(), restored.height()), (33, 33));
}

#[test]
fn eval_averages_metrics_over_mixed_format_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_cfg(dir.path(), 1);
    let cfg_path = write_cfg(dir.path(), &cfg);
    assert_eq!(hint(&["train", "--config", cfg_path.to_str().unwrap()]).status.code(), Some(0));

    let data = dir.path().join("pairs");
    std::fs::create_dir(&data).unwrap();
    let spec = DegradationSpec {
        kind: Degradation::GaussianNoise { sigma: 25.0 / 255.0 },
        seed: 9,
    };
    for (i, name) in ["a", "b"].iter().enumerate() {
        let clean = synth_clean(24, 24, 100 + i as u64).unwrap();
        let degraded = degrade(&clean, &spec).unwrap();
        let ext = if i == 0 { "ppm" } else { "png" };
        save_image(&clean, &data.join(format!("{name}_clean.{ext}"))).unwrap();
        save_image(&degraded, &data.join(format!("{name}_degraded.{ext}"))).unwrap();
    }

    let out = hint(&[
        "eval",
        "--ckpt",
        cfg.checkpoint.path.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["pairs"], 2);
    assert!(summary["psnr"].as_f64().unwrap() > 5.0);
    let ssim = summary["ssim"].as_f64().unwrap();
    assert!(ssim > 0.0 && ssim <= 1.0);

    // An unpaired file is a data error.
    save_image(&synth_clean(24, 24, 200).unwrap(), &data.join("c_clean.ppm")).unwrap();
    let out = hint(&[
        "eval",
        "--ckpt",
        cfg.checkpoint.path.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gradcheck_passes_on_the_small_config_and_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = base_cfg(dir.path(), 1);
    let cfg_path = write_cfg(dir.path(), &cfg);
    let out = hint(&[
        "gradcheck",
        "--config",
        cfg_path.to_str().unwrap(),
        "--samples",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["max_rel_err"].as_f64().unwrap() < 1e-4);
    assert_eq!(report["samples"], 8);
}

#[test]
fn corrupt_checkpoint_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("garbage.ckpt");
    std::fs::write(&ckpt, b"not a checkpoint").unwrap();
    let input = dir.path().join("x.ppm");
    save_image(&synth_clean(16, 16, 1).unwrap(), &input).unwrap();
    let out = hint(&[
        "infer",
        "--ckpt",
        ckpt.to_str().unwrap(),
        "--in",
        input.to_str().unwrap(),
        "--out",
        dir.path().join("y.ppm").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
