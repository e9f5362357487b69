//! Acceptance gate: one test (and one printed PASS/FAIL line) per
//! release criterion, at the stated tolerances.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{Matrix3, Vector3};
use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gait_core::cnn::{self, CnnConfig, CnnParams};
use gait_core::ego_motion::{
    decompose_essential, estimate_essential, euler_angles, recompose, sampson_distance,
    Correspondence, EssentialMatrix, FrameMatches, RansacConfig,
};
use gait_core::gait_cycles::{detect_events, EventConfig, GaitCycle, GaitError};
use gait_core::protocol::{split_dataset, SplitSpec};
use gait_core::seq2seq::{
    gradient_check, train_autoencoder, EncoderConfig, Seq2SeqParams, TrainConfig,
};
use gait_core::signal::{lowpass, resample, Label, UniformSeries, VERTICAL_ACCEL_CHANNEL};
use gait_core::svm::{train_svm, SvmConfig};
use gait_core::synth::{essential_from_pose, generate_walk, SynthConfig};

const BIN: &str = env!("CARGO_BIN_EXE_gait");

fn verdict(name: &str, ok: bool, detail: &str) {
    println!(
        "ACCEPTANCE {name}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "{name}: {detail}");
}

// --- 1. Gradient fidelity -------------------------------------------------

#[test]
fn gradient_fidelity() {
    let start = Instant::now();

    let enc_config = EncoderConfig {
        layers: 2,
        hidden_size: 8,
        dropout_keep: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let params = Seq2SeqParams::init_uniform(&enc_config, 9, &mut rng);
    let mut x = Array3::zeros((12, 3, 9));
    for v in x.iter_mut() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let enc_err = gradient_check(&params, &enc_config, &x, 1e-5).unwrap();

    let cnn_config = CnnConfig {
        dims: [12, 8, 4],
        kernel: [5, 3, 4, 6],
        ..CnnConfig::default()
    };
    let cnn_params = CnnParams::init_uniform(&cnn_config, &mut rng).unwrap();
    let states: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..384).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let refs: Vec<&[f64]> = states.iter().map(|s| s.as_slice()).collect();
    let labels = [
        Label::Normal,
        Label::Anomalous,
        Label::Anomalous,
        Label::Normal,
    ];
    let cnn_err = cnn::gradient_check(&cnn_params, &cnn_config, &refs, &labels, 1e-5).unwrap();

    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "gradient-fidelity",
        enc_err < 1e-4 && cnn_err < 1e-4 && elapsed < 60.0,
        &format!("encoder {enc_err:.2e}, cnn {cnn_err:.2e}, {elapsed:.1} s"),
    );
}

// --- 2. Geometry round trip -----------------------------------------------

fn random_scene(rng: &mut ChaCha8Rng, points: usize) -> (Matrix3<f64>, Vector3<f64>, Vec<Correspondence>) {
    let angles = gait_core::ego_motion::EulerAngles {
        roll: rng.gen_range(-0.4..0.4),
        pitch: rng.gen_range(-0.4..0.4),
        yaw: rng.gen_range(-0.4..0.4),
        gimbal_warning: false,
    };
    let r = recompose(&angles);
    let t = Vector3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-0.5..0.5),
    )
    .normalize();
    let mut matches = Vec::with_capacity(points);
    while matches.len() < points {
        let p = Vector3::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(4.0..10.0),
        );
        let q = r * p + t;
        if q.z <= 0.5 {
            continue;
        }
        matches.push(Correspondence::new(
            p.x / p.z,
            p.y / p.z,
            q.x / q.z,
            q.y / q.z,
        ));
    }
    (r, t, matches)
}

fn pose_errors(
    matches: Vec<Correspondence>,
    config: &RansacConfig,
    r_true: &Matrix3<f64>,
    t_true: &Vector3<f64>,
) -> (f64, f64, Vec<bool>) {
    let frame = FrameMatches {
        frame_index: 1,
        matches,
    };
    let (e, inliers) = estimate_essential(&frame, config).unwrap();
    let kept: Vec<Correspondence> = frame
        .matches
        .iter()
        .zip(&inliers)
        .filter(|(_, &ok)| ok)
        .map(|(c, _)| *c)
        .collect();
    let pose = decompose_essential(&e, &kept).unwrap();
    let r_err = (pose.rotation - r_true).norm();
    let t_err = (pose.translation.normalize() - t_true).norm();
    (r_err, t_err, inliers)
}

#[test]
fn geometry_round_trip() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let config = RansacConfig::default();
    let mut worst_r: f64 = 0.0;
    let mut worst_t: f64 = 0.0;
    let mut worst_r_out: f64 = 0.0;
    let mut leaked = 0usize;

    for _ in 0..100 {
        let (r, t, matches) = random_scene(&mut rng, 40);
        let (re, te, _) = pose_errors(matches.clone(), &config, &r, &t);
        worst_r = worst_r.max(re);
        worst_t = worst_t.max(te);

        // contaminate 20 % with gross outliers, all far beyond the gate
        let e_true = EssentialMatrix(essential_from_pose(&r, &t));
        let mut dirty = matches;
        let n_out = dirty.len() / 5;
        let mut outlier_idx = Vec::new();
        for i in 0..n_out {
            loop {
                let c = Correspondence::new(
                    rng.gen_range(-0.8..0.8),
                    rng.gen_range(-0.8..0.8),
                    rng.gen_range(-0.8..0.8),
                    rng.gen_range(-0.8..0.8),
                );
                if sampson_distance(&e_true.0, &c) > 10.0 * config.threshold {
                    dirty[i * 5] = c;
                    outlier_idx.push(i * 5);
                    break;
                }
            }
        }
        let (re, _, mask) = pose_errors(dirty, &config, &r, &t);
        worst_r_out = worst_r_out.max(re);
        leaked += outlier_idx.iter().filter(|&&i| mask[i]).count();
    }

    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "geometry-round-trip",
        worst_r < 1e-6 && worst_t < 1e-6 && worst_r_out < 1e-4 && leaked == 0 && elapsed < 30.0,
        &format!(
            "clean R {worst_r:.1e} t {worst_t:.1e}; contaminated R {worst_r_out:.1e}, \
             {leaked} outliers leaked, {elapsed:.1} s"
        ),
    );
}

// --- 3. Euler consistency -------------------------------------------------

#[test]
fn euler_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let a = gait_core::ego_motion::EulerAngles {
            roll: rng.gen_range(-3.1..3.1),
            pitch: rng.gen_range(-1.39..1.39),
            yaw: rng.gen_range(-3.1..3.1),
            gimbal_warning: false,
        };
        let r = recompose(&a);
        let back = recompose(&euler_angles(&r));
        worst = worst.max((back - r).norm());
    }
    verdict(
        "euler-consistency",
        worst < 1e-9,
        &format!("max Frobenius error {worst:.1e} over 10000 rotations"),
    );
}

// --- 4. Event detection ---------------------------------------------------

#[test]
fn event_detection() {
    let config = SynthConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut found = 0usize;
    let mut total = 0usize;
    for k in 0..20 {
        let walk = generate_walk(&format!("walk-{k}"), None, &config, &mut rng);
        let uniform = resample(&walk.accel, 200.0).unwrap();
        let filtered = lowpass(&uniform, 40.0).unwrap();
        let vertical = UniformSeries {
            sample_rate: filtered.sample_rate,
            start_time: filtered.start_time,
            values: filtered
                .values
                .column(VERTICAL_ACCEL_CHANNEL)
                .to_owned()
                .insert_axis(ndarray::Axis(1)),
        };
        let events = detect_events(&vertical, &EventConfig::default()).unwrap();
        let times: Vec<f64> = events
            .ic
            .iter()
            .map(|&i| vertical.start_time + i as f64 / vertical.sample_rate)
            .collect();
        for &truth in &walk.ic_times {
            total += 1;
            if times.iter().any(|&t| (t - truth).abs() <= 5.0 / 200.0) {
                found += 1;
            }
        }
    }
    let rate = found as f64 / total as f64;

    let flat = UniformSeries {
        sample_rate: 200.0,
        start_time: 0.0,
        values: Array2::from_elem((2000, 1), 0.5),
    };
    let flat_ic = match detect_events(&flat, &EventConfig::default()) {
        Ok(ev) => ev.ic.len(),
        Err(GaitError::NoGaitDetected) => 0,
        Err(e) => panic!("unexpected error on constant signal: {e}"),
    };

    verdict(
        "event-detection",
        rate >= 0.95 && flat_ic == 0,
        &format!(
            "{found}/{total} ICs within +/-5 samples ({:.1}%), {flat_ic} ICs on constant signal",
            100.0 * rate
        ),
    );
}

// --- 5. End-to-end desk-scale protocol ------------------------------------

fn read_reports(dir: &Path) -> Vec<serde_json::Value> {
    serde_json::from_str(&std::fs::read_to_string(dir.join("eval.json")).unwrap()).unwrap()
}

#[test]
fn end_to_end_desk_scale() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = Command::new(BIN)
        .args(["--seed", "42", "--out-dir"])
        .arg(tmp.path())
        .arg("run-all")
        .output()
        .unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        out.status.success(),
        "run-all failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let reports = read_reports(tmp.path());
    let acc = |name: &str| {
        reports
            .iter()
            .find(|r| r["model"] == name)
            .unwrap()["accuracy"]
            .as_f64()
            .unwrap()
    };
    let cnn = acc("RNN+CNN");
    let svm = acc("SVM");
    verdict(
        "end-to-end-desk-scale",
        cnn >= 0.99 && svm >= 0.90 && cnn >= svm && elapsed < 900.0,
        &format!(
            "cnn {:.3}%, svm {:.3}%, {elapsed:.0} s",
            100.0 * cnn,
            100.0 * svm
        ),
    );
}

// --- 6. Overfit sanity ----------------------------------------------------

#[test]
fn overfit_sanity() {
    let cycles: Vec<GaitCycle> = (0..4)
        .map(|k| {
            let mut data = Array2::zeros((9, 200));
            for c in 0..9 {
                for i in 0..200 {
                    let phase = 2.0 * std::f64::consts::PI * i as f64 / 200.0;
                    data[(c, i)] = ((c + 1) as f64 * phase + 0.3 * k as f64).sin();
                }
            }
            GaitCycle {
                data,
                label: Label::Normal,
                source_walk: format!("walk-{k}"),
                start_index: 0,
            }
        })
        .collect();
    let enc_config = EncoderConfig {
        layers: 1,
        hidden_size: 16,
        dropout_keep: 1.0,
    };
    let train_config = TrainConfig {
        epochs: 200,
        batch_size: 4,
        seed: 3,
        ..TrainConfig::default()
    };
    let (_, history) = train_autoencoder(&cycles, &enc_config, &train_config).unwrap();
    assert_eq!(history.len(), 200);
    let first = history[0];
    let last = *history.last().unwrap();
    verdict(
        "overfit-sanity",
        last <= 0.01 * first,
        &format!(
            "loss {first:.2} -> {last:.4} ({:.2}% reduction) in {} steps",
            100.0 * (1.0 - last / first),
            history.len()
        ),
    );
}

// --- 7. Protocol fidelity -------------------------------------------------

#[test]
fn protocol_fidelity() {
    let mut labels = vec![Label::Normal; 7941];
    labels.extend(vec![Label::Anomalous; 2744]);
    let split = split_dataset(&labels, &SplitSpec::default()).unwrap();
    let got = (
        split.encoder_train.len(),
        split.encoder_test.len(),
        split.classifier_train.len(),
        split.classifier_test.len(),
    );
    verdict(
        "protocol-fidelity",
        got == (4469, 497, 5147, 572),
        &format!("splits {got:?} expected (4469, 497, 5147, 572)"),
    );
}

// --- 8. Determinism -------------------------------------------------------

#[test]
fn determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
            "synth": {"n_walks": 12, "seed": 5},
            "encoder": {"layers": 2, "hidden_size": 8, "dropout_keep": 0.8},
            "encoder_train": {"epochs": 1, "seed": 1},
            "cnn": {"dims": [8, 4, 2], "kernel": [3, 1, 2, 4], "epochs": 2, "seed": 2}
        }"#,
    )
    .unwrap();
    let mut bytes = Vec::new();
    for sub in ["a", "b"] {
        let dir = tmp.path().join(sub);
        let out = Command::new(BIN)
            .arg("--config")
            .arg(&config)
            .args(["--seed", "9", "--out-dir"])
            .arg(&dir)
            .arg("run-all")
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "run-all failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        bytes.push((
            std::fs::read(dir.join("model.json")).unwrap(),
            std::fs::read(dir.join("eval.json")).unwrap(),
        ));
    }
    verdict(
        "determinism",
        bytes[0] == bytes[1],
        "model bundle and evaluation report bytes identical across seeded reruns",
    );
}

// --- 9. SVM dual feasibility ----------------------------------------------

#[test]
fn svm_dual_feasibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let n = 120;
    let mut data = Array2::zeros((n, 10));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let anomalous = i % 2 == 1;
        let center = if anomalous { 1.0 } else { -1.0 };
        for j in 0..10 {
            data[(i, j)] = center + rng.gen_range(-1.2..1.2);
        }
        labels.push(if anomalous {
            Label::Anomalous
        } else {
            Label::Normal
        });
    }
    let config = SvmConfig::default();
    let model = train_svm(&data, &labels, &config).unwrap();
    let sum: f64 = model.coeffs.iter().sum();
    let box_ok = model
        .coeffs
        .iter()
        .all(|&c| c.abs() <= model.c + 1e-12);
    verdict(
        "svm-dual-feasibility",
        box_ok && sum.abs() < 1e-9,
        &format!(
            "{} support vectors, box constraint {}, |sum alpha_i y_i| = {:.1e}",
            model.coeffs.len(),
            if box_ok { "holds" } else { "violated" },
            sum.abs()
        ),
    );
}
