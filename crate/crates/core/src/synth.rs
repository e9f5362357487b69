//! Deterministic synthetic walk generator with ground-truth gait events.
//! Normal walks are quasi-periodic stride templates with jitter; anomalies
//! are parametric template deformations (amplitude reduction, left/right
//! asymmetry, cadence slowdown, pitch offset drift). These are signal-level
//! proxies, not clinical models.

use nalgebra::{Matrix3, Vector3};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ego_motion::{recompose, Correspondence, EulerAngles, FrameMatches};
use crate::signal::{Label, TimedSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    /// Shuffling walk: weakened heel-strike impacts.
    AmplitudeReduction,
    /// Hemiplegic-style gait: one side strikes softer.
    Asymmetry,
    /// Overall speed reduction to 0.7x cadence.
    CadenceSlowdown,
    /// Trunk-posture tilt: growing pitch offset.
    PitchDrift,
}

pub const ALL_ANOMALIES: [AnomalyKind; 4] = [
    AnomalyKind::AmplitudeReduction,
    AnomalyKind::Asymmetry,
    AnomalyKind::CadenceSlowdown,
    AnomalyKind::PitchDrift,
];

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_walks: usize,
    /// Fraction of walks drawn as anomalous.
    pub anomaly_fraction: f64,
    pub strides_min: usize,
    pub strides_max: usize,
    /// Nominal initial-contact spacing in seconds.
    pub ic_interval: f64,
    /// Inertial sampling rate before resampling.
    pub accel_rate: f64,
    /// Camera frame rate for the angle stream.
    pub angle_rate: f64,
    /// Additive measurement noise amplitude.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_walks: 200,
            anomaly_fraction: 0.5,
            strides_min: 12,
            strides_max: 18,
            ic_interval: 1.05,
            accel_rate: 250.0,
            angle_rate: 30.0,
            noise: 0.02,
            seed: 0,
        }
    }
}

/// One generated walk with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticWalk {
    pub id: String,
    pub label: Label,
    pub anomaly: Option<AnomalyKind>,
    pub accel: TimedSeries,
    pub gyro: TimedSeries,
    pub angles: TimedSeries,
    /// Ground-truth initial-contact times in seconds.
    pub ic_times: Vec<f64>,
    /// Stride interval actually used (after anomaly scaling).
    pub stride_interval: f64,
}

const BUMP_SIGMA: f64 = 0.03;
const BUMP_AMP: f64 = 3.0;
const LEAD_IN: f64 = 1.2;
const TAIL: f64 = 1.2;

fn bump(t: f64, center: f64, amp: f64) -> f64 {
    let d = (t - center) / BUMP_SIGMA;
    -amp * (-0.5 * d * d).exp()
}

/// Generate one walk. The vertical accelerometer carries a sharp negative
/// impact bump at every IC over a smooth stride-frequency baseline; the
/// angle stream holds per-frame relative rotations phase-locked to the
/// stride so cross-correlation alignment has signal to work with.
pub fn generate_walk(
    id: &str,
    anomaly: Option<AnomalyKind>,
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> SyntheticWalk {
    let strides = rng.gen_range(config.strides_min..=config.strides_max);
    let cadence_scale = match anomaly {
        Some(AnomalyKind::CadenceSlowdown) => 1.0 / 0.7,
        _ => 1.0,
    };
    let interval = config.ic_interval * cadence_scale * (1.0 + 0.02 * rng.gen_range(-1.0..1.0));
    let amp_scale = match anomaly {
        Some(AnomalyKind::AmplitudeReduction) => 0.5,
        _ => 1.0,
    };

    let mut ic_times = Vec::with_capacity(strides);
    let mut amps = Vec::with_capacity(strides);
    for k in 0..strides {
        let jitter = 0.01 * interval * rng.gen_range(-1.0..1.0);
        ic_times.push(LEAD_IN + k as f64 * interval + jitter);
        let side_scale = match anomaly {
            Some(AnomalyKind::Asymmetry) if k % 2 == 1 => 0.5,
            _ => 1.0,
        };
        amps.push(BUMP_AMP * amp_scale * side_scale * (1.0 + 0.05 * rng.gen_range(-1.0..1.0)));
    }
    let duration = ic_times.last().unwrap() + TAIL;
    let omega = 2.0 * std::f64::consts::PI / interval;

    // inertial streams with slight timestamp jitter (half the step at most)
    let n_inertial = (duration * config.accel_rate) as usize;
    let dt = 1.0 / config.accel_rate;
    let mut ts = Vec::with_capacity(n_inertial);
    for i in 0..n_inertial {
        ts.push(i as f64 * dt + 0.1 * dt * rng.gen_range(-1.0..1.0));
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);

    let mut accel = Array2::zeros((ts.len(), 3));
    let mut gyro = Array2::zeros((ts.len(), 3));
    for (i, &t) in ts.iter().enumerate() {
        let phase = omega * t;
        accel[(i, 0)] = 0.2 * phase.sin() + config.noise * rng.gen_range(-1.0..1.0);
        accel[(i, 1)] = 0.15 * (phase + 0.9).cos() + config.noise * rng.gen_range(-1.0..1.0);
        let mut v = 0.3 * (phase + 0.3).sin();
        for (ic, amp) in ic_times.iter().zip(&amps) {
            if (t - ic).abs() < 6.0 * BUMP_SIGMA {
                v += bump(t, *ic, *amp);
            }
        }
        accel[(i, 2)] = v + config.noise * rng.gen_range(-1.0..1.0);

        gyro[(i, 0)] = 0.25 * (phase + 1.7).sin() + config.noise * rng.gen_range(-1.0..1.0);
        gyro[(i, 1)] = 0.3 * (0.5 * phase).cos() + config.noise * rng.gen_range(-1.0..1.0);
        gyro[(i, 2)] = 0.2 * (phase + 2.4).sin() + config.noise * rng.gen_range(-1.0..1.0);
    }
    let names3 = |a: &str, b: &str, c: &str| vec![a.to_string(), b.to_string(), c.to_string()];
    let accel = TimedSeries::new(ts.clone(), accel, names3("ax", "ay", "az")).unwrap();
    let gyro = TimedSeries::new(ts, gyro, names3("gx", "gy", "gz")).unwrap();

    // camera-angle stream: per-frame relative rotations at the frame rate;
    // entry 0 is zero by convention (no motion before the first pair)
    let n_frames = (duration * config.angle_rate) as usize;
    let mut angle_ts = Vec::with_capacity(n_frames);
    let mut angles = Array2::zeros((n_frames, 3));
    for f in 0..n_frames {
        let t = f as f64 / config.angle_rate;
        angle_ts.push(t);
        if f == 0 {
            continue;
        }
        let phase = omega * t;
        let drift = match anomaly {
            Some(AnomalyKind::PitchDrift) => 0.12 * (0.3 + 0.7 * t / duration),
            _ => 0.0,
        };
        angles[(f, 0)] = 0.020 * (phase + 0.5).sin();
        angles[(f, 1)] = 0.040 * (phase + 0.3).sin() + drift;
        angles[(f, 2)] = 0.015 * (phase + 1.1).cos();
    }
    let angles = TimedSeries::new(angle_ts, angles, names3("roll", "pitch", "yaw")).unwrap();

    SyntheticWalk {
        id: id.to_string(),
        label: if anomaly.is_some() {
            Label::Anomalous
        } else {
            Label::Normal
        },
        anomaly,
        accel,
        gyro,
        angles,
        ic_times,
        stride_interval: interval,
    }
}

/// Generate the full suite: anomalous walks cycle through the anomaly
/// kinds in order. Deterministic under the config seed.
pub fn generate_walks(config: &SynthConfig) -> Vec<SyntheticWalk> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_anomalous = (config.anomaly_fraction * config.n_walks as f64).round() as usize;
    let mut walks = Vec::with_capacity(config.n_walks);
    let mut anomaly_counter = 0usize;
    for w in 0..config.n_walks {
        // interleave so both classes appear throughout the suite
        let make_anomalous = w % 2 == 1 && anomaly_counter < n_anomalous;
        let kind = if make_anomalous {
            let k = ALL_ANOMALIES[anomaly_counter % ALL_ANOMALIES.len()];
            anomaly_counter += 1;
            Some(k)
        } else {
            None
        };
        walks.push(generate_walk(&format!("walk-{w:04}"), kind, config, &mut rng));
    }
    walks
}

/// E = [t]x R for a known relative pose.
pub fn essential_from_pose(r: &Matrix3<f64>, t: &Vector3<f64>) -> Matrix3<f64> {
    let tx = Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0);
    tx * r
}

/// Synthesize noiseless point correspondences realizing the per-frame
/// relative rotations of an angle stream (rows are roll/pitch/yaw; row 0
/// ignored). One `FrameMatches` per consecutive frame pair.
pub fn correspondences_for_angles(
    angles: &TimedSeries,
    points_per_frame: usize,
    seed: u64,
) -> Vec<FrameMatches> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = angles.timestamps.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for f in 1..n {
        let rel = EulerAngles {
            roll: angles.values[(f, 0)],
            pitch: angles.values[(f, 1)],
            yaw: angles.values[(f, 2)],
            gimbal_warning: false,
        };
        let r = recompose(&rel);
        // translation direction varies a little per frame but stays
        // well away from zero (pure rotation has no essential matrix)
        let t = Vector3::new(
            0.8 + 0.1 * (f as f64 * 0.7).sin(),
            0.3 + 0.1 * (f as f64 * 1.3).cos(),
            0.2,
        )
        .normalize();

        let mut matches = Vec::with_capacity(points_per_frame);
        while matches.len() < points_per_frame {
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
        out.push(FrameMatches {
            frame_index: f,
            matches,
        });
    }
    out
}
