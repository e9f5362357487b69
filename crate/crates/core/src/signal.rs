//! Conditioning of raw timestamped sensor streams: resampling to a uniform
//! clock, low-pass denoising and cross-modal time alignment.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientData(usize),
    #[error("timestamps must be strictly increasing (violation at index {0})")]
    InvalidTimestamps(usize),
    #[error("cutoff {cutoff} Hz must be below the Nyquist frequency {nyquist} Hz")]
    InvalidCutoff { cutoff: f64, nyquist: f64 },
    #[error("no valid lag produced an overlapping window")]
    AlignmentFailure,
    #[error("series channel count mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("sample rates differ: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),
}

/// Walk label attached to a trace and propagated to every cycle cut from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Anomalous,
}

impl Label {
    pub fn as_index(self) -> usize {
        match self {
            Label::Normal => 0,
            Label::Anomalous => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::Normal
        } else {
            Label::Anomalous
        }
    }
}

/// Irregularly sampled multichannel series, one row per sample.
#[derive(Debug, Clone)]
pub struct TimedSeries {
    pub timestamps: Vec<f64>,
    pub values: Array2<f64>,
    pub channel_names: Vec<String>,
}

impl TimedSeries {
    pub fn new(
        timestamps: Vec<f64>,
        values: Array2<f64>,
        channel_names: Vec<String>,
    ) -> Result<Self, SignalError> {
        if timestamps.len() != values.nrows() {
            return Err(SignalError::InsufficientData(timestamps.len()));
        }
        for i in 1..timestamps.len() {
            if timestamps[i] <= timestamps[i - 1] {
                return Err(SignalError::InvalidTimestamps(i));
            }
        }
        Ok(Self {
            timestamps,
            values,
            channel_names,
        })
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }
}

/// Uniformly sampled multichannel series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformSeries {
    pub sample_rate: f64,
    pub start_time: f64,
    pub values: Array2<f64>,
}

impl UniformSeries {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.column(c).to_vec()
    }

    pub fn time_of(&self, n: usize) -> f64 {
        self.start_time + n as f64 / self.sample_rate
    }
}

/// Aligned accelerometer, gyroscope and camera-angle streams for one walk.
#[derive(Debug, Clone)]
pub struct MultiModalTrace {
    pub accel: UniformSeries,
    pub gyro: UniformSeries,
    pub angles: UniformSeries,
    pub label: Label,
}

/// Linear interpolation of an irregular series onto a uniform grid spanning
/// the input's time support. No extrapolation: the grid stops at the last
/// input timestamp.
pub fn resample(input: &TimedSeries, target_rate: f64) -> Result<UniformSeries, SignalError> {
    let n = input.timestamps.len();
    if n < 2 {
        return Err(SignalError::InsufficientData(n));
    }
    assert!(target_rate > 0.0, "target_rate must be positive");

    let t0 = input.timestamps[0];
    let t_end = input.timestamps[n - 1];
    let dt = 1.0 / target_rate;
    let out_len = ((t_end - t0) / dt).floor() as usize + 1;

    let c = input.channels();
    let mut out = Array2::zeros((out_len, c));
    let mut seg = 0usize;
    for row in 0..out_len {
        let t = t0 + row as f64 * dt;
        while seg + 2 < n && input.timestamps[seg + 1] < t {
            seg += 1;
        }
        let ta = input.timestamps[seg];
        let tb = input.timestamps[seg + 1];
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        for ch in 0..c {
            let va = input.values[(seg, ch)];
            let vb = input.values[(seg + 1, ch)];
            out[(row, ch)] = va + w * (vb - va);
        }
    }

    Ok(UniformSeries {
        sample_rate: target_rate,
        start_time: t0,
        values: out,
    })
}

/// Zero-phase low-pass: forward-backward 4th-order Butterworth.
pub fn lowpass(input: &UniformSeries, cutoff: f64) -> Result<UniformSeries, SignalError> {
    let nyquist = input.sample_rate / 2.0;
    if cutoff >= nyquist {
        return Err(SignalError::InvalidCutoff { cutoff, nyquist });
    }
    let sos = crate::filter::butterworth_lowpass(4, cutoff, input.sample_rate);
    let mut out = input.values.clone();
    for mut col in out.axis_iter_mut(Axis(1)) {
        let filtered = crate::filter::filtfilt(&sos, col.as_slice().unwrap_or(&col.to_vec()));
        for (dst, src) in col.iter_mut().zip(filtered) {
            *dst = src;
        }
    }
    Ok(UniformSeries {
        sample_rate: input.sample_rate,
        start_time: input.start_time,
        values: out,
    })
}

/// Argmax of normalized cross-correlation between the designated reference
/// channels of `a` and `b`, over lags in `[-max_lag, max_lag]`. A positive
/// lag means `b` is delayed relative to `a`. Ties break toward smaller |lag|.
pub fn estimate_delay(
    a: &UniformSeries,
    b: &UniformSeries,
    a_channel: usize,
    b_channel: usize,
    max_lag: usize,
) -> Result<i64, SignalError> {
    if (a.sample_rate - b.sample_rate).abs() > 1e-9 {
        return Err(SignalError::RateMismatch(a.sample_rate, b.sample_rate));
    }
    let xa = a.channel(a_channel);
    let xb = b.channel(b_channel);
    if xa.len() <= max_lag || xb.len() <= max_lag {
        return Err(SignalError::AlignmentFailure);
    }

    let mut best: Option<(f64, i64)> = None;
    for lag in -(max_lag as i64)..=(max_lag as i64) {
        // b[i] is compared to a[i - lag]
        let start = lag.max(0) as usize;
        let end = (xb.len() as i64).min(xa.len() as i64 + lag) as usize;
        if end <= start + 1 {
            continue;
        }
        let nb = &xb[start..end];
        let na: Vec<f64> = (start..end).map(|i| xa[(i as i64 - lag) as usize]).collect();
        let score = normalized_correlation(&na, nb);
        let better = match best {
            None => true,
            Some((s, l)) => {
                score > s + 1e-15 || ((score - s).abs() <= 1e-15 && lag.abs() < l.abs())
            }
        };
        if better {
            best = Some((score, lag));
        }
    }
    best.map(|(_, lag)| lag).ok_or(SignalError::AlignmentFailure)
}

fn normalized_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    if da <= 0.0 || db <= 0.0 {
        return 0.0;
    }
    num / (da * db).sqrt()
}

/// Vertical accelerometer channel used as the alignment reference.
pub const VERTICAL_ACCEL_CHANNEL: usize = 2;
/// Pitch channel of the angle stream used as the alignment reference.
pub const PITCH_ANGLE_CHANNEL: usize = 1;

/// Shift the angle stream by the estimated delay against the vertical
/// accelerometer channel, then crop all three streams to common support.
pub fn align(
    accel: &UniformSeries,
    gyro: &UniformSeries,
    angles: &UniformSeries,
    max_lag: usize,
    label: Label,
) -> Result<MultiModalTrace, SignalError> {
    let lag = estimate_delay(
        accel,
        angles,
        VERTICAL_ACCEL_CHANNEL,
        PITCH_ANGLE_CHANNEL,
        max_lag,
    )?;

    // A positive lag means the angle stream lags the accelerometer: drop its
    // first `lag` samples to advance it.
    let (angle_skip, inertial_skip) = if lag >= 0 {
        (lag as usize, 0usize)
    } else {
        (0usize, (-lag) as usize)
    };

    let common = (accel.len() - inertial_skip)
        .min(gyro.len() - inertial_skip)
        .min(angles.len() - angle_skip);
    if common == 0 {
        return Err(SignalError::AlignmentFailure);
    }

    let crop = |s: &UniformSeries, skip: usize| UniformSeries {
        sample_rate: s.sample_rate,
        start_time: s.start_time + skip as f64 / s.sample_rate,
        values: s
            .values
            .slice(ndarray::s![skip..skip + common, ..])
            .to_owned(),
    };

    Ok(MultiModalTrace {
        accel: crop(accel, inertial_skip),
        gyro: crop(gyro, inertial_skip),
        angles: crop(angles, angle_skip),
        label,
    })
}
