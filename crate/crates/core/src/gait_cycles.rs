//! Gait-cycle extraction: IC/FC event detection on the vertical
//! acceleration channel, cycle slicing, detrending, length normalization
//! and dataset-level z-normalization.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::{convolve_same, gaussian_kernel, ricker_kernel};
use crate::signal::{Label, MultiModalTrace, UniformSeries};

#[derive(Debug, Error)]
pub enum GaitError {
    #[error("no gait events detected")]
    NoGaitDetected,
    #[error("channel {0} has near-zero variance")]
    DegenerateChannel(usize),
}

/// Detector parameters; stride-scale constants exposed so they can be
/// overridden from the pipeline config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EventConfig {
    /// Narrow DoG smoothing width, seconds.
    pub dog_sigma_narrow: f64,
    /// Wide DoG smoothing width, seconds.
    pub dog_sigma_wide: f64,
    /// Wavelet width, seconds.
    pub wavelet_sigma: f64,
    /// Minimum accepted IC-to-IC interval, seconds.
    pub min_ic_interval: f64,
    /// Maximum accepted IC-to-IC interval, seconds.
    pub max_ic_interval: f64,
    /// FC search window as a fraction of the IC interval.
    pub fc_window_fraction: f64,
    /// Minima shallower than this many standard deviations below the mean
    /// of the transformed signal are ignored.
    pub depth_factor: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        Self {
            dog_sigma_narrow: 0.02,
            dog_sigma_wide: 0.1,
            wavelet_sigma: 0.05,
            min_ic_interval: 0.7,
            max_ic_interval: 1.6,
            fc_window_fraction: 0.75,
            depth_factor: 1.0,
        }
    }
}

/// Initial and Final Contact sample indices, both strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaitEvents {
    pub ic: Vec<usize>,
    pub fc: Vec<usize>,
}

/// One normalized walking cycle: 9 channels by 200 samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitCycle {
    pub data: Array2<f64>,
    pub label: Label,
    pub source_walk: String,
    pub start_index: usize,
}

pub const CYCLE_CHANNELS: usize = 9;
pub const CYCLE_LEN: usize = 200;

/// Pooled per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Local minima with strict neighbor comparison; plateaus contribute their
/// midpoint.
fn local_minima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i] < x[i - 1] {
            // walk over a possible plateau
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] > x[i] {
                out.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn local_maxima(x: &[f64]) -> Vec<usize> {
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    local_minima(&neg)
}

/// DoG band-pass followed by a Gaussian continuous wavelet transform; ICs
/// at gated local minima of the transform, FCs at maxima of its second
/// difference inside the per-step search window.
pub fn detect_events(
    vertical_accel: &UniformSeries,
    config: &EventConfig,
) -> Result<GaitEvents, GaitError> {
    let fs = vertical_accel.sample_rate;
    let x = vertical_accel.channel(0);
    if (x.len() as f64) < 2.0 * fs {
        return Err(GaitError::NoGaitDetected);
    }

    let narrow = convolve_same(&x, &gaussian_kernel(config.dog_sigma_narrow * fs));
    let wide = convolve_same(&x, &gaussian_kernel(config.dog_sigma_wide * fs));
    let dog: Vec<f64> = narrow.iter().zip(&wide).map(|(a, b)| a - b).collect();
    let w = convolve_same(&dog, &ricker_kernel(config.wavelet_sigma * fs));

    let mean = w.iter().sum::<f64>() / w.len() as f64;
    let std = (w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / w.len() as f64).sqrt();
    let depth_gate = mean - config.depth_factor * std;

    let mut minima: Vec<usize> = local_minima(&w)
        .into_iter()
        .filter(|&i| w[i] < depth_gate)
        .collect();
    if minima.is_empty() {
        return Err(GaitError::NoGaitDetected);
    }

    // Greedy selection by depth under the minimum-interval gate; ties in
    // depth resolve by index.
    minima.sort_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap().then(a.cmp(&b)));
    let min_gap = (config.min_ic_interval * fs).round() as i64;
    let max_gap = (config.max_ic_interval * fs).round() as i64;
    let mut accepted: Vec<usize> = Vec::new();
    for idx in minima {
        if accepted
            .iter()
            .all(|&a| (a as i64 - idx as i64).abs() >= min_gap)
        {
            accepted.push(idx);
        }
    }
    accepted.sort_unstable();

    // Drop events with no neighbor inside the maximum interval: an IC that
    // is part of a walk always has one.
    let ic: Vec<usize> = accepted
        .iter()
        .enumerate()
        .filter(|&(i, &idx)| {
            let near_prev =
                i > 0 && (idx as i64 - accepted[i - 1] as i64) <= max_gap;
            let near_next = i + 1 < accepted.len()
                && (accepted[i + 1] as i64 - idx as i64) <= max_gap;
            near_prev || near_next
        })
        .map(|(_, &idx)| idx)
        .collect();
    if ic.is_empty() {
        return Err(GaitError::NoGaitDetected);
    }

    // FC: maxima of the second difference of the transform, searched in
    // (IC(i), IC(i) + fraction * interval).
    let mut d2 = vec![0.0; w.len()];
    for i in 1..w.len() - 1 {
        d2[i] = w[i + 1] - 2.0 * w[i] + w[i - 1];
    }
    let maxima = local_maxima(&d2);
    let mut fc = Vec::new();
    for pair in ic.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let end = a + ((config.fc_window_fraction * (b - a) as f64) as usize);
        let candidate = maxima
            .iter()
            .copied()
            .filter(|&m| m > a && m < end)
            .max_by(|&p, &q| d2[p].partial_cmp(&d2[q]).unwrap())
            .or_else(|| {
                // no strict local maximum in the window: take its argmax so
                // every step still carries an FC
                (a + 1..end.min(w.len()))
                    .max_by(|&p, &q| d2[p].partial_cmp(&d2[q]).unwrap())
            });
        if let Some(m) = candidate {
            fc.push(m);
        }
    }

    Ok(GaitEvents { ic, fc })
}

/// Cycle `i` spans `[IC(i), IC(i+2))`; consecutive cycles overlap by one
/// step.
pub fn slice_cycles(
    trace: &MultiModalTrace,
    events: &GaitEvents,
    walk_id: &str,
) -> Result<Vec<RawCycle>, GaitError> {
    if events.ic.len() < 3 {
        return Err(GaitError::NoGaitDetected);
    }
    let n = trace.accel.len();
    let mut cycles = Vec::new();
    for i in 0..events.ic.len() - 2 {
        let start = events.ic[i];
        let end = events.ic[i + 2];
        if end > n {
            continue;
        }
        let len = end - start;
        let mut data = Array2::zeros((CYCLE_CHANNELS, len));
        for t in 0..len {
            for c in 0..3 {
                data[(c, t)] = trace.accel.values[(start + t, c)];
                data[(3 + c, t)] = trace.gyro.values[(start + t, c)];
                data[(6 + c, t)] = trace.angles.values[(start + t, c)];
            }
        }
        cycles.push(RawCycle {
            data,
            label: trace.label,
            source_walk: walk_id.to_string(),
            start_index: start,
        });
    }
    Ok(cycles)
}

/// A sliced but not yet length-normalized cycle (9 x L).
#[derive(Debug, Clone)]
pub struct RawCycle {
    pub data: Array2<f64>,
    pub label: Label,
    pub source_walk: String,
    pub start_index: usize,
}

/// Remove the least-squares slope of each channel about the cycle midpoint,
/// keeping the channel mean.
pub fn detrend_cycle(cycle: &Array2<f64>) -> Array2<f64> {
    let (rows, len) = cycle.dim();
    assert!(len >= 2);
    let t_mid = (len as f64 - 1.0) / 2.0;
    let denom: f64 = (0..len).map(|t| (t as f64 - t_mid).powi(2)).sum();
    let mut out = cycle.clone();
    for r in 0..rows {
        let num: f64 = (0..len)
            .map(|t| (t as f64 - t_mid) * cycle[(r, t)])
            .sum();
        let slope = num / denom;
        for t in 0..len {
            out[(r, t)] -= slope * (t as f64 - t_mid);
        }
    }
    out
}

/// Per-channel linear interpolation onto `target` equally spaced points
/// over [0, L-1]; endpoints are preserved exactly.
pub fn normalize_length(cycle: &Array2<f64>, target: usize) -> Array2<f64> {
    let (rows, len) = cycle.dim();
    assert!(len >= 2 && target >= 2);
    let mut out = Array2::zeros((rows, target));
    for r in 0..rows {
        for t in 0..target {
            let pos = t as f64 * (len as f64 - 1.0) / (target as f64 - 1.0);
            let i = (pos.floor() as usize).min(len - 2);
            let w = pos - i as f64;
            out[(r, t)] = cycle[(r, i)] * (1.0 - w) + cycle[(r, i + 1)] * w;
        }
    }
    out
}

/// Finish a raw cycle: detrend, then resample to the canonical 200 samples.
pub fn finalize_cycle(raw: &RawCycle) -> GaitCycle {
    let detrended = detrend_cycle(&raw.data);
    GaitCycle {
        data: normalize_length(&detrended, CYCLE_LEN),
        label: raw.label,
        source_walk: raw.source_walk.clone(),
        start_index: raw.start_index,
    }
}

/// Pooled per-channel statistics over all cycles and time steps.
pub fn fit_norm_stats(cycles: &[GaitCycle]) -> Result<NormStats, GaitError> {
    assert!(!cycles.is_empty());
    let mut mean = vec![0.0; CYCLE_CHANNELS];
    let mut count = 0usize;
    for cy in cycles {
        for c in 0..CYCLE_CHANNELS {
            for t in 0..CYCLE_LEN {
                mean[c] += cy.data[(c, t)];
            }
        }
        count += CYCLE_LEN;
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let mut var = vec![0.0; CYCLE_CHANNELS];
    for cy in cycles {
        for c in 0..CYCLE_CHANNELS {
            for t in 0..CYCLE_LEN {
                let d = cy.data[(c, t)] - mean[c];
                var[c] += d * d;
            }
        }
    }
    let mut std = vec![0.0; CYCLE_CHANNELS];
    for c in 0..CYCLE_CHANNELS {
        std[c] = (var[c] / count as f64).sqrt();
        if std[c] < 1e-12 {
            return Err(GaitError::DegenerateChannel(c));
        }
    }
    Ok(NormStats { mean, std })
}

pub fn apply_norm(cycle: &GaitCycle, stats: &NormStats) -> GaitCycle {
    let mut data = cycle.data.clone();
    for c in 0..CYCLE_CHANNELS {
        for t in 0..CYCLE_LEN {
            data[(c, t)] = (data[(c, t)] - stats.mean[c]) / stats.std[c];
        }
    }
    GaitCycle {
        data,
        label: cycle.label,
        source_walk: cycle.source_walk.clone(),
        start_index: cycle.start_index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn uniform(vals: Vec<f64>) -> UniformSeries {
        let n = vals.len();
        UniformSeries {
            sample_rate: 200.0,
            start_time: 0.0,
            values: Array2::from_shape_vec((n, 1), vals).unwrap(),
        }
    }

    /// Vertical-acceleration template: smooth baseline plus a sharp
    /// negative bump at each IC instant.
    fn bump_train(ic_times: &[f64], duration: f64) -> Vec<f64> {
        let n = (duration * 200.0) as usize;
        (0..n)
            .map(|i| {
                let t = i as f64 / 200.0;
                let mut v = 0.3 * (2.0 * std::f64::consts::PI * 1.0 * t).sin();
                for &tc in ic_times {
                    v -= 3.0 * (-(t - tc) * (t - tc) / (2.0 * 0.03f64.powi(2))).exp();
                }
                v
            })
            .collect()
    }

    #[test]
    fn detects_constructed_minima() {
        let ic_times: Vec<f64> = (0..6).map(|i| 0.5 + i as f64).collect();
        let s = uniform(bump_train(&ic_times, 6.5));
        let events = detect_events(&s, &EventConfig::default()).unwrap();
        assert_eq!(events.ic.len(), ic_times.len());
        for (&got, &want) in events.ic.iter().zip(&ic_times) {
            let want_idx = (want * 200.0) as i64;
            assert!(
                (got as i64 - want_idx).abs() <= 5,
                "IC {got} vs expected {want_idx}"
            );
        }
    }

    #[test]
    fn constant_signal_has_no_gait() {
        let s = uniform(vec![1.0; 1000]);
        assert!(matches!(
            detect_events(&s, &EventConfig::default()),
            Err(GaitError::NoGaitDetected)
        ));
    }

    #[test]
    fn short_signal_has_no_gait() {
        let s = uniform(bump_train(&[0.5], 1.5));
        assert!(matches!(
            detect_events(&s, &EventConfig::default()),
            Err(GaitError::NoGaitDetected)
        ));
    }

    #[test]
    fn spurious_spike_rejected_by_interval_gate() {
        let ic_times: Vec<f64> = (0..5).map(|i| 0.5 + i as f64).collect();
        let mut vals = bump_train(&ic_times, 5.5);
        // extra spike 0.1 s after the first IC, below the min IC interval
        let spike_t = 0.6;
        for (i, v) in vals.iter_mut().enumerate() {
            let t = i as f64 / 200.0;
            *v -= 2.0 * (-(t - spike_t) * (t - spike_t) / (2.0 * 0.03f64.powi(2))).exp();
        }
        let events = detect_events(&uniform(vals), &EventConfig::default()).unwrap();
        assert_eq!(events.ic.len(), ic_times.len());
        let spike_idx = (spike_t * 200.0) as i64;
        for &ic in &events.ic {
            // detection stays on the constructed ICs, not the spike
            let nearest_true = ic_times
                .iter()
                .map(|&t| ((t * 200.0) as i64 - ic as i64).abs())
                .min()
                .unwrap();
            assert!(nearest_true <= 5 || (ic as i64 - spike_idx).abs() > 5);
        }
    }

    #[test]
    fn fc_between_consecutive_ics() {
        let ic_times: Vec<f64> = (0..6).map(|i| 0.5 + i as f64).collect();
        let events =
            detect_events(&uniform(bump_train(&ic_times, 6.5)), &EventConfig::default()).unwrap();
        assert_eq!(events.fc.len(), events.ic.len() - 1);
        for (i, &fc) in events.fc.iter().enumerate() {
            assert!(fc > events.ic[i] && fc < events.ic[i + 1]);
        }
    }

    #[test]
    fn time_reversal_mirrors_ic_positions() {
        let ic_times: Vec<f64> = (0..6).map(|i| 0.5 + i as f64).collect();
        let vals = bump_train(&ic_times, 6.5);
        let n = vals.len();
        let rev: Vec<f64> = vals.iter().rev().copied().collect();
        let fwd = detect_events(&uniform(vals), &EventConfig::default()).unwrap();
        let bwd = detect_events(&uniform(rev), &EventConfig::default()).unwrap();
        assert_eq!(fwd.ic.len(), bwd.ic.len());
        let mirrored: Vec<i64> = bwd.ic.iter().rev().map(|&i| (n - 1 - i) as i64).collect();
        for (&a, &b) in fwd.ic.iter().zip(&mirrored) {
            assert!((a as i64 - b).abs() <= 2, "{a} vs {b}");
        }
    }

    fn trace_with(n: usize) -> MultiModalTrace {
        let mk = |ch: usize| UniformSeries {
            sample_rate: 200.0,
            start_time: 0.0,
            values: Array2::from_shape_fn((n, ch), |(i, c)| (i * 10 + c) as f64),
        };
        MultiModalTrace {
            accel: mk(3),
            gyro: mk(3),
            angles: mk(3),
            label: Label::Normal,
        }
    }

    #[test]
    fn slice_follows_ic_to_ic_plus_two() {
        let trace = trace_with(400);
        let events = GaitEvents {
            ic: vec![0, 100, 200, 300],
            fc: vec![50, 150, 250],
        };
        let cycles = slice_cycles(&trace, &events, "w").unwrap();
        assert_eq!(cycles.len(), 2);
        assert_eq!(cycles[0].data.dim(), (9, 200));
        assert_eq!(cycles[0].start_index, 0);
        assert_eq!(cycles[1].data.dim(), (9, 200));
        assert_eq!(cycles[1].start_index, 100);
    }

    #[test]
    fn three_ics_give_one_cycle() {
        let trace = trace_with(300);
        let events = GaitEvents {
            ic: vec![10, 110, 250],
            fc: vec![60, 160],
        };
        assert_eq!(slice_cycles(&trace, &events, "w").unwrap().len(), 1);
    }

    #[test]
    fn fewer_than_three_ics_is_no_gait() {
        let trace = trace_with(300);
        let events = GaitEvents {
            ic: vec![10, 110],
            fc: vec![60],
        };
        assert!(matches!(
            slice_cycles(&trace, &events, "w"),
            Err(GaitError::NoGaitDetected)
        ));
    }

    #[test]
    fn detrend_removes_slope_keeps_mean() {
        let cycle = Array2::from_shape_vec((1, 4), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let out = detrend_cycle(&cycle);
        for t in 0..4 {
            assert_abs_diff_eq!(out[(0, t)], 1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn detrend_leaves_flat_channel_alone() {
        let cycle = Array2::from_elem((2, 50), 2.0);
        assert_eq!(detrend_cycle(&cycle), cycle);
    }

    #[test]
    fn detrend_recovers_sine_under_ramp() {
        // Whole periods of an oscillation centred on the cycle midpoint:
        // its least-squares slope vanishes by symmetry, so detrending must
        // remove exactly the added ramp.
        let len = 400;
        let t_mid = (len as f64 - 1.0) / 2.0;
        let sine: Vec<f64> = (0..len)
            .map(|t| {
                (2.0 * std::f64::consts::PI * 4.0 * (t as f64 - t_mid) / len as f64).cos()
            })
            .collect();
        let with_ramp: Vec<f64> = sine
            .iter()
            .enumerate()
            .map(|(t, &v)| v + 0.01 * t as f64)
            .collect();
        let cycle = Array2::from_shape_vec((1, len), with_ramp).unwrap();
        let out = detrend_cycle(&cycle);
        let offset = out[(0, 0)] - sine[0];
        for t in 0..len {
            assert_abs_diff_eq!(out[(0, t)], sine[t] + offset, epsilon = 1e-9);
        }
    }

    #[test]
    fn detrend_output_slope_is_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cycle = Array2::from_shape_fn((9, 137), |_| rng.gen_range(-2.0..2.0));
        let out = detrend_cycle(&cycle);
        let len = 137;
        let t_mid = (len as f64 - 1.0) / 2.0;
        let denom: f64 = (0..len).map(|t| (t as f64 - t_mid).powi(2)).sum();
        for r in 0..9 {
            let slope: f64 = (0..len)
                .map(|t| (t as f64 - t_mid) * out[(r, t)])
                .sum::<f64>()
                / denom;
            assert_abs_diff_eq!(slope, 0.0, epsilon = 1e-9);
            let mean_in = cycle.row(r).mean().unwrap();
            let mean_out = out.row(r).mean().unwrap();
            assert_abs_diff_eq!(mean_in, mean_out, epsilon = 1e-9);
        }
    }

    #[test]
    fn normalize_length_identity_at_200() {
        let cycle = Array2::from_shape_fn((9, 200), |(r, t)| (r * t) as f64 * 0.01);
        let out = normalize_length(&cycle, 200);
        for (a, b) in out.iter().zip(cycle.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_length_constant_channel() {
        let cycle = Array2::from_elem((1, 77), 4.2);
        let out = normalize_length(&cycle, 200);
        assert_eq!(out.dim(), (1, 200));
        for &v in out.iter() {
            assert_abs_diff_eq!(v, 4.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_length_exact_on_ramp() {
        let len = 137;
        let cycle = Array2::from_shape_fn((1, len), |(_, t)| t as f64);
        let out = normalize_length(&cycle, 200);
        assert_abs_diff_eq!(out[(0, 0)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[(0, 199)], (len - 1) as f64, epsilon = 1e-12);
        for t in 0..200 {
            let expect = t as f64 * (len as f64 - 1.0) / 199.0;
            assert_abs_diff_eq!(out[(0, t)], expect, epsilon = 1e-9);
        }
    }

    fn cycle_of(data: Array2<f64>) -> GaitCycle {
        GaitCycle {
            data,
            label: Label::Normal,
            source_walk: "w".into(),
            start_index: 0,
        }
    }

    #[test]
    fn constant_channel_is_degenerate() {
        let mut data = Array2::from_shape_fn((9, 200), |(r, t)| ((r + 1) * t) as f64);
        for t in 0..200 {
            data[(0, t)] = 2.0;
        }
        assert!(matches!(
            fit_norm_stats(&[cycle_of(data)]),
            Err(GaitError::DegenerateChannel(0))
        ));
    }

    #[test]
    fn plus_minus_one_cycles_pool_to_unit_std() {
        let a = cycle_of(Array2::from_elem((9, 200), 1.0));
        let mut b = cycle_of(Array2::from_elem((9, 200), -1.0));
        // keep every channel non-degenerate in both halves
        b.data[(0, 0)] = -1.0;
        let stats = fit_norm_stats(&[a, b]).unwrap();
        for c in 0..9 {
            assert_abs_diff_eq!(stats.mean[c], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(stats.std[c], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalization_round_trip_and_fixed_point() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let cycles: Vec<GaitCycle> = (0..5)
            .map(|_| cycle_of(Array2::from_shape_fn((9, 200), |_| rng.gen_range(-3.0..3.0))))
            .collect();
        let stats = fit_norm_stats(&cycles).unwrap();
        let normed: Vec<GaitCycle> = cycles.iter().map(|c| apply_norm(c, &stats)).collect();

        // pooled statistics of the normalized set are (0, 1)
        let post = fit_norm_stats(&normed).unwrap();
        for c in 0..9 {
            assert_abs_diff_eq!(post.mean[c], 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(post.std[c], 1.0, epsilon = 1e-9);
        }

        // algebraic inverse restores the original values
        for (orig, norm) in cycles.iter().zip(&normed) {
            for c in 0..9 {
                for t in 0..200 {
                    let back = norm.data[(c, t)] * stats.std[c] + stats.mean[c];
                    assert_abs_diff_eq!(back, orig.data[(c, t)], epsilon = 1e-12);
                }
            }
        }

        // identity stats are a fixed point
        let id = NormStats {
            mean: vec![0.0; 9],
            std: vec![1.0; 9],
        };
        let same = apply_norm(&cycles[0], &id);
        assert_eq!(same.data, cycles[0].data);
    }

    #[test]
    fn cycle_at_channel_means_normalizes_to_zero() {
        let stats = NormStats {
            mean: (0..9).map(|c| c as f64).collect(),
            std: vec![2.0; 9],
        };
        let data = Array2::from_shape_fn((9, 200), |(c, _)| c as f64);
        let out = apply_norm(&cycle_of(data), &stats);
        assert!(out.data.iter().all(|&v| v == 0.0));
    }
}
