//! Dataset construction: runs raw walk recordings through the signal and
//! geometry stages into normalized gait cycles, and defines the on-disk
//! formats (CSV traces, JSONL correspondences and cycles, JSON stats).

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::ego_motion::{
    angles_to_series, decompose_essential, estimate_essential, integrate_poses, Correspondence,
    FrameMatches, RansacConfig,
};
use crate::gait_cycles::{
    detect_events, finalize_cycle, slice_cycles, EventConfig, GaitCycle, NormStats,
};
use crate::signal::{align, lowpass, resample, Label, TimedSeries, UniformSeries};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("signal stage failed: {0}")]
    Signal(#[from] crate::signal::SignalError),
    #[error("geometry stage failed: {0}")]
    Geometry(#[from] crate::ego_motion::EgoMotionError),
    #[error("gait stage failed: {0}")]
    Gait(#[from] crate::gait_cycles::GaitError),
    #[error("every walk failed; no cycles produced")]
    PipelineFailure,
}

/// Stage parameters for turning one walk into cycles.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub target_rate: f64,
    pub cutoff: f64,
    /// Maximum cross-correlation lag for stream alignment, in samples.
    pub max_lag: usize,
    pub events: EventConfig,
    pub ransac: RansacConfig,
    /// Camera frame rate assumed when angles come from correspondences.
    pub frame_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            target_rate: 200.0,
            cutoff: 40.0,
            max_lag: 100,
            events: EventConfig::default(),
            ransac: RansacConfig::default(),
            frame_rate: 30.0,
        }
    }
}

/// Where a walk's orientation stream comes from.
#[derive(Debug, Clone)]
pub enum AngleSource {
    /// Precomputed roll/pitch/yaw series.
    Series(TimedSeries),
    /// Raw point matches; angles are recovered through the essential
    /// matrix.
    Correspondences {
        frames: Vec<FrameMatches>,
        start_time: f64,
    },
}

/// One walk ready for processing.
#[derive(Debug, Clone)]
pub struct WalkData {
    pub id: String,
    pub label: Label,
    pub accel: TimedSeries,
    pub gyro: TimedSeries,
    pub angles: AngleSource,
}

/// Recover the angle series from point correspondences.
pub fn angles_from_correspondences(
    frames: &[FrameMatches],
    ransac: &RansacConfig,
    frame_rate: f64,
    start_time: f64,
) -> Result<TimedSeries, PipelineError> {
    if frames.is_empty() {
        return Err(PipelineError::Malformed("no correspondence frames".into()));
    }
    let mut relatives = Vec::with_capacity(frames.len());
    for fm in frames {
        let (e, mask) = estimate_essential(fm, ransac)?;
        let inliers: Vec<Correspondence> = fm
            .matches
            .iter()
            .zip(&mask)
            .filter(|(_, &keep)| keep)
            .map(|(m, _)| *m)
            .collect();
        relatives.push(decompose_essential(&e, &inliers)?);
    }
    let chain = integrate_poses(&relatives);
    Ok(angles_to_series(&chain, frame_rate, start_time))
}

/// Full per-walk pipeline: resample to the target rate, low-pass the
/// inertial streams, align, detect gait events, slice and normalize
/// cycles.
pub fn process_walk(
    walk: &WalkData,
    config: &PipelineConfig,
) -> Result<Vec<GaitCycle>, PipelineError> {
    let angles_series = match &walk.angles {
        AngleSource::Series(s) => s.clone(),
        AngleSource::Correspondences { frames, start_time } => angles_from_correspondences(
            frames,
            &config.ransac,
            config.frame_rate,
            *start_time,
        )?,
    };

    let accel = lowpass(&resample(&walk.accel, config.target_rate)?, config.cutoff)?;
    let gyro = lowpass(&resample(&walk.gyro, config.target_rate)?, config.cutoff)?;
    let angles = resample(&angles_series, config.target_rate)?;

    let trace = align(&accel, &gyro, &angles, config.max_lag, walk.label)?;

    let vertical = UniformSeries {
        sample_rate: trace.accel.sample_rate,
        start_time: trace.accel.start_time,
        values: trace
            .accel
            .values
            .column(crate::signal::VERTICAL_ACCEL_CHANNEL)
            .to_owned()
            .insert_axis(ndarray::Axis(1)),
    };
    let events = detect_events(&vertical, &config.events)?;
    let raw = slice_cycles(&trace, &events, &walk.id)?;
    Ok(raw.iter().map(finalize_cycle).collect())
}

/// Outcome of a dataset build: produced cycles plus per-walk failures
/// that were skipped.
#[derive(Debug)]
pub struct BuildOutcome {
    pub cycles: Vec<GaitCycle>,
    pub skipped: Vec<(String, String)>,
}

/// Run every walk, skipping individual failures; fail only when nothing
/// survives.
pub fn build_dataset(
    walks: &[WalkData],
    config: &PipelineConfig,
) -> Result<BuildOutcome, PipelineError> {
    if walks.is_empty() {
        return Err(PipelineError::PipelineFailure);
    }
    let mut cycles = Vec::new();
    let mut skipped = Vec::new();
    for walk in walks {
        match process_walk(walk, config) {
            Ok(mut c) => cycles.append(&mut c),
            Err(e) => skipped.push((walk.id.clone(), e.to_string())),
        }
    }
    if cycles.is_empty() {
        return Err(PipelineError::PipelineFailure);
    }
    Ok(BuildOutcome { cycles, skipped })
}

// ---------------------------------------------------------------------------
// On-disk formats
// ---------------------------------------------------------------------------

/// Per-walk manifest entry; paths are relative to the manifest file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct WalkManifest {
    pub id: String,
    pub label: Label,
    pub accel: PathBuf,
    pub gyro: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correspondences: Option<PathBuf>,
}

/// Write a timed series as CSV: `t` column followed by channel columns.
pub fn write_series_csv(path: &Path, series: &TimedSeries) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(series.channel_names.iter().cloned());
    w.write_record(&header)?;
    for (i, &t) in series.timestamps.iter().enumerate() {
        let mut rec = vec![format!("{t:.9}")];
        for c in 0..series.channels() {
            rec.push(format!("{:.9}", series.values[(i, c)]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv(path: &Path) -> Result<TimedSeries, PipelineError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "t" {
        return Err(PipelineError::Malformed(format!(
            "{}: expected a `t` column followed by channels",
            path.display()
        )));
    }
    let names: Vec<String> = header.iter().skip(1).map(|s| s.to_string()).collect();
    let mut timestamps = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| {
                PipelineError::Malformed(format!("{}: bad number `{s}`", path.display()))
            })
        };
        timestamps.push(parse(&record[0])?);
        for c in 0..names.len() {
            rows.push(parse(&record[c + 1])?);
        }
    }
    let values = Array2::from_shape_vec((timestamps.len(), names.len()), rows)
        .map_err(|e| PipelineError::Malformed(e.to_string()))?;
    TimedSeries::new(timestamps, values, names)
        .map_err(|e| PipelineError::Malformed(e.to_string()))
}

#[derive(serde::Serialize, serde::Deserialize)]
struct FrameRecord {
    frame: usize,
    /// Rows of `[x_prev, y_prev, x_curr, y_curr]`.
    matches: Vec<[f64; 4]>,
}

/// Correspondences as JSONL, one frame pair per line.
pub fn write_correspondences(path: &Path, frames: &[FrameMatches]) -> Result<(), PipelineError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for fm in frames {
        let rec = FrameRecord {
            frame: fm.frame_index,
            matches: fm
                .matches
                .iter()
                .map(|m| [m.p_prev.x, m.p_prev.y, m.p_curr.x, m.p_curr.y])
                .collect(),
        };
        serde_json::to_writer(&mut f, &rec)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_correspondences(path: &Path) -> Result<Vec<FrameMatches>, PipelineError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FrameRecord = serde_json::from_str(&line)?;
        out.push(FrameMatches {
            frame_index: rec.frame,
            matches: rec
                .matches
                .iter()
                .map(|m| Correspondence::new(m[0], m[1], m[2], m[3]))
                .collect(),
        });
    }
    Ok(out)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CycleRecord {
    label: Label,
    walk: String,
    start: usize,
    /// 9 channel rows of 200 samples each.
    data: Vec<Vec<f64>>,
}

/// Cycles as JSONL, one cycle per line.
pub fn write_cycles(path: &Path, cycles: &[GaitCycle]) -> Result<(), PipelineError> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for c in cycles {
        let rec = CycleRecord {
            label: c.label,
            walk: c.source_walk.clone(),
            start: c.start_index,
            data: c.data.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_writer(&mut f, &rec)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_cycles(path: &Path) -> Result<Vec<GaitCycle>, PipelineError> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in f.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CycleRecord = serde_json::from_str(&line)?;
        let channels = rec.data.len();
        let len = rec.data.first().map_or(0, |r| r.len());
        if rec.data.iter().any(|r| r.len() != len) {
            return Err(PipelineError::Malformed("ragged cycle rows".into()));
        }
        let flat: Vec<f64> = rec.data.into_iter().flatten().collect();
        out.push(GaitCycle {
            data: Array2::from_shape_vec((channels, len), flat)
                .map_err(|e| PipelineError::Malformed(e.to_string()))?,
            label: rec.label,
            source_walk: rec.walk,
            start_index: rec.start,
        });
    }
    Ok(out)
}

pub fn write_norm_stats(path: &Path, stats: &NormStats) -> Result<(), PipelineError> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(stats)?)?)
}

pub fn read_norm_stats(path: &Path) -> Result<NormStats, PipelineError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Load a walk described by a manifest entry; `base` anchors relative
/// paths.
pub fn load_walk(base: &Path, manifest: &WalkManifest) -> Result<WalkData, PipelineError> {
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let accel = read_series_csv(&resolve(&manifest.accel))?;
    let gyro = read_series_csv(&resolve(&manifest.gyro))?;
    let angles = match (&manifest.angles, &manifest.correspondences) {
        (Some(p), _) => AngleSource::Series(read_series_csv(&resolve(p))?),
        (None, Some(p)) => AngleSource::Correspondences {
            frames: read_correspondences(&resolve(p))?,
            start_time: accel.timestamps[0],
        },
        (None, None) => {
            return Err(PipelineError::Malformed(format!(
                "walk {}: needs either angles or correspondences",
                manifest.id
            )));
        }
    };
    Ok(WalkData {
        id: manifest.id.clone(),
        label: manifest.label,
        accel,
        gyro,
        angles,
    })
}

/// Read a manifest file (a JSON array of walk entries).
pub fn read_manifest(path: &Path) -> Result<Vec<WalkManifest>, PipelineError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_manifest(path: &Path, entries: &[WalkManifest]) -> Result<(), PipelineError> {
    Ok(std::fs::write(path, serde_json::to_string_pretty(entries)?)?)
}
