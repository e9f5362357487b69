//! Command-line pipeline driver: synthetic data generation, dataset
//! construction, model training and evaluation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use gait_core::bundle::ModelBundle;
use gait_core::cnn::{classify, train_classifier};
use gait_core::config::AppConfig;
use gait_core::dataset::{
    build_dataset, read_cycles, read_manifest, load_walk, write_correspondences, write_cycles,
    write_manifest, write_series_csv, WalkData, WalkManifest,
};
use gait_core::gait_cycles::{apply_norm, fit_norm_stats, GaitCycle};
use gait_core::protocol::{
    encode_states, flatten_cycles, run_protocol, split_dataset, EvalReport, SplitIndices,
};
use gait_core::seq2seq::train_autoencoder;
use gait_core::signal::Label;
use gait_core::svm::{predict_svm, train_svm};
use gait_core::synth::{correspondences_for_angles, generate_walks};

#[derive(Parser)]
#[command(name = "gait", about = "Subject-specific gait anomaly detection pipeline")]
struct Cli {
    /// Seed applied to every pipeline stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration file; absent sections use desk-scale defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic walk suite with ground-truth labels.
    Synth {
        /// Also emit point-correspondence files instead of angle CSVs for
        /// every walk (slower to process downstream).
        #[arg(long)]
        correspondences: bool,
    },
    /// Process a walk manifest into normalized gait cycles.
    BuildDataset {
        /// Manifest path; defaults to <out-dir>/data/manifest.json.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Train the reconstruction autoencoder on the encoder split.
    TrainEncoder {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the CNN head on encoder states of the classifier split.
    TrainClassifier {
        #[arg(long)]
        encoder: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the SVM baseline on flattened cycles of the classifier split.
    TrainSvm {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the trained models on the held-out classifier test set.
    Evaluate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the whole pipeline: synth, build, train both models, evaluate.
    RunAll,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{payload}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli_config: &Option<PathBuf>, seed: Option<u64>) -> Result<AppConfig> {
    let mut config = match cli_config {
        Some(path) => AppConfig::from_json(
            &std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?,
        )
        .context("parsing config")?,
        None => AppConfig::default(),
    };
    if let Some(seed) = seed {
        config = config.with_seed(seed);
    }
    config.validate().map_err(|e| anyhow::anyhow!(e))?;
    Ok(config)
}

fn default_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(name)
}

fn load_cycle_file(path: &Path) -> Result<Vec<GaitCycle>> {
    read_cycles(path).with_context(|| format!("reading cycles {}", path.display()))
}

/// Recreate the deterministic split used by every training stage.
fn derive_split(cycles: &[GaitCycle], config: &AppConfig) -> Result<SplitIndices> {
    let labels: Vec<Label> = cycles.iter().map(|c| c.label).collect();
    Ok(split_dataset(&labels, &config.split)?)
}

fn run(cli: Cli) -> Result<()> {
    let config = load_config(&cli.config, cli.seed)?;
    let out_dir = cli.out_dir;
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    match cli.command {
        Command::Synth { correspondences } => {
            let data_dir = out_dir.join("data");
            std::fs::create_dir_all(&data_dir)?;
            let walks = generate_walks(&config.synth);
            let mut entries = Vec::new();
            for walk in &walks {
                let accel = format!("{}-accel.csv", walk.id);
                let gyro = format!("{}-gyro.csv", walk.id);
                write_series_csv(&data_dir.join(&accel), &walk.accel)?;
                write_series_csv(&data_dir.join(&gyro), &walk.gyro)?;
                let (angles, matches) = if correspondences {
                    let path = format!("{}-matches.jsonl", walk.id);
                    let frames =
                        correspondences_for_angles(&walk.angles, 40, config.synth.seed ^ 0xc0de);
                    write_correspondences(&data_dir.join(&path), &frames)?;
                    (None, Some(PathBuf::from(path)))
                } else {
                    let path = format!("{}-angles.csv", walk.id);
                    write_series_csv(&data_dir.join(&path), &walk.angles)?;
                    (Some(PathBuf::from(path)), None)
                };
                entries.push(WalkManifest {
                    id: walk.id.clone(),
                    label: walk.label,
                    accel: accel.into(),
                    gyro: gyro.into(),
                    angles,
                    correspondences: matches,
                });
            }
            write_manifest(&data_dir.join("manifest.json"), &entries)?;
            println!(
                "wrote {} walks to {}",
                walks.len(),
                data_dir.display()
            );
        }

        Command::BuildDataset { manifest } => {
            let manifest_path =
                manifest.unwrap_or_else(|| out_dir.join("data").join("manifest.json"));
            let base = manifest_path
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_default();
            let entries = read_manifest(&manifest_path)
                .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
            let mut walks: Vec<WalkData> = Vec::new();
            for entry in &entries {
                walks.push(load_walk(&base, entry)?);
            }
            let outcome = build_dataset(&walks, &config.pipeline)?;
            for (id, reason) in &outcome.skipped {
                eprintln!("skipped walk {id}: {reason}");
            }
            let cycles_path = default_path(&out_dir, "cycles.jsonl");
            write_cycles(&cycles_path, &outcome.cycles)?;
            println!(
                "wrote {} cycles ({} walks skipped) to {}",
                outcome.cycles.len(),
                outcome.skipped.len(),
                cycles_path.display()
            );
        }

        Command::TrainEncoder { data, out } => {
            let data = data.unwrap_or_else(|| default_path(&out_dir, "cycles.jsonl"));
            let out = out.unwrap_or_else(|| default_path(&out_dir, "model.json"));
            let cycles = load_cycle_file(&data)?;
            let split = derive_split(&cycles, &config)?;
            let train_raw: Vec<GaitCycle> = split
                .encoder_train
                .iter()
                .map(|&i| cycles[i].clone())
                .collect();
            let stats = fit_norm_stats(&train_raw)?;
            let train: Vec<GaitCycle> =
                train_raw.iter().map(|c| apply_norm(c, &stats)).collect();
            let (params, history) =
                train_autoencoder(&train, &config.encoder, &config.encoder_train)?;
            let mut bundle = ModelBundle::new(config.clone());
            bundle.norm_stats = Some(stats);
            bundle.encoder = Some(params);
            bundle.save(&out)?;
            println!(
                "trained encoder on {} cycles over {} steps (final loss {:.4}); saved {}",
                train.len(),
                history.len(),
                history.last().copied().unwrap_or(f64::NAN),
                out.display()
            );
        }

        Command::TrainClassifier { encoder, data, out } => {
            let model_path = encoder.unwrap_or_else(|| default_path(&out_dir, "model.json"));
            let data = data.unwrap_or_else(|| default_path(&out_dir, "cycles.jsonl"));
            let out = out.unwrap_or(model_path.clone());
            let mut bundle = ModelBundle::load(&model_path)?;
            let cycles = load_cycle_file(&data)?;
            let split = derive_split(&cycles, &bundle.config)?;
            let stats = bundle.require_norm_stats()?.clone();
            let params = bundle.require_encoder()?.clone();
            let train: Vec<GaitCycle> = split
                .classifier_train
                .iter()
                .map(|&i| apply_norm(&cycles[i], &stats))
                .collect();
            let refs: Vec<&GaitCycle> = train.iter().collect();
            let labels: Vec<Label> = train.iter().map(|c| c.label).collect();
            let states = encode_states(&refs, &params, &bundle.config.encoder)?;
            let cnn = train_classifier(&states, &labels, &bundle.config.cnn)?;
            bundle.cnn = Some(cnn);
            bundle.save(&out)?;
            println!(
                "trained classifier on {} cycles; saved {}",
                train.len(),
                out.display()
            );
        }

        Command::TrainSvm { data, model, out } => {
            let model_path = model.unwrap_or_else(|| default_path(&out_dir, "model.json"));
            let data = data.unwrap_or_else(|| default_path(&out_dir, "cycles.jsonl"));
            let out = out.unwrap_or(model_path.clone());
            let mut bundle = ModelBundle::load(&model_path)?;
            let cycles = load_cycle_file(&data)?;
            let split = derive_split(&cycles, &bundle.config)?;
            let stats = bundle.require_norm_stats()?.clone();
            let train: Vec<GaitCycle> = split
                .classifier_train
                .iter()
                .map(|&i| apply_norm(&cycles[i], &stats))
                .collect();
            let refs: Vec<&GaitCycle> = train.iter().collect();
            let labels: Vec<Label> = train.iter().map(|c| c.label).collect();
            let flat = flatten_cycles(&refs);
            let svm = train_svm(&flat, &labels, &bundle.config.svm)?;
            bundle.svm = Some(svm);
            bundle.save(&out)?;
            println!(
                "trained SVM baseline on {} cycles; saved {}",
                train.len(),
                out.display()
            );
        }

        Command::Evaluate { model, data } => {
            let model_path = model.unwrap_or_else(|| default_path(&out_dir, "model.json"));
            let data = data.unwrap_or_else(|| default_path(&out_dir, "cycles.jsonl"));
            let bundle = ModelBundle::load(&model_path)?;
            let cycles = load_cycle_file(&data)?;
            let split = derive_split(&cycles, &bundle.config)?;
            let stats = bundle.require_norm_stats()?.clone();
            let test: Vec<GaitCycle> = split
                .classifier_test
                .iter()
                .map(|&i| apply_norm(&cycles[i], &stats))
                .collect();
            let refs: Vec<&GaitCycle> = test.iter().collect();
            let truth: Vec<Label> = test.iter().map(|c| c.label).collect();

            let mut reports = Vec::new();
            if bundle.cnn.is_some() {
                let states =
                    encode_states(&refs, bundle.require_encoder()?, &bundle.config.encoder)?;
                let cnn = bundle.require_cnn()?;
                let pred: Vec<Label> = states
                    .rows()
                    .into_iter()
                    .map(|row| {
                        classify(row.to_slice().unwrap(), cnn, &bundle.config.cnn)
                            .map(|s| s.predicted())
                    })
                    .collect::<Result<_, _>>()?;
                reports.push(EvalReport::from_predictions("RNN+CNN", &truth, &pred));
            }
            if let Ok(svm) = bundle.require_svm() {
                let flat = flatten_cycles(&refs);
                let pred: Vec<Label> = flat
                    .rows()
                    .into_iter()
                    .map(|row| predict_svm(svm, row.to_slice().unwrap()).0)
                    .collect();
                reports.push(EvalReport::from_predictions("SVM", &truth, &pred));
            }
            if reports.is_empty() {
                bail!("bundle contains no trained classifier to evaluate");
            }
            for report in &reports {
                println!("{}", report.render());
            }
            let eval_path = default_path(&out_dir, "eval.json");
            std::fs::write(&eval_path, serde_json::to_string_pretty(&reports)?)?;
            println!("wrote {}", eval_path.display());
        }

        Command::RunAll => {
            let walks = generate_walks(&config.synth);
            let walk_data: Vec<WalkData> = walks
                .iter()
                .map(|w| WalkData {
                    id: w.id.clone(),
                    label: w.label,
                    accel: w.accel.clone(),
                    gyro: w.gyro.clone(),
                    angles: gait_core::dataset::AngleSource::Series(w.angles.clone()),
                })
                .collect();
            let outcome = build_dataset(&walk_data, &config.pipeline)?;
            for (id, reason) in &outcome.skipped {
                eprintln!("skipped walk {id}: {reason}");
            }
            println!(
                "built {} cycles from {} walks",
                outcome.cycles.len(),
                walks.len()
            );
            let result = run_protocol(
                &outcome.cycles,
                &config.split,
                &config.encoder,
                &config.encoder_train,
                &config.cnn,
                &config.svm,
            )?;

            let mut bundle = ModelBundle::new(config.clone());
            bundle.norm_stats = Some(result.norm_stats.clone());
            bundle.encoder = Some(result.encoder.clone());
            bundle.cnn = Some(result.cnn.clone());
            bundle.svm = Some(result.svm.clone());
            let model_path = default_path(&out_dir, "model.json");
            bundle.save(&model_path)?;

            let reports = vec![result.cnn_report.clone(), result.svm_report.clone()];
            for report in &reports {
                println!("{}", report.render());
            }
            let eval_path = default_path(&out_dir, "eval.json");
            std::fs::write(&eval_path, serde_json::to_string_pretty(&reports)?)?;
            let cycles_path = default_path(&out_dir, "cycles.jsonl");
            write_cycles(&cycles_path, &outcome.cycles)?;
            println!(
                "wrote {}, {} and {}",
                model_path.display(),
                eval_path.display(),
                cycles_path.display()
            );
        }
    }
    Ok(())
}
