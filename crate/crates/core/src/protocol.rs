//! Experiment protocol: dataset splitting, encoder + classifier + baseline
//! training on the prescribed partitions, and confusion-matrix evaluation.

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cnn::{classify, train_classifier, CnnConfig, CnnParams};
use crate::gait_cycles::{apply_norm, fit_norm_stats, GaitCycle, NormStats};
use crate::seq2seq::{
    encode, stack_cycles, train_autoencoder, EncoderConfig, Mode, Seq2SeqParams, TrainConfig,
};
use crate::signal::Label;
use crate::svm::{predict_svm, train_svm, SvmConfig, SvmModel};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("not enough cycles of each class for the requested split")]
    DegenerateDataset,
    #[error("autoencoder: {0}")]
    Seq2Seq(#[from] crate::seq2seq::Seq2SeqError),
    #[error("classifier: {0}")]
    Cnn(#[from] crate::cnn::CnnError),
    #[error("baseline: {0}")]
    Svm(#[from] crate::svm::SvmError),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    /// Fraction of normal cycles reserved for the autoencoder.
    pub encoder_fraction: f64,
    /// Train share of each 90/10 split.
    pub train_fraction: f64,
    /// Down-sample the classifier-pool majority class only when the
    /// class ratio exceeds this (the mix is then "about 1:1" already).
    pub balance_threshold: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            encoder_fraction: 4966.0 / 7941.0,
            train_fraction: 0.9,
            balance_threshold: 1.2,
            seed: 0,
        }
    }
}

/// Index sets into the cycle list. Encoder and classifier sets are
/// disjoint by construction.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SplitIndices {
    pub encoder_train: Vec<usize>,
    pub encoder_test: Vec<usize>,
    pub classifier_train: Vec<usize>,
    pub classifier_test: Vec<usize>,
}

/// Partition cycles: a seeded shuffle of the normal cycles feeds the
/// encoder pool; the remaining normals plus all anomalous cycles form the
/// classifier pool, each pool split 90/10.
pub fn split_dataset(labels: &[Label], spec: &SplitSpec) -> Result<SplitIndices, ProtocolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Normal)
        .collect();
    let mut anomalous: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == Label::Anomalous)
        .collect();
    if normal.len() < 4 || anomalous.is_empty() {
        return Err(ProtocolError::DegenerateDataset);
    }
    normal.shuffle(&mut rng);
    anomalous.shuffle(&mut rng);

    let n_pool = (spec.encoder_fraction * normal.len() as f64).round() as usize;
    if n_pool < 2 || n_pool >= normal.len() {
        return Err(ProtocolError::DegenerateDataset);
    }
    let (enc_pool, rest_normal) = normal.split_at(n_pool);
    let n_enc_train = (spec.train_fraction * enc_pool.len() as f64).floor() as usize;
    let encoder_train = enc_pool[..n_enc_train].to_vec();
    let encoder_test = enc_pool[n_enc_train..].to_vec();

    let mut rest_normal = rest_normal.to_vec();
    let mut anomalous = anomalous;
    // conditional balancing: drop majority samples only when the pool is
    // further from 1:1 than the threshold allows
    let (maj, min_len) = if rest_normal.len() >= anomalous.len() {
        (&mut rest_normal, anomalous.len())
    } else {
        (&mut anomalous, rest_normal.len())
    };
    if min_len == 0 {
        return Err(ProtocolError::DegenerateDataset);
    }
    if maj.len() as f64 / min_len as f64 > spec.balance_threshold {
        maj.truncate(min_len);
    }

    let mut pool: Vec<usize> = rest_normal;
    pool.extend(anomalous);
    pool.shuffle(&mut rng);
    let n_cls_train = (spec.train_fraction * pool.len() as f64).floor() as usize;
    if n_cls_train == 0 || n_cls_train == pool.len() {
        return Err(ProtocolError::DegenerateDataset);
    }
    let classifier_train = pool[..n_cls_train].to_vec();
    let classifier_test = pool[n_cls_train..].to_vec();

    Ok(SplitIndices {
        encoder_train,
        encoder_test,
        classifier_train,
        classifier_test,
    })
}

/// Confusion-matrix evaluation of one model on one test set. Rows are
/// true labels, columns predicted; order normal, anomalous.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub counts: [[usize; 2]; 2],
    pub total: usize,
    pub accuracy: f64,
    pub precision: [f64; 2],
    pub recall: [f64; 2],
}

impl EvalReport {
    pub fn from_predictions(model: &str, truth: &[Label], predicted: &[Label]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut counts = [[0usize; 2]; 2];
        for (&t, &p) in truth.iter().zip(predicted) {
            counts[t.as_index()][p.as_index()] += 1;
        }
        let total = truth.len();
        let correct = counts[0][0] + counts[1][1];
        let accuracy = correct as f64 / total.max(1) as f64;
        let mut precision = [0.0; 2];
        let mut recall = [0.0; 2];
        for k in 0..2 {
            let col: usize = counts[0][k] + counts[1][k];
            let row: usize = counts[k][0] + counts[k][1];
            precision[k] = if col > 0 {
                counts[k][k] as f64 / col as f64
            } else {
                0.0
            };
            recall[k] = if row > 0 {
                counts[k][k] as f64 / row as f64
            } else {
                0.0
            };
        }
        Self {
            model: model.to_string(),
            counts,
            total,
            accuracy,
            precision,
            recall,
        }
    }

    pub fn percentage(&self, row: usize, col: usize) -> f64 {
        100.0 * self.counts[row][col] as f64 / self.total.max(1) as f64
    }

    /// Confusion-matrix table with counts and percentages of the test
    /// set, plus summary metrics.
    pub fn render(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{}: confusion matrix on the test set\n", self.model));
        s.push_str(&format!(
            "{:<18} {:>22} {:>22}\n",
            "", "predicted normal", "predicted anomalous"
        ));
        for (r, name) in ["true normal", "true anomalous"].iter().enumerate() {
            s.push_str(&format!(
                "{:<18} {:>15} ({:>4.1}%) {:>15} ({:>4.1}%)\n",
                name,
                self.counts[r][0],
                self.percentage(r, 0),
                self.counts[r][1],
                self.percentage(r, 1),
            ));
        }
        s.push_str(&format!(
            "accuracy {:.3}%  precision (normal/anomalous) {:.3}/{:.3}  recall (normal/anomalous) {:.3}/{:.3}\n",
            100.0 * self.accuracy,
            self.precision[0],
            self.precision[1],
            self.recall[0],
            self.recall[1],
        ));
        s
    }
}

/// Everything produced by one full protocol run.
pub struct ProtocolOutcome {
    pub split: SplitIndices,
    pub norm_stats: NormStats,
    pub encoder: Seq2SeqParams,
    pub encoder_loss: Vec<f64>,
    pub cnn: CnnParams,
    pub svm: SvmModel,
    pub cnn_report: EvalReport,
    pub svm_report: EvalReport,
}

/// Encode cycles (already normalized) into flattened final states.
pub fn encode_states(
    cycles: &[&GaitCycle],
    params: &Seq2SeqParams,
    config: &EncoderConfig,
) -> Result<Array2<f64>, ProtocolError> {
    let mut states = Array2::zeros((cycles.len(), config.state_len()));
    for chunk_start in (0..cycles.len()).step_by(64) {
        let chunk = &cycles[chunk_start..cycles.len().min(chunk_start + 64)];
        let x = stack_cycles(chunk);
        let (_, state) = encode(&x, params, config, Mode::Infer, None)?;
        let flat = state.flatten();
        states
            .slice_mut(ndarray::s![chunk_start..chunk_start + chunk.len(), ..])
            .assign(&flat);
    }
    Ok(states)
}

/// Flatten normalized cycles row-major into (n, 1800) for the SVM.
pub fn flatten_cycles(cycles: &[&GaitCycle]) -> Array2<f64> {
    let len = cycles.first().map_or(0, |c| c.data.len());
    let mut out = Array2::zeros((cycles.len(), len));
    for (r, c) in cycles.iter().enumerate() {
        for (k, v) in c.data.iter().enumerate() {
            out[(r, k)] = *v;
        }
    }
    out
}

/// Run the full protocol: split, normalize on the encoder-train portion,
/// train the autoencoder on normal-only cycles, then train and evaluate
/// both classifiers on identical classifier splits.
pub fn run_protocol(
    cycles: &[GaitCycle],
    spec: &SplitSpec,
    enc_config: &EncoderConfig,
    train_config: &TrainConfig,
    cnn_config: &CnnConfig,
    svm_config: &SvmConfig,
) -> Result<ProtocolOutcome, ProtocolError> {
    let labels: Vec<Label> = cycles.iter().map(|c| c.label).collect();
    let split = split_dataset(&labels, spec)?;

    let enc_train_raw: Vec<GaitCycle> = split
        .encoder_train
        .iter()
        .map(|&i| cycles[i].clone())
        .collect();
    let norm_stats =
        fit_norm_stats(&enc_train_raw).map_err(|_| ProtocolError::DegenerateDataset)?;
    let normalize =
        |idx: &[usize]| -> Vec<GaitCycle> { idx.iter().map(|&i| apply_norm(&cycles[i], &norm_stats)).collect() };

    let enc_train = normalize(&split.encoder_train);
    let (encoder, encoder_loss) = train_autoencoder(&enc_train, enc_config, train_config)?;

    let cls_train = normalize(&split.classifier_train);
    let cls_test = normalize(&split.classifier_test);
    let train_refs: Vec<&GaitCycle> = cls_train.iter().collect();
    let test_refs: Vec<&GaitCycle> = cls_test.iter().collect();
    let train_labels: Vec<Label> = cls_train.iter().map(|c| c.label).collect();
    let test_labels: Vec<Label> = cls_test.iter().map(|c| c.label).collect();

    // CNN on encoder states
    let train_states = encode_states(&train_refs, &encoder, enc_config)?;
    let test_states = encode_states(&test_refs, &encoder, enc_config)?;
    let cnn = train_classifier(&train_states, &train_labels, cnn_config)?;
    let cnn_pred: Vec<Label> = test_states
        .axis_iter(Axis(0))
        .map(|row| {
            classify(row.to_slice().unwrap(), &cnn, cnn_config).map(|s| s.predicted())
        })
        .collect::<Result<_, _>>()?;
    let cnn_report = EvalReport::from_predictions("RNN+CNN", &test_labels, &cnn_pred);

    // SVM baseline on flattened cycles
    let svm_train = flatten_cycles(&train_refs);
    let svm_test = flatten_cycles(&test_refs);
    let svm = train_svm(&svm_train, &train_labels, svm_config)?;
    let svm_pred: Vec<Label> = svm_test
        .axis_iter(Axis(0))
        .map(|row| predict_svm(&svm, row.to_slice().unwrap()).0)
        .collect();
    let svm_report = EvalReport::from_predictions("SVM", &test_labels, &svm_pred);

    Ok(ProtocolOutcome {
        split,
        norm_stats,
        encoder,
        encoder_loss,
        cnn,
        svm,
        cnn_report,
        svm_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn labels(n_normal: usize, n_anomalous: usize) -> Vec<Label> {
        let mut v = vec![Label::Normal; n_normal];
        v.extend(vec![Label::Anomalous; n_anomalous]);
        v
    }

    #[test]
    fn reference_counts_reproduce_expected_sizes() {
        let spec = SplitSpec::default();
        let split = split_dataset(&labels(7941, 2744), &spec).unwrap();
        assert_eq!(split.encoder_train.len(), 4469);
        assert_eq!(split.encoder_test.len(), 497);
        assert_eq!(split.classifier_train.len(), 5147);
        assert_eq!(split.classifier_test.len(), 572);
    }

    #[test]
    fn splits_are_disjoint_and_complete_for_many_seeds() {
        for seed in 0..5 {
            let spec = SplitSpec {
                seed,
                ..SplitSpec::default()
            };
            let lab = labels(300, 120);
            let split = split_dataset(&lab, &spec).unwrap();
            let enc: HashSet<usize> = split
                .encoder_train
                .iter()
                .chain(&split.encoder_test)
                .copied()
                .collect();
            let cls: HashSet<usize> = split
                .classifier_train
                .iter()
                .chain(&split.classifier_test)
                .copied()
                .collect();
            assert!(enc.is_disjoint(&cls), "seed {seed}");
            // encoder pool is normal-only
            assert!(enc.iter().all(|&i| lab[i] == Label::Normal));
        }
    }

    #[test]
    fn heavy_imbalance_is_downsampled() {
        let spec = SplitSpec::default();
        // classifier pool normals: 1000 - round(0.625...*1000) = 375 vs
        // 100 anomalous -> ratio 3.75 > 1.2 -> truncate to 100 each
        let split = split_dataset(&labels(1000, 100), &spec).unwrap();
        let pool = split.classifier_train.len() + split.classifier_test.len();
        assert_eq!(pool, 200);
    }

    #[test]
    fn mild_imbalance_is_left_alone() {
        let spec = SplitSpec::default();
        let split = split_dataset(&labels(7941, 2744), &spec).unwrap();
        let pool = split.classifier_train.len() + split.classifier_test.len();
        // 2975 normals remain, 2744 anomalous, ratio 1.084 <= 1.2
        assert_eq!(pool, 2975 + 2744);
    }

    #[test]
    fn seed_changes_split_but_not_counts() {
        let a = split_dataset(&labels(500, 200), &SplitSpec::default()).unwrap();
        let b = split_dataset(
            &labels(500, 200),
            &SplitSpec {
                seed: 99,
                ..SplitSpec::default()
            },
        )
        .unwrap();
        assert_eq!(a.encoder_train.len(), b.encoder_train.len());
        assert_eq!(a.classifier_test.len(), b.classifier_test.len());
        assert_ne!(a.encoder_train, b.encoder_train);
    }

    #[test]
    fn single_class_is_degenerate() {
        assert!(matches!(
            split_dataset(&labels(100, 0), &SplitSpec::default()),
            Err(ProtocolError::DegenerateDataset)
        ));
    }

    #[test]
    fn report_percentages_and_metrics() {
        // perfect classifier on 572 = 282 normal + 290 anomalous
        let mut truth = vec![Label::Normal; 282];
        truth.extend(vec![Label::Anomalous; 290]);
        let report = EvalReport::from_predictions("perfect", &truth, &truth);
        assert_eq!(report.counts, [[282, 0], [0, 290]]);
        assert!((report.percentage(0, 0) - 49.3).abs() < 0.1);
        assert!((report.percentage(1, 1) - 50.7).abs() < 0.1);
        assert_eq!(report.accuracy, 1.0);
        let sum: f64 = (0..2)
            .flat_map(|r| (0..2).map(move |c| (r, c)))
            .map(|(r, c)| report.percentage(r, c))
            .sum();
        assert!((sum - 100.0).abs() < 0.1);

        // all-anomalous predictor puts the normal row in the anomalous column
        let all_anom = vec![Label::Anomalous; truth.len()];
        let r2 = EvalReport::from_predictions("all-anomalous", &truth, &all_anom);
        assert_eq!(r2.counts[0], [0, 282]);
        assert_eq!(r2.counts[1], [0, 290]);

        let table = report.render();
        assert!(table.contains("predicted normal"));
        assert!(table.contains("282"));
    }
}
