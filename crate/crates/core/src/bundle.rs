//! Self-describing model persistence: one JSON document carrying the
//! configuration echo, normalization statistics and every trained
//! parameter set. Serialization is byte-deterministic for a given
//! bundle.

use std::path::Path;

use crate::cnn::CnnParams;
use crate::config::AppConfig;
use crate::gait_cycles::NormStats;
use crate::seq2seq::Seq2SeqParams;
use crate::svm::SvmModel;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported bundle format version {0}")]
    UnsupportedVersion(u32),
    #[error("bundle is missing the `{0}` section")]
    MissingSection(&'static str),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub config: AppConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_stats: Option<NormStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder: Option<Seq2SeqParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cnn: Option<CnnParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svm: Option<SvmModel>,
}

impl ModelBundle {
    pub fn new(config: AppConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config,
            norm_stats: None,
            encoder: None,
            cnn: None,
            svm: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), BundleError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &Path) -> Result<Self, BundleError> {
        let bundle: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if bundle.format_version != FORMAT_VERSION {
            return Err(BundleError::UnsupportedVersion(bundle.format_version));
        }
        Ok(bundle)
    }

    pub fn require_norm_stats(&self) -> Result<&NormStats, BundleError> {
        self.norm_stats
            .as_ref()
            .ok_or(BundleError::MissingSection("norm_stats"))
    }

    pub fn require_encoder(&self) -> Result<&Seq2SeqParams, BundleError> {
        self.encoder
            .as_ref()
            .ok_or(BundleError::MissingSection("encoder"))
    }

    pub fn require_cnn(&self) -> Result<&CnnParams, BundleError> {
        self.cnn.as_ref().ok_or(BundleError::MissingSection("cnn"))
    }

    pub fn require_svm(&self) -> Result<&SvmModel, BundleError> {
        self.svm.as_ref().ok_or(BundleError::MissingSection("svm"))
    }
}
