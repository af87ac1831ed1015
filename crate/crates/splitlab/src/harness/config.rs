//! Experiment configuration: a TOML file mapping 1:1 onto
//! [`ExperimentConfig`]. Every field is mandatory except `behaviors`,
//! which defaults to all-honest.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::adversary::{Attack, AttackParams, BehaviorSpec};
use crate::data::{self, DatasetBundle};
use crate::error::{Error, Result};
use crate::nn::{Activation, Arch, LayerSpec};
use crate::pigeon::Mode;
use crate::split::SplitArch;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Number of clients M.
    pub clients: usize,
    /// Adversary tolerance N; cluster count is N + 1 outside vanilla.
    pub max_malicious: usize,
    /// Global rounds T.
    pub rounds: usize,
    /// Mini-batch updates per client turn E.
    pub updates_per_turn: usize,
    /// Mini-batch size B.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub arch: ArchConfig,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub behaviors: Vec<BehaviorConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub client: Vec<LayerConfig>,
    pub ap: Vec<LayerConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerConfig {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Synthetic spherical-center Gaussian blobs.
    Blobs {
        classes: usize,
        dim: usize,
        spread: f64,
        shard_size: usize,
        shared_size: usize,
        test_size: usize,
    },
    /// IDX image/label files; shards come from the training pair, the
    /// shared and test sets from the held-out pair.
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        shard_size: usize,
        shared_size: usize,
        test_size: usize,
    },
}

impl DatasetConfig {
    pub fn shard_size(&self) -> usize {
        match self {
            DatasetConfig::Blobs { shard_size, .. } | DatasetConfig::Idx { shard_size, .. } => {
                *shard_size
            }
        }
    }

    pub fn shared_size(&self) -> usize {
        match self {
            DatasetConfig::Blobs { shared_size, .. } | DatasetConfig::Idx { shared_size, .. } => {
                *shared_size
            }
        }
    }

    pub fn test_size(&self) -> usize {
        match self {
            DatasetConfig::Blobs { test_size, .. } | DatasetConfig::Idx { test_size, .. } => {
                *test_size
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorConfig {
    /// 1-based client id.
    pub client: usize,
    pub attack: Attack,
    /// Label-flip shift override; defaults to 3.
    pub label_shift: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("config parse: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// Effective cluster count for this run.
    pub fn num_clusters(&self) -> usize {
        match self.mode {
            Mode::Vanilla => 1,
            _ => self.max_malicious + 1,
        }
    }

    /// Validates the configuration. Hard violations error; soft issues
    /// (more malicious clients than the tolerance N) come back as
    /// warnings so stress studies stay possible.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.clients == 0 {
            return Err(Error::config("at least one client required"));
        }
        if !self.clients.is_multiple_of(self.num_clusters()) {
            return Err(Error::config(format!(
                "{} clients are not divisible into {} clusters",
                self.clients,
                self.num_clusters()
            )));
        }
        if self.updates_per_turn == 0 {
            return Err(Error::config("updates_per_turn must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.batch_size > self.dataset.shard_size() {
            return Err(Error::config(format!(
                "batch_size {} exceeds shard_size {}",
                self.batch_size,
                self.dataset.shard_size()
            )));
        }
        if self.dataset.shared_size() == 0 {
            return Err(Error::config("shared_size must be >= 1"));
        }
        if self.dataset.test_size() == 0 {
            return Err(Error::config("test_size must be >= 1"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::config("learning_rate must be finite and >= 0"));
        }
        self.build_arch()?;

        let mut seen = vec![false; self.clients];
        for behavior in &self.behaviors {
            if behavior.client == 0 || behavior.client > self.clients {
                return Err(Error::config(format!(
                    "behavior refers to unknown client {}",
                    behavior.client
                )));
            }
            if seen[behavior.client - 1] {
                return Err(Error::config(format!(
                    "duplicate behavior for client {}",
                    behavior.client
                )));
            }
            seen[behavior.client - 1] = true;
        }
        if self.behaviors.len() > self.max_malicious {
            warnings.push(format!(
                "{} malicious clients exceed the tolerance N = {}; robustness guarantees are void",
                self.behaviors.len(),
                self.max_malicious
            ));
        }
        Ok(warnings)
    }

    pub fn build_arch(&self) -> Result<SplitArch> {
        let to_arch = |layers: &[LayerConfig], side: &str| -> Result<Arch> {
            if layers.is_empty() {
                return Err(Error::config(format!("{side} architecture is empty")));
            }
            let specs = layers
                .iter()
                .map(|l| LayerSpec::new(l.fan_in, l.fan_out, l.activation))
                .collect::<Result<Vec<_>>>()?;
            Arch::new(specs)
        };
        let client = to_arch(&self.arch.client, "client")?;
        let ap = to_arch(&self.arch.ap, "AP")?;
        let arch = SplitArch::new(client, ap)?;

        match &self.dataset {
            DatasetConfig::Blobs { classes, dim, .. } => {
                if *dim != arch.client().input_dim() {
                    return Err(Error::config(format!(
                        "dataset dimension {dim} does not match client input {}",
                        arch.client().input_dim()
                    )));
                }
                if *classes != arch.num_classes() {
                    return Err(Error::config(format!(
                        "dataset classes {classes} do not match AP output {}",
                        arch.num_classes()
                    )));
                }
            }
            DatasetConfig::Idx { .. } => {
                if arch.num_classes() != 10 {
                    return Err(Error::config(
                        "IDX datasets carry 10 classes; AP output must be 10",
                    ));
                }
            }
        }
        Ok(arch)
    }

    /// Per-client behavior table, indexed by 0-based client id.
    pub fn build_behaviors(&self) -> Result<Vec<BehaviorSpec>> {
        let mut specs = vec![BehaviorSpec::Honest; self.clients];
        for behavior in &self.behaviors {
            let params = AttackParams {
                label_shift: behavior.label_shift.unwrap_or(3),
                ..AttackParams::default()
            };
            specs[behavior.client - 1] = BehaviorSpec::Malicious {
                attack: behavior.attack,
                params,
            };
        }
        Ok(specs)
    }

    /// Materializes the dataset bundle for this configuration.
    pub fn build_bundle(&self) -> Result<DatasetBundle<f64>> {
        match &self.dataset {
            DatasetConfig::Blobs {
                classes,
                dim,
                spread,
                shard_size,
                shared_size,
                test_size,
            } => {
                let total = self.clients * shard_size + shared_size + test_size;
                let samples = data::gen_blobs(*classes, *dim, total, *spread, self.seed)?;
                data::make_bundle(
                    samples,
                    self.clients,
                    *shard_size,
                    *shared_size,
                    *test_size,
                    self.seed,
                )
            }
            DatasetConfig::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                shard_size,
                shared_size,
                test_size,
            } => {
                let train = data::load_idx(train_images, train_labels)?;
                let heldout = data::load_idx(test_images, test_labels)?;
                if let Some(sample) = train.first() {
                    let arch = self.build_arch()?;
                    if sample.x.len() != arch.client().input_dim() {
                        return Err(Error::config(format!(
                            "IDX sample dimension {} does not match client input {}",
                            sample.x.len(),
                            arch.client().input_dim()
                        )));
                    }
                }
                data::make_bundle_with_heldout(
                    train,
                    heldout,
                    self.clients,
                    *shard_size,
                    *shared_size,
                    *test_size,
                    self.seed,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_toml() -> String {
        r#"
mode = "pigeon"
seed = 7
clients = 4
max_malicious = 1
rounds = 3
updates_per_turn = 2
batch_size = 5
learning_rate = 0.05

[[arch.client]]
fan_in = 6
fan_out = 4
activation = "relu"

[[arch.ap]]
fan_in = 4
fan_out = 3
activation = "identity"

[dataset]
kind = "blobs"
classes = 3
dim = 6
spread = 0.3
shard_size = 20
shared_size = 12
test_size = 15
"#
        .to_string()
    }

    #[test]
    fn parses_and_validates() {
        let config = ExperimentConfig::from_toml(&base_toml()).unwrap();
        assert!(config.validate().unwrap().is_empty());
        assert_eq!(config.num_clusters(), 2);
        let arch = config.build_arch().unwrap();
        assert_eq!(arch.cut_width(), 4);
        let bundle = config.build_bundle().unwrap();
        assert_eq!(bundle.client_shards.len(), 4);
        assert_eq!(bundle.shared.len(), 12);
    }

    #[test]
    fn behaviors_default_to_all_honest() {
        let config = ExperimentConfig::from_toml(&base_toml()).unwrap();
        let behaviors = config.build_behaviors().unwrap();
        assert!(behaviors.iter().all(|b| !b.is_malicious()));
    }

    #[test]
    fn behavior_section_parses() {
        let toml = format!(
            "{}\n[[behaviors]]\nclient = 2\nattack = \"label_flip\"\n",
            base_toml()
        );
        let config = ExperimentConfig::from_toml(&toml).unwrap();
        let behaviors = config.build_behaviors().unwrap();
        assert!(behaviors[1].is_malicious());
        assert_eq!(behaviors[1].attack(), Some(Attack::LabelFlip));
    }

    #[test]
    fn excess_malicious_clients_warn() {
        let toml = format!(
            "{}\n[[behaviors]]\nclient = 1\nattack = \"label_flip\"\n\n[[behaviors]]\nclient = 2\nattack = \"param_swap\"\n",
            base_toml()
        );
        let config = ExperimentConfig::from_toml(&toml).unwrap();
        let warnings = config.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn indivisible_clients_rejected() {
        let toml = base_toml().replace("clients = 4", "clients = 5");
        let config = ExperimentConfig::from_toml(&toml).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn mismatched_dataset_dim_rejected() {
        let toml = base_toml().replace("dim = 6", "dim = 7");
        let config = ExperimentConfig::from_toml(&toml).unwrap();
        assert!(config.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let toml = format!("{}\nnot_a_field = 1\n", base_toml());
        assert!(ExperimentConfig::from_toml(&toml).is_err());
    }

    #[test]
    fn missing_mandatory_field_rejected() {
        let toml = base_toml().replace("seed = 7\n", "");
        assert!(ExperimentConfig::from_toml(&toml).is_err());
    }
}
