use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::classifier::{AblationConfig, ENSEMBLE_SIZE};
use crate::linker::{DEFAULT_BEAM, DEFAULT_COPY_WEIGHT, DEFAULT_K};
use crate::retrieval::RetrievalConfig;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub kb: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
}

/// A preset name such as `"all"` or explicit flags.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AblationSetting {
    Preset(String),
    Custom(AblationConfig),
}

impl Default for AblationSetting {
    fn default() -> Self {
        AblationSetting::Preset("all".into())
    }
}

impl AblationSetting {
    pub fn resolve(&self) -> Result<AblationConfig, PipelineError> {
        match self {
            AblationSetting::Preset(name) => AblationConfig::preset(name)
                .ok_or_else(|| PipelineError::Config(format!("unknown ablation preset {name:?}"))),
            AblationSetting::Custom(c) => Ok(*c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub ensemble_size: usize,
    pub k_candidates: usize,
    pub beam: usize,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub copy_weight: f64,
    /// Languages whose names go into the linking trie.
    pub languages: Vec<String>,
    pub train_baseline: bool,
    pub ablation: AblationSetting,
    pub paths: Paths,
    pub retrieval: RetrievalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            ensemble_size: ENSEMBLE_SIZE,
            k_candidates: DEFAULT_K,
            beam: DEFAULT_BEAM,
            epochs: 8,
            seeds: vec![1, 2, 3, 4, 5],
            copy_weight: DEFAULT_COPY_WEIGHT,
            languages: vec!["en".into()],
            train_baseline: false,
            ablation: AblationSetting::default(),
            paths: Paths::default(),
            retrieval: RetrievalConfig::default(),
        }
    }
}

fn valid_language(code: &str) -> bool {
    !code.is_empty() && code.len() <= 8 && code.chars().all(|c| c.is_ascii_lowercase() || c == '-')
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = PipelineConfig::from_toml(&text)?;
        if let Some(base) = path.parent() {
            cfg.paths.rebase(base);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.ensemble_size != ENSEMBLE_SIZE {
            return Err(PipelineError::Config(format!(
                "ensemble_size must be {ENSEMBLE_SIZE}, got {}",
                self.ensemble_size
            )));
        }
        if self.seeds.len() != self.ensemble_size {
            return Err(PipelineError::SeedCount {
                expected: self.ensemble_size,
                found: self.seeds.len(),
            });
        }
        if self.k_candidates == 0 || self.beam == 0 {
            return Err(PipelineError::Config("k_candidates and beam must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.copy_weight) {
            return Err(PipelineError::Config(format!(
                "copy_weight {} is outside [0, 1]",
                self.copy_weight
            )));
        }
        if self.languages.is_empty() {
            return Err(PipelineError::Config("languages must not be empty".into()));
        }
        if let Some(bad) = self
            .languages
            .iter()
            .chain([&self.retrieval.language])
            .find(|l| !valid_language(l))
        {
            return Err(PipelineError::Config(format!("invalid language code {bad:?}")));
        }
        self.ablation.resolve()?;
        Ok(())
    }

    /// SHA-256 over every setting except file locations.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = Paths::default();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        for p in [
            &mut self.train,
            &mut self.dev,
            &mut self.test,
            &mut self.kb,
            &mut self.model_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

pub(crate) fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, PipelineError> {
    p.as_deref()
        .ok_or_else(|| PipelineError::MissingInput(format!("no {what} path configured")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn four_seeds_rejected() {
        let err = PipelineConfig::from_toml("seeds = [1, 2, 3, 4]").unwrap_err();
        assert!(matches!(err, PipelineError::SeedCount { expected: 5, found: 4 }));
        assert!(PipelineConfig::from_toml("ensemble_size = 4\nseeds = [1, 2, 3, 4]").is_err());
    }

    #[test]
    fn ablation_forms() {
        let c = PipelineConfig::from_toml("ablation = \"context+summary\"").unwrap();
        assert_eq!(c.ablation.resolve().unwrap(), AblationConfig::new(false, false, true));
        let c = PipelineConfig::from_toml(
            "[ablation]\nuse_description = true\nuse_arguments = false\nuse_summary = true",
        )
        .unwrap();
        assert_eq!(c.ablation.resolve().unwrap(), AblationConfig::new(true, false, true));
        assert!(PipelineConfig::from_toml("ablation = \"everything\"").is_err());
    }

    #[test]
    fn other_rejections() {
        for bad in [
            "k_candidates = 0",
            "copy_weight = 1.5",
            "languages = []",
            "languages = [\"EN!\"]",
            "unknown_key = 1",
        ] {
            assert!(PipelineConfig::from_toml(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_paths() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.paths.train = Some("x.tsv".into());
        assert_eq!(a.hash(), b.hash());
        b.epochs = 3;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn relative_paths_follow_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "[paths]\ntrain = \"data/train.tsv\"\nkb = \"/abs/kb.jsonl\"\n").unwrap();
        let c = PipelineConfig::load(&path).unwrap();
        assert_eq!(c.paths.train.unwrap(), dir.path().join("data/train.tsv"));
        assert_eq!(c.paths.kb.unwrap(), PathBuf::from("/abs/kb.jsonl"));
    }
}
