//! Campaign bookkeeping: the workdir layout and stage stamps that make
//! `tune -> select -> portfolio` compose without re-specifying paths, with
//! content hashes for stale-input detection.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed campaign file {path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("workdir belongs to a different campaign: {message}")]
    Mismatch { message: String },
    #[error("stage '{stage}' has not run in this workdir")]
    MissingStage { stage: &'static str },
}

/// Well-known paths inside a campaign workdir.
#[derive(Debug, Clone)]
pub struct Workdir {
    pub root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workdir { root: root.into() }
    }

    pub fn campaign_file(&self) -> PathBuf {
        self.root.join("campaign.json")
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.root.join("runs")
    }

    pub fn frozen_registry(&self) -> PathBuf {
        self.root.join("bounds").join("frozen.registry")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("tuning").join("checkpoint.json")
    }

    pub fn progress_log(&self) -> PathBuf {
        self.root.join("tuning").join("progress.log")
    }

    pub fn winner_file(&self) -> PathBuf {
        self.root.join("tuning").join("winner.json")
    }

    pub fn archive_file(&self) -> PathBuf {
        self.root.join("tuning").join("archive.json")
    }

    pub fn pool_file(&self) -> PathBuf {
        self.root.join("selection").join("pool.json")
    }

    pub fn schedule_file(&self) -> PathBuf {
        self.root.join("portfolio").join("schedule.json")
    }

    pub fn parallel_dir(&self) -> PathBuf {
        self.root.join("portfolio").join("parallel")
    }

    pub fn simulation_report(&self) -> PathBuf {
        self.root.join("simulation").join("report.json")
    }
}

pub const STAGE_TUNED: &str = "tuned";
pub const STAGE_SELECTED: &str = "selected";
pub const STAGE_PORTFOLIO: &str = "portfolio_built";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageStamp {
    /// Hash of the stage's inputs, for staleness checks downstream.
    pub inputs_hash: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Campaign {
    pub seed: u64,
    pub scenario_path: PathBuf,
    pub scenario_hash: String,
    pub stages: BTreeMap<String, StageStamp>,
}

impl Campaign {
    pub fn new(seed: u64, scenario_path: PathBuf, scenario_hash: String) -> Self {
        Campaign {
            seed,
            scenario_path,
            scenario_hash,
            stages: BTreeMap::new(),
        }
    }

    pub fn load(workdir: &Workdir) -> Result<Self, CampaignError> {
        let path = workdir.campaign_file();
        let text = fs::read_to_string(&path).map_err(|source| CampaignError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| CampaignError::Malformed {
            path,
            message: e.to_string(),
        })
    }

    pub fn save(&self, workdir: &Workdir) -> Result<(), CampaignError> {
        let path = workdir.campaign_file();
        let io = |source| CampaignError::Io { path: path.clone(), source };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io)?;
        }
        fs::write(&path, serde_json::to_string_pretty(self).unwrap()).map_err(io)
    }

    /// Loads the campaign if one exists, checking it matches; otherwise
    /// creates and saves a fresh one.
    pub fn load_or_init(
        workdir: &Workdir,
        seed: u64,
        scenario_path: &Path,
        scenario_hash: &str,
    ) -> Result<Self, CampaignError> {
        if workdir.campaign_file().is_file() {
            let existing = Self::load(workdir)?;
            if existing.scenario_hash != scenario_hash {
                return Err(CampaignError::Mismatch {
                    message: format!(
                        "scenario content changed (was {}, now {scenario_hash})",
                        existing.scenario_hash
                    ),
                });
            }
            if existing.seed != seed {
                return Err(CampaignError::Mismatch {
                    message: format!("seed changed (was {}, now {seed})", existing.seed),
                });
            }
            Ok(existing)
        } else {
            let campaign = Campaign::new(seed, scenario_path.to_path_buf(), scenario_hash.into());
            campaign.save(workdir)?;
            Ok(campaign)
        }
    }

    pub fn stamp(&mut self, stage: &str, inputs_hash: String) {
        self.stages
            .insert(stage.to_string(), StageStamp { inputs_hash });
    }

    pub fn require_stage(&self, stage: &'static str) -> Result<&StageStamp, CampaignError> {
        self.stages
            .get(stage)
            .ok_or(CampaignError::MissingStage { stage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_then_reload() {
        let dir = tempfile::tempdir().unwrap();
        let workdir = Workdir::new(dir.path());
        let mut c = Campaign::load_or_init(&workdir, 7, Path::new("s.toml"), "abc").unwrap();
        c.stamp(STAGE_TUNED, "h1".into());
        c.save(&workdir).unwrap();
        let back = Campaign::load(&workdir).unwrap();
        assert_eq!(back, c);
        assert!(back.require_stage(STAGE_TUNED).is_ok());
        assert!(matches!(
            back.require_stage(STAGE_SELECTED),
            Err(CampaignError::MissingStage { .. })
        ));
    }

    #[test]
    fn mismatched_scenario_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let workdir = Workdir::new(dir.path());
        Campaign::load_or_init(&workdir, 7, Path::new("s.toml"), "abc").unwrap();
        let err = Campaign::load_or_init(&workdir, 7, Path::new("s.toml"), "xyz").unwrap_err();
        assert!(matches!(err, CampaignError::Mismatch { .. }));
    }
}
