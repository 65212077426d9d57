//! Experiment configuration: JSON schema for the `music` subcommand.
//!
//! ```json
//! {
//!   "scene": {
//!     "preset": "s3",              // or "array": [..], or "tx"/"rx"
//!     "targets_deg": [10.0, 12.0],
//!     "snr_db": 20.0,              // null or omitted = noiseless
//!     "seed": 0
//!   },
//!   "decomposition": {"basic": [..], "shifts": [..]},  // or {"search": {"ns": 4, "l": 2}}
//!   "music": {"grid_step_deg": 0.02, "k": 2}
//! }
//! ```
//!
//! All angles at this boundary are degrees in [-90, 90). A preset scene
//! may omit the decomposition to use the preset's own.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use sparsedoa::decompose::{enumerate_decompositions, rank_decompositions, DecompositionQuery};
use sparsedoa::geometry::{Decomposition, MimoArrayPair, SensorPositions};
use sparsedoa::identifiability::FalsificationConfig;
use sparsedoa::manifold::AngleSet;
use sparsedoa::music::AngleGrid;
use sparsedoa::presets;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    #[serde(default)]
    pub decomposition: Option<DecompositionConfig>,
    #[serde(default)]
    pub music: MusicConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub array: Option<Vec<i64>>,
    #[serde(default)]
    pub tx: Option<Vec<i64>>,
    #[serde(default)]
    pub rx: Option<Vec<i64>>,
    pub targets_deg: Vec<f64>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    #[serde(default)]
    pub basic: Option<Vec<i64>>,
    #[serde(default)]
    pub shifts: Option<Vec<i64>>,
    #[serde(default)]
    pub search: Option<SearchConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub ns: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MusicConfig {
    #[serde(default = "default_grid_step")]
    pub grid_step_deg: f64,
    #[serde(default)]
    pub k: Option<usize>,
}

fn default_grid_step() -> f64 {
    0.02
}

impl Default for MusicConfig {
    fn default() -> Self {
        Self {
            grid_step_deg: default_grid_step(),
            k: None,
        }
    }
}

/// A fully resolved experiment ready to run.
pub struct ResolvedExperiment {
    pub array: SensorPositions,
    pub decomposition: Decomposition,
    pub targets: AngleSet,
    pub snr_db: f64,
    pub seed: u64,
    pub k: usize,
    pub grid: AngleGrid,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        let preset = match &self.scene.preset {
            Some(name) => Some(
                presets::by_name(name)
                    .ok_or_else(|| anyhow!("unknown preset '{name}' (expected s1, s2, or s3)"))?,
            ),
            None => None,
        };

        let source_count = [
            self.scene.preset.is_some(),
            self.scene.array.is_some(),
            self.scene.tx.is_some() || self.scene.rx.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if source_count != 1 {
            bail!("scene must specify exactly one of: preset, array, or tx+rx");
        }

        let array = if let Some(p) = &preset {
            p.virtual_array().clone()
        } else if let Some(list) = &self.scene.array {
            SensorPositions::new(list.clone()).context("invalid scene.array")?
        } else {
            let tx = self
                .scene
                .tx
                .as_ref()
                .ok_or_else(|| anyhow!("tx missing (rx given)"))?;
            let rx = self
                .scene
                .rx
                .as_ref()
                .ok_or_else(|| anyhow!("rx missing (tx given)"))?;
            MimoArrayPair::new(
                SensorPositions::new(tx.clone()).context("invalid scene.tx")?,
                SensorPositions::new(rx.clone()).context("invalid scene.rx")?,
            )
            .virtual_array()
        };

        let targets =
            AngleSet::from_degrees(&self.scene.targets_deg).context("invalid scene.targets_deg")?;
        let k = self.music.k.unwrap_or(targets.len());

        let decomposition = match &self.decomposition {
            None => preset
                .as_ref()
                .map(|p| p.decomposition.clone())
                .ok_or_else(|| anyhow!("decomposition required unless the scene is a preset"))?,
            Some(d) => resolve_decomposition(d, &array, k)?,
        };

        if self.music.grid_step_deg <= 0.0 || self.music.grid_step_deg > 10.0 {
            bail!("music.grid_step_deg must lie in (0, 10]");
        }

        Ok(ResolvedExperiment {
            array,
            decomposition,
            targets,
            snr_db: self.scene.snr_db.unwrap_or(f64::INFINITY),
            seed: self.scene.seed,
            k,
            grid: AngleGrid::with_step(self.music.grid_step_deg),
        })
    }
}

fn resolve_decomposition(
    config: &DecompositionConfig,
    array: &SensorPositions,
    k: usize,
) -> Result<Decomposition> {
    match (&config.basic, &config.shifts, &config.search) {
        (Some(basic), Some(shifts), None) => {
            let deco = Decomposition::new(
                SensorPositions::new(basic.clone()).context("invalid decomposition.basic")?,
                SensorPositions::new(shifts.clone()).context("invalid decomposition.shifts")?,
                array.clone(),
            )
            .context("decomposition does not fit the scene array")?;
            Ok(deco)
        }
        (None, None, Some(search)) => {
            let query = DecompositionQuery::new(array.clone(), search.ns, search.l)
                .map_err(|e| anyhow!("infeasible decomposition search: {e}"))?;
            let result = enumerate_decompositions(&query);
            if result.decompositions.is_empty() {
                bail!(
                    "no decomposition of {array} with N_s = {} and L = {}",
                    search.ns,
                    search.l
                );
            }
            let cfg = FalsificationConfig::for_tuple_size(k + 1);
            let ranked = rank_decompositions(result.decompositions, Some(k), &cfg);
            Ok(ranked[0].decomposition.clone())
        }
        _ => bail!("decomposition must give either basic+shifts or a search block"),
    }
}
