//! Run configuration: one TOML document covering every subcommand.
//!
//! Each subcommand reads only the sections it needs; every key has a
//! documented default, so the empty document is a valid configuration.
//! Unknown keys anywhere are rejected with the offending key named, and the
//! fully resolved configuration (defaults filled in) is echoed into the run
//! manifest so artifacts are self-describing.

use std::f64::consts::FRAC_1_SQRT_2;

use anyhow::{bail, Context, Result};
use graphon_core::{MeasureMap, OccupancyBounds, SpectralGraphon};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Fully resolved run configuration. Field defaults are the documented
/// subcommand defaults; `seed` falls back to the library-wide deterministic
/// constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed for every RNG stream in the run.
    pub seed: u64,
    pub graphon: GraphonConfig,
    pub sample: SampleConfig,
    pub conditioning: ConditioningConfig,
    pub estimate: EstimateConfig,
    pub spectra: SpectraConfig,
    pub packing: PackingConfig,
    pub fano: FanoConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: graphon_core::DEFAULT_SEED,
            graphon: GraphonConfig::default(),
            sample: SampleConfig::default(),
            conditioning: ConditioningConfig::default(),
            estimate: EstimateConfig::default(),
            spectra: SpectraConfig::default(),
            packing: PackingConfig::default(),
            fano: FanoConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parse a TOML document, filling defaults. Unknown keys and malformed
    /// values are rejected with the key named in the message.
    pub fn parse(document: &str) -> Result<Self> {
        let config: Self = toml::from_str(document).context("invalid configuration document")?;
        Ok(config)
    }

    /// Serialize back to TOML (exercised by the round-trip check; the
    /// manifest embeds the JSON form instead).
    #[cfg(test)]
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).context("configuration cannot be serialized")
    }
}

/// Which graphon the run works with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphonConfig {
    /// `trig-decay`, `constant`, or `sbm`.
    pub family: String,
    /// Eigenvalue decay exponent (trig-decay).
    pub rate: f64,
    /// Decay coefficient (trig-decay); omitted means the largest value the
    /// family admits at this rate/rank/offset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
    /// Number of oscillatory terms (trig-decay).
    pub rank: usize,
    /// Constant term (trig-decay).
    pub offset: f64,
    /// Edge probability (constant family).
    pub level: f64,
    /// Symmetric block matrix rows (sbm family).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Vec<f64>>>,
}

impl Default for GraphonConfig {
    fn default() -> Self {
        Self {
            family: "trig-decay".to_owned(),
            rate: 2.0,
            coefficient: None,
            rank: 200,
            offset: 0.5,
            level: 0.5,
            blocks: None,
        }
    }
}

/// `sample` subcommand settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    /// Number of vertices.
    pub n: usize,
    /// Condition the latent draw on the bin-occupancy event.
    pub conditioned: bool,
    /// Rejection budget for the conditioned draw.
    pub max_attempts: u32,
    /// RNG stream id for this subcommand.
    pub stream: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n: 200,
            conditioned: false,
            max_attempts: 64,
            stream: 1,
        }
    }
}

/// Occupancy-event band, shared by conditioned sampling, the conditioning
/// experiment, and the fano report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConditioningConfig {
    /// λ₁: every bin must hold at least `λ₁·n/m` points.
    pub lower_ratio: f64,
    /// λ₂: every bin must hold at most `λ₂·n/m` points.
    pub upper_ratio: f64,
}

impl Default for ConditioningConfig {
    fn default() -> Self {
        Self {
            lower_ratio: 1.0 - FRAC_1_SQRT_2,
            upper_ratio: 1.0 + FRAC_1_SQRT_2,
        }
    }
}

impl ConditioningConfig {
    pub fn bounds(&self) -> Result<OccupancyBounds> {
        OccupancyBounds::new(self.lower_ratio, self.upper_ratio)
            .context("conditioning.lower_ratio / conditioning.upper_ratio out of range")
    }
}

/// `estimate` subcommand settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    /// Threshold scale: singular values below `c·√n` are discarded.
    pub c: f64,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self { c: 4.0 }
    }
}

/// `spectra certify` subcommand settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectraConfig {
    /// Matrix size per replicate.
    pub n: usize,
    /// Monte Carlo replicates per cut.
    pub replicates: usize,
    /// Tail cuts to certify.
    pub cuts: Vec<usize>,
    /// RNG stream block; replicate `r` draws from stream
    /// `(stream_block << 32) | r`.
    pub stream_block: u64,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            n: 500,
            replicates: 50,
            cuts: vec![5, 10, 20],
            stream_block: 0,
        }
    }
}

/// `packing build` / `packing verify` settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PackingConfig {
    /// Ambient dimension (rows per frame).
    pub m: usize,
    /// Subspace dimension (columns per frame).
    pub k: usize,
    /// Separation level: kept frames are pairwise at least `delta·k` apart
    /// in squared projection distance.
    pub delta: f64,
    /// Number of frames to collect.
    pub target: usize,
    /// Candidate budget for the greedy search.
    pub budget: usize,
    /// RNG stream id for the greedy search.
    pub stream: u64,
}

impl Default for PackingConfig {
    fn default() -> Self {
        Self {
            m: 32,
            k: 2,
            delta: 0.25,
            target: 8,
            budget: 4096,
            stream: 7,
        }
    }
}

/// `fano report` settings (the packing itself comes from `[packing]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FanoConfig {
    /// Number of vertices in the conditioned latent draw.
    pub n: usize,
    /// Eigenvalue decay exponent of the hypothesis family.
    pub rate: f64,
    /// Perturbation scale; omitted means the largest feasible scale (capped).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// RNG stream id for the latent draw.
    pub stream: u64,
    /// Rejection budget for the conditioned draw.
    pub max_attempts: u32,
}

impl Default for FanoConfig {
    fn default() -> Self {
        Self {
            n: 288,
            rate: 2.0,
            scale: None,
            stream: 10,
            max_attempts: 256,
        }
    }
}

/// `experiment rate|conditioning|invariance` settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Size grid for the rate experiment (strictly increasing).
    pub n_grid: Vec<usize>,
    /// Replicates per grid point (rate experiment).
    pub replicates: u32,
    /// Stream block: grid point `g`, replicate `r` draws from stream
    /// `((stream_block + g) << 32) | r`. The conditioning experiment uses
    /// `stream_block` directly as its stream id.
    pub stream_block: u64,
    /// Trials for the conditioning experiment.
    pub trials: u32,
    /// Number of vertices for the conditioning experiment.
    pub n: usize,
    /// Discretization grid for the invariance experiment.
    pub grid: usize,
    /// Measure-preserving maps for the invariance experiment:
    /// `identity`, `half-swap`, or `wrap:<n>`.
    pub maps: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![200, 400, 800, 1600],
            replicates: 20,
            stream_block: 0,
            trials: 2000,
            n: 1000,
            grid: 1024,
            maps: vec![
                "identity".to_owned(),
                "half-swap".to_owned(),
                "wrap:2".to_owned(),
            ],
        }
    }
}

/// Build the configured graphon.
pub fn build_graphon(config: &GraphonConfig) -> Result<SpectralGraphon> {
    match config.family.as_str() {
        "trig-decay" => {
            SpectralGraphon::trig_decay(config.rate, config.coefficient, config.rank, config.offset)
                .context("graphon: invalid trig-decay parameters")
        }
        "constant" => SpectralGraphon::constant(config.level).context("graphon.level out of range"),
        "sbm" => {
            let rows = config
                .blocks
                .as_ref()
                .context("graphon.blocks is required for the sbm family")?;
            let k = rows.len();
            if k == 0 || rows.iter().any(|row| row.len() != k) {
                bail!("graphon.blocks must be a non-empty square matrix");
            }
            let blocks = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
            SpectralGraphon::from_sbm(&blocks).context("graphon.blocks is not a valid block matrix")
        }
        other => bail!(
            "graphon.family: unknown family {other:?}, expected one of trig-decay, constant, sbm"
        ),
    }
}

/// Parse one measure-preserving map label (`identity`, `half-swap`,
/// `wrap:<n>`).
pub fn parse_map(label: &str) -> Result<MeasureMap> {
    match label {
        "identity" => Ok(MeasureMap::Identity),
        "half-swap" => Ok(MeasureMap::HalfSwap),
        other => {
            if let Some(count) = other.strip_prefix("wrap:") {
                let count: u32 = count
                    .parse()
                    .with_context(|| format!("experiment.maps: bad wrap count in {other:?}"))?;
                if count == 0 {
                    bail!("experiment.maps: wrap count must be at least 1 in {other:?}");
                }
                Ok(MeasureMap::Wrap(count))
            } else {
                bail!(
                    "experiment.maps: unknown map {other:?}, expected identity, half-swap, or wrap:<n>"
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_resolves_to_defaults() {
        let config = RunConfig::parse("").unwrap();
        assert_eq!(config, RunConfig::default());
        assert_eq!(config.seed, graphon_core::DEFAULT_SEED);
    }

    #[test]
    fn minimal_rate_document_echoes_documented_defaults() {
        let config = RunConfig::parse("[experiment]\nn_grid = [200, 400]\n").unwrap();
        assert_eq!(config.estimate.c, 4.0);
        assert_eq!(config.conditioning.upper_ratio, 1.0 + FRAC_1_SQRT_2);
        assert_eq!(config.conditioning.lower_ratio, 1.0 - FRAC_1_SQRT_2);
        assert_eq!(config.experiment.n_grid, vec![200, 400]);
        assert_eq!(config.experiment.replicates, 20);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse("taus = [1, 2]\n").unwrap_err();
        assert!(format!("{err:#}").contains("taus"), "{err:#}");

        let err = RunConfig::parse("[estimate]\nc = 4.0\nrho = 1\n").unwrap_err();
        assert!(format!("{err:#}").contains("rho"), "{err:#}");
    }

    #[test]
    fn malformed_values_are_rejected() {
        assert!(RunConfig::parse("seed = \"abc\"\n").is_err());
        assert!(RunConfig::parse("[sample]\nn = -5\n").is_err());
    }

    #[test]
    fn toml_round_trip_is_identity() {
        let document = "
            seed = 7
            [graphon]
            family = \"trig-decay\"
            rate = 1.5
            coefficient = 0.02
            [experiment]
            n_grid = [100, 200]
            replicates = 3
        ";
        let first = RunConfig::parse(document).unwrap();
        let serialized = first.to_toml().unwrap();
        let second = RunConfig::parse(&serialized).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn graphon_families_build() {
        let config = GraphonConfig::default();
        let graphon = build_graphon(&config).unwrap();
        assert_eq!(graphon.rank(), 201);

        let constant = GraphonConfig {
            family: "constant".to_owned(),
            ..GraphonConfig::default()
        };
        assert_eq!(build_graphon(&constant).unwrap().rank(), 1);

        let sbm = GraphonConfig {
            family: "sbm".to_owned(),
            blocks: Some(vec![vec![0.6, 0.1], vec![0.1, 0.6]]),
            ..GraphonConfig::default()
        };
        assert_eq!(build_graphon(&sbm).unwrap().rank(), 2);

        let missing_blocks = GraphonConfig {
            family: "sbm".to_owned(),
            ..GraphonConfig::default()
        };
        assert!(build_graphon(&missing_blocks).is_err());

        let unknown = GraphonConfig {
            family: "mystery".to_owned(),
            ..GraphonConfig::default()
        };
        let err = build_graphon(&unknown).unwrap_err();
        assert!(format!("{err:#}").contains("mystery"));
    }

    #[test]
    fn map_labels_parse() {
        assert_eq!(parse_map("identity").unwrap(), MeasureMap::Identity);
        assert_eq!(parse_map("half-swap").unwrap(), MeasureMap::HalfSwap);
        assert_eq!(parse_map("wrap:3").unwrap(), MeasureMap::Wrap(3));
        assert!(parse_map("wrap:0").is_err());
        assert!(parse_map("rotate").is_err());
    }
}
