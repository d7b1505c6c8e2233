//! Run and sweep configuration.
//!
//! Configuration files are TOML with optional `[simulation]`, `[sweep]` and
//! `[analysis]` tables. Every key is optional; missing keys keep their
//! defaults and command-line overrides are applied last.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{MagnetizationUpdate, SimConfig};
use crate::error::{Error, Result};
use crate::measures::AcfCentring;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Histogram bins for the signed and absolute return distributions.
    pub bins: usize,
    /// Largest autocorrelation lag; `None` means `T - 2`.
    pub max_lag: Option<usize>,
    /// Density of the exported log-spaced lag grid.
    pub lags_per_decade: usize,
    /// Also run the binned least-squares Student's t fit.
    pub binned_student_t: bool,
    #[serde(default)]
    pub acf_centring: AcfCentring,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            bins: 101,
            max_lag: None,
            lags_per_decade: 20,
            binned_student_t: false,
            acf_centring: AcfCentring::default(),
        }
    }
}

/// Critical noise of the contrarian-free model, keyed by mean degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QcTable(pub Vec<(f64, f64)>);

impl Default for QcTable {
    fn default() -> Self {
        QcTable(vec![(6.0, 0.240), (8.0, 0.275), (50.0, 0.411)])
    }
}

impl QcTable {
    pub fn get(&self, mean_degree: f64) -> Option<f64> {
        self.0
            .iter()
            .find(|(k, _)| (k - mean_degree).abs() < 1e-9)
            .map(|&(_, q)| q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    AtQc,
    /// `q_c (1 - 10%)`
    BelowQc,
    /// `q_c (1 + 10%)`
    AboveQc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Mode(NoiseMode),
    Explicit(Vec<f64>),
}

impl NoiseSpec {
    pub fn noise_values(&self, mean_degree: f64, table: &QcTable) -> Result<Vec<f64>> {
        let qc = || table.get(mean_degree).ok_or(Error::MissingQc(mean_degree));
        Ok(match self {
            NoiseSpec::Mode(NoiseMode::AtQc) => vec![qc()?],
            NoiseSpec::Mode(NoiseMode::BelowQc) => vec![qc()? * 0.9],
            NoiseSpec::Mode(NoiseMode::AboveQc) => vec![qc()? * 1.1],
            NoiseSpec::Explicit(qs) => qs.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub mean_degrees: Vec<f64>,
    pub fractions: Vec<f64>,
    pub noise: NoiseSpec,
    pub replicas: usize,
    pub qc_table: QcTable,
    /// Cell template; `mean_degree`, `q`, `f` and `seed` are replaced per cell.
    /// Its `seed` is the sweep's root seed.
    pub base: SimConfig,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            mean_degrees: vec![6.0, 8.0],
            fractions: vec![0.20, 0.25, 0.30, 0.40, 0.50, 0.70],
            noise: NoiseSpec::Mode(NoiseMode::AtQc),
            replicas: 1,
            qc_table: QcTable::default(),
            base: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub id: String,
    pub group: String,
    pub replica: usize,
    pub config: SimConfig,
}

impl SweepSpec {
    /// Expands the grid in `(<k>, q, f, replica)` order.
    ///
    /// Replica `r` uses seed `derive_seed(root, r)` in every cell, so cells
    /// that differ only in `q` or `f` share their network and initial state.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.mean_degrees.is_empty() {
            return Err(Error::Config("sweep has no mean degrees".into()));
        }
        if self.fractions.is_empty() {
            return Err(Error::Config("sweep has no contrarian fractions".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Config("sweep needs at least one replica".into()));
        }
        let mut cells = Vec::new();
        for &k in &self.mean_degrees {
            for q in self.noise.noise_values(k, &self.qc_table)? {
                for &f in &self.fractions {
                    let group = format!("k{k}_q{q:.4}_f{f:.2}");
                    for replica in 0..self.replicas {
                        let config = SimConfig {
                            mean_degree: k,
                            q,
                            f,
                            seed: derive_seed(self.base.seed, replica as u64),
                            ..self.base.clone()
                        };
                        config.validate()?;
                        cells.push(Cell {
                            index: cells.len(),
                            id: format!("{group}_r{replica}"),
                            group: group.clone(),
                            replica,
                            config,
                        });
                    }
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n: Option<usize>,
    pub mean_degree: Option<f64>,
    pub q: Option<f64>,
    pub f: Option<f64>,
    pub transient_mcs: Option<usize>,
    pub measure_mcs: Option<usize>,
    pub seed: Option<u64>,
    pub magnetization_update: Option<MagnetizationUpdate>,
}

impl SimulationSection {
    pub fn apply(&self, cfg: &mut SimConfig) {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { cfg.$field = v; } )* };
        }
        set!(
            n,
            mean_degree,
            q,
            f,
            transient_mcs,
            measure_mcs,
            seed,
            magnetization_update
        );
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub mean_degrees: Option<Vec<f64>>,
    pub fractions: Option<Vec<f64>>,
    pub noise: Option<NoiseSpec>,
    pub replicas: Option<usize>,
    pub qc_table: Option<QcTable>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub bins: Option<usize>,
    pub max_lag: Option<usize>,
    pub lags_per_decade: Option<usize>,
    pub binned_student_t: Option<bool>,
    pub acf_centring: Option<AcfCentring>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn simulation(&self) -> SimConfig {
        let mut cfg = SimConfig::default();
        self.simulation.apply(&mut cfg);
        cfg
    }

    pub fn analysis(&self) -> AnalysisOptions {
        let mut opts = AnalysisOptions::default();
        let a = &self.analysis;
        if let Some(v) = a.bins {
            opts.bins = v;
        }
        if a.max_lag.is_some() {
            opts.max_lag = a.max_lag;
        }
        if let Some(v) = a.lags_per_decade {
            opts.lags_per_decade = v;
        }
        if let Some(v) = a.binned_student_t {
            opts.binned_student_t = v;
        }
        if let Some(v) = a.acf_centring {
            opts.acf_centring = v;
        }
        opts
    }

    pub fn sweep(&self) -> SweepSpec {
        let mut spec = SweepSpec {
            base: self.simulation(),
            ..SweepSpec::default()
        };
        let s = &self.sweep;
        if let Some(v) = &s.mean_degrees {
            spec.mean_degrees = v.clone();
        }
        if let Some(v) = &s.fractions {
            spec.fractions = v.clone();
        }
        if let Some(v) = &s.noise {
            spec.noise = v.clone();
        }
        if let Some(v) = s.replicas {
            spec.replicas = v;
        }
        if let Some(v) = &s.qc_table {
            spec.qc_table = v.clone();
        }
        spec
    }
}
