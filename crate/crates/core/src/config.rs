//! Experiment configuration (TOML).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::scenario::{ScenarioModel, DEFAULT_CEIL_DB, DEFAULT_FLOOR_DB};
use crate::sideinfo::{QuantizerSpec, MAX_BITS};
use crate::solvers::{Method, ORACLE_MAX_K, ORACLE_MAX_L};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantConfig {
    /// Bit depths to evaluate; 0 means unquantized.
    pub bits: Vec<u8>,
    pub lo_db: f64,
    pub hi_db: f64,
}

impl Default for QuantConfig {
    fn default() -> Self {
        QuantConfig {
            bits: vec![0, 2, 3, 4],
            lo_db: DEFAULT_FLOOR_DB,
            hi_db: DEFAULT_CEIL_DB,
        }
    }
}

impl QuantConfig {
    /// Quantizer for `bits`, or `None` for ideal side information.
    pub fn quantizer(&self, bits: u8) -> Result<Option<QuantizerSpec>> {
        match bits {
            0 => Ok(None),
            b => QuantizerSpec::new(b, self.lo_db, self.hi_db).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n_vehicles: Vec<usize>,
    pub bits: Vec<u8>,
    /// Falls back to the experiment's repetition count.
    pub repetitions: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_vehicles: (1..=10).map(|i| i * 10).collect(),
            bits: vec![2, 3, 4],
            repetitions: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: ResourceGrid,
    pub scenario: ScenarioModel,
    pub quant: QuantConfig,
    /// One cluster per entry, with that many vehicles.
    pub cluster_sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub repetitions: usize,
    /// Generated at run time when absent; always recorded in the manifest.
    pub master_seed: Option<u64>,
    pub output_dir: PathBuf,
    pub cdf_points: usize,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    /// K = 7 subchannels of 1 ms x 1.26 MHz, L = 100 subframes (10 Hz CAMs),
    /// one cluster of 100 vehicles.
    fn default() -> Self {
        ExperimentConfig {
            grid: ResourceGrid::new(7, 100, 1.0, 1.26e6).expect("valid default grid"),
            scenario: ScenarioModel::default(),
            quant: QuantConfig::default(),
            cluster_sizes: vec![100],
            methods: vec![Method::Proposed, Method::Greedy, Method::Random],
            repetitions: 100,
            master_seed: None,
            output_dir: PathBuf::from("out"),
            cdf_points: 200,
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_col(s, span.start))
                .unwrap_or((0, 0));
            Error::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks the keys used by `run`, listing every offending one.
    pub fn validate(&self) -> Result<()> {
        let mut problems = self.common_problems();
        let l = self.grid.l();
        if self.cluster_sizes.is_empty() {
            problems.push("cluster_sizes must not be empty".into());
        }
        for (j, &n) in self.cluster_sizes.iter().enumerate() {
            if n == 0 || n > l {
                problems.push(format!("cluster_sizes[{j}] = {n} must lie in 1..={l}"));
            }
        }
        check_bits("quant.bits", &self.quant.bits, &mut problems);
        into_result(problems)
    }

    /// Checks the keys used by `sweep`.
    pub fn validate_sweep(&self) -> Result<()> {
        let mut problems = self.common_problems();
        let l = self.grid.l();
        if self.sweep.n_vehicles.is_empty() {
            problems.push("sweep.n_vehicles must not be empty".into());
        }
        for (i, &n) in self.sweep.n_vehicles.iter().enumerate() {
            if n == 0 || n > l {
                problems.push(format!("sweep.n_vehicles[{i}] = {n} must lie in 1..={l}"));
            }
        }
        check_bits("sweep.bits", &self.sweep.bits, &mut problems);
        if self.sweep.repetitions == Some(0) {
            problems.push("sweep.repetitions must be at least 1".into());
        }
        into_result(problems)
    }

    fn common_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if let Err(e) = self.grid.validate() {
            problems.push(format!("grid: {e}"));
        }
        problems.extend(self.scenario.problems());
        if !(self.quant.lo_db.is_finite()
            && self.quant.hi_db.is_finite()
            && self.quant.lo_db < self.quant.hi_db)
        {
            problems.push(format!(
                "quant.lo_db ({}) must be below quant.hi_db ({})",
                self.quant.lo_db, self.quant.hi_db
            ));
        }

        if self.methods.is_empty() {
            problems.push("methods must not be empty".into());
        }
        let mut seen = HashSet::new();
        for m in &self.methods {
            if !seen.insert(m) {
                problems.push(format!("methods lists {m} twice"));
            }
        }
        if self.repetitions == 0 {
            problems.push("repetitions must be at least 1".into());
        }
        if self.cdf_points < 2 {
            problems.push("cdf_points must be at least 2".into());
        }

        problems
    }

    /// Fails when a requested method cannot handle the grid size.
    pub fn check_capacity(&self) -> Result<()> {
        if self.methods.contains(&Method::Oracle)
            && (self.grid.l() > ORACLE_MAX_L || self.grid.k() > ORACLE_MAX_K)
        {
            return Err(Error::Capacity(format!(
                "oracle limited to L <= {ORACLE_MAX_L}, K <= {ORACLE_MAX_K} (got L={}, K={})",
                self.grid.l(),
                self.grid.k()
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn into_result(problems: Vec<String>) -> Result<()> {
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(problems))
    }
}

fn check_bits(key: &str, bits: &[u8], problems: &mut Vec<String>) {
    if bits.is_empty() {
        problems.push(format!("{key} must not be empty"));
    }
    for (i, &b) in bits.iter().enumerate() {
        if b > MAX_BITS {
            problems.push(format!("{key}[{i}] = {b} must lie in 0..={MAX_BITS}"));
        }
    }
    let mut seen = HashSet::new();
    for b in bits {
        if !seen.insert(b) {
            problems.push(format!("{key} lists {b} twice"));
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, column)
}
