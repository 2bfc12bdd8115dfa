//! Per-cluster SINR side information.
//!
//! The scheduler only ever sees an `N x KL` matrix of SINR values in dB for
//! each cluster. Matrices come either from a seeded statistical model or from
//! a CSV file produced elsewhere (e.g. from vehicular traces).

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::matrix::Matrix;

/// Transmit power per CAM message that model means are referenced to.
pub const REFERENCE_P_T_DBM: f64 = 23.0;
pub const DEFAULT_FLOOR_DB: f64 = -15.0;
pub const DEFAULT_CEIL_DB: f64 = 35.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    id: usize,
    vehicle_ids: Vec<String>,
}

impl Cluster {
    pub fn new(id: usize, vehicle_ids: Vec<String>) -> Result<Self> {
        if vehicle_ids.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "cluster {id} has no vehicles"
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = vehicle_ids.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(Error::InvalidParameter(format!(
                "duplicate vehicle id {dup:?} in cluster {id}"
            )));
        }
        Ok(Cluster { id, vehicle_ids })
    }

    /// Cluster `id` with `n` vehicles named `c<id>v<i>`.
    pub fn with_size(id: usize, n: usize) -> Result<Self> {
        Self::new(id, (0..n).map(|i| format!("c{id}v{i}")).collect())
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn n_vehicles(&self) -> usize {
        self.vehicle_ids.len()
    }

    pub fn vehicle_ids(&self) -> &[String] {
        &self.vehicle_ids
    }
}

/// Checks that no vehicle belongs to two clusters and cluster ids are distinct.
pub fn check_disjoint(clusters: &[Cluster]) -> Result<()> {
    let mut ids = HashSet::new();
    let mut vehicles = HashSet::new();
    for c in clusters {
        if !ids.insert(c.id) {
            return Err(Error::InvalidParameter(format!(
                "duplicate cluster id {}",
                c.id
            )));
        }
        for v in &c.vehicle_ids {
            if !vehicles.insert(v.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "vehicle {v:?} appears in more than one cluster"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinrMatrix {
    cluster_id: usize,
    values: Matrix<f64>,
}

impl SinrMatrix {
    pub fn new(cluster_id: usize, values: Matrix<f64>) -> Result<Self> {
        if let Some(pos) = values.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "SINR entry ({}, {})",
                pos / values.cols().max(1),
                pos % values.cols().max(1)
            )));
        }
        Ok(SinrMatrix { cluster_id, values })
    }

    pub fn cluster_id(&self) -> usize {
        self.cluster_id
    }

    pub fn values(&self) -> &Matrix<f64> {
        &self.values
    }

    pub fn n_vehicles(&self) -> usize {
        self.values.rows()
    }

    fn check_grid(&self, grid: &ResourceGrid) -> Result<()> {
        if self.values.cols() != grid.total_subchannels() {
            return Err(Error::Shape {
                expected: format!("{} subchannel columns", grid.total_subchannels()),
                found: format!("{} columns", self.values.cols()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Independent uniform draws over the clamp range.
    Uniform,
    /// Independent Gaussian draws in dB.
    Gaussian,
    /// Each vehicle's weakest link is either good or bad for the whole
    /// window; entries are Gaussian around that state's mean.
    TwoState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioModel {
    pub kind: ScenarioKind,
    pub mean_db: f64,
    pub std_db: f64,
    /// Mean of the bad link state (two-state only).
    pub bad_mean_db: f64,
    /// Probability that a vehicle is in the bad state (two-state only).
    pub p_bad: f64,
    pub floor_db: f64,
    pub ceil_db: f64,
    pub p_t_dbm: f64,
    pub seed: u64,
}

impl Default for ScenarioModel {
    fn default() -> Self {
        ScenarioModel {
            kind: ScenarioKind::Uniform,
            mean_db: 10.0,
            std_db: 8.0,
            bad_mean_db: -5.0,
            p_bad: 0.2,
            floor_db: DEFAULT_FLOOR_DB,
            ceil_db: DEFAULT_CEIL_DB,
            p_t_dbm: REFERENCE_P_T_DBM,
            seed: 0,
        }
    }
}

impl ScenarioModel {
    pub fn uniform(floor_db: f64, ceil_db: f64, seed: u64) -> Self {
        ScenarioModel {
            kind: ScenarioKind::Uniform,
            floor_db,
            ceil_db,
            seed,
            ..Default::default()
        }
    }

    pub fn gaussian(mean_db: f64, std_db: f64, seed: u64) -> Self {
        ScenarioModel {
            kind: ScenarioKind::Gaussian,
            mean_db,
            std_db,
            seed,
            ..Default::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioModel {
            seed,
            ..self.clone()
        }
    }

    /// Returns every violated constraint, keyed by config name.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [
            ("scenario.mean_db", self.mean_db),
            ("scenario.std_db", self.std_db),
            ("scenario.bad_mean_db", self.bad_mean_db),
            ("scenario.floor_db", self.floor_db),
            ("scenario.ceil_db", self.ceil_db),
            ("scenario.p_t_dbm", self.p_t_dbm),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                out.push(format!("{key} must be finite"));
            }
        }
        if self.floor_db.partial_cmp(&self.ceil_db) != Some(std::cmp::Ordering::Less) {
            out.push(format!(
                "scenario.floor_db ({}) must be below scenario.ceil_db ({})",
                self.floor_db, self.ceil_db
            ));
        }
        if self.kind != ScenarioKind::Uniform
            && self.std_db.partial_cmp(&0.0).is_none_or(|o| o.is_lt())
        {
            out.push("scenario.std_db must be non-negative".into());
        }
        if self.kind == ScenarioKind::TwoState && !(0.0..=1.0).contains(&self.p_bad) {
            out.push("scenario.p_bad must lie in [0, 1]".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn power_offset_db(&self) -> f64 {
        self.p_t_dbm - REFERENCE_P_T_DBM
    }

    fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.floor_db, self.ceil_db)
    }
}

/// Draws the SINR matrix of `cluster`. The RNG stream is selected by the
/// cluster id, so clusters sharing a model seed still see independent values.
pub fn generate_sinr(
    model: &ScenarioModel,
    cluster: &Cluster,
    grid: &ResourceGrid,
) -> Result<SinrMatrix> {
    model.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    rng.set_stream(cluster.id as u64);

    let n = cluster.n_vehicles();
    let cols = grid.total_subchannels();
    let offset = model.power_offset_db();
    let mut values = Matrix::filled(n, cols, 0.0);

    match model.kind {
        ScenarioKind::Uniform => {
            for i in 0..n {
                for v in values.row_mut(i) {
                    let x = rng.random_range(model.floor_db..=model.ceil_db);
                    *v = model.clamp(x + offset);
                }
            }
        }
        ScenarioKind::Gaussian => {
            let normal = normal(model.mean_db + offset, model.std_db)?;
            for i in 0..n {
                for v in values.row_mut(i) {
                    *v = model.clamp(normal.sample(&mut rng));
                }
            }
        }
        ScenarioKind::TwoState => {
            let good = normal(model.mean_db + offset, model.std_db)?;
            let bad = normal(model.bad_mean_db + offset, model.std_db)?;
            for i in 0..n {
                let state = if rng.random_bool(model.p_bad) {
                    &bad
                } else {
                    &good
                };
                for v in values.row_mut(i) {
                    *v = model.clamp(state.sample(&mut rng));
                }
            }
        }
    }
    SinrMatrix::new(cluster.id, values)
}

fn normal(mean: f64, std: f64) -> Result<Normal<f64>> {
    Normal::new(mean, std)
        .map_err(|e| Error::InvalidParameter(format!("normal({mean}, {std}): {e}")))
}

/// Reads a cluster's SINR matrix from a CSV file.
///
/// Rows are matched to the cluster's vehicles by the `vehicle` column, so
/// they may appear in any order.
pub fn ingest_sinr(path: &Path, cluster: &Cluster, grid: &ResourceGrid) -> Result<SinrMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_sinr_csv(file, cluster, grid)
}

pub fn read_sinr_csv<R: Read>(
    reader: R,
    cluster: &Cluster,
    grid: &ResourceGrid,
) -> Result<SinrMatrix> {
    let cols = grid.total_subchannels();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    if headers.is_empty() || headers.get(0) != Some("vehicle") {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "header must start with `vehicle`".into(),
        });
    }
    if headers.len() != cols + 1 {
        return Err(Error::Shape {
            expected: format!("{cols} subchannel columns"),
            found: format!("{} columns", headers.len() - 1),
        });
    }

    let row_of: std::collections::HashMap<&str, usize> = cluster
        .vehicle_ids()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let mut values = Matrix::filled(cluster.n_vehicles(), cols, f64::NAN);
    let mut filled = vec![false; cluster.n_vehicles()];

    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != cols + 1 {
            return Err(Error::Shape {
                expected: format!("{} fields on line {line}", cols + 1),
                found: format!("{} fields", record.len()),
            });
        }
        let vehicle = &record[0];
        let Some(&row) = row_of.get(vehicle) else {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("vehicle {vehicle:?} is not in cluster {}", cluster.id()),
            });
        };
        if std::mem::replace(&mut filled[row], true) {
            return Err(Error::Parse {
                line,
                column: 1,
                message: format!("vehicle {vehicle:?} listed twice"),
            });
        }
        for (j, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: j + 2,
                message: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: j + 2,
                    message: format!("{cell:?} is not finite"),
                });
            }
            values[(row, j)] = v;
        }
    }

    let found = filled.iter().filter(|&&f| f).count();
    if found != cluster.n_vehicles() {
        return Err(Error::Shape {
            expected: format!("{} vehicle rows", cluster.n_vehicles()),
            found: format!("{found} rows"),
        });
    }
    SinrMatrix::new(cluster.id(), values)
}

/// Writes `sinr` in the format accepted by [`read_sinr_csv`].
pub fn write_sinr_csv<W: std::io::Write>(
    writer: W,
    sinr: &SinrMatrix,
    cluster: &Cluster,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["vehicle".to_string()];
    header.extend((0..sinr.values.cols()).map(|k| k.to_string()));
    w.write_record(&header)?;
    for (id, row) in cluster.vehicle_ids().iter().zip(sinr.values.iter_rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

/// Marks which rows of a padded matrix are dummy vehicles. Dummies are
/// always the trailing rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DummyMask {
    n_real: usize,
    n_total: usize,
}

impl DummyMask {
    pub fn none(n: usize) -> Self {
        DummyMask {
            n_real: n,
            n_total: n,
        }
    }

    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn n_total(&self) -> usize {
        self.n_total
    }

    pub fn is_dummy(&self, row: usize) -> bool {
        row >= self.n_real
    }

    pub fn dummy_rows(&self) -> std::ops::Range<usize> {
        self.n_real..self.n_total
    }

    pub fn is_empty(&self) -> bool {
        self.n_real == self.n_total
    }
}

/// Appends dummy vehicles at `sentinel_db` until there is one row per subframe.
pub fn pad_to_square(
    sinr: &SinrMatrix,
    grid: &ResourceGrid,
    sentinel_db: f64,
) -> Result<(SinrMatrix, DummyMask)> {
    sinr.check_grid(grid)?;
    let n = sinr.n_vehicles();
    let l = grid.l();
    if n > l {
        return Err(Error::Infeasible(format!(
            "{n} vehicles cannot be placed in {l} subframes"
        )));
    }
    if !sentinel_db.is_finite() {
        return Err(Error::NonFinite("dummy sentinel SINR".into()));
    }
    let cols = grid.total_subchannels();
    let mut data = Vec::with_capacity(l * cols);
    data.extend_from_slice(sinr.values.as_slice());
    data.resize(l * cols, sentinel_db);
    let padded = SinrMatrix::new(sinr.cluster_id, Matrix::from_vec(l, cols, data)?)?;
    Ok((
        padded,
        DummyMask {
            n_real: n,
            n_total: l,
        },
    ))
}
