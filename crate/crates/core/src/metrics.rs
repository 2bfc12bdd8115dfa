//! Rate statistics: empirical CDFs, the four summary criteria and
//! vehicle-density sweeps.

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{run_cells, CellResult};
use crate::solvers::Method;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfPoint {
    pub rate_x: f64,
    /// `Pr(rate < rate_x)`.
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: Method,
    /// 0 means unquantized side information.
    pub bits: u8,
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub highest: f64,
    pub average: f64,
    pub worst: f64,
    /// Population standard deviation.
    pub std_dev: f64,
    pub cdf: Vec<CdfPoint>,
}

impl EvalReport {
    /// Summarizes per-vehicle rates. The CDF is sampled on `grid_points`
    /// evenly spaced abscissae from the smallest to the largest sample; the
    /// last abscissa is nudged just above the maximum so that the strict
    /// inequality reaches 1.
    pub fn build(method: Method, bits: u8, samples: Vec<f64>, grid_points: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("no rate samples".into()));
        }
        if let Some(s) = samples.iter().find(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("rate sample {s}")));
        }
        if grid_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "CDF needs at least 2 grid points, got {grid_points}"
            )));
        }
        let n = samples.len() as f64;
        let worst = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let highest = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let average = (samples.iter().sum::<f64>() / n).clamp(worst, highest);
        let std_dev = (samples.iter().map(|s| (s - average).powi(2)).sum::<f64>() / n).sqrt();

        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let mut xs: Vec<f64> = (0..grid_points - 1)
            .map(|i| worst + (highest - worst) * i as f64 / (grid_points - 1) as f64)
            .collect();
        xs.push(highest.next_up());
        xs.dedup_by(|b, a| b <= a);
        let cdf = xs
            .into_iter()
            .map(|x| CdfPoint {
                rate_x: x,
                prob: sorted.partition_point(|&s| s < x) as f64 / n,
            })
            .collect();

        Ok(EvalReport {
            method,
            bits,
            samples,
            highest,
            average,
            worst,
            std_dev,
            cdf,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: Method,
    pub bits: u8,
    pub n_vehicles: usize,
    /// Mean over repetitions of the per-repetition worst vehicle rate, bits/s.
    pub worst_rate: f64,
}

/// Worst-vehicle rate as the cluster load grows. Each entry of
/// `n_vehicles_list` is run as a single cluster of that size.
pub fn sweep_density(
    config: &ExperimentConfig,
    n_vehicles_list: &[usize],
    bits_list: &[u8],
    repetitions: usize,
) -> Result<Vec<SweepRow>> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs at least one repetition".into(),
        ));
    }
    let l = config.grid.l();
    if let Some(&n) = n_vehicles_list.iter().find(|&&n| n > l) {
        return Err(Error::Infeasible(format!(
            "{n} vehicles cannot be placed in {l} subframes"
        )));
    }
    let mut rows = Vec::new();
    for &n in n_vehicles_list {
        let cfg = ExperimentConfig {
            cluster_sizes: vec![n],
            repetitions,
            quant: crate::config::QuantConfig {
                bits: bits_list.to_vec(),
                ..config.quant.clone()
            },
            ..config.clone()
        };
        cfg.validate()?;
        let cells = run_cells(&cfg)?;
        for &method in &cfg.methods {
            for &bits in bits_list {
                rows.push(SweepRow {
                    method,
                    bits,
                    n_vehicles: n,
                    worst_rate: mean_worst(&cells, method, bits, repetitions),
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.method, r.bits, r.n_vehicles));
    Ok(rows)
}

/// Mean over repetitions of the minimum vehicle rate in that repetition.
pub fn mean_worst(cells: &[CellResult], method: Method, bits: u8, repetitions: usize) -> f64 {
    let mut worst = vec![f64::INFINITY; repetitions];
    for c in cells
        .iter()
        .filter(|c| c.method == method && c.bits == bits)
    {
        let w = c
            .evaluation
            .vehicle_rates
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        worst[c.repetition] = worst[c.repetition].min(w);
    }
    worst.iter().sum::<f64>() / repetitions as f64
}
