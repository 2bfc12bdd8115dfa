//! Subchannel assignment methods.
//!
//! * `proposed` compresses each subframe to a macro-vertex and solves the
//!   resulting `L x L` problem with Kuhn-Munkres.
//! * `greedy` serves vehicles in index order, each taking its best
//!   subchannel among still-free subframes.
//! * `random` draws a uniformly random time-orthogonal assignment.
//! * `oracle` enumerates every feasible assignment; small instances only.

pub mod hungarian;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assignment::{compress, expand_solution, ReducedProblem};
use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::matrix::Matrix;
use crate::scenario::DummyMask;
use crate::sideinfo::RateMatrix;

pub const ORACLE_MAX_L: usize = 8;
pub const ORACLE_MAX_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Proposed,
    Greedy,
    Random,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Proposed,
        Method::Greedy,
        Method::Random,
        Method::Oracle,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Greedy => "greedy",
            Method::Random => "random",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Vehicle `i` of a cluster transmits on global subchannel `subchannels[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    cluster_id: usize,
    subchannels: Vec<usize>,
    method: Method,
}

/// A broken assignment invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    OutOfRange {
        vehicle: usize,
        subchannel: usize,
    },
    SharedSubframe {
        first: usize,
        second: usize,
        subframe: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange {
                vehicle,
                subchannel,
            } => {
                write!(
                    f,
                    "vehicle {vehicle} uses nonexistent subchannel {subchannel}"
                )
            }
            Violation::SharedSubframe {
                first,
                second,
                subframe,
            } => {
                write!(
                    f,
                    "vehicles {first} and {second} both transmit in subframe {subframe}"
                )
            }
        }
    }
}

impl Assignment {
    pub fn new(cluster_id: usize, subchannels: Vec<usize>, method: Method) -> Self {
        Assignment {
            cluster_id,
            subchannels,
            method,
        }
    }

    pub fn cluster_id(&self) -> usize {
        self.cluster_id
    }

    pub fn subchannels(&self) -> &[usize] {
        &self.subchannels
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn n_vehicles(&self) -> usize {
        self.subchannels.len()
    }

    /// Assignment restricted to the first `n` vehicles.
    pub fn truncated(&self, n: usize) -> Assignment {
        Assignment {
            subchannels: self.subchannels[..n.min(self.subchannels.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn violations(&self, grid: &ResourceGrid) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut owner: Vec<Option<usize>> = vec![None; grid.l()];
        for (vehicle, &sc) in self.subchannels.iter().enumerate() {
            let Ok(sf) = grid.subframe_of(sc) else {
                out.push(Violation::OutOfRange {
                    vehicle,
                    subchannel: sc,
                });
                continue;
            };
            match owner[sf] {
                Some(first) => out.push(Violation::SharedSubframe {
                    first,
                    second: vehicle,
                    subframe: sf,
                }),
                None => owner[sf] = Some(vehicle),
            }
        }
        out
    }

    pub fn validate(&self, grid: &ResourceGrid) -> Result<()> {
        let v = self.violations(grid);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConstraintViolation(
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            ))
        }
    }

    /// Sum of `rates` over the assigned edges, in vehicle order.
    pub fn sum_rate(&self, rates: &RateMatrix) -> f64 {
        self.subchannels
            .iter()
            .enumerate()
            .map(|(v, &sc)| rates.get(v, sc))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveStats {
    pub sum_rate_decision: f64,
    pub sum_rate_truth: f64,
    #[serde(serialize_with = "duration_ms")]
    pub runtime: Duration,
}

fn duration_ms<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub stats: SolveStats,
    /// Truth rate of each real vehicle, in vehicle order.
    pub vehicle_rates: Vec<f64>,
}

fn check_rates(rates: &RateMatrix, grid: &ResourceGrid) -> Result<()> {
    if rates.values().cols() != grid.total_subchannels() {
        return Err(Error::Shape {
            expected: format!("{} subchannel columns", grid.total_subchannels()),
            found: format!("{}", rates.values().cols()),
        });
    }
    if rates.n_vehicles() > grid.l() {
        return Err(Error::Infeasible(format!(
            "{} vehicles cannot be placed in {} subframes",
            rates.n_vehicles(),
            grid.l()
        )));
    }
    Ok(())
}

/// Maximum-weight perfect matching on the compressed weights; returns the
/// subframe of each vehicle.
pub fn solve_proposed(reduced: &ReducedProblem) -> Result<Vec<usize>> {
    let d = reduced.weights();
    if let Some(w) = d.as_slice().iter().find(|w| !w.is_finite()) {
        return Err(Error::NonFinite(format!("reduced weight {w}")));
    }
    Ok(hungarian::max_weight_assignment(d))
}

/// Full proposed pipeline: pad, compress, match, expand.
///
/// Fewer than `L` vehicles are padded with zero-weight rows, which shifts
/// every perfect matching by the same amount and leaves the real vehicles'
/// optimum untouched.
pub fn solve_proposed_rates(decision: &RateMatrix, grid: &ResourceGrid) -> Result<Assignment> {
    check_rates(decision, grid)?;
    let (k, l) = (grid.k(), grid.l());
    let n = decision.n_vehicles();
    let mut cost = decision.as_cost_vector().to_vec();
    cost.resize(k * l * l, 0.0);
    let reduced = compress(&cost, k, l, None)?;
    let subframes = solve_proposed(&reduced)?;
    let full = expand_solution(
        &subframes,
        &reduced,
        decision.cluster_id(),
        Method::Proposed,
    )?;
    Ok(full.truncated(n))
}

pub fn solve_greedy(decision: &RateMatrix, grid: &ResourceGrid) -> Result<Assignment> {
    check_rates(decision, grid)?;
    let mut claimed = vec![false; grid.l()];
    let mut subchannels = Vec::with_capacity(decision.n_vehicles());
    for row in decision.values().iter_rows() {
        let mut best: Option<(usize, f64)> = None;
        for (sc, &rate) in row.iter().enumerate() {
            if claimed[sc / grid.k()] {
                continue;
            }
            if best.is_none_or(|(_, r)| rate > r) {
                best = Some((sc, rate));
            }
        }
        let (sc, _) = best.expect("a free subframe exists while N <= L");
        claimed[sc / grid.k()] = true;
        subchannels.push(sc);
    }
    Ok(Assignment::new(
        decision.cluster_id(),
        subchannels,
        Method::Greedy,
    ))
}

/// Uniform random injection of vehicles into subframes, then a uniform slot
/// within each chosen subframe.
pub fn solve_random<R: Rng + ?Sized>(
    grid: &ResourceGrid,
    n_vehicles: usize,
    cluster_id: usize,
    rng: &mut R,
) -> Result<Assignment> {
    if n_vehicles > grid.l() {
        return Err(Error::Infeasible(format!(
            "{n_vehicles} vehicles cannot be placed in {} subframes",
            grid.l()
        )));
    }
    let mut subframes: Vec<usize> = (0..grid.l()).collect();
    let (chosen, _) = subframes.partial_shuffle(rng, n_vehicles);
    let subchannels = chosen
        .iter()
        .map(|&sf| sf * grid.k() + rng.random_range(0..grid.k()))
        .collect();
    Ok(Assignment::new(cluster_id, subchannels, Method::Random))
}

/// Exhaustive search over subframe injections and in-subframe slots.
/// Returns the first optimum in lexicographic (vehicle, subchannel) order.
pub fn solve_oracle(decision: &RateMatrix, grid: &ResourceGrid) -> Result<Assignment> {
    if grid.l() > ORACLE_MAX_L || grid.k() > ORACLE_MAX_K {
        return Err(Error::Capacity(format!(
            "oracle limited to L <= {ORACLE_MAX_L}, K <= {ORACLE_MAX_K} (got L={}, K={})",
            grid.l(),
            grid.k()
        )));
    }
    check_rates(decision, grid)?;

    struct Search<'a> {
        rates: &'a Matrix<f64>,
        k: usize,
        used: Vec<bool>,
        current: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn descend(&mut self, vehicle: usize, partial: f64) {
            if vehicle == self.rates.rows() {
                if self.best.as_ref().is_none_or(|(b, _)| partial > *b) {
                    self.best = Some((partial, self.current.clone()));
                }
                return;
            }
            for sf in 0..self.used.len() {
                if self.used[sf] {
                    continue;
                }
                self.used[sf] = true;
                for slot in 0..self.k {
                    let sc = sf * self.k + slot;
                    self.current.push(sc);
                    self.descend(vehicle + 1, partial + self.rates[(vehicle, sc)]);
                    self.current.pop();
                }
                self.used[sf] = false;
            }
        }
    }

    let mut search = Search {
        rates: decision.values(),
        k: grid.k(),
        used: vec![false; grid.l()],
        current: Vec::with_capacity(decision.n_vehicles()),
        best: None,
    };
    // -0.0 is the additive identity; it keeps sums bit-equal to `Iterator::sum`.
    search.descend(0, -0.0);
    let (_, subchannels) = search.best.expect("at least one feasible assignment");
    Ok(Assignment::new(
        decision.cluster_id(),
        subchannels,
        Method::Oracle,
    ))
}

/// Dispatches to the solver for `method`. `rng` is only used by `random`.
pub fn solve<R: Rng + ?Sized>(
    method: Method,
    decision: &RateMatrix,
    grid: &ResourceGrid,
    rng: &mut R,
) -> Result<Assignment> {
    match method {
        Method::Proposed => solve_proposed_rates(decision, grid),
        Method::Greedy => solve_greedy(decision, grid),
        Method::Random => {
            check_rates(decision, grid)?;
            solve_random(grid, decision.n_vehicles(), decision.cluster_id(), rng)
        }
        Method::Oracle => solve_oracle(decision, grid),
    }
}

/// Scores an assignment, skipping dummy vehicles.
pub fn evaluate(
    assignment: &Assignment,
    decision: &RateMatrix,
    truth: &RateMatrix,
    mask: &DummyMask,
    runtime: Duration,
) -> Result<Evaluation> {
    if assignment.n_vehicles() != mask.n_total()
        || decision.n_vehicles() != mask.n_total()
        || truth.n_vehicles() != mask.n_total()
    {
        return Err(Error::Shape {
            expected: format!("{} vehicles everywhere", mask.n_total()),
            found: format!(
                "assignment {}, decision {}, truth {}",
                assignment.n_vehicles(),
                decision.n_vehicles(),
                truth.n_vehicles()
            ),
        });
    }
    let real = assignment.truncated(mask.n_real());
    let vehicle_rates: Vec<f64> = real
        .subchannels()
        .iter()
        .enumerate()
        .map(|(v, &sc)| truth.get(v, sc))
        .collect();
    Ok(Evaluation {
        stats: SolveStats {
            sum_rate_decision: real.sum_rate(decision),
            sum_rate_truth: vehicle_rates.iter().sum(),
            runtime,
        },
        vehicle_rates,
    })
}
