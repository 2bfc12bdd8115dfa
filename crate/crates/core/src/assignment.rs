//! Constrained matching problem and its macro-vertex reduction.
//!
//! The full problem for one (padded) cluster has `M = K L^2` binary
//! variables `x[i * KL + k]`, one per (vehicle, subchannel) edge, subject to
//!
//! ```text
//! ([I_L ⊗ 1_{1xL} ; 1_{1xL} ⊗ I_L] ⊗ 1_{1xK}) x = 1
//! ```
//!
//! i.e. each vehicle takes one subchannel and each subframe hosts one
//! vehicle. Because at most one slot of a subframe can be active per
//! vehicle, the objective collapses onto per-(vehicle, subframe) block
//! maxima, leaving an `L x L` assignment problem over macro-vertices.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::solvers::{Assignment, Method};

/// Largest `L` for which the dense constraint matrix is materialized.
pub const DEFAULT_DENSE_CAP_L: usize = 64;

pub type BinaryMatrix = Matrix<u8>;

pub fn identity(n: usize) -> BinaryMatrix {
    let mut m = Matrix::filled(n, n, 0u8);
    for i in 0..n {
        m[(i, i)] = 1;
    }
    m
}

pub fn ones(rows: usize, cols: usize) -> BinaryMatrix {
    Matrix::filled(rows, cols, 1u8)
}

/// Kronecker (tensor) product.
pub fn kron<T>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T>
where
    T: Copy + Default + std::ops::Mul<Output = T>,
{
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    let mut out = Matrix::filled(rows, cols, T::default());
    for ai in 0..a.rows() {
        for aj in 0..a.cols() {
            let s = a[(ai, aj)];
            for bi in 0..b.rows() {
                for bj in 0..b.cols() {
                    out[(ai * b.rows() + bi, aj * b.cols() + bj)] = s * b[(bi, bj)];
                }
            }
        }
    }
    out
}

fn vstack<T: Clone>(top: &Matrix<T>, bottom: &Matrix<T>) -> Matrix<T> {
    assert_eq!(top.cols(), bottom.cols());
    let mut data = top.as_slice().to_vec();
    data.extend_from_slice(bottom.as_slice());
    Matrix::from_vec(top.rows() + bottom.rows(), top.cols(), data).expect("stacked shape")
}

/// `2L x KL^2` constraint matrix, refusing `L` above [`DEFAULT_DENSE_CAP_L`].
pub fn build_constraint_matrix(k: usize, l: usize) -> Result<BinaryMatrix> {
    build_constraint_matrix_capped(k, l, DEFAULT_DENSE_CAP_L)
}

pub fn build_constraint_matrix_capped(k: usize, l: usize, cap_l: usize) -> Result<BinaryMatrix> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidParameter(format!(
            "K={k}, L={l} must be positive"
        )));
    }
    if l > cap_l {
        return Err(Error::Capacity(format!(
            "dense constraint matrix requested for L={l}, cap is {cap_l}"
        )));
    }
    let cols = l
        .checked_mul(l)
        .and_then(|v| v.checked_mul(k))
        .ok_or_else(|| Error::Capacity(format!("K L^2 overflows for K={k}, L={l}")))?;
    cols.checked_mul(2 * l)
        .ok_or_else(|| Error::Capacity(format!("2L x KL^2 overflows for K={k}, L={l}")))?;

    let per_vehicle = kron(&identity(l), &ones(1, l));
    let per_subframe = kron(&ones(1, l), &identity(l));
    Ok(kron(&vstack(&per_vehicle, &per_subframe), &ones(1, k)))
}

/// Uncompressed problem over all `K L^2` (vehicle, subchannel) edges.
#[derive(Debug, Clone, PartialEq)]
pub struct FullProblem {
    k: usize,
    l: usize,
    cost: Vec<f64>,
}

impl FullProblem {
    pub fn new(cost: Vec<f64>, k: usize, l: usize) -> Result<Self> {
        check_cost(&cost, k, l)?;
        Ok(FullProblem { k, l, cost })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn cost(&self) -> &[f64] {
        &self.cost
    }

    pub fn constraint_matrix(&self) -> Result<BinaryMatrix> {
        build_constraint_matrix(self.k, self.l)
    }

    /// `c^T x`.
    pub fn objective(&self, x: &[u8]) -> f64 {
        self.cost
            .iter()
            .zip(x)
            .filter(|(_, &xi)| xi != 0)
            .map(|(c, _)| *c)
            .sum()
    }
}

fn check_cost(cost: &[f64], k: usize, l: usize) -> Result<()> {
    if k == 0 || l == 0 {
        return Err(Error::InvalidParameter(format!(
            "K={k}, L={l} must be positive"
        )));
    }
    let m = k * l * l;
    if cost.len() != m {
        return Err(Error::Shape {
            expected: format!("K L^2 = {m} costs"),
            found: format!("{}", cost.len()),
        });
    }
    if let Some(i) = cost.iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFinite(format!("cost entry {i} = {}", cost[i])));
    }
    Ok(())
}

/// `A x` for a dense binary matrix.
pub fn apply(a: &BinaryMatrix, x: &[u8]) -> Vec<u32> {
    a.iter_rows()
        .map(|row| row.iter().zip(x).map(|(&a, &x)| (a & x) as u32).sum())
        .collect()
}

/// Macro-vertex compressed weights: `d[i][l]` is the best weight vehicle `i`
/// can get inside subframe `l`, attained at slot `argmax[i][l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedProblem {
    k: usize,
    d: Matrix<f64>,
    argmax: Matrix<usize>,
}

impl ReducedProblem {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.d.rows()
    }

    pub fn weights(&self) -> &Matrix<f64> {
        &self.d
    }

    pub fn argmax(&self) -> &Matrix<usize> {
        &self.argmax
    }
}

/// Compresses a vehicle-major cost vector of length `K L^2`.
///
/// With `beta = None` each block is reduced to its exact maximum. A finite
/// `beta` uses the log-sum-exp relaxation `(1/beta) ln sum_k exp(beta c)`,
/// which overestimates the maximum by at most `ln(K) / beta`. The argmax is
/// always exact, lowest slot on ties.
pub fn compress(cost: &[f64], k: usize, l: usize, beta: Option<f64>) -> Result<ReducedProblem> {
    check_cost(cost, k, l)?;
    if let Some(b) = beta {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {b}"
            )));
        }
    }
    let mut d = Matrix::filled(l, l, 0.0);
    let mut argmax = Matrix::filled(l, l, 0usize);
    for (block_idx, block) in cost.chunks_exact(k).enumerate() {
        let (i, sf) = (block_idx / l, block_idx % l);
        let (slot, max) =
            block
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (s, c)| {
                    if c > best.1 {
                        (s, c)
                    } else {
                        best
                    }
                });
        d[(i, sf)] = match beta {
            None => max,
            Some(b) => {
                max + block
                    .iter()
                    .map(|c| (b * (c - max)).exp())
                    .sum::<f64>()
                    .ln()
                    / b
            }
        };
        argmax[(i, sf)] = slot;
    }
    Ok(ReducedProblem { k, d, argmax })
}

/// Maps a vehicle -> subframe bijection back onto global subchannels.
pub fn expand_solution(
    subframes: &[usize],
    reduced: &ReducedProblem,
    cluster_id: usize,
    method: Method,
) -> Result<Assignment> {
    let l = reduced.l();
    if subframes.len() != l {
        return Err(Error::ConstraintViolation(format!(
            "expected a subframe for each of {l} vehicles, got {}",
            subframes.len()
        )));
    }
    let mut taken = vec![None; l];
    for (v, &sf) in subframes.iter().enumerate() {
        if sf >= l {
            return Err(Error::ConstraintViolation(format!(
                "vehicle {v} mapped to subframe {sf} of {l}"
            )));
        }
        if let Some(other) = taken[sf].replace(v) {
            return Err(Error::ConstraintViolation(format!(
                "vehicles {other} and {v} share subframe {sf}"
            )));
        }
    }
    let subchannels = subframes
        .iter()
        .enumerate()
        .map(|(v, &sf)| sf * reduced.k + reduced.argmax[(v, sf)])
        .collect();
    Ok(Assignment::new(cluster_id, subchannels, method))
}

/// Binary solution vector of a square assignment (`L` vehicles).
pub fn solution_vector(assignment: &Assignment, k: usize, l: usize) -> Result<Vec<u8>> {
    let pairs = assignment.subchannels();
    if pairs.len() != l {
        return Err(Error::Shape {
            expected: format!("{l} vehicles"),
            found: format!("{}", pairs.len()),
        });
    }
    let kl = k * l;
    let mut x = vec![0u8; kl * l];
    for (v, &sc) in pairs.iter().enumerate() {
        if sc >= kl {
            return Err(Error::Range {
                index: sc,
                limit: kl,
            });
        }
        x[v * kl + sc] = 1;
    }
    Ok(x)
}
