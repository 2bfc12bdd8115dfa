//! Dense Kuhn-Munkres (Hungarian) kernel with row/column potentials,
//! O(n^2 m) for an `n x m` cost matrix with `n <= m`.

use crate::matrix::Matrix;

/// Minimum-cost assignment of every row to a distinct column.
/// Returns `col[row]`.
pub fn min_cost_assignment(cost: &Matrix<f64>) -> Vec<usize> {
    let n = cost.rows();
    let m = cost.cols();
    assert!(n <= m, "more rows ({n}) than columns ({m})");
    if n == 0 {
        return Vec::new();
    }

    // 1-based with a virtual column 0, as in the classic potentials formulation.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];

        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let row = cost.row(i0 - 1);

            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }

            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }

            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![usize::MAX; n];
    for j in 1..=m {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Maximum-weight assignment via `max(w) - w` costs.
pub fn max_weight_assignment(weights: &Matrix<f64>) -> Vec<usize> {
    let top = weights
        .as_slice()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    min_cost_assignment(&weights.map(|&w| top - w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn total(m: &Matrix<f64>, a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| m[(i, j)]).sum()
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn small_min_cost() {
        let costs = Matrix::from_rows(vec![
            vec![4.0, 1.0, 3.0],
            vec![2.0, 0.0, 5.0],
            vec![3.0, 2.0, 2.0],
        ])
        .unwrap();
        let a = min_cost_assignment(&costs);
        assert_eq!(total(&costs, &a), 5.0);
    }

    #[test]
    fn rectangular_uses_distinct_columns() {
        let w =
            Matrix::from_rows(vec![vec![1.0, 9.0, 3.0, 2.0], vec![8.0, 9.0, 1.0, 0.0]]).unwrap();
        let a = max_weight_assignment(&w);
        assert_eq!(a, vec![1, 0]);
    }

    #[test]
    fn matches_enumeration_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            let perms = permutations(n);
            for _ in 0..50 {
                let w = Matrix::from_vec(
                    n,
                    n,
                    (0..n * n).map(|_| rng.random_range(-5.0..5.0)).collect(),
                )
                .unwrap();
                let best = perms
                    .iter()
                    .map(|p| total(&w, p))
                    .fold(f64::NEG_INFINITY, f64::max);
                let got = total(&w, &max_weight_assignment(&w));
                assert!((got - best).abs() <= 1e-9, "n={n}: {got} vs {best}");
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn invariant_to_row_and_column_shifts(
                n in 1usize..=7,
                cells in prop::collection::vec(0i64..50, 49),
                row_shift in prop::collection::vec(-20i64..20, 7),
                col_shift in prop::collection::vec(-20i64..20, 7),
            ) {
                let base = Matrix::from_vec(n, n, (0..n * n).map(|i| cells[i] as f64).collect()).unwrap();
                let shifted = Matrix::from_vec(
                    n,
                    n,
                    (0..n * n)
                        .map(|i| (cells[i] + row_shift[i / n] + col_shift[i % n]) as f64)
                        .collect(),
                )
                .unwrap();
                let pb = min_cost_assignment(&base);
                let ps = min_cost_assignment(&shifted);
                let offset: i64 = row_shift[..n].iter().sum::<i64>() + col_shift[..n].iter().sum::<i64>();
                prop_assert_eq!(total(&base, &pb) + offset as f64, total(&shifted, &ps));
                prop_assert_eq!(total(&base, &ps), total(&base, &pb));
            }
        }
    }
}
