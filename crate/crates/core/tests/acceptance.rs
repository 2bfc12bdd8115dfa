//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use v2x_sps::assignment::{apply, build_constraint_matrix, compress, solution_vector};
use v2x_sps::config::{QuantConfig, SweepConfig};
use v2x_sps::experiment::{run_cells, run_experiment, CellResult, SeedSource};
use v2x_sps::metrics::sweep_density;
use v2x_sps::scenario::{generate_sinr, pad_to_square};
use v2x_sps::sideinfo::{build_rate_matrices, rate_from_sinr};
use v2x_sps::solvers::{solve, solve_oracle, solve_proposed_rates};
use v2x_sps::{
    Cluster, ExperimentConfig, Method, QuantizerSpec, RateMatrix, ResourceGrid, ScenarioModel,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_rates<R: Rng>(rng: &mut R, n: usize, grid: &ResourceGrid, ties: bool) -> RateMatrix {
    let rows = (0..n)
        .map(|_| {
            (0..grid.total_subchannels())
                .map(|_| {
                    if ties {
                        rng.random_range(0..4) as f64
                    } else {
                        rate_from_sinr(grid.b_hz(), rng.random_range(-15.0..35.0))
                    }
                })
                .collect()
        })
        .collect();
    RateMatrix::from_rows(0, rows).unwrap()
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// 1. compress -> Kuhn-Munkres -> expand matches exhaustive search.
fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc1);
    let instances = 1200;
    let mut exact = 0;
    for t in 0..instances {
        let l = rng.random_range(1..=6);
        let k = rng.random_range(1..=3);
        let n = rng.random_range(1..=l);
        let grid = ResourceGrid::with_dims(k, l).unwrap();
        let rates = random_rates(&mut rng, n, &grid, t % 5 == 0);
        let proposed = solve_proposed_rates(&rates, &grid).unwrap();
        let oracle = solve_oracle(&rates, &grid).unwrap();
        proposed.validate(&grid).unwrap();
        let (p, o) = (proposed.sum_rate(&rates), oracle.sum_rate(&rates));
        if p == o {
            exact += 1;
        } else if !rel_eq(p, o, 1e-12) {
            return outcome(
                false,
                format!("instance {t} (K={k}, L={l}, N={n}): {p} vs oracle {o}"),
            );
        }
    }
    let elapsed = start.elapsed();
    outcome(
        elapsed < Duration::from_secs(30),
        format!(
            "{instances} instances, {exact} bit-equal, rest within 1e-12; {elapsed:.2?} (< 30 s)"
        ),
    )
}

/// 2. Every solver's solution satisfies A x = 1 on the padded square problem.
fn constraint_matrix_verification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc2);
    let mut checked = 0;
    for l in 1..=4 {
        for k in 1..=3 {
            let grid = ResourceGrid::with_dims(k, l).unwrap();
            let a = build_constraint_matrix(k, l).unwrap();
            for trial in 0..20 {
                let n = 1 + trial % l;
                let cluster = Cluster::with_size(0, n).unwrap();
                let sinr = generate_sinr(
                    &ScenarioModel::uniform(-15.0, 35.0, rng.random()),
                    &cluster,
                    &grid,
                )
                .unwrap();
                let (padded, _) = pad_to_square(&sinr, &grid, -15.0).unwrap();
                let (decision, _) = build_rate_matrices(&padded, None, grid.b_hz()).unwrap();
                for method in Method::ALL {
                    let assignment = solve(method, &decision, &grid, &mut rng).unwrap();
                    let x = solution_vector(&assignment, k, l).unwrap();
                    let ax = apply(&a, &x);
                    if ax.iter().any(|&v| v != 1) {
                        return outcome(false, format!("{method} K={k} L={l}: A x = {ax:?}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    outcome(
        true,
        format!("{checked} solver outputs satisfy A x = 1 exactly (L <= 4, K <= 3)"),
    )
}

/// 3. Log-sum-exp compression at beta = 1e3 stays within ln(K)/beta of block maxima.
fn compression_identity() -> Outcome {
    let beta = 1e3;
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc3);
    let mut worst_gap: f64 = 0.0;
    for t in 0..100 {
        let k = rng.random_range(1..=7);
        let l = rng.random_range(1..=8);
        let cost: Vec<f64> = (0..k * l * l)
            .map(|_| rate_from_sinr(1.26e6, rng.random_range(-15.0..35.0)) / 1e6)
            .collect();
        let soft = compress(&cost, k, l, Some(beta)).unwrap();
        let bound = (k as f64).ln() / beta;
        for i in 0..l {
            for sf in 0..l {
                let block = &cost[i * k * l + sf * k..i * k * l + (sf + 1) * k];
                let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let gap = soft.weights()[(i, sf)] - max;
                worst_gap = worst_gap.max(gap / bound.max(f64::MIN_POSITIVE));
                if gap < -1e-12 || gap > bound + 1e-12 {
                    return outcome(false, format!("vector {t}: gap {gap} outside [0, {bound}]"));
                }
            }
        }
    }
    outcome(
        true,
        format!(
            "100 vectors; largest gap {:.3} of the ln(K)/beta bound",
            worst_gap
        ),
    )
}

/// 4. Quantizer examples are bit-exact; idempotence and monotonicity over 1e5 inputs.
fn quantizer_bit_exactness() -> Outcome {
    let q = |b| QuantizerSpec::new(b, -15.0, 35.0).unwrap();
    let examples = [
        (2u8, 0.0, 1usize, 3.75),
        (1, 35.0, 1, 22.5),
        (3, -40.0, 0, -11.875),
    ];
    for (bits, x, idx, recon) in examples {
        if q(bits).quantize(x) != (idx, recon) {
            return outcome(
                false,
                format!("b={bits}, x={x}: got {:?}", q(bits).quantize(x)),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc4);
    for _ in 0..100_000 {
        let quant = q(rng.random_range(1..=8));
        let a = rng.random_range(-60.0..80.0);
        let b = rng.random_range(-60.0..80.0);
        let (ia, ra) = quant.quantize(a);
        if quant.quantize(ra) != (ia, ra) {
            return outcome(false, format!("not idempotent at {a}"));
        }
        let (ib, rb) = quant.quantize(b);
        if (a <= b) && !(ia <= ib && ra <= rb) || (b <= a) && !(ib <= ia && rb <= ra) {
            return outcome(false, format!("not monotone at ({a}, {b})"));
        }
    }
    outcome(
        true,
        "3 examples exact; 1e5 idempotence/monotonicity checks",
    )
}

fn full_scale(bits: Vec<u8>) -> ExperimentConfig {
    ExperimentConfig {
        grid: ResourceGrid::new(7, 100, 1.0, 1.26e6).unwrap(),
        scenario: ScenarioModel::uniform(-15.0, 35.0, 0),
        quant: QuantConfig {
            bits,
            lo_db: -15.0,
            hi_db: 35.0,
        },
        cluster_sizes: vec![100],
        methods: vec![Method::Proposed, Method::Greedy, Method::Random],
        repetitions: 100,
        master_seed: Some(20_190_101),
        ..Default::default()
    }
}

fn per_seed(
    cells: &[CellResult],
    method: Method,
    bits: u8,
    f: impl Fn(&CellResult) -> f64,
) -> Vec<f64> {
    let mut v: Vec<(usize, f64)> = cells
        .iter()
        .filter(|c| c.method == method && c.bits == bits)
        .map(|c| (c.repetition, f(c)))
        .collect();
    v.sort_by_key(|(r, _)| *r);
    v.into_iter().map(|(_, x)| x).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn truth_sum(c: &CellResult) -> f64 {
    c.evaluation.stats.sum_rate_truth
}

fn worst_rate(c: &CellResult) -> f64 {
    c.evaluation
        .vehicle_rates
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// 5. Dominance at K=7, L=100, N=100 over 100 seeds.
fn dominance_trends() -> Outcome {
    let start = Instant::now();
    let cells = run_cells(&full_scale(vec![0, 2])).unwrap();
    let elapsed = start.elapsed();

    let proposed = per_seed(&cells, Method::Proposed, 0, truth_sum);
    let greedy = per_seed(&cells, Method::Greedy, 0, truth_sum);
    let random = per_seed(&cells, Method::Random, 0, truth_sum);
    let per_seed_ok = proposed.iter().zip(&greedy).filter(|(p, g)| p >= g).count();
    let pw = mean(&per_seed(&cells, Method::Proposed, 2, worst_rate));
    let gw = mean(&per_seed(&cells, Method::Greedy, 2, worst_rate));

    let pass = per_seed_ok == proposed.len()
        && mean(&greedy) >= mean(&random)
        && pw > gw
        && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "proposed>=greedy on {per_seed_ok}/{} seeds; mean sum {:.1} / {:.1} / {:.1} Mbps (P/G/R); \
             2-bit mean worst {:.3} vs {:.3} Mbps (P/G); {elapsed:.2?} (< 120 s)",
            proposed.len(),
            mean(&proposed) / 1e6,
            mean(&greedy) / 1e6,
            mean(&random) / 1e6,
            pw / 1e6,
            gw / 1e6
        ),
    )
}

/// 6. Proposed sum-rate non-decreasing in bits; proposed degrades less than greedy at 2 bits.
fn quantization_monotonicity() -> Outcome {
    let cells = run_cells(&full_scale(vec![0, 1, 2, 3, 4, 8])).unwrap();
    let m = |method, bits| mean(&per_seed(&cells, method, bits, truth_sum));

    let ladder: Vec<f64> = [1u8, 2, 3, 4, 8]
        .iter()
        .map(|&b| m(Method::Proposed, b))
        .collect();
    let monotone = ladder.windows(2).all(|w| w[1] >= w[0] * (1.0 - 0.005));
    let p_loss = m(Method::Proposed, 0) - m(Method::Proposed, 2);
    let g_loss = m(Method::Greedy, 0) - m(Method::Greedy, 2);

    outcome(
        monotone && p_loss < g_loss,
        format!(
            "proposed mean sum (1,2,3,4,8 bits) = {:?} Mbps, monotone within 0.5%: {monotone}; \
             ideal->2-bit loss {:.2} (P) vs {:.2} (G) Mbps",
            ladder
                .iter()
                .map(|v| (v / 1e4).round() / 1e2)
                .collect::<Vec<_>>(),
            p_loss / 1e6,
            g_loss / 1e6
        ),
    )
}

/// 7. Greedy's worst-rate collapses faster than proposed's from N=10 to N=100.
fn density_sweep_shape() -> Outcome {
    let cfg = ExperimentConfig {
        methods: vec![Method::Proposed, Method::Greedy],
        sweep: SweepConfig {
            n_vehicles: vec![10, 100],
            bits: vec![2, 3, 4],
            repetitions: Some(100),
        },
        ..full_scale(vec![2, 3, 4])
    };
    let rows = sweep_density(&cfg, &[10, 100], &[2, 3, 4], 100).unwrap();
    let worst = |method, bits, n| {
        rows.iter()
            .find(|r| r.method == method && r.bits == bits && r.n_vehicles == n)
            .unwrap()
            .worst_rate
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for bits in [2u8, 3, 4] {
        let drop = |m| 1.0 - worst(m, bits, 100) / worst(m, bits, 10);
        let (p, g) = (drop(Method::Proposed), drop(Method::Greedy));
        pass &= g > p;
        detail.push(format!(
            "{bits} bits: drop {:.1}% (P) vs {:.1}% (G)",
            p * 100.0,
            g * 100.0
        ));
    }
    outcome(pass, detail.join("; "))
}

/// 8. Two runs with the same config and seed write byte-identical CSVs.
fn determinism() -> Outcome {
    let base = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let cfg = ExperimentConfig {
            repetitions: 10,
            output_dir: base.path().join(name),
            ..full_scale(vec![0, 2, 3, 4])
        };
        run_experiment(&cfg, SeedSource::Config).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    let csvs: Vec<&Path> = a
        .files
        .iter()
        .map(|p| p.as_path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    for rel in &csvs {
        let x = std::fs::read(a.dir.join(rel)).unwrap();
        let y = std::fs::read(b.dir.join(rel)).unwrap();
        if x != y {
            return outcome(false, format!("{} differs between runs", rel.display()));
        }
    }
    outcome(
        csvs.len() >= 14,
        format!("{} CSV artifacts byte-identical", csvs.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        (
            "2 constraint-matrix verification",
            constraint_matrix_verification,
        ),
        ("3 compression identity", compression_identity),
        ("4 quantizer bit-exactness", quantizer_bit_exactness),
        ("5 dominance trends", dominance_trends),
        ("6 quantization monotonicity", quantization_monotonicity),
        ("7 density-sweep shape", density_sweep_shape),
        ("8 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {}", result.detail);
        failed += usize::from(!result.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
