//! Independent reference computations shared by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Geometric};

/// Best simple path from `s` to `d` by exhaustive enumeration over a matrix
/// of truncated probabilities in tenths (0 = no edge). Exact integer
/// comparison of products; ties go to fewer hops, then the lexicographically
/// smallest node sequence. Returns `(path, numerator)` with probability
/// `numerator / 10^(path.len() - 1)`.
pub fn best_simple_path(tenths: &[Vec<u8>], s: usize, d: usize) -> Option<(Vec<usize>, u64)> {
    let n = tenths.len();
    let mut best: Option<(Vec<usize>, u64)> = None;
    let mut path = vec![s];
    let mut used = vec![false; n];
    used[s] = true;
    fn better(a: &(Vec<usize>, u64), b: &(Vec<usize>, u64)) -> bool {
        let (ha, hb) = (a.0.len() as u32 - 1, b.0.len() as u32 - 1);
        // a.1 / 10^ha vs b.1 / 10^hb
        let lhs = a.1 as u128 * 10u128.pow(hb);
        let rhs = b.1 as u128 * 10u128.pow(ha);
        lhs > rhs || (lhs == rhs && (ha < hb || (ha == hb && a.0 < b.0)))
    }
    fn dfs(
        t: &[Vec<u8>],
        d: usize,
        path: &mut Vec<usize>,
        used: &mut [bool],
        num: u64,
        best: &mut Option<(Vec<usize>, u64)>,
    ) {
        let u = *path.last().unwrap();
        if u == d {
            let cand = (path.clone(), num);
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                *best = Some(cand);
            }
            return;
        }
        for v in 0..t.len() {
            if !used[v] && t[u][v] > 0 && v != u {
                used[v] = true;
                path.push(v);
                dfs(t, d, path, used, num * u64::from(t[u][v]), best);
                path.pop();
                used[v] = false;
            }
        }
    }
    dfs(tenths, d, &mut path, &mut used, 1, &mut best);
    best
}

/// Random tenths matrix with `n` nodes and edge density `density`.
pub fn random_tenths<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<Vec<u8>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i != j && rng.random_bool(density) {
                        rng.random_range(1..=9)
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

/// Mean of `sum_i (T0_i + N_i t_i)` with `T0_i ~ U[0, t_i]` and `N_i` the
/// number of failed trips before an encounter of probability `p_i`.
pub fn monte_carlo_delay<R: Rng>(rng: &mut R, hops: &[(f64, f64)], samples: usize) -> f64 {
    let geos: Vec<Geometric> = hops.iter().map(|&(_, p)| Geometric::new(p).unwrap()).collect();
    let mut total = 0.0;
    for _ in 0..samples {
        for (k, &(t, _)) in hops.iter().enumerate() {
            let t0: f64 = rng.random_range(0.0..=t);
            let n = geos[k].sample(rng) as f64;
            total += t0 + n * t;
        }
    }
    total / samples as f64
}
