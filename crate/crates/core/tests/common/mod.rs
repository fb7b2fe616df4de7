//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's linear algebra or LP code.
#![allow(dead_code)]

use ccsg_core::model::PlayerModel;

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (k, &aik) in a[i].iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// `pi_0 P^(2^log2_steps)` by repeated squaring, starting from uniform.
pub fn power_oracle(p: &[Vec<f64>], log2_steps: u32) -> Vec<f64> {
    let n = p.len();
    let mut q = p.to_vec();
    for _ in 0..log2_steps {
        q = mat_mul(&q, &q);
        // Keep rows stochastic against rounding drift.
        for row in &mut q {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
    }
    let start = vec![1.0 / n as f64; n];
    (0..n).map(|j| (0..n).map(|i| start[i] * q[i][j]).sum()).collect()
}

/// Stationary distribution by Gaussian elimination with partial pivoting on
/// `pi (P - I) = 0` with the last equation replaced by `sum pi = 1`.
pub fn gauss_stationary(p: &[Vec<f64>]) -> Vec<f64> {
    let n = p.len();
    // Row r of the system is column r of (P - I)^T.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|r| {
            let mut row: Vec<f64> = (0..n).map(|c| p[c][r] - if c == r { 1.0 } else { 0.0 }).collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        assert!(d.abs() > 1e-14, "singular system in oracle");
        for r in 0..n {
            if r != col {
                let f = a[r][col] / d;
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|r| a[r][n] / a[r][r]).collect()
}

pub fn induced(player: &PlayerModel, dist: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = player.num_states();
    (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            for (a, &w) in dist[x].iter().enumerate() {
                for (y, &p) in player.transitions[x][a].iter().enumerate() {
                    row[y] += w * p;
                }
            }
            row
        })
        .collect()
}

/// Occupation measure in state-major, action-minor order.
pub fn oracle_occupation(player: &PlayerModel, dist: &[Vec<f64>]) -> Vec<f64> {
    let pi = gauss_stationary(&induced(player, dist));
    let mut z = Vec::new();
    for (x, d) in dist.iter().enumerate() {
        z.extend(d.iter().map(|w| pi[x] * w));
    }
    z
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Every deterministic policy as a per-state action choice.
pub fn deterministic_policies(player: &PlayerModel) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for x in 0..player.num_states() {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..player.num_actions(x)).map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn one_hot(player: &PlayerModel, choice: &[usize]) -> Vec<Vec<f64>> {
    choice
        .iter()
        .enumerate()
        .map(|(x, &a)| {
            let mut d = vec![0.0; player.num_actions(x)];
            d[a] = 1.0;
            d
        })
        .collect()
}

/// Points of the probability simplex over `k` outcomes with coordinates in
/// multiples of `1/steps`, as integer compositions of `steps`.
pub fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return vec![vec![steps]];
    }
    (0..=steps)
        .flat_map(|first| {
            simplex_grid(k - 1, steps - first).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// Number of closed communicating classes of a stochastic matrix, from the
/// transitive closure of its support graph.
pub fn closed_class_count(p: &[Vec<f64>]) -> usize {
    let n = p.len();
    let mut reach: Vec<Vec<bool>> = (0..n).map(|x| (0..n).map(|y| x == y || p[x][y] > 0.0).collect()).collect();
    for k in 0..n {
        for x in 0..n {
            if reach[x][k] {
                for y in 0..n {
                    if reach[k][y] {
                        reach[x][y] = true;
                    }
                }
            }
        }
    }
    // A state is recurrent iff everything it reaches reaches it back; count
    // classes by their smallest member.
    (0..n)
        .filter(|&x| {
            (0..n).all(|y| !reach[x][y] || reach[y][x]) && (0..x).all(|y| !(reach[x][y] && reach[y][x]))
        })
        .count()
}

/// Brute-force marginal cost: sum over every global tuple, weighting each
/// opponent's pair by its occupation measure.
pub fn brute_marginal(
    counts: &[usize],
    table: &[f64],
    player: usize,
    occupations: &[Vec<f64>],
) -> Vec<f64> {
    let total: usize = counts.iter().product();
    let mut out = vec![0.0; counts[player]];
    for g in 0..total {
        let mut rest = g;
        let mut ks = vec![0; counts.len()];
        for l in (0..counts.len()).rev() {
            ks[l] = rest % counts[l];
            rest /= counts[l];
        }
        let w: f64 = (0..counts.len())
            .filter(|&l| l != player)
            .map(|l| occupations[l][ks[l]])
            .product();
        out[ks[player]] += w * table[g];
    }
    out
}
