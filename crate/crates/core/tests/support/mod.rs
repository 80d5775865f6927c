//! Brute-force reference implementations and random instance generators.
//!
//! Everything here works on dense arrays and plain strings so that it shares
//! no code path with the library under test.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Relative tolerance used when comparing against the references.
pub const TOL: f64 = 1e-12;

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * b.abs().max(1.0)
}

/// A dense count table with named rows and columns.
#[derive(Debug, Clone)]
pub struct Dense {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl Dense {
    pub fn random(rng: &mut ChaCha8Rng, max_rows: usize, max_cols: usize) -> Self {
        let n_rows = rng.random_range(1..=max_rows);
        let n_cols = rng.random_range(1..=max_cols);
        let density = rng.random_range(0.15..0.9);
        let mut counts = vec![vec![0u64; n_cols]; n_rows];
        for row in counts.iter_mut() {
            for c in row.iter_mut() {
                if rng.random_bool(density) {
                    *c = rng.random_range(1..=60);
                }
            }
        }
        // Every row and column needs at least one cell to appear in a store.
        for (r, row) in counts.iter_mut().enumerate() {
            if row.iter().all(|&c| c == 0) {
                row[r % n_cols] = rng.random_range(1..=60);
            }
        }
        for c in 0..n_cols {
            if counts.iter().all(|row| row[c] == 0) {
                counts[c % n_rows][c] = rng.random_range(1..=60);
            }
        }
        Self {
            rows: (0..n_rows).map(|i| format!("t{i:02}")).collect(),
            cols: (0..n_cols).map(|i| format!("c{i:02}")).collect(),
            counts,
        }
    }

    pub fn pairs(&self) -> Vec<(String, String, u64)> {
        let mut out = Vec::new();
        for (r, row) in self.counts.iter().enumerate() {
            for (c, &n) in row.iter().enumerate() {
                if n > 0 {
                    out.push((self.rows[r].clone(), self.cols[c].clone(), n));
                }
            }
        }
        out
    }

    fn marginals(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let rows: Vec<f64> = self.counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
        let cols: Vec<f64> =
            (0..self.cols.len()).map(|c| self.counts.iter().map(|r| r[c]).sum::<u64>() as f64).collect();
        let total = rows.iter().sum();
        (rows, cols, total)
    }

    /// `max(log(P(w,c) / (P(w) P(c))), 0)` in the given base, 0 for empty cells.
    pub fn ppmi(&self, base: f64) -> Vec<Vec<f64>> {
        let (rows, cols, total) = self.marginals();
        self.counts
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .map(|(c, &n)| {
                        if n == 0 {
                            return 0.0;
                        }
                        let p_wc = n as f64 / total;
                        let p_w = rows[r] / total;
                        let p_c = cols[c] / total;
                        (p_wc / (p_w * p_c)).log(base).max(0.0)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn plmi(&self) -> Vec<Vec<f64>> {
        let ppmi = self.ppmi(2.0);
        ppmi.iter()
            .zip(&self.counts)
            .map(|(p, n)| p.iter().zip(n).map(|(p, &n)| p * n as f64).collect())
            .collect()
    }
}

/// A dense `(verb, relation, filler)` count cube.
#[derive(Debug, Clone)]
pub struct Cube {
    pub verbs: Vec<String>,
    pub relations: Vec<String>,
    pub fillers: Vec<String>,
    pub counts: Vec<Vec<Vec<u64>>>,
}

impl Cube {
    pub fn random(rng: &mut ChaCha8Rng, max_verbs: usize, max_relations: usize, max_fillers: usize) -> Self {
        let nv = rng.random_range(1..=max_verbs);
        let nr = rng.random_range(1..=max_relations);
        let nf = rng.random_range(1..=max_fillers);
        let density = rng.random_range(0.1..0.8);
        let mut counts = vec![vec![vec![0u64; nf]; nr]; nv];
        for plane in counts.iter_mut() {
            for row in plane.iter_mut() {
                for c in row.iter_mut() {
                    if rng.random_bool(density) {
                        *c = rng.random_range(1..=40);
                    }
                }
            }
        }
        counts[0][0][0] = counts[0][0][0].max(1);
        Self {
            verbs: (0..nv).map(|i| format!("v{i:02}-v")).collect(),
            relations: (0..nr).map(|i| format!("r{i}")).collect(),
            fillers: (0..nf).map(|i| format!("f{i:02}-n")).collect(),
            counts,
        }
    }

    pub fn triples(&self) -> Vec<(String, String, String, u64)> {
        let mut out = Vec::new();
        for (v, plane) in self.counts.iter().enumerate() {
            for (r, row) in plane.iter().enumerate() {
                for (f, &n) in row.iter().enumerate() {
                    if n > 0 {
                        out.push((self.verbs[v].clone(), self.relations[r].clone(), self.fillers[f].clone(), n));
                    }
                }
            }
        }
        out
    }

    /// `max(log2(O/E) * O, 0)` with `E` from three-way independence.
    pub fn plmi(&self, v: usize, r: usize, f: usize) -> f64 {
        let o = self.counts[v][r][f] as f64;
        if o == 0.0 {
            return 0.0;
        }
        let mut mv = 0.0;
        let mut mr = 0.0;
        let mut mf = 0.0;
        let mut total = 0.0;
        for (vi, plane) in self.counts.iter().enumerate() {
            for (ri, row) in plane.iter().enumerate() {
                for (fi, &n) in row.iter().enumerate() {
                    let n = n as f64;
                    total += n;
                    if vi == v {
                        mv += n;
                    }
                    if ri == r {
                        mr += n;
                    }
                    if fi == f {
                        mf += n;
                    }
                }
            }
        }
        let e = mv * mr * mf / (total * total);
        ((o / e).log2() * o).max(0.0)
    }
}

/// Random weights over context ids `0..max_features`, with frequent ties.
pub fn random_weights(rng: &mut ChaCha8Rng, max_features: u32) -> Vec<(u32, f64)> {
    let n = rng.random_range(0..=max_features);
    let mut ids: Vec<u32> = (0..max_features).collect();
    for i in (1..ids.len()).rev() {
        let j = rng.random_range(0..=i);
        ids.swap(i, j);
    }
    let coarse = rng.random_bool(0.5);
    ids.truncate(n as usize);
    ids.into_iter()
        .map(|id| {
            let w = if coarse { f64::from(rng.random_range(1..=4u32)) } else { rng.random_range(0.01..10.0) };
            (id, w)
        })
        .collect()
}

/// Ranks by descending weight, ties broken by ascending id; rank 1 first.
pub fn reference_ranking(weights: &[(u32, f64)]) -> Vec<u32> {
    let mut sorted = weights.to_vec();
    for i in 0..sorted.len() {
        for j in 0..sorted.len() - 1 - i {
            let (a, b) = (sorted[j], sorted[j + 1]);
            let swap = a.1 < b.1 || (a.1 == b.1 && a.0 > b.0);
            if swap {
                sorted.swap(j, j + 1);
            }
        }
    }
    sorted.into_iter().map(|(id, _)| id).collect()
}

/// Sum over shared top-`n` features of `1 / mean(rank_x, rank_y)`.
pub fn reference_wo(x: &[(u32, f64)], y: &[(u32, f64)], n: usize) -> f64 {
    let rx = reference_ranking(x);
    let ry = reference_ranking(y);
    let mut total = 0.0;
    for (i, a) in rx.iter().take(n).enumerate() {
        for (j, b) in ry.iter().take(n).enumerate() {
            if a == b {
                let mean = ((i + 1) + (j + 1)) as f64 / 2.0;
                total += 1.0 / mean;
            }
        }
    }
    total
}

pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|i| 1.0 / i as f64).sum()
}

pub fn reference_cosine(x: &[(u32, f64)], y: &[(u32, f64)], dim: u32) -> f64 {
    let mut dx = vec![0.0; dim as usize];
    let mut dy = vec![0.0; dim as usize];
    for &(i, w) in x {
        dx[i as usize] += w;
    }
    for &(i, w) in y {
        dy[i as usize] += w;
    }
    let dot: f64 = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    let nx: f64 = dx.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny: f64 = dy.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx * ny)
    }
}

/// Quadratic-time average ranks: 1 + #smaller + #equal-others / 2.
pub fn reference_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let smaller = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64 - 1.0;
            1.0 + smaller + equal / 2.0
        })
        .collect()
}

/// Spearman rho as the Pearson correlation of reference ranks; `None` when
/// either side is constant.
pub fn reference_spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let rx = reference_ranks(xs);
    let ry = reference_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx * vy).sqrt())
    }
}

/// Paired samples of length 2..=30 with optional heavy ties.
pub fn random_paired(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let n = rng.random_range(2..=30);
    let tied = rng.random_bool(0.5);
    let draw = |rng: &mut ChaCha8Rng| {
        if tied {
            f64::from(rng.random_range(0..5u32))
        } else {
            rng.random_range(-100.0..100.0)
        }
    };
    let xs: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    let ys: Vec<f64> = (0..n).map(|_| draw(rng)).collect();
    (xs, ys)
}
