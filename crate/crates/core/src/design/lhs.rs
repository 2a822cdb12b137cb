use rand::seq::SliceRandom;
use rand::Rng;

use super::sq_dist;

/// Random Latin hypercube: column `l` holds one point in each stratum
/// `[k/n, (k+1)/n)`.
pub fn random_lhs(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = crate::rng::seeded(seed);
    let mut pts = vec![vec![0.0; d]; n];
    let nf = n as f64;
    for l in 0..d {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        for (row, &k) in perm.iter().enumerate() {
            let mut v = (k as f64 + rng.gen::<f64>()) / nf;
            if (v * nf).floor() as usize != k {
                v = (k as f64 + 0.5) / nf;
            }
            pts[row][l] = v;
        }
    }
    pts
}

pub fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            m = m.min(sq_dist(&points[i], &points[j]));
        }
    }
    m.sqrt()
}

fn swap_entries(pts: &mut [Vec<f64>], i: usize, j: usize, l: usize) {
    let tmp = pts[i][l];
    pts[i][l] = pts[j][l];
    pts[j][l] = tmp;
}

/// Maximin Latin hypercube. Starts from [`random_lhs`] with the same seed and
/// hill-climbs by swapping two entries of one column, keeping a swap when the
/// smallest pairwise distance does not shrink.
pub fn initial_lhs(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pts = random_lhs(d, n, seed);
    if n < 3 {
        return pts;
    }
    let mut rng = crate::rng::stream(seed, 1);
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = sq_dist(&pts[i], &pts[j]);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    let mut current = min_pairwise_distance(&pts).powi(2);
    // bounded total work for large designs
    let iterations = (50 * n * d).min(20_000).min(200_000_000 / (n * n)).max(1);
    let mut row_i = vec![0.0; n];
    let mut row_j = vec![0.0; n];
    for _ in 0..iterations {
        let l = rng.gen_range(0..d);
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        swap_entries(&mut pts, i, j, l);
        for k in 0..n {
            row_i[k] = if k == i { 0.0 } else { sq_dist(&pts[i], &pts[k]) };
            row_j[k] = if k == j { 0.0 } else { sq_dist(&pts[j], &pts[k]) };
        }
        let mut m = f64::INFINITY;
        for a in 0..n {
            for b in 0..a {
                let v = if a == i || a == j {
                    if a == i { row_i[b] } else { row_j[b] }
                } else if b == i || b == j {
                    if b == i { row_i[a] } else { row_j[a] }
                } else {
                    dist[a * n + b]
                };
                m = m.min(v);
            }
        }
        if m >= current {
            current = m;
            for k in 0..n {
                dist[i * n + k] = row_i[k];
                dist[k * n + i] = row_i[k];
                dist[j * n + k] = row_j[k];
                dist[k * n + j] = row_j[k];
            }
        } else {
            swap_entries(&mut pts, i, j, l);
        }
    }
    pts
}
