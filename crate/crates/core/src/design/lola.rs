//! LOLA-Voronoi: exploration by Monte-Carlo Voronoi cell volumes,
//! exploitation by the residual of a local linear fit around each point.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{far_enough, sq_dist, DesignProposal, PointScore};
use crate::domain::DesignData;
use crate::{Error, Result};

/// Monte-Carlo test-set size for `n` design points: `100 n` clamped to
/// `[10^4, 10^5]`.
pub fn voronoi_test_size(n: usize) -> usize {
    (100 * n).clamp(10_000, 100_000)
}

/// Index of the nearest design point and its squared distance.
fn nearest(points: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let v = sq_dist(p, x);
        if v < best.1 {
            best = (i, v);
        }
    }
    best
}

struct CellSample {
    volumes: Vec<f64>,
    /// Test point farthest from its owner, per cell.
    farthest: Vec<Option<(Vec<f64>, f64)>>,
}

fn sample_cells(points: &[Vec<f64>], m: usize, seed: u64) -> CellSample {
    let d = points[0].len();
    let n = points.len();
    let mut rng = crate::rng::seeded(seed);
    let mut counts = vec![0usize; n];
    let mut farthest: Vec<Option<(Vec<f64>, f64)>> = vec![None; n];
    let mut x = vec![0.0; d];
    for _ in 0..m {
        x.iter_mut().for_each(|v| *v = rng.gen());
        let (i, dist) = nearest(points, &x);
        counts[i] += 1;
        if farthest[i].as_ref().map_or(true, |(_, best)| dist > *best) {
            farthest[i] = Some((x.clone(), dist));
        }
    }
    CellSample {
        volumes: counts.iter().map(|&c| c as f64 / m as f64).collect(),
        farthest,
    }
}

/// Relative Voronoi cell volumes of `points` estimated with `m` uniform test
/// points. The volumes sum to one.
pub fn voronoi_volumes(points: &[Vec<f64>], m: usize, seed: u64) -> Vec<f64> {
    if points.is_empty() {
        return Vec::new();
    }
    sample_cells(points, m, seed).volumes
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    /// Sum of absolute residuals of the local linear fit, per point.
    pub scores: Vec<f64>,
    /// True where the neighborhood could not support a linear fit.
    pub degenerate: Vec<bool>,
}

/// LOLA nonlinearity of each point: least-squares gradient through the point
/// from its `2d` nearest neighbors, scored by the absolute residuals at the
/// neighbors.
pub fn lola_nonlinearity(points: &[Vec<f64>], y: &[f64]) -> Nonlinearity {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    let k = (2 * d).min(n.saturating_sub(1));
    let mut scores = vec![0.0; n];
    let mut degenerate = vec![false; n];
    for p in 0..n {
        let mut order: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != p)
            .map(|j| (sq_dist(&points[p], &points[j]), j))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nbrs: Vec<usize> = order.iter().take(k).map(|&(_, j)| j).collect();
        if nbrs.len() < d {
            degenerate[p] = true;
            continue;
        }
        let dx = DMatrix::from_fn(nbrs.len(), d, |r, c| points[nbrs[r]][c] - points[p][c]);
        let dy = DVector::from_fn(nbrs.len(), |r, _| y[nbrs[r]] - y[p]);
        let svd = dx.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-10 * smax).count();
        if smax == 0.0 || rank < d {
            degenerate[p] = true;
            continue;
        }
        let Ok(grad) = svd.solve(&dy, 1e-10 * smax) else {
            degenerate[p] = true;
            continue;
        };
        let resid = &dy - &dx * grad;
        scores[p] = resid.iter().map(|r| r.abs()).sum();
    }
    Nonlinearity { scores, degenerate }
}

/// Proposes `batch` points: design points are ranked by Voronoi volume plus
/// normalized nonlinearity, and each of the top cells receives its test
/// point farthest from the owning design point.
pub fn lola_voronoi_batch(data: &DesignData, batch: usize, seed: u64) -> Result<DesignProposal> {
    let d = data.dim();
    let n = data.len();
    if n < 2 * (d + 1) {
        return Err(Error::TooFewSamples { required: 2 * (d + 1), got: n });
    }
    let points = data.unit_points();
    let y = data.responses();
    let cells = sample_cells(points, voronoi_test_size(n), seed);
    let lola = lola_nonlinearity(points, y);

    let range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - y.iter().copied().fold(f64::INFINITY, f64::min);
    let total: f64 = lola.scores.iter().sum();
    // residuals at rounding level carry no information
    let informative = total > 1e-8 * range.max(f64::MIN_POSITIVE) * n as f64;
    let scores: Vec<PointScore> = (0..n)
        .map(|p| {
            let exploitation = if informative && !lola.degenerate[p] { lola.scores[p] / total } else { 0.0 };
            PointScore {
                exploration: cells.volumes[p],
                exploitation,
                combined: cells.volumes[p] + exploitation,
            }
        })
        .collect();

    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| scores[b].combined.total_cmp(&scores[a].combined).then(a.cmp(&b)));

    let mut chosen: Vec<Vec<f64>> = Vec::with_capacity(batch);
    let mut chosen_scores = Vec::with_capacity(batch);
    for &p in &ranking {
        if chosen.len() == batch {
            break;
        }
        if let Some((x, _)) = &cells.farthest[p] {
            if far_enough(x, points) && far_enough(x, &chosen) {
                chosen.push(x.clone());
                chosen_scores.push(scores[p]);
            }
        }
    }
    if chosen.len() < batch {
        // more points requested than usable cells: fill by maximin
        let mut rng = crate::rng::stream(seed, 1);
        let pool: Vec<Vec<f64>> = (0..super::POOL_PER_POINT * batch)
            .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
            .collect();
        while chosen.len() < batch {
            let best = pool
                .iter()
                .filter(|c| far_enough(c, points) && far_enough(c, &chosen))
                .map(|c| {
                    let m = points.iter().chain(&chosen).map(|o| sq_dist(c, o)).fold(f64::INFINITY, f64::min);
                    (c, m)
                })
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let Some((c, _)) = best else { break };
            chosen.push(c.clone());
            chosen_scores.push(PointScore { exploration: 0.0, exploitation: 0.0, combined: 0.0 });
        }
    }
    let degenerate_neighborhoods = (0..n).filter(|&p| lola.degenerate[p]).collect();
    Ok(DesignProposal { points: chosen, scores: chosen_scores, degenerate_neighborhoods })
}
