//! Density-based infill: maximize a blend of Euclidean maximin distance and
//! per-axis projected distance to the design.

use rand::Rng;

use super::{sq_dist, DesignProposal, PointScore, MIN_SEPARATION};
use crate::domain::DesignData;
use crate::{Error, Result};

/// Weight of the Euclidean term; the projected term gets `1 - w`.
pub const DENSITY_WEIGHT: f64 = 0.5;
/// Candidate pool size per requested point.
pub const POOL_PER_POINT: usize = 500;

fn projected_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(f64::INFINITY, f64::min)
}

/// Greedy batch selection from a random candidate pool; distances are updated
/// after every pick so the batch spreads out.
pub fn density_batch(data: &DesignData, batch: usize, seed: u64) -> Result<DesignProposal> {
    if data.is_empty() {
        return Err(Error::TooFewSamples { required: 1, got: 0 });
    }
    let d = data.dim();
    let mut rng = crate::rng::seeded(seed);
    let pool: Vec<Vec<f64>> = (0..POOL_PER_POINT * batch.max(1))
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut euclid: Vec<f64> = pool
        .iter()
        .map(|c| data.unit_points().iter().map(|p| sq_dist(c, p)).fold(f64::INFINITY, f64::min).sqrt())
        .collect();
    let mut proj: Vec<f64> = pool
        .iter()
        .map(|c| data.unit_points().iter().map(|p| projected_distance(c, p)).fold(f64::INFINITY, f64::min))
        .collect();
    let mut taken = vec![false; pool.len()];
    let mut points = Vec::with_capacity(batch);
    let mut scores = Vec::with_capacity(batch);
    for _ in 0..batch {
        let best = (0..pool.len())
            .filter(|&c| !taken[c] && euclid[c] >= MIN_SEPARATION)
            .map(|c| (c, DENSITY_WEIGHT * euclid[c] + (1.0 - DENSITY_WEIGHT) * proj[c]))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((c, combined)) = best else { break };
        taken[c] = true;
        scores.push(PointScore { exploration: euclid[c], exploitation: proj[c], combined });
        let chosen = pool[c].clone();
        for (k, cand) in pool.iter().enumerate() {
            euclid[k] = euclid[k].min(sq_dist(cand, &chosen).sqrt());
            proj[k] = proj[k].min(projected_distance(cand, &chosen));
        }
        points.push(chosen);
    }
    Ok(DesignProposal { points, scores, degenerate_neighborhoods: Vec::new() })
}
