//! Monte-Carlo reference estimators, used to verify the analytic engine.
//!
//! Samples are drawn in blocks of [`BLOCK`] rows; block `b` uses ChaCha8
//! stream `b` of the given seed (see [`crate::rng`]), so the estimates do not
//! depend on how blocks are scheduled.

use rand::Rng;
use rayon::prelude::*;

use crate::{Error, Result};

pub const BLOCK: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct SobolEstimates {
    pub main: Vec<f64>,
    pub total: Vec<f64>,
    pub main_se: Vec<f64>,
    pub total_se: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaltelliEstimate {
    pub variance: f64,
    pub variance_se: f64,
    /// `None` when the variance estimate is zero.
    pub indices: Option<SobolEstimates>,
}

fn draw_rows(d: usize, n: usize, seed: u64, per_row: usize) -> Vec<Vec<f64>> {
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = crate::rng::stream(seed, b as u64);
            let rows = BLOCK.min(n - b * BLOCK);
            (0..rows)
                .map(|_| (0..d * per_row).map(|_| rng.gen::<f64>()).collect())
                .collect::<Vec<Vec<f64>>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn checked<F: Fn(&[f64]) -> f64 + ?Sized>(f: &F, x: &[f64]) -> Result<f64> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::evaluation(format!("non-finite value {} at {:?}", v, x)))
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of `mean(a) / mean(q)` by the delta method.
fn ratio_se(a: &[f64], q: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mq) = (mean(a), mean(q));
    let r = ma / mq;
    let psi: Vec<f64> = a.iter().zip(q).map(|(x, y)| (x - r * y) / mq).collect();
    let mp = mean(&psi);
    (psi.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
}

/// Pick-freeze estimates of first-order and total Sobol indices of `f` over
/// the uniform unit hypercube, with Jansen's estimators for both.
pub fn saltelli_estimate<F>(f: &F, d: usize, base_n: usize, seed: u64) -> Result<SaltelliEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if base_n < 1 << 10 || !base_n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "base sample size must be a power of two >= 1024, got {}",
            base_n
        )));
    }
    let rows = draw_rows(d, base_n, seed, 2);
    // per row: f(A), f(B), f(A with column i from B) for each i
    let evals: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| {
            let (a, b) = row.split_at(d);
            let mut out = Vec::with_capacity(d + 2);
            out.push(checked(f, a)?);
            out.push(checked(f, b)?);
            let mut ab = a.to_vec();
            for i in 0..d {
                ab[i] = b[i];
                out.push(checked(f, &ab)?);
                ab[i] = a[i];
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let fa: Vec<f64> = evals.iter().map(|e| e[0]).collect();
    let fb: Vec<f64> = evals.iter().map(|e| e[1]).collect();
    let mu = (mean(&fa) + mean(&fb)) / 2.0;
    let q: Vec<f64> = fa
        .iter()
        .zip(&fb)
        .map(|(a, b)| ((a - mu).powi(2) + (b - mu).powi(2)) / 2.0)
        .collect();
    let variance = mean(&q);
    let variance_se = {
        let n = q.len() as f64;
        (q.iter().map(|v| (v - variance).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    };
    if variance <= 0.0 {
        return Ok(SaltelliEstimate { variance, variance_se, indices: None });
    }
    let mut est = SobolEstimates {
        main: Vec::with_capacity(d),
        total: Vec::with_capacity(d),
        main_se: Vec::with_capacity(d),
        total_se: Vec::with_capacity(d),
    };
    for i in 0..d {
        let g: Vec<f64> = evals.iter().map(|e| 0.5 * (e[1] - e[2 + i]).powi(2)).collect();
        let h: Vec<f64> = evals.iter().map(|e| 0.5 * (e[0] - e[2 + i]).powi(2)).collect();
        est.main.push(1.0 - mean(&g) / variance);
        est.main_se.push(ratio_se(&g, &q));
        est.total.push(mean(&h) / variance);
        est.total_se.push(ratio_se(&h, &q));
    }
    Ok(SaltelliEstimate { variance, variance_se, indices: Some(est) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgsmEstimate {
    pub nu: Vec<f64>,
    pub se: Vec<f64>,
}

/// Mean squared partial derivatives over `n` uniform points of `[0,1]^d`.
pub fn mc_dgsm<G>(grad: &G, d: usize, n: usize, seed: u64) -> Result<DgsmEstimate>
where
    G: Fn(&[f64]) -> Vec<f64> + Sync + ?Sized,
{
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    let rows = draw_rows(d, n, seed, 1);
    let sq: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|u| {
            let g = grad(u);
            if g.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: g.len() });
            }
            if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
                return Err(Error::evaluation(format!("non-finite derivative {} at {:?}", bad, u)));
            }
            Ok(g.iter().map(|v| v * v).collect())
        })
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let mut nu = Vec::with_capacity(d);
    let mut se = Vec::with_capacity(d);
    for i in 0..d {
        let m = sq.iter().map(|r| r[i]).sum::<f64>() / nf;
        let var = sq.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (nf - 1.0);
        nu.push(m);
        se.push((var / nf).sqrt());
    }
    Ok(DgsmEstimate { nu, se })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub variance: f64,
    pub variance_se: f64,
}

/// Sample mean and variance of `f` at `n` uniform points.
pub fn mc_moments<F>(f: &F, d: usize, n: usize, seed: u64) -> Result<MomentEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    if n < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n });
    }
    let rows = draw_rows(d, n, seed, 1);
    let v: Vec<f64> = rows.par_iter().map(|u| checked(f, u)).collect::<Result<_>>()?;
    let nf = n as f64;
    let m = mean(&v);
    let sq: Vec<f64> = v.iter().map(|x| (x - m).powi(2)).collect();
    let variance = sq.iter().sum::<f64>() / (nf - 1.0);
    let var_sq = sq.iter().map(|s| (s - variance).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(MomentEstimate { mean: m, variance, variance_se: (var_sq / nf).sqrt() })
}
