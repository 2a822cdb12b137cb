//! Closed-form Sobol indices and DGSM of tensor-product surrogates.
//!
//! Everything reduces to three families of one-dimensional integrals over the
//! uniform density on `[0,1]`:
//!
//! - `C1[i,l] = ∫ h_il(x) dx`
//! - `C2[i,j,l] = ∫ h_il(x) h_jl(x) dx`
//! - `C3[i,j,l] = ∫ h'_il(x) h'_jl(x) dx`
//!
//! With `P_i = prod_l C1[i,l]` the closed variance of a subset `U` is
//!
//! ```text
//! V_U = sum_ij w_i w_j ( prod_{l∉U} C1[i,l] C1[j,l] prod_{l∈U} C2[i,j,l] ) - (sum_i w_i P_i)^2
//! ```
//!
//! which is the usual ratio form with the division by `C1` products cancelled,
//! so narrow kernels near the domain edge cannot underflow into `0/0`. The
//! DGSM of input `i` is `sum_jk w_j w_k prod_{l≠i} C2[j,k,l] C3[j,k,i]`.

use std::f64::consts::PI;

use log::warn;
use rayon::prelude::*;

use crate::domain::{SensitivityReport, SubsetIndex};
use crate::kernels::SeparableFactor;
use crate::quadrature::GaussLegendre;
use crate::surrogate::AffineTensorSurrogate;
use crate::{Error, Result};

pub const DEFAULT_QUAD_ORDER: usize = 64;
pub const MIN_QUAD_ORDER: usize = 8;
/// Order of the reference rule used by [`self_check`].
pub const CHECK_QUAD_ORDER: usize = 128;

/// Quadrature panels are at most this many factor decay lengths wide.
const PANEL_DECAY_LENGTHS: f64 = 16.0;
/// Panels whose integrand bound is below this fraction of the largest panel
/// bound are skipped.
const PANEL_SKIP_RATIO: f64 = 1e-24;

/// One-dimensional integrals of kernel factors for a fixed set of centers.
///
/// `c2` and `c3` are stored dimension-major: entry `(i, j, l)` lives at
/// `(l * n + i) * n + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorIntegralTable {
    n: usize,
    d: usize,
    order: usize,
    c1: Vec<f64>,
    c2: Vec<f64>,
    c3: Option<Vec<f64>>,
}

impl FactorIntegralTable {
    /// Integrates the factors of `kernel` around every center. `centers` are
    /// rows of the `N x d` center matrix.
    pub fn build<K: SeparableFactor>(
        kernel: &K,
        centers: &[Vec<f64>],
        d: usize,
        order: usize,
        derivatives: bool,
    ) -> Result<Self> {
        if order < MIN_QUAD_ORDER {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must be at least {}, got {}",
                MIN_QUAD_ORDER, order
            )));
        }
        let n = centers.len();
        let rule = GaussLegendre::new(order);

        let c1: Vec<f64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let rule = &rule;
                (0..d).map(move |l| single_integral(kernel, l, centers[i][l], rule))
            })
            .collect();

        let mut c2 = vec![0.0; n * n * d];
        let mut c3 = if derivatives { Some(vec![0.0; n * n * d]) } else { None };
        // (l, i) rows of the upper triangle, computed in parallel
        let rows: Vec<(usize, usize, Vec<(f64, f64)>)> = (0..d)
            .flat_map(|l| (0..n).map(move |i| (l, i)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(l, i)| {
                let vals = (i..n)
                    .map(|j| pair_integrals(kernel, l, centers[i][l], centers[j][l], &rule, derivatives))
                    .collect();
                (l, i, vals)
            })
            .collect();
        for (l, i, vals) in rows {
            for (off, (v2, v3)) in vals.into_iter().enumerate() {
                let j = i + off;
                c2[(l * n + i) * n + j] = v2;
                c2[(l * n + j) * n + i] = v2;
                if let Some(c3) = c3.as_mut() {
                    c3[(l * n + i) * n + j] = v3;
                    c3[(l * n + j) * n + i] = v3;
                }
            }
        }
        Ok(FactorIntegralTable { n, d, order, c1, c2, c3 })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn has_derivatives(&self) -> bool {
        self.c3.is_some()
    }

    #[inline]
    pub fn c1(&self, i: usize, l: usize) -> f64 {
        self.c1[i * self.d + l]
    }

    #[inline]
    pub fn c2(&self, i: usize, j: usize, l: usize) -> f64 {
        self.c2[(l * self.n + i) * self.n + j]
    }

    /// `None` when the table was built without derivatives.
    #[inline]
    pub fn c3(&self, i: usize, j: usize, l: usize) -> Option<f64> {
        self.c3.as_ref().map(|c3| c3[(l * self.n + i) * self.n + j])
    }

    /// Table for a subset of the centers (rows of the original center
    /// matrix, in the given order). Valid for any model sharing the kernel.
    pub fn restrict(&self, rows: &[usize]) -> Self {
        let m = rows.len();
        let (n, d) = (self.n, self.d);
        let c1 = rows
            .iter()
            .flat_map(|&r| self.c1[r * d..(r + 1) * d].iter().copied())
            .collect();
        let pick = |src: &[f64]| {
            let mut out = Vec::with_capacity(m * m * d);
            for l in 0..d {
                for &r in rows {
                    let base = (l * n + r) * n;
                    out.extend(rows.iter().map(|&s| src[base + s]));
                }
            }
            out
        };
        FactorIntegralTable {
            n: m,
            d,
            order: self.order,
            c1,
            c2: pick(&self.c2),
            c3: self.c3.as_deref().map(pick),
        }
    }

    /// Largest entrywise difference to another table of the same shape.
    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let mut m = diff(&self.c1, &other.c1).max(diff(&self.c2, &other.c2));
        if let (Some(a), Some(b)) = (&self.c3, &other.c3) {
            m = m.max(diff(a, b));
        }
        m
    }

    fn check_model(&self, model: &AffineTensorSurrogate) -> Result<()> {
        if model.len() != self.n || model.dim() != self.d {
            return Err(Error::InvalidArgument(format!(
                "table is {} x {} but model has {} centers in {} dimensions",
                self.n,
                self.d,
                model.len(),
                model.dim()
            )));
        }
        Ok(())
    }
}

/// C1/C2 (and C3 when `derivatives`) for a surrogate.
pub fn build_integral_table(
    model: &AffineTensorSurrogate,
    quad_order: usize,
    derivatives: bool,
) -> Result<FactorIntegralTable> {
    FactorIntegralTable::build(model.kernel(), model.centers(), model.dim(), quad_order, derivatives)
}

/// Recomputes a deterministic sample of entries (the diagonal and about `N`
/// off-diagonal pairs per dimension) with the order-128 rule and returns the
/// largest absolute deviation from `table`.
pub fn self_check<K: SeparableFactor>(kernel: &K, centers: &[Vec<f64>], table: &FactorIntegralTable) -> f64 {
    let rule = GaussLegendre::new(CHECK_QUAD_ORDER);
    let n = table.n;
    let stride = n.max(1);
    let mut worst: f64 = 0.0;
    for l in 0..table.d {
        for i in 0..n {
            worst = worst.max((single_integral(kernel, l, centers[i][l], &rule) - table.c1(i, l)).abs());
            let j = (i * 7 + l * 3 + 1) % stride;
            for j in [i, j] {
                let (v2, v3) = pair_integrals(kernel, l, centers[i][l], centers[j][l], &rule, table.has_derivatives());
                worst = worst.max((v2 - table.c2(i, j, l)).abs());
                if let Some(t3) = table.c3(i, j, l) {
                    worst = worst.max((v3 - t3).abs());
                }
            }
        }
    }
    worst
}

/// Sorted, de-duplicated breakpoints in `[0, 1]`.
fn breakpoints(extra: &[f64]) -> Vec<f64> {
    let mut b = Vec::with_capacity(extra.len() + 2);
    b.push(0.0);
    b.extend(extra.iter().copied().filter(|v| *v > 0.0 && *v < 1.0));
    b.push(1.0);
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Panels of at most `PANEL_DECAY_LENGTHS` decay lengths between breakpoints.
fn panels(bp: &[f64], decay: f64) -> Vec<(f64, f64)> {
    let width = PANEL_DECAY_LENGTHS * decay;
    let mut out = Vec::new();
    for w in bp.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = if width.is_finite() { ((b - a) / width).ceil().max(1.0) as usize } else { 1 };
        let h = (b - a) / m as f64;
        for k in 0..m {
            let lo = a + h * k as f64;
            let hi = if k + 1 == m { b } else { a + h * (k + 1) as f64 };
            out.push((lo, hi));
        }
    }
    out
}

fn distance_to_panel(c: f64, (a, b): (f64, f64)) -> f64 {
    if c < a {
        a - c
    } else if c > b {
        c - b
    } else {
        0.0
    }
}

fn single_integral<K: SeparableFactor>(kernel: &K, l: usize, c: f64, rule: &GaussLegendre) -> f64 {
    let ps = panels(&breakpoints(&[c]), kernel.decay_length(l));
    let bounds: Vec<f64> = ps.iter().map(|&p| kernel.factor(l, c, c + distance_to_panel(c, p))).collect();
    let top = bounds.iter().copied().fold(0.0, f64::max);
    let mut acc = 0.0;
    for (&(a, b), &bound) in ps.iter().zip(&bounds) {
        if bound < PANEL_SKIP_RATIO * top {
            continue;
        }
        acc += rule.integrate(a, b, |x| kernel.factor(l, c, x));
    }
    acc
}

/// `(C2, C3)` for two centers in dimension `l`; `C3` is zero unless
/// `derivatives`.
fn pair_integrals<K: SeparableFactor>(
    kernel: &K,
    l: usize,
    ci: f64,
    cj: f64,
    rule: &GaussLegendre,
    derivatives: bool,
) -> (f64, f64) {
    // canonical order keeps the table bitwise symmetric
    let (ci, cj) = if ci <= cj { (ci, cj) } else { (cj, ci) };
    let ps = panels(&breakpoints(&[ci, cj]), kernel.decay_length(l));
    let bound = |p: (f64, f64)| {
        kernel.factor(l, ci, ci + distance_to_panel(ci, p)) * kernel.factor(l, cj, cj + distance_to_panel(cj, p))
    };
    let bounds: Vec<f64> = ps.iter().map(|&p| bound(p)).collect();
    let top = bounds.iter().copied().fold(0.0, f64::max);
    let (mut s2, mut s3) = (0.0, 0.0);
    for (&(a, b), &bnd) in ps.iter().zip(&bounds) {
        if bnd < PANEL_SKIP_RATIO * top {
            continue;
        }
        let (mut p2, mut p3) = (0.0, 0.0);
        for (x, w) in rule.mapped(a, b) {
            if derivatives {
                let (hi, di) = kernel.factor_and_derivative(l, ci, x);
                let (hj, dj) = kernel.factor_and_derivative(l, cj, x);
                p2 += w * hi * hj;
                p3 += w * di * dj;
            } else {
                p2 += w * kernel.factor(l, ci, x) * kernel.factor(l, cj, x);
            }
        }
        s2 += p2;
        s3 += p3;
    }
    (s2, s3)
}

/// `(sum_ij w_i w_j prod_l M_l[i,j], sum_i w_i P_i)` where `M_l` is C2 for
/// `l` in `subset` and the C1 outer product otherwise.
fn subset_moments(model: &AffineTensorSurrogate, table: &FactorIntegralTable, in_subset: &[bool]) -> (f64, f64) {
    let n = table.n;
    let d = table.d;
    let w = model.weights();
    let mean: f64 = (0..n)
        .map(|i| w[i] * (0..d).map(|l| table.c1(i, l)).product::<f64>())
        .sum();
    // prod over l ∉ U of C1 for each row
    let outside: Vec<f64> = (0..n)
        .map(|i| (0..d).filter(|&l| !in_subset[l]).map(|l| table.c1(i, l)).product())
        .collect();
    let inside: Vec<usize> = (0..d).filter(|&l| in_subset[l]).collect();
    let second: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| w[j] * outside[j]).collect();
            for &l in &inside {
                let base = (l * n + i) * n;
                for (r, c) in row.iter_mut().zip(&table.c2[base..base + n]) {
                    *r *= c;
                }
            }
            w[i] * outside[i] * row.iter().sum::<f64>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    (second, mean)
}

fn validate_subset(d: usize, subset: &[usize]) -> Result<Vec<bool>> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("subset must be non-empty".into()));
    }
    let mut mask = vec![false; d];
    for &l in subset {
        if l >= d {
            return Err(Error::InvalidArgument(format!("dimension {} out of range for d = {}", l, d)));
        }
        mask[l] = true;
    }
    Ok(mask)
}

/// Closed variance `V_U`: the variance of `E[f | x_U]`, i.e. all ANOVA
/// components whose support lies inside `U`. Dimensions are zero-based.
pub fn subset_variance(model: &AffineTensorSurrogate, table: &FactorIntegralTable, subset: &[usize]) -> Result<f64> {
    table.check_model(model)?;
    let mask = validate_subset(table.d, subset)?;
    let (second, mean) = subset_moments(model, table, &mask);
    Ok(second - mean * mean)
}

/// Main ANOVA component `V_i` (a singleton's closed variance).
pub fn mobius_main_effect(model: &AffineTensorSurrogate, table: &FactorIntegralTable, i: usize) -> Result<f64> {
    subset_variance(model, table, &[i])
}

/// ANOVA component `V_U` (not closed) by inclusion–exclusion over the
/// non-empty subsets of `U`.
pub fn anova_component(model: &AffineTensorSurrogate, table: &FactorIntegralTable, subset: &[usize]) -> Result<f64> {
    validate_subset(table.d, subset)?;
    let mut dims = subset.to_vec();
    dims.sort_unstable();
    dims.dedup();
    let k = dims.len();
    if k > 20 {
        return Err(Error::InvalidArgument("interaction subsets are limited to 20 dimensions".into()));
    }
    let mut acc = 0.0;
    for mask in 1u32..(1 << k) {
        let w: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| dims[b]).collect();
        let sign = if (k - w.len()) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * subset_variance(model, table, &w)?;
    }
    Ok(acc)
}

/// `(sum_i |w_i| ||h_i||)^2`, the magnitude of the terms that cancel in the
/// closed-form variance. Rounding error in any `V_U` is of order
/// `f64::EPSILON` times this, so ill-conditioned fits with large weights lose
/// relative precision in proportion to `scale / V`.
pub fn variance_rounding_scale(model: &AffineTensorSurrogate, table: &FactorIntegralTable) -> Result<f64> {
    table.check_model(model)?;
    let s: f64 = model
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w.abs() * (0..table.d).map(|l| table.c2(i, i, l)).product::<f64>().sqrt())
        .sum();
    Ok(s * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolIndices {
    pub variance: f64,
    pub main: Vec<f64>,
    pub total: Vec<f64>,
}

/// Total variance, main and total Sobol indices. Totals use
/// `S_i^T = 1 - V_{~i} / V`.
pub fn sobol_report(model: &AffineTensorSurrogate, table: &FactorIntegralTable) -> Result<SobolIndices> {
    table.check_model(model)?;
    let d = table.d;
    let (second, mean) = subset_moments(model, table, &vec![true; d]);
    let variance = second - mean * mean;
    if !(variance > 1e-14 * second) || second == 0.0 {
        return Err(Error::Degenerate(format!(
            "surrogate variance {:e} is numerically zero; indices are undefined",
            variance
        )));
    }
    let noise = f64::EPSILON * variance_rounding_scale(model, table)?;
    if noise > 1e-6 * variance {
        warn!(
            "surrogate weights are large relative to its variance; indices are accurate to about {:.0e}",
            noise / variance
        );
    }
    let mut main = Vec::with_capacity(d);
    let mut total = Vec::with_capacity(d);
    for i in 0..d {
        let mut single = vec![false; d];
        single[i] = true;
        let (s, m) = subset_moments(model, table, &single);
        main.push((s - m * m) / variance);
        let mut rest = vec![true; d];
        rest[i] = false;
        let v_rest = if d == 1 {
            0.0
        } else {
            let (s, m) = subset_moments(model, table, &rest);
            s - m * m
        };
        total.push(1.0 - v_rest / variance);
    }
    Ok(SobolIndices { variance, main, total })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgsmIndices {
    /// `E[(∂f/∂u_i)^2]` over the unit hypercube.
    pub nu: Vec<f64>,
    /// `nu_i / (pi^2 V)`, an upper bound on the total Sobol index.
    pub bound: Vec<f64>,
}

/// DGSM for every input plus the total-index bounds. `variance` is the total
/// variance `V` from [`sobol_report`].
pub fn dgsm_report(model: &AffineTensorSurrogate, table: &FactorIntegralTable, variance: f64) -> Result<DgsmIndices> {
    table.check_model(model)?;
    let c3 = table
        .c3
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("integral table was built without derivative integrals".into()))?;
    let n = table.n;
    let d = table.d;
    let w = model.weights();
    let mut nu = Vec::with_capacity(d);
    for i in 0..d {
        let value: f64 = (0..n)
            .into_par_iter()
            .map(|a| {
                let base = (i * n + a) * n;
                let mut row: Vec<f64> = (0..n).map(|b| w[b] * c3[base + b]).collect();
                for l in (0..d).filter(|&l| l != i) {
                    let base = (l * n + a) * n;
                    for (r, c) in row.iter_mut().zip(&table.c2[base..base + n]) {
                        *r *= c;
                    }
                }
                w[a] * row.iter().sum::<f64>()
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        nu.push(value);
    }
    let scale = nu.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (i, v) in nu.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v < -1e-10 * scale {
                return Err(Error::Consistency(format!(
                    "negative DGSM {:e} for input {}; quadrature or fit is defective",
                    v, i
                )));
            }
            warn!("clamping DGSM {:e} of input {} to zero", v, i);
            *v = 0.0;
        }
    }
    let bound = nu.iter().map(|v| v / (PI * PI * variance)).collect();
    Ok(DgsmIndices { nu, bound })
}

/// Sobol and DGSM indices in one report, with optional interaction indices
/// for the requested subsets. The table must include derivative integrals.
pub fn analyze(
    model: &AffineTensorSurrogate,
    table: &FactorIntegralTable,
    interactions: &[Vec<usize>],
) -> Result<SensitivityReport> {
    let sobol = sobol_report(model, table)?;
    let dgsm = dgsm_report(model, table, sobol.variance)?;
    let interactions = interactions
        .iter()
        .map(|u| {
            Ok(SubsetIndex {
                subset: u.clone(),
                index: anova_component(model, table, u)? / sobol.variance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityReport {
        variance: sobol.variance,
        main: sobol.main,
        total: sobol.total,
        interactions,
        dgsm: dgsm.nu,
        dgsm_bound: dgsm.bound,
        dgsm_scale: vec![1.0; table.d],
    })
}
