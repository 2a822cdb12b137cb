mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senseq::analytic::{
    analyze, anova_component, build_integral_table, dgsm_report, mobius_main_effect, sobol_report, subset_variance,
    variance_rounding_scale,
    FactorIntegralTable, CHECK_QUAD_ORDER, DEFAULT_QUAD_ORDER,
};
use senseq::domain::InputSpace;
use senseq::kernels::{KernelFamily, KernelSpec};
use senseq::mc_oracle::{mc_dgsm, mc_moments, saltelli_estimate};
use senseq::surrogate::AffineTensorSurrogate;
use libm::erf;

/// `∫_0^1 exp(-theta (x - c)^2) dx`.
fn se_c1(theta: f64, c: f64) -> f64 {
    let s = theta.sqrt();
    0.5 * (std::f64::consts::PI / theta).sqrt() * (erf(s * (1.0 - c)) + erf(s * c))
}

/// `∫_0^1 exp(-theta (x - a)^2 - theta (x - b)^2) dx`.
fn se_c2(theta: f64, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    (-0.5 * theta * (a - b) * (a - b)).exp() * se_c1(2.0 * theta, m)
}

fn random_model(family: KernelFamily, n: usize, d: usize, seed: u64) -> AffineTensorSurrogate {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let thetas: Vec<f64> = (0..d).map(|_| 10f64.powf(r.gen_range(-2.0..3.0))).collect();
    let centers: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen()).collect()).collect();
    let weights: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    AffineTensorSurrogate::new(r.gen(), weights, centers, KernelSpec::ard(family, thetas).unwrap()).unwrap()
}

#[test]
fn se_integrals_match_erf_closed_form() {
    let model = AffineTensorSurrogate::new(
        0.0,
        vec![1.0],
        vec![vec![0.5]],
        KernelSpec::ard(KernelFamily::SquaredExponential, vec![1.0]).unwrap(),
    )
    .unwrap();
    let t = build_integral_table(&model, DEFAULT_QUAD_ORDER, false).unwrap();
    let exact = std::f64::consts::PI.sqrt() * erf(0.5);
    assert!((exact - 0.922562).abs() < 1e-6);
    assert!((t.c1(0, 0) - exact).abs() < 1e-10);

    for seed in 0..20 {
        let m = random_model(KernelFamily::SquaredExponential, 12, 3, seed);
        let t = build_integral_table(&m, DEFAULT_QUAD_ORDER, false).unwrap();
        let th = m.kernel().thetas(3);
        for l in 0..3 {
            for i in 0..12 {
                let ci = m.centers()[i][l];
                assert!((t.c1(i, l) - se_c1(th[l], ci)).abs() < 1e-10, "C1 theta {}", th[l]);
                for j in 0..12 {
                    let cj = m.centers()[j][l];
                    assert!((t.c2(i, j, l) - se_c2(th[l], ci, cj)).abs() < 1e-10, "C2 theta {}", th[l]);
                }
            }
        }
    }
}

/// C1 and C2 lie in (0, 1] and are compared absolutely. C3 grows like
/// theta, so it is compared relative to the largest C3 entry.
fn assert_orders_agree(m: &AffineTensorSurrogate) {
    let a = build_integral_table(m, DEFAULT_QUAD_ORDER, true).unwrap();
    let b = build_integral_table(m, CHECK_QUAD_ORDER, true).unwrap();
    let (n, d) = (a.len(), a.dim());
    let (mut e12, mut e3, mut c3_max) = (0f64, 0f64, 0f64);
    for l in 0..d {
        for i in 0..n {
            e12 = e12.max((a.c1(i, l) - b.c1(i, l)).abs());
            for j in 0..n {
                e12 = e12.max((a.c2(i, j, l) - b.c2(i, j, l)).abs());
                e3 = e3.max((a.c3(i, j, l).unwrap() - b.c3(i, j, l).unwrap()).abs());
                c3_max = c3_max.max(b.c3(i, j, l).unwrap().abs());
            }
        }
    }
    assert!(e12 < 1e-12, "C1/C2 order 64 vs 128 differ by {e12:e}");
    assert!(e3 < 1e-12 * c3_max.max(1.0), "C3 order 64 vs 128 differ by {e3:e} (max {c3_max:e})");
}

#[test]
fn order_64_matches_order_128() {
    for seed in 0..10 {
        assert_orders_agree(&random_model(KernelFamily::Matern32, 15, 3, seed));
        assert_orders_agree(&random_model(KernelFamily::SquaredExponential, 15, 3, 100 + seed));
    }
    for (_, m, _) in oracle_surrogates() {
        assert_orders_agree(&m);
    }
}

fn table_invariants(t: &FactorIntegralTable) {
    for l in 0..t.dim() {
        for i in 0..t.len() {
            let c1 = t.c1(i, l);
            assert!(c1 > 0.0 && c1 <= 1.0);
            assert!(t.c2(i, i, l) >= c1 * c1 - 1e-12);
            for j in 0..t.len() {
                assert!(t.c2(i, j, l) > 0.0 && t.c2(i, j, l) <= 1.0);
                assert!((t.c2(i, j, l) - t.c2(j, i, l)).abs() <= 1e-12);
                let (a, b) = (t.c3(i, j, l).unwrap(), t.c3(j, i, l).unwrap());
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}

#[test]
fn table_invariants_hold() {
    for (_, _, t) in oracle_surrogates() {
        table_invariants(&t);
    }
}

fn unit_fit(n: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> (AffineTensorSurrogate, FactorIntegralTable) {
    let data = lhs_data(&InputSpace::unit(2).unwrap(), n, seed, f);
    fitted(&data, KernelFamily::Matern32, 1)
}

#[test]
fn linear_function() {
    let (m, t) = unit_fit(50, 3, |x| x[0]);
    let v1 = subset_variance(&m, &t, &[0]).unwrap();
    let v2 = subset_variance(&m, &t, &[1]).unwrap();
    let v12 = subset_variance(&m, &t, &[0, 1]).unwrap();
    assert!((v1 - 1.0 / 12.0).abs() < 2e-3, "{v1}");
    assert!(v2.abs() < 2e-3, "{v2}");
    assert!((v12 - 1.0 / 12.0).abs() < 2e-3, "{v12}");
    let r = analyze(&m, &t, &[]).unwrap();
    assert!((r.dgsm[0] - 1.0).abs() < 5e-3 && r.dgsm[1].abs() < 5e-3, "{:?}", r.dgsm);
    assert!((r.dgsm_bound[0] - 12.0 / (std::f64::consts::PI * std::f64::consts::PI)).abs() < 2e-2);
    assert!(r.dgsm_bound[0] >= r.total[0]);
}

#[test]
fn product_function_is_pure_interaction() {
    let (m, t) = unit_fit(50, 4, |x| (x[0] - 0.5) * (x[1] - 0.5));
    let v1 = mobius_main_effect(&m, &t, 0).unwrap();
    let v2 = mobius_main_effect(&m, &t, 1).unwrap();
    let v12 = anova_component(&m, &t, &[0, 1]).unwrap();
    assert!(v1.abs() < 5e-4 && v2.abs() < 5e-4, "{v1} {v2}");
    assert!((v12 - 1.0 / 144.0).abs() < 5e-4, "{v12}");
}

#[test]
fn additive_function() {
    let (m, t) = unit_fit(50, 5, |x| x[0] + x[1]);
    let s = sobol_report(&m, &t).unwrap();
    for i in 0..2 {
        assert!((s.main[i] - 0.5).abs() < 2e-3, "{:?}", s.main);
        assert!((s.total[i] - s.main[i]).abs() < 2e-3);
    }
    assert!(anova_component(&m, &t, &[0, 1]).unwrap().abs() < 2e-3 * s.variance);
}

#[test]
fn anova_components_sum_to_variance() {
    for (name, m, t) in oracle_surrogates() {
        let d = m.dim();
        let v = subset_variance(&m, &t, &(0..d).collect::<Vec<_>>()).unwrap();
        let mut sum = 0.0;
        for mask in 1u32..(1 << d) {
            let u: Vec<usize> = (0..d).filter(|l| mask & (1 << l) != 0).collect();
            sum += anova_component(&m, &t, &u).unwrap();
        }
        assert!((sum - v).abs() <= 1e-8 * v, "{name}: {sum} vs {v}");
    }
}

/// Scaling the weights by a non-power-of-two changes rounding in the
/// cancelling sums, so the tolerance is 1e-10 or the rounding level
/// predicted from the weight magnitudes, whichever is larger.
#[test]
fn affine_response_invariance() {
    let mut strict = 0;
    for (name, m, t) in oracle_surrogates() {
        let s = sobol_report(&m, &t).unwrap();
        let noise = 16.0 * f64::EPSILON * variance_rounding_scale(&m, &t).unwrap() / s.variance;
        if noise <= 1e-10 {
            strict += 1;
        }
        let tol = noise.max(1e-10);
        let m2 = m.affine_transformed(-3.5, 12.0);
        let s2 = sobol_report(&m2, &t).unwrap();
        assert!((s2.variance / s.variance - 12.25).abs() <= 12.25 * tol, "{name}");
        for i in 0..m.dim() {
            assert!((s.main[i] - s2.main[i]).abs() <= tol, "{name} main {i}: tol {tol:e}");
            assert!((s.total[i] - s2.total[i]).abs() <= tol, "{name} total {i}: tol {tol:e}");
        }
    }
    assert!(strict >= 3, "only {strict} surrogates were checked at 1e-10");
}

#[test]
fn variance_matches_monte_carlo() {
    for (name, m, t) in oracle_surrogates() {
        let v = sobol_report(&m, &t).unwrap().variance;
        let mc = mc_moments(&|u: &[f64]| m.predict(u), m.dim(), 1_000_000, 17).unwrap();
        assert!((v - mc.variance).abs() <= 3.0 * mc.variance_se, "{name}: {v} vs {} ± {}", mc.variance, mc.variance_se);
    }
}

#[test]
fn oracle_equivalence() {
    for (k, (name, m, t)) in oracle_surrogates().into_iter().enumerate() {
        let d = m.dim();
        let s = sobol_report(&m, &t).unwrap();
        let mc = saltelli_estimate(&|u: &[f64]| m.predict(u), d, 1 << 16, 31 + k as u64).unwrap();
        let ix = mc.indices.unwrap();
        for i in 0..d {
            assert!((s.main[i] - ix.main[i]).abs() <= 3.0 * ix.main_se[i], "{name} S{i}: {} vs {} ± {}", s.main[i], ix.main[i], ix.main_se[i]);
            assert!(
                (s.total[i] - ix.total[i]).abs() <= 3.0 * ix.total_se[i],
                "{name} ST{i}: {} vs {} ± {}",
                s.total[i],
                ix.total[i],
                ix.total_se[i]
            );
        }
        let nu = dgsm_report(&m, &t, s.variance).unwrap().nu;
        let g = mc_dgsm(&|u: &[f64]| m.gradient(u), d, 1 << 16, 61 + k as u64).unwrap();
        for i in 0..d {
            assert!((nu[i] - g.nu[i]).abs() <= 3.0 * g.se[i], "{name} nu{i}: {} vs {} ± {}", nu[i], g.nu[i], g.se[i]);
        }
    }
}

#[test]
fn dgsm_bound_holds() {
    for (name, m, t) in oracle_surrogates() {
        let r = analyze(&m, &t, &[]).unwrap();
        for i in 0..m.dim() {
            assert!(r.total[i] <= r.dgsm_bound[i] + 1e-6, "{name} {i}");
            assert!(r.main[i] <= r.total[i] + 1e-8);
        }
        assert!(r.main.iter().sum::<f64>() <= 1.0 + 1e-6);
    }
}
