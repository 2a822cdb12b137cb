//! Acceptance suite: runs every criterion and prints one PASS/FAIL line each.
//! Runs as a plain binary (no libtest harness) so the lines are always shown.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use libm::erf;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senseq::analytic::{self, build_integral_table, dgsm_report, sobol_report, CHECK_QUAD_ORDER, DEFAULT_QUAD_ORDER};
use senseq::benchmarks::{builtin, Ishigami};
use senseq::design::{initial_lhs, voronoi_volumes};
use senseq::domain::SensitivityReport;
use senseq::kernels::{KernelFamily, KernelSpec, SeparableFactor};
use senseq::mc_oracle::{mc_dgsm, saltelli_estimate};
use senseq::surrogate::AffineTensorSurrogate;
use senseq::workflow::{run, run_with, BuiltinSimulator, RunConfig, RunOutcome, Simulator};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn fmt_vec(v: &[f64], prec: usize) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{:.*}", prec, x)).collect();
    format!("({})", items.join(", "))
}

/// Reports touched by the bound check of criterion 6.
#[derive(Default)]
struct BoundLedger {
    reports: Vec<(String, SensitivityReport)>,
}

impl BoundLedger {
    fn add_run(&mut self, label: &str, out: &RunOutcome) {
        for r in out.trace.records() {
            self.reports.push((format!("{} N={}", label, r.sample_count), r.report.clone()));
        }
    }
}

fn c1_sobol_and_c2_dgsm(runs: &[RunOutcome]) -> (Verdict, Verdict) {
    let k = runs.len() as f64;
    let mean = |f: &dyn Fn(&SensitivityReport) -> &Vec<f64>| -> Vec<f64> {
        (0..3).map(|i| runs.iter().map(|o| f(&o.report)[i]).sum::<f64>() / k).collect()
    };
    let main = mean(&|r| &r.main);
    let total = mean(&|r| &r.total);
    let nu = mean(&|r| &r.dgsm);
    let sobol_ok = (0..3).all(|i| (main[i] - Ishigami::MAIN[i]).abs() <= 0.01 && (total[i] - Ishigami::TOTAL[i]).abs() <= 0.01);
    let rel: Vec<f64> = (0..3).map(|i| nu[i] / Ishigami::DGSM[i] - 1.0).collect();
    let dgsm_ok = rel.iter().all(|r| r.abs() <= 0.10);
    (
        verdict(
            sobol_ok,
            format!(
                "mean over {} seeds: S = {} (target {}), ST = {} (target {}), tol 0.01",
                runs.len(),
                fmt_vec(&main, 4),
                fmt_vec(&Ishigami::MAIN, 4),
                fmt_vec(&total, 4),
                fmt_vec(&Ishigami::TOTAL, 4)
            ),
        ),
        verdict(
            dgsm_ok,
            format!(
                "mean nu = {} vs {}, relative error {}, tol 10%",
                fmt_vec(&nu, 1),
                fmt_vec(&Ishigami::DGSM, 1),
                fmt_vec(&rel, 3)
            ),
        ),
    )
}

fn c3_stopping_magnitude(runs: &[RunOutcome]) -> Verdict {
    let finals: Vec<f64> = runs.iter().map(|o| o.trace.last().unwrap().criteria["mean"]).collect();
    let worst = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // first N with two consecutive values below 5e-6, for information
    let stops: Vec<String> = runs
        .iter()
        .map(|o| {
            let recs = o.trace.records();
            recs.windows(2)
                .find(|w| w[0].criteria["mean"] < 5e-6 && w[1].criteria["mean"] < 5e-6)
                .map_or("-".to_string(), |w| w[1].sample_count.to_string())
        })
        .collect();
    verdict(
        finals.iter().all(|v| *v < 1e-5),
        format!(
            "final sobol-main Mean criterion max {:.3e} (< 1e-5); N at which a 5e-6 threshold would stop: {}",
            worst,
            stops.join(" ")
        ),
    )
}

fn c4_oracle_equivalence(ledger: &mut BoundLedger) -> Verdict {
    let mut checks = 0;
    let mut failures = Vec::new();
    let surrogates = oracle_surrogates();
    for (k, (name, m, t)) in surrogates.iter().enumerate() {
        let d = m.dim();
        let s = sobol_report(m, t).unwrap();
        let mc = saltelli_estimate(&|u: &[f64]| m.predict(u), d, 1 << 16, 31 + k as u64).unwrap();
        let ix = mc.indices.unwrap();
        let nu = dgsm_report(m, t, s.variance).unwrap().nu;
        let g = mc_dgsm(&|u: &[f64]| m.gradient(u), d, 1 << 16, 61 + k as u64).unwrap();
        for i in 0..d {
            for (what, a, b, se) in [
                ("S", s.main[i], ix.main[i], ix.main_se[i]),
                ("ST", s.total[i], ix.total[i], ix.total_se[i]),
                ("nu", nu[i], g.nu[i], g.se[i]),
            ] {
                checks += 1;
                if (a - b).abs() > 3.0 * se {
                    failures.push(format!("{name} {what}{}: {a:.5} vs {b:.5} ± {se:.1e}", i + 1));
                }
            }
        }
        ledger.reports.push((name.clone(), analytic::analyze(m, t, &[]).unwrap()));
    }
    verdict(
        failures.is_empty() && surrogates.len() >= 5,
        format!(
            "{} surrogates (2-D and 3-D), {} comparisons at 3 MC standard errors, 2^16 base samples{}",
            surrogates.len(),
            checks,
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join("; ")) }
        ),
    )
}

fn se_c1(theta: f64, c: f64) -> f64 {
    let s = theta.sqrt();
    0.5 * (std::f64::consts::PI / theta).sqrt() * (erf(s * (1.0 - c)) + erf(s * c))
}

fn se_c2(theta: f64, a: f64, b: f64) -> f64 {
    (-0.5 * theta * (a - b) * (a - b)).exp() * se_c1(2.0 * theta, 0.5 * (a + b))
}

fn random_model(family: KernelFamily, n: usize, d: usize, rng: &mut ChaCha8Rng) -> AffineTensorSurrogate {
    let thetas: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.gen_range(-2.0..3.0))).collect();
    let centers: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    AffineTensorSurrogate::new(0.0, weights, centers, KernelSpec::ard(family, thetas).unwrap()).unwrap()
}

fn c5_quadrature() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut erf_err = 0f64;
    for _ in 0..20 {
        let m = random_model(KernelFamily::SquaredExponential, 12, 3, &mut rng);
        let t = build_integral_table(&m, DEFAULT_QUAD_ORDER, false).unwrap();
        let th = m.kernel().thetas(3);
        for l in 0..3 {
            for i in 0..12 {
                let ci = m.centers()[i][l];
                erf_err = erf_err.max((t.c1(i, l) - se_c1(th[l], ci)).abs());
                for j in 0..12 {
                    erf_err = erf_err.max((t.c2(i, j, l) - se_c2(th[l], ci, m.centers()[j][l])).abs());
                }
            }
        }
    }
    // fitted surrogates: every entry absolute; random stress models over
    // theta in [1e-2, 1e3]: C1/C2 absolute, C3 relative to its largest entry
    let mut fitted_err = 0f64;
    for (_, m, _) in oracle_surrogates() {
        let a = build_integral_table(&m, DEFAULT_QUAD_ORDER, true).unwrap();
        let b = build_integral_table(&m, CHECK_QUAD_ORDER, true).unwrap();
        fitted_err = fitted_err.max(a.max_abs_difference(&b));
    }
    let (mut stress12, mut stress3) = (0f64, 0f64);
    for k in 0..20 {
        let family = if k % 2 == 0 { KernelFamily::Matern32 } else { KernelFamily::SquaredExponential };
        let m = random_model(family, 15, 3, &mut rng);
        let a = build_integral_table(&m, DEFAULT_QUAD_ORDER, true).unwrap();
        let b = build_integral_table(&m, CHECK_QUAD_ORDER, true).unwrap();
        let mut c3_max = 1f64;
        let mut e3 = 0f64;
        for l in 0..3 {
            for i in 0..15 {
                stress12 = stress12.max((a.c1(i, l) - b.c1(i, l)).abs());
                for j in 0..15 {
                    stress12 = stress12.max((a.c2(i, j, l) - b.c2(i, j, l)).abs());
                    e3 = e3.max((a.c3(i, j, l).unwrap() - b.c3(i, j, l).unwrap()).abs());
                    c3_max = c3_max.max(b.c3(i, j, l).unwrap().abs());
                }
            }
        }
        stress3 = stress3.max(e3 / c3_max);
    }
    verdict(
        erf_err < 1e-10 && fitted_err < 1e-12 && stress12 < 1e-12 && stress3 < 1e-12,
        format!(
            "SE C1/C2 vs erf max {:.1e} (< 1e-10); order 64 vs 128: fitted tables {:.1e}, stress C1/C2 {:.1e}, stress C3 relative {:.1e} (< 1e-12)",
            erf_err, fitted_err, stress12, stress3
        ),
    )
}

fn c6_bound(ledger: &BoundLedger) -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    let mut checks = 0;
    for (label, r) in &ledger.reports {
        for i in 0..r.dim() {
            checks += 1;
            let gap = r.total[i] - r.dgsm_bound[i];
            worst = worst.max(gap);
            if gap > 1e-6 {
                failures.push(format!("{label} input {}", i + 1));
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} surrogates, {} (surrogate, input) pairs, max ST - nu/(pi^2 V) = {:.3e}{}",
            ledger.reports.len(),
            checks,
            worst,
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}

fn c7_derivatives() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut kernel_err = 0f64;
    let mut probes = 0;
    while probes < 10_000 {
        let family = if probes % 2 == 0 { KernelFamily::SquaredExponential } else { KernelFamily::Matern32 };
        let spec = KernelSpec::shared(family, 10f64.powf(rng.gen_range(-2.0..3.0))).unwrap();
        // step scaled to the decay length so truncation error stays small
        let h = 1e-6 * spec.decay_length(0).min(1.0);
        let (c, x): (f64, f64) = (rng.gen(), rng.gen());
        if (x - c).abs() < 4.0 * h {
            continue;
        }
        let fd = (spec.factor(0, c, x + h) - spec.factor(0, c, x - h)) / (2.0 * h);
        kernel_err = kernel_err.max((fd - spec.factor_derivative(0, c, x)).abs());
        probes += 1;
    }
    let mut bench_err = 0f64;
    let h = 1e-6;
    for (k, name) in ["ishigami", "g-function", "moon"].iter().enumerate() {
        let b = builtin(name).unwrap();
        let space = b.space();
        let mut rng = ChaCha8Rng::seed_from_u64(70 + k as u64);
        let mut n = 0;
        while n < 10_000 {
            let x: Vec<f64> = space.dims().iter().map(|d| rng.gen_range(d.lower + h..d.upper - h)).collect();
            if *name == "g-function" && x.iter().any(|v| (v - 0.5).abs() < 10.0 * h) {
                continue;
            }
            let g = b.gradient(&x);
            for i in 0..x.len() {
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[i] += h;
                xm[i] -= h;
                bench_err = bench_err.max(((b.value(&xp) - b.value(&xm)) / (2.0 * h) - g[i]).abs());
            }
            n += 1;
        }
    }
    verdict(
        kernel_err < 1e-5 && bench_err < 1e-5,
        format!(
            "max |FD - analytic|: kernel factors {:.1e} (10^4 probes, theta in [1e-2, 1e3]), benchmarks {:.1e} (10^4 probes each)",
            kernel_err, bench_err
        ),
    )
}

fn c8_designs() -> Verdict {
    let mut strata_ok = true;
    for (d, n, seed) in [(1, 7, 1), (3, 20, 2), (5, 50, 3), (20, 42, 4)] {
        let pts = initial_lhs(d, n, seed);
        for l in 0..d {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[l] * n as f64).floor() as usize).collect();
            bins.sort_unstable();
            strata_ok &= bins == (0..n).collect::<Vec<_>>();
        }
    }
    let one = voronoi_volumes(&[vec![0.3, 0.6]], 10_000, 1)[0];
    let two = voronoi_volumes(&[vec![0.25, 0.5], vec![0.75, 0.5]], 10_000, 2);
    let ok = strata_ok && (one - 1.0).abs() <= 0.02 && two.iter().all(|v| (v - 0.5).abs() <= 0.02);
    verdict(
        ok,
        format!(
            "LHS one point per stratum: {}; single-point volume {:.4}; symmetric pair {:.4}, {:.4} (tol 0.02)",
            strata_ok, one, two[0], two[1]
        ),
    )
}

fn converged_run(name: &str) -> RunOutcome {
    let mut c = RunConfig::for_builtin(name, 5e-6).unwrap();
    c.seed = 0;
    run(&c).unwrap()
}

fn c9_g_and_moon(ledger: &mut BoundLedger) -> Verdict {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, reference) in [("g-function", &G_FUNCTION_REFERENCE), ("moon", &MOON_REFERENCE)] {
        let t = Instant::now();
        let out = converged_run(name);
        ledger.add_run(name, &out);
        let r = &out.report;
        let dm = (0..r.dim()).map(|i| (r.main[i] - reference.main[i]).abs()).fold(0f64, f64::max);
        let dt = (0..r.dim()).map(|i| (r.total[i] - reference.total[i]).abs()).fold(0f64, f64::max);
        ok &= dm <= 0.02 && dt <= 0.03;
        parts.push(format!(
            "{} ({}, N={}, {:.0}s) max |dS| {:.4}, max |dST| {:.4}",
            name,
            out.stop_reason,
            out.data.len(),
            t.elapsed().as_secs_f64(),
            dm,
            dt
        ));
    }
    verdict(ok, format!("{} (tol 0.02 / 0.03)", parts.join("; ")))
}

/// Fails on a chosen batch.
struct Crashing {
    inner: BuiltinSimulator,
    calls: usize,
    fail_on: usize,
}

impl Simulator for Crashing {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> senseq::Result<Vec<f64>> {
        self.calls += 1;
        if self.calls == self.fail_on {
            return Err(senseq::Error::Evaluation { message: "interrupted".into(), output: String::new() });
        }
        self.inner.evaluate(points)
    }
}

fn c10_determinism() -> Verdict {
    let files = ["design.csv", "trace.csv", "folds.csv", "report.json"];
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let mut c = RunConfig::for_builtin("ishigami", 1e-12).unwrap();
    c.budget = 80;
    c.seed = 11;
    let mut outcomes = Vec::new();
    for dir in &dirs[..2] {
        c.output_dir = Some(dir.path().to_path_buf());
        outcomes.push(run(&c).unwrap());
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join(f)).unwrap();
    let replay = files.iter().all(|f| read(&dirs[0], f) == read(&dirs[1], f));

    c.output_dir = Some(dirs[2].path().to_path_buf());
    let mut sim = Crashing { inner: BuiltinSimulator::new("ishigami").unwrap(), calls: 0, fail_on: 4 };
    let interrupted = run_with(&c, &mut sim).is_err();
    c.resume = true;
    let resumed = run(&c).unwrap();
    let resume_same = resumed.report == outcomes[0].report && files.iter().all(|f| read(&dirs[0], f) == read(&dirs[2], f));
    verdict(
        replay && interrupted && resume_same,
        format!(
            "replay byte-identical: {}; interrupted at batch 4: {}; resumed run identical (report and files): {}",
            replay, interrupted, resume_same
        ),
    )
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut ledger = BoundLedger::default();
    let emit = |results: &mut Vec<(u32, &str, Verdict)>, id: u32, title: &'static str, v: Verdict| {
        println!("{} criterion {:>2} {}: {}", if v.pass { "PASS" } else { "FAIL" }, id, title, v.detail);
        results.push((id, title, v));
    };
    let guarded = |f: &mut dyn FnMut() -> Verdict| -> Verdict {
        match catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            }
        }
    };

    emit(&mut results, 5, "quadrature correctness", guarded(&mut c5_quadrature));
    emit(&mut results, 7, "derivative checks", guarded(&mut c7_derivatives));
    emit(&mut results, 8, "design properties", guarded(&mut c8_designs));
    let v = guarded(&mut || c4_oracle_equivalence(&mut ledger));
    emit(&mut results, 4, "oracle equivalence", v);
    emit(&mut results, 10, "determinism and resume", guarded(&mut c10_determinism));

    // Ishigami, Matern 3/2 ARD, LOLA-Voronoi, batch 10, all 300 samples
    let mut runs = Vec::new();
    let v = guarded(&mut || {
        for seed in 0..10 {
            let t = Instant::now();
            let mut c = RunConfig::for_builtin("ishigami", 1e-12).unwrap();
            c.seed = seed;
            let out = run(&c).unwrap();
            let r = &out.report;
            println!(
                "     ishigami seed {seed}: N={} S={} ST={} nu={} ({:.0}s)",
                out.data.len(),
                fmt_vec(&r.main, 4),
                fmt_vec(&r.total, 4),
                fmt_vec(&r.dgsm, 1),
                t.elapsed().as_secs_f64()
            );
            ledger.add_run(&format!("ishigami seed {seed}"), &out);
            runs.push(out);
        }
        verdict(true, "")
    });
    if v.pass {
        let (sobol, dgsm) = c1_sobol_and_c2_dgsm(&runs);
        emit(&mut results, 1, "Ishigami Sobol indices", sobol);
        emit(&mut results, 2, "Ishigami DGSM", dgsm);
        emit(&mut results, 3, "stopping-score magnitude", c3_stopping_magnitude(&runs));
    } else {
        for (id, title) in [(1, "Ishigami Sobol indices"), (2, "Ishigami DGSM"), (3, "stopping-score magnitude")] {
            emit(&mut results, id, title, verdict(false, v.detail.clone()));
        }
    }
    let v = guarded(&mut || c9_g_and_moon(&mut ledger));
    emit(&mut results, 9, "G-function and Moon", v);
    let v = guarded(&mut || c6_bound(&ledger));
    emit(&mut results, 6, "DGSM bound property", v);

    results.sort_by_key(|r| r.0);
    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed in {:.0}s{}",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!("; failed: {:?}", failed) }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
