#![allow(dead_code)]

use senseq::analytic::{self, FactorIntegralTable};
use senseq::benchmarks::{self, Benchmark};
use senseq::design::initial_lhs;
use senseq::domain::{DesignData, InputSpace, Provenance};
use senseq::kernels::KernelFamily;
use senseq::surrogate::{fit, AffineTensorSurrogate, FitConfig};

/// Saltelli/Jansen estimates on the true functions, base size 2^17, seed 2024.
pub const REFERENCE_BASE: usize = 1 << 17;
pub const REFERENCE_SEED: u64 = 2024;

pub struct Reference {
    pub main: &'static [f64],
    pub main_se: &'static [f64],
    pub total: &'static [f64],
    pub total_se: &'static [f64],
}

pub const G_FUNCTION_REFERENCE: Reference = Reference {
    main: &[0.5162140667240447, 0.12265649323604022, 0.0568373647143694],
    main_se: &[0.0028375117006526297, 0.00433309083736464, 0.004034922887946176],
    total: &[0.7900379951741439, 0.34789478054190215, 0.17867900077874105],
    total_se: &[0.004814828824626668, 0.0024838304531148163, 0.001404829621219167],
};

const M_INERT: f64 = -0.0013741357991108316;
const M_INERT_SE: f64 = 0.002778953264039713;

pub const MOON_REFERENCE: Reference = Reference {
    main: &[
        0.004237770951282416, M_INERT, M_INERT, M_INERT, M_INERT, M_INERT, 0.30056894710915794, M_INERT,
        M_INERT, M_INERT, M_INERT, 0.30773560623784235, M_INERT, M_INERT, M_INERT, M_INERT, M_INERT,
        0.14019969650404907, 0.017724062176882494, M_INERT,
    ],
    main_se: &[
        0.003105880508984713, M_INERT_SE, M_INERT_SE, M_INERT_SE, M_INERT_SE, M_INERT_SE, 0.0028652240925027537,
        M_INERT_SE, M_INERT_SE, M_INERT_SE, M_INERT_SE, 0.002819132397231476, M_INERT_SE, M_INERT_SE,
        M_INERT_SE, M_INERT_SE, M_INERT_SE, 0.002809290911031158, 0.002957664809973226, M_INERT_SE,
    ],
    total: &[
        0.12143966789840263, 0.0, 0.0, 0.0, 0.0, 0.0, 0.4108983018525776, 0.0, 0.0, 0.0, 0.0, 0.4097838243577833,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.18883807371681252, 0.08900419353971674, 0.0,
    ],
    total_se: &[
        0.00079124560904658, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0021324306713787957, 0.0, 0.0, 0.0, 0.0,
        0.0021237500958134967, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0010434406156814328, 0.0004992612521702387, 0.0,
    ],
};

/// Exact indices of the G-function: factor variances `1 / (3 (1 + a_i)^2)`.
pub fn g_function_exact() -> (Vec<f64>, Vec<f64>) {
    let vi: Vec<f64> = benchmarks::GFunction::A.iter().map(|a| 1.0 / (3.0 * (1.0 + a) * (1.0 + a))).collect();
    let v = vi.iter().map(|x| 1.0 + x).product::<f64>() - 1.0;
    let main = vi.iter().map(|x| x / v).collect();
    let total = (0..3)
        .map(|i| vi[i] * (0..3).filter(|&j| j != i).map(|j| 1.0 + vi[j]).product::<f64>() / v)
        .collect();
    (main, total)
}

/// Exact indices of the four-term Moon function, from its ANOVA terms in
/// centered variables `z = x - 1/2`.
pub fn moon_exact() -> (Vec<f64>, Vec<f64>) {
    let (a, b, c, e) = (-19.71f64, 23.72f64, -13.34f64, 28.99f64);
    let v1 = (a + b).powi(2) / 48.0;
    let v18 = a * a / 48.0;
    let v19 = (b / 2.0 + c).powi(2) / 12.0 + c * c / 180.0;
    let v7 = e * e / 48.0;
    let (v1_18, v1_19, v7_12) = (a * a / 144.0, b * b / 144.0, e * e / 144.0);
    let v = v1 + v18 + v19 + 2.0 * v7 + v1_18 + v1_19 + v7_12;
    let mut main = vec![0.0; 20];
    let mut total = vec![0.0; 20];
    main[0] = v1 / v;
    main[17] = v18 / v;
    main[18] = v19 / v;
    main[6] = v7 / v;
    main[11] = v7 / v;
    total[0] = (v1 + v1_18 + v1_19) / v;
    total[17] = (v18 + v1_18) / v;
    total[18] = (v19 + v1_19) / v;
    total[6] = (v7 + v7_12) / v;
    total[11] = (v7 + v7_12) / v;
    (main, total)
}

/// Maximin LHS design of `f` on `space`, in design order.
pub fn lhs_data(space: &InputSpace, n: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> DesignData {
    let unit = initial_lhs(space.dim(), n, seed);
    let points: Vec<Vec<f64>> = unit.iter().map(|u| space.denormalize(u).unwrap()).collect();
    let y = points.iter().map(|p| f(p)).collect();
    DesignData::new(space.clone(), points, y, vec![Provenance::Initial; n]).unwrap()
}

pub fn benchmark_data(b: &dyn Benchmark, n: usize, seed: u64) -> DesignData {
    lhs_data(&b.space(), n, seed, |x| b.value(x))
}

/// Kriging fit plus its integral table (with derivatives).
pub fn fitted(data: &DesignData, family: KernelFamily, seed: u64) -> (AffineTensorSurrogate, FactorIntegralTable) {
    let mut fc = FitConfig::kriging(family);
    fc.search.seed = seed;
    let model = fit(data, &fc).unwrap().model;
    let table = analytic::build_integral_table(&model, analytic::DEFAULT_QUAD_ORDER, true).unwrap();
    (model, table)
}

/// Fitted 2-D and 3-D surrogates used by the oracle-equivalence and bound
/// checks.
pub fn oracle_surrogates() -> Vec<(String, AffineTensorSurrogate, FactorIntegralTable)> {
    use std::f64::consts::PI;
    let mut out = Vec::new();
    let ishigami = benchmarks::builtin("ishigami").unwrap();
    let g = benchmarks::builtin("g-function").unwrap();
    let square = InputSpace::unit(2).unwrap();
    let cases: Vec<(&str, DesignData, KernelFamily)> = vec![
        ("ishigami-matern", benchmark_data(ishigami.as_ref(), 40, 1), KernelFamily::Matern32),
        ("ishigami-se", benchmark_data(ishigami.as_ref(), 60, 2), KernelFamily::SquaredExponential),
        ("g-function-matern", benchmark_data(g.as_ref(), 40, 3), KernelFamily::Matern32),
        (
            "sine-2d-matern",
            lhs_data(&square, 30, 4, |x| (2.0 * PI * x[0]).sin() + x[0] * x[1] * x[1]),
            KernelFamily::Matern32,
        ),
        ("exp-cos-2d-se", lhs_data(&square, 30, 5, |x| x[0].exp() * (3.0 * x[1]).cos()), KernelFamily::SquaredExponential),
    ];
    for (name, data, family) in cases {
        let (m, t) = fitted(&data, family, 7);
        out.push((name.to_string(), m, t));
    }
    let mut fc = FitConfig::ls_svm();
    fc.family = KernelFamily::Matern32;
    let data = lhs_data(&square, 40, 6, |x| (x[0] - 0.3).abs() + x[1]);
    let m = fit(&data, &fc).unwrap().model;
    let t = analytic::build_integral_table(&m, analytic::DEFAULT_QUAD_ORDER, true).unwrap();
    out.push(("kink-2d-lssvm".to_string(), m, t));
    out
}
