//! Synthetic benchmark scenarios over Uniform(-1,1) designs and the
//! bike-sharing ingestion path, all producing the common [`Dataset`] form.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{Dataset, ResponseKind, Split};
use crate::error::{CsnError, Result};
use crate::nncore::{sigmoid, Matrix};
use crate::util::mix_seed;

/// Default design size of the simulation protocol.
pub const DEFAULT_N: usize = 10_000;
/// Default companion test-set size.
pub const DEFAULT_TEST_N: usize = 50_000;
/// Number of simulated predictors; only the first six carry signal.
pub const DESIGN_P: usize = 30;

/// The eight closed-form scenarios. Each uses features x1..x6 only; the
/// remaining columns are noise features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    MainCont,
    MainJump,
    TwoWayCont,
    TwoWayJump,
    TwoWayPure,
    ThreeWayCont,
    ThreeWayJump,
    ThreeWayPure,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::MainCont,
        Scenario::MainJump,
        Scenario::TwoWayCont,
        Scenario::TwoWayJump,
        Scenario::TwoWayPure,
        Scenario::ThreeWayCont,
        Scenario::ThreeWayJump,
        Scenario::ThreeWayPure,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::MainCont => "main_cont",
            Scenario::MainJump => "main_jump",
            Scenario::TwoWayCont => "2way_cont",
            Scenario::TwoWayJump => "2way_jump",
            Scenario::TwoWayPure => "2way_pure",
            Scenario::ThreeWayCont => "3way_cont",
            Scenario::ThreeWayJump => "3way_jump",
            Scenario::ThreeWayPure => "3way_pure",
        }
    }

    pub fn parse(name: &str) -> Result<Scenario> {
        Scenario::ALL
            .iter()
            .find(|s| s.name() == name)
            .copied()
            .ok_or_else(|| CsnError::UnknownScenario {
                name: name.to_string(),
                valid: Scenario::ALL
                    .iter()
                    .map(|s| s.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }

    /// Evaluate the scenario's closed form at one design point.
    pub fn value(&self, x: &[f64]) -> f64 {
        scenario_value(*self, x)
    }
}

#[inline]
fn ind(cond: bool) -> f64 {
    if cond {
        1.0
    } else {
        0.0
    }
}

/// Shared continuous main effects: x1 + 2*x2^2 + 2*(1+x3)^(1/3) + 2*x4*(x4>0).
#[inline]
fn main_terms(x: &[f64]) -> f64 {
    x[0] + 2.0 * x[1] * x[1] + 2.0 * (1.0 + x[2]).cbrt() + 2.0 * x[3] * ind(x[3] > 0.0)
}

/// Exact evaluation of the named closed form; indicator factors are {0,1}.
pub fn scenario_value(scenario: Scenario, x: &[f64]) -> f64 {
    assert!(x.len() >= 6, "scenario needs at least 6 features, got {}", x.len());
    use std::f64::consts::PI;
    let smooth_tail = |x: &[f64]| (2.0 * PI * x[4]).sin() + x[5].exp();
    let jump_tail = |x: &[f64]| ind(x[4] > 0.0) + 2.0 * ind(x[5] > 0.5);
    let pure_2way =
        |x: &[f64]| 2.0 * x[0] * x[1] + (PI * (x[2] + x[3])).sin() + x[4] * (PI * x[5]).sin();
    let cont_2way = |x: &[f64]| {
        2.0 * x[0] * x[1] + 2.0 * (PI * (x[2] + x[3])).sin() + 2.0 * (x[4] * x[5]).abs()
    };
    let jump_2way = |x: &[f64]| {
        2.0 * ind(x[0] > 0.0) * ind(x[1] > 0.0)
            + 2.0 * ind(x[2] > 0.0) * ind(x[3] > 0.0)
            + 2.0 * x[4] * ind(x[5] > 0.0)
    };
    match scenario {
        Scenario::MainCont => main_terms(x) + smooth_tail(x),
        Scenario::MainJump => main_terms(x) + jump_tail(x),
        Scenario::TwoWayCont => main_terms(x) + smooth_tail(x) + cont_2way(x),
        Scenario::TwoWayJump => main_terms(x) + jump_tail(x) + jump_2way(x),
        Scenario::TwoWayPure => pure_2way(x),
        Scenario::ThreeWayCont => {
            main_terms(x)
                + smooth_tail(x)
                + cont_2way(x)
                + 3.0 * x[0] * (x[1] * x[2]).abs().exp()
                + 3.0 * x[4] * (PI * (x[3] + 1.5 * x[5])).sin()
        }
        Scenario::ThreeWayJump => {
            main_terms(x)
                + jump_tail(x)
                + jump_2way(x)
                + 3.0 * ind(x[0] > 0.0) * ind(x[1] > 0.5) * ind(x[2] < -0.5)
                + 3.0 * ind(x[3] > 0.0) * ind(x[4] < -0.5) * ind(x[5] < -0.5)
        }
        Scenario::ThreeWayPure => {
            pure_2way(x)
                + 2.0 * x[0] * x[1] * x[2]
                + 2.0 * x[3] * (PI * (x[4] + x[5])).sin()
        }
    }
}

/// An `n x p` design of i.i.d. Uniform(-1,1) draws.
pub fn gen_design(n: usize, p: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Matrix::zeros(n, p);
    for v in m.values_mut() {
        *v = rng.random_range(-1.0..1.0);
    }
    m
}

/// Solve `mean(sigmoid(beta0 + f)) = 0.5` over the sample by bisection,
/// to within 1e-6 of balance. The objective is strictly increasing in beta0.
pub fn calibrate_beta0(f_sample: &[f64]) -> f64 {
    assert!(!f_sample.is_empty(), "empty calibration sample");
    let balance = |b: f64| {
        f_sample.iter().map(|&f| sigmoid(b + f)).sum::<f64>() / f_sample.len() as f64 - 0.5
    };
    let mut lo = -f_sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut hi = -f_sample.iter().cloned().fold(f64::INFINITY, f64::min);
    // Degenerate constant sample: the root is exactly -f.
    if hi - lo < 1e-15 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = balance(mid);
        if v.abs() < 1e-6 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn simulate_block(
    scenario: Scenario,
    n: usize,
    response: ResponseKind,
    beta0: Option<f64>,
    design_seed: u64,
    noise_seed: u64,
) -> (Matrix, Vec<f64>) {
    let x = gen_design(n, DESIGN_P, design_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let y = (0..n)
        .map(|r| {
            let f = scenario.value(x.row(r));
            match response {
                ResponseKind::Continuous => f + rng.sample::<f64, _>(StandardNormal),
                ResponseKind::Binary => {
                    let p = sigmoid(beta0.expect("calibrated") + f);
                    ind(rng.random_range(0.0..1.0) < p)
                }
            }
        })
        .collect();
    (x, y)
}

/// Simulate `n` observations split 70/30 train/validation plus a companion
/// test block of `n_test` rows drawn from an independent seed branch. Binary
/// responses use an intercept calibrated on 100k fresh draws so classes are
/// balanced.
pub fn gen_dataset(
    scenario: Scenario,
    n: usize,
    n_test: usize,
    response: ResponseKind,
    seed: u64,
) -> Dataset {
    assert!(n >= 1, "need at least one observation");
    let beta0 = match response {
        ResponseKind::Binary => {
            let calib = gen_design(100_000, 6, mix_seed(seed, 5));
            let f: Vec<f64> = (0..calib.rows())
                .map(|r| scenario.value(calib.row(r)))
                .collect();
            Some(calibrate_beta0(&f))
        }
        ResponseKind::Continuous => None,
    };

    let (x_main, y_main) =
        simulate_block(scenario, n, response, beta0, mix_seed(seed, 1), mix_seed(seed, 3));
    let n_train = (n as f64 * 0.7).round() as usize;
    let mut split: Vec<Split> = (0..n)
        .map(|i| if i < n_train { Split::Train } else { Split::Val })
        .collect();

    let (x, y) = if n_test > 0 {
        let (x_test, y_test) = simulate_block(
            scenario,
            n_test,
            response,
            beta0,
            mix_seed(seed, 2),
            mix_seed(seed, 4),
        );
        split.extend(std::iter::repeat(Split::Test).take(n_test));
        let mut values = x_main.values().to_vec();
        values.extend_from_slice(x_test.values());
        let x = Matrix::from_vec(n + n_test, DESIGN_P, values).expect("consistent shapes");
        let mut y = y_main;
        y.extend(y_test);
        (x, y)
    } else {
        (x_main, y_main)
    };

    Dataset {
        x,
        y,
        kind: response,
        feature_names: (1..=DESIGN_P).map(|j| format!("x{j}")).collect(),
        split,
        seed,
        scenario: Some(scenario.name().to_string()),
    }
}

/// The benchmark protocol sizes: 10,000 observations plus a 50,000-row test
/// block.
pub fn gen_benchmark(scenario: Scenario, response: ResponseKind, seed: u64) -> Dataset {
    gen_dataset(scenario, DEFAULT_N, DEFAULT_TEST_N, response, seed)
}

/// The eleven predictors read from the hourly bike-sharing file, in order.
pub const BIKE_FEATURES: [&str; 11] = [
    "season",
    "yr",
    "mnth",
    "hr",
    "holiday",
    "weekday",
    "workingday",
    "weathersit",
    "temp",
    "hum",
    "windspeed",
];

/// Load the UCI hourly bike-sharing CSV: eleven numeric predictors, target
/// `ln(cnt)`, rows shuffled by `seed` into 50/25/25 train/val/test.
pub fn load_bike_sharing(path: &Path, seed: u64) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut col_of = Vec::with_capacity(BIKE_FEATURES.len());
    let mut missing = Vec::new();
    for name in BIKE_FEATURES {
        match headers.iter().position(|h| h == name) {
            Some(i) => col_of.push(i),
            None => missing.push(name),
        }
    }
    let cnt_col = headers.iter().position(|h| h == "cnt");
    if cnt_col.is_none() {
        missing.push("cnt");
    }
    if !missing.is_empty() {
        return Err(CsnError::Data(format!(
            "bike-sharing file lacks columns: {}",
            missing.join(", ")
        )));
    }
    let cnt_col = cnt_col.expect("checked");

    let mut values = Vec::new();
    let mut y = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        // Header is line 1; data starts at line 2.
        let line_no = line + 2;
        for (&c, name) in col_of.iter().zip(BIKE_FEATURES) {
            let v: f64 = record
                .get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| {
                    CsnError::Data(format!("line {line_no}: cannot parse `{name}`"))
                })?;
            values.push(v);
        }
        let cnt: f64 = record
            .get(cnt_col)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| CsnError::Data(format!("line {line_no}: cannot parse `cnt`")))?;
        if !(cnt > 0.0) {
            return Err(CsnError::Data(format!(
                "line {line_no}: count must be positive, got {cnt}"
            )));
        }
        y.push(cnt.ln());
    }
    let n = y.len();
    if n == 0 {
        return Err(CsnError::Data("bike-sharing file has no data rows".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, 6)));
    let n_train = n / 2;
    let n_val = n / 4;
    let mut split = vec![Split::Test; n];
    for (pos, &row) in order.iter().enumerate() {
        split[row] = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let ds = Dataset {
        x: Matrix::from_vec(n, BIKE_FEATURES.len(), values)?,
        y,
        kind: ResponseKind::Continuous,
        feature_names: BIKE_FEATURES.iter().map(|s| s.to_string()).collect(),
        split,
        seed,
        scenario: None,
    };
    ds.validate()?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn origin_values_by_hand() {
        let x = [0.0; 30];
        assert_eq!(scenario_value(Scenario::MainCont, &x), 3.0);
        assert_eq!(scenario_value(Scenario::MainJump, &x), 2.0);
        assert_eq!(scenario_value(Scenario::TwoWayPure, &x), 0.0);
    }

    #[test]
    fn unknown_scenario_lists_valid_names() {
        let err = Scenario::parse("bogus").unwrap_err().to_string();
        for s in Scenario::ALL {
            assert!(err.contains(s.name()), "{err}");
        }
    }

    #[test]
    fn continuous_and_jump_pairs_share_main_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut x = [0.0; 30];
            for v in x.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            // Zero out x5, x6 so only the shared x1..x4 block remains.
            let mut head = x;
            head[4] = 0.0;
            head[5] = 0.0;
            let cont = scenario_value(Scenario::MainCont, &head);
            let jump = scenario_value(Scenario::MainJump, &head);
            // With x5 = x6 = 0 the tails are sin(0)+e^0 = 1 and 0+0 = 0.
            assert!((cont - 1.0 - jump).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_features_have_no_effect() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for scenario in Scenario::ALL {
            let mut x = [0.0; 30];
            for v in x.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let base = scenario_value(scenario, &x);
            for j in 6..30 {
                let mut probe = x;
                probe[j] = rng.random_range(-1.0..1.0);
                assert_eq!(scenario_value(scenario, &probe), base, "{scenario:?} x{j}");
            }
        }
    }

    #[test]
    fn design_support_and_determinism() {
        let a = gen_design(500, 30, 77);
        assert!(a.values().iter().all(|&v| v > -1.0 && v < 1.0));
        let b = gen_design(500, 30, 77);
        assert_eq!(a, b);
        assert_ne!(a, gen_design(500, 30, 78));
    }

    #[test]
    fn design_column_means_near_zero() {
        let x = gen_design(50_000, 30, 11);
        let sums = x.col_sums();
        for (j, s) in sums.iter().enumerate() {
            let mean = s / 50_000.0;
            assert!(mean.abs() < 0.02, "column {j} mean {mean}");
        }
    }

    #[test]
    fn beta0_constant_and_symmetric_samples() {
        let c = 1.7;
        let b = calibrate_beta0(&[c; 100]);
        assert!((b + c).abs() < 1e-6);
        // Mirrored pairs: symmetry forces zero.
        let sym: Vec<f64> = (1..=50).flat_map(|i| [i as f64 / 10.0, -(i as f64) / 10.0]).collect();
        assert!(calibrate_beta0(&sym).abs() < 1e-6);
    }

    #[test]
    fn beta0_matches_grid_search_oracle() {
        let design = gen_design(10_000, 6, 13);
        let f: Vec<f64> = (0..design.rows())
            .map(|r| scenario_value(Scenario::TwoWayPure, design.row(r)))
            .collect();
        let ours = calibrate_beta0(&f);
        // Dense grid oracle at 1e-4 resolution over the same sample.
        let balance =
            |b: f64| f.iter().map(|&v| sigmoid(b + v)).sum::<f64>() / f.len() as f64 - 0.5;
        let mut best = (f64::INFINITY, 0.0);
        let mut b = -0.5;
        while b <= 0.5 {
            let v = balance(b).abs();
            if v < best.0 {
                best = (v, b);
            }
            b += 1e-4;
        }
        assert!((ours - best.1).abs() <= 2e-4, "{ours} vs {}", best.1);
    }

    #[test]
    fn continuous_dataset_noise_variance() {
        let ds = gen_dataset(Scenario::MainCont, 30_000, 0, ResponseKind::Continuous, 5);
        let resid: Vec<f64> = (0..ds.n_rows())
            .map(|r| ds.y[r] - scenario_value(Scenario::MainCont, ds.x.row(r)))
            .collect();
        let mean = resid.iter().sum::<f64>() / resid.len() as f64;
        let var =
            resid.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (resid.len() - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "residual variance {var}");
    }

    #[test]
    fn dataset_split_sizes_and_determinism() {
        let ds = gen_dataset(Scenario::MainJump, 1000, 500, ResponseKind::Continuous, 8);
        assert_eq!(ds.split_counts(), (700, 300, 500));
        let again = gen_dataset(Scenario::MainJump, 1000, 500, ResponseKind::Continuous, 8);
        assert_eq!(ds.x, again.x);
        assert_eq!(ds.y, again.y);
    }

    #[test]
    fn binary_datasets_are_roughly_balanced() {
        let ds = gen_dataset(Scenario::MainCont, 10_000, 0, ResponseKind::Binary, 31);
        let frac = ds.y.iter().sum::<f64>() / ds.y.len() as f64;
        assert!((0.47..=0.53).contains(&frac), "class-1 fraction {frac}");
        assert!(ds.y.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    fn write_bike_fixture(n: usize) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hour.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(
            f,
            "instant,dteday,season,yr,mnth,hr,holiday,weekday,workingday,weathersit,temp,atemp,hum,windspeed,casual,registered,cnt"
        )
        .unwrap();
        for i in 0..n {
            let hr = i % 24;
            let cnt = 1 + (i % 40) * (1 + hr % 3);
            writeln!(
                f,
                "{},2011-01-{:02},1,0,1,{},0,{},{},1,0.24,0.28,0.81,0.19,{},{},{}",
                i + 1,
                1 + i / 24 % 28,
                hr,
                i % 7,
                if i % 7 < 5 { 1 } else { 0 },
                cnt / 3,
                cnt - cnt / 3,
                cnt
            )
            .unwrap();
        }
        (dir, path)
    }

    #[test]
    fn bike_loader_schema_and_splits() {
        let (_dir, path) = write_bike_fixture(403);
        let ds = load_bike_sharing(&path, 17).unwrap();
        assert_eq!(ds.n_rows(), 403);
        assert_eq!(ds.n_features(), 11);
        assert_eq!(ds.feature_names, BIKE_FEATURES.to_vec());
        // 50/25/25 with floor proportions (+-1 row absorbed by test).
        let (tr, va, te) = ds.split_counts();
        assert_eq!(tr, 201);
        assert_eq!(va, 100);
        assert_eq!(te, 102);
        // Count of 1 maps to target 0.
        let one_rows: Vec<usize> = (0..403).filter(|i| 1 + (i % 40) * (1 + (i % 24) % 3) == 1).collect();
        assert!(!one_rows.is_empty());
        for r in one_rows {
            assert_eq!(ds.y[r], 0.0);
        }
    }

    #[test]
    fn bike_loader_reports_missing_columns_and_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hour.csv");
        std::fs::write(&path, "instant,season,yr\n1,1,0\n").unwrap();
        let err = load_bike_sharing(&path, 0).unwrap_err().to_string();
        assert!(err.contains("mnth") && err.contains("cnt"), "{err}");

        let (_dir2, path2) = write_bike_fixture(10);
        let text = std::fs::read_to_string(&path2).unwrap();
        let broken = text.replace("0.24", "not-a-number");
        std::fs::write(&path2, broken).unwrap();
        let err = load_bike_sharing(&path2, 0).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("temp"), "{err}");
    }
}
