//! Quick probe: fit the off-the-shelf preset on one simulated scenario and
//! report train/test metrics.
//!
//! Usage: cargo run --example simfit -- <scenario> <continuous|binary> <seed> [max_epochs]

use std::time::Instant;

use csn::data::{ResponseKind, Split};
use csn::model::{build_csn, treenet2_config, HeadKind};
use csn::simgen::{gen_benchmark, Scenario};
use csn::train::{evaluate, fit, Metric};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = Scenario::parse(args.get(1).map(String::as_str).unwrap_or("main_cont")).unwrap();
    let response = match args.get(2).map(String::as_str).unwrap_or("continuous") {
        "binary" => ResponseKind::Binary,
        _ => ResponseKind::Continuous,
    };
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let max_epochs: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(500);
    let patience: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(50);

    let head = match response {
        ResponseKind::Continuous => HeadKind::Regression,
        ResponseKind::Binary => HeadKind::Binary,
    };
    let t0 = Instant::now();
    let data = gen_benchmark(scenario, response, seed);
    eprintln!("data generated in {:.1?}", t0.elapsed());

    let mut cfg = treenet2_config(head, seed);
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    let stats = data.training_stats().unwrap();
    let model = build_csn(&cfg, &stats).unwrap();

    let t1 = Instant::now();
    let (fitted, history) = fit(model, &data, &cfg.train_config()).unwrap();
    let fit_time = t1.elapsed();

    let metric = Metric::for_kind(response);
    let report = |split: Split, name: &str| {
        let (x, y) = data.subset(&data.rows_for(split));
        let pred = fitted.predict(&x).unwrap();
        let v = evaluate(metric, &y, &pred).unwrap();
        eprintln!("{name} {} = {v:.4}", metric.label());
        v
    };
    report(Split::Train, "train");
    report(Split::Val, "val");
    report(Split::Test, "test");
    eprintln!(
        "fit: {:.1?}, best epoch {} of {} (restored: {})",
        fit_time,
        history.best_epoch,
        history.stopped_epoch + 1,
        history.restored_best
    );
}
