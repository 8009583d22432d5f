//! Diagnostic: epoch-by-epoch validation logloss / AUC trajectory of a
//! binary fit, to see what early stopping should monitor.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use csn::data::{ResponseKind, Split};
use csn::model::{build_csn, loss_from_scores, treenet2_config, HeadKind, Loss};
use csn::nncore::{adam_update, sigmoid, AdamState};
use csn::simgen::{gen_benchmark, Scenario};
use csn::train::{evaluate, Metric};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let scenario = Scenario::parse(args.get(1).map(String::as_str).unwrap_or("2way_pure")).unwrap();
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(200);

    let data = gen_benchmark(scenario, ResponseKind::Binary, seed);
    let cfg = treenet2_config(HeadKind::Binary, seed);
    let stats = data.training_stats().unwrap();
    let mut model = build_csn(&cfg, &stats).unwrap();

    let (x_train, y_train) = data.subset(&data.rows_for(Split::Train));
    let (x_val, y_val) = data.subset(&data.rows_for(Split::Val));
    let (x_test, y_test) = data.subset(&data.rows_for(Split::Test));
    let n = x_train.rows();
    let batch = (0.01 * n as f64).ceil() as usize;
    let mut params = model.pack_params();
    let mut adam = AdamState::new(params.len(), cfg.lr, cfg.decay);
    let mut order: Vec<usize> = (0..n).collect();

    println!("epoch,val_logloss,val_auc,test_auc");
    for epoch in 0..epochs {
        adam.set_epoch(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (epoch as u64 + 77));
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xb = x_train.select_rows(chunk);
            let yb: Vec<f64> = chunk.iter().map(|&i| y_train[i]).collect();
            let (_, grads) = model.loss_and_gradients(&xb, &yb, Loss::LogLoss).unwrap();
            let (p2, a2) = adam_update(&params, &grads, &adam).unwrap();
            params = p2;
            adam = a2;
            model.unpack_params(&params).unwrap();
        }
        if epoch % 5 == 0 || epoch == epochs - 1 {
            let val_scores = model.scores(&x_val).unwrap();
            let val_ll = loss_from_scores(Loss::LogLoss, &val_scores, &y_val);
            let val_probs: Vec<f64> = val_scores.iter().map(|&s| sigmoid(s)).collect();
            let val_auc = evaluate(Metric::Auc, &y_val, &val_probs).unwrap();
            let test_scores = model.scores(&x_test).unwrap();
            let test_probs: Vec<f64> = test_scores.iter().map(|&s| sigmoid(s)).collect();
            let test_auc = evaluate(Metric::Auc, &y_test, &test_probs).unwrap();
            println!("{epoch},{val_ll:.5},{val_auc:.4},{test_auc:.4}");
        }
        let _ = z_val;
        let _ = z_test;
    }
}
