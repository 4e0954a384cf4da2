use hal_loss::experiments::DataConfig;
use hal_loss::synth::generate_regression;
use hal_loss::trainer::{train, TrainConfig};

fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    xs.windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

#[test]
fn smoothed_loss_is_non_increasing_on_default_data() {
    let (reg, cls) = DataConfig::default().generate().unwrap();
    let r = train(&TrainConfig::default(), &reg, &cls).unwrap();
    let totals: Vec<f64> = r.loss_trajectory.iter().map(|c| c.total).collect();
    assert_eq!(totals.len(), 2001);
    let smooth = moving_average(&totals, 100);
    for (i, w) in smooth.windows(2).enumerate() {
        assert!(
            w[1] <= w[0],
            "smoothed loss rose at window {i}: {} -> {}",
            w[0],
            w[1]
        );
    }
}

#[test]
fn sigma_matches_residual_rms() {
    for (sigma_true, seed) in [(0.1, 3), (0.3, 4), (0.6, 5)] {
        let data = DataConfig {
            n_reg: 4000,
            sigma_true,
            data_seed: seed,
            ..Default::default()
        };
        let (reg, cls) = data.generate().unwrap();
        let cfg = TrainConfig {
            beta: 0.1,
            iterations: 5000,
            record_every: 5000,
            ..Default::default()
        };
        let r = train(&cfg, &reg, &cls).unwrap();
        let rel = (r.sigma1_hat - r.final_residual_rms).abs() / r.final_residual_rms;
        assert!(
            rel < 0.05,
            "σ={sigma_true}: {} vs rms {}",
            r.sigma1_hat,
            r.final_residual_rms
        );
        assert!((r.sigma1_hat - sigma_true).abs() < 0.15 * sigma_true);
    }
}

#[test]
fn noiseless_regression_drives_sigma_down() {
    let w = DataConfig::default().true_weights;
    let reg = generate_regression(1000, &w, 0.0, 9).unwrap();
    let (_, cls) = DataConfig::default().generate().unwrap();
    let cfg = TrainConfig {
        class_weight: 0.0,
        iterations: 5000,
        record_every: 5000,
        ..Default::default()
    };
    let r = train(&cfg, &reg, &cls).unwrap();
    assert!(r.sigma1_hat <= 0.05, "{}", r.sigma1_hat);
}

#[test]
fn reports_are_reproducible() {
    let (reg, cls) = DataConfig::default().generate().unwrap();
    let cfg = TrainConfig {
        iterations: 300,
        seed: 11,
        ..Default::default()
    };
    let a = serde_json::to_string(&train(&cfg, &reg, &cls).unwrap()).unwrap();
    let b = serde_json::to_string(&train(&cfg, &reg, &cls).unwrap()).unwrap();
    assert_eq!(a, b);
}
