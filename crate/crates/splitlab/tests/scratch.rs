// Temporary calibration probe; will be replaced by the acceptance suite.

use splitlab::events::NullSink;
use splitlab::harness::{self, grad_norm_probe, moving_average, ExperimentConfig};

fn config_for(t: usize, lr: f64) -> ExperimentConfig {
    let toml = format!(
        r#"
mode = "vanilla"
seed = 6
clients = 4
max_malicious = 0
rounds = {t}
updates_per_turn = 2
batch_size = 10
learning_rate = {lr}

[[arch.client]]
fan_in = 16
fan_out = 12
activation = "relu"

[[arch.ap]]
fan_in = 12
fan_out = 10
activation = "identity"

[dataset]
kind = "blobs"
classes = 10
dim = 16
spread = 1.2
shard_size = 500
shared_size = 200
test_size = 200
"#
    );
    ExperimentConfig::from_toml(&toml).unwrap()
}

#[test]
#[ignore]
fn convergence_probe() {
    let c: f64 = std::env::var("PROBE_C").unwrap().parse().unwrap();
    for t in [16usize, 64, 256] {
        let lr = c / (t as f64).sqrt();
        let config = config_for(t, lr);
        let arch = config.build_arch().unwrap();
        let bundle = config.build_bundle().unwrap();
        let train: Vec<_> = bundle
            .client_shards
            .iter()
            .flat_map(|s| s.iter().cloned())
            .collect();
        let out = harness::run_experiment(&config, &mut NullSink).unwrap();
        let probe: &[splitlab::Sample] = if std::env::var("PROBE_SET").as_deref() == Ok("shared") {
            &bundle.shared
        } else {
            &train
        };
        let grads: Vec<f64> = out
            .theta_starts
            .iter()
            .map(|theta| grad_norm_probe(&arch, theta, probe).unwrap())
            .collect();
        let avg: f64 = grads.iter().sum::<f64>() / grads.len() as f64;
        let ma = moving_average(&grads, 10).unwrap();
        println!(
            "T={t} lr={lr:.4}: train-grad avg {avg:.6} initial {:.6} final-MA {:.6} ratio {:.3}",
            grads[0],
            ma.last().unwrap(),
            ma.last().unwrap() / grads[0]
        );
    }
}
