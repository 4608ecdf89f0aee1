//! Jittered-position model: the jitter-aware LMMSE filter against the
//! displacement-agnostic one, as measurement SNR sweeps at fixed position
//! SNR. The jitter-aware variant never does worse and pulls ahead past the
//! critical ratio; the lower-bound column shows how tight its floor is.

use field_recon::experiment::{csv_string, parse_config, run_experiment};

const CONFIG: &str = r#"
model = "B"
filters = ["lmmse", "lmmse_jitter"]
m = 10
trials = 100
seed = 42
eigen_m = 100
eigen_realizations = 20

[sweep]
snr_m_db = [0.0, 10.0, 20.0, 30.0, 40.0]

[fixed]
beta = 0.4
snr_x_db = 10.0
"#;

fn main() {
    let cfg = parse_config(CONFIG).expect("valid config");
    let rows = run_experiment(&cfg).expect("experiment runs");
    print!("{}", csv_string(&rows));
    eprintln!();
    eprintln!("at beta = 0.4 (past the critical ratio) and high SNR_m, the agnostic");
    eprintln!("filter's error keeps climbing while the jitter-aware one flattens to");
    eprintln!("a floor near its lower bound.");
}
