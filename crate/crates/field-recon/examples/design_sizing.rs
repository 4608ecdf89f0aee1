//! Sizing queries: leave one of {sensor count, harmonic count, measurement
//! SNR} unknown and solve for it against a target MSE.
//!
//! Reduced pool sizes keep this demo fast; the binary's `design` subcommand
//! uses full-fidelity defaults (eigen_m = 200, 50 realizations).

use field_recon::design::{design_query, DesignQuery, SolvedParameter};
use field_recon::filters::FilterKind;

fn small(mut q: DesignQuery) -> DesignQuery {
    q.eigen_m = 80;
    q.eigen_realizations = 15;
    q.trace_m = 40;
    q.trace_layouts = 10;
    q
}

fn main() {
    // How many sensors to reconstruct 2*100+1 harmonics at 30 dB
    // measurement SNR with MSE <= 3e-3?
    let mut q = small(DesignQuery::new(3e-3, FilterKind::Lmmse));
    q.m = Some(100);
    q.snr_m_db = Some(30.0);
    let a = design_query(&q).expect("feasible");
    if let SolvedParameter::SensorCount { beta, r } = a.solved {
        println!("sensors:   r ~= {r} (beta ~= {beta:.3}), mse {:.3e}", a.achieved_mse);
    }

    // How many harmonics can 1000 drifting sensors support (position SNR
    // 10 dB, displacement spread unknown to the sink) with MSE <= 5e-3?
    let mut q = small(DesignQuery::new(5e-3, FilterKind::Lmmse));
    q.r = Some(1000);
    q.snr_m_db = Some(30.0);
    q.snr_x_db = Some(10.0);
    let a = design_query(&q).expect("feasible");
    if let SolvedParameter::Harmonics { beta, m } = a.solved {
        println!("harmonics: M ~= {m} (beta ~= {beta:.3}), mse {:.3e}", a.achieved_mse);
    }

    // How accurate do the sensors need to be when the geometry is fixed and
    // the jitter-aware filter is used? Past the returned SNR_m, the MSE is
    // within 5% of the jitter-limited floor and better sensors buy nothing.
    let mut q = small(DesignQuery::new(5e-2, FilterKind::LmmseJitter));
    q.beta = Some(0.4);
    q.snr_x_db = Some(10.0);
    let a = design_query(&q).expect("feasible");
    if let SolvedParameter::SnrMDb { snr_m_db, mse_floor } = a.solved {
        println!(
            "sensor quality: SNR_m = {snr_m_db:.1} dB suffices (floor {mse_floor:.3e})"
        );
    }
}
