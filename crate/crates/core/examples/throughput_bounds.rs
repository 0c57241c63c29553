//! Closed-form throughput with no CSIT and with perfect CSIT.

use linksim::numerics::{db_to_linear, lambert_w};
use linksim::rate_adapt::{no_csit_threshold, throughput_no_csit, throughput_perfect_csit};

fn main() -> linksim::Result<()> {
    println!("snr_db  no_csit  rate     perfect  ln(1+P)");
    for db in (-10..=30).step_by(5) {
        let p = db_to_linear(db as f64);
        let rate = lambert_w(p)?;
        println!(
            "{db:6}  {:.4}   {rate:.4}   {:.4}   {:.4}",
            throughput_no_csit(p)?,
            throughput_perfect_csit(p)?,
            p.ln_1p(),
        );
        debug_assert!((no_csit_threshold(p)? - rate.exp_m1() / p).abs() < 1e-12);
    }
    Ok(())
}
