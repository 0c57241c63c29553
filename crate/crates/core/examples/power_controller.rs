//! Reinforcement HARQ power control: a packet trace, then a reduced tuning
//! run against the uniform baseline.

use linksim::channel::FadingParams;
use linksim::harq::{tune_alg2, Alg2Tuning, HarqConfig, HarqSession, PowerController};
use linksim::numerics::{linear_to_db, SearchGrid};

fn main() -> linksim::Result<()> {
    let params = FadingParams::new(0.9, 11)?;
    let harq = HarqConfig::new(1.0, 2, 1e-1)?;

    let controller = PowerController::new(5.0, vec![0.05, 0.2], vec![0.5, 0.3])?;
    println!("packet  rounds  powers                decoded");
    let mut session = HarqSession::with_controller(params, harq, controller)?;
    for k in 0..8 {
        let t = session.next_packet();
        let powers: Vec<String> = t.powers.iter().map(|p| format!("{p:.3}")).collect();
        println!("{k:6}  {:6}  {:20}  {:?}", t.rounds(), powers.join(" "), t.decoded_round);
    }

    let tuning = Alg2Tuning {
        d_grid: SearchGrid::log(1e-3, 0.5, 4)?,
        d_up_grid: SearchGrid::log(1e-2, 5.0, 4)?,
        initial_power_span: SearchGrid::log(0.3, 3.0, 7)?,
        search_packets: 20_000,
        validation_packets: 200_000,
        ..Alg2Tuning::default()
    };
    let out = tune_alg2(params, &harq, &tuning)?;
    let v = &out.validation;
    println!("\nuniform reference  {:.3} dB", linear_to_db(out.reference_power));
    println!(
        "tuned controller   {:.3} dB, outage {:.4} ± {:.4}, d {:?}, d' {:?}",
        v.avg_power_db,
        v.outage_prob,
        v.outage_ci,
        out.controller.d(),
        out.controller.d_up()
    );
    println!("candidates rejected at validation: {}", out.rejected);
    Ok(())
}
