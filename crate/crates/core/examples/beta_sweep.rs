//! Replays the yield-behind scenario 50 times at each β and reports how
//! concentrated the lag's behavior stays.

use merge_game::error::Result;
use merge_game::sim::scenarios::{behavior_parameter_sets, behavior_scenario};
use merge_game::sim::sweep_beta;

fn main() -> Result<()> {
    let (_, params) = behavior_parameter_sets()[0];
    let rows = sweep_beta(&behavior_scenario(params, 11), &[0.01, 0.1, 1.0, 10.0], 50)?;
    println!("{:>6} {:>22} {:>13} {:>9} {:>8}", "beta", "counts (YB YA Bk DN)", "mode", "share", "entropy");
    for r in rows {
        println!(
            "{:>6} {:>22} {:>13} {:>9.2} {:>8.3}",
            r.beta,
            format!("{:?}", r.counts),
            r.mode.as_str(),
            r.mode_frequency,
            r.entropy
        );
    }
    Ok(())
}
