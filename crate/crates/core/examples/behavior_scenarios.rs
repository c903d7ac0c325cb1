//! One lag, a merger 51 m ahead and four parameter sets, each favoring one
//! behavior. Prints the merger's lead over the lag, the lag's time gap to its
//! leader and its acceleration every 4 s.

use merge_game::error::Result;
use merge_game::sim::run_scenario;
use merge_game::sim::scenarios::{behavior_parameter_sets, behavior_scenario, LAG_ID, LEADER_ID, MERGER_ID};

fn main() -> Result<()> {
    for (action, params) in behavior_parameter_sets() {
        let log = run_scenario(&behavior_scenario(params, 7))?;
        let lag: Vec<_> = log.vehicle(LAG_ID).collect();
        let merger: Vec<_> = log.vehicle(MERGER_ID).collect();
        let leader: Vec<_> = log.vehicle(LEADER_ID).collect();
        println!("{}", action.as_str());
        println!("  {:>5} {:>9} {:>9} {:>8} {:>13}", "t (s)", "dx (m)", "gap (s)", "a", "behavior");
        for k in (0..lag.len()).step_by(400) {
            let (l, m, f) = (lag[k], merger[k], leader[k]);
            println!(
                "  {:>5.1} {:>9.2} {:>9.3} {:>8.3} {:>13}",
                l.t,
                m.x - l.x,
                (f.x - l.x) / l.v,
                l.a,
                l.decision.map_or("-", |d| d.as_str())
            );
        }
    }
    Ok(())
}
