//! Simulates a few merges, converts them to the event format and labels the
//! lag's time-gap profile.

use merge_game::data::{event_from_log, label_event, LabelOptions};
use merge_game::error::Result;
use merge_game::sim::run_scenario;
use merge_game::sim::scenarios::{behavior_parameter_sets, behavior_scenario};

fn main() -> Result<()> {
    let opts = LabelOptions::default();
    for (action, params) in behavior_parameter_sets() {
        let config = behavior_scenario(params, 3);
        let log = run_scenario(&config)?;
        let event = event_from_log(&log, &config, action.as_str(), "demo", 10)?;
        let gap = event.time_gap();
        println!(
            "{} ({} samples, time gap {:.2} s -> {:.2} s)",
            event.event_id,
            event.t.len(),
            gap[0],
            gap[gap.len() - 1]
        );
        for e in label_event(&event, &opts)? {
            println!("  {:>6.1} s .. {:>6.1} s  {}", e.t_start, e.t_end, e.label);
        }
    }
    Ok(())
}
