//! Two driver populations, one prone to yielding behind and one to
//! blocking, calibrated one lag at a time.

use merge_game::calibrate::{calibrate, CalibrationMode, CalibrationOptions};
use merge_game::data::synthetic::{synthetic_events, SyntheticOptions};
use merge_game::data::{observations_from_events, LabelOptions};
use merge_game::error::Result;
use merge_game::types::ModelParams;

fn main() -> Result<()> {
    let yielder = ModelParams {
        phi: [1.2, 3.0, 10.0, 2.0, 2.0, 0.2, 6.0, 2.0],
        tau: 2.0,
        beta: 0.01,
        ..ModelParams::default()
    };
    let mut blocker = yielder;
    blocker.phi[0] = 6.0;
    blocker.phi[6] = 1.2;
    let opts = SyntheticOptions {
        merger_relative_speed: [0.0, 3.0],
        ..SyntheticOptions::default()
    };
    let mut events = Vec::new();
    for j in 0..4u64 {
        for (tag, params) in [("yielder", yielder), ("blocker", blocker)] {
            let lag = format!("{tag}-{j}");
            let mut batch = synthetic_events(&params, 20, 100 + j, &format!("{lag}/"), &opts)?;
            for e in &mut batch {
                e.lag_id = lag.clone();
            }
            events.extend(batch);
        }
    }
    let obs = observations_from_events(&events, &LabelOptions::default(), 1.0)?;
    let result = calibrate(
        &obs,
        &CalibrationOptions {
            n_starts: 16,
            seed: 5,
            mode: CalibrationMode::PerLag,
            base: ModelParams {
                beta: 0.01,
                ..ModelParams::default()
            },
            ..CalibrationOptions::default()
        },
    )?;
    println!("{:<10} {:<12} {:>5} {:>8} {:>7} {:>7}", "lag", "dominant", "n", "obj", "phi1", "phi7");
    for l in &result.per_lag {
        println!(
            "{:<10} {:<12} {:>5} {:>8} {:>7.2} {:>7.2}",
            l.lag_id,
            l.dominant.as_str(),
            l.n_observations,
            l.objective,
            l.params.phi[0],
            l.params.phi[6]
        );
    }
    Ok(())
}
