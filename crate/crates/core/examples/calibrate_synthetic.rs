//! Generates 200 merges from known parameters, labels them and recovers a
//! parameter set at least as good as the generator.

use std::time::Instant;

use merge_game::calibrate::{calibrate, mae, CalibrationOptions};
use merge_game::data::synthetic::{synthetic_events, SyntheticOptions};
use merge_game::data::{observations_from_events, LabelOptions};
use merge_game::error::Result;
use merge_game::types::ModelParams;

fn main() -> Result<()> {
    let truth = ModelParams {
        phi: [1.7, 1.5, 10.0, 2.0, 2.0, 0.2, 3.0, 2.0],
        tau: 2.0,
        beta: 0.01,
        ..ModelParams::default()
    };
    let events = synthetic_events(&truth, 200, 11, "e", &SyntheticOptions::default())?;
    let obs = observations_from_events(&events, &LabelOptions::default(), 1.0)?;
    println!("{} events, {} observations, MAE at the generator {:.3}", events.len(), obs.len(), mae(&truth, &obs)?);

    let opts = CalibrationOptions {
        seed: 5,
        base: ModelParams {
            beta: 0.01,
            ..ModelParams::default()
        },
        ..CalibrationOptions::default()
    };
    let start = Instant::now();
    let result = calibrate(&obs, &opts)?;
    println!(
        "{} starts in {:.1} s: objective {} MAE {:.3}",
        result.starts.len(),
        start.elapsed().as_secs_f64(),
        result.objective,
        result.mae
    );
    println!("phi {:.3?} tau {:.3}", result.params.phi, result.params.tau);
    Ok(())
}
