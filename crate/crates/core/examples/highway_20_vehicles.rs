//! Nineteen main-lane lag agents and a game-driven merger, timed against
//! simulated time.

use std::time::Instant;

use merge_game::error::Result;
use merge_game::sim::run_scenario;
use merge_game::sim::scenarios::highway;

fn main() -> Result<()> {
    let config = highway(19, 5);
    let start = Instant::now();
    let log = run_scenario(&config)?;
    let wall = start.elapsed().as_secs_f64();
    println!(
        "{} vehicles, {} s simulated in {:.3} s ({:.0}x real time)",
        log.vehicle_ids().len(),
        config.duration,
        wall,
        config.duration / wall
    );
    let decisions = log.records.iter().filter(|r| r.decided_at == Some(r.t)).count();
    println!("{decisions} fresh lag decisions, {} collisions", log.collisions.len());
    let merger = config.merger_index().map(|i| config.vehicles[i].state.id);
    if let Some(id) = merger {
        let lane_change = log
            .vehicle(id)
            .find(|r| config.ramp.lane_at(r.y) != config.vehicles[config.merger_index().unwrap()].state.lane);
        match lane_change {
            Some(r) => println!("merger crossed into the main lane at t = {:.2} s, x = {:.1} m", r.t, r.x),
            None => println!("merger stayed on the ramp"),
        }
    }
    Ok(())
}
