//! Builds the payoff bimatrix for one merge situation and solves it.

use merge_game::error::Result;
use merge_game::game::{enumerate_equilibria, solve};
use merge_game::payoff::{Conditioning, PayoffModel};
use merge_game::types::{Lane, LagAction, MaAction, ModelParams, RampGeometry, VehicleState, WorldState};

fn main() -> Result<()> {
    let ramp = RampGeometry::new(250.0, 0.0, 3.5)?;
    let lag = VehicleState::new(1, 100.0, 3.5, 24.0, 0.0, Lane::Main)?;
    let merger = VehicleState::new(2, 112.0, 0.0, 22.0, 0.0, Lane::Ramp)?;
    let leader = VehicleState::new(3, 160.0, 3.5, 25.0, 0.0, Lane::Main)?;
    let world = WorldState::new(0.0, lag, merger, Some(leader), ramp)?;

    let params = ModelParams::default();
    let model = PayoffModel::new(&params)?;
    let sol = solve(&model, &world, params.beta, Conditioning::Literal);

    println!("payoffs (merger, lag) by merger row and lag column");
    for (i, row) in MaAction::ALL.iter().enumerate() {
        for (j, col) in LagAction::ALL.iter().enumerate() {
            println!(
                "  {:<13} {:<13} ({:>8.4}, {:>8.4})",
                row.as_str(),
                col.as_str(),
                sol.matrix.p[i][j],
                sol.matrix.q[i][j]
            );
        }
    }
    for eq in enumerate_equilibria(&sol.matrix) {
        println!("equilibrium: merger {:.3?} lag {:.3?}", eq.row_mix, eq.col_mix);
    }
    println!("selected:    merger {:.3?} lag {:.3?}", sol.equilibrium.row_mix, sol.equilibrium.col_mix);
    println!("expected lag payoffs {:.4?}", sol.expected);
    println!("quantal response (β = {}) {:.4?}", params.beta, sol.qre);
    Ok(())
}
