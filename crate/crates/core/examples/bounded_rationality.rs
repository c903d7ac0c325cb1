//! How the temperature β spreads the lag's choice over its actions.

use merge_game::game::qre_update;
use merge_game::types::LagAction;

fn main() {
    let expected = [0.42, 0.15, 0.38, 0.1];
    println!("expected payoffs {expected:?}");
    print!("{:>8}", "beta");
    for a in LagAction::ALL {
        print!(" {:>13}", a.as_str());
    }
    println!();
    for beta in [0.001, 0.01, 0.03, 0.1, 0.3, 1.0, 10.0, 100.0] {
        print!("{beta:>8}");
        for p in qre_update(&expected, beta) {
            print!(" {p:>13.4}");
        }
        println!();
    }
}
