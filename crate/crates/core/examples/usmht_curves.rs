//! Tabulates usmht in both directions for a few curvatures.

use merge_game::error::Result;
use merge_game::payoff::{Direction, Usmht};

fn main() -> Result<()> {
    let curves = [1.2, 2.0, 3.0, 5.0]
        .into_iter()
        .map(|c| Usmht::new(c, 1.0))
        .collect::<Result<Vec<_>>>()?;
    for f in &curves {
        println!("c = {:<4} shift {:.6} peak {:.6}", f.c(), f.shift(), f.peak());
    }
    println!();
    print!("{:>6}", "x");
    for f in &curves {
        print!("  fwd c={:<4} rev c={:<4}", f.c(), f.c());
    }
    println!();
    for k in -8..=8 {
        let x = k as f64 * 0.5;
        print!("{x:>6.1}");
        for f in &curves {
            print!("  {:>10.5} {:>10.5}", f.eval(x, Direction::Forward), f.eval(x, Direction::Reverse));
        }
        println!();
    }
    Ok(())
}
