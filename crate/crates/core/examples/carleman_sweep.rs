//! Ratio of the two sides of the weighted estimate over a range of `beta`
//! for compactly supported test functions.

use std::sync::Arc;

use fraclab::carleman::{beta_sweep, AlphaBranch, BetaSweepConfig, BumpSpec};
use fraclab::coeffs::ConstantField;
use fraclab::fractional::{MultiTermSpec, TimeGrid};
use fraclab::geometry::{pushforward_operator, HolmgrenMap};
use fraclab::solver::{Axis, SpaceTimeGrid};
use fraclab::symbol::CarlemanWeight;

fn main() -> fraclab::Result<()> {
    let x_thick = 1.0;
    let grid = SpaceTimeGrid::new(vec![Axis::new(0.0, 1.0, 1500)?], TimeGrid::spanning(1.0, 48)?)?;
    let map = HolmgrenMap::centered(1, 1.0, x_thick, 1.0, 1)?;

    for alpha in [0.5, 1.5] {
        let spec = MultiTermSpec::single(alpha)?;
        let pf = pushforward_operator(Arc::new(ConstantField::identity(1)), &spec, &map, 0.0)?;
        let config = BetaSweepConfig {
            betas: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            bumps: vec![
                BumpSpec { center: vec![0.5], radius: vec![0.25], t_on: 0.0, t_off: 1.0 },
                BumpSpec { center: vec![0.35], radius: vec![0.15], t_on: 0.3, t_off: 1.0 },
            ],
            weight: CarlemanWeight::new(x_thick)?,
            branch: AlphaBranch::for_alpha(alpha),
        };
        let rep = beta_sweep(&config, &grid, &pf, None)?;
        println!("alpha {alpha} ({:?})", config.branch);
        for r in &rep.rows {
            println!("  test {} beta {:>5}: ratio {:.4e}", r.test_id, r.beta, r.ratio);
        }
        println!("  spread {:.2}, diverging {:?}, pass {}", rep.spread, rep.diverging, rep.pass());
    }
    Ok(())
}
