//! Solutions driven from outside an observation box never vanish on it:
//! the ratio `||u||_omega / ||u||` stays above the rounding floor and
//! decays with the distance of the source.

use fraclab::coeffs::CoeffPreset;
use fraclab::fractional::{MultiTermSpec, TimeGrid};
use fraclab::solver::{ucp_experiment, Axis, Operator, SourceSpec, SpaceTimeGrid, UcpGeometry};

fn main() -> fraclab::Result<()> {
    let axis = Axis::new(0.0, 1.0, 200)?;
    let grid = SpaceTimeGrid::new(vec![axis], TimeGrid::spanning(1.0, 50)?)?;
    let op = Operator::new(MultiTermSpec::single(0.6)?, CoeffPreset::DiagonalVariable { n: 1 }.build()?);
    let omega = UcpGeometry { omega_lo: vec![0.05], omega_hi: vec![0.15], t_prime: 0.6 };
    let sources: Vec<SourceSpec> = [0.3, 0.45, 0.6, 0.75, 0.9]
        .iter()
        .map(|&c| SourceSpec { center: vec![c], width: 0.05, amplitude: 1.0 })
        .collect();

    let rep = ucp_experiment(&op, &grid, &omega, &sources)?;
    for r in &rep.rows {
        println!("distance {:.3}: ratio {:.4e}", r.distance, r.ratio);
    }
    println!("floor {:.1e}, pass {}", rep.floor, rep.pass());
    Ok(())
}
