//! Weighted symbol and its Poisson bracket at a single phase-space point,
//! compared with the closed form for constant coefficients.

use fraclab::coeffs::{ConstantField, Matrix};
use fraclab::fractional::MultiTermSpec;
use fraclab::symbol::{
    poisson_bracket, principal_closed_form, tangential_correction, BracketMode, CarlemanWeight, PhasePoint,
    WeightedSymbol,
};

fn main() -> fraclab::Result<()> {
    let a = ConstantField::new(Matrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]])?, 0.5)?;
    let spec = MultiTermSpec::new(vec![0.8, 0.4], vec![1.0, 0.5])?;
    let weight = CarlemanWeight::new(0.05)?;
    let p = PhasePoint::new(0.4, vec![0.0, 0.02], 3.0, vec![1.5, -0.7], 2.0)?;

    let sym = WeightedSymbol::new(&spec, &a, weight, 1.0);
    println!("p_psi = {:.6}", sym.value(&p)?);
    for mode in [BracketMode::Full, BracketMode::Principal] {
        let r = poisson_bracket(&p, &spec, &a, weight, 1.0, mode)?;
        println!("{mode:?}: bracket {:.6}, spatial part {:.6}, ratio {:.6}", r.bracket, r.principal, r.ratio);
    }

    let m = a.matrix();
    let normal = principal_closed_form(m, &p, weight);
    let tangential = tangential_correction(m, &p, weight, 1.0);
    println!("closed form: normal pair {normal:.6} + tangential pairs {tangential:.6} = {:.6}", normal + tangential);
    Ok(())
}
