//! L1 approximation of the Caputo derivative of `t^2.5` against the
//! quadrature oracle, under grid refinement.

use fraclab::fractional::{caputo_apply, caputo_oracle, Series, TimeGrid};

fn main() -> fraclab::Result<()> {
    // the oracle takes the derivative of order ceil(alpha)
    let d1 = |t: f64| 2.5 * t.powf(1.5);
    let d2 = |t: f64| 3.75 * t.sqrt();
    for alpha in [0.4, 1.3] {
        let exact = if alpha < 1.0 { caputo_oracle(&d1, alpha, 1.0, 1e-13)? } else { caputo_oracle(&d2, alpha, 1.0, 1e-13)? };
        println!("alpha = {alpha}, oracle value at t = 1: {exact:.12}");
        let mut prev: Option<f64> = None;
        for n in [32, 64, 128, 256, 512] {
            let grid = TimeGrid::spanning(1.0, n)?;
            let d = caputo_apply(&Series::sample(&grid, |t| t.powf(2.5)), alpha, &grid)?;
            let err = (d.last() - exact).abs();
            let rate = prev.map(|e| format!("{:.3}", (e / err).log2())).unwrap_or_else(|| "-".into());
            println!("  N = {n:>4}  error {err:.3e}  observed order {rate}");
            prev = Some(err);
        }
    }
    Ok(())
}
