//! Smallest `varpi` for which `varpi |p|^2 + 2 {Re p, Im p}` stays positive
//! over a random sample of the full region.

use fraclab::coeffs::CoeffPreset;
use fraclab::fractional::MultiTermSpec;
use fraclab::symbol::{full_region_sample, garding_varpi_search, CarlemanWeight, LemmaRegion, WeightedSymbol};

fn main() -> fraclab::Result<()> {
    let field = CoeffPreset::DiagonalVariable { n: 3 }.build()?;
    let pts = full_region_sample(&LemmaRegion::standard(0.05, 1.0), 3, 50_000, 7);
    for alpha in [0.5, 1.5] {
        let spec = MultiTermSpec::single(alpha)?;
        let sym = WeightedSymbol::new(&spec, field.as_ref(), CarlemanWeight::new(0.05)?, 1.0);
        let s = garding_varpi_search(&pts, &sym, 1e-6, 1e6)?;
        println!(
            "alpha {alpha}: varpi* = {:.4e} after {} bisections; at {:.4e} the min ratio is {:.4e}",
            s.varpi_star, s.iterations, s.certified_varpi, s.report.min_ratio
        );
    }
    Ok(())
}
