//! Sample the near-characteristic set of the weighted symbol and certify
//! positivity of the principal bracket there.
//!
//! The slab thickness `X` must shrink as `alpha` approaches 2: at
//! `alpha = 1.9` the minimum ratio is negative for `X = 0.05` and positive
//! once `X` is small enough.

use fraclab::coeffs::CoeffPreset;
use fraclab::experiment::multiterm_for;
use fraclab::geometry::{holmgren_coefficients, HolmgrenMap};
use fraclab::symbol::{char_set_sample, lemma21_check, CarlemanWeight, CharSampleConfig, LemmaRegion, WeightedSymbol};

fn certify(alpha: f64, x_thick: f64) -> fraclab::Result<()> {
    let base = CoeffPreset::RotatingAnisotropic { n: 2 }.build()?;
    let field = holmgren_coefficients(base, &HolmgrenMap::centered(2, 1.0, x_thick, 1.0, 1)?);
    let spec = multiterm_for(alpha, 2)?;
    let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(x_thick)?, 1.0);
    let sample = char_set_sample(&sym, &LemmaRegion::standard(x_thick, 1.0), &CharSampleConfig::new(4000), 42)?;
    let report = lemma21_check(&sample.points, &sym)?;
    println!(
        "alpha {alpha:<4} X {x_thick:<5}: {} points, residual <= {:.1e}, min ratio {:+.4e}",
        sample.points.len(),
        sample.max_residual,
        report.min_ratio,
    );
    Ok(())
}

fn main() -> fraclab::Result<()> {
    for alpha in [0.3, 1.0, 1.5] {
        certify(alpha, 0.05)?;
    }
    for x_thick in [0.05, 0.02, 0.01, 0.005] {
        certify(1.9, x_thick)?;
    }
    Ok(())
}
