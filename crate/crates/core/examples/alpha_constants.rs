//! Sampled lower bounds for `Im (1 + i tau)^alpha` and `Re (1 + i tau)^alpha`
//! next to their stated constants. For `alpha < 1` the imaginary-part
//! constant exceeds the true infimum.

use fraclab::symbol::{c_alpha_certificate, epsilon_zero_certificate, im_ratio_infimum};

fn main() -> fraclab::Result<()> {
    println!("alpha   C_alpha  sampled-min  infimum   eps0     sampled-min");
    for k in 1..=19 {
        let alpha = 0.1 * k as f64;
        let c = c_alpha_certificate(alpha, 20_000, k)?;
        let e = epsilon_zero_certificate(alpha, 20_000, 100 + k)?;
        println!(
            "{alpha:.2}    {:.4}   {:.4}       {:.4}    {:.4}   {:.4}{}",
            c.constant,
            c.min_normalized,
            im_ratio_infimum(alpha),
            e.constant,
            e.min_normalized,
            if c.pass() { "" } else { "   <- bound violated" }
        );
    }
    Ok(())
}
