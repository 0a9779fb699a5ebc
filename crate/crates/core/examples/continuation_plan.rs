//! Stage-by-stage Holmgren continuation schedule and map identities.

use fraclab::geometry::{continuation_schedule, geometry_roundtrip_check};

fn main() -> fraclab::Result<()> {
    let (n, c, x_thick, horizon) = (2, 1.0, 0.05, 1.0);
    for st in continuation_schedule(n, c, horizon, x_thick, 5)? {
        let q = &st.inequality;
        println!(
            "stage {}: {:.3} t + {:.3} x_n <= {:.3}, |x'| <= {:.4}",
            st.stage, q.coef_t, q.coef_yn, q.rhs, st.transverse_radius
        );
    }
    let rt = geometry_roundtrip_check(n, c, x_thick, horizon, 5, 10_000, 0)?;
    println!(
        "round trips over {} points: holmgren {:.1e}, global {:.1e}, stage shift {:.1e}",
        rt.samples, rt.holmgren, rt.global, rt.stage_identity
    );
    Ok(())
}
