use std::sync::Arc;

use fraclab::carleman::{carleman_lhs, carleman_rhs, AlphaBranch, BumpSpec};
use fraclab::coeffs::{verify_field, CoeffField, ConstantField, RotatingAnisotropic};
use fraclab::fractional::{
    caputo_apply, caputo_oracle, multiterm_apply, History, MultiTermSpec, Series, TimeGrid,
    TimeOperator,
};
use fraclab::geometry::{
    global_diffeo_jacobian, holmgren_coefficients, pushforward_operator, weighted_ellipticity_holds, GlobalWeighted,
    HolmgrenMap,
};
use fraclab::solver::{solve, Axis, Boundary, Operator, Source, SourceSpec, SpaceTimeGrid};
use fraclab::symbol::{
    bracket, homogeneity_profile, BracketMode, CarlemanWeight, PhasePoint, RealGradient, WeightedSymbol,
};
use proptest::prelude::*;

fn unit_grid(n: usize) -> TimeGrid {
    TimeGrid::spanning(1.0, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiterm_is_linear(
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        u in proptest::collection::vec(-1.0f64..1.0, 32),
        v in proptest::collection::vec(-1.0f64..1.0, 32),
        alpha in 0.05f64..1.95,
    ) {
        let g = unit_grid(32);
        let spec = MultiTermSpec::new(vec![alpha, alpha / 3.0], vec![1.0, 0.4]).unwrap();
        let mut su = vec![0.0];
        su.extend(&u);
        let mut sv = vec![0.0];
        sv.extend(&v);
        let comb: Vec<f64> = su.iter().zip(&sv).map(|(x, y)| a * x + b * y).collect();
        let du = multiterm_apply(&Series::new(su), &spec, &g).unwrap();
        let dv = multiterm_apply(&Series::new(sv), &spec, &g).unwrap();
        let dc = multiterm_apply(&Series::new(comb), &spec, &g).unwrap();
        for i in 0..g.len() {
            let e = a * du.values[i] + b * dv.values[i];
            prop_assert!((dc.values[i] - e).abs() <= 1e-10 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn constants_are_annihilated(c in -10.0f64..10.0, alpha in 0.05f64..1.95) {
        let d = TimeOperator::Caputo(alpha).apply(&[c; 41], 1.0 / 40.0, History::Full);
        prop_assert!(d.iter().all(|v| v.abs() <= 1e-12 * c.abs().max(1.0)));
    }

    #[test]
    fn bracket_is_bilinear_and_antisymmetric(
        f in proptest::collection::vec(-5.0f64..5.0, 6),
        g in proptest::collection::vec(-5.0f64..5.0, 6),
        h in proptest::collection::vec(-5.0f64..5.0, 6),
        a in -2.0f64..2.0,
    ) {
        let grad = |v: &[f64]| RealGradient { d_tau: v[0], d_t: v[1], d_xi: vec![v[2], v[3]], d_x: vec![v[4], v[5]] };
        let comb: Vec<f64> = f.iter().zip(&h).map(|(x, y)| a * x + y).collect();
        for mode in [BracketMode::Full, BracketMode::Principal] {
            let (ff, gg, hh, cc) = (grad(&f), grad(&g), grad(&h), grad(&comb));
            prop_assert!((bracket(&ff, &gg, mode) + bracket(&gg, &ff, mode)).abs() < 1e-12);
            prop_assert_eq!(bracket(&ff, &ff, mode), 0.0);
            let lin = a * bracket(&ff, &gg, mode) + bracket(&hh, &gg, mode);
            prop_assert!((bracket(&cc, &gg, mode) - lin).abs() <= 1e-10 * (1.0 + lin.abs()));
        }
    }

    #[test]
    fn split_adds_up(
        t in 0.0f64..1.0, x0 in -0.2f64..0.2, x1 in 0.0f64..0.05,
        tau in -1e3f64..1e3, xi0 in -50.0f64..50.0, xi1 in -50.0f64..50.0, sigma in 0.01f64..100.0,
        alpha in 0.1f64..1.9,
    ) {
        let base: Arc<dyn CoeffField> = Arc::new(RotatingAnisotropic::new(2));
        let map = HolmgrenMap::centered(2, 1.0, 0.05, 1.0, 1).unwrap();
        let field = holmgren_coefficients(base, &map);
        let spec = MultiTermSpec::new(vec![alpha, alpha / 2.0], vec![1.0, 0.5]).unwrap();
        let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(0.05).unwrap(), 1.0);
        let p = PhasePoint::new(t, vec![x0, x1], tau, vec![xi0, xi1], sigma).unwrap();
        let (p1, p2) = sym.split(&p).unwrap();
        let v = sym.value(&p).unwrap();
        prop_assert!((p1 + p2 - v).norm() <= 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn holmgren_preserves_support_and_ellipticity(
        t in 0.0f64..1.0, y0 in -0.2f64..0.2, y1 in 0.0f64..0.3,
        e0 in -1.0f64..1.0, e1 in -1.0f64..1.0,
    ) {
        let map = HolmgrenMap::centered(2, 1.0, 0.05, 1.0, 1).unwrap();
        // {y_n >= 0} maps into {x_n >= 0} on stage 1 for t >= 0
        let x = map.forward(t, &[y0, y1]);
        prop_assert!(x[1] >= 0.0);
        let base: Arc<dyn CoeffField> = Arc::new(RotatingAnisotropic::new(2));
        let pulled = holmgren_coefficients(base.clone(), &map);
        prop_assert!(verify_field(&pulled, [(t, x.clone())]).is_ok());
        let spec = MultiTermSpec::single(0.5).unwrap();
        let pf = pushforward_operator(base.clone(), &spec, &map, 0.2).unwrap();
        prop_assert!(verify_field(pf.second_order.as_ref(), [(t, vec![x[0], x[1]])]).is_ok());
        let global = GlobalWeighted { field: base.clone() };
        prop_assert!(weighted_ellipticity_holds(&global, base.delta(), t, &[y0 * 4.0, y1 * 4.0], &[e0, e1]));
    }

    #[test]
    fn global_jacobian_is_positive(y in proptest::collection::vec(-0.999f64..0.999, 3)) {
        let j = global_diffeo_jacobian(&y).unwrap();
        prop_assert!(j.iter().all(|v| *v >= 1.0));
    }

    #[test]
    fn carleman_ratio_ignores_weight_shift(shift in -3.0f64..3.0, beta in 1.0f64..30.0) {
        let grid = SpaceTimeGrid::new(vec![Axis::new(0.0, 0.5, 48).unwrap()], unit_grid(12)).unwrap();
        let map = HolmgrenMap::centered(1, 1.0, 0.5, 1.0, 1).unwrap();
        let spec = MultiTermSpec::single(0.7).unwrap();
        let pf = pushforward_operator(Arc::new(ConstantField::identity(1)), &spec, &map, 0.0).unwrap();
        let v = BumpSpec { center: vec![0.25], radius: vec![0.15], t_on: 0.0, t_off: 1.0 }.sample(&grid);
        let w = CarlemanWeight::new(0.5).unwrap();
        let ws = w.shifted(shift);
        let r = carleman_lhs(&v, beta, &w, AlphaBranch::Low) / carleman_rhs(&v, beta, &w, &pf, None).unwrap();
        let rs = carleman_lhs(&v, beta, &ws, AlphaBranch::Low) / carleman_rhs(&v, beta, &ws, &pf, None).unwrap();
        prop_assert!(((r - rs) / r).abs() < 1e-12);
    }

    #[test]
    fn nonnegative_sources_give_nonnegative_solutions(
        c in 0.2f64..0.8, w in 0.05f64..0.3, amp in 0.0f64..5.0, alpha in 0.1f64..0.95,
    ) {
        let grid = SpaceTimeGrid::new(vec![Axis::new(0.0, 1.0, 24).unwrap()], unit_grid(16)).unwrap();
        let op = Operator::new(MultiTermSpec::single(alpha).unwrap(), Arc::new(RotatingAnisotropic::new(1)));
        let s = SourceSpec { center: vec![c], width: w, amplitude: amp };
        let src = Source::Function(Arc::new(move |t, y| s.eval(t, y)));
        let (u, _) = solve(&op, &src, &grid, &Boundary::Homogeneous).unwrap();
        prop_assert!(u.values.iter().all(|v| *v >= -1e-12));
    }
}

#[test]
fn l1_converges_to_oracle_at_expected_rate() {
    type Case = (&'static str, fn(f64) -> f64, fn(f64) -> f64);
    let cases: [Case; 3] = [
        ("t", |t| t, |_| 1.0),
        ("t^2", |t| t * t, |t| 2.0 * t),
        ("t^2.5", |t| t.powf(2.5), |t| 2.5 * t.powf(1.5)),
    ];
    for alpha in [0.3, 0.5, 0.8] {
        for (name, u, du) in cases {
            let oracle = caputo_oracle(&du, alpha, 1.0, 1e-13).unwrap();
            let errs: Vec<f64> = [64, 128, 256]
                .iter()
                .map(|&n| {
                    let g = unit_grid(n);
                    let d = caputo_apply(&Series::sample(&g, u), alpha, &g).unwrap();
                    ((d.last() - oracle) / oracle).abs()
                })
                .collect();
            // the scheme is exact for linear data
            if errs[2] < 1e-12 {
                continue;
            }
            let order = (errs[1] / errs[2]).log2();
            assert!(order >= 2.0 - alpha - 0.2, "{name}, alpha={alpha}: order {order}, errors {errs:?}");
        }
    }
}

#[test]
fn time_convergence_at_fine_space_grid() {
    for alpha in [0.5f64, 1.5] {
        let spec = MultiTermSpec::single(alpha).unwrap();
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&nt| fraclab::experiment::manufactured_error(&spec, nt, 512).unwrap())
            .collect();
        let order = (errs[1] / errs[2]).log2();
        assert!(order >= (2.0 - alpha).min(2.0) - 0.3, "alpha={alpha}: {errs:?}");
    }
}

#[test]
fn homogeneity_ratio_settles() {
    let field = RotatingAnisotropic::new(2);
    let spec = MultiTermSpec::new(vec![1.2, 0.6], vec![1.0, 0.5]).unwrap();
    let sym = WeightedSymbol::new(&spec, &field, CarlemanWeight::new(0.05).unwrap(), 1.0);
    let p = PhasePoint::new(0.3, vec![0.1, 0.03], 2.0, vec![0.7, -0.4], 1.5).unwrap();
    let prof = homogeneity_profile(&sym, &p, &[10.0, 100.0, 1000.0]).unwrap();
    let d1 = (prof[1] - prof[0]).abs();
    let d2 = (prof[2] - prof[1]).abs();
    assert!(d2 <= d1 + 1e-12 * prof[2].abs());
}
