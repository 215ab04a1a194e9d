use std::f64::consts::LN_2;

use holdout_core::bounds::{
    bernstein_gap_tail, bernstein_tail, bernstein_tail_raw, evaluate, expectation_bound_bernstein,
    expectation_bound_hoeffding, hoeffding_gap_tail, hoeffding_tail, mt_oracle_rhs, nc_gap_tail, nc_oracle_rhs,
    nc_tail, Bound, BoundQuery, NoiseModel, Side,
};
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tails_non_increasing_in_epsilon(
        m in 2usize..5000,
        t in 1usize..40,
        e1 in 0.0f64..1.0,
        e2 in 0.0f64..1.0,
        a in 0.01f64..0.99,
        gamma in 0.01f64..1.0,
        theta in 0.01f64..0.99,
        n in 1usize..10,
        tau in 1e-6f64..0.5,
    ) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let t = t as f64;
        let b = m / 3;
        let pairs = [
            (hoeffding_tail(m, lo, t).unwrap(), hoeffding_tail(m, hi, t).unwrap()),
            (hoeffding_gap_tail(m, b, lo, t).unwrap(), hoeffding_gap_tail(m, b, hi, t).unwrap()),
            (bernstein_tail(m, lo, a, gamma, t, Side::Over).unwrap(), bernstein_tail(m, hi, a, gamma, t, Side::Over).unwrap()),
            (bernstein_tail(m, lo, a, gamma, t, Side::Under).unwrap(), bernstein_tail(m, hi, a, gamma, t, Side::Under).unwrap()),
            (bernstein_gap_tail(m, b, lo, a, gamma, t, Side::Under).unwrap(), bernstein_gap_tail(m, b, hi, a, gamma, t, Side::Under).unwrap()),
            (bernstein_tail_raw(m, lo, gamma, 0.25, 1.0).unwrap(), bernstein_tail_raw(m, hi, gamma, 0.25, 1.0).unwrap()),
            (nc_tail(n, m, lo, theta, gamma, t, tau).unwrap(), nc_tail(n, m, hi, theta, gamma, t, tau).unwrap()),
            (nc_gap_tail(n, m, b, lo, theta, gamma, t, tau).unwrap(), nc_gap_tail(n, m, b, hi, theta, gamma, t, tau).unwrap()),
        ];
        for (at_lo, at_hi) in pairs {
            prop_assert!(at_hi <= at_lo * (1.0 + 1e-14), "{at_hi} > {at_lo}");
        }
    }

    #[test]
    fn theorem_forms_non_increasing_in_m(
        m1 in 1usize..5000,
        dm in 0usize..5000,
        t in 1usize..40,
        eps in 0.0f64..1.0,
        a in 0.01f64..0.99,
        gamma in 0.01f64..1.0,
        theta in 0.01f64..0.99,
        n in 1usize..10,
        tau in 1e-6f64..0.5,
    ) {
        let m2 = m1 + dm;
        let t = t as f64;
        let pairs = [
            (hoeffding_tail(m1, eps, t).unwrap(), hoeffding_tail(m2, eps, t).unwrap()),
            (bernstein_tail(m1, eps, a, gamma, t, Side::Over).unwrap(), bernstein_tail(m2, eps, a, gamma, t, Side::Over).unwrap()),
            (nc_tail(n, m1, eps, theta, gamma, t, tau).unwrap(), nc_tail(n, m2, eps, theta, gamma, t, tau).unwrap()),
            (expectation_bound_hoeffding(n, m1, t).unwrap(), expectation_bound_hoeffding(n, m2, t).unwrap()),
            (
                expectation_bound_bernstein(n, m1, a, t, gamma, Side::Under).unwrap(),
                expectation_bound_bernstein(n, m2, a, t, gamma, Side::Under).unwrap(),
            ),
        ];
        for (small, large) in pairs {
            prop_assert!(large <= small * (1.0 + 1e-14), "{large} > {small}");
        }
    }

    #[test]
    fn gap_tail_non_increasing_in_m_at_fixed_gap(m in 2usize..3000, dm in 0usize..3000, t in 1usize..20, eps in 0.0f64..1.0) {
        let b = m / 2;
        let t = t as f64;
        prop_assert!(hoeffding_gap_tail(m + dm, b, eps, t).unwrap() <= hoeffding_gap_tail(m, b, eps, t).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn over_side_below_under_side(m in 1usize..5000, t in 1usize..20, eps in 0.0f64..1.0, a in 0.01f64..0.99, gamma in 0.01f64..1.0) {
        let t = t as f64;
        prop_assert!(bernstein_tail(m, eps, a, gamma, t, Side::Over).unwrap() <= bernstein_tail(m, eps, a, gamma, t, Side::Under).unwrap());
        prop_assert!(
            expectation_bound_bernstein(3, m, a, t, gamma, Side::Over).unwrap()
                <= expectation_bound_bernstein(3, m, a, t, gamma, Side::Under).unwrap()
        );
    }

    #[test]
    fn theorem_form_dominates_optimized_gap(m in 10usize..4000, t in 1usize..30, eps in 0.0f64..1.0) {
        let t = t as f64;
        let bound = hoeffding_tail(m, eps, t).unwrap();
        let b_max = (m as f64 * eps * eps / (1.0 + 9.0 * LN_2)).floor() as usize;
        let best = (0..=b_max.min(m - 1))
            .filter_map(|b| {
                let shifted = eps - b as f64 / m as f64;
                (shifted >= 0.0).then(|| hoeffding_gap_tail(m, b, shifted, t).unwrap())
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(bound >= best * (1.0 - 1e-12), "{bound} < {best}");
    }

    #[test]
    fn reports_flag_vacuity(m in 1usize..3000, t in 1usize..20, eps in 0.0f64..1.0, idx in 0usize..Bound::ALL.len()) {
        let bound = Bound::ALL[idx];
        let q = BoundQuery {
            epsilon: eps,
            candidates: 3,
            b: m / 4,
            noise: Some(NoiseModel::mammen_tsybakov(1.0, 0.6).unwrap()),
            excess_tilde: 0.01,
            risk_tilde: 0.2,
            risk_star: 0.1,
            ..BoundQuery::new(m.max(2), t as f64)
        };
        let r = evaluate(bound, &q).unwrap();
        let cap = holdout_core::bounds::BoundReport::cap(bound, &q);
        prop_assert_eq!(r.vacuous, r.raw >= cap);
        prop_assert!(r.clamped >= 0.0 && r.clamped <= cap);
        prop_assert_eq!(r.clamped, r.raw.min(cap));
    }
}

#[test]
fn noise_oracle_forms_agree_on_random_grid() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        let m = rng.gen_range(1..100_000);
        let theta = rng.gen_range(0.01..0.99);
        let gamma = rng.gen_range(0.01..1.0);
        let t = rng.gen_range(1..50) as f64;
        let alpha = rng.gen_range(0.05..=1.0);
        let h = rng.gen_range(0.01..1.0);
        let excess = rng.gen_range(0.0..0.5);
        let tau = NoiseModel::mammen_tsybakov(alpha, h).unwrap().tau_star(m).unwrap();
        let generic = nc_oracle_rhs(n, m, theta, gamma, t, tau, excess).unwrap();
        let special = mt_oracle_rhs(n, m, theta, gamma, t, alpha, h, excess).unwrap();
        assert!(rel_close(generic, special, 1e-10), "{generic} vs {special}");
    }
}

#[test]
fn mt_ratio_non_increasing_on_grid() {
    for alpha in [0.1, 0.25, 0.5, 0.75, 1.0] {
        let model = NoiseModel::mammen_tsybakov(alpha, 0.3).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..=1000 {
            let x = i as f64 / 1000.0;
            let ratio = model.omega(x).unwrap() / x.sqrt();
            assert!(ratio <= prev * (1.0 + 1e-14));
            prev = ratio;
        }
        assert_eq!(model.omega(0.0).unwrap(), 0.0);
    }
}
