use irlab_core::timing::{
    decompose_t_unchecked, k_epsilon, level_index, phi, phi_root, t1, t2id, t_of_x, window_verdict, WindowParams,
};
use proptest::prelude::*;

fn params(alpha: f64, eta: f64) -> WindowParams {
    WindowParams { alpha, eta, ..WindowParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decomposition_sums_to_fitting_time(x in 0.01f64..40.0, alpha in 1e-3f64..0.05) {
        let p = params(alpha, 0.005);
        prop_assume!(x > alpha * alpha);
        let parts = decompose_t_unchecked(x, &p).unwrap();
        let direct = t_of_x(x, &p).unwrap();
        prop_assert!((parts.total - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }

    /// A(x) is nonincreasing and C(x) decreasing on `[α²/ε', 1/(4η)]`.
    #[test]
    fn leading_and_trailing_terms_decrease(u in 0.0f64..1.0, v in 0.0f64..1.0, alpha in 1e-3f64..0.05) {
        let p = params(alpha, 0.005);
        let lo = alpha * alpha / p.eps_prime;
        let hi = 1.0 / (4.0 * p.eta);
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        prop_assume!(v - u > 1e-6);
        let x = lo * (hi / lo).powf(u);
        let y = lo * (hi / lo).powf(v);
        let (a, b) = (decompose_t_unchecked(x, &p).unwrap(), decompose_t_unchecked(y, &p).unwrap());
        prop_assert!(a.domain_ok && b.domain_ok);
        prop_assert!(b.a <= a.a + 1e-12 * a.a.abs().max(1.0));
        prop_assert!(b.c < a.c);
        prop_assert!(b.b >= a.b);
    }

    #[test]
    fn fitting_time_decreases_with_looser_accuracy(lam in 0.1f64..20.0, e1 in 1e-6f64..1.0, e2 in 1e-6f64..1.0) {
        let p = params(0.01, 0.005);
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assume!(hi / lo > 1.0 + 1e-9);
        prop_assert!(t2id(lam, hi, &p).unwrap() < t2id(lam, lo, &p).unwrap());
    }

    #[test]
    fn exit_time_scales_inversely_with_step(lam in 0.01f64..20.0, eta in 1e-4f64..0.05) {
        let base = t1(lam, &params(0.01, 0.005)).unwrap();
        let scaled = t1(lam, &params(0.01, eta)).unwrap();
        prop_assert!((scaled * eta - base * 0.005).abs() <= 1e-10 * (base * 0.005).abs().max(1.0));
    }

    #[test]
    fn exit_time_grows_with_eps_prime(lam in 0.01f64..20.0, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-9);
        let p = params(0.01, 0.005);
        let t_lo = t1(lam, &WindowParams { eps_prime: lo, ..p }).unwrap();
        let t_hi = t1(lam, &WindowParams { eps_prime: hi, ..p }).unwrap();
        prop_assert!(t_hi > t_lo);
    }

    #[test]
    fn k_epsilon_decreases_in_eps(a in 1e-4f64..1.0, b in 1e-4f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-12);
        prop_assert!(k_epsilon(hi).unwrap() < k_epsilon(lo).unwrap());
    }

    #[test]
    fn level_index_is_monotone(x in 1e-4f64..100.0, y in 1e-4f64..100.0, alpha in 1e-3f64..0.1) {
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        prop_assert!(level_index(lo, alpha) <= level_index(hi, alpha));
    }

    #[test]
    fn verdict_window_matches_direct_comparison(
        l1 in 3.0f64..20.0, r2 in 0.1f64..0.9, r3 in 0.05f64..0.9, eta in 1e-3f64..0.02,
    ) {
        let spectrum = [l1, l1 * r2, l1 * r2 * r3, 0.01, 0.01];
        for rank in 1..=3 {
            let v = window_verdict(&spectrum, &WindowParams { rank, ..params(0.01, eta) }).unwrap();
            prop_assert_eq!(v.nonempty, v.t0 < v.t1);
            prop_assert!(!v.certified || (v.nonempty && v.failure_reasons.is_empty()));
        }
    }
}

#[test]
fn phi_root_is_a_zero_and_phi_is_increasing_past_it() {
    let r = phi_root();
    assert!(phi(r).abs() < 1e-12);
    let mut prev = phi(r);
    for i in 1..100 {
        let t = r + i as f64 * 0.5;
        assert!(phi(t) > prev);
        prev = phi(t);
    }
}
