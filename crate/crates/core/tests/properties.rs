use proptest::prelude::*;

use safetyrace::{
    aggregate_safety, contest_probs, evaluate, performance, safety, PlayerParams, RiskMode,
    StrategyProfile,
};

fn params() -> impl Strategy<Value = PlayerParams> {
    (
        -2.0..2.0f64,
        0.1..1.0f64,
        -2.0..2.0f64,
        0.1..1.0f64,
        -2.0..4.0f64,
        0.0..3.0f64,
        0.01..10.0f64,
    )
        .prop_map(|(la, alpha, lb, beta, theta, d, r)| PlayerParams {
            a: 10f64.powf(la),
            alpha,
            b: 10f64.powf(lb),
            beta,
            theta,
            d,
            r,
        })
}

fn alloc() -> impl Strategy<Value = f64> {
    (-3.0..3.0f64).prop_map(|e| 10f64.powf(e))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn contest_probs_normalize(p in prop::collection::vec(0.0..1e6f64, 2..6)) {
        prop_assume!(p.iter().sum::<f64>() > 0.0);
        let q = contest_probs(&p);
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(q.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn homogeneity(p in params(), xs in alloc(), xp in alloc(), c in 1.0..100.0f64) {
        let s = |xs: f64, xp: f64| safety(&p, xs, performance(&p, xp)).unwrap();
        let expect = c.powf(p.alpha - p.theta * p.beta) * s(xs, xp);
        prop_assert!(rel(s(c * xs, c * xp), expect) <= 1e-9);
    }

    #[test]
    fn elasticity_form(p in params(), xs in alloc(), xp in alloc()) {
        let s = safety(&p, xs, performance(&p, xp)).unwrap();
        let closed = p.a / p.b.powf(p.theta) * xs.powf(p.alpha) * xp.powf(-p.theta * p.beta);
        prop_assert!(rel(s, closed) <= 1e-9);
    }

    #[test]
    fn safety_bounds(s in prop::collection::vec((-6.0..6.0f64).prop_map(|e| 10f64.powf(e)), 2..5)) {
        let q = vec![1.0 / s.len() as f64; s.len()];
        for mode in [RiskMode::Multiplicative, RiskMode::WinnerOnly] {
            let (si, sigma) = aggregate_safety(&s, &q, mode);
            prop_assert!((0.0..=1.0).contains(&sigma));
            prop_assert!(si.iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn multiplicative_payoff_reduces(p1 in params(), p2 in params(), xs in prop::array::uniform2(alloc()), xp in prop::array::uniform2(alloc())) {
        let world = [p1, p2];
        let profile = StrategyProfile::new(xs.to_vec(), xp.to_vec()).unwrap();
        let o = evaluate(&profile, &world, RiskMode::Multiplicative).unwrap();
        for i in 0..2 {
            let simplified = o.sigma * o.q[i] - (1.0 - o.sigma) * world[i].d - world[i].r * (xs[i] + xp[i]);
            let general: f64 = o.sigma_i[i] * o.q[i]
                - (1.0 - (0..2).map(|j| o.sigma_i[j] * o.q[j]).sum::<f64>()) * world[i].d
                - world[i].r * (xs[i] + xp[i]);
            prop_assert!((o.payoffs[i] - simplified).abs() <= 1e-12 * (1.0 + simplified.abs()));
            prop_assert!((general - simplified).abs() <= 1e-12 * (1.0 + simplified.abs()));
        }
    }

    #[test]
    fn winner_only_sigma_is_weighted(s in prop::array::uniform2(0.01..100.0f64), w in 0.0..1.0f64) {
        let q = [w, 1.0 - w];
        let (si, sigma) = aggregate_safety(&s, &q, RiskMode::WinnerOnly);
        prop_assert!((sigma - (si[0] * q[0] + si[1] * q[1])).abs() <= 1e-15);
    }

    #[test]
    fn scaling_sign_classifies_regime(p in params()) {
        let critical = p.alpha / p.beta;
        prop_assume!((p.theta - critical).abs() > 1e-9);
        prop_assert_eq!(p.scaling_exponent() < 0.0, p.theta > critical);
    }
}
