use proptest::prelude::*;

use selfaffine::holder::{classify, holder_exponent, holder_k, subordinate, DifferentiabilityCase};
use selfaffine::oracle::{empirical_derivative_test, DerivativeVerdict};
use selfaffine::preset;
use selfaffine::spectrum::Spectrum;
use selfaffine::{Coding, HolderCase, HolderValue, SelfAffineSystem};

fn any_system() -> impl Strategy<Value = SelfAffineSystem> {
    prop_oneof![
        (0.05f64..0.75).prop_map(|t| preset::polya(t).unwrap()),
        (0.51f64..0.99).prop_map(|a| preset::okamoto(a).unwrap()),
        (0.02f64..0.32).prop_map(|a| preset::okamoto(a).unwrap()),
        (0.05f64..0.95).prop_filter_map("a = 1/2 is linear", |a| preset::riesz_nagy(a).ok()),
        (0.05f64..0.95).prop_filter_map("a = 1/2 is linear", |a| preset::gray(a).ok()),
        Just(preset::cantor()),
    ]
}

fn coding(m: usize) -> impl Strategy<Value = Coding> {
    (prop::collection::vec(0..m, 0..4), prop::collection::vec(0..m, 1..4)).prop_map(|(p, t)| Coding::periodic(p, t))
}

fn system_and_coding() -> impl Strategy<Value = (SelfAffineSystem, Coding)> {
    any_system().prop_flat_map(|sys| {
        let m = sys.m();
        (Just(sys), coding(m))
    })
}

proptest! {
    #[test]
    fn exponent_lies_in_spectrum_range((sys, c) in system_and_coding()) {
        let pr = Spectrum::new(&sys).profile().clone();
        let r = holder_exponent(&sys, &c).unwrap();
        prop_assert!(r.k >= 0.0);
        match r.value {
            HolderValue::Finite(v) => prop_assert!(v >= pr.alpha_min - 1e-12 && v <= pr.alpha_max + 1e-12),
            HolderValue::Infinite => {}
            HolderValue::Interval { .. } => prop_assert!(false, "periodic coding gave an interval"),
        }
    }

    #[test]
    fn chord_slopes_follow_the_exponent((sys, c) in system_and_coding()) {
        let r = holder_exponent(&sys, &c).unwrap();
        prop_assume!(r.case == HolderCase::DensityFormula);
        let HolderValue::Finite(alpha) = r.value else { return Ok(()) };
        prop_assume!((alpha - 1.0).abs() > 1e-6);
        let trace = empirical_derivative_test(&sys, &c, 2000);
        let want = if alpha > 1.0 { DerivativeVerdict::ToZero } else { DerivativeVerdict::ToInfinity };
        prop_assert_eq!(trace.verdict, want);
    }

    #[test]
    fn nowhere_differentiable_iff_every_chord_ratio_is_large(sys in any_system()) {
        let m = sys.m();
        let depth = if m == 2 { 12 } else { 9 };
        let step: Vec<f64> = (0..m).map(|i| (sys.lambda(i) / sys.c()[i]).ln()).collect();
        let mut lowest = f64::INFINITY;
        let mut frontier = vec![0.0f64];
        for _ in 0..depth {
            frontier = frontier.iter().flat_map(|&x| step.iter().map(move |s| x + s)).collect();
            lowest = lowest.min(frontier.iter().copied().fold(f64::INFINITY, f64::min));
        }
        let all_large = lowest >= -1e-9;
        prop_assert_eq!(classify(&sys).case == DifferentiabilityCase::NowhereDifferentiable, all_large);
    }

    #[test]
    fn k_is_nonnegative(sys in any_system()) {
        prop_assert!(holder_k(&sys) >= 0.0);
    }
}

fn subordinated() -> impl Strategy<Value = SelfAffineSystem> {
    prop_oneof![
        (0.05f64..0.75).prop_map(|t| preset::polya(t).unwrap()),
        (0.51f64..0.99).prop_map(|a| preset::okamoto(a).unwrap()),
        (0.05f64..0.45).prop_map(|a| preset::riesz_nagy(a).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn time_change_scales_exponents(sys in subordinated(), codings in prop::collection::vec((prop::collection::vec(0usize..3, 0..3), prop::collection::vec(0usize..3, 1..4)), 20)) {
        let sub = subordinate(&sys).unwrap();
        let m = sys.m();
        for (p, t) in codings {
            let c = Coding::periodic(p.iter().map(|d| d % m).collect(), t.iter().map(|d| d % m).collect());
            let f = holder_exponent(&sys, &c).unwrap().value;
            let g = holder_exponent(&sub.g, &c).unwrap().value;
            match (f, g) {
                (HolderValue::Finite(x), HolderValue::Finite(y)) => prop_assert!((y - sub.s * x).abs() <= 1e-9, "{c}"),
                (HolderValue::Infinite, HolderValue::Infinite) => {}
                other => prop_assert!(false, "{c}: {other:?}"),
            }
        }
        prop_assert!(classify(&sub.g).case != DifferentiabilityCase::NowhereDifferentiable);
    }

    #[test]
    fn factor_h_is_monofractal(sys in subordinated(), codings in prop::collection::vec((prop::collection::vec(0usize..3, 0..3), prop::collection::vec(0usize..3, 1..4)), 20)) {
        let sub = subordinate(&sys).unwrap();
        let m = sub.h.m();
        for (p, t) in codings {
            let c = Coding::periodic(p.iter().map(|d| d % m).collect(), t.iter().map(|d| d % m).collect());
            let v = holder_exponent(&sub.h, &c).unwrap().value;
            prop_assert!((v.as_f64() - 1.0 / sub.s).abs() <= 1e-9, "{c}: {v:?}");
        }
    }
}
