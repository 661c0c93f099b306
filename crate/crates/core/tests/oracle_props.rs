use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfaffine::holder::{classify, DifferentiabilityCase};
use selfaffine::oracle::{empirical_derivative_test, empirical_spectrum, verdict_odds, DerivativeVerdict};
use selfaffine::preset;
use selfaffine::spectrum::Spectrum;
use selfaffine::{Coding, SelfAffineSystem};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn histogram_support_and_mass(theta in 0.05f64..0.75, a in 0.51f64..0.99, n in 4usize..=12) {
        for sys in [preset::polya(theta).unwrap(), preset::okamoto(a).unwrap()] {
            let hist = empirical_spectrum(&sys, n, 25).unwrap();
            let pr = Spectrum::new(&sys).profile().clone();
            let total: u64 = hist.bins.iter().map(|b| b.count).sum();
            prop_assert_eq!(total, (sys.i_plus().len() as u64).pow(n as u32));
            let slack = sys.lambdas().iter().filter(|&&l| l > 0.0).map(|l| l.ln().abs()).fold(0.0, f64::max) / n as f64;
            for b in &hist.bins {
                prop_assert!(b.alpha >= pr.alpha_min - slack && b.alpha <= pr.alpha_max + slack);
            }
        }
    }
}

/// Codings with digit `i` drawn with probability `c_i`, i.e. Lebesgue-random points.
fn lebesgue_coding(rng: &mut ChaCha8Rng, c: &[f64], depth: usize) -> Coding {
    let digits = (0..depth)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            c.iter()
                .position(|&ci| {
                    acc += ci;
                    u < acc
                })
                .unwrap_or(c.len() - 1)
        })
        .collect();
    Coding::finite(digits)
}

/// At finite depth the verdict can only match the a.e. statement with the
/// exact probability of the digit counts; 95% is demanded where that ceiling
/// allows it, otherwise agreement within three standard deviations.
#[test]
fn derivative_verdicts_match_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let depth = 40;
    let systems: Vec<(&str, SelfAffineSystem)> = vec![
        ("polya(35)", preset::polya(35f64.to_radians()).unwrap()),
        ("polya(20)", preset::polya(20f64.to_radians()).unwrap()),
        ("polya(10)", preset::polya(10f64.to_radians()).unwrap()),
        ("okamoto(0.7)", preset::okamoto(0.7).unwrap()),
        ("okamoto(0.6)", preset::okamoto(0.6).unwrap()),
        ("okamoto(0.55)", preset::okamoto(0.55).unwrap()),
        ("riesz-nagy(1/4)", preset::riesz_nagy(0.25).unwrap()),
        ("cantor", preset::cantor()),
    ];
    for (name, sys) in systems {
        let expected = match classify(&sys).case {
            DifferentiabilityCase::AeDifferentiable => DerivativeVerdict::ToZero,
            _ => DerivativeVerdict::ToInfinity,
        };
        let n = 100;
        let hits = (0..n)
            .filter(|_| empirical_derivative_test(&sys, &lebesgue_coding(&mut rng, sys.c(), depth), depth).verdict == expected)
            .count();
        let rate = hits as f64 / n as f64;
        let ceiling = verdict_odds(&sys, depth).of(expected);
        if ceiling >= 0.97 {
            assert!(rate >= 0.95, "{name}: {rate} with ceiling {ceiling}");
        } else {
            let sigma = (ceiling * (1.0 - ceiling) / n as f64).sqrt();
            assert!((rate - ceiling).abs() <= 3.0 * sigma, "{name}: {rate} vs ceiling {ceiling}");
        }
    }
}
