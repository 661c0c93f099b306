use proptest::prelude::*;

use selfaffine::coding::endpoint_coding;
use selfaffine::preset::{self, from_measure, MeasureSpec};
use selfaffine::{Coding, Evaluator, SelfAffineSystem};

const TOL: f64 = 1e-12;

fn system(which: usize, p: f64) -> SelfAffineSystem {
    match which {
        0 => preset::polya(0.05 + p * 0.7).unwrap(),
        1 => preset::okamoto(0.5 + 0.49 * p).unwrap(),
        2 => preset::riesz_nagy(0.05 + 0.4 * p).unwrap(),
        3 => preset::gray(0.55 + 0.4 * p).unwrap(),
        _ => preset::cantor(),
    }
}

fn any_system() -> impl Strategy<Value = SelfAffineSystem> {
    (0usize..5, 0.0f64..1.0).prop_map(|(w, p)| system(w, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn self_affinity_holds_on_long_codings(sys in any_system(), seed in prop::collection::vec(0usize..64, 1200)) {
        let ev = Evaluator::new(&sys);
        let m = sys.m();
        let w: Vec<usize> = seed.iter().map(|d| d % m).collect();
        let tail = ev.eval_coding(&Coding::finite(w.clone()), TOL);
        for i in 0..m {
            let head = ev.eval_coding(&Coding::finite([vec![i], w.clone()].concat()), TOL);
            let r = (head.value - sys.map(i).apply(&tail.value)).norm();
            prop_assert!(r <= 2.0 * TOL, "digit {i}: residual {r:e}");
        }
    }

    #[test]
    fn chord_matches_scale_product(sys in any_system(), seed in prop::collection::vec(0usize..64, 1..=20)) {
        let ev = Evaluator::new(&sys);
        let w: Vec<usize> = seed.iter().map(|d| d % sys.m()).collect();
        let product: f64 = w.iter().map(|&i| sys.lambda(i)).product();
        let end = |right| ev.eval_coding(&endpoint_coding(&sys, right).prepend(&w), TOL).value;
        let chord = (end(true) - end(false)).norm();
        prop_assert!((chord - product).abs() <= 1e-9);
        prop_assert!((ev.chord_increment(&w).numeric - product).abs() <= 1e-9);
    }

    #[test]
    fn seed_point_does_not_matter(sys in any_system(), seed in prop::collection::vec(0usize..64, 1200)) {
        let ev = Evaluator::new(&sys);
        let w: Vec<usize> = seed.iter().map(|d| d % sys.m()).collect();
        let from_a = ev.iterate(w.iter().copied(), TOL, &sys.a());
        let from_b = ev.iterate(w.iter().copied(), TOL, &sys.b());
        prop_assert!((from_a.value - from_b.value).norm() <= from_a.error_bound + from_b.error_bound);
    }

    #[test]
    fn riesz_nagy_and_gray_share_increments(a in 0.05f64..0.45, n in 1usize..=10) {
        let increments = |sys: &SelfAffineSystem| {
            let pts = Evaluator::new(sys).sample_curve(n).unwrap().points;
            let mut inc: Vec<f64> = pts.windows(2).map(|w| (&w[1].value - &w[0].value).norm()).collect();
            inc.sort_by(f64::total_cmp);
            inc
        };
        let plain = increments(&preset::riesz_nagy(a).unwrap());
        let flipped = increments(&preset::gray(a).unwrap());
        for (x, y) in plain.iter().zip(&flipped) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn adjacent_pieces_meet() {
    for which in 0..5 {
        let sys = system(which, 0.37);
        let ev = Evaluator::new(&sys);
        let levels = if sys.m() == 2 { 12 } else { 8 };
        for n in 1..=levels {
            let sample = ev.sample_curve(n).unwrap();
            // Recompute each endpoint from the piece on its right.
            let mut words: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..n {
                words = words.iter().flat_map(|w| (0..sys.m()).map(move |d| [w.clone(), vec![d]].concat())).collect();
            }
            let mut pieces: Vec<(f64, nalgebra::DVector<f64>)> = words
                .iter()
                .map(|w| {
                    let iv = selfaffine::coding::interval_of(&sys, w);
                    let forward = w.iter().filter(|&&d| sys.epsilon()[d]).count() % 2 == 0;
                    let left_value = ev.piece(w).apply(&sys.endpoint(!forward));
                    (iv.left, left_value)
                })
                .collect();
            pieces.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (p, (left, v)) in sample.points.iter().zip(&pieces) {
                assert!((p.t - left).abs() < 1e-12);
                assert!((&p.value - v).norm() <= 1e-12, "level {n} at {left}");
            }
            // Consecutive samples: the right end of each piece is the next sample.
            for (k, w) in sort_by_left(&sys, &words).iter().enumerate() {
                let forward = w.iter().filter(|&&d| sys.epsilon()[d]).count() % 2 == 0;
                let right_value = ev.piece(w).apply(&sys.endpoint(forward));
                let next = &sample.points[k + 1];
                assert!((right_value - &next.value).norm() <= 1e-12 + sample.points[k].err);
            }
        }
    }
}

fn sort_by_left(sys: &SelfAffineSystem, words: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut v: Vec<(f64, Vec<usize>)> =
        words.iter().map(|w| (selfaffine::coding::interval_of(sys, w).left, w.clone())).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    v.into_iter().map(|(_, w)| w).collect()
}

#[test]
fn distribution_functions_are_monotone() {
    let measure = from_measure(&MeasureSpec {
        intervals: vec![(0.0, 0.2), (0.3, 0.7), (0.9, 1.0)],
        reversed: vec![false, false, false],
        weights: vec![0.5, 0.2, 0.3],
    })
    .unwrap();
    for sys in [preset::riesz_nagy(0.2).unwrap(), preset::okamoto(0.4).unwrap(), preset::cantor(), measure] {
        let pts = Evaluator::new(&sys).sample_curve(7).unwrap().points;
        for w in pts.windows(2) {
            assert!(w[1].value[0] >= w[0].value[0] - 1e-15);
        }
    }
}
