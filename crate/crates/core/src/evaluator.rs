//! Evaluation of the self-affine function and derived curve data.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use nalgebra::DVector;
use thiserror::Error;

use crate::coding::{standard_coding, Coding, TimeMap};
use crate::system::{SelfAffineSystem, Similitude};

/// Hard cap on the digits read from a real `t`.
pub const MAX_DEPTH: usize = 4096;
/// Largest number of level intervals [`Evaluator::sample_curve`] will enumerate.
pub const MAX_SAMPLE_INTERVALS: usize = 1 << 24;

const COVER_SCALE: f64 = 1e-3;
const COVER_CAP: usize = 50_000;
const SPREAD_TOL: f64 = 1e-7;
const SPREAD_POPS: usize = 400_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("level {level} needs {m}^{level} intervals, more than 2^24")]
    LevelTooLarge { level: usize, m: usize },
}

/// A value of `f` with a bound on its distance to the true value.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: DVector<f64>,
    pub error_bound: f64,
    /// Number of maps composed.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePoint {
    pub t: f64,
    pub value: DVector<f64>,
    /// Bound on `|f(s) - value|` for `s` between this point and the next.
    pub err: f64,
}

/// Values at all endpoints of one level of basic intervals, in increasing `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSample {
    pub level: usize,
    pub points: Vec<SamplePoint>,
}

/// `|f(v) - f(u)|` over a basic interval `[u, v]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordIncrement {
    /// Product of the scales along the digits.
    pub product: f64,
    /// The same quantity from the composed map.
    pub numeric: f64,
}

/// Evaluator bound to one system, caching its diameter data.
#[derive(Debug)]
pub struct Evaluator<'a> {
    sys: &'a SelfAffineSystem,
    diameter: f64,
    spread: OnceLock<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(sys: &'a SelfAffineSystem) -> Self {
        Self { sys, diameter: diameter_bound(sys), spread: OnceLock::new() }
    }

    pub fn system(&self) -> &SelfAffineSystem {
        self.sys
    }

    /// Upper bound `D` on the diameter of the range of `f`.
    pub fn diameter_bound(&self) -> f64 {
        self.diameter
    }

    /// `f(t)`, truncated once `Π λ · D <= tol` or once the digits of `t`
    /// are exhausted (see [`resolvable_depth`]).
    pub fn eval(&self, t: f64, tol: f64) -> Evaluation {
        let sc = standard_coding(self.sys, t, resolvable_depth(self.sys));
        self.eval_coding(&sc.coding, tol)
    }

    /// `f` at the point addressed by `coding`.
    ///
    /// Eventually periodic codings are evaluated in closed form through the
    /// fixed point of the tail's composed map; the error bound is then 0 up to
    /// rounding.
    pub fn eval_coding(&self, coding: &Coding, tol: f64) -> Evaluation {
        if coding.is_periodic() {
            let head = self.piece(coding.prefix());
            let cycle = self.piece(coding.tail());
            return Evaluation {
                value: head.apply(&cycle.fixed_point()),
                error_bound: 0.0,
                depth: coding.prefix().len() + coding.tail().len(),
            };
        }
        self.iterate(coding.digits(), tol, &self.sys.a())
    }

    /// Fixed-point iteration along `digits` starting from `seed`.
    ///
    /// Stops once the composed map shrinks the curve below `tol` or the digits
    /// run out.
    pub fn iterate(&self, digits: impl Iterator<Item = usize>, tol: f64, seed: &DVector<f64>) -> Evaluation {
        let mut map = Similitude::identity(self.sys.d());
        let mut depth = 0;
        for i in digits {
            if map.scale() * self.diameter <= tol {
                break;
            }
            map = map.compose(self.sys.map(i));
            depth += 1;
            if map.is_constant() {
                return Evaluation { value: map.translation().clone(), error_bound: 0.0, depth };
            }
        }
        Evaluation { value: map.apply(seed), error_bound: map.scale() * self.diameter, depth }
    }

    /// `S_{w_1} ∘ … ∘ S_{w_n}`.
    pub fn piece(&self, digits: &[usize]) -> Similitude {
        digits
            .iter()
            .fold(Similitude::identity(self.sys.d()), |acc, &i| acc.compose(self.sys.map(i)))
    }

    /// Values at all level-`level` interval endpoints.
    pub fn sample_curve(&self, level: usize) -> Result<CurveSample, EvalError> {
        let m = self.sys.m();
        let too_big = (0..level).try_fold(1usize, |acc, _| acc.checked_mul(m).filter(|&n| n <= MAX_SAMPLE_INTERVALS));
        if too_big.is_none() {
            return Err(EvalError::LevelTooLarge { level, m });
        }
        let mut points = Vec::new();
        self.visit(level, TimeMap::IDENTITY, Similitude::identity(self.sys.d()), &mut points);
        points.push(SamplePoint { t: 1.0, value: self.sys.b(), err: 0.0 });
        Ok(CurveSample { level, points })
    }

    fn visit(&self, remaining: usize, time: TimeMap, map: Similitude, out: &mut Vec<SamplePoint>) {
        let forward = time.slope > 0.0;
        if remaining == 0 {
            let (left, _) = time.bounds();
            let value = map.apply(&self.sys.endpoint(!forward));
            out.push(SamplePoint { t: left, value, err: map.scale() * self.diameter });
            return;
        }
        let m = self.sys.m();
        let order: Box<dyn Iterator<Item = usize>> = if forward { Box::new(0..m) } else { Box::new((0..m).rev()) };
        for i in order {
            self.visit(remaining - 1, time.push(self.sys, i), map.compose(self.sys.map(i)), out);
        }
    }

    /// `ω_f([0, 1]) = diam f([0, 1])`, within about `1e-7`.
    pub fn spread(&self) -> f64 {
        *self.spread.get_or_init(|| spread(self.sys))
    }

    /// Oscillation of `f` over the basic interval with these digits.
    pub fn oscillation(&self, digits: &[usize]) -> f64 {
        self.spread() * digits.iter().map(|&i| self.sys.lambda(i)).product::<f64>()
    }

    pub fn chord_increment(&self, digits: &[usize]) -> ChordIncrement {
        let product = digits.iter().map(|&i| self.sys.lambda(i)).product();
        let piece = self.piece(digits);
        let numeric = (piece.apply(&self.sys.b()) - piece.apply(&self.sys.a())).norm();
        ChordIncrement { product, numeric }
    }
}

/// Digits after which every basic interval is shorter than the spacing of
/// doubles, capped at [`MAX_DEPTH`].
pub fn resolvable_depth(sys: &SelfAffineSystem) -> usize {
    let c_max = sys.c().iter().copied().fold(0.0, f64::max);
    let n = (54.0 * std::f64::consts::LN_2 / -c_max.ln()).ceil() as usize;
    n.clamp(1, MAX_DEPTH)
}

/// `f(t)` with a fresh evaluator.
pub fn eval(sys: &SelfAffineSystem, t: f64, tol: f64) -> Evaluation {
    Evaluator::new(sys).eval(t, tol)
}

/// Level-`level` samples with a fresh evaluator.
pub fn sample_curve(sys: &SelfAffineSystem, level: usize) -> Result<CurveSample, EvalError> {
    Evaluator::new(sys).sample_curve(level)
}

fn midpoint(sys: &SelfAffineSystem) -> DVector<f64> {
    (sys.a() + sys.b()) * 0.5
}

/// Radius of a ball about the midpoint of `a, b` mapped into itself by every `S_i`.
fn invariant_radius(sys: &SelfAffineSystem) -> f64 {
    let z = midpoint(sys);
    sys.maps()
        .iter()
        .map(|s| (s.apply(&z) - &z).norm() / (1.0 - s.scale()))
        .fold(0.0, f64::max)
}

/// Bounding-box diagonal of a cover by images of the invariant ball.
fn diameter_bound(sys: &SelfAffineSystem) -> f64 {
    let z = midpoint(sys);
    let r = invariant_radius(sys);
    let d = sys.d();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    let mut add = |map: &Similitude| {
        let centre = map.apply(&z);
        let rad = map.scale() * r;
        for k in 0..d {
            lo[k] = lo[k].min(centre[k] - rad);
            hi[k] = hi[k].max(centre[k] + rad);
        }
    };
    let mut level = vec![Similitude::identity(d)];
    while !level.is_empty() {
        let (open, done): (Vec<_>, Vec<_>) = level.into_iter().partition(|s| s.scale() >= COVER_SCALE);
        done.iter().for_each(&mut add);
        if open.len() * sys.m() > COVER_CAP {
            open.iter().for_each(&mut add);
            break;
        }
        level = open.iter().flat_map(|s| sys.maps().iter().map(move |t| s.compose(t))).collect();
    }
    let diag = lo.iter().zip(&hi).map(|(l, h)| (h - l).powi(2)).sum::<f64>().sqrt();
    diag.min(2.0 * r)
}

struct Pair {
    upper: f64,
    u: Similitude,
    v: Similitude,
}

impl PartialEq for Pair {
    fn eq(&self, other: &Self) -> bool {
        self.upper == other.upper
    }
}
impl Eq for Pair {}
impl PartialOrd for Pair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// Diameter of the range by branch and bound over pairs of cylinders.
fn spread(sys: &SelfAffineSystem) -> f64 {
    let z = midpoint(sys);
    let r = invariant_radius(sys);
    let (a, b) = (sys.a(), sys.b());
    let upper = |u: &Similitude, v: &Similitude| (u.apply(&z) - v.apply(&z)).norm() + (u.scale() + v.scale()) * r;
    let lower = |u: &Similitude, v: &Similitude| {
        let pu = [u.apply(&a), u.apply(&b)];
        let pv = [v.apply(&a), v.apply(&b)];
        pu.iter()
            .flat_map(|p| pv.iter().map(move |q| (p - q).norm()))
            .fold(0.0, f64::max)
    };
    let root = Similitude::identity(sys.d());
    let mut best = lower(&root, &root);
    let mut heap = BinaryHeap::new();
    heap.push(Pair { upper: upper(&root, &root), u: root.clone(), v: root });
    let mut pops = 0;
    while let Some(Pair { upper: top, u, v }) = heap.pop() {
        if top - best <= SPREAD_TOL {
            return best;
        }
        pops += 1;
        if pops > SPREAD_POPS {
            return top;
        }
        let same = u == v;
        let children: Vec<(Similitude, Similitude)> = if same {
            let kids: Vec<Similitude> = sys.maps().iter().map(|s| u.compose(s)).collect();
            (0..kids.len())
                .flat_map(|i| (i..kids.len()).map(move |j| (i, j)))
                .map(|(i, j)| (kids[i].clone(), kids[j].clone()))
                .collect()
        } else if u.scale() >= v.scale() {
            sys.maps().iter().map(|s| (u.compose(s), v.clone())).collect()
        } else {
            sys.maps().iter().map(|s| (u.clone(), v.compose(s))).collect()
        };
        for (x, y) in children {
            best = best.max(lower(&x, &y));
            let up = upper(&x, &y);
            if up > best + SPREAD_TOL {
                heap.push(Pair { upper: up, u: x, v: y });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;

    #[test]
    fn okamoto_value_at_one_third() {
        let sys = preset::okamoto(2.0 / 3.0).unwrap();
        let e = eval(&sys, 1.0 / 3.0, 1e-12);
        assert!((e.value[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn endpoints_map_to_a_and_b() {
        let sys = preset::polya(25f64.to_radians()).unwrap();
        let ev = Evaluator::new(&sys);
        assert!((ev.eval(0.0, 1e-12).value - sys.a()).norm() < 1e-15);
        assert!((ev.eval(1.0, 1e-12).value - sys.b()).norm() < 1e-15);
    }

    #[test]
    fn gray_midpoint() {
        let sys = preset::gray(0.3).unwrap();
        assert!((eval(&sys, 0.5, 1e-12).value[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn level_zero_and_one_samples() {
        let sys = preset::riesz_nagy(0.25).unwrap();
        let s = sample_curve(&sys, 0).unwrap();
        assert_eq!(s.points.iter().map(|p| p.t).collect::<Vec<_>>(), vec![0.0, 1.0]);
        let s = sample_curve(&sys, 1).unwrap();
        let got: Vec<(f64, f64)> = s.points.iter().map(|p| (p.t, p.value[0])).collect();
        assert_eq!(got, vec![(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]);

        let sys = preset::okamoto(2.0 / 3.0).unwrap();
        let s = sample_curve(&sys, 1).unwrap();
        let want = [(0.0, 0.0), (1.0 / 3.0, 2.0 / 3.0), (2.0 / 3.0, 1.0 / 3.0), (1.0, 1.0)];
        for (p, (t, x)) in s.points.iter().zip(want) {
            assert!((p.t - t).abs() < 1e-15 && (p.value[0] - x).abs() < 1e-15);
        }
    }

    #[test]
    fn oversized_level_is_refused() {
        let sys = preset::okamoto(0.6).unwrap();
        assert!(sample_curve(&sys, 16).is_err());
    }

    #[test]
    fn oscillation_cases() {
        let sys = preset::riesz_nagy(0.3).unwrap();
        let ev = Evaluator::new(&sys);
        assert!((ev.oscillation(&[]) - 1.0).abs() < 1e-6);
        assert!((ev.oscillation(&[0, 0]) - 0.09).abs() < 1e-6);
        let cantor = preset::cantor();
        assert_eq!(Evaluator::new(&cantor).oscillation(&[0, 1]), 0.0);
    }

    #[test]
    fn chord_increment_cases() {
        let theta = 25f64.to_radians();
        let sys = preset::polya(theta).unwrap();
        let ev = Evaluator::new(&sys);
        let ch = ev.chord_increment(&[0, 1]);
        assert!((ch.product - theta.sin() * theta.cos()).abs() < 1e-15);
        assert!((ch.numeric - ch.product).abs() < 1e-15);
        assert_eq!(ev.chord_increment(&[]).product, 1.0);
        let cantor = preset::cantor();
        assert_eq!(Evaluator::new(&cantor).chord_increment(&[2, 1]).product, 0.0);
    }

    #[test]
    fn diameter_bound_covers_polya_triangle() {
        let sys = preset::polya(25f64.to_radians()).unwrap();
        let d = Evaluator::new(&sys).diameter_bound();
        assert!((1.0..2.0).contains(&d), "{d}");
    }
}
