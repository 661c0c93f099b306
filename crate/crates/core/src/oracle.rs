//! Formula-free estimators used to cross-check the analytic results.

use serde::Serialize;
use thiserror::Error;

use crate::coding::{standard_coding, Coding};
use crate::evaluator::Evaluator;
use crate::holder::Subordination;
use crate::system::SelfAffineSystem;

/// Increments below this are treated as zero.
pub const INCREMENT_FLOOR: f64 = 1e-14;
/// Largest `(#nonconstant maps)^n` accepted by [`empirical_spectrum`].
pub const MAX_SPECTRUM_STRINGS: f64 = (1u64 << 22) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("level {level} gives {count} strings, more than 2^22")]
    LevelTooLarge { level: usize, count: f64 },
    #[error("need at least {need} scales, got {have}")]
    TooFewScales { need: usize, have: usize },
}

/// Least-squares slope of `ln(increment)` against `ln(h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ExponentFit {
    Slope { slope: f64, stderr: f64, used: usize },
    /// Every increment vanished.
    Infinite,
}

impl ExponentFit {
    pub fn slope(&self) -> f64 {
        match *self {
            ExponentFit::Slope { slope, .. } => slope,
            ExponentFit::Infinite => f64::INFINITY,
        }
    }

    pub fn stderr(&self) -> f64 {
        match *self {
            ExponentFit::Slope { stderr, .. } => stderr,
            ExponentFit::Infinite => 0.0,
        }
    }
}

fn fit(points: &[(f64, f64)]) -> ExponentFit {
    let n = points.len();
    if n == 0 {
        return ExponentFit::Infinite;
    }
    if n < 2 {
        return ExponentFit::Slope { slope: f64::NAN, stderr: f64::INFINITY, used: n };
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let stderr = if n > 2 {
        let sse: f64 = points.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    ExponentFit::Slope { slope, stderr, used: n }
}

/// Dyadic scales `2^-k` for `k` in `kmin..=kmax`.
pub fn dyadic_scales(kmin: i32, kmax: i32) -> Vec<f64> {
    (kmin..=kmax).map(|k| 2f64.powi(-k)).collect()
}

const EVAL_TOL: f64 = 1e-15;

/// Slope of `ln max(|f(t+h) - f(t)|, |f(t-h) - f(t)|)` against `ln h`.
///
/// Sides leaving `[0, 1]` are skipped; increments below [`INCREMENT_FLOOR`]
/// are dropped from the fit. A vanishing increment at the smallest scale means
/// `f` is flat around `t` and gives [`ExponentFit::Infinite`].
pub fn empirical_chord_exponent(ev: &Evaluator, t: f64, scales: &[f64]) -> Result<ExponentFit, OracleError> {
    if scales.len() < 8 {
        return Err(OracleError::TooFewScales { need: 8, have: scales.len() });
    }
    let centre = ev.eval(t, EVAL_TOL).value;
    let increment = |h: f64| {
        let side = |s: f64| {
            if (0.0..=1.0).contains(&s) {
                (ev.eval(s, EVAL_TOL).value - &centre).norm()
            } else {
                0.0
            }
        };
        side(t + h).max(side(t - h))
    };
    let finest = scales.iter().copied().fold(f64::INFINITY, f64::min);
    if increment(finest) < INCREMENT_FLOOR {
        return Ok(ExponentFit::Infinite);
    }
    let points: Vec<(f64, f64)> = scales
        .iter()
        .filter_map(|&h| {
            let inc = increment(h);
            (inc >= INCREMENT_FLOOR).then(|| (h.ln(), inc.ln()))
        })
        .collect();
    Ok(fit(&points))
}

/// Slope of `ln |f(t+h) - 2 f(t) + f(t-h)|` against `ln h`.
pub fn second_difference_exponent(ev: &Evaluator, t: f64, scales: &[f64]) -> Result<ExponentFit, OracleError> {
    if scales.len() < 8 {
        return Err(OracleError::TooFewScales { need: 8, have: scales.len() });
    }
    let centre = ev.eval(t, EVAL_TOL).value;
    let points: Vec<(f64, f64)> = scales
        .iter()
        .filter(|&&h| t - h >= 0.0 && t + h <= 1.0)
        .filter_map(|&h| {
            let d = ev.eval(t + h, EVAL_TOL).value + ev.eval(t - h, EVAL_TOL).value - &centre * 2.0;
            let d = d.norm();
            (d >= INCREMENT_FLOOR).then(|| (h.ln(), d.ln()))
        })
        .collect();
    Ok(fit(&points))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumBin {
    pub alpha: f64,
    pub count: u64,
    pub dim_estimate: f64,
}

/// Histogram of coarse exponents `ln Π λ / ln Π c` over all level-`n` strings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalSpectrum {
    pub level: usize,
    pub bins: Vec<SpectrumBin>,
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Calls `visit(counts)` for every composition of `n` into `parts` nonnegative parts.
fn compositions(n: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(left: usize, slot: usize, buf: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            visit(buf);
            return;
        }
        for k in 0..=left {
            buf[slot] = k;
            rec(left - k, slot + 1, buf, visit);
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = vec![0; parts];
    rec(n, 0, &mut buf, visit);
}

/// Coarse multifractal histogram over strings of nonconstant digits.
///
/// Strings are grouped by digit counts; each group has one exponent and a
/// multinomial number of members. The dimension estimate of a bin is
/// `ln(count) / mean(-ln |I_w|)`.
pub fn empirical_spectrum(sys: &SelfAffineSystem, level: usize, bins: usize) -> Result<EmpiricalSpectrum, OracleError> {
    let plus = sys.i_plus();
    let count = (plus.len() as f64).powi(level as i32);
    if count > MAX_SPECTRUM_STRINGS {
        return Err(OracleError::LevelTooLarge { level, count });
    }
    let ln_l: Vec<f64> = plus.iter().map(|&i| sys.lambda(i).ln()).collect();
    let ln_c: Vec<f64> = plus.iter().map(|&i| sys.c()[i].ln()).collect();
    let lf = ln_factorials(level);
    let mut groups: Vec<(f64, f64, f64)> = Vec::new();
    compositions(level, plus.len(), &mut |k: &[usize]| {
        let num: f64 = k.iter().zip(&ln_l).map(|(&k, l)| k as f64 * l).sum();
        let den: f64 = k.iter().zip(&ln_c).map(|(&k, c)| k as f64 * c).sum();
        let members = (lf[level] - k.iter().map(|&k| lf[k]).sum::<f64>()).exp().round();
        groups.push((num / den, members, -den));
    });
    let lo = groups.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
    let hi = groups.iter().map(|g| g.0).fold(f64::NEG_INFINITY, f64::max);
    let spread = hi - lo;
    let nbins = if spread <= 1e-12 * hi.abs().max(1.0) { 1 } else { bins.max(1) };
    let width = if nbins == 1 { 0.0 } else { spread / nbins as f64 };
    let mut acc = vec![(0.0f64, 0.0f64); nbins];
    for &(alpha, members, len) in &groups {
        let b = if nbins == 1 { 0 } else { (((alpha - lo) / width) as usize).min(nbins - 1) };
        acc[b].0 += members;
        acc[b].1 += members * len;
    }
    let bins = acc
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| *n > 0.0)
        .map(|(b, &(n, total_len))| SpectrumBin {
            alpha: if nbins == 1 { 0.5 * (lo + hi) } else { lo + (b as f64 + 0.5) * width },
            count: n as u64,
            dim_estimate: if level == 0 { 0.0 } else { n.ln() / (total_len / n) },
        })
        .collect();
    Ok(EmpiricalSpectrum { level, bins })
}

/// Trend of the chord slope `Π λ / Π c` along the coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeVerdict {
    ToZero,
    ToInfinity,
    BoundedOscillating,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeTrace {
    pub verdict: DerivativeVerdict,
    /// `ln(Π λ / Π c)` after each digit; `-∞` after a constant map.
    pub log_ratios: Vec<f64>,
}

/// Tolerance per digit within which the final log-ratio counts as zero.
const BOUNDED_PER_DIGIT: f64 = 1e-9;

fn verdict_of(final_log_ratio: f64, depth: usize) -> DerivativeVerdict {
    if final_log_ratio.abs() <= BOUNDED_PER_DIGIT * depth.max(1) as f64 {
        DerivativeVerdict::BoundedOscillating
    } else if final_log_ratio > 0.0 {
        DerivativeVerdict::ToInfinity
    } else {
        DerivativeVerdict::ToZero
    }
}

/// Follows the chord slopes over the basic intervals containing the point.
pub fn empirical_derivative_test(sys: &SelfAffineSystem, coding: &Coding, depth: usize) -> DerivativeTrace {
    let mut acc = 0.0;
    let log_ratios: Vec<f64> = coding
        .digits()
        .take(depth)
        .map(|i| {
            acc += (sys.lambda(i) / sys.c()[i]).ln();
            acc
        })
        .collect();
    let last = log_ratios.last().copied().unwrap_or(0.0);
    DerivativeTrace { verdict: verdict_of(last, log_ratios.len()), log_ratios }
}

/// [`empirical_derivative_test`] at a real point.
///
/// Digits are kept only while the basic interval is longer than
/// [`RESOLVABLE_LENGTH`]; beyond that a double no longer determines them.
pub fn empirical_derivative_test_at(sys: &SelfAffineSystem, t: f64, depth: usize) -> DerivativeTrace {
    let sc = standard_coding(sys, t, depth);
    let mut length = 1.0;
    let usable = sc
        .coding
        .digits()
        .take(depth)
        .take_while(|&i| {
            length *= sys.c()[i];
            length > RESOLVABLE_LENGTH
        })
        .count();
    empirical_derivative_test(sys, &sc.coding, usable)
}

/// Shortest basic interval whose digits a double `t` still resolves.
pub const RESOLVABLE_LENGTH: f64 = 1e-14;

/// Lebesgue probability of each verdict at a fixed depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictOdds {
    pub to_zero: f64,
    pub to_infinity: f64,
    pub bounded: f64,
}

impl VerdictOdds {
    pub fn of(&self, v: DerivativeVerdict) -> f64 {
        match v {
            DerivativeVerdict::ToZero => self.to_zero,
            DerivativeVerdict::ToInfinity => self.to_infinity,
            DerivativeVerdict::BoundedOscillating => self.bounded,
        }
    }
}

/// Exact verdict probabilities for a uniformly random point, by enumerating digit counts.
pub fn verdict_odds(sys: &SelfAffineSystem, depth: usize) -> VerdictOdds {
    let m = sys.m();
    let lf = ln_factorials(depth);
    let ln_c: Vec<f64> = sys.c().iter().map(|c| c.ln()).collect();
    let step: Vec<f64> = (0..m).map(|i| (sys.lambda(i) / sys.c()[i]).ln()).collect();
    let mut odds = VerdictOdds { to_zero: 0.0, to_infinity: 0.0, bounded: 0.0 };
    compositions(depth, m, &mut |k: &[usize]| {
        let ln_p = lf[depth] - k.iter().map(|&k| lf[k]).sum::<f64>()
            + k.iter().zip(&ln_c).map(|(&k, c)| k as f64 * c).sum::<f64>();
        let total: f64 = k.iter().zip(&step).filter(|(&k, _)| k > 0).map(|(&k, s)| k as f64 * s).sum();
        let p = ln_p.exp();
        match verdict_of(total, depth) {
            DerivativeVerdict::ToZero => odds.to_zero += p,
            DerivativeVerdict::ToInfinity => odds.to_infinity += p,
            DerivativeVerdict::BoundedOscillating => odds.bounded += p,
        }
    });
    odds
}

/// Double-double number: `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn renorm(s: f64, e: f64) -> Dd {
        let hi = s + e;
        Dd { hi, lo: e - (hi - s) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = self.hi + o.hi;
        let bb = s - self.hi;
        let e = (self.hi - (s - bb)) + (o.hi - bb) + self.lo + o.lo;
        Dd::renorm(s, e)
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + self.hi * o.lo + self.lo * o.hi;
        Dd::renorm(p, e)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2).add(Dd::from(q3))
    }

    fn lt(self, o: Dd) -> bool {
        self.sub(o).hi < 0.0
    }
}

/// One-dimensional affine map `x ↦ offset + slope · x` in double-double.
#[derive(Clone, Copy)]
struct DdAffine {
    offset: Dd,
    slope: Dd,
}

impl DdAffine {
    const IDENTITY: DdAffine = DdAffine { offset: Dd::ZERO, slope: Dd::ONE };

    /// `self ∘ (x ↦ shift + sign · scale · x)`.
    fn then(self, scale: f64, reverse: bool, shift: f64) -> DdAffine {
        let signed = if reverse { -scale } else { scale };
        DdAffine { offset: self.offset.add(self.slope.mul(Dd::from(shift))), slope: self.slope.mul(Dd::from(signed)) }
    }

    fn at(self, x: Dd) -> Dd {
        self.offset.add(self.slope.mul(x))
    }
}

fn dd_map(sys: &SelfAffineSystem, digits: &[usize]) -> DdAffine {
    digits.iter().fold(DdAffine::IDENTITY, |acc, &i| {
        let map = sys.map(i);
        if map.is_constant() {
            DdAffine { offset: acc.at(Dd::from(map.translation()[0])), slope: Dd::ZERO }
        } else {
            acc.then(map.scale(), map.rotation()[(0, 0)] < 0.0, map.translation()[0])
        }
    })
}

/// `g` at a periodic coding, in double-double.
fn time_change_value(g: &SelfAffineSystem, coding: &Coding) -> Dd {
    let head = dd_map(g, coding.prefix());
    let cycle = dd_map(g, coding.tail());
    let fixed = cycle.offset.div(Dd::ONE.sub(cycle.slope));
    head.at(fixed)
}

/// Digits of `y` under the partition of `h`, in double-double, until the
/// interval length drops below `width`.
fn dd_digits(h: &SelfAffineSystem, y: Dd, width: f64, cap: usize) -> Vec<usize> {
    let m = h.m();
    let breaks: Vec<Dd> = h.breaks().iter().map(|&b| Dd::from(b)).collect();
    let mut map = DdAffine::IDENTITY;
    let mut digits = Vec::new();
    while map.slope.hi.abs() > width && digits.len() < cap {
        let mut chosen = None;
        for i in (0..m).rev() {
            let (x, z) = (map.at(breaks[i]), map.at(breaks[i + 1]));
            let (lo, hi) = if x.lt(z) { (x, z) } else { (z, x) };
            if !y.lt(lo) && !hi.lt(y) {
                chosen = Some(i);
                break;
            }
        }
        let i = chosen.unwrap_or_else(|| {
            let below = y.lt(map.at(breaks[0])) == (map.slope.hi > 0.0);
            if below {
                0
            } else {
                m - 1
            }
        });
        digits.push(i);
        map = map.then(h.c()[i], h.epsilon()[i], h.sigma(i));
    }
    digits
}

/// `|f(t) - h(g(t))|` at the point of a periodic coding.
///
/// `f` is evaluated in closed form; `g(t)` in double-double; `h` is then
/// followed along the double-double digits of `g(t)`. `h_ev` must evaluate
/// `sub.h`.
pub fn subordination_residual(f: &Evaluator, sub: &Subordination, h_ev: &Evaluator, coding: &Coding) -> f64 {
    let direct = f.eval_coding(coding, EVAL_TOL).value;
    let y = time_change_value(&sub.g, coding);
    let digits = dd_digits(&sub.h, y, 1e-28, 400);
    let composed = h_ev.iterate(digits.into_iter(), 0.0, &sub.h.a()).value;
    (direct - composed).norm()
}
