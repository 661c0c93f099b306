//! Analytic multifractal spectrum.
//!
//! All logarithms are natural. With `ρ_i = ln λ_i / ln c_i` over the
//! nonconstant maps, `β(q)` solves `Σ λ_i^q c_i^β = 1` and the spectrum is
//! its Legendre transform `β*(α) = inf_q (α q + β(q))` on `[α_min, α_max]`.

use serde::Serialize;
use thiserror::Error;

use crate::numeric::{bisect_decreasing, log_sum_exp, similarity_dimension};
use crate::system::SelfAffineSystem;

/// Distance from an end of `[α_min, α_max]` below which the end formula is used.
pub const ENDPOINT_CUTOVER: f64 = 1e-9;
/// Tolerance for grouping equal `ρ_i`.
const RHO_TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("alpha = {alpha} outside [{min}, {max}]")]
    OutOfRange { alpha: f64, min: f64, max: f64 },
    #[error("probability vector invalid: {0}")]
    Probability(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumProfile {
    /// `ρ_i` for each index in `i_plus`, same order.
    pub rho: Vec<f64>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_hat: f64,
    pub s_hat: f64,
    pub s_min: f64,
    pub s_max: f64,
    /// 0-based indices of constant maps.
    pub i_zero: Vec<usize>,
    /// 0-based indices of nonconstant maps.
    pub i_plus: Vec<usize>,
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self, SpectrumError> {
        if p.iter().any(|&x| !(x >= 0.0)) {
            return Err(SpectrumError::Probability("negative or NaN entry".into()));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(SpectrumError::Probability(format!("entries sum to {total}")));
        }
        Ok(Self(p))
    }

    fn normalized(mut p: Vec<f64>) -> Self {
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Spectrum data precomputed for one system.
#[derive(Debug, Clone)]
pub struct Spectrum {
    m: usize,
    plus: Vec<usize>,
    ln_lambda: Vec<f64>,
    ln_c: Vec<f64>,
    profile: SpectrumProfile,
}

impl Spectrum {
    pub fn new(sys: &SelfAffineSystem) -> Self {
        let plus = sys.i_plus();
        let ln_lambda: Vec<f64> = plus.iter().map(|&i| sys.lambda(i).ln()).collect();
        let ln_c: Vec<f64> = plus.iter().map(|&i| sys.c()[i].ln()).collect();
        let rho: Vec<f64> = ln_lambda.iter().zip(&ln_c).map(|(l, c)| l / c).collect();
        let alpha_min = rho.iter().copied().fold(f64::INFINITY, f64::min);
        let alpha_max = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let class = |target: f64| -> Vec<f64> {
            rho.iter()
                .zip(&ln_c)
                .filter(|(r, _)| (**r - target).abs() <= RHO_TIE * target.abs().max(1.0))
                .map(|(_, &c)| c)
                .collect()
        };
        let s_hat = similarity_dimension(&ln_c);
        let s_min = similarity_dimension(&class(alpha_min));
        let s_max = similarity_dimension(&class(alpha_max));
        let weights: Vec<f64> = ln_c.iter().map(|c| (s_hat * c).exp()).collect();
        let num: f64 = weights.iter().zip(&ln_lambda).map(|(w, l)| w * l).sum();
        let den: f64 = weights.iter().zip(&ln_c).map(|(w, c)| w * c).sum();
        let profile = SpectrumProfile {
            rho,
            alpha_min,
            alpha_max,
            alpha_hat: num / den,
            s_hat,
            s_min,
            s_max,
            i_zero: sys.i_zero(),
            i_plus: plus.clone(),
        };
        Self { m: sys.m(), plus, ln_lambda, ln_c, profile }
    }

    pub fn profile(&self) -> &SpectrumProfile {
        &self.profile
    }

    fn is_monofractal(&self) -> bool {
        self.profile.alpha_max - self.profile.alpha_min <= RHO_TIE * self.profile.alpha_max.abs().max(1.0)
    }

    /// Root of `Σ λ_i^q c_i^β = 1`.
    pub fn beta(&self, q: f64) -> f64 {
        let stars = self.ln_lambda.iter().zip(&self.ln_c).map(|(l, c)| -q * l / c);
        let (lo, hi) = stars.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let min_abs_ln_c = self.ln_c.iter().map(|c| c.abs()).fold(f64::INFINITY, f64::min);
        let hi = hi + (self.plus.len() as f64).ln() / min_abs_ln_c;
        let psi = |b: f64| log_sum_exp(self.ln_lambda.iter().zip(&self.ln_c).map(|(l, c)| q * l + b * c));
        bisect_decreasing(psi, lo, hi, 0.0)
    }

    /// Weights `λ_i^q c_i^{β(q)}` over the nonconstant maps.
    fn weights(&self, q: f64) -> Vec<f64> {
        let b = self.beta(q);
        self.ln_lambda.iter().zip(&self.ln_c).map(|(l, c)| (q * l + b * c).exp()).collect()
    }

    /// `-β'(q)`, a weighted mean of the `ρ_i`; decreasing in `q`.
    pub fn local_exponent(&self, q: f64) -> f64 {
        let w = self.weights(q);
        let num: f64 = w.iter().zip(&self.ln_lambda).map(|(w, l)| w * l).sum();
        let den: f64 = w.iter().zip(&self.ln_c).map(|(w, c)| w * c).sum();
        num / den
    }

    /// The `q` with `-β'(q) = alpha`, for `alpha` strictly inside the range.
    pub fn q_star(&self, alpha: f64) -> f64 {
        let g = |q: f64| self.local_exponent(q) - alpha;
        let mut lo = -1.0;
        while g(lo) < 0.0 && lo > -1e12 {
            lo *= 2.0;
        }
        let mut hi = 1.0;
        while g(hi) > 0.0 && hi < 1e12 {
            hi *= 2.0;
        }
        bisect_decreasing(g, lo, hi, 0.0)
    }

    fn endpoint(&self, alpha: f64) -> Option<bool> {
        let p = &self.profile;
        if (alpha - p.alpha_min).abs() < ENDPOINT_CUTOVER {
            Some(false)
        } else if (alpha - p.alpha_max).abs() < ENDPOINT_CUTOVER {
            Some(true)
        } else {
            None
        }
    }

    /// `β*(α)`; `-∞` outside `[α_min, α_max]`.
    pub fn beta_star(&self, alpha: f64) -> f64 {
        let p = &self.profile;
        if self.is_monofractal() {
            return if (alpha - p.alpha_min).abs() < ENDPOINT_CUTOVER { p.s_hat } else { f64::NEG_INFINITY };
        }
        match self.endpoint(alpha) {
            Some(false) => p.s_min,
            Some(true) => p.s_max,
            None if alpha < p.alpha_min || alpha > p.alpha_max => f64::NEG_INFINITY,
            None => {
                let q = self.q_star(alpha);
                alpha * q + self.beta(q)
            }
        }
    }

    /// Maximizer of the entropy ratio on the slice `Σ p_i (ln λ_i - α ln c_i) = 0`.
    pub fn duality_maximizer(&self, alpha: f64) -> Result<ProbabilityVector, SpectrumError> {
        let pr = &self.profile;
        let outside = alpha < pr.alpha_min - ENDPOINT_CUTOVER || alpha > pr.alpha_max + ENDPOINT_CUTOVER;
        if outside || (self.is_monofractal() && (alpha - pr.alpha_min).abs() >= ENDPOINT_CUTOVER) {
            return Err(SpectrumError::OutOfRange { alpha, min: pr.alpha_min, max: pr.alpha_max });
        }
        let mut p = vec![0.0; self.m];
        let end = if self.is_monofractal() { Some(false) } else { self.endpoint(alpha) };
        match end {
            Some(right) => {
                let (target, s) = if right { (pr.alpha_max, pr.s_max) } else { (pr.alpha_min, pr.s_min) };
                let target = if self.is_monofractal() { pr.alpha_min } else { target };
                let s = if self.is_monofractal() { pr.s_hat } else { s };
                for (k, &i) in self.plus.iter().enumerate() {
                    if (pr.rho[k] - target).abs() <= RHO_TIE * target.abs().max(1.0) {
                        p[i] = (s * self.ln_c[k]).exp();
                    }
                }
            }
            None => {
                let w = self.weights(self.q_star(alpha));
                for (k, &i) in self.plus.iter().enumerate() {
                    p[i] = w[k];
                }
            }
        }
        Ok(ProbabilityVector::normalized(p))
    }

    /// `(α, β*(α))` on an even grid including both ends.
    pub fn table(&self, grid: usize) -> SpectrumTable {
        let pr = &self.profile;
        let points = if self.is_monofractal() {
            vec![(pr.alpha_min, pr.s_hat)]
        } else {
            let grid = grid.max(2);
            (0..grid)
                .map(|k| {
                    if k == 0 {
                        (pr.alpha_min, pr.s_min)
                    } else if k + 1 == grid {
                        (pr.alpha_max, pr.s_max)
                    } else {
                        let a = pr.alpha_min + (pr.alpha_max - pr.alpha_min) * k as f64 / (grid - 1) as f64;
                        (a, self.beta_star(a))
                    }
                })
                .collect()
        };
        SpectrumTable { points, infinite_atom: !pr.i_zero.is_empty() }
    }
}

/// Sampled spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumTable {
    pub points: Vec<(f64, f64)>,
    /// Constant maps exist, so exponent `∞` occurs on a set of full measure.
    pub infinite_atom: bool,
}

pub fn profile(sys: &SelfAffineSystem) -> SpectrumProfile {
    Spectrum::new(sys).profile
}

pub fn beta(sys: &SelfAffineSystem, q: f64) -> f64 {
    Spectrum::new(sys).beta(q)
}

pub fn beta_star(sys: &SelfAffineSystem, alpha: f64) -> f64 {
    Spectrum::new(sys).beta_star(alpha)
}

pub fn duality_maximizer(sys: &SelfAffineSystem, alpha: f64) -> Result<ProbabilityVector, SpectrumError> {
    Spectrum::new(sys).duality_maximizer(alpha)
}

pub fn spectrum_table(sys: &SelfAffineSystem, grid: usize) -> SpectrumTable {
    Spectrum::new(sys).table(grid)
}

/// `Σ p_i ln p_i / Σ p_i ln c_i` with `0 ln 0 = 0`.
pub fn entropy(p: &ProbabilityVector, sys: &SelfAffineSystem) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&pi, &ci) in p.as_slice().iter().zip(sys.c()) {
        if pi > 0.0 {
            num += pi * pi.ln();
            den += pi * ci.ln();
        }
    }
    num / den
}

/// Closed-form maximizer `(p_1, p_2)` for two nonconstant maps.
pub fn two_map_maximizer(sys: &SelfAffineSystem, alpha: f64) -> Option<[f64; 2]> {
    if sys.m() != 2 || sys.i_plus().len() != 2 {
        return None;
    }
    let (l1, l2) = (sys.lambda(0).ln(), sys.lambda(1).ln());
    let (c1, c2) = (sys.c()[0].ln(), sys.c()[1].ln());
    let p1 = (alpha * c2 - l2) / (l1 - l2 - alpha * (c1 - c2));
    Some([p1, 1.0 - p1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;

    const LOG3_2: f64 = 0.630_929_753_571_457_4;

    #[test]
    fn polya_profile() {
        let t = 25f64.to_radians();
        let p = profile(&preset::polya(t).unwrap());
        assert!((p.alpha_min + t.cos().log2()).abs() < 1e-14);
        assert!((p.alpha_max + t.sin().log2()).abs() < 1e-14);
        assert!((p.alpha_hat + 0.5 * (t.sin() * t.cos()).log2()).abs() < 1e-14);
        assert!((p.s_hat - 1.0).abs() < 1e-14);
    }

    #[test]
    fn okamoto_profile() {
        let p = profile(&preset::okamoto(2.0 / 3.0).unwrap());
        assert!((p.alpha_min - (1.0 - LOG3_2)).abs() < 1e-14);
        assert!((p.alpha_max - 1.0).abs() < 1e-14);
        assert!((p.s_min - LOG3_2).abs() < 1e-14);
        assert_eq!(p.s_max, 0.0);
    }

    #[test]
    fn cantor_profile_is_a_point() {
        let p = profile(&preset::cantor());
        assert_eq!(p.i_plus, vec![0, 2]);
        for x in [p.s_hat, p.alpha_min, p.alpha_max, p.alpha_hat] {
            assert!((x - LOG3_2).abs() < 1e-14, "{x}");
        }
        let table = spectrum_table(&preset::cantor(), 11);
        assert_eq!(table.points.len(), 1);
        assert!(table.infinite_atom);
    }

    #[test]
    fn beta_closed_forms() {
        let t = 25f64.to_radians();
        let sys = preset::polya(t).unwrap();
        let sp = Spectrum::new(&sys);
        assert!((sp.beta(0.0) - sp.profile().s_hat).abs() < 1e-15);
        for q in [-3.0, -0.5, 1.0, 2.5] {
            let exact = (t.sin().powf(q) + t.cos().powf(q)).log2();
            assert!((sp.beta(q) - exact).abs() < 1e-13, "q = {q}");
        }
        let ok = preset::okamoto(2.0 / 3.0).unwrap();
        assert!((beta(&ok, 1.0) - (5.0f64 / 3.0).ln() / 3f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn okamoto_alpha_one_matches_closed_form() {
        let a: f64 = 2.0 / 3.0;
        let sys = preset::okamoto(a).unwrap();
        let alpha = 1.0;
        let p2 = (a.ln() + alpha * 3f64.ln()) / (a.ln() - (2.0 * a - 1.0).ln());
        let p = ProbabilityVector::new(vec![(1.0 - p2) / 2.0, p2, (1.0 - p2) / 2.0]).unwrap();
        assert!((beta_star(&sys, alpha) - entropy(&p, &sys)).abs() < 1e-12);
    }

    #[test]
    fn okamoto_interior_maximizer_matches_closed_form() {
        let a: f64 = 2.0 / 3.0;
        let sys = preset::okamoto(a).unwrap();
        for alpha in [0.45, 0.6, 0.8, 0.95] {
            let p = duality_maximizer(&sys, alpha).unwrap();
            let p2 = (a.ln() + alpha * 3f64.ln()) / (a.ln() - (2.0 * a - 1.0).ln());
            assert!((p.as_slice()[1] - p2).abs() < 1e-9, "alpha = {alpha}");
            assert!((p.as_slice()[0] - p.as_slice()[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn polya_alpha_one_maximizer() {
        let t = 25f64.to_radians();
        let sys = preset::polya(t).unwrap();
        let want = (2.0 * t.cos()).ln() / (t.cos() / t.sin()).ln();
        let closed = two_map_maximizer(&sys, 1.0).unwrap();
        assert!((closed[0] - want).abs() < 1e-14);
        let p = duality_maximizer(&sys, 1.0).unwrap();
        assert!((p.as_slice()[0] - want).abs() < 1e-9);
    }

    #[test]
    fn entropy_special_points() {
        let sys = preset::okamoto(0.6).unwrap();
        let third = 1.0 / 3.0;
        let c = ProbabilityVector::new(vec![third, third, third]).unwrap();
        assert!((entropy(&c, &sys) - 1.0).abs() < 1e-15);
        let e1 = ProbabilityVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(entropy(&e1, &sys), 0.0);
        let rn = preset::riesz_nagy(0.25).unwrap();
        let p = 2f64.ln() / 3f64.ln();
        let h = entropy(&ProbabilityVector::new(vec![p, 1.0 - p]).unwrap(), &rn);
        assert!((h - 0.9500).abs() < 5e-5, "{h}");
    }

    #[test]
    fn hat_maximizer_is_scaled_ratios() {
        let sys = preset::okamoto(0.7).unwrap();
        let sp = Spectrum::new(&sys);
        let p = sp.duality_maximizer(sp.profile().alpha_hat).unwrap();
        for &x in p.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn outside_range_is_minus_infinity() {
        let sys = preset::polya(25f64.to_radians()).unwrap();
        let sp = Spectrum::new(&sys);
        assert_eq!(sp.beta_star(sp.profile().alpha_max + 0.1), f64::NEG_INFINITY);
        assert_eq!(sp.beta_star(0.0), f64::NEG_INFINITY);
        assert!(sp.duality_maximizer(5.0).is_err());
    }

    #[test]
    fn two_point_table_is_endpoints() {
        let sys = preset::polya(25f64.to_radians()).unwrap();
        let t = spectrum_table(&sys, 2);
        let p = profile(&sys);
        assert_eq!(t.points, vec![(p.alpha_min, p.s_min), (p.alpha_max, p.s_max)]);
        assert!(!t.infinite_atom);
    }
}
