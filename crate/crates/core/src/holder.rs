//! Pointwise Hölder exponents, differentiability classes and time subordination.

use serde::Serialize;
use thiserror::Error;

use crate::coding::{alternate_coding, unit_endpoint, Coding, CodingError};
use crate::numeric::bisect_decreasing;
use crate::spectrum::Spectrum;
use crate::system::{SelfAffineSystem, Similitude, SystemError, ValidationReport};

/// Slack in the sign tests that decide the differentiability class.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HolderError {
    #[error(transparent)]
    Coding(#[from] CodingError),
    #[error("prefix consists only of the last digit; no estimate possible")]
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HolderValue {
    Finite(f64),
    Infinite,
    /// Range of finite-level estimates.
    Interval { lo: f64, hi: f64 },
}

impl HolderValue {
    /// The value as a float; intervals give their midpoint.
    pub fn as_f64(&self) -> f64 {
        match *self {
            HolderValue::Finite(x) => x,
            HolderValue::Infinite => f64::INFINITY,
            HolderValue::Interval { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

/// Which formula produced an exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolderCase {
    /// Ratio of digit frequencies.
    DensityFormula,
    /// Endpoint whose relevant coding ends in the first digit repeated.
    #[serde(rename = "endpoint-1inf")]
    EndpointOneInf,
    /// Endpoint whose relevant coding ends in the last digit repeated.
    #[serde(rename = "endpoint-minf")]
    EndpointMInf,
    /// Endpoint whose relevant coding ends in first and last digits alternating.
    EndpointAlt,
    /// Every coding meets a constant map.
    #[serde(rename = "infinite-I0")]
    InfiniteI0,
    /// Interval from a finite prefix.
    FiniteNEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderResult {
    pub value: HolderValue,
    pub case: HolderCase,
    /// Run-length correction constant of the system.
    pub k: f64,
    /// Exactly one of the two codings of an endpoint meets a constant map.
    pub mixed_constant_side: bool,
}

/// Scales, ratios and orientations with digits relabelled so that `ρ_m >= ρ_1`.
struct Normalized {
    ln_lambda: Vec<f64>,
    ln_c: Vec<f64>,
    eps: Vec<bool>,
    positive: Vec<bool>,
    swapped: bool,
}

impl Normalized {
    fn new(sys: &SelfAffineSystem) -> Self {
        let m = sys.m();
        let rho = |i: usize| sys.lambda(i).ln() / sys.c()[i].ln();
        let swapped = rho(m - 1) < rho(0);
        let idx = |i: usize| if swapped { m - 1 - i } else { i };
        Self {
            ln_lambda: (0..m).map(|i| sys.lambda(idx(i)).ln()).collect(),
            ln_c: (0..m).map(|i| sys.c()[idx(i)].ln()).collect(),
            eps: (0..m).map(|i| sys.epsilon()[idx(i)]).collect(),
            positive: (0..m).map(|i| sys.lambda(idx(i)) > 0.0).collect(),
            swapped,
        }
    }

    fn k(&self) -> f64 {
        let m = self.ln_c.len();
        if !self.positive[m - 1] || !self.positive[0] {
            return 0.0;
        }
        let k = self.ln_c[m - 1] / self.ln_c[0] * self.ln_lambda[0] - self.ln_lambda[m - 1];
        k.max(0.0)
    }
}

/// Run-length correction constant, computed after relabelling so that `ρ_m >= ρ_1`.
pub fn holder_k(sys: &SelfAffineSystem) -> f64 {
    Normalized::new(sys).k()
}

fn tail_ratio(sys: &SelfAffineSystem, coding: &Coding) -> f64 {
    let num: f64 = coding.tail().iter().map(|&i| sys.lambda(i).ln()).sum();
    let den: f64 = coding.tail().iter().map(|&i| sys.c()[i].ln()).sum();
    num / den
}

fn endpoint_case(sys: &SelfAffineSystem, coding: &Coding) -> HolderCase {
    let m = sys.m();
    let (first, last) = if Normalized::new(sys).swapped { (m - 1, 0) } else { (0, m - 1) };
    let tail = coding.tail();
    if tail == [first] {
        HolderCase::EndpointOneInf
    } else if tail == [last] {
        HolderCase::EndpointMInf
    } else if tail.len() == 2 && tail.contains(&first) && tail.contains(&last) {
        HolderCase::EndpointAlt
    } else {
        HolderCase::DensityFormula
    }
}

/// Nondirectional pointwise Hölder exponent at the point addressed by `coding`.
///
/// Eventually periodic codings give exact values. A finite coding is read as a
/// prefix and gives the range of finite-level estimates over the last half of
/// its length.
pub fn holder_exponent(sys: &SelfAffineSystem, coding: &Coding) -> Result<HolderResult, HolderError> {
    coding.check(sys.m())?;
    let k = holder_k(sys);
    if !coding.is_periodic() {
        return finite_estimate(sys, coding, k);
    }
    let constant = |c: &Coding| c.any_digit(|d| sys.lambda(d) == 0.0);
    let alternate = alternate_coding(sys, coding);
    let endpoint = alternate.is_some() || unit_endpoint(sys, coding).is_some();
    let codings: Vec<&Coding> = std::iter::once(coding).chain(alternate.as_ref()).collect();

    if !endpoint {
        let (value, case) = if constant(coding) {
            (HolderValue::Infinite, HolderCase::InfiniteI0)
        } else {
            (HolderValue::Finite(tail_ratio(sys, coding)), HolderCase::DensityFormula)
        };
        return Ok(HolderResult { value, case, k, mixed_constant_side: false });
    }

    let sides: Vec<(f64, &Coding)> = codings
        .iter()
        .map(|c| (if constant(c) { f64::INFINITY } else { tail_ratio(sys, c) }, *c))
        .collect();
    let infinite = sides.iter().filter(|(v, _)| v.is_infinite()).count();
    let mixed = codings.len() == 2 && infinite == 1;
    let (best, which) = sides
        .iter()
        .copied()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("at least one coding");
    let (value, case) = if best.is_infinite() {
        (HolderValue::Infinite, HolderCase::InfiniteI0)
    } else {
        (HolderValue::Finite(best), endpoint_case(sys, which))
    };
    Ok(HolderResult { value, case, k, mixed_constant_side: mixed })
}

fn finite_estimate(sys: &SelfAffineSystem, coding: &Coding, k: f64) -> Result<HolderResult, HolderError> {
    let digits = coding.prefix();
    if digits.iter().any(|&d| sys.lambda(d) == 0.0) {
        return Ok(HolderResult {
            value: HolderValue::Infinite,
            case: HolderCase::InfiniteI0,
            k,
            mixed_constant_side: false,
        });
    }
    let norm = Normalized::new(sys);
    let m = sys.m();
    let digits: Vec<usize> = digits.iter().map(|&d| if norm.swapped { m - 1 - d } else { d }).collect();
    let with_runs = !norm.eps[0] && !norm.eps[m - 1];
    let n_max = digits.len();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut run = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (j, &d) in digits.iter().enumerate() {
        let n = j + 1;
        num += norm.ln_lambda[d];
        den += norm.ln_c[d];
        run = if d == m - 1 { run + 1 } else { 0 };
        if 2 * n < n_max || run == n {
            continue;
        }
        let mut correction = 0.0;
        if with_runs && run > 0 {
            let i = digits[n - run - 1];
            let next = if norm.eps[i] { i.checked_sub(1) } else { Some(i + 1) };
            let active = next.is_some_and(|x| x < m && norm.eps[x] == norm.eps[i] && norm.positive[x]);
            if active {
                correction = k * run as f64;
            }
        }
        let r = (num + correction) / den;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if lo > hi {
        return Err(HolderError::Undetermined);
    }
    Ok(HolderResult {
        value: HolderValue::Interval { lo, hi },
        case: HolderCase::FiniteNEstimate,
        k,
        mixed_constant_side: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DifferentiabilityCase {
    /// No finite derivative anywhere.
    NowhereDifferentiable,
    /// No derivative almost everywhere, derivative zero on an uncountable set.
    AeNondifferentiable,
    /// Derivative zero almost everywhere, none on an uncountable set.
    AeDifferentiable,
}

impl DifferentiabilityCase {
    /// Roman numeral used in the literature: i, ii, iii.
    pub fn numeral(self) -> &'static str {
        match self {
            DifferentiabilityCase::NowhereDifferentiable => "i",
            DifferentiabilityCase::AeNondifferentiable => "ii",
            DifferentiabilityCase::AeDifferentiable => "iii",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSums {
    /// `Σ c_i ln(λ_i / c_i)`, `-∞` when a map is constant.
    pub log_ratio_sum: f64,
    /// Every `λ_i >= c_i` (up to [`BOUNDARY_TOL`]).
    pub scales_dominate: bool,
    /// `Σ_{λ_i > 0} c_i^ŝ ln(λ_i / c_i)`.
    pub hat_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub case: DifferentiabilityCase,
    /// Hausdorff dimension of the points with zero derivative; `None` when empty.
    /// A full-measure set reports 1.
    pub dim_d: Option<f64>,
    /// Hausdorff dimension of the complement.
    pub dim_d_complement: Option<f64>,
    pub sums: ClassificationSums,
}

/// Differentiability class from the scale/ratio sign tests.
pub fn classify(sys: &SelfAffineSystem) -> Classification {
    let lambda = sys.lambdas();
    let c = sys.c();
    let log_ratio_sum: f64 = lambda.iter().zip(c).map(|(l, c)| c * (l / c).ln()).sum();
    let scales_dominate = lambda.iter().zip(c).all(|(l, c)| *l >= c - BOUNDARY_TOL);
    let spectrum = Spectrum::new(sys);
    let s_hat = spectrum.profile().s_hat;
    let hat_sum: f64 = sys.i_plus().iter().map(|&i| c[i].powf(s_hat) * (lambda[i] / c[i]).ln()).sum();
    let sums = ClassificationSums { log_ratio_sum, scales_dominate, hat_sum };
    if scales_dominate {
        return Classification {
            case: DifferentiabilityCase::NowhereDifferentiable,
            dim_d: None,
            dim_d_complement: Some(1.0),
            sums,
        };
    }
    let beta_star_one = spectrum.beta_star(1.0);
    let (case, dim_d) = if log_ratio_sum >= -BOUNDARY_TOL {
        (DifferentiabilityCase::AeNondifferentiable, beta_star_one)
    } else {
        (DifferentiabilityCase::AeDifferentiable, 1.0)
    };
    let dim_d_complement = if hat_sum >= -BOUNDARY_TOL { s_hat } else { beta_star_one };
    Classification { case, dim_d: Some(dim_d), dim_d_complement: Some(dim_d_complement), sums }
}

/// `f = h ∘ g` with `g` increasing and `h` of constant exponent `1/s`.
#[derive(Debug, Clone)]
pub struct Subordination {
    /// Increasing time change on `[0, 1]`.
    pub g: SelfAffineSystem,
    /// Reparametrized function with one map per nonconstant map of `f`.
    pub h: SelfAffineSystem,
    /// Root of `Σ λ_i^s = 1`.
    pub s: f64,
    pub g_report: ValidationReport,
    pub h_report: ValidationReport,
}

/// Root `s >= 1` of `Σ λ_i^s = 1`.
pub fn subordination_exponent(sys: &SelfAffineSystem) -> f64 {
    let ln_l: Vec<f64> = sys.i_plus().iter().map(|&i| sys.lambda(i).ln()).collect();
    let g = |s: f64| ln_l.iter().map(|l| (s * l).exp()).sum::<f64>() - 1.0;
    let mut hi = 2.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    bisect_decreasing(g, 0.5, hi, 0.0)
}

/// Splits `f` into a monotone time change and a monofractal reparametrization.
///
/// The two systems are built without requiring validity; their reports are
/// returned alongside. A monofractal `f` makes `g` degenerate, and `s = 1`
/// makes `h` degenerate.
pub fn subordinate(sys: &SelfAffineSystem) -> Result<Subordination, SystemError> {
    let s = subordination_exponent(sys);
    let m = sys.m();
    let eps = sys.epsilon();
    let mut mass: Vec<f64> = sys.lambdas().iter().map(|l| if *l > 0.0 { l.powf(s) } else { 0.0 }).collect();
    // Close the partition exactly at 1: `h` has exponent 1/s, so a rounding
    // gap of 1e-16 would show up as 1e-8 in `h ∘ g`.
    if let Some(last) = mass.iter().rposition(|&x| x > 0.0) {
        let before: f64 = mass[..last].iter().fold(0.0, |acc, x| acc + x);
        mass[last] = 1.0 - before;
    }
    let mut g_maps = Vec::with_capacity(m);
    let mut before = 0.0;
    for i in 0..m {
        let map = if mass[i] == 0.0 {
            Similitude::constant(nalgebra::DVector::from_element(1, before))
        } else {
            let sign = if eps[i] { -1.0 } else { 1.0 };
            let shift = if eps[i] { before + mass[i] } else { before };
            Similitude::new(
                mass[i],
                nalgebra::DMatrix::from_element(1, 1, sign),
                nalgebra::DVector::from_element(1, shift),
            )?
        };
        g_maps.push(map);
        before += mass[i];
    }
    let g = SelfAffineSystem::new(g_maps, sys.c().to_vec(), eps.to_vec())?;
    let plus = sys.i_plus();
    let h = SelfAffineSystem::new(
        plus.iter().map(|&i| sys.map(i).clone()).collect(),
        plus.iter().map(|&i| mass[i]).collect(),
        plus.iter().map(|&i| eps[i]).collect(),
    )?;
    let g_report = g.validate();
    let h_report = h.validate();
    Ok(Subordination { g, h, s, g_report, h_report })
}
