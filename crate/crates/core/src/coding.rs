//! Digit addresses of points in `[0, 1]`.
//!
//! Digits are stored 0-based; the text form and `Display` use 1-based digits
//! written `1-9`, then `A-Z`, with `0` standing for 36.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::system::SelfAffineSystem;

/// Distance below which a real input is treated as lying on a partition point.
pub const ENDPOINT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("invalid digit character {0:?}")]
    BadChar(char),
    #[error("more than one '|' in coding")]
    TwoBars,
    #[error("digit {digit} out of range for m = {m}")]
    DigitRange { digit: usize, m: usize },
    #[error("coding has {have} digits, {need} requested")]
    TooShort { have: usize, need: usize },
    #[error("empty coding")]
    Empty,
}

/// A finite prefix followed by an optional periodic tail.
///
/// Periodic codings are kept canonical: the tail has minimal period and the
/// prefix does not end with the tail's last digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Coding {
    prefix: Vec<usize>,
    tail: Vec<usize>,
}

impl Coding {
    pub fn finite(prefix: Vec<usize>) -> Self {
        Self { prefix, tail: Vec::new() }
    }

    /// Eventually periodic coding; an empty tail gives a finite coding.
    pub fn periodic(prefix: Vec<usize>, tail: Vec<usize>) -> Self {
        let mut coding = Self { prefix, tail };
        coding.canonicalize();
        coding
    }

    fn canonicalize(&mut self) {
        let n = self.tail.len();
        if n == 0 {
            return;
        }
        for p in 1..n {
            if n.is_multiple_of(p) && (p..n).all(|k| self.tail[k] == self.tail[k - p]) {
                self.tail.truncate(p);
                break;
            }
        }
        while let Some(&last) = self.prefix.last() {
            if last != *self.tail.last().expect("nonempty tail") {
                break;
            }
            self.prefix.pop();
            self.tail.rotate_right(1);
        }
    }

    pub fn prefix(&self) -> &[usize] {
        &self.prefix
    }

    pub fn tail(&self) -> &[usize] {
        &self.tail
    }

    pub fn is_periodic(&self) -> bool {
        !self.tail.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.prefix.is_empty() && self.tail.is_empty()
    }

    /// Number of stored digits if finite.
    pub fn len(&self) -> Option<usize> {
        if self.is_periodic() {
            None
        } else {
            Some(self.prefix.len())
        }
    }

    /// Digit at 0-based position `n`.
    pub fn digit(&self, n: usize) -> Option<usize> {
        if n < self.prefix.len() {
            Some(self.prefix[n])
        } else if self.tail.is_empty() {
            None
        } else {
            Some(self.tail[(n - self.prefix.len()) % self.tail.len()])
        }
    }

    /// All digits; endless for periodic codings.
    pub fn digits(&self) -> impl Iterator<Item = usize> + '_ {
        let cycle = self.tail.iter().copied().cycle();
        self.prefix.iter().copied().chain(cycle)
    }

    /// The first `n` digits, or fewer if the coding is finite and shorter.
    pub fn take(&self, n: usize) -> Vec<usize> {
        self.digits().take(n).collect()
    }

    /// Drops the first `j` digits.
    pub fn shift(&self, j: usize) -> Coding {
        if j <= self.prefix.len() {
            return Coding::periodic(self.prefix[j..].to_vec(), self.tail.clone());
        }
        if self.tail.is_empty() {
            return Coding::finite(Vec::new());
        }
        let mut tail = self.tail.clone();
        tail.rotate_left((j - self.prefix.len()) % self.tail.len());
        Coding::periodic(Vec::new(), tail)
    }

    /// Prepends `digits`.
    pub fn prepend(&self, digits: &[usize]) -> Coding {
        let mut prefix = digits.to_vec();
        prefix.extend_from_slice(&self.prefix);
        Coding::periodic(prefix, self.tail.clone())
    }

    pub fn check(&self, m: usize) -> Result<(), CodingError> {
        if self.is_empty() {
            return Err(CodingError::Empty);
        }
        match self.prefix.iter().chain(&self.tail).find(|&&d| d >= m) {
            Some(&d) => Err(CodingError::DigitRange { digit: d + 1, m }),
            None => Ok(()),
        }
    }

    /// Lexicographic order of the digit sequences.
    pub fn lex_cmp(&self, other: &Coding) -> Ordering {
        let horizon = self.prefix.len().max(other.prefix.len()) + self.tail.len().max(1) * other.tail.len().max(1);
        for n in 0..horizon {
            match (self.digit(n), other.digit(n)) {
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                (Some(_), Some(_)) => {}
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
            }
        }
        Ordering::Equal
    }

    /// Exact limiting digit frequencies, from the tail alone.
    pub fn frequencies(&self, m: usize) -> Option<Vec<f64>> {
        if self.tail.is_empty() {
            return None;
        }
        let mut d = vec![0.0; m];
        for &i in &self.tail {
            d[i] += 1.0;
        }
        let p = self.tail.len() as f64;
        Some(d.into_iter().map(|x| x / p).collect())
    }

    /// Whether any digit (prefix or tail) satisfies `pred`.
    pub fn any_digit(&self, pred: impl Fn(usize) -> bool) -> bool {
        self.prefix.iter().chain(&self.tail).any(|&d| pred(d))
    }
}

fn digit_char(d: usize) -> char {
    match d + 1 {
        n @ 1..=9 => char::from(b'0' + n as u8),
        n @ 10..=35 => char::from(b'A' + (n - 10) as u8),
        36 => '0',
        _ => '?',
    }
}

fn char_digit(ch: char) -> Result<usize, CodingError> {
    let value = match ch {
        '1'..='9' => ch as usize - '0' as usize,
        'A'..='Z' => ch as usize - 'A' as usize + 10,
        'a'..='z' => ch as usize - 'a' as usize + 10,
        '0' => 36,
        _ => return Err(CodingError::BadChar(ch)),
    };
    Ok(value - 1)
}

impl FromStr for Coding {
    type Err = CodingError;

    /// `"213|13"`: prefix `2,1,3` then `1,3` repeated. No bar means a finite prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |part: &str| -> Result<Vec<usize>, CodingError> {
            part.chars().filter(|c| !c.is_whitespace()).map(char_digit).collect()
        };
        let mut parts = s.trim().split('|');
        let prefix = parse(parts.next().unwrap_or(""))?;
        let tail = match parts.next() {
            Some(t) => parse(t)?,
            None => Vec::new(),
        };
        if parts.next().is_some() {
            return Err(CodingError::TwoBars);
        }
        let coding = Coding::periodic(prefix, tail);
        if coding.is_empty() {
            return Err(CodingError::Empty);
        }
        Ok(coding)
    }
}

impl fmt::Display for Coding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix: String = self.prefix.iter().map(|&d| digit_char(d)).collect();
        if self.tail.is_empty() {
            write!(f, "{prefix}")
        } else {
            let tail: String = self.tail.iter().map(|&d| digit_char(d)).collect();
            write!(f, "{prefix}|{tail}")
        }
    }
}

/// Affine time map `t ↦ offset + slope · t`, built outside-in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TimeMap {
    pub offset: f64,
    pub slope: f64,
}

impl TimeMap {
    pub const IDENTITY: TimeMap = TimeMap { offset: 0.0, slope: 1.0 };

    /// `self ∘ φ_i`.
    pub fn push(self, sys: &SelfAffineSystem, i: usize) -> TimeMap {
        TimeMap { offset: self.offset + self.slope * sys.sigma(i), slope: self.slope * sys.slope(i) }
    }

    pub fn at(self, t: f64) -> f64 {
        self.offset + self.slope * t
    }

    pub fn bounds(self) -> (f64, f64) {
        let end = self.offset + self.slope;
        (self.offset.min(end), self.offset.max(end))
    }
}

/// `I_w = φ_{w_1} ∘ … ∘ φ_{w_n}([0, 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicInterval {
    pub digits: Vec<usize>,
    pub left: f64,
    pub right: f64,
}

impl BasicInterval {
    pub fn len(&self) -> f64 {
        self.right - self.left
    }

    pub fn contains(&self, t: f64) -> bool {
        self.left <= t && t <= self.right
    }
}

pub fn interval_of(sys: &SelfAffineSystem, digits: &[usize]) -> BasicInterval {
    let map = digits.iter().fold(TimeMap::IDENTITY, |acc, &i| acc.push(sys, i));
    let (left, right) = map.bounds();
    BasicInterval { digits: digits.to_vec(), left, right }
}

/// The unique coding of `0` (`right = false`) or `1` (`right = true`).
pub fn endpoint_coding(sys: &SelfAffineSystem, right: bool) -> Coding {
    let m = sys.m();
    let eps = sys.epsilon();
    let mut states = vec![right];
    let mut digits = Vec::new();
    loop {
        let state = *states.last().expect("nonempty");
        let (digit, next) = if state { (m - 1, !eps[m - 1]) } else { (0, eps[0]) };
        digits.push(digit);
        if let Some(start) = states.iter().position(|&s| s == next) {
            let tail = digits.split_off(start);
            return Coding::periodic(digits, tail);
        }
        states.push(next);
    }
}

/// Result of addressing a real number.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardCoding {
    /// The lexicographically largest coding, or its prefix.
    pub coding: Coding,
    /// `true` when the input was recognized as an endpoint and `coding` is complete.
    pub exact: bool,
    /// The other coding of a basic-interval endpoint.
    pub alternate: Option<Coding>,
}

/// Standard (lexicographically largest) coding of `t`, to `depth` digits.
///
/// When `t` lies within [`ENDPOINT_TOL`] of a partition point at a level where
/// the neighbouring intervals are still resolvable, both full codings are
/// returned exactly.
pub fn standard_coding(sys: &SelfAffineSystem, t: f64, depth: usize) -> StandardCoding {
    let t = t.clamp(0.0, 1.0);
    if t <= ENDPOINT_TOL {
        return StandardCoding { coding: endpoint_coding(sys, false), exact: true, alternate: None };
    }
    if t >= 1.0 - ENDPOINT_TOL {
        return StandardCoding { coding: endpoint_coding(sys, true), exact: true, alternate: None };
    }
    let m = sys.m();
    let breaks = sys.breaks();
    let c_min = sys.c().iter().copied().fold(f64::INFINITY, f64::min);
    let mut map = TimeMap::IDENTITY;
    let mut digits = Vec::with_capacity(depth);
    while digits.len() < depth {
        if map.slope.abs() * c_min > 1e3 * ENDPOINT_TOL {
            for j in 1..m {
                if (t - map.at(breaks[j])).abs() <= ENDPOINT_TOL {
                    let (left, right) = (j - 1, j);
                    let eps = sys.epsilon();
                    let mut std_prefix = digits.clone();
                    std_prefix.push(right);
                    let mut alt_prefix = digits;
                    alt_prefix.push(left);
                    return StandardCoding {
                        coding: endpoint_coding(sys, eps[right]).prepend(&std_prefix),
                        exact: true,
                        alternate: Some(endpoint_coding(sys, !eps[left]).prepend(&alt_prefix)),
                    };
                }
            }
        }
        // Largest digit whose subinterval contains t; nearest one if rounding put t outside.
        let mut best = (f64::INFINITY, 0);
        for i in (0..m).rev() {
            let (x, y) = (map.at(breaks[i]), map.at(breaks[i + 1]));
            let (lo, hi) = (x.min(y), x.max(y));
            let gap = if t < lo { lo - t } else if t > hi { t - hi } else { 0.0 };
            if gap < best.0 {
                best = (gap, i);
                if gap == 0.0 {
                    break;
                }
            }
        }
        digits.push(best.1);
        map = map.push(sys, best.1);
    }
    StandardCoding { coding: Coding::finite(digits), exact: false, alternate: None }
}

/// If the periodic `coding` addresses `0` or `1`, which one.
pub fn unit_endpoint(sys: &SelfAffineSystem, coding: &Coding) -> Option<bool> {
    [false, true].into_iter().find(|&r| *coding == endpoint_coding(sys, r))
}

/// The other coding of a basic-interval endpoint, if `coding` addresses one.
///
/// Returns `None` for finite codings, for `0` and `1`, and for points with a
/// single coding.
pub fn alternate_coding(sys: &SelfAffineSystem, coding: &Coding) -> Option<Coding> {
    if !coding.is_periodic() {
        return None;
    }
    let m = sys.m();
    let eps = sys.epsilon();
    let zero = endpoint_coding(sys, false);
    let one = endpoint_coding(sys, true);
    let horizon = coding.prefix().len() + coding.tail().len();
    for j in 0..=horizon {
        let rest = coding.shift(j);
        let right_end = if rest == zero {
            false
        } else if rest == one {
            true
        } else {
            continue;
        };
        if j == 0 {
            return None;
        }
        let i = coding.digit(j - 1).expect("periodic");
        let head = coding.take(j - 1);
        // φ_i(e) is the left end of I_i exactly when e == ε_i.
        let at_left = right_end == eps[i];
        let (nb, nb_end) = if at_left {
            if i == 0 {
                continue;
            }
            (i - 1, !eps[i - 1])
        } else {
            if i + 1 == m {
                continue;
            }
            (i + 1, eps[i + 1])
        };
        let mut prefix = head;
        prefix.push(nb);
        return Some(endpoint_coding(sys, nb_end).prepend(&prefix));
    }
    None
}

/// The point addressed by a periodic coding, exact up to rounding.
pub fn point_of(sys: &SelfAffineSystem, coding: &Coding) -> Option<f64> {
    if !coding.is_periodic() {
        return None;
    }
    let head = coding.prefix().iter().fold(TimeMap::IDENTITY, |acc, &i| acc.push(sys, i));
    let cycle = coding.tail().iter().fold(TimeMap::IDENTITY, |acc, &i| acc.push(sys, i));
    let fixed = cycle.offset / (1.0 - cycle.slope);
    Some(head.at(fixed).clamp(0.0, 1.0))
}

/// Digit counts and run-length data at level `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitStats {
    pub n: usize,
    /// `counts[i]` = number of digits `i` among the first `n`.
    pub counts: Vec<usize>,
    /// Length of the trailing run of the last digit `m - 1`.
    pub run_length: usize,
    /// Activation flag; `None` when the first `n` digits are all `m - 1` or the
    /// neighbour index falls outside the alphabet.
    pub chi: Option<bool>,
}

pub fn digit_stats(sys: &SelfAffineSystem, coding: &Coding, n: usize) -> Result<DigitStats, CodingError> {
    let m = sys.m();
    let digits = coding.take(n);
    if digits.len() < n {
        return Err(CodingError::TooShort { have: digits.len(), need: n });
    }
    if let Some(&d) = digits.iter().find(|&&d| d >= m) {
        return Err(CodingError::DigitRange { digit: d + 1, m });
    }
    let mut counts = vec![0; m];
    for &d in &digits {
        counts[d] += 1;
    }
    let run_length = digits.iter().rev().take_while(|&&d| d == m - 1).count();
    let chi = if run_length == n {
        None
    } else {
        let i = digits[n - run_length - 1];
        let eps = sys.epsilon();
        let next = if eps[i] { i.checked_sub(1) } else { Some(i + 1) };
        next.filter(|&j| j < m).map(|j| eps[i] == eps[j] && sys.lambda(j) > 0.0)
    };
    Ok(DigitStats { n, counts, run_length, chi })
}

/// Limiting digit frequencies of a periodic coding; `None` otherwise.
pub fn digit_frequencies(coding: &Coding, sys: &SelfAffineSystem) -> Option<Vec<f64>> {
    coding.frequencies(sys.m())
}
