//! Similitudes and self-affine systems.
//!
//! A system pairs `m` contracting similitudes `S_i` of `R^d` with a partition
//! of `[0, 1]` into intervals of lengths `c_i` traversed with orientation bits
//! `epsilon_i`. The endpoints are fixed: `f(0) = 0` and `f(1) = e_1`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for `RᵀR = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Tolerance for `Σ c_i = 1`.
pub const PARTITION_TOL: f64 = 1e-12;
/// Tolerance for the endpoint matching conditions.
pub const CONNECTIVITY_TOL: f64 = 1e-9;
/// Slack allowed below 1 in `Σ λ_i >= 1`.
pub const SCALE_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("rotation is not orthogonal (residual {0:e})")]
    NotOrthogonal(f64),
    #[error("scale {0} outside [0, 1)")]
    Scale(f64),
    #[error("need at least two maps, got {0}")]
    TooFewMaps(usize),
    #[error("partition ratio {0} outside (0, 1)")]
    Ratio(f64),
    #[error("partition ratios sum to {0}, expected 1")]
    RatioSum(f64),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("invalid measure: {0}")]
    Measure(String),
    #[error("system fails validation: {0}")]
    Invalid(ValidationReport),
    #[error("json: {0}")]
    Json(String),
}

/// `x ↦ scale · rotation · x + translation` with `rotation` orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Similitude {
    scale: f64,
    rotation: DMatrix<f64>,
    translation: DVector<f64>,
}

impl Similitude {
    pub fn new(scale: f64, rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self, SystemError> {
        let d = translation.len();
        if d == 0 || rotation.nrows() != d || rotation.ncols() != d {
            return Err(SystemError::Dimension(format!(
                "rotation {}x{} with translation of length {d}",
                rotation.nrows(),
                rotation.ncols()
            )));
        }
        if !(0.0..1.0).contains(&scale) {
            return Err(SystemError::Scale(scale));
        }
        let residual = (rotation.transpose() * &rotation - DMatrix::identity(d, d)).amax();
        if !(residual <= ORTHOGONALITY_TOL) {
            return Err(SystemError::NotOrthogonal(residual));
        }
        Ok(Self { scale, rotation, translation })
    }

    /// The constant map onto `point`.
    pub fn constant(point: DVector<f64>) -> Self {
        let d = point.len();
        Self { scale: 0.0, rotation: DMatrix::identity(d, d), translation: point }
    }

    pub(crate) fn identity(d: usize) -> Self {
        Self { scale: 1.0, rotation: DMatrix::identity(d, d), translation: DVector::zeros(d) }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn is_constant(&self) -> bool {
        self.scale == 0.0
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.scale == 0.0 {
            return self.translation.clone();
        }
        &self.rotation * x * self.scale + &self.translation
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Similitude) -> Similitude {
        if self.scale == 0.0 || inner.scale == 0.0 {
            return Similitude::constant(self.apply(&inner.translation));
        }
        Similitude {
            scale: self.scale * inner.scale,
            rotation: &self.rotation * &inner.rotation,
            translation: &self.rotation * &inner.translation * self.scale + &self.translation,
        }
    }

    /// The unique fixed point; exists because the map contracts.
    pub fn fixed_point(&self) -> DVector<f64> {
        if self.scale == 0.0 {
            return self.translation.clone();
        }
        let d = self.dim();
        let lhs = DMatrix::identity(d, d) - &self.rotation * self.scale;
        lhs.lu().solve(&self.translation).expect("contraction has a fixed point")
    }
}

/// A self-affine system: maps, partition ratios and orientation bits.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfAffineSystem {
    maps: Vec<Similitude>,
    c: Vec<f64>,
    epsilon: Vec<bool>,
    breaks: Vec<f64>,
}

impl SelfAffineSystem {
    /// Structural checks only; see [`SelfAffineSystem::validate`] for the rest.
    pub fn new(maps: Vec<Similitude>, c: Vec<f64>, epsilon: Vec<bool>) -> Result<Self, SystemError> {
        let m = maps.len();
        if m < 2 {
            return Err(SystemError::TooFewMaps(m));
        }
        if c.len() != m || epsilon.len() != m {
            return Err(SystemError::Dimension(format!(
                "{m} maps, {} ratios, {} orientation bits",
                c.len(),
                epsilon.len()
            )));
        }
        let d = maps[0].dim();
        if let Some(bad) = maps.iter().find(|s| s.dim() != d) {
            return Err(SystemError::Dimension(format!("maps in R^{d} and R^{}", bad.dim())));
        }
        if let Some(&bad) = c.iter().find(|&&ci| !(ci > 0.0 && ci < 1.0)) {
            return Err(SystemError::Ratio(bad));
        }
        let total: f64 = c.iter().sum();
        if (total - 1.0).abs() > PARTITION_TOL {
            return Err(SystemError::RatioSum(total));
        }
        let mut breaks = Vec::with_capacity(m + 1);
        let mut acc = 0.0;
        breaks.push(0.0);
        for ci in &c[..m - 1] {
            acc += ci;
            breaks.push(acc);
        }
        breaks.push(1.0);
        Ok(Self { maps, c, epsilon, breaks })
    }

    pub fn d(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[Similitude] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &Similitude {
        &self.maps[i]
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn epsilon(&self) -> &[bool] {
        &self.epsilon
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.maps[i].scale
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.maps.iter().map(|s| s.scale).collect()
    }

    /// Partition points `0 = s_0 < s_1 < … < s_m = 1`.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// Offset of the time map `φ_i(t) = ±c_i t + σ_i`.
    pub fn sigma(&self, i: usize) -> f64 {
        if self.epsilon[i] {
            self.breaks[i + 1]
        } else {
            self.breaks[i]
        }
    }

    /// Signed slope of `φ_i`.
    pub fn slope(&self, i: usize) -> f64 {
        if self.epsilon[i] {
            -self.c[i]
        } else {
            self.c[i]
        }
    }

    pub fn phi(&self, i: usize, t: f64) -> f64 {
        self.slope(i) * t + self.sigma(i)
    }

    pub fn phi_inv(&self, i: usize, t: f64) -> f64 {
        (t - self.sigma(i)) / self.slope(i)
    }

    /// Left endpoint `a` (the origin).
    pub fn a(&self) -> DVector<f64> {
        DVector::zeros(self.d())
    }

    /// Right endpoint `b = e_1`.
    pub fn b(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.d());
        b[0] = 1.0;
        b
    }

    /// `a` if `right` is false, else `b`.
    pub fn endpoint(&self, right: bool) -> DVector<f64> {
        if right {
            self.b()
        } else {
            self.a()
        }
    }

    /// Indices of constant maps.
    pub fn i_zero(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.lambda(i) == 0.0).collect()
    }

    /// Indices of nonconstant maps.
    pub fn i_plus(&self) -> Vec<usize> {
        (0..self.m()).filter(|&i| self.lambda(i) > 0.0).collect()
    }

    /// Checks connectivity, nondegeneracy and `Σ λ_i >= 1`.
    pub fn validate(&self) -> ValidationReport {
        let m = self.m();
        let mut violations = Vec::new();
        let a = self.a();
        let b = self.b();

        let first = self.maps[0].apply(&self.endpoint(self.epsilon[0]));
        let residual = (first - &a).norm();
        if !(residual <= CONNECTIVITY_TOL) {
            violations.push(Violation::LeftEndpoint { residual });
        }
        let last = self.maps[m - 1].apply(&self.endpoint(!self.epsilon[m - 1]));
        let residual = (last - &b).norm();
        if !(residual <= CONNECTIVITY_TOL) {
            violations.push(Violation::RightEndpoint { residual });
        }
        for i in 1..m {
            let left = self.maps[i - 1].apply(&self.endpoint(!self.epsilon[i - 1]));
            let right = self.maps[i].apply(&self.endpoint(self.epsilon[i]));
            let residual = (left - right).norm();
            if !(residual <= CONNECTIVITY_TOL) {
                violations.push(Violation::Joint { left: i - 1, residual });
            }
        }
        if self.maps.iter().zip(&self.c).all(|(s, &c)| (s.scale - c).abs() <= SCALE_SUM_TOL) {
            violations.push(Violation::Degenerate);
        }
        let sum: f64 = self.lambdas().iter().sum();
        if sum < 1.0 - SCALE_SUM_TOL {
            violations.push(Violation::ScaleSum { sum });
        }
        if m == 2 {
            for (i, s) in self.maps.iter().enumerate() {
                if s.is_constant() {
                    violations.push(Violation::ConstantWithTwoMaps { index: i });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Structural construction followed by validation.
    pub fn new_validated(maps: Vec<Similitude>, c: Vec<f64>, epsilon: Vec<bool>) -> Result<Self, SystemError> {
        let sys = Self::new(maps, c, epsilon)?;
        let report = sys.validate();
        if report.ok() {
            Ok(sys)
        } else {
            Err(SystemError::Invalid(report))
        }
    }
}

/// One failed invariant and its residual.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `S_1` does not send the appropriate endpoint to `a`.
    LeftEndpoint { residual: f64 },
    /// `S_m` does not send the appropriate endpoint to `b`.
    RightEndpoint { residual: f64 },
    /// Pieces `left` and `left + 1` (0-based) do not meet.
    Joint { left: usize, residual: f64 },
    /// Every `λ_i` equals `c_i`.
    Degenerate,
    /// `Σ λ_i < 1`.
    ScaleSum { sum: f64 },
    /// A constant map in a two-map system.
    ConstantWithTwoMaps { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LeftEndpoint { residual } => write!(f, "left endpoint condition, residual {residual:e}"),
            Violation::RightEndpoint { residual } => write!(f, "right endpoint condition, residual {residual:e}"),
            Violation::Joint { left, residual } => {
                write!(f, "pieces {} and {} do not join, residual {residual:e}", left + 1, left + 2)
            }
            Violation::Degenerate => write!(f, "degenerate: every scale equals its partition ratio"),
            Violation::ScaleSum { sum } => write!(f, "scales sum to {sum} < 1"),
            Violation::ConstantWithTwoMaps { index } => {
                write!(f, "map {} is constant but only two maps are present", index + 1)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct MapJson {
    pub scale: f64,
    pub rotation: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct SystemJson {
    pub d: usize,
    pub m: usize,
    pub c: Vec<f64>,
    pub epsilon: Vec<u8>,
    pub maps: Vec<MapJson>,
}

impl SystemJson {
    pub fn from_system(sys: &SelfAffineSystem) -> Self {
        let maps = sys
            .maps
            .iter()
            .map(|s| MapJson {
                scale: s.scale,
                rotation: s.rotation.row_iter().map(|r| r.iter().copied().collect()).collect(),
                translation: s.translation.iter().copied().collect(),
            })
            .collect();
        SystemJson {
            d: sys.d(),
            m: sys.m(),
            c: sys.c.clone(),
            epsilon: sys.epsilon.iter().map(|&e| e as u8).collect(),
            maps,
        }
    }

    pub fn into_system(self) -> Result<SelfAffineSystem, SystemError> {
        if self.maps.len() != self.m {
            return Err(SystemError::Dimension(format!("m = {} but {} maps listed", self.m, self.maps.len())));
        }
        let mut maps = Vec::with_capacity(self.m);
        for mj in self.maps {
            if mj.translation.len() != self.d || mj.rotation.len() != self.d {
                return Err(SystemError::Dimension(format!("map does not live in R^{}", self.d)));
            }
            if mj.rotation.iter().any(|r| r.len() != self.d) {
                return Err(SystemError::Dimension("rotation rows have the wrong length".into()));
            }
            let rotation = DMatrix::from_fn(self.d, self.d, |r, c| mj.rotation[r][c]);
            maps.push(Similitude::new(mj.scale, rotation, DVector::from_vec(mj.translation))?);
        }
        let mut epsilon = Vec::with_capacity(self.epsilon.len());
        for e in self.epsilon {
            match e {
                0 => epsilon.push(false),
                1 => epsilon.push(true),
                other => return Err(SystemError::Json(format!("orientation bit {other} is not 0 or 1"))),
            }
        }
        SelfAffineSystem::new(maps, self.c, epsilon)
    }
}

impl SelfAffineSystem {
    /// Canonical JSON form: fields `d, m, c, epsilon, maps` in that order.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SystemJson::from_system(self)).expect("plain data serializes")
    }

    /// Parses the explicit form; see [`crate::preset::system_from_json`] for presets too.
    pub fn from_json(text: &str) -> Result<Self, SystemError> {
        let parsed: SystemJson = serde_json::from_str(text).map_err(|e| SystemError::Json(e.to_string()))?;
        parsed.into_system()
    }
}
