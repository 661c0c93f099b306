//! Named systems and distribution functions of self-similar measures.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::system::{SelfAffineSystem, Similitude, SystemError, SystemJson};

fn line(scale: f64, reverse: bool, shift: f64) -> Result<Similitude, SystemError> {
    let sign = if reverse { -1.0 } else { 1.0 };
    Similitude::new(scale, DMatrix::from_element(1, 1, sign), DVector::from_element(1, shift))
}

fn rotation2(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn open_unit(name: &str, a: f64) -> Result<(), SystemError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(SystemError::Parameter(format!("{name} = {a} must lie in (0, 1)")))
    }
}

/// Pólya's space-filling curve on the right triangle with smallest angle `theta` (radians).
///
/// The triangle has hypotenuse from the origin to `e_1`; the altitude from the
/// right-angle vertex splits it into the two images.
pub fn polya(theta: f64) -> Result<SelfAffineSystem, SystemError> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_4) {
        return Err(SystemError::Parameter(format!("theta = {theta} rad must lie in (0, pi/4)")));
    }
    let (s, c) = theta.sin_cos();
    let apex = DVector::from_vec(vec![s * s, s * c]);
    // S_1 reflects across the line at angle (90° - θ)/2, then scales by sin θ.
    let phi = std::f64::consts::FRAC_PI_2 - theta;
    let (sp, cp) = phi.sin_cos();
    let first = Similitude::new(s, DMatrix::from_row_slice(2, 2, &[cp, sp, sp, -cp]), DVector::zeros(2))?;
    let second = Similitude::new(c, DMatrix::from_row_slice(2, 2, &[c, -s, -s, -c]), apex)?;
    SelfAffineSystem::new_validated(vec![first, second], vec![0.5, 0.5], vec![false, false])
}

/// Okamoto's family: `S_1 = a x`, `S_2 = a + (1 - 2a) x`, `S_3 = a x + 1 - a`.
pub fn okamoto(a: f64) -> Result<SelfAffineSystem, SystemError> {
    open_unit("a", a)?;
    let middle = if a == 0.5 {
        Similitude::constant(DVector::from_element(1, 0.5))
    } else {
        line((1.0 - 2.0 * a).abs(), a > 0.5, a)?
    };
    let third = 1.0 / 3.0;
    SelfAffineSystem::new_validated(
        vec![line(a, false, 0.0)?, middle, line(a, false, 1.0 - a)?],
        vec![third, third, third],
        vec![false; 3],
    )
}

/// The Cantor function, Okamoto's family at `a = 1/2`.
pub fn cantor() -> SelfAffineSystem {
    okamoto(0.5).expect("the Cantor system is valid")
}

/// Riesz–Nagy singular function: `S_1 = a x`, `S_2 = a + (1 - a) x`.
pub fn riesz_nagy(a: f64) -> Result<SelfAffineSystem, SystemError> {
    open_unit("a", a)?;
    SelfAffineSystem::new_validated(
        vec![line(a, false, 0.0)?, line(1.0 - a, false, a)?],
        vec![0.5, 0.5],
        vec![false, false],
    )
}

/// Gray code singular function: second time map reversed, `S_2 = 1 - (1 - a) x`.
pub fn gray(a: f64) -> Result<SelfAffineSystem, SystemError> {
    open_unit("a", a)?;
    SelfAffineSystem::new_validated(
        vec![line(a, false, 0.0)?, line(1.0 - a, true, 1.0)?],
        vec![0.5, 0.5],
        vec![false, true],
    )
}

/// Two-map planar curve with arbitrary scales on a halving partition.
///
/// The middle point `f(1/2)` is the apex `P` with `|P| = lambda1` and
/// `|e_1 - P| = lambda2`; both maps are rotations.
pub fn triangle(lambda1: f64, lambda2: f64) -> Result<SelfAffineSystem, SystemError> {
    open_unit("lambda1", lambda1)?;
    open_unit("lambda2", lambda2)?;
    if lambda1 + lambda2 < 1.0 || (lambda1 - lambda2).abs() > 1.0 {
        return Err(SystemError::Parameter(format!(
            "no triangle with sides 1, {lambda1}, {lambda2}"
        )));
    }
    let px = 0.5 * (1.0 + lambda1 * lambda1 - lambda2 * lambda2);
    let py = (lambda1 * lambda1 - px * px).max(0.0).sqrt();
    let first = Similitude::new(lambda1, rotation2(py.atan2(px)), DVector::zeros(2))?;
    let second = Similitude::new(lambda2, rotation2((-py).atan2(1.0 - px)), DVector::from_vec(vec![px, py]))?;
    SelfAffineSystem::new_validated(vec![first, second], vec![0.5, 0.5], vec![false, false])
}

/// A self-similar probability measure on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpec {
    /// Disjoint closed intervals, left to right.
    pub intervals: Vec<(f64, f64)>,
    /// `true` where the similarity onto the interval reverses orientation.
    pub reversed: Vec<bool>,
    /// Positive weights summing to 1.
    pub weights: Vec<f64>,
}

/// Builds the system whose solution is `t ↦ μ([0, t])`.
///
/// Gaps between the intervals become constant maps.
pub fn from_measure(spec: &MeasureSpec) -> Result<SelfAffineSystem, SystemError> {
    let k = spec.intervals.len();
    if k == 0 || spec.reversed.len() != k || spec.weights.len() != k {
        return Err(SystemError::Measure(format!(
            "{k} intervals, {} orientation bits, {} weights",
            spec.reversed.len(),
            spec.weights.len()
        )));
    }
    if spec.weights.iter().any(|&w| !(w > 0.0)) {
        return Err(SystemError::Measure("weights must be positive".into()));
    }
    let total: f64 = spec.weights.iter().sum();
    if (total - 1.0).abs() > crate::system::PARTITION_TOL {
        return Err(SystemError::Measure(format!("weights sum to {total}")));
    }
    let mut cursor = 0.0;
    for &(s, t) in &spec.intervals {
        if !(s >= cursor && t > s && t <= 1.0) {
            return Err(SystemError::Measure(format!("interval [{s}, {t}] overlaps or is out of order")));
        }
        cursor = t;
    }

    let mut maps = Vec::new();
    let mut c = Vec::new();
    let mut epsilon = Vec::new();
    let mut mass = 0.0;
    let mut cursor = 0.0;
    let gap = |maps: &mut Vec<Similitude>, c: &mut Vec<f64>, eps: &mut Vec<bool>, len: f64, mass: f64| {
        maps.push(Similitude::constant(DVector::from_element(1, mass)));
        c.push(len);
        eps.push(false);
    };
    for ((&(s, t), &rev), &w) in spec.intervals.iter().zip(&spec.reversed).zip(&spec.weights) {
        if s > cursor {
            gap(&mut maps, &mut c, &mut epsilon, s - cursor, mass);
        }
        let shift = if rev { mass + w } else { mass };
        maps.push(line(w, rev, shift)?);
        c.push(t - s);
        epsilon.push(rev);
        mass += w;
        cursor = t;
    }
    if cursor < 1.0 {
        gap(&mut maps, &mut c, &mut epsilon, 1.0 - cursor, mass);
    }
    SelfAffineSystem::new_validated(maps, c, epsilon)
}

#[derive(Debug, Deserialize)]
struct PresetJson {
    preset: String,
    theta_deg: Option<f64>,
    a: Option<f64>,
    lambda: Option<[f64; 2]>,
    intervals: Option<Vec<[f64; 2]>>,
    orientations: Option<Vec<u8>>,
    weights: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SystemSource {
    Explicit(SystemJson),
    Preset(PresetJson),
}

fn need(value: Option<f64>, field: &str, preset: &str) -> Result<f64, SystemError> {
    value.ok_or_else(|| SystemError::Json(format!("preset {preset} needs field {field}")))
}

/// Builds a named preset.
pub fn by_name(name: &str, a: Option<f64>, theta_deg: Option<f64>) -> Result<SelfAffineSystem, SystemError> {
    match name {
        "polya" => polya(need(theta_deg, "theta_deg", name)?.to_radians()),
        "okamoto" => okamoto(need(a, "a", name)?),
        "riesz-nagy" | "riesz_nagy" => riesz_nagy(need(a, "a", name)?),
        "gray" => gray(need(a, "a", name)?),
        "cantor" => Ok(cantor()),
        other => Err(SystemError::Parameter(format!("unknown preset {other:?}"))),
    }
}

/// Parses either the explicit system form or a preset form such as
/// `{"preset":"polya","theta_deg":25}` or `{"preset":"measure", "intervals":…}`.
pub fn system_from_json(text: &str) -> Result<SelfAffineSystem, SystemError> {
    let source: SystemSource = serde_json::from_str(text).map_err(|e| SystemError::Json(e.to_string()))?;
    match source {
        SystemSource::Explicit(sys) => {
            let sys = sys.into_system()?;
            let report = sys.validate();
            if report.ok() {
                Ok(sys)
            } else {
                Err(SystemError::Invalid(report))
            }
        }
        SystemSource::Preset(p) => match p.preset.as_str() {
            "triangle" => {
                let [l1, l2] = p.lambda.ok_or_else(|| SystemError::Json("preset triangle needs field lambda".into()))?;
                triangle(l1, l2)
            }
            "measure" => {
                let intervals = p.intervals.unwrap_or_default();
                let k = intervals.len();
                let spec = MeasureSpec {
                    intervals: intervals.into_iter().map(|[s, t]| (s, t)).collect(),
                    reversed: p.orientations.unwrap_or_else(|| vec![0; k]).into_iter().map(|o| o != 0).collect(),
                    weights: p.weights.unwrap_or_default(),
                };
                from_measure(&spec)
            }
            name => by_name(name, p.a, p.theta_deg),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polya_thirty_degrees_has_half_and_root_three_over_two() {
        let sys = polya(30f64.to_radians()).unwrap();
        assert!((sys.lambda(0) - 0.5).abs() < 1e-15);
        assert!((sys.lambda(1) - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn polya_rejects_forty_five_degrees() {
        assert!(polya(std::f64::consts::FRAC_PI_4).is_err());
        assert!(polya(0.0).is_err());
    }

    #[test]
    fn polya_midpoint_is_right_angle_vertex() {
        let t = 25f64.to_radians();
        let sys = polya(t).unwrap();
        let mid = sys.map(0).apply(&sys.b());
        assert!((mid[0] - t.sin().powi(2)).abs() < 1e-15);
        assert!((mid[1] - t.sin() * t.cos()).abs() < 1e-15);
        assert!(sys.validate().ok());
    }

    #[test]
    fn okamoto_scales() {
        let sys = okamoto(2.0 / 3.0).unwrap();
        let l = sys.lambdas();
        assert!((l[0] - 2.0 / 3.0).abs() < 1e-15 && (l[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(sys.map(1).rotation()[(0, 0)], -1.0);
        assert_eq!(cantor().lambdas(), vec![0.5, 0.0, 0.5]);
        assert!(matches!(okamoto(1.0 / 3.0), Err(SystemError::Invalid(_))));
        assert!(okamoto(5.0 / 6.0).is_ok());
    }

    #[test]
    fn two_map_presets() {
        assert_eq!(riesz_nagy(0.25).unwrap().lambdas(), vec![0.25, 0.75]);
        assert_eq!(gray(0.3).unwrap().epsilon(), &[false, true]);
        assert!(riesz_nagy(0.5).is_err());
        assert!(gray(0.5).is_err());
    }

    #[test]
    fn halves_measure_is_riesz_nagy() {
        let spec = MeasureSpec {
            intervals: vec![(0.0, 0.5), (0.5, 1.0)],
            reversed: vec![false, false],
            weights: vec![0.25, 0.75],
        };
        assert_eq!(from_measure(&spec).unwrap(), riesz_nagy(0.25).unwrap());
    }

    #[test]
    fn cantor_measure_inserts_one_gap() {
        let spec = MeasureSpec {
            intervals: vec![(0.0, 1.0 / 3.0), (2.0 / 3.0, 1.0)],
            reversed: vec![false, false],
            weights: vec![0.5, 0.5],
        };
        let sys = from_measure(&spec).unwrap();
        assert_eq!(sys.m(), 3);
        assert_eq!(sys.lambdas(), vec![0.5, 0.0, 0.5]);
        for c in sys.c() {
            assert!((c - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_right_interval_is_rejected() {
        let spec = MeasureSpec { intervals: vec![(0.5, 1.0)], reversed: vec![false], weights: vec![1.0] };
        assert!(from_measure(&spec).is_err());
    }

    #[test]
    fn overlapping_measure_intervals_are_rejected() {
        let spec = MeasureSpec {
            intervals: vec![(0.0, 0.6), (0.5, 1.0)],
            reversed: vec![false, false],
            weights: vec![0.5, 0.5],
        };
        assert!(matches!(from_measure(&spec), Err(SystemError::Measure(_))));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let sys = polya(25f64.to_radians()).unwrap();
        let text = sys.to_json();
        let back = SelfAffineSystem::from_json(&text).unwrap();
        assert_eq!(back, sys);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn preset_json_forms() {
        let sys = system_from_json(r#"{"preset":"polya","theta_deg":25}"#).unwrap();
        assert_eq!(sys, polya(25f64.to_radians()).unwrap());
        let sys = system_from_json(r#"{"preset":"measure","intervals":[[0,0.5],[0.5,1]],"weights":[0.25,0.75]}"#).unwrap();
        assert_eq!(sys, riesz_nagy(0.25).unwrap());
        assert!(system_from_json(r#"{"preset":"okamoto"}"#).is_err());
    }

    #[test]
    fn triangle_has_requested_scales() {
        let sys = triangle(0.6, 0.7).unwrap();
        assert_eq!(sys.lambdas(), vec![0.6, 0.7]);
        assert!(sys.validate().ok());
    }
}
