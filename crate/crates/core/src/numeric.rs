//! Small numeric helpers shared by the solvers and the output layer.

/// Root of a nonincreasing function on `[lo, hi]`, assuming `f(lo) >= 0 >= f(hi)`.
///
/// Bisects until the bracket no longer shrinks or its width drops to `xtol`.
pub fn bisect_decreasing<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= xtol {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `ln(Σ exp(x_i))` without overflow.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Positive solution `s` of `Σ exp(s · ln_c_i) = 1` for `ln_c_i < 0`.
///
/// A single ratio gives `s = 0`; an empty list gives `NaN`.
pub fn similarity_dimension(ln_c: &[f64]) -> f64 {
    match ln_c.len() {
        0 => f64::NAN,
        1 => 0.0,
        _ => {
            let g = |s: f64| log_sum_exp(ln_c.iter().map(|l| s * l));
            let mut hi = 1.0;
            while g(hi) > 0.0 {
                hi *= 2.0;
            }
            bisect_decreasing(g, 0.0, hi, 0.0)
        }
    }
}

/// C-style `%.12g` formatting.
pub fn fmt_g(x: f64) -> String {
    fmt_g_prec(x, 12)
}

/// C-style `%.<prec>g` formatting.
pub fn fmt_g_prec(x: f64, prec: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let prec = prec.max(1);
    let sci = format!("{:.*e}", prec - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= prec as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (prec as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Round to twelve significant digits, matching [`fmt_g`].
pub fn round_g(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_g(x).parse().unwrap_or(x)
}
