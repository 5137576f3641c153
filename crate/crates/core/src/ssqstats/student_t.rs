//! Student's t distribution through the regularized incomplete beta function.
//!
//! For `x = df / (df + t^2)` the two-tailed tail mass is `I_x(df/2, 1/2)`.

use super::StatsError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    inc_beta_split(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with the complement `y = 1 - x` supplied separately, so
/// callers that know `y` more accurately than `1 - x` keep that precision.
fn inc_beta_split(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if y <= 0.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * y.ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, y) / b
    }
}

fn check_df(df: f64) -> Result<(), StatsError> {
    if df.is_finite() && df >= 1.0 {
        Ok(())
    } else {
        Err(StatsError::Domain(format!(
            "degrees of freedom must be >= 1, got {df}"
        )))
    }
}

/// Mass of the two tails beyond `|t|`, without argument checks.
fn tail_mass(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let t2 = t * t;
    let denom = df + t2;
    inc_beta_split(df / 2.0, 0.5, df / denom, t2 / denom)
}

/// Student's t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(StatsError::Domain("t must not be NaN".into()));
    }
    let half_tail = 0.5 * tail_mass(t, df);
    Ok(if t > 0.0 { 1.0 - half_tail } else { half_tail })
}

/// Student's t density.
pub fn student_t_pdf(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    let ln_norm =
        ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    Ok((ln_norm - (df + 1.0) / 2.0 * (t * t / df).ln_1p()).exp())
}

/// Two-tailed significance `P(|T| >= |t|)` with `df` degrees of freedom.
pub fn two_tailed_p(t: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if t.is_nan() {
        return Err(StatsError::Domain("t must not be NaN".into()));
    }
    Ok(tail_mass(t, df).clamp(0.0, 1.0))
}

/// Inverse CDF by bracketing and bisection on the CDF itself.
pub fn t_critical(quantile: f64, df: f64) -> Result<f64, StatsError> {
    check_df(df)?;
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(StatsError::Domain(format!(
            "quantile must lie in (0, 1), got {quantile}"
        )));
    }
    if quantile == 0.5 {
        return Ok(0.0);
    }
    // Solve in the upper half; the distribution is symmetric.
    let upper = quantile.max(1.0 - quantile);
    let target_tail = 2.0 * (1.0 - upper);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while tail_mass(hi, df) > target_tail {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(StatsError::Domain(format!(
                "quantile {quantile} out of reach"
            )));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail_mass(mid, df) > target_tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    Ok(if quantile > 0.5 { root } else { -root })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(5.0) - 24f64.ln()).abs() < 1e-13);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.5) - 1_133_278.388_948_785_6_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn inc_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_{1/2}(a, a) = 1/2
        for &x in &[0.1, 0.37, 0.5, 0.9] {
            assert!((inc_beta(1.0, 1.0, x) - x).abs() < 1e-14);
            assert!((inc_beta(3.5, 1.0, x) - x.powf(3.5)).abs() < 1e-14);
        }
        for &a in &[0.5, 2.0, 9.5, 50.0] {
            assert!((inc_beta(a, a, 0.5) - 0.5).abs() < 1e-13);
        }
        assert_eq!(inc_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(inc_beta(2.0, 3.0, 1.0), 1.0);
    }

    #[test]
    fn cauchy_case() {
        let p = two_tailed_p(1.0, 1.0).unwrap();
        assert!((p - 0.5).abs() < 1e-15, "{p}");
        assert!((student_t_cdf(1.0, 1.0).unwrap() - 0.75).abs() < 1e-15);
        for &t in &[-3.0f64, -0.2, 0.7, 12.0] {
            let exact = 0.5 + t.atan() / std::f64::consts::PI;
            assert!((student_t_cdf(t, 1.0).unwrap() - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn df_two_closed_form() {
        for &t in &[-4.0f64, -1.0, 0.3, 2.5] {
            let exact = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert!((student_t_cdf(t, 2.0).unwrap() - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn p_symmetry_and_edges() {
        for &df in &[1.0, 3.0, 19.0, 250.0] {
            assert_eq!(two_tailed_p(0.0, df).unwrap(), 1.0);
            assert_eq!(two_tailed_p(f64::INFINITY, df).unwrap(), 0.0);
            for &t in &[0.1, 1.7, 6.0] {
                assert_eq!(two_tailed_p(t, df).unwrap(), two_tailed_p(-t, df).unwrap());
            }
        }
        assert!(two_tailed_p(1.0, 0.5).is_err());
        assert!(two_tailed_p(f64::NAN, 5.0).is_err());
    }

    #[test]
    fn critical_values() {
        assert_eq!(t_critical(0.5, 7.0).unwrap(), 0.0);
        assert!((t_critical(0.75, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((t_critical(0.25, 1.0).unwrap() + 1.0).abs() < 1e-12);
        let t19 = t_critical(0.975, 19.0).unwrap();
        assert!((t19 - 2.0930).abs() < 5e-5, "{t19}");
        assert!(t_critical(0.0, 5.0).is_err());
        assert!(t_critical(1.0, 5.0).is_err());
        assert!(t_critical(0.9, 0.0).is_err());
    }

    #[test]
    fn critical_round_trips() {
        for &df in &[1.0, 2.0, 5.0, 19.0, 100.0] {
            for &q in &[1e-6, 0.01, 0.2, 0.6, 0.975, 0.999_999] {
                let x = t_critical(q, df).unwrap();
                let back = student_t_cdf(x, df).unwrap();
                assert!((back - q).abs() <= 1e-8, "df {df} q {q}: {back}");
            }
        }
    }

    #[test]
    fn density_integrates_near_one() {
        // coarse midpoint rule over a wide window for df = 5
        let h = 1e-3;
        let total: f64 = (0..200_000)
            .map(|i| -100.0 + (i as f64 + 0.5) * h)
            .map(|t| student_t_pdf(t, 5.0).unwrap() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }
}
