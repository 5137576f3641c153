//! Independent oracles shared by the integration suites. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use blurgate::detector::GateCommand;
use blurgate::ssqstats::{Condition, SsqResponse, Symptom};
use blurgate::trace::MotionTrace;

/// Γ(k/2) for a positive integer k, by the half-integer recurrence.
pub fn gamma_half(k: u32) -> f64 {
    let mut g = if k % 2 == 0 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    let mut x = if k % 2 == 0 { 1.0 } else { 0.5 };
    while x < k as f64 / 2.0 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Student-t density for integer degrees of freedom.
pub fn t_density(t: f64, df: u32) -> f64 {
    let nu = df as f64;
    let c = gamma_half(df + 1) / ((nu * std::f64::consts::PI).sqrt() * gamma_half(df));
    c * (1.0 + t * t / nu).powf(-(nu + 1.0) / 2.0)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-tailed p by integrating the density over `[0, |t|]`.
pub fn p_by_quadrature(t: f64, df: u32) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let inner = integrate(&|x| t_density(x, df), 0.0, t.abs(), 1e-13);
    1.0 - 2.0 * inner
}

/// Finds `n` integer differences in `[-3, 3]` whose sample mean and sd match
/// the given moments, by enumerating value counts. Returns them sorted.
pub fn integer_differences(mean: f64, sd: f64, n: usize) -> Option<Vec<i32>> {
    let sum = (mean * n as f64).round() as i64;
    let sum_sq = (sd * sd * (n - 1) as f64 + n as f64 * mean * mean).round() as i64;
    let mut counts = [0usize; 7];
    fn search(
        slot: usize,
        remaining: usize,
        counts: &mut [usize; 7],
        sum: i64,
        sum_sq: i64,
    ) -> bool {
        if slot == 6 {
            counts[6] = remaining;
            let (s, q) = counts
                .iter()
                .enumerate()
                .fold((0i64, 0i64), |(s, q), (i, &c)| {
                    let v = i as i64 - 3;
                    (s + v * c as i64, q + v * v * c as i64)
                });
            return s == sum && q == sum_sq;
        }
        for c in 0..=remaining {
            counts[slot] = c;
            if search(slot + 1, remaining - c, counts, sum, sum_sq) {
                return true;
            }
        }
        false
    }
    if !search(0, n, &mut counts, sum, sum_sq) {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    for (i, &c) in counts.iter().enumerate() {
        out.extend(std::iter::repeat_n(i as i32 - 3, c));
    }
    Some(out)
}

/// Sample mean and (n - 1) sd, computed directly.
pub fn moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Builds matched responses whose per-symptom differences are `diffs[s]`.
/// A difference d is realised as (d, 0) when d >= 0 and (0, -d) otherwise.
pub fn responses_from_diffs(diffs: &[Vec<i32>; 14]) -> (Vec<SsqResponse>, Vec<SsqResponse>) {
    let n = diffs[0].len();
    let mut exp = Vec::with_capacity(n);
    let mut ctl = Vec::with_capacity(n);
    for p in 0..n {
        let mut e = [0u8; 14];
        let mut c = [0u8; 14];
        for s in Symptom::ALL {
            let d = diffs[s as usize][p];
            if d >= 0 {
                e[s as usize] = d as u8;
            } else {
                c[s as usize] = (-d) as u8;
            }
        }
        let id = format!("P{:02}", p + 1);
        exp.push(SsqResponse::new(id.clone(), Condition::Experimental, e).unwrap());
        ctl.push(SsqResponse::new(id, Condition::Control, c).unwrap());
    }
    (exp, ctl)
}

/// Longest stretch between consecutive samples that have any axis at or
/// above `threshold`, including the leading stretch from t = 0.
pub fn longest_quiet_gap_us(trace: &MotionTrace, threshold: f64) -> u64 {
    let mut last = 0u64;
    let mut longest = 0u64;
    for s in trace.samples() {
        if s.wx.abs() >= threshold || s.wy.abs() >= threshold || s.wz.abs() >= threshold {
            longest = longest.max(s.t_us - last);
            last = s.t_us;
        }
    }
    longest
}

/// Blur fraction straight from the command intervals, for instantaneous
/// optics starting clear.
pub fn blur_fraction_from_commands(commands: &[GateCommand], end_us: u64) -> f64 {
    let mut blurred = 0u64;
    let mut off_since: Option<u64> = None;
    for c in commands {
        match (c.drive_on, off_since) {
            (false, None) => off_since = Some(c.issue_us),
            (true, Some(t0)) => {
                blurred += c.issue_us - t0;
                off_since = None;
            }
            _ => {}
        }
    }
    if let Some(t0) = off_since {
        blurred += end_us - t0;
    }
    blurred as f64 / end_us as f64
}

/// Table rows: (symptom, mean, sd) as printed.
pub const MOMENTS: [(Symptom, f64, f64); 14] = [
    (Symptom::GeneralDiscomfort, -0.65, 0.74516),
    (Symptom::Fatigue, -0.05, 0.22361),
    (Symptom::Headache, 0.0, 0.32444),
    (Symptom::EyeStrain, -0.4, 0.59824),
    (Symptom::DifficultFocusing, -0.1, 0.30779),
    (Symptom::Nausea, -0.55, 0.60481),
    (Symptom::DifficultyConcentrating, -0.2, 0.41039),
    (Symptom::StomachAwareness, -0.3, 0.57124),
    (Symptom::BlurredVision, -0.15, 0.48936),
    (Symptom::IncreasedSalivation, -0.1, 0.30779),
    (Symptom::DizzyEyesOpen, -0.55, 0.68633),
    (Symptom::DizzyEyesClosed, -0.2, 0.52315),
    (Symptom::Vertigo, -0.05, 0.22361),
    (Symptom::FullnessOfHead, -0.15, 0.36635),
];

/// Difference vectors matching every row's moments; Fatigue and Headache
/// use the canonical 19x0 + (-1) and 18x0 + (+1, -1) constructions.
pub fn table_matching_diffs() -> [Vec<i32>; 14] {
    std::array::from_fn(|i| {
        let (symptom, mean, sd) = MOMENTS[i];
        match symptom {
            Symptom::Fatigue => {
                let mut v = vec![0; 20];
                v[0] = -1;
                v
            }
            Symptom::Headache => {
                let mut v = vec![0; 20];
                v[0] = 1;
                v[1] = -1;
                v
            }
            _ => integer_differences(mean, sd, 20).expect("row has an integer construction"),
        }
    })
}
