//! Brute-force reference computations.
//!
//! Nothing here calls into the closed forms of [`crate::analytics`]; the
//! validation suite and the tests compare the two.

use statrs::distribution::{ChiSquared, ContinuousCDF};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Tanh-sinh quadrature over `[0, 1]`.
///
/// The integrand receives both `t` and `1 - t`, each computed without
/// cancellation, so endpoint singularities like `(1-t)^(-1/2)` are safe.
pub fn tanh_sinh_unit<F>(f: F) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    let half_pi = std::f64::consts::FRAC_PI_2;
    let eval = |s: f64| -> f64 {
        let u = half_pi * s.sinh();
        let e = (-2.0 * u.abs()).exp();
        // Smaller of (t, 1-t) is e/(1+e); the larger is 1/(1+e).
        let small = e / (1.0 + e);
        let large = 1.0 / (1.0 + e);
        if small == 0.0 {
            return 0.0;
        }
        let (t, c) = if u < 0.0 { (small, large) } else { (large, small) };
        // dt/ds = (π/2)·cosh(s)·sech²(u)/2, with sech²(u)/2 = 2·small·large.
        let w = half_pi * s.cosh() * 2.0 * small * large;
        let v = f(t, c);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };

    let s_max = 7.0;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= s_max {
        let s = k as f64 * h;
        sum += eval(s) + eval(-s);
        k += 1;
    }
    let mut estimate = sum * h;
    for _ in 0..8 {
        // Halve the step: only odd multiples of the new step are new nodes.
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= s_max {
            let s = k as f64 * h;
            sum += eval(s) + eval(-s);
            k += 2;
        }
        let next = sum * h;
        let done = (next - estimate).abs() <= 1e-15 * next.abs();
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// `B(x, y)` by direct integration of `t^(x-1) (1-t)^(y-1)`.
pub fn beta_quadrature(x: f64, y: f64) -> f64 {
    tanh_sinh_unit(|t, c| ((x - 1.0) * t.ln() + (y - 1.0) * c.ln()).exp())
}

/// `Ei(x)` by quadrature: `γ + ln|x| + ∫_0^x (e^t - 1)/t dt`, with
/// `-E1(-x)` used for `x < -1`.
pub fn ei_quadrature(x: f64) -> f64 {
    assert!(x != 0.0, "Ei undefined at 0");
    if x < -1.0 {
        return -e1_quadrature(-x);
    }
    // t = x·v maps the regular part onto [0, 1].
    let regular = tanh_sinh_unit(|v, _| {
        let xv = x * v;
        if v == 0.0 {
            x
        } else {
            xv.exp_m1() / v
        }
    });
    EULER_GAMMA + x.abs().ln() + regular
}

/// `E1(x)` for `x > 0` by quadrature.
pub fn e1_quadrature(x: f64) -> f64 {
    assert!(x > 0.0, "E1 requires x > 0");
    if x <= 1.0 {
        return -ei_quadrature(-x);
    }
    // E1(x) = e^{-x} ∫_0^∞ e^{-v}/(x+v) dv with v = w/(1-w).
    let inner = tanh_sinh_unit(|w, c| {
        let v = w / c;
        (-v).exp() / ((x * c + w) * c)
    });
    (-x).exp() * inner
}

/// `E[1/K | K > 0]` for `K ~ Poisson(mean)` by a truncated sum.
pub fn inverse_count_poisson_sum(mean: f64) -> f64 {
    poisson_conditional_sum(mean, |j| 1.0 / j as f64)
}

/// `E[1/K² | K > 0]` for `K ~ Poisson(mean)` by a truncated sum.
pub fn inverse_square_count_poisson_sum(mean: f64) -> f64 {
    poisson_conditional_sum(mean, |j| 1.0 / (j as f64 * j as f64))
}

/// `Σ_{j≥1} f(j)·P(K = j) / P(K > 0)` with the pmf built by recursion in log space.
pub fn poisson_conditional_sum<F: Fn(u64) -> f64>(mean: f64, f: F) -> f64 {
    assert!(mean > 0.0);
    let upper = (mean + 40.0 * mean.sqrt() + 60.0).ceil() as u64;
    let ln_mean = mean.ln();
    let mut ln_p = -mean;
    let mut total = 0.0;
    for j in 1..=upper {
        ln_p += ln_mean - (j as f64).ln();
        total += f(j) * ln_p.exp();
    }
    total / -(-mean).exp_m1()
}

/// `E[1/N_e | N_e ≥ 1]` for `N_e ~ Binomial(n, 1 - p_null)` by direct averaging.
pub fn inverse_effective_rounds_binomial(p_null: f64, n: u32) -> f64 {
    let q = 1.0 - p_null;
    let mut total = 0.0;
    let mut binom = 1.0;
    for i in 1..=n {
        binom *= (n - i + 1) as f64 / i as f64;
        let prob = binom * p_null.powi((n - i) as i32) * q.powi(i as i32);
        total += prob / i as f64;
    }
    total / (1.0 - p_null.powi(n as i32))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodnessOfFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of integer counts against a Poisson law.
///
/// Adjacent cells are pooled until each expected count is at least 5; the
/// last cell collects the upper tail.
pub fn chi_square_poisson(counts: &[usize], mean: f64) -> GoodnessOfFit {
    let n = counts.len() as f64;
    let max_obs = counts.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0usize; max_obs + 1];
    for &c in counts {
        observed[c] += 1;
    }

    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut exp_acc, mut obs_acc) = (0.0, 0.0);
    let mut pmf = (-mean).exp();
    let mut cum = 0.0;
    let mut k = 0usize;
    loop {
        let tail = (1.0 - cum - pmf).max(0.0);
        exp_acc += n * pmf;
        obs_acc += observed.get(k).copied().unwrap_or(0) as f64;
        cum += pmf;
        if exp_acc >= 5.0 && n * tail >= 5.0 {
            cells.push((obs_acc, exp_acc));
            exp_acc = 0.0;
            obs_acc = 0.0;
        } else if n * tail < 5.0 {
            let rest: f64 = observed.iter().skip(k + 1).map(|&o| o as f64).sum();
            cells.push((obs_acc + rest, exp_acc + n * tail));
            break;
        }
        k += 1;
        pmf *= mean / k as f64;
    }

    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1).max(1);
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic);
    GoodnessOfFit {
        statistic,
        dof,
        p_value,
    }
}

/// Two-sided Kolmogorov–Smirnov statistic of a sample against a CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
