//! One-dimensional quadrature on sampled data, uniform or not.

/// Weights of `int_{t0}^{t2}` of the quadratic through three points
/// (Simpson's rule for unequal spacings `h1 = t1 - t0`, `h2 = t2 - t1`).
pub fn simpson_pair_weights(h1: f64, h2: f64) -> [f64; 3] {
    let s = h1 + h2;
    [
        s * (2.0 * h1 - h2) / (6.0 * h1),
        s * s * s / (6.0 * h1 * h2),
        s * (2.0 * h2 - h1) / (6.0 * h2),
    ]
}

/// Weights of `int_{t1}^{t2}` of the quadratic through `t0 < t1 < t2`.
/// For equal spacing `h` these are `h/12 (-1, 8, 5)`.
pub fn last_interval_weights(h1: f64, h2: f64) -> [f64; 3] {
    [
        -h2 * h2 * h2 / (6.0 * h1 * (h1 + h2)),
        h2 * (3.0 * h1 + h2) / (6.0 * h1),
        h2 * (3.0 * h1 + 2.0 * h2) / (6.0 * (h1 + h2)),
    ]
}

/// Composite Simpson over the samples `(t_i, f_i)`. An odd number of
/// intervals is closed with the quadratic through the last three points;
/// a single interval falls back to the trapezoid rule.
pub fn integrate_samples(times: &[f64], values: &[f64]) -> f64 {
    assert_eq!(times.len(), values.len());
    let n = times.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * (times[1] - times[0]) * (values[0] + values[1]);
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut s = 0.0;
    let mut i = 0;
    while i < paired {
        let w = simpson_pair_weights(times[i + 1] - times[i], times[i + 2] - times[i + 1]);
        s += w[0] * values[i] + w[1] * values[i + 1] + w[2] * values[i + 2];
        i += 2;
    }
    if paired < intervals {
        let j = n - 1;
        let w = last_interval_weights(times[j - 1] - times[j - 2], times[j] - times[j - 1]);
        s += w[0] * values[j - 2] + w[1] * values[j - 1] + w[2] * values[j];
    }
    s
}

/// Composite Simpson on a uniform grid; the generic rule with equal spacings.
pub fn integrate_uniform(spacing: f64, values: &[f64]) -> f64 {
    let times: Vec<f64> = (0..values.len()).map(|i| i as f64 * spacing).collect();
    integrate_samples(&times, values)
}

/// Weight vector `w` such that `integrate_uniform(spacing, f) = sum w_i f_i`.
pub fn uniform_weights(spacing: f64, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    if n == 2 {
        return vec![0.5 * spacing; 2];
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let pw = simpson_pair_weights(spacing, spacing);
    let mut i = 0;
    while i < paired {
        for (j, wj) in pw.iter().enumerate() {
            w[i + j] += wj;
        }
        i += 2;
    }
    if paired < intervals {
        let lw = last_interval_weights(spacing, spacing);
        for (j, wj) in lw.iter().enumerate() {
            w[n - 3 + j] += wj;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics_on_even_interval_counts() {
        let times: Vec<f64> = vec![0.0, 0.1, 0.35, 0.5, 0.9];
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t * t;
        let vals: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        let exact = 0.9 - 0.81 + 0.729;
        assert!((integrate_samples(&times, &vals) - exact).abs() < 1e-14);
    }

    #[test]
    fn odd_interval_count_is_exact_for_quadratics() {
        let vals: Vec<f64> = (0..6).map(|i| (i as f64 * 0.2).powi(2)).collect();
        assert!((integrate_uniform(0.2, &vals) - 1.0f64.powi(3) / 3.0).abs() < 1e-14);
        let w = uniform_weights(0.2, 6);
        let s: f64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((s - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn fourth_order_convergence() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|i| (i as f64 * h).exp()).collect();
            (integrate_uniform(h, &vals) - (1f64.exp() - 1.0)).abs()
        };
        let order = (err(16) / err(32)).log2();
        assert!((order - 4.0).abs() < 0.2, "order {order}");
    }
}
