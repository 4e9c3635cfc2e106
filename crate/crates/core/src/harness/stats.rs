//! Small-sample statistics for paired-seed comparisons.

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (n − 1 denominator); 0 for fewer than two values.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn stddev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Root mean of the two sample variances.
pub fn pooled_sd(a: &[f64], b: &[f64]) -> f64 {
    ((variance(a) + variance(b)) / 2.0).sqrt()
}

/// Element-wise `a − b`.
pub fn paired_diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Ratio of sample variances `var(a) / var(b)`; infinite when only `b` is
/// constant.
pub fn variance_ratio(a: &[f64], b: &[f64]) -> f64 {
    let (va, vb) = (variance(a), variance(b));
    if vb == 0.0 {
        if va == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        va / vb
    }
}

/// Sample bimodality coefficient `(g² + 1) / (κ + 3(n−1)² / ((n−2)(n−3)))`
/// with bias-corrected skewness `g` and excess kurtosis `κ`. Values above
/// 5/9 (the uniform distribution's) suggest bimodality. Needs n ≥ 4 and a
/// non-constant sample; returns 0 otherwise.
pub fn bimodality_coefficient(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 4 {
        return 0.0;
    }
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    let g1 = m3 / m2.powf(1.5);
    let g2 = m4 / (m2 * m2) - 3.0;
    let skew = g1 * (n * (n - 1.0)).sqrt() / (n - 2.0);
    let kurt = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0);
    (skew * skew + 1.0) / (kurt + 3.0 * (n - 1.0).powi(2) / ((n - 2.0) * (n - 3.0)))
}

pub const BIMODALITY_THRESHOLD: f64 = 5.0 / 9.0;
