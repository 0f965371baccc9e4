//! Small numeric helpers shared across modules.

/// Neumaier-compensated sum. Order of `values` is part of the contract:
/// callers that need reproducible output must pass a deterministic order.
pub(crate) fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Two-pass mean and population standard deviation (divide by N).
pub(crate) fn mean_and_population_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = kahan_sum(values.iter().copied()) / n;
    let var = kahan_sum(values.iter().map(|v| {
        let d = v - mean;
        d * d
    })) / n;
    (mean, var.max(0.0).sqrt())
}

/// sin(x)/x with the removable singularity filled in.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0
    } else {
        x.sin() / x
    }
}
