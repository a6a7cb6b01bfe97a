use std::time::{Duration, Instant};

/// Median of `samples`. The mean of the two middle values for even counts,
/// NaN for an empty slice.
pub fn median(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

/// Sample standard deviation, 0 for fewer than two samples.
pub fn std_dev(samples: &[f64]) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Per-call nanosecond samples of one timed routine.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub ns: Vec<f64>,
    /// Calls per sample needed to reach the minimum sample duration.
    pub iterations: u64,
}

impl Samples {
    pub fn median(&self) -> f64 {
        median(&self.ns)
    }

    pub fn std_dev(&self) -> f64 {
        std_dev(&self.ns)
    }
}

/// Runs `f` once to warm up, then picks an iteration count so that a sample
/// lasts at least `min_sample`, then takes `reps` samples.
pub fn sample(reps: usize, min_sample: Duration, mut f: impl FnMut()) -> Samples {
    f();
    let mut iterations: u64 = 1;
    loop {
        let start = Instant::now();
        for _ in 0..iterations {
            f();
        }
        let took = start.elapsed();
        if took >= min_sample || iterations >= 1 << 40 {
            break;
        }
        // aim straight for the target, at least doubling
        let scale = min_sample.as_secs_f64() / took.as_secs_f64().max(1e-9);
        iterations = iterations.saturating_mul((scale.ceil() as u64).clamp(2, 1 << 20));
    }
    let ns = (0..reps)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..iterations {
                f();
            }
            start.elapsed().as_nanos() as f64 / iterations as f64
        })
        .collect();
    Samples { ns, iterations }
}
