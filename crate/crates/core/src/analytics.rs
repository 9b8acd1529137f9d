//! Server-side statistics over reconstructed client signals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{FourierSeries, SampledSignal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("no inputs")]
    Empty,
    #[error("bandwidth mismatch: expected {expected}, got {got}")]
    BandwidthMismatch { expected: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("reference signal has zero norm")]
    ZeroNorm,
    #[error("non-finite sample")]
    NonFinite,
}

/// Coefficient-wise sum of series sharing one bandwidth.
pub fn aggregate_sum(series: &[FourierSeries]) -> Result<FourierSeries, AnalyticsError> {
    let first = series.first().ok_or(AnalyticsError::Empty)?;
    let l = first.bandwidth();
    let mut dc = 0.0;
    let mut cos = vec![0.0; l];
    let mut sin = vec![0.0; l];
    for s in series {
        if s.bandwidth() != l {
            return Err(AnalyticsError::BandwidthMismatch {
                expected: l,
                got: s.bandwidth(),
            });
        }
        dc += s.dc();
        cos.iter_mut().zip(s.cos_coeffs()).for_each(|(a, b)| *a += b);
        sin.iter_mut().zip(s.sin_coeffs()).for_each(|(a, b)| *a += b);
    }
    Ok(FourierSeries::new(dc, cos, sin).expect("sum of finite series is finite"))
}

/// Pointwise sum of equally long sampled signals.
pub fn sum_signals(signals: &[SampledSignal]) -> Result<SampledSignal, AnalyticsError> {
    let first = signals.first().ok_or(AnalyticsError::Empty)?;
    let mut acc = vec![0.0; first.len()];
    for s in signals {
        if s.len() != acc.len() {
            return Err(AnalyticsError::LengthMismatch(acc.len(), s.len()));
        }
        acc.iter_mut().zip(s.values()).for_each(|(a, v)| *a += v);
    }
    SampledSignal::new(acc).map_err(|_| AnalyticsError::NonFinite)
}

/// Right-continuous empirical distribution function of a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self, AnalyticsError> {
        if samples.is_empty() {
            return Err(AnalyticsError::Empty);
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(AnalyticsError::NonFinite);
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted })
    }

    /// Pools every sample of every signal.
    pub fn pooled(signals: &[SampledSignal]) -> Result<Self, AnalyticsError> {
        let all: Vec<f64> = signals.iter().flat_map(|s| s.values().iter().copied()).collect();
        EmpiricalCdf::new(&all)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    /// `#{samples <= x} / N`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `s` with `F(s) >= q`, i.e. `sorted[ceil(qN) - 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        assert!(q > 0.0 && q < 1.0, "quantile level must lie in (0, 1)");
        let n = self.sorted.len() as f64;
        // guard against qN landing a hair above an integer
        let rank = (q * n - 1e-12 * n).ceil().max(1.0) as usize;
        self.sorted[rank.min(self.sorted.len()) - 1]
    }
}

/// Exact `int_0^1 |Fa^-1(z) - Fb^-1(z)| dz` for two empirical distributions.
pub fn wasserstein_1d(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (xa, xb) = (a.sorted_samples(), b.sorted_samples());
    let (na, nb) = (xa.len(), xb.len());
    // walk the merged grid {i/na} U {j/nb}; compare i*nb with j*na exactly
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = 0usize; // position on the common grid of step 1/(na*nb)
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) * nb;
        let next_b = (j + 1) * na;
        let next = next_a.min(next_b);
        total += (next - prev) as f64 * (xa[i] - xb[j]).abs();
        prev = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    total / (na as f64 * nb as f64)
}

/// `max_x (F_a(x) - F_b(x))` over all sample breakpoints of both.
pub fn max_cdf_excess(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    a.sorted_samples()
        .iter()
        .chain(b.sorted_samples())
        .map(|&x| a.eval(x) - b.eval(x))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViolationStats {
    pub count: usize,
    pub percent: f64,
    pub peak_error: f64,
}

/// Points where the envelope falls below the truth by more than
/// `1e-6 (1 + ||truth||_inf)`.
pub fn violation_stats(
    envelope: &SampledSignal,
    truth: &SampledSignal,
) -> Result<ViolationStats, AnalyticsError> {
    if envelope.len() != truth.len() {
        return Err(AnalyticsError::LengthMismatch(envelope.len(), truth.len()));
    }
    let tol = 1e-6 * (1.0 + truth.sup_norm());
    let mut count = 0;
    let mut peak = 0.0f64;
    for (e, t) in envelope.values().iter().zip(truth.values()) {
        if *e < t - tol {
            count += 1;
            peak = peak.max(t - e);
        }
    }
    Ok(ViolationStats {
        count,
        percent: 100.0 * count as f64 / truth.len() as f64,
        peak_error: peak,
    })
}

/// `||approx - truth||_2 / ||truth||_2` on the sample grid.
pub fn rms_relative(approx: &SampledSignal, truth: &SampledSignal) -> Result<f64, AnalyticsError> {
    if approx.len() != truth.len() {
        return Err(AnalyticsError::LengthMismatch(approx.len(), truth.len()));
    }
    let norm: f64 = truth.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(AnalyticsError::ZeroNorm);
    }
    let err: f64 = approx
        .values()
        .iter()
        .zip(truth.values())
        .map(|(a, t)| (a - t) * (a - t))
        .sum::<f64>()
        .sqrt();
    Ok(err / norm)
}

/// Bytes uploaded when every client sends `2L + 1` single-precision numbers.
pub fn comm_cost_bytes(bandwidth: usize, clients: usize) -> u64 {
    clients as u64 * (2 * bandwidth as u64 + 1) * 4
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(v: &[f64]) -> SampledSignal {
        SampledSignal::new(v.to_vec()).unwrap()
    }

    #[test]
    fn aggregate_constants_and_negation() {
        let s = aggregate_sum(&[FourierSeries::constant(1.0), FourierSeries::constant(2.0)]).unwrap();
        assert_eq!(s.dc(), 3.0);
        let a = FourierSeries::new(0.5, vec![1.0, -2.0], vec![0.25, 3.0]).unwrap();
        let neg = FourierSeries::new(-0.5, vec![-1.0, 2.0], vec![-0.25, -3.0]).unwrap();
        let z = aggregate_sum(&[a, neg]).unwrap();
        assert_eq!(z, FourierSeries::zeros(2));
    }

    #[test]
    fn aggregate_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let series: Vec<FourierSeries> = (0..37)
            .map(|_| {
                FourierSeries::new(
                    rng.gen_range(-1.0..1.0),
                    (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                )
                .unwrap()
            })
            .collect();
        let sum = aggregate_sum(&series).unwrap();
        for _ in 0..10 {
            let t: f64 = rng.gen();
            let direct: f64 = series.iter().map(|s| s.evaluate(t)).sum();
            assert!((sum.evaluate(t) - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn aggregate_errors() {
        assert_eq!(aggregate_sum(&[]), Err(AnalyticsError::Empty));
        let err = aggregate_sum(&[FourierSeries::zeros(1), FourierSeries::zeros(2)]).unwrap_err();
        assert_eq!(err, AnalyticsError::BandwidthMismatch { expected: 1, got: 2 });
    }

    #[test]
    fn cdf_steps() {
        let cdf = EmpiricalCdf::new(&[3.0, 1.0, 2.0]).unwrap();
        assert!((cdf.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cdf.eval(0.5), 0.0);
        assert_eq!(cdf.eval(3.0), 1.0);
        assert_eq!(cdf.eval(10.0), 1.0);
        assert!(EmpiricalCdf::new(&[]).is_err());
    }

    #[test]
    fn cdf_uniform_sup_gap() {
        // DKW: P(sup gap > e) <= 2 exp(-2 N e^2); at N = 1000 and 99% that is e = 0.0515
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let xs: Vec<f64> = (0..1000).map(|_| rng.gen()).collect();
        let cdf = EmpiricalCdf::new(&xs).unwrap();
        let n = xs.len() as f64;
        let gap = cdf
            .sorted_samples()
            .iter()
            .enumerate()
            .map(|(i, &x)| ((i + 1) as f64 / n - x).abs().max((x - i as f64 / n).abs()))
            .fold(0.0, f64::max);
        let dkw = ((2.0f64 / 0.01).ln() / (2.0 * n)).sqrt();
        assert!(dkw < 0.06);
        assert!(gap <= 0.06, "gap {gap}");
    }

    #[test]
    fn quantile_convention() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let cdf = EmpiricalCdf::new(&xs).unwrap();
        assert_eq!(cdf.quantile(0.5), 5.0);
        assert_eq!(cdf.quantile(1e-9), 1.0);
        assert_eq!(cdf.quantile(0.1), 1.0);
        assert_eq!(cdf.quantile(0.11), 2.0);
        assert_eq!(cdf.quantile(0.9), 9.0);
        assert_eq!(cdf.quantile(0.999), 10.0);
    }

    #[test]
    fn wasserstein_examples() {
        let a = EmpiricalCdf::new(&[0.0, 1.0, 5.0]).unwrap();
        assert_eq!(wasserstein_1d(&a, &a), 0.0);
        let shifted = EmpiricalCdf::new(&[2.5, 3.5, 7.5]).unwrap();
        assert!((wasserstein_1d(&a, &shifted) - 2.5).abs() < 1e-12);
        let a = EmpiricalCdf::new(&[0.0, 1.0]).unwrap();
        let b = EmpiricalCdf::new(&[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(wasserstein_1d(&a, &b), 0.0);
        // unequal sizes: [0] vs [0, 1] differ on half the mass by 1
        let a = EmpiricalCdf::new(&[0.0]).unwrap();
        let b = EmpiricalCdf::new(&[0.0, 1.0]).unwrap();
        assert!((wasserstein_1d(&a, &b) - 0.5).abs() < 1e-15);
        // thirds against halves
        let a = EmpiricalCdf::new(&[0.0, 3.0, 6.0]).unwrap();
        let b = EmpiricalCdf::new(&[0.0, 6.0]).unwrap();
        // z in [0,1/3): 0; [1/3,1/2): 3; [1/2,2/3): 3; [2/3,1): 0
        assert!((wasserstein_1d(&a, &b) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cdf_excess() {
        let lo = EmpiricalCdf::new(&[0.0, 1.0]).unwrap();
        let hi = EmpiricalCdf::new(&[0.5, 2.0]).unwrap();
        assert_eq!(max_cdf_excess(&lo, &hi), 0.5);
        assert_eq!(max_cdf_excess(&hi, &lo), 0.0);
    }

    #[test]
    fn violations() {
        let truth = sig(&[1.0, 2.0, 3.0, 4.0]);
        let s = violation_stats(&truth, &truth).unwrap();
        assert_eq!((s.count, s.peak_error), (0, 0.0));
        let above = sig(&[2.0, 3.0, 4.0, 5.0]);
        assert_eq!(violation_stats(&above, &truth).unwrap().count, 0);
        let dip = sig(&[1.0, 2.0, 3.0, -1.0]);
        let s = violation_stats(&dip, &truth).unwrap();
        assert_eq!(s.count, 1);
        assert_eq!(s.peak_error, 5.0);
        assert_eq!(s.percent, 25.0);
        assert!(violation_stats(&sig(&[1.0]), &truth).is_err());
    }

    #[test]
    fn rms() {
        let truth = sig(&[1.0, -2.0, 3.0]);
        assert_eq!(rms_relative(&truth, &truth).unwrap(), 0.0);
        let double = sig(&[2.0, -4.0, 6.0]);
        assert!((rms_relative(&double, &truth).unwrap() - 1.0).abs() < 1e-15);
        let zero = sig(&[0.0, 0.0, 0.0]);
        assert!((rms_relative(&zero, &truth).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rms_relative(&truth, &zero), Err(AnalyticsError::ZeroNorm));
    }

    #[test]
    fn comm_cost() {
        assert_eq!(comm_cost_bytes(0, 1), 4);
        assert_eq!(comm_cost_bytes(72, 37), 21460);
        assert_eq!(comm_cost_bytes(360, 1), 2884);
    }
}
