//! Real-parameterised bandlimited Fourier series and uniformly sampled
//! signals on the unit interval.
//!
//! A series of bandwidth `L` is stored as `dc + sum_k cos[k] cos(2 pi k t) +
//! sin[k] sin(2 pi k t)` for `k = 1..=L`, which is `2L + 1` real numbers.
//! For a complex coefficient `a[k]` (with `a[-k] = conj(a[k])`) this means
//! `cos[k] = 2 Re a[k]` and `sin[k] = -2 Im a[k]`, so the harmonic
//! magnitude is `|a[k]| = hypot(cos[k], sin[k]) / 2`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignalError {
    #[error("cosine and sine coefficient arrays differ in length ({cos} vs {sin})")]
    LengthMismatch { cos: usize, sin: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("a sampled signal needs at least one sample")]
    Empty,
    #[error("bandwidth {bandwidth} needs {} samples but only {samples} are available", 2 * bandwidth + 1)]
    RankDeficient { bandwidth: usize, samples: usize },
    #[error("invalid smoothness parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    dc: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierSeries {
    pub fn new(dc: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, SignalError> {
        if cos.len() != sin.len() {
            return Err(SignalError::LengthMismatch {
                cos: cos.len(),
                sin: sin.len(),
            });
        }
        if !dc.is_finite() {
            return Err(SignalError::NonFinite(0));
        }
        let bad = cos
            .iter()
            .chain(sin.iter())
            .position(|v| !v.is_finite());
        if let Some(i) = bad {
            return Err(SignalError::NonFinite(i + 1));
        }
        Ok(FourierSeries { dc, cos, sin })
    }

    pub fn constant(dc: f64) -> Self {
        FourierSeries {
            dc,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn zeros(bandwidth: usize) -> Self {
        FourierSeries {
            dc: 0.0,
            cos: vec![0.0; bandwidth],
            sin: vec![0.0; bandwidth],
        }
    }

    /// Builds a series from the packed layout `[dc, cos_1..cos_L, sin_1..sin_L]`.
    pub fn from_packed(bandwidth: usize, packed: &[f64]) -> Result<Self, SignalError> {
        assert_eq!(packed.len(), 2 * bandwidth + 1, "packed length must be 2L+1");
        FourierSeries::new(
            packed[0],
            packed[1..=bandwidth].to_vec(),
            packed[bandwidth + 1..].to_vec(),
        )
    }

    /// Packed layout `[dc, cos_1..cos_L, sin_1..sin_L]`, as transmitted.
    pub fn to_packed(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.coefficient_count());
        out.push(self.dc);
        out.extend_from_slice(&self.cos);
        out.extend_from_slice(&self.sin);
        out
    }

    pub fn bandwidth(&self) -> usize {
        self.cos.len()
    }

    /// Number of real coefficients, `2L + 1`.
    pub fn coefficient_count(&self) -> usize {
        2 * self.bandwidth() + 1
    }

    pub fn dc(&self) -> f64 {
        self.dc
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn set_dc(&mut self, dc: f64) {
        assert!(dc.is_finite());
        self.dc = dc;
    }

    /// `|a[k]|` for `k >= 1`; zero beyond the bandwidth.
    pub fn harmonic_magnitude(&self, k: usize) -> f64 {
        if k == 0 {
            return self.dc.abs();
        }
        match (self.cos.get(k - 1), self.sin.get(k - 1)) {
            (Some(c), Some(s)) => 0.5 * c.hypot(*s),
            _ => 0.0,
        }
    }

    /// Energy of the retained coefficients, `dc^2 + 1/2 sum (cos^2 + sin^2)`.
    pub fn energy(&self) -> f64 {
        let harmonics: f64 = self
            .cos
            .iter()
            .chain(self.sin.iter())
            .map(|v| v * v)
            .sum();
        self.dc * self.dc + 0.5 * harmonics
    }

    /// Same series padded (or truncated) to another bandwidth.
    pub fn with_bandwidth(&self, bandwidth: usize) -> FourierSeries {
        let mut cos = self.cos.clone();
        let mut sin = self.sin.clone();
        cos.resize(bandwidth, 0.0);
        sin.resize(bandwidth, 0.0);
        FourierSeries {
            dc: self.dc,
            cos,
            sin,
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        let mut acc = self.dc;
        for (i, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let phase = 2.0 * PI * (i + 1) as f64 * t;
            acc += c * phase.cos() + s * phase.sin();
        }
        acc
    }

    /// Derivative with respect to `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for (i, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
            let w = 2.0 * PI * (i + 1) as f64;
            let phase = w * t;
            acc += w * (s * phase.cos() - c * phase.sin());
        }
        acc
    }

    /// Samples the series on the grid `t_j = j/n`, `j = 0..n`.
    ///
    /// # Panics
    ///
    /// Panics if `n == 0`.
    pub fn sample(&self, n: usize) -> SampledSignal {
        assert!(n >= 1, "cannot sample on an empty grid");
        let trig = GridTrig::new(n);
        let values = (0..n)
            .map(|j| {
                let mut acc = self.dc;
                for (i, (c, s)) in self.cos.iter().zip(&self.sin).enumerate() {
                    let (cv, sv) = trig.at(i + 1, j);
                    acc += c * cv + s * sv;
                }
                acc
            })
            .collect();
        SampledSignal { values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    values: Vec<f64>,
}

impl SampledSignal {
    pub fn new(values: Vec<f64>) -> Result<Self, SignalError> {
        if values.is_empty() {
            return Err(SignalError::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        Ok(SampledSignal { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }

    /// Largest first difference scaled by `n`, a sample estimate of
    /// `max |f'(t)|` on the unit interval (wraps around periodically).
    pub fn max_slope_estimate(&self) -> f64 {
        let n = self.values.len();
        let mut best = 0.0f64;
        for j in 0..n {
            let next = self.values[(j + 1) % n];
            best = best.max((next - self.values[j]).abs());
        }
        best * n as f64
    }

    /// Pointwise sum; both signals must share `n`.
    pub fn add(&self, other: &SampledSignal) -> SampledSignal {
        assert_eq!(self.len(), other.len(), "sample grids differ");
        SampledSignal {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Cached `cos(2 pi m / n)` and `sin(2 pi m / n)` for `m = 0..n`, so that
/// harmonic `k` at grid index `j` is a lookup of `(k * j) mod n`.
#[derive(Debug, Clone)]
pub(crate) struct GridTrig {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl GridTrig {
    pub(crate) fn new(n: usize) -> Self {
        let (cos, sin) = (0..n)
            .map(|m| {
                let phase = 2.0 * PI * m as f64 / n as f64;
                (phase.cos(), phase.sin())
            })
            .unzip();
        GridTrig { n, cos, sin }
    }

    #[inline]
    pub(crate) fn at(&self, k: usize, j: usize) -> (f64, f64) {
        let m = (k * j) % self.n;
        (self.cos[m], self.sin[m])
    }

    /// Basis row `[1, cos_1..cos_L, sin_1..sin_L]` at grid index `j`.
    pub(crate) fn basis_row(&self, bandwidth: usize, j: usize, row: &mut [f64]) {
        debug_assert_eq!(row.len(), 2 * bandwidth + 1);
        row[0] = 1.0;
        for k in 1..=bandwidth {
            let (c, s) = self.at(k, j);
            row[k] = c;
            row[bandwidth + k] = s;
        }
    }
}

/// Discrete Fourier projection of `signal` onto bandwidth `bandwidth`
/// (rectangle-rule DFT on the uniform grid).
pub fn project(signal: &SampledSignal, bandwidth: usize) -> Result<FourierSeries, SignalError> {
    let n = signal.len();
    if 2 * bandwidth + 1 > n {
        return Err(SignalError::RankDeficient {
            bandwidth,
            samples: n,
        });
    }
    let trig = GridTrig::new(n);
    let f = signal.values();
    let scale = 2.0 / n as f64;
    let dc = f.iter().sum::<f64>() / n as f64;
    let mut cos = vec![0.0; bandwidth];
    let mut sin = vec![0.0; bandwidth];
    for k in 1..=bandwidth {
        let (mut c_acc, mut s_acc) = (0.0, 0.0);
        for (j, v) in f.iter().enumerate() {
            let (c, s) = trig.at(k, j);
            c_acc += v * c;
            s_acc += v * s;
        }
        cos[k - 1] = scale * c_acc;
        sin[k - 1] = scale * s_acc;
    }
    Ok(FourierSeries { dc, cos, sin })
}

/// Decay-class constants `(C, p, eps)` of `|a[k]| <= C / k^(p+1+eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessParams {
    c: f64,
    p: f64,
    eps: f64,
}

impl SmoothnessParams {
    pub fn new(c: f64, p: f64, eps: f64) -> Result<Self, SignalError> {
        if !(c.is_finite() && c > 0.0) {
            return Err(SignalError::InvalidParams("C must be positive"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(SignalError::InvalidParams("p must be positive"));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(SignalError::InvalidParams("eps must be nonnegative"));
        }
        Ok(SmoothnessParams { c, p, eps })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

/// Phase structure of the synthetic power-law coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// Uniformly random phases.
    Signed,
    /// Real, nonnegative, even coefficients (`sin = 0`).
    NonnegSymmetric,
}

/// Series of bandwidth `k_max` with `|a[k]| = C / k^p`.
///
/// The dc term is drawn uniformly from `[0, 1)`; in [`TailMode::Signed`]
/// each harmonic also gets a uniformly random phase. Output depends only on
/// the arguments.
pub fn synth_power_law(
    params: &SmoothnessParams,
    mode: TailMode,
    k_max: usize,
    seed: u64,
) -> FourierSeries {
    assert!(k_max >= 1, "k_max must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dc = rng.gen::<f64>();
    let mut cos = Vec::with_capacity(k_max);
    let mut sin = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mag = params.c / (k as f64).powf(params.p);
        match mode {
            TailMode::NonnegSymmetric => {
                cos.push(2.0 * mag);
                sin.push(0.0);
            }
            TailMode::Signed => {
                let phase = rng.gen::<f64>() * 2.0 * PI;
                cos.push(2.0 * mag * phase.cos());
                sin.push(-2.0 * mag * phase.sin());
            }
        }
    }
    FourierSeries { dc, cos, sin }
}

/// True iff every retained harmonic satisfies `|a[k]| <= C / k^(p+1+eps)`.
pub fn check_decay(series: &FourierSeries, params: &SmoothnessParams) -> bool {
    let exponent = params.p + 1.0 + params.eps;
    (1..=series.bandwidth()).all(|k| {
        let limit = params.c / (k as f64).powf(exponent);
        // one part in 1e12 absorbs the rounding of the magnitude reconstruction
        series.harmonic_magnitude(k) <= limit * (1.0 + 1e-12)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_tone() -> FourierSeries {
        FourierSeries::new(0.0, vec![1.0], vec![0.0]).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(cos_tone().evaluate(0.0), 1.0);
        assert_eq!(FourierSeries::constant(3.5).evaluate(0.73), 3.5);
        assert!(cos_tone().evaluate(0.25).abs() < 1e-12);
    }

    #[test]
    fn evaluate_is_periodic() {
        let s = FourierSeries::new(0.3, vec![1.0, -0.2, 0.7], vec![0.5, 0.1, -0.9]).unwrap();
        assert!((s.evaluate(0.0) - s.evaluate(1.0)).abs() < 1e-12);
    }

    #[test]
    fn new_rejects_bad_shapes() {
        assert!(matches!(
            FourierSeries::new(0.0, vec![1.0], vec![]),
            Err(SignalError::LengthMismatch { .. })
        ));
        assert!(matches!(
            FourierSeries::new(0.0, vec![f64::NAN], vec![0.0]),
            Err(SignalError::NonFinite(1))
        ));
        assert!(matches!(SampledSignal::new(vec![]), Err(SignalError::Empty)));
    }

    #[test]
    fn project_single_tone() {
        let sig = cos_tone().sample(8);
        let p = project(&sig, 1).unwrap();
        assert!(p.dc().abs() < 1e-12);
        assert!((p.cos_coeffs()[0] - 1.0).abs() < 1e-12);
        assert!(p.sin_coeffs()[0].abs() < 1e-12);
    }

    #[test]
    fn project_constant() {
        let sig = SampledSignal::new(vec![5.0; 16]).unwrap();
        let p = project(&sig, 3).unwrap();
        assert!((p.dc() - 5.0).abs() < 1e-12);
        assert!(p.cos_coeffs().iter().chain(p.sin_coeffs()).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn project_rank_deficient() {
        let sig = SampledSignal::new(vec![1.0; 6]).unwrap();
        assert!(matches!(
            project(&sig, 3),
            Err(SignalError::RankDeficient { bandwidth: 3, samples: 6 })
        ));
        assert!(project(&sig, 2).is_ok());
    }

    #[test]
    fn sample_examples() {
        assert_eq!(FourierSeries::constant(2.0).sample(4).values(), &[2.0; 4]);
        let v = cos_tone().sample(4);
        for (got, want) in v.values().iter().zip([1.0, 0.0, -1.0, 0.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_matches_evaluate() {
        let s = FourierSeries::new(0.1, vec![0.4, -1.2], vec![0.3, 0.8]).unwrap();
        let v = s.sample(13);
        for (j, x) in v.values().iter().enumerate() {
            assert!((x - s.evaluate(j as f64 / 13.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn synth_nonneg_symmetric_formula() {
        let params = SmoothnessParams::new(1.0, 2.0, 0.0).unwrap();
        let s = synth_power_law(&params, TailMode::NonnegSymmetric, 3, 11);
        assert_eq!(s.cos_coeffs(), &[2.0, 0.5, 2.0 / 9.0]);
        assert_eq!(s.sin_coeffs(), &[0.0, 0.0, 0.0]);
        assert!((0.0..1.0).contains(&s.dc()));
    }

    #[test]
    fn synth_is_deterministic() {
        let params = SmoothnessParams::new(1.0, 1.5, 0.0).unwrap();
        let a = synth_power_law(&params, TailMode::Signed, 20, 99);
        let b = synth_power_law(&params, TailMode::Signed, 20, 99);
        assert_eq!(a, b);
        let c = synth_power_law(&params, TailMode::Signed, 20, 100);
        assert_ne!(a, c);
    }

    #[test]
    fn synth_signed_magnitudes() {
        let params = SmoothnessParams::new(1.0, 2.0, 0.0).unwrap();
        let s = synth_power_law(&params, TailMode::Signed, 5, 3);
        for k in 1..=5 {
            let (c, sn) = (s.cos_coeffs()[k - 1], s.sin_coeffs()[k - 1]);
            let mag = ((c / 2.0).powi(2) + (sn / 2.0).powi(2)).sqrt();
            assert!((mag - 1.0 / (k * k) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_checks() {
        let any = SmoothnessParams::new(1.0, 1.0, 0.0).unwrap();
        assert!(check_decay(&FourierSeries::constant(4.0), &any));

        let gen = SmoothnessParams::new(1.0, 2.0, 0.0).unwrap();
        let s = synth_power_law(&gen, TailMode::Signed, 30, 5);
        let check = SmoothnessParams::new(1.0, 0.5, 0.5).unwrap();
        assert!(check_decay(&s, &check));

        let big = FourierSeries::new(0.0, vec![10.0], vec![0.0]).unwrap();
        assert!(!check_decay(&big, &any));
    }

    #[test]
    fn smoothness_params_validation() {
        assert!(SmoothnessParams::new(0.0, 2.0, 0.0).is_err());
        assert!(SmoothnessParams::new(1.0, -1.0, 0.0).is_err());
        assert!(SmoothnessParams::new(1.0, 2.0, -0.1).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = FourierSeries::new(0.2, vec![0.5, -0.3], vec![1.1, 0.4]).unwrap();
        let h = 1e-6;
        for t in [0.0, 0.13, 0.5, 0.91] {
            let fd = (s.evaluate(t + h) - s.evaluate(t - h)) / (2.0 * h);
            assert!((fd - s.derivative(t)).abs() < 1e-6);
        }
    }
}
