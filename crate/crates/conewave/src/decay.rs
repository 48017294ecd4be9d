//! Fitting and classification of local-energy decay histories.
//!
//! A recorded `(t, E_local(t))` series is classified as extinct (energy
//! drops to numerical zero and stays there), exponentially decaying,
//! polynomially decaying, or inconclusive. Fits run on log-transformed
//! data; competing models are compared on the same log-residual scale and a
//! winner is declared only when it is decisively better and its fitted rate
//! is stable across sub-windows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("series needs at least {need} samples, got {have}")]
    TooFewSamples { have: usize, need: usize },
    #[error("times and values differ in length: {times} vs {values}")]
    MismatchedLengths { times: usize, values: usize },
    #[error("times must increase strictly (violated at index {index})")]
    NonMonotoneTimes { index: usize },
    #[error("value at index {index} is negative or not finite: {value}")]
    BadValue { index: usize, value: f64 },
    #[error(
        "fit window [{t_lo}, {t_hi}] holds {have} samples but {need} are \
         needed; extend the observation time to about {suggested}"
    )]
    ExtendObservation {
        t_lo: f64,
        t_hi: f64,
        have: usize,
        need: usize,
        suggested: f64,
    },
    #[error("fit window [{t_lo}, {t_hi}] is degenerate for a {what} fit")]
    DegenerateWindow { t_lo: f64, t_hi: f64, what: String },
}

/// Descriptive tags carried with a series so the classifier can place its
/// fit window after the wave has crossed the observation sphere.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub label: String,
    /// Cone power `m` of the run that produced the series.
    pub cone_power: Option<f64>,
    /// Euclidean radius of the observation ball.
    pub observation_radius: Option<f64>,
    /// Outer edge of the initial support, in the geodesic coordinate.
    pub support_outer: Option<f64>,
}

/// A local-energy history: strictly increasing times, nonnegative values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub meta: SeriesMeta,
}

impl EnergySeries {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        meta: SeriesMeta,
    ) -> Result<Self, AnalysisError> {
        if times.len() != values.len() {
            return Err(AnalysisError::MismatchedLengths {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(AnalysisError::TooFewSamples {
                have: times.len(),
                need: 2,
            });
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(AnalysisError::NonMonotoneTimes { index: i + 1 });
            }
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(AnalysisError::BadValue { index: i, value: v });
            }
        }
        Ok(Self {
            times,
            values,
            meta,
        })
    }

    pub fn from_pairs(pairs: &[(f64, f64)], meta: SeriesMeta) -> Result<Self, AnalysisError> {
        Self::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
            meta,
        )
    }

    /// Time for the front, leaving the outer edge of the support at unit
    /// speed in the geodesic coordinate, to cross the observation sphere:
    /// `a^m - support_outer` (clamped at zero). `None` when the metadata is
    /// incomplete.
    pub fn transit_time(&self) -> Option<f64> {
        let m = self.meta.cone_power?;
        let a = self.meta.observation_radius?;
        let sup = self.meta.support_outer?;
        Some((a.powf(m) - sup).max(0.0))
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("validated nonempty")
    }

    /// `log10(max / min)` of the clamped values inside the window.
    pub fn decades_spanned(&self, window: (f64, f64), floor: f64) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (t, v) in self.times.iter().zip(&self.values) {
            if *t >= window.0 && *t <= window.1 {
                let v = v.max(floor);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if hi <= 0.0 || lo == f64::INFINITY {
            0.0
        } else {
            (hi / lo).log10()
        }
    }
}

/// Decay classes the laboratory distinguishes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// Energy falls below the extinction threshold and stays there.
    Extinct,
    /// `E(t) ~ prefactor * exp(-rate t)`.
    Exponential,
    /// `E(t) ~ prefactor * t^{-rate}`.
    Polynomial,
    /// No model wins decisively.
    Inconclusive,
}

/// A fitted decay law on a window, with goodness-of-fit on the log scale.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay rate: exponential rate, or the polynomial exponent.
    pub rate: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    /// Root-mean-square residual of log E against the fitted law.
    pub residual_rms: f64,
}

/// Thresholds steering [`classify`]; the defaults match the documented
/// decision procedure.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyPolicy {
    /// Fraction of the initial energy below which the signal counts as gone.
    pub extinction_threshold: f64,
    /// The winning model must beat the loser's residual RMS by this factor.
    pub residual_ratio: f64,
    /// Allowed relative wobble of the rate across three sub-windows.
    pub slope_tolerance: f64,
    /// The fit window opens this long after the transit time.
    pub window_offset: f64,
    /// The fit window closes at this fraction of the final time.
    pub window_end_fraction: f64,
    /// Minimum number of samples inside the window.
    pub min_points: usize,
    /// Values are clamped up to this before taking logarithms.
    pub floor: f64,
}

impl Default for ClassifyPolicy {
    fn default() -> Self {
        Self {
            extinction_threshold: 1e-8,
            residual_ratio: 2.0,
            slope_tolerance: 0.1,
            window_offset: 5.0,
            window_end_fraction: 0.9,
            min_points: 8,
            floor: 1e-30,
        }
    }
}

/// Plain least squares of `y` on `x`: `(slope, intercept, r^2, rms)`.
fn linear_lsq(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut ss_res = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let e = y - (intercept + slope * x);
        ss_res += e * e;
    }
    let r2 = if syy <= f64::EPSILON * nf * my.abs().max(1.0) {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Some((slope, intercept, r2, (ss_res / nf).sqrt()))
}

fn windowed(series: &EnergySeries, window: (f64, f64)) -> (Vec<f64>, Vec<f64>) {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for (t, v) in series.times.iter().zip(&series.values) {
        if *t >= window.0 && *t <= window.1 {
            ts.push(*t);
            vs.push(*v);
        }
    }
    (ts, vs)
}

/// Fit `log E = log C - rate * t` on the window.
pub fn fit_exponential(
    series: &EnergySeries,
    window: (f64, f64),
    floor: f64,
) -> Result<DecayFit, AnalysisError> {
    let (ts, vs) = windowed(series, window);
    let ys: Vec<f64> = vs.iter().map(|v| v.max(floor).ln()).collect();
    let (slope, intercept, r2, rms) =
        linear_lsq(&ts, &ys).ok_or_else(|| AnalysisError::DegenerateWindow {
            t_lo: window.0,
            t_hi: window.1,
            what: "exponential".into(),
        })?;
    Ok(DecayFit {
        model: DecayModel::Exponential,
        rate: -slope,
        prefactor: intercept.exp(),
        window,
        r_squared: r2,
        residual_rms: rms,
    })
}

/// Fit `log E = log C - rate * log t` on the window (samples at `t <= 0`
/// are ignored).
pub fn fit_polynomial(
    series: &EnergySeries,
    window: (f64, f64),
    floor: f64,
) -> Result<DecayFit, AnalysisError> {
    let (ts, vs) = windowed(series, window);
    let mut xs = Vec::with_capacity(ts.len());
    let mut ys = Vec::with_capacity(ts.len());
    for (t, v) in ts.iter().zip(&vs) {
        if *t > 0.0 {
            xs.push(t.ln());
            ys.push(v.max(floor).ln());
        }
    }
    let (slope, intercept, r2, rms) =
        linear_lsq(&xs, &ys).ok_or_else(|| AnalysisError::DegenerateWindow {
            t_lo: window.0,
            t_hi: window.1,
            what: "polynomial".into(),
        })?;
    Ok(DecayFit {
        model: DecayModel::Polynomial,
        rate: -slope,
        prefactor: intercept.exp(),
        window,
        r_squared: r2,
        residual_rms: rms,
    })
}

/// First sampled time after which every later value stays below
/// `threshold * E(0)`; `None` if the tail never settles.
pub fn extinction_time(series: &EnergySeries, threshold: f64) -> Option<f64> {
    let e0 = series.values[0];
    let cut = threshold * e0;
    let mut candidate: Option<f64> = None;
    for (t, v) in series.times.iter().zip(&series.values) {
        if *v < cut {
            if candidate.is_none() {
                candidate = Some(*t);
            }
        } else {
            candidate = None;
        }
    }
    candidate
}

fn stability(
    series: &EnergySeries,
    window: (f64, f64),
    floor: f64,
    full_rate: f64,
    poly: bool,
) -> f64 {
    if full_rate == 0.0 {
        return f64::INFINITY;
    }
    let (ts, _) = windowed(series, window);
    if ts.len() < 6 {
        return f64::INFINITY;
    }
    let mut worst = 0.0_f64;
    for k in 0..3 {
        let lo = ts[k * ts.len() / 3];
        let hi_idx = ((k + 1) * ts.len() / 3).min(ts.len()) - 1;
        let hi = ts[hi_idx];
        let sub = (lo, hi);
        let fit = if poly {
            fit_polynomial(series, sub, floor)
        } else {
            fit_exponential(series, sub, floor)
        };
        match fit {
            Ok(f) => worst = worst.max(((f.rate - full_rate) / full_rate).abs()),
            Err(_) => return f64::INFINITY,
        }
    }
    worst
}

/// Default fit window: opens `window_offset` after the transit time (when
/// known) and closes at `window_end_fraction` of the record.
pub fn default_window(series: &EnergySeries, policy: &ClassifyPolicy) -> (f64, f64) {
    let start = series.transit_time().unwrap_or(0.0).max(series.times[0]) + policy.window_offset;
    let end = policy.window_end_fraction * series.t_final();
    (start, end)
}

/// Classify a local-energy history on an explicit window.
///
/// Order of decisions: an initial energy at the floor, or a signal that
/// drops below the extinction threshold and stays there for at least the
/// last quarter of the window, is `Extinct`; otherwise exponential and
/// polynomial laws are fitted and one must win by the policy's residual
/// factor with a positive, sub-window-stable rate; if neither does the
/// verdict is `Inconclusive` (carrying the better fit's statistics).
pub fn classify_with_window(
    series: &EnergySeries,
    policy: &ClassifyPolicy,
    window: (f64, f64),
) -> Result<DecayFit, AnalysisError> {
    let e0 = series.values[0];
    if e0 <= policy.floor {
        return Ok(DecayFit {
            model: DecayModel::Extinct,
            rate: 0.0,
            prefactor: 0.0,
            window,
            r_squared: 1.0,
            residual_rms: 0.0,
        });
    }
    let (ts, _) = windowed(series, window);
    if ts.len() < policy.min_points {
        let span = window.1 - window.0;
        let need_span = if ts.len() >= 2 {
            span * policy.min_points as f64 / ts.len() as f64
        } else {
            span.max(1.0) * policy.min_points as f64
        };
        return Err(AnalysisError::ExtendObservation {
            t_lo: window.0,
            t_hi: window.1,
            have: ts.len(),
            need: policy.min_points,
            suggested: (window.0 + need_span) / policy.window_end_fraction,
        });
    }
    if let Some(tau) = extinction_time(series, policy.extinction_threshold) {
        if tau <= window.1 - 0.25 * (window.1 - window.0) {
            return Ok(DecayFit {
                model: DecayModel::Extinct,
                rate: 0.0,
                prefactor: 0.0,
                window,
                r_squared: 1.0,
                residual_rms: 0.0,
            });
        }
    }
    let fe = fit_exponential(series, window, policy.floor)?;
    let fp = fit_polynomial(series, window, policy.floor)?;
    let exp_stable = stability(series, window, policy.floor, fe.rate, false)
        <= policy.slope_tolerance;
    let poly_stable = stability(series, window, policy.floor, fp.rate, true)
        <= policy.slope_tolerance;
    let exp_ok = fe.rate > 0.0 && exp_stable;
    let poly_ok = fp.rate > 0.0 && poly_stable;
    if exp_ok && fp.residual_rms >= policy.residual_ratio * fe.residual_rms {
        return Ok(fe);
    }
    if poly_ok && fe.residual_rms >= policy.residual_ratio * fp.residual_rms {
        return Ok(fp);
    }
    let better = if fe.residual_rms <= fp.residual_rms { fe } else { fp };
    Ok(DecayFit {
        model: DecayModel::Inconclusive,
        ..better
    })
}

/// [`classify_with_window`] on the [`default_window`].
pub fn classify(
    series: &EnergySeries,
    policy: &ClassifyPolicy,
) -> Result<DecayFit, AnalysisError> {
    classify_with_window(series, policy, default_window(series, policy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn meta() -> SeriesMeta {
        SeriesMeta {
            label: "test".into(),
            cone_power: Some(1.0),
            observation_radius: Some(2.0),
            support_outer: Some(1.5),
        }
    }

    fn exp_series(c: f64, rate: f64, t_max: f64, n: usize) -> EnergySeries {
        let times: Vec<f64> = (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect();
        let values = times.iter().map(|t| c * (-rate * t).exp()).collect();
        EnergySeries::new(times, values, meta()).unwrap()
    }

    fn poly_series(c: f64, p: f64, t_max: f64, n: usize) -> EnergySeries {
        let times: Vec<f64> = (0..n)
            .map(|k| 0.5 + (t_max - 0.5) * k as f64 / (n - 1) as f64)
            .collect();
        let values = times.iter().map(|t| c * t.powf(-p)).collect();
        EnergySeries::new(times, values, meta()).unwrap()
    }

    #[test]
    fn series_validation_catches_malformed_input() {
        assert!(matches!(
            EnergySeries::new(vec![0.0], vec![1.0], meta()),
            Err(AnalysisError::TooFewSamples { .. })
        ));
        assert!(matches!(
            EnergySeries::new(vec![0.0, 1.0], vec![1.0], meta()),
            Err(AnalysisError::MismatchedLengths { .. })
        ));
        assert!(matches!(
            EnergySeries::new(vec![0.0, 0.0], vec![1.0, 1.0], meta()),
            Err(AnalysisError::NonMonotoneTimes { index: 1 })
        ));
        assert!(matches!(
            EnergySeries::new(vec![0.0, 1.0], vec![1.0, -2.0], meta()),
            Err(AnalysisError::BadValue { index: 1, .. })
        ));
    }

    #[test]
    fn transit_time_uses_the_geodesic_gap() {
        let s = exp_series(1.0, 0.1, 10.0, 20);
        assert_relative_eq!(s.transit_time().unwrap(), 0.5);
    }

    #[test]
    fn exponential_fit_recovers_exact_rates() {
        let s = exp_series(3.0, 0.35, 60.0, 200);
        let f = fit_exponential(&s, (5.0, 55.0), 1e-30).unwrap();
        assert_relative_eq!(f.rate, 0.35, max_relative = 1e-9);
        assert_relative_eq!(f.prefactor, 3.0, max_relative = 1e-9);
        assert!(f.r_squared > 1.0 - 1e-12);
        assert!(f.residual_rms < 1e-10);
    }

    #[test]
    fn polynomial_fit_recovers_exact_exponents() {
        let s = poly_series(2.0, 1.75, 80.0, 300);
        let f = fit_polynomial(&s, (1.0, 75.0), 1e-30).unwrap();
        assert_relative_eq!(f.rate, 1.75, max_relative = 1e-9);
        assert_relative_eq!(f.prefactor, 2.0, max_relative = 1e-9);
        assert!(f.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn noisy_rates_are_recovered_to_one_percent() {
        // 0.1 % multiplicative noise, deterministic seed.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut gauss = || {
            let u1: f64 = rng.random::<f64>().max(1e-12);
            let u2: f64 = rng.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut s = exp_series(1.0, 0.25, 80.0, 400);
        for v in &mut s.values {
            *v *= 1.0 + 1e-3 * gauss();
        }
        let f = fit_exponential(&s, (5.0, 75.0), 1e-30).unwrap();
        assert!(
            (f.rate - 0.25).abs() / 0.25 <= 0.01,
            "rate {} off by more than 1 %",
            f.rate
        );

        let mut p = poly_series(1.0, 2.0, 80.0, 400);
        for v in &mut p.values {
            *v *= 1.0 + 1e-3 * gauss();
        }
        let fp = fit_polynomial(&p, (1.0, 75.0), 1e-30).unwrap();
        assert!(
            (fp.rate - 2.0).abs() / 2.0 <= 0.01,
            "exponent {} off by more than 1 %",
            fp.rate
        );
    }

    #[test]
    fn constant_series_has_zero_rate_and_no_verdict() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let values = vec![2.5; 100];
        let s = EnergySeries::new(times, values, meta()).unwrap();
        let f = fit_exponential(&s, (5.0, 90.0), 1e-30).unwrap();
        assert!(f.rate.abs() < 1e-14);
        assert_eq!(f.r_squared, 1.0);
        let verdict = classify(&s, &ClassifyPolicy::default()).unwrap();
        assert_eq!(verdict.model, DecayModel::Inconclusive);
    }

    #[test]
    fn classifier_separates_the_three_regimes() {
        let policy = ClassifyPolicy::default();
        // Rate small enough that the tail stays above the extinction
        // threshold over the whole record.
        let e = classify(&exp_series(1.0, 0.15, 100.0, 400), &policy).unwrap();
        assert_eq!(e.model, DecayModel::Exponential);
        assert_relative_eq!(e.rate, 0.15, max_relative = 1e-6);

        let p = classify(&poly_series(1.0, 2.0, 100.0, 400), &policy).unwrap();
        assert_eq!(p.model, DecayModel::Polynomial);
        assert_relative_eq!(p.rate, 2.0, max_relative = 1e-6);

        // Drops to zero at t = 20 and stays: extinct.
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.5).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| if *t < 20.0 { 1.0 } else { 1e-12 })
            .collect();
        let s = EnergySeries::new(times, values, meta()).unwrap();
        let x = classify(&s, &policy).unwrap();
        assert_eq!(x.model, DecayModel::Extinct);
        assert_relative_eq!(extinction_time(&s, 1e-8).unwrap(), 20.0);
    }

    #[test]
    fn identically_zero_series_is_extinct() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let s = EnergySeries::new(times, vec![0.0; 50], meta()).unwrap();
        let f = classify(&s, &ClassifyPolicy::default()).unwrap();
        assert_eq!(f.model, DecayModel::Extinct);
    }

    #[test]
    fn short_windows_ask_for_longer_observation() {
        let s = exp_series(1.0, 0.3, 8.0, 12);
        let res = classify(&s, &ClassifyPolicy::default());
        match res {
            Err(AnalysisError::ExtendObservation { suggested, .. }) => {
                assert!(suggested > 8.0);
            }
            other => panic!("expected ExtendObservation, got {other:?}"),
        }
    }

    #[test]
    fn decimation_preserves_the_verdict_and_rate() {
        let policy = ClassifyPolicy::default();
        let full = exp_series(1.0, 0.3, 100.0, 400);
        let half = EnergySeries::new(
            full.times.iter().step_by(2).cloned().collect(),
            full.values.iter().step_by(2).cloned().collect(),
            meta(),
        )
        .unwrap();
        let a = classify(&full, &policy).unwrap();
        let b = classify(&half, &policy).unwrap();
        assert_eq!(a.model, b.model);
        assert_relative_eq!(a.rate, b.rate, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn rescaling_energy_units_changes_nothing(
            log_c in -3.0f64..3.0,
            rate in 0.05f64..0.15,
        ) {
            let policy = ClassifyPolicy::default();
            let base = exp_series(1.0, rate, 100.0, 300);
            let scaled = EnergySeries::new(
                base.times.clone(),
                base.values.iter().map(|v| v * 10f64.powf(log_c)).collect(),
                meta(),
            ).unwrap();
            let a = classify(&base, &policy).unwrap();
            let b = classify(&scaled, &policy).unwrap();
            prop_assert_eq!(a.model, b.model);
            prop_assert_eq!(a.model, DecayModel::Exponential);
            prop_assert!((a.rate - b.rate).abs() <= 1e-9 * a.rate.abs());
        }
    }
}
