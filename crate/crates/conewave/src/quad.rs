//! One-dimensional quadrature: adaptive Simpson integration and a cumulative
//! integral memoized on a uniform radius grid with cubic Hermite lookup.

use std::sync::RwLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("integrand returned a non-finite value near x = {x}")]
    NonFinite { x: f64 },
    #[error("adaptive refinement hit depth {depth} before tolerance {tol:e} on [{a}, {b}]")]
    DepthExceeded { a: f64, b: f64, tol: f64, depth: usize },
    #[error("cached integral queried at {x} below its origin {origin}")]
    BelowOrigin { x: f64, origin: f64 },
}

/// Adaptive Simpson quadrature with Richardson correction, absolute
/// tolerance `tol`. Intended for smooth integrands.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    for (x, v) in [(a, fa), (m, fm), (b, fb)] {
        if !v.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
    }
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Trapezoid rule over nodal `values` on the uniform grid
/// `x0, x0 + dx, ...`, restricted to `[lo, hi]`; the integrand is
/// interpolated linearly at the two clipped ends. Exact for piecewise
/// linear data.
pub fn clipped_trapezoid_uniform(values: &[f64], x0: f64, dx: f64, lo: f64, hi: f64) -> f64 {
    assert!(values.len() >= 2 && dx > 0.0);
    let x_end = x0 + dx * (values.len() - 1) as f64;
    let lo = lo.max(x0);
    let hi = hi.min(x_end);
    if hi <= lo {
        return 0.0;
    }
    let value_at = |x: f64| -> f64 {
        let pos = ((x - x0) / dx).clamp(0.0, (values.len() - 1) as f64);
        let i = (pos.floor() as usize).min(values.len() - 2);
        let frac = pos - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    };
    let i_lo = ((lo - x0) / dx).ceil() as usize;
    let i_hi = ((hi - x0) / dx).floor() as usize;
    if i_lo > i_hi {
        return 0.5 * (value_at(lo) + value_at(hi)) * (hi - lo);
    }
    let span = &values[i_lo..=i_hi];
    let mut acc = if span.len() >= 2 {
        let inner: f64 = span[1..span.len() - 1].iter().sum();
        (inner + 0.5 * (span[0] + span[span.len() - 1])) * dx
    } else {
        0.0
    };
    let x_lo_node = x0 + dx * i_lo as f64;
    if lo < x_lo_node {
        acc += 0.5 * (value_at(lo) + values[i_lo]) * (x_lo_node - lo);
    }
    let x_hi_node = x0 + dx * i_hi as f64;
    if hi > x_hi_node {
        acc += 0.5 * (values[i_hi] + value_at(hi)) * (hi - x_hi_node);
    }
    acc
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    for (x, v) in [(lm, flm), (rm, frm)] {
        if !v.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
    }
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadError::DepthExceeded { a, b, tol, depth: 60 });
    }
    let half_tol = 0.5 * tol;
    let l = simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)?;
    Ok(l + r)
}

/// Cumulative integral H(x) = int_origin^x f, memoized at uniform nodes and
/// interpolated between them by a cubic Hermite patch whose endpoint slopes
/// are the exact integrand values. Node values are accumulated with adaptive
/// Simpson per segment. Lookups are safe under concurrent use; the table
/// extends itself on demand behind a write lock.
pub struct CachedIntegral {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    origin: f64,
    step: f64,
    tol: f64,
    table: RwLock<Table>,
}

struct Table {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CachedIntegral {
    pub fn new<F>(f: F, origin: f64, step: f64, tol: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert!(step > 0.0 && step.is_finite());
        let s0 = f(origin);
        Self {
            f: Box::new(f),
            origin,
            step,
            tol,
            table: RwLock::new(Table {
                values: vec![0.0],
                slopes: vec![s0],
            }),
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// H(x) for x >= origin.
    pub fn eval(&self, x: f64) -> Result<f64, QuadError> {
        // Absorb rounding noise from radii reconstructed as |unit * r|.
        let slack = 1e-9 * self.origin.abs().max(1.0);
        if x < self.origin - slack {
            return Err(QuadError::BelowOrigin { x, origin: self.origin });
        }
        let x = x.max(self.origin);
        let pos = (x - self.origin) / self.step;
        let seg = pos.floor() as usize;
        {
            let table = self.table.read().unwrap();
            if seg + 1 < table.values.len() {
                return Ok(self.hermite(&table, seg, x));
            }
        }
        self.extend_to(seg + 1)?;
        let table = self.table.read().unwrap();
        Ok(self.hermite(&table, seg, x))
    }

    /// Pre-populate nodes covering [origin, x]; useful before parallel reads.
    pub fn warm(&self, x: f64) -> Result<(), QuadError> {
        if x <= self.origin {
            return Ok(());
        }
        let seg = ((x - self.origin) / self.step).floor() as usize;
        self.extend_to(seg + 1)
    }

    fn extend_to(&self, last_node: usize) -> Result<(), QuadError> {
        let mut table = self.table.write().unwrap();
        while table.values.len() <= last_node {
            let k = table.values.len();
            let a = self.origin + (k - 1) as f64 * self.step;
            let b = self.origin + k as f64 * self.step;
            let inc = adaptive_simpson(&self.f, a, b, self.tol)?;
            let prev = *table.values.last().unwrap();
            table.values.push(prev + inc);
            table.slopes.push((self.f)(b));
        }
        Ok(())
    }

    fn hermite(&self, table: &Table, seg: usize, x: f64) -> f64 {
        let x0 = self.origin + seg as f64 * self.step;
        let s = (x - x0) / self.step;
        let (v0, v1) = (table.values[seg], table.values[seg + 1]);
        let (d0, d1) = (table.slopes[seg] * self.step, table.slopes[seg + 1] * self.step);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * v0
            + (s3 - 2.0 * s2 + s) * d0
            + (-2.0 * s3 + 3.0 * s2) * v1
            + (s3 - s2) * d1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn clipped_trapezoid_is_exact_for_linear_data() {
        // values = x on [0, 10], integral of x over [a, b] = (b^2 - a^2)/2.
        let values: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        for (lo, hi, want) in [
            (2.0, 7.0, (49.0 - 4.0) / 2.0),
            (2.05, 7.35, (7.35f64.powi(2) - 2.05f64.powi(2)) / 2.0),
            (3.14, 3.86, (3.86f64.powi(2) - 3.14f64.powi(2)) / 2.0),
            // Both ends in one cell.
            (4.01, 4.07, (4.07f64.powi(2) - 4.01f64.powi(2)) / 2.0),
            (-5.0, 20.0, 50.0),
        ] {
            assert_relative_eq!(
                clipped_trapezoid_uniform(&values, 0.0, 0.1, lo, hi),
                want,
                max_relative = 1e-12
            );
        }
        assert_eq!(clipped_trapezoid_uniform(&values, 0.0, 0.1, 7.0, 2.0), 0.0);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let f = |x: f64| 3.0 * x * x * x - x + 2.0;
        let val = adaptive_simpson(&f, -1.0, 2.0, 1e-12).unwrap();
        // Antiderivative 3x^4/4 - x^2/2 + 2x.
        let exact = (3.0 * 16.0 / 4.0 - 2.0 + 4.0) - (3.0 / 4.0 - 0.5 - 2.0);
        assert_relative_eq!(val, exact, max_relative = 1e-14);
    }

    #[test]
    fn simpson_meets_tolerance_on_oscillatory_integrand() {
        let f = |x: f64| (5.0 * x).sin() * (-x).exp();
        let val = adaptive_simpson(&f, 0.0, 3.0, 1e-10).unwrap();
        // Closed form of int sin(5x) e^{-x}: (-e^{-x}(sin 5x + 5 cos 5x))/26.
        let anti = |x: f64| -(-x).exp() * ((5.0 * x).sin() + 5.0 * (5.0 * x).cos()) / 26.0;
        assert!((val - (anti(3.0) - anti(0.0))).abs() < 1e-9);
    }

    #[test]
    fn simpson_rejects_non_finite_integrands() {
        let f = |x: f64| 1.0 / x;
        assert!(matches!(
            adaptive_simpson(&f, -1.0, 1.0, 1e-10),
            Err(QuadError::NonFinite { .. })
        ));
    }

    #[test]
    fn cached_integral_matches_closed_form_log() {
        let cache = CachedIntegral::new(|x: f64| 1.0 / x, 1.0, 1.0 / 128.0, 1e-12);
        for &x in &[1.0, 1.37, 2.0, 5.5, 9.99] {
            assert_relative_eq!(cache.eval(x).unwrap(), x.ln(), epsilon = 1e-10);
        }
    }

    #[test]
    fn cached_integral_rejects_queries_below_origin() {
        let cache = CachedIntegral::new(|_| 1.0, 2.0, 0.01, 1e-10);
        assert!(matches!(
            cache.eval(1.0),
            Err(QuadError::BelowOrigin { .. })
        ));
    }

    #[test]
    fn cached_integral_is_consistent_under_concurrent_reads() {
        use std::sync::Arc;
        let cache = Arc::new(CachedIntegral::new(|x: f64| x.cos(), 0.0, 0.02, 1e-12));
        let handles: Vec<_> = (0..8)
            .map(|k| {
                let cache = Arc::clone(&cache);
                std::thread::spawn(move || {
                    for i in 0..200 {
                        let x = (k * 200 + i) as f64 * 0.01;
                        let got = cache.eval(x).unwrap();
                        assert!((got - x.sin()).abs() < 1e-9);
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }
}
