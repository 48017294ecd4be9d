//! Decay-law fitting and classification on synthetic histories.
//!
//! Shows the three-way classifier on the model families it is calibrated
//! for: a clean exponential, a clean power law (with and without noise),
//! and a history that dies outright.  Also demonstrates the two invariances
//! the classifier guarantees: rescaling the energy axis and decimating the
//! sampling grid change neither the verdict nor the fitted rate.
//!
//! Run with: `cargo run --release --example decay_fitting`

use conewave::decay::{
    classify, classify_with_window, ClassifyPolicy, DecayModel, EnergySeries, SeriesMeta,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn meta(label: &str) -> SeriesMeta {
    SeriesMeta {
        label: label.into(),
        cone_power: None,
        observation_radius: None,
        support_outer: None,
    }
}

fn series(label: &str, f: impl Fn(f64) -> f64, t_max: f64, n: usize) -> EnergySeries {
    let times: Vec<f64> = (0..n).map(|k| 0.5 + t_max * k as f64 / (n - 1) as f64).collect();
    let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
    EnergySeries::new(times, values, meta(label)).expect("valid synthetic series")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let policy = ClassifyPolicy::default();

    // --- The three model families -------------------------------------------
    let exp = series("exponential", |t| 3.0 * (-0.8 * t).exp(), 20.0, 400);
    let fit = classify(&exp, &policy)?;
    println!(
        "clean exponential:   {:?}, rate {:.4} (true 0.8), r^2 = {:.5}",
        fit.model, fit.rate, fit.r_squared
    );
    assert_eq!(fit.model, DecayModel::Exponential);

    let poly = series("polynomial", |t| 5.0 * t.powf(-2.5), 20.0, 400);
    let fit = classify(&poly, &policy)?;
    println!(
        "clean power law:     {:?}, exponent {:.4} (true 2.5), r^2 = {:.5}",
        fit.model, fit.rate, fit.r_squared
    );
    assert_eq!(fit.model, DecayModel::Polynomial);

    let dead = series("extinct", |t| if t < 4.0 { 1.0 - 0.24 * t } else { 1e-14 }, 20.0, 400);
    let fit = classify(&dead, &policy)?;
    println!("signal that dies:    {:?}", fit.model);
    assert_eq!(fit.model, DecayModel::Extinct);

    // --- Multiplicative noise -------------------------------------------------
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noisy = series(
        "noisy exponential",
        |t| 3.0 * (-0.8 * t).exp(),
        20.0,
        400,
    );
    let values: Vec<f64> = noisy
        .values
        .iter()
        .map(|v| v * (1.0 + 0.001 * rng.random_range(-1.0..1.0)))
        .collect();
    let noisy = EnergySeries::new(noisy.times.clone(), values, meta("noisy"))?;
    let fit = classify(&noisy, &policy)?;
    println!(
        "0.1% noise:          {:?}, rate {:.4} (rate error {:.2}%)",
        fit.model,
        fit.rate,
        100.0 * (fit.rate - 0.8).abs() / 0.8
    );
    assert_eq!(fit.model, DecayModel::Exponential);

    // --- Invariances ------------------------------------------------------------
    let window = (8.0, 18.0);
    let base = classify_with_window(&exp, &policy, window)?;

    let scaled_values: Vec<f64> = exp.values.iter().map(|v| v * 1e6).collect();
    let scaled = EnergySeries::new(exp.times.clone(), scaled_values, meta("scaled"))?;
    let fit_scaled = classify_with_window(&scaled, &policy, window)?;
    println!(
        "scaled by 1e6:       {:?}, rate {:.6} vs {:.6}",
        fit_scaled.model, fit_scaled.rate, base.rate
    );
    assert_eq!(fit_scaled.model, base.model);
    assert!((fit_scaled.rate - base.rate).abs() < 1e-9);

    let dec_times: Vec<f64> = exp.times.iter().step_by(3).cloned().collect();
    let dec_values: Vec<f64> = exp.values.iter().step_by(3).cloned().collect();
    let decimated = EnergySeries::new(dec_times, dec_values, meta("decimated"))?;
    let fit_dec = classify_with_window(&decimated, &policy, window)?;
    println!(
        "every 3rd sample:    {:?}, rate {:.6} vs {:.6}",
        fit_dec.model, fit_dec.rate, base.rate
    );
    assert_eq!(fit_dec.model, base.model);
    assert!((fit_dec.rate - base.rate).abs() < 1e-6);

    println!();
    println!("verdicts and rates are stable under scaling and decimation");
    Ok(())
}
