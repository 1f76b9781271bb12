//! Loss-resistance Monte Carlo: memory-assisted sequential detection
//! versus plain coincidence detection over a lossy heralded link.
//!
//! Memory scheme: when the first photon arrives (probability `p_arrival`
//! per attempt) it is stored; the partner may then arrive in any of the
//! following `window_attempts` attempts, with the stored spin dephasing
//! over the realized wait. Coincidence scheme: both photons must arrive in
//! the same attempt. Rates are per attempt.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ProtocolError;
use crate::cavity::DecoherenceModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    /// Per-photon arrival probability per attempt.
    pub p_arrival: f64,
    /// Duration of one attempt.
    pub attempt_period: f64,
    /// How many attempts the stored spin waits for the partner photon.
    pub window_attempts: u32,
    /// Electron spin coherence time limiting the memory fidelity.
    pub t2e: f64,
}

impl LinkModel {
    fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.p_arrival > 0.0 && self.p_arrival <= 1.0) {
            return Err(ProtocolError::NonPositive { name: "p_arrival" });
        }
        if self.window_attempts == 0 {
            return Err(ProtocolError::NonPositive { name: "window_attempts" });
        }
        if !(self.t2e > 0.0) {
            return Err(ProtocolError::NonPositive { name: "t2e" });
        }
        if !(self.attempt_period >= 0.0) {
            return Err(ProtocolError::NonPositive { name: "attempt_period" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub memory_rate: f64,
    pub coincidence_rate: f64,
    /// Mean spin-dephasing fidelity factor over successful memory trials.
    pub mean_f_prime: Option<f64>,
}

/// Run `n_trials` of both schemes. Trials use independent, seed-derived
/// random streams, so results are reproducible for a given seed regardless
/// of worker count.
pub fn loss_resistance_mc(
    link: &LinkModel,
    n_trials: u64,
    seed: u64,
) -> Result<LinkRates, ProtocolError> {
    link.validate()?;
    if n_trials == 0 {
        return Err(ProtocolError::NonPositive { name: "n_trials" });
    }
    // fixed chunking with in-order accumulation keeps the float sums
    // bit-identical whatever the worker count
    const CHUNK: u64 = 8192;
    let n_chunks = n_trials.div_ceil(CHUNK);
    let chunk_sums: Vec<(u64, u64, f64)> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = (0u64, 0u64, 0.0f64);
            for trial in chunk * CHUNK..((chunk + 1) * CHUNK).min(n_trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial);
                let (mem, coin, f) = run_trial(link, &mut rng);
                acc = (acc.0 + mem, acc.1 + coin, acc.2 + f);
            }
            acc
        })
        .collect();
    let (mem, coin, f_sum) = chunk_sums
        .into_iter()
        .fold((0u64, 0u64, 0.0f64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(LinkRates {
        memory_rate: mem as f64 / n_trials as f64,
        coincidence_rate: coin as f64 / n_trials as f64,
        mean_f_prime: (mem > 0).then(|| f_sum / mem as f64),
    })
}

fn run_trial<R: Rng + ?Sized>(link: &LinkModel, rng: &mut R) -> (u64, u64, f64) {
    let p = link.p_arrival;
    // memory scheme: herald the first photon, then wait out the window,
    // counting the partner's arrival offset from the heralding attempt
    let mut mem = 0u64;
    let mut f_prime = 0.0;
    if rng.gen::<f64>() < p {
        for offset in 0..link.window_attempts {
            if rng.gen::<f64>() < p {
                mem = 1;
                let delta_t = offset as f64 * link.attempt_period;
                f_prime = DecoherenceModel { t2e: link.t2e, delta_t }.factor();
                break;
            }
        }
    }
    // coincidence scheme: both photons in one attempt
    let coin = u64::from(rng.gen::<f64>() < p && rng.gen::<f64>() < p);
    (mem, coin, f_prime)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_arrival_gives_unit_rates_and_no_dephasing() {
        let link =
            LinkModel { p_arrival: 1.0, attempt_period: 1.0, window_attempts: 5, t2e: 1.0 };
        let rates = loss_resistance_mc(&link, 1000, 7).unwrap();
        assert_eq!(rates.memory_rate, 1.0);
        assert_eq!(rates.coincidence_rate, 1.0);
        assert_eq!(rates.mean_f_prime, Some(1.0));
    }

    #[test]
    fn degenerate_window_reduces_to_coincidence() {
        let link =
            LinkModel { p_arrival: 0.3, attempt_period: 1.0, window_attempts: 1, t2e: 1e12 };
        let n = 200_000;
        let rates = loss_resistance_mc(&link, n, 11).unwrap();
        let expect = 0.09;
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((rates.memory_rate - expect).abs() < 4.0 * se, "{rates:?}");
        assert!((rates.coincidence_rate - expect).abs() < 4.0 * se, "{rates:?}");
    }

    #[test]
    fn rate_ratio_tracks_the_geometric_closed_form() {
        let p = 0.05;
        let w = 40u32;
        let link = LinkModel { p_arrival: p, attempt_period: 1.0, window_attempts: w, t2e: 1e12 };
        let rates = loss_resistance_mc(&link, 400_000, 13).unwrap();
        let ratio = rates.memory_rate / rates.coincidence_rate;
        let closed_form = (1.0 - (1.0 - p).powi(w as i32)) / p;
        assert!(
            (ratio - closed_form).abs() / closed_form < 0.1,
            "ratio {ratio} vs closed form {closed_form}"
        );
    }

    #[test]
    fn mean_fidelity_degrades_with_short_coherence() {
        let link =
            LinkModel { p_arrival: 0.2, attempt_period: 1.0, window_attempts: 30, t2e: 2.0 };
        let rates = loss_resistance_mc(&link, 100_000, 17).unwrap();
        let f = rates.mean_f_prime.unwrap();
        assert!(f > 0.5 && f < 1.0, "mean F' = {f}");
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let link =
            LinkModel { p_arrival: 0.1, attempt_period: 1.0, window_attempts: 10, t2e: 100.0 };
        let a = loss_resistance_mc(&link, 50_000, 99).unwrap();
        let b = loss_resistance_mc(&link, 50_000, 99).unwrap();
        assert_eq!(a, b);
        let c = loss_resistance_mc(&link, 50_000, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_models_are_rejected() {
        let good = LinkModel { p_arrival: 0.5, attempt_period: 1.0, window_attempts: 5, t2e: 1.0 };
        assert!(loss_resistance_mc(&LinkModel { p_arrival: 0.0, ..good }, 10, 0).is_err());
        assert!(loss_resistance_mc(&LinkModel { window_attempts: 0, ..good }, 10, 0).is_err());
        assert!(loss_resistance_mc(&good, 0, 0).is_err());
    }
}
