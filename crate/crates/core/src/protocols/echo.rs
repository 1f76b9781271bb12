//! Spin-echo simulation under quasi-static Gaussian dephasing.
//!
//! The monitored coherence is the off-diagonal element between |+⟩ and
//! |−⟩ of a spin prepared along the optical axis; the quasi-static noise
//! contributes a random phase e^{iδt} on the |+⟩ component with
//! δ ~ N(0, √2/T2*), giving the free-induction decay e^{−(t/T2*)²}.
//! The echo pulse is the two-photon 180° rotation about the optical axis,
//! which swaps |+⟩ and |−⟩ and therefore refocuses this dephasing exactly
//! when applied at the midpoint.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::ProtocolError;

/// Estimate the spin coherence after `total_time` of quasi-static
/// dephasing with 1/e time `t2_star`, optionally refocused by a midpoint
/// echo pulse. Returns |mean coherence| over `n_samples` noise draws.
pub fn spin_echo_sim<R: Rng + ?Sized>(
    t2_star: f64,
    total_time: f64,
    echo: bool,
    n_samples: u64,
    rng: &mut R,
) -> Result<f64, ProtocolError> {
    if !(t2_star > 0.0) {
        return Err(ProtocolError::NonPositive { name: "t2_star" });
    }
    if n_samples == 0 {
        return Err(ProtocolError::NonPositive { name: "n_samples" });
    }
    let sigma = std::f64::consts::SQRT_2 / t2_star;
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..n_samples {
        let delta = noise.sample(rng);
        acc += coherence_sample(delta, total_time, echo);
    }
    Ok((acc / n_samples as f64).norm())
}

/// Evolve one noise realization. Amplitudes are kept in the |±⟩ basis,
/// where the noise is diagonal and the echo pulse is a swap.
fn coherence_sample(delta: f64, total_time: f64, echo: bool) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // |↑⟩ = (|+⟩ + |−⟩)/√2
    let mut plus = Complex64::new(s, 0.0);
    let mut minus = Complex64::new(s, 0.0);
    if echo {
        let half = Complex64::from_polar(1.0, delta * total_time / 2.0);
        plus *= half;
        std::mem::swap(&mut plus, &mut minus);
        plus *= half;
    } else {
        plus *= Complex64::from_polar(1.0, delta * total_time);
    }
    2.0 * plus * minus.conj()
}
