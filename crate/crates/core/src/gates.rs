//! Photon-spin entangling gates and photon-induced spin rotations.
//!
//! Basis order for all gate coefficient quadruples is (R↑, R↓, L↑, L↓).
//! The ideal gate with phase Δφ is diag(1, e^{iΔφ}, e^{iΔφ}, 1); the lossy
//! gate applies the reflection operator diag(r0, rh, rh, r0) verbatim; the
//! entanglement-beam-splitter mode delegates to the port-split operation
//! of the state engine.

use num_complex::Complex64;

use crate::cavity::{wrap_phase, ReflectionPair};
use crate::qstate::{PureState, StateError, SubsystemLabel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMode {
    /// Pure phase-shift gate with tunable Δφ.
    Ideal { delta_phi: f64 },
    /// Reflection-operator gate with the cavity's complex coefficients.
    Lossy(ReflectionPair),
    /// Double-sided-cavity entanglement beam splitter.
    Ebs { t0: Complex64, rh: Complex64 },
}

impl GateMode {
    /// Ideal gate with the angle wrapped to (−π, π].
    pub fn ideal(delta_phi: f64) -> Self {
        GateMode::Ideal { delta_phi: wrap_phase(delta_phi) }
    }

    /// The π/2 phase-shift gate.
    pub fn ideal_quarter() -> Self {
        GateMode::Ideal { delta_phi: std::f64::consts::FRAC_PI_2 }
    }

    /// Idealized beam splitter with t0 = −1, rh = +1.
    pub fn ebs_ideal() -> Self {
        GateMode::Ebs { t0: Complex64::new(-1.0, 0.0), rh: Complex64::new(1.0, 0.0) }
    }

    pub fn is_ebs(&self) -> bool {
        matches!(self, GateMode::Ebs { .. })
    }
}

/// Apply the photon-spin gate to one photon of the register.
pub fn apply_gate(
    state: &PureState,
    photon: SubsystemLabel,
    spin: SubsystemLabel,
    mode: &GateMode,
) -> Result<PureState, StateError> {
    match mode {
        GateMode::Ideal { delta_phi } => {
            let one = Complex64::new(1.0, 0.0);
            let phase = Complex64::from_polar(1.0, *delta_phi);
            state.apply_diagonal_pair(photon, spin, [one, phase, phase, one])
        }
        GateMode::Lossy(pair) => {
            state.apply_diagonal_pair(photon, spin, [pair.r0, pair.rh, pair.rh, pair.r0])
        }
        GateMode::Ebs { t0, rh } => state.apply_port_split(photon, spin, *t0, *rh),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    R,
    L,
}

/// Spin rotation driven by reflecting definite-polarization photons: each
/// R photon multiplies the |↓⟩ amplitude by e^{iΔφ}, each L photon the
/// |↑⟩ amplitude. N same-polarization photons compose to NΔφ.
pub fn spin_rotation_by_photons(
    state: &PureState,
    spin: SubsystemLabel,
    photon_pols: &[Polarization],
    delta_phi: f64,
) -> Result<PureState, StateError> {
    let n_l = photon_pols.iter().filter(|p| **p == Polarization::L).count();
    let n_r = photon_pols.len() - n_l;
    let coeffs = [
        Complex64::from_polar(1.0, n_l as f64 * delta_phi),
        Complex64::from_polar(1.0, n_r as f64 * delta_phi),
    ];
    state.apply_diagonal_single(spin, coeffs)
}
