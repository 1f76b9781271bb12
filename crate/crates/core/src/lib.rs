//! Simulation library for a quantum-dot-spin/microcavity Bell-state analyzer.
//!
//! The crate is organized around four building blocks:
//!
//! - [`qstate`]: a minimal pure-state engine over labeled two-level
//!   subsystems (photon polarization, photon output port, electron spin)
//!   with non-trace-preserving diagonal operations and projective
//!   measurement. Loss is carried as norm deficit.
//! - [`cavity`]: the input-output model of the single-sided spin-cavity —
//!   cold/hot reflection coefficients, the ±π/2 phase-condition solver, and
//!   the closed-form analyzer fidelity/efficiency metrics.
//! - [`gates`]: the photon-spin entangling gates in ideal (pure phase),
//!   lossy (reflection-operator) and beam-splitter (double-sided cavity)
//!   form, plus photon-induced spin rotations.
//! - [`protocols`]: end-to-end protocol simulations — type-I/II Bell-state
//!   analysis, state teleportation, entanglement swapping, spin-echo
//!   refocusing and a loss-resistance Monte Carlo for heralded links.

pub mod cavity;
pub mod gates;
pub mod protocols;
pub mod qstate;

pub use cavity::{
    CavityError, CavityParams, DecoherenceModel, FidelityPair, PhaseSolution, PhaseTarget,
    ReflectionPair, SweepGrid,
};
pub use gates::{GateMode, Polarization};
pub use protocols::{
    BellState, BsaOutcome, Correction, LinkModel, LinkRates, ProtocolRecord, SwapRecord,
    TeleportRecord,
};
pub use qstate::{Basis, MeasurementRecord, PureState, StateError, SubsystemKind, SubsystemLabel};
