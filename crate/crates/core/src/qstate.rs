//! Pure-state engine over a register of labeled two-level subsystems.
//!
//! Conventions, fixed once and asserted in tests:
//!
//! - basis 0 of each subsystem is |R⟩ (polarization), |t⟩ (transmitted
//!   port) or |↑⟩ (spin); basis 1 is |L⟩, |r⟩ or |↓⟩;
//! - the first label of a register is the most significant bit of the
//!   amplitude index;
//! - |R⟩ = (|H⟩ + i|V⟩)/√2 and |L⟩ = (|H⟩ − i|V⟩)/√2;
//! - |±⟩ = (|↑⟩ ± |↓⟩)/√2.
//!
//! States are immutable values: every operation returns a new state. The
//! squared norm of a register is ≤ 1 and the deficit is the accumulated
//! loss probability, so lossy gates need no density-matrix machinery.
//! Measured subsystems are removed from the register.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Tolerance on normalization checks and probability bookkeeping.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubsystemKind {
    PhotonPolarization,
    PhotonPort,
    Spin,
}

/// Identifies one two-level subsystem in a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubsystemLabel {
    pub kind: SubsystemKind,
    pub index: u8,
}

impl SubsystemLabel {
    pub const fn polarization(index: u8) -> Self {
        Self { kind: SubsystemKind::PhotonPolarization, index }
    }

    pub const fn port(index: u8) -> Self {
        Self { kind: SubsystemKind::PhotonPort, index }
    }

    pub const fn spin(index: u8) -> Self {
        Self { kind: SubsystemKind::Spin, index }
    }
}

impl fmt::Display for SubsystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            SubsystemKind::PhotonPolarization => "pol",
            SubsystemKind::PhotonPort => "port",
            SubsystemKind::Spin => "spin",
        };
        write!(f, "{kind}{}", self.index)
    }
}

/// Measurement bases. `Hv` and `Rl` apply to photon polarization,
/// `PlusMinus` to spins, `TrPort` to port subsystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Hv,
    PlusMinus,
    Rl,
    TrPort,
}

impl Basis {
    fn supports(self, kind: SubsystemKind) -> bool {
        matches!(
            (self, kind),
            (Basis::Hv | Basis::Rl, SubsystemKind::PhotonPolarization)
                | (Basis::PlusMinus, SubsystemKind::Spin)
                | (Basis::TrPort, SubsystemKind::PhotonPort)
        )
    }

    /// Bra row vector of the given outcome, expressed over the
    /// computational pair (basis 0, basis 1) of the subsystem.
    pub(crate) fn bra(self, outcome: u8) -> [Complex64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re, im| Complex64::new(re, im);
        match (self, outcome) {
            (Basis::Rl | Basis::TrPort, 0) => [c(1.0, 0.0), c(0.0, 0.0)],
            (Basis::Rl | Basis::TrPort, _) => [c(0.0, 0.0), c(1.0, 0.0)],
            // ⟨H| and ⟨V| from |R⟩ = (|H⟩+i|V⟩)/√2, |L⟩ = (|H⟩−i|V⟩)/√2
            (Basis::Hv, 0) => [c(s, 0.0), c(s, 0.0)],
            (Basis::Hv, _) => [c(0.0, s), c(0.0, -s)],
            (Basis::PlusMinus, 0) => [c(s, 0.0), c(s, 0.0)],
            (Basis::PlusMinus, _) => [c(s, 0.0), c(-s, 0.0)],
        }
    }

    /// Symbol pair used in outcome strings, e.g. `('H', 'V')`.
    pub fn symbols(self) -> (char, char) {
        match self {
            Basis::Hv => ('H', 'V'),
            Basis::PlusMinus => ('+', '-'),
            Basis::Rl => ('R', 'L'),
            Basis::TrPort => ('t', 'r'),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub label: SubsystemLabel,
    pub basis: Basis,
    pub outcome: u8,
    /// Branch squared norm divided by the pre-measurement squared norm.
    pub probability: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("duplicate label {0} in register")]
    DuplicateLabel(SubsystemLabel),
    #[error("amplitudes for {0} are not normalized (squared norm {1})")]
    NotNormalized(SubsystemLabel, f64),
    #[error("label {0} is not present in the register")]
    LabelMissing(SubsystemLabel),
    #[error("label {label} has kind {found:?}, expected {expected:?}")]
    KindMismatch {
        label: SubsystemLabel,
        expected: SubsystemKind,
        found: SubsystemKind,
    },
    #[error("photon {0} already has a port label")]
    PortAlreadySplit(SubsystemLabel),
    #[error("cannot measure a register with zero squared norm")]
    ZeroNorm,
    #[error("basis {basis:?} is not defined for subsystem kind {kind:?}")]
    BasisMismatch { basis: Basis, kind: SubsystemKind },
    #[error("amplitude vector of length {len} does not match {n} subsystems")]
    BadLength { len: usize, n: usize },
    #[error("squared norm {0} exceeds 1")]
    NormExceedsOne(f64),
    #[error("registers do not span the same set of subsystems")]
    RegisterMismatch,
}

/// Complex amplitude vector over a register of labeled two-level
/// subsystems. Squared norm ≤ 1; the deficit is the probability that a
/// photon was lost along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    labels: Vec<SubsystemLabel>,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Tensor product of normalized single-subsystem states.
    pub fn product(parts: &[(SubsystemLabel, [Complex64; 2])]) -> Result<Self, StateError> {
        let mut labels = Vec::with_capacity(parts.len());
        for (label, pair) in parts {
            if labels.contains(label) {
                return Err(StateError::DuplicateLabel(*label));
            }
            let n2 = pair[0].norm_sqr() + pair[1].norm_sqr();
            if (n2 - 1.0).abs() > NORM_TOL {
                return Err(StateError::NotNormalized(*label, n2));
            }
            labels.push(*label);
        }
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for (_, pair) in parts {
            let mut next = Vec::with_capacity(amps.len() * 2);
            for a in &amps {
                next.push(a * pair[0]);
                next.push(a * pair[1]);
            }
            amps = next;
        }
        Ok(Self { labels, amps })
    }

    /// Build a register directly from an amplitude vector of length 2^n,
    /// first label most significant.
    pub fn from_amplitudes(
        labels: Vec<SubsystemLabel>,
        amps: Vec<Complex64>,
    ) -> Result<Self, StateError> {
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(StateError::DuplicateLabel(*l));
            }
        }
        if amps.len() != 1usize << labels.len() {
            return Err(StateError::BadLength { len: amps.len(), n: labels.len() });
        }
        let state = Self { labels, amps };
        let n2 = state.squared_norm();
        if n2 > 1.0 + NORM_TOL {
            return Err(StateError::NormExceedsOne(n2));
        }
        Ok(state)
    }

    pub fn labels(&self) -> &[SubsystemLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn contains(&self, label: SubsystemLabel) -> bool {
        self.labels.contains(&label)
    }

    pub fn squared_norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Survival probability: alias for the squared norm.
    pub fn survival(&self) -> f64 {
        self.squared_norm()
    }

    fn bit_position(&self, label: SubsystemLabel) -> Result<usize, StateError> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .map(|i| self.labels.len() - 1 - i)
            .ok_or(StateError::LabelMissing(label))
    }

    fn expect_kind(&self, label: SubsystemLabel, kind: SubsystemKind) -> Result<(), StateError> {
        if label.kind != kind {
            return Err(StateError::KindMismatch { label, expected: kind, found: label.kind });
        }
        Ok(())
    }

    /// Multiply every joint-basis amplitude of (photon, spin) by the
    /// matching coefficient, given in the order (R↑, R↓, L↑, L↓).
    pub fn apply_diagonal_pair(
        &self,
        photon: SubsystemLabel,
        spin: SubsystemLabel,
        coeffs: [Complex64; 4],
    ) -> Result<Self, StateError> {
        self.expect_kind(photon, SubsystemKind::PhotonPolarization)?;
        self.expect_kind(spin, SubsystemKind::Spin)?;
        let pp = self.bit_position(photon)?;
        let sp = self.bit_position(spin)?;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let pb = (i >> pp) & 1;
                let sb = (i >> sp) & 1;
                a * coeffs[(pb << 1) | sb]
            })
            .collect();
        Ok(Self { labels: self.labels.clone(), amps })
    }

    /// Multiply the two amplitudes of one subsystem by `coeffs`.
    pub fn apply_diagonal_single(
        &self,
        label: SubsystemLabel,
        coeffs: [Complex64; 2],
    ) -> Result<Self, StateError> {
        let p = self.bit_position(label)?;
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| a * coeffs[(i >> p) & 1])
            .collect();
        Ok(Self { labels: self.labels.clone(), amps })
    }

    /// Apply an arbitrary 2x2 matrix to one subsystem (row-major,
    /// computational basis).
    pub fn apply_single(
        &self,
        label: SubsystemLabel,
        m: [[Complex64; 2]; 2],
    ) -> Result<Self, StateError> {
        let p = self.bit_position(label)?;
        let mut amps = self.amps.clone();
        let step = 1usize << p;
        for i in 0..self.amps.len() {
            if (i >> p) & 1 == 0 {
                let a0 = self.amps[i];
                let a1 = self.amps[i | step];
                amps[i] = m[0][0] * a0 + m[0][1] * a1;
                amps[i | step] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(Self { labels: self.labels.clone(), amps })
    }

    /// Entanglement-beam-splitter action: the register gains a port label
    /// for `photon` and the joint (polarization, spin) components map as
    /// |R↑⟩ → t0|R↑,t⟩, |L↓⟩ → t0|L↓,t⟩, |R↓⟩ → rh|R↓,r⟩, |L↑⟩ → rh|L↑,r⟩.
    pub fn apply_port_split(
        &self,
        photon: SubsystemLabel,
        spin: SubsystemLabel,
        t0: Complex64,
        rh: Complex64,
    ) -> Result<Self, StateError> {
        self.expect_kind(photon, SubsystemKind::PhotonPolarization)?;
        self.expect_kind(spin, SubsystemKind::Spin)?;
        let port = SubsystemLabel::port(photon.index);
        if self.contains(port) {
            return Err(StateError::PortAlreadySplit(photon));
        }
        let pp = self.bit_position(photon)?;
        let sp = self.bit_position(spin)?;
        let mut labels = self.labels.clone();
        labels.push(port);
        // port label appended last: old index i maps to (i << 1) | port_bit
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() * 2];
        for (i, a) in self.amps.iter().enumerate() {
            let pb = (i >> pp) & 1;
            let sb = (i >> sp) & 1;
            if pb == sb {
                amps[i << 1] = a * t0; // transmitted
            } else {
                amps[(i << 1) | 1] = a * rh; // reflected
            }
        }
        Ok(Self { labels, amps })
    }

    fn branch(
        &self,
        label: SubsystemLabel,
        basis: Basis,
        outcome: u8,
    ) -> Result<(f64, PureState), StateError> {
        if !basis.supports(label.kind) {
            return Err(StateError::BasisMismatch { basis, kind: label.kind });
        }
        let total = self.squared_norm();
        if total <= 0.0 {
            return Err(StateError::ZeroNorm);
        }
        let p = self.bit_position(label)?;
        let bra = basis.bra(outcome);
        let step = 1usize << p;
        let mut labels = self.labels.clone();
        labels.retain(|l| *l != label);
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len() / 2];
        for i in 0..self.amps.len() {
            if (i >> p) & 1 == 0 {
                // collapse bit p out of the index
                let high = (i >> (p + 1)) << p;
                let low = i & (step - 1);
                amps[high | low] =
                    bra[0].conj() * self.amps[i] + bra[1].conj() * self.amps[i | step];
            }
        }
        let branch_norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let prob = branch_norm / total;
        if branch_norm > 0.0 {
            let inv = 1.0 / branch_norm.sqrt();
            for a in &mut amps {
                *a *= inv;
            }
        }
        Ok((prob, PureState { labels, amps }))
    }

    /// Project onto a forced measurement outcome. The measured subsystem is
    /// removed and the survivor renormalized; a zero-probability branch
    /// yields a zero state.
    pub fn measure_forced(
        &self,
        label: SubsystemLabel,
        basis: Basis,
        outcome: u8,
    ) -> Result<(MeasurementRecord, PureState), StateError> {
        let (probability, state) = self.branch(label, basis, outcome)?;
        Ok((MeasurementRecord { label, basis, outcome, probability }, state))
    }

    /// Sample a measurement outcome with the Born probabilities.
    pub fn measure_sampled<R: Rng + ?Sized>(
        &self,
        label: SubsystemLabel,
        basis: Basis,
        rng: &mut R,
    ) -> Result<(MeasurementRecord, PureState), StateError> {
        let (p0, state0) = self.branch(label, basis, 0)?;
        if rng.gen::<f64>() < p0 {
            return Ok((MeasurementRecord { label, basis, outcome: 0, probability: p0 }, state0));
        }
        let (p1, state1) = self.branch(label, basis, 1)?;
        Ok((MeasurementRecord { label, basis, outcome: 1, probability: p1 }, state1))
    }

    /// Reorder the register's tensor factors to `order` (a permutation of
    /// the current labels).
    pub fn reordered(&self, order: &[SubsystemLabel]) -> Result<Self, StateError> {
        if order.len() != self.labels.len() {
            return Err(StateError::RegisterMismatch);
        }
        let mut positions = Vec::with_capacity(order.len());
        for l in order {
            positions.push(self.bit_position(*l)?);
        }
        let n = order.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (j, slot) in amps.iter_mut().enumerate() {
            // bit k (msb-first) of the new index j selects old bit positions[k]
            let mut i = 0usize;
            for (k, p) in positions.iter().enumerate() {
                if (j >> (n - 1 - k)) & 1 == 1 {
                    i |= 1 << p;
                }
            }
            *slot = self.amps[i];
        }
        Ok(Self { labels: order.to_vec(), amps })
    }

    /// Inner product ⟨self|other⟩ after normalizing both registers and
    /// reordering `other` to this register's label order.
    pub fn overlap(&self, other: &Self) -> Result<Complex64, StateError> {
        let mut mine = self.labels.clone();
        let mut theirs = other.labels.clone();
        mine.sort_by_key(label_sort_key);
        theirs.sort_by_key(label_sort_key);
        if mine != theirs {
            return Err(StateError::RegisterMismatch);
        }
        let other = other.reordered(&self.labels)?;
        let (na, nb) = (self.squared_norm(), other.squared_norm());
        if na <= 0.0 || nb <= 0.0 {
            return Err(StateError::ZeroNorm);
        }
        let dot: Complex64 = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(dot / (na.sqrt() * nb.sqrt()))
    }

    /// Tensor product of two registers over disjoint labels.
    pub fn tensor(&self, other: &Self) -> Result<Self, StateError> {
        for l in &other.labels {
            if self.contains(*l) {
                return Err(StateError::DuplicateLabel(*l));
            }
        }
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { labels, amps })
    }
}

fn label_sort_key(l: &SubsystemLabel) -> (u8, u8) {
    let k = match l.kind {
        SubsystemKind::PhotonPolarization => 0,
        SubsystemKind::PhotonPort => 1,
        SubsystemKind::Spin => 2,
    };
    (k, l.index)
}
