//! Type-I analyzer (single-sided cavity): Bell-state analysis, state
//! teleportation and entanglement swapping with the phase-shift or
//! reflection-operator gate applied to both photons in sequence.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use super::{
    enumerate_branches, match_bell, prepare_bell_pair, render_outcomes, sample_branch, spin_plus,
    BellState, BsaOutcome, Correction, EnumBranch, ProtocolError, SwapRecord, TeleportRecord,
};
use crate::gates::{apply_gate, GateMode};
use crate::qstate::{Basis, PureState, SubsystemLabel};

fn pol(i: u8) -> SubsystemLabel {
    SubsystemLabel::polarization(i)
}

fn spin() -> SubsystemLabel {
    SubsystemLabel::spin(0)
}

fn check_mode(mode: &GateMode) -> Result<(), ProtocolError> {
    if mode.is_ebs() {
        return Err(ProtocolError::InvalidMode("type-I"));
    }
    Ok(())
}

fn key3(outcomes: &[u8]) -> usize {
    ((outcomes[0] as usize) << 2) | ((outcomes[1] as usize) << 1) | outcomes[2] as usize
}

struct Type1Tables {
    inference: [Option<BellState>; 8],
    correction: [Option<Correction>; 8],
}

/// Outcome tables derived once by brute force against the ideal gate.
fn tables() -> &'static Type1Tables {
    static TABLES: OnceLock<Type1Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        derive_tables().expect("ideal-mode type-I table derivation cannot fail")
    })
}

fn derive_tables() -> Result<Type1Tables, ProtocolError> {
    let mode = GateMode::ideal_quarter();
    let mut inference = [None; 8];
    for bell in BellState::ALL {
        let input = prepare_bell_pair(bell, 1, 2).tensor(&spin_plus(0))?;
        let (_, branches) = analyze(&input, pol(1), pol(2), spin(), &mode)?;
        for b in &branches {
            if b.dead || b.conditional <= 1e-9 {
                continue;
            }
            let k = key3(&b.outcomes);
            match inference[k] {
                None => inference[k] = Some(bell),
                Some(prev) if prev == bell => {}
                Some(_) => {
                    return Err(ProtocolError::AmbiguousInference(format!("{:?}", b.outcomes)))
                }
            }
        }
    }

    // two generic probes pin the correction uniquely per outcome
    let probes = [
        (Complex64::new(0.6, 0.0), Complex64::from_polar(0.8, 0.7)),
        (Complex64::new(1.0 / 3.0, 2.0 / 3.0), Complex64::new(2.0 / 3.0, 0.0)),
    ];
    let mut probe_runs = Vec::new();
    for (alpha, beta) in probes {
        let (_, branches) = teleport_core(alpha, beta, &mode)?;
        let target = qubit(3, alpha, beta)?;
        probe_runs.push((branches, target));
    }
    let mut correction = [None; 8];
    for (k, slot) in correction.iter_mut().enumerate() {
        let outcomes = [(k >> 2) as u8 & 1, (k >> 1) as u8 & 1, k as u8 & 1];
        let mut matched = None;
        for candidate in Correction::ALL {
            let mut ok = true;
            for (branches, target) in &probe_runs {
                let branch = branches
                    .iter()
                    .find(|b| !b.dead && b.outcomes == outcomes)
                    .ok_or_else(|| ProtocolError::UnknownOutcome(format!("{outcomes:?}")))?;
                let fixed = candidate.apply(&branch.state, pol(3))?;
                ok &= fixed.overlap(target)?.norm() > 1.0 - 1e-9;
            }
            if ok {
                if matched.is_some() {
                    return Err(ProtocolError::CorrectionDerivation(format!("{outcomes:?}")));
                }
                matched = Some(candidate);
            }
        }
        *slot =
            Some(matched.ok_or_else(|| ProtocolError::CorrectionDerivation(format!("{k}")))?);
    }
    Ok(Type1Tables { inference, correction })
}

fn qubit(index: u8, alpha: Complex64, beta: Complex64) -> Result<PureState, ProtocolError> {
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(ProtocolError::UnnormalizedInput(n2));
    }
    Ok(PureState::from_amplitudes(vec![pol(index)], vec![alpha, beta])?)
}

/// Gate both photons and enumerate (HV, HV, ±). Returns the post-gate
/// survival and the branches.
fn analyze(
    input: &PureState,
    photon_a: SubsystemLabel,
    photon_b: SubsystemLabel,
    spin_label: SubsystemLabel,
    mode: &GateMode,
) -> Result<(f64, Vec<EnumBranch>), ProtocolError> {
    check_mode(mode)?;
    let gated = apply_gate(&apply_gate(input, photon_a, spin_label, mode)?, photon_b, spin_label, mode)?;
    let survival = gated.squared_norm();
    let steps =
        [(photon_a, Basis::Hv), (photon_b, Basis::Hv), (spin_label, Basis::PlusMinus)];
    let branches = enumerate_branches(&gated, &steps)?;
    Ok((survival, branches))
}

fn steps_meta(
    photon_a: SubsystemLabel,
    photon_b: SubsystemLabel,
    spin_label: SubsystemLabel,
) -> [(SubsystemLabel, Basis); 3] {
    [(photon_a, Basis::Hv), (photon_b, Basis::Hv), (spin_label, Basis::PlusMinus)]
}

fn branch_to_outcome(
    branch: &EnumBranch,
    survival: f64,
    steps: &[(SubsystemLabel, Basis)],
) -> BsaOutcome {
    let t = tables();
    let alive = !branch.dead;
    let (inferred, correction) = if alive && branch.outcomes.len() == 3 {
        let k = key3(&branch.outcomes);
        (t.inference[k], t.correction[k])
    } else {
        (None, None)
    };
    let photon_results = branch
        .outcomes
        .iter()
        .take(2)
        .map(|&bit| (Basis::Hv, bit))
        .collect();
    BsaOutcome {
        photon_results,
        port_results: None,
        spin_result: branch.outcomes.get(2).copied(),
        inferred,
        correction,
        probability: survival * branch.conditional,
        survived: alive,
        outcome: render_outcomes(steps, &branch.outcomes, &[2]),
    }
}

/// Complete Bell-state analysis of two photons sharing the spin register,
/// enumerating every forced outcome branch.
pub fn bsa_type1(
    input: &PureState,
    photon_a: SubsystemLabel,
    photon_b: SubsystemLabel,
    spin_label: SubsystemLabel,
    mode: &GateMode,
) -> Result<Vec<BsaOutcome>, ProtocolError> {
    let (survival, branches) = analyze(input, photon_a, photon_b, spin_label, mode)?;
    let steps = steps_meta(photon_a, photon_b, spin_label);
    Ok(branches.iter().map(|b| branch_to_outcome(b, survival, &steps)).collect())
}

/// Sample one analyzer run; a lost photon yields a dead outcome.
pub fn bsa_type1_sampled<R: Rng + ?Sized>(
    input: &PureState,
    photon_a: SubsystemLabel,
    photon_b: SubsystemLabel,
    spin_label: SubsystemLabel,
    mode: &GateMode,
    rng: &mut R,
) -> Result<BsaOutcome, ProtocolError> {
    let (survival, branches) = analyze(input, photon_a, photon_b, spin_label, mode)?;
    let steps = steps_meta(photon_a, photon_b, spin_label);
    match sample_branch(&branches, survival, rng) {
        Some(b) => Ok(branch_to_outcome(b, survival, &steps)),
        None => Ok(BsaOutcome {
            photon_results: Vec::new(),
            port_results: None,
            spin_result: None,
            inferred: None,
            correction: None,
            probability: 1.0 - survival,
            survived: false,
            outcome: "lost".into(),
        }),
    }
}

/// Build the teleportation register (input qubit on photon 1, EPR pair
/// Ψ⁺ on photons 2–3, spin |+⟩), gate photons 1 and 2 and enumerate.
fn teleport_core(
    alpha: Complex64,
    beta: Complex64,
    mode: &GateMode,
) -> Result<(f64, Vec<EnumBranch>), ProtocolError> {
    let input = qubit(1, alpha, beta)?
        .tensor(&prepare_bell_pair(BellState::PsiPlus, 2, 3))?
        .tensor(&spin_plus(0))?;
    analyze(&input, pol(1), pol(2), spin(), mode)
}

fn teleport_record(
    branch: &EnumBranch,
    survival: f64,
    alpha: Complex64,
    beta: Complex64,
) -> Result<TeleportRecord, ProtocolError> {
    let steps = steps_meta(pol(1), pol(2), spin());
    let outcome = render_outcomes(&steps, &branch.outcomes, &[2]);
    if branch.dead {
        return Ok(TeleportRecord {
            outcome,
            probability: 0.0,
            fidelity: 0.0,
            correction: None,
            survived: false,
        });
    }
    let k = key3(&branch.outcomes);
    let correction =
        tables().correction[k].ok_or_else(|| ProtocolError::UnknownOutcome(outcome.clone()))?;
    let fixed = correction.apply(&branch.state, pol(3))?;
    let fidelity = fixed.overlap(&qubit(3, alpha, beta)?)?.norm();
    Ok(TeleportRecord {
        outcome,
        probability: survival * branch.conditional,
        fidelity,
        correction: Some(correction),
        survived: true,
    })
}

/// State teleportation through the type-I analyzer, all branches.
pub fn teleport_type1(
    alpha: Complex64,
    beta: Complex64,
    mode: &GateMode,
) -> Result<Vec<TeleportRecord>, ProtocolError> {
    let (survival, branches) = teleport_core(alpha, beta, mode)?;
    branches.iter().map(|b| teleport_record(b, survival, alpha, beta)).collect()
}

/// Sample one teleportation run.
pub fn teleport_type1_sampled<R: Rng + ?Sized>(
    alpha: Complex64,
    beta: Complex64,
    mode: &GateMode,
    rng: &mut R,
) -> Result<TeleportRecord, ProtocolError> {
    let (survival, branches) = teleport_core(alpha, beta, mode)?;
    match sample_branch(&branches, survival, rng) {
        Some(b) => teleport_record(b, survival, alpha, beta),
        None => Ok(TeleportRecord {
            outcome: "lost".into(),
            probability: 1.0 - survival,
            fidelity: 0.0,
            correction: None,
            survived: false,
        }),
    }
}

/// Entanglement swapping: EPR pairs Ψ⁺ on photons (1,2) and (3,4), photons
/// 1 and 3 analyzed. The surviving photons' Bell state is identified by
/// overlap match; the record notes whether they were already disentangled
/// from the spin before the spin measurement.
pub fn swap_type1(mode: &GateMode) -> Result<Vec<SwapRecord>, ProtocolError> {
    let (survival, staged) = swap_core(mode)?;
    Ok(staged.iter().map(|s| swap_record(s, survival)).collect())
}

/// Sample one swapping run.
pub fn swap_type1_sampled<R: Rng + ?Sized>(
    mode: &GateMode,
    rng: &mut R,
) -> Result<SwapRecord, ProtocolError> {
    let (survival, staged) = swap_core(mode)?;
    let branches: Vec<EnumBranch> = staged
        .iter()
        .map(|s| EnumBranch {
            outcomes: s.branch.outcomes.clone(),
            conditional: s.branch.conditional,
            state: s.branch.state.clone(),
            dead: s.branch.dead,
        })
        .collect();
    match sample_branch(&branches, survival, rng) {
        Some(chosen) => {
            let staged_branch = staged
                .iter()
                .find(|s| s.branch.outcomes == chosen.outcomes)
                .expect("sampled branch comes from the staged set");
            Ok(swap_record(staged_branch, survival))
        }
        None => Ok(SwapRecord {
            outcome: "lost".into(),
            probability: 1.0 - survival,
            bell: None,
            fidelity: 0.0,
            photons_pure_before_spin: None,
            survived: false,
        }),
    }
}

struct StagedBranch {
    branch: EnumBranch,
    pure_before_spin: Option<bool>,
}

/// Two-stage enumeration: photon measurements first (so the photon-spin
/// entanglement left before the spin readout can be recorded), then the
/// spin.
fn swap_core(mode: &GateMode) -> Result<(f64, Vec<StagedBranch>), ProtocolError> {
    check_mode(mode)?;
    let input = prepare_bell_pair(BellState::PsiPlus, 1, 2)
        .tensor(&prepare_bell_pair(BellState::PsiPlus, 3, 4))?
        .tensor(&spin_plus(0))?;
    let gated =
        apply_gate(&apply_gate(&input, pol(1), spin(), mode)?, pol(3), spin(), mode)?;
    let survival = gated.squared_norm();
    let photon_steps = [(pol(1), Basis::Hv), (pol(3), Basis::Hv)];
    let spin_steps = [(spin(), Basis::PlusMinus)];
    let mut out = Vec::new();
    for a in enumerate_branches(&gated, &photon_steps)? {
        if a.dead {
            out.push(StagedBranch { branch: a, pure_before_spin: None });
            continue;
        }
        let pure = super::disentangled_from_spin(&a.state, spin());
        for b in enumerate_branches(&a.state, &spin_steps)? {
            let mut outcomes = a.outcomes.clone();
            outcomes.extend_from_slice(&b.outcomes);
            out.push(StagedBranch {
                branch: EnumBranch {
                    outcomes,
                    conditional: a.conditional * b.conditional,
                    state: b.state,
                    dead: b.dead,
                },
                pure_before_spin: Some(pure),
            });
        }
    }
    out.sort_by(|x, y| x.branch.outcomes.cmp(&y.branch.outcomes));
    Ok((survival, out))
}

fn swap_record(staged: &StagedBranch, survival: f64) -> SwapRecord {
    let steps = steps_meta(pol(1), pol(3), spin());
    let outcome = render_outcomes(&steps, &staged.branch.outcomes, &[2]);
    if staged.branch.dead {
        return SwapRecord {
            outcome,
            probability: 0.0,
            bell: None,
            fidelity: 0.0,
            photons_pure_before_spin: staged.pure_before_spin,
            survived: false,
        };
    }
    let (bell, fidelity) = match_bell(&staged.branch.state, 2, 4);
    SwapRecord {
        outcome,
        probability: survival * staged.branch.conditional,
        bell,
        fidelity,
        photons_pure_before_spin: staged.pure_before_spin,
        survived: true,
    }
}
