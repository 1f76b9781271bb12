//! Type-II analyzer (double-sided cavity): the entanglement beam splitter
//! sends each photon to a transmitted or reflected port conditioned on the
//! joint polarization-spin state. Port discrimination separates the Ψ
//! class (different ports) from the Φ class (same port); polarization and
//! spin readout finish the identification. Measurement order is ports,
//! then polarizations, then the spin.

use num_complex::Complex64;
use rand::Rng;

use super::{
    disentangled_from_spin, enumerate_branches, match_bell, prepare_bell_pair, render_outcomes,
    sample_branch, spin_plus, BellState, BsaOutcome, Correction, EnumBranch, ProtocolError,
    SwapRecord, TeleportRecord,
};
use crate::gates::{apply_gate, GateMode};
use crate::qstate::{Basis, PureState, SubsystemLabel};

fn pol(i: u8) -> SubsystemLabel {
    SubsystemLabel::polarization(i)
}

fn port(i: u8) -> SubsystemLabel {
    SubsystemLabel::port(i)
}

fn spin() -> SubsystemLabel {
    SubsystemLabel::spin(0)
}

fn key5(outcomes: &[u8]) -> usize {
    outcomes.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)
}

/// Measurement sequence for two analyzed photons: ports, polarizations,
/// spin.
fn steps_meta(a: u8, b: u8) -> [(SubsystemLabel, Basis); 5] {
    [
        (port(a), Basis::TrPort),
        (port(b), Basis::TrPort),
        (pol(a), Basis::Hv),
        (pol(b), Basis::Hv),
        (spin(), Basis::PlusMinus),
    ]
}

struct Type2Tables {
    inference: [Option<BellState>; 32],
    correction: [Option<Correction>; 32],
}

/// Derive the outcome tables by brute force with the given beam-splitter
/// coefficients. Keys that never occur (a vanishing coefficient) stay
/// unassigned.
fn derive_tables(t0: Complex64, rh: Complex64) -> Result<Type2Tables, ProtocolError> {
    let mode = GateMode::Ebs { t0, rh };
    let mut inference = [None; 32];
    for bell in BellState::ALL {
        let input = prepare_bell_pair(bell, 1, 2).tensor(&spin_plus(0))?;
        let (_, branches) = analyze(&input, 1, 2, &mode)?;
        for b in &branches {
            if b.dead || b.conditional <= 1e-9 {
                continue;
            }
            let k = key5(&b.outcomes);
            match inference[k] {
                None => inference[k] = Some(bell),
                Some(prev) if prev == bell => {}
                Some(_) => {
                    return Err(ProtocolError::AmbiguousInference(format!("{:?}", b.outcomes)))
                }
            }
        }
    }

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
    let mut correction = [None; 32];
    for (k, slot) in correction.iter_mut().enumerate() {
        let outcomes: Vec<u8> = (0..5).map(|i| ((k >> (4 - i)) & 1) as u8).collect();
        let mut matched = None;
        'candidates: for candidate in Correction::ALL {
            for (branches, target) in &probe_runs {
                let Some(branch) = branches.iter().find(|b| !b.dead && b.outcomes == outcomes)
                else {
                    continue 'candidates;
                };
                let fixed = candidate.apply(&branch.state, pol(3))?;
                if fixed.overlap(target)?.norm() <= 1.0 - 1e-9 {
                    continue 'candidates;
                }
            }
            if matched.is_some() {
                return Err(ProtocolError::CorrectionDerivation(format!("{outcomes:?}")));
            }
            matched = Some(candidate);
        }
        *slot = matched;
    }
    Ok(Type2Tables { inference, correction })
}

fn qubit(index: u8, alpha: Complex64, beta: Complex64) -> Result<PureState, ProtocolError> {
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(ProtocolError::UnnormalizedInput(n2));
    }
    Ok(PureState::from_amplitudes(vec![pol(index)], vec![alpha, beta])?)
}

/// Send both photons through the beam splitter and enumerate the five
/// measurement steps.
fn analyze(
    input: &PureState,
    a: u8,
    b: u8,
    mode: &GateMode,
) -> Result<(f64, Vec<EnumBranch>), ProtocolError> {
    let split = apply_gate(&apply_gate(input, pol(a), spin(), mode)?, pol(b), spin(), mode)?;
    let survival = split.squared_norm();
    let branches = enumerate_branches(&split, &steps_meta(a, b))?;
    Ok((survival, branches))
}

fn ebs_mode(t0: Complex64, rh: Complex64) -> GateMode {
    GateMode::Ebs { t0, rh }
}

fn branch_to_outcome(
    branch: &EnumBranch,
    survival: f64,
    tables: &Type2Tables,
    steps: &[(SubsystemLabel, Basis)],
) -> BsaOutcome {
    let alive = !branch.dead;
    let (inferred, correction) = if alive && branch.outcomes.len() == 5 {
        let k = key5(&branch.outcomes);
        (tables.inference[k], tables.correction[k])
    } else {
        (None, None)
    };
    BsaOutcome {
        photon_results: branch.outcomes.iter().skip(2).take(2).map(|&b| (Basis::Hv, b)).collect(),
        port_results: if branch.outcomes.len() >= 2 {
            Some(branch.outcomes[..2].to_vec())
        } else {
            None
        },
        spin_result: branch.outcomes.get(4).copied(),
        inferred,
        correction,
        probability: survival * branch.conditional,
        survived: alive,
        outcome: render_outcomes(steps, &branch.outcomes, &[2, 4]),
    }
}

/// Complete type-II Bell-state analysis over all forced branches.
pub fn bsa_type2(
    input: &PureState,
    photon_a: SubsystemLabel,
    photon_b: SubsystemLabel,
    t0: Complex64,
    rh: Complex64,
) -> Result<Vec<BsaOutcome>, ProtocolError> {
    let tables = derive_tables(t0, rh)?;
    let (survival, branches) = analyze(input, photon_a.index, photon_b.index, &ebs_mode(t0, rh))?;
    let steps = steps_meta(photon_a.index, photon_b.index);
    Ok(branches.iter().map(|b| branch_to_outcome(b, survival, &tables, &steps)).collect())
}

/// Sample one type-II analyzer run.
pub fn bsa_type2_sampled<R: Rng + ?Sized>(
    input: &PureState,
    photon_a: SubsystemLabel,
    photon_b: SubsystemLabel,
    t0: Complex64,
    rh: Complex64,
    rng: &mut R,
) -> Result<BsaOutcome, ProtocolError> {
    let tables = derive_tables(t0, rh)?;
    let (survival, branches) = analyze(input, photon_a.index, photon_b.index, &ebs_mode(t0, rh))?;
    let steps = steps_meta(photon_a.index, photon_b.index);
    match sample_branch(&branches, survival, rng) {
        Some(b) => Ok(branch_to_outcome(b, survival, &tables, &steps)),
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

fn teleport_core(
    alpha: Complex64,
    beta: Complex64,
    mode: &GateMode,
) -> Result<(f64, Vec<EnumBranch>), ProtocolError> {
    let input = qubit(1, alpha, beta)?
        .tensor(&prepare_bell_pair(BellState::PsiPlus, 2, 3))?
        .tensor(&spin_plus(0))?;
    analyze(&input, 1, 2, mode)
}

/// State teleportation through the type-II analyzer.
pub fn teleport_type2(
    alpha: Complex64,
    beta: Complex64,
    t0: Complex64,
    rh: Complex64,
) -> Result<Vec<TeleportRecord>, ProtocolError> {
    let tables = derive_tables(t0, rh)?;
    let (survival, branches) = teleport_core(alpha, beta, &ebs_mode(t0, rh))?;
    branches
        .iter()
        .map(|b| teleport_record(b, survival, alpha, beta, &tables))
        .collect()
}

/// Sample one type-II teleportation run.
pub fn teleport_type2_sampled<R: Rng + ?Sized>(
    alpha: Complex64,
    beta: Complex64,
    t0: Complex64,
    rh: Complex64,
    rng: &mut R,
) -> Result<TeleportRecord, ProtocolError> {
    let tables = derive_tables(t0, rh)?;
    let (survival, branches) = teleport_core(alpha, beta, &ebs_mode(t0, rh))?;
    match sample_branch(&branches, survival, rng) {
        Some(b) => teleport_record(b, survival, alpha, beta, &tables),
        None => Ok(TeleportRecord {
            outcome: "lost".into(),
            probability: 1.0 - survival,
            fidelity: 0.0,
            correction: None,
            survived: false,
        }),
    }
}

fn teleport_record(
    branch: &EnumBranch,
    survival: f64,
    alpha: Complex64,
    beta: Complex64,
    tables: &Type2Tables,
) -> Result<TeleportRecord, ProtocolError> {
    let steps = steps_meta(1, 2);
    let outcome = render_outcomes(&steps, &branch.outcomes, &[2, 4]);
    if branch.dead {
        return Ok(TeleportRecord {
            outcome,
            probability: 0.0,
            fidelity: 0.0,
            correction: None,
            survived: false,
        });
    }
    let correction = tables.correction[key5(&branch.outcomes)]
        .ok_or_else(|| ProtocolError::UnknownOutcome(outcome.clone()))?;
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

struct StagedBranch {
    branch: EnumBranch,
    pure_before_spin: Option<bool>,
}

fn swap_core(mode: &GateMode) -> Result<(f64, Vec<StagedBranch>), ProtocolError> {
    let input = prepare_bell_pair(BellState::PsiPlus, 1, 2)
        .tensor(&prepare_bell_pair(BellState::PsiPlus, 3, 4))?
        .tensor(&spin_plus(0))?;
    let split = apply_gate(&apply_gate(&input, pol(1), spin(), mode)?, pol(3), spin(), mode)?;
    let survival = split.squared_norm();
    let photon_steps = [
        (port(1), Basis::TrPort),
        (port(3), Basis::TrPort),
        (pol(1), Basis::Hv),
        (pol(3), Basis::Hv),
    ];
    let spin_steps = [(spin(), Basis::PlusMinus)];
    let mut out = Vec::new();
    for a in enumerate_branches(&split, &photon_steps)? {
        if a.dead {
            out.push(StagedBranch { branch: a, pure_before_spin: None });
            continue;
        }
        let pure = disentangled_from_spin(&a.state, spin());
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
    let steps = steps_meta(1, 3);
    let outcome = render_outcomes(&steps, &staged.branch.outcomes, &[2, 4]);
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

/// Entanglement swapping through the type-II analyzer (photons 1 and 3 of
/// two Ψ⁺ pairs).
pub fn swap_type2(t0: Complex64, rh: Complex64) -> Result<Vec<SwapRecord>, ProtocolError> {
    let (survival, staged) = swap_core(&ebs_mode(t0, rh))?;
    Ok(staged.iter().map(|s| swap_record(s, survival)).collect())
}

/// Sample one type-II swapping run.
pub fn swap_type2_sampled<R: Rng + ?Sized>(
    t0: Complex64,
    rh: Complex64,
    rng: &mut R,
) -> Result<SwapRecord, ProtocolError> {
    let (survival, staged) = swap_core(&ebs_mode(t0, rh))?;
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
