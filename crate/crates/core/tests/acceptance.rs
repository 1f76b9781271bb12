//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `--nocapture` to see them) and bounded in runtime.
//!
//! Brute-force oracles here go through the state-vector engine and are
//! compared against the closed-form cavity metrics, so the two routes
//! check each other.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spincavity_core::cavity::{point_branches, CavityParams, DecoherenceModel, ReflectionPair};
use spincavity_core::gates::{apply_gate, GateMode};
use spincavity_core::protocols::{
    self, bsa_type1, bsa_type2, loss_resistance_mc, prepare_bell_pair, spin_echo_sim, swap_type1,
    swap_type2, teleport_type1, teleport_type2, to_json_lines, BellState, Correction, LinkModel,
    ProtocolRecord,
};
use spincavity_core::qstate::{PureState, SubsystemLabel};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pol(i: u8) -> SubsystemLabel {
    SubsystemLabel::polarization(i)
}

fn spin() -> SubsystemLabel {
    SubsystemLabel::spin(0)
}

fn spin_plus_state() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::product(&[(spin(), [c(s, 0.0), c(s, 0.0)])]).unwrap()
}

fn spin_minus_state() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::product(&[(spin(), [c(s, 0.0), c(-s, 0.0)])]).unwrap()
}

fn random_qubit(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    loop {
        let alpha = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let beta = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if n > 1e-2 {
            return (alpha / n, beta / n);
        }
    }
}

/// Brute-force survival of analyzing one Bell state: squared norm after
/// the reflection gate hits both photons of `bell ⊗ |+⟩`.
fn survival_brute_force(bell: BellState, pair: &ReflectionPair) -> f64 {
    let input = prepare_bell_pair(bell, 1, 2).tensor(&spin_plus_state()).unwrap();
    let mode = GateMode::Lossy(*pair);
    let out = apply_gate(&apply_gate(&input, pol(1), spin(), &mode).unwrap(), pol(2), spin(), &mode)
        .unwrap();
    out.squared_norm()
}

// ---------------------------------------------------------------------
// 1. Operating-point reproduction
// ---------------------------------------------------------------------

struct OperatingPoint {
    g_norm: f64,
    ks_over_k: f64,
    f_target: f64,
    eta_target: f64,
    eta_tol_abs: Option<f64>,
    eta_tol_rel: Option<f64>,
}

const POINTS: [OperatingPoint; 4] = [
    OperatingPoint {
        g_norm: 0.086,
        ks_over_k: 1.1,
        f_target: 1.00,
        eta_target: 0.0003,
        eta_tol_abs: None,
        eta_tol_rel: Some(0.5),
    },
    OperatingPoint {
        g_norm: 0.24,
        ks_over_k: 1.3,
        f_target: 1.00,
        eta_target: 0.014,
        eta_tol_abs: None,
        eta_tol_rel: Some(0.25),
    },
    OperatingPoint {
        g_norm: 0.51,
        ks_over_k: 1e-6,
        f_target: 0.98,
        eta_target: 0.699,
        eta_tol_abs: Some(0.05),
        eta_tol_rel: None,
    },
    OperatingPoint {
        g_norm: 1.0,
        ks_over_k: 0.7,
        f_target: 0.98,
        eta_target: 0.356,
        eta_tol_abs: Some(0.05),
        eta_tol_rel: None,
    },
];

/// The published operating points pin the otherwise-unstated trion decay:
/// all four are reproduced with γ = 0.1κ (see README), while the library
/// default γ = 0.01(κ+κs) misses points 1–3 badly. The sensitivity table
/// over γ conventions is printed alongside the checks.
#[test]
fn criterion_1_operating_points() {
    let started = Instant::now();

    println!("gamma sensitivity of the four operating points (max-fidelity branch):");
    println!("  gamma            pt1 (0.086, 1.1)     pt2 (0.24, 1.3)      pt3 (0.51, ~0)       pt4 (1.0, 0.7)");
    let mut conventions: Vec<(String, Vec<Option<(f64, f64)>>)> = Vec::new();
    for ratio in [0.001, 0.01, 0.05] {
        let row = POINTS
            .iter()
            .map(|p| {
                let params = CavityParams::normalized(p.g_norm, p.ks_over_k, ratio);
                point_branches(&params).iter().map(|b| (b.f_phi, b.eta)).fold(
                    None,
                    |acc: Option<(f64, f64)>, b| match acc {
                        Some(best) if best.0 >= b.0 => Some(best),
                        _ => Some(b),
                    },
                )
            })
            .collect();
        conventions.push((format!("{ratio}(k+ks)"), row));
    }
    let recovered: Vec<Option<(f64, f64)>> = POINTS
        .iter()
        .map(|p| {
            let params =
                CavityParams::normalized(p.g_norm, p.ks_over_k, 0.0).with_gamma_over_kappa(0.1);
            point_branches(&params)
                .iter()
                .map(|b| (b.f_phi, b.eta))
                .fold(None, |acc: Option<(f64, f64)>, b| match acc {
                    Some(best) if best.0 >= b.0 => Some(best),
                    _ => Some(b),
                })
        })
        .collect();
    conventions.push(("0.1*kappa".to_string(), recovered.clone()));
    for (name, row) in &conventions {
        let cells: Vec<String> = row
            .iter()
            .map(|v| match v {
                Some((f, eta)) => format!("F={f:.4} eta={eta:.5}"),
                None => "no solution".to_string(),
            })
            .collect();
        println!("  {:<14} {:<20} {:<20} {:<20} {:<20}", name, cells[0], cells[1], cells[2], cells[3]);
    }

    for (point, found) in POINTS.iter().zip(&recovered) {
        let (f_phi, eta) = found.unwrap_or_else(|| {
            panic!(
                "criterion 1: FAIL (no phase solution at g={}, ks/k={})",
                point.g_norm, point.ks_over_k
            )
        });
        assert!(
            (f_phi - point.f_target).abs() <= 0.01,
            "criterion 1: FAIL (F_phi {} vs {} at g={})",
            f_phi,
            point.f_target,
            point.g_norm
        );
        let eta_ok = match (point.eta_tol_abs, point.eta_tol_rel) {
            (Some(abs), _) => (eta - point.eta_target).abs() <= abs,
            (_, Some(rel)) => (eta - point.eta_target).abs() <= rel * point.eta_target,
            _ => unreachable!(),
        };
        assert!(
            eta_ok,
            "criterion 1: FAIL (eta {} vs {} at g={})",
            eta, point.eta_target, point.g_norm
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 1: FAIL (runtime {elapsed:.1} s exceeds 10 s)");
    println!("criterion 1 (operating-point reproduction): PASS ({elapsed:.2} s)");
}

// ---------------------------------------------------------------------
// 2. Side-leakage threshold
// ---------------------------------------------------------------------

#[test]
fn criterion_2_leakage_threshold() {
    let started = Instant::now();
    let couplings: Vec<f64> = (0..50).map(|i| 0.01 + i as f64 * (3.0 - 0.01) / 49.0).collect();

    for &g in &couplings {
        let params = CavityParams::normalized(g, 1.4, 0.01);
        let branches = point_branches(&params);
        assert!(
            branches.is_empty(),
            "criterion 2: FAIL (solution found at g={g}, ks/k=1.4: {branches:?})"
        );
    }
    let any_at_1_2 = couplings.iter().any(|&g| {
        let params = CavityParams::normalized(g, 1.2, 0.01);
        !point_branches(&params).is_empty()
    });
    assert!(any_at_1_2, "criterion 2: FAIL (no solutions anywhere at ks/k=1.2)");

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "criterion 2: FAIL (runtime {elapsed:.1} s exceeds 30 s)");
    println!("criterion 2 (ks > 1.3k threshold): PASS ({elapsed:.2} s)");
}

// ---------------------------------------------------------------------
// 3. Closed forms vs. state-vector brute force
// ---------------------------------------------------------------------

/// Draw parameter sets until one has a phase solution; return the
/// reflection pair at the highest-efficiency branch.
fn random_solution_pair(rng: &mut ChaCha8Rng) -> ReflectionPair {
    loop {
        let g = rng.gen_range(0.2..3.0);
        let ks = rng.gen_range(0.0..1.0);
        let gamma = rng.gen_range(0.001..0.05);
        let params = CavityParams::normalized(g, ks, gamma);
        let branches = point_branches(&params);
        if let Some(best) =
            branches.iter().max_by(|a, b| a.eta.partial_cmp(&b.eta).unwrap())
        {
            return params.reflection(best.omega_prime);
        }
    }
}

#[test]
fn criterion_3_oracles() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);

    for trial in 0..100 {
        let pair = random_solution_pair(&mut rng);

        // Efficiency: closed form equals the Bell-ensemble mean survival.
        let mean_survival = BellState::ALL
            .iter()
            .map(|&b| survival_brute_force(b, &pair))
            .sum::<f64>()
            / 4.0;
        let eta = pair.bsa_efficiency();
        assert!(
            (eta - mean_survival).abs() < 1e-12,
            "criterion 3: FAIL (trial {trial}: eta {eta} vs brute force {mean_survival})"
        );

        // Fidelity: the closed form equals the conditional post-correction
        // overlap of the branches polluted by the Φ channel — the spin-+
        // branches of a basis-state teleportation. The spin-− branches
        // stay exact.
        let f_phi = pair.bsa_fidelity().f_phi;
        let records =
            teleport_type1(c(1.0, 0.0), c(0.0, 0.0), &GateMode::Lossy(pair)).unwrap();
        for r in records.iter().filter(|r| r.survived) {
            let expected = if r.outcome.ends_with('+') { f_phi } else { 1.0 };
            assert!(
                (r.fidelity - expected).abs() < 1e-9,
                "criterion 3: FAIL (trial {trial}, branch {}: fidelity {} vs Eq-(8) value {expected})",
                r.outcome,
                r.fidelity
            );
        }

        // Consistency tie-in: the plain overlap of the normalized
        // post-gate Φ⁺ state with the ideal target relates to f_phi as
        // 1/sqrt(2 − f_phi²).
        let input =
            prepare_bell_pair(BellState::PhiPlus, 1, 2).tensor(&spin_plus_state()).unwrap();
        let mode = GateMode::Lossy(pair);
        let out =
            apply_gate(&apply_gate(&input, pol(1), spin(), &mode).unwrap(), pol(2), spin(), &mode)
                .unwrap();
        let target =
            prepare_bell_pair(BellState::PhiMinus, 1, 2).tensor(&spin_minus_state()).unwrap();
        let plain = out.overlap(&target).unwrap().norm();
        let tied = 1.0 / (2.0 - f_phi * f_phi).sqrt();
        assert!(
            (plain - tied).abs() < 1e-9,
            "criterion 3: FAIL (trial {trial}: plain overlap {plain} vs 1/sqrt(2-f²) {tied})"
        );

        // Teleportation consumes one photon of each class: its total
        // branch probability equals the ensemble efficiency too.
        let total: f64 = records.iter().map(|r| r.probability).sum();
        assert!(
            (total - eta).abs() < 1e-12,
            "criterion 3: FAIL (trial {trial}: teleport survival {total} vs eta {eta})"
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 3: FAIL (runtime {elapsed:.1} s exceeds 10 s)");
    println!("criterion 3 (closed form vs brute force): PASS ({elapsed:.2} s)");
}

// ---------------------------------------------------------------------
// 4. Protocol exactness in ideal mode
// ---------------------------------------------------------------------

#[test]
fn criterion_4_protocol_exactness() {
    let started = Instant::now();
    let ideal = GateMode::ideal_quarter();
    let (t0, rh) = (c(-1.0, 0.0), c(1.0, 0.0));

    // complete identification, both analyzers
    for bell in BellState::ALL {
        let input = prepare_bell_pair(bell, 1, 2).tensor(&spin_plus_state()).unwrap();
        for o in bsa_type1(&input, pol(1), pol(2), spin(), &ideal).unwrap() {
            if o.probability > 1e-9 {
                assert_eq!(
                    o.inferred,
                    Some(bell),
                    "criterion 4: FAIL (type-I misidentified {bell} on {})",
                    o.outcome
                );
            }
        }
        for o in bsa_type2(&input, pol(1), pol(2), t0, rh).unwrap() {
            if o.probability > 1e-9 {
                assert_eq!(
                    o.inferred,
                    Some(bell),
                    "criterion 4: FAIL (type-II misidentified {bell} on {})",
                    o.outcome
                );
            }
        }
    }

    // teleportation exactness, 100 random qubits, all branches, both types
    let mut rng = ChaCha8Rng::seed_from_u64(0x7E1E);
    for _ in 0..100 {
        let (alpha, beta) = random_qubit(&mut rng);
        for r in teleport_type1(alpha, beta, &ideal).unwrap() {
            assert!(
                (r.fidelity - 1.0).abs() <= 1e-9,
                "criterion 4: FAIL (type-I teleport branch {} fidelity {})",
                r.outcome,
                r.fidelity
            );
        }
        for r in teleport_type2(alpha, beta, t0, rh).unwrap().iter().filter(|r| r.survived) {
            assert!(
                (r.fidelity - 1.0).abs() <= 1e-9,
                "criterion 4: FAIL (type-II teleport branch {} fidelity {})",
                r.outcome,
                r.fidelity
            );
        }
    }

    // swapping lands on Bell states for every outcome class, both types
    for r in swap_type1(&ideal).unwrap() {
        assert!(
            r.bell.is_some() && r.fidelity > 1.0 - 1e-9,
            "criterion 4: FAIL (type-I swap branch {} not Bell-valued)",
            r.outcome
        );
    }
    for r in swap_type2(t0, rh).unwrap().iter().filter(|r| r.survived) {
        assert!(
            r.bell.is_some() && r.fidelity > 1.0 - 1e-9,
            "criterion 4: FAIL (type-II swap branch {} not Bell-valued)",
            r.outcome
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "criterion 4: FAIL (runtime {elapsed:.1} s exceeds 5 s)");
    println!("criterion 4 (ideal protocol exactness): PASS ({elapsed:.2} s)");
}

// ---------------------------------------------------------------------
// 5. Derived tables match the published correspondence tables
// ---------------------------------------------------------------------

/// Expected teleportation rows under |R⟩ = (|H⟩+i|V⟩)/√2: receiving-photon
/// state by (same polarization parity?, spin −?) and the correction that
/// restores α|R⟩+β|L⟩.
fn table1_row(same_parity: bool, spin_minus: bool, alpha: Complex64, beta: Complex64)
    -> ([Complex64; 2], Correction) {
    match (same_parity, spin_minus) {
        (true, true) => ([-beta, alpha], Correction::PauliXZ), // αL − βR
        (false, true) => ([beta, alpha], Correction::PauliX),  // αL + βR
        (true, false) => ([alpha, beta], Correction::Identity), // αR + βL
        (false, false) => ([alpha, -beta], Correction::PauliZ), // αR − βL
    }
}

/// Expected swapping rows: surviving-pair state over (RR, RL, LR, LL).
fn table2_row(same_parity: bool, spin_minus: bool) -> [Complex64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    match (same_parity, spin_minus) {
        (true, true) => [c(-s, 0.0), z, z, c(s, 0.0)], // |LL⟩ − |RR⟩
        (false, true) => [c(s, 0.0), z, z, c(s, 0.0)], // |LL⟩ + |RR⟩
        (true, false) => [z, c(s, 0.0), c(s, 0.0), z], // |LR⟩ + |RL⟩
        (false, false) => [z, c(-s, 0.0), c(s, 0.0), z], // |LR⟩ − |RL⟩
    }
}

#[test]
fn criterion_5_published_tables() {
    let started = Instant::now();
    let ideal = GateMode::ideal_quarter();
    let alpha = c(0.6, 0.0);
    let beta = c(0.48, 0.64);

    // Table 1: photon-3 state per outcome class, before correction.
    let input = PureState::from_amplitudes(vec![pol(1)], vec![alpha, beta])
        .unwrap()
        .tensor(&prepare_bell_pair(BellState::PsiPlus, 2, 3))
        .unwrap()
        .tensor(&spin_plus_state())
        .unwrap();
    let gated =
        apply_gate(&apply_gate(&input, pol(1), spin(), &ideal).unwrap(), pol(2), spin(), &ideal)
            .unwrap();
    let records = teleport_type1(alpha, beta, &ideal).unwrap();
    for (outcome, photon3) in enumerate_teleport_branches(&gated) {
        let rendered = format!(
            "{}{},{}",
            if outcome[0] == 0 { 'H' } else { 'V' },
            if outcome[1] == 0 { 'H' } else { 'V' },
            if outcome[2] == 0 { '+' } else { '-' },
        );
        let record = records.iter().find(|r| r.outcome == rendered).unwrap();
        let same_parity = outcome[0] == outcome[1];
        let spin_minus = outcome[2] == 1;
        let (expected_amps, expected_corr) = table1_row(same_parity, spin_minus, alpha, beta);
        let expected =
            PureState::from_amplitudes(vec![pol(3)], expected_amps.to_vec()).unwrap();
        let ov = photon3.overlap(&expected).unwrap().norm();
        assert!(
            ov > 1.0 - 1e-9,
            "criterion 5: FAIL (Table 1 row: parity={same_parity} spin_minus={spin_minus}, \
             overlap {ov}, branch state {:?})",
            photon3.amplitudes()
        );
        assert_eq!(
            record.correction,
            Some(expected_corr),
            "criterion 5: FAIL (Table 1 correction mismatch on {})",
            record.outcome
        );
    }

    // Table 2: surviving-pair state per outcome class.
    let expected_bell = |same_parity: bool, spin_minus: bool| {
        let amps = table2_row(same_parity, spin_minus);
        PureState::from_amplitudes(vec![pol(2), pol(4)], amps.to_vec()).unwrap()
    };
    let swap_input = prepare_bell_pair(BellState::PsiPlus, 1, 2)
        .tensor(&prepare_bell_pair(BellState::PsiPlus, 3, 4))
        .unwrap()
        .tensor(&spin_plus_state())
        .unwrap();
    let swap_gated = apply_gate(
        &apply_gate(&swap_input, pol(1), spin(), &ideal).unwrap(),
        pol(3),
        spin(),
        &ideal,
    )
    .unwrap();
    for (outcome, pair_state) in enumerate_swap_branches(&swap_gated) {
        let same_parity = outcome[0] == outcome[1];
        let spin_minus = outcome[2] == 1;
        let expected = expected_bell(same_parity, spin_minus);
        let ov = pair_state.overlap(&expected).unwrap().norm();
        assert!(
            ov > 1.0 - 1e-9,
            "criterion 5: FAIL (Table 2 row: parity={same_parity} spin_minus={spin_minus}, \
             overlap {ov}, branch state {:?})",
            pair_state.amplitudes()
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    println!("criterion 5 (published tables reproduced): PASS ({elapsed:.2} s)");
}

/// All eight (HV, HV, ±) forced branches of the gated teleport register,
/// with the surviving photon-3 state.
fn enumerate_teleport_branches(gated: &PureState) -> Vec<([u8; 3], PureState)> {
    let mut out = Vec::new();
    for o1 in 0..2u8 {
        for o2 in 0..2u8 {
            for os in 0..2u8 {
                let (_, s1) =
                    gated.measure_forced(pol(1), spincavity_core::qstate::Basis::Hv, o1).unwrap();
                let (_, s2) =
                    s1.measure_forced(pol(2), spincavity_core::qstate::Basis::Hv, o2).unwrap();
                let (_, s3) = s2
                    .measure_forced(spin(), spincavity_core::qstate::Basis::PlusMinus, os)
                    .unwrap();
                out.push(([o1, o2, os], s3));
            }
        }
    }
    out
}

fn enumerate_swap_branches(gated: &PureState) -> Vec<([u8; 3], PureState)> {
    let mut out = Vec::new();
    for o1 in 0..2u8 {
        for o3 in 0..2u8 {
            for os in 0..2u8 {
                let (_, s1) =
                    gated.measure_forced(pol(1), spincavity_core::qstate::Basis::Hv, o1).unwrap();
                let (_, s2) =
                    s1.measure_forced(pol(3), spincavity_core::qstate::Basis::Hv, o3).unwrap();
                let (_, s3) = s2
                    .measure_forced(spin(), spincavity_core::qstate::Basis::PlusMinus, os)
                    .unwrap();
                out.push(([o1, o3, os], s3));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------
// 6. Decoherence factor and spin echo
// ---------------------------------------------------------------------

#[test]
fn criterion_6_decoherence_and_echo() {
    let started = Instant::now();

    let f0 = DecoherenceModel::new(1.0, 0.0).unwrap().factor();
    assert!((f0 - 1.0).abs() <= 1e-12, "criterion 6: FAIL (F'(0) = {f0})");
    let finf = DecoherenceModel::new(1.0, 1e9).unwrap().factor();
    assert!((finf - 0.5).abs() <= 1e-12, "criterion 6: FAIL (F'(inf) = {finf})");
    let f1 = DecoherenceModel::new(3.0, 3.0).unwrap().factor();
    let expected = 0.5 * (1.0 + (-1.0f64).exp());
    assert!((f1 - expected).abs() <= 1e-12, "criterion 6: FAIL (F'(T2e) = {f1})");

    let n = 100_000u64;
    let mut rng = ChaCha8Rng::seed_from_u64(0xEC40);
    let fid = spin_echo_sim(1.0, 1.0, false, n, &mut rng).unwrap();
    // Var(Re e^{iδt}) at σt = √2: (1 + e^{−4})/2 − e^{−2}
    let var = 0.5 * (1.0 + (-4.0f64).exp()) - (-2.0f64).exp();
    let three_se = 3.0 * (var / n as f64).sqrt();
    assert!(
        (fid - (-1.0f64).exp()).abs() <= three_se,
        "criterion 6: FAIL (echo-off coherence {fid} vs 1/e ± {three_se})"
    );

    let echo = spin_echo_sim(1.0, 4.2, true, 10_000, &mut rng).unwrap();
    assert!((echo - 1.0).abs() <= 1e-9, "criterion 6: FAIL (echo-on coherence {echo})");

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "criterion 6: FAIL (runtime {elapsed:.1} s exceeds 10 s)");
    println!("criterion 6 (decoherence factor and spin echo): PASS ({elapsed:.2} s)");
}

// ---------------------------------------------------------------------
// 7. Loss-resistance Monte Carlo
// ---------------------------------------------------------------------

fn link_records(rates: &spincavity_core::protocols::LinkRates) -> Vec<ProtocolRecord> {
    vec![
        ProtocolRecord {
            protocol: "link".into(),
            mode: "memory".into(),
            outcome: "aggregate".into(),
            probability: rates.memory_rate,
            fidelity: rates.mean_f_prime.unwrap_or(0.0),
            survived: rates.memory_rate > 0.0,
        },
        ProtocolRecord {
            protocol: "link".into(),
            mode: "coincidence".into(),
            outcome: "aggregate".into(),
            probability: rates.coincidence_rate,
            fidelity: 1.0,
            survived: rates.coincidence_rate > 0.0,
        },
    ]
}

#[test]
fn criterion_7_loss_resistance() {
    let started = Instant::now();
    let p = 0.01;
    let window = 100u32;
    let link = LinkModel {
        p_arrival: p,
        attempt_period: 1.0,
        window_attempts: window,
        t2e: 1e9,
    };
    let n_trials = 1_000_000u64;
    let rates = loss_resistance_mc(&link, n_trials, 42).unwrap();
    let ratio = rates.memory_rate / rates.coincidence_rate;
    let closed_form = (1.0 - (1.0 - p).powi(window as i32)) / p;
    assert!(
        (ratio - closed_form).abs() / closed_form <= 0.10,
        "criterion 7: FAIL (ratio {ratio} vs geometric closed form {closed_form})"
    );

    let again = loss_resistance_mc(&link, n_trials, 42).unwrap();
    let lines_a = to_json_lines(&link_records(&rates));
    let lines_b = to_json_lines(&link_records(&again));
    assert_eq!(lines_a, lines_b, "criterion 7: FAIL (seeded rerun produced different bytes)");

    // the protocols JSON-line schema parses back
    for line in lines_a.lines() {
        let _: protocols::ProtocolRecord = serde_json::from_str(line).unwrap();
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 7: FAIL (runtime {elapsed:.1} s exceeds 60 s)");
    println!("criterion 7 (loss-resistance Monte Carlo): PASS ({elapsed:.2} s)");
}
