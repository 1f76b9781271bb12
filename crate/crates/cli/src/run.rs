//! Command execution: resolve the gate mode, run the requested
//! simulation, write the artifact and produce a one-line summary.
//! Identical config and seed yield byte-identical artifacts.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use spincavity_core::cavity::{point_branches, CavityError, CavityParams, DecoherenceModel, SweepGrid};
use spincavity_core::gates::GateMode;
use spincavity_core::protocols::{
    bsa_type1, bsa_type1_sampled, bsa_type2, bsa_type2_sampled, loss_resistance_mc,
    prepare_bell_pair, spin_echo_sim, swap_type1, swap_type1_sampled, swap_type2,
    swap_type2_sampled, teleport_type1, teleport_type1_sampled, teleport_type2,
    teleport_type2_sampled, to_json_lines, BsaOutcome, LinkModel, ProtocolError, ProtocolRecord,
    SwapRecord, TeleportRecord,
};
use spincavity_core::qstate::{PureState, SubsystemLabel};

use crate::config::{
    AnalyzerKind, BranchChoice, BsaParams, Command, EchoParams, LinkParams, ModeConfig, ModeKind,
    RunConfig, SwapParams, SweepParams, TeleportParams,
};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Cavity(#[from] CavityError),
    #[error("no ±π/2 phase solution at g_norm={g}, ks_over_k={ks}, gamma_ratio={gamma}")]
    NoPhaseSolution { g: f64, ks: f64, gamma: f64 },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// One line for standard output (headline figure of merit).
    pub line: String,
    pub artifact: PathBuf,
}

/// Execute a validated run configuration. `out_override` wins over the
/// config's `output_path`, which wins over the per-command default name.
pub fn execute(config: &RunConfig, out_override: Option<&Path>) -> Result<RunSummary, RunError> {
    let artifact: PathBuf = match (out_override, &config.output_path) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => PathBuf::from(config.command.default_output()),
    };
    let (bytes, line) = match &config.command {
        Command::Sweep(p) => run_sweep(p, &artifact)?,
        Command::Bsa(p) => run_bsa(p, config.seed, &artifact)?,
        Command::Teleport(p) => run_teleport(p, config.seed, &artifact)?,
        Command::Swap(p) => run_swap(p, config.seed, &artifact)?,
        Command::Echo(p) => run_echo(p, config.seed, &artifact)?,
        Command::Link(p) => run_link(p, config.seed, &artifact)?,
    };
    std::fs::write(&artifact, bytes)
        .map_err(|source| RunError::Write { path: artifact.display().to_string(), source })?;
    Ok(RunSummary { line, artifact })
}

/// Resolve a mode block into a concrete gate. For the lossy kind this
/// solves the phase condition and picks the configured branch.
fn resolve_mode(mode: &ModeConfig, analyzer: AnalyzerKind) -> Result<GateMode, RunError> {
    match (mode.kind, analyzer) {
        (ModeKind::Ideal, AnalyzerKind::Type1) => {
            Ok(GateMode::ideal(mode.delta_phi.unwrap_or(std::f64::consts::FRAC_PI_2)))
        }
        (ModeKind::Ideal, AnalyzerKind::Type2) | (ModeKind::Ebs, _) => {
            let t0 = mode.t0.map_or(Complex64::new(-1.0, 0.0), |v| Complex64::new(v[0], v[1]));
            let rh = mode.rh.map_or(Complex64::new(1.0, 0.0), |v| Complex64::new(v[0], v[1]));
            Ok(GateMode::Ebs { t0, rh })
        }
        (ModeKind::Lossy, _) => {
            let g = mode.g_norm.expect("validated: lossy mode has g_norm");
            let ks = mode.ks_over_k.expect("validated: lossy mode has ks_over_k");
            let gamma = mode.gamma_ratio.unwrap_or(0.01);
            let params = CavityParams::normalized(g, ks, gamma);
            let branches = point_branches(&params);
            let chosen = match mode.branch.unwrap_or(BranchChoice::MaxEta) {
                BranchChoice::MaxEta => branches
                    .iter()
                    .max_by(|a, b| a.eta.partial_cmp(&b.eta).unwrap()),
                BranchChoice::MaxFidelity => branches
                    .iter()
                    .max_by(|a, b| a.f_phi.partial_cmp(&b.f_phi).unwrap()),
            };
            let best =
                chosen.ok_or(RunError::NoPhaseSolution { g, ks, gamma })?;
            Ok(GateMode::Lossy(params.reflection(best.omega_prime)))
        }
    }
}

fn mode_name(mode: &ModeConfig) -> &'static str {
    match mode.kind {
        ModeKind::Ideal => "ideal",
        ModeKind::Lossy => "lossy",
        ModeKind::Ebs => "ebs",
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn run_sweep(params: &SweepParams, artifact: &Path) -> Result<(Vec<u8>, String), RunError> {
    let grid =
        SweepGrid::compute(&params.g_norm.values(), &params.ks_over_k, params.gamma_ratio);
    let n_points = grid.points.len();
    let with_solutions = grid.points.iter().filter(|p| !p.branches.is_empty()).count();
    let best = grid
        .points
        .iter()
        .filter_map(|p| p.best().map(|b| (p.g_norm, p.ks_over_k, b.f_phi, b.eta)))
        .max_by(|a, b| a.3.partial_cmp(&b.3).unwrap());
    let line = match best {
        Some((g, ks, f_phi, eta)) => format!(
            "sweep: {n_points} points, {with_solutions} with phase solutions; best eta={} (f_phi={}) at g_norm={}, ks_over_k={} -> {}",
            fmt_f64(eta),
            fmt_f64(f_phi),
            fmt_f64(g),
            fmt_f64(ks),
            artifact.display()
        ),
        None => format!(
            "sweep: {n_points} points, no phase solutions anywhere -> {}",
            artifact.display()
        ),
    };
    Ok((grid.to_csv().into_bytes(), line))
}

fn spin_plus() -> PureState {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    PureState::product(&[(SubsystemLabel::spin(0), [Complex64::new(s, 0.0), Complex64::new(s, 0.0)])])
        .expect("spin |+> is well-formed")
}

fn bsa_record(o: &BsaOutcome, params: &BsaParams) -> ProtocolRecord {
    let outcome = match o.inferred {
        Some(bell) => format!("{}->{}", o.outcome, bell.name()),
        None => o.outcome.clone(),
    };
    ProtocolRecord {
        protocol: "bsa".into(),
        mode: format!("{}/{}", params.analyzer.name(), mode_name(&params.mode)),
        outcome,
        probability: o.probability,
        fidelity: if o.inferred == Some(params.input) { 1.0 } else { 0.0 },
        survived: o.survived,
    }
}

fn run_bsa(params: &BsaParams, seed: u64, artifact: &Path) -> Result<(Vec<u8>, String), RunError> {
    let gate = resolve_mode(&params.mode, params.analyzer)?;
    let input = prepare_bell_pair(params.input, 1, 2).tensor(&spin_plus()).map_err(ProtocolError::from)?;
    let (a, b) = (SubsystemLabel::polarization(1), SubsystemLabel::polarization(2));
    let spin = SubsystemLabel::spin(0);
    let outcomes: Vec<BsaOutcome> = if params.shots == 0 {
        match (&gate, params.analyzer) {
            (GateMode::Ebs { t0, rh }, _) => bsa_type2(&input, a, b, *t0, *rh)?,
            (_, AnalyzerKind::Type1) => bsa_type1(&input, a, b, spin, &gate)?,
            _ => unreachable!("type2 always resolves to an EBS gate"),
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..params.shots)
            .map(|_| match (&gate, params.analyzer) {
                (GateMode::Ebs { t0, rh }, _) => {
                    bsa_type2_sampled(&input, a, b, *t0, *rh, &mut rng)
                }
                (_, AnalyzerKind::Type1) => {
                    bsa_type1_sampled(&input, a, b, spin, &gate, &mut rng)
                }
                _ => unreachable!(),
            })
            .collect::<Result<_, _>>()?
    };
    let records: Vec<ProtocolRecord> = outcomes.iter().map(|o| bsa_record(o, params)).collect();
    let live = outcomes.iter().filter(|o| o.survived && o.probability > 1e-12).count();
    let correct = outcomes
        .iter()
        .filter(|o| o.survived && o.probability > 1e-12 && o.inferred == Some(params.input))
        .count();
    let survival: f64 = outcomes.iter().filter(|o| o.survived).map(|o| o.probability).sum();
    let line = format!(
        "bsa {} {}: input {}, {} records, inference correct {correct}/{live}, {} {} -> {}",
        params.analyzer.name(),
        mode_name(&params.mode),
        params.input.name(),
        records.len(),
        if params.shots == 0 { "total survival" } else { "survival share" },
        fmt_f64(if params.shots == 0 {
            survival
        } else {
            live as f64 / params.shots.max(1) as f64
        }),
        artifact.display()
    );
    Ok((to_json_lines(&records).into_bytes(), line))
}

fn teleport_record_to_protocol(
    r: &TeleportRecord,
    params: &TeleportParams,
    f_prime: f64,
) -> ProtocolRecord {
    ProtocolRecord {
        protocol: "teleport".into(),
        mode: format!("{}/{}", params.analyzer.name(), mode_name(&params.mode)),
        outcome: r.outcome.clone(),
        probability: r.probability,
        fidelity: r.fidelity * f_prime,
        survived: r.survived,
    }
}

fn run_teleport(
    params: &TeleportParams,
    seed: u64,
    artifact: &Path,
) -> Result<(Vec<u8>, String), RunError> {
    let gate = resolve_mode(&params.mode, params.analyzer)?;
    let alpha = Complex64::new(params.alpha[0], params.alpha[1]);
    let beta = Complex64::new(params.beta[0], params.beta[1]);
    // the factor depends only on Δt/T2e
    let f_prime = params
        .delta_t_over_t2e
        .map(|dt| DecoherenceModel::new(1.0, dt).map(|m| m.factor()))
        .transpose()?
        .unwrap_or(1.0);
    let raw: Vec<TeleportRecord> = if params.shots == 0 {
        match &gate {
            GateMode::Ebs { t0, rh } => teleport_type2(alpha, beta, *t0, *rh)?,
            _ => teleport_type1(alpha, beta, &gate)?,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..params.shots)
            .map(|_| match &gate {
                GateMode::Ebs { t0, rh } => {
                    teleport_type2_sampled(alpha, beta, *t0, *rh, &mut rng)
                }
                _ => teleport_type1_sampled(alpha, beta, &gate, &mut rng),
            })
            .collect::<Result<_, _>>()?
    };
    let records: Vec<ProtocolRecord> =
        raw.iter().map(|r| teleport_record_to_protocol(r, params, f_prime)).collect();
    let live: Vec<&ProtocolRecord> = records.iter().filter(|r| r.survived).collect();
    let min_fidelity =
        live.iter().map(|r| r.fidelity).fold(f64::INFINITY, f64::min);
    let total: f64 = records.iter().map(|r| r.probability).sum();
    let line = format!(
        "teleport {} {}: {} records, min fidelity {}, total probability {} -> {}",
        params.analyzer.name(),
        mode_name(&params.mode),
        records.len(),
        fmt_f64(if live.is_empty() { 0.0 } else { min_fidelity }),
        fmt_f64(total),
        artifact.display()
    );
    Ok((to_json_lines(&records).into_bytes(), line))
}

fn swap_record_to_protocol(r: &SwapRecord, params: &SwapParams) -> ProtocolRecord {
    let outcome = match r.bell {
        Some(bell) => format!("{}->{}", r.outcome, bell.name()),
        None => r.outcome.clone(),
    };
    ProtocolRecord {
        protocol: "swap".into(),
        mode: format!("{}/{}", params.analyzer.name(), mode_name(&params.mode)),
        outcome,
        probability: r.probability,
        fidelity: r.fidelity,
        survived: r.survived,
    }
}

fn run_swap(params: &SwapParams, seed: u64, artifact: &Path) -> Result<(Vec<u8>, String), RunError> {
    let gate = resolve_mode(&params.mode, params.analyzer)?;
    let raw: Vec<SwapRecord> = if params.shots == 0 {
        match &gate {
            GateMode::Ebs { t0, rh } => swap_type2(*t0, *rh)?,
            _ => swap_type1(&gate)?,
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..params.shots)
            .map(|_| match &gate {
                GateMode::Ebs { t0, rh } => swap_type2_sampled(*t0, *rh, &mut rng),
                _ => swap_type1_sampled(&gate, &mut rng),
            })
            .collect::<Result<_, _>>()?
    };
    let records: Vec<ProtocolRecord> =
        raw.iter().map(|r| swap_record_to_protocol(r, params)).collect();
    let live = raw.iter().filter(|r| r.survived).count();
    let bell_valued = raw.iter().filter(|r| r.survived && r.bell.is_some()).count();
    let min_overlap = raw
        .iter()
        .filter(|r| r.survived)
        .map(|r| r.fidelity)
        .fold(f64::INFINITY, f64::min);
    let line = format!(
        "swap {} {}: {} records, {bell_valued}/{live} Bell-valued, min overlap {} -> {}",
        params.analyzer.name(),
        mode_name(&params.mode),
        records.len(),
        fmt_f64(if live == 0 { 0.0 } else { min_overlap }),
        artifact.display()
    );
    Ok((to_json_lines(&records).into_bytes(), line))
}

fn run_echo(params: &EchoParams, seed: u64, artifact: &Path) -> Result<(Vec<u8>, String), RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coherence =
        spin_echo_sim(params.t2_star, params.total_time, params.echo, params.n_samples, &mut rng)?;
    let records = vec![ProtocolRecord {
        protocol: "echo".into(),
        mode: if params.echo { "on" } else { "off" }.into(),
        outcome: "aggregate".into(),
        probability: 1.0,
        fidelity: coherence,
        survived: true,
    }];
    let line = format!(
        "echo {}: coherence {} at t={} (T2*={}, {} samples) -> {}",
        if params.echo { "on" } else { "off" },
        fmt_f64(coherence),
        fmt_f64(params.total_time),
        fmt_f64(params.t2_star),
        params.n_samples,
        artifact.display()
    );
    Ok((to_json_lines(&records).into_bytes(), line))
}

fn run_link(params: &LinkParams, seed: u64, artifact: &Path) -> Result<(Vec<u8>, String), RunError> {
    let link = LinkModel {
        p_arrival: params.p_arrival,
        attempt_period: params.attempt_period,
        window_attempts: params.window_attempts,
        t2e: params.t2e,
    };
    let rates = loss_resistance_mc(&link, params.n_trials, seed)?;
    let records = vec![
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
    ];
    let ratio = if rates.coincidence_rate > 0.0 {
        rates.memory_rate / rates.coincidence_rate
    } else {
        f64::INFINITY
    };
    let line = format!(
        "link: memory_rate={} coincidence_rate={} ratio={} mean_f_prime={} -> {}",
        fmt_f64(rates.memory_rate),
        fmt_f64(rates.coincidence_rate),
        fmt_f64(ratio),
        rates.mean_f_prime.map_or("n/a".to_string(), fmt_f64),
        artifact.display()
    );
    Ok((to_json_lines(&records).into_bytes(), line))
}
