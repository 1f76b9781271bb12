//! Input-output model of the single-sided spin-cavity.
//!
//! In the weak excitation approximation the cold- and hot-cavity
//! reflection coefficients are
//!
//! ```text
//! r0(ω) = [i(ωc−ω) − κ/2 + κs/2] / [i(ωc−ω) + κ/2 + κs/2]
//! rh(ω) = 1 − κ·[i(ωx−ω) + γ/2] / {[i(ωx−ω) + γ/2]·[i(ωc−ω) + κ/2 + κs/2] + g²}
//! ```
//!
//! with g the dot-cavity coupling, κ the output coupling, κs the side
//! leakage and γ the trion dipole decay. The analyzer operates at probe
//! frequencies ω′ where the reflection phase difference arg(rh/r0) equals
//! ±π/2; this module finds those frequencies by a dense scan plus
//! bisection and evaluates the closed-form analyzer metrics there.
//!
//! All rates share one energy unit; the convenience constructor
//! [`CavityParams::normalized`] uses κ+κs = 1. The trion decay is a free
//! parameter: γ = 0.01(κ+κs) is the library default, while reproducing the
//! published operating points requires γ = 0.1κ (see the crate README for
//! the sensitivity table).

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

/// Number of grid points of the dense phase scan.
const SCAN_POINTS: usize = 20001;
/// Bisection stops once the phase residual drops below this.
const BISECT_TOL: f64 = 1e-10;
/// A reported solution must satisfy the phase condition this tightly.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CavityError {
    #[error("kappa must be positive (got {0})")]
    NonPositiveKappa(f64),
    #[error("{name} must be non-negative (got {value})")]
    NegativeRate { name: &'static str, value: f64 },
    #[error("reflection vanishes at omega = {omega}; phase difference undefined")]
    SingularPhase { omega: f64 },
    #[error("scan window must be finite with lower bound below upper bound")]
    BadWindow,
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
}

/// Physical parameters of the spin-cavity system, all in one energy unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Dot-cavity coupling strength g.
    pub g: f64,
    /// Output coupling rate κ.
    pub kappa: f64,
    /// Side-leakage and loss rate κs.
    pub kappa_s: f64,
    /// Trion dipole decay rate γ.
    pub gamma: f64,
    /// Cavity mode frequency ωc.
    pub omega_c: f64,
    /// Trion transition frequency ωx.
    pub omega_x: f64,
}

impl CavityParams {
    /// Resonant parameters (ωc = ωx = 0).
    pub fn resonant(g: f64, kappa: f64, kappa_s: f64, gamma: f64) -> Self {
        Self { g, kappa, kappa_s, gamma, omega_c: 0.0, omega_x: 0.0 }
    }

    /// Resonant parameters in the κ+κs = 1 unit convention, from the
    /// normalized coupling g/(κ+κs), the loss ratio κs/κ and γ/(κ+κs).
    pub fn normalized(g_norm: f64, ks_over_k: f64, gamma_ratio: f64) -> Self {
        let kappa = 1.0 / (1.0 + ks_over_k);
        let kappa_s = ks_over_k / (1.0 + ks_over_k);
        Self::resonant(g_norm, kappa, kappa_s, gamma_ratio)
    }

    /// Replace γ by the given fraction of the output coupling κ.
    pub fn with_gamma_over_kappa(mut self, ratio: f64) -> Self {
        self.gamma = ratio * self.kappa;
        self
    }

    pub fn validate(&self) -> Result<(), CavityError> {
        if !(self.kappa > 0.0) {
            return Err(CavityError::NonPositiveKappa(self.kappa));
        }
        for (name, value) in [("kappa_s", self.kappa_s), ("gamma", self.gamma), ("g", self.g)] {
            if !(value >= 0.0) {
                return Err(CavityError::NegativeRate { name, value });
            }
        }
        Ok(())
    }

    /// Cold/hot reflection coefficients at probe frequency ω.
    pub fn reflection(&self, omega: f64) -> ReflectionPair {
        let half_total = 0.5 * (self.kappa + self.kappa_s);
        let dx = Complex64::new(0.5 * self.gamma, self.omega_x - omega);
        let dc = Complex64::new(half_total, self.omega_c - omega);
        let rh = 1.0 - self.kappa * dx / (dx * dc + self.g * self.g);
        let r0 = Complex64::new(0.5 * (self.kappa_s - self.kappa), self.omega_c - omega) / dc;
        ReflectionPair { r0, rh, omega }
    }

    /// Reflection phase difference arg(rh/r0), wrapped to (−π, π].
    pub fn phase_difference(&self, omega: f64) -> Result<f64, CavityError> {
        let pair = self.reflection(omega);
        if pair.r0.norm_sqr() == 0.0 || pair.rh.norm_sqr() == 0.0 {
            return Err(CavityError::SingularPhase { omega });
        }
        Ok((pair.rh / pair.r0).arg())
    }

    /// Default scan window: |ω − ω0| ≤ 3g + 3(κ+κs) around the resonance.
    pub fn default_window(&self) -> (f64, f64) {
        let half = 3.0 * self.g + 3.0 * (self.kappa + self.kappa_s);
        (self.omega_c - half, self.omega_c + half)
    }

    /// All probe frequencies in `window` where the phase difference equals
    /// the target, sorted by detuning. Empty when the target phase shift is
    /// not achievable (expected for κs ≳ 1.3κ).
    pub fn solve_phase_condition(
        &self,
        target: PhaseTarget,
        window: (f64, f64),
    ) -> Result<Vec<PhaseSolution>, CavityError> {
        self.validate()?;
        let scan = self.scan_phase(window)?;
        let mut roots = self.roots_from_scan(&scan, target.value());
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(roots
            .into_iter()
            .enumerate()
            .map(|(branch_index, omega_prime)| PhaseSolution { omega_prime, target, branch_index })
            .collect())
    }

    fn scan_phase(&self, window: (f64, f64)) -> Result<PhaseScan, CavityError> {
        let (lo, hi) = window;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(CavityError::BadWindow);
        }
        let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let values = (0..SCAN_POINTS)
            .map(|i| self.phase_difference(lo + i as f64 * step).ok())
            .collect();
        Ok(PhaseScan { lo, step, values })
    }

    /// Bracket sign changes of wrap(Δφ − target) on the scan grid and
    /// refine by bisection. Wrap-seam jumps (|Δresidual| > π between
    /// neighboring grid points) are not genuine roots and are skipped, as
    /// are brackets touching a singular point.
    fn roots_from_scan(&self, scan: &PhaseScan, target: f64) -> Vec<f64> {
        let res = |omega: f64| -> Option<f64> {
            self.phase_difference(omega).ok().map(|d| wrap_phase(d - target))
        };
        let mut roots: Vec<f64> = Vec::new();
        let mut push = |w: f64| {
            if !roots.iter().any(|r| (r - w).abs() < 1e-9 * scan.step.max(1e-300)) {
                roots.push(w);
            }
        };
        for i in 0..scan.values.len() - 1 {
            let (Some(d0), Some(d1)) = (scan.values[i], scan.values[i + 1]) else {
                continue;
            };
            let (f0, f1) = (wrap_phase(d0 - target), wrap_phase(d1 - target));
            if (f1 - f0).abs() > PI {
                continue;
            }
            let x0 = scan.lo + i as f64 * scan.step;
            let x1 = x0 + scan.step;
            if f0 == 0.0 {
                push(x0);
                continue;
            }
            if f1 == 0.0 || f0 * f1 > 0.0 {
                continue;
            }
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            let mut root = None;
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let Some(fm) = res(m) else { break };
                if fm.abs() < BISECT_TOL {
                    root = Some(m);
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            if let Some(m) = root {
                if res(m).is_some_and(|f| f.abs() < RESIDUAL_TOL) {
                    push(m);
                }
            }
        }
        roots
    }
}

struct PhaseScan {
    lo: f64,
    step: f64,
    values: Vec<Option<f64>>,
}

/// Wrap an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Cold and hot reflection coefficients at one probe frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionPair {
    pub r0: Complex64,
    pub rh: Complex64,
    pub omega: f64,
}

impl ReflectionPair {
    /// Construct from raw coefficients (for synthetic/idealized gates).
    pub fn new(r0: Complex64, rh: Complex64, omega: f64) -> Self {
        Self { r0, rh, omega }
    }

    /// Analyzer amplitude fidelities (f_psi, f_phi). f_psi is identically
    /// 1; f_phi depends only on the modulus imbalance of r0 and rh.
    pub fn bsa_fidelity(&self) -> FidelityPair {
        let (a, b) = (self.r0.norm(), self.rh.norm());
        if a == 0.0 || b == 0.0 {
            return FidelityPair { f_psi: 1.0, f_phi: 0.0, vanishing_reflection: true };
        }
        let imbalance = a / b - b / a;
        FidelityPair {
            f_psi: 1.0,
            f_phi: 1.0 / (1.0 + 0.25 * imbalance * imbalance).sqrt(),
            vanishing_reflection: false,
        }
    }

    /// Analyzer efficiency η = (|r0|² + |rh|²)²/4, the Bell-ensemble mean
    /// survival probability of the two-photon analysis.
    pub fn bsa_efficiency(&self) -> f64 {
        let s = self.r0.norm_sqr() + self.rh.norm_sqr();
        0.25 * s * s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityPair {
    pub f_psi: f64,
    pub f_phi: f64,
    /// Set when |r0| or |rh| vanishes and f_phi is pinned to 0.
    pub vanishing_reflection: bool,
}

/// Which phase shift the probe frequency realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTarget {
    PlusHalfPi,
    MinusHalfPi,
}

impl PhaseTarget {
    pub const BOTH: [PhaseTarget; 2] = [PhaseTarget::PlusHalfPi, PhaseTarget::MinusHalfPi];

    pub fn value(self) -> f64 {
        match self {
            PhaseTarget::PlusHalfPi => FRAC_PI_2,
            PhaseTarget::MinusHalfPi => -FRAC_PI_2,
        }
    }
}

impl fmt::Display for PhaseTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseTarget::PlusHalfPi => write!(f, "+pi/2"),
            PhaseTarget::MinusHalfPi => write!(f, "-pi/2"),
        }
    }
}

/// A frequency satisfying the ±π/2 phase condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSolution {
    pub omega_prime: f64,
    pub target: PhaseTarget,
    pub branch_index: usize,
}

/// Spin-decoherence model: electron coherence time and the interval
/// between the two analyzed photons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceModel {
    pub t2e: f64,
    pub delta_t: f64,
}

impl DecoherenceModel {
    pub fn new(t2e: f64, delta_t: f64) -> Result<Self, CavityError> {
        if !(t2e > 0.0) {
            return Err(CavityError::NonPositive { name: "t2e", value: t2e });
        }
        if !(delta_t >= 0.0) {
            return Err(CavityError::NegativeRate { name: "delta_t", value: delta_t });
        }
        Ok(Self { t2e, delta_t })
    }

    /// Fidelity multiplier (1 + e^(−Δt/T2e))/2 from spin dephasing between
    /// the two photon arrivals.
    pub fn factor(&self) -> f64 {
        0.5 * (1.0 + (-self.delta_t / self.t2e).exp())
    }
}

/// One phase branch at a sweep grid point, with its analyzer metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchMetrics {
    pub branch: usize,
    pub omega_prime: f64,
    pub f_psi: f64,
    pub f_phi: f64,
    pub eta: f64,
}

/// All phase branches at one (g/(κ+κs), κs/κ) grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub g_norm: f64,
    pub ks_over_k: f64,
    pub branches: Vec<BranchMetrics>,
}

impl SweepPoint {
    /// Headline branch: maximum efficiency.
    pub fn best(&self) -> Option<&BranchMetrics> {
        self.branches
            .iter()
            .max_by(|a, b| a.eta.partial_cmp(&b.eta).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// Branch with the highest f_phi; the published operating points lie
    /// on this branch.
    pub fn max_fidelity(&self) -> Option<&BranchMetrics> {
        self.branches
            .iter()
            .max_by(|a, b| a.f_phi.partial_cmp(&b.f_phi).unwrap_or(std::cmp::Ordering::Equal))
    }
}

/// Metrics over a grid of normalized coupling strengths and loss ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub gamma_ratio: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepGrid {
    /// Evaluate all phase branches and their metrics over the grid.
    /// γ is given as a fraction of κ+κs. Grid points are independent and
    /// evaluated in parallel; results keep grid order.
    pub fn compute(g_norm: &[f64], ks_over_k: &[f64], gamma_ratio: f64) -> Self {
        let coords: Vec<(f64, f64)> = g_norm
            .iter()
            .flat_map(|&g| ks_over_k.iter().map(move |&ks| (g, ks)))
            .collect();
        let points = coords
            .into_par_iter()
            .map(|(g, ks)| {
                let params = CavityParams::normalized(g, ks, gamma_ratio);
                SweepPoint { g_norm: g, ks_over_k: ks, branches: point_branches(&params) }
            })
            .collect();
        Self { gamma_ratio, points }
    }

    /// CSV serialization: one row per branch; points without any phase
    /// solution emit a single `branch=-1` marker row with NaN metrics.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("g_norm,ks_over_k,branch,omega_prime,f_psi,f_phi,eta\n");
        for p in &self.points {
            if p.branches.is_empty() {
                out.push_str(&format!("{},{},-1,NaN,NaN,NaN,NaN\n", p.g_norm, p.ks_over_k));
                continue;
            }
            for b in &p.branches {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    p.g_norm, p.ks_over_k, b.branch, b.omega_prime, b.f_psi, b.f_phi, b.eta
                ));
            }
        }
        out
    }
}

/// All ±π/2 branches of one parameter set, merged across both targets and
/// indexed by detuning order.
pub fn point_branches(params: &CavityParams) -> Vec<BranchMetrics> {
    let window = params.default_window();
    let mut omegas: Vec<f64> = PhaseTarget::BOTH
        .iter()
        .flat_map(|&t| {
            params
                .solve_phase_condition(t, window)
                .unwrap_or_default()
                .into_iter()
                .map(|s| s.omega_prime)
        })
        .collect();
    omegas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    omegas
        .iter()
        .enumerate()
        .map(|(branch, &omega_prime)| {
            let pair = params.reflection(omega_prime);
            let fid = pair.bsa_fidelity();
            BranchMetrics {
                branch,
                omega_prime,
                f_psi: fid.f_psi,
                f_phi: fid.f_phi,
                eta: pair.bsa_efficiency(),
            }
        })
        .collect()
}
