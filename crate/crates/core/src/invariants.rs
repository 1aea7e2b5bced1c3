//! Quick invariant suite shared by the acceptance run and `squeezesim check`.

use std::time::Instant;

use crate::analytic::{squeeze_parameters, squeezed_vacuum_state, t_max_squeeze};
use crate::dynamics::{run_to_max_squeeze, FidelityKind};
use crate::fock::{ladder_operators, parity_matrix, DensityMatrix, HilbertSpec, Operator, QuantumState};
use crate::lindblad::{run_open_to_max_squeeze, DissipationParams};
use crate::model::{bessel_j, build_hamiltonian, SystemParams};
use crate::ode::IntegratorConfig;
use crate::wigner::{
    hermite_complex, squeezed_coherent_amplitudes, wigner_numeric, wigner_pure, wigner_superposed_analytic, GridSpec,
    Interference, Side, DEFAULT_CUTOFF,
};
use crate::{Result, C64};

/// Mechanical cutoff of the open-system purity check.
pub const PURITY_DIM_MECH: usize = 40;

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub outcomes: Vec<CheckOutcome>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

type Check = fn() -> Result<CheckOutcome>;

const CHECKS: [(&str, Check); 9] = [
    ("ladder commutator", ladder_commutator),
    ("hamiltonian hermiticity and parity", hamiltonian_symmetry),
    ("bessel identities", bessel_identities),
    ("hermite identities", hermite_identities),
    ("squeezed-state normalization", squeezed_normalization),
    ("squeeze branch continuity", branch_continuity),
    ("closed evolution norm and parity", closed_norm_parity),
    ("wigner normalization and realness", wigner_normalization),
    ("open evolution trace, hermiticity, positivity, purity", open_invariants),
];

/// Runs every check; a check that errors counts as failed.
pub fn quick_suite() -> SuiteReport {
    let start = Instant::now();
    let outcomes = CHECKS
        .iter()
        .map(|(name, check)| check().unwrap_or_else(|e| CheckOutcome::new(*name, false, format!("error: {e}"))))
        .collect();
    SuiteReport { outcomes, seconds: start.elapsed().as_secs_f64() }
}

fn ladder_commutator() -> Result<CheckOutcome> {
    let n = 30;
    let (b, bd) = ladder_operators(n)?;
    let comm = b.commutator(&bd);
    // [b, b†] = 1 except on the truncation edge
    let worst = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| i < n - 1 && j < n - 1)
        .map(|(i, j)| (comm.get(i, j) - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new("ladder commutator", worst < 1e-12, format!("max defect {worst:.2e}")))
}

fn hamiltonian_symmetry() -> Result<CheckOutcome> {
    let spec = HilbertSpec::single_photon(24)?;
    let parity = spec.lift(&Operator::identity(2), &Operator::identity(2), &parity_matrix(24))?;
    let mut herm: f64 = 0.0;
    let mut comm: f64 = 0.0;
    for p in [SystemParams::reference(), SystemParams::coupling_modulated(1.527, 100.0, 130.0, 1, 1.0)] {
        for t in [0.0, 0.37, 1.9] {
            let h = build_hamiltonian(&p, spec, t)?;
            herm = herm.max(h.hermiticity_defect());
            comm = comm.max(h.commutator(&parity).max_abs());
        }
    }
    Ok(CheckOutcome::new(
        "hamiltonian hermiticity and parity",
        herm < 1e-12 && comm < 1e-9,
        format!("hermiticity {herm:.2e}, [H, parity] {comm:.2e}"),
    ))
}

fn bessel_identities() -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for x in [0.3, 2.5, 3.054, 7.9, 12.0] {
        // J0 + 2 Σ J_2n = 1 and J0² + 2 Σ J_n² = 1
        let mut sum = bessel_j(0, x)?;
        let mut sq = sum * sum;
        for n in 1..=40 {
            let j = bessel_j(n, x)?;
            if n % 2 == 0 {
                sum += 2.0 * j;
            }
            sq += 2.0 * j * j;
        }
        worst = worst.max((sum - 1.0).abs()).max((sq - 1.0).abs());
        // three-term recurrence
        for n in 1..30 {
            let lhs = bessel_j(n - 1, x)? + bessel_j(n + 1, x)?;
            worst = worst.max((lhs - 2.0 * n as f64 / x * bessel_j(n, x)?).abs());
        }
    }
    Ok(CheckOutcome::new("bessel identities", worst < 1e-10, format!("max defect {worst:.2e}")))
}

fn hermite_identities() -> Result<CheckOutcome> {
    let mut worst: f64 = (hermite_complex(3, C64::new(1.0, 0.0))? + 4.0).norm();
    for z in [C64::new(0.4, -1.3), C64::new(-2.1, 0.6), C64::new(1.7, 1.7)] {
        for n in 0..=20usize {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let h = hermite_complex(n, z)?;
            worst = worst.max((hermite_complex(n, -z)? - h * sign).norm() / (1.0 + h.norm()));
        }
    }
    Ok(CheckOutcome::new("hermite identities", worst < 1e-12, format!("max relative defect {worst:.2e}")))
}

fn squeezed_normalization() -> Result<CheckOutcome> {
    let sv = squeezed_vacuum_state(C64::from_polar(1.39823, 0.7), 160)?;
    let sc = squeezed_coherent_amplitudes(C64::new(1.0, 0.5), C64::from_polar(0.8, 0.3), 121);
    let vac = (sv.state.norm() - 1.0).abs().max(sv.tail_mass);
    let coh = (sc.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs();
    Ok(CheckOutcome::new(
        "squeezed-state normalization",
        vac < 1e-8 && coh < 1e-8,
        format!("squeezed vacuum {vac:.2e}, squeezed coherent {coh:.2e}"),
    ))
}

fn branch_continuity() -> Result<CheckOutcome> {
    let p = SystemParams::reference();
    let tm = t_max_squeeze(&p, 1)?;
    let steps = 3000;
    let mut jump: f64 = 0.0;
    let mut prev = squeeze_parameters(0.0, &p, 1)?;
    for k in 1..=steps {
        let rec = squeeze_parameters(3.0 * tm * k as f64 / steps as f64, &p, 1)?;
        jump = jump.max((rec.eta - prev.eta).abs()).max((rec.modulus - prev.modulus).abs());
        prev = rec;
    }
    Ok(CheckOutcome::new("squeeze branch continuity", jump < 0.05, format!("largest step in eta or R {jump:.3e}")))
}

fn closed_norm_parity() -> Result<CheckOutcome> {
    let p = SystemParams::frequency_modulated(118.6, 100.0, 1.13);
    let cfg = IntegratorConfig::for_params(&p, 40);
    let run = run_to_max_squeeze(&p, 40, FidelityKind::Superposed, 8, &cfg)?;
    let traj = &run.trajectory;
    let odd = (0..traj.len())
        .flat_map(|k| (1..traj.dim_mech()).step_by(2).map(move |m| (k, m)))
        .map(|(k, m)| traj.a[k][m].norm().max(traj.b[k][m].norm()))
        .fold(0.0, f64::max);
    Ok(CheckOutcome::new(
        "closed evolution norm and parity",
        traj.max_norm_drift < 1e-6 && odd < 1e-12,
        format!("norm drift {:.2e}, odd amplitudes {odd:.2e}", traj.max_norm_drift),
    ))
}

fn wigner_normalization() -> Result<CheckOutcome> {
    let sv = squeezed_vacuum_state(C64::from_polar(0.5, 1.1), 60)?.state;
    let w = wigner_pure(&sv, &GridSpec::square(4.0, 81))?;
    let norm = (w.integral() - 1.0).abs();
    let mixed = DensityMatrix::maximally_mixed(HilbertSpec::mechanical(6)?);
    let wm = wigner_numeric(&mixed, &GridSpec::square(4.0, 81))?;
    let norm_mixed = (wm.integral() - 1.0).abs();
    let fock = QuantumState::basis(HilbertSpec::mechanical(10)?, 0, 0, 3)?;
    let w3 = wigner_pure(&fock, &GridSpec::square(1.0, 3))?;
    let origin = (w3.get(1, 1) + std::f64::consts::FRAC_2_PI).abs();
    let p = SystemParams::reference();
    let tm = t_max_squeeze(&p, 1)?;
    let analytic = wigner_superposed_analytic(
        Side::L,
        &p,
        tm,
        &GridSpec::square(3.0, 21),
        DEFAULT_CUTOFF,
        Interference::Included,
    )?;
    let imag = analytic.imag_residue;
    Ok(CheckOutcome::new(
        "wigner normalization and realness",
        norm < 1e-3 && norm_mixed < 1e-3 && origin < 1e-12 && imag < 1e-9,
        format!(
            "integral defects {norm:.2e} and {norm_mixed:.2e}, odd Fock parity at origin {origin:.2e}, \
             analytic imaginary residue {imag:.2e}"
        ),
    ))
}

fn open_invariants() -> Result<CheckOutcome> {
    let p = SystemParams::reference();
    let cfg = IntegratorConfig::for_params(&p, 40);
    let mut purities = Vec::new();
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    for gamma_c in [0.1, 0.6, 1.2] {
        let diss = DissipationParams::new(gamma_c, 1e-4, 1.0)?;
        let run = run_open_to_max_squeeze(&p, &diss, PURITY_DIM_MECH, 1, &cfg)?;
        trace = trace.max(run.summary.max_trace_drift);
        herm = herm.max(run.summary.max_hermiticity_defect);
        min_eig = min_eig.min(run.summary.min_eigenvalue);
        purities.push(run.final_state.purity());
    }
    let monotone = purities.windows(2).all(|w| w[1] < w[0]);
    let passed = trace < 1e-8 && herm < 1e-10 && min_eig > -1e-6 && monotone;
    Ok(CheckOutcome::new(
        "open evolution trace, hermiticity, positivity, purity",
        passed,
        format!(
            "trace drift {trace:.2e}, hermiticity {herm:.2e}, min eigenvalue {min_eig:.2e}, \
             purity at T_M for gamma_c 0.1/0.6/1.2 = {:.4}/{:.4}/{:.4} ({})",
            purities[0],
            purities[1],
            purities[2],
            if monotone { "monotone" } else { "not monotone" }
        ),
    ))
}
