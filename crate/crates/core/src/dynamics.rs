//! Closed-system evolution: the single-photon amplitude equations, a
//! generic Schrödinger integrator, fidelities and quadrature diagnostics.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::analytic::{analytic_state_single, analytic_state_superposed, squeeze_parameters, t_max_squeeze};
use crate::fock::{inner_product, DensityMatrix, HilbertSpec, Operator, QuantumState};
use crate::model::{ModelHamiltonian, Scheme, SystemParams};
use crate::ode::{check_times, integrate, IntegratorConfig};
use crate::{Error, Result};

pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
pub const EDGE_POPULATION_LIMIT: f64 = 1e-6;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Amplitudes `A_m(t)` on `|1,0,m⟩` and `B_m(t)` on `|0,1,m⟩`, lab frame.
#[derive(Clone, Debug)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub a: Vec<Vec<C64>>,
    pub b: Vec<Vec<C64>>,
    pub max_norm_drift: f64,
    /// Largest population found on the two highest Fock levels.
    pub max_edge_population: f64,
}

impl AmplitudeTrajectory {
    pub fn dim_mech(&self) -> usize {
        self.a.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Full state on `2 × 2 × dim_mech`.
    pub fn state(&self, k: usize) -> QuantumState {
        let spec = HilbertSpec::single_photon(self.dim_mech()).expect("trajectory has dim_mech >= 2");
        let mut amps = vec![ZERO; spec.total()];
        for m in 0..spec.dim_mech {
            amps[spec.index(1, 0, m)] = self.a[k][m];
            amps[spec.index(0, 1, m)] = self.b[k][m];
        }
        QuantumState::unnormalized(spec, amps).expect("length matches spec")
    }

    /// Mechanical state after tracing out the cavities.
    pub fn mechanical_density(&self, k: usize) -> DensityMatrix {
        let n = self.dim_mech();
        let a = nalgebra::DVector::from_column_slice(&self.a[k]);
        let b = nalgebra::DVector::from_column_slice(&self.b[k]);
        let rho: DMatrix<C64> = &a * a.adjoint() + &b * b.adjoint();
        DensityMatrix::new(HilbertSpec::mechanical(n).expect("n >= 1"), rho).expect("square")
    }

    pub fn norm(&self, k: usize) -> f64 {
        self.a[k].iter().chain(&self.b[k]).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

fn edge_population(a: &[C64], b: &[C64]) -> f64 {
    let n = a.len();
    let lo = n.saturating_sub(2);
    (lo..n).map(|m| a[m].norm_sqr() + b[m].norm_sqr()).sum()
}

/// Interaction-picture phases `p_A(m, t)`, `p_B(m, t)`: the integrated
/// diagonal of each block, so that `A_m = e^{−i p_A} x_m`.
pub(crate) struct BlockPhases {
    omega_c: f64,
    omega_m: f64,
    g0: f64,
    delta0: f64,
    j: f64,
}

impl BlockPhases {
    pub(crate) fn new(p: &SystemParams) -> Self {
        Self { omega_c: p.omega_c, omega_m: p.omega_m, g0: p.g0, delta0: p.delta0, j: p.j }
    }

    pub(crate) fn modulation(&self, t: f64) -> f64 {
        self.delta0 * (2.0 * self.j * t).sin() / (2.0 * self.j)
    }

    pub(crate) fn a(&self, m: usize, t: f64) -> f64 {
        (self.omega_c + self.g0) * t + m as f64 * (self.omega_m + 2.0 * self.g0) * t + self.modulation(t)
    }

    pub(crate) fn b(&self, m: usize, t: f64) -> f64 {
        (self.omega_c - self.g0) * t + m as f64 * (self.omega_m - 2.0 * self.g0) * t - self.modulation(t)
    }
}

/// Couplings `√((m+1)(m+2))` between `m` and `m+2`.
fn two_phonon_couplings(n: usize) -> Vec<f64> {
    (0..n).map(|m| if m + 2 < n { ((m + 1) as f64 * (m + 2) as f64).sqrt() } else { 0.0 }).collect()
}

/// Integrates the single-photon amplitude equations of the
/// frequency-modulated scheme on `dim_mech = a0.len()` Fock levels.
pub fn integrate_amplitudes(
    a0: &[C64],
    b0: &[C64],
    params: &SystemParams,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<AmplitudeTrajectory> {
    params.validate()?;
    if params.scheme != Scheme::FrequencyModulated {
        return Err(Error::Scheme("amplitude equations are written for the frequency-modulated scheme".into()));
    }
    let n = a0.len();
    if b0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b0.len() });
    }
    if n < 2 {
        return Err(Error::InvalidDimension(format!("need at least 2 mechanical levels, got {n}")));
    }
    let norm0: f64 = a0.iter().chain(b0).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm0 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("initial amplitudes have norm {norm0}, expected 1")));
    }
    check_times(times)?;

    let up = two_phonon_couplings(n);
    let (j, g0) = (params.j, params.g0);
    let ph = BlockPhases::new(params);
    let ip = cfg.interaction_picture;
    let t0 = times[0];

    let to_frame = |t: f64, y: &mut [C64]| {
        if ip {
            for m in 0..n {
                y[m] *= C64::from_polar(1.0, ph.a(m, t));
                y[n + m] *= C64::from_polar(1.0, ph.b(m, t));
            }
        }
    };
    let from_frame = |t: f64, y: &[C64]| -> (Vec<C64>, Vec<C64>) {
        if ip {
            (
                (0..n).map(|m| y[m] * C64::from_polar(1.0, -ph.a(m, t))).collect(),
                (0..n).map(|m| y[n + m] * C64::from_polar(1.0, -ph.b(m, t))).collect(),
            )
        } else {
            (y[..n].to_vec(), y[n..].to_vec())
        }
    };

    let mut y0: Vec<C64> = a0.iter().chain(b0).copied().collect();
    to_frame(t0, &mut y0);

    let mut phases = vec![ZERO; n];
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let (x, z) = y.split_at(n);
        let (dx, dz) = dy.split_at_mut(n);
        let mi = C64::new(0.0, -1.0);
        if ip {
            let s = ph.modulation(t);
            let ea = C64::from_polar(1.0, 2.0 * (params.omega_m + 2.0 * g0) * t);
            let eb = C64::from_polar(1.0, 2.0 * (params.omega_m - 2.0 * g0) * t);
            for (m, c) in phases.iter_mut().enumerate() {
                *c = C64::from_polar(1.0, 2.0 * g0 * (2 * m + 1) as f64 * t + 2.0 * s);
            }
            for m in 0..n {
                let mut qa = ZERO;
                let mut qb = ZERO;
                if m >= 2 {
                    qa += ea * x[m - 2] * up[m - 2];
                    qb += eb * z[m - 2] * up[m - 2];
                }
                if m + 2 < n {
                    qa += ea.conj() * x[m + 2] * up[m];
                    qb += eb.conj() * z[m + 2] * up[m];
                }
                dx[m] = mi * (phases[m] * z[m] * j + qa * g0);
                dz[m] = mi * (phases[m].conj() * x[m] * j - qb * g0);
            }
        } else {
            let wl = params.omega_c + params.delta0 * (2.0 * j * t).cos();
            let wr = params.omega_c - params.delta0 * (2.0 * j * t).cos();
            for m in 0..n {
                let mf = m as f64;
                let mut qa = x[m] * (2.0 * mf + 1.0);
                let mut qb = z[m] * (2.0 * mf + 1.0);
                if m >= 2 {
                    qa += x[m - 2] * up[m - 2];
                    qb += z[m - 2] * up[m - 2];
                }
                if m + 2 < n {
                    qa += x[m + 2] * up[m];
                    qb += z[m + 2] * up[m];
                }
                dx[m] = mi * (x[m] * (wl + mf * params.omega_m) + z[m] * j + qa * g0);
                dz[m] = mi * (z[m] * (wr + mf * params.omega_m) + x[m] * j - qb * g0);
            }
        }
    };

    let mut traj = AmplitudeTrajectory {
        times: Vec::with_capacity(times.len()),
        a: Vec::with_capacity(times.len()),
        b: Vec::with_capacity(times.len()),
        max_norm_drift: 0.0,
        max_edge_population: 0.0,
    };
    integrate(y0, times, cfg, rhs, |_, t, y| {
        let (a, b) = from_frame(t, y);
        let norm: f64 = a.iter().chain(&b).map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let drift = (norm - 1.0).abs();
        traj.max_norm_drift = traj.max_norm_drift.max(drift);
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Accuracy(format!("norm drift {drift:.3e} at t={t}")));
        }
        let edge = edge_population(&a, &b);
        traj.max_edge_population = traj.max_edge_population.max(edge);
        if edge > EDGE_POPULATION_LIMIT {
            return Err(Error::Truncation(format!("population {edge:.3e} on the top Fock levels of {n} at t={t}")));
        }
        traj.times.push(t);
        traj.a.push(a);
        traj.b.push(b);
        Ok(())
    })?;
    Ok(traj)
}

/// A Hamiltonian that can be applied at any time.
pub trait TimeDependentHamiltonian {
    fn dim(&self) -> usize;

    /// `out = H(t) ψ`.
    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]);

    /// Fills the real diagonal `d(t)` removed by the interaction picture and
    /// its integral `∫₀ᵗ d`. Any choice gives the same physics.
    fn frame(&self, t: f64, rate: &mut [f64], phase: &mut [f64]);
}

impl TimeDependentHamiltonian for ModelHamiltonian {
    fn dim(&self) -> usize {
        self.spec().total()
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        ModelHamiltonian::apply(self, t, psi, out)
    }

    fn frame(&self, t: f64, rate: &mut [f64], phase: &mut [f64]) {
        self.diagonal_into(t, rate);
        self.integrated_diagonal_into(t, phase);
    }
}

/// Wraps a closure returning `H(t)`; the frame removes the static diagonal
/// of `H(0)`.
pub struct OperatorFactory<F> {
    build: F,
    dim: usize,
    reference: Vec<f64>,
}

impl<F: Fn(f64) -> Operator> OperatorFactory<F> {
    pub fn new(build: F) -> Self {
        let h0 = build(0.0);
        let reference = h0.diagonal().iter().map(|z| z.re).collect();
        Self { dim: h0.dim(), build, reference }
    }
}

impl<F: Fn(f64) -> Operator> TimeDependentHamiltonian for OperatorFactory<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        (self.build)(t).apply_into(psi, out)
    }

    fn frame(&self, t: f64, rate: &mut [f64], phase: &mut [f64]) {
        rate.copy_from_slice(&self.reference);
        for (p, r) in phase.iter_mut().zip(&self.reference) {
            *p = r * t;
        }
    }
}

#[derive(Clone, Debug)]
pub struct StateTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<QuantumState>,
    pub max_norm_drift: f64,
}

/// Solves `i ∂ψ/∂t = H(t) ψ`.
pub fn integrate_schrodinger<H: TimeDependentHamiltonian + ?Sized>(
    hamiltonian: &H,
    psi0: &QuantumState,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<StateTrajectory> {
    let dim = hamiltonian.dim();
    let spec = psi0.spec();
    if spec.total() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: spec.total() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("initial state has norm {}", psi0.norm())));
    }
    check_times(times)?;
    let ip = cfg.interaction_picture;
    let t0 = times[0];

    let mut rate = vec![0.0; dim];
    let mut phase = vec![0.0; dim];
    let mut lab = vec![ZERO; dim];
    let mut hpsi = vec![ZERO; dim];

    let mut y0 = psi0.amplitudes().to_vec();
    if ip {
        hamiltonian.frame(t0, &mut rate, &mut phase);
        for (y, p) in y0.iter_mut().zip(&phase) {
            *y *= C64::from_polar(1.0, *p);
        }
    }

    let mut out_phase = vec![0.0; dim];
    let mut out_rate = vec![0.0; dim];
    let mut traj = StateTrajectory { times: Vec::new(), states: Vec::new(), max_norm_drift: 0.0 };
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let mi = C64::new(0.0, -1.0);
        if ip {
            hamiltonian.frame(t, &mut rate, &mut phase);
            for k in 0..dim {
                lab[k] = y[k] * C64::from_polar(1.0, -phase[k]);
            }
            hamiltonian.apply(t, &lab, &mut hpsi);
            for k in 0..dim {
                dy[k] = mi * C64::from_polar(1.0, phase[k]) * (hpsi[k] - lab[k] * rate[k]);
            }
        } else {
            hamiltonian.apply(t, y, &mut hpsi);
            for k in 0..dim {
                dy[k] = mi * hpsi[k];
            }
        }
    };
    integrate(y0, times, cfg, rhs, |_, t, y| {
        let amps: Vec<C64> = if ip {
            hamiltonian.frame(t, &mut out_rate, &mut out_phase);
            y.iter().zip(&out_phase).map(|(v, p)| v * C64::from_polar(1.0, -p)).collect()
        } else {
            y.to_vec()
        };
        let state = QuantumState::unnormalized(spec, amps)?;
        let drift = (state.norm() - 1.0).abs();
        traj.max_norm_drift = traj.max_norm_drift.max(drift);
        if drift > NORM_DRIFT_LIMIT {
            return Err(Error::Accuracy(format!("norm drift {drift:.3e} at t={t}")));
        }
        traj.times.push(t);
        traj.states.push(state);
        Ok(())
    })?;
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FidelityKind {
    /// Initial state `|1,0,0⟩`.
    Single,
    /// Initial state `(|10⟩ + |01⟩)|0⟩/√2`.
    Superposed,
}

impl FidelityKind {
    /// Initial amplitudes `(A_m(0), B_m(0))`.
    pub fn initial_amplitudes(&self, dim_mech: usize) -> (Vec<C64>, Vec<C64>) {
        let mut a = vec![ZERO; dim_mech];
        let mut b = vec![ZERO; dim_mech];
        match self {
            FidelityKind::Single => a[0] = C64::new(1.0, 0.0),
            FidelityKind::Superposed => {
                a[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                b[0] = a[0];
            }
        }
        (a, b)
    }
}

/// Analytic target state at `t` on `2 × 2 × dim_mech`.
pub fn analytic_target(t: f64, params: &SystemParams, kind: FidelityKind, dim_mech: usize) -> Result<QuantumState> {
    let spec = HilbertSpec::single_photon(dim_mech)?;
    match kind {
        FidelityKind::Single => analytic_state_single(t, params, spec),
        FidelityKind::Superposed => Ok(analytic_state_superposed(t, params, spec)?.full),
    }
}

/// `|⟨Ψ(t)|ψ(t)⟩|²` at every stored time.
pub fn fidelity_vs_analytic(traj: &AmplitudeTrajectory, params: &SystemParams, kind: FidelityKind) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|k| {
            let target = analytic_target(traj.times[k], params, kind, traj.dim_mech())?;
            Ok(inner_product(&traj.state(k), &target)?.norm_sqr())
        })
        .collect()
}

/// First and second moments of `b` used by every quadrature diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderMoments {
    pub mean_b: C64,
    pub mean_b2: C64,
    pub mean_n: f64,
}

impl LadderMoments {
    pub fn of_state(amps: &[C64]) -> Self {
        let n = amps.len();
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let mut mean_b = ZERO;
        let mut mean_b2 = ZERO;
        let mut mean_n = 0.0;
        for m in 0..n {
            mean_n += m as f64 * amps[m].norm_sqr();
            if m >= 1 {
                mean_b += amps[m - 1].conj() * amps[m] * (m as f64).sqrt();
            }
            if m >= 2 {
                mean_b2 += amps[m - 2].conj() * amps[m] * ((m * (m - 1)) as f64).sqrt();
            }
        }
        Self { mean_b: mean_b / norm, mean_b2: mean_b2 / norm, mean_n: mean_n / norm }
    }

    pub fn of_density(rho: &DMatrix<C64>) -> Self {
        let n = rho.nrows();
        let tr = rho.trace().re;
        let mut mean_b = ZERO;
        let mut mean_b2 = ZERO;
        let mut mean_n = 0.0;
        for m in 0..n {
            mean_n += m as f64 * rho[(m, m)].re;
            // ⟨b⟩ = Σ √m ρ_{m, m−1}
            if m >= 1 {
                mean_b += rho[(m, m - 1)] * (m as f64).sqrt();
            }
            if m >= 2 {
                mean_b2 += rho[(m, m - 2)] * ((m * (m - 1)) as f64).sqrt();
            }
        }
        Self { mean_b: mean_b / tr, mean_b2: mean_b2 / tr, mean_n: mean_n / tr }
    }

    /// `Var X_φ` with `X_φ = (b e^{−iφ} + b† e^{iφ})/2`.
    pub fn variance(&self, phi: f64) -> f64 {
        let c = self.mean_b2 - self.mean_b * self.mean_b;
        let spread = self.mean_n - self.mean_b.norm_sqr();
        0.25 * (1.0 + 2.0 * spread + 2.0 * (c * C64::from_polar(1.0, -2.0 * phi)).re)
    }

    /// Minimal variance over φ and the angle in `[0, π)` attaining it.
    pub fn min_variance(&self) -> (f64, f64) {
        let c = self.mean_b2 - self.mean_b * self.mean_b;
        let spread = self.mean_n - self.mean_b.norm_sqr();
        let v = 0.25 * (1.0 + 2.0 * spread - 2.0 * c.norm());
        let angle = ((c.arg() + std::f64::consts::PI) / 2.0).rem_euclid(std::f64::consts::PI);
        (v, angle)
    }
}

/// Mechanical input for the quadrature diagnostics.
#[derive(Clone, Copy, Debug)]
pub enum Mechanical<'a> {
    State(&'a QuantumState),
    Density(&'a DensityMatrix),
}

impl Mechanical<'_> {
    fn moments(&self) -> Result<LadderMoments> {
        match self {
            Mechanical::State(s) => {
                if !s.spec().is_mechanical() {
                    return Err(Error::InvalidState("quadratures need a mechanical-only state".into()));
                }
                Ok(LadderMoments::of_state(s.amplitudes()))
            }
            Mechanical::Density(r) => {
                if !r.spec().is_mechanical() {
                    return Err(Error::InvalidState("quadratures need a mechanical-only density matrix".into()));
                }
                Ok(LadderMoments::of_density(r.entries()))
            }
        }
    }
}

/// Variance of `X_φ = (b e^{−iφ} + b† e^{iφ})/2`; the vacuum gives 1/4 and
/// a squeezed vacuum `|Z⟩` is minimal at `φ = arg(Z)/2`.
pub fn quadrature_variance(mech: Mechanical<'_>, phi: f64) -> Result<f64> {
    Ok(mech.moments()?.variance(phi))
}

/// `(min_φ Var X_φ, argmin φ)`.
pub fn min_quadrature_variance(mech: Mechanical<'_>) -> Result<(f64, f64)> {
    Ok(mech.moments()?.min_variance())
}

/// Outcome of one closed-system run from the chosen initial state to `T_M`.
#[derive(Clone, Debug)]
pub struct ClosedRun {
    pub t_max: f64,
    pub trajectory: AmplitudeTrajectory,
    pub fidelity: Vec<f64>,
    /// Minimal quadrature variance of the reduced mechanical state at `T_M`.
    pub min_variance: f64,
    /// `e^{−2R(T_M)}/4`.
    pub analytic_variance: f64,
}

impl ClosedRun {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("non-empty trajectory")
    }
}

/// Integrates from the initial state of `kind` to `T_M` on `samples + 1`
/// equally spaced times.
pub fn run_to_max_squeeze(
    params: &SystemParams,
    dim_mech: usize,
    kind: FidelityKind,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<ClosedRun> {
    let t_max = t_max_squeeze(params, 1)?;
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|k| t_max * k as f64 / samples as f64).collect();
    let (a0, b0) = kind.initial_amplitudes(dim_mech);
    let trajectory = integrate_amplitudes(&a0, &b0, params, &times, cfg)?;
    let fidelity = fidelity_vs_analytic(&trajectory, params, kind)?;
    let last = trajectory.len() - 1;
    let rho = trajectory.mechanical_density(last);
    let (min_variance, _) = min_quadrature_variance(Mechanical::Density(&rho))?;
    let modulus = squeeze_parameters(t_max, params, 1)?.modulus;
    Ok(ClosedRun { t_max, trajectory, fidelity, min_variance, analytic_variance: 0.25 * (-2.0 * modulus).exp() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::squeezed_vacuum_state;
    use crate::fock::number_operator;

    fn no_coupling(j: f64) -> SystemParams {
        let mut p = SystemParams::frequency_modulated(j, 0.0, 1.0);
        p.g0 = 1e-300;
        p
    }

    #[test]
    fn rabi_oracle() {
        let mut p = no_coupling(3.0);
        // g0 must stay positive; its effect at 1e-300 is nil
        p.omega_m = 5.0;
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
        let (a0, b0) = FidelityKind::Single.initial_amplitudes(4);
        for ip in [true, false] {
            let cfg = IntegratorConfig::rk4(1e-3).with_interaction_picture(ip);
            let traj = integrate_amplitudes(&a0, &b0, &p, &times, &cfg).unwrap();
            for (k, &t) in traj.times.iter().enumerate() {
                assert!((traj.a[k][0].norm_sqr() - (3.0 * t).cos().powi(2)).abs() < 1e-8);
                assert!((traj.b[k][0].norm_sqr() - (3.0 * t).sin().powi(2)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn parity_and_norm_at_working_point() {
        let p = SystemParams::reference();
        let cfg = IntegratorConfig::for_params(&p, 40);
        let run = run_to_max_squeeze(&p, 60, FidelityKind::Single, 10, &cfg).unwrap();
        for k in 0..run.trajectory.len() {
            for m in (1..60).step_by(2) {
                assert!(run.trajectory.a[k][m].norm() < 1e-12 && run.trajectory.b[k][m].norm() < 1e-12);
            }
            assert!((run.trajectory.norm(k) - 1.0).abs() < NORM_DRIFT_LIMIT);
        }
        assert!((run.fidelity[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frames_agree() {
        let p = SystemParams::frequency_modulated(40.0, 10.0, 1.13);
        let times = [0.0, 0.25, 0.5];
        let (a0, b0) = FidelityKind::Superposed.initial_amplitudes(24);
        let ipc = IntegratorConfig::rk4(2e-4);
        let lab = IntegratorConfig::rk4(2e-5).with_interaction_picture(false);
        let t1 = integrate_amplitudes(&a0, &b0, &p, &times, &ipc).unwrap();
        let t2 = integrate_amplitudes(&a0, &b0, &p, &times, &lab).unwrap();
        for m in 0..24 {
            assert!((t1.a[2][m] - t2.a[2][m]).norm() < 1e-8);
            assert!((t1.b[2][m] - t2.b[2][m]).norm() < 1e-8);
        }
    }

    #[test]
    fn truncation_and_input_errors() {
        let p = SystemParams::reference();
        let cfg = IntegratorConfig::for_params(&p, 40);
        let (a0, b0) = FidelityKind::Single.initial_amplitudes(8);
        let err = integrate_amplitudes(&a0, &b0, &p, &[0.0, 2.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
        let bad = vec![C64::new(2.0, 0.0); 8];
        assert!(matches!(integrate_amplitudes(&bad, &b0, &p, &[0.0, 1.0], &cfg), Err(Error::InvalidState(_))));
        let cm = SystemParams::coupling_modulated(1.5, 100.0, 130.0, 1, 1.0);
        assert!(matches!(integrate_amplitudes(&a0, &b0, &cm, &[0.0, 1.0], &cfg), Err(Error::Scheme(_))));
    }

    #[test]
    fn schrodinger_constant_diagonal() {
        let energies = [0.0, 1.3, -2.1, 7.5];
        let h = Operator::from_real_diagonal(&energies);
        let spec = HilbertSpec::mechanical(4).unwrap();
        let psi0 = QuantumState::new(spec, vec![C64::new(0.5, 0.0); 4]).unwrap();
        let times = [0.0, 0.7, 1.9];
        for ip in [true, false] {
            let cfg = IntegratorConfig::rk4(2e-4).with_interaction_picture(ip);
            let traj = integrate_schrodinger(&OperatorFactory::new(|_| h.clone()), &psi0, &times, &cfg).unwrap();
            for (k, &t) in times.iter().enumerate() {
                for (e, a) in energies.iter().zip(traj.states[k].amplitudes()) {
                    assert!((a - C64::from_polar(0.5, -e * t)).norm() < 1e-10, "ip={ip} t={t} a={a} e={e}");
                }
            }
        }
        let zero = Operator::zeros(4);
        let traj =
            integrate_schrodinger(&OperatorFactory::new(|_| zero.clone()), &psi0, &times, &IntegratorConfig::rk4(0.1))
                .unwrap();
        assert_eq!(traj.states[2], psi0);
    }

    #[test]
    fn schrodinger_matches_amplitude_equations() {
        let p = SystemParams::frequency_modulated(40.0, 10.0, 1.13);
        let spec = HilbertSpec::single_photon(20).unwrap();
        let h = ModelHamiltonian::for_params(&p, spec).unwrap();
        let psi0 = QuantumState::basis(spec, 1, 0, 0).unwrap();
        let times = [0.0, 0.3, 0.6];
        let cfg = IntegratorConfig::rk4(2e-4);
        let s = integrate_schrodinger(&h, &psi0, &times, &cfg).unwrap();
        let (a0, b0) = FidelityKind::Single.initial_amplitudes(20);
        let a = integrate_amplitudes(&a0, &b0, &p, &times, &cfg).unwrap();
        for k in 0..times.len() {
            let diff: f64 = s.states[k]
                .amplitudes()
                .iter()
                .zip(a.state(k).amplitudes())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-8, "k={k} diff={diff}");
        }
    }

    #[test]
    fn variance_oracles() {
        let vac = QuantumState::basis(HilbertSpec::mechanical(10).unwrap(), 0, 0, 0).unwrap();
        for phi in [0.0, 0.4, 2.0] {
            assert!((quadrature_variance(Mechanical::State(&vac), phi).unwrap() - 0.25).abs() < 1e-15);
        }
        let z = C64::from_polar(1.39823, 0.9);
        let sv = squeezed_vacuum_state(z, 160).unwrap().state;
        let squeezed = quadrature_variance(Mechanical::State(&sv), 0.45).unwrap();
        assert!((squeezed - 0.25 * (-2.0 * 1.39823f64).exp()).abs() < 1e-8);
        let anti = quadrature_variance(Mechanical::State(&sv), (0.9 + std::f64::consts::PI) / 2.0).unwrap();
        assert!((anti - 0.25 * (2.0 * 1.39823f64).exp()).abs() < 1e-6);
        let (vmin, angle) = min_quadrature_variance(Mechanical::State(&sv)).unwrap();
        assert!((vmin - squeezed).abs() < 1e-12 && (angle - 0.45).abs() < 1e-9);

        // density-matrix path against the explicit operator expectation
        let rho = DensityMatrix::from_pure(&sv);
        let (b, bd) = crate::fock::ladder_operators(160).unwrap();
        let phi = 0.3;
        let x = b.scale(C64::from_polar(0.5, -phi)).add(&bd.scale(C64::from_polar(0.5, phi)));
        let x2 = x.matmul(&x);
        let mean = rho.expectation(&x).unwrap().re;
        let var_op = rho.expectation(&x2).unwrap().re - mean * mean;
        let var = quadrature_variance(Mechanical::Density(&rho), phi).unwrap();
        // truncated b b† differs only at the top level, which is empty here
        assert!((var - var_op).abs() < 1e-10);
        let _ = number_operator(2);
    }
}
