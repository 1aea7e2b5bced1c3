//! Closed-form squeeze propagator and the analytic single-photon and
//! superposed states of the effective theory.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::fock::{HilbertSpec, QuantumState};
use crate::model::{Scheme, SystemParams};
use crate::{Error, Result};

/// Propagator parameters at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezeRecord {
    pub t: f64,
    /// `r = 2g·N_LR`.
    pub r: f64,
    /// `χ = √(δ² − r²)`, imaginary below the critical detuning.
    pub chi: C64,
    pub eta: f64,
    pub xi: C64,
    /// Squeeze modulus `R = |ξ| = |Z|`.
    pub modulus: f64,
    /// `Φ = arg Z` in `(−π, π]`.
    pub phase: f64,
    /// `Z = ξ e^{−2i(ω_M − δ)t}`.
    pub z: C64,
    pub theta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Periodic,
    Critical,
    Growing,
}

fn regime(delta: f64, r: f64) -> (Regime, f64) {
    let chi2 = delta * delta - r * r;
    let scale = (delta * delta).max(r * r).max(f64::MIN_POSITIVE);
    if chi2.abs() <= 1e-15 * scale {
        (Regime::Critical, 0.0)
    } else if chi2 > 0.0 {
        (Regime::Periodic, chi2.sqrt())
    } else {
        (Regime::Growing, (-chi2).sqrt())
    }
}

/// Squeeze parameters of the effective theory for photon inversion `n_lr`.
///
/// `η` follows the continuous branch of `tan η = p tan(χt)/(2χ)`, so it
/// passes through `±π/2` at `χt = π/2` rather than jumping by π.
pub fn squeeze_parameters(t: f64, params: &SystemParams, n_lr: i32) -> Result<SqueezeRecord> {
    params.validate()?;
    let (g, delta) = params.effective()?;
    let r = 2.0 * g * n_lr as f64;
    let p = -2.0 * delta;
    let (kind, k) = regime(delta, r);
    let (s, eta, chi) = match kind {
        Regime::Periodic => {
            let (sn, cs) = (k * t).sin_cos();
            let principal = (p * sn).atan2(2.0 * k * cs);
            let anchor = p.signum() * k * t;
            let eta = principal + 2.0 * PI * ((anchor - principal) / (2.0 * PI)).round();
            (sn / k, eta, C64::new(k, 0.0))
        }
        Regime::Critical => (t, (0.5 * p * t).atan(), C64::new(0.0, 0.0)),
        Regime::Growing => ((k * t).sinh() / k, (p * (k * t).tanh() / (2.0 * k)).atan(), C64::new(0.0, k)),
    };
    let amp = (r * s).asinh();
    let xi = C64::from_polar(1.0, eta + FRAC_PI_2) * amp;
    let z = xi * C64::from_polar(1.0, -2.0 * (params.omega_m - delta) * t);
    let theta = -(delta * t + eta - params.delta0 * t) / 2.0;
    let phase = if z == C64::new(0.0, 0.0) { 0.0 } else { canonical_phase(z.arg()) };
    Ok(SqueezeRecord { t, r, chi, eta, xi, modulus: xi.norm(), phase, z, theta })
}

fn canonical_phase(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// `T_M = π/(2χ)`, the first maximum of the periodic regime.
pub fn t_max_squeeze(params: &SystemParams, n_lr: i32) -> Result<f64> {
    params.validate()?;
    let (g, delta) = params.effective()?;
    let r = 2.0 * g * n_lr as f64;
    match regime(delta, r) {
        (Regime::Periodic, chi) => Ok(PI / (2.0 * chi)),
        _ => Err(Error::NoMaximum(format!(
            "|delta| = {} <= |r| = {}: squeezing grows monotonically",
            delta.abs(),
            r.abs()
        ))),
    }
}

/// `R(T_M) = asinh(|r|/χ)`.
pub fn max_squeeze_modulus(params: &SystemParams, n_lr: i32) -> Result<f64> {
    let tm = t_max_squeeze(params, n_lr)?;
    Ok(squeeze_parameters(tm, params, n_lr)?.modulus)
}

/// `−10 log₁₀ e^{−2R} = 20 R log₁₀ e`.
pub fn squeezing_db(modulus: f64) -> Result<f64> {
    if !(modulus >= 0.0) || !modulus.is_finite() {
        return Err(Error::Domain(format!("squeeze modulus must be finite and >= 0, got {modulus}")));
    }
    Ok(20.0 * modulus * std::f64::consts::LOG10_E)
}

/// Squeezed vacuum truncated to `dim_mech` Fock levels.
#[derive(Clone, Debug)]
pub struct SqueezedVacuum {
    /// Renormalized over the truncated support.
    pub state: QuantumState,
    /// `Σ |S_m|²` over the levels `2m ≥ dim_mech`.
    pub tail_mass: f64,
    pub warning: Option<String>,
}

pub const TAIL_WARNING_THRESHOLD: f64 = 1e-6;

/// Unnormalized expansion amplitudes `S_m(Z)` placed on levels `2m`.
pub fn squeezed_vacuum_amplitudes(z: C64, dim_mech: usize) -> Vec<C64> {
    let modulus = z.norm();
    let phase = if modulus == 0.0 { 0.0 } else { z.arg() };
    let th = modulus.tanh();
    let mut out = vec![C64::new(0.0, 0.0); dim_mech];
    // c_m = √((2m)!)/(2^m m!) tanh^m R, built by ratios
    let mut c = 1.0 / modulus.cosh().sqrt();
    for m in 0..dim_mech.div_ceil(2) {
        if m > 0 {
            let mm = m as f64;
            c *= th * ((2.0 * mm) * (2.0 * mm - 1.0)).sqrt() / (2.0 * mm);
        }
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        out[2 * m] = C64::from_polar(sign * c, m as f64 * phase);
    }
    out
}

fn squeezed_tail_mass(modulus: f64, dim_mech: usize) -> f64 {
    let t2 = modulus.tanh().powi(2);
    let first = dim_mech.div_ceil(2);
    // |S_m|² = t2^m c_m² / cosh R with c_m² = (2m)!/(4^m m!²)
    let mut w = 1.0 / modulus.cosh();
    for m in 1..=first {
        let mm = m as f64;
        w *= t2 * (2.0 * mm - 1.0) / (2.0 * mm);
    }
    let mut tail = 0.0;
    let mut m = first;
    for _ in 0..50_000_000usize {
        tail += w;
        m += 1;
        let mm = m as f64;
        w *= t2 * (2.0 * mm - 1.0) / (2.0 * mm);
        if w <= 1e-18 * tail || w == 0.0 {
            return tail;
        }
    }
    tail
}

pub fn squeezed_vacuum_state(z: C64, dim_mech: usize) -> Result<SqueezedVacuum> {
    if dim_mech < 2 {
        return Err(Error::InvalidDimension(format!("squeezed vacuum needs dim_mech >= 2, got {dim_mech}")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("squeeze parameter must be finite, got {z}")));
    }
    let amps = squeezed_vacuum_amplitudes(z, dim_mech);
    let tail_mass = squeezed_tail_mass(z.norm(), dim_mech);
    let warning = (tail_mass > TAIL_WARNING_THRESHOLD)
        .then(|| format!("squeezed vacuum tail mass {tail_mass:.3e} beyond Fock level {dim_mech}"));
    let state = QuantumState::new(HilbertSpec::mechanical(dim_mech)?, amps)?;
    Ok(SqueezedVacuum { state, tail_mass, warning })
}

fn require_frequency_modulated(params: &SystemParams) -> Result<()> {
    match params.scheme {
        Scheme::FrequencyModulated => Ok(()),
        _ => Err(Error::Scheme("analytic cavity states are defined for the frequency-modulated scheme".into())),
    }
}

fn require_two_level_cavities(spec: HilbertSpec) -> Result<()> {
    if spec.dim_cavity_l < 2 || spec.dim_cavity_r < 2 {
        return Err(Error::InvalidDimension("single-photon states need cavity dimensions >= 2".into()));
    }
    Ok(())
}

/// Analytic state from `|1,0,0⟩`:
/// `e^{−i(ω_c t + θ)} [cos Jt |10⟩ − i sin Jt |01⟩] |Z(t)⟩`.
pub fn analytic_state_single(t: f64, params: &SystemParams, spec: HilbertSpec) -> Result<QuantumState> {
    require_frequency_modulated(params)?;
    require_two_level_cavities(spec)?;
    let rec = squeeze_parameters(t, params, 1)?;
    let z = squeezed_vacuum_state(rec.z, spec.dim_mech)?;
    let global = C64::from_polar(1.0, -(params.omega_c * t + rec.theta));
    let (s, c) = (params.j * t).sin_cos();
    let mut amps = vec![C64::new(0.0, 0.0); spec.total()];
    for (m, &zm) in z.state.amplitudes().iter().enumerate() {
        amps[spec.index(1, 0, m)] = global * c * zm;
        amps[spec.index(0, 1, m)] = global * C64::new(0.0, -s) * zm;
    }
    QuantumState::unnormalized(spec, amps)
}

/// Analytic superposed state and its two normalized branch states.
#[derive(Clone, Debug)]
pub struct SuperposedState {
    pub full: QuantumState,
    pub phi_l: QuantumState,
    pub phi_r: QuantumState,
    /// `‖φ_L‖²` and `‖φ_R‖²` before renormalization; they sum to 2.
    pub norm_sq_l: f64,
    pub norm_sq_r: f64,
    pub record: SqueezeRecord,
}

/// Branch amplitudes `(cos Jt, −i e^{iΔ0t} sin Jt)` on `(|Z⟩, |−Z⟩)` for φ_L
/// and `(−i sin Jt, e^{iΔ0t} cos Jt)` for φ_R.
pub fn branch_coefficients(t: f64, params: &SystemParams) -> ([C64; 2], [C64; 2]) {
    let (s, c) = (params.j * t).sin_cos();
    let ph = C64::from_polar(1.0, params.delta0 * t);
    let mi = C64::new(0.0, -1.0);
    ([C64::new(c, 0.0), mi * ph * s], [mi * s, ph * c])
}

/// Analytic state from `(|10⟩ + |01⟩)|0⟩/√2`.
pub fn analytic_state_superposed(t: f64, params: &SystemParams, spec: HilbertSpec) -> Result<SuperposedState> {
    require_frequency_modulated(params)?;
    require_two_level_cavities(spec)?;
    let rec = squeeze_parameters(t, params, 1)?;
    let plus = squeezed_vacuum_state(rec.z, spec.dim_mech)?.state;
    let minus = squeezed_vacuum_state(-rec.z, spec.dim_mech)?.state;
    let (cl, cr) = branch_coefficients(t, params);
    let combine = |c: [C64; 2]| -> Vec<C64> {
        plus.amplitudes().iter().zip(minus.amplitudes()).map(|(&p, &m)| c[0] * p + c[1] * m).collect()
    };
    let (l, r) = (combine(cl), combine(cr));
    let norm_sq_l: f64 = l.iter().map(|a| a.norm_sqr()).sum();
    let norm_sq_r: f64 = r.iter().map(|a| a.norm_sqr()).sum();
    let global = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, -(params.omega_c * t + rec.theta));
    let mut amps = vec![C64::new(0.0, 0.0); spec.total()];
    for m in 0..spec.dim_mech {
        amps[spec.index(1, 0, m)] = global * l[m];
        amps[spec.index(0, 1, m)] = global * r[m];
    }
    let mech = HilbertSpec::mechanical(spec.dim_mech)?;
    Ok(SuperposedState {
        full: QuantumState::unnormalized(spec, amps)?,
        phi_l: QuantumState::new(mech, l)?,
        phi_r: QuantumState::new(mech, r)?,
        norm_sq_l,
        norm_sq_r,
        record: rec,
    })
}

/// `⟨Z|−Z⟩ = 1/√(cosh 2R)`, real for every phase.
pub fn squeezed_overlap(modulus: f64) -> f64 {
    1.0 / (2.0 * modulus).cosh().sqrt()
}

/// `|cot(J T_M)|`, the relative weight of the two components of φ_L at
/// `T_M`; unity means maximal interference.
pub fn interference_balance(params: &SystemParams) -> Result<f64> {
    let tm = t_max_squeeze(params, 1)?;
    let (s, c) = (params.j * tm).sin_cos();
    Ok((c / s).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::inner_product;
    use proptest::prelude::*;

    fn at_detuning(d: f64) -> SystemParams {
        SystemParams::frequency_modulated(398.6, 100.0, d)
    }

    #[test]
    fn working_point_values() {
        let p = SystemParams::reference();
        let tm = t_max_squeeze(&p, 1).unwrap();
        assert!((tm - 2.985097).abs() < 1e-6);
        let rec = squeeze_parameters(tm, &p, 1).unwrap();
        assert!((rec.chi.re - 0.526213).abs() < 1e-6);
        assert!((rec.r / rec.chi.re - 1.90037).abs() < 1e-5);
        assert!((rec.modulus - 1.398171).abs() < 1e-6);
        let db = squeezing_db(rec.modulus).unwrap();
        assert!((db - 12.1444).abs() < 1e-4);
        assert!((db - 12.16).abs() <= 0.05);
    }

    #[test]
    fn initial_record_is_trivial() {
        for d in [0.25, 1.0, 1.13, 1.5] {
            let rec = squeeze_parameters(0.0, &at_detuning(d), 1).unwrap();
            assert_eq!(rec.modulus, 0.0);
            assert_eq!(rec.xi, C64::new(0.0, 0.0));
            assert_eq!(rec.eta, 0.0);
        }
    }

    #[test]
    fn critical_point_and_shorter_period() {
        let rec = squeeze_parameters(1.0, &at_detuning(1.0), 1).unwrap();
        assert!((rec.modulus - 0.881373587019543).abs() < 1e-12);
        let tm = t_max_squeeze(&at_detuning(1.5), 1).unwrap();
        assert!((tm - 1.404963).abs() < 1e-6);
        assert!(matches!(t_max_squeeze(&at_detuning(0.25), 1), Err(Error::NoMaximum(_))));
        assert!(matches!(t_max_squeeze(&at_detuning(1.0), 1), Err(Error::NoMaximum(_))));
    }

    #[test]
    fn db_domain() {
        assert_eq!(squeezing_db(0.0).unwrap(), 0.0);
        assert!(matches!(squeezing_db(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn eta_approaches_minus_half_pi() {
        let p = SystemParams::reference();
        let tm = t_max_squeeze(&p, 1).unwrap();
        let mut last = 0.0;
        for k in 1..=2000 {
            let t = tm * k as f64 / 2000.0 * (1.0 - 1e-9);
            let eta = squeeze_parameters(t, &p, 1).unwrap().eta;
            assert!((eta - last).abs() < 0.01, "jump at t={t}");
            last = eta;
        }
        assert!((last + FRAC_PI_2).abs() < 1e-6);
        // continuous straight through T_M
        let before = squeeze_parameters(tm - 1e-7, &p, 1).unwrap().eta;
        let after = squeeze_parameters(tm + 1e-7, &p, 1).unwrap().eta;
        assert!((after - before).abs() < 1e-5);
    }

    #[test]
    fn squeezed_vacuum_expansion() {
        let sv = squeezed_vacuum_state(C64::new(0.0, 0.0), 10).unwrap();
        assert_eq!(sv.state.amplitudes()[0], C64::new(1.0, 0.0));
        assert_eq!(sv.tail_mass, 0.0);

        let z = C64::from_polar(1.39823, 0.7);
        let raw = squeezed_vacuum_amplitudes(z, 40);
        assert!((raw[0].re - 1.0 / 1.39823f64.cosh().sqrt()).abs() < 1e-15);
        assert!(raw.iter().skip(1).step_by(2).all(|a| *a == C64::new(0.0, 0.0)));

        let sv = squeezed_vacuum_state(z, 160).unwrap();
        assert!(sv.tail_mass < 1e-8 && sv.warning.is_none());
        let small = squeezed_vacuum_state(z, 20).unwrap();
        assert!(small.warning.is_some());
        assert!(matches!(squeezed_vacuum_state(z, 1), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn tail_mass_matches_partial_sums() {
        // brute-force oracle: sum the raw amplitudes on a much larger support
        let z = C64::from_polar(1.2, -0.4);
        let big: f64 = squeezed_vacuum_amplitudes(z, 4000).iter().map(|a| a.norm_sqr()).sum();
        assert!((big - 1.0).abs() < 1e-13);
        for dim in [20usize, 41, 80] {
            let head: f64 = squeezed_vacuum_amplitudes(z, dim).iter().map(|a| a.norm_sqr()).sum();
            let tail = squeezed_vacuum_state(z, dim).unwrap().tail_mass;
            assert!((head + tail - 1.0).abs() < 1e-13, "dim {dim}");
        }
    }

    #[test]
    fn overlap_closed_form() {
        let z = C64::from_polar(0.9, 1.1);
        let a = squeezed_vacuum_state(z, 200).unwrap().state;
        let b = squeezed_vacuum_state(-z, 200).unwrap().state;
        let ov = inner_product(&a, &b).unwrap();
        assert!((ov.re - squeezed_overlap(0.9)).abs() < 1e-12 && ov.im.abs() < 1e-14);
    }

    #[test]
    fn single_state_structure() {
        let p = SystemParams::reference();
        let spec = HilbertSpec::single_photon(160).unwrap();
        let psi0 = analytic_state_single(0.0, &p, spec).unwrap();
        let basis = QuantumState::basis(spec, 1, 0, 0).unwrap();
        assert!((inner_product(&basis, &psi0).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-15);
        for &t in &[0.3, 1.7, 2.98] {
            let psi = analytic_state_single(t, &p, spec).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-10);
            let left: f64 = psi.mechanical_branch(1, 0).iter().map(|a| a.norm_sqr()).sum();
            assert!((left - (p.j * t).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn superposed_state_structure() {
        let p = SystemParams::reference();
        let spec = HilbertSpec::single_photon(160).unwrap();
        let s0 = analytic_state_superposed(0.0, &p, spec).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s0.full.amplitude(1, 0, 0) - C64::new(h, 0.0)).norm() < 1e-15);
        assert!((s0.full.amplitude(0, 1, 0) - C64::new(h, 0.0)).norm() < 1e-15);
        let tm = t_max_squeeze(&p, 1).unwrap();
        for &t in &[0.5, 1.9, tm] {
            let s = analytic_state_superposed(t, &p, spec).unwrap();
            assert!((s.full.norm() - 1.0).abs() < 1e-10);
            assert!((s.norm_sq_l + s.norm_sq_r - 2.0).abs() < 1e-10);
            let ov = squeezed_overlap(s.record.modulus);
            let expect = 1.0 + (2.0 * p.j * t).sin() * (p.delta0 * t).sin() * ov;
            assert!((s.norm_sq_l - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn branch_rotation_identity_when_phase_commensurate() {
        // φ_R = −e^{−iπ n/2} φ_L · (global phase) needs e^{2iΔ0 T_M} = 1
        let base = SystemParams::reference();
        let tm = t_max_squeeze(&base, 1).unwrap();
        let mut p = base;
        p.delta0 = 95.0 * PI / tm;
        let s = analytic_state_superposed(tm, &p, HilbertSpec::single_photon(160).unwrap()).unwrap();
        let rotated: Vec<C64> = s
            .phi_l
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, a)| -a * C64::from_polar(1.0, -FRAC_PI_2 * n as f64))
            .collect();
        let ov: C64 = s.phi_r.amplitudes().iter().zip(&rotated).map(|(a, b)| a.conj() * b).sum();
        assert!((ov.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn balance_is_reported() {
        let b = interference_balance(&SystemParams::reference()).unwrap();
        assert!(b.is_finite() && b > 0.0);
    }

    proptest! {
        #[test]
        fn periodic_in_chi(d in 1.05f64..3.0, t in 0.0f64..10.0) {
            let p = at_detuning(d);
            let chi = (d * d - 1.0).sqrt();
            let a = squeeze_parameters(t, &p, 1).unwrap().modulus;
            let b = squeeze_parameters(t + PI / chi, &p, 1).unwrap().modulus;
            prop_assert!((a - b).abs() < 1e-10);
        }

        #[test]
        fn continuous_across_critical(t in 0.01f64..5.0) {
            let a = squeeze_parameters(t, &at_detuning(1.0 - 1e-6), 1).unwrap().modulus;
            let b = squeeze_parameters(t, &at_detuning(1.0 + 1e-6), 1).unwrap().modulus;
            let c = squeeze_parameters(t, &at_detuning(1.0), 1).unwrap().modulus;
            prop_assert!((a - b).abs() < 1e-4 && (a - c).abs() < 1e-4);
        }

        #[test]
        fn monotone_below_critical(t1 in 0.001f64..6.0, dt in 0.001f64..2.0) {
            let p = at_detuning(0.25);
            let a = squeeze_parameters(t1, &p, 1).unwrap().modulus;
            let b = squeeze_parameters(t1 + dt, &p, 1).unwrap().modulus;
            prop_assert!(b > a);
        }

        #[test]
        fn record_invariants(t in 0.0f64..20.0, d in 0.1f64..3.0, n in prop::sample::select(vec![-1i32, 1])) {
            let rec = squeeze_parameters(t, &at_detuning(d), n).unwrap();
            prop_assert!((rec.modulus - rec.z.norm()).abs() < 1e-12);
            prop_assert!(rec.phase > -PI && rec.phase <= PI);
            if rec.modulus > 1e-9 {
                prop_assert!((C64::from_polar(rec.modulus, rec.phase) - rec.z).norm() < 1e-9 * rec.modulus.max(1.0));
            }
        }

        #[test]
        fn odd_levels_vanish(m in 0.0f64..2.0, ph in -PI..PI, dim in 2usize..90) {
            let sv = squeezed_vacuum_state(C64::from_polar(m, ph), dim).unwrap();
            for (k, a) in sv.state.amplitudes().iter().enumerate() {
                if k % 2 == 1 {
                    prop_assert_eq!(*a, C64::new(0.0, 0.0));
                }
            }
            prop_assert!((sv.state.norm() - 1.0).abs() < 1e-12);
        }
    }
}
