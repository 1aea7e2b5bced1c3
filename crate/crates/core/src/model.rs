//! System parameters, Hamiltonians and the rotating-wave regime checks.
//!
//! Rates are multiples of the bare quadratic coupling `g0`, with ħ = 1.

use num_complex::Complex64 as C64;

use crate::fock::{
    ladder_operators, number_operator, position_squared_operator, tensor_product, two_phonon_operator, HilbertSpec,
    Operator,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    /// Cavity frequencies modulated as `ω_c ± Δ0 cos 2Jt`.
    FrequencyModulated,
    /// Hopping `Jω0 cos ω0t` and coupling `g0 cos 2ω_p t` modulated.
    CouplingModulated { omega0: f64, omega_p: f64, n0: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub omega_c: f64,
    pub omega_m: f64,
    pub j: f64,
    pub g0: f64,
    pub delta0: f64,
    pub scheme: Scheme,
}

impl SystemParams {
    /// Frequency-modulated system with `ω_M = δ + J`, `ω_c = 0`, `g0 = 1`.
    pub fn frequency_modulated(j: f64, delta0: f64, detuning: f64) -> Self {
        Self { omega_c: 0.0, omega_m: detuning + j, j, g0: 1.0, delta0, scheme: Scheme::FrequencyModulated }
    }

    /// The working point used throughout: `J = 398.6`, `Δ0 = 100`, `δ = 1.13`.
    pub fn reference() -> Self {
        Self::frequency_modulated(398.6, 100.0, 1.13)
    }

    /// Coupling-modulated system with `ω_M` chosen so that `δ′` takes the
    /// requested value.
    pub fn coupling_modulated(j: f64, omega0: f64, omega_p: f64, n0: u32, delta_prime: f64) -> Self {
        Self {
            omega_c: 0.0,
            omega_m: omega_p + n0 as f64 * omega0 + delta_prime,
            j,
            g0: 1.0,
            delta0: 0.0,
            scheme: Scheme::CouplingModulated { omega0, omega_p, n0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("omega_c", self.omega_c),
            ("omega_M", self.omega_m),
            ("J", self.j),
            ("g0", self.g0),
            ("Delta0", self.delta0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if !(self.g0 > 0.0) || !(self.j > 0.0) || !(self.omega_m > 0.0) {
            return Err(Error::InvalidParams(format!(
                "need g0 > 0, J > 0, omega_M > 0 (got g0={}, J={}, omega_M={})",
                self.g0, self.j, self.omega_m
            )));
        }
        if let Scheme::CouplingModulated { omega0, omega_p, n0 } = self.scheme {
            if !omega0.is_finite() || !omega_p.is_finite() || !(omega0 > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "need finite omega0 > 0 and finite omega_p (got {omega0}, {omega_p})"
                )));
            }
            if 2 * n0 > BESSEL_MAX_ORDER {
                return Err(Error::InvalidParams(format!("n0 = {n0} exceeds the supported Bessel order")));
            }
        }
        Ok(())
    }

    /// `g = g0/2`.
    pub fn g(&self) -> f64 {
        0.5 * self.g0
    }

    /// `δ = ω_M − J`.
    pub fn detuning(&self) -> f64 {
        self.omega_m - self.j
    }

    /// Effective `(g, δ)` of the time-independent squeezing Hamiltonian for
    /// either scheme.
    pub fn effective(&self) -> Result<(f64, f64)> {
        match self.scheme {
            Scheme::FrequencyModulated => Ok((self.g(), self.detuning())),
            Scheme::CouplingModulated { .. } => effective_coupling_modulated(self),
        }
    }
}

/// Time dependence of one Hamiltonian term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `amp · cos(freq · t)`.
    Cos {
        amp: f64,
        freq: f64,
    },
}

impl Coefficient {
    pub fn at(&self, t: f64) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Cos { amp, freq } => amp * (freq * t).cos(),
        }
    }

    /// `∫₀ᵗ c(s) ds`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            Coefficient::Constant(c) => c * t,
            Coefficient::Cos { amp, freq } if freq == 0.0 => amp * t,
            Coefficient::Cos { amp, freq } => amp * (freq * t).sin() / freq,
        }
    }
}

/// `H(t) = Σ c_k(t) O_k` with fixed sparse operators.
#[derive(Clone, Debug)]
pub struct ModelHamiltonian {
    spec: HilbertSpec,
    terms: Vec<(Coefficient, Operator)>,
    diagonals: Vec<Vec<f64>>,
}

impl ModelHamiltonian {
    pub fn new(spec: HilbertSpec, terms: Vec<(Coefficient, Operator)>) -> Result<Self> {
        for (_, op) in &terms {
            if op.dim() != spec.total() {
                return Err(Error::DimensionMismatch { expected: spec.total(), found: op.dim() });
            }
        }
        let diagonals = terms.iter().map(|(_, op)| op.diagonal().iter().map(|z| z.re).collect()).collect();
        Ok(Self { spec, terms, diagonals })
    }

    /// The model Hamiltonian of the chosen scheme.
    pub fn for_params(params: &SystemParams, spec: HilbertSpec) -> Result<Self> {
        params.validate()?;
        let ops = CavityOperators::new(spec)?;
        let terms = match params.scheme {
            Scheme::FrequencyModulated => vec![
                (Coefficient::Constant(params.omega_c), ops.n_total.clone()),
                (Coefficient::Cos { amp: params.delta0, freq: 2.0 * params.j }, ops.n_lr.clone()),
                (Coefficient::Constant(params.j), ops.hop.clone()),
                (Coefficient::Constant(params.omega_m), ops.n_mech.clone()),
                (Coefficient::Constant(params.g0), ops.n_lr_x2.clone()),
            ],
            Scheme::CouplingModulated { omega0, omega_p, .. } => vec![
                (Coefficient::Constant(params.omega_c), ops.n_total.clone()),
                (Coefficient::Cos { amp: params.j * omega0, freq: omega0 }, ops.hop.clone()),
                (Coefficient::Constant(params.omega_m), ops.n_mech.clone()),
                (Coefficient::Cos { amp: params.g0, freq: 2.0 * omega_p }, ops.n_lr_x2.clone()),
            ],
        };
        Self::new(spec, terms)
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn terms(&self) -> &[(Coefficient, Operator)] {
        &self.terms
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut acc = Operator::zeros(self.spec.total());
        for (c, op) in &self.terms {
            let v = c.at(t);
            if v != 0.0 {
                acc = acc.add(&op.scale_real(v));
            }
        }
        acc
    }

    /// `out = H(t) ψ`.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for (c, op) in &self.terms {
            let v = c.at(t);
            if v != 0.0 {
                op.apply_add(C64::new(v, 0.0), psi, out);
            }
        }
    }

    /// Real part of the diagonal of `H(t)`.
    pub fn diagonal(&self, t: f64) -> Vec<f64> {
        let mut d = vec![0.0; self.spec.total()];
        self.diagonal_into(t, &mut d);
        d
    }

    pub fn diagonal_into(&self, t: f64, out: &mut [f64]) {
        self.accumulate_diagonals(out, |c| c.at(t));
    }

    /// `∫₀ᵗ diag H(s) ds`, exact for every term.
    pub fn integrated_diagonal(&self, t: f64) -> Vec<f64> {
        let mut d = vec![0.0; self.spec.total()];
        self.integrated_diagonal_into(t, &mut d);
        d
    }

    pub fn integrated_diagonal_into(&self, t: f64, out: &mut [f64]) {
        self.accumulate_diagonals(out, |c| c.integral(t));
    }

    fn accumulate_diagonals(&self, out: &mut [f64], weight: impl Fn(&Coefficient) -> f64) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for ((c, _), diag) in self.terms.iter().zip(&self.diagonals) {
            let v = weight(c);
            if v != 0.0 {
                for (o, x) in out.iter_mut().zip(diag) {
                    *o += v * x;
                }
            }
        }
    }
}

/// Frequently used full-space operators.
struct CavityOperators {
    n_total: Operator,
    n_lr: Operator,
    hop: Operator,
    n_mech: Operator,
    n_lr_x2: Operator,
    n_lr_b2: Operator,
}

impl CavityOperators {
    fn new(spec: HilbertSpec) -> Result<Self> {
        let (al, _) = ladder_operators(spec.dim_cavity_l)?;
        let (ar, _) = ladder_operators(spec.dim_cavity_r)?;
        let nl = number_operator(spec.dim_cavity_l);
        let nr = number_operator(spec.dim_cavity_r);
        let (il, ir, im) = (spec.identity_l(), spec.identity_r(), spec.identity_m());
        let nl_full = spec.lift(&nl, &ir, &im)?;
        let nr_full = spec.lift(&il, &nr, &im)?;
        // a_L† a_R + a_R† a_L
        let lr = tensor_product(&tensor_product(&al.adjoint(), &ar), &im);
        let hop = lr.add(&lr.adjoint());
        let n_lr_cav = tensor_product(&nl, &ir).sub(&tensor_product(&il, &nr));
        Ok(Self {
            n_total: nl_full.add(&nr_full),
            n_lr: nl_full.sub(&nr_full),
            hop,
            n_mech: spec.lift(&il, &ir, &number_operator(spec.dim_mech))?,
            n_lr_x2: tensor_product(&n_lr_cav, &position_squared_operator(spec.dim_mech)),
            n_lr_b2: tensor_product(&n_lr_cav, &two_phonon_operator(spec.dim_mech)),
        })
    }
}

/// Total photon number `a_L†a_L + a_R†a_R` on the full space.
pub fn photon_number_operator(spec: HilbertSpec) -> Result<Operator> {
    Ok(CavityOperators::new(spec)?.n_total)
}

/// Photon-number inversion `a_L†a_L − a_R†a_R` on the full space.
pub fn inversion_operator(spec: HilbertSpec) -> Result<Operator> {
    Ok(CavityOperators::new(spec)?.n_lr)
}

/// `H(t)` of the selected scheme on `spec`.
pub fn build_hamiltonian(params: &SystemParams, spec: HilbertSpec, t: f64) -> Result<Operator> {
    Ok(ModelHamiltonian::for_params(params, spec)?.at(t))
}

/// `ω_c N + δ b†b + g N_LR (b² + b†²)` with `(g, δ)` or `(g′, δ′)`.
pub fn build_effective_hamiltonian(params: &SystemParams, spec: HilbertSpec) -> Result<Operator> {
    params.validate()?;
    let (g, delta) = params.effective()?;
    let ops = CavityOperators::new(spec)?;
    Ok(ops.n_total.scale_real(params.omega_c).add(&ops.n_mech.scale_real(delta)).add(&ops.n_lr_b2.scale_real(g)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RwaCondition {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RwaReport {
    pub passed: bool,
    pub margin: f64,
    pub margins: Vec<RwaCondition>,
}

impl RwaReport {
    pub fn smallest(&self) -> Option<&RwaCondition> {
        self.margins.iter().min_by(|a, b| a.ratio.partial_cmp(&b.ratio).unwrap_or(std::cmp::Ordering::Equal))
    }
}

pub const DEFAULT_RWA_MARGIN: f64 = 10.0;

fn condition(label: &str, lhs: f64, rhs: f64) -> RwaCondition {
    let ratio = if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    };
    RwaCondition { label: label.to_string(), lhs, rhs, ratio }
}

/// Evaluates every `lhs ≫ rhs` condition of the scheme as `lhs/rhs ≥ margin`.
pub fn check_rwa_conditions(params: &SystemParams, margin: f64) -> RwaReport {
    let mut margins = Vec::new();
    match params.scheme {
        Scheme::FrequencyModulated => {
            let g = params.g();
            let delta = params.detuning();
            margins.push(condition("J >> (5/16) Delta0", params.j, 5.0 / 16.0 * params.delta0.abs()));
            margins.push(condition("Delta0 >> 2g", params.delta0.abs(), 2.0 * g));
            margins.push(condition("Delta0 >> |delta|", params.delta0.abs(), delta.abs()));
            margins.push(condition("|Delta0 - 2J| >> g", (params.delta0 - 2.0 * params.j).abs(), g));
        }
        Scheme::CouplingModulated { omega0, omega_p, n0 } => {
            let g_prime = match bessel_j(2 * n0, 2.0 * params.j) {
                Ok(b) => 0.5 * params.g0 * b,
                Err(_) => f64::NAN,
            };
            let delta_prime = params.omega_m - omega_p - n0 as f64 * omega0;
            let scales = [("omega0", omega0), ("omega_M - omega_p", params.omega_m - omega_p), ("omega_p", omega_p)];
            for (name, small) in [("|delta'|", delta_prime.abs()), ("|g'|", g_prime.abs())] {
                for (sname, s) in scales {
                    margins.push(condition(&format!("{sname} >> {name}"), s, small));
                }
            }
        }
    }
    let passed = margins.iter().all(|c| c.ratio >= margin);
    RwaReport { passed, margin, margins }
}

pub const BESSEL_MAX_ORDER: u32 = 64;
pub const BESSEL_MAX_ARG: f64 = 1e4;
const BESSEL_SERIES_LIMIT: f64 = 8.0;

/// Bessel function of the first kind `J_n(x)` for `n ≤ 64`, `|x| ≤ 1e4`.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if n > BESSEL_MAX_ORDER || !x.is_finite() || x.abs() > BESSEL_MAX_ARG {
        return Err(Error::Range(format!(
            "bessel_j supports n <= {BESSEL_MAX_ORDER}, |x| <= {BESSEL_MAX_ARG}; got n={n}, x={x}"
        )));
    }
    let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
    let ax = x.abs();
    let v = if ax <= BESSEL_SERIES_LIMIT { bessel_series(n, ax) } else { bessel_miller(n, ax) };
    Ok(sign * v)
}

fn bessel_series(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let h = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= h / k as f64;
    }
    let q = -h * h;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || term == 0.0 {
            break;
        }
    }
    sum
}

/// Downward recurrence normalized by `J0 + 2 Σ J_2k = 1`.
fn bessel_miller(n: u32, x: f64) -> f64 {
    let top = x.max(n as f64) + 20.0 * x.cbrt() + 40.0;
    let mut m = top.ceil() as usize;
    m += m % 2;
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    let mut norm = 0.0f64;
    let mut result = 0.0f64;
    for k in (0..=m).rev() {
        // at this point j = J_k (unnormalized), jp1 = J_{k+1}
        if k == n as usize {
            result = j;
        }
        if k % 2 == 0 {
            norm += if k == 0 { j } else { 2.0 * j };
        }
        if k == 0 {
            break;
        }
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        if j.abs() > 1e250 {
            jp1 *= 1e-250;
            j *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    result / norm
}

/// `(g′, δ′) = ((g0/2) J_{2n0}(2J), ω_M − ω_p − n0 ω0)`.
pub fn effective_coupling_modulated(params: &SystemParams) -> Result<(f64, f64)> {
    match params.scheme {
        Scheme::CouplingModulated { omega0, omega_p, n0 } => {
            let g_prime = 0.5 * params.g0 * bessel_j(2 * n0, 2.0 * params.j)?;
            Ok((g_prime, params.omega_m - omega_p - n0 as f64 * omega0))
        }
        Scheme::FrequencyModulated => {
            Err(Error::Scheme("effective_coupling_modulated needs the coupling-modulated scheme".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::parity_matrix;
    use proptest::prelude::*;

    fn spec() -> HilbertSpec {
        HilbertSpec::single_photon(12).unwrap()
    }

    #[test]
    fn static_limit_and_modulated_diagonal() {
        let mut p = SystemParams::reference();
        p.omega_c = 3.0;
        let h = build_hamiltonian(&p, spec(), 0.0).unwrap();
        let s = spec();
        // |1,0,0⟩: ω_L(0) + g0 (2·0 + 1)
        let i = s.index(1, 0, 0);
        assert!((h.get(i, i).re - (3.0 + 100.0 + 1.0)).abs() < 1e-12);

        p.delta0 = 0.0;
        let h0 = build_hamiltonian(&p, s, 0.37).unwrap();
        let h1 = build_hamiltonian(&p, s, 5.1).unwrap();
        assert!(h0.max_abs_diff(&h1) < 1e-12);
    }

    #[test]
    fn hamiltonian_hermitian_and_periodic() {
        let p = SystemParams::reference();
        let s = spec();
        for &t in &[0.0, 0.123, 1.7, 2.98] {
            let h = build_hamiltonian(&p, s, t).unwrap();
            assert!(h.hermiticity_defect() < 1e-12);
            let period = std::f64::consts::PI / p.j;
            let h2 = build_hamiltonian(&p, s, t + period).unwrap();
            // relative to the largest entry: the phase 2J·t carries roundoff
            assert!(h.max_abs_diff(&h2) <= 1e-12 * h.max_abs());
        }
    }

    #[test]
    fn symmetries_of_built_hamiltonians() {
        let s = spec();
        let n = photon_number_operator(s).unwrap();
        let parity = s.lift(&s.identity_l(), &s.identity_r(), &parity_matrix(s.dim_mech)).unwrap();
        let fm = SystemParams::reference();
        let cm = SystemParams::coupling_modulated(1.527, 100.0, 130.0, 1, 1.0);
        for p in [fm, cm] {
            for &t in &[0.0, 0.41, 2.2] {
                let h = build_hamiltonian(&p, s, t).unwrap();
                assert!(h.commutator(&n).max_abs() < 1e-12);
                assert!(h.commutator(&parity).max_abs() < 1e-12);
            }
            let he = build_effective_hamiltonian(&p, s).unwrap();
            assert!(he.commutator(&n).max_abs() < 1e-12);
            assert!(he.commutator(&parity).max_abs() < 1e-12);
            assert!(he.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn effective_matrix_elements() {
        let p = SystemParams::reference();
        let s = spec();
        let h = build_effective_hamiltonian(&p, s).unwrap();
        for m in 2..s.dim_mech {
            let v = h.get(s.index(1, 0, m), s.index(1, 0, m - 2));
            assert!((v.re - 0.5 * ((m * (m - 1)) as f64).sqrt()).abs() < 1e-12);
            let w = h.get(s.index(0, 1, m), s.index(0, 1, m - 2));
            assert!((w.re + 0.5 * ((m * (m - 1)) as f64).sqrt()).abs() < 1e-12);
        }
        // empty cavities: only δ b†b
        for m in 0..s.dim_mech {
            for k in 0..s.dim_mech {
                let v = h.get(s.index(0, 0, m), s.index(0, 0, k));
                let expect = if m == k { 1.13 * m as f64 } else { 0.0 };
                assert!((v.re - expect).abs() < 1e-10 && v.im == 0.0);
            }
        }
    }

    #[test]
    fn rwa_reference_point() {
        let r = check_rwa_conditions(&SystemParams::reference(), 10.0);
        assert!(r.passed);
        let ratios: Vec<f64> = r.margins.iter().map(|c| c.ratio).collect();
        assert!((ratios[0] - 398.6 / 31.25).abs() < 1e-9);
        assert!((ratios[2] - 100.0 / 1.13).abs() < 1e-9);
        assert!((ratios[3] - 1394.4).abs() < 1e-9);

        let mut p = SystemParams::reference();
        p.delta0 = 2.0 * p.j;
        let r = check_rwa_conditions(&p, 10.0);
        assert!(!r.passed);
        assert_eq!(r.margins[3].ratio, 0.0);
    }

    #[test]
    fn rwa_small_modulation_smallest_margin() {
        let p = SystemParams::frequency_modulated(398.6, 20.0, 1.13);
        let r = check_rwa_conditions(&p, 10.0);
        assert!(r.passed);
        assert!((r.margins[1].ratio - 20.0).abs() < 1e-12);
        let smallest = r.smallest().unwrap();
        assert_eq!(smallest.label, "Delta0 >> |delta|");
        assert!((smallest.ratio - 20.0 / 1.13).abs() < 1e-9);
    }

    #[test]
    fn bessel_reference_values() {
        // 40-digit values from an arbitrary-precision library
        let cases: &[(u32, f64, f64)] = &[
            (0, 1.0, 0.76519768655796655145),
            (1, 2.5, 0.49709410246427403801),
            (2, 3.054, 0.48649867446948052786),
            (5, 7.9, 0.20747350940067680728),
            (0, 8.5, 0.041939251842934503552),
            (3, 10.0, 0.058379379305186812343),
            (10, 12.0, 0.30047603527126931073),
            (0, 30.0, -0.086367983581040211336),
            (7, 50.0, 0.060491201259537108376),
            (64, 70.0, 0.099019233739506266453),
            (1, 100.0, -0.077145352014112158033),
            (20, 500.0, -0.035514222915127349391),
            (0, 1000.0, 0.024786686152420174561),
            (2, 2500.0, -0.001249736798128275211),
            (64, 9999.0, -0.0023640770966683615656),
            (0, 10000.0, -0.0070961603533888014773),
            (33, -4.2, -4.3462590532926624267e-27),
            (4, 0.001, 2.6041665364583362628e-15),
            (64, 1.0, 4.2559152209489660795e-109),
            (12, 15.3, 0.20637687792587465139),
        ];
        for &(n, x, v) in cases {
            let got = bessel_j(n, x).unwrap();
            assert!((got - v).abs() < 1e-12, "J_{n}({x}) = {got}, want {v}");
        }
    }

    #[test]
    fn bessel_trivia_and_range() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert!(bessel_j(0, 2.40482555769577).unwrap().abs() < 1e-10);
        assert!(matches!(bessel_j(65, 1.0), Err(Error::Range(_))));
        assert!(matches!(bessel_j(0, 1.0e4 + 1.0), Err(Error::Range(_))));
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::Range(_))));
    }

    #[test]
    fn coupling_modulated_effective_values() {
        let p = SystemParams::coupling_modulated(1.527, 100.0, 130.0, 1, 1.0);
        let (gp, dp) = effective_coupling_modulated(&p).unwrap();
        assert!((gp - 0.5 * bessel_j(2, 3.054).unwrap()).abs() < 1e-15);
        assert!((dp - 1.0).abs() < 1e-12);

        let zero = SystemParams::coupling_modulated(2.40482555769577 / 2.0, 100.0, 130.0, 0, 1.0);
        assert!(effective_coupling_modulated(&zero).unwrap().0.abs() < 1e-10);
        let before = SystemParams::coupling_modulated(1.19, 100.0, 130.0, 0, 1.0);
        let after = SystemParams::coupling_modulated(1.22, 100.0, 130.0, 0, 1.0);
        let gb = effective_coupling_modulated(&before).unwrap().0;
        let ga = effective_coupling_modulated(&after).unwrap().0;
        assert!(gb > 0.0 && ga < 0.0);

        assert!(matches!(effective_coupling_modulated(&SystemParams::reference()), Err(Error::Scheme(_))));
        assert!(check_rwa_conditions(&p, 10.0).passed);
    }

    #[test]
    fn params_validation() {
        let mut p = SystemParams::reference();
        assert!(p.validate().is_ok());
        p.j = -1.0;
        assert!(p.validate().is_err());
        p = SystemParams::reference();
        p.omega_c = f64::INFINITY;
        assert!(p.validate().is_err());
    }

    proptest! {
        #[test]
        fn bessel_normalization_and_recurrence(x in -30.0f64..30.0) {
            let mut sum = bessel_j(0, x).unwrap();
            for k in 1..=32 {
                sum += 2.0 * bessel_j(2 * k, x).unwrap();
            }
            prop_assert!((sum - 1.0).abs() < 1e-11);
            if x.abs() > 0.5 {
                for n in 1..40u32 {
                    let lhs = bessel_j(n - 1, x).unwrap() + bessel_j(n + 1, x).unwrap();
                    let rhs = 2.0 * n as f64 / x * bessel_j(n, x).unwrap();
                    prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + n as f64 / x.abs()));
                }
            }
        }

        #[test]
        fn bessel_parity(n in 0u32..=64, x in 0.0f64..200.0) {
            let a = bessel_j(n, x).unwrap();
            let b = bessel_j(n, -x).unwrap();
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert_eq!(a, s * b);
        }

        #[test]
        fn hamiltonian_hermitian_random_t(t in 0.0f64..10.0) {
            let h = build_hamiltonian(&SystemParams::reference(), HilbertSpec::single_photon(8).unwrap(), t).unwrap();
            prop_assert!(h.hermiticity_defect() < 1e-12);
        }
    }
}
