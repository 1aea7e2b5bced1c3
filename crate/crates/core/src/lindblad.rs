//! Open-system evolution under the Lindblad master equation with cavity
//! leakage and a thermal mechanical bath.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::analytic::{analytic_state_superposed, t_max_squeeze};
use crate::dynamics::BlockPhases;
use crate::fock::{ladder_operators, DensityMatrix, HilbertSpec, Operator, QuantumState};
use crate::model::{build_hamiltonian, Scheme, SystemParams};
use crate::ode::{check_times, integrate, IntegratorConfig};
use crate::{Error, Result};

pub const TRACE_DRIFT_LIMIT: f64 = 1e-6;
pub const POSITIVITY_LIMIT: f64 = -1e-6;
/// Default mechanical truncation for open runs.
pub const OPEN_DIM_MECH: usize = 120;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Rates of the environment: common cavity decay, mechanical damping and
/// the thermal phonon number of the mechanical bath.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissipationParams {
    pub gamma_c: f64,
    pub gamma_m: f64,
    pub n_th: f64,
}

impl DissipationParams {
    pub fn new(gamma_c: f64, gamma_m: f64, n_th: f64) -> Result<Self> {
        let d = Self { gamma_c, gamma_m, n_th };
        d.validate()?;
        Ok(d)
    }

    /// `n_th = 1`, `γ_m = 10⁻⁴`, `γ_c = 0.1` in units of `g0`.
    pub fn reference() -> Self {
        Self { gamma_c: 0.1, gamma_m: 1e-4, n_th: 1.0 }
    }

    pub fn closed() -> Self {
        Self { gamma_c: 0.0, gamma_m: 0.0, n_th: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_c", self.gamma_c), ("gamma_m", self.gamma_m), ("n_th", self.n_th)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.gamma_c == 0.0 && self.gamma_m == 0.0
    }
}

/// `D[o]ρ = oρo† − (o†oρ + ρo†o)/2` with sparse products.
fn dissipator(o: &Operator, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let od = o.adjoint();
    let odo = od.matmul(o);
    let jump = od.dense_mul(&o.mul_dense(rho));
    let anti = odo.mul_dense(rho) + odo.dense_mul(rho);
    jump - anti * C64::new(0.5, 0.0)
}

/// `i[ρ, H] + L_diss ρ` for an explicit Hamiltonian.
pub fn lindblad_rhs_with(
    rho: &DensityMatrix,
    hamiltonian: &Operator,
    diss: &DissipationParams,
) -> Result<DMatrix<C64>> {
    diss.validate()?;
    let spec = rho.spec();
    if hamiltonian.dim() != spec.total() {
        return Err(Error::DimensionMismatch { expected: spec.total(), found: hamiltonian.dim() });
    }
    let r = rho.entries();
    let i = C64::new(0.0, 1.0);
    let mut out = (hamiltonian.dense_mul(r) - hamiltonian.mul_dense(r)) * i;
    if diss.gamma_m > 0.0 {
        let (b, bd) = ladder_operators(spec.dim_mech)?;
        let id_l = spec.identity_l();
        let id_r = spec.identity_r();
        let b = spec.lift(&id_l, &id_r, &b)?;
        let bd = spec.lift(&id_l, &id_r, &bd)?;
        let w = 0.5 * diss.gamma_m;
        out += dissipator(&b, r) * C64::from(w * (diss.n_th + 1.0));
        if diss.n_th > 0.0 {
            out += dissipator(&bd, r) * C64::from(w * diss.n_th);
        }
    }
    if diss.gamma_c > 0.0 {
        let id_m = spec.identity_m();
        if spec.dim_cavity_l > 1 {
            let (a, _) = ladder_operators(spec.dim_cavity_l)?;
            let a_l = spec.lift(&a, &spec.identity_r(), &id_m)?;
            out += dissipator(&a_l, r) * C64::from(diss.gamma_c);
        }
        if spec.dim_cavity_r > 1 {
            let (a, _) = ladder_operators(spec.dim_cavity_r)?;
            let a_r = spec.lift(&spec.identity_l(), &a, &id_m)?;
            out += dissipator(&a_r, r) * C64::from(diss.gamma_c);
        }
    }
    Ok(out)
}

/// Right-hand side of the master equation with the model Hamiltonian `H(t)`.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    t: f64,
    params: &SystemParams,
    diss: &DissipationParams,
) -> Result<DMatrix<C64>> {
    let h = build_hamiltonian(params, rho.spec(), t)?;
    lindblad_rhs_with(rho, &h, diss)
}

/// Cavity sectors kept by the fast path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sector {
    Vacuum,
    Left,
    Right,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::Vacuum, Sector::Left, Sector::Right];

    fn offset(self, n: usize) -> usize {
        match self {
            Sector::Vacuum => 0,
            Sector::Left => n,
            Sector::Right => 2 * n,
        }
    }

    /// Photon numbers `(n_L, n_R)`.
    pub fn occupation(self) -> (usize, usize) {
        match self {
            Sector::Vacuum => (0, 0),
            Sector::Left => (1, 0),
            Sector::Right => (0, 1),
        }
    }
}

/// Density matrix on `{|00⟩, |10⟩, |01⟩} ⊗ mechanics`, index `s·n + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorDensity {
    dim_mech: usize,
    entries: DMatrix<C64>,
}

impl SectorDensity {
    pub fn new(dim_mech: usize, entries: DMatrix<C64>) -> Result<Self> {
        let d = 3 * dim_mech;
        if dim_mech < 2 {
            return Err(Error::InvalidDimension(format!("need at least 2 mechanical levels, got {dim_mech}")));
        }
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: entries.nrows() });
        }
        Ok(Self { dim_mech, entries })
    }

    /// Restricts a density matrix with at most one photon per cavity; the
    /// `|11⟩` sector must be empty.
    pub fn from_density(rho: &DensityMatrix) -> Result<Self> {
        let spec = rho.spec();
        if spec.dim_cavity_l != 2 || spec.dim_cavity_r != 2 {
            return Err(Error::InvalidDimension(format!(
                "open runs use two-level cavities, got ({}, {})",
                spec.dim_cavity_l, spec.dim_cavity_r
            )));
        }
        let n = spec.dim_mech;
        let r = rho.entries();
        let doubly: f64 = (0..n).map(|m| r[(spec.index(1, 1, m), spec.index(1, 1, m))].re.abs()).sum();
        if doubly > 1e-12 {
            return Err(Error::InvalidState(format!("population {doubly:.3e} in |11> lies outside the kept sectors")));
        }
        let mut out = DMatrix::zeros(3 * n, 3 * n);
        for s in Sector::ALL {
            for s2 in Sector::ALL {
                let (a, b) = s.occupation();
                let (c, d) = s2.occupation();
                for m in 0..n {
                    for k in 0..n {
                        out[(s.offset(n) + m, s2.offset(n) + k)] = r[(spec.index(a, b, m), spec.index(c, d, k))];
                    }
                }
            }
        }
        Self::new(n, out)
    }

    pub fn from_pure(psi: &QuantumState) -> Result<Self> {
        Self::from_density(&DensityMatrix::from_pure(psi))
    }

    pub fn dim_mech(&self) -> usize {
        self.dim_mech
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    /// Embeds into the full `2 × 2 × dim_mech` space.
    pub fn to_density(&self) -> DensityMatrix {
        let n = self.dim_mech;
        let spec = HilbertSpec::single_photon(n).expect("dim_mech >= 2");
        let mut out = DMatrix::zeros(spec.total(), spec.total());
        for s in Sector::ALL {
            for s2 in Sector::ALL {
                let (a, b) = s.occupation();
                let (c, d) = s2.occupation();
                for m in 0..n {
                    for k in 0..n {
                        out[(spec.index(a, b, m), spec.index(c, d, k))] =
                            self.entries[(s.offset(n) + m, s2.offset(n) + k)];
                    }
                }
            }
        }
        DensityMatrix::new(spec, out).expect("square")
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.entries.nrows();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Unnormalized mechanical block `⟨s|ρ|s⟩`.
    pub fn block(&self, sector: Sector) -> DMatrix<C64> {
        let n = self.dim_mech;
        let o = sector.offset(n);
        self.entries.view((o, o), (n, n)).into_owned()
    }

    /// Probability of finding the photons in `sector`.
    pub fn population(&self, sector: Sector) -> f64 {
        self.block(sector).trace().re
    }

    /// Mechanical state with the cavities traced out.
    pub fn mechanical(&self) -> DensityMatrix {
        let m = self.block(Sector::Vacuum) + self.block(Sector::Left) + self.block(Sector::Right);
        DensityMatrix::new(HilbertSpec::mechanical(self.dim_mech).expect("n >= 1"), m).expect("square")
    }

    /// Mechanical state after detecting the photon in `sector`.
    pub fn conditional_mechanical(&self, sector: Sector) -> Result<DensityMatrix> {
        let block = self.block(sector);
        let p = block.trace().re;
        if !(p > 1e-12) {
            return Err(Error::InvalidState(format!("sector {sector:?} has population {p:.3e}")));
        }
        DensityMatrix::new(HilbertSpec::mechanical(self.dim_mech)?, block / C64::from(p))
    }

    /// `⟨ψ|ρ|ψ⟩` for `ψ` on `2 × 2 × dim_mech`; components on `|11⟩` are ignored.
    pub fn overlap(&self, target: &QuantumState) -> Result<f64> {
        let spec = target.spec();
        if spec != HilbertSpec::single_photon(self.dim_mech)? {
            return Err(Error::DimensionMismatch { expected: 4 * self.dim_mech, found: spec.total() });
        }
        let n = self.dim_mech;
        let mut v = DVector::zeros(3 * n);
        for s in Sector::ALL {
            let (a, b) = s.occupation();
            for m in 0..n {
                v[s.offset(n) + m] = target.amplitude(a, b, m);
            }
        }
        Ok((v.adjoint() * &self.entries * &v)[(0, 0)].re)
    }
}

/// Packed storage of the kept blocks, each column-major: vacuum `n×n`,
/// single photon `2n×2n` and, when present, the vacuum/single coherence
/// `n×2n`.
#[derive(Clone, Copy, Debug)]
struct Layout {
    n: usize,
    coherent: bool,
}

impl Layout {
    fn single(&self) -> usize {
        self.n * self.n
    }

    fn coherence(&self) -> usize {
        5 * self.n * self.n
    }

    fn len(&self) -> usize {
        self.coherence() + if self.coherent { 2 * self.n * self.n } else { 0 }
    }

    fn pack(&self, full: &DMatrix<C64>) -> Vec<C64> {
        let n = self.n;
        let mut y = vec![ZERO; self.len()];
        for k in 0..n {
            for j in 0..n {
                y[k * n + j] = full[(j, k)];
            }
        }
        for k in 0..2 * n {
            for j in 0..2 * n {
                y[self.single() + k * 2 * n + j] = full[(n + j, n + k)];
            }
        }
        if self.coherent {
            for k in 0..2 * n {
                for j in 0..n {
                    y[self.coherence() + k * n + j] = full[(j, n + k)];
                }
            }
        }
        y
    }

    fn unpack(&self, y: &[C64]) -> DMatrix<C64> {
        let n = self.n;
        let mut full = DMatrix::zeros(3 * n, 3 * n);
        for k in 0..n {
            for j in 0..n {
                full[(j, k)] = y[k * n + j];
            }
        }
        for k in 0..2 * n {
            for j in 0..2 * n {
                full[(n + j, n + k)] = y[self.single() + k * 2 * n + j];
            }
        }
        if self.coherent {
            for k in 0..2 * n {
                for j in 0..n {
                    let x = y[self.coherence() + k * n + j];
                    full[(j, n + k)] = x;
                    full[(n + k, j)] = x.conj();
                }
            }
        }
        full
    }
}

/// Liouvillian on the kept sectors, written in the frame of the diagonal
/// of `H(t)`.
struct SectorGenerator {
    n: usize,
    phases: BlockPhases,
    params: SystemParams,
    diss: DissipationParams,
    frame: bool,
    sqrt: Vec<f64>,
    up: Vec<f64>,
}

impl SectorGenerator {
    fn new(params: &SystemParams, diss: &DissipationParams, n: usize, frame: bool) -> Self {
        let up = (0..n).map(|m| ((m + 1) as f64 * (m + 2) as f64).sqrt()).collect();
        let sqrt = (0..=n).map(|m| (m as f64).sqrt()).collect();
        Self { n, phases: BlockPhases::new(params), params: *params, diss: *diss, frame, sqrt, up }
    }

    /// Integrated diagonal `φ_j(t)` in sector order.
    fn phase(&self, t: f64, out: &mut [f64]) {
        let n = self.n;
        for m in 0..n {
            out[m] = m as f64 * self.params.omega_m * t;
            out[n + m] = self.phases.a(m, t);
            out[2 * n + m] = self.phases.b(m, t);
        }
    }

    /// Diagonal of `H(t)` in sector order.
    fn rate(&self, t: f64, out: &mut [f64]) {
        let n = self.n;
        let p = &self.params;
        let mod_ = p.delta0 * (2.0 * p.j * t).cos();
        for m in 0..n {
            let mf = m as f64;
            let x2 = p.g0 * (2.0 * mf + 1.0);
            out[m] = mf * p.omega_m;
            out[n + m] = p.omega_c + mod_ + mf * p.omega_m + x2;
            out[2 * n + m] = p.omega_c - mod_ + mf * p.omega_m - x2;
        }
    }

    /// `ρ → U†ρU` (`sign = 1`, into the frame) or back (`sign = −1`).
    fn to_frame(&self, t: f64, rho: &mut DMatrix<C64>, sign: f64) {
        if !self.frame {
            return;
        }
        let mut phi = vec![0.0; 3 * self.n];
        self.phase(t, &mut phi);
        let u: Vec<C64> = phi.iter().map(|p| C64::from_polar(1.0, sign * p)).collect();
        for k in 0..rho.ncols() {
            let uk = u[k].conj();
            for j in 0..rho.nrows() {
                rho[(j, k)] *= u[j] * uk;
            }
        }
    }

    fn rhs(&self, t: f64, lay: Layout, y: &[C64], dy: &mut [C64]) {
        let n = self.n;
        let d1 = 2 * n;
        let p = &self.params;
        let mut u = vec![ONE; 3 * n];
        let mut diag = vec![0.0; 3 * n];
        if self.frame {
            let mut phi = vec![0.0; 3 * n];
            self.phase(t, &mut phi);
            for (uj, f) in u.iter_mut().zip(&phi) {
                *uj = C64::from_polar(1.0, *f);
            }
        } else {
            self.rate(t, &mut diag);
        }
        let (u0, u1) = u.split_at(n);
        let (diag0, diag1) = diag.split_at(n);

        // frame Hamiltonian in the single block, three neighbours per row
        let mut nb = vec![[(0usize, ZERO); 3]; d1];
        for (j, row) in nb.iter_mut().enumerate() {
            let (side, m) = (j / n, j % n);
            let partner = if side == 0 { n + m } else { m };
            let sign = if side == 0 { 1.0 } else { -1.0 };
            row[0] = (partner, u1[j] * u1[partner].conj() * p.j);
            row[1] = (j, ZERO);
            row[2] = (j, ZERO);
            if m + 2 < n {
                row[1] = (j + 2, u1[j] * u1[j + 2].conj() * (sign * p.g0 * self.up[m]));
            }
            if m >= 2 {
                row[2] = (j - 2, u1[j] * u1[j - 2].conj() * (sign * p.g0 * self.up[m - 2]));
            }
        }
        // phase ratios of the phonon jumps and of photon loss
        let ratio = |v: &[C64], j: usize| if j % n + 1 < n { v[j] * v[j + 1].conj() } else { ZERO };
        let w0: Vec<C64> = (0..n).map(|m| ratio(u0, m)).collect();
        let w1: Vec<C64> = (0..d1).map(|j| ratio(u1, j)).collect();
        let loss: Vec<C64> = (0..d1).map(|j| u0[j % n] * u1[j].conj()).collect();

        let gc = self.diss.gamma_c;
        let wm = 0.5 * self.diss.gamma_m;
        let (nd, nu) = (wm * (self.diss.n_th + 1.0), wm * self.diss.n_th);
        let sq = &self.sqrt;
        // −½{(n_th+1)b†b + n_th bb†}, with truncated bb†
        let damp: Vec<f64> =
            (0..n).map(|m| 0.5 * nd * m as f64 + 0.5 * nu * if m + 1 < n { (m + 1) as f64 } else { 0.0 }).collect();
        let mi = C64::new(0.0, -1.0);

        let (vac, rest) = y.split_at(lay.single());
        let (single, coh) = rest.split_at(d1 * d1);
        let (dvac, drest) = dy.split_at_mut(lay.single());
        let (dsingle, dcoh) = drest.split_at_mut(d1 * d1);
        let s = |j: usize, k: usize| single[k * d1 + j];

        for k in 0..d1 {
            let mk = k % n;
            for j in 0..=k {
                let mj = j % n;
                let x = s(j, k);
                let mut h = ZERO;
                for &(l, c) in &nb[j] {
                    h += c * s(l, k);
                }
                for &(l, c) in &nb[k] {
                    h -= s(j, l) * c.conj();
                }
                let mut v = mi * (h + x * (diag1[j] - diag1[k]));
                v -= x * (gc + damp[mj] + damp[mk]);
                if mj + 1 < n && mk + 1 < n {
                    v += w1[j] * w1[k].conj() * s(j + 1, k + 1) * (nd * sq[mj + 1] * sq[mk + 1]);
                }
                if mj > 0 && mk > 0 {
                    v += w1[j - 1].conj() * w1[k - 1] * s(j - 1, k - 1) * (nu * sq[mj] * sq[mk]);
                }
                dsingle[k * d1 + j] = v;
            }
        }
        for k in 0..n {
            for j in 0..=k {
                let x = vac[k * n + j];
                let mut v = mi * x * (diag0[j] - diag0[k]) - x * (damp[j] + damp[k]);
                if k + 1 < n {
                    v += w0[j] * w0[k].conj() * vac[(k + 1) * n + j + 1] * (nd * sq[j + 1] * sq[k + 1]);
                }
                if j > 0 {
                    v += w0[j - 1].conj() * w0[k - 1] * vac[(k - 1) * n + j - 1] * (nu * sq[j] * sq[k]);
                }
                if gc > 0.0 {
                    for side in 0..2 {
                        let (a, b) = (side * n + j, side * n + k);
                        v += loss[a] * loss[b].conj() * s(a, b) * gc;
                    }
                }
                dvac[k * n + j] = v;
            }
        }
        for m in [&mut *dvac, &mut *dsingle] {
            let dim = if m.len() == n * n { n } else { d1 };
            for k in 0..dim {
                for j in 0..k {
                    m[j * dim + k] = m[k * dim + j].conj();
                }
                m[k * dim + k].im = 0.0;
            }
        }
        if lay.coherent {
            let c = |j: usize, k: usize| coh[k * n + j];
            for k in 0..d1 {
                let mk = k % n;
                for j in 0..n {
                    let x = c(j, k);
                    let mut h = ZERO;
                    for &(l, cf) in &nb[k] {
                        h += c(j, l) * cf.conj();
                    }
                    let mut v = C64::new(0.0, 1.0) * h + mi * x * (diag0[j] - diag1[k]);
                    v -= x * (0.5 * gc + damp[j] + damp[mk]);
                    if j + 1 < n && mk + 1 < n {
                        v += w0[j] * w1[k].conj() * c(j + 1, k + 1) * (nd * sq[j + 1] * sq[mk + 1]);
                    }
                    if j > 0 && mk > 0 {
                        v += w0[j - 1].conj() * w1[k - 1] * c(j - 1, k - 1) * (nu * sq[j] * sq[mk]);
                    }
                    dcoh[k * n + j] = v;
                }
            }
        }
    }

    /// Derivative of a full `3n × 3n` frame matrix, for cross-checks.
    #[cfg(test)]
    fn rhs_full(&self, t: f64, y: &DMatrix<C64>) -> DMatrix<C64> {
        let lay = Layout { n: self.n, coherent: true };
        let packed = lay.pack(y);
        let mut dy = vec![ZERO; packed.len()];
        self.rhs(t, lay, &packed, &mut dy);
        lay.unpack(&dy)
    }
}

/// Health indicators of one master-equation run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MasterSummary {
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_defect: f64,
}

/// Integrates the master equation on the kept sectors, calling `observe`
/// with the lab-frame state at every requested time.
pub fn integrate_master_with<O>(
    rho0: &SectorDensity,
    params: &SystemParams,
    diss: &DissipationParams,
    times: &[f64],
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<MasterSummary>
where
    O: FnMut(usize, f64, &SectorDensity) -> Result<()>,
{
    params.validate()?;
    diss.validate()?;
    cfg.validate()?;
    if params.scheme != Scheme::FrequencyModulated {
        return Err(Error::Scheme("the master equation is set up for the frequency-modulated scheme".into()));
    }
    check_times(times)?;
    let tr0 = rho0.trace();
    if (tr0 - 1.0).abs() > 1e-8 || rho0.hermiticity_defect() > 1e-10 {
        return Err(Error::InvalidState(format!("initial density matrix has trace {tr0} or is not Hermitian")));
    }
    let n = rho0.dim_mech;
    // coherences between the vacuum and single-photon sectors stay zero when
    // they start at zero
    let coherent = rho0.entries.view((0, n), (n, 2 * n)).iter().any(|z| *z != ZERO);
    let lay = Layout { n, coherent };
    let gen = SectorGenerator::new(params, diss, n, cfg.interaction_picture);
    let mut start = rho0.entries.clone();
    gen.to_frame(times[0], &mut start, 1.0);

    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| gen.rhs(t, lay, y, dy);
    let mut summary =
        MasterSummary { max_trace_drift: 0.0, min_eigenvalue: f64::INFINITY, max_hermiticity_defect: 0.0 };
    integrate(lay.pack(&start), times, cfg, rhs, |k, t, y| {
        let mut m = lay.unpack(y);
        gen.to_frame(t, &mut m, -1.0);
        let state = SectorDensity { dim_mech: n, entries: m };
        let drift = (state.trace() - 1.0).abs();
        let min_eig = state.min_eigenvalue();
        summary.max_trace_drift = summary.max_trace_drift.max(drift);
        summary.min_eigenvalue = summary.min_eigenvalue.min(min_eig);
        summary.max_hermiticity_defect = summary.max_hermiticity_defect.max(state.hermiticity_defect());
        if drift > TRACE_DRIFT_LIMIT {
            return Err(Error::Accuracy(format!("trace drift {drift:.3e} at t={t}")));
        }
        if min_eig < POSITIVITY_LIMIT {
            return Err(Error::Accuracy(format!("min eigenvalue {min_eig:.3e} at t={t}")));
        }
        observe(k, t, &state)
    })?;
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct MasterTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<SectorDensity>,
    pub summary: MasterSummary,
}

/// Integrates the master equation from `rho0` on `2 × 2 × dim_mech`
/// (restricted to at most one photon) and stores every state.
pub fn integrate_master(
    rho0: &DensityMatrix,
    params: &SystemParams,
    diss: &DissipationParams,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<MasterTrajectory> {
    let start = SectorDensity::from_density(rho0)?;
    let mut states = Vec::with_capacity(times.len());
    let summary = integrate_master_with(&start, params, diss, times, cfg, |_, _, s| {
        states.push(s.clone());
        Ok(())
    })?;
    Ok(MasterTrajectory { times: times.to_vec(), states, summary })
}

/// `F_E = ⟨target|ρ|target⟩`.
pub fn open_fidelity(rho: &DensityMatrix, target: &QuantumState) -> Result<f64> {
    rho.overlap(target)
}

/// Open-system run from `(|10⟩ + |01⟩)|0⟩/√2` to `T_M`.
#[derive(Clone, Debug)]
pub struct OpenRun {
    pub t_max: f64,
    pub dim_mech: usize,
    pub times: Vec<f64>,
    /// `F_E(t)` against the closed-system analytic superposed state.
    pub fidelity: Vec<f64>,
    pub purity: Vec<f64>,
    pub final_state: SectorDensity,
    pub summary: MasterSummary,
}

impl OpenRun {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("non-empty run")
    }
}

pub fn superposed_initial_state(dim_mech: usize) -> Result<SectorDensity> {
    let spec = HilbertSpec::single_photon(dim_mech)?;
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![ZERO; spec.total()];
    amps[spec.index(1, 0, 0)] = h;
    amps[spec.index(0, 1, 0)] = h;
    SectorDensity::from_pure(&QuantumState::new(spec, amps)?)
}

/// Runs to `T_M` with `samples + 1` equally spaced output times.
pub fn run_open_to_max_squeeze(
    params: &SystemParams,
    diss: &DissipationParams,
    dim_mech: usize,
    samples: usize,
    cfg: &IntegratorConfig,
) -> Result<OpenRun> {
    let t_max = t_max_squeeze(params, 1)?;
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|k| t_max * k as f64 / samples as f64).collect();
    let rho0 = superposed_initial_state(dim_mech)?;
    let spec = HilbertSpec::single_photon(dim_mech)?;
    let mut fidelity = Vec::with_capacity(times.len());
    let mut purity = Vec::with_capacity(times.len());
    let mut last = None;
    let summary = integrate_master_with(&rho0, params, diss, &times, cfg, |k, t, s| {
        let target = analytic_state_superposed(t, params, spec)?.full;
        fidelity.push(s.overlap(&target)?);
        purity.push(s.purity());
        if k == samples {
            last = Some(s.clone());
        }
        Ok(())
    })?;
    Ok(OpenRun { t_max, dim_mech, times, fidelity, purity, final_state: last.expect("final sample observed"), summary })
}

/// Final fidelity at `dim_mech` and at `1.25 × dim_mech`.
#[derive(Clone, Debug)]
pub struct ConvergenceCheck {
    pub coarse: OpenRun,
    pub fine: OpenRun,
    pub change: f64,
    pub converged: bool,
}

pub const CONVERGENCE_TOLERANCE: f64 = 1e-3;

pub fn check_open_convergence(
    params: &SystemParams,
    diss: &DissipationParams,
    dim_mech: usize,
    cfg: &IntegratorConfig,
) -> Result<ConvergenceCheck> {
    let fine_dim = (dim_mech as f64 * 1.25).ceil() as usize;
    let (coarse, fine) = rayon::join(
        || run_open_to_max_squeeze(params, diss, dim_mech, 1, cfg),
        || run_open_to_max_squeeze(params, diss, fine_dim, 1, cfg),
    );
    let (coarse, fine) = (coarse?, fine?);
    let change = (coarse.final_fidelity() - fine.final_fidelity()).abs();
    Ok(ConvergenceCheck { coarse, fine, change, converged: change < CONVERGENCE_TOLERANCE })
}
