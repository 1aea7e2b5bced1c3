//! Wigner quasi-probability distributions: numerical evaluation through
//! displaced parity and closed-form sums for superposed squeezed states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::analytic::{branch_coefficients, squeeze_parameters, squeezed_overlap};
use crate::fock::{DensityMatrix, QuantumState};
use crate::model::{Scheme, SystemParams};
use crate::{Error, Result};

pub const HERMITE_MAX_ORDER: usize = 512;
pub const EDGE_MASS_LIMIT: f64 = 1e-6;
pub const IMAG_RESIDUE_LIMIT: f64 = 1e-9;
/// Fock cutoff of the closed-form sums.
pub const DEFAULT_CUTOFF: usize = 240;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Uniform grid over `α = x + iy`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::square(3.0, 121)
    }
}

impl GridSpec {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Result<Self> {
        let g = Self { re_min: re.0, re_max: re.1, im_min: im.0, im_max: im.1, n_re, n_im };
        g.validate()?;
        Ok(g)
    }

    /// `[−half, half]²` with `n` points per axis.
    pub fn square(half: f64, n: usize) -> Self {
        Self { re_min: -half, re_max: half, im_min: -half, im_max: half, n_re: n, n_im: n }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max].iter().all(|v| v.is_finite());
        if !finite || !(self.re_max > self.re_min) || !(self.im_max > self.im_min) {
            return Err(Error::Domain(format!("bad grid bounds {self:?}")));
        }
        if self.n_re < 2 || self.n_im < 2 {
            return Err(Error::InvalidDimension(format!("grid needs at least 2 points per axis, got {self:?}")));
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        // exactly antisymmetric when lo = −hi
        let d = (n - 1) as f64;
        (0..n).map(|k| (lo * (n - 1 - k) as f64 + hi * k as f64) / d).collect()
    }

    pub fn re_axis(&self) -> Vec<f64> {
        Self::axis(self.re_min, self.re_max, self.n_re)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        Self::axis(self.im_min, self.im_max, self.n_im)
    }

    pub fn cell_area(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64 * (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_min, self.im_max),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
        ]
    }
}

/// Real values on a grid, row-major with rows along the imaginary axis.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub cell_area: f64,
}

impl WignerGrid {
    /// Tabulates a closed-form `W(α)`.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(C64) -> f64 + Sync) -> Self {
        let re_axis = grid.re_axis();
        let im_axis = grid.im_axis();
        let values = im_axis
            .par_iter()
            .flat_map_iter(|&y| re_axis.iter().map(|&x| f(C64::new(x, y))).collect::<Vec<_>>())
            .collect();
        Self { re_axis, im_axis, values, cell_area: grid.cell_area() }
    }

    /// Value at `re_axis[i]`, `im_axis[j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.re_axis.len() + i]
    }

    /// `Σ W · ΔA`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_diff(&self, other: &WignerGrid) -> Result<f64> {
        if self.re_axis != other.re_axis || self.im_axis != other.im_axis {
            return Err(Error::DimensionMismatch { expected: self.values.len(), found: other.values.len() });
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// `W'(α) = W(iα)`, the Wigner function of `e^{−iπb†b/2} ρ e^{iπb†b/2}`.
    /// Needs identical axes symmetric about zero.
    pub fn rotate_quarter(&self) -> Result<WignerGrid> {
        let n = self.re_axis.len();
        let symmetric = (0..n).all(|k| self.re_axis[k] == -self.re_axis[n - 1 - k]);
        if self.im_axis != self.re_axis || !symmetric {
            return Err(Error::Domain("quarter rotation needs a square grid symmetric about the origin".into()));
        }
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                // iα = −y + ix
                values[j * n + i] = self.get(n - 1 - j, i);
            }
        }
        Ok(WignerGrid { values, ..self.clone() })
    }

    /// `P(x) = ∫ W(x + iy) dy`, the distribution of `(b + b†)/2`.
    pub fn marginal_re(&self) -> Vec<f64> {
        let nx = self.re_axis.len();
        let dy = self.im_axis[1] - self.im_axis[0];
        (0..nx).map(|i| (0..self.im_axis.len()).map(|j| self.get(i, j)).sum::<f64>() * dy).collect()
    }

    /// Variance of the real-axis marginal, normalized by its own mass.
    pub fn marginal_re_variance(&self) -> f64 {
        let p = self.marginal_re();
        let mass: f64 = p.iter().sum();
        let mean: f64 = p.iter().zip(&self.re_axis).map(|(w, x)| w * x).sum::<f64>() / mass;
        p.iter().zip(&self.re_axis).map(|(w, x)| w * (x - mean).powi(2)).sum::<f64>() / mass
    }
}

/// Complex values on a grid, used for the interference components.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub values: Vec<C64>,
}

impl ComplexGrid {
    pub fn conj(&self) -> ComplexGrid {
        ComplexGrid { values: self.values.iter().map(|z| z.conj()).collect(), ..self.clone() }
    }
}

/// Eigenvectors of ρ with weights above `1e-13`.
fn significant_eigen(rho: &DMatrix<C64>) -> Vec<(f64, DVector<C64>)> {
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    (0..eig.eigenvalues.len())
        .filter(|&k| eig.eigenvalues[k].abs() > 1e-13)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
        .collect()
}

/// Eigenbasis of the truncated `T = b + b†`: ascending eigenvalues τ,
/// eigenvectors as columns of `P`, and the signs `s_k` with
/// `(−1)^{b†b} p_k = s_k p_{N−1−k}` (the spectrum is symmetric).
struct PositionBasis {
    tau: Vec<f64>,
    p: DMatrix<f64>,
    sign: Vec<f64>,
}

impl PositionBasis {
    fn new(dim: usize) -> Result<Self> {
        let mut t = DMatrix::<f64>::zeros(dim, dim);
        for m in 1..dim {
            let s = (m as f64).sqrt();
            t[(m, m - 1)] = s;
            t[(m - 1, m)] = s;
        }
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let tau: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let p = DMatrix::from_fn(dim, dim, |m, k| eig.eigenvectors[(m, order[k])]);
        let sign: Vec<f64> = (0..dim)
            .map(|k| (0..dim).map(|m| if m % 2 == 0 { 1.0 } else { -1.0 } * p[(m, k)] * p[(m, dim - 1 - k)]).sum())
            .collect();
        let worst = sign.iter().map(|s: &f64| (s.abs() - 1.0).abs()).fold(0.0, f64::max);
        if worst > 1e-8 {
            return Err(Error::Accuracy(format!("parity pairing of the position basis off by {worst:.3e}")));
        }
        Ok(Self { tau, p, sign })
    }
}

/// Working dimension large enough that displacing levels `< dim` by up to
/// `amax` stays inside it.
fn padded_dim(dim: usize, amax: f64) -> usize {
    dim + (amax * amax + 6.0 * amax * (dim as f64 + 1.0).sqrt()).ceil() as usize + 30
}

/// `W(α) = (2/π) Tr[D†(α) ρ D(α) (−1)^{b†b}]` over the grid.
///
/// `D(−x − iy)` is applied up to a global phase as `D(−x) D(−iy)`, with both
/// truncated displacements diagonal in the eigenbasis of `b + b†`:
/// `D(−iy) = e^{−iyT}` and `D(−x) = U† e^{−ixT} U`, `U = diag(iᵐ)`.
pub fn wigner_numeric(rho: &DensityMatrix, grid: &GridSpec) -> Result<WignerGrid> {
    grid.validate()?;
    if !rho.spec().is_mechanical() {
        return Err(Error::InvalidState("Wigner functions need a mechanical density matrix".into()));
    }
    let n = rho.spec().dim_mech;
    let eig = significant_eigen(rho.entries());
    let amax = grid.corners().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let big = padded_dim(n, amax);
    let basis = PositionBasis::new(big)?;
    let pc = basis.p.map(C64::from);
    let rot = |m: usize| C64::new(0.0, 1.0).powu((m % 4) as u32);
    // M = Pᵀ U P and the eigenvectors in the position basis
    let up = DMatrix::from_fn(big, big, |m, k| rot(m) * basis.p[(m, k)]);
    let mm = pc.transpose() * up;
    let weights: Vec<f64> = eig.iter().map(|(w, _)| *w).collect();
    let a = DMatrix::from_fn(big, eig.len(), |k, e| (0..n).map(|m| eig[e].1[m] * basis.p[(m, k)]).sum::<C64>());

    let re_axis = grid.re_axis();
    let im_axis = grid.im_axis();
    let band = (big / 10).max(2);
    let phases: Vec<Vec<C64>> =
        re_axis.iter().map(|&x| basis.tau.iter().map(|t| C64::from_polar(1.0, -2.0 * x * t)).collect()).collect();
    let corner_rows = [0, im_axis.len() - 1];
    let corner_cols = [0, re_axis.len() - 1];

    let rows: Vec<(Vec<f64>, f64)> = im_axis
        .par_iter()
        .enumerate()
        .map(|(j, &y)| {
            let shifted = DMatrix::from_fn(big, a.ncols(), |k, e| a[(k, e)] * C64::from_polar(1.0, -y * basis.tau[k]));
            let c = &mm * shifted;
            // g_k = Σ_e w_e s_k c*_{σ(k)} c_k
            let g: Vec<C64> = (0..big)
                .map(|k| {
                    let partner = big - 1 - k;
                    (0..c.ncols()).map(|e| c[(partner, e)].conj() * c[(k, e)] * weights[e]).sum::<C64>() * basis.sign[k]
                })
                .collect();
            let row: Vec<f64> =
                phases.iter().map(|ph| FRAC_2_PI * ph.iter().zip(&g).map(|(p, g)| (p * g).re).sum::<f64>()).collect();
            let mut edge = 0.0f64;
            if corner_rows.contains(&j) {
                for &i in &corner_cols {
                    let x = re_axis[i];
                    let mut mass = 0.0;
                    for (e, w) in weights.iter().enumerate() {
                        for m in big - band..big {
                            let z: C64 =
                                (0..big).map(|k| c[(k, e)] * C64::from_polar(basis.p[(m, k)], -x * basis.tau[k])).sum();
                            mass += w.abs() * z.norm_sqr();
                        }
                    }
                    edge = edge.max(mass);
                }
            }
            (row, edge)
        })
        .collect();
    let worst = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if worst > EDGE_MASS_LIMIT {
        return Err(Error::Truncation(format!(
            "displaced states leak {worst:.3e} onto the top of {big} working Fock levels"
        )));
    }
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(WignerGrid { re_axis, im_axis, values, cell_area: grid.cell_area() })
}

pub fn wigner_pure(psi: &QuantumState, grid: &GridSpec) -> Result<WignerGrid> {
    wigner_numeric(&DensityMatrix::from_pure(psi), grid)
}

/// Physicists' Hermite polynomial `H_n(z)` by the three-term recurrence.
pub fn hermite_complex(n: usize, z: C64) -> Result<C64> {
    if n > HERMITE_MAX_ORDER {
        return Err(Error::Range(format!("Hermite order {n} exceeds {HERMITE_MAX_ORDER}")));
    }
    let (mut prev, mut cur) = (C64::new(1.0, 0.0), z * 2.0);
    if n == 0 {
        return Ok(prev);
    }
    for k in 1..n {
        let next = z * 2.0 * cur - prev * (2.0 * k as f64);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `⟨k|α, Z⟩` for `k < count`, where `|α, Z⟩ = D(α)S(Z)|0⟩`.
///
/// Uses the scaled Hermite recurrence
/// `u_{k+1} = (γ u_k / cosh R − √k e^{iΦ} tanh R u_{k−1}) / √(k+1)` with
/// `γ = α cosh R + α* e^{iΦ} sinh R`.
pub fn squeezed_coherent_amplitudes(alpha: C64, z: C64, count: usize) -> Vec<C64> {
    let r = z.norm();
    let e = if r == 0.0 { C64::new(1.0, 0.0) } else { z / r };
    let (ch, th) = (r.cosh(), r.tanh());
    let gamma = alpha * ch + alpha.conj() * e * r.sinh();
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    let u0 = (-0.5 * alpha.norm_sqr() - 0.5 * alpha.conj() * alpha.conj() * e * th).exp() / ch.sqrt();
    out.push(u0);
    let lead = gamma / ch;
    let back = e * th;
    for k in 0..count - 1 {
        let kf = k as f64;
        let mut next = lead * out[k];
        if k > 0 {
            next -= back * out[k - 1] * kf.sqrt();
        }
        out.push(next / (kf + 1.0).sqrt());
    }
    out
}

/// Single amplitude `S(k, α, Z) = ⟨k|α, Z⟩`; `Z = 0` gives the coherent state.
pub fn squeezed_coherent_amplitude(k: usize, alpha: C64, z: C64) -> C64 {
    squeezed_coherent_amplitudes(alpha, z, k + 1)[k]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    L,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interference {
    Included,
    Suppressed,
}

/// Total Wigner function of one branch and its components.
#[derive(Clone, Debug)]
pub struct SuperposedWigner {
    pub total: WignerGrid,
    /// Wigner function of `|Z⟩`.
    pub plus: WignerGrid,
    /// Wigner function of `|−Z⟩`.
    pub minus: WignerGrid,
    /// Wigner transform of `|Z⟩⟨−Z|`.
    pub plus_minus: ComplexGrid,
    /// Wigner transform of `|−Z⟩⟨Z|`, the conjugate of `plus_minus`.
    pub minus_plus: ComplexGrid,
    /// Largest imaginary part of the assembled total before it was dropped.
    pub imag_residue: f64,
}

/// Closed-form Wigner function of the mechanical branch state φ_L or φ_R at
/// time `t`, summing Fock amplitudes up to `cutoff`.
pub fn wigner_superposed_analytic(
    side: Side,
    params: &SystemParams,
    t: f64,
    grid: &GridSpec,
    cutoff: usize,
    interference: Interference,
) -> Result<SuperposedWigner> {
    grid.validate()?;
    if params.scheme != Scheme::FrequencyModulated {
        return Err(Error::Scheme("branch states are defined for the frequency-modulated scheme".into()));
    }
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("cutoff must be at least 2, got {cutoff}")));
    }
    let rec = squeeze_parameters(t, params, 1)?;
    let z = rec.z;
    let (cl, cr) = branch_coefficients(t, params);
    let [p, q] = match side {
        Side::L => cl,
        Side::R => cr,
    };
    let cross = p * q.conj();
    let (norm, cross) = match interference {
        Interference::Included => (p.norm_sqr() + q.norm_sqr() + 2.0 * cross.re * squeezed_overlap(rec.modulus), cross),
        Interference::Suppressed => (p.norm_sqr() + q.norm_sqr(), ZERO),
    };

    let re_axis = grid.re_axis();
    let im_axis = grid.im_axis();
    let points: Vec<C64> = im_axis.iter().flat_map(|&y| re_axis.iter().map(move |&x| C64::new(x, y))).collect();
    // (W₊, W₋, W₊₋, edge mass) per point
    let comps: Vec<(f64, f64, C64, f64)> = points
        .par_iter()
        .map(|&alpha| {
            let sp = squeezed_coherent_amplitudes(-alpha, z, cutoff);
            let sm = squeezed_coherent_amplitudes(-alpha, -z, cutoff);
            let (mut wp, mut wm, mut wpm) = (0.0, 0.0, ZERO);
            let (mut np, mut nm) = (0.0, 0.0);
            for k in 0..cutoff {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let (a, b) = (sp[k].norm_sqr(), sm[k].norm_sqr());
                wp += sign * a;
                wm += sign * b;
                wpm += sp[k] * sm[k].conj() * sign;
                np += a;
                nm += b;
            }
            let tail = (1.0 - np).abs().max((1.0 - nm).abs());
            (FRAC_2_PI * wp, FRAC_2_PI * wm, wpm * FRAC_2_PI, tail)
        })
        .collect();
    let worst = comps.iter().map(|c| c.3).fold(0.0, f64::max);
    if worst > EDGE_MASS_LIMIT {
        return Err(Error::Truncation(format!("Fock cutoff {cutoff} misses {worst:.3e} of the displaced states")));
    }

    let mut imag_residue = 0.0f64;
    let mut total = Vec::with_capacity(comps.len());
    for &(wp, wm, wpm, _) in &comps {
        let w = (C64::from(p.norm_sqr() * wp + q.norm_sqr() * wm) + cross * wpm + cross.conj() * wpm.conj()) / norm;
        imag_residue = imag_residue.max(w.im.abs());
        total.push(w.re);
    }
    if imag_residue > IMAG_RESIDUE_LIMIT {
        return Err(Error::Accuracy(format!("Wigner total has imaginary residue {imag_residue:.3e}")));
    }
    let area = grid.cell_area();
    let real = |f: &dyn Fn(&(f64, f64, C64, f64)) -> f64| WignerGrid {
        re_axis: re_axis.clone(),
        im_axis: im_axis.clone(),
        values: comps.iter().map(f).collect(),
        cell_area: area,
    };
    let plus_minus =
        ComplexGrid { re_axis: re_axis.clone(), im_axis: im_axis.clone(), values: comps.iter().map(|c| c.2).collect() };
    Ok(SuperposedWigner {
        total: WignerGrid { re_axis: re_axis.clone(), im_axis: im_axis.clone(), values: total, cell_area: area },
        plus: real(&|c| c.0),
        minus: real(&|c| c.1),
        minus_plus: plus_minus.conj(),
        plus_minus,
        imag_residue,
    })
}

/// Closed-form Wigner function of the squeezed vacuum `|Z⟩`: a Gaussian with
/// variance `e^{−2R}/4` along angle `Φ/2` and `e^{2R}/4` across it.
pub fn squeezed_vacuum_wigner(z: C64, alpha: C64) -> f64 {
    let r = z.norm();
    let half = if r == 0.0 { 0.0 } else { z.arg() / 2.0 };
    let (s, c) = half.sin_cos();
    let u = alpha.re * c + alpha.im * s;
    let v = -alpha.re * s + alpha.im * c;
    FRAC_2_PI * (-2.0 * (u * u * (2.0 * r).exp() + v * v * (-2.0 * r).exp())).exp()
}

/// `e^{−iθ b†b} ρ e^{iθ b†b}`.
pub fn rotate_state(rho: &DensityMatrix, theta: f64) -> Result<DensityMatrix> {
    let e = rho.entries();
    let rotated =
        DMatrix::from_fn(e.nrows(), e.ncols(), |j, k| e[(j, k)] * C64::from_polar(1.0, -theta * (j as f64 - k as f64)));
    DensityMatrix::new(rho.spec(), rotated)
}

/// Vacuum Wigner function `(2/π) e^{−2|α|²}`.
pub fn vacuum_wigner(alpha: C64) -> f64 {
    2.0 / PI * (-2.0 * alpha.norm_sqr()).exp()
}
