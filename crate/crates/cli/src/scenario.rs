//! Scenario runners. Each one writes its tables and grids through a
//! [`Writer`] and finishes with the manifest.

use std::path::PathBuf;

use rayon::prelude::*;
use rayon::ThreadPool;
use squeezesim::analytic::{max_squeeze_modulus, squeeze_parameters, squeezing_db, t_max_squeeze};
use squeezesim::dynamics::{
    integrate_schrodinger, min_quadrature_variance, run_to_max_squeeze, FidelityKind, Mechanical,
};
use squeezesim::fock::{partial_trace_mechanical, DensityMatrix, HilbertSpec, QuantumState};
use squeezesim::lindblad::{run_open_to_max_squeeze, DissipationParams, OpenRun, Sector};
use squeezesim::model::{ModelHamiltonian, SystemParams};
use squeezesim::ode::IntegratorConfig;
use squeezesim::wigner::{wigner_numeric, wigner_superposed_analytic, GridSpec, Interference, Side};
use squeezesim::Error;

use crate::config::{ScenarioConfig, ScenarioId, SchemeKind};
use crate::error::{CliError, CliResult, Context};
use crate::output::{Table, Writer};

pub const WORKERS_ENV: &str = "SQUEEZESIM_WORKERS";

/// Thread pool sized from `SQUEEZESIM_WORKERS`, or rayon's default.
pub fn worker_pool() -> CliResult<ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
}

/// Runs the configured scenario and returns the manifest path.
pub fn run(cfg: &ScenarioConfig, pool: &ThreadPool) -> CliResult<PathBuf> {
    cfg.validate()?;
    let mut w = Writer::create(&cfg.output, &cfg.formats)?;
    pool.install(|| match cfg.scenario {
        ScenarioId::Fig2a => fig2a(cfg, &mut w),
        ScenarioId::Fig2b => closed_series(cfg, &mut w, "fig2b", FidelityKind::Single),
        ScenarioId::Fig4a => closed_series(cfg, &mut w, "fig4a", FidelityKind::Superposed),
        ScenarioId::Fig3 => closed_map(cfg, &mut w, "fig3", FidelityKind::Single),
        ScenarioId::Fig4b => closed_map(cfg, &mut w, "fig4b", FidelityKind::Superposed),
        ScenarioId::Fig5 => fig5(cfg, &mut w),
        ScenarioId::Fig6 => fig6(cfg, &mut w),
        ScenarioId::Fig7 => fig7(cfg, &mut w),
        ScenarioId::Custom if cfg.sweep.is_empty() => custom(cfg, &mut w),
        ScenarioId::Custom => sweep(cfg, &mut w),
    })?;
    w.finish(cfg)
}

fn integrator(cfg: &ScenarioConfig, p: &SystemParams) -> IntegratorConfig {
    IntegratorConfig::for_params(p, cfg.numerics.steps_per_period)
}

fn frequency_params(cfg: &ScenarioConfig) -> CliResult<SystemParams> {
    if cfg.params.scheme != SchemeKind::Frequency {
        return Err(CliError::Config(format!("{} needs params.scheme = frequency", cfg.scenario)));
    }
    Ok(cfg.params.system())
}

fn with(cfg: &ScenarioConfig, key: &str, value: f64) -> CliResult<ScenarioConfig> {
    cfg.with_value(key, value)
}

fn label(kind: FidelityKind) -> &'static str {
    match kind {
        FidelityKind::Single => "F",
        FidelityKind::Superposed => "F_prime",
    }
}

fn sample_times(t_end: f64, samples: usize) -> Vec<f64> {
    (0..=samples).map(|k| t_end * k as f64 / samples as f64).collect()
}

fn grid_spec(cfg: &ScenarioConfig) -> GridSpec {
    GridSpec::square(cfg.numerics.grid_half, cfg.numerics.grid_points)
}

fn fig2a(cfg: &ScenarioConfig, w: &mut Writer) -> CliResult<()> {
    frequency_params(cfg)?;
    for delta in [0.25, 1.0, 1.13, 1.5] {
        let p = with(cfg, "params.delta", delta)?.params.system();
        let mut t = Table::new(["t_g0", "R"]);
        for time in sample_times(cfg.numerics.t_end, cfg.numerics.samples) {
            let rec = squeeze_parameters(time, &p, 1).context(|| format!("delta = {delta}"))?;
            t.push(vec![time, rec.modulus]);
        }
        w.table(&format!("fig2a_delta_{delta}"), &t)?;
    }
    Ok(())
}

fn closed_series(cfg: &ScenarioConfig, w: &mut Writer, stem: &str, kind: FidelityKind) -> CliResult<()> {
    frequency_params(cfg)?;
    let values = [20.0, 60.0, 100.0];
    let runs: Vec<_> = values
        .par_iter()
        .map(|&d0| {
            let p = with(cfg, "params.Delta0", d0)?.params.system();
            run_to_max_squeeze(&p, cfg.numerics.dim_mech, kind, cfg.numerics.samples, &integrator(cfg, &p))
                .context(|| format!("{stem}: Delta0 = {d0}"))
        })
        .collect::<CliResult<_>>()?;
    for (d0, run) in values.iter().zip(runs) {
        let mut t = Table::new(["t_g0", label(kind)]);
        for (time, f) in run.trajectory.times.iter().zip(&run.fidelity) {
            t.push(vec![*time, *f]);
        }
        w.table(&format!("{stem}_Delta0_{d0}"), &t)?;
    }
    Ok(())
}

fn closed_map(cfg: &ScenarioConfig, w: &mut Writer, stem: &str, kind: FidelityKind) -> CliResult<()> {
    frequency_params(cfg)?;
    let delta0s = cfg.numerics.delta0_values();
    for j in [118.6, 258.6, 398.6] {
        let base = with(cfg, "params.J", j)?;
        let finals: Vec<f64> = delta0s
            .par_iter()
            .map(|&d0| {
                let p = with(&base, "params.Delta0", d0)?.params.system();
                let run = run_to_max_squeeze(&p, cfg.numerics.dim_mech, kind, 1, &integrator(cfg, &p))
                    .context(|| format!("{stem}: J = {j}, Delta0 = {d0}"))?;
                Ok(run.final_fidelity())
            })
            .collect::<CliResult<_>>()?;
        let mut t = Table::new(["Delta0_g0".to_string(), format!("{}_TM", label(kind))]);
        for (d0, f) in delta0s.iter().zip(finals) {
            t.push(vec![*d0, f]);
        }
        w.table(&format!("{stem}_J_{j}"), &t)?;
    }
    Ok(())
}

fn fig5(cfg: &ScenarioConfig, w: &mut Writer) -> CliResult<()> {
    let p = frequency_params(cfg)?;
    let tm = t_max_squeeze(&p, 1).context(|| "fig5".into())?;
    let grid = grid_spec(cfg);
    for (side, name) in [(Side::L, "L"), (Side::R, "R")] {
        let wig = wigner_superposed_analytic(side, &p, tm, &grid, cfg.numerics.wigner_cutoff, Interference::Included)
            .context(|| format!("fig5: W_{name}"))?;
        w.grid(&format!("fig5_W_{name}"), &wig.total)?;
    }
    Ok(())
}

/// The reference environment and the three single-rate variants.
fn environments(cfg: &ScenarioConfig) -> Vec<(String, DissipationParams)> {
    let base = cfg.diss.unwrap_or_else(DissipationParams::reference);
    vec![
        ("reference".into(), base),
        ("n_th_12".into(), DissipationParams { n_th: 12.0, ..base }),
        ("gamma_m_0.0012".into(), DissipationParams { gamma_m: 12e-4, ..base }),
        ("gamma_c_1.2".into(), DissipationParams { gamma_c: 1.2, ..base }),
    ]
}

fn open_runs(cfg: &ScenarioConfig, samples: usize) -> CliResult<Vec<(String, DissipationParams, OpenRun)>> {
    let p = frequency_params(cfg)?;
    let cfg_int = integrator(cfg, &p);
    environments(cfg)
        .into_par_iter()
        .map(|(name, d)| {
            let run = run_open_to_max_squeeze(&p, &d, cfg.numerics.open_dim_mech, samples, &cfg_int)
                .context(|| format!("open run {name}"))?;
            Ok((name, d, run))
        })
        .collect()
}

fn fig6(cfg: &ScenarioConfig, w: &mut Writer) -> CliResult<()> {
    let runs = open_runs(cfg, cfg.numerics.open_samples)?;
    let reference = &runs[0];
    let panels: [(&str, usize, &str, fn(&DissipationParams) -> f64); 3] = [
        ("fig6a_n_th", 1, "n_th", |d| d.n_th),
        ("fig6b_gamma_m", 2, "gamma_m", |d| d.gamma_m),
        ("fig6c_gamma_c", 3, "gamma_c", |d| d.gamma_c),
    ];
    for (stem, idx, key, get) in panels {
        let variant = &runs[idx];
        let mut t = Table::new([
            "t_g0".to_string(),
            format!("F_E_{key}_{}", get(&reference.1)),
            format!("F_E_{key}_{}", get(&variant.1)),
        ]);
        for k in 0..reference.2.times.len() {
            t.push(vec![reference.2.times[k], reference.2.fidelity[k], variant.2.fidelity[k]]);
        }
        w.table(stem, &t)?;
    }
    Ok(())
}

fn fig7(cfg: &ScenarioConfig, w: &mut Writer) -> CliResult<()> {
    let grid = grid_spec(cfg);
    for (name, _, run) in open_runs(cfg, 1)? {
        let rho = run.final_state.conditional_mechanical(Sector::Left).context(|| format!("fig7 {name}"))?;
        let wig = wigner_numeric(&rho, &grid).context(|| format!("fig7 {name}: Wigner"))?;
        w.grid(&format!("fig7_W_L_{name}"), &wig)?;
    }
    Ok(())
}

fn squeeze_table(cfg: &ScenarioConfig, p: &SystemParams) -> CliResult<Table> {
    let mut t = Table::new(["t_g0", "R", "Phi"]);
    for time in sample_times(cfg.numerics.t_end, cfg.numerics.samples) {
        let rec = squeeze_parameters(time, p, 1).context(|| "squeeze parameters".into())?;
        t.push(vec![time, rec.modulus, rec.phase]);
    }
    Ok(t)
}

/// Squeezing of the reduced mechanical state from the full coupling-modulated
/// Hamiltonian, beside the effective-theory modulus.
fn effective_table(cfg: &ScenarioConfig, p: &SystemParams) -> CliResult<Table> {
    let (omega0, omega_p) = (cfg.params.omega0, cfg.params.omega_p);
    let fastest = 2.0 * (p.omega_m.abs() + omega_p.abs()) + omega0.abs();
    let step = std::f64::consts::PI / (cfg.numerics.steps_per_period as f64 * fastest.max(1.0));
    let spec = HilbertSpec::single_photon(cfg.numerics.dim_mech).context(|| "custom".into())?;
    let h = ModelHamiltonian::for_params(p, spec).context(|| "coupling-modulated Hamiltonian".into())?;
    let psi0 = QuantumState::basis(spec, 1, 0, 0).context(|| "initial state".into())?;
    let times = sample_times(cfg.numerics.t_end, cfg.numerics.samples);
    let traj =
        integrate_schrodinger(&h, &psi0, &times, &IntegratorConfig::rk4(step)).context(|| "simulation".into())?;
    let mut t = Table::new(["t_g0", "R_effective", "R_simulated"]);
    for (time, psi) in traj.times.iter().zip(&traj.states) {
        let rho = partial_trace_mechanical(&DensityMatrix::from_pure(psi));
        let (v, _) = min_quadrature_variance(Mechanical::Density(&rho)).context(|| "variance".into())?;
        let effective = squeeze_parameters(*time, p, 1).context(|| "effective theory".into())?.modulus;
        t.push(vec![*time, effective, -0.5 * (4.0 * v).ln()]);
    }
    Ok(t)
}

fn custom(cfg: &ScenarioConfig, w: &mut Writer) -> CliResult<()> {
    let p = cfg.params.system();
    w.table("custom_squeeze", &squeeze_table(cfg, &p)?)?;
    if cfg.params.scheme == SchemeKind::Coupling {
        return w.table("custom_effective", &effective_table(cfg, &p)?);
    }
    let tm = match t_max_squeeze(&p, 1) {
        Ok(tm) => tm,
        Err(Error::NoMaximum(_)) => return Ok(()),
        Err(e) => return Err(CliError::Physics { context: "custom".into(), source: e }),
    };
    let cfg_int = integrator(cfg, &p);
    let (single, superposed) = rayon::join(
        || run_to_max_squeeze(&p, cfg.numerics.dim_mech, FidelityKind::Single, cfg.numerics.samples, &cfg_int),
        || run_to_max_squeeze(&p, cfg.numerics.dim_mech, FidelityKind::Superposed, cfg.numerics.samples, &cfg_int),
    );
    let single = single.context(|| "closed run".into())?;
    let superposed = superposed.context(|| "closed run, superposed".into())?;
    let mut t = Table::new(["t_g0", "F", "F_prime"]);
    for k in 0..single.fidelity.len() {
        t.push(vec![single.trajectory.times[k], single.fidelity[k], superposed.fidelity[k]]);
    }
    w.table("custom_fidelity", &t)?;
    if let Some(d) = &cfg.diss {
        let run = run_open_to_max_squeeze(&p, d, cfg.numerics.open_dim_mech, cfg.numerics.open_samples, &cfg_int)
            .context(|| "open run".into())?;
        let mut t = Table::new(["t_g0", "F_E", "purity"]);
        for k in 0..run.times.len() {
            t.push(vec![run.times[k], run.fidelity[k], run.purity[k]]);
        }
        w.table("custom_open", &t)?;
    }
    let wig = wigner_superposed_analytic(
        Side::L,
        &p,
        tm,
        &grid_spec(cfg),
        cfg.numerics.wigner_cutoff,
        Interference::Included,
    )
    .context(|| "custom: W_L".into())?;
    w.grid("custom_W_L", &wig.total)
}

/// All combinations of the swept values, first parameter slowest.
fn combinations(sweep: &[(String, Vec<f64>)]) -> Vec<Vec<f64>> {
    sweep.iter().fold(vec![Vec::new()], |acc, (_, values)| {
        acc.iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut row = prefix.clone();
                    row.push(v);
                    row
                })
            })
            .collect()
    })
}

fn or_nan<T>(r: squeezesim::Result<T>, context: impl FnOnce() -> String) -> CliResult<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NoMaximum(_)) => Ok(None),
        Err(e) => Err(CliError::Physics { context: context(), source: e }),
    }
}

fn sweep_row(cfg: &ScenarioConfig, values: &[f64]) -> CliResult<Vec<f64>> {
    let mut point = cfg.clone();
    for ((name, _), &v) in cfg.sweep.iter().zip(values) {
        point = point.with_value(name, v)?;
    }
    point.validate()?;
    let p = point.params.system();
    let at = || format!("sweep point {values:?}");
    let mut row = values.to_vec();
    if point.params.scheme == SchemeKind::Coupling {
        let (g_prime, delta_prime) = p.effective().context(at)?;
        row.extend([g_prime, delta_prime]);
    }
    let modulus = or_nan(max_squeeze_modulus(&p, 1), at)?;
    row.push(modulus.unwrap_or(f64::NAN));
    row.push(match modulus {
        Some(m) => squeezing_db(m).context(at)?,
        None => f64::NAN,
    });
    if point.params.scheme == SchemeKind::Coupling {
        return Ok(row);
    }
    let n = &point.numerics;
    let cfg_int = integrator(&point, &p);
    for kind in [FidelityKind::Single, FidelityKind::Superposed] {
        let f = or_nan(run_to_max_squeeze(&p, n.dim_mech, kind, 1, &cfg_int), at)?;
        row.push(f.map_or(f64::NAN, |r| r.final_fidelity()));
    }
    if let Some(d) = &point.diss {
        let run = or_nan(run_open_to_max_squeeze(&p, d, n.open_dim_mech, 1, &cfg_int), at)?;
        row.push(run.as_ref().map_or(f64::NAN, |r| r.final_fidelity()));
        row.push(run.as_ref().map_or(f64::NAN, |r| *r.purity.last().expect("non-empty run")));
    }
    Ok(row)
}

/// One row per combination; `T_M` quantities are NaN where squeezing grows
/// without a maximum.
fn sweep(cfg: &ScenarioConfig, w: &mut Writer) -> CliResult<()> {
    let mut header: Vec<String> = cfg.sweep.iter().map(|(name, _)| name.clone()).collect();
    if cfg.params.scheme == SchemeKind::Coupling {
        header.extend(["g_prime".into(), "delta_prime".into()]);
    }
    header.extend(["R_TM".into(), "squeezing_dB".into()]);
    if cfg.params.scheme == SchemeKind::Frequency {
        header.extend(["F_TM".into(), "F_prime_TM".into()]);
        if cfg.diss.is_some() {
            header.extend(["F_E_TM".into(), "purity_TM".into()]);
        }
    }
    let rows: Vec<Vec<f64>> =
        combinations(&cfg.sweep).par_iter().map(|values| sweep_row(cfg, values)).collect::<CliResult<_>>()?;
    let mut t = Table::new(header);
    for row in rows {
        t.push(row);
    }
    w.table("sweep", &t)
}
