use squeezesim::analytic::{max_squeeze_modulus, squeezing_db, t_max_squeeze};
use squeezesim::dynamics::{run_to_max_squeeze, FidelityKind};
use squeezesim::lindblad::{run_open_to_max_squeeze, DissipationParams};
use squeezesim::model::SystemParams;
use squeezesim::ode::IntegratorConfig;

#[test]
fn working_point_squeezing() {
    let p = SystemParams::reference();
    assert!((t_max_squeeze(&p, 1).unwrap() - 2.985097).abs() < 1e-6);
    let r = max_squeeze_modulus(&p, 1).unwrap();
    assert!((r - 1.398171).abs() < 1e-6);
    assert!((squeezing_db(r).unwrap() - 12.1444).abs() < 1e-4);
}

#[test]
fn fidelity_falls_with_modulation_depth() {
    let finals: Vec<f64> = [100.0, 60.0, 20.0]
        .iter()
        .map(|&d0| {
            let p = SystemParams::frequency_modulated(398.6, d0, 1.13);
            let cfg = IntegratorConfig::for_params(&p, 40);
            run_to_max_squeeze(&p, 160, FidelityKind::Single, 1, &cfg).unwrap().final_fidelity()
        })
        .collect();
    assert!((finals[0] - 0.964562).abs() < 1e-4, "{finals:?}");
    assert!(finals[0] > finals[1] && finals[1] > finals[2], "{finals:?}");
}

#[test]
fn open_run_without_rates_tracks_closed_run() {
    let p = SystemParams::frequency_modulated(118.6, 100.0, 1.13);
    let cfg = IntegratorConfig::for_params(&p, 160);
    let closed = run_to_max_squeeze(&p, 40, FidelityKind::Superposed, 4, &cfg).unwrap();
    let open = run_open_to_max_squeeze(&p, &DissipationParams::closed(), 40, 4, &cfg).unwrap();
    for (a, b) in closed.fidelity.iter().zip(&open.fidelity) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
    assert!(open.purity.iter().all(|&x| (x - 1.0).abs() < 1e-6), "{:?}", open.purity);
}
