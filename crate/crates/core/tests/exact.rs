use oscbath::coefficients::dissipator_coefficients;
use oscbath::exact::{
    build_full_model, initial_covariance, propagate_exact, symplectic_spectrum, uncertainty_min_eigenvalue,
    ExactEvolution, FullModel,
};
use oscbath::generator::global_closed_form;
use oscbath::params::ModelParams;
use oscbath::spectral::{bath_modes, recurrence_time};
use std::sync::OnceLock;

fn reference_model() -> &'static FullModel {
    static MODEL: OnceLock<FullModel> = OnceLock::new();
    MODEL.get_or_init(|| build_full_model(&ModelParams::reference()).unwrap())
}

fn bath_energy(p: &ModelParams) -> f64 {
    bath_modes(p).iter().map(|m| m.omega / (p.beta * m.omega).exp_m1()).sum()
}

#[test]
fn propagator_is_symplectic_and_state_stays_physical() {
    let model = reference_model();
    let p = &model.params;
    let omega = model.symplectic_form();
    let sigma0 = initial_covariance(p);
    let nu0 = symplectic_spectrum(&sigma0).unwrap();
    for t in [0.37, 12.5, 97.0, 233.3] {
        let s = model.propagator(t).unwrap();
        let defect = (s.dot(&omega).dot(&s.t()) - &omega).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(defect < 1e-10, "t {t}: symplectic defect {defect:e}");

        let sigma = propagate_exact(model, &sigma0, t).unwrap();
        assert!(uncertainty_min_eigenvalue(&sigma).unwrap() >= -1e-10);
        let nu = symplectic_spectrum(&sigma).unwrap();
        for (a, b) in nu.iter().zip(&nu0) {
            assert!((a - b).abs() <= 1e-8 * b, "t {t}: symplectic eigenvalue {a} vs {b}");
        }
    }
}

#[test]
fn total_energy_is_conserved() {
    let model = reference_model();
    let p = &model.params;
    let ev = ExactEvolution::new(model, &initial_covariance(p));
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 1.5).collect();
    let samples = ev.trajectory(&times).unwrap();
    let e0 = samples[0].energies.total();
    let scale = bath_energy(p);
    for s in &samples {
        let drift = (s.energies.total() - e0).abs() / scale;
        assert!(drift <= 1e-8, "t {}: relative drift {drift:e}", s.t);
    }
}

#[test]
fn exact_approaches_global_at_long_times() {
    let model = reference_model();
    let p = &model.params;
    let c = dissipator_coefficients(p).unwrap();
    let ev = ExactEvolution::new(model, &initial_covariance(p));
    let times: Vec<f64> = (0..=40).map(|i| 100.0 + 5.0 * i as f64).collect();
    for s in ev.trajectory(&times).unwrap() {
        let g = global_closed_form(&c, s.t);
        for (e, m) in [(s.moments.n_plus, g.n_plus), (s.moments.n_minus, g.n_minus)] {
            assert!((e - m).abs() <= 0.05 * e, "t {}: exact {e} vs global {m}", s.t);
        }
    }
}

#[test]
fn coarse_bath_shows_recurrence() {
    let run = |m: usize, times: &[f64]| {
        let p = ModelParams { m, ..ModelParams::reference() };
        let model = build_full_model(&p).unwrap();
        let ev = ExactEvolution::new(&model, &initial_covariance(&p));
        ev.trajectory(times).unwrap().into_iter().map(|s| s.moments).collect::<Vec<_>>()
    };
    let t_rec = recurrence_time(&ModelParams { m: 50, ..ModelParams::reference() });
    let times: Vec<f64> = (0..=40).map(|i| t_rec - 10.0 + 0.5 * i as f64).collect();
    let coarse = run(50, &times);
    let mid = run(400, &times);
    let fine = run(800, &times);
    let dev = |a: &[_], b: &[_]| {
        a.iter()
            .zip(b)
            .map(|(x, y): (&oscbath::MomentState, &oscbath::MomentState)| x.max_abs_diff(y))
            .fold(0.0, f64::max)
    };
    let (d_coarse, d_fine) = (dev(&coarse, &mid), dev(&mid, &fine));
    assert!(d_coarse > 10.0 * d_fine, "M=50 deviation {d_coarse} vs M=800 deviation {d_fine}");
}

#[test]
fn coupling_energy_matters_more_at_low_temperature() {
    let ratio = |n0: f64, times: &[f64]| {
        let p = ModelParams::reference().with_mean_occupation(n0).unwrap();
        let model = build_full_model(&p).unwrap();
        let ev = ExactEvolution::new(&model, &initial_covariance(&p));
        ev.trajectory(times)
            .unwrap()
            .into_iter()
            .map(|s| s.energies.interaction.abs() / (s.energies.system_free + s.energies.system_coupling))
            .collect::<Vec<_>>()
    };
    let times = [50.0, 100.0, 200.0];
    let cold = ratio(0.01, &times);
    let hot = ratio(10.0, &times);
    for (k, t) in times.iter().enumerate() {
        assert!(cold[k] > hot[k], "t {t}: {} vs {}", cold[k], hot[k]);
    }
}
