use num_complex::Complex64 as C64;
use oscbath::coefficients::{cp_threshold, dissipator_coefficients, CoefficientSet};
use oscbath::fock::{
    fidelity_truncated, gaussian_state, lindblad_trajectory, thermal_product_state, OracleScheme, TruncatedState,
};
use oscbath::gaussian::moment_fidelity;
use oscbath::generator::{cg_redfield_generator, local_generator, propagate, AffineGenerator};
use oscbath::moments::{MomentState, Scheme};
use oscbath::params::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const TIMES: [f64; 5] = [0.0, 2.0, 8.0, 20.0, 40.0];

/// Smallest cutoff whose geometric tail at occupation `n` is below 1e-9.
fn cutoff_for(n: f64) -> usize {
    let r = n / (n + 1.0);
    ((1e-9f64).ln() / r.ln()).ceil() as usize + 1
}

fn moment_generator(scheme: OracleScheme, c: &CoefficientSet) -> AffineGenerator {
    match scheme {
        OracleScheme::Local => local_generator(c, true),
        OracleScheme::Global => cg_redfield_generator(c, 0.0),
        OracleScheme::CgRedfield(s) => cg_redfield_generator(c, s),
    }
}

struct Comparison {
    moments: Vec<MomentState>,
    oracle: Vec<TruncatedState>,
}

fn compare(scheme: OracleScheme, c: &CoefficientSet, init: &MomentState, d: usize) -> Comparison {
    let rho0 = gaussian_state(init, d).unwrap();
    let oracle = lindblad_trajectory(scheme, c, &rho0, &TIMES).unwrap();
    let traj = propagate(&moment_generator(scheme, c), *init, &TIMES, Scheme::Global).unwrap();
    Comparison { moments: traj.states, oracle }
}

#[test]
fn schemes_match_moment_equations() {
    let p = ModelParams::reference().with_mean_occupation(0.3).unwrap();
    let c = dissipator_coefficients(&p).unwrap();
    let bound = cp_threshold(&p).unwrap().bound;
    let init = MomentState::new(0.2, 0.1, C64::new(0.04, -0.06));
    let d = cutoff_for(c.spectrum.n_minus.max(0.3));
    let schemes = [OracleScheme::Local, OracleScheme::Global, OracleScheme::CgRedfield(bound)];
    schemes.into_par_iter().for_each(|scheme| {
        let cmp = compare(scheme, &c, &init, d);
        for (k, (x, rho)) in cmp.moments.iter().zip(&cmp.oracle).enumerate() {
            let diff = x.max_abs_diff(&rho.moments());
            assert!(diff < 1e-6, "{scheme:?} at t = {}: moment mismatch {diff:.3e}", TIMES[k]);
            assert!((rho.trace().re - 1.0).abs() < 1e-9);
        }
    });
}

#[test]
fn lamb_shift_off_matches_too() {
    let p = ModelParams::reference().with_mean_occupation(0.2).unwrap();
    let c = dissipator_coefficients(&p).unwrap().without_lamb_shift();
    let init = MomentState::new(0.1, 0.05, C64::new(0.02, 0.03));
    let d = cutoff_for(c.spectrum.n_minus.max(0.1));
    let rho0 = gaussian_state(&init, d).unwrap();
    let oracle = lindblad_trajectory(OracleScheme::Local, &c, &rho0, &TIMES).unwrap();
    let traj = propagate(&local_generator(&c, false), init, &TIMES, Scheme::Local).unwrap();
    for (x, rho) in traj.states.iter().zip(&oracle) {
        assert!(x.max_abs_diff(&rho.moments()) < 1e-6);
    }
}

#[test]
fn random_draws_agree_with_gaussian_pipeline() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f0c4);
    let draws: Vec<(f64, f64, f64)> =
        (0..20).map(|_| (rng.random_range(0.05..0.5), rng.random_range(0.05..0.3), rng.random())).collect();

    draws.into_par_iter().enumerate().for_each(|(i, (n0, g, u))| {
        let p = ModelParams { g, ..ModelParams::reference() }.with_mean_occupation(n0).unwrap();
        let c = dissipator_coefficients(&p).unwrap();
        let bound = cp_threshold(&p).unwrap().bound;
        let scheme = match i % 3 {
            0 => OracleScheme::Local,
            1 => OracleScheme::Global,
            _ => OracleScheme::CgRedfield(u * bound),
        };
        let d = cutoff_for(c.spectrum.n_minus.max(n0));
        let cmp = compare(scheme, &c, &MomentState::VACUUM, d);
        let reference = thermal_product_state(c.spectrum.n_plus, c.spectrum.n_minus, d).unwrap();
        let thermal = MomentState::new(c.spectrum.n_plus, c.spectrum.n_minus, C64::new(0.0, 0.0));
        for (k, (x, rho)) in cmp.moments.iter().zip(&cmp.oracle).enumerate() {
            let diff = x.max_abs_diff(&rho.moments());
            assert!(diff < 1e-4, "draw {i} ({scheme:?}) t = {}: moments differ by {diff:.3e}", TIMES[k]);
            let f_oracle = fidelity_truncated(rho, &reference).unwrap().powi(2);
            let f_gauss = moment_fidelity(x, &thermal).unwrap().f2;
            assert!(
                (f_oracle - f_gauss).abs() < 1e-4,
                "draw {i} ({scheme:?}) t = {}: F² {f_oracle} vs {f_gauss}",
                TIMES[k]
            );
        }
    });
}

#[test]
fn vacuum_thermal_fidelity_calibrates_gaussian_formula() {
    for (np, nm) in [(0.1, 0.0), (0.4, 0.7), (1.0, 0.25)] {
        let d = cutoff_for(f64::max(np, nm));
        let vac = thermal_product_state(0.0, 0.0, d).unwrap();
        let th = thermal_product_state(np, nm, d).unwrap();
        let f_oracle = fidelity_truncated(&vac, &th).unwrap().powi(2);
        let expected = 1.0 / ((np + 1.0) * (nm + 1.0));
        assert!((f_oracle - expected).abs() < 1e-6);
        let f_gauss = moment_fidelity(&MomentState::VACUUM, &MomentState::new(np, nm, C64::new(0.0, 0.0))).unwrap().f2;
        assert!((f_gauss - expected).abs() < 1e-6);
    }
}
