//! Thermal occupations, the bath spectral density and its discretization,
//! bath correlation functions and the principal-value Lamb-shift integrals.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quadrature::{integrate_with_breaks, Tolerance};

/// Bose–Einstein occupation 1/(e^{βω} − 1).
pub fn bose_factor(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) || !(beta > 0.0) {
        return Err(Error::Domain(format!("bose_factor needs omega > 0 and beta > 0, got omega={omega}, beta={beta}")));
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// κ(ω) = κ(ω0) (ω/ω0)^α Θ(ωc − ω), with the cutoff point itself inside the band.
pub fn spectral_density(omega: f64, p: &ModelParams) -> f64 {
    if omega > p.omega_c || omega < 0.0 {
        return 0.0;
    }
    p.kappa0 * (omega / p.omega0).powf(p.alpha)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub coupling: f64,
}

/// Equally spaced modes ω_k = k ωc / M with couplings γ_k = sqrt(κ(ω_k) ωc / (2π M)).
pub fn bath_modes(p: &ModelParams) -> Vec<BathMode> {
    let m = p.m as f64;
    (1..=p.m)
        .map(|k| {
            let omega = k as f64 * p.omega_c / m;
            let rate = p.kappa0 * (omega / p.omega0).powf(p.alpha);
            BathMode { omega, coupling: (rate * p.omega_c / (2.0 * PI * m)).sqrt() }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Correlation {
    /// c⁽¹⁾(τ) = Σ γ_k² N(ω_k) e^{i(ω_k − ω0)τ}
    Absorption,
    /// c⁽²⁾(τ) = Σ γ_k² [1 + N(ω_k)] e^{−i(ω_k − ω0)τ}
    Emission,
}

pub fn correlation_function(kind: Correlation, tau: f64, p: &ModelParams) -> C64 {
    bath_modes(p)
        .iter()
        .map(|m| {
            let n = 1.0 / (p.beta * m.omega).exp_m1();
            let phase = (m.omega - p.omega0) * tau;
            let g2 = m.coupling * m.coupling;
            match kind {
                Correlation::Absorption => g2 * n * C64::from_polar(1.0, phase),
                Correlation::Emission => g2 * (1.0 + n) * C64::from_polar(1.0, -phase),
            }
        })
        .sum()
}

/// T_rec = 2πM/ωc, the period of the discretized correlation functions.
pub fn recurrence_time(p: &ModelParams) -> f64 {
    2.0 * PI * p.m as f64 / p.omega_c
}

/// Half width at half maximum of |c⁽¹⁾(τ)|.
pub fn memory_time(p: &ModelParams) -> Result<f64> {
    let modes = bath_modes(p);
    let weights: Vec<(f64, f64)> =
        modes.iter().map(|m| (m.coupling * m.coupling / (p.beta * m.omega).exp_m1(), m.omega - p.omega0)).collect();
    let abs_c1 =
        |tau: f64| -> f64 { weights.iter().map(|&(w, dw)| w * C64::from_polar(1.0, dw * tau)).sum::<C64>().norm() };
    let half = 0.5 * abs_c1(0.0);
    let t_rec = recurrence_time(p);
    let step = 0.01 / p.omega_c;
    let n_steps = (0.5 * t_rec / step).ceil() as usize;

    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=n_steps {
        let tau = i as f64 * step;
        if abs_c1(tau) < half {
            hi = Some(tau);
            break;
        }
        lo = tau;
    }
    let Some(mut hi) = hi else {
        return Err(Error::Estimation(format!(
            "|c1| does not fall to half its maximum before T_rec/2 = {}",
            0.5 * t_rec
        )));
    };
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if abs_c1(mid) < half {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let tau_e = 0.5 * (lo + hi);
    if tau_e > 0.25 * t_rec {
        log::warn!("memory time {tau_e} exceeds a quarter of the recurrence time {t_rec}; increase M");
    }
    Ok(tau_e)
}

/// Weight multiplying κ(ε)/2π in a principal-value integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PvKind {
    /// κ(ε) N(ε) / 2π
    Absorption,
    /// κ(ε) [1 + N(ε)] / 2π
    Emission,
    /// κ(ε) / 2π
    Bare,
}

/// P∫₀^{ωc} f(ε)/(ε − ω_t) dε for the integrand selected by `kind`.
///
/// The pole is removed by subtracting f(ω_t); the remainder is regular and
/// integrated adaptively, the subtracted term integrates to f(ω_t) ln((ωc − ω_t)/ω_t).
/// For α < 1 the piece next to ε = 0 is integrated in u = ε^α.
pub fn pv_integral(kind: PvKind, omega_target: f64, p: &ModelParams) -> Result<f64> {
    let wt = omega_target;
    let wc = p.omega_c;
    if !(wt > f64::EPSILON * wc && wt < wc * (1.0 - f64::EPSILON)) {
        return Err(Error::Domain(format!("principal value needs 0 < omega_target < omega_c, got {wt}")));
    }
    if kind != PvKind::Bare && p.alpha == 0.0 {
        return Err(Error::Domain("thermally weighted principal value diverges at ε → 0 for alpha = 0".into()));
    }
    let f = |e: f64| -> f64 {
        let k = spectral_density(e, p) / (2.0 * PI);
        match kind {
            PvKind::Bare => k,
            PvKind::Absorption => k / (p.beta * e).exp_m1(),
            PvKind::Emission => k * (1.0 + 1.0 / (p.beta * e).exp_m1()),
        }
    };
    let ft = f(wt);
    let reg = |e: f64| -> f64 {
        let d = e - wt;
        if d == 0.0 {
            0.0
        } else {
            (f(e) - ft) / d
        }
    };
    let tol = Tolerance::default();
    let split = 0.5 * wt;
    let low = if p.alpha < 1.0 && p.alpha > 0.0 {
        let q = 1.0 / p.alpha;
        integrate_with_breaks(|u: f64| reg(u.powf(q)) * q * u.powf(q - 1.0), &[0.0, split.powf(p.alpha)], tol)?
    } else {
        integrate_with_breaks(reg, &[0.0, split], tol)?
    };
    let high = integrate_with_breaks(reg, &[split, wt, wc], tol)?;
    Ok(low + high + ft * ((wc - wt) / wt).ln())
}
