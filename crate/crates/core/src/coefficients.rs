//! Dissipator and Lamb-shift coefficients in the eigenmode basis, the secular
//! filter and the complete-positivity threshold.

use ndarray::Array2;
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::Result;
use crate::params::{CoarseGrain, ModelParams};
use crate::spectral::{bose_factor, pv_integral, spectral_density, PvKind};

/// Eigenmode label; `Plus` is γ₊ = (a + b)/√2 at ω0 + g.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus = 0,
    Minus = 1,
}

pub const BRANCHES: [Branch; 2] = [Branch::Plus, Branch::Minus];

/// 2×2 tensor indexed by a pair of branches.
pub type Pair = [[C64; 2]; 2];

/// Eigenfrequencies and the rates and occupations evaluated on them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModeSpectrum {
    pub omega0: f64,
    pub g: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub kappa0: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub n0: f64,
    pub n_plus: f64,
    pub n_minus: f64,
}

impl ModeSpectrum {
    pub fn new(p: &ModelParams) -> Result<Self> {
        let (wp, wm) = (p.omega_plus(), p.omega_minus());
        Ok(ModeSpectrum {
            omega0: p.omega0,
            g: p.g,
            omega_plus: wp,
            omega_minus: wm,
            kappa0: spectral_density(p.omega0, p),
            kappa_plus: spectral_density(wp, p),
            kappa_minus: spectral_density(wm, p),
            n0: bose_factor(p.omega0, p.beta)?,
            n_plus: bose_factor(wp, p.beta)?,
            n_minus: bose_factor(wm, p.beta)?,
        })
    }

    pub fn kappa(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.kappa_plus,
            Branch::Minus => self.kappa_minus,
        }
    }

    pub fn occupation(&self, b: Branch) -> f64 {
        match b {
            Branch::Plus => self.n_plus,
            Branch::Minus => self.n_minus,
        }
    }
}

/// γ⁽ⁱ⁾_{σσ'}, η⁽ⁱ⁾_{σσ'} (index `i - 1`), the secular Lamb shifts and the filter value.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub gamma: [Pair; 2],
    pub eta: [Pair; 2],
    pub delta_omega_plus: f64,
    pub delta_omega_minus: f64,
    pub delta_omega_a: f64,
    pub s_offdiag: f64,
    pub spectrum: ModeSpectrum,
}

/// Off-diagonal entries from diagonal ones:
/// γ_{σσ'} = (γ_{σσ} + γ_{σ'σ'})/2 + i(η_{σσ} − η_{σ'σ'}),
/// η_{σσ'} = −i(γ_{σσ} − γ_{σ'σ'})/4 + (η_{σσ} + η_{σ'σ'})/2.
pub fn reconstruct(gamma_diag: [f64; 2], eta_diag: [f64; 2]) -> (Pair, Pair) {
    let mut gamma = [[C64::new(0.0, 0.0); 2]; 2];
    let mut eta = gamma;
    for s in 0..2 {
        for t in 0..2 {
            gamma[s][t] = C64::new(0.5 * (gamma_diag[s] + gamma_diag[t]), eta_diag[s] - eta_diag[t]);
            eta[s][t] = C64::new(0.5 * (eta_diag[s] + eta_diag[t]), -0.25 * (gamma_diag[s] - gamma_diag[t]));
        }
    }
    (gamma, eta)
}

/// Secular filter S with unit diagonal and sinc(gΔt) off the diagonal.
pub fn secular_filter(delta_t: CoarseGrain, g: f64) -> [[f64; 2]; 2] {
    let s = match delta_t {
        CoarseGrain::Saturating => 0.0,
        CoarseGrain::Interval(dt) => sinc(g * dt),
    };
    [[1.0, s], [s, 1.0]]
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

pub fn dissipator_coefficients(p: &ModelParams) -> Result<CoefficientSet> {
    p.validate()?;
    let spectrum = ModeSpectrum::new(p)?;
    let mut g1 = [0.0; 2];
    let mut g2 = [0.0; 2];
    let mut e1 = [0.0; 2];
    let mut e2 = [0.0; 2];
    let mut shift = [0.0; 2];
    for b in BRANCHES {
        let i = b as usize;
        let w = match b {
            Branch::Plus => spectrum.omega_plus,
            Branch::Minus => spectrum.omega_minus,
        };
        let (k, n) = (spectrum.kappa(b), spectrum.occupation(b));
        g1[i] = 0.5 * k * n;
        g2[i] = 0.5 * k * (1.0 + n);
        e1[i] = 0.5 * pv_integral(PvKind::Absorption, w, p)?;
        e2[i] = -0.5 * pv_integral(PvKind::Emission, w, p)?;
        shift[i] = e1[i] + e2[i];
    }
    let (gamma1, eta1) = reconstruct(g1, e1);
    let (gamma2, eta2) = reconstruct(g2, e2);
    Ok(CoefficientSet {
        gamma: [gamma1, gamma2],
        eta: [eta1, eta2],
        delta_omega_plus: shift[0],
        delta_omega_minus: shift[1],
        delta_omega_a: -pv_integral(PvKind::Bare, p.omega0, p)?,
        s_offdiag: secular_filter(p.delta_t, p.g)[0][1],
        spectrum,
    })
}

impl CoefficientSet {
    pub fn gamma(&self, i: usize, s: Branch, t: Branch) -> C64 {
        self.gamma[i - 1][s as usize][t as usize]
    }

    pub fn eta(&self, i: usize, s: Branch, t: Branch) -> C64 {
        self.eta[i - 1][s as usize][t as usize]
    }

    /// Copy with every principal-value contribution removed: diagonal η and all
    /// frequency shifts are zeroed and the off-diagonals rebuilt from what remains.
    pub fn without_lamb_shift(&self) -> Self {
        let diag = |m: &Pair| [m[0][0].re, m[1][1].re];
        let (gamma1, eta1) = reconstruct(diag(&self.gamma[0]), [0.0; 2]);
        let (gamma2, eta2) = reconstruct(diag(&self.gamma[1]), [0.0; 2]);
        CoefficientSet {
            gamma: [gamma1, gamma2],
            eta: [eta1, eta2],
            delta_omega_plus: 0.0,
            delta_omega_minus: 0.0,
            delta_omega_a: 0.0,
            ..self.clone()
        }
    }

    pub fn with_filter(&self, s: f64) -> Self {
        CoefficientSet { s_offdiag: s, ..self.clone() }
    }
}

/// Block-diagonal 4×4 Kossakowski matrix of the filtered dissipator.
pub fn dissipation_matrix(c: &CoefficientSet, s: f64) -> Array2<C64> {
    let mut m = Array2::zeros((4, 4));
    for i in 0..2 {
        let o = 2 * i;
        let g = &c.gamma[i];
        m[[o, o]] = g[0][0];
        m[[o, o + 1]] = g[0][1] * s;
        m[[o + 1, o]] = g[1][0] * s;
        m[[o + 1, o + 1]] = g[1][1];
    }
    m
}

#[derive(Clone, Debug)]
pub struct CpThreshold {
    /// Largest admissible |S₊₋|, clamped to 1.
    pub bound: f64,
    /// sqrt(γ⁽ⁱ⁾₊₊γ⁽ⁱ⁾₋₋/|γ⁽ⁱ⁾₊₋|²) for i = 1, 2 before clamping.
    pub raw: [f64; 2],
    /// Dissipation matrix evaluated at S₊₋ = bound.
    pub matrix: Array2<C64>,
}

pub fn cp_bound(c: &CoefficientSet) -> (f64, [f64; 2]) {
    let mut raw = [f64::INFINITY; 2];
    for (i, r) in raw.iter_mut().enumerate() {
        let g = &c.gamma[i];
        let off = g[0][1].norm_sqr();
        if off > 0.0 {
            *r = (g[0][0].re * g[1][1].re / off).sqrt();
        }
    }
    (raw[0].min(raw[1]).min(1.0), raw)
}

pub fn cp_threshold(p: &ModelParams) -> Result<CpThreshold> {
    let c = dissipator_coefficients(p)?;
    Ok(cp_threshold_from(&c))
}

pub fn cp_threshold_from(c: &CoefficientSet) -> CpThreshold {
    let (bound, raw) = cp_bound(c);
    CpThreshold { bound, raw, matrix: dissipation_matrix(c, bound) }
}

/// Smallest eigenvalue of the dissipation matrix at filter value `s`.
pub fn dissipation_min_eigenvalue(c: &CoefficientSet, s: f64) -> Result<f64> {
    let ev = dissipation_matrix(c, s).eigvalsh(UPLO::Lower)?;
    Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
}
