//! Eigenmode covariance matrices, the λ_c positivity witness and two-mode
//! Gaussian fidelity.

use ndarray::Array2;
use ndarray_linalg::{Determinant, EigValsh, UPLO};
use num_complex::Complex64 as C64;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::moments::MomentState;

/// Γ_{ij} = ⟨{Γ_i, Γ_j†}⟩ for the operator vector (γ₊, γ₊†, γ₋, γ₋†).
#[derive(Clone, Debug, PartialEq)]
pub struct EigenmodeCovariance {
    pub gamma: Array2<C64>,
}

/// Ξ = −i diag(1, −1, 1, −1).
pub fn xi() -> Array2<C64> {
    let mut x = Array2::zeros((4, 4));
    for (i, s) in [1.0, -1.0, 1.0, -1.0].into_iter().enumerate() {
        x[[i, i]] = C64::new(0.0, -s);
    }
    x
}

pub fn eigenmode_covariance(x: &MomentState) -> EigenmodeCovariance {
    let c = x.cross;
    let dp = C64::from(2.0 * x.n_plus + 1.0);
    let dm = C64::from(2.0 * x.n_minus + 1.0);
    let z = C64::new(0.0, 0.0);
    let gamma = ndarray::arr2(&[
        [dp, z, 2.0 * c.conj(), z],
        [z, dp, z, 2.0 * c],
        [2.0 * c, z, dm, z],
        [z, 2.0 * c.conj(), z, dm],
    ]);
    EigenmodeCovariance { gamma }
}

impl EigenmodeCovariance {
    /// Reads (n₊, n₋, cross) back from the matrix entries.
    pub fn moments(&self) -> MomentState {
        let g = &self.gamma;
        MomentState::new(0.5 * (g[[0, 0]].re - 1.0), 0.5 * (g[[2, 2]].re - 1.0), 0.5 * g[[2, 0]])
    }

    /// Eigenvalues of Γ + iΞ in ascending order.
    pub fn uncertainty_spectrum(&self) -> Result<Vec<f64>> {
        let m = &self.gamma + &xi().mapv(|v| v * C64::i());
        Ok(m.eigvalsh(UPLO::Lower)?.to_vec())
    }
}

/// ½{n₊ + n₋ − sqrt((n₊ − n₋)² + 4|cross|²)}.
pub fn lambda_c_closed_form(x: &MomentState) -> f64 {
    let d = x.n_plus - x.n_minus;
    0.5 * (x.n_plus + x.n_minus - (d * d + 4.0 * x.cross.norm_sqr()).sqrt())
}

/// λ_c, checked against half the smallest eigenvalue of Γ + iΞ.
pub fn lambda_c(x: &MomentState) -> Result<f64> {
    let closed = lambda_c_closed_form(x);
    let eig = 0.5 * eigenmode_covariance(x).uncertainty_spectrum()?[0];
    let scale = 1.0 + x.n_plus.abs() + x.n_minus.abs();
    if (closed - eig).abs() > 1e-8 * scale {
        return Err(Error::Consistency(format!("lambda_c closed form {closed} vs eigenvalue route {eig}")));
    }
    Ok(closed)
}

/// Initial slope of λ_c(t) from the vacuum under filter `s`:
/// ((γ₊₊ + γ₋₋)/2)·[1 − sqrt(1 + 4(s²|γ₊₋|² − γ₊₊γ₋₋)/(γ₊₊ + γ₋₋)²)] with i = 1 rates.
pub fn lambda_c_short_time_slope(s: f64, c: &CoefficientSet) -> f64 {
    let g = &c.gamma[0];
    let (gpp, gmm) = (g[0][0].re, g[1][1].re);
    let sum = gpp + gmm;
    0.5 * sum * (1.0 - (1.0 + 4.0 * (s * s * g[0][1].norm_sqr() - gpp * gmm) / (sum * sum)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fidelity {
    /// Re F².
    pub f2: f64,
    /// F² before taking the real part.
    pub f2_complex: C64,
    /// Both inputs satisfied Γ + iΞ ⪰ 0 within tolerance.
    pub physical: bool,
}

impl Fidelity {
    pub fn value(&self) -> f64 {
        self.f2.max(0.0).sqrt()
    }
}

/// Uhlmann fidelity between two zero-mean two-mode Gaussian states.
///
/// F² = 1/(√b + √c − sqrt((√b + √c)² − a)) with a = det(Γ₁ + Γ₂)/16,
/// b = det(ΞΓ₁ΞΓ₂ − I)/16 and c = det(Γ₁ + iΞ)det(Γ₂ + iΞ)/16, all in complex arithmetic.
/// Non-physical inputs give Re F² with `physical = false`.
pub fn gaussian_fidelity(g1: &EigenmodeCovariance, g2: &EigenmodeCovariance) -> Result<Fidelity> {
    let x = xi();
    let ix = x.mapv(|v| v * C64::i());
    let id = Array2::<C64>::eye(4);
    let a = (&g1.gamma + &g2.gamma).det()? / 16.0;
    let b = (x.dot(&g1.gamma).dot(&x).dot(&g2.gamma) - &id).det()? / 16.0;
    let c = (&g1.gamma + &ix).det()? * (&g2.gamma + &ix).det()? / 16.0;
    let s = b.sqrt() + c.sqrt();
    let f2_complex = 1.0 / (s - (s * s - a).sqrt());

    let physical = g1.uncertainty_spectrum()?[0] >= -1e-8 && g2.uncertainty_spectrum()?[0] >= -1e-8;
    let mut f2 = f2_complex.re;
    if physical {
        let f = f2.max(0.0).sqrt();
        if f > 1.0 + 1e-9 || !f.is_finite() {
            return Err(Error::Consistency(format!("fidelity {f} exceeds 1")));
        }
        f2 = f2.min(1.0);
    }
    Ok(Fidelity { f2, f2_complex, physical })
}

/// Fidelity between the Gaussian states of two moment triples.
pub fn moment_fidelity(x1: &MomentState, x2: &MomentState) -> Result<Fidelity> {
    gaussian_fidelity(&eigenmode_covariance(x1), &eigenmode_covariance(x2))
}

/// Concavity bound e^{−𝒢t} f_loc + (1 − e^{−𝒢t}) f_glob on the mixture's fidelity.
pub fn mixture_fidelity_lower_bound(f_loc: f64, f_glob: f64, mixture_rate: f64, t: f64) -> f64 {
    let w = (-mixture_rate * t).exp();
    w * f_loc + (1.0 - w) * f_glob
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::dissipator_coefficients;
    use crate::params::ModelParams;

    #[test]
    fn covariance_examples() {
        assert_eq!(eigenmode_covariance(&MomentState::VACUUM).gamma, Array2::eye(4));
        let t = eigenmode_covariance(&MomentState::new(1.5, 1.5, C64::new(0.0, 0.0)));
        assert_eq!(t.gamma, Array2::<C64>::eye(4) * C64::from(4.0));
        let g = eigenmode_covariance(&MomentState::new(0.4, 1.1, C64::new(0.3, 0.1))).gamma;
        let h = g.t().mapv(|v| v.conj());
        assert!((&g - &h).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn lambda_c_examples() {
        assert_eq!(lambda_c(&MomentState::VACUUM).unwrap(), 0.0);
        assert!((lambda_c(&MomentState::new(2.0, 2.0, C64::new(0.0, 0.0))).unwrap() - 2.0).abs() < 1e-15);
        let bad = MomentState::new(0.1, 0.1, C64::new(0.3, 0.0));
        assert!(lambda_c(&bad).unwrap() < 0.0);
    }

    #[test]
    fn slope_vanishes_at_bound() {
        let c = dissipator_coefficients(&ModelParams::reference()).unwrap();
        let g = &c.gamma[0];
        let s1 = (g[0][0].re * g[1][1].re / g[0][1].norm_sqr()).sqrt();
        assert!(lambda_c_short_time_slope(s1, &c).abs() < 1e-15);
        assert!(lambda_c_short_time_slope(1.01 * s1, &c) < 0.0);
        assert!(lambda_c_short_time_slope(0.99 * s1, &c) > 0.0);
        // at s = 0 the witness starts growing at the smaller absorption rate
        let s0 = lambda_c_short_time_slope(0.0, &c);
        assert!((s0 - g[0][0].re.min(g[1][1].re)).abs() < 1e-14);
    }

    #[test]
    fn fidelity_examples() {
        let x = MomentState::new(0.3, 0.7, C64::new(0.1, -0.05));
        let f = moment_fidelity(&x, &x).unwrap();
        assert!(f.physical && (f.value() - 1.0).abs() < 1e-9);
        let th = MomentState::new(0.3, 0.7, C64::new(0.0, 0.0));
        let f = moment_fidelity(&MomentState::VACUUM, &th).unwrap();
        assert!((f.f2 - 1.0 / (1.3 * 1.7)).abs() < 1e-6);
        let bad = MomentState::new(0.1, 0.1, C64::new(0.3, 0.0));
        assert!(!moment_fidelity(&bad, &th).unwrap().physical);
    }

    #[test]
    fn mixture_bound_limits() {
        assert_eq!(mixture_fidelity_lower_bound(0.8, 0.6, 0.016, 0.0), 0.8);
        assert!((mixture_fidelity_lower_bound(0.8, 0.6, 0.016, 1e5) - 0.6).abs() < 1e-12);
        assert!(mixture_fidelity_lower_bound(1.0, 1.0, 0.016, 37.0) <= 1.0);
    }
}
