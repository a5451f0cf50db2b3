//! Moment equations of the master-equation schemes as affine systems
//! dx/dt = A x + b on x = (n₊, n₋, Re cross, Im cross), and their exact solution.

use std::f64::consts::PI;

use ndarray::{arr1, Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Norm, ReciprocalConditionNum, Solve};
use num_complex::Complex64 as C64;

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::moments::{check_grid, MomentState, Scheme, Trajectory};
use crate::params::ModelParams;
use crate::quadrature::{integrate_with_breaks, Tolerance};
use crate::spectral::{bose_factor, spectral_density};

/// Above this eigenvector condition number the series route is used instead.
const MAX_EIGVEC_CONDITION: f64 = 1e8;

#[derive(Clone, Debug)]
struct Spectral {
    values: Array1<C64>,
    vectors: Array2<C64>,
    inverse: Array2<C64>,
}

#[derive(Clone, Debug)]
pub struct AffineGenerator {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    spectral: Option<Spectral>,
}

impl AffineGenerator {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Self {
        assert_eq!(a.dim(), (4, 4));
        assert_eq!(b.len(), 4);
        let spectral = decompose(&a);
        AffineGenerator { a, b, spectral }
    }

    /// dx/dt at `x`.
    pub fn rate(&self, x: &MomentState) -> MomentState {
        let v = self.a.dot(&arr1(&x.to_vector())) + &self.b;
        MomentState::from_vector([v[0], v[1], v[2], v[3]])
    }

    /// Eigenvalues of A.
    pub fn relaxation_rates(&self) -> Result<Array1<C64>> {
        match &self.spectral {
            Some(s) => Ok(s.values.clone()),
            None => Ok(self.a.eig()?.0),
        }
    }

    pub fn uses_series(&self) -> bool {
        self.spectral.is_none()
    }

    fn state_at(&self, x0: &Array1<f64>, t: f64) -> Result<[f64; 4]> {
        let x = match &self.spectral {
            Some(s) => {
                let y0 = s.inverse.dot(&x0.mapv(C64::from));
                let yb = s.inverse.dot(&self.b.mapv(C64::from));
                let y = Array1::from_shape_fn(4, |i| {
                    let z = s.values[i] * t;
                    z.exp() * y0[i] + phi1(z) * t * yb[i]
                });
                let x = s.vectors.dot(&y);
                let scale = x.iter().map(|v| v.norm()).fold(1.0, f64::max);
                if x.iter().any(|v| v.im.abs() > 1e-9 * scale) {
                    return Err(Error::Propagation(format!("complex residue at t = {t}")));
                }
                x.mapv(|v| v.re)
            }
            None => series_propagate(&self.a, &self.b, x0, t)?,
        };
        Ok([x[0], x[1], x[2], x[3]])
    }
}

fn decompose(a: &Array2<f64>) -> Option<Spectral> {
    let (values, vectors) = a.eig().ok()?;
    let inverse = vectors.inv().ok()?;
    let cond = vectors.norm_l2() * inverse.norm_l2();
    if !cond.is_finite() || cond > MAX_EIGVEC_CONDITION {
        return None;
    }
    Some(Spectral { values, vectors, inverse })
}

/// (e^z − 1)/z.
fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        C64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0
    } else {
        (z.exp() - 1.0) / z
    }
}

/// exp of the augmented 5×5 matrix [[A t, b t], [0, 0]] by scaling and squaring.
fn series_propagate(a: &Array2<f64>, b: &Array1<f64>, x0: &Array1<f64>, t: f64) -> Result<Array1<f64>> {
    let mut z = Array2::<f64>::zeros((5, 5));
    for i in 0..4 {
        for j in 0..4 {
            z[[i, j]] = a[[i, j]] * t;
        }
        z[[i, 4]] = b[i] * t;
    }
    let norm = z.iter().map(|v| v.abs()).sum::<f64>();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let z = z / 2f64.powi(squarings);
    let mut e = Array2::<f64>::eye(5);
    let mut term = Array2::<f64>::eye(5);
    let mut converged = false;
    for k in 1..=40 {
        term = term.dot(&z) / k as f64;
        e += &term;
        if term.iter().map(|v| v.abs()).sum::<f64>() < 1e-18 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Propagation(format!("series for exp(At) did not converge at t = {t}")));
    }
    for _ in 0..squarings {
        e = e.dot(&e);
    }
    let mut x = Array1::<f64>::ones(5);
    x.slice_mut(ndarray::s![..4]).assign(x0);
    Ok(e.dot(&x).slice(ndarray::s![..4]).to_owned())
}

/// Coarse-grained Redfield moment equations with off-diagonal filter `s`.
///
/// s = 0 gives the global master equation and s = 1 the plain Redfield equation.
pub fn cg_redfield_generator(c: &CoefficientSet, s: f64) -> AffineGenerator {
    let sp = &c.spectrum;
    let (g1, g2) = (&c.gamma[0], &c.gamma[1]);
    let (e1, e2) = (&c.eta[0], &c.eta[1]);
    let (p, m) = (0, 1);
    // dn₊/dt ∋ s(2 Im(k c) + Re(l c)), dn₋/dt ∋ s(−2 Im(k c) + Re(l c))
    let k = e1[p][m] + e2[m][p];
    let l = g1[p][m] - g2[m][p];
    // dc/dt ∋ s[(−i q + r/2) n₊ + (i q + r/2) n₋ + γ⁽¹⁾₋₊]
    let q = e1[m][p] + e2[p][m];
    let r = g1[m][p] - g2[p][m];
    let freq = sp.omega_plus + c.delta_omega_plus - sp.omega_minus - c.delta_omega_minus;
    let damp = -0.25 * (sp.kappa_plus + sp.kappa_minus);

    let mut a = Array2::zeros((4, 4));
    let mut b = Array1::zeros(4);
    a[[0, 0]] = -0.5 * sp.kappa_plus;
    b[0] = 0.5 * sp.kappa_plus * sp.n_plus;
    a[[0, 2]] = s * (2.0 * k.im + l.re);
    a[[0, 3]] = s * (2.0 * k.re - l.im);
    a[[1, 1]] = -0.5 * sp.kappa_minus;
    b[1] = 0.5 * sp.kappa_minus * sp.n_minus;
    a[[1, 2]] = s * (-2.0 * k.im + l.re);
    a[[1, 3]] = s * (-2.0 * k.re - l.im);
    a[[2, 2]] = damp;
    a[[3, 3]] = damp;
    a[[2, 3]] = -freq;
    a[[3, 2]] = freq;
    let iq = C64::i() * q;
    for (j, w) in [(0, -iq + r / 2.0), (1, iq + r / 2.0)] {
        a[[2, j]] += s * w.re;
        a[[3, j]] += s * w.im;
    }
    b[2] += s * g1[m][p].re;
    b[3] += s * g1[m][p].im;
    AffineGenerator::new(a, b)
}

/// Local master equation (dissipation on mode A only) in the eigenmode moments.
pub fn local_generator(c: &CoefficientSet, include_lamb_shift: bool) -> AffineGenerator {
    let sp = &c.spectrum;
    let k = sp.kappa0;
    let n0 = sp.n0;
    let g = sp.g;
    let dw = if include_lamb_shift { c.delta_omega_a } else { 0.0 };
    let mut a = Array2::zeros((4, 4));
    let mut b = Array1::zeros(4);
    a[[0, 0]] = -k / 2.0;
    a[[0, 2]] = -k / 2.0;
    a[[0, 3]] = dw;
    b[0] = k / 2.0 * n0;
    a[[1, 1]] = -k / 2.0;
    a[[1, 2]] = -k / 2.0;
    a[[1, 3]] = -dw;
    b[1] = k / 2.0 * n0;
    a[[2, 0]] = -k / 4.0;
    a[[2, 1]] = -k / 4.0;
    a[[2, 2]] = -k / 2.0;
    a[[2, 3]] = -2.0 * g;
    b[2] = k / 2.0 * n0;
    a[[3, 0]] = -dw / 2.0;
    a[[3, 1]] = dw / 2.0;
    a[[3, 2]] = 2.0 * g;
    a[[3, 3]] = -k / 2.0;
    AffineGenerator::new(a, b)
}

/// x(t) = e^{At}x(0) + A⁻¹(e^{At} − I)b on every grid time; `times[0]` must be 0.
pub fn propagate(gen: &AffineGenerator, init: MomentState, times: &[f64], scheme: Scheme) -> Result<Trajectory> {
    check_grid(times)?;
    if times.first() != Some(&0.0) {
        return Err(Error::Domain("time grid must start at t = 0".into()));
    }
    let x0 = arr1(&init.to_vector());
    let states = times
        .iter()
        .map(|&t| if t == 0.0 { Ok(init) } else { gen.state_at(&x0, t).map(MomentState::from_vector) })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { times: times.to_vec(), states, scheme })
}

/// Fixed point −A⁻¹b.
pub fn steady_state(gen: &AffineGenerator) -> Result<MomentState> {
    let rcond = gen.a.rcond()?;
    if !(rcond > 1e-13) {
        return Err(Error::NoSteadyState(format!("generator is singular (rcond = {rcond:e})")));
    }
    let x = gen.a.solve(&(-&gen.b))?;
    Ok(MomentState::from_vector([x[0], x[1], x[2], x[3]]))
}

/// Global master equation from the vacuum: n±(t) = N(ω±)(1 − e^{−κ(ω±)t/2}), cross = 0.
pub fn global_closed_form(c: &CoefficientSet, t: f64) -> MomentState {
    let sp = &c.spectrum;
    MomentState::new(
        -sp.n_plus * (-0.5 * sp.kappa_plus * t).exp_m1(),
        -sp.n_minus * (-0.5 * sp.kappa_minus * t).exp_m1(),
        C64::new(0.0, 0.0),
    )
}

/// Local master equation without Lamb shift, from the vacuum.
///
/// With ε = sqrt(16g² − κ²) the solution is damped Rabi oscillation at ε/2;
/// for 4g < κ, ε is imaginary and the same expressions turn hyperbolic.
pub fn local_closed_form(c: &CoefficientSet, t: f64) -> MomentState {
    let sp = &c.spectrum;
    let (k, g, n0) = (sp.kappa0, sp.g, sp.n0);
    let eps = C64::new(16.0 * g * g - k * k, 0.0).sqrt();
    let x = eps * t / 2.0;
    let decay = (-k * t / 2.0).exp();
    // sin(x)/ε and (1 − cos x)/ε², regular at ε = 0
    let (sin_over, one_minus_cos_over) = if x.norm() < 1e-4 {
        let x2 = x * x;
        ((C64::new(1.0, 0.0) - x2 / 6.0) * (t / 2.0), (C64::new(0.5, 0.0) - x2 / 24.0) * (t * t / 4.0))
    } else {
        (x.sin() / eps, (C64::new(1.0, 0.0) - x.cos()) / (eps * eps))
    };
    // 16g² − k² cos(x) = ε² + k²(1 − cos x)
    let n = n0 * (1.0 - decay * (1.0 + k * k * one_minus_cos_over.re));
    MomentState::new(n, n, C64::new(n0 * decay * k * sin_over.re, 4.0 * n0 * k * g * decay * one_minus_cos_over.re))
}

/// First-order prediction for the steady ⟨a†a⟩ − ⟨b†b⟩ = 2 Re cross(∞) at filter `s`.
pub fn asymptotic_gap_first_order(s: f64, p: &ModelParams) -> Result<f64> {
    p.validate()?;
    if !(p.g > 0.0) {
        return Err(Error::Domain("the gap formula needs g > 0".into()));
    }
    if p.alpha == 0.0 {
        return Err(Error::Domain("thermally weighted integrand diverges at ε → 0 for alpha = 0".into()));
    }
    let (wp, wm) = (p.omega_plus(), p.omega_minus());
    let np = bose_factor(wp, p.beta)?;
    let nm = bose_factor(wm, p.beta)?;
    let dn = |w: f64| {
        let e = (p.beta * w).exp();
        -p.beta * e / ((e - 1.0) * (e - 1.0))
    };
    let quotient = |e: f64, w: f64, nw: f64| {
        if e == w {
            dn(w)
        } else {
            (1.0 / (p.beta * e).exp_m1() - nw) / (e - w)
        }
    };
    let f = |e: f64| spectral_density(e, p) / (2.0 * PI) * (quotient(e, wp, np) - quotient(e, wm, nm));
    let tol = Tolerance::default();
    let split = 0.5 * wm;
    let low = if p.alpha < 1.0 {
        let q = 1.0 / p.alpha;
        integrate_with_breaks(|u: f64| f(u.powf(q)) * q * u.powf(q - 1.0), &[0.0, split.powf(p.alpha)], tol)?
    } else {
        integrate_with_breaks(f, &[0.0, split], tol)?
    };
    let high = integrate_with_breaks(f, &[split, wm, wp, p.omega_c], tol)?;
    Ok(s / (wp - wm) * (low + high))
}
