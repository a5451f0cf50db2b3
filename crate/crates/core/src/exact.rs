//! Exact Gaussian dynamics of the two oscillators plus the discretized bath.
//!
//! Coordinates are ordered r = (x_A, p_A, x_B, p_B, x_1, p_1, …, x_M, p_M) and
//! H = ½ rᵀ𝓗 r. The covariance Σ_{ij} = ⟨{r_i, r_j}⟩ evolves as Σ(t) = S Σ(0) Sᵀ
//! with S(t) = e^{Ω𝓗t} = V e^{−iΛt} V†, where 𝓜 = iΩ𝓗 = VΛV†.

use ndarray::{s, Array1, Array2, ArrayView2};
use ndarray_linalg::{EigValsh, Eigh, UPLO};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{check_blas, hermitian_eigh};
use crate::moments::MomentState;
use crate::params::ModelParams;
use crate::spectral::{bath_modes, BathMode};

pub struct FullModel {
    pub params: ModelParams,
    pub modes: Vec<BathMode>,
    /// 𝓗, real symmetric (2M + 4)².
    pub hamiltonian: Array2<f64>,
    /// Eigenvalues of iΩ𝓗, ascending.
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullCovariance {
    pub sigma: Array2<f64>,
}

/// Ω = ⊕ [[0, 1], [−1, 0]] over `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> Array2<f64> {
    let mut o = Array2::zeros((2 * n_modes, 2 * n_modes));
    for j in 0..n_modes {
        o[[2 * j, 2 * j + 1]] = 1.0;
        o[[2 * j + 1, 2 * j]] = -1.0;
    }
    o
}

fn hamiltonian_matrix(p: &ModelParams, modes: &[BathMode]) -> Array2<f64> {
    let n = 2 * modes.len() + 4;
    let mut h = Array2::zeros((n, n));
    for q in 0..2 {
        h[[q, q]] = p.omega0;
        h[[2 + q, 2 + q]] = p.omega0;
        h[[q, 2 + q]] = p.g;
        h[[2 + q, q]] = p.g;
        for (k, m) in modes.iter().enumerate() {
            let i = 4 + 2 * k + q;
            h[[i, i]] = m.omega;
            h[[q, i]] = m.coupling;
            h[[i, q]] = m.coupling;
        }
    }
    h
}

pub fn build_full_model(p: &ModelParams) -> Result<FullModel> {
    p.validate()?;
    check_blas()?;
    let modes = bath_modes(p);
    let h = hamiltonian_matrix(p, &modes);
    let n = h.nrows();
    // (Ω𝓗)_{2j} = 𝓗_{2j+1}, (Ω𝓗)_{2j+1} = −𝓗_{2j}
    let mut m = Array2::<C64>::zeros((n, n));
    for j in 0..n / 2 {
        for c in 0..n {
            m[[2 * j, c]] = C64::new(0.0, h[[2 * j + 1, c]]);
            m[[2 * j + 1, c]] = C64::new(0.0, -h[[2 * j, c]]);
        }
    }
    let norm = h.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let (values, vectors) = hermitian_eigh(&m)
        .map_err(|e| Error::Eigen(format!("iΩH of dimension {n} with max entry {norm:e} did not diagonalize: {e}")))?;
    let residual = (m.dot(&vectors) - &vectors * &values.mapv(C64::from)).iter().map(|v| v.norm()).fold(0.0, f64::max);
    if residual > 1e-10 * norm.max(1.0) * (n as f64).sqrt() {
        let spread = values[n - 1] - values[0];
        return Err(Error::Eigen(format!(
            "eigen residual {residual:e} for dimension {n} (max entry {norm:e}, eigenvalue spread {spread:e})"
        )));
    }
    Ok(FullModel { params: p.clone(), modes, hamiltonian: h, eigenvalues: values, eigenvectors: vectors })
}

/// Vacuum on A and B, thermal (2N(ω_k) + 1)·I on each bath mode.
pub fn initial_covariance(p: &ModelParams) -> FullCovariance {
    let modes = bath_modes(p);
    let mut diag = vec![1.0; 4];
    for m in &modes {
        let v = 2.0 / (p.beta * m.omega).exp_m1() + 1.0;
        diag.push(v);
        diag.push(v);
    }
    FullCovariance { sigma: Array2::from_diag(&Array1::from(diag)) }
}

fn real_part(m: Array2<C64>, what: &str) -> Result<Array2<f64>> {
    let scale = m.iter().map(|v| v.re.abs()).fold(1.0, f64::max);
    let residue = m.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if residue > 1e-8 * scale {
        return Err(Error::Consistency(format!("{what} has imaginary residue {residue:e}")));
    }
    Ok(m.mapv(|v| v.re))
}

impl FullModel {
    pub fn dimension(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn symplectic_form(&self) -> Array2<f64> {
        symplectic_form(self.dimension() / 2)
    }

    /// S(t) = V e^{−iΛt} V†.
    pub fn propagator(&self, t: f64) -> Result<Array2<f64>> {
        let v = &self.eigenvectors;
        let phases = self.eigenvalues.mapv(|g| C64::from_polar(1.0, -g * t));
        let s = (v * &phases).dot(&v.t().mapv(|z| z.conj()));
        real_part(s, "propagator")
    }

    /// Largest entry of V†𝓜V off the real diagonal.
    pub fn diagonalization_defect(&self) -> f64 {
        let n = self.dimension();
        let o = self.symplectic_form().mapv(|v| C64::new(0.0, v));
        let m = o.dot(&self.hamiltonian.mapv(C64::from));
        let d = self.eigenvectors.t().mapv(|z| z.conj()).dot(&m).dot(&self.eigenvectors);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j { C64::from(self.eigenvalues[i]) } else { C64::new(0.0, 0.0) };
                worst = worst.max((d[[i, j]] - expected).norm());
            }
        }
        worst
    }
}

pub fn propagate_exact(model: &FullModel, sigma0: &FullCovariance, t: f64) -> Result<FullCovariance> {
    let s = model.propagator(t)?;
    let sigma = s.dot(&sigma0.sigma).dot(&s.t());
    Ok(FullCovariance { sigma: 0.5 * (&sigma + &sigma.t()) })
}

/// ⟨r(t)⟩ = S(t)⟨r(0)⟩.
pub fn propagate_first_moments(model: &FullModel, r0: &Array1<f64>, t: f64) -> Result<Array1<f64>> {
    Ok(model.propagator(t)?.dot(r0))
}

/// 𝒱, mapping (γ₊, γ₊†, γ₋, γ₋†) to (x_A, p_A, x_B, p_B).
fn basis_matrix() -> Array2<C64> {
    let r = C64::new(0.5, 0.0);
    let i = C64::new(0.0, 0.5);
    ndarray::arr2(&[[r, r, r, r], [-i, i, -i, i], [r, r, -r, -r], [-i, i, i, -i]])
}

/// Moments from the 4×4 system block Σ_S through Γ_S = 𝒱†Σ_S𝒱.
pub fn system_moments_from_minor(minor: ArrayView2<f64>) -> Result<MomentState> {
    let asym = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| (minor[[i, j]] - minor[[j, i]]).abs())
        .fold(0.0, f64::max);
    let scale = minor.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if asym > 1e-10 * scale {
        return Err(Error::Consistency(format!("system covariance not symmetric ({asym:e})")));
    }
    let v = basis_matrix();
    let g = v.t().mapv(|z| z.conj()).dot(&minor.mapv(C64::from)).dot(&v);
    Ok(MomentState::new(0.5 * (g[[0, 0]].re - 1.0), 0.5 * (g[[2, 2]].re - 1.0), 0.5 * g[[2, 0]]))
}

pub fn system_moments(sigma: &FullCovariance) -> Result<MomentState> {
    if sigma.sigma.nrows() < 4 {
        return Err(Error::Domain("covariance has fewer than four rows".into()));
    }
    system_moments_from_minor(sigma.sigma.slice(s![..4, ..4]))
}

/// Σ_S = 𝒱 Γ_S 𝒱† for a moment triple.
pub fn system_covariance(x: &MomentState) -> Array2<f64> {
    let v = basis_matrix();
    let g = crate::gaussian::eigenmode_covariance(x).gamma;
    v.dot(&g).dot(&v.t().mapv(|z| z.conj())).mapv(|z| z.re)
}

/// Normal-ordered expectation values of the Hamiltonian parts; `bath` is the
/// change of ⟨H_E⟩ since t = 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct EnergyComponents {
    pub system_free: f64,
    pub system_coupling: f64,
    pub interaction: f64,
    pub bath: f64,
}

impl EnergyComponents {
    pub fn total(&self) -> f64 {
        self.system_free + self.system_coupling + self.interaction + self.bath
    }
}

fn bath_zero_point_and_thermal(p: &ModelParams, modes: &[BathMode]) -> f64 {
    modes.iter().map(|m| m.omega * (1.0 / (p.beta * m.omega).exp_m1() + 0.5)).sum()
}

fn system_energies(minor: ArrayView2<f64>, p: &ModelParams) -> (f64, f64) {
    let trace = (0..4).map(|i| minor[[i, i]]).sum::<f64>();
    (0.25 * p.omega0 * trace - p.omega0, 0.5 * p.g * (minor[[0, 2]] + minor[[1, 3]]))
}

/// Each part as ¼ tr(𝓗_part Σ) minus its vacuum value.
pub fn energy_components(sigma: &FullCovariance, p: &ModelParams) -> EnergyComponents {
    let modes = bath_modes(p);
    let s = &sigma.sigma;
    let (system_free, system_coupling) = system_energies(s.slice(s![..4, ..4]), p);
    let mut interaction = 0.0;
    let mut bath = 0.0;
    for (k, m) in modes.iter().enumerate() {
        let i = 4 + 2 * k;
        interaction += 0.5 * m.coupling * (s[[0, i]] + s[[1, i + 1]]);
        bath += 0.25 * m.omega * (s[[i, i]] + s[[i + 1, i + 1]]);
    }
    EnergyComponents { system_free, system_coupling, interaction, bath: bath - bath_zero_point_and_thermal(p, &modes) }
}

/// Smallest eigenvalue of Σ + iΩ.
pub fn uncertainty_min_eigenvalue(sigma: &FullCovariance) -> Result<f64> {
    let n = sigma.sigma.nrows();
    let m = sigma.sigma.mapv(C64::from) + symplectic_form(n / 2).mapv(|v| C64::new(0.0, v));
    Ok(m.eigvalsh(UPLO::Lower)?[0])
}

/// Symplectic eigenvalues ν_j of Σ, ascending: the positive eigenvalues of Σ^{1/2} iΩ Σ^{1/2}.
pub fn symplectic_spectrum(sigma: &FullCovariance) -> Result<Vec<f64>> {
    check_blas()?;
    let n = sigma.sigma.nrows();
    let (w, u) = sigma.sigma.eigh(UPLO::Lower)?;
    if w[0] <= 0.0 {
        return Err(Error::NonPhysical(format!("covariance is not positive definite (min eigenvalue {:e})", w[0])));
    }
    let root = (&u * &w.mapv(f64::sqrt)).dot(&u.t()).mapv(C64::from);
    let io = symplectic_form(n / 2).mapv(|v| C64::new(0.0, v));
    let k = root.dot(&io).dot(&root);
    let ev = k.eigvalsh(UPLO::Lower)?;
    Ok(ev.iter().skip(n / 2).cloned().collect())
}

/// One evaluation of the exact model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSample {
    pub t: f64,
    pub moments: MomentState,
    pub energies: EnergyComponents,
}

/// Per-time evaluation of system moments and energies in O(n²) each.
///
/// Uses tr(A Σ(t)) = Σ_{ab} (V†AV)_{ab} (V†Σ(0)V)_{ba} e^{i(λ_a − λ_b)t} and only
/// the first four rows of V for the system block.
pub struct ExactEvolution<'a> {
    model: &'a FullModel,
    rows: Array2<C64>,
    initial: Array2<C64>,
    interaction: Array2<C64>,
    bath: Array2<C64>,
    bath_offset: f64,
}

impl<'a> ExactEvolution<'a> {
    pub fn new(model: &'a FullModel, sigma0: &FullCovariance) -> Self {
        let v = &model.eigenvectors;
        let vh = v.t().mapv(|z| z.conj());
        let n = model.dimension();
        let initial = vh.dot(&sigma0.sigma.mapv(C64::from)).dot(v);

        let mut h1 = Array2::<f64>::zeros((n, n));
        let mut he = Array2::<f64>::zeros((n, n));
        for (k, m) in model.modes.iter().enumerate() {
            for q in 0..2 {
                let i = 4 + 2 * k + q;
                h1[[q, i]] = m.coupling;
                h1[[i, q]] = m.coupling;
                he[[i, i]] = m.omega;
            }
        }
        let weights = |h: &Array2<f64>| -> Array2<C64> {
            let t = vh.dot(&h.mapv(C64::from).dot(v));
            Array2::from_shape_fn((n, n), |(a, b)| t[[a, b]] * initial[[b, a]])
        };
        let interaction = weights(&h1);
        let bath = weights(&he);
        ExactEvolution {
            model,
            rows: v.slice(s![..4, ..]).to_owned(),
            initial,
            interaction,
            bath,
            bath_offset: bath_zero_point_and_thermal(&model.params, &model.modes),
        }
    }

    /// Upper-left 4×4 block of Σ(t).
    pub fn system_block(&self, t: f64) -> Result<Array2<f64>> {
        let phases = self.model.eigenvalues.mapv(|g| C64::from_polar(1.0, -g * t));
        let x = &self.rows * &phases;
        let block = x.dot(&self.initial).dot(&x.t().mapv(|z| z.conj()));
        let block = real_part(block, "system covariance")?;
        Ok(0.5 * (&block + &block.t()))
    }

    fn quadratic_trace(&self, w: &Array2<C64>, t: f64) -> f64 {
        let back = self.model.eigenvalues.mapv(|g| C64::from_polar(1.0, -g * t));
        let fwd = back.mapv(|z| z.conj());
        fwd.dot(&w.dot(&back)).re
    }

    pub fn sample(&self, t: f64) -> Result<ExactSample> {
        let block = self.system_block(t)?;
        let moments = system_moments_from_minor(block.view())?;
        let (system_free, system_coupling) = system_energies(block.view(), &self.model.params);
        let energies = EnergyComponents {
            system_free,
            system_coupling,
            interaction: 0.25 * self.quadratic_trace(&self.interaction, t),
            bath: 0.25 * self.quadratic_trace(&self.bath, t) - self.bath_offset,
        };
        Ok(ExactSample { t, moments, energies })
    }

    /// Samples on a grid, evaluated in parallel.
    pub fn trajectory(&self, times: &[f64]) -> Result<Vec<ExactSample>> {
        times.par_iter().map(|&t| self.sample(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(m: usize) -> ModelParams {
        ModelParams { m, ..ModelParams::reference() }
    }

    #[test]
    fn arrow_structure() {
        let p = small(5);
        let h = hamiltonian_matrix(&p, &bath_modes(&p));
        for i in 4..14 {
            for j in 4..14 {
                if i != j {
                    assert_eq!(h[[i, j]], 0.0);
                }
            }
            assert_eq!(h[[2, i]], 0.0);
        }
        assert_eq!(h, h.t());
    }

    #[test]
    fn decoupled_spectrum() {
        let p = ModelParams { g: 0.0, m: 4, ..ModelParams::reference() };
        let mut model_p = p.clone();
        model_p.kappa0 = 1e-300;
        let model = build_full_model(&model_p).unwrap();
        let mut expected: Vec<f64> = vec![1.0, 1.0, -1.0, -1.0];
        for k in 1..=4 {
            let w = k as f64 * 3.0 / 4.0;
            expected.extend([w, -w]);
        }
        expected.sort_by(f64::total_cmp);
        for (a, b) in model.eigenvalues.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn isolated_system_spectrum() {
        let p = ModelParams { m: 3, kappa0: 1e-300, ..ModelParams::reference() };
        let model = build_full_model(&p).unwrap();
        for w in [1.3, 0.7] {
            assert!(model.eigenvalues.iter().any(|g| (g - w).abs() < 1e-12));
            assert!(model.eigenvalues.iter().any(|g| (g + w).abs() < 1e-12));
        }
    }

    #[test]
    fn propagator_is_symplectic() {
        let model = build_full_model(&small(30)).unwrap();
        let o = model.symplectic_form();
        assert!(model.diagonalization_defect() < 1e-10);
        for t in [0.0, 0.37, 12.0, 250.0] {
            let s = model.propagator(t).unwrap();
            let d = s.dot(&o).dot(&s.t()) - &o;
            assert!(d.iter().all(|v| v.abs() < 1e-10), "t={t}");
        }
        let sigma0 = initial_covariance(&model.params);
        let d = propagate_exact(&model, &sigma0, 0.0).unwrap().sigma - &sigma0.sigma;
        assert!(d.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn initial_covariance_blocks() {
        let p = small(8);
        let s0 = initial_covariance(&p);
        assert_eq!(s0.sigma.slice(s![..4, ..4]), Array2::<f64>::eye(4));
        for (k, m) in bath_modes(&p).iter().enumerate() {
            let i = 4 + 2 * k;
            let tr = s0.sigma[[i, i]] + s0.sigma[[i + 1, i + 1]];
            assert!((tr - 2.0 * (2.0 / (p.beta * m.omega).exp_m1() + 1.0)).abs() < 1e-12);
        }
        let cold = ModelParams { beta: 1e4, ..p };
        assert!((initial_covariance(&cold).sigma - Array2::<f64>::eye(20)).iter().all(|v| v.abs() < 1e-12));
        assert!(uncertainty_min_eigenvalue(&s0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn moments_round_trip() {
        let x = MomentState::new(0.8, 2.1, C64::new(0.3, -0.4));
        let back = system_moments_from_minor(system_covariance(&x).view()).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-12);
        let vac = system_moments_from_minor(Array2::<f64>::eye(4).view()).unwrap();
        assert!(vac.max_abs_diff(&MomentState::VACUUM) < 1e-15);
        let th = system_covariance(&MomentState::new(1.0, 3.0, C64::new(0.0, 0.0)));
        assert!(system_moments_from_minor(th.view()).unwrap().cross.norm() < 1e-15);
    }

    #[test]
    fn fast_path_matches_full_propagation() {
        let model = build_full_model(&small(40)).unwrap();
        let sigma0 = initial_covariance(&model.params);
        let evo = ExactEvolution::new(&model, &sigma0);
        for t in [0.0, 3.3, 41.0] {
            let full = propagate_exact(&model, &sigma0, t).unwrap();
            let fast = evo.sample(t).unwrap();
            assert!(system_moments(&full).unwrap().max_abs_diff(&fast.moments) < 1e-9);
            let e = energy_components(&full, &model.params);
            for (a, b) in [
                (e.system_free, fast.energies.system_free),
                (e.system_coupling, fast.energies.system_coupling),
                (e.interaction, fast.energies.interaction),
                (e.bath, fast.energies.bath),
            ] {
                assert!((a - b).abs() < 1e-8, "t={t}: {a} vs {b}");
            }
            if t == 0.0 {
                assert!(e.total().abs() < 1e-9 && e.bath.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn first_moments_stay_zero() {
        let model = build_full_model(&small(10)).unwrap();
        let r = propagate_first_moments(&model, &Array1::zeros(24), 7.0).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
    }
}
