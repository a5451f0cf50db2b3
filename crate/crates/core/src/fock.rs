//! Brute-force density-matrix propagation on a truncated two-mode Fock space.
//!
//! Basis states are |p, q⟩ with p quanta in γ₊ and q quanta in γ₋, stored at
//! index `p * d + q`. Everything is dense; the point of this module is to be
//! simple enough to trust when checking the moment equations.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use num_complex::Complex64 as C64;

use crate::coefficients::{CoefficientSet, Pair};
use crate::error::{Error, Result};
use crate::linalg::hermitian_eigh;
use crate::moments::MomentState;
use crate::ode::{dopri5, Tolerances};

/// Largest population allowed on the outermost Fock level of either mode.
pub const BOUNDARY_LIMIT: f64 = 1e-6;
/// Largest probability weight a truncated state may discard.
pub const TAIL_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct TruncatedState {
    pub rho: Array2<C64>,
    pub cutoff: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleScheme {
    Local,
    Global,
    CgRedfield(f64),
}

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn check_cutoff(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter { field: "cutoff", reason: format!("need d >= 2, got {d}") });
    }
    Ok(())
}

fn thermal_weight(n: f64, k: usize) -> f64 {
    let r = n / (n + 1.0);
    r.powi(k as i32) / (n + 1.0)
}

/// Product of thermal states of γ₊ and γ₋ with mean occupations `n_plus`, `n_minus`.
pub fn thermal_product_state(n_plus: f64, n_minus: f64, d: usize) -> Result<TruncatedState> {
    check_cutoff(d)?;
    for n in [n_plus, n_minus] {
        if !(n >= 0.0) {
            return Err(Error::InvalidParameter { field: "occupation", reason: format!("{n} is negative") });
        }
        let tail = (n / (n + 1.0)).powi(d as i32);
        if tail >= TAIL_LIMIT {
            return Err(Error::Cutoff(format!("occupation {n} leaves tail {tail:.3e} beyond cutoff {d}")));
        }
    }
    let dim = d * d;
    let mut rho = Array2::zeros((dim, dim));
    for p in 0..d {
        for q in 0..d {
            let i = p * d + q;
            rho[[i, i]] = C64::from(thermal_weight(n_plus, p) * thermal_weight(n_minus, q));
        }
    }
    Ok(TruncatedState { rho, cutoff: d })
}

/// Zero-mean Gaussian state with the given second moments.
///
/// The state is a thermal product in the normal modes that diagonalize
/// ⟨γ_σ†γ_σ'⟩; it is built from the number states of those modes with total
/// excitation below the cutoff.
pub fn gaussian_state(x: &MomentState, d: usize) -> Result<TruncatedState> {
    check_cutoff(d)?;
    let g = ndarray::arr2(&[[C64::from(x.n_plus), x.cross], [x.cross.conj(), C64::from(x.n_minus)]]);
    let (occ, u) = hermitian_eigh(&g)?;
    if occ[0] < -1e-12 {
        return Err(Error::NonPhysical(format!("moment matrix has eigenvalue {}", occ[0])));
    }
    let occ = [occ[0].max(0.0), occ[1].max(0.0)];
    // δ_j† = Σ_σ conj(U_σj) γ_σ†
    let creators: Vec<[C64; 2]> = (0..2).map(|j| [u[[0, j]].conj(), u[[1, j]].conj()]).collect();

    let dim = d * d;
    let mut rho = Array2::<C64>::zeros((dim, dim));
    let mut kept = 0.0;
    let mut vac = Array1::<C64>::zeros(dim);
    vac[0] = C64::from(1.0);
    let mut column = vac; // |ψ_{0,q}⟩
    for q in 0..d {
        if q > 0 {
            column = apply_creator(&creators[1], &column, d) / C64::from((q as f64).sqrt());
        }
        let mut psi = column.clone();
        for p in 0..d - q {
            if p > 0 {
                psi = apply_creator(&creators[0], &psi, d) / C64::from((p as f64).sqrt());
            }
            let w = thermal_weight(occ[0], p) * thermal_weight(occ[1], q);
            kept += w;
            for (i, a) in psi.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let wa = *a * w;
                for (j, b) in psi.iter().enumerate() {
                    rho[[i, j]] += wa * b.conj();
                }
            }
        }
    }
    let tail = 1.0 - kept;
    if tail >= TAIL_LIMIT {
        return Err(Error::Cutoff(format!("Gaussian state leaves tail {tail:.3e} beyond cutoff {d}")));
    }
    Ok(TruncatedState { rho, cutoff: d })
}

fn apply_creator(coef: &[C64; 2], v: &Array1<C64>, d: usize) -> Array1<C64> {
    let mut out = Array1::zeros(v.len());
    for p in 0..d {
        for q in 0..d {
            let a = v[p * d + q];
            if a == ZERO {
                continue;
            }
            if p + 1 < d {
                out[(p + 1) * d + q] += coef[0] * ((p + 1) as f64).sqrt() * a;
            }
            if q + 1 < d {
                out[p * d + q + 1] += coef[1] * ((q + 1) as f64).sqrt() * a;
            }
        }
    }
    out
}

impl TruncatedState {
    pub fn dimension(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.rho.diag().sum()
    }

    /// Population on states with p = d − 1 or q = d − 1.
    pub fn boundary_population(&self) -> f64 {
        let d = self.cutoff;
        (0..d * d).filter(|i| i / d == d - 1 || i % d == d - 1).map(|i| self.rho[[i, i]].re).sum()
    }

    /// ⟨γ₊†γ₊⟩, ⟨γ₋†γ₋⟩ and ⟨γ₋γ₊†⟩.
    pub fn moments(&self) -> MomentState {
        let d = self.cutoff;
        let mut n_plus = 0.0;
        let mut n_minus = 0.0;
        let mut cross = ZERO;
        for p in 0..d {
            for q in 0..d {
                let i = p * d + q;
                let pop = self.rho[[i, i]].re;
                n_plus += p as f64 * pop;
                n_minus += q as f64 * pop;
                // γ₋γ₊†|p, q⟩ = sqrt((p + 1) q)|p + 1, q − 1⟩, so tr(γ₋γ₊†ρ) picks ρ[(p, q), (p + 1, q − 1)]
                if q > 0 && p + 1 < d {
                    let j = (p + 1) * d + q - 1;
                    cross += self.rho[[i, j]] * (((p + 1) * q) as f64).sqrt();
                }
            }
        }
        MomentState::new(n_plus, n_minus, cross)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(hermitized(&self.rho).eigvalsh(UPLO::Lower)?.to_vec())
    }
}

fn hermitized(m: &Array2<C64>) -> Array2<C64> {
    (m + &m.t().mapv(|v| v.conj())) * C64::from(0.5)
}

/// Sparse matrix as (row, column, value) triples.
#[derive(Clone, Debug, Default)]
struct Sparse(Vec<(usize, usize, C64)>);

impl Sparse {
    /// γ₊ (`mode = 0`) or γ₋ (`mode = 1`).
    fn lowering(d: usize, mode: usize) -> Sparse {
        let mut e = Vec::new();
        for p in 0..d {
            for q in 0..d {
                let col = p * d + q;
                if mode == 0 && p > 0 {
                    e.push(((p - 1) * d + q, col, C64::from((p as f64).sqrt())));
                }
                if mode == 1 && q > 0 {
                    e.push((p * d + q - 1, col, C64::from((q as f64).sqrt())));
                }
            }
        }
        Sparse(e)
    }

    fn adjoint(&self) -> Sparse {
        Sparse(self.0.iter().map(|&(r, c, v)| (c, r, v.conj())).collect())
    }

    fn compose(&self, other: &Sparse, dim: usize) -> Sparse {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
        for &(r, c, v) in &other.0 {
            rows[r].push((c, v));
        }
        let mut acc = BTreeMap::new();
        for &(r, c, v) in &self.0 {
            for &(c2, v2) in &rows[c] {
                *acc.entry((r, c2)).or_insert(ZERO) += v * v2;
            }
        }
        Sparse(acc.into_iter().filter(|(_, v)| *v != ZERO).map(|((r, c), v)| (r, c, v)).collect())
    }

    fn sum(terms: &[(C64, &Sparse)]) -> Sparse {
        let mut acc = BTreeMap::new();
        for (k, op) in terms {
            if *k == ZERO {
                continue;
            }
            for &(r, c, v) in &op.0 {
                *acc.entry((r, c)).or_insert(ZERO) += *k * v;
            }
        }
        Sparse(acc.into_iter().filter(|(_, v)| *v != ZERO).map(|((r, c), v)| (r, c, v)).collect())
    }

    /// out += k · self · x (row-major `dim × dim` slices)
    fn left_mul_acc(&self, k: C64, x: &[C64], out: &mut [C64], dim: usize) {
        for &(r, c, v) in &self.0 {
            let kv = k * v;
            let src = &x[c * dim..(c + 1) * dim];
            let dst = &mut out[r * dim..(r + 1) * dim];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += kv * s;
            }
        }
    }

    /// out += k · x · self
    fn right_mul_acc(&self, k: C64, x: &[C64], out: &mut [C64], dim: usize) {
        let scaled: Vec<_> = self.0.iter().map(|&(r, c, v)| (r, c, k * v)).collect();
        for (src, dst) in x.chunks_exact(dim).zip(out.chunks_exact_mut(dim)) {
            for &(r, c, kv) in &scaled {
                dst[c] += kv * src[r];
            }
        }
    }
}

/// Quadratic GKSL generator
/// dρ/dt = −i[H, ρ] + Σ_ab A_ab(γ_a†ργ_b − ½{γ_bγ_a†, ρ}) + E_ab(γ_bργ_a† − ½{γ_a†γ_b, ρ}).
struct Generator {
    dim: usize,
    /// H − iK/2 with K the anticommutator part.
    h_eff: Sparse,
    h_eff_adj: Sparse,
    /// L ρ R summed over pairs
    jumps: Vec<(Sparse, Sparse)>,
}

fn scheme_tensors(scheme: OracleScheme, c: &CoefficientSet) -> (Pair, Pair, Pair) {
    let sp = &c.spectrum;
    let mut h = [[ZERO; 2]; 2];
    let mut absorb = h;
    let mut emit = h;
    match scheme {
        OracleScheme::Local => {
            let (k, n) = (sp.kappa0, sp.n0);
            for a in 0..2 {
                for b in 0..2 {
                    h[a][b] = C64::from(0.5 * c.delta_omega_a);
                    absorb[a][b] = C64::from(0.5 * k * n);
                    emit[a][b] = C64::from(0.5 * k * (1.0 + n));
                }
            }
        }
        OracleScheme::Global | OracleScheme::CgRedfield(_) => {
            let s_off = match scheme {
                OracleScheme::CgRedfield(s) => s,
                _ => 0.0,
            };
            let (g1, g2) = (&c.gamma[0], &c.gamma[1]);
            let (e1, e2) = (&c.eta[0], &c.eta[1]);
            for a in 0..2 {
                for b in 0..2 {
                    let s = if a == b { 1.0 } else { s_off };
                    h[a][b] = (e1[a][b] + e2[b][a]) * s;
                    absorb[a][b] = g1[a][b] * s;
                    emit[a][b] = g2[b][a] * s;
                }
            }
        }
    }
    h[0][0] += sp.omega_plus;
    h[1][1] += sp.omega_minus;
    (h, absorb, emit)
}

impl Generator {
    fn new(scheme: OracleScheme, c: &CoefficientSet, d: usize) -> Generator {
        let dim = d * d;
        let (h, absorb, emit) = scheme_tensors(scheme, c);
        let lower = [Sparse::lowering(d, 0), Sparse::lowering(d, 1)];
        let raise = [lower[0].adjoint(), lower[1].adjoint()];

        let mut owned = Vec::new();
        let half_i = C64::new(0.0, -0.5);
        for a in 0..2 {
            for b in 0..2 {
                owned.push((h[a][b], raise[a].compose(&lower[b], dim)));
                owned.push((half_i * absorb[a][b], lower[b].compose(&raise[a], dim)));
                owned.push((half_i * emit[a][b], raise[a].compose(&lower[b], dim)));
            }
        }
        // Σ_ab A_ab γ_a†ργ_b = Σ_a γ_a†ρ(Σ_b A_ab γ_b), and likewise for E
        let mut jumps = Vec::new();
        for a in 0..2 {
            let right = Sparse::sum(&[(absorb[a][0], &lower[0]), (absorb[a][1], &lower[1])]);
            if !right.0.is_empty() {
                jumps.push((raise[a].clone(), right));
            }
            let left = Sparse::sum(&[(emit[a][0], &lower[0]), (emit[a][1], &lower[1])]);
            if !left.0.is_empty() {
                jumps.push((left, raise[a].clone()));
            }
        }
        let terms: Vec<_> = owned.iter().map(|(k, op)| (*k, op)).collect();
        let h_eff = Sparse::sum(&terms);
        let h_eff_adj = h_eff.adjoint();
        Generator { dim, h_eff, h_eff_adj, jumps }
    }

    fn apply(&self, x: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let dim = self.dim;
        out.fill(ZERO);
        self.h_eff.left_mul_acc(C64::new(0.0, -1.0), x, out, dim);
        self.h_eff_adj.right_mul_acc(C64::new(0.0, 1.0), x, out, dim);
        for (l, r) in &self.jumps {
            scratch.fill(ZERO);
            r.right_mul_acc(C64::from(1.0), x, scratch, dim);
            l.left_mul_acc(C64::from(1.0), scratch, out, dim);
        }
    }
}

/// Propagates `rho0` to each time in `times` (ascending, measured from the
/// initial state) under `scheme`. Lamb shifts are whatever `coefficients` carry.
pub fn lindblad_trajectory(
    scheme: OracleScheme,
    coefficients: &CoefficientSet,
    rho0: &TruncatedState,
    times: &[f64],
) -> Result<Vec<TruncatedState>> {
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::Domain(format!("invalid propagation time {t}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("propagation times must be non-decreasing".into()));
    }
    let d = rho0.cutoff;
    let dim = d * d;
    if rho0.rho.dim() != (dim, dim) {
        return Err(Error::Domain(format!("state has shape {:?}, expected {dim}x{dim}", rho0.rho.dim())));
    }
    let gen = Generator::new(scheme, coefficients, d);
    let y0: Vec<C64> = rho0.rho.iter().copied().collect();
    let mut scratch = vec![ZERO; dim * dim];
    let tol = Tolerances { rtol: 1e-10, atol: 1e-10, ..Tolerances::default() };
    let raw = dopri5(|_, y: &[C64], dy: &mut [C64]| gen.apply(y, dy, &mut scratch), 0.0, &y0, times, tol)?;

    let mut out = Vec::with_capacity(raw.len());
    for (y, &t) in raw.into_iter().zip(times) {
        let state = TruncatedState { rho: Array2::from_shape_vec((dim, dim), y).expect("square state"), cutoff: d };
        let edge = state.boundary_population();
        if edge >= BOUNDARY_LIMIT {
            return Err(Error::Cutoff(format!("boundary population {edge:.3e} at t = {t} with cutoff {d}")));
        }
        out.push(state);
    }
    Ok(out)
}

pub fn lindblad_propagate(
    scheme: OracleScheme,
    coefficients: &CoefficientSet,
    rho0: &TruncatedState,
    t: f64,
) -> Result<TruncatedState> {
    Ok(lindblad_trajectory(scheme, coefficients, rho0, &[t])?.remove(0))
}

/// Uhlmann fidelity ‖√ρ₁√ρ₂‖₁.
pub fn fidelity_truncated(rho1: &TruncatedState, rho2: &TruncatedState) -> Result<f64> {
    if rho1.rho.dim() != rho2.rho.dim() {
        return Err(Error::Domain("states live on different truncations".into()));
    }
    let (w1, v1) = hermitian_eigh(&hermitized(&rho1.rho))?;
    let w2 = hermitized(&rho2.rho).eigvalsh(UPLO::Lower)?;
    for (name, w) in [("first", &w1), ("second", &w2)] {
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-8 {
            return Err(Error::NonPhysical(format!("{name} state has eigenvalue {min:.3e}")));
        }
    }
    let root = w1.mapv(|x| C64::from(x.max(0.0).sqrt()));
    let v1_adj = v1.t().mapv(|v| v.conj());
    let sqrt1 = (&v1 * &root).dot(&v1_adj);
    let m = sqrt1.dot(&rho2.rho).dot(&sqrt1);
    let eig = hermitized(&m).eigvalsh(UPLO::Lower)?;
    Ok(eig.iter().map(|x| x.max(0.0).sqrt()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::dissipator_coefficients;
    use crate::params::ModelParams;

    fn small() -> ModelParams {
        ModelParams::reference().with_mean_occupation(0.2).unwrap()
    }

    #[test]
    fn thermal_state_moments() {
        let s = thermal_product_state(0.3, 0.1, 20).unwrap();
        let x = s.moments();
        assert!((x.n_plus - 0.3).abs() < 1e-7 && (x.n_minus - 0.1).abs() < 1e-7);
        assert!((s.trace().re - 1.0).abs() < 1e-8);
        assert!(thermal_product_state(5.0, 0.0, 10).is_err());
        let vac = thermal_product_state(0.0, 0.0, 3).unwrap();
        assert_eq!(vac.rho[[0, 0]], C64::from(1.0));
    }

    #[test]
    fn gaussian_state_round_trip() {
        let x = MomentState::new(0.25, 0.15, C64::new(0.05, -0.08));
        let s = gaussian_state(&x, 18).unwrap();
        assert!(s.moments().max_abs_diff(&x) < 1e-7);
        assert!((s.trace().re - 1.0).abs() < 1e-8);
        assert!(s.eigenvalues().unwrap()[0] > -1e-12);
        let bad = MomentState::new(0.1, 0.1, C64::new(0.3, 0.0));
        assert!(gaussian_state(&bad, 10).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let th = thermal_product_state(0.4, 0.0, 24).unwrap();
        let vac = thermal_product_state(0.0, 0.0, 24).unwrap();
        let f = fidelity_truncated(&vac, &th).unwrap();
        assert!((f - 1.0 / 1.4f64.sqrt()).abs() < 1e-8);
        assert!((fidelity_truncated(&th, &th).unwrap() - 1.0).abs() < 1e-9);
        assert!((fidelity_truncated(&th, &vac).unwrap() - f).abs() < 1e-10);
    }

    #[test]
    fn global_relaxes_to_thermal_product() {
        let c = dissipator_coefficients(&small()).unwrap();
        let sp = c.spectrum;
        let vac = thermal_product_state(0.0, 0.0, 18).unwrap();
        let times = [10.0, 600.0];
        let out = lindblad_trajectory(OracleScheme::Global, &c, &vac, &times).unwrap();
        for s in &out {
            assert!((s.trace().re - 1.0).abs() < 1e-9);
        }
        let target = thermal_product_state(sp.n_plus, sp.n_minus, 18).unwrap();
        assert!((fidelity_truncated(&out[1], &target).unwrap() - 1.0).abs() < 1e-6);
    }
}
