//! Second moments of the two-mode system and trajectories of them.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// ⟨γ₊†γ₊⟩, ⟨γ₋†γ₋⟩ and ⟨γ₋γ₊†⟩.
///
/// For an initial state without first moments or squeezing these three numbers
/// fix the Gaussian state of the system completely.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MomentState {
    pub n_plus: f64,
    pub n_minus: f64,
    pub cross: C64,
}

/// ⟨a†a⟩, ⟨b†b⟩ and ⟨ab†⟩ in the bare-mode basis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LocalMoments {
    pub aa: f64,
    pub bb: f64,
    pub ab: C64,
}

impl MomentState {
    pub const VACUUM: MomentState = MomentState { n_plus: 0.0, n_minus: 0.0, cross: C64 { re: 0.0, im: 0.0 } };

    pub fn new(n_plus: f64, n_minus: f64, cross: C64) -> Self {
        MomentState { n_plus, n_minus, cross }
    }

    /// (n₊, n₋, Re cross, Im cross)
    pub fn to_vector(self) -> [f64; 4] {
        [self.n_plus, self.n_minus, self.cross.re, self.cross.im]
    }

    pub fn from_vector(x: [f64; 4]) -> Self {
        MomentState { n_plus: x[0], n_minus: x[1], cross: C64::new(x[2], x[3]) }
    }

    pub fn to_local(self) -> LocalMoments {
        let mean = 0.5 * (self.n_plus + self.n_minus);
        LocalMoments {
            aa: mean + self.cross.re,
            bb: mean - self.cross.re,
            ab: C64::new(0.5 * (self.n_plus - self.n_minus), self.cross.im),
        }
    }

    /// (1 − w)·self + w·other on every moment.
    pub fn blend(self, other: MomentState, w: f64) -> Self {
        MomentState {
            n_plus: (1.0 - w) * self.n_plus + w * other.n_plus,
            n_minus: (1.0 - w) * self.n_minus + w * other.n_minus,
            cross: self.cross * (1.0 - w) + other.cross * w,
        }
    }

    /// Largest absolute difference over the four real components.
    pub fn max_abs_diff(&self, other: &MomentState) -> f64 {
        let (a, b) = (self.to_vector(), other.to_vector());
        (0..4).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
    }
}

impl LocalMoments {
    pub fn to_eigenmode(self) -> MomentState {
        let mean = 0.5 * (self.aa + self.bb);
        MomentState {
            n_plus: mean + self.ab.re,
            n_minus: mean - self.ab.re,
            cross: C64::new(0.5 * (self.aa - self.bb), self.ab.im),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    Exact,
    /// Coarse-grained Redfield with S₊₋ = 1.
    Redfield,
    /// Coarse-grained Redfield with S₊₋ at the complete-positivity bound.
    CpRedfield,
    CgRedfield(f64),
    Global,
    Local,
    Mixture,
}

impl Scheme {
    pub fn name(&self) -> String {
        match self {
            Scheme::Exact => "exact".into(),
            Scheme::Redfield => "redfield".into(),
            Scheme::CpRedfield => "cp_redfield".into(),
            Scheme::CgRedfield(s) => format!("cg_redfield({s})"),
            Scheme::Global => "global".into(),
            Scheme::Local => "local".into(),
            Scheme::Mixture => "mixture".into(),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
    pub scheme: Scheme,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<MomentState>, scheme: Scheme) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Domain(format!("{} times but {} states", times.len(), states.len())));
        }
        check_grid(&times)?;
        Ok(Trajectory { times, states, scheme })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&MomentState> {
        self.states.last()
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::Domain("time grid contains non-finite values".into()));
    }
    if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::Domain(format!("time grid not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// e^{−𝒢t}·local + (1 − e^{−𝒢t})·global at every time.
pub fn mixture_moments(local: &Trajectory, global: &Trajectory, mixture_rate: f64) -> Result<Trajectory> {
    if local.times != global.times {
        return Err(Error::Domain("local and global trajectories use different time grids".into()));
    }
    let states = local
        .times
        .iter()
        .zip(local.states.iter().zip(&global.states))
        .map(|(&t, (l, g))| l.blend(*g, -(-mixture_rate * t).exp_m1()))
        .collect();
    Ok(Trajectory { times: local.times.clone(), states, scheme: Scheme::Mixture })
}
