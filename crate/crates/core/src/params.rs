use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse-graining interval of the secular filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseGrain {
    Interval(f64),
    /// The Δt → ∞ limit, where the filter is the identity.
    Saturating,
}

/// Temperature given either directly or through the occupation of the bare mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temperature {
    Beta(f64),
    MeanOccupation(f64),
}

impl Temperature {
    pub fn beta(self, omega0: f64) -> Result<f64> {
        match self {
            Temperature::Beta(b) if b > 0.0 && b.is_finite() => Ok(b),
            Temperature::Beta(b) => {
                Err(Error::InvalidParameter { field: "beta", reason: format!("must be positive and finite, got {b}") })
            }
            Temperature::MeanOccupation(n) if n > 0.0 && n.is_finite() => Ok((1.0 / n).ln_1p() / omega0),
            Temperature::MeanOccupation(n) => Err(Error::InvalidParameter {
                field: "n0",
                reason: format!("mean occupation must be positive and finite, got {n}"),
            }),
        }
    }
}

/// Physical constants of the two-oscillator model and its bath.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub g: f64,
    /// κ(ω0).
    pub kappa0: f64,
    pub omega_c: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Number of discrete bath modes.
    pub m: usize,
    pub delta_t: CoarseGrain,
    /// Decay rate 𝒢 of the local weight in the convex mixture.
    pub mixture_rate: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

impl ModelParams {
    /// N(ω0) = 10, g = 0.3, κ(ω0) = 0.04, ωc = 3, α = 1, M = 400, 𝒢 = 0.4 κ(ω0).
    pub fn reference() -> Self {
        let omega0 = 1.0;
        let kappa0 = 0.04;
        ModelParams {
            omega0,
            g: 0.3,
            kappa0,
            omega_c: 3.0,
            alpha: 1.0,
            beta: Temperature::MeanOccupation(10.0).beta(omega0).unwrap(),
            m: 400,
            delta_t: CoarseGrain::Interval(0.0),
            mixture_rate: 0.4 * kappa0,
        }
    }

    pub fn with_temperature(mut self, t: Temperature) -> Result<Self> {
        self.beta = t.beta(self.omega0)?;
        Ok(self)
    }

    pub fn with_mean_occupation(self, n: f64) -> Result<Self> {
        self.with_temperature(Temperature::MeanOccupation(n))
    }

    /// N(ω0).
    pub fn mean_occupation(&self) -> f64 {
        1.0 / (self.beta * self.omega0).exp_m1()
    }

    pub fn omega_plus(&self) -> f64 {
        self.omega0 + self.g
    }

    pub fn omega_minus(&self) -> f64 {
        self.omega0 - self.g
    }

    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: String) -> Result<()> {
            Err(Error::InvalidParameter { field, reason })
        }
        let finite = [
            ("omega0", self.omega0),
            ("g", self.g),
            ("kappa0", self.kappa0),
            ("omega_c", self.omega_c),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mixture_rate", self.mixture_rate),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return bad(field, format!("must be finite, got {v}"));
            }
        }
        if self.omega0 <= 0.0 {
            return bad("omega0", format!("must be positive, got {}", self.omega0));
        }
        if self.g < 0.0 {
            return bad("g", format!("must be non-negative, got {}", self.g));
        }
        if self.omega_minus() <= 0.0 {
            return bad("g", format!("omega0 - g = {} leaves a non-positive eigenfrequency", self.omega_minus()));
        }
        if self.kappa0 <= 0.0 {
            return bad("kappa0", format!("must be positive, got {}", self.kappa0));
        }
        if self.omega_c <= self.omega_plus() {
            return bad("omega_c", format!("cutoff {} must exceed omega0 + g = {}", self.omega_c, self.omega_plus()));
        }
        if self.alpha < 0.0 {
            return bad("alpha", format!("must be non-negative, got {}", self.alpha));
        }
        if self.beta <= 0.0 {
            return bad("beta", format!("must be positive, got {}", self.beta));
        }
        if self.m == 0 {
            return bad("m", "at least one bath mode is required".into());
        }
        if let CoarseGrain::Interval(dt) = self.delta_t {
            if !(dt >= 0.0 && dt.is_finite()) {
                return bad("delta_t", format!("must be non-negative and finite, got {dt}"));
            }
        }
        if self.mixture_rate <= 0.0 {
            return bad("mixture_rate", format!("must be positive, got {}", self.mixture_rate));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_round_trip() {
        for n in [0.01, 0.5, 1.0, 10.0, 250.0] {
            let p = ModelParams::reference().with_mean_occupation(n).unwrap();
            assert!((p.mean_occupation() - n).abs() <= 1e-12 * n);
        }
        let p = ModelParams::reference().with_temperature(Temperature::Beta(2f64.ln())).unwrap();
        assert!((p.mean_occupation() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        let base = ModelParams::reference();
        let cases = [
            ModelParams { g: 1.0, ..base.clone() },
            ModelParams { g: 1.5, ..base.clone() },
            ModelParams { omega_c: 1.3, ..base.clone() },
            ModelParams { kappa0: 0.0, ..base.clone() },
            ModelParams { m: 0, ..base.clone() },
            ModelParams { alpha: -0.5, ..base.clone() },
            ModelParams { delta_t: CoarseGrain::Interval(-1.0), ..base.clone() },
        ];
        for p in cases {
            assert!(p.validate().is_err(), "{p:?}");
        }
        assert!(base.validate().is_ok());
        assert!(Temperature::MeanOccupation(0.0).beta(1.0).is_err());
    }
}
