//! Equation family: dispersion symbol, nonlinearity power and sign.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dispersion symbol `omega(xi)` of the linear part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Symbol {
    /// `|xi|^2`
    Schrodinger,
    /// `|xi|^4`
    Biharmonic,
    /// `|xi|^{2 alpha}` with `alpha` in `(1/2, 1)`
    Fractional { alpha: f64 },
}

impl Symbol {
    /// `omega` as a function of `|xi|^2`.
    pub fn omega(&self, xi_sq: f64) -> f64 {
        match *self {
            Symbol::Schrodinger => xi_sq,
            Symbol::Biharmonic => xi_sq * xi_sq,
            Symbol::Fractional { alpha } => {
                if xi_sq == 0.0 {
                    0.0
                } else {
                    xi_sq.powf(alpha)
                }
            }
        }
    }

    /// Linear `L^inf` decay rate `|t|^{-rate}` in dimension `dim`.
    pub fn dispersive_rate(&self, dim: usize) -> f64 {
        let d = dim as f64;
        match *self {
            Symbol::Schrodinger => d / 2.0,
            Symbol::Biharmonic => d / 4.0,
            Symbol::Fractional { alpha } => d / (2.0 * alpha),
        }
    }
}

/// Sign of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sign {
    Off,
    Defocusing,
}

impl Sign {
    pub fn mu(self) -> f64 {
        match self {
            Sign::Off => 0.0,
            Sign::Defocusing => 1.0,
        }
    }
}

/// `i u_t - omega(D) u = mu |u|^{p-1} u`, with `omega(D) = -Laplacian` for the
/// Schrodinger symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub symbol: Symbol,
    pub power: u32,
    pub sign: Sign,
}

impl ModelSpec {
    pub fn new(symbol: Symbol, power: u32, sign: Sign) -> Result<Self> {
        let model = Self {
            symbol,
            power,
            sign,
        };
        model.validate()?;
        Ok(model)
    }

    /// Defocusing cubic Schrodinger equation.
    pub fn cubic() -> Self {
        Self {
            symbol: Symbol::Schrodinger,
            power: 3,
            sign: Sign::Defocusing,
        }
    }

    /// Free Schrodinger flow (nonlinearity switched off).
    pub fn linear() -> Self {
        Self {
            symbol: Symbol::Schrodinger,
            power: 3,
            sign: Sign::Off,
        }
    }

    pub fn with_sign(self, sign: Sign) -> Self {
        Self { sign, ..self }
    }

    pub fn with_power(self, power: u32) -> Self {
        Self { power, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if let Symbol::Fractional { alpha } = self.symbol {
            if !(alpha > 0.5 && alpha < 1.0) {
                return Err(Error::InvalidModel(format!(
                    "fractional order must lie in (1/2, 1) (got {alpha})"
                )));
            }
        }
        if !matches!(self.power, 3 | 5) {
            return Err(Error::InvalidModel(format!(
                "nonlinearity power must be 3 or 5 (got {})",
                self.power
            )));
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.sign.mu()
    }

    pub fn is_linear(&self) -> bool {
        self.sign == Sign::Off
    }
}

/// `omega(xi)` for a wavevector with `dim` meaningful entries.
pub fn dispersion_phase(model: &ModelSpec, xi: &[f64]) -> f64 {
    let xi_sq: f64 = xi.iter().map(|v| v * v).sum();
    model.symbol.omega(xi_sq)
}
