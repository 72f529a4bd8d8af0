//! Probability densities against the reference measure.
//!
//! A [`Density`] holds nonnegative values `ρ` with `Σ_i ρ_i m_i = 1`; the
//! measure it represents is `ρ m`. Construction either normalizes raw values
//! or validates that they already integrate to one.

use ndarray::Array1;

use crate::space::{Space, SpaceKind};
use crate::{Error, Result};

/// Named analytic marginal profiles, evaluated on the coordinates of a grid
/// space. On circle geometry the Gaussian bump uses wrap-around distance.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Constant density `1 / m(X)`.
    Uniform,
    /// `ρ(x) ∝ exp(-(x - center)² / scale)`.
    Gaussian { center: f64, scale: f64 },
    /// `ρ(x) ∝ 1 + amplitude · sin(2π · frequency · x / L)`, |amplitude| < 1.
    Sine { amplitude: f64, frequency: f64 },
    /// `ρ(x) ∝ 1 + amplitude · cos(2π · frequency · x / L)`, |amplitude| < 1.
    Cosine { amplitude: f64, frequency: f64 },
}

/// A probability density with respect to the reference weights of a [`Space`].
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    values: Array1<f64>,
}

impl Density {
    /// Normalize raw nonnegative values into a probability density.
    pub fn normalized(space: &Space, raw: Array1<f64>) -> Result<Density> {
        if raw.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: raw.len(),
            });
        }
        if let Some(i) = raw.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::BadDensity(format!(
                "value {} at index {i}",
                raw[i]
            )));
        }
        let mass: f64 = raw
            .iter()
            .zip(space.weights().iter())
            .map(|(&v, &w)| v * w)
            .sum();
        if !(mass > 0.0) {
            return Err(Error::BadDensity(format!("total mass {mass}")));
        }
        Ok(Density { values: raw / mass })
    }

    /// Accept values that already integrate to one (within 1e-9).
    pub fn from_normalized(space: &Space, values: Array1<f64>) -> Result<Density> {
        let d = Density::normalized(space, values.clone())?;
        let mass: f64 = values
            .iter()
            .zip(space.weights().iter())
            .map(|(&v, &w)| v * w)
            .sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::BadDensity(format!(
                "values integrate to {mass}, not 1"
            )));
        }
        Ok(d)
    }

    /// Exact output of an internal computation; skips re-normalization.
    pub(crate) fn from_raw_unchecked(values: Array1<f64>) -> Density {
        Density { values }
    }

    /// The uniform probability density `1 / m(X)`.
    pub fn uniform(space: &Space) -> Density {
        Density {
            values: Array1::from_elem(space.len(), 1.0 / space.total_mass()),
        }
    }

    /// Evaluate a named profile on the coordinates of a grid space.
    pub fn from_profile(space: &Space, profile: &Profile) -> Result<Density> {
        match profile {
            Profile::Uniform => Ok(Density::uniform(space)),
            _ => {
                let coords = space.coords().ok_or_else(|| {
                    Error::InvalidParameter(
                        "analytic profiles need a grid space with coordinates".into(),
                    )
                })?;
                let raw = match *profile {
                    Profile::Gaussian { center, scale } => {
                        if !(scale > 0.0) {
                            return Err(Error::InvalidParameter(format!(
                                "gaussian scale must be positive, got {scale}"
                            )));
                        }
                        coords.mapv(|x| {
                            let mut d = (x - center).abs();
                            if let Some(circ) = space.circumference() {
                                d = d.min(circ - d);
                            }
                            (-d * d / scale).exp()
                        })
                    }
                    Profile::Sine { amplitude, frequency } => {
                        oscillation(space, coords, amplitude, frequency, f64::sin)?
                    }
                    Profile::Cosine { amplitude, frequency } => {
                        oscillation(space, coords, amplitude, frequency, f64::cos)?
                    }
                    Profile::Uniform => unreachable!(),
                };
                Density::normalized(space, raw)
            }
        }
    }

    /// Mix with the uniform density: `(1-δ)ρ + δ·uniform`, the marginal
    /// regularization behind the CLI `--floor` option.
    pub fn with_floor(&self, space: &Space, delta: f64) -> Result<Density> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!(
                "floor must lie in [0, 1], got {delta}"
            )));
        }
        let u = 1.0 / space.total_mass();
        Ok(Density {
            values: self.values.mapv(|v| (1.0 - delta) * v + delta * u),
        })
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.values
    }

    /// Point masses `ρ_i m_i` of the measure `ρ m`.
    pub fn masses(&self, space: &Space) -> Array1<f64> {
        &self.values * space.weights()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Strictly positive everywhere, as IPFP requires.
    pub fn is_strictly_positive(&self) -> bool {
        self.min_value() > 0.0
    }
}

fn oscillation(
    space: &Space,
    coords: &Array1<f64>,
    amplitude: f64,
    frequency: f64,
    wave: fn(f64) -> f64,
) -> Result<Array1<f64>> {
    if amplitude.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "oscillation amplitude must satisfy |a| < 1 for positivity, got {amplitude}"
        )));
    }
    let span = match space.kind() {
        SpaceKind::Circle => space.circumference().unwrap(),
        _ => space.total_mass(),
    };
    Ok(coords.mapv(|x| 1.0 + amplitude * wave(2.0 * std::f64::consts::PI * frequency * x / span)))
}
