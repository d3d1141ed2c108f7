//! Linear array geometry and element radiation patterns.
//!
//! Every length in this crate is expressed in half-wavelength units, so a
//! standard linear array has unit element pitch and the free-space phase of a
//! path of length `r` is simply `pi * r`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axisymmetric power pattern `peak_gain * cos^exponent(theta)`, zero behind
/// the element plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    /// Linear power gain at boresight.
    pub peak_gain: f64,
    pub exponent: f64,
}

impl ElementPattern {
    /// Broad patch, 6 dBi and 90 degree half power beamwidth.
    pub const PATCH_6DBI: ElementPattern = ElementPattern {
        peak_gain: 4.0,
        exponent: 2.0,
    };

    /// Narrower patch, about 8 dBi and 65.5 degree half power beamwidth.
    pub const PATCH_8DBI: ElementPattern = ElementPattern {
        peak_gain: 6.3,
        exponent: 4.0,
    };

    /// Unit gain in the whole front half-space.
    pub const ISOTROPIC: ElementPattern = ElementPattern {
        peak_gain: 1.0,
        exponent: 0.0,
    };

    pub fn new(peak_gain: f64, exponent: f64) -> Result<Self> {
        if !(peak_gain.is_finite() && peak_gain > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "element peak gain must be positive, got {peak_gain}"
            )));
        }
        if !(exponent.is_finite() && exponent >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "element pattern exponent must be non-negative, got {exponent}"
            )));
        }
        Ok(Self {
            peak_gain,
            exponent,
        })
    }

    /// Looks up one of the named presets used in run configurations.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "patch6dBi" => Some(Self::PATCH_6DBI),
            "patch8dBi" => Some(Self::PATCH_8DBI),
            "isotropic" => Some(Self::ISOTROPIC),
            _ => None,
        }
    }

    /// Power gain at `theta_deg` from boresight.
    pub fn gain(&self, theta_deg: f64) -> f64 {
        if theta_deg.abs() >= 90.0 {
            return 0.0;
        }
        self.gain_from_cos(theta_deg.to_radians().cos())
    }

    /// Power gain for a direction whose cosine to boresight is `cos_theta`.
    /// Directions at or behind the element plane receive nothing.
    pub fn gain_from_cos(&self, cos_theta: f64) -> f64 {
        if cos_theta <= 0.0 {
            return 0.0;
        }
        self.peak_gain * cos_theta.powf(self.exponent)
    }

    /// Half power beamwidth in degrees, `2 acos(2^(-1/q))`.
    pub fn hpbw_deg(&self) -> f64 {
        if self.exponent == 0.0 {
            return 180.0;
        }
        2.0 * 2f64.powf(-1.0 / self.exponent).acos().to_degrees()
    }

    pub fn peak_gain_dbi(&self) -> f64 {
        10.0 * self.peak_gain.log10()
    }
}

/// Free-function form of [`ElementPattern::gain`].
pub fn element_gain(pattern: &ElementPattern, theta_deg: f64) -> f64 {
    pattern.gain(theta_deg)
}

/// Standard linear array centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearArray {
    pub num_elements: usize,
    /// Element pitch in half wavelengths.
    pub spacing: f64,
    pub element: ElementPattern,
}

impl LinearArray {
    pub fn new(num_elements: usize, spacing: f64, element: ElementPattern) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidArgument(
                "array needs at least one element".into(),
            ));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "element spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing,
            element,
        })
    }

    /// Half-wavelength pitched array.
    pub fn standard(num_elements: usize, element: ElementPattern) -> Result<Self> {
        Self::new(num_elements, 1.0, element)
    }

    pub fn position(&self, index: usize) -> f64 {
        (index as f64 - (self.num_elements as f64 - 1.0) / 2.0) * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.num_elements).map(|i| self.position(i)).collect()
    }

    pub fn aperture(&self) -> f64 {
        self.num_elements as f64 * self.spacing
    }

    pub fn rayleigh_distance(&self) -> f64 {
        rayleigh_distance(self.num_elements, self.spacing)
    }
}

/// Entries `conj(exp(j pi k sin theta))` for `k = 0..n`.
///
/// This is the column vector `a(theta)`; the far-field response of an
/// excitation `w` is `a(theta)^H w`.
pub fn steering_vector(n: usize, theta_deg: f64) -> Result<Vec<Complex64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "steering vector length must be at least 1".into(),
        ));
    }
    let s = theta_deg.to_radians().sin();
    Ok((0..n)
        .map(|k| Complex64::from_polar(1.0, -PI * k as f64 * s))
        .collect())
}

/// `2 L^2 / lambda` in half-wavelength units for an aperture of
/// `n * spacing` half wavelengths, which reduces to `L^2`.
pub fn rayleigh_distance(n: usize, spacing: f64) -> f64 {
    let aperture = n as f64 * spacing;
    aperture * aperture
}
