//! Spin-wave decoherence budget and retrieval efficiency versus storage time.

use std::f64::consts::PI;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::geometry::spin_wave_wavelength;
use crate::Bounded;

/// Lifetime of a spin-wave grating washed out by diffusion: `1 / (D k²)`.
pub fn fringe_lifetime(diffusion: f64, spin_wavelength: Bounded) -> Result<Bounded> {
    if !(diffusion > 0.0) {
        return Err(Error::domain("diffusion coefficient", diffusion));
    }
    match spin_wavelength {
        Bounded::Unbounded => Ok(Bounded::Unbounded),
        Bounded::Finite(lambda) => {
            if !(lambda > 0.0) {
                return Err(Error::domain("spin-wave wavelength", lambda));
            }
            let k = 2.0 * PI / lambda;
            Ok(Bounded::Finite(1.0 / (diffusion * k * k)))
        }
    }
}

/// Diffusive escape time from a beam of radius `waist`: `w² / (4D)`.
pub fn transit_lifetime(waist: f64, diffusion: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::domain("waist", waist));
    }
    if !(diffusion > 0.0) {
        return Err(Error::domain("diffusion coefficient", diffusion));
    }
    Ok(waist * waist / (4.0 * diffusion))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceBudget {
    pub tau_fringe: Bounded,
    pub tau_transit: f64,
    pub tau_other: Bounded,
    pub tau_combined: f64,
}

impl DecoherenceBudget {
    /// Combines mechanism lifetimes by summing their rates.
    pub fn new(tau_fringe: Bounded, tau_transit: f64, tau_other: Bounded) -> Result<Self> {
        if !(tau_transit > 0.0) {
            return Err(Error::domain("transit lifetime", tau_transit));
        }
        for t in [tau_fringe, tau_other].into_iter().filter_map(Bounded::finite) {
            if !(t > 0.0) {
                return Err(Error::domain("lifetime", t));
            }
        }
        let rate = tau_fringe.rate() + 1.0 / tau_transit + tau_other.rate();
        Ok(DecoherenceBudget {
            tau_fringe,
            tau_transit,
            tau_other,
            tau_combined: 1.0 / rate,
        })
    }

    /// Budget for a config: fringe term from the write–Stokes angle, transit
    /// term from the write waist, both at the cell's diffusion coefficient.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        let d = config.diffusion_coefficient()?;
        let lambda = spin_wave_wavelength(config.geometry.theta_write_stokes, config.geometry.photon_wavelength)?;
        let fringe = fringe_lifetime(d, lambda)?;
        let transit = transit_lifetime(config.write.waist, d)?;
        let other = config.other_lifetime.map_or(Bounded::Unbounded, Bounded::Finite);
        Self::new(fringe, transit, other)
    }
}

/// Retrieval efficiency after a storage time `delay`: `η0 · exp(-delay / τ)`.
pub fn retrieval_efficiency(delay: f64, budget: &DecoherenceBudget, eta0: f64) -> Result<f64> {
    if !(delay >= 0.0) {
        return Err(Error::domain("storage delay", delay));
    }
    if !(0.0..=1.0).contains(&eta0) {
        return Err(Error::domain("intrinsic retrieval efficiency", eta0));
    }
    Ok(eta0 * (-delay / budget.tau_combined).exp())
}
