//! Monte Carlo simulator and photon-counting statistics for DLCZ-type quantum
//! memory in warm rubidium vapor with a buffer gas.
//!
//! The crate is organized along the physical pipeline:
//!
//! * [`config`]: experiment parameters, config documents and derived
//!   quantities (intensity, vapor density, diffusion coefficient).
//! * [`geometry`]: spin-wave wavelength, four-wave phase matching and the
//!   collected spatial-mode estimate.
//! * [`decoherence`]: spin-wave lifetime budget and retrieval efficiency.
//! * [`emission`]: the stochastic write/store/read trial and parallel runs.
//! * [`spectral`]: etalon transmission, channel spectra, scans and SNR.
//! * [`stats`]: g⁽²⁾ estimators, the closed-form model and the
//!   Cauchy–Schwarz test.
//! * [`calibrate`]: fits excitation probability, noise rates and the memory
//!   lifetime to per-shot detection anchors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod calibrate;
pub mod config;
pub mod decoherence;
pub mod emission;
pub mod error;
pub mod geometry;
pub mod quad;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod units;

pub use config::ExperimentConfig;
pub use error::{Error, Result};

/// Artifact version recorded in output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Detection channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Stokes,
    AntiStokes,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Stokes => f.write_str("stokes"),
            Channel::AntiStokes => f.write_str("anti_stokes"),
        }
    }
}

impl std::str::FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stokes" => Ok(Channel::Stokes),
            "anti_stokes" | "anti-stokes" | "antistokes" => Ok(Channel::AntiStokes),
            other => Err(Error::InvalidArgument(format!("unknown channel `{other}`"))),
        }
    }
}

/// A value that may be unbounded, e.g. a spin-wave wavelength at zero angle
/// or a lifetime with no decay mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounded {
    Finite(f64),
    Unbounded,
}

impl Bounded {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bounded::Finite(v) => Some(v),
            Bounded::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Bounded::Unbounded)
    }

    /// Reciprocal with unbounded mapped to zero; used for rate sums.
    pub fn rate(self) -> f64 {
        match self {
            Bounded::Finite(v) => 1.0 / v,
            Bounded::Unbounded => 0.0,
        }
    }

    /// `f64::INFINITY` for unbounded values; for display and CSV output.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}
