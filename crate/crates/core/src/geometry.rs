//! Beam geometry: spin-wave wavelength, four-wave phase matching and the
//! collected spatial-mode estimate.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::Bounded;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    CoPropagating,
    CounterPropagating,
}

impl PropagationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PropagationMode::CoPropagating => "co_propagating",
            PropagationMode::CounterPropagating => "counter_propagating",
        }
    }
}

impl std::str::FromStr for PropagationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "co_propagating" | "co-propagating" | "co" => Ok(PropagationMode::CoPropagating),
            "counter_propagating" | "counter-propagating" | "counter" => Ok(PropagationMode::CounterPropagating),
            other => Err(Error::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub theta_write_stokes: f64,
    pub theta_read_antistokes: f64,
    pub theta_write_read: f64,
    pub propagation_mode: PropagationMode,
    pub photon_wavelength: f64,
}

impl GeometryConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("GeometryConfig.theta_write_stokes", self.theta_write_stokes),
            ("GeometryConfig.theta_read_antistokes", self.theta_read_antistokes),
            ("GeometryConfig.theta_write_read", self.theta_write_read),
        ] {
            if !(0.0..=PI).contains(&v) {
                return Err(Error::validation(field, format!("angle must lie in [0, π], got {v}")));
            }
        }
        if !(self.photon_wavelength > 0.0) {
            return Err(Error::validation(
                "GeometryConfig.photon_wavelength",
                format!("must be > 0, got {}", self.photon_wavelength),
            ));
        }
        Ok(())
    }
}

pub type Vec3 = [f64; 3];

fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm(a: Vec3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Rotation about the y axis; positive angles tilt +z toward +x.
fn rotate_y(a: Vec3, angle: f64) -> Vec3 {
    let (s, c) = angle.sin_cos();
    [c * a[0] + s * a[2], a[1], -s * a[0] + c * a[2]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveVector {
    direction: Vec3,
    magnitude: f64,
}

impl WaveVector {
    /// Builds a wave vector; `direction` is normalized.
    pub fn new(direction: Vec3, magnitude: f64) -> Result<Self> {
        let n = norm(direction);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("wave-vector direction must be nonzero".into()));
        }
        if !(magnitude > 0.0) || !magnitude.is_finite() {
            return Err(Error::domain("wave-vector magnitude", magnitude));
        }
        Ok(WaveVector {
            direction: scale(direction, 1.0 / n),
            magnitude,
        })
    }

    pub fn from_wavelength(direction: Vec3, wavelength: f64) -> Result<Self> {
        Self::new(direction, 2.0 * PI / wavelength)
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn vector(&self) -> Vec3 {
        scale(self.direction, self.magnitude)
    }
}

/// Effective spin-wave wavelength `λ / sin θ` for write–Stokes angle `theta`.
pub fn spin_wave_wavelength(theta: f64, photon_wavelength: f64) -> Result<Bounded> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::domain("write-Stokes angle (valid 0..π/2)", theta));
    }
    if !(photon_wavelength > 0.0) {
        return Err(Error::domain("photon wavelength", photon_wavelength));
    }
    if theta == 0.0 {
        return Ok(Bounded::Unbounded);
    }
    Ok(Bounded::Finite(photon_wavelength / theta.sin()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseMismatch {
    /// `(kW + kR) - (kS + kAS)`.
    pub vector: Vec3,
    pub magnitude: f64,
    /// `π / |Δk|`.
    pub coherence_length: Bounded,
}

impl PhaseMismatch {
    /// True when the coherence length covers `length`.
    pub fn holds_over(&self, length: f64) -> bool {
        match self.coherence_length {
            Bounded::Unbounded => true,
            Bounded::Finite(l) => l >= length,
        }
    }
}

pub fn phase_mismatch(kw: &WaveVector, kr: &WaveVector, ks: &WaveVector, kas: &WaveVector) -> PhaseMismatch {
    let vector = sub(add(kw.vector(), kr.vector()), add(ks.vector(), kas.vector()));
    let magnitude = norm(vector);
    let coherence_length = if magnitude == 0.0 {
        Bounded::Unbounded
    } else {
        Bounded::Finite(PI / magnitude)
    };
    PhaseMismatch {
        vector,
        magnitude,
        coherence_length,
    }
}

/// Write, read, Stokes and anti-Stokes wave vectors of a config's geometry.
#[derive(Debug, Clone, Copy)]
pub struct BeamWaveVectors {
    pub write: WaveVector,
    pub read: WaveVector,
    pub stokes: WaveVector,
    pub antistokes: WaveVector,
}

impl BeamWaveVectors {
    pub fn mismatch(&self) -> PhaseMismatch {
        phase_mismatch(&self.write, &self.read, &self.stokes, &self.antistokes)
    }
}

/// Builds the four wave vectors for `mode` from the config's beams and angles.
///
/// The write beam runs along +z. The read axis is tilted by `θ_WR`; the
/// Stokes photon is tilted by `+θ_WS` from the write beam and the anti-Stokes
/// photon by `-θ_RAS` from the (forward) read axis. In counter-propagating mode
/// the read beam is reversed while both photons are collected forward.
/// Stokes and anti-Stokes frequencies follow from energy conservation across
/// the ground hyperfine splitting.
pub fn beam_wave_vectors(config: &ExperimentConfig, mode: PropagationMode) -> Result<BeamWaveVectors> {
    let g = &config.geometry;
    let nu_w = SPEED_OF_LIGHT / config.write.wavelength;
    let nu_r = SPEED_OF_LIGHT / config.read.wavelength;
    let nu_s = nu_w - config.hyperfine_ground_splitting;
    let nu_as = nu_r + config.hyperfine_ground_splitting;
    let k = |nu: f64| 2.0 * PI * nu / SPEED_OF_LIGHT;

    let z = [0.0, 0.0, 1.0];
    let read_axis = rotate_y(z, g.theta_write_read);
    let read_dir = match mode {
        PropagationMode::CoPropagating => read_axis,
        PropagationMode::CounterPropagating => scale(read_axis, -1.0),
    };
    Ok(BeamWaveVectors {
        write: WaveVector::new(z, k(nu_w))?,
        read: WaveVector::new(read_dir, k(nu_r))?,
        stokes: WaveVector::new(rotate_y(z, g.theta_write_stokes), k(nu_s))?,
        antistokes: WaveVector::new(rotate_y(read_axis, -g.theta_read_antistokes), k(nu_as))?,
    })
}

/// [`beam_wave_vectors`] for the collinear collection geometry: Stokes along
/// the write beam and anti-Stokes along the read axis, keeping the config's
/// beams and write–read angle. These are the named `co_propagating` and
/// `counter_propagating` presets.
pub fn collinear_wave_vectors(config: &ExperimentConfig, mode: PropagationMode) -> Result<BeamWaveVectors> {
    let mut c = config.clone();
    c.geometry.theta_write_stokes = 0.0;
    c.geometry.theta_read_antistokes = 0.0;
    beam_wave_vectors(&c, mode)
}

/// Étendue estimate of the number of transverse modes collected from a
/// Gaussian beam of 1/e² radius `waist` within `collection_half_angle`.
///
/// The collected aperture is the disk of radius `2w` (containing all but
/// e⁻⁸ of the beam power): `M = π(2w)² · πθ² / λ²`, floored at one mode.
pub fn spatial_mode_count(waist: f64, collection_half_angle: f64, photon_wavelength: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::domain("waist", waist));
    }
    if !(collection_half_angle > 0.0 && collection_half_angle < FRAC_PI_2) {
        return Err(Error::domain("collection half-angle", collection_half_angle));
    }
    if !(photon_wavelength > 0.0) {
        return Err(Error::domain("photon wavelength", photon_wavelength));
    }
    let radius = 2.0 * waist;
    let area = PI * radius * radius;
    let solid_angle = PI * collection_half_angle * collection_half_angle;
    let m = area * solid_angle / (photon_wavelength * photon_wavelength);
    Ok(m.round().max(1.0))
}
