//! Experiment parameters and derived physical quantities.
//!
//! Config documents are TOML with unit-suffixed string scalars
//! (`power = "0.6 mW"`). Dimensionless quantities (fractions, finesse,
//! probabilities, exponents) are plain numbers. Internally everything is SI.

use serde::{Deserialize, Serialize};

use crate::emission::NoiseRates;
use crate::error::{Error, Result};
use crate::geometry::{GeometryConfig, PropagationMode};
use crate::spectral::{ChannelCalibration, EtalonFilter, SpectralCalibration};
use crate::units::{format_quantity, parse_quantity, Dimension, ATM, TORR};
use crate::Channel;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Rb D1 vacuum wavelength.
pub const RB_D1_WAVELENGTH: f64 = 794.978_851e-9;

/// Rubidium melting point; the vapor-pressure correlation switches branch here.
const RB_MELTING_POINT: f64 = 312.46;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferSpecies {
    Ne,
}

impl std::str::FromStr for BufferSpecies {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Ne" | "ne" | "neon" => Ok(BufferSpecies::Ne),
            other => Err(Error::UnknownSpecies(other.to_string())),
        }
    }
}

impl BufferSpecies {
    pub fn as_str(self) -> &'static str {
        match self {
            BufferSpecies::Ne => "Ne",
        }
    }
}

/// Reference point for the diffusion scaling law `D = D0 (P0/P) (T/T0)^(3/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionReference {
    pub d0: f64,
    pub p0: f64,
    pub t0: f64,
}

impl DiffusionReference {
    /// Rb in Ne: 2e-5 m²/s at 1 atm and 300 K.
    pub fn for_species(species: BufferSpecies) -> Self {
        match species {
            BufferSpecies::Ne => DiffusionReference {
                d0: 2e-5,
                p0: ATM,
                t0: 300.0,
            },
        }
    }

    pub fn coefficient(&self, pressure: f64, temperature: f64) -> Result<f64> {
        if !(pressure > 0.0) {
            return Err(Error::domain("buffer pressure", pressure));
        }
        if !(temperature > 0.0) {
            return Err(Error::domain("temperature", temperature));
        }
        Ok(self.d0 * (self.p0 / pressure) * (temperature / self.t0).powf(1.5))
    }
}

/// Diffusion coefficient of Rb in the given buffer gas using the default reference tuple.
pub fn diffusion_coefficient(species: BufferSpecies, pressure: f64, temperature: f64) -> Result<f64> {
    DiffusionReference::for_species(species).coefficient(pressure, temperature)
}

/// Beam intensity `P / (π w²)` in W/m².
pub fn beam_intensity(power: f64, waist: f64) -> Result<f64> {
    if !(waist > 0.0) {
        return Err(Error::domain("beam waist", waist));
    }
    if !(power >= 0.0) {
        return Err(Error::domain("beam power", power));
    }
    Ok(power / (std::f64::consts::PI * waist * waist))
}

/// Saturated rubidium vapor pressure in pascal.
///
/// `log10(P/Torr) = 2.881 + A - B/T` with (A, B) = (4.857, 4215) for the
/// solid and (4.312, 4040) for the liquid phase.
pub fn rb_vapor_pressure(temperature: f64) -> Result<f64> {
    if !(temperature > 250.0 && temperature < 450.0) {
        return Err(Error::domain("temperature (valid 250-450 K)", temperature));
    }
    let (a, b) = if temperature < RB_MELTING_POINT {
        (4.857, 4215.0)
    } else {
        (4.312, 4040.0)
    };
    let log_torr = 2.881 + a - b / temperature;
    Ok(10f64.powf(log_torr) * TORR)
}

/// Total rubidium number density (m⁻³) of saturated vapor at `temperature` (K).
pub fn rb_number_density(temperature: f64) -> Result<f64> {
    let pressure = rb_vapor_pressure(temperature)?;
    Ok(pressure / (BOLTZMANN * temperature))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaporCell {
    pub length: f64,
    pub temperature: f64,
    pub buffer_species: BufferSpecies,
    pub buffer_pressure: f64,
    pub atomic_density_override: Option<f64>,
}

impl VaporCell {
    pub fn number_density(&self) -> Result<f64> {
        match self.atomic_density_override {
            Some(n) => Ok(n),
            None => rb_number_density(self.temperature),
        }
    }

    fn validate(&self) -> Result<()> {
        positive("VaporCell.length", self.length)?;
        positive("VaporCell.temperature", self.temperature)?;
        positive("VaporCell.buffer_pressure", self.buffer_pressure)?;
        if let Some(n) = self.atomic_density_override {
            positive("VaporCell.atomic_density_override", n)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamRole {
    Write,
    Read,
    Pump,
}

/// Excited hyperfine level a detuning is quoted against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceLine {
    F1Excited,
    F2Excited,
}

impl ReferenceLine {
    fn as_str(self) -> &'static str {
        match self {
            ReferenceLine::F1Excited => "F1_excited",
            ReferenceLine::F2Excited => "F2_excited",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "F1_excited" => Ok(ReferenceLine::F1Excited),
            "F2_excited" => Ok(ReferenceLine::F2Excited),
            other => Err(Error::Parse(format!("unknown reference_line `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    pub role: BeamRole,
    pub power: f64,
    pub waist: f64,
    pub wavelength: f64,
    /// Signed detuning from `reference_line`; negative is below (red of) the line.
    pub detuning: f64,
    pub reference_line: ReferenceLine,
}

impl Beam {
    pub fn intensity(&self) -> f64 {
        self.power / (std::f64::consts::PI * self.waist * self.waist)
    }

    fn validate(&self) -> Result<()> {
        let name = match self.role {
            BeamRole::Write => "write",
            BeamRole::Read => "read",
            BeamRole::Pump => "pump",
        };
        if !(self.power >= 0.0) {
            return Err(Error::validation(
                "Beam.power",
                format!("{name} beam power must be >= 0, got {}", self.power),
            ));
        }
        if !(self.waist > 0.0) {
            return Err(Error::validation(
                "Beam.waist",
                format!("{name} beam waist must be > 0, got {}", self.waist),
            ));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::validation(
                "Beam.wavelength",
                format!("{name} beam wavelength must be > 0, got {}", self.wavelength),
            ));
        }
        if !self.detuning.is_finite() {
            return Err(Error::validation(
                "Beam.detuning",
                format!("{name} beam detuning must be finite"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub write_duration: f64,
    pub read_duration: f64,
    /// Leading edge of write to leading edge of read.
    pub write_read_delay: f64,
    pub pump_gap_before_write: f64,
    pub repetition_rate: f64,
}

impl PulseSequence {
    pub fn period(&self) -> f64 {
        1.0 / self.repetition_rate
    }

    /// Storage time between the end of the write pulse and the start of the read pulse.
    pub fn storage_time(&self) -> f64 {
        self.write_read_delay - self.write_duration
    }

    pub fn window(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Stokes => self.write_duration,
            Channel::AntiStokes => self.read_duration,
        }
    }

    fn validate(&self) -> Result<()> {
        positive("PulseSequence.write_duration", self.write_duration)?;
        positive("PulseSequence.read_duration", self.read_duration)?;
        positive("PulseSequence.pump_gap_before_write", self.pump_gap_before_write)?;
        positive("PulseSequence.repetition_rate", self.repetition_rate)?;
        if !(self.write_read_delay >= self.write_duration) {
            return Err(Error::validation(
                "PulseSequence.write_read_delay",
                format!(
                    "read overlaps write: delay {} s is shorter than the write duration {} s",
                    self.write_read_delay, self.write_duration
                ),
            ));
        }
        let cycle = self.pump_gap_before_write + self.write_read_delay + self.read_duration;
        if cycle > self.period() {
            return Err(Error::validation(
                "PulseSequence.repetition_rate",
                format!(
                    "cycle of {cycle} s does not fit in the {} s repetition period",
                    self.period()
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionChain {
    pub channel: Channel,
    pub path_transmission: f64,
    pub detector_efficiency: f64,
    /// Counts per second.
    pub dark_rate: f64,
    pub dead_time: f64,
}

impl DetectionChain {
    pub fn overall_efficiency(&self) -> f64 {
        self.path_transmission * self.detector_efficiency
    }

    fn validate(&self) -> Result<()> {
        fraction("DetectionChain.path_transmission", self.path_transmission)?;
        fraction("DetectionChain.detector_efficiency", self.detector_efficiency)?;
        non_negative("DetectionChain.dark_rate", self.dark_rate)?;
        non_negative("DetectionChain.dead_time", self.dead_time)?;
        Ok(())
    }
}

/// Non-fatal config observations.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigWarning {
    /// Mean excitation number per write pulse is not small.
    MultiExcitationRegime { excitation_probability: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cell: VaporCell,
    pub diffusion: DiffusionReference,
    pub write: Beam,
    pub read: Beam,
    pub pulses: PulseSequence,
    pub stokes_chain: DetectionChain,
    pub antistokes_chain: DetectionChain,
    pub stokes_filter: EtalonFilter,
    pub antistokes_filter: EtalonFilter,
    pub geometry: GeometryConfig,
    /// Mean spin-wave excitations per write pulse in the collected mode.
    pub excitation_probability: f64,
    pub intrinsic_retrieval_efficiency: f64,
    /// Configured decay floor for the memory (collisions, field gradients, ...).
    pub other_lifetime: Option<f64>,
    pub noise: NoiseRates,
    pub hyperfine_ground_splitting: f64,
    pub excited_splitting: f64,
    pub spectral: SpectralCalibration,
}

impl ExperimentConfig {
    /// Checks every invariant and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<ConfigWarning>> {
        self.cell.validate()?;
        positive("DiffusionReference.d0", self.diffusion.d0)?;
        positive("DiffusionReference.p0", self.diffusion.p0)?;
        positive("DiffusionReference.t0", self.diffusion.t0)?;
        self.write.validate()?;
        self.read.validate()?;
        self.pulses.validate()?;
        self.stokes_chain.validate()?;
        self.antistokes_chain.validate()?;
        self.stokes_filter.validate()?;
        self.antistokes_filter.validate()?;
        self.geometry.validate()?;
        non_negative("ExperimentConfig.excitation_probability", self.excitation_probability)?;
        fraction(
            "ExperimentConfig.intrinsic_retrieval_efficiency",
            self.intrinsic_retrieval_efficiency,
        )?;
        if let Some(t) = self.other_lifetime {
            positive("ExperimentConfig.other_lifetime", t)?;
        }
        self.noise.validate()?;
        positive(
            "ExperimentConfig.hyperfine_ground_splitting",
            self.hyperfine_ground_splitting,
        )?;
        positive("ExperimentConfig.excited_splitting", self.excited_splitting)?;
        self.spectral.validate()?;

        let mut warnings = Vec::new();
        if self.excitation_probability >= 1.0 {
            warnings.push(ConfigWarning::MultiExcitationRegime {
                excitation_probability: self.excitation_probability,
            });
        }
        Ok(warnings)
    }

    pub fn chain(&self, channel: Channel) -> &DetectionChain {
        match channel {
            Channel::Stokes => &self.stokes_chain,
            Channel::AntiStokes => &self.antistokes_chain,
        }
    }

    pub fn filter(&self, channel: Channel) -> &EtalonFilter {
        match channel {
            Channel::Stokes => &self.stokes_filter,
            Channel::AntiStokes => &self.antistokes_filter,
        }
    }

    /// Expected dark counts per pulse window on `channel`.
    pub fn dark_expected(&self, channel: Channel) -> f64 {
        self.chain(channel).dark_rate * self.pulses.window(channel)
    }

    /// Expected background detections (CRF + leakage + dark) per pulse on `channel`.
    pub fn background_expected(&self, channel: Channel) -> f64 {
        let (crf, leak) = match channel {
            Channel::Stokes => (self.noise.crf_stokes_window, self.noise.leakage_stokes),
            Channel::AntiStokes => (self.noise.crf_antistokes_window, self.noise.leakage_antistokes),
        };
        crf + leak + self.dark_expected(channel)
    }

    pub fn diffusion_coefficient(&self) -> Result<f64> {
        self.diffusion
            .coefficient(self.cell.buffer_pressure, self.cell.temperature)
    }

    /// Serializes to a config document that [`load_config`] parses back to `self`.
    pub fn to_toml(&self) -> String {
        let doc = RawConfig::from_config(self);
        toml::to_string(&doc).expect("config document serializes")
    }
}

/// Parses and validates a config document.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
    let config = raw.into_config()?;
    config.validate()?;
    Ok(config)
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be >= 0, got {v}")))
    }
}

pub(crate) fn fraction(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must lie in [0, 1], got {v}")))
    }
}

// ---------------------------------------------------------------------------
// Document schema

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    cell: RawCell,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diffusion: Option<RawDiffusion>,
    write: RawBeam,
    read: RawBeam,
    pulses: RawPulses,
    stokes_chain: RawChain,
    antistokes_chain: RawChain,
    stokes_filter: RawFilter,
    antistokes_filter: RawFilter,
    geometry: RawGeometry,
    model: RawModel,
    noise: RawNoise,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spectral: Option<RawSpectral>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    length: String,
    temperature: String,
    buffer_species: String,
    buffer_pressure: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atomic_density_override: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiffusion {
    d0: String,
    p0: String,
    t0: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    power: String,
    waist: String,
    wavelength: String,
    detuning: String,
    reference_line: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulses {
    write_duration: String,
    read_duration: String,
    write_read_delay: String,
    pump_gap_before_write: String,
    repetition_rate: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChain {
    path_transmission: f64,
    detector_efficiency: f64,
    dark_rate: String,
    dead_time: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    finesse: f64,
    fwhm: String,
    peak_transmission: f64,
    center_offset: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    theta_write_stokes: String,
    theta_read_antistokes: String,
    theta_write_read: String,
    propagation_mode: String,
    photon_wavelength: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    excitation_probability: f64,
    intrinsic_retrieval_efficiency: f64,
    hyperfine_ground_splitting: String,
    excited_splitting: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    other_lifetime: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    crf_stokes_window: f64,
    crf_antistokes_window: f64,
    leakage_stokes: f64,
    leakage_antistokes: f64,
    #[serde(default = "default_exponent")]
    crf_pressure_exponent: f64,
}

fn default_exponent() -> f64 {
    1.0
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectral {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stokes: Option<RawChannelCalibration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    antistokes: Option<RawChannelCalibration>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannelCalibration {
    signal_rate: String,
    reference_detuning: String,
    reference_pressure: String,
    /// Fluorescence rates (cps) for the lines F'=1→F=1, F'=2→F=1, F'=1→F=2, F'=2→F=2.
    line_weights: [f64; 4],
    signal_fwhm: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fluorescence_fwhm: Option<String>,
}

fn q(key: &str, text: &str, dim: Dimension) -> Result<f64> {
    parse_quantity(key, text, dim)
}

fn f(v: f64, dim: Dimension) -> String {
    format_quantity(v, dim)
}

impl RawConfig {
    fn into_config(self) -> Result<ExperimentConfig> {
        use Dimension::*;
        let species: BufferSpecies = self.cell.buffer_species.parse()?;
        let cell = VaporCell {
            length: q("cell.length", &self.cell.length, Length)?,
            temperature: q("cell.temperature", &self.cell.temperature, Temperature)?,
            buffer_species: species,
            buffer_pressure: q("cell.buffer_pressure", &self.cell.buffer_pressure, Pressure)?,
            atomic_density_override: self
                .cell
                .atomic_density_override
                .as_deref()
                .map(|s| q("cell.atomic_density_override", s, NumberDensity))
                .transpose()?,
        };
        let diffusion = match self.diffusion {
            Some(d) => DiffusionReference {
                d0: q("diffusion.d0", &d.d0, Diffusivity)?,
                p0: q("diffusion.p0", &d.p0, Pressure)?,
                t0: q("diffusion.t0", &d.t0, Temperature)?,
            },
            None => DiffusionReference::for_species(species),
        };
        let beam = |raw: &RawBeam, role: BeamRole, prefix: &str| -> Result<Beam> {
            Ok(Beam {
                role,
                power: q(&format!("{prefix}.power"), &raw.power, Power)?,
                waist: q(&format!("{prefix}.waist"), &raw.waist, Length)?,
                wavelength: q(&format!("{prefix}.wavelength"), &raw.wavelength, Length)?,
                detuning: q(&format!("{prefix}.detuning"), &raw.detuning, Frequency)?,
                reference_line: ReferenceLine::parse(&raw.reference_line)?,
            })
        };
        let write = beam(&self.write, BeamRole::Write, "write")?;
        let read = beam(&self.read, BeamRole::Read, "read")?;
        let p = &self.pulses;
        let pulses = PulseSequence {
            write_duration: q("pulses.write_duration", &p.write_duration, Time)?,
            read_duration: q("pulses.read_duration", &p.read_duration, Time)?,
            write_read_delay: q("pulses.write_read_delay", &p.write_read_delay, Time)?,
            pump_gap_before_write: q("pulses.pump_gap_before_write", &p.pump_gap_before_write, Time)?,
            repetition_rate: q("pulses.repetition_rate", &p.repetition_rate, Frequency)?,
        };
        let chain = |raw: &RawChain, channel: Channel, prefix: &str| -> Result<DetectionChain> {
            Ok(DetectionChain {
                channel,
                path_transmission: raw.path_transmission,
                detector_efficiency: raw.detector_efficiency,
                dark_rate: q(&format!("{prefix}.dark_rate"), &raw.dark_rate, Rate)?,
                dead_time: q(&format!("{prefix}.dead_time"), &raw.dead_time, Time)?,
            })
        };
        let filter = |raw: &RawFilter, prefix: &str| -> Result<EtalonFilter> {
            Ok(EtalonFilter::new(
                raw.finesse,
                q(&format!("{prefix}.fwhm"), &raw.fwhm, Frequency)?,
                raw.peak_transmission,
                q(&format!("{prefix}.center_offset"), &raw.center_offset, Frequency)?,
            ))
        };
        let g = &self.geometry;
        let geometry = GeometryConfig {
            theta_write_stokes: q("geometry.theta_write_stokes", &g.theta_write_stokes, Angle)?,
            theta_read_antistokes: q("geometry.theta_read_antistokes", &g.theta_read_antistokes, Angle)?,
            theta_write_read: q("geometry.theta_write_read", &g.theta_write_read, Angle)?,
            propagation_mode: g.propagation_mode.parse::<PropagationMode>()?,
            photon_wavelength: q("geometry.photon_wavelength", &g.photon_wavelength, Length)?,
        };
        let n = &self.noise;
        let noise = NoiseRates {
            crf_stokes_window: n.crf_stokes_window,
            crf_antistokes_window: n.crf_antistokes_window,
            leakage_stokes: n.leakage_stokes,
            leakage_antistokes: n.leakage_antistokes,
            crf_pressure_exponent: n.crf_pressure_exponent,
        };
        let calibration = |raw: &RawChannelCalibration, prefix: &str| -> Result<ChannelCalibration> {
            Ok(ChannelCalibration {
                signal_rate: q(&format!("{prefix}.signal_rate"), &raw.signal_rate, Rate)?,
                reference_detuning: q(
                    &format!("{prefix}.reference_detuning"),
                    &raw.reference_detuning,
                    Frequency,
                )?,
                reference_pressure: q(
                    &format!("{prefix}.reference_pressure"),
                    &raw.reference_pressure,
                    Pressure,
                )?,
                line_weights: raw.line_weights,
                signal_fwhm: q(&format!("{prefix}.signal_fwhm"), &raw.signal_fwhm, Frequency)?,
                fluorescence_fwhm: raw
                    .fluorescence_fwhm
                    .as_deref()
                    .map(|s| q(&format!("{prefix}.fluorescence_fwhm"), s, Frequency))
                    .transpose()?,
            })
        };
        let raw_spectral = self.spectral.unwrap_or_default();
        let spectral = SpectralCalibration {
            stokes: raw_spectral
                .stokes
                .as_ref()
                .map(|c| calibration(c, "spectral.stokes"))
                .transpose()?,
            antistokes: raw_spectral
                .antistokes
                .as_ref()
                .map(|c| calibration(c, "spectral.antistokes"))
                .transpose()?,
        };
        let m = &self.model;
        Ok(ExperimentConfig {
            cell,
            diffusion,
            write,
            read,
            pulses,
            stokes_chain: chain(&self.stokes_chain, Channel::Stokes, "stokes_chain")?,
            antistokes_chain: chain(&self.antistokes_chain, Channel::AntiStokes, "antistokes_chain")?,
            stokes_filter: filter(&self.stokes_filter, "stokes_filter")?,
            antistokes_filter: filter(&self.antistokes_filter, "antistokes_filter")?,
            geometry,
            excitation_probability: m.excitation_probability,
            intrinsic_retrieval_efficiency: m.intrinsic_retrieval_efficiency,
            other_lifetime: m
                .other_lifetime
                .as_deref()
                .map(|s| q("model.other_lifetime", s, Time))
                .transpose()?,
            noise,
            hyperfine_ground_splitting: q(
                "model.hyperfine_ground_splitting",
                &m.hyperfine_ground_splitting,
                Frequency,
            )?,
            excited_splitting: q("model.excited_splitting", &m.excited_splitting, Frequency)?,
            spectral,
        })
    }

    fn from_config(c: &ExperimentConfig) -> Self {
        use Dimension::*;
        let beam = |b: &Beam| RawBeam {
            power: f(b.power, Power),
            waist: f(b.waist, Length),
            wavelength: f(b.wavelength, Length),
            detuning: f(b.detuning, Frequency),
            reference_line: b.reference_line.as_str().to_string(),
        };
        let chain = |d: &DetectionChain| RawChain {
            path_transmission: d.path_transmission,
            detector_efficiency: d.detector_efficiency,
            dark_rate: f(d.dark_rate, Rate),
            dead_time: f(d.dead_time, Time),
        };
        let filter = |e: &EtalonFilter| RawFilter {
            finesse: e.finesse,
            fwhm: f(e.fwhm, Frequency),
            peak_transmission: e.peak_transmission,
            center_offset: f(e.center_offset, Frequency),
        };
        let calibration = |k: &ChannelCalibration| RawChannelCalibration {
            signal_rate: f(k.signal_rate, Rate),
            reference_detuning: f(k.reference_detuning, Frequency),
            reference_pressure: f(k.reference_pressure, Pressure),
            line_weights: k.line_weights,
            signal_fwhm: f(k.signal_fwhm, Frequency),
            fluorescence_fwhm: k.fluorescence_fwhm.map(|v| f(v, Frequency)),
        };
        let spectral = if c.spectral.stokes.is_none() && c.spectral.antistokes.is_none() {
            None
        } else {
            Some(RawSpectral {
                stokes: c.spectral.stokes.as_ref().map(calibration),
                antistokes: c.spectral.antistokes.as_ref().map(calibration),
            })
        };
        RawConfig {
            cell: RawCell {
                length: f(c.cell.length, Length),
                temperature: f(c.cell.temperature, Temperature),
                buffer_species: c.cell.buffer_species.as_str().to_string(),
                buffer_pressure: f(c.cell.buffer_pressure, Pressure),
                atomic_density_override: c.cell.atomic_density_override.map(|n| f(n, NumberDensity)),
            },
            diffusion: Some(RawDiffusion {
                d0: f(c.diffusion.d0, Diffusivity),
                p0: f(c.diffusion.p0, Pressure),
                t0: f(c.diffusion.t0, Temperature),
            }),
            write: beam(&c.write),
            read: beam(&c.read),
            pulses: RawPulses {
                write_duration: f(c.pulses.write_duration, Time),
                read_duration: f(c.pulses.read_duration, Time),
                write_read_delay: f(c.pulses.write_read_delay, Time),
                pump_gap_before_write: f(c.pulses.pump_gap_before_write, Time),
                repetition_rate: f(c.pulses.repetition_rate, Frequency),
            },
            stokes_chain: chain(&c.stokes_chain),
            antistokes_chain: chain(&c.antistokes_chain),
            stokes_filter: filter(&c.stokes_filter),
            antistokes_filter: filter(&c.antistokes_filter),
            geometry: RawGeometry {
                theta_write_stokes: f(c.geometry.theta_write_stokes, Angle),
                theta_read_antistokes: f(c.geometry.theta_read_antistokes, Angle),
                theta_write_read: f(c.geometry.theta_write_read, Angle),
                propagation_mode: c.geometry.propagation_mode.as_str().to_string(),
                photon_wavelength: f(c.geometry.photon_wavelength, Length),
            },
            model: RawModel {
                excitation_probability: c.excitation_probability,
                intrinsic_retrieval_efficiency: c.intrinsic_retrieval_efficiency,
                hyperfine_ground_splitting: f(c.hyperfine_ground_splitting, Frequency),
                excited_splitting: f(c.excited_splitting, Frequency),
                other_lifetime: c.other_lifetime.map(|t| f(t, Time)),
            },
            noise: RawNoise {
                crf_stokes_window: c.noise.crf_stokes_window,
                crf_antistokes_window: c.noise.crf_antistokes_window,
                leakage_stokes: c.noise.leakage_stokes,
                leakage_antistokes: c.noise.leakage_antistokes,
                crf_pressure_exponent: c.noise.crf_pressure_exponent,
            },
            spectral,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::paper_default;

    #[test]
    fn paper_default_values() {
        let c = paper_default();
        assert_eq!(c.cell.length, 0.075);
        assert!((c.write.power - 0.6e-3).abs() < 1e-18);
        assert_eq!(c.pulses.repetition_rate, 20e3);
        assert!(c.validate().unwrap().is_empty());
    }

    #[test]
    fn intensity_examples() {
        assert_eq!(format!("{:.2e}", beam_intensity(0.6e-3, 1.3e-3).unwrap()), "1.13e2");
        assert_eq!(format!("{:.1e}", beam_intensity(1.2e-3, 1.3e-3).unwrap()), "2.3e2");
        assert_eq!(beam_intensity(0.0, 2e-3).unwrap(), 0.0);
        assert!(beam_intensity(1e-3, 0.0).is_err());
        assert!(beam_intensity(1e-3, -1.0).is_err());
    }

    #[test]
    fn density_domain_window() {
        assert!(rb_number_density(250.0).is_err());
        assert!(rb_number_density(450.0).is_err());
        assert!(rb_number_density(300.0).is_ok());
    }

    #[test]
    fn diffusion_scaling() {
        let t = 310.0;
        let d1 = diffusion_coefficient(BufferSpecies::Ne, TORR, t).unwrap();
        let d10 = diffusion_coefficient(BufferSpecies::Ne, 10.0 * TORR, t).unwrap();
        assert!((d10 / d1 - 0.1).abs() < 1e-15);
        assert_eq!(diffusion_coefficient(BufferSpecies::Ne, ATM, 300.0).unwrap(), 2e-5);
        assert!(diffusion_coefficient(BufferSpecies::Ne, 0.0, t).is_err());
        assert!(matches!("Ar".parse::<BufferSpecies>(), Err(Error::UnknownSpecies(_))));
    }

    #[test]
    fn diffusion_hand_value() {
        // 2e-5 * (760 / 10) * (310 / 300)^1.5, evaluated by hand:
        // 760/10 = 76; (310/300)^1.5 = 1.033333^1.5 = 1.050_414_38
        let expected = 2e-5 * 76.0 * 1.050_414_38;
        let d = diffusion_coefficient(BufferSpecies::Ne, 10.0 * TORR, 310.0).unwrap();
        assert!((d - expected).abs() / expected < 1e-7, "{d} vs {expected}");
    }

    #[test]
    fn zero_waist_names_beam_waist() {
        let text = paper_default()
            .to_toml()
            .replacen("waist = \"1.3e-3 m\"", "waist = \"0 m\"", 1);
        match load_config(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "Beam.waist"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn overlapping_read_is_rejected() {
        let mut c = paper_default();
        c.pulses.write_read_delay = 0.5e-6;
        c.pulses.write_duration = 1e-6;
        match load_config(&c.to_toml()) {
            Err(Error::Validation { field, reason }) => {
                assert_eq!(field, "PulseSequence.write_read_delay");
                assert!(reason.contains("overlaps"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_and_unit_errors() {
        assert!(matches!(load_config("not = [valid"), Err(Error::Parse(_))));
        let text = paper_default().to_toml().replacen("\"1.3e-3 m\"", "\"1.3\"", 1);
        assert!(matches!(load_config(&text), Err(Error::Unit { .. })));
    }

    #[test]
    fn multi_excitation_warning() {
        let mut c = paper_default();
        c.excitation_probability = 1.5;
        assert_eq!(
            c.validate().unwrap(),
            vec![ConfigWarning::MultiExcitationRegime {
                excitation_probability: 1.5
            }]
        );
    }
}
