//! Channel spectra seen through scanning Fabry–Pérot etalons.
//!
//! Frequencies are measured relative to the channel's signal (Raman) line.
//! A channel spectrum holds one narrow signal line plus collisionally
//! redistributed fluorescence on the four D1 hyperfine lines. Etalon scans
//! convolve each component with the periodic Airy transmission, so lines
//! further than half a free spectral range away reappear as aliases.

use std::f64::consts::{LN_2, PI};

use crate::config::{ExperimentConfig, ReferenceLine, BOLTZMANN, RB_D1_WAVELENGTH};
use crate::error::{Error, Result};
use crate::geometry::SPEED_OF_LIGHT;
use crate::quad;
use crate::{Bounded, Channel};

/// ⁸⁷Rb atomic mass in kg.
const RB87_MASS: f64 = 86.909_180_5 * 1.660_539_066_6e-27;

#[derive(Debug, Clone, PartialEq)]
pub struct EtalonFilter {
    pub finesse: f64,
    pub fwhm: f64,
    /// Always `finesse · fwhm`.
    pub fsr: f64,
    pub peak_transmission: f64,
    /// Tuning of the transmission peak relative to the channel's signal frequency.
    pub center_offset: f64,
}

impl EtalonFilter {
    pub fn new(finesse: f64, fwhm: f64, peak_transmission: f64, center_offset: f64) -> Self {
        EtalonFilter {
            finesse,
            fwhm,
            fsr: finesse * fwhm,
            peak_transmission,
            center_offset,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.finesse > 1.0) {
            return Err(Error::validation(
                "EtalonFilter.finesse",
                format!("must be > 1, got {}", self.finesse),
            ));
        }
        if !(self.fwhm > 0.0) {
            return Err(Error::validation(
                "EtalonFilter.fwhm",
                format!("must be > 0, got {}", self.fwhm),
            ));
        }
        let fsr = self.finesse * self.fwhm;
        if !((self.fsr - fsr).abs() <= 1e-9 * fsr) {
            return Err(Error::validation("EtalonFilter.fsr", "must equal finesse × fwhm"));
        }
        if !(self.peak_transmission > 0.0 && self.peak_transmission <= 1.0) {
            return Err(Error::validation(
                "EtalonFilter.peak_transmission",
                format!("must lie in (0, 1], got {}", self.peak_transmission),
            ));
        }
        if !self.center_offset.is_finite() {
            return Err(Error::validation("EtalonFilter.center_offset", "must be finite"));
        }
        Ok(())
    }

    /// Coefficient of finesse `(2F/π)²`.
    fn coefficient(&self) -> f64 {
        let c = 2.0 * self.finesse / PI;
        c * c
    }
}

/// Airy transmission at `nu` from a transmission peak.
pub fn etalon_transmission(nu: f64, filter: &EtalonFilter) -> f64 {
    let s = (PI * nu / filter.fsr).sin();
    filter.peak_transmission / (1.0 + filter.coefficient() * s * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    Signal,
    Fluorescence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineShape {
    Lorentzian,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComponent {
    pub name: String,
    pub kind: ComponentKind,
    pub center: f64,
    pub fwhm: f64,
    pub shape: LineShape,
    /// Integrated photon rate, counts per second.
    pub weight: f64,
}

impl SpectralComponent {
    /// Line-shape density periodized over `period`, at `nu`.
    fn wrapped_density(&self, nu: f64, period: f64) -> f64 {
        let x = nu - self.center;
        match self.shape {
            LineShape::Lorentzian => {
                // Σ_n γ/π / ((x + n·P)² + γ²) in closed form, written to avoid
                // cancellation for lines much narrower than the period.
                let a = 2.0 * PI * (0.5 * self.fwhm) / period;
                let half = (PI * x / period).sin();
                let sh = (0.5 * a).sinh();
                a.sinh() / (2.0 * (sh * sh + half * half)) / period
            }
            LineShape::Gaussian => {
                let sigma = self.fwhm / (2.0 * (2.0 * LN_2).sqrt());
                let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
                let n0 = (x / period).round();
                let reach = (12.0 * sigma / period).ceil() + 1.0;
                let mut sum = 0.0;
                let mut n = -reach;
                while n <= reach {
                    let d = x - (n0 + n) * period;
                    sum += (-0.5 * (d / sigma).powi(2)).exp();
                    n += 1.0;
                }
                norm * sum
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub components: Vec<SpectralComponent>,
    pub filter: EtalonFilter,
}

impl SpectralModel {
    pub fn new(components: Vec<SpectralComponent>, filter: EtalonFilter) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "a spectral model needs at least one component".into(),
            ));
        }
        for c in &components {
            if !(c.fwhm > 0.0) || !(c.weight >= 0.0) {
                return Err(Error::validation(
                    "SpectralComponent",
                    format!("`{}` needs fwhm > 0 and weight >= 0", c.name),
                ));
            }
        }
        filter.validate()?;
        Ok(SpectralModel { components, filter })
    }

    pub fn scaled(&self, factor: f64) -> SpectralModel {
        let mut m = self.clone();
        for c in &mut m.components {
            c.weight *= factor;
        }
        m
    }
}

/// Spectral calibration for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelCalibration {
    /// Signal rate (cps) at the reference detuning.
    pub signal_rate: f64,
    /// Signed drive detuning at which the rates are quoted.
    pub reference_detuning: f64,
    pub reference_pressure: f64,
    /// Fluorescence rates (cps) on F'=1→F=1, F'=2→F=1, F'=1→F=2, F'=2→F=2
    /// at the reference detuning and pressure.
    pub line_weights: [f64; 4],
    pub signal_fwhm: f64,
    /// Defaults to the D1 Doppler width at the cell temperature.
    pub fluorescence_fwhm: Option<f64>,
}

impl ChannelCalibration {
    fn validate(&self, prefix: &str) -> Result<()> {
        let field = |name: &str| format!("{prefix}.{name}");
        if !(self.signal_rate >= 0.0) {
            return Err(Error::validation(field("signal_rate"), "must be >= 0"));
        }
        if !(self.reference_detuning != 0.0 && self.reference_detuning.is_finite()) {
            return Err(Error::validation(field("reference_detuning"), "must be nonzero"));
        }
        if !(self.reference_pressure > 0.0) {
            return Err(Error::validation(field("reference_pressure"), "must be > 0"));
        }
        if self.line_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::validation(field("line_weights"), "must be >= 0"));
        }
        if !(self.signal_fwhm > 0.0) {
            return Err(Error::validation(field("signal_fwhm"), "must be > 0"));
        }
        if let Some(w) = self.fluorescence_fwhm {
            if !(w > 0.0) {
                return Err(Error::validation(field("fluorescence_fwhm"), "must be > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectralCalibration {
    pub stokes: Option<ChannelCalibration>,
    pub antistokes: Option<ChannelCalibration>,
}

impl SpectralCalibration {
    pub fn channel(&self, channel: Channel) -> Option<&ChannelCalibration> {
        match channel {
            Channel::Stokes => self.stokes.as_ref(),
            Channel::AntiStokes => self.antistokes.as_ref(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if let Some(c) = &self.stokes {
            c.validate("spectral.stokes")?;
        }
        if let Some(c) = &self.antistokes {
            c.validate("spectral.antistokes")?;
        }
        Ok(())
    }
}

/// D1 Doppler FWHM of ⁸⁷Rb at `temperature`.
pub fn doppler_fwhm(temperature: f64) -> f64 {
    let nu = SPEED_OF_LIGHT / RB_D1_WAVELENGTH;
    nu / SPEED_OF_LIGHT * (8.0 * BOLTZMANN * temperature * LN_2 / RB87_MASS).sqrt()
}

/// Component names of the fluorescence lines F'=1→F=1, F'=2→F=1, F'=1→F=2, F'=2→F=2.
pub const LINE_NAMES: [&str; 4] = ["crf_Fp1_F1", "crf_Fp2_F1", "crf_Fp1_F2", "crf_Fp2_F2"];

/// D1 line frequencies relative to F=1 → F'=1, in the order of `LINE_NAMES`.
fn line_frequencies(config: &ExperimentConfig) -> [f64; 4] {
    let g = config.hyperfine_ground_splitting;
    let e = config.excited_splitting;
    [0.0, e, -g, -g + e]
}

/// Drive frequency (relative to F=1 → F'=1) and the channel's signal frequency.
fn drive_and_signal(config: &ExperimentConfig, channel: Channel, detuning: f64) -> (f64, f64) {
    let g = config.hyperfine_ground_splitting;
    let e = config.excited_splitting;
    match channel {
        // write acts on F=1; Stokes lands on F=2
        Channel::Stokes => {
            let line = match config.write.reference_line {
                ReferenceLine::F1Excited => 0.0,
                ReferenceLine::F2Excited => e,
            };
            let drive = line + detuning;
            (drive, drive - g)
        }
        // read acts on F=2; anti-Stokes lands on F=1
        Channel::AntiStokes => {
            let line = match config.read.reference_line {
                ReferenceLine::F1Excited => -g,
                ReferenceLine::F2Excited => -g + e,
            };
            let drive = line + detuning;
            (drive, drive + g)
        }
    }
}

/// Log of the Doppler-profile excitation of the drive at `drive` summed over
/// both excited levels it couples to.
fn log_excitation(config: &ExperimentConfig, channel: Channel, drive: f64, doppler: f64) -> f64 {
    let lines = line_frequencies(config);
    let targets = match channel {
        Channel::Stokes => [lines[0], lines[1]],
        Channel::AntiStokes => [lines[2], lines[3]],
    };
    let sigma = doppler / (2.0 * (2.0 * LN_2).sqrt());
    let logs = targets.map(|t| -0.5 * ((drive - t) / sigma).powi(2));
    let max = logs[0].max(logs[1]);
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

fn channel_detuning(config: &ExperimentConfig, channel: Channel) -> f64 {
    match channel {
        Channel::Stokes => config.write.detuning,
        Channel::AntiStokes => config.read.detuning,
    }
}

/// Signal line plus fluorescence components for `channel` at the config's
/// drive detuning and buffer pressure.
///
/// The signal rate scales as `1/δ²` relative to the reference detuning;
/// fluorescence rates scale as `(P/P_ref)^exponent` and with the Doppler
/// wing of the drive's excitation profile.
pub fn build_channel_spectrum(
    channel: Channel,
    config: &ExperimentConfig,
    calibration: &SpectralCalibration,
) -> Result<SpectralModel> {
    build_at_detuning(channel, config, calibration, channel_detuning(config, channel))
}

fn build_at_detuning(
    channel: Channel,
    config: &ExperimentConfig,
    calibration: &SpectralCalibration,
    detuning: f64,
) -> Result<SpectralModel> {
    let cal = calibration.channel(channel).ok_or(Error::CalibrationMissing(channel))?;
    if detuning == 0.0 {
        return Err(Error::domain("drive detuning", detuning));
    }
    let doppler = cal
        .fluorescence_fwhm
        .unwrap_or_else(|| doppler_fwhm(config.cell.temperature));
    let (drive, signal) = drive_and_signal(config, channel, detuning);
    let (ref_drive, _) = drive_and_signal(config, channel, cal.reference_detuning);

    let signal_weight = cal.signal_rate * (cal.reference_detuning / detuning).powi(2);
    let pressure_factor =
        (config.cell.buffer_pressure / cal.reference_pressure).powf(config.noise.crf_pressure_exponent);
    let excitation_factor =
        (log_excitation(config, channel, drive, doppler) - log_excitation(config, channel, ref_drive, doppler)).exp();

    let mut components = vec![SpectralComponent {
        name: "signal".to_string(),
        kind: ComponentKind::Signal,
        center: 0.0,
        fwhm: cal.signal_fwhm,
        shape: LineShape::Lorentzian,
        weight: signal_weight,
    }];
    for ((name, line), w) in LINE_NAMES.iter().zip(line_frequencies(config)).zip(cal.line_weights) {
        if w == 0.0 {
            continue;
        }
        components.push(SpectralComponent {
            name: (*name).to_string(),
            kind: ComponentKind::Fluorescence,
            center: line - signal,
            fwhm: doppler,
            shape: LineShape::Gaussian,
            weight: w * pressure_factor * excitation_factor,
        });
    }
    SpectralModel::new(components, config.filter(channel).clone())
}

/// Fraction of a component's light transmitted with the etalon peak at `center`.
pub fn component_transmission(component: &SpectralComponent, filter: &EtalonFilter, center: f64) -> Result<f64> {
    let fsr = filter.fsr;
    let lo = center - 0.5 * fsr;
    let hi = center + 0.5 * fsr;
    let image = component.center - ((component.center - center) / fsr).round() * fsr;
    let mut breaks = vec![center - filter.fwhm, center, center + filter.fwhm];
    for k in [1.0, 10.0, 100.0] {
        breaks.push(center - k * filter.fwhm);
        breaks.push(center + k * filter.fwhm);
    }
    breaks.push(image);
    for k in [1.0, 4.0, 16.0, 64.0] {
        breaks.push(image - k * component.fwhm);
        breaks.push(image + k * component.fwhm);
    }
    quad::integrate(
        |nu| etalon_transmission(nu - center, filter) * component.wrapped_density(nu, fsr),
        lo,
        hi,
        &breaks,
        1e-8,
        1e-15 * filter.peak_transmission,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub center: f64,
    pub expected_counts: f64,
    /// Same order as the model's components.
    pub per_component: Vec<f64>,
}

/// Expected counts with the etalon tuned to each of `centers`, integrating
/// for `integration` seconds per point.
pub fn scan(model: &SpectralModel, centers: &[f64], integration: f64) -> Result<Vec<ScanPoint>> {
    if centers.is_empty() {
        return Err(Error::InvalidArgument("scan needs at least one etalon center".into()));
    }
    if !(integration > 0.0) {
        return Err(Error::domain("integration time", integration));
    }
    centers
        .iter()
        .map(|&c| {
            let per_component = model
                .components
                .iter()
                .map(|comp| Ok(integration * comp.weight * component_transmission(comp, &model.filter, c)?))
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScanPoint {
                center: c,
                expected_counts: per_component.iter().sum(),
                per_component,
            })
        })
        .collect()
}

/// Signal-to-fluorescence ratio through the signal-tuned Stokes etalon at
/// write detuning `write_detuning`; unbounded without fluorescence.
pub fn snr(write_detuning: f64, config: &ExperimentConfig, calibration: &SpectralCalibration) -> Result<Bounded> {
    channel_snr(Channel::Stokes, write_detuning, config, calibration)
}

/// [`snr`] for either channel, at the drive detuning of that channel
/// (write for Stokes, read for anti-Stokes).
pub fn channel_snr(
    channel: Channel,
    detuning: f64,
    config: &ExperimentConfig,
    calibration: &SpectralCalibration,
) -> Result<Bounded> {
    let magnitude = detuning.abs();
    if !(magnitude > 0.3e9 && magnitude < 3e9) {
        return Err(Error::domain("drive detuning (valid 0.3-3 GHz)", detuning));
    }
    let model = build_at_detuning(channel, config, calibration, detuning)?;
    let center = model.filter.center_offset;
    let mut signal = 0.0;
    let mut fluorescence = 0.0;
    for comp in &model.components {
        let counts = comp.weight * component_transmission(comp, &model.filter, center)?;
        match comp.kind {
            ComponentKind::Signal => signal += counts,
            ComponentKind::Fluorescence => fluorescence += counts,
        }
    }
    if fluorescence == 0.0 {
        return Ok(Bounded::Unbounded);
    }
    Ok(Bounded::Finite(signal / fluorescence))
}

/// Rescales the Stokes fluorescence weights so that the SNR at the
/// calibration's reference detuning equals `target`.
pub fn calibrate_snr(
    config: &ExperimentConfig,
    calibration: &SpectralCalibration,
    target: f64,
) -> Result<SpectralCalibration> {
    calibrate_channel_snr(Channel::Stokes, config, calibration, target)
}

pub fn calibrate_channel_snr(
    channel: Channel,
    config: &ExperimentConfig,
    calibration: &SpectralCalibration,
    target: f64,
) -> Result<SpectralCalibration> {
    if !(target > 0.0) {
        return Err(Error::domain("target SNR", target));
    }
    let cal = calibration.channel(channel).ok_or(Error::CalibrationMissing(channel))?;
    // evaluate at the reference pressure so the weights mean what they say
    let mut at_reference = config.clone();
    at_reference.cell.buffer_pressure = cal.reference_pressure;
    let current = match channel_snr(channel, cal.reference_detuning, &at_reference, calibration)? {
        Bounded::Finite(v) => v,
        Bounded::Unbounded => {
            return Err(Error::InvalidArgument(
                "cannot calibrate SNR without fluorescence weights".into(),
            ))
        }
    };
    let mut out = calibration.clone();
    let slot = match channel {
        Channel::Stokes => out.stokes.as_mut(),
        Channel::AntiStokes => out.antistokes.as_mut(),
    };
    let k = current / target;
    for w in &mut slot.expect("checked above").line_weights {
        *w *= k;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrate::paper_default;
    use proptest::prelude::*;

    fn stokes_filter() -> EtalonFilter {
        EtalonFilter::new(100.0, 100e6, 1.0, 0.0)
    }

    #[test]
    fn transmission_examples() {
        let f = stokes_filter();
        assert_eq!(f.fsr, 10e9);
        assert_eq!(etalon_transmission(0.0, &f), 1.0);
        assert!((etalon_transmission(f.fsr, &f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn half_maximum_at_half_fwhm() {
        // Oracle: bisection for T(ν) = T_max/2 on (0, fsr/2).
        let f = stokes_filter();
        let (mut lo, mut hi) = (0.0, 0.5 * f.fsr);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if etalon_transmission(mid, &f) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 0.5 * f.fwhm).abs() / (0.5 * f.fwhm) < 1e-3, "{lo}");
        let t = etalon_transmission(0.5 * f.fwhm, &f);
        assert!((t - 0.5).abs() < 0.005, "{t}");
    }

    /// Lorentzian ⊗ Airy in closed form: both are Poisson kernels on the FSR
    /// circle, so their convolution is a Poisson kernel with radius R·ρ.
    fn lorentz_airy_closed_form(filter: &EtalonFilter, fwhm: f64, offset: f64) -> f64 {
        let f = 2.0 * filter.finesse / PI;
        let cf = f * f;
        // 4R/(1−R)² = cf  ⇒  R = ((2 + cf) − 2√(1 + cf)) / cf
        let r = ((2.0 + cf) - 2.0 * (1.0 + cf).sqrt()) / cf;
        let rho = (-2.0 * PI * 0.5 * fwhm / filter.fsr).exp();
        let q = r * rho;
        let phi = 2.0 * PI * offset / filter.fsr;
        let poisson = (1.0 - q * q) / (1.0 - 2.0 * q * phi.cos() + q * q);
        filter.peak_transmission * (1.0 - r) / (1.0 + r) * poisson
    }

    #[test]
    fn lorentzian_transmission_matches_closed_form() {
        let f = stokes_filter();
        for fwhm in [1e6, 30e6, 500e6] {
            let comp = SpectralComponent {
                name: "l".into(),
                kind: ComponentKind::Signal,
                center: 0.0,
                fwhm,
                shape: LineShape::Lorentzian,
                weight: 1.0,
            };
            for c in [0.0, 20e6, 60e6, 1.3e9, 4.99e9, -7.2e9, 10e9] {
                let numeric = component_transmission(&comp, &f, c).unwrap();
                let exact = lorentz_airy_closed_form(&f, fwhm, c);
                assert!(
                    (numeric - exact).abs() <= 1e-6 * exact,
                    "fwhm {fwhm} c {c}: {numeric} vs {exact}"
                );
            }
        }
    }

    fn single_line(shape: LineShape, center: f64, fwhm: f64) -> SpectralModel {
        SpectralModel::new(
            vec![SpectralComponent {
                name: "x".into(),
                kind: ComponentKind::Signal,
                center,
                fwhm,
                shape,
                weight: 1000.0,
            }],
            stokes_filter(),
        )
        .unwrap()
    }

    #[test]
    fn single_line_scan_peaks_at_center() {
        let m = single_line(LineShape::Lorentzian, 0.0, 1e6);
        let centers: Vec<f64> = (-50..=50).map(|i| i as f64 * 4e6).collect();
        let pts = scan(&m, &centers, 1.0).unwrap();
        let (imax, _) = pts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.expected_counts.total_cmp(&b.1.expected_counts))
            .unwrap();
        assert_eq!(centers[imax], 0.0);
        // half width of the scanned peak ≈ half of (line + filter) FWHM = 50.5 MHz
        let half = pts[imax].expected_counts / 2.0;
        let above: Vec<f64> = pts
            .iter()
            .filter(|p| p.expected_counts >= half)
            .map(|p| p.center)
            .collect();
        let width = above.last().unwrap() - above.first().unwrap();
        assert!((width - 101e6).abs() <= 8e6, "{width}");
    }

    #[test]
    fn scan_periodic_in_fsr() {
        let m = single_line(LineShape::Gaussian, 1.3e9, 0.5e9);
        let centers: Vec<f64> = (-10..10).map(|i| i as f64 * 0.37e9).collect();
        let shifted: Vec<f64> = centers.iter().map(|c| c + 10e9).collect();
        let a = scan(&m, &centers, 1.0).unwrap();
        let b = scan(&m, &shifted, 1.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.expected_counts - y.expected_counts).abs() <= 1e-6 * x.expected_counts);
        }
    }

    #[test]
    fn scan_rejects_bad_input() {
        let m = single_line(LineShape::Gaussian, 0.0, 0.5e9);
        assert!(scan(&m, &[], 1.0).is_err());
        assert!(scan(&m, &[0.0], 0.0).is_err());
        assert!(SpectralModel::new(vec![], stokes_filter()).is_err());
    }

    #[test]
    fn doppler_width_at_cell_temperature() {
        let w = doppler_fwhm(310.15);
        assert!((w - 0.51e9).abs() < 0.02e9, "{w}");
    }

    #[test]
    fn zero_fluorescence_leaves_signal_only() {
        let mut c = paper_default();
        let mut cal = c.spectral.clone();
        cal.stokes.as_mut().unwrap().line_weights = [0.0; 4];
        c.spectral = cal.clone();
        let m = build_channel_spectrum(Channel::Stokes, &c, &cal).unwrap();
        assert_eq!(m.components.len(), 1);
        assert_eq!(m.components[0].kind, ComponentKind::Signal);
        assert!(snr(-1.3e9, &c, &cal).unwrap().is_unbounded());
    }

    #[test]
    fn missing_calibration() {
        let c = paper_default();
        let empty = SpectralCalibration::default();
        assert_eq!(
            build_channel_spectrum(Channel::AntiStokes, &c, &empty),
            Err(Error::CalibrationMissing(Channel::AntiStokes))
        );
    }

    #[test]
    fn nearest_fluorescence_sits_at_drive_detuning() {
        let c = paper_default();
        let m = build_channel_spectrum(Channel::Stokes, &c, &c.spectral).unwrap();
        let nearest = m
            .components
            .iter()
            .filter(|x| x.kind == ComponentKind::Fluorescence)
            .map(|x| x.center.abs())
            .fold(f64::INFINITY, f64::min);
        assert!((nearest - 1.3e9).abs() < 1.0, "{nearest}");
        let m = build_channel_spectrum(Channel::AntiStokes, &c, &c.spectral).unwrap();
        let nearest = m
            .components
            .iter()
            .filter(|x| x.kind == ComponentKind::Fluorescence)
            .map(|x| x.center.abs())
            .fold(f64::INFINITY, f64::min);
        assert!((nearest - 1.08e9).abs() < 1.0, "{nearest}");
    }

    #[test]
    fn pressure_ratio_of_weights() {
        let mut c = paper_default();
        let hi = build_channel_spectrum(Channel::Stokes, &c, &c.spectral).unwrap();
        c.cell.buffer_pressure /= 10.0;
        let lo = build_channel_spectrum(Channel::Stokes, &c, &c.spectral).unwrap();
        assert_eq!(hi.components[0].weight, lo.components[0].weight);
        for (a, b) in hi.components[1..].iter().zip(&lo.components[1..]) {
            assert!((a.weight / b.weight - 10.0).abs() < 1e-12);
        }
    }

    #[test]
    fn snr_calibration_point_and_ordering() {
        let c = paper_default();
        let at = |d: f64| snr(d, &c, &c.spectral).unwrap().finite().unwrap();
        assert!((at(-1.3e9) - 10.0).abs() < 1e-9);
        assert!(at(-0.8e9) < at(-1.0e9) && at(-1.0e9) < at(-1.3e9));
        assert!(snr(-0.2e9, &c, &c.spectral).is_err());
        assert!(snr(-3.5e9, &c, &c.spectral).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn transmission_bounded_and_periodic(nu in -5e10f64..5e10, finesse in 1.5f64..500.0, fwhm in 1e6f64..1e9) {
            let f = EtalonFilter::new(finesse, fwhm, 0.8, 0.0);
            let t = etalon_transmission(nu, &f);
            prop_assert!(t > 0.0 && t <= 0.8);
            // exact period: compare at phase-equivalent points built without rounding drift
            let k = 3.0;
            let t2 = etalon_transmission(nu + k * f.fsr, &f);
            prop_assert!((t - t2).abs() <= 1e-9 * t.max(1e-300) + 1e-12 * t);
        }

        #[test]
        fn scan_is_linear_in_weights(center in -5e9f64..5e9, factor in 0.1f64..10.0) {
            let m = single_line(LineShape::Gaussian, 0.7e9, 0.5e9);
            let a = scan(&m, &[center], 1.0).unwrap()[0].expected_counts;
            let b = scan(&m.scaled(factor), &[center], 1.0).unwrap()[0].expected_counts;
            prop_assert!((b - factor * a).abs() <= 1e-9 * b.abs().max(1e-300));
        }

        #[test]
        fn gaussian_total_over_fsr_conserved(line_center in -5e9f64..5e9) {
            let m = single_line(LineShape::Gaussian, line_center, 0.5e9);
            let step = m.filter.fsr / 400.0;
            let centers: Vec<f64> = (0..400).map(|i| i as f64 * step).collect();
            let total: f64 = scan(&m, &centers, 1.0).unwrap().iter().map(|p| p.expected_counts).sum::<f64>() * step;
            let reference = single_line(LineShape::Gaussian, 0.0, 0.5e9);
            let ref_total: f64 = scan(&reference, &centers, 1.0).unwrap().iter().map(|p| p.expected_counts).sum::<f64>() * step;
            prop_assert!((total - ref_total).abs() <= 0.01 * ref_total);
        }

        #[test]
        fn snr_increasing_for_random_calibrations(w in proptest::array::uniform4(0.01f64..10.0),
                                                  signal in 10.0f64..1e5,
                                                  d1 in 0.5e9f64..1.5e9, d2 in 0.5e9f64..1.5e9) {
            prop_assume!((d1 - d2).abs() > 1e6);
            let mut c = paper_default();
            let cal = c.spectral.stokes.as_mut().unwrap();
            cal.line_weights = w;
            cal.signal_rate = signal;
            let spectral = c.spectral.clone();
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            let s_lo = snr(-lo, &c, &spectral).unwrap().finite().unwrap();
            let s_hi = snr(-hi, &c, &spectral).unwrap().finite().unwrap();
            prop_assert!(s_hi > s_lo, "{} -> {}, {} -> {}", lo, s_lo, hi, s_hi);
        }
    }
}
