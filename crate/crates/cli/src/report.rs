use std::fmt::Write as _;

use qmem_core::config::{beam_intensity, rb_vapor_pressure};
use qmem_core::decoherence::{retrieval_efficiency, DecoherenceBudget};
use qmem_core::geometry::{
    beam_wave_vectors, collinear_wave_vectors, spatial_mode_count, spin_wave_wavelength, PropagationMode,
};
use qmem_core::spectral::{doppler_fwhm, snr};
use qmem_core::stats::{analytic_g2, ModelParams};
use qmem_core::{Bounded, Channel, ExperimentConfig};

use crate::{header, CliError};

/// phase-match CSV plus a human-readable verdict on stderr.
pub(crate) fn phase_match(config: &ExperimentConfig, geometry: &str, seed: u64) -> Result<String, CliError> {
    let co = PropagationMode::CoPropagating;
    let counter = PropagationMode::CounterPropagating;
    // (label, mode, use the config's own collection angles)
    let cases = match geometry {
        "both" => vec![(co.as_str(), co, false), (counter.as_str(), counter, false)],
        "config" => vec![("config", config.geometry.propagation_mode, true)],
        name => {
            let mode = name.parse::<PropagationMode>()?;
            vec![(mode.as_str(), mode, false)]
        }
    };
    let mut out = header("phase-match", config, seed);
    out.push_str("geometry,delta_k_rad_per_m,coherence_length_m,cell_length_m,verdict\n");
    for (label, mode, own_angles) in cases {
        let vectors = if own_angles {
            beam_wave_vectors(config, mode)?
        } else {
            collinear_wave_vectors(config, mode)?
        };
        let mismatch = vectors.mismatch();
        let verdict = if mismatch.holds_over(config.cell.length) {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            out,
            "{label},{:e},{:e},{},{verdict}",
            mismatch.magnitude,
            mismatch.coherence_length.to_f64(),
            config.cell.length
        );
        eprintln!(
            "{label}: |dk| = {:.4e} rad/m, coherence length = {:.4e} m, cell = {} m -> {verdict}",
            mismatch.magnitude,
            mismatch.coherence_length.to_f64(),
            config.cell.length
        );
    }
    Ok(out)
}

struct Rows(String);

impl Rows {
    fn section(&mut self, module: &str) {
        let _ = writeln!(self.0, "# {module}");
    }

    fn row(&mut self, name: &str, value: f64) {
        let _ = writeln!(self.0, "{name},{value}");
    }
}

/// params CSV: derived quantities grouped by the module that computes them.
pub(crate) fn params(c: &ExperimentConfig, seed: u64) -> Result<String, CliError> {
    let mut rows = Rows(header("params", c, seed));
    rows.0.push_str("name,value\n");

    rows.section("core-config");
    rows.row(
        "write_intensity_w_per_m2",
        beam_intensity(c.write.power, c.write.waist)?,
    );
    rows.row("read_intensity_w_per_m2", beam_intensity(c.read.power, c.read.waist)?);
    rows.row("rb_vapor_pressure_pa", rb_vapor_pressure(c.cell.temperature)?);
    rows.row("rb_number_density_per_m3", c.cell.number_density()?);
    let d = c.diffusion_coefficient()?;
    rows.row("diffusion_coefficient_m2_per_s", d);
    rows.row("stokes_overall_efficiency", c.stokes_chain.overall_efficiency());
    rows.row("antistokes_overall_efficiency", c.antistokes_chain.overall_efficiency());
    rows.row("dark_stokes_per_pulse", c.dark_expected(Channel::Stokes));
    rows.row("dark_antistokes_per_pulse", c.dark_expected(Channel::AntiStokes));
    rows.row("storage_time_s", c.pulses.storage_time());

    rows.section("geometry");
    let g = &c.geometry;
    rows.row(
        "spin_wave_wavelength_m",
        spin_wave_wavelength(g.theta_write_stokes, g.photon_wavelength)?.to_f64(),
    );
    rows.row(
        "spatial_mode_count",
        spatial_mode_count(c.write.waist, g.theta_write_read, g.photon_wavelength)?,
    );
    let mismatch = beam_wave_vectors(c, g.propagation_mode)?.mismatch();
    rows.row("phase_mismatch_rad_per_m", mismatch.magnitude);
    rows.row("coherence_length_m", mismatch.coherence_length.to_f64());

    rows.section("decoherence");
    let budget = DecoherenceBudget::from_config(c)?;
    rows.row("tau_fringe_s", budget.tau_fringe.to_f64());
    rows.row("tau_transit_s", budget.tau_transit);
    rows.row("tau_other_s", budget.tau_other.to_f64());
    rows.row("tau_combined_s", budget.tau_combined);
    let eta = retrieval_efficiency(c.pulses.storage_time(), &budget, c.intrinsic_retrieval_efficiency)?;
    rows.row("retrieval_efficiency", eta);

    rows.section("emission-model");
    let model = ModelParams {
        p: c.excitation_probability,
        eta_ret: eta,
        eta1: c.stokes_chain.overall_efficiency(),
        eta2: c.antistokes_chain.overall_efficiency(),
        b1: c.background_expected(Channel::Stokes),
        b2: c.background_expected(Channel::AntiStokes),
    };
    rows.row("excitation_probability", c.excitation_probability);
    rows.row("intrinsic_retrieval_efficiency", c.intrinsic_retrieval_efficiency);
    rows.row("stokes_background_per_pulse", model.b1);
    rows.row("antistokes_background_per_pulse", model.b2);
    let s1 = model.stokes_rate();
    rows.row("stokes_detections_per_shot", s1);
    rows.row("antistokes_detections_per_shot", model.antistokes_rate());
    rows.row("stokes_detections_per_shot_squared", s1 * s1);
    // thinned thermal signal plus Poisson background: <n(n-1)> = 2S² + 2Sb + b²
    let signal = model.p * model.eta1;
    rows.row(
        "stokes_two_detection_per_shot",
        2.0 * signal * signal + 2.0 * signal * model.b1 + model.b1 * model.b1,
    );

    rows.section("spectral-filter");
    rows.row("stokes_etalon_fsr_hz", c.stokes_filter.fsr);
    rows.row("antistokes_etalon_fsr_hz", c.antistokes_filter.fsr);
    rows.row("doppler_fwhm_hz", doppler_fwhm(c.cell.temperature));
    if c.spectral.stokes.is_some() {
        let value = match snr(c.write.detuning, c, &c.spectral)? {
            Bounded::Finite(v) => v,
            Bounded::Unbounded => f64::INFINITY,
        };
        rows.row("stokes_snr", value);
    }

    rows.section("correlation-stats");
    if s1 > 0.0 && model.antistokes_rate() > 0.0 {
        rows.row("g12_analytic", analytic_g2(&model)?);
    }
    Ok(rows.0)
}
