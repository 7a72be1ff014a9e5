//! Unit-suffixed scalar parsing for config documents.
//!
//! Every dimensional value in a config file is written as `"<number> <unit>"`,
//! e.g. `"0.6 mW"` or `"-1.3 GHz"`. Values are converted to SI on parse and
//! always serialized back in the base SI unit, so a parse/serialize cycle is
//! exact.

use std::fmt;

use crate::error::{Error, Result};

/// Standard atmosphere in pascal.
pub const ATM: f64 = 101_325.0;
/// One torr in pascal.
pub const TORR: f64 = ATM / 760.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Temperature,
    Pressure,
    Power,
    Frequency,
    Time,
    Angle,
    /// Counts per second (dark rates, spectral weights).
    Rate,
    NumberDensity,
    Diffusivity,
}

impl Dimension {
    /// Base SI unit used when serializing.
    pub fn base_unit(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::Temperature => "K",
            Dimension::Pressure => "Pa",
            Dimension::Power => "W",
            Dimension::Frequency => "Hz",
            Dimension::Time => "s",
            Dimension::Angle => "rad",
            Dimension::Rate => "cps",
            Dimension::NumberDensity => "m^-3",
            Dimension::Diffusivity => "m^2/s",
        }
    }

    // (suffix, scale, offset): SI = value * scale + offset
    fn table(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            Dimension::Length => &[
                ("m", 1.0, 0.0),
                ("cm", 1e-2, 0.0),
                ("mm", 1e-3, 0.0),
                ("um", 1e-6, 0.0),
                ("μm", 1e-6, 0.0),
                ("nm", 1e-9, 0.0),
            ],
            Dimension::Temperature => &[("K", 1.0, 0.0), ("degC", 1.0, 273.15), ("°C", 1.0, 273.15)],
            Dimension::Pressure => &[
                ("Pa", 1.0, 0.0),
                ("Torr", TORR, 0.0),
                ("mTorr", 1e-3 * TORR, 0.0),
                ("atm", ATM, 0.0),
                ("mbar", 100.0, 0.0),
            ],
            Dimension::Power => &[("W", 1.0, 0.0), ("mW", 1e-3, 0.0), ("uW", 1e-6, 0.0), ("μW", 1e-6, 0.0)],
            Dimension::Frequency => &[
                ("Hz", 1.0, 0.0),
                ("kHz", 1e3, 0.0),
                ("MHz", 1e6, 0.0),
                ("GHz", 1e9, 0.0),
            ],
            Dimension::Time => &[
                ("s", 1.0, 0.0),
                ("ms", 1e-3, 0.0),
                ("us", 1e-6, 0.0),
                ("μs", 1e-6, 0.0),
                ("ns", 1e-9, 0.0),
            ],
            Dimension::Angle => &[
                ("rad", 1.0, 0.0),
                ("mrad", 1e-3, 0.0),
                ("deg", std::f64::consts::PI / 180.0, 0.0),
            ],
            Dimension::Rate => &[("cps", 1.0, 0.0), ("Hz", 1.0, 0.0), ("kcps", 1e3, 0.0)],
            Dimension::NumberDensity => &[("m^-3", 1.0, 0.0), ("cm^-3", 1e6, 0.0)],
            Dimension::Diffusivity => &[("m^2/s", 1.0, 0.0), ("cm^2/s", 1e-4, 0.0)],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Length => "length",
            Dimension::Temperature => "temperature",
            Dimension::Pressure => "pressure",
            Dimension::Power => "power",
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Angle => "angle",
            Dimension::Rate => "rate",
            Dimension::NumberDensity => "number density",
            Dimension::Diffusivity => "diffusivity",
        };
        f.write_str(name)
    }
}

/// Parses `"<number> <unit>"` into an SI value. `key` is only used for error messages.
pub fn parse_quantity(key: &str, text: &str, dim: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = text.find(|c: char| c.is_whitespace()).ok_or_else(|| Error::Unit {
        key: key.to_string(),
        reason: format!("missing unit suffix in `{text}` (expected a {dim})"),
    })?;
    let (number, unit) = text.split_at(split);
    let unit = unit.trim();
    let value: f64 = number
        .parse()
        .map_err(|_| Error::Parse(format!("`{key}`: `{number}` is not a number")))?;
    let &(_, scale, offset) = dim
        .table()
        .iter()
        .find(|(suffix, _, _)| *suffix == unit)
        .ok_or_else(|| Error::Unit {
            key: key.to_string(),
            reason: format!("unknown {dim} unit `{unit}`"),
        })?;
    if offset == 0.0 {
        Ok(value * scale)
    } else {
        Ok(value * scale + offset)
    }
}

/// Formats an SI value with the dimension's base unit; round-trips through [`parse_quantity`].
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.base_unit())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_suffixes() {
        assert_eq!(parse_quantity("p", "0.6 mW", Dimension::Power).unwrap(), 0.6e-3);
        assert_eq!(
            parse_quantity("p", "10 Torr", Dimension::Pressure).unwrap(),
            10.0 * TORR
        );
        assert_eq!(parse_quantity("d", "-1.3 GHz", Dimension::Frequency).unwrap(), -1.3e9);
        assert!((parse_quantity("t", "37 degC", Dimension::Temperature).unwrap() - 310.15).abs() < 1e-12);
    }

    #[test]
    fn missing_and_unknown_units_are_unit_errors() {
        assert!(matches!(
            parse_quantity("k", "0.6", Dimension::Power),
            Err(Error::Unit { .. })
        ));
        assert!(matches!(
            parse_quantity("k", "0.6 furlong", Dimension::Length),
            Err(Error::Unit { .. })
        ));
        assert!(matches!(
            parse_quantity("k", "abc mW", Dimension::Power),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn base_unit_format_round_trips() {
        for v in [0.075, 1.3e-3, -1.3e9, 4.3e16, 1.0 / 3.0] {
            let s = format_quantity(v, Dimension::Length);
            assert_eq!(parse_quantity("x", &s, Dimension::Length).unwrap(), v);
        }
    }
}
