//! Value grids given on the command line: `"start:stop:step unit"` or a
//! comma list `"v1,v2,v3 unit"`.

use qmem_core::units::{parse_quantity, Dimension};

use crate::error::CliError;

/// Parses a grid into SI values. Ranges include `stop` and must have a
/// whole number of steps.
pub fn parse_grid(flag: &str, text: &str, dim: Dimension) -> Result<Vec<f64>, CliError> {
    let usage = |msg: String| CliError::Usage(format!("{flag}: {msg}"));
    let text = text.trim();
    let (body, unit) = text
        .rsplit_once(char::is_whitespace)
        .ok_or_else(|| usage(format!("`{text}` needs a unit, e.g. `0:8:0.5 us`")))?;
    let body = body.trim();
    if body.is_empty() {
        return Err(usage("empty grid".into()));
    }
    let si = |v: f64| -> Result<f64, CliError> {
        parse_quantity(flag, &format!("{v} {unit}"), dim).map_err(|e| usage(e.to_string()))
    };
    let number = |s: &str| -> Result<f64, CliError> {
        let s = s.trim();
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| usage(format!("`{s}` is not a number")))
    };
    if body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("range `{body}` must be start:stop:step")));
        }
        let (start, stop, step) = (number(parts[0])?, number(parts[1])?, number(parts[2])?);
        if !(step > 0.0) {
            return Err(usage("step must be > 0".into()));
        }
        if stop < start {
            return Err(usage("stop is below start".into()));
        }
        let steps = (stop - start) / step;
        let n = steps.round();
        if (steps - n).abs() > 1e-6 {
            return Err(usage(format!(
                "({stop} - {start}) is not a whole number of {step} steps"
            )));
        }
        (0..=n as u64).map(|i| si(start + i as f64 * step)).collect()
    } else {
        body.split(',').map(|s| si(number(s)?)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmem_core::units::TORR;

    #[test]
    fn default_delay_grid() {
        let g = parse_grid("--delays", "0:8:0.5 us", Dimension::Time).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 0.0);
        assert!((g[16] - 8e-6).abs() < 1e-18);
    }

    #[test]
    fn lists_and_units() {
        let g = parse_grid("--pressures", "1,10 Torr", Dimension::Pressure).unwrap();
        assert_eq!(g, vec![TORR, 10.0 * TORR]);
        let g = parse_grid("--centers", "-1.5 GHz", Dimension::Frequency).unwrap();
        assert_eq!(g, vec![-1.5e9]);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in [
            "",
            " us",
            "0:8:0.5",
            "0:8:0 us",
            "8:0:1 us",
            "0:1:0.3 us",
            "a,b us",
            "0:1 us",
            "1 furlong",
        ] {
            assert!(parse_grid("--delays", bad, Dimension::Time).is_err(), "{bad}");
        }
    }
}
