//! Grid CSV: `#` header lines, a column row, then one row per cell.

use std::fmt::Write;

use zernike_turbulence::turbulence::ProbabilityGrid;

pub const COLUMNS: &str = "N1,N2,P_raw,P_norm,log10_P_norm_clamped";

/// Display floor of the log column.
pub const LOG_FLOOR: f64 = -4.5;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn clamped_log10(v: f64) -> f64 {
    if v > 0.0 {
        v.log10().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

pub fn render(g: &ProbabilityGrid) -> String {
    let mut out = String::new();
    let p = &g.params;
    let header: [(&str, String); 13] = [
        ("pump_N", g.pump.n.to_string()),
        ("pump_M", g.pump.m.to_string()),
        ("M1", g.m1.to_string()),
        ("M2", g.m2.to_string()),
        ("sigma_R", num(p.sigma_r)),
        ("ao_mode", g.ao.mode.name().to_string()),
        ("ao_cutoff", g.ao.cutoff.to_string()),
        ("k", num(p.k)),
        ("z", num(p.z)),
        ("R", num(p.r)),
        ("n5_max", g.truncation.n5_max.to_string()),
        ("order_max", g.truncation.order_max.to_string()),
        ("normalization", g.normalization.name().to_string()),
    ];
    for (name, value) in header {
        writeln!(out, "# {name}={value}").unwrap();
    }
    writeln!(out, "{COLUMNS}").unwrap();
    for c in &g.cells {
        writeln!(
            out,
            "{},{},{},{},{}",
            c.n1,
            c.n2,
            num(c.raw),
            num(c.norm),
            num(clamped_log10(c.norm))
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, 0.1, 1e-300, -2.5e-17, 0.30000000000000004, f64::MIN_POSITIVE] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn log_column_is_clamped() {
        assert_eq!(clamped_log10(0.0), -4.5);
        assert_eq!(clamped_log10(1e-9), -4.5);
        assert_eq!(clamped_log10(1.0), 0.0);
        assert!((clamped_log10(1e-3) + 3.0).abs() < 1e-15);
    }
}
