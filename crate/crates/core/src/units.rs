//! Unit handling. Frequencies are carried in linear MHz (as tabulated), times
//! in ns, and dynamics use angular frequency in rad/ns.

use std::f64::consts::PI;

/// Linear frequency in MHz to angular frequency in rad/ns.
#[inline]
pub fn mhz_to_rad_per_ns(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz * 1e-3
}

/// Angular frequency in rad/ns back to linear MHz.
#[inline]
pub fn rad_per_ns_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_mhz_is_one_cycle_per_microsecond() {
        let w = mhz_to_rad_per_ns(1.0);
        assert!((w * 1000.0 - 2.0 * PI).abs() < 1e-12);
        assert!((rad_per_ns_to_mhz(w) - 1.0).abs() < 1e-12);
    }
}
