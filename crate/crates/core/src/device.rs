//! Device parameters: per-qubit bus couplings, frequencies, neighbour
//! crosstalk and readout fidelities, plus the effective dispersive couplings
//! derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::mhz_to_rad_per_ns;

/// Largest register the full product basis is built for.
pub const MAX_QUBITS: usize = 20;

/// Warn threshold for the dispersive ratio |Δ| / max g.
pub const DISPERSIVE_RATIO_MIN: f64 = 5.0;

const TABLE_S1: &str = include_str!("../../../device/table_s1.json");

/// One qubit record as stored in the device file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    pub id: String,
    /// Bus coupling g/2π in MHz.
    pub g_mhz: f64,
    /// Idle frequency in GHz.
    pub omega_ghz: f64,
    /// Crosstalk coupling to the next qubit (cyclic), MHz.
    pub crosstalk_next_mhz: f64,
    pub f0: f64,
    pub f1: f64,
    pub t1_us: f64,
    pub t2s_us: f64,
    /// Sweet-spot frequency, informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub omega_max_approx: bool,
}

/// Validated device description. Immutable once loaded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub resonator_ghz: f64,
    pub qubits: Vec<QubitParams>,
}

fn check_unit_interval(field: String, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::Range {
            field,
            value,
            expected: "0 <= p <= 1",
        });
    }
    Ok(())
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.qubits.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        if !(self.resonator_ghz > 0.0) {
            return Err(Error::Range {
                field: "resonator_ghz".into(),
                value: self.resonator_ghz,
                expected: "> 0",
            });
        }
        for q in &self.qubits {
            if !(q.g_mhz > 0.0) || !q.g_mhz.is_finite() {
                return Err(Error::Range {
                    field: format!("{}.g_mhz", q.id),
                    value: q.g_mhz,
                    expected: "> 0",
                });
            }
            check_unit_interval(format!("{}.f0", q.id), q.f0)?;
            check_unit_interval(format!("{}.f1", q.id), q.f1)?;
            for (name, v) in [
                ("omega_ghz", q.omega_ghz),
                ("crosstalk_next_mhz", q.crosstalk_next_mhz),
                ("t1_us", q.t1_us),
                ("t2s_us", q.t2s_us),
            ] {
                if !v.is_finite() {
                    return Err(Error::Range {
                        field: format!("{}.{name}", q.id),
                        value: v,
                        expected: "finite",
                    });
                }
            }
        }
        Ok(())
    }

    /// The 20-qubit device table shipped with the crate.
    pub fn table_s1() -> Self {
        load_device_config(TABLE_S1).expect("bundled device file is valid")
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device config serializes")
    }

    pub fn couplings_mhz(&self, subset: &[usize]) -> Vec<f64> {
        subset.iter().map(|&j| self.qubits[j].g_mhz).collect()
    }

    /// Crosstalk for the cyclic ring over `subset`: entry i couples subset[i]
    /// to subset[(i + 1) % len], using the first member's tabulated value.
    pub fn ring_crosstalk_mhz(&self, subset: &[usize]) -> Vec<f64> {
        subset
            .iter()
            .map(|&j| self.qubits[j].crosstalk_next_mhz)
            .collect()
    }

    /// Copy with every bus coupling replaced by `g_mhz`.
    pub fn with_uniform_coupling(&self, g_mhz: f64) -> Result<Self> {
        let mut cfg = self.clone();
        for q in &mut cfg.qubits {
            q.g_mhz = g_mhz;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        if subset.is_empty() {
            return Err(Error::InvalidArgument("qubit subset is empty".into()));
        }
        if subset.len() > MAX_QUBITS {
            return Err(Error::QubitCount(subset.len()));
        }
        let mut seen = vec![false; self.qubits.len()];
        for &j in subset {
            if j >= self.qubits.len() {
                return Err(Error::InvalidArgument(format!(
                    "qubit index {j} outside device of {} qubits",
                    self.qubits.len()
                )));
            }
            if std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidArgument(format!("qubit index {j} repeated")));
            }
        }
        Ok(())
    }

    /// First `n` qubits of the device, in order.
    pub fn leading_subset(&self, n: usize) -> Result<Vec<usize>> {
        if n == 0 || n > self.qubits.len() {
            return Err(Error::QubitCount(n));
        }
        Ok((0..n).collect())
    }
}

/// Parse and validate a JSON device document.
pub fn load_device_config(text: &str) -> Result<DeviceConfig> {
    let cfg: DeviceConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Symmetric matrix of effective couplings in MHz: g_j g_k / Δ off the
/// diagonal and the Stark shift g_j² / Δ on it.
pub fn effective_coupling_matrix(
    cfg: &DeviceConfig,
    subset: &[usize],
    detuning_mhz: f64,
) -> Result<Vec<Vec<f64>>> {
    if detuning_mhz == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    cfg.check_subset(subset)?;
    let g = cfg.couplings_mhz(subset);
    Ok(g
        .iter()
        .map(|gj| g.iter().map(|gk| gj * gk / detuning_mhz).collect())
        .collect())
}

/// Dispersive operating point for a qubit subset.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersiveParams {
    /// Δ = ω_qubit − ω_B in MHz; negative for qubits below the bus.
    pub detuning_mhz: f64,
    pub subset: Vec<usize>,
    /// Mean pair coupling mean(g_j g_k)/Δ in MHz.
    pub mean_coupling_mhz: f64,
    max_g_mhz: f64,
}

impl DispersiveParams {
    pub fn new(cfg: &DeviceConfig, subset: &[usize], detuning_mhz: f64) -> Result<Self> {
        if detuning_mhz == 0.0 {
            return Err(Error::ZeroDetuning);
        }
        cfg.check_subset(subset)?;
        let g = cfg.couplings_mhz(subset);
        let n = g.len();
        let mean_product = if n == 1 {
            g[0] * g[0]
        } else {
            let mut sum = 0.0;
            for j in 0..n {
                for k in j + 1..n {
                    sum += g[j] * g[k];
                }
            }
            sum / (n * (n - 1) / 2) as f64
        };
        Ok(Self {
            detuning_mhz,
            subset: subset.to_vec(),
            mean_coupling_mhz: mean_product / detuning_mhz,
            max_g_mhz: g.iter().cloned().fold(0.0, f64::max),
        })
    }

    pub fn dispersive_ratio(&self) -> f64 {
        self.detuning_mhz.abs() / self.max_g_mhz
    }

    /// False when |Δ| / max g falls below [`DISPERSIVE_RATIO_MIN`].
    pub fn is_dispersive(&self) -> bool {
        self.dispersive_ratio() >= DISPERSIVE_RATIO_MIN
    }
}

/// Time (ns) at which an m-component cat appears under a twisting strength of
/// `coupling_mhz` (λ/2π): t = π / (m |2πλ|).
pub fn cat_time(m: u32, coupling_mhz: f64) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("cat order m = {m} must be >= 2")));
    }
    if coupling_mhz == 0.0 || !coupling_mhz.is_finite() {
        return Err(Error::InvalidArgument("coupling must be finite and nonzero".into()));
    }
    Ok(std::f64::consts::PI / (f64::from(m) * mhz_to_rad_per_ns(coupling_mhz).abs()))
}
