//! Husimi Q-functions, the rotate-and-project protocol, parity fringes and
//! their fit, GHZ corner elements, fidelity and collective-spin moments.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sectors::binomial_weight;
use crate::states::{apply_local_rotations, Basis, BlochDirection, PureState, QubitRotation};

/// Samples of a Q-function grid: θ uniform over [0, π] inclusive, φ uniform
/// over [−π, π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n_theta: 61,
            n_phi: 121,
        }
    }
}

impl GridSpec {
    /// Parse `TxP`, e.g. `61x121`.
    pub fn parse(text: &str) -> Result<Self> {
        let (t, p) = text
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::Parse(format!("grid {text:?} is not of the form TxP")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("grid size {s:?} is not an integer")))
        };
        let spec = Self {
            n_theta: parse(t)?,
            n_phi: parse(p)?,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.n_theta < 2 || self.n_phi < 1 {
            return Err(Error::InvalidArgument(format!(
                "grid {}x{} is empty (need at least 2 θ and 1 φ samples)",
                self.n_theta, self.n_phi
            )));
        }
        Ok(())
    }

    pub fn thetas(&self) -> Vec<f64> {
        let step = PI / (self.n_theta - 1) as f64;
        (0..self.n_theta).map(|i| i as f64 * step).collect()
    }

    pub fn phis(&self) -> Vec<f64> {
        let step = 2.0 * PI / self.n_phi as f64;
        (0..self.n_phi).map(|j| -PI + j as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// values[i][j] = Q(theta[i], phi[j]).
    pub values: Vec<Vec<f64>>,
}

impl QGrid {
    /// Largest value and its (θ, φ).
    pub fn argmax(&self) -> (f64, f64, f64) {
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > best.2 {
                    best = (self.theta[i], self.phi[j], v);
                }
            }
        }
        best
    }

    /// Largest absolute pointwise difference to a grid of the same shape.
    pub fn max_abs_diff(&self, other: &QGrid) -> Result<f64> {
        if self.theta.len() != other.theta.len() || self.phi.len() != other.phi.len() {
            return Err(Error::LengthMismatch {
                expected: self.theta.len() * self.phi.len(),
                got: other.theta.len() * other.phi.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// CSV with a header row of φ values and θ in the first column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta\\phi");
        for p in &self.phi {
            write!(out, ",{p}").expect("write to string");
        }
        out.push('\n');
        for (t, row) in self.theta.iter().zip(&self.values) {
            write!(out, "{t}").expect("write to string");
            for v in row {
                write!(out, ",{v}").expect("write to string");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("{s:?} is not a number")))
        };
        let phi = header.split(',').skip(1).map(parse).collect::<Result<Vec<_>>>()?;
        let mut theta = Vec::new();
        let mut values = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let mut cells = line.split(',');
            theta.push(parse(cells.next().unwrap_or(""))?);
            let row = cells.map(parse).collect::<Result<Vec<_>>>()?;
            if row.len() != phi.len() {
                return Err(Error::LengthMismatch {
                    expected: phi.len(),
                    got: row.len(),
                });
            }
            values.push(row);
        }
        Ok(Self { theta, phi, values })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serializes")
    }
}

/// Per-weight sums S_w of a product-basis register: the overlap with any
/// coherent state depends on the state only through them.
fn weight_sums(amps: &[C64], n: usize) -> Vec<C64> {
    let mut sums = vec![C64::new(0.0, 0.0); n + 1];
    for (x, a) in amps.iter().enumerate() {
        sums[x.count_ones() as usize] += a;
    }
    sums
}

/// Level coefficients c_k such that ⟨θ,φ|ψ⟩ = Σ_k conj(u_k(θ)) e^{−ikφ} c_k,
/// with u_k(θ) the real part of the coherent amplitude. Dicke states carry
/// the √C(N,k) factor in u; product states carry it in the weight sums. Joint
/// qubit-resonator states keep one coefficient set per photon number.
struct Levels {
    n: usize,
    coeff: Vec<Vec<C64>>,
    dicke: bool,
}

impl Levels {
    fn of(state: &PureState) -> Result<Self> {
        match state.basis() {
            Basis::Dicke(n) => Ok(Self {
                n,
                coeff: vec![state.amplitudes().to_vec()],
                dicke: true,
            }),
            Basis::Full(n) | Basis::Cavity { qubits: n, .. } => Ok(Self {
                n,
                coeff: state
                    .amplitudes()
                    .chunks(1 << n)
                    .map(|slice| weight_sums(slice, n))
                    .collect(),
                dicke: false,
            }),
        }
    }

    /// Real magnitudes of the coherent amplitudes at polar angle θ.
    fn magnitudes(&self, theta: f64) -> Vec<f64> {
        let n = self.n;
        let (s, c) = (theta / 2.0).sin_cos();
        let (s, c) = (s.abs(), c.abs());
        (0..=n)
            .map(|k| {
                if self.dicke {
                    binomial_weight(n, k, c, s)
                } else {
                    c.powi((n - k) as i32) * s.powi(k as i32)
                }
            })
            .collect()
    }

    fn projections(&self, mags: &[f64], phis: &[f64]) -> Vec<f64> {
        let weighted: Vec<Vec<C64>> = self
            .coeff
            .iter()
            .map(|c| mags.iter().zip(c).map(|(m, c)| c * m).collect())
            .collect();
        phis.iter()
            .map(|&phi| {
                let step = C64::from_polar(1.0, -phi);
                weighted
                    .iter()
                    .map(|a| {
                        let mut rot = C64::new(1.0, 0.0);
                        let mut acc = C64::new(0.0, 0.0);
                        for ak in a {
                            acc += ak * rot;
                            rot *= step;
                        }
                        acc.norm_sqr()
                    })
                    .sum()
            })
            .collect()
    }
}

/// Q(θ,φ) = ⟨θ,φ|ρ|θ,φ⟩ on a grid, with ρ the qubit state (the resonator is
/// traced out for joint states).
pub fn husimi_q(state: &PureState, spec: GridSpec) -> Result<QGrid> {
    spec.check()?;
    let levels = Levels::of(state)?;
    let theta = spec.thetas();
    let phi = spec.phis();
    let values = theta
        .par_iter()
        .map(|&t| levels.projections(&levels.magnitudes(t), &phi))
        .collect();
    Ok(QGrid { theta, phi, values })
}

/// Q at a single direction.
pub fn husimi_point(state: &PureState, dir: BlochDirection) -> Result<f64> {
    let levels = Levels::of(state)?;
    Ok(levels.projections(&levels.magnitudes(dir.theta), &[dir.phi])[0])
}

/// The experimental recipe: for θ ≤ π/2 rotate every qubit by θ about the
/// equatorial axis φ − π/2 and record P(0…0); otherwise rotate by π − θ about
/// φ + π/2 and record P(1…1).
pub fn q_protocol(state: &PureState, dir: BlochDirection) -> Result<f64> {
    let Basis::Full(n) = state.basis() else {
        return Err(Error::BasisMismatch("protocol acts on product-basis states".into()));
    };
    let (rot, target) = if dir.theta <= FRAC_PI_2 {
        (QubitRotation::equatorial(dir.phi - FRAC_PI_2, dir.theta), 0)
    } else {
        (QubitRotation::equatorial(dir.phi + FRAC_PI_2, PI - dir.theta), (1 << n) - 1)
    };
    let rotated = apply_local_rotations(state, &vec![rot; n])?;
    Ok(rotated.amplitudes()[target].norm_sqr())
}

/// Number of strict local maxima of the θ = π/2 row, cyclic in φ, at or above
/// 0.1 of the row maximum. Runs of equal samples count once.
pub fn equatorial_lobe_count(qg: &QGrid) -> Result<usize> {
    let row = qg
        .theta
        .iter()
        .position(|t| (t - FRAC_PI_2).abs() < 1e-9)
        .ok_or_else(|| Error::InvalidArgument("grid has no θ = π/2 row".into()))?;
    let v = &qg.values[row];
    let max = v.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(Error::InvalidArgument("equatorial slice is zero".into()));
    }
    let eq = 1e-9 * max;
    let n = v.len();
    let Some(start) = (0..n).find(|&i| (v[i] - v[(i + n - 1) % n]).abs() > eq) else {
        return Ok(0);
    };
    // plateau runs, each represented by its largest sample
    let mut runs: Vec<f64> = Vec::new();
    let mut current = v[start];
    for step in 1..=n {
        let i = (start + step) % n;
        let prev = v[(i + n - 1) % n];
        if step == n || (v[i] - prev).abs() > eq {
            runs.push(current);
            current = v[i];
        } else {
            current = current.max(v[i]);
        }
    }
    let m = runs.len();
    Ok((0..m)
        .filter(|&r| {
            let (prev, next) = (runs[(r + m - 1) % m], runs[(r + 1) % m]);
            runs[r] >= 0.1 * max && runs[r] > prev + eq && runs[r] > next + eq
        })
        .count())
}

/// ⟨P(γ)⟩ with P(γ) = ⊗_j (cos γ Y_j + sin γ X_j): rotate the axis
/// (π/2, π/2 − γ) of every qubit to z, then Σ_x (−1)^{|x|} p(x).
pub fn parity_expectation(state: &PureState, gamma: f64) -> Result<f64> {
    let Basis::Full(n) = state.basis() else {
        return Err(Error::BasisMismatch("parity acts on product-basis states".into()));
    };
    let rot = QubitRotation::equatorial(-gamma, FRAC_PI_2);
    let rotated = apply_local_rotations(state, &vec![rot; n])?;
    Ok(signed_parity(&rotated.probabilities()))
}

pub(crate) fn signed_parity(p: &[f64]) -> f64 {
    p.iter()
        .enumerate()
        .map(|(x, v)| if x.count_ones() % 2 == 0 { *v } else { -*v })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityCurve {
    pub gamma: Vec<f64>,
    pub parity: Vec<f64>,
    /// Per-point standard deviations, when available.
    pub err: Option<Vec<f64>>,
}

impl ParityCurve {
    pub fn new(gamma: Vec<f64>, parity: Vec<f64>, err: Option<Vec<f64>>) -> Result<Self> {
        if gamma.len() != parity.len() {
            return Err(Error::LengthMismatch {
                expected: gamma.len(),
                got: parity.len(),
            });
        }
        if let Some(e) = &err {
            if e.len() != gamma.len() {
                return Err(Error::LengthMismatch {
                    expected: gamma.len(),
                    got: e.len(),
                });
            }
        }
        if let Some(v) = parity.iter().find(|v| v.abs() > 1.0 + 1e-9) {
            return Err(Error::Range {
                field: "parity".into(),
                value: *v,
                expected: "[-1, 1]",
            });
        }
        Ok(Self { gamma, parity, err })
    }

    /// Operator parity of `state` at `points` γ values evenly spread over
    /// [−π/2, π/2].
    pub fn scan(state: &PureState, points: usize) -> Result<Self> {
        let gamma = gamma_grid(points)?;
        let parity = gamma
            .par_iter()
            .map(|&g| parity_expectation(state, g))
            .collect::<Result<Vec<_>>>()?;
        Self::new(gamma, parity, None)
    }
}

/// `points` values evenly spread over [−π/2, π/2] (both ends included).
pub fn gamma_grid(points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::InvalidArgument("γ grid needs at least one point".into())),
        1 => Ok(vec![0.0]),
        _ => Ok((0..points)
            .map(|i| -FRAC_PI_2 + PI * i as f64 / (points - 1) as f64)
            .collect()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// √(a² + b²) = 2|ρ(0…0, 1…1)|.
    pub amplitude: f64,
    /// atan2(−b, a).
    pub phase: f64,
    pub offset: f64,
    pub frequency: f64,
    /// Root mean square of the unweighted residuals.
    pub residual: f64,
}

/// Least-squares fit of a·cos(fγ) + b·sin(fγ) + c, weighted by 1/err² when
/// error bars are present and all positive.
pub fn fit_fringe_at(curve: &ParityCurve, frequency: f64) -> Result<FringeFit> {
    let m = curve.gamma.len();
    if m < 3 {
        return Err(Error::RankDeficient(format!("{m} points cannot fix three parameters")));
    }
    let weights: Vec<f64> = match &curve.err {
        Some(e) if e.iter().all(|s| *s > 0.0) => e.iter().map(|s| 1.0 / s).collect(),
        _ => vec![1.0; m],
    };
    let a = DMatrix::from_fn(m, 3, |r, c| {
        let x = frequency * curve.gamma[r];
        weights[r]
            * match c {
                0 => x.cos(),
                1 => x.sin(),
                _ => 1.0,
            }
    });
    let b = DVector::from_fn(m, |r, _| weights[r] * curve.parity[r]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient(
            "γ samples do not separate cosine, sine and offset".into(),
        ));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let (ca, cb, cc) = (x[0], x[1], x[2]);
    let residual = (curve
        .gamma
        .iter()
        .zip(&curve.parity)
        .map(|(g, p)| {
            let y = ca * (frequency * g).cos() + cb * (frequency * g).sin() + cc;
            (p - y).powi(2)
        })
        .sum::<f64>()
        / m as f64)
        .sqrt();
    Ok(FringeFit {
        amplitude: ca.hypot(cb),
        phase: (-cb).atan2(ca),
        offset: cc,
        frequency,
        residual,
    })
}

/// Fringe fit at the fixed frequency N.
pub fn fit_fringe(curve: &ParityCurve, n: usize) -> Result<FringeFit> {
    fit_fringe_at(curve, n as f64)
}

/// JSON report {gamma, parity, err, A, phi, residual, offset}.
pub fn parity_report_json(curve: &ParityCurve, fit: &FringeFit) -> serde_json::Value {
    serde_json::json!({
        "gamma": curve.gamma,
        "parity": curve.parity,
        "err": curve.err.clone().unwrap_or_default(),
        "A": fit.amplitude,
        "phi": fit.phase,
        "residual": fit.residual,
        "offset": fit.offset,
    })
}

/// (|ψ(0…0)|², |ψ(1…1)|²).
pub fn corner_populations(state: &PureState) -> Result<(f64, f64)> {
    let Basis::Full(n) = state.basis() else {
        return Err(Error::BasisMismatch("corner populations need a product-basis state".into()));
    };
    let a = state.amplitudes();
    Ok((a[0].norm_sqr(), a[(1 << n) - 1].norm_sqr()))
}

/// F = (ρ00 + ρ11)/2 + |ρ(0…0, 1…1)|; genuine multipartite entanglement iff
/// F > 1/2.
pub fn ghz_fidelity(rho00: f64, rho11: f64, off_mag: f64) -> Result<(f64, bool)> {
    for (field, v) in [("rho00", rho00), ("rho11", rho11), ("off_mag", off_mag)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Range {
                field: field.into(),
                value: v,
                expected: "[0, 1]",
            });
        }
    }
    let f = (rho00 + rho11) / 2.0 + off_mag;
    Ok((f, f > 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollectiveMoments {
    /// (⟨S_x⟩, ⟨S_y⟩, ⟨S_z⟩).
    pub mean: [f64; 3],
    /// Symmetrized covariance ½⟨{S_a, S_b}⟩ − ⟨S_a⟩⟨S_b⟩.
    pub covariance: [[f64; 3]; 3],
    /// N · min transverse variance / |⟨S⟩|²; None when |⟨S⟩| < 1e-9.
    pub squeezing_ratio: Option<f64>,
}

/// S⁺ψ on any basis.
fn raise(state: &PureState) -> Vec<C64> {
    let a = state.amplitudes();
    match state.basis() {
        Basis::Dicke(n) => {
            let mut out = vec![C64::new(0.0, 0.0); n + 1];
            for k in 0..n {
                out[k + 1] = a[k] * (((k + 1) * (n - k)) as f64).sqrt();
            }
            out
        }
        Basis::Full(n) | Basis::Cavity { qubits: n, .. } => (0..a.len())
            .into_par_iter()
            .map(|y| {
                (0..n)
                    .filter(|j| y >> j & 1 == 1)
                    .map(|j| a[y ^ (1 << j)])
                    .sum()
            })
            .collect(),
    }
}

fn lower(state: &PureState) -> Vec<C64> {
    let a = state.amplitudes();
    match state.basis() {
        Basis::Dicke(n) => {
            let mut out = vec![C64::new(0.0, 0.0); n + 1];
            for k in 1..=n {
                out[k - 1] = a[k] * ((k * (n - k + 1)) as f64).sqrt();
            }
            out
        }
        Basis::Full(n) | Basis::Cavity { qubits: n, .. } => (0..a.len())
            .into_par_iter()
            .map(|y| {
                (0..n)
                    .filter(|j| y >> j & 1 == 0)
                    .map(|j| a[y | (1 << j)])
                    .sum()
            })
            .collect(),
    }
}

fn s_z(state: &PureState) -> Vec<C64> {
    let basis = state.basis();
    let n = basis.qubits() as f64;
    state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let k = match basis {
                Basis::Dicke(_) => i,
                Basis::Full(_) => i.count_ones() as usize,
                Basis::Cavity { qubits, .. } => (i & ((1 << qubits) - 1)).count_ones() as usize,
            };
            a * (n - 2.0 * k as f64)
        })
        .collect()
}

/// First and second moments of S_x = S⁺ + S⁻, S_y = i(S⁺ − S⁻) and
/// S_z = Σ σ_z, with σ_z = |0⟩⟨0| − |1⟩⟨1|.
pub fn collective_moments(state: &PureState) -> CollectiveMoments {
    let up = raise(state);
    let down = lower(state);
    let i = C64::new(0.0, 1.0);
    let sx: Vec<C64> = up.iter().zip(&down).map(|(u, d)| u + d).collect();
    let sy: Vec<C64> = up.iter().zip(&down).map(|(u, d)| i * (u - d)).collect();
    let sz = s_z(state);
    let psi = state.amplitudes();
    let ops = [&sx, &sy, &sz];
    let dot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x.conj() * y).sum() };
    let mean = [0, 1, 2].map(|a| dot(psi, ops[a]).re);
    let covariance =
        [0, 1, 2].map(|a| [0, 1, 2].map(|b| dot(ops[a], ops[b]).re - mean[a] * mean[b]));
    let len2: f64 = mean.iter().map(|m| m * m).sum();
    let squeezing_ratio = (len2.sqrt() >= 1e-9).then(|| {
        let m = nalgebra::Vector3::from(mean) / len2.sqrt();
        let seed = if m.x.abs() < 0.9 {
            nalgebra::Vector3::x()
        } else {
            nalgebra::Vector3::y()
        };
        let e1 = (seed - m * m.dot(&seed)).normalize();
        let e2 = m.cross(&e1);
        let c = nalgebra::Matrix3::from_fn(|r, cc| covariance[r][cc]);
        let q = |u: &nalgebra::Vector3<f64>, v: &nalgebra::Vector3<f64>| u.dot(&(c * v));
        let (a, b, d) = (q(&e1, &e1), q(&e1, &e2), q(&e2, &e2));
        let min_var = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt();
        state.qubits() as f64 * min_var / len2
    });
    CollectiveMoments {
        mean,
        covariance,
        squeezing_ratio,
    }
}
