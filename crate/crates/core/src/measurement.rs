//! Finite-shot sampling, per-qubit readout confusion and its inversion,
//! simplex projection, parity estimates and subgroup error bars.
//!
//! Bitstrings are written qubit 0 first: character j is bit j of the index.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::device::DeviceConfig;
use crate::error::{Error, Result};
use crate::observables::signed_parity;
use crate::rng::ShotRng;
use crate::states::{Basis, PureState};

const SIMPLEX_TOL: f64 = 1e-12;
const SHOT_CHUNK: usize = 4096;

/// Per-qubit column-stochastic readout matrices
/// M_j = [[F0_j, 1 − F1_j], [1 − F0_j, F1_j]] (column = true, row = reported).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionModel {
    f0: Vec<f64>,
    f1: Vec<f64>,
}

impl ConfusionModel {
    pub fn new(f0: Vec<f64>, f1: Vec<f64>) -> Result<Self> {
        if f0.len() != f1.len() {
            return Err(Error::LengthMismatch {
                expected: f0.len(),
                got: f1.len(),
            });
        }
        for (j, (&a, &b)) in f0.iter().zip(&f1).enumerate() {
            for (field, v) in [("f0", a), ("f1", b)] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Range {
                        field: format!("{field}[{j}]"),
                        value: v,
                        expected: "[0, 1]",
                    });
                }
            }
            if (a + b - 1.0).abs() < 1e-12 {
                return Err(Error::SingularConfusion(j));
            }
        }
        Ok(Self { f0, f1 })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            f0: vec![1.0; n],
            f1: vec![1.0; n],
        }
    }

    /// Readout fidelities of `subset` from the device table.
    pub fn from_device(cfg: &DeviceConfig, subset: &[usize]) -> Result<Self> {
        cfg.check_subset(subset)?;
        Self::new(
            subset.iter().map(|&j| cfg.qubits[j].f0).collect(),
            subset.iter().map(|&j| cfg.qubits[j].f1).collect(),
        )
    }

    pub fn qubits(&self) -> usize {
        self.f0.len()
    }

    pub fn matrix(&self, j: usize) -> [[f64; 2]; 2] {
        let (a, b) = (self.f0[j], self.f1[j]);
        [[a, 1.0 - b], [1.0 - a, b]]
    }

    pub fn inverse(&self, j: usize) -> [[f64; 2]; 2] {
        let (a, b) = (self.f0[j], self.f1[j]);
        let det = a + b - 1.0;
        [[b / det, -(1.0 - b) / det], [-(1.0 - a) / det, a / det]]
    }

    /// Report for true bit `bit` of qubit `j` given a uniform draw `u`.
    fn report(&self, j: usize, bit: bool, u: f64) -> bool {
        if bit {
            u >= 1.0 - self.f1[j]
        } else {
            u < 1.0 - self.f0[j]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbTag {
    /// Observed frequencies.
    Raw,
    /// May contain negative entries after inversion.
    Quasi,
    /// Nonnegative and summing to one within 1e-12.
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector {
    pub values: Vec<f64>,
    pub tag: ProbTag,
}

impl ProbVector {
    /// Validate a probability vector and tag it as simplex.
    pub fn simplex(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "probability vector length {} is not 2^N",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Range {
                field: "probability".into(),
                value: *v,
                expected: ">= 0",
            });
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Range {
                field: "probability sum".into(),
                value: sum,
                expected: "1 within 1e-12",
            });
        }
        Ok(Self {
            values,
            tag: ProbTag::Simplex,
        })
    }

    /// Exact outcome distribution of a product-basis state, or the qubit
    /// marginal of a joint qubit-resonator state.
    pub fn from_state(state: &PureState) -> Result<Self> {
        let values = match state.basis() {
            Basis::Full(_) => state.probabilities(),
            Basis::Cavity { qubits, .. } => {
                let reg = 1 << qubits;
                let mut p = vec![0.0; reg];
                for (i, a) in state.amplitudes().iter().enumerate() {
                    p[i % reg] += a.norm_sqr();
                }
                p
            }
            Basis::Dicke(_) => {
                return Err(Error::BasisMismatch(
                    "outcome probabilities need a product-basis state".into(),
                ))
            }
        };
        let sum: f64 = values.iter().sum();
        Ok(Self {
            values: values.into_iter().map(|v| v / sum).collect(),
            tag: ProbTag::Simplex,
        })
    }

    pub fn from_counts(table: &CountTable) -> Self {
        let mut values = vec![0.0; 1 << table.n];
        for (&x, &c) in &table.counts {
            values[x as usize] = c as f64 / table.shots as f64;
        }
        Self {
            values,
            tag: ProbTag::Raw,
        }
    }

    pub fn qubits(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }
}

/// Outcome counts, with the ordered shot log when produced by sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub n: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<u32, u64>,
    pub log: Option<Vec<u32>>,
}

pub fn bitstring(x: u32, n: usize) -> String {
    (0..n).map(|j| if x >> j & 1 == 1 { '1' } else { '0' }).collect()
}

fn parse_bitstring(s: &str, n: usize) -> Result<u32> {
    if s.len() != n {
        return Err(Error::Parse(format!("bitstring {s:?} does not have {n} bits")));
    }
    s.chars().enumerate().try_fold(0u32, |acc, (j, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << j),
        _ => Err(Error::Parse(format!("bitstring {s:?} has a non-binary character"))),
    })
}

impl CountTable {
    pub fn from_log(n: usize, seed: u64, log: Vec<u32>) -> Self {
        let mut counts = BTreeMap::new();
        for &x in &log {
            *counts.entry(x).or_insert(0) += 1;
        }
        Self {
            n,
            shots: log.len() as u64,
            seed,
            counts,
            log: Some(log),
        }
    }

    /// Header `# n=<N> shots=<total> seed=<seed>`, then `bitstring count`
    /// lines in increasing index order.
    pub fn to_text(&self) -> String {
        let mut out = format!("# n={} shots={} seed={}\n", self.n, self.shots, self.seed);
        for (&x, &c) in &self.counts {
            writeln!(out, "{} {c}", bitstring(x, self.n)).expect("write to string");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("missing count-table header".into()))?;
        let mut fields = BTreeMap::new();
        for kv in header.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("header field {kv:?}")))?;
            let v: u64 = v
                .parse()
                .map_err(|_| Error::Parse(format!("header value {kv:?}")))?;
            fields.insert(k.to_string(), v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("header lacks {k}")))
        };
        let n = get("n")? as usize;
        let (shots, seed) = (get("shots")?, get("seed")?);
        let mut counts = BTreeMap::new();
        for line in lines {
            let (b, c) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("count line {line:?}")))?;
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("count {c:?}")))?;
            counts.insert(parse_bitstring(b, n)?, c);
        }
        let total: u64 = counts.values().sum();
        if total != shots {
            return Err(Error::Parse(format!("counts sum to {total}, header says {shots}")));
        }
        Ok(Self {
            n,
            shots,
            seed,
            counts,
            log: None,
        })
    }
}

/// Ordered shot outcomes drawn from `p` by inverse CDF, optionally passed
/// through per-shot readout bit flips. Shot s uses draws s·(1+N) … of
/// (seed, stream), so the log does not depend on the thread count.
pub fn sample_log(
    p: &ProbVector,
    shots: u64,
    seed: u64,
    stream: u64,
    confusion: Option<&ConfusionModel>,
) -> Result<Vec<u32>> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".into()));
    }
    let n = p.qubits();
    if let Some(cm) = confusion {
        if cm.qubits() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: cm.qubits(),
            });
        }
    }
    let mut cdf = Vec::with_capacity(p.values.len());
    let mut acc = 0.0;
    for v in &p.values {
        acc += v.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let draws = 1 + n as u64;
    let last = cdf.len() - 1;
    let log = (0..shots as usize)
        .into_par_iter()
        .with_min_len(SHOT_CHUNK)
        .map(|s| {
            let mut rng = ShotRng::new(seed, stream, s as u64, draws);
            let target = rng.uniform() * total;
            let mut x = cdf.partition_point(|c| *c <= target).min(last) as u32;
            if let Some(cm) = confusion {
                for j in 0..n {
                    let u = rng.uniform();
                    if cm.report(j, x >> j & 1 == 1, u) {
                        x |= 1 << j;
                    } else {
                        x &= !(1 << j);
                    }
                }
            }
            x
        })
        .collect();
    Ok(log)
}

/// `shots` i.i.d. measurements of a product-basis state.
pub fn sample(state: &PureState, shots: u64, seed: u64) -> Result<CountTable> {
    let p = ProbVector::from_state(state)?;
    let log = sample_log(&p, shots, seed, 0, None)?;
    Ok(CountTable::from_log(p.qubits(), seed, log))
}

/// Apply a 2×2 matrix to every qubit in turn, in O(N·2^N).
fn apply_qubitwise(values: &[f64], mats: impl Fn(usize) -> [[f64; 2]; 2], n: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    for j in 0..n {
        let m = mats(j);
        let stride = 1 << j;
        v.par_chunks_mut(2 * stride).for_each(|block| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (p0, p1) = (*a, *b);
                *a = m[0][0] * p0 + m[0][1] * p1;
                *b = m[1][0] * p0 + m[1][1] * p1;
            }
        });
    }
    v
}

/// p' = (⊗_j M_j) p.
pub fn apply_confusion(p: &ProbVector, cm: &ConfusionModel) -> Result<ProbVector> {
    let n = p.qubits();
    if cm.qubits() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cm.qubits(),
        });
    }
    Ok(ProbVector {
        values: apply_qubitwise(&p.values, |j| cm.matrix(j), n),
        tag: p.tag,
    })
}

/// (⊗_j M_j⁻¹) p; the result may leave the simplex.
pub fn correct_readout(p: &ProbVector, cm: &ConfusionModel) -> Result<ProbVector> {
    let n = p.qubits();
    if cm.qubits() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cm.qubits(),
        });
    }
    Ok(ProbVector {
        values: apply_qubitwise(&p.values, |j| cm.inverse(j), n),
        tag: ProbTag::Quasi,
    })
}

/// Maps corrected quasi-probabilities to a valid distribution.
pub trait Estimator {
    fn estimate(&self, q: &ProbVector) -> ProbVector;
}

/// Euclidean projection onto the probability simplex after renormalization.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexProjection;

impl Estimator for SimplexProjection {
    fn estimate(&self, q: &ProbVector) -> ProbVector {
        let sum: f64 = q.values.iter().sum();
        let v: Vec<f64> = if sum > 0.0 {
            q.values.iter().map(|x| x / sum).collect()
        } else {
            q.values.clone()
        };
        if v.iter().all(|x| *x >= 0.0) && sum > 0.0 {
            return ProbVector {
                values: v,
                tag: ProbTag::Simplex,
            };
        }
        let mut u = v.clone();
        u.sort_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        let mut shift = 0.0;
        for (i, ui) in u.iter().enumerate() {
            acc += ui;
            let t = (acc - 1.0) / (i + 1) as f64;
            if ui - t > 0.0 {
                shift = t;
            }
        }
        ProbVector {
            values: v.iter().map(|x| (x - shift).max(0.0)).collect(),
            tag: ProbTag::Simplex,
        }
    }
}

/// Maximum-likelihood stand-in: the Euclidean simplex projection.
pub fn mle_project(q: &ProbVector) -> ProbVector {
    SimplexProjection.estimate(q)
}

/// Σ_x (−1)^{|x|} p(x).
pub fn parity_from_probs(p: &ProbVector) -> f64 {
    signed_parity(&p.values)
}

/// Parity through the full post-processing chain: optional correction, then
/// the estimator, then the signed sum.
pub fn processed_parity(
    p: &ProbVector,
    cm: Option<&ConfusionModel>,
    estimator: &dyn Estimator,
) -> Result<f64> {
    let q = match cm {
        Some(cm) => correct_readout(p, cm)?,
        None => p.clone(),
    };
    Ok(parity_from_probs(&estimator.estimate(&q)))
}

/// Split an ordered shot log into ⌊len / group_size⌋ groups (dropping the
/// remainder), run correction → projection → parity on each, and return the
/// mean and population standard deviation across groups.
pub fn subgroup_errorbars(
    log: &[u32],
    n: usize,
    group_size: usize,
    cm: Option<&ConfusionModel>,
) -> Result<(f64, f64)> {
    let per_group = subgroup_parities(log, n, group_size, cm)?;
    Ok(mean_std(&per_group))
}

/// Parity of each complete subgroup of the log.
pub fn subgroup_parities(
    log: &[u32],
    n: usize,
    group_size: usize,
    cm: Option<&ConfusionModel>,
) -> Result<Vec<f64>> {
    if group_size == 0 || log.len() / group_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} shots make fewer than two groups of {group_size}",
            log.len()
        )));
    }
    log.chunks_exact(group_size)
        .map(|chunk| {
            let table = CountTable::from_log(n, 0, chunk.to_vec());
            processed_parity(&ProbVector::from_counts(&table), cm, &SimplexProjection)
        })
        .collect()
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn ghz2() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(
            Basis::Full(2),
            vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, h)],
        )
        .unwrap()
    }

    #[test]
    fn confusion_matrix_single_qubit() {
        let cm = ConfusionModel::new(vec![0.9], vec![0.8]).unwrap();
        let p = ProbVector::simplex(vec![1.0, 0.0]).unwrap();
        let out = apply_confusion(&p, &cm).unwrap();
        assert!((out.values[0] - 0.9).abs() < 1e-15);
        assert!((out.values[1] - 0.1).abs() < 1e-15);
        let back = correct_readout(&out, &cm).unwrap();
        assert!((back.values[0] - 1.0).abs() < 1e-15);
        assert_eq!(back.tag, ProbTag::Quasi);
        assert!(matches!(
            ConfusionModel::new(vec![0.5], vec![0.5]),
            Err(Error::SingularConfusion(0))
        ));
        assert!(ConfusionModel::new(vec![1.2], vec![0.5]).is_err());
    }

    #[test]
    fn identity_confusion_is_noop() {
        let p = ProbVector::simplex(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let cm = ConfusionModel::identity(2);
        assert_eq!(apply_confusion(&p, &cm).unwrap().values, p.values);
        assert_eq!(correct_readout(&p, &cm).unwrap().values, p.values);
    }

    #[test]
    fn simplex_projection_closed_forms() {
        let q = ProbVector {
            values: vec![1.1, -0.1],
            tag: ProbTag::Quasi,
        };
        let p = mle_project(&q);
        assert_eq!(p.values, vec![1.0, 0.0]);
        let valid = ProbVector::simplex(vec![0.25, 0.25, 0.5, 0.0]).unwrap();
        assert_eq!(mle_project(&valid).values, valid.values);
        let odd = ProbVector {
            values: vec![0.6, 0.6, -0.1, -0.1],
            tag: ProbTag::Quasi,
        };
        for (a, b) in mle_project(&odd).values.iter().zip([0.5, 0.5, 0.0, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_pure_basis_state() {
        let t = sample(&PureState::basis_state(3, 0).unwrap(), 1000, 9).unwrap();
        assert_eq!(t.counts.len(), 1);
        assert_eq!(t.counts[&0], 1000);
    }

    #[test]
    fn sampling_is_reproducible_and_binomial() {
        let a = sample(&ghz2(), 1_000_000, 11).unwrap();
        let b = sample(&ghz2(), 1_000_000, 11).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.counts.len(), 2);
        let f0 = a.counts[&0] as f64 / 1e6;
        assert!((f0 - 0.5).abs() < 0.0015);
    }

    #[test]
    fn sampled_confusion_matches_exact_forward_model() {
        let cm = ConfusionModel::new(vec![0.93, 0.9], vec![0.88, 0.85]).unwrap();
        let p = ProbVector::from_state(&ghz2()).unwrap();
        let exact = apply_confusion(&p, &cm).unwrap();
        let log = sample_log(&p, 400_000, 5, 0, Some(&cm)).unwrap();
        let freq = ProbVector::from_counts(&CountTable::from_log(2, 5, log));
        for (a, b) in exact.values.iter().zip(&freq.values) {
            assert!((a - b).abs() < 4e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn count_table_text_round_trip() {
        let t = sample(&ghz2(), 500, 77).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("# n=2 shots=500 seed=77\n"));
        assert!(text.contains("\n11 "));
        let back = CountTable::from_text(&text).unwrap();
        assert_eq!(back.counts, t.counts);
        assert!(CountTable::from_text("# n=2 shots=5 seed=0\n00 4\n").is_err());
        assert_eq!(bitstring(0b001, 3), "100");
    }

    #[test]
    fn parity_sums() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        assert_eq!(parity_from_probs(&ProbVector::simplex(v).unwrap()), 1.0);
        assert_eq!(parity_from_probs(&ProbVector::simplex(vec![0.125; 8]).unwrap()), 0.0);
    }

    #[test]
    fn subgroups() {
        let log = vec![0u32; 100];
        let (m, s) = subgroup_errorbars(&log, 2, 30, None).unwrap();
        assert_eq!((m, s), (1.0, 0.0));
        assert!(subgroup_errorbars(&log, 2, 60, None).is_err());
        assert_eq!(subgroup_parities(&vec![0u32; 480], 4, 80, None).unwrap().len(), 6);
    }
}
