//! exp(−iHt)·x for sparse Hermitian H by restarted Lanczos with full
//! reorthogonalization and a posteriori step-size control, plus a dense
//! eigendecomposition fallback for small operators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm, scale, CsrMatrix};

/// Largest operator dimension handled by the dense fallback.
pub const DENSE_FALLBACK_DIM: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    /// Relative 2-norm error allowed over the whole interval.
    pub tol: f64,
    /// Krylov subspace dimension per step.
    pub max_dim: usize,
    /// Step budget before giving up.
    pub max_steps: usize,
    /// Largest tolerated change of the vector norm within one step.
    pub norm_drift: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_dim: 30,
            max_steps: 20_000,
            norm_drift: 1e-10,
        }
    }
}

/// Diagnostics of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub tau: f64,
    pub subspace_dim: usize,
    pub error_estimate: f64,
    pub norm_drift: f64,
}

struct Lanczos {
    basis: Vec<Vec<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// β_m, the coupling out of the subspace; zero on breakdown.
    residual: f64,
}

fn lanczos(h: &CsrMatrix, v0: Vec<C64>, m: usize) -> Lanczos {
    let scale_h = h.norm_bound().max(f64::MIN_POSITIVE);
    let mut basis = vec![v0];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); h.dim()];
    loop {
        let j = basis.len() - 1;
        h.matvec(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm(&w);
        if b <= 1e-13 * scale_h || basis.len() == m {
            return Lanczos {
                basis,
                alpha,
                beta,
                residual: if b <= 1e-13 * scale_h { 0.0 } else { b },
            };
        }
        beta.push(b);
        let mut next = w.clone();
        scale(C64::new(1.0 / b, 0.0), &mut next);
        basis.push(next);
    }
}

/// Eigen-decomposed tridiagonal projection.
struct Projected {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl Projected {
    fn new(alpha: &[f64], beta: &[f64]) -> Self {
        let m = alpha.len();
        let t = DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    /// exp(−iTτ)·e₁.
    fn propagate_first(&self, tau: f64) -> Vec<C64> {
        let m = self.values.len();
        let w: Vec<C64> = (0..m)
            .map(|i| C64::from_polar(self.vectors[(0, i)], -self.values[i] * tau))
            .collect();
        (0..m)
            .map(|r| (0..m).map(|i| w[i] * self.vectors[(r, i)]).sum())
            .collect()
    }
}

/// exp(−iHt)·x, t ≥ 0 in the operator's time unit.
pub fn expm_multiply(
    h: &CsrMatrix,
    x: &[C64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, Vec<StepRecord>)> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("propagation time {t} must be finite and >= 0")));
    }
    if x.len() != h.dim() {
        return Err(Error::LengthMismatch {
            expected: h.dim(),
            got: x.len(),
        });
    }
    let mut v = x.to_vec();
    let mut records = Vec::new();
    if t == 0.0 {
        return Ok((v, records));
    }
    let m = opts.max_dim.clamp(2, h.dim().max(2)).min(h.dim());
    let mut elapsed = 0.0;
    let mut tau = t;
    while elapsed < t {
        if records.len() >= opts.max_steps {
            return Err(Error::NonConvergence(format!(
                "step budget {} exhausted at t = {elapsed} of {t}",
                opts.max_steps
            )));
        }
        let beta0 = norm(&v);
        if beta0 == 0.0 {
            return Ok((v, records));
        }
        let mut v0 = v.clone();
        scale(C64::new(1.0 / beta0, 0.0), &mut v0);
        let k = lanczos(h, v0, m);
        let proj = Projected::new(&k.alpha, &k.beta);
        let remaining = t - elapsed;
        tau = if k.residual == 0.0 {
            remaining
        } else {
            tau.min(remaining)
        };
        let floor = t * 1e-14;
        let (y, err) = loop {
            let y = proj.propagate_first(tau);
            let err = k.residual * y.last().map_or(0.0, |c| c.norm());
            let allowance = opts.tol * tau / t;
            let drift = (y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
            if err <= allowance && drift < opts.norm_drift {
                break (y, err);
            }
            tau *= 0.5;
            if tau < floor {
                return Err(Error::NonConvergence(format!(
                    "step size underflow at t = {elapsed} of {t}"
                )));
            }
        };
        let mut next = vec![C64::new(0.0, 0.0); v.len()];
        for (coef, b) in y.iter().zip(&k.basis) {
            axpy(coef * beta0, b, &mut next);
        }
        let drift = (norm(&next) - beta0).abs() / beta0;
        if drift >= opts.norm_drift {
            tau *= 0.5;
            if tau < floor {
                return Err(Error::NonConvergence(format!(
                    "norm drift {drift:.2e} persists at t = {elapsed} of {t}"
                )));
            }
            continue;
        }
        v = next;
        records.push(StepRecord {
            tau,
            subspace_dim: k.basis.len(),
            error_estimate: err,
            norm_drift: drift,
        });
        elapsed += tau;
        if t - elapsed <= floor {
            break;
        }
        tau *= 2.0;
    }
    Ok((v, records))
}

/// exp(−iHt)·x through a full Hermitian eigendecomposition.
pub fn expm_multiply_dense(h: &CsrMatrix, x: &[C64], t: f64) -> Result<Vec<C64>> {
    if h.dim() > DENSE_FALLBACK_DIM {
        return Err(Error::Budget(format!(
            "dense propagation limited to dimension {DENSE_FALLBACK_DIM}, got {}",
            h.dim()
        )));
    }
    let eig = h.to_dense().symmetric_eigen();
    let u = eig.eigenvectors;
    let coeffs = u.adjoint() * DVector::from_column_slice(x);
    let phased = DVector::from_iterator(
        coeffs.len(),
        coeffs
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
    );
    Ok((u * phased).iter().copied().collect())
}

/// Krylov propagation with the dense path as a fallback when the iteration
/// does not converge and the operator is small enough.
pub fn propagate(
    h: &CsrMatrix,
    x: &[C64],
    t: f64,
    opts: &KrylovOptions,
) -> Result<(Vec<C64>, Vec<StepRecord>, bool)> {
    match expm_multiply(h, x, t, opts) {
        Ok((v, rec)) => Ok((v, rec, false)),
        Err(Error::NonConvergence(_)) if h.dim() <= DENSE_FALLBACK_DIM => {
            Ok((expm_multiply_dense(h, x, t)?, Vec::new(), true))
        }
        Err(e) => Err(e),
    }
}
