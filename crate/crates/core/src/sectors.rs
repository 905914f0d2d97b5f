//! Excitation-number bookkeeping: binomial coefficients and the split of the
//! 2^N product basis into fixed-weight sectors.

use statrs::function::gamma::ln_gamma;

/// C(n, k) through ln Γ, rounded while the result is exactly representable.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    if k == 0 || k == n {
        return 1.0;
    }
    let ln = ln_binomial(n, k);
    let v = ln.exp();
    if v < 9.0e15 {
        v.round()
    } else {
        v
    }
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// √C(n,k)·c^{n−k}·s^k for c, s ≥ 0, exact-rounded binomials where they fit
/// and a log-space evaluation beyond.
pub fn binomial_weight(n: usize, k: usize, c: f64, s: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    if (k > 0 && s == 0.0) || (k < n && c == 0.0) {
        return 0.0;
    }
    let b = binomial(n, k);
    if b < 9.0e15 {
        let direct = b.sqrt() * c.powi((n - k) as i32) * s.powi(k as i32);
        if direct.is_normal() {
            return direct;
        }
    }
    let mut l = 0.5 * ln_binomial(n, k);
    if k < n {
        l += (n - k) as f64 * c.ln();
    }
    if k > 0 {
        l += k as f64 * s.ln();
    }
    l.exp()
}

/// Members of every weight-k sector of an N-qubit register, in increasing
/// bitstring order, plus the inverse map from bitstring to in-sector position.
#[derive(Debug, Clone)]
pub struct SectorIndex {
    n: usize,
    members: Vec<Vec<u32>>,
    position: Vec<u32>,
}

impl SectorIndex {
    pub fn new(n: usize) -> Self {
        assert!(n <= 24, "sector index limited to 24 qubits");
        let dim = 1usize << n;
        let mut members: Vec<Vec<u32>> = (0..=n)
            .map(|k| Vec::with_capacity(binomial(n, k) as usize))
            .collect();
        let mut position = vec![0u32; dim];
        for x in 0..dim as u32 {
            let w = x.count_ones() as usize;
            position[x as usize] = members[w].len() as u32;
            members[w].push(x);
        }
        Self {
            n,
            members,
            position,
        }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn sector(&self, k: usize) -> &[u32] {
        &self.members[k]
    }

    pub fn position(&self, x: u32) -> usize {
        self.position[x as usize] as usize
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_match_pascal() {
        let mut row = vec![1u64];
        for n in 1..=60usize {
            let mut next = vec![1u64; n + 1];
            for k in 1..n {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            if n <= 40 {
                for k in 0..=n {
                    assert_eq!(binomial(n, k), row[k] as f64, "C({n},{k})");
                }
            }
        }
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn binomial_weights_stay_finite() {
        assert_eq!(binomial_weight(4, 0, 1.0, 0.0), 1.0);
        assert_eq!(binomial_weight(4, 2, 1.0, 0.0), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let total: f64 = (0..=5000).map(|k| binomial_weight(5000, k, h, h).powi(2)).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sectors_partition_the_register() {
        let idx = SectorIndex::new(6);
        let dims = idx.sector_dims();
        assert_eq!(dims, vec![1, 6, 15, 20, 15, 6, 1]);
        for k in 0..=6 {
            for (p, &x) in idx.sector(k).iter().enumerate() {
                assert_eq!(x.count_ones() as usize, k);
                assert_eq!(idx.position(x), p);
            }
        }
    }
}
