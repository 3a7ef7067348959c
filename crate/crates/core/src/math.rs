//! Shared numeric helpers: stable log-sum-exp, compensated summation,
//! small symmetric-matrix utilities used by the fitting routines, and the
//! two integer mixers behind every derived seed in the crate.

use nalgebra::{DMatrix, DVector};

/// FNV-1a over a byte string, the stable name/stream hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One SplitMix64 step: adds the golden-ratio increment and applies the
/// avalanche finalizer. Turns structured counter values into well-mixed
/// 64-bit seeds.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Serializes a float with 17 significant digits, enough for an exact f64
/// round trip. Every file the crate emits writes floats through this.
pub fn fmt_g17(value: f64) -> String {
    format!("{value:.16e}")
}

/// `log(sum(exp(x)))` computed with the usual max shift so that large
/// magnitudes cannot overflow.
pub fn logsumexp(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    let mut m = f64::NEG_INFINITY;
    for &x in xs {
        if x > m {
            m = x;
        }
    }
    if !m.is_finite() {
        return m;
    }
    let mut s = 0.0;
    for &x in xs {
        s += (x - m).exp();
    }
    m + s.ln()
}

/// Kahan compensated accumulator. Likelihood totals are summed in fixed
/// index order with this so that aggregates are reproducible to well below
/// the tolerances the result checks use.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Replaces `m` by `(m + m^T) / 2`, removing the round-off asymmetry that
/// accumulating outer products leaves behind.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Largest absolute deviation from symmetry, relative to `1 + max |entry|`.
pub fn symmetry_residual(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            scale = scale.max(m[(i, j)].abs());
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / (1.0 + scale)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Eigendecomposes a symmetric matrix and raises every eigenvalue below
/// `floor` up to `floor`, then reassembles. Returns the repaired matrix and
/// whether any eigenvalue was touched.
pub fn clamp_eigenvalues(m: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, bool) {
    let mut eig = m.clone().symmetric_eigen();
    let mut touched = false;
    for v in eig.eigenvalues.iter_mut() {
        if *v < floor {
            *v = floor;
            touched = true;
        }
    }
    if !touched {
        return (m.clone(), false);
    }
    let mut out = &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues) * eig.eigenvectors.transpose();
    symmetrize(&mut out);
    (out, true)
}

/// Rank-one update `acc += w * v v^T`, touching only the upper triangle;
/// callers symmetrize once at the end.
pub fn add_scaled_outer(acc: &mut DMatrix<f64>, w: f64, v: &DVector<f64>) {
    let d = v.len();
    for i in 0..d {
        let wi = w * v[i];
        for j in i..d {
            acc[(i, j)] += wi * v[j];
        }
    }
}

/// Copies the upper triangle onto the lower one after a series of
/// [`add_scaled_outer`] updates.
pub fn mirror_upper(acc: &mut DMatrix<f64>) {
    let n = acc.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            acc[(j, i)] = acc[(i, j)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hashers_match_published_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(mix64(0), 0xe220_a839_7b1d_cdaf);
        // Distinct small inputs land far apart.
        assert_ne!(mix64(1), mix64(2));
    }

    #[test]
    fn logsumexp_matches_naive_in_safe_range() {
        let xs = [0.5, 2.0, -1.0];
        let naive = xs.iter().copied().map(f64::exp).sum::<f64>().ln();
        assert_relative_eq!(logsumexp(&xs), naive, max_relative = 1e-15);
    }

    #[test]
    fn logsumexp_survives_large_magnitudes() {
        let xs = [1234.0, 1232.0];
        assert_relative_eq!(logsumexp(&xs), 1232.0 + (2f64.exp() + 1.0).ln(), max_relative = 1e-15);
        let xs = [-1234.0, -1232.0];
        assert_relative_eq!(logsumexp(&xs), -1232.0 + (1.0 + (-2f64).exp()).ln(), max_relative = 1e-15);
    }

    #[test]
    fn logsumexp_empty_and_degenerate() {
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert_eq!(logsumexp(&[3.0]), 3.0);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        assert_relative_eq!(acc.value(), 1.0 + 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn eigenvalue_clamp_repairs_indefinite_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        let (fixed, touched) = clamp_eigenvalues(&m, 1e-3);
        assert!(touched);
        assert!(min_symmetric_eigenvalue(&fixed) >= 1e-3 - 1e-12);
        // untouched directions stay put
        assert_relative_eq!(fixed[(0, 0)], 1.0, max_relative = 1e-12);
    }

    #[test]
    fn eigenvalue_clamp_leaves_pd_matrix_alone() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let (fixed, touched) = clamp_eigenvalues(&m, 1e-9);
        assert!(!touched);
        assert_eq!(fixed, m);
    }

    #[test]
    fn outer_product_accumulation_matches_direct() {
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let mut acc = DMatrix::zeros(3, 3);
        add_scaled_outer(&mut acc, 2.0, &v);
        mirror_upper(&mut acc);
        let direct = 2.0 * &v * v.transpose();
        assert_relative_eq!((acc - direct).abs().max(), 0.0, epsilon = 1e-14);
    }
}
