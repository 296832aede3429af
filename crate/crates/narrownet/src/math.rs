//! Small numerical helpers: deterministic summation, integer powers, grid
//! walking, seeded sampling and a dense least-squares solver.
//!
//! Everything here is deterministic given its inputs (and seed, where one
//! exists); the verification harness depends on that.

use alloc::vec;
use alloc::vec::Vec;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Absolute value without `std` (clears the sign bit).
#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Square root through `libm` so results match across builds.
#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Pairwise tree summation. Deterministic, with error growth O(log n)
/// instead of O(n); used for every reduction that feeds a reported number.
pub fn tree_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
        }
    }
}

/// Integer power by repeated multiplication, left to right. Deterministic
/// and exact for small exponents of exact inputs.
pub fn powi(x: f64, e: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// `n` evenly spaced points covering `[lo, hi]` inclusive. `n >= 2`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect()
}

/// Walks the tensor grid with `per_dim` points along each axis of the box
/// given by `lower`/`upper`, calling `f` with each point. Iteration order
/// is row-major (last axis fastest) and the point buffer is reused.
pub fn for_each_grid_point(
    lower: &[f64],
    upper: &[f64],
    per_dim: usize,
    mut f: impl FnMut(&[f64]),
) {
    let dim = lower.len();
    debug_assert_eq!(dim, upper.len());
    debug_assert!(per_dim >= 2);
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|i| linspace(lower[i], upper[i], per_dim))
        .collect();
    let mut idx = vec![0usize; dim];
    let mut point = vec![0.0f64; dim];
    let total = per_dim.pow(dim as u32);
    for _ in 0..total {
        for (d, &i) in idx.iter().enumerate() {
            point[d] = axes[d][i];
        }
        f(&point);
        for d in (0..dim).rev() {
            idx[d] += 1;
            if idx[d] < per_dim {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Deterministic RNG used for sampling and random features.
pub type Rng = ChaCha8Rng;

/// A fresh deterministic RNG for the given seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample in [0, 1) with 53 random bits.
#[inline]
pub fn uniform01(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Uniform sample in [lo, hi).
#[inline]
pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform01(rng)
}

/// Fills `point` with a uniform sample from the box `lower`/`upper`.
pub fn sample_box(rng: &mut Rng, lower: &[f64], upper: &[f64], point: &mut [f64]) {
    for d in 0..lower.len() {
        point[d] = uniform(rng, lower[d], upper[d]);
    }
}

/// Result of [`lstsq`].
pub struct LstSq {
    /// Minimising coefficients, length = number of columns.
    pub coeffs: Vec<f64>,
    /// Euclidean norm of the residual `A c - y`.
    pub residual: f64,
    /// True when the triangular factor was numerically rank deficient;
    /// affected coefficients are set to zero rather than failing.
    pub rank_warning: bool,
}

/// Dense least squares `min ||A c - y||_2` by Householder QR.
///
/// `a` is column-major with `rows >= cols`; both `a` and `y` are consumed
/// as scratch. Deterministic; no pivoting (a tiny diagonal only raises
/// `rank_warning`).
pub fn lstsq(a: &mut [f64], rows: usize, cols: usize, y: &mut [f64]) -> LstSq {
    debug_assert_eq!(a.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    debug_assert!(rows >= cols);

    // Factor in place: R on and above the diagonal, Householder vectors below.
    let mut diag = vec![0.0f64; cols];
    for k in 0..cols {
        let col = k * rows;
        let norm2: f64 = a[col + k..col + rows].iter().map(|v| v * v).sum();
        let mut alpha = sqrt(norm2);
        if alpha == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        if a[col + k] > 0.0 {
            alpha = -alpha;
        }
        a[col + k] -= alpha;
        let vnorm2: f64 = a[col + k..col + rows].iter().map(|v| v * v).sum();
        if vnorm2 == 0.0 {
            diag[k] = alpha;
            continue;
        }
        let beta = 2.0 / vnorm2;
        for j in k + 1..cols {
            let cj = j * rows;
            let dot: f64 = (k..rows).map(|i| a[col + i] * a[cj + i]).sum();
            let scale = beta * dot;
            for i in k..rows {
                a[cj + i] -= scale * a[col + i];
            }
        }
        let dot: f64 = (k..rows).map(|i| a[col + i] * y[i]).sum();
        let scale = beta * dot;
        for i in k..rows {
            y[i] -= scale * a[col + i];
        }
        diag[k] = alpha;
    }

    let max_diag = diag.iter().fold(0.0f64, |m, &d| m.max(abs(d)));
    let tiny = 1e-12 * max_diag.max(1e-300);
    let mut rank_warning = false;

    // Back substitution on R c = (Q^T y)[..cols].
    let mut coeffs = vec![0.0f64; cols];
    for k in (0..cols).rev() {
        let mut rhs = y[k];
        for j in k + 1..cols {
            rhs -= a[j * rows + k] * coeffs[j];
        }
        if abs(diag[k]) <= tiny {
            coeffs[k] = 0.0;
            rank_warning = true;
        } else {
            coeffs[k] = rhs / diag[k];
        }
    }

    let residual2: f64 = y[cols..].iter().map(|v| v * v).sum();
    LstSq {
        coeffs,
        residual: sqrt(residual2),
        rank_warning,
    }
}
