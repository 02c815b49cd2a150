//! Dense complex kernels shared by the simulator and optimizer.

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `a · b` through the blocked complex GEMM kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: `Complex64` is `repr(C)` with layout `[f64; 2]`; the pointers
    // and column-major strides describe the full, non-overlapping buffers of
    // `a`, `b` and `c`.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// `a · b†`.
pub fn matmul_adjoint_right(a: &CMatrix, b: &CMatrix) -> CMatrix {
    matmul(a, &b.adjoint())
}

/// `‖a - b‖_F` without allocating the difference.
pub fn frobenius_distance_unchecked(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `‖U U† - I‖_F`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let p = matmul_adjoint_right(u, u);
    let mut acc = 0.0;
    for c in 0..p.ncols() {
        for r in 0..p.nrows() {
            let target = if r == c { ONE } else { ZERO };
            acc += (p[(r, c)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Largest entry of `|A - A†|`.
pub fn hermitian_deviation(a: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..a.ncols() {
        for r in 0..=c.min(a.nrows().saturating_sub(1)) {
            worst = worst.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Applies a 2x2 gate on bit position `bit` (0 = least significant) from the left.
pub fn apply_one_qubit_left(m: &mut CMatrix, bit: usize, g: &[[Complex64; 2]; 2]) {
    let stride = 1usize << bit;
    let rows = m.nrows();
    for c in 0..m.ncols() {
        let col = &mut m.column_mut(c);
        let mut base = 0;
        while base < rows {
            for r0 in base..base + stride {
                let r1 = r0 + stride;
                let (x0, x1) = (col[r0], col[r1]);
                col[r0] = g[0][0] * x0 + g[0][1] * x1;
                col[r1] = g[1][0] * x0 + g[1][1] * x1;
            }
            base += 2 * stride;
        }
    }
}

/// Right-multiplies `m` by a 2x2 gate on bit position `bit`.
pub fn apply_one_qubit_right(m: &mut CMatrix, bit: usize, g: &[[Complex64; 2]; 2]) {
    let stride = 1usize << bit;
    let cols = m.ncols();
    let rows = m.nrows();
    let mut base = 0;
    while base < cols {
        for c0 in base..base + stride {
            let c1 = c0 + stride;
            for r in 0..rows {
                let (x0, x1) = (m[(r, c0)], m[(r, c1)]);
                m[(r, c0)] = x0 * g[0][0] + x1 * g[1][0];
                m[(r, c1)] = x0 * g[0][1] + x1 * g[1][1];
            }
        }
        base += 2 * stride;
    }
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = ZERO;
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

/// Applies a 4x4 gate on bit positions `(hi, lo)` from the left. The gate's
/// basis is `|b_hi b_lo>`, with `b_hi` the more significant index.
pub fn apply_two_qubit_left(m: &mut CMatrix, hi: usize, lo: usize, g: &CMatrix) {
    debug_assert!(hi != lo);
    let (mh, ml) = (1usize << hi, 1usize << lo);
    let rows = m.nrows();
    let mut x = [ZERO; 4];
    for c in 0..m.ncols() {
        let mut col = m.column_mut(c);
        for r in 0..rows {
            if r & mh != 0 || r & ml != 0 {
                continue;
            }
            let idx = [r, r | ml, r | mh, r | mh | ml];
            for k in 0..4 {
                x[k] = col[idx[k]];
            }
            for (a, &ra) in idx.iter().enumerate() {
                let mut acc = ZERO;
                for (b, xb) in x.iter().enumerate() {
                    acc += g[(a, b)] * xb;
                }
                col[ra] = acc;
            }
        }
    }
}

/// `⊗_q g_q` with `gates[0]` as the leftmost (most significant) factor.
pub fn kron_layer(gates: &[[[Complex64; 2]; 2]]) -> CMatrix {
    let n = gates.len();
    let dim = 1usize << n;
    CMatrix::from_fn(dim, dim, |r, c| {
        let mut acc = ONE;
        for (q, g) in gates.iter().enumerate() {
            let bit = n - 1 - q;
            acc *= g[(r >> bit) & 1][(c >> bit) & 1];
            if acc == ZERO {
                break;
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(m: usize, n: usize, seed: f64) -> CMatrix {
        CMatrix::from_fn(m, n, |r, c| {
            let x = (r * 7 + c * 13) as f64 + seed;
            Complex64::new(x.sin(), (1.3 * x).cos())
        })
    }

    #[test]
    fn gemm_matches_naive_product() {
        let a = sample(5, 7, 0.1);
        let b = sample(7, 3, 0.7);
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-12);
        let c = sample(4, 7, 0.3);
        assert!((matmul_adjoint_right(&a, &c) - &a * c.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn trace_of_product_matches_dense() {
        let a = sample(6, 4, 0.2);
        let b = sample(4, 6, 1.1);
        assert!((trace_of_product(&a, &b) - (&a * &b).trace()).norm() < 1e-12);
    }

    #[test]
    fn local_gates_match_kronecker_products() {
        let n = 3;
        let h = [
            [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
            [Complex64::new(0.0, 0.8), Complex64::new(0.6, 0.0)],
        ];
        let id = [[ONE, ZERO], [ZERO, ONE]];
        let m = sample(8, 8, 0.5);
        for q in 0..n {
            let mut layer = vec![id; n];
            layer[q] = h;
            let mut applied = m.clone();
            apply_one_qubit_left(&mut applied, n - 1 - q, &h);
            assert!((applied - kron_layer(&layer) * &m).norm() < 1e-12);
        }

        for q in 0..n {
            let mut layer = vec![id; n];
            layer[q] = h;
            let mut applied = m.clone();
            apply_one_qubit_right(&mut applied, n - 1 - q, &h);
            assert!((applied - &m * kron_layer(&layer)).norm() < 1e-12);
        }

        let g = sample(4, 4, 1.9);
        // Gate on qubits 1 and 3 (bits 2 and 0) embedded by explicit index maps.
        let full = CMatrix::from_fn(8, 8, |r, c| {
            if (r >> 1) & 1 != (c >> 1) & 1 {
                return ZERO;
            }
            let a = ((r >> 2) & 1) << 1 | (r & 1);
            let b = ((c >> 2) & 1) << 1 | (c & 1);
            g[(a, b)]
        });
        let mut applied = m.clone();
        apply_two_qubit_left(&mut applied, 2, 0, &g);
        assert!((applied - full * &m).norm() < 1e-12);
    }
}
